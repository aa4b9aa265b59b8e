"""Functional average dose-response estimation."""

from ._core import (
    AdrfFit,
    Dataset,
    FadrfError,
    FpcaModel,
    TuningResult,
    fit,
    fpca,
    ise,
    load_dataset,
    parse_fit,
    quadrature_weights,
    select_tuning,
    simulate,
    uniform_grid,
    weights,
)

__all__ = [
    "AdrfFit",
    "Dataset",
    "FadrfError",
    "FpcaModel",
    "TuningResult",
    "fit",
    "fpca",
    "ise",
    "load_dataset",
    "parse_fit",
    "quadrature_weights",
    "select_tuning",
    "simulate",
    "uniform_grid",
    "weights",
]
