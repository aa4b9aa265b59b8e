#include "fadrf/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "fadrf/errors.hpp"

namespace fadrf {

namespace {

std::string location(const std::string& source, int line, int column = 0) {
  std::string out = source + ":" + std::to_string(line);
  if (column > 0) out += ":" + std::to_string(column);
  return out;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string unquote(std::string_view s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return std::string(s);
}

double parse_number(std::string_view field, const std::string& where) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (field.empty() || ec != std::errc() || ptr != last) {
    throw Error(ErrorCategory::parse, where + ": '" + std::string(field) + "' is not a number");
  }
  if (!std::isfinite(v)) {
    throw Error(ErrorCategory::data, where + ": non-finite value '" + std::string(field) + "'");
  }
  return v;
}

int parse_int(std::string_view field, const std::string& where) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
    throw Error(ErrorCategory::parse, where + ": '" + std::string(field) + "' is not an integer");
  }
  return v;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::io, "cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCategory::io, "cannot open '" + path + "' for writing");
  return out;
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw Error(ErrorCategory::io, "failed writing '" + path + "'");
}

/// Non-blank lines with their 1-based line numbers.
std::vector<std::pair<int, std::string>> content_lines(std::istream& in) {
  std::vector<std::pair<int, std::string>> lines;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!trim(line).empty()) lines.emplace_back(number, line);
  }
  return lines;
}

std::vector<double> parse_row(const std::string& line, int number, const std::string& source) {
  std::vector<double> out;
  int column = 0;
  for (std::string_view field : split(line, ',')) {
    ++column;
    out.push_back(parse_number(field, location(source, number, column)));
  }
  return out;
}

}  // namespace

CurveSet read_curves(std::istream& in, const std::string& source) {
  const auto lines = content_lines(in);
  if (lines.empty()) throw Error(ErrorCategory::empty_input, source + ": no grid row");
  const std::vector<double> grid_row = parse_row(lines[0].second, lines[0].first, source);
  const GridPtr grid = std::make_shared<const Grid>(
      Eigen::Map<const Eigen::VectorXd>(grid_row.data(), static_cast<Eigen::Index>(grid_row.size())));
  if (lines.size() < 2) throw Error(ErrorCategory::empty_input, source + ": no curves after the grid row");
  const auto m = static_cast<std::size_t>(grid->size());
  Eigen::MatrixXd values(static_cast<Eigen::Index>(lines.size() - 1), grid->size());
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const std::vector<double> row = parse_row(lines[r].second, lines[r].first, source);
    if (row.size() != m) {
      throw Error(ErrorCategory::parse, location(source, lines[r].first) + ": expected " +
                                            std::to_string(m) + " values, found " +
                                            std::to_string(row.size()));
    }
    for (std::size_t t = 0; t < m; ++t) values(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(t)) = row[t];
  }
  return CurveSet(grid, std::move(values));
}

CurveSet read_curves(const std::string& path) {
  std::ifstream in = open_in(path);
  return read_curves(in, path);
}

void write_curves(const CurveSet& curves, std::ostream& out) {
  const Eigen::VectorXd& t = curves.grid()->points();
  for (Eigen::Index j = 0; j < t.size(); ++j) out << (j ? "," : "") << num(t[j]);
  out << '\n';
  const Eigen::MatrixXd& v = curves.values();
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    for (Eigen::Index j = 0; j < v.cols(); ++j) out << (j ? "," : "") << num(v(i, j));
    out << '\n';
  }
}

void write_curves(const CurveSet& curves, const std::string& path) {
  std::ofstream out = open_out(path);
  write_curves(curves, out);
  finish(out, path);
}

Dataset load_dataset(const DatasetFiles& files) {
  CurveSet z = read_curves(files.functional_path);

  std::ifstream in = open_in(files.tabular_path);
  const auto lines = content_lines(in);
  const std::string& src = files.tabular_path;
  if (lines.empty()) throw Error(ErrorCategory::empty_input, src + ": missing header row");
  std::vector<std::string> header;
  for (std::string_view h : split(lines[0].second, ',')) header.push_back(unquote(h));
  auto column_of = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw Error(ErrorCategory::data, src + ": column '" + name + "' not found in header");
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t y_col = column_of(files.outcome);
  std::vector<std::string> names = files.covariates;
  if (names.empty()) {
    for (const std::string& h : header)
      if (h != files.outcome) names.push_back(h);
    if (names.empty()) throw Error(ErrorCategory::data, src + ": no covariate columns");
  }
  std::vector<std::size_t> x_cols;
  for (const std::string& name : names) x_cols.push_back(column_of(name));

  const auto n = static_cast<Eigen::Index>(lines.size() - 1);
  if (n != z.count()) {
    throw Error(ErrorCategory::alignment, src + " has " + std::to_string(n) + " data rows but " +
                                              files.functional_path + " has " +
                                              std::to_string(z.count()) + " curves");
  }
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(x_cols.size()));
  Eigen::VectorXd y(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& [number, line] = lines[static_cast<std::size_t>(r + 1)];
    const auto fields = split(line, ',');
    if (fields.size() != header.size()) {
      throw Error(ErrorCategory::parse, location(src, number) + ": expected " +
                                            std::to_string(header.size()) + " fields, found " +
                                            std::to_string(fields.size()));
    }
    auto value = [&](std::size_t c) {
      return parse_number(fields[c], location(src, number, static_cast<int>(c + 1)));
    };
    y[r] = value(y_col);
    for (std::size_t j = 0; j < x_cols.size(); ++j) x(r, static_cast<Eigen::Index>(j)) = value(x_cols[j]);
  }
  return Dataset(std::move(z), std::move(x), std::move(y), std::move(names), files.outcome);
}

void write_dataset(const Dataset& data, const std::string& functional_path,
                   const std::string& tabular_path) {
  write_curves(data.z(), functional_path);
  std::ofstream out = open_out(tabular_path);
  for (const std::string& name : data.covariate_names()) out << name << ',';
  out << data.outcome_name() << '\n';
  for (int i = 0; i < data.size(); ++i) {
    for (int j = 0; j < data.covariates(); ++j) out << num(data.x()(i, j)) << ',';
    out << num(data.y()[i]) << '\n';
  }
  finish(out, tabular_path);
}

std::string format_fit(const AdrfFit& fit) {
  std::ostringstream out;
  out << "fadrf-fit 1\n";
  out << "method " << method_name(fit.method) << '\n';
  out << "a_hat " << num(fit.a_hat) << '\n';
  if (fit.theta_hat) {
    out << "theta_hat";
    for (double v : *fit.theta_hat) out << ' ' << num(v);
    out << '\n';
  }
  out << "q " << fit.tuning.q << '\n';
  if (fit.tuning.h) out << "h " << num(*fit.tuning.h) << '\n';
  if (fit.tuning.k) out << "k " << *fit.tuning.k << '\n';
  if (fit.tuning.rho) out << "rho " << fit.tuning.rho->name() << '\n';
  if (fit.method == Method::outcome_regression || fit.method == Method::doubly_robust) {
    out << "converged " << (fit.converged ? 1 : 0) << '\n';
  }
  out << "b_coeffs";
  for (double v : fit.b_coeffs) out << ' ' << num(v);
  out << '\n';
  const Eigen::VectorXd& t = fit.b_curve.grid()->points();
  const Eigen::VectorXd& b = fit.b_curve.values();
  out << "b_curve " << t.size() << '\n';
  out << "t,value\n";
  for (Eigen::Index j = 0; j < t.size(); ++j) out << num(t[j]) << ',' << num(b[j]) << '\n';
  return out.str();
}

void write_fit(const AdrfFit& fit, const std::string& path) {
  std::ofstream out = open_out(path);
  out << format_fit(fit);
  finish(out, path);
}

AdrfFit parse_fit(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  int number = 0;
  std::map<std::string, std::pair<int, std::vector<std::string>>> fields;
  std::optional<int> curve_points;
  int curve_line = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    std::istringstream words(line);
    std::string key;
    words >> key;
    std::vector<std::string> rest;
    for (std::string w; words >> w;) rest.push_back(w);
    if (!header_seen) {
      if (key != "fadrf-fit" || rest.size() != 1 || rest[0] != "1") {
        throw Error(ErrorCategory::parse, location(source, number) + ": not a fit document");
      }
      header_seen = true;
      continue;
    }
    if (key == "b_curve") {
      if (rest.size() != 1) throw Error(ErrorCategory::parse, location(source, number) + ": b_curve needs a point count");
      curve_points = parse_int(rest[0], location(source, number));
      curve_line = number;
      break;
    }
    fields[key] = {number, std::move(rest)};
  }
  if (!header_seen) throw Error(ErrorCategory::parse, source + ": empty fit document");
  if (!curve_points) throw Error(ErrorCategory::parse, source + ": missing b_curve section");

  auto get = [&](const std::string& key) -> const std::pair<int, std::vector<std::string>>& {
    const auto it = fields.find(key);
    if (it == fields.end()) throw Error(ErrorCategory::parse, source + ": missing '" + key + "'");
    return it->second;
  };
  auto scalar = [&](const std::string& key) {
    const auto& [ln, vals] = get(key);
    if (vals.size() != 1) throw Error(ErrorCategory::parse, location(source, ln) + ": '" + key + "' takes one value");
    return vals[0];
  };
  auto vector_of = [&](const std::string& key) {
    const auto& [ln, vals] = get(key);
    Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t j = 0; j < vals.size(); ++j) {
      v[static_cast<Eigen::Index>(j)] = parse_number(vals[j], location(source, ln, static_cast<int>(j + 2)));
    }
    return v;
  };

  // Curve section: a "t,value" header then exactly curve_points rows.
  if (!std::getline(in, line) || trim(line) != "t,value") {
    throw Error(ErrorCategory::parse, location(source, curve_line + 1) + ": expected 't,value' header");
  }
  ++number;
  Eigen::VectorXd t(*curve_points), b(*curve_points);
  for (int j = 0; j < *curve_points; ++j) {
    if (!std::getline(in, line)) {
      throw Error(ErrorCategory::parse, source + ": b_curve has fewer than " + std::to_string(*curve_points) + " points");
    }
    ++number;
    const auto parts = split(line, ',');
    if (parts.size() != 2) throw Error(ErrorCategory::parse, location(source, number) + ": expected 't,value'");
    t[j] = parse_number(parts[0], location(source, number, 1));
    b[j] = parse_number(parts[1], location(source, number, 2));
  }
  while (std::getline(in, line)) {
    ++number;
    if (!trim(line).empty()) throw Error(ErrorCategory::parse, location(source, number) + ": trailing content");
  }

  const Method method = parse_method(scalar("method"));
  const double a_hat = parse_number(scalar("a_hat"), location(source, get("a_hat").first));
  Eigen::VectorXd coeffs = fields.count("b_coeffs") ? vector_of("b_coeffs") : Eigen::VectorXd();
  AdrfFit fit{method, a_hat, std::move(coeffs),
              FunctionalSample(std::make_shared<const Grid>(std::move(t)), std::move(b)),
              std::nullopt, {}, nullptr, 0, true};
  if (fields.count("theta_hat")) fit.theta_hat = vector_of("theta_hat");
  fit.tuning.q = parse_int(scalar("q"), location(source, get("q").first));
  if (fields.count("h")) fit.tuning.h = parse_number(scalar("h"), location(source, get("h").first));
  if (fields.count("k")) fit.tuning.k = parse_int(scalar("k"), location(source, get("k").first));
  if (fields.count("rho")) fit.tuning.rho = RhoFamily::parse(scalar("rho"));
  if (fields.count("converged")) fit.converged = scalar("converged") == "1";
  return fit;
}

AdrfFit read_fit(const std::string& path) {
  std::ifstream in = open_in(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_fit(buf.str(), path);
}

}  // namespace fadrf
