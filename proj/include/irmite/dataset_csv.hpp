#pragma once

// Dataset CSV: header x1,...,xd,t,y_f[,y0,y1,ite]; reals printed with 17
// significant digits so a write/read cycle is lossless.

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "irmite/datagen.hpp"
#include "irmite/error.hpp"

namespace irmite {

inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

inline double parse_real(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw Error(ErrorCode::SchemaError, "not a number: '" + s + "'");
  return v;
}

inline void write_dataset_csv(std::ostream& os, const Dataset& ds) {
  ds.validate();
  const Eigen::Index d = ds.dim();
  for (Eigen::Index j = 0; j < d; ++j) os << 'x' << (j + 1) << ',';
  os << "t,y_f";
  if (ds.oracle) os << ",y0,y1,ite";
  os << '\n';
  for (Eigen::Index i = 0; i < ds.x.rows(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j) os << format_real(ds.x(i, j)) << ',';
    os << ds.t[static_cast<std::size_t>(i)] << ',' << format_real(ds.y_f(i));
    if (ds.oracle)
      os << ',' << format_real(ds.oracle->y0(i)) << ',' << format_real(ds.oracle->y1(i)) << ','
         << format_real(ds.oracle->ite(i));
    os << '\n';
  }
}

inline std::string dataset_to_csv(const Dataset& ds) {
  std::ostringstream os;
  write_dataset_csv(os, ds);
  return os.str();
}

/// Oracle columns are optional; when present all three must be.
inline Dataset read_dataset_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::SchemaError, "dataset CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);

  std::size_t d = 0;
  while (d < header.size() && header[d] == "x" + std::to_string(d + 1)) ++d;
  if (d == 0) throw Error(ErrorCode::SchemaError, "dataset CSV needs at least one feature column x1");
  const std::size_t rest = header.size() - d;
  const bool has_oracle = rest == 5;
  if (rest != 2 && rest != 5) throw Error(ErrorCode::SchemaError, "unexpected dataset CSV header");
  if (header[d] != "t" || header[d + 1] != "y_f" ||
      (has_oracle && (header[d + 2] != "y0" || header[d + 3] != "y1" || header[d + 4] != "ite")))
    throw Error(ErrorCode::SchemaError, "dataset CSV header must be x1..xd,t,y_f[,y0,y1,ite]");

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw Error(ErrorCode::SchemaError, "wrong field count on line " + std::to_string(line_no));
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(parse_real(f));
    rows.push_back(std::move(row));
  }

  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto di = static_cast<Eigen::Index>(d);
  Dataset ds;
  ds.x.resize(n, di);
  ds.y_f.resize(n);
  ds.t.resize(rows.size());
  if (has_oracle) ds.oracle = PotentialOutcomes{Vector(n), Vector(n), Vector(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < di; ++j) ds.x(i, j) = r[static_cast<std::size_t>(j)];
    const double t = r[d];
    if (t != 0.0 && t != 1.0) throw Error(ErrorCode::SchemaError, "treatment must be 0 or 1");
    ds.t[static_cast<std::size_t>(i)] = static_cast<int>(t);
    ds.y_f(i) = r[d + 1];
    if (has_oracle) {
      ds.oracle->y0(i) = r[d + 2];
      ds.oracle->y1(i) = r[d + 3];
      ds.oracle->ite(i) = r[d + 4];
    }
  }
  return ds;
}

}  // namespace irmite
