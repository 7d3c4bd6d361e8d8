#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dpobs/errors.hpp"
#include "dpobs/matrix.hpp"

namespace dpobs {

/// Named plant (A, C) as read from a system file.
struct SystemFile {
  Matrix A;
  Matrix C;
  std::string name;
};

namespace io {

/// Formats a double with 17 significant digits so every value round-trips
/// exactly through text fixtures.
inline std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

/// Minimal deterministic JSON emitter: keys appear in insertion order and
/// numbers go through format_double, which nlohmann's serializer does not
/// guarantee.
class JsonWriter {
 public:
  JsonWriter& begin_object() { return token("{", false); }
  JsonWriter& end_object() { return close("}"); }
  JsonWriter& begin_array() { return token("[", false); }
  JsonWriter& end_array() { return close("]"); }

  JsonWriter& key(const std::string& k) {
    separate();
    out_ << '"' << k << "\":";
    pending_value_ = true;
    return *this;
  }

  JsonWriter& value(double x) { return raw(format_double(x)); }
  JsonWriter& value(long x) { return raw(std::to_string(x)); }
  JsonWriter& value(int x) { return raw(std::to_string(x)); }
  JsonWriter& value(bool b) { return raw(b ? "true" : "false"); }
  JsonWriter& value(const std::string& s) { return raw('"' + s + '"'); }
  JsonWriter& value(const char* s) { return raw('"' + std::string(s) + '"'); }
  JsonWriter& null() { return raw("null"); }

  std::string str() const { return out_.str(); }

 private:
  JsonWriter& raw(const std::string& text) {
    separate();
    out_ << text;
    needs_comma_ = true;
    return *this;
  }

  JsonWriter& token(const char* open, bool) {
    separate();
    out_ << open;
    needs_comma_ = false;
    return *this;
  }

  JsonWriter& close(const char* close_tok) {
    out_ << close_tok;
    needs_comma_ = true;
    return *this;
  }

  void separate() {
    if (pending_value_) {
      pending_value_ = false;
      return;
    }
    if (needs_comma_) out_ << ',';
    needs_comma_ = false;
  }

  std::ostringstream out_;
  bool needs_comma_ = false;
  bool pending_value_ = false;
};

inline void write_matrix(JsonWriter& w, const Matrix& m) {
  w.begin_object();
  w.key("rows").value(m.rows());
  w.key("cols").value(m.cols());
  w.key("data").begin_array();
  for (int i = 0; i < m.rows(); ++i) {
    w.begin_array();
    for (int j = 0; j < m.cols(); ++j) w.value(m(i, j));
    w.end_array();
  }
  w.end_array();
  w.end_object();
}

/// Parses {"rows": n, "cols": m, "data": [[...], ...]}; ragged rows,
/// non-finite values and shape mismatches are all rejected.
inline Matrix parse_matrix(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data"))
    throw domain_error("matrix JSON must carry rows, cols and data");
  if (!j["rows"].is_number_integer() || !j["cols"].is_number_integer())
    throw domain_error("matrix rows/cols must be integers");
  const int rows = j["rows"].get<int>();
  const int cols = j["cols"].get<int>();
  if (rows <= 0 || cols <= 0) throw domain_error("matrix rows/cols must be positive");
  const auto& data = j["data"];
  if (!data.is_array() || static_cast<int>(data.size()) != rows)
    throw domain_error("matrix data must have exactly `rows` rows");
  std::vector<double> entries;
  entries.reserve(static_cast<std::size_t>(rows) * cols);
  for (const auto& row : data) {
    if (!row.is_array() || static_cast<int>(row.size()) != cols)
      throw domain_error("ragged matrix data");
    for (const auto& x : row) {
      if (!x.is_number()) throw domain_error("matrix entries must be numbers");
      const double v = x.get<double>();
      if (!std::isfinite(v)) throw domain_error("matrix entries must be finite");
      entries.push_back(v);
    }
  }
  return Matrix(rows, cols, std::move(entries));
}

inline nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw domain_error("cannot open file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw domain_error("malformed JSON in " + path + ": " + e.what());
  }
  return j;
}

inline Matrix load_matrix_file(const std::string& path) {
  return parse_matrix(load_json_file(path));
}

/// System file {"A": <matrix>, "C": <matrix>, "name": "..."}.
inline SystemFile load_system_file(const std::string& path) {
  const nlohmann::json j = load_json_file(path);
  if (!j.is_object() || !j.contains("A") || !j.contains("C"))
    throw domain_error("system JSON must carry matrices A and C");
  SystemFile sys;
  sys.A = parse_matrix(j["A"]);
  sys.C = parse_matrix(j["C"]);
  sys.name = j.value("name", std::string{});
  if (sys.A.rows() != sys.A.cols()) throw domain_error("system A must be square");
  if (sys.C.cols() != sys.A.rows())
    throw domain_error("system C column count must equal the dimension of A");
  if (sys.C.rows() > sys.A.rows())
    throw domain_error("system C cannot have more rows than A (p <= n)");
  return sys;
}

/// Parses a comma-separated list of numbers ("1,0,2.5") into a Vector.
inline Vector parse_vector_flag(const std::string& text) {
  std::vector<double> entries;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
      if (used != item.size()) throw domain_error("");
      entries.push_back(v);
    } catch (...) {
      throw domain_error("invalid number in vector flag: '" + item + "'");
    }
  }
  if (entries.empty()) throw domain_error("empty vector flag");
  return Vector(std::move(entries));
}

}  // namespace io
}  // namespace dpobs
