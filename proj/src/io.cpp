#include "polimp/io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "polimp/errors.hpp"

namespace polimp::io {

using nlohmann::json;

std::string format_double(double x) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failure on " + path.string());
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write failure on " + path.string());
}

namespace {

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string(what) + ": malformed JSON: " + e.what());
  }
}

int get_int(const json& obj, const char* key) {
  if (!obj.contains(key) || !obj.at(key).is_number_integer()) {
    throw ValidationError(std::string("pomdp: field '") + key + "' must be an integer");
  }
  return obj.at(key).get<int>();
}

double as_number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ValidationError(where + ": expected a number");
  return v.get<double>();
}

std::vector<double> as_numbers(const json& v, const std::string& where) {
  if (!v.is_array()) throw ValidationError(where + ": expected an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(as_number(v[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::vector<std::vector<double>> as_table(const json& v, const std::string& where) {
  if (!v.is_array()) throw ValidationError(where + ": expected an array");
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(as_numbers(v[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

Matrix to_matrix(const std::vector<std::vector<double>>& rows, const char* what) {
  if (rows.empty()) throw ValidationError(std::string(what) + ": empty table");
  const std::size_t cols = rows.front().size();
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) {
      throw ValidationError(std::string("dimension mismatch: ") + what + " row " +
                            std::to_string(i) + " has " + std::to_string(rows[i].size()) +
                            " entries, expected " + std::to_string(cols));
    }
    for (std::size_t j = 0; j < cols; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

json matrix_rows(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace

Pomdp parse_pomdp(const std::string& json_text) {
  const json doc = parse_json(json_text, "pomdp");
  if (!doc.is_object()) throw ValidationError("pomdp: top level must be an object");
  RawPomdp raw;
  raw.n_world = get_int(doc, "n_world");
  raw.n_sensor = get_int(doc, "n_sensor");
  raw.n_action = get_int(doc, "n_action");
  for (const char* key : {"alpha", "beta", "reward"}) {
    if (!doc.contains(key)) throw ValidationError(std::string("pomdp: missing field '") + key + "'");
  }
  const json& alpha = doc.at("alpha");
  if (!alpha.is_array()) throw ValidationError("alpha: expected an array");
  for (std::size_t w = 0; w < alpha.size(); ++w) {
    raw.alpha.push_back(as_table(alpha[w], "alpha[" + std::to_string(w) + "]"));
  }
  raw.beta = as_table(doc.at("beta"), "beta");
  raw.reward = as_table(doc.at("reward"), "reward");
  return validate_pomdp(raw);
}

std::string pomdp_to_json(const Pomdp& p) {
  const RawPomdp raw = p.to_raw();
  json doc;
  doc["n_world"] = raw.n_world;
  doc["n_sensor"] = raw.n_sensor;
  doc["n_action"] = raw.n_action;
  doc["alpha"] = raw.alpha;
  doc["beta"] = raw.beta;
  doc["reward"] = raw.reward;
  return doc.dump(2) + "\n";
}

Pomdp load_pomdp(const std::filesystem::path& path) { return parse_pomdp(read_text(path)); }

Policy parse_policy(const std::string& json_text) {
  const json doc = parse_json(json_text, "policy");
  return Policy::from_table(to_matrix(as_table(doc, "policy"), "policy"));
}

std::string policy_to_json(const Policy& pi) { return matrix_rows(pi.table()).dump() + "\n"; }

Policy load_policy(const std::filesystem::path& path) { return parse_policy(read_text(path)); }

Distribution parse_distribution(const std::string& json_text) {
  const json doc = parse_json(json_text, "distribution");
  const std::vector<double> v = as_numbers(doc, "distribution");
  return Distribution::from(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
}

Distribution load_distribution(const std::filesystem::path& path) {
  return parse_distribution(read_text(path));
}

// ---------------------------------------------------------------------------

void CsvWriter::header(const std::vector<std::string>& columns) {
  for (const auto& c : columns) field(c);
  end_row();
}

void CsvWriter::sep() {
  if (!first_) out_ << ',';
  first_ = false;
}

CsvWriter& CsvWriter::field(double x) {
  sep();
  out_ << format_double(x);
  return *this;
}

CsvWriter& CsvWriter::field(long long x) {
  sep();
  out_ << x;
  return *this;
}

CsvWriter& CsvWriter::field(const std::string& x) {
  sep();
  out_ << x;
  return *this;
}

void CsvWriter::end_row() {
  out_ << '\n';
  first_ = true;
}

}  // namespace polimp::io
