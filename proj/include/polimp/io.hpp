#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "polimp/pomdp.hpp"

// File formats: POMDP / policy / distribution JSON, and CSV emission.
namespace polimp::io {

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double x);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

/// JSON object with n_world, n_sensor, n_action, alpha[w][a][w'], beta[w][s],
/// reward[w][a]. Schema problems raise ValidationError.
Pomdp parse_pomdp(const std::string& json_text);
std::string pomdp_to_json(const Pomdp& p);
Pomdp load_pomdp(const std::filesystem::path& path);

/// Policy as [s][a].
Policy parse_policy(const std::string& json_text);
std::string policy_to_json(const Policy& pi);
Policy load_policy(const std::filesystem::path& path);

/// Distribution as a flat array.
Distribution parse_distribution(const std::string& json_text);
Distribution load_distribution(const std::filesystem::path& path);

/// Minimal CSV writer with round-trip float formatting; one row per call.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  void header(const std::vector<std::string>& columns);

  CsvWriter& field(double x);
  CsvWriter& field(long long x);
  CsvWriter& field(int x) { return field(static_cast<long long>(x)); }
  CsvWriter& field(const std::string& x);
  void end_row();

 private:
  void sep();
  std::ostream& out_;
  bool first_ = true;
};

}  // namespace polimp::io
