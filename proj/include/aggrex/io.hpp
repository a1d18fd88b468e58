#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "aggrex/chain.hpp"
#include "aggrex/matrix.hpp"

namespace aggrex {

namespace fs = std::filesystem;

// 17 significant digits: enough for bit round-trip of binary64.
std::string format_sig17(double x);

void write_matrix_csv(const fs::path& path, const DenseMatrix& A);
DenseMatrix read_matrix_csv(const fs::path& path);
void write_vector_csv(const fs::path& path, const Vec& v);
Vec read_vector_csv(const fs::path& path);

void write_trajectory(const fs::path& path, const Trajectory& traj);
// d inferred as max index + 1 unless d_hint is larger.
Trajectory read_trajectory(const fs::path& path, std::size_t d_hint = 0);

std::vector<TripRecord> read_trip_records(const fs::path& path, bool skip_header);

std::uint64_t fnv1a64(const std::string& bytes);
std::uint64_t fnv1a64_file(const fs::path& path);
std::string checksum_hex(const fs::path& path);

// Flat key-value config ("key = value", '#' comments). Reads are recorded so
// leftover keys can be rejected; resolved values (defaults included) are kept
// for the manifest.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;
  static KeyValueConfig from_file(const fs::path& path);
  static KeyValueConfig from_string(const std::string& text, std::string origin = "<inline>");

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& def);
  std::string require_string(const std::string& key);
  double get_double(const std::string& key, double def);
  double require_double(const std::string& key);
  std::uint64_t get_u64(const std::string& key, std::uint64_t def);
  std::size_t get_size(const std::string& key, std::size_t def);
  bool get_bool(const std::string& key, bool def);
  std::vector<double> get_double_list(const std::string& key);  // empty if absent

  void reject_unknown_keys() const;
  const std::map<std::string, std::string>& resolved() const { return resolved_; }
  const std::string& origin() const { return origin_; }

 private:
  std::map<std::string, std::string> values_;
  std::set<std::string> consumed_;
  std::map<std::string, std::string> resolved_;
  std::string origin_;
};

}  // namespace aggrex
