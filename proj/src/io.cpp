#include "aggrex/io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "aggrex/errors.hpp"

namespace aggrex {

std::string format_sig17(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x,
                                       std::chars_format::general, 17);
  if (ec != std::errc()) throw NumericError("failed to format value");
  return std::string(buf, ptr);
}

namespace {

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open for reading: " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open for writing: " + path.string());
  return out;
}

double parse_double(const std::string& tok, const fs::path& path, std::size_t line) {
  double value = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  while (first < last && std::isspace(static_cast<unsigned char>(*first))) ++first;
  while (last > first && std::isspace(static_cast<unsigned char>(last[-1]))) --last;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw InputError(path.string() + ":" + std::to_string(line) +
                     ": not a number: '" + tok + "'");
  return value;
}

std::vector<double> split_numbers(const std::string& line, const fs::path& path,
                                  std::size_t lineno) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= line.size()) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) comma = line.size();
    out.push_back(parse_double(line.substr(start, comma - start), path, lineno));
    start = comma + 1;
    if (comma == line.size()) break;
  }
  return out;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

void write_matrix_csv(const fs::path& path, const DenseMatrix& A) {
  std::ofstream out = open_out(path);
  for (std::size_t i = 0; i < A.rows(); ++i) {
    const double* row = A.row(i);
    for (std::size_t j = 0; j < A.cols(); ++j) {
      if (j) out << ',';
      out << format_sig17(row[j]);
    }
    out << '\n';
  }
  if (!out) throw InputError("write failed: " + path.string());
}

DenseMatrix read_matrix_csv(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    rows.push_back(split_numbers(line, path, lineno));
    if (rows.size() > 1 && rows.back().size() != rows.front().size())
      throw InputError(path.string() + ":" + std::to_string(lineno) +
                       ": ragged row width");
  }
  if (rows.empty()) throw InputError(path.string() + ": empty matrix file");
  DenseMatrix A(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) A(i, j) = rows[i][j];
  return A;
}

void write_vector_csv(const fs::path& path, const Vec& v) {
  std::ofstream out = open_out(path);
  for (double x : v) out << format_sig17(x) << '\n';
  if (!out) throw InputError("write failed: " + path.string());
}

Vec read_vector_csv(const fs::path& path) {
  std::ifstream in = open_in(path);
  Vec v;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    v.push_back(parse_double(line, path, lineno));
  }
  if (v.empty()) throw InputError(path.string() + ": empty vector file");
  return v;
}

void write_trajectory(const fs::path& path, const Trajectory& traj) {
  std::ofstream out = open_out(path);
  for (std::size_t s : traj.states) out << s << '\n';
  if (!out) throw InputError("write failed: " + path.string());
}

Trajectory read_trajectory(const fs::path& path, std::size_t d_hint) {
  std::ifstream in = open_in(path);
  Trajectory traj;
  std::string line;
  std::size_t lineno = 0;
  std::size_t max_state = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    std::uint64_t value = 0;
    const char* first = line.data();
    const char* last = line.data() + line.size();
    while (first < last && std::isspace(static_cast<unsigned char>(*first))) ++first;
    while (last > first && std::isspace(static_cast<unsigned char>(last[-1]))) --last;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
      throw InputError(path.string() + ":" + std::to_string(lineno) +
                       ": not a state index: '" + line + "'");
    traj.states.push_back(static_cast<std::size_t>(value));
    max_state = std::max(max_state, static_cast<std::size_t>(value));
  }
  if (traj.states.empty()) throw InputError(path.string() + ": empty trajectory file");
  traj.d = std::max(d_hint, max_state + 1);
  return traj;
}

std::vector<TripRecord> read_trip_records(const fs::path& path, bool skip_header) {
  std::ifstream in = open_in(path);
  std::vector<TripRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    if (skip_header && lineno == 1) continue;
    std::vector<double> nums = split_numbers(line, path, lineno);
    if (nums.size() != 4)
      throw InputError(path.string() + ":" + std::to_string(lineno) +
                       ": expected 4 fields, got " + std::to_string(nums.size()));
    records.push_back({nums[0], nums[1], nums[2], nums[3]});
  }
  if (records.empty()) throw InputError(path.string() + ": no trip records");
  return records;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t fnv1a64_file(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::uint64_t h = 14695981039346656037ull;
  char buf[65536];
  while (in) {
    in.read(buf, sizeof(buf));
    const std::streamsize got = in.gcount();
    for (std::streamsize t = 0; t < got; ++t) {
      h ^= static_cast<unsigned char>(buf[t]);
      h *= 1099511628211ull;
    }
  }
  return h;
}

std::string checksum_hex(const fs::path& path) {
  std::ostringstream os;
  os << "fnv1a64:" << std::hex;
  os.width(16);
  os.fill('0');
  os << fnv1a64_file(path);
  return os.str();
}

KeyValueConfig KeyValueConfig::from_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_string(buffer.str(), path.string());
}

KeyValueConfig KeyValueConfig::from_string(const std::string& text, std::string origin) {
  KeyValueConfig cfg;
  cfg.origin_ = std::move(origin);
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
  };
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string trimmed = trim(line);
    if (trimmed.empty()) continue;
    const std::size_t eq = trimmed.find('=');
    if (eq == std::string::npos)
      throw ConfigError(cfg.origin_ + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    const std::string key = trim(trimmed.substr(0, eq));
    const std::string value = trim(trimmed.substr(eq + 1));
    if (key.empty())
      throw ConfigError(cfg.origin_ + ":" + std::to_string(lineno) + ": empty key");
    if (cfg.values_.count(key))
      throw ConfigError(cfg.origin_ + ":" + std::to_string(lineno) +
                        ": duplicate key '" + key + "'");
    cfg.values_[key] = value;
  }
  return cfg;
}

bool KeyValueConfig::has(const std::string& key) const { return values_.count(key) > 0; }

std::string KeyValueConfig::get_string(const std::string& key, const std::string& def) {
  consumed_.insert(key);
  const auto it = values_.find(key);
  const std::string value = it == values_.end() ? def : it->second;
  resolved_[key] = value;
  return value;
}

std::string KeyValueConfig::require_string(const std::string& key) {
  consumed_.insert(key);
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing required config key '" + key + "'");
  resolved_[key] = it->second;
  return it->second;
}

double KeyValueConfig::get_double(const std::string& key, double def) {
  consumed_.insert(key);
  const auto it = values_.find(key);
  if (it == values_.end()) {
    resolved_[key] = format_sig17(def);
    return def;
  }
  resolved_[key] = it->second;
  try {
    return parse_double(it->second, origin_, 0);
  } catch (const InputError&) {
    throw ConfigError("config key '" + key + "' is not a number: " + it->second);
  }
}

double KeyValueConfig::require_double(const std::string& key) {
  const std::string raw = require_string(key);
  try {
    return parse_double(raw, origin_, 0);
  } catch (const InputError&) {
    throw ConfigError("config key '" + key + "' is not a number: " + raw);
  }
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key, std::uint64_t def) {
  consumed_.insert(key);
  const auto it = values_.find(key);
  if (it == values_.end()) {
    resolved_[key] = std::to_string(def);
    return def;
  }
  resolved_[key] = it->second;
  std::uint64_t value = 0;
  const char* first = it->second.data();
  const char* last = first + it->second.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw ConfigError("config key '" + key + "' is not an unsigned integer: " +
                      it->second);
  return value;
}

std::size_t KeyValueConfig::get_size(const std::string& key, std::size_t def) {
  return static_cast<std::size_t>(get_u64(key, static_cast<std::uint64_t>(def)));
}

bool KeyValueConfig::get_bool(const std::string& key, bool def) {
  consumed_.insert(key);
  const auto it = values_.find(key);
  if (it == values_.end()) {
    resolved_[key] = def ? "true" : "false";
    return def;
  }
  resolved_[key] = it->second;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw ConfigError("config key '" + key + "' is not a boolean: " + it->second);
}

std::vector<double> KeyValueConfig::get_double_list(const std::string& key) {
  consumed_.insert(key);
  const auto it = values_.find(key);
  if (it == values_.end()) {
    resolved_[key] = "";
    return {};
  }
  resolved_[key] = it->second;
  std::vector<double> out;
  std::size_t start = 0;
  const std::string& raw = it->second;
  while (start <= raw.size()) {
    std::size_t comma = raw.find(',', start);
    if (comma == std::string::npos) comma = raw.size();
    const std::string tok = raw.substr(start, comma - start);
    try {
      out.push_back(parse_double(tok, origin_, 0));
    } catch (const InputError&) {
      throw ConfigError("config key '" + key + "' has a non-numeric entry: " + tok);
    }
    start = comma + 1;
    if (comma == raw.size()) break;
  }
  return out;
}

void KeyValueConfig::reject_unknown_keys() const {
  for (const auto& [key, value] : values_) {
    if (!consumed_.count(key))
      throw ConfigError("unknown config key '" + key + "' in " + origin_);
  }
}

}  // namespace aggrex
