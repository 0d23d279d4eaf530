#pragma once

// Run configuration (flat key=value text), runtime algorithm bindings (JSON),
// and atomic file output helpers shared by the CLI tools.

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include <edgeport/geometry.hpp>
#include <edgeport/harness.hpp>
#include <edgeport/trajgen.hpp>

namespace edgeport::config {

// Bad key, value, or structure in a config or bindings file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem failure while reading or writing an artifact.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(std::string_view s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

struct KeyValue {
  std::string key;
  std::string value;
  int line = 0;
};

// Line-oriented `key = value` with '#' comments and duplicate rejection.
inline std::vector<KeyValue> parse_flat(const std::string& text) {
  std::vector<KeyValue> out;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::string line = trim(raw);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    KeyValue kv;
    kv.key = trim(std::string_view(line).substr(0, eq));
    kv.value = trim(std::string_view(line).substr(eq + 1));
    kv.line = line_no;
    if (kv.key.empty()) {
      throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    }
    if (kv.value.empty()) {
      throw ConfigError("line " + std::to_string(line_no) + ": empty value for '" + kv.key + "'");
    }
    for (const auto& seen : out) {
      if (seen.key == kv.key) {
        throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + kv.key + "'");
      }
    }
    out.push_back(std::move(kv));
  }
  return out;
}

inline double to_double(const KeyValue& kv) {
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(kv.value.c_str(), &end);
  if (end != kv.value.c_str() + kv.value.size() || errno == ERANGE) {
    throw ConfigError("line " + std::to_string(kv.line) + ": '" + kv.key +
                      "' expects a number, got '" + kv.value + "'");
  }
  return v;
}

inline int64_t to_int(const KeyValue& kv) {
  errno = 0;
  char* end = nullptr;
  long long v = std::strtoll(kv.value.c_str(), &end, 10);
  if (end != kv.value.c_str() + kv.value.size() || errno == ERANGE) {
    throw ConfigError("line " + std::to_string(kv.line) + ": '" + kv.key +
                      "' expects an integer, got '" + kv.value + "'");
  }
  return v;
}

inline uint64_t to_uint64(const KeyValue& kv) {
  int64_t v = to_int(kv);
  if (v < 0) {
    throw ConfigError("line " + std::to_string(kv.line) + ": '" + kv.key +
                      "' must be nonnegative");
  }
  return static_cast<uint64_t>(v);
}

}  // namespace detail

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed for " + path.string());
  return buf.str();
}

// Writes via a sibling temp file plus rename so readers never see a torn file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot replace " + path.string());
  }
}

// Experiment description parsed from flat key=value text. `task` selects the
// per-task defaults; every other key overrides one field. Unknown keys fail.
struct RunConfig {
  trajgen::TaskSpec spec = trajgen::TaskSpec::defaults(trajgen::TaskKind::kSpiral);
  bool threshold_set = false;               // true when the file names a threshold
  std::optional<double> threshold_mm;       // nullopt = filtering off ("none")
  double tremor_amplitude_um = 100.0;
  uint64_t tremor_seed = trajgen::kDefaultTremorSeed;
  harness::TopologyConfig topology;
  std::string bindings_path = "bindings.json";
  std::string grid_config_path;             // optional, validated when present
  std::string output_dir = "out";

  trajgen::TremorModel tremor() const { return {tremor_amplitude_um, tremor_seed}; }

  static RunConfig parse(const std::string& text) {
    auto kvs = detail::parse_flat(text);
    RunConfig rc;
    // Apply `task` first so its defaults never clobber explicit overrides.
    for (const auto& kv : kvs) {
      if (kv.key == "task") {
        try {
          rc.spec = trajgen::TaskSpec::defaults(trajgen::task_from_string(kv.value));
        } catch (const std::invalid_argument& e) {
          throw ConfigError("line " + std::to_string(kv.line) + ": " + e.what());
        }
      }
    }
    for (const auto& kv : kvs) {
      if (kv.key == "task") {
        continue;
      } else if (kv.key == "duration_s") {
        rc.spec.duration_s = detail::to_double(kv);
      } else if (kv.key == "sample_rate_hz") {
        int64_t v = detail::to_int(kv);
        if (v < 1 || v > 1000000) {
          throw ConfigError("line " + std::to_string(kv.line) +
                            ": 'sample_rate_hz' out of range");
        }
        rc.spec.sample_rate_hz = static_cast<uint32_t>(v);
      } else if (kv.key == "path_length_mm") {
        rc.spec.path_length_mm = detail::to_double(kv);
      } else if (kv.key == "start_x_mm") {
        rc.spec.start_mm[0] = detail::to_double(kv);
      } else if (kv.key == "start_y_mm") {
        rc.spec.start_mm[1] = detail::to_double(kv);
      } else if (kv.key == "start_z_mm") {
        rc.spec.start_mm[2] = detail::to_double(kv);
      } else if (kv.key == "spiral_inner_radius_mm") {
        rc.spec.spiral_inner_radius_mm = detail::to_double(kv);
      } else if (kv.key == "spiral_pitch_mm_per_rad") {
        rc.spec.spiral_pitch_mm_per_rad = detail::to_double(kv);
      } else if (kv.key == "threshold_mm") {
        rc.threshold_set = true;
        if (kv.value == "none") {
          rc.threshold_mm.reset();
        } else {
          double v = detail::to_double(kv);
          if (!(v >= 0.0)) {
            throw ConfigError("line " + std::to_string(kv.line) +
                              ": 'threshold_mm' must be nonnegative or 'none'");
          }
          rc.threshold_mm = v;
        }
      } else if (kv.key == "tremor_amplitude_um") {
        double v = detail::to_double(kv);
        if (!(v >= 0.0)) {
          throw ConfigError("line " + std::to_string(kv.line) +
                            ": 'tremor_amplitude_um' must be nonnegative");
        }
        rc.tremor_amplitude_um = v;
      } else if (kv.key == "tremor_seed") {
        rc.tremor_seed = detail::to_uint64(kv);
      } else if (kv.key == "link_delay_ns") {
        rc.topology.link_delay_ns = detail::to_uint64(kv);
      } else if (kv.key == "switch_residence_ns") {
        rc.topology.switch_residence_ns = detail::to_uint64(kv);
      } else if (kv.key == "bindings") {
        rc.bindings_path = kv.value;
      } else if (kv.key == "grid_config") {
        rc.grid_config_path = kv.value;
      } else if (kv.key == "output_dir") {
        rc.output_dir = kv.value;
      } else {
        throw ConfigError("line " + std::to_string(kv.line) + ": unknown key '" + kv.key + "'");
      }
    }
    try {
      rc.spec.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    return rc;
  }

  static RunConfig load(const std::filesystem::path& path) {
    return parse(read_file(path));
  }
};

// Grid parameters in the same flat key=value format.
inline geometry::GridConfig parse_grid(const std::string& text) {
  auto kvs = detail::parse_flat(text);
  geometry::GridConfig g;
  for (const auto& kv : kvs) {
    if (kv.key == "rows") {
      g.rows = static_cast<int>(detail::to_int(kv));
    } else if (kv.key == "cols") {
      g.cols = static_cast<int>(detail::to_int(kv));
    } else if (kv.key == "gap_x_mm") {
      g.gap_x_mm = detail::to_double(kv);
    } else if (kv.key == "gap_y_mm") {
      g.gap_y_mm = detail::to_double(kv);
    } else if (kv.key == "base_index") {
      g.base_index = static_cast<int>(detail::to_int(kv));
    } else if (kv.key == "threshold") {
      g.threshold = static_cast<int>(detail::to_int(kv));
    } else {
      throw ConfigError("line " + std::to_string(kv.line) + ": unknown key '" + kv.key + "'");
    }
  }
  try {
    g.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return g;
}

inline geometry::GridConfig load_grid(const std::filesystem::path& path) {
  return parse_grid(read_file(path));
}

// One TID -> algorithm line in the runtime bindings file.
struct BindingSpec {
  uint16_t tid = 0;
  std::string algorithm;      // passthrough | tremor_suppress | pose_correct
  double threshold_mm = 0.5;  // tremor_suppress only
  std::string table_path;     // pose_correct only

  void validate() const {
    if (algorithm == "passthrough") return;
    if (algorithm == "tremor_suppress") {
      if (!(threshold_mm >= 0.0)) {
        throw ConfigError("tremor_suppress threshold_mm must be nonnegative");
      }
      return;
    }
    if (algorithm == "pose_correct") {
      if (table_path.empty()) throw ConfigError("pose_correct requires a table path");
      return;
    }
    throw ConfigError("unknown algorithm '" + algorithm + "'");
  }
};

// Persisted TID bindings; a missing file means the defaults below.
struct Bindings {
  std::vector<BindingSpec> entries;  // sorted by tid, unique

  static Bindings defaults() {
    Bindings b;
    b.entries.push_back({0, "passthrough", 0.5, ""});
    b.entries.push_back({2, "tremor_suppress", 0.5, ""});
    return b;
  }

  const BindingSpec* find(uint16_t tid) const {
    for (const auto& e : entries) {
      if (e.tid == tid) return &e;
    }
    return nullptr;
  }

  // Replaces the binding for the TID or inserts it keeping tid order.
  void set(BindingSpec spec) {
    spec.validate();
    for (auto& e : entries) {
      if (e.tid == spec.tid) {
        e = std::move(spec);
        return;
      }
    }
    entries.push_back(std::move(spec));
    std::sort(entries.begin(), entries.end(),
              [](const BindingSpec& a, const BindingSpec& b) { return a.tid < b.tid; });
  }

  std::string to_json() const {
    nlohmann::ordered_json doc;
    doc["bindings"] = nlohmann::ordered_json::array();
    for (const auto& e : entries) {
      nlohmann::ordered_json row;
      row["tid"] = e.tid;
      row["algorithm"] = e.algorithm;
      if (e.algorithm == "tremor_suppress") row["threshold_mm"] = e.threshold_mm;
      if (e.algorithm == "pose_correct") row["table"] = e.table_path;
      doc["bindings"].push_back(std::move(row));
    }
    return doc.dump(2) + "\n";
  }

  static Bindings parse(const std::string& text) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("bindings file is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("bindings") || !doc["bindings"].is_array()) {
      throw ConfigError("bindings file must be an object with a 'bindings' array");
    }
    Bindings b;
    for (const auto& row : doc["bindings"]) {
      if (!row.is_object() || !row.contains("tid") || !row.contains("algorithm") ||
          !row["tid"].is_number_unsigned() || !row["algorithm"].is_string()) {
        throw ConfigError("each binding needs an unsigned 'tid' and a string 'algorithm'");
      }
      uint64_t tid = row["tid"].get<uint64_t>();
      if (tid > 0xFFFF) throw ConfigError("binding tid out of 16-bit range");
      BindingSpec spec;
      spec.tid = static_cast<uint16_t>(tid);
      spec.algorithm = row["algorithm"].get<std::string>();
      if (row.contains("threshold_mm")) {
        if (!row["threshold_mm"].is_number()) {
          throw ConfigError("binding threshold_mm must be a number");
        }
        spec.threshold_mm = row["threshold_mm"].get<double>();
      }
      if (row.contains("table")) {
        if (!row["table"].is_string()) throw ConfigError("binding table must be a string path");
        spec.table_path = row["table"].get<std::string>();
      }
      spec.validate();
      if (b.find(spec.tid)) {
        throw ConfigError("duplicate binding for tid " + std::to_string(spec.tid));
      }
      b.entries.push_back(std::move(spec));
    }
    std::sort(b.entries.begin(), b.entries.end(),
              [](const BindingSpec& x, const BindingSpec& y) { return x.tid < y.tid; });
    return b;
  }

  static Bindings load_or_defaults(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) return defaults();
    return parse(read_file(path));
  }
};

// Threshold a run actually filters with: an explicit `threshold_mm` key wins;
// otherwise the TID 2 binding decides (tremor_suppress -> its threshold,
// anything else -> filtering off).
inline std::optional<double> effective_threshold(const RunConfig& rc, const Bindings& b) {
  if (rc.threshold_set) return rc.threshold_mm;
  const BindingSpec* e = b.find(dataplane::kTidTremorTask);
  if (e && e->algorithm == "tremor_suppress") return e->threshold_mm;
  return std::nullopt;
}

}  // namespace edgeport::config
