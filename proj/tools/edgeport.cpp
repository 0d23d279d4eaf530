// Command-line front end: tool calibration, experiment runs, frame decoding,
// and runtime binding management.
//
// Exit codes: 0 success, 1 config error, 2 IO error, 3 invariant violation.

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <edgeport/config.hpp>
#include <edgeport/dataplane.hpp>
#include <edgeport/geometry.hpp>
#include <edgeport/harness.hpp>
#include <edgeport/trajgen.hpp>
#include <edgeport/wire.hpp>

namespace {

using namespace edgeport;
namespace fs = std::filesystem;

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

std::string threshold_label(const std::optional<double>& threshold_mm) {
  return threshold_mm ? fmt("%.3f", *threshold_mm) : std::string("none");
}

// calibrate: build a correction table for a sensor grid and write it as JSON.
struct CalibrateArgs {
  std::string grid_file;
  std::string output = "table.json";
  geometry::GridConfig grid;
};

int cmd_calibrate(const CalibrateArgs& args) {
  geometry::GridConfig grid = args.grid;
  if (!args.grid_file.empty()) grid = config::load_grid(args.grid_file);
  try {
    grid.validate();
  } catch (const std::invalid_argument& e) {
    throw config::ConfigError(e.what());
  }
  geometry::CorrectionTable table = geometry::build_correction_table(grid);
  config::write_file_atomic(args.output, table.to_json());
  std::cout << "wrote " << args.output << ": " << table.size() << " entries\n";
  return 0;
}

// run: execute one experiment from a config file and write its artifacts.
std::string metrics_csv(const harness::ExperimentResult& r) {
  std::ostringstream out;
  out << "task,threshold_mm,transmitted,discarded,avg_rate_kbps,reduction_pct,"
         "drawing_length_mm\n";
  out << trajgen::to_string(r.task) << ',' << threshold_label(r.threshold_mm) << ','
      << r.transmitted << ',' << r.discarded << ',' << fmt("%.2f", r.avg_rate_kbps) << ','
      << fmt("%.2f", r.reduction_pct) << ',' << fmt("%.2f", r.drawing_length_mm) << '\n';
  return out.str();
}

std::string trajectory_csv(const trajgen::TaskSpec& spec, const trajgen::TremorModel& tremor) {
  trajgen::TrajectoryGenerator gen(spec, tremor);
  std::ostringstream out;
  out << "k,t_ms,x_mm,y_mm,z_mm\n";
  for (int64_t k = 0; k < spec.sample_count(); ++k) {
    const auto p = gen.position_mm(k);
    out << k << ',' << fmt("%.3f", 1000.0 * static_cast<double>(k) / spec.sample_rate_hz)
        << ',' << fmt("%.6f", p[0]) << ',' << fmt("%.6f", p[1]) << ',' << fmt("%.6f", p[2])
        << '\n';
  }
  return out.str();
}

std::string received_csv(const std::vector<harness::ReceivedSample>& samples) {
  std::ostringstream out;
  out << "sid,t_ns,x_mm,y_mm,z_mm\n";
  for (const auto& s : samples) {
    out << s.sid << ',' << s.t_ns << ',' << fmt("%.2f", s.x_mm) << ',' << fmt("%.2f", s.y_mm)
        << ',' << fmt("%.2f", s.z_mm) << '\n';
  }
  return out.str();
}

int cmd_run(const std::string& config_path) {
  config::RunConfig rc = config::RunConfig::load(config_path);
  if (!rc.grid_config_path.empty()) config::load_grid(rc.grid_config_path);
  config::Bindings bindings = config::Bindings::load_or_defaults(rc.bindings_path);
  std::optional<double> threshold = config::effective_threshold(rc, bindings);

  harness::EventLog log;
  harness::ExperimentResult res =
      harness::run_experiment(rc.spec, rc.tremor(), threshold, rc.topology, &log);

  fs::path dir(rc.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw config::IoError("cannot create " + dir.string());
  config::write_file_atomic(dir / "metrics.csv", metrics_csv(res));
  config::write_file_atomic(dir / "trajectory.csv", trajectory_csv(rc.spec, rc.tremor()));
  config::write_file_atomic(dir / "received.csv", received_csv(res.received));
  config::write_file_atomic(dir / "events.log", log.text());

  std::cout << "task=" << trajgen::to_string(res.task)
            << " threshold_mm=" << threshold_label(res.threshold_mm)
            << " transmitted=" << res.transmitted << " discarded=" << res.discarded
            << " reduction_pct=" << fmt("%.2f", res.reduction_pct) << " -> " << dir.string()
            << '\n';
  return 0;
}

// decode: print every field of one 130-byte frame.
std::vector<uint8_t> parse_hex(const std::string& text) {
  std::vector<uint8_t> bytes;
  int hi = -1;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    int v;
    if (c >= '0' && c <= '9') {
      v = c - '0';
    } else if (c >= 'a' && c <= 'f') {
      v = c - 'a' + 10;
    } else if (c >= 'A' && c <= 'F') {
      v = c - 'A' + 10;
    } else {
      throw config::ConfigError(std::string("invalid hex character '") + c + "'");
    }
    if (hi < 0) {
      hi = v;
    } else {
      bytes.push_back(static_cast<uint8_t>(hi << 4 | v));
      hi = -1;
    }
  }
  if (hi >= 0) throw config::ConfigError("odd number of hex digits");
  return bytes;
}

std::string mac_string(const std::array<uint8_t, 6>& mac) {
  char buf[18];
  std::snprintf(buf, sizeof(buf), "%02x:%02x:%02x:%02x:%02x:%02x", mac[0], mac[1], mac[2],
                mac[3], mac[4], mac[5]);
  return buf;
}

std::string ip_string(uint32_t ip) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u", ip >> 24 & 0xFF, ip >> 16 & 0xFF,
                ip >> 8 & 0xFF, ip & 0xFF);
  return buf;
}

int cmd_decode(const std::string& hex_arg, const std::string& file_arg) {
  std::vector<uint8_t> bytes;
  if (!hex_arg.empty() && !file_arg.empty()) {
    throw config::ConfigError("give either a hex string or --file, not both");
  }
  if (!file_arg.empty()) {
    std::string content = config::read_file(file_arg);
    if (content.size() == wire::kFrameSize) {
      bytes.assign(content.begin(), content.end());  // raw frame
    } else {
      bytes = parse_hex(content);
    }
  } else if (!hex_arg.empty()) {
    bytes = parse_hex(hex_arg);
  } else {
    std::ostringstream buf;
    buf << std::cin.rdbuf();
    bytes = parse_hex(buf.str());
  }

  wire::Frame f = wire::decode_frame(bytes);
  std::ostringstream out;
  out << "src = " << ip_string(f.addr.src_ip) << ':' << f.addr.src_port << " ("
      << mac_string(f.addr.src_mac) << ")\n";
  out << "dst = " << ip_string(f.addr.dst_ip) << ':' << f.addr.dst_port << " ("
      << mac_string(f.addr.dst_mac) << ")\n";
  out << "sid = " << f.meta.sid << '\n';
  out << "tid = " << f.meta.tid << '\n';
  out << "x = " << fmt("%.2f", wire::dequantize_position(f.meta.x)) << " mm (raw " << f.meta.x
      << ")\n";
  out << "y = " << fmt("%.2f", wire::dequantize_position(f.meta.y)) << " mm (raw " << f.meta.y
      << ")\n";
  out << "z = " << fmt("%.2f", wire::dequantize_position(f.meta.z)) << " mm (raw " << f.meta.z
      << ")\n";
  const struct { const char* name; int16_t raw; } quat[] = {
      {"qx", f.meta.qx}, {"qy", f.meta.qy}, {"qz", f.meta.qz}, {"qw", f.meta.qw}};
  for (const auto& q : quat) {
    out << q.name << " = " << fmt("%.4f", wire::dequantize_quaternion(q.raw)) << " (raw "
        << q.raw << ")\n";
  }
  out << "b1 = " << f.meta.b1 << '\n';
  out << "b2 = " << f.meta.b2 << '\n';
  for (size_t i = 0; i < f.meta.f.size(); ++i) {
    out << 'f' << i << " = " << f.meta.f[i] << '\n';
  }
  out << "ingress_ts = " << f.telemetry.ingress_ts << " ns\n";
  out << "egress_ts = " << f.telemetry.egress_ts << " ns\n";
  out << "pkt_len = " << f.telemetry.pkt_len << " bytes\n";
  out << "ingress_port = " << f.telemetry.ingress_port << '\n';
  out << "egress_port = " << f.telemetry.egress_port << '\n';
  std::cout << out.str();
  return 0;
}

// table: list or update the runtime TID bindings file.
std::string binding_line(const config::BindingSpec& e) {
  std::ostringstream out;
  out << "tid " << e.tid << ": " << e.algorithm;
  if (e.algorithm == "tremor_suppress") out << " threshold_mm=" << fmt("%.3f", e.threshold_mm);
  if (e.algorithm == "pose_correct") out << " table=" << e.table_path;
  return out.str();
}

int cmd_table_list(const std::string& file) {
  for (const auto& e : config::Bindings::load_or_defaults(file).entries) {
    std::cout << binding_line(e) << '\n';
  }
  return 0;
}

int cmd_table_set(const std::string& file, uint16_t tid, const std::string& algorithm,
                  double threshold_mm, const std::string& table_path) {
  config::Bindings b = config::Bindings::load_or_defaults(file);
  b.set({tid, algorithm, threshold_mm, table_path});
  config::write_file_atomic(file, b.to_json());
  std::cout << binding_line(*b.find(tid)) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Edge-intelligent switch emulator for tactile teleoperation"};
  app.require_subcommand(1);

  CalibrateArgs cal;
  CLI::App* calibrate = app.add_subcommand(
      "calibrate", "Build the pose-correction table for a sensor grid");
  CLI::Option* grid_opt = calibrate->add_option("--grid", cal.grid_file,
                                                "Grid config file (key = value)");
  calibrate->add_option("--rows", cal.grid.rows, "Grid rows")
      ->capture_default_str()
      ->excludes(grid_opt);
  calibrate->add_option("--cols", cal.grid.cols, "Grid columns")
      ->capture_default_str()
      ->excludes(grid_opt);
  calibrate->add_option("--gap-x-mm", cal.grid.gap_x_mm, "Column spacing, mm")
      ->capture_default_str()
      ->excludes(grid_opt);
  calibrate->add_option("--gap-y-mm", cal.grid.gap_y_mm, "Row spacing, mm")
      ->capture_default_str()
      ->excludes(grid_opt);
  calibrate->add_option("--base-index", cal.grid.base_index, "Expected grip cell")
      ->capture_default_str()
      ->excludes(grid_opt);
  calibrate->add_option("--threshold", cal.grid.threshold, "FSR activation threshold")
      ->capture_default_str()
      ->excludes(grid_opt);
  calibrate->add_option("-o,--output", cal.output, "Table file to write")
      ->capture_default_str();

  std::string run_config_path;
  CLI::App* run = app.add_subcommand("run", "Run an experiment from a config file");
  run->add_option("config", run_config_path, "Run config file (key = value)")->required();

  std::string decode_hex;
  std::string decode_file;
  CLI::App* decode = app.add_subcommand("decode", "Decode one 130-byte frame");
  decode->add_option("hex", decode_hex, "Frame as hex digits (stdin when omitted)");
  decode->add_option("--file", decode_file, "Frame file, raw 130 bytes or hex text");

  std::string table_file = "bindings.json";
  CLI::App* table = app.add_subcommand("table", "Inspect or update runtime TID bindings");
  table->require_subcommand(1);
  table->add_option("--file", table_file, "Bindings file")->capture_default_str();
  CLI::App* table_list = table->add_subcommand("list", "Print the active bindings");
  uint16_t set_tid = 0;
  std::string set_algorithm;
  double set_threshold_mm = 0.5;
  std::string set_table_path;
  CLI::App* table_set = table->add_subcommand("set", "Bind a TID to an algorithm");
  table_set->add_option("tid", set_tid, "Task id (0..65535)")->required();
  table_set
      ->add_option("algorithm", set_algorithm,
                   "passthrough | tremor_suppress | pose_correct")
      ->required();
  table_set->add_option("--threshold-mm", set_threshold_mm,
                        "Deadband threshold for tremor_suppress")
      ->capture_default_str();
  table_set->add_option("--table", set_table_path, "Correction table for pose_correct");

  try {
    app.parse(argc, argv);
    if (*calibrate) return cmd_calibrate(cal);
    if (*run) return cmd_run(run_config_path);
    if (*decode) return cmd_decode(decode_hex, decode_file);
    if (*table_list) return cmd_table_list(table_file);
    if (*table_set) {
      return cmd_table_set(table_file, set_tid, set_algorithm, set_threshold_mm,
                           set_table_path);
    }
    return 0;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const config::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const config::IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
