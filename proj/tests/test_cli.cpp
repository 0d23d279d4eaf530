// End-to-end tests that drive the installed CLI binary as a subprocess.

#include <catch2/catch_amalgamated.hpp>

#include <edgeport/config.hpp>
#include <edgeport/geometry.hpp>
#include <edgeport/wire.hpp>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

using namespace edgeport;
namespace fs = std::filesystem;

namespace {

std::string cli_binary() {
  if (const char* env = std::getenv("EDGEPORT_BIN")) return env;
  return EDGEPORT_BIN_PATH;
}

struct CmdResult {
  int code = -1;
  std::string out;  // stdout and stderr combined
};

CmdResult run_cli(const std::string& args) {
  static int serial = 0;
  fs::create_directories("cli_scratch");
  fs::path cap = fs::path("cli_scratch") / ("cap" + std::to_string(serial++) + ".txt");
  std::string cmd = "\"" + cli_binary() + "\" " + args + " > \"" + cap.string() + "\" 2>&1";
  int status = std::system(cmd.c_str());
  CmdResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(cap);
  std::ostringstream buf;
  buf << in.rdbuf();
  r.out = buf.str();
  return r;
}

fs::path scratch_dir(const std::string& name) {
  fs::path dir = fs::path("cli_scratch") / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  REQUIRE(out.good());
}

std::string hex_of(const wire::FrameBytes& bytes) {
  static const char digits[] = "0123456789abcdef";
  std::string out;
  for (uint8_t b : bytes) {
    out += digits[b >> 4];
    out += digits[b & 0xF];
  }
  return out;
}

std::vector<std::string> csv_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::string> file_lines(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::vector<std::string> lines;
  std::string l;
  while (std::getline(in, l)) lines.push_back(l);
  return lines;
}

}  // namespace

TEST_CASE("cli calibrate writes a deterministic table file", "[cli]") {
  fs::path dir = scratch_dir("calibrate");
  fs::path table_a = dir / "a.json";
  fs::path table_b = dir / "b.json";

  auto r = run_cli("calibrate -o \"" + table_a.string() + "\"");
  INFO(r.out);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("105 entries") != std::string::npos);

  auto table = geometry::CorrectionTable::from_json(config::read_file(table_a));
  CHECK(table.size() == 105);

  REQUIRE(run_cli("calibrate -o \"" + table_b.string() + "\"").code == 0);
  CHECK(config::read_file(table_a) == config::read_file(table_b));

  CHECK(run_cli("calibrate --rows 0 -o \"" + (dir / "bad.json").string() + "\"").code == 1);

  // Grid file path: a 1x2 grid has a single pair.
  fs::path grid = dir / "grid.cfg";
  write_text(grid, "rows = 1\ncols = 2\n");
  auto g = run_cli("calibrate --grid \"" + grid.string() + "\" -o \"" +
                   (dir / "small.json").string() + "\"");
  REQUIRE(g.code == 0);
  CHECK(g.out.find("1 entries") != std::string::npos);
}

TEST_CASE("cli run writes metrics, trajectories, and an event log", "[cli]") {
  fs::path dir = scratch_dir("run");
  fs::path cfg = dir / "hold.cfg";
  write_text(cfg,
             "task = hold\n"
             "duration_s = 1\n"
             "threshold_mm = 0.5\n"
             "output_dir = " + (dir / "out").string() + "\n");

  auto r = run_cli("run \"" + cfg.string() + "\"");
  INFO(r.out);
  REQUIRE(r.code == 0);

  auto metrics = file_lines(dir / "out" / "metrics.csv");
  REQUIRE(metrics.size() == 2);
  CHECK(metrics[0] ==
        "task,threshold_mm,transmitted,discarded,avg_rate_kbps,reduction_pct,"
        "drawing_length_mm");
  auto fields = csv_fields(metrics[1]);
  REQUIRE(fields.size() == 7);
  CHECK(fields[0] == "hold");
  CHECK(fields[1] == "0.500");
  CHECK(std::stol(fields[2]) + std::stol(fields[3]) == 1000);
  CHECK(std::stod(fields[5]) >= 99.9);

  auto trajectory = file_lines(dir / "out" / "trajectory.csv");
  REQUIRE(trajectory.size() == 1001);
  CHECK(trajectory[0] == "k,t_ms,x_mm,y_mm,z_mm");

  auto received = file_lines(dir / "out" / "received.csv");
  CHECK(received.size() == static_cast<size_t>(1 + std::stol(fields[2])));

  CHECK_FALSE(file_lines(dir / "out" / "events.log").empty());

  // Same seed, second output directory: byte-identical artifacts.
  fs::path cfg2 = dir / "hold2.cfg";
  write_text(cfg2,
             "task = hold\n"
             "duration_s = 1\n"
             "threshold_mm = 0.5\n"
             "output_dir = " + (dir / "out2").string() + "\n");
  REQUIRE(run_cli("run \"" + cfg2.string() + "\"").code == 0);
  for (const char* name : {"metrics.csv", "trajectory.csv", "received.csv", "events.log"}) {
    CHECK(config::read_file(dir / "out" / name) == config::read_file(dir / "out2" / name));
  }
}

TEST_CASE("cli run with threshold none bypasses filtering", "[cli]") {
  fs::path dir = scratch_dir("run_none");
  fs::path cfg = dir / "none.cfg";
  write_text(cfg,
             "task = hold\n"
             "duration_s = 1\n"
             "threshold_mm = none\n"
             "output_dir = " + (dir / "out").string() + "\n");
  REQUIRE(run_cli("run \"" + cfg.string() + "\"").code == 0);
  auto fields = csv_fields(file_lines(dir / "out" / "metrics.csv")[1]);
  CHECK(fields[1] == "none");
  CHECK(fields[2] == "1000");
  CHECK(fields[3] == "0");
  CHECK(fields[5] == "0.00");
}

TEST_CASE("cli run without a threshold key follows the bindings file", "[cli]") {
  fs::path dir = scratch_dir("run_bindings");
  fs::path bindings = dir / "bindings.json";
  REQUIRE(run_cli("table --file \"" + bindings.string() +
                  "\" set 2 tremor_suppress --threshold-mm 2.0")
              .code == 0);

  fs::path cfg = dir / "auto.cfg";
  write_text(cfg,
             "task = hold\n"
             "duration_s = 1\n"
             "bindings = " + bindings.string() + "\n" +
             "output_dir = " + (dir / "out").string() + "\n");
  REQUIRE(run_cli("run \"" + cfg.string() + "\"").code == 0);
  auto fields = csv_fields(file_lines(dir / "out" / "metrics.csv")[1]);
  CHECK(fields[1] == "2.000");
}

TEST_CASE("cli run reports config and io failures distinctly", "[cli]") {
  fs::path dir = scratch_dir("run_errors");
  CHECK(run_cli("run \"" + (dir / "missing.cfg").string() + "\"").code == 2);

  fs::path bad = dir / "bad.cfg";
  write_text(bad, "volume = 11\n");
  auto r = run_cli("run \"" + bad.string() + "\"");
  CHECK(r.code == 1);
  CHECK(r.out.find("unknown key") != std::string::npos);
}

TEST_CASE("cli decode prints every frame field", "[cli]") {
  fs::path dir = scratch_dir("decode");
  wire::Frame f;
  f.meta.sid = 7;
  f.meta.tid = 1;
  f.meta.x = wire::quantize_position(-1.23);
  f.meta.y = wire::quantize_position(0.5);
  f.meta.qw = 10000;
  f.meta.b2 = 1;
  f.meta.f = {3, 5, 0, 0, 0, 0, 0, 8, 20, 720, 12, 0, 1, 760, 3};
  wire::FrameBytes bytes = wire::encode_frame(f);

  auto r = run_cli("decode " + hex_of(bytes));
  INFO(r.out);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("sid = 7") != std::string::npos);
  CHECK(r.out.find("tid = 1") != std::string::npos);
  CHECK(r.out.find("x = -1.23 mm (raw -123)") != std::string::npos);
  CHECK(r.out.find("qw = 1.0000 (raw 10000)") != std::string::npos);
  CHECK(r.out.find("b2 = 1") != std::string::npos);
  CHECK(r.out.find("f9 = 720") != std::string::npos);
  CHECK(r.out.find("f13 = 760") != std::string::npos);
  CHECK(r.out.find("pkt_len = 0 bytes") != std::string::npos);

  // Raw binary file input decodes identically.
  fs::path raw = dir / "frame.bin";
  {
    std::ofstream out(raw, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
  }
  auto rf = run_cli("decode --file \"" + raw.string() + "\"");
  REQUIRE(rf.code == 0);
  CHECK(rf.out == r.out);

  CHECK(run_cli("decode abcd").code == 3);      // truncated frame
  CHECK(run_cli("decode zz").code == 1);        // not hex at all
}

TEST_CASE("cli table lists defaults and persists updates", "[cli]") {
  fs::path dir = scratch_dir("table");
  fs::path bindings = dir / "bindings.json";

  auto fresh = run_cli("table --file \"" + bindings.string() + "\" list");
  REQUIRE(fresh.code == 0);
  CHECK(fresh.out ==
        "tid 0: passthrough\n"
        "tid 2: tremor_suppress threshold_mm=0.500\n");
  CHECK_FALSE(fs::exists(bindings));  // list alone never writes

  REQUIRE(run_cli("table --file \"" + bindings.string() +
                  "\" set 2 tremor_suppress --threshold-mm 0.25")
              .code == 0);
  REQUIRE(run_cli("table --file \"" + bindings.string() +
                  "\" set 1 pose_correct --table table.json")
              .code == 0);
  REQUIRE(fs::exists(bindings));

  auto updated = run_cli("table --file \"" + bindings.string() + "\" list");
  CHECK(updated.out ==
        "tid 0: passthrough\n"
        "tid 1: pose_correct table=table.json\n"
        "tid 2: tremor_suppress threshold_mm=0.250\n");

  CHECK(run_cli("table --file \"" + bindings.string() + "\" set 3 magic").code == 1);
  CHECK(run_cli("table --file \"" + bindings.string() + "\" set 4 pose_correct").code == 1);
}
