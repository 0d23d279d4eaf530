#include <catch2/catch_amalgamated.hpp>

#include <edgeport/trajgen.hpp>

#include <cmath>
#include <random>

using namespace edgeport;
using trajgen::TaskKind;
using trajgen::TaskSpec;
using trajgen::TremorModel;

TEST_CASE("task presets carry the experiment defaults") {
  const TaskSpec spiral = TaskSpec::defaults(TaskKind::kSpiral);
  CHECK(spiral.duration_s == 15.0);
  CHECK(spiral.path_length_mm == 600.0);
  CHECK(spiral.sample_rate_hz == 1000);
  CHECK(spiral.spiral_inner_radius_mm == 2.0);
  CHECK(spiral.spiral_pitch_mm_per_rad == 1.5);
  CHECK(spiral.sample_count() == 15000);

  const TaskSpec line = TaskSpec::defaults(TaskKind::kLine);
  CHECK(line.duration_s == 5.0);
  CHECK(line.path_length_mm == 125.0);
  CHECK(line.sample_count() == 5000);

  const TaskSpec hold = TaskSpec::defaults(TaskKind::kHold);
  CHECK(hold.duration_s == 10.0);
  CHECK(hold.sample_count() == 10000);

  CHECK(trajgen::to_string(TaskKind::kSpiral) == "spiral");
  CHECK(trajgen::task_from_string("hold") == TaskKind::kHold);
  CHECK_THROWS_AS(trajgen::task_from_string("circle"), std::invalid_argument);
}

TEST_CASE("task validation rejects degenerate windows") {
  TaskSpec s = TaskSpec::defaults(TaskKind::kLine);
  s.duration_s = 0.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);

  s = TaskSpec::defaults(TaskKind::kLine);
  s.path_length_mm = -5.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);

  s = TaskSpec::defaults(TaskKind::kSpiral);
  s.spiral_pitch_mm_per_rad = 0.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);

  s = TaskSpec::defaults(TaskKind::kHold);
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("hold stays at the start point") {
  TaskSpec s = TaskSpec::defaults(TaskKind::kHold);
  s.start_mm = {10.0, -5.0, 2.5};
  const trajgen::TrajectoryGenerator gen(s, {0.0, 1});
  for (int64_t k : {int64_t{0}, int64_t{1234}, int64_t{9999}}) {
    const auto p = gen.position_mm(k);
    CHECK(p[0] == 10.0);
    CHECK(p[1] == -5.0);
    CHECK(p[2] == 2.5);
  }
}

TEST_CASE("line advances proportionally along x") {
  const trajgen::TrajectoryGenerator gen(TaskSpec::defaults(TaskKind::kLine), {0.0, 1});
  CHECK(gen.clean_position_mm(0)[0] == Catch::Approx(0.0));
  CHECK(gen.clean_position_mm(2500)[0] == Catch::Approx(62.5));
  CHECK(gen.clean_position_mm(4999)[0] == Catch::Approx(124.975));
  CHECK(gen.clean_position_mm(4999)[1] == 0.0);
  CHECK_THROWS_AS(gen.clean_position_mm(5000), std::out_of_range);
  CHECK_THROWS_AS(gen.clean_position_mm(-1), std::out_of_range);
}

TEST_CASE("spiral matches the closed-form arc-length inversion") {
  const trajgen::TrajectoryGenerator gen(TaskSpec::defaults(TaskKind::kSpiral), {0.0, 1});

  SECTION("frozen positions along the path") {
    const auto p0 = gen.clean_position_mm(0);
    CHECK(p0[0] == Catch::Approx(2.0).margin(1e-12));  // inner radius
    CHECK(p0[1] == Catch::Approx(0.0).margin(1e-12));

    const auto p1 = gen.clean_position_mm(1);  // 0.04 mm of arc
    CHECK(p1[0] == Catch::Approx(2.0236513302447925).margin(1e-8));
    CHECK(p1[1] == Catch::Approx(0.03225759102891594).margin(1e-8));

    const auto pm = gen.clean_position_mm(7500);  // 300 mm of arc
    CHECK(pm[0] == Catch::Approx(29.34251283287131).margin(1e-8));
    CHECK(pm[1] == Catch::Approx(-6.088150554242081).margin(1e-8));

    const auto pe = gen.clean_position_mm(14999);  // 599.96 mm of arc
    CHECK(pe[0] == Catch::Approx(-9.457617078054142).margin(1e-8));
    CHECK(pe[1] == Catch::Approx(41.32435140531596).margin(1e-8));
  }

  SECTION("numeric arc-length integration agrees with the inversion") {
    // Simpson integration of the local speed sqrt(r^2 + b^2) over theta.
    const double a = 2.0, b = 1.5;
    const double theta = trajgen::detail::spiral_theta_at(300.0, a, b);
    const int n = 20000;
    const double h = theta / n;
    double sum = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double th = i * h;
      const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      const double r = a + b * th;
      sum += w * std::sqrt(r * r + b * b);
    }
    CHECK(sum * h / 3.0 == Catch::Approx(300.0).margin(1e-6));
  }

  SECTION("arc speed is constant between samples") {
    for (int64_t k : {int64_t{1}, int64_t{100}, int64_t{7499}, int64_t{14998}}) {
      const auto p = gen.clean_position_mm(k);
      const auto q = gen.clean_position_mm(k + 1);
      const double step = std::hypot(q[0] - p[0], q[1] - p[1]);
      CHECK(step == Catch::Approx(0.04).margin(1e-5));
    }
  }

  SECTION("radius grows monotonically") {
    double last = 0.0;
    for (int64_t k = 0; k < 15000; k += 50) {
      const auto p = gen.clean_position_mm(k);
      const double r = std::hypot(p[0], p[1]);
      REQUIRE(r >= last - 1e-12);
      last = r;
    }
    CHECK(last < 43.0);  // stays well inside the representable range
  }
}

TEST_CASE("tremor parameters are drawn reproducibly in a fixed order") {
  const TremorModel model{100.0, 7};
  const auto p = trajgen::TremorParams::draw(model);
  const auto q = trajgen::TremorParams::draw(model);
  CHECK(p.freq_hz == q.freq_hz);
  CHECK(p.phase_rad == q.phase_rad);
  CHECK(p.amplitude_mm == Catch::Approx(0.1));

  // Independent reference: the exact engine draw order is fx, fy, fz, px, py, pz.
  std::mt19937_64 rng(7);
  const auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  for (int axis = 0; axis < 3; ++axis) {
    REQUIRE(p.freq_hz[axis] == 8.0 + unit());
  }
  for (int axis = 0; axis < 3; ++axis) {
    REQUIRE(p.phase_rad[axis] == 2.0 * M_PI * unit());
  }

  const auto other = trajgen::TremorParams::draw({100.0, 8});
  CHECK(p.freq_hz != other.freq_hz);
}

TEST_CASE("tremor stays inside the band and the amplitude bound") {
  for (uint64_t seed = 1; seed <= 25; ++seed) {
    const auto p = trajgen::TremorParams::draw({100.0, seed});
    for (int axis = 0; axis < 3; ++axis) {
      REQUIRE(p.freq_hz[axis] >= 8.0);
      REQUIRE(p.freq_hz[axis] < 9.0);
      REQUIRE(p.phase_rad[axis] >= 0.0);
      REQUIRE(p.phase_rad[axis] < 2.0 * M_PI);
    }
    for (int i = 0; i < 100; ++i) {
      REQUIRE(std::abs(p.offset_mm(i % 3, i * 0.013)) <= 0.1 + 1e-12);
    }
  }
}

TEST_CASE("zero amplitude leaves the clean trajectory untouched") {
  const trajgen::TrajectoryGenerator gen(TaskSpec::defaults(TaskKind::kSpiral), {0.0, 3});
  for (int64_t k = 0; k < 15000; k += 977) {
    REQUIRE(gen.position_mm(k) == gen.clean_position_mm(k));
  }
}

TEST_CASE("packet source emits quantized frames with sequential SIDs") {
  TaskSpec s = TaskSpec::defaults(TaskKind::kHold);
  s.start_mm = {1.234, -2.5, 0.005};
  const trajgen::PacketSource src(s, {0.0, 1}, 2);

  const wire::Frame f = src.frame_at(3);
  CHECK(f.meta.sid == 3);
  CHECK(f.meta.tid == 2);
  CHECK(f.meta.x == 123);  // 1.234 mm quantized
  CHECK(f.meta.y == -250);
  CHECK(f.meta.z == 1);    // rounds half away from zero
  CHECK(f.meta.qw == 10000);
  CHECK(f.meta.b1 == 0);
  for (uint16_t v : f.meta.f) CHECK(v == 0);
  CHECK(src.timestamp_ns(3) == 3'000'000);

  SECTION("SIDs wrap at 16 bits") {
    TaskSpec long_hold = TaskSpec::defaults(TaskKind::kHold);
    long_hold.duration_s = 100.0;
    const trajgen::PacketSource big(long_hold, {0.0, 1}, 0);
    CHECK(big.frame_at(70000).meta.sid == 70000 % 65536);
  }
}

TEST_CASE("drawing length sums the received polyline") {
  CHECK(trajgen::drawing_length_mm({}) == 0.0);
  CHECK(trajgen::drawing_length_mm({{0, 0, 0}}) == 0.0);
  CHECK(trajgen::drawing_length_mm({{0, 0, 0}, {3, 4, 0}}) == Catch::Approx(5.0));
  CHECK(trajgen::drawing_length_mm({{0, 0, 0}, {3, 4, 0}, {3, 4, 12}}) ==
        Catch::Approx(17.0));

  SECTION("tremor lengthens a drawn line") {
    const TaskSpec s = TaskSpec::defaults(TaskKind::kLine);
    const trajgen::TrajectoryGenerator clean(s, {0.0, 1});
    const trajgen::TrajectoryGenerator noisy(s, {100.0, 1});
    std::vector<std::array<double, 3>> a, b;
    for (int64_t k = 0; k < s.sample_count(); ++k) {
      a.push_back(clean.position_mm(k));
      b.push_back(noisy.position_mm(k));
    }
    CHECK(trajgen::drawing_length_mm(a) == Catch::Approx(124.975));
    CHECK(trajgen::drawing_length_mm(b) > trajgen::drawing_length_mm(a));
  }
}
