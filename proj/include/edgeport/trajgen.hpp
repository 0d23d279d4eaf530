#pragma once

// Deterministic 1 kHz trajectory sources for the teleoperation experiments:
// an Archimedean spiral drawn at constant arc speed, a straight line, and a
// stationary hold, each with an optional sinusoidal hand-tremor overlay.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <edgeport/wire.hpp>

namespace edgeport::trajgen {

enum class TaskKind { kSpiral, kLine, kHold };

inline std::string to_string(TaskKind k) {
  switch (k) {
    case TaskKind::kSpiral: return "spiral";
    case TaskKind::kLine: return "line";
    case TaskKind::kHold: return "hold";
  }
  throw std::logic_error("bad task kind");
}

inline TaskKind task_from_string(const std::string& s) {
  if (s == "spiral") return TaskKind::kSpiral;
  if (s == "line") return TaskKind::kLine;
  if (s == "hold") return TaskKind::kHold;
  throw std::invalid_argument("unknown task '" + s + "'");
}

// Physiological tremor band is 8..9 Hz with roughly 0.1 mm excursions.
inline constexpr uint64_t kDefaultTremorSeed = 1;

struct TremorModel {
  double amplitude_um = 100.0;
  uint64_t seed = kDefaultTremorSeed;
};

namespace detail {

// 53-bit mantissa mapping of one engine draw onto [0, 1).
inline double unit_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

// Per-axis sinusoid parameters drawn once from the seed, in the fixed order
// fx, fy, fz, px, py, pz so results are reproducible across platforms.
struct TremorParams {
  std::array<double, 3> freq_hz{};
  std::array<double, 3> phase_rad{};
  double amplitude_mm = 0;

  static TremorParams draw(const TremorModel& m) {
    TremorParams p;
    p.amplitude_mm = m.amplitude_um / 1000.0;
    std::mt19937_64 rng(m.seed);
    for (int axis = 0; axis < 3; ++axis) {
      p.freq_hz[axis] = 8.0 + detail::unit_double(rng);
    }
    for (int axis = 0; axis < 3; ++axis) {
      p.phase_rad[axis] = 2.0 * M_PI * detail::unit_double(rng);
    }
    return p;
  }

  double offset_mm(int axis, double t_s) const {
    return amplitude_mm *
           std::sin(2.0 * M_PI * freq_hz[axis] * t_s + phase_rad[axis]);
  }
};

struct TaskSpec {
  TaskKind kind = TaskKind::kSpiral;
  double duration_s = 15.0;
  uint32_t sample_rate_hz = 1000;
  double path_length_mm = 600.0;
  std::array<double, 3> start_mm{0.0, 0.0, 0.0};
  double spiral_inner_radius_mm = 2.0;
  double spiral_pitch_mm_per_rad = 1.5;

  static TaskSpec defaults(TaskKind kind) {
    TaskSpec s;
    s.kind = kind;
    switch (kind) {
      case TaskKind::kSpiral:
        s.duration_s = 15.0;
        s.path_length_mm = 600.0;
        break;
      case TaskKind::kLine:
        s.duration_s = 5.0;
        s.path_length_mm = 125.0;
        break;
      case TaskKind::kHold:
        s.duration_s = 10.0;
        s.path_length_mm = 0.0;
        break;
    }
    return s;
  }

  int64_t sample_count() const {
    return std::llround(duration_s * sample_rate_hz);
  }

  void validate() const {
    if (!(duration_s > 0.0)) throw std::invalid_argument("duration must be positive");
    if (sample_rate_hz < 1) throw std::invalid_argument("sample rate must be positive");
    if (sample_count() < 1) throw std::invalid_argument("empty sample window");
    if (kind != TaskKind::kHold && !(path_length_mm > 0.0)) {
      throw std::invalid_argument("path length must be positive");
    }
    if (kind == TaskKind::kSpiral) {
      if (spiral_inner_radius_mm < 0.0 || !(spiral_pitch_mm_per_rad > 0.0)) {
        throw std::invalid_argument("bad spiral shape parameters");
      }
    }
  }
};

namespace detail {

// Arc length of r = a + b*theta from 0 to theta, closed form.
inline double spiral_arc_length(double theta, double a, double b) {
  const auto f = [](double u) { return u * std::sqrt(1.0 + u * u) + std::asinh(u); };
  const double u0 = a / b;
  return 0.5 * b * (f(u0 + theta) - f(u0));
}

// Inverts the arc length by Newton iteration; the derivative is the local
// speed sqrt(r^2 + b^2) which never vanishes for b > 0.
inline double spiral_theta_at(double s, double a, double b) {
  if (s <= 0.0) return 0.0;
  double theta = std::sqrt(2.0 * s / b);
  for (int iter = 0; iter < 100; ++iter) {
    const double g = spiral_arc_length(theta, a, b) - s;
    const double r = a + b * theta;
    const double next = theta - g / std::sqrt(r * r + b * b);
    const double clamped = next < 0.0 ? 0.0 : next;
    if (std::abs(clamped - theta) < 1e-13 * (1.0 + theta)) return clamped;
    theta = clamped;
  }
  return theta;
}

}  // namespace detail

class TrajectoryGenerator {
 public:
  TrajectoryGenerator(const TaskSpec& spec, const TremorModel& tremor)
      : spec_(spec), tremor_(TremorParams::draw(tremor)) {
    spec_.validate();
  }

  const TaskSpec& spec() const { return spec_; }
  const TremorParams& tremor() const { return tremor_; }
  int64_t sample_count() const { return spec_.sample_count(); }

  // Noise-free task position at sample k; a pure function of k.
  std::array<double, 3> clean_position_mm(int64_t k) const {
    if (k < 0 || k >= sample_count()) {
      throw std::out_of_range("sample index " + std::to_string(k) +
                              " outside the task window");
    }
    const auto& s = spec_.start_mm;
    switch (spec_.kind) {
      case TaskKind::kHold:
        return s;
      case TaskKind::kLine: {
        const double frac = static_cast<double>(k) / static_cast<double>(sample_count());
        return {s[0] + frac * spec_.path_length_mm, s[1], s[2]};
      }
      case TaskKind::kSpiral: {
        const double arc = spec_.path_length_mm * static_cast<double>(k) /
                           static_cast<double>(sample_count());
        const double a = spec_.spiral_inner_radius_mm;
        const double b = spec_.spiral_pitch_mm_per_rad;
        const double theta = detail::spiral_theta_at(arc, a, b);
        const double r = a + b * theta;
        return {s[0] + r * std::cos(theta), s[1] + r * std::sin(theta), s[2]};
      }
    }
    throw std::logic_error("bad task kind");
  }

  // Task position plus the tremor overlay.
  std::array<double, 3> position_mm(int64_t k) const {
    std::array<double, 3> p = clean_position_mm(k);
    if (tremor_.amplitude_mm != 0.0) {
      const double t = static_cast<double>(k) / spec_.sample_rate_hz;
      for (int axis = 0; axis < 3; ++axis) {
        p[axis] += tremor_.offset_mm(axis, t);
      }
    }
    return p;
  }

 private:
  TaskSpec spec_;
  TremorParams tremor_;
};

// Wraps a generator into the 1 kHz packet stream Host1 emits: sequential
// SIDs, quantized coordinates, identity orientation, idle gripper.
class PacketSource {
 public:
  PacketSource(const TaskSpec& spec, const TremorModel& tremor, uint16_t tid,
               wire::Addressing addr = {})
      : gen_(spec, tremor), tid_(tid), addr_(addr) {}

  const TrajectoryGenerator& generator() const { return gen_; }
  int64_t sample_count() const { return gen_.sample_count(); }

  uint64_t timestamp_ns(int64_t k) const {
    return static_cast<uint64_t>(k) * 1'000'000'000ull / gen_.spec().sample_rate_hz;
  }

  wire::Frame frame_at(int64_t k) const {
    const std::array<double, 3> p = gen_.position_mm(k);
    wire::Frame f;
    f.addr = addr_;
    f.meta.sid = static_cast<uint16_t>(static_cast<uint64_t>(k) & 0xFFFFu);
    f.meta.tid = tid_;
    f.meta.x = wire::quantize_position(p[0]);
    f.meta.y = wire::quantize_position(p[1]);
    f.meta.z = wire::quantize_position(p[2]);
    f.meta.qw = wire::quantize_quaternion(1.0);
    return f;
  }

 private:
  TrajectoryGenerator gen_;
  uint16_t tid_;
  wire::Addressing addr_;
};

// Polyline length of a received coordinate stream, in mm.
inline double drawing_length_mm(const std::vector<std::array<double, 3>>& points) {
  double total = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double dx = points[i][0] - points[i - 1][0];
    const double dy = points[i][1] - points[i - 1][1];
    const double dz = points[i][2] - points[i - 1][2];
    total += std::sqrt(dx * dx + dy * dy + dz * dz);
  }
  return total;
}

}  // namespace edgeport::trajgen
