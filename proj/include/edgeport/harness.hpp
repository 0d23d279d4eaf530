#pragma once

// Deterministic virtual testbed: Host1 (operator), two edge switches, and
// Host2 (teleoperator) on a chain, driven by a single discrete-event queue
// ordered by (timestamp, insertion sequence). Runs the haptic-stream
// experiments and the grip-correction round-trip scenario.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <edgeport/dataplane.hpp>
#include <edgeport/geometry.hpp>
#include <edgeport/trajgen.hpp>
#include <edgeport/wire.hpp>

namespace edgeport::harness {

class SchedulerError : public std::logic_error {
  using std::logic_error::logic_error;
};

// A run-level conservation or consistency failure.
class InvariantError : public std::logic_error {
  using std::logic_error::logic_error;
};

enum class Node { kHost1, kSwitch1, kSwitch2, kHost2 };

inline std::string_view node_name(Node n) {
  switch (n) {
    case Node::kHost1: return "Host1";
    case Node::kSwitch1: return "EdgeSwitch1";
    case Node::kSwitch2: return "EdgeSwitch2";
    case Node::kHost2: return "Host2";
  }
  throw std::logic_error("bad node");
}

struct TopologyConfig {
  uint64_t link_delay_ns = 1000;
  uint64_t switch_residence_ns = 0;
};

// Append-only text log, one line per event: "t_ns node event sid detail".
class EventLog {
 public:
  void record(uint64_t t_ns, Node node, std::string_view event, uint16_t sid,
              const std::string& detail) {
    std::ostringstream line;
    line << t_ns << ' ' << node_name(node) << ' ' << event << ' ' << sid << ' '
         << detail;
    lines_.push_back(line.str());
  }

  const std::vector<std::string>& lines() const { return lines_; }

  std::string text() const {
    std::string out;
    for (const std::string& l : lines_) {
      out += l;
      out += '\n';
    }
    return out;
  }

 private:
  std::vector<std::string> lines_;
};

namespace detail {

struct Event {
  uint64_t t_ns = 0;
  uint64_t seq = 0;
  Node dst = Node::kHost1;
  uint16_t port = 0;
  bool is_tick = false;   // source tick: the host builds its own frame
  int64_t tick_index = 0;
  wire::FrameBytes bytes{};
};

struct EventAfter {
  bool operator()(const Event& a, const Event& b) const {
    if (a.t_ns != b.t_ns) return a.t_ns > b.t_ns;
    return a.seq > b.seq;
  }
};

class Scheduler {
 public:
  void schedule_frame(uint64_t t_ns, Node dst, uint16_t port,
                      const wire::FrameBytes& bytes) {
    check_time(t_ns);
    queue_.push({t_ns, next_seq_++, dst, port, false, 0, bytes});
  }

  void schedule_tick(uint64_t t_ns, Node dst, int64_t tick_index) {
    check_time(t_ns);
    queue_.push({t_ns, next_seq_++, dst, 0, true, tick_index, {}});
  }

  std::optional<Event> pop() {
    if (queue_.empty()) return std::nullopt;
    Event e = queue_.top();
    queue_.pop();
    now_ = e.t_ns;
    return e;
  }

  uint64_t now() const { return now_; }
  bool empty() const { return queue_.empty(); }

 private:
  void check_time(uint64_t t_ns) const {
    if (t_ns < now_) {
      throw SchedulerError("event scheduled at " + std::to_string(t_ns) +
                           " ns, before current time " + std::to_string(now_) + " ns");
    }
  }

  std::priority_queue<Event, std::vector<Event>, EventAfter> queue_;
  uint64_t next_seq_ = 0;
  uint64_t now_ = 0;
};

}  // namespace detail

// The fixed chain Host1 - EdgeSwitch1 - EdgeSwitch2 - Host2. Port 0 of each
// switch faces Host1's side, port 1 faces Host2's side.
class Testbed {
 public:
  explicit Testbed(const TopologyConfig& topo)
      : topo_(topo),
        sw1_("EdgeSwitch1", topo.switch_residence_ns),
        sw2_("EdgeSwitch2", topo.switch_residence_ns) {
    sw1_.set_forward(0, 1);
    sw1_.set_forward(1, 0);
    sw2_.set_forward(0, 1);
    sw2_.set_forward(1, 0);
  }

  dataplane::Switch& switch1() { return sw1_; }
  dataplane::Switch& switch2() { return sw2_; }
  const TopologyConfig& topology() const { return topo_; }
  detail::Scheduler& scheduler() { return sched_; }

  std::function<void(const detail::Event&)> on_host1;
  std::function<void(const detail::Event&)> on_host2;
  std::function<void(Node sw, const detail::Event&, const dataplane::SwitchOutput&)>
      on_switch_output;

  // Runs the queue dry, moving frames between nodes.
  void run() {
    while (auto ev = sched_.pop()) {
      switch (ev->dst) {
        case Node::kHost1:
          if (on_host1) on_host1(*ev);
          break;
        case Node::kHost2:
          if (on_host2) on_host2(*ev);
          break;
        case Node::kSwitch1:
        case Node::kSwitch2: {
          dataplane::Switch& sw =
              ev->dst == Node::kSwitch1 ? sw1_ : sw2_;
          const dataplane::SwitchOutput out = sw.process(ev->port, ev->bytes, ev->t_ns);
          if (on_switch_output) on_switch_output(ev->dst, *ev, out);
          for (const dataplane::Emission& e : out.emissions) {
            const auto [peer, peer_port] = peer_of(ev->dst, e.egress_port);
            sched_.schedule_frame(e.egress_ts + topo_.link_delay_ns, peer, peer_port,
                                  e.bytes);
          }
          break;
        }
      }
    }
  }

  // Sends a host frame onto its access link.
  void host_send(Node host, uint64_t t_ns, const wire::FrameBytes& bytes) {
    if (host == Node::kHost1) {
      sched_.schedule_frame(t_ns + topo_.link_delay_ns, Node::kSwitch1, 0, bytes);
    } else {
      sched_.schedule_frame(t_ns + topo_.link_delay_ns, Node::kSwitch2, 1, bytes);
    }
  }

 private:
  std::pair<Node, uint16_t> peer_of(Node sw, uint16_t egress_port) const {
    if (sw == Node::kSwitch1) {
      return egress_port == 0 ? std::pair<Node, uint16_t>{Node::kHost1, 0}
                              : std::pair<Node, uint16_t>{Node::kSwitch2, 0};
    }
    return egress_port == 0 ? std::pair<Node, uint16_t>{Node::kSwitch1, 1}
                            : std::pair<Node, uint16_t>{Node::kHost2, 0};
  }

  TopologyConfig topo_;
  dataplane::Switch sw1_;
  dataplane::Switch sw2_;
  detail::Scheduler sched_;
};

struct ReceivedSample {
  uint16_t sid = 0;
  uint64_t t_ns = 0;
  double x_mm = 0;
  double y_mm = 0;
  double z_mm = 0;
  wire::TelemetryRecord telemetry;  // as stamped by the last switch
};

struct ExperimentResult {
  trajgen::TaskKind task = trajgen::TaskKind::kSpiral;
  std::optional<double> threshold_mm;
  int64_t offered = 0;
  int64_t transmitted = 0;
  int64_t discarded = 0;
  double avg_rate_kbps = 0;
  double reduction_pct = 0;
  double drawing_length_mm = 0;
  std::vector<ReceivedSample> sent;      // what Host1 put on the wire
  std::vector<ReceivedSample> received;  // what Host2 observed
};

// Frame size on the wire in bits, used for the offered/achieved rate.
inline constexpr double kFrameBits = 8.0 * wire::kFrameSize;

// Streams one task from Host1 towards Host2. A deadband threshold routes the
// stream through the tremor filter at EdgeSwitch1; no threshold sends it as
// generic traffic.
inline ExperimentResult run_experiment(const trajgen::TaskSpec& spec,
                                       const trajgen::TremorModel& tremor,
                                       std::optional<double> threshold_mm,
                                       const TopologyConfig& topo,
                                       EventLog* log = nullptr) {
  spec.validate();
  uint32_t threshold_units = 0;
  uint16_t tid = dataplane::kTidGeneric;
  if (threshold_mm) {
    if (!(*threshold_mm >= 0.0)) {
      throw std::invalid_argument("deadband threshold must be non-negative");
    }
    threshold_units = static_cast<uint32_t>(std::llround(*threshold_mm / wire::kPositionUnitMm));
    tid = dataplane::kTidTremorTask;
  }

  Testbed tb(topo);
  if (threshold_mm) {
    tb.switch1().bind(0, tid,
                      {dataplane::AlgorithmKind::kTremorSuppress, threshold_units, nullptr});
  } else {
    tb.switch1().bind(0, tid, {dataplane::AlgorithmKind::kPassthrough, 0, nullptr});
  }
  tb.switch2().bind(0, tid, {dataplane::AlgorithmKind::kPassthrough, 0, nullptr});

  const trajgen::PacketSource source(spec, tremor, tid);
  const int64_t n = source.sample_count();

  ExperimentResult result;
  result.task = spec.kind;
  result.threshold_mm = threshold_mm;

  tb.on_host1 = [&](const detail::Event& ev) {
    // Source tick: emit the next sample.
    const wire::Frame f = source.frame_at(ev.tick_index);
    ++result.offered;
    ReceivedSample sample;
    sample.sid = f.meta.sid;
    sample.t_ns = ev.t_ns;
    sample.x_mm = wire::dequantize_position(f.meta.x);
    sample.y_mm = wire::dequantize_position(f.meta.y);
    sample.z_mm = wire::dequantize_position(f.meta.z);
    result.sent.push_back(sample);
    if (log) {
      std::ostringstream d;
      d << "tid=" << f.meta.tid << " x=" << f.meta.x << " y=" << f.meta.y
        << " z=" << f.meta.z;
      log->record(ev.t_ns, Node::kHost1, "emit", f.meta.sid, d.str());
    }
    tb.host_send(Node::kHost1, ev.t_ns, wire::encode_frame(f));
  };

  tb.on_switch_output = [&](Node sw, const detail::Event& ev,
                            const dataplane::SwitchOutput& out) {
    const uint16_t sid = wire::decode_frame(ev.bytes).meta.sid;
    if (sw == Node::kSwitch1 && ev.port == 0) {
      if (out.dropped) {
        ++result.discarded;
      } else {
        ++result.transmitted;
      }
    }
    if (!log) return;
    if (out.dropped) {
      std::ostringstream d;
      d << "l1=" << out.filter_l1 << " threshold=" << threshold_units;
      log->record(ev.t_ns, sw, "drop", sid, d.str());
    } else {
      for (const dataplane::Emission& e : out.emissions) {
        std::ostringstream d;
        d << "ingress=" << ev.port << " egress=" << e.egress_port;
        if (out.filter_ran) d << " l1=" << out.filter_l1;
        log->record(ev.t_ns, sw, "forward", sid, d.str());
      }
    }
  };

  tb.on_host2 = [&](const detail::Event& ev) {
    const wire::Frame f = wire::decode_frame(ev.bytes);
    result.received.push_back({f.meta.sid, ev.t_ns, wire::dequantize_position(f.meta.x),
                               wire::dequantize_position(f.meta.y),
                               wire::dequantize_position(f.meta.z), f.telemetry});
    if (log) {
      std::ostringstream d;
      d << "x=" << f.meta.x << " y=" << f.meta.y << " z=" << f.meta.z;
      log->record(ev.t_ns, Node::kHost2, "recv", f.meta.sid, d.str());
    }
  };

  for (int64_t k = 0; k < n; ++k) {
    tb.scheduler().schedule_tick(source.timestamp_ns(k), Node::kHost1, k);
  }
  tb.run();

  if (result.transmitted + result.discarded != result.offered) {
    throw InvariantError("offered " + std::to_string(result.offered) +
                         " frames but forwarded " + std::to_string(result.transmitted) +
                         " and dropped " + std::to_string(result.discarded));
  }
  if (static_cast<int64_t>(result.received.size()) != result.transmitted) {
    throw InvariantError("Host2 received " + std::to_string(result.received.size()) +
                         " frames but EdgeSwitch1 forwarded " +
                         std::to_string(result.transmitted));
  }

  result.avg_rate_kbps =
      static_cast<double>(result.transmitted) * kFrameBits / spec.duration_s / 1000.0;
  result.reduction_pct =
      result.offered == 0
          ? 0.0
          : 100.0 * static_cast<double>(result.discarded) / static_cast<double>(result.offered);

  std::vector<std::array<double, 3>> points;
  points.reserve(result.received.size());
  for (const ReceivedSample& s : result.received) {
    points.push_back({s.x_mm, s.y_mm, s.z_mm});
  }
  result.drawing_length_mm = trajgen::drawing_length_mm(points);
  return result;
}

struct GripScenarioResult {
  int frames_sent = 0;
  int clones_applied = 0;
  bool converged = false;   // Host1 observed a CorrectGrip indicator
  int64_t converged_sid = -1;
  std::vector<uint16_t> host1_tids;  // indicator sequence seen by the operator
  dataplane::EdgeScan first_scan;
};

// One grip-correction round trip: Host2 grips a tool along the line through
// two grid cells and streams grip frames; EdgeSwitch2 inspects them, and
// correction clones steer Host2's analytic responder until the straight-grip
// indicator reaches Host1.
inline GripScenarioResult run_grip_scenario(int initial_se, int initial_es,
                                            const geometry::CorrectionTable& table,
                                            const TopologyConfig& topo,
                                            EventLog* log = nullptr,
                                            int frame_budget = 4) {
  const geometry::GridConfig& grid = table.grid();
  if (initial_se < 0 || initial_es >= grid.cell_count() || initial_se >= initial_es) {
    throw std::invalid_argument("initial contact pair outside grid");
  }
  if (frame_budget < 1) {
    throw std::invalid_argument("frame budget must be positive");
  }

  Testbed tb(topo);
  auto shared = std::make_shared<const geometry::CorrectionTable>(table);
  tb.switch2().bind(1, dataplane::kTidPoseCorrectTask,
                    {dataplane::AlgorithmKind::kPoseCorrect, 0, shared});
  for (uint16_t tid : {dataplane::kTidPoseCorrectTask, dataplane::kTidCorrectionIndicator,
                       dataplane::kTidCorrectGripIndicator, dataplane::kTidNoToolIndicator}) {
    tb.switch1().bind(1, tid, {dataplane::AlgorithmKind::kPassthrough, 0, nullptr});
  }

  // Host2's tool: a line in grid coordinates whose pressure points are the
  // two given cells. After a corrective motion the regenerated contact set
  // is every cell closer to the tool axis than a quarter of the smaller gap.
  const double contact_tol_mm = 0.25 * std::min(grid.gap_x_mm, grid.gap_y_mm);
  const uint16_t contact_reading = 700;
  geometry::Vec2 tool_point = geometry::cell_position_mm(initial_se, grid);
  const geometry::Vec2 es_pos = geometry::cell_position_mm(initial_es, grid);
  geometry::Vec2 tool_dir{es_pos.x - tool_point.x, es_pos.y - tool_point.y};
  std::vector<int> contacts{initial_se, initial_es};

  struct SentRecord {
    int16_t x = 0;
    int16_t y = 0;
    int se = 0;
  };
  std::map<uint16_t, SentRecord> sent;

  GripScenarioResult result;
  const uint64_t period_ns = 1'000'000;

  tb.on_host2 = [&](const detail::Event& ev) {
    if (ev.is_tick) {
      // Synthesize the gripper reading from the current tool pose.
      wire::Frame f;
      f.meta.sid = static_cast<uint16_t>(ev.tick_index);
      f.meta.tid = dataplane::kTidPoseCorrectTask;
      f.meta.x = wire::quantize_position(tool_point.x);
      f.meta.y = wire::quantize_position(tool_point.y);
      const double angle = std::atan2(tool_dir.y, tool_dir.x);
      f.meta.qz = wire::quantize_quaternion(std::sin(angle / 2.0));
      f.meta.qw = wire::quantize_quaternion(std::cos(angle / 2.0));
      for (int cell : contacts) {
        f.meta.f[cell] = contact_reading;
      }
      const dataplane::EdgeScan scan =
          dataplane::edge_sensors(f.meta.f, grid.threshold, grid.cell_count());
      if (result.frames_sent == 0) result.first_scan = scan;
      sent[f.meta.sid] = {f.meta.x, f.meta.y, scan.se};
      ++result.frames_sent;
      if (log) {
        std::ostringstream d;
        d << "tid=" << f.meta.tid << " se=" << scan.se << " es=" << scan.es;
        log->record(ev.t_ns, Node::kHost2, "emit", f.meta.sid, d.str());
      }
      tb.host_send(Node::kHost2, ev.t_ns, wire::encode_frame(f));
      return;
    }

    const wire::Frame f = wire::decode_frame(ev.bytes);
    if (f.meta.tid != dataplane::kTidCorrectionIndicator) return;
    const auto it = sent.find(f.meta.sid);
    if (it == sent.end()) return;

    // Invert the corrective motion: translate the tool anchor back to the
    // base cell and rotate the tool axis by the clone's in-plane angle. The
    // grid frame has y pointing down, so the world rotation -theta acts as
    // +theta here.
    const int16_t dx_units = static_cast<int16_t>(
        static_cast<uint16_t>(static_cast<uint16_t>(f.meta.x) -
                              static_cast<uint16_t>(it->second.x)));
    const int16_t dy_units = static_cast<int16_t>(
        static_cast<uint16_t>(static_cast<uint16_t>(f.meta.y) -
                              static_cast<uint16_t>(it->second.y)));
    const double dist_x = wire::dequantize_position(dx_units);
    const double dist_y = wire::dequantize_position(dy_units);
    const double theta = 2.0 * std::atan2(wire::dequantize_quaternion(f.meta.qz),
                                          wire::dequantize_quaternion(f.meta.qw));

    const geometry::Vec2 p_se = geometry::cell_position_mm(it->second.se, grid);
    tool_point = {p_se.x - dist_x, p_se.y - dist_y};
    const double c = std::cos(theta), s = std::sin(theta);
    tool_dir = {c * tool_dir.x - s * tool_dir.y, s * tool_dir.x + c * tool_dir.y};
    contacts = geometry::cells_near_line(tool_point, tool_dir, contact_tol_mm, grid);
    ++result.clones_applied;
    if (log) {
      std::ostringstream d;
      d << "dist_x=" << dx_units << " dist_y=" << dy_units
        << " theta_mdeg=" << std::llround(theta * 180.0 / M_PI * 1000.0);
      log->record(ev.t_ns, Node::kHost2, "apply", f.meta.sid, d.str());
    }
  };

  tb.on_host1 = [&](const detail::Event& ev) {
    const wire::Frame f = wire::decode_frame(ev.bytes);
    result.host1_tids.push_back(f.meta.tid);
    if (f.meta.tid == dataplane::kTidCorrectGripIndicator && !result.converged) {
      result.converged = true;
      result.converged_sid = f.meta.sid;
    }
    if (log) {
      log->record(ev.t_ns, Node::kHost1, "recv", f.meta.sid,
                  "tid=" + std::to_string(f.meta.tid));
    }
  };

  tb.on_switch_output = [&](Node sw, const detail::Event& ev,
                            const dataplane::SwitchOutput& out) {
    if (!log) return;
    const uint16_t sid = wire::decode_frame(ev.bytes).meta.sid;
    if (out.missing_entry) {
      log->record(ev.t_ns, sw, "fault", sid, "missing_entry=1");
    }
    for (const dataplane::Emission& e : out.emissions) {
      const wire::Frame ef = wire::decode_frame(e.bytes);
      const bool hairpin = e.egress_port == ev.port;
      std::ostringstream d;
      d << "ingress=" << ev.port << " egress=" << e.egress_port << " tid=" << ef.meta.tid;
      log->record(ev.t_ns, sw, hairpin ? "clone" : "forward", sid, d.str());
    }
  };

  for (int k = 0; k < frame_budget; ++k) {
    tb.scheduler().schedule_tick(static_cast<uint64_t>(k) * period_ns, Node::kHost2, k);
  }
  tb.run();
  return result;
}

}  // namespace edgeport::harness
