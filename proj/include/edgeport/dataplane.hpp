#pragma once

// Match-action pipeline of the edge switches: edge-sensor scan, deadband
// tremor filter over per-port registers, grip inspection with packet
// cloning, TID dispatch, and egress telemetry stamping.
//
// Arithmetic mirrors the narrow operations available on switch targets:
// coordinate differences wrap at 16 bits and absolute values are taken by
// two's-complement negation, so a difference of 0x8000 has magnitude 32768.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <edgeport/geometry.hpp>
#include <edgeport/wire.hpp>

namespace edgeport::dataplane {

// Task ids understood by the pipeline.
inline constexpr uint16_t kTidGeneric = 0;
inline constexpr uint16_t kTidPoseCorrectTask = 1;
inline constexpr uint16_t kTidTremorTask = 2;

// Task ids written by grip inspection to tell the operator side what
// happened: a correction clone, a confirmed straight grip, or no tool.
inline constexpr uint16_t kTidCorrectionIndicator = 100;
inline constexpr uint16_t kTidCorrectGripIndicator = 101;
inline constexpr uint16_t kTidNoToolIndicator = 102;

using FsrArray = std::array<uint16_t, wire::kFsrCount>;

struct EdgeScan {
  int se = 0;  // start edge: first cell in contact
  int es = 0;  // end edge: last cell in contact

  bool operator==(const EdgeScan&) const = default;
};

// Scans cells [0, cell_count). With no contact the defaults survive:
// se = cell_count - 1 and es = 0, so es <= se encodes "nothing to do".
inline EdgeScan edge_sensors(const FsrArray& f, uint16_t threshold,
                             int cell_count = static_cast<int>(wire::kFsrCount)) {
  if (cell_count < 1 || cell_count > static_cast<int>(wire::kFsrCount)) {
    throw std::invalid_argument("cell count outside sensor array");
  }
  EdgeScan scan{cell_count - 1, 0};
  for (int i = cell_count - 1; i >= 0; --i) {
    if (f[i] > threshold) scan.se = i;
  }
  for (int i = 0; i < cell_count; ++i) {
    if (f[i] > threshold) scan.es = i;
  }
  return scan;
}

enum class AlgorithmKind { kPassthrough, kTremorSuppress, kPoseCorrect };

struct AlgorithmBinding {
  AlgorithmKind kind = AlgorithmKind::kPassthrough;
  uint32_t threshold_units = 0;  // tremor deadband, 10 um coordinate units
  std::shared_ptr<const geometry::CorrectionTable> table;  // grip inspection
};

// Register state of one ingress port.
struct PortState {
  int16_t old_x = 0;  // coordinates of the last forwarded packet
  int16_t old_y = 0;
  int16_t old_z = 0;
  bool initialized = false;
  std::map<uint16_t, AlgorithmBinding> tid_params;
};

struct FilterDecision {
  bool forward = false;
  uint32_t l1 = 0;  // wrapped L1 distance to the last forwarded coordinates
};

namespace detail {

inline uint32_t wrapped_abs_diff(int16_t now, int16_t then) {
  uint16_t d = static_cast<uint16_t>(static_cast<uint16_t>(now) -
                                     static_cast<uint16_t>(then));
  if (d & 0x8000u) {
    d = static_cast<uint16_t>(~d + 1u);
    if (d == 0) return 0x8000u;  // -32768 negates to itself
  }
  return d;
}

}  // namespace detail

// Deadband filter: forward when the L1 coordinate change since the last
// forwarded packet strictly exceeds the threshold. The first packet always
// forwards and seeds the registers; registers update only on forward.
inline FilterDecision tremor_filter(const wire::CoordinateMetadata& m, PortState& state,
                                    uint32_t threshold_units) {
  if (!state.initialized) {
    state.old_x = m.x;
    state.old_y = m.y;
    state.old_z = m.z;
    state.initialized = true;
    return {true, 0};
  }
  const uint32_t l1 = detail::wrapped_abs_diff(m.x, state.old_x) +
                      detail::wrapped_abs_diff(m.y, state.old_y) +
                      detail::wrapped_abs_diff(m.z, state.old_z);
  if (l1 > threshold_units) {
    state.old_x = m.x;
    state.old_y = m.y;
    state.old_z = m.z;
    return {true, l1};
  }
  return {false, l1};
}

struct GripResult {
  wire::Frame forwarded;             // original frame, TID possibly rewritten
  std::optional<wire::Frame> clone;  // correction clone, hairpinned to ingress
  EdgeScan scan;
  bool missing_entry = false;
};

// Grip inspection: scans the force grid and matches the (se, es) contact pair
// against the correction table. A tilted tool produces a cloned frame whose
// coordinates and orientation carry the corrective motion; the special
// patterns only rewrite the TID of the original.
inline GripResult grip_inspect(const wire::Frame& in,
                               const geometry::CorrectionTable& table) {
  GripResult r;
  r.forwarded = in;
  const geometry::GridConfig& g = table.grid();
  r.scan = edge_sensors(in.meta.f, g.threshold, g.cell_count());
  if (r.scan.es <= r.scan.se) {
    return r;
  }
  const geometry::CorrectionEntry* e = table.find(r.scan.se, r.scan.es);
  if (e == nullptr) {
    r.missing_entry = true;
    return r;
  }
  switch (e->verdict) {
    case geometry::Verdict::kNoTool:
      r.forwarded.meta.tid = kTidNoToolIndicator;
      return r;
    case geometry::Verdict::kCorrectGrip:
      r.forwarded.meta.tid = kTidCorrectGripIndicator;
      return r;
    case geometry::Verdict::kCorrection:
      break;
  }

  wire::Frame clone = in;
  clone.meta.tid = kTidCorrectionIndicator;
  const int16_t dx = wire::quantize_position(e->dist_x_mm);
  const int16_t dy = wire::quantize_position(e->dist_y_mm);
  clone.meta.x = static_cast<int16_t>(
      static_cast<uint16_t>(static_cast<uint16_t>(in.meta.x) + static_cast<uint16_t>(dx)));
  clone.meta.y = static_cast<int16_t>(
      static_cast<uint16_t>(static_cast<uint16_t>(in.meta.y) + static_cast<uint16_t>(dy)));
  clone.meta.qx = wire::quantize_quaternion(e->rotation.x);
  clone.meta.qy = wire::quantize_quaternion(e->rotation.y);
  clone.meta.qz = wire::quantize_quaternion(e->rotation.z);
  clone.meta.qw = wire::quantize_quaternion(e->rotation.w);
  r.clone = clone;
  return r;
}

// Overwrites the telemetry record in place; everything else in the frame is
// untouched. Egress must not precede ingress.
inline void stamp_telemetry(wire::Frame& frame, uint64_t ingress_ts, uint64_t egress_ts,
                            uint16_t ingress_port, uint16_t egress_port) {
  if (egress_ts < ingress_ts) {
    throw std::invalid_argument("egress timestamp precedes ingress");
  }
  frame.telemetry.ingress_ts = ingress_ts;
  frame.telemetry.egress_ts = egress_ts;
  frame.telemetry.pkt_len = static_cast<uint16_t>(wire::kFrameSize);
  frame.telemetry.ingress_port = ingress_port;
  frame.telemetry.egress_port = egress_port;
}

struct Emission {
  wire::FrameBytes bytes{};
  uint16_t egress_port = 0;
  uint64_t egress_ts = 0;
};

struct SwitchOutput {
  std::vector<Emission> emissions;  // empty when the filter dropped the frame
  bool dropped = false;
  bool filter_ran = false;
  uint32_t filter_l1 = 0;
  bool cloned = false;
  bool missing_entry = false;
  bool unknown_tid = false;
  uint16_t out_tid = 0;  // TID of the forwarded original, for logging
};

// One emulated edge switch: a static port-forwarding map, per-port register
// state, per-port TID bindings, and a constant processing residence applied
// between ingress and egress timestamps.
class Switch {
 public:
  explicit Switch(std::string name, uint64_t residence_ns = 0)
      : name_(std::move(name)), residence_ns_(residence_ns) {}

  const std::string& name() const { return name_; }
  uint64_t residence_ns() const { return residence_ns_; }

  void set_forward(uint16_t ingress, uint16_t egress) { forward_[ingress] = egress; }

  PortState& port(uint16_t p) { return ports_[p]; }

  void bind(uint16_t port, uint16_t tid, AlgorithmBinding binding) {
    if (binding.kind == AlgorithmKind::kTremorSuppress && binding.table) {
      throw std::invalid_argument("tremor binding carries a correction table");
    }
    if (binding.kind == AlgorithmKind::kPoseCorrect && !binding.table) {
      throw std::invalid_argument("pose-correct binding needs a correction table");
    }
    ports_[port].tid_params[tid] = std::move(binding);
  }

  SwitchOutput process(uint16_t ingress_port, const wire::FrameBytes& bytes,
                       uint64_t now_ns) {
    const auto fwd = forward_.find(ingress_port);
    if (fwd == forward_.end()) {
      throw std::out_of_range(name_ + ": no forwarding entry for port " +
                              std::to_string(ingress_port));
    }
    const uint16_t egress_port = fwd->second;
    const uint64_t egress_ts = now_ns + residence_ns_;
    ++received_;

    wire::Frame in = wire::decode_frame(bytes);
    PortState& state = ports_[ingress_port];

    SwitchOutput out;
    const auto binding_it = state.tid_params.find(in.meta.tid);
    const AlgorithmBinding* binding = nullptr;
    if (binding_it == state.tid_params.end()) {
      out.unknown_tid = true;
      ++unknown_tids_;
    } else {
      binding = &binding_it->second;
    }

    const AlgorithmKind kind = binding ? binding->kind : AlgorithmKind::kPassthrough;
    switch (kind) {
      case AlgorithmKind::kPassthrough: {
        emit(out, in, now_ns, egress_ts, ingress_port, egress_port);
        break;
      }
      case AlgorithmKind::kTremorSuppress: {
        const FilterDecision d = tremor_filter(in.meta, state, binding->threshold_units);
        out.filter_ran = true;
        out.filter_l1 = d.l1;
        if (d.forward) {
          emit(out, in, now_ns, egress_ts, ingress_port, egress_port);
        } else {
          out.dropped = true;
          ++dropped_;
        }
        break;
      }
      case AlgorithmKind::kPoseCorrect: {
        GripResult r = grip_inspect(in, *binding->table);
        out.missing_entry = r.missing_entry;
        if (r.missing_entry) ++missing_entries_;
        emit(out, r.forwarded, now_ns, egress_ts, ingress_port, egress_port);
        if (r.clone) {
          out.cloned = true;
          ++cloned_;
          emit(out, *r.clone, now_ns, egress_ts, ingress_port, ingress_port);
        }
        break;
      }
    }
    return out;
  }

  uint64_t received() const { return received_; }
  uint64_t forwarded() const { return forwarded_; }
  uint64_t dropped() const { return dropped_; }
  uint64_t cloned() const { return cloned_; }
  uint64_t missing_entries() const { return missing_entries_; }
  uint64_t unknown_tids() const { return unknown_tids_; }

 private:
  void emit(SwitchOutput& out, wire::Frame frame, uint64_t ingress_ts, uint64_t egress_ts,
            uint16_t ingress_port, uint16_t egress_port) {
    stamp_telemetry(frame, ingress_ts, egress_ts, ingress_port, egress_port);
    if (out.emissions.empty()) out.out_tid = frame.meta.tid;
    out.emissions.push_back({wire::encode_frame(frame), egress_port, egress_ts});
    ++forwarded_;
  }

  std::string name_;
  uint64_t residence_ns_;
  std::map<uint16_t, uint16_t> forward_;
  std::map<uint16_t, PortState> ports_;
  uint64_t received_ = 0;
  uint64_t forwarded_ = 0;
  uint64_t dropped_ = 0;
  uint64_t cloned_ = 0;
  uint64_t missing_entries_ = 0;
  uint64_t unknown_tids_ = 0;
};

}  // namespace edgeport::dataplane
