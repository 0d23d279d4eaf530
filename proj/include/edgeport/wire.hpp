#pragma once

// 130-byte teleoperation frame codec. Ethernet/IPv4/UDP headers wrap a
// 26-word coordinate payload, a 22-byte switch telemetry record, and zero
// padding. Every multi-byte field is big-endian (network order).

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

namespace edgeport::wire {

inline constexpr std::size_t kFrameSize = 130;
inline constexpr std::size_t kFsrCount = 15;
inline constexpr std::size_t kPayloadWords = 26;
inline constexpr uint16_t kFsrMax = 1023;  // 10-bit force sensor reading

// Fixed-point scales: positions count 10 um steps, quaternion components
// count 1e-4 steps, both as two's-complement int16 on the wire.
inline constexpr double kPositionUnitMm = 0.01;
inline constexpr double kQuaternionUnit = 1e-4;

inline constexpr uint16_t kEthertypeIpv4 = 0x0800;
inline constexpr uint16_t kIpTotalLength = 116;  // frame minus Ethernet header
inline constexpr uint16_t kUdpLength = 96;       // UDP header + payload + padding
inline constexpr uint8_t kIpVersionIhl = 0x45;
inline constexpr uint8_t kIpTtl = 64;
inline constexpr uint8_t kIpProtocolUdp = 17;

inline constexpr std::size_t kPayloadOffset = 42;
inline constexpr std::size_t kTelemetryOffset = 94;
inline constexpr std::size_t kPaddingOffset = 116;

using FrameBytes = std::array<uint8_t, kFrameSize>;

class EncodeError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class DecodeError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a physical value does not fit its fixed-point wire field.
class RangeError : public std::out_of_range {
  using std::out_of_range::out_of_range;
};

// The 26 payload words, in wire order.
struct CoordinateMetadata {
  uint16_t sid = 0;  // stream sequence id
  uint16_t tid = 0;  // task id selecting the in-network treatment
  int16_t x = 0;     // position, 10 um units
  int16_t y = 0;
  int16_t z = 0;
  int16_t qx = 0;    // orientation quaternion, 1e-4 units
  int16_t qy = 0;
  int16_t qz = 0;
  int16_t qw = 0;
  uint16_t b1 = 0;   // button states, 0 or 1
  uint16_t b2 = 0;
  std::array<uint16_t, kFsrCount> f{};  // gripper force sensors, 0..1023

  bool operator==(const CoordinateMetadata&) const = default;
};

// Stamped by each switch on egress; offsets 94..115 of the frame.
struct TelemetryRecord {
  uint64_t ingress_ts = 0;  // ns
  uint64_t egress_ts = 0;   // ns
  uint16_t pkt_len = 0;
  uint16_t ingress_port = 0;
  uint16_t egress_port = 0;

  bool operator==(const TelemetryRecord&) const = default;
};

// Mutable addressing fields. The remaining IP/UDP header fields are fixed
// constants on encode and ignored on decode (no checksums in the emulation).
struct Addressing {
  std::array<uint8_t, 6> dst_mac{};
  std::array<uint8_t, 6> src_mac{};
  uint16_t ethertype = kEthertypeIpv4;
  uint32_t src_ip = 0;
  uint32_t dst_ip = 0;
  uint16_t src_port = 0;
  uint16_t dst_port = 0;

  bool operator==(const Addressing&) const = default;
};

struct Frame {
  Addressing addr;
  CoordinateMetadata meta;
  TelemetryRecord telemetry;

  bool operator==(const Frame&) const = default;
};

inline int16_t quantize_position(double mm) {
  if (!std::isfinite(mm)) {
    throw RangeError("position value is not finite");
  }
  const long long units = std::llround(mm / kPositionUnitMm);
  if (units < INT16_MIN || units > INT16_MAX) {
    throw RangeError("position " + std::to_string(mm) + " mm outside +/-327.68 mm");
  }
  return static_cast<int16_t>(units);
}

inline double dequantize_position(int16_t units) {
  return units * kPositionUnitMm;
}

inline int16_t quantize_quaternion(double component) {
  if (!(component >= -1.0 && component <= 1.0)) {
    throw RangeError("quaternion component " + std::to_string(component) +
                     " outside [-1, 1]");
  }
  return static_cast<int16_t>(std::llround(component / kQuaternionUnit));
}

inline double dequantize_quaternion(int16_t units) {
  return units * kQuaternionUnit;
}

namespace detail {

inline void put_u16(uint8_t* p, uint16_t v) {
  p[0] = static_cast<uint8_t>(v >> 8);
  p[1] = static_cast<uint8_t>(v);
}

inline void put_u32(uint8_t* p, uint32_t v) {
  put_u16(p, static_cast<uint16_t>(v >> 16));
  put_u16(p + 2, static_cast<uint16_t>(v));
}

inline void put_u64(uint8_t* p, uint64_t v) {
  put_u32(p, static_cast<uint32_t>(v >> 32));
  put_u32(p + 4, static_cast<uint32_t>(v));
}

inline uint16_t get_u16(const uint8_t* p) {
  return static_cast<uint16_t>((uint16_t{p[0]} << 8) | p[1]);
}

inline uint32_t get_u32(const uint8_t* p) {
  return (uint32_t{get_u16(p)} << 16) | get_u16(p + 2);
}

inline uint64_t get_u64(const uint8_t* p) {
  return (uint64_t{get_u32(p)} << 32) | get_u32(p + 4);
}

}  // namespace detail

inline FrameBytes encode_frame(const Frame& frame) {
  const CoordinateMetadata& m = frame.meta;
  if (m.b1 > 1) {
    throw EncodeError("b1 value " + std::to_string(m.b1) + " is not a button state");
  }
  if (m.b2 > 1) {
    throw EncodeError("b2 value " + std::to_string(m.b2) + " is not a button state");
  }
  for (std::size_t i = 0; i < kFsrCount; ++i) {
    if (m.f[i] > kFsrMax) {
      throw EncodeError("f" + std::to_string(i) + " value " + std::to_string(m.f[i]) +
                        " exceeds " + std::to_string(kFsrMax));
    }
  }

  FrameBytes b{};  // value-init zeroes the padding and reserved fields
  uint8_t* p = b.data();

  for (std::size_t i = 0; i < 6; ++i) p[i] = frame.addr.dst_mac[i];
  for (std::size_t i = 0; i < 6; ++i) p[6 + i] = frame.addr.src_mac[i];
  detail::put_u16(p + 12, frame.addr.ethertype);

  p[14] = kIpVersionIhl;
  detail::put_u16(p + 16, kIpTotalLength);
  p[22] = kIpTtl;
  p[23] = kIpProtocolUdp;
  detail::put_u32(p + 26, frame.addr.src_ip);
  detail::put_u32(p + 30, frame.addr.dst_ip);

  detail::put_u16(p + 34, frame.addr.src_port);
  detail::put_u16(p + 36, frame.addr.dst_port);
  detail::put_u16(p + 38, kUdpLength);

  uint8_t* q = p + kPayloadOffset;
  detail::put_u16(q + 0, m.sid);
  detail::put_u16(q + 2, m.tid);
  detail::put_u16(q + 4, static_cast<uint16_t>(m.x));
  detail::put_u16(q + 6, static_cast<uint16_t>(m.y));
  detail::put_u16(q + 8, static_cast<uint16_t>(m.z));
  detail::put_u16(q + 10, static_cast<uint16_t>(m.qx));
  detail::put_u16(q + 12, static_cast<uint16_t>(m.qy));
  detail::put_u16(q + 14, static_cast<uint16_t>(m.qz));
  detail::put_u16(q + 16, static_cast<uint16_t>(m.qw));
  detail::put_u16(q + 18, m.b1);
  detail::put_u16(q + 20, m.b2);
  for (std::size_t i = 0; i < kFsrCount; ++i) {
    detail::put_u16(q + 22 + 2 * i, m.f[i]);
  }

  uint8_t* t = p + kTelemetryOffset;
  detail::put_u64(t + 0, frame.telemetry.ingress_ts);
  detail::put_u64(t + 8, frame.telemetry.egress_ts);
  detail::put_u16(t + 16, frame.telemetry.pkt_len);
  detail::put_u16(t + 18, frame.telemetry.ingress_port);
  detail::put_u16(t + 20, frame.telemetry.egress_port);

  return b;
}

inline Frame decode_frame(std::span<const uint8_t> bytes) {
  if (bytes.size() != kFrameSize) {
    throw DecodeError("frame length " + std::to_string(bytes.size()) +
                      ", expected " + std::to_string(kFrameSize));
  }
  const uint8_t* p = bytes.data();

  Frame frame;
  for (std::size_t i = 0; i < 6; ++i) frame.addr.dst_mac[i] = p[i];
  for (std::size_t i = 0; i < 6; ++i) frame.addr.src_mac[i] = p[6 + i];
  frame.addr.ethertype = detail::get_u16(p + 12);
  frame.addr.src_ip = detail::get_u32(p + 26);
  frame.addr.dst_ip = detail::get_u32(p + 30);
  frame.addr.src_port = detail::get_u16(p + 34);
  frame.addr.dst_port = detail::get_u16(p + 36);

  const uint8_t* q = p + kPayloadOffset;
  CoordinateMetadata& m = frame.meta;
  m.sid = detail::get_u16(q + 0);
  m.tid = detail::get_u16(q + 2);
  m.x = static_cast<int16_t>(detail::get_u16(q + 4));
  m.y = static_cast<int16_t>(detail::get_u16(q + 6));
  m.z = static_cast<int16_t>(detail::get_u16(q + 8));
  m.qx = static_cast<int16_t>(detail::get_u16(q + 10));
  m.qy = static_cast<int16_t>(detail::get_u16(q + 12));
  m.qz = static_cast<int16_t>(detail::get_u16(q + 14));
  m.qw = static_cast<int16_t>(detail::get_u16(q + 16));
  m.b1 = detail::get_u16(q + 18);
  m.b2 = detail::get_u16(q + 20);
  for (std::size_t i = 0; i < kFsrCount; ++i) {
    m.f[i] = detail::get_u16(q + 22 + 2 * i);
    if (m.f[i] > kFsrMax) {
      throw DecodeError("f" + std::to_string(i) + " value " + std::to_string(m.f[i]) +
                        " exceeds " + std::to_string(kFsrMax));
    }
  }

  const uint8_t* t = p + kTelemetryOffset;
  frame.telemetry.ingress_ts = detail::get_u64(t + 0);
  frame.telemetry.egress_ts = detail::get_u64(t + 8);
  frame.telemetry.pkt_len = detail::get_u16(t + 16);
  frame.telemetry.ingress_port = detail::get_u16(t + 18);
  frame.telemetry.egress_port = detail::get_u16(t + 20);

  return frame;
}

}  // namespace edgeport::wire
