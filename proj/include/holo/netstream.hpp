#pragma once

#include "holo/calibration.hpp"
#include "holo/display.hpp"
#include "holo/fusion.hpp"
#include "holo/geometry.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace holo {

// Framed wire format, little-endian throughout:
//   magic "HOLO" | version u8 | type u8 | payload_len u32 | payload | crc32(payload) u32
// See docs/protocol.md for the full layout.

inline constexpr std::array<std::uint8_t, 4> kWireMagic = {'H', 'O', 'L', 'O'};
inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr std::size_t kWireHeaderSize = 10;  // magic + version + type + len

enum class MsgType : std::uint8_t {
    hello = 1,
    config = 2,
    cloud = 3,
    ack = 4,
    bye = 5,
};

struct ConnectionLost : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class DecodeErrorKind { bad_magic, crc_mismatch, truncated, unknown_type };

struct DecodeError : std::runtime_error {
    DecodeError(DecodeErrorKind k, const std::string& msg)
        : std::runtime_error(msg), kind(k) {}
    DecodeErrorKind kind;
};

struct WireMessage {
    std::uint8_t version = kWireVersion;
    MsgType type = MsgType::ack;
    std::vector<std::uint8_t> payload;

    bool operator==(const WireMessage&) const = default;
};

std::vector<std::uint8_t> encode(const WireMessage& msg);

/// Decodes one complete message; throws DecodeError on bad magic, CRC
/// mismatch, truncation, or an unknown message type.
WireMessage decode(std::span<const std::uint8_t> bytes);

/// Bytes a complete frame starting at `bytes` would occupy, or 0 if the
/// header is still incomplete. Validates magic eagerly.
std::size_t frame_size(std::span<const std::uint8_t> bytes);

/// One segmented, colored cloud from one camera at one instant.
/// Payload layout: camera_id u16 | pad u16 | timestamp_us u64 | count u32 |
/// count * (x f32, y f32, z f32, r u8, g u8, b u8, pad u8).
struct CloudPacket {
    std::uint16_t camera_id = 0;
    std::uint64_t timestamp_us = 0;
    PointCloud cloud;  // camera frame, float32 precision, colors required
};

std::vector<std::uint8_t> encode_cloud_payload(const CloudPacket& packet);
CloudPacket decode_cloud_payload(std::span<const std::uint8_t> payload);

struct HelloPayload {
    std::uint16_t camera_id = 0;
};
std::vector<std::uint8_t> encode_hello_payload(const HelloPayload& hello);
HelloPayload decode_hello_payload(std::span<const std::uint8_t> payload);

struct ConfigPayload {
    std::uint32_t sync_window_us = 50000;
    std::uint32_t fps_limit_milli = 0;  // 0 = unlimited, else FPS * 1000
};
std::vector<std::uint8_t> encode_config_payload(const ConfigPayload& config);
ConfigPayload decode_config_payload(std::span<const std::uint8_t> payload);

/// Packets from all cameras that fall inside one sync window.
struct FrameGroup {
    std::uint64_t group_timestamp_us = 0;
    std::map<std::uint16_t, CloudPacket> packets;
};

/// Groups packets by timestamp window, deterministically in arrival order.
/// A group opens at the first packet's timestamp; packets within the window
/// join it (one per camera); a group closes when every expected camera has
/// reported or when a newer packet pushes past the window. Packets older
/// than the newest closed group are dropped and counted.
class FrameGrouper {
public:
    FrameGrouper(std::vector<std::uint16_t> expected_cameras, std::uint64_t window_us);

    /// Returns any groups this packet completes or times out, oldest first.
    std::vector<FrameGroup> add(CloudPacket packet);
    /// Flushes all groups still open (stream shutdown).
    std::vector<FrameGroup> flush();

    std::uint64_t dropped_late() const { return dropped_late_; }
    std::uint64_t dropped_duplicate() const { return dropped_duplicate_; }

private:
    std::vector<FrameGroup> pop_ready(bool force_all, std::uint64_t newest_ts);

    std::vector<std::uint16_t> expected_;
    std::uint64_t window_us_;
    std::vector<FrameGroup> open_;
    std::uint64_t watermark_ = 0;  // newest emitted group timestamp + 1
    std::uint64_t dropped_late_ = 0;
    std::uint64_t dropped_duplicate_ = 0;
};

struct NodeOptions {
    std::string source_dir;   // sensor sequence directory (see docs/protocol.md)
    std::string calib_path;   // rig calibration JSON
    std::string hub_address;  // host:port
    double fps_limit = 10.0;  // 0 = unthrottled
    SegmentOptions segment;
    int connect_retries = 5;
    int retry_backoff_ms = 200;
};

struct NodeStats {
    int frames_sent = 0;
    int connect_attempts = 0;
    std::uint16_t camera_id = 0;
};

/// Replays a recorded sensor sequence into the hub: handshake, one CLOUD per
/// frame (empty clouds included, as heartbeats), then BYE.
NodeStats run_node(const NodeOptions& opts);

struct HubOptions {
    std::string listen_address = ":7070";  // [host]:port; port 0 picks one
    RigCalibration rig;
    std::uint64_t sync_window_us = 50000;
    int expected_nodes = 4;
    ViewConfig view;
    CompositeLayout layout;
    std::string out_dir;  // empty: group without rendering
    int splat_radius = 2;
    /// Called once the listen socket is bound, with the actual port.
    std::function<void(std::uint16_t)> on_listening;
};

struct HubStats {
    int groups_rendered = 0;
    std::uint64_t dropped_late = 0;
    std::uint64_t dropped_duplicate = 0;
    int connections = 0;
    double wall_seconds = 0.0;
    double fps = 0.0;
};

/// Accepts `expected_nodes` connections, groups their CLOUD packets by sync
/// window, fuses each group with the rig extrinsics, and renders composites
/// to out_dir. Returns after every node has said BYE (or dropped) and all
/// pending groups are rendered. Reception, grouping+fusion, and rendering
/// run as a pipeline so a slow render never blocks the sockets.
HubStats run_hub(const HubOptions& opts);

}  // namespace holo
