#include "holo/netstream.hpp"

#include "holo/image_io.hpp"

#include <json.hpp>
#include <zlib.h>

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <thread>
#include <variant>

namespace holo {

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(v & 0xff);
    out.push_back(v >> 8);
}
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xff);
}
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back((v >> (8 * i)) & 0xff);
}
std::uint16_t get_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}
std::uint32_t get_u32(const std::uint8_t* p) {
    return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
           std::uint32_t(p[3]) << 24;
}
std::uint64_t get_u64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = v << 8 | p[i];
    return v;
}

void put_f32(std::vector<std::uint8_t>& out, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
}
float get_f32(const std::uint8_t* p) {
    const std::uint32_t bits = get_u32(p);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
}

// CRC covers everything after the magic (version, type, length, payload) so
// any header flip is caught, not just payload damage.
std::uint32_t frame_crc(const std::uint8_t* after_magic, std::size_t len) {
    return static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(after_magic),
                static_cast<uInt>(len)));
}

bool known_type(std::uint8_t t) {
    return t >= static_cast<std::uint8_t>(MsgType::hello) &&
           t <= static_cast<std::uint8_t>(MsgType::bye);
}

}  // namespace

std::vector<std::uint8_t> encode(const WireMessage& msg) {
    std::vector<std::uint8_t> out;
    out.reserve(kWireHeaderSize + msg.payload.size() + 4);
    out.insert(out.end(), kWireMagic.begin(), kWireMagic.end());
    out.push_back(msg.version);
    out.push_back(static_cast<std::uint8_t>(msg.type));
    put_u32(out, static_cast<std::uint32_t>(msg.payload.size()));
    out.insert(out.end(), msg.payload.begin(), msg.payload.end());
    put_u32(out, frame_crc(out.data() + 4, 6 + msg.payload.size()));
    return out;
}

std::size_t frame_size(std::span<const std::uint8_t> bytes) {
    const std::size_t probe = std::min<std::size_t>(bytes.size(), 4);
    for (std::size_t i = 0; i < probe; ++i)
        if (bytes[i] != kWireMagic[i])
            throw DecodeError(DecodeErrorKind::bad_magic, "wire: bad magic");
    if (bytes.size() < kWireHeaderSize) return 0;
    return kWireHeaderSize + get_u32(bytes.data() + 6) + 4;
}

WireMessage decode(std::span<const std::uint8_t> bytes) {
    const std::size_t total = frame_size(bytes);
    if (total == 0 || bytes.size() < total)
        throw DecodeError(DecodeErrorKind::truncated, "wire: incomplete frame");
    if (bytes.size() > total)
        throw DecodeError(DecodeErrorKind::truncated, "wire: frame length mismatch");

    const std::size_t payload_len = total - kWireHeaderSize - 4;
    const std::uint32_t stored = get_u32(bytes.data() + total - 4);
    if (stored != frame_crc(bytes.data() + 4, 6 + payload_len))
        throw DecodeError(DecodeErrorKind::crc_mismatch, "wire: crc mismatch");
    if (bytes[4] != kWireVersion)
        throw DecodeError(DecodeErrorKind::unknown_type, "wire: unsupported version");
    if (!known_type(bytes[5]))
        throw DecodeError(DecodeErrorKind::unknown_type, "wire: unknown message type");

    WireMessage msg;
    msg.version = bytes[4];
    msg.type = static_cast<MsgType>(bytes[5]);
    msg.payload.assign(bytes.begin() + kWireHeaderSize, bytes.begin() + total - 4);
    return msg;
}

std::vector<std::uint8_t> encode_cloud_payload(const CloudPacket& packet) {
    const std::uint32_t n = static_cast<std::uint32_t>(packet.cloud.size());
    std::vector<std::uint8_t> out;
    out.reserve(16 + std::size_t(n) * 16);
    put_u16(out, packet.camera_id);
    put_u16(out, 0);  // pad
    put_u64(out, packet.timestamp_us);
    put_u32(out, n);
    for (std::uint32_t i = 0; i < n; ++i) {
        const Vec3& p = packet.cloud.points[i];
        put_f32(out, static_cast<float>(p.x()));
        put_f32(out, static_cast<float>(p.y()));
        put_f32(out, static_cast<float>(p.z()));
        const Rgb c = packet.cloud.has_colors() ? packet.cloud.colors[i] : Rgb{255, 255, 255};
        out.push_back(c[0]);
        out.push_back(c[1]);
        out.push_back(c[2]);
        out.push_back(0);  // pad keeps records 16 bytes
    }
    return out;
}

CloudPacket decode_cloud_payload(std::span<const std::uint8_t> payload) {
    if (payload.size() < 16)
        throw DecodeError(DecodeErrorKind::truncated, "cloud payload: header short");
    CloudPacket packet;
    packet.camera_id = get_u16(payload.data());
    packet.timestamp_us = get_u64(payload.data() + 4);
    const std::uint32_t n = get_u32(payload.data() + 12);
    if (payload.size() != 16 + std::size_t(n) * 16)
        throw DecodeError(DecodeErrorKind::truncated, "cloud payload: length mismatch");
    packet.cloud.frame_id = "camera_" + std::to_string(packet.camera_id);
    packet.cloud.points.reserve(n);
    packet.cloud.colors.reserve(n);
    const std::uint8_t* rec = payload.data() + 16;
    for (std::uint32_t i = 0; i < n; ++i, rec += 16) {
        packet.cloud.points.emplace_back(get_f32(rec), get_f32(rec + 4), get_f32(rec + 8));
        packet.cloud.colors.push_back({rec[12], rec[13], rec[14]});
    }
    return packet;
}

std::vector<std::uint8_t> encode_hello_payload(const HelloPayload& hello) {
    std::vector<std::uint8_t> out;
    put_u16(out, hello.camera_id);
    return out;
}

HelloPayload decode_hello_payload(std::span<const std::uint8_t> payload) {
    if (payload.size() != 2)
        throw DecodeError(DecodeErrorKind::truncated, "hello payload: bad length");
    return {get_u16(payload.data())};
}

std::vector<std::uint8_t> encode_config_payload(const ConfigPayload& config) {
    std::vector<std::uint8_t> out;
    put_u32(out, config.sync_window_us);
    put_u32(out, config.fps_limit_milli);
    return out;
}

ConfigPayload decode_config_payload(std::span<const std::uint8_t> payload) {
    if (payload.size() != 8)
        throw DecodeError(DecodeErrorKind::truncated, "config payload: bad length");
    return {get_u32(payload.data()), get_u32(payload.data() + 4)};
}

// --------------------------------------------------------------- grouping ----

FrameGrouper::FrameGrouper(std::vector<std::uint16_t> expected_cameras,
                           std::uint64_t window_us)
    : expected_(std::move(expected_cameras)), window_us_(window_us) {}

std::vector<FrameGroup> FrameGrouper::pop_ready(bool force_all, std::uint64_t newest_ts) {
    std::vector<FrameGroup> done;
    while (!open_.empty()) {
        FrameGroup& front = open_.front();
        const bool complete = front.packets.size() == expected_.size();
        const bool timed_out =
            force_all || newest_ts > front.group_timestamp_us + window_us_;
        if (!complete && !timed_out) break;
        watermark_ = std::max(watermark_, front.group_timestamp_us + 1);
        done.push_back(std::move(front));
        open_.erase(open_.begin());
    }
    return done;
}

std::vector<FrameGroup> FrameGrouper::add(CloudPacket packet) {
    const std::uint64_t ts = packet.timestamp_us;
    bool joined = false;
    for (FrameGroup& g : open_) {
        const std::uint64_t lo =
            g.group_timestamp_us > window_us_ ? g.group_timestamp_us - window_us_ : 0;
        if (ts >= lo && ts <= g.group_timestamp_us + window_us_) {
            if (g.packets.count(packet.camera_id)) {
                ++dropped_duplicate_;
            } else {
                g.packets.emplace(packet.camera_id, std::move(packet));
            }
            joined = true;
            break;
        }
    }
    if (!joined) {
        if (ts < watermark_) {
            ++dropped_late_;
        } else {
            FrameGroup g;
            g.group_timestamp_us = ts;
            g.packets.emplace(packet.camera_id, std::move(packet));
            const auto pos = std::upper_bound(
                open_.begin(), open_.end(), g.group_timestamp_us,
                [](std::uint64_t t, const FrameGroup& o) { return t < o.group_timestamp_us; });
            open_.insert(pos, std::move(g));
        }
    }
    std::uint64_t newest = 0;
    for (const FrameGroup& g : open_)
        for (const auto& [id, p] : g.packets) newest = std::max(newest, p.timestamp_us);
    newest = std::max(newest, ts);
    return pop_ready(false, newest);
}

std::vector<FrameGroup> FrameGrouper::flush() { return pop_ready(true, 0); }

// ----------------------------------------------------------------- sockets ----

namespace {

class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    Socket(Socket&& o) noexcept : fd_(o.fd_) { o.fd_ = -1; }
    Socket& operator=(Socket&& o) noexcept {
        if (this != &o) {
            close_fd();
            fd_ = o.fd_;
            o.fd_ = -1;
        }
        return *this;
    }
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    ~Socket() { close_fd(); }

    bool valid() const { return fd_ >= 0; }
    int fd() const { return fd_; }

    void send_all(const std::uint8_t* data, std::size_t len) {
        std::size_t off = 0;
        while (off < len) {
            const ssize_t n = ::send(fd_, data + off, len - off, MSG_NOSIGNAL);
            if (n <= 0) throw ConnectionLost("send failed");
            off += static_cast<std::size_t>(n);
        }
    }

    /// Reads exactly len bytes; returns false on clean EOF before the first
    /// byte, throws on mid-read EOF or error.
    bool recv_exact(std::uint8_t* data, std::size_t len) {
        std::size_t off = 0;
        while (off < len) {
            const ssize_t n = ::recv(fd_, data + off, len - off, 0);
            if (n == 0) {
                if (off == 0) return false;
                throw ConnectionLost("connection closed mid-message");
            }
            if (n < 0) throw ConnectionLost("recv failed");
            off += static_cast<std::size_t>(n);
        }
        return true;
    }

private:
    void close_fd() {
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
    }
    int fd_ = -1;
};

std::pair<std::string, std::uint16_t> parse_address(const std::string& addr) {
    const auto colon = addr.rfind(':');
    if (colon == std::string::npos)
        throw std::invalid_argument("address must look like host:port, got " + addr);
    const std::string host = addr.substr(0, colon);
    const int port = std::stoi(addr.substr(colon + 1));
    if (port < 0 || port > 65535)
        throw std::invalid_argument("port out of range in " + addr);
    return {host, static_cast<std::uint16_t>(port)};
}

Socket connect_to(const std::string& address) {
    const auto [host, port] = parse_address(address);
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const std::string host_or_local = host.empty() ? "127.0.0.1" : host;
    if (::getaddrinfo(host_or_local.c_str(), std::to_string(port).c_str(), &hints, &res) != 0)
        throw ConnectionLost("cannot resolve " + address);
    int fd = -1;
    for (addrinfo* it = res; it; it = it->ai_next) {
        fd = ::socket(it->ai_family, it->ai_socktype, it->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, it->ai_addr, it->ai_addrlen) == 0) break;
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) throw ConnectionLost("cannot connect to " + address);
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return Socket(fd);
}

Socket listen_on(const std::string& address, std::uint16_t* bound_port) {
    const auto [host, port] = parse_address(address);
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw std::runtime_error("cannot create listen socket");
    const int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_port = htons(port);
    sa.sin_addr.s_addr = host.empty() ? htonl(INADDR_ANY) : ::inet_addr(host.c_str());
    if (::bind(fd, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0) {
        ::close(fd);
        throw std::runtime_error("cannot bind " + address);
    }
    if (::listen(fd, 16) != 0) {
        ::close(fd);
        throw std::runtime_error("cannot listen on " + address);
    }
    if (bound_port) {
        sockaddr_in actual{};
        socklen_t len = sizeof(actual);
        ::getsockname(fd, reinterpret_cast<sockaddr*>(&actual), &len);
        *bound_port = ntohs(actual.sin_port);
    }
    return Socket(fd);
}

void send_message(Socket& sock, const WireMessage& msg) {
    const std::vector<std::uint8_t> bytes = encode(msg);
    sock.send_all(bytes.data(), bytes.size());
}

std::optional<WireMessage> recv_message(Socket& sock) {
    std::vector<std::uint8_t> buf(kWireHeaderSize);
    if (!sock.recv_exact(buf.data(), buf.size())) return std::nullopt;
    const std::size_t total = frame_size(buf);
    buf.resize(total);
    if (!sock.recv_exact(buf.data() + kWireHeaderSize, total - kWireHeaderSize))
        throw ConnectionLost("connection closed mid-message");
    return decode(buf);
}

template <typename T>
class SyncQueue {
public:
    void push(T value) {
        {
            std::lock_guard lock(mutex_);
            items_.push_back(std::move(value));
        }
        cv_.notify_one();
    }
    std::optional<T> pop() {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return !items_.empty() || closed_; });
        if (items_.empty()) return std::nullopt;
        T value = std::move(items_.front());
        items_.pop_front();
        return value;
    }
    void close() {
        {
            std::lock_guard lock(mutex_);
            closed_ = true;
        }
        cv_.notify_all();
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<T> items_;
    bool closed_ = false;
};

}  // namespace

// -------------------------------------------------------------------- node ----

namespace {

struct SensorSource {
    int depth_camera_id = 0;
    int color_camera_id = 0;
    Frame background;
    std::vector<std::string> depth_paths;
    std::vector<std::string> color_paths;
};

SensorSource load_sensor_source(const std::string& dir) {
    namespace fs = std::filesystem;
    SensorSource src;
    {
        std::ifstream in(fs::path(dir) / "sensor.json");
        if (!in) throw std::runtime_error("missing sensor.json in " + dir);
        nlohmann::json doc = nlohmann::json::parse(in);
        src.depth_camera_id = doc.at("depth_camera_id").get<int>();
        src.color_camera_id = doc.at("color_camera_id").get<int>();
    }
    src.background = load_image((fs::path(dir) / "background_color.ppm").string());
    std::vector<std::string> depth_names, color_names;
    for (const auto& e : fs::directory_iterator(dir)) {
        const std::string name = e.path().filename().string();
        if (name.rfind("depth_", 0) == 0) depth_names.push_back(e.path().string());
        else if (name.rfind("color_", 0) == 0) color_names.push_back(e.path().string());
    }
    std::sort(depth_names.begin(), depth_names.end());
    std::sort(color_names.begin(), color_names.end());
    if (depth_names.size() != color_names.size() || depth_names.empty())
        throw std::runtime_error("sensor sequence is empty or unpaired in " + dir);
    src.depth_paths = std::move(depth_names);
    src.color_paths = std::move(color_names);
    return src;
}

constexpr std::uint64_t kNominalFramePeriodUs = 100000;  // capture clock, 10 FPS

}  // namespace

NodeStats run_node(const NodeOptions& opts) {
    const SensorSource src = load_sensor_source(opts.source_dir);
    const RigCalibration rig = load_rig_calibration(
        opts.calib_path.empty()
            ? (std::filesystem::path(opts.source_dir) / "rig.calib.json").string()
            : opts.calib_path);
    const CameraParams* depth_cam = rig.find(src.depth_camera_id);
    const CameraParams* color_cam = rig.find(src.color_camera_id);
    if (!depth_cam || !color_cam)
        throw std::runtime_error("node: sensor cameras missing from calibration");

    NodeStats stats;
    stats.camera_id = static_cast<std::uint16_t>(src.depth_camera_id);

    Socket sock;
    const auto connect_with_retries = [&]() {
        for (int attempt = 0;; ++attempt) {
            ++stats.connect_attempts;
            try {
                sock = connect_to(opts.hub_address);
                send_message(sock, {kWireVersion, MsgType::hello,
                                    encode_hello_payload({stats.camera_id})});
                const auto reply = recv_message(sock);
                if (!reply || reply->type != MsgType::config)
                    throw ConnectionLost("node: expected CONFIG after HELLO");
                return;
            } catch (const ConnectionLost&) {
                if (attempt >= opts.connect_retries) throw;
                std::this_thread::sleep_for(
                    std::chrono::milliseconds(opts.retry_backoff_ms * (attempt + 1)));
            }
        }
    };
    connect_with_retries();

    const auto start = std::chrono::steady_clock::now();
    for (std::size_t k = 0; k < src.depth_paths.size(); ++k) {
        const Frame depth = load_depth_pgm(src.depth_paths[k]);
        const Frame color = load_image(src.color_paths[k]);
        CloudPacket packet;
        packet.camera_id = stats.camera_id;
        packet.timestamp_us = k * kNominalFramePeriodUs;
        packet.cloud = build_foreground_cloud(depth, color, src.background, *depth_cam,
                                              *color_cam, opts.segment);
        const WireMessage msg{kWireVersion, MsgType::cloud, encode_cloud_payload(packet)};
        try {
            send_message(sock, msg);
        } catch (const ConnectionLost&) {
            connect_with_retries();
            send_message(sock, msg);
        }
        ++stats.frames_sent;
        if (opts.fps_limit > 0.0) {
            const auto next = start + std::chrono::microseconds(
                                          (k + 1) * std::uint64_t(1e6 / opts.fps_limit));
            std::this_thread::sleep_until(next);
        }
    }
    send_message(sock, {kWireVersion, MsgType::bye, {}});
    recv_message(sock);  // best-effort ACK
    return stats;
}

// --------------------------------------------------------------------- hub ----

namespace {

struct HelloEvent {
    std::uint16_t camera_id;
};
struct PacketEvent {
    CloudPacket packet;
};
struct EndEvent {};
using HubEvent = std::variant<HelloEvent, PacketEvent, EndEvent>;

}  // namespace

HubStats run_hub(const HubOptions& opts) {
    namespace fs = std::filesystem;
    if (!opts.out_dir.empty()) fs::create_directories(opts.out_dir);

    std::uint16_t port = 0;
    Socket listener = listen_on(opts.listen_address, &port);
    if (opts.on_listening) opts.on_listening(port);

    HubStats stats;
    const auto t0 = std::chrono::steady_clock::now();

    SyncQueue<HubEvent> events;
    SyncQueue<FrameGroup> render_queue;

    std::vector<std::thread> receivers;
    std::atomic<int> live_receivers{0};

    const ConfigPayload config{static_cast<std::uint32_t>(opts.sync_window_us), 0};

    for (int i = 0; i < opts.expected_nodes; ++i) {
        sockaddr_in peer{};
        socklen_t len = sizeof(peer);
        const int fd = ::accept(listener.fd(), reinterpret_cast<sockaddr*>(&peer), &len);
        if (fd < 0) continue;
        ++stats.connections;
        live_receivers.fetch_add(1);
        receivers.emplace_back([fd, &events, &live_receivers, config] {
            Socket sock(fd);
            try {
                const auto hello = recv_message(sock);
                if (hello && hello->type == MsgType::hello) {
                    events.push(HelloEvent{decode_hello_payload(hello->payload).camera_id});
                    send_message(sock, {kWireVersion, MsgType::config,
                                        encode_config_payload(config)});
                    while (auto msg = recv_message(sock)) {
                        if (msg->type == MsgType::cloud) {
                            events.push(PacketEvent{decode_cloud_payload(msg->payload)});
                        } else if (msg->type == MsgType::bye) {
                            send_message(sock, {kWireVersion, MsgType::ack, {}});
                            break;
                        }
                    }
                }
            } catch (const std::exception&) {
                // Protocol or transport failure: this node is done, the hub
                // keeps serving the others.
            }
            if (live_receivers.fetch_sub(1) == 1) events.push(EndEvent{});
        });
    }
    if (stats.connections == 0) {
        events.push(EndEvent{});
    }

    std::thread grouper_thread([&] {
        std::vector<std::uint16_t> cameras;
        std::vector<CloudPacket> early;
        std::optional<FrameGrouper> grouper;
        std::uint64_t dropped_unknown = 0;
        const int needed = std::max(stats.connections, 1);

        const auto feed = [&](CloudPacket&& p) {
            if (!opts.rig.find(p.camera_id)) {
                ++dropped_unknown;
                return;
            }
            for (FrameGroup& g : grouper->add(std::move(p)))
                render_queue.push(std::move(g));
        };

        while (auto ev = events.pop()) {
            if (std::holds_alternative<HelloEvent>(*ev)) {
                const std::uint16_t id = std::get<HelloEvent>(*ev).camera_id;
                if (std::find(cameras.begin(), cameras.end(), id) == cameras.end())
                    cameras.push_back(id);
                if (!grouper && static_cast<int>(cameras.size()) == needed) {
                    grouper.emplace(cameras, opts.sync_window_us);
                    for (CloudPacket& p : early) feed(std::move(p));
                    early.clear();
                }
            } else if (std::holds_alternative<PacketEvent>(*ev)) {
                CloudPacket p = std::move(std::get<PacketEvent>(*ev).packet);
                if (grouper) feed(std::move(p));
                else early.push_back(std::move(p));
            } else {
                break;  // EndEvent
            }
        }
        if (!grouper && !cameras.empty()) grouper.emplace(cameras, opts.sync_window_us);
        if (grouper) {
            for (CloudPacket& p : early) feed(std::move(p));
            for (FrameGroup& g : grouper->flush()) render_queue.push(std::move(g));
            stats.dropped_late = grouper->dropped_late();
            stats.dropped_duplicate = grouper->dropped_duplicate();
        }
        render_queue.close();
    });

    int frame_index = 0;
    while (auto group = render_queue.pop()) {
        std::map<int, PointCloud> clouds;
        for (auto& [camera_id, packet] : group->packets)
            clouds.emplace(camera_id, std::move(packet.cloud));
        FusedModel model = fuse(clouds, opts.rig);
        model.timestamp_us = group->group_timestamp_us;
        if (!opts.out_dir.empty()) {
            const std::array<Frame, 4> views =
                four_views(model, opts.view, opts.splat_radius);
            const Frame canvas = composite(views, opts.layout);
            char name[64];
            std::snprintf(name, sizeof(name), "composite_%06d.ppm", frame_index);
            save_ppm((fs::path(opts.out_dir) / name).string(), canvas);
        }
        ++frame_index;
        ++stats.groups_rendered;
    }

    grouper_thread.join();
    for (std::thread& t : receivers) t.join();

    const auto t1 = std::chrono::steady_clock::now();
    stats.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
    stats.fps = stats.wall_seconds > 0 ? stats.groups_rendered / stats.wall_seconds : 0.0;
    return stats;
}

}  // namespace holo
