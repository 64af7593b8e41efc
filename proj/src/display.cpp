#include "holo/display.hpp"

#include "holo/image_io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <future>

namespace holo {

RenderResult render_view(const FusedModel& model, const CameraParams& cam,
                         int splat_radius, Rgb background) {
    const int w = cam.intrinsics.width;
    const int h = cam.intrinsics.height;
    RenderResult out;
    out.image = Frame(w, h, 3);
    for (int i = 0; i < w * h; ++i) {
        out.image.data[3 * i + 0] = background[0];
        out.image.data[3 * i + 1] = background[1];
        out.image.data[3 * i + 2] = background[2];
    }
    out.depth.assign(static_cast<std::size_t>(w) * h,
                     std::numeric_limits<double>::infinity());

    const int r2 = splat_radius * splat_radius;
    for (std::size_t i = 0; i < model.cloud.size(); ++i) {
        const Vec3 pc = transform(cam.pose, model.cloud.points[i]);
        if (pc.z() <= 0.0) continue;
        Vec2 px;
        try {
            px = project_camera_frame(cam.intrinsics, pc);
        } catch (const BehindCamera&) {
            continue;
        }
        const long cu = std::lround(px.x());
        const long cv = std::lround(px.y());
        if (cu < -splat_radius || cv < -splat_radius || cu >= w + splat_radius ||
            cv >= h + splat_radius)
            continue;
        const Rgb color = model.cloud.has_colors() ? model.cloud.colors[i]
                                                   : Rgb{255, 255, 255};
        for (int dy = -splat_radius; dy <= splat_radius; ++dy) {
            for (int dx = -splat_radius; dx <= splat_radius; ++dx) {
                if (dx * dx + dy * dy > r2) continue;
                const long x = cu + dx;
                const long y = cv + dy;
                if (x < 0 || y < 0 || x >= w || y >= h) continue;
                const std::size_t pix = static_cast<std::size_t>(y) * w + x;
                if (pc.z() < out.depth[pix]) {
                    out.depth[pix] = pc.z();
                    out.image.data[3 * pix + 0] = color[0];
                    out.image.data[3 * pix + 1] = color[1];
                    out.image.data[3 * pix + 2] = color[2];
                }
            }
        }
    }
    return out;
}

namespace {

// Exact quarter-turn rotation about a unit axis (angle index k = 90k deg).
Mat3 quarter_turn(const Vec3& axis, int k) {
    static const double cs[4] = {1.0, 0.0, -1.0, 0.0};
    static const double sn[4] = {0.0, 1.0, 0.0, -1.0};
    const double c = cs[k & 3], s = sn[k & 3];
    Mat3 ax;
    ax << 0, -axis.z(), axis.y(), axis.z(), 0, -axis.x(), -axis.y(), axis.x(), 0;
    return c * Mat3::Identity() + s * ax + (1.0 - c) * (axis * axis.transpose());
}

}  // namespace

std::array<CameraParams, 4> four_view_cameras(const ViewConfig& config) {
    if (config.orbit_radius <= 0.0)
        throw std::invalid_argument("four_view_cameras: orbit_radius must be positive");
    const Vec3 up = config.up_axis.normalized();

    // Base camera on the orbit: pick any horizontal direction orthogonal to up.
    Vec3 seed = std::abs(up.x()) < 0.9 ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
    const Vec3 radial = (seed - seed.dot(up) * up).normalized();
    const Vec3 eye = config.look_at + config.orbit_radius * radial;
    const Vec3 forward = (config.look_at - eye).normalized();
    const Vec3 right = forward.cross(up).normalized();
    const Vec3 down = forward.cross(right);

    Pose base;
    base.rotation.row(0) = right.transpose();
    base.rotation.row(1) = down.transpose();
    base.rotation.row(2) = forward.transpose();
    base.translation = -(base.rotation * eye);

    std::array<CameraParams, 4> cams;
    for (int k = 0; k < 4; ++k) {
        // Camera k sees the world pre-rotated by -90k degrees about the up
        // axis through look_at.
        Pose world_turn;
        world_turn.rotation = quarter_turn(up, (4 - k) & 3);
        world_turn.translation = config.look_at - world_turn.rotation * config.look_at;
        cams[k] = config.virtual_camera;
        cams[k].camera_id = k;
        cams[k].pose = compose(base, world_turn);
    }
    return cams;
}

std::array<Frame, 4> four_views(const FusedModel& model, const ViewConfig& config,
                                int splat_radius) {
    const std::array<CameraParams, 4> cams = four_view_cameras(config);
    std::array<std::future<Frame>, 4> jobs;
    for (int k = 0; k < 4; ++k) {
        jobs[k] = std::async(std::launch::async, [&, k] {
            return render_view(model, cams[k], splat_radius).image;
        });
    }
    std::array<Frame, 4> views;
    for (int k = 0; k < 4; ++k) views[k] = jobs[k].get();
    return views;
}

namespace {

Frame orient(const Frame& view, const QuadrantSpec& spec) {
    const int w = view.width, h = view.height;
    const int rot = ((spec.rotation_deg % 360) + 360) % 360;
    const bool swap = rot == 90 || rot == 270;
    Frame out(swap ? h : w, swap ? w : h, view.channels);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            int sx = x, sy = y;
            switch (rot) {  // clockwise rotation: walk back to source coords
                case 0: break;
                case 90: sx = y; sy = h - 1 - x; break;
                case 180: sx = w - 1 - x; sy = h - 1 - y; break;
                case 270: sx = w - 1 - y; sy = x; break;
                default:
                    throw std::invalid_argument("composite: rotation must be a quarter turn");
            }
            for (int c = 0; c < view.channels; ++c) out.at(x, y, c) = view.at(sx, sy, c);
        }
    }
    if (spec.mirror) {
        Frame mirrored(out.width, out.height, out.channels);
        for (int y = 0; y < out.height; ++y)
            for (int x = 0; x < out.width; ++x)
                for (int c = 0; c < out.channels; ++c)
                    mirrored.at(x, y, c) = out.at(out.width - 1 - x, y, c);
        return mirrored;
    }
    return out;
}

struct Rect {
    int x, y, w, h;
    bool intersects(const Rect& o) const {
        return x < o.x + o.w && o.x < x + w && y < o.y + o.h && o.y < y + h;
    }
};

}  // namespace

CompositeLayout CompositeLayout::cross(int canvas_w, int canvas_h) {
    CompositeLayout layout;
    layout.canvas_width = canvas_w;
    layout.canvas_height = canvas_h;
    return layout;
}

Frame composite(const std::array<Frame, 4>& views, const CompositeLayout& layout) {
    for (const Frame& v : views)
        if (v.width != views[0].width || v.height != views[0].height ||
            v.channels != views[0].channels)
            throw LayoutOverflow("composite: views must share one size");
    const int s = views[0].width;
    if (views[0].height != s)
        throw LayoutOverflow("composite: views must be square");

    const int cw = layout.canvas_width, ch = layout.canvas_height;
    const int cx = cw / 2, cy = ch / 2;
    const int m = layout.margin;
    const Rect rects[4] = {
        {cx - s / 2, m, s, s},           // top
        {cw - m - s, cy - s / 2, s, s},  // right
        {cx - s / 2, ch - m - s, s, s},  // bottom
        {m, cy - s / 2, s, s},           // left
    };
    for (int i = 0; i < 4; ++i) {
        const Rect& r = rects[i];
        if (r.x < 0 || r.y < 0 || r.x + r.w > cw || r.y + r.h > ch)
            throw LayoutOverflow("composite: view does not fit the canvas");
        for (int j = i + 1; j < 4; ++j)
            if (r.intersects(rects[j]))
                throw LayoutOverflow("composite: quadrants overlap");
    }

    const QuadrantSpec specs[4] = {layout.top, layout.right, layout.bottom, layout.left};
    Frame canvas(cw, ch, 3);
    for (int i = 0; i < 4; ++i) {
        const Frame oriented = orient(views[i], specs[i]);
        for (int y = 0; y < oriented.height; ++y)
            for (int x = 0; x < oriented.width; ++x)
                for (int c = 0; c < 3; ++c)
                    canvas.at(rects[i].x + x, rects[i].y + y, c) = oriented.at(x, y, c);
    }
    return canvas;
}

StreamReport emit_stream(std::span<const FusedModel> models, const ViewConfig& config,
                         const CompositeLayout& layout, const std::string& out_dir,
                         int splat_radius) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (!fs::is_directory(out_dir))
        throw IoFailure("emit_stream: cannot create output directory " + out_dir);

    StreamReport report;
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < models.size(); ++i) {
        const auto f0 = std::chrono::steady_clock::now();
        const std::array<Frame, 4> views = four_views(models[i], config, splat_radius);
        const Frame canvas = composite(views, layout);
        char name[64];
        std::snprintf(name, sizeof(name), "composite_%06zu.ppm", i);
        save_ppm((fs::path(out_dir) / name).string(), canvas);
        const auto f1 = std::chrono::steady_clock::now();
        report.per_frame_ms.push_back(
            std::chrono::duration<double, std::milli>(f1 - f0).count());
    }
    const auto t1 = std::chrono::steady_clock::now();
    report.frames = static_cast<int>(models.size());
    report.total_seconds = std::chrono::duration<double>(t1 - t0).count();
    report.fps = report.total_seconds > 0 ? report.frames / report.total_seconds : 0.0;
    return report;
}

}  // namespace holo
