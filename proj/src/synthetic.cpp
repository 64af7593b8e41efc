#include "holo/synthetic.hpp"

#include "holo/camera_model.hpp"
#include "holo/image_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

namespace holo {

namespace {

using Rng = std::mt19937_64;

double gauss(Rng& rng) {
    static thread_local std::normal_distribution<double> dist(0.0, 1.0);
    return dist(rng);
}
double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// ------------------------------------------------------------ geometry ----

Pose look_at_pose(const Vec3& eye, const Vec3& target, const Vec3& up) {
    const Vec3 forward = (target - eye).normalized();
    const Vec3 right = forward.cross(up).normalized();
    const Vec3 down = forward.cross(right);
    Pose pose;
    pose.rotation.row(0) = right.transpose();
    pose.rotation.row(1) = down.transpose();
    pose.rotation.row(2) = forward.transpose();
    pose.translation = -(pose.rotation * eye);
    return pose;  // camera-from-world
}

struct RigTruth {
    std::vector<CameraParams> cameras;      // pose = camera-from-reference
    std::map<int, Pose> cam_from_world;     // all eight cameras
    int reference_id = 1;
};

Intrinsics depth_intrinsics(const SyntheticScene& s) {
    Intrinsics intr;
    intr.focal = s.depth_focal;
    intr.skew = 0.05;
    intr.u0 = s.depth_width / 2.0 - 0.7;
    intr.v0 = s.depth_height / 2.0 + 1.3;
    // Depth streams arrive undistorted from the sensor pipeline.
    intr.width = s.depth_width;
    intr.height = s.depth_height;
    return intr;
}

Intrinsics color_intrinsics(const SyntheticScene& s) {
    Intrinsics intr;
    intr.focal = s.color_focal;
    intr.skew = 0.10 * s.color_width / 1920.0;
    intr.u0 = s.color_width / 2.0 + 1.3;
    intr.v0 = s.color_height / 2.0 - 2.1;
    intr.radial = Vec3(0.0145, -0.0035, 1.50e-4);
    intr.tangential = Vec2(-2.21e-6, -2.04e-4);
    intr.width = s.color_width;
    intr.height = s.color_height;
    return intr;
}

RigTruth build_rig(const SyntheticScene& s) {
    RigTruth rig;
    const Vec3 target(0.0, 0.0, 0.6);
    const Pose color_from_depth{Mat3::Identity(), Vec3(-0.05, 0.0, 0.0)};

    std::map<int, CameraKind> kinds;
    for (int k = 1; k <= 4; ++k) {
        const double angle = (k - 1) * std::numbers::pi / 2.0;
        const Vec3 eye(s.orbit_radius * std::cos(angle), s.orbit_radius * std::sin(angle),
                       s.camera_height);
        const Pose depth_cfw = look_at_pose(eye, target, Vec3(0, 0, 1));
        const int depth_id = 2 * k - 1;
        const int color_id = 2 * k;
        rig.cam_from_world[depth_id] = depth_cfw;
        rig.cam_from_world[color_id] = compose(color_from_depth, depth_cfw);
        kinds[depth_id] = CameraKind::depth;
        kinds[color_id] = CameraKind::color;
    }

    const Pose world_from_ref = inverse(rig.cam_from_world.at(rig.reference_id));
    for (const auto& [id, cfw] : rig.cam_from_world) {
        CameraParams cam;
        cam.camera_id = id;
        cam.kind = kinds.at(id);
        cam.intrinsics = cam.kind == CameraKind::depth ? depth_intrinsics(s)
                                                       : color_intrinsics(s);
        cam.pose = compose(cfw, world_from_ref);
        rig.cameras.push_back(cam);
    }
    return rig;
}

// ------------------------------------------------------------ surfaces ----

struct RectPatch {
    Vec3 origin, edge_u, edge_v;
    Vec3 normal;
    Rgb color_a, color_b;
    double checker = 0.0;  // tile size along u/v in [0,1]; 0 = solid color_a

    SurfaceSample sample(double su, double sv) const {
        SurfaceSample out;
        out.p = origin + su * edge_u + sv * edge_v;
        out.n = normal;
        out.color = color_a;
        if (checker > 0.0) {
            const int iu = static_cast<int>(su / checker);
            const int iv = static_cast<int>(sv / checker);
            if ((iu + iv) % 2) out.color = color_b;
        }
        return out;
    }
};

std::vector<RectPatch> room_patches() {
    std::vector<RectPatch> room;
    room.push_back({Vec3(-1.5, -1.5, 0), Vec3(3, 0, 0), Vec3(0, 3, 0), Vec3(0, 0, 1),
                    {150, 150, 150}, {118, 118, 118}, 1.0 / 12});
    room.push_back({Vec3(-1.5, -1.5, 0), Vec3(0, 3, 0), Vec3(0, 0, 1.8), Vec3(1, 0, 0),
                    {135, 135, 140}, {135, 135, 140}, 0.0});
    room.push_back({Vec3(-1.5, -1.5, 0), Vec3(3, 0, 0), Vec3(0, 0, 1.8), Vec3(0, 1, 0),
                    {105, 108, 112}, {105, 108, 112}, 0.0});
    return room;
}

// Person silhouette in the x-z plane (meters, z up); deliberately asymmetric
// (one arm raised) so quarter-turn views are distinguishable.
const std::vector<Vec2>& person_polygon() {
    static const std::vector<Vec2> poly = {
        {-0.15, 0.00}, {0.15, 0.00},  {0.15, 0.55},  {0.32, 0.60},  {0.42, 1.05},
        {0.30, 1.10},  {0.16, 0.80},  {0.15, 1.00},  {0.09, 1.02},  {0.10, 1.28},
        {-0.10, 1.28}, {-0.09, 1.02}, {-0.15, 1.00}, {-0.20, 0.62}, {-0.16, 0.58},
        {-0.15, 0.55}};
    return poly;
}

bool point_in_polygon(const std::vector<Vec2>& poly, double x, double z) {
    bool inside = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[j];
        if ((a.y() > z) != (b.y() > z) &&
            x < (b.x() - a.x()) * (z - a.y()) / (b.y() - a.y()) + a.x())
            inside = !inside;
    }
    return inside;
}

Rgb person_color(double z) {
    if (z > 1.02) return {230, 190, 150};  // head
    if (z > 0.55) return {190, 45, 45};    // shirt
    return {45, 45, 185};                  // trousers
}

std::vector<SurfaceSample> sample_object(const SyntheticScene& s, int count, Rng& rng) {
    std::vector<SurfaceSample> out;
    out.reserve(count);
    switch (s.object) {
        case SyntheticScene::ObjectKind::box: {
            const double w = s.box_size.x(), d = s.box_size.y(), h = s.box_size.z();
            const RectPatch faces[5] = {
                {Vec3(w / 2, -d / 2, 0), Vec3(0, d, 0), Vec3(0, 0, h), Vec3(1, 0, 0),
                 {215, 60, 50}, {215, 60, 50}, 0.0},
                {Vec3(-w / 2, d / 2, 0), Vec3(0, -d, 0), Vec3(0, 0, h), Vec3(-1, 0, 0),
                 {60, 200, 70}, {60, 200, 70}, 0.0},
                {Vec3(w / 2, d / 2, 0), Vec3(-w, 0, 0), Vec3(0, 0, h), Vec3(0, 1, 0),
                 {65, 85, 220}, {65, 85, 220}, 0.0},
                {Vec3(-w / 2, -d / 2, 0), Vec3(w, 0, 0), Vec3(0, 0, h), Vec3(0, -1, 0),
                 {220, 210, 60}, {220, 210, 60}, 0.0},
                {Vec3(-w / 2, -d / 2, h), Vec3(w, 0, 0), Vec3(0, d, 0), Vec3(0, 0, 1),
                 {200, 70, 200}, {200, 70, 200}, 0.0}};
            double area = 0.0;
            double areas[5];
            for (int f = 0; f < 5; ++f) {
                areas[f] = faces[f].edge_u.norm() * faces[f].edge_v.norm();
                area += areas[f];
            }
            for (int f = 0; f < 5; ++f) {
                const int n = std::max(1, int(count * areas[f] / area));
                for (int i = 0; i < n; ++i)
                    out.push_back(faces[f].sample(uniform(rng, 0, 1), uniform(rng, 0, 1)));
            }
            break;
        }
        case SyntheticScene::ObjectKind::cylinder: {
            const double r = s.cylinder_radius, h = s.cylinder_height;
            const double lateral = 2 * std::numbers::pi * r * h;
            const double top = std::numbers::pi * r * r;
            const int n_lat = std::max(1, int(count * lateral / (lateral + top)));
            for (int i = 0; i < n_lat; ++i) {
                const double th = uniform(rng, 0, 2 * std::numbers::pi);
                const double z = uniform(rng, 0, h);
                SurfaceSample sm;
                sm.p = Vec3(r * std::cos(th), r * std::sin(th), z);
                sm.n = Vec3(std::cos(th), std::sin(th), 0);
                // Height bands only: the look must be rotation invariant.
                const int band = int(z / 0.15);
                sm.color = band % 2 ? Rgb{230, 230, 230} : Rgb{70, 110, 190};
                out.push_back(sm);
            }
            for (int i = n_lat; i < count; ++i) {
                const double th = uniform(rng, 0, 2 * std::numbers::pi);
                const double rr = r * std::sqrt(uniform(rng, 0, 1));
                SurfaceSample sm;
                sm.p = Vec3(rr * std::cos(th), rr * std::sin(th), h);
                sm.n = Vec3(0, 0, 1);
                sm.color = {230, 230, 230};
                out.push_back(sm);
            }
            break;
        }
        case SyntheticScene::ObjectKind::person: {
            const auto& poly = person_polygon();
            const double t = 0.16;  // extrusion thickness along y
            Vec2 lo(1e9, 1e9), hi(-1e9, -1e9);
            Vec2 centroid = Vec2::Zero();
            for (const Vec2& v : poly) {
                lo = lo.cwiseMin(v);
                hi = hi.cwiseMax(v);
                centroid += v;
            }
            centroid /= double(poly.size());
            const int n_faces = count * 2 / 3;
            int placed = 0;
            while (placed < n_faces) {
                const double x = uniform(rng, lo.x(), hi.x());
                const double z = uniform(rng, lo.y(), hi.y());
                if (!point_in_polygon(poly, x, z)) continue;
                SurfaceSample sm;
                const bool front = placed % 2 == 0;
                sm.p = Vec3(x, front ? t / 2 : -t / 2, z);
                sm.n = Vec3(0, front ? 1 : -1, 0);
                sm.color = person_color(z);
                out.push_back(sm);
                ++placed;
            }
            double perimeter = 0.0;
            for (std::size_t i = 0; i < poly.size(); ++i)
                perimeter += (poly[(i + 1) % poly.size()] - poly[i]).norm();
            const int n_side = count - n_faces;
            for (int i = 0; i < n_side; ++i) {
                double d = uniform(rng, 0, perimeter);
                std::size_t e = 0;
                while (true) {
                    const double len = (poly[(e + 1) % poly.size()] - poly[e]).norm();
                    if (d <= len || e + 1 == poly.size()) break;
                    d -= len;
                    ++e;
                }
                const Vec2& a = poly[e];
                const Vec2& b = poly[(e + 1) % poly.size()];
                const Vec2 dir = (b - a).normalized();
                const Vec2 at = a + d * dir;
                Vec2 n2(dir.y(), -dir.x());
                if (n2.dot(at - centroid) < 0) n2 = -n2;
                SurfaceSample sm;
                sm.p = Vec3(at.x(), uniform(rng, -t / 2, t / 2), at.y());
                sm.n = Vec3(n2.x(), 0, n2.y());
                sm.color = person_color(at.y());
                out.push_back(sm);
            }
            break;
        }
    }
    return out;
}

std::vector<SurfaceSample> sample_room(int count, Rng& rng) {
    std::vector<SurfaceSample> out;
    out.reserve(count);
    const std::vector<RectPatch> room = room_patches();
    double area = 0.0;
    std::vector<double> areas;
    for (const RectPatch& p : room) {
        areas.push_back(p.edge_u.norm() * p.edge_v.norm());
        area += areas.back();
    }
    for (std::size_t f = 0; f < room.size(); ++f) {
        const int n = std::max(1, int(count * areas[f] / area));
        for (int i = 0; i < n; ++i)
            out.push_back(room[f].sample(uniform(rng, 0, 1), uniform(rng, 0, 1)));
    }
    return out;
}

// ------------------------------------------------------------ rendering ----

struct DepthColorBuffers {
    Frame depth;  // meters; 0 = no return
    Frame color;
};

// Exact ray casts against the room planes; object samples are splatted on
// top by the caller.
DepthColorBuffers raycast_room(const CameraParams& cam_world /*pose=cam-from-world*/) {
    const Intrinsics& intr = cam_world.intrinsics;
    DepthColorBuffers buf;
    buf.depth = Frame(intr.width, intr.height, 1, 0.0f);
    buf.color = Frame(intr.width, intr.height, 3, 0.0f);
    for (int i = 0; i < intr.width * intr.height; ++i) {
        buf.color.data[3 * i + 0] = 18.0f;
        buf.color.data[3 * i + 1] = 18.0f;
        buf.color.data[3 * i + 2] = 22.0f;
    }

    const std::vector<RectPatch> room = room_patches();
    const Mat3 r_wc = cam_world.pose.rotation.transpose();
    const Vec3 eye = -(r_wc * cam_world.pose.translation);

    for (int v = 0; v < intr.height; ++v) {
        for (int u = 0; u < intr.width; ++u) {
            const double yd = (v - intr.v0) / intr.focal;
            const double xd = (u - intr.u0 - intr.skew * yd) / intr.focal;
            Vec2 n(xd, yd);
            if (intr.has_distortion()) {
                try {
                    n = undistort_normalized(intr, n);
                } catch (const NoConvergence&) {
                    continue;
                }
            }
            const Vec3 dir_world = r_wc * Vec3(n.x(), n.y(), 1.0);
            double best_t = std::numeric_limits<double>::infinity();
            Rgb best_color{0, 0, 0};
            for (const RectPatch& patch : room) {
                const double denom = patch.normal.dot(dir_world);
                if (std::abs(denom) < 1e-12) continue;
                const double t = patch.normal.dot(patch.origin - eye) / denom;
                if (t <= 0.05 || t >= best_t) continue;
                const Vec3 hit = eye + t * dir_world;
                const Vec3 rel = hit - patch.origin;
                const double su = rel.dot(patch.edge_u) / patch.edge_u.squaredNorm();
                const double sv = rel.dot(patch.edge_v) / patch.edge_v.squaredNorm();
                if (su < 0 || su > 1 || sv < 0 || sv > 1) continue;
                best_t = t;
                best_color = patch.sample(su, sv).color;
            }
            if (!std::isfinite(best_t)) continue;
            // Camera-frame depth of the hit: the ray direction has unit z in
            // camera coordinates, so t is the depth directly.
            buf.depth.at(u, v) = static_cast<float>(best_t);
            buf.color.at(u, v, 0) = best_color[0];
            buf.color.at(u, v, 1) = best_color[1];
            buf.color.at(u, v, 2) = best_color[2];
        }
    }
    return buf;
}

void splat_samples(DepthColorBuffers& buf, const CameraParams& cam_world,
                   const std::vector<SurfaceSample>& samples, const Mat3& turn,
                   double depth_sigma, Rng& rng) {
    const Intrinsics& intr = cam_world.intrinsics;
    const Mat3 r_wc = cam_world.pose.rotation.transpose();
    const Vec3 eye = -(r_wc * cam_world.pose.translation);
    for (const SurfaceSample& sm : samples) {
        const Vec3 p = turn * sm.p;
        const Vec3 n = turn * sm.n;
        if (n.dot(eye - p) <= 0.0) continue;  // back side
        Vec3 pc = transform(cam_world.pose, p);
        if (pc.z() <= 0.1) continue;
        if (depth_sigma > 0.0) pc += depth_sigma * gauss(rng) * pc.normalized();
        Vec2 px;
        try {
            px = project_camera_frame(intr, pc);
        } catch (const BehindCamera&) {
            continue;
        }
        const long cu = std::lround(px.x());
        const long cv = std::lround(px.y());
        for (long dy = -1; dy <= 1; ++dy) {
            for (long dx = -1; dx <= 1; ++dx) {
                if (dx * dx + dy * dy > 1) continue;
                const long x = cu + dx, y = cv + dy;
                if (x < 0 || y < 0 || x >= intr.width || y >= intr.height) continue;
                const float old = buf.depth.at(x, y);
                if (old > 0.0f && old <= float(pc.z())) continue;
                buf.depth.at(x, y) = static_cast<float>(pc.z());
                buf.color.at(x, y, 0) = sm.color[0];
                buf.color.at(x, y, 1) = sm.color[1];
                buf.color.at(x, y, 2) = sm.color[2];
            }
        }
    }
}

}  // namespace

PointCloud sample_object_cloud(const SyntheticScene& scene, int count, std::uint64_t seed) {
    Rng rng(seed);
    const std::vector<SurfaceSample> samples = sample_object(scene, count, rng);
    PointCloud cloud;
    cloud.frame_id = "world";
    cloud.points.reserve(samples.size());
    cloud.colors.reserve(samples.size());
    for (const SurfaceSample& sm : samples) {
        cloud.points.push_back(sm.p);
        cloud.colors.push_back(sm.color);
    }
    return cloud;
}

GeneratedScene generate_scene(const SyntheticScene& scene) {
    Rng rng(scene.seed);
    GeneratedScene out;

    const RigTruth rig = build_rig(scene);
    out.truth.reference_camera_id = rig.reference_id;
    out.truth.cameras = rig.cameras;
    out.truth.rmse.assign(rig.cameras.size(), 0.0);
    out.truth.created_at = "synthetic";

    // Wand sweep: every camera observes every frame in its own coordinates.
    out.session.reference_camera_id = rig.reference_id;
    out.session.wand = WandSpec{};
    for (int f = 0; f < scene.wand_frames; ++f) {
        const Vec3 center(uniform(rng, -0.45, 0.45), uniform(rng, -0.45, 0.45),
                          uniform(rng, 0.35, 1.30));
        Vec3 dir(gauss(rng), gauss(rng), gauss(rng));
        while (dir.norm() < 1e-6) dir = Vec3(gauss(rng), gauss(rng), gauss(rng));
        dir.normalize();
        const double half = out.session.wand.length / 2.0;
        const Vec3 a = center - half * dir;
        const Vec3 c = center + half * dir;
        const Vec3 b = center + (out.session.wand.b_fraction - 0.5) *
                                    out.session.wand.length * dir;
        for (const auto& [id, cfw] : rig.cam_from_world) {
            WandObservation obs;
            obs.camera_id = id;
            obs.frame_index = f;
            obs.a = transform(cfw, a);
            obs.b = transform(cfw, b);
            obs.c = transform(cfw, c);
            if (scene.marker_sigma > 0.0) {
                for (Vec3* m : {&obs.a, &obs.b, &obs.c})
                    *m += scene.marker_sigma * Vec3(gauss(rng), gauss(rng), gauss(rng));
            }
            out.session.observations[id].push_back(obs);
        }
    }

    // Calibration captures: one shared world sample pool so cross-camera
    // nearest neighbors land on the same physical points.
    std::vector<SurfaceSample> pool = sample_room(scene.capture_points * 11 / 6, rng);
    {
        const std::vector<SurfaceSample> object =
            sample_object(scene, scene.capture_points / 2, rng);
        pool.insert(pool.end(), object.begin(), object.end());
    }
    for (const CameraParams& cam : rig.cameras) {
        const Pose& cfw = rig.cam_from_world.at(cam.camera_id);
        const Mat3 r_wc = cfw.rotation.transpose();
        const Vec3 eye = -(r_wc * cfw.translation);
        CameraCapture cap;
        cap.kind = cam.kind;
        cap.width = cam.intrinsics.width;
        cap.height = cam.intrinsics.height;
        cap.cloud.frame_id = "camera_" + std::to_string(cam.camera_id);
        for (const SurfaceSample& sm : pool) {
            if (sm.n.dot(eye - sm.p) <= 1e-9) continue;
            const Vec3 pc = transform(cfw, sm.p);
            if (pc.z() <= 0.2) continue;
            Vec2 px;
            try {
                px = project_camera_frame(cam.intrinsics, pc);
            } catch (const BehindCamera&) {
                continue;
            }
            if (px.x() < 0 || px.y() < 0 || px.x() > cam.intrinsics.width - 1 ||
                px.y() > cam.intrinsics.height - 1)
                continue;
            Vec3 measured = pc;
            if (scene.depth_sigma > 0.0)
                measured += scene.depth_sigma * gauss(rng) * pc.normalized();
            Vec2 pixel = px;
            if (scene.pixel_sigma > 0.0)
                pixel += scene.pixel_sigma * Vec2(gauss(rng), gauss(rng));
            cap.cloud.points.push_back(measured);
            cap.pixels.push_back(pixel);
        }
        out.captures.emplace(cam.camera_id, std::move(cap));
    }

    // Static per-sensor state for on-demand frame rendering.
    out.desc = scene;
    out.object_samples = sample_object(scene, 60000, rng);
    for (int k = 1; k <= 4; ++k) {
        SensorSetup setup;
        setup.sensor_index = k;
        setup.depth_camera_id = 2 * k - 1;
        setup.color_camera_id = 2 * k;
        setup.depth_world.intrinsics = depth_intrinsics(scene);
        setup.depth_world.pose = rig.cam_from_world.at(setup.depth_camera_id);
        setup.color_world.intrinsics = color_intrinsics(scene);
        setup.color_world.pose = rig.cam_from_world.at(setup.color_camera_id);

        const DepthColorBuffers bg_depth_cam = raycast_room(setup.depth_world);
        DepthColorBuffers bg_color_cam = raycast_room(setup.color_world);
        setup.bg_depthcam_depth = bg_depth_cam.depth;
        setup.bg_colorcam_depth = std::move(bg_color_cam.depth);
        setup.bg_colorcam_color = std::move(bg_color_cam.color);
        out.sensors.push_back(std::move(setup));
    }
    return out;
}

std::pair<Frame, Frame> render_sensor_frame(const GeneratedScene& scene,
                                            int sensor_index, int frame) {
    const SensorSetup* setup = nullptr;
    for (const SensorSetup& s : scene.sensors)
        if (s.sensor_index == sensor_index) setup = &s;
    if (!setup) throw std::invalid_argument("render_sensor_frame: no such sensor");

    const double angle = frame * scene.desc.object_turn_deg_per_frame *
                         std::numbers::pi / 180.0;
    Mat3 turn;
    turn << std::cos(angle), -std::sin(angle), 0, std::sin(angle), std::cos(angle), 0,
        0, 0, 1;

    Rng rng(scene.desc.seed * 1000003ULL + std::uint64_t(sensor_index) * 131071ULL +
            std::uint64_t(frame) * 2ULL + 1ULL);

    DepthColorBuffers d;
    d.depth = setup->bg_depthcam_depth;
    d.color = Frame(d.depth.width, d.depth.height, 3);
    splat_samples(d, setup->depth_world, scene.object_samples, turn,
                  scene.desc.depth_sigma, rng);

    DepthColorBuffers c;
    c.depth = setup->bg_colorcam_depth;
    c.color = setup->bg_colorcam_color;
    splat_samples(c, setup->color_world, scene.object_samples, turn,
                  scene.desc.depth_sigma, rng);
    return {std::move(d.depth), std::move(c.color)};
}

// -------------------------------------------------------------- file I/O ----

void save_capture_csv(const std::string& path, const CameraCapture& capture) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "u,v,x,y,z\n";
    out.precision(17);
    for (std::size_t i = 0; i < capture.cloud.size(); ++i) {
        const Vec2& px = capture.pixels[i];
        const Vec3& p = capture.cloud.points[i];
        out << px.x() << ',' << px.y() << ',' << p.x() << ',' << p.y() << ',' << p.z()
            << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

CameraCapture load_capture_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    CameraCapture cap;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line.rfind("u,", 0) == 0) continue;
        }
        double v[5];
        std::size_t pos = 0;
        for (int i = 0; i < 5; ++i) {
            const std::size_t next = line.find(',', pos);
            v[i] = std::stod(line.substr(pos, next - pos));
            pos = next == std::string::npos ? line.size() : next + 1;
        }
        cap.pixels.emplace_back(v[0], v[1]);
        cap.cloud.points.emplace_back(v[2], v[3], v[4]);
    }
    return cap;
}

void save_captures(const std::string& dir, const std::map<int, CameraCapture>& captures) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::json manifest;
    manifest["cameras"] = nlohmann::json::array();
    for (const auto& [id, cap] : captures) {
        const std::string file = "cam" + std::to_string(id) + ".csv";
        save_capture_csv((fs::path(dir) / file).string(), cap);
        manifest["cameras"].push_back({{"id", id},
                                       {"kind", to_string(cap.kind)},
                                       {"width", cap.width},
                                       {"height", cap.height},
                                       {"file", file}});
    }
    std::ofstream out(fs::path(dir) / "captures.json");
    out << manifest.dump(2) << '\n';
}

std::map<int, CameraCapture> load_captures(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream in(fs::path(dir) / "captures.json");
    if (!in) throw std::runtime_error("missing captures.json in " + dir);
    const nlohmann::json manifest = nlohmann::json::parse(in);
    std::map<int, CameraCapture> out;
    for (const auto& jc : manifest.at("cameras")) {
        CameraCapture cap = load_capture_csv(
            (fs::path(dir) / jc.at("file").get<std::string>()).string());
        cap.kind = camera_kind_from_string(jc.at("kind").get<std::string>());
        cap.width = jc.at("width").get<int>();
        cap.height = jc.at("height").get<int>();
        const int id = jc.at("id").get<int>();
        cap.cloud.frame_id = "camera_" + std::to_string(id);
        out.emplace(id, std::move(cap));
    }
    return out;
}

void write_scene(const GeneratedScene& scene, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(out_dir) / "truth");
    save_rig_calibration((fs::path(out_dir) / "truth" / "rig.calib.json").string(),
                         scene.truth);

    // Factory defaults: plausible but deliberately off, zero distortion.
    RigCalibration factory = scene.truth;
    factory.created_at = "factory";
    for (CameraParams& cam : factory.cameras) {
        cam.intrinsics.focal *= 1.02;
        cam.intrinsics.skew = 0.0;
        cam.intrinsics.u0 += 3.0;
        cam.intrinsics.v0 -= 2.0;
        cam.intrinsics.radial.setZero();
        cam.intrinsics.tangential.setZero();
    }
    std::fill(factory.rmse.begin(), factory.rmse.end(), 0.0);
    save_rig_calibration((fs::path(out_dir) / "factory.calib.json").string(), factory);

    save_wand_csv((fs::path(out_dir) / "wand.csv").string(), scene.session.observations);
    save_captures((fs::path(out_dir) / "captures").string(), scene.captures);

    for (const SensorSetup& setup : scene.sensors) {
        const fs::path dir =
            fs::path(out_dir) / "seq" / ("sensor" + std::to_string(setup.sensor_index));
        fs::create_directories(dir);
        nlohmann::json meta{{"depth_camera_id", setup.depth_camera_id},
                            {"color_camera_id", setup.color_camera_id}};
        std::ofstream(dir / "sensor.json") << meta.dump(2) << '\n';
        save_ppm((dir / "background_color.ppm").string(), setup.bg_colorcam_color);
        save_depth_pgm((dir / "background_depth.pgm").string(), setup.bg_depthcam_depth);
        for (int f = 0; f < scene.desc.sequence_frames; ++f) {
            const auto [depth, color] = render_sensor_frame(scene, setup.sensor_index, f);
            char name[64];
            std::snprintf(name, sizeof(name), "depth_%06d.pgm", f);
            save_depth_pgm((dir / name).string(), depth);
            std::snprintf(name, sizeof(name), "color_%06d.ppm", f);
            save_ppm((dir / name).string(), color);
        }
    }
}

BoundingBox robust_bounds(const PointCloud& cloud) {
    BoundingBox box{Vec3::Zero(), Vec3::Zero()};
    if (cloud.empty()) return box;
    std::vector<double> axis(cloud.size());
    for (int a = 0; a < 3; ++a) {
        for (std::size_t i = 0; i < cloud.size(); ++i) axis[i] = cloud.points[i](a);
        std::sort(axis.begin(), axis.end());
        const std::size_t n = axis.size();
        const double q_lo = axis[static_cast<std::size_t>(0.01 * (n - 1))];
        const double q_hi = axis[static_cast<std::size_t>(0.99 * (n - 1))];
        const auto face_median = [&](double anchor, bool low) {
            std::vector<double> band;
            for (double v : axis)
                if (low ? v <= anchor + 0.01 : v >= anchor - 0.01) band.push_back(v);
            std::nth_element(band.begin(), band.begin() + band.size() / 2, band.end());
            return band[band.size() / 2];
        };
        box.lo(a) = face_median(q_lo, true);
        box.hi(a) = face_median(q_hi, false);
    }
    return box;
}

}  // namespace holo
