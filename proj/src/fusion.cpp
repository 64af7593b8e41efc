#include "holo/fusion.hpp"

#include <cmath>

namespace holo {

PointCloud backproject(const Frame& depth_m, const SegMask& mask, const CameraParams& cam,
                       std::vector<Vec2>* pixels) {
    if (depth_m.channels != 1)
        throw DimensionMismatch("backproject: depth frame must be single channel");
    if (mask.width != depth_m.width || mask.height != depth_m.height)
        throw DimensionMismatch("backproject: mask does not match depth frame");

    const Intrinsics& intr = cam.intrinsics;
    const bool distorted = intr.has_distortion();
    PointCloud cloud;
    cloud.frame_id = "camera_" + std::to_string(cam.camera_id);
    if (pixels) pixels->clear();

    for (int v = 0; v < depth_m.height; ++v) {
        for (int u = 0; u < depth_m.width; ++u) {
            if (!mask.at(u, v)) continue;
            const double z = depth_m.at(u, v);
            if (z <= 0.0) continue;  // holes carry no geometry
            const double yd = (v - intr.v0) / intr.focal;
            const double xd = (u - intr.u0 - intr.skew * yd) / intr.focal;
            Vec2 n(xd, yd);
            if (distorted) n = undistort_normalized(intr, n);
            cloud.points.emplace_back(n.x() * z, n.y() * z, z);
            if (pixels) pixels->emplace_back(u, v);
        }
    }
    return cloud;
}

ColorizeResult colorize(const PointCloud& cloud, const Frame& color_frame,
                        const CameraParams& color_cam, Rgb fallback) {
    ColorizeResult out;
    out.cloud = cloud;
    out.cloud.colors.assign(cloud.size(), fallback);
    out.in_image.assign(cloud.size(), 0);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        Vec2 px;
        try {
            px = project(color_cam, cloud.points[i]);
        } catch (const BehindCamera&) {
            continue;
        }
        const long u = std::lround(px.x());
        const long v = std::lround(px.y());
        if (u < 0 || v < 0 || u >= color_frame.width || v >= color_frame.height) continue;
        out.in_image[i] = 1;
        if (color_frame.channels == 3) {
            out.cloud.colors[i] = {
                static_cast<std::uint8_t>(std::clamp(std::lround(color_frame.at(u, v, 0)), 0L, 255L)),
                static_cast<std::uint8_t>(std::clamp(std::lround(color_frame.at(u, v, 1)), 0L, 255L)),
                static_cast<std::uint8_t>(std::clamp(std::lround(color_frame.at(u, v, 2)), 0L, 255L))};
        } else {
            const auto g = static_cast<std::uint8_t>(
                std::clamp(std::lround(color_frame.at(u, v, 0)), 0L, 255L));
            out.cloud.colors[i] = {g, g, g};
        }
    }
    return out;
}

FusedModel fuse(const std::map<int, PointCloud>& clouds, const RigCalibration& rig) {
    FusedModel model;
    model.cloud.frame_id = "reference";
    for (const auto& [camera_id, cloud] : clouds) {  // std::map iterates in id order
        const CameraParams* cam = rig.find(camera_id);
        if (!cam)
            throw UnknownCamera("fuse: camera " + std::to_string(camera_id) +
                                " is not in the rig calibration");
        const Pose ref_from_cam = inverse(cam->pose);
        const PointCloud aligned = apply_pose(ref_from_cam, cloud, "reference");
        model.cloud.points.insert(model.cloud.points.end(), aligned.points.begin(),
                                  aligned.points.end());
        if (aligned.has_colors()) {
            model.cloud.colors.insert(model.cloud.colors.end(), aligned.colors.begin(),
                                      aligned.colors.end());
        } else {
            model.cloud.colors.insert(model.cloud.colors.end(), aligned.size(),
                                      Rgb{255, 255, 255});
        }
        ++model.source_count;
    }
    return model;
}

void quantize_to_f32(PointCloud& cloud) {
    for (Vec3& p : cloud.points) {
        p.x() = static_cast<double>(static_cast<float>(p.x()));
        p.y() = static_cast<double>(static_cast<float>(p.y()));
        p.z() = static_cast<double>(static_cast<float>(p.z()));
    }
}

PointCloud build_foreground_cloud(const Frame& depth_m, const Frame& color,
                                  const Frame& color_background,
                                  const CameraParams& depth_cam,
                                  const CameraParams& color_cam,
                                  const SegmentOptions& opts) {
    const OpeningRefiner refiner(opts.opening_radius);
    const SegMask color_mask =
        segment_iterative(color, color_background, refiner, opts.iterations, opts.threshold);

    // All valid-depth pixels, then keep the ones whose color projection says
    // "foreground". The mapping runs through the calibrated geometry of both
    // cameras rather than any sensor-specific lookup.
    SegMask all(depth_m.width, depth_m.height, 1);
    const PointCloud cloud_cam = backproject(depth_m, all, depth_cam);
    const Pose ref_from_depth = inverse(depth_cam.pose);
    const PointCloud cloud_ref = apply_pose(ref_from_depth, cloud_cam, "reference");
    const ColorizeResult colored = colorize(cloud_ref, color, color_cam);

    PointCloud out;
    out.frame_id = cloud_cam.frame_id;
    for (std::size_t i = 0; i < cloud_cam.size(); ++i) {
        if (!colored.in_image[i]) continue;
        Vec2 px;
        try {
            px = project(color_cam, cloud_ref.points[i]);
        } catch (const BehindCamera&) {
            continue;
        }
        const long u = std::lround(px.x());
        const long v = std::lround(px.y());
        if (u < 0 || v < 0 || u >= color_mask.width || v >= color_mask.height) continue;
        if (!color_mask.at(u, v)) continue;
        out.points.push_back(cloud_cam.points[i]);
        out.colors.push_back(colored.cloud.colors[i]);
    }
    quantize_to_f32(out);
    return out;
}

}  // namespace holo
