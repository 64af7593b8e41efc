#pragma once

#include "holo/calibration.hpp"
#include "holo/foreground.hpp"
#include "holo/geometry.hpp"

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace holo {

/// Desk-scale stand-in for the physical rig: four RGB-D sensors two meters
/// up, a quarter turn apart, looking at a test object on the floor between
/// two reference walls.
struct SyntheticScene {
    enum class ObjectKind { box, cylinder, person };

    ObjectKind object = ObjectKind::box;
    Vec3 box_size = Vec3(0.40, 0.30, 0.30);
    double cylinder_radius = 0.18;
    double cylinder_height = 1.20;

    double marker_sigma = 0.0;  // meters, wand marker noise
    double depth_sigma = 0.0;   // meters, capture-cloud depth noise
    double pixel_sigma = 0.0;   // pixels, observed-pixel noise
    std::uint64_t seed = 1;

    int wand_frames = 100;
    int sequence_frames = 10;
    int capture_points = 6000;  // per-camera calibration cloud budget

    int color_width = 960;
    int color_height = 540;
    double color_focal = 1064.9 * 960.0 / 1920.0;
    int depth_width = 512;
    int depth_height = 424;
    double depth_focal = 365.0;

    double camera_height = 2.0;
    double orbit_radius = 2.2;
    double object_turn_deg_per_frame = 3.0;
};

/// A colored, oriented surface point of the synthetic world.
struct SurfaceSample {
    Vec3 p = Vec3::Zero();
    Vec3 n = Vec3::Zero();
    Rgb color{200, 200, 200};
};

/// Static per-sensor state: ground-truth world poses of its two cameras and
/// the exact ray-cast room backgrounds the per-frame renders composite onto.
struct SensorSetup {
    int sensor_index = 1;  // 1..4
    int depth_camera_id = 0;
    int color_camera_id = 0;
    CameraParams depth_world;  // pose = camera-from-world
    CameraParams color_world;
    Frame bg_depthcam_depth;   // meters, 0 = no return
    Frame bg_colorcam_depth;   // meters, occlusion reference for splats
    Frame bg_colorcam_color;
};

struct GeneratedScene {
    SyntheticScene desc;
    RigCalibration truth;  // ground-truth parameters, rmse column zero
    CalibrationSession session;
    std::map<int, CameraCapture> captures;
    std::vector<SensorSetup> sensors;
    std::vector<SurfaceSample> object_samples;  // object local frame
};

/// Deterministic for a fixed scene description (all randomness flows from
/// scene.seed).
GeneratedScene generate_scene(const SyntheticScene& scene);

/// Renders sequence frame `frame` for one sensor: the turntable-rotated
/// object splatted over the static background. Frames are rendered on
/// demand so long sequences never sit in memory. Returns (depth_m, color).
std::pair<Frame, Frame> render_sensor_frame(const GeneratedScene& scene,
                                            int sensor_index, int frame);

/// Writes everything the CLI subcommands consume:
///   truth/rig.calib.json, factory.calib.json, wand.csv,
///   captures/cam<id>.csv (+ captures.json manifest),
///   seq/sensor<k>/{sensor.json, background_color.ppm, background_depth.pgm,
///                  depth_??????.pgm, color_??????.ppm}
void write_scene(const GeneratedScene& scene, const std::string& out_dir);

/// Colored surface samples of the test object alone (world frame, standing
/// at the origin). Handy for render tests.
PointCloud sample_object_cloud(const SyntheticScene& scene, int count,
                               std::uint64_t seed);

/// Capture CSV round-trip: rows `u,v,x,y,z` at full double precision.
void save_capture_csv(const std::string& path, const CameraCapture& capture);
CameraCapture load_capture_csv(const std::string& path);

/// Capture-set manifest + per-camera CSVs.
void save_captures(const std::string& dir, const std::map<int, CameraCapture>& captures);
std::map<int, CameraCapture> load_captures(const std::string& dir);

/// Robust axis-aligned extents: per axis, the median of the points within
/// 1 cm of each 1st/99th percentile end. Stable against noise tails.
struct BoundingBox {
    Vec3 lo, hi;
    Vec3 size() const { return hi - lo; }
};
BoundingBox robust_bounds(const PointCloud& cloud);

}  // namespace holo
