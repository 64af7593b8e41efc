#pragma once

#include "holo/camera_model.hpp"
#include "holo/foreground.hpp"
#include "holo/fusion.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace holo {

struct LayoutOverflow : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Virtual-camera orbit for the four pyramid faces.
struct ViewConfig {
    CameraParams virtual_camera;  // intrinsics/size template; pose is derived
    double orbit_radius = 2.0;    // meters from look_at
    Vec3 look_at = Vec3::Zero();
    Vec3 up_axis = Vec3(0, 0, 1);
};

struct RenderResult {
    Frame image;                // RGB
    std::vector<double> depth;  // camera-frame z per pixel, +inf where empty
};

/// Point-splat rendering with a z-buffer: each point paints a disc of the
/// given radius, nearest depth wins per pixel.
RenderResult render_view(const FusedModel& model, const CameraParams& cam,
                         int splat_radius = 2, Rgb background = {0, 0, 0});

/// Cameras at 0/90/180/270 degrees on a horizontal orbit about the up axis
/// through look_at, all aimed at look_at. Built by composing exact quarter
/// turns so the four poses differ by exact 90-degree rotations.
std::array<CameraParams, 4> four_view_cameras(const ViewConfig& config);

std::array<Frame, 4> four_views(const FusedModel& model, const ViewConfig& config,
                                int splat_radius = 2);

struct QuadrantSpec {
    int rotation_deg = 0;  // in-plane, clockwise, one of 0/90/180/270
    bool mirror = false;   // horizontal flip, applied after rotation
};

/// Cross arrangement: each view sits against its canvas edge, centered on
/// the canvas axis, rotated/mirrored per quadrant so the pyramid reflection
/// reads upright from that side.
struct CompositeLayout {
    int canvas_width = 1920;
    int canvas_height = 1080;
    int margin = 0;  // inset from the canvas edge, pixels
    QuadrantSpec top{180, true};
    QuadrantSpec right{270, true};
    QuadrantSpec bottom{0, true};
    QuadrantSpec left{90, true};

    static CompositeLayout cross(int canvas_w = 1920, int canvas_h = 1080);
};

/// Rotates/mirrors each square view per its quadrant and blits the four onto
/// a black canvas (order: top, right, bottom, left). Throws LayoutOverflow
/// when the quadrant rectangles leave the canvas or overlap.
Frame composite(const std::array<Frame, 4>& views, const CompositeLayout& layout);

struct StreamReport {
    int frames = 0;
    double total_seconds = 0.0;
    double fps = 0.0;
    std::vector<double> per_frame_ms;
};

/// Renders every model to a numbered composite image
/// (composite_000000.ppm, ...) under out_dir and reports timing.
StreamReport emit_stream(std::span<const FusedModel> models, const ViewConfig& config,
                         const CompositeLayout& layout, const std::string& out_dir,
                         int splat_radius = 2);

}  // namespace holo
