// holo: desk-scale multi RGB-D telepresence pipeline.
// Subcommands cover the full workflow: synthetic capture generation, rig
// calibration, background modeling, foreground segmentation and scoring,
// cloud fusion, pyramid-composite rendering, and the node/hub stream.

#include "holo/calibration.hpp"
#include "holo/config.hpp"
#include "holo/display.hpp"
#include "holo/foreground.hpp"
#include "holo/fusion.hpp"
#include "holo/image_io.hpp"
#include "holo/netstream.hpp"
#include "holo/synthetic.hpp"

#include <CLI11.hpp>

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

namespace fs = std::filesystem;
using namespace holo;

namespace {

std::optional<std::string> opt_of(const CLI::App& app, const std::string& flag,
                                  const std::string& value) {
    return app.count(flag) ? std::optional<std::string>(value) : std::nullopt;
}

std::pair<int, int> parse_size(const std::string& s) {
    const auto x = s.find('x');
    if (x == std::string::npos)
        throw std::runtime_error("expected WIDTHxHEIGHT, got " + s);
    return {std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1))};
}

Vec3 parse_vec3(const std::string& s) {
    Vec3 v;
    if (std::sscanf(s.c_str(), "%lf,%lf,%lf", &v.x(), &v.y(), &v.z()) != 3)
        throw std::runtime_error("expected x,y,z, got " + s);
    return v;
}

std::vector<std::string> sorted_files(const fs::path& dir, const std::string& prefix = "") {
    std::vector<std::string> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const std::string name = e.path().filename().string();
        if (!prefix.empty() && name.rfind(prefix, 0) != 0) continue;
        out.push_back(e.path().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

struct SensorDir {
    fs::path dir;
    int depth_camera_id = 0;
    int color_camera_id = 0;
};

std::vector<SensorDir> find_sensor_dirs(const fs::path& seq_root) {
    std::vector<SensorDir> out;
    std::vector<fs::path> dirs;
    if (fs::exists(seq_root / "sensor.json")) {
        dirs.push_back(seq_root);
    } else {
        for (const auto& e : fs::directory_iterator(seq_root))
            if (e.is_directory() && fs::exists(e.path() / "sensor.json"))
                dirs.push_back(e.path());
        std::sort(dirs.begin(), dirs.end());
    }
    for (const fs::path& dir : dirs) {
        std::ifstream in(dir / "sensor.json");
        nlohmann::json meta = nlohmann::json::parse(in);
        out.push_back({dir, meta.at("depth_camera_id").get<int>(),
                       meta.at("color_camera_id").get<int>()});
    }
    if (out.empty()) throw std::runtime_error("no sensor directories under " + seq_root.string());
    return out;
}

ViewConfig make_view_config(int view_size, double focal, double orbit_radius,
                            const Vec3& look_at, const Vec3& up) {
    ViewConfig config;
    config.virtual_camera.kind = CameraKind::color;
    config.virtual_camera.intrinsics.focal = focal > 0 ? focal : view_size;
    config.virtual_camera.intrinsics.u0 = view_size / 2.0;
    config.virtual_camera.intrinsics.v0 = view_size / 2.0;
    config.virtual_camera.intrinsics.width = view_size;
    config.virtual_camera.intrinsics.height = view_size;
    config.orbit_radius = orbit_radius;
    config.look_at = look_at;
    config.up_axis = up;
    return config;
}

int run(int argc, char** argv) {
    CLI::App app{"holo: multi RGB-D capture, fusion and pyramid display pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "key=value config file");
    long long seed_flag = 1;
    auto* seed_opt = app.add_option("--seed", seed_flag, "random seed");
    bool verbose = false;
    app.add_flag("--verbose", verbose, "chatty progress output");

    // ---- gen ----
    auto* gen = app.add_subcommand("gen", "generate a synthetic capture tree");
    std::string gen_out = "scene";
    std::string gen_object = "box";
    int gen_wand_frames = 100, gen_seq_frames = 10, gen_capture_points = 6000;
    double gen_marker_noise = 0.0, gen_depth_noise = 0.0, gen_pixel_noise = 0.0;
    std::string gen_color_size = "960x540", gen_depth_size = "512x424";
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--object", gen_object, "box|cylinder|person");
    gen->add_option("--frames", gen_wand_frames, "wand sweep frames");
    gen->add_option("--seq-frames", gen_seq_frames, "sequence frames per sensor");
    gen->add_option("--capture-points", gen_capture_points, "calibration cloud budget");
    gen->add_option("--marker-noise", gen_marker_noise, "wand marker sigma, meters");
    gen->add_option("--depth-noise", gen_depth_noise, "depth sigma, meters");
    gen->add_option("--pixel-noise", gen_pixel_noise, "pixel sigma, px");
    gen->add_option("--color-size", gen_color_size, "color camera WxH");
    gen->add_option("--depth-size", gen_depth_size, "depth camera WxH");

    // ---- calibrate ----
    auto* cal = app.add_subcommand("calibrate", "solve the rig from wand + captures");
    std::string cal_wand, cal_captures, cal_out = "rig.calib.json", cal_initial;
    int cal_reference = 1;
    bool cal_no_icp = false;
    double cal_match_dist = 0.02;
    cal->add_option("--wand", cal_wand, "wand CSV")->required();
    cal->add_option("--captures", cal_captures, "captures directory")->required();
    cal->add_option("--out", cal_out, "output calibration JSON");
    cal->add_option("--reference", cal_reference, "reference camera id");
    cal->add_option("--initial-calib", cal_initial, "seed intrinsics from this rig file");
    cal->add_flag("--no-icp", cal_no_icp, "skip the ICP refinement stage");
    cal->add_option("--match-dist", cal_match_dist, "correspondence gate, meters");

    // ---- extract-background ----
    auto* bg = app.add_subcommand("extract-background", "temporal median of a frame dir");
    std::string bg_in, bg_out = "bg.ppm";
    bg->add_option("--in", bg_in, "input frame directory")->required();
    bg->add_option("--out", bg_out, "output image");

    // ---- segment ----
    auto* seg = app.add_subcommand("segment", "foreground masks for a frame dir");
    std::string seg_in, seg_bg, seg_out = "masks";
    int seg_iters = 1, seg_radius = 1;
    double seg_threshold = 25.0;
    seg->add_option("--in", seg_in, "input frame directory")->required();
    seg->add_option("--bg", seg_bg, "background image")->required();
    seg->add_option("--out", seg_out, "mask output directory");
    seg->add_option("--iters", seg_iters, "refinement iterations");
    auto* seg_thresh_opt = seg->add_option("--threshold", seg_threshold, "difference threshold");
    seg->add_option("--radius", seg_radius, "opening radius");

    // ---- eval ----
    auto* ev = app.add_subcommand("eval", "score masks against ground truth");
    std::string ev_pred, ev_gt, ev_roi, ev_csv;
    bool ev_literal_f1 = false;
    ev->add_option("--pred", ev_pred, "predicted mask dir (or dir of category dirs)")->required();
    ev->add_option("--gt", ev_gt, "ground-truth mask dir")->required();
    ev->add_option("--roi", ev_roi, "region-of-interest mask dir");
    ev->add_option("--csv", ev_csv, "also write the table as CSV here");
    ev->add_flag("--literal-f1", ev_literal_f1, "PR/(P+R) instead of 2PR/(P+R)");

    // ---- fuse ----
    auto* fu = app.add_subcommand("fuse", "segmented clouds -> fused reference models");
    std::string fu_seq, fu_calib, fu_out = "models";
    int fu_iters = 1, fu_radius = 1;
    double fu_threshold = 25.0;
    fu->add_option("--seq", fu_seq, "sequence root (sensor*/ dirs)")->required();
    fu->add_option("--calib", fu_calib, "rig calibration JSON")->required();
    fu->add_option("--out", fu_out, "model output directory");
    fu->add_option("--threshold", fu_threshold, "segmentation threshold");
    fu->add_option("--iters", fu_iters, "segmentation iterations");
    fu->add_option("--radius", fu_radius, "opening radius");

    // ---- render ----
    auto* re = app.add_subcommand("render", "four-view pyramid composites from models");
    std::string re_model, re_out = "frames", re_canvas = "1920x1080", re_look_at, re_up = "0,0,1";
    int re_views = 512, re_splat = 2;
    double re_focal = 0.0, re_orbit = 2.0;
    re->add_option("--model", re_model, "model PLY file or directory of them")->required();
    re->add_option("--out", re_out, "output directory");
    re->add_option("--canvas", re_canvas, "composite canvas WxH");
    re->add_option("--views", re_views, "square view size, px");
    re->add_option("--splat", re_splat, "splat radius, px");
    re->add_option("--focal", re_focal, "virtual camera focal, px (default: view size)");
    re->add_option("--orbit-radius", re_orbit, "virtual orbit radius, m");
    re->add_option("--look-at", re_look_at, "orbit center x,y,z (default: model centroid)");
    re->add_option("--up", re_up, "up axis x,y,z");

    // ---- hub ----
    auto* hub = app.add_subcommand("hub", "fusion hub: receive, group, fuse, render");
    std::string hub_listen = ":7070", hub_calib, hub_out = "frames", hub_canvas = "1920x1080";
    std::string hub_look_at, hub_up = "0,0,1";
    long long hub_window = 50000;
    int hub_nodes = 4, hub_views = 512, hub_splat = 2;
    double hub_focal = 0.0, hub_orbit = 2.0;
    auto* hub_listen_opt = hub->add_option("--listen", hub_listen, "listen address [host]:port");
    hub->add_option("--calib", hub_calib, "rig calibration JSON")->required();
    auto* hub_window_opt = hub->add_option("--window-us", hub_window, "sync window, microseconds");
    hub->add_option("--nodes", hub_nodes, "expected capture nodes");
    hub->add_option("--out", hub_out, "composite output directory");
    hub->add_option("--canvas", hub_canvas, "composite canvas WxH");
    hub->add_option("--views", hub_views, "square view size, px");
    hub->add_option("--splat", hub_splat, "splat radius, px");
    hub->add_option("--focal", hub_focal, "virtual camera focal, px");
    hub->add_option("--orbit-radius", hub_orbit, "virtual orbit radius, m");
    hub->add_option("--look-at", hub_look_at, "orbit center x,y,z");
    hub->add_option("--up", hub_up, "up axis x,y,z");

    // ---- node ----
    auto* node = app.add_subcommand("node", "capture node: segment, lift, stream");
    std::string node_source, node_hub = "127.0.0.1:7070", node_calib;
    int node_camera = 0, node_iters = 1, node_radius = 1;
    double node_fps = 10.0, node_threshold = 25.0;
    node->add_option("--source", node_source, "sensor dir (or seq root with --camera-id)")
        ->required();
    auto* node_hub_opt = node->add_option("--hub", node_hub, "hub address host:port");
    node->add_option("--camera-id", node_camera, "sensor index under a seq root");
    node->add_option("--calib", node_calib, "rig calibration JSON");
    node->add_option("--fps", node_fps, "send rate limit (0 = unthrottled)");
    node->add_option("--threshold", node_threshold, "segmentation threshold");
    node->add_option("--iters", node_iters, "segmentation iterations");
    node->add_option("--radius", node_radius, "opening radius");

    CLI11_PARSE(app, argc, argv);

    const Config config =
        Config::load(config_path.empty() ? std::nullopt
                                         : std::optional<std::string>(config_path));
    const std::uint64_t seed = static_cast<std::uint64_t>(config.resolve_int(
        "seed", seed_opt->count() ? std::optional<long long>(seed_flag) : std::nullopt, 1));

    if (*gen) {
        SyntheticScene scene;
        if (gen_object == "box") scene.object = SyntheticScene::ObjectKind::box;
        else if (gen_object == "cylinder") scene.object = SyntheticScene::ObjectKind::cylinder;
        else if (gen_object == "person") scene.object = SyntheticScene::ObjectKind::person;
        else throw std::runtime_error("unknown object kind: " + gen_object);
        scene.seed = seed;
        scene.wand_frames = gen_wand_frames;
        scene.sequence_frames = gen_seq_frames;
        scene.capture_points = gen_capture_points;
        scene.marker_sigma = gen_marker_noise;
        scene.depth_sigma = gen_depth_noise;
        scene.pixel_sigma = gen_pixel_noise;
        std::tie(scene.color_width, scene.color_height) = parse_size(gen_color_size);
        scene.color_focal = 1064.9 * scene.color_width / 1920.0;
        std::tie(scene.depth_width, scene.depth_height) = parse_size(gen_depth_size);
        scene.depth_focal = 365.0 * scene.depth_width / 512.0;
        const GeneratedScene generated = generate_scene(scene);
        write_scene(generated, gen_out);
        std::cout << "wrote synthetic scene to " << gen_out << " (seed " << seed << ")\n";
        return 0;
    }

    if (*cal) {
        CalibrationSession session;
        session.reference_camera_id = cal_reference;
        int rejected = 0;
        session.observations = load_wand_csv(cal_wand, session.wand, &rejected);
        const auto captures = load_captures(cal_captures);
        CalibrateOptions opts;
        opts.use_icp = !cal_no_icp;
        opts.match_max_dist = cal_match_dist;
        if (!cal_initial.empty()) {
            const RigCalibration initial = load_rig_calibration(cal_initial);
            for (const CameraParams& cam : initial.cameras)
                opts.initial_intrinsics[cam.camera_id] = cam.intrinsics;
        }
        const RigCalibration rig = calibrate_rig(session, captures, opts);
        save_rig_calibration(cal_out, rig);
        if (rejected > 0)
            std::cout << "dropped " << rejected << " wand sightings outside tolerances\n";
        std::cout << "camera  kind   rmse_px\n";
        for (std::size_t i = 0; i < rig.cameras.size(); ++i)
            std::printf("%6d  %-5s  %.6g\n", rig.cameras[i].camera_id,
                        to_string(rig.cameras[i].kind).c_str(), rig.rmse[i]);
        std::cout << "wrote " << cal_out << "\n";
        return 0;
    }

    if (*bg) {
        std::vector<Frame> frames;
        for (const std::string& path : sorted_files(bg_in)) frames.push_back(load_image(path));
        if (frames.empty()) throw std::runtime_error("no frames in " + bg_in);
        const Frame median = median_background(frames);
        if (median.channels == 3) save_ppm(bg_out, median);
        else save_pgm(bg_out, median);
        std::cout << "wrote " << bg_out << " from " << frames.size() << " frames\n";
        return 0;
    }

    if (*seg) {
        const Frame background = load_image(seg_bg);
        const double threshold = config.resolve_double(
            "threshold",
            seg_thresh_opt->count() ? std::optional<double>(seg_threshold) : std::nullopt,
            25.0);
        fs::create_directories(seg_out);
        const OpeningRefiner refiner(seg_radius);
        int n = 0;
        for (const std::string& path : sorted_files(seg_in)) {
            const Frame frame = load_image(path);
            const SegMask mask =
                segment_iterative(frame, background, refiner, seg_iters, threshold);
            const fs::path out =
                fs::path(seg_out) / (fs::path(path).stem().string() + "_mask.pgm");
            save_mask(out.string(), mask);
            ++n;
        }
        std::cout << "wrote " << n << " masks to " << seg_out << "\n";
        return 0;
    }

    if (*ev) {
        std::vector<CategoryRow> rows;
        std::vector<fs::path> categories;
        for (const auto& e : fs::directory_iterator(ev_pred))
            if (e.is_directory()) categories.push_back(e.path());
        std::sort(categories.begin(), categories.end());
        ConfusionCounts overall;
        if (categories.empty()) {
            const auto report = evaluate_sequence(
                ev_pred, ev_gt,
                ev_roi.empty() ? std::nullopt : std::optional<fs::path>(ev_roi),
                ev_literal_f1);
            rows.push_back({"sequence", report.aggregate_metrics});
        } else {
            for (const fs::path& cat : categories) {
                const std::string name = cat.filename().string();
                const auto report = evaluate_sequence(
                    cat, fs::path(ev_gt) / name,
                    ev_roi.empty() ? std::nullopt
                                   : std::optional<fs::path>(fs::path(ev_roi) / name),
                    ev_literal_f1);
                rows.push_back({name, report.aggregate_metrics});
                overall += report.aggregate;
            }
            rows.push_back({"Overall", metrics(overall, ev_literal_f1)});
        }
        std::cout << format_metrics_table(rows);
        if (!ev_csv.empty()) {
            std::ofstream out(ev_csv);
            out << format_metrics_csv(rows);
            std::cout << "wrote " << ev_csv << "\n";
        }
        return 0;
    }

    if (*fu) {
        const RigCalibration rig = load_rig_calibration(fu_calib);
        const auto sensors = find_sensor_dirs(fu_seq);
        SegmentOptions seg_opts{fu_threshold, fu_iters, fu_radius};
        fs::create_directories(fu_out);
        std::size_t n_frames = std::numeric_limits<std::size_t>::max();
        std::vector<std::vector<std::string>> depth_paths, color_paths;
        std::vector<Frame> backgrounds;
        for (const SensorDir& s : sensors) {
            depth_paths.push_back(sorted_files(s.dir, "depth_"));
            color_paths.push_back(sorted_files(s.dir, "color_"));
            backgrounds.push_back(load_image((s.dir / "background_color.ppm").string()));
            n_frames = std::min(n_frames, depth_paths.back().size());
        }
        for (std::size_t f = 0; f < n_frames; ++f) {
            std::map<int, PointCloud> clouds;
            for (std::size_t s = 0; s < sensors.size(); ++s) {
                const CameraParams* depth_cam = rig.find(sensors[s].depth_camera_id);
                const CameraParams* color_cam = rig.find(sensors[s].color_camera_id);
                if (!depth_cam || !color_cam)
                    throw UnknownCamera("fuse: sensor cameras missing from rig");
                const Frame depth = load_depth_pgm(depth_paths[s][f]);
                const Frame color = load_image(color_paths[s][f]);
                clouds[sensors[s].depth_camera_id] = build_foreground_cloud(
                    depth, color, backgrounds[s], *depth_cam, *color_cam, seg_opts);
            }
            const FusedModel model = fuse(clouds, rig);
            char name[64];
            std::snprintf(name, sizeof(name), "model_%06zu.ply", f);
            save_ply((fs::path(fu_out) / name).string(), model.cloud);
            if (verbose)
                std::cout << "frame " << f << ": " << model.cloud.size() << " points\n";
        }
        std::cout << "fused " << n_frames << " frames into " << fu_out << "\n";
        return 0;
    }

    if (*re) {
        std::vector<FusedModel> models;
        if (fs::is_directory(re_model)) {
            for (const std::string& path : sorted_files(re_model)) {
                if (fs::path(path).extension() != ".ply") continue;
                FusedModel m;
                m.cloud = load_ply(path);
                m.source_count = 1;
                models.push_back(std::move(m));
            }
        } else {
            FusedModel m;
            m.cloud = load_ply(re_model);
            m.source_count = 1;
            models.push_back(std::move(m));
        }
        if (models.empty()) throw std::runtime_error("no models to render");

        Vec3 look_at;
        if (re_look_at.empty()) {
            Vec3 sum = Vec3::Zero();
            std::size_t n = 0;
            for (const FusedModel& m : models)
                for (const Vec3& p : m.cloud.points) {
                    sum += p;
                    ++n;
                }
            look_at = n ? Vec3(sum / double(n)) : Vec3::Zero();
        } else {
            look_at = parse_vec3(re_look_at);
        }
        const ViewConfig view =
            make_view_config(re_views, re_focal, re_orbit, look_at, parse_vec3(re_up));
        const auto [cw, chh] = parse_size(re_canvas);
        const CompositeLayout layout = CompositeLayout::cross(cw, chh);
        const StreamReport report = emit_stream(models, view, layout, re_out, re_splat);
        std::printf("rendered %d composites to %s at %.1f FPS (mean %.2f ms/frame)\n",
                    report.frames, re_out.c_str(), report.fps,
                    report.frames
                        ? report.total_seconds * 1000.0 / report.frames
                        : 0.0);
        return 0;
    }

    if (*hub) {
        HubOptions opts;
        opts.listen_address = config.resolve(
            "listen", opt_of(*hub, "--listen", hub_listen), hub_listen);
        (void)hub_listen_opt;
        opts.rig = load_rig_calibration(hub_calib);
        opts.sync_window_us = static_cast<std::uint64_t>(config.resolve_int(
            "window-us",
            hub_window_opt->count() ? std::optional<long long>(hub_window) : std::nullopt,
            50000));
        opts.expected_nodes = hub_nodes;
        opts.out_dir = hub_out;
        opts.splat_radius = hub_splat;
        const Vec3 look_at = hub_look_at.empty() ? Vec3(0, 0, 0.6) : parse_vec3(hub_look_at);
        opts.view = make_view_config(hub_views, hub_focal, hub_orbit, look_at,
                                     parse_vec3(hub_up));
        const auto [cw, chh] = parse_size(hub_canvas);
        opts.layout = CompositeLayout::cross(cw, chh);
        opts.on_listening = [&](std::uint16_t port) {
            std::cout << "hub listening on port " << port << std::endl;
        };
        const HubStats stats = run_hub(opts);
        std::printf("hub: %d groups rendered, %llu late drops, %.1f FPS\n",
                    stats.groups_rendered,
                    static_cast<unsigned long long>(stats.dropped_late), stats.fps);
        return 0;
    }

    if (*node) {
        NodeOptions opts;
        fs::path source = node_source;
        if (!fs::exists(source / "sensor.json") && node_camera > 0)
            source /= "sensor" + std::to_string(node_camera);
        opts.source_dir = source.string();
        opts.calib_path = node_calib;
        opts.hub_address =
            config.resolve("hub", opt_of(*node, "--hub", node_hub), node_hub);
        (void)node_hub_opt;
        opts.fps_limit = node_fps;
        opts.segment = SegmentOptions{node_threshold, node_iters, node_radius};
        const NodeStats stats = run_node(opts);
        std::printf("node camera %u: sent %d frames (%d connect attempts)\n",
                    stats.camera_id, stats.frames_sent, stats.connect_attempts);
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        const char* stage = argc > 1 ? argv[1] : "holo";
        std::cerr << "error: stage=" << stage << " msg=" << e.what() << std::endl;
        return 1;
    }
}
