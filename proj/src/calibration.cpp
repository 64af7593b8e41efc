#include "holo/calibration.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

namespace holo {

using nlohmann::json;

const CameraParams* RigCalibration::find(int camera_id) const {
    for (const CameraParams& c : cameras)
        if (c.camera_id == camera_id) return &c;
    return nullptr;
}

std::map<int, Pose> align_extrinsics(const CalibrationSession& session) {
    const auto ref_it = session.observations.find(session.reference_camera_id);
    if (ref_it == session.observations.end())
        throw std::invalid_argument("align_extrinsics: reference camera has no observations");

    std::map<int, const WandObservation*> ref_by_frame;
    for (const WandObservation& o : ref_it->second) ref_by_frame[o.frame_index] = &o;

    std::map<int, Pose> poses;
    poses[session.reference_camera_id] = Pose::identity();

    for (const auto& [camera_id, obs] : session.observations) {
        if (camera_id == session.reference_camera_id) continue;
        std::vector<Vec3> src, dst;  // camera frame -> reference frame
        int shared_frames = 0;
        for (const WandObservation& o : obs) {
            const auto it = ref_by_frame.find(o.frame_index);
            if (it == ref_by_frame.end()) continue;
            ++shared_frames;
            const WandObservation& r = *it->second;
            src.insert(src.end(), {o.a, o.b, o.c});
            dst.insert(dst.end(), {r.a, r.b, r.c});
        }
        if (shared_frames < 3)
            throw InsufficientSharedFrames(
                camera_id, "align_extrinsics: camera " + std::to_string(camera_id) +
                               " shares only " + std::to_string(shared_frames) +
                               " frames with the reference (need 3)");
        try {
            poses[camera_id] = estimate_rigid_transform(src, dst);
        } catch (const DegenerateInput& e) {
            throw CalibrationError(camera_id, "align_extrinsics", e.what());
        }
    }
    return poses;
}

std::map<int, Pose> refine_alignment_icp(const std::map<int, Pose>& poses,
                                         const std::map<int, CameraCapture>& captures,
                                         int reference_camera_id, const IcpParams& params) {
    const auto ref_it = captures.find(reference_camera_id);
    if (ref_it == captures.end())
        throw std::invalid_argument("refine_alignment_icp: missing reference capture");
    const PointCloud& ref_cloud = ref_it->second.cloud;

    std::map<int, Pose> refined;
    for (const auto& [camera_id, pose] : poses) {
        if (camera_id == reference_camera_id) {
            refined[camera_id] = Pose::identity();
            continue;
        }
        const auto cap = captures.find(camera_id);
        if (cap == captures.end()) {
            refined[camera_id] = pose;
            continue;
        }
        try {
            refined[camera_id] = icp_refine(cap->second.cloud, ref_cloud, pose, params).pose;
        } catch (const NoCorrespondences& e) {
            throw CalibrationError(camera_id, "refine_alignment_icp", e.what());
        }
    }
    return refined;
}

std::map<int, std::vector<Observation2D3D>> gather_correspondences(
    const std::map<int, Pose>& poses, const std::map<int, CameraCapture>& captures,
    int reference_camera_id, double max_dist) {
    const auto ref_it = captures.find(reference_camera_id);
    if (ref_it == captures.end())
        throw std::invalid_argument("gather_correspondences: missing reference capture");
    const PointCloud& ref_cloud = ref_it->second.cloud;

    std::map<int, std::vector<Observation2D3D>> out;
    for (const auto& [camera_id, cap] : captures) {
        std::vector<Observation2D3D>& obs = out[camera_id];
        if (cap.pixels.size() != cap.cloud.size())
            throw std::invalid_argument("gather_correspondences: pixels/cloud size mismatch");
        if (camera_id == reference_camera_id) {
            obs.reserve(cap.cloud.size());
            for (std::size_t i = 0; i < cap.cloud.size(); ++i)
                obs.push_back({cap.cloud.points[i], cap.pixels[i]});
            continue;
        }
        const auto pose_it = poses.find(camera_id);
        if (pose_it == poses.end()) continue;
        const PointCloud aligned = apply_pose(pose_it->second, cap.cloud);
        const std::vector<IndexPair> pairs = nearest_neighbors(aligned, ref_cloud, max_dist);
        obs.reserve(pairs.size());
        for (const IndexPair& pr : pairs)
            obs.push_back({ref_cloud.points[pr.target], cap.pixels[pr.query]});
    }
    return out;
}

RigCalibration calibrate_rig(const CalibrationSession& session,
                             const std::map<int, CameraCapture>& captures,
                             const CalibrateOptions& opts) {
    std::map<int, Pose> poses = align_extrinsics(session);
    if (opts.use_icp)
        poses = refine_alignment_icp(poses, captures, session.reference_camera_id, opts.icp);

    const auto correspondences = gather_correspondences(
        poses, captures, session.reference_camera_id, opts.match_max_dist);

    RigCalibration rig;
    rig.reference_camera_id = session.reference_camera_id;
    {
        const auto now = std::chrono::system_clock::now();
        const std::time_t t = std::chrono::system_clock::to_time_t(now);
        char buf[32];
        std::strftime(buf, sizeof(buf), "%FT%TZ", std::gmtime(&t));
        rig.created_at = buf;
    }

    for (const auto& [camera_id, cap] : captures) {
        const auto obs_it = correspondences.find(camera_id);
        if (obs_it == correspondences.end() || obs_it->second.empty())
            throw CalibrationError(camera_id, "gather_correspondences",
                                   "no 2D-3D correspondences");
        const std::vector<Observation2D3D>& obs = obs_it->second;
        const bool is_reference = camera_id == session.reference_camera_id;

        CameraParams cam;
        cam.camera_id = camera_id;
        cam.kind = cap.kind;
        const auto seed = opts.initial_intrinsics.find(camera_id);
        if (seed != opts.initial_intrinsics.end()) {
            cam.intrinsics = seed->second;
            cam.intrinsics.width = cap.width;
            cam.intrinsics.height = cap.height;
            cam.pose = is_reference ? Pose::identity() : inverse(poses.at(camera_id));
        } else {
            try {
                const DltResult dlt = estimate_intrinsics_dlt(obs, cap.width, cap.height);
                cam.intrinsics = dlt.intrinsics;
                cam.pose = is_reference ? Pose::identity() : dlt.pose;
            } catch (const DegenerateConfiguration& e) {
                throw CalibrationError(camera_id, "estimate_intrinsics_dlt", e.what());
            }
        }

        LmOptions lm = opts.lm;
        lm.freeze_pose = lm.freeze_pose || is_reference;
        try {
            const LmResult refined = refine_lm(cam, obs, lm);
            rig.cameras.push_back(refined.params);
            rig.rmse.push_back(refined.rmse);
        } catch (const std::runtime_error& e) {
            throw CalibrationError(camera_id, "refine_lm", e.what());
        }
    }
    return rig;
}

// ------------------------------------------------------------- file I/O ----

void save_rig_calibration(const std::string& path, const RigCalibration& rig) {
    json doc;
    doc["version"] = 1;
    doc["reference_camera"] = rig.reference_camera_id;
    doc["created_at"] = rig.created_at;
    json cams = json::array();
    for (std::size_t i = 0; i < rig.cameras.size(); ++i) {
        const CameraParams& c = rig.cameras[i];
        json jc;
        jc["id"] = c.camera_id;
        jc["kind"] = to_string(c.kind);
        jc["focal"] = c.intrinsics.focal;
        jc["skew"] = c.intrinsics.skew;
        jc["u0"] = c.intrinsics.u0;
        jc["v0"] = c.intrinsics.v0;
        jc["k1"] = c.intrinsics.radial(0);
        jc["k2"] = c.intrinsics.radial(1);
        jc["k3"] = c.intrinsics.radial(2);
        jc["p1"] = c.intrinsics.tangential(0);
        jc["p2"] = c.intrinsics.tangential(1);
        jc["width"] = c.intrinsics.width;
        jc["height"] = c.intrinsics.height;
        json rot = json::array();
        for (int r = 0; r < 3; ++r)
            for (int cidx = 0; cidx < 3; ++cidx) rot.push_back(c.pose.rotation(r, cidx));
        jc["rotation"] = rot;
        jc["translation"] = {c.pose.translation.x(), c.pose.translation.y(),
                             c.pose.translation.z()};
        jc["rmse"] = i < rig.rmse.size() ? rig.rmse[i] : 0.0;
        cams.push_back(jc);
    }
    doc["cameras"] = cams;

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << doc.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

RigCalibration load_rig_calibration(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    json doc = json::parse(in);
    if (doc.at("version").get<int>() != 1)
        throw std::runtime_error("unsupported calibration file version");

    RigCalibration rig;
    rig.reference_camera_id = doc.at("reference_camera").get<int>();
    rig.created_at = doc.value("created_at", "");
    for (const json& jc : doc.at("cameras")) {
        CameraParams c;
        c.camera_id = jc.at("id").get<int>();
        c.kind = camera_kind_from_string(jc.at("kind").get<std::string>());
        c.intrinsics.focal = jc.at("focal").get<double>();
        c.intrinsics.skew = jc.at("skew").get<double>();
        c.intrinsics.u0 = jc.at("u0").get<double>();
        c.intrinsics.v0 = jc.at("v0").get<double>();
        c.intrinsics.radial = Vec3(jc.at("k1").get<double>(), jc.at("k2").get<double>(),
                                   jc.at("k3").get<double>());
        c.intrinsics.tangential = Vec2(jc.at("p1").get<double>(), jc.at("p2").get<double>());
        c.intrinsics.width = jc.at("width").get<int>();
        c.intrinsics.height = jc.at("height").get<int>();
        const auto& rot = jc.at("rotation");
        if (rot.size() != 9) throw std::runtime_error("rotation must have 9 entries");
        for (int r = 0; r < 3; ++r)
            for (int cidx = 0; cidx < 3; ++cidx)
                c.pose.rotation(r, cidx) = rot[3 * r + cidx].get<double>();
        const auto& tr = jc.at("translation");
        if (tr.size() != 3) throw std::runtime_error("translation must have 3 entries");
        c.pose.translation = Vec3(tr[0].get<double>(), tr[1].get<double>(), tr[2].get<double>());
        if (!c.pose.is_valid())
            throw std::runtime_error("calibration file: rotation for camera " +
                                     std::to_string(c.camera_id) + " is not orthonormal");
        rig.cameras.push_back(c);
        rig.rmse.push_back(jc.value("rmse", 0.0));
    }
    return rig;
}

std::map<int, std::vector<WandObservation>> load_wand_csv(const std::string& path,
                                                          const WandSpec& spec,
                                                          int* rejected) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);

    struct Partial {
        Vec3 m[3];
        bool seen[3] = {false, false, false};
    };
    std::map<std::pair<int, int>, Partial> partial;  // (frame, camera) -> markers

    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line.rfind("frame", 0) == 0) continue;  // header row
        }
        std::istringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 6)
            throw std::runtime_error("wand csv: expected 6 fields, got line: " + line);
        const int frame = std::stoi(fields[0]);
        const int camera = std::stoi(fields[1]);
        const std::string& marker = fields[2];
        const Vec3 p(std::stod(fields[3]), std::stod(fields[4]), std::stod(fields[5]));
        int mi = -1;
        if (marker == "A") mi = 0;
        else if (marker == "B") mi = 1;
        else if (marker == "C") mi = 2;
        else throw std::runtime_error("wand csv: unknown marker " + marker);
        Partial& pt = partial[{frame, camera}];
        pt.m[mi] = p;
        pt.seen[mi] = true;
    }

    int dropped = 0;
    std::map<int, std::vector<WandObservation>> out;
    for (const auto& [key, pt] : partial) {
        if (!(pt.seen[0] && pt.seen[1] && pt.seen[2])) {
            ++dropped;
            continue;
        }
        WandObservation obs;
        obs.frame_index = key.first;
        obs.camera_id = key.second;
        obs.a = pt.m[0];
        obs.b = pt.m[1];
        obs.c = pt.m[2];
        if (!wand_observation_valid(obs, spec)) {
            ++dropped;
            continue;
        }
        out[obs.camera_id].push_back(obs);
    }
    for (auto& [id, v] : out)
        std::sort(v.begin(), v.end(), [](const WandObservation& a, const WandObservation& b) {
            return a.frame_index < b.frame_index;
        });
    if (rejected) *rejected = dropped;
    return out;
}

void save_wand_csv(const std::string& path,
                   const std::map<int, std::vector<WandObservation>>& obs) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "frame,camera_id,marker,x,y,z\n";
    out.precision(17);
    for (const auto& [camera_id, list] : obs) {
        for (const WandObservation& o : list) {
            const Vec3* markers[3] = {&o.a, &o.b, &o.c};
            const char* names = "ABC";
            for (int m = 0; m < 3; ++m)
                out << o.frame_index << ',' << camera_id << ',' << names[m] << ','
                    << markers[m]->x() << ',' << markers[m]->y() << ',' << markers[m]->z()
                    << '\n';
        }
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace holo
