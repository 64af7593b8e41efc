#include "holo/geometry.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace holo {

bool Pose::is_valid(double tol) const {
    if (!rotation.allFinite() || !translation.allFinite()) return false;
    const Mat3 rtr = rotation.transpose() * rotation;
    if ((rtr - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
    return std::abs(rotation.determinant() - 1.0) <= tol;
}

Pose compose(const Pose& outer, const Pose& inner) {
    Pose out;
    out.rotation = outer.rotation * inner.rotation;
    out.translation = outer.rotation * inner.translation + outer.translation;
    return out;
}

Pose inverse(const Pose& pose) {
    Pose out;
    out.rotation = pose.rotation.transpose();
    out.translation = -(out.rotation * pose.translation);
    return out;
}

bool wand_observation_valid(const WandObservation& obs, const WandSpec& spec) {
    const Vec3 axis = obs.c - obs.a;
    const double len = axis.norm();
    if (std::abs(len - spec.length) > spec.length_tol) return false;
    if (len <= 0.0) return false;
    const double off_line = (obs.b - obs.a).cross(axis).norm() / len;
    return off_line <= spec.collinearity_tol;
}

Pose estimate_rigid_transform(std::span<const Vec3> src, std::span<const Vec3> dst) {
    if (src.size() != dst.size())
        throw DegenerateInput("rigid solve: correspondence count mismatch");
    const std::size_t n = src.size();
    if (n < 3)
        throw DegenerateInput("rigid solve: need at least 3 correspondences");

    Vec3 src_centroid = Vec3::Zero();
    Vec3 dst_centroid = Vec3::Zero();
    for (std::size_t k = 0; k < n; ++k) {
        src_centroid += src[k];
        dst_centroid += dst[k];
    }
    src_centroid /= static_cast<double>(n);
    dst_centroid /= static_cast<double>(n);

    Mat3 cov = Mat3::Zero();
    for (std::size_t k = 0; k < n; ++k)
        cov += (src[k] - src_centroid) * (dst[k] - dst_centroid).transpose();

    Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec3 sv = svd.singularValues();
    // Rank < 2 leaves a rotation about the residual axis unconstrained.
    if (sv(1) <= sv(0) * 1e-9)
        throw DegenerateInput("rigid solve: collinear or coincident points");

    Mat3 d = Mat3::Identity();
    if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0)
        d(2, 2) = -1.0;

    Pose pose;
    pose.rotation = svd.matrixV() * d * svd.matrixU().transpose();
    pose.translation = dst_centroid - pose.rotation * src_centroid;
    return pose;
}

PointCloud apply_pose(const Pose& pose, const PointCloud& cloud,
                      std::string_view target_frame) {
    PointCloud out;
    out.points.reserve(cloud.size());
    for (const Vec3& p : cloud.points) out.points.push_back(transform(pose, p));
    out.colors = cloud.colors;
    out.frame_id = target_frame.empty() ? cloud.frame_id : std::string(target_frame);
    return out;
}

namespace {

// Balanced k-d tree over target points; node splits alternate axes.
// Search descends on <= so equal-distance candidates are all visited and
// the lowest index can win, matching the brute-force tie rule exactly.
class KdTree {
public:
    explicit KdTree(const std::vector<Vec3>& pts) : pts_(pts) {
        order_.resize(pts.size());
        std::iota(order_.begin(), order_.end(), 0);
        nodes_.reserve(pts.size());
        root_ = build(0, static_cast<int>(pts.size()), 0);
    }

    void nearest(const Vec3& q, double& best_d2, int& best_idx) const {
        search(root_, q, best_d2, best_idx);
    }

private:
    struct Node {
        int point = -1;
        int axis = 0;
        int left = -1;
        int right = -1;
    };

    int build(int lo, int hi, int depth) {
        if (lo >= hi) return -1;
        const int axis = depth % 3;
        const int mid = (lo + hi) / 2;
        std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                         [&](int a, int b) {
                             if (pts_[a](axis) != pts_[b](axis))
                                 return pts_[a](axis) < pts_[b](axis);
                             return a < b;
                         });
        Node node;
        node.point = order_[mid];
        node.axis = axis;
        const int id = static_cast<int>(nodes_.size());
        nodes_.push_back(node);
        nodes_[id].left = build(lo, mid, depth + 1);
        nodes_[id].right = build(mid + 1, hi, depth + 1);
        return id;
    }

    void search(int id, const Vec3& q, double& best_d2, int& best_idx) const {
        if (id < 0) return;
        const Node& node = nodes_[id];
        const Vec3& p = pts_[node.point];
        const double d2 = (q - p).squaredNorm();
        if (d2 < best_d2 || (d2 == best_d2 && node.point < best_idx)) {
            best_d2 = d2;
            best_idx = node.point;
        }
        const double delta = q(node.axis) - p(node.axis);
        const int near = delta < 0.0 ? node.left : node.right;
        const int far = delta < 0.0 ? node.right : node.left;
        search(near, q, best_d2, best_idx);
        if (delta * delta <= best_d2) search(far, q, best_d2, best_idx);
    }

    const std::vector<Vec3>& pts_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

constexpr std::size_t kBruteForceLimit = 5000;

std::vector<IndexPair> match_clouds(const PointCloud& query, const PointCloud& target,
                                    double max_dist) {
    std::vector<IndexPair> pairs;
    if (target.empty()) return pairs;
    const double gate2 = max_dist * max_dist;
    pairs.reserve(query.size());
    if (target.size() <= kBruteForceLimit) {
        for (std::size_t qi = 0; qi < query.size(); ++qi) {
            double best_d2 = std::numeric_limits<double>::infinity();
            int best = -1;
            for (std::size_t ti = 0; ti < target.size(); ++ti) {
                const double d2 = (query.points[qi] - target.points[ti]).squaredNorm();
                if (d2 < best_d2) {
                    best_d2 = d2;
                    best = static_cast<int>(ti);
                }
            }
            if (best >= 0 && best_d2 <= gate2)
                pairs.push_back({static_cast<int>(qi), best});
        }
        return pairs;
    }
    KdTree tree(target.points);
    for (std::size_t qi = 0; qi < query.size(); ++qi) {
        double best_d2 = std::numeric_limits<double>::infinity();
        int best = std::numeric_limits<int>::max();
        tree.nearest(query.points[qi], best_d2, best);
        if (best_d2 <= gate2)
            pairs.push_back({static_cast<int>(qi), best});
    }
    return pairs;
}

double pair_rmse(const PointCloud& src, const PointCloud& dst, const Pose& pose,
                 const std::vector<IndexPair>& pairs) {
    double sum = 0.0;
    for (const IndexPair& pr : pairs)
        sum += (dst.points[pr.target] - transform(pose, src.points[pr.query])).squaredNorm();
    return std::sqrt(sum / static_cast<double>(pairs.size()));
}

}  // namespace

std::vector<IndexPair> nearest_neighbors(const PointCloud& query, const PointCloud& target,
                                         double max_dist) {
    return match_clouds(query, target, max_dist);
}

IcpResult icp_refine(const PointCloud& src, const PointCloud& dst, const Pose& init,
                     const IcpParams& params) {
    if (src.empty() || dst.empty())
        throw NoCorrespondences("icp: empty input cloud");

    IcpResult best;
    best.pose = init;
    best.rmse = std::numeric_limits<double>::infinity();

    Pose current = init;
    double prev_rmse = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < params.max_iters; ++iter) {
        const PointCloud moved = apply_pose(current, src);
        const std::vector<IndexPair> pairs = nearest_neighbors(moved, dst, params.max_dist);
        if (pairs.empty())
            throw NoCorrespondences("icp: no pairs within max_dist");

        const double rmse = pair_rmse(src, dst, current, pairs);
        best.rmse_history.push_back(rmse);
        best.iterations = iter + 1;
        if (rmse < best.rmse) {
            best.rmse = rmse;
            best.pose = current;
        }
        if (prev_rmse - rmse < params.tol) break;
        prev_rmse = rmse;

        std::vector<Vec3> s, d;
        s.reserve(pairs.size());
        d.reserve(pairs.size());
        for (const IndexPair& pr : pairs) {
            s.push_back(src.points[pr.query]);
            d.push_back(dst.points[pr.target]);
        }
        try {
            current = estimate_rigid_transform(s, d);
        } catch (const DegenerateInput&) {
            break;  // matched subset collapsed; keep the best pose so far
        }
    }
    return best;
}

void save_ply(const std::string& path, const PointCloud& cloud) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "ply\nformat ascii 1.0\n";
    out << "element vertex " << cloud.size() << "\n";
    out << "property float x\nproperty float y\nproperty float z\n";
    if (cloud.has_colors())
        out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    out << "end_header\n";
    std::ostringstream line;
    line.precision(9);  // round-trips float32
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        line.str("");
        line << static_cast<float>(cloud.points[i].x()) << ' '
             << static_cast<float>(cloud.points[i].y()) << ' '
             << static_cast<float>(cloud.points[i].z());
        if (cloud.has_colors())
            line << ' ' << int(cloud.colors[i][0]) << ' ' << int(cloud.colors[i][1])
                 << ' ' << int(cloud.colors[i][2]);
        out << line.str() << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

PointCloud load_ply(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "ply")
        throw std::runtime_error("not a PLY file: " + path);

    std::size_t vertex_count = 0;
    std::vector<std::string> props;
    bool ascii = false;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string word;
        ss >> word;
        if (word == "format") {
            std::string fmt;
            ss >> fmt;
            ascii = fmt == "ascii";
        } else if (word == "element") {
            std::string name;
            ss >> name >> vertex_count;
            if (name != "vertex")
                throw std::runtime_error("unsupported PLY element: " + name);
        } else if (word == "property") {
            std::string type, name;
            ss >> type >> name;
            props.push_back(name);
        } else if (word == "end_header") {
            break;
        }
    }
    if (!ascii) throw std::runtime_error("only ascii PLY is supported: " + path);

    int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
    for (std::size_t i = 0; i < props.size(); ++i) {
        if (props[i] == "x") ix = static_cast<int>(i);
        else if (props[i] == "y") iy = static_cast<int>(i);
        else if (props[i] == "z") iz = static_cast<int>(i);
        else if (props[i] == "red") ir = static_cast<int>(i);
        else if (props[i] == "green") ig = static_cast<int>(i);
        else if (props[i] == "blue") ib = static_cast<int>(i);
    }
    if (ix < 0 || iy < 0 || iz < 0)
        throw std::runtime_error("PLY lacks x/y/z vertex properties: " + path);
    const bool with_color = ir >= 0 && ig >= 0 && ib >= 0;

    PointCloud cloud;
    cloud.points.reserve(vertex_count);
    if (with_color) cloud.colors.reserve(vertex_count);
    std::vector<double> vals(props.size());
    for (std::size_t v = 0; v < vertex_count; ++v) {
        if (!std::getline(in, line))
            throw std::runtime_error("truncated PLY: " + path);
        std::istringstream ss(line);
        for (double& x : vals)
            if (!(ss >> x)) throw std::runtime_error("malformed PLY vertex: " + path);
        // Coordinates are declared float32; parse through float so a write/read
        // cycle is exact.
        cloud.points.emplace_back(static_cast<double>(static_cast<float>(vals[ix])),
                                  static_cast<double>(static_cast<float>(vals[iy])),
                                  static_cast<double>(static_cast<float>(vals[iz])));
        if (with_color)
            cloud.colors.push_back({static_cast<std::uint8_t>(vals[ir]),
                                    static_cast<std::uint8_t>(vals[ig]),
                                    static_cast<std::uint8_t>(vals[ib])});
    }
    return cloud;
}

}  // namespace holo
