#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "holo/geometry.hpp"

#include <Eigen/Geometry>

#include <cstdio>
#include <filesystem>
#include <random>

using namespace holo;

namespace {

std::mt19937_64 rng(12345);

double urand(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Vec3 random_point(double extent = 1.0) {
    return Vec3(urand(-extent, extent), urand(-extent, extent), urand(-extent, extent));
}

Pose random_pose() {
    const Vec3 axis = random_point().normalized();
    const double angle = urand(-3.0, 3.0);
    Pose pose;
    pose.rotation = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
    pose.translation = random_point(2.0);
    return pose;
}

std::vector<Vec3> cube_corners() {
    std::vector<Vec3> pts;
    for (int i = 0; i < 8; ++i)
        pts.emplace_back(i & 1 ? 1.0 : 0.0, i & 2 ? 1.0 : 0.0, i & 4 ? 1.0 : 0.0);
    return pts;
}

PointCloud random_cloud(std::size_t n, double extent = 1.0) {
    PointCloud cloud;
    for (std::size_t i = 0; i < n; ++i) cloud.points.push_back(random_point(extent));
    return cloud;
}

// Independent O(n^2) matcher used as the oracle for nearest_neighbors.
std::vector<IndexPair> brute_force_nn(const PointCloud& query, const PointCloud& target,
                                      double max_dist) {
    std::vector<IndexPair> pairs;
    for (std::size_t qi = 0; qi < query.size(); ++qi) {
        double best = std::numeric_limits<double>::infinity();
        int best_ti = -1;
        for (std::size_t ti = 0; ti < target.size(); ++ti) {
            const double d = (query.points[qi] - target.points[ti]).norm();
            if (d < best) {
                best = d;
                best_ti = int(ti);
            }
        }
        if (best_ti >= 0 && best <= max_dist)
            pairs.push_back({int(qi), best_ti});
    }
    return pairs;
}

}  // namespace

TEST_CASE("rigid transform: identity on matching cubes") {
    const auto pts = cube_corners();
    const Pose pose = estimate_rigid_transform(pts, pts);
    CHECK((pose.rotation - Mat3::Identity()).norm() < 1e-12);
    CHECK(pose.translation.norm() < 1e-12);
}

TEST_CASE("rigid transform: recovers a 90 degree turn plus shift") {
    const auto src = cube_corners();
    Pose truth;
    truth.rotation = Eigen::AngleAxisd(M_PI / 2, Vec3::UnitZ()).toRotationMatrix();
    truth.translation = Vec3(1, 2, 3);
    std::vector<Vec3> dst;
    for (const Vec3& p : src) dst.push_back(transform(truth, p));

    const Pose est = estimate_rigid_transform(src, dst);
    CHECK((est.rotation - truth.rotation).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((est.translation - truth.translation).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("rigid transform: exact recovery of random poses") {
    for (int trial = 0; trial < 50; ++trial) {
        const Pose truth = random_pose();
        std::vector<Vec3> src, dst;
        for (int i = 0; i < 10; ++i) {
            src.push_back(random_point());
            dst.push_back(transform(truth, src.back()));
        }
        const Pose est = estimate_rigid_transform(src, dst);
        double residual = 0.0;
        for (std::size_t i = 0; i < src.size(); ++i)
            residual = std::max(residual, (dst[i] - transform(est, src[i])).norm());
        CHECK(residual < 1e-9);
        CHECK(est.is_valid());
    }
}

TEST_CASE("rigid transform: degenerate inputs") {
    std::vector<Vec3> line = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)};
    CHECK_THROWS_AS((void)estimate_rigid_transform(line, line), DegenerateInput);

    std::vector<Vec3> two = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
    CHECK_THROWS_AS((void)estimate_rigid_transform(two, two), DegenerateInput);

    // dst collapsing to a line is just as unusable
    const auto src = cube_corners();
    std::vector<Vec3> flat;
    for (const Vec3& p : src) flat.emplace_back(p.x(), 0.0, 0.0);
    CHECK_THROWS_AS((void)estimate_rigid_transform(src, flat), DegenerateInput);
}

TEST_CASE("rigid transform: beats random poses on noisy data") {
    std::vector<Vec3> src, dst;
    const Pose truth = random_pose();
    for (int i = 0; i < 30; ++i) {
        src.push_back(random_point());
        dst.push_back(transform(truth, src.back()) + 0.01 * random_point());
    }
    const Pose est = estimate_rigid_transform(src, dst);
    auto sq_residual = [&](const Pose& p) {
        double s = 0.0;
        for (std::size_t i = 0; i < src.size(); ++i)
            s += (dst[i] - transform(p, src[i])).squaredNorm();
        return s;
    };
    const double best = sq_residual(est);
    for (int i = 0; i < 1000; ++i) CHECK(best <= sq_residual(random_pose()));
}

TEST_CASE("apply_pose basics") {
    PointCloud cloud;
    cloud.points = {Vec3(0, 0, 0)};
    cloud.frame_id = "a";

    const PointCloud same = apply_pose(Pose::identity(), cloud);
    CHECK(same.points[0] == Vec3(0, 0, 0));
    CHECK(same.frame_id == "a");

    Pose lift;
    lift.translation = Vec3(0, 0, 1);
    const PointCloud moved = apply_pose(lift, cloud, "b");
    CHECK((moved.points[0] - Vec3(0, 0, 1)).norm() == 0.0);
    CHECK(moved.frame_id == "b");
}

TEST_CASE("apply_pose composes like the matrix product") {
    const PointCloud cloud = random_cloud(50);
    for (int trial = 0; trial < 20; ++trial) {
        const Pose p1 = random_pose();
        const Pose p2 = random_pose();
        const PointCloud chained = apply_pose(p2, apply_pose(p1, cloud));
        const PointCloud direct = apply_pose(compose(p2, p1), cloud);
        for (std::size_t i = 0; i < cloud.size(); ++i)
            CHECK((chained.points[i] - direct.points[i]).norm() < 1e-12);
    }
}

TEST_CASE("apply_pose preserves pairwise distances") {
    const PointCloud cloud = random_cloud(40);
    const Pose pose = random_pose();
    const PointCloud moved = apply_pose(pose, cloud);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        for (std::size_t j = i + 1; j < cloud.size(); ++j) {
            const double before = (cloud.points[i] - cloud.points[j]).norm();
            const double after = (moved.points[i] - moved.points[j]).norm();
            CHECK(std::abs(before - after) <= 1e-12 * std::max(1.0, before));
        }
    }
}

TEST_CASE("nearest_neighbors: self query matches index-wise at distance 0") {
    const PointCloud cloud = random_cloud(100);
    const auto pairs = nearest_neighbors(cloud, cloud, 1e-9);
    REQUIRE(pairs.size() == cloud.size());
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        CHECK(pairs[k].query == int(k));
        CHECK(pairs[k].target == int(k));
    }
}

TEST_CASE("nearest_neighbors: equidistant targets break ties to the lower index") {
    PointCloud query, target;
    query.points = {Vec3(0, 0, 0)};
    target.points = {Vec3(1, 0, 0), Vec3(-1, 0, 0)};
    const auto pairs = nearest_neighbors(query, target, 10.0);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].target == 0);
}

TEST_CASE("nearest_neighbors: agrees with the brute-force oracle") {
    const PointCloud query = random_cloud(500);
    PointCloud target = random_cloud(500);
    // sprinkle exact duplicates to stress the tie rule
    for (int i = 0; i < 20; ++i) target.points.push_back(target.points[i]);
    for (double gate : {0.05, 0.2, 10.0}) {
        const auto got = nearest_neighbors(query, target, gate);
        const auto want = brute_force_nn(query, target, gate);
        REQUIRE(got.size() == want.size());
        for (std::size_t k = 0; k < got.size(); ++k) {
            CHECK(got[k].query == want[k].query);
            CHECK(got[k].target == want[k].target);
        }
    }
}

TEST_CASE("nearest_neighbors: k-d tree path matches the oracle too") {
    const PointCloud query = random_cloud(800);
    PointCloud target = random_cloud(6000);  // above the brute-force cutoff
    for (int i = 0; i < 50; ++i) target.points.push_back(target.points[i * 3]);
    const auto got = nearest_neighbors(query, target, 0.25);
    const auto want = brute_force_nn(query, target, 0.25);
    REQUIRE(got.size() == want.size());
    for (std::size_t k = 0; k < got.size(); ++k) {
        CHECK(got[k].query == want[k].query);
        CHECK(got[k].target == want[k].target);
    }
}

TEST_CASE("nearest_neighbors: empty result when nothing is in range") {
    PointCloud query, target;
    query.points = {Vec3(0, 0, 0)};
    target.points = {Vec3(5, 0, 0)};
    CHECK(nearest_neighbors(query, target, 1.0).empty());
}

TEST_CASE("icp: already aligned clouds converge immediately") {
    const PointCloud cloud = random_cloud(200);
    const IcpResult result = icp_refine(cloud, cloud, Pose::identity());
    CHECK(result.rmse < 1e-12);
    CHECK((result.pose.rotation - Mat3::Identity()).norm() < 1e-12);
}

TEST_CASE("icp: recovers a small perturbation exactly on noiseless data") {
    const PointCloud src = random_cloud(400);
    Pose truth;
    truth.rotation =
        Eigen::AngleAxisd(5.0 * M_PI / 180.0, Vec3(0.2, 0.3, 0.9).normalized())
            .toRotationMatrix();
    truth.translation = Vec3(0.02, -0.01, 0.015);
    const PointCloud dst = apply_pose(truth, src);

    const IcpResult result = icp_refine(src, dst, Pose::identity());
    CHECK(result.rmse < 1e-6);
    CHECK((result.pose.rotation - truth.rotation).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((result.pose.translation - truth.translation).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("icp: per-iteration rmse never increases") {
    for (int trial = 0; trial < 5; ++trial) {
        const PointCloud src = random_cloud(300);
        Pose wiggle;
        wiggle.rotation =
            Eigen::AngleAxisd(urand(-0.3, 0.3), random_point().normalized())
                .toRotationMatrix();
        wiggle.translation = 0.1 * random_point();
        PointCloud dst = apply_pose(wiggle, src);
        for (Vec3& p : dst.points) p += 0.002 * random_point();

        const IcpResult result = icp_refine(src, dst, Pose::identity());
        for (std::size_t k = 1; k < result.rmse_history.size(); ++k)
            CHECK(result.rmse_history[k] <= result.rmse_history[k - 1] + 1e-12);
        CHECK(result.rmse <= result.rmse_history.front() + 1e-15);
    }
}

TEST_CASE("icp: distant clouds under a tight gate have no correspondences") {
    PointCloud src = random_cloud(50);
    PointCloud dst = random_cloud(50);
    for (Vec3& p : dst.points) p += Vec3(100, 0, 0);
    IcpParams params;
    params.max_dist = 0.5;
    CHECK_THROWS_AS((void)icp_refine(src, dst, Pose::identity(), params),
                    NoCorrespondences);
}

TEST_CASE("wand observation validity") {
    WandSpec spec;
    WandObservation obs;
    obs.a = Vec3(0, 0, 0);
    obs.c = Vec3(0.60, 0, 0);
    obs.b = Vec3(0.30, 0, 0);
    CHECK(wand_observation_valid(obs, spec));

    obs.b = Vec3(0.30, 0.004, 0);  // 4 mm off the line: inside tolerance
    CHECK(wand_observation_valid(obs, spec));
    obs.b = Vec3(0.30, 0.007, 0);  // 7 mm off the line: outside
    CHECK_FALSE(wand_observation_valid(obs, spec));

    obs.b = Vec3(0.30, 0, 0);
    obs.c = Vec3(0.62, 0, 0);  // 2 cm long
    CHECK_FALSE(wand_observation_valid(obs, spec));
}

TEST_CASE("ply round-trip preserves float32 coordinates and colors") {
    PointCloud cloud = random_cloud(64, 3.0);
    for (std::size_t i = 0; i < cloud.size(); ++i)
        cloud.colors.push_back({std::uint8_t(i * 3), std::uint8_t(255 - i), std::uint8_t(i)});
    cloud.frame_id = "reference";

    const std::string path =
        (std::filesystem::temp_directory_path() / "holo_geom_test.ply").string();
    save_ply(path, cloud);
    const PointCloud back = load_ply(path);
    REQUIRE(back.size() == cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        CHECK(float(back.points[i].x()) == float(cloud.points[i].x()));
        CHECK(float(back.points[i].y()) == float(cloud.points[i].y()));
        CHECK(float(back.points[i].z()) == float(cloud.points[i].z()));
        CHECK(back.colors[i] == cloud.colors[i]);
    }
    // a second hop is the identity: coordinates are already float32
    save_ply(path, back);
    const PointCloud again = load_ply(path);
    for (std::size_t i = 0; i < back.size(); ++i)
        CHECK(again.points[i] == back.points[i]);
    std::filesystem::remove(path);
}
