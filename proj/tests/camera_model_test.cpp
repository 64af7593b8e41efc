#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "holo/camera_model.hpp"

#include <Eigen/Geometry>

#include <random>

using namespace holo;

namespace {

std::mt19937_64 rng(777);

double urand(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}
double gauss(double sigma) {
    return std::normal_distribution<double>(0.0, sigma)(rng);
}

// Table-like color camera used throughout: full-HD pinhole with mild radial
// and tangential terms.
Intrinsics hd_intrinsics() {
    Intrinsics intr;
    intr.focal = 1064.9131;
    intr.skew = 0.0979;
    intr.u0 = 962.6340;
    intr.v0 = 537.3419;
    intr.radial = Vec3(0.0145, -0.0035, 1.50e-4);
    intr.tangential = Vec2(-2.21e-6, -2.04e-4);
    intr.width = 1920;
    intr.height = 1080;
    return intr;
}

CameraParams random_camera() {
    CameraParams cam;
    cam.intrinsics = hd_intrinsics();
    cam.intrinsics.focal *= urand(0.9, 1.1);
    cam.pose.rotation =
        Eigen::AngleAxisd(urand(-0.4, 0.4),
                          Vec3(urand(-1, 1), urand(-1, 1), urand(-1, 1)).normalized())
            .toRotationMatrix();
    cam.pose.translation = Vec3(urand(-0.3, 0.3), urand(-0.3, 0.3), urand(-0.2, 0.2));
    return cam;
}

// World points that project comfortably inside the image.
std::vector<Vec3> world_points(int n, double spread = 0.8) {
    std::vector<Vec3> pts;
    for (int i = 0; i < n; ++i)
        pts.emplace_back(urand(-spread, spread), urand(-spread, spread),
                         urand(2.0, 4.0));
    return pts;
}

std::vector<Observation2D3D> observe(const CameraParams& cam, const std::vector<Vec3>& pts,
                                     double pixel_sigma = 0.0) {
    std::vector<Observation2D3D> obs;
    for (const Vec3& p : pts) {
        Observation2D3D o;
        o.world = p;
        o.pixel = project(cam, p);
        if (pixel_sigma > 0) o.pixel += Vec2(gauss(pixel_sigma), gauss(pixel_sigma));
        obs.push_back(o);
    }
    return obs;
}

}  // namespace

TEST_CASE("project: optical axis lands on the principal point") {
    CameraParams cam;
    cam.intrinsics = hd_intrinsics();
    cam.intrinsics.radial.setZero();
    cam.intrinsics.tangential.setZero();
    cam.intrinsics.skew = 0.0;
    const Vec2 px = project(cam, Vec3(0, 0, 2.5));
    CHECK(px.x() == doctest::Approx(cam.intrinsics.u0).epsilon(1e-12));
    CHECK(px.y() == doctest::Approx(cam.intrinsics.v0).epsilon(1e-12));
}

TEST_CASE("project: hand-computed pinhole case") {
    CameraParams cam;
    cam.intrinsics.focal = 1000.0;
    cam.intrinsics.u0 = 960.0;
    cam.intrinsics.v0 = 540.0;
    cam.intrinsics.width = 1920;
    cam.intrinsics.height = 1080;
    const Vec2 px = project(cam, Vec3(0.1, 0.0, 1.0));
    CHECK(px.x() == doctest::Approx(1060.0).epsilon(1e-12));
    CHECK(px.y() == doctest::Approx(540.0).epsilon(1e-12));
}

TEST_CASE("project: rejects points behind the camera") {
    CameraParams cam;
    cam.intrinsics = hd_intrinsics();
    CHECK_THROWS_AS((void)project(cam, Vec3(0, 0, -1.0)), BehindCamera);
    CHECK_THROWS_AS((void)project(cam, Vec3(0.1, 0.1, 0.0)), BehindCamera);
}

TEST_CASE("distortion shifts off-axis points and the inverse undoes it") {
    const Intrinsics intr = hd_intrinsics();
    Intrinsics no_dist = intr;
    no_dist.radial.setZero();
    no_dist.tangential.setZero();

    const Vec2 n(0.25, -0.18);
    const Vec2 d = distort_normalized(intr, n);
    CHECK((d - n).norm() > 1e-5);  // the model actually bends the point
    CHECK((distort_normalized(no_dist, n) - n).norm() == 0.0);

    const Vec2 back = undistort_normalized(intr, d);
    CHECK((back - n).norm() < 1e-6);
    CHECK((distort_normalized(intr, back) - d).norm() < 1e-8);
}

TEST_CASE("undistort: identity when all coefficients vanish") {
    Intrinsics intr = hd_intrinsics();
    intr.radial.setZero();
    intr.tangential.setZero();
    const Vec2 p(0.3, -0.2);
    CHECK((undistort_normalized(intr, p) - p).norm() == 0.0);
}

TEST_CASE("distort/undistort are mutual inverses over the working domain") {
    const Intrinsics intr = hd_intrinsics();
    for (int i = 0; i < 500; ++i) {
        const Vec2 n(urand(-0.4, 0.4), urand(-0.4, 0.4));
        const Vec2 round = undistort_normalized(intr, distort_normalized(intr, n));
        CHECK((round - n).norm() < 1e-8);
        const Vec2 other = distort_normalized(intr, undistort_normalized(intr, n));
        CHECK((other - n).norm() < 1e-8);
    }
}

TEST_CASE("dlt: recovers a synthetic camera from noiseless correspondences") {
    CameraParams cam;
    cam.intrinsics = hd_intrinsics();
    cam.intrinsics.radial.setZero();
    cam.intrinsics.tangential.setZero();
    cam.pose.rotation = Eigen::AngleAxisd(0.3, Vec3(0.1, 0.9, 0.2).normalized())
                            .toRotationMatrix();
    cam.pose.translation = Vec3(0.1, -0.2, 0.3);

    const auto obs = observe(cam, world_points(20));
    const DltResult dlt = estimate_intrinsics_dlt(obs, 1920, 1080);
    CHECK(std::abs(dlt.intrinsics.focal - cam.intrinsics.focal) /
              cam.intrinsics.focal <
          1e-6);
    CHECK(std::abs(dlt.intrinsics.u0 - cam.intrinsics.u0) < 1e-3);
    CHECK(std::abs(dlt.intrinsics.v0 - cam.intrinsics.v0) < 1e-3);
    CHECK((dlt.pose.rotation - cam.pose.rotation).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((dlt.pose.translation - cam.pose.translation).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(dlt.pose.is_valid());
}

TEST_CASE("dlt: too few or coplanar points are rejected") {
    CameraParams cam;
    cam.intrinsics = hd_intrinsics();
    const auto few = observe(cam, world_points(5));
    CHECK_THROWS_AS((void)estimate_intrinsics_dlt(few, 1920, 1080),
                    DegenerateConfiguration);

    std::vector<Vec3> coplanar;
    for (int i = 0; i < 20; ++i)
        coplanar.emplace_back(urand(-0.8, 0.8), urand(-0.8, 0.8), 3.0);
    const auto flat = observe(cam, coplanar);
    CHECK_THROWS_AS((void)estimate_intrinsics_dlt(flat, 1920, 1080),
                    DegenerateConfiguration);
}

TEST_CASE("reprojection rmse: exact observations score zero, a 1 px offset scores one") {
    const CameraParams cam = random_camera();
    auto obs = observe(cam, world_points(30));
    CHECK(reprojection_rmse(cam, obs) < 1e-12);

    std::vector<Observation2D3D> one = {obs[0]};
    one[0].pixel.x() += 1.0;
    CHECK(reprojection_rmse(cam, one) == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS((void)reprojection_rmse(cam, std::vector<Observation2D3D>{}),
                    EmptyObservations);
}

TEST_CASE("reprojection rmse: matches the direct formula") {
    const CameraParams cam = random_camera();
    const auto obs = observe(cam, world_points(100), 1.5);
    double sum = 0.0;
    for (const auto& o : obs) sum += (project(cam, o.world) - o.pixel).squaredNorm();
    const double direct = std::sqrt(sum / obs.size());
    CHECK(reprojection_rmse(cam, obs) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("lm jacobian agrees with central finite differences") {
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const CameraParams cam = random_camera();
        const auto obs = observe(cam, world_points(4));
        const bool freeze = trial % 4 == 0;
        const int np = lm_parameter_count(freeze);
        const Eigen::MatrixXd j = lm_jacobian(cam, obs, freeze);

        Eigen::MatrixXd fd(j.rows(), j.cols());
        for (int k = 0; k < np; ++k) {
            // focal/principal point live at pixel scale, distortion at 1e-4;
            // step sizes follow the parameter scale.
            const double h = (k < 4) ? 1e-4 : (k < 9 ? 1e-7 : 1e-7);
            Eigen::VectorXd dp = Eigen::VectorXd::Zero(np);
            dp(k) = h;
            const Eigen::VectorXd hi = lm_residuals(cam, obs, dp, freeze);
            dp(k) = -h;
            const Eigen::VectorXd lo = lm_residuals(cam, obs, dp, freeze);
            fd.col(k) = (hi - lo) / (2.0 * h);
        }
        for (int r = 0; r < j.rows(); ++r) {
            for (int c = 0; c < j.cols(); ++c) {
                const double scale = std::max({1.0, std::abs(j(r, c)), std::abs(fd(r, c))});
                CHECK(std::abs(j(r, c) - fd(r, c)) / scale < 1e-5);
                ++checked;
            }
        }
    }
    CHECK(checked > 0);
}

TEST_CASE("lm: starting at the optimum changes nothing") {
    const CameraParams cam = random_camera();
    const auto obs = observe(cam, world_points(60));
    const LmResult result = refine_lm(cam, obs);
    CHECK(result.rmse < 1e-9);
    CHECK(std::abs(result.params.intrinsics.focal - cam.intrinsics.focal) < 1e-9);
    CHECK((result.params.pose.translation - cam.pose.translation).norm() < 1e-9);
    CHECK((result.params.pose.rotation - cam.pose.rotation).norm() < 1e-9);
}

TEST_CASE("lm: recovers a perturbed camera on noiseless data") {
    const CameraParams truth = random_camera();
    const auto obs = observe(truth, world_points(200));

    CameraParams start = truth;
    start.intrinsics.focal *= 1.05;
    start.intrinsics.u0 += 5.0;
    start.intrinsics.v0 -= 5.0;
    start.intrinsics.radial.setZero();
    start.intrinsics.tangential.setZero();

    const LmResult result = refine_lm(start, obs);
    CHECK(result.rmse < 1e-8);
    CHECK(std::abs(result.params.intrinsics.focal - truth.intrinsics.focal) /
              truth.intrinsics.focal <
          1e-6);
    CHECK(std::abs(result.params.intrinsics.u0 - truth.intrinsics.u0) < 1e-4);
    CHECK(std::abs(result.params.intrinsics.v0 - truth.intrinsics.v0) < 1e-4);
    CHECK((result.params.intrinsics.radial - truth.intrinsics.radial).norm() < 1e-6);
    CHECK((result.params.intrinsics.tangential - truth.intrinsics.tangential).norm() <
          1e-6);
}

TEST_CASE("lm: accepted rmse sequence is non-increasing and never above the start") {
    const CameraParams truth = random_camera();
    const auto obs = observe(truth, world_points(150), 0.5);
    CameraParams start = truth;
    start.intrinsics.focal *= 1.03;
    start.intrinsics.u0 += 4.0;

    const LmResult result = refine_lm(start, obs);
    REQUIRE(!result.rmse_history.empty());
    for (std::size_t k = 1; k < result.rmse_history.size(); ++k)
        CHECK(result.rmse_history[k] <= result.rmse_history[k - 1]);
    CHECK(result.rmse <= result.rmse_history.front());
}

TEST_CASE("lm: rmse settles near the noise floor across seeds") {
    // "0.5 px" noise read as the 2-D rms radius, i.e. 0.5/sqrt(2) per axis.
    int inside = 0;
    for (int s = 0; s < 20; ++s) {
        const CameraParams truth = random_camera();
        const auto obs = observe(truth, world_points(300), 0.5 / std::sqrt(2.0));
        CameraParams start = truth;
        start.intrinsics.focal *= 1.02;
        start.intrinsics.u0 += 3.0;
        const LmResult result = refine_lm(start, obs);
        if (result.rmse > 0.3 && result.rmse < 0.7) ++inside;
    }
    CHECK(inside == 20);
}

TEST_CASE("lm: pipeline dlt -> lm recovers everything from scratch") {
    CameraParams truth;
    truth.intrinsics = hd_intrinsics();
    truth.pose.rotation = Eigen::AngleAxisd(0.4, Vec3(0.3, 0.8, 0.1).normalized())
                              .toRotationMatrix();
    truth.pose.translation = Vec3(0.2, 0.1, -0.1);
    const auto obs = observe(truth, world_points(250));

    const DltResult dlt = estimate_intrinsics_dlt(obs, 1920, 1080);
    CameraParams start;
    start.intrinsics = dlt.intrinsics;
    start.pose = dlt.pose;
    const LmResult result = refine_lm(start, obs);

    CHECK(result.rmse < 1e-7);
    CHECK(std::abs(result.params.intrinsics.focal - truth.intrinsics.focal) /
              truth.intrinsics.focal <
          1e-6);
    CHECK(std::abs(result.params.intrinsics.skew - truth.intrinsics.skew) < 1e-4);
    CHECK(std::abs(result.params.intrinsics.u0 - truth.intrinsics.u0) < 1e-3);
    CHECK(std::abs(result.params.intrinsics.v0 - truth.intrinsics.v0) < 1e-3);
    CHECK((result.params.intrinsics.radial - truth.intrinsics.radial).cwiseAbs().maxCoeff() <
          1e-6);
    CHECK((result.params.intrinsics.tangential - truth.intrinsics.tangential)
              .cwiseAbs()
              .maxCoeff() < 1e-6);
}

TEST_CASE("lm: frozen pose leaves extrinsics untouched") {
    const CameraParams truth = random_camera();
    const auto obs = observe(truth, world_points(100));
    CameraParams start = truth;
    start.intrinsics.focal *= 1.04;
    LmOptions opts;
    opts.freeze_pose = true;
    const LmResult result = refine_lm(start, obs, opts);
    CHECK((result.params.pose.rotation - truth.pose.rotation).norm() == 0.0);
    CHECK((result.params.pose.translation - truth.pose.translation).norm() == 0.0);
    CHECK(std::abs(result.params.intrinsics.focal - truth.intrinsics.focal) /
              truth.intrinsics.focal <
          1e-6);
}
