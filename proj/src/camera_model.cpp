#include "holo/camera_model.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace holo {

std::string to_string(CameraKind kind) {
    return kind == CameraKind::color ? "color" : "depth";
}

CameraKind camera_kind_from_string(const std::string& s) {
    if (s == "color") return CameraKind::color;
    if (s == "depth") return CameraKind::depth;
    throw std::invalid_argument("unknown camera kind: " + s);
}

Vec2 distort_normalized(const Intrinsics& intr, const Vec2& xy) {
    const double x = xy.x(), y = xy.y();
    const double r2 = x * x + y * y;
    const double k1 = intr.radial(0), k2 = intr.radial(1), k3 = intr.radial(2);
    const double p1 = intr.tangential(0), p2 = intr.tangential(1);
    const double rho = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3));
    return {x * rho + 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x),
            y * rho + p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y};
}

namespace {

// d(distorted)/d(normalized), 2x2.
Eigen::Matrix2d distortion_jacobian(const Intrinsics& intr, const Vec2& xy) {
    const double x = xy.x(), y = xy.y();
    const double r2 = x * x + y * y;
    const double k1 = intr.radial(0), k2 = intr.radial(1), k3 = intr.radial(2);
    const double p1 = intr.tangential(0), p2 = intr.tangential(1);
    const double rho = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3));
    const double drho = k1 + r2 * (2.0 * k2 + 3.0 * k3 * r2);  // d(rho)/d(r2)
    Eigen::Matrix2d j;
    j(0, 0) = rho + 2.0 * x * x * drho + 2.0 * p1 * y + 6.0 * p2 * x;
    j(0, 1) = 2.0 * x * y * drho + 2.0 * p1 * x + 2.0 * p2 * y;
    j(1, 0) = j(0, 1);
    j(1, 1) = rho + 2.0 * y * y * drho + 6.0 * p1 * y + 2.0 * p2 * x;
    return j;
}

}  // namespace

Vec2 undistort_normalized(const Intrinsics& intr, const Vec2& distorted) {
    if (!intr.has_distortion()) return distorted;
    Vec2 x = distorted;
    Vec2 err = distort_normalized(intr, x) - distorted;
    for (int iter = 0; iter < 100; ++iter) {
        if (err.norm() < 1e-12) break;
        const Eigen::Matrix2d j = distortion_jacobian(intr, x);
        const Vec2 step = j.fullPivLu().solve(err);
        double scale = 1.0;
        Vec2 next = x - step;
        Vec2 next_err = distort_normalized(intr, next) - distorted;
        // Backtrack if the full Newton step overshoots.
        for (int h = 0; h < 8 && !(next_err.squaredNorm() < err.squaredNorm()); ++h) {
            scale *= 0.5;
            next = x - scale * step;
            next_err = distort_normalized(intr, next) - distorted;
        }
        x = next;
        err = next_err;
    }
    if (err.norm() >= 1e-8)
        throw NoConvergence("undistort: Newton iteration did not converge");
    return x;
}

Vec2 project_camera_frame(const Intrinsics& intr, const Vec3& p_cam) {
    if (p_cam.z() <= 0.0)
        throw BehindCamera("projection: point has non-positive depth");
    const Vec2 n(p_cam.x() / p_cam.z(), p_cam.y() / p_cam.z());
    const Vec2 d = distort_normalized(intr, n);
    return {intr.focal * d.x() + intr.skew * d.y() + intr.u0,
            intr.focal * d.y() + intr.v0};
}

Vec2 project(const CameraParams& cam, const Vec3& p) {
    return project_camera_frame(cam.intrinsics, transform(cam.pose, p));
}

Mat3 axis_angle_to_rotation(const Vec3& w) {
    const double theta2 = w.squaredNorm();
    const double theta = std::sqrt(theta2);
    Mat3 wx;
    wx << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
    double a, b;
    if (theta < 1e-8) {
        a = 1.0 - theta2 / 6.0;
        b = 0.5 - theta2 / 24.0;
    } else {
        a = std::sin(theta) / theta;
        b = (1.0 - std::cos(theta)) / theta2;
    }
    return Mat3::Identity() + a * wx + b * wx * wx;
}

// ---------------------------------------------------------------- DLT ----

namespace {

// RQ decomposition M = K * R with K upper triangular, R orthonormal.
void rq_decompose(const Mat3& m, Mat3& k, Mat3& r) {
    Mat3 e = Mat3::Zero();
    e(0, 2) = e(1, 1) = e(2, 0) = 1.0;
    const Mat3 b = (e * m).transpose();
    Eigen::HouseholderQR<Mat3> qr(b);
    const Mat3 q = qr.householderQ();
    const Mat3 rt = qr.matrixQR().triangularView<Eigen::Upper>();
    k = e * rt.transpose() * e;
    r = e * q.transpose();
    // Force a positive diagonal on K.
    Mat3 d = Mat3::Identity();
    for (int i = 0; i < 3; ++i)
        if (k(i, i) < 0.0) d(i, i) = -1.0;
    k = k * d;
    r = d * r;
}

}  // namespace

DltResult estimate_intrinsics_dlt(std::span<const Observation2D3D> obs,
                                  int image_width, int image_height) {
    const std::size_t n = obs.size();
    if (n < 6)
        throw DegenerateConfiguration("dlt: need at least 6 correspondences");

    Vec3 centroid = Vec3::Zero();
    for (const auto& o : obs) centroid += o.world;
    centroid /= static_cast<double>(n);
    Mat3 scatter = Mat3::Zero();
    for (const auto& o : obs) {
        const Vec3 d = o.world - centroid;
        scatter += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter);
    if (eig.eigenvalues()(0) <= eig.eigenvalues()(2) * 1e-9)
        throw DegenerateConfiguration("dlt: world points are coplanar");

    // Hartley normalization of both point sets.
    Vec2 centroid2 = Vec2::Zero();
    for (const auto& o : obs) centroid2 += o.pixel;
    centroid2 /= static_cast<double>(n);
    double mean2 = 0.0, mean3 = 0.0;
    for (const auto& o : obs) {
        mean2 += (o.pixel - centroid2).norm();
        mean3 += (o.world - centroid).norm();
    }
    mean2 /= static_cast<double>(n);
    mean3 /= static_cast<double>(n);
    const double s2 = std::sqrt(2.0) / (mean2 > 0 ? mean2 : 1.0);
    const double s3 = std::sqrt(3.0) / (mean3 > 0 ? mean3 : 1.0);

    Eigen::Matrix3d t2 = Eigen::Matrix3d::Identity();
    t2(0, 0) = t2(1, 1) = s2;
    t2.block<2, 1>(0, 2) = -s2 * centroid2;
    Eigen::Matrix4d t3 = Eigen::Matrix4d::Identity();
    t3.block<3, 3>(0, 0) = s3 * Mat3::Identity();
    t3.block<3, 1>(0, 3) = -s3 * centroid;

    Eigen::MatrixXd a(2 * n, 12);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 xw = s3 * (obs[i].world - centroid);
        const Vec2 px = s2 * (obs[i].pixel - centroid2);
        Eigen::RowVector4d xh;
        xh << xw.x(), xw.y(), xw.z(), 1.0;
        a.row(2 * i).setZero();
        a.row(2 * i).segment<4>(0) = xh;
        a.row(2 * i).segment<4>(8) = -px.x() * xh;
        a.row(2 * i + 1).setZero();
        a.row(2 * i + 1).segment<4>(4) = xh;
        a.row(2 * i + 1).segment<4>(8) = -px.y() * xh;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinV);
    const Eigen::VectorXd p = svd.matrixV().col(11);

    Eigen::Matrix<double, 3, 4> pm;
    pm.row(0) = p.segment<4>(0).transpose();
    pm.row(1) = p.segment<4>(4).transpose();
    pm.row(2) = p.segment<4>(8).transpose();
    pm = t2.inverse() * pm * t3;  // undo normalization

    Mat3 m = pm.block<3, 3>(0, 0);
    if (m.determinant() < 0.0) {
        pm = -pm;
        m = -m;
    }
    const double row3 = m.row(2).norm();
    if (row3 <= 0.0) throw DegenerateConfiguration("dlt: singular projection matrix");
    pm /= row3;
    m = pm.block<3, 3>(0, 0);

    Mat3 k, r;
    rq_decompose(m, k, r);
    const Vec3 t = k.inverse() * pm.col(3);
    k /= k(2, 2);

    DltResult out;
    out.intrinsics.focal = 0.5 * (k(0, 0) + k(1, 1));
    out.intrinsics.skew = k(0, 1);
    out.intrinsics.u0 = k(0, 2);
    out.intrinsics.v0 = k(1, 2);
    out.intrinsics.width = image_width;
    out.intrinsics.height = image_height;
    out.pose.rotation = r;
    out.pose.translation = t;
    return out;
}

// ----------------------------------------------------------------- LM ----

int lm_parameter_count(bool freeze_pose) { return freeze_pose ? 9 : 15; }

CameraParams lm_apply_step(const CameraParams& base, const Eigen::VectorXd& delta,
                           bool freeze_pose) {
    CameraParams out = base;
    out.intrinsics.focal += delta(0);
    out.intrinsics.skew += delta(1);
    out.intrinsics.u0 += delta(2);
    out.intrinsics.v0 += delta(3);
    out.intrinsics.radial += delta.segment<3>(4);
    out.intrinsics.tangential += delta.segment<2>(7);
    if (!freeze_pose) {
        out.pose.rotation = axis_angle_to_rotation(delta.segment<3>(9)) * base.pose.rotation;
        out.pose.translation += delta.segment<3>(12);
    }
    return out;
}

Eigen::VectorXd lm_residuals(const CameraParams& base, std::span<const Observation2D3D> obs,
                             const Eigen::VectorXd& delta, bool freeze_pose) {
    const CameraParams cam = lm_apply_step(base, delta, freeze_pose);
    Eigen::VectorXd r(2 * obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i)
        r.segment<2>(2 * i) = project(cam, obs[i].world) - obs[i].pixel;
    return r;
}

Eigen::MatrixXd lm_jacobian(const CameraParams& base, std::span<const Observation2D3D> obs,
                            bool freeze_pose) {
    const int np = lm_parameter_count(freeze_pose);
    Eigen::MatrixXd j(2 * obs.size(), np);
    const Intrinsics& intr = base.intrinsics;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const Vec3 rx = base.pose.rotation * obs[i].world;
        const Vec3 pc = rx + base.pose.translation;
        if (pc.z() <= 0.0)
            throw BehindCamera("lm jacobian: point has non-positive depth");
        const double z = pc.z();
        const Vec2 n(pc.x() / z, pc.y() / z);
        const Vec2 d = distort_normalized(intr, n);
        const double x = n.x(), y = n.y();
        const double r2 = x * x + y * y;

        // pixel = (f*xd + g*yd + u0, f*yd + v0)
        Eigen::Matrix2d px_d;
        px_d << intr.focal, intr.skew, 0.0, intr.focal;

        auto row = j.block(2 * i, 0, 2, np);
        row.setZero();
        row(0, 0) = d.x();  // d u / d focal
        row(1, 0) = d.y();  // d v / d focal
        row(0, 1) = d.y();  // d u / d skew
        row(0, 2) = 1.0;
        row(1, 3) = 1.0;

        Eigen::Matrix<double, 2, 5> d_coeff;
        d_coeff << x * r2, x * r2 * r2, x * r2 * r2 * r2, 2.0 * x * y, r2 + 2.0 * x * x,
                   y * r2, y * r2 * r2, y * r2 * r2 * r2, r2 + 2.0 * y * y, 2.0 * x * y;
        row.block<2, 5>(0, 4) = px_d * d_coeff;

        if (!freeze_pose) {
            const Eigen::Matrix2d d_n = distortion_jacobian(intr, n);
            Eigen::Matrix<double, 2, 3> n_pc;
            n_pc << 1.0 / z, 0.0, -pc.x() / (z * z),
                    0.0, 1.0 / z, -pc.y() / (z * z);
            Mat3 rx_hat;
            rx_hat << 0, -rx.z(), rx.y(), rx.z(), 0, -rx.x(), -rx.y(), rx.x(), 0;
            const Eigen::Matrix<double, 2, 3> px_pc = px_d * d_n * n_pc;
            row.block<2, 3>(0, 9) = px_pc * (-rx_hat);
            row.block<2, 3>(0, 12) = px_pc;
        }
    }
    return j;
}

double reprojection_rmse(const CameraParams& cam, std::span<const Observation2D3D> obs) {
    if (obs.empty()) throw EmptyObservations("reprojection rmse: no observations");
    double sum = 0.0;
    for (const auto& o : obs) sum += (project(cam, o.world) - o.pixel).squaredNorm();
    return std::sqrt(sum / static_cast<double>(obs.size()));
}

namespace {

double lm_cost(const CameraParams& cam, std::span<const Observation2D3D> obs,
               Eigen::VectorXd& residuals) {
    try {
        residuals = lm_residuals(cam, obs, Eigen::VectorXd::Zero(15), false);
    } catch (const BehindCamera&) {
        return std::numeric_limits<double>::infinity();
    }
    const double c = residuals.squaredNorm();
    return std::isfinite(c) ? c : std::numeric_limits<double>::infinity();
}

}  // namespace

LmResult refine_lm(const CameraParams& initial, std::span<const Observation2D3D> obs,
                   const LmOptions& opts) {
    if (obs.empty()) throw EmptyObservations("refine_lm: no observations");
    const int np = lm_parameter_count(opts.freeze_pose);
    const double n_obs = static_cast<double>(obs.size());

    LmResult result;
    result.params = initial;
    Eigen::VectorXd r;
    double cost = lm_cost(initial, obs, r);
    if (!std::isfinite(cost))
        throw DivergedOrStalled("refine_lm: initial parameters give non-finite residuals");
    result.rmse = std::sqrt(cost / n_obs);
    result.rmse_history.push_back(result.rmse);

    double lambda = opts.lambda_init;
    for (int iter = 0; iter < opts.max_iters; ++iter) {
        result.iterations = iter + 1;
        if (cost <= 1e-24 * n_obs) break;  // at machine-level optimum

        const Eigen::MatrixXd j = lm_jacobian(result.params, obs, opts.freeze_pose);
        const Eigen::MatrixXd jtj = j.transpose() * j;
        const Eigen::VectorXd g = j.transpose() * r;

        bool accepted = false;
        while (!accepted) {
            Eigen::MatrixXd a = jtj;
            const double floor = 1e-12 * jtj.diagonal().maxCoeff() + 1e-300;
            for (int k = 0; k < np; ++k)
                a(k, k) += lambda * std::max(jtj(k, k), floor);
            const Eigen::VectorXd dx = a.ldlt().solve(-g);

            if (!dx.allFinite() || dx.cwiseAbs().maxCoeff() < 1e-15) {
                return result;  // step has collapsed; converged
            }
            const CameraParams trial =
                lm_apply_step(result.params, dx, opts.freeze_pose);
            Eigen::VectorXd trial_r;
            const double trial_cost = lm_cost(trial, obs, trial_r);
            if (trial_cost < cost) {
                const double improvement = (cost - trial_cost) / cost;
                result.params = trial;
                r = trial_r;
                cost = trial_cost;
                result.rmse = std::sqrt(cost / n_obs);
                result.rmse_history.push_back(result.rmse);
                lambda = std::max(lambda / opts.lambda_factor, 1e-15);
                accepted = true;
                if (improvement < opts.tol) return result;
            } else {
                lambda *= opts.lambda_factor;
                if (lambda > opts.lambda_max)
                    throw DivergedOrStalled("refine_lm: damping exceeded limit");
            }
        }
    }
    return result;
}

}  // namespace holo
