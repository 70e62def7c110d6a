#ifndef SKILLTRACK_KALMAN_FILTER_HPP
#define SKILLTRACK_KALMAN_FILTER_HPP

#include <algorithm>
#include <array>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "skilltrack/data_model.hpp"
#include "skilltrack/error.hpp"

namespace skilltrack {

/// Constant-velocity box state: (cx, cy, area, aspect, v_cx, v_cy, v_area, v_aspect).
/// Time is measured in frames.
struct KalmanState {
    using Vector = Eigen::Matrix<double, 8, 1>;
    using Matrix = Eigen::Matrix<double, 8, 8>;

    Vector mean = Vector::Zero();
    Matrix covariance = Matrix::Zero();

    double cx() const { return mean[0]; }
    double cy() const { return mean[1]; }
    double area() const { return mean[2]; }
    double aspect() const { return mean[3]; }
};

/// Noise model. Measurement noise scales with the observed box; process noise
/// is fixed in pixels so one configuration covers every track of a sequence.
struct KalmanConfig {
    // Measurement std as a fraction of the box scale: sqrt(area) for the
    // center, area for area (doubled, area is quadratic in side), aspect for aspect.
    double measurement_std_weight = 1.0 / 20.0;
    // Per-frame process std of (cx, cy), (area), (aspect). Defaults assume 1920x1080.
    double process_position_std = std::hypot(1920.0, 1080.0) / 160.0;
    double process_area_std = std::pow(std::hypot(1920.0, 1080.0) / 160.0, 2);
    double process_aspect_std = 0.01;
    // Velocity process std as a fraction of the matching position std.
    double process_velocity_ratio = 0.5;
    // Initial velocity variance as a multiple of the initial position variance.
    double initial_velocity_variance_factor = 10.0;

    static KalmanConfig for_image(const SequenceMeta& meta) {
        KalmanConfig cfg;
        double diag = meta.diagonal();
        cfg.process_position_std = diag / 160.0;
        cfg.process_area_std = std::pow(diag / 160.0, 2);
        return cfg;
    }

    void validate() const {
        if (!(measurement_std_weight > 0) || !(process_position_std >= 0) || !(process_area_std >= 0) ||
            !(process_aspect_std >= 0) || !(process_velocity_ratio >= 0) || !(initial_velocity_variance_factor > 0))
            throw ValidationError("kalman config: noise parameters must be non-negative (weights positive)");
    }
};

class BoxKalmanFilter {
public:
    using Vector = KalmanState::Vector;
    using Matrix = KalmanState::Matrix;
    using Measurement = Eigen::Matrix<double, 4, 1>;

    explicit BoxKalmanFilter(KalmanConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

    const KalmanConfig& config() const { return cfg_; }

    static Measurement measure(const CenterBox& box) {
        if (!(box.w > 0) || !(box.h > 0)) throw ValidationError("kalman: bbox width and height must be positive");
        return {box.cx, box.cy, box.w * box.h, box.w / box.h};
    }

    /// Diagonal of the measurement covariance for a measured box.
    Measurement measurement_variance(const Measurement& z) const {
        double w = cfg_.measurement_std_weight;
        double scale = std::sqrt(z[2]);
        Measurement std{w * scale, w * scale, 2 * w * z[2], w * z[3]};
        return std.array().square();
    }

    /// Diagonal of the initial covariance for a measured box.
    Vector initial_variance(const Measurement& z) const {
        Measurement pos = measurement_variance(z);
        Vector var;
        var << pos, cfg_.initial_velocity_variance_factor * pos;
        return var;
    }

    KalmanState initiate(const CenterBox& box) const {
        Measurement z = measure(box);
        KalmanState s;
        s.mean << z, Measurement::Zero();
        s.covariance = initial_variance(z).asDiagonal();
        return s;
    }

    KalmanState initiate(const Detection& d) const { return initiate(d.bbox); }

    /// Advances `dt` frames. The mean is stepped frame by frame; the covariance
    /// uses the closed form of `dt` accumulated unit steps.
    KalmanState predict(const KalmanState& s, int dt = 1) const {
        if (dt < 1) throw ValidationError("kalman: dt must be >= 1 frame");
        KalmanState out = s;
        for (int step = 0; step < dt; ++step)
            for (int i = 0; i < 4; ++i) out.mean[i] += out.mean[i + 4];

        Matrix transition = Matrix::Identity();
        for (int i = 0; i < 4; ++i) transition(i, i + 4) = dt;

        const double t = dt;
        const double s1 = t * (t - 1) / 2;
        const double s2 = (t - 1) * t * (2 * t - 1) / 6;
        Matrix noise = Matrix::Zero();
        const auto q = unit_process_variance();
        for (int i = 0; i < 4; ++i) {
            double qp = q[i], qv = q[i + 4];
            noise(i, i) = t * qp + s2 * qv;
            noise(i, i + 4) = noise(i + 4, i) = s1 * qv;
            noise(i + 4, i + 4) = t * qv;
        }
        out.covariance = transition * s.covariance * transition.transpose() + noise;
        symmetrize(out.covariance);
        return out;
    }

    KalmanState update(const KalmanState& s, const CenterBox& box) const {
        Measurement z = measure(box);
        Eigen::Matrix<double, 4, 8> proj = Eigen::Matrix<double, 4, 8>::Zero();
        proj.leftCols<4>().setIdentity();

        Eigen::Matrix4d innovation_cov = proj * s.covariance * proj.transpose();
        innovation_cov.diagonal() += measurement_variance(z);
        Eigen::LLT<Eigen::Matrix4d> llt(innovation_cov);
        if (llt.info() != Eigen::Success || !(llt.matrixLLT().diagonal().minCoeff() > 1e-12))
            throw EstimationError("kalman: innovation covariance is numerically singular");

        // K = P H^T S^-1
        Eigen::Matrix<double, 8, 4> gain = llt.solve(proj * s.covariance).transpose();
        Measurement innovation = z - proj * s.mean;

        KalmanState out;
        out.mean = s.mean + gain * innovation;
        // Joseph form keeps the posterior PSD.
        Matrix ikh = Matrix::Identity() - gain * proj;
        Eigen::Matrix4d r = measurement_variance(z).asDiagonal();
        out.covariance = ikh * s.covariance * ikh.transpose() + gain * r * gain.transpose();
        symmetrize(out.covariance);
        // area and aspect stay positive
        out.mean[2] = std::max(out.mean[2], 1e-6);
        out.mean[3] = std::max(out.mean[3], 1e-6);
        return out;
    }

    KalmanState update(const KalmanState& s, const Detection& d) const { return update(s, d.bbox); }

private:
    std::array<double, 8> unit_process_variance() const {
        const double v = cfg_.process_velocity_ratio;
        const double p = cfg_.process_position_std, a = cfg_.process_area_std, r = cfg_.process_aspect_std;
        return {p * p, p * p, a * a, r * r, v * v * p * p, v * v * p * p, v * v * a * a, v * v * r * r};
    }

    static void symmetrize(Matrix& m) { m = (0.5 * (m + m.transpose())).eval(); }

    KalmanConfig cfg_;
};

}  // namespace skilltrack

#endif
