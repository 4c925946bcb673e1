#pragma once

// Brute-force reference computations. Deliberately written without the
// library's MSE or design code so tests compare two independent routes.

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

// Variance of the single-draw IPW variable Z = pi_t/pi_l * R with the context
// held fixed, averaged over contexts: sum over every (x, a, r) outcome of
// Pr(x) pi_l(a|x) Pr(r) z^2, minus sum_x Pr(x) E[Z | x]^2. Actions with
// pi_l below `support_floor` are never drawn.
inline double enumerated_conditional_variance(const Eigen::VectorXd& arrivals, const Eigen::MatrixXd& mu,
                                              const Eigen::MatrixXd& target, const Eigen::MatrixXd& logging,
                                              double support_floor = 1e-15) {
    double second = 0.0;
    double mean_sq = 0.0;
    for (Eigen::Index x = 0; x < mu.cols(); ++x) {
        double conditional_mean = 0.0;
        for (Eigen::Index a = 0; a < mu.rows(); ++a) {
            const double pl = logging(a, x);
            if (pl < support_floor) {
                continue;
            }
            for (int r = 0; r <= 1; ++r) {
                const double pr = r == 1 ? mu(a, x) : 1.0 - mu(a, x);
                const double z = target(a, x) / pl * r;
                second += arrivals(x) * pl * pr * z * z;
                conditional_mean += pl * pr * z;
            }
        }
        mean_sq += arrivals(x) * conditional_mean * conditional_mean;
    }
    return second - mean_sq;
}

// Squared bias from target mass on actions the logging policy never draws.
inline double unsupported_bias_sq(const Eigen::VectorXd& arrivals, const Eigen::MatrixXd& mu,
                                  const Eigen::MatrixXd& target, const Eigen::MatrixXd& logging) {
    double bias = 0.0;
    for (Eigen::Index x = 0; x < mu.cols(); ++x) {
        for (Eigen::Index a = 0; a < mu.rows(); ++a) {
            if (logging(a, x) == 0.0) {
                bias += arrivals(x) * target(a, x) * mu(a, x);
            }
        }
    }
    return bias * bias;
}

// Scans c on a uniform grid over [0, sum mu] and returns the grid point
// where sum mu / (c + mu^2) is closest to 1.
inline double dense_grid_normalizer(const std::vector<double>& mu, std::size_t points = 1'000'000) {
    double hi = 0.0;
    for (double m : mu) hi += m;
    double best_c = 0.0;
    double best_gap = INFINITY;
    for (std::size_t i = 0; i <= points; ++i) {
        const double c = hi * static_cast<double>(i) / static_cast<double>(points);
        double g = 0.0;
        for (double m : mu) {
            if (m > 0.0) g += m / (c + m * m);
        }
        if (std::abs(g - 1.0) < best_gap) {
            best_gap = std::abs(g - 1.0);
            best_c = c;
        }
    }
    return best_c;
}

// Expected (over an ensemble of targets) IPW second moment for three actions
// in one context, minimized over the 2-simplex on a grid of the given step.
// The first-moment term does not depend on the logging policy, so the
// argmin of the second moment is the argmin of expected variance.
inline Eigen::Vector3d grid_argmin_expected_variance(const std::vector<Eigen::Vector3d>& targets,
                                                     const std::vector<double>& weights, const Eigen::Vector3d& mu,
                                                     double step = 1e-3) {
    const auto steps = static_cast<int>(std::lround(1.0 / step));
    Eigen::Vector3d best = Eigen::Vector3d::Constant(1.0 / 3.0);
    double best_value = INFINITY;
    for (int i = 1; i < steps; ++i) {
        for (int j = 1; i + j < steps; ++j) {
            const Eigen::Vector3d pl(i * step, j * step, (steps - i - j) * step);
            double value = 0.0;
            for (std::size_t t = 0; t < targets.size(); ++t) {
                for (int a = 0; a < 3; ++a) {
                    value += weights[t] * targets[t](a) * targets[t](a) * mu(a) / pl(a);
                }
            }
            if (value < best_value) {
                best_value = value;
                best = pl;
            }
        }
    }
    return best;
}

}  // namespace oracle
