#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "logdesign/env.hpp"
#include "logdesign/policy.hpp"

namespace logdesign {

struct LogRecord {
    std::size_t context = 0;
    std::size_t action = 0;
    int reward = 0;  // 0 or 1
};

/// Logged bandit feedback plus the logging policy that produced it. Every
/// record's action lies in the logging support at its context.
class LoggedDataset {
public:
    LoggedDataset(std::vector<LogRecord> records, Policy logging_policy);

    const std::vector<LogRecord>& records() const { return records_; }
    const Policy& logging_policy() const { return logging_policy_; }
    std::size_t n() const { return records_.size(); }

private:
    std::vector<LogRecord> records_;
    Policy logging_policy_;
};

struct MseBreakdown {
    double bias_sq = 0.0;
    double variance = 0.0;  // includes the 1/n factor
    double mse = 0.0;       // bias_sq + variance
    std::size_t n = 0;
};

/// Sample-size-free pieces of the closed-form MSE: variance at n is
/// unit_variance / n and the squared bias does not depend on n.
struct MseTerms {
    double bias_sq = 0.0;
    double unit_variance = 0.0;

    MseBreakdown at(std::size_t n) const;
};

struct McSummary {
    std::size_t replications = 0;
    std::vector<double> estimates;
    double empirical_mean = 0.0;
    /// Mean of (estimate - V(target))^2.
    double empirical_mse = 0.0;
    double true_value = 0.0;
};

/// Logging propensities below this value count as outside the support.
inline constexpr double kSupportThreshold = 1e-15;

/// V(pi) = sum_x Pr(x) sum_a pi(a|x) mu(a,x).
double policy_value(const Environment& env, const Policy& policy);

/// (1/N) sum_i pi_t(A_i|X_i) / pi_l(A_i|X_i) R_i.
double ipw_estimate(const LoggedDataset& data, const Policy& target);

/// Squared bias from target mass outside the logging support plus the
/// context-conditional variance of the IPW estimator:
///   bias^2 = (sum_x Pr(x) sum_{a not in A_x} pi_t mu)^2
///   var    = (1/n) sum_x Pr(x) [sum_{a in A_x} pi_t^2 mu / pi_l - (sum_{a in A_x} pi_t mu)^2]
MseTerms mse_terms(const Environment& env, const Policy& target, const Policy& logging);
MseBreakdown closed_form_mse(const Environment& env, const Policy& target, const Policy& logging, std::size_t n);

/// n i.i.d. triples: x ~ Pr, a ~ logging(.|x), r ~ Bernoulli(mu(a,x)). All
/// draws use inverse-CDF lookups on 53-bit uniforms from the seeded engine.
LoggedDataset simulate_dataset(const Environment& env, const Policy& logging, std::size_t n, std::uint64_t seed);

/// Replication j simulates with seed `seed + j`. Replications run on up to
/// `jobs` threads; results land in replication order.
McSummary monte_carlo_mse(const Environment& env, const Policy& target, const Policy& logging, std::size_t n,
                          std::size_t replications, std::uint64_t seed, std::size_t jobs = 1);

/// Worst-case closed-form MSE of `logging` over deterministic targets and
/// per-action rewards on the grid {0, step, 2 step, ..., 1}. Contexts with
/// their arrival probabilities come from `arrival_probs`; the logging policy
/// fixes the action count. Across contexts the bias terms add inside a square,
/// so the search enumerates which contexts contribute bias (at most 20 contexts).
double worst_case_mse(const Eigen::VectorXd& arrival_probs, const Policy& logging, std::size_t n,
                      double mu_grid_step = 1e-3);

}  // namespace logdesign
