#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "logdesign/env.hpp"
#include "logdesign/policy.hpp"

namespace logdesign {

class LoggedDataset;

/// Which informational regime a logging design answers.
enum class Regime {
    Uniform,         // mu unknown, target unknown: worst-case optimal uniform logging
    KnownMuMinimax,  // mu known, target unknown: pi ~ mu / (c + mu^2)
    MatchTarget,     // mu unknown, target known: log with the target itself
    Neyman,          // mu and target known: pi ~ pi_t * sqrt(mu)
    PseudoTarget,    // mu known, distribution over targets known
};

/// CLI names: uniform, minimax-mu, match-target, neyman, pseudo-target.
std::string_view regime_name(Regime regime);
Regime regime_from_name(std::string_view name);
/// Human-readable description recorded in reports.
std::string_view regime_label(Regime regime);

/// A finite distribution over target policies.
class TargetEnsemble {
public:
    TargetEnsemble(std::vector<Policy> policies, std::vector<double> weights);

    const std::vector<Policy>& policies() const { return policies_; }
    const std::vector<double>& weights() const { return weights_; }

    /// sqrt(E[pi_t(a|x)^2]) per (action, context). Not a probability matrix.
    Eigen::MatrixXd pseudo_target() const;

private:
    std::vector<Policy> policies_;
    std::vector<double> weights_;
};

struct DesignReport {
    Policy policy;
    Regime regime;
    /// Per-context normalizing constants c (known-mu minimax only).
    std::optional<std::vector<double>> normalizing_constants;
    /// Human-readable notes about fallbacks and support reductions.
    std::vector<std::string> flags;
};

DesignReport design_uniform(const Environment& env);

/// Per context, pi(a|x) = mu / (c + mu^2) with c chosen so the column sums to 1.
/// Actions with mu = 0 get probability 0 (flagged); an all-zero column falls
/// back to uniform (flagged).
DesignReport design_known_mu_minimax(const Environment& env);

/// pi(a|x) = pi_t(a|x) sqrt(mu(a,x)) / sum_a' pi_t(a'|x) sqrt(mu(a',x)).
DesignReport design_neyman(const Environment& env, const Policy& target);

DesignReport design_match_target(const Policy& target);

/// Neyman allocation against the ensemble's pseudo-target.
DesignReport design_pseudo_target(const Environment& env, const TargetEnsemble& ensemble);

struct NormalizerSolution {
    double c = 0.0;
    /// |sum_a mu / (c + mu^2) - 1| at the returned c.
    double residual = 0.0;
    int iterations = 0;
};

/// Bisection for c >= 0 on [0, sum(mu)] solving sum_a mu_a / (c + mu_a^2) = 1
/// over the strictly positive entries. Stops at residual <= 1e-12 or after
/// 200 halvings.
NormalizerSolution solve_minimax_normalizer(std::span<const double> mu_column);

struct ShrinkageFit {
    /// w* clamped to [0, 1].
    double weight = 1.0;
    /// Mean of mu_hat across actions, per context.
    Eigen::VectorXd context_means;
    double cov_estimate = 0.0;
    double var_estimate = 0.0;
    std::vector<std::string> flags;
};

/// Fits w* = clamp(1 - Cov(mu_hat(x_i, a_i), r_i) / Var(mu_hat(x_i, a_i)), 0, 1)
/// on an auxiliary dataset. `aux` must be held out from whatever data trained
/// `model`; that cannot be checked here.
ShrinkageFit fit_shrinkage(const RewardModel& model, const LoggedDataset& aux);

/// Shrink toward per-context means: (1 - w) mu_hat + w mean_x, re-clamped.
RewardModel apply_shrinkage(const RewardModel& model, const ShrinkageFit& fit);

/// Shrinkage with a caller-chosen weight and context means taken from `model`.
RewardModel apply_shrinkage(const RewardModel& model, double weight);

/// 1 / (mu(a,x) (n Pr(x) + 1)). Propensities above this value guarantee that
/// including the action lowers MSE. Empty when mu(a,x) = 0, where the
/// condition is vacuous. Values above 1 mean no feasible propensity qualifies.
std::optional<double> sufficiency_threshold(const Environment& env, std::size_t context, std::size_t action,
                                            std::size_t n);

}  // namespace logdesign
