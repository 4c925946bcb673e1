#include "logdesign/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "logdesign/errors.hpp"
#include "logdesign/eval.hpp"

namespace logdesign {

namespace {

constexpr double kNormalizerTolerance = 1e-12;
constexpr int kMaxBisections = 200;

double normalizer_sum(std::span<const double> mu, double c) {
    double total = 0.0;
    for (double m : mu) {
        if (m > 0.0) {
            total += m / (c + m * m);
        }
    }
    return total;
}

std::string context_note(const Environment& env, std::size_t x, std::string_view what) {
    return "context " + env.contexts()[x] + ": " + std::string(what);
}

void require_same_shape(const Environment& env, const Policy& policy, std::string_view what) {
    require(policy.n_actions() == env.n_actions() && policy.n_contexts() == env.n_contexts(),
            std::string(what) + " shape does not match the environment");
}

// Allocates each column proportionally to weight(a,x) * sqrt(mu(a,x)). A
// column whose allocation mass vanishes falls back to uniform over the
// support of `weights`.
DesignReport sqrt_reward_allocation(const Environment& env, const Eigen::MatrixXd& weights, Regime regime,
                                    std::string_view fallback_note) {
    const auto& mu = env.mu();
    Eigen::MatrixXd probs = Eigen::MatrixXd::Zero(mu.rows(), mu.cols());
    std::vector<std::string> flags;
    for (Eigen::Index x = 0; x < mu.cols(); ++x) {
        double total = 0.0;
        for (Eigen::Index a = 0; a < mu.rows(); ++a) {
            const double w = weights(a, x) * std::sqrt(mu(a, x));
            probs(a, x) = w;
            total += w;
        }
        if (total > 0.0) {
            probs.col(x) /= total;
            continue;
        }
        Eigen::Index support = 0;
        for (Eigen::Index a = 0; a < mu.rows(); ++a) {
            support += weights(a, x) > 0.0 ? 1 : 0;
        }
        require(support > 0, "allocation weights vanish in a context");
        for (Eigen::Index a = 0; a < mu.rows(); ++a) {
            probs(a, x) = weights(a, x) > 0.0 ? 1.0 / static_cast<double>(support) : 0.0;
        }
        flags.push_back(context_note(env, static_cast<std::size_t>(x), fallback_note));
    }
    return DesignReport{Policy(std::move(probs)), regime, std::nullopt, std::move(flags)};
}

}  // namespace

std::string_view regime_name(Regime regime) {
    switch (regime) {
        case Regime::Uniform: return "uniform";
        case Regime::KnownMuMinimax: return "minimax-mu";
        case Regime::MatchTarget: return "match-target";
        case Regime::Neyman: return "neyman";
        case Regime::PseudoTarget: return "pseudo-target";
    }
    return "unknown";
}

Regime regime_from_name(std::string_view name) {
    for (auto r : {Regime::Uniform, Regime::KnownMuMinimax, Regime::MatchTarget, Regime::Neyman,
                   Regime::PseudoTarget}) {
        if (regime_name(r) == name) {
            return r;
        }
    }
    throw ValidationError("unknown regime '" + std::string(name) +
                          "' (expected uniform, minimax-mu, match-target, neyman or pseudo-target)");
}

std::string_view regime_label(Regime regime) {
    switch (regime) {
        case Regime::Uniform: return "unknown-mu/unknown-target minimax";
        case Regime::KnownMuMinimax: return "known-mu/unknown-target minimax";
        case Regime::MatchTarget: return "unknown-mu/known-target minimax";
        case Regime::Neyman: return "known-mu/known-target variance optimum";
        case Regime::PseudoTarget: return "known-mu/target-distribution expected-MSE optimum";
    }
    return "unknown";
}

TargetEnsemble::TargetEnsemble(std::vector<Policy> policies, std::vector<double> weights)
    : policies_(std::move(policies)), weights_(std::move(weights)) {
    require(!policies_.empty(), "target ensemble needs at least one policy");
    require(weights_.size() == policies_.size(), "target ensemble needs one weight per policy");
    double total = 0.0;
    for (double w : weights_) {
        require(std::isfinite(w) && w >= 0.0, "ensemble weights must be nonnegative");
        total += w;
    }
    require(std::abs(total - 1.0) <= kSimplexTolerance, "ensemble weights must sum to 1");
    for (const auto& p : policies_) {
        require(p.n_actions() == policies_.front().n_actions() && p.n_contexts() == policies_.front().n_contexts(),
                "ensemble policies must share one shape");
    }
}

Eigen::MatrixXd TargetEnsemble::pseudo_target() const {
    const auto& first = policies_.front().probs();
    Eigen::MatrixXd second_moment = Eigen::MatrixXd::Zero(first.rows(), first.cols());
    for (std::size_t j = 0; j < policies_.size(); ++j) {
        second_moment += weights_[j] * policies_[j].probs().cwiseAbs2();
    }
    return second_moment.cwiseSqrt();
}

DesignReport design_uniform(const Environment& env) {
    return DesignReport{uniform_policy(env.n_actions(), env.n_contexts()), Regime::Uniform, std::nullopt, {}};
}

NormalizerSolution solve_minimax_normalizer(std::span<const double> mu_column) {
    double hi = 0.0;
    for (double m : mu_column) {
        require(std::isfinite(m) && m >= 0.0 && m <= 1.0, "rewards must lie in [0, 1]");
        hi += m;
    }
    require(hi > 0.0, "normalizer needs at least one positive reward");
    double lo = 0.0;
    // g(c) = sum mu / (c + mu^2) decreases in c, g(0) >= 1 and g(sum mu) <= 1.
    NormalizerSolution best{hi, std::abs(normalizer_sum(mu_column, hi) - 1.0), 0};
    for (int it = 1; it <= kMaxBisections; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double g = normalizer_sum(mu_column, mid);
        const double residual = std::abs(g - 1.0);
        if (residual < best.residual) {
            best = {mid, residual, it};
        }
        best.iterations = it;
        if (residual <= kNormalizerTolerance || mid <= lo || mid >= hi) {
            break;
        }
        (g > 1.0 ? lo : hi) = mid;
    }
    return best;
}

DesignReport design_known_mu_minimax(const Environment& env) {
    const auto& mu = env.mu();
    Eigen::MatrixXd probs = Eigen::MatrixXd::Zero(mu.rows(), mu.cols());
    std::vector<double> constants(env.n_contexts(), 0.0);
    std::vector<std::string> flags;
    for (Eigen::Index x = 0; x < mu.cols(); ++x) {
        const auto column = std::span<const double>(mu.col(x).data(), static_cast<std::size_t>(mu.rows()));
        const auto positive = std::count_if(column.begin(), column.end(), [](double m) { return m > 0.0; });
        const auto ctx = static_cast<std::size_t>(x);
        if (positive == 0) {
            probs.col(x).setConstant(1.0 / static_cast<double>(mu.rows()));
            constants[ctx] = std::numeric_limits<double>::quiet_NaN();
            flags.push_back(context_note(env, ctx, "all rewards are zero; fell back to uniform"));
            continue;
        }
        if (positive < mu.rows()) {
            flags.push_back(context_note(env, ctx,
                                         "support reduced to " + std::to_string(positive) +
                                             " actions with positive reward"));
        }
        const auto solution = solve_minimax_normalizer(column);
        constants[ctx] = solution.c;
        double total = 0.0;
        for (Eigen::Index a = 0; a < mu.rows(); ++a) {
            const double m = mu(a, x);
            probs(a, x) = m > 0.0 ? m / (solution.c + m * m) : 0.0;
            total += probs(a, x);
        }
        probs.col(x) /= total;
    }
    return DesignReport{Policy(std::move(probs)), Regime::KnownMuMinimax, std::move(constants), std::move(flags)};
}

DesignReport design_neyman(const Environment& env, const Policy& target) {
    require_same_shape(env, target, "target policy");
    return sqrt_reward_allocation(env, target.probs(), Regime::Neyman,
                                  "target supported only on zero-reward actions; uniform over target support");
}

DesignReport design_match_target(const Policy& target) {
    return DesignReport{target, Regime::MatchTarget, std::nullopt, {}};
}

DesignReport design_pseudo_target(const Environment& env, const TargetEnsemble& ensemble) {
    require_same_shape(env, ensemble.policies().front(), "ensemble policy");
    return sqrt_reward_allocation(env, ensemble.pseudo_target(), Regime::PseudoTarget,
                                  "ensemble supported only on zero-reward actions; uniform over ensemble support");
}

ShrinkageFit fit_shrinkage(const RewardModel& model, const LoggedDataset& aux) {
    require(aux.n() > 0, "auxiliary dataset must not be empty");
    const auto& mu_hat = model.mu_hat();
    require(aux.logging_policy().n_actions() == model.n_actions() &&
                aux.logging_policy().n_contexts() == model.n_contexts(),
            "auxiliary dataset shape does not match the reward model");

    const auto m = static_cast<double>(aux.n());
    double mean_pred = 0.0;
    double mean_reward = 0.0;
    double lowest = INFINITY;
    double highest = -INFINITY;
    for (const auto& r : aux.records()) {
        const double p = mu_hat(static_cast<Eigen::Index>(r.action), static_cast<Eigen::Index>(r.context));
        mean_pred += p;
        mean_reward += r.reward;
        lowest = std::min(lowest, p);
        highest = std::max(highest, p);
    }
    mean_pred /= m;
    mean_reward /= m;
    double cov = 0.0;
    double var = 0.0;
    for (const auto& r : aux.records()) {
        const double d = mu_hat(static_cast<Eigen::Index>(r.action), static_cast<Eigen::Index>(r.context)) - mean_pred;
        cov += d * (r.reward - mean_reward);
        var += d * d;
    }
    cov /= m;
    var /= m;
    // Summation rounding leaves a tiny positive variance for constant predictions.
    if (lowest == highest) {
        cov = 0.0;
        var = 0.0;
    }

    ShrinkageFit fit;
    fit.context_means = mu_hat.colwise().mean().transpose();
    fit.cov_estimate = cov;
    fit.var_estimate = var;
    if (var > 0.0) {
        fit.weight = std::clamp(1.0 - cov / var, 0.0, 1.0);
    } else {
        fit.weight = 1.0;
        fit.flags.emplace_back("predictions are constant on the auxiliary data; weight set to 1");
    }
    return fit;
}

RewardModel apply_shrinkage(const RewardModel& model, const ShrinkageFit& fit) {
    require(static_cast<std::size_t>(fit.context_means.size()) == model.n_contexts(),
            "shrinkage fit does not match the reward model");
    require(fit.weight >= 0.0 && fit.weight <= 1.0, "shrinkage weight must lie in [0, 1]");
    RewardMatrix shrunk = (1.0 - fit.weight) * model.mu_hat();
    shrunk.rowwise() += fit.weight * fit.context_means.transpose();
    return RewardModel(std::move(shrunk), model.floor());
}

RewardModel apply_shrinkage(const RewardModel& model, double weight) {
    ShrinkageFit fit;
    fit.weight = weight;
    fit.context_means = model.mu_hat().colwise().mean().transpose();
    return apply_shrinkage(model, fit);
}

std::optional<double> sufficiency_threshold(const Environment& env, std::size_t context, std::size_t action,
                                            std::size_t n) {
    require(context < env.n_contexts() && action < env.n_actions(), "context or action out of range");
    require(n >= 1, "sample count must be at least 1");
    const double p = env.arrival(context);
    require(p > 0.0, "context must have positive arrival probability");
    const double m = env.mu(action, context);
    if (m == 0.0) {
        return std::nullopt;
    }
    return 1.0 / (m * (static_cast<double>(n) * p + 1.0));
}

}  // namespace logdesign
