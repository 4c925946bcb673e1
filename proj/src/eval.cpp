#include "logdesign/eval.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "internal/parallel.hpp"
#include "logdesign/errors.hpp"
#include "logdesign/random.hpp"

namespace logdesign {

namespace {

void require_same_shape(const Environment& env, const Policy& policy, std::string_view what) {
    require(policy.n_actions() == env.n_actions() && policy.n_contexts() == env.n_contexts(),
            std::string(what) + " shape does not match the environment");
}

bool logged(double propensity) { return propensity >= kSupportThreshold; }

// Inverse-CDF sampler over one probability vector. Zero-mass entries are
// never returned.
class CategoricalSampler {
public:
    explicit CategoricalSampler(const Eigen::Ref<const Eigen::VectorXd>& probs)
        : cumulative_(static_cast<std::size_t>(probs.size())) {
        double running = 0.0;
        for (Eigen::Index i = 0; i < probs.size(); ++i) {
            running += probs(i);
            cumulative_[static_cast<std::size_t>(i)] = running;
            if (probs(i) > 0.0) {
                last_positive_ = static_cast<std::size_t>(i);
            }
        }
    }

    std::size_t operator()(Rng& rng) const {
        const double u = uniform01(rng) * cumulative_.back();
        const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        const auto index = static_cast<std::size_t>(it - cumulative_.begin());
        return std::min(index, last_positive_);
    }

private:
    std::vector<double> cumulative_;
    std::size_t last_positive_ = 0;
};

}  // namespace

LoggedDataset::LoggedDataset(std::vector<LogRecord> records, Policy logging_policy)
    : records_(std::move(records)), logging_policy_(std::move(logging_policy)) {
    for (const auto& r : records_) {
        require(r.context < logging_policy_.n_contexts() && r.action < logging_policy_.n_actions(),
                "logged record indexes outside the policy shape");
        require(logging_policy_.in_support(r.action, r.context),
                "logged action lies outside the logging support at its context");
        require(r.reward == 0 || r.reward == 1, "logged rewards must be 0 or 1");
    }
}

MseBreakdown MseTerms::at(std::size_t n) const {
    require(n >= 1, "sample count must be at least 1");
    const double variance = unit_variance / static_cast<double>(n);
    return MseBreakdown{bias_sq, variance, bias_sq + variance, n};
}

double policy_value(const Environment& env, const Policy& policy) {
    require_same_shape(env, policy, "policy");
    const auto& mu = env.mu();
    const auto& probs = policy.probs();
    double value = 0.0;
    for (Eigen::Index x = 0; x < mu.cols(); ++x) {
        value += env.arrival(static_cast<std::size_t>(x)) * probs.col(x).dot(mu.col(x));
    }
    return value;
}

double ipw_estimate(const LoggedDataset& data, const Policy& target) {
    const auto& logging = data.logging_policy();
    require(target.n_actions() == logging.n_actions() && target.n_contexts() == logging.n_contexts(),
            "target shape does not match the logging policy");
    if (data.n() == 0) {
        throw ValidationError("IPW estimate needs at least one record");
    }
    double total = 0.0;
    for (const auto& r : data.records()) {
        if (r.reward != 0) {
            total += target(r.action, r.context) / logging(r.action, r.context);
        }
    }
    return total / static_cast<double>(data.n());
}

MseTerms mse_terms(const Environment& env, const Policy& target, const Policy& logging) {
    require_same_shape(env, target, "target policy");
    require_same_shape(env, logging, "logging policy");
    const auto& mu = env.mu();
    double bias = 0.0;
    double unit_variance = 0.0;
    for (Eigen::Index x = 0; x < mu.cols(); ++x) {
        const auto ctx = static_cast<std::size_t>(x);
        double missed = 0.0;
        double second_moment = 0.0;
        double first_moment = 0.0;
        for (Eigen::Index a = 0; a < mu.rows(); ++a) {
            const auto act = static_cast<std::size_t>(a);
            const double pt = target(act, ctx);
            if (pt == 0.0) {
                continue;
            }
            const double m = mu(a, x);
            const double pl = logging(act, ctx);
            if (logged(pl)) {
                second_moment += pt * pt * m / pl;
                first_moment += pt * m;
            } else {
                missed += pt * m;
            }
        }
        const double p = env.arrival(ctx);
        bias += p * missed;
        unit_variance += p * (second_moment - first_moment * first_moment);
    }
    return MseTerms{bias * bias, std::max(unit_variance, 0.0)};
}

MseBreakdown closed_form_mse(const Environment& env, const Policy& target, const Policy& logging, std::size_t n) {
    return mse_terms(env, target, logging).at(n);
}

LoggedDataset simulate_dataset(const Environment& env, const Policy& logging, std::size_t n, std::uint64_t seed) {
    require_same_shape(env, logging, "logging policy");
    require(n >= 1, "sample count must be at least 1");
    Rng rng = make_rng(seed);
    const CategoricalSampler arrivals(env.arrival_probs());
    std::vector<std::optional<CategoricalSampler>> actions(env.n_contexts());
    std::vector<LogRecord> records;
    records.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = arrivals(rng);
        auto& sampler = actions[x];
        if (!sampler) {
            sampler.emplace(logging.probs().col(static_cast<Eigen::Index>(x)));
        }
        const auto a = (*sampler)(rng);
        const int r = uniform01(rng) < env.mu(a, x) ? 1 : 0;
        records.push_back(LogRecord{x, a, r});
    }
    return LoggedDataset(std::move(records), logging);
}

McSummary monte_carlo_mse(const Environment& env, const Policy& target, const Policy& logging, std::size_t n,
                          std::size_t replications, std::uint64_t seed, std::size_t jobs) {
    require(replications >= 1, "replications must be at least 1");
    require_same_shape(env, target, "target policy");
    McSummary summary;
    summary.replications = replications;
    summary.true_value = policy_value(env, target);
    summary.estimates.assign(replications, 0.0);
    detail::parallel_for(replications, jobs, [&](std::size_t j) {
        const auto data = simulate_dataset(env, logging, n, seed + j);
        summary.estimates[j] = ipw_estimate(data, target);
    });
    double sum = 0.0;
    double squared_error = 0.0;
    for (double v : summary.estimates) {
        sum += v;
        squared_error += (v - summary.true_value) * (v - summary.true_value);
    }
    summary.empirical_mean = sum / static_cast<double>(replications);
    summary.empirical_mse = squared_error / static_cast<double>(replications);
    return summary;
}

double worst_case_mse(const Eigen::VectorXd& arrival_probs, const Policy& logging, std::size_t n,
                      double mu_grid_step) {
    require(mu_grid_step > 0.0 && mu_grid_step < 1.0, "grid step must lie in (0, 1)");
    require(n >= 1, "sample count must be at least 1");
    require(static_cast<std::size_t>(arrival_probs.size()) == logging.n_contexts(),
            "arrival probabilities do not match the logging policy");
    const auto n_contexts = logging.n_contexts();
    require(n_contexts <= 20, "worst-case search supports at most 20 contexts");

    std::vector<double> grid;
    for (std::size_t i = 0;; ++i) {
        const double v = static_cast<double>(i) * mu_grid_step;
        if (v >= 1.0) {
            break;
        }
        grid.push_back(v);
    }
    grid.push_back(1.0);

    // Per context: the largest variance term a deterministic target can force
    // on a logged action, and whether some action is unlogged (bias option).
    std::vector<double> variance_term(n_contexts, 0.0);
    std::vector<bool> has_gap(n_contexts, false);
    for (std::size_t x = 0; x < n_contexts; ++x) {
        double smallest = 2.0;
        for (std::size_t a = 0; a < logging.n_actions(); ++a) {
            const double pl = logging(a, x);
            if (logged(pl)) {
                smallest = std::min(smallest, pl);
            } else {
                has_gap[x] = true;
            }
        }
        // mu / pl - mu^2 decreases in pl, so the least-logged action dominates.
        if (smallest <= 1.0) {
            for (double m : grid) {
                variance_term[x] = std::max(variance_term[x], m / smallest - m * m);
            }
        }
    }

    // An unlogged action at reward 1 maximizes that context's bias term.
    double worst = 0.0;
    const std::size_t subsets = std::size_t{1} << n_contexts;
    for (std::size_t mask = 0; mask < subsets; ++mask) {
        double bias = 0.0;
        double variance = 0.0;
        bool feasible = true;
        for (std::size_t x = 0; x < n_contexts && feasible; ++x) {
            const double p = arrival_probs(static_cast<Eigen::Index>(x));
            if ((mask >> x) & 1U) {
                feasible = has_gap[x];
                bias += p;
            } else {
                variance += p * variance_term[x];
            }
        }
        if (feasible) {
            worst = std::max(worst, bias * bias + variance / static_cast<double>(n));
        }
    }
    return worst;
}

}  // namespace logdesign
