#include "logdesign/env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "logdesign/errors.hpp"
#include "logdesign/random.hpp"

namespace logdesign {

namespace {

std::vector<std::string> default_ids(char prefix, std::size_t count) {
    std::vector<std::string> ids;
    ids.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        ids.push_back(prefix + std::to_string(i));
    }
    return ids;
}

Eigen::VectorXd uniform_arrivals(std::size_t n_contexts) {
    return Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n_contexts),
                                     1.0 / static_cast<double>(n_contexts));
}

// Fills each column with `sorted_values` assigned through a fresh permutation.
RewardMatrix permuted_columns(const std::vector<double>& sorted_values, std::size_t n_contexts,
                              std::uint64_t seed) {
    const auto n_actions = sorted_values.size();
    RewardMatrix mu(static_cast<Eigen::Index>(n_actions), static_cast<Eigen::Index>(n_contexts));
    Rng rng = make_rng(seed);
    std::vector<std::size_t> order(n_actions);
    for (std::size_t x = 0; x < n_contexts; ++x) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t i = 0; i < n_actions; ++i) {
            mu(static_cast<Eigen::Index>(order[i]), static_cast<Eigen::Index>(x)) = sorted_values[i];
        }
    }
    return mu;
}

}  // namespace

Environment::Environment(std::vector<std::string> contexts, std::vector<std::string> actions,
                         Eigen::VectorXd arrival_probs, RewardMatrix mu)
    : contexts_(std::move(contexts)),
      actions_(std::move(actions)),
      arrival_probs_(std::move(arrival_probs)),
      mu_(std::move(mu)) {
    require(!contexts_.empty(), "environment needs at least one context");
    require(!actions_.empty(), "environment needs at least one action");
    require(static_cast<std::size_t>(arrival_probs_.size()) == contexts_.size(),
            "arrival_probs length must equal the number of contexts");
    require(static_cast<std::size_t>(mu_.rows()) == actions_.size() &&
                static_cast<std::size_t>(mu_.cols()) == contexts_.size(),
            "mu must have shape (actions, contexts)");
    for (Eigen::Index x = 0; x < arrival_probs_.size(); ++x) {
        require(std::isfinite(arrival_probs_(x)) && arrival_probs_(x) >= 0.0,
                "arrival probabilities must be nonnegative");
    }
    require(std::abs(arrival_probs_.sum() - 1.0) <= kSimplexTolerance,
            "arrival probabilities must sum to 1");
    for (Eigen::Index x = 0; x < mu_.cols(); ++x) {
        for (Eigen::Index a = 0; a < mu_.rows(); ++a) {
            const double v = mu_(a, x);
            require(std::isfinite(v) && v >= 0.0 && v <= 1.0, "every mu entry must lie in [0, 1]");
        }
    }
}

Environment Environment::from_rewards(RewardMatrix mu, Eigen::VectorXd arrival_probs) {
    const auto n_actions = static_cast<std::size_t>(mu.rows());
    const auto n_contexts = static_cast<std::size_t>(mu.cols());
    require(n_actions > 0 && n_contexts > 0, "environment needs at least one action and context");
    if (arrival_probs.size() == 0) {
        arrival_probs = uniform_arrivals(n_contexts);
    }
    return Environment(default_ids('x', n_contexts), default_ids('a', n_actions), std::move(arrival_probs),
                       std::move(mu));
}

RewardModel::RewardModel(RewardMatrix estimates, double floor) : mu_hat_(std::move(estimates)), floor_(floor) {
    require(std::isfinite(floor_) && floor_ > 0.0 && floor_ <= 1.0, "model floor must lie in (0, 1]");
    require(mu_hat_.size() > 0, "reward model must not be empty");
    for (Eigen::Index i = 0; i < mu_hat_.size(); ++i) {
        double& v = mu_hat_.data()[i];
        require(!std::isnan(v), "reward estimates must not be NaN");
        v = std::clamp(v, floor_, 1.0);
    }
}

void validate(const GeometricSpec& spec) {
    require(spec.scale > 0.0 && spec.scale <= 1.0, "geometric scale must lie in (0, 1]");
    require(spec.decay >= 0.0 && spec.decay <= 1.0, "geometric decay must lie in [0, 1]");
    require(spec.scale * spec.decay <= 1.0, "geometric scale * decay must not exceed 1");
}

Environment make_geometric_env(std::size_t n_contexts, std::size_t n_actions, const GeometricSpec& spec) {
    require(n_contexts >= 1, "n_contexts must be at least 1");
    require(n_actions >= 1, "n_actions must be at least 1");
    validate(spec);
    std::vector<double> values(n_actions);
    double level = spec.scale;
    for (std::size_t i = 0; i < n_actions; ++i) {
        level *= spec.decay;
        values[i] = level;
    }
    return Environment::from_rewards(permuted_columns(values, n_contexts, spec.seed));
}

Environment make_linear_env(std::size_t n_contexts, std::size_t n_actions, double top_value,
                            std::uint64_t seed) {
    require(n_contexts >= 1, "n_contexts must be at least 1");
    require(n_actions >= 1, "n_actions must be at least 1");
    require(top_value > 0.0 && top_value <= 1.0, "linear top value must lie in (0, 1]");
    std::vector<double> values(n_actions, top_value);
    if (n_actions > 1) {
        const double last = static_cast<double>(n_actions - 1);
        for (std::size_t i = 0; i < n_actions; ++i) {
            values[i] = top_value * static_cast<double>(n_actions - 1 - i) / last;
        }
    }
    return Environment::from_rewards(permuted_columns(values, n_contexts, seed));
}

RewardModel make_noisy_model(const Environment& env, double noise_sd, double floor, std::uint64_t seed) {
    require(std::isfinite(noise_sd) && noise_sd >= 0.0, "noise_sd must be nonnegative");
    RewardMatrix estimates = env.mu();
    if (noise_sd > 0.0) {
        Rng rng = make_rng(seed);
        std::normal_distribution<double> standard_normal(0.0, 1.0);
        for (Eigen::Index i = 0; i < estimates.size(); ++i) {
            estimates.data()[i] *= 1.0 + noise_sd * standard_normal(rng);
        }
    }
    return RewardModel(std::move(estimates), floor);
}

RewardModel exact_model(const Environment& env, double floor) { return RewardModel(env.mu(), floor); }

Environment with_rewards(const Environment& env, const RewardModel& model) {
    require(model.n_actions() == env.n_actions() && model.n_contexts() == env.n_contexts(),
            "reward model shape does not match the environment");
    return Environment(env.contexts(), env.actions(), env.arrival_probs(), model.mu_hat());
}

}  // namespace logdesign
