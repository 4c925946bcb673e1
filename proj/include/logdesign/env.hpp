#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace logdesign {

/// Reward matrices are indexed (action, context) and stored column-major, so
/// every context's action vector is contiguous.
using RewardMatrix = Eigen::MatrixXd;

inline constexpr double kSimplexTolerance = 1e-9;
inline constexpr double kDefaultFloor = 1e-6;

/// A finite contextual bandit: contexts arrive with known probabilities and
/// every (action, context) pair pays a Bernoulli reward with mean mu(a, x).
class Environment {
public:
    /// Validates: at least one action and context, arrival probabilities on
    /// the simplex within 1e-9, every mu entry in [0, 1].
    Environment(std::vector<std::string> contexts, std::vector<std::string> actions,
                Eigen::VectorXd arrival_probs, RewardMatrix mu);

    /// Default identifiers ("x0", "x1", ... / "a0", "a1", ...) and uniform arrivals
    /// unless `arrival_probs` is non-empty.
    static Environment from_rewards(RewardMatrix mu, Eigen::VectorXd arrival_probs = {});

    const std::vector<std::string>& contexts() const { return contexts_; }
    const std::vector<std::string>& actions() const { return actions_; }
    const Eigen::VectorXd& arrival_probs() const { return arrival_probs_; }
    const RewardMatrix& mu() const { return mu_; }

    std::size_t n_actions() const { return actions_.size(); }
    std::size_t n_contexts() const { return contexts_.size(); }
    double mu(std::size_t action, std::size_t context) const { return mu_(action, context); }
    double arrival(std::size_t context) const { return arrival_probs_(context); }

private:
    std::vector<std::string> contexts_;
    std::vector<std::string> actions_;
    Eigen::VectorXd arrival_probs_;
    RewardMatrix mu_;
};

/// Estimated rewards mu_hat, always clamped to [floor, 1] with floor > 0.
class RewardModel {
public:
    /// Clamps `estimates` entrywise into [floor, 1].
    RewardModel(RewardMatrix estimates, double floor = kDefaultFloor);

    const RewardMatrix& mu_hat() const { return mu_hat_; }
    double floor() const { return floor_; }
    double operator()(std::size_t action, std::size_t context) const { return mu_hat_(action, context); }
    std::size_t n_actions() const { return static_cast<std::size_t>(mu_hat_.rows()); }
    std::size_t n_contexts() const { return static_cast<std::size_t>(mu_hat_.cols()); }

private:
    RewardMatrix mu_hat_;
    double floor_;
};

/// Parameters of the geometric reward family mu = scale * decay^i, i = 1..|A|.
struct GeometricSpec {
    double scale = 0.1;
    double decay = 0.99;
    std::uint64_t seed = 0;
};

void validate(const GeometricSpec& spec);

/// For each context draws a fresh permutation of the actions; the i-th
/// permuted action (1-based) receives scale * decay^i.
Environment make_geometric_env(std::size_t n_contexts, std::size_t n_actions, const GeometricSpec& spec);

/// For each context draws a permutation; rewards are equally spaced from
/// `top_value` down to 0.
Environment make_linear_env(std::size_t n_contexts, std::size_t n_actions, double top_value,
                            std::uint64_t seed);

/// mu_hat = clamp(eps * mu, floor, 1) with eps = 1 + noise_sd * z, z standard
/// normal. `noise_sd` is a standard deviation, never a variance. The standard
/// normal stream depends only on `seed`, so models drawn with equal seeds and
/// different noise levels share the same z.
RewardModel make_noisy_model(const Environment& env, double noise_sd, double floor, std::uint64_t seed);

/// The model that knows mu exactly (up to the floor clamp).
RewardModel exact_model(const Environment& env, double floor = kDefaultFloor);

/// Same contexts, arrivals and actions as `env`, with mu replaced by the model's
/// estimates. Used to feed plug-in estimates to designs that expect rewards.
Environment with_rewards(const Environment& env, const RewardModel& model);

}  // namespace logdesign
