#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "logdesign/env.hpp"

namespace logdesign {

/// pi(a|x) stored as an (actions, contexts) matrix whose columns lie on the
/// probability simplex.
class Policy {
public:
    /// Validates nonnegative entries and per-context sums of 1 within 1e-9.
    explicit Policy(Eigen::MatrixXd probs);

    const Eigen::MatrixXd& probs() const { return probs_; }
    double operator()(std::size_t action, std::size_t context) const { return probs_(action, context); }
    std::size_t n_actions() const { return static_cast<std::size_t>(probs_.rows()); }
    std::size_t n_contexts() const { return static_cast<std::size_t>(probs_.cols()); }

    bool in_support(std::size_t action, std::size_t context) const { return probs_(action, context) > 0.0; }
    /// Actions with strictly positive probability at `context`, ascending.
    std::vector<std::size_t> support(std::size_t context) const;

    friend bool operator==(const Policy& lhs, const Policy& rhs) { return lhs.probs_ == rhs.probs_; }

private:
    Eigen::MatrixXd probs_;
};

Policy uniform_policy(std::size_t n_actions, std::size_t n_contexts);

enum class Family { TopK, Softmax, PowerNormalized, TopKPowerNormalized, TopKSoftmax };

std::string_view to_string(Family family);
/// Accepts "top_k", "softmax", "power_normalized", "top_k_pn", "top_k_sm".
Family family_from_string(std::string_view name);

/// One soft-greedy family plus its greediness parameters. `k` applies to the
/// truncating families, `alpha` to the softmax ones and `degree` to the
/// power-normalized ones.
struct GreedinessSpec {
    Family family = Family::TopK;
    std::size_t k = 1;
    double alpha = 0.0;
    double degree = 0.0;
};

/// Uniform over the k largest estimates per context; ties go to the lower action index.
Policy top_k_policy(const RewardModel& model, std::size_t k);

/// pi(a|x) proportional to exp(alpha * mu_hat(a, x)), evaluated with the
/// per-context maximum subtracted.
Policy softmax_policy(const RewardModel& model, double alpha);

/// pi(a|x) proportional to mu_hat(a, x)^degree. degree = 0 is uniform.
Policy power_normalized_policy(const RewardModel& model, double degree);

struct SoftmaxWeighting {
    double alpha = 0.0;
};
struct PowerWeighting {
    double degree = 0.0;
};
using InnerWeighting = std::variant<SoftmaxWeighting, PowerWeighting>;

/// Restricts each context to its top-k set, then applies the inner weighting
/// renormalized over that set.
Policy truncated_policy(const RewardModel& model, std::size_t k, const InnerWeighting& inner);

/// Dispatches on `spec.family`.
Policy make_policy(const RewardModel& model, const GreedinessSpec& spec);

/// Convex combination of equally shaped policies.
Policy mix_policies(std::span<const double> weights, std::span<const Policy> policies);

/// Indices of the k largest values of `column`, ordered by descending value
/// then ascending index.
std::vector<std::size_t> top_k_indices(const Eigen::Ref<const Eigen::VectorXd>& column, std::size_t k);

}  // namespace logdesign
