#include "logdesign/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "logdesign/errors.hpp"

namespace logdesign {

namespace {

void require_k(std::size_t k, std::size_t n_actions) {
    require(k >= 1 && k <= n_actions,
            "k must lie in [1, " + std::to_string(n_actions) + "], got " + std::to_string(k));
}

// Normalizes log-weights over `active` actions in one column, writing exp(w - max) / sum.
void normalize_log_weights(const Eigen::VectorXd& log_weights, const std::vector<std::size_t>& active,
                           Eigen::Ref<Eigen::VectorXd> out) {
    double peak = -std::numeric_limits<double>::infinity();
    for (auto a : active) {
        peak = std::max(peak, log_weights(static_cast<Eigen::Index>(a)));
    }
    double total = 0.0;
    for (auto a : active) {
        const auto i = static_cast<Eigen::Index>(a);
        out(i) = std::exp(log_weights(i) - peak);
        total += out(i);
    }
    for (auto a : active) {
        out(static_cast<Eigen::Index>(a)) /= total;
    }
}

Eigen::VectorXd inner_log_weights(const Eigen::Ref<const Eigen::VectorXd>& column, const InnerWeighting& inner) {
    return std::visit(
        [&](const auto& w) -> Eigen::VectorXd {
            using T = std::decay_t<decltype(w)>;
            if constexpr (std::is_same_v<T, SoftmaxWeighting>) {
                return w.alpha * column;
            } else {
                // v^0 = 1 for every v >= floor > 0.
                if (w.degree == 0.0) {
                    return Eigen::VectorXd::Zero(column.size());
                }
                return w.degree * column.array().log().matrix();
            }
        },
        inner);
}

void require_inner(const InnerWeighting& inner) {
    std::visit(
        [](const auto& w) {
            using T = std::decay_t<decltype(w)>;
            if constexpr (std::is_same_v<T, SoftmaxWeighting>) {
                require(std::isfinite(w.alpha) && w.alpha >= 0.0, "softmax alpha must be finite and >= 0");
            } else {
                require(std::isfinite(w.degree) && w.degree >= 0.0, "power degree must be finite and >= 0");
            }
        },
        inner);
}

Policy weighted_policy(const RewardModel& model, std::size_t k, const InnerWeighting& inner) {
    const auto& mu_hat = model.mu_hat();
    Eigen::MatrixXd probs = Eigen::MatrixXd::Zero(mu_hat.rows(), mu_hat.cols());
    std::vector<std::size_t> all(model.n_actions());
    std::iota(all.begin(), all.end(), std::size_t{0});
    for (Eigen::Index x = 0; x < mu_hat.cols(); ++x) {
        const auto active = k == model.n_actions() ? all : top_k_indices(mu_hat.col(x), k);
        normalize_log_weights(inner_log_weights(mu_hat.col(x), inner), active, probs.col(x));
    }
    return Policy(std::move(probs));
}

}  // namespace

Policy::Policy(Eigen::MatrixXd probs) : probs_(std::move(probs)) {
    require(probs_.rows() > 0 && probs_.cols() > 0, "policy needs at least one action and context");
    for (Eigen::Index x = 0; x < probs_.cols(); ++x) {
        double total = 0.0;
        for (Eigen::Index a = 0; a < probs_.rows(); ++a) {
            const double p = probs_(a, x);
            require(std::isfinite(p) && p >= 0.0, "policy probabilities must be finite and nonnegative");
            total += p;
        }
        require(std::abs(total - 1.0) <= kSimplexTolerance,
                "policy probabilities must sum to 1 in context " + std::to_string(x));
    }
}

std::vector<std::size_t> Policy::support(std::size_t context) const {
    std::vector<std::size_t> out;
    for (std::size_t a = 0; a < n_actions(); ++a) {
        if (in_support(a, context)) {
            out.push_back(a);
        }
    }
    return out;
}

Policy uniform_policy(std::size_t n_actions, std::size_t n_contexts) {
    require(n_actions >= 1 && n_contexts >= 1, "uniform policy needs at least one action and context");
    return Policy(Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n_actions),
                                            static_cast<Eigen::Index>(n_contexts),
                                            1.0 / static_cast<double>(n_actions)));
}

std::string_view to_string(Family family) {
    switch (family) {
        case Family::TopK: return "top_k";
        case Family::Softmax: return "softmax";
        case Family::PowerNormalized: return "power_normalized";
        case Family::TopKPowerNormalized: return "top_k_pn";
        case Family::TopKSoftmax: return "top_k_sm";
    }
    return "unknown";
}

Family family_from_string(std::string_view name) {
    for (auto f : {Family::TopK, Family::Softmax, Family::PowerNormalized, Family::TopKPowerNormalized,
                   Family::TopKSoftmax}) {
        if (to_string(f) == name) {
            return f;
        }
    }
    throw ValidationError("unknown policy family '" + std::string(name) + "'");
}

std::vector<std::size_t> top_k_indices(const Eigen::Ref<const Eigen::VectorXd>& column, std::size_t k) {
    const auto n = static_cast<std::size_t>(column.size());
    require_k(k, n);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto better = [&](std::size_t lhs, std::size_t rhs) {
        const double l = column(static_cast<Eigen::Index>(lhs));
        const double r = column(static_cast<Eigen::Index>(rhs));
        return l > r || (l == r && lhs < rhs);
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), better);
    order.resize(k);
    return order;
}

Policy top_k_policy(const RewardModel& model, std::size_t k) {
    require_k(k, model.n_actions());
    const auto& mu_hat = model.mu_hat();
    Eigen::MatrixXd probs = Eigen::MatrixXd::Zero(mu_hat.rows(), mu_hat.cols());
    const double mass = 1.0 / static_cast<double>(k);
    for (Eigen::Index x = 0; x < mu_hat.cols(); ++x) {
        for (auto a : top_k_indices(mu_hat.col(x), k)) {
            probs(static_cast<Eigen::Index>(a), x) = mass;
        }
    }
    return Policy(std::move(probs));
}

Policy softmax_policy(const RewardModel& model, double alpha) {
    const InnerWeighting inner = SoftmaxWeighting{alpha};
    require_inner(inner);
    return weighted_policy(model, model.n_actions(), inner);
}

Policy power_normalized_policy(const RewardModel& model, double degree) {
    const InnerWeighting inner = PowerWeighting{degree};
    require_inner(inner);
    return weighted_policy(model, model.n_actions(), inner);
}

Policy truncated_policy(const RewardModel& model, std::size_t k, const InnerWeighting& inner) {
    require_k(k, model.n_actions());
    require_inner(inner);
    return weighted_policy(model, k, inner);
}

Policy make_policy(const RewardModel& model, const GreedinessSpec& spec) {
    switch (spec.family) {
        case Family::TopK: return top_k_policy(model, spec.k);
        case Family::Softmax: return softmax_policy(model, spec.alpha);
        case Family::PowerNormalized: return power_normalized_policy(model, spec.degree);
        case Family::TopKPowerNormalized: return truncated_policy(model, spec.k, PowerWeighting{spec.degree});
        case Family::TopKSoftmax: return truncated_policy(model, spec.k, SoftmaxWeighting{spec.alpha});
    }
    throw ValidationError("unknown policy family");
}

Policy mix_policies(std::span<const double> weights, std::span<const Policy> policies) {
    require(!policies.empty(), "mixture needs at least one policy");
    require(weights.size() == policies.size(), "mixture needs one weight per policy");
    double total = 0.0;
    for (double w : weights) {
        require(std::isfinite(w) && w >= 0.0, "mixture weights must be nonnegative");
        total += w;
    }
    require(std::abs(total - 1.0) <= kSimplexTolerance, "mixture weights must sum to 1");
    const auto& first = policies.front();
    Eigen::MatrixXd probs = Eigen::MatrixXd::Zero(first.probs().rows(), first.probs().cols());
    for (std::size_t j = 0; j < policies.size(); ++j) {
        require(policies[j].n_actions() == first.n_actions() && policies[j].n_contexts() == first.n_contexts(),
                "mixture policies must share one shape");
        if (weights[j] > 0.0) {
            probs += weights[j] * policies[j].probs();
        }
    }
    return Policy(std::move(probs));
}

}  // namespace logdesign
