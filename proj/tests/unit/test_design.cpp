#include <doctest.h>

#include <cmath>
#include <random>

#include "../support/oracles.hpp"
#include "logdesign/design.hpp"
#include "logdesign/errors.hpp"
#include "logdesign/eval.hpp"

using namespace logdesign;

namespace {

Environment single_context(std::initializer_list<double> mu) {
    RewardMatrix m(static_cast<Eigen::Index>(mu.size()), 1);
    Eigen::Index i = 0;
    for (double v : mu) m(i++, 0) = v;
    return Environment::from_rewards(m);
}

Policy column_policy(std::initializer_list<double> p) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(p.size()), 1);
    Eigen::Index i = 0;
    for (double v : p) m(i++, 0) = v;
    return Policy(m);
}

Eigen::MatrixXd random_simplex_columns(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    std::exponential_distribution<double> e(1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = e(rng);
    for (Eigen::Index x = 0; x < cols; ++x) m.col(x) /= m.col(x).sum();
    return m;
}

}  // namespace

TEST_CASE("uniform design") {
    const auto report = design_uniform(make_geometric_env(3, 10, {}));
    CHECK(report.policy.probs().isApproxToConstant(0.1));
    CHECK(report.regime == Regime::Uniform);
    CHECK(design_uniform(single_context({0.3})).policy(0, 0) == 1.0);
}

TEST_CASE("known-mu minimax on (0.9, 0.1)") {
    const auto report = design_known_mu_minimax(single_context({0.9, 0.1}));
    REQUIRE(report.normalizing_constants);
    const double c = (*report.normalizing_constants)[0];
    // 0.9 / 1.2 + 0.1 / 0.4 = 1 exactly.
    CHECK(c == doctest::Approx(0.39).epsilon(1e-9));
    CHECK(std::abs(0.9 / (c + 0.81) + 0.1 / (c + 0.01) - 1.0) <= 1e-10);
    CHECK(c == doctest::Approx(oracle::dense_grid_normalizer({0.9, 0.1})).epsilon(1e-5));
    CHECK(report.policy(0, 0) == doctest::Approx(0.75).epsilon(1e-9));
    CHECK(report.policy(1, 0) == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("known-mu minimax symmetry and reduced support") {
    for (double t : {0.01, 0.3, 1.0}) {
        const auto p = design_known_mu_minimax(single_context({t, t})).policy;
        CHECK(p(0, 0) == doctest::Approx(0.5));
    }
    const auto reduced = design_known_mu_minimax(single_context({0.5, 0.0, 0.2}));
    CHECK(reduced.policy(1, 0) == 0.0);
    CHECK(reduced.flags.size() == 1);
    const auto zero = design_known_mu_minimax(single_context({0.0, 0.0}));
    CHECK(zero.policy(0, 0) == 0.5);
    CHECK(std::isnan((*zero.normalizing_constants)[0]));
    CHECK(zero.flags.size() == 1);
}

TEST_CASE("normalizer solver matches the dense grid oracle") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.001, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> mu(2 + trial % 6);
        for (auto& m : mu) m = u(rng);
        const auto sol = solve_minimax_normalizer(mu);
        CHECK(sol.residual <= 1e-10);
        CHECK(sol.c >= 0.0);
        double hi = 0.0;
        for (double m : mu) hi += m;
        CHECK(std::abs(sol.c - oracle::dense_grid_normalizer(mu, 200'000)) <= 2.0 * hi / 200'000);
    }
    const std::vector<double> zeros{0.0, 0.0};
    CHECK_THROWS_AS(solve_minimax_normalizer(zeros), ValidationError);
}

TEST_CASE("known-mu minimax equalizes the worst-case variance term and preserves order") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(1e-3, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const auto n = 2 + trial % 15;
        RewardMatrix mu(n, 1);
        for (Eigen::Index a = 0; a < mu.rows(); ++a) mu(a, 0) = u(rng);
        const auto p = design_known_mu_minimax(Environment::from_rewards(mu)).policy;
        const double ref = mu(0, 0) / p(0, 0) - mu(0, 0) * mu(0, 0);
        for (Eigen::Index a = 0; a < mu.rows(); ++a) {
            CHECK(std::abs(mu(a, 0) / p(a, 0) - mu(a, 0) * mu(a, 0) - ref) <= 1e-8);
            for (Eigen::Index b = 0; b < mu.rows(); ++b) {
                if (mu(a, 0) > mu(b, 0)) CHECK(p(a, 0) > p(b, 0));
            }
        }
    }
}

TEST_CASE("neyman design examples") {
    const auto env = single_context({0.9, 0.1});
    const auto aligned = design_neyman(env, column_policy({0.9, 0.1})).policy;
    const double expected = 0.9 * std::sqrt(0.9) / (0.9 * std::sqrt(0.9) + 0.1 * std::sqrt(0.1));
    CHECK(aligned(0, 0) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(aligned(0, 0) == doctest::Approx(0.9643).epsilon(1e-4));
    const auto misaligned = design_neyman(env, column_policy({0.1, 0.9})).policy;
    CHECK(misaligned(0, 0) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(misaligned(1, 0) == doctest::Approx(0.75).epsilon(1e-12));

    const auto flat = single_context({0.3, 0.3, 0.3});
    const auto target = column_policy({0.2, 0.5, 0.3});
    CHECK(design_neyman(flat, target).policy.probs().isApprox(target.probs(), 1e-15));
    const auto det = column_policy({0.0, 1.0, 0.0});
    CHECK(design_neyman(single_context({0.9, 0.2, 0.5}), det).policy == det);
}

TEST_CASE("neyman fallback when the target only hits zero-reward actions") {
    const auto report = design_neyman(single_context({0.0, 0.0, 0.7}), column_policy({0.5, 0.5, 0.0}));
    CHECK(report.policy(0, 0) == 0.5);
    CHECK(report.policy(1, 0) == 0.5);
    CHECK(report.policy(2, 0) == 0.0);
    CHECK(report.flags.size() == 1);
    CHECK_THROWS_AS(design_neyman(single_context({0.5, 0.5}), column_policy({1.0, 0.0, 0.0})), ValidationError);
}

TEST_CASE("neyman dominates on-policy evaluation and never lowers value") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> actions(1, 20), contexts(1, 5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int violations = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const auto na = actions(rng), nx = contexts(rng);
        RewardMatrix mu(na, nx);
        for (Eigen::Index i = 0; i < mu.size(); ++i) mu.data()[i] = u(rng);
        Eigen::VectorXd arrivals = random_simplex_columns(rng, nx, 1).col(0);
        const auto env = Environment::from_rewards(mu, arrivals);
        const Policy target(random_simplex_columns(rng, na, nx));
        const auto logging = design_neyman(env, target).policy;
        const auto designed = closed_form_mse(env, target, logging, 100);
        const auto on_policy = closed_form_mse(env, target, target, 100);
        violations += designed.mse > on_policy.mse + 1e-12;
        violations += policy_value(env, logging) < policy_value(env, target) - 1e-12;
    }
    CHECK(violations == 0);
}

TEST_CASE("match-target design is the identity") {
    const auto target = column_policy({0.2, 0.0, 0.8});
    const auto report = design_match_target(target);
    CHECK(report.policy == target);
    CHECK(report.policy.support(0) == target.support(0));
}

TEST_CASE("pseudo-target design") {
    const auto env = single_context({0.4, 0.2, 0.1});
    const auto p = column_policy({0.6, 0.3, 0.1});
    SUBCASE("point mass reproduces neyman exactly") {
        const TargetEnsemble single({p}, {1.0});
        CHECK(design_pseudo_target(env, single).policy == design_neyman(env, p).policy);
    }
    SUBCASE("symmetric ensemble on flat rewards") {
        const TargetEnsemble both({column_policy({1.0, 0.0}), column_policy({0.0, 1.0})}, {0.5, 0.5});
        const auto q = design_pseudo_target(single_context({0.3, 0.3}), both).policy;
        CHECK(q(0, 0) == doctest::Approx(0.5));
    }
    SUBCASE("matches the brute-force simplex grid") {
        const auto p2 = column_policy({0.2, 0.2, 0.6});
        const TargetEnsemble ens({p, p2}, {0.5, 0.5});
        const auto q = design_pseudo_target(env, ens).policy;
        const auto grid = oracle::grid_argmin_expected_variance(
            {Eigen::Vector3d(0.6, 0.3, 0.1), Eigen::Vector3d(0.2, 0.2, 0.6)}, {0.5, 0.5},
            Eigen::Vector3d(0.4, 0.2, 0.1));
        for (int a = 0; a < 3; ++a) CHECK(std::abs(q(a, 0) - grid(a)) <= 1.5e-3);
    }
    SUBCASE("ensemble validation") {
        CHECK_THROWS_AS(TargetEnsemble({p}, {0.5}), ValidationError);
        CHECK_THROWS_AS(TargetEnsemble({p, column_policy({1.0, 0.0})}, {0.5, 0.5}), ValidationError);
        CHECK_THROWS_AS(TargetEnsemble({}, {}), ValidationError);
    }
}

TEST_CASE("regime names round-trip") {
    for (auto r : {Regime::Uniform, Regime::KnownMuMinimax, Regime::MatchTarget, Regime::Neyman,
                   Regime::PseudoTarget}) {
        CHECK(regime_from_name(regime_name(r)) == r);
    }
    CHECK_THROWS_AS(regime_from_name("optimal"), ValidationError);
}

TEST_CASE("shrinkage weights") {
    const auto env = make_linear_env(50, 20, 0.4, 1);
    const auto model = make_noisy_model(env, 0.5, 1e-6, 2);
    SUBCASE("weight 0 leaves the model unchanged") {
        CHECK(apply_shrinkage(model, 0.0).mu_hat() == model.mu_hat());
    }
    SUBCASE("weight 1 flattens each context to its mean") {
        const auto flat = apply_shrinkage(model, 1.0);
        for (Eigen::Index x = 0; x < 50; ++x) {
            CHECK(flat.mu_hat().col(x).isApproxToConstant(model.mu_hat().col(x).mean(), 1e-12));
        }
        const auto target = Policy(Eigen::MatrixXd::Constant(20, 50, 0.05));
        const auto top = make_policy(exact_model(env), {Family::TopK, 4, 0, 0});
        CHECK(design_neyman(with_rewards(env, flat), top).policy.probs().isApprox(top.probs(), 1e-14));
        CHECK(design_neyman(with_rewards(env, flat), target).policy.probs().isApprox(target.probs(), 1e-14));
    }
    SUBCASE("weight out of range is rejected") {
        CHECK_THROWS_AS(apply_shrinkage(model, 1.5), ValidationError);
    }
}

TEST_CASE("fitted shrinkage extremes") {
    const auto env = make_linear_env(200, 50, 0.8, 3);
    const auto logging = uniform_policy(50, 200);
    const auto aux = simulate_dataset(env, logging, 50'000, 4);
    SUBCASE("exact predictor needs no shrinkage") {
        const auto fit = fit_shrinkage(exact_model(env), aux);
        CHECK(fit.weight < 0.05);
        CHECK(fit.var_estimate > 0.0);
    }
    SUBCASE("independent predictor is fully shrunk") {
        std::mt19937_64 rng(9);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        RewardMatrix noise(50, 200);
        for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = u(rng);
        const auto fit = fit_shrinkage(RewardModel(noise), aux);
        CHECK(fit.weight > 0.95);
    }
    SUBCASE("constant predictor sets weight 1 and flags it") {
        const auto fit = fit_shrinkage(RewardModel(RewardMatrix::Constant(50, 200, 0.3)), aux);
        CHECK(fit.weight == 1.0);
        CHECK(fit.var_estimate == 0.0);
        CHECK(fit.flags.size() == 1);
    }
}

TEST_CASE("sufficiency threshold") {
    CHECK(*sufficiency_threshold(single_context({1.0}), 0, 0, 1) == doctest::Approx(0.5));
    RewardMatrix mu = RewardMatrix::Constant(2, 100, 0.1);
    const auto env = Environment::from_rewards(mu);
    const double t = *sufficiency_threshold(env, 3, 1, 10'000);
    CHECK(t == doctest::Approx(1.0 / (0.1 * 101.0)));
    CHECK(t == doctest::Approx(0.0990).epsilon(1e-3));
    CHECK(*sufficiency_threshold(env, 3, 1, 100'000'000) < 1e-4);
    CHECK_FALSE(sufficiency_threshold(single_context({0.0, 0.5}), 0, 0, 10).has_value());
    CHECK_THROWS_AS(sufficiency_threshold(env, 100, 0, 1), ValidationError);
}

namespace {

// Raw MSE pieces for an arbitrary nonnegative logging matrix, not required
// to be a policy, so one propensity can move while the rest stay fixed.
struct RawMse {
    double bias_sq;
    double variance;
};

RawMse raw_mse(const Eigen::VectorXd& pr, const Eigen::MatrixXd& mu, const Eigen::MatrixXd& target,
               const Eigen::MatrixXd& logging, double n) {
    double bias = 0.0, variance = 0.0;
    for (Eigen::Index x = 0; x < mu.cols(); ++x) {
        double second = 0.0, first = 0.0;
        for (Eigen::Index a = 0; a < mu.rows(); ++a) {
            if (logging(a, x) > 0.0) {
                second += target(a, x) * target(a, x) * mu(a, x) / logging(a, x);
                first += target(a, x) * mu(a, x);
            } else {
                bias += pr(x) * target(a, x) * mu(a, x);
            }
        }
        variance += pr(x) * (second - first * first) / n;
    }
    return {bias * bias, variance};
}

}  // namespace

TEST_CASE("above the sufficiency threshold the bias saved exceeds the variance added") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int checked = 0;
    for (int trial = 0; trial < 2000; ++trial) {
        const Eigen::Index na = 2 + trial % 5, nx = 1 + trial % 3;
        RewardMatrix mu(na, nx);
        for (Eigen::Index i = 0; i < mu.size(); ++i) mu.data()[i] = 0.01 + 0.99 * u(rng);
        const Eigen::VectorXd arrivals = random_simplex_columns(rng, nx, 1).col(0);
        const Eigen::MatrixXd target = random_simplex_columns(rng, na, nx);
        Eigen::MatrixXd logging = random_simplex_columns(rng, na, nx);
        // Drop one action per context from the logging support at random.
        for (Eigen::Index x = 0; x < nx; ++x) {
            if (u(rng) < 0.5) logging(static_cast<Eigen::Index>(u(rng) * na), x) = 0.0;
        }
        const auto env = Environment::from_rewards(mu, arrivals);
        const auto n = static_cast<std::size_t>(1 + 500 * u(rng));
        const Eigen::Index x = static_cast<Eigen::Index>(u(rng) * nx);
        const Eigen::Index a = static_cast<Eigen::Index>(u(rng) * na);
        const double threshold = *sufficiency_threshold(env, x, a, n);
        if (threshold >= 1.0) continue;
        const double p = threshold + (1.0 - threshold) * (0.001 + 0.998 * u(rng));
        Eigen::MatrixXd without = logging, with = logging;
        without(a, x) = 0.0;
        with(a, x) = p;
        const auto off = raw_mse(arrivals, mu, target, without, static_cast<double>(n));
        const auto on = raw_mse(arrivals, mu, target, with, static_cast<double>(n));
        const double delta_bias_sq = off.bias_sq - on.bias_sq;
        const double delta_variance = on.variance - off.variance;
        CHECK(delta_bias_sq > delta_variance);
        ++checked;
    }
    CHECK(checked > 500);
}

TEST_CASE("sufficiency worked example deltas") {
    // One context of weight 0.01 among 100; mu = 0.1, n = 10,000, target puts
    // all mass on the action in question.
    RewardMatrix mu = RewardMatrix::Constant(1, 100, 0.1);
    const Eigen::VectorXd arrivals = Eigen::VectorXd::Constant(100, 0.01);
    const Eigen::MatrixXd target = Eigen::MatrixXd::Ones(1, 100);
    const double threshold = *sufficiency_threshold(Environment::from_rewards(mu), 0, 0, 10'000);
    Eigen::MatrixXd without = Eigen::MatrixXd::Ones(1, 100), with = without;
    without(0, 0) = 0.0;
    with(0, 0) = threshold * 1.01;
    const auto off = raw_mse(arrivals, mu, target, without, 1e4);
    const auto on = raw_mse(arrivals, mu, target, with, 1e4);
    CHECK(off.bias_sq - on.bias_sq > on.variance - off.variance);
    with(0, 0) = threshold * 0.99;
    const auto below = raw_mse(arrivals, mu, target, with, 1e4);
    // Single-action context: the proof's bound is tight, so just below the
    // threshold the inequality flips.
    CHECK(off.bias_sq - below.bias_sq < below.variance - off.variance);
}
