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

Eigen::MatrixXd random_columns(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double zero_prob = 0.0) {
    std::exponential_distribution<double> e(1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index x = 0; x < cols; ++x) {
        for (Eigen::Index a = 0; a < rows; ++a) m(a, x) = u(rng) < zero_prob ? 0.0 : e(rng);
        if (m.col(x).sum() == 0.0) m(0, x) = 1.0;
        m.col(x) /= m.col(x).sum();
    }
    return m;
}

}  // namespace

TEST_CASE("policy value examples") {
    CHECK(policy_value(single_context({0.7, 0.2}), column_policy({1.0, 0.0})) == doctest::Approx(0.7));
    CHECK(policy_value(single_context({0.9, 0.1}), uniform_policy(2, 1)) == doctest::Approx(0.5));
    RewardMatrix mu(1, 2);
    mu << 0.4, 0.8;
    Eigen::VectorXd pr(2);
    pr << 0.25, 0.75;
    CHECK(policy_value(Environment::from_rewards(mu, pr), uniform_policy(1, 2)) == doctest::Approx(0.7));
}

TEST_CASE("IPW estimate examples") {
    const auto logging = column_policy({0.1, 0.9});
    const LoggedDataset one({LogRecord{0, 0, 1}}, logging);
    CHECK(ipw_estimate(one, column_policy({0.3, 0.7})) == doctest::Approx(3.0));
    const LoggedDataset mixed({{0, 0, 1}, {0, 1, 0}, {0, 1, 1}, {0, 1, 1}}, logging);
    CHECK(ipw_estimate(mixed, logging) == doctest::Approx(0.75));
    const LoggedDataset zeros({{0, 0, 0}, {0, 1, 0}}, logging);
    CHECK(ipw_estimate(zeros, column_policy({0.5, 0.5})) == 0.0);
}

TEST_CASE("logged dataset invariants") {
    const auto logging = column_policy({1.0, 0.0});
    CHECK_THROWS_AS(LoggedDataset({LogRecord{0, 1, 1}}, logging), ValidationError);
    CHECK_THROWS_AS(LoggedDataset({LogRecord{0, 0, 2}}, logging), ValidationError);
    CHECK_THROWS_AS(LoggedDataset({LogRecord{1, 0, 1}}, logging), ValidationError);
    CHECK_THROWS_AS(ipw_estimate(LoggedDataset({}, logging), logging), ValidationError);
}

TEST_CASE("closed-form MSE examples") {
    const auto m = closed_form_mse(single_context({1.0, 0.3}), column_policy({1.0, 0.0}), uniform_policy(2, 1), 1);
    CHECK(m.bias_sq == 0.0);
    CHECK(m.variance == doctest::Approx(1.0));
    CHECK(m.mse == m.bias_sq + m.variance);
    const auto biased =
        closed_form_mse(single_context({0.5, 0.4}), column_policy({0.5, 0.5}), column_policy({1.0, 0.0}), 10);
    CHECK(biased.bias_sq == doctest::Approx(0.04));
    CHECK(biased.n == 10);
}

TEST_CASE("propensities below the support threshold are excluded") {
    const auto env = single_context({0.5, 0.5});
    Eigen::MatrixXd tiny(2, 1);
    tiny << 1.0 - 1e-16, 1e-16;
    const auto m = closed_form_mse(env, uniform_policy(2, 1), Policy(tiny), 1);
    CHECK(m.bias_sq == doctest::Approx(0.0625));
    CHECK(std::isfinite(m.variance));
}

TEST_CASE("variance scales as 1/n and bias does not move") {
    std::mt19937_64 rng(3);
    const Environment env = Environment::from_rewards(random_columns(rng, 6, 3).cwiseMin(1.0));
    const Policy target(random_columns(rng, 6, 3));
    const Policy logging(random_columns(rng, 6, 3, 0.3));
    const auto small = closed_form_mse(env, target, logging, 10);
    const auto large = closed_form_mse(env, target, logging, 1000);
    CHECK(small.variance == doctest::Approx(100.0 * large.variance).epsilon(1e-12));
    CHECK(small.bias_sq == large.bias_sq);
}

TEST_CASE("closed form agrees with outcome enumeration") {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> na(1, 5), nx(1, 3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const auto a = na(rng), x = nx(rng);
        RewardMatrix mu(a, x);
        for (Eigen::Index i = 0; i < mu.size(); ++i) mu.data()[i] = u(rng);
        const Eigen::VectorXd arrivals = random_columns(rng, x, 1).col(0);
        const auto env = Environment::from_rewards(mu, arrivals);
        const Policy target(random_columns(rng, a, x, 0.2));
        const Policy logging(random_columns(rng, a, x, 0.2));
        const auto m = closed_form_mse(env, target, logging, 1);
        const double enumerated = oracle::enumerated_conditional_variance(arrivals, mu, target.probs(), logging.probs());
        CHECK(std::abs(m.variance - enumerated) <= 1e-12);
        CHECK(std::abs(m.bias_sq - oracle::unsupported_bias_sq(arrivals, mu, target.probs(), logging.probs())) <=
              1e-15);
    }
}

TEST_CASE("simulated data") {
    const auto ones = Environment::from_rewards(RewardMatrix::Ones(3, 2));
    const auto data = simulate_dataset(ones, uniform_policy(3, 2), 500, 1);
    CHECK(data.n() == 500);
    for (const auto& r : data.records()) CHECK(r.reward == 1);
    const auto zeros = Environment::from_rewards(RewardMatrix::Zero(3, 2));
    for (const auto& r : simulate_dataset(zeros, uniform_policy(3, 2), 500, 1).records()) CHECK(r.reward == 0);

    const auto big = simulate_dataset(single_context({0.9, 0.1}), uniform_policy(2, 1), 100'000, 5);
    double first = 0.0;
    for (const auto& r : big.records()) first += r.action == 0;
    CHECK(std::abs(first / 1e5 - 0.5) <= 0.005);

    const auto again = simulate_dataset(single_context({0.9, 0.1}), uniform_policy(2, 1), 100'000, 5);
    bool same = true;
    for (std::size_t i = 0; i < big.n(); ++i) {
        same = same && big.records()[i].action == again.records()[i].action &&
               big.records()[i].reward == again.records()[i].reward;
    }
    CHECK(same);
}

TEST_CASE("simulation never draws zero-propensity actions") {
    const auto env = Environment::from_rewards(RewardMatrix::Constant(4, 3, 0.5));
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(4, 3);
    p(3, 0) = 1.0;
    p(0, 1) = 1.0;
    p(1, 2) = 0.5;
    p(2, 2) = 0.5;
    CHECK_NOTHROW(simulate_dataset(env, Policy(p), 20'000, 3));
}

TEST_CASE("Monte Carlo is unbiased under overlap") {
    const auto env = single_context({0.6, 0.2, 0.4});
    const auto target = column_policy({0.5, 0.3, 0.2});
    const auto logging = column_policy({0.2, 0.5, 0.3});
    const auto mc = monte_carlo_mse(env, target, logging, 20, 10'000, 99, 2);
    double var = 0.0;
    for (double v : mc.estimates) var += (v - mc.empirical_mean) * (v - mc.empirical_mean);
    const double se = std::sqrt(var / (mc.estimates.size() - 1) / mc.estimates.size());
    CHECK(std::abs(mc.empirical_mean - policy_value(env, target)) <= 3.0 * se);
    CHECK(mc.true_value == policy_value(env, target));
}

TEST_CASE("Monte Carlo bookkeeping") {
    const auto env = single_context({0.6, 0.2});
    const auto target = column_policy({0.5, 0.5});
    const auto single = monte_carlo_mse(env, target, target, 10, 1, 4);
    CHECK(single.empirical_mse == doctest::Approx(std::pow(single.estimates[0] - 0.4, 2)));
    // Per-replication seeds make the result independent of thread count.
    const auto serial = monte_carlo_mse(env, target, uniform_policy(2, 1), 30, 200, 8, 1);
    const auto threaded = monte_carlo_mse(env, target, uniform_policy(2, 1), 30, 200, 8, 4);
    CHECK(serial.estimates == threaded.estimates);
    CHECK(serial.estimates[7] == ipw_estimate(simulate_dataset(env, uniform_policy(2, 1), 30, 15), target));
    CHECK_THROWS_AS(monte_carlo_mse(env, target, target, 10, 0, 1), ValidationError);
}

TEST_CASE("worst-case search") {
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
    CHECK(worst_case_mse(one, uniform_policy(10, 1), 1) == doctest::Approx(9.0).epsilon(1e-9));
    Eigen::MatrixXd point = Eigen::MatrixXd::Zero(10, 1);
    point(0, 0) = 1.0;
    CHECK(worst_case_mse(one, Policy(point), 1) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(worst_case_mse(one, uniform_policy(1, 1), 1) == doctest::Approx(0.25).epsilon(1e-9));
    CHECK_THROWS_AS(worst_case_mse(one, uniform_policy(2, 1), 1, 0.0), ValidationError);
}

TEST_CASE("worst-case search agrees with explicit enumeration on a coarse grid") {
    // Two contexts, three actions: enumerate every deterministic target and
    // every mu on a 0.1 grid through closed_form_mse.
    std::mt19937_64 rng(21);
    Eigen::MatrixXd p = random_columns(rng, 3, 2, 0.3);
    const Policy logging(p);
    Eigen::VectorXd arrivals(2);
    arrivals << 0.3, 0.7;
    double brute = 0.0;
    std::vector<double> grid;
    for (int i = 0; i <= 10; ++i) grid.push_back(i / 10.0);
    for (int t0 = 0; t0 < 3; ++t0) {
        for (int t1 = 0; t1 < 3; ++t1) {
            Eigen::MatrixXd target = Eigen::MatrixXd::Zero(3, 2);
            target(t0, 0) = 1.0;
            target(t1, 1) = 1.0;
            // Only the targeted action's reward matters in each context.
            for (double m0 : grid) {
                for (double m1 : grid) {
                    RewardMatrix mu = RewardMatrix::Zero(3, 2);
                    mu(t0, 0) = m0;
                    mu(t1, 1) = m1;
                    const auto env = Environment::from_rewards(mu, arrivals);
                    brute = std::max(brute, closed_form_mse(env, Policy(target), logging, 3).mse);
                }
            }
        }
    }
    CHECK(worst_case_mse(arrivals, logging, 3, 0.1) == doctest::Approx(brute).epsilon(1e-12));
}
