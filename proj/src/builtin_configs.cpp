#include <cmath>
#include <cstdio>

#include "logdesign/experiments.hpp"

namespace logdesign {

namespace {

std::vector<double> arange(double from, double to, double step) {
    std::vector<double> out;
    const auto count = static_cast<std::size_t>(std::llround((to - from) / step));
    for (std::size_t i = 0; i <= count; ++i) {
        out.push_back(from + static_cast<double>(i) * step);
    }
    return out;
}

std::vector<double> linspace(double from, double to, std::size_t count) {
    std::vector<double> out;
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(from + (to - from) * static_cast<double>(i) / static_cast<double>(count - 1));
    }
    return out;
}

EnvironmentSpec geometric(std::size_t n_contexts, std::size_t n_actions) {
    EnvironmentSpec env;
    env.kind = EnvironmentKind::Geometric;
    env.n_contexts = n_contexts;
    env.n_actions = n_actions;
    env.scale = 0.1;
    env.decay = 0.99;
    return env;
}

TargetSpec top_k_target(std::size_t k, double noise_sd) {
    TargetSpec t;
    t.greediness = GreedinessSpec{Family::TopK, k, 0.0, 0.0};
    t.noise_sd = noise_sd;
    return t;
}

LoggingSpec design(std::string label, Regime regime, double noise_sd = 0.0) {
    LoggingSpec s;
    s.label = std::move(label);
    s.source = LoggingSource::Design;
    s.regime = regime;
    s.noise_sd = noise_sd;
    return s;
}

LoggingSpec family(std::string label, GreedinessSpec g, SweepKind sweep, std::vector<double> grid,
                   double noise_sd = 0.0) {
    LoggingSpec s;
    s.label = std::move(label);
    s.source = LoggingSource::Family;
    s.greediness = g;
    s.sweep = sweep;
    s.grid = std::move(grid);
    s.noise_sd = noise_sd;
    return s;
}

// Logging reward estimates in the greediness comparisons carry this much
// multiplicative noise; with exact rewards every family collapses onto the
// target's top set.
constexpr double kGreedinessNoise = 0.25;

ExperimentConfig fig1() {
    ExperimentConfig c;
    c.name = "fig1";
    c.description = "Sampling distribution of IPW under uniform and personalized top-10 logging, 10,000 actions";
    c.environment = geometric(1, 10'000);
    c.targets = {top_k_target(10, 0.0)};
    // Multiplicative noise with variance .25, i.e. standard deviation .5.
    c.logging = {design("uniform", Regime::Uniform),
                 family("personalized", GreedinessSpec{Family::TopK, 10, 0.0, 0.0}, SweepKind::None, {10.0}, 0.5)};
    c.n_values = {1'000, 100'000};
    c.trials = 100;
    c.monte_carlo = MonteCarloSpec{300, {1'000, 100'000}, {}};
    return c;
}

ExperimentConfig fig2() {
    ExperimentConfig c;
    c.name = "fig2";
    c.description = "MSE over a scalar logging propensity for aligned and misaligned targets";
    c.environment.kind = EnvironmentKind::Explicit;
    c.environment.mu = RewardMatrix(2, 1);
    c.environment.mu << 0.9, 0.1;
    c.environment.n_actions = 2;
    c.environment.n_contexts = 1;
    TargetSpec aligned;
    aligned.name = "aligned";
    aligned.probs = Eigen::MatrixXd(2, 1);
    *aligned.probs << 0.9, 0.1;
    TargetSpec misaligned;
    misaligned.name = "misaligned";
    misaligned.probs = Eigen::MatrixXd(2, 1);
    *misaligned.probs << 0.1, 0.9;
    c.targets = {aligned, misaligned};
    LoggingSpec grid;
    grid.label = "propensity";
    grid.source = LoggingSource::ScalarPropensity;
    grid.sweep = SweepKind::Propensity;
    grid.grid = arange(0.001, 0.999, 0.001);
    c.logging = {grid, design("neyman", Regime::Neyman)};
    c.n_values = {1};
    return c;
}

ExperimentConfig fig3() {
    ExperimentConfig c;
    c.name = "fig3";
    c.description = "Neyman design MSE as logging-side reward noise grows";
    c.environment = geometric(1, 1'000);
    c.targets = {top_k_target(30, 0.25)};
    auto neyman = design("neyman", Regime::Neyman);
    neyman.sweep = SweepKind::NoiseSd;
    neyman.grid = linspace(0.0, 0.25, 11);
    c.logging = {neyman, design("target", Regime::MatchTarget)};
    c.n_values = {100};
    c.trials = 1'000;
    return c;
}

ExperimentConfig fig5() {
    ExperimentConfig c;
    c.name = "fig5";
    c.description = "Posterior shrinkage of noisy reward estimates before Neyman design";
    c.environment.kind = EnvironmentKind::Linear;
    c.environment.n_contexts = 1'000;
    c.environment.n_actions = 1'000;
    c.environment.top_value = 0.4;
    c.targets = {top_k_target(100, std::sqrt(0.05))};
    const std::vector<double> noise_grid{0.0, 0.25, 0.5, 0.75, 1.0};
    for (double sd : {0.25, 0.5, 1.0}) {
        char label[32];
        std::snprintf(label, sizeof label, "shrink_sd%.2f", sd);
        auto shrink = design(label, Regime::Neyman, sd);
        shrink.shrinkage.mode = ShrinkageMode::Fixed;
        shrink.sweep = SweepKind::ShrinkageWeight;
        shrink.grid = arange(0.0, 1.0, 0.1);
        c.logging.push_back(shrink);
    }
    auto wstar = design("wstar", Regime::Neyman);
    wstar.shrinkage.mode = ShrinkageMode::Empirical;
    wstar.shrinkage.aux_size = 50'000;
    wstar.sweep = SweepKind::NoiseSd;
    wstar.grid = noise_grid;
    auto plugin = design("plugin", Regime::Neyman);
    plugin.sweep = SweepKind::NoiseSd;
    plugin.grid = noise_grid;
    c.logging.push_back(wstar);
    c.logging.push_back(plugin);
    c.logging.push_back(design("target", Regime::MatchTarget));
    c.n_values = {50'000};
    c.trials = 30;
    return c;
}

std::vector<double> k_range(std::size_t last) { return arange(1.0, static_cast<double>(last), 1.0); }

ExperimentConfig fig6_small() {
    ExperimentConfig c;
    c.name = "fig6_small";
    c.description = "Soft-greedy logging families against a top-200 target, 1,000 actions";
    c.environment = geometric(1, 1'000);
    c.targets = {top_k_target(200, 0.0)};
    c.logging = {
        family("top_k", GreedinessSpec{Family::TopK, 1, 0.0, 0.0}, SweepKind::K, k_range(1'000), kGreedinessNoise),
        family("softmax", GreedinessSpec{Family::Softmax, 1, 0.0, 0.0}, SweepKind::Alpha, arange(0.0, 200.0, 0.5),
               kGreedinessNoise),
        family("power_normalized", GreedinessSpec{Family::PowerNormalized, 1, 0.0, 0.0}, SweepKind::Degree,
               arange(0.0, 3.0, 0.01), kGreedinessNoise),
        design("target", Regime::MatchTarget),
        design("neyman", Regime::Neyman, kGreedinessNoise),
        design("uniform", Regime::Uniform),
    };
    c.n_values = {1'000};
    c.trials = 30;
    return c;
}

ExperimentConfig fig6_large() {
    ExperimentConfig c = fig6_small();
    c.name = "fig6_large";
    c.description = "Soft-greedy logging families against a top-200 target, 100,000 actions";
    c.environment = geometric(1, 100'000);
    const std::vector<double> ks{1, 2, 5, 10, 20, 50, 100, 150, 200, 250, 300, 500,
                                 1'000, 2'000, 5'000, 10'000, 20'000, 50'000, 100'000};
    c.logging[0].grid = ks;
    c.logging[1].grid = arange(0.0, 200.0, 2.0);
    c.logging[2].grid = arange(0.0, 3.0, 0.05);
    c.n_values = {1'000, 100'000};
    return c;
}

ExperimentConfig figD1() {
    ExperimentConfig c;
    c.name = "figD1";
    c.description = "Truncated soft-greedy families sweeping k against a top-200 target";
    c.environment = geometric(1, 1'000);
    c.targets = {top_k_target(200, 0.0)};
    c.logging.push_back(
        family("top_k", GreedinessSpec{Family::TopK, 1, 0.0, 0.0}, SweepKind::K, k_range(1'000), kGreedinessNoise));
    for (double d : {0.5, 1.0, 2.0}) {
        char label[32];
        std::snprintf(label, sizeof label, "top_k_pn_d%g", d);
        c.logging.push_back(family(label, GreedinessSpec{Family::TopKPowerNormalized, 1, 0.0, d}, SweepKind::K,
                                   k_range(1'000), kGreedinessNoise));
    }
    for (double a : {10.0, 30.0, 70.0}) {
        char label[32];
        std::snprintf(label, sizeof label, "top_k_sm_a%g", a);
        c.logging.push_back(family(label, GreedinessSpec{Family::TopKSoftmax, 1, a, 0.0}, SweepKind::K,
                                   k_range(1'000), kGreedinessNoise));
    }
    c.logging.push_back(design("target", Regime::MatchTarget));
    c.n_values = {1'000};
    c.trials = 30;
    return c;
}

}  // namespace

const std::map<std::string, ExperimentConfig>& builtin_configs() {
    static const std::map<std::string, ExperimentConfig> configs = [] {
        std::map<std::string, ExperimentConfig> m;
        for (auto c : {fig1(), fig2(), fig3(), fig5(), fig6_small(), fig6_large(), figD1()}) {
            c.output_path = c.name + ".csv";
            m.emplace(c.name, std::move(c));
        }
        return m;
    }();
    return configs;
}

}  // namespace logdesign
