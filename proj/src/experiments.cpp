#include "logdesign/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>

#include "internal/parallel.hpp"
#include "logdesign/errors.hpp"
#include "logdesign/eval.hpp"
#include "logdesign/random.hpp"

namespace logdesign {

namespace {

bool csv_safe(const std::string& field) {
    return !field.empty() && field.find_first_of(",\"\r\n") == std::string::npos;
}

std::string full_precision(double v) {
    char buffer[40];
    std::snprintf(buffer, sizeof buffer, "%.17g", v);
    return buffer;
}

std::size_t to_count(double v) { return static_cast<std::size_t>(std::llround(v)); }

bool sweeps_k(const LoggingSpec& spec) { return spec.sweep == SweepKind::K; }

bool uses_k(Family f) { return f == Family::TopK || f == Family::TopKPowerNormalized || f == Family::TopKSoftmax; }

Environment build_environment(const EnvironmentSpec& spec, std::uint64_t trial_seed) {
    const auto seed = derive_seed(trial_seed, Stream::Environment);
    switch (spec.kind) {
        case EnvironmentKind::Geometric:
            return make_geometric_env(spec.n_contexts, spec.n_actions, GeometricSpec{spec.scale, spec.decay, seed});
        case EnvironmentKind::Linear:
            return make_linear_env(spec.n_contexts, spec.n_actions, spec.top_value, seed);
        case EnvironmentKind::Explicit:
            return Environment::from_rewards(spec.mu, spec.arrival_probs);
    }
    throw ValidationError("unknown environment kind");
}

Policy build_target(const TargetSpec& spec, const Environment& env, double floor, std::uint64_t trial_seed,
                    std::size_t index) {
    if (spec.probs) {
        return Policy(*spec.probs);
    }
    const auto model = make_noisy_model(env, spec.noise_sd, floor, derive_seed(trial_seed, Stream::TargetModel, index));
    return make_policy(model, spec.greediness);
}

// Everything one trial needs, built once and shared by every logging spec.
class TrialState {
public:
    TrialState(const ExperimentConfig& config, std::size_t trial)
        : config_(config),
          seed_(config.base_seed + trial),
          env_(build_environment(config.environment, seed_)) {
        for (std::size_t i = 0; i < config.targets.size(); ++i) {
            targets_.push_back(build_target(config.targets[i], env_, config.floor, seed_, i));
            target_values_.push_back(policy_value(env_, targets_.back()));
        }
    }

    const Environment& env() const { return env_; }
    const std::vector<Policy>& targets() const { return targets_; }
    double target_value(std::size_t i) const { return target_values_[i]; }

    // Logging-side reward model for `spec` at grid value `value`.
    RewardModel logging_model(const LoggingSpec& spec, double value) {
        const double noise = spec.sweep == SweepKind::NoiseSd ? value : spec.noise_sd;
        if (!cached_noise_ || *cached_noise_ != noise) {
            cached_model_.emplace(make_noisy_model(env_, noise, config_.floor,
                                                   derive_seed(seed_, Stream::LoggingModel)));
            cached_noise_ = noise;
        }
        switch (spec.shrinkage.mode) {
            case ShrinkageMode::None: return *cached_model_;
            case ShrinkageMode::Fixed:
                return apply_shrinkage(*cached_model_,
                                       spec.sweep == SweepKind::ShrinkageWeight ? value : spec.shrinkage.weight);
            case ShrinkageMode::Empirical:
                return apply_shrinkage(*cached_model_, fit_shrinkage(*cached_model_, auxiliary(spec.shrinkage.aux_size)));
        }
        throw ValidationError("unknown shrinkage mode");
    }

    Policy logging_policy(const LoggingSpec& spec, double value, std::size_t target_index) {
        const auto& target = targets_[target_index];
        switch (spec.source) {
            case LoggingSource::ScalarPropensity: {
                Eigen::MatrixXd probs(2, static_cast<Eigen::Index>(env_.n_contexts()));
                probs.row(0).setConstant(value);
                probs.row(1).setConstant(1.0 - value);
                return Policy(std::move(probs));
            }
            case LoggingSource::Family: {
                auto greediness = spec.greediness;
                switch (spec.sweep) {
                    case SweepKind::K: greediness.k = to_count(value); break;
                    case SweepKind::Alpha: greediness.alpha = value; break;
                    case SweepKind::Degree: greediness.degree = value; break;
                    default: break;
                }
                return make_policy(logging_model(spec, value), greediness);
            }
            case LoggingSource::Design: break;
        }
        switch (spec.regime) {
            case Regime::Uniform: return design_uniform(env_).policy;
            case Regime::MatchTarget: return design_match_target(target).policy;
            default: break;
        }
        const auto plug_in = with_rewards(env_, logging_model(spec, value));
        switch (spec.regime) {
            case Regime::KnownMuMinimax: return design_known_mu_minimax(plug_in).policy;
            case Regime::Neyman: return design_neyman(plug_in, target).policy;
            case Regime::PseudoTarget: return design_pseudo_target(plug_in, ensemble()).policy;
            default: break;
        }
        throw ValidationError("unknown regime");
    }

private:
    const LoggedDataset& auxiliary(std::size_t size) {
        if (!auxiliary_ || auxiliary_->n() != size) {
            auxiliary_.emplace(simulate_dataset(env_, uniform_policy(env_.n_actions(), env_.n_contexts()), size,
                                                derive_seed(seed_, Stream::AuxiliaryData)));
        }
        return *auxiliary_;
    }

    TargetEnsemble ensemble() const {
        std::vector<double> weights(targets_.size(), 1.0 / static_cast<double>(targets_.size()));
        return TargetEnsemble(targets_, std::move(weights));
    }

    const ExperimentConfig& config_;
    std::uint64_t seed_;
    Environment env_;
    std::vector<Policy> targets_;
    std::vector<double> target_values_;
    std::optional<double> cached_noise_;
    std::optional<RewardModel> cached_model_;
    std::optional<LoggedDataset> auxiliary_;
};

std::string row_label(const ExperimentConfig& config, std::size_t target_index, const LoggingSpec& spec) {
    if (config.targets.size() == 1) {
        return spec.label;
    }
    return config.targets[target_index].name + ":" + spec.label;
}

std::vector<ResultRow> run_trial(const ExperimentConfig& config, std::size_t trial) {
    TrialState state(config, trial);
    std::vector<ResultRow> rows;
    for (std::size_t t = 0; t < config.targets.size(); ++t) {
        for (const auto& spec : config.logging) {
            const auto label = row_label(config, t, spec);
            for (double value : spec.grid) {
                const auto policy = state.logging_policy(spec, value, t);
                const auto terms = mse_terms(state.env(), state.targets()[t], policy);
                const double logging_value = policy_value(state.env(), policy);
                for (auto n : config.n_values) {
                    const auto mse = terms.at(n);
                    rows.push_back(ResultRow{config.name, label, value, n, trial, mse.mse, mse.bias_sq,
                                             mse.variance, logging_value, state.target_value(t)});
                }
            }
        }
    }
    return rows;
}

std::vector<MonteCarloRow> run_monte_carlo(const ExperimentConfig& config, const RunOptions& options) {
    const auto& mc = config.monte_carlo;
    std::vector<MonteCarloRow> rows;
    if (mc.replications == 0) {
        return rows;
    }
    TrialState state(config, 0);
    const auto trial_seed = config.base_seed;
    for (std::size_t t = 0; t < config.targets.size(); ++t) {
        for (std::size_t s = 0; s < config.logging.size(); ++s) {
            const auto& spec = config.logging[s];
            const bool selected = mc.labels.empty()
                                      ? spec.sweep == SweepKind::None
                                      : std::find(mc.labels.begin(), mc.labels.end(), spec.label) != mc.labels.end();
            if (!selected) {
                continue;
            }
            const auto label = row_label(config, t, spec);
            const auto policy = state.logging_policy(spec, spec.grid.front(), t);
            for (std::size_t i = 0; i < mc.n_values.size(); ++i) {
                const auto n = mc.n_values[i];
                const auto seed = derive_seed(trial_seed, Stream::MonteCarlo,
                                              (t * config.logging.size() + s) * mc.n_values.size() + i);
                const auto summary = monte_carlo_mse(state.env(), state.targets()[t], policy, n, mc.replications,
                                                     seed, options.jobs);
                for (std::size_t j = 0; j < summary.estimates.size(); ++j) {
                    rows.push_back(MonteCarloRow{config.name, label, n, j, summary.estimates[j], summary.true_value});
                }
            }
        }
    }
    return rows;
}

template <class Row, class Writer>
void write_file(const std::string& path, const std::vector<Row>& rows, Writer&& writer) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    writer(out, rows);
    out.flush();
    if (!out) {
        throw IoError("failed writing '" + path + "'");
    }
}

}  // namespace

std::string_view to_string(SweepKind kind) {
    switch (kind) {
        case SweepKind::None: return "none";
        case SweepKind::K: return "k";
        case SweepKind::Alpha: return "alpha";
        case SweepKind::Degree: return "degree";
        case SweepKind::NoiseSd: return "noise_sd";
        case SweepKind::ShrinkageWeight: return "shrinkage_weight";
        case SweepKind::Propensity: return "propensity";
    }
    return "unknown";
}

SweepKind sweep_from_string(std::string_view name) {
    for (auto k : {SweepKind::None, SweepKind::K, SweepKind::Alpha, SweepKind::Degree, SweepKind::NoiseSd,
                   SweepKind::ShrinkageWeight, SweepKind::Propensity}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    throw ValidationError("unknown sweep '" + std::string(name) + "'");
}

std::string_view to_string(ShrinkageMode mode) {
    switch (mode) {
        case ShrinkageMode::None: return "none";
        case ShrinkageMode::Fixed: return "fixed";
        case ShrinkageMode::Empirical: return "empirical";
    }
    return "unknown";
}

ShrinkageMode shrinkage_from_string(std::string_view name) {
    for (auto m : {ShrinkageMode::None, ShrinkageMode::Fixed, ShrinkageMode::Empirical}) {
        if (to_string(m) == name) {
            return m;
        }
    }
    throw ValidationError("unknown shrinkage mode '" + std::string(name) + "'");
}

std::string_view to_string(EnvironmentKind kind) {
    switch (kind) {
        case EnvironmentKind::Geometric: return "geometric";
        case EnvironmentKind::Linear: return "linear";
        case EnvironmentKind::Explicit: return "explicit";
    }
    return "unknown";
}

EnvironmentKind environment_kind_from_string(std::string_view name) {
    for (auto k : {EnvironmentKind::Geometric, EnvironmentKind::Linear, EnvironmentKind::Explicit}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    throw ValidationError("unknown environment kind '" + std::string(name) + "'");
}

void validate(const ExperimentConfig& config) {
    require(csv_safe(config.name), "experiment name must be nonempty and free of commas, quotes and newlines");
    require(config.trials >= 1, "trials must be at least 1");
    require(!config.n_values.empty(), "n_values must not be empty");
    for (auto n : config.n_values) {
        require(n >= 1, "every n must be at least 1");
    }
    require(config.floor > 0.0 && config.floor <= 1.0, "floor must lie in (0, 1]");
    require(!config.targets.empty(), "at least one target is required");
    require(!config.logging.empty(), "at least one logging spec is required");

    const auto& env = config.environment;
    std::size_t n_actions = env.n_actions;
    std::size_t n_contexts = env.n_contexts;
    switch (env.kind) {
        case EnvironmentKind::Geometric: validate(GeometricSpec{env.scale, env.decay, 0}); break;
        case EnvironmentKind::Linear:
            require(env.top_value > 0.0 && env.top_value <= 1.0, "linear top value must lie in (0, 1]");
            break;
        case EnvironmentKind::Explicit:
            n_actions = static_cast<std::size_t>(env.mu.rows());
            n_contexts = static_cast<std::size_t>(env.mu.cols());
            Environment::from_rewards(env.mu, env.arrival_probs);
            break;
    }
    require(n_actions >= 1 && n_contexts >= 1, "environment needs at least one action and context");

    std::set<std::string> target_names;
    for (const auto& t : config.targets) {
        require(csv_safe(t.name), "target names must be nonempty and CSV safe");
        require(target_names.insert(t.name).second, "duplicate target name '" + t.name + "'");
        require(t.noise_sd >= 0.0, "target noise_sd must be nonnegative");
        if (t.probs) {
            require(static_cast<std::size_t>(t.probs->rows()) == n_actions &&
                        static_cast<std::size_t>(t.probs->cols()) == n_contexts,
                    "target '" + t.name + "' probabilities do not match the environment shape");
            Policy{*t.probs};
        } else if (uses_k(t.greediness.family)) {
            require(t.greediness.k >= 1 && t.greediness.k <= n_actions, "target k out of range");
        }
    }

    std::set<std::string> labels;
    for (const auto& spec : config.logging) {
        require(csv_safe(spec.label), "logging labels must be nonempty and CSV safe");
        require(labels.insert(spec.label).second, "duplicate logging label '" + spec.label + "'");
        require(!spec.grid.empty(), "logging spec '" + spec.label + "' has an empty grid");
        require(spec.noise_sd >= 0.0, "logging noise_sd must be nonnegative");
        for (double v : spec.grid) {
            require(std::isfinite(v), "grid values must be finite");
        }
        const auto in_grid = [&](auto&& ok, std::string_view what) {
            for (double v : spec.grid) {
                require(ok(v), "logging spec '" + spec.label + "': " + std::string(what));
            }
        };
        switch (spec.sweep) {
            case SweepKind::None: break;
            case SweepKind::K:
                require(spec.source == LoggingSource::Family && uses_k(spec.greediness.family),
                        "k sweeps need a truncating family");
                in_grid([&](double v) { return v >= 1.0 && to_count(v) <= n_actions; }, "k out of range");
                break;
            case SweepKind::Alpha:
            case SweepKind::Degree:
                require(spec.source == LoggingSource::Family, "alpha/degree sweeps need a policy family");
                in_grid([](double v) { return v >= 0.0; }, "greediness must be nonnegative");
                break;
            case SweepKind::NoiseSd:
                in_grid([](double v) { return v >= 0.0; }, "noise_sd must be nonnegative");
                break;
            case SweepKind::ShrinkageWeight:
                require(spec.shrinkage.mode == ShrinkageMode::Fixed, "shrinkage-weight sweeps need fixed shrinkage");
                in_grid([](double v) { return v >= 0.0 && v <= 1.0; }, "shrinkage weights must lie in [0, 1]");
                break;
            case SweepKind::Propensity:
                require(spec.source == LoggingSource::ScalarPropensity, "propensity sweeps need a scalar source");
                in_grid([](double v) { return v >= 0.0 && v <= 1.0; }, "propensities must lie in [0, 1]");
                break;
        }
        if (spec.source == LoggingSource::ScalarPropensity) {
            require(n_actions == 2, "scalar propensity logging needs exactly two actions");
        }
        if (spec.source == LoggingSource::Family && uses_k(spec.greediness.family) && !sweeps_k(spec)) {
            require(spec.greediness.k >= 1 && spec.greediness.k <= n_actions, "logging k out of range");
        }
        if (spec.shrinkage.mode == ShrinkageMode::Fixed) {
            require(spec.shrinkage.weight >= 0.0 && spec.shrinkage.weight <= 1.0,
                    "shrinkage weight must lie in [0, 1]");
        }
        if (spec.shrinkage.mode == ShrinkageMode::Empirical) {
            require(spec.shrinkage.aux_size >= 1, "auxiliary sample size must be at least 1");
        }
    }
    for (const auto& label : config.monte_carlo.labels) {
        require(labels.count(label) == 1, "monte carlo label '" + label + "' matches no logging spec");
    }
    if (config.monte_carlo.replications > 0) {
        require(!config.monte_carlo.n_values.empty(), "monte carlo needs n_values");
    }
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
    validate(config);
    std::vector<std::vector<ResultRow>> per_trial(config.trials);
    detail::parallel_for(config.trials, options.jobs,
                         [&](std::size_t trial) { per_trial[trial] = run_trial(config, trial); });
    ExperimentResult result;
    for (auto& rows : per_trial) {
        result.rows.insert(result.rows.end(), std::make_move_iterator(rows.begin()),
                           std::make_move_iterator(rows.end()));
    }
    result.monte_carlo = run_monte_carlo(config, options);
    return result;
}

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
    out << kCsvHeader << '\n';
    for (const auto& r : rows) {
        out << r.experiment << ',' << r.label << ',' << full_precision(r.parameter) << ',' << r.n << ',' << r.trial
            << ',' << full_precision(r.mse) << ',' << full_precision(r.bias_sq) << ',' << full_precision(r.variance)
            << ',' << full_precision(r.logging_value) << ',' << full_precision(r.target_value) << '\n';
    }
}

void write_csv(std::ostream& out, const std::vector<MonteCarloRow>& rows) {
    out << kMonteCarloCsvHeader << '\n';
    for (const auto& r : rows) {
        out << r.experiment << ',' << r.label << ',' << r.n << ',' << r.replication << ','
            << full_precision(r.estimate) << ',' << full_precision(r.target_value) << '\n';
    }
}

void write_csv_file(const std::string& path, const std::vector<ResultRow>& rows) {
    write_file(path, rows, [](std::ostream& out, const auto& r) { write_csv(out, r); });
}

void write_csv_file(const std::string& path, const std::vector<MonteCarloRow>& rows) {
    write_file(path, rows, [](std::ostream& out, const auto& r) { write_csv(out, r); });
}

std::vector<SweepSummary> summarize(const std::vector<ResultRow>& rows) {
    struct Accumulator {
        SweepSummary summary;
        std::vector<std::size_t> counts;
        std::vector<double> logging_values;
    };
    std::vector<Accumulator> groups;
    for (const auto& r : rows) {
        auto group = std::find_if(groups.begin(), groups.end(), [&](const Accumulator& g) {
            return g.summary.label == r.label && g.summary.n == r.n;
        });
        if (group == groups.end()) {
            groups.push_back(Accumulator{SweepSummary{r.label, r.n, {}, {}, 0.0, 0.0, 0.0}, {}, {}});
            group = std::prev(groups.end());
        }
        auto& params = group->summary.parameters;
        const auto pos = static_cast<std::size_t>(std::find(params.begin(), params.end(), r.parameter) - params.begin());
        if (pos == params.size()) {
            params.push_back(r.parameter);
            group->summary.mean_mse.push_back(0.0);
            group->counts.push_back(0);
            group->logging_values.push_back(0.0);
        }
        group->summary.mean_mse[pos] += r.mse;
        group->logging_values[pos] += r.logging_value;
        group->counts[pos] += 1;
    }
    std::vector<SweepSummary> out;
    for (auto& g : groups) {
        auto& s = g.summary;
        std::size_t best = 0;
        for (std::size_t i = 0; i < s.mean_mse.size(); ++i) {
            s.mean_mse[i] /= static_cast<double>(g.counts[i]);
            g.logging_values[i] /= static_cast<double>(g.counts[i]);
            if (s.mean_mse[i] < s.mean_mse[best]) {
                best = i;
            }
        }
        s.argmin = s.parameters[best];
        s.min_mse = s.mean_mse[best];
        s.mean_logging_value = g.logging_values[best];
        out.push_back(std::move(s));
    }
    return out;
}

ExperimentConfig scaled(ExperimentConfig config, std::size_t divisor) {
    require(divisor >= 1, "scale divisor must be at least 1");
    if (divisor == 1 || config.environment.kind == EnvironmentKind::Explicit) {
        return config;
    }
    auto& env = config.environment;
    env.n_actions = std::max<std::size_t>(1, env.n_actions / divisor);
    env.n_contexts = std::max<std::size_t>(1, env.n_contexts / divisor);
    const auto cap = [&](std::size_t k) { return std::clamp<std::size_t>(k, 1, env.n_actions); };
    for (auto& t : config.targets) {
        t.greediness.k = cap(t.greediness.k);
    }
    for (auto& spec : config.logging) {
        spec.greediness.k = cap(spec.greediness.k);
        if (spec.sweep == SweepKind::K) {
            std::vector<double> grid;
            for (double v : spec.grid) {
                const auto k = static_cast<double>(cap(to_count(v)));
                if (std::find(grid.begin(), grid.end(), k) == grid.end()) {
                    grid.push_back(k);
                }
            }
            spec.grid = std::move(grid);
        }
    }
    return config;
}

}  // namespace logdesign
