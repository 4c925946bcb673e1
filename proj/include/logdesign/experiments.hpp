#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "logdesign/design.hpp"
#include "logdesign/env.hpp"
#include "logdesign/policy.hpp"

namespace logdesign {

enum class EnvironmentKind { Geometric, Linear, Explicit };

struct EnvironmentSpec {
    EnvironmentKind kind = EnvironmentKind::Geometric;
    std::size_t n_contexts = 1;
    std::size_t n_actions = 1;
    double scale = 0.1;      // geometric
    double decay = 0.99;     // geometric
    double top_value = 0.4;  // linear
    /// Explicit kind only: rewards (actions x contexts) and optional arrivals.
    RewardMatrix mu;
    Eigen::VectorXd arrival_probs;
};

/// A target policy: either a soft-greedy family applied to a noisy reward
/// model (noise_sd = 0 means the exact rewards), or explicit probabilities.
struct TargetSpec {
    std::string name = "target";
    GreedinessSpec greediness{};
    double noise_sd = 0.0;
    std::optional<Eigen::MatrixXd> probs;
};

/// The quantity a logging spec's grid sweeps over.
enum class SweepKind { None, K, Alpha, Degree, NoiseSd, ShrinkageWeight, Propensity };

enum class ShrinkageMode { None, Fixed, Empirical };

struct ShrinkageSpec {
    ShrinkageMode mode = ShrinkageMode::None;
    double weight = 0.0;             // Fixed mode, unless swept
    std::size_t aux_size = 50'000;   // Empirical mode: records logged uniformly
};

enum class LoggingSource { Family, Design, ScalarPropensity };

/// One logging construction plus the grid it is evaluated on. The reward
/// model behind it has noise `noise_sd` (0 = exact rewards), optionally shrunk.
struct LoggingSpec {
    std::string label;
    LoggingSource source = LoggingSource::Family;
    GreedinessSpec greediness{};   // Family source
    Regime regime = Regime::Neyman;  // Design source
    double noise_sd = 0.0;
    ShrinkageSpec shrinkage{};
    SweepKind sweep = SweepKind::None;
    std::vector<double> grid{0.0};
};

struct MonteCarloSpec {
    std::size_t replications = 0;  // 0 disables
    std::vector<std::size_t> n_values;
    /// Labels to replicate; empty means every logging spec with SweepKind::None.
    std::vector<std::string> labels;
};

struct ExperimentConfig {
    std::string name;
    std::string description;
    EnvironmentSpec environment;
    std::vector<TargetSpec> targets{TargetSpec{}};
    std::vector<LoggingSpec> logging;
    std::vector<std::size_t> n_values;
    std::size_t trials = 1;
    std::uint64_t base_seed = 0;
    double floor = kDefaultFloor;
    MonteCarloSpec monte_carlo;
    std::string output_path;
};

struct ResultRow {
    std::string experiment;
    std::string label;
    double parameter = 0.0;
    std::size_t n = 0;
    std::size_t trial = 0;
    double mse = 0.0;
    double bias_sq = 0.0;
    double variance = 0.0;
    double logging_value = 0.0;
    double target_value = 0.0;
};

struct MonteCarloRow {
    std::string experiment;
    std::string label;
    std::size_t n = 0;
    std::size_t replication = 0;
    double estimate = 0.0;
    double target_value = 0.0;
};

struct ExperimentResult {
    std::vector<ResultRow> rows;
    std::vector<MonteCarloRow> monte_carlo;
};

struct RunOptions {
    std::size_t jobs = 1;
};

inline constexpr const char* kCsvHeader =
    "experiment,label,parameter,n,trial,mse,bias_sq,variance,logging_value,target_value";
inline constexpr const char* kMonteCarloCsvHeader = "experiment,label,n,replication,estimate,target_value";

/// Throws ValidationError describing the first problem found.
void validate(const ExperimentConfig& config);

/// Runs every trial (seed base_seed + trial) and returns rows ordered by
/// trial, then logging spec, then grid value, then n. Monte Carlo
/// replications, when enabled, use trial 0.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows);
void write_csv(std::ostream& out, const std::vector<MonteCarloRow>& rows);
/// Writes rows to `path`; throws IoError if the file cannot be written.
void write_csv_file(const std::string& path, const std::vector<ResultRow>& rows);
void write_csv_file(const std::string& path, const std::vector<MonteCarloRow>& rows);

/// Mean MSE across trials per (label, n, parameter), and the argmin per (label, n).
struct SweepSummary {
    std::string label;
    std::size_t n = 0;
    std::vector<double> parameters;
    std::vector<double> mean_mse;
    double argmin = 0.0;
    double min_mse = 0.0;
    double mean_logging_value = 0.0;  // at the argmin
};
std::vector<SweepSummary> summarize(const std::vector<ResultRow>& rows);

/// Shrinks dimensions by `divisor` (>= 1) and clips k grids and target k.
ExperimentConfig scaled(ExperimentConfig config, std::size_t divisor);

/// fig1, fig2, fig3, fig5, fig6_small, fig6_large, figD1.
const std::map<std::string, ExperimentConfig>& builtin_configs();

std::string_view to_string(SweepKind kind);
SweepKind sweep_from_string(std::string_view name);
std::string_view to_string(ShrinkageMode mode);
ShrinkageMode shrinkage_from_string(std::string_view name);
std::string_view to_string(EnvironmentKind kind);
EnvironmentKind environment_kind_from_string(std::string_view name);

}  // namespace logdesign
