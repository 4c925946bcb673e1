#pragma once

#include <string>
#include <string_view>

#include "logdesign/design.hpp"
#include "logdesign/env.hpp"
#include "logdesign/eval.hpp"
#include "logdesign/experiments.hpp"
#include "logdesign/policy.hpp"

// JSON documents for the CLI. Matrices indexed (action, context) are written
// as one array per action. Malformed documents raise ValidationError; files
// that cannot be read or written raise IoError.
namespace logdesign::io {

std::string to_json(const Environment& env);
Environment environment_from_json(std::string_view text);

/// {contexts, arrival_probs, actions, mu, floor}; ids and arrivals come from `env`.
std::string to_json(const RewardModel& model, const Environment& env);
RewardModel reward_model_from_json(std::string_view text);

/// {actions, contexts, probs}. Ids come from `env` when given, else a0.., x0...
std::string to_json(const Policy& policy, const Environment* env = nullptr);
Policy policy_from_json(std::string_view text);

/// {policies: [policy...], weights: [...]}; a bare policy document is read
/// as a single-member ensemble.
TargetEnsemble ensemble_from_json(std::string_view text);

/// {regime, label, policy, normalizing_constants, flags}. Constants that are
/// NaN (contexts whose rewards are all zero) are written as null.
std::string to_json(const DesignReport& report, const Environment& env);

std::string to_json(const MseBreakdown& mse);
std::string to_json(const McSummary& summary);

/// Grids may be given as an explicit array, {from, to, count} or {from, to, step}.
ExperimentConfig config_from_json(std::string_view text);
std::string to_json(const ExperimentConfig& config);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace logdesign::io
