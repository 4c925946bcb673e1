#include "logdesign/json_io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "logdesign/errors.hpp"

namespace logdesign::io {

using nlohmann::json;

namespace {

json parse(std::string_view text, std::string_view what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string(what) + " is not valid JSON: " + e.what());
    }
}

// Runs `body` and reports nlohmann type and lookup errors as validation errors.
template <class F>
auto guarded(std::string_view what, F&& body) {
    try {
        return body();
    } catch (const json::exception& e) {
        throw ValidationError("malformed " + std::string(what) + ": " + e.what());
    }
}

void require_keys(const json& j, std::string_view what, std::initializer_list<std::string_view> allowed) {
    require(j.is_object(), std::string(what) + " must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        bool known = false;
        for (auto a : allowed) {
            known = known || key == a;
        }
        require(known, "unknown key '" + key + "' in " + std::string(what));
    }
}

json matrix_rows(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index a = 0; a < m.rows(); ++a) {
        json row = json::array();
        for (Eigen::Index x = 0; x < m.cols(); ++x) {
            row.push_back(m(a, x));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_rows(const json& rows, std::string_view what) {
    require(rows.is_array() && !rows.empty(), std::string(what) + " must be a nonempty array of rows");
    const auto n_rows = rows.size();
    const auto n_cols = rows.front().size();
    require(n_cols > 0, std::string(what) + " rows must be nonempty");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(n_cols));
    for (std::size_t a = 0; a < n_rows; ++a) {
        require(rows[a].is_array() && rows[a].size() == n_cols, std::string(what) + " rows must share one length");
        for (std::size_t x = 0; x < n_cols; ++x) {
            m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(x)) = rows[a][x].get<double>();
        }
    }
    return m;
}

json vector_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Eigen::VectorXd vector_from_json(const json& j) {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::vector<std::string> ids_or_default(const json& j, const char* key, char prefix, std::size_t count) {
    if (!j.contains(key)) {
        std::vector<std::string> ids;
        for (std::size_t i = 0; i < count; ++i) {
            ids.push_back(prefix + std::to_string(i));
        }
        return ids;
    }
    auto ids = j.at(key).get<std::vector<std::string>>();
    require(ids.size() == count, std::string(key) + " length does not match the matrix shape");
    require(std::set<std::string>(ids.begin(), ids.end()).size() == ids.size(),
            std::string(key) + " must be unique");
    return ids;
}

Environment environment_from(const json& j) {
    require_keys(j, "environment", {"contexts", "arrival_probs", "actions", "mu", "floor"});
    auto mu = matrix_from_rows(j.at("mu"), "mu");
    auto actions = ids_or_default(j, "actions", 'a', static_cast<std::size_t>(mu.rows()));
    auto contexts = ids_or_default(j, "contexts", 'x', static_cast<std::size_t>(mu.cols()));
    Eigen::VectorXd arrivals = j.contains("arrival_probs")
                                   ? vector_from_json(j.at("arrival_probs"))
                                   : Eigen::VectorXd::Constant(mu.cols(), 1.0 / static_cast<double>(mu.cols()));
    return Environment(std::move(contexts), std::move(actions), std::move(arrivals), std::move(mu));
}

json policy_json(const Policy& policy, const Environment* env) {
    json j;
    if (env) {
        j["actions"] = env->actions();
        j["contexts"] = env->contexts();
    } else {
        std::vector<std::string> actions, contexts;
        for (std::size_t a = 0; a < policy.n_actions(); ++a) actions.push_back("a" + std::to_string(a));
        for (std::size_t x = 0; x < policy.n_contexts(); ++x) contexts.push_back("x" + std::to_string(x));
        j["actions"] = actions;
        j["contexts"] = contexts;
    }
    j["probs"] = matrix_rows(policy.probs());
    return j;
}

Policy policy_from(const json& j) {
    require_keys(j, "policy", {"actions", "contexts", "probs"});
    auto probs = matrix_from_rows(j.at("probs"), "probs");
    ids_or_default(j, "actions", 'a', static_cast<std::size_t>(probs.rows()));
    ids_or_default(j, "contexts", 'x', static_cast<std::size_t>(probs.cols()));
    return Policy(std::move(probs));
}

json greediness_json(const GreedinessSpec& g) {
    return json{{"family", to_string(g.family)}, {"k", g.k}, {"alpha", g.alpha}, {"degree", g.degree}};
}

GreedinessSpec greediness_from(const json& j) {
    GreedinessSpec g;
    g.family = family_from_string(j.value("family", std::string(to_string(g.family))));
    g.k = j.value("k", g.k);
    g.alpha = j.value("alpha", g.alpha);
    g.degree = j.value("degree", g.degree);
    return g;
}

std::vector<double> grid_from(const json& j) {
    if (j.is_array()) {
        return j.get<std::vector<double>>();
    }
    require_keys(j, "grid", {"from", "to", "count", "step"});
    const double from = j.at("from").get<double>();
    const double to = j.at("to").get<double>();
    require(j.contains("count") != j.contains("step"), "grid needs exactly one of count or step");
    std::size_t count = 0;
    if (j.contains("count")) {
        count = j.at("count").get<std::size_t>();
        require(count >= 1, "grid count must be at least 1");
    } else {
        const double step = j.at("step").get<double>();
        require(step > 0.0 && to >= from, "grid step must be positive and to >= from");
        count = static_cast<std::size_t>(std::llround((to - from) / step)) + 1;
    }
    std::vector<double> grid;
    for (std::size_t i = 0; i < count; ++i) {
        grid.push_back(count == 1 ? from : from + (to - from) * static_cast<double>(i) / static_cast<double>(count - 1));
    }
    return grid;
}

std::string_view source_name(LoggingSource s) {
    switch (s) {
        case LoggingSource::Family: return "family";
        case LoggingSource::Design: return "design";
        case LoggingSource::ScalarPropensity: return "propensity";
    }
    return "unknown";
}

LoggingSource source_from(std::string_view name) {
    for (auto s : {LoggingSource::Family, LoggingSource::Design, LoggingSource::ScalarPropensity}) {
        if (source_name(s) == name) {
            return s;
        }
    }
    throw ValidationError("unknown logging source '" + std::string(name) + "' (expected family, design or propensity)");
}

EnvironmentSpec environment_spec_from(const json& j) {
    require_keys(j, "environment",
                 {"kind", "n_contexts", "n_actions", "scale", "decay", "top_value", "mu", "arrival_probs"});
    EnvironmentSpec env;
    env.kind = environment_kind_from_string(j.at("kind").get<std::string>());
    env.n_contexts = j.value("n_contexts", env.n_contexts);
    env.n_actions = j.value("n_actions", env.n_actions);
    env.scale = j.value("scale", env.scale);
    env.decay = j.value("decay", env.decay);
    env.top_value = j.value("top_value", env.top_value);
    if (env.kind == EnvironmentKind::Explicit) {
        env.mu = matrix_from_rows(j.at("mu"), "mu");
        env.n_actions = static_cast<std::size_t>(env.mu.rows());
        env.n_contexts = static_cast<std::size_t>(env.mu.cols());
        if (j.contains("arrival_probs")) {
            env.arrival_probs = vector_from_json(j.at("arrival_probs"));
        }
    }
    return env;
}

json environment_spec_json(const EnvironmentSpec& env) {
    json j{{"kind", to_string(env.kind)}};
    switch (env.kind) {
        case EnvironmentKind::Geometric:
            j.update({{"n_contexts", env.n_contexts}, {"n_actions", env.n_actions}, {"scale", env.scale},
                      {"decay", env.decay}});
            break;
        case EnvironmentKind::Linear:
            j.update({{"n_contexts", env.n_contexts}, {"n_actions", env.n_actions}, {"top_value", env.top_value}});
            break;
        case EnvironmentKind::Explicit:
            j["mu"] = matrix_rows(env.mu);
            if (env.arrival_probs.size() > 0) {
                j["arrival_probs"] = vector_json(env.arrival_probs);
            }
            break;
    }
    return j;
}

TargetSpec target_from(const json& j) {
    require_keys(j, "target", {"name", "family", "k", "alpha", "degree", "noise_sd", "probs"});
    TargetSpec t;
    t.name = j.value("name", t.name);
    t.greediness = greediness_from(j);
    t.noise_sd = j.value("noise_sd", t.noise_sd);
    if (j.contains("probs")) {
        t.probs = matrix_from_rows(j.at("probs"), "target probs");
    }
    return t;
}

json target_json(const TargetSpec& t) {
    json j{{"name", t.name}};
    if (t.probs) {
        j["probs"] = matrix_rows(*t.probs);
    } else {
        j.update(greediness_json(t.greediness));
        j["noise_sd"] = t.noise_sd;
    }
    return j;
}

LoggingSpec logging_from(const json& j) {
    require_keys(j, "logging spec",
                 {"label", "source", "family", "k", "alpha", "degree", "regime", "noise_sd", "shrinkage", "sweep",
                  "grid"});
    LoggingSpec s;
    s.label = j.at("label").get<std::string>();
    s.source = source_from(j.value("source", std::string(source_name(s.source))));
    s.greediness = greediness_from(j);
    s.regime = regime_from_name(j.value("regime", std::string(regime_name(s.regime))));
    s.noise_sd = j.value("noise_sd", s.noise_sd);
    if (j.contains("shrinkage")) {
        const auto& sh = j.at("shrinkage");
        require_keys(sh, "shrinkage", {"mode", "weight", "aux_size"});
        s.shrinkage.mode = shrinkage_from_string(sh.at("mode").get<std::string>());
        s.shrinkage.weight = sh.value("weight", s.shrinkage.weight);
        s.shrinkage.aux_size = sh.value("aux_size", s.shrinkage.aux_size);
    }
    s.sweep = sweep_from_string(j.value("sweep", std::string(to_string(s.sweep))));
    if (j.contains("grid")) {
        s.grid = grid_from(j.at("grid"));
    }
    return s;
}

json logging_json(const LoggingSpec& s) {
    json j{{"label", s.label}, {"source", source_name(s.source)}};
    switch (s.source) {
        case LoggingSource::Family: j.update(greediness_json(s.greediness)); break;
        case LoggingSource::Design: j["regime"] = regime_name(s.regime); break;
        case LoggingSource::ScalarPropensity: break;
    }
    j["noise_sd"] = s.noise_sd;
    if (s.shrinkage.mode != ShrinkageMode::None) {
        j["shrinkage"] = json{{"mode", to_string(s.shrinkage.mode)},
                              {"weight", s.shrinkage.weight},
                              {"aux_size", s.shrinkage.aux_size}};
    }
    j["sweep"] = to_string(s.sweep);
    j["grid"] = s.grid;
    return j;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::string to_json(const Environment& env) {
    return dump(json{{"contexts", env.contexts()},
                     {"arrival_probs", vector_json(env.arrival_probs())},
                     {"actions", env.actions()},
                     {"mu", matrix_rows(env.mu())}});
}

Environment environment_from_json(std::string_view text) {
    return guarded("environment", [&] { return environment_from(parse(text, "environment")); });
}

std::string to_json(const RewardModel& model, const Environment& env) {
    require(model.n_actions() == env.n_actions() && model.n_contexts() == env.n_contexts(),
            "reward model shape does not match the environment");
    return dump(json{{"contexts", env.contexts()},
                     {"arrival_probs", vector_json(env.arrival_probs())},
                     {"actions", env.actions()},
                     {"mu", matrix_rows(model.mu_hat())},
                     {"floor", model.floor()}});
}

RewardModel reward_model_from_json(std::string_view text) {
    return guarded("reward model", [&] {
        const auto j = parse(text, "reward model");
        require_keys(j, "reward model", {"contexts", "arrival_probs", "actions", "mu", "floor"});
        return RewardModel(matrix_from_rows(j.at("mu"), "mu"), j.value("floor", kDefaultFloor));
    });
}

std::string to_json(const Policy& policy, const Environment* env) {
    if (env) {
        require(policy.n_actions() == env->n_actions() && policy.n_contexts() == env->n_contexts(),
                "policy shape does not match the environment");
    }
    return dump(policy_json(policy, env));
}

Policy policy_from_json(std::string_view text) {
    return guarded("policy", [&] { return policy_from(parse(text, "policy")); });
}

TargetEnsemble ensemble_from_json(std::string_view text) {
    return guarded("target ensemble", [&] {
        const auto j = parse(text, "target ensemble");
        if (!j.contains("policies")) {
            return TargetEnsemble({policy_from(j)}, {1.0});
        }
        require_keys(j, "target ensemble", {"policies", "weights"});
        std::vector<Policy> policies;
        for (const auto& p : j.at("policies")) {
            policies.push_back(policy_from(p));
        }
        require(!policies.empty(), "target ensemble needs at least one policy");
        auto weights = j.contains("weights")
                           ? j.at("weights").get<std::vector<double>>()
                           : std::vector<double>(policies.size(), 1.0 / static_cast<double>(policies.size()));
        return TargetEnsemble(std::move(policies), std::move(weights));
    });
}

std::string to_json(const DesignReport& report, const Environment& env) {
    json j{{"regime", regime_name(report.regime)},
           {"label", regime_label(report.regime)},
           {"policy", policy_json(report.policy, &env)}};
    if (report.normalizing_constants) {
        json constants = json::array();
        for (double c : *report.normalizing_constants) {
            constants.push_back(std::isnan(c) ? json(nullptr) : json(c));
        }
        j["normalizing_constants"] = std::move(constants);
    } else {
        j["normalizing_constants"] = nullptr;
    }
    j["flags"] = report.flags;
    return dump(j);
}

std::string to_json(const MseBreakdown& mse) {
    return dump(json{{"bias_sq", mse.bias_sq}, {"variance", mse.variance}, {"mse", mse.mse}, {"n", mse.n}});
}

std::string to_json(const McSummary& summary) {
    return dump(json{{"replications", summary.replications},
                     {"empirical_mean", summary.empirical_mean},
                     {"empirical_mse", summary.empirical_mse},
                     {"true_value", summary.true_value},
                     {"estimates", summary.estimates}});
}

ExperimentConfig config_from_json(std::string_view text) {
    return guarded("experiment config", [&] {
        const auto j = parse(text, "experiment config");
        require_keys(j, "experiment config",
                     {"name", "description", "environment", "targets", "logging", "n_values", "trials", "base_seed",
                      "floor", "monte_carlo", "output_path"});
        ExperimentConfig c;
        c.name = j.at("name").get<std::string>();
        c.description = j.value("description", std::string{});
        c.environment = environment_spec_from(j.at("environment"));
        if (j.contains("targets")) {
            c.targets.clear();
            for (const auto& t : j.at("targets")) {
                c.targets.push_back(target_from(t));
            }
        }
        for (const auto& s : j.at("logging")) {
            c.logging.push_back(logging_from(s));
        }
        c.n_values = j.at("n_values").get<std::vector<std::size_t>>();
        c.trials = j.value("trials", c.trials);
        c.base_seed = j.value("base_seed", c.base_seed);
        c.floor = j.value("floor", c.floor);
        if (j.contains("monte_carlo")) {
            const auto& mc = j.at("monte_carlo");
            require_keys(mc, "monte_carlo", {"replications", "n_values", "labels"});
            c.monte_carlo.replications = mc.value("replications", std::size_t{0});
            c.monte_carlo.n_values = mc.value("n_values", std::vector<std::size_t>{});
            c.monte_carlo.labels = mc.value("labels", std::vector<std::string>{});
        }
        c.output_path = j.value("output_path", std::string{});
        validate(c);
        return c;
    });
}

std::string to_json(const ExperimentConfig& config) {
    json j{{"name", config.name},
           {"description", config.description},
           {"environment", environment_spec_json(config.environment)}};
    json targets = json::array();
    for (const auto& t : config.targets) {
        targets.push_back(target_json(t));
    }
    j["targets"] = std::move(targets);
    json logging = json::array();
    for (const auto& s : config.logging) {
        logging.push_back(logging_json(s));
    }
    j["logging"] = std::move(logging);
    j["n_values"] = config.n_values;
    j["trials"] = config.trials;
    j["base_seed"] = config.base_seed;
    j["floor"] = config.floor;
    if (config.monte_carlo.replications > 0) {
        j["monte_carlo"] = json{{"replications", config.monte_carlo.replications},
                                {"n_values", config.monte_carlo.n_values},
                                {"labels", config.monte_carlo.labels}};
    }
    if (!config.output_path.empty()) {
        j["output_path"] = config.output_path;
    }
    return dump(j);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path + "' for reading");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) {
        throw IoError("failed reading '" + path + "'");
    }
    return buffer.str();
}

void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
        throw IoError("failed writing '" + path + "'");
    }
}

}  // namespace logdesign::io
