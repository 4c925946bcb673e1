#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "logdesign/design.hpp"
#include "logdesign/env.hpp"
#include "logdesign/errors.hpp"
#include "logdesign/eval.hpp"
#include "logdesign/experiments.hpp"
#include "logdesign/json_io.hpp"
#include "logdesign/policy.hpp"

namespace py = pybind11;
using namespace logdesign;

namespace {

// Column-oriented view of result rows: {column name: list}.
py::dict columns(const std::vector<ResultRow>& rows) {
    std::vector<std::string> experiment, label;
    std::vector<double> parameter, mse, bias_sq, variance, logging_value, target_value;
    std::vector<std::size_t> n, trial;
    for (const auto& r : rows) {
        experiment.push_back(r.experiment);
        label.push_back(r.label);
        parameter.push_back(r.parameter);
        n.push_back(r.n);
        trial.push_back(r.trial);
        mse.push_back(r.mse);
        bias_sq.push_back(r.bias_sq);
        variance.push_back(r.variance);
        logging_value.push_back(r.logging_value);
        target_value.push_back(r.target_value);
    }
    py::dict d;
    d["experiment"] = experiment;
    d["label"] = label;
    d["parameter"] = parameter;
    d["n"] = n;
    d["trial"] = trial;
    d["mse"] = mse;
    d["bias_sq"] = bias_sq;
    d["variance"] = variance;
    d["logging_value"] = logging_value;
    d["target_value"] = target_value;
    return d;
}

py::dict run(ExperimentConfig config, std::size_t jobs) {
    ExperimentResult result;
    {
        py::gil_scoped_release release;
        result = run_experiment(config, RunOptions{jobs});
    }
    py::dict out = columns(result.rows);
    py::list mc;
    for (const auto& r : result.monte_carlo) {
        mc.append(py::make_tuple(r.label, r.n, r.replication, r.estimate, r.target_value));
    }
    out["monte_carlo"] = mc;
    return out;
}

}  // namespace

PYBIND11_MODULE(_logdesign, m) {
    m.doc() = "Logging policy design for IPW off-policy evaluation";

    static py::exception<IoError> io_error(m, "IoError", PyExc_OSError);

    py::class_<Environment>(m, "Environment")
        .def(py::init(
                 [](const Eigen::MatrixXd& mu, std::optional<Eigen::VectorXd> arrivals) {
                     return Environment::from_rewards(mu, arrivals.value_or(Eigen::VectorXd{}));
                 }),
             py::arg("mu"), py::arg("arrival_probs") = py::none(),
             "mu is (actions, contexts); arrivals default to uniform.")
        .def_property_readonly("mu", [](const Environment& e) { return e.mu(); })
        .def_property_readonly("arrival_probs", [](const Environment& e) { return e.arrival_probs(); })
        .def_property_readonly("n_actions", &Environment::n_actions)
        .def_property_readonly("n_contexts", &Environment::n_contexts)
        .def("to_json", [](const Environment& e) { return io::to_json(e); });

    py::class_<Policy>(m, "Policy")
        .def(py::init<Eigen::MatrixXd>(), py::arg("probs"))
        .def_property_readonly("probs", [](const Policy& p) { return p.probs(); })
        .def_property_readonly("n_actions", &Policy::n_actions)
        .def_property_readonly("n_contexts", &Policy::n_contexts)
        .def("__call__", &Policy::operator(), py::arg("action"), py::arg("context"));

    py::class_<RewardModel>(m, "RewardModel")
        .def(py::init<RewardMatrix, double>(), py::arg("estimates"), py::arg("floor") = kDefaultFloor)
        .def_property_readonly("mu_hat", [](const RewardModel& r) { return r.mu_hat(); })
        .def_property_readonly("floor", &RewardModel::floor);

    py::class_<MseBreakdown>(m, "MseBreakdown")
        .def_readonly("bias_sq", &MseBreakdown::bias_sq)
        .def_readonly("variance", &MseBreakdown::variance)
        .def_readonly("mse", &MseBreakdown::mse)
        .def_readonly("n", &MseBreakdown::n);

    py::class_<McSummary>(m, "McSummary")
        .def_readonly("replications", &McSummary::replications)
        .def_readonly("estimates", &McSummary::estimates)
        .def_readonly("empirical_mean", &McSummary::empirical_mean)
        .def_readonly("empirical_mse", &McSummary::empirical_mse)
        .def_readonly("true_value", &McSummary::true_value);

    py::class_<DesignReport>(m, "DesignReport")
        .def_readonly("policy", &DesignReport::policy)
        .def_property_readonly("regime", [](const DesignReport& r) { return std::string(regime_name(r.regime)); })
        .def_readonly("normalizing_constants", &DesignReport::normalizing_constants)
        .def_readonly("flags", &DesignReport::flags);

    py::class_<ShrinkageFit>(m, "ShrinkageFit")
        .def_readonly("weight", &ShrinkageFit::weight)
        .def_readonly("context_means", &ShrinkageFit::context_means)
        .def_readonly("cov_estimate", &ShrinkageFit::cov_estimate)
        .def_readonly("var_estimate", &ShrinkageFit::var_estimate)
        .def_readonly("flags", &ShrinkageFit::flags);

    m.def("make_geometric_env",
          [](std::size_t n_contexts, std::size_t n_actions, double scale, double decay, std::uint64_t seed) {
              return make_geometric_env(n_contexts, n_actions, GeometricSpec{scale, decay, seed});
          },
          py::arg("n_contexts"), py::arg("n_actions"), py::arg("scale") = 0.1, py::arg("decay") = 0.99,
          py::arg("seed") = 0);
    m.def("make_linear_env", &make_linear_env, py::arg("n_contexts"), py::arg("n_actions"),
          py::arg("top_value") = 0.4, py::arg("seed") = 0);
    m.def("make_noisy_model", &make_noisy_model, py::arg("env"), py::arg("noise_sd"),
          py::arg("floor") = kDefaultFloor, py::arg("seed") = 0);
    m.def("exact_model", &exact_model, py::arg("env"), py::arg("floor") = kDefaultFloor);

    m.def("uniform_policy", &uniform_policy, py::arg("n_actions"), py::arg("n_contexts"));
    m.def("make_policy",
          [](const RewardModel& model, const std::string& family, std::size_t k, double alpha, double degree) {
              return make_policy(model, GreedinessSpec{family_from_string(family), k, alpha, degree});
          },
          py::arg("model"), py::arg("family"), py::arg("k") = 1, py::arg("alpha") = 0.0, py::arg("degree") = 0.0,
          "Soft-greedy policy: top_k, softmax, power_normalized, top_k_pn or top_k_sm.");

    m.def("design",
          [](const std::string& regime, const Environment& env, std::optional<Policy> target,
             std::optional<std::vector<Policy>> ensemble, std::optional<std::vector<double>> weights) {
              const auto r = regime_from_name(regime);
              auto need_target = [&] {
                  require(target.has_value(), "regime '" + regime + "' requires a target");
                  return *target;
              };
              switch (r) {
                  case Regime::Uniform: return design_uniform(env);
                  case Regime::KnownMuMinimax: return design_known_mu_minimax(env);
                  case Regime::MatchTarget: return design_match_target(need_target());
                  case Regime::Neyman: return design_neyman(env, need_target());
                  case Regime::PseudoTarget: {
                      std::vector<Policy> members = ensemble ? *ensemble : std::vector<Policy>{need_target()};
                      std::vector<double> w = weights ? *weights
                                                      : std::vector<double>(members.size(), 1.0 / members.size());
                      return design_pseudo_target(env, TargetEnsemble(std::move(members), std::move(w)));
                  }
              }
              throw ValidationError("unknown regime");
          },
          py::arg("regime"), py::arg("env"), py::arg("target") = py::none(), py::arg("ensemble") = py::none(),
          py::arg("weights") = py::none());

    m.def("policy_value", &policy_value, py::arg("env"), py::arg("policy"));
    m.def("closed_form_mse", &closed_form_mse, py::arg("env"), py::arg("target"), py::arg("logging"), py::arg("n"));
    m.def("monte_carlo_mse", &monte_carlo_mse, py::arg("env"), py::arg("target"), py::arg("logging"), py::arg("n"),
          py::arg("replications"), py::arg("seed") = 0, py::arg("jobs") = 1,
          py::call_guard<py::gil_scoped_release>());
    m.def("worst_case_mse", &worst_case_mse, py::arg("arrival_probs"), py::arg("logging"), py::arg("n"),
          py::arg("mu_grid_step") = 1e-3);
    m.def("sufficiency_threshold", &sufficiency_threshold, py::arg("env"), py::arg("context"), py::arg("action"),
          py::arg("n"));

    m.def("fit_shrinkage",
          [](const RewardModel& model, const std::vector<std::size_t>& contexts,
             const std::vector<std::size_t>& actions, const std::vector<int>& rewards, const Policy& logging) {
              require(contexts.size() == actions.size() && actions.size() == rewards.size(),
                      "contexts, actions and rewards must have equal length");
              std::vector<LogRecord> records;
              records.reserve(contexts.size());
              for (std::size_t i = 0; i < contexts.size(); ++i) {
                  records.push_back(LogRecord{contexts[i], actions[i], rewards[i]});
              }
              return fit_shrinkage(model, LoggedDataset(std::move(records), logging));
          },
          py::arg("model"), py::arg("contexts"), py::arg("actions"), py::arg("rewards"), py::arg("logging"));
    m.def("simulate_and_fit_shrinkage",
          [](const Environment& env, const RewardModel& model, std::size_t aux_size, std::uint64_t seed) {
              const auto aux =
                  simulate_dataset(env, uniform_policy(env.n_actions(), env.n_contexts()), aux_size, seed);
              return fit_shrinkage(model, aux);
          },
          py::arg("env"), py::arg("model"), py::arg("aux_size"), py::arg("seed") = 0,
          "Fits the shrinkage weight on records logged uniformly from env.");

    m.def("builtin_figures", [] {
        std::vector<std::string> names;
        for (const auto& [name, _] : builtin_configs()) names.push_back(name);
        return names;
    });
    m.def("reproduce_figure",
          [](const std::string& name, std::optional<std::size_t> trials, std::optional<std::uint64_t> seed,
             std::size_t scale, std::size_t jobs) {
              const auto& configs = builtin_configs();
              const auto it = configs.find(name);
              require(it != configs.end(), "unknown figure '" + name + "'");
              auto config = it->second;
              if (trials) config.trials = *trials;
              if (seed) config.base_seed = *seed;
              return run(scaled(std::move(config), scale), jobs);
          },
          py::arg("name"), py::arg("trials") = py::none(), py::arg("seed") = py::none(), py::arg("scale") = 1,
          py::arg("jobs") = 1, "Runs a built-in figure config and returns its rows by column.");
    m.def("run_config", [](const std::string& json_text, std::size_t jobs) {
        return run(io::config_from_json(json_text), jobs);
    },
          py::arg("config_json"), py::arg("jobs") = 1);
}
