#include "logdesign/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <thread>

#include <CLI11.hpp>

#include "logdesign/design.hpp"
#include "logdesign/errors.hpp"
#include "logdesign/eval.hpp"
#include "logdesign/experiments.hpp"
#include "logdesign/json_io.hpp"

namespace logdesign::cli {

namespace {

std::string sci(double v) {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.3e", v);
    return buffer;
}

struct RunFlags {
    std::optional<std::size_t> trials;
    std::optional<std::uint64_t> seed;
    std::size_t scale = 1;
    std::size_t jobs = 1;
};

std::size_t resolve_jobs(std::size_t jobs) {
    if (jobs == 0) {
        return std::max(1u, std::thread::hardware_concurrency());
    }
    return jobs;
}

void print_summary(std::ostream& out, const ExperimentResult& result) {
    for (const auto& s : summarize(result.rows)) {
        out << s.label << " n=" << s.n;
        if (s.parameters.size() > 1) {
            out << " argmin=" << sci(s.argmin) << " min_mse=" << sci(s.min_mse);
        } else {
            out << " mse=" << sci(s.min_mse);
        }
        out << " logging_value=" << sci(s.mean_logging_value) << '\n';
    }
    // Monte Carlo rows: empirical MSE per (label, n).
    std::vector<std::tuple<std::string, std::size_t, double, std::size_t>> mc;
    for (const auto& r : result.monte_carlo) {
        auto it = std::find_if(mc.begin(), mc.end(),
                               [&](const auto& e) { return std::get<0>(e) == r.label && std::get<1>(e) == r.n; });
        if (it == mc.end()) {
            mc.emplace_back(r.label, r.n, 0.0, 0);
            it = std::prev(mc.end());
        }
        const double err = r.estimate - r.target_value;
        std::get<2>(*it) += err * err;
        std::get<3>(*it) += 1;
    }
    for (const auto& [label, n, sum, count] : mc) {
        out << label << " n=" << n << " empirical_mse=" << sci(sum / static_cast<double>(count))
            << " replications=" << count << '\n';
    }
}

std::string monte_carlo_path(const std::string& csv_path) {
    std::filesystem::path p(csv_path);
    const auto stem = p.stem().string();
    return (p.parent_path() / (stem + "_mc.csv")).string();
}

void run_and_write(ExperimentConfig config, const RunFlags& flags, const std::string& csv_path, std::ostream& out) {
    if (flags.trials) {
        config.trials = *flags.trials;
    }
    if (flags.seed) {
        config.base_seed = *flags.seed;
    }
    config = scaled(std::move(config), flags.scale);
    const auto result = run_experiment(config, RunOptions{resolve_jobs(flags.jobs)});
    write_csv_file(csv_path, result.rows);
    out << "wrote " << csv_path << " (" << result.rows.size() << " rows)\n";
    if (!result.monte_carlo.empty()) {
        const auto mc_path = monte_carlo_path(csv_path);
        write_csv_file(mc_path, result.monte_carlo);
        out << "wrote " << mc_path << " (" << result.monte_carlo.size() << " rows)\n";
    }
    print_summary(out, result);
}

void add_run_flags(CLI::App* cmd, RunFlags& flags) {
    cmd->add_option("--trials", flags.trials, "Override the number of trials")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", flags.seed, "Override the base seed (trial t uses seed + t)");
    cmd->add_option("--scale", flags.scale, "Divide action and context counts by this factor")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--jobs", flags.jobs, "Worker threads; 0 uses every hardware thread")->capture_default_str();
}

std::string figure_list() {
    std::string names;
    for (const auto& [name, _] : builtin_configs()) {
        names += names.empty() ? name : ", " + name;
    }
    return names;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Design logging policies that minimize IPW off-policy evaluation error", "logdesign"};
    app.require_subcommand(1);

    // design
    std::string env_path, target_path, logging_path, regime_str, out_path, config_path, figure;
    std::size_t n = 1;
    std::size_t replications = 0;
    std::uint64_t seed = 0;
    RunFlags run_flags;

    auto* design = app.add_subcommand("design", "Build a logging policy for one regime and write its report as JSON");
    design->add_option("--env", env_path, "Environment JSON")->required();
    design->add_option("--regime", regime_str, "uniform, minimax-mu, match-target, neyman or pseudo-target")
        ->required();
    design->add_option("--target", target_path, "Target policy JSON (ensemble JSON for pseudo-target)");
    design->add_option("--out", out_path, "Report path; standard output when omitted");

    auto* evaluate = app.add_subcommand("evaluate", "Closed-form IPW error of a target under a logging policy");
    evaluate->add_option("--env", env_path, "Environment JSON")->required();
    evaluate->add_option("--target", target_path, "Target policy JSON")->required();
    evaluate->add_option("--logging", logging_path, "Logging policy JSON")->required();
    evaluate->add_option("--n", n, "Sample size")->capture_default_str()->check(CLI::PositiveNumber);
    evaluate->add_option("--replications", replications, "Also run this many Monte Carlo replications");
    evaluate->add_option("--seed", seed, "Monte Carlo seed (replication j uses seed + j)")->capture_default_str();
    evaluate->add_option("--jobs", run_flags.jobs, "Worker threads; 0 uses every hardware thread")
        ->capture_default_str();
    evaluate->add_option("--out", out_path, "JSON result path; standard output when omitted");

    auto* sweep = app.add_subcommand("sweep", "Run an experiment config and write CSV rows");
    sweep->add_option("--config", config_path, "Experiment config JSON")->required();
    sweep->add_option("--out", out_path, "CSV path; defaults to the config's output_path");
    add_run_flags(sweep, run_flags);

    auto* reproduce = app.add_subcommand("reproduce-figure", "Run a built-in figure config");
    reproduce->add_option("--figure,figure", figure, "Figure id (see list-figures)")->required();
    reproduce->add_option("--out", out_path, "Output directory")->capture_default_str();
    add_run_flags(reproduce, run_flags);

    auto* list = app.add_subcommand("list-figures", "List built-in figure configs");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (*design) {
            const auto env = io::environment_from_json(io::read_file(env_path));
            const auto regime = regime_from_name(regime_str);
            const bool needs_target = regime == Regime::MatchTarget || regime == Regime::Neyman ||
                                      regime == Regime::PseudoTarget;
            if (needs_target && target_path.empty()) {
                throw ValidationError("regime '" + regime_str + "' requires --target");
            }
            std::optional<DesignReport> report;
            switch (regime) {
                case Regime::Uniform: report = design_uniform(env); break;
                case Regime::KnownMuMinimax: report = design_known_mu_minimax(env); break;
                case Regime::MatchTarget:
                    report = design_match_target(io::policy_from_json(io::read_file(target_path)));
                    break;
                case Regime::Neyman:
                    report = design_neyman(env, io::policy_from_json(io::read_file(target_path)));
                    break;
                case Regime::PseudoTarget:
                    report = design_pseudo_target(env, io::ensemble_from_json(io::read_file(target_path)));
                    break;
            }
            require(report->policy.n_actions() == env.n_actions() && report->policy.n_contexts() == env.n_contexts(),
                    "target shape does not match the environment");
            const auto text = io::to_json(*report, env);
            if (out_path.empty()) {
                out << text;
            } else {
                io::write_file(out_path, text);
                out << "wrote " << out_path << '\n';
            }
            for (const auto& flag : report->flags) {
                err << "note: " << flag << '\n';
            }
        } else if (*evaluate) {
            const auto env = io::environment_from_json(io::read_file(env_path));
            const auto target = io::policy_from_json(io::read_file(target_path));
            const auto logging = io::policy_from_json(io::read_file(logging_path));
            const auto mse = closed_form_mse(env, target, logging, n);
            out << "bias_sq=" << sci(mse.bias_sq) << " variance=" << sci(mse.variance) << " mse=" << sci(mse.mse)
                << '\n';
            std::string text = io::to_json(mse);
            if (replications > 0) {
                const auto mc = monte_carlo_mse(env, target, logging, n, replications, seed, resolve_jobs(run_flags.jobs));
                out << "empirical_mse=" << sci(mc.empirical_mse) << " empirical_mean=" << sci(mc.empirical_mean)
                    << " true_value=" << sci(mc.true_value) << '\n';
                text = "{\"closed_form\": " + text + ", \"monte_carlo\": " + io::to_json(mc) + "}\n";
            }
            if (!out_path.empty()) {
                io::write_file(out_path, text);
            }
        } else if (*sweep) {
            auto config = io::config_from_json(io::read_file(config_path));
            std::string path = out_path.empty() ? config.output_path : out_path;
            if (path.empty()) {
                path = config.name + ".csv";
            }
            run_and_write(std::move(config), run_flags, path, out);
        } else if (*reproduce) {
            const auto& configs = builtin_configs();
            const auto it = configs.find(figure);
            if (it == configs.end()) {
                throw ValidationError("unknown figure '" + figure + "'; valid ids: " + figure_list());
            }
            const std::filesystem::path dir = out_path.empty() ? "." : out_path;
            std::error_code ec;
            std::filesystem::create_directories(dir, ec);
            if (ec) {
                throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
            }
            run_and_write(it->second, run_flags, (dir / (it->first + ".csv")).string(), out);
        } else if (*list) {
            for (const auto& [name, config] : builtin_configs()) {
                out << name << "  " << config.description << '\n';
            }
        }
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    }
    return kExitOk;
}

}  // namespace logdesign::cli
