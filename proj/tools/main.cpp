#include "pricesim/config.hpp"
#include "pricesim/environments.hpp"
#include "pricesim/harness.hpp"
#include "pricesim/io.hpp"
#include "pricesim/loan.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace pricesim;

namespace {

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    std::string out_dir = "out";
};

CovariatePool load_pool_if_needed(const RunConfig& cfg) {
    CovariatePool pool;
    if (cfg.env.scenario == "replay") {
        if (!cfg.env.pool) throw ConfigError("replay config needs env.pool");
        pool = read_pool_csv(*cfg.env.pool);
        if (cfg.env.theta_file) {
            read_theta_json(*cfg.env.theta_file, pool);
        } else if (!cfg.env.theta_from_data && cfg.env.theta) {
            pool.theta = ModelParams(
                Eigen::Map<const Vector>(cfg.env.theta->first.data(),
                                         static_cast<Eigen::Index>(cfg.env.theta->first.size())),
                Eigen::Map<const Vector>(cfg.env.theta->second.data(),
                                         static_cast<Eigen::Index>(cfg.env.theta->second.size())));
        } else {
            throw ConfigError("replay config needs env.theta_file or env.theta");
        }
    }
    return pool;
}

void apply_overrides(RunConfig& cfg, const CommonOpts& opts) {
    if (opts.seed) cfg.grid.seed = *opts.seed;
    if (opts.jobs) cfg.grid.jobs = *opts.jobs;
}

int run_simulate(const CommonOpts& opts) {
    RunConfig cfg = load_run_config(opts.config_path);
    apply_overrides(cfg, opts);
    if (cfg.policies.empty()) throw ConfigError("simulate: config needs one policy");
    const CovariatePool pool = load_pool_if_needed(cfg);
    const bool replay = cfg.env.scenario == "replay";
    if (!cfg.env.horizon) throw ConfigError("simulate: env.horizon required");

    const EnvSpec env = build_env(cfg.env, cfg.env.d, *cfg.env.horizon, replay ? &pool : nullptr);
    const auto& entry = cfg.policies.front();
    const PolicyKind kind = policy_kind_from_string(entry.kind);
    const Variant variant = variant_from_string(entry.variant);
    const PolicyConfig pcfg = resolve_policy_config(env, build_policy_config(entry));
    const RegretTrace trace = simulate_run(env, kind, variant, pcfg, cfg.grid.seed);

    RunLabel label;
    label.policy = entry.kind;
    label.variant = to_string(variant);
    label.d = env.context.d;
    label.horizon = env.horizon;
    label.epsilon = entry.epsilon;
    label.delta = entry.delta;
    label.p_star_mix = env.mixed_p;

    fs::create_directories(opts.out_dir);
    const std::string path = (fs::path(opts.out_dir) / "trace.csv").string();
    emit_trace_csv(trace, label, 0, cfg.grid.seed, path);
    std::cout << "trace: " << path << "\n";
    std::cout << "final_regret: " << format_double(trace.final_regret) << "\n";
    if (!trace.ok) {
        std::cerr << "run aborted: " << trace.error << "\n";
        return 2;
    }
    return 0;
}

int run_grid_cmd(const CommonOpts& opts) {
    RunConfig cfg = load_run_config(opts.config_path);
    apply_overrides(cfg, opts);
    const CovariatePool pool = load_pool_if_needed(cfg);
    BuiltGrid built = build_grid(cfg, cfg.env.scenario == "replay" ? &pool : nullptr);
    const AggregateResult result = run_grid(built.grid);

    std::vector<AggregateRow> agg_rows;
    std::vector<RunRow> run_rows;
    long run_id = 0;
    for (size_t c = 0; c < result.cells.size(); ++c) {
        const auto& cell = result.cells[c];
        AggregateRow row;
        row.label = built.labels[c];
        row.reps = static_cast<long>(cell.runs.size());
        row.mean_regret = cell.mean_regret;
        row.sd_regret = cell.sd_regret;
        row.ci_half_width = cell.ci_half_width;
        agg_rows.push_back(row);
        for (const auto& run : cell.runs) {
            run_rows.push_back(
                {built.labels[c], run_id++, run.seed, run.regret, run.ok, run.error});
        }
    }
    fs::create_directories(opts.out_dir);
    const std::string agg_path = (fs::path(opts.out_dir) / "aggregate.csv").string();
    const std::string runs_path = (fs::path(opts.out_dir) / "runs.csv").string();
    emit_aggregate_csv(agg_rows, agg_path);
    emit_runs_csv(run_rows, runs_path);
    std::cout << "aggregate: " << agg_path << "\nruns: " << runs_path << "\n";
    return 0;
}

int run_scaling(const std::string& aggregate_path, const std::string& offset) {
    const auto triples = read_aggregate_triples(aggregate_path);
    const ScalingFit fit = fit_regret_scaling(triples, offset_kind_from_string(offset));
    nlohmann::json j;
    j["offset"] = offset;
    j["beta0"] = fit.beta0;
    if (fit.beta_d) j["beta_d"] = *fit.beta_d;
    if (fit.beta_T) j["beta_T"] = *fit.beta_T;
    std::cout << j.dump(2) << "\n";
    return 0;
}

int run_fit_demand(const std::string& loan_path, double rate, const CommonOpts& opts) {
    const CovariatePool pool = ingest_loan_csv(loan_path, rate);
    fs::create_directories(opts.out_dir);
    const std::string pool_path = (fs::path(opts.out_dir) / "pool.csv").string();
    const std::string theta_path = (fs::path(opts.out_dir) / "theta.json").string();
    write_pool_csv(pool, pool_path);
    write_theta_json(pool, theta_path);
    nlohmann::json j;
    j["alpha"] = std::vector<double>(pool.theta.alpha.data(),
                                     pool.theta.alpha.data() + pool.theta.alpha.size());
    j["beta"] = std::vector<double>(pool.theta.beta.data(),
                                    pool.theta.beta.data() + pool.theta.beta.size());
    j["raw_rows"] = pool.raw_rows;
    j["kept_rows"] = pool.kept_rows;
    j["pool"] = pool_path;
    j["theta_file"] = theta_path;
    std::cout << j.dump(2) << "\n";
    return 0;
}

int run_replay(const CommonOpts& opts) {
    RunConfig cfg = load_run_config(opts.config_path);
    apply_overrides(cfg, opts);
    if (cfg.env.scenario != "replay") cfg.env.scenario = "replay";
    return run_grid_cmd(opts);  // replay is a grid on the replay environment
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"contextual dynamic-pricing simulator"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string aggregate_path, offset = "none", loan_path;
    double rate = 0.0012;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", opts.config_path, "run configuration (JSON)");
        if (needs_config) c->required();
        sub->add_option("--seed", [&opts](const std::vector<std::string>& v) {
            opts.seed = std::stoull(v.front());
            return true;
        }, "master seed override");
        sub->add_option("--jobs", [&opts](const std::vector<std::string>& v) {
            opts.jobs = std::stoi(v.front());
            return true;
        }, "parallel workers");
        sub->add_option("--out", opts.out_dir, "output directory");
    };

    auto* sim = app.add_subcommand("simulate", "run one environment/policy/seed to a trace CSV");
    add_common(sim, true);

    auto* grid = app.add_subcommand("grid", "run a replicated experiment grid");
    add_common(grid, true);

    auto* scaling = app.add_subcommand("scaling", "fit the regret-scaling regression");
    scaling->add_option("aggregate", aggregate_path, "aggregate CSV produced by `grid`")
        ->required();
    scaling->add_option("--offset", offset, "offset kind: none|half|full")
        ->check(CLI::IsMember({"none", "half", "full"}));

    auto* fitd = app.add_subcommand("fit-demand", "ingest a loan CSV and fit the demand model");
    fitd->add_option("loan_csv", loan_path, "auto-loan style CSV")->required();
    fitd->add_option("--rate", rate, "monthly rate for the NPV price");
    fitd->add_option("--out", opts.out_dir, "output directory");

    auto* replay = app.add_subcommand("replay", "run policies against an ingested pool");
    add_common(replay, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (sim->parsed()) return run_simulate(opts);
        if (grid->parsed()) return run_grid_cmd(opts);
        if (scaling->parsed()) return run_scaling(aggregate_path, offset);
        if (fitd->parsed()) return run_fit_demand(loan_path, rate, opts);
        if (replay->parsed()) return run_replay(opts);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
