#pragma once

#include "pricesim/harness.hpp"
#include "pricesim/io.hpp"
#include "pricesim/loan.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pricesim {

struct EnvConfig {
    std::string scenario = "s1";
    int d = 1;
    std::optional<std::string> family;
    std::optional<double> noise_scale;
    std::optional<std::pair<std::vector<double>, std::vector<double>>> theta;
    bool theta_from_data = false;  // replay: take the pool's fitted model
    std::array<double, 2> price_range{0.0, 3.0};
    std::optional<long> horizon;
    std::optional<double> mixed_p;
    std::optional<double> lb_delta;
    std::optional<std::vector<int>> lb_v;
    std::optional<std::string> pool;        // replay pool CSV
    std::optional<std::string> theta_file;  // replay ground-truth JSON
};

struct PolicyEntry {
    std::string kind;
    std::string variant;
    std::optional<double> epsilon;
    std::optional<double> delta;
    // tuning overrides
    std::optional<long> tau;
    std::optional<long> num_arms;
    std::optional<long> num_stages;
    std::optional<double> cb_alpha;
    std::optional<double> c_l;
    std::optional<double> c_g;
    std::optional<double> kappa_dev;
    std::optional<long> cycle_k;
    std::optional<long> stride;
    std::optional<double> doubling_factor;
    std::optional<double> sigma;
    std::optional<double> m_hat;
    std::optional<double> z_norm_bound;
    std::optional<double> score_cap;
    std::optional<double> fixed_price;
    std::optional<std::vector<double>> theta_center;
    std::optional<double> theta_radius;
    std::optional<std::array<double, 2>> explore_range;
};

struct GridSection {
    std::vector<int> d_list;
    std::vector<long> t_list;
    std::vector<double> eps_list;
    std::vector<double> delta_list;
    std::vector<double> p_list;
    int reps = 1;
    std::uint64_t seed = 0;
    int jobs = 1;
};

struct OutputSection {
    std::string dir = "out";
    long path_stride = 100;
};

struct RunConfig {
    EnvConfig env;
    std::vector<PolicyEntry> policies;
    GridSection grid;
    OutputSection output;
};

RunConfig parse_run_config(const std::string& json_text);
std::string serialize_run_config(const RunConfig& cfg);
RunConfig load_run_config(const std::string& path);

// ground-truth sidecar written by `fit-demand` and read by `replay`
void write_theta_json(const CovariatePool& pool, const std::string& path);
void read_theta_json(const std::string& path, CovariatePool& pool);

// environment/policy assembly
EnvSpec build_env(const EnvConfig& env_cfg, int d, long horizon,
                  const CovariatePool* pool = nullptr);
PolicyConfig build_policy_config(const PolicyEntry& entry);

struct BuiltGrid {
    ExperimentGrid grid;
    std::vector<RunLabel> labels;  // aligned with grid.cells
};

BuiltGrid build_grid(const RunConfig& cfg, const CovariatePool* pool = nullptr);

}  // namespace pricesim
