#pragma once

#include "pricesim/environments.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace pricesim {

struct GridCell {
    EnvSpec env;
    PolicyKind kind = PolicyKind::etc;
    Variant variant = Variant::none;
    PolicyConfig cfg;  // resolved against env before running
};

struct ExperimentGrid {
    std::vector<GridCell> cells;
    int reps = 1;
    std::uint64_t base_seed = 0;
    int jobs = 1;
    long path_stride = 100;  // 0 disables mean-path recording
};

struct RunOutcome {
    std::uint64_t seed = 0;
    double regret = 0.0;
    bool ok = true;
    std::string error;
    std::vector<double> path;  // cumulative regret at t = stride, 2*stride, ...
};

struct CellAggregate {
    double mean_regret = 0.0;
    double sd_regret = 0.0;
    double ci_half_width = 0.0;  // 3 S / sqrt(n)
    long errors = 0;
    std::vector<RunOutcome> runs;
    std::vector<double> mean_path;
};

struct AggregateResult {
    std::vector<CellAggregate> cells;
};

std::uint64_t derive_run_seed(std::uint64_t base, std::size_t cell_index, int rep);

AggregateResult run_grid(const ExperimentGrid& grid);

// recompute the aggregate statistics from stored per-run outcomes
CellAggregate aggregate_runs(std::vector<RunOutcome> runs, long path_stride);

enum class OffsetKind { none, half_loglog, loglog };

OffsetKind offset_kind_from_string(const std::string& s);
std::string to_string(OffsetKind kind);

struct ScalingFit {
    double beta0 = 0.0;
    std::optional<double> beta_d;
    std::optional<double> beta_T;
};

// OLS of log(mean regret) - offset on (1, log d, log T); a coefficient is
// absent when its column is constant (single d or single T)
ScalingFit fit_regret_scaling(const std::vector<std::array<double, 3>>& d_t_regret,
                              OffsetKind offset);

}  // namespace pricesim
