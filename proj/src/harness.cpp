#include "pricesim/harness.hpp"

#include <Eigen/QR>

#include <atomic>
#include <cmath>
#include <set>
#include <thread>

namespace pricesim {

std::uint64_t derive_run_seed(std::uint64_t base, std::size_t cell_index, int rep) {
    const std::uint64_t c = derive_seed(base, 0xce11c0de00000001ULL ^ static_cast<std::uint64_t>(cell_index));
    return derive_seed(c, 0x4e9d0001ULL + static_cast<std::uint64_t>(rep));
}

CellAggregate aggregate_runs(std::vector<RunOutcome> runs, long path_stride) {
    CellAggregate agg;
    agg.runs = std::move(runs);
    double sum = 0.0;
    long n = 0;
    size_t path_len = 0;
    for (const auto& r : agg.runs) {
        if (!r.ok) {
            ++agg.errors;
            continue;
        }
        sum += r.regret;
        ++n;
        path_len = std::max(path_len, r.path.size());
    }
    if (n == 0) return agg;
    agg.mean_regret = sum / n;
    double ss = 0.0;
    for (const auto& r : agg.runs) {
        if (!r.ok) continue;
        const double d = r.regret - agg.mean_regret;
        ss += d * d;
    }
    agg.sd_regret = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
    agg.ci_half_width = 3.0 * agg.sd_regret / std::sqrt(static_cast<double>(n));
    if (path_stride > 0 && path_len > 0) {
        agg.mean_path.assign(path_len, 0.0);
        for (const auto& r : agg.runs) {
            if (!r.ok) continue;
            for (size_t i = 0; i < r.path.size(); ++i) agg.mean_path[i] += r.path[i];
        }
        for (auto& v : agg.mean_path) v /= n;
    }
    return agg;
}

namespace {

RunOutcome execute_run(const GridCell& cell, std::uint64_t seed, long path_stride) {
    RunOutcome out;
    out.seed = seed;
    const PolicyConfig cfg = resolve_policy_config(cell.env, cell.cfg);
    const RegretTrace trace = simulate_run(cell.env, cell.kind, cell.variant, cfg, seed);
    out.ok = trace.ok;
    out.error = trace.error;
    out.regret = trace.final_regret;
    if (path_stride > 0) {
        for (size_t i = path_stride - 1; i < trace.rows.size();
             i += static_cast<size_t>(path_stride))
            out.path.push_back(trace.rows[i].cum_regret);
    }
    return out;
}

}  // namespace

AggregateResult run_grid(const ExperimentGrid& grid) {
    if (grid.reps < 1) throw ConfigError("run_grid: reps must be >= 1");
    const size_t n_cells = grid.cells.size();
    const size_t total = n_cells * static_cast<size_t>(grid.reps);
    std::vector<RunOutcome> flat(total);

    std::atomic<size_t> next{0};
    const int jobs = std::max(1, grid.jobs);
    auto worker = [&] {
        while (true) {
            const size_t i = next.fetch_add(1);
            if (i >= total) break;
            const size_t cell = i / grid.reps;
            const int rep = static_cast<int>(i % grid.reps);
            const std::uint64_t seed = derive_run_seed(grid.base_seed, cell, rep);
            flat[i] = execute_run(grid.cells[cell], seed, grid.path_stride);
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(jobs);
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    AggregateResult result;
    result.cells.reserve(n_cells);
    for (size_t c = 0; c < n_cells; ++c) {
        std::vector<RunOutcome> runs(flat.begin() + c * grid.reps,
                                     flat.begin() + (c + 1) * grid.reps);
        result.cells.push_back(aggregate_runs(std::move(runs), grid.path_stride));
    }
    return result;
}

OffsetKind offset_kind_from_string(const std::string& s) {
    if (s == "none") return OffsetKind::none;
    if (s == "half" || s == "half_loglog") return OffsetKind::half_loglog;
    if (s == "full" || s == "loglog") return OffsetKind::loglog;
    throw ConfigError("unknown offset kind: " + s);
}

std::string to_string(OffsetKind kind) {
    switch (kind) {
        case OffsetKind::none: return "none";
        case OffsetKind::half_loglog: return "half";
        case OffsetKind::loglog: return "full";
    }
    return "?";
}

ScalingFit fit_regret_scaling(const std::vector<std::array<double, 3>>& d_t_regret,
                              OffsetKind offset) {
    if (d_t_regret.size() < 3)
        throw std::invalid_argument("fit_regret_scaling: need at least 3 points");
    std::set<double> dset, tset;
    for (const auto& row : d_t_regret) {
        if (!(row[2] > 0.0))
            throw std::invalid_argument("fit_regret_scaling: mean regrets must be positive");
        dset.insert(row[0]);
        tset.insert(row[1]);
    }
    const bool with_d = dset.size() > 1;
    const bool with_t = tset.size() > 1;

    const Eigen::Index n = static_cast<Eigen::Index>(d_t_regret.size());
    const Eigen::Index k = 1 + (with_d ? 1 : 0) + (with_t ? 1 : 0);
    Matrix x(n, k);
    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = d_t_regret[static_cast<size_t>(i)];
        Eigen::Index col = 0;
        x(i, col++) = 1.0;
        if (with_d) x(i, col++) = std::log(row[0]);
        if (with_t) x(i, col++) = std::log(row[1]);
        double off = 0.0;
        const double loglog_t = std::log(std::log(row[1]));
        if (offset == OffsetKind::half_loglog) off = 0.5 * loglog_t;
        if (offset == OffsetKind::loglog) off = loglog_t;
        y(i) = std::log(row[2]) - off;
    }
    const Vector beta = x.colPivHouseholderQr().solve(y);
    ScalingFit fit;
    Eigen::Index col = 0;
    fit.beta0 = beta(col++);
    if (with_d) fit.beta_d = beta(col++);
    if (with_t) fit.beta_T = beta(col++);
    return fit;
}

}  // namespace pricesim
