#pragma once

#include "pricesim/harness.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace pricesim {

// run labels attached to CSV rows
struct RunLabel {
    std::string policy;
    std::string variant;
    int d = 0;
    long horizon = 0;
    std::optional<double> epsilon;
    std::optional<double> delta;
    std::optional<double> p_star_mix;
};

std::string format_double(double v);  // 10 significant digits

void emit_trace_csv(const RegretTrace& trace, const RunLabel& label, long run_id,
                    std::uint64_t seed, std::ostream& out);
void emit_trace_csv(const RegretTrace& trace, const RunLabel& label, long run_id,
                    std::uint64_t seed, const std::string& path);

struct AggregateRow {
    RunLabel label;
    long reps = 0;
    double mean_regret = 0.0;
    double sd_regret = 0.0;
    double ci_half_width = 0.0;
};

void emit_aggregate_csv(const std::vector<AggregateRow>& rows, std::ostream& out);
void emit_aggregate_csv(const std::vector<AggregateRow>& rows, const std::string& path);

// per-run companion file: one row per (cell, rep) with the final regret
struct RunRow {
    RunLabel label;
    long run_id = 0;
    std::uint64_t seed = 0;
    double regret = 0.0;
    bool ok = true;
    std::string error;
};

void emit_runs_csv(const std::vector<RunRow>& rows, std::ostream& out);
void emit_runs_csv(const std::vector<RunRow>& rows, const std::string& path);

// reads an aggregate CSV back into (d, T, mean_regret) triples for `scaling`
std::vector<std::array<double, 3>> read_aggregate_triples(const std::string& path);

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace pricesim
