#include "pricesim/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace pricesim {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

namespace {

std::string opt_field(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
}

std::string label_prefix(const RunLabel& l) {
    std::ostringstream os;
    os << l.policy << ',' << l.variant << ',' << l.d << ',' << l.horizon << ','
       << opt_field(l.epsilon) << ',' << opt_field(l.delta) << ',' << opt_field(l.p_star_mix);
    return os.str();
}

const char* phase_name(Phase p) { return p == Phase::explore ? "explore" : "exploit"; }

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    return f;
}

}  // namespace

void emit_trace_csv(const RegretTrace& trace, const RunLabel& label, long run_id,
                    std::uint64_t seed, std::ostream& out) {
    out << "run_id,policy,variant,d,T,epsilon,delta,p_star_mix,seed,t,price,y,"
           "instant_regret,cum_regret,phase\n";
    const std::string prefix = label_prefix(label);
    for (const auto& r : trace.rows) {
        out << run_id << ',' << prefix << ',' << seed << ',' << r.t << ','
            << format_double(r.price) << ',' << format_double(r.y) << ','
            << format_double(r.instant_regret) << ',' << format_double(r.cum_regret) << ','
            << phase_name(r.phase) << '\n';
    }
}

void emit_trace_csv(const RegretTrace& trace, const RunLabel& label, long run_id,
                    std::uint64_t seed, const std::string& path) {
    auto f = open_out(path);
    emit_trace_csv(trace, label, run_id, seed, f);
}

void emit_aggregate_csv(const std::vector<AggregateRow>& rows, std::ostream& out) {
    out << "policy,variant,d,T,epsilon,delta,p_star_mix,reps,mean_regret,sd_regret,"
           "ci_half_width\n";
    for (const auto& r : rows) {
        out << label_prefix(r.label) << ',' << r.reps << ',' << format_double(r.mean_regret)
            << ',' << format_double(r.sd_regret) << ',' << format_double(r.ci_half_width) << '\n';
    }
}

void emit_aggregate_csv(const std::vector<AggregateRow>& rows, const std::string& path) {
    auto f = open_out(path);
    emit_aggregate_csv(rows, f);
}

void emit_runs_csv(const std::vector<RunRow>& rows, std::ostream& out) {
    out << "run_id,policy,variant,d,T,epsilon,delta,p_star_mix,seed,regret,ok,error\n";
    for (const auto& r : rows) {
        out << r.run_id << ',' << label_prefix(r.label) << ',' << r.seed << ','
            << format_double(r.regret) << ',' << (r.ok ? 1 : 0) << ',' << r.error << '\n';
    }
}

void emit_runs_csv(const std::vector<RunRow>& rows, const std::string& path) {
    auto f = open_out(path);
    emit_runs_csv(rows, f);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::vector<std::array<double, 3>> read_aggregate_triples(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("empty aggregate file: " + path);
    const auto header = split_csv_line(line);
    int col_d = -1, col_t = -1, col_mean = -1;
    for (size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "d") col_d = static_cast<int>(i);
        if (header[i] == "T") col_t = static_cast<int>(i);
        if (header[i] == "mean_regret") col_mean = static_cast<int>(i);
    }
    if (col_d < 0 || col_t < 0 || col_mean < 0)
        throw std::runtime_error("aggregate file missing d/T/mean_regret columns: " + path);
    std::vector<std::array<double, 3>> rows;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        rows.push_back({std::stod(fields[col_d]), std::stod(fields[col_t]),
                        std::stod(fields[col_mean])});
    }
    return rows;
}

}  // namespace pricesim
