#include "pricesim/loan.hpp"

#include "pricesim/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

namespace pricesim {

double loan_price(double monthly_payment, long term_months, double monthly_rate,
                  double loan_amount) {
    double annuity;
    if (monthly_rate == 0.0) {
        annuity = static_cast<double>(term_months);
    } else {
        annuity = (1.0 - std::pow(1.0 + monthly_rate, -static_cast<double>(term_months))) /
                  monthly_rate;
    }
    return (monthly_payment * annuity - loan_amount) / 1000.0;
}

namespace {

// nearest-rank quantile of a copy of the values
double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    size_t idx = static_cast<size_t>(std::ceil(q * static_cast<double>(n)));
    if (idx == 0) idx = 1;
    if (idx > n) idx = n;
    return v[idx - 1];
}

}  // namespace

CovariatePool ingest_loan_csv(const std::string& path, double monthly_rate, double quantile_norm,
                              double quantile_sens) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open loan file: " + path);
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("empty loan file: " + path);
    const auto header = split_csv_line(line);
    std::map<std::string, int> col;
    for (size_t i = 0; i < header.size(); ++i) col[header[i]] = static_cast<int>(i);

    const std::vector<std::string> features = {"Primary_FICO", "Competition_rate",
                                               "Amount_Approved", "onemonth", "Term"};
    auto require = [&](const std::string& name) {
        auto it = col.find(name);
        if (it == col.end()) throw std::runtime_error("loan file missing column: " + name);
        return it->second;
    };
    const int col_apply = require("apply");
    std::vector<int> feat_cols;
    for (const auto& name : features) feat_cols.push_back(require(name));
    const bool has_price = col.count("Price") > 0;
    int col_price = -1, col_mp = -1;
    if (has_price) {
        col_price = col["Price"];
    } else {
        col_mp = require("Monthly_Payment");
    }
    const int col_term = col["Term"];
    const int col_amount = col["Amount_Approved"];

    const int d = static_cast<int>(features.size());
    std::vector<Vector> raw;
    std::vector<double> prices, ys;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        Vector z(d);
        for (int j = 0; j < d; ++j) z(j) = std::stod(fields[feat_cols[j]]);
        raw.push_back(z);
        ys.push_back(std::stod(fields[col_apply]));
        if (has_price) {
            prices.push_back(std::stod(fields[col_price]));
        } else {
            prices.push_back(loan_price(std::stod(fields[col_mp]),
                                        static_cast<long>(std::stod(fields[col_term])),
                                        monthly_rate, std::stod(fields[col_amount])));
        }
    }
    if (raw.empty()) throw std::runtime_error("loan file has no data rows: " + path);

    CovariatePool pool;
    pool.feature_names = features;
    pool.raw_rows = static_cast<long>(raw.size());
    pool.column_means = Vector::Zero(d);
    for (const auto& z : raw) pool.column_means += z;
    pool.column_means /= static_cast<double>(raw.size());
    for (int j = 0; j < d; ++j)
        if (pool.column_means(j) == 0.0)
            throw std::runtime_error("loan column has zero mean: " + features[j]);

    Dataset data(2 * d);
    std::vector<Vector> scaled(raw.size());
    for (size_t i = 0; i < raw.size(); ++i) {
        scaled[i] = raw[i].cwiseQuotient(pool.column_means);
        data.add(scaled[i], prices[i], ys[i]);
    }
    try {
        pool.theta = fit_mle(GlmFamily{GlmKind::logistic, 1.0}, data, 0.0);
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("loan ingestion: demand fit failed: ") + e.what());
    }

    std::vector<double> norms(scaled.size()), sens(scaled.size());
    for (size_t i = 0; i < scaled.size(); ++i) {
        norms[i] = scaled[i].norm();
        sens[i] = scaled[i].dot(pool.theta.beta);
    }
    const double norm_cut = quantile(norms, quantile_norm);
    const double sens_cut = quantile(sens, quantile_sens);

    std::vector<Eigen::Index> keep;
    for (size_t i = 0; i < scaled.size(); ++i)
        if (norms[i] <= norm_cut && sens[i] >= sens_cut) keep.push_back(static_cast<Eigen::Index>(i));
    if (keep.empty()) throw std::runtime_error("loan ingestion: every row was filtered out");

    pool.kept_rows = static_cast<long>(keep.size());
    pool.contexts.resize(pool.kept_rows, d);
    for (Eigen::Index i = 0; i < pool.kept_rows; ++i)
        pool.contexts.row(i) = scaled[static_cast<size_t>(keep[static_cast<size_t>(i)])].transpose();
    return pool;
}

void write_pool_csv(const CovariatePool& pool, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    for (size_t j = 0; j < pool.feature_names.size(); ++j)
        f << (j ? "," : "") << pool.feature_names[j];
    f << '\n';
    for (Eigen::Index i = 0; i < pool.contexts.rows(); ++i) {
        for (Eigen::Index j = 0; j < pool.contexts.cols(); ++j)
            f << (j ? "," : "") << format_double(pool.contexts(i, j));
        f << '\n';
    }
}

CovariatePool read_pool_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open pool file: " + path);
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("empty pool file: " + path);
    CovariatePool pool;
    pool.feature_names = split_csv_line(line);
    const int d = static_cast<int>(pool.feature_names.size());
    std::vector<Vector> rows;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        Vector z(d);
        for (int j = 0; j < d; ++j) z(j) = std::stod(fields[static_cast<size_t>(j)]);
        rows.push_back(z);
    }
    pool.contexts.resize(static_cast<Eigen::Index>(rows.size()), d);
    for (size_t i = 0; i < rows.size(); ++i)
        pool.contexts.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    pool.kept_rows = static_cast<long>(rows.size());
    return pool;
}

}  // namespace pricesim
