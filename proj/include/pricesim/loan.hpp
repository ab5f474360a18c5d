#pragma once

#include "pricesim/estimation.hpp"
#include "pricesim/types.hpp"

#include <string>
#include <vector>

namespace pricesim {

// Loan applications turned into a replay pool: mean-scaled covariates, NPV
// prices in $1000 units, and a logistic demand model fitted on the full file
// as the ground truth.
struct CovariatePool {
    std::vector<std::string> feature_names;
    Matrix contexts;       // filtered rows, one context per row
    ModelParams theta;     // ground-truth fit on the unfiltered sample
    Vector column_means;   // divisors applied to the raw covariates
    long raw_rows = 0;
    long kept_rows = 0;
};

// net present value of the payment stream minus the principal, in $1000
double loan_price(double monthly_payment, long term_months, double monthly_rate,
                  double loan_amount);

CovariatePool ingest_loan_csv(const std::string& path, double monthly_rate,
                              double quantile_norm = 0.99, double quantile_sens = 0.01);

void write_pool_csv(const CovariatePool& pool, const std::string& path);
CovariatePool read_pool_csv(const std::string& path);

}  // namespace pricesim
