#pragma once

#include "pricesim/glm.hpp"
#include "pricesim/policies.hpp"
#include "pricesim/rng.hpp"
#include "pricesim/types.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace pricesim {

enum class ContextKind { s1, s2, a1, a2, multinomial_lb, replay };

ContextKind context_kind_from_string(const std::string& s);
std::string to_string(ContextKind kind);

struct ContextDistribution {
    ContextKind kind = ContextKind::s1;
    int d = 1;
    // multinomial_lb parameters
    double lb_delta = 0.0;
    std::vector<int> lb_v;
    // replay pool, one context per row
    std::shared_ptr<const Matrix> pool;
};

// t is 1-based; horizon drives the regime switch of a1
Vector draw_context(const ContextDistribution& dist, long t, long horizon, Rng& rng);

struct EnvSpec {
    ContextDistribution context;
    GlmFamily family;
    ModelParams truth;
    PriceRange range;
    long horizon = 0;
    std::optional<double> mixed_p;  // probability of a non-private consumer

    void validate() const;
};

// scenario builders with the standard parameterizations
EnvSpec make_scenario_env(ContextKind kind, int d, long horizon, PriceRange range);
ModelParams multinomial_lb_truth(int d, double delta, const std::vector<int>& v);

double instant_regret(const EnvSpec& env, const Vector& z, double p);

// per-run oracle caching the optimal price per one-hot context
class RegretOracle {
public:
    explicit RegretOracle(const EnvSpec& env);
    double instant(const Vector& z, double p);

private:
    const EnvSpec& env_;
    bool one_hot_;
    std::vector<double> cached_pstar_;
};

struct TraceRow {
    long t = 0;
    std::int64_t z_key = 0;  // one-hot index, or a hash of the context bytes
    double price = 0.0;
    double y = 0.0;
    double instant_regret = 0.0;
    double cum_regret = 0.0;
    Phase phase = Phase::explore;
    PrivacyTag tag = PrivacyTag::none;
};

struct RegretTrace {
    std::vector<TraceRow> rows;
    double final_regret = 0.0;
    double wall_seconds = 0.0;
    bool ok = true;
    std::string error;
};

std::int64_t context_key(const Vector& z);

RegretTrace simulate_run(const EnvSpec& env, PolicyKind kind, Variant variant,
                         const PolicyConfig& cfg, std::uint64_t seed);

// fills policy-config fields that derive from the environment (family, range,
// dimension, horizon) leaving explicit overrides alone
PolicyConfig resolve_policy_config(const EnvSpec& env, PolicyConfig cfg);

}  // namespace pricesim
