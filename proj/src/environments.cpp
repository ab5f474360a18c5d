#include "pricesim/environments.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <limits>

namespace pricesim {

ContextKind context_kind_from_string(const std::string& s) {
    if (s == "s1") return ContextKind::s1;
    if (s == "s2") return ContextKind::s2;
    if (s == "a1") return ContextKind::a1;
    if (s == "a2") return ContextKind::a2;
    if (s == "multinomial_lb") return ContextKind::multinomial_lb;
    if (s == "replay") return ContextKind::replay;
    throw ConfigError("unknown context scenario: " + s);
}

std::string to_string(ContextKind kind) {
    switch (kind) {
        case ContextKind::s1: return "s1";
        case ContextKind::s2: return "s2";
        case ContextKind::a1: return "a1";
        case ContextKind::a2: return "a2";
        case ContextKind::multinomial_lb: return "multinomial_lb";
        case ContextKind::replay: return "replay";
    }
    return "?";
}

namespace {

Vector adversarial_context(int d, long t, long horizon, bool switching, Rng& rng) {
    if (d % 2 != 0) throw std::invalid_argument("a1/a2 contexts require an even dimension");
    const int h = d / 2;
    Vector z(d);
    Vector zstar(h);
    for (int i = 0; i < h; ++i) zstar(i) = rng.uniform(0.0, 3.0);
    const bool swapped = switching && t > horizon / 2;
    if (swapped) {
        z.head(h).setConstant(1.5);
        z.tail(h) = zstar;
    } else {
        z.head(h) = zstar;
        z.tail(h).setConstant(1.5);
    }
    return z / std::sqrt(static_cast<double>(d));
}

}  // namespace

Vector draw_context(const ContextDistribution& dist, long t, long horizon, Rng& rng) {
    if (t < 1) throw std::invalid_argument("draw_context: t must be >= 1");
    const int d = dist.d;
    switch (dist.kind) {
        case ContextKind::s1: {
            const double lo = 1.0 / std::sqrt(static_cast<double>(d));
            Vector z(d);
            for (int i = 0; i < d; ++i) z(i) = rng.uniform(lo, 2.0 * lo);
            return z;
        }
        case ContextKind::s2:
        case ContextKind::multinomial_lb: {
            Vector z = Vector::Zero(d);
            z(static_cast<Eigen::Index>(rng.index(d))) = 1.0;
            return z;
        }
        case ContextKind::a1:
            return adversarial_context(d, t, horizon, true, rng);
        case ContextKind::a2:
            return adversarial_context(d, t, horizon, false, rng);
        case ContextKind::replay: {
            if (!dist.pool || dist.pool->rows() == 0)
                throw std::invalid_argument("draw_context: empty replay pool");
            const auto row = rng.index(static_cast<std::uint64_t>(dist.pool->rows()));
            return dist.pool->row(static_cast<Eigen::Index>(row)).transpose();
        }
    }
    throw std::invalid_argument("draw_context: unknown kind");
}

void EnvSpec::validate() const {
    if (horizon < 1) throw ConfigError("EnvSpec: horizon must be >= 1");
    if (truth.dim() != context.d) throw ConfigError("EnvSpec: truth dimension != context dimension");
    if (mixed_p && !(*mixed_p >= 0.0 && *mixed_p <= 1.0))
        throw ConfigError("EnvSpec: mixed_p must lie in [0,1]");
    if (context.kind == ContextKind::replay && (!context.pool || context.pool->rows() == 0))
        throw ConfigError("EnvSpec: replay pool must be nonempty");
}

ModelParams multinomial_lb_truth(int d, double delta, const std::vector<int>& v) {
    if (static_cast<int>(v.size()) != d)
        throw ConfigError("multinomial_lb: v must have length d");
    Vector alpha(d), beta(d);
    for (int i = 0; i < d; ++i) {
        alpha(i) = 2.0 + delta * v[i];
        beta(i) = 1.0 + delta * v[i];
    }
    return ModelParams(alpha, beta);
}

EnvSpec make_scenario_env(ContextKind kind, int d, long horizon, PriceRange range) {
    EnvSpec env;
    env.context.kind = kind;
    env.context.d = d;
    env.range = range;
    env.horizon = horizon;
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    switch (kind) {
        case ContextKind::s1:
        case ContextKind::a1:
        case ContextKind::a2:
            env.family = {GlmKind::logistic, 1.0};
            env.truth = ModelParams(Vector::Constant(d, 1.6 * inv_sqrt_d),
                                    Vector::Constant(d, inv_sqrt_d));
            break;
        case ContextKind::s2:
            env.family = {GlmKind::logistic, 1.0};
            env.truth = ModelParams(Vector::Ones(d), Vector::Ones(d));
            break;
        case ContextKind::multinomial_lb:
            env.family = {GlmKind::gaussian, 1.0};
            env.context.lb_delta = 0.5;
            env.context.lb_v.assign(d, 1);
            env.truth = multinomial_lb_truth(d, env.context.lb_delta, env.context.lb_v);
            break;
        case ContextKind::replay:
            throw ConfigError("make_scenario_env: replay needs an explicit pool and truth");
    }
    env.validate();
    return env;
}

double instant_regret(const EnvSpec& env, const Vector& z, double p) {
    const double pstar = optimal_price(env.family, z, env.truth, env.range);
    return revenue(env.family, z, pstar, env.truth) - revenue(env.family, z, p, env.truth);
}

RegretOracle::RegretOracle(const EnvSpec& env)
    : env_(env),
      one_hot_(env.context.kind == ContextKind::s2 ||
               env.context.kind == ContextKind::multinomial_lb),
      cached_pstar_(one_hot_ ? env.context.d : 0,
                    std::numeric_limits<double>::quiet_NaN()) {}

double RegretOracle::instant(const Vector& z, double p) {
    double pstar;
    if (one_hot_) {
        Eigen::Index idx = 0;
        z.maxCoeff(&idx);
        double& slot = cached_pstar_[static_cast<size_t>(idx)];
        if (std::isnan(slot)) slot = optimal_price(env_.family, z, env_.truth, env_.range);
        pstar = slot;
    } else {
        pstar = optimal_price(env_.family, z, env_.truth, env_.range);
    }
    return revenue(env_.family, z, pstar, env_.truth) - revenue(env_.family, z, p, env_.truth);
}

std::int64_t context_key(const Vector& z) {
    // one-hot contexts report the active index; anything else a byte hash
    Eigen::Index idx = 0;
    const double mx = z.maxCoeff(&idx);
    if (mx == 1.0 && z.lpNorm<1>() == 1.0) return static_cast<std::int64_t>(idx);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        std::uint64_t bits;
        const double v = z(i);
        std::memcpy(&bits, &v, sizeof(bits));
        h = (h ^ bits) * 0x100000001b3ULL;
    }
    return static_cast<std::int64_t>(h);
}

PolicyConfig resolve_policy_config(const EnvSpec& env, PolicyConfig cfg) {
    cfg.family = env.family;
    cfg.range = env.range;
    cfg.d = env.context.d;
    if (!cfg.horizon) cfg.horizon = env.horizon;
    if (env.context.kind == ContextKind::s1) cfg.z_norm_bound = 2.0;
    if (!cfg.oracle_theta) cfg.oracle_theta = env.truth;
    return cfg;
}

RegretTrace simulate_run(const EnvSpec& env, PolicyKind kind, Variant variant,
                         const PolicyConfig& cfg, std::uint64_t seed) {
    env.validate();
    const auto t0 = std::chrono::steady_clock::now();
    Rng context_rng(derive_seed(seed, static_cast<std::uint64_t>(Stream::context)));
    Rng demand_rng(derive_seed(seed, static_cast<std::uint64_t>(Stream::demand)));
    const std::uint64_t policy_seed = derive_seed(seed, static_cast<std::uint64_t>(Stream::policy));
    const std::uint64_t privacy_seed = derive_seed(seed, static_cast<std::uint64_t>(Stream::privacy));

    RegretTrace trace;
    trace.rows.reserve(static_cast<size_t>(env.horizon));
    RegretOracle oracle(env);

    const bool mixed_policy = kind == PolicyKind::etc_ldp_mixed;
    if (mixed_policy && !env.mixed_p)
        throw ConfigError("simulate_run: etc_ldp_mixed requires an environment with mixed_p");

    PolicyConfig run_cfg = cfg;
    const bool ldp_kind = kind == PolicyKind::etc_ldp || kind == PolicyKind::etc_ldp_approx ||
                          kind == PolicyKind::etc_ldp_mixed;
    if (ldp_kind && (!run_cfg.theta_space || run_cfg.theta_space->center.size() == 0)) {
        // parameter-space ball around a perturbed version of the truth
        Rng init_rng(derive_seed(seed, static_cast<std::uint64_t>(Stream::theta_init)));
        ThetaSpace space;
        space.radius = run_cfg.theta_space ? run_cfg.theta_space->radius
                                           : std::sqrt(static_cast<double>(env.context.d));
        space.center = init_rng.uniform_in_ball(env.truth.stacked(), 1.0);
        run_cfg.theta_space = space;
    }

    std::unique_ptr<Policy> policy;
    try {
        policy = make_policy(kind, variant, run_cfg, policy_seed, privacy_seed);
    } catch (const std::exception& e) {
        trace.ok = false;
        trace.error = e.what();
        return trace;
    }

    double cum = 0.0;
    for (long t = 1; t <= env.horizon; ++t) {
        Vector z = draw_context(env.context, t, env.horizon, context_rng);
        PrivacyTag tag = PrivacyTag::none;
        if (env.mixed_p)
            tag = context_rng.bernoulli(*env.mixed_p) ? PrivacyTag::nonpriv : PrivacyTag::priv;
        try {
            const double p = policy->choose_price(z);
            const Phase phase = policy->phase();
            const double y = sample_demand(env.family, z, p, env.truth, demand_rng);
            policy->observe({z, p, y, tag});
            const double inst = oracle.instant(z, p);
            cum += inst;
            trace.rows.push_back({t, context_key(z), p, y, inst, cum, phase, tag});
        } catch (const std::exception& e) {
            trace.ok = false;
            trace.error = e.what();
            break;
        }
    }
    trace.final_regret = cum;
    trace.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return trace;
}

}  // namespace pricesim
