#include "pricesim/policies.hpp"

#include <algorithm>
#include <cmath>

namespace pricesim {

PolicyKind policy_kind_from_string(const std::string& s) {
    if (s == "etc") return PolicyKind::etc;
    if (s == "etc_doubling") return PolicyKind::etc_doubling;
    if (s == "mle_cycle") return PolicyKind::mle_cycle;
    if (s == "semi_myopic") return PolicyKind::semi_myopic;
    if (s == "supcb") return PolicyKind::supcb;
    if (s == "ucb") return PolicyKind::ucb;
    if (s == "etc_ldp") return PolicyKind::etc_ldp;
    if (s == "etc_ldp_mixed") return PolicyKind::etc_ldp_mixed;
    if (s == "etc_ldp_approx") return PolicyKind::etc_ldp_approx;
    if (s == "clairvoyant") return PolicyKind::clairvoyant;
    if (s == "fixed") return PolicyKind::fixed;
    throw ConfigError("unknown policy kind: " + s);
}

std::string to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::etc: return "etc";
        case PolicyKind::etc_doubling: return "etc_doubling";
        case PolicyKind::mle_cycle: return "mle_cycle";
        case PolicyKind::semi_myopic: return "semi_myopic";
        case PolicyKind::supcb: return "supcb";
        case PolicyKind::ucb: return "ucb";
        case PolicyKind::etc_ldp: return "etc_ldp";
        case PolicyKind::etc_ldp_mixed: return "etc_ldp_mixed";
        case PolicyKind::etc_ldp_approx: return "etc_ldp_approx";
        case PolicyKind::clairvoyant: return "clairvoyant";
        case PolicyKind::fixed: return "fixed";
    }
    return "?";
}

Variant variant_from_string(const std::string& s) {
    if (s.empty() || s == "none") return Variant::none;
    if (s == "original") return Variant::original;
    if (s == "modified") return Variant::modified;
    if (s == "stochastic") return Variant::stochastic;
    if (s == "adversarial") return Variant::adversarial;
    throw ConfigError("unknown policy variant: " + s);
}

std::string to_string(Variant v) {
    switch (v) {
        case Variant::none: return "";
        case Variant::original: return "original";
        case Variant::modified: return "modified";
        case Variant::stochastic: return "stochastic";
        case Variant::adversarial: return "adversarial";
    }
    return "?";
}

Vector project_theta(const Vector& theta, const ThetaSpace& space) {
    if (!(space.radius > 0.0)) throw std::invalid_argument("project_theta: radius must be positive");
    const Vector diff = theta - space.center;
    const double n = diff.norm();
    if (n <= space.radius) return theta;
    return space.center + diff * (space.radius / n);
}

ModelParams project_theta(const ModelParams& theta, const ThetaSpace& space) {
    return ModelParams::from_stacked(project_theta(theta.stacked(), space));
}

// ---- tuning recipes ----

double lp_constant(const PriceRange& r) {
    const double l = r.lo, u = r.hi;
    return (u - l) * (u - l) / (4.0 * (u * u + l * l + u * l + 3.0));
}

long etc_default_tau(int d, long horizon) {
    const double t = static_cast<double>(horizon);
    return static_cast<long>(std::ceil(std::sqrt(d * t * std::log(t))));
}

long etc_doubling_tau(int d, long episode_len, double factor) {
    const double e = static_cast<double>(episode_len);
    const double raw = std::ceil(factor * std::sqrt(d * e * std::log(e)));
    return std::min<long>(episode_len, static_cast<long>(std::max(1.0, raw)));
}

long mle_cycle_experiments(int d, long cycle) {
    return static_cast<long>(std::ceil(std::sqrt(d * std::log(2.0 * static_cast<double>(cycle)))));
}

long supcb_num_arms(int d, long horizon) {
    const double t = static_cast<double>(horizon);
    const long k = static_cast<long>(std::ceil(std::sqrt(t / d) / std::log(t)));
    return std::max<long>(2, k);
}

long supcb_num_stages(long horizon) {
    long s = 0;
    while ((1L << (s + 1)) <= horizon) ++s;
    return std::max<long>(1, s);
}

long supcb_default_tau(int d, long horizon) {
    return static_cast<long>(std::ceil(std::sqrt(static_cast<double>(d) * horizon)));
}

// base-10 reading of the loglog(T) sqrt(log 3T^{3/2}KS) recipe; the natural-log
// reading puts the width threshold out of reach of any desk-scale horizon
// (stage one alone would need more samples than T) and contradicts the
// finite-sample behavior the recipe is known to produce
double supcb_default_alpha(long horizon, long num_arms, long num_stages) {
    const double t = static_cast<double>(horizon);
    const double inner = std::log10(3.0 * std::pow(t, 1.5) * num_arms * num_stages);
    return std::log10(std::log10(t)) * std::sqrt(inner);
}

// base-10 like the supCB multiplier, matching the finite-sample tuning the
// sqrt(d log T) loglog(T)/10 recipe is reported to give
double ucb_default_alpha(int d, long horizon) {
    const double t = static_cast<double>(horizon);
    return std::sqrt(d * std::log10(t)) * std::log10(std::log10(t)) / 10.0;
}

long etc_ldp_default_tau(int d, long horizon, double epsilon) {
    const double t = static_cast<double>(horizon);
    return static_cast<long>(std::ceil(2.0 * d * std::sqrt(t) * std::log(t) / epsilon));
}

long etc_ldp_doubling_tau(int d, long episode_len, double epsilon) {
    const double e = static_cast<double>(episode_len);
    const double raw = std::ceil(d * std::sqrt(2.0 * e) * std::log(e) / epsilon);
    return std::min<long>(episode_len, static_cast<long>(std::max(1.0, raw)));
}

long mixed_stage1_tau(int d, long horizon) {
    return static_cast<long>(std::ceil(std::sqrt(static_cast<double>(d) * horizon)));
}

long mixed_exploration_tau(double p_hat, int d, long horizon, double epsilon) {
    const double t = static_cast<double>(horizon);
    const double eff = p_hat + (1.0 - p_hat) * epsilon * epsilon / d;
    return static_cast<long>(std::ceil(2.0 * std::sqrt(d * t) * std::log(t) / std::sqrt(eff)));
}

double default_zeta_l(const PolicyConfig& cfg) {
    const double c_l = cfg.c_l.value_or(1.0);
    return c_l * lp_constant(cfg.experiment_range()) / cfg.d;
}

double default_c_g(const PolicyConfig& cfg, long tau) {
    if (cfg.c_g) return *cfg.c_g;
    const double u = cfg.experiment_range().hi;
    const double ux = std::sqrt(1.0 + u * u);
    if (cfg.family.kind == GlmKind::logistic) return cfg.z_norm_bound * ux;
    const double lt = std::log(static_cast<double>(std::max<long>(tau, 2)));
    return 2.0 * ux * (cfg.m_hat + cfg.sigma * std::sqrt(lt));
}

namespace {

Vector glm_gradient(const GlmFamily& family, const Vector& theta, const Vector& z, double p,
                    double y) {
    const Vector x = make_covariate(z, p);
    const double mu = psi_derivatives(family, x.dot(theta), 1);
    return (y - mu) * x;
}

long require_horizon(const PolicyConfig& cfg, const char* who) {
    if (!cfg.horizon) throw ConfigError(std::string(who) + ": horizon T is required");
    return *cfg.horizon;
}

}  // namespace

// ---- ETC ----

EtcPolicy::EtcPolicy(const PolicyConfig& cfg, std::uint64_t policy_seed)
    : cfg_(cfg), rng_(policy_seed) {
    const long horizon = require_horizon(cfg, "etc");
    explore_end_ = cfg.tau ? *cfg.tau : etc_default_tau(cfg.d, horizon);
}

double EtcPolicy::choose_price(const Vector& z) {
    if (!estimate_) {
        phase_ = Phase::explore;
        const PriceRange r = cfg_.experiment_range();
        return rng_.uniform(r.lo, r.hi);
    }
    phase_ = Phase::exploit;
    return optimal_price(cfg_.family, z, *estimate_, cfg_.range);
}

void EtcPolicy::observe(const Feedback& fb) {
    if (!estimate_) {
        data_.add(fb.z, fb.p, fb.y);
        ++round_;
        if (round_ >= explore_end_) {
            try {
                estimate_ = fit_mle(cfg_.family, data_, 0.0);
            } catch (const SingularMatrixError&) {
                explore_end_ = round_ + 2 * cfg_.d;  // keep experimenting, then retry
            } catch (const ConvergenceError&) {
                explore_end_ = round_ + 2 * cfg_.d;
            }
        }
        return;
    }
    ++round_;
}

// ---- ETC-Doubling ----

EtcDoublingPolicy::EtcDoublingPolicy(const PolicyConfig& cfg, std::uint64_t policy_seed)
    : cfg_(cfg), rng_(policy_seed), solver_(cfg.family, 0.0) {
    start_episode(1);
}

void EtcDoublingPolicy::start_episode(long k) {
    episode_ = k;
    episode_len_ = 1L << k;
    const double factor = cfg_.doubling_explore_factor.value_or(std::sqrt(2.0) - 1.0);
    tau_k_ = etc_doubling_tau(cfg_.d, episode_len_, factor);
}

double EtcDoublingPolicy::choose_price(const Vector& z) {
    const long pos = round_ - episode_start_;
    if (pos < tau_k_ || !estimate_) {
        phase_ = Phase::explore;
        const PriceRange r = cfg_.experiment_range();
        return rng_.uniform(r.lo, r.hi);
    }
    phase_ = Phase::exploit;
    return optimal_price(cfg_.family, z, *estimate_, cfg_.range);
}

void EtcDoublingPolicy::try_fit() {
    try {
        estimate_ = ModelParams::from_stacked(solver_.fit(data_));
    } catch (const SingularMatrixError&) {
        tau_k_ = std::min(episode_len_, (round_ - episode_start_) + 2 * cfg_.d);
    } catch (const ConvergenceError&) {
        tau_k_ = std::min(episode_len_, (round_ - episode_start_) + 2 * cfg_.d);
    }
}

void EtcDoublingPolicy::observe(const Feedback& fb) {
    const long pos = round_ - episode_start_;
    const bool exploring = pos < tau_k_ || !estimate_;
    if (exploring) data_.add(fb.z, fb.p, fb.y);
    ++round_;
    if (exploring && pos + 1 >= tau_k_) try_fit();
    if (pos + 1 == episode_len_) {
        episode_start_ += episode_len_;
        start_episode(episode_ + 1);
    }
}

// ---- MLE-Cycle ----

MleCyclePolicy::MleCyclePolicy(Variant variant, const PolicyConfig& cfg, std::uint64_t policy_seed)
    : variant_(variant), cfg_(cfg), rng_(policy_seed), solver_(cfg.family, 0.0) {
    if (variant_ != Variant::original && variant_ != Variant::modified)
        throw ConfigError("mle_cycle: variant must be original or modified");
    k_c_ = cycle_experiments(1);
}

long MleCyclePolicy::cycle_experiments(long c) const {
    if (variant_ == Variant::modified) return mle_cycle_experiments(cfg_.d, c);
    return cfg_.cycle_k.value_or(2);
}

double MleCyclePolicy::choose_price(const Vector& z) {
    if (pos_ < k_c_ || !estimate_) {
        phase_ = Phase::explore;
        const PriceRange r = cfg_.experiment_range();
        return rng_.uniform(r.lo, r.hi);
    }
    phase_ = Phase::exploit;
    return optimal_price(cfg_.family, z, *estimate_, cfg_.range);
}

void MleCyclePolicy::observe(const Feedback& fb) {
    // rounds where no estimate is available yet stay uniform experiments
    const bool experiment = pos_ < k_c_ || !estimate_;
    if (experiment) data_.add(fb.z, fb.p, fb.y);
    ++round_;
    ++pos_;
    if (pos_ == k_c_) {
        try {
            estimate_ = ModelParams::from_stacked(solver_.fit(data_));
        } catch (const SingularMatrixError&) {
            // keep experimenting through this cycle, retry next cycle
        } catch (const ConvergenceError&) {
        }
    }
    if (pos_ >= k_c_ + cycle_) {
        ++cycle_;
        pos_ = 0;
        k_c_ = cycle_experiments(cycle_);
    }
}

// ---- Semi-Myopic ----

SemiMyopicPolicy::SemiMyopicPolicy(Variant variant, const PolicyConfig& cfg,
                                   std::uint64_t policy_seed)
    : cfg_(cfg), rng_(policy_seed), solver_(cfg.family, 0.0) {
    if (variant != Variant::original && variant != Variant::modified)
        throw ConfigError("semi_myopic: variant must be original or modified");
    const double base = variant == Variant::modified ? std::pow(cfg.d, 0.25) : 1.0;
    kappa_ = cfg.kappa_dev.value_or(base);
    stride_ = std::max<long>(1, cfg.stride);
}

double SemiMyopicPolicy::choose_price(const Vector& z) {
    const long t = round_ + 1;
    if ((t - 1) % stride_ == 0 && !data_.empty()) {
        try {
            estimate_ = ModelParams::from_stacked(solver_.fit(data_));
        } catch (const SingularMatrixError&) {
        } catch (const ConvergenceError&) {
        }
    }
    if (!estimate_) {
        phase_ = Phase::explore;
        const PriceRange r = cfg_.experiment_range();
        return rng_.uniform(r.lo, r.hi);
    }
    phase_ = Phase::exploit;
    const double greedy = optimal_price(cfg_.family, z, *estimate_, cfg_.range);
    const double dev = kappa_ * std::pow(static_cast<double>(t), -0.25) * rng_.rademacher();
    return cfg_.range.clip(greedy + dev);
}

void SemiMyopicPolicy::observe(const Feedback& fb) {
    data_.add(fb.z, fb.p, fb.y);
    ++round_;
}

// ---- supCB ----

SupCbPolicy::SupCbPolicy(Variant mode, const PolicyConfig& cfg, std::uint64_t policy_seed)
    : mode_(mode), cfg_(cfg), rng_(policy_seed) {
    if (mode_ != Variant::stochastic && mode_ != Variant::adversarial)
        throw ConfigError("supcb: mode must be stochastic or adversarial");
    const long horizon = require_horizon(cfg, "supcb");
    num_arms_ = cfg.num_arms.value_or(supcb_num_arms(cfg.d, horizon));
    num_stages_ = cfg.num_stages.value_or(supcb_num_stages(horizon));
    tau_ = cfg.tau.value_or(mode_ == Variant::adversarial ? 0 : supcb_default_tau(cfg.d, horizon));
    alpha_ = cfg.cb_alpha.value_or(supcb_default_alpha(horizon, num_arms_, num_stages_));
    explore_rounds_ = num_stages_ * tau_;

    grid_.resize(num_arms_);
    for (long a = 0; a < num_arms_; ++a)
        grid_[a] = cfg.range.lo + (cfg.range.hi - cfg.range.lo) * a / (num_arms_ - 1);

    const double ridge = mode_ == Variant::adversarial ? 1.0 : 0.0;
    const Eigen::Index dim = 2 * cfg.d;
    for (long s = 0; s <= num_stages_; ++s) {
        stage_data_.emplace_back(dim);
        stage_design_.emplace_back(dim, ridge);
        stage_solver_.emplace_back(cfg.family, ridge);
        stage_theta_.emplace_back(Vector::Zero(dim));
        stage_fit_size_.push_back(-1);
        stage_has_theta_.push_back(ridge > 0.0);  // empty ridge MLE is theta = 0
    }
    landings_.assign(num_stages_ + 1, 0);
}

const Vector* SupCbPolicy::stage_estimate(long s) {
    if (stage_data_[s].empty()) {
        return stage_has_theta_[s] ? &stage_theta_[s] : nullptr;
    }
    if (stage_fit_size_[s] != stage_data_[s].size()) {
        try {
            stage_theta_[s] = stage_solver_[s].fit(stage_data_[s]);
            stage_fit_size_[s] = stage_data_[s].size();
            stage_has_theta_[s] = true;
        } catch (const SingularMatrixError&) {
            return nullptr;
        } catch (const ConvergenceError&) {
            return nullptr;
        }
    }
    return stage_has_theta_[s] ? &stage_theta_[s] : nullptr;
}

double SupCbPolicy::choose_price(const Vector& z) {
    if (round_ < explore_rounds_) {
        phase_ = Phase::explore;
        pending_stage_ = round_ / tau_ + 1;
        return grid_[rng_.index(static_cast<std::uint64_t>(num_arms_))];
    }
    phase_ = Phase::exploit;
    const long horizon = *cfg_.horizon;
    const double floor_width = 1.0 / std::sqrt(static_cast<double>(horizon));

    std::vector<long> active(grid_.size());
    for (size_t a = 0; a < grid_.size(); ++a) active[a] = static_cast<long>(a);

    std::vector<double> rewards(grid_.size()), widths(grid_.size());
    for (long s = 1; s <= num_stages_; ++s) {
        max_depth_ = std::max(max_depth_, s);
        const Vector* theta = stage_estimate(s);
        const Matrix* vinv = nullptr;
        if (theta) {
            try {
                vinv = &stage_design_[s].inverse();
            } catch (const SingularMatrixError&) {
                vinv = nullptr;
            }
        }
        if (!theta || !vinv) {
            // degenerate stage data; fall back to a uniform grid draw
            ++fallbacks_;
            pending_stage_ = s;
            return grid_[rng_.index(static_cast<std::uint64_t>(num_arms_))];
        }
        const int d = cfg_.d;
        const Vector za_part = theta->head(d);
        const Vector zb_part = theta->tail(d);
        const double sa = z.dot(za_part);
        const double sb = z.dot(zb_part);
        const double qa = z.dot(vinv->topLeftCorner(d, d) * z);
        const double qb = z.dot(vinv->topRightCorner(d, d) * z);
        const double qc = z.dot(vinv->bottomRightCorner(d, d) * z);

        double best_w = -1.0, best_r = -1.0;
        long best_w_arm = -1, best_r_arm = -1;
        for (long a : active) {
            const double p = grid_[a];
            rewards[a] = p * psi_derivatives(cfg_.family, sa - sb * p, 1);
            const double q = qa - 2.0 * p * qb + p * p * qc;
            widths[a] = alpha_ * std::sqrt(q > 0.0 ? q : 0.0);
            if (widths[a] > best_w) {
                best_w = widths[a];
                best_w_arm = a;
            }
            if (rewards[a] > best_r) {
                best_r = rewards[a];
                best_r_arm = a;
            }
        }
        const double threshold = std::ldexp(1.0, static_cast<int>(-s));  // 2^{-s}
        if (best_w > threshold) {
            pending_stage_ = s;
            return grid_[best_w_arm];
        }
        if (best_w <= floor_width) {
            pending_stage_ = 0;
            return grid_[best_r_arm];
        }
        std::vector<long> next;
        for (long a : active)
            if (rewards[a] >= best_r - 2.0 * threshold) next.push_back(a);
        ++eliminations_;
        // the surviving set must sit inside the old one and keep the best arm
        if (next.empty() || next.size() > active.size() ||
            std::find(next.begin(), next.end(), best_r_arm) == next.end())
            elimination_ok_ = false;
        for (long a : next)
            if (std::find(active.begin(), active.end(), a) == active.end())
                elimination_ok_ = false;
        active.swap(next);
    }
    // unreachable for horizon >= 4: at stage S the width floor catches
    long best_arm = active.front();
    for (long a : active)
        if (rewards[a] > rewards[best_arm]) best_arm = a;
    pending_stage_ = 0;
    return grid_[best_arm];
}

void SupCbPolicy::observe(const Feedback& fb) {
    const long s = pending_stage_;
    pending_stage_ = -1;
    if (s >= 1) {
        stage_data_[s].add(fb.z, fb.p, fb.y);
        stage_design_[s].update(make_covariate(fb.z, fb.p));
    }
    if (round_ >= explore_rounds_ && s >= 0) ++landings_[s];
    ++round_;
}

// ---- adversarial UCB ----

UcbPolicy::UcbPolicy(const PolicyConfig& cfg, std::uint64_t policy_seed)
    : cfg_(cfg),
      rng_(policy_seed),
      solver_(cfg.family, 1.0),
      design_(2 * cfg.d, 1.0),
      theta_(Vector::Zero(2 * cfg.d)) {
    if (cfg.cb_alpha) {
        alpha_ = *cfg.cb_alpha;
    } else {
        const long horizon = require_horizon(cfg, "ucb (default alpha)");
        alpha_ = ucb_default_alpha(cfg.d, horizon);
    }
}

double UcbPolicy::width_at(const Vector& z, double p) const {
    return mahalanobis_norm(make_covariate(z, p), design_);
}

double UcbPolicy::choose_price(const Vector& z) {
    if (!data_.empty()) {
        try {
            theta_ = solver_.fit(data_);
        } catch (const ConvergenceError& e) {
            theta_ = e.last_iterate;  // ridge objective; iterate is still usable
        }
        if (cfg_.theta_space) theta_ = project_theta(theta_, *cfg_.theta_space);
    }
    const int d = cfg_.d;
    const double sa = z.dot(theta_.head(d));
    const double sb = z.dot(theta_.tail(d));
    const Matrix& vinv = design_.inverse();
    const double qa = z.dot(vinv.topLeftCorner(d, d) * z);
    const double qb = z.dot(vinv.topRightCorner(d, d) * z);
    const double qc = z.dot(vinv.bottomRightCorner(d, d) * z);
    const double cap = cfg_.score_cap;
    const auto ucb = [&](double p) {
        const double q = qa - 2.0 * p * qb + p * p * qc;
        double score = sa - sb * p + alpha_ * std::sqrt(q > 0.0 ? q : 0.0);
        if (score > cap) score = cap;
        return p * psi_derivatives(cfg_.family, score, 1);
    };
    return maximize_on_interval(ucb, cfg_.range.lo, cfg_.range.hi);
}

void UcbPolicy::observe(const Feedback& fb) {
    data_.add(fb.z, fb.p, fb.y);
    design_.update(make_covariate(fb.z, fb.p));
    ++round_;
}

// ---- ETC-LDP (pure and approximate) ----

EtcLdpPolicy::EtcLdpPolicy(Mechanism mech, const PolicyConfig& cfg, std::uint64_t policy_seed,
                           std::uint64_t privacy_seed)
    : mech_(mech), cfg_(cfg), rng_(policy_seed), privacy_rng_(privacy_seed) {
    if (!cfg.privacy) throw ConfigError("etc_ldp: privacy parameters required");
    cfg.privacy->validate();
    if (mech_ == Mechanism::gaussian && !cfg.privacy->delta)
        throw ConfigError("etc_ldp_approx: delta required");
    if (!cfg.theta_space) throw ConfigError("etc_ldp: theta_space required");
    if (!(cfg.theta_space->radius > 0.0) || cfg.theta_space->center.size() != 2 * cfg.d)
        throw ConfigError("etc_ldp: theta_space needs a positive radius and a 2d-dim center");
    zeta_l_ = default_zeta_l(cfg);
    theta0_ = rng_.uniform_in_ball(cfg.theta_space->center, cfg.theta_space->radius);
    theta_ = theta0_;
    doubling_ = !cfg.horizon.has_value();
    if (doubling_) {
        start_episode(1);
    } else {
        const long tau = cfg.tau ? *cfg.tau : etc_ldp_default_tau(cfg.d, *cfg.horizon,
                                                                 cfg.privacy->epsilon);
        explore_end_ = tau;
        episode_len_ = *cfg.horizon;
        c_g_ = default_c_g(cfg, tau);
    }
}

void EtcLdpPolicy::start_episode(long q) {
    episode_ = q;
    episode_len_ = 1L << q;
    const long tau = etc_ldp_doubling_tau(cfg_.d, episode_len_, cfg_.privacy->epsilon);
    explore_end_ = episode_start_ + tau;
    sgd_steps_ = 0;  // new 1/t schedule; the estimate carries over
    c_g_ = default_c_g(cfg_, tau);
}

double EtcLdpPolicy::choose_price(const Vector& z) {
    if (round_ < explore_end_) {
        phase_ = Phase::explore;
        const PriceRange r = cfg_.experiment_range();
        return rng_.uniform(r.lo, r.hi);
    }
    phase_ = Phase::exploit;
    return optimal_price(cfg_.family, z, ModelParams::from_stacked(theta_), cfg_.range);
}

void EtcLdpPolicy::sgd_step(const Feedback& fb) {
    const Vector g = glm_gradient(cfg_.family, theta_, fb.z, fb.p, fb.y);
    const Vector gt = truncate_gradient(g, c_g_);
    const double eps = cfg_.privacy->epsilon;
    Vector w;
    if (mech_ == Mechanism::l2ball) {
        w = l2_ball(gt, c_g_, eps, privacy_rng_).w;
    } else {
        w = gaussian_mechanism(gt, c_g_, eps, *cfg_.privacy->delta, privacy_rng_).w;
    }
    ++sgd_steps_;
    const double eta = 1.0 / (zeta_l_ * static_cast<double>(sgd_steps_));
    theta_ = project_theta(theta_ + eta * w, *cfg_.theta_space);
    w_log_.push_back(w);
}

void EtcLdpPolicy::observe(const Feedback& fb) {
    if (round_ < explore_end_) sgd_step(fb);
    ++round_;
    if (doubling_ && round_ == episode_start_ + episode_len_) {
        episode_start_ += episode_len_;
        start_episode(episode_ + 1);
    }
}

// ---- ETC-LDP-Mixed ----

EtcLdpMixedPolicy::EtcLdpMixedPolicy(const PolicyConfig& cfg, std::uint64_t policy_seed,
                                     std::uint64_t privacy_seed)
    : cfg_(cfg), rng_(policy_seed), privacy_rng_(privacy_seed) {
    if (!cfg.privacy) throw ConfigError("etc_ldp_mixed: privacy parameters required");
    cfg.privacy->validate();
    if (!cfg.theta_space) throw ConfigError("etc_ldp_mixed: theta_space required");
    if (!(cfg.theta_space->radius > 0.0) || cfg.theta_space->center.size() != 2 * cfg.d)
        throw ConfigError("etc_ldp_mixed: theta_space needs a positive radius and a 2d-dim center");
    const long horizon = require_horizon(cfg, "etc_ldp_mixed");
    tau1_ = mixed_stage1_tau(cfg.d, horizon);
    zeta_l_ = default_zeta_l(cfg);
    c_g_ = default_c_g(cfg, horizon);
    theta_ = rng_.uniform_in_ball(cfg.theta_space->center, cfg.theta_space->radius);
}

double EtcLdpMixedPolicy::choose_price(const Vector& z) {
    const bool exploring = tau2_ < 0 || round_ < tau2_;
    if (exploring) {
        phase_ = Phase::explore;
        const PriceRange r = cfg_.experiment_range();
        return rng_.uniform(r.lo, r.hi);
    }
    phase_ = Phase::exploit;
    return optimal_price(cfg_.family, z, ModelParams::from_stacked(theta_), cfg_.range);
}

void EtcLdpMixedPolicy::private_step(const Feedback& fb) {
    const Vector g = glm_gradient(cfg_.family, theta_, fb.z, fb.p, fb.y);
    const Vector gt = truncate_gradient(g, c_g_);
    const Vector w = l2_ball(gt, c_g_, cfg_.privacy->epsilon, privacy_rng_).w;
    ++private_count_;
    const double eta = 1.0 / (zeta_l_ * static_cast<double>(private_count_));
    theta_ = project_theta(theta_ + eta * w, *cfg_.theta_space);
}

void EtcLdpMixedPolicy::nonprivate_pass() {
    const double eps = cfg_.privacy->epsilon;
    const double head = (static_cast<double>(tau2_) - stash_.size()) * eps * eps / cfg_.d;
    for (Eigen::Index k = 0; k < stash_.size(); ++k) {
        const Vector x = stash_.xs().row(k).transpose();
        const double mu = psi_derivatives(cfg_.family, x.dot(theta_), 1);
        const Vector g = (stash_.ys()(k) - mu) * x;
        const double eta = 1.0 / (zeta_l_ * (head + static_cast<double>(k + 1)));
        theta_ = project_theta(theta_ + eta * g, *cfg_.theta_space);
    }
}

void EtcLdpMixedPolicy::observe(const Feedback& fb) {
    const bool exploring = tau2_ < 0 || round_ < tau2_;
    if (exploring) {
        if (fb.tag == PrivacyTag::priv) {
            private_step(fb);
        } else if (fb.tag == PrivacyTag::nonpriv) {
            stash_.add(fb.z, fb.p, fb.y);
        } else {
            throw std::invalid_argument("etc_ldp_mixed: feedback must carry a privacy preference");
        }
    }
    ++round_;
    if (round_ == tau1_ && tau2_ < 0) {
        p_hat_ = static_cast<double>(stash_.size()) / static_cast<double>(tau1_);
        const long horizon = *cfg_.horizon;
        long tau = mixed_exploration_tau(p_hat_, cfg_.d, horizon, cfg_.privacy->epsilon);
        tau2_ = std::min<long>(horizon, std::max(tau, tau1_));
    }
    if (tau2_ >= 0 && round_ == tau2_) nonprivate_pass();
}

// ---- reference policies ----

ClairvoyantPolicy::ClairvoyantPolicy(const PolicyConfig& cfg) : cfg_(cfg) {
    if (!cfg.oracle_theta) throw ConfigError("clairvoyant: oracle_theta required");
}

double ClairvoyantPolicy::choose_price(const Vector& z) {
    return optimal_price(cfg_.family, z, *cfg_.oracle_theta, cfg_.range);
}

FixedPricePolicy::FixedPricePolicy(const PolicyConfig& cfg) {
    if (!cfg.fixed_price) throw ConfigError("fixed: fixed_price required");
    price_ = cfg.range.clip(*cfg.fixed_price);
}

double FixedPricePolicy::choose_price(const Vector& z) {
    (void)z;
    return price_;
}

std::unique_ptr<Policy> make_policy(PolicyKind kind, Variant variant, const PolicyConfig& cfg,
                                    std::uint64_t policy_seed, std::uint64_t privacy_seed) {
    if (cfg.d <= 0) throw ConfigError("policy config: dimension d must be positive");
    switch (kind) {
        case PolicyKind::etc:
            return std::make_unique<EtcPolicy>(cfg, policy_seed);
        case PolicyKind::etc_doubling:
            return std::make_unique<EtcDoublingPolicy>(cfg, policy_seed);
        case PolicyKind::mle_cycle:
            return std::make_unique<MleCyclePolicy>(
                variant == Variant::none ? Variant::original : variant, cfg, policy_seed);
        case PolicyKind::semi_myopic:
            return std::make_unique<SemiMyopicPolicy>(
                variant == Variant::none ? Variant::original : variant, cfg, policy_seed);
        case PolicyKind::supcb:
            return std::make_unique<SupCbPolicy>(
                variant == Variant::none ? Variant::stochastic : variant, cfg, policy_seed);
        case PolicyKind::ucb:
            return std::make_unique<UcbPolicy>(cfg, policy_seed);
        case PolicyKind::etc_ldp:
            return std::make_unique<EtcLdpPolicy>(Mechanism::l2ball, cfg, policy_seed, privacy_seed);
        case PolicyKind::etc_ldp_approx:
            return std::make_unique<EtcLdpPolicy>(Mechanism::gaussian, cfg, policy_seed,
                                                  privacy_seed);
        case PolicyKind::etc_ldp_mixed:
            return std::make_unique<EtcLdpMixedPolicy>(cfg, policy_seed, privacy_seed);
        case PolicyKind::clairvoyant:
            return std::make_unique<ClairvoyantPolicy>(cfg);
        case PolicyKind::fixed:
            return std::make_unique<FixedPricePolicy>(cfg);
    }
    throw ConfigError("make_policy: unknown kind");
}

}  // namespace pricesim
