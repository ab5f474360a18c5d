#pragma once

#include "pricesim/estimation.hpp"
#include "pricesim/glm.hpp"
#include "pricesim/privacy.hpp"
#include "pricesim/rng.hpp"
#include "pricesim/types.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace pricesim {

enum class PolicyKind {
    etc,
    etc_doubling,
    mle_cycle,
    semi_myopic,
    supcb,
    ucb,
    etc_ldp,
    etc_ldp_mixed,
    etc_ldp_approx,
    clairvoyant,
    fixed,
};

enum class Variant { none, original, modified, stochastic, adversarial };

enum class Phase { explore, exploit };

enum class PrivacyTag { none, priv, nonpriv };

PolicyKind policy_kind_from_string(const std::string& s);
std::string to_string(PolicyKind kind);
Variant variant_from_string(const std::string& s);
std::string to_string(Variant v);

// ball Theta = {theta : ||theta - center|| <= radius}
struct ThetaSpace {
    Vector center;
    double radius = 1.0;
};

Vector project_theta(const Vector& theta, const ThetaSpace& space);
ModelParams project_theta(const ModelParams& theta, const ThetaSpace& space);

struct PolicyConfig {
    GlmFamily family;
    PriceRange range;
    std::optional<PriceRange> explore_range;  // replay runs experiment on a narrower interval
    std::optional<long> horizon;
    int d = 0;

    // tuning overrides; defaults follow the per-policy recipes below
    std::optional<long> tau;
    std::optional<long> num_arms;         // supCB K
    std::optional<long> num_stages;       // supCB S
    std::optional<double> cb_alpha;       // confidence-width multiplier
    std::optional<double> c_l;            // SGD learning-rate multiplier
    std::optional<double> c_g;            // gradient truncation radius
    std::optional<double> kappa_dev;      // semi-myopic deviation scale
    std::optional<long> cycle_k;          // mle-cycle experiments per cycle
    long stride = 5;                      // semi-myopic refit stride
    std::optional<double> doubling_explore_factor;  // default sqrt(2)-1

    std::optional<PrivacyParams> privacy;
    std::optional<ThetaSpace> theta_space;

    double sigma = 1.0;         // sub-Gaussian proxy in default constants
    double m_hat = 1.0;         // mean-response bound in the default C_g
    double z_norm_bound = 1.0;  // context norm bound in the logistic C_g
    double score_cap = 30.0;    // UCB clips the inner score here before psi'

    std::optional<ModelParams> oracle_theta;  // clairvoyant
    std::optional<double> fixed_price;        // fixed policy

    PriceRange experiment_range() const { return explore_range ? *explore_range : range; }
};

struct Feedback {
    Vector z;
    double p = 0.0;
    double y = 0.0;
    PrivacyTag tag = PrivacyTag::none;
};

class Policy {
public:
    virtual ~Policy() = default;
    virtual double choose_price(const Vector& z) = 0;
    virtual void observe(const Feedback& fb) = 0;
    virtual Phase phase() const = 0;  // phase of the most recently priced round
    long round() const { return round_; }

protected:
    long round_ = 0;  // completed interactions
};

std::unique_ptr<Policy> make_policy(PolicyKind kind, Variant variant, const PolicyConfig& cfg,
                                    std::uint64_t policy_seed, std::uint64_t privacy_seed);

// ---- tuning recipes ----

// lambda_min of the price moment matrix under uniform exploration on [l,u]
double lp_constant(const PriceRange& r);

long etc_default_tau(int d, long horizon);                       // ceil(sqrt(d T ln T))
long etc_doubling_tau(int d, long episode_len, double factor);   // min(E, ceil(f sqrt(d E ln E)))
long mle_cycle_experiments(int d, long cycle);                   // ceil(sqrt(d ln(2c)))
long supcb_num_arms(int d, long horizon);                        // ceil(sqrt(T/d)/ln T), >= 2
long supcb_num_stages(long horizon);                             // floor(log2 T)
long supcb_default_tau(int d, long horizon);                     // ceil(sqrt(d T))
double supcb_default_alpha(long horizon, long num_arms, long num_stages);
double ucb_default_alpha(int d, long horizon);                   // sqrt(d ln T) lnln(T)/10
long etc_ldp_default_tau(int d, long horizon, double epsilon);   // ceil(2 d sqrt(T) ln T / eps)
long etc_ldp_doubling_tau(int d, long episode_len, double epsilon);
long mixed_stage1_tau(int d, long horizon);                      // ceil(sqrt(d T))
long mixed_exploration_tau(double p_hat, int d, long horizon, double epsilon);
double default_zeta_l(const PolicyConfig& cfg);                  // c_l * L_p / d
double default_c_g(const PolicyConfig& cfg, long tau);

// ---- concrete policies (exposed for structural tests) ----

class EtcPolicy : public Policy {
public:
    EtcPolicy(const PolicyConfig& cfg, std::uint64_t policy_seed);
    double choose_price(const Vector& z) override;
    void observe(const Feedback& fb) override;
    Phase phase() const override { return phase_; }
    long exploration_end() const { return explore_end_; }
    const std::optional<ModelParams>& estimate() const { return estimate_; }

private:
    PolicyConfig cfg_;
    Rng rng_;
    long explore_end_;
    Dataset data_;
    std::optional<ModelParams> estimate_;
    Phase phase_ = Phase::explore;
};

class EtcDoublingPolicy : public Policy {
public:
    EtcDoublingPolicy(const PolicyConfig& cfg, std::uint64_t policy_seed);
    double choose_price(const Vector& z) override;
    void observe(const Feedback& fb) override;
    Phase phase() const override { return phase_; }
    long episode() const { return episode_; }
    long episode_explore_len() const { return tau_k_; }

private:
    void start_episode(long k);
    void try_fit();

    PolicyConfig cfg_;
    Rng rng_;
    long episode_ = 0;
    long episode_start_ = 0;  // rounds completed before the current episode
    long episode_len_ = 0;
    long tau_k_ = 0;
    Dataset data_;
    MleSolver solver_;
    std::optional<ModelParams> estimate_;
    Phase phase_ = Phase::explore;
};

class MleCyclePolicy : public Policy {
public:
    MleCyclePolicy(Variant variant, const PolicyConfig& cfg, std::uint64_t policy_seed);
    double choose_price(const Vector& z) override;
    void observe(const Feedback& fb) override;
    Phase phase() const override { return phase_; }
    long cycle() const { return cycle_; }
    long experiments_this_cycle() const { return k_c_; }
    long total_experiments() const { return data_.size(); }

private:
    long cycle_experiments(long c) const;

    Variant variant_;
    PolicyConfig cfg_;
    Rng rng_;
    long cycle_ = 1;
    long pos_ = 0;  // position within the cycle
    long k_c_;
    Dataset data_;  // price experiments only
    MleSolver solver_;
    std::optional<ModelParams> estimate_;
    Phase phase_ = Phase::explore;
};

class SemiMyopicPolicy : public Policy {
public:
    SemiMyopicPolicy(Variant variant, const PolicyConfig& cfg, std::uint64_t policy_seed);
    double choose_price(const Vector& z) override;
    void observe(const Feedback& fb) override;
    Phase phase() const override { return phase_; }
    double deviation_scale() const { return kappa_; }

private:
    PolicyConfig cfg_;
    Rng rng_;
    double kappa_;
    long stride_;
    Dataset data_;  // every observation, deviated rounds included
    MleSolver solver_;
    std::optional<ModelParams> estimate_;
    Phase phase_ = Phase::explore;
};

class SupCbPolicy : public Policy {
public:
    SupCbPolicy(Variant mode, const PolicyConfig& cfg, std::uint64_t policy_seed);
    double choose_price(const Vector& z) override;
    void observe(const Feedback& fb) override;
    Phase phase() const override { return phase_; }

    long num_arms() const { return num_arms_; }
    long num_stages() const { return num_stages_; }
    long exploration_rounds() const { return explore_rounds_; }
    double grid_price(long a) const { return grid_[a]; }
    // structural introspection
    const std::vector<long>& landing_counts() const { return landings_; }
    long max_stage_depth() const { return max_depth_; }
    long fallback_rounds() const { return fallbacks_; }
    long elimination_count() const { return eliminations_; }
    bool elimination_invariants_held() const { return elimination_ok_; }

private:
    const Vector* stage_estimate(long s);

    Variant mode_;
    PolicyConfig cfg_;
    Rng rng_;
    long num_arms_;
    long num_stages_;
    long tau_;
    double alpha_;
    long explore_rounds_;
    std::vector<double> grid_;
    std::vector<Dataset> stage_data_;          // 1..S, holds F_s then Psi_s
    std::vector<DesignMatrix> stage_design_;   // 1..S
    std::vector<MleSolver> stage_solver_;
    std::vector<Vector> stage_theta_;
    std::vector<Eigen::Index> stage_fit_size_;
    std::vector<bool> stage_has_theta_;
    std::vector<long> landings_;  // per-round landing set, index 0..S
    long pending_stage_ = -1;     // stage the current round lands in
    long max_depth_ = 0;
    long fallbacks_ = 0;
    long eliminations_ = 0;
    bool elimination_ok_ = true;
    Phase phase_ = Phase::explore;
};

class UcbPolicy : public Policy {
public:
    UcbPolicy(const PolicyConfig& cfg, std::uint64_t policy_seed);
    double choose_price(const Vector& z) override;
    void observe(const Feedback& fb) override;
    Phase phase() const override { return Phase::exploit; }
    const Vector& estimate() const { return theta_; }
    double width_at(const Vector& z, double p) const;

private:
    PolicyConfig cfg_;
    Rng rng_;
    double alpha_;
    Dataset data_;
    MleSolver solver_;
    DesignMatrix design_;
    Vector theta_;
};

// Explore-then-commit with a privatized-SGD estimate; covers the pure-LDP
// policy (L2-ball mechanism) and its approximate-LDP variant (Gaussian
// mechanism). Runs episodically with doubling when the horizon is unknown.
class EtcLdpPolicy : public Policy {
public:
    EtcLdpPolicy(Mechanism mech, const PolicyConfig& cfg, std::uint64_t policy_seed,
                 std::uint64_t privacy_seed);
    double choose_price(const Vector& z) override;
    void observe(const Feedback& fb) override;
    Phase phase() const override { return phase_; }

    long exploration_end() const { return explore_end_; }
    double zeta_l() const { return zeta_l_; }
    double c_g() const { return c_g_; }
    const Vector& initial_estimate() const { return theta0_; }
    const Vector& estimate() const { return theta_; }
    const std::vector<Vector>& privatized_log() const { return w_log_; }

private:
    void start_episode(long q);
    void sgd_step(const Feedback& fb);

    Mechanism mech_;
    PolicyConfig cfg_;
    Rng rng_;
    Rng privacy_rng_;
    bool doubling_;
    long episode_ = 0;
    long episode_start_ = 0;
    long episode_len_ = 0;
    long explore_end_ = 0;  // absolute round index where exploration stops
    long sgd_steps_ = 0;
    double zeta_l_;
    double c_g_;
    Vector theta0_;
    Vector theta_;
    std::vector<Vector> w_log_;
    Phase phase_ = Phase::explore;
};

class EtcLdpMixedPolicy : public Policy {
public:
    EtcLdpMixedPolicy(const PolicyConfig& cfg, std::uint64_t policy_seed,
                      std::uint64_t privacy_seed);
    double choose_price(const Vector& z) override;
    void observe(const Feedback& fb) override;
    Phase phase() const override { return phase_; }

    long stage1_end() const { return tau1_; }
    long exploration_end() const { return tau2_; }
    double estimated_nonprivate_fraction() const { return p_hat_; }
    const Vector& estimate() const { return theta_; }
    long stash_size() const { return stash_.size(); }

private:
    void private_step(const Feedback& fb);
    void nonprivate_pass();

    PolicyConfig cfg_;
    Rng rng_;
    Rng privacy_rng_;
    long tau1_;
    long tau2_ = -1;  // resolved at the end of stage I
    double p_hat_ = 0.0;
    double zeta_l_;
    double c_g_;
    long private_count_ = 0;
    Dataset stash_;  // raw records of consenting consumers, arrival order
    Vector theta_;
    Phase phase_ = Phase::explore;
};

class ClairvoyantPolicy : public Policy {
public:
    ClairvoyantPolicy(const PolicyConfig& cfg);
    double choose_price(const Vector& z) override;
    void observe(const Feedback& fb) override { (void)fb; ++round_; }
    Phase phase() const override { return Phase::exploit; }

private:
    PolicyConfig cfg_;
};

class FixedPricePolicy : public Policy {
public:
    FixedPricePolicy(const PolicyConfig& cfg);
    double choose_price(const Vector& z) override;
    void observe(const Feedback& fb) override { (void)fb; ++round_; }
    Phase phase() const override { return Phase::exploit; }

private:
    double price_;
};

}  // namespace pricesim
