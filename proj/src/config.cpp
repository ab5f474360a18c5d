#include "pricesim/config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>

namespace pricesim {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& item : j.items())
        if (!allowed.count(item.key()))
            throw ConfigError("unknown key '" + item.key() + "' in " + where);
}

Vector to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> from_vector(const Vector& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

EnvConfig parse_env(const json& j) {
    reject_unknown(j,
                   {"scenario", "d", "family", "noise_scale", "theta", "price_range", "horizon",
                    "mixed_p", "lb_delta", "lb_v", "pool", "theta_file"},
                   "env");
    EnvConfig env;
    env.scenario = j.value("scenario", "s1");
    env.d = j.value("d", 1);
    if (j.contains("family")) env.family = j.at("family").get<std::string>();
    if (j.contains("noise_scale")) env.noise_scale = j.at("noise_scale").get<double>();
    if (j.contains("theta")) {
        const auto& t = j.at("theta");
        if (t.is_string()) {
            if (t.get<std::string>() != "fit-from-data")
                throw ConfigError("env.theta must be an object or \"fit-from-data\"");
            env.theta_from_data = true;
        } else {
            reject_unknown(t, {"alpha", "beta"}, "env.theta");
            env.theta = {t.at("alpha").get<std::vector<double>>(),
                         t.at("beta").get<std::vector<double>>()};
        }
    }
    if (j.contains("price_range")) {
        const auto pr = j.at("price_range").get<std::vector<double>>();
        if (pr.size() != 2) throw ConfigError("env.price_range must have two entries");
        env.price_range = {pr[0], pr[1]};
    }
    if (j.contains("horizon")) env.horizon = j.at("horizon").get<long>();
    if (j.contains("mixed_p")) env.mixed_p = j.at("mixed_p").get<double>();
    if (j.contains("lb_delta")) env.lb_delta = j.at("lb_delta").get<double>();
    if (j.contains("lb_v")) env.lb_v = j.at("lb_v").get<std::vector<int>>();
    if (j.contains("pool")) env.pool = j.at("pool").get<std::string>();
    if (j.contains("theta_file")) env.theta_file = j.at("theta_file").get<std::string>();
    return env;
}

json env_to_json(const EnvConfig& env) {
    json j;
    j["scenario"] = env.scenario;
    j["d"] = env.d;
    if (env.family) j["family"] = *env.family;
    if (env.noise_scale) j["noise_scale"] = *env.noise_scale;
    if (env.theta_from_data) {
        j["theta"] = "fit-from-data";
    } else if (env.theta) {
        j["theta"] = {{"alpha", env.theta->first}, {"beta", env.theta->second}};
    }
    j["price_range"] = {env.price_range[0], env.price_range[1]};
    if (env.horizon) j["horizon"] = *env.horizon;
    if (env.mixed_p) j["mixed_p"] = *env.mixed_p;
    if (env.lb_delta) j["lb_delta"] = *env.lb_delta;
    if (env.lb_v) j["lb_v"] = *env.lb_v;
    if (env.pool) j["pool"] = *env.pool;
    if (env.theta_file) j["theta_file"] = *env.theta_file;
    return j;
}

PolicyEntry parse_policy(const json& j) {
    reject_unknown(j, {"kind", "variant", "epsilon", "delta", "tuning"}, "policies[]");
    PolicyEntry p;
    p.kind = j.at("kind").get<std::string>();
    p.variant = j.value("variant", "");
    if (j.contains("epsilon")) p.epsilon = j.at("epsilon").get<double>();
    if (j.contains("delta")) p.delta = j.at("delta").get<double>();
    if (j.contains("tuning")) {
        const auto& t = j.at("tuning");
        reject_unknown(t,
                       {"tau", "K", "S", "alpha", "c_l", "c_g", "kappa_dev", "k", "stride",
                        "doubling_factor", "sigma", "m_hat", "z_norm_bound", "score_cap",
                        "fixed_price", "theta_center", "theta_radius", "explore_range"},
                       "policies[].tuning");
        if (t.contains("tau")) p.tau = t.at("tau").get<long>();
        if (t.contains("K")) p.num_arms = t.at("K").get<long>();
        if (t.contains("S")) p.num_stages = t.at("S").get<long>();
        if (t.contains("alpha")) p.cb_alpha = t.at("alpha").get<double>();
        if (t.contains("c_l")) p.c_l = t.at("c_l").get<double>();
        if (t.contains("c_g")) p.c_g = t.at("c_g").get<double>();
        if (t.contains("kappa_dev")) p.kappa_dev = t.at("kappa_dev").get<double>();
        if (t.contains("k")) p.cycle_k = t.at("k").get<long>();
        if (t.contains("stride")) p.stride = t.at("stride").get<long>();
        if (t.contains("doubling_factor")) p.doubling_factor = t.at("doubling_factor").get<double>();
        if (t.contains("sigma")) p.sigma = t.at("sigma").get<double>();
        if (t.contains("m_hat")) p.m_hat = t.at("m_hat").get<double>();
        if (t.contains("z_norm_bound")) p.z_norm_bound = t.at("z_norm_bound").get<double>();
        if (t.contains("score_cap")) p.score_cap = t.at("score_cap").get<double>();
        if (t.contains("fixed_price")) p.fixed_price = t.at("fixed_price").get<double>();
        if (t.contains("theta_center"))
            p.theta_center = t.at("theta_center").get<std::vector<double>>();
        if (t.contains("theta_radius")) p.theta_radius = t.at("theta_radius").get<double>();
        if (t.contains("explore_range")) {
            const auto er = t.at("explore_range").get<std::vector<double>>();
            if (er.size() != 2) throw ConfigError("tuning.explore_range must have two entries");
            p.explore_range = {{er[0], er[1]}};
        }
    }
    return p;
}

json policy_to_json(const PolicyEntry& p) {
    json j;
    j["kind"] = p.kind;
    if (!p.variant.empty()) j["variant"] = p.variant;
    if (p.epsilon) j["epsilon"] = *p.epsilon;
    if (p.delta) j["delta"] = *p.delta;
    json t = json::object();
    if (p.tau) t["tau"] = *p.tau;
    if (p.num_arms) t["K"] = *p.num_arms;
    if (p.num_stages) t["S"] = *p.num_stages;
    if (p.cb_alpha) t["alpha"] = *p.cb_alpha;
    if (p.c_l) t["c_l"] = *p.c_l;
    if (p.c_g) t["c_g"] = *p.c_g;
    if (p.kappa_dev) t["kappa_dev"] = *p.kappa_dev;
    if (p.cycle_k) t["k"] = *p.cycle_k;
    if (p.stride) t["stride"] = *p.stride;
    if (p.doubling_factor) t["doubling_factor"] = *p.doubling_factor;
    if (p.sigma) t["sigma"] = *p.sigma;
    if (p.m_hat) t["m_hat"] = *p.m_hat;
    if (p.z_norm_bound) t["z_norm_bound"] = *p.z_norm_bound;
    if (p.score_cap) t["score_cap"] = *p.score_cap;
    if (p.fixed_price) t["fixed_price"] = *p.fixed_price;
    if (p.theta_center) t["theta_center"] = *p.theta_center;
    if (p.theta_radius) t["theta_radius"] = *p.theta_radius;
    if (p.explore_range) t["explore_range"] = {(*p.explore_range)[0], (*p.explore_range)[1]};
    if (!t.empty()) j["tuning"] = t;
    return j;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    reject_unknown(j, {"env", "policies", "grid", "output"}, "config");
    RunConfig cfg;
    if (j.contains("env")) cfg.env = parse_env(j.at("env"));
    if (j.contains("policies"))
        for (const auto& p : j.at("policies")) cfg.policies.push_back(parse_policy(p));
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        reject_unknown(g, {"d_list", "T_list", "eps_list", "delta_list", "p_list", "reps", "seed",
                           "jobs"},
                       "grid");
        if (g.contains("d_list")) cfg.grid.d_list = g.at("d_list").get<std::vector<int>>();
        if (g.contains("T_list")) cfg.grid.t_list = g.at("T_list").get<std::vector<long>>();
        if (g.contains("eps_list")) cfg.grid.eps_list = g.at("eps_list").get<std::vector<double>>();
        if (g.contains("delta_list"))
            cfg.grid.delta_list = g.at("delta_list").get<std::vector<double>>();
        if (g.contains("p_list")) cfg.grid.p_list = g.at("p_list").get<std::vector<double>>();
        cfg.grid.reps = g.value("reps", 1);
        cfg.grid.seed = g.value("seed", std::uint64_t{0});
        cfg.grid.jobs = g.value("jobs", 1);
    }
    if (j.contains("output")) {
        const auto& o = j.at("output");
        reject_unknown(o, {"dir", "path_stride"}, "output");
        cfg.output.dir = o.value("dir", "out");
        cfg.output.path_stride = o.value("path_stride", 100L);
    }
    return cfg;
}

std::string serialize_run_config(const RunConfig& cfg) {
    json j;
    j["env"] = env_to_json(cfg.env);
    j["policies"] = json::array();
    for (const auto& p : cfg.policies) j["policies"].push_back(policy_to_json(p));
    j["grid"] = {{"d_list", cfg.grid.d_list},   {"T_list", cfg.grid.t_list},
                 {"eps_list", cfg.grid.eps_list}, {"delta_list", cfg.grid.delta_list},
                 {"p_list", cfg.grid.p_list},   {"reps", cfg.grid.reps},
                 {"seed", cfg.grid.seed},       {"jobs", cfg.grid.jobs}};
    j["output"] = {{"dir", cfg.output.dir}, {"path_stride", cfg.output.path_stride}};
    return j.dump(2) + "\n";
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config: " + path);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return parse_run_config(text);
}

void write_theta_json(const CovariatePool& pool, const std::string& path) {
    json j;
    j["alpha"] = from_vector(pool.theta.alpha);
    j["beta"] = from_vector(pool.theta.beta);
    j["features"] = pool.feature_names;
    j["column_means"] = from_vector(pool.column_means);
    j["raw_rows"] = pool.raw_rows;
    j["kept_rows"] = pool.kept_rows;
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << j.dump(2) << "\n";
}

void read_theta_json(const std::string& path, CovariatePool& pool) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open theta file: " + path);
    json j = json::parse(f);
    pool.theta = ModelParams(to_vector(j.at("alpha").get<std::vector<double>>()),
                             to_vector(j.at("beta").get<std::vector<double>>()));
    if (j.contains("features")) pool.feature_names = j.at("features").get<std::vector<std::string>>();
    if (j.contains("column_means"))
        pool.column_means = to_vector(j.at("column_means").get<std::vector<double>>());
}

EnvSpec build_env(const EnvConfig& env_cfg, int d, long horizon, const CovariatePool* pool) {
    const ContextKind kind = context_kind_from_string(env_cfg.scenario);
    const PriceRange range(env_cfg.price_range[0], env_cfg.price_range[1]);
    EnvSpec env;
    if (kind == ContextKind::replay) {
        if (!pool) throw ConfigError("replay environment requires a pool");
        env.context.kind = kind;
        env.context.d = static_cast<int>(pool->contexts.cols());
        env.context.pool = std::make_shared<const Matrix>(pool->contexts);
        env.family = {GlmKind::logistic, 1.0};
        env.truth = pool->theta;
        env.range = range;
        env.horizon = horizon;
    } else if (kind == ContextKind::multinomial_lb) {
        env.context.kind = kind;
        env.context.d = d;
        env.context.lb_delta = env_cfg.lb_delta.value_or(0.5);
        env.context.lb_v = env_cfg.lb_v.value_or(std::vector<int>(d, 1));
        env.family = {GlmKind::gaussian, 1.0};
        env.truth = multinomial_lb_truth(d, env.context.lb_delta, env.context.lb_v);
        env.range = range;
        env.horizon = horizon;
    } else {
        env = make_scenario_env(kind, d, horizon, range);
    }
    if (env_cfg.family) env.family.kind = glm_kind_from_string(*env_cfg.family);
    if (env_cfg.noise_scale) env.family.noise_scale = *env_cfg.noise_scale;
    if (env_cfg.theta)
        env.truth = ModelParams(to_vector(env_cfg.theta->first), to_vector(env_cfg.theta->second));
    env.mixed_p = env_cfg.mixed_p;
    env.validate();
    return env;
}

PolicyConfig build_policy_config(const PolicyEntry& entry) {
    PolicyConfig cfg;
    cfg.tau = entry.tau;
    cfg.num_arms = entry.num_arms;
    cfg.num_stages = entry.num_stages;
    cfg.cb_alpha = entry.cb_alpha;
    cfg.c_l = entry.c_l;
    cfg.c_g = entry.c_g;
    cfg.kappa_dev = entry.kappa_dev;
    cfg.cycle_k = entry.cycle_k;
    if (entry.stride) cfg.stride = *entry.stride;
    cfg.doubling_explore_factor = entry.doubling_factor;
    if (entry.sigma) cfg.sigma = *entry.sigma;
    if (entry.m_hat) cfg.m_hat = *entry.m_hat;
    if (entry.z_norm_bound) cfg.z_norm_bound = *entry.z_norm_bound;
    if (entry.score_cap) cfg.score_cap = *entry.score_cap;
    cfg.fixed_price = entry.fixed_price;
    if (entry.explore_range)
        cfg.explore_range = PriceRange((*entry.explore_range)[0], (*entry.explore_range)[1]);
    if (entry.epsilon || entry.delta) {
        PrivacyParams pp;
        pp.epsilon = entry.epsilon.value_or(1.0);
        pp.delta = entry.delta;
        cfg.privacy = pp;
    }
    if (entry.theta_center) {
        ThetaSpace space;
        space.center = to_vector(*entry.theta_center);
        space.radius = entry.theta_radius.value_or(1.0);
        cfg.theta_space = space;
    } else if (entry.theta_radius) {
        ThetaSpace space;
        space.center = Vector();  // resolved against the environment dimension later
        space.radius = *entry.theta_radius;
        cfg.theta_space = space;
    }
    return cfg;
}

namespace {

bool policy_uses_epsilon(PolicyKind k) {
    return k == PolicyKind::etc_ldp || k == PolicyKind::etc_ldp_mixed ||
           k == PolicyKind::etc_ldp_approx;
}

}  // namespace

BuiltGrid build_grid(const RunConfig& cfg, const CovariatePool* pool) {
    if (cfg.policies.empty()) throw ConfigError("config has no policies");
    BuiltGrid out;
    out.grid.reps = cfg.grid.reps;
    out.grid.base_seed = cfg.grid.seed;
    out.grid.jobs = cfg.grid.jobs;
    out.grid.path_stride = cfg.output.path_stride;

    std::vector<int> d_list = cfg.grid.d_list;
    if (d_list.empty()) d_list = {cfg.env.d};
    std::vector<long> t_list = cfg.grid.t_list;
    if (t_list.empty()) {
        if (!cfg.env.horizon) throw ConfigError("grid needs T_list or env.horizon");
        t_list = {*cfg.env.horizon};
    }

    for (const auto& entry : cfg.policies) {
        const PolicyKind kind = policy_kind_from_string(entry.kind);
        const Variant variant = variant_from_string(entry.variant);
        std::vector<std::optional<double>> eps_values{std::nullopt};
        if (policy_uses_epsilon(kind)) {
            if (entry.epsilon) {
                eps_values = {entry.epsilon};
            } else if (!cfg.grid.eps_list.empty()) {
                eps_values.clear();
                for (double e : cfg.grid.eps_list) eps_values.push_back(e);
            } else {
                throw ConfigError(entry.kind + " needs epsilon (policy field or grid.eps_list)");
            }
        }
        std::vector<std::optional<double>> delta_values{std::nullopt};
        if (kind == PolicyKind::etc_ldp_approx) {
            if (entry.delta) {
                delta_values = {entry.delta};
            } else if (!cfg.grid.delta_list.empty()) {
                delta_values.clear();
                for (double dl : cfg.grid.delta_list) delta_values.push_back(dl);
            } else {
                throw ConfigError("etc_ldp_approx needs delta (policy field or grid.delta_list)");
            }
        }
        std::vector<std::optional<double>> p_values{std::nullopt};
        if (kind == PolicyKind::etc_ldp_mixed) {
            if (cfg.env.mixed_p) {
                p_values = {cfg.env.mixed_p};
            } else if (!cfg.grid.p_list.empty()) {
                p_values.clear();
                for (double p : cfg.grid.p_list) p_values.push_back(p);
            } else {
                throw ConfigError("etc_ldp_mixed needs mixed_p (env field or grid.p_list)");
            }
        }
        for (int d : d_list)
            for (long t : t_list)
                for (const auto& eps : eps_values)
                    for (const auto& delta : delta_values)
                        for (const auto& pmix : p_values) {
                            GridCell cell;
                            cell.env = build_env(cfg.env, d, t, pool);
                            if (pmix) cell.env.mixed_p = pmix;
                            cell.kind = kind;
                            cell.variant = variant;
                            PolicyEntry resolved = entry;
                            if (eps) resolved.epsilon = eps;
                            if (delta) resolved.delta = delta;
                            cell.cfg = build_policy_config(resolved);
                            RunLabel label;
                            label.policy = entry.kind;
                            label.variant = to_string(variant);
                            label.d = cell.env.context.d;
                            label.horizon = t;
                            label.epsilon = eps;
                            label.delta = delta;
                            label.p_star_mix = pmix ? pmix : cell.env.mixed_p;
                            out.grid.cells.push_back(std::move(cell));
                            out.labels.push_back(std::move(label));
                        }
    }
    return out;
}

}  // namespace pricesim
