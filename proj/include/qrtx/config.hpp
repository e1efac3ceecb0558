// JSON run configuration. Unknown keys are rejected; missing keys take the
// documented defaults.
#pragma once

#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qrtx/decompose.hpp"
#include "qrtx/metrics.hpp"
#include "qrtx/network.hpp"

namespace qrtx {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error("config: " + msg) {}
};

struct RunConfig {
    SolverConfig solver;
    NetworkPlan network;
    uint64_t network_seed = 0;
    std::vector<double> alphas = default_alphas();
    double ssr_sigma = 15.0;
    double ssr_log_epsilon = 1e-6;
};

namespace detail {

inline void reject_unknown(const nlohmann::json& obj, const std::set<std::string>& allowed,
                           const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key())) throw ConfigError("unknown key \"" + it.key() + "\" in " + where);
}

template <typename T>
inline void maybe(const nlohmann::json& obj, const char* key, T& target) {
    if (obj.contains(key)) target = obj.at(key).get<T>();
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
    RunConfig cfg;
    detail::reject_unknown(j, {"solver", "loss", "network", "rci", "ssr"}, "top level");

    if (j.contains("solver")) {
        const auto& s = j.at("solver");
        detail::reject_unknown(s,
                               {"max_iters", "step_size", "epsilon_black", "seed", "convergence_tol",
                                "use_wavelet_domain", "use_cross_attention", "use_freq_reg", "beta1",
                                "beta2", "adam_eps", "warmup_start_lr", "warmup_epochs", "cosine_final_lr",
                                "cosine_epochs"},
                               "solver");
        detail::maybe(s, "max_iters", cfg.solver.max_iters);
        detail::maybe(s, "step_size", cfg.solver.step_size);
        detail::maybe(s, "epsilon_black", cfg.solver.epsilon_black);
        detail::maybe(s, "seed", cfg.solver.seed);
        detail::maybe(s, "convergence_tol", cfg.solver.convergence_tol);
        detail::maybe(s, "use_wavelet_domain", cfg.solver.use_wavelet_domain);
        detail::maybe(s, "use_cross_attention", cfg.solver.use_cross_attention);
        detail::maybe(s, "use_freq_reg", cfg.solver.use_freq_reg);
        detail::maybe(s, "beta1", cfg.solver.beta1);
        detail::maybe(s, "beta2", cfg.solver.beta2);
        detail::maybe(s, "adam_eps", cfg.solver.adam_eps);
        detail::maybe(s, "warmup_start_lr", cfg.solver.warmup_start_lr);
        detail::maybe(s, "warmup_epochs", cfg.solver.warmup_epochs);
        detail::maybe(s, "cosine_final_lr", cfg.solver.cosine_final_lr);
        detail::maybe(s, "cosine_epochs", cfg.solver.cosine_epochs);
    }
    if (j.contains("loss")) {
        const auto& l = j.at("loss");
        detail::reject_unknown(l,
                               {"w_recon_low", "w_recon_high", "w_mutual_low", "w_mutual_high", "w_smooth",
                                "w_equal_r", "w_freq", "gamma", "smooth_sharpness"},
                               "loss");
        LossWeights& w = cfg.solver.weights;
        detail::maybe(l, "w_recon_low", w.w_recon_low);
        detail::maybe(l, "w_recon_high", w.w_recon_high);
        detail::maybe(l, "w_mutual_low", w.w_mutual_low);
        detail::maybe(l, "w_mutual_high", w.w_mutual_high);
        detail::maybe(l, "w_smooth", w.w_smooth);
        detail::maybe(l, "w_equal_r", w.w_equal_r);
        detail::maybe(l, "w_freq", w.w_freq);
        detail::maybe(l, "gamma", w.gamma);
        detail::maybe(l, "smooth_sharpness", w.smooth_sharpness);
        if (w.w_recon_low < 0 || w.w_recon_high < 0 || w.w_mutual_low < 0 || w.w_mutual_high < 0 ||
            w.w_smooth < 0 || w.w_equal_r < 0 || w.w_freq < 0)
            throw ConfigError("loss weights must be >= 0");
    }
    if (j.contains("network")) {
        const auto& n = j.at("network");
        detail::reject_unknown(n, {"width", "heads", "sharpen_gain", "seed"}, "network");
        detail::maybe(n, "width", cfg.network.width);
        detail::maybe(n, "heads", cfg.network.heads);
        detail::maybe(n, "sharpen_gain", cfg.network.sharpen_gain);
        detail::maybe(n, "seed", cfg.network_seed);
    }
    if (j.contains("rci")) {
        const auto& r = j.at("rci");
        detail::reject_unknown(r, {"alphas"}, "rci");
        detail::maybe(r, "alphas", cfg.alphas);
    }
    if (j.contains("ssr")) {
        const auto& s = j.at("ssr");
        detail::reject_unknown(s, {"sigma", "log_epsilon"}, "ssr");
        detail::maybe(s, "sigma", cfg.ssr_sigma);
        detail::maybe(s, "log_epsilon", cfg.ssr_log_epsilon);
    }
    return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("parse error in " + path + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError("top level must be a JSON object");
    return parse_run_config(j);
}

}  // namespace qrtx
