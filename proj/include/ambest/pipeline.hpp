#pragma once

#include "ambest/bundled.hpp"
#include "ambest/config.hpp"

#include <atomic>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

namespace ambest {

/// Resolve a --config argument: bundled id first, then filesystem path.
inline RunConfig load_config_arg(const std::string& path_or_id) {
    const auto& sys = bundled_systems();
    if (auto it = sys.find(path_or_id); it != sys.end())
        return parse_config(it->second);
    return parse_config(read_file(path_or_id));
}

/// What the estimator is allowed to touch: the fitted parameter specs plus
/// values pinned from an earlier fit (sequential H-then-D protocol).
struct FitContext {
    std::vector<ParamSpec> params;
    std::map<std::string, double> fixed; ///< "H:dev"/"D:dev" -> value
};

namespace pipe_detail {

struct DeviceTune {
    bool has_h = false, has_d = false;
    double h = 0.0, d = 0.0;
    bool touched = false;
};

inline std::map<std::string, DeviceTune> tuning(const FitContext& fit) {
    std::map<std::string, DeviceTune> map;
    auto put = [&](const std::string& name, double value) {
        const auto colon = name.find(':');
        if (colon == std::string::npos)
            throw ConfigError("parameter '" + name + "': expected H:<dev> or D:<dev>");
        auto& t = map[name.substr(colon + 1)];
        t.touched = true;
        if (name.substr(0, colon) == "H") {
            t.has_h = true;
            t.h = value;
        } else {
            t.has_d = true;
            t.d = value;
        }
    };
    for (const auto& p : fit.params) put(p.name, p.initial);
    for (const auto& [name, value] : fit.fixed) put(name, value);
    return map;
}

} // namespace pipe_detail

/// Device set the estimator fits: devices under estimation take their
/// initial/pinned (H, D); grid-following converters under estimation are
/// replaced by swing-equation stand-ins behind the configured coupling
/// reactance. Everything else keeps its true model.
inline DeviceSet fitting_devices(const RunConfig& cfg, const FitContext& fit) {
    DeviceSet d = cfg.devices;
    const auto tune = pipe_detail::tuning(fit);
    for (auto& m : d.machines) {
        auto it = tune.find(m.id);
        if (it == tune.end()) continue;
        if (it->second.has_h) m.h = it->second.h;
        if (it->second.has_d) m.d = it->second.d;
    }
    for (auto& v : d.vsms) {
        auto it = tune.find(v.id);
        if (it == tune.end()) continue;
        if (it->second.has_h) v.h_eq = it->second.h;
        if (it->second.has_d) v.d_eq = it->second.d;
        if (v.h_eq <= 0.0)
            throw ConfigError("fitting model: vsm '" + v.id +
                              "' needs a positive inertia initial value");
    }
    std::vector<GflConverter> keep;
    for (const auto& g : d.gfls) {
        auto it = tune.find(g.id);
        if (it == tune.end()) {
            keep.push_back(g);
            continue;
        }
        VsmConverter stand_in;
        stand_in.id = g.id;
        stand_in.bus = g.bus;
        stand_in.h_eq = it->second.has_h ? it->second.h : 1.0;
        stand_in.d_eq = it->second.has_d ? it->second.d : g.droop;
        stand_in.x_c = cfg.estimation.stand_in_x_c;
        stand_in.p_rat_mw = g.p_rat_mw;
        stand_in.p_set = g.p_set;
        stand_in.q_set = g.q_set;
        stand_in.omega0 = g.omega0;
        d.vsms.push_back(stand_in);
    }
    d.gfls = keep;
    return d;
}

namespace pipe_detail {

/// Schedule overrides must not clobber the parameters under estimation,
/// and morphed stand-ins only understand dispatch updates.
inline std::map<std::string, std::map<std::string, double>>
sanitize_overrides(std::map<std::string, std::map<std::string, double>> ov,
                   const RunConfig& cfg, const FitContext& fit) {
    const auto tune = tuning(fit);
    auto is_gfl = [&](const std::string& id) {
        for (const auto& g : cfg.devices.gfls)
            if (g.id == id) return true;
        return false;
    };
    for (auto& [dev, params] : ov) {
        auto it = tune.find(dev);
        if (it == tune.end()) continue;
        if (is_gfl(dev)) {
            // swing stand-in: keep only the dispatch update
            std::map<std::string, double> kept;
            if (params.count("p_set_pu")) kept["p_set_pu"] = params.at("p_set_pu");
            params = kept;
        } else {
            if (it->second.has_h) {
                params.erase("h_s");
                params.erase("h_eq_s");
            }
            if (it->second.has_d) {
                params.erase("d_pu");
                params.erase("d_eq_pu");
            }
        }
    }
    return ov;
}

} // namespace pipe_detail

/// Reference linearized system of the fitting model at one operating point,
/// with the bandpass dynamics appended when the measurements are filtered.
inline LinearizedSystem
build_reference_system(const RunConfig& cfg, const FitContext& fit, double lambda,
                       const std::map<std::string, std::map<std::string, double>>& overrides,
                       bool filtered, std::span<const std::string> raw_names) {
    AssembleOptions opt;
    opt.lambda = lambda;
    opt.overrides = pipe_detail::sanitize_overrides(overrides, cfg, fit);
    DynamicModel model(cfg.network, fitting_devices(cfg, fit), opt);
    LinearizedSystem sys = linearize(model);
    if (filtered)
        sys = append_filter_states(sys, cfg.measurement.filter.spec(), raw_names);
    return sys;
}

/// Analytic measurement variances of the true configured system.
inline std::map<std::string, double>
analytic_truth_variances(const RunConfig& cfg, bool filtered, double lambda = 0.0) {
    AssembleOptions opt;
    opt.lambda = lambda > 0.0 ? lambda : cfg.scenario.lambda_at(0.0);
    DynamicModel model(cfg.network, cfg.devices, opt);
    LinearizedSystem sys = linearize(model);
    const auto raw = measurement_names(cfg);
    std::vector<std::string> sel = raw;
    if (filtered) {
        sys = append_filter_states(sys, cfg.measurement.filter.spec(), raw);
        sel.clear();
        for (const auto& n : raw) sel.push_back(filtered_name(n));
    }
    return measurement_variances(sys, solve_lyapunov(sys.a, sys.b), sel);
}

/// Simulate one trial of the configured scenario; extra columns (states,
/// noise processes) can be recorded alongside the measurement set.
inline SimTrace simulate_trial(const RunConfig& cfg, int trial,
                               std::vector<std::string> extra = {},
                               double duration_override = -1.0) {
    std::vector<std::string> names = measurement_names(cfg);
    for (auto& e : extra)
        if (std::find(names.begin(), names.end(), e) == names.end())
            names.push_back(std::move(e));
    AssembleOptions mopt;
    mopt.lambda = cfg.scenario.lambda_at(0.0);
    DynamicModel model(cfg.network, cfg.devices, mopt);
    Scenario scen = cfg.scenario;
    if (duration_override > 0.0) scen.duration_s = duration_override;
    SimOptions sopt;
    sopt.h = cfg.integration.h;
    sopt.sample_dt = cfg.measurement.sample_dt;
    sopt.seed = cfg.estimation.seed;
    sopt.trial = trial;
    return simulate(model, scen, names, sopt);
}

/// Per-window estimates from a sampled trace. Windows are grouped by their
/// scenario state and each group gets its own re-linearized reference.
inline std::vector<WindowEstimate>
estimate_trace(const RunConfig& cfg, const SimTrace& trace,
               const std::string& param_set, bool filtered,
               const std::map<std::string, double>& fixed = {}) {
    const auto raw_names = measurement_names(cfg);
    const double window = cfg.measurement.window_s;

    std::vector<std::string> sel;
    WindowedVariance wv;
    if (filtered) {
        const auto spec = cfg.measurement.filter.spec();
        const SimTrace ftr = filter_trace(trace, spec, raw_names, window);
        for (const auto& n : raw_names) sel.push_back(filtered_name(n));
        wv = moving_variance(ftr, sel, window, window);
    } else {
        sel = raw_names;
        wv = moving_variance(trace, raw_names, window, window);
    }

    FitContext fit;
    fit.params = estimation_params(cfg, param_set);
    fit.fixed = fixed;

    const auto events = cfg.scenario.compile();
    std::map<std::string, std::unique_ptr<LinearizedSystem>> cache;
    std::vector<WindowInput> inputs;
    for (size_t w = 0; w < wv.window_start_s.size(); ++w) {
        const double t0 = wv.window_start_s[w];
        const double t1 = t0 + window;
        const double lam = cfg.scenario.lambda_at(t0 + 1e-9);
        std::map<std::string, std::map<std::string, double>> ov;
        bool overlap = false;
        for (const auto& ev : events) {
            if (!ev.is_lambda && ev.t <= t0 + 1e-9)
                ov[ev.sched.device][ev.sched.param] = ev.sched.value;
            if (ev.t > t0 + 1e-9 && ev.t < t1 - 1e-9) overlap = true;
        }
        std::ostringstream key;
        key << lam;
        for (const auto& [dev, ps] : ov)
            for (const auto& [k, v] : ps) key << '|' << dev << ':' << k << '=' << v;
        auto it = cache.find(key.str());
        if (it == cache.end()) {
            auto sys = std::make_unique<LinearizedSystem>(build_reference_system(
                cfg, fit, lam, ov, filtered, raw_names));
            it = cache.emplace(key.str(), std::move(sys)).first;
        }
        WindowInput in;
        in.window_start_s = t0;
        in.sys = it->second.get();
        in.event_overlap = overlap;
        for (size_t c = 0; c < sel.size(); ++c)
            in.measured[sel[c]] = wv.variance[c][w];
        inputs.push_back(std::move(in));
    }

    EstimationProblem base;
    base.sys_ref = inputs.front().sys;
    base.selection = sel;
    base.params = fit.params;
    base.settings = cfg.estimation.optimizer;
    base.measured = inputs.front().measured;
    return estimate_series(base, inputs);
}

/// Inverse-crime mode: the measured variances are the true system's own
/// analytic variances; recovers the truth up to optimizer tolerance.
inline WindowEstimate estimate_analytic(const RunConfig& cfg,
                                        const std::string& param_set,
                                        const std::map<std::string, double>& fixed = {},
                                        double initial_scale = 1.0) {
    const bool filtered = cfg.measurement.filter.enabled;
    const auto raw_names = measurement_names(cfg);
    FitContext fit;
    fit.params = estimation_params(cfg, param_set);
    if (initial_scale != 1.0) {
        for (auto& p : fit.params) {
            const auto t = cfg.estimation.truth.find(p.name);
            if (t != cfg.estimation.truth.end()) p.initial = initial_scale * t->second;
        }
    }
    fit.fixed = fixed;
    const double lam = cfg.scenario.lambda_at(0.0);
    const auto sys = build_reference_system(cfg, fit, lam, {}, filtered, raw_names);
    EstimationProblem prob;
    prob.sys_ref = &sys;
    prob.params = fit.params;
    prob.settings = cfg.estimation.optimizer;
    prob.selection = filtered
                         ? [&] {
                               std::vector<std::string> s;
                               for (const auto& n : raw_names)
                                   s.push_back(filtered_name(n));
                               return s;
                           }()
                         : raw_names;
    prob.measured = analytic_truth_variances(cfg, filtered, lam);
    return estimate(prob);
}

/// Pool per-window estimates into violin statistics, excluding windows that
/// failed or straddle a scenario event.
inline std::map<std::string, ViolinStats>
pool_statistics(const std::vector<std::vector<WindowEstimate>>& trials,
                const std::map<std::string, double>& truth) {
    std::map<std::string, std::vector<double>> values;
    for (const auto& series : trials)
        for (const auto& w : series) {
            if (!w.converged || w.event_overlap) continue;
            for (const auto& [name, v] : w.estimates) values[name].push_back(v);
        }
    std::map<std::string, ViolinStats> out;
    for (auto& [name, v] : values) {
        std::optional<double> t;
        if (auto it = truth.find(name); it != truth.end()) t = it->second;
        out[name] = trial_statistics(std::move(v), t);
    }
    return out;
}

/// Run fn(trial) for trials 0..n-1 on a small thread pool; results ordered
/// by trial index.
template <typename T, typename F>
std::vector<T> parallel_trials(int n, F&& fn, int max_threads = 0) {
    if (max_threads <= 0)
        max_threads = std::max(1u, std::thread::hardware_concurrency());
    std::vector<T> results(n);
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex err_mutex;
    auto worker = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n) return;
            try {
                results[i] = fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const int nt = std::min(max_threads, n);
    pool.reserve(nt);
    for (int i = 0; i < nt; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
    return results;
}

} // namespace ambest
