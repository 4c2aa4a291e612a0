#pragma once

#include "ambest/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace ambest {

struct OptimSettings {
    int max_iter = 200;
    double cost_tol = 1e-12;
    double step_tol = 1e-10;
    double fd_rel_step = 1e-4;
    double param_floor = 1e-4; ///< numerical floor standing in for the zero bound
};

struct ParamSpec {
    std::string name; ///< "H:<device>" or "D:<device>"
    double initial = 1.0;
    double reference = 0.0; ///< normalization value; defaults to initial
    double lower = 0.0;
    double upper = 100.0;
};

/// One inverse problem: fit the selected parameter subset so the model's
/// analytic variances match the measured ones. The cost is the normalized
/// squared mismatch summed over the measurement set; the normalization
/// denominators are the variances at the reference parameter values and
/// stay fixed during a solve.
struct EstimationProblem {
    const LinearizedSystem* sys_ref = nullptr;
    std::vector<std::string> selection;
    std::map<std::string, double> measured; ///< name -> sigma_hat^2
    std::vector<ParamSpec> params;
    OptimSettings settings;

    void validate() const {
        if (sys_ref == nullptr) throw ConfigError("estimation: missing reference system");
        if (params.empty()) throw ConfigError("estimation: empty parameter set");
        if (static_cast<int>(selection.size()) < static_cast<int>(params.size()))
            throw ConfigError("estimation: fewer measurements than parameters");
        for (const auto& name : selection)
            if (!measured.count(name))
                throw ConfigError("estimation: no measured variance for '" + name + "'");
        for (const auto& p : params) {
            if (p.reference < 0.0)
                throw ConfigError("estimation: reference value must be positive");
            if (p.initial <= 0.0)
                throw ConfigError("estimation: initial value must be positive");
        }
    }
};

struct WindowEstimate {
    double window_start_s = 0.0;
    std::map<std::string, double> estimates;
    double cost = std::numeric_limits<double>::infinity();
    Vec residual;
    int iterations = 0;
    bool converged = false;
    bool bound_active = false;
    bool identifiable = true;
    bool event_overlap = false; ///< window straddles a scenario event
};

/// Violin summary of one parameter across trials/windows. Quartiles use
/// linear interpolation on the order statistics; adjacent values are the
/// extreme observations inside quartile +/- 1.5*IQR.
struct ViolinStats {
    int n = 0;
    double median = 0, q1 = 0, q3 = 0, iqr = 0;
    double lo_adj = 0, hi_adj = 0;
    double eps_pct = -1.0; ///< 100*|median-truth|/truth when truth given
};

namespace detail {

inline double quantile_sorted(const std::vector<double>& x, double p) {
    const size_t n = x.size();
    if (n == 1) return x[0];
    const double pos = p * static_cast<double>(n - 1);
    const size_t lo = static_cast<size_t>(std::floor(pos));
    const size_t hi = std::min(lo + 1, n - 1);
    const double w = pos - static_cast<double>(lo);
    return (1.0 - w) * x[lo] + w * x[hi];
}

} // namespace detail

inline ViolinStats trial_statistics(std::vector<double> values,
                                    std::optional<double> truth = std::nullopt) {
    if (values.size() < 4)
        throw ConfigError("trial_statistics: need at least 4 samples");
    std::sort(values.begin(), values.end());
    ViolinStats s;
    s.n = static_cast<int>(values.size());
    s.median = detail::quantile_sorted(values, 0.5);
    s.q1 = detail::quantile_sorted(values, 0.25);
    s.q3 = detail::quantile_sorted(values, 0.75);
    s.iqr = s.q3 - s.q1;
    const double hi_fence = s.q3 + 1.5 * s.iqr;
    const double lo_fence = s.q1 - 1.5 * s.iqr;
    s.hi_adj = values.front();
    s.lo_adj = values.back();
    for (double v : values)
        if (v <= hi_fence) s.hi_adj = v; // sorted: ends at the largest <= fence
    for (auto it = values.rbegin(); it != values.rend(); ++it)
        if (*it >= lo_fence) s.lo_adj = *it; // ends at the smallest >= fence
    if (truth && *truth != 0.0)
        s.eps_pct = 100.0 * std::abs(s.median - *truth) / std::abs(*truth);
    return s;
}

namespace detail {

struct CostEval {
    double cost = std::numeric_limits<double>::infinity();
    Vec residual;
    bool ok = false;
};

class VarianceCost {
public:
    VarianceCost(const EstimationProblem& p) : prob_(p) {
        // fixed normalization from the reference parameter values
        std::map<std::string, double> ref_params;
        for (const auto& ps : prob_.params)
            ref_params[ps.name] = ps.reference > 0.0 ? ps.reference : ps.initial;
        const auto ref_sys = update_lambda(*prob_.sys_ref, ref_params);
        const auto ref_var = measurement_variances(
            ref_sys, solve_lyapunov(ref_sys.a, ref_sys.b), prob_.selection);
        for (const auto& name : prob_.selection) {
            const double rv = ref_var.at(name);
            if (rv <= 0.0)
                throw NumericalError("estimation: reference variance of '" + name +
                                     "' is zero; measurement carries no signal");
            ref_.push_back(rv);
            meas_.push_back(prob_.measured.at(name));
        }
    }

    CostEval operator()(const std::map<std::string, double>& params) const {
        CostEval ev;
        try {
            const auto sys = update_lambda(*prob_.sys_ref, params);
            const auto var = measurement_variances(
                sys, solve_lyapunov(sys.a, sys.b), prob_.selection);
            ev.residual.resize(static_cast<int>(prob_.selection.size()));
            for (size_t i = 0; i < prob_.selection.size(); ++i)
                ev.residual(static_cast<int>(i)) =
                    (meas_[i] - var.at(prob_.selection[i])) / ref_[i];
            ev.cost = ev.residual.squaredNorm();
            ev.ok = true;
        } catch (const NumericalError&) {
            // candidate destabilized the drift: infinite-cost sentinel
            ev.ok = false;
        }
        return ev;
    }

private:
    const EstimationProblem& prob_;
    std::vector<double> ref_;
    std::vector<double> meas_;
};

} // namespace detail

/// Cost and residual vector at the given parameter values (E:CF form).
inline std::pair<double, Vec> cost(const EstimationProblem& problem,
                                   const std::map<std::string, double>& params) {
    problem.validate();
    detail::VarianceCost fn(problem);
    const auto ev = fn(params);
    if (!ev.ok)
        throw NumericalError("cost: candidate parameters destabilize the system");
    return {ev.cost, ev.residual};
}

/// Bound-constrained Levenberg-Marquardt on the normalized variance
/// mismatch. Positivity is handled by optimizing u = log(p); the upper
/// bound is a hard clamp. Non-convergence returns the last iterate with
/// the converged flag cleared.
inline WindowEstimate estimate(const EstimationProblem& problem) {
    problem.validate();
    const auto& set = problem.settings;
    detail::VarianceCost fn(problem);
    const int np = static_cast<int>(problem.params.size());
    const int nm = static_cast<int>(problem.selection.size());

    Vec u(np), lo_u(np), hi_u(np);
    for (int i = 0; i < np; ++i) {
        const auto& ps = problem.params[i];
        const double floor = std::max(ps.lower, set.param_floor);
        lo_u(i) = std::log(floor);
        hi_u(i) = std::log(std::max(ps.upper, floor * 2.0));
        u(i) = std::clamp(std::log(ps.initial), lo_u(i), hi_u(i));
    }
    auto params_of = [&](const Vec& uu) {
        std::map<std::string, double> p;
        for (int i = 0; i < np; ++i)
            p[problem.params[i].name] = std::exp(uu(i));
        return p;
    };

    WindowEstimate result;
    auto cur = fn(params_of(u));
    if (!cur.ok)
        throw NumericalError("estimate: initial parameters destabilize the system");
    result.cost = cur.cost;
    result.residual = cur.residual;

    // residual jacobian wrt u by central differences on p
    Mat jac(nm, np);
    auto fd_jacobian = [&](const Vec& uu) {
        for (int jcol = 0; jcol < np; ++jcol) {
            const double p0 = std::exp(uu(jcol));
            const double dp = set.fd_rel_step * std::max(1.0, std::abs(p0));
            auto pp = params_of(uu);
            pp[problem.params[jcol].name] = p0 + dp;
            const auto rp = fn(pp);
            pp[problem.params[jcol].name] = std::max(p0 - dp, 1e-12);
            const auto rm = fn(pp);
            if (!rp.ok || !rm.ok) return false;
            jac.col(jcol) = (rp.residual - rm.residual) /
                            ((p0 + dp) - std::max(p0 - dp, 1e-12)) * p0;
        }
        return true;
    };

    double mu = -1.0; // initialized from the first jacobian
    int iter = 0;
    bool have_jac = false;
    for (; iter < set.max_iter; ++iter) {
        if (cur.cost <= 1e-24) { result.converged = true; break; }
        if (!fd_jacobian(u)) break;
        have_jac = true;

        const Mat jtj = jac.transpose() * jac;
        const Vec g = jac.transpose() * cur.residual;
        if (g.cwiseAbs().maxCoeff() < 1e-16) { result.converged = true; break; }
        if (mu < 0.0) mu = 1e-3 * std::max(jtj.diagonal().maxCoeff(), 1e-12);

        bool stepped = false;
        for (int inner = 0; inner < 25; ++inner) {
            Mat lhs = jtj + mu * Mat::Identity(np, np);
            const Vec du = lhs.ldlt().solve(-g);
            Vec u_new = u + du;
            for (int i = 0; i < np; ++i) u_new(i) = std::clamp(u_new(i), lo_u(i), hi_u(i));
            const auto trial = fn(params_of(u_new));
            if (trial.ok && trial.cost < cur.cost) {
                const double dcost = cur.cost - trial.cost;
                const double dstep = (u_new - u).cwiseAbs().maxCoeff();
                u = u_new;
                cur = trial;
                mu = std::max(mu / 3.0, 1e-14);
                stepped = true;
                if (dcost <= set.cost_tol * std::max(1.0, cur.cost) || dstep <= set.step_tol)
                    result.converged = true;
                break;
            }
            mu *= 4.0;
            if (mu > 1e16) break;
        }
        if (!stepped || result.converged) {
            if (!stepped) result.converged = (cur.cost <= 1e-18) || result.converged;
            break;
        }
    }

    result.iterations = iter;
    result.cost = cur.cost;
    result.residual = cur.residual;
    for (int i = 0; i < np; ++i) {
        const double p = std::exp(u(i));
        result.estimates[problem.params[i].name] = p;
        if (u(i) <= lo_u(i) + 1e-12 || u(i) >= hi_u(i) - 1e-12) result.bound_active = true;
    }
    // local identifiability: Gauss-Newton hessian must be positive definite
    if (!have_jac) have_jac = fd_jacobian(u);
    if (have_jac) {
        const Mat jtj = jac.transpose() * jac;
        Eigen::SelfAdjointEigenSolver<Mat> es(jtj);
        result.identifiable = es.eigenvalues().minCoeff() >
                              1e-12 * std::max(1.0, es.eigenvalues().maxCoeff());
    } else {
        result.identifiable = false;
    }
    return result;
}

/// Per-window estimation over a series with warm starts; the caller
/// supplies the (possibly re-linearized) reference system per window.
struct WindowInput {
    double window_start_s = 0.0;
    std::map<std::string, double> measured;
    const LinearizedSystem* sys = nullptr; ///< nullptr: reuse problem.sys_ref
    bool event_overlap = false;
};

inline std::vector<WindowEstimate>
estimate_series(EstimationProblem problem, const std::vector<WindowInput>& windows) {
    if (windows.empty()) throw ConfigError("estimate_series: no windows");
    std::vector<WindowEstimate> out;
    // pin the normalization to the series' original initial guesses before
    // warm starts begin shifting the per-window initial values
    std::vector<ParamSpec> warm = problem.params;
    for (auto& ps : warm)
        if (ps.reference <= 0.0) ps.reference = ps.initial;
    for (const auto& win : windows) {
        EstimationProblem p = problem;
        p.params = warm;
        p.measured = win.measured;
        if (win.sys != nullptr) p.sys_ref = win.sys;
        WindowEstimate est;
        try {
            est = estimate(p);
        } catch (const NumericalError&) {
            est.converged = false;
            est.cost = std::numeric_limits<double>::infinity();
            for (const auto& ps : p.params) est.estimates[ps.name] = ps.initial;
        }
        est.window_start_s = win.window_start_s;
        est.event_overlap = win.event_overlap;
        out.push_back(est);
        if (est.converged) {
            for (auto& ps : warm)
                ps.initial = std::max(est.estimates.at(ps.name),
                                      problem.settings.param_floor);
            // normalization reference stays at the series' original values
        }
    }
    return out;
}

} // namespace ambest
