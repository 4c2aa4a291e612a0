#pragma once

#include "ambest/linearize.hpp"
#include "ambest/rng.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>

namespace ambest {

/// Exact (distribution-preserving) one-step OU transition.
inline double ou_step(double eta, const OuParams& p, double dt, double noise_draw) {
    if (dt <= 0.0) throw ConfigError("ou_step: dt must be > 0");
    const double decay = std::exp(-p.upsilon * dt);
    const double scale =
        p.sigma * std::sqrt((1.0 - decay * decay) / (2.0 * p.upsilon));
    return eta * decay + scale * noise_draw;
}

struct OuPath {
    std::vector<double> values;
    double dt = 0.0;
    std::uint64_t seed = 0;
};

/// Standalone OU path, mostly for statistics tests.
inline OuPath simulate_ou(const OuParams& p, int n, double dt, std::uint64_t seed,
                          std::uint64_t stream = 0, double eta0 = 0.0) {
    CounterRng rng(seed, stream);
    OuPath path;
    path.dt = dt;
    path.seed = seed;
    path.values.resize(n);
    double eta = eta0;
    for (int k = 0; k < n; ++k) {
        eta = ou_step(eta, p, dt, rng.normal(static_cast<std::uint64_t>(k)));
        path.values[k] = eta;
    }
    return path;
}

struct ScheduleEvent {
    double t = 0.0;
    std::string device;
    std::string param; ///< config key, e.g. "h_eq_s"
    double value = 0.0;
};

/// Piecewise-constant operating-point schedule. Lambda points and device
/// schedules are applied between integration steps; each application
/// re-solves the power flow and re-anchors the equilibrium.
struct Scenario {
    double duration_s = 900.0;
    std::vector<std::pair<double, double>> lambda_profile; ///< (t, lambda), sorted
    double setpoint_update_s = 900.0;
    std::vector<ScheduleEvent> device_schedules;
    std::string tag;

    struct Event {
        double t = 0.0;
        bool is_lambda = false;
        double lambda = 1.0;
        ScheduleEvent sched;
    };

    double lambda_at(double t) const {
        double lam = 1.0;
        for (const auto& [tt, ll] : lambda_profile) {
            if (tt <= t) lam = ll;
            else break;
        }
        return lam;
    }

    std::vector<Event> compile() const {
        std::vector<Event> ev;
        for (const auto& [t, lam] : lambda_profile) {
            if (t <= 0.0) continue; // applied at model build time
            Event e;
            e.t = t;
            e.is_lambda = true;
            e.lambda = lam;
            ev.push_back(e);
        }
        for (const auto& s : sched_sorted()) {
            if (s.t <= 0.0) continue;
            Event e;
            e.t = s.t;
            e.sched = s;
            ev.push_back(e);
        }
        std::stable_sort(ev.begin(), ev.end(),
                         [](const Event& a, const Event& b) { return a.t < b.t; });
        return ev;
    }

    std::vector<double> event_times() const {
        std::vector<double> ts;
        for (const auto& e : compile()) ts.push_back(e.t);
        return ts;
    }

private:
    std::vector<ScheduleEvent> sched_sorted() const {
        auto s = device_schedules;
        std::stable_sort(s.begin(), s.end(),
                         [](const ScheduleEvent& a, const ScheduleEvent& b) {
                             return a.t < b.t;
                         });
        return s;
    }
};

/// Uniformly sampled series of selected quantities.
struct SimTrace {
    std::vector<double> t;
    std::vector<std::string> names;
    std::vector<std::vector<double>> cols; ///< one vector per name
    double sample_dt = 0.025;
    std::string scenario_tag;
    double valid_from_s = 0.0; ///< filter warm-up watermark

    int col_index(const std::string& name) const {
        for (int i = 0; i < static_cast<int>(names.size()); ++i)
            if (names[i] == name) return i;
        throw ConfigError("trace has no column '" + name + "'");
    }
    const std::vector<double>& col(const std::string& name) const {
        return cols[col_index(name)];
    }
};

struct SimOptions {
    double h = 0.005;        ///< nominal integrator step, s
    double sample_dt = 0.025;
    std::uint64_t seed = 1;
    int trial = 0;
    double newton_tol = 1e-8;
    int max_newton = 8;
    double h_min = 1e-4;
};

/// One implicit-trapezoid step of the DAE with the OU inputs held at their
/// endpoint values. The iteration matrix is factored lazily and reused
/// until a step fails or the model/step changes.
class TrapezoidStepper {
public:
    explicit TrapezoidStepper(const SystemModel& model) : model_(&model) {}

    void rebind(const SystemModel& model) {
        model_ = &model;
        factored_ = false;
    }

    void refactor(const Vec& x, const Vec& z, double h) {
        const int ns = model_->n_states();
        const int na = model_->n_algs();
        const auto jac = jacobians_at(*model_, x, z);
        Mat big(ns + na, ns + na);
        big.topLeftCorner(ns, ns) =
            Mat(model_->lambda_diag().asDiagonal()) - 0.5 * h * jac.f_x;
        big.topRightCorner(ns, na) = -0.5 * h * jac.f_z;
        big.bottomLeftCorner(na, ns) = jac.g_x;
        big.bottomRightCorner(na, na) = jac.g_z;
        lu_.compute(big);
        h_fact_ = h;
        factored_ = true;
    }

    /// Advance (x, z) over h. Returns false when Newton stalls even after a
    /// refactor at the current point.
    bool step(Vec& x, Vec& z, const Vec& eta0, const Vec& eta1, double h,
              double tol = 1e-8, int max_iter = 8) {
        const int ns = model_->n_states();
        const int na = model_->n_algs();
        if (!factored_ || h != h_fact_) refactor(x, z, h);

        Vec f0(ns);
        model_->eval_f(x, z, f0);
        Vec x1 = x, z1 = z;
        Vec f1(ns), g1(na), r(ns + na);
        bool refactored_here = false;
        for (int it = 0; it <= max_iter; ++it) {
            model_->eval_f(x1, z1, f1);
            model_->eval_g(x1, z1, eta1, g1);
            r.head(ns) = model_->lambda_diag().cwiseProduct(x1 - x) -
                         0.5 * h * (f0 + f1);
            r.tail(na) = g1;
            const double res = r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
            if (!std::isfinite(res)) return false;
            if (res <= tol) {
                x = x1;
                z = z1;
                return true;
            }
            if (it == max_iter) {
                if (refactored_here) return false;
                refactor(x, z, h);
                refactored_here = true;
                x1 = x;
                z1 = z;
                it = -1;
                continue;
            }
            const Vec dx = lu_.solve(-r);
            x1 += dx.head(ns);
            z1 += dx.tail(na);
        }
        (void)eta0;
        return false;
    }

private:
    const SystemModel* model_;
    Eigen::PartialPivLU<Mat> lu_;
    double h_fact_ = -1.0;
    bool factored_ = false;
};

/// Newton re-solve of the algebraic equations for fixed states and noise;
/// used after scenario discontinuities.
inline void solve_algebraic(const SystemModel& model, const Vec& x, const Vec& eta,
                            Vec& z, double tol = 1e-10, int max_iter = 20) {
    const int na = model.n_algs();
    if (na == 0) return;
    Vec g(na);
    for (int it = 0; it <= max_iter; ++it) {
        model.eval_g(x, z, eta, g);
        if (g.cwiseAbs().maxCoeff() <= tol) return;
        if (it == max_iter) break;
        const auto jac = jacobians_at(model, x, z);
        Eigen::PartialPivLU<Mat> lu(jac.g_z);
        z -= lu.solve(g);
    }
    throw NumericalError("algebraic re-initialization did not converge");
}

namespace detail {

struct RecordSlot {
    enum class Kind { state, alg, noise } kind;
    int idx;
};

inline std::vector<RecordSlot> resolve_record(const SystemModel& m,
                                              std::span<const std::string> names) {
    std::vector<RecordSlot> slots;
    for (const auto& name : names) {
        bool found = false;
        const auto& sn = m.state_names();
        for (int i = 0; i < static_cast<int>(sn.size()); ++i)
            if (sn[i] == name) {
                slots.push_back({RecordSlot::Kind::state, i});
                found = true;
                break;
            }
        if (found) continue;
        const auto& an = m.alg_names();
        for (int i = 0; i < static_cast<int>(an.size()); ++i)
            if (an[i] == name) {
                slots.push_back({RecordSlot::Kind::alg, i});
                found = true;
                break;
            }
        if (found) continue;
        const auto& nn = m.noise_names();
        for (int i = 0; i < static_cast<int>(nn.size()); ++i)
            if (nn[i] == name) {
                slots.push_back({RecordSlot::Kind::noise, i});
                found = true;
                break;
            }
        if (!found)
            throw ConfigError("record name '" + name + "' is not a state, "
                              "algebraic variable or noise process");
    }
    return slots;
}

} // namespace detail

/// Apply one scenario event: rebuilds the model at the event's operating
/// point (power flow re-solved, references re-anchored). The caller remaps
/// the integration state.
inline DynamicModel apply_scenario_event(const DynamicModel& model,
                                         const Scenario::Event& ev) {
    AssembleOptions opt = model.options();
    if (ev.is_lambda) {
        opt.lambda = ev.lambda;
    } else {
        opt.overrides[ev.sched.device][ev.sched.param] = ev.sched.value;
    }
    return DynamicModel(model.net(), model.base_devices(), opt);
}

/// Carry dynamic/noise state across a model rebuild by name; fresh states
/// start at the new model's equilibrium values.
inline void map_states(const SystemModel& from, const Vec& x_from, const Vec& eta_from,
                       const SystemModel& to, Vec& x_to, Vec& eta_to) {
    x_to = to.state_eq();
    const auto& fn = from.state_names();
    for (int i = 0; i < static_cast<int>(to.state_names().size()); ++i) {
        const auto& name = to.state_names()[i];
        for (int jj = 0; jj < static_cast<int>(fn.size()); ++jj)
            if (fn[jj] == name) {
                x_to(i) = x_from(jj);
                break;
            }
    }
    eta_to = Vec::Zero(to.n_noise());
    const auto& fz = from.noise_names();
    for (int i = 0; i < static_cast<int>(to.noise_names().size()); ++i) {
        const auto& name = to.noise_names()[i];
        for (int jj = 0; jj < static_cast<int>(fz.size()); ++jj)
            if (fz[jj] == name) {
                eta_to(i) = eta_from(jj);
                break;
            }
    }
}

namespace detail {

/// Shared integration loop. Scenario events are only honored when the
/// model is a DynamicModel (dyn != nullptr); plain SystemModel runs are
/// event-free.
inline SimTrace simulate_core(const SystemModel& model0, const DynamicModel* dyn,
                              const Scenario& scenario,
                              std::span<const std::string> record,
                              const SimOptions& opt) {
    if (opt.h <= 0.0 || opt.sample_dt <= 0.0)
        throw ConfigError("simulate: h and sample_dt must be > 0");
    const int per_sample = std::max(1, static_cast<int>(std::round(opt.sample_dt / opt.h)));
    const double h_nom = opt.sample_dt / per_sample;
    const long n_samples = static_cast<long>(std::floor(scenario.duration_s / opt.sample_dt + 0.5));

    std::deque<DynamicModel> owned; // stable element addresses on push_back
    const SystemModel* model = &model0;
    const DynamicModel* dynmodel = dyn;
    auto events = scenario.compile();
    if (dynmodel == nullptr && !events.empty())
        throw ConfigError("simulate: scenario events need a grid model");
    size_t next_ev = 0;

    Vec x = model->state_eq();
    Vec z = model->alg_eq();
    Vec eta = Vec::Zero(model->n_noise());

    auto slots = detail::resolve_record(*model, record);
    SimTrace trace;
    trace.sample_dt = opt.sample_dt;
    trace.scenario_tag = scenario.tag;
    trace.names.assign(record.begin(), record.end());
    trace.cols.assign(record.size(), {});
    trace.t.reserve(n_samples + 1);
    for (auto& c : trace.cols) c.reserve(n_samples + 1);

    CounterRng rng(opt.seed, static_cast<std::uint64_t>(opt.trial));
    std::uint64_t draw = 0;
    TrapezoidStepper stepper(*model);

    auto emit = [&](double t) {
        trace.t.push_back(t);
        for (size_t i = 0; i < slots.size(); ++i) {
            const auto& s = slots[i];
            double val = 0.0;
            switch (s.kind) {
            case detail::RecordSlot::Kind::state: val = x(s.idx); break;
            case detail::RecordSlot::Kind::alg: val = z(s.idx); break;
            case detail::RecordSlot::Kind::noise: val = eta(s.idx); break;
            }
            trace.cols[i].push_back(val);
        }
    };

    // advance over [t, t+h]; recursive halving on Newton failure
    std::function<void(double, double, int)> advance = [&](double t, double h, int depth) {
        if (h < opt.h_min)
            throw NumericalError("integration stalled at t = " + std::to_string(t) +
                                 " s (step floor reached)");
        Vec eta1(eta.size());
        const int nz_loc = static_cast<int>(eta.size());
        for (int zi = 0; zi < nz_loc; ++zi)
            eta1(zi) = ou_step(eta(zi), model->ou()[zi], h, rng.normal(draw++));
        Vec xs = x, zs = z;
        if (stepper.step(xs, zs, eta, eta1, h, opt.newton_tol, opt.max_newton)) {
            x = xs;
            z = zs;
            eta = eta1;
            return;
        }
        if (depth > 12)
            throw NumericalError("integration stalled at t = " + std::to_string(t) + " s");
        advance(t, h / 2.0, depth + 1);
        advance(t + h / 2.0, h / 2.0, depth + 1);
    };

    emit(0.0);
    for (long s = 0; s < n_samples; ++s) {
        const double t_block = s * opt.sample_dt;
        for (int k = 0; k < per_sample; ++k) {
            const double t = t_block + k * h_nom;
            while (next_ev < events.size() && events[next_ev].t <= t + 1e-12) {
                owned.push_back(apply_scenario_event(*model, events[next_ev]));
                const DynamicModel& next = owned.back();
                Vec x_new, eta_new;
                map_states(*model, x, eta, next, x_new, eta_new);
                Vec z_new = next.alg_eq();
                // carry the current voltages/angles as the starting guess
                for (int i = 0; i < std::min<int>(z_new.size(), z.size()); ++i)
                    z_new(i) = z(i);
                solve_algebraic(next, x_new, eta_new, z_new, 1e-10, 30);
                model = &next;
                x = x_new;
                z = z_new;
                eta = eta_new;
                slots = detail::resolve_record(*model, record);
                stepper.rebind(*model);
                ++next_ev;
            }
            advance(t, h_nom, 0);
        }
        emit((s + 1) * opt.sample_dt);
    }
    return trace;
}

} // namespace ambest
