#pragma once

#include "ambest/common.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace ambest {

enum class BusKind { slack, pv, pq };

struct Bus {
    std::string id;
    double base_kv = 1.0;
    BusKind kind = BusKind::pq;
    double v_set = 1.0; ///< pu setpoint, meaningful for pv/slack
    double p_inj = 0.0; ///< pu scheduled net active injection
    double q_inj = 0.0; ///< pu scheduled net reactive injection
};

struct Branch {
    std::string id; ///< defaults to "<from>-<to>"
    std::string from, to;
    double r = 0.0;
    double x = 0.0;
    double b_sh = 0.0; ///< total shunt susceptance (half at each end)
    double tap = 1.0;  ///< from-side ratio, 1 for lines
    bool on = true;
};

/// Static grid description. Read-only after construction; admittance and
/// power flow are pure functions of it.
struct Network {
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    double s_base = 100.0; ///< MVA
    double f_base = 60.0;  ///< Hz

    double omega_base() const { return 2.0 * kPi * f_base; }

    int bus_index(const std::string& id) const {
        for (int i = 0; i < static_cast<int>(buses.size()); ++i)
            if (buses[i].id == id) return i;
        throw ConfigError("unknown bus id '" + id + "'");
    }

    int slack_index() const {
        for (int i = 0; i < static_cast<int>(buses.size()); ++i)
            if (buses[i].kind == BusKind::slack) return i;
        throw ConfigError("network has no slack bus");
    }

    /// Structural checks: unique ids, one slack, sane branch data,
    /// connectivity over in-service branches.
    void validate() const {
        if (buses.empty()) throw ConfigError("network has no buses");
        std::set<std::string> ids;
        int n_slack = 0;
        for (const auto& b : buses) {
            if (!ids.insert(b.id).second)
                throw ConfigError("duplicate bus id '" + b.id + "'");
            if (b.base_kv <= 0.0)
                throw ConfigError("bus '" + b.id + "': base_kv must be > 0");
            if ((b.kind != BusKind::pq) && b.v_set <= 0.0)
                throw ConfigError("bus '" + b.id + "': v_set must be > 0");
            if (b.kind == BusKind::slack) ++n_slack;
        }
        if (n_slack != 1)
            throw ConfigError("expected exactly one slack bus, found " +
                              std::to_string(n_slack));
        std::set<std::string> brids;
        for (const auto& br : branches) {
            if (!brids.insert(br.id.empty() ? br.from + "-" + br.to : br.id).second)
                throw ConfigError("duplicate branch id '" +
                                  (br.id.empty() ? br.from + "-" + br.to : br.id) + "'");
            if (br.from == br.to)
                throw ConfigError("branch '" + br.id + "': from == to");
            if (std::abs(br.x) < 1e-12 && std::abs(br.r) < 1e-12)
                throw ConfigError("branch '" + br.id + "': zero impedance");
            if (br.x == 0.0)
                throw ConfigError("branch '" + br.id + "': x must be nonzero");
            if (br.tap <= 0.0)
                throw ConfigError("branch '" + br.id + "': tap must be > 0");
            bus_index(br.from);
            bus_index(br.to);
        }
        // connectivity over live branches
        const int n = static_cast<int>(buses.size());
        if (n > 1) {
            std::vector<int> seen(n, 0);
            std::vector<int> stack{0};
            seen[0] = 1;
            while (!stack.empty()) {
                int u = stack.back();
                stack.pop_back();
                for (const auto& br : branches) {
                    if (!br.on) continue;
                    int f = bus_index(br.from), t = bus_index(br.to);
                    int v = (f == u) ? t : (t == u ? f : -1);
                    if (v >= 0 && !seen[v]) {
                        seen[v] = 1;
                        stack.push_back(v);
                    }
                }
            }
            for (int i = 0; i < n; ++i)
                if (!seen[i])
                    throw ConfigError("bus '" + buses[i].id +
                                      "' is disconnected from the slack island");
        }
    }
};

/// Bus admittance matrix from the branch pi-models. Symmetric whenever all
/// taps are 1.
inline CMat build_admittance(const Network& net) {
    net.validate();
    const int n = static_cast<int>(net.buses.size());
    CMat y = CMat::Zero(n, n);
    for (const auto& br : net.branches) {
        if (!br.on) continue;
        const int f = net.bus_index(br.from);
        const int t = net.bus_index(br.to);
        const cplx zs(br.r, br.x);
        const cplx ys = 1.0 / zs;
        const cplx ysh(0.0, br.b_sh / 2.0);
        const double tau = br.tap;
        y(f, f) += (ys + ysh) / (tau * tau);
        y(t, t) += ys + ysh;
        y(f, t) -= ys / tau;
        y(t, f) -= ys / tau;
    }
    return y;
}

struct PowerFlowSolution {
    Vec v;     ///< pu magnitudes
    Vec theta; ///< rad, slack at 0
    Vec p, q;  ///< pu net injections at every bus
    bool converged = false;
    int iterations = 0;
    double max_mismatch = 0.0;
    std::string diagnostic;
};

/// Voltage-exponent load attached to a bus; contributes
/// p0*(v/v0)^gamma to the consumed power inside the mismatch equations.
struct VoltDepLoad {
    int bus = 0;
    double p0 = 0.0, q0 = 0.0;
    double v0 = 1.0;
    double gamma = 0.0;
};

struct PowerFlowOptions {
    double tol = 1e-8;
    int max_iter = 50;
    const PowerFlowSolution* warm = nullptr;
    std::vector<VoltDepLoad> vdep_loads; ///< only needed when gamma != 0
};

namespace detail {

inline void injections(const CMat& y, const Vec& v, const Vec& th, Vec& p, Vec& q) {
    const int n = static_cast<int>(v.size());
    CVec vc(n);
    for (int i = 0; i < n; ++i) vc(i) = std::polar(v(i), th(i));
    CVec s = vc.array() * (y * vc).conjugate().array();
    p = s.real();
    q = s.imag();
}

} // namespace detail

/// Newton-Raphson power flow in polar coordinates, flat start unless a warm
/// start is supplied. Scheduled injections come from Bus::p_inj/q_inj plus
/// the voltage-dependent loads in the options.
inline PowerFlowSolution solve_power_flow(const Network& net,
                                          const PowerFlowOptions& opt = {}) {
    net.validate();
    const int n = static_cast<int>(net.buses.size());
    const CMat y = build_admittance(net);
    const Mat g = y.real(), b = y.imag();

    PowerFlowSolution sol;
    sol.v = Vec::Ones(n);
    sol.theta = Vec::Zero(n);
    for (int i = 0; i < n; ++i)
        if (net.buses[i].kind != BusKind::pq) sol.v(i) = net.buses[i].v_set;
    if (opt.warm != nullptr && opt.warm->v.size() == n) {
        sol.v = opt.warm->v;
        sol.theta = opt.warm->theta;
    }

    // unknown ordering: theta for all non-slack, then v for pq
    std::vector<int> th_idx, v_idx;
    for (int i = 0; i < n; ++i) {
        if (net.buses[i].kind != BusKind::slack) th_idx.push_back(i);
        if (net.buses[i].kind == BusKind::pq) v_idx.push_back(i);
    }
    const int m = static_cast<int>(th_idx.size() + v_idx.size());

    Vec p_calc(n), q_calc(n);
    auto sched_p = [&](int i, double vi) {
        double p = net.buses[i].p_inj;
        for (const auto& l : opt.vdep_loads)
            if (l.bus == i) p -= l.p0 * std::pow(vi / l.v0, l.gamma);
        return p;
    };
    auto sched_q = [&](int i, double vi) {
        double q = net.buses[i].q_inj;
        for (const auto& l : opt.vdep_loads)
            if (l.bus == i) q -= l.q0 * std::pow(vi / l.v0, l.gamma);
        return q;
    };

    for (int iter = 0; iter <= opt.max_iter; ++iter) {
        detail::injections(y, sol.v, sol.theta, p_calc, q_calc);
        Vec f(m);
        int k = 0;
        for (int i : th_idx) f(k++) = sched_p(i, sol.v(i)) - p_calc(i);
        for (int i : v_idx) f(k++) = sched_q(i, sol.v(i)) - q_calc(i);
        sol.max_mismatch = (m > 0) ? f.cwiseAbs().maxCoeff() : 0.0;
        sol.iterations = iter;
        if (sol.max_mismatch <= opt.tol) {
            sol.converged = true;
            break;
        }
        if (iter == opt.max_iter) break;

        // standard polar jacobian d(P,Q)/d(theta,v)
        Mat jac = Mat::Zero(m, m);
        const int nth = static_cast<int>(th_idx.size());
        auto dtheta = [&](int i, int j) {
            if (i == j) return -q_calc(i) - b(i, i) * sol.v(i) * sol.v(i);
            const double tij = sol.theta(i) - sol.theta(j);
            return sol.v(i) * sol.v(j) *
                   (g(i, j) * std::sin(tij) - b(i, j) * std::cos(tij));
        };
        auto dv_p = [&](int i, int j) {
            if (i == j) return p_calc(i) / sol.v(i) + g(i, i) * sol.v(i);
            const double tij = sol.theta(i) - sol.theta(j);
            return sol.v(i) * (g(i, j) * std::cos(tij) + b(i, j) * std::sin(tij));
        };
        auto dtheta_q = [&](int i, int j) {
            if (i == j) return p_calc(i) - g(i, i) * sol.v(i) * sol.v(i);
            const double tij = sol.theta(i) - sol.theta(j);
            return -sol.v(i) * sol.v(j) *
                   (g(i, j) * std::cos(tij) + b(i, j) * std::sin(tij));
        };
        auto dv_q = [&](int i, int j) {
            if (i == j) return q_calc(i) / sol.v(i) - b(i, i) * sol.v(i);
            const double tij = sol.theta(i) - sol.theta(j);
            return sol.v(i) * (g(i, j) * std::sin(tij) - b(i, j) * std::cos(tij));
        };
        for (int r = 0; r < nth; ++r) {
            for (int c = 0; c < nth; ++c) jac(r, c) = dtheta(th_idx[r], th_idx[c]);
            for (int c = 0; c < static_cast<int>(v_idx.size()); ++c)
                jac(r, nth + c) = dv_p(th_idx[r], v_idx[c]);
        }
        for (int r = 0; r < static_cast<int>(v_idx.size()); ++r) {
            for (int c = 0; c < nth; ++c)
                jac(nth + r, c) = dtheta_q(v_idx[r], th_idx[c]);
            for (int c = 0; c < static_cast<int>(v_idx.size()); ++c)
                jac(nth + r, nth + c) = dv_q(v_idx[r], v_idx[c]);
        }
        // voltage-dependent loads sit on the mismatch side: d(-P_load)/dv
        for (const auto& l : opt.vdep_loads) {
            if (l.gamma == 0.0) continue;
            for (int c = 0; c < static_cast<int>(v_idx.size()); ++c) {
                if (v_idx[c] != l.bus) continue;
                const double vi = sol.v(l.bus);
                const double dp = l.gamma * l.p0 * std::pow(vi / l.v0, l.gamma) / vi;
                const double dq = l.gamma * l.q0 * std::pow(vi / l.v0, l.gamma) / vi;
                auto row_of_th = std::find(th_idx.begin(), th_idx.end(), l.bus);
                if (row_of_th != th_idx.end())
                    jac(static_cast<int>(row_of_th - th_idx.begin()), nth + c) += dp;
                jac(nth + c, nth + c) += dq;
            }
        }

        Eigen::FullPivLU<Mat> lu(jac);
        if (lu.rank() < m) {
            const int bad = static_cast<int>(lu.permutationQ().indices()(m - 1));
            const bool is_v = bad >= nth;
            const int bus = is_v ? v_idx[bad - nth] : th_idx[bad];
            sol.diagnostic = "singular power-flow jacobian near bus '" +
                             net.buses[bus].id + "' (" + (is_v ? "v" : "theta") +
                             " column)";
            return sol;
        }
        Vec dx = lu.solve(f);
        k = 0;
        for (int i : th_idx) sol.theta(i) += dx(k++);
        for (int i : v_idx) sol.v(i) += dx(k++);
    }

    detail::injections(y, sol.v, sol.theta, sol.p, sol.q);
    if (!sol.converged && sol.diagnostic.empty()) {
        std::ostringstream os;
        os << "power flow did not converge in " << opt.max_iter
           << " iterations, final mismatch " << sol.max_mismatch << " pu";
        sol.diagnostic = os.str();
    }
    return sol;
}

} // namespace ambest
