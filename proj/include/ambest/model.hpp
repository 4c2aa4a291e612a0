#pragma once

#include "ambest/devices.hpp"
#include "ambest/network.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace ambest {

/// Swing-row bookkeeping consumed by the linearization fast path.
struct SwingRow {
    int omega_row = -1; ///< state row of the speed equation
    double h = 0.0;     ///< current inertia constant, s
    double d = 0.0;     ///< current damping, device pu
};

/// Abstract semi-explicit DAE with additive OU noise in the algebraic part:
///   Lambda * xi' = F(xi, zeta),   0 = G(xi, zeta, eta),
/// where G(xi, zeta, eta) == G(xi, zeta, 0) + Xi*eta at the default gamma=0
/// load model. Implementations must be immutable and thread-safe.
class SystemModel {
public:
    virtual ~SystemModel() = default;

    virtual int n_states() const = 0;
    virtual int n_algs() const = 0;
    virtual int n_noise() const = 0;

    virtual const Vec& lambda_diag() const = 0;
    virtual const Mat& xi_inject() const = 0;
    virtual const std::vector<OuParams>& ou() const = 0;

    virtual const std::vector<std::string>& state_names() const = 0;
    virtual const std::vector<std::string>& alg_names() const = 0;
    virtual const std::vector<std::string>& noise_names() const = 0;

    virtual const Vec& state_eq() const = 0;
    virtual const Vec& alg_eq() const = 0;

    virtual void eval_f(const Vec& x, const Vec& z, Vec& out) const = 0;
    virtual void eval_g(const Vec& x, const Vec& z, const Vec& eta, Vec& out) const = 0;

    /// Devices whose inertia/damping can be retuned by the linearization
    /// fast path, keyed by device id.
    virtual std::map<std::string, SwingRow> swing_rows() const { return {}; }

    int state_pos(const std::string& name) const {
        const auto& names = state_names();
        for (int i = 0; i < static_cast<int>(names.size()); ++i)
            if (names[i] == name) return i;
        throw ConfigError("unknown state '" + name + "'");
    }
    int alg_pos(const std::string& name) const {
        const auto& names = alg_names();
        for (int i = 0; i < static_cast<int>(names.size()); ++i)
            if (names[i] == name) return i;
        throw ConfigError("unknown algebraic variable '" + name + "'");
    }
};

struct AssembleOptions {
    double lambda = 1.0; ///< scenario load/dispatch multiplier
    std::map<std::string, std::map<std::string, double>> overrides; ///< device -> param -> value
    bool verify_equilibrium = true;
    double pf_tol = 1e-8;
    int pf_max_iter = 50;
    double residual_tol = 1e-8;
};

namespace detail {

struct CompiledMachine {
    std::string id;
    int bus = 0;
    double h = 0, d = 0, xd_mach = 0, xd_sys = 0, rho = 1, omega0 = 1;
    bool has_gov = false;
    double droop_gain = 0, t_g = 0, p_ref = 0;
    bool has_avr = false;
    double k_a = 0, t_a = 0, v_ref = 0, e_set = 0;
    double e0 = 0;    ///< EMF magnitude (initial; constant when no AVR)
    double pm0 = 0;   ///< mechanical power, machine base (constant when no governor)
    int i_omega = -1, i_delta = -1, i_pm = -1, i_efd = -1;
    int i_cur = -1;   ///< y slot of the terminal current
};

struct CompiledVsm {
    std::string id;
    int bus = 0;
    double h = 0, d = 0, xc_dev = 0, xc_sys = 0, rho = 1, omega0 = 1;
    double e0 = 0, pm0 = 0; ///< pm0 on device base
    int i_omega = -1, i_delta = -1;
    int i_cur = -1;
};

struct CompiledGfl {
    std::string id;
    int bus = 0;
    double droop = 0, t_f = 0, rho = 1, omega0 = 1;
    double p0_dev = 0, q0_dev = 0;
    int i_phi = -1, i_pg = -1;
    int i_cur = -1;
};

struct CompiledLoad {
    std::string id;
    int bus = 0;
    double p0 = 0, q0 = 0, v0 = 1, gamma = 0; ///< lambda already folded in
    int z_p = -1, z_q = -1;
};

struct CompiledBranchCur {
    std::string id;
    int from = 0, to = 0;
    cplx y_self, y_mut; ///< I_from = y_self*Vf + y_mut*Vt
    int i_cur = -1;
};

} // namespace detail

DeviceSet apply_device_overrides(const DeviceSet& base,
                                 const std::map<std::string, std::map<std::string, double>>& ov);

/// Assembled power-system DAE anchored at a solved power flow. States are
/// ordered speed block first, then angles, then remaining device states;
/// algebraic variables are bus voltage magnitudes, angles, then the
/// current-magnitude definitions.
class DynamicModel : public SystemModel {
public:
    DynamicModel(Network net, DeviceSet base_devices, AssembleOptions opt = {})
        : net_(std::move(net)), base_devices_(std::move(base_devices)), opt_(opt) {
        build();
    }

    int n_states() const override { return static_cast<int>(state_names_.size()); }
    int n_algs() const override { return static_cast<int>(alg_names_.size()); }
    int n_noise() const override { return static_cast<int>(noise_names_.size()); }
    const Vec& lambda_diag() const override { return lambda_diag_; }
    const Mat& xi_inject() const override { return xi_; }
    const std::vector<OuParams>& ou() const override { return ou_; }
    const std::vector<std::string>& state_names() const override { return state_names_; }
    const std::vector<std::string>& alg_names() const override { return alg_names_; }
    const std::vector<std::string>& noise_names() const override { return noise_names_; }
    const Vec& state_eq() const override { return x0_; }
    const Vec& alg_eq() const override { return z0_; }

    const Network& net() const { return net_; }
    const DeviceSet& devices() const { return devices_; } ///< effective (lambda + overrides applied)
    const DeviceSet& base_devices() const { return base_devices_; }
    const AssembleOptions& options() const { return opt_; }
    const PowerFlowSolution& power_flow() const { return pf_; }
    double scenario_lambda() const { return opt_.lambda; }

    std::map<std::string, SwingRow> swing_rows() const override {
        std::map<std::string, SwingRow> rows;
        for (const auto& m : machines_)
            rows[m.id] = SwingRow{m.i_omega, m.h, m.d};
        for (const auto& c : vsms_)
            if (c.i_omega >= 0) rows[c.id] = SwingRow{c.i_omega, c.h, c.d};
        return rows;
    }

    void eval_f(const Vec& x, const Vec& z, Vec& out) const override {
        out.resize(n_states());
        const double ob = net_.omega_base();
        for (const auto& m : machines_) {
            const double w = x(m.i_omega), de = x(m.i_delta);
            const double e = m.has_avr ? x(m.i_efd) : m.e0;
            const double v = z(m.bus), th = z(np_ + m.bus);
            const double pe = classical_pe(e, v, de, th, m.xd_mach);
            const double pm = m.has_gov ? x(m.i_pm) : m.pm0;
            out(m.i_delta) = swing_delta_residual(ob, w, m.omega0);
            out(m.i_omega) = swing_omega_residual(pm, pe, m.d, w, m.omega0);
            if (m.has_gov)
                out(m.i_pm) = m.p_ref - m.droop_gain * (w - m.omega0) - x(m.i_pm);
            if (m.has_avr)
                out(m.i_efd) = m.k_a * (m.v_ref - v) + m.e_set - x(m.i_efd);
        }
        for (const auto& c : vsms_) {
            const double de = x(c.i_delta);
            const double v = z(c.bus), th = z(np_ + c.bus);
            const double pe = classical_pe(c.e0, v, de, th, c.xc_dev);
            if (c.i_omega >= 0) {
                const double w = x(c.i_omega);
                out(c.i_delta) = swing_delta_residual(ob, w, c.omega0);
                out(c.i_omega) = swing_omega_residual(c.pm0, pe, c.d, w, c.omega0);
            } else {
                // droop-only: (d/omega_b) * delta' = p_set - p_e
                out(c.i_delta) = c.pm0 - pe;
            }
        }
        for (const auto& gf : gfls_) {
            const double phi = x(gf.i_phi), pg = x(gf.i_pg);
            const double th = z(np_ + gf.bus);
            const double west = gf.omega0 + (th - phi) / (gf.t_f * ob);
            out(gf.i_phi) = th - phi;
            out(gf.i_pg) = gfl_power_residual(gf.p0_dev, gf.droop, west, gf.omega0, pg);
        }
    }

    void eval_g(const Vec& x, const Vec& z, const Vec& eta, Vec& out) const override {
        out.resize(n_algs());
        thread_local CVec vc, inet;
        vc.resize(np_);
        inet.resize(np_);
        for (int b = 0; b < np_; ++b) vc(b) = std::polar(z(b), z(np_ + b));
        inet.noalias() = ybus_ * vc;
        for (int b = 0; b < np_; ++b) {
            const cplx s = vc(b) * std::conj(inet(b));
            out(b) = net_.buses[b].p_inj - s.real();
            out(np_ + b) = net_.buses[b].q_inj - s.imag();
        }
        for (const auto& m : machines_) {
            const double de = x(m.i_delta);
            const double e = m.has_avr ? x(m.i_efd) : m.e0;
            const double v = z(m.bus), th = z(np_ + m.bus);
            out(m.bus) += classical_pe(e, v, de, th, m.xd_sys);
            out(np_ + m.bus) += classical_qe(e, v, de, th, m.xd_sys);
            out(iy_ + m.i_cur) = z(iy_ + m.i_cur) - classical_current(e, v, de, th, m.xd_sys);
        }
        for (const auto& c : vsms_) {
            const double de = x(c.i_delta);
            const double v = z(c.bus), th = z(np_ + c.bus);
            out(c.bus) += classical_pe(c.e0, v, de, th, c.xc_sys);
            out(np_ + c.bus) += classical_qe(c.e0, v, de, th, c.xc_sys);
            out(iy_ + c.i_cur) = z(iy_ + c.i_cur) - classical_current(c.e0, v, de, th, c.xc_sys);
        }
        for (const auto& gf : gfls_) {
            const double pg = x(gf.i_pg);
            const double v = z(gf.bus);
            out(gf.bus) += pg * gf.rho;
            out(np_ + gf.bus) += gf.q0_dev * gf.rho;
            out(iy_ + gf.i_cur) =
                z(iy_ + gf.i_cur) -
                gf.rho * std::sqrt(pg * pg + gf.q0_dev * gf.q0_dev) / v;
        }
        for (const auto& l : loads_) {
            const double v = z(l.bus);
            const double shape = std::pow(v / l.v0, l.gamma);
            const double ep = (l.z_p >= 0 && eta.size() > l.z_p) ? eta(l.z_p) : 0.0;
            const double eq = (l.z_q >= 0 && eta.size() > l.z_q) ? eta(l.z_q) : 0.0;
            out(l.bus) -= (1.0 + ep) * l.p0 * shape;
            out(np_ + l.bus) -= (1.0 + eq) * l.q0 * shape;
        }
        for (const auto& bc : branch_cur_) {
            const cplx i_f = bc.y_self * vc(bc.from) + bc.y_mut * vc(bc.to);
            out(iy_ + bc.i_cur) = z(iy_ + bc.i_cur) - std::abs(i_f);
        }
        if (ext_bus_ >= 0) {
            out(ext_bus_) = z(np_ + ext_bus_) - ext_theta_;
            out(np_ + ext_bus_) = z(ext_bus_) - ext_v_;
        }
    }

private:
    void build();

    Network net_;
    DeviceSet base_devices_;
    DeviceSet devices_;
    AssembleOptions opt_;
    PowerFlowSolution pf_;
    CMat ybus_;
    int np_ = 0; ///< bus count
    int iy_ = 0; ///< offset of the y block inside zeta (== 2*np_)
    int ext_bus_ = -1;
    double ext_v_ = 1.0, ext_theta_ = 0.0;

    std::vector<detail::CompiledMachine> machines_;
    std::vector<detail::CompiledVsm> vsms_;
    std::vector<detail::CompiledGfl> gfls_;
    std::vector<detail::CompiledLoad> loads_;
    std::vector<detail::CompiledBranchCur> branch_cur_;

    std::vector<std::string> state_names_, alg_names_, noise_names_;
    std::vector<OuParams> ou_;
    Vec lambda_diag_, x0_, z0_;
    Mat xi_;
};

inline DeviceSet apply_device_overrides(
    const DeviceSet& base,
    const std::map<std::string, std::map<std::string, double>>& ov) {
    DeviceSet d = base;
    auto apply = [&](const std::string& id, const std::string& key, double val) {
        for (auto& m : d.machines)
            if (m.id == id) {
                if (key == "h_s") m.h = val;
                else if (key == "d_pu") m.d = val;
                else if (key == "p_set_pu") m.p_set = val;
                else throw ConfigError("machine '" + id + "': unknown schedule param '" + key + "'");
                return;
            }
        for (auto& c : d.vsms)
            if (c.id == id) {
                if (key == "h_eq_s") c.h_eq = val;
                else if (key == "d_eq_pu") c.d_eq = val;
                else if (key == "p_set_pu") c.p_set = val;
                else throw ConfigError("vsm '" + id + "': unknown schedule param '" + key + "'");
                return;
            }
        for (auto& gfl : d.gfls)
            if (gfl.id == id) {
                if (key == "droop_pu") gfl.droop = val;
                else if (key == "t_f_s") gfl.t_f = val;
                else if (key == "p_set_pu") gfl.p_set = val;
                else throw ConfigError("gfl '" + id + "': unknown schedule param '" + key + "'");
                return;
            }
        for (auto& l : d.loads)
            if (l.id == id) {
                if (key == "p_l0_pu") l.p_l0 = val;
                else if (key == "q_l0_pu") l.q_l0 = val;
                else throw ConfigError("load '" + id + "': unknown schedule param '" + key + "'");
                return;
            }
        throw ConfigError("schedule refers to unknown device '" + id + "'");
    };
    for (const auto& [id, params] : ov)
        for (const auto& [key, val] : params) apply(id, key, val);
    return d;
}

inline void DynamicModel::build() {
    net_.validate();
    np_ = static_cast<int>(net_.buses.size());
    iy_ = 2 * np_;
    ybus_ = build_admittance(net_);
    const double lam = opt_.lambda;
    if (lam <= 0.0) throw ConfigError("scenario lambda must be > 0");

    devices_ = apply_device_overrides(base_devices_, opt_.overrides);
    // scenario multiplier on consumption and dispatch
    for (auto& l : devices_.loads) { l.p_l0 *= lam; l.q_l0 *= lam; }
    for (auto& m : devices_.machines) m.p_set *= lam;
    for (auto& c : devices_.vsms) c.p_set *= lam;
    for (auto& g : devices_.gfls) g.p_set *= lam;

    // ---- validation ----
    std::set<std::string> ids;
    auto claim = [&](const std::string& id, const char* kind) {
        if (id.empty()) throw ConfigError(std::string(kind) + " with empty id");
        if (!ids.insert(id).second) throw ConfigError("duplicate device id '" + id + "'");
    };
    for (const auto& m : devices_.machines) {
        claim(m.id, "machine");
        net_.bus_index(m.bus);
        if (m.h <= 0.0) throw ConfigError("machine '" + m.id + "': H must be > 0");
        if (m.d < 0.0) throw ConfigError("machine '" + m.id + "': D must be >= 0");
        if (m.x_d_prime <= 0.0) throw ConfigError("machine '" + m.id + "': x_d_prime must be > 0");
        if (m.p_rat_mw <= 0.0) throw ConfigError("machine '" + m.id + "': p_rat must be > 0");
        if (m.governor && m.governor->t_g <= 0.0)
            throw ConfigError("machine '" + m.id + "': governor t_g must be > 0");
        if (m.governor && m.governor->droop_gain < 0.0)
            throw ConfigError("machine '" + m.id + "': governor droop_gain must be >= 0");
        if (m.avr && (m.avr->t_a <= 0.0 || m.avr->k_a <= 0.0))
            throw ConfigError("machine '" + m.id + "': avr gains must be > 0");
    }
    for (const auto& c : devices_.vsms) {
        claim(c.id, "vsm");
        net_.bus_index(c.bus);
        if (c.h_eq < 0.0) throw ConfigError("vsm '" + c.id + "': h_eq must be >= 0");
        if (c.h_eq == 0.0 && c.d_eq <= 0.0)
            throw ConfigError("vsm '" + c.id + "': d_eq must be > 0 when h_eq = 0");
        if (c.d_eq < 0.0) throw ConfigError("vsm '" + c.id + "': d_eq must be >= 0");
        if (c.x_c <= 0.0) throw ConfigError("vsm '" + c.id + "': x_c must be > 0");
        if (net_.buses[net_.bus_index(c.bus)].kind == BusKind::slack)
            throw ConfigError("vsm '" + c.id + "' may not sit at the slack bus");
    }
    for (const auto& g : devices_.gfls) {
        claim(g.id, "gfl");
        net_.bus_index(g.bus);
        if (g.droop <= 0.0) throw ConfigError("gfl '" + g.id + "': droop must be > 0");
        if (g.t_f <= 0.0) throw ConfigError("gfl '" + g.id + "': t_f must be > 0");
    }
    for (const auto& l : devices_.loads) {
        claim(l.id, "load");
        net_.bus_index(l.bus);
        if (l.p_l0 < 0.0) throw ConfigError("load '" + l.id + "': p_l0 must be >= 0");
        if (!std::isfinite(l.gamma)) throw ConfigError("load '" + l.id + "': gamma not finite");
        if (l.ou.upsilon <= 0.0) throw ConfigError("load '" + l.id + "': upsilon must be > 0");
        if (l.ou.sigma < 0.0) throw ConfigError("load '" + l.id + "': sigma must be >= 0");
    }
    if (devices_.grids.size() > 1) throw ConfigError("at most one external grid supported");
    for (const auto& x : devices_.grids) {
        claim(x.id, "external grid");
        ext_bus_ = net_.bus_index(x.bus);
        if (net_.buses[ext_bus_].kind != BusKind::slack)
            throw ConfigError("external grid '" + x.id + "' must sit at the slack bus");
        for (const auto& m : devices_.machines)
            if (net_.bus_index(m.bus) == ext_bus_)
                throw ConfigError("machine '" + m.id + "' shares the external-grid bus");
        for (const auto& c : devices_.vsms)
            if (net_.bus_index(c.bus) == ext_bus_)
                throw ConfigError("vsm '" + c.id + "' shares the external-grid bus");
        for (const auto& g : devices_.gfls)
            if (net_.bus_index(g.bus) == ext_bus_)
                throw ConfigError("gfl '" + g.id + "' shares the external-grid bus");
    }

    // ---- power-flow schedule from devices ----
    Network pf_net = net_;
    std::vector<VoltDepLoad> vdep;
    for (const auto& m : devices_.machines)
        pf_net.buses[net_.bus_index(m.bus)].p_inj += m.p_set;
    for (const auto& c : devices_.vsms) {
        auto& bus = pf_net.buses[net_.bus_index(c.bus)];
        bus.p_inj += c.p_set;
        bus.q_inj += c.q_set;
    }
    for (const auto& g : devices_.gfls) {
        auto& bus = pf_net.buses[net_.bus_index(g.bus)];
        bus.p_inj += g.p_set;
        bus.q_inj += g.q_set;
    }
    for (const auto& l : devices_.loads)
        vdep.push_back(VoltDepLoad{net_.bus_index(l.bus), l.p_l0, l.q_l0, l.v0, l.gamma});

    PowerFlowOptions pfo;
    pfo.tol = opt_.pf_tol;
    pfo.max_iter = opt_.pf_max_iter;
    pfo.vdep_loads = vdep;
    pf_ = solve_power_flow(pf_net, pfo);
    if (!pf_.converged)
        throw NumericalError("model assembly: " + pf_.diagnostic);
    if (ext_bus_ >= 0) {
        ext_v_ = pf_.v(ext_bus_);
        ext_theta_ = pf_.theta(ext_bus_);
    }

    // per-bus device Q (and slack P) allocation
    Vec load_p = Vec::Zero(np_), load_q = Vec::Zero(np_);
    for (const auto& l : devices_.loads) {
        const int b = net_.bus_index(l.bus);
        const double shape = std::pow(pf_.v(b) / l.v0, l.gamma);
        load_p(b) += l.p_l0 * shape;
        load_q(b) += l.q_l0 * shape;
    }
    Vec free_q = pf_.q + load_q; // total Q produced by free-Q devices + fixed schedule
    Vec free_p = pf_.p + load_p;
    for (int b = 0; b < np_; ++b) {
        free_q(b) -= net_.buses[b].q_inj;
        free_p(b) -= net_.buses[b].p_inj;
    }
    for (const auto& g : devices_.gfls) {
        free_q(net_.bus_index(g.bus)) -= g.q_set;
        free_p(net_.bus_index(g.bus)) -= g.p_set;
    }
    Vec rating_sum = Vec::Zero(np_);
    for (const auto& m : devices_.machines) rating_sum(net_.bus_index(m.bus)) += m.p_rat_mw;
    for (const auto& c : devices_.vsms) {
        const int b = net_.bus_index(c.bus);
        if (net_.buses[b].kind == BusKind::pq) {
            free_q(b) -= c.q_set;
            free_p(b) -= c.p_set;
        } else {
            rating_sum(b) += c.p_rat_mw;
        }
    }
    const int slack = net_.slack_index();

    // ---- state/alg layout ----
    auto vsm_has_swing = [](const VsmConverter& c) { return c.h_eq > 0.0; };
    machines_.clear(); vsms_.clear(); gfls_.clear(); loads_.clear(); branch_cur_.clear();
    state_names_.clear(); alg_names_.clear(); noise_names_.clear(); ou_.clear();

    machines_.resize(devices_.machines.size());
    vsms_.resize(devices_.vsms.size());
    gfls_.resize(devices_.gfls.size());

    for (size_t i = 0; i < devices_.machines.size(); ++i) {
        machines_[i].i_omega = static_cast<int>(state_names_.size());
        state_names_.push_back("omega:" + devices_.machines[i].id);
    }
    for (size_t i = 0; i < devices_.vsms.size(); ++i) {
        if (vsm_has_swing(devices_.vsms[i])) {
            vsms_[i].i_omega = static_cast<int>(state_names_.size());
            state_names_.push_back("omega:" + devices_.vsms[i].id);
        }
    }
    for (size_t i = 0; i < devices_.machines.size(); ++i) {
        machines_[i].i_delta = static_cast<int>(state_names_.size());
        state_names_.push_back("delta:" + devices_.machines[i].id);
    }
    for (size_t i = 0; i < devices_.vsms.size(); ++i) {
        vsms_[i].i_delta = static_cast<int>(state_names_.size());
        state_names_.push_back("delta:" + devices_.vsms[i].id);
    }
    for (size_t i = 0; i < devices_.machines.size(); ++i) {
        if (devices_.machines[i].governor) {
            machines_[i].i_pm = static_cast<int>(state_names_.size());
            state_names_.push_back("pm:" + devices_.machines[i].id);
        }
        if (devices_.machines[i].avr) {
            machines_[i].i_efd = static_cast<int>(state_names_.size());
            state_names_.push_back("efd:" + devices_.machines[i].id);
        }
    }
    for (size_t i = 0; i < devices_.gfls.size(); ++i) {
        gfls_[i].i_phi = static_cast<int>(state_names_.size());
        state_names_.push_back("phi:" + devices_.gfls[i].id);
        gfls_[i].i_pg = static_cast<int>(state_names_.size());
        state_names_.push_back("pg:" + devices_.gfls[i].id);
    }

    for (int b = 0; b < np_; ++b) alg_names_.push_back("v:" + net_.buses[b].id);
    for (int b = 0; b < np_; ++b) alg_names_.push_back("theta:" + net_.buses[b].id);
    int ny = 0;
    auto add_cur = [&](const std::string& id) {
        alg_names_.push_back("i:" + id);
        return ny++;
    };
    for (size_t i = 0; i < devices_.machines.size(); ++i)
        machines_[i].i_cur = add_cur(devices_.machines[i].id);
    for (size_t i = 0; i < devices_.vsms.size(); ++i)
        vsms_[i].i_cur = add_cur(devices_.vsms[i].id);
    for (size_t i = 0; i < devices_.gfls.size(); ++i)
        gfls_[i].i_cur = add_cur(devices_.gfls[i].id);
    for (const auto& br : net_.branches) {
        if (!br.on) continue;
        detail::CompiledBranchCur bc;
        bc.id = br.id.empty() ? br.from + "-" + br.to : br.id;
        bc.from = net_.bus_index(br.from);
        bc.to = net_.bus_index(br.to);
        const cplx ys = 1.0 / cplx(br.r, br.x);
        const cplx ysh(0.0, br.b_sh / 2.0);
        bc.y_self = (ys + ysh) / (br.tap * br.tap);
        bc.y_mut = -ys / br.tap;
        bc.i_cur = add_cur(bc.id);
        branch_cur_.push_back(bc);
    }

    // noise columns: active first, reactive after
    loads_.resize(devices_.loads.size());
    for (size_t i = 0; i < devices_.loads.size(); ++i) {
        loads_[i].z_p = static_cast<int>(noise_names_.size());
        noise_names_.push_back("eta:" + devices_.loads[i].id);
        ou_.push_back(devices_.loads[i].ou);
    }
    for (size_t i = 0; i < devices_.loads.size(); ++i) {
        if (devices_.loads[i].q_noise) {
            loads_[i].z_q = static_cast<int>(noise_names_.size());
            noise_names_.push_back("etaq:" + devices_.loads[i].id);
            ou_.push_back(devices_.loads[i].q_ou);
        }
    }

    const int ns = n_states();
    const int na = n_algs();
    const int nz = n_noise();

    // ---- compile devices & initialize the equilibrium ----
    x0_ = Vec::Zero(ns);
    z0_ = Vec::Zero(na);
    lambda_diag_ = Vec::Ones(ns);
    for (int b = 0; b < np_; ++b) {
        z0_(b) = pf_.v(b);
        z0_(np_ + b) = pf_.theta(b);
    }

    for (size_t i = 0; i < devices_.machines.size(); ++i) {
        const auto& src = devices_.machines[i];
        auto& m = machines_[i];
        m.id = src.id;
        m.bus = net_.bus_index(src.bus);
        m.h = src.h;
        m.d = src.d;
        m.rho = src.p_rat_mw / net_.s_base;
        m.xd_mach = src.x_d_prime;
        m.xd_sys = src.x_d_prime / m.rho;
        m.omega0 = src.omega0;
        const double share =
            rating_sum(m.bus) > 0 ? src.p_rat_mw / rating_sum(m.bus) : 1.0;
        const double p_sys = (m.bus == slack && ext_bus_ < 0)
                                 ? free_p(m.bus) * share
                                 : src.p_set;
        const double q_sys = free_q(m.bus) * share;
        const cplx vph = std::polar(pf_.v(m.bus), pf_.theta(m.bus));
        const cplx s_inj(p_sys, q_sys);
        const cplx cur = std::conj(s_inj / vph);
        const cplx emf = vph + cplx(0.0, m.xd_sys) * cur;
        m.e0 = std::abs(emf);
        const double delta0 = std::arg(emf);
        m.pm0 = p_sys / m.rho; // lossless coupling: air-gap power equals injection
        x0_(m.i_omega) = m.omega0;
        x0_(m.i_delta) = delta0;
        lambda_diag_(m.i_omega) = 2.0 * m.h;
        lambda_diag_(m.i_delta) = 1.0;
        m.has_gov = src.governor.has_value();
        if (m.has_gov) {
            m.droop_gain = src.governor->droop_gain;
            m.t_g = src.governor->t_g;
            m.p_ref = src.governor->p_ref != 0.0 ? src.governor->p_ref : m.pm0;
            x0_(m.i_pm) = m.pm0;
            lambda_diag_(m.i_pm) = m.t_g;
        }
        m.has_avr = src.avr.has_value();
        if (m.has_avr) {
            m.k_a = src.avr->k_a;
            m.t_a = src.avr->t_a;
            m.v_ref = pf_.v(m.bus);
            m.e_set = m.e0;
            x0_(m.i_efd) = m.e0;
            lambda_diag_(m.i_efd) = m.t_a;
        }
        z0_(iy_ + m.i_cur) = classical_current(m.e0, pf_.v(m.bus), x0_(m.i_delta),
                                               pf_.theta(m.bus), m.xd_sys);
    }

    for (size_t i = 0; i < devices_.vsms.size(); ++i) {
        const auto& src = devices_.vsms[i];
        auto& c = vsms_[i];
        c.id = src.id;
        c.bus = net_.bus_index(src.bus);
        c.h = src.h_eq;
        c.d = src.d_eq;
        c.rho = src.p_rat_mw / net_.s_base;
        c.xc_dev = src.x_c;
        c.xc_sys = src.x_c / c.rho;
        c.omega0 = src.omega0;
        double q_sys = src.q_set;
        if (net_.buses[c.bus].kind != BusKind::pq) {
            const double share = rating_sum(c.bus) > 0 ? src.p_rat_mw / rating_sum(c.bus) : 1.0;
            q_sys = free_q(c.bus) * share;
        }
        const double p_sys = src.p_set;
        const cplx vph = std::polar(pf_.v(c.bus), pf_.theta(c.bus));
        const cplx cur = std::conj(cplx(p_sys, q_sys) / vph);
        const cplx emf = vph + cplx(0.0, c.xc_sys) * cur;
        c.e0 = std::abs(emf);
        c.pm0 = p_sys / c.rho;
        x0_(c.i_delta) = std::arg(emf);
        if (c.i_omega >= 0) {
            x0_(c.i_omega) = c.omega0;
            lambda_diag_(c.i_omega) = 2.0 * c.h;
            lambda_diag_(c.i_delta) = 1.0;
        } else {
            lambda_diag_(c.i_delta) = c.d / net_.omega_base();
        }
        z0_(iy_ + c.i_cur) = classical_current(c.e0, pf_.v(c.bus), x0_(c.i_delta),
                                               pf_.theta(c.bus), c.xc_sys);
    }

    for (size_t i = 0; i < devices_.gfls.size(); ++i) {
        const auto& src = devices_.gfls[i];
        auto& g = gfls_[i];
        g.id = src.id;
        g.bus = net_.bus_index(src.bus);
        g.droop = src.droop;
        g.t_f = src.t_f;
        g.rho = src.p_rat_mw / net_.s_base;
        g.omega0 = src.omega0;
        g.p0_dev = src.p_set / g.rho;
        g.q0_dev = src.q_set / g.rho;
        x0_(g.i_phi) = pf_.theta(g.bus);
        x0_(g.i_pg) = g.p0_dev;
        lambda_diag_(g.i_phi) = g.t_f;
        lambda_diag_(g.i_pg) = g.t_f;
        z0_(iy_ + g.i_cur) =
            g.rho * std::sqrt(g.p0_dev * g.p0_dev + g.q0_dev * g.q0_dev) / pf_.v(g.bus);
    }

    for (const auto& bc : branch_cur_) {
        const cplx vf = std::polar(pf_.v(bc.from), pf_.theta(bc.from));
        const cplx vt = std::polar(pf_.v(bc.to), pf_.theta(bc.to));
        z0_(iy_ + bc.i_cur) = std::abs(bc.y_self * vf + bc.y_mut * vt);
    }

    xi_ = Mat::Zero(na, std::max(nz, 0));
    for (size_t i = 0; i < devices_.loads.size(); ++i) {
        const auto& src = devices_.loads[i];
        auto& l = loads_[i];
        l.id = src.id;
        l.bus = net_.bus_index(src.bus);
        l.p0 = src.p_l0;
        l.q0 = src.q_l0;
        l.v0 = src.v0;
        l.gamma = src.gamma;
        const double shape = std::pow(pf_.v(l.bus) / l.v0, l.gamma);
        xi_(l.bus, l.z_p) = -l.p0 * shape;
        if (l.z_q >= 0) xi_(np_ + l.bus, l.z_q) = -l.q0 * shape;
    }

    if (opt_.verify_equilibrium) {
        Vec rf, rg;
        eval_f(x0_, z0_, rf);
        eval_g(x0_, z0_, Vec::Zero(nz), rg);
        double worst = 0.0;
        std::string worst_name = "-";
        for (int i = 0; i < ns; ++i)
            if (std::abs(rf(i)) > worst) { worst = std::abs(rf(i)); worst_name = state_names_[i]; }
        for (int i = 0; i < na; ++i)
            if (std::abs(rg(i)) > worst) { worst = std::abs(rg(i)); worst_name = alg_names_[i]; }
        if (worst > opt_.residual_tol) {
            std::ostringstream os;
            os << "equilibrium initialization failed: residual " << worst
               << " in equation '" << worst_name << "' exceeds " << opt_.residual_tol;
            throw NumericalError(os.str());
        }
    }
}

} // namespace ambest
