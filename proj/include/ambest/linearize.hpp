#pragma once

#include "ambest/model.hpp"

#include <iomanip>
#include <ostream>
#include <sstream>

namespace ambest {

struct Jacobians {
    Mat f_x, f_z, g_x, g_z;
};

/// Central finite-difference jacobians of the residuals at (x0, z0) with
/// eta = 0. Step per variable: rel_step * max(1, |value|).
inline Jacobians jacobians_at(const SystemModel& model, const Vec& x0, const Vec& z0,
                              double rel_step = 1e-6) {
    const int ns = model.n_states();
    const int na = model.n_algs();
    const Vec eta0 = Vec::Zero(model.n_noise());

    Jacobians jac;
    jac.f_x = Mat::Zero(ns, ns);
    jac.f_z = Mat::Zero(ns, na);
    jac.g_x = Mat::Zero(na, ns);
    jac.g_z = Mat::Zero(na, na);

    Vec xp = x0, xm = x0, zp = z0, zm = z0;
    Vec fp(ns), fm(ns), gp(na), gm(na);
    auto check = [&](const Vec& r, const char* which, int col) {
        if (!r.allFinite()) {
            std::ostringstream os;
            os << "NaN/inf in " << which << " residual while perturbing column " << col;
            throw NumericalError(os.str());
        }
    };
    for (int j = 0; j < ns; ++j) {
        const double h = rel_step * std::max(1.0, std::abs(x0(j)));
        xp(j) = x0(j) + h;
        xm(j) = x0(j) - h;
        model.eval_f(xp, z0, fp);
        model.eval_f(xm, z0, fm);
        model.eval_g(xp, z0, eta0, gp);
        model.eval_g(xm, z0, eta0, gm);
        check(fp, "state", j);
        check(gp, "algebraic", j);
        jac.f_x.col(j) = (fp - fm) / (2.0 * h);
        jac.g_x.col(j) = (gp - gm) / (2.0 * h);
        xp(j) = x0(j);
        xm(j) = x0(j);
    }
    for (int j = 0; j < na; ++j) {
        const double h = rel_step * std::max(1.0, std::abs(z0(j)));
        zp(j) = z0(j) + h;
        zm(j) = z0(j) - h;
        model.eval_f(x0, zp, fp);
        model.eval_f(x0, zm, fm);
        model.eval_g(x0, zp, eta0, gp);
        model.eval_g(x0, zm, eta0, gm);
        check(fp, "state", ns + j);
        check(gp, "algebraic", ns + j);
        jac.f_z.col(j) = (fp - fm) / (2.0 * h);
        jac.g_z.col(j) = (gp - gm) / (2.0 * h);
        zp(j) = z0(j);
        zm(j) = z0(j);
    }
    return jac;
}

/// Jacobians at the model's own equilibrium.
inline Jacobians jacobians(const SystemModel& model, double rel_step = 1e-6) {
    return jacobians_at(model, model.state_eq(), model.alg_eq(), rel_step);
}

/// Augmented linear SDE dX = A X dt + B dW with X = [xi_fluct; eta], plus
/// the sensitivity E mapping X to the algebraic fluctuations. Immutable;
/// the parameter fast path returns retuned copies.
struct LinearizedSystem {
    Mat a; ///< (n x n), n = n_dyn + n_noise + appended filter states
    Mat b; ///< (n x Z)
    Mat e; ///< measurement rows x n
    Mat j; ///< reduced jacobian, n_dyn x n_dyn
    std::vector<std::string> state_names; ///< rows of a
    std::vector<std::string> meas_names;  ///< rows of e
    Vec lambda_diag;                      ///< mass diagonal of the dynamic block
    Vec xi_eq, zeta_eq;
    int n_dyn = 0;   ///< differential states (excluding OU block and filters)
    int n_noise = 0;
    double max_re_eig = 0.0;
    std::map<std::string, SwingRow> swing; ///< device id -> speed-row info

    int state_pos(const std::string& name) const {
        for (int i = 0; i < static_cast<int>(state_names.size()); ++i)
            if (state_names[i] == name) return i;
        throw ConfigError("unknown system state '" + name + "'");
    }
    int meas_pos(const std::string& name) const {
        for (int i = 0; i < static_cast<int>(meas_names.size()); ++i)
            if (meas_names[i] == name) return i;
        throw ConfigError("unknown measurement '" + name + "'");
    }
};

struct AbeOptions {
    bool check_stability = true;
    double fd_rel_step = 1e-6;
};

/// Assemble the augmented drift/diffusion/sensitivity triple from the
/// jacobians and the OU parameters. The noise block is decoupled from the
/// dynamic block from below; G_zeta is factored once and reused.
inline LinearizedSystem assemble_abe(const SystemModel& model, const Jacobians& jac,
                                     const AbeOptions& opt = {}) {
    const int ns = model.n_states();
    const int na = model.n_algs();
    const int nz = model.n_noise();
    const int n = ns + nz;

    LinearizedSystem sys;
    sys.n_dyn = ns;
    sys.n_noise = nz;
    sys.lambda_diag = model.lambda_diag();
    sys.xi_eq = model.state_eq();
    sys.zeta_eq = model.alg_eq();
    sys.state_names = model.state_names();
    for (const auto& nm : model.noise_names()) sys.state_names.push_back(nm);
    sys.meas_names = model.alg_names();
    sys.swing = model.swing_rows();

    Mat gz_inv_gx, gz_inv_xi;
    if (na > 0) {
        Eigen::PartialPivLU<Mat> lu(jac.g_z);
        const Vec udiag = lu.matrixLU().diagonal().cwiseAbs();
        if (udiag.minCoeff() <= 1e-14 * std::max(1.0, udiag.maxCoeff())) {
            Eigen::FullPivLU<Mat> flu(jac.g_z);
            std::string eqn = "?";
            if (flu.rank() < na) {
                const int bad = static_cast<int>(flu.permutationP().indices()(na - 1));
                eqn = model.alg_names()[bad];
            }
            throw NumericalError("G_zeta is singular near equation '" + eqn + "'");
        }
        gz_inv_gx = lu.solve(jac.g_x);
        gz_inv_xi = lu.solve(model.xi_inject());
    } else {
        gz_inv_gx = Mat::Zero(0, ns);
        gz_inv_xi = Mat::Zero(0, nz);
    }

    const Vec lam_inv = model.lambda_diag().cwiseInverse();
    Mat fred = jac.f_x;
    if (na > 0) fred.noalias() -= jac.f_z * gz_inv_gx;
    sys.j = lam_inv.asDiagonal() * fred;

    sys.a = Mat::Zero(n, n);
    sys.a.topLeftCorner(ns, ns) = sys.j;
    if (nz > 0 && na > 0)
        sys.a.topRightCorner(ns, nz) = -(lam_inv.asDiagonal() * (jac.f_z * gz_inv_xi));
    sys.b = Mat::Zero(n, nz);
    for (int z = 0; z < nz; ++z) {
        sys.a(ns + z, ns + z) = -model.ou()[z].upsilon;
        sys.b(ns + z, z) = model.ou()[z].sigma;
    }

    sys.e = Mat::Zero(na, n);
    if (na > 0) {
        sys.e.leftCols(ns) = -gz_inv_gx;
        sys.e.rightCols(nz) = -gz_inv_xi;
    }

    if (n > 0) {
        const Eigen::VectorXcd eig = sys.a.eigenvalues();
        sys.max_re_eig = eig.real().maxCoeff();
        if (opt.check_stability && sys.max_re_eig >= 0.0) {
            std::ostringstream os;
            os << "linearized system is not stable; offending eigenvalues:";
            for (int i = 0; i < eig.size(); ++i)
                if (eig(i).real() >= 0.0)
                    os << " (" << eig(i).real() << (eig(i).imag() >= 0 ? "+" : "-")
                       << std::abs(eig(i).imag()) << "j)";
            throw NumericalError(os.str());
        }
    }
    return sys;
}

inline LinearizedSystem linearize(const SystemModel& model, const AbeOptions& opt = {}) {
    return assemble_abe(model, jacobians(model, opt.fd_rel_step), opt);
}

/// Fast inertia/damping retune: a new H rescales the device's speed row of
/// the drift (the Lambda^-1 effect), a new D shifts only the (omega,omega)
/// diagonal entry. No power flow or jacobian recomputation.
inline LinearizedSystem update_lambda(const LinearizedSystem& sys,
                                      const std::map<std::string, double>& params) {
    LinearizedSystem out = sys;
    for (const auto& [key, value] : params) {
        const auto colon = key.find(':');
        if (colon == std::string::npos)
            throw ConfigError("parameter '" + key + "': expected H:<device> or D:<device>");
        const std::string kind = key.substr(0, colon);
        const std::string dev = key.substr(colon + 1);
        auto it = out.swing.find(dev);
        if (it == out.swing.end())
            throw ConfigError("parameter '" + key + "': no swing device '" + dev + "'");
        auto& swing = it->second;
        const int row = swing.omega_row;
        if (kind == "H") {
            if (value <= 0.0)
                throw ConfigError("parameter '" + key + "': H must be > 0");
            const double scale = swing.h / value;
            out.a.row(row) *= scale;
            out.j.row(row) *= scale;
            out.lambda_diag(row) = 2.0 * value;
            swing.h = value;
        } else if (kind == "D") {
            if (value < 0.0)
                throw ConfigError("parameter '" + key + "': D must be >= 0");
            const double delta = (swing.d - value) / (2.0 * swing.h);
            out.a(row, row) += delta;
            out.j(row, row) += delta;
            swing.d = value;
        } else {
            throw ConfigError("parameter '" + key + "': unknown kind '" + kind + "'");
        }
    }
    return out;
}

/// Plain-text dump of (A, B, E) with the index maps, row-major.
inline void dump_system(const LinearizedSystem& sys, std::ostream& os) {
    os << "# linear system dump v1\n";
    os << "# states:";
    for (const auto& s : sys.state_names) os << ' ' << s;
    os << "\n# measurements:";
    for (const auto& s : sys.meas_names) os << ' ' << s;
    os << "\n";
    auto put = [&os](const char* tag, const Mat& m) {
        os << tag << ' ' << m.rows() << ' ' << m.cols() << '\n';
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c)
                os << (c ? " " : "") << std::setprecision(17) << m(r, c);
            os << '\n';
        }
    };
    put("A", sys.a);
    put("B", sys.b);
    put("E", sys.e);
}

} // namespace ambest
