#pragma once

#include "ambest/common.hpp"

#include <cmath>

namespace ambest {

/// Ornstein-Uhlenbeck parameters: d eta = -upsilon*eta dt + sigma dW,
/// zero mean, stationary variance sigma^2/(2 upsilon).
struct OuParams {
    double upsilon = 0.5; ///< 1/s drift
    double sigma = 0.0;   ///< diffusion

    double stationary_variance() const { return sigma * sigma / (2.0 * upsilon); }
};

/// First-order speed governor: t_g * pm' = p_ref - droop_gain*(w - w0) - pm.
struct Governor {
    double droop_gain = 25.0; ///< pu power per pu frequency deviation
    double t_g = 0.5;         ///< s
    double p_ref = 0.0;       ///< pu (machine base); set at initialization
};

/// First-order voltage regulator acting on the EMF magnitude:
/// t_a * e' = k_a*(v_ref - v) + e_set - e.
struct Avr {
    double k_a = 50.0;
    double t_a = 0.2;    ///< s
    double v_ref = 1.0;  ///< pu; set at initialization
    double e_set = 1.0;  ///< pu; set at initialization
};

/// Classical machine: constant EMF behind the transient reactance, with
/// optional first-order governor and AVR. H, D and x_d_prime are on the
/// machine base (p_rat_mw); conversion to the system base happens at
/// assembly time.
struct SyncMachine {
    std::string id;
    std::string bus;
    double h = 5.0;         ///< s, inertia constant
    double d = 0.0;         ///< pu damping (machine base)
    double x_d_prime = 0.3; ///< pu transient reactance (machine base)
    double p_rat_mw = 100.0;
    double omega0 = 1.0;    ///< pu reference speed
    double p_set = 0.0;     ///< pu active dispatch (system base)
    std::optional<Governor> governor;
    std::optional<Avr> avr;
};

/// Grid-forming converter emulating a swing equation with (h_eq, d_eq).
/// h_eq = 0 degenerates to droop-only control: the speed state is removed
/// and (d_eq/omega_b) * delta' = p_set - p_e remains.
struct VsmConverter {
    std::string id;
    std::string bus;
    double h_eq = 0.0; ///< s, >= 0
    double d_eq = 1.0; ///< pu (device base), > 0 when h_eq = 0
    double x_c = 0.3;  ///< pu coupling reactance (device base)
    double p_rat_mw = 100.0;
    double omega0 = 1.0;
    double p_set = 0.0; ///< pu (system base)
    double q_set = 0.0; ///< pu (system base)
};

/// Grid-following converter with frequency-droop response. Second order:
/// one bus-frequency filter state and one power state, both with time
/// constant t_f.
struct GflConverter {
    std::string id;
    std::string bus;
    double droop = 1.0; ///< pu power per pu frequency deviation (device base)
    double t_f = 0.1;   ///< s
    double p_rat_mw = 100.0;
    double omega0 = 1.0;
    double p_set = 0.0; ///< pu (system base)
    double q_set = 0.0; ///< pu (system base)
};

/// Constant-power load with multiplicative OU fluctuation on the active
/// power: consumed P = (1 + eta) * p_l0 * (v/v0)^gamma.
struct StochasticLoad {
    std::string id;
    std::string bus;
    double p_l0 = 0.0; ///< pu (system base)
    double q_l0 = 0.0;
    double v0 = 1.0;
    double gamma = 0.0;
    OuParams ou;
    bool q_noise = false; ///< optional independent OU on reactive power
    OuParams q_ou;
};

/// Stiff external grid: pins voltage magnitude and angle at its bus to the
/// power-flow solution and absorbs the balance.
struct ExternalGrid {
    std::string id;
    std::string bus;
};

struct DeviceSet {
    std::vector<SyncMachine> machines;
    std::vector<VsmConverter> vsms;
    std::vector<GflConverter> gfls;
    std::vector<StochasticLoad> loads;
    std::vector<ExternalGrid> grids;
};

// ---- residual building blocks (pure, per-unit) ----

/// delta-row residual: delta' = omega_b*(omega - omega0).
inline double swing_delta_residual(double omega_b, double omega, double omega0) {
    return omega_b * (omega - omega0);
}

/// omega-row residual before dividing by the mass 2H:
/// 2H*omega' = p_m - p_e - d*(omega - omega0).
inline double swing_omega_residual(double p_m, double p_e, double d, double omega,
                                   double omega0) {
    return p_m - p_e - d * (omega - omega0);
}

/// Electrical power of the classical model, EMF e at angle delta against
/// terminal v at angle theta across reactance x (same base as the result).
inline double classical_pe(double e, double v, double delta, double theta, double x) {
    return e * v * std::sin(delta - theta) / x;
}

/// Reactive power injected into the bus by the classical model.
inline double classical_qe(double e, double v, double delta, double theta, double x) {
    return (e * v * std::cos(delta - theta) - v * v) / x;
}

/// Terminal current magnitude of the classical model.
inline double classical_current(double e, double v, double delta, double theta,
                                double x) {
    const double mag2 = e * e + v * v - 2.0 * e * v * std::cos(delta - theta);
    return std::sqrt(std::max(mag2, 0.0)) / x;
}

/// Consumed active power of a stochastic load for a given OU value and bus
/// voltage; lambda is the scenario load multiplier.
inline double eval_load(const StochasticLoad& load, double eta, double v,
                        double lambda = 1.0) {
    if (v <= 0.0) throw NumericalError("load '" + load.id + "': bus voltage <= 0");
    return (1.0 + eta) * lambda * load.p_l0 * std::pow(v / load.v0, load.gamma);
}

/// GFL power-row residual before dividing by t_f:
/// t_f * p' = p_set - droop*(omega_est - omega0) - p.
inline double gfl_power_residual(double p_set, double droop, double omega_est,
                                 double omega0, double p) {
    return p_set - droop * (omega_est - omega0) - p;
}

} // namespace ambest
