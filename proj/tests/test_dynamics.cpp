#include <catch2/catch_amalgamated.hpp>

#include "ambest/model.hpp"
#include "ambest/pipeline.hpp"

using namespace ambest;
using Catch::Approx;

namespace {

RunConfig bundled(const std::string& id) {
    return parse_config(bundled_systems().at(id));
}

DynamicModel build(const RunConfig& cfg, AssembleOptions opt = {}) {
    return DynamicModel(cfg.network, cfg.devices, opt);
}

double residual_norm(const DynamicModel& m) {
    Vec rf, rg;
    m.eval_f(m.state_eq(), m.alg_eq(), rf);
    m.eval_g(m.state_eq(), m.alg_eq(), Vec::Zero(m.n_noise()), rg);
    double worst = 0.0;
    if (rf.size()) worst = rf.cwiseAbs().maxCoeff();
    if (rg.size()) worst = std::max(worst, rg.cwiseAbs().maxCoeff());
    return worst;
}

} // namespace

TEST_CASE("dynamics: equilibrium residuals vanish on the bundled systems") {
    for (const auto& id : {"smib", "three_machine", "nine_bus_reduced", "vsm_step",
                           "gfl_droop"}) {
        const auto cfg = bundled(id);
        const auto model = build(cfg);
        INFO(id);
        REQUIRE(residual_norm(model) <= 1e-8);
    }
}

TEST_CASE("dynamics: governor reference perturbation shows up one-to-one") {
    auto cfg = bundled("smib");
    const auto base = build(cfg);
    // at equilibrium pm == p_ref, so read the auto-initialized reference
    const double p_ref0 = base.state_eq()(base.state_pos("pm:G1"));
    cfg.devices.machines[0].governor->p_ref = p_ref0 + 0.1;
    AssembleOptions opt;
    opt.verify_equilibrium = false;
    const auto model = build(cfg, opt);
    Vec rf;
    model.eval_f(model.state_eq(), model.alg_eq(), rf);
    REQUIRE(rf(model.state_pos("pm:G1")) == Approx(0.1).margin(1e-12));
}

TEST_CASE("dynamics: state count matches the hand enumeration") {
    const auto model = build(bundled("three_machine"));
    // 3 machines with governor+avr: 2*3 swing + 3 governor + 3 avr
    REQUIRE(model.n_states() == 12);
    REQUIRE(model.state_names()[0].rfind("omega:", 0) == 0);
    REQUIRE(model.state_names()[3].rfind("delta:", 0) == 0);
    // speeds first, then angles, then the regulator states
    REQUIRE(model.state_pos("omega:G3") < model.state_pos("delta:G1"));
    REQUIRE(model.state_pos("delta:G3") < model.state_pos("pm:G1"));
    // noise block: one OU per load
    REQUIRE(model.n_noise() == 3);
}

TEST_CASE("dynamics: swing residual arithmetic") {
    // synchronous equilibrium
    REQUIRE(swing_delta_residual(2.0 * kPi * 60.0, 1.0, 1.0) == 0.0);
    REQUIRE(swing_omega_residual(0.8, 0.8, 2.0, 1.0, 1.0) == 0.0);
    // damping-only deviation: unscaled residual = -D*(w - w0) = -0.02
    REQUIRE(swing_omega_residual(0.8, 0.8, 2.0, 1.01, 1.0) == Approx(-0.02));
    // H = 5, Pm - Pe = 0.1, D = 0: omega' = 0.1 / (2H) = 0.01 pu/s
    const double resid = swing_omega_residual(0.9, 0.8, 0.0, 1.0, 1.0);
    REQUIRE(resid / (2.0 * 5.0) == Approx(0.01));
}

TEST_CASE("dynamics: load evaluation") {
    StochasticLoad load;
    load.id = "L";
    load.p_l0 = 1.0;
    load.v0 = 1.0;
    load.gamma = 0.0;
    REQUIRE(eval_load(load, 0.0, 1.0) == Approx(1.0));
    REQUIRE(eval_load(load, 0.05, 1.0) == Approx(1.05));
    load.gamma = 2.0;
    REQUIRE(eval_load(load, 0.0, 0.95) == Approx(0.9025));
    REQUIRE_THROWS_AS(eval_load(load, 0.0, 0.0), NumericalError);
}

namespace {

RunConfig swing_pair_config(bool as_vsm) {
    RunConfig cfg;
    cfg.network.buses.push_back({"b1", 230.0, BusKind::pv, 1.02, 0.0, 0.0});
    cfg.network.buses.push_back({"b2", 230.0, BusKind::slack, 1.0, 0.0, 0.0});
    cfg.network.branches.push_back({"l12", "b1", "b2", 0.005, 0.1, 0.02, 1.0, true});
    cfg.devices.grids.push_back({"EXT", "b2"});
    if (as_vsm) {
        VsmConverter v;
        v.id = "U1";
        v.bus = "b1";
        v.h_eq = 10.0;
        v.d_eq = 2.0;
        v.x_c = 0.3;
        v.p_rat_mw = 100.0;
        v.p_set = 0.8;
        cfg.devices.vsms.push_back(v);
    } else {
        SyncMachine m;
        m.id = "U1";
        m.bus = "b1";
        m.h = 10.0;
        m.d = 2.0;
        m.x_d_prime = 0.3;
        m.p_rat_mw = 100.0;
        m.p_set = 0.8;
        cfg.devices.machines.push_back(m);
    }
    StochasticLoad l;
    l.id = "L1";
    l.bus = "b1";
    l.p_l0 = 0.3;
    l.ou = {0.5, 0.05};
    cfg.devices.loads.push_back(l);
    return cfg;
}

} // namespace

TEST_CASE("dynamics: VSM and classical machine are the same swing model") {
    const auto mm = build(swing_pair_config(false));
    const auto mv = build(swing_pair_config(true));
    REQUIRE(mm.n_states() == mv.n_states());
    REQUIRE(mm.state_eq().isApprox(mv.state_eq(), 1e-14));
    REQUIRE(mm.lambda_diag().isApprox(mv.lambda_diag(), 1e-14));

    // identical residuals at an arbitrary displaced point
    Vec x = mm.state_eq(), z = mm.alg_eq();
    x(0) += 0.004; // omega
    x(1) -= 0.03;  // delta
    z(0) *= 0.99;
    z(2) += 0.01;
    Vec eta = Vec::Constant(1, 0.02);
    Vec fa, fb, ga, gb;
    mm.eval_f(x, z, fa);
    mv.eval_f(x, z, fb);
    mm.eval_g(x, z, eta, ga);
    mv.eval_g(x, z, eta, gb);
    REQUIRE((fa - fb).cwiseAbs().maxCoeff() == Approx(0.0).margin(1e-15));
    REQUIRE((ga - gb).cwiseAbs().maxCoeff() == Approx(0.0).margin(1e-15));
}

TEST_CASE("dynamics: mass matrix carries exactly 2H on every swing row") {
    for (const auto& id : {"three_machine", "vsm_step"}) {
        const auto cfg = bundled(id);
        AssembleOptions opt;
        // put the vsm into swing form so its row exists
        if (std::string(id) == "vsm_step") opt.overrides["VSM1"]["h_eq_s"] = 10.0;
        const auto model = build(cfg, opt);
        const auto rows = model.swing_rows();
        REQUIRE_FALSE(rows.empty());
        for (const auto& [dev, row] : rows)
            REQUIRE(model.lambda_diag()(row.omega_row) == Approx(2.0 * row.h));
    }
}

TEST_CASE("dynamics: droop-only vsm loses its speed state") {
    const auto cfg = bundled("vsm_step");
    const auto pre = build(cfg);
    REQUIRE_THROWS_AS(pre.state_pos("omega:VSM1"), ConfigError);
    REQUIRE_NOTHROW(pre.state_pos("delta:VSM1"));
    AssembleOptions opt;
    opt.overrides["VSM1"]["h_eq_s"] = 10.0;
    const auto post = build(cfg, opt);
    REQUIRE_NOTHROW(post.state_pos("omega:VSM1"));
    REQUIRE(post.n_states() == pre.n_states() + 1);
}

TEST_CASE("dynamics: gfl droop response") {
    const auto cfg = bundled("gfl_droop");
    const auto model = build(cfg);
    const int iphi = model.state_pos("phi:GFL1");
    const int ipg = model.state_pos("pg:GFL1");
    Vec rf;
    model.eval_f(model.state_eq(), model.alg_eq(), rf);
    REQUIRE(std::abs(rf(iphi)) <= 1e-10); // steady: p = p_set at w_est = w0
    REQUIRE(std::abs(rf(ipg)) <= 1e-10);

    // impose a 0.01 pu frequency-estimate error via the angle filter state
    const double omega_b = model.net().omega_base();
    const double t_f = cfg.devices.gfls[0].t_f;
    Vec x = model.state_eq();
    x(iphi) -= 0.01 * t_f * omega_b; // w_est - w0 = (theta - phi)/(t_f Omega)
    model.eval_f(x, model.alg_eq(), rf);
    // droop = 2: steady-state power deviates by -droop*0.01 = -0.02
    REQUIRE(rf(ipg) == Approx(-0.02).margin(1e-12));
}

TEST_CASE("dynamics: assembly rejections") {
    auto cfg = bundled("smib");
    cfg.devices.machines[0].bus = "nowhere";
    REQUIRE_THROWS_AS(build(cfg), ConfigError);

    cfg = bundled("smib");
    cfg.devices.machines[0].h = 0.0;
    REQUIRE_THROWS_AS(build(cfg), ConfigError);

    cfg = bundled("smib");
    cfg.devices.loads[0].ou.upsilon = 0.0;
    REQUIRE_THROWS_AS(build(cfg), ConfigError);
}

TEST_CASE("dynamics: lambda scales consumption and dispatch") {
    const auto cfg = bundled("three_machine");
    AssembleOptions opt;
    opt.lambda = 1.1;
    const auto model = build(cfg, opt);
    REQUIRE(model.devices().loads[0].p_l0 == Approx(1.1 * 2.4));
    REQUIRE(model.devices().machines[0].p_set == Approx(1.1 * 2.0));
    REQUIRE(residual_norm(model) <= 1e-8);
}
