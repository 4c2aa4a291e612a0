#include <catch2/catch_amalgamated.hpp>

#include "ambest/linearize.hpp"
#include "ambest/pipeline.hpp"
#include "toys.hpp"

using namespace ambest;
using Catch::Approx;

namespace {

RunConfig bundled(const std::string& id) {
    return parse_config(bundled_systems().at(id));
}

RunConfig two_bus_machine(bool with_load = true) {
    RunConfig cfg;
    cfg.network.buses.push_back({"b1", 230.0, BusKind::pv, 1.02, 0.0, 0.0});
    cfg.network.buses.push_back({"b2", 230.0, BusKind::slack, 1.0, 0.0, 0.0});
    cfg.network.branches.push_back({"l12", "b1", "b2", 0.0, 0.1, 0.0, 1.0, true});
    cfg.devices.grids.push_back({"EXT", "b2"});
    SyncMachine m;
    m.id = "G1";
    m.bus = "b1";
    m.h = 5.0;
    m.d = 2.0;
    m.x_d_prime = 0.3;
    m.p_rat_mw = 100.0;
    m.p_set = 0.8;
    cfg.devices.machines.push_back(m);
    if (with_load) {
        StochasticLoad l;
        l.id = "L1";
        l.bus = "b2";
        l.p_l0 = 0.0; // noise source only; keeps the 2-bus equilibrium clean
        l.ou = {0.5, 0.05};
        cfg.devices.loads.push_back(l);
    }
    return cfg;
}

} // namespace

TEST_CASE("linearization: noise-only model reduces to A = -Upsilon") {
    toys::OuOnly model({OuParams{0.5, 0.1}, OuParams{2.0, 0.3}});
    const auto jac = jacobians(model);
    REQUIRE(jac.f_x.size() == 0);
    const auto sys = assemble_abe(model, jac);
    REQUIRE(sys.a.rows() == 2);
    REQUIRE(sys.a(0, 0) == Approx(-0.5));
    REQUIRE(sys.a(1, 1) == Approx(-2.0));
    REQUIRE(sys.a(0, 1) == 0.0);
    REQUIRE(sys.b(0, 0) == Approx(0.1));
    REQUIRE(sys.b(1, 1) == Approx(0.3));
}

TEST_CASE("linearization: 2-bus symbolic jacobian oracle") {
    const auto cfg = two_bus_machine(false);
    DynamicModel model(cfg.network, cfg.devices, {});
    const auto jac = jacobians(model);

    // classical machine against a pinned bus: d(omega-residual)/d(delta)
    // must equal -(E v / x'd) cos(delta - theta) at the equilibrium
    const auto& pf = model.power_flow();
    const cplx vph = std::polar(pf.v(0), pf.theta(0));
    const double q_gen = pf.q(0);
    const double p_gen = pf.p(0);
    const double x_sys = 0.3; // x_d_prime / (100 MW / 100 MVA)
    const cplx cur = std::conj(cplx(p_gen, q_gen) / vph);
    const cplx emf = vph + cplx(0.0, x_sys) * cur;
    const double e0 = std::abs(emf), delta0 = std::arg(emf);

    const int iom = model.state_pos("omega:G1");
    const int idel = model.state_pos("delta:G1");
    const double symbolic = -(e0 * pf.v(0) / 0.3) * std::cos(delta0 - pf.theta(0));
    REQUIRE(jac.f_x(iom, idel) == Approx(symbolic).epsilon(1e-6));

    // and d(omega-residual)/d(theta_b1) is the negative of that
    const int ith = model.alg_pos("theta:b1");
    REQUIRE(jac.f_z(iom, ith) == Approx(-symbolic).epsilon(1e-6));
}

TEST_CASE("linearization: doubling H halves the speed row of J") {
    auto cfg = two_bus_machine();
    DynamicModel m1(cfg.network, cfg.devices, {});
    cfg.devices.machines[0].h *= 2.0;
    DynamicModel m2(cfg.network, cfg.devices, {});
    const auto s1 = linearize(m1);
    const auto s2 = linearize(m2);
    const int iom = m1.state_pos("omega:G1");
    REQUIRE(s2.j.row(iom).isApprox(0.5 * s1.j.row(iom), 1e-9));
    // G-side jacobians are H-independent, so everything else is unchanged
    const int idel = m1.state_pos("delta:G1");
    REQUIRE(s2.j.row(idel).isApprox(s1.j.row(idel), 1e-9));
    REQUIRE(s2.e.isApprox(s1.e, 1e-9));
}

TEST_CASE("linearization: block structure of the augmented system") {
    const auto cfg = bundled("three_machine");
    DynamicModel model(cfg.network, cfg.devices, {});
    const auto sys = linearize(model);
    const int ns = sys.n_dyn, nz = sys.n_noise;
    REQUIRE(ns == 12);
    REQUIRE(nz == 3);
    // diffusion rows of the dynamic block are identically zero
    REQUIRE(sys.b.topRows(ns).cwiseAbs().maxCoeff() == 0.0);
    // lower-left block of the drift is identically zero
    REQUIRE(sys.a.bottomLeftCorner(nz, ns).cwiseAbs().maxCoeff() == 0.0);
    // top-left block is the reduced jacobian
    REQUIRE(sys.a.topLeftCorner(ns, ns).isApprox(sys.j, 1e-14));
    // eigenvalues of the dynamic block match an independent eigen-solve of J
    Eigen::VectorXcd ea = Mat(sys.a.topLeftCorner(ns, ns)).eigenvalues();
    Eigen::VectorXcd ej = sys.j.eigenvalues();
    std::vector<double> ra(ea.size()), rj(ej.size());
    for (int i = 0; i < ea.size(); ++i) ra[i] = ea(i).real();
    for (int i = 0; i < ej.size(); ++i) rj[i] = ej(i).real();
    std::sort(ra.begin(), ra.end());
    std::sort(rj.begin(), rj.end());
    for (size_t i = 0; i < ra.size(); ++i) REQUIRE(ra[i] == Approx(rj[i]).margin(1e-9));
}

TEST_CASE("linearization: stable with oscillatory modes inside the band") {
    for (const auto& id : {"smib", "three_machine", "nine_bus_reduced"}) {
        const auto cfg = bundled(id);
        DynamicModel model(cfg.network, cfg.devices, {});
        const auto sys = linearize(model);
        INFO(id << " max Re eig = " << sys.max_re_eig);
        REQUIRE(sys.max_re_eig < 0.0);
        const Eigen::VectorXcd eig = sys.a.eigenvalues();
        bool electromech = false;
        for (int i = 0; i < eig.size(); ++i) {
            const double f = std::abs(eig(i).imag()) / (2.0 * kPi);
            if (f > 0.3 && f < 2.5) electromech = true;
        }
        REQUIRE(electromech);
    }
}

TEST_CASE("linearization: decoupled noise keeps the drift block-diagonal") {
    toys::Relax model(-1.0, 0.5, OuParams{0.5, 0.1}, /*coupling_xi=*/0.0);
    const auto sys = linearize(model);
    REQUIRE(sys.a(0, 1) == Approx(0.0).margin(1e-12));
    REQUIRE(sys.a(0, 0) == Approx(-1.0).epsilon(1e-8));
}

TEST_CASE("linearization: e reproduces the pure noise feed-through") {
    const auto cfg = bundled("smib");
    DynamicModel model(cfg.network, cfg.devices, {});
    const auto jac = jacobians(model);
    const auto sys = assemble_abe(model, jac);
    const int nz = model.n_noise();
    Vec eta_star = Vec::Constant(nz, 0.03);
    const Vec zeta = sys.e.rightCols(nz) * eta_star;
    const Vec expect = -jac.g_z.partialPivLu().solve(model.xi_inject() * eta_star);
    REQUIRE((zeta - expect).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("linearization: unstable drift is rejected with eigenvalues named") {
    toys::Relax model(+0.1, 0.5, OuParams{0.5, 0.1});
    try {
        linearize(model);
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        REQUIRE(std::string(e.what()).find("eigenvalue") != std::string::npos);
    }
}

TEST_CASE("update_lambda: exact row scaling and damping shift") {
    const auto cfg = bundled("three_machine");
    DynamicModel model(cfg.network, cfg.devices, {});
    const auto sys = linearize(model);
    const auto& swing = sys.swing.at("G2");
    const int row = swing.omega_row;

    const auto doubled = update_lambda(sys, {{"H:G2", 2.0 * swing.h}});
    REQUIRE(doubled.a.row(row).isApprox(0.5 * sys.a.row(row), 1e-14));
    REQUIRE(doubled.lambda_diag(row) == Approx(4.0 * swing.h));
    // all other rows untouched
    for (int r = 0; r < sys.a.rows(); ++r) {
        if (r == row) continue;
        REQUIRE(doubled.a.row(r) == sys.a.row(r));
    }

    const auto damped = update_lambda(sys, {{"D:G2", swing.d + 1.0}});
    REQUIRE(damped.a(row, row) ==
            Approx(sys.a(row, row) - 1.0 / (2.0 * swing.h)).margin(1e-14));

    REQUIRE_THROWS_AS(update_lambda(sys, {{"H:G2", -1.0}}), ConfigError);
    REQUIRE_THROWS_AS(update_lambda(sys, {{"H:nope", 5.0}}), ConfigError);
    REQUIRE_THROWS_AS(update_lambda(sys, {{"X:G2", 5.0}}), ConfigError);
}

TEST_CASE("update_lambda: fast path equals full re-linearization") {
    auto cfg = bundled("three_machine");
    DynamicModel model(cfg.network, cfg.devices, {});
    const auto sys = linearize(model);
    const auto fast = update_lambda(sys, {{"H:G1", 7.5}, {"D:G3", 3.25}});

    cfg.devices.machines[0].h = 7.5;
    cfg.devices.machines[2].d = 3.25;
    DynamicModel model2(cfg.network, cfg.devices, {});
    const auto full = linearize(model2);
    REQUIRE((fast.a - full.a).cwiseAbs().maxCoeff() <= 1e-10);
    REQUIRE((fast.e - full.e).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("linearization: matrix dump is readable and labeled") {
    const auto cfg = bundled("smib");
    DynamicModel model(cfg.network, cfg.devices, {});
    const auto sys = linearize(model);
    std::ostringstream os;
    dump_system(sys, os);
    const std::string text = os.str();
    REQUIRE(text.find("# states: omega:G1") != std::string::npos);
    REQUIRE(text.find("A " + std::to_string(sys.a.rows())) != std::string::npos);
    REQUIRE(text.find("E ") != std::string::npos);
}
