#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "probe/dynamics.hpp"

using namespace probe;

namespace {

std::vector<double> linspace(double t0, double t1, int n) {
    std::vector<double> t(n);
    for (int i = 0; i < n; ++i) t[i] = t0 + (t1 - t0) * double(i) / double(n - 1);
    return t;
}

DensityMatrix coherent_cavity(const CompositeSpace& s, Complex alpha) {
    return DensityMatrix::pure(
        s, product_state(s, fock_vector(s.atom_dim, 0), coherent_vector(s.cav_cutoff, alpha)));
}

}  // namespace

TEST_CASE("hamiltonian_atomic on the N=2 sector") {
    const CompositeSpace s = build_space(2, 0);
    ModelParams p;
    p.kappa = 0.7;
    p.r_tun = 1.3;
    const Matrix h = hamiltonian_atomic(s, p).matrix;
    const double rt2 = std::sqrt(2.0);
    Matrix expected(3, 3);
    expected << 2 * 0.7, rt2 * 1.3, 0, rt2 * 1.3, 0, rt2 * 1.3, 0, rt2 * 1.3, 2 * 0.7;
    CHECK((h - expected).cwiseAbs().maxCoeff() <= 1e-14);

    ModelParams free;
    free.e0 = 0.4;
    const Matrix h0 = hamiltonian_atomic(s, free).matrix;
    CHECK((h0 - 0.8 * Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-15);

    // N=1, kappa=0: R sigma_x with eigenvalues +-R
    ModelParams rabi;
    rabi.r_tun = 2.5;
    const Matrix h1 = hamiltonian_atomic(build_space(1, 0), rabi).matrix;
    Eigen::SelfAdjointEigenSolver<Matrix> es(h1);
    CHECK(es.eigenvalues()(0) == doctest::Approx(-2.5));
    CHECK(es.eigenvalues()(1) == doctest::Approx(2.5));
}

TEST_CASE("hamiltonian_interaction is diagonal beta*n1*na") {
    const CompositeSpace s = build_space(2, 3);
    ModelParams p;
    p.beta = 0.5;
    const Matrix h = hamiltonian_interaction(s, p).matrix;
    CHECK(h(s.index(2, 3), s.index(2, 3)).real() == doctest::Approx(3.0));
    CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() == 0.0);

    ModelParams off;
    CHECK(hamiltonian_interaction(s, off).matrix.cwiseAbs().maxCoeff() == 0.0);

    const Matrix n1 = number_op_well1(s).matrix;
    const Operator a = cavity_annihilation(s);
    const Matrix photon = a.matrix.adjoint() * a.matrix;
    CHECK((h * n1 - n1 * h).cwiseAbs().maxCoeff() == 0.0);
    CHECK((h * photon - photon * h).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("lindblad_rhs basic structure") {
    const CompositeSpace s = build_space(1, 2);
    const Vector psi = product_state(s, fock_vector(2, 1), fock_vector(3, 1));
    const DensityMatrix rho = DensityMatrix::pure(s, psi);

    ModelParams zero;
    CHECK(lindblad_rhs(rho, zero, false).cwiseAbs().maxCoeff() == 0.0);

    ModelParams p;
    p.kappa = 0.3;
    p.r_tun = 1.1;
    p.beta = 0.2;
    p.gamma = 2.0;
    p.n_thermal = 0.3;
    const Matrix out = lindblad_rhs(rho, p, false);
    CHECK(std::abs(out.trace()) <= 1e-14);
    CHECK((out - out.adjoint()).cwiseAbs().maxCoeff() <= 1e-14);

    const Matrix out_driven = lindblad_rhs(rho, p, true);
    CHECK(std::abs(out_driven.trace()) <= 1e-14);
}

TEST_CASE("damped cavity follows the analytic decay law") {
    const CompositeSpace s = build_space(0, 22);
    const Complex alpha(1.5, 0.0);
    const DensityMatrix rho0 = coherent_cavity(s, alpha);
    ModelParams p;
    p.gamma = 1.0;

    const Operator a = cavity_annihilation(s);
    const Operator n = Operator{s, a.matrix.adjoint() * a.matrix};
    const auto grid = linspace(0.0, 3.0, 31);
    const Trajectory traj =
        evolve_master(rho0, grid, p, false, {{"a", a}, {"n", n}}, SolverOptions{});

    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double t = grid[i];
        const double exact_n = 2.25 * std::exp(-t);
        CHECK(traj.observables.at("n")[i].real() ==
              doctest::Approx(exact_n).epsilon(1e-7));
        const Complex exact_a = alpha * std::exp(-0.5 * t);
        CHECK(std::abs(traj.observables.at("a")[i] - exact_a) <= 1e-7);
    }
    CHECK(traj.stats.max_trace_dev <= 1e-8);
    CHECK(traj.stats.max_herm_err <= 1e-9);
    CHECK(traj.stats.positivity_certified);
}

TEST_CASE("frozen dynamics when all rates vanish") {
    const CompositeSpace s = build_space(1, 2);
    const Vector psi = product_state(s, fock_vector(2, 1), fock_vector(3, 0));
    const DensityMatrix rho0 = DensityMatrix::pure(s, psi);
    ModelParams zero;
    const Trajectory traj = evolve_master(rho0, linspace(0.0, 2.0, 5), zero, false, {},
                                          SolverOptions{.store_states = true});
    for (const auto& st : traj.states)
        CHECK((st.matrix - rho0.matrix).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(!traj.stats.cutoff_flag);
}

TEST_CASE("cutoff monitor flags population near the truncation boundary") {
    const CompositeSpace s = build_space(0, 3);
    const Vector psi = product_state(s, fock_vector(1, 0), fock_vector(4, 2));
    const DensityMatrix rho0 = DensityMatrix::pure(s, psi);
    ModelParams p;
    p.gamma = 1.0;
    const Trajectory traj = evolve_master(rho0, linspace(0.0, 1.0, 3), p, false, {});
    CHECK(traj.stats.cutoff_flag);
    CHECK(traj.stats.top_fock_max > 1e-6);
}

TEST_CASE("two-level Rabi oscillation") {
    const CompositeSpace s = build_space(1, 0);
    const DensityMatrix rho0 = DensityMatrix::pure(s, fock_vector(2, 1));
    ModelParams p;
    p.r_tun = 1.0;
    const Operator n1 = number_op_well1(s);
    const auto grid = linspace(0.0, 6.0, 61);
    const Trajectory traj = evolve_master(rho0, grid, p, false, {{"n1", n1}}, SolverOptions{});
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double c = std::cos(grid[i]);
        CHECK(traj.observables.at("n1")[i].real() == doctest::Approx(c * c).epsilon(1e-7));
        CHECK(std::abs(traj.observables.at("n1")[i].imag()) <= 1e-10);
    }
}

TEST_CASE("thermal dissipator pumps the cavity to n = N_c") {
    const CompositeSpace s = build_space(0, 24);
    const DensityMatrix rho0 =
        DensityMatrix::pure(s, product_state(s, fock_vector(1, 0), fock_vector(25, 0)));
    ModelParams p;
    p.gamma = 2.0;
    p.n_thermal = 0.4;
    const Operator a = cavity_annihilation(s);
    const Operator n = Operator{s, a.matrix.adjoint() * a.matrix};
    const Trajectory traj =
        evolve_master(rho0, linspace(0.0, 12.0, 13), p, false, {{"n", n}}, SolverOptions{});
    CHECK(traj.observables.at("n").back().real() == doctest::Approx(0.4).epsilon(1e-6));
}

TEST_CASE("frame consistency: undriven and driven generators agree when the pump is off") {
    const CompositeSpace s = build_space(1, 6);
    const Vector psi = product_state(s, fock_vector(2, 1), coherent_vector(6, Complex(0.3, 0.0)));
    const DensityMatrix rho0 = DensityMatrix::pure(s, psi);
    ModelParams p;
    p.kappa = 0.2;
    p.r_tun = 1.0;
    p.beta = 0.4;
    p.gamma = 0.8;
    p.eta = 0.0;
    p.delta_c = 0.0;

    const Operator n1 = number_op_well1(s);
    const Operator a = cavity_annihilation(s);
    const Operator n = Operator{s, a.matrix.adjoint() * a.matrix};
    const auto grid = linspace(0.0, 4.0, 21);
    const Trajectory u = evolve_master(rho0, grid, p, false, {{"n1", n1}, {"n", n}});
    const Trajectory d = evolve_master(rho0, grid, p, true, {{"n1", n1}, {"n", n}});
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(std::abs(u.observables.at("n1")[i] - d.observables.at("n1")[i]) <= 1e-9);
        CHECK(std::abs(u.observables.at("n")[i] - d.observables.at("n")[i]) <= 1e-9);
    }
}

TEST_CASE("driven steady state matches <a> = 2 eta / gamma") {
    const CompositeSpace s = build_space(0, 6);
    const DensityMatrix rho0 =
        DensityMatrix::pure(s, product_state(s, fock_vector(1, 0), fock_vector(7, 0)));
    ModelParams p;
    p.gamma = 1.0;
    p.eta = 0.1;
    const Operator a = cavity_annihilation(s);
    const Trajectory traj =
        evolve_master(rho0, linspace(0.0, 40.0, 11), p, true, {{"a", a}}, SolverOptions{});
    const Complex a_ss = traj.observables.at("a").back();
    CHECK(a_ss.real() == doctest::Approx(0.2).epsilon(1e-8));
    CHECK(std::abs(a_ss.imag()) <= 1e-9);
}

TEST_CASE("integrator tolerance halving shifts observables by less than 10x the tighter tolerance") {
    const CompositeSpace s = build_space(1, 12);
    const Vector psi = product_state(s, fock_vector(2, 1), coherent_vector(12, Complex(0.8, 0.0)));
    const DensityMatrix rho0 = DensityMatrix::pure(s, psi);
    ModelParams p;
    p.kappa = 0.3;
    p.r_tun = 1.0;
    p.beta = 0.15;
    p.gamma = 0.7;
    p.eta = 0.1;
    const Operator n1 = number_op_well1(s);
    const Operator a = cavity_annihilation(s);
    const Operator n = Operator{s, a.matrix.adjoint() * a.matrix};
    const auto grid = linspace(0.0, 5.0, 26);

    SolverOptions loose;
    SolverOptions tight;
    tight.atol = 0.5 * loose.atol;
    tight.rtol = 0.5 * loose.rtol;
    const Trajectory t1 = evolve_master(rho0, grid, p, true, {{"n1", n1}, {"n", n}}, loose);
    const Trajectory t2 = evolve_master(rho0, grid, p, true, {{"n1", n1}, {"n", n}}, tight);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(std::abs(t1.observables.at("n1")[i] - t2.observables.at("n1")[i]) <=
              10.0 * tight.rtol);
        CHECK(std::abs(t1.observables.at("n")[i] - t2.observables.at("n")[i]) <=
              10.0 * tight.rtol);
    }
}

TEST_CASE("expectation values") {
    const CompositeSpace s = build_space(2, 1);
    const Vector psi = product_state(s, fock_vector(3, 2), fock_vector(2, 0));
    const DensityMatrix rho = DensityMatrix::pure(s, psi);
    const Operator id = identity_op(s);
    const Operator n1 = number_op_well1(s);
    CHECK(expectation(rho, id).real() == doctest::Approx(1.0));
    CHECK(expectation(rho, n1).real() == doctest::Approx(2.0));

    const Operator a = cavity_annihilation(s);
    const Operator ad = Operator{s, a.matrix.adjoint().eval()};
    const Vector sup = product_state(
        s, fock_vector(3, 1),
        (fock_vector(2, 0) + Complex(0.0, 1.0) * fock_vector(2, 1)) / std::sqrt(2.0));
    const DensityMatrix rho2 = DensityMatrix::pure(s, sup);
    CHECK(std::abs(expectation(rho2, ad) - std::conj(expectation(rho2, a))) <= 1e-14);

    CHECK_THROWS_AS(expectation(rho, identity_op(build_space(1, 1))), DimensionError);
}

TEST_CASE("quantum jumps: gamma = 0 reproduces Schroedinger evolution") {
    const CompositeSpace s = build_space(1, 0);
    const Vector psi0 = fock_vector(2, 1);
    ModelParams p;
    p.r_tun = 1.0;
    const Operator n1 = number_op_well1(s);
    const auto grid = linspace(0.0, 3.0, 16);
    const Trajectory j = quantum_jump_evolve(psi0, s, grid, p, false, 3, 99, {{"n1", n1}});
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double c = std::cos(grid[i]);
        CHECK(j.observables.at("n1")[i].real() == doctest::Approx(c * c).epsilon(1e-6));
    }
    CHECK(j.stats.total_jumps == 0.0);
    // the ensemble average of identical pure trajectories stays a projector
    const Matrix m = j.states.back().matrix;
    CHECK((m * m - m).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("quantum jumps: fixed seed is bit-identical") {
    const CompositeSpace s = build_space(0, 5);
    const Vector psi0 = product_state(s, fock_vector(1, 0),
                                      (fock_vector(6, 0) + fock_vector(6, 2)) / std::sqrt(2.0));
    ModelParams p;
    p.gamma = 1.0;
    const Operator a = cavity_annihilation(s);
    const Operator n = Operator{s, a.matrix.adjoint() * a.matrix};
    const auto grid = linspace(0.0, 2.0, 9);
    const Trajectory r1 = quantum_jump_evolve(psi0, s, grid, p, false, 1, 1234, {{"n", n}});
    const Trajectory r2 = quantum_jump_evolve(psi0, s, grid, p, false, 1, 1234, {{"n", n}});
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(r1.observables.at("n")[i].real() == r2.observables.at("n")[i].real());
        CHECK(r1.observables.at("n")[i].imag() == r2.observables.at("n")[i].imag());
    }
    CHECK(r1.stats.total_jumps == r2.stats.total_jumps);
}

TEST_CASE("quantum jumps converge to the master equation as 1/sqrt(n_traj)") {
    const CompositeSpace s = build_space(0, 5);
    const Vector psi0 = product_state(s, fock_vector(1, 0),
                                      (fock_vector(6, 0) + fock_vector(6, 2)) / std::sqrt(2.0));
    ModelParams p;
    p.gamma = 1.0;
    const auto grid = linspace(0.0, 3.0, 13);
    const DensityMatrix rho0 = DensityMatrix::pure(s, psi0);
    const Trajectory master =
        evolve_master(rho0, grid, p, false, {}, SolverOptions{.store_states = true});

    double prev_err = 1e9;
    int n_prev = 0;
    for (int n_traj : {250, 1000, 4000}) {
        const Trajectory j = quantum_jump_evolve(psi0, s, grid, p, false, n_traj,
                                                 20260810u + n_traj, {});
        double err = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i)
            err = std::max(err, trace_distance(j.states[i], master.states[i]));
        CHECK(err <= 5.0 / std::sqrt(double(n_traj)));
        if (n_prev > 0) CHECK(err < prev_err);
        prev_err = err;
        n_prev = n_traj;
    }
}

TEST_CASE("quantum jump preconditions") {
    const CompositeSpace s = build_space(0, 2);
    Vector bad = fock_vector(3, 0) * 2.0;
    ModelParams p;
    p.gamma = 1.0;
    CHECK_THROWS_AS(
        quantum_jump_evolve(bad, s, {0.0, 1.0}, p, false, 4, 7, {}),
        NumericalFault);
    CHECK_THROWS_AS(
        quantum_jump_evolve(fock_vector(3, 0), s, {0.0, 1.0}, p, false, 0, 7, {}),
        SchemaError);
}
