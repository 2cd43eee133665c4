#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "probe/hilbert.hpp"
#include "probe/integrate.hpp"

namespace probe {

// All rates are dimensionless ratios of a user-chosen reference rate.
// `e0` is the single-atom well energy; figure-caption omega_a maps onto it.
struct ModelParams {
    double e0 = 0.0;
    double kappa = 0.0;
    double r_tun = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    double eta = 0.0;
    double delta_c = 0.0;
    double omega_c = 0.0;
    double omega_p = 0.0;
    double n_thermal = 0.0;

    void validate() const;
};

Operator hamiltonian_atomic(const CompositeSpace& space, const ModelParams& p);
Operator hamiltonian_interaction(const CompositeSpace& space, const ModelParams& p);

// driven=false: cavity-frame generator (no pump, no detuning).
// driven=true : pump-frame generator with Delta_C a+a and the pump term.
// The pump Hamiltonian is i*eta*(a+ - a), the phase convention under which the
// empty-well steady state is <a> = 2*eta/gamma (real), matching the quadrature
// estimators. Both dissipators carry the thermal (1+Nc)/Nc channels.
Operator hamiltonian_total(const CompositeSpace& space, const ModelParams& p, bool driven);

// Generator applied to rho; traceless, maps Hermitian to Hermitian.
Matrix lindblad_rhs(const DensityMatrix& rho, const ModelParams& p, bool driven);

struct SolverOptions {
    double atol = 1e-10;
    double rtol = 1e-8;
    bool store_states = false;
    bool check_invariants = true;
    int positivity_stride = 1;   // certify min eig >= -1e-8 every k-th output
    int exact_eig_stride = 50;   // sample the exact min eigenvalue every k-th output
    std::int64_t max_steps = 200'000'000;
};

struct SolverStats {
    std::int64_t n_steps = 0;
    std::int64_t n_rejected = 0;
    std::int64_t n_rhs = 0;
    double max_trace_dev = 0.0;
    double max_herm_err = 0.0;
    double min_eig_sampled = 1.0;
    bool positivity_certified = true;
    // Truncation monitor: total population of the top two cavity Fock levels.
    double top_fock_max = 0.0;
    bool cutoff_flag = false;
    double cutoff_flag_time = 0.0;
    double total_jumps = 0.0;  // quantum-jump runs only (mean per trajectory)
};

struct Trajectory {
    std::vector<double> times;
    std::vector<DensityMatrix> states;    // empty unless requested
    std::vector<std::size_t> state_indices;  // grid indices the states belong to
    std::map<std::string, std::vector<Complex>> observables;
    SolverStats stats;

    std::vector<double> real_observable(const std::string& name) const;
};

using ObservableSet = std::vector<std::pair<std::string, Operator>>;

// Adaptive RK integration of the vectorized master equation. rho0 is the
// state at t_grid.front(); states/observables are reported at every grid
// time. Invariant violations beyond tolerance abort with NumericalFault.
Trajectory evolve_master(const DensityMatrix& rho0, const std::vector<double>& t_grid,
                         const ModelParams& p, bool driven, const ObservableSet& observables,
                         const SolverOptions& opts = {});

struct JumpOptions {
    double atol = 1e-9;
    double rtol = 1e-7;
    bool store_states = true;
    int block_size = 64;
};

// Monte-Carlo wavefunction unraveling; the ensemble average over n_traj
// trajectories reproduces evolve_master. Trajectory k derives its random
// stream from (seed, k), so results are reproducible independently of
// execution order.
Trajectory quantum_jump_evolve(const Vector& psi0, const CompositeSpace& space,
                               const std::vector<double>& t_grid, const ModelParams& p,
                               bool driven, int n_traj, std::uint64_t seed,
                               const ObservableSet& observables, const JumpOptions& opts = {});

Complex expectation(const DensityMatrix& rho, const Operator& op);

double trace_distance(const DensityMatrix& a, const DensityMatrix& b);

// Thread count for module-internal parallel loops: PROBE_THREADS, clamped to
// [1, hardware_concurrency]; results are independent of the value.
int thread_count();

}  // namespace probe
