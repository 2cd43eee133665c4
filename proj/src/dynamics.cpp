#include "probe/dynamics.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <cmath>
#include <cstdlib>
#include <iostream>

#include "probe/parallel.hpp"
#include "probe/rng.hpp"

namespace probe {

namespace {

using Sparse = Eigen::SparseMatrix<Complex>;

Sparse to_sparse(const Matrix& m) {
    std::vector<Eigen::Triplet<Complex>> trip;
    for (int j = 0; j < m.cols(); ++j)
        for (int i = 0; i < m.rows(); ++i)
            if (m(i, j) != Complex(0.0, 0.0)) trip.emplace_back(i, j, m(i, j));
    Sparse s(m.rows(), m.cols());
    s.setFromTriplets(trip.begin(), trip.end());
    s.makeCompressed();
    return s;
}

// Shared pieces of the master-equation and jump generators.
struct GeneratorParts {
    Sparse H, a, ad;
    Vector w;  // (gamma/2) * ((1+Nc) diag(a+a) + Nc diag(a a+)), truncation-consistent
    double g1 = 0.0, g2 = 0.0;
};

GeneratorParts build_parts(const CompositeSpace& space, const ModelParams& p, bool driven) {
    GeneratorParts g;
    g.H = to_sparse(hamiltonian_total(space, p, driven).matrix);
    const Matrix c = cavity_annihilation_matrix(space.cav_cutoff);
    g.a = to_sparse(embed(c, Factor::cavity, space).matrix);
    g.ad = Sparse(g.a.adjoint());
    g.g1 = p.gamma * (1.0 + p.n_thermal);
    g.g2 = p.gamma * p.n_thermal;
    const Eigen::VectorXd nd = (c.adjoint() * c).diagonal().real();
    const Eigen::VectorXd md = (c * c.adjoint()).diagonal().real();
    g.w = Vector::Zero(space.total_dim);
    for (int n1 = 0; n1 < space.atom_dim; ++n1)
        for (int na = 0; na < space.cav_dim; ++na)
            g.w(space.index(n1, na)) = 0.5 * (g.g1 * nd(na) + g.g2 * md(na));
    return g;
}

struct MasterRhs {
    const GeneratorParts& g;
    mutable Matrix t1, t2;

    void operator()(const Matrix& rho, Matrix& out) const {
        t1.noalias() = g.H * rho;
        t2.noalias() = rho * g.H;
        out = Complex(0.0, -1.0) * (t1 - t2);
        if (g.g1 != 0.0) {
            t1.noalias() = g.a * rho;
            t2.noalias() = t1 * g.ad;
            out += g.g1 * t2;
        }
        if (g.g2 != 0.0) {
            t1.noalias() = g.ad * rho;
            t2.noalias() = t1 * g.a;
            out += g.g2 * t2;
        }
        out -= g.w.asDiagonal() * rho;
        out -= rho * g.w.asDiagonal();
    }
};

struct JumpRhs {
    const GeneratorParts& g;

    void operator()(const Vector& psi, Vector& out) const {
        out.noalias() = g.H * psi;
        out *= Complex(0.0, -1.0);
        out.array() -= g.w.array() * psi.array();
    }
};

double top_fock_population(const Matrix& rho, const CompositeSpace& space) {
    double pop = 0.0;
    for (int n1 = 0; n1 < space.atom_dim; ++n1) {
        pop += rho(space.index(n1, space.cav_cutoff), space.index(n1, space.cav_cutoff)).real();
        if (space.cav_cutoff >= 1)
            pop += rho(space.index(n1, space.cav_cutoff - 1), space.index(n1, space.cav_cutoff - 1))
                       .real();
    }
    return pop;
}

}  // namespace

void ModelParams::validate() const {
    const double all[] = {e0, kappa, r_tun, beta, gamma, eta, delta_c, omega_c, omega_p, n_thermal};
    for (double v : all)
        if (!std::isfinite(v)) throw SchemaError("ModelParams: non-finite rate");
    if (gamma < 0.0) throw SchemaError("ModelParams: gamma must be >= 0");
    if (n_thermal < 0.0) throw SchemaError("ModelParams: n_thermal must be >= 0");
}

Operator hamiltonian_atomic(const CompositeSpace& space, const ModelParams& p) {
    Matrix m = p.kappa * atomic_onsite_matrix(space.n_atoms) +
               p.r_tun * atomic_hop_matrix(space.n_atoms);
    m.diagonal().array() += p.e0 * double(space.n_atoms);
    return embed(m, Factor::atom, space);
}

Operator hamiltonian_interaction(const CompositeSpace& space, const ModelParams& p) {
    Matrix m = Matrix::Zero(space.total_dim, space.total_dim);
    for (int n1 = 0; n1 < space.atom_dim; ++n1)
        for (int na = 0; na < space.cav_dim; ++na) {
            const int i = space.index(n1, na);
            m(i, i) = p.beta * double(n1) * double(na);
        }
    return Operator{space, std::move(m)};
}

Operator hamiltonian_total(const CompositeSpace& space, const ModelParams& p, bool driven) {
    Matrix h = hamiltonian_atomic(space, p).matrix + hamiltonian_interaction(space, p).matrix;
    if (driven) {
        const Matrix c = cavity_annihilation_matrix(space.cav_cutoff);
        Matrix cav = p.delta_c * (c.adjoint() * c);
        // pump i*eta*(a+ - a); steady state <a> = 2 eta/gamma, real
        cav += Complex(0.0, p.eta) * (c.adjoint() - c);
        h += embed(cav, Factor::cavity, space).matrix;
    }
    return Operator{space, std::move(h)};
}

Matrix lindblad_rhs(const DensityMatrix& rho, const ModelParams& p, bool driven) {
    p.validate();
    const GeneratorParts g = build_parts(rho.space, p, driven);
    MasterRhs rhs{g};
    Matrix out;
    rhs(rho.matrix, out);
    return out;
}

std::vector<double> Trajectory::real_observable(const std::string& name) const {
    auto it = observables.find(name);
    if (it == observables.end())
        throw SchemaError("Trajectory: no observable named '" + name + "'");
    std::vector<double> re(it->second.size());
    for (std::size_t i = 0; i < re.size(); ++i) re[i] = it->second[i].real();
    return re;
}

Complex expectation(const DensityMatrix& rho, const Operator& op) {
    if (!(rho.space == op.space))
        throw DimensionError("expectation: state and operator live on different spaces");
    return (rho.matrix.cwiseProduct(op.matrix.transpose())).sum();
}

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
    if (!(a.space == b.space)) throw DimensionError("trace_distance: space mismatch");
    Matrix d = a.matrix - b.matrix;
    d = 0.5 * (d + d.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(d, Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

int thread_count() {
    static const int cached = [] {
        const int hw = std::max(1u, std::thread::hardware_concurrency());
        if (const char* env = std::getenv("PROBE_THREADS")) {
            const int req = std::atoi(env);
            if (req >= 1) return std::min(req, hw);
        }
        return hw;
    }();
    return cached;
}

Trajectory evolve_master(const DensityMatrix& rho0, const std::vector<double>& t_grid,
                         const ModelParams& p, bool driven, const ObservableSet& observables,
                         const SolverOptions& opts) {
    p.validate();
    for (const auto& [name, op] : observables)
        if (!(op.space == rho0.space))
            throw DimensionError("evolve_master: observable '" + name + "' space mismatch");

    const CompositeSpace space = rho0.space;
    const GeneratorParts parts = build_parts(space, p, driven);
    MasterRhs rhs{parts};

    Trajectory traj;
    traj.times = t_grid;
    for (const auto& [name, op] : observables) traj.observables[name].reserve(t_grid.size());

    bool warned_cutoff = false;
    auto observer = [&](std::size_t i, const Matrix& rho) {
        const double t = t_grid[i];
        if (opts.check_invariants) {
            const double trdev = std::abs(rho.trace() - Complex(1.0, 0.0));
            traj.stats.max_trace_dev = std::max(traj.stats.max_trace_dev, trdev);
            if (trdev > 1e-8)
                throw NumericalFault("evolve_master: trace deviation " + std::to_string(trdev) +
                                     " at t=" + std::to_string(t));
            const double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
            traj.stats.max_herm_err = std::max(traj.stats.max_herm_err, herm);
            if (herm > 1e-9)
                throw NumericalFault("evolve_master: Hermiticity error " + std::to_string(herm) +
                                     " at t=" + std::to_string(t));
            const bool want_exact =
                (opts.exact_eig_stride > 0 &&
                 (i % std::size_t(opts.exact_eig_stride) == 0 || i + 1 == t_grid.size()));
            if (opts.positivity_stride > 0 &&
                (i % std::size_t(opts.positivity_stride) == 0 || i + 1 == t_grid.size())) {
                DensityMatrix tmp = DensityMatrix::trusted(space, rho);
                if (!tmp.positivity_certified() || want_exact) {
                    const double lo = tmp.min_eigenvalue();
                    traj.stats.min_eig_sampled = std::min(traj.stats.min_eig_sampled, lo);
                    if (lo < kEigFloor) {
                        traj.stats.positivity_certified = false;
                        throw NumericalFault("evolve_master: minimum eigenvalue " +
                                             std::to_string(lo) + " at t=" + std::to_string(t));
                    }
                }
            }
        }
        const double top = (space.cav_dim >= 3) ? top_fock_population(rho, space) : 0.0;
        traj.stats.top_fock_max = std::max(traj.stats.top_fock_max, top);
        if (top > 1e-6 && !traj.stats.cutoff_flag) {
            traj.stats.cutoff_flag = true;
            traj.stats.cutoff_flag_time = t;
            if (!warned_cutoff) {
                warned_cutoff = true;
                std::cerr << "warning: cavity cutoff monitor tripped at t=" << t
                          << " (top two Fock levels hold " << top << ")\n";
            }
        }
        for (const auto& [name, op] : observables)
            traj.observables[name].push_back((rho.cwiseProduct(op.matrix.transpose())).sum());
        if (opts.store_states) {
            traj.states.push_back(DensityMatrix::trusted(space, rho));
            traj.state_indices.push_back(i);
        }
    };

    Matrix y = rho0.matrix;
    OdeOptions ode;
    ode.atol = opts.atol;
    ode.rtol = opts.rtol;
    ode.max_steps = opts.max_steps;
    const OdeStats st = integrate_at_times(rhs, y, t_grid, observer, ode);
    traj.stats.n_steps = st.n_steps;
    traj.stats.n_rejected = st.n_rejected;
    traj.stats.n_rhs = st.n_rhs;
    return traj;
}

namespace {

struct TrajectoryBuffer {
    Matrix psi_at;  // total_dim x n_grid, normalized states at grid times
    std::vector<std::vector<Complex>> obs;
    double jumps = 0.0;
    std::int64_t steps = 0;
    std::int64_t rejected = 0;
};

void run_one_trajectory(const Vector& psi0, const GeneratorParts& parts,
                        const std::vector<double>& grid, const ObservableSet& observables,
                        std::uint64_t seed, int traj_index, const JumpOptions& opts,
                        TrajectoryBuffer& out) {
    const int d = int(psi0.size());
    const int n_grid = int(grid.size());
    out.psi_at.resize(d, n_grid);
    out.obs.assign(observables.size(), std::vector<Complex>(n_grid));
    out.jumps = 0.0;

    const JumpRhs rhs{parts};
    OdeOptions ode;
    ode.atol = opts.atol;
    ode.rtol = opts.rtol;
    Dopri5<Vector, const JumpRhs> stepper(rhs, ode);

    Rng rng = Rng::stream(seed, std::uint64_t(traj_index));
    Vector psi = psi0;
    Vector k1(d), k7(d), ynew(d), ytmp(d), ktmp(d);
    rhs(psi, k1);
    double r = rng.uniform_open();
    const bool decays = (parts.g1 != 0.0 || parts.g2 != 0.0);

    auto record = [&](int i) {
        const double n2 = psi.squaredNorm();
        if (n2 < 1e-280)
            throw NumericalFault("quantum_jump_evolve: norm underflow between jumps at t=" +
                                 std::to_string(grid[i]));
        out.psi_at.col(i) = psi / std::sqrt(n2);
        for (std::size_t j = 0; j < observables.size(); ++j) {
            const Vector opy = observables[j].second.matrix * psi;
            out.obs[j][i] = psi.dot(opy) / n2;
        }
    };
    record(0);

    auto apply_jump = [&] {
        const Vector ap = parts.a * psi;
        const double p1 = parts.g1 * ap.squaredNorm();
        double p2 = 0.0;
        Vector adp;
        if (parts.g2 != 0.0) {
            adp = parts.ad * psi;
            p2 = parts.g2 * adp.squaredNorm();
        }
        const double u = rng.uniform01() * (p1 + p2);
        psi = (u < p1 || p2 == 0.0) ? ap : adp;
        psi /= psi.norm();
        out.jumps += 1.0;
        r = rng.uniform_open();
        rhs(psi, k1);
    };

    double t = grid.front();
    double h = 0.0;
    {
        const double span = grid.back() - grid.front();
        const double f = std::sqrt(k1.squaredNorm() / double(d));
        h = (f > 0.0) ? std::min(0.01 / f, span / 100.0) : span / 100.0;
    }

    for (int target = 1; target < n_grid; ++target) {
        const double t_goal = grid[target];
        while (t < t_goal) {
            bool clipped = false;
            double h_try = h;
            if (t + h_try >= t_goal) {
                h_try = t_goal - t;
                clipped = true;
            }
            if (h_try < 1e-14 * std::max(1.0, std::abs(t)))
                throw NumericalFault("quantum_jump_evolve: step underflow at t=" +
                                     std::to_string(t));
            const double err = stepper.try_step(psi, k1, h_try, ynew, k7);
            if (err > 1.0) {
                ++out.rejected;
                h = h_try * std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
                continue;
            }
            ++out.steps;
            if (decays && ynew.squaredNorm() <= r) {
                // the squared norm decreases monotonically; bisect for the
                // crossing inside (t, t + h_try]
                double lo = 0.0, hi = h_try;
                for (int it = 0; it < 80 && hi - lo > 1e-13 * h_try; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    if (mid <= lo || mid >= hi) break;
                    stepper.try_step(psi, k1, mid, ytmp, ktmp);
                    if (ytmp.squaredNorm() > r)
                        lo = mid;
                    else
                        hi = mid;
                }
                stepper.try_step(psi, k1, hi, ytmp, ktmp);
                t += hi;
                psi = ytmp;
                apply_jump();
                continue;
            }
            t = clipped ? t_goal : t + h_try;
            psi.swap(ynew);
            k1.swap(k7);
            const double grow = dopri5_accept_factor(err);
            if (!clipped)
                h = h_try * grow;
            else
                h = std::max(h, h_try * grow);
        }
        record(target);
    }
}

}  // namespace

Trajectory quantum_jump_evolve(const Vector& psi0, const CompositeSpace& space,
                               const std::vector<double>& t_grid, const ModelParams& p,
                               bool driven, int n_traj, std::uint64_t seed,
                               const ObservableSet& observables, const JumpOptions& opts) {
    p.validate();
    if (n_traj < 1) throw SchemaError("quantum_jump_evolve: n_traj must be >= 1");
    if (psi0.size() != space.total_dim)
        throw DimensionError("quantum_jump_evolve: psi0 dimension mismatch");
    if (std::abs(psi0.squaredNorm() - 1.0) > 1e-10)
        throw NumericalFault("quantum_jump_evolve: psi0 not normalized");
    for (const auto& [name, op] : observables)
        if (!(op.space == space))
            throw DimensionError("quantum_jump_evolve: observable '" + name + "' space mismatch");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1]))
            throw NumericalFault("quantum_jump_evolve: time grid not strictly increasing");

    const GeneratorParts parts = build_parts(space, p, driven);
    const int n_grid = int(t_grid.size());
    const int d = space.total_dim;

    Trajectory traj;
    traj.times = t_grid;
    std::vector<Matrix> state_sum;
    if (opts.store_states) state_sum.assign(n_grid, Matrix::Zero(d, d));
    std::vector<std::vector<Complex>> obs_sum(observables.size(),
                                              std::vector<Complex>(n_grid, Complex(0.0, 0.0)));
    double jump_sum = 0.0;

    const int block = std::max(1, opts.block_size);
    std::vector<TrajectoryBuffer> buffers(std::min(block, n_traj));
    for (int b0 = 0; b0 < n_traj; b0 += block) {
        const int nb = std::min(block, n_traj - b0);
        parallel_for(nb, [&](int kl) {
            run_one_trajectory(psi0, parts, t_grid, observables, seed, b0 + kl, opts,
                               buffers[kl]);
        });
        // reduce in trajectory order; independent of the thread count
        if (opts.store_states) {
            Matrix gathered(d, nb);
            for (int i = 0; i < n_grid; ++i) {
                for (int kl = 0; kl < nb; ++kl) gathered.col(kl) = buffers[kl].psi_at.col(i);
                state_sum[i].noalias() += gathered * gathered.adjoint();
            }
        }
        for (int kl = 0; kl < nb; ++kl) {
            for (std::size_t j = 0; j < observables.size(); ++j)
                for (int i = 0; i < n_grid; ++i) obs_sum[j][i] += buffers[kl].obs[j][i];
            jump_sum += buffers[kl].jumps;
            traj.stats.n_steps += buffers[kl].steps;
            traj.stats.n_rejected += buffers[kl].rejected;
        }
    }

    const double inv = 1.0 / double(n_traj);
    if (opts.store_states) {
        traj.states.reserve(n_grid);
        for (int i = 0; i < n_grid; ++i) {
            traj.states.push_back(DensityMatrix::trusted(space, inv * state_sum[i]));
            traj.state_indices.push_back(std::size_t(i));
        }
    }
    std::size_t j = 0;
    for (const auto& [name, op] : observables) {
        auto& dst = traj.observables[name];
        dst.resize(n_grid);
        for (int i = 0; i < n_grid; ++i) dst[i] = obs_sum[j][i] * inv;
        ++j;
    }
    traj.stats.total_jumps = jump_sum * inv;
    return traj;
}

}  // namespace probe
