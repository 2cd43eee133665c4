#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <utility>

#include "probe/errors.hpp"

namespace probe {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

// Density-matrix invariant tolerances.
inline constexpr double kHermTol = 1e-10;
inline constexpr double kTraceTol = 1e-8;
inline constexpr double kEigFloor = -1e-8;

// Fixed-N atomic sector (dimension N+1) tensored with a truncated cavity Fock
// space. Basis ordering is atomic-major: index = n1 * cav_dim + n_a.
struct CompositeSpace {
    int n_atoms = 0;
    int cav_cutoff = 0;
    int atom_dim = 1;
    int cav_dim = 1;
    int total_dim = 1;

    int index(int n1, int na) const { return n1 * cav_dim + na; }
    std::pair<int, int> labels(int idx) const { return {idx / cav_dim, idx % cav_dim}; }
    bool operator==(const CompositeSpace&) const = default;
};

CompositeSpace build_space(int n_atoms, int cav_cutoff);

// Dense operator on the composite space. Values are immutable after
// construction and safe to share across threads.
struct Operator {
    CompositeSpace space;
    Matrix matrix;

    double hermiticity_error() const { return (matrix - matrix.adjoint()).cwiseAbs().maxCoeff(); }
};

enum class Factor { atom, cavity };

// Matrices on a single factor, used as embed() operands.
Matrix atomic_number_matrix(int n_atoms);       // diag(n1)
Matrix atomic_hop_matrix(int n_atoms);          // c1+ c2 + c2+ c1
Matrix atomic_onsite_matrix(int n_atoms);       // diag(n1(n1-1) + (N-n1)(N-n1-1))
Matrix cavity_annihilation_matrix(int cav_cutoff);

// op (x) 1 or 1 (x) op in the atomic-major index convention.
Operator embed(const Matrix& op, Factor which, const CompositeSpace& space);

Operator number_op_well1(const CompositeSpace& space);
Operator tunneling_op(const CompositeSpace& space);
Operator onsite_interaction_op(const CompositeSpace& space);
Operator cavity_annihilation(const CompositeSpace& space);
Operator identity_op(const CompositeSpace& space);

// State vector helpers. coherent_vector enforces the truncation rule: the
// probability mass above the cutoff must be < 1e-8.
Vector fock_vector(int dim, int n);
Vector coherent_vector(int cav_cutoff, Complex alpha);
Vector product_state(const CompositeSpace& space, const Vector& atom, const Vector& cav);

struct DensityMatrix {
    CompositeSpace space;
    Matrix matrix;

    // Checks Hermiticity (1e-10), trace (1e-8) and positivity (-1e-8) and
    // throws NumericalFault naming `context` on violation.
    static DensityMatrix validated(const CompositeSpace& space, Matrix m,
                                   const std::string& context);
    // No invariant checks; for internal producers that already verified them.
    static DensityMatrix trusted(const CompositeSpace& space, Matrix m);
    static DensityMatrix pure(const CompositeSpace& space, const Vector& psi);

    double trace_error() const { return std::abs(matrix.trace().real() - 1.0) +
                                        std::abs(matrix.trace().imag()); }
    double hermiticity_error() const { return (matrix - matrix.adjoint()).cwiseAbs().maxCoeff(); }
    double min_eigenvalue() const;
    // Cheap certificate that min eigenvalue >= -floor (Cholesky of m + floor*I).
    bool positivity_certified(double floor = -kEigFloor) const;
};

}  // namespace probe
