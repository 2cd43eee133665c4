#include "probe/hilbert.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

namespace probe {

CompositeSpace build_space(int n_atoms, int cav_cutoff) {
    if (n_atoms < 0) throw SchemaError("build_space: n_atoms must be >= 0");
    if (cav_cutoff < 0) throw SchemaError("build_space: cav_cutoff must be >= 0");
    CompositeSpace s;
    s.n_atoms = n_atoms;
    s.cav_cutoff = cav_cutoff;
    s.atom_dim = n_atoms + 1;
    s.cav_dim = cav_cutoff + 1;
    s.total_dim = s.atom_dim * s.cav_dim;
    return s;
}

Matrix atomic_number_matrix(int n_atoms) {
    Matrix m = Matrix::Zero(n_atoms + 1, n_atoms + 1);
    for (int n1 = 0; n1 <= n_atoms; ++n1) m(n1, n1) = double(n1);
    return m;
}

Matrix atomic_hop_matrix(int n_atoms) {
    const int d = n_atoms + 1;
    Matrix m = Matrix::Zero(d, d);
    // <n1+1, N-n1-1| c1+ c2 |n1, N-n1> = sqrt((n1+1)(N-n1))
    for (int n1 = 0; n1 + 1 <= n_atoms; ++n1) {
        const double v = std::sqrt(double(n1 + 1) * double(n_atoms - n1));
        m(n1 + 1, n1) = v;
        m(n1, n1 + 1) = v;
    }
    return m;
}

Matrix atomic_onsite_matrix(int n_atoms) {
    const int d = n_atoms + 1;
    Matrix m = Matrix::Zero(d, d);
    for (int n1 = 0; n1 <= n_atoms; ++n1) {
        const double n2 = double(n_atoms - n1);
        m(n1, n1) = double(n1) * (n1 - 1.0) + n2 * (n2 - 1.0);
    }
    return m;
}

Matrix cavity_annihilation_matrix(int cav_cutoff) {
    const int d = cav_cutoff + 1;
    Matrix m = Matrix::Zero(d, d);
    for (int n = 1; n < d; ++n) m(n - 1, n) = std::sqrt(double(n));
    return m;
}

Operator embed(const Matrix& op, Factor which, const CompositeSpace& space) {
    const int fd = (which == Factor::atom) ? space.atom_dim : space.cav_dim;
    if (op.rows() != fd || op.cols() != fd)
        throw DimensionError("embed: operand is " + std::to_string(op.rows()) + "x" +
                             std::to_string(op.cols()) + ", factor dimension is " +
                             std::to_string(fd));
    Matrix m = Matrix::Zero(space.total_dim, space.total_dim);
    if (which == Factor::atom) {
        for (int n1 = 0; n1 < space.atom_dim; ++n1)
            for (int m1 = 0; m1 < space.atom_dim; ++m1) {
                const Complex v = op(n1, m1);
                if (v == Complex(0.0, 0.0)) continue;
                for (int na = 0; na < space.cav_dim; ++na)
                    m(space.index(n1, na), space.index(m1, na)) = v;
            }
    } else {
        for (int na = 0; na < space.cav_dim; ++na)
            for (int ma = 0; ma < space.cav_dim; ++ma) {
                const Complex v = op(na, ma);
                if (v == Complex(0.0, 0.0)) continue;
                for (int n1 = 0; n1 < space.atom_dim; ++n1)
                    m(space.index(n1, na), space.index(n1, ma)) = v;
            }
    }
    return Operator{space, std::move(m)};
}

Operator number_op_well1(const CompositeSpace& space) {
    return embed(atomic_number_matrix(space.n_atoms), Factor::atom, space);
}

Operator tunneling_op(const CompositeSpace& space) {
    return embed(atomic_hop_matrix(space.n_atoms), Factor::atom, space);
}

Operator onsite_interaction_op(const CompositeSpace& space) {
    return embed(atomic_onsite_matrix(space.n_atoms), Factor::atom, space);
}

Operator cavity_annihilation(const CompositeSpace& space) {
    return embed(cavity_annihilation_matrix(space.cav_cutoff), Factor::cavity, space);
}

Operator identity_op(const CompositeSpace& space) {
    return Operator{space, Matrix::Identity(space.total_dim, space.total_dim)};
}

Vector fock_vector(int dim, int n) {
    if (n < 0 || n >= dim) throw SchemaError("fock_vector: level out of range");
    Vector v = Vector::Zero(dim);
    v(n) = 1.0;
    return v;
}

Vector coherent_vector(int cav_cutoff, Complex alpha) {
    const int d = cav_cutoff + 1;
    Vector v(d);
    const double a2 = std::norm(alpha);
    v(0) = std::exp(-0.5 * a2);
    for (int n = 1; n < d; ++n) v(n) = v(n - 1) * alpha / std::sqrt(double(n));
    const double kept = v.squaredNorm();
    if (1.0 - kept >= 1e-8)
        throw SchemaError("coherent_vector: cav_cutoff " + std::to_string(cav_cutoff) +
                          " leaves " + std::to_string(1.0 - kept) +
                          " probability above the cutoff (limit 1e-8)");
    v /= std::sqrt(kept);
    return v;
}

Vector product_state(const CompositeSpace& space, const Vector& atom, const Vector& cav) {
    if (atom.size() != space.atom_dim)
        throw DimensionError("product_state: atomic factor dimension mismatch");
    if (cav.size() != space.cav_dim)
        throw DimensionError("product_state: cavity factor dimension mismatch");
    Vector v(space.total_dim);
    for (int n1 = 0; n1 < space.atom_dim; ++n1)
        for (int na = 0; na < space.cav_dim; ++na) v(space.index(n1, na)) = atom(n1) * cav(na);
    return v;
}

double DensityMatrix::min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(matrix, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

bool DensityMatrix::positivity_certified(double floor) const {
    Matrix shifted = 0.5 * (matrix + matrix.adjoint());
    shifted.diagonal().array() += floor;
    Eigen::LLT<Matrix> llt(shifted);
    return llt.info() == Eigen::Success;
}

DensityMatrix DensityMatrix::validated(const CompositeSpace& space, Matrix m,
                                       const std::string& context) {
    if (m.rows() != space.total_dim || m.cols() != space.total_dim)
        throw DimensionError(context + ": density matrix dimension " +
                             std::to_string(m.rows()) + " does not match space dimension " +
                             std::to_string(space.total_dim));
    DensityMatrix rho{space, std::move(m)};
    const double herm = rho.hermiticity_error();
    if (herm > kHermTol)
        throw NumericalFault(context + ": Hermiticity error " + std::to_string(herm));
    const double trerr = rho.trace_error();
    if (trerr > kTraceTol)
        throw NumericalFault(context + ": trace error " + std::to_string(trerr));
    if (!rho.positivity_certified()) {
        const double lo = rho.min_eigenvalue();
        if (lo < kEigFloor)
            throw NumericalFault(context + ": minimum eigenvalue " + std::to_string(lo));
    }
    return rho;
}

DensityMatrix DensityMatrix::trusted(const CompositeSpace& space, Matrix m) {
    return DensityMatrix{space, std::move(m)};
}

DensityMatrix DensityMatrix::pure(const CompositeSpace& space, const Vector& psi) {
    if (psi.size() != space.total_dim)
        throw DimensionError("DensityMatrix::pure: state dimension mismatch");
    const double n2 = psi.squaredNorm();
    if (std::abs(n2 - 1.0) > 1e-10)
        throw NumericalFault("DensityMatrix::pure: state not normalized");
    return DensityMatrix{space, (psi * psi.adjoint()) / n2};
}

}  // namespace probe
