#pragma once

#include <vector>

#include "probe/hilbert.hpp"

namespace probe {

// Quadrature convention: X = (a + a+)/sqrt(2), P = (a - a+)/(i sqrt(2)),
// vacuum variance 1/2. A coherent state |alpha> sits at
// (x, p) = sqrt(2) (Re alpha, Im alpha).
struct PhaseGrid {
    std::vector<double> x;
    std::vector<double> p;

    static PhaseGrid symmetric(double half_width, int n_points);
};

struct WignerMap {
    PhaseGrid grid;
    Eigen::MatrixXd values;  // values(i, j) = W(x[i], p[j])
    double norm_sum = 0.0;   // Riemann sum of W dx dp
    bool coarse_warning = false;

    double cell_area() const;
};

// Partial trace over the atomic sector. The result lives on the 0-atom
// composite space of the same cavity cutoff.
DensityMatrix reduce_to_cavity(const DensityMatrix& rho);

// Restores lab-frame phases: element (n_a, m_a) picks up e^{-i(n_a-m_a) w_p t}.
DensityMatrix to_lab_frame(const DensityMatrix& rho_c, double omega_p, double t);

// Fock-kernel evaluation (displaced-parity / Laguerre expansion) of the
// Wigner function of a cavity state; normalized so the grid quadrature of
// W dx dp is 1 for a well-resolved grid.
WignerMap wigner(const DensityMatrix& rho_c, const PhaseGrid& grid);

// Radius of the angularly averaged maximum of W.
double ring_radius_diagnostic(const WignerMap& wmap);

// 2*pi * sum(W^2) dx dp; equals Tr[rho^2] up to grid resolution.
double wigner_purity(const WignerMap& wmap);

// Mean and standard deviation of W sampled along the circle of radius r.
struct AngularProfile {
    double mean = 0.0;
    double stddev = 0.0;
};
AngularProfile angular_profile(const WignerMap& wmap, double radius, int n_samples = 512);

}  // namespace probe
