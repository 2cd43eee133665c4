#include "probe/phase_space.hpp"

#include <cmath>
#include <iostream>

namespace probe {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

PhaseGrid PhaseGrid::symmetric(double half_width, int n_points) {
    if (half_width <= 0.0) throw SchemaError("PhaseGrid: half_width must be > 0");
    if (n_points < 2) throw SchemaError("PhaseGrid: need at least 2 points per axis");
    PhaseGrid g;
    g.x.resize(n_points);
    g.p.resize(n_points);
    for (int i = 0; i < n_points; ++i) {
        const double v = -half_width + 2.0 * half_width * double(i) / double(n_points - 1);
        g.x[i] = v;
        g.p[i] = v;
    }
    return g;
}

double WignerMap::cell_area() const {
    const double dx = grid.x[1] - grid.x[0];
    const double dp = grid.p[1] - grid.p[0];
    return dx * dp;
}

DensityMatrix reduce_to_cavity(const DensityMatrix& rho) {
    const CompositeSpace& s = rho.space;
    const CompositeSpace cav = build_space(0, s.cav_cutoff);
    Matrix out = Matrix::Zero(s.cav_dim, s.cav_dim);
    for (int na = 0; na < s.cav_dim; ++na)
        for (int ma = 0; ma < s.cav_dim; ++ma) {
            Complex acc(0.0, 0.0);
            for (int n1 = 0; n1 < s.atom_dim; ++n1)
                acc += rho.matrix(s.index(n1, na), s.index(n1, ma));
            out(na, ma) = acc;
        }
    return DensityMatrix::trusted(cav, std::move(out));
}

DensityMatrix to_lab_frame(const DensityMatrix& rho_c, double omega_p, double t) {
    if (rho_c.space.atom_dim != 1)
        throw DimensionError("to_lab_frame: expected a cavity-only state");
    Matrix out = rho_c.matrix;
    const int d = rho_c.space.cav_dim;
    for (int na = 0; na < d; ++na)
        for (int ma = 0; ma < d; ++ma) {
            const double phase = -double(na - ma) * omega_p * t;
            out(na, ma) *= Complex(std::cos(phase), std::sin(phase));
        }
    return DensityMatrix::trusted(rho_c.space, std::move(out));
}

WignerMap wigner(const DensityMatrix& rho_c, const PhaseGrid& grid) {
    if (rho_c.space.atom_dim != 1)
        throw DimensionError("wigner: expected a cavity-only state");
    const int d = rho_c.space.cav_dim;
    const int nx = int(grid.x.size());
    const int np = int(grid.p.size());

    // sqrt(n!/m!) for n >= m, as sfac(n)/sfac(m) with sfac(n) = sqrt(n!)
    std::vector<double> sfac(d);
    sfac[0] = 1.0;
    for (int n = 1; n < d; ++n) sfac[n] = sfac[n - 1] * std::sqrt(double(n));

    WignerMap map;
    map.grid = grid;
    map.values.resize(nx, np);

    // W(x,p) = (1/pi) Tr[rho D(2 alpha) Pi],  alpha = (x + i p)/sqrt(2).
    // <n|D(z)|m> = sqrt(m!/n!) z^(n-m) e^(-|z|^2/2) L_m^(n-m)(|z|^2)  (n >= m)
    Eigen::MatrixXd lag(d, d);       // lag(m, k) = L_m^(k)(u)
    std::vector<Complex> zpow(d);
    for (int ix = 0; ix < nx; ++ix) {
        for (int ip = 0; ip < np; ++ip) {
            const Complex alpha(grid.x[ix] / std::sqrt(2.0), grid.p[ip] / std::sqrt(2.0));
            const Complex z = 2.0 * alpha;
            const double u = std::norm(z);
            const double gauss = std::exp(-0.5 * u);

            for (int k = 0; k < d; ++k) {
                lag(0, k) = 1.0;
                if (d > 1) lag(1, k) = 1.0 + double(k) - u;
                for (int m = 2; m < d; ++m)
                    lag(m, k) = ((double(2 * m - 1 + k) - u) * lag(m - 1, k) -
                                 double(m - 1 + k) * lag(m - 2, k)) /
                                double(m);
            }
            zpow[0] = Complex(1.0, 0.0);
            for (int k = 1; k < d; ++k) zpow[k] = zpow[k - 1] * z;

            Complex acc(0.0, 0.0);
            for (int n = 0; n < d; ++n) {
                // diagonal
                const double parity_n = (n % 2 == 0) ? 1.0 : -1.0;
                acc += rho_c.matrix(n, n) * (parity_n * gauss * lag(n, 0));
                for (int m = 0; m < n; ++m) {
                    // D_nm = sqrt(m!/n!) z^(n-m) gauss L_m^(n-m)(u), n > m
                    const double parity_m = (m % 2 == 0) ? 1.0 : -1.0;
                    const Complex dnm =
                        (sfac[m] / sfac[n]) * zpow[n - m] * gauss * lag(m, n - m);
                    // T_nm = D_nm * (-1)^m and T_mn = conj(D_nm) * (-1)^m
                    acc += rho_c.matrix(m, n) * (parity_m * dnm);
                    acc += rho_c.matrix(n, m) * (parity_m * std::conj(dnm));
                }
            }
            map.values(ix, ip) = acc.real() / kPi;
        }
    }

    const double dx = grid.x[1] - grid.x[0];
    const double dp = grid.p[1] - grid.p[0];
    map.norm_sum = map.values.sum() * dx * dp;
    if (std::abs(map.norm_sum - 1.0) > 0.05) {
        map.coarse_warning = true;
        std::cerr << "warning: wigner grid quadrature sums to " << map.norm_sum
                  << "; grid too coarse or too narrow\n";
    }
    return map;
}

namespace {

// Bilinear interpolation; zero outside the grid.
double sample_map(const WignerMap& map, double x, double p) {
    const auto& gx = map.grid.x;
    const auto& gp = map.grid.p;
    if (x < gx.front() || x > gx.back() || p < gp.front() || p > gp.back()) return 0.0;
    const double dx = gx[1] - gx[0];
    const double dp = gp[1] - gp[0];
    const int i = std::min(int((x - gx.front()) / dx), int(gx.size()) - 2);
    const int j = std::min(int((p - gp.front()) / dp), int(gp.size()) - 2);
    const double tx = (x - gx[i]) / dx;
    const double tp = (p - gp[j]) / dp;
    return (1 - tx) * (1 - tp) * map.values(i, j) + tx * (1 - tp) * map.values(i + 1, j) +
           (1 - tx) * tp * map.values(i, j + 1) + tx * tp * map.values(i + 1, j + 1);
}

}  // namespace

AngularProfile angular_profile(const WignerMap& map, double radius, int n_samples) {
    double sum = 0.0, sum2 = 0.0;
    for (int k = 0; k < n_samples; ++k) {
        const double th = 2.0 * kPi * double(k) / double(n_samples);
        const double v = sample_map(map, radius * std::cos(th), radius * std::sin(th));
        sum += v;
        sum2 += v * v;
    }
    const double mean = sum / n_samples;
    const double var = std::max(0.0, sum2 / n_samples - mean * mean);
    return AngularProfile{mean, std::sqrt(var)};
}

double ring_radius_diagnostic(const WignerMap& map) {
    if (map.values.cwiseAbs().maxCoeff() == 0.0)
        throw NumericalFault("ring_radius_diagnostic: degenerate (all-zero) map");
    const double r_max = std::min(std::abs(map.grid.x.back()), std::abs(map.grid.p.back()));
    const double dr = 0.5 * (map.grid.x[1] - map.grid.x[0]);
    const int n_r = int(r_max / dr) + 1;

    double best_r = 0.0, best_v = -1e300;
    std::vector<double> means(n_r);
    for (int k = 0; k < n_r; ++k) {
        const double r = k * dr;
        means[k] = angular_profile(map, r).mean;
        if (means[k] > best_v) {
            best_v = means[k];
            best_r = r;
        }
    }
    // parabolic refinement
    const int k = int(best_r / dr + 0.5);
    if (k > 0 && k + 1 < n_r) {
        const double a = means[k - 1], b = means[k], c = means[k + 1];
        const double denom = a - 2 * b + c;
        if (denom < 0.0) best_r = (k + 0.5 * (a - c) / denom) * dr;
    }
    return best_r;
}

double wigner_purity(const WignerMap& map) {
    return 2.0 * kPi * map.values.array().square().sum() * map.cell_area();
}

}  // namespace probe
