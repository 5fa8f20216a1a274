#include "spharma/sphere_harmonics.hpp"

#include <Eigen/Eigenvalues>

namespace spharma {

namespace {

constexpr double kPi = std::numbers::pi;

void check_degree(int l, int m)
{
    if (l < 0 || std::abs(m) > l)
        throw std::out_of_range("real harmonic index out of range: l=" + std::to_string(l) +
                                ", m=" + std::to_string(m));
}

// Longitude Fourier basis cos(m lon_j), sin(m lon_j) for m = 0..lmax.
void longitude_basis(int lmax, int n_lon, Eigen::MatrixXd& cos_tab, Eigen::MatrixXd& sin_tab)
{
    cos_tab.resize(lmax + 1, n_lon);
    sin_tab.resize(lmax + 1, n_lon);
    for (int j = 0; j < n_lon; ++j) {
        const double phi = 2.0 * kPi * j / n_lon;
        for (int m = 0; m <= lmax; ++m) {
            cos_tab(m, j) = std::cos(m * phi);
            sin_tab(m, j) = std::sin(m * phi);
        }
    }
}

} // namespace

double real_sph_harm(int l, int m, double colat, double lon)
{
    check_degree(l, m);
    const int am = std::abs(m);
    const double plm = normalized_legendre(l, std::cos(colat))(l, am);
    if (m == 0)
        return plm;
    if (m > 0)
        return std::numbers::sqrt2 * plm * std::cos(am * lon);
    return std::numbers::sqrt2 * plm * std::sin(am * lon);
}

Eigen::VectorXd real_sph_harm_all(int lmax, double colat, double lon)
{
    const Eigen::MatrixXd p = normalized_legendre(lmax, std::cos(colat));
    Eigen::VectorXd y(harmonic_count(lmax));
    for (int l = 0; l <= lmax; ++l) {
        y(harmonic_index(l, 0)) = p(l, 0);
        for (int m = 1; m <= l; ++m) {
            y(harmonic_index(l, m)) = std::numbers::sqrt2 * p(l, m) * std::cos(m * lon);
            y(harmonic_index(l, -m)) = std::numbers::sqrt2 * p(l, m) * std::sin(m * lon);
        }
    }
    return y;
}

Eigen::Vector3d unit_vector(double colat, double lon)
{
    return {std::sin(colat) * std::cos(lon), std::sin(colat) * std::sin(lon), std::cos(colat)};
}

// Golub-Welsch for the starting nodes, then Newton polish on P_n and the
// classical weight formula 2 / ((1 - x^2) P_n'(x)^2).
void gauss_legendre(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights)
{
    if (n < 1)
        throw std::invalid_argument("gauss_legendre: need at least one node");
    nodes.resize(n);
    weights.resize(n);
    if (n == 1) {
        nodes(0) = 0.0;
        weights(0) = 2.0;
        return;
    }

    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double beta = k / std::sqrt(4.0 * k * k - 1.0);
        jacobi(k, k - 1) = beta;
        jacobi(k - 1, k) = beta;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi, Eigen::EigenvaluesOnly);
    nodes = solver.eigenvalues();

    for (int i = 0; i < n; ++i) {
        double x = nodes(i);
        double dp = 1.0;
        for (int iter = 0; iter < 4; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 1; k < n; ++k) {
                const double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            x -= p1 / dp;
        }
        nodes(i) = x;
        weights(i) = 2.0 / ((1.0 - x * x) * dp * dp);
    }
}

SphereGrid build_grid(int band_limit)
{
    if (band_limit < 0)
        throw std::invalid_argument("build_grid: negative band limit");
    SphereGrid grid;
    grid.band_limit = band_limit;
    Eigen::VectorXd x, w;
    gauss_legendre(band_limit + 1, x, w);
    // Colatitudes increase as cos(colat) decreases.
    grid.colatitudes = x.reverse().array().acos();
    grid.colat_weights = w.reverse();
    grid.n_lon = 2 * band_limit + 1;
    return grid;
}

HarmonicCoefficients sht_forward(const FieldSnapshot& field, int band_limit)
{
    const SphereGrid& grid = field.grid;
    if (field.values.rows() != grid.n_colat() || field.values.cols() != grid.n_lon)
        throw std::invalid_argument("sht_forward: field dimensions do not match grid");
    if (band_limit < 0)
        throw std::invalid_argument("sht_forward: negative band limit");

    Eigen::MatrixXd cos_tab, sin_tab;
    longitude_basis(band_limit, grid.n_lon, cos_tab, sin_tab);
    // Ring Fourier sums, (m, ring).
    const double dphi = 2.0 * kPi / grid.n_lon;
    const Eigen::MatrixXd ring_cos = dphi * cos_tab * field.values.transpose();
    const Eigen::MatrixXd ring_sin = dphi * sin_tab * field.values.transpose();

    HarmonicCoefficients a(band_limit);
    for (Eigen::Index i = 0; i < grid.n_colat(); ++i) {
        const Eigen::MatrixXd p = normalized_legendre(band_limit, std::cos(grid.colatitudes(i)));
        const double w = grid.colat_weights(i);
        for (int l = 0; l <= band_limit; ++l) {
            a(l, 0) += w * p(l, 0) * ring_cos(0, i);
            for (int m = 1; m <= l; ++m) {
                a(l, m) += w * std::numbers::sqrt2 * p(l, m) * ring_cos(m, i);
                a(l, -m) += w * std::numbers::sqrt2 * p(l, m) * ring_sin(m, i);
            }
        }
    }
    return a;
}

FieldSnapshot sht_inverse(const HarmonicCoefficients& coeffs, const SphereGrid& grid)
{
    const int lmax = coeffs.band_limit;
    if (lmax > grid.band_limit)
        throw std::invalid_argument("sht_inverse: coefficient degree " + std::to_string(lmax) +
                                    " exceeds grid band limit " +
                                    std::to_string(grid.band_limit));

    Eigen::MatrixXd cos_tab, sin_tab;
    longitude_basis(lmax, grid.n_lon, cos_tab, sin_tab);

    // Per ring, fold the colatitude part into Fourier amplitudes (m, ring).
    Eigen::MatrixXd amp_cos = Eigen::MatrixXd::Zero(lmax + 1, grid.n_colat());
    Eigen::MatrixXd amp_sin = Eigen::MatrixXd::Zero(lmax + 1, grid.n_colat());
    for (Eigen::Index i = 0; i < grid.n_colat(); ++i) {
        const Eigen::MatrixXd p = normalized_legendre(lmax, std::cos(grid.colatitudes(i)));
        for (int l = 0; l <= lmax; ++l) {
            amp_cos(0, i) += coeffs(l, 0) * p(l, 0);
            for (int m = 1; m <= l; ++m) {
                amp_cos(m, i) += std::numbers::sqrt2 * coeffs(l, m) * p(l, m);
                amp_sin(m, i) += std::numbers::sqrt2 * coeffs(l, -m) * p(l, m);
            }
        }
    }

    FieldSnapshot field;
    field.grid = grid;
    field.values = amp_cos.transpose() * cos_tab + amp_sin.transpose() * sin_tab;
    return field;
}

double grid_norm_squared(const FieldSnapshot& field)
{
    double total = 0.0;
    for (Eigen::Index i = 0; i < field.values.rows(); ++i)
        total += field.grid.weight(i) * field.values.row(i).squaredNorm();
    return total;
}

} // namespace spharma
