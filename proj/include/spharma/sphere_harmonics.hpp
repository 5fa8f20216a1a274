#ifndef SPHARMA_SPHERE_HARMONICS_HPP
#define SPHARMA_SPHERE_HARMONICS_HPP

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace spharma {

/// Packed position of (l, m), |m| <= l, in a coefficient vector ordered by l
/// then m = -l..l.
constexpr Eigen::Index harmonic_index(int l, int m) noexcept
{
    return static_cast<Eigen::Index>(l) * l + l + m;
}

/// Number of real harmonics with degree <= band_limit.
constexpr Eigen::Index harmonic_count(int band_limit) noexcept
{
    return static_cast<Eigen::Index>(band_limit + 1) * (band_limit + 1);
}

/// Legendre polynomials P_0(x)..P_lmax(x) by the three-term recurrence
/// (l+1) P_{l+1} = (2l+1) x P_l - l P_{l-1}.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> legendre_all(int lmax, Scalar x)
{
    using std::abs;
    if (lmax < 0)
        throw std::invalid_argument("legendre_all: negative degree");
    if (!(abs(x) <= Scalar(1)))
        throw std::domain_error("legendre_all: |x| > 1");

    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> p(lmax + 1);
    p(0) = Scalar(1);
    if (lmax >= 1)
        p(1) = x;
    for (int l = 1; l < lmax; ++l)
        p(l + 1) = (Scalar(2 * l + 1) * x * p(l) - Scalar(l) * p(l - 1)) / Scalar(l + 1);
    return p;
}

/// Orthonormalised associated Legendre functions
/// sqrt((2l+1)/(4pi) (l-m)!/(l+m)!) P_l^m(cos colat), without the
/// Condon-Shortley phase, for 0 <= m <= l <= lmax. Entry (l, m) is stored at
/// row l, column m; the upper triangle is zero.
///
/// Upward recurrence in l at fixed m, seeded from the sectoral values.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> normalized_legendre(int lmax, Scalar x)
{
    using std::sqrt;
    using std::abs;
    if (lmax < 0)
        throw std::invalid_argument("normalized_legendre: negative degree");
    if (!(abs(x) <= Scalar(1)))
        throw std::domain_error("normalized_legendre: |x| > 1");

    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> p =
        Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(lmax + 1, lmax + 1);
    const Scalar s = sqrt(std::max(Scalar(0), (Scalar(1) - x) * (Scalar(1) + x)));

    Scalar pmm = Scalar(1) / sqrt(Scalar(4) * std::numbers::pi_v<Scalar>);
    for (int m = 0; m <= lmax; ++m) {
        if (m > 0)
            pmm *= s * sqrt(Scalar(2 * m + 1) / Scalar(2 * m));
        p(m, m) = pmm;
        if (m + 1 <= lmax)
            p(m + 1, m) = x * sqrt(Scalar(2 * m + 3)) * pmm;
        for (int l = m + 2; l <= lmax; ++l) {
            const Scalar ll = Scalar(l) * l;
            const Scalar mm = Scalar(m) * m;
            const Scalar a = sqrt((Scalar(4) * ll - Scalar(1)) / (ll - mm));
            const Scalar lm1 = Scalar(l - 1) * (l - 1);
            const Scalar b = sqrt((lm1 - mm) / (Scalar(4) * lm1 - Scalar(1)));
            p(l, m) = a * (x * p(l - 1, m) - b * p(l - 2, m));
        }
    }
    return p;
}

/// Real orthonormal spherical harmonic: cosine branch for m > 0, sine branch
/// for m < 0, zonal for m = 0. No Condon-Shortley phase.
///
/// The complex harmonics are recovered as
/// Y^C_{l,m} = (Y_{l,|m|} + i Y_{l,-|m|}) / sqrt(2) for m > 0 (times (-1)^m
/// with the Condon-Shortley convention), and conjugate for m < 0.
double real_sph_harm(int l, int m, double colat, double lon);

/// All real harmonics with degree <= lmax at one point, packed by harmonic_index.
Eigen::VectorXd real_sph_harm_all(int lmax, double colat, double lon);

/// Real harmonic coefficients a_{lm} for l <= band_limit, packed by harmonic_index.
struct HarmonicCoefficients {
    int band_limit = 0;
    Eigen::VectorXd values;

    HarmonicCoefficients() : values(Eigen::VectorXd::Zero(1)) {}
    explicit HarmonicCoefficients(int lmax)
        : band_limit(lmax), values(Eigen::VectorXd::Zero(harmonic_count(lmax)))
    {
        if (lmax < 0)
            throw std::invalid_argument("HarmonicCoefficients: negative band limit");
    }

    double& operator()(int l, int m) { return values(harmonic_index(l, m)); }
    double operator()(int l, int m) const { return values(harmonic_index(l, m)); }
};

/// Gauss-Legendre nodes in cos(colatitude) crossed with equiangular longitudes.
struct SphereGrid {
    int band_limit = 0;
    Eigen::VectorXd colatitudes;   ///< in (0, pi), increasing
    Eigen::VectorXd colat_weights; ///< Gauss weights in cos(colat); sum to 2
    int n_lon = 1;

    Eigen::Index n_colat() const noexcept { return colatitudes.size(); }
    double longitude(int j) const noexcept
    {
        return 2.0 * std::numbers::pi * j / n_lon;
    }
    /// Quadrature weight of node (i, j) on the unit sphere.
    double weight(Eigen::Index i) const noexcept
    {
        return colat_weights(i) * 2.0 * std::numbers::pi / n_lon;
    }
};

/// Field values on a grid at one time.
struct FieldSnapshot {
    SphereGrid grid;
    Eigen::MatrixXd values; ///< (colatitude, longitude)
    long time_index = 0;
};

/// Gauss-Legendre nodes and weights on [-1, 1], nodes increasing.
void gauss_legendre(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights);

/// L+1 Gauss colatitudes and 2L+1 longitudes: exact for products of harmonics
/// with degree <= L.
SphereGrid build_grid(int band_limit);

/// Projects a field on the real harmonics up to degree band_limit by longitude
/// Fourier sums followed by Gauss quadrature in colatitude. Exact for fields
/// band-limited at the grid's band limit; higher content aliases.
HarmonicCoefficients sht_forward(const FieldSnapshot& field, int band_limit);

/// Pointwise synthesis sum_{l,m} a_{lm} Y_{lm} at every grid node.
FieldSnapshot sht_inverse(const HarmonicCoefficients& coeffs, const SphereGrid& grid);

/// Integral of the squared field under the grid quadrature.
double grid_norm_squared(const FieldSnapshot& field);

/// Unit vector for (colat, lon).
Eigen::Vector3d unit_vector(double colat, double lon);

} // namespace spharma

#endif // SPHARMA_SPHERE_HARMONICS_HPP
