#ifndef SPHARMA_SPHARMA_MODEL_HPP
#define SPHARMA_SPHARMA_MODEL_HPP

#include <complex>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spharma/spectral_model.hpp"

namespace spharma {

inline constexpr double kDefaultRootMargin = 1e-6;

/// Roots of c(0) + c(1) z + ... + c(d) z^d as eigenvalues of the companion
/// matrix. Zero leading coefficients are dropped, so a
/// constant polynomial has no roots.
template <typename Scalar>
Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>
polynomial_roots(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& c)
{
    Eigen::Index deg = c.size() - 1;
    while (deg > 0 && c(deg) == Scalar(0))
        --deg;
    if (deg <= 0)
        return {};

    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> companion =
        Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(deg, deg);
    for (Eigen::Index i = 1; i < deg; ++i)
        companion(i, i - 1) = Scalar(1);
    for (Eigen::Index i = 0; i < deg; ++i)
        companion(i, deg - 1) = -c(i) / c(deg);
    Eigen::EigenSolver<decltype(companion)> solver(companion, false);
    return solver.eigenvalues();
}

/// Ascending coefficients of phi(z) = 1 - sum ar_k z^k.
Eigen::VectorXd ar_polynomial(const Eigen::VectorXd& ar);
/// Ascending coefficients of theta(z) = 1 + sum ma_k z^k.
Eigen::VectorXd ma_polynomial(const Eigen::VectorXd& ma);

/// Smallest root modulus of a polynomial, +inf without roots.
double min_root_modulus(const Eigen::VectorXd& ascending);

/// SPHARMA(p, q) model given by its per-multipole eigenvalue sequences.
/// Orders may differ between multipoles; p and q are the maxima.
class SpharmaModel {
public:
    SpharmaModel() = default;
    /// Throws std::invalid_argument unless every noise variance is positive
    /// and finite.
    explicit SpharmaModel(std::vector<MultipoleArma> entries);

    int band_limit() const { return static_cast<int>(entries_.size()) - 1; }
    int ar_order() const;
    int ma_order() const;

    const MultipoleArma& operator[](int l) const { return entries_.at(l); }
    const std::vector<MultipoleArma>& entries() const { return entries_; }
    Eigen::VectorXd noise() const;

    /// The model's spectral density eigenvalues in rational form.
    SpectralEigenvalues spectral_density() const;

private:
    std::vector<MultipoleArma> entries_;
};

struct CausalityReport {
    bool causal = true;
    double min_root_modulus = std::numeric_limits<double>::infinity();
    std::vector<int> offending_multipoles;
    double margin_used = kDefaultRootMargin;
};

/// All roots of phi_l satisfy |z| >= 1 + margin for every l.
CausalityReport check_causal(const SpharmaModel& model, double margin = kDefaultRootMargin);
/// Same check for theta_l.
CausalityReport check_invertible(const SpharmaModel& model, double margin = kDefaultRootMargin);
/// Per l: every root of phi_l is farther than tol from every root of theta_l.
std::vector<bool> check_coprime(const SpharmaModel& model, double tol = 1e-8);

/// psi_0..psi_J of theta(z)/phi(z):
///   psi_j = ma_j [j <= q] + sum_{k=1}^{min(j,p)} ar_k psi_{j-k}.
Eigen::VectorXd psi_coefficients(const MultipoleArma& arma, int J);
/// As above; throws std::domain_error when multipole l is not causal.
Eigen::VectorXd psi_coefficients(const SpharmaModel& model, int l, int J,
                                 double margin = kDefaultRootMargin);

/// Truncation order J for the psi series of one multipole such that
/// rho^J / (1 - rho) * sum |theta| < tol, rho being the reciprocal of the
/// smallest AR root modulus (with slack for repeated roots).
int psi_truncation_order(const MultipoleArma& arma, double tol = 1e-12);

/// f_l(lambda) of the model; throws std::domain_error if phi_l vanishes on
/// the unit circle.
double model_spectral_density(const SpharmaModel& model, int l, double lambda);

/// C_l(0..t_max) = noise_l * sum_j psi_j psi_{j+t}.
Eigen::VectorXd model_autocovariance(const MultipoleArma& arma, int t_max);
Eigen::VectorXd model_autocovariance(const SpharmaModel& model, int l, int t_max);
/// Table over all multipoles; throws std::domain_error for non-causal models.
AutocovarianceSpectrum model_autocovariance_table(const SpharmaModel& model, int t_max);

/// k(c) = sum_l eig_l (2l+1)/(4pi) P_l(c) for an isotropic kernel operator
/// with eigenvalues eig.
double kernel_from_eigenvalues(const Eigen::VectorXd& eigenvalues, double c);

/// Summability of the model's autocovariances over |t| <= t_max, with a
/// geometric tail estimate from the uniform root margin. Non-causal models
/// are reported as divergent.
SummabilityReport summability_report(const SpharmaModel& model, int t_max);

} // namespace spharma

#endif // SPHARMA_SPHARMA_MODEL_HPP
