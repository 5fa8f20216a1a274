#ifndef SPHARMA_APPROXIMATION_HPP
#define SPHARMA_APPROXIMATION_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spharma/simulation.hpp"
#include "spharma/spectral_model.hpp"
#include "spharma/spharma_model.hpp"

namespace spharma {

/// Innovations recursion on C(0..n). Row k of `theta` holds the one-step
/// predictor coefficients theta_{k,1..k} in columns 0..k-1; v(k) is the
/// mean-square error of the k-th one-step prediction.
struct InnovationsResult {
    Eigen::MatrixXd theta;
    Eigen::VectorXd v;
    std::vector<std::string> warnings;
};

/// Throws std::domain_error when some v_k <= 0 (input not positive definite),
/// unless `floor_variance` is set, in which case v_k is floored at 1e-12 times
/// C(0) with a warning.
InnovationsResult innovations(const Eigen::VectorXd& acv, bool floor_variance = false);

/// Fitted scalar ARMA part of one multipole.
struct ArmaFit {
    Eigen::VectorXd coefficients;
    double noise = 0;
};

/// Depth of the innovations recursion used for an MA(q) fit: max(200, 20 q).
int ma_fit_depth(int q);

/// Invertible MA(q) from the innovations recursion at depth ma_fit_depth(q)
/// (acv must hold at least depth + 1 lags). Noise variance
/// C(0) / (1 + theta_1^2 + ... + theta_q^2). Roots of theta that fall inside
/// the unit circle are reflected outward, which leaves that spectrum
/// unchanged under this normalisation.
ArmaFit fit_ma(const Eigen::VectorXd& acv, int q);

/// Durbin-Levinson solution of the Yule-Walker equations of order p;
/// acv needs lags 0..p. Throws std::domain_error for non positive definite
/// input.
ArmaFit fit_ar(const Eigen::VectorXd& acv, int p);

/// C_l(0..max_lag) of a target density: exact psi sums for rational forms,
/// trapezoid quadrature otherwise.
Eigen::VectorXd target_autocovariance(const SpectralEigenvalues& target, int l, int max_lag);

enum class ApproximationKind { ma, ar };
enum class SpectralNorm { l2_kernel, trace };

std::string to_string(ApproximationKind kind);
std::string to_string(SpectralNorm norm);

struct MultipoleFit {
    int l = 0;
    int order = 0;
    double sup_error = 0;
    bool budget_met = false;
};

struct ApproximationCertificate {
    ApproximationKind kind = ApproximationKind::ma;
    SpectralNorm norm = SpectralNorm::l2_kernel;
    double epsilon_target = 0;
    int truncation = 0;  ///< L_trunc
    int order = 0;       ///< max over multipoles
    std::vector<MultipoleFit> per_multipole;
    double per_multipole_budget = 0;
    double tail_error = 0;   ///< tail term in the requested norm
    double total_l2 = 0;     ///< sup_lambda ||f~ - f||_2 on the grid
    double total_trace = 0;  ///< sup_lambda ||F~ - F||_TR on the grid
    double refined_total = 0; ///< requested-norm total on a 4x finer grid
    bool grid_adequate = true;
    bool order_cap_reached = false;
    bool passed = false;

    double total() const { return norm == SpectralNorm::trace ? total_trace : total_l2; }
};

struct ApproximationOptions {
    double epsilon = 0.01;
    ApproximationKind kind = ApproximationKind::ma;
    SpectralNorm norm = SpectralNorm::l2_kernel;
    int order_cap = 256;
    int grid_size = kDefaultFrequencyGrid;
};

struct Approximation {
    SpharmaModel model;
    ApproximationCertificate certificate;
};

/// Picks the smallest band limit whose tail is at most epsilon/2, then raises
/// each multipole's order through 0, 1, 2, 4, ... until the sup error on the
/// frequency grid is at most epsilon / (2 (L+1)^2) or the cap is reached.
Approximation approximate_operator(const SpectralEigenvalues& target,
                                   const ApproximationOptions& options);

/// Sup over the frequency grid of the kernel L2 or trace distance, tails from
/// both densities' tail bounds added. Multipoles missing from one side count
/// as zero. Tabulated inputs must share a grid; otherwise a uniform grid of
/// grid_size points is used.
double spectral_distance(const SpectralEigenvalues& a, const SpectralEigenvalues& b,
                         SpectralNorm norm, int grid_size = kDefaultFrequencyGrid);

struct WoldResult {
    Eigen::MatrixXd psi;   ///< (l, j), psi(l, 0) = 1
    Eigen::VectorXd sigma2; ///< innovation variance per l
    double total_sigma2 = 0; ///< sum (2l+1) sigma_l^2
    double total_variance = 0;
    double variance_residual = 0; ///< total variance minus the MA(infinity) part
    std::vector<int> deterministic_multipoles;
    std::vector<std::string> warnings;

    int band_limit() const { return static_cast<int>(sigma2.size()) - 1; }
};

/// Wold coefficients psi_{l;0..J} and sigma_l^2 from the innovations
/// recursion at depth min(max_lag, max(200, 2J)). Multipoles whose
/// prediction error collapses are flagged and floored.
WoldResult wold(const AutocovarianceSpectrum& acv, int J);

/// |psi_l(e^{-i lambda})|^2 sigma_l^2 / (2 pi).
double wold_spectral_density(const WoldResult& w, int l, double lambda);

/// sigma^2(h) = sum_l (2l+1) sigma_l^2 sum_{j<h} psi_{l;j}^2.
double h_step_error(const WoldResult& w, int h);

struct L2OmegaEstimate {
    double mean_square_error = 0;
    double standard_error = 0;
    /// sum_l (2l+1)/(4pi) E|a_{lm}(t) - reconstruction|^2 from the true model
    double predicted = 0;
};

struct L2OmegaConfig {
    int n = 20000;
    std::uint64_t seed = 1;
    double colat = 1.0;
    double lon = 0.5;
};

/// Monte Carlo E|T(x,t) - reconstruction(x,t)|^2 at one point. The true
/// series and its innovations come from simulating `truth`. MA: the
/// reconstruction is z(t) + sum_j theta_j z(t-j) over the fitted multipoles.
/// AR: it is sum_j phi_j a(t-j) + z(t). Multipoles above the fitted band
/// limit are reconstructed as zero.
L2OmegaEstimate l2_omega_check(const SpharmaModel& truth, const SpharmaModel& fitted,
                               ApproximationKind kind, const L2OmegaConfig& config);

/// Wold MA(q) truncation of a causal model: theta_j = psi_{l;j} for l <= L.
SpharmaModel truncated_wold_model(const SpharmaModel& truth, int band_limit, int q);

} // namespace spharma

#endif // SPHARMA_APPROXIMATION_HPP
