#ifndef SPHARMA_SPECTRAL_MODEL_HPP
#define SPHARMA_SPECTRAL_MODEL_HPP

#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace spharma {

/// Default size of the uniform frequency grid on [-pi, pi).
inline constexpr int kDefaultFrequencyGrid = 4096;

/// Scalar ARMA description of one multipole:
///   phi(z)   = 1 - ar(0) z - ... - ar(p-1) z^p
///   theta(z) = 1 + ma(0) z + ... + ma(q-1) z^q
/// driven by white noise of variance `noise`.
struct MultipoleArma {
    Eigen::VectorXd ar;
    Eigen::VectorXd ma;
    double noise = 1.0;
};

/// (noise / 2pi) |theta(e^{i lambda})|^2 / |phi(e^{i lambda})|^2. No validity
/// checks; callers decide what a unit-circle root of phi means.
double arma_density(const MultipoleArma& arma, double lambda);

/// Angular power spectra C_l(t) for l <= band_limit and 0 <= t <= max_lag.
/// Negative lags follow from C_l(-t) = C_l(t).
struct AutocovarianceSpectrum {
    int band_limit = 0;
    int max_lag = 0;
    Eigen::MatrixXd values; ///< (l, t)
    /// Bound on sum_{l > band_limit} (2l+1) C_l(0); zero when band-limited.
    double tail_bound = 0.0;

    AutocovarianceSpectrum() = default;
    AutocovarianceSpectrum(int lmax, int lags)
        : band_limit(lmax), max_lag(lags), values(Eigen::MatrixXd::Zero(lmax + 1, lags + 1))
    {
    }

    double operator()(int l, int t) const;
    double& at(int l, int t) { return values(l, t); }

    /// Throws std::invalid_argument when C_l(0) < 0 or |C_l(t)| > C_l(0).
    void validate() const;
    /// sum_l (2l+1) C_l(0) including the tail bound.
    double total_variance() const;
};

struct TabulatedDensity {
    Eigen::VectorXd lambda_grid; ///< uniform on [-pi, pi), includes -pi
    Eigen::MatrixXd values;      ///< (l, k)
};

struct RationalDensity {
    std::vector<MultipoleArma> entries; ///< one per l = 0..L
};

/// Spectral density eigenvalues f_l(lambda), either in closed rational form
/// or tabulated on a uniform frequency grid.
///
/// `tail_bound` bounds sup_lambda sum_{l > L} (2l+1) f_l(lambda). Since
/// (sum (2l+1) f^2)^{1/2} <= sum (2l+1) f for nonnegative f, the same number
/// also bounds the kernel L2 tail.
class SpectralEigenvalues {
public:
    SpectralEigenvalues() = default;

    static SpectralEigenvalues rational(std::vector<MultipoleArma> entries, double tail = 0.0);
    static SpectralEigenvalues tabulated(Eigen::VectorXd lambda_grid, Eigen::MatrixXd values,
                                         double tail = 0.0);

    int band_limit() const;
    bool is_rational() const { return std::holds_alternative<RationalDensity>(form_); }
    const RationalDensity& rational_form() const { return std::get<RationalDensity>(form_); }
    const TabulatedDensity& tabulated_form() const { return std::get<TabulatedDensity>(form_); }

    /// f_l(lambda). Tabulated densities are interpolated linearly and
    /// periodically between grid points.
    double operator()(int l, double lambda) const;

    /// Values (l, k) on a frequency grid.
    Eigen::MatrixXd on_grid(const Eigen::VectorXd& lambda_grid) const;

    /// The stored grid for tabulated densities, else a uniform grid of n points.
    Eigen::VectorXd natural_grid(int n = kDefaultFrequencyGrid) const;

    double tail_bound = 0.0;

private:
    std::variant<RationalDensity, TabulatedDensity> form_;
};

/// lambda_k = -pi + 2 pi k / n, k = 0..n-1.
Eigen::VectorXd frequency_grid(int n = kDefaultFrequencyGrid);

/// r_t(c) = sum_l (2l+1)/(4pi) C_l(t) P_l(c).
double covariance_kernel_eval(const AutocovarianceSpectrum& acv, int t, double c);

/// ||r_t||_2 = sqrt(sum_l (2l+1) C_l(t)^2).
double kernel_l2_norm(const AutocovarianceSpectrum& acv, int t);

/// sum_l (2l+1) f_l(lambda) plus the tail bound.
double operator_trace_norm(const SpectralEigenvalues& f, double lambda);

enum class NegativeDensityPolicy {
    error, ///< values below -1e-12 (relative) throw
    clip   ///< every negative value is set to zero with a warning
};

struct SpectralTabulation {
    SpectralEigenvalues density;
    /// Per l, estimated sup-norm contribution of the lags beyond max_lag.
    Eigen::VectorXd truncation_tail;
    std::vector<std::string> warnings;
};

/// f_l(lambda_k) = (1/2pi) sum_{|t| <= max_lag} e^{-i t lambda_k} C_l(t) on a
/// uniform grid. Roundoff negatives (|f| < 1e-12 times sum_t |C_l(t)|) are
/// clipped to zero.
SpectralTabulation spectral_from_autocov(const AutocovarianceSpectrum& acv,
                                         int grid_size = kDefaultFrequencyGrid,
                                         double tail_tolerance = 1e-8,
                                         NegativeDensityPolicy policy = NegativeDensityPolicy::error);

struct AutocovQuadrature {
    Eigen::VectorXd values;         ///< C_l(t) per l
    double imaginary_residual = 0;  ///< max_l |int f_l sin(t lambda)|
    double refinement_change = 0;   ///< max_l |full - half-grid rule|
    bool converged = true;
};

/// C_l(t) = int_{-pi}^{pi} f_l(lambda) e^{i t lambda} d lambda by the periodic
/// trapezoid rule. Convergence is judged by comparing with the rule on every
/// other node.
AutocovQuadrature autocov_from_spectral(const SpectralEigenvalues& f, int t,
                                        int grid_size = kDefaultFrequencyGrid,
                                        double tolerance = 1e-9);

/// C_l(0..max_lag) for every l via autocov_from_spectral.
AutocovarianceSpectrum autocov_table_from_spectral(const SpectralEigenvalues& f, int max_lag,
                                                   int grid_size = kDefaultFrequencyGrid);

struct SummabilityReport {
    double kernel_l2_sum = 0;  ///< sum_{|t| <= T} ||r_t||_2
    double trace_sum = 0;      ///< sum_{|t| <= T} sum_l (2l+1) |C_l(t)|
    double tail_estimate = 0;  ///< estimate of the omitted |t| > T trace terms
    bool divergent = false;
    int max_lag = 0;
};

/// Summability diagnostics over the stored lags. A sequence whose last lag is
/// not small against lag zero, or whose geometric tail does not contract, is
/// flagged divergent.
SummabilityReport summability_report(const AutocovarianceSpectrum& acv);

/// sum_{l > L_trunc} (2l+1)/(4pi) int f_l, with the tail bound above the band
/// limit contributing tail_bound * 2pi / (4pi).
double ckl_truncation_error(const SpectralEigenvalues& f, int truncation,
                            int grid_size = kDefaultFrequencyGrid);

} // namespace spharma

#endif // SPHARMA_SPECTRAL_MODEL_HPP
