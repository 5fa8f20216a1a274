#ifndef SPHARMA_SIMULATION_HPP
#define SPHARMA_SIMULATION_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spharma/sphere_harmonics.hpp"
#include "spharma/spectral_model.hpp"
#include "spharma/spharma_model.hpp"

namespace spharma {

enum class NoiseLaw { gaussian };

struct SimulationConfig {
    std::uint64_t seed = 0;
    int burn_in = -1; ///< negative selects auto_burn_in
    int n = 1;
    NoiseLaw noise_law = NoiseLaw::gaussian;
};

struct SeriesProvenance {
    std::string model_id;
    std::uint64_t seed = 0;
    int burn_in = 0;
};

/// Harmonic coefficients a_{lm}(t), t = 0..n-1. Column harmonic_index(l, m)
/// holds the time series of one (l, m) stream.
struct HarmonicCoefficientSeries {
    int band_limit = 0;
    Eigen::MatrixXd values; ///< (t, harmonic_index)
    SeriesProvenance provenance;

    HarmonicCoefficientSeries() = default;
    HarmonicCoefficientSeries(int lmax, Eigen::Index n)
        : band_limit(lmax), values(Eigen::MatrixXd::Zero(n, harmonic_count(lmax)))
    {
    }

    Eigen::Index length() const noexcept { return values.rows(); }
    auto stream(int l, int m) { return values.col(harmonic_index(l, m)); }
    auto stream(int l, int m) const { return values.col(harmonic_index(l, m)); }
    HarmonicCoefficients slice(Eigen::Index t) const;
};

/// Counter-based standard normal variates: draw k of stream (seed, l, m) is a
/// pure function of its arguments, so streams can be generated in any order.
class NormalStream {
public:
    NormalStream(std::uint64_t seed, int l, int m);
    double operator()(std::uint64_t counter) const;

private:
    std::uint64_t key_;
};

/// Burn-in such that the zero-state transient has decayed below 1e-10 in
/// amplitude: ceil(log(1e-10) / log(rho)) plus slack for repeated roots.
int auto_burn_in(const SpharmaModel& model);

/// Strong Gaussian spherical white noise with per-l variances.
HarmonicCoefficientSeries simulate_white_noise(const Eigen::VectorXd& noise,
                                               const SimulationConfig& config);

struct SpharmaSimulation {
    HarmonicCoefficientSeries series;
    HarmonicCoefficientSeries innovations; ///< the driving noise a_{lm;Z}(t)
};

/// a(t) = sum_k phi_k a(t-k) + z(t) + sum_k theta_k z(t-k) per (l, m), started
/// from the zero state, with the first burn_in samples discarded. Throws
/// std::domain_error for non-causal models.
HarmonicCoefficientSeries simulate_spharma(const SpharmaModel& model,
                                           const SimulationConfig& config);
SpharmaSimulation simulate_spharma_with_innovations(const SpharmaModel& model,
                                                    const SimulationConfig& config);

/// sht_inverse of the time-t slice.
FieldSnapshot synthesize_field(const HarmonicCoefficientSeries& series, const SphereGrid& grid,
                               Eigen::Index t);

/// Field values at one point for every t, using multipoles l <= truncation
/// (the whole band when truncation < 0).
Eigen::VectorXd field_at_point(const HarmonicCoefficientSeries& series, double colat, double lon,
                               int truncation = -1);

/// C^_l(t) = sum_m sum_s a(s+t) a(s) / ((2l+1)(n-t)).
AutocovarianceSpectrum empirical_autocov(const HarmonicCoefficientSeries& series, int t_max);

struct BatchMeans {
    double mean = 0;
    double standard_error = 0;
};

/// Mean and batch-means standard error of a serially correlated sequence.
BatchMeans batch_means(const Eigen::Ref<const Eigen::VectorXd>& x, int n_batches = 50);

struct AutocovEstimate {
    AutocovarianceSpectrum acv;
    Eigen::MatrixXd standard_error; ///< (l, t), batch means of the m-averaged products
};

AutocovEstimate empirical_autocov_with_se(const HarmonicCoefficientSeries& series, int t_max,
                                          int n_batches = 50);

struct Periodogram {
    Eigen::VectorXd lambda; ///< Fourier frequencies in [-pi, pi), increasing
    Eigen::VectorXd values;
};

/// Per-m periodograms |DFT|^2 / (2 pi n) averaged over m, then smoothed with a
/// modified Daniell kernel of half-width `bandwidth` radians.
Periodogram periodogram(const HarmonicCoefficientSeries& series, int l, double bandwidth);

struct CramerReport {
    int n_bands = 0;
    int segment_length = 0;
    long replicates = 0;
    double max_correlation = 0;
    double threshold = 0;
    bool passed = true;
};

/// Empirical check that DFT band increments over disjoint frequency bands are
/// uncorrelated. The series is cut into segments; each segment and stream
/// contributes one standardised band component, taken at the segment centre. The pooled correlation
/// between every pair of bands must stay below factor * 3 / sqrt(replicates).
CramerReport verify_cramer_orthogonality(const HarmonicCoefficientSeries& series, int n_bands,
                                         int segment_length = 128, double factor = 1.0);

struct CheckResult {
    std::string name;
    bool passed = true;
    double statistic = 0;
    double threshold = 0;
    std::string detail;
};

/// Compares first- and second-half means of every stream against batch-means
/// standard errors (Bonferroni-adjusted threshold).
CheckResult check_stationarity(const HarmonicCoefficientSeries& series);

/// Per-m lag-zero variances of each multipole against their pooled value.
CheckResult check_isotropy(const HarmonicCoefficientSeries& series);

/// Realised mean-square error at `points` of the reconstruction truncated at
/// `truncation`, against the predicted sum_{l > L} (2l+1)/(4pi) int f_l.
CheckResult check_ckl_truncation(const HarmonicCoefficientSeries& series,
                                 const SpectralEigenvalues& density, int truncation,
                                 int n_points = 4);

} // namespace spharma

#endif // SPHARMA_SIMULATION_HPP
