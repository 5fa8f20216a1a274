#include "spharma/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include <unsupported/Eigen/FFT>

#include "spharma/parallel.hpp"

namespace spharma {

namespace {

constexpr double kPi = std::numbers::pi;

std::uint64_t mix64(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double to_unit_open(std::uint64_t bits)
{
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

int burn_in_for(const SpharmaModel& model, const SimulationConfig& config)
{
    return config.burn_in >= 0 ? config.burn_in : auto_burn_in(model);
}

void check_length(int n)
{
    if (n < 1)
        throw std::invalid_argument("simulation length must be at least 1");
}

// Segment DFT with the frequency of bin k mapped into [-pi, pi).
double bin_frequency(Eigen::Index k, Eigen::Index n)
{
    const double lambda = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(n);
    return lambda >= kPi ? lambda - 2.0 * kPi : lambda;
}

} // namespace

HarmonicCoefficients HarmonicCoefficientSeries::slice(Eigen::Index t) const
{
    if (t < 0 || t >= length())
        throw std::out_of_range("time index " + std::to_string(t) + " outside series");
    HarmonicCoefficients a(band_limit);
    a.values = values.row(t).transpose();
    return a;
}

// --- random streams --------------------------------------------------------

NormalStream::NormalStream(std::uint64_t seed, int l, int m)
    : key_(mix64(seed ^ mix64((static_cast<std::uint64_t>(l) << 32) ^
                              static_cast<std::uint64_t>(static_cast<std::uint32_t>(m)))))
{
}

double NormalStream::operator()(std::uint64_t counter) const
{
    const double u1 = to_unit_open(mix64(key_ + 2 * counter * 0x9e3779b97f4a7c15ULL));
    const double u2 = to_unit_open(mix64(key_ + (2 * counter + 1) * 0x9e3779b97f4a7c15ULL));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

// --- simulation ------------------------------------------------------------

int auto_burn_in(const SpharmaModel& model)
{
    const int order = std::max(model.ar_order(), model.ma_order());
    const CausalityReport rep = check_causal(model, 0.0);
    if (!std::isfinite(rep.min_root_modulus))
        return order;
    if (!(rep.min_root_modulus > 1.0))
        throw std::domain_error("auto_burn_in: model is not causal");
    const double rho = 1.0 / rep.min_root_modulus;
    const double base = std::ceil(std::log(1e-10) / std::log(rho));
    return static_cast<int>(std::min(base + 10.0 * model.ar_order(), 1e7)) + order;
}

HarmonicCoefficientSeries simulate_white_noise(const Eigen::VectorXd& noise,
                                               const SimulationConfig& config)
{
    check_length(config.n);
    if (noise.size() < 1)
        throw std::invalid_argument("simulate_white_noise: empty noise spectrum");
    if ((noise.array() <= 0).any() || !noise.allFinite())
        throw std::invalid_argument("simulate_white_noise: noise variances must be positive");

    const int lmax = static_cast<int>(noise.size()) - 1;
    HarmonicCoefficientSeries out(lmax, config.n);
    out.provenance = {"white-noise", config.seed, 0};
    parallel_for(harmonic_count(lmax), [&](std::int64_t idx) {
        const int l = static_cast<int>(std::sqrt(static_cast<double>(idx)));
        const int m = static_cast<int>(idx) - l * l - l;
        const NormalStream draw(config.seed, l, m);
        const double sd = std::sqrt(noise(l));
        for (int t = 0; t < config.n; ++t)
            out.values(t, idx) = sd * draw(static_cast<std::uint64_t>(t));
    });
    return out;
}

SpharmaSimulation simulate_spharma_with_innovations(const SpharmaModel& model,
                                                    const SimulationConfig& config)
{
    check_length(config.n);
    const CausalityReport causal = check_causal(model);
    if (!causal.causal)
        throw std::domain_error("simulate_spharma: model is not causal");
    const int burn = burn_in_for(model, config);
    const int lmax = model.band_limit();
    const int total = burn + config.n;

    SpharmaSimulation sim{HarmonicCoefficientSeries(lmax, config.n),
                          HarmonicCoefficientSeries(lmax, config.n)};
    sim.series.provenance = {"spharma", config.seed, burn};
    sim.innovations.provenance = sim.series.provenance;

    parallel_for(harmonic_count(lmax), [&](std::int64_t idx) {
        const int l = static_cast<int>(std::sqrt(static_cast<double>(idx)));
        const int m = static_cast<int>(idx) - l * l - l;
        const MultipoleArma& e = model[l];
        const NormalStream draw(config.seed, l, m);
        const double sd = std::sqrt(e.noise);
        const Eigen::Index p = e.ar.size();
        const Eigen::Index q = e.ma.size();

        std::vector<double> a(total, 0.0), z(total, 0.0);
        for (int t = 0; t < total; ++t) {
            z[t] = sd * draw(static_cast<std::uint64_t>(t));
            double v = z[t];
            for (Eigen::Index k = 1; k <= p && k <= t; ++k)
                v += e.ar(k - 1) * a[t - k];
            for (Eigen::Index k = 1; k <= q && k <= t; ++k)
                v += e.ma(k - 1) * z[t - k];
            a[t] = v;
        }
        for (int t = 0; t < config.n; ++t) {
            sim.series.values(t, idx) = a[burn + t];
            sim.innovations.values(t, idx) = z[burn + t];
        }
    });
    return sim;
}

HarmonicCoefficientSeries simulate_spharma(const SpharmaModel& model,
                                           const SimulationConfig& config)
{
    return simulate_spharma_with_innovations(model, config).series;
}

// --- synthesis -------------------------------------------------------------

FieldSnapshot synthesize_field(const HarmonicCoefficientSeries& series, const SphereGrid& grid,
                               Eigen::Index t)
{
    if (grid.band_limit < series.band_limit)
        throw std::invalid_argument("synthesize_field: grid band limit below series band limit");
    FieldSnapshot field = sht_inverse(series.slice(t), grid);
    field.time_index = static_cast<long>(t);
    return field;
}

Eigen::VectorXd field_at_point(const HarmonicCoefficientSeries& series, double colat, double lon,
                               int truncation)
{
    const int lmax = truncation < 0 ? series.band_limit : std::min(truncation, series.band_limit);
    const Eigen::VectorXd y = real_sph_harm_all(lmax, colat, lon);
    return series.values.leftCols(y.size()) * y;
}

// --- estimation ------------------------------------------------------------

AutocovarianceSpectrum empirical_autocov(const HarmonicCoefficientSeries& series, int t_max)
{
    const Eigen::Index n = series.length();
    if (t_max < 0 || t_max >= n)
        throw std::invalid_argument("empirical_autocov: need 0 <= t_max < n");
    AutocovarianceSpectrum acv(series.band_limit, t_max);
    for (int l = 0; l <= series.band_limit; ++l) {
        for (int t = 0; t <= t_max; ++t) {
            double s = 0.0;
            for (int m = -l; m <= l; ++m) {
                const auto x = series.stream(l, m);
                s += x.tail(n - t).dot(x.head(n - t));
            }
            acv.at(l, t) = s / ((2.0 * l + 1.0) * static_cast<double>(n - t));
        }
    }
    return acv;
}

BatchMeans batch_means(const Eigen::Ref<const Eigen::VectorXd>& x, int n_batches)
{
    const Eigen::Index n = x.size();
    if (n < 2 || n_batches < 2)
        throw std::invalid_argument("batch_means: need at least two samples and two batches");
    n_batches = static_cast<int>(std::min<Eigen::Index>(n_batches, n));
    const Eigen::Index size = n / n_batches;
    Eigen::VectorXd means(n_batches);
    for (int b = 0; b < n_batches; ++b)
        means(b) = x.segment(b * size, size).mean();
    BatchMeans out;
    out.mean = x.mean();
    const double centre = means.mean();
    const double var = (means.array() - centre).square().sum() / (n_batches - 1);
    out.standard_error = std::sqrt(var / n_batches);
    return out;
}

AutocovEstimate empirical_autocov_with_se(const HarmonicCoefficientSeries& series, int t_max,
                                          int n_batches)
{
    const Eigen::Index n = series.length();
    AutocovEstimate est{empirical_autocov(series, t_max),
                        Eigen::MatrixXd::Zero(series.band_limit + 1, t_max + 1)};
    for (int l = 0; l <= series.band_limit; ++l) {
        for (int t = 0; t <= t_max; ++t) {
            Eigen::VectorXd prod = Eigen::VectorXd::Zero(n - t);
            for (int m = -l; m <= l; ++m) {
                const auto x = series.stream(l, m);
                prod += x.tail(n - t).cwiseProduct(x.head(n - t));
            }
            prod /= 2.0 * l + 1.0;
            est.standard_error(l, t) = batch_means(prod, n_batches).standard_error;
        }
    }
    return est;
}

Periodogram periodogram(const HarmonicCoefficientSeries& series, int l, double bandwidth)
{
    const Eigen::Index n = series.length();
    if (n < 64)
        throw std::invalid_argument("periodogram: need at least 64 samples");
    if (!(bandwidth > 0 && bandwidth <= kPi))
        throw std::invalid_argument("periodogram: bandwidth must lie in (0, pi]");
    if (l < 0 || l > series.band_limit)
        throw std::out_of_range("periodogram: multipole outside band limit");

    Eigen::FFT<double> fft;
    Eigen::VectorXd raw = Eigen::VectorXd::Zero(n);
    for (int m = -l; m <= l; ++m) {
        const Eigen::VectorXd x = series.stream(l, m);
        Eigen::VectorXcd spec;
        fft.fwd(spec, x);
        raw += spec.cwiseAbs2();
    }
    raw /= (2.0 * l + 1.0) * 2.0 * kPi * static_cast<double>(n);

    // Modified Daniell: weights 1 inside, 1/2 at the two ends.
    const auto half = static_cast<Eigen::Index>(std::floor(bandwidth * n / (2.0 * kPi)));
    Eigen::VectorXd smooth(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        if (half == 0) {
            smooth(k) = raw(k);
            continue;
        }
        double s = 0.0;
        for (Eigen::Index j = -half; j <= half; ++j) {
            const double w = (j == -half || j == half) ? 0.5 : 1.0;
            s += w * raw(((k + j) % n + n) % n);
        }
        smooth(k) = s / (2.0 * half);
    }

    Periodogram out;
    out.lambda.resize(n);
    out.values.resize(n);
    const Eigen::Index shift = n - n / 2; // first bin with frequency >= pi
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index k = (i + shift) % n;
        out.lambda(i) = bin_frequency(k, n);
        out.values(i) = smooth(k);
    }
    return out;
}

// --- verification ----------------------------------------------------------

CramerReport verify_cramer_orthogonality(const HarmonicCoefficientSeries& series, int n_bands,
                                         int segment_length, double factor)
{
    CramerReport rep;
    rep.n_bands = n_bands;
    rep.segment_length = segment_length;
    if (n_bands < 2)
        return rep;
    const Eigen::Index n = series.length();
    if (segment_length < 2 * n_bands || segment_length > n)
        throw std::invalid_argument("verify_cramer_orthogonality: bad segment length");

    const Eigen::Index n_seg = n / segment_length;
    const Eigen::Index streams = series.values.cols();
    // Increments (band, replicate), standardised per stream and band.
    Eigen::MatrixXcd inc = Eigen::MatrixXcd::Zero(n_bands, n_seg * streams);

    // Band components are read at the segment centre, away from the
    // wrap-around jump of the periodic extension.
    std::vector<int> band_of(segment_length, -1);
    Eigen::VectorXcd centre(segment_length);
    for (int k = 1; k < segment_length; ++k) {
        const double lambda = bin_frequency(k, segment_length);
        centre(k) = std::polar(1.0 / segment_length, lambda * (segment_length / 2));
        if (2 * k == segment_length)
            continue; // Nyquist bin is real
        band_of[k] = std::min(n_bands - 1,
                              static_cast<int>(std::floor((lambda + kPi) / (2.0 * kPi) * n_bands)));
    }

    Eigen::FFT<double> fft;
    for (Eigen::Index s = 0; s < streams; ++s) {
        for (Eigen::Index g = 0; g < n_seg; ++g) {
            const Eigen::VectorXd x = series.values.col(s).segment(g * segment_length, segment_length);
            Eigen::VectorXcd spec;
            fft.fwd(spec, x);
            for (int k = 0; k < segment_length; ++k)
                if (band_of[k] >= 0)
                    inc(band_of[k], s * n_seg + g) += spec(k) * centre(k);
        }
        for (int b = 0; b < n_bands; ++b) {
            auto row = inc.row(b).segment(s * n_seg, n_seg);
            const double rms = std::sqrt(row.squaredNorm() / static_cast<double>(n_seg));
            if (rms > 0)
                row /= rms;
        }
    }

    rep.replicates = static_cast<long>(n_seg * streams);
    rep.threshold = factor * 3.0 / std::sqrt(static_cast<double>(rep.replicates));
    for (int b = 0; b < n_bands; ++b) {
        for (int c = b + 1; c < n_bands; ++c) {
            const double nb = inc.row(b).squaredNorm();
            const double nc = inc.row(c).squaredNorm();
            if (nb == 0 || nc == 0)
                continue;
            const std::complex<double> cross = inc.row(b).dot(inc.row(c));
            rep.max_correlation = std::max(rep.max_correlation, std::abs(cross) / std::sqrt(nb * nc));
        }
    }
    rep.passed = rep.max_correlation < rep.threshold;
    return rep;
}

CheckResult check_stationarity(const HarmonicCoefficientSeries& series)
{
    CheckResult res;
    res.name = "stationarity";
    const Eigen::Index n = series.length();
    if (n < 80)
        throw std::invalid_argument("check_stationarity: need at least 80 samples");
    const Eigen::Index half = n / 2;
    const Eigen::Index streams = series.values.cols();
    for (Eigen::Index s = 0; s < streams; ++s) {
        const BatchMeans first = batch_means(series.values.col(s).head(half), 20);
        const BatchMeans second = batch_means(series.values.col(s).segment(half, half), 20);
        const double se = std::hypot(first.standard_error, second.standard_error);
        const double z = se > 0 ? std::abs(first.mean - second.mean) / se : 0.0;
        res.statistic = std::max(res.statistic, z);
    }
    res.threshold = std::sqrt(2.0 * std::log(static_cast<double>(streams) / 1e-3));
    res.passed = res.statistic < res.threshold;
    res.detail = "max |half-mean difference| / SE over streams";
    return res;
}

CheckResult check_isotropy(const HarmonicCoefficientSeries& series)
{
    CheckResult res;
    res.name = "isotropy";
    long comparisons = 0;
    for (int l = 1; l <= series.band_limit; ++l) {
        std::vector<BatchMeans> per_m;
        double pooled = 0.0;
        for (int m = -l; m <= l; ++m) {
            const Eigen::VectorXd sq = series.stream(l, m).array().square();
            per_m.push_back(batch_means(sq, 20));
            pooled += per_m.back().mean;
        }
        pooled /= 2.0 * l + 1.0;
        for (const BatchMeans& b : per_m) {
            if (b.standard_error > 0)
                res.statistic = std::max(res.statistic, std::abs(b.mean - pooled) / b.standard_error);
            ++comparisons;
        }
    }
    res.threshold = std::sqrt(2.0 * std::log(std::max(1.0, static_cast<double>(comparisons)) / 1e-3));
    res.passed = res.statistic < res.threshold;
    res.detail = "max |per-m variance - pooled| / SE";
    return res;
}

CheckResult check_ckl_truncation(const HarmonicCoefficientSeries& series,
                                 const SpectralEigenvalues& density, int truncation, int n_points)
{
    if (truncation < 0 || truncation > series.band_limit)
        throw std::invalid_argument("check_ckl_truncation: truncation outside band");
    if (density.band_limit() < series.band_limit)
        throw std::invalid_argument("check_ckl_truncation: density band limit below series");
    CheckResult res;
    res.name = "ckl_truncation";

    Eigen::VectorXd sq = Eigen::VectorXd::Zero(series.length());
    for (int i = 0; i < n_points; ++i) {
        // Points spread over the sphere; isotropy makes the choice immaterial.
        const double colat = std::acos(1.0 - 2.0 * (i + 0.5) / n_points);
        const double lon = 2.0 * kPi * i * 0.6180339887498949;
        const Eigen::VectorXd full = field_at_point(series, colat, lon);
        const Eigen::VectorXd cut = field_at_point(series, colat, lon, truncation);
        sq += (full - cut).array().square().matrix();
    }
    sq /= n_points;
    const BatchMeans bm = batch_means(sq, 50);

    // The density may extend past the series band limit; those multipoles are
    // absent from the series and therefore from the realised error.
    double predicted = ckl_truncation_error(density, truncation);
    if (density.band_limit() > series.band_limit)
        predicted -= ckl_truncation_error(density, series.band_limit);

    res.statistic = bm.standard_error > 0 ? std::abs(bm.mean - predicted) / bm.standard_error : 0.0;
    res.threshold = 3.0;
    res.passed = res.statistic <= res.threshold;
    res.detail = "realised " + std::to_string(bm.mean) + " vs predicted " +
                 std::to_string(predicted) + " (SE " + std::to_string(bm.standard_error) + ")";
    return res;
}

} // namespace spharma
