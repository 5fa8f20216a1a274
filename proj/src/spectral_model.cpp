#include "spharma/spectral_model.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include "spharma/sphere_harmonics.hpp"

namespace spharma {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// 1 + sign * sum_k c_k e^{i k lambda}
std::complex<double> unit_circle_poly(const Eigen::VectorXd& c, double sign, double lambda)
{
    double re = 1.0, im = 0.0;
    for (Eigen::Index k = 0; k < c.size(); ++k) {
        re += sign * c(k) * std::cos((k + 1) * lambda);
        im += sign * c(k) * std::sin((k + 1) * lambda);
    }
    return {re, im};
}

void check_uniform_grid(const Eigen::VectorXd& grid)
{
    const Eigen::Index n = grid.size();
    if (n < 2)
        throw std::invalid_argument("frequency grid needs at least two points");
    const double step = kTwoPi / n;
    for (Eigen::Index k = 0; k < n; ++k) {
        if (std::abs(grid(k) - (-kPi + step * k)) > 1e-9)
            throw std::invalid_argument("frequency grid must be uniform on [-pi, pi)");
    }
}

} // namespace

double arma_density(const MultipoleArma& arma, double lambda)
{
    const double num = std::norm(unit_circle_poly(arma.ma, 1.0, lambda));
    const double den = std::norm(unit_circle_poly(arma.ar, -1.0, lambda));
    return arma.noise / kTwoPi * num / den;
}

// --- AutocovarianceSpectrum ------------------------------------------------

double AutocovarianceSpectrum::operator()(int l, int t) const
{
    const int lag = std::abs(t);
    if (l < 0 || l > band_limit)
        throw std::out_of_range("multipole " + std::to_string(l) + " outside band limit");
    if (lag > max_lag)
        throw std::out_of_range("lag " + std::to_string(t) + " exceeds max_lag " +
                                std::to_string(max_lag));
    return values(l, lag);
}

void AutocovarianceSpectrum::validate() const
{
    if (band_limit < 0 || max_lag < 0)
        throw std::invalid_argument("autocovariance: negative band limit or max lag");
    if (values.rows() != band_limit + 1 || values.cols() != max_lag + 1)
        throw std::invalid_argument("autocovariance: table shape does not match band_limit/max_lag");
    if (!values.allFinite() || !std::isfinite(tail_bound) || tail_bound < 0)
        throw std::invalid_argument("autocovariance: non-finite values or negative tail bound");
    for (int l = 0; l <= band_limit; ++l) {
        const double c0 = values(l, 0);
        if (c0 < 0)
            throw std::invalid_argument("autocovariance: C_l(0) < 0 at l=" + std::to_string(l));
        for (int t = 1; t <= max_lag; ++t) {
            if (std::abs(values(l, t)) > c0 * (1 + 1e-9) + 1e-300)
                throw std::invalid_argument("autocovariance: |C_l(t)| > C_l(0) at l=" +
                                            std::to_string(l) + ", t=" + std::to_string(t));
        }
    }
}

double AutocovarianceSpectrum::total_variance() const
{
    double total = tail_bound;
    for (int l = 0; l <= band_limit; ++l)
        total += (2.0 * l + 1.0) * values(l, 0);
    return total;
}

// --- SpectralEigenvalues ---------------------------------------------------

SpectralEigenvalues SpectralEigenvalues::rational(std::vector<MultipoleArma> entries, double tail)
{
    if (entries.empty())
        throw std::invalid_argument("rational density needs at least one multipole");
    SpectralEigenvalues f;
    f.form_ = RationalDensity{std::move(entries)};
    f.tail_bound = tail;
    return f;
}

SpectralEigenvalues SpectralEigenvalues::tabulated(Eigen::VectorXd lambda_grid,
                                                   Eigen::MatrixXd values, double tail)
{
    check_uniform_grid(lambda_grid);
    if (values.cols() != lambda_grid.size() || values.rows() < 1)
        throw std::invalid_argument("tabulated density: values do not match the grid");
    if ((values.array() < 0).any())
        throw std::invalid_argument("tabulated density: negative values");
    SpectralEigenvalues f;
    f.form_ = TabulatedDensity{std::move(lambda_grid), std::move(values)};
    f.tail_bound = tail;
    return f;
}

int SpectralEigenvalues::band_limit() const
{
    if (is_rational())
        return static_cast<int>(rational_form().entries.size()) - 1;
    return static_cast<int>(tabulated_form().values.rows()) - 1;
}

double SpectralEigenvalues::operator()(int l, double lambda) const
{
    if (l < 0 || l > band_limit())
        throw std::out_of_range("multipole " + std::to_string(l) + " outside band limit");
    if (is_rational())
        return arma_density(rational_form().entries[l], lambda);

    const TabulatedDensity& tab = tabulated_form();
    const Eigen::Index n = tab.lambda_grid.size();
    double u = (lambda + kPi) / kTwoPi * n;
    u -= n * std::floor(u / n);
    const auto k0 = static_cast<Eigen::Index>(std::floor(u)) % n;
    const Eigen::Index k1 = (k0 + 1) % n;
    const double frac = u - std::floor(u);
    return (1.0 - frac) * tab.values(l, k0) + frac * tab.values(l, k1);
}

Eigen::MatrixXd SpectralEigenvalues::on_grid(const Eigen::VectorXd& lambda_grid) const
{
    const int lmax = band_limit();
    if (!is_rational()) {
        const TabulatedDensity& tab = tabulated_form();
        if (tab.lambda_grid.size() == lambda_grid.size() &&
            (tab.lambda_grid - lambda_grid).cwiseAbs().maxCoeff() < 1e-12)
            return tab.values;
    }
    Eigen::MatrixXd out(lmax + 1, lambda_grid.size());
    for (int l = 0; l <= lmax; ++l)
        for (Eigen::Index k = 0; k < lambda_grid.size(); ++k)
            out(l, k) = (*this)(l, lambda_grid(k));
    return out;
}

Eigen::VectorXd SpectralEigenvalues::natural_grid(int n) const
{
    if (is_rational())
        return frequency_grid(n);
    return tabulated_form().lambda_grid;
}

Eigen::VectorXd frequency_grid(int n)
{
    if (n < 2)
        throw std::invalid_argument("frequency_grid: need at least two points");
    Eigen::VectorXd grid(n);
    for (int k = 0; k < n; ++k)
        grid(k) = -kPi + kTwoPi * k / n;
    return grid;
}

// --- kernels and norms -----------------------------------------------------

double covariance_kernel_eval(const AutocovarianceSpectrum& acv, int t, double c)
{
    if (std::abs(t) > acv.max_lag)
        throw std::out_of_range("covariance_kernel_eval: lag out of range");
    const Eigen::VectorXd p = legendre_all(acv.band_limit, c);
    double r = 0.0;
    for (int l = 0; l <= acv.band_limit; ++l)
        r += (2.0 * l + 1.0) / (4.0 * kPi) * acv(l, t) * p(l);
    return r;
}

double kernel_l2_norm(const AutocovarianceSpectrum& acv, int t)
{
    if (std::abs(t) > acv.max_lag)
        throw std::out_of_range("kernel_l2_norm: lag out of range");
    double s = 0.0;
    for (int l = 0; l <= acv.band_limit; ++l) {
        const double c = acv(l, t);
        s += (2.0 * l + 1.0) * c * c;
    }
    return std::sqrt(s);
}

double operator_trace_norm(const SpectralEigenvalues& f, double lambda)
{
    double s = f.tail_bound;
    for (int l = 0; l <= f.band_limit(); ++l)
        s += (2.0 * l + 1.0) * f(l, lambda);
    return s;
}

// --- Fourier pair ----------------------------------------------------------

SpectralTabulation spectral_from_autocov(const AutocovarianceSpectrum& acv, int grid_size,
                                         double tail_tolerance, NegativeDensityPolicy policy)
{
    const Eigen::VectorXd grid = frequency_grid(grid_size);
    const int lmax = acv.band_limit;
    Eigen::MatrixXd f(lmax + 1, grid_size);
    SpectralTabulation out;
    out.truncation_tail = Eigen::VectorXd::Zero(lmax + 1);

    // cos(t lambda_k) table shared by all l.
    Eigen::MatrixXd cos_tab(acv.max_lag + 1, grid_size);
    for (int t = 0; t <= acv.max_lag; ++t)
        for (int k = 0; k < grid_size; ++k)
            cos_tab(t, k) = std::cos(t * grid(k));

    Eigen::VectorXd lag_weights = Eigen::VectorXd::Constant(acv.max_lag + 1, 2.0);
    lag_weights(0) = 1.0;

    int clipped = 0;
    for (int l = 0; l <= lmax; ++l) {
        const Eigen::VectorXd c = acv.values.row(l).transpose().cwiseProduct(lag_weights);
        f.row(l) = (c.transpose() * cos_tab) / kTwoPi;

        const double scale = std::max(1.0, c.cwiseAbs().sum());
        for (int k = 0; k < grid_size; ++k) {
            if (f(l, k) >= 0)
                continue;
            if (policy == NegativeDensityPolicy::error && f(l, k) < -1e-12 * scale)
                throw std::domain_error("spectral_from_autocov: negative density " +
                                        std::to_string(f(l, k)) + " at l=" + std::to_string(l) +
                                        "; the autocovariance is not positive definite");
            f(l, k) = 0.0;
            ++clipped;
        }

        // Geometric extrapolation of the omitted lags.
        const int T = acv.max_lag;
        if (T >= 1) {
            const double last = std::abs(acv.values(l, T));
            const double prev = std::abs(acv.values(l, T - 1));
            double tail = 0.0;
            if (last > 0) {
                const double ratio = prev > 0 ? last / prev : 1.0;
                tail = ratio < 1.0 ? 2.0 * last * ratio / (1.0 - ratio) / kTwoPi
                                   : std::numeric_limits<double>::infinity();
            }
            out.truncation_tail(l) = tail;
            if (tail > tail_tolerance)
                out.warnings.push_back("l=" + std::to_string(l) +
                                       ": lag truncation tail estimate " + std::to_string(tail) +
                                       " exceeds tolerance");
        }
    }
    if (clipped > 0)
        out.warnings.push_back(std::to_string(clipped) + " negative density values clipped to 0");

    // Tail above the band limit: sum (2l+1) f_l <= sum (2l+1) sum_t |C_l(t)| / 2pi,
    // bounded by the variance tail times the lag spread of the stored spectra.
    double spread = 1.0;
    for (int l = 0; l <= lmax; ++l) {
        const double c0 = acv.values(l, 0);
        if (c0 > 0)
            spread = std::max(spread, (acv.values.row(l).cwiseAbs().sum() * 2.0 - c0) / c0);
    }
    out.density = SpectralEigenvalues::tabulated(grid, std::move(f), acv.tail_bound * spread / kTwoPi);
    return out;
}

AutocovQuadrature autocov_from_spectral(const SpectralEigenvalues& f, int t, int grid_size,
                                        double tolerance)
{
    const Eigen::VectorXd grid = f.natural_grid(grid_size);
    const Eigen::MatrixXd values = f.on_grid(grid);
    const Eigen::Index n = grid.size();
    const double h = kTwoPi / n;

    Eigen::VectorXd cos_t(n), sin_t(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        cos_t(k) = std::cos(t * grid(k));
        sin_t(k) = std::sin(t * grid(k));
    }

    AutocovQuadrature out;
    out.values = h * values * cos_t;
    out.imaginary_residual = (h * values * sin_t).cwiseAbs().maxCoeff();

    if (n % 2 == 0) {
        Eigen::VectorXd half = Eigen::VectorXd::Zero(values.rows());
        for (Eigen::Index k = 0; k < n; k += 2)
            half += 2.0 * h * values.col(k) * cos_t(k);
        out.refinement_change = (half - out.values).cwiseAbs().maxCoeff();
    }
    const double scale = std::max(1.0, out.values.cwiseAbs().maxCoeff());
    out.converged = out.refinement_change <= tolerance * scale &&
                    out.imaginary_residual <= tolerance * scale;
    return out;
}

AutocovarianceSpectrum autocov_table_from_spectral(const SpectralEigenvalues& f, int max_lag,
                                                   int grid_size)
{
    AutocovarianceSpectrum acv(f.band_limit(), max_lag);
    for (int t = 0; t <= max_lag; ++t)
        acv.values.col(t) = autocov_from_spectral(f, t, grid_size).values;
    // int sum_{l>L} (2l+1) f_l <= 2 pi tail_bound
    acv.tail_bound = kTwoPi * f.tail_bound;
    return acv;
}

// --- diagnostics -----------------------------------------------------------

SummabilityReport summability_report(const AutocovarianceSpectrum& acv)
{
    SummabilityReport rep;
    rep.max_lag = acv.max_lag;
    for (int t = 0; t <= acv.max_lag; ++t) {
        const double mult = t == 0 ? 1.0 : 2.0;
        rep.kernel_l2_sum += mult * kernel_l2_norm(acv, t);
        double trace = 0.0;
        for (int l = 0; l <= acv.band_limit; ++l)
            trace += (2.0 * l + 1.0) * std::abs(acv(l, t));
        rep.trace_sum += mult * trace;
    }

    const int T = acv.max_lag;
    if (T >= 1) {
        for (int l = 0; l <= acv.band_limit; ++l) {
            const double c0 = std::abs(acv(l, 0));
            const double last = std::abs(acv(l, T));
            const double prev = std::abs(acv(l, T - 1));
            if (last <= 1e-12 * std::max(c0, 1e-300))
                continue;
            const double ratio = prev > 0 ? last / prev : 1.0;
            if (ratio >= 1.0 || last > 0.5 * c0) {
                rep.divergent = true;
                rep.tail_estimate = std::numeric_limits<double>::infinity();
                break;
            }
            rep.tail_estimate += (2.0 * l + 1.0) * 2.0 * last * ratio / (1.0 - ratio);
        }
    }
    return rep;
}

double ckl_truncation_error(const SpectralEigenvalues& f, int truncation, int grid_size)
{
    const int lmax = f.band_limit();
    if (truncation < 0 || truncation > lmax)
        throw std::invalid_argument("ckl_truncation_error: truncation must lie in [0, band_limit]");
    const Eigen::VectorXd grid = f.natural_grid(grid_size);
    const double h = kTwoPi / grid.size();
    double err = 0.0;
    for (int l = truncation + 1; l <= lmax; ++l) {
        double integral = 0.0;
        for (Eigen::Index k = 0; k < grid.size(); ++k)
            integral += f(l, grid(k));
        err += (2.0 * l + 1.0) / (4.0 * kPi) * h * integral;
    }
    // int sum_{l>L} (2l+1) f_l <= 2 pi tail_bound
    return err + f.tail_bound * kTwoPi / (4.0 * kPi);
}

} // namespace spharma
