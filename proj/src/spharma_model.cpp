#include "spharma/spharma_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "spharma/sphere_harmonics.hpp"

namespace spharma {

namespace {

constexpr int kMaxPsiOrder = 1'000'000;

CausalityReport root_report(const SpharmaModel& model, double margin, bool use_ar)
{
    if (margin < 0)
        throw std::invalid_argument("root margin must be nonnegative");
    CausalityReport rep;
    rep.margin_used = margin;
    for (int l = 0; l <= model.band_limit(); ++l) {
        const MultipoleArma& e = model[l];
        const double xi = min_root_modulus(use_ar ? ar_polynomial(e.ar) : ma_polynomial(e.ma));
        rep.min_root_modulus = std::min(rep.min_root_modulus, xi);
        if (!(xi >= 1.0 + margin))
            rep.offending_multipoles.push_back(l);
    }
    rep.causal = rep.offending_multipoles.empty();
    return rep;
}

} // namespace

Eigen::VectorXd ar_polynomial(const Eigen::VectorXd& ar)
{
    Eigen::VectorXd c(ar.size() + 1);
    c(0) = 1.0;
    c.tail(ar.size()) = -ar;
    return c;
}

Eigen::VectorXd ma_polynomial(const Eigen::VectorXd& ma)
{
    Eigen::VectorXd c(ma.size() + 1);
    c(0) = 1.0;
    c.tail(ma.size()) = ma;
    return c;
}

double min_root_modulus(const Eigen::VectorXd& ascending)
{
    const Eigen::VectorXcd roots = polynomial_roots(ascending);
    if (roots.size() == 0)
        return std::numeric_limits<double>::infinity();
    return roots.cwiseAbs().minCoeff();
}

// --- SpharmaModel ----------------------------------------------------------

SpharmaModel::SpharmaModel(std::vector<MultipoleArma> entries) : entries_(std::move(entries))
{
    if (entries_.empty())
        throw std::invalid_argument("SpharmaModel: at least one multipole required");
    for (std::size_t l = 0; l < entries_.size(); ++l) {
        const MultipoleArma& e = entries_[l];
        if (!(e.noise > 0) || !std::isfinite(e.noise))
            throw std::invalid_argument("SpharmaModel: noise variance must be positive at l=" +
                                        std::to_string(l));
        if (!e.ar.allFinite() || !e.ma.allFinite())
            throw std::invalid_argument("SpharmaModel: non-finite coefficient at l=" +
                                        std::to_string(l));
    }
}

int SpharmaModel::ar_order() const
{
    Eigen::Index p = 0;
    for (const auto& e : entries_)
        p = std::max(p, e.ar.size());
    return static_cast<int>(p);
}

int SpharmaModel::ma_order() const
{
    Eigen::Index q = 0;
    for (const auto& e : entries_)
        q = std::max(q, e.ma.size());
    return static_cast<int>(q);
}

Eigen::VectorXd SpharmaModel::noise() const
{
    Eigen::VectorXd n(entries_.size());
    for (std::size_t l = 0; l < entries_.size(); ++l)
        n(l) = entries_[l].noise;
    return n;
}

SpectralEigenvalues SpharmaModel::spectral_density() const
{
    return SpectralEigenvalues::rational(entries_);
}

// --- validity --------------------------------------------------------------

CausalityReport check_causal(const SpharmaModel& model, double margin)
{
    return root_report(model, margin, true);
}

CausalityReport check_invertible(const SpharmaModel& model, double margin)
{
    return root_report(model, margin, false);
}

std::vector<bool> check_coprime(const SpharmaModel& model, double tol)
{
    if (!(tol > 0))
        throw std::invalid_argument("check_coprime: tolerance must be positive");
    std::vector<bool> out;
    for (int l = 0; l <= model.band_limit(); ++l) {
        const Eigen::VectorXcd ar_roots = polynomial_roots(ar_polynomial(model[l].ar));
        const Eigen::VectorXcd ma_roots = polynomial_roots(ma_polynomial(model[l].ma));
        bool coprime = true;
        for (Eigen::Index i = 0; i < ar_roots.size() && coprime; ++i)
            for (Eigen::Index j = 0; j < ma_roots.size() && coprime; ++j)
                coprime = std::abs(ar_roots(i) - ma_roots(j)) > tol;
        out.push_back(coprime);
    }
    return out;
}

// --- psi expansion ---------------------------------------------------------

Eigen::VectorXd psi_coefficients(const MultipoleArma& arma, int J)
{
    if (J < 0)
        throw std::invalid_argument("psi_coefficients: J must be nonnegative");
    const Eigen::Index p = arma.ar.size();
    const Eigen::Index q = arma.ma.size();
    Eigen::VectorXd psi(J + 1);
    psi(0) = 1.0;
    for (int j = 1; j <= J; ++j) {
        double v = j <= q ? arma.ma(j - 1) : 0.0;
        for (Eigen::Index k = 1; k <= std::min<Eigen::Index>(j, p); ++k)
            v += arma.ar(k - 1) * psi(j - k);
        psi(j) = v;
    }
    return psi;
}

Eigen::VectorXd psi_coefficients(const SpharmaModel& model, int l, int J, double margin)
{
    if (l < 0 || l > model.band_limit())
        throw std::out_of_range("psi_coefficients: multipole outside band limit");
    if (!(min_root_modulus(ar_polynomial(model[l].ar)) >= 1.0 + margin))
        throw std::domain_error("psi_coefficients: multipole " + std::to_string(l) +
                                " is not causal");
    return psi_coefficients(model[l], J);
}

int psi_truncation_order(const MultipoleArma& arma, double tol)
{
    const auto q = static_cast<int>(arma.ma.size());
    const auto p = static_cast<int>(arma.ar.size());
    const double xi = min_root_modulus(ar_polynomial(arma.ar));
    if (!std::isfinite(xi))
        return q;
    if (!(xi > 1.0))
        throw std::domain_error("psi_truncation_order: AR polynomial has a root in the unit disk");
    const double rho = 1.0 / xi;
    const double scale = 1.0 + arma.ma.cwiseAbs().sum();
    const double j0 = std::log(tol * (1.0 - rho) / scale) / std::log(rho);
    // Repeated roots multiply the envelope by a polynomial of degree < p.
    const double slack = 20.0 * p + 0.25 * j0;
    const double order = std::ceil(std::max(0.0, j0) + slack) + q;
    return static_cast<int>(std::min<double>(order, kMaxPsiOrder));
}

// --- second-order quantities -----------------------------------------------

double model_spectral_density(const SpharmaModel& model, int l, double lambda)
{
    if (l < 0 || l > model.band_limit())
        throw std::out_of_range("model_spectral_density: multipole outside band limit");
    const double xi = min_root_modulus(ar_polynomial(model[l].ar));
    if (std::abs(xi - 1.0) < 1e-12) {
        const Eigen::VectorXcd roots = polynomial_roots(ar_polynomial(model[l].ar));
        for (Eigen::Index i = 0; i < roots.size(); ++i)
            if (std::abs(std::abs(roots(i)) - 1.0) < 1e-12 &&
                std::abs(std::remainder(std::arg(roots(i)) - lambda, 2 * std::numbers::pi)) < 1e-9)
                throw std::domain_error("model_spectral_density: AR polynomial vanishes at lambda");
    }
    const double f = arma_density(model[l], lambda);
    if (!std::isfinite(f))
        throw std::domain_error("model_spectral_density: AR polynomial vanishes at lambda");
    return f;
}

Eigen::VectorXd model_autocovariance(const MultipoleArma& arma, int t_max)
{
    if (t_max < 0)
        throw std::invalid_argument("model_autocovariance: negative t_max");
    const int J = psi_truncation_order(arma);
    const Eigen::VectorXd psi = psi_coefficients(arma, J + t_max);
    Eigen::VectorXd c(t_max + 1);
    for (int t = 0; t <= t_max; ++t)
        c(t) = arma.noise * psi.head(J + 1).dot(psi.segment(t, J + 1));
    return c;
}

Eigen::VectorXd model_autocovariance(const SpharmaModel& model, int l, int t_max)
{
    if (l < 0 || l > model.band_limit())
        throw std::out_of_range("model_autocovariance: multipole outside band limit");
    return model_autocovariance(model[l], t_max);
}

AutocovarianceSpectrum model_autocovariance_table(const SpharmaModel& model, int t_max)
{
    AutocovarianceSpectrum acv(model.band_limit(), t_max);
    for (int l = 0; l <= model.band_limit(); ++l)
        acv.values.row(l) = model_autocovariance(model[l], t_max).transpose();
    return acv;
}

double kernel_from_eigenvalues(const Eigen::VectorXd& eigenvalues, double c)
{
    if (eigenvalues.size() == 0)
        return 0.0;
    const auto lmax = static_cast<int>(eigenvalues.size()) - 1;
    const Eigen::VectorXd p = legendre_all(lmax, c);
    double k = 0.0;
    for (int l = 0; l <= lmax; ++l)
        k += eigenvalues(l) * (2.0 * l + 1.0) / (4.0 * std::numbers::pi) * p(l);
    return k;
}

SummabilityReport summability_report(const SpharmaModel& model, int t_max)
{
    const CausalityReport causal = check_causal(model, 0.0);
    if (!causal.causal || !(causal.min_root_modulus > 1.0)) {
        SummabilityReport rep;
        rep.max_lag = t_max;
        rep.divergent = true;
        rep.kernel_l2_sum = rep.trace_sum = rep.tail_estimate =
            std::numeric_limits<double>::infinity();
        return rep;
    }

    const AutocovarianceSpectrum acv = model_autocovariance_table(model, t_max);
    SummabilityReport rep = summability_report(acv);
    rep.divergent = false;

    // |C_l(t)| <= A_l rho^t with rho = 1/xi_*; A_l fitted on the upper half of
    // the stored lags.
    const double rho = std::isfinite(causal.min_root_modulus) ? 1.0 / causal.min_root_modulus : 0.0;
    rep.tail_estimate = 0.0;
    if (rho > 0 && t_max >= 1) {
        for (int l = 0; l <= model.band_limit(); ++l) {
            double amp = 0.0;
            for (int t = t_max / 2; t <= t_max; ++t)
                amp = std::max(amp, std::abs(acv(l, t)) * std::pow(rho, -t));
            rep.tail_estimate +=
                (2.0 * l + 1.0) * 2.0 * amp * std::pow(rho, t_max + 1) / (1.0 - rho);
        }
    }
    return rep;
}

} // namespace spharma
