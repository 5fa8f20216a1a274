#include "spharma/approximation.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include "spharma/parallel.hpp"

namespace spharma {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Expands prod_k (1 - z / r_k) into ascending real coefficients.
Eigen::VectorXd poly_from_roots(const Eigen::VectorXcd& roots)
{
    Eigen::VectorXcd c = Eigen::VectorXcd::Zero(roots.size() + 1);
    c(0) = 1.0;
    for (Eigen::Index k = 0; k < roots.size(); ++k) {
        const std::complex<double> inv = -1.0 / roots(k);
        for (Eigen::Index i = k + 1; i >= 1; --i)
            c(i) += inv * c(i - 1);
    }
    return c.real();
}

// Reflects MA roots inside the closed unit disk to 1/conj(r), pushing roots on
// the circle just outside it. Returns the new theta_1..theta_q.
Eigen::VectorXd make_invertible(const Eigen::VectorXd& ma)
{
    const Eigen::VectorXd poly = ma_polynomial(ma);
    Eigen::VectorXcd roots = polynomial_roots(poly);
    bool changed = false;
    for (Eigen::Index k = 0; k < roots.size(); ++k) {
        const double mod = std::abs(roots(k));
        if (mod < 1.0 - 1e-9) {
            roots(k) = 1.0 / std::conj(roots(k));
            changed = true;
        } else if (mod <= 1.0 + 1e-6) {
            roots(k) *= (1.0 + 2e-6) / mod;
            changed = true;
        }
    }
    if (!changed)
        return ma;
    return poly_from_roots(roots).tail(ma.size());
}

bool ar_causal(const MultipoleArma& e)
{
    return min_root_modulus(ar_polynomial(e.ar)) > 1.0;
}

// f~_l on the grid for one fitted multipole.
Eigen::VectorXd fitted_density(const MultipoleArma& e, const Eigen::VectorXd& grid)
{
    Eigen::VectorXd out(grid.size());
    for (Eigen::Index k = 0; k < grid.size(); ++k)
        out(k) = arma_density(e, grid(k));
    return out;
}

MultipoleArma to_arma(const ArmaFit& fit, ApproximationKind kind)
{
    MultipoleArma e;
    e.noise = fit.noise;
    if (kind == ApproximationKind::ma)
        e.ma = fit.coefficients;
    else
        e.ar = fit.coefficients;
    return e;
}

struct Totals {
    double l2 = 0;
    double trace = 0;
};

// Sup over the grid of the in-band part of both distances; `fitted` may have
// fewer multipoles than `target`.
Totals in_band_distance(const Eigen::MatrixXd& target, const Eigen::MatrixXd& fitted)
{
    Totals t;
    for (Eigen::Index k = 0; k < target.cols(); ++k) {
        double sq = 0.0, abs_sum = 0.0;
        for (Eigen::Index l = 0; l < std::max(target.rows(), fitted.rows()); ++l) {
            const double a = l < target.rows() ? target(l, k) : 0.0;
            const double b = l < fitted.rows() ? fitted(l, k) : 0.0;
            const double d = b - a;
            sq += (2.0 * l + 1.0) * d * d;
            abs_sum += (2.0 * l + 1.0) * std::abs(d);
        }
        t.l2 = std::max(t.l2, std::sqrt(sq));
        t.trace = std::max(t.trace, abs_sum);
    }
    return t;
}

Eigen::MatrixXd model_on_grid(const SpharmaModel& model, const Eigen::VectorXd& grid)
{
    Eigen::MatrixXd out(model.band_limit() + 1, grid.size());
    for (int l = 0; l <= model.band_limit(); ++l)
        out.row(l) = fitted_density(model[l], grid).transpose();
    return out;
}

std::vector<int> order_schedule(int cap)
{
    std::vector<int> orders{0};
    for (int q = 1; q < cap; q *= 2)
        orders.push_back(q);
    if (cap > 0)
        orders.push_back(cap);
    return orders;
}

} // namespace

std::string to_string(ApproximationKind kind)
{
    return kind == ApproximationKind::ma ? "MA" : "AR";
}

std::string to_string(SpectralNorm norm)
{
    return norm == SpectralNorm::l2_kernel ? "l2" : "trace";
}

// --- innovations -----------------------------------------------------------

namespace {

// Innovations recursion. For each k, row(k)(j) = theta_{k,k-j} for j < k,
// so the inner sums run over contiguous memory. Rows are handed to `emit`.
template <class Emit>
Eigen::VectorXd innovations_rows(const Eigen::VectorXd& acv, bool floor_variance,
                                 std::vector<std::string>& warnings, Emit&& emit)
{
    if (acv.size() < 1 || !(acv(0) > 0))
        throw std::domain_error("innovations: C(0) must be positive");
    const auto n = static_cast<int>(acv.size()) - 1;
    Eigen::VectorXd v(n + 1);
    v(0) = acv(0);
    const double floor = 1e-12 * acv(0);
    // weighted[k](j) = theta_{k,k-j} v_j
    std::vector<Eigen::VectorXd> weighted(n + 1);
    Eigen::VectorXd row;
    for (int k = 1; k <= n; ++k) {
        row.resize(k);
        for (int i = 0; i < k; ++i) {
            const double s = acv(k - i) - weighted[i].head(i).dot(row.head(i));
            row(i) = s / v(i);
        }
        double vk = acv(0) - row.cwiseProduct(v.head(k)).dot(row);
        if (!(vk > floor)) {
            if (!floor_variance)
                throw std::domain_error("innovations: prediction error v_" + std::to_string(k) +
                                        " <= 0; autocovariance not positive definite");
            warnings.push_back("v_" + std::to_string(k) + " floored at 1e-12 C(0)");
            vk = floor;
        }
        v(k) = vk;
        weighted[k] = row.cwiseProduct(v.head(k));
        emit(k, row);
    }
    return v;
}

// theta_{n,1..J} at the final depth n together with v.
std::pair<Eigen::VectorXd, Eigen::VectorXd> innovations_last(const Eigen::VectorXd& acv, int J,
                                                             std::vector<std::string>& warnings)
{
    const auto n = static_cast<int>(acv.size()) - 1;
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(J);
    Eigen::VectorXd v = innovations_rows(acv, true, warnings, [&](int k, const Eigen::VectorXd& row) {
        if (k == n)
            for (int j = 1; j <= std::min(J, k); ++j)
                theta(j - 1) = row(k - j);
    });
    return {theta, v};
}

} // namespace

InnovationsResult innovations(const Eigen::VectorXd& acv, bool floor_variance)
{
    InnovationsResult res;
    const auto n = std::max(static_cast<int>(acv.size()) - 1, 0);
    res.theta = Eigen::MatrixXd::Zero(n + 1, std::max(n, 1));
    res.v = innovations_rows(acv, floor_variance, res.warnings, [&](int k, const Eigen::VectorXd& row) {
        for (int j = 1; j <= k; ++j)
            res.theta(k, j - 1) = row(k - j);
    });
    return res;
}

int ma_fit_depth(int q)
{
    return std::max(200, 20 * q);
}

ArmaFit fit_ma(const Eigen::VectorXd& acv, int q)
{
    if (q < 0)
        throw std::invalid_argument("fit_ma: negative order");
    if (acv.size() < 1 || !(acv(0) > 0))
        throw std::domain_error("fit_ma: C(0) must be positive");
    ArmaFit fit;
    if (q == 0) {
        fit.coefficients.resize(0);
        fit.noise = acv(0);
        return fit;
    }
    const int depth = ma_fit_depth(q);
    if (acv.size() < depth + 1)
        throw std::invalid_argument("fit_ma: need " + std::to_string(depth + 1) + " lags");
    std::vector<std::string> warnings;
    Eigen::VectorXd theta = innovations_last(acv.head(depth + 1), q, warnings).first;
    theta = make_invertible(theta);
    fit.coefficients = theta;
    fit.noise = acv(0) / (1.0 + theta.squaredNorm());
    return fit;
}

ArmaFit fit_ar(const Eigen::VectorXd& acv, int p)
{
    if (p < 0)
        throw std::invalid_argument("fit_ar: negative order");
    if (acv.size() < p + 1)
        throw std::invalid_argument("fit_ar: need lags 0..p");
    if (!(acv(0) > 0))
        throw std::domain_error("fit_ar: C(0) must be positive");
    ArmaFit fit;
    fit.coefficients = Eigen::VectorXd::Zero(p);
    double v = acv(0);
    Eigen::VectorXd prev(p);
    for (int k = 1; k <= p; ++k) {
        double s = acv(k);
        for (int j = 1; j < k; ++j)
            s -= fit.coefficients(j - 1) * acv(k - j);
        const double kappa = s / v;
        if (!(std::abs(kappa) < 1.0))
            throw std::domain_error("fit_ar: autocovariance not positive definite at order " +
                                    std::to_string(k));
        prev.head(k - 1) = fit.coefficients.head(k - 1);
        for (int j = 1; j < k; ++j)
            fit.coefficients(j - 1) = prev(j - 1) - kappa * prev(k - j - 1);
        fit.coefficients(k - 1) = kappa;
        v *= 1.0 - kappa * kappa;
    }
    fit.noise = v;
    return fit;
}

Eigen::VectorXd target_autocovariance(const SpectralEigenvalues& target, int l, int max_lag)
{
    if (target.is_rational() && ar_causal(target.rational_form().entries.at(l)))
        return model_autocovariance(target.rational_form().entries[l], max_lag);

    // Quadrature; lags at or beyond half the grid alias and are left at zero.
    const Eigen::VectorXd grid = target.natural_grid();
    const Eigen::Index n = grid.size();
    Eigen::VectorXd f(n);
    for (Eigen::Index k = 0; k < n; ++k)
        f(k) = target(l, grid(k));
    Eigen::VectorXd c = Eigen::VectorXd::Zero(max_lag + 1);
    const int resolvable = static_cast<int>(std::min<Eigen::Index>(max_lag, n / 2 - 1));
    for (int t = 0; t <= resolvable; ++t)
        c(t) = kTwoPi / n * (f.array() * (t * grid.array()).cos()).sum();
    return c;
}

// --- approximation ---------------------------------------------------------

Approximation approximate_operator(const SpectralEigenvalues& target,
                                   const ApproximationOptions& options)
{
    if (!(options.epsilon > 0))
        throw std::invalid_argument("approximate_operator: epsilon must be positive");
    if (!std::isfinite(target.tail_bound))
        throw std::invalid_argument("approximate_operator: target tail bound must be finite");
    if (options.order_cap < 0)
        throw std::invalid_argument("approximate_operator: negative order cap");

    const double eps = options.epsilon;
    const int lt = target.band_limit();
    const Eigen::VectorXd grid = target.natural_grid(options.grid_size);
    const Eigen::MatrixXd f = target.on_grid(grid);

    // Tail of the multipoles above each candidate truncation, in both norms.
    Eigen::VectorXd tail_l2(lt + 1), tail_tr(lt + 1);
    {
        Eigen::VectorXd sq = Eigen::VectorXd::Zero(grid.size());
        Eigen::VectorXd lin = Eigen::VectorXd::Zero(grid.size());
        for (int L = lt; L >= 0; --L) {
            tail_l2(L) = std::sqrt(sq.maxCoeff()) + target.tail_bound;
            tail_tr(L) = lin.maxCoeff() + target.tail_bound;
            sq += (2.0 * L + 1.0) * f.row(L).transpose().array().square().matrix();
            lin += (2.0 * L + 1.0) * f.row(L).transpose();
        }
    }
    const Eigen::VectorXd& tail = options.norm == SpectralNorm::trace ? tail_tr : tail_l2;
    int trunc = lt;
    for (int L = 0; L <= lt; ++L) {
        if (tail(L) <= eps / 2) {
            trunc = L;
            break;
        }
    }

    ApproximationCertificate cert;
    cert.kind = options.kind;
    cert.norm = options.norm;
    cert.epsilon_target = eps;
    cert.truncation = trunc;
    cert.tail_error = tail(trunc);
    cert.per_multipole_budget = eps / (2.0 * (trunc + 1.0) * (trunc + 1.0));
    cert.per_multipole.resize(trunc + 1);

    const std::vector<int> orders = order_schedule(options.order_cap);
    std::vector<MultipoleArma> entries(trunc + 1);

    parallel_for(trunc + 1, [&](std::int64_t li) {
        const int l = static_cast<int>(li);
        const Eigen::VectorXd fl = f.row(l).transpose();
        Eigen::VectorXd acv;
        MultipoleFit best{l, 0, std::numeric_limits<double>::infinity(), false};
        for (int order : orders) {
            const int lags = options.kind == ApproximationKind::ma
                                 ? (order == 0 ? 0 : ma_fit_depth(order))
                                 : order;
            if (acv.size() < lags + 1)
                acv = target_autocovariance(target, l, lags);
            const ArmaFit fit = options.kind == ApproximationKind::ma ? fit_ma(acv, order)
                                                                      : fit_ar(acv, order);
            const MultipoleArma e = to_arma(fit, options.kind);
            const double err = (fitted_density(e, grid) - fl).cwiseAbs().maxCoeff();
            best = {l, order, err, err <= cert.per_multipole_budget};
            entries[l] = e;
            if (best.budget_met)
                break;
        }
        cert.per_multipole[l] = best;
    });

    SpharmaModel model(entries);
    for (const MultipoleFit& m : cert.per_multipole) {
        cert.order = std::max(cert.order, m.order);
        cert.order_cap_reached = cert.order_cap_reached || !m.budget_met;
    }

    const Totals totals = in_band_distance(f, model_on_grid(model, grid));
    cert.total_l2 = totals.l2 + target.tail_bound;
    cert.total_trace = totals.trace + target.tail_bound;

    const Eigen::VectorXd fine = frequency_grid(4 * static_cast<int>(grid.size()));
    const Totals refined = in_band_distance(target.on_grid(fine), model_on_grid(model, fine));
    cert.refined_total = (options.norm == SpectralNorm::trace ? refined.trace : refined.l2) +
                         target.tail_bound;
    cert.grid_adequate =
        std::abs(cert.refined_total - cert.total()) <= 0.01 * cert.total() + 1e-9 * eps;

    cert.passed = !cert.order_cap_reached && cert.tail_error <= eps / 2 && cert.total() <= eps &&
                  cert.refined_total <= eps;
    return {std::move(model), std::move(cert)};
}

double spectral_distance(const SpectralEigenvalues& a, const SpectralEigenvalues& b,
                         SpectralNorm norm, int grid_size)
{
    Eigen::VectorXd grid;
    if (!a.is_rational() && !b.is_rational()) {
        const Eigen::VectorXd& ga = a.tabulated_form().lambda_grid;
        const Eigen::VectorXd& gb = b.tabulated_form().lambda_grid;
        if (ga.size() != gb.size() || (ga - gb).cwiseAbs().maxCoeff() > 1e-12)
            throw std::invalid_argument("spectral_distance: tabulated grids differ");
        grid = ga;
    } else if (!a.is_rational()) {
        grid = a.tabulated_form().lambda_grid;
    } else if (!b.is_rational()) {
        grid = b.tabulated_form().lambda_grid;
    } else {
        grid = frequency_grid(grid_size);
    }
    const Totals t = in_band_distance(a.on_grid(grid), b.on_grid(grid));
    const double tails = a.tail_bound + b.tail_bound;
    return (norm == SpectralNorm::trace ? t.trace : t.l2) + tails;
}

// --- Wold ------------------------------------------------------------------

WoldResult wold(const AutocovarianceSpectrum& acv, int J)
{
    if (J < 0)
        throw std::invalid_argument("wold: J must be nonnegative");
    const int depth = std::min(acv.max_lag, std::max(200, 2 * J));
    if (depth < J)
        throw std::invalid_argument("wold: autocovariance needs at least J lags");

    const int lmax = acv.band_limit;
    WoldResult w;
    w.psi = Eigen::MatrixXd::Zero(lmax + 1, J + 1);
    w.psi.col(0).setOnes();
    w.sigma2 = Eigen::VectorXd::Zero(lmax + 1);
    std::vector<std::vector<std::string>> warnings(lmax + 1);
    std::vector<char> deterministic(lmax + 1, 0);

    parallel_for(lmax + 1, [&](std::int64_t li) {
        const int l = static_cast<int>(li);
        const Eigen::VectorXd c = acv.values.row(l).head(depth + 1).transpose();
        if (!(c(0) > 0)) {
            deterministic[l] = 1;
            warnings[l].push_back("l=" + std::to_string(l) + ": zero variance");
            return;
        }
        std::vector<std::string> msgs;
        const auto [theta, v] = innovations_last(c, J, msgs);
        for (const auto& msg : msgs)
            warnings[l].push_back("l=" + std::to_string(l) + ": " + msg);
        w.psi.row(l).segment(1, J) = theta.transpose();
        w.sigma2(l) = v(depth);
        if (v(depth) <= 1e-10 * c(0))
            deterministic[l] = 1;
    });

    for (int l = 0; l <= lmax; ++l) {
        for (auto& msg : warnings[l])
            w.warnings.push_back(std::move(msg));
        if (deterministic[l])
            w.deterministic_multipoles.push_back(l);
        const double weight = 2.0 * l + 1.0;
        w.total_sigma2 += weight * w.sigma2(l);
        w.total_variance += weight * acv.values(l, 0);
        w.variance_residual -= weight * w.sigma2(l) * w.psi.row(l).squaredNorm();
    }
    w.variance_residual += w.total_variance;
    return w;
}

double wold_spectral_density(const WoldResult& w, int l, double lambda)
{
    if (l < 0 || l > w.band_limit())
        throw std::out_of_range("wold_spectral_density: multipole outside band limit");
    std::complex<double> s = 0.0;
    for (Eigen::Index j = 0; j < w.psi.cols(); ++j)
        s += w.psi(l, j) * std::polar(1.0, -static_cast<double>(j) * lambda);
    return std::norm(s) * w.sigma2(l) / kTwoPi;
}

double h_step_error(const WoldResult& w, int h)
{
    if (h < 1)
        throw std::invalid_argument("h_step_error: h must be at least 1");
    const Eigen::Index terms = std::min<Eigen::Index>(h, w.psi.cols());
    double s = 0.0;
    for (int l = 0; l <= w.band_limit(); ++l)
        s += (2.0 * l + 1.0) * w.sigma2(l) * w.psi.row(l).head(terms).squaredNorm();
    return s;
}

// --- L2(Omega) check -------------------------------------------------------

SpharmaModel truncated_wold_model(const SpharmaModel& truth, int band_limit, int q)
{
    if (band_limit < 0 || band_limit > truth.band_limit())
        throw std::invalid_argument("truncated_wold_model: band limit outside model");
    if (q < 0)
        throw std::invalid_argument("truncated_wold_model: negative order");
    std::vector<MultipoleArma> entries(band_limit + 1);
    for (int l = 0; l <= band_limit; ++l) {
        const Eigen::VectorXd psi = psi_coefficients(truth, l, q);
        entries[l].ma = psi.tail(q);
        entries[l].noise = truth[l].noise;
    }
    return SpharmaModel(std::move(entries));
}

L2OmegaEstimate l2_omega_check(const SpharmaModel& truth, const SpharmaModel& fitted,
                               ApproximationKind kind, const L2OmegaConfig& config)
{
    if (!check_causal(truth).causal || !check_causal(fitted).causal)
        throw std::domain_error("l2_omega_check: both models must be causal");
    if (config.n < 100)
        throw std::invalid_argument("l2_omega_check: need at least 100 samples");

    SimulationConfig sim_cfg;
    sim_cfg.seed = config.seed;
    sim_cfg.n = config.n;
    const SpharmaSimulation sim = simulate_spharma_with_innovations(truth, sim_cfg);

    const int lt = truth.band_limit();
    const int lf = std::min(fitted.band_limit(), lt);
    const int warmup = std::max(fitted.ar_order(), fitted.ma_order());
    const Eigen::Index n = config.n - warmup;

    Eigen::MatrixXd err(n, harmonic_count(lt));
    for (int l = 0; l <= lt; ++l) {
        for (int m = -l; m <= l; ++m) {
            const auto a = sim.series.stream(l, m);
            const auto z = sim.innovations.stream(l, m);
            auto e = err.col(harmonic_index(l, m));
            if (l > lf) {
                e = a.tail(n);
                continue;
            }
            const MultipoleArma& fit = fitted[l];
            for (Eigen::Index s = 0; s < n; ++s) {
                const Eigen::Index t = s + warmup;
                double rec = z(t);
                if (kind == ApproximationKind::ma) {
                    for (Eigen::Index j = 1; j <= fit.ma.size(); ++j)
                        rec += fit.ma(j - 1) * z(t - j);
                } else {
                    for (Eigen::Index j = 1; j <= fit.ar.size(); ++j)
                        rec += fit.ar(j - 1) * a(t - j);
                }
                e(s) = a(t) - rec;
            }
        }
    }
    const Eigen::VectorXd y = real_sph_harm_all(lt, config.colat, config.lon);
    const Eigen::VectorXd point = (err * y).array().square();
    const BatchMeans bm = batch_means(point, 50);

    L2OmegaEstimate out;
    out.mean_square_error = bm.mean;
    out.standard_error = bm.standard_error;

    // Analytic value from the true psi weights.
    for (int l = 0; l <= lt; ++l) {
        const double weight = (2.0 * l + 1.0) / (4.0 * kPi);
        const MultipoleArma& tr = truth[l];
        if (l > lf) {
            out.predicted += weight * model_autocovariance(tr, 0)(0);
            continue;
        }
        const int J = psi_truncation_order(tr) + fitted.ar_order() + fitted.ma_order();
        const Eigen::VectorXd psi = psi_coefficients(tr, J);
        const MultipoleArma& fit = fitted[l];
        double s = 0.0;
        for (int j = 1; j <= J; ++j) {
            double c = psi(j);
            if (kind == ApproximationKind::ma) {
                if (j <= fit.ma.size())
                    c -= fit.ma(j - 1);
            } else {
                for (Eigen::Index k = 1; k <= std::min<Eigen::Index>(j, fit.ar.size()); ++k)
                    c -= fit.ar(k - 1) * psi(j - k);
            }
            s += c * c;
        }
        out.predicted += weight * tr.noise * s;
    }
    return out;
}

} // namespace spharma
