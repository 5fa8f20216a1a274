#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "spharma/approximation.hpp"

using namespace spharma;
using oracle::pi;

namespace {

MultipoleArma arma(std::vector<double> ar, std::vector<double> ma, double noise = 1.0)
{
    MultipoleArma e;
    e.ar = Eigen::Map<Eigen::VectorXd>(ar.data(), static_cast<Eigen::Index>(ar.size()));
    e.ma = Eigen::Map<Eigen::VectorXd>(ma.data(), static_cast<Eigen::Index>(ma.size()));
    e.noise = noise;
    return e;
}

Eigen::VectorXd ar1_acv(double phi, double noise, int lags)
{
    Eigen::VectorXd c(lags + 1);
    for (int t = 0; t <= lags; ++t)
        c(t) = oracle::ar1_autocov(phi, noise, t);
    return c;
}

Eigen::VectorXd ma1_acv(double theta, double noise, int lags)
{
    Eigen::VectorXd c = Eigen::VectorXd::Zero(lags + 1);
    c(0) = noise * (1 + theta * theta);
    if (lags >= 1)
        c(1) = noise * theta;
    return c;
}

double sup_error(const MultipoleArma& fit, const std::function<double(double)>& f)
{
    const Eigen::VectorXd g = frequency_grid();
    double e = 0.0;
    for (Eigen::Index k = 0; k < g.size(); ++k)
        e = std::max(e, std::abs(arma_density(fit, g(k)) - f(g(k))));
    return e;
}

SpectralEigenvalues sphar1_target(int lmax)
{
    std::vector<MultipoleArma> e;
    for (int l = 0; l <= lmax; ++l)
        e.push_back(arma({0.6 / (l + 1)}, {}));
    return SpectralEigenvalues::rational(e);
}

} // namespace

TEST_CASE("innovations on white noise")
{
    const Eigen::VectorXd c = ma1_acv(0.0, 2.0, 30);
    const InnovationsResult r = innovations(c);
    CHECK(r.theta.cwiseAbs().maxCoeff() == 0.0);
    CHECK((r.v.array() - 2.0).abs().maxCoeff() == 0.0);
}

TEST_CASE("innovations on an MA(1) sequence converge to the invertible factor")
{
    // theta / (1 + theta^2) = 0.4 has the invertible root 0.5
    const double theta = (1.0 - std::sqrt(1.0 - 4 * 0.4 * 0.4)) / (2 * 0.4);
    CHECK(theta == doctest::Approx(0.5));
    const InnovationsResult r = innovations(ma1_acv(0.5, 1.0, 200));
    CHECK(r.theta(200, 0) == doctest::Approx(theta).epsilon(1e-10));
    CHECK(r.v(200) == doctest::Approx(1.0).epsilon(1e-10));
    for (int k = 1; k <= 200; ++k)
        CHECK(r.v(k) <= r.v(k - 1) + 1e-15);
}

TEST_CASE("innovations on an AR(1) sequence")
{
    const InnovationsResult r = innovations(ar1_acv(0.5, 1.0, 60));
    CHECK(r.v(60) == doctest::Approx(1.0).epsilon(1e-12));
    for (int j = 1; j <= 10; ++j)
        CHECK(r.theta(60, j - 1) == doctest::Approx(std::pow(0.5, j)).epsilon(1e-10));
}

TEST_CASE("innovations detects non positive definite input")
{
    Eigen::VectorXd c(3);
    c << 1.0, 0.9, -0.9;
    CHECK_THROWS_AS(innovations(c), std::domain_error);
    const InnovationsResult r = innovations(c, true);
    CHECK_FALSE(r.warnings.empty());
    CHECK(r.v.minCoeff() > 0.0);
    CHECK_THROWS_AS(innovations(Eigen::VectorXd::Zero(3)), std::domain_error);
}

TEST_CASE("fit_ma examples")
{
    const ArmaFit a = fit_ma(ma1_acv(0.5, 1.0, ma_fit_depth(1)), 1);
    CHECK(a.coefficients(0) == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(a.noise == doctest::Approx(1.0).epsilon(1e-3));

    for (int q : {0, 1, 3}) {
        const ArmaFit w = fit_ma(ma1_acv(0.0, 1.7, ma_fit_depth(q)), q);
        CHECK(w.noise == doctest::Approx(1.7));
        if (q > 0)
            CHECK(w.coefficients.cwiseAbs().maxCoeff() < 1e-12);
    }
    CHECK_THROWS(fit_ma(ma1_acv(0.5, 1.0, 10), 1));
    CHECK_THROWS(fit_ma(ma1_acv(0.5, 1.0, 300), -1));
}

TEST_CASE("fit_ma of an AR(1) target improves with q")
{
    double prev = std::numeric_limits<double>::infinity();
    for (int q : {1, 2, 4, 8}) {
        const ArmaFit fit = fit_ma(ar1_acv(0.5, 1.0, ma_fit_depth(q)), q);
        MultipoleArma e;
        e.ma = fit.coefficients;
        e.noise = fit.noise;
        const double err = sup_error(e, [](double x) { return oracle::ar1_density(0.5, 1.0, x); });
        CHECK(err < prev);
        prev = err;
        CHECK(min_root_modulus(ma_polynomial(e.ma)) > 1.0);
    }
}

TEST_CASE("fit_ma on exact MA(2) data with a root inside the circle")
{
    // theta(z) = (1 + 2 z)(1 + 0.25 z) is not invertible; its spectrum equals
    // that of 4 * (1 + 0.5 z)(1 + 0.25 z) with noise scaled by 4.
    const double t1 = 2.25, t2 = 0.5;
    Eigen::VectorXd c = Eigen::VectorXd::Zero(ma_fit_depth(2) + 1);
    c(0) = 1 + t1 * t1 + t2 * t2;
    c(1) = t1 + t1 * t2;
    c(2) = t2;
    const ArmaFit fit = fit_ma(c, 2);
    CHECK(fit.coefficients(0) == doctest::Approx(0.75).epsilon(1e-6));
    CHECK(fit.coefficients(1) == doctest::Approx(0.125).epsilon(1e-6));
    CHECK(fit.noise == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(min_root_modulus(ma_polynomial(fit.coefficients)) > 1.0);
}

TEST_CASE("fit_ar examples")
{
    const ArmaFit a = fit_ar(ar1_acv(0.5, 1.0, 1), 1);
    CHECK(a.coefficients(0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(a.noise == doctest::Approx(1.0).epsilon(1e-15));

    const ArmaFit w = fit_ar(ma1_acv(0.0, 2.5, 3), 3);
    CHECK(w.coefficients.cwiseAbs().maxCoeff() == 0.0);
    CHECK(w.noise == 2.5);

    Eigen::VectorXd bad(3);
    bad << 1.0, 0.9, -0.9;
    CHECK_THROWS_AS(fit_ar(bad, 2), std::domain_error);
}

TEST_CASE("fit_ar recovers random AR(p) models exactly")
{
    std::mt19937_64 rng(61);
    for (int trial = 0; trial < 30; ++trial) {
        const int p = 1 + trial % 5;
        MultipoleArma e;
        e.ar = oracle::random_stable_ar(rng, p);
        e.noise = 0.5 + trial * 0.1;
        const ArmaFit fit = fit_ar(model_autocovariance(e, p), p);
        CHECK((fit.coefficients - e.ar).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(fit.noise == doctest::Approx(e.noise).epsilon(1e-12));
        CHECK(min_root_modulus(ar_polynomial(fit.coefficients)) > 1.0);
    }
}

TEST_CASE("fit_ar of an MA(1) target improves with p")
{
    double prev = std::numeric_limits<double>::infinity();
    for (int p : {1, 2, 4, 8, 16}) {
        const ArmaFit fit = fit_ar(ma1_acv(0.5, 1.0, p), p);
        MultipoleArma e;
        e.ar = fit.coefficients;
        e.noise = fit.noise;
        const double err = sup_error(e, [](double x) {
            return oracle::arma_density_direct(Eigen::VectorXd(), Eigen::VectorXd::Constant(1, 0.5), 1.0, x);
        });
        CHECK(err < prev);
        prev = err;
    }
}

TEST_CASE("target_autocovariance of tabulated and rational forms agree")
{
    const auto rational = sphar1_target(2);
    const Eigen::VectorXd g = frequency_grid();
    const auto tab = SpectralEigenvalues::tabulated(g, rational.on_grid(g));
    for (int l = 0; l <= 2; ++l) {
        const Eigen::VectorXd a = target_autocovariance(rational, l, 30);
        const Eigen::VectorXd b = target_autocovariance(tab, l, 30);
        CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("approximate_operator returns a band-limited MA target unchanged")
{
    std::vector<MultipoleArma> e{arma({}, {0.5, 0.2}), arma({}, {-0.3, 0.1}, 0.5),
                                 arma({}, {0.4}, 0.2)};
    const auto target = SpectralEigenvalues::rational(e);
    ApproximationOptions opt;
    opt.epsilon = 10.0;
    const Approximation a = approximate_operator(target, opt);
    CHECK(a.certificate.passed);
    CHECK(a.certificate.total() <= 10.0);

    opt.epsilon = 1e-6;
    const Approximation b = approximate_operator(target, opt);
    CHECK(b.certificate.passed);
    CHECK(b.certificate.truncation == 2);
    CHECK(b.certificate.total_l2 < 1e-6);
    CHECK(b.certificate.order <= 2);
    for (int l = 0; l <= 2; ++l)
        CHECK((b.model[l].ma - e[l].ma.head(b.model[l].ma.size())).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("approximate_operator on white noise gives order zero")
{
    std::vector<MultipoleArma> e{arma({}, {}, 1.0), arma({}, {}, 0.4)};
    const auto target = SpectralEigenvalues::rational(e);
    for (auto kind : {ApproximationKind::ma, ApproximationKind::ar}) {
        ApproximationOptions opt;
        opt.kind = kind;
        opt.epsilon = 1e-3;
        const Approximation a = approximate_operator(target, opt);
        CHECK(a.certificate.passed);
        CHECK(a.certificate.order == 0);
        CHECK(a.certificate.total() < 1e-12);
    }
}

TEST_CASE("approximate_operator with a huge budget drops every multipole")
{
    ApproximationOptions opt;
    opt.epsilon = 1e6;
    const Approximation a = approximate_operator(sphar1_target(3), opt);
    CHECK(a.certificate.passed);
    CHECK(a.certificate.order == 0);
}

TEST_CASE("approximate_operator on an SPHAR(1) target in both norms")
{
    const auto target = sphar1_target(8);
    for (auto norm : {SpectralNorm::l2_kernel, SpectralNorm::trace}) {
        int prev = 0;
        for (double eps : {0.1, 0.03, 0.01}) {
            ApproximationOptions opt;
            opt.epsilon = eps;
            opt.norm = norm;
            const Approximation a = approximate_operator(target, opt);
            CHECK(a.certificate.passed);
            CHECK(a.certificate.total() <= eps);
            CHECK(a.certificate.grid_adequate);
            CHECK(a.certificate.order >= prev);
            prev = a.certificate.order;
            CHECK(check_invertible(a.model).causal);
            CHECK(a.certificate.total_l2 <= a.certificate.total_trace + 1e-15);
            double per = 0.0;
            for (const auto& m : a.certificate.per_multipole)
                per += (2 * m.l + 1) * m.sup_error * m.sup_error;
            CHECK(a.certificate.total_l2 <= std::sqrt(per) + a.certificate.tail_error + 1e-15);
        }
    }
}

TEST_CASE("approximate_operator kind AR on an MA(1) target")
{
    std::vector<MultipoleArma> e(5, arma({}, {0.5}));
    const auto target = SpectralEigenvalues::rational(e);
    ApproximationOptions opt;
    opt.kind = ApproximationKind::ar;
    opt.epsilon = 0.01;
    const Approximation a = approximate_operator(target, opt);
    CHECK(a.certificate.passed);
    CHECK(a.certificate.order > 0);
    CHECK(check_causal(a.model).causal);
}

TEST_CASE("approximate_operator reports a failed certificate at the order cap")
{
    std::vector<MultipoleArma> e(2, arma({0.97}, {}));
    ApproximationOptions opt;
    opt.epsilon = 1e-6;
    opt.order_cap = 2;
    const Approximation a = approximate_operator(SpectralEigenvalues::rational(e), opt);
    CHECK_FALSE(a.certificate.passed);
    CHECK(a.certificate.order_cap_reached);
    CHECK(a.certificate.total() > 1e-6);
}

TEST_CASE("approximate_operator accounts for the target's tail")
{
    auto target = sphar1_target(2);
    target.tail_bound = 0.2;
    ApproximationOptions opt;
    opt.epsilon = 0.1;
    const Approximation a = approximate_operator(target, opt);
    CHECK_FALSE(a.certificate.passed);
    CHECK(a.certificate.tail_error >= 0.2);

    target.tail_bound = std::numeric_limits<double>::infinity();
    CHECK_THROWS(approximate_operator(target, opt));
}

TEST_CASE("approximate_operator on a tabulated target")
{
    const auto rational = sphar1_target(3);
    const Eigen::VectorXd g = frequency_grid();
    const auto tab = SpectralEigenvalues::tabulated(g, rational.on_grid(g));
    ApproximationOptions opt;
    opt.epsilon = 0.01;
    const Approximation a = approximate_operator(tab, opt);
    CHECK(a.certificate.passed);
}

TEST_CASE("spectral_distance examples")
{
    const auto f = sphar1_target(2);
    CHECK(spectral_distance(f, f, SpectralNorm::l2_kernel) == 0.0);

    const Eigen::VectorXd g = frequency_grid(64);
    Eigen::MatrixXd a = Eigen::MatrixXd::Constant(3, 64, 0.3);
    Eigen::MatrixXd b = a;
    b.row(1).array() += 0.1;
    const auto fa = SpectralEigenvalues::tabulated(g, a);
    const auto fb = SpectralEigenvalues::tabulated(g, b);
    CHECK(spectral_distance(fa, fb, SpectralNorm::l2_kernel) == doctest::Approx(std::sqrt(3.0) * 0.1));
    CHECK(spectral_distance(fa, fb, SpectralNorm::trace) == doctest::Approx(0.3));

    const auto other = SpectralEigenvalues::tabulated(frequency_grid(32), Eigen::MatrixXd::Ones(3, 32));
    CHECK_THROWS(spectral_distance(fa, other, SpectralNorm::trace));
}

TEST_CASE("spectral_distance triangle inequality on random tabulated densities")
{
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Eigen::VectorXd g = frequency_grid(128);
    for (int trial = 0; trial < 20; ++trial) {
        auto random = [&] {
            Eigen::MatrixXd v(4, 128);
            for (Eigen::Index i = 0; i < v.size(); ++i)
                v(i) = u(rng);
            return SpectralEigenvalues::tabulated(g, v);
        };
        const auto a = random(), b = random(), c = random();
        for (auto norm : {SpectralNorm::l2_kernel, SpectralNorm::trace})
            CHECK(spectral_distance(a, c, norm) <=
                  spectral_distance(a, b, norm) + spectral_distance(b, c, norm) + 1e-12);
    }
}

TEST_CASE("wold on AR(1) and white noise")
{
    const SpharmaModel ar(std::vector<MultipoleArma>(3, arma({0.5}, {})));
    const WoldResult w = wold(model_autocovariance_table(ar, 400), 20);
    for (int l = 0; l <= 2; ++l) {
        CHECK(w.sigma2(l) == doctest::Approx(1.0).epsilon(1e-10));
        for (int j = 0; j <= 20; ++j)
            CHECK(std::abs(w.psi(l, j) - std::pow(0.5, j)) < 1e-6);
    }
    CHECK(w.deterministic_multipoles.empty());
    CHECK(std::abs(w.variance_residual) < 1e-8);
    CHECK(w.total_sigma2 <= w.total_variance);

    AutocovarianceSpectrum white(1, 300);
    white.at(0, 0) = 1.0;
    white.at(1, 0) = 2.0;
    const WoldResult ww = wold(white, 10);
    CHECK(ww.psi.col(0).isOnes());
    CHECK(ww.psi.rightCols(10).cwiseAbs().maxCoeff() == 0.0);
    CHECK(ww.sigma2(1) == 2.0);
}

TEST_CASE("wold flags a deterministic multipole")
{
    // C(t) = cos(t) is the autocovariance of a random sinusoid.
    AutocovarianceSpectrum a(1, 300);
    for (int t = 0; t <= 300; ++t) {
        a.at(0, t) = oracle::ar1_autocov(0.5, 1.0, t);
        a.at(1, t) = std::cos(0.7 * t);
    }
    const WoldResult w = wold(a, 10);
    CHECK(w.deterministic_multipoles == std::vector<int>{1});
    CHECK(w.variance_residual > 0.5 * 3.0);
}

TEST_CASE("wold density reproduces rational targets")
{
    std::mt19937_64 rng(81);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<MultipoleArma> e;
        for (int l = 0; l <= 3; ++l) {
            MultipoleArma x;
            x.ar = oracle::random_stable_ar(rng, 2, 1.2);
            x.ma = -oracle::random_stable_ar(rng, 2, 1.2);
            x.noise = 0.5 + l;
            e.push_back(x);
        }
        const SpharmaModel m(e);
        const WoldResult w = wold(model_autocovariance_table(m, 1000), 300);
        const Eigen::VectorXd g = frequency_grid(512);
        double worst = 0.0;
        for (int l = 0; l <= 3; ++l)
            for (Eigen::Index k = 0; k < g.size(); ++k)
                worst = std::max(worst, std::abs(wold_spectral_density(w, l, g(k)) -
                                                 model_spectral_density(m, l, g(k))));
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("h_step_error examples")
{
    const SpharmaModel ar(std::vector<MultipoleArma>(1, arma({0.5}, {})));
    const WoldResult w = wold(model_autocovariance_table(ar, 400), 100);
    CHECK(h_step_error(w, 1) == doctest::Approx(w.total_sigma2));
    CHECK(h_step_error(w, 2) == doctest::Approx(1.25).epsilon(1e-10));
    CHECK(h_step_error(w, 100) == doctest::Approx(4.0 / 3.0).epsilon(1e-10));
    double prev = 0.0;
    for (int h = 1; h <= 30; ++h) {
        CHECK(h_step_error(w, h) >= prev);
        prev = h_step_error(w, h);
    }
    CHECK_THROWS(h_step_error(w, 0));
}

TEST_CASE("l2_omega_check of the true model is zero")
{
    L2OmegaConfig cfg;
    cfg.n = 5000;
    const SpharmaModel ar(std::vector<MultipoleArma>(3, arma({0.5, -0.2}, {})));
    const L2OmegaEstimate a = l2_omega_check(ar, ar, ApproximationKind::ar, cfg);
    CHECK(a.mean_square_error < 1e-20);
    CHECK(a.predicted < 1e-20);
    const SpharmaModel ma(std::vector<MultipoleArma>(3, arma({}, {0.4, 0.1})));
    const L2OmegaEstimate b = l2_omega_check(ma, ma, ApproximationKind::ma, cfg);
    CHECK(b.mean_square_error < 1e-20);
    CHECK(b.predicted < 1e-20);
}

TEST_CASE("l2_omega_check for Wold truncations")
{
    const SpharmaModel truth(std::vector<MultipoleArma>(4, arma({0.6}, {0.3})));
    L2OmegaConfig cfg;
    cfg.n = 20000;
    double prev = std::numeric_limits<double>::infinity(), prev_se = 0.0;
    for (int q : {1, 2, 4, 8}) {
        const SpharmaModel fit = truncated_wold_model(truth, 3, q);
        const L2OmegaEstimate est = l2_omega_check(truth, fit, ApproximationKind::ma, cfg);
        CHECK(est.mean_square_error <= prev + est.standard_error + prev_se);
        CHECK(std::abs(est.mean_square_error - est.predicted) < 4 * est.standard_error);
        prev = est.mean_square_error;
        prev_se = est.standard_error;
    }
}

TEST_CASE("l2_omega_check rejects non-causal inputs")
{
    const SpharmaModel good(std::vector<MultipoleArma>(1, arma({0.5}, {})));
    const SpharmaModel bad(std::vector<MultipoleArma>(1, arma({1.5}, {})));
    CHECK_THROWS_AS(l2_omega_check(bad, good, ApproximationKind::ma, {}), std::domain_error);
    CHECK_THROWS_AS(l2_omega_check(good, bad, ApproximationKind::ar, {}), std::domain_error);
}
