#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "spharma/approximation.hpp"
#include "spharma/io.hpp"
#include "spharma/simulation.hpp"
#include "spharma/spectral_model.hpp"
#include "spharma/spharma_model.hpp"

namespace {

using namespace spharma;
using io::json;
namespace fs = std::filesystem;

enum Exit { ok = 0, input = 2, io_failure = 3, budget = 4, verification = 5 };

struct Options {
    std::string model;
    std::string series;
    long n = 1000;
    std::uint64_t seed = 0;
    double eps = 0.01;
    std::string kind = "ma";
    std::string norm = "l2";
    std::string out = ".";
    int lmax = -1;
    int bands = 4;
    int lags = 20;
};

fs::path prepare_out(const std::string& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw io::IoError("cannot create output directory " + dir);
    return dir;
}

std::string join(const std::vector<int>& v)
{
    std::string s;
    for (int x : v)
        s += (s.empty() ? "" : " ") + std::to_string(x);
    return s;
}

fs::path sidecar_path(const fs::path& series)
{
    fs::path p = series;
    return p.replace_extension(".json");
}

HarmonicCoefficientSeries load_series(const std::string& path)
{
    const io::SeriesSidecar sc = io::sidecar_from_json(io::read_json(sidecar_path(path)));
    return io::read_series_binary(path, sc);
}

int cmd_simulate(const Options& o)
{
    const json model_doc = io::read_json(o.model);
    const SpharmaModel model = io::model_from_json(model_doc);
    const CausalityReport rep = check_causal(model);
    std::cout << "causality: min root modulus " << rep.min_root_modulus << '\n';
    if (!rep.causal) {
        std::cerr << "error: model is not causal; offending multipoles: "
                  << join(rep.offending_multipoles) << '\n';
        return input;
    }
    if (o.n < 1)
        throw std::invalid_argument("--n must be at least 1");

    SimulationConfig cfg;
    cfg.seed = o.seed;
    cfg.n = static_cast<int>(o.n);
    const HarmonicCoefficientSeries series = simulate_spharma(model, cfg);

    const fs::path out = prepare_out(o.out);
    io::SeriesSidecar sc;
    sc.band_limit = series.band_limit;
    sc.n = series.length();
    sc.seed = o.seed;
    sc.model_hash = io::config_hash(io::to_json(model));
    sc.burn_in = series.provenance.burn_in;
    json sidecar = io::to_json(sc);
    sidecar["config_hash"] =
        io::config_hash({{"command", "simulate"}, {"model", sc.model_hash}, {"n", o.n},
                         {"seed", o.seed}});
    io::write_series_binary(out / "series.bin", series);
    io::write_json(out / "series.json", sidecar);

    const SphereGrid grid = build_grid(series.band_limit);
    io::write_field_csv(out / "field_first.csv", synthesize_field(series, grid, 0));
    io::write_field_csv(out / "field_last.csv", synthesize_field(series, grid, series.length() - 1));
    std::cout << "wrote " << sc.n << " steps, band limit " << sc.band_limit << " to "
              << out.string() << '\n';
    return ok;
}

int cmd_spectrum(const Options& o)
{
    if (o.model.empty() == o.series.empty())
        throw std::invalid_argument("give exactly one of --model or --series");
    if (o.lags < 0)
        throw std::invalid_argument("--lags must be nonnegative");

    AutocovarianceSpectrum acv;
    SpectralEigenvalues density;
    json source;
    if (!o.model.empty()) {
        const SpharmaModel model = io::model_from_json(io::read_json(o.model));
        if (!check_causal(model).causal)
            throw std::invalid_argument("model is not causal; offending multipoles: " +
                                        join(check_causal(model).offending_multipoles));
        acv = model_autocovariance_table(model, o.lags);
        density = model.spectral_density();
        source = {{"model", io::config_hash(io::to_json(model))}};
    } else {
        const HarmonicCoefficientSeries series = load_series(o.series);
        acv = empirical_autocov(series, o.lags);
        SpectralTabulation tab = spectral_from_autocov(acv, kDefaultFrequencyGrid, 1e-8,
                                                       NegativeDensityPolicy::clip);
        for (const auto& w : tab.warnings)
            std::cerr << "warning: " << w << '\n';
        density = std::move(tab.density);
        source = {{"series", o.series}, {"seed", series.provenance.seed}};
    }

    const Eigen::VectorXd grid = density.natural_grid();
    const Eigen::MatrixXd f = density.on_grid(grid);
    Eigen::VectorXd trace = Eigen::VectorXd::Constant(grid.size(), density.tail_bound);
    for (Eigen::Index l = 0; l < f.rows(); ++l)
        trace += (2.0 * l + 1.0) * f.row(l).transpose();

    const fs::path out = prepare_out(o.out);
    io::write_autocov_csv(out / "autocov.csv", acv);
    io::write_density_csv(out / "density.csv", grid, f);
    io::write_trace_csv(out / "trace.csv", grid, trace);
    json manifest = {{"schema", io::kSchemaVersion},
                     {"source", source},
                     {"max_lag", o.lags},
                     {"files", {"autocov.csv", "density.csv", "trace.csv"}}};
    manifest["config_hash"] = io::config_hash({{"command", "spectrum"}, {"source", source},
                                               {"lags", o.lags}});
    io::write_json(out / "spectrum.json", manifest);
    return ok;
}

int cmd_approximate(const Options& o)
{
    const SpectralEigenvalues target = io::spectral_from_json(io::read_json(o.model));
    ApproximationOptions opt;
    opt.epsilon = o.eps;
    opt.kind = o.kind == "ar" ? ApproximationKind::ar : ApproximationKind::ma;
    opt.norm = o.norm == "trace" ? SpectralNorm::trace : SpectralNorm::l2_kernel;
    const Approximation approx = approximate_operator(target, opt);
    const ApproximationCertificate& cert = approx.certificate;

    const CausalityReport rep = opt.kind == ApproximationKind::ma
                                    ? check_invertible(approx.model)
                                    : check_causal(approx.model);
    std::cout << (opt.kind == ApproximationKind::ma ? "invertible: " : "causal: ")
              << (rep.causal ? "yes" : "no") << ", min root modulus " << rep.min_root_modulus
              << '\n';

    const fs::path out = prepare_out(o.out);
    json cert_doc = io::to_json(cert);
    cert_doc["config_hash"] = io::config_hash(
        {{"command", "approximate"}, {"target", io::config_hash(io::to_json(target))},
         {"eps", o.eps}, {"kind", o.kind}, {"norm", o.norm}});
    io::write_json(out / "model.json", io::to_json(approx.model));
    io::write_json(out / "certificate.json", cert_doc);

    std::cout << to_string(cert.kind) << " order " << cert.order << ", L_trunc "
              << cert.truncation << ", total " << cert.total() << " (eps " << o.eps << ")"
              << (cert.passed ? ", passed" : ", FAILED") << '\n';
    if (!cert.passed) {
        std::cerr << "error: error budget not met (achieved " << cert.total()
                  << (cert.order_cap_reached ? ", order cap reached" : "") << ")\n";
        return budget;
    }
    return ok;
}

int cmd_verify(const Options& o)
{
    const HarmonicCoefficientSeries series = load_series(o.series);
    std::vector<CheckResult> checks;
    checks.push_back(check_stationarity(series));
    checks.push_back(check_isotropy(series));

    const CramerReport cr = verify_cramer_orthogonality(series, o.bands);
    checks.push_back({"cramer_orthogonality", cr.passed, cr.max_correlation, cr.threshold,
                      std::to_string(cr.n_bands) + " bands, " + std::to_string(cr.replicates) +
                          " replicates"});

    SpectralEigenvalues density;
    if (!o.model.empty()) {
        density = io::model_from_json(io::read_json(o.model)).spectral_density();
    } else {
        const AutocovarianceSpectrum acv = empirical_autocov(series, o.lags);
        density = spectral_from_autocov(acv, kDefaultFrequencyGrid, 1e-8,
                                        NegativeDensityPolicy::clip)
                      .density;
    }
    const int trunc = o.lmax >= 0 ? o.lmax : series.band_limit / 2;
    checks.push_back(check_ckl_truncation(series, density, trunc));

    bool all = true;
    json list = json::array();
    for (const auto& c : checks) {
        all = all && c.passed;
        list.push_back(io::to_json(c));
        std::cout << c.name << ": " << (c.passed ? "pass" : "FAIL") << " (" << c.statistic
                  << " vs " << c.threshold << ")\n";
    }
    const fs::path out = prepare_out(o.out);
    json report = {{"schema", io::kSchemaVersion}, {"checks", list}, {"passed", all}};
    report["config_hash"] = io::config_hash({{"command", "verify"}, {"series", o.series},
                                             {"model", o.model}, {"bands", o.bands},
                                             {"lmax", trunc}, {"lags", o.lags}});
    io::write_json(out / "verify.json", report);
    return all ? ok : verification;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Spherical functional ARMA toolkit"};
    app.require_subcommand(1);
    Options o;

    auto* sim = app.add_subcommand("simulate", "simulate a SPHARMA model");
    sim->add_option("--model", o.model, "model JSON")->required()->check(CLI::ExistingFile);
    sim->add_option("--n", o.n, "number of time steps")->check(CLI::PositiveNumber);
    sim->add_option("--seed", o.seed, "RNG seed");
    sim->add_option("--out", o.out, "output directory");

    auto* spec = app.add_subcommand("spectrum", "autocovariance and spectral tables");
    spec->add_option("--model", o.model, "model JSON")->check(CLI::ExistingFile);
    spec->add_option("--series", o.series, "series binary (sidecar alongside)")
        ->check(CLI::ExistingFile);
    spec->add_option("--lags", o.lags, "largest lag");
    spec->add_option("--out", o.out, "output directory");

    auto* approx = app.add_subcommand("approximate", "finite-order approximation");
    approx->add_option("--model", o.model, "target density or model JSON")
        ->required()
        ->check(CLI::ExistingFile);
    approx->add_option("--eps", o.eps, "error budget")->check(CLI::PositiveNumber);
    approx->add_option("--kind", o.kind, "ma or ar")->check(CLI::IsMember({"ma", "ar"}));
    approx->add_option("--norm", o.norm, "l2 or trace")->check(CLI::IsMember({"l2", "trace"}));
    approx->add_option("--out", o.out, "output directory");

    auto* verify = app.add_subcommand("verify", "empirical checks on a series");
    verify->add_option("--series", o.series, "series binary (sidecar alongside)")
        ->required()
        ->check(CLI::ExistingFile);
    verify->add_option("--model", o.model, "model for the truncation check")
        ->check(CLI::ExistingFile);
    verify->add_option("--bands", o.bands, "frequency bands for orthogonality");
    verify->add_option("--lmax", o.lmax, "truncation degree for the CKL check");
    verify->add_option("--lags", o.lags, "lags for the empirical density");
    verify->add_option("--out", o.out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : input;
    }

    try {
        if (*sim)
            return cmd_simulate(o);
        if (*spec)
            return cmd_spectrum(o);
        if (*approx)
            return cmd_approximate(o);
        return cmd_verify(o);
    } catch (const io::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return io_failure;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return io_failure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return input;
    }
}
