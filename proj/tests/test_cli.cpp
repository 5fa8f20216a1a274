#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <string>

#include "spharma/io.hpp"

using namespace spharma;
namespace fs = std::filesystem;

namespace {

const fs::path work = fs::path(SPHARMA_CLI_WORKDIR);

int run(const std::string& args, std::string* output = nullptr)
{
    const fs::path log = work / "last_output.txt";
    const std::string cmd = std::string(SPHARMA_CLI) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    if (output) {
        std::ifstream in(log);
        output->assign(std::istreambuf_iterator<char>(in), {});
    }
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

fs::path write_model(const std::string& name, const std::vector<MultipoleArma>& e)
{
    const fs::path p = work / name;
    io::write_json(p, io::to_json(SpharmaModel(e)));
    return p;
}

MultipoleArma ar1(double phi, double noise = 1.0)
{
    MultipoleArma e;
    e.ar = Eigen::VectorXd::Constant(1, phi);
    e.noise = noise;
    return e;
}

struct Setup {
    Setup()
    {
        fs::remove_all(work);
        fs::create_directories(work);
    }
};

const Setup setup;

} // namespace

TEST_CASE("simulate white noise writes the series and sidecar")
{
    const fs::path model = write_model("white.json", std::vector<MultipoleArma>(3, MultipoleArma{}));
    REQUIRE(run("simulate --model " + model.string() + " --n 10 --seed 1 --out " +
                (work / "white").string()) == 0);
    CHECK(fs::exists(work / "white" / "series.bin"));
    CHECK(fs::exists(work / "white" / "field_first.csv"));
    const io::json sc = io::read_json(work / "white" / "series.json");
    CHECK(sc["n"] == 10);
    CHECK(sc["schema"] == 1);
    CHECK(sc.contains("config_hash"));
    CHECK(fs::file_size(work / "white" / "series.bin") == 9u * 10u * 8u);
}

TEST_CASE("simulate is byte-identical for the same seed")
{
    const fs::path model = write_model("ar.json", std::vector<MultipoleArma>(2, ar1(0.5)));
    REQUIRE(run("simulate --model " + model.string() + " --n 200 --seed 7 --out " + (work / "a").string()) == 0);
    REQUIRE(run("simulate --model " + model.string() + " --n 200 --seed 7 --out " + (work / "b").string()) == 0);
    CHECK(slurp(work / "a" / "series.bin") == slurp(work / "b" / "series.bin"));
    CHECK(slurp(work / "a" / "series.json") == slurp(work / "b" / "series.json"));
}

TEST_CASE("simulate rejects a non-causal model and names the multipoles")
{
    std::vector<MultipoleArma> e{ar1(0.5), ar1(1.0), ar1(0.3), ar1(-1.5)};
    const fs::path model = write_model("noncausal.json", e);
    std::string out;
    CHECK(run("simulate --model " + model.string() + " --n 10 --out " + (work / "nc").string(), &out) == 2);
    CHECK(out.find("offending multipoles: 1 3") != std::string::npos);
}

TEST_CASE("input and I/O errors use their exit codes")
{
    CHECK(run("simulate --model " + (work / "missing.json").string()) == 2);
    const fs::path bad = work / "bad.json";
    std::ofstream(bad) << R"({"entries": [{"l": 0, "noise": -1}]})";
    CHECK(run("simulate --model " + bad.string() + " --n 5 --out " + (work / "x").string()) == 2);
    CHECK(run("approximate --model " + bad.string() + " --eps 0") == 2);
    CHECK(run("bogus") == 2);

    const fs::path model = write_model("io.json", std::vector<MultipoleArma>(1, MultipoleArma{}));
    std::ofstream(work / "blocker") << "file";
    CHECK(run("simulate --model " + model.string() + " --n 5 --out " + (work / "blocker" / "sub").string()) == 3);
}

TEST_CASE("spectrum of a white-noise model is flat per multipole")
{
    std::vector<MultipoleArma> e(2);
    e[1].noise = 3.0;
    const fs::path model = write_model("flat.json", e);
    REQUIRE(run("spectrum --model " + model.string() + " --lags 4 --out " + (work / "flat").string()) == 0);
    const auto [lam, f] = io::read_density_csv(work / "flat" / "density.csv");
    CHECK((f.row(0).array() - 1.0 / (2 * std::numbers::pi)).abs().maxCoeff() < 1e-15);
    CHECK((f.row(1).array() - 3.0 / (2 * std::numbers::pi)).abs().maxCoeff() < 1e-15);
    const AutocovarianceSpectrum a = io::read_autocov_csv(work / "flat" / "autocov.csv");
    CHECK(a.max_lag == 4);
    CHECK(a.values(1, 0) == 3.0);
    const auto [lam2, tr] = io::read_trace_csv(work / "flat" / "trace.csv");
    CHECK(tr(0) == doctest::Approx((1.0 + 9.0) / (2 * std::numbers::pi)));
    CHECK(io::read_json(work / "flat" / "spectrum.json").contains("config_hash"));
}

TEST_CASE("spectrum of an SPHAR(1) model at lambda = 0")
{
    const fs::path model = write_model("sphar.json", std::vector<MultipoleArma>(2, ar1(0.5)));
    REQUIRE(run("spectrum --model " + model.string() + " --out " + (work / "sphar").string()) == 0);
    const auto [lam, f] = io::read_density_csv(work / "sphar" / "density.csv");
    const Eigen::Index zero = lam.size() / 2;
    CHECK(lam(zero) == doctest::Approx(0.0));
    CHECK(f(1, zero) == doctest::Approx(2.0 / std::numbers::pi).epsilon(1e-14));
}

TEST_CASE("empirical and model spectra agree on a long simulation")
{
    const fs::path model = write_model("long.json", std::vector<MultipoleArma>(3, ar1(0.4)));
    REQUIRE(run("simulate --model " + model.string() + " --n 100000 --seed 2 --out " + (work / "long").string()) == 0);
    REQUIRE(run("spectrum --series " + (work / "long" / "series.bin").string() + " --lags 5 --out " +
                (work / "long_emp").string()) == 0);
    REQUIRE(run("spectrum --model " + model.string() + " --lags 5 --out " + (work / "long_mod").string()) == 0);
    const auto emp = io::read_autocov_csv(work / "long_emp" / "autocov.csv");
    const auto mod = io::read_autocov_csv(work / "long_mod" / "autocov.csv");
    CHECK(((emp.values - mod.values).array().abs() / mod.values(0, 0)).maxCoeff() < 0.03);
}

TEST_CASE("spectrum rejects a schema violation")
{
    const fs::path bad = work / "schema.json";
    std::ofstream(bad) << R"({"schema": 1, "band_limit": 0})";
    CHECK(run("spectrum --model " + bad.string() + " --out " + (work / "s").string()) == 2);
    CHECK(run("spectrum --out " + (work / "s").string()) == 2);
}

TEST_CASE("approximate writes a model and a certificate")
{
    std::vector<MultipoleArma> e;
    for (int l = 0; l <= 4; ++l)
        e.push_back(ar1(0.6 / (l + 1)));
    const fs::path target = write_model("target.json", e);

    REQUIRE(run("approximate --model " + target.string() + " --eps 1e6 --out " + (work / "huge").string()) == 0);
    CHECK(io::read_json(work / "huge" / "certificate.json")["order"] == 0);

    REQUIRE(run("approximate --model " + target.string() + " --eps 0.01 --kind ma --norm trace --out " +
                (work / "ma").string()) == 0);
    const io::json cert = io::read_json(work / "ma" / "certificate.json");
    CHECK(cert["passed"] == true);
    CHECK(cert["kind"] == "MA");
    CHECK(cert["norm"] == "trace");
    CHECK(cert["total_trace"].get<double>() <= 0.01);
    const SpharmaModel fit = io::model_from_json(io::read_json(work / "ma" / "model.json"));
    CHECK(check_invertible(fit).causal);

    std::vector<MultipoleArma> ma(3);
    for (auto& x : ma)
        x.ma = Eigen::VectorXd::Constant(1, 0.5);
    const fs::path ma_target = write_model("ma_target.json", ma);
    REQUIRE(run("approximate --model " + ma_target.string() + " --eps 0.01 --kind ar --out " +
                (work / "ar").string()) == 0);
    const io::json ar_cert = io::read_json(work / "ar" / "certificate.json");
    CHECK(ar_cert["passed"] == true);
    CHECK(ar_cert["order"].get<int>() > 0);
    CHECK(check_causal(io::model_from_json(io::read_json(work / "ar" / "model.json"))).causal);
}

TEST_CASE("approximate exits 4 when the budget cannot be met")
{
    const fs::path target = write_model("slow.json", std::vector<MultipoleArma>(1, ar1(0.999)));
    std::string out;
    CHECK(run("approximate --model " + target.string() + " --eps 1e-9 --out " + (work / "slow").string(), &out) == 4);
    CHECK(fs::exists(work / "slow" / "certificate.json"));
    CHECK(io::read_json(work / "slow" / "certificate.json")["passed"] == false);
}

TEST_CASE("verify passes on a well-specified simulation")
{
    const fs::path model = write_model("ver.json", std::vector<MultipoleArma>(5, ar1(0.5)));
    REQUIRE(run("simulate --model " + model.string() + " --n 8192 --seed 4 --out " + (work / "ver").string()) == 0);
    std::string out;
    const int code = run("verify --series " + (work / "ver" / "series.bin").string() + " --model " +
                             model.string() + " --bands 4 --out " + (work / "ver_report").string(),
                         &out);
    CHECK_MESSAGE(code == 0, out);
    const io::json rep = io::read_json(work / "ver_report" / "verify.json");
    CHECK(rep["passed"] == true);
    CHECK(rep["checks"].size() == 4);
}

TEST_CASE("verify flags a trended series and vacuously passes one band")
{
    const fs::path model = write_model("trend.json", std::vector<MultipoleArma>(3, ar1(0.3)));
    REQUIRE(run("simulate --model " + model.string() + " --n 4096 --seed 5 --out " + (work / "trend").string()) == 0);

    const io::SeriesSidecar sc = io::sidecar_from_json(io::read_json(work / "trend" / "series.json"));
    HarmonicCoefficientSeries s = io::read_series_binary(work / "trend" / "series.bin", sc);
    for (Eigen::Index t = 0; t < s.length(); ++t)
        s.values(t, 0) += 2e-3 * static_cast<double>(t);
    io::write_series_binary(work / "trend" / "series.bin", s);

    CHECK(run("verify --series " + (work / "trend" / "series.bin").string() + " --bands 1 --out " +
              (work / "trend_report").string()) == 5);
    const io::json rep = io::read_json(work / "trend_report" / "verify.json");
    CHECK(rep["checks"].size() == 4);
    for (const auto& c : rep["checks"]) {
        if (c["name"] == "stationarity")
            CHECK(c["passed"] == false);
        if (c["name"] == "cramer_orthogonality")
            CHECK(c["passed"] == true);
    }
}
