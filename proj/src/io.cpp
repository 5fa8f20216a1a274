#include "spharma/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <vector>

namespace spharma::io {

namespace {

json vec_json(const Eigen::VectorXd& v)
{
    return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd json_vec(const json& j, const char* what)
{
    if (!j.is_array())
        throw SchemaError(std::string(what) + ": expected an array");
    Eigen::VectorXd v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number())
            throw SchemaError(std::string(what) + ": non-numeric entry");
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

json mat_json(const Eigen::MatrixXd& m)
{
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        rows.push_back(vec_json(m.row(i).transpose()));
    return rows;
}

Eigen::MatrixXd json_mat(const json& j, const char* what)
{
    if (!j.is_array() || j.empty())
        throw SchemaError(std::string(what) + ": expected a nonempty array of rows");
    const Eigen::VectorXd first = json_vec(j[0], what);
    Eigen::MatrixXd m(j.size(), first.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        const Eigen::VectorXd row = json_vec(j[i], what);
        if (row.size() != first.size())
            throw SchemaError(std::string(what) + ": ragged rows");
        m.row(static_cast<Eigen::Index>(i)) = row.transpose();
    }
    return m;
}

const json& field(const json& doc, const char* key)
{
    if (!doc.is_object() || !doc.contains(key))
        throw SchemaError(std::string("missing field '") + key + "'");
    return doc.at(key);
}

template <typename T>
T get(const json& doc, const char* key)
{
    try {
        return field(doc, key).get<T>();
    } catch (const json::exception& e) {
        throw SchemaError(std::string("field '") + key + "': " + e.what());
    }
}

void check_schema(const json& doc)
{
    if (doc.is_object() && doc.contains("schema") && doc["schema"] != kSchemaVersion)
        throw SchemaError("unsupported schema version " + doc["schema"].dump());
}

json versioned(json doc)
{
    doc["schema"] = kSchemaVersion;
    return doc;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out)
{
    std::ofstream out(path, mode);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << std::setprecision(17);
    return out;
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in)
{
    std::ifstream in(path, mode);
    if (!in)
        throw IoError("cannot read " + path.string());
    return in;
}

void finish(std::ofstream& out, const fs::path& path)
{
    out.flush();
    if (!out)
        throw IoError("write failed for " + path.string());
}

// Parses a CSV with the given header into rows of doubles.
std::vector<std::vector<double>> read_csv(const fs::path& path, const std::string& header)
{
    std::ifstream in = open_in(path);
    std::string line;
    if (!std::getline(in, line) || line != header)
        throw SchemaError(path.string() + ": expected header '" + header + "'");
    const auto cols = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',') + 1);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            std::size_t used = 0;
            double v = 0;
            try {
                v = std::stod(cell, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != cell.size())
                throw SchemaError(path.string() + ": bad number '" + cell + "'");
            row.push_back(v);
        }
        if (row.size() != cols)
            throw SchemaError(path.string() + ": wrong column count");
        rows.push_back(std::move(row));
    }
    return rows;
}

int as_int(double v, const fs::path& path)
{
    if (v != std::floor(v) || std::abs(v) > 1e9)
        throw SchemaError(path.string() + ": expected an integer, got " + std::to_string(v));
    return static_cast<int>(v);
}

} // namespace

std::uint64_t fnv1a(const std::string& bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash(const json& config)
{
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << fnv1a(config.dump());
    return out.str();
}

json read_json(const fs::path& path)
{
    std::ifstream in = open_in(path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError(path.string() + ": " + e.what());
    }
}

void write_json(const fs::path& path, const json& doc)
{
    std::ofstream out = open_out(path);
    out << doc.dump(2) << '\n';
    finish(out, path);
}

// --- grid ------------------------------------------------------------------

json to_json(const SphereGrid& grid)
{
    return versioned({{"colatitudes", vec_json(grid.colatitudes)},
                      {"weights", vec_json(grid.colat_weights)},
                      {"n_lon", grid.n_lon},
                      {"band_limit", grid.band_limit}});
}

SphereGrid grid_from_json(const json& doc)
{
    check_schema(doc);
    SphereGrid g;
    g.band_limit = get<int>(doc, "band_limit");
    g.n_lon = get<int>(doc, "n_lon");
    g.colatitudes = json_vec(field(doc, "colatitudes"), "colatitudes");
    g.colat_weights = json_vec(field(doc, "weights"), "weights");
    if (g.band_limit < 0 || g.n_lon < 1 || g.colatitudes.size() != g.colat_weights.size() ||
        g.colatitudes.size() == 0)
        throw SchemaError("grid: inconsistent dimensions");
    return g;
}

// --- autocovariance --------------------------------------------------------

json to_json(const AutocovarianceSpectrum& acv)
{
    return versioned({{"band_limit", acv.band_limit},
                      {"max_lag", acv.max_lag},
                      {"C", mat_json(acv.values)},
                      {"tail_bound", acv.tail_bound}});
}

AutocovarianceSpectrum acv_from_json(const json& doc)
{
    check_schema(doc);
    AutocovarianceSpectrum acv;
    acv.band_limit = get<int>(doc, "band_limit");
    acv.max_lag = get<int>(doc, "max_lag");
    acv.values = json_mat(field(doc, "C"), "C");
    acv.tail_bound = doc.value("tail_bound", 0.0);
    if (acv.values.rows() != acv.band_limit + 1 || acv.values.cols() != acv.max_lag + 1)
        throw SchemaError("autocovariance: C does not match band_limit/max_lag");
    try {
        acv.validate();
    } catch (const std::invalid_argument& e) {
        throw SchemaError(e.what());
    }
    return acv;
}

// --- model -----------------------------------------------------------------

json to_json(const MultipoleArma& arma, int l)
{
    return {{"l", l}, {"ar", vec_json(arma.ar)}, {"ma", vec_json(arma.ma)}, {"noise", arma.noise}};
}

namespace {

std::vector<MultipoleArma> entries_from_json(const json& list)
{
    if (!list.is_array() || list.empty())
        throw SchemaError("entries: expected a nonempty array");
    std::map<int, MultipoleArma> by_l;
    for (const json& e : list) {
        const int l = get<int>(e, "l");
        MultipoleArma arma;
        arma.ar = e.contains("ar") ? json_vec(e["ar"], "ar") : Eigen::VectorXd();
        arma.ma = e.contains("ma") ? json_vec(e["ma"], "ma") : Eigen::VectorXd();
        arma.noise = get<double>(e, "noise");
        if (!(arma.noise > 0) || !std::isfinite(arma.noise))
            throw SchemaError("l=" + std::to_string(l) + ": noise must be positive");
        if (!arma.ar.allFinite() || !arma.ma.allFinite())
            throw SchemaError("l=" + std::to_string(l) + ": non-finite coefficient");
        if (!by_l.emplace(l, std::move(arma)).second)
            throw SchemaError("l=" + std::to_string(l) + " listed twice");
    }
    std::vector<MultipoleArma> out;
    for (auto& [l, arma] : by_l) {
        if (l != static_cast<int>(out.size()))
            throw SchemaError("entries must cover l = 0..L without gaps");
        out.push_back(std::move(arma));
    }
    return out;
}

} // namespace

json to_json(const SpharmaModel& model)
{
    json entries = json::array();
    for (int l = 0; l <= model.band_limit(); ++l)
        entries.push_back(to_json(model[l], l));
    return versioned({{"band_limit", model.band_limit()}, {"entries", entries}});
}

SpharmaModel model_from_json(const json& doc)
{
    check_schema(doc);
    std::vector<MultipoleArma> entries = entries_from_json(field(doc, "entries"));
    if (doc.contains("band_limit") && get<int>(doc, "band_limit") + 1 != static_cast<int>(entries.size()))
        throw SchemaError("model: band_limit does not match entries");
    return SpharmaModel(std::move(entries));
}

// --- spectral density ------------------------------------------------------

json to_json(const SpectralEigenvalues& f)
{
    if (f.is_rational()) {
        json entries = json::array();
        const auto& r = f.rational_form();
        for (std::size_t l = 0; l < r.entries.size(); ++l)
            entries.push_back(to_json(r.entries[l], static_cast<int>(l)));
        return versioned({{"form", "rational"},
                          {"band_limit", f.band_limit()},
                          {"entries", entries},
                          {"tail_bound", f.tail_bound}});
    }
    const auto& t = f.tabulated_form();
    return versioned({{"form", "tabulated"},
                      {"band_limit", f.band_limit()},
                      {"lambda_grid", vec_json(t.lambda_grid)},
                      {"f", mat_json(t.values)},
                      {"tail_bound", f.tail_bound}});
}

SpectralEigenvalues spectral_from_json(const json& doc)
{
    check_schema(doc);
    const double tail = doc.is_object() ? doc.value("tail_bound", 0.0) : 0.0;
    try {
        if (doc.is_object() && doc.contains("lambda_grid"))
            return SpectralEigenvalues::tabulated(json_vec(doc["lambda_grid"], "lambda_grid"),
                                                  json_mat(field(doc, "f"), "f"), tail);
        const json& list = doc.is_array() ? doc : field(doc, "entries");
        return SpectralEigenvalues::rational(entries_from_json(list), tail);
    } catch (const SchemaError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw SchemaError(e.what());
    }
}

// --- reports ---------------------------------------------------------------

json to_json(const ApproximationCertificate& cert)
{
    json per = json::array();
    for (const auto& m : cert.per_multipole)
        per.push_back({{"l", m.l}, {"order", m.order}, {"sup_error", m.sup_error}});
    return versioned({{"kind", to_string(cert.kind)},
                      {"norm", to_string(cert.norm)},
                      {"epsilon", cert.epsilon_target},
                      {"L_trunc", cert.truncation},
                      {"order", cert.order},
                      {"per_multipole", per},
                      {"per_multipole_budget", cert.per_multipole_budget},
                      {"tail_error", cert.tail_error},
                      {"total_l2", cert.total_l2},
                      {"total_trace", cert.total_trace},
                      {"refined_total", cert.refined_total},
                      {"grid_adequate", cert.grid_adequate},
                      {"order_cap_reached", cert.order_cap_reached},
                      {"passed", cert.passed}});
}

json to_json(const CheckResult& check)
{
    return {{"name", check.name},
            {"passed", check.passed},
            {"statistic", check.statistic},
            {"threshold", check.threshold},
            {"detail", check.detail}};
}

// --- series ----------------------------------------------------------------

json to_json(const SeriesSidecar& s)
{
    return versioned({{"band_limit", s.band_limit},
                      {"n", s.n},
                      {"seed", s.seed},
                      {"model_hash", s.model_hash},
                      {"burn_in", s.burn_in},
                      {"layout", "float64-le stream-major"}});
}

SeriesSidecar sidecar_from_json(const json& doc)
{
    check_schema(doc);
    SeriesSidecar s;
    s.band_limit = get<int>(doc, "band_limit");
    s.n = get<long>(doc, "n");
    s.seed = doc.value("seed", std::uint64_t{0});
    s.model_hash = doc.value("model_hash", std::string());
    s.burn_in = doc.value("burn_in", 0);
    if (s.band_limit < 0 || s.n < 1)
        throw SchemaError("sidecar: band_limit >= 0 and n >= 1 required");
    return s;
}

void write_series_binary(const fs::path& path, const HarmonicCoefficientSeries& series)
{
    static_assert(std::endian::native == std::endian::little, "little-endian host required");
    std::ofstream out = open_out(path, std::ios::out | std::ios::binary);
    // values is column-major (t, index): each column is one stream.
    out.write(reinterpret_cast<const char*>(series.values.data()),
              static_cast<std::streamsize>(series.values.size() * sizeof(double)));
    finish(out, path);
}

HarmonicCoefficientSeries read_series_binary(const fs::path& path, const SeriesSidecar& sidecar)
{
    HarmonicCoefficientSeries series(sidecar.band_limit, sidecar.n);
    const auto expected =
        static_cast<std::uintmax_t>(series.values.size()) * sizeof(double);
    std::error_code ec;
    const auto actual = fs::file_size(path, ec);
    if (ec)
        throw IoError("cannot read " + path.string());
    if (actual != expected)
        throw SchemaError(path.string() + ": size " + std::to_string(actual) +
                          " does not match sidecar (" + std::to_string(expected) + ")");
    std::ifstream in = open_in(path, std::ios::in | std::ios::binary);
    in.read(reinterpret_cast<char*>(series.values.data()),
            static_cast<std::streamsize>(expected));
    if (!in)
        throw IoError("short read from " + path.string());
    series.provenance.seed = sidecar.seed;
    series.provenance.burn_in = sidecar.burn_in;
    series.provenance.model_id = sidecar.model_hash;
    return series;
}

// --- CSV -------------------------------------------------------------------

void write_field_csv(const fs::path& path, const FieldSnapshot& field)
{
    std::ofstream out = open_out(path);
    out << "colat,lon,value\n";
    for (Eigen::Index i = 0; i < field.values.rows(); ++i)
        for (Eigen::Index j = 0; j < field.values.cols(); ++j)
            out << field.grid.colatitudes(i) << ',' << field.grid.longitude(static_cast<int>(j))
                << ',' << field.values(i, j) << '\n';
    finish(out, path);
}

Eigen::MatrixXd read_field_csv(const fs::path& path)
{
    const auto rows = read_csv(path, "colat,lon,value");
    Eigen::MatrixXd m(rows.size(), 3);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (int c = 0; c < 3; ++c)
            m(static_cast<Eigen::Index>(i), c) = rows[i][c];
    return m;
}

void write_coefficients_csv(const fs::path& path, const HarmonicCoefficients& coeffs)
{
    std::ofstream out = open_out(path);
    out << "l,m,value\n";
    for (int l = 0; l <= coeffs.band_limit; ++l)
        for (int m = -l; m <= l; ++m)
            out << l << ',' << m << ',' << coeffs(l, m) << '\n';
    finish(out, path);
}

HarmonicCoefficients read_coefficients_csv(const fs::path& path)
{
    const auto rows = read_csv(path, "l,m,value");
    int lmax = 0;
    for (const auto& r : rows)
        lmax = std::max(lmax, as_int(r[0], path));
    HarmonicCoefficients c(lmax);
    for (const auto& r : rows) {
        const int l = as_int(r[0], path), m = as_int(r[1], path);
        if (l < 0 || std::abs(m) > l)
            throw SchemaError(path.string() + ": invalid (l, m)");
        c(l, m) = r[2];
    }
    return c;
}

void write_series_csv(const fs::path& path, const HarmonicCoefficientSeries& series)
{
    std::ofstream out = open_out(path);
    out << "l,m,t,value\n";
    for (int l = 0; l <= series.band_limit; ++l)
        for (int m = -l; m <= l; ++m) {
            const auto s = series.stream(l, m);
            for (Eigen::Index t = 0; t < s.size(); ++t)
                out << l << ',' << m << ',' << t << ',' << s(t) << '\n';
        }
    finish(out, path);
}

HarmonicCoefficientSeries read_series_csv(const fs::path& path)
{
    const auto rows = read_csv(path, "l,m,t,value");
    int lmax = 0, tmax = 0;
    for (const auto& r : rows) {
        lmax = std::max(lmax, as_int(r[0], path));
        tmax = std::max(tmax, as_int(r[2], path));
    }
    HarmonicCoefficientSeries s(lmax, tmax + 1);
    for (const auto& r : rows) {
        const int l = as_int(r[0], path), m = as_int(r[1], path), t = as_int(r[2], path);
        if (l < 0 || std::abs(m) > l || t < 0)
            throw SchemaError(path.string() + ": invalid (l, m, t)");
        s.stream(l, m)(t) = r[3];
    }
    return s;
}

void write_autocov_csv(const fs::path& path, const AutocovarianceSpectrum& acv)
{
    std::ofstream out = open_out(path);
    out << "l,t,C\n";
    for (int l = 0; l <= acv.band_limit; ++l)
        for (int t = 0; t <= acv.max_lag; ++t)
            out << l << ',' << t << ',' << acv.values(l, t) << '\n';
    finish(out, path);
}

AutocovarianceSpectrum read_autocov_csv(const fs::path& path)
{
    const auto rows = read_csv(path, "l,t,C");
    int lmax = 0, tmax = 0;
    for (const auto& r : rows) {
        lmax = std::max(lmax, as_int(r[0], path));
        tmax = std::max(tmax, as_int(r[1], path));
    }
    AutocovarianceSpectrum acv(lmax, tmax);
    for (const auto& r : rows) {
        const int l = as_int(r[0], path), t = as_int(r[1], path);
        if (l < 0 || t < 0)
            throw SchemaError(path.string() + ": negative index");
        acv.at(l, t) = r[2];
    }
    return acv;
}

void write_density_csv(const fs::path& path, const Eigen::VectorXd& lambda,
                       const Eigen::MatrixXd& f)
{
    if (f.cols() != lambda.size())
        throw std::invalid_argument("write_density_csv: grid and table disagree");
    std::ofstream out = open_out(path);
    out << "l,lambda,f\n";
    for (Eigen::Index l = 0; l < f.rows(); ++l)
        for (Eigen::Index k = 0; k < f.cols(); ++k)
            out << l << ',' << lambda(k) << ',' << f(l, k) << '\n';
    finish(out, path);
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> read_density_csv(const fs::path& path)
{
    const auto rows = read_csv(path, "l,lambda,f");
    std::vector<double> grid;
    int lmax = 0;
    for (const auto& r : rows) {
        const int l = as_int(r[0], path);
        lmax = std::max(lmax, l);
        if (l == 0)
            grid.push_back(r[1]);
    }
    const auto n = static_cast<Eigen::Index>(grid.size());
    if (n == 0 || static_cast<Eigen::Index>(rows.size()) != (lmax + 1) * n)
        throw SchemaError(path.string() + ": table is not rectangular");
    Eigen::MatrixXd f(lmax + 1, n);
    for (std::size_t i = 0; i < rows.size(); ++i)
        f(static_cast<Eigen::Index>(i) / n, static_cast<Eigen::Index>(i) % n) = rows[i][2];
    return {Eigen::Map<Eigen::VectorXd>(grid.data(), n), f};
}

void write_trace_csv(const fs::path& path, const Eigen::VectorXd& lambda,
                     const Eigen::VectorXd& trace)
{
    std::ofstream out = open_out(path);
    out << "lambda,trace\n";
    for (Eigen::Index k = 0; k < lambda.size(); ++k)
        out << lambda(k) << ',' << trace(k) << '\n';
    finish(out, path);
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> read_trace_csv(const fs::path& path)
{
    const auto rows = read_csv(path, "lambda,trace");
    Eigen::VectorXd lambda(rows.size()), trace(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        lambda(static_cast<Eigen::Index>(i)) = rows[i][0];
        trace(static_cast<Eigen::Index>(i)) = rows[i][1];
    }
    return {lambda, trace};
}

} // namespace spharma::io
