#ifndef SPHARMA_IO_HPP
#define SPHARMA_IO_HPP

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "spharma/approximation.hpp"
#include "spharma/simulation.hpp"
#include "spharma/sphere_harmonics.hpp"
#include "spharma/spectral_model.hpp"
#include "spharma/spharma_model.hpp"

namespace spharma::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline constexpr int kSchemaVersion = 1;

/// Malformed or invalid input document.
struct SchemaError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// File could not be opened, read or written.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::uint64_t fnv1a(const std::string& bytes);
/// 16 hex digits of fnv1a over the compact dump of `config`.
std::string config_hash(const json& config);

json read_json(const fs::path& path);
void write_json(const fs::path& path, const json& doc);

json to_json(const SphereGrid& grid);
SphereGrid grid_from_json(const json& doc);

json to_json(const AutocovarianceSpectrum& acv);
AutocovarianceSpectrum acv_from_json(const json& doc);

json to_json(const MultipoleArma& arma, int l);
json to_json(const SpharmaModel& model);
/// Enforces noise > 0, finite coefficients and consecutive l = 0..L.
SpharmaModel model_from_json(const json& doc);

json to_json(const SpectralEigenvalues& f);
/// Accepts the rational form (an `entries` list, so a model file also loads)
/// or the tabulated form with `lambda_grid` and `f`.
SpectralEigenvalues spectral_from_json(const json& doc);

json to_json(const ApproximationCertificate& cert);
json to_json(const CheckResult& check);

struct SeriesSidecar {
    int band_limit = 0;
    long n = 0;
    std::uint64_t seed = 0;
    std::string model_hash;
    int burn_in = 0;
};

json to_json(const SeriesSidecar& sidecar);
SeriesSidecar sidecar_from_json(const json& doc);

/// Little-endian float64, stream-major: all t of (0,0), then (1,-1), ...
void write_series_binary(const fs::path& path, const HarmonicCoefficientSeries& series);
HarmonicCoefficientSeries read_series_binary(const fs::path& path, const SeriesSidecar& sidecar);

// CSV tables. Values are written with 17 significant digits so they parse
// back to the same doubles.
void write_field_csv(const fs::path& path, const FieldSnapshot& field);
Eigen::MatrixXd read_field_csv(const fs::path& path); ///< rows (colat, lon, value)

void write_coefficients_csv(const fs::path& path, const HarmonicCoefficients& coeffs);
HarmonicCoefficients read_coefficients_csv(const fs::path& path);

void write_series_csv(const fs::path& path, const HarmonicCoefficientSeries& series);
HarmonicCoefficientSeries read_series_csv(const fs::path& path);

void write_autocov_csv(const fs::path& path, const AutocovarianceSpectrum& acv);
AutocovarianceSpectrum read_autocov_csv(const fs::path& path);

void write_density_csv(const fs::path& path, const Eigen::VectorXd& lambda,
                       const Eigen::MatrixXd& f);
/// Returns the lambda grid and the (l, k) table.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> read_density_csv(const fs::path& path);

void write_trace_csv(const fs::path& path, const Eigen::VectorXd& lambda,
                     const Eigen::VectorXd& trace);
std::pair<Eigen::VectorXd, Eigen::VectorXd> read_trace_csv(const fs::path& path);

} // namespace spharma::io

#endif // SPHARMA_IO_HPP
