#pragma once

// JSON run configurations, built-in scenario presets, and the CSV formats
// for diagnostic series and field snapshots.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsmks/diagnostics.hpp"
#include "dsmks/solver.hpp"

namespace dsmks {

/// Malformed JSON; the message carries line and column.
class ConfigParseError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

nlohmann::json config_to_json(const RunConfig& config);
/// Unknown keys and wrong types are errors; the result is validated.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
void save_config(const RunConfig& config, const std::filesystem::path& path);

/// Sets the dotted key `path` (e.g. "model.tau") of a JSON configuration.
/// The alias "mass" addresses the initial density's mass_ratio.
void set_config_value(nlohmann::json& j, const std::string& path, double value);

struct ScenarioPreset {
    std::string name;
    std::string description;
    RunConfig config;
    /// Expected boundedness class of ‖v‖∞, when the preset encodes one.
    std::optional<Trend> expected;
};

const std::vector<ScenarioPreset>& builtin_presets();
/// Throws InvalidArgument listing the known names.
const ScenarioPreset& find_preset(const std::string& name);

/// Header of the diagnostic series CSV.
extern const char* const kSeriesHeader;

/// Formats a double with 17 significant digits.
std::string format_double(double x);

std::string series_to_csv(const std::vector<DiagnosticsRecord>& series);
void write_series(const std::vector<DiagnosticsRecord>& series, const std::filesystem::path& path);

/// Columns of a series CSV by name.
struct SeriesTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    /// Throws InvalidArgument for an unknown column.
    std::vector<double> column(const std::string& name) const;
};
SeriesTable read_series(const std::filesystem::path& path);

/// Snapshot CSV: first line `dim,n0[,n1],L0[,L1],t`, then one line per grid
/// row (x fastest), all values with 17 significant digits.
void write_snapshot(const Field& field, double t, const std::filesystem::path& path);

struct Snapshot {
    Grid grid;
    double t = 0.0;
    Field field;
};
Snapshot read_snapshot(const std::filesystem::path& path);

/// Writes the series, snapshots and run metadata of one run into `dir`.
class RunWriter {
public:
    RunWriter(std::filesystem::path dir, const Simulator& sim);

    RunCallbacks callbacks();
    /// Writes series.csv and run.json.
    void finish(const RunResult& result);

    const std::filesystem::path& dir() const { return dir_; }

private:
    void snapshot(const SimState& s);

    std::filesystem::path dir_;
    const Simulator* sim_;
    nlohmann::json snapshots_ = nlohmann::json::array();
    int snapshot_count_ = 0;
};

/// Runs `config`, writing everything below `dir`.
RunResult run_to_directory(const RunConfig& config, const std::filesystem::path& dir);

}  // namespace dsmks
