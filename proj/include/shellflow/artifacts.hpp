#pragma once
//
// Run-artifact plumbing: CSV/JSON serialization with round-trip-safe number
// formatting, run directories, and manifests.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "shellflow/integrator.hpp"
#include "shellflow/steady.hpp"

namespace shellflow {

// 17 significant digits: enough to round-trip any double through text.
std::string fmt17(double v);

// Creates `dir` (and parents).  An existing non-empty directory is rejected
// unless force is set.  Throws std::runtime_error on refusal.
void ensure_run_dir(const std::filesystem::path& dir, bool force);

// series.csv: t, E, H1_sq, injection, Pi_0..Pi_N [, a_0..a_N].
void write_series_csv(const std::filesystem::path& path, const RunSeries& series,
                      bool full_state);

// Same rows as JSON (for --format json).
nlohmann::json series_to_json(const RunSeries& series, bool full_state);

nlohmann::json state_to_json(const ShellState& state);

nlohmann::json steady_to_json(const SteadyState& st);

// Default output root: $SHELLFLOW_OUT_DIR if set, else the working directory.
std::filesystem::path default_out_root();

// ISO-8601 UTC timestamp of the current wall clock.
std::string timestamp_utc();

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace shellflow
