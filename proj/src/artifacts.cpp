#include "shellflow/artifacts.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <stdexcept>

namespace shellflow {

namespace fs = std::filesystem;

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void ensure_run_dir(const fs::path& dir, bool force) {
    if (fs::exists(dir)) {
        if (!fs::is_directory(dir))
            throw std::runtime_error("output path exists and is not a directory: " +
                                     dir.string());
        if (!fs::is_empty(dir) && !force)
            throw std::runtime_error("output directory not empty (use --force): " +
                                     dir.string());
    }
    fs::create_directories(dir);
}

void write_series_csv(const fs::path& path, const RunSeries& series,
                      bool full_state) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    const int n = series.params.n_shells + 1;
    out << "t,E,H1_sq,injection";
    for (int j = 0; j < n; ++j) out << ",Pi_" << j;
    if (full_state)
        for (int j = 0; j < n; ++j) out << ",a_" << j;
    out << "\n";
    for (const DiagnosticsRow& row : series.rows) {
        out << fmt17(row.t) << ',' << fmt17(row.energy) << ',' << fmt17(row.h1_sq)
            << ',' << fmt17(row.injection);
        for (int j = 0; j < n; ++j) out << ',' << fmt17(row.flux[j]);
        if (full_state)
            for (int j = 0; j < n; ++j) out << ',' << fmt17(row.a[j]);
        out << "\n";
    }
}

nlohmann::json series_to_json(const RunSeries& series, bool full_state) {
    nlohmann::json rows = nlohmann::json::array();
    for (const DiagnosticsRow& row : series.rows) {
        nlohmann::json r{{"t", row.t},
                         {"E", row.energy},
                         {"H1_sq", row.h1_sq},
                         {"injection", row.injection},
                         {"Pi", row.flux}};
        if (full_state) r["a"] = row.a;
        rows.push_back(std::move(r));
    }
    return rows;
}

nlohmann::json state_to_json(const ShellState& state) {
    return {{"t", state.t}, {"a", state.a}};
}

nlohmann::json steady_to_json(const SteadyState& st) {
    nlohmann::json j{{"mu", st.mu},       {"beta", st.beta},
                     {"gamma", st.gamma}, {"J", st.J},
                     {"residual", st.residual}, {"A", st.A},
                     {"alpha", st.alpha}};
    if (!st.warning.empty()) j["warning"] = st.warning;
    return j;
}

fs::path default_out_root() {
    if (const char* env = std::getenv("SHELLFLOW_OUT_DIR"); env && *env)
        return fs::path(env);
    return fs::current_path();
}

std::string timestamp_utc() {
    const std::time_t now =
        std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

}  // namespace shellflow
