#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "urnlab/kernels.hpp"

namespace urnlab {

using CsvValue = std::variant<long long, double, std::string>;

// Minimal CSV emitter. A header row is always present; schema names are
// recorded in the run manifest.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
    void row(const std::vector<CsvValue>& values);
    ~CsvWriter();

private:
    struct Impl;
    Impl* impl_;
};

// Triple-list export (row, col, prob) of the nonzero kernel entries.
void write_kernel_csv(const std::filesystem::path& path, const StochasticMatrix& p);

// State-space manifest: index, row-major counts, stationary probability.
void write_state_space_csv(const std::filesystem::path& path, const StateSpace& space,
                           const StationaryTable& pi);

// Inverse of write_kernel_csv; used for cross-checking exports.
StochasticMatrix read_kernel_csv(const std::filesystem::path& path, int size);

struct SvgSeries {
    std::string label;
    std::string colour;  // css colour
    std::vector<double> x;
    std::vector<double> y;
};

// Self-contained single-plot SVG, fixed 800x600 viewBox, inline styles,
// deterministic output for identical data.
void write_svg_plot(const std::filesystem::path& path, const std::string& title,
                    const std::vector<SvgSeries>& series, bool log_x = false,
                    bool log_y = false);

void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

nlohmann::json read_json(const std::filesystem::path& path);

// Formats a double so that reading it back reproduces the value exactly.
std::string format_double(double v);

}  // namespace urnlab
