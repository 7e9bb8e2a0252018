#include "urnlab/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "urnlab/errors.hpp"

namespace urnlab {

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) return "nan";
    return std::string(buf, ptr);
}

struct CsvWriter::Impl {
    std::ofstream out;
};

CsvWriter::CsvWriter(const std::filesystem::path& path,
                     const std::vector<std::string>& header)
    : impl_(new Impl) {
    impl_->out.open(path);
    if (!impl_->out) throw ConfigError("cannot open output file: " + path.string());
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) impl_->out << ',';
        impl_->out << header[i];
    }
    impl_->out << '\n';
}

void CsvWriter::row(const std::vector<CsvValue>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) impl_->out << ',';
        std::visit(
            [&](const auto& v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, double>)
                    impl_->out << format_double(v);
                else
                    impl_->out << v;
            },
            values[i]);
    }
    impl_->out << '\n';
}

CsvWriter::~CsvWriter() { delete impl_; }

void write_kernel_csv(const std::filesystem::path& path, const StochasticMatrix& p) {
    CsvWriter csv(path, {"row", "col", "prob"});
    for (int r = 0; r < p.size(); ++r)
        for (int c = 0; c < p.size(); ++c)
            if (p.p(r, c) != 0.0)
                csv.row({static_cast<long long>(r), static_cast<long long>(c), p.p(r, c)});
}

void write_state_space_csv(const std::filesystem::path& path, const StateSpace& space,
                           const StationaryTable& pi) {
    CsvWriter csv(path, {"index", "counts", "pi"});
    for (std::size_t i = 0; i < space.size(); ++i) {
        std::ostringstream counts;
        const auto& x = space.state(i);
        for (std::size_t k = 0; k < x.counts.size(); ++k) {
            if (k) counts << ' ';
            counts << x.counts[k];
        }
        csv.row({static_cast<long long>(i), counts.str(),
                 pi.p(static_cast<Eigen::Index>(i))});
    }
}

StochasticMatrix read_kernel_csv(const std::filesystem::path& path, int size) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open kernel csv: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("kernel csv is empty");
    StochasticMatrix out;
    out.p = Eigen::MatrixXd::Zero(size, size);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        int r = -1, c = -1;
        double v = 0;
        if (!std::getline(ls, cell, ',')) throw ConfigError("bad kernel csv row");
        r = std::stoi(cell);
        if (!std::getline(ls, cell, ',')) throw ConfigError("bad kernel csv row");
        c = std::stoi(cell);
        if (!std::getline(ls, cell, ',')) throw ConfigError("bad kernel csv row");
        v = std::stod(cell);
        if (r < 0 || r >= size || c < 0 || c >= size)
            throw ConfigError("kernel csv index out of range");
        out.p(r, c) = v;
    }
    return out;
}

namespace {

struct AxisScale {
    double lo = 0, hi = 1;
    bool log = false;
    double map(double v, double pix_lo, double pix_hi) const {
        double a = log ? std::log10(std::max(v, 1e-300)) : v;
        double l = log ? std::log10(std::max(lo, 1e-300)) : lo;
        double h = log ? std::log10(std::max(hi, 1e-300)) : hi;
        if (h <= l) h = l + 1;
        return pix_lo + (a - l) / (h - l) * (pix_hi - pix_lo);
    }
};

}  // namespace

void write_svg_plot(const std::filesystem::path& path, const std::string& title,
                    const std::vector<SvgSeries>& series, bool log_x, bool log_y) {
    double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
    for (const auto& s : series)
        for (std::size_t k = 0; k < s.x.size(); ++k) {
            xlo = std::min(xlo, s.x[k]);
            xhi = std::max(xhi, s.x[k]);
            ylo = std::min(ylo, s.y[k]);
            yhi = std::max(yhi, s.y[k]);
        }
    if (xlo > xhi) {
        xlo = 0;
        xhi = 1;
        ylo = 0;
        yhi = 1;
    }
    if (ylo == yhi) yhi = ylo + 1;
    AxisScale xs{xlo, xhi, log_x};
    AxisScale ys{ylo, yhi, log_y};
    const double px0 = 70, px1 = 770, py0 = 550, py1 = 60;  // y grows upward

    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open svg output: " + path.string());
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 600\">\n";
    out << "<rect width=\"800\" height=\"600\" fill=\"white\"/>\n";
    out << "<text x=\"400\" y=\"30\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"16\">"
        << title << "</text>\n";
    out << "<line x1=\"70\" y1=\"550\" x2=\"770\" y2=\"550\" stroke=\"black\"/>\n";
    out << "<line x1=\"70\" y1=\"550\" x2=\"70\" y2=\"60\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 5; ++k) {
        double fx = xlo + (xhi - xlo) * k / 5.0;
        double fy = ylo + (yhi - ylo) * k / 5.0;
        double gx = px0 + (px1 - px0) * k / 5.0;
        double gy = py0 + (py1 - py0) * k / 5.0;
        out << "<line x1=\"" << gx << "\" y1=\"550\" x2=\"" << gx
            << "\" y2=\"554\" stroke=\"black\"/>\n";
        out << "<text x=\"" << gx << "\" y=\"568\" text-anchor=\"middle\" "
               "font-family=\"sans-serif\" font-size=\"10\">"
            << format_double(fx) << "</text>\n";
        out << "<line x1=\"66\" y1=\"" << gy << "\" x2=\"70\" y2=\"" << gy
            << "\" stroke=\"black\"/>\n";
        out << "<text x=\"62\" y=\"" << gy + 3 << "\" text-anchor=\"end\" "
               "font-family=\"sans-serif\" font-size=\"10\">"
            << format_double(fy) << "</text>\n";
    }
    int legend_y = 80;
    for (const auto& s : series) {
        out << "<polyline fill=\"none\" stroke=\"" << s.colour << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t k = 0; k < s.x.size(); ++k) {
            if (k) out << ' ';
            out << xs.map(s.x[k], px0, px1) << ',' << ys.map(s.y[k], py0, py1);
        }
        out << "\"/>\n";
        out << "<text x=\"690\" y=\"" << legend_y << "\" font-family=\"sans-serif\" "
               "font-size=\"12\" fill=\""
            << s.colour << "\">" << s.label << "</text>\n";
        legend_y += 16;
    }
    out << "</svg>\n";
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open json output: " + path.string());
    out << doc.dump(2) << '\n';
}

nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open json input: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid json: ") + e.what());
    }
    return doc;
}

}  // namespace urnlab
