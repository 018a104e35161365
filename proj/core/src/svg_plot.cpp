#include "posegen/svg_plot.hpp"

#include <algorithm>
#include <fstream>

#include "posegen/textio.hpp"

namespace posegen::io {

namespace {
constexpr double kWidth = 640, kHeight = 400;
constexpr double kMarginL = 56, kMarginR = 16, kMarginT = 16, kMarginB = 40;
}  // namespace

void write_density_svg(const std::string& path, const eval::DensityCurve& curve,
                       std::optional<double> ground_truth, const std::string& x_label) {
    if (curve.grid.size() < 2) throw ConfigError("curve too short to plot");
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");

    const double x0 = curve.grid.front(), x1 = curve.grid.back();
    const double ymax = std::max(1e-12, *std::max_element(curve.density.begin(), curve.density.end()));
    const double pw = kWidth - kMarginL - kMarginR;
    const double ph = kHeight - kMarginT - kMarginB;
    auto sx = [&](double x) { return kMarginL + (x - x0) / (x1 - x0) * pw; };
    auto sy = [&](double y) { return kMarginT + ph - y / (ymax * 1.05) * ph; };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    out << "  <rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
    // axes
    out << "  <line x1=\"" << kMarginL << "\" y1=\"" << kMarginT + ph << "\" x2=\""
        << kMarginL + pw << "\" y2=\"" << kMarginT + ph << "\" stroke=\"black\"/>\n";
    out << "  <line x1=\"" << kMarginL << "\" y1=\"" << kMarginT << "\" x2=\"" << kMarginL
        << "\" y2=\"" << kMarginT + ph << "\" stroke=\"black\"/>\n";
    // x ticks: min, mid, max
    for (double xt : {x0, 0.5 * (x0 + x1), x1}) {
        out << "  <line x1=\"" << sx(xt) << "\" y1=\"" << kMarginT + ph << "\" x2=\"" << sx(xt)
            << "\" y2=\"" << kMarginT + ph + 5 << "\" stroke=\"black\"/>\n";
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3g", xt);
        out << "  <text x=\"" << sx(xt) << "\" y=\"" << kMarginT + ph + 18
            << "\" font-size=\"11\" text-anchor=\"middle\">" << buf << "</text>\n";
    }
    out << "  <text x=\"" << kMarginL + pw / 2 << "\" y=\"" << kHeight - 8
        << "\" font-size=\"12\" text-anchor=\"middle\">" << x_label << "</text>\n";

    if (ground_truth) {
        const double gx = sx(std::clamp(*ground_truth, x0, x1));
        out << "  <line x1=\"" << gx << "\" y1=\"" << kMarginT << "\" x2=\"" << gx << "\" y2=\""
            << kMarginT + ph << "\" stroke=\"#d95f02\" stroke-dasharray=\"5,3\"/>\n";
    }

    out << "  <polyline fill=\"none\" stroke=\"#1b9e77\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
        if (i) out << ' ';
        out << sx(curve.grid[i]) << ',' << sy(curve.density[i]);
    }
    out << "\"/>\n</svg>\n";
    if (!out) throw IoError("write failed for " + path);
}

void write_density_table(const std::string& path, const eval::DensityCurve& curve,
                         std::optional<double> ground_truth) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "# kde marginal, bandwidth " << textio::g17(curve.bandwidth) << "\n";
    if (ground_truth) out << "# ground_truth " << textio::g17(*ground_truth) << "\n";
    for (std::size_t i = 0; i < curve.grid.size(); ++i)
        out << textio::g17(curve.grid[i]) << ' ' << textio::g17(curve.density[i]) << '\n';
    if (!out) throw IoError("write failed for " + path);
}

}  // namespace posegen::io
