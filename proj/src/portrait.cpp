#include "essstab/portrait.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace essstab {

namespace {

constexpr double kSize = 800.0;
constexpr double kRadius = 370.0;
constexpr double kCx = 400.0, kCy = 400.0;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

// central projection of the plane onto the northern hemisphere, flattened
// to the unit disk; SVG y axis points down
std::string disk_point(double x, double y) {
    const double s = 1.0 / std::sqrt(x * x + y * y + 1.0);
    return fmt(kCx + kRadius * x * s) + "," + fmt(kCy - kRadius * y * s);
}

std::string equator_point(double ux, double uy) {
    const double n = std::hypot(ux, uy);
    return fmt(kCx + kRadius * ux / n) + "," + fmt(kCy - kRadius * uy / n);
}

void polyline(std::ostringstream& os, const std::vector<Vec2>& pts, const char* style,
              bool closed = false) {
    if (pts.size() < 2) return;
    os << "<path d=\"M" << disk_point(pts[0][0], pts[0][1]);
    for (std::size_t k = 1; k < pts.size(); ++k) os << " L" << disk_point(pts[k][0], pts[k][1]);
    if (closed) os << " Z";
    os << "\" fill=\"none\" " << style << "/>\n";
}

void line_image(std::ostringstream& os, bool vertical, double fixed, const char* style) {
    std::vector<Vec2> pts;
    const int m = 240;
    for (int k = 0; k <= m; ++k) {
        const double th = -M_PI / 2.0 + M_PI * k / m;
        const double t = std::tan(std::min(std::max(th, -1.5697), 1.5697));
        pts.push_back(vertical ? Vec2{fixed, t} : Vec2{t, fixed});
    }
    polyline(os, pts, style);
}

void glyph(std::ostringstream& os, const std::string& center, SingKind kind, Stability stab) {
    const double r = 6.0;
    const auto comma = center.find(',');
    const std::string cx = center.substr(0, comma), cy = center.substr(comma + 1);
    switch (kind) {
        case SingKind::HyperbolicSaddle:
            os << "<rect x=\"" << fmt(std::stod(cx) - r) << "\" y=\"" << fmt(std::stod(cy) - r)
               << "\" width=\"" << fmt(2 * r) << "\" height=\"" << fmt(2 * r)
               << "\" fill=\"#202020\"/>\n";
            break;
        case SingKind::HyperbolicNode:
        case SingKind::HyperbolicFocus:
        case SingKind::HyperbolicFocusOrNode:
            os << "<circle cx=\"" << cx << "\" cy=\"" << cy << "\" r=\"" << fmt(r) << "\" fill=\""
               << (stab == Stability::Stable ? "#1f6f43" : "none") << "\" stroke=\""
               << (stab == Stability::Stable ? "#1f6f43" : "#a63603")
               << "\" stroke-width=\"2\"/>\n";
            break;
        case SingKind::DegenerateMonodromic:
            os << "<path d=\"M" << fmt(std::stod(cx)) << " " << fmt(std::stod(cy) - r) << " L"
               << fmt(std::stod(cx) + r) << " " << fmt(std::stod(cy)) << " L" << fmt(std::stod(cx))
               << " " << fmt(std::stod(cy) + r) << " L" << fmt(std::stod(cx) - r) << " "
               << fmt(std::stod(cy)) << " Z\" fill=\"#54278f\"/>\n";
            break;
        default:
            os << "<path d=\"M" << fmt(std::stod(cx) - r) << " " << fmt(std::stod(cy) - r) << " L"
               << fmt(std::stod(cx) + r) << " " << fmt(std::stod(cy) + r) << " M"
               << fmt(std::stod(cx) - r) << " " << fmt(std::stod(cy) + r) << " L"
               << fmt(std::stod(cx) + r) << " " << fmt(std::stod(cy) - r)
               << "\" stroke=\"#b30000\" stroke-width=\"2.5\"/>\n";
    }
}

}  // namespace

std::string render_portrait(const AnalysisReport& rep) {
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(kSize) << "\" height=\""
       << fmt(kSize) << "\" viewBox=\"0 0 " << fmt(kSize) << " " << fmt(kSize) << "\">\n";
    os << "<rect width=\"" << fmt(kSize) << "\" height=\"" << fmt(kSize)
       << "\" fill=\"#ffffff\"/>\n";

    // equator
    os << "<circle cx=\"" << fmt(kCx) << "\" cy=\"" << fmt(kCy) << "\" r=\"" << fmt(kRadius)
       << "\" fill=\"none\" stroke=\"#303030\" stroke-width=\"2.5\"/>\n";

    // the invariant-line images
    for (double c : {0.0, 1.0}) {
        line_image(os, true, c, "stroke=\"#5b8bd0\" stroke-width=\"1.8\"");
        line_image(os, false, c, "stroke=\"#5b8bd0\" stroke-width=\"1.8\"");
    }

    const bool degenerate = rep.field.f().is_zero() || rep.field.g().is_zero() ||
                            rep.inputs.infinity_degenerate ||
                            !rep.inputs.finite.degenerate_lines.empty();
    if (degenerate) {
        os << "<text x=\"" << fmt(kCx) << "\" y=\"30\" text-anchor=\"middle\" "
              "font-family=\"monospace\" font-size=\"18\" fill=\"#b30000\">degenerate field: "
              "analysis partial</text>\n";
    }

    // separatrices
    for (const auto& tr : rep.skeleton.traces)
        polyline(os, tr.points,
                 tr.in_lambda ? "stroke=\"#888888\" stroke-width=\"1.0\""
                              : "stroke=\"#444444\" stroke-width=\"1.2\"");

    // cycles
    for (const auto& c : rep.inputs.cycles.cycles)
        polyline(os, c.samples, "stroke=\"#d94801\" stroke-width=\"2.0\"", true);

    // finite singularities
    for (const auto& s : rep.inputs.finite.points)
        glyph(os, disk_point(s.location[0], s.location[1]), s.cls.kind, s.cls.stability);

    // singularities at infinity: a point on the rim and its antipode
    for (const auto& s : rep.inputs.infinity) {
        const double ux = (s.chart == Chart::U1) ? 1.0 : s.u0;
        const double uy = (s.chart == Chart::U1) ? s.u0 : 1.0;
        glyph(os, equator_point(ux, uy), s.cls.kind, s.cls.stability);
        glyph(os, equator_point(-ux, -uy), s.cls.kind, s.cls.stability);
    }

    os << "</svg>\n";
    return os.str();
}

}  // namespace essstab
