#pragma once

// Gross contact area of an ink print from its digitized outline.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <string>
#include <vector>

#include "softcue/csv.hpp"
#include "softcue/errors.hpp"

namespace softcue::geometry {

struct Vertex {
    double x;
    double y;
};

/// Outline in pixel coordinates plus the reference bar that scales it.
/// The polygon is assumed simple; see `is_simple`.
struct ContactPrint {
    std::vector<Vertex> boundary;
    double scale_bar_px = 0.0;
    double scale_bar_cm = 5.0;
};

inline double pixel_scale(const ContactPrint& print) {
    if (!(print.scale_bar_px > 0.0)) throw ArgumentError("pixel_scale: scale bar length must be positive");
    if (!(print.scale_bar_cm > 0.0)) throw ArgumentError("pixel_scale: scale bar must have positive length in cm");
    return print.scale_bar_cm / print.scale_bar_px;
}

/// Signed shoelace sum in px^2; positive for counter-clockwise outlines.
inline double signed_area_px(const std::vector<Vertex>& poly) {
    if (poly.size() < 3) throw ArgumentError("polygon_area: needs at least 3 vertices");
    // Coordinates relative to the first vertex limit cancellation far from the origin.
    const Vertex o = poly.front();
    double twice = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vertex& a = poly[i];
        const Vertex& b = poly[(i + 1) % poly.size()];
        twice += (a.x - o.x) * (b.y - o.y) - (b.x - o.x) * (a.y - o.y);
    }
    return 0.5 * twice;
}

/// Area in cm^2.
inline double polygon_area(const ContactPrint& print) {
    const double scale = pixel_scale(print);
    return std::abs(signed_area_px(print.boundary)) * scale * scale;
}

namespace detail {

inline double orient(const Vertex& a, const Vertex& b, const Vertex& c) {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

inline bool on_segment(const Vertex& a, const Vertex& b, const Vertex& p) {
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
           p.y <= std::max(a.y, b.y);
}

inline bool segments_intersect(const Vertex& p1, const Vertex& p2, const Vertex& q1, const Vertex& q2) {
    const double d1 = orient(q1, q2, p1), d2 = orient(q1, q2, p2);
    const double d3 = orient(p1, p2, q1), d4 = orient(p1, p2, q2);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
    if (d1 == 0 && on_segment(q1, q2, p1)) return true;
    if (d2 == 0 && on_segment(q1, q2, p2)) return true;
    if (d3 == 0 && on_segment(p1, p2, q1)) return true;
    if (d4 == 0 && on_segment(p1, p2, q2)) return true;
    return false;
}

}  // namespace detail

/// True when no two non-adjacent edges touch. O(n^2).
inline bool is_simple(const std::vector<Vertex>& poly) {
    const std::size_t n = poly.size();
    if (n < 3) return false;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (j == i + 1 || (i == 0 && j == n - 1)) continue;
            if (detail::segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n])) return false;
        }
    }
    return true;
}

/// Reads `x_px,y_px` rows plus a `scale_bar_px,<n>` line (and optionally
/// `scale_bar_cm,<n>`) in any position after the header.
inline ContactPrint read_print(std::istream& in) {
    const csv::Table table = csv::read(in);
    if (table.header.size() < 2 || table.header[0] != "x_px" || table.header[1] != "y_px")
        throw ParseError(table.header_line, "expected header 'x_px,y_px'");
    ContactPrint print;
    bool have_bar = false;
    for (const auto& row : table.rows) {
        if (!row.fields.empty() && row.fields[0] == "scale_bar_px") {
            print.scale_bar_px = csv::number(row, 1, "scale_bar_px");
            have_bar = true;
            continue;
        }
        if (!row.fields.empty() && row.fields[0] == "scale_bar_cm") {
            print.scale_bar_cm = csv::number(row, 1, "scale_bar_cm");
            continue;
        }
        print.boundary.push_back({csv::number(row, 0, "x_px"), csv::number(row, 1, "y_px")});
    }
    if (!have_bar) throw ParseError(table.header_line, "missing 'scale_bar_px,<n>' line");
    return print;
}

}  // namespace softcue::geometry
