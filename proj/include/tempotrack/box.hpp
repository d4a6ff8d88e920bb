#pragma once

#include <algorithm>
#include <cmath>

namespace tempotrack {

// Axis-aligned box in pixels, center + extents.
struct BBox {
    float cx = 0.0f, cy = 0.0f;
    float w = 0.0f, h = 0.0f;

    static BBox from_topleft(float x, float y, float w, float h) {
        return {x + w * 0.5f, y + h * 0.5f, w, h};
    }
    float x() const { return cx - w * 0.5f; }
    float y() const { return cy - h * 0.5f; }

    bool operator==(const BBox& o) const {
        return cx == o.cx && cy == o.cy && w == o.w && h == o.h;
    }
};

inline double center_error(const BBox& a, const BBox& b) {
    const double dx = static_cast<double>(a.cx) - b.cx;
    const double dy = static_cast<double>(a.cy) - b.cy;
    return std::sqrt(dx * dx + dy * dy);
}

inline double iou(const BBox& a, const BBox& b) {
    const double ix = std::max(0.0, static_cast<double>(std::min(a.x() + a.w, b.x() + b.w)) -
                                        std::max(a.x(), b.x()));
    const double iy = std::max(0.0, static_cast<double>(std::min(a.y() + a.h, b.y() + b.h)) -
                                        std::max(a.y(), b.y()));
    const double inter = ix * iy;
    const double uni = static_cast<double>(a.w) * a.h + static_cast<double>(b.w) * b.h - inter;
    if (uni <= 0.0) return 0.0;
    return inter / uni;
}

}  // namespace tempotrack
