#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

namespace sgrel {

// Axis-aligned rectangle in pixel coordinates, (x, y) = top-left corner.
// Width and height are strictly positive; the log-ratio terms of box_delta
// are undefined otherwise, so degenerate boxes are rejected at construction.
struct Box {
    double x = 0.0;
    double y = 0.0;
    double w = 1.0;
    double h = 1.0;

    Box() = default;
    Box(double x_, double y_, double w_, double h_) : x(x_), y(y_), w(w_), h(h_) {
        if (!(std::isfinite(x) && std::isfinite(y) && std::isfinite(w) && std::isfinite(h)))
            throw std::invalid_argument("Box: coordinates must be finite");
        if (!(w > 0.0 && h > 0.0))
            throw std::invalid_argument("Box: width and height must be positive");
    }

    double x2() const { return x + w; }
    double y2() const { return y + h; }
    double area() const { return w * h; }

    bool operator==(const Box&) const = default;
};

struct ImageSize {
    double w = 1.0;
    double h = 1.0;

    ImageSize() = default;
    ImageSize(double w_, double h_) : w(w_), h(h_) {
        if (!(w > 0.0 && h > 0.0) || !std::isfinite(w) || !std::isfinite(h))
            throw std::invalid_argument("ImageSize: dimensions must be positive and finite");
    }

    bool operator==(const ImageSize&) const = default;
};

// Intersection over union. Degenerate (non-overlapping) cases return 0.
double iou(const Box& a, const Box& b);

// Tightest axis-aligned box containing both inputs.
Box enclosing_box(const Box& a, const Box& b);

// <(x1-x2)/w2, (y1-y2)/h2, log(w1/w2), log(h1/h2)>
std::array<double, 4> box_delta(const Box& b1, const Box& b2);

// <x/W, y/H, (x+w)/W, (y+h)/H, wh/(WH)>
std::array<double, 5> norm_coords(const Box& b, const ImageSize& img);

// Relative-position descriptor for a subject/object box pair:
// deltas between subject, object and their enclosing box, plus normalized
// coordinates of subject and object. Always 22 values.
std::array<double, 22> spatial_feature(const Box& b_s, const Box& b_o, const ImageSize& img);

inline constexpr int kSpatialFeatureDim = 22;

}  // namespace sgrel
