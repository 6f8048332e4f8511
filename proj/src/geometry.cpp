#include "sgrel/geometry.hpp"

#include <algorithm>

namespace sgrel {

double iou(const Box& a, const Box& b) {
    const double ix = std::min(a.x2(), b.x2()) - std::max(a.x, b.x);
    const double iy = std::min(a.y2(), b.y2()) - std::max(a.y, b.y);
    if (ix <= 0.0 || iy <= 0.0) return 0.0;
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    return inter / uni;
}

Box enclosing_box(const Box& a, const Box& b) {
    const double x1 = std::min(a.x, b.x);
    const double y1 = std::min(a.y, b.y);
    const double x2 = std::max(a.x2(), b.x2());
    const double y2 = std::max(a.y2(), b.y2());
    return Box(x1, y1, x2 - x1, y2 - y1);
}

std::array<double, 4> box_delta(const Box& b1, const Box& b2) {
    return {(b1.x - b2.x) / b2.w, (b1.y - b2.y) / b2.h, std::log(b1.w / b2.w),
            std::log(b1.h / b2.h)};
}

std::array<double, 5> norm_coords(const Box& b, const ImageSize& img) {
    return {b.x / img.w, b.y / img.h, b.x2() / img.w, b.y2() / img.h,
            b.area() / (img.w * img.h)};
}

std::array<double, 22> spatial_feature(const Box& b_s, const Box& b_o, const ImageSize& img) {
    const Box b_pred = enclosing_box(b_s, b_o);
    std::array<double, 22> f{};
    int k = 0;
    for (double v : box_delta(b_s, b_o)) f[k++] = v;
    for (double v : box_delta(b_s, b_pred)) f[k++] = v;
    for (double v : box_delta(b_pred, b_o)) f[k++] = v;
    for (double v : norm_coords(b_s, img)) f[k++] = v;
    for (double v : norm_coords(b_o, img)) f[k++] = v;
    return f;
}

}  // namespace sgrel
