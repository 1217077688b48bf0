#include "gooddrag/interpolate.hpp"

#include <cmath>
#include <stdexcept>

namespace gooddrag {

namespace {

struct Corner {
    int i0;
    double frac;  // weight of i0+1
};

// Splits a coordinate into a base index and blend weight, keeping the base
// one below the last index so index+1 stays valid at the upper boundary.
Corner split(double v, int n) {
    int i0 = static_cast<int>(std::floor(v));
    if (i0 > n - 2) i0 = n - 2;
    if (i0 < 0) i0 = 0;
    return {i0, v - i0};
}

double grid_coord(int out_i, int out_n, int in_n) {
    if (out_n == 1) return 0.0;
    return static_cast<double>(out_i) * (in_n - 1) / (out_n - 1);
}

}  // namespace

Tensor bilinear_resize(const Tensor& src, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1)
        throw std::invalid_argument("bilinear_resize: output size must be positive");
    int c = src.channels(), in_h = src.height(), in_w = src.width();
    Tensor out(c, out_h, out_w);
    for (int ch = 0; ch < c; ++ch)
        for (int oy = 0; oy < out_h; ++oy) {
            Corner ry = in_h == 1 ? Corner{0, 0.0} : split(grid_coord(oy, out_h, in_h), in_h);
            int y1 = in_h == 1 ? 0 : ry.i0 + 1;
            for (int ox = 0; ox < out_w; ++ox) {
                Corner rx = in_w == 1 ? Corner{0, 0.0} : split(grid_coord(ox, out_w, in_w), in_w);
                int x1 = in_w == 1 ? 0 : rx.i0 + 1;
                double v00 = src.at(ch, ry.i0, rx.i0), v01 = src.at(ch, ry.i0, x1);
                double v10 = src.at(ch, y1, rx.i0), v11 = src.at(ch, y1, x1);
                out.at(ch, oy, ox) = (1 - ry.frac) * ((1 - rx.frac) * v00 + rx.frac * v01) +
                                     ry.frac * ((1 - rx.frac) * v10 + rx.frac * v11);
            }
        }
    return out;
}

Tensor bilinear_resize_adjoint(const Tensor& cot_out, int in_h, int in_w) {
    if (in_h < 1 || in_w < 1)
        throw std::invalid_argument("bilinear_resize_adjoint: input size must be positive");
    int c = cot_out.channels(), out_h = cot_out.height(), out_w = cot_out.width();
    Tensor grad(c, in_h, in_w);
    for (int ch = 0; ch < c; ++ch)
        for (int oy = 0; oy < out_h; ++oy) {
            Corner ry = in_h == 1 ? Corner{0, 0.0} : split(grid_coord(oy, out_h, in_h), in_h);
            int y1 = in_h == 1 ? 0 : ry.i0 + 1;
            for (int ox = 0; ox < out_w; ++ox) {
                Corner rx = in_w == 1 ? Corner{0, 0.0} : split(grid_coord(ox, out_w, in_w), in_w);
                int x1 = in_w == 1 ? 0 : rx.i0 + 1;
                double g = cot_out.at(ch, oy, ox);
                grad.at(ch, ry.i0, rx.i0) += (1 - ry.frac) * (1 - rx.frac) * g;
                grad.at(ch, ry.i0, x1) += (1 - ry.frac) * rx.frac * g;
                grad.at(ch, y1, rx.i0) += ry.frac * (1 - rx.frac) * g;
                grad.at(ch, y1, x1) += ry.frac * rx.frac * g;
            }
        }
    return grad;
}

std::vector<double> sample_point(const Tensor& src, double y, double x) {
    int h = src.height(), w = src.width();
    if (!(y >= 0.0 && y <= h - 1 && x >= 0.0 && x <= w - 1))
        throw std::out_of_range("sample_point: position outside canvas");
    Corner ry = h == 1 ? Corner{0, 0.0} : split(y, h);
    Corner rx = w == 1 ? Corner{0, 0.0} : split(x, w);
    int y1 = h == 1 ? 0 : ry.i0 + 1;
    int x1 = w == 1 ? 0 : rx.i0 + 1;
    std::vector<double> out(src.channels());
    for (int ch = 0; ch < src.channels(); ++ch) {
        double v00 = src.at(ch, ry.i0, rx.i0), v01 = src.at(ch, ry.i0, x1);
        double v10 = src.at(ch, y1, rx.i0), v11 = src.at(ch, y1, x1);
        out[ch] = (1 - ry.frac) * ((1 - rx.frac) * v00 + rx.frac * v01) +
                  ry.frac * ((1 - rx.frac) * v10 + rx.frac * v11);
    }
    return out;
}

bool patch_in_bounds(int h, int w, double cy, double cx, int radius) {
    if (radius < 0) return false;
    return std::floor(cy - radius) >= 0.0 && std::ceil(cy + radius) <= h - 1 &&
           std::floor(cx - radius) >= 0.0 && std::ceil(cx + radius) <= w - 1;
}

Tensor sample_patch(const Tensor& src, double cy, double cx, int radius) {
    int h = src.height(), w = src.width();
    if (radius < 0) throw std::invalid_argument("sample_patch: negative radius");
    if (!patch_in_bounds(h, w, cy, cx, radius))
        throw std::out_of_range("sample_patch: patch footprint outside canvas");
    int side = 2 * radius + 1;
    Tensor patch(src.channels(), side, side);
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
            std::vector<double> v = sample_point(src, cy + dy, cx + dx);
            for (int ch = 0; ch < src.channels(); ++ch)
                patch.at(ch, dy + radius, dx + radius) = v[ch];
        }
    return patch;
}

Tensor sample_patch_adjoint(const Tensor& cot_patch, double cy, double cx, int radius, int h,
                            int w) {
    int side = 2 * radius + 1;
    if (cot_patch.height() != side || cot_patch.width() != side)
        throw std::invalid_argument("sample_patch_adjoint: cotangent size mismatch");
    if (!patch_in_bounds(h, w, cy, cx, radius))
        throw std::out_of_range("sample_patch_adjoint: patch footprint outside canvas");
    Tensor grad(cot_patch.channels(), h, w);
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
            double y = cy + dy, x = cx + dx;
            Corner ry = h == 1 ? Corner{0, 0.0} : split(y, h);
            Corner rx = w == 1 ? Corner{0, 0.0} : split(x, w);
            int y1 = h == 1 ? 0 : ry.i0 + 1;
            int x1 = w == 1 ? 0 : rx.i0 + 1;
            for (int ch = 0; ch < cot_patch.channels(); ++ch) {
                double g = cot_patch.at(ch, dy + radius, dx + radius);
                grad.at(ch, ry.i0, rx.i0) += (1 - ry.frac) * (1 - rx.frac) * g;
                grad.at(ch, ry.i0, x1) += (1 - ry.frac) * rx.frac * g;
                grad.at(ch, y1, rx.i0) += ry.frac * (1 - rx.frac) * g;
                grad.at(ch, y1, x1) += ry.frac * rx.frac * g;
            }
        }
    return grad;
}

}  // namespace gooddrag
