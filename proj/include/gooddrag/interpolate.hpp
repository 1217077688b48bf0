#pragma once

#include <vector>

#include "gooddrag/tensor.hpp"

namespace gooddrag {

// Bilinear resize with corner pixels pinned (output corners sample input
// corners exactly). With out == in the map is the identity.
Tensor bilinear_resize(const Tensor& src, int out_h, int out_w);
// Transpose of the resize map: scatters an output-sized cotangent back to
// an input-sized gradient.
Tensor bilinear_resize_adjoint(const Tensor& cot_out, int in_h, int in_w);

// One bilinear sample per channel at a fractional position. Valid positions
// are 0 <= y <= h-1, 0 <= x <= w-1.
std::vector<double> sample_point(const Tensor& src, double y, double x);

// Square patch of side 2*radius+1 around a possibly fractional center,
// sampled bilinearly per channel. The rounded-out footprint must lie inside
// the canvas, otherwise this throws.
bool patch_in_bounds(int h, int w, double cy, double cx, int radius);
Tensor sample_patch(const Tensor& src, double cy, double cx, int radius);
// Transpose of sample_patch: scatters a patch cotangent into a canvas-sized
// gradient tensor.
Tensor sample_patch_adjoint(const Tensor& cot_patch, double cy, double cx, int radius, int h,
                            int w);

}  // namespace gooddrag
