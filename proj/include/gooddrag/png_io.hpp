#pragma once

#include <filesystem>
#include <string>

#include "gooddrag/tensor.hpp"

namespace gooddrag {

// 8-bit grayscale PNG of channel 0, values clamped from [0,1] to 0..255.
std::string encode_png_gray(const Tensor& img);
void write_png_gray(const std::filesystem::path& path, const Tensor& img);

std::string base64_encode(const std::string& bytes);

}  // namespace gooddrag
