#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "gooddrag/tensor.hpp"

namespace gooddrag {

// On-disk tensor record: magic "ALDD", u32 version, u32 rank, u32 dims[rank],
// then the values as little-endian float32 in row-major order. Values are
// computed in double and rounded to f32 only at the disk boundary.
inline constexpr uint32_t kTensorFormatVersion = 1;

struct TensorRecord {
    std::vector<uint32_t> dims;
    std::vector<double> values;

    size_t element_count() const {
        size_t n = 1;
        for (uint32_t d : dims) n *= d;
        return dims.empty() ? 0 : n;
    }
};

void write_record(std::ostream& out, const TensorRecord& rec);
TensorRecord read_record(std::istream& in);

void save_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor load_tensor(const std::filesystem::path& path);

TensorRecord to_record(const Tensor& t);
Tensor from_record(const TensorRecord& rec);

}  // namespace gooddrag
