#include "gooddrag/tensor_io.hpp"

#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace gooddrag {

namespace {

constexpr char kMagic[4] = {'A', 'L', 'D', 'D'};
constexpr uint32_t kMaxRank = 8;
constexpr size_t kMaxElements = size_t{1} << 31;

void put_u32(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {
        static_cast<unsigned char>(v & 0xff),
        static_cast<unsigned char>((v >> 8) & 0xff),
        static_cast<unsigned char>((v >> 16) & 0xff),
        static_cast<unsigned char>((v >> 24) & 0xff),
    };
    out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw std::runtime_error("tensor record: truncated header");
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace

void write_record(std::ostream& out, const TensorRecord& rec) {
    if (rec.dims.empty() || rec.dims.size() > kMaxRank)
        throw std::invalid_argument("tensor record: bad rank");
    if (rec.values.size() != rec.element_count())
        throw std::invalid_argument("tensor record: dims do not match value count");
    out.write(kMagic, 4);
    put_u32(out, kTensorFormatVersion);
    put_u32(out, static_cast<uint32_t>(rec.dims.size()));
    for (uint32_t d : rec.dims) put_u32(out, d);
    for (double v : rec.values) {
        float f = static_cast<float>(v);
        uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_u32(out, bits);
    }
    if (!out) throw std::runtime_error("tensor record: write failed");
}

TensorRecord read_record(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in) throw std::runtime_error("tensor record: truncated header");
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("tensor record: bad magic");
    uint32_t version = get_u32(in);
    if (version != kTensorFormatVersion)
        throw std::runtime_error("tensor record: unsupported version " + std::to_string(version));
    uint32_t rank = get_u32(in);
    if (rank == 0 || rank > kMaxRank)
        throw std::runtime_error("tensor record: bad rank " + std::to_string(rank));
    TensorRecord rec;
    rec.dims.resize(rank);
    size_t count = 1;
    for (uint32_t i = 0; i < rank; ++i) {
        rec.dims[i] = get_u32(in);
        if (rec.dims[i] == 0) throw std::runtime_error("tensor record: zero dimension");
        if (count > kMaxElements / rec.dims[i])
            throw std::runtime_error("tensor record: dimensions overflow");
        count *= rec.dims[i];
    }
    rec.values.resize(count);
    for (size_t i = 0; i < count; ++i) {
        uint32_t bits;
        try {
            bits = get_u32(in);
        } catch (const std::runtime_error&) {
            throw std::runtime_error("tensor record: truncated payload");
        }
        float f;
        std::memcpy(&f, &bits, 4);
        rec.values[i] = static_cast<double>(f);
    }
    return rec;
}

TensorRecord to_record(const Tensor& t) {
    TensorRecord rec;
    rec.dims = {static_cast<uint32_t>(t.channels()), static_cast<uint32_t>(t.height()),
                static_cast<uint32_t>(t.width())};
    rec.values.assign(t.data(), t.data() + t.size());
    return rec;
}

Tensor from_record(const TensorRecord& rec) {
    if (rec.dims.size() != 3)
        throw std::runtime_error("tensor record: expected rank 3 for a latent tensor");
    Tensor t(static_cast<int>(rec.dims[0]), static_cast<int>(rec.dims[1]),
             static_cast<int>(rec.dims[2]));
    for (size_t i = 0; i < rec.values.size(); ++i) t.data()[i] = rec.values[i];
    return t;
}

void save_tensor(const std::filesystem::path& path, const Tensor& t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_record(out, to_record(t));
}

Tensor load_tensor(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return from_record(read_record(in));
}

}  // namespace gooddrag
