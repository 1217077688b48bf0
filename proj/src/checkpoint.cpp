#include "gooddrag/checkpoint.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include "gooddrag/tensor_io.hpp"

namespace gooddrag {

namespace {

struct NamedRecord {
    std::string name;
    TensorRecord rec;
};

std::vector<NamedRecord> collect(const ConvParams& p) {
    auto vec1 = [](const std::vector<double>& v) {
        return TensorRecord{{static_cast<uint32_t>(v.size())}, v};
    };
    auto conv_w = [](const Conv3x3& l) {
        return TensorRecord{{static_cast<uint32_t>(l.out_c), static_cast<uint32_t>(l.in_c), 3, 3},
                            l.w};
    };
    auto mat = [](const std::vector<double>& v, uint32_t rows, uint32_t cols) {
        return TensorRecord{{rows, cols}, v};
    };
    return {
        {"conv1.weight", conv_w(p.l1)}, {"conv1.bias", vec1(p.l1.b)},
        {"conv2.weight", conv_w(p.l2)}, {"conv2.bias", vec1(p.l2.b)},
        {"conv3.weight", conv_w(p.l3)}, {"conv3.bias", vec1(p.l3.b)},
        {"conv4.weight", conv_w(p.l4)}, {"conv4.bias", vec1(p.l4.b)},
        {"time.weight", mat(p.time_w, static_cast<uint32_t>(p.time_b.size()), kTimeEmbedDim)},
        {"time.bias", vec1(p.time_b)},
    };
}

void assign(ConvParams& p, const std::string& name, const TensorRecord& rec) {
    auto take_conv = [&](Conv3x3& l, bool weight) {
        std::vector<double>& dst = weight ? l.w : l.b;
        if (rec.values.size() != dst.size())
            throw std::runtime_error("checkpoint: size mismatch for " + name);
        dst = rec.values;
    };
    if (name == "conv1.weight") take_conv(p.l1, true);
    else if (name == "conv1.bias") take_conv(p.l1, false);
    else if (name == "conv2.weight") take_conv(p.l2, true);
    else if (name == "conv2.bias") take_conv(p.l2, false);
    else if (name == "conv3.weight") take_conv(p.l3, true);
    else if (name == "conv3.bias") take_conv(p.l3, false);
    else if (name == "conv4.weight") take_conv(p.l4, true);
    else if (name == "conv4.bias") take_conv(p.l4, false);
    else if (name == "time.weight") {
        if (rec.values.size() != p.time_w.size())
            throw std::runtime_error("checkpoint: size mismatch for " + name);
        p.time_w = rec.values;
    } else if (name == "time.bias") {
        if (rec.values.size() != p.time_b.size())
            throw std::runtime_error("checkpoint: size mismatch for " + name);
        p.time_b = rec.values;
    } else {
        throw std::runtime_error("checkpoint: unknown tensor " + name);
    }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
    std::vector<NamedRecord> records = collect(ck.params);

    // serialize the records first so the index can carry real offsets
    std::vector<std::string> blobs;
    blobs.reserve(records.size());
    for (const NamedRecord& nr : records) {
        std::ostringstream os(std::ios::binary);
        write_record(os, nr.rec);
        blobs.push_back(os.str());
    }

    nlohmann::json meta{{"canvas", ck.canvas},
                        {"t_max", ck.t_max},
                        {"beta_min", ck.beta_min},
                        {"beta_max", ck.beta_max},
                        {"train", ck.train}};

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << "ALDDCKPT 1\n" << meta.dump() << "\n" << records.size() << "\n";
    size_t offset = 0;
    for (size_t i = 0; i < records.size(); ++i) {
        out << records[i].name << " " << offset << " " << records[i].rec.dims.size();
        for (uint32_t d : records[i].rec.dims) out << " " << d;
        out << "\n";
        offset += blobs[i].size();
    }
    for (const std::string& b : blobs) out.write(b.data(), static_cast<std::streamsize>(b.size()));
    if (!out) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line) || line != "ALDDCKPT 1")
        throw std::runtime_error("checkpoint: bad header in " + path.string());
    if (!std::getline(in, line)) throw std::runtime_error("checkpoint: missing meta line");
    nlohmann::json meta = nlohmann::json::parse(line, nullptr, false);
    if (meta.is_discarded()) throw std::runtime_error("checkpoint: meta line is not valid JSON");

    if (!std::getline(in, line)) throw std::runtime_error("checkpoint: missing record count");
    size_t count = std::stoul(line);

    struct IndexEntry {
        std::string name;
        size_t offset;
        std::vector<uint32_t> dims;
    };
    std::vector<IndexEntry> index(count);
    for (size_t i = 0; i < count; ++i) {
        if (!std::getline(in, line)) throw std::runtime_error("checkpoint: truncated index");
        std::istringstream is(line);
        size_t rank;
        if (!(is >> index[i].name >> index[i].offset >> rank))
            throw std::runtime_error("checkpoint: malformed index line: " + line);
        index[i].dims.resize(rank);
        for (size_t r = 0; r < rank; ++r)
            if (!(is >> index[i].dims[r]))
                throw std::runtime_error("checkpoint: malformed index line: " + line);
    }

    std::streampos base = in.tellg();
    Checkpoint ck;
    ck.canvas = meta.value("canvas", 0);
    ck.t_max = meta.value("t_max", 0);
    ck.beta_min = meta.value("beta_min", 0.0);
    ck.beta_max = meta.value("beta_max", 0.0);
    ck.train = meta.value("train", nlohmann::json::object());
    if (ck.t_max < 1) throw std::runtime_error("checkpoint: meta is missing the schedule");

    // size the parameter buffers, then fill them from the records
    ConvDenoiser shape ((build_schedule(ck.t_max, ck.beta_min, ck.beta_max)));
    ck.params = shape.params();

    for (const IndexEntry& e : index) {
        in.seekg(base + static_cast<std::streamoff>(e.offset));
        TensorRecord rec = read_record(in);
        if (rec.dims != e.dims)
            throw std::runtime_error("checkpoint: index dims disagree with record for " + e.name);
        assign(ck.params, e.name, rec);
    }
    return ck;
}

}  // namespace gooddrag
