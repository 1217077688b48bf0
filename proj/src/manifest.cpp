#include "gooddrag/manifest.hpp"

#include <cmath>
#include <fstream>

#include "gooddrag/tensor_io.hpp"

namespace gooddrag {

std::vector<int> mask_to_rle(const EditMask& mask) {
    std::vector<int> runs;
    const std::vector<uint8_t>& cells = mask.cells();
    uint8_t value = 0;
    int run = 0;
    for (uint8_t c : cells) {
        if (c == value) {
            ++run;
        } else {
            runs.push_back(run);
            value = c;
            run = 1;
        }
    }
    runs.push_back(run);
    return runs;
}

EditMask mask_from_rle(int h, int w, const std::vector<int>& runs) {
    std::vector<uint8_t> cells;
    cells.reserve(static_cast<size_t>(h) * w);
    uint8_t value = 0;
    for (int run : runs) {
        if (run < 0) throw std::invalid_argument("mask rle: negative run length");
        cells.insert(cells.end(), static_cast<size_t>(run), value);
        value ^= 1;
    }
    if (cells.size() != static_cast<size_t>(h) * w)
        throw std::invalid_argument("mask rle: run lengths do not cover the grid");
    return EditMask(h, w, std::move(cells));
}

nlohmann::json case_to_json(const CaseManifest& c) {
    nlohmann::json j;
    j["id"] = c.id;
    if (c.scene) {
        nlohmann::json blobs = nlohmann::json::array();
        for (const Blob& b : c.scene->blobs)
            blobs.push_back({{"cy", b.cy}, {"cx", b.cx}, {"radius", b.radius},
                             {"intensity", b.intensity}});
        j["scene"] = {{"height", c.scene->height}, {"width", c.scene->width}, {"blobs", blobs}};
    } else if (c.image) {
        j["scene"] = {{"image", c.image->string()}};
    } else {
        throw std::invalid_argument("case " + c.id + ": no scene");
    }
    nlohmann::json pairs = nlohmann::json::array();
    for (const ControlPair& p : c.pairs)
        pairs.push_back({{"p", {p.handle.y, p.handle.x}}, {"q", {p.target.y, p.target.x}}});
    j["pairs"] = pairs;
    if (c.mask) {
        j["mask"] = {{"height", c.mask->height()},
                     {"width", c.mask->width()},
                     {"rle", mask_to_rle(*c.mask)}};
    } else {
        j["mask"] = "all";
    }
    if (!c.overrides.empty()) j["overrides"] = c.overrides;
    return j;
}

CaseManifest case_from_json(const nlohmann::json& j) {
    CaseManifest c;
    c.id = j.at("id").get<std::string>();
    if (c.id.empty()) throw std::invalid_argument("case manifest: empty id");
    const nlohmann::json& scene = j.at("scene");
    if (scene.contains("image")) {
        c.image = std::filesystem::path(scene.at("image").get<std::string>());
    } else {
        BlobScene s;
        s.height = scene.at("height").get<int>();
        s.width = scene.at("width").get<int>();
        for (const nlohmann::json& b : scene.at("blobs"))
            s.blobs.push_back({b.at("cy").get<double>(), b.at("cx").get<double>(),
                               b.at("radius").get<double>(), b.at("intensity").get<double>()});
        c.scene = std::move(s);
    }
    for (const nlohmann::json& p : j.at("pairs")) {
        ControlPair pr;
        pr.handle = {p.at("p").at(0).get<int>(), p.at("p").at(1).get<int>()};
        pr.target = {p.at("q").at(0).get<int>(), p.at("q").at(1).get<int>()};
        c.pairs.push_back(pr);
    }
    const nlohmann::json& mask = j.at("mask");
    if (mask.is_string()) {
        if (mask.get<std::string>() != "all")
            throw std::invalid_argument("case manifest: unknown mask keyword");
        c.mask.reset();
    } else {
        c.mask = mask_from_rle(mask.at("height").get<int>(), mask.at("width").get<int>(),
                               mask.at("rle").get<std::vector<int>>());
    }
    if (j.contains("overrides")) c.overrides = j.at("overrides");
    return c;
}

std::vector<CaseManifest> read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest " + path.string());
    std::vector<CaseManifest> cases;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw std::runtime_error("manifest line " + std::to_string(line_no) +
                                     " is not valid JSON");
        cases.push_back(case_from_json(j));
    }
    return cases;
}

void write_manifest(const std::filesystem::path& path, const std::vector<CaseManifest>& cases) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    for (const CaseManifest& c : cases) out << case_to_json(c).dump() << "\n";
}

Latent load_case_source(const CaseManifest& c) {
    if (c.scene) {
        c.scene->validate();
        return render_scene(*c.scene);
    }
    if (c.image) {
        Tensor t = load_tensor(*c.image);
        return Latent{std::move(t), 0};
    }
    throw std::invalid_argument("case " + c.id + ": no scene");
}

DragConfig effective_config(const CaseManifest& c, const DragConfig& base) {
    nlohmann::json merged = drag_config_to_json(base);
    for (auto it = c.overrides.begin(); it != c.overrides.end(); ++it) {
        if (!merged.contains(it.key()))
            throw std::invalid_argument("case " + c.id + ": unknown override " + it.key());
        merged[it.key()] = it.value();
    }
    return drag_config_from_json(merged);
}

void validate_case(const CaseManifest& c, const DragConfig& base) {
    Latent source = load_case_source(c);
    int h = source.data.height(), w = source.data.width();
    DragConfig cfg = effective_config(c, base);

    if (c.pairs.empty()) throw std::invalid_argument("case " + c.id + ": no control pairs");
    validate_pairs(c.pairs, h, w);
    double margin = cfg.supervision_radius + cfg.move_size;
    for (const ControlPair& p : c.pairs) {
        for (Pixel pt : {p.handle, p.target}) {
            if (pt.y < margin || pt.y > h - 1 - margin || pt.x < margin || pt.x > w - 1 - margin)
                throw std::invalid_argument("case " + c.id +
                                            ": control point too close to the border");
        }
    }
    if (c.mask && (c.mask->height() != h || c.mask->width() != w))
        throw std::invalid_argument("case " + c.id + ": mask dimensions mismatch");
}

}  // namespace gooddrag
