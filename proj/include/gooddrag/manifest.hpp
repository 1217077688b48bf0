#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gooddrag/blobworld.hpp"
#include "gooddrag/drag.hpp"

namespace gooddrag {

// One benchmark case: a scene (inline blob spec or a tensor file on disk),
// control pairs, an edit mask, and optional per-case config overrides.
struct CaseManifest {
    std::string id;
    std::optional<BlobScene> scene;           // inline scene
    std::optional<std::filesystem::path> image;  // or a tensor file
    std::vector<ControlPair> pairs;
    std::optional<EditMask> mask;             // nullopt means fully editable
    nlohmann::json overrides = nlohmann::json::object();
};

// Run lengths alternating 0-run, 1-run, ... over the row-major grid.
std::vector<int> mask_to_rle(const EditMask& mask);
EditMask mask_from_rle(int h, int w, const std::vector<int>& runs);

nlohmann::json case_to_json(const CaseManifest& c);
CaseManifest case_from_json(const nlohmann::json& j);

std::vector<CaseManifest> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<CaseManifest>& cases);

// Loads the scene (rendering or reading the tensor) and checks the
// manifest invariants against the effective drag config.
Latent load_case_source(const CaseManifest& c);
DragConfig effective_config(const CaseManifest& c, const DragConfig& base);
void validate_case(const CaseManifest& c, const DragConfig& base);

}  // namespace gooddrag
