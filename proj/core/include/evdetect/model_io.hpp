#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "evdetect/tree_model.hpp"

namespace evdetect {

/// Canonical model text. Top-level JSON object with fields
/// format_version, kind, params, feature_schema, base_score, trees.
/// Each tree is an array of nodes in pre-order; a split node is
/// [feature, threshold, left, right] and a leaf is [value].
std::string serialize_model(const TreeEnsembleModel& model);

/// Throws UnsupportedVersion for an unknown format_version and CorruptModel
/// for anything unparsable or structurally invalid.
TreeEnsembleModel deserialize_model(std::string_view text);

void save_model(const TreeEnsembleModel& model, const std::filesystem::path& path);
TreeEnsembleModel load_model(const std::filesystem::path& path);

}  // namespace evdetect
