#include "evdetect/model_io.hpp"

#include <json.hpp>

#include "evdetect/csv_io.hpp"

namespace evdetect {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json params_to_json(const TreeEnsembleModel& model) {
  const auto& f = model.params.forest;
  const auto& b = model.params.boosting;
  ordered_json params;
  params["forest"] = {{"n_trees", f.n_trees},
                      {"max_depth", f.max_depth},
                      {"min_samples_leaf", f.min_samples_leaf},
                      {"features_per_split", f.features_per_split},
                      {"bootstrap", f.bootstrap},
                      {"seed", f.seed}};
  params["boosting"] = {{"n_rounds", b.n_rounds},
                        {"max_depth", b.max_depth},
                        {"learning_rate", b.learning_rate},
                        {"l2_leaf_regularization", b.l2_leaf_regularization},
                        {"min_child_weight", b.min_child_weight},
                        {"positive_class_weight", b.positive_class_weight},
                        {"seed", b.seed}};
  if (model.feature_config) {
    const auto& c = *model.feature_config;
    params["features"] = {{"mode", std::string(to_string(c.mode))},
                          {"window", c.window},
                          {"short_window", c.short_window},
                          {"centered_offset", c.centered_offset},
                          {"theta", c.theta}};
  } else {
    params["features"] = nullptr;
  }
  return params;
}

void params_from_json(const ordered_json& params, TreeEnsembleModel& model) {
  const auto& f = params.at("forest");
  auto& forest = model.params.forest;
  forest.n_trees = f.at("n_trees").get<std::size_t>();
  forest.max_depth = f.at("max_depth").get<std::size_t>();
  forest.min_samples_leaf = f.at("min_samples_leaf").get<std::size_t>();
  forest.features_per_split = f.at("features_per_split").get<std::size_t>();
  forest.bootstrap = f.at("bootstrap").get<bool>();
  forest.seed = f.at("seed").get<std::uint64_t>();

  const auto& b = params.at("boosting");
  auto& boosting = model.params.boosting;
  boosting.n_rounds = b.at("n_rounds").get<std::size_t>();
  boosting.max_depth = b.at("max_depth").get<std::size_t>();
  boosting.learning_rate = b.at("learning_rate").get<double>();
  boosting.l2_leaf_regularization = b.at("l2_leaf_regularization").get<double>();
  boosting.min_child_weight = b.at("min_child_weight").get<double>();
  boosting.positive_class_weight = b.at("positive_class_weight").get<double>();
  boosting.seed = b.at("seed").get<std::uint64_t>();

  const auto& c = params.at("features");
  if (c.is_null()) {
    model.feature_config.reset();
  } else {
    FeatureConfig config;
    config.mode = parse_feature_mode(c.at("mode").get<std::string>());
    config.window = c.at("window").get<std::size_t>();
    config.short_window = c.at("short_window").get<std::size_t>();
    config.centered_offset = c.at("centered_offset").get<std::int64_t>();
    config.theta = c.at("theta").get<double>();
    config.validate();
    model.feature_config = config;
  }
}

ordered_json tree_to_json(const DecisionTree& tree) {
  ordered_json nodes = ordered_json::array();
  for (const auto& node : tree.nodes) {
    if (node.is_leaf()) {
      nodes.push_back(ordered_json::array({node.value}));
    } else {
      nodes.push_back(ordered_json::array({node.feature, node.threshold, node.left, node.right}));
    }
  }
  return nodes;
}

DecisionTree tree_from_json(const ordered_json& nodes) {
  DecisionTree tree;
  for (const auto& n : nodes) {
    TreeNode node;
    if (n.size() == 1) {
      node.value = n.at(0).get<double>();
    } else if (n.size() == 4) {
      node.feature = n.at(0).get<std::int32_t>();
      node.threshold = n.at(1).get<double>();
      node.left = n.at(2).get<std::int32_t>();
      node.right = n.at(3).get<std::int32_t>();
      if (node.feature < 0) {
        throw Error(ErrorCode::CorruptModel, "negative feature index");
      }
    } else {
      throw Error(ErrorCode::CorruptModel, "node must have 1 or 4 entries");
    }
    tree.nodes.push_back(node);
  }
  return tree;
}

}  // namespace

std::string serialize_model(const TreeEnsembleModel& model) {
  std::string out = "{\n";
  out += "\"format_version\": " + std::to_string(model.format_version) + ",\n";
  out += "\"kind\": " + ordered_json(std::string(to_string(model.kind))).dump() + ",\n";
  out += "\"params\": " + params_to_json(model).dump() + ",\n";
  out += "\"feature_schema\": " + ordered_json(model.feature_schema).dump() + ",\n";
  out += "\"base_score\": " + ordered_json(model.base_score).dump() + ",\n";
  out += "\"trees\": [";
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    out += t == 0 ? "\n" : ",\n";
    out += tree_to_json(model.trees[t]).dump();
  }
  out += "\n]\n}\n";
  return out;
}

TreeEnsembleModel deserialize_model(std::string_view text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text.begin(), text.end());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::CorruptModel, std::string("unparsable model: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("format_version") ||
      !doc["format_version"].is_number_integer()) {
    throw Error(ErrorCode::CorruptModel, "missing format_version");
  }
  const auto version = doc["format_version"].get<std::int64_t>();
  if (version != kModelFormatVersion) {
    throw Error(ErrorCode::UnsupportedVersion,
                "model format_version " + std::to_string(version) + " (supported: " +
                    std::to_string(kModelFormatVersion) + ")");
  }
  TreeEnsembleModel model;
  try {
    model.format_version = static_cast<int>(version);
    const auto kind = doc.at("kind").get<std::string>();
    if (kind != "rf" && kind != "gbdt") {
      throw Error(ErrorCode::CorruptModel, "unknown model kind '" + kind + "'");
    }
    model.kind = parse_model_kind(kind);
    params_from_json(doc.at("params"), model);
    model.feature_schema = doc.at("feature_schema").get<std::vector<std::string>>();
    model.base_score = doc.at("base_score").get<double>();
    for (const auto& tree : doc.at("trees")) {
      model.trees.push_back(tree_from_json(tree));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::CorruptModel) {
      throw;
    }
    throw Error(ErrorCode::CorruptModel, e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::CorruptModel, std::string("malformed model: ") + e.what());
  }
  validate_model(model);
  return model;
}

void save_model(const TreeEnsembleModel& model, const std::filesystem::path& path) {
  write_text_file(path, serialize_model(model));
}

TreeEnsembleModel load_model(const std::filesystem::path& path) {
  std::string text;
  for (const auto& line : read_lines(path)) {
    text += line;
    text += '\n';
  }
  return deserialize_model(text);
}

}  // namespace evdetect
