#include <fstream>
#include <sstream>
#include <string>

#include "gbcontrib/error.hpp"
#include "gbcontrib/gbdt.hpp"
#include "json.hpp"

namespace gbcontrib {

using nlohmann::json;

namespace {

json node_to_json(NodeId id, const TreeNode& node) {
  json j;
  j["id"] = id;
  j["value"] = node.value;
  j["n_samples"] = node.n_samples;
  j["sse"] = node.sse;
  j["gain"] = node.gain;
  if (node.split) {
    j["feature"] = node.split->feature;
    j["threshold"] = node.split->threshold;
    j["left"] = *node.left;
    j["right"] = *node.right;
  } else {
    j["feature"] = nullptr;
    j["threshold"] = nullptr;
    j["left"] = nullptr;
    j["right"] = nullptr;
  }
  return j;
}

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw ModelFormatError(where + ": expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw ModelFormatError(where + ": missing key '" + key + "'");
  return *it;
}

double get_real(const json& obj, const char* key, const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_number()) throw ModelFormatError(where + ": '" + key + "' must be a number");
  return v.get<double>();
}

std::size_t get_index(const json& v, const std::string& what) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw ModelFormatError(what + " must be a nonnegative integer");
  }
  return v.get<std::size_t>();
}

Tree tree_from_json(const json& j, std::size_t n_features, const std::string& where) {
  const std::size_t root = get_index(require(j, "root", where), where + ".root");
  const json& nodes_json = require(j, "nodes", where);
  if (!nodes_json.is_array()) throw ModelFormatError(where + ".nodes must be an array");
  const std::size_t n = nodes_json.size();
  std::vector<TreeNode> nodes(n);
  std::vector<bool> seen(n, false);
  for (std::size_t k = 0; k < n; ++k) {
    const json& nj = nodes_json[k];
    const std::string at = where + ".nodes[" + std::to_string(k) + "]";
    const std::size_t id = get_index(require(nj, "id", at), at + ".id");
    if (id >= n || seen[id]) throw ModelFormatError(at + ": duplicate or out-of-range id");
    seen[id] = true;
    TreeNode& node = nodes[id];
    node.value = get_real(nj, "value", at);
    node.n_samples = get_index(require(nj, "n_samples", at), at + ".n_samples");
    if (nj.contains("sse")) node.sse = get_real(nj, "sse", at);
    if (nj.contains("gain")) node.gain = get_real(nj, "gain", at);
    const json& feature = require(nj, "feature", at);
    const json& threshold = require(nj, "threshold", at);
    const json& left = require(nj, "left", at);
    const json& right = require(nj, "right", at);
    const bool internal = !feature.is_null();
    if (threshold.is_null() == internal || left.is_null() == internal ||
        right.is_null() == internal) {
      throw ModelFormatError(at + ": feature, threshold, left and right must be all set or all null");
    }
    if (internal) {
      if (!threshold.is_number()) throw ModelFormatError(at + ".threshold must be a number");
      node.split = SplitDecision{get_index(feature, at + ".feature"), threshold.get<double>()};
      node.left = static_cast<NodeId>(get_index(left, at + ".left"));
      node.right = static_cast<NodeId>(get_index(right, at + ".right"));
    }
  }
  return Tree(std::move(nodes), static_cast<NodeId>(root), n_features);
}

}  // namespace

std::string to_json(const Ensemble& ens) {
  json j;
  j["format_version"] = kModelFormatVersion;
  j["f0"] = ens.f0();
  j["learning_rate"] = ens.learning_rate();
  j["feature_names"] = ens.feature_names();
  const GbdtParams& p = ens.params();
  j["params"] = {
      {"n_estimators", p.n_estimators},
      {"learning_rate", p.learning_rate},
      {"max_depth", p.cart.max_depth},
      {"min_samples_leaf", p.cart.min_samples_leaf},
      {"min_samples_split", p.cart.min_samples_split},
      {"min_gain", p.cart.min_gain},
      {"seed", p.seed},
  };
  json trees = json::array();
  for (const Tree& tree : ens.trees()) {
    json nodes = json::array();
    for (std::size_t id = 0; id < tree.size(); ++id) {
      nodes.push_back(node_to_json(static_cast<NodeId>(id), tree.node(static_cast<NodeId>(id))));
    }
    trees.push_back({{"root", tree.root()}, {"nodes", std::move(nodes)}});
  }
  j["trees"] = std::move(trees);
  return j.dump(1) + "\n";
}

namespace {

Ensemble ensemble_from_json(const json& j);

}  // namespace

Ensemble from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ModelFormatError(std::string("malformed model file: ") + e.what());
  }
  try {
    return ensemble_from_json(j);
  } catch (const json::exception& e) {
    throw ModelFormatError(std::string("model schema mismatch: ") + e.what());
  }
}

namespace {

Ensemble ensemble_from_json(const json& j) {
  const std::string where = "model";
  const json& version = require(j, "format_version", where);
  if (!version.is_number_integer()) throw ModelFormatError("format_version must be an integer");
  if (version.get<int>() != kModelFormatVersion) {
    throw ModelFormatError("unsupported model format_version " + version.dump() + " (expected " +
                           std::to_string(kModelFormatVersion) + ")");
  }
  const double f0 = get_real(j, "f0", where);
  const double learning_rate = get_real(j, "learning_rate", where);
  const json& names_json = require(j, "feature_names", where);
  if (!names_json.is_array()) throw ModelFormatError("feature_names must be an array");
  std::vector<std::string> names;
  for (const json& name : names_json) {
    if (!name.is_string()) throw ModelFormatError("feature_names must hold strings");
    names.push_back(name.get<std::string>());
  }
  const json& trees_json = require(j, "trees", where);
  if (!trees_json.is_array()) throw ModelFormatError("trees must be an array");
  std::vector<Tree> trees;
  trees.reserve(trees_json.size());
  for (std::size_t l = 0; l < trees_json.size(); ++l) {
    trees.push_back(tree_from_json(trees_json[l], names.size(), "trees[" + std::to_string(l) + "]"));
  }

  GbdtParams params;
  params.n_estimators = trees.size();
  params.learning_rate = learning_rate;
  if (j.contains("params")) {
    const json& pj = j.at("params");
    const std::string at = "params";
    params.n_estimators = get_index(require(pj, "n_estimators", at), "params.n_estimators");
    params.learning_rate = get_real(pj, "learning_rate", at);
    params.cart.max_depth = static_cast<int>(get_index(require(pj, "max_depth", at), "params.max_depth"));
    params.cart.min_samples_leaf = get_index(require(pj, "min_samples_leaf", at), "params.min_samples_leaf");
    params.cart.min_samples_split = get_index(require(pj, "min_samples_split", at), "params.min_samples_split");
    params.cart.min_gain = get_real(pj, "min_gain", at);
    params.seed = require(pj, "seed", at).get<std::uint64_t>();
  }
  return Ensemble(f0, learning_rate, std::move(trees), std::move(names), params);
}

}  // namespace

void save_model(const Ensemble& ens, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write model file '" + path.string() + "'");
  out << to_json(ens);
  if (!out) throw Error("failed writing model file '" + path.string() + "'");
}

Ensemble load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelFormatError("cannot open model file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

}  // namespace gbcontrib
