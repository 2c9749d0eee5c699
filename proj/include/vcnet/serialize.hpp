#pragma once

// Model file: one JSON document holding the format version, the fitted
// feature schema and its hash, architecture widths and every layer's weights
// (row-major) and bias. Doubles are written with round-trip precision, so a
// save/load cycle is bitwise exact.

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "json.hpp"
#include "vcnet/data.hpp"
#include "vcnet/error.hpp"
#include "vcnet/model.hpp"

namespace vcnet {

using json = nlohmann::json;

inline constexpr int kModelFormatVersion = 1;

struct StoredModel {
  ModelParams params;
  data::FeatureSchema schema;
};

namespace detail {

inline json block_to_json(const Block& block) {
  json arr = json::array();
  for (const auto& l : block) {
    json groups = json::array();
    for (const auto& g : l.groups) groups.push_back({g.start, g.length});
    arr.push_back({{"in", l.in_dim},
                   {"out", l.out_dim},
                   {"activation", nn::to_string(l.activation)},
                   {"groups", groups},
                   {"weights", l.weights},
                   {"bias", l.bias}});
  }
  return arr;
}

inline Block block_from_json(const json& arr) {
  Block block;
  for (const auto& lj : arr) {
    nn::DenseLayer l;
    l.in_dim = lj.at("in").get<std::size_t>();
    l.out_dim = lj.at("out").get<std::size_t>();
    l.activation = nn::activation_from_string(lj.at("activation").get<std::string>());
    for (const auto& g : lj.at("groups")) l.groups.push_back({g.at(0).get<std::size_t>(), g.at(1).get<std::size_t>()});
    l.weights = lj.at("weights").get<std::vector<double>>();
    l.bias = lj.at("bias").get<std::vector<double>>();
    block.push_back(std::move(l));
  }
  return block;
}

inline std::vector<std::size_t> block_dims(const Block& b) {
  std::vector<std::size_t> d;
  if (b.empty()) return d;
  d.push_back(b.front().in_dim);
  for (const auto& l : b) d.push_back(l.out_dim);
  return d;
}

}  // namespace detail

inline json model_to_json(const ModelParams& m, const data::FeatureSchema& schema) {
  json spans = json::array();
  for (const auto& s : m.one_hot_spans) spans.push_back({s.start, s.length});
  json j = {{"format_version", kModelFormatVersion},
            {"schema_hash", data::schema_hash(schema)},
            {"schema", data::schema_to_json(schema)},
            {"latent_dim", m.latent_dim},
            {"condition_dim", m.condition_dim},
            {"class_count", m.class_count},
            {"one_hot_spans", spans},
            {"dims",
             {{"shared", detail::block_dims(m.shared)},
              {"predictor", detail::block_dims(m.predictor)},
              {"encoder", detail::block_dims(m.encoder)},
              {"decoder", detail::block_dims(m.decoder)},
              {"cvae_shared", detail::block_dims(m.cvae_shared)}}},
            {"layers",
             {{"shared", detail::block_to_json(m.shared)},
              {"predictor", detail::block_to_json(m.predictor)},
              {"encoder", detail::block_to_json(m.encoder)},
              {"decoder", detail::block_to_json(m.decoder)},
              {"cvae_shared", detail::block_to_json(m.cvae_shared)}}}};
  return j;
}

inline StoredModel model_from_json(const json& j, const std::optional<std::string>& expected_schema_hash = {}) {
  StoredModel out;
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw ModelFormatError("unsupported model format version " + std::to_string(version) +
                             " (expected " + std::to_string(kModelFormatVersion) + ")");
    }
    const auto stored_hash = j.at("schema_hash").get<std::string>();
    out.schema = data::schema_from_json(j.at("schema"));
    if (data::schema_hash(out.schema) != stored_hash) {
      throw ModelFormatError("model file schema does not match its recorded schema hash");
    }
    if (expected_schema_hash && *expected_schema_hash != stored_hash) {
      throw ModelFormatError("model was trained for schema " + stored_hash + ", not " + *expected_schema_hash);
    }
    auto& m = out.params;
    m.latent_dim = j.at("latent_dim").get<std::size_t>();
    m.condition_dim = j.at("condition_dim").get<std::size_t>();
    m.class_count = j.at("class_count").get<std::size_t>();
    for (const auto& s : j.at("one_hot_spans")) m.one_hot_spans.push_back({s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>()});
    const auto& layers = j.at("layers");
    m.shared = detail::block_from_json(layers.at("shared"));
    m.predictor = detail::block_from_json(layers.at("predictor"));
    m.encoder = detail::block_from_json(layers.at("encoder"));
    m.decoder = detail::block_from_json(layers.at("decoder"));
    m.cvae_shared = detail::block_from_json(layers.at("cvae_shared"));
    m.check();
  } catch (const json::exception& e) {
    throw ModelFormatError(std::string("malformed model file: ") + e.what());
  } catch (const ContractViolation& e) {
    throw ModelFormatError(std::string("inconsistent model file: ") + e.what());
  } catch (const DataError& e) {
    throw ModelFormatError(std::string("bad schema in model file: ") + e.what());
  }
  return out;
}

inline void save_model(const std::string& path, const ModelParams& m, const data::FeatureSchema& schema) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ModelFormatError("cannot write model file '" + path + "'");
  out << model_to_json(m, schema).dump(1) << '\n';
  if (!out) throw ModelFormatError("failed writing model file '" + path + "'");
}

inline StoredModel load_model(const std::string& path,
                              const std::optional<std::string>& expected_schema_hash = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelFormatError("cannot open model file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ModelFormatError("model file '" + path + "' is truncated or not JSON: " + e.what());
  }
  return model_from_json(j, expected_schema_hash);
}

}  // namespace vcnet
