#include <fstream>
#include <sstream>

#include <json.hpp>

#include "grandag/error.hpp"
#include "grandag/nn.hpp"

namespace grandag {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "grandag-checkpoint";
constexpr int kVersion = 1;

json matrix_rows(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

// Layout:
//   { "format": "grandag-checkpoint", "version": 1,
//     "d": int, "hidden": [int], "head": "mean" | "mean-logvar", "leaky_slope": double,
//     "masks": d x d 0/1 rows (row i = input i, column j = network j),
//     "nets": [ { "layers": [ { "weight": out x in rows, "bias": [out] } ],
//                 "log_var": double (mean head only) } ] }
std::string to_checkpoint_json(const NnStack& stack) {
  json nets = json::array();
  for (int j = 0; j < stack.d(); ++j) {
    json layers = json::array();
    for (int l = 0; l < stack.layer_count(); ++l) {
      const auto b = stack.bias(j, l);
      layers.push_back({{"weight", matrix_rows(stack.weight(j, l))},
                        {"bias", std::vector<double>(b.data(), b.data() + b.size())}});
    }
    json net{{"layers", std::move(layers)}};
    if (stack.config().head == Head::kMean) net["log_var"] = stack.log_var(j);
    nets.push_back(std::move(net));
  }
  json masks = json::array();
  for (int i = 0; i < stack.d(); ++i) {
    json row = json::array();
    for (int j = 0; j < stack.d(); ++j) row.push_back(static_cast<int>(stack.masks()(i, j)));
    masks.push_back(std::move(row));
  }
  json doc{{"format", kFormat},
           {"version", kVersion},
           {"d", stack.d()},
           {"hidden", stack.config().hidden},
           {"head", to_string(stack.config().head)},
           {"leaky_slope", stack.config().leaky_slope},
           {"masks", std::move(masks)},
           {"nets", std::move(nets)}};
  return doc.dump();
}

NnStack from_checkpoint_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != kFormat) throw InvalidInput("not a grandag checkpoint");
    if (doc.at("version").get<int>() != kVersion) {
      throw InvalidInput("unsupported checkpoint version " + std::to_string(doc.at("version").get<int>()));
    }
    NetConfig cfg;
    cfg.d = doc.at("d").get<int>();
    cfg.hidden = doc.at("hidden").get<std::vector<int>>();
    cfg.head = parse_head(doc.at("head").get<std::string>());
    cfg.leaky_slope = doc.at("leaky_slope").get<double>();
    NnStack stack(cfg);
    const auto& nets = doc.at("nets");
    if (static_cast<int>(nets.size()) != cfg.d) throw InvalidInput("checkpoint has wrong number of networks");
    for (int j = 0; j < cfg.d; ++j) {
      const auto& layers = nets[j].at("layers");
      if (static_cast<int>(layers.size()) != stack.layer_count()) throw InvalidInput("checkpoint layer count mismatch");
      for (int l = 0; l < stack.layer_count(); ++l) {
        auto w = stack.weight(j, l);
        const auto& rows = layers[l].at("weight");
        const auto bias = layers[l].at("bias").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(rows.size()) != w.rows() || static_cast<Eigen::Index>(bias.size()) != w.rows()) {
          throw InvalidInput("checkpoint layer shape mismatch");
        }
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
          const auto row = rows[r].get<std::vector<double>>();
          if (static_cast<Eigen::Index>(row.size()) != w.cols()) throw InvalidInput("checkpoint layer shape mismatch");
          for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = row[c];
        }
        auto b = stack.bias(j, l);
        for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = bias[r];
      }
      if (cfg.head == Head::kMean) stack.log_var(j) = nets[j].at("log_var").get<double>();
    }
    const auto masks = doc.at("masks").get<std::vector<std::vector<int>>>();
    BinaryMatrix allowed = BinaryMatrix::Zero(cfg.d, cfg.d);
    if (static_cast<int>(masks.size()) != cfg.d) throw InvalidInput("checkpoint mask shape mismatch");
    for (int i = 0; i < cfg.d; ++i) {
      if (static_cast<int>(masks[i].size()) != cfg.d) throw InvalidInput("checkpoint mask shape mismatch");
      for (int j = 0; j < cfg.d; ++j) allowed(i, j) = masks[i][j] != 0;
    }
    stack.restrict_masks(allowed);
    return stack;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const NnStack& stack) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << to_checkpoint_json(stack);
}

NnStack load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_checkpoint_json(buf.str());
}

}  // namespace grandag
