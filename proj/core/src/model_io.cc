#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "prodsearch/learners.h"

namespace prodsearch {
namespace {

using nlohmann::json;

constexpr int kModelFormatVersion = 1;

json matrix_json(const Matrix& m) {
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

Matrix matrix_from(const json& j) {
  return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                j.at("data").get<std::vector<double>>());
}

json params_json(const ModelParams& params) {
  return std::visit(
      [](const auto& p) -> json {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, LinearParams>) {
          return {{"weights", matrix_json(p.weights)}, {"bias", p.bias}};
        } else if constexpr (std::is_same_v<P, RbfParams>) {
          json machines = json::array();
          for (const auto& m : p.machines) {
            machines.push_back(
                {{"support", matrix_json(m.support)}, {"coef", m.coef}, {"bias", m.bias}});
          }
          return {{"gamma", p.gamma}, {"machines", machines}};
        } else if constexpr (std::is_same_v<P, KnnParams>) {
          return {{"k", p.k}, {"points", matrix_json(p.points)}, {"labels", p.labels}};
        } else if constexpr (std::is_same_v<P, ForestParams>) {
          json trees = json::array();
          for (const auto& t : p.trees) {
            std::vector<int> feature, left, right, label;
            std::vector<double> threshold;
            for (const auto& n : t.nodes) {
              feature.push_back(n.feature);
              threshold.push_back(n.threshold);
              left.push_back(n.left);
              right.push_back(n.right);
              label.push_back(n.label);
            }
            trees.push_back({{"feature", feature},
                             {"threshold", threshold},
                             {"left", left},
                             {"right", right},
                             {"label", label}});
          }
          return {{"trees", trees}};
        } else if constexpr (std::is_same_v<P, BoostParams>) {
          json machines = json::array();
          for (const auto& m : p.machines) {
            std::vector<int> feature, polarity;
            std::vector<double> threshold, alpha;
            for (const auto& s : m) {
              feature.push_back(s.feature);
              threshold.push_back(s.threshold);
              polarity.push_back(s.polarity);
              alpha.push_back(s.alpha);
            }
            machines.push_back({{"feature", feature},
                                {"threshold", threshold},
                                {"polarity", polarity},
                                {"alpha", alpha}});
          }
          return {{"machines", machines}};
        } else {
          return {{"w1", matrix_json(p.w1)},
                  {"b1", p.b1},
                  {"w2", matrix_json(p.w2)},
                  {"b2", p.b2}};
        }
      },
      params);
}

ModelParams params_from(ModelKind kind, const json& j) {
  switch (kind) {
    case ModelKind::LogReg:
    case ModelKind::LinearSVM:
      return LinearParams{matrix_from(j.at("weights")), j.at("bias").get<std::vector<double>>()};
    case ModelKind::RbfSVM: {
      RbfParams p;
      p.gamma = j.at("gamma").get<double>();
      for (const auto& m : j.at("machines")) {
        p.machines.push_back(KernelMachine{matrix_from(m.at("support")),
                                           m.at("coef").get<std::vector<double>>(),
                                           m.at("bias").get<double>()});
      }
      return p;
    }
    case ModelKind::KNN:
      return KnnParams{j.at("k").get<int>(), matrix_from(j.at("points")),
                       j.at("labels").get<std::vector<int>>()};
    case ModelKind::RandomForest: {
      ForestParams p;
      for (const auto& t : j.at("trees")) {
        const auto feature = t.at("feature").get<std::vector<int>>();
        const auto threshold = t.at("threshold").get<std::vector<double>>();
        const auto left = t.at("left").get<std::vector<int>>();
        const auto right = t.at("right").get<std::vector<int>>();
        const auto label = t.at("label").get<std::vector<int>>();
        DecisionTree tree;
        for (std::size_t i = 0; i < feature.size(); ++i) {
          tree.nodes.push_back({feature.at(i), threshold.at(i), left.at(i), right.at(i),
                                label.at(i)});
        }
        p.trees.push_back(std::move(tree));
      }
      return p;
    }
    case ModelKind::AdaBoost: {
      BoostParams p;
      for (const auto& m : j.at("machines")) {
        const auto feature = m.at("feature").get<std::vector<int>>();
        const auto threshold = m.at("threshold").get<std::vector<double>>();
        const auto polarity = m.at("polarity").get<std::vector<int>>();
        const auto alpha = m.at("alpha").get<std::vector<double>>();
        std::vector<Stump> machine;
        for (std::size_t i = 0; i < feature.size(); ++i) {
          machine.push_back({feature.at(i), threshold.at(i), polarity.at(i), alpha.at(i)});
        }
        p.machines.push_back(std::move(machine));
      }
      return p;
    }
    case ModelKind::MLP:
      return MlpParams{matrix_from(j.at("w1")), j.at("b1").get<std::vector<double>>(),
                       matrix_from(j.at("w2")), j.at("b2").get<std::vector<double>>()};
  }
  throw std::invalid_argument("unknown model kind");
}

}  // namespace

std::string model_to_json(const TrainedModel& model) {
  json j;
  j["version"] = kModelFormatVersion;
  j["kind"] = std::string(to_string(model.kind));
  j["class_names"] = model.class_names;
  j["feature_dim"] = model.feature_dim;
  if (model.standardizer) {
    j["standardizer"] = {{"mean", model.standardizer->mean},
                         {"stddev", model.standardizer->stddev}};
  } else {
    j["standardizer"] = nullptr;
  }
  j["parameters"] = params_json(model.params);
  return j.dump();
}

TrainedModel model_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("version").get<int>() != kModelFormatVersion) {
      throw std::runtime_error("unsupported model format version " +
                               j.at("version").dump());
    }
    TrainedModel m;
    const auto kind = parse_model_kind(j.at("kind").get<std::string>());
    if (!kind) throw std::runtime_error("unknown model kind " + j.at("kind").dump());
    m.kind = *kind;
    m.class_names = j.at("class_names").get<std::vector<std::string>>();
    m.feature_dim = j.at("feature_dim").get<std::size_t>();
    if (!j.at("standardizer").is_null()) {
      Standardizer s;
      s.mean = j["standardizer"].at("mean").get<std::vector<double>>();
      s.stddev = j["standardizer"].at("stddev").get<std::vector<double>>();
      if (s.mean.size() != m.feature_dim || s.stddev.size() != m.feature_dim) {
        throw std::runtime_error("standardizer width does not match feature_dim");
      }
      for (double v : s.stddev) {
        if (!(v > 0)) throw std::runtime_error("standardizer stddev must be > 0");
      }
      m.standardizer = std::move(s);
    }
    m.params = params_from(m.kind, j.at("parameters"));
    return m;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const TrainedModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model file " + path);
  out << model_to_json(model) << '\n';
  if (!out) throw std::runtime_error("failed writing model file " + path);
}

TrainedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

}  // namespace prodsearch
