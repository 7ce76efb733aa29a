#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "causalft/data.hpp"

namespace causalft {

enum class ModelKind { Logistic, Mlp };
// Newton applies to logistic models only: full-batch iteratively reweighted
// least squares to convergence, with `epochs` as the iteration cap.
enum class Solver { Adam, Newton };

struct ModelConfig {
  ModelKind kind = ModelKind::Logistic;
  Solver solver = Solver::Adam;
  std::vector<int> hidden_sizes;
  // aligned to the leading hidden layers
  std::vector<double> dropout;
  double learning_rate = 0.001;
  int batch_size = 128;
  int epochs = 100;
  // penalty 0.5 * l2 * |W|^2 added to the mean loss; biases are not penalised
  double l2 = 0.0;
  std::uint64_t seed = 0;
  std::optional<int> early_stop_patience;

  void validate() const;

  // L2-regularised logistic regression solved to convergence.
  static ModelConfig logistic();
  // Five hidden layers [256, 256, 128, 64, 32], dropout 0.3/0.3/0.2.
  static ModelConfig dnn5();
  // Five hidden layers of equal width, no dropout, early stopping.
  static ModelConfig dnn6(int width = 128);
};

nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& doc);

struct Prediction {
  int label;
  double prob;
};

// A trained classifier. Inputs are integer codes fed as reals; the model
// standardises them internally with shift/scale taken from the training data.
class Model {
 public:
  struct Layer {
    Eigen::MatrixXd weights;  // out x in
    Eigen::VectorXd bias;
  };

  Model() = default;
  Model(ModelConfig config, Eigen::VectorXd shift, Eigen::VectorXd scale, std::vector<Layer> layers);

  const ModelConfig& config() const { return config_; }
  std::size_t input_width() const { return static_cast<std::size_t>(shift_.size()); }
  const std::vector<Layer>& layers() const { return layers_; }
  const Eigen::VectorXd& shift() const { return shift_; }
  const Eigen::VectorXd& scale() const { return scale_; }

  Prediction predict(std::span<const Code> sample) const;
  int label(std::span<const Code> sample) const { return predict(sample).label; }
  double prob(std::span<const double> x) const;
  // One probability per row of a raw (unstandardised) input matrix.
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& raw) const;
  std::vector<int> predict_labels(const Dataset& data) const;

  // d prob / d x for every raw input feature.
  Eigen::VectorXd input_gradient(std::span<const Code> sample) const;
  Eigen::VectorXd input_gradient(std::span<const double> x) const;

  // Logistic only: weights and bias expressed in raw input units.
  std::pair<Eigen::VectorXd, double> raw_linear_coefficients() const;

  bool operator==(const Model&) const;

 private:
  void check_width(std::size_t n) const;
  double forward_one(const Eigen::VectorXd& raw, std::vector<Eigen::VectorXd>* pre) const;

  ModelConfig config_;
  Eigen::VectorXd shift_;
  Eigen::VectorXd scale_;
  std::vector<Layer> layers_;
};

Model train(const Dataset& train_data, const ModelConfig& config);

struct QualityScores {
  double accuracy = 0;
  double f1 = 0;
  double auc = 0;
};
QualityScores evaluate_quality(const Model& model, const Dataset& data);

nlohmann::json to_json(const Model& model);
Model model_from_json(const nlohmann::json& doc);
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

Eigen::MatrixXd to_matrix(const Dataset& data);

}  // namespace causalft
