#include "causalft/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include "causalft/error.hpp"

namespace causalft {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
constexpr int kFormatVersion = 1;

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct AdamSlot {
  Eigen::MatrixXd m_w, v_w;
  Eigen::VectorXd m_b, v_b;
};

}  // namespace

// ---------------------------------------------------------------- config

void ModelConfig::validate() const {
  auto bad = [](const std::string& why) { throw Error(ErrorCode::ConfigInvalid, why); };
  if (kind == ModelKind::Mlp && hidden_sizes.empty()) bad("mlp requires at least one hidden layer");
  if (kind == ModelKind::Logistic && !hidden_sizes.empty()) bad("logistic model takes no hidden layers");
  if (solver == Solver::Newton && kind != ModelKind::Logistic) bad("the newton solver needs a logistic model");
  for (int h : hidden_sizes) {
    if (h <= 0) bad("hidden sizes must be positive");
  }
  if (dropout.size() > hidden_sizes.size()) bad("more dropout rates than hidden layers");
  for (double p : dropout) {
    if (!(p >= 0.0 && p < 1.0)) bad("dropout must lie in [0, 1)");
  }
  if (!(learning_rate > 0)) bad("learning rate must be positive");
  if (batch_size <= 0) bad("batch size must be positive");
  if (epochs <= 0) bad("epochs must be positive");
  if (!(l2 >= 0)) bad("l2 must be non-negative");
  if (early_stop_patience && *early_stop_patience <= 0) bad("patience must be positive");
}

ModelConfig ModelConfig::logistic() {
  ModelConfig c;
  c.kind = ModelKind::Logistic;
  c.solver = Solver::Newton;
  c.epochs = 50;
  c.l2 = 1e-4;
  return c;
}

ModelConfig ModelConfig::dnn5() {
  ModelConfig c;
  c.kind = ModelKind::Mlp;
  c.hidden_sizes = {256, 256, 128, 64, 32};
  c.dropout = {0.3, 0.3, 0.2};
  c.learning_rate = 0.001;
  c.batch_size = 128;
  c.epochs = 100;
  c.l2 = 1e-4;
  return c;
}

ModelConfig ModelConfig::dnn6(int width) {
  ModelConfig c;
  c.kind = ModelKind::Mlp;
  c.hidden_sizes = std::vector<int>(5, width);
  c.learning_rate = 0.001;
  c.batch_size = 128;
  c.epochs = 100;
  c.early_stop_patience = 10;
  return c;
}

nlohmann::json to_json(const ModelConfig& c) {
  nlohmann::json j;
  j["kind"] = c.kind == ModelKind::Logistic ? "logistic" : "mlp";
  j["solver"] = c.solver == Solver::Newton ? "newton" : "adam";
  j["hidden_sizes"] = c.hidden_sizes;
  j["dropout"] = c.dropout;
  j["learning_rate"] = c.learning_rate;
  j["batch_size"] = c.batch_size;
  j["epochs"] = c.epochs;
  j["l2"] = c.l2;
  j["seed"] = c.seed;
  j["early_stop_patience"] =
      c.early_stop_patience ? nlohmann::json(*c.early_stop_patience) : nlohmann::json(nullptr);
  return j;
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    const auto preset = j.value("preset", std::string());
    if (preset == "dnn5") {
      c = ModelConfig::dnn5();
    } else if (preset == "dnn6") {
      c = ModelConfig::dnn6(j.value("width", 128));
    } else if (preset == "logistic" || preset.empty()) {
      c = ModelConfig::logistic();
    } else {
      throw Error(ErrorCode::ConfigInvalid, "unknown model preset '" + preset + "'");
    }
    if (j.contains("kind")) {
      const auto kind = j.at("kind").get<std::string>();
      if (kind == "logistic") {
        c.kind = ModelKind::Logistic;
      } else if (kind == "mlp") {
        c.kind = ModelKind::Mlp;
        c.solver = Solver::Adam;
      } else {
        throw Error(ErrorCode::ConfigInvalid, "unknown model kind '" + kind + "'");
      }
    }
    if (j.contains("solver")) {
      const auto solver = j.at("solver").get<std::string>();
      if (solver == "newton") {
        c.solver = Solver::Newton;
      } else if (solver == "adam") {
        c.solver = Solver::Adam;
      } else {
        throw Error(ErrorCode::ConfigInvalid, "unknown solver '" + solver + "'");
      }
    }
    if (j.contains("hidden_sizes")) c.hidden_sizes = j.at("hidden_sizes").get<std::vector<int>>();
    if (j.contains("dropout")) c.dropout = j.at("dropout").get<std::vector<double>>();
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.l2 = j.value("l2", c.l2);
    c.seed = j.value("seed", c.seed);
    if (j.contains("early_stop_patience")) {
      const auto& p = j.at("early_stop_patience");
      c.early_stop_patience = p.is_null() ? std::nullopt : std::optional<int>(p.get<int>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, e.what());
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------- Model

Model::Model(ModelConfig config, Eigen::VectorXd shift, Eigen::VectorXd scale,
             std::vector<Layer> layers)
    : config_(std::move(config)),
      shift_(std::move(shift)),
      scale_(std::move(scale)),
      layers_(std::move(layers)) {}

void Model::check_width(std::size_t n) const {
  if (n != input_width()) {
    throw Error(ErrorCode::WidthMismatch, "sample width " + std::to_string(n) + ", model expects " +
                                              std::to_string(input_width()));
  }
}

double Model::forward_one(const Eigen::VectorXd& raw, std::vector<Eigen::VectorXd>* pre) const {
  Eigen::VectorXd a = (raw - shift_).cwiseQuotient(scale_);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::VectorXd z = layers_[l].weights * a + layers_[l].bias;
    if (pre) pre->push_back(z);
    if (l + 1 < layers_.size()) {
      a = z.cwiseMax(0.0);
    } else {
      return sigmoid(z(0));
    }
  }
  return 0.5;
}

Prediction Model::predict(std::span<const Code> sample) const {
  check_width(sample.size());
  Eigen::VectorXd raw(static_cast<Eigen::Index>(sample.size()));
  for (std::size_t j = 0; j < sample.size(); ++j) raw(static_cast<Eigen::Index>(j)) = sample[j];
  const double p = forward_one(raw, nullptr);
  return {p >= 0.5 ? 1 : 0, p};
}

double Model::prob(std::span<const double> x) const {
  check_width(x.size());
  Eigen::VectorXd raw = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  return forward_one(raw, nullptr);
}

Eigen::VectorXd Model::predict_proba(const Eigen::MatrixXd& raw) const {
  check_width(static_cast<std::size_t>(raw.cols()));
  // activations are kept as units x rows
  Eigen::MatrixXd a = ((raw.rowwise() - shift_.transpose()).array().rowwise() /
                       scale_.transpose().array())
                          .matrix()
                          .transpose();
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = (layers_[l].weights * a).colwise() + layers_[l].bias;
    if (l + 1 < layers_.size()) {
      a = z.cwiseMax(0.0);
    } else {
      Eigen::VectorXd out(z.cols());
      for (Eigen::Index i = 0; i < z.cols(); ++i) out(i) = sigmoid(z(0, i));
      return out;
    }
  }
  return Eigen::VectorXd::Constant(raw.rows(), 0.5);
}

std::vector<int> Model::predict_labels(const Dataset& data) const {
  const auto p = predict_proba(to_matrix(data));
  std::vector<int> out(static_cast<std::size_t>(p.size()));
  for (Eigen::Index i = 0; i < p.size(); ++i) out[static_cast<std::size_t>(i)] = p(i) >= 0.5 ? 1 : 0;
  return out;
}

Eigen::VectorXd Model::input_gradient(std::span<const double> x) const {
  check_width(x.size());
  Eigen::VectorXd raw = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  std::vector<Eigen::VectorXd> pre;
  const double p = forward_one(raw, &pre);
  Eigen::VectorXd delta = Eigen::VectorXd::Constant(1, p * (1.0 - p));
  for (std::size_t l = layers_.size(); l-- > 0;) {
    if (l + 1 < layers_.size()) {
      for (Eigen::Index k = 0; k < delta.size(); ++k) {
        if (pre[l](k) <= 0.0) delta(k) = 0.0;
      }
    }
    delta = layers_[l].weights.transpose() * delta;
  }
  return delta.cwiseQuotient(scale_);
}

Eigen::VectorXd Model::input_gradient(std::span<const Code> sample) const {
  std::vector<double> x(sample.begin(), sample.end());
  return input_gradient(std::span<const double>(x));
}

std::pair<Eigen::VectorXd, double> Model::raw_linear_coefficients() const {
  if (config_.kind != ModelKind::Logistic) {
    throw Error(ErrorCode::ConfigInvalid, "raw coefficients exist for logistic models only");
  }
  Eigen::VectorXd w = layers_.front().weights.row(0).transpose().cwiseQuotient(scale_);
  double b = layers_.front().bias(0) - w.dot(shift_);
  return {w, b};
}

bool Model::operator==(const Model& other) const {
  if (input_width() != other.input_width() || layers_.size() != other.layers_.size()) return false;
  if (shift_ != other.shift_ || scale_ != other.scale_) return false;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].weights != other.layers_[l].weights || layers_[l].bias != other.layers_[l].bias) {
      return false;
    }
  }
  return to_json(config_) == to_json(other.config_);
}

Eigen::MatrixXd to_matrix(const Dataset& data) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(data.n_rows()), static_cast<Eigen::Index>(data.n_features()));
  for (std::size_t i = 0; i < data.n_rows(); ++i) {
    auto r = data.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r[j];
    }
  }
  return x;
}

// ---------------------------------------------------------------- training

namespace {

struct Trainer {
  const ModelConfig& cfg;
  std::vector<Model::Layer>& layers;
  std::vector<AdamSlot> adam;
  std::mt19937_64& rng;
  long step = 0;

  double dropout_rate(std::size_t hidden_index) const {
    return hidden_index < cfg.dropout.size() ? cfg.dropout[hidden_index] : 0.0;
  }

  // x: features x batch (standardised), y: labels. Returns mean BCE.
  double minibatch(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const auto n_layers = layers.size();
    const double batch = static_cast<double>(x.cols());
    std::vector<Eigen::MatrixXd> acts{x};
    std::vector<Eigen::MatrixXd> masks(n_layers);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t l = 0; l < n_layers; ++l) {
      Eigen::MatrixXd z = (layers[l].weights * acts.back()).colwise() + layers[l].bias;
      if (l + 1 < n_layers) {
        Eigen::MatrixXd a = z.cwiseMax(0.0);
        const double p = dropout_rate(l);
        if (p > 0.0) {
          masks[l] = Eigen::MatrixXd(a.rows(), a.cols());
          for (Eigen::Index c = 0; c < a.cols(); ++c) {
            for (Eigen::Index r = 0; r < a.rows(); ++r) {
              masks[l](r, c) = unif(rng) < p ? 0.0 : 1.0 / (1.0 - p);
            }
          }
          a = a.cwiseProduct(masks[l]);
        }
        acts.push_back(std::move(a));
      } else {
        acts.push_back(z.unaryExpr([](double v) { return sigmoid(v); }));
      }
    }
    const Eigen::RowVectorXd p = acts.back().row(0);
    double loss = 0;
    constexpr double tiny = 1e-12;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      loss -= y(i) * std::log(std::max(p(i), tiny)) + (1 - y(i)) * std::log(std::max(1 - p(i), tiny));
    }
    loss /= batch;

    Eigen::MatrixXd delta = (p - y.transpose()) / batch;
    ++step;
    const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(step));
    for (std::size_t l = n_layers; l-- > 0;) {
      Eigen::MatrixXd grad_w = delta * acts[l].transpose() + cfg.l2 * layers[l].weights;
      Eigen::VectorXd grad_b = delta.rowwise().sum();
      if (l > 0) {
        delta = layers[l].weights.transpose() * delta;
        // acts[l] is post-relu (and post-dropout); zero entries had no gradient
        const auto& a = acts[l];
        for (Eigen::Index c = 0; c < delta.cols(); ++c) {
          for (Eigen::Index r = 0; r < delta.rows(); ++r) {
            if (a(r, c) <= 0.0) {
              delta(r, c) = 0.0;
            } else if (masks[l - 1].size() > 0) {
              delta(r, c) *= masks[l - 1](r, c);
            }
          }
        }
      }
      auto& s = adam[l];
      s.m_w = kAdamBeta1 * s.m_w + (1 - kAdamBeta1) * grad_w;
      s.v_w = kAdamBeta2 * s.v_w + (1 - kAdamBeta2) * grad_w.cwiseAbs2();
      s.m_b = kAdamBeta1 * s.m_b + (1 - kAdamBeta1) * grad_b;
      s.v_b = kAdamBeta2 * s.v_b + (1 - kAdamBeta2) * grad_b.cwiseAbs2();
      layers[l].weights.array() -= cfg.learning_rate * (s.m_w.array() / bc1) /
                                   ((s.v_w.array() / bc2).sqrt() + kAdamEps);
      layers[l].bias.array() -= cfg.learning_rate * (s.m_b.array() / bc1) /
                                ((s.v_b.array() / bc2).sqrt() + kAdamEps);
    }
    return loss;
  }
};

double mean_bce(const Model& model, const Eigen::MatrixXd& raw, const Eigen::VectorXd& y) {
  const auto p = model.predict_proba(raw);
  double loss = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    loss -= y(i) * std::log(std::max(p(i), 1e-12)) + (1 - y(i)) * std::log(std::max(1 - p(i), 1e-12));
  }
  return loss / static_cast<double>(std::max<Eigen::Index>(1, p.size()));
}

}  // namespace

namespace {

void fit_newton(const ModelConfig& config, const Eigen::MatrixXd& raw, const Eigen::VectorXd& y,
                const Eigen::VectorXd& shift, const Eigen::VectorXd& scale, Model::Layer& layer) {
  const Eigen::Index n = raw.rows();
  const Eigen::Index d = raw.cols();
  // standardised design with a trailing intercept column
  Eigen::MatrixXd x(n, d + 1);
  x.leftCols(d) = (raw.rowwise() - shift.transpose()).array().rowwise() / scale.transpose().array();
  x.col(d).setOnes();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d + 1);
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(d + 1, config.l2);
  penalty(d) = 0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (int it = 0; it < config.epochs; ++it) {
    const Eigen::VectorXd p = (x * beta).unaryExpr([](double z) { return sigmoid(z); });
    const Eigen::VectorXd w = p.cwiseProduct(Eigen::VectorXd::Ones(n) - p);
    Eigen::VectorXd grad = inv_n * x.transpose() * (p - y) + penalty.cwiseProduct(beta);
    Eigen::MatrixXd hess = inv_n * x.transpose() * w.asDiagonal() * x;
    hess.diagonal() += penalty + Eigen::VectorXd::Constant(d + 1, 1e-12);
    const Eigen::VectorXd step = hess.ldlt().solve(grad);
    beta -= step;
    if (step.lpNorm<Eigen::Infinity>() < 1e-10) break;
  }
  layer.weights.row(0) = beta.head(d).transpose();
  layer.bias(0) = beta(d);
}

}  // namespace

Model train(const Dataset& train_data, const ModelConfig& config) {
  train_data.require_rows("training data");
  config.validate();
  std::mt19937_64 rng(config.seed);

  const Eigen::MatrixXd all_x = to_matrix(train_data);
  Eigen::VectorXd all_y(static_cast<Eigen::Index>(train_data.n_rows()));
  for (std::size_t i = 0; i < train_data.n_rows(); ++i) all_y(static_cast<Eigen::Index>(i)) = train_data.label(i);

  std::vector<Eigen::Index> fit_rows(static_cast<std::size_t>(all_x.rows()));
  std::iota(fit_rows.begin(), fit_rows.end(), 0);
  std::vector<Eigen::Index> val_rows;
  if (config.early_stop_patience && all_x.rows() >= 10) {
    std::shuffle(fit_rows.begin(), fit_rows.end(), rng);
    const auto n_val = fit_rows.size() / 10;
    val_rows.assign(fit_rows.end() - static_cast<std::ptrdiff_t>(n_val), fit_rows.end());
    fit_rows.resize(fit_rows.size() - n_val);
    std::sort(fit_rows.begin(), fit_rows.end());
  }

  const Eigen::Index d = all_x.cols();
  Eigen::VectorXd shift = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(d);
  for (auto r : fit_rows) shift += all_x.row(r).transpose();
  shift /= static_cast<double>(fit_rows.size());
  Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
  for (auto r : fit_rows) var += (all_x.row(r).transpose() - shift).cwiseAbs2();
  var /= static_cast<double>(fit_rows.size());
  for (Eigen::Index j = 0; j < d; ++j) scale(j) = var(j) > 1e-24 ? std::sqrt(var(j)) : 1.0;

  std::vector<Model::Layer> layers;
  std::vector<int> widths{static_cast<int>(d)};
  widths.insert(widths.end(), config.hidden_sizes.begin(), config.hidden_sizes.end());
  widths.push_back(1);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    Model::Layer layer{Eigen::MatrixXd::Zero(widths[l + 1], widths[l]), Eigen::VectorXd::Zero(widths[l + 1])};
    if (config.kind == ModelKind::Mlp) {
      const double limit = std::sqrt(6.0 / (widths[l] + widths[l + 1]));
      std::uniform_real_distribution<double> xavier(-limit, limit);
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) layer.weights(r, c) = xavier(rng);
      }
    }
    layers.push_back(std::move(layer));
  }

  if (config.solver == Solver::Newton) {
    fit_newton(config, all_x, all_y, shift, scale, layers.front());
    return Model(config, std::move(shift), std::move(scale), std::move(layers));
  }

  Trainer trainer{config, layers, {}, rng};
  for (const auto& layer : layers) {
    trainer.adam.push_back({Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()),
                            Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()),
                            Eigen::VectorXd::Zero(layer.bias.size()), Eigen::VectorXd::Zero(layer.bias.size())});
  }

  Eigen::MatrixXd val_x(static_cast<Eigen::Index>(val_rows.size()), d);
  Eigen::VectorXd val_y(static_cast<Eigen::Index>(val_rows.size()));
  for (std::size_t i = 0; i < val_rows.size(); ++i) {
    val_x.row(static_cast<Eigen::Index>(i)) = all_x.row(val_rows[i]);
    val_y(static_cast<Eigen::Index>(i)) = all_y(val_rows[i]);
  }

  double best_val = std::numeric_limits<double>::infinity();
  std::vector<Model::Layer> best_layers = layers;
  int since_best = 0;
  const auto n_fit = fit_rows.size();
  const auto batch = static_cast<std::size_t>(config.batch_size);
  std::vector<Eigen::Index> order = fit_rows;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n_fit; start += batch) {
      const auto stop = std::min(n_fit, start + batch);
      Eigen::MatrixXd x(d, static_cast<Eigen::Index>(stop - start));
      Eigen::VectorXd y(static_cast<Eigen::Index>(stop - start));
      for (std::size_t k = start; k < stop; ++k) {
        const auto col = static_cast<Eigen::Index>(k - start);
        x.col(col) = (all_x.row(order[k]).transpose() - shift).cwiseQuotient(scale);
        y(col) = all_y(order[k]);
      }
      trainer.minibatch(x, y);
    }
    if (!val_rows.empty()) {
      const double val = mean_bce(Model(config, shift, scale, layers), val_x, val_y);
      if (val < best_val) {
        best_val = val;
        best_layers = layers;
        since_best = 0;
      } else if (++since_best >= *config.early_stop_patience) {
        break;
      }
    }
  }
  if (!val_rows.empty()) layers = best_layers;
  return Model(config, std::move(shift), std::move(scale), std::move(layers));
}

QualityScores evaluate_quality(const Model& model, const Dataset& data) {
  data.require_rows("evaluation data");
  const auto p = model.predict_proba(to_matrix(data));
  const auto n = static_cast<std::size_t>(p.size());
  std::size_t tp = 0, fp = 0, fn = 0, correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const int yhat = p(static_cast<Eigen::Index>(i)) >= 0.5 ? 1 : 0;
    const int y = data.label(i);
    correct += yhat == y;
    tp += yhat == 1 && y == 1;
    fp += yhat == 1 && y == 0;
    fn += yhat == 0 && y == 1;
  }
  QualityScores q;
  q.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  q.f1 = tp == 0 ? 0.0 : 2.0 * tp / static_cast<double>(2 * tp + fp + fn);

  // AUC via average ranks
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) {
    return p(static_cast<Eigen::Index>(a)) < p(static_cast<Eigen::Index>(b));
  });
  double rank_sum_pos = 0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && p(static_cast<Eigen::Index>(idx[j + 1])) == p(static_cast<Eigen::Index>(idx[i]))) ++j;
    const double avg_rank = (static_cast<double>(i + j) / 2.0) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (data.label(idx[k]) == 1) {
        rank_sum_pos += avg_rank;
        ++n_pos;
      }
    }
    i = j + 1;
  }
  const auto n_neg = n - n_pos;
  q.auc = (n_pos == 0 || n_neg == 0)
              ? 0.5
              : (rank_sum_pos - static_cast<double>(n_pos * (n_pos + 1)) / 2.0) /
                    static_cast<double>(n_pos * n_neg);
  return q;
}

// ---------------------------------------------------------------- persistence

nlohmann::json to_json(const Model& model) {
  nlohmann::json j;
  j["format"] = "causalft-model";
  j["version"] = kFormatVersion;
  j["config"] = to_json(model.config());
  j["shift"] = std::vector<double>(model.shift().data(), model.shift().data() + model.shift().size());
  j["scale"] = std::vector<double>(model.scale().data(), model.scale().data() + model.scale().size());
  auto& layers = j["layers"] = nlohmann::json::array();
  for (const auto& layer : model.layers()) {
    nlohmann::json lj;
    lj["rows"] = layer.weights.rows();
    lj["cols"] = layer.weights.cols();
    std::vector<double> w;
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) w.push_back(layer.weights(r, c));
    }
    lj["weights"] = w;
    lj["bias"] = std::vector<double>(layer.bias.data(), layer.bias.data() + layer.bias.size());
    layers.push_back(std::move(lj));
  }
  return j;
}

Model model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "causalft-model") throw Error(ErrorCode::ParseError, "not a model file");
    if (j.at("version").get<int>() != kFormatVersion) {
      throw Error(ErrorCode::ParseError, "unsupported model version");
    }
    auto config = model_config_from_json(j.at("config"));
    auto to_vec = [](const nlohmann::json& a) {
      auto v = a.get<std::vector<double>>();
      return Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    };
    std::vector<Model::Layer> layers;
    for (const auto& lj : j.at("layers")) {
      const auto rows = lj.at("rows").get<Eigen::Index>();
      const auto cols = lj.at("cols").get<Eigen::Index>();
      auto w = lj.at("weights").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(w.size()) != rows * cols) {
        throw Error(ErrorCode::ParseError, "weight count mismatch");
      }
      Model::Layer layer{Eigen::MatrixXd(rows, cols), to_vec(lj.at("bias"))};
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) layer.weights(r, c) = w[static_cast<std::size_t>(r * cols + c)];
      }
      layers.push_back(std::move(layer));
    }
    return Model(std::move(config), to_vec(j.at("shift")), to_vec(j.at("scale")), std::move(layers));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

void save_model(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IOError, "cannot write " + path.string());
  out << to_json(model).dump(1) << '\n';
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IOError, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  return model_from_json(j);
}

}  // namespace causalft
