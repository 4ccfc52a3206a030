#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <future>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "beyondwords/errors.hpp"
#include "beyondwords/linalg.hpp"

namespace beyondwords {

enum class Activation { relu, sigmoid, identity };

std::string activation_name(Activation a);
Activation parse_activation(const std::string& name);

/// Compression ratio latent_dim / input_dim, restricted to 1/2, 1/3, 1/4.
struct Ratio {
  int num = 1;
  int den = 2;

  int latent_dim(int input_dim) const { return input_dim * num / den; }
  double value() const { return static_cast<double>(num) / den; }
  std::string label() const { return std::to_string(num) + "_" + std::to_string(den); }
  std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }
  friend bool operator==(const Ratio&, const Ratio&) = default;
};

/// Parses "1/2", "1/3" or "1/4".
Ratio parse_ratio(const std::string& s);

template <typename Scalar>
struct DenseLayer {
  Matrix<Scalar> weight;  // out x in
  Vector<Scalar> bias;    // out
  Activation activation = Activation::identity;

  Eigen::Index in_dim() const { return weight.cols(); }
  Eigen::Index out_dim() const { return weight.rows(); }
};

template <typename Scalar>
struct AutoencoderParams {
  int input_dim = 0;
  int latent_dim = 0;
  Ratio ratio;
  std::uint64_t seed = 0;
  std::vector<DenseLayer<Scalar>> encoder;
  std::vector<DenseLayer<Scalar>> decoder;
  // Optional per-column input standardization; empty means none.
  Vector<Scalar> input_mean;
  Vector<Scalar> input_scale;

  /// Throws NumericError when layer shapes do not chain d -> k -> d or a
  /// parameter is non-finite.
  void validate() const;

  template <typename Other>
  AutoencoderParams<Other> cast() const;
};

struct TrainingConfig {
  int epochs = 200;
  int batch_size = 32;
  double learning_rate = 0.05;
  double val_fraction = 0.2;
  std::uint64_t seed = 0;
  std::vector<Ratio> ratios{{1, 2}, {1, 3}, {1, 4}};
  bool standardize = false;

  void validate(Eigen::Index n) const;
};

struct RatioCurve {
  Ratio ratio;
  int latent_dim = 0;
  double initial_train_loss = 0;
  std::vector<double> train_loss;  // one entry per epoch
  std::vector<double> val_loss;
  double final_val_loss = 0;  // after the last epoch (at init when epochs == 0)
};

struct TrainingReport {
  std::vector<RatioCurve> curves;
  Ratio selected_ratio;
  double best_val_loss = 0;
};

template <typename Scalar>
struct TrainingResult {
  TrainingReport report;
  std::vector<AutoencoderParams<Scalar>> models;  // aligned with report.curves

  const AutoencoderParams<Scalar>& selected() const;
};

namespace detail {

template <typename Scalar>
Matrix<Scalar> activate(const Matrix<Scalar>& pre, Activation a) {
  switch (a) {
    case Activation::relu:
      return pre.cwiseMax(Scalar(0));
    case Activation::sigmoid:
      return (Scalar(1) + (-pre.array()).exp()).inverse().matrix();
    case Activation::identity:
      break;
  }
  return pre;
}

// Derivative expressed through the pre-activation and the activation output.
template <typename Scalar>
Matrix<Scalar> activation_grad(const Matrix<Scalar>& pre, const Matrix<Scalar>& out,
                               Activation a) {
  switch (a) {
    case Activation::relu:
      return (pre.array() > Scalar(0)).template cast<Scalar>().matrix();
    case Activation::sigmoid:
      return (out.array() * (Scalar(1) - out.array())).matrix();
    case Activation::identity:
      break;
  }
  return Matrix<Scalar>::Ones(pre.rows(), pre.cols());
}

template <typename Scalar>
Matrix<Scalar> affine(const DenseLayer<Scalar>& layer, const Matrix<Scalar>& x) {
  Matrix<Scalar> pre = x * layer.weight.transpose();
  pre.rowwise() += layer.bias.transpose();
  return pre;
}

template <typename Scalar>
Matrix<Scalar> run_layers(const std::vector<DenseLayer<Scalar>>& layers, Matrix<Scalar> x) {
  for (const auto& layer : layers) x = activate(affine(layer, x), layer.activation);
  return x;
}

template <typename Scalar>
DenseLayer<Scalar> glorot_layer(int in, int out, Activation a, std::mt19937_64& gen) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  DenseLayer<Scalar> layer;
  layer.weight.resize(out, in);
  for (int i = 0; i < out; ++i) {
    for (int j = 0; j < in; ++j) layer.weight(i, j) = static_cast<Scalar>(dist(gen));
  }
  layer.bias = Vector<Scalar>::Zero(out);
  layer.activation = a;
  return layer;
}

template <typename Scalar>
void check_shape(const Eigen::Index cols, const Eigen::Index expected, const char* what) {
  if (cols != expected) {
    throw NumericError(std::string(what) + ": expected " + std::to_string(expected) +
                       " columns, got " + std::to_string(cols));
  }
}

}  // namespace detail

/// Encoder d -> ceil((d+k)/2) -> k and the mirrored decoder, relu hidden
/// layers, identity outputs, Glorot-uniform weights and zero biases.
template <typename Scalar = double>
AutoencoderParams<Scalar> init_autoencoder(int input_dim, Ratio ratio, std::uint64_t seed) {
  const int k = ratio.latent_dim(input_dim);
  if (k < 1) {
    throw ConfigError("ratio " + ratio.str() + " leaves no latent units for input dimension " +
                      std::to_string(input_dim));
  }
  const int mid = (input_dim + k + 1) / 2;
  std::mt19937_64 gen(seed);
  AutoencoderParams<Scalar> p;
  p.input_dim = input_dim;
  p.latent_dim = k;
  p.ratio = ratio;
  p.seed = seed;
  p.encoder.push_back(detail::glorot_layer<Scalar>(input_dim, mid, Activation::relu, gen));
  p.encoder.push_back(detail::glorot_layer<Scalar>(mid, k, Activation::identity, gen));
  p.decoder.push_back(detail::glorot_layer<Scalar>(k, mid, Activation::relu, gen));
  p.decoder.push_back(detail::glorot_layer<Scalar>(mid, input_dim, Activation::identity, gen));
  return p;
}

template <typename Scalar, typename Derived>
Matrix<Scalar> standardize_input(const AutoencoderParams<Scalar>& m,
                                 const Eigen::MatrixBase<Derived>& e) {
  Matrix<Scalar> x = e.template cast<Scalar>();
  if (m.input_mean.size() == 0) return x;
  x.rowwise() -= m.input_mean.transpose();
  x.array().rowwise() /= m.input_scale.transpose().array();
  return x;
}

/// Z = f(E), rows are samples.
template <typename Scalar, typename Derived>
Matrix<Scalar> encode(const AutoencoderParams<Scalar>& m, const Eigen::MatrixBase<Derived>& e) {
  detail::check_shape<Scalar>(e.cols(), m.input_dim, "encode");
  if (!e.allFinite()) throw NumericError("encode: input contains non-finite values");
  return detail::run_layers(m.encoder, standardize_input(m, e));
}

/// Reconstruction g(Z), in the standardized space when standardization is on.
template <typename Scalar, typename Derived>
Matrix<Scalar> decode(const AutoencoderParams<Scalar>& m, const Eigen::MatrixBase<Derived>& z) {
  detail::check_shape<Scalar>(z.cols(), m.latent_dim, "decode");
  if (!z.allFinite()) throw NumericError("decode: input contains non-finite values");
  return detail::run_layers(m.decoder, Matrix<Scalar>(z.template cast<Scalar>()));
}

/// Mean of squared differences over all entries.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar mse_loss(const Eigen::MatrixBase<DerivedA>& e,
                                   const Eigen::MatrixBase<DerivedB>& e_hat) {
  if (e.rows() != e_hat.rows() || e.cols() != e_hat.cols()) {
    throw NumericError("mse_loss: shape mismatch");
  }
  using Scalar = typename DerivedA::Scalar;
  if (e.size() == 0) return Scalar(0);
  return (e - e_hat).squaredNorm() / static_cast<Scalar>(e.size());
}

/// Parameter gradients for encoder layers followed by decoder layers.
template <typename Scalar>
struct Gradients {
  std::vector<Matrix<Scalar>> weight;
  std::vector<Vector<Scalar>> bias;
};

/// Reconstruction loss of `x` (already standardized) and its gradient with
/// respect to every weight and bias, by backpropagation.
template <typename Scalar>
std::pair<Scalar, Gradients<Scalar>> loss_and_gradients(const AutoencoderParams<Scalar>& m,
                                                        const Matrix<Scalar>& x) {
  std::vector<const DenseLayer<Scalar>*> layers;
  for (const auto& l : m.encoder) layers.push_back(&l);
  for (const auto& l : m.decoder) layers.push_back(&l);

  std::vector<Matrix<Scalar>> inputs;
  std::vector<Matrix<Scalar>> pres;
  std::vector<Matrix<Scalar>> outs;
  Matrix<Scalar> a = x;
  for (const auto* layer : layers) {
    inputs.push_back(a);
    pres.push_back(detail::affine(*layer, a));
    outs.push_back(detail::activate(pres.back(), layer->activation));
    a = outs.back();
  }
  const Scalar loss = mse_loss(x, a);

  Gradients<Scalar> g;
  g.weight.resize(layers.size());
  g.bias.resize(layers.size());
  Matrix<Scalar> upstream = (Scalar(2) / static_cast<Scalar>(x.size())) * (a - x);
  for (std::size_t idx = layers.size(); idx-- > 0;) {
    const Matrix<Scalar> delta = upstream.cwiseProduct(
        detail::activation_grad(pres[idx], outs[idx], layers[idx]->activation));
    g.weight[idx] = delta.transpose() * inputs[idx];
    g.bias[idx] = delta.colwise().sum().transpose();
    if (idx > 0) upstream = delta * layers[idx]->weight;
  }
  return {loss, std::move(g)};
}

template <typename Scalar>
void apply_gradients(AutoencoderParams<Scalar>& m, const Gradients<Scalar>& g, Scalar lr) {
  std::size_t idx = 0;
  for (auto* side : {&m.encoder, &m.decoder}) {
    for (auto& layer : *side) {
      layer.weight -= lr * g.weight[idx];
      layer.bias -= lr * g.bias[idx];
      ++idx;
    }
  }
}

/// Trains a single model in place on the given (standardized) rows.
/// Returns the per-epoch curve; throws NumericError if the loss diverges.
template <typename Scalar>
RatioCurve train_one(AutoencoderParams<Scalar>& m, const Matrix<Scalar>& train_rows,
                     const Matrix<Scalar>& val_rows, const TrainingConfig& cfg) {
  RatioCurve curve;
  curve.ratio = m.ratio;
  curve.latent_dim = m.latent_dim;
  auto reconstruction_loss = [&](const Matrix<Scalar>& rows) {
    return static_cast<double>(
        mse_loss(rows, detail::run_layers(m.decoder, detail::run_layers(m.encoder, rows))));
  };
  curve.initial_train_loss = reconstruction_loss(train_rows);

  const Eigen::Index n = train_rows.rows();
  const Eigen::Index bs = std::min<Eigen::Index>(cfg.batch_size, n);
  const Scalar lr = static_cast<Scalar>(cfg.learning_rate);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (Eigen::Index start = 0; start < n; start += bs) {
      const Eigen::Index len = std::min(bs, n - start);
      const Matrix<Scalar> batch = train_rows.middleRows(start, len);
      auto [loss, grads] = loss_and_gradients(m, batch);
      if (!std::isfinite(static_cast<double>(loss))) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch + 1) +
                           " for ratio " + m.ratio.str());
      }
      apply_gradients(m, grads, lr);
    }
    const double tl = reconstruction_loss(train_rows);
    const double vl = reconstruction_loss(val_rows);
    if (!std::isfinite(tl) || !std::isfinite(vl)) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch + 1) +
                         " for ratio " + m.ratio.str());
    }
    curve.train_loss.push_back(tl);
    curve.val_loss.push_back(vl);
  }
  curve.final_val_loss = reconstruction_loss(val_rows);
  return curve;
}

/// Ratio with the smallest final validation loss; exact ties go to the
/// smaller latent dimension.
Ratio select_best_ratio(const TrainingReport& report);

/// Row order after the single seeded shuffle; the last
/// ceil(n * val_fraction) entries are the validation split.
std::vector<Eigen::Index> shuffled_rows(Eigen::Index n, std::uint64_t seed);

/// One model per configured ratio, trained independently (concurrently)
/// on the same seeded split.
template <typename Scalar = double, typename Derived>
TrainingResult<Scalar> train(const Eigen::MatrixBase<Derived>& e, const TrainingConfig& cfg) {
  const Eigen::Index n = e.rows();
  const auto d = static_cast<int>(e.cols());
  if (n < 4 || d < 4) throw ConfigError("train: need at least 4 rows and 4 columns");
  if (!e.allFinite()) throw NumericError("train: input contains non-finite values");
  cfg.validate(n);

  const auto order = shuffled_rows(n, cfg.seed);
  const auto n_val = static_cast<Eigen::Index>(std::ceil(static_cast<double>(n) * cfg.val_fraction));
  const Eigen::Index n_train = n - n_val;
  Matrix<Scalar> shuffled(n, d);
  for (Eigen::Index i = 0; i < n; ++i) shuffled.row(i) = e.row(order[static_cast<std::size_t>(i)]).template cast<Scalar>();

  Vector<Scalar> mean;
  Vector<Scalar> scale;
  if (cfg.standardize) {
    const Matrix<Scalar> tr = shuffled.topRows(n_train);
    mean = tr.colwise().mean().transpose();
    scale = ((tr.rowwise() - mean.transpose()).array().square().colwise().sum() /
             static_cast<Scalar>(n_train))
                .sqrt()
                .transpose();
    for (Eigen::Index j = 0; j < scale.size(); ++j) {
      if (!(scale[j] > Scalar(0))) scale[j] = Scalar(1);
    }
  }

  std::vector<std::future<std::pair<AutoencoderParams<Scalar>, RatioCurve>>> jobs;
  for (std::size_t r = 0; r < cfg.ratios.size(); ++r) {
    jobs.push_back(std::async(std::launch::async, [&, r] {
      auto m = init_autoencoder<Scalar>(d, cfg.ratios[r], cfg.seed + r);
      m.input_mean = mean;
      m.input_scale = scale;
      const Matrix<Scalar> x = standardize_input(m, shuffled);
      const Matrix<Scalar> train_rows = x.topRows(n_train);
      const Matrix<Scalar> val_rows = x.bottomRows(n_val);
      RatioCurve curve = train_one(m, train_rows, val_rows, cfg);
      return std::make_pair(std::move(m), std::move(curve));
    }));
  }
  TrainingResult<Scalar> result;
  for (auto& job : jobs) {
    auto [m, curve] = job.get();
    result.models.push_back(std::move(m));
    result.report.curves.push_back(std::move(curve));
  }
  result.report.selected_ratio = select_best_ratio(result.report);
  for (const auto& c : result.report.curves) {
    if (c.ratio == result.report.selected_ratio) result.report.best_val_loss = c.final_val_loss;
  }
  return result;
}

template <typename Scalar>
const AutoencoderParams<Scalar>& TrainingResult<Scalar>::selected() const {
  for (std::size_t i = 0; i < models.size(); ++i) {
    if (report.curves[i].ratio == report.selected_ratio) return models[i];
  }
  throw Error("training result has no model for the selected ratio");
}

template <typename Scalar>
void AutoencoderParams<Scalar>::validate() const {
  if (latent_dim < 1 || latent_dim >= input_dim) {
    throw NumericError("autoencoder: latent dim must be in [1, input dim)");
  }
  auto chain = [](const std::vector<DenseLayer<Scalar>>& layers, Eigen::Index from,
                  Eigen::Index to, const char* side) {
    if (layers.empty()) throw NumericError(std::string(side) + " has no layers");
    Eigen::Index cur = from;
    for (const auto& l : layers) {
      if (l.in_dim() != cur || l.bias.size() != l.out_dim()) {
        throw NumericError(std::string(side) + " layer shapes do not chain");
      }
      if (!l.weight.allFinite() || !l.bias.allFinite()) {
        throw NumericError(std::string(side) + " has non-finite parameters");
      }
      cur = l.out_dim();
    }
    if (cur != to) throw NumericError(std::string(side) + " output has the wrong width");
  };
  chain(encoder, input_dim, latent_dim, "encoder");
  chain(decoder, latent_dim, input_dim, "decoder");
}

template <typename Scalar>
template <typename Other>
AutoencoderParams<Other> AutoencoderParams<Scalar>::cast() const {
  AutoencoderParams<Other> out;
  out.input_dim = input_dim;
  out.latent_dim = latent_dim;
  out.ratio = ratio;
  out.seed = seed;
  auto conv = [](const std::vector<DenseLayer<Scalar>>& src) {
    std::vector<DenseLayer<Other>> dst;
    for (const auto& l : src) {
      dst.push_back({l.weight.template cast<Other>(), l.bias.template cast<Other>(), l.activation});
    }
    return dst;
  };
  out.encoder = conv(encoder);
  out.decoder = conv(decoder);
  out.input_mean = input_mean.template cast<Other>();
  out.input_scale = input_scale.template cast<Other>();
  return out;
}

/// `dir/meta.json` plus one float32 blob per weight and bias.
void save_autoencoder(const std::filesystem::path& dir, const AutoencoderParams<double>& m);
AutoencoderParams<double> load_autoencoder(const std::filesystem::path& dir);

}  // namespace beyondwords
