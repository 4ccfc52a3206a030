#include "beyondwords/autoencoder.hpp"

#include "json.hpp"

#include "beyondwords/matrix_io.hpp"

namespace beyondwords {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::relu:
      return "relu";
    case Activation::sigmoid:
      return "sigmoid";
    case Activation::identity:
      break;
  }
  return "identity";
}

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "identity") return Activation::identity;
  throw ParseError("unknown activation \"" + name + "\"");
}

Ratio parse_ratio(const std::string& s) {
  for (const Ratio r : {Ratio{1, 2}, Ratio{1, 3}, Ratio{1, 4}}) {
    if (s == r.str() || s == r.label()) return r;
  }
  throw ConfigError("unsupported compression ratio \"" + s + "\" (expected 1/2, 1/3 or 1/4)");
}

void TrainingConfig::validate(Eigen::Index n) const {
  if (epochs < 0) throw ConfigError("epochs must be non-negative");
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be positive");
  if (!(val_fraction > 0 && val_fraction < 1)) throw ConfigError("val_fraction must be in (0,1)");
  const auto n_val = static_cast<Eigen::Index>(std::ceil(static_cast<double>(n) * val_fraction));
  if (n_val < 1 || n - n_val < 1) {
    throw ConfigError("val_fraction must leave at least one row on each side of the split");
  }
  if (ratios.empty()) throw ConfigError("at least one compression ratio is required");
  for (const auto& r : ratios) parse_ratio(r.str());
}

Ratio select_best_ratio(const TrainingReport& report) {
  if (report.curves.empty()) throw ConfigError("select_best_ratio: no trained ratios");
  const RatioCurve* best = &report.curves.front();
  for (const auto& c : report.curves) {
    if (c.final_val_loss < best->final_val_loss ||
        (c.final_val_loss == best->final_val_loss &&
         (c.latent_dim < best->latent_dim ||
          (c.latent_dim == best->latent_dim && c.ratio.value() < best->ratio.value())))) {
      best = &c;
    }
  }
  return best->ratio;
}

std::vector<Eigen::Index> shuffled_rows(Eigen::Index n, std::uint64_t seed) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 gen(seed);
  std::shuffle(order.begin(), order.end(), gen);
  return order;
}

namespace {

json layers_meta(const std::vector<DenseLayer<double>>& layers, const std::string& side,
                 const fs::path& dir) {
  json arr = json::array();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string w = side + "_" + std::to_string(i) + "_weight.bin";
    const std::string b = side + "_" + std::to_string(i) + "_bias.bin";
    write_f32(dir / w, layers[i].weight);
    write_f32(dir / b, layers[i].bias.transpose());
    arr.push_back({{"in", layers[i].in_dim()},
                   {"out", layers[i].out_dim()},
                   {"activation", activation_name(layers[i].activation)},
                   {"weight", w},
                   {"bias", b}});
  }
  return arr;
}

std::vector<DenseLayer<double>> layers_from_meta(const json& arr, const fs::path& dir) {
  std::vector<DenseLayer<double>> layers;
  for (const auto& l : arr) {
    DenseLayer<double> layer;
    const auto in = l.at("in").get<Eigen::Index>();
    const auto out = l.at("out").get<Eigen::Index>();
    layer.weight = read_f32(dir / l.at("weight").get<std::string>(), out, in);
    layer.bias = read_f32(dir / l.at("bias").get<std::string>(), 1, out).transpose();
    layer.activation = parse_activation(l.at("activation").get<std::string>());
    layers.push_back(std::move(layer));
  }
  return layers;
}

}  // namespace

void save_autoencoder(const fs::path& dir, const AutoencoderParams<double>& m) {
  fs::create_directories(dir);
  json meta{{"input_dim", m.input_dim},
            {"latent_dim", m.latent_dim},
            {"ratio", m.ratio.str()},
            {"seed", m.seed},
            {"dtype", "f32"},
            {"layout", "row-major"},
            {"endianness", "little"}};
  meta["encoder"] = layers_meta(m.encoder, "encoder", dir);
  meta["decoder"] = layers_meta(m.decoder, "decoder", dir);
  if (m.input_mean.size() > 0) {
    write_f32(dir / "input_mean.bin", m.input_mean.transpose());
    write_f32(dir / "input_scale.bin", m.input_scale.transpose());
    meta["standardized"] = true;
  } else {
    meta["standardized"] = false;
  }
  write_json(dir / "meta.json", meta);
}

AutoencoderParams<double> load_autoencoder(const fs::path& dir) {
  const json meta = read_json(dir / "meta.json");
  AutoencoderParams<double> m;
  m.input_dim = meta.at("input_dim").get<int>();
  m.latent_dim = meta.at("latent_dim").get<int>();
  m.ratio = parse_ratio(meta.at("ratio").get<std::string>());
  m.seed = meta.at("seed").get<std::uint64_t>();
  m.encoder = layers_from_meta(meta.at("encoder"), dir);
  m.decoder = layers_from_meta(meta.at("decoder"), dir);
  if (meta.value("standardized", false)) {
    m.input_mean = read_f32(dir / "input_mean.bin", 1, m.input_dim).transpose();
    m.input_scale = read_f32(dir / "input_scale.bin", 1, m.input_dim).transpose();
  }
  m.validate();
  return m;
}

}  // namespace beyondwords
