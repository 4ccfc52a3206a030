#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <random>

#include "beyondwords/autoencoder.hpp"
#include "gradient_check.hpp"
#include "oracles.hpp"

using namespace beyondwords;

namespace {

std::vector<oracle::Layer> to_oracle(const std::vector<DenseLayer<double>>& layers) {
  std::vector<oracle::Layer> out;
  for (const auto& l : layers) {
    oracle::Layer o;
    o.w = oracle::from_eigen(l.weight);
    o.b.assign(l.bias.data(), l.bias.data() + l.bias.size());
    o.act = l.activation == Activation::relu ? 0 : l.activation == Activation::sigmoid ? 1 : 2;
    out.push_back(o);
  }
  return out;
}

AutoencoderParams<double> identity_model(int d) {
  AutoencoderParams<double> m;
  m.input_dim = d;
  m.latent_dim = d;
  m.encoder.push_back({MatrixXd::Identity(d, d), VectorXd::Zero(d), Activation::identity});
  m.decoder.push_back({MatrixXd::Identity(d, d), VectorXd::Zero(d), Activation::identity});
  return m;
}

MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = nd(gen);
  return m;
}

}  // namespace

TEST_CASE("init shapes follow d -> ceil((d+k)/2) -> k") {
  const auto a = init_autoencoder(8, {1, 2}, 1);
  CHECK(a.latent_dim == 4);
  REQUIRE(a.encoder.size() == 2);
  CHECK(a.encoder[0].in_dim() == 8);
  CHECK(a.encoder[0].out_dim() == 6);
  CHECK(a.encoder[1].out_dim() == 4);
  CHECK(a.decoder[0].in_dim() == 4);
  CHECK(a.decoder[0].out_dim() == 6);
  CHECK(a.decoder[1].out_dim() == 8);
  CHECK(a.encoder[0].activation == Activation::relu);
  CHECK(a.encoder[1].activation == Activation::identity);
  CHECK(a.decoder[1].activation == Activation::identity);
  CHECK(a.encoder[0].bias.isZero());
  CHECK_NOTHROW(a.validate());

  const auto b = init_autoencoder(9, {1, 3}, 1);
  CHECK(b.latent_dim == 3);
  CHECK(b.encoder[0].out_dim() == 6);
  CHECK(b.encoder[1].out_dim() == 3);

  CHECK_THROWS_AS(init_autoencoder(3, {1, 4}, 1), ConfigError);
}

TEST_CASE("init is deterministic and within the Glorot bound") {
  const auto a = init_autoencoder(12, {1, 3}, 42);
  const auto b = init_autoencoder(12, {1, 3}, 42);
  const auto c = init_autoencoder(12, {1, 3}, 43);
  for (std::size_t i = 0; i < a.encoder.size(); ++i) {
    CHECK((a.encoder[i].weight.array() == b.encoder[i].weight.array()).all());
    CHECK((a.decoder[i].weight.array() == b.decoder[i].weight.array()).all());
  }
  CHECK_FALSE((a.encoder[0].weight.array() == c.encoder[0].weight.array()).all());
  const double limit = std::sqrt(6.0 / (12 + 8));
  CHECK(a.encoder[0].weight.cwiseAbs().maxCoeff() <= limit);
}

TEST_CASE("encode and decode special cases") {
  auto zero = init_autoencoder(8, {1, 2}, 3);
  for (auto* side : {&zero.encoder, &zero.decoder}) {
    for (auto& l : *side) {
      l.weight.setZero();
      l.bias.setZero();
    }
  }
  const MatrixXd e = random_matrix(5, 8, 9);
  CHECK(encode(zero, e).isZero());
  CHECK(decode(zero, MatrixXd::Ones(3, 4)).isZero());

  const auto id = identity_model(6);
  const MatrixXd x = random_matrix(4, 6, 10);
  CHECK((encode(id, x).array() == x.array()).all());
  CHECK((decode(id, x).array() == x.array()).all());

  CHECK_THROWS_AS(encode(zero, MatrixXd::Ones(2, 7)), NumericError);
  CHECK_THROWS_AS(decode(zero, MatrixXd::Ones(2, 8)), NumericError);
  MatrixXd bad = MatrixXd::Ones(2, 8);
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(encode(zero, bad), NumericError);
}

TEST_CASE("forward pass matches the straight-line oracle") {
  auto m = init_autoencoder(8, {1, 2}, 77);
  std::mt19937_64 gen(5);
  std::normal_distribution<double> nd(0, 0.3);
  for (auto* side : {&m.encoder, &m.decoder}) {
    for (auto& l : *side)
      for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias[i] = nd(gen);
  }
  const MatrixXd e = MatrixXd::Ones(2, 8);
  const MatrixXd z = encode(m, e);
  const MatrixXd r = decode(m, z);
  const auto enc = to_oracle(m.encoder);
  const auto dec = to_oracle(m.decoder);
  for (Eigen::Index i = 0; i < 2; ++i) {
    const std::vector<double> row(8, 1.0);
    const auto oz = oracle::forward_row(enc, row);
    const auto orr = oracle::forward_row(dec, oz);
    for (Eigen::Index j = 0; j < 4; ++j) CHECK(z(i, j) == doctest::Approx(oz[j]).epsilon(1e-12));
    for (Eigen::Index j = 0; j < 8; ++j) CHECK(r(i, j) == doctest::Approx(orr[j]).epsilon(1e-12));
  }
  // shape round trip
  const MatrixXd big = random_matrix(7, 8, 8);
  CHECK(decode(m, encode(m, big)).rows() == 7);
  CHECK(decode(m, encode(m, big)).cols() == 8);
}

TEST_CASE("mse_loss") {
  Eigen::RowVector3d a(1, 2, 3);
  CHECK(mse_loss(a, a) == 0.0);
  Eigen::RowVector2d z(0, 0), w(3, 4);
  CHECK(mse_loss(z, w) == 12.5);
  const MatrixXd x = random_matrix(4, 5, 1);
  const MatrixXd y = random_matrix(4, 5, 2);
  CHECK(std::abs(mse_loss(x, y) - oracle::mse(oracle::from_eigen(x), oracle::from_eigen(y))) < 1e-12);
  CHECK_THROWS_AS(mse_loss(x, MatrixXd(y.leftCols(4))), NumericError);
}

TEST_CASE("analytic gradients match central differences") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const double err = gradcheck::max_relative_error(seed);
    INFO("seed " << seed);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("training on identical rows drives the loss to zero") {
  MatrixXd e(12, 8);
  for (Eigen::Index i = 0; i < e.rows(); ++i) e.row(i) << 0.5, -1.0, 2.0, 0.25, 1.5, -0.75, 0.0, 1.0;
  TrainingConfig cfg;
  cfg.epochs = 400;
  cfg.batch_size = 4;
  cfg.learning_rate = 0.05;
  cfg.ratios = {{1, 2}};
  const auto res = train(e, cfg);
  const auto& curve = res.report.curves.at(0);
  REQUIRE(curve.train_loss.size() == 400);
  CHECK(curve.train_loss.back() < 1e-3 * curve.initial_train_loss);
}

TEST_CASE("zero epochs leaves the initialization") {
  const MatrixXd e = random_matrix(10, 8, 3);
  TrainingConfig cfg;
  cfg.epochs = 0;
  cfg.seed = 11;
  cfg.ratios = {{1, 2}, {1, 4}};
  const auto res = train(e, cfg);
  for (std::size_t r = 0; r < res.models.size(); ++r) {
    CHECK(res.report.curves[r].train_loss.empty());
    CHECK(res.report.curves[r].val_loss.empty());
    const auto init = init_autoencoder(8, cfg.ratios[r], cfg.seed + r);
    CHECK((res.models[r].encoder[0].weight.array() == init.encoder[0].weight.array()).all());
  }
}

TEST_CASE("training is deterministic and selection follows validation loss") {
  const MatrixXd e = random_matrix(40, 12, 4);
  TrainingConfig cfg;
  cfg.epochs = 15;
  cfg.batch_size = 8;
  cfg.learning_rate = 0.01;
  cfg.seed = 3;
  const auto a = train(e, cfg);
  const auto b = train(e, cfg);
  REQUIRE(a.report.curves.size() == 3);
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(a.report.curves[r].train_loss == b.report.curves[r].train_loss);
    CHECK(a.report.curves[r].val_loss == b.report.curves[r].val_loss);
    CHECK(a.report.curves[r].train_loss.size() == 15);
  }
  CHECK(a.report.selected_ratio == b.report.selected_ratio);
  bool listed = false;
  double min_val = 1e300;
  for (const auto& c : a.report.curves) {
    listed = listed || c.ratio == a.report.selected_ratio;
    min_val = std::min(min_val, c.final_val_loss);
  }
  CHECK(listed);
  CHECK(a.report.best_val_loss == min_val);
  CHECK(a.selected().ratio == a.report.selected_ratio);
}

TEST_CASE("loss is non-increasing over the first epochs at a small step") {
  const MatrixXd e = random_matrix(8, 8, 21);
  auto m = init_autoencoder(8, {1, 2}, 5);
  TrainingConfig cfg;
  cfg.epochs = 10;
  cfg.batch_size = 8;
  cfg.learning_rate = 1e-3;
  const MatrixXd val = e.topRows(2);
  const auto curve = train_one(m, e, val, cfg);
  double prev = curve.initial_train_loss;
  for (double l : curve.train_loss) {
    CHECK(l <= prev);
    prev = l;
  }
}

TEST_CASE("select_best_ratio") {
  auto report_of = [](std::vector<std::pair<Ratio, double>> v) {
    TrainingReport r;
    for (auto [ratio, loss] : v) {
      RatioCurve c;
      c.ratio = ratio;
      c.latent_dim = ratio.latent_dim(24);
      c.final_val_loss = loss;
      r.curves.push_back(c);
    }
    return r;
  };
  CHECK(select_best_ratio(report_of({{{1, 2}, 0.10}, {{1, 3}, 0.05}, {{1, 4}, 0.20}})) == Ratio{1, 3});
  CHECK(select_best_ratio(report_of({{{1, 2}, 0.3}})) == Ratio{1, 2});
  CHECK(select_best_ratio(report_of({{{1, 2}, 0.1}, {{1, 4}, 0.1}})) == Ratio{1, 4});
  CHECK_THROWS_AS(select_best_ratio(TrainingReport{}), ConfigError);
}

TEST_CASE("config validation") {
  TrainingConfig cfg;
  CHECK_NOTHROW(cfg.validate(10));
  cfg.val_fraction = 0.99;
  CHECK_THROWS_AS(cfg.validate(10), ConfigError);
  cfg.val_fraction = 0.2;
  cfg.ratios.clear();
  CHECK_THROWS_AS(cfg.validate(10), ConfigError);
  CHECK_THROWS_AS(parse_ratio("2/3"), ConfigError);
  CHECK(parse_ratio("1/4") == Ratio{1, 4});
  CHECK_THROWS_AS(train(MatrixXd::Ones(3, 8), TrainingConfig{}), ConfigError);
}

TEST_CASE("divergence is reported with epoch and ratio") {
  const MatrixXd e = 100.0 * random_matrix(16, 8, 6);
  TrainingConfig cfg;
  cfg.epochs = 50;
  cfg.learning_rate = 50.0;
  cfg.ratios = {{1, 2}};
  try {
    train(e, cfg);
    FAIL("expected divergence");
  } catch (const NumericError& err) {
    CHECK(std::string(err.what()).find("ratio 1/2") != std::string::npos);
    CHECK(std::string(err.what()).find("epoch") != std::string::npos);
  }
}

TEST_CASE("parameters persist through the float32 layout") {
  auto m = init_autoencoder(10, {1, 2}, 8);
  const auto dir = std::filesystem::temp_directory_path() / "bw_test_ae";
  std::filesystem::remove_all(dir);
  save_autoencoder(dir, m);
  const auto back = load_autoencoder(dir);
  CHECK(back.ratio == m.ratio);
  CHECK(back.latent_dim == 5);
  for (std::size_t i = 0; i < m.encoder.size(); ++i) {
    CHECK((back.encoder[i].weight - m.encoder[i].weight).cwiseAbs().maxCoeff() < 1e-6);
  }
  const MatrixXd e = random_matrix(3, 10, 1);
  CHECK((encode(back, e) - encode(m, e)).cwiseAbs().maxCoeff() < 1e-5);
}
