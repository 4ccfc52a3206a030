#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <numeric>
#include <random>

#include "beyondwords/sampling.hpp"
#include "oracles.hpp"

using namespace beyondwords;

namespace {

Corpus corpus_of(std::size_t n) {
  Corpus c;
  for (std::size_t i = 0; i < n; ++i) {
    Post p;
    char id[16];
    std::snprintf(id, sizeof id, "p%03zu", i);
    p.id = id;
    p.clean_text = "text " + std::to_string(i);
    p.raw_text = p.clean_text;
    c.posts.push_back(p);
  }
  return c;
}

}  // namespace

TEST_CASE("cochran sample sizes") {
  CHECK(cochran_n(1.64, 0.5, 0.1) == 68);
  CHECK(cochran_n(1.96, 0.5, 0.05) == 385);
  // 2^2 * 0.25 / 0.5^2 = 4 exactly; no spurious round-up
  CHECK(cochran_n(2.0, 0.5, 0.5) == 4);
  CHECK(SamplePlan{}.n_target == 68);
  CHECK(SamplePlan::make(1.64, 0.5, 0.1).n_target == 68);

  for (double p : {0.05, 0.2, 0.3, 0.45, 0.55, 0.9}) CHECK(cochran_n(1.64, 0.5, 0.1) >= cochran_n(1.64, p, 0.1));
  int prev = 0;
  for (double z : {1.0, 1.28, 1.64, 1.96, 2.58}) {
    const int n = cochran_n(z, 0.5, 0.05);
    CHECK(n >= prev);
    prev = n;
  }
  prev = std::numeric_limits<int>::max();
  for (double e : {0.01, 0.02, 0.05, 0.1, 0.2}) {
    const int n = cochran_n(1.96, 0.5, e);
    CHECK(n <= prev);
    prev = n;
  }
  CHECK_THROWS_AS(cochran_n(0, 0.5, 0.1), ConfigError);
  CHECK_THROWS_AS(cochran_n(1.64, 1.0, 0.1), ConfigError);
  CHECK_THROWS_AS(cochran_n(1.64, 0.5, 0.0), ConfigError);
}

TEST_CASE("small cluster returns every member, sorted") {
  const Corpus c = corpus_of(5);
  const std::vector<int> labels{0, 1, 0, 1, 0};
  const std::vector<double> sil{0.2, 0.9, 0.7, 0.1, 0.5};
  const auto s = select_representatives(0, labels, sil, c, SamplePlan{});
  REQUIRE(s.members.size() == 3);
  CHECK(s.members[0].post_id == "p002");
  CHECK(s.members[1].post_id == "p004");
  CHECK(s.members[2].post_id == "p000");
  CHECK(s.members[0].clean_text == "text 2");
}

TEST_CASE("ties are broken by post id") {
  Corpus c = corpus_of(3);
  c.posts[0].id = "zeta";
  c.posts[1].id = "alpha";
  c.posts[2].id = "mid";
  const auto s = select_representatives(0, {0, 0, 0}, std::vector<double>{0.5, 0.5, 0.5}, c, SamplePlan{});
  CHECK(s.members[0].post_id == "alpha");
  CHECK(s.members[1].post_id == "mid");
  CHECK(s.members[2].post_id == "zeta");
}

TEST_CASE("planted blobs: top five match the silhouette oracle ranking") {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> nd;
  const int per = 20;
  MatrixXd x(3 * per, 3);
  std::vector<int> labels;
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < per; ++i) {
      for (int j = 0; j < 3; ++j) x(c * per + i, j) = nd(gen);
      x(c * per + i, c) += 8.0;
      labels.push_back(c);
    }
  }
  const Corpus corpus = corpus_of(static_cast<std::size_t>(3 * per));
  SamplePlan plan;
  plan.n_target = 5;
  const auto ref = oracle::silhouette(oracle::from_eigen(x), labels);
  for (int cluster = 0; cluster < 3; ++cluster) {
    const auto s = select_representatives(cluster, labels, x, corpus, plan);
    REQUIRE(s.members.size() == 5);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cluster) idx.push_back(i);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return ref[a] > ref[b]; });
    for (std::size_t r = 0; r < 5; ++r) {
      CHECK(s.members[r].post_id == corpus.posts[idx[r]].id);
      CHECK(std::abs(s.members[r].silhouette - ref[idx[r]]) < 1e-9);
    }
    double max_unselected = -2;
    for (std::size_t r = 5; r < idx.size(); ++r) max_unselected = std::max(max_unselected, ref[idx[r]]);
    CHECK(s.members.back().silhouette >= max_unselected);
  }
}

TEST_CASE("selection properties on random labelings") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 gen(seed);
    const std::size_t n = 10 + gen() % 60;
    std::vector<int> labels(n);
    std::vector<double> sil(n);
    std::uniform_real_distribution<double> u(-1, 1);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = i < 3 ? static_cast<int>(i) : static_cast<int>(gen() % 3);
      // coarse values force ties
      sil[i] = std::round(u(gen) * 4) / 4;
    }
    const Corpus c = corpus_of(n);
    SamplePlan plan;
    plan.n_target = 1 + static_cast<int>(gen() % 10);
    for (int cluster = 0; cluster < 3; ++cluster) {
      const auto s = select_representatives(cluster, labels, sil, c, plan);
      const auto size = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), cluster));
      CHECK(s.members.size() == std::min(size, static_cast<std::size_t>(plan.n_target)));
      for (std::size_t r = 1; r < s.members.size(); ++r) {
        const auto& a = s.members[r - 1];
        const auto& b = s.members[r];
        CHECK((a.silhouette > b.silhouette || (a.silhouette == b.silhouette && a.post_id < b.post_id)));
      }
      std::vector<std::string> chosen;
      for (const auto& m : s.members) chosen.push_back(m.post_id);
      for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] != cluster) {
          CHECK(std::find(chosen.begin(), chosen.end(), c.posts[i].id) == chosen.end());
        } else if (std::find(chosen.begin(), chosen.end(), c.posts[i].id) == chosen.end()) {
          CHECK(sil[i] <= s.members.back().silhouette);
        }
      }
      const auto again = select_representatives(cluster, labels, sil, c, plan);
      CHECK(to_json(again) == to_json(s));
    }
  }
}

TEST_CASE("errors and JSON round trip") {
  const Corpus c = corpus_of(4);
  CHECK_THROWS_AS(select_representatives(2, {0, 0, 1, 1}, std::vector<double>{0, 0, 0, 0}, c, SamplePlan{}), ConfigError);
  MatrixXd x(4, 1);
  x << 0, 1, 2, 3;
  CHECK_THROWS(select_representatives(0, {0, 0, 0, 0}, x, c, SamplePlan{}));

  const auto s = select_representatives(1, {0, 0, 1, 1}, std::vector<double>{0.1, 0.2, 0.3, 0.4}, c, SamplePlan{});
  const auto back = sample_from_json(to_json(s));
  CHECK(to_json(back) == to_json(s));
  CHECK(back.plan.n_target == 68);
  CHECK(to_json(s)["members"][0]["post_id"] == "p003");
}
