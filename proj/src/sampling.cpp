#include "beyondwords/sampling.hpp"

#include <algorithm>
#include <cmath>

#include "beyondwords/errors.hpp"

namespace beyondwords {

using json = nlohmann::json;

int cochran_n(double z, double p, double e) {
  if (!(z > 0)) throw ConfigError("cochran_n: z must be positive");
  if (!(p > 0 && p < 1)) throw ConfigError("cochran_n: p must be in (0,1)");
  if (!(e > 0 && e < 1)) throw ConfigError("cochran_n: e must be in (0,1)");
  const double n = z * z * p * (1 - p) / (e * e);
  const double nearest = std::round(n);
  if (std::abs(n - nearest) <= 1e-9 * std::max(1.0, n)) return static_cast<int>(nearest);
  return static_cast<int>(std::ceil(n));
}

SamplePlan SamplePlan::make(double z, double p, double e) {
  return SamplePlan{z, p, e, cochran_n(z, p, e)};
}

RepresentativeSample select_representatives(int cluster_id, const std::vector<int>& assignments,
                                            const std::vector<double>& silhouettes,
                                            const Corpus& corpus, const SamplePlan& plan) {
  if (assignments.size() != corpus.size() || silhouettes.size() != corpus.size()) {
    throw NumericError("select_representatives: assignments, silhouettes and corpus differ in size");
  }
  if (plan.n_target < 1) throw ConfigError("select_representatives: n_target must be positive");
  RepresentativeSample s;
  s.cluster_id = cluster_id;
  s.plan = plan;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] == cluster_id) {
      s.members.push_back({corpus.posts[i].id, silhouettes[i], corpus.posts[i].clean_text});
    }
  }
  if (s.members.empty()) {
    throw ConfigError("select_representatives: cluster " + std::to_string(cluster_id) + " is empty");
  }
  std::sort(s.members.begin(), s.members.end(), [](const SampleMember& a, const SampleMember& b) {
    if (a.silhouette != b.silhouette) return a.silhouette > b.silhouette;
    return a.post_id < b.post_id;
  });
  if (s.members.size() > static_cast<std::size_t>(plan.n_target)) {
    s.members.resize(static_cast<std::size_t>(plan.n_target));
  }
  return s;
}

RepresentativeSample select_representatives(int cluster_id, const std::vector<int>& assignments,
                                            const MatrixXd& x, const Corpus& corpus,
                                            const SamplePlan& plan) {
  const auto sil = silhouette(x, assignments);
  return select_representatives(cluster_id, assignments, sil.per_point, corpus, plan);
}

json to_json(const RepresentativeSample& s) {
  json members = json::array();
  for (const auto& m : s.members) {
    members.push_back({{"post_id", m.post_id}, {"silhouette", m.silhouette}, {"clean_text", m.clean_text}});
  }
  return {{"cluster_id", s.cluster_id},
          {"plan", {{"z", s.plan.z}, {"p", s.plan.p}, {"e", s.plan.e}, {"n_target", s.plan.n_target}}},
          {"members", members}};
}

RepresentativeSample sample_from_json(const json& j) {
  RepresentativeSample s;
  s.cluster_id = j.at("cluster_id").get<int>();
  const auto& plan = j.at("plan");
  s.plan = {plan.at("z").get<double>(), plan.at("p").get<double>(), plan.at("e").get<double>(),
            plan.at("n_target").get<int>()};
  for (const auto& m : j.at("members")) {
    s.members.push_back({m.at("post_id").get<std::string>(), m.at("silhouette").get<double>(),
                         m.at("clean_text").get<std::string>()});
  }
  return s;
}

}  // namespace beyondwords
