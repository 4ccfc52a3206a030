#pragma once

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "beyondwords/cluster_quality.hpp"
#include "beyondwords/corpus.hpp"
#include "beyondwords/linalg.hpp"

namespace beyondwords {

/// Sample-size plan for one cluster; defaults give the 90%-confidence
/// size of 68.
struct SamplePlan {
  double z = 1.64;
  double p = 0.5;
  double e = 0.1;
  int n_target = 68;

  static SamplePlan make(double z, double p, double e);
};

/// ceil(z^2 p (1 - p) / e^2). Values within 1e-9 (relative) of an integer are
/// taken as that integer so exact rational inputs give exact sizes.
int cochran_n(double z, double p, double e);

struct SampleMember {
  std::string post_id;
  double silhouette = 0;
  std::string clean_text;
};

struct RepresentativeSample {
  int cluster_id = 0;
  SamplePlan plan;
  std::vector<SampleMember> members;  // silhouette descending, post_id ascending on ties
};

/// Selects the top plan.n_target members of `cluster_id` by silhouette,
/// given silhouettes already computed over every point.
RepresentativeSample select_representatives(int cluster_id, const std::vector<int>& assignments,
                                            const std::vector<double>& silhouettes,
                                            const Corpus& corpus, const SamplePlan& plan);

/// Convenience overload computing silhouettes in the clustering space `x`.
RepresentativeSample select_representatives(int cluster_id, const std::vector<int>& assignments,
                                            const MatrixXd& x, const Corpus& corpus,
                                            const SamplePlan& plan);

nlohmann::json to_json(const RepresentativeSample& s);
RepresentativeSample sample_from_json(const nlohmann::json& j);

}  // namespace beyondwords
