#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "psflo/config.hpp"
#include "psflo/errors.hpp"

namespace psflo {

enum class ObjectMotion : std::uint8_t { Static = 0, Dynamic = 1 };

// Per-frame classifier measurement: complementary static/dynamic
// probabilities plus the intermediate quantities that produced them.
struct StateMeasurement {
  double p_static = 0.5;
  double p_dynamic = 0.5;
  double p_uncertain = 1.0;    // 0 good velocity estimate, 1 bad
  double heading_variance = 0.0;
};

// Max-probability state path in the log domain. Emission likelihood of the
// static state is p_static, of the dynamic state p_dynamic.
inline std::vector<ObjectMotion> viterbi_decode(const std::vector<StateMeasurement>& measurements,
                                                const ClassifierConfig& cfg) {
  const std::size_t n = measurements.size();
  std::vector<ObjectMotion> path(n, ObjectMotion::Static);
  if (n == 0) return path;

  const double log_trans[2][2] = {
      {std::log(cfg.trans_static_static), std::log(cfg.trans_static_dynamic)},
      {std::log(cfg.trans_dynamic_static), std::log(cfg.trans_dynamic_dynamic)}};

  auto emission = [&](std::size_t t, int state) {
    const double p = state == 0 ? measurements[t].p_static : measurements[t].p_dynamic;
    return std::log(std::max(p, 1e-300));
  };

  std::vector<std::array<double, 2>> score(n);
  std::vector<std::array<int, 2>> from(n);
  score[0] = {std::log(std::max(cfg.prior_static, 1e-300)) + emission(0, 0),
              std::log(std::max(1.0 - cfg.prior_static, 1e-300)) + emission(0, 1)};
  for (std::size_t t = 1; t < n; ++t) {
    for (int s = 0; s < 2; ++s) {
      const double via_static = score[t - 1][0] + log_trans[0][s];
      const double via_dynamic = score[t - 1][1] + log_trans[1][s];
      if (via_static >= via_dynamic) {
        score[t][s] = via_static + emission(t, s);
        from[t][s] = 0;
      } else {
        score[t][s] = via_dynamic + emission(t, s);
        from[t][s] = 1;
      }
    }
  }

  int state = score[n - 1][0] >= score[n - 1][1] ? 0 : 1;
  for (std::size_t t = n; t-- > 0;) {
    path[t] = state == 0 ? ObjectMotion::Static : ObjectMotion::Dynamic;
    if (t > 0) state = from[t][state];
  }
  return path;
}

}  // namespace psflo
