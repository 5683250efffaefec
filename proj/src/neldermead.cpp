#include "pica/neldermead.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace pica {

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& fn,
                             const Eigen::VectorXd& x0, double initial_step, int max_iterations,
                             double tolerance, const Eigen::VectorXd& lower,
                             const Eigen::VectorXd& upper) {
  const int n = static_cast<int>(x0.size());
  auto clamp = [&](Eigen::VectorXd x) {
    for (int i = 0; i < n; ++i) x[i] = std::clamp(x[i], lower[i], upper[i]);
    return x;
  };
  int evals = 0;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++evals;
    return fn(x);
  };

  std::vector<Eigen::VectorXd> simplex(n + 1);
  std::vector<double> value(n + 1);
  simplex[0] = clamp(x0);
  value[0] = eval(simplex[0]);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd v = simplex[0];
    v[i] += initial_step;
    simplex[i + 1] = clamp(v);
    value[i + 1] = eval(simplex[i + 1]);
  }

  std::vector<int> order(n + 1);
  for (int it = 0; it < max_iterations; ++it) {
    for (int i = 0; i <= n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return value[a] < value[b]; });
    int best = order[0], worst = order[n], second_worst = order[n - 1];
    if (value[worst] - value[best] < tolerance) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i <= n; ++i)
      if (i != worst) centroid += simplex[i];
    centroid /= n;

    Eigen::VectorXd reflected = clamp(centroid + (centroid - simplex[worst]));
    double fr = eval(reflected);
    if (fr < value[best]) {
      Eigen::VectorXd expanded = clamp(centroid + 2.0 * (centroid - simplex[worst]));
      double fe = eval(expanded);
      if (fe < fr) {
        simplex[worst] = expanded;
        value[worst] = fe;
      } else {
        simplex[worst] = reflected;
        value[worst] = fr;
      }
    } else if (fr < value[second_worst]) {
      simplex[worst] = reflected;
      value[worst] = fr;
    } else {
      Eigen::VectorXd contracted = clamp(centroid + 0.5 * (simplex[worst] - centroid));
      double fc = eval(contracted);
      if (fc < value[worst]) {
        simplex[worst] = contracted;
        value[worst] = fc;
      } else {
        for (int i = 0; i <= n; ++i) {
          if (i == best) continue;
          simplex[i] = clamp(simplex[best] + 0.5 * (simplex[i] - simplex[best]));
          value[i] = eval(simplex[i]);
        }
      }
    }
  }

  NelderMeadResult result;
  int best = 0;
  for (int i = 1; i <= n; ++i)
    if (value[i] < value[best]) best = i;
  result.x = simplex[best];
  result.value = value[best];
  result.evaluations = evals;
  return result;
}

}  // namespace pica
