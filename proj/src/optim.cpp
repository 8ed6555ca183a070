#include "madngs/optim.hpp"

#include <cmath>
#include <deque>

#include "madngs/errors.hpp"

namespace madngs {

void OptimizerConfig::validate() const {
  if (kind == Kind::Adam) {
    if (!(adam.learning_rate > 0.0)) throw ConfigError("Adam learning rate must be positive");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0))
      throw ConfigError("Adam betas must lie in [0, 1)");
  } else {
    if (lbfgs.history < 1) throw ConfigError("L-BFGS history must be >= 1");
    if (!(lbfgs.shrink > 0.0 && lbfgs.shrink < 1.0))
      throw ConfigError("line-search shrink factor must lie in (0, 1)");
    if (!(lbfgs.armijo_c > 0.0 && lbfgs.armijo_c < 1.0))
      throw ConfigError("Armijo constant must lie in (0, 1)");
  }
}

namespace {

double evaluate(const Objective& f, const Vector& x, Vector& g) {
  g.setZero(x.size());
  return f(x, g);
}

struct CurvaturePair {
  Vector s;
  Vector y;
  double rho;
};

Vector two_loop_direction(const std::deque<CurvaturePair>& memory, const Vector& grad) {
  Vector q = grad;
  std::vector<double> alpha(memory.size());
  for (std::size_t i = memory.size(); i-- > 0;) {
    alpha[i] = memory[i].rho * memory[i].s.dot(q);
    q -= alpha[i] * memory[i].y;
  }
  const auto& last = memory.back();
  q *= last.s.dot(last.y) / last.y.squaredNorm();
  for (std::size_t i = 0; i < memory.size(); ++i) {
    const double beta = memory[i].rho * memory[i].y.dot(q);
    q += (alpha[i] - beta) * memory[i].s;
  }
  return -q;
}

OptimizationResult run_lbfgs(const Objective& f, Vector x, const OptimizerConfig& cfg) {
  const auto& ls = cfg.lbfgs;
  OptimizationResult res;
  Vector g(x.size());
  double fx = evaluate(f, x, g);
  if (!std::isfinite(fx)) throw DivergedError("non-finite loss at the starting point", 0);
  res.initial_loss = fx;
  res.history.push_back(fx);

  std::deque<CurvaturePair> memory;
  Vector g_new(x.size());
  while (res.iterations < cfg.iterations) {
    if (g.lpNorm<Eigen::Infinity>() == 0.0) break;
    Vector d;
    double step = 1.0;
    if (memory.empty()) {
      d = -g;
      step = std::min(1.0, 1.0 / g.norm());
    } else {
      d = two_loop_direction(memory, g);
    }
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      memory.clear();
      d = -g;
      step = std::min(1.0, 1.0 / g.norm());
      slope = g.dot(d);
    }

    bool accepted = false;
    Vector x_new;
    double f_new = fx;
    for (std::size_t bt = 0; bt <= ls.max_backtracks; ++bt) {
      x_new = x + step * d;
      f_new = evaluate(f, x_new, g_new);
      if (std::isfinite(f_new) && f_new <= fx + ls.armijo_c * step * slope) {
        accepted = true;
        break;
      }
      step *= ls.shrink;
    }
    if (!accepted) {
      // A failed quasi-Newton direction gets one retry along steepest descent.
      if (memory.empty()) break;
      memory.clear();
      continue;
    }

    CurvaturePair pair{x_new - x, g_new - g, 0.0};
    const double sy = pair.s.dot(pair.y);
    if (sy > 1e-12 * pair.y.squaredNorm() && sy > 0.0) {
      pair.rho = 1.0 / sy;
      memory.push_back(std::move(pair));
      if (memory.size() > ls.history) memory.pop_front();
    }
    x = std::move(x_new);
    g = g_new;
    fx = f_new;
    ++res.iterations;
    res.history.push_back(fx);
  }
  res.x = std::move(x);
  res.loss = fx;
  return res;
}

OptimizationResult run_adam(const Objective& f, Vector x, const OptimizerConfig& cfg) {
  const auto& a = cfg.adam;
  OptimizationResult res;
  Vector g(x.size());
  double fx = evaluate(f, x, g);
  if (!std::isfinite(fx)) throw DivergedError("non-finite loss at the starting point", 0);
  res.initial_loss = fx;
  res.history.push_back(fx);
  Vector best = x;
  double best_loss = fx;

  Vector m = Vector::Zero(x.size());
  Vector v = Vector::Zero(x.size());
  double b1t = 1.0, b2t = 1.0;
  for (std::size_t it = 1; it <= cfg.iterations; ++it) {
    m = a.beta1 * m + (1.0 - a.beta1) * g;
    v = a.beta2 * v + (1.0 - a.beta2) * g.cwiseAbs2();
    b1t *= a.beta1;
    b2t *= a.beta2;
    const Vector m_hat = m / (1.0 - b1t);
    const Vector v_hat = v / (1.0 - b2t);
    x -= (a.learning_rate * m_hat.array() / (v_hat.array().sqrt() + a.epsilon)).matrix();
    fx = evaluate(f, x, g);
    if (!std::isfinite(fx)) throw DivergedError("Adam produced a non-finite loss", it);
    res.history.push_back(fx);
    ++res.iterations;
    if (fx < best_loss) {
      best_loss = fx;
      best = x;
    }
  }
  res.x = std::move(best);
  res.loss = best_loss;
  return res;
}

}  // namespace

OptimizationResult minimize(const Objective& objective, Vector x0, const OptimizerConfig& config) {
  config.validate();
  if (config.kind == OptimizerConfig::Kind::Adam) return run_adam(objective, std::move(x0), config);
  return run_lbfgs(objective, std::move(x0), config);
}

}  // namespace madngs
