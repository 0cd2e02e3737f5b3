#include "risloc/pso.hpp"

#include "risloc/error.hpp"
#include "risloc/random.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace risloc {
namespace {

double wrap(double x, const Bound& b) {
  const double r = b.range();
  double y = std::fmod(x - b.lo, r);
  if (y < 0.0) y += r;
  if (y >= r) y = 0.0;
  return b.lo + y;
}

void confine(Eigen::VectorXd& x, const std::vector<Bound>& bounds) {
  for (Eigen::Index d = 0; d < x.size(); ++d) {
    const Bound& b = bounds[static_cast<std::size_t>(d)];
    x(d) = b.periodic ? wrap(x(d), b) : std::clamp(x(d), b.lo, b.hi);
  }
}

struct Swarm {
  std::vector<Eigen::VectorXd> position;
  std::vector<Eigen::VectorXd> velocity;
  std::vector<Eigen::VectorXd> personal_best;
  std::vector<double> personal_value;
};

class Evaluator {
 public:
  explicit Evaluator(const CostFunction& cost) : cost_(cost) {}

  double operator()(const Eigen::VectorXd& x) {
    const double v = cost_(x);
    ++count_;
    if (!std::isfinite(v)) {
      std::ostringstream msg;
      msg << "cost is not finite (" << v << ") at point [" << x.transpose() << "]";
      throw NumericError(msg.str());
    }
    return v;
  }
  std::size_t count() const { return count_; }

 private:
  const CostFunction& cost_;
  std::size_t count_ = 0;
};

}  // namespace

void validate(const PsoConfig& c) {
  if (c.bounds.empty()) throw ConfigError("PSO needs at least one bounded dimension");
  for (const Bound& b : c.bounds) {
    if (!(b.lo < b.hi)) throw ConfigError("PSO bound requires lo < hi");
  }
  if (c.swarm_size < 2) throw ConfigError("PSO swarm_size must be >= 2");
  if (!(c.inertia > 0.0 && c.inertia < 1.0)) throw ConfigError("PSO inertia must lie in (0, 1)");
  if (!(c.cognitive > 0.0 && c.social > 0.0)) throw ConfigError("PSO c1, c2 must be positive");
  if (!(c.velocity_clamp > 0.0)) throw ConfigError("PSO velocity clamp must be positive");
  if (c.restarts < 1) throw ConfigError("PSO restarts must be >= 1");
  for (const auto& p : c.initial_points) {
    if (p.size() != static_cast<Eigen::Index>(c.bounds.size())) {
      throw ConfigError("PSO initial point dimension mismatch");
    }
  }
}

OptResult minimize(const CostFunction& cost, const PsoConfig& config) {
  validate(config);
  const auto dims = static_cast<Eigen::Index>(config.bounds.size());
  const std::size_t n = config.swarm_size;

  Eigen::VectorXd lo(dims), range(dims), vmax(dims);
  for (Eigen::Index d = 0; d < dims; ++d) {
    const Bound& b = config.bounds[static_cast<std::size_t>(d)];
    lo(d) = b.lo;
    range(d) = b.range();
    vmax(d) = config.velocity_clamp * b.range();
  }

  Evaluator eval(cost);
  OptResult result;
  result.best_value = std::numeric_limits<double>::infinity();

  for (std::size_t restart = 0; restart < config.restarts; ++restart) {
    Rng rng(derive_seed(config.seed, restart));
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Swarm s;
    s.position.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      Eigen::VectorXd x(dims), v(dims);
      for (Eigen::Index d = 0; d < dims; ++d) x(d) = lo(d) + unit(rng) * range(d);
      for (Eigen::Index d = 0; d < dims; ++d) v(d) = (2.0 * unit(rng) - 1.0) * 0.1 * range(d);
      if (restart == 0 && i < config.initial_points.size()) x = config.initial_points[i];
      confine(x, config.bounds);
      s.position.push_back(x);
      s.velocity.push_back(v);
    }
    s.personal_best = s.position;
    s.personal_value.resize(n);
    std::size_t best = 0;
    for (std::size_t i = 0; i < n; ++i) {
      s.personal_value[i] = eval(s.position[i]);
      if (s.personal_value[i] < s.personal_value[best]) best = i;
    }
    Eigen::VectorXd global_best = s.personal_best[best];
    double global_value = s.personal_value[best];
    result.history.push_back(std::min(global_value, result.best_value));

    std::size_t stagnant = 0;
    for (std::size_t it = 0; it < config.iterations; ++it) {
      for (std::size_t i = 0; i < n; ++i) {
        Eigen::VectorXd& x = s.position[i];
        Eigen::VectorXd& v = s.velocity[i];
        for (Eigen::Index d = 0; d < dims; ++d) {
          const double r1 = unit(rng);
          const double r2 = unit(rng);
          double pull_personal = s.personal_best[i](d) - x(d);
          double pull_global = global_best(d) - x(d);
          if (config.bounds[static_cast<std::size_t>(d)].periodic) {
            // Shortest signed arc on the circle.
            pull_personal = std::remainder(pull_personal, range(d));
            pull_global = std::remainder(pull_global, range(d));
          }
          v(d) = config.inertia * v(d) + config.cognitive * r1 * pull_personal +
                 config.social * r2 * pull_global;
          v(d) = std::clamp(v(d), -vmax(d), vmax(d));
          x(d) += v(d);
        }
        confine(x, config.bounds);
      }
      // Evaluate in particle order, then reduce; the reduction order is fixed.
      for (std::size_t i = 0; i < n; ++i) {
        const double f = eval(s.position[i]);
        if (f < s.personal_value[i]) {
          s.personal_value[i] = f;
          s.personal_best[i] = s.position[i];
        }
      }
      const double previous = global_value;
      for (std::size_t i = 0; i < n; ++i) {
        if (s.personal_value[i] < global_value) {
          global_value = s.personal_value[i];
          global_best = s.personal_best[i];
        }
      }
      ++result.iterations_run;
      result.history.push_back(std::min(global_value, result.best_value));

      const double gain = previous - global_value;
      if (gain > config.stop_tol * std::abs(previous)) {
        stagnant = 0;
      } else if (++stagnant >= config.patience) {
        break;
      }
    }
    if (global_value < result.best_value) {
      result.best_value = global_value;
      result.best_point = global_best;
    }
  }
  result.evaluations = eval.count();
  return result;
}

}  // namespace risloc
