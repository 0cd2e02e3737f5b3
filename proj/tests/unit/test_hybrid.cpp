#include "risloc/error.hpp"
#include "risloc/hybrid.hpp"

#include <gtest/gtest.h>

using namespace risloc;

namespace {

struct Measured {
  Scene scene;
  PhaseSchedule schedule;
  MeasurementSet m;
  ReflectionMatrix beta;
};

Measured noiseless(const Eigen::Vector2d& truth, double phi0) {
  SceneConfig c;
  c.num_tiles = 20;
  c.pilots = 16;
  c.noise_power = 0.0;
  Measured s{build_scene(c), {}, {}, {}};
  s.schedule = schedule_for(s.scene);
  Rng rng(17);
  std::tie(s.m, s.beta) = simulate_measurements(s.scene, s.schedule, truth, phi0, rng);
  return s;
}

HybridConfig config(double halfwidth) {
  HybridConfig h;
  h.halfwidth = halfwidth;
  h.pso.seed = 3;
  return h;
}

}  // namespace

TEST(NeighborhoodBox, ClampsAndFallsBack) {
  const Rect region{};
  bool fallback = true;
  Rect b = neighborhood_box({0.0, 5.0}, 0.5, region, true, &fallback);
  EXPECT_FALSE(fallback);
  EXPECT_DOUBLE_EQ(b.x_min, -0.5);
  EXPECT_DOUBLE_EQ(b.y_max, 5.5);

  b = neighborhood_box({3.8, 1.2}, 0.5, region, true, &fallback);
  EXPECT_FALSE(fallback);
  EXPECT_DOUBLE_EQ(b.x_max, 4.0);
  EXPECT_DOUBLE_EQ(b.y_min, 1.0);
  EXPECT_DOUBLE_EQ(b.x_min, 3.3);

  b = neighborhood_box({9.0, 5.0}, 0.5, region, true, &fallback);
  EXPECT_TRUE(fallback);
  EXPECT_TRUE(region.contains({b.x_min, b.y_min}));
  EXPECT_TRUE(region.contains({b.x_max, b.y_max}));
  EXPECT_GT(b.width(), 0.0);

  b = neighborhood_box({9.0, 5.0}, 0.5, region, false, &fallback);
  EXPECT_FALSE(fallback);
  EXPECT_DOUBLE_EQ(b.x_min, 8.5);
}

TEST(HybridConfig, Validation) {
  HybridConfig h;
  h.halfwidth = 0.0;
  EXPECT_THROW(validate(h), ConfigError);
}

TEST(RefineGuess, NearGuessConvergesToTruth) {
  const Eigen::Vector2d truth{1.37, 6.21};
  const Measured s = noiseless(truth, 2.2);
  const EstimationResult r = refine_guess(s.m.y, s.beta, s.scene, truth + Eigen::Vector2d{0.03, -0.04}, config(0.1));
  EXPECT_LT((r.position - truth).norm(), 1e-4);
  ASSERT_TRUE(r.nn_position.has_value());
  EXPECT_FALSE(r.fallback);
}

TEST(RefineGuess, StaysInsideTheBoxAndNeverWorsensTheGuess) {
  const Eigen::Vector2d truth{-2.0, 8.0};
  const Measured s = noiseless(truth, 0.7);
  const CostContext ctx(s.m.y, s.beta, s.scene);
  for (const Eigen::Vector2d guess : {Eigen::Vector2d{1.0, 3.0}, Eigen::Vector2d{-1.5, 7.2}}) {
    const HybridConfig h = config(0.25);
    const EstimationResult r = refine_guess(s.m.y, s.beta, s.scene, guess, h);
    const Rect box = neighborhood_box(guess, 0.25, s.scene.ue_region(), true);
    EXPECT_TRUE(box.contains(r.position));
    EXPECT_LE(r.residual_cost, best_phase_offset(guess, ctx).second * (1 + 1e-12));
  }
}

TEST(RefineGuess, FarGuessCannotReachTheTruth) {
  const Eigen::Vector2d truth{-3.0, 2.0};
  const Measured s = noiseless(truth, 0.0);
  const Eigen::Vector2d guess{2.0, 8.0};
  const double hw = 0.3;
  const EstimationResult r = refine_guess(s.m.y, s.beta, s.scene, guess, config(hw));
  EXPECT_GE((r.position - truth).norm(), (guess - truth).norm() - std::sqrt(2.0) * hw - 1e-9);
}
