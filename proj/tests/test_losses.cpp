#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "skd/losses.hpp"
#include "support.hpp"

#include <cmath>

using namespace skd;

namespace {

using Vec = ArrayX<double>;

Vec random_vec(int n, Rng& rng, double scale = 2.0) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = scale * rng.normal();
  return v;
}

Vec random_target(int n, Rng& rng) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.uniform();
  return v;
}

// Scalar-loop reference: -[t log s + (1 - t) log(1 - s)] averaged over pixels.
double ce_oracle(const Vec& x, const Vec& t) {
  double sum = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double s = 1 / (1 + std::exp(-x[i]));
    sum += -(t[i] * std::log(s) + (1 - t[i]) * std::log(1 - s));
  }
  return sum / double(x.size());
}

Vec soft(const Vec& x) { return 1 / (1 + (-x).exp()); }

LossConfig config(double alpha, TemporalMode mode = TemporalMode::encoded) {
  LossConfig c;
  c.alpha = alpha;
  c.temporal_mode = mode;
  return c;
}

}  // namespace

TEST_CASE("sigmoid cross entropy values") {
  CHECK(sigmoid_ce<double>(Vec::Constant(1, 0.0), Vec::Constant(1, 1.0)) == doctest::Approx(std::log(2.0)));
  CHECK(sigmoid_ce<double>(Vec::Constant(1, 20.0), Vec::Constant(1, 1.0)) <= 1e-8);
  CHECK(sigmoid_ce<double>(Vec::Constant(1, 20.0), Vec::Constant(1, 1.0)) == doctest::Approx(2.06e-9).epsilon(0.01));
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec x = random_vec(64, rng), t = random_target(64, rng);
    CHECK(std::abs(sigmoid_ce<double>(x, t) - ce_oracle(x, t)) < 1e-10);
  }
  CHECK_THROWS_AS(sigmoid_ce<double>(Vec::Zero(3), Vec::Constant(3, 1.5)), ShapeError);
  CHECK_THROWS_AS(sigmoid_ce<double>(Vec::Zero(3), Vec::Zero(4)), ShapeError);
}

TEST_CASE("distillation term values") {
  // Saturated agreement leaves only the entropy of the soft target.
  const double s20 = 1 / (1 + std::exp(-20.0));
  const double entropy = -(s20 * std::log(s20) + (1 - s20) * std::log(1 - s20));
  CHECK(distill_term<double>(Vec::Constant(4, 20.0), Vec::Constant(4, 20.0)) == doctest::Approx(entropy).epsilon(1e-6));
  CHECK(entropy < 1e-7);
  CHECK(distill_term<double>(Vec::Zero(4), Vec::Zero(4)) == doctest::Approx(std::log(2.0)));
  Rng rng(2);
  const Vec s = random_vec(64, rng), t = random_vec(64, rng);
  CHECK(std::abs(distill_term<double>(s, t) - ce_oracle(s, soft(t))) < 1e-10);
}

TEST_CASE("spatial loss assembles its terms") {
  Rng rng(3);
  const std::vector<Vec> p{random_vec(36, rng), random_vec(36, rng), random_vec(36, rng)};
  Vec gt(36);
  for (int i = 0; i < 36; ++i) gt[i] = rng.coin();
  const LossReport<double> r = spatial_loss<double>(p, gt, config(0.7));
  const double oracle = ce_oracle(p[0], gt) + ce_oracle(p[1], gt) + ce_oracle(p[2], gt) +
                        0.7 * (ce_oracle(p[0], soft(p[2])) + ce_oracle(p[1], soft(p[2])));
  CHECK(std::abs(r.total - oracle) < 1e-10);
  CHECK(r.supervised.size() == 3);
  CHECK(r.distill.size() == 2);

  const LossReport<double> zero = spatial_loss<double>(p, gt, config(0.0));
  CHECK(zero.total == doctest::Approx(r.supervised[0] + r.supervised[1] + r.supervised[2]).epsilon(1e-15));

  LossConfig no_sd = config(0.7);
  no_sd.spatial_distill = false;
  CHECK(spatial_loss<double>(p, gt, no_sd).distill.empty());

  const std::vector<Vec> saturated(3, Vec::Constant(36, 30.0));
  CHECK(spatial_loss<double>(saturated, Vec::Ones(36), config(0.7)).total < 1e-8);
  CHECK_THROWS_AS(spatial_loss<double>({p[0], p[1]}, gt, config(0.7)), ShapeError);
}

TEST_CASE("temporal loss in plain and encoded modes") {
  Rng rng(4);
  const std::vector<Vec> p4{random_vec(36, rng), random_vec(36, rng), random_vec(36, rng), random_vec(36, rng)};
  const std::vector<Vec> p3(p4.begin(), p4.begin() + 3);
  const Vec teacher = random_vec(36, rng);
  Vec gt(36);
  for (int i = 0; i < 36; ++i) gt[i] = rng.coin();

  const auto plain = temporal_loss<double>(p3, teacher, gt, config(0.7, TemporalMode::plain));
  const auto encoded = temporal_loss<double>(p4, teacher, gt, config(0.7, TemporalMode::encoded));
  CHECK(encoded.supervised.size() == plain.supervised.size() + 1);
  CHECK(encoded.distill.size() == plain.distill.size() + 1);
  double oracle = 0;
  for (const auto& p : p4) oracle += ce_oracle(p, gt) + 0.7 * ce_oracle(p, soft(teacher));
  CHECK(std::abs(encoded.total - oracle) < 1e-8);

  const std::vector<Vec> saturated(3, Vec::Constant(36, 30.0));
  CHECK(temporal_loss<double>(saturated, Vec::Constant(36, 30.0), Vec::Ones(36), config(0.7, TemporalMode::plain))
            .total < 1e-8);
  CHECK_THROWS_AS(temporal_loss<double>(p4, teacher, gt, config(0.7, TemporalMode::plain)), ShapeError);
  CHECK_THROWS_AS(temporal_loss<double>(p3, teacher, gt, config(0.7, TemporalMode::encoded)), ShapeError);
  CHECK_THROWS_AS(temporal_loss<double>(p3, teacher, gt, config(0.7, TemporalMode::none)), ConfigError);
}

TEST_CASE("losses grow with alpha") {
  Rng rng(5);
  const std::vector<Vec> p{random_vec(16, rng), random_vec(16, rng), random_vec(16, rng)};
  const Vec gt = Vec::Ones(16);
  double last = -1;
  for (double a : {0.0, 0.25, 0.5, 0.7, 1.0}) {
    const double v = spatial_loss<double>(p, gt, config(a)).total;
    CHECK(v >= last);
    last = v;
  }
}

TEST_CASE("analytic gradients match central differences") {
  Rng rng(6);
  const int n = 36;
  const Vec target = random_target(n, rng), teacher = random_vec(n, rng);
  Vec gt(n);
  for (int i = 0; i < n; ++i) gt[i] = rng.coin();

  CHECK(test::gradient_check_array([&](const Vec& x, Vec* g) { return sigmoid_ce<double>(x, target, g); },
                                   random_vec(n, rng)) < 1e-6);
  CHECK(test::gradient_check_array([&](const Vec& x, Vec* g) { return distill_term<double>(x, teacher, g); },
                                   random_vec(n, rng)) < 1e-6);

  // Phases stacked into one vector so every logit is perturbed.
  auto stacked = [&](int phases, auto loss) {
    return [=](const Vec& x, Vec* g) {
      std::vector<Vec> p;
      for (int k = 0; k < phases; ++k) p.push_back(x.segment(k * n, n));
      std::vector<Vec> grads;
      const double v = loss(p, g ? &grads : nullptr);
      if (g) {
        g->resize(x.size());
        for (int k = 0; k < phases; ++k) g->segment(k * n, n) = grads[std::size_t(k)];
      }
      return v;
    };
  };
  const LossConfig cfg = config(0.7);
  CHECK(test::gradient_check_array(stacked(3,
                                           [&](const std::vector<Vec>& p, std::vector<Vec>* g) {
                                             return spatial_loss<double>(p, teacher, gt, cfg, g).total;
                                           }),
                                   random_vec(3 * n, rng)) < 1e-6);
  CHECK(test::gradient_check_array(stacked(3,
                                           [&](const std::vector<Vec>& p, std::vector<Vec>* g) {
                                             return temporal_loss<double>(p, teacher, gt,
                                                                          config(0.7, TemporalMode::plain), g)
                                                 .total;
                                           }),
                                   random_vec(3 * n, rng)) < 1e-6);
  CHECK(test::gradient_check_array(stacked(4,
                                           [&](const std::vector<Vec>& p, std::vector<Vec>* g) {
                                             return temporal_loss<double>(p, teacher, gt, cfg, g).total;
                                           }),
                                   random_vec(4 * n, rng)) < 1e-6);
}

TEST_CASE("the teacher receives no gradient") {
  Rng rng(7);
  const Vard student(test::random_tensor({1, 1, 6, 6}, rng), true);
  const Vard teacher(test::random_tensor({1, 1, 6, 6}, rng), true);
  backward(distill_term(student, teacher));
  CHECK(student.node()->has_grad());
  CHECK_FALSE(teacher.node()->has_grad());
}
