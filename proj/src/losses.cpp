#include "skd/losses.hpp"

#include "skd/error.hpp"

namespace skd {

namespace {

template <typename Scalar>
void check_pair(Eigen::Index a, Eigen::Index b, const char* op) {
  if (a != b || a == 0)
    throw ShapeError(std::string(op) + ": size mismatch " + std::to_string(a) + " vs " + std::to_string(b));
}

template <typename Scalar>
Scalar accumulate_objective(const std::vector<ArrayX<Scalar>>& phases, const ArrayX<Scalar>& teacher,
                            const ArrayX<Scalar>& gt, std::size_t distilled, double alpha,
                            std::vector<ArrayX<Scalar>>* grads, LossReport<Scalar>& report) {
  report.alpha = alpha;
  if (grads) grads->assign(phases.size(), ArrayX<Scalar>());
  ArrayX<Scalar> g;
  double total = 0;
  for (std::size_t i = 0; i < phases.size(); ++i) {
    const Scalar lg = sigmoid_ce<Scalar>(phases[i], gt, grads ? &g : nullptr);
    report.supervised.push_back(lg);
    total += double(lg);
    if (grads) (*grads)[i] = g;
  }
  double distill_sum = 0;
  for (std::size_t i = 0; i < distilled; ++i) {
    const Scalar ld = distill_term<Scalar>(phases[i], teacher, grads ? &g : nullptr);
    report.distill.push_back(ld);
    distill_sum += double(ld);
    if (grads) (*grads)[i] += Scalar(alpha) * g;
  }
  report.total = Scalar(total + alpha * distill_sum);
  return report.total;
}

}  // namespace

template <typename Scalar>
ArrayX<Scalar> stable_sigmoid(const Eigen::Ref<const ArrayX<Scalar>>& x) {
  const ArrayX<Scalar> e = (-x.abs()).exp();
  return (x >= Scalar(0)).select(Scalar(1) / (Scalar(1) + e), e / (Scalar(1) + e));
}

template <typename Scalar>
Scalar sigmoid_ce(const Eigen::Ref<const ArrayX<Scalar>>& logits, const Eigen::Ref<const ArrayX<Scalar>>& target,
                  ArrayX<Scalar>* grad) {
  check_pair<Scalar>(logits.size(), target.size(), "sigmoid_ce");
  if ((target < Scalar(0)).any() || (target > Scalar(1)).any())
    throw ShapeError("sigmoid_ce: targets must lie in [0, 1]");
  const ArrayX<Scalar> per_pixel =
      logits.max(Scalar(0)) - logits * target + (-logits.abs()).exp().log1p();
  const double n = double(logits.size());
  if (grad) *grad = (stable_sigmoid<Scalar>(logits) - target) / Scalar(n);
  return Scalar(per_pixel.template cast<double>().sum() / n);
}

template <typename Scalar>
Scalar distill_term(const Eigen::Ref<const ArrayX<Scalar>>& student,
                    const Eigen::Ref<const ArrayX<Scalar>>& teacher, ArrayX<Scalar>* grad) {
  check_pair<Scalar>(student.size(), teacher.size(), "distill_term");
  const ArrayX<Scalar> soft = stable_sigmoid<Scalar>(teacher);
  return sigmoid_ce<Scalar>(student, soft, grad);
}

template <typename Scalar>
LossReport<Scalar> spatial_loss(const std::vector<ArrayX<Scalar>>& phases, const ArrayX<Scalar>& teacher,
                                const ArrayX<Scalar>& gt, const LossConfig& cfg,
                                std::vector<ArrayX<Scalar>>* grads) {
  if (phases.size() != 3)
    throw ShapeError("spatial_loss: expected 3 phases, got " + std::to_string(phases.size()));
  LossReport<Scalar> report;
  accumulate_objective(phases, teacher, gt, cfg.spatial_distill ? 2 : 0, cfg.alpha, grads, report);
  return report;
}

template <typename Scalar>
LossReport<Scalar> spatial_loss(const std::vector<ArrayX<Scalar>>& phases, const ArrayX<Scalar>& gt,
                                const LossConfig& cfg, std::vector<ArrayX<Scalar>>* grads) {
  if (phases.size() != 3)
    throw ShapeError("spatial_loss: expected 3 phases, got " + std::to_string(phases.size()));
  return spatial_loss(phases, phases[2], gt, cfg, grads);
}

template <typename Scalar>
LossReport<Scalar> temporal_loss(const std::vector<ArrayX<Scalar>>& phases_t0, const ArrayX<Scalar>& teacher,
                                 const ArrayX<Scalar>& gt_t0, const LossConfig& cfg,
                                 std::vector<ArrayX<Scalar>>* grads) {
  std::size_t expected = 0;
  switch (cfg.temporal_mode) {
    case TemporalMode::plain: expected = 3; break;
    case TemporalMode::encoded: expected = 4; break;
    case TemporalMode::none: throw ConfigError("temporal_loss: temporal mode is 'none'");
  }
  if (phases_t0.size() != expected)
    throw ShapeError("temporal_loss: " + to_string(cfg.temporal_mode) + " mode needs " + std::to_string(expected) +
                     " phases, got " + std::to_string(phases_t0.size()));
  LossReport<Scalar> report;
  accumulate_objective(phases_t0, teacher, gt_t0, cfg.temporal_distill ? expected : 0, cfg.alpha, grads, report);
  return report;
}

template <typename Scalar>
Var<Scalar> sigmoid_ce(const Var<Scalar>& logits, const Tensor<Scalar>& target) {
  if (!(logits.shape() == target.shape()))
    throw ShapeError("sigmoid_ce: " + logits.shape().str() + " vs " + target.shape().str());
  auto grad = std::make_shared<ArrayX<Scalar>>();
  const Scalar v = sigmoid_ce<Scalar>(logits.value().array(), target.array(), grad.get());
  return make_result<Scalar>(Tensor<Scalar>(Shape{1, 1, 1, 1}, v), {logits}, [grad](Node<Scalar>& self) {
    self.inputs[0]->grad_buffer().array() += self.grad.data()[0] * *grad;
  });
}

template <typename Scalar>
Var<Scalar> distill_term(const Var<Scalar>& student, const Var<Scalar>& teacher) {
  if (!(student.shape() == teacher.shape()))
    throw ShapeError("distill_term: " + student.shape().str() + " vs " + teacher.shape().str());
  auto grad = std::make_shared<ArrayX<Scalar>>();
  const Scalar v = distill_term<Scalar>(student.value().array(), teacher.value().array(), grad.get());
  // The teacher is deliberately not an input of the result node.
  return make_result<Scalar>(Tensor<Scalar>(Shape{1, 1, 1, 1}, v), {student}, [grad](Node<Scalar>& self) {
    self.inputs[0]->grad_buffer().array() += self.grad.data()[0] * *grad;
  });
}

namespace {

Varf objective_node(const std::vector<Varf>& logits, std::vector<ArrayX<float>> grads, float total) {
  auto shared = std::make_shared<std::vector<ArrayX<float>>>(std::move(grads));
  return make_result<float>(Tensorf(Shape{1, 1, 1, 1}, total), logits, [shared](Node<float>& self) {
    const float seed = self.grad.data()[0];
    for (std::size_t i = 0; i < self.inputs.size(); ++i)
      if (self.inputs[i]->requires_grad) self.inputs[i]->grad_buffer().array() += seed * (*shared)[i];
  });
}

std::vector<ArrayX<float>> flatten(const std::vector<Varf>& logits) {
  std::vector<ArrayX<float>> out;
  out.reserve(logits.size());
  for (const auto& l : logits) out.push_back(l.value().array());
  return out;
}

void check_gt(const Varf& logits, const Tensorf& gt) {
  if (!(logits.shape() == gt.shape()))
    throw ShapeError("loss: logits " + logits.shape().str() + " vs ground truth " + gt.shape().str());
}

}  // namespace

Varf spatial_loss(const PhasePredictions& phases, const Tensorf& gt, const LossConfig& cfg, LossReport<float>* report) {
  if (phases.logits.size() != 3)
    throw ShapeError("spatial_loss: expected 3 phases, got " + std::to_string(phases.logits.size()));
  check_gt(phases.logits[0], gt);
  std::vector<ArrayX<float>> grads;
  auto flat = flatten(phases.logits);
  const ArrayX<float> teacher = flat[2];
  auto r = spatial_loss<float>(flat, teacher, gt.array(), cfg, &grads);
  if (report) *report = r;
  return objective_node(phases.logits, std::move(grads), r.total);
}

Varf temporal_loss(const PhasePredictions& phases_t0, const Varf& teacher, const Tensorf& gt_t0, const LossConfig& cfg,
                   LossReport<float>* report) {
  check_gt(phases_t0.logits[0], gt_t0);
  check_gt(teacher, gt_t0);
  std::vector<ArrayX<float>> grads;
  auto r = temporal_loss<float>(flatten(phases_t0.logits), teacher.value().array(), gt_t0.array(), cfg, &grads);
  if (report) *report = r;
  return objective_node(phases_t0.logits, std::move(grads), r.total);
}

#define SKD_INSTANTIATE(S)                                                                                      \
  template struct LossReport<S>;                                                                                \
  template ArrayX<S> stable_sigmoid(const Eigen::Ref<const ArrayX<S>>&);                                        \
  template S sigmoid_ce(const Eigen::Ref<const ArrayX<S>>&, const Eigen::Ref<const ArrayX<S>>&, ArrayX<S>*);    \
  template S distill_term(const Eigen::Ref<const ArrayX<S>>&, const Eigen::Ref<const ArrayX<S>>&, ArrayX<S>*);  \
  template LossReport<S> spatial_loss(const std::vector<ArrayX<S>>&, const ArrayX<S>&, const ArrayX<S>&,        \
                                      const LossConfig&, std::vector<ArrayX<S>>*);                              \
  template LossReport<S> spatial_loss(const std::vector<ArrayX<S>>&, const ArrayX<S>&, const LossConfig&,       \
                                      std::vector<ArrayX<S>>*);                                                 \
  template LossReport<S> temporal_loss(const std::vector<ArrayX<S>>&, const ArrayX<S>&, const ArrayX<S>&,       \
                                       const LossConfig&, std::vector<ArrayX<S>>*);                             \
  template Var<S> sigmoid_ce(const Var<S>&, const Tensor<S>&);                                                  \
  template Var<S> distill_term(const Var<S>&, const Var<S>&);

SKD_INSTANTIATE(float)
SKD_INSTANTIATE(double)

}  // namespace skd
