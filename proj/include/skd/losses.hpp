#pragma once

#include "skd/config.hpp"
#include "skd/embedding.hpp"

#include <vector>

namespace skd {

/// Per-term values of one spatial or temporal objective. `supervised[i]` is
/// L_g(P_i, G); `distill[i]` is L_d(P_i, teacher) (empty when distillation is
/// off); total = sum(supervised) + alpha * sum(distill).
template <typename Scalar>
struct LossReport {
  std::vector<Scalar> supervised;
  std::vector<Scalar> distill;
  Scalar total = 0;
  double alpha = 0;
};

template <typename Scalar>
ArrayX<Scalar> stable_sigmoid(const Eigen::Ref<const ArrayX<Scalar>>& x);

/// Pixel-mean sigmoid cross entropy
///   mean(-[t log s(x) + (1 - t) log(1 - s(x))])
/// evaluated as max(x, 0) - x t + log(1 + exp(-|x|)). Writes d/dlogits to
/// `grad` when given. Targets must lie in [0, 1].
template <typename Scalar>
Scalar sigmoid_ce(const Eigen::Ref<const ArrayX<Scalar>>& logits, const Eigen::Ref<const ArrayX<Scalar>>& target,
                  ArrayX<Scalar>* grad = nullptr);

/// Distillation term: sigmoid_ce against the teacher's soft map s(teacher).
/// The teacher is a constant; only the student gradient exists.
template <typename Scalar>
Scalar distill_term(const Eigen::Ref<const ArrayX<Scalar>>& student,
                    const Eigen::Ref<const ArrayX<Scalar>>& teacher, ArrayX<Scalar>* grad = nullptr);

/// L_s = sum_{i=0..2} L_g(P_i, G) + alpha * sum_{i=0..1} L_d(P_i, teacher).
/// The teacher is normally P_2 itself but is passed separately so that it can
/// be held fixed. `grads`, when given, receives dL_s/dP_i.
template <typename Scalar>
LossReport<Scalar> spatial_loss(const std::vector<ArrayX<Scalar>>& phases, const ArrayX<Scalar>& teacher,
                                const ArrayX<Scalar>& gt, const LossConfig& cfg,
                                std::vector<ArrayX<Scalar>>* grads = nullptr);

template <typename Scalar>
LossReport<Scalar> spatial_loss(const std::vector<ArrayX<Scalar>>& phases, const ArrayX<Scalar>& gt,
                                const LossConfig& cfg, std::vector<ArrayX<Scalar>>* grads = nullptr);

/// L_t = sum_i L_g(P_i, G_{t+t0}) + alpha * sum_i L_d(P_i, teacher) with i over
/// 0..2 (plain mode) or 0..3 (encoded mode); the teacher is frame t's P_2.
template <typename Scalar>
LossReport<Scalar> temporal_loss(const std::vector<ArrayX<Scalar>>& phases_t0, const ArrayX<Scalar>& teacher,
                                 const ArrayX<Scalar>& gt_t0, const LossConfig& cfg,
                                 std::vector<ArrayX<Scalar>>* grads = nullptr);

// Autograd forms. The teacher Var never receives a gradient.
template <typename Scalar>
Var<Scalar> sigmoid_ce(const Var<Scalar>& logits, const Tensor<Scalar>& target);

template <typename Scalar>
Var<Scalar> distill_term(const Var<Scalar>& student, const Var<Scalar>& teacher);

Varf spatial_loss(const PhasePredictions& phases, const Tensorf& gt, const LossConfig& cfg,
                  LossReport<float>* report = nullptr);

Varf temporal_loss(const PhasePredictions& phases_t0, const Varf& teacher, const Tensorf& gt_t0,
                   const LossConfig& cfg, LossReport<float>* report = nullptr);

}  // namespace skd
