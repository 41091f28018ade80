#include "choir/model/loss.hpp"

#include "choir/ad/ops.hpp"
#include "choir/error.hpp"

namespace choir::inline CHOIR_PRECISION_NS::model {

using ad::Axis;

namespace {

void same_shape(const char* what, const Tensor& x, const Tensor& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    throw ShapeError(std::string(what) + ": prediction " + ad::shape_str(x.shape()) + " vs target " +
                     ad::shape_str(y.shape()));
  }
}

// Per-row dice terms, R x 1.
Tensor dice_rows(const Tensor& x, const Tensor& y, real eps) {
  Tensor one = Tensor::scalar(1.0);
  Tensor pos = ad::div(ad::add_scalar(ad::sum(ad::mul(y, x), Axis::Cols), eps),
                       ad::add_scalar(ad::sum(ad::add(y, x), Axis::Cols), eps));
  Tensor ny = ad::sub(one, y), nx = ad::sub(one, x);
  Tensor neg = ad::div(ad::add_scalar(ad::sum(ad::mul(ny, nx), Axis::Cols), eps),
                       ad::add_scalar(ad::sum(ad::add(ny, nx), Axis::Cols), eps));
  return ad::sub(ad::sub(one, pos), neg);
}

// Per-element focal terms, same shape as x.
Tensor focal_elems(const Tensor& x, const Tensor& y, const DiceFocalParams& p) {
  if (p.gamma != 2.0) throw UsageError("focal loss: only gamma = 2 is supported");
  Tensor xc = ad::clamp(x, p.clamp, 1.0 - p.clamp);
  Tensor one = Tensor::scalar(1.0);
  Tensor nx = ad::sub(one, xc), ny = ad::sub(one, y);
  Tensor neg = ad::mul(ad::scale(ny, 1.0 - p.alpha), ad::mul(ad::mul(xc, xc), ad::log(nx)));
  Tensor pos = ad::mul(ad::scale(y, p.alpha), ad::mul(ad::mul(nx, nx), ad::log(xc)));
  return ad::neg(ad::add(neg, pos));
}

}  // namespace

Tensor dice_part(const Tensor& x, const Tensor& y, const DiceFocalParams& p) {
  same_shape("dice", x, y);
  return ad::mean(dice_rows(x, y, p.eps));
}

Tensor focal_part(const Tensor& x, const Tensor& y, const DiceFocalParams& p) {
  same_shape("focal", x, y);
  return ad::mean(focal_elems(x, y, p));
}

Tensor dice_focal(const Tensor& x, const Tensor& y, const DiceFocalParams& p) {
  same_shape("dice_focal", x, y);
  // Row means of focal terms averaged over rows equal the overall mean.
  return ad::add(ad::mean(dice_rows(x, y, p.eps)), ad::mean(focal_elems(x, y, p)));
}

Tensor cross_entropy(const Tensor& logits, std::size_t label) {
  if (logits.rows() != 1 || label >= logits.cols()) {
    throw ShapeError("cross_entropy: label " + std::to_string(label) + " for logits " +
                     ad::shape_str(logits.shape()));
  }
  return ad::neg(ad::reshape(ad::slice(ad::log_softmax_rows(logits), Axis::Cols, label, 1), {1}));
}

LossBreakdown loss_total(const ModelOutputs& out, const Targets& gt, const ModelConfig& config) {
  Tensor aff_target = gt.affordance;
  if (!config.continuous_affordance_target) {
    std::vector<real> b(gt.affordance.size());
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = gt.affordance.values()[i] >= 0.5 ? 1.0 : 0.0;
    aff_target = Tensor::constant(gt.affordance.shape(), std::move(b));
  }
  // Affordance is one row over all N points.
  Tensor xa = ad::reshape(out.phi_a, {1, out.phi_a.size()});
  Tensor ya = ad::reshape(aff_target, {1, aff_target.size()});
  LossBreakdown l;
  l.affordance = dice_focal(xa, ya);
  l.contact = dice_focal(out.phi_c, gt.contact);
  l.total = ad::add(l.affordance, l.contact);
  if (!config.ablation.disable_semantic_head) {
    l.semantic = cross_entropy(out.phi_s, gt.label);
    l.total = ad::add(l.total, l.semantic);
  } else {
    l.semantic = Tensor::scalar(0.0);
  }
  return l;
}

}  // namespace choir::inline CHOIR_PRECISION_NS::model
