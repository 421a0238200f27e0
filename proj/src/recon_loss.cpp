#include "metaemb/recon_loss.hpp"

#include <cmath>

#include "metaemb/errors.hpp"

namespace metaemb {

std::string to_string(ReconLossKind k) {
  switch (k) {
    case ReconLossKind::MSE: return "mse";
    case ReconLossKind::MAE: return "mae";
    case ReconLossKind::KL: return "kl";
    case ReconLossKind::SCP: return "scp";
  }
  return "mse";
}

ReconLossKind parse_recon_loss(std::string_view s) {
  if (s == "mse" || s == "l2") return ReconLossKind::MSE;
  if (s == "mae" || s == "l1") return ReconLossKind::MAE;
  if (s == "kl") return ReconLossKind::KL;
  if (s == "scp" || s == "cosine") return ReconLossKind::SCP;
  throw ConfigError("unknown reconstruction loss '" + std::string(s) + "' (expected mse, mae, kl or scp)");
}

namespace {

Matrix log_softmax_rows(const Matrix& z) {
  Matrix out(z.rows(), z.cols());
  for (Index i = 0; i < z.rows(); ++i) {
    const double mx = z.row(i).maxCoeff();
    const double lse = mx + std::log((z.row(i).array() - mx).exp().sum());
    out.row(i) = z.row(i).array() - lse;
  }
  return out;
}

LossValue squared_cosine_proximity(const Matrix& pred, const Matrix& target) {
  LossValue lv;
  lv.grad = Matrix::Zero(pred.rows(), pred.cols());
  for (Index i = 0; i < pred.rows(); ++i) {
    const double np = pred.row(i).norm();
    const double nt = target.row(i).norm();
    if (np == 0.0 || nt == 0.0) {
      throw LossError("squared cosine proximity undefined for zero row " + std::to_string(i));
    }
    const double c = pred.row(i).dot(target.row(i)) / (np * nt);
    const double r = 1.0 - c;
    lv.value += r * r;
    // d cos / d pred = target/(|p||t|) - c * pred/|p|^2
    lv.grad.row(i) = -2.0 * r * (target.row(i) / (np * nt) - c * pred.row(i) / (np * np));
  }
  return lv;
}

}  // namespace

LossValue recon_loss(ReconLossKind kind, const Matrix& predicted, const Matrix& target) {
  if (predicted.rows() != target.rows() || predicted.cols() != target.cols()) {
    throw ContractError("recon_loss: predicted and target shapes differ");
  }
  if (predicted.rows() < 1) throw ContractError("recon_loss: empty batch");
  const double m = static_cast<double>(predicted.rows());
  LossValue lv;
  switch (kind) {
    case ReconLossKind::MSE: {
      const Matrix diff = predicted - target;
      lv.value = diff.squaredNorm() / m;
      lv.grad = 2.0 * diff / m;
      break;
    }
    case ReconLossKind::MAE: {
      const Matrix diff = predicted - target;
      lv.value = diff.cwiseAbs().sum() / m;
      lv.grad = diff.unaryExpr([](double d) { return d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0); }) / m;
      break;
    }
    case ReconLossKind::KL: {
      const Matrix log_p = log_softmax_rows(target);
      const Matrix log_q = log_softmax_rows(predicted);
      const Matrix p = log_p.array().exp().matrix();
      lv.value = (p.array() * (log_p - log_q).array()).sum() / m;
      // Clamp tiny negative round-off: KL is non-negative by construction.
      if (lv.value < 0.0) lv.value = 0.0;
      lv.grad = (log_q.array().exp().matrix() - p) / m;
      break;
    }
    case ReconLossKind::SCP: lv = squared_cosine_proximity(predicted, target); break;
  }
  return lv;
}

LossValue recon_loss_mean(ReconLossKind kind, const Matrix& predicted, const Matrix& target) {
  LossValue lv = recon_loss(kind, predicted, target);
  if (kind == ReconLossKind::SCP) {
    const double m = static_cast<double>(predicted.rows());
    lv.value /= m;
    lv.grad /= m;
  }
  return lv;
}

}  // namespace metaemb
