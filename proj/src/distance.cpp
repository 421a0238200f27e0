#include "metaemb/distance.hpp"

#include "metaemb/errors.hpp"

namespace metaemb {

std::string to_string(DistanceKind k) {
  switch (k) {
    case DistanceKind::Manhattan: return "manhattan";
    case DistanceKind::Euclidean: return "euclidean";
    case DistanceKind::Cosine: return "cosine";
    case DistanceKind::AsymmetricCosine: return "asymmetric-cosine";
  }
  return "cosine";
}

DistanceKind parse_distance_kind(std::string_view s) {
  if (s == "manhattan" || s == "l1") return DistanceKind::Manhattan;
  if (s == "euclidean" || s == "l2") return DistanceKind::Euclidean;
  if (s == "cosine") return DistanceKind::Cosine;
  if (s == "asymmetric-cosine" || s == "asymmetric") return DistanceKind::AsymmetricCosine;
  throw ConfigError("unknown distance '" + std::string(s) +
                    "' (expected manhattan, euclidean, cosine or asymmetric-cosine)");
}

bool is_symmetric(DistanceKind k) { return k != DistanceKind::AsymmetricCosine; }

namespace {

void check_shapes(const RowVector& a, const RowVector& b) {
  if (a.size() != b.size()) throw ContractError("distance arguments differ in dimension");
}

}  // namespace

DistanceValue pair_distance_grad(DistanceKind kind, const RowVector& a, const RowVector& b) {
  check_shapes(a, b);
  DistanceValue d;
  switch (kind) {
    case DistanceKind::Manhattan: {
      const RowVector diff = a - b;
      d.value = diff.cwiseAbs().sum();
      d.grad_a = diff.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
      d.grad_b = -d.grad_a;
      break;
    }
    case DistanceKind::Euclidean: {
      const RowVector diff = a - b;
      d.value = diff.norm();
      d.grad_a = d.value > 0.0 ? RowVector(diff / d.value) : RowVector::Zero(a.size());
      d.grad_b = -d.grad_a;
      break;
    }
    case DistanceKind::Cosine: {
      const double na = a.norm();
      const double nb = b.norm();
      if (na == 0.0 || nb == 0.0) throw DistanceError("cosine distance undefined for a zero vector");
      const double c = a.dot(b) / (na * nb);
      d.value = 1.0 - c;
      d.grad_a = -(b / (na * nb) - c * a / (na * na));
      d.grad_b = -(a / (na * nb) - c * b / (nb * nb));
      break;
    }
    case DistanceKind::AsymmetricCosine: {
      const double sq = a.squaredNorm();
      if (sq == 0.0 || b.squaredNorm() == 0.0) {
        throw DistanceError("asymmetric cosine distance undefined for a zero vector");
      }
      const double dot = a.dot(b);
      const double raw = 1.0 - dot / sq;
      if (raw < 0.0) {
        d.value = 0.0;
        d.clamped = true;
        d.grad_a = RowVector::Zero(a.size());
        d.grad_b = RowVector::Zero(b.size());
      } else {
        d.value = raw;
        d.grad_a = -(b / sq - 2.0 * dot * a / (sq * sq));
        d.grad_b = -a / sq;
      }
      break;
    }
  }
  return d;
}

double pair_distance(DistanceKind kind, const RowVector& a, const RowVector& b) {
  return pair_distance_grad(kind, a, b).value;
}

double pair_similarity(DistanceKind kind, const RowVector& a, const RowVector& b) {
  check_shapes(a, b);
  switch (kind) {
    case DistanceKind::Manhattan: return -(a - b).cwiseAbs().sum();
    case DistanceKind::Euclidean: return -(a - b).norm();
    case DistanceKind::Cosine: {
      const double na = a.norm();
      const double nb = b.norm();
      if (na == 0.0 || nb == 0.0) throw DistanceError("cosine similarity undefined for a zero vector");
      return a.dot(b) / (na * nb);
    }
    case DistanceKind::AsymmetricCosine: {
      const double sq = a.squaredNorm();
      if (sq == 0.0 || b.squaredNorm() == 0.0) throw DistanceError("asymmetric cosine undefined for a zero vector");
      return a.dot(b) / sq;
    }
  }
  return 0.0;
}

}  // namespace metaemb
