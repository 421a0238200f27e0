#pragma once

#include <string>
#include <string_view>

#include "metaemb/types.hpp"

namespace metaemb {

/// Pairwise dissimilarity between two encodings.
///
///   manhattan          sum |a - b|
///   euclidean          ||a - b||
///   cosine             1 - <a,b> / (||a|| ||b||)
///   asymmetric-cosine  1 - <a,b> / ||a||^2, clamped below at 0
enum class DistanceKind { Manhattan, Euclidean, Cosine, AsymmetricCosine };

std::string to_string(DistanceKind k);
DistanceKind parse_distance_kind(std::string_view s);
bool is_symmetric(DistanceKind k);

struct DistanceValue {
  double value = 0.0;
  bool clamped = false;  // asymmetric-cosine went negative and was clamped to 0
  RowVector grad_a;
  RowVector grad_b;
};

/// Distance with gradients w.r.t. both arguments. Cosine kinds throw
/// DistanceError on a zero-norm input. Manhattan uses subgradient 0 at ties.
DistanceValue pair_distance_grad(DistanceKind kind, const RowVector& a, const RowVector& b);
double pair_distance(DistanceKind kind, const RowVector& a, const RowVector& b);

/// Larger = more similar: cosine similarity, negated euclidean/manhattan
/// distance, or <a,b>/||a||^2 for asymmetric-cosine (unclamped).
double pair_similarity(DistanceKind kind, const RowVector& a, const RowVector& b);

}  // namespace metaemb
