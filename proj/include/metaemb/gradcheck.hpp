#pragma once

#include <optional>
#include <string>
#include <vector>

#include "metaemb/tensor_core.hpp"

namespace metaemb {

/// Small-network description for the finite-difference suite.
struct GradCheckSpec {
  Index input_dim = 6;
  Index hidden_dim = 8;
  Index tower_hidden = 6;
  Index tower_out = 4;
  Index batch = 4;
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  double dropout_p = 0.2;
  double init_std = 0.5;
  std::uint64_t seed = 13;
  /// Test hook: a parameter name (as reported by the suite) whose analytic
  /// gradient is perturbed before comparison.
  std::optional<std::string> corrupt_parameter;

  /// Throws ConfigError unless every width is <= 16 and batch <= 8.
  void validate() const;
};

struct GradCheckCase {
  std::string name;  // e.g. "recon/scp", "daeme/kl", "mtl/brier/cosine"
  GradCheckReport report;
  bool passed = false;
};

struct GradCheckSuite {
  std::vector<GradCheckCase> cases;
  double tolerance = 1e-4;

  bool passed() const;
  const GradCheckCase* worst() const;
};

/// Runs every reconstruction loss through a plain autoencoder and both AEME
/// architectures, and every supervised loss with every distance kind through
/// the multi-task objective.
GradCheckSuite run_gradcheck_suite(const GradCheckSpec& spec);

}  // namespace metaemb
