#pragma once

#include <cstdint>
#include <vector>

#include "attitude/model.hpp"

namespace attitude {

struct GradcheckConfig {
  std::size_t trials = 20;
  std::uint64_t seed = 0;
  double eps = 1e-5;
  double tolerance = 1e-4;
};

struct EncoderGradResult {
  EncoderKind kind = EncoderKind::Cnn;
  std::size_t trials = 0;
  double max_error = 0.0;
  double seconds = 0.0;

  bool passed(double tolerance) const { return max_error < tolerance; }
};

/// A small random model (n <= 10, h <= 8, filters <= 6) with a random context
/// and gold label.
struct GradcheckInstance {
  ModelConfig config;
  TermSequence terms;
  Label label = Label::Neutral;
  std::unique_ptr<ContextClassifier> model;
};

GradcheckInstance random_gradcheck_instance(EncoderKind kind, tg::Rng& rng);

/// Random context of length `length` over a small vocabulary, with distinct
/// subject and object positions and occasional frames and tokens.
TermSequence random_term_sequence(std::size_t length, tg::Rng& rng);

/// Central-difference check of the full model loss for every encoder kind.
std::vector<EncoderGradResult> run_gradient_suite(const GradcheckConfig& cfg = {});

}  // namespace attitude
