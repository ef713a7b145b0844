#pragma once

#include <cstdint>
#include <filesystem>

#include "attitude/corpus.hpp"
#include "attitude/lexicons.hpp"

namespace attitude {

/// Planted-frame corpus: the label of an entity pair is the polarity of the
/// frame between them, flipped when the frame follows the negation particle.
/// Pairs without a sentiment frame are left unannotated (neutral after
/// augmentation). Opinions are annotated in both directions.
struct SyntheticConfig {
  std::size_t documents = 60;
  std::size_t filler_words = 90;
  std::size_t entities_per_doc = 4;
  std::size_t min_length = 7;
  std::size_t max_length = 14;
  double negation_rate = 0.25;
  /// Chance that a neutral pair sentence carries a neutral frame.
  double neutral_frame_rate = 0.2;
  std::uint64_t seed = 0;
};

struct SyntheticData {
  Corpus corpus;
  Lexicons lexicons;
};

SyntheticData generate_synthetic(const SyntheticConfig& cfg = {});

/// Writes `documents.jsonl`, `opinions.tsv` and `lexicons/` under `dir`.
void write_synthetic(const SyntheticData& data, const std::filesystem::path& dir);

}  // namespace attitude
