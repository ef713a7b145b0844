#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "attitude/corpus.hpp"
#include "attitude/lexicons.hpp"
#include "attitude/termizer.hpp"

namespace attitude {

/// A termized classification instance.
struct ContextSample {
  std::string doc_id;
  std::size_t sentence_idx = 0;
  std::string source_group;
  std::string target_group;
  Label label = Label::Neutral;
  TermSequence terms;
  /// Analysis group of every term, fixed at preparation time.
  std::vector<AnalysisGroup> groups;
};

/// Everything training and evaluation need: documents, gold opinions
/// (annotated and augmented) and termized contexts.
struct PreparedCorpus {
  std::vector<DocumentInfo> documents;
  std::vector<Opinion> opinions;
  std::vector<ContextSample> contexts;
  std::size_t max_length = 0;
  /// Contexts whose participants do not fit in the window.
  std::size_t dropped = 0;

  /// Documents (with their opinions and contexts) whose ids are in `ids`.
  PreparedCorpus subset(const std::set<std::string>& ids) const;
  std::vector<std::string> doc_ids() const;
};

/// Augments neutral pairs, extracts and termizes contexts, crops them to `n`.
PreparedCorpus prepare_corpus(const Corpus& corpus, const Lexicons& lex, std::size_t n,
                              const Lemmatizer& lemmatizer = lemmatize);

/// Line-delimited JSON with "document", "opinion" and "context" records.
/// Output is deterministic for a given corpus.
void write_cache(const PreparedCorpus& prepared, const std::filesystem::path& path);
PreparedCorpus read_cache(const std::filesystem::path& path);

struct LabelCounts {
  std::size_t positive = 0;
  std::size_t negative = 0;
  std::size_t neutral = 0;
};

LabelCounts count_labels(const std::vector<ContextSample>& contexts);

}  // namespace attitude
