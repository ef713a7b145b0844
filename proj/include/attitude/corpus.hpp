#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace attitude {

/// Three-way sentiment label. Class indices follow declaration order.
enum class Label : std::uint8_t { Positive = 0, Negative = 1, Neutral = 2 };

inline constexpr std::size_t kNumClasses = 3;

std::string_view to_string(Label label);
/// Accepts "positive"/"pos", "negative"/"neg", "neutral"/"neu".
std::optional<Label> parse_label(std::string_view s);

enum class Provenance : std::uint8_t { Annotated, Augmented };

struct Sentence {
  std::vector<std::string> tokens;
  /// Character offset of each token in the space-joined sentence.
  std::vector<std::size_t> offsets;

  static Sentence from_tokens(std::vector<std::string> tokens);
  std::size_t size() const { return tokens.size(); }
};

struct EntityMention {
  std::size_t sentence_idx = 0;
  std::size_t begin = 0;  // token span [begin, end)
  std::size_t end = 0;
  std::string group_id;
};

struct SynonymGroup {
  std::string group_id;
  std::vector<std::string> variants;
};

struct Document {
  std::string doc_id;
  std::vector<Sentence> sentences;
  std::vector<EntityMention> mentions;
  std::vector<SynonymGroup> groups;

  const SynonymGroup* find_group(std::string_view id) const;
};

struct Opinion {
  std::string doc_id;
  std::string source_group;
  std::string target_group;
  Label label = Label::Neutral;
  Provenance provenance = Provenance::Annotated;

  friend bool operator==(const Opinion&, const Opinion&) = default;
};

struct Corpus {
  std::vector<Document> documents;
  std::vector<Opinion> opinions;
};

/// Parses a line-delimited JSON documents file. Throws ParseError with line info.
std::vector<Document> load_documents(const std::filesystem::path& path);
/// Parses `doc_id<TAB>source<TAB>target<TAB>label` lines. Neutral labels are rejected.
std::vector<Opinion> load_opinions(const std::filesystem::path& path);

/// Loads a corpus from a directory holding `documents.jsonl` and an optional
/// `opinions.tsv`, or from a single documents file (no opinions). Opinions are
/// validated against the documents' synonym groups.
Corpus load_corpus(const std::filesystem::path& path);
Corpus load_corpus(const std::filesystem::path& documents, const std::filesystem::path& opinions);

/// Throws DataError on out-of-range spans, overlapping spans or dangling group ids.
void validate_document(const Document& doc);

void write_documents(const std::vector<Document>& docs, const std::filesystem::path& path);
void write_opinions(const std::vector<Opinion>& opinions, const std::filesystem::path& path);

/// Adds a neutral opinion for every ordered pair of distinct groups that
/// co-occur in some sentence of `doc` and is not already present in `annotated`.
/// The input order is preserved; new pairs are appended in (source, target) order.
std::vector<Opinion> augment_neutral(const Document& doc, const std::vector<Opinion>& annotated);

/// One (opinion, sentence) classification instance before termization.
struct ContextAnchor {
  std::string doc_id;
  std::size_t sentence_idx = 0;
  std::string source_group;
  std::string target_group;
  Label label = Label::Neutral;
  std::size_t subj_mention = 0;  // index into Document::mentions
  std::size_t obj_mention = 0;
};

/// One context per (opinion, sentence) where both sides are mentioned. Among
/// several mentions the closest pair by start token wins; ties go to the
/// leftmost subject, then the leftmost object.
std::vector<ContextAnchor> extract_contexts(const Document& doc, const std::vector<Opinion>& opinions);

struct DocumentInfo {
  std::string doc_id;
  std::size_t sentence_count = 0;
};

struct FoldAssignment {
  std::map<std::string, std::size_t> fold_of_doc;
  std::vector<std::size_t> sentence_counts;

  std::size_t folds() const { return sentence_counts.size(); }
  std::vector<std::string> docs_in(std::size_t fold) const;
};

/// Greedy longest-first balancing of documents into k folds by sentence count.
/// Documents are shuffled with `seed` before a stable descending sort, so only
/// the order among equal-count documents depends on the seed.
FoldAssignment split_folds(const std::vector<Document>& docs, std::size_t k = 3, std::uint64_t seed = 0);
FoldAssignment split_folds(const std::vector<DocumentInfo>& docs, std::size_t k = 3, std::uint64_t seed = 0);

enum class Split : std::uint8_t { Train, Test };

using SplitManifest = std::map<std::string, Split>;

SplitManifest load_manifest(const std::filesystem::path& path);

/// Partitions documents by the manifest. Unknown or missing doc ids are errors.
std::pair<std::vector<Document>, std::vector<Document>> train_test_split(
    const std::vector<Document>& docs, const SplitManifest& manifest);

}  // namespace attitude
