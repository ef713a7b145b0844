#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace attitude {

/// A0→A1 polarity of a frame entry. Row order of the polarity embedding table.
enum class Polarity : std::uint8_t { Positive = 0, Negative = 1, Neutral = 2 };

std::string_view to_string(Polarity p);
/// Accepts "pos"/"neg"/"neu" and the long forms.
std::optional<Polarity> parse_polarity(std::string_view s);

inline constexpr std::string_view kDefaultNegation = "не";

class FrameLexicon {
 public:
  /// Lemmas are case-folded. Throws DataError on an empty or duplicate entry.
  void add(std::vector<std::string> lemmas, Polarity polarity);

  std::optional<Polarity> find(const std::vector<std::string>& lemmas) const;
  std::size_t size() const { return entries_.size(); }
  std::size_t max_entry_len() const { return max_len_; }
  const std::map<std::vector<std::string>, Polarity>& entries() const { return entries_; }

 private:
  std::map<std::vector<std::string>, Polarity> entries_;
  std::size_t max_len_ = 0;
};

/// Lines `lemma[ lemma...]<TAB>pos|neg|neu`.
FrameLexicon load_frame_lexicon(const std::filesystem::path& path);

struct FrameMatch {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
  Polarity polarity = Polarity::Neutral;

  friend bool operator==(const FrameMatch&, const FrameMatch&) = default;
};

/// Greedy left-to-right longest match. Returned spans are sorted and disjoint.
std::vector<FrameMatch> match_frames(const std::vector<std::string>& lemmas, const FrameLexicon& lex);

/// Swaps positive and negative when `preceding_lemma` is the negation particle.
Polarity apply_negation(Polarity polarity, std::string_view preceding_lemma,
                        std::string_view negation = kDefaultNegation);

/// Case-folded lemma set (sentiment words, prepositions).
class LemmaSet {
 public:
  LemmaSet() = default;
  LemmaSet(std::initializer_list<std::string_view> lemmas);

  void add(std::string_view lemma);
  bool contains(std::string_view lemma) const;
  std::size_t size() const { return lemmas_.size(); }
  const std::set<std::string, std::less<>>& lemmas() const { return lemmas_; }

 private:
  std::set<std::string, std::less<>> lemmas_;
};

using SentimentLexicon = LemmaSet;
using PrepositionList = LemmaSet;

/// One lemma per line; blank lines are skipped.
LemmaSet load_lemma_list(const std::filesystem::path& path);

bool in_sentiment_lexicon(std::string_view lemma, const SentimentLexicon& lex);
bool is_preposition(std::string_view lemma, const PrepositionList& list);

struct Lexicons {
  FrameLexicon frames;
  SentimentLexicon sentiment;
  PrepositionList prepositions;
  std::string negation{kDefaultNegation};
};

/// Reads `frames.tsv`, `sentiment.txt` and `prepositions.txt` from `dir`, plus
/// an optional one-line `negation.txt`. All three lists are required.
Lexicons load_lexicons(const std::filesystem::path& dir);
void write_lexicons(const Lexicons& lex, const std::filesystem::path& dir);

}  // namespace attitude
