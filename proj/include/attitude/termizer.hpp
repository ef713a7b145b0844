#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "attitude/corpus.hpp"
#include "attitude/lexicons.hpp"

namespace attitude {

enum class TokenKind : std::uint8_t { Punctuation, Number, Url };

enum class TermKind : std::uint8_t { Word, EntitySubj, EntityObj, EntityOther, Frame, Token };

std::string_view to_string(TermKind kind);
std::string_view to_string(TokenKind kind);
std::optional<TermKind> parse_term_kind(std::string_view s);
std::optional<TokenKind> parse_token_kind(std::string_view s);

struct Term {
  TermKind kind = TermKind::Word;
  /// Lemma for Word and Frame terms (frames join multi-word lemmas with a space).
  std::string lemma;
  /// Original surface text, kept for heatmaps.
  std::string surface;
  Polarity polarity = Polarity::Neutral;  // Frame only
  TokenKind token = TokenKind::Punctuation;  // Token only

  static Term word(std::string lemma, std::string surface = {});
  static Term frame(std::string lemma, Polarity p, std::string surface = {});
  static Term token_of(TokenKind k, std::string surface = {});
  static Term entity(TermKind k, std::string surface = {});

  /// Mask name for entities, surface otherwise.
  std::string display() const;

  friend bool operator==(const Term&, const Term&) = default;
};

struct TermSequence {
  std::vector<Term> terms;
  std::size_t subj_pos = 0;
  std::size_t obj_pos = 0;

  std::size_t size() const { return terms.size(); }
  /// Exactly one subject and object mask at the recorded positions.
  bool valid() const;
};

enum class AnalysisGroup : std::uint8_t { Prep, Frames, Sentiment, Other };

inline constexpr std::size_t kNumAnalysisGroups = 4;

std::string_view to_string(AnalysisGroup g);
std::optional<AnalysisGroup> parse_analysis_group(std::string_view s);

using Lemmatizer = std::function<std::string(std::string_view)>;

/// Default lemmatizer: Unicode lowercasing.
std::string lemmatize(std::string_view token);

/// url > number > punctuation; nullopt for ordinary words.
std::optional<TokenKind> classify_token(std::string_view token);

/// A mention inside the sentence being termized.
struct SpanMention {
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Maps sentence tokens to terms. `mentions` are the entity spans of the
/// sentence; `subj` and `obj` index into it. Frame matches that overlap a
/// mention are ignored; frame polarity is negated by an immediately preceding
/// negation particle. Throws DataError when subj/obj are invalid.
TermSequence build_term_sequence(const std::vector<std::string>& tokens, std::span<const SpanMention> mentions,
                                 std::size_t subj, std::size_t obj, std::span<const FrameMatch> frames,
                                 const Lexicons& lex, const Lemmatizer& lemmatizer = lemmatize);

/// Termizes one extracted context of `doc`: annotated mentions plus any
/// unannotated occurrence of a synonym-group variant become entity masks.
TermSequence termize(const Document& doc, const ContextAnchor& anchor, const Lexicons& lex,
                     const Lemmatizer& lemmatizer = lemmatize);

/// Keeps a window of `n` terms centred between the participants. Returns
/// nullopt when the participants are farther apart than the window allows.
std::optional<TermSequence> crop_to_window(const TermSequence& seq, std::size_t n);

/// FRAMES > SENTIMENT > PREP precedence; everything else is OTHER.
AnalysisGroup group_of(const Term& term, const Lexicons& lex);

}  // namespace attitude
