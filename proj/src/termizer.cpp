#include "attitude/termizer.hpp"

#include <algorithm>
#include <regex>

#include "attitude/errors.hpp"
#include "attitude/text.hpp"

namespace attitude {

std::string_view to_string(TermKind kind) {
  switch (kind) {
    case TermKind::Word: return "word";
    case TermKind::EntitySubj: return "e_subj";
    case TermKind::EntityObj: return "e_obj";
    case TermKind::EntityOther: return "e";
    case TermKind::Frame: return "frame";
    case TermKind::Token: return "token";
  }
  return "word";
}

std::string_view to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::Punctuation: return "punct";
    case TokenKind::Number: return "number";
    case TokenKind::Url: return "url";
  }
  return "punct";
}

std::optional<TermKind> parse_term_kind(std::string_view s) {
  for (auto k : {TermKind::Word, TermKind::EntitySubj, TermKind::EntityObj, TermKind::EntityOther, TermKind::Frame,
                 TermKind::Token}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::optional<TokenKind> parse_token_kind(std::string_view s) {
  for (auto k : {TokenKind::Punctuation, TokenKind::Number, TokenKind::Url}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::string_view to_string(AnalysisGroup g) {
  switch (g) {
    case AnalysisGroup::Prep: return "PREP";
    case AnalysisGroup::Frames: return "FRAMES";
    case AnalysisGroup::Sentiment: return "SENTIMENT";
    case AnalysisGroup::Other: return "OTHER";
  }
  return "OTHER";
}

std::optional<AnalysisGroup> parse_analysis_group(std::string_view s) {
  for (auto g : {AnalysisGroup::Prep, AnalysisGroup::Frames, AnalysisGroup::Sentiment, AnalysisGroup::Other}) {
    if (to_string(g) == s) return g;
  }
  return std::nullopt;
}

Term Term::word(std::string lemma, std::string surface) {
  Term t;
  t.kind = TermKind::Word;
  if (surface.empty()) surface = lemma;
  t.lemma = std::move(lemma);
  t.surface = std::move(surface);
  return t;
}

Term Term::frame(std::string lemma, Polarity p, std::string surface) {
  Term t;
  t.kind = TermKind::Frame;
  if (surface.empty()) surface = lemma;
  t.lemma = std::move(lemma);
  t.surface = std::move(surface);
  t.polarity = p;
  return t;
}

Term Term::token_of(TokenKind k, std::string surface) {
  Term t;
  t.kind = TermKind::Token;
  t.token = k;
  t.surface = std::move(surface);
  return t;
}

Term Term::entity(TermKind k, std::string surface) {
  Term t;
  t.kind = k;
  t.surface = std::move(surface);
  return t;
}

std::string Term::display() const {
  switch (kind) {
    case TermKind::EntitySubj: return "E_subj";
    case TermKind::EntityObj: return "E_obj";
    case TermKind::EntityOther: return "E";
    default: return surface.empty() ? lemma : surface;
  }
}

bool TermSequence::valid() const {
  if (terms.empty() || subj_pos >= terms.size() || obj_pos >= terms.size() || subj_pos == obj_pos) return false;
  std::size_t subj = 0;
  std::size_t obj = 0;
  for (const auto& t : terms) {
    subj += t.kind == TermKind::EntitySubj;
    obj += t.kind == TermKind::EntityObj;
  }
  return subj == 1 && obj == 1 && terms[subj_pos].kind == TermKind::EntitySubj &&
         terms[obj_pos].kind == TermKind::EntityObj;
}

std::string lemmatize(std::string_view token) { return text::to_lower(token); }

std::optional<TokenKind> classify_token(std::string_view token) {
  if (token.empty()) return std::nullopt;
  if (token.starts_with("http://") || token.starts_with("https://") || token.starts_with("www.")) {
    return TokenKind::Url;
  }
  static const std::regex number(R"([+-]?(\d+([.,]\d*)?|[.,]\d+)([eE][+-]?\d+)?)");
  if (std::regex_match(token.begin(), token.end(), number)) return TokenKind::Number;
  const auto cps = text::decode_utf8(token);
  if (std::all_of(cps.begin(), cps.end(), [](char32_t c) { return text::is_punctuation(c); })) {
    return TokenKind::Punctuation;
  }
  return std::nullopt;
}

TermSequence build_term_sequence(const std::vector<std::string>& tokens, std::span<const SpanMention> mentions,
                                 std::size_t subj, std::size_t obj, std::span<const FrameMatch> frames,
                                 const Lexicons& lex, const Lemmatizer& lemmatizer) {
  if (subj >= mentions.size() || obj >= mentions.size()) throw DataError("subject or object mention is absent");
  if (subj == obj) throw DataError("subject and object refer to the same mention");

  // Per-token owner: -1 plain, otherwise mention index; frame starts tracked separately.
  std::vector<long> mention_at(tokens.size(), -1);
  for (std::size_t i = 0; i < mentions.size(); ++i) {
    const auto& m = mentions[i];
    if (m.begin >= m.end || m.end > tokens.size()) throw DataError("mention span out of sentence bounds");
    for (std::size_t t = m.begin; t < m.end; ++t) mention_at[t] = static_cast<long>(i);
  }
  std::vector<const FrameMatch*> frame_at(tokens.size(), nullptr);
  for (const auto& f : frames) {
    if (f.end > tokens.size() || f.begin >= f.end) continue;
    bool overlaps = false;
    for (std::size_t t = f.begin; t < f.end; ++t) overlaps = overlaps || mention_at[t] >= 0;
    if (!overlaps) frame_at[f.begin] = &f;
  }

  TermSequence seq;
  bool have_subj = false;
  bool have_obj = false;
  std::size_t i = 0;
  while (i < tokens.size()) {
    if (mention_at[i] >= 0) {
      const auto idx = static_cast<std::size_t>(mention_at[i]);
      const auto& m = mentions[idx];
      std::vector<std::string> surface(tokens.begin() + static_cast<std::ptrdiff_t>(m.begin),
                                       tokens.begin() + static_cast<std::ptrdiff_t>(m.end));
      TermKind kind = TermKind::EntityOther;
      if (idx == subj) {
        kind = TermKind::EntitySubj;
        seq.subj_pos = seq.terms.size();
        have_subj = true;
      } else if (idx == obj) {
        kind = TermKind::EntityObj;
        seq.obj_pos = seq.terms.size();
        have_obj = true;
      }
      seq.terms.push_back(Term::entity(kind, text::join(surface, " ")));
      i = m.end;
      continue;
    }
    if (const FrameMatch* f = frame_at[i]) {
      std::vector<std::string> lemmas;
      std::vector<std::string> surface;
      for (std::size_t t = f->begin; t < f->end; ++t) {
        lemmas.push_back(lemmatizer(tokens[t]));
        surface.push_back(tokens[t]);
      }
      const std::string preceding = f->begin > 0 ? lemmatizer(tokens[f->begin - 1]) : std::string();
      const Polarity p = apply_negation(f->polarity, preceding, lex.negation);
      seq.terms.push_back(Term::frame(text::join(lemmas, " "), p, text::join(surface, " ")));
      i = f->end;
      continue;
    }
    if (const auto kind = classify_token(tokens[i])) {
      seq.terms.push_back(Term::token_of(*kind, tokens[i]));
    } else {
      seq.terms.push_back(Term::word(lemmatizer(tokens[i]), tokens[i]));
    }
    ++i;
  }
  if (!have_subj || !have_obj) throw DataError("subject or object mention is absent");
  return seq;
}

TermSequence termize(const Document& doc, const ContextAnchor& anchor, const Lexicons& lex,
                     const Lemmatizer& lemmatizer) {
  if (anchor.sentence_idx >= doc.sentences.size()) throw DataError("context sentence out of range");
  const auto& tokens = doc.sentences[anchor.sentence_idx].tokens;
  std::vector<std::string> lemmas;
  lemmas.reserve(tokens.size());
  for (const auto& t : tokens) lemmas.push_back(lemmatizer(t));

  std::vector<SpanMention> spans;
  std::vector<bool> covered(tokens.size(), false);
  std::size_t subj = spans.size();
  std::size_t obj = spans.size();
  bool found_subj = false;
  bool found_obj = false;
  for (std::size_t i = 0; i < doc.mentions.size(); ++i) {
    const auto& m = doc.mentions[i];
    if (m.sentence_idx != anchor.sentence_idx) continue;
    if (i == anchor.subj_mention) {
      subj = spans.size();
      found_subj = true;
    }
    if (i == anchor.obj_mention) {
      obj = spans.size();
      found_obj = true;
    }
    spans.push_back({m.begin, m.end});
    for (std::size_t t = m.begin; t < m.end && t < covered.size(); ++t) covered[t] = true;
  }
  if (!found_subj || !found_obj) throw DataError("context anchor mentions are not in its sentence");

  // Unannotated occurrences of synonym variants are masked as other entities.
  std::vector<std::vector<std::string>> variants;
  std::size_t longest = 0;
  for (const auto& g : doc.groups) {
    for (const auto& v : g.variants) {
      std::vector<std::string> parts;
      for (const auto& p : text::split_whitespace(v)) parts.push_back(lemmatizer(p));
      if (parts.empty()) continue;
      longest = std::max(longest, parts.size());
      variants.push_back(std::move(parts));
    }
  }
  std::size_t i = 0;
  while (i < tokens.size()) {
    std::size_t best = 0;
    for (const auto& v : variants) {
      if (v.size() <= best || i + v.size() > tokens.size()) continue;
      bool ok = true;
      for (std::size_t k = 0; ok && k < v.size(); ++k) ok = !covered[i + k] && lemmas[i + k] == v[k];
      if (ok) best = v.size();
    }
    if (best > 0) {
      spans.push_back({i, i + best});
      i += best;
    } else {
      ++i;
    }
  }

  const auto frames = match_frames(lemmas, lex.frames);
  return build_term_sequence(tokens, spans, subj, obj, frames, lex, lemmatizer);
}

std::optional<TermSequence> crop_to_window(const TermSequence& seq, std::size_t n) {
  if (seq.size() <= n) return seq;
  const std::size_t lo = std::min(seq.subj_pos, seq.obj_pos);
  const std::size_t hi = std::max(seq.subj_pos, seq.obj_pos);
  if (hi - lo + 1 > n) return std::nullopt;
  const std::size_t mid = (lo + hi) / 2;
  std::size_t start = mid >= n / 2 ? mid - n / 2 : 0;
  start = std::min(start, seq.size() - n);
  if (start > lo) start = lo;
  if (start + n <= hi) start = hi + 1 - n;

  TermSequence out;
  out.terms.assign(seq.terms.begin() + static_cast<std::ptrdiff_t>(start),
                   seq.terms.begin() + static_cast<std::ptrdiff_t>(start + n));
  out.subj_pos = seq.subj_pos - start;
  out.obj_pos = seq.obj_pos - start;
  return out;
}

AnalysisGroup group_of(const Term& term, const Lexicons& lex) {
  if (term.kind == TermKind::Frame) return AnalysisGroup::Frames;
  if (term.kind != TermKind::Word) return AnalysisGroup::Other;
  if (in_sentiment_lexicon(term.lemma, lex.sentiment)) return AnalysisGroup::Sentiment;
  if (is_preposition(term.lemma, lex.prepositions)) return AnalysisGroup::Prep;
  return AnalysisGroup::Other;
}

}  // namespace attitude
