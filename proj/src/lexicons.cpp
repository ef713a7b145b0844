#include "attitude/lexicons.hpp"

#include <fstream>

#include "attitude/errors.hpp"
#include "attitude/text.hpp"

namespace attitude {

std::string_view to_string(Polarity p) {
  switch (p) {
    case Polarity::Positive: return "pos";
    case Polarity::Negative: return "neg";
    case Polarity::Neutral: return "neu";
  }
  return "neu";
}

std::optional<Polarity> parse_polarity(std::string_view s) {
  if (s == "pos" || s == "positive") return Polarity::Positive;
  if (s == "neg" || s == "negative") return Polarity::Negative;
  if (s == "neu" || s == "neutral") return Polarity::Neutral;
  return std::nullopt;
}

void FrameLexicon::add(std::vector<std::string> lemmas, Polarity polarity) {
  if (lemmas.empty()) throw DataError("frame entry has no lemmas");
  for (auto& l : lemmas) l = text::to_lower(l);
  const std::size_t len = lemmas.size();
  if (!entries_.emplace(std::move(lemmas), polarity).second) throw DataError("duplicate frame entry");
  max_len_ = std::max(max_len_, len);
}

std::optional<Polarity> FrameLexicon::find(const std::vector<std::string>& lemmas) const {
  const auto it = entries_.find(lemmas);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

FrameLexicon load_frame_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open frame lexicon " + path.string());
  FrameLexicon lex;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    if (line.back() == '\r') line.pop_back();
    const auto fields = text::split(line, '\t');
    if (fields.size() != 2) throw ParseError(path.string(), lineno, "expected lemmas<TAB>polarity");
    const auto polarity = parse_polarity(text::trim(fields[1]));
    if (!polarity) throw ParseError(path.string(), lineno, "unknown polarity '" + fields[1] + "'");
    auto lemmas = text::split_whitespace(fields[0]);
    if (lemmas.empty()) throw ParseError(path.string(), lineno, "empty frame entry");
    try {
      lex.add(std::move(lemmas), *polarity);
    } catch (const DataError& e) {
      throw ParseError(path.string(), lineno, e.what());
    }
  }
  return lex;
}

std::vector<FrameMatch> match_frames(const std::vector<std::string>& lemmas, const FrameLexicon& lex) {
  std::vector<FrameMatch> out;
  std::vector<std::string> key;
  std::size_t i = 0;
  while (i < lemmas.size()) {
    bool matched = false;
    const std::size_t longest = std::min(lex.max_entry_len(), lemmas.size() - i);
    for (std::size_t len = longest; len >= 1; --len) {
      key.assign(lemmas.begin() + static_cast<std::ptrdiff_t>(i),
                 lemmas.begin() + static_cast<std::ptrdiff_t>(i + len));
      if (const auto p = lex.find(key)) {
        out.push_back({i, i + len, *p});
        i += len;
        matched = true;
        break;
      }
    }
    if (!matched) ++i;
  }
  return out;
}

Polarity apply_negation(Polarity polarity, std::string_view preceding_lemma, std::string_view negation) {
  if (preceding_lemma != negation) return polarity;
  switch (polarity) {
    case Polarity::Positive: return Polarity::Negative;
    case Polarity::Negative: return Polarity::Positive;
    case Polarity::Neutral: return Polarity::Neutral;
  }
  return polarity;
}

LemmaSet::LemmaSet(std::initializer_list<std::string_view> lemmas) {
  for (auto l : lemmas) add(l);
}

void LemmaSet::add(std::string_view lemma) { lemmas_.insert(text::to_lower(lemma)); }

bool LemmaSet::contains(std::string_view lemma) const {
  if (lemmas_.count(lemma)) return true;
  return lemmas_.count(text::to_lower(lemma)) > 0;
}

LemmaSet load_lemma_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open lemma list " + path.string());
  LemmaSet set;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = text::trim(line);
    if (!t.empty()) set.add(t);
  }
  return set;
}

bool in_sentiment_lexicon(std::string_view lemma, const SentimentLexicon& lex) { return lex.contains(lemma); }

bool is_preposition(std::string_view lemma, const PrepositionList& list) { return list.contains(lemma); }

Lexicons load_lexicons(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("lexicon directory not found: " + dir.string());
  for (const char* name : {"frames.tsv", "sentiment.txt", "prepositions.txt"}) {
    if (!std::filesystem::exists(dir / name)) throw DataError("missing lexicon file " + (dir / name).string());
  }
  Lexicons lex;
  lex.frames = load_frame_lexicon(dir / "frames.tsv");
  lex.sentiment = load_lemma_list(dir / "sentiment.txt");
  lex.prepositions = load_lemma_list(dir / "prepositions.txt");
  if (std::ifstream neg(dir / "negation.txt"); neg) {
    std::string line;
    if (std::getline(neg, line) && !text::trim(line).empty()) lex.negation = text::to_lower(text::trim(line));
  }
  return lex;
}

void write_lexicons(const Lexicons& lex, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto open = [&](const char* name) {
    std::ofstream out(dir / name);
    if (!out) throw DataError("cannot write " + (dir / name).string());
    return out;
  };
  auto frames = open("frames.tsv");
  for (const auto& [lemmas, polarity] : lex.frames.entries()) {
    frames << text::join(lemmas, " ") << '\t' << to_string(polarity) << '\n';
  }
  auto sentiment = open("sentiment.txt");
  for (const auto& l : lex.sentiment.lemmas()) sentiment << l << '\n';
  auto preps = open("prepositions.txt");
  for (const auto& l : lex.prepositions.lemmas()) preps << l << '\n';
  open("negation.txt") << lex.negation << '\n';
}

}  // namespace attitude
