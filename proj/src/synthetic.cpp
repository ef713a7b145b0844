#include "attitude/synthetic.hpp"

#include <algorithm>
#include <array>
#include <random>
#include <set>
#include <string>

#include "attitude/errors.hpp"

namespace attitude {

namespace {

using Rng = std::mt19937_64;

struct FrameEntry {
  std::vector<std::string> lemmas;
  Polarity polarity;
};

const std::vector<FrameEntry>& frame_entries() {
  static const std::vector<FrameEntry> entries = {
      {{"поддержать"}, Polarity::Positive},       {{"одобрить"}, Polarity::Positive},
      {{"помочь"}, Polarity::Positive},           {{"выступить", "за"}, Polarity::Positive},
      {{"заключить", "союз"}, Polarity::Positive}, {{"осудить"}, Polarity::Negative},
      {{"обвинить"}, Polarity::Negative},         {{"атаковать"}, Polarity::Negative},
      {{"выступить", "против"}, Polarity::Negative}, {{"ввести", "санкции"}, Polarity::Negative},
      {{"встретиться"}, Polarity::Neutral},       {{"обсудить"}, Polarity::Neutral},
  };
  return entries;
}

const std::array<std::array<const char*, 2>, 12> kEntities = {{
    {"россия", "рф"},      {"сша", "америка"},    {"китай", "кнр"},      {"франция", "париж"},
    {"германия", "берлин"}, {"украина", "киев"},   {"япония", "токио"},   {"индия", "дели"},
    {"турция", "анкара"},  {"иран", "тегеран"},   {"британия", "лондон"}, {"италия", "рим"},
}};

const std::array<const char*, 12> kSentimentWords = {"хороший", "плохой",   "успешный", "ужасный",
                                                     "прекрасный", "опасный", "важный",  "слабый",
                                                     "сильный", "честный",   "жестокий", "мирный"};

const std::array<const char*, 8> kPrepositions = {"в", "на", "с", "о", "по", "для", "из", "к"};

std::vector<std::string> make_filler_words(std::size_t count, Rng& rng) {
  static const std::array<const char*, 14> consonants = {"б", "в", "г", "д", "ж", "з", "к",
                                                         "л", "м", "н", "п", "р", "с", "т"};
  static const std::array<const char*, 6> vowels = {"а", "е", "и", "о", "у", "ы"};
  std::set<std::string> reserved = {"не"};
  for (const auto& e : frame_entries()) reserved.insert(e.lemmas.begin(), e.lemmas.end());
  for (const auto& e : kEntities) reserved.insert(e.begin(), e.end());
  reserved.insert(kSentimentWords.begin(), kSentimentWords.end());
  reserved.insert(kPrepositions.begin(), kPrepositions.end());

  std::vector<std::string> words;
  std::set<std::string> seen;
  std::uniform_int_distribution<std::size_t> syllables(2, 3);
  std::uniform_int_distribution<std::size_t> pick_c(0, consonants.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_v(0, vowels.size() - 1);
  while (words.size() < count) {
    std::string w;
    const std::size_t k = syllables(rng);
    for (std::size_t i = 0; i < k; ++i) {
      w += consonants[pick_c(rng)];
      w += vowels[pick_v(rng)];
    }
    if (reserved.count(w) || !seen.insert(w).second) continue;
    words.push_back(w);
  }
  return words;
}

struct Builder {
  const SyntheticConfig& cfg;
  const std::vector<std::string>& fillers;
  Rng& rng;

  bool chance(double p) { return std::bernoulli_distribution(p)(rng); }

  template <typename C>
  const auto& pick_item(const C& c) {
    return c[std::uniform_int_distribution<std::size_t>(0, c.size() - 1)(rng)];
  }

  template <typename C>
  std::string pick(const C& c) {
    return std::string(pick_item(c));
  }

  std::string filler() {
    const double r = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    if (r < 0.14) return pick(kPrepositions);
    if (r < 0.26) return pick(kSentimentWords);
    if (r < 0.29) return "не";
    if (r < 0.32) return ",";
    if (r < 0.34) return std::to_string(std::uniform_int_distribution<int>(2, 2020)(rng));
    return pick(fillers);
  }

  // Pieces are placed in order with random filler runs between them; the
  // returned offsets are the token index of each piece.
  std::vector<std::size_t> layout(std::vector<std::vector<std::string>> pieces, std::vector<std::string>& tokens,
                                  const std::vector<bool>& guard_before) {
    std::size_t used = 0;
    for (const auto& p : pieces) used += p.size();
    const std::size_t target = std::uniform_int_distribution<std::size_t>(cfg.min_length, cfg.max_length)(rng);
    const std::size_t extra = target > used + 1 ? target - used - 1 : 0;
    std::vector<std::size_t> gaps(pieces.size() + 1, 0);
    std::uniform_int_distribution<std::size_t> slot(0, gaps.size() - 1);
    for (std::size_t i = 0; i < extra; ++i) ++gaps[slot(rng)];

    std::vector<std::size_t> at;
    for (std::size_t i = 0; i <= pieces.size(); ++i) {
      for (std::size_t g = 0; g < gaps[i]; ++g) {
        std::string w = filler();
        // A stray negation right before a frame would change its polarity.
        if (g + 1 == gaps[i] && i < pieces.size() && guard_before[i]) {
          while (w == "не") w = pick(fillers);
        }
        tokens.push_back(std::move(w));
      }
      if (i < pieces.size()) {
        at.push_back(tokens.size());
        for (auto& t : pieces[i]) tokens.push_back(std::move(t));
      }
    }
    tokens.push_back(".");
    return at;
  }
};

}  // namespace

SyntheticData generate_synthetic(const SyntheticConfig& cfg) {
  if (cfg.entities_per_doc < 3 || cfg.entities_per_doc > kEntities.size()) {
    throw std::invalid_argument("entities_per_doc must lie in [3, 12]");
  }
  if (cfg.min_length > cfg.max_length) throw std::invalid_argument("min_length exceeds max_length");
  Rng rng(cfg.seed);

  SyntheticData data;
  for (const auto& e : frame_entries()) data.lexicons.frames.add(e.lemmas, e.polarity);
  for (const char* w : kSentimentWords) data.lexicons.sentiment.add(w);
  for (const char* w : kPrepositions) data.lexicons.prepositions.add(w);

  const auto fillers = make_filler_words(cfg.filler_words, rng);
  Builder b{cfg, fillers, rng};

  std::vector<const FrameEntry*> positive, negative, neutral;
  for (const auto& e : frame_entries()) {
    (e.polarity == Polarity::Positive ? positive : e.polarity == Polarity::Negative ? negative : neutral).push_back(&e);
  }

  for (std::size_t d = 0; d < cfg.documents; ++d) {
    Document doc;
    doc.doc_id = "doc" + std::string(d < 10 ? "00" : d < 100 ? "0" : "") + std::to_string(d);

    std::vector<std::size_t> ents(kEntities.size());
    for (std::size_t i = 0; i < ents.size(); ++i) ents[i] = i;
    std::shuffle(ents.begin(), ents.end(), rng);
    ents.resize(cfg.entities_per_doc);
    for (std::size_t e : ents) {
      doc.groups.push_back({"e" + std::to_string(e), {kEntities[e][0], kEntities[e][1]}});
    }

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < ents.size(); ++i) {
      for (std::size_t j = i + 1; j < ents.size(); ++j) pairs.emplace_back(ents[i], ents[j]);
    }
    std::shuffle(pairs.begin(), pairs.end(), rng);
    const std::size_t n_sent = std::min<std::size_t>(pairs.size() - 1, b.chance(0.5) ? 3 : 2);
    const std::size_t n_neu = std::min<std::size_t>(pairs.size() - n_sent, b.chance(0.5) ? 3 : 2);

    struct Plan {
      std::size_t a, b;
      std::optional<Label> label;  // unset for neutral pairs
      bool single = false;
    };
    std::vector<Plan> plans;
    for (std::size_t i = 0; i < n_sent; ++i) {
      const Label l = i == 0 ? Label::Positive : i == 1 ? Label::Negative : (b.chance(0.5) ? Label::Positive : Label::Negative);
      plans.push_back({pairs[i].first, pairs[i].second, l});
    }
    for (std::size_t i = 0; i < n_neu; ++i) plans.push_back({pairs[n_sent + i].first, pairs[n_sent + i].second, {}});
    const std::size_t n_single = b.chance(0.5) ? 2 : 1;
    for (std::size_t i = 0; i < n_single; ++i) plans.push_back({b.pick_item(ents), 0, {}, true});
    std::shuffle(plans.begin(), plans.end(), rng);

    for (const auto& plan : plans) {
      const std::size_t sidx = doc.sentences.size();
      std::vector<std::string> tokens;
      const auto surface = [&](std::size_t e) { return std::string(kEntities[e][b.chance(0.7) ? 0 : 1]); };

      if (plan.single) {
        std::vector<std::vector<std::string>> pieces = {{surface(plan.a)}};
        std::vector<bool> guard = {false};
        if (b.chance(0.4)) {
          pieces.push_back(b.pick_item(frame_entries()).lemmas);
          guard.push_back(true);
        }
        const auto at = b.layout(pieces, tokens, guard);
        doc.mentions.push_back({sidx, at[0], at[0] + 1, "e" + std::to_string(plan.a)});
      } else {
        std::size_t first = plan.a, second = plan.b;
        if (b.chance(0.5)) std::swap(first, second);
        std::vector<std::string> frame;
        if (plan.label) {
          const bool negate = b.chance(cfg.negation_rate);
          const bool want_positive = (*plan.label == Label::Positive) != negate;
          frame = b.pick_item(want_positive ? positive : negative)->lemmas;
          if (negate) frame.insert(frame.begin(), "не");
        } else if (b.chance(cfg.neutral_frame_rate)) {
          frame = b.pick_item(neutral)->lemmas;
        }

        std::vector<std::vector<std::string>> pieces = {{surface(first)}, {surface(second)}};
        std::vector<bool> guard = {false, false};
        std::size_t first_at = 0, second_at = 1;
        if (!frame.empty()) {
          const double r = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
          const std::size_t where = r < 0.7 ? 1 : r < 0.85 ? 2 : 0;
          pieces.insert(pieces.begin() + static_cast<std::ptrdiff_t>(where), frame);
          guard.insert(guard.begin() + static_cast<std::ptrdiff_t>(where), true);
          first_at = where == 0 ? 1 : 0;
          second_at = where == 2 ? 1 : 2;
        }
        const auto at = b.layout(pieces, tokens, guard);
        doc.mentions.push_back({sidx, at[first_at], at[first_at] + 1, "e" + std::to_string(first)});
        doc.mentions.push_back({sidx, at[second_at], at[second_at] + 1, "e" + std::to_string(second)});
        if (plan.label) {
          const std::string ga = "e" + std::to_string(plan.a), gb = "e" + std::to_string(plan.b);
          data.corpus.opinions.push_back({doc.doc_id, ga, gb, *plan.label, Provenance::Annotated});
          data.corpus.opinions.push_back({doc.doc_id, gb, ga, *plan.label, Provenance::Annotated});
        }
      }
      doc.sentences.push_back(Sentence::from_tokens(std::move(tokens)));
    }
    validate_document(doc);
    data.corpus.documents.push_back(std::move(doc));
  }
  return data;
}

void write_synthetic(const SyntheticData& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_documents(data.corpus.documents, dir / "documents.jsonl");
  write_opinions(data.corpus.opinions, dir / "opinions.tsv");
  write_lexicons(data.lexicons, dir / "lexicons");
}

}  // namespace attitude
