#include <gtest/gtest.h>

#include <random>

#include "attitude/errors.hpp"
#include "attitude/termizer.hpp"

using namespace attitude;

namespace {

Lexicons make_lexicons() {
  Lexicons lex;
  lex.frames.add({"condemn"}, Polarity::Negative);
  lex.frames.add({"одобрить"}, Polarity::Positive);
  lex.frames.add({"выступить", "за"}, Polarity::Positive);
  lex.frames.add({"встретиться"}, Polarity::Neutral);
  lex.sentiment.add("хороший");
  lex.sentiment.add("против");
  lex.prepositions.add("в");
  lex.prepositions.add("против");
  return lex;
}

TermSequence seq_of_length(std::size_t len, std::size_t subj, std::size_t obj) {
  TermSequence s;
  for (std::size_t i = 0; i < len; ++i) s.terms.push_back(Term::word("w" + std::to_string(i)));
  s.terms[subj] = Term::entity(TermKind::EntitySubj);
  s.terms[obj] = Term::entity(TermKind::EntityObj);
  s.subj_pos = subj;
  s.obj_pos = obj;
  return s;
}

}  // namespace

TEST(Lemmatize, Lowercases) {
  EXPECT_EQ(lemmatize("Moscow"), "moscow");
  EXPECT_EQ(lemmatize(""), "");
  EXPECT_EQ(lemmatize("NATO"), "nato");
  EXPECT_EQ(lemmatize("Россия"), "россия");
}

TEST(ClassifyToken, Kinds) {
  EXPECT_EQ(classify_token(","), TokenKind::Punctuation);
  EXPECT_EQ(classify_token("«»"), TokenKind::Punctuation);
  EXPECT_EQ(classify_token("1945"), TokenKind::Number);
  EXPECT_EQ(classify_token("3.14"), TokenKind::Number);
  EXPECT_EQ(classify_token("-2"), TokenKind::Number);
  EXPECT_EQ(classify_token("https://e.org"), TokenKind::Url);
  EXPECT_EQ(classify_token("www.example.com"), TokenKind::Url);
  EXPECT_EQ(classify_token("http://1945"), TokenKind::Url);
  EXPECT_FALSE(classify_token("слово"));
  EXPECT_FALSE(classify_token("a1"));
  EXPECT_FALSE(classify_token(""));
}

TEST(BuildTermSequence, MasksParticipantsAndFrames) {
  const auto lex = make_lexicons();
  const std::vector<std::string> tokens{"Russia", "condemns", "NATO"};
  const std::vector<SpanMention> mentions{{0, 1}, {2, 3}};
  const std::vector<FrameMatch> frames{{1, 2, Polarity::Negative}};
  const auto seq = build_term_sequence(tokens, mentions, 0, 1, frames, lex);
  ASSERT_EQ(seq.size(), 3u);
  EXPECT_EQ(seq.terms[0].kind, TermKind::EntitySubj);
  EXPECT_EQ(seq.terms[1].kind, TermKind::Frame);
  EXPECT_EQ(seq.terms[1].polarity, Polarity::Negative);
  EXPECT_EQ(seq.terms[2].kind, TermKind::EntityObj);
  EXPECT_EQ(seq.subj_pos, 0u);
  EXPECT_EQ(seq.obj_pos, 2u);
  EXPECT_TRUE(seq.valid());
}

TEST(BuildTermSequence, PlainWordsAndTokens) {
  const auto lex = make_lexicons();
  const std::vector<std::string> tokens{"Мы", "видели", "A", ",", "B", "1999"};
  const std::vector<SpanMention> mentions{{2, 3}, {4, 5}};
  const auto seq = build_term_sequence(tokens, mentions, 1, 0, {}, lex);
  ASSERT_EQ(seq.size(), 6u);
  EXPECT_EQ(seq.terms[0], Term::word("мы", "Мы"));
  EXPECT_EQ(seq.terms[2].kind, TermKind::EntityObj);
  EXPECT_EQ(seq.terms[3].kind, TermKind::Token);
  EXPECT_EQ(seq.terms[3].token, TokenKind::Punctuation);
  EXPECT_EQ(seq.terms[4].kind, TermKind::EntitySubj);
  EXPECT_EQ(seq.terms[5].token, TokenKind::Number);
}

TEST(BuildTermSequence, NegationFlipsAdjacentFrame) {
  const auto lex = make_lexicons();
  const std::vector<std::string> tokens{"A", "не", "одобрить", "B"};
  const std::vector<SpanMention> mentions{{0, 1}, {3, 4}};
  const std::vector<FrameMatch> frames{{2, 3, Polarity::Positive}};
  const auto seq = build_term_sequence(tokens, mentions, 0, 1, frames, lex);
  ASSERT_EQ(seq.size(), 4u);
  EXPECT_EQ(seq.terms[1], Term::word("не"));
  EXPECT_EQ(seq.terms[2].kind, TermKind::Frame);
  EXPECT_EQ(seq.terms[2].polarity, apply_negation(Polarity::Positive, "не"));
  EXPECT_EQ(seq.terms[2].polarity, Polarity::Negative);
}

TEST(BuildTermSequence, NegationDoesNotReachAcrossTerms) {
  const auto lex = make_lexicons();
  const std::vector<std::string> tokens{"A", "не", "хотел", "одобрить", "B"};
  const std::vector<SpanMention> mentions{{0, 1}, {4, 5}};
  const std::vector<FrameMatch> frames{{3, 4, Polarity::Positive}};
  EXPECT_EQ(build_term_sequence(tokens, mentions, 0, 1, frames, lex).terms[3].polarity, Polarity::Positive);
}

TEST(BuildTermSequence, MultiTokenSpansCollapse) {
  const auto lex = make_lexicons();
  const std::vector<std::string> tokens{"Владимир", "Путин", "выступить", "за", "Белый", "дом", "и", "ООН"};
  const std::vector<SpanMention> mentions{{0, 2}, {4, 6}, {7, 8}};
  const std::vector<FrameMatch> frames{{2, 4, Polarity::Positive}};
  const auto seq = build_term_sequence(tokens, mentions, 0, 1, frames, lex);
  ASSERT_EQ(seq.size(), 5u);
  EXPECT_EQ(seq.terms[1].lemma, "выступить за");
  EXPECT_EQ(seq.terms[2].surface, "Белый дом");
  EXPECT_EQ(seq.terms[4].kind, TermKind::EntityOther);
  EXPECT_EQ(seq.terms[4].display(), "E");
  EXPECT_EQ(seq.obj_pos, 2u);
}

TEST(BuildTermSequence, FrameOverlappingMentionIsIgnored) {
  const auto lex = make_lexicons();
  const std::vector<std::string> tokens{"condemn", "B"};
  const std::vector<SpanMention> mentions{{0, 1}, {1, 2}};
  const std::vector<FrameMatch> frames{{0, 1, Polarity::Negative}};
  const auto seq = build_term_sequence(tokens, mentions, 0, 1, frames, lex);
  EXPECT_EQ(seq.terms[0].kind, TermKind::EntitySubj);
}

TEST(BuildTermSequence, MissingParticipantIsAnError) {
  const auto lex = make_lexicons();
  const std::vector<std::string> tokens{"A", "B"};
  const std::vector<SpanMention> mentions{{0, 1}, {1, 2}};
  EXPECT_THROW(build_term_sequence(tokens, mentions, 0, 2, {}, lex), DataError);
  EXPECT_THROW(build_term_sequence(tokens, mentions, 1, 1, {}, lex), DataError);
}

TEST(Termize, UnannotatedVariantsAreMasked) {
  const auto lex = make_lexicons();
  Document doc;
  doc.doc_id = "d";
  doc.sentences.push_back(Sentence::from_tokens({"Россия", "и", "Франция", "condemn", "США", ",", "россия", "тоже"}));
  doc.groups = {{"ru", {"Россия"}}, {"fr", {"Франция"}}, {"us", {"США", "Соединенные Штаты"}}};
  doc.mentions = {{0, 0, 1, "ru"}, {0, 2, 3, "fr"}, {0, 4, 5, "us"}};
  const ContextAnchor anchor{"d", 0, "ru", "us", Label::Negative, 0, 2};
  const auto seq = termize(doc, anchor, lex);
  ASSERT_TRUE(seq.valid());
  EXPECT_EQ(seq.terms[2].kind, TermKind::EntityOther);
  EXPECT_EQ(seq.terms[3].kind, TermKind::Frame);
  EXPECT_EQ(seq.terms[6].kind, TermKind::EntityOther);
  for (const auto& t : seq.terms)
    if (t.kind == TermKind::Word) EXPECT_NE(t.lemma, "россия");
}

TEST(Termize, RandomSentencesLeaveNoVariantUnmasked) {
  const auto lex = make_lexicons();
  std::mt19937_64 rng(23);
  const std::vector<std::string> vocab{"и", "в", "хороший", "condemn", "не", "одобрить", ",", "12", "Москва",
                                       "Кремль", "москва", "Белый", "дом", "слово"};
  for (int trial = 0; trial < 300; ++trial) {
    Document doc;
    doc.doc_id = "d";
    doc.groups = {{"m", {"Москва", "Кремль"}}, {"w", {"Белый дом"}}, {"x", {"слово"}}};
    std::vector<std::string> tokens{"Москва", "Белый", "дом"};
    const std::size_t extra = rng() % 8;
    for (std::size_t i = 0; i < extra; ++i) tokens.push_back(vocab[rng() % vocab.size()]);
    std::shuffle(tokens.begin() + 3, tokens.end(), rng);
    doc.sentences.push_back(Sentence::from_tokens(tokens));
    doc.mentions = {{0, 0, 1, "m"}, {0, 1, 3, "w"}};
    const auto seq = termize(doc, {"d", 0, "w", "m", Label::Positive, 1, 0}, lex);
    ASSERT_TRUE(seq.valid());
    for (const auto& t : seq.terms) {
      if (t.kind != TermKind::Word) continue;
      for (const auto& g : doc.groups)
        for (const auto& v : g.variants) EXPECT_NE(t.lemma, lemmatize(v));
    }
    for (std::size_t i = 0; i + 1 < seq.size(); ++i)
      EXPECT_FALSE(seq.terms[i].kind == TermKind::Word && seq.terms[i].lemma == "белый" &&
                   seq.terms[i + 1].kind == TermKind::Word && seq.terms[i + 1].lemma == "дом");
  }
}

TEST(CropToWindow, ShortSequencesAreUnchanged) {
  const auto s = seq_of_length(5, 1, 3);
  const auto out = crop_to_window(s, 50);
  ASSERT_TRUE(out);
  EXPECT_EQ(out->terms, s.terms);
}

TEST(CropToWindow, WindowCoversParticipants) {
  const auto out = crop_to_window(seq_of_length(60, 10, 20), 30);
  ASSERT_TRUE(out);
  EXPECT_EQ(out->size(), 30u);
  EXPECT_TRUE(out->valid());
  EXPECT_EQ(out->terms[out->subj_pos].kind, TermKind::EntitySubj);
}

TEST(CropToWindow, FarApartParticipantsAreDropped) {
  EXPECT_FALSE(crop_to_window(seq_of_length(60, 0, 40), 30));
  EXPECT_FALSE(crop_to_window(seq_of_length(60, 40, 0), 30));
}

TEST(CropToWindow, EveryPlacementAgreesWithEnumeration) {
  for (std::size_t len = 2; len <= 14; ++len)
    for (std::size_t n = 2; n <= len + 1; ++n)
      for (std::size_t a = 0; a < len; ++a)
        for (std::size_t b = 0; b < len; ++b) {
          if (a == b) continue;
          const auto s = seq_of_length(len, a, b);
          const auto out = crop_to_window(s, n);
          const std::size_t lo = std::min(a, b), hi = std::max(a, b);
          // Admissible starts: the window fits and holds both participants.
          std::vector<std::size_t> starts;
          for (std::size_t st = 0; st + std::min(n, len) <= len; ++st)
            if (st <= lo && hi < st + n) starts.push_back(st);
          if (starts.empty()) {
            EXPECT_FALSE(out);
            continue;
          }
          ASSERT_TRUE(out);
          EXPECT_EQ(out->size(), std::min(n, len));
          EXPECT_TRUE(out->valid());
          const auto& first = out->terms.front();
          std::size_t start = 0;
          while (!(s.terms[start] == first)) ++start;
          EXPECT_NE(std::find(starts.begin(), starts.end(), start), starts.end());
          for (std::size_t i = 0; i < out->size(); ++i) EXPECT_EQ(out->terms[i], s.terms[start + i]);
          // The window is as central as the sequence bounds permit.
          const double mid = (static_cast<double>(lo) + static_cast<double>(hi)) / 2.0;
          const auto off = [&](std::size_t st) { return std::abs(static_cast<double>(st) + (n - 1) / 2.0 - mid); };
          for (std::size_t st : starts) EXPECT_LE(off(start), off(st) + 1.0) << len << " " << n << " " << a << " " << b;
        }
}

TEST(GroupOf, Precedence) {
  const auto lex = make_lexicons();
  EXPECT_EQ(group_of(Term::frame("condemn", Polarity::Negative), lex), AnalysisGroup::Frames);
  EXPECT_EQ(group_of(Term::word("в"), lex), AnalysisGroup::Prep);
  EXPECT_EQ(group_of(Term::word("против"), lex), AnalysisGroup::Sentiment);
  EXPECT_EQ(group_of(Term::word("хороший"), lex), AnalysisGroup::Sentiment);
  EXPECT_EQ(group_of(Term::word("стол"), lex), AnalysisGroup::Other);
  EXPECT_EQ(group_of(Term::entity(TermKind::EntitySubj), lex), AnalysisGroup::Other);
  EXPECT_EQ(group_of(Term::token_of(TokenKind::Punctuation, ","), lex), AnalysisGroup::Other);
}

TEST(Names, RoundTrip) {
  for (auto g : {AnalysisGroup::Prep, AnalysisGroup::Frames, AnalysisGroup::Sentiment, AnalysisGroup::Other})
    EXPECT_EQ(parse_analysis_group(to_string(g)), g);
  for (auto k : {TermKind::Word, TermKind::EntitySubj, TermKind::EntityObj, TermKind::EntityOther, TermKind::Frame,
                 TermKind::Token})
    EXPECT_EQ(parse_term_kind(to_string(k)), k);
}
