#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "attitude/corpus.hpp"
#include "attitude/errors.hpp"
#include "support.hpp"

using namespace attitude;
using attitude::testing::TempDir;

namespace {

const char* kTwoSentenceDoc =
    R"({"doc_id":"d1","sentences":[["Россия","поддержала","Сирию","."],["США","осудили","Россию"]],)"
    R"("mentions":[[0,0,1,"ru"],[0,2,3,"sy"],[1,0,1,"us"]],)"
    R"("groups":[["ru","Россия","Россию"],["sy","Сирия","Сирию"],["us","США"]]})";

Document doc_with_mentions(std::vector<std::vector<std::string>> per_sentence) {
  Document d;
  d.doc_id = "d";
  std::set<std::string> groups;
  for (std::size_t s = 0; s < per_sentence.size(); ++s) {
    std::vector<std::string> tokens;
    for (std::size_t i = 0; i < per_sentence[s].size(); ++i) {
      tokens.push_back(per_sentence[s][i].empty() ? "w" : per_sentence[s][i]);
      if (!per_sentence[s][i].empty()) {
        d.mentions.push_back({s, i, i + 1, per_sentence[s][i]});
        groups.insert(per_sentence[s][i]);
      }
    }
    d.sentences.push_back(Sentence::from_tokens(tokens));
  }
  for (const auto& g : groups) d.groups.push_back({g, {g}});
  return d;
}

std::size_t spread(const std::vector<std::size_t>& totals) {
  return *std::max_element(totals.begin(), totals.end()) - *std::min_element(totals.begin(), totals.end());
}

// Smallest max-min spread over every assignment of docs to k non-empty folds.
std::size_t best_spread(const std::vector<std::size_t>& counts, std::size_t k) {
  std::size_t best = SIZE_MAX;
  std::size_t total = 1;
  for (std::size_t i = 0; i < counts.size(); ++i) total *= k;
  for (std::size_t code = 0; code < total; ++code) {
    std::vector<std::size_t> totals(k, 0), members(k, 0);
    for (std::size_t i = 0, c = code; i < counts.size(); ++i, c /= k) {
      totals[c % k] += counts[i];
      ++members[c % k];
    }
    if (std::count(members.begin(), members.end(), 0u) > 0) continue;
    best = std::min(best, spread(totals));
  }
  return best;
}

}  // namespace

TEST(Labels, ParseAndPrint) {
  EXPECT_EQ(parse_label("pos"), Label::Positive);
  EXPECT_EQ(parse_label("negative"), Label::Negative);
  EXPECT_EQ(parse_label("neu"), Label::Neutral);
  EXPECT_FALSE(parse_label("good"));
  EXPECT_EQ(to_string(Label::Negative), "negative");
}

TEST(LoadCorpus, HandWrittenFixtureCounts) {
  TempDir dir;
  dir.write("documents.jsonl", std::string(kTwoSentenceDoc) + "\n");
  dir.write("opinions.tsv", "d1\tru\tsy\tpositive\n");
  const auto corpus = load_corpus(dir.path());
  ASSERT_EQ(corpus.documents.size(), 1u);
  EXPECT_EQ(corpus.documents[0].sentences.size(), 2u);
  EXPECT_EQ(corpus.documents[0].mentions.size(), 3u);
  EXPECT_EQ(corpus.opinions.size(), 1u);
  EXPECT_EQ(corpus.documents[0].sentences[0].offsets, (std::vector<std::size_t>{0, 13, 34, 45}));
}

TEST(LoadCorpus, EmptyOpinionList) {
  TempDir dir;
  dir.write("documents.jsonl", std::string(kTwoSentenceDoc) + "\n");
  dir.write("opinions.tsv", "");
  const auto corpus = load_corpus(dir.path());
  EXPECT_EQ(corpus.documents.size(), 1u);
  EXPECT_TRUE(corpus.opinions.empty());
}

TEST(LoadCorpus, IntegerGroupIds) {
  TempDir dir;
  const auto p = dir.write("d.jsonl", R"({"doc_id":"x","sentences":[["a","b"]],"mentions":[[0,0,1,7]],"groups":[[7,"a"]]})");
  EXPECT_EQ(load_documents(p)[0].mentions[0].group_id, "7");
}

TEST(LoadCorpus, SpanPastSentenceEndIsPositioned) {
  TempDir dir;
  const auto p = dir.write("d.jsonl",
                           std::string(kTwoSentenceDoc) + "\n" +
                               R"({"doc_id":"d2","sentences":[["a","b"]],"mentions":[[0,1,3,"g"]],"groups":[["g","b"]]})");
  try {
    load_documents(p);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(LoadCorpus, MalformedInputs) {
  TempDir dir;
  EXPECT_THROW(load_documents(dir.write("a.jsonl", "{not json")), ParseError);
  EXPECT_THROW(load_documents(dir.write("b.jsonl", R"({"doc_id":"x","sentences":[]})")), ParseError);
  EXPECT_THROW(load_documents(dir.write("c.jsonl", R"({"doc_id":"x","sentences":[["a","b"]],"mentions":[[0,0,1,"g"],[0,0,2,"g"]],"groups":[["g","a"]]})")),
               ParseError);
  EXPECT_THROW(load_documents(dir.write("d.jsonl", R"({"doc_id":"x","sentences":[["a"]],"mentions":[[0,0,1,"h"]],"groups":[["g","a"]]})")),
               ParseError);
  EXPECT_THROW(load_documents(dir.write("e.jsonl", std::string(kTwoSentenceDoc) + "\n" + kTwoSentenceDoc)), ParseError);
  EXPECT_THROW(load_documents(dir / "missing.jsonl"), DataError);
}

TEST(LoadCorpus, BadOpinions) {
  TempDir dir;
  dir.write("documents.jsonl", kTwoSentenceDoc);
  EXPECT_THROW(load_opinions(dir.write("o1.tsv", "d1\tru\tsy\tneutral\n")), ParseError);
  EXPECT_THROW(load_opinions(dir.write("o2.tsv", "d1\tru\tsy\n")), ParseError);
  EXPECT_THROW(load_opinions(dir.write("o3.tsv", "d1\tru\tru\tpositive\n")), ParseError);
  EXPECT_THROW(load_opinions(dir.write("o4.tsv", "d1\tru\tsy\tgreat\n")), ParseError);
  EXPECT_THROW(load_corpus(dir / "documents.jsonl", dir.write("o5.tsv", "d1\tru\tzz\tpositive\n")), ParseError);
  EXPECT_THROW(load_corpus(dir / "documents.jsonl", dir.write("o6.tsv", "d9\tru\tsy\tpositive\n")), ParseError);
}

TEST(LoadCorpus, WriteReadRoundTrip) {
  TempDir dir;
  dir.write("documents.jsonl", kTwoSentenceDoc);
  dir.write("opinions.tsv", "d1\tru\tsy\tpositive\nd1\tus\tru\tnegative\n");
  const auto a = load_corpus(dir.path());
  TempDir out;
  write_documents(a.documents, out / "documents.jsonl");
  write_opinions(a.opinions, out / "opinions.tsv");
  const auto b = load_corpus(out.path());
  EXPECT_EQ(a.opinions, b.opinions);
  ASSERT_EQ(b.documents.size(), 1u);
  EXPECT_EQ(b.documents[0].sentences[1].tokens, a.documents[0].sentences[1].tokens);
  EXPECT_EQ(b.documents[0].groups[0].variants, a.documents[0].groups[0].variants);
}

TEST(AugmentNeutral, AddsReverseDirection) {
  const auto doc = doc_with_mentions({{"A", "", "B"}});
  const std::vector<Opinion> annotated{{"d", "A", "B", Label::Positive}};
  const auto out = augment_neutral(doc, annotated);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0], annotated[0]);
  EXPECT_EQ(out[1], (Opinion{"d", "B", "A", Label::Neutral, Provenance::Augmented}));
}

TEST(AugmentNeutral, ThreeGroupsGiveSixOrderedPairs) {
  const auto doc = doc_with_mentions({{"A", "B", "", "C"}});
  const auto out = augment_neutral(doc, {});
  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& op : out) {
    EXPECT_EQ(op.label, Label::Neutral);
    pairs.emplace(op.source_group, op.target_group);
  }
  EXPECT_EQ(out.size(), 6u);
  EXPECT_EQ(pairs.size(), 6u);
}

TEST(AugmentNeutral, NoCooccurrenceNoAdditions) {
  EXPECT_TRUE(augment_neutral(doc_with_mentions({{"A", ""}, {"", "B"}}), {}).empty());
}

TEST(AugmentNeutral, RandomDocumentsMatchPairScanAndAreIdempotent) {
  std::mt19937_64 rng(7);
  const std::vector<std::string> names{"A", "B", "C", "D", ""};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::vector<std::string>> sentences(1 + rng() % 4);
    for (auto& s : sentences) {
      s.resize(1 + rng() % 5);
      for (auto& t : s) t = names[rng() % names.size()];
    }
    const auto doc = doc_with_mentions(sentences);
    std::vector<Opinion> annotated;
    for (const auto& g : doc.groups)
      for (const auto& h : doc.groups)
        if (g.group_id != h.group_id && rng() % 4 == 0)
          annotated.push_back({"d", g.group_id, h.group_id, rng() % 2 ? Label::Positive : Label::Negative});

    std::set<std::pair<std::string, std::string>> expected;
    for (const auto& s : sentences)
      for (const auto& a : s)
        for (const auto& b : s)
          if (!a.empty() && !b.empty() && a != b) expected.emplace(a, b);
    for (const auto& op : annotated) expected.erase({op.source_group, op.target_group});

    const auto once = augment_neutral(doc, annotated);
    std::set<std::pair<std::string, std::string>> added;
    for (std::size_t i = annotated.size(); i < once.size(); ++i) added.emplace(once[i].source_group, once[i].target_group);
    EXPECT_EQ(added, expected);
    EXPECT_EQ(once.size() - annotated.size(), expected.size());
    EXPECT_EQ(augment_neutral(doc, once), once);
  }
}

TEST(ExtractContexts, ClosestMentionPairAnchors) {
  // Subject mentions at tokens 2 and 9, object at 5.
  const auto doc = doc_with_mentions({{"", "", "S", "", "", "O", "", "", "", "S"}});
  const auto ctx = extract_contexts(doc, {{"d", "S", "O", Label::Negative}});
  ASSERT_EQ(ctx.size(), 1u);
  EXPECT_EQ(doc.mentions[ctx[0].subj_mention].begin, 2u);
  EXPECT_EQ(doc.mentions[ctx[0].obj_mention].begin, 5u);
  EXPECT_EQ(ctx[0].label, Label::Negative);
}

TEST(ExtractContexts, TieGoesToLeftmostSubject) {
  const auto doc = doc_with_mentions({{"S", "", "O", "", "S"}});
  const auto ctx = extract_contexts(doc, {{"d", "S", "O", Label::Positive}});
  ASSERT_EQ(ctx.size(), 1u);
  EXPECT_EQ(doc.mentions[ctx[0].subj_mention].begin, 0u);
}

TEST(ExtractContexts, OneSamplePerSharedSentence) {
  const auto doc = doc_with_mentions({{"A", "B"}, {"A"}, {"B", "", "A"}});
  EXPECT_EQ(extract_contexts(doc, {{"d", "A", "B", Label::Positive}}).size(), 2u);
  EXPECT_TRUE(extract_contexts(doc_with_mentions({{"A"}, {"B"}}), {{"d", "A", "B", Label::Positive}}).empty());
}

TEST(ExtractContexts, CountsPerLabelMatchSentencePairScan) {
  std::mt19937_64 rng(13);
  const std::vector<std::string> names{"A", "B", "C", ""};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::vector<std::string>> sentences(1 + rng() % 10);
    for (auto& s : sentences) {
      s.resize(1 + rng() % 4);
      for (auto& t : s) t = names[rng() % names.size()];
    }
    const auto doc = doc_with_mentions(sentences);
    std::vector<Opinion> annotated;
    for (const auto& g : doc.groups)
      for (const auto& h : doc.groups)
        if (g.group_id != h.group_id && rng() % 3 == 0)
          annotated.push_back({"d", g.group_id, h.group_id, rng() % 2 ? Label::Positive : Label::Negative});
    const auto ops = augment_neutral(doc, annotated);

    std::map<Label, std::size_t> expected;
    for (const auto& op : ops)
      for (const auto& s : sentences)
        if (std::count(s.begin(), s.end(), op.source_group) && std::count(s.begin(), s.end(), op.target_group))
          ++expected[op.label];
    std::map<Label, std::size_t> got;
    for (const auto& c : extract_contexts(doc, ops)) ++got[c.label];
    EXPECT_EQ(got, expected);
  }
}

TEST(SplitFolds, EqualCountsOneDocPerFold) {
  const auto fa = split_folds(std::vector<DocumentInfo>{{"a", 10}, {"b", 10}, {"c", 10}});
  EXPECT_EQ(fa.sentence_counts, (std::vector<std::size_t>{10, 10, 10}));
  std::set<std::size_t> used;
  for (const auto& [id, f] : fa.fold_of_doc) used.insert(f);
  EXPECT_EQ(used.size(), 3u);
}

TEST(SplitFolds, GreedyIsOptimalOnMixedCounts) {
  // Counts 8,7,5,6,4 admit no split with equal totals; the best spread is 3.
  const std::vector<std::size_t> counts{8, 7, 5, 6, 4};
  std::vector<DocumentInfo> docs;
  for (std::size_t i = 0; i < counts.size(); ++i) docs.push_back({"d" + std::to_string(i), counts[i]});
  const auto fa = split_folds(docs);
  EXPECT_EQ(spread(fa.sentence_counts), best_spread(counts, 3));
  EXPECT_EQ(best_spread(counts, 3), 3u);
  auto sorted = fa.sentence_counts;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, (std::vector<std::size_t>{8, 11, 11}));
}

TEST(SplitFolds, TooFewDocumentsIsAnError) {
  EXPECT_THROW(split_folds(std::vector<DocumentInfo>{{"a", 1}, {"b", 2}}), DataError);
}

TEST(SplitFolds, PartitionProperties) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 3 + rng() % 7;
    std::vector<DocumentInfo> docs;
    for (std::size_t i = 0; i < n; ++i) docs.push_back({"d" + std::to_string(i), 1 + rng() % 20});
    const auto fa = split_folds(docs, 3, trial);
    ASSERT_EQ(fa.fold_of_doc.size(), n);
    std::vector<std::size_t> totals(3, 0);
    std::size_t members = 0;
    for (std::size_t f = 0; f < 3; ++f) {
      const auto ids = fa.docs_in(f);
      EXPECT_FALSE(ids.empty());
      members += ids.size();
      for (const auto& id : ids)
        for (const auto& d : docs)
          if (d.doc_id == id) totals[f] += d.sentence_count;
    }
    EXPECT_EQ(members, n);
    EXPECT_EQ(totals, fa.sentence_counts);
    EXPECT_EQ(split_folds(docs, 3, trial).fold_of_doc, fa.fold_of_doc);
  }
}

TEST(SplitFolds, EqualCountsDivisibleByThreeGiveEqualTotals) {
  for (std::size_t n : {3u, 6u, 9u, 12u}) {
    std::vector<DocumentInfo> docs;
    for (std::size_t i = 0; i < n; ++i) docs.push_back({"d" + std::to_string(i), 5});
    const auto fa = split_folds(docs, 3, n);
    EXPECT_EQ(spread(fa.sentence_counts), 0u);
  }
}

TEST(TrainTestSplit, PartitionAndErrors) {
  std::vector<Document> docs(2);
  docs[0].doc_id = "d1";
  docs[1].doc_id = "d2";
  const auto [train, test] = train_test_split(docs, {{"d1", Split::Train}, {"d2", Split::Test}});
  ASSERT_EQ(train.size(), 1u);
  ASSERT_EQ(test.size(), 1u);
  EXPECT_EQ(train[0].doc_id, "d1");
  EXPECT_EQ(test[0].doc_id, "d2");
  EXPECT_THROW(train_test_split(docs, {{"d1", Split::Train}}), DataError);
  EXPECT_THROW(train_test_split(docs, {{"d1", Split::Train}, {"d2", Split::Test}, {"d9", Split::Test}}), DataError);
}

TEST(Manifest, Load) {
  TempDir dir;
  const auto m = load_manifest(dir.write("m.tsv", "d1\ttrain\nd2\ttest\n"));
  EXPECT_EQ(m.at("d2"), Split::Test);
  EXPECT_THROW(load_manifest(dir.write("b.tsv", "d1\tdev\n")), ParseError);
  EXPECT_THROW(load_manifest(dir.write("c.tsv", "d1\ttrain\nd1\ttest\n")), ParseError);
}
