#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "attitude/analysis.hpp"
#include "attitude/synthetic.hpp"
#include "support.hpp"

using namespace attitude;
using attitude::testing::TempDir;
using attitude::testing::read_file;

namespace {

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  double acc = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) acc += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
  return acc;
}

double gaussian_density(double g, const std::vector<double>& samples, double bw) {
  double acc = 0.0;
  for (double x : samples) acc += std::exp(-(g - x) * (g - x) / (2 * bw * bw)) / std::sqrt(2 * std::numbers::pi);
  return acc / (samples.size() * bw);
}

struct Trained {
  PreparedCorpus data;
  std::unique_ptr<ContextClassifier> model;
};

const Trained& small_trained(EncoderKind kind = EncoderKind::AttBiLstm) {
  static std::map<EncoderKind, Trained> cache;
  auto it = cache.find(kind);
  if (it != cache.end()) return it->second;
  SyntheticConfig scfg;
  scfg.documents = 9;
  scfg.seed = 2;
  const auto synth = generate_synthetic(scfg);
  Trained t;
  t.data = prepare_corpus(synth.corpus, synth.lexicons, 20);
  ModelConfig cfg;
  cfg.embedding.word_dim = 6;
  cfg.embedding.polarity_dim = 3;
  cfg.encoder.kind = kind;
  cfg.encoder.n = 20;
  cfg.encoder.h = 4;
  cfg.encoder.filters = 4;
  t.model = std::make_unique<ContextClassifier>(cfg, build_vocabulary(t.data.contexts), 1);
  return cache.emplace(kind, std::move(t)).first->second;
}

}  // namespace

TEST(GroupWeight, SumsMembers) {
  const std::vector<double> alpha{0.5, 0.3, 0.2};
  const std::vector<AnalysisGroup> g{AnalysisGroup::Frames, AnalysisGroup::Other, AnalysisGroup::Frames};
  EXPECT_DOUBLE_EQ(context_group_weight(alpha, g, AnalysisGroup::Frames), 0.7);
  EXPECT_EQ(context_group_weight(alpha, g, AnalysisGroup::Prep), 0.0);
  const std::vector<AnalysisGroup> all(3, AnalysisGroup::Sentiment);
  EXPECT_NEAR(context_group_weight(alpha, all, AnalysisGroup::Sentiment), 1.0, 1e-9);
  EXPECT_THROW(context_group_weight(alpha, std::vector<AnalysisGroup>(2), AnalysisGroup::Prep), std::invalid_argument);
}

TEST(GroupWeight, FromTermsAndLexicons) {
  Lexicons lex;
  lex.prepositions.add("в");
  lex.sentiment.add("хороший");
  TermSequence seq;
  seq.terms = {Term::entity(TermKind::EntitySubj), Term::word("в"), Term::word("хороший"),
               Term::frame("осудить", Polarity::Negative), Term::entity(TermKind::EntityObj)};
  const std::vector<double> alpha{0.1, 0.2, 0.3, 0.25, 0.15};
  EXPECT_DOUBLE_EQ(context_group_weight(alpha, seq, AnalysisGroup::Prep, lex), 0.2);
  EXPECT_DOUBLE_EQ(context_group_weight(alpha, seq, AnalysisGroup::Sentiment, lex), 0.3);
  EXPECT_DOUBLE_EQ(context_group_weight(alpha, seq, AnalysisGroup::Frames, lex), 0.25);
  EXPECT_NEAR(context_group_weight(alpha, seq, AnalysisGroup::Other, lex), 0.25, 1e-15);
}

TEST(Extract, SingletonAndNonAttentive) {
  const auto& t = small_trained();
  ContextSample one;
  one.terms.terms = {Term::entity(TermKind::EntitySubj)};
  EXPECT_EQ(extract_alpha(*t.model, one), (std::vector<double>{1.0}));
  const auto& cnn = small_trained(EncoderKind::Cnn);
  EXPECT_THROW(extract_alpha(*cnn.model, cnn.data.contexts[0]), std::invalid_argument);
}

TEST(Extract, FourGroupsPartitionTheMass) {
  for (auto kind : {EncoderKind::AttBiLstm, EncoderKind::AttBiLstmZYang, EncoderKind::AttCnn, EncoderKind::Ian}) {
    const auto& t = small_trained(kind);
    for (const auto& c : t.data.contexts) {
      const auto alpha = extract_alpha(*t.model, c);
      ASSERT_EQ(alpha.size(), c.terms.size());
      double total = 0.0;
      for (auto g : {AnalysisGroup::Prep, AnalysisGroup::Frames, AnalysisGroup::Sentiment, AnalysisGroup::Other})
        total += context_group_weight(alpha, c.groups, g);
      EXPECT_NEAR(total, 1.0, 1e-9);
    }
  }
}

TEST(Bandwidth, SilvermanRule) {
  const std::vector<double> s{0.1, 0.2, 0.3, 0.4};
  const double sd = std::sqrt((0.0225 + 0.0025 + 0.0025 + 0.0225) / 3.0);
  EXPECT_NEAR(silverman_bandwidth(s), 1.06 * sd * std::pow(4.0, -0.2), 1e-15);
  EXPECT_EQ(silverman_bandwidth(std::vector<double>{0.5}), 1e-3);
  EXPECT_EQ(silverman_bandwidth(std::vector<double>{0.5, 0.5, 0.5}), 1e-3);
}

TEST(Kde, MatchesDirectSum) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 0.2);
  std::vector<double> samples(37);
  for (double& x : samples) x = u(rng);
  const auto grid = linear_grid(0.0, 0.2, 201);
  const auto curve = kde(samples, grid);
  const double bw = silverman_bandwidth(samples);
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(curve[i], gaussian_density(grid[i], samples, bw), 1e-10);
}

TEST(Kde, SingleSamplePeaksAtNearestGridPoint) {
  const auto grid = linear_grid(0.0, 0.2, 201);
  const std::vector<double> one{0.1};
  const auto curve = kde(one, grid, 0.01);
  const auto peak = std::max_element(curve.begin(), curve.end()) - curve.begin();
  EXPECT_NEAR(grid[peak], 0.1, 1e-12);
}

TEST(Kde, SymmetricSamplesGiveSymmetricCurve) {
  const auto grid = linear_grid(-1.0, 1.0, 101);
  const std::vector<double> two{-0.3, 0.3};
  const auto curve = kde(two, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(curve[i], curve[grid.size() - 1 - i], 1e-14);
}

TEST(Kde, IntegratesToOne) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 0.2);
  std::vector<double> samples(100);
  for (double& x : samples) x = u(rng);
  const double bw = silverman_bandwidth(samples);
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  const auto grid = linear_grid(*lo - 3 * bw, *hi + 3 * bw, 2001);
  EXPECT_NEAR(trapezoid(grid, kde(samples, grid)), 1.0, 0.02);
}

TEST(Kde, PermutationInvariant) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 0.3);
  std::vector<double> samples(60);
  for (double& x : samples) x = u(rng);
  const auto grid = linear_grid(0.0, 0.2, 201);
  const auto base = kde(samples, grid);
  for (int t = 0; t < 10; ++t) {
    std::shuffle(samples.begin(), samples.end(), rng);
    EXPECT_EQ(kde(samples, grid), base);
  }
}

TEST(Kde, Errors) {
  const auto grid = linear_grid(0.0, 0.2, 5);
  EXPECT_THROW(kde(std::vector<double>{}, grid), std::invalid_argument);
  EXPECT_THROW(kde(std::vector<double>{0.1}, grid, 0.0), std::invalid_argument);
  EXPECT_THROW(linear_grid(0, 1, 1), std::invalid_argument);
}

TEST(Grid, EndpointsPresent) {
  const auto g = linear_grid(0.0, 0.2, 201);
  EXPECT_EQ(g.size(), 201u);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_EQ(g.back(), 0.2);
}

TEST(Summaries, AllNeutralLeavesSentimentSideEmpty) {
  std::vector<GroupWeightSample> w;
  for (auto g : kReportedGroups) {
    w.push_back({"c1", g, 0.1, LabelClass::N});
    w.push_back({"c2", g, 0.3, LabelClass::N});
  }
  const auto s = summarize_distributions(w);
  ASSERT_EQ(s.size(), 3u);
  for (const auto& d : s) {
    EXPECT_DOUBLE_EQ(*d.mean_n, 0.2);
    EXPECT_FALSE(d.mean_s);
    EXPECT_EQ(d.count_s, 0u);
    EXPECT_TRUE(d.kde_s.empty());
    EXPECT_EQ(d.kde_n.size(), 201u);
    EXPECT_EQ(d.grid.front(), 0.0);
    EXPECT_EQ(d.grid.back(), 0.2);
  }
}

TEST(Summaries, MeansEqualDirectRecomputation) {
  const auto& t = small_trained();
  const auto summaries = summarize_distributions(*t.model, t.data.contexts);
  ASSERT_EQ(summaries.size(), 3u);
  for (const auto& d : summaries) {
    double sum_n = 0, sum_s = 0;
    std::size_t cn = 0, cs = 0;
    for (const auto& c : t.data.contexts) {
      const auto alpha = t.model->attention(c.terms);
      double w = 0.0;
      for (std::size_t i = 0; i < alpha.size(); ++i)
        if (c.groups[i] == d.group) w += alpha[i];
      if (c.label == Label::Neutral) {
        sum_n += w;
        ++cn;
      } else {
        sum_s += w;
        ++cs;
      }
    }
    EXPECT_EQ(d.count_n, cn);
    EXPECT_EQ(d.count_s, cs);
    EXPECT_NEAR(*d.mean_n, sum_n / cn, 1e-12);
    EXPECT_NEAR(*d.mean_s, sum_s / cs, 1e-12);
    for (double v : d.kde_n) EXPECT_GE(v, 0.0);
  }
}

TEST(Heatmap, NormalizedWeights) {
  ContextSample s;
  s.terms.terms = {Term::entity(TermKind::EntitySubj), Term::word("в", "В")};
  s.groups = {AnalysisGroup::Other, AnalysisGroup::Prep};
  const std::vector<double> a{0.1, 0.4};
  const auto rows = export_heatmap(s, a);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_DOUBLE_EQ(rows[0].normalized_weight, 0.25);
  EXPECT_DOUBLE_EQ(rows[1].normalized_weight, 1.0);
  EXPECT_EQ(rows[0].term, "E_subj");
  EXPECT_EQ(rows[1].term, "В");
  EXPECT_EQ(rows[1].group, AnalysisGroup::Prep);

  const std::vector<double> uniform{0.5, 0.5};
  for (const auto& r : export_heatmap(s, uniform)) EXPECT_EQ(r.normalized_weight, 1.0);
  ContextSample one;
  one.terms.terms = {Term::entity(TermKind::EntitySubj)};
  one.groups = {AnalysisGroup::Other};
  EXPECT_EQ(export_heatmap(one, std::vector<double>{1.0})[0].normalized_weight, 1.0);
}

TEST(Writers, CsvAndTsvLayout) {
  std::vector<GroupWeightSample> w{{"a", AnalysisGroup::Frames, 0.1, LabelClass::S}};
  auto s = summarize_distributions(w, GridSpec{0.0, 0.2, 3});
  TempDir dir;
  write_means_csv(s, dir / "means.csv");
  EXPECT_EQ(read_file(dir / "means.csv"), "group,mean_N,mean_S\nPREP,NA,NA\nFRAMES,NA,0.1\nSENTIMENT,NA,NA\n");
  write_distribution_csv(s, dir / "dist.csv");
  const auto dist = read_file(dir / "dist.csv");
  EXPECT_EQ(dist.rfind("group,label_class,grid_point,density\nFRAMES,S,0,", 0), 0u);
  EXPECT_EQ(std::count(dist.begin(), dist.end(), '\n'), 4);

  ContextSample cs;
  cs.terms.terms = {Term::word("x")};
  cs.groups = {AnalysisGroup::Other};
  write_heatmap_tsv(export_heatmap(cs, std::vector<double>{1.0}), dir / "h.tsv");
  EXPECT_EQ(read_file(dir / "h.tsv"), "position\tterm\tgroup\tnormalized_weight\n0\tx\tOTHER\t1\n");
}
