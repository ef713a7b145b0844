#include "attitude/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <stdexcept>

#include "attitude/errors.hpp"

namespace attitude {

std::vector<double> extract_alpha(const ContextClassifier& model, const ContextSample& sample) {
  return model.attention(sample.terms);
}

double context_group_weight(std::span<const double> alpha, std::span<const AnalysisGroup> groups,
                            AnalysisGroup group) {
  if (alpha.size() != groups.size()) {
    throw std::invalid_argument("attention has " + std::to_string(alpha.size()) + " weights for " +
                                std::to_string(groups.size()) + " terms");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (groups[i] == group) sum += alpha[i];
  }
  return sum;
}

double context_group_weight(std::span<const double> alpha, const TermSequence& terms, AnalysisGroup group,
                            const Lexicons& lex) {
  std::vector<AnalysisGroup> groups;
  groups.reserve(terms.terms.size());
  for (const auto& t : terms.terms) groups.push_back(group_of(t, lex));
  return context_group_weight(alpha, groups, group);
}

double silverman_bandwidth(std::span<const double> samples) {
  const auto n = static_cast<double>(samples.size());
  if (samples.size() < 2) return 1e-3;
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  double mean = 0.0;
  for (double x : sorted) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : sorted) var += (x - mean) * (x - mean);
  const double sigma = std::sqrt(var / (n - 1.0));
  return std::max(1e-3, 1.06 * sigma * std::pow(n, -0.2));
}

std::vector<double> kde(std::span<const double> samples, std::span<const double> grid, std::optional<double> bandwidth) {
  if (samples.empty()) throw std::invalid_argument("kde needs at least one sample");
  // Summing sorted samples keeps the result independent of input order.
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double bw = bandwidth.value_or(silverman_bandwidth(sorted));
  if (!(bw > 0.0)) throw std::invalid_argument("kde bandwidth must be positive");
  const double norm = 1.0 / (static_cast<double>(samples.size()) * bw * std::sqrt(2.0 * std::numbers::pi));
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double acc = 0.0;
    for (double x : sorted) {
      const double u = (grid[g] - x) / bw;
      acc += std::exp(-0.5 * u * u);
    }
    out[g] = acc * norm;
  }
  return out;
}

std::vector<double> linear_grid(double lo, double hi, std::size_t points) {
  if (points < 2) throw std::invalid_argument("grid needs at least two points");
  std::vector<double> g(points);
  const double step = (hi - lo) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) g[i] = lo + step * static_cast<double>(i);
  g.back() = hi;
  return g;
}

std::string_view to_string(LabelClass c) { return c == LabelClass::N ? "N" : "S"; }

LabelClass label_class(Label label) { return label == Label::Neutral ? LabelClass::N : LabelClass::S; }

std::string context_id(const ContextSample& sample) {
  return sample.doc_id + ":" + std::to_string(sample.sentence_idx) + ":" + sample.source_group + "->" +
         sample.target_group;
}

std::vector<GroupWeightSample> collect_group_weights(const ContextClassifier& model,
                                                     const std::vector<ContextSample>& contexts) {
  std::vector<GroupWeightSample> out;
  out.reserve(contexts.size() * kReportedGroups.size());
  for (const auto& c : contexts) {
    const auto alpha = extract_alpha(model, c);
    const std::string id = context_id(c);
    for (AnalysisGroup g : kReportedGroups) {
      out.push_back({id, g, context_group_weight(alpha, c.groups, g), label_class(c.label)});
    }
  }
  return out;
}

std::vector<DistributionSummary> summarize_distributions(const std::vector<GroupWeightSample>& weights,
                                                         const GridSpec& spec) {
  const auto grid = linear_grid(spec.lo, spec.hi, spec.points);
  std::vector<DistributionSummary> out;
  for (AnalysisGroup g : kReportedGroups) {
    std::vector<double> n_side;
    std::vector<double> s_side;
    for (const auto& w : weights) {
      if (w.group != g) continue;
      (w.label_class == LabelClass::N ? n_side : s_side).push_back(w.weight);
    }
    DistributionSummary d;
    d.group = g;
    d.grid = grid;
    d.count_n = n_side.size();
    d.count_s = s_side.size();
    const auto mean = [](const std::vector<double>& v) {
      double acc = 0.0;
      for (double x : v) acc += x;
      return acc / static_cast<double>(v.size());
    };
    if (!n_side.empty()) {
      d.mean_n = mean(n_side);
      d.kde_n = kde(n_side, grid);
    }
    if (!s_side.empty()) {
      d.mean_s = mean(s_side);
      d.kde_s = kde(s_side, grid);
    }
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<DistributionSummary> summarize_distributions(const ContextClassifier& model,
                                                         const std::vector<ContextSample>& contexts,
                                                         const GridSpec& grid) {
  return summarize_distributions(collect_group_weights(model, contexts), grid);
}

std::vector<HeatmapRow> export_heatmap(const ContextSample& sample, std::span<const double> alpha) {
  const auto& terms = sample.terms.terms;
  if (alpha.size() != terms.size()) {
    throw std::invalid_argument("attention has " + std::to_string(alpha.size()) + " weights for " +
                                std::to_string(terms.size()) + " terms");
  }
  std::vector<HeatmapRow> rows;
  if (alpha.empty()) return rows;
  const double peak = *std::max_element(alpha.begin(), alpha.end());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const AnalysisGroup g = i < sample.groups.size() ? sample.groups[i] : AnalysisGroup::Other;
    rows.push_back({i, terms[i].display(), g, peak > 0.0 ? alpha[i] / peak : 0.0});
  }
  return rows;
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << std::setprecision(10);
  return out;
}

}  // namespace

void write_distribution_csv(const std::vector<DistributionSummary>& summaries, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "group,label_class,grid_point,density\n";
  for (const auto& d : summaries) {
    for (const auto& [cls, curve] : {std::pair{LabelClass::N, &d.kde_n}, std::pair{LabelClass::S, &d.kde_s}}) {
      for (std::size_t i = 0; i < curve->size(); ++i) {
        out << to_string(d.group) << ',' << to_string(cls) << ',' << d.grid[i] << ',' << (*curve)[i] << '\n';
      }
    }
  }
}

void write_means_csv(const std::vector<DistributionSummary>& summaries, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "group,mean_N,mean_S\n";
  for (const auto& d : summaries) {
    out << to_string(d.group) << ',';
    if (d.mean_n) out << *d.mean_n; else out << "NA";
    out << ',';
    if (d.mean_s) out << *d.mean_s; else out << "NA";
    out << '\n';
  }
}

void write_heatmap_tsv(const std::vector<HeatmapRow>& rows, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "position\tterm\tgroup\tnormalized_weight\n";
  for (const auto& r : rows) {
    out << r.position << '\t' << r.term << '\t' << to_string(r.group) << '\t' << r.normalized_weight << '\n';
  }
}

}  // namespace attitude
