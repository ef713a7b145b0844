#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "attitude/dataset.hpp"
#include "attitude/model.hpp"

namespace attitude {

/// Attention weights of `model` over the real positions of the sample. For
/// IAN these are the context-side weights. Throws std::invalid_argument for
/// non-attentive encoders.
std::vector<double> extract_alpha(const ContextClassifier& model, const ContextSample& sample);

/// Sum of α over the positions whose group is `group`.
double context_group_weight(std::span<const double> alpha, std::span<const AnalysisGroup> groups,
                            AnalysisGroup group);
double context_group_weight(std::span<const double> alpha, const TermSequence& terms, AnalysisGroup group,
                            const Lexicons& lex);

/// 1.06 · σ̂ · N^(-1/5), never below 1e-3.
double silverman_bandwidth(std::span<const double> samples);

/// Gaussian kernel density at each grid point. Throws std::invalid_argument on
/// empty samples or a non-positive bandwidth.
std::vector<double> kde(std::span<const double> samples, std::span<const double> grid,
                        std::optional<double> bandwidth = std::nullopt);

/// `points` evenly spaced values from lo to hi inclusive.
std::vector<double> linear_grid(double lo, double hi, std::size_t points);

enum class LabelClass : std::uint8_t { N, S };
std::string_view to_string(LabelClass c);
LabelClass label_class(Label label);

struct GroupWeightSample {
  std::string context_id;
  AnalysisGroup group = AnalysisGroup::Other;
  double weight = 0.0;
  LabelClass label_class = LabelClass::N;
};

std::string context_id(const ContextSample& sample);

/// Weights of every context for the PREP, FRAMES and SENTIMENT groups, in
/// context order.
std::vector<GroupWeightSample> collect_group_weights(const ContextClassifier& model,
                                                     const std::vector<ContextSample>& contexts);

struct DistributionSummary {
  AnalysisGroup group = AnalysisGroup::Other;
  /// Unset when the corresponding side has no contexts.
  std::optional<double> mean_n;
  std::optional<double> mean_s;
  std::size_t count_n = 0;
  std::size_t count_s = 0;
  std::vector<double> grid;
  /// Empty when the side has no contexts.
  std::vector<double> kde_n;
  std::vector<double> kde_s;
};

inline constexpr std::array<AnalysisGroup, 3> kReportedGroups = {AnalysisGroup::Prep, AnalysisGroup::Frames,
                                                                  AnalysisGroup::Sentiment};

struct GridSpec {
  double lo = 0.0;
  double hi = 0.2;
  std::size_t points = 201;
};

/// One summary per reported group, means over all weights (not clipped to
/// the grid).
std::vector<DistributionSummary> summarize_distributions(const std::vector<GroupWeightSample>& weights,
                                                         const GridSpec& grid = {});
std::vector<DistributionSummary> summarize_distributions(const ContextClassifier& model,
                                                         const std::vector<ContextSample>& contexts,
                                                         const GridSpec& grid = {});

struct HeatmapRow {
  std::size_t position = 0;
  std::string term;
  AnalysisGroup group = AnalysisGroup::Other;
  double normalized_weight = 0.0;
};

/// α_i / max α for every real term, in order.
std::vector<HeatmapRow> export_heatmap(const ContextSample& sample, std::span<const double> alpha);

/// `group,label_class,grid_point,density`
void write_distribution_csv(const std::vector<DistributionSummary>& summaries, const std::filesystem::path& path);
/// `group,mean_N,mean_S`; an empty side is written as "NA".
void write_means_csv(const std::vector<DistributionSummary>& summaries, const std::filesystem::path& path);
/// `position,term,group,normalized_weight`
void write_heatmap_tsv(const std::vector<HeatmapRow>& rows, const std::filesystem::path& path);

}  // namespace attitude
