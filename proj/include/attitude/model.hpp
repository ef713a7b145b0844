#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "attitude/dataset.hpp"
#include "attitude/encoders.hpp"
#include "attitude/tensorgrad.hpp"

namespace attitude {

using Probabilities = std::array<double, kNumClasses>;

/// Highest-probability class; any tie for the maximum resolves to neutral.
Label argmax_label(const Probabilities& probs);

struct Prediction {
  Probabilities probs{};
  Label label = Label::Neutral;
};

/// r = tanh(s) · W_r + b_r with W_r [z × 3], b_r [3]; ρ = softmax(r).
class ClassifierHead {
 public:
  ClassifierHead(std::size_t z, tg::ParameterSet& params, tg::Rng& rng);

  /// Throws ShapeError when s does not have length z.
  tg::Var forward(tg::Tape& tape, tg::Var s) const;
  std::size_t input_size() const { return z_; }
  tg::Parameter& weights() const { return *w_; }
  tg::Parameter& bias() const { return *b_; }

 private:
  std::size_t z_;
  tg::Parameter* w_;
  tg::Parameter* b_;
};

/// Evaluates the head on a fixed context vector.
Prediction head_forward(const tg::Tensor& s, const ClassifierHead& head);

struct ModelConfig {
  EmbeddingConfig embedding;
  EncoderConfig encoder;
  /// Optional word vectors (`word v1 ... vd` lines) copied into the word table.
  std::optional<std::filesystem::path> pretrained;
};

/// Embedding layer + context encoder + classification head.
class ContextClassifier {
 public:
  ContextClassifier(const ModelConfig& cfg, Vocabulary vocab, std::uint64_t seed);

  struct Forward {
    EmbeddedContext embedded;
    EncoderOutput encoded;
    tg::Var probs;
  };

  Forward forward(tg::Tape& tape, const TermSequence& seq) const;
  Prediction predict(const TermSequence& seq) const;
  /// Attention over the real positions. Throws std::invalid_argument for
  /// non-attentive encoders.
  std::vector<double> attention(const TermSequence& seq) const;

  tg::ParameterSet& parameters() { return params_; }
  const tg::ParameterSet& parameters() const { return params_; }
  const ModelConfig& config() const { return cfg_; }
  const Vocabulary& vocabulary() const { return vocab_; }
  const EmbeddingLayer& embedding() const { return *embedding_; }
  const Encoder& encoder() const { return *encoder_; }
  const ClassifierHead& head() const { return *head_; }

  void save(const std::filesystem::path& checkpoint) const;
  /// Throws ShapeError when the checkpoint was written for other dimensions.
  void load(const std::filesystem::path& checkpoint);

 private:
  ModelConfig cfg_;
  Vocabulary vocab_;
  tg::ParameterSet params_;
  std::unique_ptr<EmbeddingLayer> embedding_;
  std::unique_ptr<Encoder> encoder_;
  std::unique_ptr<ClassifierHead> head_;
};

/// Vocabulary over the Word/Frame lemmas of the given contexts.
Vocabulary build_vocabulary(const std::vector<ContextSample>& contexts);

// ---- evaluation -------------------------------------------------------------

struct OpinionKey {
  std::string doc_id;
  std::string source_group;
  std::string target_group;

  auto operator<=>(const OpinionKey&) const = default;
};

struct ContextPrediction {
  OpinionKey key;
  Probabilities probs{};
};

/// Mean probability per opinion key, then argmax with ties to neutral.
std::map<OpinionKey, Label> aggregate_opinions(std::span<const ContextPrediction> predictions);

enum class F1Scope : std::uint8_t { PerDocument, Collection };

struct ClassCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  double f1() const;
};

/// Mean of positive and negative F1. Opinions missing from either side count
/// as neutral. PerDocument averages the per-document value over every
/// document that occurs in `gold` or `predicted`; Collection pools counts.
double macro_f1(const std::map<OpinionKey, Label>& predicted, const std::vector<Opinion>& gold,
                F1Scope scope = F1Scope::PerDocument);

std::vector<ContextPrediction> predict_contexts(const ContextClassifier& model,
                                                const std::vector<ContextSample>& contexts);
double evaluate(const ContextClassifier& model, const PreparedCorpus& data, F1Scope scope = F1Scope::PerDocument);

// ---- training ---------------------------------------------------------------

enum class OptimizerKind : std::uint8_t { Sgd, Adam };

struct TrainConfig {
  std::size_t max_epochs = 150;
  std::size_t eval_period = 10;
  double stop_threshold = 0.85;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::Adam;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
  double weight_decay = 0.0;
  /// Fraction of neutral samples kept per epoch (1 keeps all).
  double neutral_keep = 1.0;
  F1Scope scope = F1Scope::PerDocument;

  void validate() const;
};

struct Measurement {
  std::size_t epoch = 0;
  double train_f1 = 0.0;
  double loss = 0.0;
};

struct RunHistory {
  std::vector<Measurement> measurements;
  std::size_t epochs_run = 0;
  std::optional<double> final_f1;
};

/// True iff train_f1 > stop_threshold (strict) or epoch >= max_epochs.
bool should_stop(std::size_t epoch, double train_f1, const TrainConfig& cfg);

/// Mini-batch descent on mean cross-entropy. Train F1 is measured every
/// eval_period epochs; training stops per should_stop. Deterministic for a
/// given seed. Throws NumericError on a non-finite loss.
RunHistory train(ContextClassifier& model, const PreparedCorpus& data, const TrainConfig& cfg);

void write_history_csv(const RunHistory& history, const std::filesystem::path& path, std::uint64_t seed);

// ---- experiments ------------------------------------------------------------

struct FoldOutcome {
  std::size_t fold = 0;
  double f1 = 0.0;
  RunHistory history;
  const ContextClassifier* model = nullptr;
  const PreparedCorpus* held_out = nullptr;
};

struct CvResult {
  std::vector<double> fold_f1;
  std::vector<RunHistory> histories;
  double mean_f1 = 0.0;
};

/// Three-fold (by default) cross-validation over sentence-balanced folds. The
/// vocabulary is built from the whole corpus. `on_fold` sees each trained
/// model before it is released. Folds run on up to `jobs` threads; results
/// do not depend on `jobs`.
CvResult run_cv(const PreparedCorpus& data, const ModelConfig& model_cfg, const TrainConfig& cfg,
                std::size_t folds = 3, std::size_t jobs = 1,
                const std::function<void(const FoldOutcome&)>& on_fold = {});

struct TrainTestResult {
  double test_f1 = 0.0;
  RunHistory history;
};

TrainTestResult run_train_test(const PreparedCorpus& data, const SplitManifest& manifest,
                               const ModelConfig& model_cfg, const TrainConfig& cfg,
                               const std::function<void(const FoldOutcome&)>& on_done = {});

/// Documents of `data` on one side of the manifest; errors on unknown/missing ids.
std::pair<PreparedCorpus, PreparedCorpus> split_prepared(const PreparedCorpus& data, const SplitManifest& manifest);

void write_cv_csv(const CvResult& result, const std::filesystem::path& path, std::uint64_t seed);

}  // namespace attitude
