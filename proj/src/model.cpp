#include "attitude/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

#include "attitude/errors.hpp"

namespace attitude {

using tg::Tape;
using tg::Tensor;
using tg::Var;

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

Label argmax_label(const Probabilities& probs) {
  const double best = *std::max_element(probs.begin(), probs.end());
  std::size_t hits = 0;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] == best) {
      ++hits;
      arg = i;
    }
  }
  if (hits > 1) return Label::Neutral;
  return static_cast<Label>(arg);
}

// ---- head -------------------------------------------------------------------

ClassifierHead::ClassifierHead(std::size_t z, tg::ParameterSet& params, tg::Rng& rng) : z_(z) {
  const double scale = std::sqrt(6.0 / static_cast<double>(z + kNumClasses));
  w_ = &params.add("head.W", Tensor::uniform({z, kNumClasses}, scale, rng));
  b_ = &params.add("head.b", Tensor({kNumClasses}));
}

Var ClassifierHead::forward(Tape& tape, Var s) const {
  if (s.value().rank() != 1 || s.value().size() != z_) {
    throw ShapeError("classifier head expects a context vector of size " + std::to_string(z_) + ", got " +
                     tg::shape_string(s.value().shape()));
  }
  const Var r = tg::add(tg::matmul(tg::tanh(s), tape.param(*w_)), tape.param(*b_));
  return tg::softmax(r);
}

Prediction head_forward(const Tensor& s, const ClassifierHead& head) {
  Tape tape;
  const Var probs = head.forward(tape, tape.constant(s));
  Prediction p;
  for (std::size_t i = 0; i < kNumClasses; ++i) p.probs[i] = probs.value()[i];
  p.label = argmax_label(p.probs);
  return p;
}

// ---- classifier -------------------------------------------------------------

ContextClassifier::ContextClassifier(const ModelConfig& cfg, Vocabulary vocab, std::uint64_t seed)
    : cfg_(cfg), vocab_(std::move(vocab)) {
  tg::Rng rng(seed);
  embedding_ = std::make_unique<EmbeddingLayer>(cfg_.embedding, vocab_.size(), params_, rng);
  encoder_ = make_encoder(cfg_.encoder, embedding_->row_width(), params_, rng);
  head_ = std::make_unique<ClassifierHead>(encoder_->output_size(), params_, rng);
  if (cfg_.pretrained) embedding_->load_pretrained(*cfg_.pretrained, vocab_);
}

ContextClassifier::Forward ContextClassifier::forward(Tape& tape, const TermSequence& seq) const {
  Forward f;
  f.embedded = embedding_->embed(tape, seq, vocab_, cfg_.encoder.n);
  f.encoded = encoder_->encode(tape, f.embedded);
  f.probs = head_->forward(tape, f.encoded.s);
  return f;
}

Prediction ContextClassifier::predict(const TermSequence& seq) const {
  Tape tape;
  const Forward f = forward(tape, seq);
  Prediction p;
  for (std::size_t i = 0; i < kNumClasses; ++i) p.probs[i] = f.probs.value()[i];
  p.label = argmax_label(p.probs);
  return p;
}

std::vector<double> ContextClassifier::attention(const TermSequence& seq) const {
  if (!is_attentive(cfg_.encoder.kind)) {
    throw std::invalid_argument("encoder '" + std::string(to_string(cfg_.encoder.kind)) + "' has no attention");
  }
  Tape tape;
  const Forward f = forward(tape, seq);
  const auto values = f.encoded.alpha->value().values();
  return {values.begin(), values.end()};
}

void ContextClassifier::save(const std::filesystem::path& checkpoint) const {
  tg::save_checkpoint(params_, checkpoint);
}

void ContextClassifier::load(const std::filesystem::path& checkpoint) { tg::load_checkpoint(params_, checkpoint); }

Vocabulary build_vocabulary(const std::vector<ContextSample>& contexts) {
  Vocabulary v;
  for (const auto& c : contexts) v.add_terms(c.terms);
  return v;
}

// ---- evaluation -------------------------------------------------------------

std::map<OpinionKey, Label> aggregate_opinions(std::span<const ContextPrediction> predictions) {
  std::map<OpinionKey, std::pair<Probabilities, std::size_t>> sums;
  for (const auto& p : predictions) {
    auto& [acc, count] = sums[p.key];
    for (std::size_t i = 0; i < kNumClasses; ++i) acc[i] += p.probs[i];
    ++count;
  }
  std::map<OpinionKey, Label> out;
  for (auto& [key, entry] : sums) {
    auto& [acc, count] = entry;
    for (double& v : acc) v /= static_cast<double>(count);
    out.emplace(key, argmax_label(acc));
  }
  return out;
}

double ClassCounts::f1() const {
  const double p = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double r = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

double macro_f1(const std::map<OpinionKey, Label>& predicted, const std::vector<Opinion>& gold, F1Scope scope) {
  std::map<OpinionKey, Label> gold_map;
  for (const auto& op : gold) gold_map[{op.doc_id, op.source_group, op.target_group}] = op.label;

  std::set<OpinionKey> keys;
  for (const auto& [k, _] : predicted) keys.insert(k);
  for (const auto& [k, _] : gold_map) keys.insert(k);

  // Per document: counts for positive [0] and negative [1].
  std::map<std::string, std::array<ClassCounts, 2>> per_doc;
  for (const auto& key : keys) {
    const auto pit = predicted.find(key);
    const auto git = gold_map.find(key);
    const Label p = pit == predicted.end() ? Label::Neutral : pit->second;
    const Label g = git == gold_map.end() ? Label::Neutral : git->second;
    auto& counts = per_doc[key.doc_id];
    for (std::size_t c = 0; c < 2; ++c) {
      const auto cls = static_cast<Label>(c);
      if (p == cls && g == cls) ++counts[c].tp;
      if (p == cls && g != cls) ++counts[c].fp;
      if (p != cls && g == cls) ++counts[c].fn;
    }
  }
  if (per_doc.empty()) return 0.0;

  if (scope == F1Scope::Collection) {
    std::array<ClassCounts, 2> total{};
    for (const auto& [_, counts] : per_doc) {
      for (std::size_t c = 0; c < 2; ++c) {
        total[c].tp += counts[c].tp;
        total[c].fp += counts[c].fp;
        total[c].fn += counts[c].fn;
      }
    }
    return 0.5 * (total[0].f1() + total[1].f1());
  }
  double acc = 0.0;
  for (const auto& [_, counts] : per_doc) acc += 0.5 * (counts[0].f1() + counts[1].f1());
  return acc / static_cast<double>(per_doc.size());
}

std::vector<ContextPrediction> predict_contexts(const ContextClassifier& model,
                                                const std::vector<ContextSample>& contexts) {
  std::vector<ContextPrediction> out;
  out.reserve(contexts.size());
  for (const auto& c : contexts) {
    out.push_back({{c.doc_id, c.source_group, c.target_group}, model.predict(c.terms).probs});
  }
  return out;
}

double evaluate(const ContextClassifier& model, const PreparedCorpus& data, F1Scope scope) {
  const auto predictions = predict_contexts(model, data.contexts);
  return macro_f1(aggregate_opinions(predictions), data.opinions, scope);
}

// ---- training ---------------------------------------------------------------

void TrainConfig::validate() const {
  if (eval_period == 0) throw std::invalid_argument("eval_period must be positive");
  if (!(stop_threshold >= 0.0 && stop_threshold < 1.0)) {
    throw std::invalid_argument("stop_threshold must lie in [0, 1)");
  }
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (!(neutral_keep > 0.0 && neutral_keep <= 1.0)) throw std::invalid_argument("neutral_keep must lie in (0, 1]");
}

bool should_stop(std::size_t epoch, double train_f1, const TrainConfig& cfg) {
  return train_f1 > cfg.stop_threshold || epoch >= cfg.max_epochs;
}

RunHistory train(ContextClassifier& model, const PreparedCorpus& data, const TrainConfig& cfg) {
  cfg.validate();
  RunHistory history;
  if (cfg.max_epochs == 0) return history;
  if (data.contexts.empty()) throw DataError("no training contexts");

  std::unique_ptr<tg::Optimizer> optimizer;
  if (cfg.optimizer == OptimizerKind::Adam) {
    optimizer = std::make_unique<tg::Adam>(cfg.learning_rate, cfg.weight_decay);
  } else {
    optimizer = std::make_unique<tg::Sgd>(cfg.learning_rate, cfg.weight_decay);
  }
  tg::Rng rng(mix_seed(cfg.seed, 0x5eed));
  std::bernoulli_distribution keep_neutral(cfg.neutral_keep);
  auto& params = model.parameters();
  Tape tape;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::vector<std::size_t> order;
    order.reserve(data.contexts.size());
    for (std::size_t i = 0; i < data.contexts.size(); ++i) {
      if (data.contexts[i].label == Label::Neutral && cfg.neutral_keep < 1.0 && !keep_neutral(rng)) continue;
      order.push_back(i);
    }
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double weight = 1.0 / static_cast<double>(end - start);
      params.zero_grad();
      for (std::size_t b = start; b < end; ++b) {
        const ContextSample& sample = data.contexts[order[b]];
        tape.clear();
        const auto f = model.forward(tape, sample.terms);
        const Var loss = tg::cross_entropy(f.probs, static_cast<std::size_t>(sample.label));
        const double value = loss.value().item();
        if (!std::isfinite(value)) {
          throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + " on context " + sample.doc_id +
                             ":" + std::to_string(sample.sentence_idx) + " " + sample.source_group + "->" +
                             sample.target_group);
        }
        loss_sum += value;
        tape.backward(loss, weight);
      }
      optimizer->step(params);
    }
    for (const auto* p : std::as_const(params).all()) {
      if (!p->value.all_finite()) {
        throw NumericError("parameter '" + p->name + "' became non-finite at epoch " + std::to_string(epoch));
      }
    }
    history.epochs_run = epoch;

    if (epoch % cfg.eval_period == 0) {
      const double f1 = evaluate(model, data, cfg.scope);
      const double mean_loss = order.empty() ? 0.0 : loss_sum / static_cast<double>(order.size());
      history.measurements.push_back({epoch, f1, mean_loss});
      history.final_f1 = f1;
      if (should_stop(epoch, f1, cfg)) break;
    }
  }
  return history;
}

void write_history_csv(const RunHistory& history, const std::filesystem::path& path, std::uint64_t seed) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "# seed=" << seed << '\n';
  out << "epoch,train_f1,loss\n";
  out << std::setprecision(17);
  for (const auto& m : history.measurements) out << m.epoch << ',' << m.train_f1 << ',' << m.loss << '\n';
}

// ---- experiments ------------------------------------------------------------

namespace {

struct FoldRun {
  double f1 = 0.0;
  RunHistory history;
  std::unique_ptr<ContextClassifier> model;
  PreparedCorpus held_out;
};

FoldRun run_fold(const PreparedCorpus& train_part, PreparedCorpus test_part, const Vocabulary& vocab,
                 const ModelConfig& model_cfg, const TrainConfig& cfg, std::uint64_t seed) {
  FoldRun run;
  TrainConfig fold_cfg = cfg;
  fold_cfg.seed = mix_seed(seed, 1);
  run.model = std::make_unique<ContextClassifier>(model_cfg, vocab, mix_seed(seed, 2));
  run.history = train(*run.model, train_part, fold_cfg);
  run.f1 = evaluate(*run.model, test_part, cfg.scope);
  run.held_out = std::move(test_part);
  return run;
}

}  // namespace

CvResult run_cv(const PreparedCorpus& data, const ModelConfig& model_cfg, const TrainConfig& cfg,
                std::size_t folds, std::size_t jobs, const std::function<void(const FoldOutcome&)>& on_fold) {
  const FoldAssignment assignment = split_folds(data.documents, folds, cfg.seed);
  const Vocabulary vocab = build_vocabulary(data.contexts);

  const auto fold_parts = [&](std::size_t fold) {
    std::set<std::string> train_ids;
    std::set<std::string> test_ids;
    for (const auto& [id, f] : assignment.fold_of_doc) (f == fold ? test_ids : train_ids).insert(id);
    return std::pair{data.subset(train_ids), data.subset(test_ids)};
  };

  CvResult result;
  result.fold_f1.resize(folds);
  result.histories.resize(folds);
  const auto finish = [&](std::size_t fold, FoldRun& run) {
    result.fold_f1[fold] = run.f1;
    result.histories[fold] = run.history;
    if (on_fold) on_fold({fold, run.f1, run.history, run.model.get(), &run.held_out});
  };

  if (jobs <= 1) {
    for (std::size_t fold = 0; fold < folds; ++fold) {
      auto [train_part, test_part] = fold_parts(fold);
      FoldRun run = run_fold(train_part, std::move(test_part), vocab, model_cfg, cfg, mix_seed(cfg.seed, 100 + fold));
      finish(fold, run);
    }
  } else {
    std::vector<FoldRun> runs(folds);
    std::vector<std::exception_ptr> errors(folds);
    std::size_t next = 0;
    std::mutex mutex;
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < std::min(jobs, folds); ++w) {
      workers.emplace_back([&] {
        while (true) {
          std::size_t fold;
          {
            std::lock_guard lock(mutex);
            if (next >= folds) return;
            fold = next++;
          }
          try {
            auto [train_part, test_part] = fold_parts(fold);
            runs[fold] = run_fold(train_part, std::move(test_part), vocab, model_cfg, cfg,
                                  mix_seed(cfg.seed, 100 + fold));
          } catch (...) {
            errors[fold] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : workers) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
    for (std::size_t fold = 0; fold < folds; ++fold) finish(fold, runs[fold]);
  }
  result.mean_f1 = std::accumulate(result.fold_f1.begin(), result.fold_f1.end(), 0.0) / static_cast<double>(folds);
  return result;
}

std::pair<PreparedCorpus, PreparedCorpus> split_prepared(const PreparedCorpus& data, const SplitManifest& manifest) {
  std::set<std::string> ids;
  for (const auto& d : data.documents) ids.insert(d.doc_id);
  for (const auto& [id, _] : manifest) {
    if (!ids.count(id)) throw DataError("manifest lists unknown document '" + id + "'");
  }
  std::set<std::string> train_ids;
  std::set<std::string> test_ids;
  for (const auto& id : ids) {
    const auto it = manifest.find(id);
    if (it == manifest.end()) throw DataError("manifest is missing document '" + id + "'");
    (it->second == Split::Train ? train_ids : test_ids).insert(id);
  }
  return {data.subset(train_ids), data.subset(test_ids)};
}

TrainTestResult run_train_test(const PreparedCorpus& data, const SplitManifest& manifest,
                               const ModelConfig& model_cfg, const TrainConfig& cfg,
                               const std::function<void(const FoldOutcome&)>& on_done) {
  auto [train_part, test_part] = split_prepared(data, manifest);
  const Vocabulary vocab = build_vocabulary(data.contexts);
  FoldRun run = run_fold(train_part, std::move(test_part), vocab, model_cfg, cfg, mix_seed(cfg.seed, 100));
  if (on_done) on_done({0, run.f1, run.history, run.model.get(), &run.held_out});
  return {run.f1, run.history};
}

void write_cv_csv(const CvResult& result, const std::filesystem::path& path, std::uint64_t seed) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "# seed=" << seed << '\n';
  out << "fold,f1\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < result.fold_f1.size(); ++i) out << i << ',' << result.fold_f1[i] << '\n';
  out << "mean," << result.mean_f1 << '\n';
}

}  // namespace attitude
