#include "attitude/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "attitude/errors.hpp"
#include "attitude/text.hpp"

namespace attitude {

using tg::Parameter;
using tg::ParameterSet;
using tg::Rng;
using tg::Tape;
using tg::Tensor;
using tg::Var;

namespace {

double xavier(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

}  // namespace

std::string_view to_string(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::Cnn: return "cnn";
    case EncoderKind::Pcnn: return "pcnn";
    case EncoderKind::Lstm: return "lstm";
    case EncoderKind::BiLstm: return "bilstm";
    case EncoderKind::AttBiLstm: return "att-blstm";
    case EncoderKind::AttBiLstmZYang: return "att-blstm-zyang";
    case EncoderKind::AttCnn: return "att-cnn";
    case EncoderKind::Ian: return "ian";
  }
  return "cnn";
}

std::optional<EncoderKind> parse_encoder_kind(std::string_view s) {
  for (auto k : kAllEncoderKinds) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

bool is_attentive(EncoderKind kind) {
  return kind == EncoderKind::AttBiLstm || kind == EncoderKind::AttBiLstmZYang || kind == EncoderKind::AttCnn ||
         kind == EncoderKind::Ian;
}

bool uses_features(EncoderKind kind) { return kind == EncoderKind::AttCnn || kind == EncoderKind::Ian; }

std::string_view to_string(FeatureMode mode) { return mode == FeatureMode::AttEnds ? "att-ends" : "att-ef"; }

std::optional<FeatureMode> parse_feature_mode(std::string_view s) {
  if (s == "att-ends") return FeatureMode::AttEnds;
  if (s == "att-ef") return FeatureMode::AttEf;
  return std::nullopt;
}

bool default_use_position(EncoderKind kind) {
  return kind == EncoderKind::Cnn || kind == EncoderKind::Pcnn || kind == EncoderKind::AttCnn;
}

void EmbeddingConfig::validate() const {
  if (word_dim == 0) throw std::invalid_argument("word embedding dimension must be positive");
  if (use_position && position_dim == 0) throw std::invalid_argument("position dimension must be positive");
}

void EncoderConfig::validate() const {
  if (n < 2) throw std::invalid_argument("max context length n must be at least 2");
  if (h < 1) throw std::invalid_argument("hidden size h must be at least 1");
  if (k < 2) throw std::invalid_argument("feature limit k must be at least 2");
  if (filters < 1) throw std::invalid_argument("filter count must be positive");
  if (window < 1) throw std::invalid_argument("window must be positive");
}

std::size_t EncoderConfig::output_size(std::size_t row_width) const {
  switch (kind) {
    case EncoderKind::Cnn: return filters;
    case EncoderKind::Pcnn: return 3 * filters;
    case EncoderKind::Lstm: return h;
    case EncoderKind::BiLstm:
    case EncoderKind::AttBiLstm:
    case EncoderKind::AttBiLstmZYang: return 2 * h;
    case EncoderKind::AttCnn: return 3 * filters + row_width;
    case EncoderKind::Ian: return 4 * h;
  }
  return 0;
}

// ---- vocabulary -------------------------------------------------------------

Vocabulary::Vocabulary() {
  for (const char* t : {"<pad>", "<unk>", "<e-subj>", "<e-obj>", "<e>", "<punct>", "<num>", "<url>"}) add(t);
}

std::size_t Vocabulary::add(const std::string& token) {
  if (const auto it = ids_.find(token); it != ids_.end()) return it->second;
  tokens_.push_back(token);
  ids_.emplace(token, tokens_.size() - 1);
  return tokens_.size() - 1;
}

std::optional<std::size_t> Vocabulary::find(const std::string& token) const {
  const auto it = ids_.find(token);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::size_t Vocabulary::id_of(const Term& term) const {
  switch (term.kind) {
    case TermKind::EntitySubj: return kSubj;
    case TermKind::EntityObj: return kObj;
    case TermKind::EntityOther: return kOther;
    case TermKind::Token:
      switch (term.token) {
        case TokenKind::Punctuation: return kPunct;
        case TokenKind::Number: return kNumber;
        case TokenKind::Url: return kUrl;
      }
      return kPunct;
    case TermKind::Word:
    case TermKind::Frame: {
      const auto id = find(term.lemma);
      return id ? *id : kUnk;
    }
  }
  return kUnk;
}

void Vocabulary::add_terms(const TermSequence& seq) {
  for (const auto& t : seq.terms) {
    if (t.kind == TermKind::Word || t.kind == TermKind::Frame) add(t.lemma);
  }
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write vocabulary " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary " + path.string());
  Vocabulary v;
  const Vocabulary reference;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno <= reference.size()) {
      if (line != reference.token(lineno - 1)) throw ParseError(path.string(), lineno, "reserved token mismatch");
      continue;
    }
    if (v.find(line)) throw ParseError(path.string(), lineno, "duplicate token '" + line + "'");
    v.add(line);
  }
  return v;
}

// ---- embeddings -------------------------------------------------------------

EmbeddingLayer::EmbeddingLayer(const EmbeddingConfig& cfg, std::size_t vocab_size, ParameterSet& params, Rng& rng)
    : cfg_(cfg) {
  cfg_.validate();
  word_ = &params.add("emb.word", Tensor::uniform({vocab_size, cfg.word_dim}, cfg.init_scale, rng));
  word_->trainable = cfg.train_words;
  if (cfg.polarity_dim > 0) {
    polarity_ = &params.add("emb.polarity", Tensor::uniform({3, cfg.polarity_dim}, cfg.init_scale, rng));
  }
  if (cfg.use_position) {
    position_ = &params.add("emb.position",
                            Tensor::uniform({2 * cfg.max_distance + 1, cfg.position_dim}, cfg.init_scale, rng));
  }
}

std::size_t EmbeddingLayer::position_id(long distance) const {
  const long d = static_cast<long>(cfg_.max_distance);
  return static_cast<std::size_t>(std::clamp(distance, -d, d) + d);
}

EmbeddedContext EmbeddingLayer::embed(Tape& tape, const TermSequence& seq, const Vocabulary& vocab,
                                      std::size_t n) const {
  if (seq.size() > n) {
    throw ShapeError("sequence of " + std::to_string(seq.size()) + " terms exceeds n = " + std::to_string(n));
  }
  if (seq.size() == 0) throw ShapeError("empty term sequence");
  EmbeddedContext ctx;
  ctx.n = n;
  ctx.n_real = seq.size();
  ctx.subj_pos = seq.subj_pos;
  ctx.obj_pos = seq.obj_pos;

  std::vector<std::size_t> word_ids(n, Vocabulary::kPad);
  std::vector<std::size_t> pol_ids(n, static_cast<std::size_t>(Polarity::Neutral));
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const Term& t = seq.terms[i];
    word_ids[i] = vocab.id_of(t);
    if (word_ids[i] >= word_->value.rows()) word_ids[i] = Vocabulary::kUnk;
    if (t.kind == TermKind::Frame) {
      pol_ids[i] = static_cast<std::size_t>(t.polarity);
      ctx.frame_positions.push_back(i);
    }
  }
  std::vector<Var> parts;
  if (cfg_.train_words) {
    parts.push_back(tg::embedding_lookup(tape.param(*word_), word_ids));
  } else {
    Tensor rows({n, cfg_.word_dim});
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < cfg_.word_dim; ++c) rows.at(i, c) = word_->value.at(word_ids[i], c);
    }
    parts.push_back(tape.constant(std::move(rows)));
  }
  if (polarity_) parts.push_back(tg::embedding_lookup(tape.param(*polarity_), pol_ids));
  if (position_) {
    std::vector<std::size_t> to_subj(n);
    std::vector<std::size_t> to_obj(n);
    for (std::size_t i = 0; i < n; ++i) {
      to_subj[i] = position_id(static_cast<long>(i) - static_cast<long>(seq.subj_pos));
      to_obj[i] = position_id(static_cast<long>(i) - static_cast<long>(seq.obj_pos));
    }
    parts.push_back(tg::embedding_lookup(tape.param(*position_), to_subj));
    parts.push_back(tg::embedding_lookup(tape.param(*position_), to_obj));
  }
  ctx.x = parts.size() == 1 ? parts.front() : tg::concat_cols(parts);
  return ctx;
}

std::size_t EmbeddingLayer::load_pretrained(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embeddings " + path.string());
  std::size_t set = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto fields = text::split_whitespace(line);
    if (fields.empty()) continue;
    // word2vec text files may start with a "count dim" header.
    if (lineno == 1 && fields.size() == 2) continue;
    if (fields.size() != cfg_.word_dim + 1) {
      throw ParseError(path.string(), lineno,
                       "expected " + std::to_string(cfg_.word_dim) + " values, got " +
                           std::to_string(fields.size() - 1));
    }
    const auto id = vocab.find(fields[0]);
    if (!id || *id >= word_->value.rows()) continue;
    for (std::size_t c = 0; c < cfg_.word_dim; ++c) {
      try {
        word_->value.at(*id, c) = std::stod(fields[c + 1]);
      } catch (const std::exception&) {
        throw ParseError(path.string(), lineno, "invalid number '" + fields[c + 1] + "'");
      }
    }
    ++set;
  }
  return set;
}

std::vector<double> EncoderOutput::padded_alpha(std::size_t n) const {
  if (!alpha) return {};
  std::vector<double> out(n, 0.0);
  const Tensor& a = alpha->value();
  for (std::size_t i = 0; i < a.size() && i < n; ++i) out[i] = a[i];
  return out;
}

// ---- features ---------------------------------------------------------------

std::vector<std::size_t> select_feature_positions(const EmbeddedContext& ctx, FeatureMode mode, std::size_t k) {
  std::vector<std::size_t> pos{ctx.subj_pos, ctx.obj_pos};
  if (mode == FeatureMode::AttEf) {
    for (std::size_t p : ctx.frame_positions) {
      if (pos.size() >= k) break;
      pos.push_back(p);
    }
  }
  return pos;
}

FeatureSet select_features(const EmbeddedContext& ctx, FeatureMode mode, std::size_t k) {
  FeatureSet fs;
  fs.positions = select_feature_positions(ctx, mode, k);
  fs.rows = tg::gather_rows(ctx.x, fs.positions);
  return fs;
}

// ---- building blocks --------------------------------------------------------

LstmCell LstmCell::create(ParameterSet& params, const std::string& prefix, std::size_t input, std::size_t hidden,
                          Rng& rng) {
  LstmCell cell;
  cell.input = input;
  cell.hidden = hidden;
  cell.w = &params.add(prefix + ".w", Tensor::uniform({input + hidden, 4 * hidden}, xavier(input + hidden, hidden), rng));
  Tensor bias({4 * hidden});
  for (std::size_t i = hidden; i < 2 * hidden; ++i) bias[i] = 1.0;  // forget gate
  cell.b = &params.add(prefix + ".b", std::move(bias));
  return cell;
}

std::vector<Var> LstmCell::run(Tape& tape, Var x, bool reverse) const {
  const std::size_t steps = x.value().rows();
  if (x.value().cols() != input) {
    throw ShapeError("LSTM expects input width " + std::to_string(input) + ", got " +
                     std::to_string(x.value().cols()));
  }
  const Var w_var = tape.param(*w);
  const Var b_var = tape.param(*b);
  Var h = tape.constant(Tensor({hidden}));
  Var c = tape.constant(Tensor({hidden}));
  std::vector<Var> states(steps);
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t i = reverse ? steps - 1 - s : s;
    const Var z = tg::add(tg::matmul(tg::concat({tg::row(x, i), h}), w_var), b_var);
    const Var in_gate = tg::sigmoid(tg::slice(z, 0, hidden));
    const Var forget = tg::sigmoid(tg::slice(z, hidden, hidden));
    const Var out_gate = tg::sigmoid(tg::slice(z, 2 * hidden, hidden));
    const Var cand = tg::tanh(tg::slice(z, 3 * hidden, hidden));
    c = tg::add(tg::mul(forget, c), tg::mul(in_gate, cand));
    h = tg::mul(out_gate, tg::tanh(c));
    states[i] = h;
  }
  return states;
}

Var bilstm_states(Tape& tape, Var x, const LstmCell& forward, const LstmCell& backward) {
  const auto fw = forward.run(tape, x, false);
  const auto bw = backward.run(tape, x, true);
  std::vector<Var> combined;
  combined.reserve(fw.size());
  for (std::size_t i = 0; i < fw.size(); ++i) combined.push_back(tg::concat({fw[i], bw[i]}));
  return tg::stack_rows(combined);
}

Var piecewise_max_pool(Var m, std::size_t p1, std::size_t p2, std::size_t n_real) {
  if (!(p1 <= p2 && p2 < n_real && n_real <= m.value().rows())) {
    throw ShapeError("piecewise_max_pool: invalid segment bounds");
  }
  const std::size_t f = m.value().cols();
  Tape& tape = *m.tape();
  const std::size_t bounds[4] = {0, p1 + 1, p2 + 1, n_real};
  std::vector<Var> parts;
  for (std::size_t s = 0; s < 3; ++s) {
    const std::size_t count = bounds[s + 1] - bounds[s];
    if (count == 0) {
      parts.push_back(tape.constant(Tensor({f})));
    } else {
      parts.push_back(tg::max_pool_over_time(tg::rows(m, bounds[s], count)));
    }
  }
  return tg::concat(parts);
}

Var Encoder::real_rows(Tape&, const EmbeddedContext& ctx) const {
  if (ctx.x.value().cols() != row_width_) {
    throw ShapeError("encoder expects row width " + std::to_string(row_width_) + ", got " +
                     std::to_string(ctx.x.value().cols()));
  }
  if (ctx.n_real == ctx.x.value().rows()) return ctx.x;
  return tg::rows(ctx.x, 0, ctx.n_real);
}

// ---- encoders ---------------------------------------------------------------

namespace {

struct Conv {
  Parameter* w = nullptr;
  Parameter* b = nullptr;

  static Conv create(ParameterSet& params, std::size_t window, std::size_t row_width, std::size_t filters, Rng& rng) {
    Conv c;
    c.w = &params.add("enc.conv.w",
                      Tensor::uniform({window, row_width, filters}, xavier(window * row_width, filters), rng));
    c.b = &params.add("enc.conv.b", Tensor({filters}));
    return c;
  }

  Var apply(Tape& tape, Var x) const { return tg::tanh(tg::conv1d(x, tape.param(*w), tape.param(*b))); }
};

Var pcnn_vector(Tape& tape, const Conv& conv, Var x, const EmbeddedContext& ctx) {
  const Var c = conv.apply(tape, x);
  const std::size_t p1 = std::min(ctx.subj_pos, ctx.obj_pos);
  const std::size_t p2 = std::max(ctx.subj_pos, ctx.obj_pos);
  return piecewise_max_pool(c, p1, p2, ctx.n_real);
}

class CnnEncoder final : public Encoder {
 public:
  CnnEncoder(const EncoderConfig& cfg, std::size_t row_width, ParameterSet& params, Rng& rng)
      : Encoder(cfg, row_width), conv_(Conv::create(params, cfg.window, row_width, cfg.filters, rng)) {}

  EncoderOutput encode(Tape& tape, const EmbeddedContext& ctx) const override {
    const Var x = real_rows(tape, ctx);
    return {tg::max_pool_over_time(conv_.apply(tape, x)), std::nullopt, output_size()};
  }

 private:
  Conv conv_;
};

class PcnnEncoder final : public Encoder {
 public:
  PcnnEncoder(const EncoderConfig& cfg, std::size_t row_width, ParameterSet& params, Rng& rng)
      : Encoder(cfg, row_width), conv_(Conv::create(params, cfg.window, row_width, cfg.filters, rng)) {}

  EncoderOutput encode(Tape& tape, const EmbeddedContext& ctx) const override {
    const Var x = real_rows(tape, ctx);
    return {pcnn_vector(tape, conv_, x, ctx), std::nullopt, output_size()};
  }

 private:
  Conv conv_;
};

class LstmEncoder final : public Encoder {
 public:
  LstmEncoder(const EncoderConfig& cfg, std::size_t row_width, ParameterSet& params, Rng& rng)
      : Encoder(cfg, row_width), cell_(LstmCell::create(params, "enc.lstm", row_width, cfg.h, rng)) {}

  EncoderOutput encode(Tape& tape, const EmbeddedContext& ctx) const override {
    const auto states = cell_.run(tape, real_rows(tape, ctx));
    return {states.back(), std::nullopt, output_size()};
  }

 private:
  LstmCell cell_;
};

class BiLstmEncoder final : public Encoder {
 public:
  BiLstmEncoder(const EncoderConfig& cfg, std::size_t row_width, ParameterSet& params, Rng& rng)
      : Encoder(cfg, row_width),
        fw_(LstmCell::create(params, "enc.fw", row_width, cfg.h, rng)),
        bw_(LstmCell::create(params, "enc.bw", row_width, cfg.h, rng)) {}

  EncoderOutput encode(Tape& tape, const EmbeddedContext& ctx) const override {
    const Var x = real_rows(tape, ctx);
    const auto fw = fw_.run(tape, x, false);
    const auto bw = bw_.run(tape, x, true);
    return {tg::concat({fw.back(), bw.back()}), std::nullopt, output_size()};
  }

 private:
  LstmCell fw_;
  LstmCell bw_;
};

// Trainable-vector attention over BiLSTM states: m = tanh(H), u = m w,
// alpha = softmax(u), s = tanh(alpha H).
class AttBiLstmEncoder final : public Encoder {
 public:
  AttBiLstmEncoder(const EncoderConfig& cfg, std::size_t row_width, ParameterSet& params, Rng& rng)
      : Encoder(cfg, row_width),
        fw_(LstmCell::create(params, "enc.fw", row_width, cfg.h, rng)),
        bw_(LstmCell::create(params, "enc.bw", row_width, cfg.h, rng)),
        w_(&params.add("enc.att.w", Tensor::uniform({2 * cfg.h}, xavier(2 * cfg.h, 1), rng))) {}

  EncoderOutput encode(Tape& tape, const EmbeddedContext& ctx) const override {
    const Var hs = bilstm_states(tape, real_rows(tape, ctx), fw_, bw_);
    const Var u = tg::matmul(tg::tanh(hs), tape.param(*w_));
    const Var alpha = tg::softmax(u);
    const Var s = tg::tanh(tg::matmul(alpha, hs));
    return {s, alpha, output_size()};
  }

 private:
  LstmCell fw_;
  LstmCell bw_;
  Parameter* w_;
};

// Word-level attention of hierarchical attention networks:
// v = tanh(H Wa + ba), alpha = softmax(v uw), s = alpha H.
class AttBiLstmZYangEncoder final : public Encoder {
 public:
  AttBiLstmZYangEncoder(const EncoderConfig& cfg, std::size_t row_width, ParameterSet& params, Rng& rng)
      : Encoder(cfg, row_width),
        fw_(LstmCell::create(params, "enc.fw", row_width, cfg.h, rng)),
        bw_(LstmCell::create(params, "enc.bw", row_width, cfg.h, rng)),
        wa_(&params.add("enc.att.Wa", Tensor::uniform({2 * cfg.h, 2 * cfg.h}, xavier(2 * cfg.h, 2 * cfg.h), rng))),
        ba_(&params.add("enc.att.ba", Tensor({2 * cfg.h}))),
        uw_(&params.add("enc.att.uw", Tensor::uniform({2 * cfg.h}, xavier(2 * cfg.h, 1), rng))) {}

  EncoderOutput encode(Tape& tape, const EmbeddedContext& ctx) const override {
    const Var hs = bilstm_states(tape, real_rows(tape, ctx), fw_, bw_);
    const Var v = tg::tanh(tg::add(tg::matmul(hs, tape.param(*wa_)), tape.param(*ba_)));
    const Var alpha = tg::softmax(tg::matmul(v, tape.param(*uw_)));
    return {tg::matmul(alpha, hs), alpha, output_size()};
  }

 private:
  LstmCell fw_;
  LstmCell bw_;
  Parameter* wa_;
  Parameter* ba_;
  Parameter* uw_;
};

// Feature-attentive PCNN: per feature f_j, e_ij = w2 . tanh(W1 [x_i ; f_j] + b1),
// alpha_j = softmax_i(e_.j), c_j = alpha_j X; s = [pcnn(X) ; mean_j c_j].
class AttCnnEncoder final : public Encoder {
 public:
  AttCnnEncoder(const EncoderConfig& cfg, std::size_t row_width, ParameterSet& params, Rng& rng)
      : Encoder(cfg, row_width),
        conv_(Conv::create(params, cfg.window, row_width, cfg.filters, rng)),
        w1x_(&params.add("enc.att.W1x", Tensor::uniform({row_width, cfg.h}, xavier(2 * row_width, cfg.h), rng))),
        w1f_(&params.add("enc.att.W1f", Tensor::uniform({row_width, cfg.h}, xavier(2 * row_width, cfg.h), rng))),
        b1_(&params.add("enc.att.b1", Tensor({cfg.h}))),
        w2_(&params.add("enc.att.w2", Tensor::uniform({cfg.h}, xavier(cfg.h, 1), rng))) {}

  EncoderOutput encode(Tape& tape, const EmbeddedContext& ctx) const override {
    const Var x = real_rows(tape, ctx);
    const FeatureSet features = select_features(ctx, cfg_.features, cfg_.k);
    const std::size_t count = features.positions.size();
    if (count == 0) throw ShapeError("att-cnn: empty feature set");

    const Var projected = tg::matmul(x, tape.param(*w1x_));  // [n × h]
    const Var feature_proj = tg::matmul(features.rows, tape.param(*w1f_));  // [|F| × h]
    std::vector<Var> summaries;
    std::vector<Var> alphas;
    for (std::size_t j = 0; j < count; ++j) {
      const Var bias = tg::add(tg::row(feature_proj, j), tape.param(*b1_));
      const Var scores = tg::matmul(tg::tanh(tg::add(projected, bias)), tape.param(*w2_));
      const Var alpha = tg::softmax(scores);
      alphas.push_back(alpha);
      summaries.push_back(tg::matmul(alpha, x));
    }
    const Var attended = tg::mean_rows(tg::stack_rows(summaries));
    Var alpha = tg::mean_rows(tg::stack_rows(alphas));
    alpha = tg::scale(alpha, 1.0 / sum_of(alpha));
    const Var s = tg::concat({pcnn_vector(tape, conv_, x, ctx), attended});
    return {s, alpha, output_size()};
  }

 private:
  static double sum_of(Var v) {
    double acc = 0.0;
    for (double x : v.value().values()) acc += x;
    return acc;
  }

  Conv conv_;
  Parameter* w1x_;
  Parameter* w1f_;
  Parameter* b1_;
  Parameter* w2_;
};

// Interactive attention: BiLSTMs over the context rows (C) and the feature rows
// (T); each side attends with the mean of the other.
class IanEncoder final : public Encoder {
 public:
  IanEncoder(const EncoderConfig& cfg, std::size_t row_width, ParameterSet& params, Rng& rng)
      : Encoder(cfg, row_width),
        ctx_fw_(LstmCell::create(params, "enc.ctx.fw", row_width, cfg.h, rng)),
        ctx_bw_(LstmCell::create(params, "enc.ctx.bw", row_width, cfg.h, rng)),
        feat_fw_(LstmCell::create(params, "enc.feat.fw", row_width, cfg.h, rng)),
        feat_bw_(LstmCell::create(params, "enc.feat.bw", row_width, cfg.h, rng)),
        wc_(&params.add("enc.att.Wc", Tensor::uniform({2 * cfg.h, 2 * cfg.h}, xavier(2 * cfg.h, 2 * cfg.h), rng))),
        bc_(&params.add("enc.att.bc", Tensor({1}))),
        wt_(&params.add("enc.att.Wt", Tensor::uniform({2 * cfg.h, 2 * cfg.h}, xavier(2 * cfg.h, 2 * cfg.h), rng))),
        bt_(&params.add("enc.att.bt", Tensor({1}))) {}

  EncoderOutput encode(Tape& tape, const EmbeddedContext& ctx) const override {
    const Var x = real_rows(tape, ctx);
    const FeatureSet features = select_features(ctx, cfg_.features, cfg_.k);
    if (features.positions.empty()) throw ShapeError("ian: empty feature set");
    const Var c = bilstm_states(tape, x, ctx_fw_, ctx_bw_);
    const Var t = bilstm_states(tape, features.rows, feat_fw_, feat_bw_);
    const Var c_mean = tg::mean_rows(c);
    const Var t_mean = tg::mean_rows(t);
    const Var gamma = attend(tape, c, t_mean, *wc_, *bc_);
    const Var delta = attend(tape, t, c_mean, *wt_, *bt_);
    const Var s = tg::concat({tg::matmul(gamma, c), tg::matmul(delta, t)});
    return {s, gamma, output_size()};
  }

 private:
  static Var attend(Tape& tape, Var states, Var query, Parameter& w, Parameter& b) {
    const Var scores = tg::matmul(states, tg::matmul(tape.param(w), query));
    return tg::softmax(tg::tanh(tg::add_scalar(scores, tape.param(b))));
  }

  LstmCell ctx_fw_;
  LstmCell ctx_bw_;
  LstmCell feat_fw_;
  LstmCell feat_bw_;
  Parameter* wc_;
  Parameter* bc_;
  Parameter* wt_;
  Parameter* bt_;
};

}  // namespace

std::unique_ptr<Encoder> make_encoder(const EncoderConfig& cfg, std::size_t row_width, ParameterSet& params,
                                      Rng& rng) {
  cfg.validate();
  switch (cfg.kind) {
    case EncoderKind::Cnn: return std::make_unique<CnnEncoder>(cfg, row_width, params, rng);
    case EncoderKind::Pcnn: return std::make_unique<PcnnEncoder>(cfg, row_width, params, rng);
    case EncoderKind::Lstm: return std::make_unique<LstmEncoder>(cfg, row_width, params, rng);
    case EncoderKind::BiLstm: return std::make_unique<BiLstmEncoder>(cfg, row_width, params, rng);
    case EncoderKind::AttBiLstm: return std::make_unique<AttBiLstmEncoder>(cfg, row_width, params, rng);
    case EncoderKind::AttBiLstmZYang: return std::make_unique<AttBiLstmZYangEncoder>(cfg, row_width, params, rng);
    case EncoderKind::AttCnn: return std::make_unique<AttCnnEncoder>(cfg, row_width, params, rng);
    case EncoderKind::Ian: return std::make_unique<IanEncoder>(cfg, row_width, params, rng);
  }
  throw std::invalid_argument("unknown encoder kind");
}

}  // namespace attitude
