#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "attitude/tensorgrad.hpp"
#include "attitude/termizer.hpp"

namespace attitude {

enum class EncoderKind : std::uint8_t { Cnn, Pcnn, Lstm, BiLstm, AttBiLstm, AttBiLstmZYang, AttCnn, Ian };

inline constexpr EncoderKind kAllEncoderKinds[] = {EncoderKind::Cnn,       EncoderKind::Pcnn,
                                                   EncoderKind::Lstm,      EncoderKind::BiLstm,
                                                   EncoderKind::AttBiLstm, EncoderKind::AttBiLstmZYang,
                                                   EncoderKind::AttCnn,    EncoderKind::Ian};

/// CLI names: cnn, pcnn, lstm, bilstm, att-blstm, att-blstm-zyang, att-cnn, ian.
std::string_view to_string(EncoderKind kind);
std::optional<EncoderKind> parse_encoder_kind(std::string_view s);
bool is_attentive(EncoderKind kind);
bool uses_features(EncoderKind kind);

enum class FeatureMode : std::uint8_t { AttEnds, AttEf };

std::string_view to_string(FeatureMode mode);
std::optional<FeatureMode> parse_feature_mode(std::string_view s);

struct EmbeddingConfig {
  std::size_t word_dim = 32;
  std::size_t polarity_dim = 8;
  bool use_position = false;
  std::size_t position_dim = 8;
  /// Signed distances are clamped to [-max_distance, max_distance].
  std::size_t max_distance = 50;
  double init_scale = 0.5;
  /// When false the word table stays at its initial (or pretrained) values.
  bool train_words = true;

  std::size_t row_width() const { return word_dim + polarity_dim + (use_position ? 2 * position_dim : 0); }
  void validate() const;
};

struct EncoderConfig {
  EncoderKind kind = EncoderKind::AttBiLstm;
  std::size_t n = 50;
  std::size_t h = 32;
  std::size_t filters = 32;
  std::size_t window = 3;
  std::size_t k = 5;
  FeatureMode features = FeatureMode::AttEnds;

  void validate() const;
  /// Size z of the context vector for this kind given the input row width.
  std::size_t output_size(std::size_t row_width) const;
};

/// Position embeddings default on for the convolutional kinds only.
bool default_use_position(EncoderKind kind);

/// Token inventory of the word embedding table. Ids 0..7 are reserved.
class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::size_t kSubj = 2;
  static constexpr std::size_t kObj = 3;
  static constexpr std::size_t kOther = 4;
  static constexpr std::size_t kPunct = 5;
  static constexpr std::size_t kNumber = 6;
  static constexpr std::size_t kUrl = 7;

  Vocabulary();

  std::size_t add(const std::string& token);
  std::optional<std::size_t> find(const std::string& token) const;
  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  std::size_t size() const { return tokens_.size(); }

  /// Embedding row for a term; unknown lemmas map to kUnk.
  std::size_t id_of(const Term& term) const;

  /// Adds the lemma of every Word/Frame term, in first-seen order.
  void add_terms(const TermSequence& seq);

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, std::size_t, std::less<>> ids_;
};

/// An embedded, right-padded context.
struct EmbeddedContext {
  tg::Var x;  // [n × row_width]
  std::size_t n = 0;
  std::size_t n_real = 0;
  std::size_t subj_pos = 0;
  std::size_t obj_pos = 0;
  std::vector<std::size_t> frame_positions;
};

/// Word, polarity and optional position tables.
class EmbeddingLayer {
 public:
  EmbeddingLayer(const EmbeddingConfig& cfg, std::size_t vocab_size, tg::ParameterSet& params, tg::Rng& rng);

  /// Rows: word/mask embedding ++ polarity embedding (neutral for non-frames)
  /// ++ position embeddings of the clamped distances to subject and object.
  /// Rows past the sequence use the pad token. Throws ShapeError if the
  /// sequence is longer than n.
  EmbeddedContext embed(tg::Tape& tape, const TermSequence& seq, const Vocabulary& vocab, std::size_t n) const;

  std::size_t row_width() const { return cfg_.row_width(); }
  std::size_t position_id(long distance) const;
  tg::Parameter& word_table() const { return *word_; }
  tg::Parameter& polarity_table() const { return *polarity_; }
  tg::Parameter* position_table() const { return position_; }

  /// Reads `token v1 ... vm` lines into rows of known tokens; returns rows set.
  std::size_t load_pretrained(const std::filesystem::path& path, const Vocabulary& vocab);

 private:
  EmbeddingConfig cfg_;
  tg::Parameter* word_ = nullptr;
  tg::Parameter* polarity_ = nullptr;
  tg::Parameter* position_ = nullptr;
};

struct EncoderOutput {
  tg::Var s;
  /// Attention over the real positions; absent for non-attentive encoders.
  std::optional<tg::Var> alpha;
  std::size_t z = 0;

  /// α padded with zeros to length n (empty when absent).
  std::vector<double> padded_alpha(std::size_t n) const;
};

/// Attention features: embedded rows of the participants, then frame terms.
struct FeatureSet {
  std::vector<std::size_t> positions;
  tg::Var rows;  // [|F| × row_width]
};

/// att-ends: [subj, obj]; att-ef additionally frame rows in order, cropped to k.
std::vector<std::size_t> select_feature_positions(const EmbeddedContext& ctx, FeatureMode mode, std::size_t k);
FeatureSet select_features(const EmbeddedContext& ctx, FeatureMode mode, std::size_t k);

/// Gate weights [(input+h) × 4h] in i, f, o, g order plus bias [4h].
struct LstmCell {
  tg::Parameter* w = nullptr;
  tg::Parameter* b = nullptr;
  std::size_t input = 0;
  std::size_t hidden = 0;

  static LstmCell create(tg::ParameterSet& params, const std::string& prefix, std::size_t input, std::size_t hidden,
                         tg::Rng& rng);
  /// Hidden states over the rows of `x`, returned in position order.
  std::vector<tg::Var> run(tg::Tape& tape, tg::Var x, bool reverse = false) const;
};

/// Per-position [forward ; backward] states, [rows × 2h].
tg::Var bilstm_states(tg::Tape& tape, tg::Var x, const LstmCell& forward, const LstmCell& backward);

/// Max over rows [0..p1], (p1..p2], (p2..n_real) of `m`, concatenated; an empty
/// segment yields zeros. Requires p1 <= p2 < n_real <= rows.
tg::Var piecewise_max_pool(tg::Var m, std::size_t p1, std::size_t p2, std::size_t n_real);

class Encoder {
 public:
  virtual ~Encoder() = default;

  virtual EncoderOutput encode(tg::Tape& tape, const EmbeddedContext& ctx) const = 0;

  EncoderKind kind() const { return cfg_.kind; }
  const EncoderConfig& config() const { return cfg_; }
  std::size_t output_size() const { return cfg_.output_size(row_width_); }

 protected:
  Encoder(const EncoderConfig& cfg, std::size_t row_width) : cfg_(cfg), row_width_(row_width) {}

  tg::Var real_rows(tg::Tape& tape, const EmbeddedContext& ctx) const;

  EncoderConfig cfg_;
  std::size_t row_width_;
};

/// Registers the encoder's parameters under "enc." in `params`.
std::unique_ptr<Encoder> make_encoder(const EncoderConfig& cfg, std::size_t row_width, tg::ParameterSet& params,
                                      tg::Rng& rng);

}  // namespace attitude
