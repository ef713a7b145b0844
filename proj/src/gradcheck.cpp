#include "attitude/gradcheck.hpp"

#include <array>
#include <chrono>
#include <random>

namespace attitude {

namespace {

const std::array<const char*, 6> kWords = {"alpha", "beta", "gamma", "delta", "eps", "zeta"};

std::size_t uniform(tg::Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

}  // namespace

TermSequence random_term_sequence(std::size_t length, tg::Rng& rng) {
  TermSequence seq;
  for (std::size_t i = 0; i < length; ++i) {
    const std::size_t r = uniform(rng, 0, 9);
    if (r < 6) {
      seq.terms.push_back(Term::word(kWords[uniform(rng, 0, kWords.size() - 1)]));
    } else if (r < 8) {
      seq.terms.push_back(
          Term::frame(kWords[uniform(rng, 0, kWords.size() - 1)], static_cast<Polarity>(uniform(rng, 0, 2))));
    } else if (r < 9) {
      seq.terms.push_back(Term::token_of(static_cast<TokenKind>(uniform(rng, 0, 2))));
    } else {
      seq.terms.push_back(Term::entity(TermKind::EntityOther));
    }
  }
  seq.subj_pos = uniform(rng, 0, length - 1);
  do {
    seq.obj_pos = uniform(rng, 0, length - 1);
  } while (seq.obj_pos == seq.subj_pos);
  seq.terms[seq.subj_pos] = Term::entity(TermKind::EntitySubj);
  seq.terms[seq.obj_pos] = Term::entity(TermKind::EntityObj);
  return seq;
}

GradcheckInstance random_gradcheck_instance(EncoderKind kind, tg::Rng& rng) {
  GradcheckInstance inst;
  auto& emb = inst.config.embedding;
  emb.word_dim = uniform(rng, 2, 4);
  emb.polarity_dim = uniform(rng, 1, 3);
  emb.use_position = default_use_position(kind);
  emb.position_dim = 2;
  emb.max_distance = 6;
  auto& enc = inst.config.encoder;
  enc.kind = kind;
  enc.n = uniform(rng, 3, 10);
  enc.h = uniform(rng, 2, 8);
  enc.filters = uniform(rng, 2, 6);
  enc.window = uniform(rng, 0, 1) == 0 ? 3 : 2;
  enc.k = uniform(rng, 2, 4);
  enc.features = uniform(rng, 0, 1) == 0 ? FeatureMode::AttEnds : FeatureMode::AttEf;

  inst.terms = random_term_sequence(uniform(rng, 2, enc.n), rng);
  inst.label = static_cast<Label>(uniform(rng, 0, 2));
  Vocabulary vocab;
  for (const char* w : kWords) vocab.add(w);
  inst.model = std::make_unique<ContextClassifier>(inst.config, std::move(vocab), rng());
  return inst;
}

std::vector<EncoderGradResult> run_gradient_suite(const GradcheckConfig& cfg) {
  std::vector<EncoderGradResult> results;
  tg::Rng rng(cfg.seed);
  for (EncoderKind kind : kAllEncoderKinds) {
    EncoderGradResult r;
    r.kind = kind;
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      GradcheckInstance inst = random_gradcheck_instance(kind, rng);
      const auto& model = *inst.model;
      const auto loss = [&](tg::Tape& tape) {
        return tg::cross_entropy(model.forward(tape, inst.terms).probs, static_cast<std::size_t>(inst.label));
      };
      r.max_error = std::max(r.max_error, tg::gradient_check(inst.model->parameters().all(), loss, cfg.eps));
      ++r.trials;
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    results.push_back(r);
  }
  return results;
}

}  // namespace attitude
