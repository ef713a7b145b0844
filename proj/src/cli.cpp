#include "attitude/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "attitude/analysis.hpp"
#include "attitude/dataset.hpp"
#include "attitude/errors.hpp"
#include "attitude/gradcheck.hpp"
#include "attitude/synthetic.hpp"
#include "attitude/text.hpp"

namespace attitude::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RawOptions {
  std::string encoder = "att-blstm";
  std::string features = "att-ends";
  std::string mode = "cv3";
  std::string positions = "auto";
  std::string optimizer = "adam";
  std::string scope = "document";
};

const std::vector<std::string> kModelKeys = {"encoder",  "features",     "window",    "hidden",
                                             "filters",  "conv-window",  "k",         "word-dim",
                                             "polarity-dim", "position-dim", "max-distance", "positions"};

void require(const fs::path& p, const char* flag) {
  if (p.empty()) throw UsageError(std::string("missing required option --") + flag);
}

void require_exists(const fs::path& p, const char* flag) {
  require(p, flag);
  if (!fs::exists(p)) throw DataError(std::string("--") + flag + ": no such file or directory: " + p.string());
}

void resolve(const RawOptions& raw, ExperimentConfig& cfg) {
  cfg.model.encoder.kind = *parse_encoder_kind(raw.encoder);
  cfg.model.encoder.features = *parse_feature_mode(raw.features);
  cfg.mode = raw.mode == "cv3" ? Mode::Cv3 : Mode::TrainTest;
  cfg.model.embedding.use_position = raw.positions == "auto" ? default_use_position(cfg.model.encoder.kind)
                                                             : raw.positions == "on";
  cfg.train.optimizer = raw.optimizer == "sgd" ? OptimizerKind::Sgd : OptimizerKind::Adam;
  cfg.train.scope = raw.scope == "collection" ? F1Scope::Collection : F1Scope::PerDocument;
  cfg.model.pretrained.reset();
  if (!cfg.paths.embeddings.empty()) cfg.model.pretrained = cfg.paths.embeddings;
  cfg.model.embedding.validate();
  cfg.model.encoder.validate();
  cfg.train.validate();
}

std::map<std::string, std::string> read_key_values(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) throw ParseError(path.string(), lineno, "expected key=value");
    kv[std::string(text::trim(t.substr(0, eq)))] = std::string(text::trim(t.substr(eq + 1)));
  }
  return kv;
}

std::string position_setting(const ExperimentConfig& cfg) { return cfg.model.embedding.use_position ? "on" : "off"; }

struct Context {
  CLI::App& app;
  ExperimentConfig& cfg;
  RawOptions& raw;
  std::ostream& out;
  std::ostream& err;
};

void prepare_output_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DataError("cannot create output directory " + dir.string());
}

PreparedCorpus load_cache(const ExperimentConfig& cfg) {
  require_exists(cfg.paths.cache, "cache");
  return read_cache(cfg.paths.cache);
}

// Checkpoint dimensions come from the model directory unless a flag overrides them.
void apply_model_dir(Context& ctx) {
  require_exists(ctx.cfg.paths.model, "model");
  const fs::path ini = ctx.cfg.paths.model / "model.ini";
  if (!fs::exists(ini)) throw DataError("model directory lacks model.ini: " + ctx.cfg.paths.model.string());
  const auto kv = read_key_values(ini);
  auto& e = ctx.cfg.model.encoder;
  auto& m = ctx.cfg.model.embedding;
  const auto num = [&](const std::string& key, std::size_t& field) {
    const auto it = kv.find(key);
    if (it == kv.end() || ctx.app.count("--" + key) > 0) return;
    try {
      field = std::stoul(it->second);
    } catch (const std::exception&) {
      throw DataError(ini.string() + ": invalid value for " + key);
    }
  };
  const auto str = [&](const std::string& key, std::string& field) {
    const auto it = kv.find(key);
    if (it != kv.end() && ctx.app.count("--" + key) == 0) field = it->second;
  };
  str("encoder", ctx.raw.encoder);
  str("features", ctx.raw.features);
  str("positions", ctx.raw.positions);
  if (!parse_encoder_kind(ctx.raw.encoder) || !parse_feature_mode(ctx.raw.features)) {
    throw DataError(ini.string() + ": unknown encoder or feature mode");
  }
  num("window", e.n);
  num("hidden", e.h);
  num("filters", e.filters);
  num("conv-window", e.window);
  num("k", e.k);
  num("word-dim", m.word_dim);
  num("polarity-dim", m.polarity_dim);
  num("position-dim", m.position_dim);
  num("max-distance", m.max_distance);
  ctx.cfg.paths.embeddings.clear();
  resolve(ctx.raw, ctx.cfg);
}

std::unique_ptr<ContextClassifier> load_model(Context& ctx) {
  apply_model_dir(ctx);
  auto vocab = Vocabulary::load(ctx.cfg.paths.model / "vocab.txt");
  auto model = std::make_unique<ContextClassifier>(ctx.cfg.model, std::move(vocab), ctx.cfg.train.seed);
  model->load(ctx.cfg.paths.model / "model.ckpt");
  return model;
}

PreparedCorpus evaluation_part(const ExperimentConfig& cfg, const PreparedCorpus& data) {
  if (cfg.paths.manifest.empty()) return data;
  require_exists(cfg.paths.manifest, "manifest");
  return split_prepared(data, load_manifest(cfg.paths.manifest)).second;
}

std::string fixed(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << v;
  return s.str();
}

// ---- commands ---------------------------------------------------------------

int cmd_prepare(Context& ctx) {
  const auto& p = ctx.cfg.paths;
  require_exists(p.corpus, "corpus");
  if (!p.opinions.empty()) require_exists(p.opinions, "opinions");
  require_exists(p.lexicons, "lexicons");
  require(p.out, "out");
  const Lexicons lex = load_lexicons(p.lexicons);
  Corpus corpus;
  if (p.opinions.empty()) {
    corpus = load_corpus(p.corpus);
  } else {
    const fs::path docs = fs::is_directory(p.corpus) ? p.corpus / "documents.jsonl" : p.corpus;
    corpus = load_corpus(docs, p.opinions);
  }
  const PreparedCorpus prepared = prepare_corpus(corpus, lex, ctx.cfg.model.encoder.n);
  prepare_output_dir(p.out);
  const fs::path cache = p.out / "contexts.jsonl";
  write_cache(prepared, cache);

  std::size_t annotated = 0;
  for (const auto& o : prepared.opinions) annotated += o.provenance == Provenance::Annotated;
  const LabelCounts counts = count_labels(prepared.contexts);
  ctx.out << "documents " << prepared.documents.size() << '\n'
          << "opinions " << prepared.opinions.size() << " (annotated " << annotated << ", augmented "
          << prepared.opinions.size() - annotated << ")\n"
          << "contexts " << prepared.contexts.size() << " (positive " << counts.positive << ", negative "
          << counts.negative << ", neutral " << counts.neutral << ")\n"
          << "dropped " << prepared.dropped << '\n'
          << "cache " << cache.string() << '\n';
  return kOk;
}

int cmd_train(Context& ctx) {
  require(ctx.cfg.paths.out, "out");
  PreparedCorpus data = load_cache(ctx.cfg);
  const Vocabulary vocab = build_vocabulary(data.contexts);
  if (!ctx.cfg.paths.manifest.empty()) {
    require_exists(ctx.cfg.paths.manifest, "manifest");
    data = split_prepared(data, load_manifest(ctx.cfg.paths.manifest)).first;
  }
  prepare_output_dir(ctx.cfg.paths.out);
  ContextClassifier model(ctx.cfg.model, vocab, ctx.cfg.train.seed);
  const RunHistory history = train(model, data, ctx.cfg.train);
  model.save(ctx.cfg.paths.out / "model.ckpt");
  model.vocabulary().save(ctx.cfg.paths.out / "vocab.txt");
  write_model_config(ctx.cfg, ctx.cfg.paths.out / "model.ini");
  write_history_csv(history, ctx.cfg.paths.out / "history.csv", ctx.cfg.train.seed);
  ctx.out << "seed " << ctx.cfg.train.seed << '\n' << "epochs " << history.epochs_run << '\n';
  if (history.final_f1) ctx.out << "train_f1 " << fixed(*history.final_f1) << '\n';
  return kOk;
}

int cmd_cv(Context& ctx) {
  require(ctx.cfg.paths.out, "out");
  const PreparedCorpus data = load_cache(ctx.cfg);
  const auto seed = ctx.cfg.train.seed;
  if (ctx.cfg.mode == Mode::TrainTest) {
    require_exists(ctx.cfg.paths.manifest, "manifest");
    const auto manifest = load_manifest(ctx.cfg.paths.manifest);
    prepare_output_dir(ctx.cfg.paths.out);
    const auto result = run_train_test(data, manifest, ctx.cfg.model, ctx.cfg.train);
    std::ofstream csv(ctx.cfg.paths.out / "traintest.csv");
    if (!csv) throw DataError("cannot write traintest.csv");
    csv << "# seed=" << seed << "\nsplit,f1\n" << std::setprecision(17) << "test," << result.test_f1 << '\n';
    write_history_csv(result.history, ctx.cfg.paths.out / "history.csv", seed);
    ctx.out << "seed " << seed << '\n' << "test_f1 " << fixed(result.test_f1) << '\n';
    return kOk;
  }
  prepare_output_dir(ctx.cfg.paths.out);
  const auto result = run_cv(data, ctx.cfg.model, ctx.cfg.train, ctx.cfg.folds, ctx.cfg.jobs);
  write_cv_csv(result, ctx.cfg.paths.out / "cv.csv", seed);
  ctx.out << "seed " << seed << '\n';
  for (std::size_t f = 0; f < result.fold_f1.size(); ++f) {
    write_history_csv(result.histories[f], ctx.cfg.paths.out / ("history_fold" + std::to_string(f) + ".csv"), seed);
    ctx.out << "fold " << f << " f1 " << fixed(result.fold_f1[f]) << " epochs " << result.histories[f].epochs_run
            << '\n';
  }
  ctx.out << "mean_f1 " << fixed(result.mean_f1) << '\n';
  return kOk;
}

int cmd_eval(Context& ctx) {
  const PreparedCorpus data = load_cache(ctx.cfg);
  const auto model = load_model(ctx);
  const PreparedCorpus part = evaluation_part(ctx.cfg, data);
  ctx.out << "f1 " << fixed(evaluate(*model, part, F1Scope::PerDocument)) << '\n'
          << "f1_collection " << fixed(evaluate(*model, part, F1Scope::Collection)) << '\n';
  return kOk;
}

int cmd_analyze(Context& ctx) {
  require(ctx.cfg.paths.out, "out");
  const PreparedCorpus data = load_cache(ctx.cfg);
  const auto model = load_model(ctx);
  if (!is_attentive(ctx.cfg.model.encoder.kind)) {
    throw UsageError("encoder '" + std::string(to_string(ctx.cfg.model.encoder.kind)) + "' has no attention");
  }
  const PreparedCorpus part = evaluation_part(ctx.cfg, data);
  const auto summaries = summarize_distributions(*model, part.contexts);
  prepare_output_dir(ctx.cfg.paths.out / "heatmaps");
  write_distribution_csv(summaries, ctx.cfg.paths.out / "distributions.csv");
  write_means_csv(summaries, ctx.cfg.paths.out / "means.csv");

  std::size_t written = 0;
  for (const auto& c : part.contexts) {
    if (written >= ctx.cfg.heatmaps) break;
    if (c.label == Label::Neutral) continue;
    const auto rows = export_heatmap(c, extract_alpha(*model, c));
    std::ostringstream name;
    name << "heatmap_" << std::setw(3) << std::setfill('0') << written << ".tsv";
    write_heatmap_tsv(rows, ctx.cfg.paths.out / "heatmaps" / name.str());
    ++written;
  }
  for (const auto& s : summaries) {
    ctx.out << to_string(s.group) << " mean_N " << (s.mean_n ? fixed(*s.mean_n) : "NA") << " mean_S "
            << (s.mean_s ? fixed(*s.mean_s) : "NA") << '\n';
  }
  return kOk;
}

int cmd_gradcheck(Context& ctx) {
  GradcheckConfig gc;
  gc.trials = ctx.cfg.gradcheck_trials;
  gc.seed = ctx.cfg.train.seed;
  bool ok = true;
  for (const auto& r : run_gradient_suite(gc)) {
    const bool pass = r.passed(gc.tolerance);
    ok = ok && pass;
    ctx.out << std::left << std::setw(16) << to_string(r.kind) << " max_error " << std::scientific
            << std::setprecision(3) << r.max_error << std::defaultfloat << " trials " << r.trials << ' '
            << (pass ? "ok" : "FAILED") << '\n';
  }
  return ok ? kOk : kNumericFailure;
}

int cmd_synth(Context& ctx) {
  require(ctx.cfg.paths.out, "out");
  SyntheticConfig sc;
  sc.documents = ctx.cfg.synth_documents;
  sc.seed = ctx.cfg.train.seed;
  const SyntheticData data = generate_synthetic(sc);
  write_synthetic(data, ctx.cfg.paths.out);
  ctx.out << "documents " << data.corpus.documents.size() << '\n'
          << "opinions " << data.corpus.opinions.size() << '\n'
          << "written to " << ctx.cfg.paths.out.string() << '\n';
  return kOk;
}

}  // namespace

void write_model_config(const ExperimentConfig& cfg, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  const auto& e = cfg.model.encoder;
  const auto& m = cfg.model.embedding;
  out << "encoder=" << to_string(e.kind) << '\n'
      << "features=" << to_string(e.features) << '\n'
      << "window=" << e.n << '\n'
      << "hidden=" << e.h << '\n'
      << "filters=" << e.filters << '\n'
      << "conv-window=" << e.window << '\n'
      << "k=" << e.k << '\n'
      << "word-dim=" << m.word_dim << '\n'
      << "polarity-dim=" << m.polarity_dim << '\n'
      << "position-dim=" << m.position_dim << '\n'
      << "max-distance=" << m.max_distance << '\n'
      << "positions=" << position_setting(cfg) << '\n'
      << "seed=" << cfg.train.seed << '\n';
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  RawOptions raw;
  CLI::App app{"Attitude extraction: context preparation, encoder training, evaluation and attention analysis",
               "attitude"};
  app.set_config("--config", "", "key=value configuration file; command-line flags take precedence");
  app.require_subcommand(1);

  std::vector<std::string> encoders;
  for (EncoderKind k : kAllEncoderKinds) encoders.emplace_back(to_string(k));

  auto& p = cfg.paths;
  app.add_option("--corpus", p.corpus, "corpus directory or documents.jsonl");
  app.add_option("--opinions", p.opinions, "opinions TSV (defaults to the corpus directory's opinions.tsv)");
  app.add_option("--lexicons", p.lexicons, "directory with frames.tsv, sentiment.txt, prepositions.txt");
  app.add_option("--embeddings", p.embeddings, "pretrained word vectors (text format)");
  app.add_option("--manifest", p.manifest, "train/test manifest (doc_id<TAB>train|test)");
  app.add_option("--cache", p.cache, "prepared contexts file");
  app.add_option("--model", p.model, "trained model directory");
  app.add_option("--out", p.out, "output directory");

  app.add_option("--encoder", raw.encoder, "context encoder")->check(CLI::IsMember(encoders))->capture_default_str();
  app.add_option("--features", raw.features, "feature set for att-cnn/ian")
      ->check(CLI::IsMember({"att-ends", "att-ef"}))
      ->capture_default_str();
  app.add_option("--mode", raw.mode, "cv experiment mode")->check(CLI::IsMember({"cv3", "traintest"}))->capture_default_str();
  app.add_option("--seed", cfg.train.seed, "random seed")->capture_default_str();
  app.add_option("--jobs", cfg.jobs, "parallel cv folds")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--folds", cfg.folds, "number of cv folds")->check(CLI::Range(2, 100))->capture_default_str();

  auto& e = cfg.model.encoder;
  auto& m = cfg.model.embedding;
  app.add_option("--window", e.n, "terms per context")->capture_default_str();
  app.add_option("--hidden", e.h, "recurrent state size")->capture_default_str();
  app.add_option("--filters", e.filters, "convolution filters")->capture_default_str();
  app.add_option("--conv-window", e.window, "convolution window")->capture_default_str();
  app.add_option("--k", e.k, "feature limit for att-cnn/ian")->capture_default_str();
  app.add_option("--word-dim", m.word_dim, "word embedding size")->capture_default_str();
  app.add_option("--polarity-dim", m.polarity_dim, "frame polarity embedding size")->capture_default_str();
  app.add_option("--position-dim", m.position_dim, "position embedding size")->capture_default_str();
  app.add_option("--max-distance", m.max_distance, "position distance clamp")->capture_default_str();
  app.add_flag("--freeze-words", [&m](std::int64_t count) { m.train_words = count == 0; },
               "keep word embeddings at their initial or pretrained values");
  app.add_option("--positions", raw.positions, "position embeddings")
      ->check(CLI::IsMember({"auto", "on", "off"}))
      ->capture_default_str();

  auto& t = cfg.train;
  app.add_option("--epochs", t.max_epochs, "epoch cap")->capture_default_str();
  app.add_option("--eval-period", t.eval_period, "epochs between train F1 measurements")->capture_default_str();
  app.add_option("--stop-threshold", t.stop_threshold, "stop once train F1 exceeds this")->capture_default_str();
  app.add_option("--lr", t.learning_rate, "learning rate")->capture_default_str();
  app.add_option("--optimizer", raw.optimizer, "optimizer")->check(CLI::IsMember({"adam", "sgd"}))->capture_default_str();
  app.add_option("--batch-size", t.batch_size, "contexts per update")->capture_default_str();
  app.add_option("--weight-decay", t.weight_decay, "L2 penalty")->capture_default_str();
  app.add_option("--neutral-keep", t.neutral_keep, "fraction of neutral contexts kept per epoch")->capture_default_str();
  app.add_option("--f1-scope", raw.scope, "F1 averaging")
      ->check(CLI::IsMember({"document", "collection"}))
      ->capture_default_str();
  app.add_option("--trials", cfg.gradcheck_trials, "gradcheck trials per encoder")->capture_default_str();
  app.add_option("--heatmaps", cfg.heatmaps, "sentiment contexts exported as heatmaps")->capture_default_str();
  app.add_option("--documents", cfg.synth_documents, "synthetic documents")->capture_default_str();

  const auto sub = [&](const char* name, const char* help) {
    CLI::App* s = app.add_subcommand(name, help);
    s->fallthrough();
    return s;
  };
  CLI::App* prepare = sub("prepare", "augment, extract and termize contexts into a cache");
  CLI::App* train_cmd = sub("train", "train one model and write checkpoint and history");
  CLI::App* cv = sub("cv", "cross-validation (cv3) or predefined train/test experiment");
  CLI::App* eval = sub("eval", "score a trained model");
  CLI::App* analyze = sub("analyze", "attention weight distributions and heatmaps");
  CLI::App* gradcheck = sub("gradcheck", "finite-difference gradient checks for every encoder");
  CLI::App* synth = sub("synth", "write a synthetic planted-frame corpus");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kOk : kUsage;
  }

  Context ctx{app, cfg, raw, out, err};
  try {
    resolve(raw, cfg);
    if (prepare->parsed()) return cmd_prepare(ctx);
    if (train_cmd->parsed()) return cmd_train(ctx);
    if (cv->parsed()) return cmd_cv(ctx);
    if (eval->parsed()) return cmd_eval(ctx);
    if (analyze->parsed()) return cmd_analyze(ctx);
    if (gradcheck->parsed()) return cmd_gradcheck(ctx);
    if (synth->parsed()) return cmd_synth(ctx);
  } catch (const UsageError& ex) {
    err << "error: " << ex.what() << '\n';
    return kUsage;
  } catch (const NumericError& ex) {
    err << "numeric failure: " << ex.what() << '\n';
    return kNumericFailure;
  } catch (const ShapeError& ex) {
    err << "dimension error: " << ex.what() << '\n';
    return kDataError;
  } catch (const DataError& ex) {
    err << "data error: " << ex.what() << '\n';
    return kDataError;
  } catch (const std::out_of_range& ex) {
    err << "data error: " << ex.what() << '\n';
    return kDataError;
  } catch (const std::invalid_argument& ex) {
    err << "error: " << ex.what() << '\n';
    return kUsage;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kDataError;
  }
  return kUsage;
}

}  // namespace attitude::cli
