#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "phrasecomp/checkpoint.hpp"
#include "phrasecomp/config.hpp"
#include "phrasecomp/embedding_store.hpp"
#include "phrasecomp/error.hpp"
#include "phrasecomp/lexical.hpp"
#include "phrasecomp/model.hpp"
#include "phrasecomp/phrase_data.hpp"
#include "phrasecomp/rank_eval.hpp"
#include "phrasecomp/report.hpp"
#include "phrasecomp/rng.hpp"
#include "phrasecomp/trainer.hpp"

namespace phrasecomp::cli {
namespace {

namespace fs = std::filesystem;

// Merged settings: built-in defaults < config file < command-line flags.
// Keys use underscores; the flag --learning-rate maps to learning_rate.
class Settings {
 public:
  explicit Settings(KeyValueConfig kv) : kv_(std::move(kv)) {}

  bool has(std::string_view key) const { return kv_.contains(key); }

  std::string str(std::string_view key, std::string_view fallback) const {
    auto v = kv_.get(key);
    return v ? *v : std::string(fallback);
  }
  std::string required(std::string_view key) const {
    auto v = kv_.get(key);
    if (!v || v->empty()) {
      throw InvalidArgument("missing required setting '" + flag(key) + "'");
    }
    return *v;
  }
  double real(std::string_view key, double fallback) const {
    auto v = kv_.get(key);
    return v ? parse_double(*v, key) : fallback;
  }
  std::uint64_t count(std::string_view key, std::uint64_t fallback) const {
    auto v = kv_.get(key);
    if (!v) return fallback;
    const long long x = parse_int(*v, key);
    if (x < 0) throw InvalidArgument("'" + flag(key) + "' must be non-negative");
    return static_cast<std::uint64_t>(x);
  }
  const KeyValueConfig& raw() const { return kv_; }

  static std::string flag(std::string_view key) {
    std::string f = "--" + std::string(key);
    std::replace(f.begin(), f.end(), '_', '-');
    return f;
  }

 private:
  KeyValueConfig kv_;
};

std::string key_of(const CLI::Option* opt) {
  std::string name = opt->get_single_name();
  std::replace(name.begin(), name.end(), '-', '_');
  return name;
}

Settings collect(const CLI::App& sub) {
  KeyValueConfig kv;
  if (const auto* cfg = sub.get_option_no_throw("--config"); cfg && cfg->count() > 0) {
    kv = KeyValueConfig::load(cfg->as<std::string>());
  }
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->count() == 0 || opt->get_single_name() == "config" ||
        opt->get_single_name() == "help") {
      continue;
    }
    kv.set(key_of(opt), opt->as<std::string>());
  }
  return Settings(std::move(kv));
}

constexpr std::uint64_t kDefaultRootSeed = 1;

std::uint64_t root_seed(const Settings& s) { return s.count("seed", kDefaultRootSeed); }

EmbeddingFormat embedding_format(const Settings& s) {
  const std::string f = s.str("format", "text");
  if (f == "text") return EmbeddingFormat::kText;
  if (f == "binary") return EmbeddingFormat::kBinary;
  throw InvalidArgument("unknown embedding format '" + f + "' (text or binary)");
}

EmbeddingSpace load_space(const Settings& s) {
  return load_embeddings_file(s.required("embeddings"), embedding_format(s));
}

std::string out_dir(const Settings& s) {
  const std::string dir = s.str("out", ".");
  fs::create_directories(dir);
  return dir;
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

std::ofstream open_file(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write '" + path + "'");
  return f;
}

LexicalResolver resolver_for(const ModelParams& model, const Settings& s) {
  const auto policy = parse_fallback_policy(s.str("resolver", "nearest_neighbor"));
  if (!is_lexicalized(model.kind)) return LexicalResolver({}, FallbackPolicy::kIdentity);
  TokenSet vocab(model.lexicon.tokens().begin(), model.lexicon.tokens().end());
  return LexicalResolver(std::move(vocab), policy);
}

// Checkpoint, or a parameter-free model named by --model.
ModelParams load_model(const Settings& s, std::size_t dim) {
  if (s.has("checkpoint")) {
    ModelParams m = load_checkpoint_file(s.required("checkpoint"));
    if (m.shape.n != dim) {
      throw InvalidArgument("checkpoint dimension " + std::to_string(m.shape.n) +
                            " does not match embedding dimension " + std::to_string(dim));
    }
    return m;
  }
  const ModelKind kind = parse_model_kind(s.required("model"));
  if (has_parameters(kind)) {
    throw InvalidArgument("model '" + std::string(model_kind_name(kind)) +
                          "' has parameters; pass --checkpoint");
  }
  return init_model(kind, ModelShape{dim, 0, 0}, 0);
}

// Labeled phrase file restricted to one split; unlabeled files are used whole.
PhraseDataset load_split(const Settings& s, std::string_view default_split) {
  PhraseDataset data = load_phrase_set_file(s.required("phrases"));
  if (!data.labeled()) return data;
  return data.subset(parse_split(s.str("split", default_split)));
}

std::vector<double> parse_rates(const std::string& text) {
  std::vector<double> rates;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) rates.push_back(parse_double(item, "rates"));
  if (rates.empty()) throw InvalidArgument("--rates needs at least one value");
  return rates;
}

std::map<std::string, std::string> metadata_fields(const Settings& s) {
  std::map<std::string, std::string> m;
  for (const auto& [k, v] : s.raw().entries()) m[k] = v;
  return m;
}

// ---- subcommands ----------------------------------------------------------

int cmd_param_count(const Settings& s, std::ostream& out) {
  const ModelKind kind = parse_model_kind(s.required("model"));
  const std::uint64_t n = s.count("n", 0);
  if (n == 0) throw InvalidArgument("--n must be positive");
  const std::uint64_t t =
      s.count("t", is_transweight_family(kind) ? kDefaultTransformations : 0);
  out << param_count(kind, n, t, s.count("vocab", 0)) << '\n';
  return 0;
}

int cmd_collapse_check(const Settings& s, std::ostream& out) {
  const std::size_t n = s.count("n", 8);
  const std::size_t t = s.count("t", 5);
  const std::size_t inputs = s.count("inputs", 100);
  const ModelKind kind = parse_model_kind(s.str("model", "transweight"));
  if (!is_transweight_family(kind)) {
    throw InvalidArgument("collapse-check needs a TransWeight-family model");
  }
  const std::uint64_t seed = derive_seed(root_seed(s), "collapse-check");
  ModelParams m = init_model(kind, ModelShape{n, t, 0}, seed, InitOptions{Activation::kIdentity});
  Rng rng(derive_seed(seed, "params"));
  for (auto& a : m.arrays) {
    for (double& x : a.values) x = rng.uniform(-1.0, 1.0);
  }
  const MatrixForm form = collapse_transweight_linear(m);
  double max_dev = 0.0;
  std::vector<double> u(n), v(n);
  for (std::size_t k = 0; k < inputs; ++k) {
    for (auto& x : u) x = rng.normal();
    for (auto& x : v) x = rng.normal();
    const auto full = compose(m, u, v);
    const auto collapsed = apply_matrix_form(form, u, v);
    for (std::size_t i = 0; i < n; ++i) {
      max_dev = std::max(max_dev, std::abs(full[i] - collapsed[i]));
    }
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3e", max_dev);
  const bool pass = max_dev < 1e-9;
  out << "max_abs_deviation\t" << buf << '\n' << (pass ? "PASS" : "FAIL") << '\n';
  return pass ? 0 : 1;
}

int cmd_gen_synth(const Settings& s, std::ostream& out) {
  SyntheticConfig cfg;
  cfg.n = s.count("n", cfg.n);
  cfg.num_classes = s.count("classes", cfg.num_classes);
  cfg.words_per_class = s.count("words_per_class", cfg.words_per_class);
  cfg.num_phrases = s.count("num_phrases", cfg.num_phrases);
  cfg.noise_sigma = s.real("noise", cfg.noise_sigma);
  cfg.word_spread = s.real("word_spread", cfg.word_spread);
  cfg.map_spread = s.real("map_spread", cfg.map_spread);
  cfg.seed = derive_seed(root_seed(s), "synthetic");
  const SyntheticData data = generate_synthetic(cfg);

  const std::string dir = out_dir(s);
  save_embeddings_file(data.space, join(dir, "embeddings.txt"), EmbeddingFormat::kText, 17);
  PhraseDataset phrases = data.dataset;
  if (s.has("ratio")) {
    phrases = split_dataset(phrases, parse_split_ratios(s.required("ratio")),
                            derive_seed(root_seed(s), "split"));
  }
  save_phrase_set_file(phrases, join(dir, "phrases.tsv"));
  write_metadata_file(join(dir, "metadata.json"), "gen-synth", metadata_fields(s));
  out << "words\t" << data.space.size() - data.dataset.size() << '\n'
      << "phrases\t" << data.dataset.size() << '\n';
  return 0;
}

int cmd_split(const Settings& s, std::ostream& out) {
  PhraseDataset data = load_phrase_set_file(s.required("input"));
  if (s.has("embeddings")) {
    const EmbeddingSpace space = load_space(s);
    auto filtered = filter_by_vocabulary(data, space);
    out << "dropped\t" << filtered.dropped << '\n';
    data = std::move(filtered.dataset);
  }
  const std::uint64_t seed = derive_seed(root_seed(s), "split");
  PhraseDataset labeled =
      s.has("held_out_first")
          ? split_held_out_first_words(data, s.real("held_out_first", 0.2),
                                       s.real("dev_fraction", 0.1), seed)
          : split_dataset(data, parse_split_ratios(s.str("ratio", "7:2:1")), seed);
  if (s.has("output")) {
    save_phrase_set_file(labeled, s.required("output"));
  }
  for (Split sp : {Split::kTrain, Split::kTest, Split::kDev}) {
    out << split_name(sp) << '\t' << labeled.subset(sp).size() << '\n';
  }
  if (!s.has("output")) save_phrase_set(labeled, out);
  return 0;
}

int cmd_train(const Settings& s, std::ostream& out) {
  const EmbeddingSpace space = load_space(s);
  PhraseDataset data = load_phrase_set_file(s.required("phrases"));
  const std::uint64_t root = root_seed(s);
  if (!data.labeled()) {
    data = split_dataset(data, parse_split_ratios(s.str("ratio", "7:2:1")),
                         derive_seed(root, "split"));
  }
  const PhraseDataset train_set = data.subset(Split::kTrain);
  const PhraseDataset dev_set = data.subset(Split::kDev);

  const ModelKind kind = parse_model_kind(s.required("model"));
  TrainConfig tc = train_config_from(s.raw());
  tc.seed = derive_seed(root, "train");
  if (tc.dropout_site == DropoutSite::kTransformedH && !s.has("dropout_rate")) {
    tc.dropout_rate = default_dropout_rate(kind);
  }
  tc.validate();

  ModelShape shape{space.dim(), 0, 0};
  if (is_transweight_family(kind)) shape.t = s.count("t", kDefaultTransformations);
  Lexicon lexicon;
  if (is_lexicalized(kind)) {
    lexicon = build_lexicon(train_set);
    shape.vocab_size = lexicon.size();
  }
  InitOptions init;
  if (s.has("activation")) init.activation = parse_activation(s.required("activation"));
  ModelParams model = init_model(kind, shape, derive_seed(root, "init"), init);
  if (is_lexicalized(kind)) set_lexicon(model, std::move(lexicon));

  const auto policy = parse_fallback_policy(s.str("resolver", "nearest_neighbor"));
  const LexicalResolver resolver =
      is_lexicalized(kind) ? LexicalResolver::from_training(train_set, policy)
                           : LexicalResolver({}, FallbackPolicy::kIdentity);
  TrainResult result = train(std::move(model), train_set, dev_set, space, tc, resolver);
  // Persisted parameters are float32; keep the in-memory model identical.
  round_to_float32(result.model);

  const std::string dir = out_dir(s);
  save_checkpoint_file(result.model, join(dir, "model.ckpt"));
  {
    auto log = open_file(join(dir, "train_log.tsv"));
    write_training_log(result.state.history, log);
  }
  write_metadata_file(join(dir, "metadata.json"), "train", metadata_fields(s));
  char buf[128];
  std::snprintf(buf, sizeof(buf), "epochs\t%zu\nbest_epoch\t%zu\nbest_dev_loss\t%.6f\n",
                result.state.epoch, result.state.best_epoch, result.state.best_dev_loss);
  out << buf;
  return 0;
}

int cmd_evaluate(const Settings& s, std::ostream& out) {
  const EmbeddingSpace space = load_space(s);
  const ModelParams model = load_model(s, space.dim());
  const PhraseDataset test = load_split(s, "test");
  const RankMethod method = parse_rank_method(s.str("method", "corrected"));
  EvalOptions opts;
  opts.threads = std::max<std::uint64_t>(1, s.count("threads", 1));
  const EvalReport report = evaluate(model, test, space, method, resolver_for(model, s), opts);

  const std::string name(model_kind_name(model.kind));
  if (s.has("out")) {
    const std::string dir = out_dir(s);
    emit_report(name, rank_method_name(method), report, join(dir, "report"));
    write_metadata_file(join(dir, "metadata.json"), "evaluate", metadata_fields(s));
  }
  write_report_tsv(name, report, out);
  return 0;
}

int cmd_rank(const Settings& s, std::ostream& out) {
  const EmbeddingSpace space = load_space(s);
  const ModelParams model = load_model(s, space.dim());
  PhraseRecord r{s.required("word1"), s.required("word2"), s.required("phrase")};
  const auto rows = resolve_word_rows(model, r, space, resolver_for(model, s));
  const auto p = compose(model, space.vector(r.word1), space.vector(r.word2), rows);
  const RankMethod method = parse_rank_method(s.str("method", "corrected"));
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", 1.0 - cosine_similarity(p, space.vector(r.phrase)));
  out << "rank\t" << rank_of(method, space, p, r.phrase) << '\n' << "cos_distance\t" << buf << '\n';
  return 0;
}

int cmd_dropout_exp(const Settings& s, std::ostream& out) {
  const EmbeddingSpace space = load_space(s);
  const ModelParams model = load_model(s, space.dim());
  const PhraseDataset test = load_split(s, "test");
  const auto rates = parse_rates(s.str("rates", "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9"));
  const std::string mode_name = s.str("mode", "both");
  std::vector<DropoutMode> modes;
  if (mode_name == "both") {
    modes = {DropoutMode::kFullTransformation, DropoutMode::kPerParameter};
  } else {
    modes = {parse_dropout_mode(mode_name)};
  }
  const std::size_t repeats = s.count("repeats", kDefaultDropoutRepeats);
  const std::size_t threads = std::max<std::uint64_t>(1, s.count("threads", 1));
  const std::uint64_t seed = derive_seed(root_seed(s), "dropout-exp");
  const auto resolver = resolver_for(model, s);

  std::vector<DropoutCurvePoint> curve;
  for (DropoutMode m : modes) {
    auto part = dropout_experiment(model, test, space, rates, m, seed, repeats, resolver, threads);
    curve.insert(curve.end(), part.begin(), part.end());
  }
  if (s.has("out")) {
    const std::string dir = out_dir(s);
    auto f = open_file(join(dir, "dropout_curve.tsv"));
    write_dropout_curve_tsv(curve, f);
    write_metadata_file(join(dir, "metadata.json"), "dropout-exp", metadata_fields(s));
  }
  write_dropout_curve_tsv(curve, out);
  return 0;
}

// ---- option declarations ----------------------------------------------------

void common_options(CLI::App* sub) {
  sub->add_option("--config", "key = value settings file; flags override it");
  sub->add_option("--seed", "root seed (default 1)");
}

void data_options(CLI::App* sub) {
  sub->add_option("--embeddings", "embedding file");
  sub->add_option("--format", "embedding format: text or binary");
}

void threads_option(CLI::App* sub) { sub->add_option("--threads", "evaluation worker threads"); }

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Vector composition models for phrase representations"};
  app.name(args.empty() ? "phrasecomp" : args.front());
  app.require_subcommand(1);

  auto* split = app.add_subcommand("split", "assign train/test/dev labels to a phrase set");
  common_options(split);
  data_options(split);
  split->add_option("--input", "phrase TSV (word1, word2, phrase)");
  split->add_option("--ratio", "train:test:dev ratio, default 7:2:1");
  split->add_option("--output", "labeled TSV to write (stdout if absent)");
  split->add_option("--held-out-first", "fraction of first words to hold out into test");
  split->add_option("--dev-fraction", "dev share of the remaining records (held-out mode)");

  auto* gen = app.add_subcommand("gen-synth", "generate a synthetic embedding space and phrase set");
  common_options(gen);
  gen->add_option("--n", "vector dimension");
  gen->add_option("--classes", "word classes");
  gen->add_option("--words-per-class", "words per class");
  gen->add_option("--num-phrases", "phrases to generate");
  gen->add_option("--noise", "Gaussian noise on phrase vectors");
  gen->add_option("--word-spread", "within-class word spread");
  gen->add_option("--map-spread", "class-pair specific part of the composition maps");
  gen->add_option("--ratio", "also label splits with this train:test:dev ratio");
  gen->add_option("--out", "output directory");

  auto* train = app.add_subcommand("train", "train a composition model");
  common_options(train);
  data_options(train);
  train->add_option("--phrases", "phrase TSV, labeled or not");
  train->add_option("--ratio", "split ratio when the phrase file is unlabeled");
  train->add_option("--model", "model kind");
  train->add_option("--t", "transformations (TransWeight family)");
  train->add_option("--activation", "identity or relu");
  train->add_option("--learning-rate", "Adagrad learning rate");
  train->add_option("--batch-size", "minibatch size");
  train->add_option("--max-epochs", "epoch budget");
  train->add_option("--patience", "epochs without dev improvement before stopping");
  train->add_option("--dropout-rate", "dropout rate on H");
  train->add_option("--dropout-site", "none or transformed_H");
  train->add_option("--adagrad-epsilon", "Adagrad epsilon");
  train->add_option("--resolver", "unknown-word policy: nearest_neighbor or identity");
  train->add_option("--out", "output directory");

  auto* eval = app.add_subcommand("evaluate", "rank-evaluate a model on a phrase split");
  common_options(eval);
  data_options(eval);
  threads_option(eval);
  eval->add_option("--phrases", "phrase TSV");
  eval->add_option("--split", "train, dev or test (labeled files), default test");
  eval->add_option("--checkpoint", "trained model");
  eval->add_option("--model", "parameter-free model kind, instead of a checkpoint");
  eval->add_option("--method", "corrected or original");
  eval->add_option("--resolver", "unknown-word policy: nearest_neighbor or identity");
  eval->add_option("--out", "directory for report.json / report.tsv");

  auto* rank = app.add_subcommand("rank", "rank one composed phrase");
  common_options(rank);
  data_options(rank);
  rank->add_option("--checkpoint", "trained model");
  rank->add_option("--model", "parameter-free model kind, instead of a checkpoint");
  rank->add_option("--word1", "first constituent");
  rank->add_option("--word2", "second constituent");
  rank->add_option("--phrase", "phrase token");
  rank->add_option("--method", "corrected or original");
  rank->add_option("--resolver", "unknown-word policy: nearest_neighbor or identity");

  auto* pc = app.add_subcommand("param-count", "print the trainable parameter count");
  common_options(pc);
  pc->add_option("--model", "model kind");
  pc->add_option("--n", "vector dimension");
  pc->add_option("--t", "transformations");
  pc->add_option("--vocab", "lexicalized vocabulary size");

  auto* dexp = app.add_subcommand("dropout-exp", "prediction-time transformation dropout");
  common_options(dexp);
  data_options(dexp);
  threads_option(dexp);
  dexp->add_option("--phrases", "phrase TSV");
  dexp->add_option("--split", "split to evaluate, default test");
  dexp->add_option("--checkpoint", "trained TransWeight-family model");
  dexp->add_option("--rates", "comma-separated rates in [0, 0.9]");
  dexp->add_option("--mode", "full_transformation, per_parameter or both");
  dexp->add_option("--repeats", "mask draws per rate");
  dexp->add_option("--resolver", "unknown-word policy: nearest_neighbor or identity");
  dexp->add_option("--out", "directory for dropout_curve.tsv");

  auto* cc = app.add_subcommand("collapse-check", "check the linear TransWeight/Matrix equivalence");
  common_options(cc);
  cc->add_option("--n", "vector dimension");
  cc->add_option("--t", "transformations");
  cc->add_option("--model", "TransWeight variant");
  cc->add_option("--inputs", "random inputs to compare");

  std::vector<std::string> rest(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(rest.begin(), rest.end());  // CLI11 consumes a reversed vector
  try {
    app.parse(rest);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    const Settings s = collect(*sub);
    const std::string name = sub->get_name();
    if (name == "param-count") return cmd_param_count(s, out);
    if (name == "collapse-check") return cmd_collapse_check(s, out);
    if (name == "gen-synth") return cmd_gen_synth(s, out);
    if (name == "split") return cmd_split(s, out);
    if (name == "train") return cmd_train(s, out);
    if (name == "evaluate") return cmd_evaluate(s, out);
    if (name == "rank") return cmd_rank(s, out);
    if (name == "dropout-exp") return cmd_dropout_exp(s, out);
    err << "error: unknown subcommand '" << name << "'\n";
    return 2;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace phrasecomp::cli
