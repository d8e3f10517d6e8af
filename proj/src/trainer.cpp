#include "phrasecomp/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "phrasecomp/error.hpp"
#include "phrasecomp/rng.hpp"

namespace phrasecomp {

std::string_view dropout_site_name(DropoutSite site) {
  return site == DropoutSite::kTransformedH ? "transformed_H" : "none";
}

DropoutSite parse_dropout_site(std::string_view name) {
  if (name == "none") return DropoutSite::kNone;
  if (name == "transformed_H" || name == "transformed_h" || name == "H") {
    return DropoutSite::kTransformedH;
  }
  throw InvalidArgument("unknown dropout site '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidArgument("learning_rate must be positive");
  }
  if (batch_size == 0) throw InvalidArgument("batch_size must be positive");
  if (max_epochs == 0) throw InvalidArgument("max_epochs must be positive");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw InvalidArgument("dropout_rate must be in [0, 1)");
  }
  if (!(adagrad_epsilon > 0.0) || !std::isfinite(adagrad_epsilon)) {
    throw InvalidArgument("adagrad_epsilon must be positive");
  }
}

namespace {

std::size_t positive_size(std::string_view text, std::string_view what, bool allow_zero) {
  const long long v = parse_int(text, what);
  if (v < 0 || (!allow_zero && v == 0)) {
    throw InvalidArgument(std::string(what) + " must be " +
                          (allow_zero ? "non-negative" : "positive"));
  }
  return static_cast<std::size_t>(v);
}

}  // namespace

TrainConfig train_config_from(const KeyValueConfig& config, TrainConfig base) {
  if (auto s = config.get("learning_rate")) base.learning_rate = parse_double(*s, "learning_rate");
  if (auto s = config.get("batch_size")) base.batch_size = positive_size(*s, "batch_size", false);
  if (auto s = config.get("max_epochs")) base.max_epochs = positive_size(*s, "max_epochs", false);
  if (auto s = config.get("patience")) base.patience = positive_size(*s, "patience", true);
  if (auto s = config.get("dropout_rate")) base.dropout_rate = parse_double(*s, "dropout_rate");
  if (auto s = config.get("dropout_site")) base.dropout_site = parse_dropout_site(*s);
  if (auto s = config.get("seed")) base.seed = positive_size(*s, "seed", true);
  if (auto s = config.get("adagrad_epsilon")) {
    base.adagrad_epsilon = parse_double(*s, "adagrad_epsilon");
  }
  base.validate();
  return base;
}

double default_dropout_rate(ModelKind kind) {
  switch (kind) {
    case ModelKind::kTransWeight: return 0.8;
    case ModelKind::kTransWeightFeat: return 0.4;
    case ModelKind::kTransWeightTrans: return 0.6;
    case ModelKind::kTransWeightMat: return 0.6;
    default: return 0.0;
  }
}

TrainState make_train_state(const ModelParams& params) {
  TrainState state;
  state.accumulators = zero_grads_like(params);
  state.best_params = params;
  return state;
}

double cosine_distance_loss(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw InvalidArgument("cosine_distance_loss: size mismatch");
  return 1.0 - cosine_similarity(p, q);
}

void adagrad_update(ModelParams& params, const ParamGrads& grads, ParamGrads& accumulators,
                    double learning_rate, double epsilon) {
  if (grads.arrays.size() != params.arrays.size() ||
      accumulators.arrays.size() != params.arrays.size()) {
    throw InvalidArgument("adagrad_update: parameter/gradient layout mismatch");
  }
  for (std::size_t a = 0; a < params.arrays.size(); ++a) {
    auto& theta = params.arrays[a].values;
    const auto& g = grads.arrays[a].values;
    auto& acc = accumulators.arrays[a].values;
    if (g.size() != theta.size() || acc.size() != theta.size()) {
      throw InvalidArgument("adagrad_update: shape mismatch in '" + params.arrays[a].name + "'");
    }
    for (std::size_t i = 0; i < theta.size(); ++i) {
      if (g[i] == 0.0) continue;
      acc[i] += g[i] * g[i];
      theta[i] -= learning_rate * g[i] / (std::sqrt(acc[i]) + epsilon);
    }
  }
}

void draw_dropout_mask(double rate, Rng& rng, std::span<double> mask) {
  if (!(rate >= 0.0 && rate < 1.0)) throw InvalidArgument("dropout rate must be in [0, 1)");
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double& x : mask) x = rng.bernoulli(rate) ? 0.0 : keep_scale;
}

PreparedSet::PreparedSet(const ModelParams& params, const PhraseDataset& data,
                         const EmbeddingSpace& space, const LexicalResolver& resolver)
    : n_(space.dim()) {
  if (params.shape.n != n_) {
    throw InvalidArgument("model dimension " + std::to_string(params.shape.n) +
                          " does not match embedding dimension " + std::to_string(n_));
  }
  u_.reserve(data.size() * n_);
  v_.reserve(data.size() * n_);
  target_.reserve(data.size() * n_);
  rows_.reserve(data.size());
  for (const auto& r : data.records()) {
    for (const auto* tok : {&r.word1, &r.word2, &r.phrase}) {
      if (!space.contains(*tok)) {
        throw InvalidArgument("token '" + *tok + "' is not in the embedding space");
      }
    }
    const auto u = space.vector(r.word1);
    const auto v = space.vector(r.word2);
    const auto t = space.vector(r.phrase);
    u_.insert(u_.end(), u.begin(), u.end());
    v_.insert(v_.end(), v.begin(), v.end());
    target_.insert(target_.end(), t.begin(), t.end());
    rows_.push_back(resolve_word_rows(params, r, space, resolver));
  }
}

TrainingExample PreparedSet::example(std::size_t i) const {
  const std::span<const double> u(u_), v(v_), t(target_);
  return {u.subspan(i * n_, n_), v.subspan(i * n_, n_), t.subspan(i * n_, n_), rows_[i], {}};
}

double mean_loss(const ModelParams& params, const PreparedSet& set) {
  std::vector<TrainingExample> batch;
  batch.reserve(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) batch.push_back(set.example(i));
  return batch_loss(params, batch);
}

TrainResult train(ModelParams model, const PhraseDataset& train_set,
                  const PhraseDataset& dev_set, const EmbeddingSpace& space,
                  const TrainConfig& config, const LexicalResolver& resolver,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.empty()) throw InvalidArgument("train: empty training set");
  if (is_lexicalized(model.kind) && model.lexicon.empty()) {
    throw InvalidArgument("train: lexicalized model has no lexicon attached");
  }
  const bool use_dropout =
      config.dropout_site == DropoutSite::kTransformedH && config.dropout_rate > 0.0;
  if (config.dropout_site == DropoutSite::kTransformedH && !is_transweight_family(model.kind)) {
    throw InvalidArgument("dropout on H is only defined for the TransWeight family");
  }

  const PreparedSet train_data(model, train_set, space, resolver);
  const PreparedSet dev_data(model, dev_set, space, resolver);

  TrainState state = make_train_state(model);
  Rng order_rng(derive_seed(config.seed, "trainer/order"));
  Rng mask_rng(derive_seed(config.seed, "trainer/dropout"));

  std::vector<std::size_t> order(train_data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t mask_len = model.shape.t * model.shape.n;
  std::vector<double> masks;
  std::vector<TrainingExample> batch;

  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    order_rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      if (use_dropout) masks.assign((end - start) * mask_len, 0.0);
      for (std::size_t k = start; k < end; ++k) {
        TrainingExample ex = train_data.example(order[k]);
        if (use_dropout) {
          std::span<double> m(masks.data() + (k - start) * mask_len, mask_len);
          draw_dropout_mask(config.dropout_rate, mask_rng, m);
          ex.dropout_mask = m;
        }
        batch.push_back(ex);
      }
      const GradientResult g = gradients(model, batch);
      if (!std::isfinite(g.loss)) {
        throw DivergenceError("non-finite training loss in epoch " + std::to_string(epoch) +
                              "; lower the learning rate");
      }
      adagrad_update(model, g.grads, state.accumulators, config.learning_rate,
                     config.adagrad_epsilon);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = mean_loss(model, train_data);
    rec.dev_loss = dev_data.size() > 0 ? mean_loss(model, dev_data) : rec.train_loss;
    if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.dev_loss)) {
      throw DivergenceError("non-finite loss after epoch " + std::to_string(epoch));
    }
    state.epoch = epoch;
    state.history.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.dev_loss < state.best_dev_loss) {
      state.best_dev_loss = rec.dev_loss;
      state.best_epoch = epoch;
      state.best_params = model;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }

  TrainResult result;
  result.model = state.best_params;
  result.state = std::move(state);
  return result;
}

TrainResult train(ModelParams model, const PhraseDataset& train_set,
                  const PhraseDataset& dev_set, const EmbeddingSpace& space,
                  const TrainConfig& config) {
  const auto resolver = LexicalResolver::from_training(train_set, FallbackPolicy::kNearestNeighbor);
  return train(std::move(model), train_set, dev_set, space, config, resolver);
}

void write_training_log(std::span<const EpochRecord> history, std::ostream& out) {
  out << "epoch\ttrain_loss\tdev_loss\n";
  char buf[64];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof(buf), "%zu\t%.6f\t%.6f\n", r.epoch, r.train_loss, r.dev_loss);
    out << buf;
  }
}

}  // namespace phrasecomp
