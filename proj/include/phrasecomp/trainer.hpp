#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include "phrasecomp/config.hpp"
#include "phrasecomp/embedding_store.hpp"
#include "phrasecomp/lexical.hpp"
#include "phrasecomp/model.hpp"
#include "phrasecomp/phrase_data.hpp"
#include "phrasecomp/rng.hpp"

namespace phrasecomp {

enum class DropoutSite {
  kNone,
  kTransformedH,  // elementwise on H, TransWeight family only
};

std::string_view dropout_site_name(DropoutSite site);
DropoutSite parse_dropout_site(std::string_view name);

struct TrainConfig {
  double learning_rate = 0.05;
  std::size_t batch_size = 100;
  std::size_t max_epochs = 200;
  std::size_t patience = 10;
  double dropout_rate = 0.0;
  DropoutSite dropout_site = DropoutSite::kNone;
  std::uint64_t seed = 0;
  double adagrad_epsilon = 1e-8;

  // Throws InvalidArgument when a field is out of range.
  void validate() const;
};

// Overrides the fields of `base` named by keys of `config` (same names as the
// struct fields). Unknown keys are ignored so one file can drive several
// modules.
TrainConfig train_config_from(const KeyValueConfig& config, TrainConfig base = {});

// Dropout rate to use on H when dropout is switched on without an explicit
// rate: 0.8 (full), 0.4 (feat), 0.6 (trans, mat); 0 for other kinds.
double default_dropout_rate(ModelKind kind);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double dev_loss = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainState {
  ParamGrads accumulators;  // sums of squared gradients, shaped like the model
  std::size_t epoch = 0;
  std::vector<EpochRecord> history;
  double best_dev_loss = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  ModelParams best_params;
};

TrainState make_train_state(const ModelParams& params);

// 1 - p.q / (|p||q|), in [0, 2]. Throws ZeroNormError on a zero vector.
double cosine_distance_loss(std::span<const double> p, std::span<const double> q);

// acc += g^2; theta -= lr * g / (sqrt(acc) + eps), elementwise.
void adagrad_update(ModelParams& params, const ParamGrads& grads, ParamGrads& accumulators,
                    double learning_rate, double epsilon = 1e-8);

// Training-time inverted dropout: each entry is 0 with probability `rate`,
// otherwise 1 / (1 - rate), so the expected mask is all ones.
void draw_dropout_mask(double rate, Rng& rng, std::span<double> mask);

// Vectors and parameter rows of a dataset, resolved once.
class PreparedSet {
 public:
  PreparedSet(const ModelParams& params, const PhraseDataset& data,
              const EmbeddingSpace& space, const LexicalResolver& resolver);

  std::size_t size() const { return rows_.size(); }
  TrainingExample example(std::size_t i) const;

 private:
  std::size_t n_;
  std::vector<double> u_, v_, target_;
  std::vector<WordRows> rows_;
};

// Mean cosine distance in eval mode (no dropout).
double mean_loss(const ModelParams& params, const PreparedSet& set);

struct TrainResult {
  ModelParams model;  // snapshot with the lowest dev loss
  TrainState state;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Adagrad on seeded-shuffled minibatches. After every epoch, train and dev
// losses are measured in eval mode; the epoch with the lowest dev loss is
// kept (train loss when `dev` is empty). Stops after `patience` consecutive
// epochs without a strict dev improvement, or at max_epochs. Throws
// DivergenceError on a non-finite loss.
TrainResult train(ModelParams model, const PhraseDataset& train_set,
                  const PhraseDataset& dev_set, const EmbeddingSpace& space,
                  const TrainConfig& config, const LexicalResolver& resolver,
                  const EpochCallback& on_epoch = {});

// Same, with a nearest-neighbor resolver over the training vocabulary.
TrainResult train(ModelParams model, const PhraseDataset& train_set,
                  const PhraseDataset& dev_set, const EmbeddingSpace& space,
                  const TrainConfig& config);

// TSV, header "epoch\ttrain_loss\tdev_loss", losses with 6 decimals.
void write_training_log(std::span<const EpochRecord> history, std::ostream& out);

}  // namespace phrasecomp
