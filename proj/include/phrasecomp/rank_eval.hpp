#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "phrasecomp/embedding_store.hpp"
#include "phrasecomp/lexical.hpp"
#include "phrasecomp/model.hpp"
#include "phrasecomp/phrase_data.hpp"
#include "phrasecomp/rng.hpp"

namespace phrasecomp {

enum class RankMethod {
  kCorrected,  // similarities measured from the observed phrase vector
  kOriginal,   // similarities measured from the composed vector
};

std::string_view rank_method_name(RankMethod method);
RankMethod parse_rank_method(std::string_view name);

// 1 + number of vocabulary entries other than `phrase` that are strictly more
// similar to the observed phrase vector than `composed` is.
std::size_t corrected_rank(const EmbeddingSpace& space, std::span<const double> composed,
                           std::string_view phrase);

// 1 + number of vocabulary entries other than `phrase` that are strictly more
// similar to `composed` than the observed phrase vector is.
std::size_t original_rank(const EmbeddingSpace& space, std::span<const double> composed,
                          std::string_view phrase);

std::size_t rank_of(RankMethod method, const EmbeddingSpace& space,
                    std::span<const double> composed, std::string_view phrase);

struct Quartiles {
  double q1 = 0.0;
  double q2 = 0.0;
  double q3 = 0.0;

  friend bool operator==(const Quartiles&, const Quartiles&) = default;
};

// Q2 is the median; Q1 and Q3 are the medians of the lower and upper halves,
// the middle element of an odd-length list belonging to neither half. A single
// rank r gives (r, r, r).
Quartiles quartiles(std::span<const std::size_t> ranks);

struct ItemResult {
  std::string phrase;
  std::size_t rank = 0;
  double cos_distance = 0.0;

  friend bool operator==(const ItemResult&, const ItemResult&) = default;
};

struct EvalReport {
  double cos_d = 0.0;  // mean cosine distance to the observed vectors
  double q1 = 0.0, q2 = 0.0, q3 = 0.0;
  double pct_le_5 = 0.0;  // percentage of items with rank <= 5
  std::vector<ItemResult> per_item;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// Aggregates per-item results; throws on an empty list.
EvalReport summarize(std::vector<ItemResult> items);

struct EvalOptions {
  std::size_t threads = 1;
  // Optional fixed t*n mask on H applied to every item (TransWeight family).
  std::span<const double> dropout_mask;
};

// Composes every test phrase (no training-time dropout), ranks it and
// aggregates. Items are processed in parallel; results are independent of
// the thread count.
EvalReport evaluate(const ModelParams& model, const PhraseDataset& test,
                    const EmbeddingSpace& space, RankMethod method,
                    const LexicalResolver& resolver, const EvalOptions& options = {});

enum class DropoutMode {
  kFullTransformation,  // zero whole rows H_j
  kPerParameter,        // zero individual entries of H
};

std::string_view dropout_mode_name(DropoutMode mode);
DropoutMode parse_dropout_mode(std::string_view name);

// Prediction-time ablation mask with entries 0 or 1 and no rescaling.
// Full-transformation mode drops exactly round(rate*t) rows; per-parameter
// mode drops the same number of entries, round(rate*t)*n, chosen uniformly
// among all t*n, so both modes remove identical parameter counts.
std::vector<double> draw_ablation_mask(std::size_t t, std::size_t n, double rate,
                                       DropoutMode mode, Rng& rng);

struct DropoutCurvePoint {
  double rate = 0.0;
  DropoutMode mode = DropoutMode::kFullTransformation;
  double mean_pct_le_5 = 0.0;

  friend bool operator==(const DropoutCurvePoint&, const DropoutCurvePoint&) = default;
};

inline constexpr std::size_t kDefaultDropoutRepeats = 10;

// pct_le_5 of the corrected evaluation averaged over `repeats` masks per
// rate. Repeat r uses the same sub-seed at every rate. Rates must lie in
// [0, 0.9]; the model must belong to the TransWeight family.
std::vector<DropoutCurvePoint> dropout_experiment(
    const ModelParams& model, const PhraseDataset& test, const EmbeddingSpace& space,
    std::span<const double> rates, DropoutMode mode, std::uint64_t seed,
    std::size_t repeats, const LexicalResolver& resolver, std::size_t threads = 1);

}  // namespace phrasecomp
