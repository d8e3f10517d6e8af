#include "phrasecomp/rank_eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include "phrasecomp/error.hpp"
#include "phrasecomp/kernels.hpp"

namespace phrasecomp {

std::string_view rank_method_name(RankMethod method) {
  return method == RankMethod::kOriginal ? "original" : "corrected";
}

RankMethod parse_rank_method(std::string_view name) {
  if (name == "corrected") return RankMethod::kCorrected;
  if (name == "original") return RankMethod::kOriginal;
  throw InvalidArgument("unknown rank method '" + std::string(name) + "'");
}

namespace {

std::vector<double> unit_copy(std::span<const double> x) {
  const double norm = l2_norm(x);
  if (norm == 0.0 || !std::isfinite(norm)) {
    throw ZeroNormError("composed vector has zero or non-finite norm; rank undefined");
  }
  std::vector<double> out(x.begin(), x.end());
  for (double& v : out) v /= norm;
  return out;
}

// 1 + |{r != skip : unit_r . ref > threshold}|
std::size_t count_above(const EmbeddingSpace& space, std::span<const double> ref,
                        double threshold, std::size_t skip) {
  std::size_t rank = 1;
  for (std::size_t r = 0; r < space.size(); ++r) {
    if (r == skip) continue;
    if (kernels::dot(space.unit_vector(r), ref) > threshold) ++rank;
  }
  return rank;
}

std::size_t phrase_row(const EmbeddingSpace& space, std::span<const double> composed,
                       std::string_view phrase) {
  if (composed.size() != space.dim()) {
    throw InvalidArgument("composed vector dimension does not match the embedding space");
  }
  return space.row(phrase);
}

}  // namespace

std::size_t corrected_rank(const EmbeddingSpace& space, std::span<const double> composed,
                           std::string_view phrase) {
  const std::size_t row = phrase_row(space, composed, phrase);
  const auto observed = space.unit_vector(row);
  const auto c = unit_copy(composed);
  return count_above(space, observed, kernels::dot(c, observed), row);
}

std::size_t original_rank(const EmbeddingSpace& space, std::span<const double> composed,
                          std::string_view phrase) {
  const std::size_t row = phrase_row(space, composed, phrase);
  const auto observed = space.unit_vector(row);
  const auto c = unit_copy(composed);
  return count_above(space, c, kernels::dot(c, observed), row);
}

std::size_t rank_of(RankMethod method, const EmbeddingSpace& space,
                    std::span<const double> composed, std::string_view phrase) {
  return method == RankMethod::kCorrected ? corrected_rank(space, composed, phrase)
                                          : original_rank(space, composed, phrase);
}

namespace {

double median_sorted(std::span<const std::size_t> s) {
  const std::size_t m = s.size() / 2;
  if (s.size() % 2 == 1) return static_cast<double>(s[m]);
  return (static_cast<double>(s[m - 1]) + static_cast<double>(s[m])) / 2.0;
}

}  // namespace

Quartiles quartiles(std::span<const std::size_t> ranks) {
  if (ranks.empty()) throw InvalidArgument("quartiles: empty rank list");
  std::vector<std::size_t> s(ranks.begin(), ranks.end());
  std::sort(s.begin(), s.end());
  if (s.size() == 1) {
    const double r = static_cast<double>(s[0]);
    return {r, r, r};
  }
  const std::size_t half = s.size() / 2;
  const std::span<const std::size_t> all(s);
  return {median_sorted(all.first(half)), median_sorted(all),
          median_sorted(all.last(half))};
}

EvalReport summarize(std::vector<ItemResult> items) {
  if (items.empty()) throw InvalidArgument("cannot summarize an empty evaluation");
  EvalReport report;
  std::vector<std::size_t> ranks;
  ranks.reserve(items.size());
  double dist_sum = 0.0;
  std::size_t top5 = 0;
  for (const auto& it : items) {
    ranks.push_back(it.rank);
    dist_sum += it.cos_distance;
    if (it.rank <= 5) ++top5;
  }
  const auto q = quartiles(ranks);
  report.q1 = q.q1;
  report.q2 = q.q2;
  report.q3 = q.q3;
  report.cos_d = dist_sum / static_cast<double>(items.size());
  report.pct_le_5 = 100.0 * static_cast<double>(top5) / static_cast<double>(items.size());
  report.per_item = std::move(items);
  return report;
}

namespace {

// Runs fn(i) for i in [0, count) on up to `threads` workers; rethrows the
// exception of the lowest failing index.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

EvalReport evaluate(const ModelParams& model, const PhraseDataset& test,
                    const EmbeddingSpace& space, RankMethod method,
                    const LexicalResolver& resolver, const EvalOptions& options) {
  if (test.empty()) throw InvalidArgument("evaluate: empty test set");
  if (model.shape.n != space.dim()) {
    throw InvalidArgument("model dimension does not match the embedding space");
  }
  std::vector<ItemResult> items(test.size());
  parallel_for(test.size(), options.threads, [&](std::size_t i) {
    const auto& r = test[i];
    const auto rows = resolve_word_rows(model, r, space, resolver);
    const auto p = compose(model, space.vector(r.word1), space.vector(r.word2), rows,
                           options.dropout_mask);
    items[i].phrase = r.phrase;
    items[i].rank = rank_of(method, space, p, r.phrase);
    items[i].cos_distance = 1.0 - cosine_similarity(p, space.vector(r.phrase));
  });
  return summarize(std::move(items));
}

std::string_view dropout_mode_name(DropoutMode mode) {
  return mode == DropoutMode::kPerParameter ? "per_parameter" : "full_transformation";
}

DropoutMode parse_dropout_mode(std::string_view name) {
  if (name == "full_transformation" || name == "full-transformation") {
    return DropoutMode::kFullTransformation;
  }
  if (name == "per_parameter" || name == "per-parameter") return DropoutMode::kPerParameter;
  throw InvalidArgument("unknown dropout mode '" + std::string(name) + "'");
}

namespace {

void check_rate(double rate) {
  if (!(rate >= 0.0 && rate <= 0.9)) {
    throw InvalidArgument("dropout rate " + std::to_string(rate) + " outside [0, 0.9]");
  }
}

// First k entries of a partial Fisher-Yates shuffle of [0, count).
std::vector<std::size_t> sample_without_replacement(std::size_t count, std::size_t k,
                                                    Rng& rng) {
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(count - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

}  // namespace

std::vector<double> draw_ablation_mask(std::size_t t, std::size_t n, double rate,
                                       DropoutMode mode, Rng& rng) {
  check_rate(rate);
  if (t == 0 || n == 0) throw InvalidArgument("ablation mask needs t, n >= 1");
  const auto rows = static_cast<std::size_t>(std::lround(rate * static_cast<double>(t)));
  std::vector<double> mask(t * n, 1.0);
  if (mode == DropoutMode::kFullTransformation) {
    for (std::size_t j : sample_without_replacement(t, rows, rng)) {
      std::fill_n(mask.begin() + static_cast<std::ptrdiff_t>(j * n), n, 0.0);
    }
  } else {
    for (std::size_t e : sample_without_replacement(t * n, rows * n, rng)) mask[e] = 0.0;
  }
  return mask;
}

std::vector<DropoutCurvePoint> dropout_experiment(
    const ModelParams& model, const PhraseDataset& test, const EmbeddingSpace& space,
    std::span<const double> rates, DropoutMode mode, std::uint64_t seed,
    std::size_t repeats, const LexicalResolver& resolver, std::size_t threads) {
  if (!is_transweight_family(model.kind)) {
    throw InvalidArgument("dropout experiment needs a TransWeight-family model");
  }
  if (repeats == 0) throw InvalidArgument("dropout experiment needs repeats >= 1");
  for (double r : rates) check_rate(r);

  const std::uint64_t mode_seed = derive_seed(seed, dropout_mode_name(mode));
  std::vector<DropoutCurvePoint> curve;
  for (double rate : rates) {
    // Averaging hit counts rather than percentages keeps rate 0 bit-identical
    // to a plain evaluation.
    std::size_t hits = 0;
    for (std::size_t rep = 0; rep < repeats; ++rep) {
      Rng rng(derive_seed(mode_seed, "repeat/" + std::to_string(rep)));
      const auto mask = draw_ablation_mask(model.shape.t, model.shape.n, rate, mode, rng);
      EvalOptions opts;
      opts.threads = threads;
      opts.dropout_mask = mask;
      const auto report = evaluate(model, test, space, RankMethod::kCorrected, resolver, opts);
      for (const auto& it : report.per_item) hits += it.rank <= 5 ? 1 : 0;
    }
    curve.push_back({rate, mode,
                     100.0 * static_cast<double>(hits) /
                         static_cast<double>(repeats * test.size())});
  }
  return curve;
}

}  // namespace phrasecomp
