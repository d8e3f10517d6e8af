#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "phrasecomp/embedding_store.hpp"

namespace phrasecomp {

struct PhraseRecord {
  std::string word1;
  std::string word2;
  std::string phrase;

  friend bool operator==(const PhraseRecord&, const PhraseRecord&) = default;
};

enum class Split { kTrain, kDev, kTest };

std::string_view split_name(Split split);
Split parse_split(std::string_view name);

// Ordered (word1, word2, phrase) triples without duplicates, optionally
// carrying one split label per record.
class PhraseDataset {
 public:
  PhraseDataset() = default;
  explicit PhraseDataset(std::vector<PhraseRecord> records);
  PhraseDataset(std::vector<PhraseRecord> records, std::vector<Split> labels);

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const std::vector<PhraseRecord>& records() const { return records_; }
  const PhraseRecord& operator[](std::size_t i) const { return records_[i]; }

  bool labeled() const { return !labels_.empty(); }
  const std::vector<Split>& labels() const { return labels_; }

  // Records carrying `split`, in dataset order, without labels.
  PhraseDataset subset(Split split) const;

  friend bool operator==(const PhraseDataset&, const PhraseDataset&) = default;

 private:
  std::vector<PhraseRecord> records_;
  std::vector<Split> labels_;
};

// Tab-separated word1, word2, phrase. A fourth column, when present on every
// line, is read as the split label. Lines starting with '#' are comments.
PhraseDataset load_phrase_set(std::istream& in);
PhraseDataset load_phrase_set_file(const std::string& path);

// Writes three columns, or four when the dataset is labeled.
void save_phrase_set(const PhraseDataset& dataset, std::ostream& out);
void save_phrase_set_file(const PhraseDataset& dataset, const std::string& path);

struct FilterResult {
  PhraseDataset dataset;
  std::size_t dropped = 0;
};

// Keeps records whose three tokens all resolve in `space`. Labels follow
// their records.
FilterResult filter_by_vocabulary(const PhraseDataset& dataset,
                                  const EmbeddingSpace& space);

// Proportions in train:test:dev order, as in "7:2:1".
struct SplitRatios {
  double train = 7;
  double test = 2;
  double dev = 1;
};

SplitRatios parse_split_ratios(std::string_view text);

// Shuffles with Rng(seed) (Fisher-Yates), then labels the first
// floor(N * train / total) records train, the next floor(N * test / total)
// test, and the remainder dev. Requires at least 10 records.
PhraseDataset split_dataset(const PhraseDataset& dataset, SplitRatios ratios,
                            std::uint64_t seed);

// Holds out a random `held_out_fraction` of the first-position words. Records
// whose word1 is held out and whose word2 is not become test; records that
// mention a held-out word anywhere else are dropped; the rest are split into
// train and dev with `dev_fraction` of them going to dev.
PhraseDataset split_held_out_first_words(const PhraseDataset& dataset,
                                         double held_out_fraction,
                                         double dev_fraction, std::uint64_t seed);

struct SyntheticConfig {
  std::size_t n = 20;
  std::size_t num_classes = 5;
  std::size_t words_per_class = 10;
  std::size_t num_phrases = 600;
  double noise_sigma = 0.05;
  std::uint64_t seed = 1;
  // Spread of word vectors around their class centroid, relative to the
  // unit-variance centroids.
  double word_spread = 0.35;
  // Size of the class-pair specific part of each composition map relative
  // to the part shared by all class pairs.
  double map_spread = 0.2;
};

struct SyntheticData {
  EmbeddingSpace space;
  PhraseDataset dataset;
  // Class id of each word "w<i>", indexed by i.
  std::vector<std::size_t> word_class;
};

// Words "w<i>" are drawn around per-class centroids. Each phrase "w<i>_w<j>"
// gets target M_{c(i),c(j)} [u; v] + noise, where the map for a class pair is
// shared by all its phrases. Pairs are sampled without replacement; i == j
// is allowed.
SyntheticData generate_synthetic(const SyntheticConfig& config);

}  // namespace phrasecomp
