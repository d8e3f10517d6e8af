#include "phrasecomp/phrase_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <tuple>
#include <unordered_set>

#include "phrasecomp/config.hpp"
#include "phrasecomp/error.hpp"
#include "phrasecomp/rng.hpp"

namespace phrasecomp {
namespace {

bool valid_token(std::string_view t) {
  return !t.empty() && t.find_first_of(" \t\r\n") == std::string_view::npos;
}

void check_record(const PhraseRecord& r, std::size_t index) {
  if (!valid_token(r.word1) || !valid_token(r.word2) || !valid_token(r.phrase)) {
    throw InvalidArgument("phrase record " + std::to_string(index + 1) +
                          ": tokens must be non-empty and whitespace-free");
  }
  if (r.phrase == r.word1 || r.phrase == r.word2) {
    throw InvalidArgument("phrase record " + std::to_string(index + 1) +
                          ": phrase token equals a constituent");
  }
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      cols.push_back(line.substr(start));
      break;
    }
    cols.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return cols;
}

}  // namespace

std::string_view split_name(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kDev:
      return "dev";
    case Split::kTest:
      return "test";
  }
  return "?";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "dev") return Split::kDev;
  if (name == "test") return Split::kTest;
  throw InvalidArgument("unknown split label '" + std::string(name) + "'");
}

PhraseDataset::PhraseDataset(std::vector<PhraseRecord> records)
    : records_(std::move(records)) {
  std::set<std::tuple<std::string_view, std::string_view, std::string_view>> seen;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    check_record(r, i);
    if (!seen.emplace(r.word1, r.word2, r.phrase).second) {
      throw InvalidArgument("phrase record " + std::to_string(i + 1) +
                            ": duplicate triple (" + r.word1 + ", " + r.word2 +
                            ", " + r.phrase + ")");
    }
  }
}

PhraseDataset::PhraseDataset(std::vector<PhraseRecord> records, std::vector<Split> labels)
    : PhraseDataset(std::move(records)) {
  if (labels.size() != records_.size()) {
    throw InvalidArgument("split labels must cover every record exactly once");
  }
  labels_ = std::move(labels);
}

PhraseDataset PhraseDataset::subset(Split split) const {
  if (!labeled()) throw InvalidArgument("dataset has no split labels");
  std::vector<PhraseRecord> out;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (labels_[i] == split) out.push_back(records_[i]);
  }
  return PhraseDataset(std::move(out));
}

PhraseDataset load_phrase_set(std::istream& in) {
  std::vector<PhraseRecord> records;
  std::vector<Split> labels;
  std::optional<bool> has_labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto cols = split_tabs(line);
    if (cols.size() != 3 && cols.size() != 4) {
      throw ParseError("phrase set line " + std::to_string(line_no) +
                       ": wrong column count (expected 3, found " +
                       std::to_string(cols.size()) + ")");
    }
    const bool labeled = cols.size() == 4;
    if (has_labels && *has_labels != labeled) {
      throw ParseError("phrase set line " + std::to_string(line_no) +
                       ": split column present on some lines only");
    }
    has_labels = labeled;
    records.push_back({std::string(cols[0]), std::string(cols[1]), std::string(cols[2])});
    if (labeled) {
      try {
        labels.push_back(parse_split(cols[3]));
      } catch (const InvalidArgument& e) {
        throw ParseError("phrase set line " + std::to_string(line_no) + ": " + e.what());
      }
    }
  }
  try {
    if (has_labels.value_or(false)) return PhraseDataset(std::move(records), std::move(labels));
    return PhraseDataset(std::move(records));
  } catch (const InvalidArgument& e) {
    throw ParseError(e.what());
  }
}

PhraseDataset load_phrase_set_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open phrase set '" + path + "'");
  return load_phrase_set(in);
}

void save_phrase_set(const PhraseDataset& dataset, std::ostream& out) {
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& r = dataset[i];
    out << r.word1 << '\t' << r.word2 << '\t' << r.phrase;
    if (dataset.labeled()) out << '\t' << split_name(dataset.labels()[i]);
    out << '\n';
  }
  if (!out) throw IoError("failed to write phrase set");
}

void save_phrase_set_file(const PhraseDataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write phrase set '" + path + "'");
  save_phrase_set(dataset, out);
}

FilterResult filter_by_vocabulary(const PhraseDataset& dataset,
                                  const EmbeddingSpace& space) {
  std::vector<PhraseRecord> kept;
  std::vector<Split> labels;
  FilterResult result;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& r = dataset[i];
    if (space.contains(r.word1) && space.contains(r.word2) && space.contains(r.phrase)) {
      kept.push_back(r);
      if (dataset.labeled()) labels.push_back(dataset.labels()[i]);
    } else {
      ++result.dropped;
    }
  }
  result.dataset = dataset.labeled() ? PhraseDataset(std::move(kept), std::move(labels))
                                     : PhraseDataset(std::move(kept));
  return result;
}

SplitRatios parse_split_ratios(std::string_view text) {
  std::vector<double> parts;
  std::size_t start = 0;
  while (true) {
    const auto colon = text.find(':', start);
    const auto piece = text.substr(start, colon == std::string_view::npos
                                              ? std::string_view::npos
                                              : colon - start);
    parts.push_back(parse_double(piece, "split ratio"));
    if (colon == std::string_view::npos) break;
    start = colon + 1;
  }
  if (parts.size() != 3 || parts[0] < 0 || parts[1] < 0 || parts[2] < 0 ||
      parts[0] + parts[1] + parts[2] <= 0) {
    throw InvalidArgument("split ratio must be 'train:test:dev' with nonnegative parts");
  }
  return {parts[0], parts[1], parts[2]};
}

PhraseDataset split_dataset(const PhraseDataset& dataset, SplitRatios ratios,
                            std::uint64_t seed) {
  const std::size_t n = dataset.size();
  if (n < 10) {
    throw InvalidArgument("split_dataset: need at least 10 records, got " + std::to_string(n));
  }
  const double total = ratios.train + ratios.test + ratios.dev;
  if (!(total > 0) || ratios.train < 0 || ratios.test < 0 || ratios.dev < 0) {
    throw InvalidArgument("split_dataset: invalid ratios");
  }
  std::vector<PhraseRecord> records = dataset.records();
  Rng rng(seed);
  rng.shuffle(std::span<PhraseRecord>(records));

  // Integer ratios like 7:2:1 must give exact counts (70 for N = 100), so the
  // products are rounded to the nearest integer before flooring when they are
  // within rounding error of one.
  auto count_for = [&](double part) {
    const double exact = static_cast<double>(n) * part / total;
    const double nearest = std::round(exact);
    const double value = std::abs(exact - nearest) < 1e-9 ? nearest : std::floor(exact);
    return static_cast<std::size_t>(value);
  };
  const std::size_t n_train = count_for(ratios.train);
  const std::size_t n_test = std::min(count_for(ratios.test), n - n_train);

  std::vector<Split> labels(n, Split::kDev);
  for (std::size_t i = 0; i < n_train; ++i) labels[i] = Split::kTrain;
  for (std::size_t i = n_train; i < n_train + n_test; ++i) labels[i] = Split::kTest;
  return PhraseDataset(std::move(records), std::move(labels));
}

PhraseDataset split_held_out_first_words(const PhraseDataset& dataset,
                                         double held_out_fraction,
                                         double dev_fraction, std::uint64_t seed) {
  if (!(held_out_fraction > 0 && held_out_fraction < 1) ||
      !(dev_fraction >= 0 && dev_fraction < 1)) {
    throw InvalidArgument("split_held_out_first_words: fractions out of range");
  }
  std::vector<std::string> first_words;
  TokenSet seen;
  for (const auto& r : dataset.records()) {
    if (seen.insert(r.word1).second) first_words.push_back(r.word1);
  }
  Rng rng(seed);
  rng.shuffle(std::span<std::string>(first_words));
  const auto n_held = static_cast<std::size_t>(
      std::llround(held_out_fraction * static_cast<double>(first_words.size())));
  const TokenSet held(first_words.begin(), first_words.begin() + n_held);

  std::vector<PhraseRecord> records;
  std::vector<Split> labels;
  std::vector<std::size_t> rest;
  for (const auto& r : dataset.records()) {
    if (held.contains(r.word2)) continue;
    records.push_back(r);
    if (held.contains(r.word1)) {
      labels.push_back(Split::kTest);
    } else {
      labels.push_back(Split::kTrain);
      rest.push_back(records.size() - 1);
    }
  }
  rng.shuffle(std::span<std::size_t>(rest));
  const auto n_dev =
      static_cast<std::size_t>(std::floor(dev_fraction * static_cast<double>(rest.size())));
  for (std::size_t i = 0; i < n_dev; ++i) labels[rest[i]] = Split::kDev;
  return PhraseDataset(std::move(records), std::move(labels));
}

SyntheticData generate_synthetic(const SyntheticConfig& config) {
  if (config.n == 0 || config.num_classes == 0 || config.words_per_class == 0 ||
      config.num_phrases == 0) {
    throw InvalidArgument("generate_synthetic: all counts must be positive");
  }
  if (!(config.noise_sigma >= 0) || !(config.word_spread >= 0) || !(config.map_spread >= 0)) {
    throw InvalidArgument("generate_synthetic: spreads and noise must be nonnegative");
  }
  const std::size_t n = config.n;
  const std::size_t classes = config.num_classes;
  const std::size_t num_words = classes * config.words_per_class;
  const std::size_t num_pairs = num_words * num_words;
  if (config.num_phrases > num_pairs) {
    throw InvalidArgument("generate_synthetic: " + std::to_string(config.num_phrases) +
                          " phrases requested but only " + std::to_string(num_pairs) +
                          " word pairs exist");
  }

  Rng rng(config.seed);
  std::vector<double> centroids(classes * n);
  for (double& c : centroids) c = rng.normal();

  std::vector<double> words(num_words * n);
  std::vector<std::size_t> word_class(num_words);
  for (std::size_t w = 0; w < num_words; ++w) {
    const std::size_t c = w / config.words_per_class;
    word_class[w] = c;
    for (std::size_t k = 0; k < n; ++k) {
      words[w * n + k] = centroids[c * n + k] + config.word_spread * rng.normal();
    }
  }

  // One n x 2n map per ordered class pair: shared part plus a pair-specific
  // perturbation.
  const double map_sigma = 1.0 / std::sqrt(2.0 * static_cast<double>(n));
  std::vector<double> shared(n * 2 * n);
  for (double& m : shared) m = map_sigma * rng.normal();
  std::vector<double> maps(classes * classes * n * 2 * n);
  for (std::size_t pair = 0; pair < classes * classes; ++pair) {
    for (std::size_t e = 0; e < n * 2 * n; ++e) {
      maps[pair * n * 2 * n + e] = shared[e] + config.map_spread * map_sigma * rng.normal();
    }
  }

  std::vector<std::uint64_t> chosen;
  chosen.reserve(config.num_phrases);
  if (num_pairs <= (std::size_t{1} << 22)) {
    std::vector<std::uint64_t> all(num_pairs);
    std::iota(all.begin(), all.end(), std::uint64_t{0});
    for (std::size_t i = 0; i < config.num_phrases; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(num_pairs - i));
      std::swap(all[i], all[j]);
      chosen.push_back(all[i]);
    }
  } else {
    std::unordered_set<std::uint64_t> taken;
    while (chosen.size() < config.num_phrases) {
      const std::uint64_t p = rng.below(num_pairs);
      if (taken.insert(p).second) chosen.push_back(p);
    }
  }

  std::vector<std::string> tokens;
  tokens.reserve(num_words + chosen.size());
  for (std::size_t w = 0; w < num_words; ++w) tokens.push_back("w" + std::to_string(w));
  std::vector<double> values = words;
  values.reserve((num_words + chosen.size()) * n);

  std::vector<PhraseRecord> records;
  records.reserve(chosen.size());
  std::vector<double> target(n);
  for (const std::uint64_t pair : chosen) {
    const std::size_t i = static_cast<std::size_t>(pair / num_words);
    const std::size_t j = static_cast<std::size_t>(pair % num_words);
    const double* map =
        maps.data() + (word_class[i] * classes + word_class[j]) * n * 2 * n;
    const double* u = words.data() + i * n;
    const double* v = words.data() + j * n;
    for (std::size_t r = 0; r < n; ++r) {
      double acc = 0.0;
      const double* row = map + r * 2 * n;
      for (std::size_t k = 0; k < n; ++k) acc += row[k] * u[k];
      for (std::size_t k = 0; k < n; ++k) acc += row[n + k] * v[k];
      target[r] = acc;
    }
    if (config.noise_sigma > 0) {
      for (double& t : target) t += rng.normal(0.0, config.noise_sigma);
    }
    values.insert(values.end(), target.begin(), target.end());
    const std::string w1 = "w" + std::to_string(i);
    const std::string w2 = "w" + std::to_string(j);
    tokens.push_back(w1 + "_" + w2);
    records.push_back({w1, w2, w1 + "_" + w2});
  }

  return SyntheticData{EmbeddingSpace(std::move(tokens), std::move(values), n),
                       PhraseDataset(std::move(records)), std::move(word_class)};
}

}  // namespace phrasecomp
