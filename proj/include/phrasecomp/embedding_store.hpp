#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace phrasecomp {

struct StringHash {
  using is_transparent = void;
  std::size_t operator()(std::string_view s) const noexcept {
    return std::hash<std::string_view>{}(s);
  }
};

using TokenSet = std::unordered_set<std::string, StringHash, std::equal_to<>>;

// Immutable vocabulary of unique tokens with one dense vector each. Phrases
// are ordinary tokens (constituents joined by '_'). Every vector is finite
// and has nonzero norm; unit-normalized copies are kept for similarity
// queries. Safe for concurrent reads.
class EmbeddingSpace {
 public:
  EmbeddingSpace(std::vector<std::string> tokens, std::vector<double> values,
                 std::size_t dim);

  std::size_t size() const { return tokens_.size(); }
  std::size_t dim() const { return dim_; }

  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(std::size_t row) const { return tokens_.at(row); }

  std::optional<std::size_t> find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }
  // Throws InvalidArgument for unknown tokens.
  std::size_t row(std::string_view token) const;

  std::span<const double> vector(std::size_t row) const;
  std::span<const double> vector(std::string_view token) const {
    return vector(row(token));
  }
  std::span<const double> unit_vector(std::size_t row) const;

  // Row-major [size x dim].
  std::span<const double> values() const { return values_; }
  std::span<const double> unit_values() const { return unit_values_; }

 private:
  std::vector<std::string> tokens_;
  std::vector<double> values_;
  std::vector<double> unit_values_;
  std::size_t dim_;
  std::unordered_map<std::string, std::size_t, StringHash, std::equal_to<>> index_;
};

enum class EmbeddingFormat { kText, kBinary };

// Text: "<count> <dim>" header, then "<token> <c1> ... <cn>" per line.
// Binary: same header line, then per record the token, one space and n
// little-endian float32 values. A newline before a binary record is skipped.
EmbeddingSpace load_embeddings(std::istream& in, EmbeddingFormat format);
EmbeddingSpace load_embeddings_file(const std::string& path, EmbeddingFormat format);

// Text output writes `precision` significant digits per component (17 makes
// a reload bit-identical). Binary output narrows to float32.
void save_embeddings(const EmbeddingSpace& space, std::ostream& out,
                     EmbeddingFormat format, int precision = 6);
void save_embeddings_file(const EmbeddingSpace& space, const std::string& path,
                          EmbeddingFormat format, int precision = 6);

double l2_norm(std::span<const double> x);

// x.y / (|x| |y|), clamped to [-1, 1]. Throws ZeroNormError on a zero vector.
double cosine_similarity(std::span<const double> x, std::span<const double> y);

// Cosine similarity of `query` against every row, in row order.
std::vector<double> similarities_to_all(const EmbeddingSpace& space,
                                        std::span<const double> query);

struct Neighbor {
  std::string token;
  std::size_t row;
  double similarity;
};

// The k most similar tokens not in `exclude`, sorted by descending similarity
// with ties broken by ascending row id. Returns fewer than k entries when the
// candidate set is smaller.
std::vector<Neighbor> nearest_neighbors(const EmbeddingSpace& space,
                                        std::span<const double> query,
                                        std::size_t k, const TokenSet& exclude = {});

}  // namespace phrasecomp
