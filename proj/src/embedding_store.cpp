#include "phrasecomp/embedding_store.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "binary_io.hpp"
#include "phrasecomp/error.hpp"
#include "phrasecomp/kernels.hpp"

namespace phrasecomp {
namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (pos < line.size()) {
    const auto start = line.find_first_not_of(" \t\r", pos);
    if (start == std::string_view::npos) break;
    auto end = line.find_first_of(" \t\r", start);
    if (end == std::string_view::npos) end = line.size();
    fields.push_back(line.substr(start, end - start));
    pos = end;
  }
  return fields;
}

std::pair<std::size_t, std::size_t> parse_header(std::string_view line) {
  const auto fields = split_fields(line);
  if (fields.size() != 2) {
    throw ParseError("embedding header must be '<count> <dim>'");
  }
  std::size_t count = 0;
  std::size_t dim = 0;
  auto parse = [](std::string_view f, std::size_t& out) {
    const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), out);
    return ec == std::errc() && ptr == f.data() + f.size();
  };
  if (!parse(fields[0], count) || !parse(fields[1], dim) || dim == 0) {
    throw ParseError("embedding header must be '<count> <dim>' with dim > 0");
  }
  return {count, dim};
}

std::string row_context(std::size_t record) {
  return "embedding record " + std::to_string(record + 1);
}

EmbeddingSpace load_text(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty embedding file");
  const auto [count, dim] = parse_header(line);

  std::vector<std::string> tokens;
  std::vector<double> values;
  tokens.reserve(count);
  values.reserve(count * dim);
  while (std::getline(in, line)) {
    const auto fields = split_fields(line);
    if (fields.empty()) continue;
    const std::size_t record = tokens.size();
    if (record == count) {
      throw ParseError("embedding file has more records than its header declares");
    }
    if (fields.size() != dim + 1) {
      throw ParseError(row_context(record) + ": dimension mismatch (expected " +
                       std::to_string(dim) + " components, found " +
                       std::to_string(fields.size() - 1) + ")");
    }
    tokens.emplace_back(fields[0]);
    for (std::size_t c = 1; c <= dim; ++c) {
      double v = 0.0;
      const auto f = fields[c];
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        throw ParseError(row_context(record) + ": malformed component '" +
                         std::string(f) + "'");
      }
      values.push_back(v);
    }
  }
  if (tokens.size() != count) {
    throw ParseError("embedding file declares " + std::to_string(count) +
                     " records but contains " + std::to_string(tokens.size()));
  }
  return EmbeddingSpace(std::move(tokens), std::move(values), dim);
}

EmbeddingSpace load_binary(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty embedding file");
  const auto [count, dim] = parse_header(line);

  std::vector<std::string> tokens;
  std::vector<double> values;
  tokens.reserve(count);
  values.reserve(count * dim);
  for (std::size_t record = 0; record < count; ++record) {
    int ch = in.get();
    while (ch == '\n' || ch == '\r') ch = in.get();
    std::string token;
    while (ch != std::char_traits<char>::eof() && ch != ' ') {
      token.push_back(static_cast<char>(ch));
      ch = in.get();
    }
    if (ch == std::char_traits<char>::eof()) {
      throw ParseError(row_context(record) + ": truncated binary record");
    }
    if (token.empty()) throw ParseError(row_context(record) + ": empty token");
    tokens.push_back(std::move(token));
    for (std::size_t c = 0; c < dim; ++c) {
      try {
        values.push_back(detail::read_f32_le(in));
      } catch (const ParseError&) {
        throw ParseError(row_context(record) + ": dimension mismatch (truncated vector)");
      }
    }
  }
  return EmbeddingSpace(std::move(tokens), std::move(values), dim);
}

void append_number(std::string& out, double value, int precision) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value,
                                       std::chars_format::general, precision);
  if (ec != std::errc()) throw Error("failed to format embedding component");
  out.append(buf, ptr);
}

}  // namespace

EmbeddingSpace::EmbeddingSpace(std::vector<std::string> tokens,
                               std::vector<double> values, std::size_t dim)
    : tokens_(std::move(tokens)), values_(std::move(values)), dim_(dim) {
  if (dim_ == 0) throw InvalidArgument("embedding dimension must be positive");
  if (tokens_.empty()) throw InvalidArgument("embedding space must not be empty");
  if (values_.size() != tokens_.size() * dim_) {
    throw InvalidArgument("embedding matrix size does not match |V| x dim");
  }
  index_.reserve(tokens_.size());
  unit_values_.resize(values_.size());
  for (std::size_t r = 0; r < tokens_.size(); ++r) {
    const auto& tok = tokens_[r];
    if (tok.empty() || tok.find_first_of(" \t\r\n") != std::string::npos) {
      throw InvalidArgument(row_context(r) + ": token is empty or contains whitespace");
    }
    if (!index_.emplace(tok, r).second) {
      throw InvalidArgument(row_context(r) + ": duplicate token '" + tok + "'");
    }
    const std::span<const double> row(values_.data() + r * dim_, dim_);
    for (double v : row) {
      if (!std::isfinite(v)) {
        throw InvalidArgument(row_context(r) + ": non-finite component for '" + tok + "'");
      }
    }
    const double norm = l2_norm(row);
    if (norm == 0.0) {
      throw InvalidArgument(row_context(r) + ": zero vector for '" + tok + "'");
    }
    for (std::size_t c = 0; c < dim_; ++c) {
      unit_values_[r * dim_ + c] = row[c] / norm;
    }
  }
}

std::optional<std::size_t> EmbeddingSpace::find(std::string_view token) const {
  const auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t EmbeddingSpace::row(std::string_view token) const {
  if (const auto r = find(token)) return *r;
  throw InvalidArgument("token '" + std::string(token) + "' is not in the embedding space");
}

std::span<const double> EmbeddingSpace::vector(std::size_t row) const {
  if (row >= size()) throw InvalidArgument("embedding row out of range");
  return {values_.data() + row * dim_, dim_};
}

std::span<const double> EmbeddingSpace::unit_vector(std::size_t row) const {
  if (row >= size()) throw InvalidArgument("embedding row out of range");
  return {unit_values_.data() + row * dim_, dim_};
}

EmbeddingSpace load_embeddings(std::istream& in, EmbeddingFormat format) {
  // ParseError and InvalidArgument both describe a bad file here.
  try {
    return format == EmbeddingFormat::kText ? load_text(in) : load_binary(in);
  } catch (const InvalidArgument& e) {
    throw ParseError(e.what());
  }
}

EmbeddingSpace load_embeddings_file(const std::string& path, EmbeddingFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open embedding file '" + path + "'");
  return load_embeddings(in, format);
}

void save_embeddings(const EmbeddingSpace& space, std::ostream& out,
                     EmbeddingFormat format, int precision) {
  out << space.size() << ' ' << space.dim() << '\n';
  if (format == EmbeddingFormat::kBinary) {
    for (std::size_t r = 0; r < space.size(); ++r) {
      out << space.token(r) << ' ';
      for (double v : space.vector(r)) detail::write_f32_le(out, static_cast<float>(v));
    }
  } else {
    std::string line;
    for (std::size_t r = 0; r < space.size(); ++r) {
      line = space.token(r);
      for (double v : space.vector(r)) {
        line.push_back(' ');
        append_number(line, v, precision);
      }
      line.push_back('\n');
      out << line;
    }
  }
  if (!out) throw IoError("failed to write embeddings");
}

void save_embeddings_file(const EmbeddingSpace& space, const std::string& path,
                          EmbeddingFormat format, int precision) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write embedding file '" + path + "'");
  save_embeddings(space, out, format, precision);
}

double l2_norm(std::span<const double> x) { return std::sqrt(kernels::dot(x, x)); }

double cosine_similarity(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidArgument("cosine_similarity: dimension mismatch");
  const double nx = l2_norm(x);
  const double ny = l2_norm(y);
  if (nx == 0.0 || ny == 0.0) throw ZeroNormError("cosine_similarity: zero-norm vector");
  return std::clamp(kernels::dot(x, y) / (nx * ny), -1.0, 1.0);
}

std::vector<double> similarities_to_all(const EmbeddingSpace& space,
                                        std::span<const double> query) {
  if (query.size() != space.dim()) {
    throw InvalidArgument("similarity query has wrong dimension");
  }
  const double norm = l2_norm(query);
  if (norm == 0.0) throw ZeroNormError("similarity query has zero norm");
  std::vector<double> unit(query.begin(), query.end());
  for (double& v : unit) v /= norm;
  std::vector<double> sims(space.size(), 0.0);
  kernels::gemv(space.unit_values(), space.size(), space.dim(), unit, sims);
  for (double& s : sims) s = std::clamp(s, -1.0, 1.0);
  return sims;
}

std::vector<Neighbor> nearest_neighbors(const EmbeddingSpace& space,
                                        std::span<const double> query,
                                        std::size_t k, const TokenSet& exclude) {
  if (k == 0) throw InvalidArgument("nearest_neighbors: k must be at least 1");
  const auto sims = similarities_to_all(space, query);
  std::vector<std::size_t> candidates;
  candidates.reserve(space.size());
  for (std::size_t r = 0; r < space.size(); ++r) {
    if (!exclude.contains(space.token(r))) candidates.push_back(r);
  }
  const std::size_t take = std::min(k, candidates.size());
  auto better = [&](std::size_t a, std::size_t b) {
    if (sims[a] != sims[b]) return sims[a] > sims[b];
    return a < b;
  };
  std::partial_sort(candidates.begin(), candidates.begin() + take, candidates.end(), better);
  std::vector<Neighbor> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t r = candidates[i];
    out.push_back({space.token(r), r, sims[r]});
  }
  return out;
}

}  // namespace phrasecomp
