#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "phrasecomp/embedding_store.hpp"
#include "phrasecomp/model.hpp"
#include "phrasecomp/phrase_data.hpp"

namespace phrasecomp {

enum class FallbackPolicy {
  kNearestNeighbor,  // borrow the parameters of the most similar training word
  kIdentity,         // identity matrix / all-ones mask
};

std::string_view fallback_policy_name(FallbackPolicy policy);
FallbackPolicy parse_fallback_policy(std::string_view name);

// Decides which per-word parameter row a token uses at prediction time.
class LexicalResolver {
 public:
  LexicalResolver(TokenSet train_vocab, FallbackPolicy policy);

  // Constituents (both positions) of the training records.
  static LexicalResolver from_training(const PhraseDataset& train, FallbackPolicy policy);

  const TokenSet& train_vocab() const { return train_vocab_; }
  FallbackPolicy policy() const { return policy_; }

 private:
  TokenSet train_vocab_;
  FallbackPolicy policy_;
};

// Lexicon of the constituent words of `train`, in first-appearance order
// (word1 before word2 within a record).
Lexicon build_lexicon(const PhraseDataset& train);

// Row of the per-word slot for `token`: its own row when it is a training
// word with a lexicon entry; otherwise the row of the most cosine-similar
// training word (nearest_neighbor, ties by embedding row id) or kIdentityRow
// (identity). Throws if the token is not in `space`, or if the nearest-neighbor
// policy has no candidate words.
std::size_t resolve_lexical_params(const ModelParams& params, std::string_view token,
                                   const EmbeddingSpace& space,
                                   const LexicalResolver& resolver);

// Row ids for both constituents of a record, or empty rows for
// non-lexicalized models.
WordRows resolve_word_rows(const ModelParams& params, const PhraseRecord& record,
                           const EmbeddingSpace& space, const LexicalResolver& resolver);

}  // namespace phrasecomp
