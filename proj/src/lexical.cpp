#include "phrasecomp/lexical.hpp"

#include "phrasecomp/error.hpp"
#include "phrasecomp/kernels.hpp"

namespace phrasecomp {

std::string_view fallback_policy_name(FallbackPolicy policy) {
  return policy == FallbackPolicy::kIdentity ? "identity" : "nearest_neighbor";
}

FallbackPolicy parse_fallback_policy(std::string_view name) {
  if (name == "nearest_neighbor" || name == "nearest-neighbor" || name == "nn") {
    return FallbackPolicy::kNearestNeighbor;
  }
  if (name == "identity") return FallbackPolicy::kIdentity;
  throw InvalidArgument("unknown resolver policy '" + std::string(name) + "'");
}

LexicalResolver::LexicalResolver(TokenSet train_vocab, FallbackPolicy policy)
    : train_vocab_(std::move(train_vocab)), policy_(policy) {
  if (policy_ == FallbackPolicy::kNearestNeighbor && train_vocab_.empty()) {
    throw InvalidArgument("nearest-neighbor fallback needs a non-empty training vocabulary");
  }
}

LexicalResolver LexicalResolver::from_training(const PhraseDataset& train,
                                               FallbackPolicy policy) {
  TokenSet vocab;
  for (const auto& r : train.records()) {
    vocab.insert(r.word1);
    vocab.insert(r.word2);
  }
  return LexicalResolver(std::move(vocab), policy);
}

Lexicon build_lexicon(const PhraseDataset& train) {
  std::vector<std::string> tokens;
  TokenSet seen;
  for (const auto& r : train.records()) {
    if (seen.insert(r.word1).second) tokens.push_back(r.word1);
    if (seen.insert(r.word2).second) tokens.push_back(r.word2);
  }
  return Lexicon(std::move(tokens));
}

std::size_t resolve_lexical_params(const ModelParams& params, std::string_view token,
                                   const EmbeddingSpace& space,
                                   const LexicalResolver& resolver) {
  const auto query_row = space.find(token);
  if (!query_row) {
    throw InvalidArgument("token '" + std::string(token) + "' is not in the embedding space");
  }
  const auto& lexicon = params.lexicon;
  if (resolver.train_vocab().contains(token)) {
    if (const auto own = lexicon.find(token)) return *own;
  }
  if (resolver.policy() == FallbackPolicy::kIdentity) return kIdentityRow;

  // Candidates: training words that own a parameter row.
  const auto query = space.unit_vector(*query_row);
  std::size_t best_space_row = kIdentityRow;
  std::size_t best_lex_row = kIdentityRow;
  double best_sim = -2.0;
  for (const auto& word : resolver.train_vocab()) {
    const auto lex_row = lexicon.find(word);
    const auto space_row = space.find(word);
    if (!lex_row || !space_row) continue;
    const double sim = kernels::dot(query, space.unit_vector(*space_row));
    if (sim > best_sim || (sim == best_sim && *space_row < best_space_row)) {
      best_sim = sim;
      best_space_row = *space_row;
      best_lex_row = *lex_row;
    }
  }
  if (best_lex_row == kIdentityRow) {
    throw InvalidArgument("nearest-neighbor fallback found no training word with parameters");
  }
  return best_lex_row;
}

WordRows resolve_word_rows(const ModelParams& params, const PhraseRecord& record,
                           const EmbeddingSpace& space, const LexicalResolver& resolver) {
  if (!is_lexicalized(params.kind)) return {};
  return {resolve_lexical_params(params, record.word1, space, resolver),
          resolve_lexical_params(params, record.word2, space, resolver)};
}

}  // namespace phrasecomp
