#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "phrasecomp/embedding_store.hpp"
#include "phrasecomp/error.hpp"
#include "test_util.hpp"

using namespace phrasecomp;

namespace {

EmbeddingSpace small_space() {
  return testutil::make_space({{"a", {1, 0, 0}},
                               {"b", {0, 2, 0}},
                               {"c", {1, 1, 0}},
                               {"a_b", {0.5, -0.25, 3}}});
}

}  // namespace

TEST(EmbeddingStore, LooksUpTokensAndRows) {
  const auto s = small_space();
  EXPECT_EQ(s.size(), 4u);
  EXPECT_EQ(s.dim(), 3u);
  EXPECT_EQ(s.row("c"), 2u);
  EXPECT_EQ(s.token(3), "a_b");
  EXPECT_FALSE(s.find("zzz").has_value());
  EXPECT_THROW(s.row("zzz"), InvalidArgument);
  EXPECT_EQ(s.vector("b")[1], 2.0);
  EXPECT_DOUBLE_EQ(s.unit_vector(1)[1], 1.0);
}

TEST(EmbeddingStore, RejectsInvalidVocabularies) {
  EXPECT_THROW(testutil::make_space({{"a", {1, 0}}, {"a", {0, 1}}}), InvalidArgument);
  EXPECT_THROW(testutil::make_space({{"a", {0, 0}}}), InvalidArgument);
  EXPECT_THROW(testutil::make_space({{"a b", {1, 0}}}), InvalidArgument);
  EXPECT_THROW(
      testutil::make_space({{"a", {std::numeric_limits<double>::quiet_NaN(), 1.0}}}),
      InvalidArgument);
}

TEST(EmbeddingStore, TextRoundTripIsBitExactAtFullPrecision) {
  Rng rng(5);
  std::vector<std::pair<std::string, std::vector<double>>> rows;
  for (int i = 0; i < 20; ++i) rows.push_back({"t" + std::to_string(i), testutil::random_vector(rng, 7)});
  const auto s = testutil::make_space(rows);
  std::stringstream buf;
  save_embeddings(s, buf, EmbeddingFormat::kText, 17);
  const auto back = load_embeddings(buf, EmbeddingFormat::kText);
  ASSERT_EQ(back.tokens(), s.tokens());
  for (std::size_t i = 0; i < s.values().size(); ++i) EXPECT_EQ(back.values()[i], s.values()[i]);
}

TEST(EmbeddingStore, BinaryRoundTripKeepsFloat32Precision) {
  Rng rng(6);
  std::vector<std::pair<std::string, std::vector<double>>> rows;
  for (int i = 0; i < 10; ++i) rows.push_back({"w" + std::to_string(i), testutil::random_vector(rng, 5)});
  const auto s = testutil::make_space(rows);
  std::stringstream buf;
  save_embeddings(s, buf, EmbeddingFormat::kBinary);
  const auto back = load_embeddings(buf, EmbeddingFormat::kBinary);
  ASSERT_EQ(back.tokens(), s.tokens());
  for (std::size_t i = 0; i < s.values().size(); ++i) {
    EXPECT_EQ(back.values()[i], static_cast<double>(static_cast<float>(s.values()[i])));
  }
  // A second trip through float32 changes nothing.
  std::stringstream again;
  save_embeddings(back, again, EmbeddingFormat::kBinary);
  std::stringstream first;
  save_embeddings(s, first, EmbeddingFormat::kBinary);
  EXPECT_EQ(again.str(), first.str());
}

TEST(EmbeddingStore, MalformedFilesRaiseParseErrors) {
  const char* cases[] = {
      "",                            // empty
      "2 3\na 1 2 3\nb 1 2\n",       // dimension mismatch
      "3 2\na 1 2\nb 1 3\n",         // fewer records than declared
      "2 2\na 1 2\na 3 4\n",         // duplicate token
      "1 2\na 1 x\n",                // not a number
      "1 2\na 0 0\n",                // zero vector
  };
  for (const char* text : cases) {
    std::istringstream in(text);
    EXPECT_THROW(load_embeddings(in, EmbeddingFormat::kText), ParseError) << text;
  }
}

TEST(EmbeddingStore, CosineSimilarityExamples) {
  const std::vector<double> x{1, 0}, y{0, 1}, z{-2, 0}, zero{0, 0};
  EXPECT_DOUBLE_EQ(cosine_similarity(x, x), 1.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(x, y), 0.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(x, z), -1.0);
  EXPECT_THROW(cosine_similarity(x, zero), ZeroNormError);
}

TEST(EmbeddingStore, NearestNeighborsSortByDescendingSimilarity) {
  const auto s = small_space();
  const std::vector<double> q{1, 0.1, 0};
  const auto nn = nearest_neighbors(s, q, 2);
  ASSERT_EQ(nn.size(), 2u);
  EXPECT_EQ(nn[0].token, "a");
  EXPECT_EQ(nn[1].token, "c");
  const auto excl = nearest_neighbors(s, q, 10, TokenSet{"a"});
  EXPECT_EQ(excl.size(), 3u);
  EXPECT_EQ(excl[0].token, "c");
  EXPECT_THROW(nearest_neighbors(s, q, 0), InvalidArgument);
}

TEST(EmbeddingStore, NeighborTiesBreakByRow) {
  const auto s = testutil::make_space({{"x", {1, 1}}, {"y", {2, 2}}, {"z", {0, 1}}});
  const auto nn = nearest_neighbors(s, std::vector<double>{1, 1}, 2);
  EXPECT_EQ(nn[0].token, "x");
  EXPECT_EQ(nn[1].token, "y");
}

TEST(EmbeddingStore, SimilaritiesToAllFollowRowOrder) {
  const auto s = small_space();
  const auto sims = similarities_to_all(s, std::vector<double>{0, 1, 0});
  ASSERT_EQ(sims.size(), 4u);
  EXPECT_NEAR(sims[0], 0.0, 1e-15);
  EXPECT_NEAR(sims[1], 1.0, 1e-15);
  EXPECT_NEAR(sims[2], std::sqrt(0.5), 1e-15);
}
