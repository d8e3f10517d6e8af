#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "phrasecomp/embedding_store.hpp"

namespace phrasecomp {

enum class ModelKind {
  kAddition,
  kSAddition,
  kVAddition,
  kMatrix,
  kWMask,
  kFullLex,
  kBiLinear,
  kTransWeightFeat,
  kTransWeightTrans,
  kTransWeightMat,
  kTransWeight,
};

inline constexpr ModelKind kAllModelKinds[] = {
    ModelKind::kAddition,         ModelKind::kSAddition,       ModelKind::kVAddition,
    ModelKind::kMatrix,           ModelKind::kWMask,           ModelKind::kFullLex,
    ModelKind::kBiLinear,         ModelKind::kTransWeightFeat, ModelKind::kTransWeightTrans,
    ModelKind::kTransWeightMat,   ModelKind::kTransWeight,
};

// Lower-case CLI names: addition, saddition, vaddition, matrix, wmask,
// fulllex, bilinear, transweight-feat, transweight-trans, transweight-mat,
// transweight.
std::string_view model_kind_name(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

bool is_transweight_family(ModelKind kind);
bool is_lexicalized(ModelKind kind);
bool has_parameters(ModelKind kind);

enum class Activation { kIdentity, kRelu };

std::string_view activation_name(Activation a);
Activation parse_activation(std::string_view name);

// Default activation: relu on the transformed representations for the
// TransWeight family, identity on the output for every other model.
Activation default_activation(ModelKind kind);

inline constexpr std::size_t kDefaultTransformations = 100;

struct ModelShape {
  std::size_t n = 0;           // word vector dimension
  std::size_t t = 0;           // transformations (TransWeight family)
  std::size_t vocab_size = 0;  // rows of per-word parameters (WMask, FullLex)

  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

// One named, shaped, row-major parameter array.
struct ParamArray {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;

  friend bool operator==(const ParamArray&, const ParamArray&) = default;
};

// Token -> row map for the per-word parameters of lexicalized models.
class Lexicon {
 public:
  Lexicon() = default;
  explicit Lexicon(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::optional<std::size_t> find(std::string_view token) const;

  friend bool operator==(const Lexicon& a, const Lexicon& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t, StringHash, std::equal_to<>> index_;
};

// Parameters of one composition model. Array names and shapes by kind:
//
//   saddition          alpha[1], beta[1]
//   vaddition          a[n], b[n]
//   matrix             W[n,2n], b[n]
//   wmask              W[n,2n], b[n], Wm[V,n], Wh[V,n]
//   fulllex            W[n,2n], b[n], A[V,n,n]
//   bilinear           E[n,n,n], W[n,2n], b[n]
//   transweight-*      T[t,n,2n], B[t,n], then the weighting:
//     -feat            w_feat[n], b_feat[n]
//     -trans           w_trans[t], b_trans[n]
//     -mat             W_mat[t,n], b_mat[n]
//     (full)           W[n,t,n], b[n]
//
// The full weighting tensor is laid out [output c][transformation j][input i]
// so that p_c = sum_j sum_i W[c,j,i] H[j,i] + b_c.
struct ModelParams {
  ModelKind kind = ModelKind::kAddition;
  ModelShape shape;
  Activation activation = Activation::kIdentity;
  std::vector<ParamArray> arrays;
  Lexicon lexicon;  // only meaningful for lexicalized kinds

  ParamArray& array(std::string_view name);
  const ParamArray& array(std::string_view name) const;
  std::size_t parameter_count() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// Gradient container with the same array names and shapes as the model.
// Empty for parameter-free models.
struct ParamGrads {
  std::vector<ParamArray> arrays;

  ParamArray& array(std::string_view name);
  const ParamArray& array(std::string_view name) const;
};

ParamGrads zero_grads_like(const ModelParams& params);

struct InitOptions {
  std::optional<Activation> activation;  // default_activation(kind) if unset
  // Half-width of the uniform noise added to FullLex's identity matrices.
  double identity_perturbation = 0.01;
};

// Dense weights are uniform in [-r, r], r = sqrt(6 / (fan_in + fan_out));
// biases are zero; WMask masks are ones; FullLex matrices are identity plus
// uniform noise; SAddition starts at alpha = beta = 1 and VAddition at
// all-ones weights. Deterministic per seed.
ModelParams init_model(ModelKind kind, const ModelShape& shape, std::uint64_t seed,
                       const InitOptions& options = {});

// Attaches a lexicon to a lexicalized model; its size must equal vocab_size.
void set_lexicon(ModelParams& params, Lexicon lexicon);

// Row of a per-word parameter slot, or the identity sentinel meaning "use the
// identity matrix / all-ones mask" (plain FullLex / WMask behavior for words
// without trained parameters).
inline constexpr std::size_t kIdentityRow = std::numeric_limits<std::size_t>::max();

struct WordRows {
  std::optional<std::size_t> word1;
  std::optional<std::size_t> word2;
};

// p = f(u, v). `dropout_mask`, when non-empty, has t*n entries and multiplies
// the transformed representations H elementwise after the activation; it is
// only accepted by the TransWeight family. Word rows are required for WMask
// and FullLex.
std::vector<double> compose(const ModelParams& params, std::span<const double> u,
                            std::span<const double> v, const WordRows& rows = {},
                            std::span<const double> dropout_mask = {});

struct TrainingExample {
  std::span<const double> u;
  std::span<const double> v;
  std::span<const double> target;
  WordRows rows;
  std::span<const double> dropout_mask;  // optional, per example
};

struct GradientResult {
  double loss = 0.0;  // mean cosine distance over the batch
  ParamGrads grads;
};

// Exact gradient of the mean cosine distance 1 - p.p~/(|p||p~|) over the
// batch. Throws ZeroNormError if a composed vector or a target has zero norm.
GradientResult gradients(const ModelParams& params,
                         std::span<const TrainingExample> batch);

// Mean cosine distance only (no gradient), dropout masks honored.
double batch_loss(const ModelParams& params, std::span<const TrainingExample> batch);

// Exact number of trainable parameters:
//   addition 0, saddition 2, vaddition 2n, matrix 2n^2+n,
//   wmask 2n^2+n+2|V|n, fulllex |V|n^2+2n^2+n, bilinear n^3+2n^2+n,
//   transweight family 2tn^2+tn plus the weighting count below.
std::uint64_t param_count(ModelKind kind, std::uint64_t n, std::uint64_t t = 0,
                          std::uint64_t vocab_size = 0);

// Parameters of the weighting stage alone: feat n+n, trans t+n, mat tn+n,
// full tn^2+n. Zero for kinds outside the TransWeight family.
std::uint64_t weighting_param_count(ModelKind kind, std::uint64_t n, std::uint64_t t);

// Expands any TransWeight weighting variant into the equivalent full tensor
// W[n,t,n] and bias b[n].
struct FullWeighting {
  std::vector<double> w;  // [n, t, n]
  std::vector<double> b;  // [n]
};
FullWeighting expand_weighting(const ModelParams& params);

// Matrix-model equivalent (W'[n,2n], b'[n]) of a TransWeight-family model
// evaluated with the identity activation, regardless of params.activation:
//   W'[c,k] = sum_{j,i} W[c,j,i] T[j,i,k],  b'_c = sum_{j,i} W[c,j,i] B[j,i] + b_c.
struct MatrixForm {
  std::vector<double> w;  // [n, 2n]
  std::vector<double> b;  // [n]
};
MatrixForm collapse_transweight_linear(const ModelParams& params);

// Evaluates W'[u;v] + b'.
std::vector<double> apply_matrix_form(const MatrixForm& form, std::span<const double> u,
                                      std::span<const double> v);

}  // namespace phrasecomp
