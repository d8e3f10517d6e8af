#include <algorithm>
#include <cctype>
#include <cmath>

#include "phrasecomp/error.hpp"
#include "phrasecomp/kernels.hpp"
#include "phrasecomp/model.hpp"
#include "phrasecomp/rng.hpp"

namespace phrasecomp {
namespace {

struct KindInfo {
  ModelKind kind;
  std::string_view name;
};

constexpr KindInfo kKindNames[] = {
    {ModelKind::kAddition, "addition"},
    {ModelKind::kSAddition, "saddition"},
    {ModelKind::kVAddition, "vaddition"},
    {ModelKind::kMatrix, "matrix"},
    {ModelKind::kWMask, "wmask"},
    {ModelKind::kFullLex, "fulllex"},
    {ModelKind::kBiLinear, "bilinear"},
    {ModelKind::kTransWeightFeat, "transweight-feat"},
    {ModelKind::kTransWeightTrans, "transweight-trans"},
    {ModelKind::kTransWeightMat, "transweight-mat"},
    {ModelKind::kTransWeight, "transweight"},
};

ParamArray make_array(std::string name, std::vector<std::size_t> shape, double fill = 0.0) {
  std::size_t count = 1;
  for (auto d : shape) count *= d;
  return ParamArray{std::move(name), std::move(shape), std::vector<double>(count, fill)};
}

void fill_uniform(ParamArray& a, Rng& rng, double fan_in, double fan_out) {
  const double r = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& x : a.values) x = rng.uniform(-r, r);
}

template <typename Arrays>
auto& find_array(Arrays& arrays, std::string_view name) {
  for (auto& a : arrays) {
    if (a.name == name) return a;
  }
  throw InvalidArgument("no parameter array named '" + std::string(name) + "'");
}

}  // namespace

std::string_view model_kind_name(ModelKind kind) {
  for (const auto& info : kKindNames) {
    if (info.kind == kind) return info.name;
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  std::replace(lower.begin(), lower.end(), '_', '-');
  for (const auto& info : kKindNames) {
    if (info.name == lower) return info.kind;
  }
  throw InvalidArgument("unknown model kind '" + std::string(name) + "'");
}

bool is_transweight_family(ModelKind kind) {
  return kind == ModelKind::kTransWeightFeat || kind == ModelKind::kTransWeightTrans ||
         kind == ModelKind::kTransWeightMat || kind == ModelKind::kTransWeight;
}

bool is_lexicalized(ModelKind kind) {
  return kind == ModelKind::kWMask || kind == ModelKind::kFullLex;
}

bool has_parameters(ModelKind kind) { return kind != ModelKind::kAddition; }

std::string_view activation_name(Activation a) {
  return a == Activation::kRelu ? "relu" : "identity";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "identity" || name == "linear") return Activation::kIdentity;
  throw InvalidArgument("unknown activation '" + std::string(name) + "'");
}

Activation default_activation(ModelKind kind) {
  return is_transweight_family(kind) ? Activation::kRelu : Activation::kIdentity;
}

Lexicon::Lexicon(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], i).second) {
      throw InvalidArgument("lexicon: duplicate token '" + tokens_[i] + "'");
    }
  }
}

std::optional<std::size_t> Lexicon::find(std::string_view token) const {
  const auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

ParamArray& ModelParams::array(std::string_view name) { return find_array(arrays, name); }
const ParamArray& ModelParams::array(std::string_view name) const {
  return find_array(arrays, name);
}

std::size_t ModelParams::parameter_count() const {
  std::size_t total = 0;
  for (const auto& a : arrays) total += a.values.size();
  return total;
}

ParamArray& ParamGrads::array(std::string_view name) { return find_array(arrays, name); }
const ParamArray& ParamGrads::array(std::string_view name) const {
  return find_array(arrays, name);
}

ParamGrads zero_grads_like(const ModelParams& params) {
  ParamGrads g;
  g.arrays.reserve(params.arrays.size());
  for (const auto& a : params.arrays) g.arrays.push_back(make_array(a.name, a.shape));
  return g;
}

ModelParams init_model(ModelKind kind, const ModelShape& shape, std::uint64_t seed,
                       const InitOptions& options) {
  const std::size_t n = shape.n;
  const std::size_t t = shape.t;
  const std::size_t vocab = shape.vocab_size;
  if (n == 0) throw InvalidArgument("init_model: n must be at least 1");
  if (is_transweight_family(kind) && (t == 0 || t > 1000)) {
    throw InvalidArgument("init_model: " + std::string(model_kind_name(kind)) +
                          " needs 1 <= t <= 1000");
  }
  if (is_lexicalized(kind) && vocab == 0) {
    throw InvalidArgument("init_model: " + std::string(model_kind_name(kind)) +
                          " needs vocab_size >= 1");
  }

  ModelParams p;
  p.kind = kind;
  p.shape = {n, is_transweight_family(kind) ? t : 0, is_lexicalized(kind) ? vocab : 0};
  p.activation = options.activation.value_or(default_activation(kind));
  Rng rng(seed);
  const double dn = static_cast<double>(n);
  const double dt = static_cast<double>(t);

  // W is drawn first wherever it exists so Matrix, WMask and FullLex share it
  // for equal seeds.
  auto matrix_part = [&] {
    p.arrays.push_back(make_array("W", {n, 2 * n}));
    fill_uniform(p.arrays.back(), rng, 2 * dn, dn);
    p.arrays.push_back(make_array("b", {n}));
  };

  switch (kind) {
    case ModelKind::kAddition:
      break;
    case ModelKind::kSAddition:
      p.arrays.push_back(make_array("alpha", {1}, 1.0));
      p.arrays.push_back(make_array("beta", {1}, 1.0));
      break;
    case ModelKind::kVAddition:
      p.arrays.push_back(make_array("a", {n}, 1.0));
      p.arrays.push_back(make_array("b", {n}, 1.0));
      break;
    case ModelKind::kMatrix:
      matrix_part();
      break;
    case ModelKind::kWMask:
      matrix_part();
      p.arrays.push_back(make_array("Wm", {vocab, n}, 1.0));
      p.arrays.push_back(make_array("Wh", {vocab, n}, 1.0));
      break;
    case ModelKind::kFullLex: {
      matrix_part();
      auto a = make_array("A", {vocab, n, n});
      const double eps = options.identity_perturbation;
      for (std::size_t w = 0; w < vocab; ++w) {
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < n; ++j) {
            const double noise = eps > 0 ? rng.uniform(-eps, eps) : 0.0;
            a.values[(w * n + i) * n + j] = (i == j ? 1.0 : 0.0) + noise;
          }
        }
      }
      p.arrays.push_back(std::move(a));
      break;
    }
    case ModelKind::kBiLinear: {
      matrix_part();
      auto e = make_array("E", {n, n, n});
      fill_uniform(e, rng, dn * dn, dn);
      p.arrays.insert(p.arrays.begin(), std::move(e));
      break;
    }
    case ModelKind::kTransWeightFeat:
    case ModelKind::kTransWeightTrans:
    case ModelKind::kTransWeightMat:
    case ModelKind::kTransWeight: {
      p.arrays.push_back(make_array("T", {t, n, 2 * n}));
      fill_uniform(p.arrays.back(), rng, 2 * dn, dn);
      p.arrays.push_back(make_array("B", {t, n}));
      if (kind == ModelKind::kTransWeightFeat) {
        p.arrays.push_back(make_array("w_feat", {n}));
        fill_uniform(p.arrays.back(), rng, dt, 1);
        p.arrays.push_back(make_array("b_feat", {n}));
      } else if (kind == ModelKind::kTransWeightTrans) {
        p.arrays.push_back(make_array("w_trans", {t}));
        fill_uniform(p.arrays.back(), rng, dt, 1);
        p.arrays.push_back(make_array("b_trans", {n}));
      } else if (kind == ModelKind::kTransWeightMat) {
        p.arrays.push_back(make_array("W_mat", {t, n}));
        fill_uniform(p.arrays.back(), rng, dt, 1);
        p.arrays.push_back(make_array("b_mat", {n}));
      } else {
        p.arrays.push_back(make_array("W", {n, t, n}));
        fill_uniform(p.arrays.back(), rng, dt * dn, dn);
        p.arrays.push_back(make_array("b", {n}));
      }
      break;
    }
  }
  return p;
}

void set_lexicon(ModelParams& params, Lexicon lexicon) {
  if (!is_lexicalized(params.kind)) {
    throw InvalidArgument("set_lexicon: model kind has no per-word parameters");
  }
  if (lexicon.size() != params.shape.vocab_size) {
    throw InvalidArgument("set_lexicon: lexicon size " + std::to_string(lexicon.size()) +
                          " does not match vocab_size " +
                          std::to_string(params.shape.vocab_size));
  }
  params.lexicon = std::move(lexicon);
}

std::uint64_t weighting_param_count(ModelKind kind, std::uint64_t n, std::uint64_t t) {
  switch (kind) {
    case ModelKind::kTransWeightFeat:
      return n + n;
    case ModelKind::kTransWeightTrans:
      return t + n;
    case ModelKind::kTransWeightMat:
      return t * n + n;
    case ModelKind::kTransWeight:
      return t * n * n + n;
    default:
      return 0;
  }
}

std::uint64_t param_count(ModelKind kind, std::uint64_t n, std::uint64_t t,
                          std::uint64_t vocab_size) {
  const std::uint64_t matrix = n * 2 * n + n;
  switch (kind) {
    case ModelKind::kAddition:
      return 0;
    case ModelKind::kSAddition:
      return 2;
    case ModelKind::kVAddition:
      return 2 * n;
    case ModelKind::kMatrix:
      return matrix;
    case ModelKind::kWMask:
      return matrix + 2 * vocab_size * n;
    case ModelKind::kFullLex:
      return vocab_size * n * n + matrix;
    case ModelKind::kBiLinear:
      return n * n * n + matrix;
    case ModelKind::kTransWeightFeat:
    case ModelKind::kTransWeightTrans:
    case ModelKind::kTransWeightMat:
    case ModelKind::kTransWeight:
      return t * n * 2 * n + t * n + weighting_param_count(kind, n, t);
  }
  return 0;
}

FullWeighting expand_weighting(const ModelParams& params) {
  if (!is_transweight_family(params.kind)) {
    throw InvalidArgument("expand_weighting: not a TransWeight-family model");
  }
  const std::size_t n = params.shape.n;
  const std::size_t t = params.shape.t;
  FullWeighting out{std::vector<double>(n * t * n, 0.0), std::vector<double>(n, 0.0)};
  auto at = [&](std::size_t c, std::size_t j, std::size_t i) -> double& {
    return out.w[(c * t + j) * n + i];
  };
  switch (params.kind) {
    case ModelKind::kTransWeightFeat: {
      const auto& w = params.array("w_feat").values;
      for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t j = 0; j < t; ++j) at(c, j, c) = w[c];
      }
      out.b = params.array("b_feat").values;
      break;
    }
    case ModelKind::kTransWeightTrans: {
      const auto& w = params.array("w_trans").values;
      for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t j = 0; j < t; ++j) at(c, j, c) = w[j];
      }
      out.b = params.array("b_trans").values;
      break;
    }
    case ModelKind::kTransWeightMat: {
      const auto& w = params.array("W_mat").values;
      for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t j = 0; j < t; ++j) at(c, j, c) = w[j * n + c];
      }
      out.b = params.array("b_mat").values;
      break;
    }
    default:
      out.w = params.array("W").values;
      out.b = params.array("b").values;
      break;
  }
  return out;
}

MatrixForm collapse_transweight_linear(const ModelParams& params) {
  const std::size_t n = params.shape.n;
  const std::size_t t = params.shape.t;
  const auto weighting = expand_weighting(params);
  const auto& T = params.array("T").values;
  const auto& B = params.array("B").values;

  MatrixForm form{std::vector<double>(n * 2 * n, 0.0), weighting.b};
  // Row c of W' is sum over (j, i) of W[c,j,i] * T[j,i,:]; the bias collects
  // the same weights applied to B.
  const std::span<const double> t_rows(T);
  for (std::size_t c = 0; c < n; ++c) {
    std::span<double> out_row(form.w.data() + c * 2 * n, 2 * n);
    const std::span<const double> w_c(weighting.w.data() + c * t * n, t * n);
    kernels::gemv_transposed(t_rows, t * n, 2 * n, w_c, out_row);
    form.b[c] += kernels::dot(w_c, B);
  }
  return form;
}

std::vector<double> apply_matrix_form(const MatrixForm& form, std::span<const double> u,
                                      std::span<const double> v) {
  const std::size_t n = form.b.size();
  if (u.size() != n || v.size() != n) {
    throw InvalidArgument("apply_matrix_form: dimension mismatch");
  }
  std::vector<double> x(u.begin(), u.end());
  x.insert(x.end(), v.begin(), v.end());
  std::vector<double> p = form.b;
  kernels::gemv(form.w, n, 2 * n, x, p);
  return p;
}

}  // namespace phrasecomp
