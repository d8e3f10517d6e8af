// Forward pass and reverse-mode gradients for every composition model.

#include <algorithm>
#include <cmath>

#include "phrasecomp/error.hpp"
#include "phrasecomp/kernels.hpp"
#include "phrasecomp/model.hpp"

namespace phrasecomp {
namespace {

using kernels::axpy;
using kernels::dot;
using kernels::gemv;
using kernels::gemv_transposed;
using kernels::rank1_update;

// Intermediate values of one forward pass, kept for the backward pass.
struct Trace {
  std::vector<double> x;    // input of the affine map: [u;v] or its masked/transformed form
  std::vector<double> z;    // affine output before the activation (non-TransWeight models)
  std::vector<double> pre;  // T[u;v] + B, [t, n]
  std::vector<double> h;    // activation(pre) * mask, [t, n]
  std::vector<double> p;
  std::size_t row1 = kIdentityRow;
  std::size_t row2 = kIdentityRow;
};

double activate(Activation a, double x) {
  return a == Activation::kRelu ? (x > 0.0 ? x : 0.0) : x;
}

double activation_slope(Activation a, double pre) {
  return a == Activation::kRelu ? (pre > 0.0 ? 1.0 : 0.0) : 1.0;
}

std::span<const double> slice(const std::vector<double>& v, std::size_t offset,
                              std::size_t count) {
  return {v.data() + offset, count};
}

std::span<double> slice(std::vector<double>& v, std::size_t offset, std::size_t count) {
  return {v.data() + offset, count};
}

std::size_t checked_row(const ModelParams& params, const std::optional<std::size_t>& row,
                        const char* which) {
  if (!row) {
    throw InvalidArgument(std::string(model_kind_name(params.kind)) + " requires a " +
                          which + " row id");
  }
  if (*row != kIdentityRow && *row >= params.shape.vocab_size) {
    throw InvalidArgument(std::string(which) + " row id out of range");
  }
  return *row;
}

void forward(const ModelParams& params, std::span<const double> u, std::span<const double> v,
             const WordRows& rows, std::span<const double> mask, Trace& tr) {
  const std::size_t n = params.shape.n;
  if (u.size() != n || v.size() != n) {
    throw InvalidArgument("compose: input dimension " + std::to_string(u.size()) + "/" +
                          std::to_string(v.size()) + " does not match model n=" +
                          std::to_string(n));
  }
  const bool tw = is_transweight_family(params.kind);
  if (!mask.empty() && (!tw || mask.size() != params.shape.t * n)) {
    throw InvalidArgument("compose: dropout mask must have t*n entries and is only "
                          "defined for the TransWeight family");
  }

  tr.p.assign(n, 0.0);
  switch (params.kind) {
    case ModelKind::kAddition:
      for (std::size_t i = 0; i < n; ++i) tr.p[i] = u[i] + v[i];
      return;
    case ModelKind::kSAddition: {
      const double alpha = params.array("alpha").values[0];
      const double beta = params.array("beta").values[0];
      for (std::size_t i = 0; i < n; ++i) tr.p[i] = alpha * u[i] + beta * v[i];
      return;
    }
    case ModelKind::kVAddition: {
      const auto& a = params.array("a").values;
      const auto& b = params.array("b").values;
      for (std::size_t i = 0; i < n; ++i) tr.p[i] = a[i] * u[i] + b[i] * v[i];
      return;
    }
    default:
      break;
  }

  tr.x.assign(2 * n, 0.0);
  if (params.kind == ModelKind::kWMask) {
    tr.row1 = checked_row(params, rows.word1, "word1");
    tr.row2 = checked_row(params, rows.word2, "word2");
    const auto& wm = params.array("Wm").values;
    const auto& wh = params.array("Wh").values;
    for (std::size_t i = 0; i < n; ++i) {
      tr.x[i] = tr.row1 == kIdentityRow ? u[i] : u[i] * wm[tr.row1 * n + i];
      tr.x[n + i] = tr.row2 == kIdentityRow ? v[i] : v[i] * wh[tr.row2 * n + i];
    }
  } else if (params.kind == ModelKind::kFullLex) {
    tr.row1 = checked_row(params, rows.word1, "word1");
    tr.row2 = checked_row(params, rows.word2, "word2");
    const auto& A = params.array("A").values;
    // Crosswise: the second word's matrix transforms u, the first word's v.
    auto left = slice(tr.x, 0, n);
    auto right = slice(tr.x, n, n);
    if (tr.row2 == kIdentityRow) {
      std::copy(u.begin(), u.end(), left.begin());
    } else {
      gemv(slice(A, tr.row2 * n * n, n * n), n, n, u, left);
    }
    if (tr.row1 == kIdentityRow) {
      std::copy(v.begin(), v.end(), right.begin());
    } else {
      gemv(slice(A, tr.row1 * n * n, n * n), n, n, v, right);
    }
  } else {
    std::copy(u.begin(), u.end(), tr.x.begin());
    std::copy(v.begin(), v.end(), tr.x.begin() + static_cast<std::ptrdiff_t>(n));
  }

  if (!tw) {
    tr.z = params.array("b").values;
    gemv(params.array("W").values, n, 2 * n, tr.x, tr.z);
    if (params.kind == ModelKind::kBiLinear) {
      const auto& E = params.array("E").values;
      std::vector<double> ev(n);
      for (std::size_t i = 0; i < n; ++i) {
        std::fill(ev.begin(), ev.end(), 0.0);
        gemv(slice(E, i * n * n, n * n), n, n, v, ev);
        axpy(u[i], ev, tr.z);
      }
    }
    for (std::size_t c = 0; c < n; ++c) tr.p[c] = activate(params.activation, tr.z[c]);
    return;
  }

  const std::size_t t = params.shape.t;
  tr.pre = params.array("B").values;
  gemv(params.array("T").values, t * n, 2 * n, tr.x, tr.pre);
  tr.h.resize(t * n);
  for (std::size_t k = 0; k < t * n; ++k) {
    tr.h[k] = activate(params.activation, tr.pre[k]);
    if (!mask.empty()) tr.h[k] *= mask[k];
  }

  switch (params.kind) {
    case ModelKind::kTransWeightFeat: {
      const auto& w = params.array("w_feat").values;
      const auto& b = params.array("b_feat").values;
      std::vector<double> sum(n, 0.0);
      for (std::size_t j = 0; j < t; ++j) axpy(1.0, slice(tr.h, j * n, n), sum);
      for (std::size_t c = 0; c < n; ++c) tr.p[c] = w[c] * sum[c] + b[c];
      break;
    }
    case ModelKind::kTransWeightTrans: {
      const auto& w = params.array("w_trans").values;
      tr.p = params.array("b_trans").values;
      for (std::size_t j = 0; j < t; ++j) axpy(w[j], slice(tr.h, j * n, n), tr.p);
      break;
    }
    case ModelKind::kTransWeightMat: {
      const auto& w = params.array("W_mat").values;
      tr.p = params.array("b_mat").values;
      for (std::size_t j = 0; j < t; ++j) {
        for (std::size_t c = 0; c < n; ++c) tr.p[c] += w[j * n + c] * tr.h[j * n + c];
      }
      break;
    }
    default:
      tr.p = params.array("b").values;
      gemv(params.array("W").values, n, t * n, tr.h, tr.p);
      break;
  }
}

// Accumulates d(loss)/d(params) given d(loss)/dp for one example.
void backward(const ModelParams& params, std::span<const double> u, std::span<const double> v,
              std::span<const double> mask, const Trace& tr, std::span<const double> dp,
              ParamGrads& grads) {
  const std::size_t n = params.shape.n;
  switch (params.kind) {
    case ModelKind::kAddition:
      return;
    case ModelKind::kSAddition:
      grads.array("alpha").values[0] += dot(dp, u);
      grads.array("beta").values[0] += dot(dp, v);
      return;
    case ModelKind::kVAddition: {
      auto& ga = grads.array("a").values;
      auto& gb = grads.array("b").values;
      for (std::size_t i = 0; i < n; ++i) {
        ga[i] += dp[i] * u[i];
        gb[i] += dp[i] * v[i];
      }
      return;
    }
    default:
      break;
  }

  std::vector<double> dx;  // d loss / d x, needed by the lexicalized models
  if (!is_transweight_family(params.kind)) {
    std::vector<double> dz(n);
    for (std::size_t c = 0; c < n; ++c) dz[c] = dp[c] * activation_slope(params.activation, tr.z[c]);
    axpy(1.0, dz, grads.array("b").values);
    rank1_update(1.0, dz, tr.x, grads.array("W").values);
    if (params.kind == ModelKind::kBiLinear) {
      auto& gE = grads.array("E").values;
      for (std::size_t i = 0; i < n; ++i) rank1_update(u[i], dz, v, slice(gE, i * n * n, n * n));
    }
    if (is_lexicalized(params.kind)) {
      dx.assign(2 * n, 0.0);
      gemv_transposed(params.array("W").values, n, 2 * n, dz, dx);
    }
  } else {
    const std::size_t t = params.shape.t;
    std::vector<double> dh(t * n, 0.0);
    switch (params.kind) {
      case ModelKind::kTransWeightFeat: {
        const auto& w = params.array("w_feat").values;
        auto& gw = grads.array("w_feat").values;
        axpy(1.0, dp, grads.array("b_feat").values);
        std::vector<double> sum(n, 0.0);
        for (std::size_t j = 0; j < t; ++j) axpy(1.0, slice(tr.h, j * n, n), sum);
        for (std::size_t c = 0; c < n; ++c) gw[c] += dp[c] * sum[c];
        for (std::size_t j = 0; j < t; ++j) {
          for (std::size_t c = 0; c < n; ++c) dh[j * n + c] = dp[c] * w[c];
        }
        break;
      }
      case ModelKind::kTransWeightTrans: {
        const auto& w = params.array("w_trans").values;
        auto& gw = grads.array("w_trans").values;
        axpy(1.0, dp, grads.array("b_trans").values);
        for (std::size_t j = 0; j < t; ++j) {
          gw[j] += dot(dp, slice(tr.h, j * n, n));
          axpy(w[j], dp, slice(dh, j * n, n));
        }
        break;
      }
      case ModelKind::kTransWeightMat: {
        const auto& w = params.array("W_mat").values;
        auto& gw = grads.array("W_mat").values;
        axpy(1.0, dp, grads.array("b_mat").values);
        for (std::size_t j = 0; j < t; ++j) {
          for (std::size_t c = 0; c < n; ++c) {
            gw[j * n + c] += dp[c] * tr.h[j * n + c];
            dh[j * n + c] = dp[c] * w[j * n + c];
          }
        }
        break;
      }
      default: {
        axpy(1.0, dp, grads.array("b").values);
        rank1_update(1.0, dp, tr.h, grads.array("W").values);
        gemv_transposed(params.array("W").values, n, t * n, dp, dh);
        break;
      }
    }
    for (std::size_t k = 0; k < t * n; ++k) {
      double d = dh[k] * activation_slope(params.activation, tr.pre[k]);
      if (!mask.empty()) d *= mask[k];
      dh[k] = d;
    }
    axpy(1.0, dh, grads.array("B").values);
    rank1_update(1.0, dh, tr.x, grads.array("T").values);
    return;
  }

  if (params.kind == ModelKind::kWMask) {
    if (tr.row1 != kIdentityRow) {
      auto& g = grads.array("Wm").values;
      for (std::size_t i = 0; i < n; ++i) g[tr.row1 * n + i] += dx[i] * u[i];
    }
    if (tr.row2 != kIdentityRow) {
      auto& g = grads.array("Wh").values;
      for (std::size_t i = 0; i < n; ++i) g[tr.row2 * n + i] += dx[n + i] * v[i];
    }
  } else if (params.kind == ModelKind::kFullLex) {
    auto& gA = grads.array("A").values;
    if (tr.row2 != kIdentityRow) {
      rank1_update(1.0, slice(dx, 0, n), u, slice(gA, tr.row2 * n * n, n * n));
    }
    if (tr.row1 != kIdentityRow) {
      rank1_update(1.0, slice(dx, n, n), v, slice(gA, tr.row1 * n * n, n * n));
    }
  }
}

struct CosineTerms {
  double loss;
  std::vector<double> dp;  // d loss / dp
};

CosineTerms cosine_distance_terms(std::span<const double> p, std::span<const double> target) {
  const double pp = dot(p, p);
  const double qq = dot(target, target);
  if (pp == 0.0) throw ZeroNormError("composed vector has zero norm; cosine gradient undefined");
  if (qq == 0.0) throw ZeroNormError("target vector has zero norm");
  const double np = std::sqrt(pp);
  const double nq = std::sqrt(qq);
  const double cos = dot(p, target) / (np * nq);
  CosineTerms out{1.0 - cos, std::vector<double>(p.size())};
  for (std::size_t i = 0; i < p.size(); ++i) {
    out.dp[i] = -(target[i] / (np * nq) - cos * p[i] / pp);
  }
  return out;
}

}  // namespace

std::vector<double> compose(const ModelParams& params, std::span<const double> u,
                            std::span<const double> v, const WordRows& rows,
                            std::span<const double> dropout_mask) {
  Trace tr;
  forward(params, u, v, rows, dropout_mask, tr);
  return std::move(tr.p);
}

GradientResult gradients(const ModelParams& params, std::span<const TrainingExample> batch) {
  if (batch.empty()) throw InvalidArgument("gradients: empty batch");
  GradientResult result{0.0, zero_grads_like(params)};
  const double scale = 1.0 / static_cast<double>(batch.size());
  Trace tr;
  for (const auto& ex : batch) {
    if (ex.target.size() != params.shape.n) {
      throw InvalidArgument("gradients: target dimension mismatch");
    }
    forward(params, ex.u, ex.v, ex.rows, ex.dropout_mask, tr);
    auto terms = cosine_distance_terms(tr.p, ex.target);
    result.loss += terms.loss;
    for (double& d : terms.dp) d *= scale;
    backward(params, ex.u, ex.v, ex.dropout_mask, tr, terms.dp, result.grads);
  }
  result.loss *= scale;
  return result;
}

double batch_loss(const ModelParams& params, std::span<const TrainingExample> batch) {
  if (batch.empty()) throw InvalidArgument("batch_loss: empty batch");
  double total = 0.0;
  Trace tr;
  for (const auto& ex : batch) {
    forward(params, ex.u, ex.v, ex.rows, ex.dropout_mask, tr);
    total += cosine_distance_terms(tr.p, ex.target).loss;
  }
  return total / static_cast<double>(batch.size());
}

}  // namespace phrasecomp
