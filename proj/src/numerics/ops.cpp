#include "rsub/numerics/ops.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "rsub/common/error.hpp"
#include "rsub/numerics/kernels.hpp"
#include "rsub/numerics/linalg.hpp"

namespace rsub::ad {
namespace {

void accumulate(Tensor& dst, const Tensor& src) {
  float* d = dst.data();
  const float* s = src.data();
  for (std::size_t i = 0; i < dst.size(); ++i) d[i] += s[i];
}

Tape& same_tape(Var a, Var b) {
  require(a.tape != nullptr && a.tape == b.tape, ErrorKind::kContract,
          "operands live on different tapes");
  return *a.tape;
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  Tensor out = kernels::matmul(a.value(), b.value());
  const std::size_t ia = a.id, ib = b.id;
  return tape.record(OpKind::kMatmul, std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ia)) accumulate(t.grad(ia), kernels::matmul_bt(g, t.value(ib)));
    if (t.requires_grad(ib)) accumulate(t.grad(ib), kernels::matmul_at(t.value(ia), g));
  });
}

Var add(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  Tensor out = kernels::add(a.value(), b.value());
  const std::size_t ia = a.id, ib = b.id;
  return tape.record(OpKind::kAdd, std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ia)) accumulate(t.grad(ia), g);
    if (t.requires_grad(ib)) {
      Tensor& gb = t.grad(ib);
      if (gb.size() == g.size()) {
        accumulate(gb, g);
      } else {
        const std::size_t c = g.cols();
        for (std::size_t r = 0; r < g.rows(); ++r) {
          for (std::size_t j = 0; j < c; ++j) gb[j] += g[r * c + j];
        }
      }
    }
  });
}

Var sub(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  Tensor out = kernels::sub(a.value(), b.value());
  const std::size_t ia = a.id, ib = b.id;
  return tape.record(OpKind::kSub, std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ia)) accumulate(t.grad(ia), g);
    if (t.requires_grad(ib)) accumulate(t.grad(ib), kernels::scale(g, -1.0f));
  });
}

Var scale(Var a, float factor) {
  Tensor out = kernels::scale(a.value(), factor);
  const std::size_t ia = a.id;
  return a.tape->record(OpKind::kScale, std::move(out), {ia},
                        [ia, factor](Tape& t, std::size_t self) {
                          accumulate(t.grad(ia), kernels::scale(t.grad(self), factor));
                        });
}

Var hadamard(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  Tensor out = kernels::hadamard(a.value(), b.value());
  const std::size_t ia = a.id, ib = b.id;
  return tape.record(OpKind::kHadamard, std::move(out), {ia, ib},
                     [ia, ib](Tape& t, std::size_t self) {
                       const Tensor& g = t.grad(self);
                       if (t.requires_grad(ia)) accumulate(t.grad(ia), kernels::hadamard(g, t.value(ib)));
                       if (t.requires_grad(ib)) accumulate(t.grad(ib), kernels::hadamard(g, t.value(ia)));
                     });
}

Var row_softmax(Var x) {
  Tensor out = kernels::row_softmax(x.value());
  const std::size_t ix = x.id;
  return x.tape->record(OpKind::kRowSoftmax, std::move(out), {ix}, [ix](Tape& t, std::size_t self) {
    const Tensor& y = t.value(self);
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(ix);
    const std::size_t c = y.cols();
    for (std::size_t r = 0; r < y.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += static_cast<double>(g[r * c + j]) * y[r * c + j];
      for (std::size_t j = 0; j < c; ++j) {
        gx[r * c + j] += y[r * c + j] * (g[r * c + j] - static_cast<float>(dot));
      }
    }
  });
}

Var gelu(Var x) {
  Tensor out = kernels::gelu(x.value());
  const std::size_t ix = x.id;
  return x.tape->record(OpKind::kGelu, std::move(out), {ix}, [ix](Tape& t, std::size_t self) {
    const Tensor& in = t.value(ix);
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(ix);
    for (std::size_t i = 0; i < in.size(); ++i) gx[i] += g[i] * kernels::gelu_derivative(in[i]);
  });
}

Var sigmoid(Var x) {
  kernels::check_finite(x.value(), "sigmoid");
  Tensor out = x.value();
  for (float& v : out.values()) v = 1.0f / (1.0f + std::exp(-v));
  const std::size_t ix = x.id;
  return x.tape->record(OpKind::kSigmoid, std::move(out), {ix}, [ix](Tape& t, std::size_t self) {
    const Tensor& y = t.value(self);
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(ix);
    for (std::size_t i = 0; i < y.size(); ++i) gx[i] += g[i] * y[i] * (1.0f - y[i]);
  });
}

Var rms_normalize(Var x, Var gain) {
  Tape& tape = same_tape(x, gain);
  Tensor out = kernels::rms_normalize(x.value(), gain.value());
  const std::size_t ix = x.id, ig = gain.id;
  return tape.record(OpKind::kRmsNormalize, std::move(out), {ix, ig},
                     [ix, ig](Tape& t, std::size_t self) {
    const Tensor& in = t.value(ix);
    const Tensor& w = t.value(ig);
    const Tensor& g = t.grad(self);
    const std::size_t c = in.cols();
    const bool need_x = t.requires_grad(ix);
    const bool need_w = t.requires_grad(ig);
    Tensor* gx = need_x ? &t.grad(ix) : nullptr;
    Tensor* gw = need_w ? &t.grad(ig) : nullptr;
    for (std::size_t r = 0; r < in.rows(); ++r) {
      const float* xr = in.data() + r * c;
      const float* gr = g.data() + r * c;
      double ss = 0.0;
      for (std::size_t j = 0; j < c; ++j) ss += static_cast<double>(xr[j]) * xr[j];
      const double inv = 1.0 / std::sqrt(ss / static_cast<double>(c) + kernels::kRmsEpsilon);
      if (need_w) {
        for (std::size_t j = 0; j < c; ++j) (*gw)[j] += static_cast<float>(gr[j] * xr[j] * inv);
      }
      if (need_x) {
        double ux = 0.0;
        for (std::size_t j = 0; j < c; ++j) ux += static_cast<double>(gr[j]) * w[j] * xr[j];
        const double coef = inv * inv * inv * ux / static_cast<double>(c);
        float* dx = gx->data() + r * c;
        for (std::size_t j = 0; j < c; ++j) {
          dx[j] += static_cast<float>(inv * gr[j] * w[j] - coef * xr[j]);
        }
      }
    }
  });
}

Var embedding_gather(Var table, std::span<const int> ids) {
  Tensor out = kernels::embedding_gather(table.value(), ids);
  const std::size_t it = table.id;
  std::vector<int> idx(ids.begin(), ids.end());
  return table.tape->record(OpKind::kEmbeddingGather, std::move(out), {it},
                            [it, idx = std::move(idx)](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gt = t.grad(it);
    const std::size_t c = g.cols();
    for (std::size_t i = 0; i < idx.size(); ++i) {
      float* dst = gt.data() + static_cast<std::size_t>(idx[i]) * c;
      const float* src = g.data() + i * c;
      for (std::size_t j = 0; j < c; ++j) dst[j] += src[j];
    }
  });
}

Var cross_entropy(Var logits, std::span<const int> targets) {
  const double loss = kernels::cross_entropy(logits.value(), targets);
  const std::size_t il = logits.id;
  std::vector<int> tgt(targets.begin(), targets.end());
  return logits.tape->record(
      OpKind::kCrossEntropy, Tensor::scalar(static_cast<float>(loss)), {il},
      [il, tgt = std::move(tgt)](Tape& t, std::size_t self) {
        const float upstream = t.grad(self)[0];
        Tensor p = kernels::row_softmax(t.value(il));
        const float inv_n = 1.0f / static_cast<float>(p.rows());
        for (std::size_t r = 0; r < p.rows(); ++r) p.at(r, static_cast<std::size_t>(tgt[r])) -= 1.0f;
        accumulate(t.grad(il), kernels::scale(p, upstream * inv_n));
      });
}

Var sum(Var x) {
  double total = 0.0;
  for (float v : x.value().values()) total += v;
  const std::size_t ix = x.id;
  return x.tape->record(OpKind::kSum, Tensor::scalar(static_cast<float>(total)), {ix},
                        [ix](Tape& t, std::size_t self) {
                          const float g = t.grad(self)[0];
                          for (float& v : t.grad(ix).values()) v += g;
                        });
}

Var transpose(Var x) {
  const std::size_t ix = x.id;
  return x.tape->record(OpKind::kTranspose, kernels::transpose(x.value()), {ix},
                        [ix](Tape& t, std::size_t self) {
                          accumulate(t.grad(ix), kernels::transpose(t.grad(self)));
                        });
}

Var causal_attention(Var qkv, std::size_t n_seq, std::size_t seq_len, std::size_t heads) {
  const Tensor& in = qkv.value();
  require(in.cols() % 3 == 0 && in.rows() == n_seq * seq_len, ErrorKind::kContract,
          "causal_attention: qkv shape " + in.shape_string() + " does not match " +
              std::to_string(n_seq) + " sequences of length " + std::to_string(seq_len));
  const std::size_t width = in.cols() / 3;
  require(heads > 0 && width % heads == 0, ErrorKind::kContract,
          "causal_attention: width not divisible by heads");
  kernels::check_finite(in, "causal_attention");
  const std::size_t dh = width / heads;
  const float inv_scale = 1.0f / std::sqrt(static_cast<float>(dh));
  const std::size_t stride = 3 * width;
  const std::size_t T = seq_len;

  // probabilities[((n * heads + h) * T + t) * T + u], zero for u > t
  auto probs = std::make_shared<std::vector<float>>(n_seq * heads * T * T, 0.0f);
  Tensor out = Tensor::zeros(n_seq * T, width);
  std::vector<float> scores(T);
  for (std::size_t n = 0; n < n_seq; ++n) {
    const float* base = in.data() + n * T * stride;
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t qo = h * dh, ko = width + h * dh, vo = 2 * width + h * dh;
      for (std::size_t t = 0; t < T; ++t) {
        const float* q = base + t * stride + qo;
        float mx = -std::numeric_limits<float>::infinity();
        for (std::size_t u = 0; u <= t; ++u) {
          const float* k = base + u * stride + ko;
          float s = 0.0f;
          for (std::size_t j = 0; j < dh; ++j) s += q[j] * k[j];
          scores[u] = s * inv_scale;
          mx = std::max(mx, scores[u]);
        }
        double total = 0.0;
        for (std::size_t u = 0; u <= t; ++u) {
          scores[u] = std::exp(scores[u] - mx);
          total += scores[u];
        }
        float* p = probs->data() + ((n * heads + h) * T + t) * T;
        float* o = out.data() + (n * T + t) * width + h * dh;
        for (std::size_t u = 0; u <= t; ++u) {
          p[u] = static_cast<float>(scores[u] / total);
          const float* v = base + u * stride + vo;
          for (std::size_t j = 0; j < dh; ++j) o[j] += p[u] * v[j];
        }
      }
    }
  }

  const std::size_t iq = qkv.id;
  return qkv.tape->record(
      OpKind::kCausalAttention, std::move(out), {iq},
      [iq, probs, n_seq, heads, T, width, dh, inv_scale, stride](Tape& t, std::size_t self) {
        const Tensor& x = t.value(iq);
        const Tensor& g = t.grad(self);
        Tensor& gx = t.grad(iq);
        std::vector<float> dp(T);
        for (std::size_t n = 0; n < n_seq; ++n) {
          const float* base = x.data() + n * T * stride;
          float* gbase = gx.data() + n * T * stride;
          for (std::size_t h = 0; h < heads; ++h) {
            const std::size_t qo = h * dh, ko = width + h * dh, vo = 2 * width + h * dh;
            for (std::size_t tt = 0; tt < T; ++tt) {
              const float* p = probs->data() + ((n * heads + h) * T + tt) * T;
              const float* go = g.data() + (n * T + tt) * width + h * dh;
              double dot = 0.0;
              for (std::size_t u = 0; u <= tt; ++u) {
                const float* v = base + u * stride + vo;
                float* gv = gbase + u * stride + vo;
                float s = 0.0f;
                for (std::size_t j = 0; j < dh; ++j) {
                  s += go[j] * v[j];
                  gv[j] += p[u] * go[j];
                }
                dp[u] = s;
                dot += static_cast<double>(p[u]) * s;
              }
              const float* q = base + tt * stride + qo;
              float* gq = gbase + tt * stride + qo;
              for (std::size_t u = 0; u <= tt; ++u) {
                const float ds = p[u] * (dp[u] - static_cast<float>(dot)) * inv_scale;
                const float* k = base + u * stride + ko;
                float* gk = gbase + u * stride + ko;
                for (std::size_t j = 0; j < dh; ++j) {
                  gq[j] += ds * k[j];
                  gk[j] += ds * q[j];
                }
              }
            }
          }
        }
      });
}

Var gather_rows(Var x, std::span<const std::size_t> rows) {
  const Tensor& in = x.value();
  const std::size_t c = in.cols();
  Tensor out = Tensor::zeros(rows.size(), c);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] < in.rows(), ErrorKind::kContract, "gather_rows: row index out of range");
    std::copy_n(in.data() + rows[i] * c, c, out.data() + i * c);
  }
  const std::size_t ix = x.id;
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return x.tape->record(OpKind::kGatherRows, std::move(out), {ix},
                        [ix, idx = std::move(idx), c](Tape& t, std::size_t self) {
                          const Tensor& g = t.grad(self);
                          Tensor& gx = t.grad(ix);
                          for (std::size_t i = 0; i < idx.size(); ++i) {
                            for (std::size_t j = 0; j < c; ++j) gx[idx[i] * c + j] += g[i * c + j];
                          }
                        });
}

Var scatter_rows(Var base, Var replacement, std::span<const std::size_t> rows) {
  Tape& tape = same_tape(base, replacement);
  const Tensor& b = base.value();
  const Tensor& r = replacement.value();
  require(r.cols() == b.cols() && r.rows() == rows.size(), ErrorKind::kContract,
          "scatter_rows: replacement shape " + r.shape_string() + " vs base " + b.shape_string());
  const std::size_t c = b.cols();
  Tensor out = b;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] < b.rows(), ErrorKind::kContract, "scatter_rows: row index out of range");
    std::copy_n(r.data() + i * c, c, out.data() + rows[i] * c);
  }
  const std::size_t ib = base.id, ir = replacement.id;
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return tape.record(OpKind::kScatterRows, std::move(out), {ib, ir},
                     [ib, ir, idx = std::move(idx), c](Tape& t, std::size_t self) {
                       const Tensor& g = t.grad(self);
                       if (t.requires_grad(ir)) {
                         Tensor& gr = t.grad(ir);
                         for (std::size_t i = 0; i < idx.size(); ++i) {
                           for (std::size_t j = 0; j < c; ++j) gr[i * c + j] += g[idx[i] * c + j];
                         }
                       }
                       if (t.requires_grad(ib)) {
                         Tensor masked = g;
                         for (std::size_t row : idx) {
                           std::fill_n(masked.data() + row * c, c, 0.0f);
                         }
                         accumulate(t.grad(ib), masked);
                       }
                     });
}

Var slice_cols(Var x, std::size_t begin, std::size_t count) {
  const Tensor& in = x.value();
  require(begin + count <= in.cols(), ErrorKind::kContract, "slice_cols: range out of bounds");
  std::vector<std::size_t> cols(count);
  for (std::size_t j = 0; j < count; ++j) cols[j] = begin + j;
  return gather_cols(x, cols);
}

Var gather_cols(Var x, std::span<const std::size_t> cols) {
  const Tensor& in = x.value();
  Tensor out({in.rows(), cols.size()});
  for (std::size_t r = 0; r < in.rows(); ++r) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      require(cols[j] < in.cols(), ErrorKind::kContract, "gather_cols: column out of range");
      out.at(r, j) = in.at(r, cols[j]);
    }
  }
  const std::size_t ix = x.id;
  std::vector<std::size_t> idx(cols.begin(), cols.end());
  return x.tape->record(OpKind::kGatherCols, std::move(out), {ix},
                        [ix, idx = std::move(idx)](Tape& t, std::size_t self) {
                          const Tensor& g = t.grad(self);
                          Tensor& gx = t.grad(ix);
                          for (std::size_t r = 0; r < g.rows(); ++r) {
                            for (std::size_t j = 0; j < idx.size(); ++j) {
                              gx.at(r, idx[j]) += g.at(r, j);
                            }
                          }
                        });
}

Var skew_from_upper(Var upper, std::size_t d) {
  const Tensor& p = upper.value();
  require(p.size() == d * (d - 1) / 2, ErrorKind::kContract,
          "skew_from_upper: expected " + std::to_string(d * (d - 1) / 2) + " entries, got " +
              std::to_string(p.size()));
  Tensor s = Tensor::zeros(d, d);
  std::size_t k = 0;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j, ++k) {
      s.at(i, j) = p[k];
      s.at(j, i) = -p[k];
    }
  }
  const std::size_t ip = upper.id;
  return upper.tape->record(OpKind::kSkewFromUpper, std::move(s), {ip},
                            [ip, d](Tape& t, std::size_t self) {
                              const Tensor& g = t.grad(self);
                              Tensor& gp = t.grad(ip);
                              std::size_t k = 0;
                              for (std::size_t i = 0; i < d; ++i) {
                                for (std::size_t j = i + 1; j < d; ++j, ++k) {
                                  gp[k] += g.at(i, j) - g.at(j, i);
                                }
                              }
                            });
}

Var cayley(Var skew) {
  Tensor q = rsub::cayley(skew.value());
  Tensor inv = cayley_denominator_inverse(skew.value());
  const std::size_t is = skew.id;
  return skew.tape->record(
      OpKind::kCayley, std::move(q), {is}, [is, inv = std::move(inv)](Tape& t, std::size_t self) {
        // Q = (I - S)(I + S)^{-1}  =>  dL/dS = -(I + Q)^T G (I + S)^{-T}
        const Tensor& qv = t.value(self);
        const Tensor& g = t.grad(self);
        Tensor ipq = qv;
        for (std::size_t i = 0; i < ipq.rows(); ++i) ipq.at(i, i) += 1.0f;
        Tensor left = kernels::matmul_at(ipq, g);
        Tensor ds = kernels::matmul_bt(left, inv);
        accumulate(t.grad(is), kernels::scale(ds, -1.0f));
      });
}

}  // namespace rsub::ad
