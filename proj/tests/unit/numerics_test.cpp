#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "rsub/common/error.hpp"
#include "rsub/common/seed.hpp"
#include "rsub/numerics/adam.hpp"
#include "rsub/numerics/kernels.hpp"
#include "rsub/numerics/linalg.hpp"
#include "rsub/numerics/ops.hpp"
#include "rsub/numerics/tape.hpp"

namespace rsub {
namespace {

Tensor random_matrix(std::size_t r, std::size_t c, std::uint64_t seed, double sd = 1.0) {
  SeedStream rng(seed);
  Tensor t = Tensor::zeros(r, c);
  for (float& v : t.values()) v = static_cast<float>(rng.normal(0.0, sd));
  return t;
}

Tensor random_skew(std::size_t d, std::uint64_t seed, double sd) {
  Tensor s = Tensor::zeros(d, d);
  SeedStream rng(seed);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      s.at(i, j) = static_cast<float>(rng.normal(0.0, sd));
      s.at(j, i) = -s.at(i, j);
    }
  }
  return s;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(double(a[i]) - b[i]));
  return m;
}

double relative_error(const Tensor& got, const Tensor& ref, const std::vector<std::size_t>& idx) {
  double num = 0.0, den = 0.0;
  for (std::size_t i : idx) {
    num += (double(got[i]) - ref[i]) * (double(got[i]) - ref[i]);
    den += double(ref[i]) * ref[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
}

std::vector<std::size_t> sample_coords(std::size_t n, std::size_t count, std::uint64_t seed) {
  SeedStream rng(seed);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(n) - 1)));
  }
  return out;
}

TEST(Kernels, MatmulIdentity) {
  Tensor a = random_matrix(5, 5, 1);
  EXPECT_EQ(kernels::matmul(a, Tensor::identity(5)), a);
}

TEST(Kernels, SoftmaxUniform) {
  Tensor y = kernels::row_softmax(Tensor::row_vector({0, 0, 0}));
  for (float v : y.values()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-7);
}

TEST(Kernels, SoftmaxRowsSumToOne) {
  Tensor y = kernels::row_softmax(random_matrix(20, 17, 3, 4.0));
  for (std::size_t r = 0; r < y.rows(); ++r) {
    double s = 0;
    for (float v : y.row(r)) s += v;
    EXPECT_NEAR(s, 1.0, 1e-6);
  }
}

TEST(Kernels, GeluZero) { EXPECT_EQ(kernels::gelu(0.0f), 0.0f); }

TEST(Kernels, Deterministic) {
  Tensor a = random_matrix(7, 9, 4), b = random_matrix(9, 3, 5);
  EXPECT_EQ(kernels::matmul(a, b), kernels::matmul(a, b));
  Tensor g = Tensor::full(1, 9, 1.0f);
  EXPECT_EQ(kernels::rms_normalize(a, g), kernels::rms_normalize(a, g));
}

TEST(Kernels, ShapeMismatchNamesOp) {
  try {
    kernels::matmul(Tensor::zeros(2, 3), Tensor::zeros(2, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kContract);
    EXPECT_NE(std::string(e.what()).find("matmul"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("2x3"), std::string::npos);
  }
}

TEST(Kernels, NonFiniteRejected) {
  Tensor a = Tensor::row_vector({1.0f, NAN});
  try {
    kernels::row_softmax(a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumericDomain);
  }
}

TEST(Kernels, EvaluateDispatch) {
  std::vector<Tensor> ops{Tensor::row_vector({1, 2}), Tensor::scalar(3)};
  EXPECT_EQ(kernels::evaluate(kernels::Op::kScale, ops), Tensor::row_vector({3, 6}));
  std::vector<Tensor> ce{Tensor::row_vector({0, 0}), Tensor::row_vector({1, 0})};
  EXPECT_NEAR(kernels::evaluate(kernels::Op::kCrossEntropy, ce)[0], std::log(2.0), 1e-6);
  std::vector<Tensor> bad{Tensor::row_vector({0, 0}), Tensor::row_vector({0.5, 0.5})};
  EXPECT_THROW(kernels::evaluate(kernels::Op::kCrossEntropy, bad), Error);
}

TEST(Backward, Square) {
  ad::Tape tape;
  auto x = tape.parameter("x", Tensor::scalar(3));
  auto g = tape.backward(ad::hadamard(x, x));
  EXPECT_FLOAT_EQ(g.at("x")[0], 6.0f);
}

TEST(Backward, NonScalarLossRejected) {
  ad::Tape tape;
  auto x = tape.parameter("x", Tensor::row_vector({1, 2}));
  try {
    tape.backward(x);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kContract);
  }
}

TEST(Backward, SoftmaxCrossEntropyClosedForm) {
  ad::Tape tape;
  Tensor z = Tensor::row_vector({0.5f, -1.0f, 2.0f, 0.1f});
  auto x = tape.parameter("z", z);
  std::vector<int> tgt{2};
  auto g = tape.backward(ad::cross_entropy(x, tgt));
  Tensor p = kernels::row_softmax(z);
  p[2] -= 1.0f;
  EXPECT_LT(max_abs_diff(g.at("z"), p), 1e-6);
}

TEST(Backward, MatmulChainMatchesFiniteDifference) {
  Tensor x = random_matrix(4, 6, 10);
  Tensor w1 = random_matrix(6, 8, 11, 0.5), w2 = random_matrix(8, 8, 12, 0.5),
         w3 = random_matrix(8, 3, 13, 0.5);
  std::vector<int> tgt{0, 2, 1, 2};
  auto loss_of = [&](const Tensor& a) {
    Tensor h = kernels::matmul(kernels::matmul(kernels::matmul(x, a), w2), w3);
    return kernels::cross_entropy(h, tgt);
  };
  ad::Tape tape;
  auto p = tape.parameter("w1", w1);
  auto h = ad::matmul(ad::matmul(ad::matmul(tape.constant(x), p), tape.constant(w2)),
                      tape.constant(w3));
  Tensor g = tape.backward(ad::cross_entropy(h, tgt)).at("w1");
  auto coords = sample_coords(w1.size(), 50, 14);
  Tensor fd = finite_difference_gradient(loss_of, w1, 1e-2, coords);
  EXPECT_LE(relative_error(g, fd, coords), 1e-3);
}

// Every differentiable op used downstream, checked against central differences.
TEST(Backward, TransformerStyleGraphMatchesFiniteDifference) {
  const std::size_t n = 2, T = 5, d = 8, heads = 2;
  std::vector<int> ids{1, 4, 2, 3, 0, 2, 2, 1, 4, 3};
  Tensor emb = random_matrix(6, d, 20, 0.5);
  Tensor wqkv = random_matrix(d, 3 * d, 21, 0.4);
  Tensor gain = random_matrix(1, d, 22, 0.2);
  for (float& v : gain.values()) v += 1.0f;
  Tensor w1 = random_matrix(d, 2 * d, 23, 0.4), w2 = random_matrix(2 * d, d, 24, 0.4);
  Tensor upper = random_matrix(1, d * (d - 1) / 2, 25, 0.2);
  Tensor head = random_matrix(d, 4, 26, 0.5);
  Tensor mask_logits = random_matrix(1, d, 27, 1.0);
  std::vector<std::size_t> last{T - 1, 2 * T - 1};
  std::vector<int> tgt{1, 3};

  auto build = [&](ad::Tape& tape, const std::map<std::string, Tensor>& p) {
    auto x = ad::embedding_gather(tape.parameter("emb", p.at("emb")), ids);
    auto h = ad::rms_normalize(x, tape.parameter("gain", p.at("gain")));
    auto att = ad::causal_attention(ad::matmul(h, tape.parameter("wqkv", p.at("wqkv"))), n, T, heads);
    x = ad::add(x, att);
    auto f = ad::gelu(ad::matmul(x, tape.parameter("w1", p.at("w1"))));
    x = ad::add(x, ad::matmul(f, tape.parameter("w2", p.at("w2"))));
    auto rot = ad::cayley(ad::skew_from_upper(tape.parameter("upper", p.at("upper")), d));
    auto rows = ad::gather_rows(x, last);
    auto z = ad::matmul(rows, rot);
    auto gate = ad::embedding_gather(ad::sigmoid(tape.parameter("mask", p.at("mask"))),
                                     std::vector<int>{0, 0});
    auto masked = ad::add(ad::hadamard(z, gate), ad::hadamard(ad::transpose(ad::transpose(z)),
                                                               ad::row_softmax(z)));
    auto back = ad::matmul(masked, ad::transpose(rot));
    auto cols = ad::slice_cols(back, 0, d);
    x = ad::scatter_rows(x, cols, last);
    auto out = ad::matmul(ad::gather_rows(x, last), tape.parameter("head", p.at("head")));
    auto reg = ad::scale(ad::sum(ad::gather_cols(out, std::vector<std::size_t>{0, 3})), 0.01f);
    return ad::add(ad::cross_entropy(ad::sub(out, ad::scale(out, 0.5f)), tgt), reg);
  };

  std::map<std::string, Tensor> params{{"emb", emb},     {"wqkv", wqkv},   {"gain", gain},
                                       {"w1", w1},       {"w2", w2},       {"upper", upper},
                                       {"head", head},   {"mask", mask_logits}};
  ad::Tape tape;
  auto grads = tape.backward(build(tape, params));
  std::uint64_t seed = 30;
  for (const auto& [name, value] : params) {
    auto f = [&, name = name](const Tensor& v) {
      auto p = params;
      p[name] = v;
      ad::Tape t;
      return static_cast<double>(build(t, p).value()[0]);
    };
    auto coords = sample_coords(value.size(), 50, seed++);
    Tensor fd = finite_difference_gradient(f, value, 1e-2, coords);
    EXPECT_LE(relative_error(grads.at(name), fd, coords), 1e-3) << name;
  }
}

TEST(FiniteDifference, SumIsAllOnes) {
  Tensor x = random_matrix(3, 4, 40);
  auto f = [](const Tensor& t) {
    double s = 0;
    for (float v : t.values()) s += v;
    return s;
  };
  Tensor g = finite_difference_gradient(f, x, 1e-3);
  for (float v : g.values()) EXPECT_NEAR(v, 1.0, 1e-9);
}

TEST(FiniteDifference, Quadratic) {
  auto f = [](const Tensor& t) { return double(t[0]) * t[0]; };
  Tensor g = finite_difference_gradient(f, Tensor::scalar(3), 1e-3);
  EXPECT_NEAR(g[0], 6.0, 1e-6);
}

TEST(FiniteDifference, NonFiniteEvaluation) {
  auto f = [](const Tensor& t) { return std::log(double(t[0])); };
  try {
    finite_difference_gradient(f, Tensor::scalar(0), 1e-3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumericDomain);
  }
}

TEST(Qr, AxisAligned) {
  auto b = qr_orthonormalize(Tensor::matrix(3, 2, {2, 0, 0, 0, 0, 3}));
  EXPECT_EQ(b.columns(), Tensor::matrix(3, 2, {1, 0, 0, 0, 0, 1}));
}

TEST(Qr, OrthonormalIsFixedPointUpToSign) {
  Tensor m = Tensor::matrix(3, 2, {0, -1, 1, 0, 0, 0});
  auto b = qr_orthonormalize(m);
  for (std::size_t j = 0; j < 2; ++j) {
    double dot = 0;
    for (std::size_t i = 0; i < 3; ++i) dot += b.columns().at(i, j) * m.at(i, j);
    EXPECT_NEAR(std::abs(dot), 1.0, 1e-6);
  }
}

TEST(Qr, RandomMatricesAreOrthonormal) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto b = qr_orthonormalize(random_matrix(8, 3, 100 + s));
    EXPECT_LT(b.orthonormality_residual(), 1e-5);
  }
}

TEST(Qr, SpanPreserved) {
  Tensor m = random_matrix(6, 3, 7);
  Tensor q = qr_orthonormalize(m).columns();
  // M = Q Q^T M
  Tensor back = kernels::matmul(q, kernels::matmul_at(q, m));
  EXPECT_LT(max_abs_diff(back, m), 1e-5);
}

TEST(Qr, RankDeficient) {
  try {
    qr_orthonormalize(Tensor::matrix(3, 2, {1, 2, 1, 2, 1, 2}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerateBasis);
  }
}

TEST(Cayley, ZeroIsIdentity) { EXPECT_EQ(cayley(Tensor::zeros(4, 4)), Tensor::identity(4)); }

TEST(Cayley, QuarterTurn) {
  Tensor q = cayley(Tensor::matrix(2, 2, {0, 1, -1, 0}));
  EXPECT_LT(max_abs_diff(q, Tensor::matrix(2, 2, {0, -1, 1, 0})), 1e-6);
}

TEST(Cayley, OrthogonalWithUnitDeterminant) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    Tensor q = cayley(random_skew(6, 200 + s, 1.0));
    EXPECT_LT(orthonormality_residual(q), 1e-5);
    EXPECT_NEAR(determinant(q), 1.0, 1e-4);
  }
}

TEST(Cayley, NegationTransposes) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    Tensor sk = random_skew(5, 300 + s, 0.7);
    EXPECT_LT(max_abs_diff(cayley(kernels::scale(sk, -1)), kernels::transpose(cayley(sk))), 1e-5);
  }
}

TEST(Cayley, RejectsNonSkew) {
  EXPECT_THROW(cayley(Tensor::matrix(2, 2, {0, 1, 1, 0})), Error);
}

TEST(Adam, MinimizesQuadratic) {
  std::map<std::string, Tensor> p{{"x", Tensor::row_vector({3.0f, -2.0f})}};
  Adam opt({.learning_rate = 0.05});
  for (int i = 0; i < 2000; ++i) {
    ad::Tape tape;
    auto x = tape.parameter("x", p.at("x"));
    opt.step(p, tape.backward(ad::sum(ad::hadamard(x, x))));
  }
  EXPECT_NEAR(p.at("x")[0], 0.0, 1e-2);
  EXPECT_NEAR(p.at("x")[1], 0.0, 1e-2);
}

}  // namespace
}  // namespace rsub
