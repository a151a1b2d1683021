#include "rsub/numerics/linalg.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "rsub/common/error.hpp"

namespace rsub {
namespace {

using MatrixD = Eigen::MatrixXd;

MatrixD to_double(const Tensor& t) {
  MatrixD m(static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) m(r, c) = t.at(r, c);
  }
  return m;
}

Tensor to_float(const MatrixD& m) {
  Tensor t = Tensor::zeros(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      t.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = static_cast<float>(m(r, c));
    }
  }
  return t;
}

void check_skew(const Tensor& s) {
  require(s.rows() == s.cols() && s.shape().size() == 2, ErrorKind::kContract,
          "cayley: expected a square matrix, got " + s.shape_string());
  require(s.all_finite(), ErrorKind::kNumericDomain, "cayley: non-finite input");
  double worst = 0.0;
  for (std::size_t i = 0; i < s.rows(); ++i) {
    for (std::size_t j = 0; j < s.cols(); ++j) {
      worst = std::max(worst, std::abs(static_cast<double>(s.at(i, j)) + s.at(j, i)));
    }
  }
  require(worst <= 1e-6, ErrorKind::kContract,
          "cayley: input is not skew-symmetric (|S + S^T|_max = " + std::to_string(worst) + ")");
}

Eigen::PartialPivLU<MatrixD> denominator_lu(const Tensor& s) {
  const auto n = static_cast<Eigen::Index>(s.rows());
  MatrixD a = MatrixD::Identity(n, n) + to_double(s);
  Eigen::PartialPivLU<MatrixD> lu(a);
  // (I + S) with S skew has eigenvalues 1 + i*lambda, so it is singular only in
  // degenerate floating-point situations; guard anyway.
  const double det = lu.determinant();
  require(std::isfinite(det) && std::abs(det) > 1e-12, ErrorKind::kNumericDomain,
          "cayley: I + S is singular");
  return lu;
}

}  // namespace

double orthonormality_residual(const Tensor& columns) {
  const MatrixD b = to_double(columns);
  const MatrixD gram = b.transpose() * b;
  const MatrixD diff = gram - MatrixD::Identity(gram.rows(), gram.cols());
  return diff.size() == 0 ? 0.0 : diff.cwiseAbs().maxCoeff();
}

OrthonormalBasis::OrthonormalBasis(Tensor columns)
    : ambient_dim_(columns.rows()), k_(columns.cols()), columns_(std::move(columns)) {
  require(columns_.shape().size() == 2 && ambient_dim_ >= 1 && k_ <= ambient_dim_,
          ErrorKind::kContract, "basis must be d x k with k <= d, got " + columns_.shape_string());
  const double residual = rsub::orthonormality_residual(columns_);
  require(residual <= kTolerance, ErrorKind::kDegenerateBasis,
          "basis columns are not orthonormal (residual " + std::to_string(residual) + ")");
}

OrthonormalBasis OrthonormalBasis::empty(std::size_t ambient_dim) {
  return OrthonormalBasis(Tensor({ambient_dim, 0}));
}

double OrthonormalBasis::orthonormality_residual() const {
  return rsub::orthonormality_residual(columns_);
}

OrthonormalBasis qr_orthonormalize(const Tensor& m) {
  require(m.shape().size() == 2 && m.cols() >= 1 && m.cols() <= m.rows(), ErrorKind::kContract,
          "qr_orthonormalize: expected d x k with 1 <= k <= d, got " + m.shape_string());
  require(m.all_finite(), ErrorKind::kNumericDomain, "qr_orthonormalize: non-finite input");
  MatrixD q = to_double(m);
  const Eigen::Index k = q.cols();
  for (Eigen::Index j = 0; j < k; ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index i = 0; i < j; ++i) {
        q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
      }
    }
    const double norm = q.col(j).norm();
    if (norm <= 1e-8) {
      fail(ErrorKind::kDegenerateBasis,
           "qr_orthonormalize: column " + std::to_string(j) + " is linearly dependent");
    }
    q.col(j) /= norm;
  }
  return OrthonormalBasis(to_float(q));
}

Tensor cayley_denominator_inverse(const Tensor& skew) {
  check_skew(skew);
  return to_float(denominator_lu(skew).inverse());
}

Tensor cayley(const Tensor& skew) {
  check_skew(skew);
  const auto n = static_cast<Eigen::Index>(skew.rows());
  const MatrixD s = to_double(skew);
  const MatrixD numerator = MatrixD::Identity(n, n) - s;
  const MatrixD inv = denominator_lu(skew).inverse();
  return to_float(numerator * inv);
}

double determinant(const Tensor& square) {
  require(square.rows() == square.cols(), ErrorKind::kContract, "determinant: not square");
  return to_double(square).determinant();
}

Tensor finite_difference_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x,
                                  double h, const std::vector<std::size_t>& coordinates) {
  require(h > 0.0, ErrorKind::kContract, "finite_difference_gradient: step must be positive");
  Tensor grad(x.shape());
  Tensor probe = x;
  for (std::size_t j : coordinates) {
    require(j < x.size(), ErrorKind::kContract, "finite_difference_gradient: bad coordinate");
    const float original = probe[j];
    probe[j] = static_cast<float>(original + h);
    const double up = f(probe);
    probe[j] = static_cast<float>(original - h);
    const double down = f(probe);
    probe[j] = original;
    require(std::isfinite(up) && std::isfinite(down), ErrorKind::kNumericDomain,
            "finite_difference_gradient: non-finite evaluation at coordinate " +
                std::to_string(j));
    // Use the realized step, since x +- h may not be representable in float32.
    const double realized = static_cast<double>(static_cast<float>(original + h)) -
                            static_cast<double>(static_cast<float>(original - h));
    grad[j] = static_cast<float>((up - down) / realized);
  }
  return grad;
}

Tensor finite_difference_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x,
                                  double h) {
  std::vector<std::size_t> all(x.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return finite_difference_gradient(f, x, h, all);
}

}  // namespace rsub
