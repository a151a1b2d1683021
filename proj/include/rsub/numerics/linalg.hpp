#pragma once

#include <cstddef>
#include <functional>

#include "rsub/numerics/tensor.hpp"

namespace rsub {

/// d x k matrix with orthonormal columns. k = 0 is allowed and denotes the
/// empty basis (the zero subspace).
class OrthonormalBasis {
 public:
  static constexpr double kTolerance = 1e-5;

  OrthonormalBasis() = default;
  /// Validates columns^T columns = I within kTolerance.
  explicit OrthonormalBasis(Tensor columns);
  static OrthonormalBasis empty(std::size_t ambient_dim);

  std::size_t ambient_dim() const { return ambient_dim_; }
  std::size_t k() const { return k_; }
  const Tensor& columns() const { return columns_; }

  /// max |(B^T B - I)_ij|
  double orthonormality_residual() const;

 private:
  std::size_t ambient_dim_ = 0;
  std::size_t k_ = 0;
  Tensor columns_;
};

double orthonormality_residual(const Tensor& columns);

/// Gram-Schmidt (modified, two passes, double precision) with positive
/// diagonal convention. Throws kDegenerateBasis when a column's norm after
/// elimination is at most 1e-8.
OrthonormalBasis qr_orthonormalize(const Tensor& m);

/// Q = (I - S)(I + S)^{-1} for skew-symmetric S.
Tensor cayley(const Tensor& skew);

/// Inverse of (I + S), computed in double precision; throws kNumericDomain
/// when I + S is numerically singular.
Tensor cayley_denominator_inverse(const Tensor& skew);

double determinant(const Tensor& square);

/// Central differences (f(x + h e_j) - f(x - h e_j)) / 2h for every coordinate.
Tensor finite_difference_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x,
                                  double h);

/// Same, restricted to the listed flat coordinates; the rest of the result is zero.
Tensor finite_difference_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x,
                                  double h, const std::vector<std::size_t>& coordinates);

}  // namespace rsub
