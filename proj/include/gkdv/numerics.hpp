// SPDX-License-Identifier: Apache-2.0

#ifndef GKDV_NUMERICS_HPP
#define GKDV_NUMERICS_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "gkdv/errors.hpp"

namespace gkdv
{

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// A pivot is treated as zero below this fraction of the largest matrix entry.
inline constexpr double relative_pivot_threshold = 1e-14;

template <typename Scalar>
struct DenseSystem
{
  MatrixX<Scalar> matrix;
  VectorX<Scalar> rhs;
};

// LU with partial pivoting. Throws SingularMatrixError on a vanishing pivot.
template <typename DerivedA, typename DerivedB>
auto solve_dense(const Eigen::MatrixBase<DerivedA> &a, const Eigen::MatrixBase<DerivedB> &b)
{
  using Scalar = typename DerivedA::Scalar;
  if (a.rows() != a.cols() || a.rows() != b.rows())
    throw ValidationError("solve_dense: dimension mismatch");
  const Scalar scale = a.cwiseAbs().maxCoeff();
  if (!(scale > Scalar(0)))
    throw SingularMatrixError("solve_dense: zero matrix");
  Eigen::PartialPivLU<MatrixX<Scalar>> lu(a);
  const Scalar smallest_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  if (!(smallest_pivot >= Scalar(relative_pivot_threshold) * scale))
    throw SingularMatrixError("solve_dense: matrix is singular to working precision");
  return Eigen::Matrix<Scalar, DerivedB::RowsAtCompileTime, DerivedB::ColsAtCompileTime>(
      lu.solve(b));
}

template <typename Scalar>
VectorX<Scalar> solve_dense(const DenseSystem<Scalar> &system)
{
  return solve_dense(system.matrix, system.rhs);
}

//
// Square matrix whose nonzeros lie within k diagonals of the main diagonal,
// with the band wrapping around periodically: entry (i, j) is stored when
// (j - i) mod n lies in [-k, k]. Diagonal d in [-k, k] is row d + k of
// `bands`, and bands(d + k, i) = A(i, (i + d) mod n).
//
template <typename Scalar>
class CyclicBandedMatrix
{
public:
  CyclicBandedMatrix(Eigen::Index n, Eigen::Index k) : n_(n), k_(k), bands_(2 * k + 1, n)
  {
    if (k < 0 || n <= 2 * k)
      throw ValidationError("cyclic banded matrix requires n > 2k");
    bands_.setZero();
  }

  Eigen::Index size() const noexcept { return n_; }
  Eigen::Index half_bandwidth() const noexcept { return k_; }

  Scalar &band(Eigen::Index d, Eigen::Index i) { return bands_(d + k_, i); }
  Scalar band(Eigen::Index d, Eigen::Index i) const { return bands_(d + k_, i); }

  // Entry (i, j); zero outside the cyclic band.
  Scalar coeff(Eigen::Index i, Eigen::Index j) const
  {
    const Eigen::Index d = offset(i, j);
    return (d > k_ || d < -k_) ? Scalar(0) : bands_(d + k_, i);
  }

  MatrixX<Scalar> to_dense() const
  {
    MatrixX<Scalar> a = MatrixX<Scalar>::Zero(n_, n_);
    for (Eigen::Index i = 0; i < n_; ++i)
      for (Eigen::Index d = -k_; d <= k_; ++d)
        a(i, wrap(i + d)) += bands_(d + k_, i);
    return a;
  }

  VectorX<Scalar> operator*(const VectorX<Scalar> &x) const
  {
    VectorX<Scalar> y = VectorX<Scalar>::Zero(n_);
    for (Eigen::Index i = 0; i < n_; ++i)
      for (Eigen::Index d = -k_; d <= k_; ++d)
        y(i) += bands_(d + k_, i) * x(wrap(i + d));
    return y;
  }

  Eigen::Index wrap(Eigen::Index j) const noexcept { return ((j % n_) + n_) % n_; }

private:
  // Signed offset of column j from row i, folded into (-n/2, n/2].
  Eigen::Index offset(Eigen::Index i, Eigen::Index j) const noexcept
  {
    Eigen::Index d = wrap(j - i);
    if (d > n_ / 2)
      d -= n_;
    return d;
  }

  Eigen::Index n_;
  Eigen::Index k_;
  MatrixX<Scalar> bands_;
};

template <typename Scalar>
struct CyclicBandedSystem
{
  CyclicBandedMatrix<Scalar> matrix;
  VectorX<Scalar> rhs;
};

namespace detail
{

// Banded LU with partial pivoting for a non-periodic band (lower and upper
// half-bandwidth k). Row pivoting widens the upper band of U to 2k.
template <typename Scalar>
class BandedLU
{
public:
  // `entry(i, j)` returns A(i, j) for |i - j| <= k.
  template <typename Entry>
  BandedLU(Eigen::Index p, Eigen::Index k, Entry entry, Scalar zero_pivot)
    : p_(p), k_(k), work_(p, 3 * k + 1), mult_(p, k), pivot_(p)
  {
    work_.setZero();
    mult_.setZero();
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = std::max<Eigen::Index>(0, i - k); j <= std::min(p - 1, i + k); ++j)
        at(i, j) = entry(i, j);

    for (Eigen::Index c = 0; c < p; ++c)
    {
      const Eigen::Index last = std::min(p - 1, c + k);
      Eigen::Index r = c;
      for (Eigen::Index i = c + 1; i <= last; ++i)
        if (std::abs(at(i, c)) > std::abs(at(r, c)))
          r = i;
      pivot_(c) = r;
      const Eigen::Index right = std::min(p - 1, c + 2 * k);
      if (r != c)
        for (Eigen::Index j = c; j <= right; ++j)
          std::swap(at(r, j), at(c, j));
      const Scalar piv = at(c, c);
      if (!(std::abs(piv) >= zero_pivot))
        throw SingularMatrixError("cyclic banded solve: matrix is singular to working precision");
      for (Eigen::Index i = c + 1; i <= last; ++i)
      {
        const Scalar l = at(i, c) / piv;
        mult_(c, i - c - 1) = l;
        at(i, c) = Scalar(0);
        if (l != Scalar(0))
          for (Eigen::Index j = c + 1; j <= right; ++j)
            at(i, j) -= l * at(c, j);
      }
    }
  }

  // Overwrites the columns of `x` with the solution.
  template <typename Derived>
  void solve_in_place(Eigen::MatrixBase<Derived> &x) const
  {
    for (Eigen::Index c = 0; c < p_; ++c)
    {
      if (pivot_(c) != c)
        x.row(c).swap(x.row(pivot_(c)));
      const Eigen::Index last = std::min(p_ - 1, c + k_);
      for (Eigen::Index i = c + 1; i <= last; ++i)
        x.row(i) -= mult_(c, i - c - 1) * x.row(c);
    }
    for (Eigen::Index c = p_ - 1; c >= 0; --c)
    {
      const Eigen::Index right = std::min(p_ - 1, c + 2 * k_);
      for (Eigen::Index j = c + 1; j <= right; ++j)
        x.row(c) -= at(c, j) * x.row(j);
      x.row(c) /= at(c, c);
    }
  }

private:
  Scalar &at(Eigen::Index i, Eigen::Index j) { return work_(i, j - i + k_); }
  Scalar at(Eigen::Index i, Eigen::Index j) const { return work_(i, j - i + k_); }

  Eigen::Index p_;
  Eigen::Index k_;
  MatrixX<Scalar> work_;
  MatrixX<Scalar> mult_;
  Eigen::Matrix<Eigen::Index, Eigen::Dynamic, 1> pivot_;
};

} // namespace detail

//
// Solve a cyclic banded system in O(n k^2). The last 2k unknowns are split
// off: the leading (n - 2k) block carries no periodic wrap and is factored
// with a banded LU; the wrap couplings are folded into a 2k x 2k Schur
// complement.
//
template <typename Scalar>
VectorX<Scalar> solve_cyclic_banded(const CyclicBandedMatrix<Scalar> &a, const VectorX<Scalar> &b)
{
  using Index = Eigen::Index;
  const Index n = a.size();
  const Index k = a.half_bandwidth();
  if (b.size() != n)
    throw ValidationError("solve_cyclic_banded: dimension mismatch");
  Scalar scale(0);
  for (Index i = 0; i < n; ++i)
    for (Index d = -k; d <= k; ++d)
      scale = std::max(scale, std::abs(a.band(d, i)));
  if (!(scale > Scalar(0)))
    throw SingularMatrixError("solve_cyclic_banded: zero matrix");
  const Scalar zero_pivot = Scalar(relative_pivot_threshold) * scale;

  if (k == 0)
  {
    VectorX<Scalar> x(n);
    for (Index i = 0; i < n; ++i)
    {
      if (!(std::abs(a.band(0, i)) >= zero_pivot))
        throw SingularMatrixError("solve_cyclic_banded: matrix is singular to working precision");
      x(i) = b(i) / a.band(0, i);
    }
    return x;
  }

  const Index p = n - 2 * k;
  const Index q = 2 * k;
  detail::BandedLU<Scalar> lu(p, k, [&](Index i, Index j) { return a.coeff(i, j); }, zero_pivot);

  // Columns 0..q-1 hold A11^{-1} A12, column q holds A11^{-1} b1.
  MatrixX<Scalar> rhs(p, q + 1);
  for (Index i = 0; i < p; ++i)
  {
    for (Index j = 0; j < q; ++j)
      rhs(i, j) = a.coeff(i, p + j);
    rhs(i, q) = b(i);
  }
  lu.solve_in_place(rhs);

  MatrixX<Scalar> schur(q, q);
  VectorX<Scalar> reduced(q);
  for (Index r = 0; r < q; ++r)
  {
    for (Index c = 0; c < q; ++c)
      schur(r, c) = a.coeff(p + r, p + c);
    reduced(r) = b(p + r);
    for (Index i = 0; i < p; ++i)
    {
      const Scalar a21 = a.coeff(p + r, i);
      if (a21 == Scalar(0))
        continue;
      schur.row(r) -= a21 * rhs.row(i).head(q);
      reduced(r) -= a21 * rhs(i, q);
    }
  }

  Eigen::PartialPivLU<MatrixX<Scalar>> slu(schur);
  if (!(slu.matrixLU().diagonal().cwiseAbs().minCoeff() >= zero_pivot))
    throw SingularMatrixError("solve_cyclic_banded: matrix is singular to working precision");
  const VectorX<Scalar> tail = slu.solve(reduced);

  VectorX<Scalar> x(n);
  x.head(p) = rhs.col(q) - rhs.leftCols(q) * tail;
  x.tail(q) = tail;
  return x;
}

template <typename Scalar>
VectorX<Scalar> solve_cyclic_banded(const CyclicBandedSystem<Scalar> &system)
{
  return solve_cyclic_banded(system.matrix, system.rhs);
}

//
// Three-point binomial smoothing (v[i-1] + 2 v[i] + v[i+1]) / 4 on the
// interior. With preserve_ends the endpoints are copied; otherwise each end
// uses its mirror neighbour as the ghost value (even reflection).
//
template <typename Derived>
auto low_pass_filter(const Eigen::MatrixBase<Derived> &values, bool preserve_ends)
{
  using Scalar = typename Derived::Scalar;
  const Eigen::Index len = values.size();
  if (len < 3)
    throw ValidationError("low_pass_filter: need at least 3 values");
  VectorX<Scalar> out(len);
  for (Eigen::Index i = 1; i + 1 < len; ++i)
    out(i) = (values(i - 1) + Scalar(2) * values(i) + values(i + 1)) / Scalar(4);
  if (preserve_ends)
  {
    out(0) = values(0);
    out(len - 1) = values(len - 1);
  }
  else
  {
    out(0) = (values(0) + values(1)) / Scalar(2);
    out(len - 1) = (values(len - 1) + values(len - 2)) / Scalar(2);
  }
  return out;
}

// Periodic: h * sum(v). Open: trapezoid rule with half weights at both ends.
template <typename Derived>
typename Derived::Scalar trapezoid_integral(const Eigen::MatrixBase<Derived> &values,
                                            typename Derived::Scalar h, bool periodic)
{
  using Scalar = typename Derived::Scalar;
  if (!(h > Scalar(0)))
    throw ValidationError("trapezoid_integral: h must be positive");
  const Eigen::Index len = values.size();
  if (len == 0)
    return Scalar(0);
  Scalar sum = values.sum();
  if (!periodic)
    sum -= (values(0) + values(len - 1)) / Scalar(2);
  return h * sum;
}

} // namespace gkdv

#endif // GKDV_NUMERICS_HPP
