// Copyright 2026 The latflow Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Unimodular lattices and grids in R^d (2 <= d <= 6): shortest vectors,
// complete enumeration of short vectors, grid minima, 2D Lagrange-Gauss
// reduction and primitive exterior-power elements.
//
// A lattice is stored row-scaled: basis = diag(exp(s)) * M. Points of the
// slice a_tau u(xi) Z^d keep M = u(xi) and s = (tau, -sum tau), so
// coordinates computed from integer coefficients stay accurate far into the
// cusp. Generic bases use s = 0.

#ifndef LATFLOW_LATTICE_HPP_
#define LATFLOW_LATTICE_HPP_

#include <Eigen/Dense>
#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "latflow/detail/reduction.hpp"
#include "latflow/numeric.hpp"

namespace latflow::detail {
struct BasisTransform;
}  // namespace latflow::detail

namespace latflow::lattice {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IntMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
using IntVector = std::vector<std::int64_t>;

inline constexpr int kMaxDim = 6;
inline constexpr double kUnimodularTolerance = 1e-9;

struct EnumerationLimits {
  std::size_t max_points = 1'000'000;
};

// Computes core * coeffs for integer coefficients, for cores that admit a
// more accurate evaluation than the stored HighReal entries (for example
// exact arithmetic in a number field).
class CoreEvaluator {
 public:
  virtual ~CoreEvaluator() = default;
  virtual void apply(const Int128* coeffs, HighReal* out) const = 0;
  // Evaluator for the inverse-transpose core; null when unavailable.
  virtual std::shared_ptr<const CoreEvaluator> dual() const { return nullptr; }
};

class UnimodularLattice {
 public:
  // Columns of `basis` generate the lattice. Throws DegenerateBasis when the
  // basis is singular and InvalidArgument when |det - 1| > 1e-9.
  explicit UnimodularLattice(const Matrix& basis);

  // basis = diag(exp(log_scale)) * core, core given row-major.
  static UnimodularLattice row_scaled(std::vector<HighReal> log_scale,
                                      std::vector<HighReal> core);

  int dim() const { return d_; }
  Matrix basis() const;
  HighReal entry(int r, int c) const;
  HighReal determinant() const;

  const std::vector<HighReal>& log_scale() const { return log_scale_; }
  const std::vector<HighReal>& core() const { return core_; }
  const std::shared_ptr<const CoreEvaluator>& evaluator() const { return eval_; }
  // Same lattice; integer coordinates go through `ev`, which must agree
  // with core() up to rounding.
  UnimodularLattice with_evaluator(std::shared_ptr<const CoreEvaluator> ev) const;
  // core * coeffs, through the evaluator when present.
  void apply_core(const Int128* coeffs, HighReal* out) const;

  // basis * coeffs.
  void coordinates(const Int128* coeffs, HighReal* out) const;
  void coordinates(const HighReal* coeffs, HighReal* out) const;
  std::vector<HighReal> vector(const IntVector& coeffs) const;
  double norm(const IntVector& coeffs) const;

  // The dual lattice basis^{-T} Z^d. Keeps the evaluator's dual.
  UnimodularLattice dual() const;
  // diag(exp(extra)) * this. Keeps the evaluator.
  UnimodularLattice scaled(const std::vector<HighReal>& extra_log_scale) const;
  // g * this, for det g = 1. Drops the evaluator.
  UnimodularLattice transformed(const Matrix& g) const;

 private:
  friend class ReducedLattice;
  UnimodularLattice(std::vector<HighReal> log_scale, std::vector<HighReal> core,
                    bool check);

  int d_ = 0;
  std::vector<HighReal> log_scale_;
  std::vector<HighReal> core_;
  std::vector<HighReal> factor_;
  std::shared_ptr<const CoreEvaluator> eval_;
};

struct ShortestVector {
  double norm = 0;
  IntVector coeffs;
};

struct LatticeVector {
  IntVector coeffs;
  double norm = 0;
};

// A lattice together with an LLL-reduced basis; reuse it when several
// queries hit the same lattice.
class ReducedLattice {
 public:
  explicit ReducedLattice(UnimodularLattice lattice);

  const UnimodularLattice& lattice() const { return lattice_; }
  // Reduced basis relative to working_lattice(), which equals lattice() up to
  // a unimodular change of basis when the reduction had to rebase.
  const detail::Reduction& reduction() const { return red_; }
  const UnimodularLattice& working_lattice() const { return work_; }
  // Working coefficients to coefficients of lattice(); empty when they do not
  // fit in 128 bits.
  std::optional<std::vector<Int128>> to_original(const std::vector<Int128>& work) const;
  // Coordinates of a working-coefficient vector, exact through lattice()'s
  // evaluator when the original coefficients fit.
  void coordinates(const std::vector<Int128>& work, std::vector<HighReal>& out) const;

  // Throws NumericRange when a coefficient exceeds 64 bits; see lambda1.
  ShortestVector shortest() const;
  // Shortest length with 128-bit coefficients.
  HighReal lambda1() const;
  std::pair<HighReal, std::vector<Int128>> shortest_exact() const;

  // Visits each nonzero vector of norm <= radius once per ± pair with its
  // exact coordinates. Throws EnumerationBudgetExceeded past the cap.
  void for_each_within(
      double radius, const EnumerationLimits& limits,
      const std::function<void(const std::vector<Int128>& coeffs,
                               const std::vector<HighReal>& coords,
                               HighReal norm2)>& visit) const;

  // As for_each_within, but `visit` returns false to stop early. Returns true
  // when the search ran to completion.
  bool search_within(
      double radius, const EnumerationLimits& limits,
      const std::function<bool(const std::vector<Int128>& coeffs,
                               const std::vector<HighReal>& coords,
                               HighReal norm2)>& visit) const;

  std::vector<LatticeVector> within(double radius,
                                    const EnumerationLimits& limits = {}) const;

 private:
  void reduce();
  void rebase();

  UnimodularLattice lattice_;
  UnimodularLattice work_;
  // Row-major d x d; original = transform_ * working. Null for the identity.
  std::shared_ptr<const detail::BasisTransform> transform_;
  detail::Reduction red_;
};

ShortestVector shortest_vector(const UnimodularLattice& L);
// Shortest length only; works deep in the cusp where coefficients exceed
// 64 bits.
double lambda1(const UnimodularLattice& L);

// Sorted by (norm, coefficients); the first nonzero coefficient of each
// representative is positive.
std::vector<LatticeVector> enumerate_vectors_within(
    const UnimodularLattice& L, double radius, const EnumerationLimits& limits = {});

class Grid {
 public:
  // Grid basis * Z^d + shift.
  Grid(UnimodularLattice lattice, const Vector& shift);
  // Shift given in lattice coordinates (basis^{-1} * shift).
  static Grid from_lattice_coordinates(UnimodularLattice lattice,
                                       std::vector<HighReal> fractional);

  const UnimodularLattice& lattice() const { return lattice_; }
  // basis^{-1} * shift, each entry in [-1/2, 1/2).
  const std::vector<HighReal>& fractional_shift() const { return frac_; }
  Vector shift() const;
  Grid scaled(const std::vector<HighReal>& extra_log_scale) const;

 private:
  Grid(UnimodularLattice lattice, std::vector<HighReal> frac);

  UnimodularLattice lattice_;
  std::vector<HighReal> frac_;
};

enum class NormKind { kEuclidean, kSup };

// Minimum norm over grid points inside the closed ball of radius `cap`;
// nullopt when the grid avoids that ball.
std::optional<double> grid_min_norm(const Grid& G, double cap,
                                    NormKind norm = NormKind::kEuclidean,
                                    const EnumerationLimits& limits = {});

struct GaussReduced {
  Eigen::Matrix2d basis;  // columns: shortest, second minimum
  std::array<std::int64_t, 2> first{};
  std::array<std::int64_t, 2> second{};
  double norm1 = 0;
  double norm2 = 0;
};

GaussReduced lagrange_gauss_reduce(const Eigen::Matrix2d& basis);
GaussReduced lagrange_gauss_reduce(const UnimodularLattice& L);
// Shortest length of a 2D lattice in HighReal.
HighReal lambda1_2d(const UnimodularLattice& L);

// Subsets of {0..d-1} of size k in lexicographic order; index i of a wedge
// coordinate vector refers to wedge_subsets(d, k)[i].
std::vector<std::vector<int>> wedge_subsets(int d, int k);

struct WedgeElement {
  int dim = 0;
  int degree = 0;
  std::vector<double> coords;
  IntMatrix generators;  // dim x degree
  bool saturation_applied = false;

  double norm() const;
};

// Throws RankDeficient when generators have rank < k.
WedgeElement wedge_coords(const UnimodularLattice& L, const IntMatrix& generators);

// Primitive rank-k subgroups with wedge norm <= bound, one per orientation.
// Exact for k = 1 and k = d - 1; for other k only subgroups spanned by
// lattice vectors of norm <= bound are found.
std::vector<WedgeElement> enumerate_primitive_wedges(
    const UnimodularLattice& L, int k, double bound,
    const EnumerationLimits& limits = {});

}  // namespace latflow::lattice

#endif  // LATFLOW_LATTICE_HPP_
