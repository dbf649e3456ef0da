#ifndef HMBEM_EXPR_HPP
#define HMBEM_EXPR_HPP

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hmbem/hmatrix.hpp"

namespace hmbem {

struct ExprNode;
using ExprPtr = std::shared_ptr<ExprNode>;

// Operator expression over H-matrix, sparse and dense leaves. The discrete
// boundary operators are exactly such expressions: sparse transforms around
// shared adaptive H-matrices, sums, scalings and block arrangements.
struct ExprNode {
  enum class Kind {
    HLeaf,
    SparseLeaf,
    DenseLeaf,
    Scale,
    Sum,
    Compose,   // children applied right to left
    Transpose,
    BlockGrid  // row-major children, nullptr = zero block
  };

  Kind kind;
  std::shared_ptr<HMatrix> h;
  std::shared_ptr<const SpMat> sparse;
  std::shared_ptr<const Mat> dense;
  Real factor = 1.0;
  std::vector<ExprPtr> children;
  int grid_rows = 0;
  int grid_cols = 0;
  std::vector<Real> child_sign;

  Index rows() const;
  Index cols() const;
  // block heights/widths of a BlockGrid
  std::vector<Index> grid_row_sizes() const;
  std::vector<Index> grid_col_sizes() const;
};

ExprPtr leaf(std::shared_ptr<HMatrix> h);
ExprPtr leaf(SpMat s);
ExprPtr leaf(std::shared_ptr<const SpMat> s);
ExprPtr leaf(Mat d);
ExprPtr scale(Real c, ExprPtr e);
ExprPtr sum(std::vector<ExprPtr> terms);
ExprPtr compose(std::vector<ExprPtr> factors);  // factors[0] applied last
ExprPtr transpose(ExprPtr e);
ExprPtr block_grid(int r, int c, std::vector<ExprPtr> children,
                   std::vector<Real> signs = {});
ExprPtr block2x2(ExprPtr a11, ExprPtr a12, ExprPtr a21, ExprPtr a22,
                 std::array<Real, 4> signs = {1, 1, 1, 1});
// X replicated on the 3x3 diagonal
ExprPtr diag3(ExprPtr x);

Vec matvec(const ExprNode& e, const Vec& x, Mode mode);
Vec matvec_transposed(const ExprNode& e, const Vec& x, Mode mode);

// Entrywise evaluation; every node in the tree must stay below cap entries.
Mat densify(const ExprNode& e, Mode mode, Index cap = Index(40000000));

// Restriction to DOF subsets via 0/1 selection maps.
SpMat selection_matrix(const std::vector<Index>& subset, Index full_size);
ExprPtr restrict_expr(ExprPtr e, const std::vector<Index>& rows,
                      const std::vector<Index>& cols);

// One occurrence of an H-matrix leaf inside an expression that is linear in
// its H-leaves: coeff * prefix * H^(T) * suffix. Null prefix/suffix mean
// identity. Used by the error estimators to push look-ahead tails through
// the sparse sandwiches of composed operators.
struct LeafOccurrence {
  std::shared_ptr<HMatrix> h;
  bool transposed = false;
  Real coeff = 1.0;
  std::shared_ptr<const SpMat> prefix;
  std::shared_ptr<const SpMat> suffix;
};

// Decomposes the expression into leaf occurrences. Throws if a Compose chain
// contains more than one H-bearing factor (the expression would not be
// linear in its leaves).
std::vector<LeafOccurrence> flatten_occurrences(const ExprPtr& root);

// Distinct H-matrix leaves in first-appearance order.
std::vector<std::shared_ptr<HMatrix>> collect_hmatrices(const ExprPtr& root);

struct StorageRow {
  std::string name;
  Real mb = 0;         // current factors + dense blocks
  Real percent = 0;    // vs the dense equivalent of the named operator
  Real tail_mb = 0;    // marginal look-ahead storage
  Real dense_mb = 0;
};

struct StorageReport {
  std::vector<StorageRow> rows;
  Real total_mb() const;
};

StorageReport storage_report(const ExprPtr& root);

}  // namespace hmbem

#endif
