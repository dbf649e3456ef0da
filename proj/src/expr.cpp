#include "hmbem/expr.hpp"

#include <algorithm>

namespace hmbem {

namespace {

ExprPtr make_node(ExprNode::Kind kind) {
  auto n = std::make_shared<ExprNode>();
  n->kind = kind;
  return n;
}

}  // namespace

Index ExprNode::rows() const {
  switch (kind) {
    case Kind::HLeaf: return h->rows();
    case Kind::SparseLeaf: return sparse->rows();
    case Kind::DenseLeaf: return dense->rows();
    case Kind::Scale: return children[0]->rows();
    case Kind::Sum: return children[0]->rows();
    case Kind::Compose: return children.front()->rows();
    case Kind::Transpose: return children[0]->cols();
    case Kind::BlockGrid: {
      Index n = 0;
      for (Index s : grid_row_sizes()) n += s;
      return n;
    }
  }
  return 0;
}

Index ExprNode::cols() const {
  switch (kind) {
    case Kind::HLeaf: return h->cols();
    case Kind::SparseLeaf: return sparse->cols();
    case Kind::DenseLeaf: return dense->cols();
    case Kind::Scale: return children[0]->cols();
    case Kind::Sum: return children[0]->cols();
    case Kind::Compose: return children.back()->cols();
    case Kind::Transpose: return children[0]->rows();
    case Kind::BlockGrid: {
      Index n = 0;
      for (Index s : grid_col_sizes()) n += s;
      return n;
    }
  }
  return 0;
}

std::vector<Index> ExprNode::grid_row_sizes() const {
  std::vector<Index> sizes(grid_rows, -1);
  for (int i = 0; i < grid_rows; ++i)
    for (int j = 0; j < grid_cols; ++j) {
      const ExprPtr& c = children[i * grid_cols + j];
      if (c) {
        if (sizes[i] >= 0 && sizes[i] != c->rows())
          throw DimensionError("BlockGrid: inconsistent row sizes");
        sizes[i] = c->rows();
      }
    }
  for (Index s : sizes)
    if (s < 0) throw DimensionError("BlockGrid: empty block row");
  return sizes;
}

std::vector<Index> ExprNode::grid_col_sizes() const {
  std::vector<Index> sizes(grid_cols, -1);
  for (int i = 0; i < grid_rows; ++i)
    for (int j = 0; j < grid_cols; ++j) {
      const ExprPtr& c = children[i * grid_cols + j];
      if (c) {
        if (sizes[j] >= 0 && sizes[j] != c->cols())
          throw DimensionError("BlockGrid: inconsistent column sizes");
        sizes[j] = c->cols();
      }
    }
  for (Index s : sizes)
    if (s < 0) throw DimensionError("BlockGrid: empty block column");
  return sizes;
}

ExprPtr leaf(std::shared_ptr<HMatrix> h) {
  auto n = make_node(ExprNode::Kind::HLeaf);
  n->h = std::move(h);
  return n;
}

ExprPtr leaf(SpMat s) {
  auto n = make_node(ExprNode::Kind::SparseLeaf);
  s.makeCompressed();
  n->sparse = std::make_shared<const SpMat>(std::move(s));
  return n;
}

ExprPtr leaf(std::shared_ptr<const SpMat> s) {
  auto n = make_node(ExprNode::Kind::SparseLeaf);
  n->sparse = std::move(s);
  return n;
}

ExprPtr leaf(Mat d) {
  auto n = make_node(ExprNode::Kind::DenseLeaf);
  n->dense = std::make_shared<const Mat>(std::move(d));
  return n;
}

ExprPtr scale(Real c, ExprPtr e) {
  auto n = make_node(ExprNode::Kind::Scale);
  n->factor = c;
  n->children = {std::move(e)};
  return n;
}

ExprPtr sum(std::vector<ExprPtr> terms) {
  if (terms.empty()) throw Error("sum: no terms");
  for (const auto& t : terms)
    if (t->rows() != terms[0]->rows() || t->cols() != terms[0]->cols())
      throw DimensionError("sum: mismatched term shapes");
  auto n = make_node(ExprNode::Kind::Sum);
  n->children = std::move(terms);
  return n;
}

ExprPtr compose(std::vector<ExprPtr> factors) {
  if (factors.empty()) throw Error("compose: no factors");
  for (std::size_t i = 0; i + 1 < factors.size(); ++i)
    if (factors[i]->cols() != factors[i + 1]->rows())
      throw DimensionError("compose: mismatched factor shapes");
  auto n = make_node(ExprNode::Kind::Compose);
  n->children = std::move(factors);
  return n;
}

ExprPtr transpose(ExprPtr e) {
  auto n = make_node(ExprNode::Kind::Transpose);
  n->children = {std::move(e)};
  return n;
}

ExprPtr block_grid(int r, int c, std::vector<ExprPtr> children,
                   std::vector<Real> signs) {
  if (static_cast<int>(children.size()) != r * c)
    throw Error("block_grid: children size mismatch");
  auto n = make_node(ExprNode::Kind::BlockGrid);
  n->grid_rows = r;
  n->grid_cols = c;
  n->children = std::move(children);
  n->child_sign = signs.empty() ? std::vector<Real>(r * c, 1.0)
                                : std::move(signs);
  n->grid_row_sizes();  // validate
  n->grid_col_sizes();
  return n;
}

ExprPtr block2x2(ExprPtr a11, ExprPtr a12, ExprPtr a21, ExprPtr a22,
                 std::array<Real, 4> signs) {
  return block_grid(2, 2,
                    {std::move(a11), std::move(a12), std::move(a21),
                     std::move(a22)},
                    {signs[0], signs[1], signs[2], signs[3]});
}

ExprPtr diag3(ExprPtr x) {
  return block_grid(3, 3,
                    {x, nullptr, nullptr, nullptr, x, nullptr, nullptr,
                     nullptr, x});
}

Vec matvec(const ExprNode& e, const Vec& x, Mode mode) {
  if (x.size() != e.cols()) throw DimensionError("matvec: size mismatch");
  switch (e.kind) {
    case ExprNode::Kind::HLeaf:
      return e.h->matvec(x, mode);
    case ExprNode::Kind::SparseLeaf:
      return *e.sparse * x;
    case ExprNode::Kind::DenseLeaf:
      return *e.dense * x;
    case ExprNode::Kind::Scale:
      return e.factor * matvec(*e.children[0], x, mode);
    case ExprNode::Kind::Sum: {
      Vec y = matvec(*e.children[0], x, mode);
      for (std::size_t i = 1; i < e.children.size(); ++i)
        y += matvec(*e.children[i], x, mode);
      return y;
    }
    case ExprNode::Kind::Compose: {
      Vec y = x;
      for (auto it = e.children.rbegin(); it != e.children.rend(); ++it)
        y = matvec(**it, y, mode);
      return y;
    }
    case ExprNode::Kind::Transpose:
      return matvec_transposed(*e.children[0], x, mode);
    case ExprNode::Kind::BlockGrid: {
      const auto rs = e.grid_row_sizes();
      const auto cs = e.grid_col_sizes();
      Vec y = Vec::Zero(e.rows());
      Index roff = 0;
      for (int i = 0; i < e.grid_rows; ++i) {
        Index coff = 0;
        for (int j = 0; j < e.grid_cols; ++j) {
          const ExprPtr& c = e.children[i * e.grid_cols + j];
          if (c)
            y.segment(roff, rs[i]) +=
                e.child_sign[i * e.grid_cols + j] *
                matvec(*c, x.segment(coff, cs[j]), mode);
          coff += cs[j];
        }
        roff += rs[i];
      }
      return y;
    }
  }
  throw Error("matvec: bad node");
}

Vec matvec_transposed(const ExprNode& e, const Vec& x, Mode mode) {
  if (x.size() != e.rows())
    throw DimensionError("matvec_transposed: size mismatch");
  switch (e.kind) {
    case ExprNode::Kind::HLeaf:
      return e.h->matvec_transposed(x, mode);
    case ExprNode::Kind::SparseLeaf:
      return e.sparse->transpose() * x;
    case ExprNode::Kind::DenseLeaf:
      return e.dense->transpose() * x;
    case ExprNode::Kind::Scale:
      return e.factor * matvec_transposed(*e.children[0], x, mode);
    case ExprNode::Kind::Sum: {
      Vec y = matvec_transposed(*e.children[0], x, mode);
      for (std::size_t i = 1; i < e.children.size(); ++i)
        y += matvec_transposed(*e.children[i], x, mode);
      return y;
    }
    case ExprNode::Kind::Compose: {
      Vec y = x;
      for (const auto& c : e.children) y = matvec_transposed(*c, y, mode);
      return y;
    }
    case ExprNode::Kind::Transpose:
      return matvec(*e.children[0], x, mode);
    case ExprNode::Kind::BlockGrid: {
      const auto rs = e.grid_row_sizes();
      const auto cs = e.grid_col_sizes();
      Vec y = Vec::Zero(e.cols());
      Index roff = 0;
      for (int i = 0; i < e.grid_rows; ++i) {
        Index coff = 0;
        for (int j = 0; j < e.grid_cols; ++j) {
          const ExprPtr& c = e.children[i * e.grid_cols + j];
          if (c)
            y.segment(coff, cs[j]) +=
                e.child_sign[i * e.grid_cols + j] *
                matvec_transposed(*c, x.segment(roff, rs[i]), mode);
          coff += cs[j];
        }
        roff += rs[i];
      }
      return y;
    }
  }
  throw Error("matvec_transposed: bad node");
}

Mat densify(const ExprNode& e, Mode mode, Index cap) {
  if (e.rows() * e.cols() > cap)
    throw Error("densify: desk-scale cap exceeded");
  switch (e.kind) {
    case ExprNode::Kind::HLeaf:
      return e.h->densify(mode);
    case ExprNode::Kind::SparseLeaf:
      return Mat(*e.sparse);
    case ExprNode::Kind::DenseLeaf:
      return *e.dense;
    case ExprNode::Kind::Scale:
      return e.factor * densify(*e.children[0], mode, cap);
    case ExprNode::Kind::Sum: {
      Mat m = densify(*e.children[0], mode, cap);
      for (std::size_t i = 1; i < e.children.size(); ++i)
        m += densify(*e.children[i], mode, cap);
      return m;
    }
    case ExprNode::Kind::Compose: {
      Mat m = densify(*e.children.back(), mode, cap);
      for (auto it = std::next(e.children.rbegin()); it != e.children.rend();
           ++it)
        m = densify(**it, mode, cap) * m;
      return m;
    }
    case ExprNode::Kind::Transpose:
      return densify(*e.children[0], mode, cap).transpose();
    case ExprNode::Kind::BlockGrid: {
      const auto rs = e.grid_row_sizes();
      const auto cs = e.grid_col_sizes();
      Mat m = Mat::Zero(e.rows(), e.cols());
      Index roff = 0;
      for (int i = 0; i < e.grid_rows; ++i) {
        Index coff = 0;
        for (int j = 0; j < e.grid_cols; ++j) {
          const ExprPtr& c = e.children[i * e.grid_cols + j];
          if (c)
            m.block(roff, coff, rs[i], cs[j]) =
                e.child_sign[i * e.grid_cols + j] * densify(*c, mode, cap);
          coff += cs[j];
        }
        roff += rs[i];
      }
      return m;
    }
  }
  throw Error("densify: bad node");
}

SpMat selection_matrix(const std::vector<Index>& subset, Index full_size) {
  SpMat sel(static_cast<Index>(subset.size()), full_size);
  std::vector<Triplet> trip;
  trip.reserve(subset.size());
  for (std::size_t r = 0; r < subset.size(); ++r) {
    if (subset[r] < 0 || subset[r] >= full_size)
      throw Error("selection_matrix: index out of range");
    trip.emplace_back(static_cast<Index>(r), subset[r], 1.0);
  }
  sel.setFromTriplets(trip.begin(), trip.end());
  return sel;
}

ExprPtr restrict_expr(ExprPtr e, const std::vector<Index>& rows,
                      const std::vector<Index>& cols) {
  if (rows.empty() || cols.empty())
    throw Error("restrict_expr: empty subset");
  SpMat rsel = selection_matrix(rows, e->rows());
  SpMat csel = selection_matrix(cols, e->cols());
  return compose({leaf(std::move(rsel)), std::move(e),
                  leaf(SpMat(csel.transpose()))});
}

namespace {

bool contains_h(const ExprNode& e) {
  if (e.kind == ExprNode::Kind::HLeaf) return true;
  for (const auto& c : e.children)
    if (c && contains_h(*c)) return true;
  return false;
}

// Materializes an H-free subtree as one sparse matrix.
SpMat to_sparse(const ExprNode& e) {
  switch (e.kind) {
    case ExprNode::Kind::SparseLeaf:
      return *e.sparse;
    case ExprNode::Kind::Scale:
      return SpMat(e.factor * to_sparse(*e.children[0]));
    case ExprNode::Kind::Sum: {
      SpMat m = to_sparse(*e.children[0]);
      for (std::size_t i = 1; i < e.children.size(); ++i)
        m = m + to_sparse(*e.children[i]);
      return m;
    }
    case ExprNode::Kind::Compose: {
      SpMat m = to_sparse(*e.children[0]);
      for (std::size_t i = 1; i < e.children.size(); ++i)
        m = SpMat(m * to_sparse(*e.children[i]));
      return m;
    }
    case ExprNode::Kind::Transpose:
      return SpMat(to_sparse(*e.children[0]).transpose());
    case ExprNode::Kind::BlockGrid: {
      const auto rs = e.grid_row_sizes();
      const auto cs = e.grid_col_sizes();
      std::vector<Triplet> trip;
      Index roff = 0;
      for (int i = 0; i < e.grid_rows; ++i) {
        Index coff = 0;
        for (int j = 0; j < e.grid_cols; ++j) {
          const ExprPtr& c = e.children[i * e.grid_cols + j];
          if (c) {
            const SpMat sub = to_sparse(*c);
            const Real s = e.child_sign[i * e.grid_cols + j];
            for (Index k = 0; k < sub.outerSize(); ++k)
              for (SpMat::InnerIterator it(sub, k); it; ++it)
                trip.emplace_back(roff + it.row(), coff + it.col(),
                                  s * it.value());
          }
          coff += cs[j];
        }
        roff += rs[i];
      }
      SpMat m(e.rows(), e.cols());
      m.setFromTriplets(trip.begin(), trip.end());
      return m;
    }
    default:
      throw Error("flatten: static chain factor is not sparse-representable");
  }
}

std::shared_ptr<const SpMat> sparse_product(
    const std::shared_ptr<const SpMat>& a,
    const std::shared_ptr<const SpMat>& b) {
  if (!a) return b;
  if (!b) return a;
  return std::make_shared<const SpMat>(*a * *b);
}

std::shared_ptr<const SpMat> sparse_transpose(
    const std::shared_ptr<const SpMat>& a) {
  if (!a) return nullptr;
  return std::make_shared<const SpMat>(a->transpose());
}

// offset embedding [0; I; 0] of height `total` with I at `offset`
std::shared_ptr<const SpMat> embedding(Index total, Index offset, Index n) {
  SpMat m(total, n);
  std::vector<Triplet> trip;
  trip.reserve(n);
  for (Index i = 0; i < n; ++i) trip.emplace_back(offset + i, i, 1.0);
  m.setFromTriplets(trip.begin(), trip.end());
  return std::make_shared<const SpMat>(std::move(m));
}

struct Flattener {
  std::vector<LeafOccurrence> out;

  void visit(const ExprNode& e, bool trans, Real coeff,
             std::shared_ptr<const SpMat> pre,
             std::shared_ptr<const SpMat> suf) {
    switch (e.kind) {
      case ExprNode::Kind::HLeaf:
        out.push_back({e.h, trans, coeff, std::move(pre), std::move(suf)});
        return;
      case ExprNode::Kind::SparseLeaf:
      case ExprNode::Kind::DenseLeaf:
        return;
      case ExprNode::Kind::Scale:
        visit(*e.children[0], trans, coeff * e.factor, std::move(pre),
              std::move(suf));
        return;
      case ExprNode::Kind::Sum:
        for (const auto& c : e.children) visit(*c, trans, coeff, pre, suf);
        return;
      case ExprNode::Kind::Transpose:
        visit(*e.children[0], !trans, coeff, std::move(pre), std::move(suf));
        return;
      case ExprNode::Kind::Compose: {
        int h_child = -1;
        for (std::size_t i = 0; i < e.children.size(); ++i)
          if (contains_h(*e.children[i])) {
            if (h_child >= 0)
              throw Error("flatten: compose chain with two H-bearing factors");
            h_child = static_cast<int>(i);
          }
        if (h_child < 0) return;
        // static factors left and right of the H-bearing one
        std::shared_ptr<const SpMat> left, right;
        for (int i = 0; i < h_child; ++i)
          left = sparse_product(
              left, std::make_shared<const SpMat>(to_sparse(*e.children[i])));
        for (std::size_t i = h_child + 1; i < e.children.size(); ++i)
          right = sparse_product(
              right, std::make_shared<const SpMat>(to_sparse(*e.children[i])));
        if (!trans) {
          visit(*e.children[h_child], false, coeff, sparse_product(pre, left),
                sparse_product(right, suf));
        } else {
          visit(*e.children[h_child], true, coeff,
                sparse_product(pre, sparse_transpose(right)),
                sparse_product(sparse_transpose(left), suf));
        }
        return;
      }
      case ExprNode::Kind::BlockGrid: {
        const auto rs = e.grid_row_sizes();
        const auto cs = e.grid_col_sizes();
        std::vector<Index> roff(e.grid_rows, 0), coff(e.grid_cols, 0);
        for (int i = 1; i < e.grid_rows; ++i) roff[i] = roff[i - 1] + rs[i - 1];
        for (int j = 1; j < e.grid_cols; ++j) coff[j] = coff[j - 1] + cs[j - 1];
        for (int i = 0; i < e.grid_rows; ++i)
          for (int j = 0; j < e.grid_cols; ++j) {
            const ExprPtr& c = e.children[i * e.grid_cols + j];
            if (!c || !contains_h(*c)) continue;
            const Real s = e.child_sign[i * e.grid_cols + j];
            if (!trans) {
              auto emb = embedding(e.rows(), roff[i], rs[i]);
              auto res = sparse_transpose(embedding(e.cols(), coff[j], cs[j]));
              visit(*c, false, coeff * s, sparse_product(pre, emb),
                    sparse_product(res, suf));
            } else {
              // transposed grid: child (i,j) maps row-block i -> col-block j
              auto emb = embedding(e.cols(), coff[j], cs[j]);
              auto res = sparse_transpose(embedding(e.rows(), roff[i], rs[i]));
              visit(*c, true, coeff * s, sparse_product(pre, emb),
                    sparse_product(res, suf));
            }
          }
        return;
      }
    }
  }
};

}  // namespace

std::vector<LeafOccurrence> flatten_occurrences(const ExprPtr& root) {
  Flattener f;
  f.visit(*root, false, 1.0, nullptr, nullptr);
  return f.out;
}

std::vector<std::shared_ptr<HMatrix>> collect_hmatrices(const ExprPtr& root) {
  std::vector<std::shared_ptr<HMatrix>> hs;
  const auto occs = flatten_occurrences(root);
  for (const auto& o : occs) {
    bool seen = false;
    for (const auto& h : hs)
      if (h.get() == o.h.get()) {
        seen = true;
        break;
      }
    if (!seen) hs.push_back(o.h);
  }
  return hs;
}

Real StorageReport::total_mb() const {
  Real t = 0;
  for (const auto& r : rows) t += r.mb;
  return t;
}

StorageReport storage_report(const ExprPtr& root) {
  StorageReport rep;
  for (const auto& h : collect_hmatrices(root)) {
    StorageRow row;
    row.name = h->name();
    row.mb = h->storage_mb_current();
    row.tail_mb = h->storage_mb_tail();
    row.dense_mb = h->dense_equivalent_mb();
    row.percent = row.dense_mb > 0 ? 100.0 * row.mb / row.dense_mb : 0.0;
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

}  // namespace hmbem
