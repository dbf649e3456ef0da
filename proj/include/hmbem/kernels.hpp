#ifndef HMBEM_KERNELS_HPP
#define HMBEM_KERNELS_HPP

#include <memory>

#include "hmbem/aca.hpp"
#include "hmbem/mesh.hpp"
#include "hmbem/quadrature.hpp"

namespace hmbem {

struct MaterialConfig {
  Real E = 1.0;
  Real nu = 0.3;
  Real lambda = 0.0;
  Real mu = 0.0;
};

// lambda = E nu / ((1+nu)(1-2nu)),  mu = E / (2(1+nu))
std::pair<Real, Real> lame_constants(Real E, Real nu);
MaterialConfig make_material(Real E, Real nu);

// Kelvin's solution tensor
//   S(x) = (1+nu) / (8 pi E (1-nu)) [ (3-4nu) delta_ij / |x| + x_i x_j / |x|^3 ]
Mat3 kelvin_tensor(const Vec3& x, const MaterialConfig& m);

// Traction of the Kelvin columns at a surface point with normal n, i.e. the
// co-normal derivative taken in the field variable y at x = y - source.
Mat3 kelvin_traction(const Vec3& x, const Vec3& n, const MaterialConfig& m);

struct KernelId {
  enum class Type { VDelta, Vkl, KDelta };
  Type type = Type::VDelta;
  int k = 0;  // Vkl component indices, canonicalized k <= l
  int l = 0;

  static KernelId vdelta() { return {Type::VDelta, 0, 0}; }
  static KernelId vkl(int k, int l) {
    return {Type::Vkl, std::min(k, l), std::max(k, l)};
  }
  static KernelId kdelta() { return {Type::KDelta, 0, 0}; }
};

struct QuadratureConfig {
  int disjoint_order = 4;  // triangle-rule order for separated pairs
  int singular_order = 7;  // 1D points per dimension in the singular transforms
  int identical_bump = 2;  // extra order for coincident pairs (slowest case)
  // distance/diameter thresholds for order reduction on disjoint pairs
  Real far_ratio = 4.0;
  Real mid_ratio = 1.5;
  Real near_ratio = 0.75;
};

// Galerkin double-integral entries of the scalar kernel matrices. Weakly
// singular pairs (identical, shared edge, shared vertex) go through the
// regularizing coordinate transforms; separated pairs use tensor Gauss with
// the order reduced by distance. Entries are deterministic for fixed rules.
class GalerkinKernels {
public:
  GalerkinKernels(std::shared_ptr<const SurfaceMesh> mesh, QuadratureConfig qc);

  const SurfaceMesh& mesh() const { return *mesh_; }
  const QuadratureConfig& quadrature() const { return qc_; }

  // (1/4pi) int int 1/|x-y|
  Real vdelta(int i, int j) const;
  // (1/4pi) int int (x_k-y_k)(x_l-y_l)/|x-y|^3
  Real vkl(int k, int l, int i, int j) const;
  // (1/4pi) sum_{tau in supp psi_j} int int (x-y).n(y)/|x-y|^3 psi_j(y)
  Real kdelta(int i, int node_j) const;

  Real entry(const KernelId& id, int i, int j) const;

  // collocation entries for interior evaluation
  Real colloc_single(const Vec3& point, int r, int c, int tri_j,
                     const MaterialConfig& m) const;
  Real colloc_double(const Vec3& point, int r, int c, int node_k,
                     const MaterialConfig& m) const;

private:
  int disjoint_order(int ti, int tj) const;
  int point_order(const Vec3& p, int tj) const;
  template <class F>
  Real integrate_pair(int ti, int tj, F&& f) const;

  std::shared_ptr<const SurfaceMesh> mesh_;
  QuadratureConfig qc_;
  const PairRule* singular_rules_[4] = {nullptr, nullptr, nullptr, nullptr};
  std::vector<QuadratureRule> tri_rules_;  // orders 1..6
};

// Entry oracle over one scalar kernel matrix.
class KernelOracle : public EntryOracle {
public:
  KernelOracle(std::shared_ptr<const GalerkinKernels> kernels, KernelId id);
  Index rows() const override;
  Index cols() const override;
  Real entry(Index i, Index j) const override;

private:
  std::shared_ptr<const GalerkinKernels> kernels_;
  KernelId id_;
};

// Collocation oracles (points x triangle DOFs / points x node DOFs) for one
// component pair (r,c) of the interior representation kernels.
class CollocSingleOracle : public EntryOracle {
public:
  CollocSingleOracle(std::shared_ptr<const GalerkinKernels> kernels,
                     std::shared_ptr<const Mat> points, int r, int c,
                     MaterialConfig m)
      : kernels_(std::move(kernels)), points_(std::move(points)), r_(r), c_(c),
        m_(m) {}
  Index rows() const override { return points_->rows(); }
  Index cols() const override { return kernels_->mesh().num_triangles(); }
  Real entry(Index i, Index j) const override {
    return kernels_->colloc_single(points_->row(i).transpose(), r_, c_,
                                   static_cast<int>(j), m_);
  }

private:
  std::shared_ptr<const GalerkinKernels> kernels_;
  std::shared_ptr<const Mat> points_;
  int r_, c_;
  MaterialConfig m_;
};

class CollocDoubleOracle : public EntryOracle {
public:
  CollocDoubleOracle(std::shared_ptr<const GalerkinKernels> kernels,
                     std::shared_ptr<const Mat> points, int r, int c,
                     MaterialConfig m)
      : kernels_(std::move(kernels)), points_(std::move(points)), r_(r), c_(c),
        m_(m) {}
  Index rows() const override { return points_->rows(); }
  Index cols() const override { return kernels_->mesh().num_vertices(); }
  Real entry(Index i, Index j) const override {
    return kernels_->colloc_double(points_->row(i).transpose(), r_, c_,
                                   static_cast<int>(j), m_);
  }

private:
  std::shared_ptr<const GalerkinKernels> kernels_;
  std::shared_ptr<const Mat> points_;
  int r_, c_;
  MaterialConfig m_;
};

// Boundary data of the manufactured field u(x) = S(x - p) a.
Vec3 kelvin_displacement(const Vec3& x, const Vec3& p, const Vec3& a,
                         const MaterialConfig& m);
// nodal values over all nodes, component-major (3N)
Vec kelvin_dirichlet_data(const SurfaceMesh& mesh, const MaterialConfig& m,
                          const Vec3& p, const Vec3& a);
// centroid tractions over all triangles, component-major (3M)
Vec kelvin_neumann_data(const SurfaceMesh& mesh, const MaterialConfig& m,
                        const Vec3& p, const Vec3& a);

}  // namespace hmbem

#endif
