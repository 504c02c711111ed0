#include "hf/forward_fem.hpp"

#include <Eigen/Sparse>
#include <array>
#include <cmath>
#include <string>

namespace hf {

const char* to_string(LoadingMode m) {
  switch (m) {
    case LoadingMode::Equibiaxial: return "equibiaxial";
    case LoadingMode::UniaxialX: return "uniaxial-x";
    case LoadingMode::UniaxialY: return "uniaxial-y";
  }
  return "?";
}

LoadingMode loading_mode_from_string(const std::string& s) {
  if (s == "equibiaxial") return LoadingMode::Equibiaxial;
  if (s == "uniaxial-x") return LoadingMode::UniaxialX;
  if (s == "uniaxial-y") return LoadingMode::UniaxialY;
  throw ConfigurationError("unknown loading mode '" + s + "'");
}

void LoadingProgram::validate() const {
  if (lambda_steps.empty())
    throw ConfigurationError("LoadingProgram: at least one stretch step required");
  if (!(lambda_steps.front() > 1.0))
    throw ConfigurationError("LoadingProgram: stretches must exceed 1");
  for (std::size_t j = 0; j + 1 < lambda_steps.size(); ++j)
    if (!(lambda_steps[j] < lambda_steps[j + 1]))
      throw ConfigurationError("LoadingProgram: stretches must be strictly increasing");
}

namespace {

using SpMat = Eigen::SparseMatrix<Real>;
using Triplet = Eigen::Triplet<Real>;

Mat3 lift_plane_strain(const Mat2& F2) {
  Mat3 F = Mat3::Identity();
  F.topLeftCorner<2, 2>() = F2;
  return F;
}

// Assembler for the structured bilinear-quad mesh.  Element (ex, ey) uses
// nodes (ex,ey), (ex+1,ey), (ex+1,ey+1), (ex,ey+1); Gauss points are laid
// out in tensor order (qy*2 + qx) for corner extrapolation.
class Assembler {
 public:
  Assembler(const Grid2D& grid, const PhaseMap& phases)
      : grid_(grid), phases_(phases), nex_(grid.nx - 1), ney_(grid.ny - 1) {
    const Real hx = grid.spacing[0], hy = grid.spacing[1];
    detJw_ = 0.25 * hx * hy;  // Jacobian determinant times unit Gauss weight
    const Real g = 1.0 / std::sqrt(3.0);
    for (int qy = 0; qy < 2; ++qy)
      for (int qx = 0; qx < 2; ++qx) {
        const Real xi = (2 * qx - 1) * g, eta = (2 * qy - 1) * g;
        const int q = qy * 2 + qx;
        const Real dxi[4] = {-(1 - eta) / 4, (1 - eta) / 4, (1 + eta) / 4,
                             -(1 + eta) / 4};
        const Real deta[4] = {-(1 - xi) / 4, -(1 + xi) / 4, (1 + xi) / 4,
                              (1 - xi) / 4};
        for (int a = 0; a < 4; ++a)
          dNdX_[q][a] = Vec2(dxi[a] * 2.0 / hx, deta[a] * 2.0 / hy);
      }
  }

  int n_elements() const { return nex_ * ney_; }

  std::array<int, 4> element_nodes(int e) const {
    const int ex = e % nex_, ey = e / nex_;
    return {grid_.index(ex, ey), grid_.index(ex + 1, ey),
            grid_.index(ex + 1, ey + 1), grid_.index(ex, ey + 1)};
  }

  Mat2 defgrad_at(const VecX& u, const std::array<int, 4>& nodes, int q) const {
    Mat2 F = Mat2::Identity();
    for (int a = 0; a < 4; ++a) {
      const Vec2 ua(u[2 * nodes[a]], u[2 * nodes[a] + 1]);
      F += ua * dNdX_[q][a].transpose();
    }
    return F;
  }

  // Internal nodal forces; throws InvertedElementError on det F <= 0.
  VecX internal_force(const VecX& u) const {
    VecX f = VecX::Zero(u.size());
    for (int e = 0; e < n_elements(); ++e) {
      const auto nodes = element_nodes(e);
      const Material& mat = phases_.at_element(e);
      for (int q = 0; q < 4; ++q) {
        const Mat2 F2 = defgrad_at(u, nodes, q);
        const Mat2 P2 =
            mat.pk1(lift_plane_strain(F2)).topLeftCorner<2, 2>();
        for (int a = 0; a < 4; ++a) {
          const Vec2 fa = P2 * dNdX_[q][a] * detJw_;
          f[2 * nodes[a]] += fa[0];
          f[2 * nodes[a] + 1] += fa[1];
        }
      }
    }
    return f;
  }

  // Tangent stiffness via central finite differences of P per Gauss point.
  SpMat tangent(const VecX& u) const {
    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(n_elements()) * 64);
    const Real h = 1e-7;
    for (int e = 0; e < n_elements(); ++e) {
      const auto nodes = element_nodes(e);
      const Material& mat = phases_.at_element(e);
      Eigen::Matrix<Real, 8, 8> Ke = Eigen::Matrix<Real, 8, 8>::Zero();
      for (int q = 0; q < 4; ++q) {
        const Mat2 F2 = defgrad_at(u, nodes, q);
        // A[2k+l] = dP2/dF2_kl
        std::array<Mat2, 4> A;
        for (int k = 0; k < 2; ++k)
          for (int l = 0; l < 2; ++l) {
            Mat2 Fp = F2, Fm = F2;
            Fp(k, l) += h;
            Fm(k, l) -= h;
            A[2 * k + l] =
                (mat.pk1(lift_plane_strain(Fp)).topLeftCorner<2, 2>() -
                 mat.pk1(lift_plane_strain(Fm)).topLeftCorner<2, 2>()) /
                (2.0 * h);
          }
        for (int a = 0; a < 4; ++a)
          for (int i = 0; i < 2; ++i) {
            // dP_ip/dF_jr * dN_b/dX_r, contracted with dN_a/dX_p
            for (int b = 0; b < 4; ++b)
              for (int j = 0; j < 2; ++j) {
                Real kab = 0.0;
                for (int p = 0; p < 2; ++p)
                  for (int r = 0; r < 2; ++r)
                    kab += dNdX_[q][a][p] * A[2 * j + r](i, p) * dNdX_[q][b][r];
                Ke(2 * a + i, 2 * b + j) += kab * detJw_;
              }
          }
      }
      for (int a = 0; a < 4; ++a)
        for (int i = 0; i < 2; ++i)
          for (int b = 0; b < 4; ++b)
            for (int j = 0; j < 2; ++j)
              trip.emplace_back(2 * nodes[a] + i, 2 * nodes[b] + j,
                                Ke(2 * a + i, 2 * b + j));
    }
    SpMat K(u.size(), u.size());
    K.setFromTriplets(trip.begin(), trip.end());
    return K;
  }

  // Gauss-point F extrapolated to element corners and averaged at nodes.
  MatX nodal_defgrad(const VecX& u) const {
    MatX acc = MatX::Zero(grid_.size(), 4);
    VecX count = VecX::Zero(grid_.size());
    const Real g = 1.0 / std::sqrt(3.0);
    const Real cm = (1.0 + 1.0 / g) / 2.0;  // extrapolation to xi = -1
    const Real cp = (1.0 - 1.0 / g) / 2.0;
    for (int e = 0; e < n_elements(); ++e) {
      const auto nodes = element_nodes(e);
      std::array<Mat2, 4> Fq;
      for (int q = 0; q < 4; ++q) Fq[q] = defgrad_at(u, nodes, q);
      // corner a in local order maps to (sx, sy) in {-1,+1}^2
      const int sx[4] = {0, 1, 1, 0}, sy[4] = {0, 0, 1, 1};
      for (int a = 0; a < 4; ++a) {
        const Real wx[2] = {sx[a] ? cp : cm, sx[a] ? cm : cp};
        const Real wy[2] = {sy[a] ? cp : cm, sy[a] ? cm : cp};
        Mat2 Fc = Mat2::Zero();
        for (int qy = 0; qy < 2; ++qy)
          for (int qx = 0; qx < 2; ++qx) Fc += wx[qx] * wy[qy] * Fq[qy * 2 + qx];
        acc.row(nodes[a]) += Eigen::RowVector4d(Fc(0, 0), Fc(0, 1), Fc(1, 0),
                                                Fc(1, 1));
        count[nodes[a]] += 1.0;
      }
    }
    return acc.array().colwise() / count.array();
  }

 private:
  const Grid2D& grid_;
  const PhaseMap& phases_;
  int nex_, ney_;
  Real detJw_;
  std::array<std::array<Vec2, 4>, 4> dNdX_;
};

// Which dofs a loading mode prescribes, and the affine grip motion.
struct DirichletSet {
  std::vector<char> fixed;  // per dof

  DirichletSet(const Grid2D& grid, LoadingMode mode) : fixed(2 * grid.size(), 0) {
    for (int i = 0; i < grid.size(); ++i) {
      const int ix = i % grid.nx, iy = i / grid.nx;
      const bool on_x = ix == 0 || ix == grid.nx - 1;
      const bool on_y = iy == 0 || iy == grid.ny - 1;
      const bool grip = mode == LoadingMode::Equibiaxial ? (on_x || on_y)
                        : mode == LoadingMode::UniaxialX ? on_x
                                                         : on_y;
      if (grip) fixed[2 * i] = fixed[2 * i + 1] = 1;
    }
  }
};

// Affine displacement guess for stretch lambda about the domain center;
// also provides the prescribed grip values.
VecX affine_field(const Grid2D& grid, LoadingMode mode, Real lam) {
  const Vec2 c = grid.origin + 0.5 * Vec2(grid.length_x(), grid.length_y());
  VecX u(2 * grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    const Vec2 d = grid.node(i) - c;
    u[2 * i] = mode == LoadingMode::UniaxialY ? 0.0 : (lam - 1.0) * d[0];
    u[2 * i + 1] = mode == LoadingMode::UniaxialX ? 0.0 : (lam - 1.0) * d[1];
  }
  return u;
}

class ForwardSolver {
 public:
  ForwardSolver(const Grid2D& grid, const PhaseMap& phases,
                const LoadingProgram& program, const ForwardOptions& opts)
      : grid_(grid), asm_(grid, phases), program_(program), opts_(opts),
        dir_(grid, program.mode) {}

  // Newton iteration at fixed lambda; returns whether it converged.
  bool newton(Real lam, VecX& u) {
    const VecX grip = affine_field(grid_, program_.mode, lam);
    for (std::size_t d = 0; d < dir_.fixed.size(); ++d)
      if (dir_.fixed[d]) u[d] = grip[d];
    for (int it = 0; it < opts_.max_newton_iter; ++it) {
      VecX r;
      try {
        r = asm_.internal_force(u);
      } catch (const InvertedElementError&) {
        return false;  // overshoot; caller bisects the load increment
      }
      for (std::size_t d = 0; d < dir_.fixed.size(); ++d)
        if (dir_.fixed[d]) r[d] = 0.0;
      last_residual_ = r.norm();
      last_iters_ = it;
      if (last_residual_ <= opts_.newton_tol) return true;

      SpMat K = asm_.tangent(u);
      // Eliminate prescribed dofs: unit diagonal, zero coupling.
      for (int k = 0; k < K.outerSize(); ++k)
        for (SpMat::InnerIterator itk(K, k); itk; ++itk)
          if (dir_.fixed[itk.row()] || dir_.fixed[itk.col()])
            itk.valueRef() = itk.row() == itk.col() ? 1.0 : 0.0;
      Eigen::SparseLU<SpMat> lu(K);
      if (lu.info() != Eigen::Success) return false;
      const VecX du = lu.solve(-r);
      if (!du.allFinite()) return false;
      u += du;
    }
    return false;
  }

  // Advance from a converged state at lam_prev to lam_target, bisecting the
  // increment on failure.
  void advance(Real lam_prev, Real lam_target, VecX& u, int depth) {
    VecX trial = u + (affine_field(grid_, program_.mode, lam_target) -
                      affine_field(grid_, program_.mode, lam_prev));
    if (newton(lam_target, trial)) {
      u = trial;
      return;
    }
    if (depth >= opts_.max_bisections)
      throw OptimizationError(
          "forward solve: Newton failed at stretch " + std::to_string(lam_target) +
          " after " + std::to_string(opts_.max_bisections) +
          " bisections (last residual " + std::to_string(last_residual_) +
          " after " + std::to_string(last_iters_ + 1) + " iterations)");
    const Real mid = 0.5 * (lam_prev + lam_target);
    advance(lam_prev, mid, u, depth + 1);
    advance(mid, lam_target, u, depth + 1);
  }

  const Assembler& assembler() const { return asm_; }
  const DirichletSet& dirichlet() const { return dir_; }

 private:
  const Grid2D& grid_;
  Assembler asm_;
  const LoadingProgram& program_;
  ForwardOptions opts_;
  DirichletSet dir_;
  Real last_residual_ = 0.0;
  int last_iters_ = 0;
};

// Traction targets on an edge from the recovered nodal stress field: P at
// each edge node (material of the adjacent edge elements, averaged where two
// meet) times the outward normal.  Exact for spatially uniform stress.
MatX edge_tractions_from_field(const Grid2D& grid, const PhaseMap& phases,
                               const MatX& F_nodal, EdgeId e) {
  const auto idx = edge_node_indices(grid, e);
  const Vec2 N = outward_normal(e);
  const int nex = grid.nx - 1;
  const bool x_edge = e == EdgeId::XMin || e == EdgeId::XMax;
  MatX t(static_cast<int>(idx.size()), 2);
  for (std::size_t q = 0; q < idx.size(); ++q) {
    const int node = idx[q], ix = node % grid.nx, iy = node / grid.nx;
    Mat2 F2;
    F2 << F_nodal(node, 0), F_nodal(node, 1), F_nodal(node, 2), F_nodal(node, 3);
    const Mat3 F3 = lift_plane_strain(F2);
    // Elements along the edge touching this node.
    std::vector<int> els;
    if (x_edge) {
      const int ex = e == EdgeId::XMin ? 0 : nex - 1;
      if (iy > 0) els.push_back((iy - 1) * nex + ex);
      if (iy < grid.ny - 1) els.push_back(iy * nex + ex);
    } else {
      const int ey = e == EdgeId::YMin ? 0 : grid.ny - 2;
      if (ix > 0) els.push_back(ey * nex + ix - 1);
      if (ix < grid.nx - 1) els.push_back(ey * nex + ix);
    }
    Vec2 tr = Vec2::Zero();
    for (int el : els)
      tr += (phases.at_element(el).pk1(F3).topLeftCorner<2, 2>() * N) /
            static_cast<Real>(els.size());
    t.row(q) = tr.transpose();
  }
  return t;
}

}  // namespace

ForwardResult solve_forward(const Grid2D& grid, const PhaseMap& phases,
                            const LoadingProgram& program,
                            const ForwardOptions& opts) {
  grid.validate();
  phases.validate(grid);
  program.validate();

  ForwardResult out;
  out.displacement.grid = grid;
  out.displacement.components = 2;
  out.displacement.steps = program.lambda_steps;
  out.defgrad.grid = grid;
  out.defgrad.components = 4;
  out.defgrad.steps = program.lambda_steps;

  out.boundary.length_x = grid.length_x();
  out.boundary.length_y = grid.length_y();
  out.boundary.steps = program.lambda_steps;
  const int m = static_cast<int>(program.lambda_steps.size());
  out.boundary.fx = VecX::Zero(m);
  out.boundary.fy = VecX::Zero(m);
  for (EdgeId e : {EdgeId::XMin, EdgeId::XMax, EdgeId::YMin, EdgeId::YMax}) {
    out.boundary.edge(e).per_node.resize(m);
    out.edge_reactions[static_cast<int>(e)] = MatX::Zero(m, 2);
  }

  ForwardSolver solver(grid, phases, program, opts);
  VecX u = VecX::Zero(2 * grid.size());
  Real lam_prev = 1.0;
  for (int j = 0; j < m; ++j) {
    const Real lam = program.lambda_steps[j];
    solver.advance(lam_prev, lam, u, 0);
    lam_prev = lam;

    MatX disp(grid.size(), 2);
    for (int i = 0; i < grid.size(); ++i) disp.row(i) << u[2 * i], u[2 * i + 1];
    out.displacement.values.push_back(disp);
    const MatX F_nodal = solver.assembler().nodal_defgrad(u);
    out.defgrad.values.push_back(F_nodal);

    // Reaction sums per edge from the internal nodal forces.
    const VecX r = solver.assembler().internal_force(u);
    for (EdgeId e : {EdgeId::XMin, EdgeId::XMax, EdgeId::YMin, EdgeId::YMax}) {
      Vec2 sum = Vec2::Zero();
      for (int i : edge_node_indices(grid, e))
        sum += Vec2(r[2 * i], r[2 * i + 1]);
      out.edge_reactions[static_cast<int>(e)].row(j) = sum.transpose();
    }

    // Traction targets: free edges carry their exact boundary condition
    // (zero) and enter the traction loss; gripped edges are excluded from the
    // loss but still export the recovered stress times the normal as an
    // optional reference.
    const bool grip_x = program.mode != LoadingMode::UniaxialY;
    const bool grip_y = program.mode != LoadingMode::UniaxialX;
    for (EdgeId e : {EdgeId::XMin, EdgeId::XMax, EdgeId::YMin, EdgeId::YMax}) {
      const bool x_edge = e == EdgeId::XMin || e == EdgeId::XMax;
      const bool gripped = x_edge ? grip_x : grip_y;
      out.boundary.edge(e).in_loss = !gripped;
      out.boundary.edge(e).per_node[j] =
          gripped ? edge_tractions_from_field(grid, phases, F_nodal, e)
                  : MatX::Zero(x_edge ? grid.ny : grid.nx, 2);
    }

    // Force channel: the load cell on the actuated pair (zero when free).
    out.boundary.fx[j] = grip_x ? out.reactions(EdgeId::XMax)(j, 0) : 0.0;
    out.boundary.fy[j] = grip_y ? out.reactions(EdgeId::YMax)(j, 1) : 0.0;
  }

  out.displacement.validate();
  out.defgrad.validate();
  out.boundary.validate(&grid);
  return out;
}

}  // namespace hf
