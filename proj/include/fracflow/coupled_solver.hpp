#pragma once

#include "fracflow/coupled_mesh.hpp"
#include "fracflow/discretization.hpp"

namespace fracflow {

/// Monolithic solution of the coupled reservoir/fracture problem on a
/// CoupledMesh. `reduced == false`: the fracture is the resolved strip of
/// triangles with the nonlinear mobility f_beta (alpha = 1/k_f) inside.
/// `reduced == true`: all triangles carry the Darcy coefficient k_p and the
/// fracture acts through 1-D line elements on its centerline with
/// thickness-integrated coefficients L11 and line source (Q/|Omega|) A.
struct CoupledSolution {
  const CoupledMesh* mesh = nullptr;
  VectorXd W;
  PicardStats stats;
  SparseSystem system;  // assembled at the converged iterate
  bool reduced = false;
  double omega_vol = 0.0;  // |Omega| used in the source density

  // Line-only operator at the converged state (reduced model only); the
  // residual (A_line W - b_line) is the discrete matrix-to-fracture flux.
  SparseMat A_line;
  VectorXd b_line;
  VectorXd line_weight;  // lumped |du| per node (0 off the lines)
};

CoupledSolution solve_coupled_original(const ReservoirScenario& scn,
                                       const CoupledMesh& mesh,
                                       const PicardConfig& cfg = {});

CoupledSolution solve_coupled_reduced(const ReservoirScenario& scn,
                                      const CoupledMesh& mesh,
                                      const PicardConfig& cfg = {});

/// Volume-weighted mean of a nodal field over Omega (triangles plus, for the
/// reduced model, the thickness-weighted fracture lines).
double domain_mean(const CoupledSolution& sol, const ReservoirScenario& scn,
                   const VectorXd& field);

/// Plain average of a nodal field over the well boundary nodes.
double well_mean(const CoupledSolution& sol, const VectorXd& field);

/// Diffusive capacity J = Q / (mean_Omega W - mean_well W).
double diffusive_capacity(const CoupledSolution& sol, const ReservoirScenario& scn);

/// Total discrete flux out of the domain through the well boundary
/// (equals Q up to solver tolerance for every converged solve).
double well_outflux(const CoupledSolution& sol);

/// Affine-in-time pressure built on a steady auxiliary solution:
/// p(x, t) = W(x) - gamma * A * t + K.
struct PssState {
  VectorXd W;
  double gamma = 1.0;
  double A = 0.0;  // Q / |Omega|
  double K = 0.0;
};

VectorXd pss_reconstruct(const PssState& state, double t);

/// Nodal matrix-to-fracture flux density of a reduced solution: the residual
/// of the line-only operator divided by the lumped |du| weight. Zero on
/// nodes off the fracture lines; meaningless at Dirichlet (well) nodes.
VectorXd line_flux_density(const CoupledSolution& sol);

/// Squared L2 norm of grad(W1 - W2) over the porous matrix (region -1)
/// triangles of the mesh.
double grad_diff_sq_matrix(const CoupledMesh& mesh, const VectorXd& W1,
                           const VectorXd& W2);

struct DifferenceStudyRow {
  double H = 0.0;            // thickness amplitude
  double diff_grad_sq = 0.0; // |grad(W - Wbar)|^2 over the matrix
  double max_qbar_over_h = 0.0;
  int picard_pd = 0;
  int picard_r1 = 0;
};

struct DifferenceStudy {
  std::vector<DifferenceStudyRow> rows;
  double slope = 0.0;  // log-log slope of diff_grad_sq vs H
};

/// For each thickness amplitude H, builds the scenario, meshes it, solves
/// both coupled models on the same mesh, and records the matrix-side
/// gradient difference plus the max |qbar/h| diagnostic.
DifferenceStudy coupled_difference_study(
    const std::function<ReservoirScenario(double)>& scenario_of_H,
    const std::vector<double>& h_list, const MeshControls& ctl,
    const PicardConfig& cfg = {});

}  // namespace fracflow
