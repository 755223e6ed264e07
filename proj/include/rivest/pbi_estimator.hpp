// Copyright 2026 The rivest Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef RIVEST_PBI_ESTIMATOR_HPP
#define RIVEST_PBI_ESTIMATOR_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rivest/embedding.hpp"
#include "rivest/estimation_result.hpp"
#include "rivest/execution.hpp"
#include "rivest/synthetic_dataset.hpp"

namespace rivest
{

struct SimplexProjection
{
  Eigen::VectorXd point;             ///< r*
  std::vector<double> rho;           ///< barycentric weights of the kept vertices
  std::vector<std::size_t> vertices; ///< ids of the kept vertices
  int removed = 0;                   ///< vertices dropped by the greedy rule
};

/// Orthogonal projection of z onto the affine hull of the vertex rows. While a
/// barycentric weight is negative (or the hull is degenerate) the vertex furthest from z
/// is dropped, ties going to the lower id, until the weights are non-negative or one
/// vertex remains.
SimplexProjection project_onto_simplex(const Eigen::VectorXd& z, const RowMatrix& vertex_coords,
                                       std::span<const std::size_t> ids);

/// Dataset members in KL space with their parameters.
struct Manifold
{
  const SyntheticDataset* dataset = nullptr;
  const RowMatrix* z = nullptr; ///< project_all(kl, dataset.curves)
};

struct PbiOptions
{
  std::optional<double> lambda_reg; ///< weight of (v / v_peak - 1)^2 in the loss
  Execution execution = Execution::Parallel;
};

struct PbiTrace
{
  std::vector<double> loss; ///< per velocity; +inf where infeasible
};

/// Exhaustive velocity scan: project Z*(v) onto its 4-nearest-neighbour simplex and pick
/// the velocity with least (regularized) squared distance; log-space barycentric parameters.
EstimationResult estimate_pbi(const EmbeddedCurve& embedded, const Manifold& manifold, const PbiOptions& options = {},
                              PbiTrace* trace = nullptr);

/// argmin over (member, velocity) of |Z*(v) - Z_i|.
EstimationResult estimate_nni(const EmbeddedCurve& embedded, const Manifold& manifold,
                              Execution execution = Execution::Parallel);

/// Direct L2 search over members and velocities on the full synthetic grid (no KL).
EstimationResult estimate_exhaustive(const MeasuredCurve& curve, const SyntheticDataset& dataset,
                                     const VelocityGrid& grid);

struct RegularizationWeight
{
  double lambda = 0.0;
  double mean_deviation = 0.0; ///< mean |v*/v_peak - 1| at lambda
  bool reached = true;         ///< false: endpoint returned, target not bracketed
  bool monotone = true;        ///< mean deviation non-increasing over the probed lambdas
};

/// Bisection (in log lambda) for the weight whose mean relative velocity deviation over
/// `curves` is `target` +- `tolerance`.
RegularizationWeight regularization_weight(std::span<const EmbeddedCurve> curves, const Manifold& manifold,
                                           double target = 0.04, double tolerance = 0.005,
                                           double lambda_max = 1e6);

} // namespace rivest

#endif // RIVEST_PBI_ESTIMATOR_HPP
