// Copyright 2026 The rivest Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef RIVEST_KL_ROM_HPP
#define RIVEST_KL_ROM_HPP

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rivest/execution.hpp"
#include "rivest/laplace_solver.hpp"
#include "rivest/numeric.hpp"

namespace rivest
{

struct SyntheticDataset;

/// Truncated Karhunen-Loeve expansion c(t) = mean(t) + sum_j Z_j phi_j(t) with modes
/// orthonormal under the trapezoid inner product of the grid.
struct KLModel
{
  TimeGrid grid;
  Eigen::VectorXd mean;
  Eigen::VectorXd eigenvalues;  ///< retained, descending
  RowMatrix modes;              ///< n_modes x grid.count
  std::vector<double> spectrum; ///< every computed eigenvalue, descending
  std::string dataset_hash;     ///< provenance of the training set (may be empty)

  std::size_t n_modes() const { return static_cast<std::size_t>(modes.rows()); }
  Eigen::VectorXd weights() const;
};

enum class KLMethod
{
  Auto,     ///< snapshot when curves < grid points, else direct
  Snapshot, ///< eigenproblem of the curve-by-curve Gram matrix
  Direct,   ///< symmetrized weighted covariance on the grid (small grids only)
};

/// Eigenvalues below this fraction of the largest count as zero.
inline constexpr double kRankTolerance = 1e-12;

KLModel fit_kl(const RowMatrix& curves, const TimeGrid& grid, std::size_t n_modes = 20,
               KLMethod method = KLMethod::Auto);
KLModel fit_kl(const SyntheticDataset& dataset, std::size_t n_modes = 20, KLMethod method = KLMethod::Auto);

/// Z_j = sum_k w_k (c_k - mean_k) phi_j(t_k).
Eigen::VectorXd project(const KLModel& model, std::span<const double> curve);
std::vector<double> reconstruct(const KLModel& model, const Eigen::VectorXd& z);

/// Coefficients of every row of `curves` (one row of the result each).
RowMatrix project_all(const KLModel& model, const RowMatrix& curves, Execution execution = Execution::Parallel);

/// Trapezoid L2 norm of a function on the model grid.
double l2_norm(const KLModel& model, std::span<const double> values);

void save_kl(const KLModel& model, const std::filesystem::path& path);
KLModel load_kl(const std::filesystem::path& path);

} // namespace rivest

#endif // RIVEST_KL_ROM_HPP
