// Copyright 2026 The rivest Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef RIVEST_SYNTHETIC_DATASET_HPP
#define RIVEST_SYNTHETIC_DATASET_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "rivest/execution.hpp"
#include "rivest/laplace_solver.hpp"
#include "rivest/memory_kernels.hpp"
#include "rivest/numeric.hpp"

namespace rivest
{

inline constexpr int kParamDim = 3;

/// Dimensionless parameter vector y. FirstOrder: (Pe, beta*k_f, k_r);
/// PowerLaw: (Pe, beta*alpha, 1 - gamma).
struct DimensionlessParams
{
  KernelFamily family = KernelFamily::FirstOrder;
  std::array<double, kParamDim> y{100.0, 1.0, 1.0};

  Eigen::Vector3d log() const;
  static DimensionlessParams from_log(KernelFamily family, const Eigen::Vector3d& log_y);
};

void validate(const DimensionlessParams& params);

/// Component names as used in JSON output.
std::array<std::string_view, kParamDim> parameter_names(KernelFamily family);

/// Forward-model parameters with beta = 1 carrying the product in the kernel.
TransportParams to_transport(const DimensionlessParams& params, double mass = 1.0);

/// Dimensional breakthrough c(L, t) = c_hat(t v / L) at unit dimensionless mass.
std::vector<double> forward_dimensional(const DimensionlessParams& params, Formulation formulation, double velocity,
                                        double length, std::span<const double> times,
                                        const InversionOptions& inversion = {});

nlohmann::json to_json(const DimensionlessParams& params);
DimensionlessParams params_from_json(const nlohmann::json& j);

/// Multivariate lognormal prior ln y ~ N(mu_log, b * sigma_log).
struct LogNormalPrior
{
  Eigen::Vector3d mu_log = Eigen::Vector3d::Zero();
  Eigen::Matrix3d sigma_log = Eigen::Matrix3d::Identity();
  double b = 2.0;
  std::vector<std::size_t> inliers; ///< estimate indices kept by outlier rejection
  int iterations = 0;
};

nlohmann::json to_json(const LogNormalPrior& prior);
LogNormalPrior prior_from_json(const nlohmann::json& j);

/// Mean/covariance of ln y with iterative removal of samples whose Mahalanobis
/// distance exceeds `threshold`.
LogNormalPrior fit_prior(std::span<const DimensionlessParams> estimates, double b = 2.0, double threshold = 4.0);

/// n independent draws. PowerLaw draws with 1 - gamma >= 1 are redrawn.
std::vector<DimensionlessParams> sample_prior(const LogNormalPrior& prior, KernelFamily family, std::size_t n,
                                              std::uint64_t seed);

struct SyntheticDataset
{
  TimeGrid grid;
  KernelFamily family = KernelFamily::FirstOrder;
  Formulation formulation = Formulation::SemiInfEquivInfinite;
  LogNormalPrior prior;
  std::uint64_t seed = 0;
  double mass = 1.0;
  std::size_t replaced = 0; ///< draws discarded by the mass check
  RowMatrix samples;        ///< n x 3, y per row
  RowMatrix curves;         ///< n x grid.count

  std::size_t size() const { return static_cast<std::size_t>(samples.rows()); }
  DimensionlessParams sample(std::size_t i) const;
};

struct GenerateOptions
{
  TimeGrid grid = TimeGrid::canonical();
  InversionOptions inversion;
  Execution execution = Execution::Parallel;
  double min_mass = 0.5;   ///< accepted window mass range, relative to the released mass
  double max_mass = 1.001;
  int max_rounds = 1000;
};

/// Breakthrough curves of many parameter vectors (one row each) at unit mass.
/// Solver failures are rethrown as NumericalError naming the lowest failing index.
RowMatrix batch_breakthrough(std::span<const DimensionlessParams> params, Formulation formulation,
                             const TimeGrid& grid, const InversionOptions& inversion = {},
                             Execution execution = Execution::Parallel);

/// Samples the prior and solves the forward model for each draw. Draws whose window
/// mass leaves [min_mass, max_mass] are replaced by further draws from the same stream.
SyntheticDataset generate_dataset(const LogNormalPrior& prior, std::size_t n_synth, Formulation formulation,
                                  KernelFamily family, std::uint64_t seed, const GenerateOptions& options = {});

void save_dataset(const SyntheticDataset& dataset, const std::filesystem::path& path);
SyntheticDataset load_dataset(const std::filesystem::path& path);

} // namespace rivest

#endif // RIVEST_SYNTHETIC_DATASET_HPP
