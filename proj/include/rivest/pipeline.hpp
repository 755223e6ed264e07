// Copyright 2026 The rivest Authors
// SPDX-License-Identifier: Apache-2.0

// Batch orchestration behind `rivest run`: coarse fits on the training curves, prior,
// synthetic dataset, KL model, sigma_c, per-curve estimation and reports. Each stage
// writes one artifact and is skipped when its inputs hash to the recorded key.

#ifndef RIVEST_PIPELINE_HPP
#define RIVEST_PIPELINE_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rivest/embedding.hpp"
#include "rivest/estimation_result.hpp"

namespace rivest
{

struct RunConfig
{
  std::filesystem::path curves_dir;  ///< *.csv records with .json sidecars
  std::filesystem::path output_dir;
  std::optional<std::filesystem::path> prior;   ///< skip coarse fitting
  std::optional<std::filesystem::path> dataset; ///< skip generation
  std::optional<std::filesystem::path> kl;      ///< skip KL fitting
  KernelFamily family = KernelFamily::FirstOrder;
  Formulation formulation = Formulation::SemiInfEquivInfinite;
  std::vector<Method> methods{Method::PBI, Method::NNI};
  std::optional<double> sigma_c;    ///< tuned on the training curves when empty
  std::optional<double> lambda_reg; ///< velocity regularization; negative = calibrate to 4%
  double grid_lo = 0.9;
  double grid_step = 0.005;
  std::size_t grid_count = 121;
  std::size_t n_synth = 1000;
  std::size_t n_modes = 20;
  double train_fraction = 0.9;
  std::size_t refine_budget = 300;
  std::size_t lipo_budget = 1000;
  std::uint64_t seed = 7;
  int workers = 1;
};

/// Missing keys keep their defaults; relative paths resolve against `base`.
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base = {});
nlohmann::json to_json(const RunConfig& config);
void validate(const RunConfig& config);

struct BatchRow
{
  std::string curve;
  std::filesystem::path csv;
  std::string split; ///< "train" or "test"
  Method method = Method::PBI;
  double length = 0.0;
  std::optional<EstimationResult> result;
  std::string error; ///< set when the curve or the method failed
};

struct MethodSummary
{
  std::size_t count = 0;
  double median_rmse = 0.0;
  double median_kld = 0.0;
};

struct BatchReport
{
  std::vector<std::string> curves; ///< sorted file stems
  std::vector<Method> methods;
  std::vector<BatchRow> rows;      ///< curve-major, methods in config order
  /// method name -> split ("train", "test", "all") -> medians over rows with metrics.
  std::map<std::string, std::map<std::string, MethodSummary>> summary;
  nlohmann::json stages;           ///< stage name -> artifact file name and key
  std::vector<std::string> executed; ///< stages run (not skipped) by this invocation; not serialized
};

nlohmann::json to_json(const BatchReport& report);
BatchReport report_from_json(const nlohmann::json& j);
void summarize(BatchReport& report);

/// Curve-level split by a seeded hash of each name: round(fraction * n) train curves.
std::vector<std::string> split_labels(const std::vector<std::string>& names, double fraction, std::uint64_t seed);

/// Model curve of a result at the record's times (closed-form ADE for exchange-free results).
std::vector<double> model_at(const EstimationResult& result, const MeasuredCurve& curve);

BatchReport pipeline_run(const RunConfig& config);

enum class PlotKind
{
  BtcOverlay,
  ErrorCdf,
  ParamScatter,
};

PlotKind parse_plot_kind(std::string_view name);

/// Writes plot-ready CSV files into `dir` and returns their paths. btc-overlay writes
/// one file per curve (time, measured, one column per method); error-cdf one file per
/// method with sorted RMSE and KLD; param-scatter one row per curve.
std::vector<std::filesystem::path> export_plot_data(const BatchReport& report, PlotKind kind,
                                                    const std::filesystem::path& dir);

} // namespace rivest

#endif // RIVEST_PIPELINE_HPP
