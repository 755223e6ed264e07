// Copyright 2026 The rivest Authors
// SPDX-License-Identifier: Apache-2.0

#include "rivest/synthetic_dataset.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>

#include "rivest/container.hpp"
#include "rivest/error.hpp"

namespace rivest
{

namespace
{

constexpr std::string_view kDatasetMagic = "RIVDSET1";
constexpr int kMaxRedraws = 1000;

// Draw stream shared by sample_prior and generate_dataset so that a dataset's
// first n parameter vectors are exactly sample_prior(prior, family, n, seed).
class PriorStream
{
public:
  PriorStream(const LogNormalPrior& prior, KernelFamily family, std::uint64_t seed)
      : mu_(prior.mu_log), family_(family), rng_(seed)
  {
    if (!(prior.b > 0.0))
      throw PreconditionError("prior variance inflation b must be > 0");
    Eigen::LLT<Eigen::Matrix3d> llt(prior.b * prior.sigma_log);
    if (llt.info() != Eigen::Success)
      throw PreconditionError("prior covariance is not positive definite");
    chol_ = llt.matrixL();
  }

  DimensionlessParams next()
  {
    for (int attempt = 0; attempt < kMaxRedraws; ++attempt)
    {
      Eigen::Vector3d z;
      for (int k = 0; k < kParamDim; ++k)
        z[k] = normal_(rng_);
      auto p = DimensionlessParams::from_log(family_, mu_ + chol_ * z);
      if (family_ == KernelFamily::PowerLaw && p.y[2] >= 1.0)
        continue;
      return p;
    }
    throw NumericalError("prior sampling: no admissible draw after " + std::to_string(kMaxRedraws) + " attempts");
  }

private:
  Eigen::Vector3d mu_;
  Eigen::Matrix3d chol_;
  KernelFamily family_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
};

bool admissible(std::span<const double> curve, double step, const GenerateOptions& o)
{
  for (double c : curve)
    if (!(c >= 0.0))
      return false;
  const double m = trapezoid_uniform(curve, step);
  return m >= o.min_mass && m <= o.max_mass;
}

} // namespace

Eigen::Vector3d DimensionlessParams::log() const
{
  return {std::log(y[0]), std::log(y[1]), std::log(y[2])};
}

DimensionlessParams DimensionlessParams::from_log(KernelFamily family, const Eigen::Vector3d& log_y)
{
  return {family, {std::exp(log_y[0]), std::exp(log_y[1]), std::exp(log_y[2])}};
}

void validate(const DimensionlessParams& params)
{
  for (double v : params.y)
    if (!(v > 0.0) || !std::isfinite(v))
      throw PreconditionError("dimensionless parameters must be finite and > 0");
  if (params.family == KernelFamily::PowerLaw && params.y[2] >= 1.0)
    throw PreconditionError("power-law 1 - gamma must lie in (0, 1)");
}

std::array<std::string_view, kParamDim> parameter_names(KernelFamily family)
{
  if (family == KernelFamily::FirstOrder)
    return {"Pe", "beta_kf", "kr"};
  return {"Pe", "beta_alpha", "one_minus_gamma"};
}

TransportParams to_transport(const DimensionlessParams& params, double mass)
{
  TransportParams t;
  t.peclet = params.y[0];
  t.beta = 1.0;
  t.mass = mass;
  if (params.family == KernelFamily::FirstOrder)
    t.kernel = FirstOrder{params.y[1], params.y[2]};
  else
    t.kernel = PowerLaw{params.y[1], 1.0 - params.y[2]};
  return t;
}

std::vector<double> forward_dimensional(const DimensionlessParams& params, Formulation formulation, double velocity,
                                        double length, std::span<const double> times,
                                        const InversionOptions& inversion)
{
  if (!(velocity > 0.0) || !(length > 0.0))
    throw PreconditionError("forward model needs velocity > 0 and length > 0");
  std::vector<double> tau(times.size());
  for (std::size_t i = 0; i < times.size(); ++i)
    tau[i] = times[i] * velocity / length;
  return breakthrough_at(to_transport(params), formulation, tau, inversion);
}

nlohmann::json to_json(const DimensionlessParams& params)
{
  nlohmann::json j;
  j["family"] = std::string(to_string(params.family));
  const auto names = parameter_names(params.family);
  for (int k = 0; k < kParamDim; ++k)
    j[std::string(names[k])] = params.y[k];
  return j;
}

DimensionlessParams params_from_json(const nlohmann::json& j)
{
  DimensionlessParams p;
  p.family = parse_family(j.at("family").get<std::string>());
  const auto names = parameter_names(p.family);
  for (int k = 0; k < kParamDim; ++k)
    p.y[k] = j.at(std::string(names[k])).get<double>();
  validate(p);
  return p;
}

nlohmann::json to_json(const LogNormalPrior& prior)
{
  nlohmann::json j;
  j["mu_log"] = {prior.mu_log[0], prior.mu_log[1], prior.mu_log[2]};
  j["sigma_log"] = nlohmann::json::array();
  for (int r = 0; r < 3; ++r)
    j["sigma_log"].push_back({prior.sigma_log(r, 0), prior.sigma_log(r, 1), prior.sigma_log(r, 2)});
  j["b"] = prior.b;
  if (!prior.inliers.empty())
    j["inliers"] = prior.inliers;
  return j;
}

LogNormalPrior prior_from_json(const nlohmann::json& j)
{
  LogNormalPrior p;
  try
  {
    const auto& mu = j.at("mu_log");
    const auto& sigma = j.at("sigma_log");
    if (mu.size() != 3 || sigma.size() != 3)
      throw FormatError("prior needs mu_log[3] and sigma_log[3][3]");
    for (int r = 0; r < 3; ++r)
    {
      p.mu_log[r] = mu[r].get<double>();
      if (sigma[r].size() != 3)
        throw FormatError("prior sigma_log must be 3x3");
      for (int c = 0; c < 3; ++c)
        p.sigma_log(r, c) = sigma[r][c].get<double>();
    }
    p.b = j.value("b", 2.0);
    if (j.contains("inliers"))
      p.inliers = j["inliers"].get<std::vector<std::size_t>>();
  }
  catch (const nlohmann::json::exception& e)
  {
    throw FormatError(std::string("bad prior: ") + e.what());
  }
  if (!p.sigma_log.isApprox(p.sigma_log.transpose(), 1e-12))
    throw FormatError("prior sigma_log must be symmetric");
  return p;
}

LogNormalPrior fit_prior(std::span<const DimensionlessParams> estimates, double b, double threshold)
{
  constexpr std::size_t kMin = kParamDim + 2;
  if (estimates.size() < kMin)
    throw PreconditionError("prior fitting needs at least " + std::to_string(kMin) + " estimates");
  std::vector<Eigen::Vector3d> logs;
  for (const auto& e : estimates)
  {
    validate(e);
    logs.push_back(e.log());
  }

  LogNormalPrior prior;
  prior.b = b;
  prior.inliers.resize(logs.size());
  for (std::size_t i = 0; i < logs.size(); ++i)
    prior.inliers[i] = i;

  while (true)
  {
    ++prior.iterations;
    const auto n = static_cast<double>(prior.inliers.size());
    Eigen::Vector3d mu = Eigen::Vector3d::Zero();
    for (auto i : prior.inliers)
      mu += logs[i];
    mu /= n;
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (auto i : prior.inliers)
      cov += (logs[i] - mu) * (logs[i] - mu).transpose();
    cov /= n - 1.0;

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    const double top = eig.eigenvalues().maxCoeff();
    if (!(eig.eigenvalues().minCoeff() > 1e-12 * std::max(top, 1.0)))
      throw NumericalError("prior covariance is singular (estimates collinear in log space)");
    const Eigen::Matrix3d inv_sqrt =
        eig.eigenvectors() * eig.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();

    std::vector<std::size_t> kept;
    for (auto i : prior.inliers)
      if ((inv_sqrt * (logs[i] - mu)).norm() <= threshold)
        kept.push_back(i);
    prior.mu_log = mu;
    prior.sigma_log = cov;
    if (kept.size() == prior.inliers.size())
      return prior;
    if (kept.size() < kMin)
      throw NumericalError("outlier rejection left fewer than " + std::to_string(kMin) + " estimates");
    prior.inliers = std::move(kept);
  }
}

std::vector<DimensionlessParams> sample_prior(const LogNormalPrior& prior, KernelFamily family, std::size_t n,
                                              std::uint64_t seed)
{
  PriorStream stream(prior, family, seed);
  std::vector<DimensionlessParams> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(stream.next());
  return out;
}

DimensionlessParams SyntheticDataset::sample(std::size_t i) const
{
  return {family, {samples(i, 0), samples(i, 1), samples(i, 2)}};
}

RowMatrix batch_breakthrough(std::span<const DimensionlessParams> params, Formulation formulation,
                             const TimeGrid& grid, const InversionOptions& inversion, Execution execution)
{
  const auto n = static_cast<std::ptrdiff_t>(params.size());
  RowMatrix curves(n, static_cast<Eigen::Index>(grid.count));
  std::vector<std::optional<std::string>> failures(params.size());

  auto solve = [&](std::ptrdiff_t i) {
    try
    {
      const auto c = breakthrough(to_transport(params[i]), formulation, grid, inversion);
      curves.row(i) = Eigen::Map<const Eigen::RowVectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
    }
    catch (const std::exception& e)
    {
      failures[i] = e.what();
    }
  };

  if (execution == Execution::Parallel)
  {
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < n; ++i)
      solve(i);
  }
  else
  {
    for (std::ptrdiff_t i = 0; i < n; ++i)
      solve(i);
  }

  for (std::size_t i = 0; i < failures.size(); ++i)
    if (failures[i])
      throw NumericalError("forward solve failed for sample " + std::to_string(i) + ": " + *failures[i]);
  return curves;
}

SyntheticDataset generate_dataset(const LogNormalPrior& prior, std::size_t n_synth, Formulation formulation,
                                  KernelFamily family, std::uint64_t seed, const GenerateOptions& options)
{
  if (n_synth == 0)
    throw PreconditionError("dataset size must be > 0");
  PriorStream stream(prior, family, seed);
  std::vector<DimensionlessParams> params;
  params.reserve(n_synth);
  for (std::size_t i = 0; i < n_synth; ++i)
    params.push_back(stream.next());

  SyntheticDataset ds;
  ds.grid = options.grid;
  ds.family = family;
  ds.formulation = formulation;
  ds.prior = prior;
  ds.seed = seed;
  ds.curves = batch_breakthrough(params, formulation, options.grid, options.inversion, options.execution);

  std::vector<std::size_t> pending;
  auto collect = [&](const std::vector<std::size_t>& candidates) {
    pending.clear();
    for (auto i : candidates)
    {
      const auto row = ds.curves.row(static_cast<Eigen::Index>(i));
      if (!admissible(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())), ds.grid.step,
                      options))
        pending.push_back(i);
    }
  };
  std::vector<std::size_t> all(n_synth);
  for (std::size_t i = 0; i < n_synth; ++i)
    all[i] = i;
  collect(all);

  for (int round = 0; !pending.empty(); ++round)
  {
    if (round >= options.max_rounds)
      throw NumericalError("dataset generation: " + std::to_string(pending.size()) +
                           " draws still outside the mass window after " + std::to_string(options.max_rounds) +
                           " rounds");
    std::vector<DimensionlessParams> redraw;
    for (std::size_t k = 0; k < pending.size(); ++k)
      redraw.push_back(stream.next());
    ds.replaced += pending.size();
    const RowMatrix fresh = batch_breakthrough(redraw, formulation, options.grid, options.inversion, options.execution);
    const auto replaced = pending;
    for (std::size_t k = 0; k < replaced.size(); ++k)
    {
      params[replaced[k]] = redraw[k];
      ds.curves.row(static_cast<Eigen::Index>(replaced[k])) = fresh.row(static_cast<Eigen::Index>(k));
    }
    collect(replaced);
  }

  ds.samples.resize(static_cast<Eigen::Index>(n_synth), kParamDim);
  for (std::size_t i = 0; i < n_synth; ++i)
    for (int k = 0; k < kParamDim; ++k)
      ds.samples(static_cast<Eigen::Index>(i), k) = params[i].y[k];
  return ds;
}

void save_dataset(const SyntheticDataset& dataset, const std::filesystem::path& path)
{
  nlohmann::json h;
  h["kind"] = "synthetic_dataset";
  h["grid"] = {{"step", dataset.grid.step}, {"count", dataset.grid.count}};
  h["family"] = std::string(to_string(dataset.family));
  h["formulation"] = to_int(dataset.formulation);
  h["seed"] = dataset.seed;
  h["prior"] = to_json(dataset.prior);
  h["n_synth"] = dataset.size();
  h["mass"] = dataset.mass;
  h["replaced"] = dataset.replaced;
  write_container(path, kDatasetMagic, h, {{"samples", &dataset.samples}, {"curves", &dataset.curves}});
}

SyntheticDataset load_dataset(const std::filesystem::path& path)
{
  auto c = read_container(path, kDatasetMagic);
  SyntheticDataset ds;
  try
  {
    const auto& h = c.header;
    ds.grid.step = h.at("grid").at("step").get<double>();
    ds.grid.count = h.at("grid").at("count").get<std::size_t>();
    ds.family = parse_family(h.at("family").get<std::string>());
    ds.formulation = formulation_from_int(h.at("formulation").get<int>());
    ds.seed = h.at("seed").get<std::uint64_t>();
    ds.prior = prior_from_json(h.at("prior"));
    ds.mass = h.value("mass", 1.0);
    ds.replaced = h.value("replaced", std::size_t{0});
  }
  catch (const nlohmann::json::exception& e)
  {
    throw FormatError(path.string() + ": bad dataset header: " + e.what());
  }
  ds.samples = c.matrix("samples");
  ds.curves = c.matrix("curves");
  if (ds.samples.cols() != kParamDim || ds.curves.rows() != ds.samples.rows() ||
      ds.curves.cols() != static_cast<Eigen::Index>(ds.grid.count))
    throw FormatError(path.string() + ": dataset matrix shapes disagree with the header");
  return ds;
}

} // namespace rivest
