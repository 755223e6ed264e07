// Copyright 2026 The rivest Authors
// SPDX-License-Identifier: Apache-2.0

#include "rivest/kl_rom.hpp"

#include <cmath>
#include <string>

#include "rivest/container.hpp"
#include "rivest/error.hpp"
#include "rivest/synthetic_dataset.hpp"

namespace rivest
{

namespace
{

constexpr std::string_view kKLMagic = "RIVKLM01";
constexpr double kZeroVariance = 1e-24;

struct Spectrum
{
  Eigen::VectorXd values;  // descending
  Eigen::MatrixXd vectors; // column j belongs to values[j]
};

// Snapshot route: Gram matrix G = X W X^T / (n-1), phi = X^T u / sqrt((n-1) lambda).
Spectrum snapshot_spectrum(const RowMatrix& centered, const Eigen::VectorXd& w)
{
  const double denom = static_cast<double>(centered.rows() - 1);
  const RowMatrix xw = centered * w.asDiagonal();
  const Eigen::MatrixXd gram = (xw * centered.transpose()) / denom;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success)
    throw NumericalError("KL: Gram eigen-decomposition failed");
  return {eig.eigenvalues().reverse(), eig.eigenvectors().rowwise().reverse()};
}

RowMatrix snapshot_modes(const Spectrum& s, const RowMatrix& centered, Eigen::Index keep)
{
  const double denom = static_cast<double>(centered.rows() - 1);
  RowMatrix modes(keep, centered.cols());
  for (Eigen::Index j = 0; j < keep; ++j)
    modes.row(j) = (centered.transpose() * s.vectors.col(j)).transpose() / std::sqrt(denom * s.values[j]);
  return modes;
}

// Direct route: W^{1/2} C W^{1/2} v = lambda v, phi = W^{-1/2} v.
Spectrum direct_spectrum(const RowMatrix& centered, const Eigen::VectorXd& w)
{
  const double denom = static_cast<double>(centered.rows() - 1);
  const Eigen::MatrixXd xs = centered * w.cwiseSqrt().asDiagonal();
  const Eigen::MatrixXd cov = (xs.transpose() * xs) / denom;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success)
    throw NumericalError("KL: covariance eigen-decomposition failed");
  return {eig.eigenvalues().reverse(), eig.eigenvectors().rowwise().reverse()};
}

RowMatrix direct_modes(const Spectrum& s, const Eigen::VectorXd& w, Eigen::Index keep)
{
  const Eigen::VectorXd sw = w.cwiseSqrt();
  RowMatrix modes(keep, w.size());
  for (Eigen::Index j = 0; j < keep; ++j)
    modes.row(j) = s.vectors.col(j).cwiseQuotient(sw).transpose();
  return modes;
}

// Two passes of weighted Gram-Schmidt bring the modes to orthonormality at round-off level.
void orthonormalize(RowMatrix& modes, const Eigen::VectorXd& w)
{
  for (int pass = 0; pass < 2; ++pass)
    for (Eigen::Index j = 0; j < modes.rows(); ++j)
    {
      for (Eigen::Index i = 0; i < j; ++i)
        modes.row(j) -= (modes.row(j).cwiseProduct(w.transpose()).dot(modes.row(i))) * modes.row(i);
      modes.row(j) /= std::sqrt(modes.row(j).cwiseProduct(w.transpose()).dot(modes.row(j)));
    }
}

void fix_signs(RowMatrix& modes)
{
  for (Eigen::Index j = 0; j < modes.rows(); ++j)
  {
    Eigen::Index at = 0;
    modes.row(j).cwiseAbs().maxCoeff(&at);
    if (modes(j, at) < 0.0)
      modes.row(j) *= -1.0;
  }
}

void check_grid(const KLModel& model, std::size_t size)
{
  if (size != model.grid.count)
    throw PreconditionError("curve has " + std::to_string(size) + " samples but the KL grid has " +
                            std::to_string(model.grid.count));
}

} // namespace

Eigen::VectorXd KLModel::weights() const
{
  const auto w = trapezoid_weights(grid.count, grid.step);
  return Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
}

KLModel fit_kl(const RowMatrix& curves, const TimeGrid& grid, std::size_t n_modes, KLMethod method)
{
  if (curves.cols() != static_cast<Eigen::Index>(grid.count))
    throw PreconditionError("KL: curve length does not match the grid");
  if (n_modes == 0)
    throw PreconditionError("KL: at least one mode is required");
  if (static_cast<std::size_t>(curves.rows()) < n_modes + 1)
    throw PreconditionError("KL: need at least n_modes + 1 curves");

  KLModel model;
  model.grid = grid;
  model.mean = curves.colwise().mean().transpose();
  const RowMatrix centered = curves.rowwise() - model.mean.transpose();
  const Eigen::VectorXd w = model.weights();

  if (method == KLMethod::Auto)
    method = curves.rows() < curves.cols() ? KLMethod::Snapshot : KLMethod::Direct;

  const bool snapshot = method == KLMethod::Snapshot;
  const Spectrum s = snapshot ? snapshot_spectrum(centered, w) : direct_spectrum(centered, w);
  // Variance at round-off level relative to the mean's energy counts as none.
  const double energy = model.mean.cwiseProduct(model.mean).dot(w);
  const double top = s.values.size() > 0 ? s.values[0] : 0.0;
  if (!(top > kZeroVariance * energy))
    throw NumericalError("KL: the ensemble has zero variance (all curves identical)");
  std::size_t rank = 0;
  for (Eigen::Index j = 0; j < s.values.size(); ++j)
    if (s.values[j] > kRankTolerance * top)
      ++rank;
  if (n_modes > rank)
    throw NumericalError("KL: requested " + std::to_string(n_modes) + " modes but the ensemble has numerical rank " +
                         std::to_string(rank));

  const auto keep = static_cast<Eigen::Index>(n_modes);
  model.modes = snapshot ? snapshot_modes(s, centered, keep) : direct_modes(s, w, keep);
  orthonormalize(model.modes, w);
  fix_signs(model.modes);
  model.eigenvalues = s.values.head(static_cast<Eigen::Index>(n_modes));
  model.spectrum.reserve(static_cast<std::size_t>(s.values.size()));
  for (Eigen::Index j = 0; j < s.values.size(); ++j)
    model.spectrum.push_back(std::max(0.0, s.values[j]));
  return model;
}

KLModel fit_kl(const SyntheticDataset& dataset, std::size_t n_modes, KLMethod method)
{
  return fit_kl(dataset.curves, dataset.grid, n_modes, method);
}

Eigen::VectorXd project(const KLModel& model, std::span<const double> curve)
{
  check_grid(model, curve.size());
  const Eigen::Map<const Eigen::VectorXd> c(curve.data(), static_cast<Eigen::Index>(curve.size()));
  const Eigen::VectorXd centered = (c - model.mean).cwiseProduct(model.weights());
  return model.modes * centered;
}

std::vector<double> reconstruct(const KLModel& model, const Eigen::VectorXd& z)
{
  if (static_cast<std::size_t>(z.size()) != model.n_modes())
    throw PreconditionError("KL: coefficient vector length differs from the number of modes");
  const Eigen::VectorXd c = model.mean + model.modes.transpose() * z;
  return {c.data(), c.data() + c.size()};
}

RowMatrix project_all(const KLModel& model, const RowMatrix& curves, Execution execution)
{
  check_grid(model, static_cast<std::size_t>(curves.cols()));
  const Eigen::VectorXd w = model.weights();
  const auto n = curves.rows();
  RowMatrix z(n, static_cast<Eigen::Index>(model.n_modes()));
  auto one = [&](Eigen::Index i) {
    z.row(i) = (model.modes * (curves.row(i).transpose() - model.mean).cwiseProduct(w)).transpose();
  };
  if (execution == Execution::Parallel)
  {
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i)
      one(i);
  }
  else
  {
    for (Eigen::Index i = 0; i < n; ++i)
      one(i);
  }
  return z;
}

double l2_norm(const KLModel& model, std::span<const double> values)
{
  check_grid(model, values.size());
  const Eigen::Map<const Eigen::VectorXd> v(values.data(), static_cast<Eigen::Index>(values.size()));
  return std::sqrt(v.cwiseProduct(v).dot(model.weights()));
}

void save_kl(const KLModel& model, const std::filesystem::path& path)
{
  nlohmann::json h;
  h["kind"] = "kl_model";
  h["grid"] = {{"step", model.grid.step}, {"count", model.grid.count}};
  h["n_modes"] = model.n_modes();
  h["dataset_sha256"] = model.dataset_hash;
  RowMatrix mean = model.mean.transpose();
  RowMatrix eig = model.eigenvalues.transpose();
  RowMatrix spectrum(1, static_cast<Eigen::Index>(model.spectrum.size()));
  for (std::size_t j = 0; j < model.spectrum.size(); ++j)
    spectrum(0, static_cast<Eigen::Index>(j)) = model.spectrum[j];
  write_container(path, kKLMagic, h,
                  {{"mean", &mean}, {"eigenvalues", &eig}, {"modes", &model.modes}, {"spectrum", &spectrum}});
}

KLModel load_kl(const std::filesystem::path& path)
{
  auto c = read_container(path, kKLMagic);
  KLModel m;
  try
  {
    m.grid.step = c.header.at("grid").at("step").get<double>();
    m.grid.count = c.header.at("grid").at("count").get<std::size_t>();
    m.dataset_hash = c.header.value("dataset_sha256", std::string());
  }
  catch (const nlohmann::json::exception& e)
  {
    throw FormatError(path.string() + ": bad KL header: " + e.what());
  }
  m.mean = c.matrix("mean").row(0).transpose();
  m.eigenvalues = c.matrix("eigenvalues").row(0).transpose();
  m.modes = c.matrix("modes");
  const auto& s = c.matrix("spectrum");
  m.spectrum.assign(s.data(), s.data() + s.size());
  if (m.mean.size() != static_cast<Eigen::Index>(m.grid.count) || m.modes.cols() != m.mean.size() ||
      m.modes.rows() != m.eigenvalues.size())
    throw FormatError(path.string() + ": KL matrix shapes disagree with the header");
  return m;
}

} // namespace rivest
