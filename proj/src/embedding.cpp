// Copyright 2026 The rivest Authors
// SPDX-License-Identifier: Apache-2.0

#include "rivest/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>

#include "rivest/error.hpp"
#include "rivest/metrics.hpp"

namespace rivest
{

namespace
{

struct Design
{
  Eigen::MatrixXd a; // N* x N
  Eigen::VectorXd b; // N*
};

Design design(const MeasuredCurve& curve, const KLModel& kl, double v)
{
  if (!(v > 0.0))
    throw PreconditionError("embed: velocity must be > 0");
  const std::size_t n = curve.size();
  const auto modes = static_cast<Eigen::Index>(kl.n_modes());
  const double scale = v / curve.length;
  const double t_end = kl.grid.last();
  const std::span<const double> mean(kl.mean.data(), static_cast<std::size_t>(kl.mean.size()));

  std::vector<double> mean_at(n);
  double denom = 0.0, data_sum = 0.0;
  bool inside = false;
  for (std::size_t i = 0; i < n; ++i)
  {
    const double tau = curve.times[i] * scale;
    inside = inside || tau <= t_end;
    mean_at[i] = interp_uniform(mean, kl.grid.step, tau);
    denom += mean_at[i] * curve.weights[i];
    data_sum += curve.concentrations[i] * curve.weights[i];
  }
  if (!inside || !(denom > 0.0))
    throw NumericalError("embed: no sample maps inside the KL grid at v = " + std::to_string(v));
  if (!(data_sum > 0.0))
    throw PreconditionError("embed: measured mass is zero");

  Design d;
  d.a.resize(static_cast<Eigen::Index>(n), modes);
  d.b.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
  {
    const auto r = static_cast<Eigen::Index>(i);
    const double tau = curve.times[i] * scale;
    const double w = curve.weights[i] / denom;
    for (Eigen::Index j = 0; j < modes; ++j)
    {
      const std::span<const double> phi(kl.modes.row(j).data(), kl.grid.count);
      d.a(r, j) = interp_uniform(phi, kl.grid.step, tau) * w;
    }
    d.b[r] = curve.concentrations[i] * curve.weights[i] / data_sum - mean_at[i] * w;
  }
  return d;
}

Eigen::VectorXd solve(const Design& d, const KLModel& kl, double sigma_c)
{
  if (!(sigma_c > 0.0))
    throw PreconditionError("embed: sigma_c must be > 0");
  const auto rows = d.a.rows();
  const auto modes = d.a.cols();
  const double data_scale = 1.0 / (std::sqrt(static_cast<double>(rows)) * sigma_c);
  // Stacked form [A / (sqrt(N) sigma); diag(lambda)^-1/2] Z = [b / (sqrt(N) sigma); 0],
  // solved by QR instead of forming the normal equations.
  Eigen::MatrixXd stacked(rows + modes, modes);
  stacked.topRows(rows) = d.a * data_scale;
  stacked.bottomRows(modes) = kl.eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(rows + modes);
  rhs.head(rows) = d.b * data_scale;
  return stacked.colPivHouseholderQr().solve(rhs);
}

} // namespace

std::vector<double> VelocityGrid::velocities() const
{
  std::vector<double> v(count);
  for (std::size_t m = 0; m < count; ++m)
    v[m] = velocity(m);
  return v;
}

MeasuredCurve pad_with_zeros(const MeasuredCurve& curve)
{
  const std::size_t n = curve.size();
  double h = 0.0;
  for (std::size_t i = 1; i < n; ++i)
    h = std::max(h, curve.times[i] - curve.times[i - 1]);
  const double end = kWindowPeaks * curve.t_peak();
  const double slack = 1e-9 * h;

  std::vector<double> before;
  for (int k = 1;; ++k)
  {
    const double t = curve.times.front() - k * h;
    if (t < -slack)
      break;
    before.push_back(std::max(0.0, t));
    if (t <= slack)
      break;
  }
  std::vector<double> times(before.rbegin(), before.rend());
  std::vector<double> conc(times.size(), 0.0);
  times.insert(times.end(), curve.times.begin(), curve.times.end());
  conc.insert(conc.end(), curve.concentrations.begin(), curve.concentrations.end());
  for (int k = 1;; ++k)
  {
    const double t = curve.times.back() + k * h;
    if (t > end + slack)
      break;
    times.push_back(t);
    conc.push_back(0.0);
  }
  auto padded = make_curve(std::move(times), std::move(conc), curve.length, curve.metadata);
  padded.name = curve.name;
  return padded;
}

EmbedSystem embed_system(const MeasuredCurve& curve, const KLModel& kl, double v, double sigma_c)
{
  const auto d = design(curve, kl, v);
  const double c = 1.0 / (static_cast<double>(d.a.rows()) * sigma_c * sigma_c);
  EmbedSystem s;
  s.lhs = c * d.a.transpose() * d.a;
  s.lhs.diagonal() += kl.eigenvalues.cwiseInverse();
  s.rhs = c * d.a.transpose() * d.b;
  return s;
}

Eigen::VectorXd embed(const MeasuredCurve& curve, const KLModel& kl, double v, double sigma_c)
{
  return solve(design(curve, kl, v), kl, sigma_c);
}

EmbeddedCurve embed_over_velocities(const MeasuredCurve& curve, const KLModel& kl, const VelocityGrid& grid,
                                    double sigma_c, Execution execution)
{
  EmbeddedCurve out;
  out.velocities = grid.velocities();
  out.sigma_c = sigma_c;
  out.peak_velocity = grid.peak_velocity;
  const auto m = static_cast<std::ptrdiff_t>(out.velocities.size());
  out.z = RowMatrix::Zero(m, static_cast<Eigen::Index>(kl.n_modes()));
  std::vector<char> ok(out.velocities.size(), 0);
  std::vector<std::optional<std::string>> hard(out.velocities.size());

  auto one = [&](std::ptrdiff_t i) {
    try
    {
      out.z.row(i) = embed(curve, kl, out.velocities[static_cast<std::size_t>(i)], sigma_c).transpose();
      ok[static_cast<std::size_t>(i)] = 1;
    }
    catch (const NumericalError&)
    {
      // infeasible velocity: flagged, skipped downstream
    }
    catch (const std::exception& e)
    {
      hard[static_cast<std::size_t>(i)] = e.what();
    }
  };
  if (execution == Execution::Parallel)
  {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < m; ++i)
      one(i);
  }
  else
  {
    for (std::ptrdiff_t i = 0; i < m; ++i)
      one(i);
  }
  for (const auto& h : hard)
    if (h)
      throw PreconditionError(*h);
  out.feasible.assign(ok.begin(), ok.end());
  return out;
}

std::vector<double> default_sigma_candidates()
{
  return logspace(1e-4, 1e1, 25);
}

SigmaTuning tune_sigma_c(std::span<const MeasuredCurve> curves, const KLModel& kl,
                         std::span<const double> candidates, std::uint64_t seed)
{
  if (candidates.empty())
    throw PreconditionError("tune_sigma_c: empty candidate list");
  if (curves.empty())
    throw PreconditionError("tune_sigma_c: no curves");
  SigmaTuning out;
  out.candidates.assign(candidates.begin(), candidates.end());
  if (candidates.size() == 1)
  {
    out.sigma_c = candidates.front();
    out.scores = {0.0};
    return out;
  }

  struct Split
  {
    MeasuredCurve train;
    std::vector<double> val_t, val_c;
  };
  std::mt19937_64 rng(seed);
  std::vector<Split> splits;
  for (const auto& curve : curves)
  {
    std::vector<std::size_t> nonzero;
    for (std::size_t i = 0; i < curve.size(); ++i)
      if (curve.concentrations[i] > 0.0)
        nonzero.push_back(i);
    if (nonzero.size() < 5)
      throw PreconditionError("tune_sigma_c: every curve needs at least five nonzero samples");
    std::shuffle(nonzero.begin(), nonzero.end(), rng);
    const auto n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.2 * nonzero.size())));
    std::vector<char> held(curve.size(), 0);
    for (std::size_t k = 0; k < n_val; ++k)
      held[nonzero[k]] = 1;
    Split s;
    std::vector<double> tt, tc;
    for (std::size_t i = 0; i < curve.size(); ++i)
    {
      if (held[i])
      {
        s.val_t.push_back(curve.times[i]);
        s.val_c.push_back(curve.concentrations[i]);
      }
      else
      {
        tt.push_back(curve.times[i]);
        tc.push_back(curve.concentrations[i]);
      }
    }
    s.train = make_curve(std::move(tt), std::move(tc), curve.length);
    splits.push_back(std::move(s));
  }

  out.scores.assign(candidates.size(), 0.0);
  for (std::size_t c = 0; c < candidates.size(); ++c)
  {
    double log_sum = 0.0;
    for (const auto& s : splits)
    {
      const auto& tr = s.train;
      const double v = curves[static_cast<std::size_t>(&s - splits.data())].peak_velocity();
      const auto z = embed(tr, kl, v, candidates[c]);
      const auto model = reconstruct(kl, z);
      const std::span<const double> mean(kl.mean.data(), static_cast<std::size_t>(kl.mean.size()));
      double denom = 0.0, data_sum = 0.0;
      for (std::size_t i = 0; i < tr.size(); ++i)
      {
        denom += interp_uniform(mean, kl.grid.step, tr.times[i] * v / tr.length) * tr.weights[i];
        data_sum += tr.concentrations[i] * tr.weights[i];
      }
      double err = 0.0;
      for (std::size_t i = 0; i < s.val_t.size(); ++i)
      {
        const double predicted = interp_uniform(model, kl.grid.step, s.val_t[i] * v / tr.length) / denom;
        const double d = s.val_c[i] / data_sum - predicted;
        err += d * d;
      }
      log_sum += std::log(std::max(std::sqrt(err), std::numeric_limits<double>::min()));
    }
    out.scores[c] = std::exp(log_sum / static_cast<double>(splits.size()));
  }
  const auto best = std::min_element(out.scores.begin(), out.scores.end()) - out.scores.begin();
  out.sigma_c = candidates[static_cast<std::size_t>(best)];
  return out;
}

} // namespace rivest
