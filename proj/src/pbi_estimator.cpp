// Copyright 2026 The rivest Authors
// SPDX-License-Identifier: Apache-2.0

#include "rivest/pbi_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rivest/error.hpp"

namespace rivest
{

namespace
{

constexpr double kNegativeWeight = -1e-12;
constexpr std::size_t kSimplexSize = kParamDim + 1;

void check_manifold(const Manifold& m, const EmbeddedCurve& e)
{
  if (m.dataset == nullptr || m.z == nullptr)
    throw PreconditionError("manifold needs a dataset and its KL coefficients");
  if (m.z->rows() != static_cast<Eigen::Index>(m.dataset->size()))
    throw PreconditionError("manifold coefficient rows differ from the dataset size");
  if (e.z.cols() != m.z->cols())
    throw PreconditionError("embedded curve and manifold use different KL truncations");
}

std::vector<std::size_t> nearest(const RowMatrix& points, const Eigen::VectorXd& z, std::size_t k)
{
  const Eigen::VectorXd d = (points.rowwise() - z.transpose()).rowwise().squaredNorm();
  std::vector<std::size_t> idx(static_cast<std::size_t>(points.rows()));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      const auto ia = static_cast<Eigen::Index>(a);
                      const auto ib = static_cast<Eigen::Index>(b);
                      return d[ia] < d[ib] || (d[ia] == d[ib] && a < b);
                    });
  idx.resize(k);
  return idx;
}

struct Scan
{
  std::vector<double> loss; // squared distance, +inf when infeasible
  std::vector<SimplexProjection> projection;
};

Scan scan(const EmbeddedCurve& e, const Manifold& m, Execution execution)
{
  check_manifold(m, e);
  const auto n = static_cast<std::ptrdiff_t>(e.size());
  Scan s;
  s.loss.assign(e.size(), std::numeric_limits<double>::infinity());
  s.projection.resize(e.size());
  auto one = [&](std::ptrdiff_t i) {
    const auto u = static_cast<std::size_t>(i);
    if (!e.feasible[u])
      return;
    const Eigen::VectorXd z = e.z.row(i).transpose();
    const auto ids = nearest(*m.z, z, kSimplexSize);
    RowMatrix verts(static_cast<Eigen::Index>(ids.size()), m.z->cols());
    for (std::size_t k = 0; k < ids.size(); ++k)
      verts.row(static_cast<Eigen::Index>(k)) = m.z->row(static_cast<Eigen::Index>(ids[k]));
    s.projection[u] = project_onto_simplex(z, verts, ids);
    s.loss[u] = (z - s.projection[u].point).squaredNorm();
  };
  if (execution == Execution::Parallel)
  {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i)
      one(i);
  }
  else
  {
    for (std::ptrdiff_t i = 0; i < n; ++i)
      one(i);
  }
  return s;
}

double penalty(const EmbeddedCurve& e, std::size_t i, double lambda)
{
  if (lambda == 0.0)
    return 0.0;
  const double dev = e.velocities[i] / e.peak_velocity - 1.0;
  return lambda * dev * dev;
}

// Lowest loss wins; ties go to the lowest velocity index.
std::size_t select(const EmbeddedCurve& e, const Scan& s, double lambda)
{
  std::size_t best = e.size();
  double best_loss = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < e.size(); ++i)
  {
    if (!std::isfinite(s.loss[i]))
      continue;
    const double l = s.loss[i] + penalty(e, i, lambda);
    if (l < best_loss)
    {
      best_loss = l;
      best = i;
    }
  }
  if (best == e.size())
    throw NumericalError("no feasible velocity in the search grid");
  return best;
}

DimensionlessParams log_interpolate(const SyntheticDataset& ds, const SimplexProjection& p)
{
  Eigen::Vector3d log_y = Eigen::Vector3d::Zero();
  for (std::size_t k = 0; k < p.vertices.size(); ++k)
    log_y += p.rho[k] * ds.sample(p.vertices[k]).log();
  return DimensionlessParams::from_log(ds.family, log_y);
}

EstimationResult finish_pbi(const EmbeddedCurve& e, const Manifold& m, const Scan& s, std::size_t best)
{
  const auto& p = s.projection[best];
  EstimationResult r;
  r.method = Method::PBI;
  r.formulation = m.dataset->formulation;
  r.velocity = e.velocities[best];
  r.params = log_interpolate(*m.dataset, p);
  r.residual = std::sqrt(s.loss[best]);
  r.rho = p.rho;
  r.vertices = p.vertices;
  return r;
}

} // namespace

SimplexProjection project_onto_simplex(const Eigen::VectorXd& z, const RowMatrix& vertex_coords,
                                       std::span<const std::size_t> ids)
{
  if (vertex_coords.rows() == 0 || static_cast<std::size_t>(vertex_coords.rows()) != ids.size())
    throw PreconditionError("simplex needs one id per vertex and at least one vertex");
  if (vertex_coords.cols() != z.size())
    throw PreconditionError("simplex and point dimensions differ");

  std::vector<Eigen::Index> rows(ids.size());
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  SimplexProjection out;

  auto drop_furthest = [&] {
    auto worst = rows.begin();
    double worst_d = -1.0;
    for (auto it = rows.begin(); it != rows.end(); ++it)
    {
      const double d = (vertex_coords.row(*it).transpose() - z).squaredNorm();
      const std::size_t id = ids[static_cast<std::size_t>(*it)];
      if (d > worst_d || (d == worst_d && id < ids[static_cast<std::size_t>(*worst)]))
      {
        worst_d = d;
        worst = it;
      }
    }
    rows.erase(worst);
    ++out.removed;
  };

  while (true)
  {
    const auto k = static_cast<Eigen::Index>(rows.size());
    if (k == 1)
    {
      out.point = vertex_coords.row(rows[0]).transpose();
      out.rho = {1.0};
      out.vertices = {ids[static_cast<std::size_t>(rows[0])]};
      return out;
    }
    const Eigen::VectorXd base = vertex_coords.row(rows[k - 1]).transpose();
    Eigen::MatrixXd t(z.size(), k - 1);
    for (Eigen::Index j = 0; j + 1 < k; ++j)
      t.col(j) = vertex_coords.row(rows[j]).transpose() - base;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(t);
    qr.setThreshold(1e-10);
    if (qr.rank() < k - 1)
    {
      drop_furthest();
      continue;
    }
    const Eigen::VectorXd partial = qr.solve(z - base);
    std::vector<double> rho(partial.data(), partial.data() + partial.size());
    rho.push_back(1.0 - partial.sum());
    if (std::any_of(rho.begin(), rho.end(), [](double r) { return r < kNegativeWeight; }))
    {
      drop_furthest();
      continue;
    }
    double total = 0.0;
    for (double& r : rho)
    {
      r = std::max(r, 0.0);
      total += r;
    }
    out.point = Eigen::VectorXd::Zero(z.size());
    for (Eigen::Index j = 0; j < k; ++j)
    {
      rho[static_cast<std::size_t>(j)] /= total;
      out.point += rho[static_cast<std::size_t>(j)] * vertex_coords.row(rows[j]).transpose();
      out.vertices.push_back(ids[static_cast<std::size_t>(rows[j])]);
    }
    out.rho = std::move(rho);
    return out;
  }
}

EstimationResult estimate_pbi(const EmbeddedCurve& embedded, const Manifold& manifold, const PbiOptions& options,
                              PbiTrace* trace)
{
  const double lambda = options.lambda_reg.value_or(0.0);
  if (lambda < 0.0)
    throw PreconditionError("regularization weight must be >= 0");
  const auto s = scan(embedded, manifold, options.execution);
  const auto best = select(embedded, s, lambda);
  if (trace != nullptr)
    trace->loss = s.loss;
  return finish_pbi(embedded, manifold, s, best);
}

EstimationResult estimate_nni(const EmbeddedCurve& embedded, const Manifold& manifold, Execution execution)
{
  check_manifold(manifold, embedded);
  const auto n = static_cast<std::ptrdiff_t>(embedded.size());
  std::vector<double> dist(embedded.size(), std::numeric_limits<double>::infinity());
  std::vector<std::size_t> member(embedded.size(), 0);
  auto one = [&](std::ptrdiff_t i) {
    const auto u = static_cast<std::size_t>(i);
    if (!embedded.feasible[u])
      return;
    const auto idx = nearest(*manifold.z, embedded.z.row(i).transpose(), 1);
    member[u] = idx[0];
    dist[u] = (manifold.z->row(static_cast<Eigen::Index>(idx[0])) - embedded.z.row(i)).norm();
  };
  if (execution == Execution::Parallel)
  {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i)
      one(i);
  }
  else
  {
    for (std::ptrdiff_t i = 0; i < n; ++i)
      one(i);
  }
  const auto best = static_cast<std::size_t>(std::min_element(dist.begin(), dist.end()) - dist.begin());
  if (!std::isfinite(dist[best]))
    throw NumericalError("no feasible velocity in the search grid");
  EstimationResult r;
  r.method = Method::NNI;
  r.formulation = manifold.dataset->formulation;
  r.velocity = embedded.velocities[best];
  r.params = manifold.dataset->sample(member[best]);
  r.residual = dist[best];
  r.rho = {1.0};
  r.vertices = {member[best]};
  return r;
}

EstimationResult estimate_exhaustive(const MeasuredCurve& curve, const SyntheticDataset& dataset,
                                     const VelocityGrid& grid)
{
  const std::size_t n = curve.size();
  double data_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    data_sum += curve.concentrations[i] * curve.weights[i];
  if (!(data_sum > 0.0))
    throw PreconditionError("exhaustive search: measured mass is zero");
  std::vector<double> p(n);
  for (std::size_t i = 0; i < n; ++i)
    p[i] = curve.concentrations[i] * curve.weights[i] / data_sum;

  double best = std::numeric_limits<double>::infinity();
  std::size_t best_v = 0, best_i = 0;
  std::vector<double> model(n);
  for (std::size_t m = 0; m < grid.count; ++m)
  {
    const double scale = grid.velocity(m) / curve.length;
    for (std::size_t member = 0; member < dataset.size(); ++member)
    {
      const auto row = dataset.curves.row(static_cast<Eigen::Index>(member));
      const std::span<const double> c(row.data(), dataset.grid.count);
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i)
      {
        model[i] = interp_uniform(c, dataset.grid.step, curve.times[i] * scale) * curve.weights[i];
        sum += model[i];
      }
      if (!(sum > 0.0))
        continue;
      double loss = 0.0;
      for (std::size_t i = 0; i < n; ++i)
      {
        const double d = p[i] - model[i] / sum;
        loss += d * d;
      }
      if (loss < best)
      {
        best = loss;
        best_v = m;
        best_i = member;
      }
    }
  }
  if (!std::isfinite(best))
    throw NumericalError("exhaustive search: no feasible velocity");
  EstimationResult r;
  r.method = Method::Exhaustive;
  r.formulation = dataset.formulation;
  r.velocity = grid.velocity(best_v);
  r.params = dataset.sample(best_i);
  r.residual = std::sqrt(best);
  r.rho = {1.0};
  r.vertices = {best_i};
  return r;
}

RegularizationWeight regularization_weight(std::span<const EmbeddedCurve> curves, const Manifold& manifold,
                                           double target, double tolerance, double lambda_max)
{
  if (curves.empty())
    throw PreconditionError("regularization weight needs at least one curve");
  std::vector<Scan> scans;
  for (const auto& e : curves)
    scans.push_back(scan(e, manifold, Execution::Parallel));

  auto deviation = [&](double lambda) {
    double acc = 0.0;
    for (std::size_t c = 0; c < curves.size(); ++c)
    {
      const auto best = select(curves[c], scans[c], lambda);
      acc += std::abs(curves[c].velocities[best] / curves[c].peak_velocity - 1.0);
    }
    return acc / static_cast<double>(curves.size());
  };

  std::vector<std::pair<double, double>> probes;
  auto probe = [&](double lambda) {
    const double d = deviation(lambda);
    probes.emplace_back(lambda, d);
    return d;
  };

  RegularizationWeight out;
  const double at_zero = probe(0.0);
  if (at_zero <= target + tolerance)
  {
    out.lambda = 0.0;
    out.mean_deviation = at_zero;
    out.reached = at_zero >= target - tolerance;
  }
  else
  {
    const double at_max = probe(lambda_max);
    if (at_max > target + tolerance)
    {
      out.lambda = lambda_max;
      out.mean_deviation = at_max;
      out.reached = false;
    }
    else
    {
      double lo = std::log(lambda_max) - 60.0; // effectively 0
      double hi = std::log(lambda_max);
      out.lambda = lambda_max;
      out.mean_deviation = at_max;
      out.reached = at_max >= target - tolerance;
      for (int it = 0; it < 200 && !out.reached; ++it)
      {
        const double mid = 0.5 * (lo + hi);
        const double d = probe(std::exp(mid));
        out.lambda = std::exp(mid);
        out.mean_deviation = d;
        if (std::abs(d - target) <= tolerance)
        {
          out.reached = true;
          break;
        }
        if (d > target)
          lo = mid;
        else
          hi = mid;
        if (hi - lo < 1e-12)
          break;
      }
    }
  }
  std::sort(probes.begin(), probes.end());
  for (std::size_t i = 1; i < probes.size(); ++i)
    if (probes[i].second > probes[i - 1].second + 1e-15)
      out.monotone = false;
  return out;
}

} // namespace rivest
