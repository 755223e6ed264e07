// Copyright 2026 The rivest Authors
// SPDX-License-Identifier: Apache-2.0

#include "rivest/global_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "rivest/error.hpp"
#include "rivest/metrics.hpp"

namespace rivest
{

namespace
{

constexpr double kMaxOneMinusGamma = 0.999;

class LipoState
{
public:
  LipoState(const Objective& loss, const SearchBox& box, const LipoOptions& options)
      : loss_(loss), box_(box), options_(options), d_(box.dim())
  {
  }

  std::size_t evaluations() const { return u_.size(); }
  const std::vector<double>& point(std::size_t i) const { return u_[i]; }
  double value(std::size_t i) const { return f_[i]; }

  /// Indices of the `count` evaluations closest to u (ties by index).
  std::vector<std::size_t> nearest(const std::vector<double>& u, std::size_t count) const
  {
    std::vector<std::pair<double, std::size_t>> d;
    for (std::size_t i = 0; i < u_.size(); ++i)
      d.emplace_back(distance(u, u_[i]), i);
    count = std::min(count, d.size());
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(count), d.end());
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < count; ++i)
      out.push_back(d[i].second);
    return out;
  }
  bool exhausted() const { return evaluations() >= box_.budget; }
  double best() const { return best_; }
  const std::vector<double>& best_u() const { return u_[best_index_]; }

  double evaluate(const std::vector<double>& u, bool polish)
  {
    std::vector<double> x(d_);
    for (std::size_t j = 0; j < d_; ++j)
      x[j] = std::clamp(box_.lower[j] + u[j] * (box_.upper[j] - box_.lower[j]), box_.lower[j], box_.upper[j]);
    const double f = loss_(x);
    if (!std::isfinite(f))
    {
      std::ostringstream msg;
      msg << "loss is not finite at (";
      for (std::size_t j = 0; j < d_; ++j)
        msg << (j ? ", " : "") << x[j];
      msg << ")";
      throw NumericalError(msg.str());
    }
    for (std::size_t i = 0; i < u_.size(); ++i)
    {
      const double dist = distance(u, u_[i]);
      if (dist > 0.0)
        slope_ = std::max(slope_, std::abs(f - f_[i]) / dist);
    }
    u_.push_back(u);
    f_.push_back(f);
    if (f < best_)
    {
      best_ = f;
      best_index_ = u_.size() - 1;
    }
    trace_.push_back({std::move(x), f, best_, polish});
    return f;
  }

  /// Smallest grid value (1 + growth)^i at or above the largest observed slope.
  double lipschitz() const
  {
    if (slope_ <= 0.0)
      return 0.0;
    const double base = 1.0 + options_.growth;
    return std::pow(base, std::ceil(std::log(slope_) / std::log(base)));
  }

  double lower_bound(const std::vector<double>& u, double k) const
  {
    double lb = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < u_.size(); ++i)
      lb = std::max(lb, f_[i] - k * distance(u, u_[i]));
    return lb;
  }

  LipoResult finish() &&
  {
    LipoResult r;
    r.x = trace_[best_index_].x;
    r.value = best_;
    r.trace = std::move(trace_);
    return r;
  }

private:
  static double distance(const std::vector<double>& a, const std::vector<double>& b)
  {
    double acc = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j)
      acc += (a[j] - b[j]) * (a[j] - b[j]);
    return std::sqrt(acc);
  }

  const Objective& loss_;
  const SearchBox& box_;
  const LipoOptions& options_;
  std::size_t d_;
  std::vector<std::vector<double>> u_; // unit-cube coordinates
  std::vector<double> f_;
  std::vector<LipoEvaluation> trace_;
  double slope_ = 0.0;
  double best_ = std::numeric_limits<double>::infinity();
  std::size_t best_index_ = 0;
};

EstimationResult with_metrics(EstimationResult r, const MeasuredCurve& curve)
{
  const auto model = forward_dimensional(r.params, r.formulation, r.velocity, curve.length, curve.times);
  r.metrics = evaluate(curve, model);
  return r;
}

} // namespace

void validate(const SearchBox& box)
{
  if (box.lower.empty() || box.lower.size() != box.upper.size())
    throw PreconditionError("search box needs matching, non-empty bounds");
  for (std::size_t j = 0; j < box.dim(); ++j)
    if (!(box.lower[j] < box.upper[j]) || !std::isfinite(box.lower[j]) || !std::isfinite(box.upper[j]))
      throw PreconditionError("search box needs finite lower < upper in every coordinate");
  if (box.budget < box.dim() + 2)
    throw PreconditionError("search budget must be at least dim + 2");
}

LipoResult lipo_minimize(const Objective& loss, const SearchBox& box, const LipoOptions& options)
{
  validate(box);
  if (options.polish_every < 1 || !(options.growth > 0.0) || options.exploration < 0.0 || options.exploration > 1.0)
    throw PreconditionError("invalid LIPO options");
  const std::size_t d = box.dim();
  std::mt19937_64 rng(box.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&] {
    std::vector<double> u(d);
    for (double& x : u)
      x = unit(rng);
    return u;
  };

  LipoState state(loss, box, options);
  for (std::size_t i = 0; i < d + 2; ++i)
    state.evaluate(draw(), false);

  double radius = options.initial_radius;
  // Newton step of a least-squares quadratic through the evaluations nearest the
  // incumbent, kept inside a ball of twice the compass radius.
  auto quadratic_step = [&] {
    const std::size_t terms = (d + 1) * (d + 2) / 2;
    const std::size_t use = 2 * terms;
    if (state.evaluations() < use)
      return false;
    const auto centre = state.best_u();
    const auto near = state.nearest(centre, use);
    Eigen::MatrixXd a(static_cast<Eigen::Index>(use), static_cast<Eigen::Index>(terms));
    Eigen::VectorXd b(static_cast<Eigen::Index>(use));
    for (std::size_t r = 0; r < use; ++r)
    {
      const auto& u = state.point(near[r]);
      Eigen::Index c = 0;
      a(static_cast<Eigen::Index>(r), c++) = 1.0;
      for (std::size_t j = 0; j < d; ++j)
        a(static_cast<Eigen::Index>(r), c++) = u[j] - centre[j];
      for (std::size_t j = 0; j < d; ++j)
        for (std::size_t k = j; k < d; ++k)
          a(static_cast<Eigen::Index>(r), c++) =
              (u[j] - centre[j]) * (u[k] - centre[k]) * (j == k ? 0.5 : 1.0);
      b[static_cast<Eigen::Index>(r)] = state.value(near[r]) - state.best();
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < static_cast<Eigen::Index>(terms))
      return false;
    const Eigen::VectorXd coef = qr.solve(b);
    Eigen::VectorXd g(static_cast<Eigen::Index>(d));
    Eigen::MatrixXd h(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    Eigen::Index c = 1;
    for (std::size_t j = 0; j < d; ++j)
      g[static_cast<Eigen::Index>(j)] = coef[c++];
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t k = j; k < d; ++k)
        h(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) =
            h(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = coef[c++];
    Eigen::LLT<Eigen::MatrixXd> llt(h);
    if (llt.info() != Eigen::Success)
      return false;
    Eigen::VectorXd step = llt.solve(-g);
    const double limit = 2.0 * radius;
    if (step.norm() > limit)
      step *= limit / step.norm();
    auto u = centre;
    bool moved = false;
    for (std::size_t j = 0; j < d; ++j)
    {
      u[j] = std::clamp(u[j] + step[static_cast<Eigen::Index>(j)], 0.0, 1.0);
      moved = moved || u[j] != centre[j];
    }
    if (!moved || state.exhausted())
      return false;
    const double before = state.best();
    return state.evaluate(u, true) < before;
  };

  auto polish = [&] {
    bool improved = quadratic_step();
    for (std::size_t j = 0; j < d && !state.exhausted(); ++j)
      for (double sign : {1.0, -1.0})
      {
        if (state.exhausted())
          break;
        auto u = state.best_u();
        const double before = state.best();
        u[j] = std::clamp(u[j] + sign * radius, 0.0, 1.0);
        if (u[j] == state.best_u()[j])
          continue;
        if (state.evaluate(u, true) < before)
        {
          improved = true;
          break;
        }
      }
    if (!improved)
      radius = std::max(0.5 * radius, options.min_radius);
  };

  std::size_t accepted = 0;
  while (!state.exhausted())
  {
    bool found = false;
    std::vector<double> u;
    if (unit(rng) < options.exploration)
    {
      u = draw();
      found = true;
    }
    else
    {
      const double k = state.lipschitz();
      for (std::size_t attempt = 0; attempt < options.max_rejections; ++attempt)
      {
        u = draw();
        if (state.lower_bound(u, k) < state.best())
        {
          found = true;
          break;
        }
      }
    }
    if (!found)
    {
      // the bound rules out the whole box at this resolution: spend the step locally
      polish();
      continue;
    }
    state.evaluate(u, false);
    if (++accepted % static_cast<std::size_t>(options.polish_every) == 0)
      polish();
  }
  return std::move(state).finish();
}

std::vector<double> to_search_point(double velocity, const DimensionlessParams& params)
{
  const auto l = params.log();
  return {std::log(velocity), l[0], l[1], l[2]};
}

void from_search_point(std::span<const double> x, KernelFamily family, double& velocity, DimensionlessParams& params)
{
  if (x.size() != kParamDim + 1)
    throw PreconditionError("search point must have four coordinates");
  velocity = std::exp(x[0]);
  params = DimensionlessParams::from_log(family, Eigen::Vector3d(x[1], x[2], x[3]));
}

SearchBox refine_box(const EstimationResult& initial, double v_frac, double y_frac, std::size_t budget,
                     std::uint64_t seed)
{
  if (!(v_frac > 0.0 && v_frac < 1.0) || !(y_frac > 0.0 && y_frac < 1.0))
    throw PreconditionError("refinement fractions must lie in (0, 1)");
  if (!initial.exchange)
    throw PreconditionError("refinement needs an estimate with exchange parameters");
  SearchBox box;
  box.budget = budget;
  box.seed = seed;
  const auto c = to_search_point(initial.velocity, initial.params);
  box.lower = {c[0] + std::log(1.0 - v_frac)};
  box.upper = {c[0] + std::log(1.0 + v_frac)};
  for (int k = 0; k < kParamDim; ++k)
  {
    box.lower.push_back(c[1 + k] + std::log(1.0 - y_frac));
    box.upper.push_back(c[1 + k] + std::log(1.0 + y_frac));
  }
  if (initial.params.family == KernelFamily::PowerLaw)
  {
    box.upper[3] = std::min(box.upper[3], std::log(kMaxOneMinusGamma));
    box.lower[3] = std::min(box.lower[3], box.upper[3] + std::log(1.0 - y_frac));
  }
  return box;
}

SearchBox prior_box(const LogNormalPrior& prior, KernelFamily family, double peak_velocity, double width,
                    double v_lo, double v_hi, std::size_t budget, std::uint64_t seed)
{
  if (!(peak_velocity > 0.0) || !(width > 0.0) || !(v_lo > 0.0 && v_lo < v_hi))
    throw PreconditionError("invalid prior box settings");
  SearchBox box;
  box.budget = budget;
  box.seed = seed;
  box.lower = {std::log(v_lo * peak_velocity)};
  box.upper = {std::log(v_hi * peak_velocity)};
  for (int k = 0; k < kParamDim; ++k)
  {
    const double half = width * std::sqrt(prior.sigma_log(k, k));
    box.lower.push_back(prior.mu_log[k] - half);
    box.upper.push_back(prior.mu_log[k] + half);
  }
  if (family == KernelFamily::PowerLaw)
  {
    box.upper[3] = std::min(box.upper[3], std::log(kMaxOneMinusGamma));
    if (!(box.lower[3] < box.upper[3]))
      throw PreconditionError("prior box leaves no admissible exponent");
  }
  return box;
}

double forward_rmse(const MeasuredCurve& curve, double velocity, const DimensionlessParams& params,
                    Formulation formulation, const InversionOptions& inversion)
{
  const auto model = forward_dimensional(params, formulation, velocity, curve.length, curve.times, inversion);
  try
  {
    return rmse(curve, model);
  }
  catch (const NumericalError&)
  {
    return 1.0;
  }
}

EstimationResult refine(const EstimationResult& initial, const MeasuredCurve& curve, const RefineOptions& options)
{
  if (options.budget == 0)
    return initial;
  require_estimable(curve);
  const auto box = refine_box(initial, options.v_frac, options.y_frac, options.budget, options.seed);
  const auto family = initial.params.family;
  const auto formulation = initial.formulation;
  const Objective loss = [&](std::span<const double> x) {
    double v = 0.0;
    DimensionlessParams y;
    from_search_point(x, family, v, y);
    return forward_rmse(curve, v, y, formulation);
  };
  const auto found = lipo_minimize(loss, box, options.lipo);
  const double start = forward_rmse(curve, initial.velocity, initial.params, formulation);

  EstimationResult out = initial;
  out.method = Method::PBIRefined;
  out.rho.clear();
  out.vertices.clear();
  if (found.value < start)
  {
    from_search_point(found.x, family, out.velocity, out.params);
    out.residual = found.value;
  }
  else
  {
    out.residual = start;
    out.note = "refinement did not lower eps_RMSE; initial estimate kept";
  }
  return with_metrics(std::move(out), curve);
}

EstimationResult lipo_estimate(const MeasuredCurve& curve, const LogNormalPrior& prior, KernelFamily family,
                               Formulation formulation, std::size_t budget, std::uint64_t seed,
                               const LipoOptions& options)
{
  require_estimable(curve);
  const auto box = prior_box(prior, family, curve.peak_velocity(), 4.0, 0.9, 1.5, budget, seed);
  const Objective loss = [&](std::span<const double> x) {
    double v = 0.0;
    DimensionlessParams y;
    from_search_point(x, family, v, y);
    return forward_rmse(curve, v, y, formulation);
  };
  const auto found = lipo_minimize(loss, box, options);
  EstimationResult out;
  out.method = Method::LIPO;
  out.formulation = formulation;
  from_search_point(found.x, family, out.velocity, out.params);
  out.residual = found.value;
  return with_metrics(std::move(out), curve);
}

} // namespace rivest
