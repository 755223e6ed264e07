// Copyright 2026 The rivest Authors
// SPDX-License-Identifier: Apache-2.0

#include "rivest/metrics.hpp"

#include <cmath>
#include <vector>

#include "rivest/error.hpp"

namespace rivest
{

namespace
{

constexpr double kLogFloor = 1e-300;

struct Windowed
{
  std::vector<double> measured, model, weights;
  double end = 0.0;
};

Windowed window(const MeasuredCurve& curve, std::span<const double> model)
{
  if (model.size() != curve.size())
    throw PreconditionError("metrics: model has " + std::to_string(model.size()) + " values for " +
                            std::to_string(curve.size()) + " samples");
  Windowed w;
  w.end = kWindowPeaks * curve.t_peak();
  for (std::size_t i = 0; i < curve.size(); ++i)
    if (curve.times[i] <= w.end)
    {
      w.measured.push_back(curve.concentrations[i]);
      w.model.push_back(model[i]);
      w.weights.push_back(curve.weights[i]);
    }
  return w;
}

double weighted_sum(std::span<const double> v, std::span<const double> w)
{
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    s += v[i] * w[i];
  return s;
}

void check_sizes(std::size_t a, std::size_t b, std::size_t c)
{
  if (a != b || a != c)
    throw PreconditionError("metrics: input lengths differ");
}

} // namespace

nlohmann::json to_json(const MetricReport& r)
{
  return {{"rmse", r.rmse}, {"kld", r.kld}, {"window_end_s", r.window_end}, {"samples", r.samples}};
}

double rmse_weighted(std::span<const double> measured, std::span<const double> model,
                     std::span<const double> weights)
{
  check_sizes(measured.size(), model.size(), weights.size());
  const double sp = weighted_sum(measured, weights);
  const double sq = weighted_sum(model, weights);
  if (!(sp > 0.0))
    throw PreconditionError("rmse: measured mass is zero");
  if (!(sq > 0.0))
    throw NumericalError("rmse: model mass is zero");
  double acc = 0.0;
  for (std::size_t i = 0; i < measured.size(); ++i)
  {
    const double d = model[i] * weights[i] / sq - measured[i] * weights[i] / sp;
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(measured.size()));
}

double kld_weighted(std::span<const double> measured, std::span<const double> model,
                    std::span<const double> weights)
{
  check_sizes(measured.size(), model.size(), weights.size());
  const double sp = weighted_sum(measured, weights);
  const double sq = weighted_sum(model, weights);
  if (!(sp > 0.0))
    throw PreconditionError("kld: measured mass is zero");
  if (!(sq > 0.0))
    throw NumericalError("kld: model mass is zero");
  double acc = 0.0;
  for (std::size_t i = 0; i < measured.size(); ++i)
  {
    const double p = measured[i] * weights[i] / sp;
    if (!(p > 0.0))
      continue;
    const double q = std::max(model[i] * weights[i] / sq, kLogFloor);
    acc += p * (std::log(p) - std::log(q));
  }
  return acc;
}

double rmse(const MeasuredCurve& curve, std::span<const double> model)
{
  const auto w = window(curve, model);
  return rmse_weighted(w.measured, w.model, w.weights);
}

double kld(const MeasuredCurve& curve, std::span<const double> model)
{
  const auto w = window(curve, model);
  return kld_weighted(w.measured, w.model, w.weights);
}

MetricReport evaluate(const MeasuredCurve& curve, std::span<const double> model)
{
  const auto w = window(curve, model);
  MetricReport r;
  r.rmse = rmse_weighted(w.measured, w.model, w.weights);
  r.kld = kld_weighted(w.measured, w.model, w.weights);
  r.window_end = w.end;
  r.samples = w.measured.size();
  return r;
}

} // namespace rivest
