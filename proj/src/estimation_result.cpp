// Copyright 2026 The rivest Authors
// SPDX-License-Identifier: Apache-2.0

#include "rivest/estimation_result.hpp"

#include <array>
#include <string>
#include <utility>

#include "rivest/error.hpp"

namespace rivest
{

namespace
{

constexpr std::array<std::pair<Method, std::string_view>, 9> kNames{{
    {Method::PBI, "pbi"},
    {Method::NNI, "nni"},
    {Method::Exhaustive, "exhaustive"},
    {Method::LaplaceFit, "laplace"},
    {Method::Moments, "moments"},
    {Method::AdeLS, "ade-ls"},
    {Method::AdePeak, "ade-peak"},
    {Method::LIPO, "lipo"},
    {Method::PBIRefined, "pbi+lipo"},
}};

} // namespace

std::string_view to_string(Method method)
{
  for (const auto& [m, name] : kNames)
    if (m == method)
      return name;
  return "unknown";
}

Method parse_method(std::string_view name)
{
  for (const auto& [m, n] : kNames)
    if (n == name)
      return m;
  throw PreconditionError("unknown method '" + std::string(name) + "'");
}

nlohmann::json to_json(const EstimationResult& r, double length)
{
  nlohmann::json j;
  j["method"] = std::string(to_string(r.method));
  j["formulation"] = to_int(r.formulation);
  j["velocity_m_s"] = r.velocity;
  j["exchange"] = r.exchange;
  if (r.exchange)
    j["params"] = to_json(r.params);
  else
    j["params"] = {{"family", "none"}, {"Pe", r.params.y[0]}};
  if (length > 0.0)
  {
    j["length_m"] = length;
    j["dispersion_m2_s"] = r.dispersion(length);
  }
  j["residual"] = r.residual;
  j["rho"] = r.rho;
  j["vertices"] = r.vertices;
  if (r.metrics)
    j["metrics"] = to_json(*r.metrics);
  j["converged"] = r.converged;
  if (!r.note.empty())
    j["note"] = r.note;
  return j;
}

EstimationResult result_from_json(const nlohmann::json& j)
{
  EstimationResult r;
  try
  {
    r.method = parse_method(j.at("method").get<std::string>());
    r.formulation = formulation_from_int(j.at("formulation").get<int>());
    r.velocity = j.at("velocity_m_s").get<double>();
    r.exchange = j.value("exchange", true);
    if (r.exchange)
      r.params = params_from_json(j.at("params"));
    else
      r.params.y = {j.at("params").at("Pe").get<double>(), 0.0, 0.0};
    r.residual = j.value("residual", 0.0);
    r.rho = j.value("rho", std::vector<double>{});
    r.vertices = j.value("vertices", std::vector<std::size_t>{});
    r.converged = j.value("converged", true);
    r.note = j.value("note", std::string());
    if (j.contains("metrics"))
    {
      MetricReport m;
      m.rmse = j["metrics"].at("rmse").get<double>();
      m.kld = j["metrics"].at("kld").get<double>();
      m.window_end = j["metrics"].value("window_end_s", 0.0);
      m.samples = j["metrics"].value("samples", std::size_t{0});
      r.metrics = m;
    }
  }
  catch (const nlohmann::json::exception& e)
  {
    throw FormatError(std::string("bad estimation result: ") + e.what());
  }
  return r;
}

} // namespace rivest
