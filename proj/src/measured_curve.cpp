// Copyright 2026 The rivest Authors
// SPDX-License-Identifier: Apache-2.0

#include "rivest/measured_curve.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rivest/error.hpp"

namespace rivest
{

namespace
{

std::string trim(std::string s)
{
  const auto b = s.find_first_not_of(" \t\r\n");
  const auto e = s.find_last_not_of(" \t\r\n");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

double parse_number(const std::string& field, const std::string& where)
{
  std::size_t used = 0;
  double v = 0.0;
  try
  {
    v = std::stod(field, &used);
  }
  catch (const std::exception&)
  {
    throw FormatError(where + ": not a number: '" + field + "'");
  }
  if (used != field.size())
    throw FormatError(where + ": trailing characters in '" + field + "'");
  return v;
}

} // namespace

std::size_t MeasuredCurve::peak_index() const
{
  if (concentrations.empty())
    throw PreconditionError("empty curve has no peak");
  return static_cast<std::size_t>(std::max_element(concentrations.begin(), concentrations.end()) -
                                  concentrations.begin());
}

bool MeasuredCurve::peak_interior() const
{
  const auto i = peak_index();
  return i > 0 && i + 1 < size();
}

std::vector<double> midpoint_weights(std::span<const double> t)
{
  const std::size_t n = t.size();
  std::vector<double> w(n, 0.0);
  if (n < 2)
    return w;
  w[0] = 0.5 * (t[1] - t[0]);
  w[n - 1] = 0.5 * (t[n - 1] - t[n - 2]);
  for (std::size_t i = 1; i + 1 < n; ++i)
    w[i] = 0.5 * (t[i + 1] - t[i - 1]);
  return w;
}

MeasuredCurve make_curve(std::vector<double> times, std::vector<double> concentrations, double length,
                         nlohmann::json metadata)
{
  if (times.size() != concentrations.size())
    throw PreconditionError("curve: times and concentrations differ in length");
  if (times.size() < 2)
    throw PreconditionError("curve: at least two samples are required");
  if (!(length > 0.0) || !std::isfinite(length))
    throw PreconditionError("curve: reach length must be finite and > 0");
  for (std::size_t i = 0; i < times.size(); ++i)
  {
    if (!std::isfinite(times[i]) || !std::isfinite(concentrations[i]))
      throw PreconditionError("curve: non-finite sample at row " + std::to_string(i));
    if (concentrations[i] < 0.0)
      throw PreconditionError("curve: negative concentration at row " + std::to_string(i));
    if (i > 0 && !(times[i] > times[i - 1]))
      throw PreconditionError("curve: times must be strictly increasing (row " + std::to_string(i) + ")");
  }
  if (times.front() < 0.0)
    throw PreconditionError("curve: negative sample time");
  MeasuredCurve c;
  c.weights = midpoint_weights(times);
  c.times = std::move(times);
  c.concentrations = std::move(concentrations);
  c.length = length;
  c.metadata = std::move(metadata);
  return c;
}

void require_estimable(const MeasuredCurve& curve)
{
  if (curve.size() < 4)
    throw PreconditionError("curve: at least four samples are required for estimation");
  double mass = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i)
    mass += curve.concentrations[i] * curve.weights[i];
  if (!(mass > 0.0))
    throw PreconditionError("curve: zero mass");
  if (!(curve.t_peak() > 0.0))
    throw PreconditionError("curve: peak at t = 0");
}

std::filesystem::path default_sidecar(const std::filesystem::path& csv)
{
  auto p = csv;
  p.replace_extension(".json");
  return p;
}

MeasuredCurve read_curve(const std::filesystem::path& csv, const std::filesystem::path& meta)
{
  std::ifstream in(csv);
  if (!in)
    throw Error("cannot open " + csv.string());
  std::string line;
  if (!std::getline(in, line))
    throw FormatError(csv.string() + ": empty file");
  if (trim(line) != "time_s,concentration")
    throw FormatError(csv.string() + ": expected header 'time_s,concentration'");
  std::vector<double> t, c;
  std::size_t row = 1;
  while (std::getline(in, line))
  {
    ++row;
    line = trim(line);
    if (line.empty())
      continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
      throw FormatError(csv.string() + ":" + std::to_string(row) + ": expected two columns");
    const std::string where = csv.string() + ":" + std::to_string(row);
    t.push_back(parse_number(trim(line.substr(0, comma)), where));
    c.push_back(parse_number(trim(line.substr(comma + 1)), where));
  }

  std::ifstream min(meta);
  if (!min)
    throw Error("cannot open " + meta.string());
  nlohmann::json j;
  try
  {
    j = nlohmann::json::parse(min);
  }
  catch (const nlohmann::json::exception& e)
  {
    throw FormatError(meta.string() + ": " + e.what());
  }
  if (!j.contains("reach_length_m") || !j["reach_length_m"].is_number())
    throw FormatError(meta.string() + ": missing numeric reach_length_m");
  const double length = j["reach_length_m"].get<double>();
  try
  {
    auto curve = make_curve(std::move(t), std::move(c), length, j);
    curve.name = csv.stem().string();
    return curve;
  }
  catch (const PreconditionError& e)
  {
    throw FormatError(csv.string() + ": " + e.what());
  }
}

} // namespace rivest
