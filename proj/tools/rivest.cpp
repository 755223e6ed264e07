// Copyright 2026 The rivest Authors
// SPDX-License-Identifier: Apache-2.0

// rivest: command-line front end of the library.

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rivest/coarse_estimators.hpp"
#include "rivest/embedding.hpp"
#include "rivest/error.hpp"
#include "rivest/global_opt.hpp"
#include "rivest/kl_rom.hpp"
#include "rivest/metrics.hpp"
#include "rivest/pbi_estimator.hpp"
#include "rivest/pipeline.hpp"

namespace fs = std::filesystem;
using namespace rivest;

namespace
{

void emit(const std::string& text, const std::string& out)
{
  if (out.empty() || out == "-")
  {
    std::cout << text;
    return;
  }
  std::ofstream f(out, std::ios::binary);
  f << text;
  if (!f)
    throw Error("cannot write " + out);
}

void emit_json(const nlohmann::json& j, const std::string& out) { emit(j.dump(2) + "\n", out); }

nlohmann::json read_json(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw Error("cannot open " + path);
  try
  {
    return nlohmann::json::parse(in);
  }
  catch (const nlohmann::json::exception& e)
  {
    throw FormatError(path + ": " + e.what());
  }
}

MeasuredCurve load(const std::string& csv, const std::string& meta)
{
  auto c = read_curve(csv, meta.empty() ? default_sidecar(csv) : fs::path(meta));
  c.name = fs::path(csv).stem().string();
  return c;
}

DimensionlessParams make_params(const std::string& family, const std::vector<double>& y)
{
  if (y.size() != 3)
    throw PreconditionError("--params needs three values");
  DimensionlessParams p;
  p.family = parse_family(family);
  p.y = {y[0], y[1], y[2]};
  validate(p);
  return p;
}

double resolve_sigma(const std::string& value, const MeasuredCurve& padded, const KLModel& kl, std::uint64_t seed)
{
  if (value != "auto")
    return std::stod(value);
  const auto candidates = default_sigma_candidates();
  return tune_sigma_c(std::span<const MeasuredCurve>(&padded, 1), kl, candidates, seed).sigma_c;
}

struct CurveArgs
{
  std::string csv;
  std::string meta;
  void add(CLI::App* app)
  {
    app->add_option("--curve", csv, "time_s,concentration CSV")->required()->check(CLI::ExistingFile);
    app->add_option("--meta", meta, "JSON sidecar with reach_length_m (default: CSV stem .json)");
  }
};

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"rivest: river transport parameter estimation from breakthrough curves"};
  app.require_subcommand(1);
  std::uint64_t seed = 7;
  app.add_option("--seed", seed, "seed for every random choice")->capture_default_str();

  // forward
  auto* forward = app.add_subcommand("forward", "Breakthrough curve of given parameters");
  std::string f_family = "first_order", f_out;
  std::vector<double> f_params;
  int f_form = 4;
  double f_velocity = 0.0, f_length = 0.0, f_t_end = 0.0;
  std::size_t f_samples = 200;
  forward->add_option("--family", f_family)->capture_default_str();
  forward->add_option("--params", f_params, "Pe and the two kernel parameters")->required()->delimiter(',');
  forward->add_option("--formulation", f_form)->capture_default_str()->check(CLI::Range(1, 4));
  forward->add_option("--velocity", f_velocity, "m/s")->required();
  forward->add_option("--length", f_length, "reach length, m")->required();
  forward->add_option("--t-end", f_t_end, "last sample time, s (default 4 L/v)");
  forward->add_option("--samples", f_samples)->capture_default_str();
  forward->add_option("--out", f_out, "CSV path (default stdout)");

  // coarse
  auto* coarse = app.add_subcommand("coarse", "Coarse estimate of one curve");
  CurveArgs c_curve;
  c_curve.add(coarse);
  std::string c_method = "laplace", c_family = "first_order", c_out;
  int c_form = 4, c_starts = 5;
  coarse->add_option("--method", c_method)
      ->check(CLI::IsMember({"laplace", "moments", "ade-ls", "ade-peak"}))
      ->capture_default_str();
  coarse->add_option("--family", c_family)->capture_default_str();
  coarse->add_option("--formulation", c_form)->capture_default_str()->check(CLI::Range(1, 4));
  coarse->add_option("--starts", c_starts)->capture_default_str();
  coarse->add_option("--out", c_out);

  // generate
  auto* generate = app.add_subcommand("generate", "Synthetic dataset from a prior");
  std::string g_prior, g_family = "first_order", g_out;
  std::size_t g_n = 1000;
  int g_form = 4;
  generate->add_option("--prior", g_prior, "prior JSON (mu_log, sigma_log)")->required()->check(CLI::ExistingFile);
  generate->add_option("--n", g_n)->capture_default_str();
  generate->add_option("--family", g_family)->capture_default_str();
  generate->add_option("--formulation", g_form)->capture_default_str()->check(CLI::Range(1, 4));
  generate->add_option("--out", g_out)->required();

  // fit-kl
  auto* fitkl = app.add_subcommand("fit-kl", "KL model of a dataset");
  std::string k_dataset, k_out;
  std::size_t k_modes = 20;
  fitkl->add_option("--dataset", k_dataset)->required()->check(CLI::ExistingFile);
  fitkl->add_option("--modes", k_modes)->capture_default_str();
  fitkl->add_option("--out", k_out)->required();

  // embed
  auto* embedc = app.add_subcommand("embed", "KL coefficients of a curve over the velocity grid");
  CurveArgs e_curve;
  e_curve.add(embedc);
  std::string e_kl, e_sigma = "auto", e_out;
  embedc->add_option("--kl", e_kl)->required()->check(CLI::ExistingFile);
  embedc->add_option("--sigma-c", e_sigma, "value or 'auto'")->capture_default_str();
  embedc->add_option("--out", e_out);

  // estimate
  auto* estimate = app.add_subcommand("estimate", "PBI / NNI / exhaustive estimate of one curve");
  CurveArgs s_curve;
  s_curve.add(estimate);
  std::string s_dataset, s_kl, s_sigma = "auto", s_method = "pbi", s_out;
  std::optional<double> s_lambda;
  estimate->add_option("--dataset", s_dataset)->required()->check(CLI::ExistingFile);
  estimate->add_option("--kl", s_kl)->required()->check(CLI::ExistingFile);
  estimate->add_option("--sigma-c", s_sigma, "value or 'auto'")->capture_default_str();
  estimate->add_option("--method", s_method)->check(CLI::IsMember({"pbi", "nni", "exhaustive"}))->capture_default_str();
  estimate->add_option("--lambda-reg", s_lambda, "velocity regularization weight");
  estimate->add_option("--out", s_out);

  // refine
  auto* refinec = app.add_subcommand("refine", "LIPO refinement of an estimate");
  CurveArgs r_curve;
  r_curve.add(refinec);
  std::string r_result, r_out;
  std::size_t r_budget = 300;
  refinec->add_option("--result", r_result)->required()->check(CLI::ExistingFile);
  refinec->add_option("--budget", r_budget)->capture_default_str();
  refinec->add_option("--out", r_out);

  // metrics
  auto* metricsc = app.add_subcommand("metrics", "eps_RMSE and eps_KLD of an estimate");
  CurveArgs m_curve;
  m_curve.add(metricsc);
  std::string m_result, m_out;
  metricsc->add_option("--result", m_result)->required()->check(CLI::ExistingFile);
  metricsc->add_option("--out", m_out);

  // run
  auto* run = app.add_subcommand("run", "Full pipeline over a directory of curves");
  std::string p_config, p_curves, p_out, p_dataset, p_kl, p_prior, p_family, p_sigma, p_lambda;
  std::vector<std::string> p_methods;
  std::optional<int> p_form, p_workers;
  std::optional<std::size_t> p_n, p_modes, p_budget;
  run->add_option("--config", p_config, "JSON run configuration")->check(CLI::ExistingFile);
  run->add_option("--curves", p_curves, "directory of *.csv records");
  run->add_option("--out", p_out, "output directory");
  run->add_option("--prior", p_prior);
  run->add_option("--dataset", p_dataset);
  run->add_option("--kl", p_kl);
  run->add_option("--family", p_family);
  run->add_option("--formulation", p_form)->check(CLI::Range(1, 4));
  run->add_option("--methods", p_methods)->delimiter(',');
  run->add_option("--sigma-c", p_sigma, "value or 'auto'");
  run->add_option("--lambda-reg", p_lambda, "value or 'auto'");
  run->add_option("--n-synth", p_n);
  run->add_option("--modes", p_modes);
  run->add_option("--budget", p_budget, "refinement budget");
  run->add_option("--workers", p_workers);

  // export
  auto* exportc = app.add_subcommand("export", "Plot-ready CSV from a batch report");
  std::string x_report, x_kind, x_dir;
  exportc->add_option("--report", x_report)->required()->check(CLI::ExistingFile);
  exportc->add_option("--kind", x_kind)->required()->check(CLI::IsMember({"btc-overlay", "error-cdf", "param-scatter"}));
  exportc->add_option("--out-dir", x_dir)->required();

  CLI11_PARSE(app, argc, argv);

  try
  {
    if (*forward)
    {
      const auto y = make_params(f_family, f_params);
      const double t_end = f_t_end > 0.0 ? f_t_end : 4.0 * f_length / f_velocity;
      std::vector<double> t(f_samples);
      for (std::size_t i = 0; i < f_samples; ++i)
        t[i] = t_end * static_cast<double>(i + 1) / static_cast<double>(f_samples);
      const auto c = forward_dimensional(y, formulation_from_int(f_form), f_velocity, f_length, t);
      std::ostringstream s;
      s << "time_s,concentration\n" << std::setprecision(9);
      for (std::size_t i = 0; i < t.size(); ++i)
        s << t[i] << "," << std::max(c[i], 0.0) << "\n";
      emit(s.str(), f_out);
    }
    else if (*coarse)
    {
      const auto curve = load(c_curve.csv, c_curve.meta);
      CoarseFitOptions o;
      o.starts = c_starts;
      EstimationResult r;
      const auto form = formulation_from_int(c_form);
      if (c_method == "laplace")
        r = laplace_fit(curve, parse_family(c_family), form, {}, o);
      else if (c_method == "moments")
        r = moment_match(curve, form, o);
      else if (c_method == "ade-ls")
        r = ade_ls_fit(curve, c_starts);
      else
        r = ade_peak_fit(curve);
      r.metrics = evaluate(curve, model_at(r, curve));
      emit_json(to_json(r, curve.length), c_out);
    }
    else if (*generate)
    {
      const auto j = read_json(g_prior);
      const auto prior = prior_from_json(j.contains("prior") ? j["prior"] : j);
      const auto ds = generate_dataset(prior, g_n, formulation_from_int(g_form), parse_family(g_family), seed);
      save_dataset(ds, g_out);
      std::cerr << "wrote " << ds.size() << " curves to " << g_out << "\n";
    }
    else if (*fitkl)
    {
      const auto ds = load_dataset(k_dataset);
      const auto kl = fit_kl(ds, k_modes);
      save_kl(kl, k_out);
      std::cerr << "wrote " << kl.n_modes() << " modes to " << k_out << "\n";
    }
    else if (*embedc)
    {
      const auto kl = load_kl(e_kl);
      const auto padded = pad_with_zeros(load(e_curve.csv, e_curve.meta));
      const double sigma = resolve_sigma(e_sigma, padded, kl, seed);
      const auto e = embed_over_velocities(padded, kl, VelocityGrid::for_curve(padded), sigma);
      nlohmann::json j{{"sigma_c", sigma}, {"peak_velocity_m_s", e.peak_velocity}, {"rows", nlohmann::json::array()}};
      for (std::size_t m = 0; m < e.size(); ++m)
      {
        const auto row = e.z.row(static_cast<Eigen::Index>(m));
        j["rows"].push_back({{"velocity_m_s", e.velocities[m]},
                             {"feasible", static_cast<bool>(e.feasible[m])},
                             {"z", std::vector<double>(row.begin(), row.end())}});
      }
      emit_json(j, e_out);
    }
    else if (*estimate)
    {
      const auto ds = load_dataset(s_dataset);
      const auto kl = load_kl(s_kl);
      const auto curve = load(s_curve.csv, s_curve.meta);
      const auto padded = pad_with_zeros(curve);
      const auto grid = VelocityGrid::for_curve(padded);
      EstimationResult r;
      if (s_method == "exhaustive")
        r = estimate_exhaustive(padded, ds, grid);
      else
      {
        const double sigma = resolve_sigma(s_sigma, padded, kl, seed);
        const auto z = project_all(kl, ds.curves);
        const auto e = embed_over_velocities(padded, kl, grid, sigma);
        PbiOptions o;
        o.lambda_reg = s_lambda;
        r = s_method == "pbi" ? estimate_pbi(e, Manifold{&ds, &z}, o) : estimate_nni(e, Manifold{&ds, &z});
      }
      r.metrics = evaluate(curve, model_at(r, curve));
      emit_json(to_json(r, curve.length), s_out);
    }
    else if (*refinec)
    {
      const auto curve = load(r_curve.csv, r_curve.meta);
      RefineOptions o;
      o.budget = r_budget;
      o.seed = seed;
      const auto r = refine(result_from_json(read_json(r_result)), curve, o);
      emit_json(to_json(r, curve.length), r_out);
    }
    else if (*metricsc)
    {
      const auto curve = load(m_curve.csv, m_curve.meta);
      const auto r = result_from_json(read_json(m_result));
      emit_json(to_json(evaluate(curve, model_at(r, curve))), m_out);
    }
    else if (*run)
    {
      RunConfig cfg;
      if (!p_config.empty())
        cfg = config_from_json(read_json(p_config), fs::path(p_config).parent_path());
      if (!p_curves.empty())
        cfg.curves_dir = p_curves;
      if (!p_out.empty())
        cfg.output_dir = p_out;
      if (!p_prior.empty())
        cfg.prior = p_prior;
      if (!p_dataset.empty())
        cfg.dataset = p_dataset;
      if (!p_kl.empty())
        cfg.kl = p_kl;
      if (!p_family.empty())
        cfg.family = parse_family(p_family);
      if (p_form)
        cfg.formulation = formulation_from_int(*p_form);
      if (!p_methods.empty())
      {
        cfg.methods.clear();
        for (const auto& m : p_methods)
          cfg.methods.push_back(parse_method(m));
      }
      if (!p_sigma.empty())
        cfg.sigma_c = p_sigma == "auto" ? std::nullopt : std::optional<double>(std::stod(p_sigma));
      if (!p_lambda.empty())
        cfg.lambda_reg = p_lambda == "auto" ? -1.0 : std::stod(p_lambda);
      if (p_n)
        cfg.n_synth = *p_n;
      if (p_modes)
        cfg.n_modes = *p_modes;
      if (p_budget)
        cfg.refine_budget = *p_budget;
      if (p_workers)
        cfg.workers = *p_workers;
      if (app.get_option("--seed")->count() > 0 || p_config.empty())
        cfg.seed = seed;
      const auto report = pipeline_run(cfg);
      std::cerr << "stages run: " << (report.executed.empty() ? "none (all cached)" : "") ;
      for (const auto& s : report.executed)
        std::cerr << s << " ";
      std::cerr << "\n";
      for (const auto& [method, splits] : report.summary)
      {
        const auto& s = splits.at("all");
        std::cout << std::setw(10) << method << "  n=" << s.count << "  median rmse " << std::setprecision(4)
                  << s.median_rmse << "  median kld " << s.median_kld << "\n";
      }
    }
    else if (*exportc)
    {
      const auto report = report_from_json(read_json(x_report));
      for (const auto& p : export_plot_data(report, parse_plot_kind(x_kind), x_dir))
        std::cout << p.string() << "\n";
    }
  }
  catch (const std::exception& e)
  {
    std::cerr << "rivest: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
