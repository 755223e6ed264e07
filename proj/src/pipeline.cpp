// Copyright 2026 The rivest Authors
// SPDX-License-Identifier: Apache-2.0

#include "rivest/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <omp.h>

#include "rivest/coarse_estimators.hpp"
#include "rivest/container.hpp"
#include "rivest/error.hpp"
#include "rivest/global_opt.hpp"
#include "rivest/kl_rom.hpp"
#include "rivest/metrics.hpp"
#include "rivest/pbi_estimator.hpp"

namespace rivest
{

namespace fs = std::filesystem;

namespace
{

std::string num(double x)
{
  std::ostringstream s;
  s << std::setprecision(9) << x;
  return s.str();
}

double median(std::vector<double> x)
{
  std::sort(x.begin(), x.end());
  const auto n = x.size();
  return 0.5 * (x[n / 2] + x[(n - 1) / 2]);
}

nlohmann::json read_json(const fs::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw Error("cannot open " + path.string());
  try
  {
    return nlohmann::json::parse(in);
  }
  catch (const nlohmann::json::exception& e)
  {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text)
{
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out)
    throw Error("cannot write " + path.string());
}

std::string hash_json(const nlohmann::json& j) { return sha256_hex(j.dump()); }

/// Artifact bookkeeping in <output>/manifest.json.
class Stages
{
public:
  explicit Stages(fs::path dir) : dir_(std::move(dir))
  {
    const auto path = dir_ / "manifest.json";
    if (fs::exists(path))
    {
      try
      {
        manifest_ = read_json(path);
      }
      catch (const Error&)
      {
        manifest_ = nlohmann::json::object(); // unreadable manifest: rebuild everything
      }
    }
    if (!manifest_.is_object())
      manifest_ = nlohmann::json::object();
  }

  fs::path artifact(const std::string& name) const { return dir_ / name; }

  bool fresh(const std::string& stage, const std::string& key) const
  {
    if (!manifest_.contains(stage))
      return false;
    const auto& m = manifest_[stage];
    const auto path = dir_ / m.value("artifact", std::string());
    return m.value("key", std::string()) == key && fs::exists(path) && file_sha256(path) == m.value("sha256", "");
  }

  /// Content hash of the stage's artifact (what downstream keys depend on).
  std::string hash(const std::string& stage) const { return manifest_.at(stage).at("sha256").get<std::string>(); }

  void record(const std::string& stage, const std::string& key, const std::string& artifact)
  {
    manifest_[stage] = {{"key", key}, {"artifact", artifact}, {"sha256", file_sha256(dir_ / artifact)}};
    executed_.push_back(stage);
    write_text(dir_ / "manifest.json", manifest_.dump(2));
  }

  /// Externally supplied artifact: hashed in place, never rebuilt.
  void external(const std::string& stage, const fs::path& path)
  {
    manifest_[stage] = {{"key", "external"}, {"artifact", path.string()}, {"sha256", file_sha256(path)}};
    write_text(dir_ / "manifest.json", manifest_.dump(2));
  }

  const nlohmann::json& manifest() const { return manifest_; }
  const std::vector<std::string>& executed() const { return executed_; }

private:
  fs::path dir_;
  nlohmann::json manifest_;
  std::vector<std::string> executed_;
};

struct LoadedCurve
{
  std::string name;
  fs::path csv;
  std::string hash;
  std::string split;
  std::optional<MeasuredCurve> curve;
  std::string error;
};

std::vector<LoadedCurve> load_curves(const RunConfig& config)
{
  std::vector<LoadedCurve> out;
  for (const auto& entry : fs::directory_iterator(config.curves_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".csv")
      out.push_back({entry.path().stem().string(), fs::absolute(entry.path()), {}, {}, {}, {}});
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  if (out.empty())
    throw PreconditionError("no .csv curves in " + config.curves_dir.string());

  std::vector<std::string> names;
  for (const auto& c : out)
    names.push_back(c.name);
  const auto labels = split_labels(names, config.train_fraction, config.seed);
  for (std::size_t i = 0; i < out.size(); ++i)
  {
    auto& c = out[i];
    c.split = labels[i];
    const auto meta = default_sidecar(c.csv);
    c.hash = file_sha256(c.csv) + (fs::exists(meta) ? file_sha256(meta) : std::string("-"));
    try
    {
      auto curve = read_curve(c.csv, meta);
      require_estimable(curve);
      curve.name = c.name;
      c.curve = std::move(curve);
    }
    catch (const std::exception& e)
    {
      c.error = e.what();
    }
  }
  return out;
}

DimensionlessParams prior_centre(const LogNormalPrior& prior, KernelFamily family)
{
  DimensionlessParams y;
  y.family = family;
  for (int k = 0; k < kParamDim; ++k)
    y.y[k] = std::exp(prior.mu_log[k]);
  if (family == KernelFamily::PowerLaw)
    y.y[2] = std::min(y.y[2], 0.99);
  return y;
}

/// Shared, read-only state of the estimation stage.
struct Context
{
  const RunConfig* config = nullptr;
  const SyntheticDataset* dataset = nullptr;
  const KLModel* kl = nullptr;
  const RowMatrix* z = nullptr;
  const LogNormalPrior* prior = nullptr;
  double sigma_c = 0.0;
  std::optional<double> lambda;
  Execution execution = Execution::Parallel;

  VelocityGrid grid(const MeasuredCurve& curve) const
  {
    return {curve.peak_velocity(), config->grid_lo, config->grid_step, config->grid_count};
  }
};

std::vector<BatchRow> estimate_curve(const LoadedCurve& lc, const Context& ctx)
{
  const auto& cfg = *ctx.config;
  std::vector<BatchRow> rows;
  for (auto m : cfg.methods)
    rows.push_back({lc.name, lc.csv, lc.split, m, lc.curve ? lc.curve->length : 0.0, std::nullopt, lc.error});
  if (!lc.curve)
    return rows;

  const auto& curve = *lc.curve;
  const Manifold manifold{ctx.dataset, ctx.z};
  std::optional<MeasuredCurve> padded;
  std::optional<EmbeddedCurve> embedded;
  std::optional<EstimationResult> pbi;
  auto get_embedded = [&]() -> const EmbeddedCurve& {
    if (!embedded)
    {
      padded = pad_with_zeros(curve);
      embedded = embed_over_velocities(*padded, *ctx.kl, ctx.grid(curve), ctx.sigma_c, ctx.execution);
    }
    return *embedded;
  };
  auto get_pbi = [&]() -> const EstimationResult& {
    if (!pbi)
    {
      PbiOptions o;
      o.lambda_reg = ctx.lambda;
      o.execution = ctx.execution;
      pbi = estimate_pbi(get_embedded(), manifold, o);
    }
    return *pbi;
  };
  CoarseFitOptions coarse;
  coarse.centre = prior_centre(*ctx.prior, cfg.family);

  for (auto& row : rows)
  {
    try
    {
      EstimationResult r;
      switch (row.method)
      {
      case Method::PBI: r = get_pbi(); break;
      case Method::NNI: r = estimate_nni(get_embedded(), manifold, ctx.execution); break;
      case Method::Exhaustive:
        get_embedded();
        r = estimate_exhaustive(*padded, *ctx.dataset, ctx.grid(curve));
        break;
      case Method::LaplaceFit: r = laplace_fit(curve, cfg.family, cfg.formulation, {}, coarse); break;
      case Method::Moments: r = moment_match(curve, cfg.formulation, coarse); break;
      case Method::AdeLS: r = ade_ls_fit(curve); break;
      case Method::AdePeak: r = ade_peak_fit(curve); break;
      case Method::LIPO:
        r = lipo_estimate(curve, *ctx.prior, cfg.family, cfg.formulation, cfg.lipo_budget, cfg.seed);
        break;
      case Method::PBIRefined:
      {
        RefineOptions o;
        o.budget = cfg.refine_budget;
        o.seed = cfg.seed;
        r = refine(get_pbi(), curve, o);
        break;
      }
      }
      r.metrics = evaluate(curve, model_at(r, curve));
      row.result = std::move(r);
    }
    catch (const std::exception& e)
    {
      row.error = e.what();
    }
  }
  return rows;
}

std::string join_csv(const std::vector<std::string>& cells)
{
  std::string s;
  for (std::size_t i = 0; i < cells.size(); ++i)
    s += (i ? "," : "") + cells[i];
  return s + "\n";
}

void write_results_table(const BatchReport& report, KernelFamily family, const fs::path& path)
{
  const auto names = parameter_names(family);
  std::string out = join_csv({"curve", "split", "method", "velocity_m_s", std::string(names[0]),
                              std::string(names[1]), std::string(names[2]), "rmse", "kld", "error"});
  for (const auto& row : report.rows)
  {
    std::vector<std::string> cells{row.curve, row.split, std::string(to_string(row.method))};
    if (row.result)
    {
      const auto& r = *row.result;
      cells.push_back(num(r.velocity));
      cells.push_back(num(r.params.y[0]));
      cells.push_back(r.exchange ? num(r.params.y[1]) : "");
      cells.push_back(r.exchange ? num(r.params.y[2]) : "");
      cells.push_back(num(r.metrics->rmse));
      cells.push_back(num(r.metrics->kld));
      cells.push_back("");
    }
    else
    {
      cells.insert(cells.end(), 6, "");
      // quoted, commas in messages would break the columns
      std::string e = row.error;
      std::replace(e.begin(), e.end(), '"', '\'');
      cells.push_back("\"" + e + "\"");
    }
    out += join_csv(cells);
  }
  write_text(path, out);
}

} // namespace

RunConfig config_from_json(const nlohmann::json& j, const fs::path& base)
{
  RunConfig c;
  auto path = [&](const char* key) {
    fs::path p = j.at(key).get<std::string>();
    return p.is_relative() && !base.empty() ? base / p : p;
  };
  try
  {
    if (j.contains("curves_dir"))
      c.curves_dir = path("curves_dir");
    if (j.contains("output_dir"))
      c.output_dir = path("output_dir");
    if (j.contains("prior"))
      c.prior = path("prior");
    if (j.contains("dataset"))
      c.dataset = path("dataset");
    if (j.contains("kl"))
      c.kl = path("kl");
    if (j.contains("family"))
      c.family = parse_family(j["family"].get<std::string>());
    if (j.contains("formulation"))
      c.formulation = formulation_from_int(j["formulation"].get<int>());
    if (j.contains("methods"))
    {
      c.methods.clear();
      for (const auto& m : j["methods"])
        c.methods.push_back(parse_method(m.get<std::string>()));
    }
    if (j.contains("sigma_c") && j["sigma_c"].is_number())
      c.sigma_c = j["sigma_c"].get<double>();
    if (j.contains("lambda_reg"))
    {
      if (j["lambda_reg"].is_number())
        c.lambda_reg = j["lambda_reg"].get<double>();
      else if (j["lambda_reg"] == "auto")
        c.lambda_reg = -1.0;
    }
    if (j.contains("velocity_grid"))
    {
      const auto& g = j["velocity_grid"];
      c.grid_lo = g.value("lo", c.grid_lo);
      c.grid_step = g.value("step", c.grid_step);
      c.grid_count = g.value("count", c.grid_count);
    }
    c.n_synth = j.value("n_synth", c.n_synth);
    c.n_modes = j.value("n_modes", c.n_modes);
    c.train_fraction = j.value("train_fraction", c.train_fraction);
    c.refine_budget = j.value("refine_budget", c.refine_budget);
    c.lipo_budget = j.value("lipo_budget", c.lipo_budget);
    c.seed = j.value("seed", c.seed);
    c.workers = j.value("workers", c.workers);
  }
  catch (const nlohmann::json::exception& e)
  {
    throw FormatError(std::string("bad run config: ") + e.what());
  }
  return c;
}

nlohmann::json to_json(const RunConfig& c)
{
  nlohmann::json j;
  j["curves_dir"] = c.curves_dir.string();
  j["output_dir"] = c.output_dir.string();
  if (c.prior)
    j["prior"] = c.prior->string();
  if (c.dataset)
    j["dataset"] = c.dataset->string();
  if (c.kl)
    j["kl"] = c.kl->string();
  j["family"] = std::string(to_string(c.family));
  j["formulation"] = to_int(c.formulation);
  j["methods"] = nlohmann::json::array();
  for (auto m : c.methods)
    j["methods"].push_back(std::string(to_string(m)));
  j["sigma_c"] = c.sigma_c ? nlohmann::json(*c.sigma_c) : nlohmann::json("auto");
  if (c.lambda_reg)
    j["lambda_reg"] = *c.lambda_reg < 0.0 ? nlohmann::json("auto") : nlohmann::json(*c.lambda_reg);
  j["velocity_grid"] = {{"lo", c.grid_lo}, {"step", c.grid_step}, {"count", c.grid_count}};
  j["n_synth"] = c.n_synth;
  j["n_modes"] = c.n_modes;
  j["train_fraction"] = c.train_fraction;
  j["refine_budget"] = c.refine_budget;
  j["lipo_budget"] = c.lipo_budget;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  return j;
}

void validate(const RunConfig& c)
{
  if (c.curves_dir.empty() || !fs::is_directory(c.curves_dir))
    throw PreconditionError("curves directory '" + c.curves_dir.string() + "' does not exist");
  if (c.output_dir.empty())
    throw PreconditionError("an output directory is required");
  for (const auto& p : {c.prior, c.dataset, c.kl})
    if (p && !fs::exists(*p))
      throw PreconditionError("'" + p->string() + "' does not exist");
  if (c.methods.empty())
    throw PreconditionError("at least one method is required");
  if (c.sigma_c && !(*c.sigma_c > 0.0))
    throw PreconditionError("sigma_c must be > 0");
  if (!(c.grid_lo > 0.0) || !(c.grid_step > 0.0) || c.grid_count < 1)
    throw PreconditionError("velocity grid needs lo > 0, step > 0, count >= 1");
  if (!(c.train_fraction > 0.0 && c.train_fraction <= 1.0))
    throw PreconditionError("train fraction must lie in (0, 1]");
  if (c.n_synth < 4 || c.n_modes < 1 || c.workers < 1)
    throw PreconditionError("n_synth >= 4, n_modes >= 1 and workers >= 1 are required");
}

std::vector<std::string> split_labels(const std::vector<std::string>& names, double fraction, std::uint64_t seed)
{
  std::vector<std::pair<std::string, std::size_t>> keys;
  for (std::size_t i = 0; i < names.size(); ++i)
    keys.emplace_back(sha256_hex(std::to_string(seed) + ":" + names[i]), i);
  std::sort(keys.begin(), keys.end());
  const auto n = names.size();
  auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, std::min<std::size_t>(n, 1), n);
  std::vector<std::string> labels(n, "test");
  for (std::size_t r = 0; r < n_train; ++r)
    labels[keys[r].second] = "train";
  return labels;
}

std::vector<double> model_at(const EstimationResult& r, const MeasuredCurve& curve)
{
  if (r.exchange)
    return forward_dimensional(r.params, r.formulation, r.velocity, curve.length, curve.times);
  std::vector<double> c(curve.size());
  for (std::size_t i = 0; i < c.size(); ++i)
    c[i] = ade_analytical(r.params.y[0], 1.0, 1.0, curve.times[i] * r.velocity / curve.length, Formulation::Infinite);
  return c;
}

void summarize(BatchReport& report)
{
  report.summary.clear();
  for (auto m : report.methods)
  {
    const std::string name(to_string(m));
    for (const std::string split : {"train", "test", "all"})
    {
      std::vector<double> r, k;
      for (const auto& row : report.rows)
        if (row.method == m && row.result && row.result->metrics && (split == "all" || row.split == split))
        {
          r.push_back(row.result->metrics->rmse);
          k.push_back(row.result->metrics->kld);
        }
      MethodSummary s;
      s.count = r.size();
      if (!r.empty())
      {
        s.median_rmse = median(r);
        s.median_kld = median(k);
      }
      report.summary[name][split] = s;
    }
  }
}

nlohmann::json to_json(const BatchReport& report)
{
  nlohmann::json j;
  j["curves"] = report.curves;
  j["methods"] = nlohmann::json::array();
  for (auto m : report.methods)
    j["methods"].push_back(std::string(to_string(m)));
  j["rows"] = nlohmann::json::array();
  for (const auto& row : report.rows)
  {
    nlohmann::json r{{"curve", row.curve},
                     {"csv", row.csv.string()},
                     {"split", row.split},
                     {"method", std::string(to_string(row.method))},
                     {"length_m", row.length}};
    if (row.result)
      r["result"] = to_json(*row.result, row.length);
    if (!row.error.empty())
      r["error"] = row.error;
    j["rows"].push_back(std::move(r));
  }
  for (const auto& [method, splits] : report.summary)
    for (const auto& [split, s] : splits)
      j["summary"][method][split] = {{"count", s.count}, {"median_rmse", s.median_rmse}, {"median_kld", s.median_kld}};
  j["stages"] = report.stages;
  return j;
}

BatchReport report_from_json(const nlohmann::json& j)
{
  BatchReport report;
  try
  {
    report.curves = j.at("curves").get<std::vector<std::string>>();
    for (const auto& m : j.at("methods"))
      report.methods.push_back(parse_method(m.get<std::string>()));
    for (const auto& r : j.at("rows"))
    {
      BatchRow row;
      row.curve = r.at("curve").get<std::string>();
      row.csv = r.at("csv").get<std::string>();
      row.split = r.at("split").get<std::string>();
      row.method = parse_method(r.at("method").get<std::string>());
      row.length = r.at("length_m").get<double>();
      if (r.contains("result"))
        row.result = result_from_json(r["result"]);
      row.error = r.value("error", std::string());
      report.rows.push_back(std::move(row));
    }
    report.stages = j.value("stages", nlohmann::json::object());
  }
  catch (const nlohmann::json::exception& e)
  {
    throw FormatError(std::string("bad batch report: ") + e.what());
  }
  summarize(report);
  return report;
}

BatchReport pipeline_run(const RunConfig& config)
{
  validate(config);
  fs::create_directories(config.output_dir);
  Stages stages(config.output_dir);
  auto curves = load_curves(config);

  nlohmann::json train_hashes = nlohmann::json::array();
  std::vector<MeasuredCurve> train;
  for (const auto& c : curves)
    if (c.split == "train" && c.curve)
    {
      train_hashes.push_back(c.hash);
      train.push_back(*c.curve);
    }

  // coarse fits of the training curves -> prior
  LogNormalPrior prior;
  if (config.prior)
  {
    stages.external("prior", *config.prior);
    prior = prior_from_json(read_json(*config.prior));
  }
  else
  {
    const std::string key = hash_json({{"stage", "prior"},
                                       {"train", train_hashes},
                                       {"family", to_string(config.family)},
                                       {"formulation", to_int(config.formulation)}});
    if (stages.fresh("prior", key))
      prior = prior_from_json(read_json(stages.artifact("prior.json")).at("prior"));
    else
    {
      std::vector<std::optional<DimensionlessParams>> fits(train.size());
#pragma omp parallel for num_threads(config.workers) schedule(dynamic, 1)
      for (std::size_t i = 0; i < train.size(); ++i)
      {
        try
        {
          fits[i] = laplace_fit(train[i], config.family, config.formulation).params;
        }
        catch (const std::exception&)
        {
          // a failed coarse fit only removes the curve from the prior sample
        }
      }
      std::vector<DimensionlessParams> estimates;
      nlohmann::json listed = nlohmann::json::array();
      for (const auto& f : fits)
        if (f)
        {
          estimates.push_back(*f);
          listed.push_back(to_json(*f));
        }
      prior = fit_prior(estimates);
      write_text(stages.artifact("prior.json"), nlohmann::json{{"prior", to_json(prior)}, {"estimates", listed}}.dump(2));
      stages.record("prior", key, "prior.json");
    }
  }

  SyntheticDataset dataset;
  if (config.dataset)
  {
    stages.external("dataset", *config.dataset);
    dataset = load_dataset(*config.dataset);
  }
  else
  {
    const std::string key = hash_json({{"stage", "dataset"},
                                       {"prior", stages.hash("prior")},
                                       {"n", config.n_synth},
                                       {"family", to_string(config.family)},
                                       {"formulation", to_int(config.formulation)},
                                       {"seed", config.seed}});
    if (stages.fresh("dataset", key))
      dataset = load_dataset(stages.artifact("dataset.bin"));
    else
    {
      dataset = generate_dataset(prior, config.n_synth, config.formulation, config.family, config.seed);
      save_dataset(dataset, stages.artifact("dataset.bin"));
      stages.record("dataset", key, "dataset.bin");
    }
  }
  if (dataset.family != config.family || dataset.formulation != config.formulation)
    throw PreconditionError("dataset family/formulation differ from the run configuration");

  KLModel kl;
  if (config.kl)
  {
    stages.external("kl", *config.kl);
    kl = load_kl(*config.kl);
  }
  else
  {
    const std::string key = hash_json({{"stage", "kl"}, {"dataset", stages.hash("dataset")}, {"modes", config.n_modes}});
    if (stages.fresh("kl", key))
      kl = load_kl(stages.artifact("kl.bin"));
    else
    {
      kl = fit_kl(dataset, config.n_modes);
      save_kl(kl, stages.artifact("kl.bin"));
      stages.record("kl", key, "kl.bin");
    }
  }
  if (!(kl.grid == dataset.grid))
    throw PreconditionError("KL model and dataset use different time grids");

  double sigma_c = 0.0;
  {
    const std::string key =
        hash_json({{"stage", "sigma"},
                   {"kl", stages.hash("kl")},
                   {"train", train_hashes},
                   {"value", config.sigma_c ? nlohmann::json(*config.sigma_c) : nlohmann::json("auto")},
                   {"seed", config.seed}});
    if (stages.fresh("sigma", key))
      sigma_c = read_json(stages.artifact("sigma.json")).at("sigma_c").get<double>();
    else
    {
      nlohmann::json j;
      if (config.sigma_c)
        j["sigma_c"] = sigma_c = *config.sigma_c;
      else
      {
        std::vector<MeasuredCurve> padded;
        for (const auto& c : train)
          padded.push_back(pad_with_zeros(c));
        const auto candidates = default_sigma_candidates();
        const auto t = tune_sigma_c(padded, kl, candidates, config.seed);
        j = {{"sigma_c", t.sigma_c}, {"candidates", t.candidates}, {"scores", t.scores}};
        sigma_c = t.sigma_c;
      }
      write_text(stages.artifact("sigma.json"), j.dump(2));
      stages.record("sigma", key, "sigma.json");
    }
  }

  nlohmann::json all_curves = nlohmann::json::array();
  for (const auto& c : curves)
    all_curves.push_back({c.name, c.hash, c.split});
  nlohmann::json settings = to_json(config);
  for (const char* k : {"curves_dir", "output_dir", "workers", "prior", "dataset", "kl"})
    settings.erase(k);
  const std::string key = hash_json({{"stage", "estimate"},
                                     {"prior", stages.hash("prior")},
                                     {"dataset", stages.hash("dataset")},
                                     {"kl", stages.hash("kl")},
                                     {"sigma", stages.hash("sigma")},
                                     {"curves", all_curves},
                                     {"settings", settings}});
  BatchReport report;
  if (stages.fresh("estimate", key))
    report = report_from_json(read_json(stages.artifact("report.json")));
  else
  {
    const RowMatrix z = project_all(kl, dataset.curves);
    Context ctx{&config, &dataset, &kl, &z, &prior, sigma_c, std::nullopt,
                config.workers > 1 ? Execution::Serial : Execution::Parallel};
    if (config.lambda_reg && *config.lambda_reg >= 0.0)
      ctx.lambda = config.lambda_reg;
    else if (config.lambda_reg)
    {
      std::vector<EmbeddedCurve> embedded;
      for (const auto& c : train)
        embedded.push_back(embed_over_velocities(pad_with_zeros(c), kl, ctx.grid(c), sigma_c));
      ctx.lambda = regularization_weight(embedded, Manifold{&dataset, &z}).lambda;
    }

    std::vector<std::vector<BatchRow>> per_curve(curves.size());
#pragma omp parallel for num_threads(config.workers) schedule(dynamic, 1)
    for (std::size_t i = 0; i < curves.size(); ++i)
      per_curve[i] = estimate_curve(curves[i], ctx);

    report.methods = config.methods;
    for (std::size_t i = 0; i < curves.size(); ++i)
    {
      report.curves.push_back(curves[i].name);
      for (auto& row : per_curve[i])
        report.rows.push_back(std::move(row));
    }
    summarize(report);
    // recorded first so the report lists every stage
    report.stages = stages.manifest();
    report.stages["estimate"] = {{"key", key}, {"artifact", "report.json"}};
    write_text(stages.artifact("report.json"), to_json(report).dump(2));
    write_results_table(report, config.family, stages.artifact("results.csv"));
    stages.record("estimate", key, "report.json");
  }
  report.executed = stages.executed();
  return report;
}

PlotKind parse_plot_kind(std::string_view name)
{
  if (name == "btc-overlay")
    return PlotKind::BtcOverlay;
  if (name == "error-cdf")
    return PlotKind::ErrorCdf;
  if (name == "param-scatter")
    return PlotKind::ParamScatter;
  throw PreconditionError("unknown export kind '" + std::string(name) + "'");
}

std::vector<fs::path> export_plot_data(const BatchReport& report, PlotKind kind, const fs::path& dir)
{
  fs::create_directories(dir);
  std::vector<fs::path> written;
  auto rows_of = [&](const std::string& curve) {
    std::vector<const BatchRow*> out;
    for (const auto& row : report.rows)
      if (row.curve == curve)
        out.push_back(&row);
    return out;
  };

  if (kind == PlotKind::BtcOverlay)
  {
    for (const auto& name : report.curves)
    {
      const auto rows = rows_of(name);
      if (rows.empty())
        continue;
      MeasuredCurve curve;
      try
      {
        curve = read_curve(rows[0]->csv, default_sidecar(rows[0]->csv));
      }
      catch (const Error&)
      {
        continue; // malformed record: nothing to overlay
      }
      std::vector<std::string> header{"time_s", "measured"};
      std::vector<std::vector<double>> series;
      for (const auto* row : rows)
        if (row->result)
        {
          header.push_back(std::string(to_string(row->method)));
          series.push_back(model_at(*row->result, curve));
        }
      std::string out = join_csv(header);
      for (std::size_t i = 0; i < curve.size(); ++i)
      {
        std::vector<std::string> cells{num(curve.times[i]), num(curve.concentrations[i])};
        for (const auto& s : series)
          cells.push_back(num(s[i]));
        out += join_csv(cells);
      }
      const auto path = dir / ("btc_overlay_" + name + ".csv");
      write_text(path, out);
      written.push_back(path);
    }
  }
  else if (kind == PlotKind::ErrorCdf)
  {
    for (auto m : report.methods)
    {
      std::vector<double> r, k;
      for (const auto& row : report.rows)
        if (row.method == m && row.result && row.result->metrics)
        {
          r.push_back(row.result->metrics->rmse);
          k.push_back(row.result->metrics->kld);
        }
      std::sort(r.begin(), r.end());
      std::sort(k.begin(), k.end());
      std::string out = join_csv({"fraction", "rmse", "kld"});
      for (std::size_t i = 0; i < r.size(); ++i)
        out += join_csv({num(static_cast<double>(i + 1) / static_cast<double>(r.size())), num(r[i]), num(k[i])});
      std::string tag(to_string(m));
      std::replace(tag.begin(), tag.end(), '+', '_');
      const auto path = dir / ("error_cdf_" + tag + ".csv");
      write_text(path, out);
      written.push_back(path);
    }
  }
  else
  {
    std::vector<std::string> header{"curve", "split", "length_m"};
    for (auto m : report.methods)
      for (const char* p : {"velocity_m_s", "y1", "y2", "y3"})
        header.push_back(std::string(to_string(m)) + ":" + p);
    std::string out = join_csv(header);
    for (const auto& name : report.curves)
    {
      const auto rows = rows_of(name);
      std::vector<std::string> cells{name, rows.empty() ? "" : rows[0]->split,
                                     rows.empty() ? "" : num(rows[0]->length)};
      for (auto m : report.methods)
      {
        const auto it = std::find_if(rows.begin(), rows.end(), [&](const BatchRow* r) { return r->method == m; });
        if (it == rows.end() || !(*it)->result)
        {
          cells.insert(cells.end(), 4, "");
          continue;
        }
        const auto& r = *(*it)->result;
        cells.push_back(num(r.velocity));
        cells.push_back(num(r.params.y[0]));
        cells.push_back(r.exchange ? num(r.params.y[1]) : "");
        cells.push_back(r.exchange ? num(r.params.y[2]) : "");
      }
      out += join_csv(cells);
    }
    const auto path = dir / "param_scatter.csv";
    write_text(path, out);
    written.push_back(path);
  }
  return written;
}

} // namespace rivest
