#include "spsurv/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "spsurv/archive.hpp"
#include "spsurv/criteria.hpp"
#include "spsurv/csv.hpp"
#include "spsurv/diagnostics.hpp"
#include "spsurv/kernels.hpp"
#include "spsurv/simgen.hpp"
#include "spsurv/study.hpp"
#include "spsurv/summary.hpp"

namespace spsurv {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct MissingFile : std::runtime_error {
  explicit MissingFile(const std::string& path) : std::runtime_error("file not found: " + path) {}
};

void require_file(const std::string& path) {
  if (!path.empty() && !fs::exists(path)) throw MissingFile(path);
}

// Reads flat JSON objects (or the "config" member of a run's meta.json).
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    json j = json::parse(in);
    if (j.contains("config") && j["config"].is_object()) j = j["config"];
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : j.items()) {
      CLI::ConfigItem item;
      item.name = key;
      const auto text = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.is_boolean() ? (v.get<bool>() ? "true" : "false") : v.dump(); };
      if (value.is_array())
        for (const auto& v : value) item.inputs.push_back(text(v));
      else if (!value.is_null())
        item.inputs.push_back(text(value));
      items.push_back(std::move(item));
    }
    return items;
  }
};

// Options the user set explicitly (command line or config file), as given.
json echo_options(const CLI::App& app) {
  json j = json::object();
  for (const CLI::Option* opt : app.get_options()) {
    const std::string name = opt->get_lnames().empty() ? "" : opt->get_lnames().front();
    if (name.empty() || name == "help" || name == "config" || name == "dry-run" || opt->count() == 0) continue;
    const auto& res = opt->results();
    if (opt->get_type_size() == 0) {
      j[name] = true;
    } else if (opt->get_items_expected_max() > 1) {
      j[name] = res;
    } else if (!res.empty()) {
      j[name] = res.back();
    }
  }
  return j;
}

void add_fit_options(CLI::App* app, FitOptions& o) {
  app->add_option("--data", o.data, "CSV with t1, t2, covariates and location columns")->required();
  app->add_option("--t1", o.t1, "lower endpoint column")->capture_default_str();
  app->add_option("--t2", o.t2, "upper endpoint column (blank = right censored)")->capture_default_str();
  app->add_option("--trunc", o.trunc, "left-truncation time column");
  app->add_option("--covariates", o.covariates, "covariate columns")->delimiter(',');
  app->add_option("--location", o.location, "areal id or site id column");
  app->add_option("--coord-x", o.coord_x, "x coordinate column (georeferenced)");
  app->add_option("--coord-y", o.coord_y, "y coordinate column (georeferenced)");
  app->add_option("--sites", o.sites, "site table: id,x,y");
  app->add_option("--model", o.model, "AFT, PH or PO")->capture_default_str();
  app->add_option("--family", o.family, "loglogistic, lognormal or weibull")->capture_default_str();
  app->add_option("--frailty", o.frailty, "none, iid, icar or grf")->capture_default_str();
  app->add_option("--adjacency", o.adjacency, "ICAR adjacency (0/1 matrix or 1-based edge list)");
  app->add_option("--nu", o.nu, "powered-exponential shape in (0,2]")->capture_default_str();
  app->add_option("--fsa-knots", o.fsa_knots, "knots of the full-scale approximation (0 = exact GRF)");
  app->add_option("--fsa-blocks", o.fsa_blocks, "blocks of the full-scale approximation")->capture_default_str();
  app->add_flag("--selection", o.selection, "stochastic search variable selection");
  app->add_option("--nonlinear", o.nonlinear, "covariates with B-spline terms")->delimiter(',');
  app->add_option("--spline-k", o.spline_k, "retained basis functions per spline term")->capture_default_str();
  app->add_option("--J", o.J, "Bernstein degree")->capture_default_str();
  app->add_option("--nburn", o.nburn)->capture_default_str();
  app->add_option("--nsave", o.nsave)->capture_default_str();
  app->add_option("--nskip", o.nskip, "iterations discarded between saved draws")->capture_default_str();
  app->add_option("--seed", o.seed)->capture_default_str();
  app->add_option("--l0", o.l0, "iterations before proposal adaptation")->capture_default_str();
  app->add_option("--prerun-iterations", o.prerun_iterations)->capture_default_str();
  app->add_flag("--no-prerun", o.no_prerun, "skip the parametric prerun");
  app->add_option("--threads", o.threads, "likelihood kernel threads (0 = OpenMP default)");
  app->add_option("--out", o.out, "output directory")->capture_default_str();
  app->add_flag("--loglik-csv", o.loglik_csv, "also write loglik.csv");
  app->add_flag("--svg", o.svg, "write coxsnell.svg");
}

json criteria_json(const PosteriorArchive& a) {
  json c = json::object();
  if (a.draws.rows() >= 2 && a.loglik.size() > 0) {
    const auto lp = lpml(a.loglik);
    const auto w = waic(a.loglik);
    c["lpml"] = lp.lpml;
    c["waic"] = w.waic;
    c["p_w"] = w.p_w;
  }
  if (a.draws.rows() >= 1) {
    const auto d = dic(a);
    c["dic"] = d.dic;
    c["p_d"] = d.p_d;
  }
  return c;
}

void write_fit_summary(std::ostream& out, const FitInputs& in, const PosteriorArchive& a, const json& crit,
                       const std::vector<SubModel>& sel) {
  const auto& d = in.loaded.data;
  out << "model: " << to_string(in.mcmc.model) << "  centering: " << to_string(in.mcmc.family)
      << "  frailty: " << to_string(in.mcmc.frailty.kind) << '\n'
      << "n = " << d.n() << "  locations = " << d.m() << "  covariates = " << d.p() << "  iterations = " << a.iterations
      << "  saved = " << a.draws.rows() << "\n\n";
  write_summary_table(summarize(a), out);
  out << "\nacceptance rates\n";
  for (const auto& [name, s] : a.blocks) {
    if (name.rfind("v[", 0) == 0) continue;
    out << "  " << name << ": " << format_double(s.rate()) << " (" << s.accepted << "/" << s.proposed;
    if (s.nonfinite) out << ", " << s.nonfinite << " non-finite";
    out << ")\n";
  }
  out << "\ncriteria\n";
  for (const auto& [k, v] : crit.items()) out << "  " << k << " = " << format_double(v.get<double>()) << '\n';
  if (!sel.empty()) {
    out << "\nselected sub-models\n";
    for (std::size_t k = 0; k < sel.size() && k < 10; ++k) out << "  " << sel[k].covariates << "  " << format_double(sel[k].proportion) << '\n';
  }
}

int cmd_fit(const FitOptions& o, const json& echo, bool dry_run, std::ostream& out) {
  FitInputs in = prepare_fit(o);
  if (o.threads > 0) set_kernel_threads(o.threads);
  Sampler sampler(in.loaded.data, in.mcmc);
  if (dry_run) {
    const ResolvedPriors p = resolve_priors(sampler.context(), in.mcmc);
    json j;
    j["n"] = in.loaded.data.n();
    j["p"] = in.loaded.data.p();
    j["locations"] = in.loaded.data.m();
    j["parameters"] = sampler.layout().names(in.loaded.data.covariate_names(), sampler.context().spline_names());
    j["J"] = in.mcmc.hyper.J;
    j["g"] = p.g;
    j["beta0"] = to_json(p.beta0);
    j["W0"] = to_json(p.W0);
    j["a_alpha"] = in.mcmc.hyper.a_alpha;
    j["b_alpha"] = in.mcmc.hyper.b_alpha;
    if (in.mcmc.frailty.kind != FrailtyKind::None) {
      j["a_tau"] = in.mcmc.hyper.a_tau;
      j["b_tau"] = in.mcmc.hyper.b_tau;
    }
    if (in.mcmc.frailty.kind == FrailtyKind::GRF) {
      j["phi0"] = p.phi0;
      j["a_phi"] = in.mcmc.hyper.a_phi;
      j["b_phi"] = p.b_phi;
    }
    j["theta0"] = "parametric prerun estimate";
    j["V0"] = "10 x parametric prerun covariance";
    out << j.dump(2) << '\n';
    return 0;
  }
  const PosteriorArchive a = sampler.run();
  const json crit = criteria_json(a);
  const auto sel = selection_table(a, in.loaded.data.covariate_names());
  json extra;
  extra["criteria"] = crit;
  json st = json::array();
  for (const auto& s : sel) st.push_back({{"covariates", s.covariates}, {"proportion", s.proportion}});
  extra["selection"] = st;
  write_archive(a, o.out, echo, extra, o.loglik_csv);
  std::ostringstream text;
  write_fit_summary(text, in, a, crit, sel);
  std::ofstream(o.out + "/summary.txt") << text.str();
  out << text.str();
  return 0;
}

struct SimulateOptions {
  std::string design = "sim1", model = "PH", out = "sim.csv", adjacency_out, sites_out, truth_out;
  std::uint64_t seed = 1;
  int per_location = 0;
};

int cmd_simulate(const SimulateOptions& o, std::ostream& out) {
  SimDesign d = SimDesign::preset(o.design, parse_model(o.model));
  if (o.per_location > 0) d.per_location = o.per_location;
  SimulatedData sim = simulate(d, o.seed);
  const fs::path stem = fs::path(o.out).replace_extension();
  if (d.frailty == FrailtyKind::GRF) {
    const std::string sites = o.sites_out.empty() ? stem.string() + "_sites.csv" : o.sites_out;
    std::ofstream s(sites);
    write_csv_row(s, {"id", "x", "y"});
    for (int i = 0; i < sim.data.m(); ++i)
      write_csv_row(s, {sim.data.location_ids[static_cast<std::size_t>(i)], format_double((*sim.data.coords)(i, 0)),
                        format_double((*sim.data.coords)(i, 1))});
    out << "sites: " << sites << '\n';
  }
  if (d.frailty == FrailtyKind::ICAR) {
    const std::string adj = o.adjacency_out.empty() ? stem.string() + "_adjacency.txt" : o.adjacency_out;
    std::ofstream s(adj);
    write_adjacency(sim.frailty.adjacency, s);
    out << "adjacency: " << adj << '\n';
  }
  write_csv(sim.data, o.out);
  if (!o.truth_out.empty()) {
    std::ofstream s(o.truth_out);
    write_csv_row(s, {"row", "time", "location", "frailty"});
    for (std::size_t i = 0; i < sim.true_times.size(); ++i) {
      const int loc = sim.data[i].location;
      write_csv_row(s, {std::to_string(i + 1), format_double(sim.true_times[i]), std::to_string(loc + 1),
                        format_double(sim.v.size() > loc ? sim.v[loc] : 0.0)});
    }
  }
  out << "data: " << o.out << " (" << sim.data.n() << " records)\n";
  return 0;
}

struct DiagnoseOptions {
  std::string archive, out;
  int draws = 10;
  bool svg = false;
};

int cmd_diagnose(const DiagnoseOptions& o, std::ostream& out) {
  require_file(o.archive + "/meta.json");
  const LoadedArchive la = read_archive(o.archive);
  FitOptions fo;
  CLI::App replay;
  add_fit_options(&replay, fo);
  replay.config_formatter(std::make_shared<JsonConfig>());
  replay.set_config("--config");
  const std::string meta = o.archive + "/meta.json";
  std::vector<std::string> args{"--config", meta};
  std::reverse(args.begin(), args.end());
  replay.parse(args);
  require_file(fo.data);
  const FitInputs in = prepare_fit(fo);
  const ModelContext ctx(in.loaded.data, in.mcmc.model, in.mcmc.family, in.mcmc.hyper.J, in.mcmc.nonlinear, in.mcmc.spline_K);
  const auto& a = la.archive;
  const std::string dir = o.out.empty() ? o.archive : o.out;
  fs::create_directories(dir);
  const auto points = residual_plot_data(a, ctx, o.draws);
  {
    std::ofstream csv(dir + "/coxsnell.csv");
    write_plot_csv(points, csv);
  }
  if (o.svg) {
    std::ofstream svg(dir + "/coxsnell.svg");
    write_plot_svg(points, svg);
  }
  out << "cox-snell: " << dir << "/coxsnell.csv (" << points.size() << " points, slope "
      << format_double(points.size() >= 2 ? cumhaz_slope(points, 0.01) : NAN) << ")\n";
  const json crit = criteria_json(a);
  const json stored = la.meta.value("criteria", json::object());
  out << "criteria (recomputed / stored)\n";
  for (const auto& [k, v] : crit.items()) {
    out << "  " << k << " = " << format_double(v.get<double>());
    if (stored.contains(k)) out << " / " << format_double(stored[k].get<double>());
    out << '\n';
  }
  if (a.layout.J > 1 && a.draws.rows() >= 2) {
    const auto bf = bf_parametric(a);
    out << "log BF10 (TBP vs parametric baseline) = " << format_double(bf.log_bf10) << '\n';
  }
  for (std::size_t t = 0; t < ctx.splines().size() && a.draws.rows() >= 2; ++t) {
    const auto bf = bf_linearity(a, ctx, static_cast<int>(t));
    out << "log BF10 (nonlinear " << in.loaded.data.covariate_names()[static_cast<std::size_t>(ctx.splines()[t].covariate)]
        << ") = " << format_double(bf.log_bf10) << '\n';
  }
  return 0;
}

struct StudyOptions {
  std::string design = "sim1", truth = "PH", out = "spsurv_study";
  std::vector<std::string> fits{"PH"};
  int replicates = 10, jobs = 1, nburn = 1000, nsave = 1000, nskip = 0, J = 15, prerun_iterations = 2000,
      residual_draws = 0;
  long l0 = 1000;
  std::uint64_t seed = 1;
};

int cmd_mc_study(const StudyOptions& o, std::ostream& out) {
  StudySpec spec;
  spec.design = o.design;
  spec.truth = parse_model(o.truth);
  spec.fits.clear();
  for (const auto& f : o.fits) spec.fits.push_back(parse_model(f));
  spec.replicates = o.replicates;
  spec.seed = o.seed;
  spec.mcmc.nburn = o.nburn;
  spec.mcmc.nsave = o.nsave;
  spec.mcmc.nskip = o.nskip;
  spec.mcmc.l0 = o.l0;
  spec.mcmc.hyper.J = o.J;
  spec.mcmc.prerun_iterations = o.prerun_iterations;
  spec.mcmc.store_loglik = true;
  spec.residual_draws = o.residual_draws;
  for (int g = 1; g <= 40; ++g) spec.s0_grid.push_back(0.1 * g);
  const auto results = run_study(spec, o.jobs, [&](const ReplicateResult& r) {
    out << "replicate " << r.replicate + 1 << " done\n" << std::flush;
  });
  fs::create_directories(o.out);
  {
    std::ofstream csv(o.out + "/study.csv");
    write_study_csv(spec, results, csv);
  }
  const Eigen::VectorXd truth = SimDesign::preset(o.design, spec.truth).beta;
  for (std::size_t k = 0; k < spec.fits.size(); ++k) {
    Eigen::VectorXd bias = Eigen::VectorXd::Zero(truth.size()), cover = bias;
    double tau_bias = 0.0;
    int lpml_best = 0, dic_best = 0;
    for (const auto& r : results) {
      const auto& f = r.fits[k];
      bias += f.beta_mean - truth;
      for (Eigen::Index j = 0; j < truth.size(); ++j) cover[j] += f.beta_lower[j] <= truth[j] && truth[j] <= f.beta_upper[j];
      tau_bias += f.tau2_median - 1.0;
      bool lb = true, db = true;
      for (const auto& g : r.fits) lb &= f.lpml >= g.lpml, db &= f.dic <= g.dic;
      lpml_best += lb, dic_best += db;
    }
    const double R = static_cast<double>(results.size());
    out << "fit " << to_string(spec.fits[k]) << ": ";
    for (Eigen::Index j = 0; j < truth.size(); ++j)
      out << "beta" << j + 1 << " bias " << format_double(bias[j] / R) << " cp " << format_double(cover[j] / R) << "; ";
    out << "tau2 median bias " << format_double(tau_bias / R) << "; best LPML " << lpml_best << "/" << results.size()
        << ", best DIC " << dic_best << "/" << results.size() << '\n';
  }
  out << "table: " << o.out << "/study.csv\n";
  return 0;
}

}  // namespace

FitInputs prepare_fit(const FitOptions& o) {
  require_file(o.data);
  require_file(o.sites);
  require_file(o.adjacency);
  FitInputs in;
  CsvSchema schema;
  schema.t1 = o.t1;
  schema.t2 = o.t2;
  schema.trunc = o.trunc;
  schema.covariates = o.covariates;
  schema.location = o.location;
  schema.coord_x = o.coord_x;
  schema.coord_y = o.coord_y;
  std::optional<std::unordered_map<std::string, std::array<double, 2>>> sites;
  if (!o.sites.empty()) sites = read_sites(o.sites);
  in.loaded = load_csv(o.data, schema, sites ? &*sites : nullptr);
  const Dataset& d = in.loaded.data;

  McmcConfig& c = in.mcmc;
  c.model = parse_model(o.model);
  c.family = parse_family(o.family);
  switch (parse_frailty(o.frailty)) {
    case FrailtyKind::None: c.frailty = FrailtySpec::none(); break;
    case FrailtyKind::IID: c.frailty = FrailtySpec::iid(d.m()); break;
    case FrailtyKind::ICAR: {
      if (o.adjacency.empty()) throw std::invalid_argument("ICAR frailty needs --adjacency");
      const Eigen::MatrixXd adj = read_adjacency(o.adjacency);
      const auto M = adj.rows();
      if (d.m() != M)
        throw std::invalid_argument("adjacency has " + std::to_string(M) + " regions but the data have " + std::to_string(d.m()) +
                                    " locations");
      // Region k of the adjacency is location id "k" (1-based).
      std::vector<Eigen::Index> row(static_cast<std::size_t>(d.m()));
      for (int i = 0; i < d.m(); ++i) {
        const std::string& id = d.location_ids[static_cast<std::size_t>(i)];
        char* end = nullptr;
        const long k = std::strtol(id.c_str(), &end, 10);
        if (*end != '\0' || k < 1 || k > M) throw std::invalid_argument("location id '" + id + "' is not a region index 1.." + std::to_string(M));
        row[static_cast<std::size_t>(i)] = k - 1;
      }
      Eigen::MatrixXd ordered(d.m(), d.m());
      for (int i = 0; i < d.m(); ++i)
        for (int j = 0; j < d.m(); ++j) ordered(i, j) = adj(row[static_cast<std::size_t>(i)], row[static_cast<std::size_t>(j)]);
      c.frailty = FrailtySpec::icar(ordered);
      break;
    }
    case FrailtyKind::GRF: {
      if (!d.coords) throw std::invalid_argument("GRF frailty needs --sites or --coord-x/--coord-y");
      std::optional<FsaDesign> fsa;
      if (o.fsa_knots > 0) fsa = FsaDesign{o.fsa_knots, o.fsa_blocks};
      c.frailty = FrailtySpec::grf(*d.coords, o.nu, fsa);
      break;
    }
  }
  c.nburn = o.nburn;
  c.nsave = o.nsave;
  c.nskip = o.nskip;
  c.seed = o.seed;
  c.l0 = o.l0;
  c.selection = o.selection;
  c.spline_K = o.spline_k;
  c.hyper.J = o.J;
  c.prerun = !o.no_prerun;
  c.prerun_iterations = o.prerun_iterations;
  for (const auto& name : o.nonlinear) {
    const auto& names = d.covariate_names();
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw std::invalid_argument("nonlinear covariate '" + name + "' is not among --covariates");
    c.nonlinear.push_back(static_cast<int>(it - names.begin()));
  }
  return in;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian semiparametric survival regression with spatial frailties"};
  app.require_subcommand(1);

  FitOptions fit_opts;
  bool dry_run = false;
  auto* fit = app.add_subcommand("fit", "fit a model and write the posterior archive");
  add_fit_options(fit, fit_opts);
  fit->add_flag("--dry-run", dry_run, "validate and print resolved hyperparameters without sampling");
  fit->config_formatter(std::make_shared<JsonConfig>());
  fit->set_config("--config", "", "JSON config (a run's meta.json works)");

  SimulateOptions sim_opts;
  auto* sim = app.add_subcommand("simulate", "generate a simulation dataset");
  sim->add_option("--design", sim_opts.design, "sim1, sim3, sim4ex1, sim4ex2, sim4ex3 or parametric")->capture_default_str();
  sim->add_option("--model", sim_opts.model, "AFT, PH or PO")->capture_default_str();
  sim->add_option("--seed", sim_opts.seed)->capture_default_str();
  sim->add_option("--per-location", sim_opts.per_location, "subjects per location (design default when 0)");
  sim->add_option("--out", sim_opts.out, "data CSV")->capture_default_str();
  sim->add_option("--adjacency-out", sim_opts.adjacency_out);
  sim->add_option("--sites-out", sim_opts.sites_out);
  sim->add_option("--truth-out", sim_opts.truth_out, "CSV of true times and frailties");

  DiagnoseOptions diag_opts;
  auto* diag = app.add_subcommand("diagnose", "Cox-Snell residuals and criteria for a fit archive");
  diag->add_option("--archive", diag_opts.archive, "fit output directory")->required();
  diag->add_option("--draws", diag_opts.draws, "posterior draws overlaid")->capture_default_str();
  diag->add_option("--out", diag_opts.out, "output directory (default: the archive)");
  diag->add_flag("--svg", diag_opts.svg, "write coxsnell.svg");

  StudyOptions st;
  auto* study = app.add_subcommand("mc-study", "Monte Carlo study over simulated replicates");
  study->add_option("--design", st.design)->capture_default_str();
  study->add_option("--truth", st.truth, "generating model")->capture_default_str();
  study->add_option("--fits", st.fits, "fitted models")->delimiter(',');
  study->add_option("--replicates", st.replicates)->capture_default_str();
  study->add_option("--jobs", st.jobs, "worker threads")->capture_default_str();
  study->add_option("--seed", st.seed)->capture_default_str();
  study->add_option("--nburn", st.nburn)->capture_default_str();
  study->add_option("--nsave", st.nsave)->capture_default_str();
  study->add_option("--nskip", st.nskip)->capture_default_str();
  study->add_option("--l0", st.l0)->capture_default_str();
  study->add_option("--J", st.J)->capture_default_str();
  study->add_option("--prerun-iterations", st.prerun_iterations)->capture_default_str();
  study->add_option("--residual-draws", st.residual_draws, "draws for a Cox-Snell slope per fit");
  study->add_option("--out", st.out)->capture_default_str();

  // CLI11 reads config files for the top-level app only, so fit is parsed by
  // an app of its own; the subcommand above stays for the help listing.
  CLI::App fit_app{"fit a model and write the posterior archive", "spsurv fit"};
  const bool fit_mode = argc > 1 && std::string(argv[1]) == "fit";
  if (fit_mode) {
    add_fit_options(&fit_app, fit_opts);
    fit_app.add_flag("--dry-run", dry_run, "validate and print resolved hyperparameters without sampling");
    fit_app.config_formatter(std::make_shared<JsonConfig>());
    fit_app.set_config("--config", "", "JSON config (a run's meta.json works)");
  }

  try {
    if (fit_mode)
      fit_app.parse(argc - 1, argv + 1);
    else
      app.parse(argc, argv);
  } catch (const CLI::FileError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << (fit_mode ? fit_app.help() : app.help());
      return 0;
    }
    const std::string msg = e.what();
    err << "error: " << msg << '\n';
    return 1;
  }
  try {
    if (fit_mode) return cmd_fit(fit_opts, echo_options(fit_app), dry_run, out);
    if (*sim) return cmd_simulate(sim_opts, out);
    if (*diag) return cmd_diagnose(diag_opts, out);
    if (*study) return cmd_mc_study(st, out);
  } catch (const MissingFile& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace spsurv
