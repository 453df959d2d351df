// rwspatial command-line interface.
//
//   rwspatial <verb> [--config PATH] [--seed U64] [--out DIR] [--quiet]
//
// Every verb writes its artifacts plus manifest.json into --out.
// Exit codes: 0 ok, 2 configuration, 3 data, 4 numerical, 1 anything else.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rwspatial/errors.hpp"
#include "rwspatial/field.hpp"
#include "rwspatial/gaussian_model.hpp"
#include "rwspatial/genetics_model.hpp"
#include "rwspatial/graph.hpp"
#include "rwspatial/ident.hpp"
#include "rwspatial/io.hpp"
#include "rwspatial/popsim.hpp"
#include "rwspatial/posterior.hpp"
#include "rwspatial/rng.hpp"

namespace fs = std::filesystem;
using namespace rwspatial;

namespace {

struct Context {
  RunConfig cfg;
  std::optional<fs::path> config_path;
  std::optional<std::uint64_t> seed_flag;
  fs::path out = ".";
  bool quiet = false;
  Manifest manifest;

  std::uint64_t require_seed() {
    if (seed_flag) {
      manifest.seed = *seed_flag;
    } else if (cfg.has("seed")) {
      manifest.seed = cfg.get_u64("seed", 0);
    } else {
      throw ConfigError("this command is stochastic: pass --seed or set seed in the config");
    }
    return *manifest.seed;
  }
  void input(const fs::path& p) { manifest.inputs.emplace_back(p.string(), sha256_file(p)); }
  fs::path output(const std::string& name) {
    const fs::path p = out / name;
    outputs.push_back(p);
    return p;
  }
  void say(const std::string& msg) const {
    if (!quiet) std::cout << msg << '\n';
  }

  std::vector<fs::path> outputs;
};

const std::set<std::string> kGraphKeys{"graph", "nodes", "edges", "symmetric", "beta", "seed"};

std::set<std::string> with_graph_keys(std::initializer_list<std::string> extra) {
  std::set<std::string> keys = kGraphKeys;
  keys.insert(extra.begin(), extra.end());
  return keys;
}

// graph = columbus | stream | files (default: files when nodes/edges are given)
LoadedGraph resolve_graph(Context& ctx, const std::string& fallback) {
  const std::string kind =
      ctx.cfg.get_string("graph", ctx.cfg.has("nodes") || ctx.cfg.has("edges") ? "files" : fallback);
  if (kind == "columbus") {
    ColumbusData c = columbus_fixture();
    ctx.manifest.inputs.emplace_back("<embedded>/columbus/nodes.csv", columbus_nodes_sha256());
    ctx.manifest.inputs.emplace_back("<embedded>/columbus/edges.csv", columbus_edges_sha256());
    return {std::move(c.graph), {{"crime", c.crime}, {"hoval", c.home_values}}};
  }
  if (kind == "stream") return {synthetic_stream_network(), {}};
  if (kind == "files") {
    const fs::path nodes = ctx.cfg.require_string("nodes");
    const fs::path edges = ctx.cfg.require_string("edges");
    ctx.input(nodes);
    ctx.input(edges);
    return load_graph(nodes, edges, ctx.cfg.get_bool("symmetric", false));
  }
  throw ConfigError("graph must be columbus, stream or files (got '" + kind + "')");
}

RateParams rate_params(const Context& ctx, const SpatialGraph& g) {
  RateParams p;
  p.beta = ctx.cfg.get_doubles("beta", std::vector<double>(3 + g.extra_names().size(), 0.0));
  if (p.beta.size() != 3 + g.extra_names().size()) {
    throw ConfigError("beta needs " + std::to_string(3 + g.extra_names().size()) +
                      " coefficients (beta0, beta1, beta2 and one per extra edge covariate)");
  }
  return p;
}

GeneratorMatrix resolve_generator(Context& ctx, const LoadedGraph& lg) {
  GeneratorMatrix q = build_generator(lg.graph, edge_rates_loglinear(lg.graph, rate_params(ctx, lg.graph)));
  for (const auto& w : q.warnings()) {
    if (!ctx.quiet) std::cerr << "warning: " << w << '\n';
  }
  return q;
}

Eigen::VectorXd per_node(const Context& ctx, const std::string& key, double fallback, std::size_t m) {
  const auto v = ctx.cfg.get_doubles(key, {fallback});
  if (v.size() == 1) return Eigen::VectorXd::Constant(static_cast<Eigen::Index>(m), v[0]);
  if (v.size() != m) {
    throw ConfigError(key + " needs 1 or " + std::to_string(m) + " values, got " + std::to_string(v.size()));
  }
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(m));
}

DemographyRates demography(const Context& ctx, std::size_t m) {
  DemographyRates d{per_node(ctx, "birth", 0.0, m), per_node(ctx, "death", 0.0, m)};
  d.validate(m);
  return d;
}

PriorSpec priors(const Context& ctx) {
  PriorSpec p;
  p.regression_sd = ctx.cfg.get_double("regression_sd", p.regression_sd);
  p.re_sd_scale = ctx.cfg.get_double("re_sd_scale", p.re_sd_scale);
  p.tau2_shape = ctx.cfg.get_double("tau2_shape", p.tau2_shape);
  p.tau2_scale = ctx.cfg.get_double("tau2_scale", p.tau2_scale);
  p.rate_beta_sd = ctx.cfg.get_double("rate_beta_sd", p.rate_beta_sd);
  p.mu_lk_sd = ctx.cfg.get_double("mu_lk_sd", p.mu_lk_sd);
  p.validate();
  return p;
}

// ---------------------------------------------------------------- build

void cmd_build(Context& ctx) {
  ctx.cfg.require_known(kGraphKeys);
  const LoadedGraph lg = resolve_graph(ctx, "files");
  const GeneratorMatrix q = resolve_generator(ctx, lg);
  write_generator_csv(ctx.output("generator.csv"), q, lg.graph);
  Json j;
  j["nodes"] = lg.graph.node_count();
  j["edges"] = lg.graph.edges().size();
  j["positive_rates"] = q.rates().size();
  j["symmetric"] = lg.graph.is_symmetric();
  j["irreducible"] = check_irreducible(q);
  j["max_rate"] = q.max_rate();
  j["warnings"] = q.warnings();
  write_json(ctx.output("build.json"), j);
  ctx.say("built generator: " + std::to_string(lg.graph.node_count()) + " nodes, " +
          std::to_string(q.rates().size()) + " rates, irreducible = " +
          (j["irreducible"].get<bool>() ? "true" : "false"));
}

// ---------------------------------------------------------------- check-ident

// The loop run backwards: each node leaves for its predecessor at its own exit rate.
GeneratorMatrix reversed_loop(const GeneratorMatrix& q, const std::vector<NodeIndex>& cycle) {
  const std::size_t m = cycle.size();
  std::vector<RateEntry> w;
  for (std::size_t k = 0; k < m; ++k) {
    const NodeIndex i = cycle[k];
    w.push_back({i, cycle[(k + m - 1) % m], q.exit_rate(i)});
  }
  return GeneratorMatrix(q.dimension(), std::move(w));
}

void cmd_check_ident(Context& ctx) {
  ctx.cfg.require_known(with_graph_keys({"search_trials"}));
  const LoadedGraph lg = resolve_graph(ctx, "files");
  const GeneratorMatrix q = resolve_generator(ctx, lg);
  const IdentifiabilityReport report = check_identifiable(q);
  Json j = to_json(report);
  if (report.cycle && report.cycle->size() >= 3) {
    const GeneratorMatrix w = reversed_loop(q, *report.cycle);
    const Eigen::MatrixXd qd = q.dense();
    const Eigen::MatrixXd wd = w.dense();
    Json pair;
    Json rates = Json::array();
    for (const RateEntry& e : w.rates()) {
      rates.push_back({{"from", lg.graph.nodes()[e.from].label},
                       {"to", lg.graph.nodes()[e.to].label},
                       {"rate", e.rate}});
    }
    pair["confounder_rates"] = rates;
    pair["max_abs_difference_QQt_WWt"] = (qd * qd.transpose() - wd * wd.transpose()).cwiseAbs().maxCoeff();
    pair["max_abs_difference_Q_W"] = (qd - wd).cwiseAbs().maxCoeff();
    j["confounded_pair"] = pair;
  }
  const long trials = ctx.cfg.get_long("search_trials", 0);
  if (trials < 0) throw ConfigError("search_trials must be nonnegative");
  if (trials > 0) {
    ConfounderSearchOptions opt;
    opt.trials = static_cast<int>(trials);
    opt.seed = ctx.require_seed();
    j["search"] = to_json(search_confounder(q, opt));
  }
  write_json(ctx.output("ident.json"), j);
  ctx.say("classification: " + std::string(to_string(report.classification)));
}

// ---------------------------------------------------------------- simulate-field

void cmd_simulate_field(Context& ctx) {
  ctx.cfg.require_known(with_graph_keys({"sigma", "realizations"}));
  const std::uint64_t seed = ctx.require_seed();
  const LoadedGraph lg = resolve_graph(ctx, "files");
  const double sigma = ctx.cfg.get_double("sigma", 1.0);
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  const long count = ctx.cfg.get_long("realizations", 1);
  if (count < 1) throw ConfigError("realizations must be at least 1");
  const IntrinsicField field(resolve_generator(ctx, lg), sigma);
  std::vector<Eigen::VectorXd> fields;
  for (long r = 0; r < count; ++r) {
    fields.push_back(sample_field(field, derive_seed(seed, static_cast<std::uint64_t>(r))).pi);
  }
  write_fields_csv(ctx.output("fields.csv"), fields, lg.graph);
  ctx.say("wrote " + std::to_string(count) + " field realization(s)");
}

// ---------------------------------------------------------------- simulate-population

void cmd_simulate_population(Context& ctx) {
  ctx.cfg.require_known(with_graph_keys(
      {"birth", "death", "initial_density", "scale", "t_end", "snapshot_every", "max_events", "ode"}));
  const std::uint64_t seed = ctx.require_seed();
  const LoadedGraph lg = resolve_graph(ctx, "files");
  const GeneratorMatrix q = resolve_generator(ctx, lg);
  const std::size_t m = q.dimension();
  const DemographyRates demo = demography(ctx, m);
  const Eigen::VectorXd z0 = per_node(ctx, "initial_density", 1.0, m);
  const long scale = ctx.cfg.get_long("scale", 1000);
  const double t_end = ctx.cfg.get_double("t_end", 1.0);
  if (scale < 1) throw ConfigError("scale must be a positive integer");
  if (!(t_end > 0.0)) throw ConfigError("t_end must be positive");
  SimulationOptions opt;
  opt.snapshot_every = ctx.cfg.get_double("snapshot_every", t_end / 100.0);
  opt.max_events = ctx.cfg.get_u64("max_events", opt.max_events);
  std::vector<std::int64_t> n0(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (z0[static_cast<Eigen::Index>(i)] < 0.0) throw ConfigError("initial_density must be nonnegative");
    n0[i] = std::llround(static_cast<double>(scale) * z0[static_cast<Eigen::Index>(i)]);
  }
  const PopulationTrajectory t = simulate_population(q, demo, n0, scale, t_end, seed, opt);
  write_trajectory_csv(ctx.output("population.csv"), t, lg.graph);
  Json j;
  j["scale"] = scale;
  j["t_end"] = t_end;
  j["event_count"] = t.event_count;
  j["absorbed_at"] = t.absorbed_at ? Json(*t.absorbed_at) : Json(nullptr);
  j["snapshots"] = t.size();
  if (ctx.cfg.get_bool("ode", true)) {
    const PopulationTrajectory z =
        integrate_limit_ode(q, demo, z0, t_end, default_ode_step(q), opt.snapshot_every);
    write_trajectory_csv(ctx.output("limit_ode.csv"), z, lg.graph);
    double gap = 0.0;
    for (std::size_t k = 0; k < std::min(t.size(), z.size()); ++k) {
      gap = std::max(gap, (t.density(k) - z.density(k)).cwiseAbs().maxCoeff());
    }
    j["sup_gap_to_limit_ode"] = gap;
  }
  write_json(ctx.output("population.json"), j);
  ctx.say("simulated " + std::to_string(t.event_count) + " events");
}

// ---------------------------------------------------------------- convergence

void cmd_convergence(Context& ctx) {
  ctx.cfg.require_known(with_graph_keys({"birth", "death", "initial_density", "scales", "replicates",
                                         "t_end", "snapshot_every", "max_events", "parallel"}));
  const std::uint64_t seed = ctx.require_seed();
  const LoadedGraph lg = resolve_graph(ctx, "files");
  const GeneratorMatrix q = resolve_generator(ctx, lg);
  const std::size_t m = q.dimension();
  const DemographyRates demo = demography(ctx, m);
  const Eigen::VectorXd z0 = per_node(ctx, "initial_density", 1.0, m);
  std::vector<std::int64_t> scales;
  for (double s : ctx.cfg.get_doubles("scales", {100, 1000, 10000})) {
    if (!(s >= 1.0) || s != std::floor(s)) throw ConfigError("scales must be positive integers");
    scales.push_back(static_cast<std::int64_t>(s));
  }
  const long reps = ctx.cfg.get_long("replicates", 20);
  if (reps < 1) throw ConfigError("replicates must be at least 1");
  ConvergenceOptions opt;
  opt.snapshot_every = ctx.cfg.get_double("snapshot_every", opt.snapshot_every);
  opt.max_events = ctx.cfg.get_u64("max_events", opt.max_events);
  opt.execution = ctx.cfg.get_bool("parallel", true) ? Execution::Parallel : Execution::Serial;
  const double t_end = ctx.cfg.get_double("t_end", 1.0);
  const auto rows = convergence_gap(q, demo, z0, t_end, scales, static_cast<int>(reps), seed, opt);

  std::string csv = "scale,replicate,sup_gap\n";
  Json arr = Json::array();
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < r.replicate_gaps.size(); ++k) {
      csv += std::to_string(r.scale) + "," + std::to_string(k + 1) + "," +
             format_double(r.replicate_gaps[k]) + "\n";
    }
    arr.push_back({{"scale", r.scale}, {"median_gap", r.median_gap}});
    ctx.say("N = " + std::to_string(r.scale) + ": median sup gap " + format_double(r.median_gap));
  }
  write_text(ctx.output("convergence.csv"), csv);
  write_json(ctx.output("convergence.json"), {{"t_end", t_end}, {"replicates", reps}, {"rows", arr}});
}

// ---------------------------------------------------------------- fit

const std::set<std::string> kFitKeys{
    "graph", "nodes", "edges", "symmetric", "beta", "seed", "model", "response", "covariate",
    "standardize_covariate", "regression_sd", "re_sd_scale", "tau2_shape", "tau2_scale",
    "rate_beta_sd", "mu_lk_sd", "iterations", "burn_in", "thin", "chains", "parallel_chains",
    "likelihood", "genetics", "synthetic_beta", "synthetic_loci", "synthetic_categories",
    "synthetic_mu", "individuals_per_node", "data_seed", "initial_rate_step"};

// A model rebuilt from a run configuration; also used by the dic verb.
struct ModelHandle {
  std::string kind;
  std::optional<GaussianModel> gaussian;
  std::optional<GeneticsModel> genetics;
  const LikelihoodModel& likelihood() const {
    return gaussian ? static_cast<const LikelihoodModel&>(*gaussian) : *genetics;
  }
};

ModelHandle build_model(Context& ctx, std::uint64_t seed) {
  ModelHandle h;
  h.kind = ctx.cfg.get_string("model", "spatial");
  if (h.kind == "spatial" || h.kind == "diffusion") {
    LoadedGraph lg = resolve_graph(ctx, "columbus");
    const std::string resp = ctx.cfg.get_string("response", "crime");
    const std::string cov = ctx.cfg.get_string("covariate", "hoval");
    for (const auto& name : {resp, cov}) {
      if (!lg.node_attributes.count(name)) throw DataError("node table has no column '" + name + "'");
    }
    const RateParams rates = rate_params(ctx, lg.graph);
    GaussianModelSpec spec{.response = lg.node_attributes.at(resp),
                           .covariate = lg.node_attributes.at(cov),
                           .variant = parse_gaussian_variant(h.kind),
                           .graph = std::move(lg.graph),
                           .rates = rates,
                           .standardize_covariate = ctx.cfg.get_bool("standardize_covariate", true),
                           .priors = priors(ctx)};
    h.gaussian.emplace(std::move(spec));
    return h;
  }
  if (h.kind == "genetics") {
    LoadedGraph lg = resolve_graph(ctx, "stream");
    GeneticsData data;
    if (ctx.cfg.has("genetics")) {
      const fs::path path = ctx.cfg.require_string("genetics");
      ctx.input(path);
      data = read_genetics_csv(path, lg.graph);
    } else {
      SyntheticGeneticsOptions so;
      so.beta = ctx.cfg.get_doubles("synthetic_beta", so.beta);
      so.loci = static_cast<std::size_t>(ctx.cfg.get_long("synthetic_loci", static_cast<long>(so.loci)));
      so.categories = static_cast<int>(ctx.cfg.get_long("synthetic_categories", so.categories));
      so.mu = ctx.cfg.get_doubles("synthetic_mu", so.mu);
      so.individuals_per_node = static_cast<std::size_t>(
          ctx.cfg.get_long("individuals_per_node", static_cast<long>(so.individuals_per_node)));
      data = simulate_genetics(lg.graph, so, ctx.cfg.get_u64("data_seed", seed)).data;
    }
    const std::size_t n_rates = 3 + lg.graph.extra_names().size();
    GeneticsModelSpec spec{std::move(lg.graph), std::move(data), n_rates, priors(ctx)};
    h.genetics.emplace(std::move(spec));
    return h;
  }
  throw ConfigError("model must be spatial, diffusion or genetics (got '" + h.kind + "')");
}

void cmd_fit(Context& ctx) {
  ctx.cfg.require_known(kFitKeys);
  const std::uint64_t seed = ctx.require_seed();
  McmcConfig mc;
  mc.iterations = ctx.cfg.get_long("iterations", mc.iterations);
  mc.burn_in = ctx.cfg.get_long("burn_in", mc.burn_in);
  mc.thin = ctx.cfg.get_long("thin", mc.thin);
  mc.seed = seed;
  mc.likelihood_enabled = ctx.cfg.get_bool("likelihood", true);
  mc.validate();
  const long chains = ctx.cfg.get_long("chains", 1);
  if (chains < 1) throw ConfigError("chains must be at least 1");
  const Execution exec = ctx.cfg.get_bool("parallel_chains", false) ? Execution::Parallel : Execution::Serial;

  const ModelHandle h = build_model(ctx, seed);
  if (h.genetics && !ctx.cfg.has("genetics")) {
    write_genetics_csv(ctx.output("genetics.csv"), h.genetics->spec().data, h.genetics->spec().graph);
  }
  GeneticsSamplerOptions go;
  go.initial_rate_step = ctx.cfg.get_double("initial_rate_step", go.initial_rate_step);
  std::vector<PosteriorSamples> runs;
  if (chains == 1) {
    runs.push_back(h.gaussian ? fit_gaussian(*h.gaussian, mc) : fit_probit_genetics(*h.genetics, mc, go));
  } else if (h.gaussian) {
    runs = fit_gaussian_chains(*h.gaussian, mc, static_cast<int>(chains), exec);
  } else {
    runs = fit_probit_genetics_chains(*h.genetics, mc, static_cast<int>(chains), go, exec);
  }

  Json chain_meta = Json::array();
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const std::string name = runs.size() == 1 ? "samples.csv" : "samples_chain" + std::to_string(k + 1) + ".csv";
    write_samples_csv(ctx.output(name), runs[k]);
    Json meta = to_json(runs[k].metadata());
    meta["file"] = name;
    chain_meta.push_back(meta);
  }
  Json summary;
  summary["model"] = h.kind;
  summary["chains"] = chain_meta;
  Json params = Json::array();
  const auto s = summarize(runs.front());
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (s[j].name.rfind("eta", 0) == 0) continue;
    Json p = to_json(std::vector<ParameterSummary>{s[j]}).at(0);
    p["mcse"] = batch_means_standard_error(runs.front().draws().col(static_cast<Eigen::Index>(j)));
    if (s[j].name == "beta1" && h.genetics) {
      p["prob_positive"] = (runs.front().draws().col(static_cast<Eigen::Index>(j)).array() > 0.0).cast<double>().mean();
    }
    params.push_back(p);
  }
  // Chain 1 only; latent fields are left to samples.csv.
  summary["parameters"] = params;
  write_json(ctx.output("summary.json"), summary);

  RunConfig resolved = ctx.cfg;
  resolved.set("seed", std::to_string(seed));
  resolved.write(ctx.output("run.cfg"));
  for (const auto& p : params) {
    ctx.say(p["name"].get<std::string>() + ": mean " + format_double(p["mean"].get<double>()) +
            "  95% [" + format_double(p["q025"].get<double>()) + ", " +
            format_double(p["q975"].get<double>()) + "]");
  }
}

// ---------------------------------------------------------------- dic / diagnose

std::vector<fs::path> run_sample_files(const fs::path& dir) {
  std::vector<fs::path> files;
  if (fs::exists(dir / "samples.csv")) files.push_back(dir / "samples.csv");
  for (int k = 1; fs::exists(dir / ("samples_chain" + std::to_string(k) + ".csv")); ++k) {
    files.push_back(dir / ("samples_chain" + std::to_string(k) + ".csv"));
  }
  if (files.empty()) throw DataError(dir.string() + ": no samples.csv or samples_chain*.csv");
  return files;
}

PosteriorSamples pooled(const std::vector<PosteriorSamples>& chains) {
  Eigen::Index rows = 0;
  for (const auto& c : chains) {
    if (c.names() != chains.front().names()) throw DataError("chains have different parameter columns");
    rows += c.draw_count();
  }
  Eigen::MatrixXd draws(rows, chains.front().draws().cols());
  Eigen::VectorXd ll(rows);
  Eigen::Index r = 0;
  for (const auto& c : chains) {
    draws.middleRows(r, c.draw_count()) = c.draws();
    ll.segment(r, c.draw_count()) = c.log_likelihood();
    r += c.draw_count();
  }
  return PosteriorSamples(chains.front().names(), std::move(draws), std::move(ll), {});
}

std::vector<std::string> list_of(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, ',')) {
    const auto b = cur.find_first_not_of(' ');
    const auto e = cur.find_last_not_of(' ');
    if (b != std::string::npos) out.push_back(cur.substr(b, e - b + 1));
  }
  return out;
}

void cmd_dic(Context& ctx) {
  ctx.cfg.require_known({"runs"});
  Json arr = Json::array();
  std::optional<std::pair<double, std::string>> best;
  for (const auto& run : list_of(ctx.cfg.require_string("runs"))) {
    const fs::path dir(run);
    Context sub;
    sub.cfg = RunConfig::load(dir / "run.cfg");
    sub.quiet = true;
    ctx.input(dir / "run.cfg");
    const ModelHandle h = build_model(sub, sub.cfg.get_u64("seed", 0));
    for (const auto& in : sub.manifest.inputs) ctx.manifest.inputs.push_back(in);
    std::vector<PosteriorSamples> chains;
    for (const auto& f : run_sample_files(dir)) {
      ctx.input(f);
      chains.push_back(read_samples_csv(f));
    }
    const DICResult d = compute_dic(pooled(chains), h.likelihood());
    Json j = to_json(d);
    j["run"] = run;
    j["model"] = h.kind;
    arr.push_back(j);
    if (!best || d.dic < best->first) best = {d.dic, run};
    ctx.say(run + " (" + h.kind + "): DIC " + format_double(d.dic) + ", pD " + format_double(d.p_d));
  }
  write_json(ctx.output("dic.json"), {{"runs", arr}, {"lowest_dic", best ? best->second : ""}});
}

void cmd_diagnose(Context& ctx) {
  ctx.cfg.require_known({"runs", "samples", "threshold", "include_fields"});
  std::vector<fs::path> files;
  for (const auto& run : list_of(ctx.cfg.get_string("runs", ""))) {
    for (const auto& f : run_sample_files(run)) files.push_back(f);
  }
  for (const auto& f : list_of(ctx.cfg.get_string("samples", ""))) files.emplace_back(f);
  if (files.empty()) throw ConfigError("diagnose needs runs or samples");
  SplitHalfOptions opt;
  opt.threshold = ctx.cfg.get_double("threshold", opt.threshold);
  if (ctx.cfg.get_bool("include_fields", false)) opt.skip_prefixes.clear();
  Json arr = Json::array();
  std::size_t flagged = 0;
  for (const auto& f : files) {
    ctx.input(f);
    const PosteriorSamples s = read_samples_csv(f);
    const auto entries = split_half_diagnostic(s, opt);
    std::size_t n = 0;
    for (const auto& e : entries) n += e.flagged ? 1 : 0;
    flagged += n;
    arr.push_back({{"samples", f.string()}, {"flagged", n}, {"parameters", to_json(entries)}});
    ctx.say(f.string() + ": " + std::to_string(n) + " of " + std::to_string(entries.size()) +
            " parameters flagged");
  }
  write_json(ctx.output("diagnose.json"), {{"threshold", opt.threshold}, {"flagged", flagged}, {"chains", arr}});
}

int exit_with(const char* kind, const std::exception& e, int code) {
  std::cerr << "rwspatial: " << kind << " error: " << e.what() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random-walk spatial covariance models on graphs"};
  app.require_subcommand(1);
  app.fallthrough();
  Context ctx;
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out = ".";
  auto* config_opt = app.add_option("--config", config_path, "flat key = value configuration file");
  auto* seed_opt = app.add_option("--seed", seed, "random seed (overrides the config)");
  app.add_option("--out", out, "output directory");
  app.add_flag("--quiet", ctx.quiet, "suppress progress output");

  struct Verb {
    const char* name;
    const char* help;
    void (*run)(Context&);
  };
  const Verb verbs[] = {
      {"build", "assemble the generator from a graph and rate coefficients", cmd_build},
      {"check-ident", "classify identifiability of Q from QQ'", cmd_check_ident},
      {"simulate-field", "draw stationary random fields", cmd_simulate_field},
      {"simulate-population", "simulate the birth-death-migration process and its limit", cmd_simulate_population},
      {"convergence", "sup-norm gap between scaled process and limit ODE over N", cmd_convergence},
      {"fit", "MCMC for the Gaussian or genetics models", cmd_fit},
      {"dic", "deviance information criterion of fitted runs", cmd_dic},
      {"diagnose", "split-half convergence diagnostic", cmd_diagnose},
  };
  for (const auto& v : verbs) app.add_subcommand(v.name, v.help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const auto start = std::chrono::steady_clock::now();
  try {
    if (*config_opt) {
      ctx.config_path = config_path;
      ctx.cfg = RunConfig::load(config_path);
      ctx.input(config_path);
    }
    if (*seed_opt) ctx.seed_flag = seed;
    ctx.out = out;
    fs::create_directories(ctx.out);
    const Verb* chosen = nullptr;
    for (const auto& v : verbs) {
      if (app.got_subcommand(v.name)) chosen = &v;
    }
    ctx.manifest.command = chosen->name;
    ctx.manifest.config = ctx.cfg.values();
    chosen->run(ctx);
    for (const auto& p : ctx.outputs) ctx.manifest.outputs.emplace_back(p.string(), sha256_file(p));
    ctx.manifest.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_json(ctx.out / "manifest.json", to_json(ctx.manifest));
  } catch (const ConfigError& e) {
    return exit_with("config", e, 2);
  } catch (const PreconditionError& e) {
    return exit_with("config", e, 2);
  } catch (const DataError& e) {
    return exit_with("data", e, 3);
  } catch (const NumericalError& e) {
    return exit_with("numerical", e, 4);
  } catch (const fs::filesystem_error& e) {
    return exit_with("data", e, 3);
  } catch (const std::exception& e) {
    return exit_with("internal", e, 1);
  }
  return 0;
}
