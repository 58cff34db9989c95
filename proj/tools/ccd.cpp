// Command-line front end: generate, detect, eval, bench, lfr, ingest.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ccd/ccd.hpp"

namespace {

constexpr int kUsage = 1;
constexpr int kFailure = 2;

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ccd::Error("cannot write '" + path.string() + "'");
  return out;
}

// Node index from the first column of a "node label" file.
ccd::NodeIndex labels_of(const std::filesystem::path& path) {
  auto in = ccd::detail::open_input(path);
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (!ccd::detail::is_data_line(line)) continue;
    const auto f = ccd::detail::split_fields(line);
    if (!f.empty()) labels.emplace_back(f[0]);
  }
  return ccd::NodeIndex::from_labels(std::move(labels));
}

struct GenerateArgs {
  std::string graph, communities, model = "sir", out, transmissions, goal;
  std::size_t count = 1000;
  ccd::Seed seed = 1;
  unsigned workers = 1;
  std::optional<double> alpha, beta, alpha_in, alpha_out, lomax_shape, t_max;
  std::size_t calibration_batch = 2000;
};

int run_generate(const GenerateArgs& a) {
  const auto d = ccd::load_dataset("input", a.graph, a.communities);
  const auto model = ccd::parse_cascade_model(a.model);
  if (model == ccd::CascadeModel::kObserved) throw ccd::ValidationError("cannot generate 'observed' cascades");
  ccd::EpidemicParams p;
  if (a.alpha) p.alpha = *a.alpha;
  if (a.beta) p.beta = *a.beta;
  if (a.alpha_in) p.alpha_in = *a.alpha_in;
  if (a.alpha_out) p.alpha_out = *a.alpha_out;
  p.lomax_shape = a.lomax_shape;
  if (a.t_max) p.t_max = *a.t_max;
  const auto target = ccd::SimulationTarget::of(d);
  if (!a.goal.empty()) {
    ccd::CalibrationOptions opt;
    opt.batch = a.calibration_batch;
    opt.workers = a.workers;
    p = ccd::calibrate(target, model, ccd::parse_calibration_goal(a.goal), p, ccd::derive_seed(a.seed, 1), opt);
    std::cerr << "calibrated: " << ccd::describe(model, p) << '\n';
  }
  const auto cs = ccd::generate_cascades(target, model, p, a.count, a.seed, a.workers);
  auto out = open_output(a.out);
  ccd::write_cascades(out, cs, d.names);
  if (!a.transmissions.empty()) {
    auto tx = open_output(a.transmissions);
    ccd::write_transmissions(tx, cs, d.names);
  }
  const auto stats = ccd::cascade_stats(cs);
  std::cerr << "cascades=" << cs.size() << " mean_size=" << stats.mean_size
            << " singleton_fraction=" << stats.singleton_fraction << '\n';
  return 0;
}

struct DetectArgs {
  std::string cascades, transmissions, graph, method = "clique", out, dump_surrogate;
  std::optional<double> clique_a;
  std::optional<double> horizon;
  ccd::Seed seed = 1;
  bool report_rates = false;
  bool keep_singletons = false;
};

int run_detect(const DetectArgs& a) {
  ccd::NodeIndex names;
  if (!a.graph.empty()) names = ccd::load_edge_list(a.graph).names;
  auto cs = ccd::load_cascades(a.cascades, names, a.graph.empty());
  cs.node_count = names.size();
  if (!a.transmissions.empty()) ccd::load_transmissions(a.transmissions, cs, names);
  if (!a.keep_singletons) cs = ccd::filter_singletons(cs);

  ccd::Partition result;
  if (a.method == "clustopt") {
    ccd::ClustOptOptions opt;
    if (a.horizon) {
      opt.likelihood.include_unobserved = true;
      opt.tmax = std::vector<double>(cs.size(), *a.horizon);
    }
    const auto r = ccd::clust_opt(cs, a.seed, opt);
    result = r.partition;
    if (a.report_rates) {
      std::cout.precision(10);
      std::cout << "alpha_in=" << r.rates.alpha_in << "\nalpha_out=" << r.rates.alpha_out
                << "\ndelta=" << r.rates.delta << "\nlog_likelihood=" << r.rates.log_likelihood << '\n';
    }
  } else {
    const auto method = *ccd::parse_detection_method(a.method);
    if (!a.dump_surrogate.empty()) {
      const auto s = ccd::build_surrogate(cs, method, a.clique_a);
      auto out = open_output(a.dump_surrogate);
      ccd::write_edge_list(out, s.graph, names);
    }
    result = ccd::detect(cs, method, a.seed, a.clique_a);
  }
  if (a.out.empty()) {
    ccd::write_communities(std::cout, result, names);
  } else {
    auto out = open_output(a.out);
    ccd::write_communities(out, result, names);
  }
  return 0;
}

struct EvalArgs {
  std::string pred, truth;
  std::vector<std::string> metrics;
};

int run_eval(const EvalArgs& a) {
  const auto names = labels_of(a.truth);
  const auto truth = ccd::load_communities(a.truth, names);
  const auto pred = ccd::load_communities(a.pred, names, false);
  const auto& metrics = a.metrics.empty() ? ccd::metric_names() : a.metrics;
  std::cout.precision(10);
  for (const auto& m : metrics) {
    const auto v = ccd::evaluate_metric(m, pred, truth);
    std::cout << m << '=';
    if (v) {
      std::cout << *v;
    } else {
      std::cout << "undefined";
    }
    std::cout << '\n';
  }
  return 0;
}

struct BenchArgs {
  std::string config, output;
  unsigned workers = 0;
  bool svg = false;
};

int run_bench(const BenchArgs& a) {
  auto spec = ccd::load_experiment(a.config);
  if (!a.output.empty()) spec.output = a.output;
  if (a.workers > 0) spec.workers = a.workers;
  spec.svg |= a.svg;
  const auto report = ccd::run_experiment(spec);
  for (auto axis : {ccd::PlotAxis::kBudget, ccd::PlotAxis::kRelativeSize}) {
    ccd::emit_plot_data(report, axis, spec.output / "plots", spec.svg);
  }
  for (const auto& m : spec.metrics) ccd::emit_rank_table(report, m, spec.output);
  std::cerr << "rows=" << report.rows.size() << " results=" << (spec.output / "results.csv").string() << '\n';
  return 0;
}

struct LfrArgs {
  ccd::LfrConfig cfg;
  std::string edges_out, communities_out;
};

int run_lfr(const LfrArgs& a) {
  const auto d = ccd::generate_lfr(a.cfg);
  auto e = open_output(a.edges_out);
  ccd::write_edge_list(e, d.graph, d.names);
  auto c = open_output(a.communities_out);
  ccd::write_communities(c, d.ground_truth, d.names);
  std::cerr << "nodes=" << d.graph.node_count() << " edges=" << d.graph.edge_count()
            << " communities=" << d.ground_truth.community_count()
            << " mixing=" << ccd::realized_mixing(d.graph, d.ground_truth) << '\n';
  return 0;
}

struct IngestArgs {
  std::string log, out;
};

int run_ingest(const IngestArgs& a) {
  ccd::NodeIndex names;
  const auto cs = ccd::ingest_retweet_log(a.log, names);
  auto out = open_output(a.out);
  ccd::write_cascades(out, cs, names);
  std::cerr << "cascades=" << cs.size() << " nodes=" << names.size() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Community detection from information cascades"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Simulate cascades on a dataset");
  g->add_option("--graph", gen.graph, "Edge list")->required()->check(CLI::ExistingFile);
  g->add_option("--communities", gen.communities, "Ground-truth communities")->required()->check(CLI::ExistingFile);
  g->add_option("--model", gen.model, "sir | si-bd | c-si-bd")
      ->check(CLI::IsMember({"sir", "si-bd", "c-si-bd"}));
  g->add_option("--num-cascades,--count", gen.count, "Number of cascades")->check(CLI::PositiveNumber);
  g->add_option("--seed", gen.seed);
  g->add_option("--workers", gen.workers)->check(CLI::PositiveNumber);
  g->add_option("--alpha", gen.alpha);
  g->add_option("--beta", gen.beta);
  g->add_option("--alpha-in", gen.alpha_in);
  g->add_option("--alpha-out", gen.alpha_out);
  g->add_option("--lomax-shape", gen.lomax_shape);
  g->add_option("--tmax", gen.t_max, "Horizon of SI-BD / C-SI-BD");
  g->add_option("--calibrate", gen.goal, "Fit the free rate to a target first: mean-size-2 | singleton-20pct")
      ->check(CLI::IsMember({"mean-size-2", "singleton-20pct"}));
  g->add_option("--calibration-batch", gen.calibration_batch)->check(CLI::PositiveNumber);
  g->add_option("--out", gen.out, "Cascade file to write")->required();
  g->add_option("--transmissions", gen.transmissions, "Also write who-infected-whom");

  DetectArgs det;
  auto* d = app.add_subcommand("detect", "Recover communities from a cascade file");
  d->add_option("--cascades", det.cascades)->required()->check(CLI::ExistingFile);
  d->add_option("--graph", det.graph, "Edge list fixing the node universe")->check(CLI::ExistingFile);
  d->add_option("--transmissions", det.transmissions, "Transmissions file (oracle)")->check(CLI::ExistingFile);
  d->add_option("--method", det.method)
      ->check(CLI::IsMember({"path", "clique", "clique0", "cosine", "oracle", "clustopt"}));
  d->add_option("--clique-a", det.clique_a, "Clique decay (default: 1 / mean pairwise gap)")
      ->check(CLI::NonNegativeNumber);
  d->add_option("--seed", det.seed);
  d->add_option("--horizon", det.horizon,
                "clustopt: known cascade horizon; uninfected nodes then enter the likelihood")
      ->check(CLI::PositiveNumber);
  d->add_flag("--report-rates", det.report_rates, "clustopt: print fitted rates as key=value");
  d->add_option("--dump-surrogate", det.dump_surrogate, "Write the surrogate graph as an edge list");
  d->add_flag("--keep-singletons", det.keep_singletons);
  d->add_option("--out", det.out, "Communities file (default: stdout)");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Compare a predicted partition with the ground truth");
  e->add_option("--pred", ev.pred)->required()->check(CLI::ExistingFile);
  e->add_option("--truth", ev.truth)->required()->check(CLI::ExistingFile);
  e->add_option("--metrics", ev.metrics)->delimiter(',')->check(CLI::IsMember(ccd::metric_names()));

  BenchArgs be;
  auto* b = app.add_subcommand("bench", "Run an experiment grid from a config file");
  b->add_option("--config", be.config)->required()->check(CLI::ExistingFile);
  b->add_option("--output", be.output, "Override the output directory");
  b->add_option("--workers", be.workers)->check(CLI::PositiveNumber);
  b->add_flag("--svg", be.svg, "Also render SVG charts");

  LfrArgs lf;
  auto* l = app.add_subcommand("lfr", "Generate an LFR benchmark graph");
  l->add_option("--n", lf.cfg.n)->check(CLI::PositiveNumber);
  l->add_option("--tau1", lf.cfg.tau1);
  l->add_option("--tau2", lf.cfg.tau2);
  l->add_option("--mu", lf.cfg.mu);
  l->add_option("--avg-degree", lf.cfg.avg_degree);
  l->add_option("--max-degree", lf.cfg.max_degree);
  l->add_option("--min-community", lf.cfg.min_community);
  l->add_option("--max-community", lf.cfg.max_community);
  l->add_option("--seed", lf.cfg.seed);
  l->add_option("--edges-out", lf.edges_out)->required();
  l->add_option("--communities-out", lf.communities_out)->required();

  IngestArgs in;
  auto* i = app.add_subcommand("ingest", "Convert a retweet log into a cascade file");
  i->add_option("--log", in.log)->required()->check(CLI::ExistingFile);
  i->add_option("--out", in.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (*g) return run_generate(gen);
    if (*d) return run_detect(det);
    if (*e) return run_eval(ev);
    if (*b) return run_bench(be);
    if (*l) return run_lfr(lf);
    if (*i) return run_ingest(in);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kFailure;
  }
  return kUsage;
}
