#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ccd/bench.hpp"
#include "ccd/cascade_io.hpp"
#include "ccd/io.hpp"
#include "ccd/random.hpp"

namespace {

namespace fs = std::filesystem;

const std::string kData = CCD_SOURCE_DIR "/data/";

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("ccd_bench_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

ccd::ExperimentSpec parse(const std::string& text, const fs::path& base = ".") {
  std::istringstream in(text);
  return ccd::parse_experiment(in, base);
}

ccd::ReportRow row(const std::string& dataset, const std::string& alg, const std::string& budget, double s,
                   ccd::Seed seed, std::optional<double> value) {
  return {dataset, "si-bd", alg, budget, s, false, seed, "pearson-sub", value, std::nullopt};
}

TEST(RelativeSize, Examples) {
  const auto d = ccd::load_dataset("karate", kData + "karate.edges", kData + "karate.communities");
  ccd::CascadeSet cs;
  cs.node_count = 34;
  cs.cascades.push_back(ccd::Cascade(std::vector<ccd::Event>{{0, 0}}));
  cs.transmissions = std::vector<std::vector<ccd::Transmission>>{std::vector<ccd::Transmission>(78, {0, 1})};
  EXPECT_DOUBLE_EQ(ccd::relative_size(cs, d.graph), 1.0);

  ccd::CascadeSet empty;
  empty.node_count = 34;
  EXPECT_EQ(ccd::relative_size(empty, d.graph), 0.0);

  ccd::CascadeSet observed;
  observed.node_count = 3;
  observed.cascades.push_back(ccd::Cascade({{0, 0}, {1, 1}, {2, 2}}));
  observed.cascades.push_back(ccd::Cascade({{0, 0}, {2, 1}}));
  EXPECT_DOUBLE_EQ(ccd::relative_size(observed, ccd::Graph(3, {{0, 1, 1}, {1, 2, 1}})), 1.5);
  EXPECT_THROW(ccd::relative_size(observed, ccd::Graph(3, {})), ccd::DomainError);
}

TEST(Rank, Examples) {
  EXPECT_EQ(ccd::rank_descending({0.9, 0.5, 0.1}), (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(ccd::rank_descending({0.7, 0.7, 0.2}), (std::vector<double>{1.5, 1.5, 3}));
  EXPECT_EQ(ccd::rank_descending({0.1, 0.5, 0.5, 0.5}), (std::vector<double>{4, 2, 2, 2}));

  ccd::EvalReport r;
  r.rows = {row("d1", "a", "10", 1, 1, 0.9), row("d1", "b", "10", 1, 1, 0.1),
            row("d2", "a", "10", 1, 1, 0.2), row("d2", "b", "10", 1, 1, 0.8)};
  const auto agg = ccd::average_rank(r, "pearson-sub");
  EXPECT_EQ(agg.at("a").mean_rank, 1.5);
  EXPECT_EQ(agg.at("b").mean_rank, 1.5);
  EXPECT_EQ(agg.at("a").datasets, 2u);
}

TEST(Rank, IncompleteDatasetsAreLeftOut) {
  ccd::EvalReport r;
  r.rows = {row("d1", "a", "10", 1, 1, 0.9), row("d1", "b", "10", 1, 1, std::nullopt),
            row("d2", "a", "10", 1, 1, 0.2), row("d2", "b", "10", 1, 1, 0.8)};
  const auto agg = ccd::average_rank(r, "pearson-sub");
  EXPECT_EQ(agg.at("a").datasets, 1u);
  EXPECT_EQ(agg.at("a").mean_rank, 2.0);
}

TEST(Rank, BoundsAndSum) {
  ccd::Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    ccd::EvalReport r;
    const std::vector<std::string> algs{"a", "b", "c", "d"};
    for (int d = 0; d < 5; ++d) {
      for (const auto& a : algs) {
        for (ccd::Seed s = 1; s <= 3; ++s) {
          // Coarse values so ties happen.
          const double v = static_cast<double>(ccd::uniform_below(rng, 4)) / 4.0;
          r.rows.push_back(row("d" + std::to_string(d), a, "10", 1.0, s, v));
        }
      }
    }
    const auto agg = ccd::average_rank(r, "pearson-sub", 1.0);
    double sum = 0;
    for (const auto& [alg, a] : agg) {
      EXPECT_GE(a.mean_rank, 1.0);
      EXPECT_LE(a.mean_rank, 4.0);
      sum += a.mean_rank;
    }
    EXPECT_NEAR(sum, 10.0, 1e-12);
  }
}

TEST(SBuckets, NearestOnLogScale) {
  const ccd::SBuckets b;
  EXPECT_EQ(b.of(1.0), 1.0);
  EXPECT_EQ(b.of(3.0), 4.0);
  EXPECT_EQ(b.of(0.3), 0.25);
  EXPECT_EQ(b.of(1000.0), 32.0);
  EXPECT_FALSE(b.of(0.0).has_value());
}

TEST(Report, RoundTripKeepsMarkers) {
  ccd::EvalReport r;
  r.rows.push_back(row("d", "clique", "10", 0.5, 3, 0.25));
  r.rows.push_back(row("d", "clique", "10", 0.5, 3, std::nullopt));
  auto failed = row("d", "oracle", "10", 0.5, 3, std::nullopt);
  failed.failure = "oracle-unavailable";
  failed.s_approximate = true;
  r.rows.push_back(failed);
  std::ostringstream out;
  ccd::write_report(out, r);
  const auto lines = lines_of(out.str());
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], "dataset,model,algorithm,budget,S,seed,metric,value");
  EXPECT_EQ(lines[1], "d,si-bd,clique,10,0.5,3,pearson-sub,0.25");
  EXPECT_EQ(lines[2], "d,si-bd,clique,10,0.5,3,pearson-sub,");
  EXPECT_EQ(lines[3], "d,si-bd,oracle,10,~0.5,3,pearson-sub,failed:oracle-unavailable");
  std::istringstream in(out.str());
  const auto back = ccd::read_report(in);
  ASSERT_EQ(back.rows.size(), 3u);
  EXPECT_EQ(back.rows[0].value, 0.25);
  EXPECT_FALSE(back.rows[1].value.has_value());
  EXPECT_FALSE(back.rows[1].failure.has_value());
  EXPECT_EQ(back.rows[2].failure, "oracle-unavailable");
  EXPECT_TRUE(back.rows[2].s_approximate);
}

TEST(PlotData, ShapeAndMissingValues) {
  ccd::EvalReport r;
  for (const std::string alg : {"clique", "path"}) {
    for (const std::string budget : {"10", "20", "40"}) {
      for (ccd::Seed s : {1, 2}) {
        std::optional<double> v = 0.1 * s;
        if (alg == "path" && budget == "20") v.reset();
        r.rows.push_back(row("d", alg, budget, 1.0, s, v));
      }
    }
  }
  const auto dir = scratch("plot");
  const auto files = ccd::emit_plot_data(r, ccd::PlotAxis::kBudget, dir);
  ASSERT_EQ(files.size(), 1u);
  const auto lines = lines_of(slurp(files[0]));
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], "x,clique_mean,clique_stderr,path_mean,path_stderr");
  for (const auto& l : lines) EXPECT_EQ(std::count(l.begin(), l.end(), ','), 4);
  EXPECT_EQ(lines[2], "20,0.15,0.05,,");
}

TEST(PlotData, SingleSeedHasEmptyStderr) {
  ccd::EvalReport r;
  r.rows.push_back(row("d", "clique", "10", 2.0, 1, 0.5));
  const auto dir = scratch("plot1");
  const auto files = ccd::emit_plot_data(r, ccd::PlotAxis::kRelativeSize, dir, true);
  ASSERT_EQ(files.size(), 2u);
  const auto lines = lines_of(slurp(files[0]));
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[1], "2,0.5,");
  EXPECT_TRUE(slurp(files[1]).starts_with("<svg"));
}

TEST(Config, ParsesAllKeys) {
  const auto spec = parse(
      "# demo\n"
      "dataset = planted two 30,30 0.3 0.01\n"
      "dataset = lfr small 500 0.1 20 60\n"
      "dataset = files karate data/karate.edges data/karate.communities\n"
      "cascades = karate karate.cascades\n"
      "model = si-bd\n"
      "alpha = 0.4\n"
      "t_max = 2\n"
      "algorithms = clique0, clustopt,oracle\n"
      "budget_kind = s\n"
      "budgets = 0.5, 1, 2\n"
      "metrics = pearson-sub,nmi-all\n"
      "seeds = 1,2,3\n"
      "workers = 2\n"
      "output = out\n",
      "/base");
  ASSERT_EQ(spec.datasets.size(), 3u);
  EXPECT_EQ(spec.datasets[0].group_sizes, (std::vector<std::size_t>{30, 30}));
  EXPECT_EQ(spec.datasets[1].lfr.max_community, 60u);
  EXPECT_EQ(spec.datasets[2].edges, fs::path("/base/data/karate.edges"));
  EXPECT_EQ(*spec.datasets[2].cascades, fs::path("/base/karate.cascades"));
  EXPECT_EQ(spec.model, ccd::CascadeModel::kSiBd);
  EXPECT_EQ(spec.params.alpha, 0.4);
  EXPECT_EQ(spec.algorithms.size(), 3u);
  EXPECT_EQ(spec.budget_kind, ccd::BudgetKind::kRelativeSize);
  EXPECT_EQ(spec.budgets, (std::vector<double>{0.5, 1, 2}));
  EXPECT_EQ(spec.seeds, (std::vector<ccd::Seed>{1, 2, 3}));
  EXPECT_EQ(spec.output, fs::path("/base/out"));
}

TEST(Config, Errors) {
  const std::string base = "dataset = planted p 4,4 1 0\nalgorithms = clique\nbudgets = 10\n";
  EXPECT_NO_THROW(parse(base));
  EXPECT_THROW(parse(base + "colour = red\n"), ccd::ParseError);
  EXPECT_THROW(parse(base + "algorithms = louvain\n"), ccd::ParseError);
  EXPECT_THROW(parse(base + "metrics = rand-sub\n"), ccd::ParseError);
  EXPECT_THROW(parse(base + "no equals sign\n"), ccd::ParseError);
  EXPECT_THROW(parse("algorithms = clique\nbudgets = 10\n"), ccd::ValidationError);
  EXPECT_THROW(parse(base + "cascades = nope x.txt\n"), ccd::ValidationError);
  EXPECT_THROW(parse(base + "known_horizon = true\n"), ccd::ValidationError);  // SIR has no horizon
  EXPECT_TRUE(parse(base + "model = c-si-bd\nknown_horizon = yes\n").known_horizon);
}

ccd::ExperimentSpec two_clique_spec(const fs::path& out) {
  auto spec = parse(
      "dataset = planted cliques 4,4 1 0\n"
      "model = si-bd\n"
      "alpha = 1\n"
      "algorithms = path,clique,clique0,cosine,oracle,clustopt\n"
      "budgets = 20,500\n"
      "metrics = pearson-sub,nmi-sub\n"
      "seeds = 1,2\n");
  spec.output = out;
  return spec;
}

TEST(RunExperiment, TwoCliquesAllSurrogatesPerfect) {
  const auto dir = scratch("cliques");
  const auto report = ccd::run_experiment(two_clique_spec(dir));
  // 2 seeds x 2 budgets x 6 algorithms x 2 metrics
  ASSERT_EQ(report.rows.size(), 48u);
  for (const auto& r : report.rows) {
    if (r.budget != "500" || r.metric != "pearson-sub" || r.algorithm == "clustopt") continue;
    EXPECT_FALSE(r.failure.has_value());
    ASSERT_TRUE(r.value.has_value()) << r.algorithm;
    EXPECT_DOUBLE_EQ(*r.value, 1.0) << r.algorithm << " seed " << r.seed;
    EXPECT_FALSE(r.s_approximate);
  }
}

TEST(RunExperiment, ByteIdenticalAcrossRunsAndWorkers) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  auto spec = two_clique_spec(a);
  ccd::run_experiment(spec);
  spec.output = b;
  spec.workers = 3;
  ccd::run_experiment(spec);
  EXPECT_EQ(slurp(a / "results.csv"), slurp(b / "results.csv"));
}

TEST(RunExperiment, ResumesAfterTruncation) {
  const auto full = scratch("resume_full"), cut = scratch("resume_cut");
  auto spec = two_clique_spec(full);
  spec.metrics = {"pearson-sub"};
  ccd::run_experiment(spec);
  const std::string complete = slurp(full / "results.csv");
  // Keep roughly half, ending mid-line.
  std::ofstream(cut / "results.csv", std::ios::binary) << complete.substr(0, complete.size() / 2 + 3);
  spec.output = cut;
  ccd::run_experiment(spec);
  EXPECT_EQ(slurp(cut / "results.csv"), complete);
  // Nothing left to do: a third run changes nothing.
  ccd::run_experiment(spec);
  EXPECT_EQ(slurp(cut / "results.csv"), complete);
}

TEST(RunExperiment, OracleOnObservedCascadesFails) {
  const auto dir = scratch("observed");
  const auto d = ccd::load_dataset("karate", kData + "karate.edges", kData + "karate.communities");
  ccd::EpidemicParams p;
  p.alpha = 0.5;
  const auto cs = ccd::generate_cascades(ccd::SimulationTarget::of(d), ccd::CascadeModel::kSiBd, p, 100, 1);
  {
    std::ofstream out(dir / "karate.cascades");
    ccd::write_cascades(out, cs, d.names);
  }
  auto spec = parse("dataset = files karate " + kData + "karate.edges " + kData +
                    "karate.communities\n"
                    "cascades = karate " + (dir / "karate.cascades").string() + "\n"
                    "algorithms = oracle,clique0\n"
                    "budgets = 30\n");
  spec.output = dir / "out";
  const auto report = ccd::run_experiment(spec);
  ASSERT_EQ(report.rows.size(), 2u);
  EXPECT_EQ(report.rows[0].algorithm, "oracle");
  EXPECT_EQ(report.rows[0].failure, "oracle-unavailable");
  EXPECT_EQ(report.rows[0].model, "observed");
  EXPECT_TRUE(report.rows[0].s_approximate);
  EXPECT_FALSE(report.rows[1].failure.has_value());
  EXPECT_NE(slurp(dir / "out" / "results.csv").find(",failed:oracle-unavailable"), std::string::npos);
}

TEST(RunExperiment, BudgetBeyondObservedPoolIsMarked) {
  const auto dir = scratch("unreachable");
  const auto d = ccd::load_dataset("karate", kData + "karate.edges", kData + "karate.communities");
  ccd::EpidemicParams p;
  p.alpha = 0.5;
  const auto cs = ccd::generate_cascades(ccd::SimulationTarget::of(d), ccd::CascadeModel::kSiBd, p, 20, 1);
  {
    std::ofstream out(dir / "k.cascades");
    ccd::write_cascades(out, cs, d.names);
  }
  auto spec = parse("dataset = files karate " + kData + "karate.edges " + kData +
                    "karate.communities\ncascades = karate " + (dir / "k.cascades").string() +
                    "\nalgorithms = clique0\nbudgets = 1000\n");
  spec.output = dir / "out";
  const auto report = ccd::run_experiment(spec);
  ASSERT_EQ(report.rows.size(), 1u);
  EXPECT_EQ(report.rows[0].failure, "budget-unreachable");
}

TEST(RunExperiment, Clique0ImprovesWithBudget) {
  const auto dir = scratch("monotone");
  auto spec = parse(
      "dataset = planted pp 12,12 0.6 0.05\n"
      "model = si-bd\n"
      "alpha = 0.3\n"
      "algorithms = clique0\n"
      "budgets = 10,50,250\n"
      "seeds = 1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16,17,18,19,20\n");
  spec.output = dir;
  const auto report = ccd::run_experiment(spec);
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& r : report.rows) {
    if (r.value) acc[r.budget].first += *r.value, ++acc[r.budget].second;
  }
  const double m10 = acc["10"].first / acc["10"].second;
  const double m50 = acc["50"].first / acc["50"].second;
  const double m250 = acc["250"].first / acc["250"].second;
  EXPECT_LE(m10, m50);
  EXPECT_LE(m50, m250);
}

}  // namespace
