// obsopt: solve an imperfect-information timed safety game for a fixed set of
// observable predicates, or search for the cheapest set that admits control.
//
// Exit codes: 0 success, 1 not controllable, 2 usage error, 3 model error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "obsopt/model_io.hpp"
#include "obsopt/optimizer.hpp"
#include "obsopt/region.hpp"
#include "obsopt/tga.hpp"

namespace {

using namespace obsopt;

constexpr int kNotControllable = 1;
constexpr int kUsage = 2;
constexpr int kModel = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string model_path;
  std::vector<std::string> sets;
  std::string oracle = "zone";
  std::string output;
  bool trace = false;
};

io::ParseOptions parse_sets(const std::vector<std::string>& sets) {
  io::ParseOptions po;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0)
      throw UsageError("--set expects NAME=VALUE, got '" + s + "'");
    try {
      std::size_t used = 0;
      const auto v = std::stoll(s.substr(eq + 1), &used);
      if (used != s.size() - eq - 1) throw std::invalid_argument(s);
      po.overrides[s.substr(0, eq)] = v;
    } catch (const std::exception&) {
      throw UsageError("--set expects an integer value, got '" + s + "'");
    }
  }
  return po;
}

opt::Oracle parse_oracle(const tga::TgaModel& m, const std::string& s) {
  if (s == "zone") return opt::Oracle::zone;
  const auto caps = m.max_constants();
  const auto top = caps.empty() ? 0 : *std::max_element(caps.begin(), caps.end());
  if (m.clocks.clock_count() > 3 || top > 10)
    throw UsageError(
        "the region oracle is limited to 3 clocks and constants up to 10");
  if (m.has_diagonal_guards())
    throw UsageError("the region oracle does not support clock differences");
  return opt::Oracle::region;
}

io::Report base_report(const tga::TgaModel& m, const Common& c,
                       const std::string& command) {
  io::Report r;
  r.command = command;
  r.model = c.model_path;
  r.oracle = c.oracle;
  r.safety = m.safety;
  for (const auto& p : m.predicates) r.predicates.push_back({p.name, p.cost});
  return r;
}

void emit(const io::Report& r, const Common& c) {
  const std::string text = io::write_report(r);
  if (c.output.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(c.output, std::ios::binary);
  if (!out) throw UsageError("cannot write " + c.output);
  out << text;
}

void trace_iteration(const tga::TgaModel& m, const opt::Iteration& it,
                     std::size_t n) {
  std::vector<std::string> names;
  for (const auto& p : m.predicates) names.push_back(p.name);
  std::cerr << "[" << n << "] " << opt::format_set(it.obs, names) << " -> "
            << (it.verdict ? "win" : "lose") << "  beliefs=" << it.beliefs
            << " symbolic=" << it.symbolic_states;
  if (it.reused_from)
    std::cerr << " reused " << opt::format_set(*it.reused_from, names);
  std::cerr << " (" << it.seconds << "s)\n";
}

int run_solve(const Common& c, const std::vector<std::string>& obs_names) {
  auto model = std::make_shared<const tga::TgaModel>(
      io::load_model(c.model_path, parse_sets(c.sets)));
  game::PredicateMask obs = game::PredicateMask{1} << model->safety;
  for (const auto& n : obs_names) {
    auto id = model->find_predicate(n);
    if (!id && n == "safety") id = model->safety;
    if (!id) throw UsageError("unknown predicate '" + n + "'");
    obs |= game::PredicateMask{1} << *id;
  }
  const opt::ArenaFactory arenas(model, parse_oracle(*model, c.oracle));
  const auto t0 = std::chrono::steady_clock::now();
  const auto s = opt::solve_obs(arenas, obs, nullptr, true);
  const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;

  io::Report r = base_report(*model, c, "solve");
  r.obs = obs;
  r.verdict = s.verdict;
  opt::Iteration it;
  it.obs = obs;
  it.verdict = s.verdict;
  it.beliefs = s.game->beliefs.size();
  it.symbolic_states = s.game->member_state_count();
  it.complete = s.game->complete;
  it.seconds = dt.count();
  r.iterations.push_back(it);
  if (c.trace) trace_iteration(*model, it, 1);
  emit(r, c);
  return s.verdict ? 0 : kNotControllable;
}

struct OptimizeFlags {
  std::string heuristic = "expensive-first";
  bool no_reuse = false;
  std::uint64_t seed = 0;
  std::size_t max_obs = 16;
  std::size_t jobs = 1;
  bool reuse_requires_full = false;
};

int run_optimize(const Common& c, const OptimizeFlags& f) {
  auto h = opt::parse_heuristic(f.heuristic);
  if (!h) throw UsageError("unknown heuristic '" + f.heuristic + "'");
  if (f.jobs == 0) throw UsageError("--jobs must be positive");
  if (f.jobs > 1 && !f.no_reuse) throw UsageError("--jobs needs --no-reuse");
  if (f.reuse_requires_full && f.no_reuse)
    throw UsageError("--reuse-requires-full conflicts with --no-reuse");
  auto model = std::make_shared<const tga::TgaModel>(
      io::load_model(c.model_path, parse_sets(c.sets)));
  if (model->predicates.size() > f.max_obs)
    throw UsageError("model has " + std::to_string(model->predicates.size()) +
                     " predicates; the limit is " + std::to_string(f.max_obs) +
                     " (see --max-obs)");

  opt::OptimizeOptions o;
  o.heuristic = *h;
  o.reuse = !f.no_reuse;
  o.seed = f.seed;
  o.max_obs = f.max_obs;
  o.jobs = f.jobs;
  o.reuse_requires_full = f.reuse_requires_full;
  o.oracle = parse_oracle(*model, c.oracle);
  const auto w = opt::CostFunction::from_model(*model);
  const auto res = opt::optimize(model, w, o);

  io::Report r = base_report(*model, c, "optimize");
  r.heuristic = f.heuristic;
  r.reuse = o.reuse;
  r.seed = f.seed;
  r.best = res.best;
  r.best_cost = res.best_cost;
  r.from_scratch = res.from_scratch;
  r.reused = res.reused;
  r.iterations = res.record.iterations;
  if (c.trace)
    for (std::size_t i = 0; i < r.iterations.size(); ++i)
      trace_iteration(*model, r.iterations[i], i + 1);
  emit(r, c);
  return res.best ? 0 : kNotControllable;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Observation-cost optimal controller synthesis for timed games"};
  app.require_subcommand(1);

  Common common;
  std::vector<std::string> obs_names;
  OptimizeFlags flags;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("model", common.model_path, "Model file")->required();
    sub->add_option("--set", common.sets, "Override a model constant, NAME=VALUE");
    sub->add_option("--oracle", common.oracle, "Game semantics: zone or region")
        ->check(CLI::IsMember({"zone", "region"}));
    sub->add_option("--output", common.output, "Write the report to a file");
    sub->add_flag("--trace", common.trace, "Per-iteration progress on stderr");
  };

  auto* solve = app.add_subcommand("solve", "Solve for a fixed predicate set");
  add_common(solve);
  solve->add_option("--obs", obs_names,
                    "Observed predicate (repeatable); safety is always observed");

  auto* optimize = app.add_subcommand("optimize", "Search for the cheapest set");
  add_common(optimize);
  optimize->add_option("--heuristic", flags.heuristic,
                       "cheap-first, expensive-first, random or midpoint")
      ->check(CLI::IsMember({"cheap-first", "expensive-first", "random", "midpoint"}));
  auto* reuse = optimize->add_flag("--reuse", "Reuse finer knowledge games (default)");
  auto* no_reuse = optimize->add_flag("--no-reuse", flags.no_reuse,
                                      "Build every game from scratch");
  reuse->excludes(no_reuse);
  optimize->add_option("--seed", flags.seed, "Seed for the random heuristic");
  optimize->add_option("--max-obs", flags.max_obs, "Largest accepted predicate catalog");
  optimize->add_option("--jobs", flags.jobs, "Parallel solves (needs --no-reuse)");
  optimize->add_flag("--reuse-requires-full", flags.reuse_requires_full,
                     "Finish losing games so they can be reused");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }

  try {
    if (*solve) return run_solve(common, obs_names);
    return run_optimize(common, flags);
  } catch (const UsageError& e) {
    std::cerr << "obsopt: " << e.what() << "\n";
    return kUsage;
  } catch (const tga::ModelError& e) {
    std::cerr << "obsopt: " << e.what() << "\n";
    return kModel;
  } catch (const std::exception& e) {
    std::cerr << "obsopt: " << e.what() << "\n";
    return kModel;
  }
}
