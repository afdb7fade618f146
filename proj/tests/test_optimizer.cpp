#include <doctest.h>

#include <map>

#include "obsopt/model_io.hpp"
#include "obsopt/optimizer.hpp"
#include "oracles.hpp"

using namespace obsopt;
using namespace obsopt::opt;

namespace {

CostFunction costs(std::initializer_list<int> c) {
  CostFunction w;
  for (int x : c) w.costs.push_back(Cost(x));
  return w;
}

std::vector<PredicateMask> all_with_safety(PredicateMask universe, std::size_t safety) {
  std::vector<PredicateMask> out;
  for (PredicateMask m = 0; m <= universe; ++m)
    if ((m & ~universe) == 0 && (m >> safety & 1)) out.push_back(m);
  return out;
}

const Heuristic kAll[] = {Heuristic::cheap_first, Heuristic::expensive_first,
                          Heuristic::random, Heuristic::midpoint};

}  // namespace

TEST_CASE("cost functions and set formatting") {
  const auto w = costs({0, 2, 3});
  CHECK(w.total(0b111) == Cost(5));
  CHECK(members_of(0b1010) == std::vector<std::size_t>{1, 3});
  CHECK(lex_less(0b0011, 0b0101));
  CHECK_FALSE(lex_less(0b0101, 0b0011));
  CHECK(lex_less(0b0001, 0b0011));
  CHECK(format_set(0b101, {"a", "b", "c"}) == "{a, c}");
  CHECK(parse_heuristic("midpoint") == Heuristic::midpoint);
  CHECK_FALSE(parse_heuristic("best"));
  for (Heuristic h : kAll) CHECK(parse_heuristic(to_string(h)) == h);
}

TEST_CASE("candidate store and pruning") {
  CandidateStore s(0b1111, 0);
  CHECK(s.size() == 8);
  CHECK(s.contains(0b0001));
  CHECK_FALSE(s.contains(0b0010));
  for (std::size_t i = 0; i < s.capacity(); ++i) CHECK(s.index_of(s.mask_of(i)) == i);

  const auto w = costs({0, 1, 2, 4});
  prune(s, 0b0111, false, w);  // loss: every subset of {0,1,2} goes
  CHECK(s.size() == 4);
  CHECK_FALSE(s.contains(0b0011));
  CHECK(s.contains(0b1001));
  prune(s, 0b1011, true, w);  // win at cost 5: everything costing >= 5 goes
  CHECK(s.size() == 1);
  CHECK(s.contains(0b1001));
  prune(s, 0b1001, true, w);
  CHECK(s.empty());
  std::mt19937_64 rng(0);
  CHECK_THROWS_AS(pick_candidate(s, Heuristic::cheap_first, w, rng),
                  std::invalid_argument);
}

TEST_CASE("heuristic choices") {
  const auto w = costs({0, 3, 1, 1});
  CandidateStore s(0b1111, 0);
  std::mt19937_64 rng(0);
  CHECK(pick_candidate(s, Heuristic::cheap_first, w, rng) == 0b0001);
  CHECK(pick_candidate(s, Heuristic::expensive_first, w, rng) == 0b1111);
  s.remove(0b0001);
  // {2} and {3} both cost 1; the lexicographically smaller wins.
  CHECK(pick_candidate(s, Heuristic::cheap_first, w, rng) == 0b0101);
  for (int k = 0; k < 20; ++k)
    CHECK(s.contains(pick_candidate(s, Heuristic::random, w, rng)));
}

TEST_CASE("midpoint scores match their definition") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> cost(0, 4);
  std::bernoulli_distribution drop(0.3);
  for (int iter = 0; iter < 100; ++iter) {
    const std::size_t n = 2 + iter % 4;
    const PredicateMask universe = (PredicateMask{1} << n) - 1;
    CostFunction w;
    w.costs.push_back(Cost(0));
    for (std::size_t i = 1; i < n; ++i) w.costs.push_back(Cost(cost(rng)));
    CandidateStore s(universe, 0);
    for (PredicateMask m : all_with_safety(universe, 0))
      if (drop(rng)) s.remove(m);
    if (s.empty()) continue;
    const auto members = s.members();
    for (const auto& [obs, score] : midpoint_scores(s, w)) {
      std::size_t heavier = 0, below = 0;
      for (PredicateMask c : members) {
        if (w.total(c) >= w.total(obs)) ++heavier;
        if ((c & ~obs) == 0) ++below;
      }
      CHECK(score == std::min(heavier, below));
    }
    const auto pick = pick_candidate(s, Heuristic::midpoint, w, rng);
    std::size_t top = 0;
    for (const auto& [obs, score] : midpoint_scores(s, w)) top = std::max(top, score);
    for (const auto& [obs, score] : midpoint_scores(s, w))
      if (obs == pick) CHECK(score == top);
  }
}

TEST_CASE("non-redundancy validation") {
  const auto w = costs({0, 1, 2});
  auto rec = [](std::initializer_list<std::pair<PredicateMask, bool>> its) {
    SolutionRecord r;
    for (auto [o, v] : its) {
      Iteration it;
      it.obs = o;
      it.verdict = v;
      r.iterations.push_back(it);
    }
    return r;
  };
  CHECK(validate_nonredundant(rec({{0b111, true}, {0b011, false}, {0b101, true}}), w));
  // A subset of a losing set is already known to lose.
  CHECK_FALSE(validate_nonredundant(rec({{0b101, false}, {0b001, false}}), w));
  // Nothing at least as expensive as a winning set is worth checking.
  CHECK_FALSE(validate_nonredundant(rec({{0b101, true}, {0b111, true}}), w));
  CHECK_FALSE(validate_nonredundant(rec({{0b101, true}, {0b101, true}}), w));
}

TEST_CASE("reuse cache keeps complete games only") {
  const auto m = std::make_shared<const tga::TgaModel>(io::parse_model(R"(
clock x
location A initial invariant x < 2
location BAD
edge A -> A : uncontrollable u guard x >= 1 reset x
edge A -> BAD : controllable c guard x >= 3
predicate low cost 1 clock x < 1
predicate mid cost 1 clock x < 2
safety safe except BAD
)"));
  const ArenaFactory arenas(m, Oracle::zone);
  ReuseCache cache;
  const PredicateMask all = m->all_predicates();
  const auto fine = solve_obs(arenas, all, &cache, false);
  CHECK(fine.verdict);
  CHECK(fine.game->complete);
  CHECK_FALSE(fine.reused_from);
  CHECK(cache.size() == 1);
  CHECK_FALSE(cache.find_reusable(all));
  const PredicateMask coarse = PredicateMask{1} << m->safety;
  REQUIRE(cache.find_reusable(coarse));
  CHECK(cache.find_reusable(coarse)->obs == all);
  const auto nested = solve_obs(arenas, coarse, &cache, false);
  CHECK(nested.reused_from == all);
  CHECK(nested.verdict == tga::zone_solve(m, coarse).winning);
}

TEST_CASE("incomplete games are not cached") {
  const auto m = std::make_shared<const tga::TgaModel>(io::parse_model(R"(
clock x
location A initial
location BAD
edge A -> BAD : uncontrollable u guard x >= 1
predicate low cost 1 clock x < 1
safety safe except BAD
)"));
  const ArenaFactory arenas(m, Oracle::zone);
  ReuseCache cache;
  const auto lost = solve_obs(arenas, m->all_predicates(), &cache, true);
  CHECK_FALSE(lost.verdict);
  CHECK_FALSE(lost.game->complete);
  CHECK(cache.size() == 0);
}

TEST_CASE("optimize finds the enumerated optimum on random models") {
  int models = 0;
  for (std::uint64_t seed = 0; models < 40; ++seed) {
    std::mt19937_64 rng(seed);
    const std::string text = oracle::random_model(1 + seed % 2, 3, rng);
    const auto m = std::make_shared<const tga::TgaModel>(io::parse_model(text));
    const auto rg = region::region_game(*m);
    std::map<std::uint64_t, bool> verdicts;
    for (PredicateMask o : all_with_safety(m->all_predicates(), m->safety))
      verdicts[o] = region::oracle_solve(rg, m->safety, o);
    const auto w = CostFunction::from_model(*m);
    const auto want = oracle::enumerate_optimum(verdicts, w.costs);
    ++models;
    INFO(text);
    for (Heuristic h : kAll)
      for (bool reuse : {true, false}) {
        OptimizeOptions o;
        o.heuristic = h;
        o.reuse = reuse;
        o.seed = seed;
        const auto res = optimize(m, w, o);
        CHECK(res.best.has_value() == want.best_cost.has_value());
        if (res.best) {
          CHECK(res.best_cost == *want.best_cost);
          CHECK(std::find(want.optima.begin(), want.optima.end(), *res.best) !=
                want.optima.end());
        }
        CHECK(validate_nonredundant(res.record, w));
        for (const auto& it : res.record.iterations) CHECK(it.verdict == verdicts.at(it.obs));
        CHECK(res.from_scratch + res.reused == res.record.iterations.size());
        if (!reuse) CHECK(res.reused == 0);
      }
  }
}

TEST_CASE("runs are deterministic") {
  const auto m = std::make_shared<const tga::TgaModel>(
      io::load_model(std::string(OBSOPT_MODELS_DIR) + "/lightheavy.tga"));
  const auto w = CostFunction::from_model(*m);
  for (Heuristic h : kAll) {
    OptimizeOptions o;
    o.heuristic = h;
    o.seed = 7;
    const auto a = optimize(m, w, o), b = optimize(m, w, o);
    REQUIRE(a.record.iterations.size() == b.record.iterations.size());
    for (std::size_t i = 0; i < a.record.iterations.size(); ++i) {
      CHECK(a.record.iterations[i].obs == b.record.iterations[i].obs);
      CHECK(a.record.iterations[i].beliefs == b.record.iterations[i].beliefs);
      CHECK(a.record.iterations[i].reused_from == b.record.iterations[i].reused_from);
    }
    CHECK(a.best == b.best);
  }
}

TEST_CASE("parallel solves without reuse give the sequential answer") {
  const auto m = std::make_shared<const tga::TgaModel>(
      io::load_model(std::string(OBSOPT_MODELS_DIR) + "/lightheavy.tga"));
  const auto w = CostFunction::from_model(*m);
  OptimizeOptions o;
  o.reuse = false;
  o.heuristic = Heuristic::cheap_first;
  const auto seq = optimize(m, w, o);
  o.jobs = 3;
  const auto par = optimize(m, w, o);
  CHECK(par.best == seq.best);
  CHECK(par.best_cost == seq.best_cost);
  CHECK(validate_nonredundant(par.record, w));
  o.reuse = true;
  CHECK_THROWS_AS(optimize(m, w, o), std::invalid_argument);
}
