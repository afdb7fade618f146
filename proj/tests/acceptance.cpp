// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [--full] [--only PREFIX]
//
// --full (or OBSOPT_FULL=1) extends the Light-Heavy optimum check to n = 9.
// --only runs just the criteria whose name starts with PREFIX.

#include <chrono>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "dbm_props.hpp"
#include "obsopt/knowledge.hpp"
#include "obsopt/model_io.hpp"
#include "obsopt/optimizer.hpp"
#include "obsopt/region.hpp"
#include "obsopt/tga.hpp"
#include "oracles.hpp"

using namespace obsopt;
using game::PredicateMask;
using Clock = std::chrono::steady_clock;

namespace {

bool g_full = false;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void fail(const std::string& why) {
    if (pass) detail.str("");
    if (!pass) detail << "; ";
    pass = false;
    detail << why;
  }
  void note(const std::string& s) {
    if (pass) detail << (detail.tellp() > 0 ? "; " : "") << s;
  }
};

using ModelPtr = std::shared_ptr<const tga::TgaModel>;

ModelPtr load(const char* file, std::optional<std::int64_t> n = std::nullopt) {
  io::ParseOptions o;
  if (n) o.overrides["N"] = *n;
  return std::make_shared<const tga::TgaModel>(
      io::load_model(std::string(OBSOPT_MODELS_DIR) + "/" + file, o));
}

PredicateMask named(const tga::TgaModel& m, std::initializer_list<const char*> names) {
  PredicateMask o = PredicateMask{1} << m.safety;
  for (const char* n : names) o |= PredicateMask{1} << m.find_predicate(n).value();
  return o;
}

std::vector<PredicateMask> lattice(const tga::TgaModel& m) {
  std::vector<PredicateMask> out;
  const PredicateMask all = m.all_predicates();
  for (PredicateMask o = 0; o <= all; ++o)
    if ((o & ~all) == 0 && (o >> m.safety & 1)) out.push_back(o);
  return out;
}

std::string set_name(const tga::TgaModel& m, PredicateMask o) {
  std::vector<std::string> names;
  for (const auto& p : m.predicates) names.push_back(p.name);
  return opt::format_set(o, names);
}

// From-scratch zone verdicts for every subset, shared by several criteria.
std::map<PredicateMask, bool> scratch_verdicts(const ModelPtr& m) {
  std::map<PredicateMask, bool> v;
  for (PredicateMask o : lattice(*m)) v[o] = tga::zone_solve(m, o).winning;
  return v;
}

struct CaseStudy {
  const char* label;
  ModelPtr model;
  std::map<PredicateMask, bool> verdicts;
};

std::vector<CaseStudy>& case_studies() {
  static std::vector<CaseStudy> cs = [] {
    std::vector<CaseStudy> v;
    v.push_back({"Train-Gate", load("traingate.tga"), {}});
    v.push_back({"Light-Heavy n=2", load("lightheavy.tga", 2), {}});
    for (auto& c : v) c.verdicts = scratch_verdicts(c.model);
    return v;
  }();
  return cs;
}

void check_optimum(Outcome& out, const char* label, const ModelPtr& m,
                   PredicateMask want, tga::Cost want_cost) {
  const auto w = opt::CostFunction::from_model(*m);
  const auto res = opt::optimize(m, w, opt::OptimizeOptions{});
  if (!res.best)
    out.fail(std::string(label) + ": no controllable set found");
  else if (*res.best != want || res.best_cost != want_cost)
    out.fail(std::string(label) + ": got " + set_name(*m, *res.best) + " cost " +
             io::format_cost(res.best_cost));
}

void criterion_optima(Outcome& out) {
  const auto tg = load("traingate.tga");
  check_optimum(out, "Train-Gate", tg, named(*tg, {"pos1>=2", "pos2>=2", "y<2"}),
                tga::Cost(3));
  const int top = g_full ? 9 : 5;
  for (int n = 2; n <= top; ++n) {
    const auto lh = load("lightheavy.tga", n);
    check_optimum(out, ("Light-Heavy n=" + std::to_string(n)).c_str(), lh,
                  named(*lh, {"heavy=true", "pos=0", "y<3"}), tga::Cost(3));
  }
  out.note("Train-Gate and Light-Heavy n=2.." + std::to_string(top) +
           (g_full ? "" : " (n<=9 with --full)"));
}

void criterion_reuse(Outcome& out) {
  for (const auto& cs : case_studies()) {
    const auto& m = cs.model;
    knowledge::BuildOptions bo;
    bo.safety = m->safety;
    bo.early_stop = false;
    std::shared_ptr<const knowledge::KnowledgeGame> fine =
        knowledge::build_knowledge_game(tga::zone_observable_game(m, m->all_predicates()),
                                        bo);
    if (!fine->complete) {
      out.fail(std::string(cs.label) + ": full-observation game incomplete");
      continue;
    }
    std::size_t checked = 0;
    for (PredicateMask o : lattice(*m)) {
      bool nested_win;
      if (o == m->all_predicates()) {
        nested_win = knowledge::solve(*fine).winning;
      } else {
        knowledge::BuildOptions nb;
        nb.safety = m->safety;
        nested_win = knowledge::solve(*knowledge::build_knowledge_game(
                                          knowledge::as_observable_game(fine, o), nb))
                         .winning;
      }
      // Also through the cache path the optimizer uses.
      opt::ReuseCache cache;
      cache.add(m->all_predicates(), fine);
      const auto via_cache =
          opt::solve_obs(opt::ArenaFactory(m, opt::Oracle::zone), o, &cache, true);
      const bool scratch = cs.verdicts.at(o);
      if (nested_win != scratch || via_cache.verdict != scratch)
        out.fail(std::string(cs.label) + ": nested verdict differs on " +
                 set_name(*m, o));
      ++checked;
    }
    out.note(std::string(cs.label) + " " + std::to_string(checked) + " subsets");
  }
}

void criterion_oracles(Outcome& out) {
  const auto t0 = Clock::now();
  const auto lh = load("lightheavy.tga", 2);
  const auto rg = region::region_game(*lh);
  for (PredicateMask o : lattice(*lh))
    if (region::oracle_solve(rg, lh->safety, o) != tga::zone_solve(lh, o).winning)
      out.fail("Light-Heavy n=2 disagrees on " + set_name(*lh, o));

  // Most random models are controllable under any observation or under none;
  // draw until 200 have a verdict that depends on the observation, checking
  // every model drawn on the way.
  std::size_t drawn = 0, mixed = 0;
  for (std::uint64_t seed = 0; mixed < 200; ++seed) {
    std::mt19937_64 rng(seed);
    const std::string text = oracle::random_model(1 + seed % 2, 3, rng);
    ++drawn;
    if (const auto e = oracle::check_zone_vs_region(text); !e.empty()) {
      out.fail("random model seed " + std::to_string(seed) + ": " + e);
      if (!out.pass && drawn > 5000) break;
      continue;
    }
    const auto m = io::parse_model(text);
    const auto g = region::region_game(m);
    const bool coarse = region::oracle_solve(g, m.safety, PredicateMask{1} << m.safety);
    const bool fine = region::oracle_solve(g, m.safety, m.all_predicates());
    if (coarse != fine) ++mixed;
  }
  const std::chrono::duration<double> dt = Clock::now() - t0;
  if (dt.count() > 600) out.fail("took " + std::to_string(dt.count()) + "s");
  out.note("LH n=2 32 subsets; " + std::to_string(drawn) + " random models (" +
           std::to_string(mixed) + " observation-dependent)");
}

void criterion_reuse_counts(Outcome& out) {
  const auto m = load("traingate.tga");
  const auto w = opt::CostFunction::from_model(*m);
  auto run = [&](opt::Heuristic h, std::uint64_t seed) {
    opt::OptimizeOptions o;
    o.heuristic = h;
    o.seed = seed;
    return opt::optimize(m, w, o);
  };
  const auto exp = run(opt::Heuristic::expensive_first, 0);
  if (exp.from_scratch != 1)
    out.fail("expensive-first built " + std::to_string(exp.from_scratch) +
             " games from scratch");
  const auto cheap = run(opt::Heuristic::cheap_first, 0);
  if (cheap.reused != 0)
    out.fail("cheap-first reused " + std::to_string(cheap.reused) + " games");
  for (const auto& [name, r] : {std::pair{"expensive-first", &exp}, {"cheap-first", &cheap}})
    if (r->record.iterations.size() >= 32)
      out.fail(std::string(name) + " took " + std::to_string(r->record.iterations.size()) +
               " iterations");
  std::ostringstream avg;
  for (opt::Heuristic h : {opt::Heuristic::random, opt::Heuristic::midpoint}) {
    std::size_t total = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto r = run(h, seed);
      total += r.record.iterations.size();
      if (r.record.iterations.size() >= 32)
        out.fail(std::string(opt::to_string(h)) + " seed " + std::to_string(seed) +
                 " took " + std::to_string(r.record.iterations.size()) + " iterations");
    }
    const double mean = total / 10.0;
    if (mean >= 16) out.fail(std::string(opt::to_string(h)) + " averages " + std::to_string(mean));
    avg << opt::to_string(h) << " avg " << mean << " ";
  }
  out.note("expensive-first " + std::to_string(exp.from_scratch) + " scratch/" +
           std::to_string(exp.record.iterations.size()) + " iters, cheap-first " +
           std::to_string(cheap.reused) + " reused/" +
           std::to_string(cheap.record.iterations.size()) + " iters, " + avg.str());
}

// Every LTS on n states and two actions, each (state, action) row any subset
// of states, with every labelling of two predicates. Instances isomorphic
// under a permutation fixing the initial state, swapping the two actions or
// complementing the non-safety predicate are checked once; so are instances with unreachable
// states, which repeat a smaller instance.
std::size_t exhaustive_sweep(std::size_t n, Outcome& out) {
  using game::FiniteLts;
  const std::size_t rows = 2 * n, per = std::size_t{1} << n;
  std::size_t structures = 1;
  for (std::size_t r = 0; r < rows; ++r) structures *= per;
  std::vector<std::vector<std::size_t>> perms;
  {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i;
    do perms.push_back(p);
    while (std::next_permutation(p.begin() + 1, p.end()));
  }
  const std::size_t labellings = std::size_t{1} << (2 * n);
  auto map_bits = [&](std::size_t bits, const std::vector<std::size_t>& p) {
    std::size_t out = 0;
    for (std::size_t t = 0; t < n; ++t)
      if (bits >> t & 1) out |= std::size_t{1} << p[t];
    return out;
  };
  std::vector<std::size_t> succ(rows), mapped(rows);
  std::vector<const std::vector<std::size_t>*> automorphisms;
  std::size_t checked = 0;
  for (std::size_t code = 0; code < structures && out.pass; ++code) {
    std::size_t c = code;
    for (std::size_t r = 0; r < rows; ++r) {
      succ[r] = c % per;
      c /= per;
    }
    std::size_t seen = 1;
    for (bool grew = true; grew;) {
      grew = false;
      for (std::size_t s = 0; s < n; ++s)
        if (seen >> s & 1) {
          const std::size_t next = seen | succ[2 * s] | succ[2 * s + 1];
          if (next != seen) {
            seen = next;
            grew = true;
          }
        }
    }
    if (seen != per - 1) continue;
    // A relabelled structure with a smaller code covers this one entirely;
    // one with the same code leaves only the labelling to compare.
    bool smaller = false;
    automorphisms.clear();
    for (const auto& p : perms)
      for (std::size_t swap = 0; swap < 2; ++swap) {
        for (std::size_t s = 0; s < n; ++s)
          for (std::size_t a = 0; a < 2; ++a)
            mapped[p[s] * 2 + (a ^ swap)] = map_bits(succ[s * 2 + a], p);
        std::size_t pc = 0;
        for (std::size_t r = rows; r-- > 0;) pc = pc * per + mapped[r];
        if (pc < code) smaller = true;
        if (pc == code) automorphisms.push_back(&p);
      }
    if (smaller) continue;
    FiniteLts lts(n, 2, 0);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t t = 0; t < n; ++t)
        if (succ[r] >> t & 1) lts.add(static_cast<game::StateId>(r / 2),
                                      static_cast<game::ActionId>(r % 2),
                                      static_cast<game::StateId>(t));
    const std::size_t low = per - 1;
    for (std::size_t lab = 0; lab < labellings; ++lab) {
      bool canonical = true;
      for (const auto* p : automorphisms) {
        const std::size_t safe = map_bits(lab & low, *p), other = map_bits(lab >> n, *p);
        for (std::size_t o : {other, ~other & low})
          if ((safe | o << n) < lab) canonical = false;
      }
      if (!canonical) continue;
      game::Labelling labels;
      labels.predicates.resize(2);
      for (std::size_t pr = 0; pr < 2; ++pr)
        for (std::size_t s = 0; s < n; ++s)
          labels.predicates[pr].holds.push_back(lab >> (pr * n + s) & 1);
      if (const auto e = oracle::check_knowledge_instance(lts, labels); !e.empty()) {
        out.fail(std::to_string(n) + "-state instance " + std::to_string(code) + "/" +
                 std::to_string(lab) + ": " + e);
        break;
      }
      ++checked;
    }
  }
  return checked;
}

void criterion_knowledge(Outcome& out) {
  const auto t0 = Clock::now();
  std::size_t exhaustive = 0;
  for (std::size_t n = 1; n <= 3 && out.pass; ++n) exhaustive += exhaustive_sweep(n, out);

  std::mt19937_64 rng(2024);
  std::size_t small = 0;
  for (int i = 0; i < 20000 && out.pass; ++i, ++small) {
    const auto l = oracle::random_lts(4 + i % 2, 2, 2, 0.3, rng);
    if (const auto e = oracle::check_knowledge_instance(l.lts, l.labels); !e.empty())
      out.fail("random " + std::to_string(4 + i % 2) + "-state instance: " + e);
  }
  std::size_t large = 0;
  for (int i = 0; i < 1000 && out.pass; ++i, ++large) {
    const std::size_t n = 6 + i % 7;
    const auto l = oracle::random_lts(n, 2 + i % 2, 2 + i % 3, 2.0 / n, rng);
    if (const auto e = oracle::check_knowledge_instance(l.lts, l.labels); !e.empty())
      out.fail("random " + std::to_string(n) + "-state instance: " + e);
  }
  const std::chrono::duration<double> dt = Clock::now() - t0;
  if (dt.count() > 300) out.fail("took " + std::to_string(dt.count()) + "s");
  out.note(std::to_string(exhaustive) + " exhaustive instances up to 3 states, " +
           std::to_string(small) + " random with 4-5 states, " + std::to_string(large) +
           " random with 6-12 states");
}

void criterion_monotone(Outcome& out) {
  std::size_t traces = 0;
  for (const auto& cs : case_studies()) {
    for (const auto& [c, wc] : cs.verdicts)
      for (const auto& [f, wf] : cs.verdicts)
        if ((c & ~f) == 0 && wc && !wf)
          out.fail(std::string(cs.label) + ": " + set_name(*cs.model, c) + " wins but " +
                   set_name(*cs.model, f) + " loses");
    const auto w = opt::CostFunction::from_model(*cs.model);
    for (opt::Heuristic h : {opt::Heuristic::cheap_first, opt::Heuristic::expensive_first,
                             opt::Heuristic::random, opt::Heuristic::midpoint})
      for (bool reuse : {true, false})
        for (std::uint64_t seed = 0; seed < (h == opt::Heuristic::random ? 10u : 1u); ++seed) {
          opt::OptimizeOptions o;
          o.heuristic = h;
          o.reuse = reuse;
          o.seed = seed;
          const auto r = opt::optimize(cs.model, w, o);
          ++traces;
          if (!opt::validate_nonredundant(r.record, w))
            out.fail(std::string(cs.label) + ": redundant trace for " +
                     std::string(opt::to_string(h)));
          for (const auto& it : r.record.iterations)
            if (it.verdict != cs.verdicts.at(it.obs))
              out.fail(std::string(cs.label) + ": optimizer verdict differs on " +
                       set_name(*cs.model, it.obs));
        }
  }
  out.note("both lattices monotone; " + std::to_string(traces) + " traces non-redundant");
}

void criterion_dbm(Outcome& out) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(99);
  for (const auto& p : dbm_props::all())
    for (int i = 0; i < 10000; ++i)
      if (const auto e = p.check(rng); !e.empty()) {
        out.fail(e);
        break;
      }
  const std::chrono::duration<double> dt = Clock::now() - t0;
  if (dt.count() > 120) out.fail("took " + std::to_string(dt.count()) + "s");
  out.note(std::to_string(dbm_props::all().size()) + " operations x 10000 instances");
}

void sanity_beliefs(Outcome& out) {
  const auto m = load("traingate.tga");
  const auto s = tga::zone_solve(m, m->all_predicates(), false);
  if (s.beliefs <= 1000) out.fail("only " + std::to_string(s.beliefs) + " beliefs");
  out.note(std::to_string(s.beliefs) + " beliefs");
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* env = std::getenv("OBSOPT_FULL"); env && std::string(env) == "1")
    g_full = true;
  std::string only;
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "--full") {
      g_full = true;
    } else if (std::string(argv[i]) == "--only" && i + 1 < argc) {
      only = argv[++i];
    } else {
      std::cerr << "usage: acceptance [--full] [--only PREFIX]\n";
      return 2;
    }
  }

  const std::pair<const char*, std::function<void(Outcome&)>> criteria[] = {
      {"1 case-study optima", criterion_optima},
      {"2 reuse correctness", criterion_reuse},
      {"3 oracle equivalence", criterion_oracles},
      {"4 reuse counts", criterion_reuse_counts},
      {"5 knowledge sweeps", criterion_knowledge},
      {"6 monotonicity and non-redundancy", criterion_monotone},
      {"7 dbm properties", criterion_dbm},
      {"sanity full-observation Train-Gate beliefs", sanity_beliefs},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    if (!std::string_view(name).starts_with(only)) continue;
    Outcome out;
    const auto t0 = Clock::now();
    try {
      fn(out);
    } catch (const std::exception& e) {
      out.fail(std::string("exception: ") + e.what());
    }
    const std::chrono::duration<double> dt = Clock::now() - t0;
    std::cout << (out.pass ? "PASS " : "FAIL ") << name << " (" << out.detail.str()
              << ") [" << static_cast<int>(dt.count() * 10) / 10.0 << "s]" << std::endl;
    if (!out.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
