#include "obsopt/optimizer.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <future>
#include <stdexcept>

namespace obsopt::opt {

Cost CostFunction::total(PredicateMask obs) const {
  Cost sum{0};
  for (std::size_t p : members_of(obs)) sum += costs.at(p);
  return sum;
}

CostFunction CostFunction::from_model(const tga::TgaModel& m) {
  CostFunction w;
  for (const auto& p : m.predicates) w.costs.push_back(p.cost);
  w.costs.at(m.safety) = 0;
  return w;
}

std::vector<std::size_t> members_of(PredicateMask obs) {
  std::vector<std::size_t> out;
  while (obs) {
    out.push_back(static_cast<std::size_t>(std::countr_zero(obs)));
    obs &= obs - 1;
  }
  return out;
}

bool lex_less(PredicateMask a, PredicateMask b) {
  const auto x = members_of(a);
  const auto y = members_of(b);
  return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end());
}

std::string format_set(PredicateMask obs, const std::vector<std::string>& names) {
  std::string out = "{";
  bool first = true;
  for (std::size_t p : members_of(obs)) {
    if (!first) out += ", ";
    first = false;
    out += p < names.size() ? names[p] : "#" + std::to_string(p);
  }
  return out + "}";
}

std::string_view to_string(Heuristic h) {
  switch (h) {
    case Heuristic::cheap_first: return "cheap-first";
    case Heuristic::expensive_first: return "expensive-first";
    case Heuristic::random: return "random";
    case Heuristic::midpoint: return "midpoint";
  }
  return "?";
}

std::optional<Heuristic> parse_heuristic(std::string_view s) {
  for (auto h : {Heuristic::cheap_first, Heuristic::expensive_first,
                 Heuristic::random, Heuristic::midpoint})
    if (to_string(h) == s) return h;
  return std::nullopt;
}

// ---------------------------------------------------------------------------

CandidateStore::CandidateStore(PredicateMask universe, std::size_t safety)
    : universe_(universe), safety_(safety) {
  if (safety >= 64 || !((universe >> safety) & 1u))
    throw std::invalid_argument("the predicate universe must contain safety");
  for (std::size_t p : members_of(universe))
    if (p != safety) free_.push_back(p);
  if (free_.size() > 30) throw std::invalid_argument("too many predicates");
  alive_.assign(std::size_t{1} << free_.size(), true);
  alive_count_ = alive_.size();
}

std::size_t CandidateStore::index_of(PredicateMask obs) const {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < free_.size(); ++i)
    if ((obs >> free_[i]) & 1u) idx |= std::size_t{1} << i;
  return idx;
}

PredicateMask CandidateStore::mask_of(std::size_t index) const {
  PredicateMask m = PredicateMask{1} << safety_;
  for (std::size_t i = 0; i < free_.size(); ++i)
    if ((index >> i) & 1u) m |= PredicateMask{1} << free_[i];
  return m;
}

bool CandidateStore::contains(PredicateMask obs) const {
  if ((obs & ~universe_) != 0 || !((obs >> safety_) & 1u)) return false;
  return alive_[index_of(obs)];
}

void CandidateStore::remove(PredicateMask obs) {
  if (!contains(obs)) return;
  alive_[index_of(obs)] = false;
  --alive_count_;
}

std::vector<PredicateMask> CandidateStore::members() const {
  std::vector<PredicateMask> out;
  out.reserve(alive_count_);
  for (std::size_t i = 0; i < alive_.size(); ++i)
    if (alive_[i]) out.push_back(mask_of(i));
  return out;
}

std::vector<std::pair<PredicateMask, std::size_t>> midpoint_scores(
    const CandidateStore& store, const CostFunction& w) {
  const std::size_t n = store.capacity();
  // Number of live subsets of each index (sum over subsets).
  std::vector<std::uint32_t> below(n);
  for (std::size_t i = 0; i < n; ++i) below[i] = store.alive(i) ? 1 : 0;
  for (std::size_t bit = 1; bit < n; bit <<= 1)
    for (std::size_t i = 0; i < n; ++i)
      if (i & bit) below[i] += below[i ^ bit];

  std::vector<Cost> costs;
  for (std::size_t i = 0; i < n; ++i)
    if (store.alive(i)) costs.push_back(w.total(store.mask_of(i)));
  std::sort(costs.begin(), costs.end());

  std::vector<std::pair<PredicateMask, std::size_t>> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!store.alive(i)) continue;
    const PredicateMask m = store.mask_of(i);
    const Cost c = w.total(m);
    const std::size_t dearer = static_cast<std::size_t>(
        costs.end() - std::lower_bound(costs.begin(), costs.end(), c));
    out.emplace_back(m, std::min<std::size_t>(dearer, below[i]));
  }
  return out;
}

PredicateMask pick_candidate(const CandidateStore& store, Heuristic h,
                             const CostFunction& w, std::mt19937_64& rng) {
  if (store.empty()) throw std::invalid_argument("empty candidate store");
  const auto members = store.members();
  switch (h) {
    case Heuristic::random: {
      std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
      return members[pick(rng)];
    }
    case Heuristic::cheap_first:
    case Heuristic::expensive_first: {
      PredicateMask best = members.front();
      Cost best_cost = w.total(best);
      for (PredicateMask m : members) {
        const Cost c = w.total(m);
        const bool better =
            h == Heuristic::cheap_first ? c < best_cost : c > best_cost;
        if (better || (c == best_cost && lex_less(m, best))) {
          best = m;
          best_cost = c;
        }
      }
      return best;
    }
    case Heuristic::midpoint: {
      const auto scores = midpoint_scores(store, w);
      auto best = scores.front();
      for (const auto& s : scores)
        if (s.second > best.second ||
            (s.second == best.second && lex_less(s.first, best.first)))
          best = s;
      return best.first;
    }
  }
  return members.front();
}

void prune(CandidateStore& store, PredicateMask obs, bool verdict,
           const CostFunction& w) {
  const Cost c = w.total(obs);
  for (PredicateMask m : store.members()) {
    const bool drop = verdict ? w.total(m) >= c : (m & ~obs) == 0;
    if (drop) store.remove(m);
  }
  store.remove(obs);
}

bool validate_nonredundant(const SolutionRecord& seq, const CostFunction& w) {
  const auto& it = seq.iterations;
  for (std::size_t i = 0; i < it.size(); ++i)
    for (std::size_t j = 0; j < i; ++j) {
      if (it[j].verdict) {
        if (!(w.total(it[j].obs) > w.total(it[i].obs))) return false;
      } else if ((it[i].obs & ~it[j].obs) == 0) {
        return false;
      }
    }
  return true;
}

// ---------------------------------------------------------------------------

bool ReuseCache::add(PredicateMask obs,
                     std::shared_ptr<const knowledge::KnowledgeGame> kg) {
  if (!kg || !kg->complete) return false;
  entries_.push_back({obs, std::move(kg)});
  return true;
}

std::optional<ReuseCache::Entry> ReuseCache::find_reusable(
    PredicateMask obs) const {
  std::optional<Entry> best;
  for (const auto& e : entries_) {
    if (e.obs == obs || (obs & ~e.obs) != 0) continue;
    if (!best || std::popcount(e.obs) <= std::popcount(best->obs)) best = e;
  }
  return best;
}

// ---------------------------------------------------------------------------

ArenaFactory::ArenaFactory(std::shared_ptr<const tga::TgaModel> model,
                           Oracle oracle)
    : model_(std::move(model)), oracle_(oracle) {
  model_->validate();
  if (oracle_ == Oracle::region)
    regions_ = std::make_shared<region::RegionGame>(region::region_game(*model_));
}

std::shared_ptr<knowledge::ObservableGame> ArenaFactory::make(
    PredicateMask obs) const {
  if (oracle_ == Oracle::region) {
    if (!((obs >> model_->safety) & 1u))
      throw std::invalid_argument(
          "the observed set must contain the safety predicate");
    return region::region_observable_game(*regions_, obs);
  }
  return tga::zone_observable_game(model_, obs);
}

SolveOutcome solve_obs(const ArenaFactory& arenas, PredicateMask obs,
                       ReuseCache* cache, bool early_stop) {
  SolveOutcome out;
  std::shared_ptr<knowledge::ObservableGame> arena;
  if (cache) {
    if (auto e = cache->find_reusable(obs)) {
      arena = knowledge::as_observable_game(e->game, obs);
      out.reused_from = e->obs;
    }
  }
  if (!arena) arena = arenas.make(obs);
  knowledge::BuildOptions opts;
  opts.safety = arenas.model().safety;
  opts.early_stop = early_stop;
  auto kg = knowledge::build_knowledge_game(std::move(arena), opts);
  out.verdict = knowledge::solve(*kg).winning;
  if (cache) cache->add(obs, kg);
  out.game = std::move(kg);
  return out;
}

namespace {

Iteration make_iteration(PredicateMask obs, const SolveOutcome& s,
                         double seconds) {
  Iteration it;
  it.obs = obs;
  it.verdict = s.verdict;
  it.reused_from = s.reused_from;
  it.beliefs = s.game->beliefs.size();
  it.symbolic_states = s.game->member_state_count();
  it.complete = s.game->complete;
  it.seconds = seconds;
  return it;
}

}  // namespace

OptimizeResult optimize(std::shared_ptr<const tga::TgaModel> model,
                        const CostFunction& w, const OptimizeOptions& options) {
  model->validate();
  if (model->predicates.size() > options.max_obs)
    throw std::invalid_argument(
        "model has " + std::to_string(model->predicates.size()) +
        " predicates, above the limit of " + std::to_string(options.max_obs));
  if (w.costs.size() != model->predicates.size())
    throw std::invalid_argument("one cost per predicate expected");
  for (const auto& c : w.costs)
    if (c < 0) throw std::invalid_argument("costs must be non-negative");
  if (options.jobs > 1 && options.reuse)
    throw std::invalid_argument("parallel jobs require reuse to be disabled");

  ArenaFactory arenas(model, options.oracle);
  CandidateStore store(model->all_predicates(), model->safety);
  ReuseCache cache;
  std::mt19937_64 rng(options.seed);
  OptimizeResult result;
  const bool early_stop = !(options.reuse && options.reuse_requires_full);
  using clock = std::chrono::steady_clock;

  auto record = [&](PredicateMask obs, const SolveOutcome& s, double secs) {
    result.record.iterations.push_back(make_iteration(obs, s, secs));
    if (s.reused_from)
      ++result.reused;
    else
      ++result.from_scratch;
    if (s.verdict) {
      result.best = obs;
      result.best_cost = w.total(obs);
    }
    prune(store, obs, s.verdict, w);
  };

  if (options.jobs <= 1) {
    while (!store.empty()) {
      const PredicateMask obs = pick_candidate(store, options.heuristic, w, rng);
      const auto t0 = clock::now();
      SolveOutcome s =
          solve_obs(arenas, obs, options.reuse ? &cache : nullptr, early_stop);
      const std::chrono::duration<double> dt = clock::now() - t0;
      record(obs, s, dt.count());
    }
    return result;
  }

  // Batches of independent solves; a verdict whose set was pruned by an
  // earlier verdict of the same batch is discarded.
  while (!store.empty()) {
    CandidateStore pending = store;
    std::vector<PredicateMask> batch;
    while (batch.size() < options.jobs && !pending.empty()) {
      batch.push_back(pick_candidate(pending, options.heuristic, w, rng));
      pending.remove(batch.back());
    }
    std::vector<std::future<std::pair<SolveOutcome, double>>> running;
    for (PredicateMask obs : batch)
      running.push_back(std::async(std::launch::async, [&arenas, obs, early_stop] {
        const auto t0 = clock::now();
        SolveOutcome s = solve_obs(arenas, obs, nullptr, early_stop);
        const std::chrono::duration<double> dt = clock::now() - t0;
        return std::make_pair(std::move(s), dt.count());
      }));
    for (std::size_t i = 0; i < batch.size(); ++i) {
      auto [s, secs] = running[i].get();
      if (store.contains(batch[i])) record(batch[i], s, secs);
    }
  }
  return result;
}

}  // namespace obsopt::opt
