// Cost-optimal search for an observable predicate set that admits a winning
// controller: lattice search with cost/subset pruning, four picking
// heuristics and reuse of finer knowledge games.

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "obsopt/knowledge.hpp"
#include "obsopt/region.hpp"
#include "obsopt/tga.hpp"

namespace obsopt::opt {

using game::PredicateMask;
using tga::Cost;

// Per-predicate costs; the cost of a set is the sum over its members.
struct CostFunction {
  std::vector<Cost> costs;

  Cost total(PredicateMask obs) const;
  // Model costs with the safety predicate made free.
  static CostFunction from_model(const tga::TgaModel& m);
};

// Predicate ids of a mask in increasing order.
std::vector<std::size_t> members_of(PredicateMask obs);
// Lexicographic order on the sorted id vectors.
bool lex_less(PredicateMask a, PredicateMask b);
std::string format_set(PredicateMask obs, const std::vector<std::string>& names);

enum class Heuristic { cheap_first, expensive_first, random, midpoint };

std::string_view to_string(Heuristic h);
std::optional<Heuristic> parse_heuristic(std::string_view s);

// All subsets of `universe` that contain the safety predicate and have not
// been pruned yet.
class CandidateStore {
 public:
  CandidateStore(PredicateMask universe, std::size_t safety);

  bool empty() const noexcept { return alive_count_ == 0; }
  std::size_t size() const noexcept { return alive_count_; }
  bool contains(PredicateMask obs) const;
  void remove(PredicateMask obs);
  // Members in increasing index order over the non-safety predicates.
  std::vector<PredicateMask> members() const;

  PredicateMask universe() const noexcept { return universe_; }
  std::size_t safety() const noexcept { return safety_; }

  // Index of a candidate among the 2^(n-1) subsets, and back.
  std::size_t index_of(PredicateMask obs) const;
  PredicateMask mask_of(std::size_t index) const;
  std::size_t capacity() const noexcept { return alive_.size(); }
  bool alive(std::size_t index) const { return alive_[index]; }

 private:
  PredicateMask universe_;
  std::size_t safety_;
  std::vector<std::size_t> free_;  // non-safety predicate ids
  std::vector<bool> alive_;
  std::size_t alive_count_ = 0;
};

// Throws std::invalid_argument on an empty store.
PredicateMask pick_candidate(const CandidateStore& store, Heuristic h,
                             const CostFunction& w, std::mt19937_64& rng);
// min(|{c : w(c) >= w(obs)}|, |{c : c subset of obs}|) for every member.
std::vector<std::pair<PredicateMask, std::size_t>> midpoint_scores(
    const CandidateStore& store, const CostFunction& w);

// Win: drop every c with w(c) >= w(obs). Loss: drop every c subset of obs.
void prune(CandidateStore& store, PredicateMask obs, bool verdict,
           const CostFunction& w);

struct Iteration {
  PredicateMask obs = 0;
  bool verdict = false;
  std::optional<PredicateMask> reused_from;
  std::size_t beliefs = 0;
  std::size_t symbolic_states = 0;
  bool complete = false;
  double seconds = 0.0;
};

struct SolutionRecord {
  std::vector<Iteration> iterations;
};

bool validate_nonredundant(const SolutionRecord& seq, const CostFunction& w);

class ReuseCache {
 public:
  struct Entry {
    PredicateMask obs;
    std::shared_ptr<const knowledge::KnowledgeGame> game;
  };

  // Only complete games are kept; returns whether the game was stored.
  bool add(PredicateMask obs, std::shared_ptr<const knowledge::KnowledgeGame> kg);
  // Smallest cached strict superset of obs, ties to the most recent entry.
  std::optional<Entry> find_reusable(PredicateMask obs) const;
  std::size_t size() const noexcept { return entries_.size(); }
  void clear() { entries_.clear(); }

 private:
  std::vector<Entry> entries_;
};

enum class Oracle { zone, region };

struct OptimizeOptions {
  Heuristic heuristic = Heuristic::expensive_first;
  bool reuse = true;
  std::uint64_t seed = 0;
  // Losing solves run to completion so their games can be reused.
  bool reuse_requires_full = false;
  std::size_t max_obs = 16;
  std::size_t jobs = 1;  // > 1 only without reuse
  Oracle oracle = Oracle::zone;
};

struct OptimizeResult {
  std::optional<PredicateMask> best;
  Cost best_cost{0};
  SolutionRecord record;
  std::size_t from_scratch = 0;
  std::size_t reused = 0;
};

// Builds arenas for one model, either on zones or on the region graph.
class ArenaFactory {
 public:
  ArenaFactory(std::shared_ptr<const tga::TgaModel> model, Oracle oracle);
  std::shared_ptr<knowledge::ObservableGame> make(PredicateMask obs) const;
  const tga::TgaModel& model() const { return *model_; }

 private:
  std::shared_ptr<const tga::TgaModel> model_;
  Oracle oracle_;
  std::shared_ptr<const region::RegionGame> regions_;
};

struct SolveOutcome {
  bool verdict = false;
  std::shared_ptr<const knowledge::KnowledgeGame> game;
  std::optional<PredicateMask> reused_from;
};

// One game check, nested on a cached finer game when one is available.
SolveOutcome solve_obs(const ArenaFactory& arenas, PredicateMask obs,
                       ReuseCache* cache, bool early_stop);

OptimizeResult optimize(std::shared_ptr<const tga::TgaModel> model,
                        const CostFunction& w, const OptimizeOptions& options);

}  // namespace obsopt::opt
