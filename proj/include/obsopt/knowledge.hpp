// Knowledge-game construction for imperfect-information safety games.
//
// Any arena that can enumerate its per-action steps and report an observation
// per state implements ObservableGame. A knowledge game is itself such an
// arena (see as_observable_game), which is what allows a game for a coarser
// predicate set to be built directly on top of a finer one.

#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "obsopt/finite_game.hpp"

namespace obsopt::knowledge {

using game::ActionId;
using game::Observation;
using game::PredicateMask;
using game::StateId;

struct Successor {
  StateId state;
  bool visible;  // observation of the target differs from the source

  friend bool operator==(const Successor&, const Successor&) = default;
};

class ObservableGame {
 public:
  virtual ~ObservableGame() = default;

  virtual StateId initial() = 0;
  virtual std::size_t action_count() const = 0;
  virtual std::string action_name(ActionId a) const {
    return "a" + std::to_string(a);
  }
  // Predicates this arena observes; observations only use these bits.
  virtual PredicateMask observed() const = 0;
  virtual Observation observe(StateId s) const = 0;
  // Every successor of s under a, tagged with visibility. The reference
  // stays valid for the lifetime of the arena.
  virtual const std::vector<Successor>& step(StateId s, ActionId a) = 0;
  // True when s admits an infinite a-labelled continuation inside its
  // observation that the step graph does not show as a cycle (for timed
  // arenas: unbounded delay).
  virtual bool stalls(StateId /*s*/, ActionId /*a*/) { return false; }
  // Every concrete state denoted by `inner` is denoted by `outer`.
  virtual bool has_subsumption() const { return false; }
  virtual bool subsumes(StateId outer, StateId inner) const {
    return outer == inner;
  }
  virtual std::size_t state_count() const = 0;
};

using BeliefId = std::uint32_t;

// Sorted, duplicate-free and subsumption-free member list; all members share
// one observation.
struct Belief {
  std::vector<StateId> members;
  Observation observation;

  friend bool operator==(const Belief& a, const Belief& b) {
    return a.members == b.members;
  }
};

struct PostResult {
  std::vector<StateId> post;  // visible targets, sorted and unique
  bool sink = false;
};

// States reached from `members` by a-labelled invisible steps followed by
// one visible step, plus the divergence flag for the same exploration.
PostResult explore(ObservableGame& g, std::span<const StateId> members,
                   ActionId a);
std::vector<StateId> post_obs(ObservableGame& g,
                              std::span<const StateId> members, ActionId a);
bool sink_obs(ObservableGame& g, std::span<const StateId> members, ActionId a);

struct BuildOptions {
  std::size_t safety = 0;  // predicate id of the safety predicate
  bool early_stop = true;
  // Expand beliefs that violate safety. Not needed for solving; useful when
  // comparing game structures.
  bool expand_unsafe = false;
};

struct KnowledgeGame {
  std::shared_ptr<ObservableGame> arena;
  PredicateMask obs = 0;
  std::size_t safety = 0;
  std::size_t action_count = 0;

  std::vector<Belief> beliefs;  // beliefs[0] is the initial belief
  // transitions[v][a]: sorted successor beliefs, including v itself for a
  // sink self-loop. Empty rows when v was not expanded.
  std::vector<std::vector<std::vector<BeliefId>>> transitions;
  std::vector<std::vector<bool>> sink;
  std::vector<bool> expanded;
  std::vector<bool> losing;  // losing states found during construction

  bool complete = false;       // every safe belief was expanded
  bool early_stopped = false;  // stopped because the initial belief lost

  bool safe(BeliefId v) const {
    return beliefs[v].observation.contains(safety);
  }
  // Distinct arena states appearing in some belief.
  std::size_t member_state_count() const;
};

std::shared_ptr<KnowledgeGame> build_knowledge_game(
    std::shared_ptr<ObservableGame> arena, const BuildOptions& options);

struct KnowledgeSolution {
  bool winning = false;
  std::vector<std::optional<ActionId>> strategy;  // per belief
};

// Safety game on the beliefs. An action without any successor from a belief
// is treated as unavailable there; a partial, early-stopped game loses.
KnowledgeSolution solve(const KnowledgeGame& kg);

// The finite safety game handed to game::solve_safety: beliefs plus one
// trailing losing state absorbing missing transitions.
game::FiniteLts to_finite_lts(const KnowledgeGame& kg,
                              game::StatePredicate* safe_out);

// The knowledge game viewed as an arena observed through a coarser predicate
// set. Requires a complete game and coarser ⊆ kg.obs.
std::shared_ptr<ObservableGame> as_observable_game(
    std::shared_ptr<const KnowledgeGame> kg, PredicateMask coarser);

// Finite LTS with a predicate labelling, observed through `obs`.
class LtsArena final : public ObservableGame {
 public:
  LtsArena(game::FiniteLts lts, game::Labelling labels, PredicateMask obs);

  StateId initial() override { return lts_.initial; }
  std::size_t action_count() const override { return lts_.action_count; }
  PredicateMask observed() const override { return obs_; }
  Observation observe(StateId s) const override { return observations_.at(s); }
  const std::vector<Successor>& step(StateId s, ActionId a) override {
    return steps_.at(s).at(a);
  }
  std::size_t state_count() const override { return lts_.state_count; }

  const game::FiniteLts& lts() const { return lts_; }

 private:
  game::FiniteLts lts_;
  PredicateMask obs_;
  std::vector<Observation> observations_;
  std::vector<std::vector<std::vector<Successor>>> steps_;
};

}  // namespace obsopt::knowledge
