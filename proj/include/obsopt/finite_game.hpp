// Explicit finite arenas and perfect-information safety games.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace obsopt::game {

using StateId = std::uint32_t;
using ActionId = std::uint32_t;

// Set of satisfied observable predicates, as a bit set over predicate ids.
struct Observation {
  std::uint64_t bits = 0;

  bool contains(std::size_t predicate) const noexcept {
    return (bits >> predicate) & 1u;
  }
  friend bool operator==(Observation, Observation) = default;
  friend auto operator<=>(Observation, Observation) = default;
};

using PredicateMask = std::uint64_t;

// Labelled transition system. `successors[s][a]` lists the a-successors of s.
struct FiniteLts {
  std::size_t state_count = 0;
  StateId initial = 0;
  std::size_t action_count = 0;
  std::vector<std::vector<std::vector<StateId>>> successors;

  FiniteLts() = default;
  FiniteLts(std::size_t states, std::size_t actions, StateId init = 0);

  void add(StateId from, ActionId a, StateId to);
  std::span<const StateId> post(StateId s, ActionId a) const {
    return successors.at(s).at(a);
  }
  bool is_total() const;
  // Throws std::invalid_argument naming the first (state, action) pair
  // without a successor.
  void validate_total() const;
};

// Characteristic set over state indices.
struct StatePredicate {
  std::vector<bool> holds;

  bool operator()(StateId s) const { return holds.at(s); }
};

// A finite run: states.size() == actions.size() + 1.
struct Run {
  std::vector<StateId> states;
  std::vector<ActionId> actions;
};

struct SafetySolution {
  std::vector<bool> winning;
  // Chosen action per winning state; nullopt outside the winning set.
  std::vector<std::optional<ActionId>> strategy;
  bool initial_winning = false;
};

// Greatest fixpoint of "safe and some action keeps every successor inside".
// Ties between winning actions go to the lowest action index.
SafetySolution solve_safety(const FiniteLts& g, const StatePredicate& safe);

// Predicates over the states of an LTS, indexed by predicate id.
struct Labelling {
  std::vector<StatePredicate> predicates;
};

Observation gamma_obs(const Labelling& labels, StateId s, PredicateMask obs);

// Observation sequence of a run with consecutive repeats collapsed.
std::vector<Observation> stutter_free_projection(const Run& r,
                                                 const Labelling& labels,
                                                 PredicateMask obs);

}  // namespace obsopt::game
