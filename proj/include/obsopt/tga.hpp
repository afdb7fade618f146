// Timed game automata and their zone-level game semantics.
//
// A symbolic state is (location, observation cell, zone) with the zone inside
// the cell and the location invariant. The cell grid is cut by the chosen
// observation atoms together with every controllable guard and invariant
// atom, so observation and controllable enabledness are both constant on a
// cell.

#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <boost/rational.hpp>

#include "obsopt/dbm.hpp"
#include "obsopt/knowledge.hpp"

namespace obsopt::tga {

using LocationId = std::uint32_t;
using Cost = boost::rational<std::int64_t>;
using game::ActionId;
using game::Observation;
using game::PredicateMask;
using game::StateId;

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Edge {
  LocationId source = 0;
  LocationId target = 0;
  bool controllable = false;
  // Index into TgaModel::controllable_actions or uncontrollable_actions.
  std::uint32_t action = 0;
  std::vector<dbm::AtomicConstraint> guard;  // conjunction
  std::vector<dbm::ClockId> resets;
};

// (K, psi): holds in (l, v) iff l is in K and v satisfies every band.
struct ObservationPredicate {
  std::string name;
  Cost cost{0};
  std::vector<bool> locations;
  std::vector<dbm::Band> clock;
};

struct TgaModel {
  std::vector<std::string> locations;
  LocationId initial = 0;
  dbm::ClockSet clocks;
  std::vector<std::string> controllable_actions;
  std::vector<std::string> uncontrollable_actions;
  std::vector<Edge> edges;
  std::vector<std::vector<dbm::Band>> invariants;  // per location
  std::vector<ObservationPredicate> predicates;
  std::size_t safety = 0;

  // Throws ModelError on the first structural problem: out-of-range ids,
  // controllable guards outside B(X), a clock-dependent safety predicate.
  void validate() const;
  // Largest constant compared against each clock anywhere in the model;
  // index 0 is unused.
  std::vector<std::int32_t> max_constants() const;
  bool has_diagonal_guards() const;
  std::optional<std::size_t> find_predicate(std::string_view name) const;
  std::optional<LocationId> find_location(std::string_view name) const;
  PredicateMask all_predicates() const;
};

// Bands of a B(X) guard; throws ModelError for anything else.
std::vector<dbm::Band> guard_bands(std::span<const dbm::AtomicConstraint> guard);

// Union of the zones where some a-edge from l is enabled, each clipped to the
// invariant of l.
std::vector<dbm::Dbm> enabled_region(const TgaModel& m, LocationId l,
                                     std::uint32_t action);

struct SymbolicState {
  LocationId location = 0;
  dbm::Cell cell;
  dbm::Dbm zone = dbm::Dbm::universe(1);

  friend bool operator==(const SymbolicState&, const SymbolicState&) = default;
};

struct StepResult {
  std::vector<std::pair<SymbolicState, bool>> successors;  // (state, visible)
  // The action is not enabled and time may elapse forever in the cell.
  bool stalls = false;
};

// The zone game for one predicate set. Actions are the controllable actions
// in model order followed by skip.
class ZoneGame final : public knowledge::ObservableGame {
 public:
  ZoneGame(std::shared_ptr<const TgaModel> model, PredicateMask obs);

  StateId initial() override { return 0; }
  std::size_t action_count() const override {
    return model_->controllable_actions.size() + 1;
  }
  std::string action_name(ActionId a) const override;
  ActionId skip() const { return static_cast<ActionId>(action_count() - 1); }
  PredicateMask observed() const override { return obs_; }
  Observation observe(StateId s) const override;
  const std::vector<knowledge::Successor>& step(StateId s,
                                                ActionId a) override;
  bool stalls(StateId s, ActionId a) override;
  bool has_subsumption() const override { return true; }
  bool subsumes(StateId outer, StateId inner) const override;
  std::size_t state_count() const override { return states_.size(); }

  const SymbolicState& state(StateId s) const { return states_.at(s); }
  const TgaModel& model() const { return *model_; }
  const dbm::CellGrid& grid() const { return grid_; }

  Observation observe(const SymbolicState& s) const;
  bool enabled(LocationId l, const dbm::Cell& cell, std::uint32_t action) const;
  // The successors of s under a, every zone split by cell and
  // normalised.
  StepResult game_step(const SymbolicState& s, ActionId a) const;

 private:
  struct Key {
    const SymbolicState* s;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept;
  };
  struct KeyEq {
    bool operator()(const Key& a, const Key& b) const noexcept {
      return *a.s == *b.s;
    }
  };
  struct Slot {
    std::optional<std::vector<knowledge::Successor>> successors;
    bool stalls = false;
  };

  StateId intern(SymbolicState s);
  void compute(StateId s, ActionId a);
  dbm::Dbm normalise(dbm::Dbm z, LocationId l, const dbm::Cell& cell) const;
  void emit(LocationId target, dbm::Dbm zone, const SymbolicState& from,
            StepResult& out) const;

  std::shared_ptr<const TgaModel> model_;
  PredicateMask obs_;
  dbm::CellGrid grid_;
  std::vector<std::int32_t> max_constants_;
  std::vector<std::vector<dbm::Constraint>> invariant_constraints_;
  std::vector<std::vector<dbm::Band>> controllable_guards_;  // per edge

  std::deque<SymbolicState> states_;
  std::unordered_map<Key, StateId, KeyHash, KeyEq> index_;
  std::deque<std::vector<Slot>> slots_;
};

// The packaged zone game; rejects obs without the model's safety predicate.
std::shared_ptr<ZoneGame> zone_observable_game(
    std::shared_ptr<const TgaModel> model, PredicateMask obs);

// Sink_obs over a belief of the zone game.
bool diverges(ZoneGame& g, std::span<const StateId> belief, ActionId a);

// Builds and solves the knowledge game from scratch on the zone semantics.
struct SolveStats {
  bool winning = false;
  bool complete = false;
  std::size_t beliefs = 0;
  std::size_t symbolic_states = 0;
};
SolveStats zone_solve(std::shared_ptr<const TgaModel> model, PredicateMask obs,
                      bool early_stop = true);

}  // namespace obsopt::tga
