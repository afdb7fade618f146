// Region-graph semantics of a timed game automaton. Deliberately naive: every
// test is done on one representative valuation per region.

#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "obsopt/finite_game.hpp"
#include "obsopt/knowledge.hpp"
#include "obsopt/tga.hpp"

namespace obsopt::region {

// Per clock (index 0 unused): integer part, or cap + 1 once the clock exceeds
// its maximal constant; and the rank of its fractional part among the clocks
// below the cap (0 for a zero fraction, equal ranks for equal fractions).
struct Region {
  tga::LocationId location = 0;
  std::vector<std::int32_t> integer;
  std::vector<std::uint8_t> rank;

  friend bool operator==(const Region&, const Region&) = default;
};

struct RegionGame {
  std::vector<Region> regions;  // state i of the LTS
  game::FiniteLts lts;          // may be partial: blocked actions have no row
  game::Labelling labels;       // one entry per model predicate
};

// Regions reachable from (l_init, 0). Actions: controllable actions in model
// order, then skip. Throws ModelError for diagonal guards.
RegionGame region_game(const tga::TgaModel& m);

// Valuation of a region scaled by `denominator(m)`.
std::vector<std::int64_t> representative(const tga::TgaModel& m,
                                         const Region& r);
std::int64_t denominator(const tga::TgaModel& m);

// Immediate time successor; the region itself when every clock is above its
// cap.
Region time_successor(const Region& r, std::span<const std::int32_t> caps);
bool unbounded(const Region& r, std::span<const std::int32_t> caps);

std::shared_ptr<knowledge::LtsArena> region_observable_game(
    const RegionGame& rg, game::PredicateMask obs);

bool oracle_solve(const tga::TgaModel& m, game::PredicateMask obs);
// Same, reusing one region graph across predicate sets.
bool oracle_solve(const RegionGame& rg, std::size_t safety,
                  game::PredicateMask obs);

}  // namespace obsopt::region
