#include "obsopt/region.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <optional>
#include <span>
#include <tuple>
#include <stdexcept>

namespace obsopt::region {

using dbm::AtomicConstraint;
using dbm::Relation;
using tga::ModelError;
using tga::TgaModel;

namespace {

bool compare(std::int64_t lhs, Relation rel, std::int64_t rhs) {
  switch (rel) {
    case Relation::lt: return lhs < rhs;
    case Relation::le: return lhs <= rhs;
    case Relation::eq: return lhs == rhs;
    case Relation::ge: return lhs >= rhs;
    case Relation::gt: return lhs > rhs;
  }
  return false;
}

bool holds(const AtomicConstraint& a, std::span<const std::int64_t> v,
           std::int64_t den) {
  switch (a.kind) {
    case AtomicConstraint::Kind::upper:
      return compare(v[a.x], a.rel, std::int64_t{a.k} * den);
    case AtomicConstraint::Kind::band:
      return v[a.x] >= std::int64_t{a.k} * den &&
             (!a.k2 || v[a.x] < std::int64_t{*a.k2} * den);
    case AtomicConstraint::Kind::diff:
      throw ModelError("the region oracle does not support clock differences");
  }
  return false;
}

bool holds(const dbm::Band& b, std::span<const std::int64_t> v,
           std::int64_t den) {
  return v[b.clock] >= std::int64_t{b.lower} * den &&
         (!b.upper || v[b.clock] < std::int64_t{*b.upper} * den);
}

bool holds_all(std::span<const dbm::Band> bs, std::span<const std::int64_t> v,
               std::int64_t den) {
  for (const auto& b : bs)
    if (!holds(b, v, den)) return false;
  return true;
}

bool guard_holds(const tga::Edge& e, std::span<const std::int64_t> v,
                 std::int64_t den) {
  for (const auto& a : e.guard)
    if (!holds(a, v, den)) return false;
  return true;
}

bool capped(const Region& r, std::span<const std::int32_t> caps, std::size_t c) {
  return r.integer[c] > caps[c];
}

void normalise_ranks(Region& r, std::span<const std::int32_t> caps) {
  std::vector<std::uint8_t> used;
  for (std::size_t c = 1; c < r.rank.size(); ++c) {
    if (capped(r, caps, c)) {
      r.integer[c] = caps[c] + 1;
      r.rank[c] = 0;
    } else if (r.rank[c] > 0) {
      used.push_back(r.rank[c]);
    }
  }
  std::sort(used.begin(), used.end());
  used.erase(std::unique(used.begin(), used.end()), used.end());
  for (std::size_t c = 1; c < r.rank.size(); ++c)
    if (r.rank[c] > 0)
      r.rank[c] = static_cast<std::uint8_t>(
          std::lower_bound(used.begin(), used.end(), r.rank[c]) - used.begin() + 1);
}

}  // namespace

std::int64_t denominator(const TgaModel& m) {
  return static_cast<std::int64_t>(m.clocks.clock_count()) + 1;
}

std::vector<std::int64_t> representative(const TgaModel& m, const Region& r) {
  const std::int64_t den = denominator(m);
  std::vector<std::int64_t> v(r.integer.size(), 0);
  for (std::size_t c = 1; c < v.size(); ++c)
    v[c] = std::int64_t{r.integer[c]} * den + r.rank[c];
  return v;
}

bool unbounded(const Region& r, std::span<const std::int32_t> caps) {
  for (std::size_t c = 1; c < r.integer.size(); ++c)
    if (!capped(r, caps, c)) return false;
  return true;
}

Region time_successor(const Region& r, std::span<const std::int32_t> caps) {
  Region next = r;
  bool any_zero = false;
  std::uint8_t top = 0;
  for (std::size_t c = 1; c < r.integer.size(); ++c) {
    if (capped(r, caps, c)) continue;
    if (r.rank[c] == 0)
      any_zero = true;
    else
      top = std::max(top, r.rank[c]);
  }
  if (any_zero) {
    for (std::size_t c = 1; c < r.integer.size(); ++c) {
      if (capped(r, caps, c)) continue;
      if (r.rank[c] > 0) {
        next.rank[c] = static_cast<std::uint8_t>(r.rank[c] + 1);
      } else if (r.integer[c] == caps[c]) {
        next.integer[c] = caps[c] + 1;
      } else {
        next.rank[c] = 1;
      }
    }
  } else if (top > 0) {
    for (std::size_t c = 1; c < r.integer.size(); ++c) {
      if (capped(r, caps, c) || r.rank[c] != top) continue;
      next.integer[c] = r.integer[c] + 1;
      next.rank[c] = 0;
    }
  }
  normalise_ranks(next, caps);
  return next;
}

RegionGame region_game(const TgaModel& m) {
  m.validate();
  if (m.has_diagonal_guards())
    throw ModelError("the region oracle does not support clock differences");
  const std::size_t dim = m.clocks.dimension();
  const std::int64_t den = denominator(m);
  const std::vector<std::int32_t> caps = m.max_constants();
  const std::size_t nc = m.controllable_actions.size();
  const std::size_t nact = nc + 1;

  RegionGame rg;
  std::map<std::pair<tga::LocationId, std::vector<std::int32_t>>, game::StateId>
      index;
  std::vector<std::tuple<game::StateId, game::ActionId, game::StateId>> arcs;

  auto key = [](const Region& r) {
    std::vector<std::int32_t> k(r.integer);
    k.insert(k.end(), r.rank.begin(), r.rank.end());
    return std::make_pair(r.location, std::move(k));
  };
  auto inv_holds = [&](const Region& r) {
    return holds_all(m.invariants[r.location], representative(m, r), den);
  };
  auto intern = [&](Region r) -> game::StateId {
    auto k = key(r);
    auto it = index.find(k);
    if (it != index.end()) return it->second;
    const auto id = static_cast<game::StateId>(rg.regions.size());
    index.emplace(std::move(k), id);
    rg.regions.push_back(std::move(r));
    return id;
  };
  auto discrete = [&](const Region& r, const tga::Edge& e) -> std::optional<Region> {
    Region t = r;
    t.location = e.target;
    for (auto c : e.resets) {
      t.integer[c] = 0;
      t.rank[c] = 0;
    }
    normalise_ranks(t, caps);
    if (!inv_holds(t)) return std::nullopt;
    return t;
  };

  Region r0{m.initial, std::vector<std::int32_t>(dim, 0),
            std::vector<std::uint8_t>(dim, 0)};
  if (!inv_holds(r0))
    throw ModelError("the initial valuation violates the initial invariant");
  intern(r0);

  for (game::StateId s = 0; s < rg.regions.size(); ++s) {
    const Region r = rg.regions[s];
    const auto v = representative(m, r);
    for (game::ActionId a = 0; a < nact; ++a) {
      bool enabled = false;
      if (a < nc)
        for (const auto& e : m.edges)
          if (e.controllable && e.source == r.location && e.action == a &&
              guard_holds(e, v, den))
            enabled = true;
      if (enabled) {
        for (const auto& e : m.edges)
          if (e.controllable && e.source == r.location && e.action == a &&
              guard_holds(e, v, den))
            if (auto t = discrete(r, e)) arcs.emplace_back(s, a, intern(*t));
        continue;
      }
      for (const auto& e : m.edges)
        if (!e.controllable && e.source == r.location && guard_holds(e, v, den))
          if (auto t = discrete(r, e)) arcs.emplace_back(s, a, intern(*t));
      if (unbounded(r, caps)) {
        arcs.emplace_back(s, a, s);
      } else {
        Region t = time_successor(r, caps);
        assert(!(t == r));
        if (inv_holds(t)) arcs.emplace_back(s, a, intern(std::move(t)));
      }
    }
  }

  rg.lts = game::FiniteLts(rg.regions.size(), nact, 0);
  for (auto [s, a, t] : arcs) rg.lts.add(s, a, t);
  rg.labels.predicates.resize(m.predicates.size());
  for (std::size_t p = 0; p < m.predicates.size(); ++p) {
    auto& holds_p = rg.labels.predicates[p].holds;
    holds_p.resize(rg.regions.size());
    for (std::size_t s = 0; s < rg.regions.size(); ++s) {
      const Region& r = rg.regions[s];
      holds_p[s] = m.predicates[p].locations[r.location] &&
                   holds_all(m.predicates[p].clock, representative(m, r), den);
    }
  }
  return rg;
}

std::shared_ptr<knowledge::LtsArena> region_observable_game(
    const RegionGame& rg, game::PredicateMask obs) {
  return std::make_shared<knowledge::LtsArena>(rg.lts, rg.labels, obs);
}

bool oracle_solve(const RegionGame& rg, std::size_t safety,
                  game::PredicateMask obs) {
  if (!((obs >> safety) & 1u))
    throw std::invalid_argument("the observed set must contain the safety predicate");
  knowledge::BuildOptions opts;
  opts.safety = safety;
  auto kg = knowledge::build_knowledge_game(region_observable_game(rg, obs), opts);
  return knowledge::solve(*kg).winning;
}

bool oracle_solve(const TgaModel& m, game::PredicateMask obs) {
  return oracle_solve(region_game(m), m.safety, obs);
}

}  // namespace obsopt::region
