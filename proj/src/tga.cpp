#include "obsopt/tga.hpp"

#include <algorithm>

namespace obsopt::tga {

using dbm::AtomicConstraint;
using dbm::Band;
using dbm::Cell;
using dbm::ClockId;
using dbm::Dbm;

namespace {

std::vector<dbm::Constraint> band_constraints(std::span<const Band> bands) {
  std::vector<dbm::Constraint> out;
  for (const auto& b : bands) {
    auto cs = b.constraints();
    out.insert(out.end(), cs.begin(), cs.end());
  }
  return out;
}

void check_band(const Band& b, std::size_t dim, const std::string& where) {
  if (b.clock == dbm::kReferenceClock || b.clock >= dim)
    throw ModelError(where + ": unknown clock");
  if (b.lower < 0 || (b.upper && *b.upper <= b.lower))
    throw ModelError(where + ": band needs 0 <= k1 < k2");
}

}  // namespace

std::vector<Band> guard_bands(std::span<const AtomicConstraint> guard) {
  std::vector<Band> out;
  for (const auto& a : guard) {
    auto b = a.as_band();
    if (!b)
      throw ModelError(
          "controllable guards must be conjunctions of k1 <= x < k2 bands");
    out.push_back(*b);
  }
  return out;
}

void TgaModel::validate() const {
  const std::size_t nloc = locations.size();
  const std::size_t dim = clocks.dimension();
  if (nloc == 0) throw ModelError("model has no locations");
  if (initial >= nloc) throw ModelError("initial location out of range");
  if (invariants.size() != nloc)
    throw ModelError("one invariant per location expected");
  for (std::size_t l = 0; l < nloc; ++l)
    for (const auto& b : invariants[l])
      check_band(b, dim, "invariant of " + locations[l]);
  for (const auto& e : edges) {
    if (e.source >= nloc || e.target >= nloc)
      throw ModelError("edge endpoint out of range");
    const auto& names =
        e.controllable ? controllable_actions : uncontrollable_actions;
    if (e.action >= names.size()) throw ModelError("edge action out of range");
    for (const auto& a : e.guard) {
      if (a.x == dbm::kReferenceClock || a.x >= dim ||
          (a.kind == AtomicConstraint::Kind::diff &&
           (a.y == dbm::kReferenceClock || a.y >= dim)))
        throw ModelError("guard on an unknown clock");
      if (a.k < 0 || (a.k2 && *a.k2 < 0))
        throw ModelError("guard constants must be non-negative");
    }
    const std::string where = locations[e.source] + " -> " + locations[e.target];
    if (e.controllable) {
      for (const auto& b : guard_bands(e.guard)) check_band(b, dim, where);
    }
    for (ClockId c : e.resets)
      if (c == dbm::kReferenceClock || c >= dim)
        throw ModelError(where + ": reset of an unknown clock");
  }
  if (predicates.empty()) throw ModelError("no observable predicates");
  if (predicates.size() > 64) throw ModelError("at most 64 predicates");
  if (safety >= predicates.size())
    throw ModelError("safety predicate out of range");
  for (const auto& p : predicates) {
    if (p.locations.size() != nloc)
      throw ModelError("predicate " + p.name + ": location set size mismatch");
    if (p.cost < 0) throw ModelError("predicate " + p.name + ": negative cost");
    for (const auto& b : p.clock) check_band(b, dim, "predicate " + p.name);
  }
  if (!predicates[safety].clock.empty())
    throw ModelError("the safety predicate may only constrain locations");
}

std::vector<std::int32_t> TgaModel::max_constants() const {
  std::vector<std::int32_t> m(clocks.dimension(), 0);
  auto see_band = [&](const Band& b) {
    m[b.clock] = std::max(m[b.clock], b.lower);
    if (b.upper) m[b.clock] = std::max(m[b.clock], *b.upper);
  };
  for (const auto& inv : invariants)
    for (const auto& b : inv) see_band(b);
  for (const auto& p : predicates)
    for (const auto& b : p.clock) see_band(b);
  for (const auto& e : edges)
    for (const auto& a : e.guard) {
      std::int32_t k = std::max(a.k, a.k2.value_or(0));
      m[a.x] = std::max(m[a.x], k);
      if (a.kind == AtomicConstraint::Kind::diff) m[a.y] = std::max(m[a.y], k);
    }
  return m;
}

bool TgaModel::has_diagonal_guards() const {
  for (const auto& e : edges)
    for (const auto& a : e.guard)
      if (a.kind == AtomicConstraint::Kind::diff) return true;
  return false;
}

std::optional<std::size_t> TgaModel::find_predicate(std::string_view name) const {
  for (std::size_t i = 0; i < predicates.size(); ++i)
    if (predicates[i].name == name) return i;
  return std::nullopt;
}

std::optional<LocationId> TgaModel::find_location(std::string_view name) const {
  for (std::size_t i = 0; i < locations.size(); ++i)
    if (locations[i] == name) return static_cast<LocationId>(i);
  return std::nullopt;
}

PredicateMask TgaModel::all_predicates() const {
  return predicates.size() >= 64 ? ~PredicateMask{0}
                                 : (PredicateMask{1} << predicates.size()) - 1;
}

std::vector<Dbm> enabled_region(const TgaModel& m, LocationId l,
                                std::uint32_t action) {
  std::vector<Dbm> out;
  const auto inv = band_constraints(m.invariants.at(l));
  for (const auto& e : m.edges) {
    if (!e.controllable || e.source != l || e.action != action) continue;
    Dbm z = Dbm::universe(m.clocks.dimension());
    for (const auto& a : e.guard) z.constrain(a.constraints());
    z.constrain(inv);
    if (!z.is_empty()) out.push_back(std::move(z));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::size_t ZoneGame::KeyHash::operator()(const Key& k) const noexcept {
  std::size_t h = k.s->location * 0x9e3779b97f4a7c15ull;
  for (auto c : k.s->cell) h = (h ^ c) * 1099511628211ull;
  return h ^ (k.s->zone.hash() + 0x9e3779b9 + (h << 6) + (h >> 2));
}

ZoneGame::ZoneGame(std::shared_ptr<const TgaModel> model, PredicateMask obs)
    : model_(std::move(model)), obs_(obs) {
  const TgaModel& m = *model_;
  m.validate();
  if ((obs & ~m.all_predicates()) != 0)
    throw std::invalid_argument("predicate set refers to unknown predicates");
  if (!((obs >> m.safety) & 1u))
    throw std::invalid_argument("the observed set must contain the safety predicate");

  std::vector<Band> atoms;
  for (std::size_t p = 0; p < m.predicates.size(); ++p)
    if ((obs >> p) & 1u)
      atoms.insert(atoms.end(), m.predicates[p].clock.begin(),
                   m.predicates[p].clock.end());
  for (const auto& inv : m.invariants) atoms.insert(atoms.end(), inv.begin(), inv.end());
  controllable_guards_.resize(m.edges.size());
  for (std::size_t i = 0; i < m.edges.size(); ++i)
    if (m.edges[i].controllable) {
      controllable_guards_[i] = guard_bands(m.edges[i].guard);
      atoms.insert(atoms.end(), controllable_guards_[i].begin(),
                   controllable_guards_[i].end());
    }
  grid_ = dbm::CellGrid(m.clocks.dimension(), atoms);
  max_constants_ = m.max_constants();
  for (const auto& inv : m.invariants)
    invariant_constraints_.push_back(band_constraints(inv));

  Dbm z0 = Dbm::zero(m.clocks.dimension());
  z0.constrain(invariant_constraints_[m.initial]);
  if (z0.is_empty())
    throw ModelError("the initial valuation violates the initial invariant");
  auto pieces = grid_.split(z0);
  SymbolicState s0{m.initial, pieces.front().first, Dbm::zero(1)};
  s0.zone = normalise(pieces.front().second, m.initial, s0.cell);
  intern(std::move(s0));
}

std::string ZoneGame::action_name(ActionId a) const {
  if (a == skip()) return "skip";
  return model_->controllable_actions.at(a);
}

Observation ZoneGame::observe(const SymbolicState& s) const {
  Observation o;
  const auto& preds = model_->predicates;
  for (std::size_t p = 0; p < preds.size(); ++p) {
    if (!((obs_ >> p) & 1u) || !preds[p].locations[s.location]) continue;
    bool ok = true;
    for (const auto& b : preds[p].clock)
      if (!grid_.holds(s.cell, b)) {
        ok = false;
        break;
      }
    if (ok) o.bits |= std::uint64_t{1} << p;
  }
  return o;
}

Observation ZoneGame::observe(StateId s) const { return observe(states_.at(s)); }

bool ZoneGame::enabled(LocationId l, const Cell& cell,
                       std::uint32_t action) const {
  const auto& edges = model_->edges;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& e = edges[i];
    if (!e.controllable || e.source != l || e.action != action) continue;
    bool ok = true;
    for (const auto& b : controllable_guards_[i])
      if (!grid_.holds(cell, b)) {
        ok = false;
        break;
      }
    if (ok) return true;
  }
  return false;
}

Dbm ZoneGame::normalise(Dbm z, LocationId l, const Cell& cell) const {
  const Dbm cz = grid_.zone(cell);
  z.intersect(cz);
  z.constrain(invariant_constraints_[l]);
  while (!z.is_empty()) {
    Dbm next = z;
    next.extrapolate(max_constants_);
    next.intersect(cz);
    next.constrain(invariant_constraints_[l]);
    if (next == z) break;
    z = std::move(next);
  }
  return z;
}

void ZoneGame::emit(LocationId target, Dbm zone, const SymbolicState& from,
                    StepResult& out) const {
  zone.constrain(invariant_constraints_[target]);
  if (zone.is_empty()) return;
  const Observation here = observe(from);
  for (auto& [cell, piece] : grid_.split(zone)) {
    SymbolicState t{target, cell, normalise(std::move(piece), target, cell)};
    if (t.zone.is_empty()) continue;
    const bool visible = observe(t) != here;
    out.successors.emplace_back(std::move(t), visible);
  }
}

StepResult ZoneGame::game_step(const SymbolicState& s, ActionId a) const {
  const TgaModel& m = *model_;
  StepResult out;
  const bool is_skip = a == skip();
  if (!is_skip && enabled(s.location, s.cell, a)) {
    for (std::size_t i = 0; i < m.edges.size(); ++i) {
      const auto& e = m.edges[i];
      if (!e.controllable || e.source != s.location || e.action != a) continue;
      bool ok = true;
      for (const auto& b : controllable_guards_[i])
        if (!grid_.holds(s.cell, b)) {
          ok = false;
          break;
        }
      if (!ok) continue;
      emit(e.target, dbm::reset(s.zone, e.resets), s, out);
    }
    return out;
  }

  for (const auto& e : m.edges) {
    if (e.controllable || e.source != s.location) continue;
    Dbm z = s.zone;
    for (const auto& g : e.guard) z.constrain(g.constraints());
    if (z.is_empty()) continue;
    emit(e.target, dbm::reset(std::move(z), e.resets), s, out);
  }

  Dbm future = dbm::up(s.zone);
  future.constrain(invariant_constraints_[s.location]);
  Dbm inside = normalise(future, s.location, s.cell);
  if (!inside.is_empty()) {
    if (inside.unbounded_in_time()) out.stalls = true;
    if (!(inside == s.zone))
      out.successors.emplace_back(
          SymbolicState{s.location, s.cell, std::move(inside)}, false);
  }
  Dbm rim = future;
  rim.intersect(grid_.closure_relax(s.cell));
  if (!rim.is_empty()) {
    const Observation here = observe(s);
    for (auto& next : grid_.exit_cells(s.cell)) {
      Dbm f = rim;
      f.intersect(grid_.zone(next));
      if (f.is_empty()) continue;
      SymbolicState t{s.location, next, normalise(std::move(f), s.location, next)};
      if (t.zone.is_empty()) continue;
      const bool visible = observe(t) != here;
      out.successors.emplace_back(std::move(t), visible);
    }
  }
  return out;
}

StateId ZoneGame::intern(SymbolicState s) {
  auto it = index_.find(Key{&s});
  if (it != index_.end()) return it->second;
  const auto id = static_cast<StateId>(states_.size());
  states_.push_back(std::move(s));
  slots_.emplace_back(action_count());
  index_.emplace(Key{&states_.back()}, id);
  return id;
}

void ZoneGame::compute(StateId s, ActionId a) {
  if (slots_.at(s).at(a).successors) return;
  StepResult r = game_step(states_[s], a);
  std::vector<knowledge::Successor> succ;
  succ.reserve(r.successors.size());
  for (auto& [t, visible] : r.successors)
    succ.push_back({intern(std::move(t)), visible});
  std::sort(succ.begin(), succ.end(), [](const auto& x, const auto& y) {
    return x.state < y.state;
  });
  succ.erase(std::unique(succ.begin(), succ.end()), succ.end());
  Slot& slot = slots_[s][a];
  slot.stalls = r.stalls;
  slot.successors = std::move(succ);
}

const std::vector<knowledge::Successor>& ZoneGame::step(StateId s, ActionId a) {
  compute(s, a);
  return *slots_[s][a].successors;
}

bool ZoneGame::stalls(StateId s, ActionId a) {
  compute(s, a);
  return slots_[s][a].stalls;
}

bool ZoneGame::subsumes(StateId outer, StateId inner) const {
  const auto& o = states_.at(outer);
  const auto& i = states_.at(inner);
  return o.location == i.location && o.cell == i.cell && o.zone.includes(i.zone);
}

std::shared_ptr<ZoneGame> zone_observable_game(
    std::shared_ptr<const TgaModel> model, PredicateMask obs) {
  return std::make_shared<ZoneGame>(std::move(model), obs);
}

bool diverges(ZoneGame& g, std::span<const StateId> belief, ActionId a) {
  return knowledge::sink_obs(g, belief, a);
}

SolveStats zone_solve(std::shared_ptr<const TgaModel> model, PredicateMask obs,
                      bool early_stop) {
  const std::size_t safety = model->safety;
  auto game = zone_observable_game(std::move(model), obs);
  knowledge::BuildOptions opts;
  opts.safety = safety;
  opts.early_stop = early_stop;
  auto kg = knowledge::build_knowledge_game(game, opts);
  SolveStats st;
  st.winning = knowledge::solve(*kg).winning;
  st.complete = kg->complete;
  st.beliefs = kg->beliefs.size();
  st.symbolic_states = kg->member_state_count();
  return st;
}

}  // namespace obsopt::tga
