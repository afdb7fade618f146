#include "obsopt/dbm.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace obsopt::dbm {

std::string bound_to_string(raw_t r) {
  if (r == kInfinity) return "<inf";
  return std::string(bound_strict(r) ? "<" : "<=") +
         std::to_string(bound_constant(r));
}

ClockSet::ClockSet(std::vector<std::string> clock_names) : names_{"0"} {
  for (auto& n : clock_names) {
    if (find(n)) throw std::invalid_argument("duplicate clock name: " + n);
    names_.push_back(std::move(n));
  }
}

std::optional<ClockId> ClockSet::find(std::string_view name) const {
  for (std::size_t i = 1; i < names_.size(); ++i)
    if (names_[i] == name) return static_cast<ClockId>(i);
  return std::nullopt;
}

std::vector<Constraint> Band::constraints() const {
  std::vector<Constraint> out;
  if (lower > 0) out.push_back({kReferenceClock, clock, bound(-lower, false)});
  if (upper) out.push_back({clock, kReferenceClock, bound(*upper, true)});
  return out;
}

AtomicConstraint AtomicConstraint::simple(ClockId x, Relation rel,
                                          std::int32_t k) {
  AtomicConstraint a;
  a.kind = Kind::upper;
  a.x = x;
  a.rel = rel;
  a.k = k;
  return a;
}

AtomicConstraint AtomicConstraint::difference(ClockId x, ClockId y,
                                              Relation rel, std::int32_t k) {
  AtomicConstraint a;
  a.kind = Kind::diff;
  a.x = x;
  a.y = y;
  a.rel = rel;
  a.k = k;
  return a;
}

AtomicConstraint AtomicConstraint::band(ClockId x, std::int32_t k1,
                                        std::optional<std::int32_t> k2) {
  if (k1 < 0 || (k2 && *k2 <= k1))
    throw std::invalid_argument("band requires 0 <= k1 < k2");
  AtomicConstraint a;
  a.kind = Kind::band;
  a.x = x;
  a.k = k1;
  a.k2 = k2;
  return a;
}

std::vector<Constraint> AtomicConstraint::constraints() const {
  if (k < 0) throw std::invalid_argument("clock constants must be natural");
  if (kind == Kind::band) return Band{x, k, k2}.constraints();
  const ClockId y0 = kind == Kind::diff ? y : kReferenceClock;
  switch (rel) {
    case Relation::lt: return {{x, y0, bound(k, true)}};
    case Relation::le: return {{x, y0, bound(k, false)}};
    case Relation::eq:
      return {{x, y0, bound(k, false)}, {y0, x, bound(-k, false)}};
    case Relation::ge: return {{y0, x, bound(-k, false)}};
    case Relation::gt: return {{y0, x, bound(-k, true)}};
  }
  return {};
}

std::optional<Band> AtomicConstraint::as_band() const {
  switch (kind) {
    case Kind::band: return Band{x, k, k2};
    case Kind::diff: return std::nullopt;
    case Kind::upper:
      if (rel == Relation::lt && k > 0) return Band{x, 0, k};
      if (rel == Relation::ge) return Band{x, k, std::nullopt};
      return std::nullopt;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

Dbm::Dbm(std::size_t dim, raw_t fill) : dim_(dim), m_(dim * dim, fill) {
  if (dim == 0) throw std::invalid_argument("DBM dimension must be >= 1");
}

Dbm Dbm::zero(std::size_t dim) { return Dbm(dim, kLeZero); }

Dbm Dbm::universe(std::size_t dim) {
  Dbm d(dim, kInfinity);
  for (std::size_t i = 0; i < dim; ++i) {
    d.ref(i, i) = kLeZero;
    d.ref(0, i) = kLeZero;
  }
  return d;
}

Dbm Dbm::from_raw(std::size_t dim, std::vector<raw_t> entries) {
  if (entries.size() != dim * dim)
    throw std::invalid_argument("DBM entry count does not match dimension");
  Dbm d(dim, kInfinity);
  d.m_ = std::move(entries);
  return d;
}

void Dbm::mark_empty() {
  empty_ = true;
  std::fill(m_.begin(), m_.end(), kLtZero);
}

bool Dbm::close() {
  if (empty_) return false;
  for (std::size_t k = 0; k < dim_; ++k) {
    for (std::size_t i = 0; i < dim_; ++i) {
      const raw_t ik = at(i, k);
      if (ik == kInfinity) continue;
      for (std::size_t j = 0; j < dim_; ++j) {
        const raw_t s = bound_add(ik, at(k, j));
        if (s < at(i, j)) ref(i, j) = s;
      }
    }
    for (std::size_t i = 0; i < dim_; ++i) {
      if (at(i, i) < kLeZero) {
        mark_empty();
        return false;
      }
    }
  }
  for (std::size_t i = 0; i < dim_; ++i) ref(i, i) = kLeZero;
  return true;
}

bool Dbm::constrain(const Constraint& c) {
  if (empty_) return false;
  if (c.bound >= at(c.i, c.j)) return true;
  if (bound_add(c.bound, at(c.j, c.i)) < kLeZero) {
    mark_empty();
    return false;
  }
  ref(c.i, c.j) = c.bound;
  for (std::size_t k = 0; k < dim_; ++k) {
    const raw_t ki = at(k, c.i);
    if (ki == kInfinity) continue;
    const raw_t kij = bound_add(ki, c.bound);
    for (std::size_t l = 0; l < dim_; ++l) {
      const raw_t s = bound_add(kij, at(c.j, l));
      if (s < at(k, l)) ref(k, l) = s;
    }
  }
  return true;
}

bool Dbm::constrain(std::span<const Constraint> cs) {
  for (const auto& c : cs)
    if (!constrain(c)) return false;
  return !empty_;
}

bool Dbm::intersect(const Dbm& other) {
  if (other.dim_ != dim_) throw std::invalid_argument("DBM dimension mismatch");
  if (other.empty_) {
    mark_empty();
    return false;
  }
  if (empty_) return false;
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = 0; j < dim_; ++j)
      if (i != j && other.at(i, j) < at(i, j))
        if (!constrain({static_cast<ClockId>(i), static_cast<ClockId>(j),
                        other.at(i, j)}))
          return false;
  return true;
}

void Dbm::up() {
  if (empty_) return;
  for (std::size_t i = 1; i < dim_; ++i) ref(i, 0) = kInfinity;
}

void Dbm::reset(ClockId c) {
  if (empty_) return;
  for (std::size_t j = 0; j < dim_; ++j) {
    ref(c, j) = at(0, j);
    ref(j, c) = at(j, 0);
  }
  ref(c, c) = kLeZero;
}

void Dbm::extrapolate(std::span<const std::int32_t> max_constants) {
  if (empty_) return;
  if (max_constants.size() < dim_)
    throw std::invalid_argument("max constant vector too short");
  // Repeated until stable so that the operation is idempotent even when the
  // closure re-tightens an abstracted lower bound.
  for (;;) {
    const auto before = m_;
    bool changed = false;
    for (std::size_t i = 0; i < dim_; ++i) {
      for (std::size_t j = 0; j < dim_; ++j) {
        if (i == j) continue;
        const raw_t e = at(i, j);
        if (e == kInfinity) continue;
        if (i > 0 && e > bound(std::max(0, max_constants[i]), false)) {
          ref(i, j) = kInfinity;
          changed = true;
        } else if (j > 0 && e < bound(-std::max(0, max_constants[j]), true)) {
          ref(i, j) = bound(-std::max(0, max_constants[j]), true);
          changed = true;
        }
      }
    }
    if (!changed) return;
    close();
    if (empty_ || m_ == before) return;
  }
}

bool Dbm::includes(const Dbm& other) const {
  if (other.dim_ != dim_) throw std::invalid_argument("DBM dimension mismatch");
  if (other.empty_) return true;
  if (empty_) return false;
  for (std::size_t k = 0; k < m_.size(); ++k)
    if (other.m_[k] > m_[k]) return false;
  return true;
}

bool Dbm::contains_scaled(std::span<const std::int64_t> scaled,
                          std::int64_t denominator) const {
  if (empty_) return false;
  for (std::size_t i = 0; i < dim_; ++i) {
    const std::int64_t vi = i == 0 ? 0 : scaled[i];
    for (std::size_t j = 0; j < dim_; ++j) {
      const raw_t b = at(i, j);
      if (i == j || b == kInfinity) continue;
      const std::int64_t vj = j == 0 ? 0 : scaled[j];
      const std::int64_t lhs = vi - vj;
      const std::int64_t rhs =
          static_cast<std::int64_t>(bound_constant(b)) * denominator;
      if (bound_strict(b) ? !(lhs < rhs) : !(lhs <= rhs)) return false;
    }
  }
  return true;
}

bool Dbm::unbounded_in_time() const {
  if (empty_) return false;
  for (std::size_t i = 1; i < dim_; ++i)
    if (at(i, 0) != kInfinity) return false;
  return true;
}

std::string Dbm::to_string(const ClockSet* clocks) const {
  if (empty_) return "false";
  auto name = [&](std::size_t c) {
    return clocks ? clocks->name(static_cast<ClockId>(c))
                  : "x" + std::to_string(c);
  };
  std::ostringstream os;
  bool first = true;
  for (std::size_t i = 0; i < dim_; ++i) {
    for (std::size_t j = 0; j < dim_; ++j) {
      if (i == j || at(i, j) == kInfinity) continue;
      if (i == 0 && at(i, j) == kLeZero) continue;
      if (!first) os << " && ";
      first = false;
      if (i == 0)
        os << "-" << name(j);
      else if (j == 0)
        os << name(i);
      else
        os << name(i) << "-" << name(j);
      os << bound_to_string(at(i, j));
    }
  }
  return first ? "true" : os.str();
}

std::size_t Dbm::hash() const noexcept {
  std::size_t h = 1469598103934665603ull ^ dim_;
  if (empty_) return h;
  for (raw_t r : m_) {
    h ^= static_cast<std::uint32_t>(r);
    h *= 1099511628211ull;
  }
  return h;
}

Dbm canonicalize(Dbm d) {
  d.close();
  return d;
}
Dbm up(Dbm d) {
  d.up();
  return d;
}
Dbm reset(Dbm d, std::span<const ClockId> clocks) {
  for (ClockId c : clocks) d.reset(c);
  return d;
}
Dbm intersect(Dbm d, const Dbm& other) {
  d.intersect(other);
  return d;
}
Dbm intersect(Dbm d, std::span<const Constraint> cs) {
  d.constrain(cs);
  return d;
}
bool includes(const Dbm& outer, const Dbm& inner) {
  return outer.includes(inner);
}
Dbm extrapolate(Dbm d, std::span<const std::int32_t> max_constants) {
  d.extrapolate(max_constants);
  return d;
}

// ---------------------------------------------------------------------------

CellGrid::CellGrid(std::size_t dimension, std::span<const Band> atoms)
    : thresholds_(dimension) {
  for (const auto& a : atoms) {
    if (a.clock == kReferenceClock || a.clock >= dimension)
      throw std::invalid_argument("band atom on an unknown clock");
    auto& t = thresholds_[a.clock];
    if (a.lower > 0) t.push_back(a.lower);
    if (a.upper) t.push_back(*a.upper);
  }
  for (auto& t : thresholds_) {
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
  }
}

Dbm CellGrid::zone(const Cell& cell) const {
  Dbm d = Dbm::universe(dimension());
  for (std::size_t c = 1; c < dimension(); ++c) {
    const auto& t = thresholds_[c];
    const std::size_t idx = cell[c];
    if (idx > 0)
      d.constrain({kReferenceClock, static_cast<ClockId>(c),
                   bound(-t[idx - 1], false)});
    if (idx < t.size())
      d.constrain({static_cast<ClockId>(c), kReferenceClock, bound(t[idx], true)});
  }
  return d;
}

Dbm CellGrid::closure_relax(const Cell& cell) const {
  Dbm d = Dbm::universe(dimension());
  for (std::size_t c = 1; c < dimension(); ++c) {
    const auto& t = thresholds_[c];
    const std::size_t idx = cell[c];
    if (idx > 0)
      d.constrain({kReferenceClock, static_cast<ClockId>(c),
                   bound(-t[idx - 1], false)});
    if (idx < t.size())
      d.constrain(
          {static_cast<ClockId>(c), kReferenceClock, bound(t[idx], false)});
  }
  return d;
}

bool CellGrid::holds(const Cell& cell, const Band& band) const {
  const auto& t = thresholds_.at(band.clock);
  const std::size_t idx = cell[band.clock];
  // The interval is [lo, hi); lo and hi are consecutive thresholds, so the
  // band either contains all of it or none of it.
  const std::int32_t lo = idx == 0 ? 0 : t[idx - 1];
  return band.contains(lo);
}

Cell CellGrid::cell_of(std::span<const std::int64_t> scaled,
                       std::int64_t denominator) const {
  Cell cell(dimension(), 0);
  for (std::size_t c = 1; c < dimension(); ++c) {
    const auto& t = thresholds_[c];
    std::size_t idx = 0;
    while (idx < t.size() &&
           static_cast<std::int64_t>(t[idx]) * denominator <= scaled[c])
      ++idx;
    cell[c] = static_cast<std::uint16_t>(idx);
  }
  return cell;
}

namespace {

// Interval index holding values just above/below a bound on one axis.
std::size_t first_interval(const std::vector<std::int32_t>& t, raw_t lower) {
  // lower is the raw entry (0, x): x >= -c or x > -c.
  const std::int32_t v = -bound_constant(lower);
  return static_cast<std::size_t>(
      std::upper_bound(t.begin(), t.end(), v) - t.begin());
}

std::size_t last_interval(const std::vector<std::int32_t>& t, raw_t upper) {
  if (upper == kInfinity) return t.size();
  const std::int32_t v = bound_constant(upper);
  if (bound_strict(upper))
    return static_cast<std::size_t>(
        std::lower_bound(t.begin(), t.end(), v) - t.begin());
  return static_cast<std::size_t>(
      std::upper_bound(t.begin(), t.end(), v) - t.begin());
}

template <typename F>
void for_each_product(const std::vector<std::pair<std::size_t, std::size_t>>& ranges,
                      F&& f) {
  Cell cell(ranges.size(), 0);
  for (std::size_t c = 1; c < ranges.size(); ++c)
    cell[c] = static_cast<std::uint16_t>(ranges[c].first);
  for (;;) {
    f(cell);
    std::size_t c = ranges.size();
    while (c > 1) {
      --c;
      if (cell[c] < ranges[c].second) {
        ++cell[c];
        for (std::size_t k = c + 1; k < ranges.size(); ++k)
          cell[k] = static_cast<std::uint16_t>(ranges[k].first);
        break;
      }
      if (c == 1) return;
    }
    if (ranges.size() <= 1) return;
  }
}

}  // namespace

std::vector<std::pair<Cell, Dbm>> CellGrid::split(const Dbm& zone) const {
  std::vector<std::pair<Cell, Dbm>> out;
  if (zone.is_empty()) return out;
  std::vector<std::pair<std::size_t, std::size_t>> ranges(dimension());
  for (std::size_t c = 1; c < dimension(); ++c) {
    ranges[c] = {first_interval(thresholds_[c], zone.at(0, c)),
                 last_interval(thresholds_[c], zone.at(c, 0))};
    if (ranges[c].first > ranges[c].second) return out;
  }
  for_each_product(ranges, [&](const Cell& cell) {
    Dbm piece = zone;
    if (piece.intersect(this->zone(cell))) out.emplace_back(cell, std::move(piece));
  });
  return out;
}

std::vector<Cell> CellGrid::exit_cells(const Cell& cell) const {
  std::vector<ClockId> bounded;
  for (std::size_t c = 1; c < dimension(); ++c)
    if (cell[c] < thresholds_[c].size()) bounded.push_back(static_cast<ClockId>(c));
  std::vector<Cell> out;
  const std::size_t n = bounded.size();
  for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
    Cell next = cell;
    for (std::size_t b = 0; b < n; ++b)
      if (mask & (std::size_t{1} << b)) ++next[bounded[b]];
    out.push_back(std::move(next));
  }
  return out;
}

std::vector<Cell> CellGrid::enumerate() const {
  std::vector<std::pair<std::size_t, std::size_t>> ranges(dimension());
  for (std::size_t c = 1; c < dimension(); ++c) ranges[c] = {0, thresholds_[c].size()};
  std::vector<Cell> out;
  for_each_product(ranges, [&](const Cell& cell) { out.push_back(cell); });
  return out;
}

std::vector<Cell> enumerate_cells(std::span<const AtomicConstraint> atoms,
                                  const ClockSet& clocks) {
  std::vector<Band> bands;
  for (const auto& a : atoms) {
    auto b = a.as_band();
    if (!b) throw std::invalid_argument("observation atom is not of the form k1 <= x < k2");
    if (b->clock == kReferenceClock || b->clock >= clocks.dimension())
      throw std::invalid_argument("observation atom on an unknown clock");
    bands.push_back(*b);
  }
  return CellGrid(clocks.dimension(), bands).enumerate();
}

Dbm closure_relax(const CellGrid& grid, const Cell& cell) {
  return grid.closure_relax(cell);
}

}  // namespace obsopt::dbm
