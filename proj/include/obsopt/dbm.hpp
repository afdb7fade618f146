// Difference bound matrices over a fixed clock set, plus the observation-cell
// partition induced by band constraints k1 <= x < k2.
//
// Entry (i, j) of a DBM bounds the difference x_i - x_j. Index 0 is the
// reference clock whose value is always zero. Bounds are packed into a single
// ordered integer (see `bound`), so the usual min/compare operations are
// plain integer operations.

#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace obsopt::dbm {

using ClockId = std::uint32_t;
inline constexpr ClockId kReferenceClock = 0;

// ---------------------------------------------------------------------------
// Bounds

using raw_t = std::int32_t;

inline constexpr raw_t kInfinity = std::numeric_limits<raw_t>::max();

constexpr raw_t bound(std::int32_t constant, bool strict) noexcept {
  return static_cast<raw_t>(constant * 2) | (strict ? 0 : 1);
}
constexpr std::int32_t bound_constant(raw_t r) noexcept { return r >> 1; }
constexpr bool bound_strict(raw_t r) noexcept { return (r & 1) == 0; }

inline constexpr raw_t kLeZero = bound(0, false);
inline constexpr raw_t kLtZero = bound(0, true);

constexpr raw_t bound_add(raw_t a, raw_t b) noexcept {
  if (a == kInfinity || b == kInfinity) return kInfinity;
  return bound((a >> 1) + (b >> 1), !((a & b) & 1));
}

// Weakens a strict bound to its non-strict counterpart.
constexpr raw_t bound_weak(raw_t r) noexcept {
  return r == kInfinity ? r : (r | 1);
}

std::string bound_to_string(raw_t r);

// ---------------------------------------------------------------------------
// Clocks and constraints

class ClockSet {
 public:
  ClockSet() : names_{"0"} {}
  explicit ClockSet(std::vector<std::string> clock_names);

  // Number of DBM rows, i.e. clocks plus the reference clock.
  std::size_t dimension() const noexcept { return names_.size(); }
  std::size_t clock_count() const noexcept { return names_.size() - 1; }
  const std::string& name(ClockId c) const { return names_.at(c); }
  std::optional<ClockId> find(std::string_view name) const;

 private:
  std::vector<std::string> names_;
};

// x_i - x_j < c  or  x_i - x_j <= c, already encoded as a raw bound.
struct Constraint {
  ClockId i = 0;
  ClockId j = 0;
  raw_t bound = kInfinity;

  friend bool operator==(const Constraint&, const Constraint&) = default;
};

// k1 <= x < k2. An absent upper end means the band is unbounded above.
struct Band {
  ClockId clock = 1;
  std::int32_t lower = 0;
  std::optional<std::int32_t> upper;

  bool contains(double value) const noexcept {
    return value >= lower && (!upper || value < *upper);
  }
  std::vector<Constraint> constraints() const;

  friend bool operator==(const Band&, const Band&) = default;
};

enum class Relation : std::uint8_t { lt, le, eq, ge, gt };

// Atomic clock constraint as written in a model: x ~ k, x - y ~ k, or a band.
struct AtomicConstraint {
  enum class Kind : std::uint8_t { upper, diff, band };

  Kind kind = Kind::upper;
  ClockId x = 1;
  ClockId y = 0;
  Relation rel = Relation::lt;
  std::int32_t k = 0;
  std::optional<std::int32_t> k2;

  static AtomicConstraint simple(ClockId x, Relation rel, std::int32_t k);
  static AtomicConstraint difference(ClockId x, ClockId y, Relation rel,
                                     std::int32_t k);
  static AtomicConstraint band(ClockId x, std::int32_t k1,
                               std::optional<std::int32_t> k2);

  std::vector<Constraint> constraints() const;
  // Band form of the atom, if it has one: x < k, x >= k, k1 <= x < k2.
  std::optional<Band> as_band() const;
};

// ---------------------------------------------------------------------------
// Zones

class Dbm {
 public:
  // The single valuation where every clock is zero.
  static Dbm zero(std::size_t dim);
  // All non-negative valuations.
  static Dbm universe(std::size_t dim);
  // Unclosed matrix from raw entries (row-major); used by tests and parsers.
  static Dbm from_raw(std::size_t dim, std::vector<raw_t> entries);

  std::size_t dimension() const noexcept { return dim_; }
  bool is_empty() const noexcept { return empty_; }

  raw_t at(std::size_t i, std::size_t j) const noexcept {
    return m_[i * dim_ + j];
  }
  std::span<const raw_t> raw() const noexcept { return m_; }

  // Shortest-path closure. Returns false (and marks the zone empty) when a
  // negative cycle exists.
  bool close();
  // Tightens one entry and restores closure incrementally. Requires a closed
  // matrix. Returns false when the result is empty.
  bool constrain(const Constraint& c);
  bool constrain(std::span<const Constraint> cs);
  bool intersect(const Dbm& other);

  void up();
  void reset(ClockId c);
  // Max-constant abstraction; `max_constants[0]` is ignored and negative
  // constants count as zero.
  void extrapolate(std::span<const std::int32_t> max_constants);

  // Every valuation of `other` lies in *this. Both must be closed.
  bool includes(const Dbm& other) const;
  // Valuation given as integers scaled by `denominator`; entry 0 ignored.
  bool contains_scaled(std::span<const std::int64_t> scaled,
                       std::int64_t denominator) const;
  // True when no clock has a finite upper bound.
  bool unbounded_in_time() const;

  std::string to_string(const ClockSet* clocks = nullptr) const;

  friend bool operator==(const Dbm& a, const Dbm& b) {
    if (a.empty_ || b.empty_) return a.empty_ == b.empty_ && a.dim_ == b.dim_;
    return a.dim_ == b.dim_ && a.m_ == b.m_;
  }

  std::size_t hash() const noexcept;

 private:
  Dbm(std::size_t dim, raw_t fill);
  raw_t& ref(std::size_t i, std::size_t j) noexcept { return m_[i * dim_ + j]; }
  void mark_empty();

  std::size_t dim_ = 1;
  bool empty_ = false;
  std::vector<raw_t> m_;
};

// Value-returning forms of the zone operations.
Dbm canonicalize(Dbm d);
Dbm up(Dbm d);
Dbm reset(Dbm d, std::span<const ClockId> clocks);
Dbm intersect(Dbm d, const Dbm& other);
Dbm intersect(Dbm d, std::span<const Constraint> cs);
bool includes(const Dbm& outer, const Dbm& inner);
Dbm extrapolate(Dbm d, std::span<const std::int32_t> max_constants);

// ---------------------------------------------------------------------------
// Observation cells
//
// Band atoms split each clock axis at their constants into left-closed,
// right-open intervals. A cell picks one interval per clock; the cells of an
// atom set partition the valuation space, and every atom has a constant truth
// value on each cell.

using Cell = std::vector<std::uint16_t>;  // interval index per clock, [0] unused

class CellGrid {
 public:
  CellGrid() = default;
  CellGrid(std::size_t dimension, std::span<const Band> atoms);

  std::size_t dimension() const noexcept { return thresholds_.size(); }
  std::span<const std::int32_t> thresholds(ClockId c) const {
    return thresholds_.at(c);
  }

  Dbm zone(const Cell& cell) const;
  // Topological closure: every strict upper bound weakened.
  Dbm closure_relax(const Cell& cell) const;
  bool holds(const Cell& cell, const Band& band) const;
  // Cell containing a valuation scaled by `denominator`.
  Cell cell_of(std::span<const std::int64_t> scaled,
               std::int64_t denominator) const;

  // Pieces of a zone, one per cell it meets, in lexicographic cell order.
  std::vector<std::pair<Cell, Dbm>> split(const Dbm& zone) const;
  // Cells reached at the first instant a delay leaves `cell`: some non-empty
  // set of bounded clocks moves to its next interval.
  std::vector<Cell> exit_cells(const Cell& cell) const;

  // Every cell, in lexicographic order. Exponential; for tests and tiny grids.
  std::vector<Cell> enumerate() const;

 private:
  std::vector<std::vector<std::int32_t>> thresholds_;
};

// The partition induced by a set of atoms, which must all be in band form.
std::vector<Cell> enumerate_cells(std::span<const AtomicConstraint> atoms,
                                  const ClockSet& clocks);
Dbm closure_relax(const CellGrid& grid, const Cell& cell);

}  // namespace obsopt::dbm
