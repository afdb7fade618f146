#include "obsopt/finite_game.hpp"

#include <algorithm>
#include <deque>

namespace obsopt::game {

FiniteLts::FiniteLts(std::size_t states, std::size_t actions, StateId init)
    : state_count(states),
      initial(init),
      action_count(actions),
      successors(states, std::vector<std::vector<StateId>>(actions)) {
  if (states > 0 && init >= states)
    throw std::invalid_argument("initial state out of range");
}

void FiniteLts::add(StateId from, ActionId a, StateId to) {
  if (from >= state_count || to >= state_count || a >= action_count)
    throw std::out_of_range("transition endpoint out of range");
  auto& v = successors[from][a];
  auto it = std::lower_bound(v.begin(), v.end(), to);
  if (it == v.end() || *it != to) v.insert(it, to);
}

bool FiniteLts::is_total() const {
  for (const auto& row : successors)
    for (const auto& succ : row)
      if (succ.empty()) return false;
  return true;
}

void FiniteLts::validate_total() const {
  for (std::size_t s = 0; s < state_count; ++s)
    for (std::size_t a = 0; a < action_count; ++a)
      if (successors[s][a].empty())
        throw std::invalid_argument("transition relation is not total: state " +
                                    std::to_string(s) + ", action " +
                                    std::to_string(a));
}

SafetySolution solve_safety(const FiniteLts& g, const StatePredicate& safe) {
  g.validate_total();
  if (safe.holds.size() != g.state_count)
    throw std::invalid_argument("safety predicate size does not match arena");

  const std::size_t n = g.state_count;
  // bad_actions[s] counts actions of s with some successor outside W.
  std::vector<bool> in_w(n);
  std::vector<std::vector<bool>> action_bad(n, std::vector<bool>(g.action_count));
  std::vector<std::size_t> bad_count(n, 0);
  std::vector<std::vector<std::pair<StateId, ActionId>>> preds(n);
  for (StateId s = 0; s < n; ++s)
    for (ActionId a = 0; a < g.action_count; ++a)
      for (StateId t : g.successors[s][a]) preds[t].emplace_back(s, a);

  std::deque<StateId> removed;
  for (StateId s = 0; s < n; ++s) {
    in_w[s] = safe(s);
    if (!in_w[s]) removed.push_back(s);
  }
  while (!removed.empty()) {
    const StateId t = removed.front();
    removed.pop_front();
    for (auto [s, a] : preds[t]) {
      if (!in_w[s] || action_bad[s][a]) continue;
      action_bad[s][a] = true;
      if (++bad_count[s] == g.action_count) {
        in_w[s] = false;
        removed.push_back(s);
      }
    }
  }

  SafetySolution sol;
  sol.winning = in_w;
  sol.strategy.assign(n, std::nullopt);
  for (StateId s = 0; s < n; ++s) {
    if (!in_w[s]) continue;
    for (ActionId a = 0; a < g.action_count; ++a)
      if (!action_bad[s][a]) {
        sol.strategy[s] = a;
        break;
      }
  }
  sol.initial_winning = n > 0 && in_w[g.initial];
  return sol;
}

Observation gamma_obs(const Labelling& labels, StateId s, PredicateMask obs) {
  Observation o;
  for (std::size_t p = 0; p < labels.predicates.size() && p < 64; ++p)
    if (((obs >> p) & 1u) && labels.predicates[p](s)) o.bits |= std::uint64_t{1} << p;
  return o;
}

std::vector<Observation> stutter_free_projection(const Run& r,
                                                 const Labelling& labels,
                                                 PredicateMask obs) {
  if (r.states.empty()) throw std::invalid_argument("projection of an empty run");
  std::vector<Observation> out{gamma_obs(labels, r.states.front(), obs)};
  for (std::size_t i = 1; i < r.states.size(); ++i) {
    const Observation o = gamma_obs(labels, r.states[i], obs);
    if (o != gamma_obs(labels, r.states[i - 1], obs)) out.push_back(o);
  }
  return out;
}

}  // namespace obsopt::game
