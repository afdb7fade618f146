#include "obsopt/knowledge.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace obsopt::knowledge {

namespace {

struct MembersHash {
  std::size_t operator()(const std::vector<StateId>& v) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (StateId s : v) {
      h ^= s;
      h *= 1099511628211ull;
    }
    return h;
  }
};

std::vector<StateId> canonical_members(ObservableGame& g,
                                       std::vector<StateId> members) {
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());
  if (!g.has_subsumption() || members.size() < 2) return members;
  std::vector<bool> drop(members.size(), false);
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (drop[i]) continue;
    for (std::size_t j = 0; j < members.size(); ++j) {
      if (i == j || drop[j]) continue;
      if (g.subsumes(members[i], members[j])) drop[j] = true;
    }
  }
  std::vector<StateId> out;
  for (std::size_t i = 0; i < members.size(); ++i)
    if (!drop[i]) out.push_back(members[i]);
  return out;
}

}  // namespace

PostResult explore(ObservableGame& g, std::span<const StateId> members,
                   ActionId a) {
  PostResult result;
  // 1 = on the DFS stack, 2 = finished
  std::unordered_map<StateId, std::uint8_t> color;
  std::vector<std::pair<StateId, std::size_t>> stack;

  auto enter = [&](StateId s) {
    color[s] = 1;
    if (!result.sink && g.stalls(s, a)) result.sink = true;
    stack.emplace_back(s, 0);
  };

  for (StateId root : members) {
    if (color.count(root)) continue;
    enter(root);
    while (!stack.empty()) {
      const StateId u = stack.back().first;
      const std::vector<Successor>& succ = g.step(u, a);
      const std::size_t i = stack.back().second;
      if (i == succ.size()) {
        color[u] = 2;
        stack.pop_back();
        continue;
      }
      ++stack.back().second;
      const Successor t = succ[i];
      if (t.visible) {
        result.post.push_back(t.state);
        continue;
      }
      auto it = color.find(t.state);
      if (it == color.end())
        enter(t.state);
      else if (it->second == 1)
        result.sink = true;
    }
  }
  std::sort(result.post.begin(), result.post.end());
  result.post.erase(std::unique(result.post.begin(), result.post.end()),
                    result.post.end());
  return result;
}

std::vector<StateId> post_obs(ObservableGame& g,
                              std::span<const StateId> members, ActionId a) {
  return explore(g, members, a).post;
}

bool sink_obs(ObservableGame& g, std::span<const StateId> members, ActionId a) {
  return explore(g, members, a).sink;
}

std::size_t KnowledgeGame::member_state_count() const {
  std::unordered_set<StateId> seen;
  for (const auto& b : beliefs) seen.insert(b.members.begin(), b.members.end());
  return seen.size();
}

std::shared_ptr<KnowledgeGame> build_knowledge_game(
    std::shared_ptr<ObservableGame> arena, const BuildOptions& options) {
  if (!arena) throw std::invalid_argument("null arena");
  if (options.safety >= 64 || !((arena->observed() >> options.safety) & 1u))
    throw std::invalid_argument(
        "the safety predicate must belong to the observed predicate set");

  auto kg = std::make_shared<KnowledgeGame>();
  kg->arena = arena;
  kg->obs = arena->observed();
  kg->safety = options.safety;
  kg->action_count = arena->action_count();
  const std::size_t nact = kg->action_count;

  std::unordered_map<std::vector<StateId>, BeliefId, MembersHash> index;
  std::deque<BeliefId> queue;
  // Per belief: which actions already have a losing (or no) successor, and
  // how many actions are still good. Used for early losing detection.
  std::vector<std::vector<bool>> action_bad;
  std::vector<std::size_t> alive;
  std::vector<std::vector<std::pair<BeliefId, ActionId>>> preds;
  std::deque<BeliefId> newly_losing;

  auto intern = [&](std::vector<StateId> members) -> BeliefId {
    auto it = index.find(members);
    if (it != index.end()) return it->second;
    const auto id = static_cast<BeliefId>(kg->beliefs.size());
    Belief b;
    b.observation = arena->observe(members.front());
    b.members = std::move(members);
    index.emplace(b.members, id);
    kg->beliefs.push_back(std::move(b));
    kg->transitions.emplace_back();
    kg->sink.emplace_back();
    kg->expanded.push_back(false);
    kg->losing.push_back(false);
    action_bad.emplace_back(nact, false);
    alive.push_back(nact);
    preds.emplace_back();
    if (!kg->safe(id)) {
      kg->losing[id] = true;
      newly_losing.push_back(id);
    }
    queue.push_back(id);
    return id;
  };

  auto propagate = [&] {
    while (!newly_losing.empty()) {
      const BeliefId w = newly_losing.front();
      newly_losing.pop_front();
      for (auto [p, a] : preds[w]) {
        if (kg->losing[p] || action_bad[p][a]) continue;
        action_bad[p][a] = true;
        if (--alive[p] == 0) {
          kg->losing[p] = true;
          newly_losing.push_back(p);
        }
      }
    }
  };

  intern(canonical_members(*arena, {arena->initial()}));
  propagate();

  while (!queue.empty()) {
    if (options.early_stop && kg->losing[0]) {
      kg->early_stopped = true;
      break;
    }
    const BeliefId v = queue.front();
    queue.pop_front();
    if (!kg->safe(v) && !options.expand_unsafe) continue;

    std::vector<std::vector<BeliefId>> rows(nact);
    std::vector<bool> sinks(nact, false);
    for (ActionId a = 0; a < nact; ++a) {
      // Copy: interning may reallocate kg->beliefs.
      const std::vector<StateId> members = kg->beliefs[v].members;
      PostResult pr = explore(*arena, members, a);
      std::map<Observation, std::vector<StateId>> by_obs;
      for (StateId s : pr.post) by_obs[arena->observe(s)].push_back(s);
      auto& row = rows[a];
      for (auto& [o, states] : by_obs)
        row.push_back(intern(canonical_members(*arena, std::move(states))));
      if (pr.sink) {
        row.push_back(v);
        sinks[a] = true;
      }
      std::sort(row.begin(), row.end());
      row.erase(std::unique(row.begin(), row.end()), row.end());
    }
    kg->transitions[v] = std::move(rows);
    kg->sink[v] = std::move(sinks);
    kg->expanded[v] = true;

    if (!kg->losing[v]) {
      for (ActionId a = 0; a < nact; ++a) {
        const auto& row = kg->transitions[v][a];
        bool bad = row.empty();
        for (BeliefId w : row) {
          preds[w].emplace_back(v, a);
          if (kg->losing[w]) bad = true;
        }
        if (bad) {
          action_bad[v][a] = true;
          --alive[v];
        }
      }
      if (alive[v] == 0) {
        kg->losing[v] = true;
        newly_losing.push_back(v);
      }
      propagate();
    }
  }
  if (options.early_stop && kg->losing[0] && !queue.empty())
    kg->early_stopped = true;
  kg->complete = !kg->early_stopped;
  return kg;
}

game::FiniteLts to_finite_lts(const KnowledgeGame& kg,
                              game::StatePredicate* safe_out) {
  const std::size_t n = kg.beliefs.size();
  const auto dead = static_cast<StateId>(n);
  game::FiniteLts lts(n + 1, kg.action_count, 0);
  game::StatePredicate safe{std::vector<bool>(n + 1, false)};
  for (BeliefId v = 0; v < n; ++v) {
    safe.holds[v] = kg.safe(v);
    for (ActionId a = 0; a < kg.action_count; ++a) {
      if (!kg.expanded[v] || kg.transitions[v][a].empty()) {
        lts.add(v, a, dead);
        continue;
      }
      for (BeliefId w : kg.transitions[v][a]) lts.add(v, a, w);
    }
  }
  for (ActionId a = 0; a < kg.action_count; ++a) lts.add(dead, a, dead);
  if (safe_out) *safe_out = std::move(safe);
  return lts;
}

KnowledgeSolution solve(const KnowledgeGame& kg) {
  KnowledgeSolution out;
  out.strategy.assign(kg.beliefs.size(), std::nullopt);
  if (kg.early_stopped || kg.beliefs.empty()) return out;
  game::StatePredicate safe;
  const game::FiniteLts lts = to_finite_lts(kg, &safe);
  const game::SafetySolution sol = game::solve_safety(lts, safe);
  out.winning = sol.initial_winning;
  for (std::size_t v = 0; v < kg.beliefs.size(); ++v)
    out.strategy[v] = sol.strategy[v];
  return out;
}

// ---------------------------------------------------------------------------

namespace {

class KnowledgeArena final : public ObservableGame {
 public:
  KnowledgeArena(std::shared_ptr<const KnowledgeGame> base, PredicateMask mask)
      : base_(std::move(base)),
        mask_(mask),
        steps_(base_->beliefs.size(),
               std::vector<std::optional<std::vector<Successor>>>(
                   base_->action_count)) {}

  StateId initial() override { return 0; }
  std::size_t action_count() const override { return base_->action_count; }
  std::string action_name(ActionId a) const override {
    return base_->arena->action_name(a);
  }
  PredicateMask observed() const override { return mask_; }
  Observation observe(StateId v) const override {
    return Observation{base_->beliefs.at(v).observation.bits & mask_};
  }
  const std::vector<Successor>& step(StateId v, ActionId a) override {
    auto& slot = steps_.at(v).at(a);
    if (!slot) {
      slot.emplace();
      if (base_->expanded[v]) {
        const Observation here = observe(v);
        for (BeliefId w : base_->transitions[v][a])
          slot->push_back({w, observe(w) != here});
      }
    }
    return *slot;
  }
  std::size_t state_count() const override { return base_->beliefs.size(); }

 private:
  std::shared_ptr<const KnowledgeGame> base_;
  PredicateMask mask_;
  std::vector<std::vector<std::optional<std::vector<Successor>>>> steps_;
};

}  // namespace

std::shared_ptr<ObservableGame> as_observable_game(
    std::shared_ptr<const KnowledgeGame> kg, PredicateMask coarser) {
  if (!kg) throw std::invalid_argument("null knowledge game");
  if ((coarser & ~kg->obs) != 0)
    throw std::invalid_argument(
        "coarser predicate set is not a subset of the game's predicates");
  if (!((coarser >> kg->safety) & 1u))
    throw std::invalid_argument("coarser predicate set lacks the safety predicate");
  if (!kg->complete)
    throw std::invalid_argument("cannot nest on a partially built game");
  return std::make_shared<KnowledgeArena>(std::move(kg), coarser);
}

// ---------------------------------------------------------------------------

LtsArena::LtsArena(game::FiniteLts lts, game::Labelling labels,
                   PredicateMask obs)
    : lts_(std::move(lts)), obs_(obs) {
  observations_.reserve(lts_.state_count);
  for (StateId s = 0; s < lts_.state_count; ++s)
    observations_.push_back(game::gamma_obs(labels, s, obs));
  steps_.resize(lts_.state_count);
  for (StateId s = 0; s < lts_.state_count; ++s) {
    steps_[s].resize(lts_.action_count);
    for (ActionId a = 0; a < lts_.action_count; ++a)
      for (StateId t : lts_.post(s, a))
        steps_[s][a].push_back({t, observations_[t] != observations_[s]});
  }
}

}  // namespace obsopt::knowledge
