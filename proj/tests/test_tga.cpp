#include <doctest.h>

#include "obsopt/model_io.hpp"
#include "obsopt/region.hpp"
#include "obsopt/tga.hpp"
#include "oracles.hpp"

using namespace obsopt;
using tga::TgaModel;
using game::StateId;

namespace {

std::shared_ptr<const TgaModel> model(const std::string& text) {
  return std::make_shared<const TgaModel>(io::parse_model(text));
}

game::PredicateMask with(const TgaModel& m, std::initializer_list<const char*> names) {
  game::PredicateMask o = game::PredicateMask{1} << m.safety;
  for (const char* n : names) o |= game::PredicateMask{1} << *m.find_predicate(n);
  return o;
}

bool zone_wins(const std::shared_ptr<const TgaModel>& m, game::PredicateMask obs) {
  const bool z = tga::zone_solve(m, obs).winning;
  CHECK(z == region::oracle_solve(*m, obs));
  return z;
}

}  // namespace

TEST_CASE("a controllable action fires at its first enabling instant") {
  // Waiting is safe; escaping to OK is safe; c leads to BAD.
  const auto m = model(R"(
clock x
location A initial
location OK
location BAD
edge A -> BAD : controllable c guard x >= 1
edge A -> OK : controllable go guard x >= 2
safety safe except BAD
)");
  CHECK(zone_wins(m, with(*m, {})));
}

TEST_CASE("an invariant forces the environment's hand") {
  const char* text = R"(
clock x
location A initial invariant x < 2
location OK
location BAD
edge A -> BAD : uncontrollable u guard x >= 1
edge A -> OK : controllable esc guard x >= @
safety safe except BAD
)";
  auto src = [&](int k) {
    std::string s = text;
    s.replace(s.find("@"), 1, std::to_string(k));
    return model(s);
  };
  // At x = 1 both moves are possible; the controller has priority.
  CHECK(zone_wins(src(1), with(*src(1), {})));
  // Escaping needs x >= 2, which the invariant never allows.
  CHECK_FALSE(zone_wins(src(2), with(*src(2), {})));
}

TEST_CASE("timing information comes only from observed predicates") {
  // The environment moves A -> B at any time, resetting x. In B the
  // controller must fire `fix` within [1,2) after entry; a clock predicate
  // reveals the moment.
  const auto m = model(R"(
clock x
location A initial
location B invariant x < 3
location OK
location BAD
edge A -> B : uncontrollable enter reset x
edge B -> BAD : uncontrollable late guard x >= 2
edge B -> OK : controllable fix guard x >= 1
edge A -> BAD : controllable fix
predicate inB cost 1 at B
predicate early cost 1 clock x < 1
safety safe except BAD
)");
  CHECK_FALSE(zone_wins(m, with(*m, {})));
  CHECK_FALSE(zone_wins(m, with(*m, {"early"})));
  CHECK(zone_wins(m, with(*m, {"inB"})));
  CHECK(zone_wins(m, with(*m, {"inB", "early"})));
}

TEST_CASE("zone game structure") {
  const auto m = model(R"(
clock x, y
location A initial invariant x < 2
location B
edge A -> B : uncontrollable u guard x >= 1 reset y
edge B -> A : controllable back guard y >= 1 reset x
predicate ylow cost 1 clock y < 1
safety safe at A, B
)");
  auto g = tga::zone_observable_game(m, with(*m, {"ylow"}));
  CHECK(g->action_count() == 2);
  CHECK(g->action_name(g->skip()) == "skip");
  CHECK(g->action_name(0) == "back");
  const auto& s0 = g->state(0);
  CHECK(s0.location == 0);
  CHECK((g->observe(StateId{0}).bits >> *m->find_predicate("ylow") & 1) == 1);
  CHECK_FALSE(g->stalls(0, g->skip()));
  const auto& succ = g->step(0, g->skip());
  CHECK_FALSE(succ.empty());
  CHECK(g->subsumes(0, 0));
  CHECK_THROWS_AS(tga::zone_observable_game(m, 0), std::invalid_argument);
}

TEST_CASE("model validation") {
  auto m = std::make_shared<TgaModel>(io::parse_model(R"(
clock x
location A initial
edge A -> A : uncontrollable u guard x > 1 reset x
safety safe at A
)"));
  CHECK_NOTHROW(m->validate());
  CHECK(m->max_constants()[1] == 1);
  CHECK_FALSE(m->has_diagonal_guards());
  m->predicates[m->safety].clock.push_back({1, 0, 2});
  CHECK_THROWS_AS(m->validate(), tga::ModelError);

  const dbm::AtomicConstraint bad[] = {
      dbm::AtomicConstraint::simple(1, dbm::Relation::le, 2)};
  CHECK_THROWS_AS(tga::guard_bands(bad), tga::ModelError);
}

TEST_CASE("zone and region verdicts agree on random models") {
  int checked = 0;
  for (std::uint64_t seed = 0; checked < 60; ++seed) {
    std::mt19937_64 rng(seed);
    const std::string text = oracle::random_model(1 + seed % 2, 3, rng);
    const std::string err = oracle::check_zone_vs_region(text);
    INFO(text);
    REQUIRE_MESSAGE(err.empty(), err);
    ++checked;
  }
}
