#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "drivestyle/trafficsim/scenario.hpp"

#include <cmath>
#include <filesystem>

using namespace drivestyle;
using namespace drivestyle::trafficsim;

namespace {

struct ConstantAccel : EgoController {
  double a;
  explicit ConstantAccel(double a_) : a(a_) {}
  double accel(const Scenario&, Rng&) override { return a; }
};

struct IdmEgo : EgoController {
  IdmParams p;
  explicit IdmEgo(IdmParams p_) : p(p_) {}
  double accel(const Scenario& s, Rng&) override {
    if (!s.ego_has_leader()) return idm_free_accel(p, s.ego().velocity);
    const auto& lead = s.ego_leader();
    return idm_accel(p, s.ego().velocity, s.gap_ahead(static_cast<std::size_t>(s.ego_index)),
                     s.ego().velocity - lead.velocity);
  }
};

}  // namespace

TEST_CASE("idm free-flow equilibrium: accel vanishes from below at v0") {
  IdmParams p;
  const double a = idm_accel(p, p.v0, 1e9, 0.0);
  CHECK(a <= 0.0);
  CHECK(std::abs(a) < 1e-6);
}

TEST_CASE("idm standstill equilibrium: v=0 at jam distance gives zero accel") {
  IdmParams p;
  CHECK(idm_accel(p, 0.0, p.s0, 0.0) == doctest::Approx(0.0));
}

TEST_CASE("idm matches direct formula evaluation") {
  IdmParams p;
  p.v0 = 30.0;
  p.T = 1.5;
  p.a_max = 1.0;
  p.b = 2.0;
  p.delta = 4.0;
  p.s0 = 2.0;
  // s* = 2 + 10*1.5 = 17; accel = 1 - (1/3)^4 - (17/20)^2
  const double expect = 1.0 - std::pow(10.0 / 30.0, 4.0) - std::pow(17.0 / 20.0, 2.0);
  CHECK(idm_accel(p, 10.0, 20.0, 0.0) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(expect == doctest::Approx(0.2652).epsilon(1e-3));
}

TEST_CASE("idm rejects non-positive gap") {
  IdmParams p;
  CHECK_THROWS(idm_accel(p, 5.0, 0.0, 0.0));
  CHECK_THROWS(idm_accel(p, 5.0, -3.0, 0.0));
}

TEST_CASE("equilibrium platoon with coasting ego leader holds speed to 1e-12") {
  IdmParams p;
  Scenario s = make_equilibrium_platoon(p, 5, 15.0, /*ego_index=*/0);
  for (int t = 0; t < 10; ++t) step(s, 0.0);
  for (const Vehicle& v : s.vehicles) CHECK(std::abs(v.velocity - 15.0) < 1e-12);
  CHECK(!s.crashed);
}

TEST_CASE("equilibrium platoon stays within 1e-9 for 1000 steps") {
  IdmParams p;
  Scenario s = make_equilibrium_platoon(p, 6, 12.0, 0);
  const double gap0 = s.gap_ahead(1);
  for (int t = 0; t < 1000; ++t) step(s, 0.0);
  for (std::size_t i = 1; i < s.vehicles.size(); ++i) {
    CHECK(std::abs(s.vehicles[i].velocity - 12.0) < 1e-9);
    CHECK(std::abs(s.gap_ahead(i) - gap0) < 1e-9);
  }
}

TEST_CASE("full-throttle ego behind stopped leader crashes within 200 steps") {
  Scenario s;
  Vehicle leader;
  leader.position = 15.0;  // bumper gap 10 m for 5 m long leader at ego front 0
  leader.velocity = 0.0;
  leader.idm = IdmParams{};
  leader.idm->v0 = 0.1;  // stays effectively stopped
  Vehicle ego;
  ego.position = 0.0;
  ego.velocity = 20.0;
  s.vehicles = {leader, ego};
  s.ego_index = 1;
  s.validate();
  int t = 0;
  for (; t < 200 && !s.crashed; ++t) step(s, 9.81);
  CHECK(s.crashed);
  CHECK(t < 10);  // 20 m/s closing over 10 m
}

TEST_CASE("single ego with no leader integrates semi-implicit Euler") {
  Scenario s;
  Vehicle ego;
  ego.position = 0.0;
  ego.velocity = 0.0;
  s.vehicles = {ego};
  s.ego_index = 0;
  step(s, 1.0);
  CHECK(s.ego().velocity == doctest::Approx(0.1));
  CHECK(s.ego().position == doctest::Approx(0.01));
}

TEST_CASE("velocity clamps at zero, no reversing") {
  Scenario s;
  Vehicle ego;
  ego.velocity = 0.5;
  s.vehicles = {ego};
  s.ego_index = 0;
  step(s, -9.81);
  CHECK(s.ego().velocity == 0.0);
  step(s, -9.81);
  CHECK(s.ego().velocity == 0.0);
}

TEST_CASE("step after crash errors") {
  Scenario s;
  Vehicle leader;
  leader.position = 6.0;
  leader.velocity = 0.0;
  leader.idm = IdmParams{};
  Vehicle ego;
  ego.position = 0.0;
  ego.velocity = 30.0;
  s.vehicles = {leader, ego};
  s.ego_index = 1;
  while (!s.crashed) step(s, 9.81);
  CHECK_THROWS(step(s, 0.0));
}

TEST_CASE("vehicle order never changes in crash-free runs") {
  IdmParams p;
  Scenario s = make_equilibrium_platoon(p, 5, 10.0, 2);
  Rng rng(123);
  for (int t = 0; t < 500 && !s.crashed; ++t) {
    step(s, rng.uniform(-1.5, 1.5));
    for (std::size_t i = 1; i < s.vehicles.size(); ++i) {
      CHECK(s.vehicles[i - 1].position > s.vehicles[i].position);
    }
  }
}

TEST_CASE("crash eval: IDM-controlled ego never crashes") {
  IdmParams p;
  std::vector<Scenario> scenarios;
  for (int i = 0; i < 20; ++i) {
    scenarios.push_back(make_equilibrium_platoon(p, 4, 5.0 + i, 1));
  }
  auto factory = [&](std::size_t, const Scenario&, Rng&) {
    return std::make_unique<IdmEgo>(p);
  };
  CrashEvalResult r = run_crash_eval(factory, scenarios, 200, 7);
  CHECK(r.crash_fraction == 0.0);
}

TEST_CASE("crash eval: max-accel ego crashes on every stopped-leader scenario") {
  std::vector<Scenario> scenarios;
  for (int i = 0; i < 10; ++i) {
    Scenario s;
    Vehicle leader;
    leader.position = 20.0 + 5.0 * i;
    leader.velocity = 0.0;
    leader.idm = IdmParams{};
    leader.idm->v0 = 0.1;
    Vehicle ego;
    ego.position = 0.0;
    ego.velocity = 0.0;
    s.vehicles = {leader, ego};
    s.ego_index = 1;
    scenarios.push_back(s);
  }
  auto factory = [](std::size_t, const Scenario&, Rng&) {
    return std::make_unique<ConstantAccel>(9.81);
  };
  CrashEvalResult r = run_crash_eval(factory, scenarios, 200, 7);
  CHECK(r.crash_fraction == 1.0);
}

TEST_CASE("crash eval rejects empty scenario list") {
  auto factory = [](std::size_t, const Scenario&, Rng&) {
    return std::make_unique<ConstantAccel>(0.0);
  };
  CHECK_THROWS(run_crash_eval(factory, {}, 200, 7));
}

TEST_CASE("crash eval is deterministic and worker-count independent") {
  IdmParams p;
  std::vector<Scenario> scenarios;
  for (int i = 0; i < 12; ++i) scenarios.push_back(make_equilibrium_platoon(p, 3, 8.0 + i, 1));
  auto factory = [](std::size_t, const Scenario&, Rng&) {
    return std::make_unique<ConstantAccel>(0.3);
  };
  CrashEvalResult a = run_crash_eval(factory, scenarios, 150, 99, 1);
  CrashEvalResult b = run_crash_eval(factory, scenarios, 150, 99, 4);
  CHECK(a.crash_fraction == b.crash_fraction);
  CHECK(a.crashed == b.crashed);
}

TEST_CASE("scenario JSON round trip preserves the suite") {
  IdmParams p;
  std::vector<Scenario> scenarios = {make_equilibrium_platoon(p, 3, 9.0, 1),
                                     make_equilibrium_platoon(p, 4, 14.0, 2)};
  scenarios[0].vehicles[1].idm.reset();  // ego slot without params
  const std::string text = scenarios_to_json(scenarios);
  std::vector<Scenario> back = scenarios_from_json(text);
  REQUIRE(back.size() == 2);
  CHECK(back[0].ego_index == 1);
  CHECK(back[0].vehicles[0].position == scenarios[0].vehicles[0].position);
  CHECK(!back[0].vehicles[1].idm.has_value());
  CHECK(back[1].vehicles[3].idm->T == p.T);
  CHECK(scenarios_to_json(back) == text);  // byte-stable re-serialization
}

TEST_CASE("scenario validation catches overlap and missing controllers") {
  Scenario s;
  Vehicle a;
  a.position = 3.0;
  a.idm = IdmParams{};
  Vehicle b;
  b.position = 0.0;  // gap = 3 - 5 < 0 with default length
  s.vehicles = {a, b};
  s.ego_index = 1;
  CHECK_THROWS(s.validate());

  Scenario s2;
  Vehicle c;
  c.position = 20.0;
  Vehicle d;
  d.position = 0.0;
  s2.vehicles = {c, d};  // front vehicle is not ego and has no IDM params
  s2.ego_index = 1;
  CHECK_THROWS(s2.validate());
}
