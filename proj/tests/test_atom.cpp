#include <doctest.h>

#include <cmath>
#include <map>

#include "bicav/atom.hpp"
#include "bicav/units.hpp"

using namespace bicav;

TEST_CASE("three-level lambda scheme structure") {
  const auto scheme = three_level_lambda();
  CHECK(scheme.level_count() == 3);
  CHECK(scheme.transitions().size() == 2);
  CHECK(!scheme.dark_state());

  // pump drives u- <-> e0, cavity couples u+ <-> e0 for sigma- photons
  for (const auto& t : scheme.transitions()) {
    if (t.driven_by.pump) {
      CHECK(t.ground == "u-");
      CHECK(t.pol == TransitionPol::SigmaPlus);
      CHECK(!t.driven_by.cavity);
    } else {
      CHECK(t.ground == "u+");
      CHECK(t.pol == TransitionPol::SigmaMinus);
      CHECK(t.driven_by.cavity);
    }
    CHECK(t.excited == "e0");
    CHECK(t.strength == 1.0);
  }

  // decay channels to both ground states, equal branching
  double total = 0.0;
  for (const auto& d : scheme.decay_channels()) {
    CHECK(d.excited == "e0");
    CHECK(d.branching == 0.5);
    total += d.branching;
  }
  CHECK(total == 1.0);

  CHECK(scheme.raman_initial() == "u-");
  CHECK(scheme.raman_target() == "u+");

  const auto split = three_level_lambda(mhz_to_angular(10.0), mhz_to_angular(3.0));
  CHECK(split.energy("u+") - split.energy("u-") == doctest::Approx(mhz_to_angular(10.0)));
  CHECK(split.energy("e0") == doctest::Approx(mhz_to_angular(3.0)));
}

TEST_CASE("rb87 d2 scheme levels and couplings") {
  const auto scheme = rb87_d2_scheme();
  CHECK(scheme.level_count() == 8);  // 3 ground + dark + F'=0 + 3x F'=1
  for (const auto& level : scheme.levels())
    CHECK(level.label.find("F'=2") == std::string::npos);

  // the paper's benchmark angular factor
  const double s524 = std::sqrt(5.0 / 24.0);
  bool found = false;
  for (const auto& t : scheme.transitions()) {
    if (t.ground == rb87::kGroundMinus && t.excited == rb87::kExcitedZero) {
      CHECK(t.strength == doctest::Approx(s524).epsilon(1e-12));
      CHECK(t.pol == TransitionPol::SigmaPlus);
      found = true;
    }
  }
  CHECK(found);

  // no pi coupling from mF=0 to F'=1 mF'=0 (vanishing Clebsch-Gordan)
  for (const auto& t : scheme.transitions()) {
    CHECK(!(t.ground == rb87::kGroundZero && t.excited == rb87::kExcitedZero &&
            t.pol == TransitionPol::Pi));
  }

  // Zeeman defaults: 26 MHz ground splitting, 7.5 MHz Raman offset
  CHECK(scheme.energy(rb87::kGroundPlus) - scheme.energy(rb87::kGroundMinus) ==
        doctest::Approx(mhz_to_angular(26.0)));
  CHECK(scheme.raman_offset() == doctest::Approx(mhz_to_angular(7.5)));
}

TEST_CASE("rb87 sigma tables are mirror symmetric under mF -> -mF") {
  const auto scheme = rb87_d2_scheme();
  auto mirror_label = [&](const std::string& label) {
    std::string out = label;
    const auto p = out.find("mF=");
    REQUIRE(p != std::string::npos);
    std::string m = out.substr(p + 3);
    if (m == "+1")
      out = out.substr(0, p + 3) + "-1";
    else if (m == "-1")
      out = out.substr(0, p + 3) + "+1";
    return out;
  };
  for (const auto& t : scheme.transitions()) {
    if (t.pol == TransitionPol::Pi) continue;
    const auto want_pol = (t.pol == TransitionPol::SigmaPlus)
                              ? TransitionPol::SigmaMinus
                              : TransitionPol::SigmaPlus;
    bool found = false;
    for (const auto& u : scheme.transitions()) {
      if (u.pol == want_pol && u.ground == mirror_label(t.ground) &&
          u.excited == mirror_label(t.excited)) {
        CHECK(u.strength == doctest::Approx(t.strength).epsilon(1e-12));
        found = true;
      }
    }
    CHECK(found);
  }
}

TEST_CASE("dark state is a pure sink") {
  const auto scheme = rb87_d2_scheme();
  REQUIRE(scheme.dark_state());
  for (const auto& t : scheme.transitions()) {
    CHECK(t.ground != *scheme.dark_state());
    CHECK(t.excited != *scheme.dark_state());
  }
  // decay reaches the dark state from F'=1 but never leaves it
  bool dark_in = false;
  for (const auto& d : scheme.decay_channels()) {
    CHECK(d.excited != *scheme.dark_state());
    if (d.ground == *scheme.dark_state()) {
      dark_in = true;
      CHECK(d.branching == doctest::Approx(1.0 / 6.0));
    }
  }
  CHECK(dark_in);
}

TEST_CASE("decay branching sums to one with or without the dark channel") {
  for (bool dark : {true, false}) {
    Rb87Options opts;
    opts.include_dark = dark;
    const auto scheme = rb87_d2_scheme(opts);
    std::map<std::string, double> sums;
    for (const auto& d : scheme.decay_channels()) sums[d.excited] += d.branching;
    CHECK(sums.size() == 4);
    for (const auto& [label, s] : sums) CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("level shifts apply by label") {
  auto scheme = rb87_d2_scheme();
  const double before = scheme.energy(rb87::kExcitedPlus);
  scheme.shift_levels({{std::string(rb87::kExcitedPlus), mhz_to_angular(17.0)}});
  CHECK(scheme.energy(rb87::kExcitedPlus) - before ==
        doctest::Approx(mhz_to_angular(17.0)));
  CHECK_THROWS_AS(scheme.shift_levels({{"nope", 1.0}}), std::invalid_argument);
}

TEST_CASE("transition operator") {
  const auto scheme = three_level_lambda();
  const HilbertSpace space({{"atom", 3}, {"cavity_x", 2}, {"cavity_y", 2}});
  const auto& cavity_leg = scheme.transitions()[1];
  const Operator op = transition_operator(scheme, cavity_leg, space);

  // nilpotent: raising twice annihilates
  CHECK((op.matrix() * op.matrix()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(op.matrix().operatorNorm() == doctest::Approx(cavity_leg.strength));

  // adjoint maps the excited state back to the ground state
  Vector excited = Vector::Zero(12);
  excited[space.flat_index({scheme.index_of("e0"), 0, 0})] = 1.0;
  Vector lowered = op.adjoint().matrix() * excited;
  CHECK(std::abs(lowered[space.flat_index({scheme.index_of("u+"), 0, 0})] -
                 Complex(1, 0)) < 1e-14);

  Transition bogus{"u-", "e0", TransitionPol::SigmaMinus, 1.0, {}};
  CHECK_THROWS_AS(transition_operator(scheme, bogus, space), std::invalid_argument);

  const HilbertSpace wrong({{"atom", 4}, {"cavity_x", 2}, {"cavity_y", 2}});
  CHECK_THROWS_AS(transition_operator(scheme, cavity_leg, wrong), std::invalid_argument);
}

TEST_CASE("scheme validation rejects inconsistent tables") {
  // pi transition marked cavity-driven
  CHECK_THROWS_AS(
      LevelScheme({{"g", 0.0, 0.0, false}, {"e", 0.0, 0.0, true}},
                  {{"g", "e", TransitionPol::Pi, 0.5, {.pump = false, .cavity = true}}},
                  {}, std::nullopt, "g", "e", "g"),
      std::invalid_argument);
  // branching above 1
  CHECK_THROWS_AS(
      LevelScheme({{"g", 0.0, 0.0, false}, {"e", 0.0, 0.0, true}},
                  {{"g", "e", TransitionPol::SigmaPlus, 0.5, {.pump = true}}},
                  {{"e", "g", 1.2}}, std::nullopt, "g", "e", "g"),
      std::invalid_argument);
}
