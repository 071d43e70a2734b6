#include "bicav/atom.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include "bicav/units.hpp"

namespace bicav {

std::string to_string(TransitionPol p) {
  switch (p) {
    case TransitionPol::SigmaPlus: return "sigma+";
    case TransitionPol::SigmaMinus: return "sigma-";
    case TransitionPol::Pi: return "pi";
  }
  return "?";
}

LevelScheme::LevelScheme(std::vector<AtomicLevel> levels,
                         std::vector<Transition> transitions,
                         std::vector<DecayChannel> decay,
                         std::optional<std::string> dark_state,
                         std::string raman_initial, std::string raman_hub,
                         std::string raman_target, double raman_offset)
    : levels_(std::move(levels)),
      transitions_(std::move(transitions)),
      decay_(std::move(decay)),
      dark_state_(std::move(dark_state)),
      raman_initial_(std::move(raman_initial)),
      raman_hub_(std::move(raman_hub)),
      raman_target_(std::move(raman_target)),
      raman_offset_(raman_offset) {
  validate();
}

void LevelScheme::validate() const {
  std::set<std::string> seen;
  for (const auto& l : levels_) {
    if (!std::isfinite(l.energy))
      throw std::invalid_argument("LevelScheme: non-finite energy for '" + l.label + "'");
    if (!seen.insert(l.label).second)
      throw std::invalid_argument("LevelScheme: duplicate level '" + l.label + "'");
  }
  for (const auto& t : transitions_) {
    if (!has_level(t.ground) || !has_level(t.excited))
      throw std::invalid_argument("LevelScheme: transition endpoint missing");
    if (t.strength < 0.0 || t.strength > 1.0)
      throw std::invalid_argument("LevelScheme: transition strength outside [0,1]");
    if (t.pol == TransitionPol::Pi && t.driven_by.cavity)
      throw std::invalid_argument("LevelScheme: pi transitions cannot couple the cavity");
    if (dark_state_ && (t.ground == *dark_state_ || t.excited == *dark_state_))
      throw std::invalid_argument("LevelScheme: dark state must have no couplings");
  }
  // Branching out of each excited level sums to 1 (within tolerance) so the
  // per-channel rates gamma_eu = gamma * branching exhaust the linewidth.
  std::map<std::string, double> sums;
  for (const auto& d : decay_) {
    if (!has_level(d.excited) || !has_level(d.ground))
      throw std::invalid_argument("LevelScheme: decay endpoint missing");
    if (d.branching < 0.0)
      throw std::invalid_argument("LevelScheme: negative decay branching");
    sums[d.excited] += d.branching;
  }
  for (const auto& [label, s] : sums) {
    if (s > 1.0 + 1e-9)
      throw std::invalid_argument("LevelScheme: decay branching out of '" + label +
                                  "' exceeds 1");
  }
  for (const auto& lbl : {raman_initial_, raman_hub_, raman_target_}) {
    if (!has_level(lbl))
      throw std::invalid_argument("LevelScheme: Raman endpoint '" + lbl + "' missing");
  }
}

int LevelScheme::index_of(std::string_view label) const {
  for (int i = 0; i < level_count(); ++i)
    if (levels_[i].label == label) return i;
  throw std::invalid_argument("LevelScheme: unknown level '" + std::string(label) + "'");
}

bool LevelScheme::has_level(std::string_view label) const {
  for (const auto& l : levels_)
    if (l.label == label) return true;
  return false;
}

double LevelScheme::energy(std::string_view label) const {
  return levels_[index_of(label)].energy;
}

void LevelScheme::shift_levels(const std::map<std::string, double>& shifts) {
  for (const auto& [label, shift] : shifts) {
    levels_[index_of(label)].energy += shift;
  }
}

LevelScheme three_level_lambda(double ground_splitting, double excited_detuning) {
  std::vector<AtomicLevel> levels = {
      {"u+", +ground_splitting / 2.0, +1.0, false},
      {"u-", -ground_splitting / 2.0, -1.0, false},
      {"e0", excited_detuning, 0.0, true},
  };
  std::vector<Transition> transitions = {
      // pump leg: u- -> e0 absorbs sigma+ light
      {"u-", "e0", TransitionPol::SigmaPlus, 1.0, {.pump = true, .cavity = false}},
      // cavity leg: e0 -> u+ emits a sigma- photon
      {"u+", "e0", TransitionPol::SigmaMinus, 1.0, {.pump = false, .cavity = true}},
  };
  std::vector<DecayChannel> decay = {
      {"e0", "u+", 0.5},
      {"e0", "u-", 0.5},
  };
  return LevelScheme(std::move(levels), std::move(transitions), std::move(decay),
                     std::nullopt, "u-", "e0", "u+", 0.0);
}

Rb87Options::Rb87Options()
    : zeeman_ground_splitting(mhz_to_angular(26.0)),
      raman_offset(mhz_to_angular(7.5)) {}

LevelScheme rb87_d2_scheme(const Rb87Options& opts) {
  if (opts.zeeman_ground_splitting < 0.0)
    throw std::invalid_argument("rb87_d2_scheme: negative Zeeman splitting");
  if (opts.dark_branching < 0.0 || opts.dark_branching >= 1.0)
    throw std::invalid_argument("rb87_d2_scheme: dark branching outside [0,1)");

  using namespace rb87;
  // F'=0 sits below F'=1 by the D2 hyperfine interval.
  const double f0_gap = mhz_to_angular(-72.218);
  const double half_zeeman = opts.zeeman_ground_splitting / 2.0;

  std::vector<AtomicLevel> levels = {
      {std::string(kGroundMinus), -half_zeeman, -1.0, false},
      {std::string(kGroundZero), 0.0, 0.0, false},
      {std::string(kGroundPlus), +half_zeeman, +1.0, false},
      {std::string(kDark), 0.0, std::nullopt, false},
      {std::string(kExcitedF0), f0_gap, 0.0, true},
      {std::string(kExcitedMinus), 0.0, -1.0, true},
      {std::string(kExcitedZero), 0.0, 0.0, true},
      {std::string(kExcitedPlus), 0.0, +1.0, true},
  };

  // Zero-field angular factors for F=1 -> F'=0,1 in units of the reduced D2
  // matrix element; sqrt(5/24) for every allowed F'=1 coupling and sqrt(1/6)
  // for F'=0 (the s1->s0' table collapses to single values for these lines).
  const double s_f1 = std::sqrt(5.0 / 24.0);
  const double s_f0 = std::sqrt(1.0 / 6.0);
  const DriveSet both{.pump = true, .cavity = true};
  const DriveSet none{};

  auto g = [](std::string_view s) { return std::string(s); };
  std::vector<Transition> transitions = {
      // sigma+ (absorption mF -> mF+1)
      {g(kGroundMinus), g(kExcitedZero), TransitionPol::SigmaPlus, s_f1, both},
      {g(kGroundZero), g(kExcitedPlus), TransitionPol::SigmaPlus, s_f1, both},
      {g(kGroundMinus), g(kExcitedF0), TransitionPol::SigmaPlus, s_f0, both},
      // sigma- (absorption mF -> mF-1)
      {g(kGroundPlus), g(kExcitedZero), TransitionPol::SigmaMinus, s_f1, both},
      {g(kGroundZero), g(kExcitedMinus), TransitionPol::SigmaMinus, s_f1, both},
      {g(kGroundPlus), g(kExcitedF0), TransitionPol::SigmaMinus, s_f0, both},
      // pi (decay paths only; mF' = 0 -> mF = 0 vanishes for F=1 -> F'=1)
      {g(kGroundMinus), g(kExcitedMinus), TransitionPol::Pi, s_f1, none},
      {g(kGroundPlus), g(kExcitedPlus), TransitionPol::Pi, s_f1, none},
      {g(kGroundZero), g(kExcitedF0), TransitionPol::Pi, s_f0, none},
  };

  // Decay branchings: within each excited level the F=1 channels share the
  // squared angular factors; F'=1 additionally loses `dark_branching` to the
  // aggregate F=2 sink. Toggling the dark channel redistributes, so the
  // branchings always sum to 1.
  std::map<std::string, std::vector<std::pair<std::string, double>>> weights;
  for (const auto& t : transitions)
    weights[t.excited].push_back({t.ground, t.strength * t.strength});

  const bool dark_on = opts.include_dark && opts.dark_branching > 0.0;
  std::vector<DecayChannel> decay;
  for (auto& [exc, chans] : weights) {
    double tot = 0.0;
    for (auto& [gr, w] : chans) tot += w;
    const double dark_b = (dark_on && exc != kExcitedF0) ? opts.dark_branching : 0.0;
    for (auto& [gr, w] : chans) {
      const double b = (w / tot) * (1.0 - dark_b);
      if (b > 0.0) decay.push_back({exc, gr, b});
    }
    if (dark_b > 0.0) decay.push_back({exc, g(kDark), dark_b});
  }

  LevelScheme scheme(std::move(levels), std::move(transitions), std::move(decay),
                     dark_on ? std::optional<std::string>(g(kDark)) : std::nullopt,
                     g(kGroundMinus), g(kExcitedZero), g(kGroundPlus),
                     opts.raman_offset);
  scheme.shift_levels(opts.excited_shifts);
  return scheme;
}

Operator transition_operator(const LevelScheme& scheme, const Transition& t,
                             const HilbertSpace& space) {
  bool found = false;
  for (const auto& tr : scheme.transitions()) {
    if (tr.ground == t.ground && tr.excited == t.excited && tr.pol == t.pol) {
      found = true;
      break;
    }
  }
  if (!found)
    throw std::invalid_argument("transition_operator: transition not in scheme");

  const int atom_idx = space.factor_index("atom");
  const int m = space.factor(atom_idx).dim;
  if (m != scheme.level_count())
    throw std::invalid_argument("transition_operator: atom factor dimension mismatch");

  Matrix proj = Matrix::Zero(m, m);
  proj(scheme.index_of(t.excited), scheme.index_of(t.ground)) = t.strength;
  return embed(Operator(HilbertSpace({{"atom", m}}), std::move(proj)), "atom", space);
}

}  // namespace bicav
