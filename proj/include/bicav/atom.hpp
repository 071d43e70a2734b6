#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bicav/quantum.hpp"

namespace bicav {

enum class TransitionPol { SigmaPlus, SigmaMinus, Pi };

std::string to_string(TransitionPol p);

struct AtomicLevel {
  std::string label;
  double energy = 0.0;              // rad/s, relative to the declared zero
  std::optional<double> spin;       // magnetic quantum number, when meaningful
  bool excited = false;
};

// Which fields drive a coupling. Pi transitions couple to neither: the cavity
// cannot support pi-polarised modes and the pump carries only sigma+- light.
struct DriveSet {
  bool pump = false;
  bool cavity = false;
};

struct Transition {
  std::string ground;
  std::string excited;
  TransitionPol pol = TransitionPol::Pi;
  double strength = 0.0;  // dimensionless angular factor, <= 1
  DriveSet driven_by;
};

// Spontaneous-decay channel. `branching` is the fraction of the total
// amplitude decay rate gamma carried by this channel; per excited level the
// branchings (including any dark channel) sum to 1.
struct DecayChannel {
  std::string excited;
  std::string ground;
  double branching = 0.0;
};

class LevelScheme {
 public:
  LevelScheme(std::vector<AtomicLevel> levels, std::vector<Transition> transitions,
              std::vector<DecayChannel> decay, std::optional<std::string> dark_state,
              std::string raman_initial, std::string raman_hub,
              std::string raman_target, double raman_offset = 0.0);

  const std::vector<AtomicLevel>& levels() const { return levels_; }
  const std::vector<Transition>& transitions() const { return transitions_; }
  const std::vector<DecayChannel>& decay_channels() const { return decay_; }
  const std::optional<std::string>& dark_state() const { return dark_state_; }

  int level_count() const { return static_cast<int>(levels_.size()); }
  int index_of(std::string_view label) const;
  double energy(std::string_view label) const;
  bool has_level(std::string_view label) const;

  // Endpoints of the nominal Raman process: initial --pump--> hub --cavity-->
  // target. Used to place the pump frequency and the cavity resonance.
  const std::string& raman_initial() const { return raman_initial_; }
  const std::string& raman_hub() const { return raman_hub_; }
  const std::string& raman_target() const { return raman_target_; }
  double raman_offset() const { return raman_offset_; }

  // Apply per-level energy offsets (label -> rad/s shift).
  void shift_levels(const std::map<std::string, double>& shifts);

 private:
  void validate() const;

  std::vector<AtomicLevel> levels_;
  std::vector<Transition> transitions_;
  std::vector<DecayChannel> decay_;
  std::optional<std::string> dark_state_;
  std::string raman_initial_, raman_hub_, raman_target_;
  double raman_offset_;
};

// Ideal three-level Lambda system {u+, u-, e0}: the pump drives u- <-> e0 and
// the cavity couples u+ <-> e0, emitting sigma- photons. Unit strengths;
// decay (when gamma > 0) branches equally to both ground states.
LevelScheme three_level_lambda(double ground_splitting = 0.0,
                               double excited_detuning = 0.0);

struct Rb87Options {
  double zeeman_ground_splitting;       // rad/s between mF = +-1; default 2pi x 26 MHz
  double raman_offset;                  // rad/s above the zero-field 0->0' line; default 2pi x 7.5 MHz
  std::map<std::string, double> excited_shifts;  // label -> rad/s
  double dark_branching = 1.0 / 6.0;    // F'=1 -> F=2 fraction
  bool include_dark = true;

  Rb87Options();
};

// Rb-87 D2 model: F=1 ground sublevels, aggregate dark state, F'=0 and F'=1
// excited sublevels with every sigma+- coupling and the standard zero-field
// angular factors. F'=2,3 are far off-resonance and omitted.
LevelScheme rb87_d2_scheme(const Rb87Options& opts = Rb87Options());

// Level labels used by rb87_d2_scheme.
namespace rb87 {
inline constexpr std::string_view kGroundMinus = "F=1,mF=-1";
inline constexpr std::string_view kGroundZero = "F=1,mF=0";
inline constexpr std::string_view kGroundPlus = "F=1,mF=+1";
inline constexpr std::string_view kDark = "dark";
inline constexpr std::string_view kExcitedF0 = "F'=0,mF=0";
inline constexpr std::string_view kExcitedMinus = "F'=1,mF=-1";
inline constexpr std::string_view kExcitedZero = "F'=1,mF=0";
inline constexpr std::string_view kExcitedPlus = "F'=1,mF=+1";
}  // namespace rb87

// Embedded |s_e><s_u| scaled by the transition's angular factor.
Operator transition_operator(const LevelScheme& scheme, const Transition& t,
                             const HilbertSpace& space);

}  // namespace bicav
