#pragma once

#include <string>
#include <variant>
#include <vector>

#include "ionsim/dynamics.hpp"
#include "ionsim/fock.hpp"

namespace ionsim::protocol {

enum class QubitPreset { Excited, Ground, Superposition };

std::string to_string(QubitPreset preset);

/// Pulse length, either literal or resolved at protocol build time:
/// PiPulse(n) is the pi time of the |e,n> <-> |g,n+k> transition;
/// QuadraticGround(n) empties |e,n> under the quadratic pulse.
struct DurationSpec {
    enum class Kind { Literal, PiPulse, QuadraticGround };
    Kind kind = Kind::Literal;
    double literal = 0.0;
    int n = 0;

    static DurationSpec literal_time(double t) { return {Kind::Literal, t, 0}; }
    static DurationSpec pi_pulse(int n) { return {Kind::PiPulse, 0.0, n}; }
    static DurationSpec quadratic_ground(int n) { return {Kind::QuadraticGround, 0.0, n}; }
};

struct PulseStep {
    dynamics::PulseSpec pulse;
    DurationSpec duration;
};

struct CarrierStep {
    double theta = 0.0;
    double phi = 0.0;
};

struct SetQubitStep {
    QubitPreset preset = QubitPreset::Excited;
};

using Step = std::variant<PulseStep, CarrierStep, SetQubitStep>;

struct InitialState {
    QubitPreset qubit = QubitPreset::Excited;
    int nx = 0;
    int ny = 0;
};

struct Protocol {
    fock::SpaceDims dims;
    int guard = 4;
    InitialState initial;
    std::vector<Step> steps;
};

/// Protocol with symbolic durations resolved and the excitation support
/// checked against dims minus the guard band. Throws
/// DegenerateCouplingError if a symbolic duration hits a Laguerre node and
/// std::invalid_argument if the reachable excitation violates the guard.
struct CompiledProtocol {
    Protocol protocol;
    std::vector<double> durations;  // one entry per step; 0 for non-pulse steps
    int max_nx = 0;                 // reachable excitation, both flip outcomes
    int max_ny = 0;
    std::vector<std::string> warnings;
};

CompiledProtocol compile(const Protocol& protocol);

enum class RunMode { IdealPerBranch, SharedClock, PreRwa };

std::string to_string(RunMode mode);

struct TargetComponent {
    int q = 0;
    int nx = 0;
    int ny = 0;
    double target_abs = 0.0;
    double achieved_abs = 0.0;
    double phase_rad = 0.0;  // phase of <component|psi> relative to the target's
};

struct StepSummary {
    int index = 0;
    std::string kind;
    double duration = 0.0;
    double norm = 1.0;
    double excited_probability = 0.0;
    double leakage = 0.0;
};

struct FidelityReport {
    double fidelity = 0.0;  // |<target|psi>|^2, global-phase-free
    double relative_branch_phase_rad = 0.0;  // between the first two target components
    std::vector<TargetComponent> components;
    double leakage = 0.0;
    double entropy_x_bits = 0.0;  // mode-x | rest entanglement of the final state
    double max_norm_drift = 0.0;
    std::vector<StepSummary> steps;
    std::vector<std::string> warnings;
};

struct RunOptions {
    bool record_states = false;
    double ode_tol = 1e-8;        // pre-RWA pulses
    double norm_tolerance = 1e-12;  // effective/quadratic steps
};

struct RunResult {
    FidelityReport report;
    fock::HybridState final_state;
    std::vector<fock::HybridState> states;  // post-step states when recorded
};

/// Applies the steps in order. SharedClock plays each pulse for its literal
/// resolved duration through the closed-form propagator; IdealPerBranch
/// flips every resonant branch completely with the exact two-level phases
/// (duration ignored); PreRwa integrates each pulse with the full-coupling
/// oracle (carrier rotations stay instantaneous).
RunResult run(const CompiledProtocol& compiled, RunMode mode,
              const fock::HybridState* target, const RunOptions& options = {});

/// (|M>_x |0>_y + |0>_x |N>_y)/sqrt(2) with the qubit in |g>. M = N gives the
/// equal-excitation special case. M = N = 0 is rejected as degenerate.
fock::HybridState moon_target(int M, int N, fock::SpaceDims dims, int guard = 4);

/// Qubit rotation cos(theta/2) I - i sin(theta/2)(cos phi X + sin phi Y),
/// identity on both modes.
fock::HybridState carrier_rotation(const fock::HybridState& state, double theta,
                                   double phi);

/// Pulse length that moves |e, n_start> to |g, n_start+2> under the quadratic
/// coupling: pi / (2 |omega_eff| sqrt((n_start+1)(n_start+2))).
double t_g_for_quadratic(int n_start, double omega_eff);

double fidelity(const fock::HybridState& state, const fock::HybridState& target);

enum class Cut { ModeX, ModeY, Qubit };

/// Von Neumann entropy (base 2) of the reduced state across the cut.
double entanglement_entropy(const fock::HybridState& state, Cut cut);

/// The staged generation sequence for the target (|2k>_x |0>_y +
/// |0>_x |2k+2>_y)/sqrt(2) (x) |g>: two preparation pulses, a half rotation,
/// two simultaneous-branch pulses, a label flip plus a phase-correcting
/// rotation pair, and the finishing quadratic pulse.
struct MoonSequenceParams {
    int k = 4;
    double eta = 0.2;
    double omega = 1.0;
    double quad_eta = 0.1;   // records the coupling the quadratic stage emulates
    double quad_omega = 1.0;
};

Protocol make_moon_sequence(fock::SpaceDims dims, int guard,
                            const MoonSequenceParams& params = {});

/// omega * |f^2(reference_n)|: the quadratic-stage coupling that matches the
/// effective model at the reference level.
double quadratic_coupling_from_effective(double eta, double omega, int reference_n);

} // namespace ionsim::protocol
