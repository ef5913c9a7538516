#pragma once

#include <complex>
#include <vector>

#include "ionsim/errors.hpp"

namespace ionsim::coupling {

inline constexpr int kDefaultMaxSidebandOrder = 8;

/// Parameters of one sideband coupling: Lamb-Dicke eta, sideband order k and
/// Rabi frequency omega (units 1/time; all times in this project are in units
/// of 1/omega for omega = 1).
struct CouplingParams {
    double eta = 0.0;
    int k = 0;
    double omega = 1.0;

    CouplingParams() = default;
    CouplingParams(double eta_, int k_, double omega_,
                   int k_max = kDefaultMaxSidebandOrder);
};

/// Associated Laguerre polynomial L^k_n(x) by the upward three-term recurrence
/// in n (stable for x >= 0). n is capped at 200.
double laguerre_assoc(int n, int k, double x);

/// Number-dependent coupling f^k(n) = e^{-eta^2/2} (-i eta)^k [n!/(n+k)!]
/// L^k_n(eta^2). Factorial ratios are built as running products of
/// reciprocals, never through raw factorials.
std::complex<double> coupling_f(int n, const CouplingParams& params);

/// Angular rate of the |e,n> <-> |g,n+k> oscillation:
/// omega * |f^k(n)| * sqrt((n+k)!/n!).
double rabi_frequency(int n, const CouplingParams& params);

/// Pi-pulse time t0 = (pi/2) / rabi_frequency(n). Evolving |e,n> for t0 under
/// the effective Hamiltonian empties the excited state. Throws
/// DegenerateCouplingError at a Laguerre node (vanishing rate).
double pi_pulse_time(int n, const CouplingParams& params);

/// Two simultaneously resonant transitions driven by one pulse:
/// the |e,n_upper> <-> |g,n_upper+k> branch and the
/// |g,n_lower> <-> |e,n_lower-k> branch.
struct BranchPair {
    int n_upper;
    int n_lower;
    int k;
    BranchPair(int n_upper_, int n_lower_, int k_);
};

struct EtaGrid {
    double min;
    double max;
    int points;
};

struct CommensurabilityPoint {
    double eta = 0.0;
    double rate_upper = 0.0;
    double rate_lower = 0.0;
    double rate_ratio = 0.0;        // upper / lower
    double lower_phase = 0.0;       // phase accumulated by the lower branch at t0(upper)
    double predicted_infidelity = 0.0;  // 1 - sin^2(lower_phase)
    double predicted_fidelity = 0.0;    // sin^2(lower_phase): full-sequence prediction
    double single_pulse_fidelity = 0.0; // ((1 + sin(lower_phase))/2)^2: one-pulse joint flip
    bool exact = false;             // lower phase at an odd multiple of pi/2 within 1e-3 rad
    bool degenerate = false;        // Laguerre node on either branch; excluded from best
};

struct CommensurabilityReport {
    std::vector<CommensurabilityPoint> grid;
    int best_index = -1;            // minimizes predicted_infidelity
};

/// Scans eta over the grid and quantifies how far the lower branch is from a
/// complete flip when the shared pulse length is the upper branch's pi time.
/// Grid values must lie in (0, 1].
CommensurabilityReport commensurability_scan(const BranchPair& pair, double omega,
                                             const EtaGrid& grid);

} // namespace ionsim::coupling
