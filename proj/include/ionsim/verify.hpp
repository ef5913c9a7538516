#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "ionsim/dynamics.hpp"

namespace ionsim::verify {

/// Knobs of the verification battery. Defaults pin the release gates; every
/// field can be overridden from a config file.
struct VerifyOptions {
    // closed-form propagator vs numeric exponential
    int mode_dim = 32;
    std::vector<int> sideband_orders{1, 2, 4};
    std::vector<double> etas{0.05, 0.2, 0.5};
    std::vector<double> literal_times{0.1};
    std::vector<double> t0_multiples{1.0, 3.0};
    std::vector<double> quadratic_couplings{0.01, -0.02};
    double equivalence_tol = 1e-9;
    double fault_injection = 0.0;  // perturbs the closed form; for harness tests

    // pi-pulse timing
    std::vector<int> timing_levels{0, 4};
    double timing_eta = 0.2;
    int timing_k = 4;
    double timing_pe_tol = 1e-12;
    double timing_rel_tol = 1e-9;

    // Laguerre recurrence vs extended-precision direct sum
    int laguerre_n_max = 40;
    int laguerre_k_max = 8;
    std::vector<double> laguerre_xs{1e-3, 1e-2, 4e-2, 0.25, 1.0, 4.0};
    double laguerre_tol = 1e-10;

    // staged generation sequence
    int protocol_dim = 32;
    int protocol_guard = 4;
    int protocol_k = 4;
    double protocol_eta = 0.2;
    double protocol_quad_eta = 0.1;
    double protocol_fidelity_tol = 1e-10;
    double kernel_tol = 1e-12;
    double entropy_tol = 1e-10;

    // shared-clock honesty
    int scan_points = 50;
    double scan_eta_min = 0.02;
    double scan_eta_max = 1.0;
    double scan_agreement_tol = 1e-6;
    double scan_good_fidelity = 0.999;

    // unitarity / norm
    double norm_tol = 1e-12;
    double unitarity_tol = 1e-10;

    // pre-RWA deviation from the effective model over one flip
    double rwa_nu = 200.0;
    double rwa_eta = 0.5;
    int rwa_k = 4;
    int rwa_mode_dim = 24;
    double rwa_tol = 1e-8;
    int rwa_samples = 160;
    double rwa_max_deviation = 0.05;

    // detuning-convention scan
    int resonance_k = 1;
    double resonance_eta = 0.2;
    double resonance_nu = 200.0;
    int resonance_points = 21;
    double resonance_band = 0.4;  // scan -k nu * (1 -+ band)
    int resonance_mode_dim = 12;
    double resonance_tol = 1e-8;
    int resonance_samples = 48;
};

/// Reduced battery for smoke runs and byte-determinism double runs.
VerifyOptions fast_options();

struct CheckResult {
    std::string name;
    bool passed = false;
    double worst = 0.0;
    double threshold = 0.0;
    std::string detail;
};

std::vector<CheckResult> run_checks(const VerifyOptions& options);

bool all_passed(const std::vector<CheckResult>& results);

nlohmann::ordered_json report_json(const std::vector<CheckResult>& results);

/// First zero of P_e(t) for an initial |e, n> under the numeric-exponential
/// propagator, located from the two P_e = 1/2 crossings (cos^2 symmetry).
/// Independent of the closed-form pulse-time formula.
double locate_first_excited_zero(int mode_dim, const dynamics::PulseSpec& pulse,
                                 int n_initial);

/// L^k_n(x) by the explicit finite sum in extended precision. Test oracle,
/// independent of the recurrence.
long double laguerre_direct_sum(int n, int k, long double x);

} // namespace ionsim::verify
