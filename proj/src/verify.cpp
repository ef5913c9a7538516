#include "ionsim/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ionsim/protocol.hpp"
#include "ionsim/threading.hpp"

namespace ionsim::verify {

namespace {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using dynamics::Axis;
using dynamics::Model;
using dynamics::PulseSpec;

constexpr double kPi = std::numbers::pi;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

PulseSpec effective_pulse(double eta, int k, double omega) {
    PulseSpec pulse;
    pulse.axis = Axis::X;
    pulse.model = Model::Effective;
    pulse.params = coupling::CouplingParams(eta, k, omega);
    return pulse;
}

PulseSpec quadratic_pulse(double omega_eff) {
    PulseSpec pulse;
    pulse.axis = Axis::X;
    pulse.model = Model::Quadratic;
    pulse.omega_eff = omega_eff;
    return pulse;
}

// max |A - B| over entries whose pulsed-mode index avoids the top
// `excluded` levels in both qubit sectors.
double masked_max_diff(const Matrix& a, const Matrix& b, int mode_dim, int excluded) {
    const int limit = mode_dim - excluded;
    double worst = 0.0;
    for (int i = 0; i < a.rows(); ++i) {
        if (i % mode_dim >= limit) continue;
        for (int j = 0; j < a.cols(); ++j) {
            if (j % mode_dim >= limit) continue;
            worst = std::max(worst, std::abs(a(i, j) - b(i, j)));
        }
    }
    return worst;
}

struct CheckBuilder {
    std::vector<CheckResult> results;

    void add(const std::string& name, double worst, double threshold,
             const std::string& detail) {
        results.push_back(CheckResult{name, worst <= threshold, worst, threshold, detail});
    }
};

} // namespace

long double laguerre_direct_sum(int n, int k, long double x) {
    // L^k_n(x) = sum_{m=0}^{n} (-1)^m x^m / m! * C(n+k, n-m)
    // The alternating terms reach ~1e10 while the value can be O(1); quad
    // precision keeps the oracle at least six digits ahead of the 1e-10 gate.
    __float128 term = 1;
    for (int j = 1; j <= k; ++j) {
        term *= static_cast<__float128>(n + j) / j;  // C(n+k, n)
    }
    __float128 sum = term;
    const __float128 xq = static_cast<__float128>(x);
    for (int m = 1; m <= n; ++m) {
        term *= -xq * (n - m + 1) / (static_cast<__float128>(m) * (k + m));
        sum += term;
    }
    return static_cast<long double>(sum);
}

double locate_first_excited_zero(int mode_dim, const PulseSpec& pulse, int n_initial) {
    const dynamics::NumericPropagator cache(mode_dim, pulse);
    const fock::SpaceDims dims = pulse.axis == Axis::X
                                     ? fock::SpaceDims(mode_dim, 2)
                                     : fock::SpaceDims(2, mode_dim);
    const fock::HybridState initial =
        pulse.axis == Axis::X
            ? fock::HybridState::basis(dims, fock::kQubitExcited, n_initial, 0)
            : fock::HybridState::basis(dims, fock::kQubitExcited, 0, n_initial);
    auto pe = [&](double t) {
        return dynamics::excited_probability(cache.at(t).apply(initial));
    };
    // March out until P_e drops below 1/2 (P_e is monotone on [0, first zero]).
    double t_hi = 1e-3;
    int guard = 0;
    while (pe(t_hi) > 0.5) {
        t_hi *= 1.5;
        if (++guard > 200) {
            throw NumericError("locate_first_excited_zero: no flip found");
        }
    }
    auto bisect_crossing = [&](double lo, double hi) {
        for (int i = 0; i < 100; ++i) {
            const double mid = 0.5 * (lo + hi);
            if (pe(mid) > 0.5) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return 0.5 * (lo + hi);
    };
    const double t_down = bisect_crossing(t_hi / 1.5, t_hi);
    // Past the zero P_e rises back through 1/2; the zero is the midpoint of
    // the two crossings by the cos^2 symmetry of the two-level sector.
    double t_lo2 = t_down;
    double t_hi2 = t_down * 1.1;
    guard = 0;
    while (pe(t_hi2) < 0.5) {
        t_lo2 = t_hi2;
        t_hi2 += t_down * 0.1;
        if (++guard > 400) {
            throw NumericError("locate_first_excited_zero: no revival found");
        }
    }
    double lo = t_lo2, hi = t_hi2;
    for (int i = 0; i < 100; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (pe(mid) < 0.5) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double t_up = 0.5 * (lo + hi);
    return 0.5 * (t_down + t_up);
}

VerifyOptions fast_options() {
    VerifyOptions o;
    o.mode_dim = 16;
    o.sideband_orders = {1, 2};
    o.etas = {0.2};
    o.t0_multiples = {1.0};
    o.quadratic_couplings = {0.01};
    o.timing_levels = {0};
    o.laguerre_n_max = 12;
    o.laguerre_k_max = 4;
    o.laguerre_xs = {0.04, 1.0};
    o.protocol_dim = 16;
    o.protocol_k = 2;
    o.scan_points = 7;
    o.rwa_nu = 50.0;
    o.rwa_eta = 0.5;
    o.rwa_k = 1;
    o.rwa_mode_dim = 10;
    o.rwa_tol = 1e-7;
    o.rwa_samples = 40;
    o.resonance_nu = 50.0;
    o.resonance_points = 9;
    o.resonance_mode_dim = 8;
    o.resonance_tol = 1e-7;
    o.resonance_samples = 24;
    return o;
}

std::vector<CheckResult> run_checks(const VerifyOptions& o) {
    CheckBuilder checks;

    // --- closed form vs numeric exponential, and closed-form unitarity ----
    {
        double worst = 0.0;
        double worst_unitarity = 0.0;
        double worst_defect_top = 0.0;
        std::string where = "-";
        for (int k : o.sideband_orders) {
            for (double eta : o.etas) {
                const PulseSpec pulse = effective_pulse(eta, k, 1.0);
                const double t0 = coupling::pi_pulse_time(0, pulse.params);
                std::vector<double> times = o.literal_times;
                for (double m : o.t0_multiples) times.push_back(m * t0);
                const dynamics::NumericPropagator cache(o.mode_dim, pulse);
                for (double t : times) {
                    const auto ua = dynamics::u_analytic(o.mode_dim, pulse, t);
                    Matrix a = ua.compound();
                    if (o.fault_injection != 0.0) a(0, 0) += o.fault_injection;
                    const Matrix b = cache.at(t).compound();
                    const double diff = masked_max_diff(a, b, o.mode_dim, k);
                    if (diff > worst) {
                        worst = diff;
                        where = "k=" + std::to_string(k) + " eta=" + fmt(eta) +
                                " t=" + fmt(t);
                    }
                    worst_unitarity = std::max(worst_unitarity, ua.unitarity_defect(k));
                    worst_defect_top = std::max(worst_defect_top, ua.unitarity_defect(0));
                }
            }
        }
        for (double omega_eff : o.quadratic_couplings) {
            const PulseSpec pulse = quadratic_pulse(omega_eff);
            const double tq = protocol::t_g_for_quadratic(0, omega_eff);
            const dynamics::NumericPropagator cache(o.mode_dim, pulse);
            for (double t : {0.1, tq, 3.0 * tq}) {
                const auto ua = dynamics::u_analytic(o.mode_dim, pulse, t);
                Matrix a = ua.compound();
                if (o.fault_injection != 0.0) a(0, 0) += o.fault_injection;
                const double diff =
                    masked_max_diff(a, cache.at(t).compound(), o.mode_dim, 2);
                if (diff > worst) {
                    worst = diff;
                    where = "quadratic omega_eff=" + fmt(omega_eff) + " t=" + fmt(t);
                }
                worst_unitarity = std::max(worst_unitarity, ua.unitarity_defect(2));
            }
        }
        checks.add("analytic_numeric_equivalence", worst, o.equivalence_tol,
                   "worst at " + where);
        checks.add("analytic_unitarity_off_truncation", worst_unitarity,
                   o.unitarity_tol,
                   "full-space defect incl. top levels " + fmt(worst_defect_top));
    }

    // --- pi-pulse timing ---------------------------------------------------
    {
        double worst_pe = 0.0;
        double worst_rel = 0.0;
        const PulseSpec pulse = effective_pulse(o.timing_eta, o.timing_k, 1.0);
        const dynamics::NumericPropagator cache(o.mode_dim, pulse);
        const fock::SpaceDims dims(o.mode_dim, 2);
        for (int n : o.timing_levels) {
            const double t0 = coupling::pi_pulse_time(n, pulse.params);
            const auto state = fock::HybridState::basis(dims, fock::kQubitExcited, n, 0);
            worst_pe = std::max(
                worst_pe, dynamics::excited_probability(cache.at(t0).apply(state)));
            const double located = locate_first_excited_zero(o.mode_dim, pulse, n);
            worst_rel = std::max(worst_rel, std::abs(located - t0) / t0);
        }
        checks.add("pi_pulse_excited_probability", worst_pe, o.timing_pe_tol, "");
        checks.add("pi_pulse_first_zero_location", worst_rel, o.timing_rel_tol, "");
    }

    // --- Laguerre recurrence vs direct sum ----------------------------------
    {
        double worst = 0.0;
        std::string where = "-";
        for (int k = 0; k <= o.laguerre_k_max; ++k) {
            for (int n = 0; n <= o.laguerre_n_max; ++n) {
                for (double x : o.laguerre_xs) {
                    const long double exact = laguerre_direct_sum(n, k, x);
                    const double approx = coupling::laguerre_assoc(n, k, x);
                    const long double denom =
                        std::max<long double>(std::abs(exact), 1e-30L);
                    const double rel = static_cast<double>(
                        std::abs(static_cast<long double>(approx) - exact) / denom);
                    if (rel > worst) {
                        worst = rel;
                        where = "n=" + std::to_string(n) + " k=" + std::to_string(k) +
                                " x=" + fmt(x);
                    }
                }
            }
        }
        checks.add("laguerre_recurrence_vs_sum", worst, o.laguerre_tol,
                   "worst at " + where);
    }

    // --- staged generation sequence (ideal per-branch) ----------------------
    double sequence_norm_drift = 0.0;
    {
        const fock::SpaceDims dims(o.protocol_dim, o.protocol_dim);
        protocol::MoonSequenceParams params;
        params.k = o.protocol_k;
        params.eta = o.protocol_eta;
        params.quad_eta = o.protocol_quad_eta;
        const auto proto = protocol::make_moon_sequence(dims, o.protocol_guard, params);
        const auto compiled = protocol::compile(proto);
        const auto target = protocol::moon_target(2 * o.protocol_k, 2 * o.protocol_k + 2,
                                                  dims, o.protocol_guard);
        protocol::RunOptions run_options;
        run_options.record_states = true;
        const auto result =
            protocol::run(compiled, protocol::RunMode::IdealPerBranch, &target,
                          run_options);
        sequence_norm_drift = std::max(sequence_norm_drift, result.report.max_norm_drift);
        checks.add("sequence_fidelity_ideal", 1.0 - result.report.fidelity,
                   o.protocol_fidelity_tol,
                   "fidelity " + fmt(result.report.fidelity));

        // invariance of the ground kernel branch through the finishing pulse
        const std::size_t last = result.states.size() - 1;
        const Complex before = result.states[last - 1].amplitude(
            fock::kQubitGround, 2 * o.protocol_k, 0);
        const Complex after = result.states[last].amplitude(
            fock::kQubitGround, 2 * o.protocol_k, 0);
        checks.add("sequence_kernel_branch_invariance", std::abs(after - before),
                   o.kernel_tol, "");

        const double entropy =
            protocol::entanglement_entropy(result.final_state, protocol::Cut::ModeX);
        checks.add("sequence_mode_entanglement_bits", std::abs(entropy - 1.0),
                   o.entropy_tol, "entropy " + fmt(entropy));
    }

    // --- shared-clock fidelity vs scan prediction ----------------------------
    {
        const coupling::BranchPair pair(o.protocol_k, o.protocol_k, o.protocol_k);
        const coupling::EtaGrid grid{o.scan_eta_min, o.scan_eta_max, o.scan_points};
        const auto scan = coupling::commensurability_scan(pair, 1.0, grid);
        const fock::SpaceDims dims(o.protocol_dim, o.protocol_dim);
        std::vector<double> measured(scan.grid.size(), -1.0);
        std::vector<double> drifts(scan.grid.size(), 0.0);
        threading::parallel_for_indexed(
            static_cast<int>(scan.grid.size()), [&](int i) {
                const auto& pt = scan.grid[i];
                if (pt.degenerate) return;
                protocol::MoonSequenceParams params;
                params.k = o.protocol_k;
                params.eta = pt.eta;
                params.quad_eta = o.protocol_quad_eta;
                const auto proto =
                    protocol::make_moon_sequence(dims, o.protocol_guard, params);
                const auto compiled = protocol::compile(proto);
                const auto target = protocol::moon_target(
                    2 * o.protocol_k, 2 * o.protocol_k + 2, dims, o.protocol_guard);
                const auto result = protocol::run(
                    compiled, protocol::RunMode::SharedClock, &target, {});
                measured[i] = result.report.fidelity;
                drifts[i] = result.report.max_norm_drift;
            });
        double worst = 0.0;
        double best_fidelity = 0.0;
        std::string where = "-";
        for (std::size_t i = 0; i < scan.grid.size(); ++i) {
            if (measured[i] < 0.0) continue;
            sequence_norm_drift = std::max(sequence_norm_drift, drifts[i]);
            best_fidelity = std::max(best_fidelity, measured[i]);
            const double diff = std::abs(measured[i] - scan.grid[i].predicted_fidelity);
            if (diff > worst) {
                worst = diff;
                where = "eta=" + fmt(scan.grid[i].eta);
            }
        }
        std::ostringstream detail;
        detail << "worst at " << where << "; best shared-clock fidelity "
               << fmt(best_fidelity) << "; reaches " << fmt(o.scan_good_fidelity) << ": "
               << (best_fidelity >= o.scan_good_fidelity ? "yes" : "no");
        checks.add("shared_clock_vs_prediction", worst, o.scan_agreement_tol,
                   detail.str());
    }

    checks.add("trajectory_norm_preservation", sequence_norm_drift, o.norm_tol, "");

    // --- pre-RWA deviation over one flip ------------------------------------
    {
        const coupling::CouplingParams params(o.rwa_eta, o.rwa_k, 1.0);
        PulseSpec pulse;
        pulse.axis = Axis::X;
        pulse.model = Model::FullPreRwa;
        pulse.params = params;
        pulse.nu = o.rwa_nu;
        pulse.delta = PulseSpec::sideband_resonant_delta(o.rwa_k, o.rwa_nu);
        const double rate = coupling::rabi_frequency(0, params);
        const double t0 = coupling::pi_pulse_time(0, params);
        std::vector<double> times(o.rwa_samples);
        for (int i = 0; i < o.rwa_samples; ++i) {
            times[i] = t0 * (i + 1) / o.rwa_samples;
        }
        const fock::SpaceDims dims(o.rwa_mode_dim, 2);
        const auto initial = fock::HybridState::basis(dims, fock::kQubitExcited, 0, 0);
        double deviation = 0.0;
        const auto evolved = dynamics::evolve_pre_rwa_sampled(
            pulse, initial, times, o.rwa_tol,
            [&](double t, const fock::HybridState& s) {
                const double reference = std::cos(rate * t) * std::cos(rate * t);
                deviation = std::max(
                    deviation, std::abs(dynamics::excited_probability(s) - reference));
            });
        std::ostringstream detail;
        detail << "nu/omega=" << fmt(o.rwa_nu) << " k=" << o.rwa_k << " eta="
               << fmt(o.rwa_eta) << "; norm drift " << fmt(evolved.max_norm_drift)
               << " over " << evolved.accepted_steps << " steps";
        checks.add("pre_rwa_vs_effective_deviation", deviation, o.rwa_max_deviation,
                   detail.str());
    }

    // --- detuning convention -------------------------------------------------
    {
        PulseSpec tmpl;
        tmpl.axis = Axis::X;
        tmpl.model = Model::FullPreRwa;
        tmpl.params = coupling::CouplingParams(o.resonance_eta, o.resonance_k, 1.0);
        tmpl.nu = o.resonance_nu;
        const double expected =
            PulseSpec::sideband_resonant_delta(o.resonance_k, o.resonance_nu);
        const dynamics::DeltaGrid grid{expected - o.resonance_band * o.resonance_nu,
                                       expected + o.resonance_band * o.resonance_nu,
                                       o.resonance_points};
        dynamics::ResonanceScanOptions scan_options;
        scan_options.mode_dim = o.resonance_mode_dim;
        scan_options.samples = o.resonance_samples;
        scan_options.tol = o.resonance_tol;
        const auto report = dynamics::resonance_scan(tmpl, grid, scan_options);
        const double step = o.resonance_points > 1
                                ? (grid.max - grid.min) / (o.resonance_points - 1)
                                : 0.0;
        checks.add("resonance_peak_at_sideband", std::abs(report.peak_delta - expected),
                   step + 1e-12,
                   "peak delta " + fmt(report.peak_delta) + ", expected " +
                       fmt(expected) + ", fwhm " + fmt(report.fwhm));
    }

    return checks.results;
}

bool all_passed(const std::vector<CheckResult>& results) {
    return std::all_of(results.begin(), results.end(),
                       [](const CheckResult& r) { return r.passed; });
}

nlohmann::ordered_json report_json(const std::vector<CheckResult>& results) {
    nlohmann::ordered_json j;
    j["schema"] = "ionsim-verify-report/1";
    j["all_passed"] = all_passed(results);
    nlohmann::ordered_json entries = nlohmann::ordered_json::array();
    for (const auto& r : results) {
        entries.push_back(nlohmann::ordered_json{{"name", r.name},
                                                 {"passed", r.passed},
                                                 {"worst", r.worst},
                                                 {"threshold", r.threshold},
                                                 {"detail", r.detail}});
    }
    j["checks"] = entries;
    return j;
}

} // namespace ionsim::verify
