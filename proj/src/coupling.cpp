#include "ionsim/coupling.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace ionsim::coupling {

namespace {

constexpr double kPi = std::numbers::pi;

// A node is detected on the Laguerre value itself, relative to the
// polynomial's coefficient scale C(n+k, n) = L^k_n(0); the rate also vanishes
// at eta = 0 for k > 0, which is equally degenerate for pulse timing.
bool is_laguerre_node(int n, int k, double x) {
    double scale = 1.0;
    for (int j = 1; j <= k; ++j) scale *= static_cast<double>(n + j) / j;
    return std::abs(laguerre_assoc(n, k, x)) <= 1e-12 * scale;
}

std::complex<double> minus_i_pow(int k) {
    switch (((k % 4) + 4) % 4) {
        case 0: return {1.0, 0.0};
        case 1: return {0.0, -1.0};
        case 2: return {-1.0, 0.0};
        default: return {0.0, 1.0};
    }
}

} // namespace

CouplingParams::CouplingParams(double eta_, int k_, double omega_, int k_max)
    : eta(eta_), k(k_), omega(omega_) {
    if (!std::isfinite(eta) || eta < 0.0) {
        throw std::invalid_argument("CouplingParams: eta must be finite and >= 0");
    }
    if (!std::isfinite(omega) || omega <= 0.0) {
        throw std::invalid_argument("CouplingParams: omega must be finite and > 0");
    }
    if (k < 0 || k > k_max) {
        throw std::invalid_argument("CouplingParams: require 0 <= k <= " +
                                    std::to_string(k_max) + ", got " +
                                    std::to_string(k));
    }
}

double laguerre_assoc(int n, int k, double x) {
    if (n < 0 || n > 200) {
        throw std::invalid_argument("laguerre_assoc: require 0 <= n <= 200");
    }
    if (k < 0) {
        throw std::invalid_argument("laguerre_assoc: require k >= 0");
    }
    if (!(x >= 0.0) || !std::isfinite(x)) {
        throw std::invalid_argument("laguerre_assoc: require finite x >= 0");
    }
    if (n == 0) return 1.0;
    // Recurrence in extended precision: near a polynomial zero the result is
    // small against the intermediate values, and the extra mantissa bits keep
    // the relative error of the returned double tight.
    long double prev = 1.0L;                             // L^k_0
    long double cur = 1.0L + static_cast<long double>(k) - x;  // L^k_1
    for (int m = 2; m <= n; ++m) {
        const long double next =
            ((2.0L * m - 1.0L + k - x) * cur - (m - 1.0L + k) * prev) / m;
        prev = cur;
        cur = next;
    }
    return static_cast<double>(cur);
}

std::complex<double> coupling_f(int n, const CouplingParams& params) {
    if (n < 0) throw std::invalid_argument("coupling_f: require n >= 0");
    const double x = params.eta * params.eta;
    double radial = std::exp(-0.5 * x) * laguerre_assoc(n, params.k, x);
    for (int j = 1; j <= params.k; ++j) {
        radial *= params.eta / (n + j);  // eta^k * n!/(n+k)! as one product
    }
    return minus_i_pow(params.k) * radial;
}

double rabi_frequency(int n, const CouplingParams& params) {
    if (n < 0) throw std::invalid_argument("rabi_frequency: require n >= 0");
    const double x = params.eta * params.eta;
    // |f^k(n)| sqrt((n+k)!/n!) = e^{-x/2} eta^k |L^k_n(x)| / sqrt((n+k)!/n!)
    double value = std::exp(-0.5 * x) * std::abs(laguerre_assoc(n, params.k, x));
    for (int j = 1; j <= params.k; ++j) {
        value *= params.eta / std::sqrt(static_cast<double>(n + j));
    }
    return params.omega * value;
}

double pi_pulse_time(int n, const CouplingParams& params) {
    const double rate = rabi_frequency(n, params);
    if (!(rate > 0.0) ||
        is_laguerre_node(n, params.k, params.eta * params.eta)) {
        throw DegenerateCouplingError(
            "pi_pulse_time: coupling vanishes at n=" + std::to_string(n) +
            " (Laguerre node), eta=" + std::to_string(params.eta) +
            " k=" + std::to_string(params.k));
    }
    return 0.5 * kPi / rate;
}

BranchPair::BranchPair(int n_upper_, int n_lower_, int k_)
    : n_upper(n_upper_), n_lower(n_lower_), k(k_) {
    if (n_upper < 0 || k < 0) {
        throw std::invalid_argument("BranchPair: require n_upper >= 0 and k >= 0");
    }
    if (n_lower < k) {
        throw std::invalid_argument(
            "BranchPair: require n_lower >= k so the |g,n_lower> <-> "
            "|e,n_lower-k> transition exists");
    }
}

CommensurabilityReport commensurability_scan(const BranchPair& pair, double omega,
                                             const EtaGrid& grid) {
    if (grid.points < 1) {
        throw std::invalid_argument("commensurability_scan: empty eta grid");
    }
    if (!(grid.min > 0.0) || !(grid.max <= 1.0) || grid.min > grid.max) {
        throw std::invalid_argument(
            "commensurability_scan: eta grid must lie within (0, 1]");
    }
    CommensurabilityReport report;
    report.grid.reserve(grid.points);
    double best_infidelity = 2.0;
    for (int i = 0; i < grid.points; ++i) {
        const double eta =
            grid.points == 1
                ? grid.min
                : grid.min + (grid.max - grid.min) * i / (grid.points - 1);
        CouplingParams params(eta, pair.k, omega);
        CommensurabilityPoint pt;
        pt.eta = eta;
        pt.rate_upper = rabi_frequency(pair.n_upper, params);
        pt.rate_lower = rabi_frequency(pair.n_lower - pair.k, params);
        const double x = eta * eta;
        if (!(pt.rate_upper > 0.0) || !(pt.rate_lower > 0.0) ||
            is_laguerre_node(pair.n_upper, pair.k, x) ||
            is_laguerre_node(pair.n_lower - pair.k, pair.k, x)) {
            pt.degenerate = true;
            report.grid.push_back(pt);
            continue;
        }
        pt.rate_ratio = pt.rate_upper / pt.rate_lower;
        pt.lower_phase = 0.5 * kPi * pt.rate_lower / pt.rate_upper;
        const double s = std::sin(pt.lower_phase);
        pt.predicted_fidelity = s * s;
        pt.predicted_infidelity = 1.0 - s * s;
        pt.single_pulse_fidelity = 0.25 * (1.0 + s) * (1.0 + s);
        const double mod = std::fmod(pt.lower_phase, kPi);
        pt.exact = std::abs(mod - 0.5 * kPi) <= 1e-3;
        if (pt.predicted_infidelity < best_infidelity) {
            best_infidelity = pt.predicted_infidelity;
            report.best_index = static_cast<int>(report.grid.size());
        }
        report.grid.push_back(pt);
    }
    return report;
}

} // namespace ionsim::coupling
