#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "ionsim/coupling.hpp"
#include "ionsim/verify.hpp"

using namespace ionsim;
using coupling::CouplingParams;

namespace {

constexpr double kPi = std::numbers::pi;

// Matrix element route of the coupling: the normally ordered double series
// <n| sum_p (-i eta)^p/p! a†^p (-i eta)^{p+k}/(p+k)! a^{p+k} |n+k>, evaluated
// term by term. Independent of the Laguerre identity used by coupling_f.
std::complex<double> series_element(int n, const CouplingParams& p) {
    const double eta = p.eta;
    std::complex<double> phase{1.0, 0.0};
    for (int j = 0; j < p.k; ++j) phase *= std::complex<double>{0.0, -1.0};
    long double rising = 1.0L;  // sqrt((n+k)!/n!)
    for (int j = 1; j <= p.k; ++j) rising *= std::sqrt(static_cast<long double>(n + j));
    long double sum = 0.0L;
    long double term = 1.0L;  // p = 0: n!/(0!(0+k)! (n-0)!) * k! ... start explicit
    for (int j = 1; j <= p.k; ++j) term /= j;  // 1/(0+k)!
    for (int q = 0; q <= n; ++q) {
        if (q > 0) {
            // ratio of n!/(q!(q+k)!(n-q)!) terms times (-eta^2)
            term *= -static_cast<long double>(eta) * eta * (n - q + 1) /
                    (static_cast<long double>(q) * (q + p.k));
        }
        sum += term;
    }
    const long double radial =
        std::exp(-0.5L * eta * eta) * std::pow(static_cast<long double>(eta), p.k) *
        sum * rising;
    return phase * static_cast<double>(radial);
}

} // namespace

TEST_CASE("coupling parameter validation") {
    CHECK_THROWS_AS(CouplingParams(-0.1, 1, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(CouplingParams(0.1, 1, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(CouplingParams(0.1, 9, 1.0), std::invalid_argument);
    CHECK_NOTHROW(CouplingParams(0.1, 8, 1.0));
    CHECK_NOTHROW(CouplingParams(0.1, 9, 1.0, 10));
}

TEST_CASE("associated Laguerre basics") {
    for (int k : {0, 1, 4, 8}) {
        for (double x : {0.0, 0.3, 2.0}) {
            CHECK(coupling::laguerre_assoc(0, k, x) == 1.0);
        }
    }
    for (double x : {0.0, 0.5, 1.7}) {
        CHECK(coupling::laguerre_assoc(1, 0, x) == doctest::Approx(1.0 - x));
    }
    CHECK_THROWS_AS(coupling::laguerre_assoc(201, 0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(coupling::laguerre_assoc(1, 0, -1.0), std::invalid_argument);
}

TEST_CASE("Laguerre value frozen from the extended-precision sum") {
    // L^2_3(0.04) evaluated with the direct finite sum in long double
    const double expected = 9.60398933333333333;
    CHECK(coupling::laguerre_assoc(3, 2, 0.04) ==
          doctest::Approx(expected).epsilon(1e-12));
    CHECK(static_cast<double>(verify::laguerre_direct_sum(3, 2, 0.04L)) ==
          doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("recurrence matches the direct sum across the working grid") {
    for (int k = 0; k <= 8; ++k) {
        for (int n = 0; n <= 40; ++n) {
            for (double x : {0.001, 0.01, 0.04, 0.25, 1.0, 4.0}) {
                const long double exact = verify::laguerre_direct_sum(n, k, x);
                const double got = coupling::laguerre_assoc(n, k, x);
                const long double denom = std::max<long double>(std::abs(exact), 1e-30L);
                CHECK(static_cast<double>(std::abs(got - exact) / denom) <= 1e-10);
            }
        }
    }
}

TEST_CASE("coupling_f special values") {
    for (int n : {0, 3, 11}) {
        CHECK(coupling::coupling_f(n, CouplingParams(0.0, 0, 1.0)) ==
              std::complex<double>{1.0, 0.0});
    }
    CHECK(coupling::coupling_f(0, CouplingParams(0.3, 0, 1.0)).real() ==
          doctest::Approx(std::exp(-0.045)).epsilon(1e-15));

    // frozen from the series oracle
    const auto f44 = coupling::coupling_f(4, CouplingParams(0.2, 4, 1.0));
    CHECK(f44.real() == doctest::Approx(6.3276319061411672e-05).epsilon(1e-12));
    CHECK(f44.imag() == 0.0);
}

TEST_CASE("coupling_f agrees with the normally ordered series") {
    for (int k : {0, 1, 2, 4}) {
        for (int n : {0, 1, 4, 9}) {
            for (double eta : {0.05, 0.2, 0.6}) {
                const CouplingParams p(eta, k, 1.0);
                double rising = 1.0;
                for (int j = 1; j <= k; ++j) rising *= std::sqrt(double(n + j));
                const std::complex<double> via_f = coupling::coupling_f(n, p) * rising;
                const std::complex<double> via_series = series_element(n, p);
                CHECK(std::abs(via_f - via_series) <=
                      1e-12 * std::max(std::abs(via_series), 1e-30));
            }
        }
    }
}

TEST_CASE("coupling_f magnitude and phase structure") {
    for (int k : {0, 1, 2, 4, 8}) {
        for (int n : {0, 2, 7, 19}) {
            for (double eta : {0.05, 0.2, 0.5, 0.9}) {
                const auto f = coupling::coupling_f(n, CouplingParams(eta, k, 1.0));
                CHECK(std::abs(f) <= 1.0 + 1e-15);
                // phase is (-i)^k times the sign of the Laguerre value
                const double lag = coupling::laguerre_assoc(n, k, eta * eta);
                std::complex<double> expected_phase{1.0, 0.0};
                for (int j = 0; j < k; ++j) {
                    expected_phase *= std::complex<double>{0.0, -1.0};
                }
                if (lag < 0) expected_phase = -expected_phase;
                if (std::abs(f) > 1e-300) {
                    CHECK(std::abs(f / std::abs(f) - expected_phase) <= 1e-12);
                }
            }
        }
    }
}

TEST_CASE("rabi frequency") {
    CHECK(coupling::rabi_frequency(0, CouplingParams(0.0, 0, 1.0)) ==
          doctest::Approx(1.0));

    // linear in omega
    for (int n : {0, 3}) {
        const double r1 = coupling::rabi_frequency(n, CouplingParams(0.2, 4, 1.0));
        const double r2 = coupling::rabi_frequency(n, CouplingParams(0.2, 4, 2.0));
        CHECK(r2 == doctest::Approx(2.0 * r1).epsilon(1e-15));
    }

    // |f^4(0)| sqrt(4!)
    const CouplingParams p(0.2, 4, 1.0);
    const double expected = std::abs(coupling::coupling_f(0, p)) * std::sqrt(24.0);
    CHECK(coupling::rabi_frequency(0, p) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("rabi frequency small-eta asymptote") {
    // rate -> omega eta^k sqrt((n+k)!/n!) / k! as eta -> 0
    const double eta = 1e-4;
    for (int k : {1, 2, 4}) {
        for (int n : {0, 3, 6}) {
            double rising = 1.0, kfact = 1.0;
            for (int j = 1; j <= k; ++j) {
                rising *= std::sqrt(double(n + j));
                kfact *= j;
            }
            const double closed = std::pow(eta, k) * rising / kfact;
            const double got = coupling::rabi_frequency(n, CouplingParams(eta, k, 1.0));
            CHECK(std::abs(got - closed) / closed <= 1e-6);
        }
    }
}

TEST_CASE("pi pulse time") {
    CHECK(coupling::pi_pulse_time(0, CouplingParams(0.0, 0, 1.0)) ==
          doctest::Approx(0.5 * kPi));

    // exact 1/omega scaling
    const double t1 = coupling::pi_pulse_time(2, CouplingParams(0.2, 4, 1.0));
    const double t3 = coupling::pi_pulse_time(2, CouplingParams(0.2, 4, 3.0));
    CHECK(t3 == doctest::Approx(t1 / 3.0).epsilon(1e-15));

    // frozen k=4 eta=0.2 values
    CHECK(coupling::pi_pulse_time(0, CouplingParams(0.2, 4, 1.0)) ==
          doctest::Approx(4906.7214576833312).epsilon(1e-12));
}

TEST_CASE("pi pulse time at a Laguerre node raises the degenerate error") {
    // L^1_1(eta^2) = 2 - eta^2 vanishes at eta = sqrt(2)
    CHECK_THROWS_AS(coupling::pi_pulse_time(1, CouplingParams(std::sqrt(2.0), 1, 1.0)),
                    DegenerateCouplingError);
    // eta = 0 with k > 0 never flips either
    CHECK_THROWS_AS(coupling::pi_pulse_time(0, CouplingParams(0.0, 4, 1.0)),
                    DegenerateCouplingError);
}

TEST_CASE("pi pulse time agrees with the simulated first zero") {
    dynamics::PulseSpec pulse;
    pulse.model = dynamics::Model::Effective;
    pulse.params = CouplingParams(0.2, 4, 1.0);
    const double t0 = coupling::pi_pulse_time(0, pulse.params);
    const double located = verify::locate_first_excited_zero(16, pulse, 0);
    CHECK(std::abs(located - t0) / t0 <= 1e-9);
}

TEST_CASE("branch pair validation") {
    CHECK_THROWS_AS(coupling::BranchPair(4, 3, 4), std::invalid_argument);
    CHECK_NOTHROW(coupling::BranchPair(4, 4, 4));
}

TEST_CASE("commensurability scan") {
    SUBCASE("same transition gives ratio one and zero infidelity") {
        // |g,6> <-> |e,2> is the same transition as |e,2> <-> |g,6>
        const coupling::BranchPair pair(2, 6, 4);
        const auto rep = coupling::commensurability_scan(pair, 1.0,
                                                         {0.1, 0.5, 5});
        for (const auto& pt : rep.grid) {
            CHECK(pt.rate_ratio == doctest::Approx(1.0).epsilon(1e-14));
            CHECK(pt.predicted_infidelity <= 1e-14);
            CHECK(pt.exact);
        }
    }

    SUBCASE("small-eta ratio approaches sqrt(70) for the (4,4,4) pair") {
        const auto rep = coupling::commensurability_scan(coupling::BranchPair(4, 4, 4),
                                                         1.0, {1e-6, 1e-6, 1});
        CHECK(std::abs(rep.grid[0].rate_ratio - std::sqrt(70.0)) <= 1e-10);
    }

    SUBCASE("grid validation") {
        CHECK_THROWS_AS(coupling::commensurability_scan(coupling::BranchPair(4, 4, 4),
                                                        1.0, {0.1, 0.5, 0}),
                        std::invalid_argument);
        CHECK_THROWS_AS(coupling::commensurability_scan(coupling::BranchPair(4, 4, 4),
                                                        1.0, {0.0, 0.5, 3}),
                        std::invalid_argument);
        CHECK_THROWS_AS(coupling::commensurability_scan(coupling::BranchPair(4, 4, 4),
                                                        1.0, {0.1, 1.5, 3}),
                        std::invalid_argument);
    }

    SUBCASE("single point grid degenerates to one row with best index") {
        const auto rep = coupling::commensurability_scan(coupling::BranchPair(4, 4, 4),
                                                         1.0, {0.2, 0.2, 1});
        CHECK(rep.grid.size() == 1);
        CHECK(rep.best_index == 0);
        const double theta = rep.grid[0].lower_phase;
        CHECK(rep.grid[0].predicted_fidelity ==
              doctest::Approx(std::sin(theta) * std::sin(theta)).epsilon(1e-15));
    }
}
