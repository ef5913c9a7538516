#pragma once

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ionsim/coupling.hpp"
#include "ionsim/fock.hpp"

namespace ionsim::dynamics {

enum class Axis { X, Y };
enum class Model { Effective, Quadratic, FullPreRwa };

std::string to_string(Axis axis);
std::string to_string(Model model);

/// One laser pulse. Effective and quadratic pulses are fully specified by
/// (axis, params | omega_eff, duration); full_pre_rwa additionally carries the
/// trap frequency nu and the detuning delta (defined through w21 = w - delta,
/// so the k-th red sideband sits at delta = -k nu).
struct PulseSpec {
    Axis axis = Axis::X;
    Model model = Model::Effective;
    coupling::CouplingParams params;  // eta, k, omega
    double omega_eff = 0.0;           // quadratic coupling; sign permitted
    double duration = 0.0;
    double nu = 0.0;                  // full_pre_rwa only
    double delta = 0.0;               // full_pre_rwa only

    static double sideband_resonant_delta(int k, double nu) { return -k * nu; }

    /// Hard errors throw; returns soft warnings (e.g. quadratic model used
    /// outside its small-eta regime).
    std::vector<std::string> validate() const;
};

// Compound operators act on qubit (x) pulsed-mode, e-sector rows first:
// index q*m + n for mode dimension m.
inline int compound_e(int n) { return n; }
inline int compound_g(int m, int n) { return m + n; }

/// H = omega ( f^k(n̂) a^k s+ + a†^k f*^k(n̂) s- ) on qubit (x) pulsed mode,
/// Hermitian by construction. Requires k < mode_dim.
Eigen::MatrixXcd h_effective_compound(int mode_dim,
                                      const coupling::CouplingParams& params);

/// H = omega_eff ( a^2 s+ + a†^2 s- ), no f-factor. Requires mode_dim >= 3.
Eigen::MatrixXcd h_quadratic_compound(int mode_dim, double omega_eff);

/// Full-space versions (identity on the spectator mode).
Eigen::MatrixXcd h_effective(const fock::SpaceDims& dims,
                             const coupling::CouplingParams& params, Axis axis);
Eigen::MatrixXcd h_quadratic(const fock::SpaceDims& dims, double omega_eff,
                             Axis axis);

/// Block propagator U = [[U11, U12], [U21, U22]] on qubit (x) pulsed mode,
/// identity on the spectator mode.
class Propagator {
public:
    Propagator(Axis axis, int mode_dim, Eigen::MatrixXcd compound);

    Axis axis() const { return axis_; }
    int mode_dim() const { return mode_dim_; }
    const Eigen::MatrixXcd& compound() const { return compound_; }

    fock::HybridState apply(const fock::HybridState& state) const;
    Eigen::MatrixXcd full_matrix(const fock::SpaceDims& dims) const;

    /// max |(U†U - I)_ij| over the subspace whose pulsed-mode index stays
    /// below mode_dim - excluded_top_levels (both qubit sectors).
    double unitarity_defect(int excluded_top_levels) const;

private:
    Axis axis_;
    int mode_dim_;
    Eigen::MatrixXcd compound_;
};

/// Closed-form propagator: diagonal cos/sin of the per-level Rabi angles
/// composed with bare shift operators. Levels |g, n < k> are exact kernel
/// states of the Hamiltonian and stay put; e-levels within k of the
/// truncation edge keep their closed-form cosine, which is the (measured)
/// non-unitary truncation defect. Models: effective, quadratic.
Propagator u_analytic(int mode_dim, const PulseSpec& pulse, double t);

/// Independent oracle: exp(-iHt) via Hermitian eigendecomposition of the
/// compound Hamiltonian. Unitary to machine precision.
Propagator u_numeric(int mode_dim, const PulseSpec& pulse, double t);

/// Caches one eigendecomposition for propagators at many times.
class NumericPropagator {
public:
    NumericPropagator(int mode_dim, const PulseSpec& pulse);
    Propagator at(double t) const;

private:
    Axis axis_;
    int mode_dim_;
    Eigen::MatrixXcd vectors_;
    Eigen::VectorXd values_;
};

/// P_e = sum over mode indices of |<e, mx, my | psi>|^2.
double excited_probability(const fock::HybridState& state);

struct PreRwaResult {
    fock::HybridState state;
    double max_norm_drift = 0.0;  // max | ||psi|| - 1 | along the trajectory
    long accepted_steps = 0;
    long rejected_steps = 0;
};

/// Integrates the Schrodinger equation in the nu-rotating interaction picture
/// with the full displacement coupling exp(-i eta (a + a†)) built exactly per
/// mode (counter-rotating terms included). Adaptive embedded Runge-Kutta
/// (Dormand-Prince 5(4)) with local error <= tol per step; the norm is
/// monitored, never renormalized. tol must lie in [1e-12, 1e-6].
PreRwaResult evolve_pre_rwa(const PulseSpec& pulse, const fock::HybridState& state,
                            double t, double tol);

/// Same integration, invoking `record(t_i, state)` at each requested time
/// (times must be nondecreasing, starting at >= 0).
PreRwaResult evolve_pre_rwa_sampled(
    const PulseSpec& pulse, const fock::HybridState& state,
    const std::vector<double>& times, double tol,
    const std::function<void(double, const fock::HybridState&)>& record);

struct DeltaGrid {
    double min;
    double max;
    int points;
};

struct ResonancePoint {
    double delta = 0.0;
    double contrast = 0.0;  // max over the window of 1 - P_e
};

struct ResonanceReport {
    std::vector<ResonancePoint> grid;
    int peak_index = -1;
    double peak_delta = 0.0;
    double fwhm = 0.0;  // linear-interpolated full width at half the peak contrast
};

struct ResonanceScanOptions {
    int mode_dim = 12;
    int spectator_dim = 2;
    int initial_n = 0;
    int samples = 64;
    double tol = 1e-8;
    double span = 0.0;  // 0: one effective-model flip of the initial level
};

/// Evolves |e, n0> across a detuning grid with the pre-RWA integrator and
/// reports per-point flip contrast. Used to validate the delta = -k nu
/// sideband convention empirically.
ResonanceReport resonance_scan(const PulseSpec& pulse_template, const DeltaGrid& grid,
                               const ResonanceScanOptions& options = {});

} // namespace ionsim::dynamics
