#include "ionsim/dynamics.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <thread>

#include "ionsim/threading.hpp"

namespace ionsim::threading {

int thread_cap() {
    const char* env = std::getenv("IONSIM_THREADS");
    if (env == nullptr) return 1;
    const int n = std::atoi(env);
    return n < 1 ? 1 : n;
}

void parallel_for_indexed(int n, const std::function<void(int)>& fn) {
    const int workers = std::min(thread_cap(), n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace ionsim::threading

namespace ionsim::dynamics {

namespace {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

constexpr double kPi = std::numbers::pi;
constexpr Complex kImag{0.0, 1.0};

int pulsed_dim(const fock::SpaceDims& dims, Axis axis) {
    return axis == Axis::X ? dims.x : dims.y;
}

int spectator_dim(const fock::SpaceDims& dims, Axis axis) {
    return axis == Axis::X ? dims.y : dims.x;
}

int full_index(const fock::SpaceDims& dims, Axis axis, int q, int pulsed, int spec) {
    return axis == Axis::X ? fock::state_index(dims, q, pulsed, spec)
                           : fock::state_index(dims, q, spec, pulsed);
}

int effective_k(const PulseSpec& pulse) {
    return pulse.model == Model::Quadratic ? 2 : pulse.params.k;
}

} // namespace

std::string to_string(Axis axis) { return axis == Axis::X ? "x" : "y"; }

std::string to_string(Model model) {
    switch (model) {
        case Model::Effective: return "effective";
        case Model::Quadratic: return "quadratic";
        default: return "full_pre_rwa";
    }
}

std::vector<std::string> PulseSpec::validate() const {
    std::vector<std::string> warnings;
    if (!(duration >= 0.0) || !std::isfinite(duration)) {
        throw std::invalid_argument("PulseSpec: duration must be finite and >= 0");
    }
    switch (model) {
        case Model::Effective:
            break;
        case Model::Quadratic:
            if (!std::isfinite(omega_eff)) {
                throw std::invalid_argument("PulseSpec: omega_eff must be finite");
            }
            if (params.eta > 0.1) {
                warnings.push_back(
                    "quadratic model requested with eta=" + std::to_string(params.eta) +
                    " > 0.1; the constant-coupling approximation degrades");
            }
            break;
        case Model::FullPreRwa:
            if (!(nu > 0.0) || !std::isfinite(nu)) {
                throw std::invalid_argument("PulseSpec: full_pre_rwa requires nu > 0");
            }
            if (!std::isfinite(delta)) {
                throw std::invalid_argument("PulseSpec: delta must be finite");
            }
            break;
    }
    return warnings;
}

Eigen::MatrixXcd h_effective_compound(int mode_dim,
                                      const coupling::CouplingParams& params) {
    fock::TruncatedMode mode(mode_dim);
    const int k = params.k;
    if (k >= mode_dim) {
        throw std::invalid_argument("h_effective_compound: require k < mode dim");
    }
    Matrix h = Matrix::Zero(2 * mode_dim, 2 * mode_dim);
    for (int n = 0; n + k < mode_dim; ++n) {
        double rising = 1.0;
        for (int j = 1; j <= k; ++j) rising *= std::sqrt(static_cast<double>(n + j));
        // <e,n| H |g,n+k> = omega f^k(n) sqrt((n+k)!/n!)
        const Complex g = params.omega * coupling::coupling_f(n, params) * rising;
        h(compound_e(n), compound_g(mode_dim, n + k)) = g;
        h(compound_g(mode_dim, n + k), compound_e(n)) = std::conj(g);
    }
    return h;
}

Eigen::MatrixXcd h_quadratic_compound(int mode_dim, double omega_eff) {
    if (mode_dim < 3) {
        throw std::invalid_argument("h_quadratic_compound: require mode dim >= 3");
    }
    Matrix h = Matrix::Zero(2 * mode_dim, 2 * mode_dim);
    for (int n = 0; n + 2 < mode_dim; ++n) {
        const double g = omega_eff * std::sqrt((n + 1.0) * (n + 2.0));
        h(compound_e(n), compound_g(mode_dim, n + 2)) = g;
        h(compound_g(mode_dim, n + 2), compound_e(n)) = g;
    }
    return h;
}

namespace {

Matrix compound_to_full(const Matrix& compound, int mode_dim,
                        const fock::SpaceDims& dims, Axis axis) {
    if (pulsed_dim(dims, axis) != mode_dim) {
        throw std::invalid_argument("compound operator does not match pulsed mode dim");
    }
    const int spec = spectator_dim(dims, axis);
    Matrix full = Matrix::Zero(dims.total(), dims.total());
    for (int q = 0; q < 2; ++q) {
        for (int n = 0; n < mode_dim; ++n) {
            for (int q2 = 0; q2 < 2; ++q2) {
                for (int n2 = 0; n2 < mode_dim; ++n2) {
                    const Complex v = compound(q * mode_dim + n, q2 * mode_dim + n2);
                    if (v == Complex{0.0, 0.0}) continue;
                    for (int s = 0; s < spec; ++s) {
                        full(full_index(dims, axis, q, n, s),
                             full_index(dims, axis, q2, n2, s)) = v;
                    }
                }
            }
        }
    }
    return full;
}

} // namespace

Eigen::MatrixXcd h_effective(const fock::SpaceDims& dims,
                             const coupling::CouplingParams& params, Axis axis) {
    const int m = pulsed_dim(dims, axis);
    return compound_to_full(h_effective_compound(m, params), m, dims, axis);
}

Eigen::MatrixXcd h_quadratic(const fock::SpaceDims& dims, double omega_eff,
                             Axis axis) {
    const int m = pulsed_dim(dims, axis);
    return compound_to_full(h_quadratic_compound(m, omega_eff), m, dims, axis);
}

Propagator::Propagator(Axis axis, int mode_dim, Eigen::MatrixXcd compound)
    : axis_(axis), mode_dim_(mode_dim), compound_(std::move(compound)) {
    if (compound_.rows() != 2 * mode_dim_ || compound_.cols() != 2 * mode_dim_) {
        throw std::invalid_argument("Propagator: compound matrix must be 2m x 2m");
    }
    if (!compound_.allFinite()) {
        throw NumericError("Propagator: non-finite entries");
    }
}

fock::HybridState Propagator::apply(const fock::HybridState& state) const {
    const fock::SpaceDims dims = state.dims();
    if (pulsed_dim(dims, axis_) != mode_dim_) {
        throw std::invalid_argument("Propagator::apply: pulsed mode dim mismatch");
    }
    const int spec = spectator_dim(dims, axis_);
    const Vector& in = state.amplitudes();
    Vector out(in.size());
    Vector slice(2 * mode_dim_);
    Vector mapped(2 * mode_dim_);
    for (int s = 0; s < spec; ++s) {
        for (int q = 0; q < 2; ++q) {
            for (int n = 0; n < mode_dim_; ++n) {
                slice[q * mode_dim_ + n] = in[full_index(dims, axis_, q, n, s)];
            }
        }
        mapped.noalias() = compound_ * slice;
        for (int q = 0; q < 2; ++q) {
            for (int n = 0; n < mode_dim_; ++n) {
                out[full_index(dims, axis_, q, n, s)] = mapped[q * mode_dim_ + n];
            }
        }
    }
    return fock::HybridState(dims, std::move(out));
}

Eigen::MatrixXcd Propagator::full_matrix(const fock::SpaceDims& dims) const {
    return compound_to_full(compound_, mode_dim_, dims, axis_);
}

double Propagator::unitarity_defect(int excluded_top_levels) const {
    const Matrix gram = compound_.adjoint() * compound_ -
                        Matrix::Identity(compound_.rows(), compound_.cols());
    const int limit = mode_dim_ - excluded_top_levels;
    double worst = 0.0;
    for (int i = 0; i < gram.rows(); ++i) {
        if (i % mode_dim_ >= limit) continue;
        for (int j = 0; j < gram.cols(); ++j) {
            if (j % mode_dim_ >= limit) continue;
            worst = std::max(worst, std::abs(gram(i, j)));
        }
    }
    return worst;
}

Propagator u_analytic(int mode_dim, const PulseSpec& pulse, double t) {
    fock::TruncatedMode mode(mode_dim);
    if (pulse.model == Model::FullPreRwa) {
        throw std::invalid_argument("u_analytic: model must be effective or quadratic");
    }
    const int k = effective_k(pulse);
    if (k >= mode_dim) {
        throw std::invalid_argument("u_analytic: require k < mode dim");
    }
    // Per-level flip rate and coupling phase. cos/sin are diagonal in n̂; the
    // off-diagonal blocks compose them with the bare shift by k. The phase of
    // the coupling (including the sign of L^k_n) enters the off-diagonals as
    // -i e^{+i arg} / -i e^{-i arg}.
    std::vector<double> lambda(mode_dim, 0.0);
    std::vector<Complex> phase(mode_dim, Complex{1.0, 0.0});
    if (pulse.model == Model::Effective) {
        for (int n = 0; n < mode_dim; ++n) {
            lambda[n] = coupling::rabi_frequency(n, pulse.params);
            const Complex f = coupling::coupling_f(n, pulse.params);
            const double mag = std::abs(f);
            if (mag > 0.0) phase[n] = f / mag;
        }
    } else {
        for (int n = 0; n < mode_dim; ++n) {
            lambda[n] = std::abs(pulse.omega_eff) * std::sqrt((n + 1.0) * (n + 2.0));
            if (pulse.omega_eff < 0.0) phase[n] = Complex{-1.0, 0.0};
        }
    }
    Matrix u = Matrix::Zero(2 * mode_dim, 2 * mode_dim);
    for (int n = 0; n < mode_dim; ++n) {
        const double c = std::cos(lambda[n] * t);
        if (n + k < mode_dim) {
            const double s = std::sin(lambda[n] * t);
            u(compound_e(n), compound_e(n)) = c;
            u(compound_g(mode_dim, n + k), compound_g(mode_dim, n + k)) = c;
            u(compound_e(n), compound_g(mode_dim, n + k)) = -kImag * phase[n] * s;
            u(compound_g(mode_dim, n + k), compound_e(n)) =
                -kImag * std::conj(phase[n]) * s;
        } else {
            // No partner level in the truncated basis: the literal closed form
            // keeps its cosine here. This is the localized truncation defect.
            u(compound_e(n), compound_e(n)) = c;
        }
    }
    // |g, n < k> is annihilated by both Hamiltonian terms: exact kernel,
    // stationary under the true propagator.
    for (int n = 0; n < std::min(k, mode_dim); ++n) {
        u(compound_g(mode_dim, n), compound_g(mode_dim, n)) = 1.0;
    }
    return Propagator(pulse.axis, mode_dim, std::move(u));
}

NumericPropagator::NumericPropagator(int mode_dim, const PulseSpec& pulse)
    : axis_(pulse.axis), mode_dim_(mode_dim) {
    if (pulse.model == Model::FullPreRwa) {
        throw std::invalid_argument("NumericPropagator: model must be effective or quadratic");
    }
    const Matrix h = pulse.model == Model::Effective
                         ? h_effective_compound(mode_dim, pulse.params)
                         : h_quadratic_compound(mode_dim, pulse.omega_eff);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
    if (solver.info() != Eigen::Success) {
        throw NumericError("NumericPropagator: eigendecomposition failed");
    }
    vectors_ = solver.eigenvectors();
    values_ = solver.eigenvalues();
}

Propagator NumericPropagator::at(double t) const {
    Vector diag(values_.size());
    for (Eigen::Index i = 0; i < values_.size(); ++i) {
        diag[i] = std::exp(-kImag * values_[i] * t);
    }
    Matrix u = vectors_ * diag.asDiagonal() * vectors_.adjoint();
    return Propagator(axis_, mode_dim_, std::move(u));
}

Propagator u_numeric(int mode_dim, const PulseSpec& pulse, double t) {
    return NumericPropagator(mode_dim, pulse).at(t);
}

double excited_probability(const fock::HybridState& state) {
    const fock::SpaceDims dims = state.dims();
    double total = 0.0;
    for (int nx = 0; nx < dims.x; ++nx) {
        for (int ny = 0; ny < dims.y; ++ny) {
            total += std::norm(state.amplitude(fock::kQubitExcited, nx, ny));
        }
    }
    return total;
}

// ---------------------------------------------------------------------------
// Pre-RWA integrator
//
// Interaction picture of H = nu n̂ - (delta/2) s_z + Omega (E s+ + E† s-) with
// E = exp(-i eta (a + a†)) on the pulsed mode:
//   H_I(t) = Omega ( e^{-i delta t} P(t) E P†(t) s+  +  h.c. ),
//   P(t)  = diag(e^{i nu n t}).
// E is built once by exact Hermitian eigendecomposition of (a + a†).
// ---------------------------------------------------------------------------

namespace {

struct DormandPrince {
    // Classic DOPRI5(4) tableau, FSAL.
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                            a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                            a75 = -2187.0 / 6784, a76 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
};

class PreRwaIntegrator {
public:
    PreRwaIntegrator(const PulseSpec& pulse, const fock::HybridState& state,
                     double tol)
        : pulse_(pulse),
          dims_(state.dims()),
          mode_dim_(pulsed_dim(state.dims(), pulse.axis)),
          spec_dim_(spectator_dim(state.dims(), pulse.axis)),
          tol_(tol),
          y_(state.amplitudes()) {
        pulse_.validate();
        if (pulse_.model != Model::FullPreRwa) {
            throw std::invalid_argument("evolve_pre_rwa: model must be full_pre_rwa");
        }
        if (!(tol >= 1e-12 && tol <= 1e-6)) {
            throw std::invalid_argument("evolve_pre_rwa: tol must lie in [1e-12, 1e-6]");
        }
        // E = exp(-i eta (a + a†)), exact via eigendecomposition.
        fock::TruncatedMode mode(mode_dim_);
        const Matrix quad = fock::annihilation(mode).matrix() +
                            fock::creation(mode).matrix();
        Eigen::SelfAdjointEigenSolver<Matrix> solver(quad);
        if (solver.info() != Eigen::Success) {
            throw NumericError("evolve_pre_rwa: eigendecomposition failed");
        }
        Vector diag(mode_dim_);
        for (int i = 0; i < mode_dim_; ++i) {
            diag[i] = std::exp(-kImag * pulse_.params.eta * solver.eigenvalues()[i]);
        }
        displacement_ = solver.eigenvectors() * diag.asDiagonal() *
                        solver.eigenvectors().adjoint();
        displacement_dag_ = displacement_.adjoint();
        const int size = static_cast<int>(y_.size());
        for (Vector* buf : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &ytmp_}) {
            buf->resize(size);
        }
        slice_.resize(mode_dim_);
        tmp_.resize(mode_dim_);
        phases_.resize(mode_dim_);
        rhs(t_, y_, k1_);
        h_ = 1e-2 / (1.0 + pulse_.nu + std::abs(pulse_.delta) + pulse_.params.omega);
    }

    void advance_to(double t_target) {
        const double span = std::max(1.0, std::abs(t_target));
        while (t_ < t_target) {
            double h = std::min(h_, t_target - t_);
            if (h < 1e-14 * span) {
                throw StiffnessError("evolve_pre_rwa: step size underflow at t=" +
                                     std::to_string(t_));
            }
            stage(h);
            const double err = err_norm_;
            if (err <= tol_) {
                t_ += h;
                y_.swap(ytmp_);
                k1_.swap(k7_);  // FSAL
                ++accepted_;
                const double drift = std::abs(y_.norm() - 1.0);
                max_drift_ = std::max(max_drift_, drift);
            } else {
                ++rejected_;
            }
            const double factor =
                err > 0.0 ? std::clamp(0.9 * std::pow(tol_ / err, 0.2), 0.2, 5.0) : 5.0;
            h_ = h * factor;
        }
    }

    const Vector& y() const { return y_; }
    const fock::SpaceDims& dims() const { return dims_; }
    double max_drift() const { return max_drift_; }
    long accepted() const { return accepted_; }
    long rejected() const { return rejected_; }

private:
    using DP = DormandPrince;

    // out = -i H_I(t) y
    void rhs(double t, const Vector& y, Vector& out) {
        const double omega = pulse_.params.omega;
        for (int n = 0; n < mode_dim_; ++n) {
            phases_[n] = std::exp(kImag * (pulse_.nu * n * t));
        }
        const Complex ce = -kImag * omega * std::exp(-kImag * pulse_.delta * t);
        const Complex cg = -kImag * omega * std::exp(kImag * pulse_.delta * t);
        for (int s = 0; s < spec_dim_; ++s) {
            // e-sector derivative from the g amplitudes through D(t) = P E P†.
            gather(y, fock::kQubitGround, s);
            tmp_.noalias() = displacement_ * slice_;
            scatter(out, fock::kQubitExcited, s, ce);
            // g-sector derivative from the e amplitudes through D†(t).
            gather(y, fock::kQubitExcited, s);
            tmp_.noalias() = displacement_dag_ * slice_;
            scatter(out, fock::kQubitGround, s, cg);
        }
    }

    void gather(const Vector& y, int q, int s) {
        for (int n = 0; n < mode_dim_; ++n) {
            slice_[n] = std::conj(phases_[n]) * y[full_index(dims_, pulse_.axis, q, n, s)];
        }
    }

    void scatter(Vector& out, int q, int s, Complex coeff) {
        for (int n = 0; n < mode_dim_; ++n) {
            out[full_index(dims_, pulse_.axis, q, n, s)] = coeff * phases_[n] * tmp_[n];
        }
    }

    void stage(double h) {
        const Eigen::Index size = y_.size();
        ytmp_ = y_ + h * DP::a21 * k1_;
        rhs(t_ + DP::c2 * h, ytmp_, k2_);
        ytmp_ = y_ + h * (DP::a31 * k1_ + DP::a32 * k2_);
        rhs(t_ + DP::c3 * h, ytmp_, k3_);
        ytmp_ = y_ + h * (DP::a41 * k1_ + DP::a42 * k2_ + DP::a43 * k3_);
        rhs(t_ + DP::c4 * h, ytmp_, k4_);
        ytmp_ = y_ + h * (DP::a51 * k1_ + DP::a52 * k2_ + DP::a53 * k3_ + DP::a54 * k4_);
        rhs(t_ + DP::c5 * h, ytmp_, k5_);
        ytmp_ = y_ + h * (DP::a61 * k1_ + DP::a62 * k2_ + DP::a63 * k3_ +
                          DP::a64 * k4_ + DP::a65 * k5_);
        rhs(t_ + h, ytmp_, k6_);
        ytmp_ = y_ + h * (DP::a71 * k1_ + DP::a73 * k3_ + DP::a74 * k4_ +
                          DP::a75 * k5_ + DP::a76 * k6_);
        rhs(t_ + h, ytmp_, k7_);
        double err2 = 0.0;
        for (Eigen::Index i = 0; i < size; ++i) {
            const Complex e = h * (DP::e1 * k1_[i] + DP::e3 * k3_[i] + DP::e4 * k4_[i] +
                                   DP::e5 * k5_[i] + DP::e6 * k6_[i] + DP::e7 * k7_[i]);
            err2 += std::norm(e);
        }
        err_norm_ = std::sqrt(err2);
    }

    PulseSpec pulse_;
    fock::SpaceDims dims_;
    int mode_dim_;
    int spec_dim_;
    double tol_;
    Vector y_;
    Matrix displacement_;
    Matrix displacement_dag_;
    Vector k1_, k2_, k3_, k4_, k5_, k6_, k7_, ytmp_;
    Vector slice_, tmp_, phases_;
    double t_ = 0.0;
    double h_ = 0.0;
    double err_norm_ = 0.0;
    double max_drift_ = 0.0;
    long accepted_ = 0;
    long rejected_ = 0;
};

} // namespace

PreRwaResult evolve_pre_rwa(const PulseSpec& pulse, const fock::HybridState& state,
                            double t, double tol) {
    if (!(t >= 0.0) || !std::isfinite(t)) {
        throw std::invalid_argument("evolve_pre_rwa: require finite t >= 0");
    }
    PreRwaIntegrator integrator(pulse, state, tol);
    integrator.advance_to(t);
    return PreRwaResult{fock::HybridState(state.dims(), integrator.y()),
                        integrator.max_drift(), integrator.accepted(),
                        integrator.rejected()};
}

PreRwaResult evolve_pre_rwa_sampled(
    const PulseSpec& pulse, const fock::HybridState& state,
    const std::vector<double>& times, double tol,
    const std::function<void(double, const fock::HybridState&)>& record) {
    PreRwaIntegrator integrator(pulse, state, tol);
    double prev = 0.0;
    for (double t : times) {
        if (!(t >= prev) || !std::isfinite(t)) {
            throw std::invalid_argument(
                "evolve_pre_rwa_sampled: times must be finite and nondecreasing");
        }
        integrator.advance_to(t);
        record(t, fock::HybridState(state.dims(), integrator.y()));
        prev = t;
    }
    return PreRwaResult{fock::HybridState(state.dims(), integrator.y()),
                        integrator.max_drift(), integrator.accepted(),
                        integrator.rejected()};
}

ResonanceReport resonance_scan(const PulseSpec& pulse_template, const DeltaGrid& grid,
                               const ResonanceScanOptions& options) {
    if (grid.points < 1) {
        throw std::invalid_argument("resonance_scan: empty delta grid");
    }
    if (!(grid.min <= grid.max)) {
        throw std::invalid_argument("resonance_scan: require min <= max");
    }
    double span = options.span;
    if (span <= 0.0) {
        span = 0.5 * kPi /
               coupling::rabi_frequency(options.initial_n, pulse_template.params);
    }
    std::vector<double> times(options.samples);
    for (int i = 0; i < options.samples; ++i) {
        times[i] = span * (i + 1) / options.samples;
    }
    const fock::SpaceDims dims =
        pulse_template.axis == Axis::X
            ? fock::SpaceDims(options.mode_dim, options.spectator_dim)
            : fock::SpaceDims(options.spectator_dim, options.mode_dim);
    const fock::HybridState initial =
        pulse_template.axis == Axis::X
            ? fock::HybridState::basis(dims, fock::kQubitExcited, options.initial_n, 0)
            : fock::HybridState::basis(dims, fock::kQubitExcited, 0, options.initial_n);

    ResonanceReport report;
    report.grid.resize(grid.points);
    threading::parallel_for_indexed(grid.points, [&](int i) {
        const double delta =
            grid.points == 1
                ? grid.min
                : grid.min + (grid.max - grid.min) * i / (grid.points - 1);
        PulseSpec pulse = pulse_template;
        pulse.model = Model::FullPreRwa;
        pulse.delta = delta;
        double contrast = 0.0;
        evolve_pre_rwa_sampled(pulse, initial, times, options.tol,
                               [&](double, const fock::HybridState& s) {
                                   contrast = std::max(contrast,
                                                       1.0 - excited_probability(s));
                               });
        report.grid[i] = ResonancePoint{delta, contrast};
    });

    int peak = 0;
    for (int i = 1; i < grid.points; ++i) {
        if (report.grid[i].contrast > report.grid[peak].contrast) peak = i;
    }
    report.peak_index = peak;
    report.peak_delta = report.grid[peak].delta;

    // FWHM by linear interpolation; falls back to the grid edges.
    const double half = 0.5 * report.grid[peak].contrast;
    auto crossing = [&](int from, int step) {
        double bound = report.grid[from].delta;
        for (int i = from; i + step >= 0 && i + step < grid.points; i += step) {
            const auto& a = report.grid[i];
            const auto& b = report.grid[i + step];
            if ((a.contrast - half) * (b.contrast - half) <= 0.0 && a.contrast != b.contrast) {
                return a.delta + (half - a.contrast) * (b.delta - a.delta) /
                                     (b.contrast - a.contrast);
            }
            bound = b.delta;
        }
        return bound;
    };
    if (grid.points > 1) {
        const double left = crossing(peak, -1);
        const double right = crossing(peak, +1);
        report.fwhm = std::abs(right - left);
    }
    return report;
}

} // namespace ionsim::dynamics
