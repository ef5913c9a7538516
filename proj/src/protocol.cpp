#include "ionsim/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ionsim::protocol {

namespace {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using dynamics::Axis;
using dynamics::Model;
using dynamics::PulseSpec;

constexpr double kPi = std::numbers::pi;
constexpr Complex kImag{0.0, 1.0};

int pulsed_dim(const fock::SpaceDims& dims, Axis axis) {
    return axis == Axis::X ? dims.x : dims.y;
}

int step_k(const PulseSpec& pulse) {
    return pulse.model == Model::Quadratic ? 2 : pulse.params.k;
}

/// Each resonant branch flipped completely with the exact two-level phases;
/// kernel and truncation-blocked levels stay put. Unitary.
dynamics::Propagator ideal_flip(int mode_dim, const PulseSpec& pulse) {
    const int k = step_k(pulse);
    Matrix u = Matrix::Zero(2 * mode_dim, 2 * mode_dim);
    for (int n = 0; n < mode_dim; ++n) {
        if (n + k < mode_dim) {
            Complex phase{1.0, 0.0};
            bool node = false;
            if (pulse.model == Model::Effective) {
                const Complex f = coupling::coupling_f(n, pulse.params);
                const double mag = std::abs(f);
                if (mag <= 1e-300) {
                    node = true;
                } else {
                    phase = f / mag;
                }
            } else if (std::abs(pulse.omega_eff) <= 1e-300) {
                node = true;
            } else if (pulse.omega_eff < 0.0) {
                phase = Complex{-1.0, 0.0};
            }
            if (node) {
                u(dynamics::compound_e(n), dynamics::compound_e(n)) = 1.0;
                u(dynamics::compound_g(mode_dim, n + k),
                  dynamics::compound_g(mode_dim, n + k)) = 1.0;
            } else {
                u(dynamics::compound_g(mode_dim, n + k), dynamics::compound_e(n)) =
                    -kImag * std::conj(phase);
                u(dynamics::compound_e(n), dynamics::compound_g(mode_dim, n + k)) =
                    -kImag * phase;
            }
        } else {
            u(dynamics::compound_e(n), dynamics::compound_e(n)) = 1.0;
        }
    }
    for (int n = 0; n < std::min(k, mode_dim); ++n) {
        u(dynamics::compound_g(mode_dim, n), dynamics::compound_g(mode_dim, n)) = 1.0;
    }
    return dynamics::Propagator(pulse.axis, mode_dim, std::move(u));
}

fock::HybridState initial_state(const Protocol& proto) {
    switch (proto.initial.qubit) {
        case QubitPreset::Excited:
            return fock::HybridState::basis(proto.dims, fock::kQubitExcited,
                                            proto.initial.nx, proto.initial.ny);
        case QubitPreset::Ground:
            return fock::HybridState::basis(proto.dims, fock::kQubitGround,
                                            proto.initial.nx, proto.initial.ny);
        default:
            return fock::HybridState::qubit_superposition(proto.dims, proto.initial.nx,
                                                          proto.initial.ny);
    }
}

fock::HybridState set_qubit(const fock::HybridState& state, QubitPreset preset) {
    const fock::SpaceDims dims = state.dims();
    const int modes = dims.x * dims.y;
    Eigen::MatrixXcd m(2, modes);
    for (int q = 0; q < 2; ++q) {
        for (int nx = 0; nx < dims.x; ++nx) {
            for (int ny = 0; ny < dims.y; ++ny) {
                m(q, nx * dims.y + ny) = state.amplitude(q, nx, ny);
            }
        }
    }
    // The idealized reset is only defined on qubit-product states.
    const Eigen::Matrix2cd gram = m * m.adjoint();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> solver(gram);
    if (solver.eigenvalues()(0) > 1e-18) {
        throw std::invalid_argument(
            "set_qubit: state is entangled between qubit and modes; use a "
            "carrier rotation instead");
    }
    const Eigen::Vector2cd principal = solver.eigenvectors().col(1);
    Eigen::RowVectorXcd mode_part = principal.adjoint() * m;
    Eigen::Vector2cd target;
    switch (preset) {
        case QubitPreset::Excited: target << 1.0, 0.0; break;
        case QubitPreset::Ground: target << 0.0, 1.0; break;
        default: target << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0); break;
    }
    Vector amps(dims.total());
    for (int q = 0; q < 2; ++q) {
        for (int nx = 0; nx < dims.x; ++nx) {
            for (int ny = 0; ny < dims.y; ++ny) {
                amps[fock::state_index(dims, q, nx, ny)] =
                    target(q) * mode_part(nx * dims.y + ny);
            }
        }
    }
    const double norm = amps.norm();
    if (norm <= 0.0) throw NumericError("set_qubit: zero state");
    amps /= norm;
    return fock::HybridState(dims, std::move(amps));
}

struct SupportTracker {
    fock::SpaceDims dims;
    std::vector<bool> occupied;  // (q, nx, ny)
    int max_nx = 0;
    int max_ny = 0;

    explicit SupportTracker(const Protocol& proto)
        : dims(proto.dims), occupied(proto.dims.total(), false) {
        const auto& init = proto.initial;
        if (init.nx < 0 || init.nx >= dims.x || init.ny < 0 || init.ny >= dims.y) {
            throw std::invalid_argument("protocol initial state out of range");
        }
        if (init.qubit == QubitPreset::Superposition) {
            mark(0, init.nx, init.ny);
            mark(1, init.nx, init.ny);
        } else {
            mark(init.qubit == QubitPreset::Excited ? 0 : 1, init.nx, init.ny);
        }
    }

    void mark(int q, int nx, int ny) {
        max_nx = std::max(max_nx, nx);
        max_ny = std::max(max_ny, ny);
        if (nx < dims.x && ny < dims.y) {
            occupied[fock::state_index(dims, q, nx, ny)] = true;
        }
    }

    void apply_qubit_mix() {
        for (int nx = 0; nx < dims.x; ++nx) {
            for (int ny = 0; ny < dims.y; ++ny) {
                const bool any = occupied[fock::state_index(dims, 0, nx, ny)] ||
                                 occupied[fock::state_index(dims, 1, nx, ny)];
                if (any) {
                    occupied[fock::state_index(dims, 0, nx, ny)] = true;
                    occupied[fock::state_index(dims, 1, nx, ny)] = true;
                }
            }
        }
    }

    // Union of flipped and unflipped outcomes (covers partial flips).
    void apply_pulse(Axis axis, int k) {
        std::vector<std::pair<int, std::pair<int, int>>> additions;
        for (int q = 0; q < 2; ++q) {
            for (int nx = 0; nx < dims.x; ++nx) {
                for (int ny = 0; ny < dims.y; ++ny) {
                    if (!occupied[fock::state_index(dims, q, nx, ny)]) continue;
                    const int n = axis == Axis::X ? nx : ny;
                    if (q == 0) {
                        const int up = n + k;
                        additions.push_back({1, axis == Axis::X ? std::pair{up, ny}
                                                                : std::pair{nx, up}});
                    } else if (n >= k) {
                        const int down = n - k;
                        additions.push_back({0, axis == Axis::X ? std::pair{down, ny}
                                                                : std::pair{nx, down}});
                    }
                }
            }
        }
        for (const auto& [q, pos] : additions) mark(q, pos.first, pos.second);
    }
};

} // namespace

std::string to_string(QubitPreset preset) {
    switch (preset) {
        case QubitPreset::Excited: return "e";
        case QubitPreset::Ground: return "g";
        default: return "superposition";
    }
}

std::string to_string(RunMode mode) {
    switch (mode) {
        case RunMode::IdealPerBranch: return "ideal_per_branch";
        case RunMode::SharedClock: return "shared_clock";
        default: return "pre_rwa";
    }
}

CompiledProtocol compile(const Protocol& protocol) {
    if (protocol.guard < 1 || protocol.guard >= std::min(protocol.dims.x, protocol.dims.y)) {
        throw std::invalid_argument("protocol guard band must satisfy 1 <= guard < min dim");
    }
    CompiledProtocol compiled{protocol, {}, 0, 0, {}};
    SupportTracker support(protocol);
    for (const Step& step : protocol.steps) {
        double duration = 0.0;
        if (const auto* pulse_step = std::get_if<PulseStep>(&step)) {
            const PulseSpec& pulse = pulse_step->pulse;
            auto warn = pulse.validate();
            compiled.warnings.insert(compiled.warnings.end(), warn.begin(), warn.end());
            switch (pulse_step->duration.kind) {
                case DurationSpec::Kind::Literal:
                    duration = pulse_step->duration.literal;
                    if (!(duration >= 0.0) || !std::isfinite(duration)) {
                        throw std::invalid_argument("pulse duration must be finite and >= 0");
                    }
                    break;
                case DurationSpec::Kind::PiPulse:
                    if (pulse.model == Model::Quadratic) {
                        throw std::invalid_argument(
                            "pi_pulse duration applies to effective-coupling pulses; "
                            "use quadratic_ground for quadratic pulses");
                    }
                    duration = coupling::pi_pulse_time(pulse_step->duration.n, pulse.params);
                    break;
                case DurationSpec::Kind::QuadraticGround:
                    if (pulse.model != Model::Quadratic) {
                        throw std::invalid_argument(
                            "quadratic_ground duration requires a quadratic pulse");
                    }
                    duration = t_g_for_quadratic(pulse_step->duration.n, pulse.omega_eff);
                    break;
            }
            support.apply_pulse(pulse.axis, step_k(pulse));
        } else if (std::holds_alternative<CarrierStep>(step) ||
                   std::holds_alternative<SetQubitStep>(step)) {
            support.apply_qubit_mix();
        }
        compiled.durations.push_back(duration);
    }
    compiled.max_nx = support.max_nx;
    compiled.max_ny = support.max_ny;
    if (compiled.max_nx >= protocol.dims.x - protocol.guard ||
        compiled.max_ny >= protocol.dims.y - protocol.guard) {
        throw std::invalid_argument(
            "protocol reaches excitation (" + std::to_string(compiled.max_nx) + "," +
            std::to_string(compiled.max_ny) + ") inside the guard band of dims (" +
            std::to_string(protocol.dims.x) + "," + std::to_string(protocol.dims.y) +
            "), guard " + std::to_string(protocol.guard));
    }
    return compiled;
}

RunResult run(const CompiledProtocol& compiled, RunMode mode,
              const fock::HybridState* target, const RunOptions& options) {
    const Protocol& proto = compiled.protocol;
    fock::HybridState state = initial_state(proto);
    RunResult result{FidelityReport{}, state, {}};
    result.report.warnings = compiled.warnings;
    double max_drift = 0.0;

    for (std::size_t i = 0; i < proto.steps.size(); ++i) {
        const Step& step = proto.steps[i];
        const double duration = compiled.durations[i];
        StepSummary summary;
        summary.index = static_cast<int>(i);
        summary.duration = duration;

        if (const auto* pulse_step = std::get_if<PulseStep>(&step)) {
            const PulseSpec& pulse = pulse_step->pulse;
            const int m = pulsed_dim(proto.dims, pulse.axis);
            summary.kind = "pulse_" + dynamics::to_string(pulse.axis) + "_" +
                           dynamics::to_string(pulse.model);
            if (mode == RunMode::PreRwa) {
                PulseSpec full = pulse;
                full.model = Model::FullPreRwa;
                if (pulse.model == Model::Quadratic && pulse.params.eta <= 0.0) {
                    throw std::invalid_argument(
                        "pre_rwa run: quadratic step carries no eta/omega to emulate");
                }
                if (!(full.nu > 0.0)) {
                    throw std::invalid_argument(
                        "pre_rwa run: every pulse must carry a trap frequency nu");
                }
                if (pulse.model != Model::FullPreRwa) {
                    full.delta = PulseSpec::sideband_resonant_delta(step_k(pulse), full.nu);
                }
                auto evolved = dynamics::evolve_pre_rwa(full, state, duration,
                                                        options.ode_tol);
                max_drift = std::max(max_drift, evolved.max_norm_drift);
                state = std::move(evolved.state);
            } else {
                const dynamics::Propagator u =
                    mode == RunMode::IdealPerBranch
                        ? ideal_flip(m, pulse)
                        : dynamics::u_analytic(m, pulse, duration);
                state = u.apply(state);
                const double drift = std::abs(state.norm() - 1.0);
                max_drift = std::max(max_drift, drift);
                if (drift > options.norm_tolerance) {
                    throw NumericError("protocol step " + std::to_string(i) +
                                       " violated norm preservation: drift " +
                                       std::to_string(drift));
                }
            }
        } else if (const auto* carrier = std::get_if<CarrierStep>(&step)) {
            summary.kind = "carrier";
            state = carrier_rotation(state, carrier->theta, carrier->phi);
        } else {
            const auto& sq = std::get<SetQubitStep>(step);
            summary.kind = "set_qubit_" + to_string(sq.preset);
            state = set_qubit(state, sq.preset);
        }

        summary.norm = state.norm();
        summary.excited_probability = dynamics::excited_probability(state);
        summary.leakage = state.leakage(proto.guard);
        result.report.steps.push_back(summary);
        if (options.record_states) result.states.push_back(state);
    }

    result.report.max_norm_drift = max_drift;
    result.report.leakage = state.leakage(proto.guard);
    result.report.entropy_x_bits = entanglement_entropy(state, Cut::ModeX);

    if (target != nullptr) {
        result.report.fidelity = fidelity(state, *target);
        const fock::SpaceDims dims = state.dims();
        if (!(dims == target->dims())) {
            throw std::invalid_argument("run: target dims mismatch");
        }
        for (int q = 0; q < 2; ++q) {
            for (int nx = 0; nx < dims.x; ++nx) {
                for (int ny = 0; ny < dims.y; ++ny) {
                    const Complex t = target->amplitude(q, nx, ny);
                    if (std::abs(t) <= 1e-12) continue;
                    const Complex a = state.amplitude(q, nx, ny);
                    TargetComponent component;
                    component.q = q;
                    component.nx = nx;
                    component.ny = ny;
                    component.target_abs = std::abs(t);
                    component.achieved_abs = std::abs(a);
                    component.phase_rad =
                        std::abs(a) > 1e-15 ? std::arg(a * std::conj(t)) : 0.0;
                    result.report.components.push_back(component);
                }
            }
        }
        if (result.report.components.size() >= 2) {
            double rel = result.report.components[1].phase_rad -
                         result.report.components[0].phase_rad;
            while (rel > kPi) rel -= 2.0 * kPi;
            while (rel <= -kPi) rel += 2.0 * kPi;
            result.report.relative_branch_phase_rad = rel;
        }
    }

    result.final_state = state;
    return result;
}

fock::HybridState moon_target(int M, int N, fock::SpaceDims dims, int guard) {
    if (M < 0 || N < 0) {
        throw std::invalid_argument("moon_target: require M, N >= 0");
    }
    if (M == 0 && N == 0) {
        throw std::invalid_argument(
            "moon_target: M = N = 0 is degenerate (both components coincide)");
    }
    if (M >= dims.x - guard || N >= dims.y - guard) {
        throw std::invalid_argument("moon_target: excitation reaches the guard band");
    }
    Vector amps = Vector::Zero(dims.total());
    const double w = 1.0 / std::sqrt(2.0);
    amps[fock::state_index(dims, fock::kQubitGround, M, 0)] += w;
    amps[fock::state_index(dims, fock::kQubitGround, 0, N)] += w;
    return fock::HybridState(dims, std::move(amps));
}

fock::HybridState carrier_rotation(const fock::HybridState& state, double theta,
                                   double phi) {
    const fock::SpaceDims dims = state.dims();
    const Complex c = std::cos(0.5 * theta);
    const Complex s = std::sin(0.5 * theta);
    const Complex off_eg = -kImag * s * std::exp(-kImag * phi);  // |e><g| factor
    const Complex off_ge = -kImag * s * std::exp(kImag * phi);   // |g><e| factor
    Vector amps(dims.total());
    for (int nx = 0; nx < dims.x; ++nx) {
        for (int ny = 0; ny < dims.y; ++ny) {
            const Complex e = state.amplitude(fock::kQubitExcited, nx, ny);
            const Complex g = state.amplitude(fock::kQubitGround, nx, ny);
            amps[fock::state_index(dims, fock::kQubitExcited, nx, ny)] = c * e + off_eg * g;
            amps[fock::state_index(dims, fock::kQubitGround, nx, ny)] = off_ge * e + c * g;
        }
    }
    return fock::HybridState(dims, std::move(amps));
}

double t_g_for_quadratic(int n_start, double omega_eff) {
    if (n_start < 0) {
        throw std::invalid_argument("t_g_for_quadratic: require n_start >= 0");
    }
    const double rate = std::abs(omega_eff) * std::sqrt((n_start + 1.0) * (n_start + 2.0));
    if (rate <= 0.0) {
        throw DegenerateCouplingError("t_g_for_quadratic: zero coupling");
    }
    return 0.5 * kPi / rate;
}

double fidelity(const fock::HybridState& state, const fock::HybridState& target) {
    if (!(state.dims() == target.dims())) {
        throw std::invalid_argument("fidelity: dimension mismatch");
    }
    const Complex overlap = target.amplitudes().dot(state.amplitudes());
    return std::norm(overlap);
}

double entanglement_entropy(const fock::HybridState& state, Cut cut) {
    const fock::SpaceDims dims = state.dims();
    int rows = 0, cols = 0;
    switch (cut) {
        case Cut::ModeX: rows = dims.x; cols = 2 * dims.y; break;
        case Cut::ModeY: rows = dims.y; cols = 2 * dims.x; break;
        case Cut::Qubit: rows = 2; cols = dims.x * dims.y; break;
    }
    Matrix m(rows, cols);
    for (int q = 0; q < 2; ++q) {
        for (int nx = 0; nx < dims.x; ++nx) {
            for (int ny = 0; ny < dims.y; ++ny) {
                const Complex a = state.amplitude(q, nx, ny);
                switch (cut) {
                    case Cut::ModeX: m(nx, q * dims.y + ny) = a; break;
                    case Cut::ModeY: m(ny, q * dims.x + nx) = a; break;
                    case Cut::Qubit: m(q, nx * dims.y + ny) = a; break;
                }
            }
        }
    }
    Eigen::JacobiSVD<Matrix> svd(m);
    double entropy = 0.0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
        const double p = svd.singularValues()[i] * svd.singularValues()[i];
        if (p > 1e-300) entropy -= p * std::log2(p);
    }
    return entropy;
}

double quadratic_coupling_from_effective(double eta, double omega, int reference_n) {
    return omega * std::abs(coupling::coupling_f(
                       reference_n, coupling::CouplingParams(eta, 2, omega)));
}

Protocol make_moon_sequence(fock::SpaceDims dims, int guard,
                            const MoonSequenceParams& params) {
    if (params.k < 1) {
        throw std::invalid_argument("make_moon_sequence: require k >= 1");
    }
    const coupling::CouplingParams sideband(params.eta, params.k, params.omega);
    const coupling::CouplingParams quad(params.quad_eta, 2, params.quad_omega);
    const double omega_eff =
        quadratic_coupling_from_effective(params.quad_eta, params.quad_omega,
                                          2 * params.k);

    auto sideband_pulse = [&](Axis axis, int pi_level) {
        PulseSpec pulse;
        pulse.axis = axis;
        pulse.model = Model::Effective;
        pulse.params = sideband;
        return PulseStep{pulse, DurationSpec::pi_pulse(pi_level)};
    };

    PulseSpec quad_pulse;
    quad_pulse.axis = Axis::Y;
    quad_pulse.model = Model::Quadratic;
    quad_pulse.params = quad;
    quad_pulse.omega_eff = omega_eff;

    Protocol proto{dims, guard, InitialState{QubitPreset::Excited, 0, 0}, {}};
    // |e,0,0> -> |g,k,0> -> |e,k,0> -> |g,k,k>
    proto.steps.push_back(sideband_pulse(Axis::X, 0));
    proto.steps.push_back(CarrierStep{kPi, 0.0});
    proto.steps.push_back(sideband_pulse(Axis::Y, 0));
    // (|e> + |g>)/sqrt(2) (x) |k,k>
    proto.steps.push_back(CarrierStep{0.5 * kPi, -0.5 * kPi});
    // both branches through the x then y sidebands
    proto.steps.push_back(sideband_pulse(Axis::X, params.k));
    proto.steps.push_back(sideband_pulse(Axis::Y, params.k));
    // label flip, then a rotation pair imprinting the qubit phase that the
    // finishing pulse converts into equal branch phases
    proto.steps.push_back(CarrierStep{kPi, 0.0});
    proto.steps.push_back(CarrierStep{kPi, kPi / 8.0});
    proto.steps.push_back(CarrierStep{kPi, -kPi / 8.0});
    proto.steps.push_back(PulseStep{quad_pulse, DurationSpec::quadratic_ground(2 * params.k)});
    return proto;
}

} // namespace ionsim::protocol
