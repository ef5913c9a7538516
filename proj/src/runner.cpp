#include "ionsim/runner.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ionsim/threading.hpp"
#include "ionsim/verify.hpp"

namespace ionsim::runner {

namespace {

using config::Json;
using config::RunConfig;
using dynamics::Axis;
using dynamics::Model;

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_text(const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream file(out_path, std::ios::binary);
    if (!file) {
        throw std::invalid_argument("cannot open output file '" + out_path + "'");
    }
    file << text;
}

void write_json(const std::string& out_path, const Json& j) {
    write_text(out_path, j.dump(2) + "\n");
}

fock::HybridState initial_from_config(const RunConfig& cfg) {
    const fock::SpaceDims dims(cfg.dims.x, cfg.dims.y);
    switch (cfg.initial.qubit) {
        case protocol::QubitPreset::Excited:
            return fock::HybridState::basis(dims, fock::kQubitExcited, cfg.initial.nx,
                                            cfg.initial.ny);
        case protocol::QubitPreset::Ground:
            return fock::HybridState::basis(dims, fock::kQubitGround, cfg.initial.nx,
                                            cfg.initial.ny);
        default:
            return fock::HybridState::qubit_superposition(dims, cfg.initial.nx,
                                                          cfg.initial.ny);
    }
}

double tracked_population(const fock::HybridState& state,
                          const config::TrackedLevel& level) {
    const fock::SpaceDims dims = state.dims();
    double total = 0.0;
    if (level.axis == Axis::X) {
        if (level.n >= dims.x) return 0.0;
        for (int q = 0; q < 2; ++q) {
            for (int ny = 0; ny < dims.y; ++ny) {
                total += std::norm(state.amplitude(q, level.n, ny));
            }
        }
    } else {
        if (level.n >= dims.y) return 0.0;
        for (int q = 0; q < 2; ++q) {
            for (int nx = 0; nx < dims.x; ++nx) {
                total += std::norm(state.amplitude(q, nx, level.n));
            }
        }
    }
    return total;
}

Json report_to_json(const protocol::FidelityReport& report,
                    protocol::RunMode run_mode) {
    Json j;
    j["schema"] = "ionsim-protocol-report/1";
    j["run_mode"] = protocol::to_string(run_mode);
    j["fidelity"] = report.fidelity;
    j["relative_branch_phase_rad"] = report.relative_branch_phase_rad;
    Json components = Json::array();
    for (const auto& c : report.components) {
        components.push_back(Json{{"qubit", c.q == fock::kQubitExcited ? "e" : "g"},
                                  {"nx", c.nx},
                                  {"ny", c.ny},
                                  {"target_abs", c.target_abs},
                                  {"achieved_abs", c.achieved_abs},
                                  {"phase_rad", c.phase_rad}});
    }
    j["components"] = components;
    j["leakage"] = report.leakage;
    j["entropy_x_bits"] = report.entropy_x_bits;
    j["max_norm_drift"] = report.max_norm_drift;
    j["warnings"] = report.warnings;
    Json steps = Json::array();
    for (const auto& s : report.steps) {
        steps.push_back(Json{{"index", s.index},
                             {"kind", s.kind},
                             {"duration", s.duration},
                             {"norm", s.norm},
                             {"excited_probability", s.excited_probability},
                             {"leakage", s.leakage}});
    }
    j["steps"] = steps;
    return j;
}

} // namespace

protocol::Protocol protocol_from_config(const RunConfig& cfg, double eta_override) {
    if (!cfg.protocol) {
        throw std::invalid_argument("config has no 'protocol' section");
    }
    protocol::Protocol proto{fock::SpaceDims(cfg.dims.x, cfg.dims.y), cfg.dims.guard,
                             cfg.protocol->initial, cfg.protocol->steps};
    if (eta_override > 0.0) {
        for (auto& step : proto.steps) {
            if (auto* pulse = std::get_if<protocol::PulseStep>(&step)) {
                if (pulse->pulse.model == Model::Effective) {
                    pulse->pulse.params = coupling::CouplingParams(
                        eta_override, pulse->pulse.params.k, pulse->pulse.params.omega);
                }
            }
        }
    }
    return proto;
}

int run_simulate(const RunConfig& cfg, const std::string& out_path) {
    if (!cfg.pulse) throw std::invalid_argument("simulate needs a 'pulse' section");
    if (!cfg.time_grid) throw std::invalid_argument("simulate needs a 'time_grid' section");
    const auto& pulse = cfg.pulse->spec;
    for (const auto& warning : pulse.validate()) {
        std::cerr << "warning: " << warning << "\n";
    }
    const fock::HybridState initial = initial_from_config(cfg);
    const int samples = cfg.time_grid->samples;
    std::vector<double> times(samples);
    for (int i = 0; i < samples; ++i) {
        times[i] = cfg.time_grid->t_max * i / (samples - 1);
    }

    std::ostringstream out;
    out << "# ionsim timeseries v1\n";
    out << "t,P_e";
    for (const auto& level : cfg.tracked_levels) {
        out << ",pop_" << dynamics::to_string(level.axis) << level.n;
    }
    out << ",norm,leakage";
    const bool pre_rwa = pulse.model == Model::FullPreRwa;
    if (pre_rwa) out << ",norm_drift";
    out << "\n";

    auto emit_row = [&](double t, const fock::HybridState& state, double drift) {
        out << format_double(t) << "," << format_double(dynamics::excited_probability(state));
        for (const auto& level : cfg.tracked_levels) {
            out << "," << format_double(tracked_population(state, level));
        }
        out << "," << format_double(state.norm()) << ","
            << format_double(state.leakage(cfg.dims.guard));
        if (pre_rwa) out << "," << format_double(drift);
        out << "\n";
    };

    if (pre_rwa) {
        double drift = 0.0;
        dynamics::evolve_pre_rwa_sampled(
            pulse, initial, times, cfg.ode_tol,
            [&](double t, const fock::HybridState& state) {
                drift = std::max(drift, std::abs(state.norm() - 1.0));
                emit_row(t, state, drift);
            });
    } else {
        const int mode_dim = pulse.axis == Axis::X ? cfg.dims.x : cfg.dims.y;
        for (double t : times) {
            const auto u = dynamics::u_analytic(mode_dim, pulse, t);
            emit_row(t, u.apply(initial), 0.0);
        }
    }
    write_text(out_path, out.str());
    return 0;
}

int run_protocol(const RunConfig& cfg, const std::string& out_path,
                 const std::string& trajectory_path) {
    const protocol::Protocol proto = protocol_from_config(cfg);
    const protocol::CompiledProtocol compiled = protocol::compile(proto);
    for (const auto& warning : compiled.warnings) {
        std::cerr << "warning: " << warning << "\n";
    }
    const fock::HybridState target =
        protocol::moon_target(cfg.protocol->target_m, cfg.protocol->target_n,
                              proto.dims, proto.guard);
    protocol::RunOptions options;
    options.ode_tol = cfg.ode_tol;
    options.record_states = cfg.protocol->record_trajectory || !trajectory_path.empty();
    const protocol::RunResult result =
        protocol::run(compiled, cfg.run_mode, &target, options);
    write_json(out_path, report_to_json(result.report, cfg.run_mode));

    if (!trajectory_path.empty()) {
        Json traj;
        traj["schema"] = "ionsim-trajectory/1";
        Json entries = Json::array();
        for (std::size_t i = 0; i < result.states.size(); ++i) {
            const auto& state = result.states[i];
            Json amplitudes = Json::array();
            const fock::SpaceDims dims = state.dims();
            for (int q = 0; q < 2; ++q) {
                for (int nx = 0; nx < dims.x; ++nx) {
                    for (int ny = 0; ny < dims.y; ++ny) {
                        const auto a = state.amplitude(q, nx, ny);
                        if (std::abs(a) <= 1e-9) continue;
                        amplitudes.push_back(Json{{"qubit", q == 0 ? "e" : "g"},
                                                  {"nx", nx},
                                                  {"ny", ny},
                                                  {"re", a.real()},
                                                  {"im", a.imag()}});
                    }
                }
            }
            entries.push_back(Json{{"step", static_cast<int>(i)},
                                   {"kind", result.report.steps[i].kind},
                                   {"amplitudes", amplitudes}});
        }
        traj["states"] = entries;
        write_json(trajectory_path, traj);
    }
    return 0;
}

int run_scan(const RunConfig& cfg, const std::string& out_path) {
    if (!cfg.scan) throw std::invalid_argument("scan needs a 'scan' section");
    Json j;
    if (const auto* comm = std::get_if<config::CommensurabilityScanConfig>(&*cfg.scan)) {
        const coupling::BranchPair pair(comm->n_upper, comm->n_lower, comm->k);
        const auto report = coupling::commensurability_scan(pair, comm->omega, comm->grid);

        std::vector<double> full_run(report.grid.size(), -1.0);
        if (comm->with_full_run) {
            if (!cfg.protocol) {
                throw std::invalid_argument(
                    "scan.with_full_run needs a 'protocol' section to replay");
            }
            threading::parallel_for_indexed(
                static_cast<int>(report.grid.size()), [&](int i) {
                    const auto& pt = report.grid[i];
                    if (pt.degenerate) return;
                    const auto proto = protocol_from_config(cfg, pt.eta);
                    const auto compiled = protocol::compile(proto);
                    const auto target = protocol::moon_target(
                        cfg.protocol->target_m, cfg.protocol->target_n, proto.dims,
                        proto.guard);
                    const auto result = protocol::run(
                        compiled, protocol::RunMode::SharedClock, &target, {});
                    full_run[i] = result.report.fidelity;
                });
        }

        j["schema"] = "ionsim-scan-report/1";
        j["type"] = "commensurability";
        j["pair"] = Json{{"n_upper", pair.n_upper}, {"n_lower", pair.n_lower},
                         {"k", pair.k}};
        Json rows = Json::array();
        double best_full = -1.0;
        bool any_good = false;
        for (std::size_t i = 0; i < report.grid.size(); ++i) {
            const auto& pt = report.grid[i];
            Json row{{"eta", pt.eta},
                     {"rate_ratio", pt.rate_ratio},
                     {"lower_phase_rad", pt.lower_phase},
                     {"predicted_infidelity", pt.predicted_infidelity},
                     {"predicted_fidelity", pt.predicted_fidelity},
                     {"single_pulse_fidelity", pt.single_pulse_fidelity},
                     {"exact", pt.exact},
                     {"degenerate", pt.degenerate}};
            if (comm->with_full_run) {
                row["full_run_fidelity"] = full_run[i] < 0.0 ? 0.0 : full_run[i];
                best_full = std::max(best_full, full_run[i]);
            }
            if (pt.predicted_fidelity >= 0.999) any_good = true;
            rows.push_back(row);
        }
        j["rows"] = rows;
        j["best_index"] = report.best_index;
        if (report.best_index >= 0) {
            j["best_eta"] = report.grid[report.best_index].eta;
            j["best_predicted_fidelity"] =
                report.grid[report.best_index].predicted_fidelity;
        }
        j["any_predicted_fidelity_ge_0.999"] = any_good;
        if (comm->with_full_run) j["best_full_run_fidelity"] = best_full;
    } else {
        const auto& res = std::get<config::ResonanceScanConfig>(*cfg.scan);
        const auto report = dynamics::resonance_scan(res.pulse, res.grid, res.options);
        j["schema"] = "ionsim-scan-report/1";
        j["type"] = "resonance";
        Json rows = Json::array();
        for (const auto& pt : report.grid) {
            rows.push_back(Json{{"delta", pt.delta}, {"contrast", pt.contrast}});
        }
        j["rows"] = rows;
        j["peak_index"] = report.peak_index;
        j["peak_delta"] = report.peak_delta;
        j["fwhm"] = report.fwhm;
    }
    write_json(out_path, j);
    return 0;
}

int run_verify(const RunConfig& cfg, const std::string& out_path,
               std::ostream& console) {
    const auto results = verify::run_checks(cfg.verify_options);
    for (const auto& r : results) {
        console << (r.passed ? "[PASS] " : "[FAIL] ") << r.name << "  worst "
                << format_double(r.worst) << "  (threshold " << format_double(r.threshold)
                << ")";
        if (!r.detail.empty()) console << "  " << r.detail;
        console << "\n";
    }
    const bool ok = verify::all_passed(results);
    console << (ok ? "all checks passed" : "CHECKS FAILED") << "\n";
    if (!out_path.empty()) write_json(out_path, verify::report_json(results));
    return ok ? 0 : 1;
}

} // namespace ionsim::runner
