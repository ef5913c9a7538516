#include "ionsim/config.hpp"

#include <algorithm>
#include <cmath>

namespace ionsim::config {

namespace {

using dynamics::Axis;
using dynamics::Model;
using protocol::DurationSpec;
using protocol::QubitPreset;

class Cursor {
public:
    Cursor(const Json* node, std::string path) : node_(node), path_(std::move(path)) {}

    const Json& raw() const { return *node_; }
    const std::string& path() const { return path_; }

    [[noreturn]] void fail(const std::string& message) const {
        throw ConfigError(path_.empty() ? "/" : path_, message);
    }

    bool has(const std::string& key) const {
        return node_->is_object() && node_->contains(key);
    }

    Cursor child(const std::string& key) const {
        if (!node_->is_object()) fail("expected an object");
        if (!node_->contains(key)) fail("missing required field '" + key + "'");
        return Cursor(&(*node_)[key], path_ + "/" + key);
    }

    std::optional<Cursor> maybe(const std::string& key) const {
        if (!has(key)) return std::nullopt;
        return child(key);
    }

    std::size_t array_size() const {
        if (!node_->is_array()) fail("expected an array");
        return node_->size();
    }

    Cursor at(std::size_t index) const {
        return Cursor(&(*node_)[index], path_ + "/" + std::to_string(index));
    }

    void expect_keys(std::initializer_list<const char*> allowed) const {
        if (!node_->is_object()) fail("expected an object");
        for (const auto& [key, value] : node_->items()) {
            if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) {
                    return key == a;
                }) == allowed.end()) {
                fail("unknown field '" + key + "'");
            }
        }
    }

    double number() const {
        if (!node_->is_number()) fail("expected a number");
        return node_->get<double>();
    }

    int integer() const {
        if (!node_->is_number_integer()) fail("expected an integer");
        return node_->get<int>();
    }

    bool boolean() const {
        if (!node_->is_boolean()) fail("expected a boolean");
        return node_->get<bool>();
    }

    std::string str() const {
        if (!node_->is_string()) fail("expected a string");
        return node_->get<std::string>();
    }

private:
    const Json* node_;
    std::string path_;
};

Axis parse_axis(const Cursor& c) {
    const std::string s = c.str();
    if (s == "x") return Axis::X;
    if (s == "y") return Axis::Y;
    c.fail("axis must be 'x' or 'y'");
}

Model parse_model(const Cursor& c) {
    const std::string s = c.str();
    if (s == "effective") return Model::Effective;
    if (s == "quadratic") return Model::Quadratic;
    if (s == "full_pre_rwa") return Model::FullPreRwa;
    c.fail("model must be 'effective', 'quadratic' or 'full_pre_rwa'");
}

QubitPreset parse_preset(const Cursor& c) {
    const std::string s = c.str();
    if (s == "e") return QubitPreset::Excited;
    if (s == "g") return QubitPreset::Ground;
    if (s == "superposition") return QubitPreset::Superposition;
    c.fail("qubit must be 'e', 'g' or 'superposition'");
}

protocol::RunMode parse_run_mode(const Cursor& c) {
    const std::string s = c.str();
    if (s == "ideal_per_branch") return protocol::RunMode::IdealPerBranch;
    if (s == "shared_clock") return protocol::RunMode::SharedClock;
    if (s == "pre_rwa") return protocol::RunMode::PreRwa;
    c.fail("run_mode must be 'ideal_per_branch', 'shared_clock' or 'pre_rwa'");
}

DurationSpec parse_duration(const Cursor& c) {
    if (c.raw().is_number()) {
        return DurationSpec::literal_time(c.number());
    }
    c.expect_keys({"type", "n"});
    const std::string type = c.child("type").str();
    const int n = c.child("n").integer();
    if (n < 0) c.child("n").fail("level must be >= 0");
    if (type == "pi_pulse") return DurationSpec::pi_pulse(n);
    if (type == "quadratic_ground") return DurationSpec::quadratic_ground(n);
    c.child("type").fail("duration type must be 'pi_pulse' or 'quadratic_ground'");
}

PulseEntry parse_pulse(const Cursor& c) {
    c.expect_keys({"axis", "model", "k", "eta", "omega", "duration", "omega_eff",
                   "n_ref", "nu", "delta"});
    PulseEntry entry;
    entry.spec.axis = parse_axis(c.child("axis"));
    entry.spec.model = c.has("model") ? parse_model(c.child("model")) : Model::Effective;
    const double eta = c.has("eta") ? c.child("eta").number() : 0.0;
    const double omega = c.has("omega") ? c.child("omega").number() : 1.0;
    int k = c.has("k") ? c.child("k").integer() : 0;
    if (entry.spec.model == Model::Quadratic) {
        if (c.has("k") && k != 2) c.child("k").fail("quadratic pulses have k = 2");
        k = 2;
    }
    try {
        entry.spec.params = coupling::CouplingParams(eta, k, omega);
    } catch (const std::invalid_argument& e) {
        c.fail(e.what());
    }
    if (entry.spec.model == Model::Quadratic) {
        const int n_ref = c.has("n_ref") ? c.child("n_ref").integer() : 0;
        if (c.has("omega_eff")) {
            entry.spec.omega_eff = c.child("omega_eff").number();
        } else {
            if (!c.has("eta")) c.fail("quadratic pulse needs 'omega_eff' or 'eta'");
            entry.spec.omega_eff =
                protocol::quadratic_coupling_from_effective(eta, omega, n_ref);
        }
    } else if (c.has("omega_eff") || c.has("n_ref")) {
        c.fail("'omega_eff'/'n_ref' apply only to quadratic pulses");
    }
    if (c.has("nu")) entry.spec.nu = c.child("nu").number();
    if (c.has("delta")) {
        entry.spec.delta = c.child("delta").number();
    } else if (entry.spec.nu > 0.0) {
        entry.spec.delta = dynamics::PulseSpec::sideband_resonant_delta(k, entry.spec.nu);
    }
    if (entry.spec.model == Model::FullPreRwa && !(entry.spec.nu > 0.0)) {
        c.fail("full_pre_rwa pulses require 'nu' > 0");
    }
    if (!c.has("duration")) {
        entry.duration = DurationSpec::literal_time(0.0);
    } else {
        entry.duration = parse_duration(c.child("duration"));
    }
    return entry;
}

protocol::InitialState parse_initial(const Cursor& c) {
    c.expect_keys({"qubit", "nx", "ny"});
    protocol::InitialState initial;
    initial.qubit = parse_preset(c.child("qubit"));
    if (c.has("nx")) initial.nx = c.child("nx").integer();
    if (c.has("ny")) initial.ny = c.child("ny").integer();
    if (initial.nx < 0 || initial.ny < 0) c.fail("initial levels must be >= 0");
    return initial;
}

protocol::Step parse_step(const Cursor& c) {
    if (!c.raw().is_object() || c.raw().size() != 1) {
        c.fail("each step is an object with exactly one of 'pulse', 'carrier', "
               "'set_qubit'");
    }
    if (c.has("pulse")) {
        PulseEntry entry = parse_pulse(c.child("pulse"));
        return protocol::PulseStep{entry.spec, entry.duration};
    }
    if (c.has("carrier")) {
        Cursor carrier = c.child("carrier");
        carrier.expect_keys({"theta", "phi"});
        protocol::CarrierStep step;
        step.theta = carrier.child("theta").number();
        step.phi = carrier.has("phi") ? carrier.child("phi").number() : 0.0;
        return step;
    }
    if (c.has("set_qubit")) {
        return protocol::SetQubitStep{parse_preset(c.child("set_qubit"))};
    }
    c.fail("unknown step name '" + c.raw().items().begin().key() + "'");
}

ProtocolConfig parse_protocol(const Cursor& c) {
    c.expect_keys({"initial", "steps", "target", "record_trajectory"});
    ProtocolConfig cfg;
    cfg.initial = parse_initial(c.child("initial"));
    Cursor steps = c.child("steps");
    const std::size_t count = steps.array_size();
    if (count == 0) steps.fail("protocol needs at least one step");
    for (std::size_t i = 0; i < count; ++i) {
        cfg.steps.push_back(parse_step(steps.at(i)));
    }
    Cursor target = c.child("target");
    target.expect_keys({"M", "N"});
    cfg.target_m = target.child("M").integer();
    cfg.target_n = target.child("N").integer();
    if (auto rec = c.maybe("record_trajectory")) cfg.record_trajectory = rec->boolean();
    return cfg;
}

ScanConfig parse_scan(const Cursor& c) {
    const std::string type = c.child("type").str();
    if (type == "commensurability") {
        c.expect_keys({"type", "pair", "omega", "eta_grid", "with_full_run"});
        CommensurabilityScanConfig cfg;
        Cursor pair = c.child("pair");
        pair.expect_keys({"n_upper", "n_lower", "k"});
        cfg.n_upper = pair.child("n_upper").integer();
        cfg.n_lower = pair.child("n_lower").integer();
        cfg.k = pair.child("k").integer();
        if (auto omega = c.maybe("omega")) cfg.omega = omega->number();
        Cursor grid = c.child("eta_grid");
        grid.expect_keys({"min", "max", "points"});
        cfg.grid.min = grid.child("min").number();
        cfg.grid.max = grid.child("max").number();
        cfg.grid.points = grid.child("points").integer();
        if (auto full = c.maybe("with_full_run")) cfg.with_full_run = full->boolean();
        return cfg;
    }
    if (type == "resonance") {
        c.expect_keys({"type", "pulse", "delta_grid", "mode_dim", "samples", "tol",
                       "span", "initial_n"});
        ResonanceScanConfig cfg;
        PulseEntry entry = parse_pulse(c.child("pulse"));
        cfg.pulse = entry.spec;
        if (!(cfg.pulse.nu > 0.0)) {
            c.child("pulse").fail("resonance scan pulses require 'nu' > 0");
        }
        Cursor grid = c.child("delta_grid");
        grid.expect_keys({"min", "max", "points"});
        cfg.grid.min = grid.child("min").number();
        cfg.grid.max = grid.child("max").number();
        cfg.grid.points = grid.child("points").integer();
        if (auto v = c.maybe("mode_dim")) cfg.options.mode_dim = v->integer();
        if (auto v = c.maybe("samples")) cfg.options.samples = v->integer();
        if (auto v = c.maybe("tol")) cfg.options.tol = v->number();
        if (auto v = c.maybe("span")) cfg.options.span = v->number();
        if (auto v = c.maybe("initial_n")) cfg.options.initial_n = v->integer();
        return cfg;
    }
    c.child("type").fail("scan type must be 'commensurability' or 'resonance'");
}

void parse_verify(const Cursor& c, verify::VerifyOptions& opts) {
    c.expect_keys({"mode_dim", "sideband_orders", "etas", "literal_times",
                   "t0_multiples", "quadratic_couplings", "equivalence_tol",
                   "fault_injection", "timing_levels", "timing_eta", "timing_k",
                   "timing_pe_tol", "timing_rel_tol", "laguerre_n_max",
                   "laguerre_k_max", "laguerre_xs", "laguerre_tol", "protocol_dim",
                   "protocol_guard", "protocol_k", "protocol_eta", "protocol_quad_eta",
                   "protocol_fidelity_tol", "kernel_tol", "entropy_tol", "scan_points",
                   "scan_eta_min", "scan_eta_max", "scan_agreement_tol",
                   "scan_good_fidelity", "norm_tol", "unitarity_tol", "rwa_nu",
                   "rwa_eta", "rwa_k", "rwa_mode_dim", "rwa_tol", "rwa_samples",
                   "rwa_max_deviation", "resonance_k", "resonance_eta", "resonance_nu",
                   "resonance_points", "resonance_band", "resonance_mode_dim",
                   "resonance_tol", "resonance_samples", "preset"});
    if (auto preset = c.maybe("preset")) {
        const std::string name = preset->str();
        if (name == "fast") {
            opts = verify::fast_options();
        } else if (name != "default") {
            preset->fail("preset must be 'default' or 'fast'");
        }
    }
    auto set_int = [&](const char* key, int& value) {
        if (auto v = c.maybe(key)) value = v->integer();
    };
    auto set_num = [&](const char* key, double& value) {
        if (auto v = c.maybe(key)) value = v->number();
    };
    auto set_ints = [&](const char* key, std::vector<int>& value) {
        if (auto v = c.maybe(key)) {
            value.clear();
            for (std::size_t i = 0; i < v->array_size(); ++i) {
                value.push_back(v->at(i).integer());
            }
        }
    };
    auto set_nums = [&](const char* key, std::vector<double>& value) {
        if (auto v = c.maybe(key)) {
            value.clear();
            for (std::size_t i = 0; i < v->array_size(); ++i) {
                value.push_back(v->at(i).number());
            }
        }
    };
    set_int("mode_dim", opts.mode_dim);
    set_ints("sideband_orders", opts.sideband_orders);
    set_nums("etas", opts.etas);
    set_nums("literal_times", opts.literal_times);
    set_nums("t0_multiples", opts.t0_multiples);
    set_nums("quadratic_couplings", opts.quadratic_couplings);
    set_num("equivalence_tol", opts.equivalence_tol);
    set_num("fault_injection", opts.fault_injection);
    set_ints("timing_levels", opts.timing_levels);
    set_num("timing_eta", opts.timing_eta);
    set_int("timing_k", opts.timing_k);
    set_num("timing_pe_tol", opts.timing_pe_tol);
    set_num("timing_rel_tol", opts.timing_rel_tol);
    set_int("laguerre_n_max", opts.laguerre_n_max);
    set_int("laguerre_k_max", opts.laguerre_k_max);
    set_nums("laguerre_xs", opts.laguerre_xs);
    set_num("laguerre_tol", opts.laguerre_tol);
    set_int("protocol_dim", opts.protocol_dim);
    set_int("protocol_guard", opts.protocol_guard);
    set_int("protocol_k", opts.protocol_k);
    set_num("protocol_eta", opts.protocol_eta);
    set_num("protocol_quad_eta", opts.protocol_quad_eta);
    set_num("protocol_fidelity_tol", opts.protocol_fidelity_tol);
    set_num("kernel_tol", opts.kernel_tol);
    set_num("entropy_tol", opts.entropy_tol);
    set_int("scan_points", opts.scan_points);
    set_num("scan_eta_min", opts.scan_eta_min);
    set_num("scan_eta_max", opts.scan_eta_max);
    set_num("scan_agreement_tol", opts.scan_agreement_tol);
    set_num("scan_good_fidelity", opts.scan_good_fidelity);
    set_num("norm_tol", opts.norm_tol);
    set_num("unitarity_tol", opts.unitarity_tol);
    set_num("rwa_nu", opts.rwa_nu);
    set_num("rwa_eta", opts.rwa_eta);
    set_int("rwa_k", opts.rwa_k);
    set_int("rwa_mode_dim", opts.rwa_mode_dim);
    set_num("rwa_tol", opts.rwa_tol);
    set_int("rwa_samples", opts.rwa_samples);
    set_num("rwa_max_deviation", opts.rwa_max_deviation);
    set_int("resonance_k", opts.resonance_k);
    set_num("resonance_eta", opts.resonance_eta);
    set_num("resonance_nu", opts.resonance_nu);
    set_int("resonance_points", opts.resonance_points);
    set_num("resonance_band", opts.resonance_band);
    set_int("resonance_mode_dim", opts.resonance_mode_dim);
    set_num("resonance_tol", opts.resonance_tol);
    set_int("resonance_samples", opts.resonance_samples);
}

// --- serialization ---------------------------------------------------------

Json dump_duration(const DurationSpec& d) {
    switch (d.kind) {
        case DurationSpec::Kind::Literal: return d.literal;
        case DurationSpec::Kind::PiPulse:
            return Json{{"type", "pi_pulse"}, {"n", d.n}};
        default:
            return Json{{"type", "quadratic_ground"}, {"n", d.n}};
    }
}

Json dump_pulse(const PulseEntry& entry) {
    Json j;
    j["axis"] = dynamics::to_string(entry.spec.axis);
    j["model"] = dynamics::to_string(entry.spec.model);
    j["k"] = entry.spec.params.k;
    j["eta"] = entry.spec.params.eta;
    j["omega"] = entry.spec.params.omega;
    if (entry.spec.model == Model::Quadratic) j["omega_eff"] = entry.spec.omega_eff;
    if (entry.spec.nu > 0.0) {
        j["nu"] = entry.spec.nu;
        j["delta"] = entry.spec.delta;
    }
    j["duration"] = dump_duration(entry.duration);
    return j;
}

Json dump_initial(const protocol::InitialState& initial) {
    return Json{{"qubit", protocol::to_string(initial.qubit)},
                {"nx", initial.nx},
                {"ny", initial.ny}};
}

Json dump_step(const protocol::Step& step) {
    Json j;
    if (const auto* pulse = std::get_if<protocol::PulseStep>(&step)) {
        j["pulse"] = dump_pulse(PulseEntry{pulse->pulse, pulse->duration});
    } else if (const auto* carrier = std::get_if<protocol::CarrierStep>(&step)) {
        j["carrier"] = Json{{"theta", carrier->theta}, {"phi", carrier->phi}};
    } else {
        j["set_qubit"] =
            protocol::to_string(std::get<protocol::SetQubitStep>(step).preset);
    }
    return j;
}

Json dump_verify(const verify::VerifyOptions& o) {
    Json j;
    j["mode_dim"] = o.mode_dim;
    j["sideband_orders"] = o.sideband_orders;
    j["etas"] = o.etas;
    j["literal_times"] = o.literal_times;
    j["t0_multiples"] = o.t0_multiples;
    j["quadratic_couplings"] = o.quadratic_couplings;
    j["equivalence_tol"] = o.equivalence_tol;
    j["fault_injection"] = o.fault_injection;
    j["timing_levels"] = o.timing_levels;
    j["timing_eta"] = o.timing_eta;
    j["timing_k"] = o.timing_k;
    j["timing_pe_tol"] = o.timing_pe_tol;
    j["timing_rel_tol"] = o.timing_rel_tol;
    j["laguerre_n_max"] = o.laguerre_n_max;
    j["laguerre_k_max"] = o.laguerre_k_max;
    j["laguerre_xs"] = o.laguerre_xs;
    j["laguerre_tol"] = o.laguerre_tol;
    j["protocol_dim"] = o.protocol_dim;
    j["protocol_guard"] = o.protocol_guard;
    j["protocol_k"] = o.protocol_k;
    j["protocol_eta"] = o.protocol_eta;
    j["protocol_quad_eta"] = o.protocol_quad_eta;
    j["protocol_fidelity_tol"] = o.protocol_fidelity_tol;
    j["kernel_tol"] = o.kernel_tol;
    j["entropy_tol"] = o.entropy_tol;
    j["scan_points"] = o.scan_points;
    j["scan_eta_min"] = o.scan_eta_min;
    j["scan_eta_max"] = o.scan_eta_max;
    j["scan_agreement_tol"] = o.scan_agreement_tol;
    j["scan_good_fidelity"] = o.scan_good_fidelity;
    j["norm_tol"] = o.norm_tol;
    j["unitarity_tol"] = o.unitarity_tol;
    j["rwa_nu"] = o.rwa_nu;
    j["rwa_eta"] = o.rwa_eta;
    j["rwa_k"] = o.rwa_k;
    j["rwa_mode_dim"] = o.rwa_mode_dim;
    j["rwa_tol"] = o.rwa_tol;
    j["rwa_samples"] = o.rwa_samples;
    j["rwa_max_deviation"] = o.rwa_max_deviation;
    j["resonance_k"] = o.resonance_k;
    j["resonance_eta"] = o.resonance_eta;
    j["resonance_nu"] = o.resonance_nu;
    j["resonance_points"] = o.resonance_points;
    j["resonance_band"] = o.resonance_band;
    j["resonance_mode_dim"] = o.resonance_mode_dim;
    j["resonance_tol"] = o.resonance_tol;
    j["resonance_samples"] = o.resonance_samples;
    return j;
}

} // namespace

RunConfig load_run_config(const Json& document) {
    Cursor root(&document, "");
    root.expect_keys({"schema", "dims", "run_mode", "initial", "pulse", "time_grid",
                      "tracked_levels", "ode_tol", "protocol", "scan", "verify",
                      "output"});
    RunConfig cfg;
    if (auto dims = root.maybe("dims")) {
        dims->expect_keys({"x", "y", "guard"});
        if (auto v = dims->maybe("x")) cfg.dims.x = v->integer();
        if (auto v = dims->maybe("y")) cfg.dims.y = v->integer();
        if (auto v = dims->maybe("guard")) cfg.dims.guard = v->integer();
        if (cfg.dims.x < 2 || cfg.dims.y < 2) dims->fail("mode dims must be >= 2");
        if (cfg.dims.guard < 1 || cfg.dims.guard >= std::min(cfg.dims.x, cfg.dims.y)) {
            dims->fail("guard must satisfy 1 <= guard < min(x, y)");
        }
    }
    if (auto mode = root.maybe("run_mode")) cfg.run_mode = parse_run_mode(*mode);
    if (auto initial = root.maybe("initial")) cfg.initial = parse_initial(*initial);
    if (auto pulse = root.maybe("pulse")) cfg.pulse = parse_pulse(*pulse);
    if (auto grid = root.maybe("time_grid")) {
        grid->expect_keys({"t_max", "samples"});
        cfg.time_grid = TimeGridConfig{};
        cfg.time_grid->t_max = grid->child("t_max").number();
        cfg.time_grid->samples = grid->child("samples").integer();
        if (!(cfg.time_grid->t_max > 0.0)) grid->child("t_max").fail("must be > 0");
        if (cfg.time_grid->samples < 2) grid->child("samples").fail("need >= 2 samples");
    }
    if (auto tracked = root.maybe("tracked_levels")) {
        for (std::size_t i = 0; i < tracked->array_size(); ++i) {
            Cursor item = tracked->at(i);
            item.expect_keys({"axis", "n"});
            TrackedLevel level;
            level.axis = parse_axis(item.child("axis"));
            level.n = item.child("n").integer();
            if (level.n < 0) item.child("n").fail("level must be >= 0");
            cfg.tracked_levels.push_back(level);
        }
    }
    if (auto tol = root.maybe("ode_tol")) {
        cfg.ode_tol = tol->number();
        if (!(cfg.ode_tol >= 1e-12 && cfg.ode_tol <= 1e-6)) {
            tol->fail("ode_tol must lie in [1e-12, 1e-6]");
        }
    }
    if (auto proto = root.maybe("protocol")) cfg.protocol = parse_protocol(*proto);
    if (auto scan = root.maybe("scan")) cfg.scan = parse_scan(*scan);
    if (auto ver = root.maybe("verify")) parse_verify(*ver, cfg.verify_options);
    if (auto output = root.maybe("output")) cfg.output_path = output->str();
    return cfg;
}

Json serialize(const RunConfig& cfg) {
    Json j;
    j["schema"] = "ionsim-config/1";
    j["dims"] = Json{{"x", cfg.dims.x}, {"y", cfg.dims.y}, {"guard", cfg.dims.guard}};
    j["run_mode"] = protocol::to_string(cfg.run_mode);
    j["initial"] = dump_initial(cfg.initial);
    if (cfg.pulse) j["pulse"] = dump_pulse(*cfg.pulse);
    if (cfg.time_grid) {
        j["time_grid"] =
            Json{{"t_max", cfg.time_grid->t_max}, {"samples", cfg.time_grid->samples}};
    }
    if (!cfg.tracked_levels.empty()) {
        Json levels = Json::array();
        for (const auto& level : cfg.tracked_levels) {
            levels.push_back(Json{{"axis", dynamics::to_string(level.axis)},
                                  {"n", level.n}});
        }
        j["tracked_levels"] = levels;
    }
    j["ode_tol"] = cfg.ode_tol;
    if (cfg.protocol) {
        Json p;
        p["initial"] = dump_initial(cfg.protocol->initial);
        Json steps = Json::array();
        for (const auto& step : cfg.protocol->steps) steps.push_back(dump_step(step));
        p["steps"] = steps;
        p["target"] = Json{{"M", cfg.protocol->target_m}, {"N", cfg.protocol->target_n}};
        p["record_trajectory"] = cfg.protocol->record_trajectory;
        j["protocol"] = p;
    }
    if (cfg.scan) {
        Json s;
        if (const auto* comm = std::get_if<CommensurabilityScanConfig>(&*cfg.scan)) {
            s["type"] = "commensurability";
            s["pair"] = Json{{"n_upper", comm->n_upper},
                             {"n_lower", comm->n_lower},
                             {"k", comm->k}};
            s["omega"] = comm->omega;
            s["eta_grid"] = Json{{"min", comm->grid.min},
                                 {"max", comm->grid.max},
                                 {"points", comm->grid.points}};
            s["with_full_run"] = comm->with_full_run;
        } else {
            const auto& res = std::get<ResonanceScanConfig>(*cfg.scan);
            s["type"] = "resonance";
            s["pulse"] = dump_pulse(PulseEntry{res.pulse, DurationSpec::literal_time(0.0)});
            s["delta_grid"] = Json{{"min", res.grid.min},
                                   {"max", res.grid.max},
                                   {"points", res.grid.points}};
            s["mode_dim"] = res.options.mode_dim;
            s["samples"] = res.options.samples;
            s["tol"] = res.options.tol;
            s["span"] = res.options.span;
            s["initial_n"] = res.options.initial_n;
        }
        j["scan"] = s;
    }
    j["verify"] = dump_verify(cfg.verify_options);
    if (cfg.output_path) j["output"] = *cfg.output_path;
    return j;
}

Json parse_document(const std::string& text) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("/", std::string("syntax error: ") + e.what());
    }
}

void apply_override(Json& document, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("/", "--set expects dotted.path=value, got '" + assignment + "'");
    }
    const std::string path = assignment.substr(0, eq);
    const std::string value_text = assignment.substr(eq + 1);
    Json value;
    try {
        value = Json::parse(value_text);
    } catch (const nlohmann::json::parse_error&) {
        value = value_text;  // plain string
    }
    Json* node = &document;
    std::size_t begin = 0;
    while (true) {
        const auto dot = path.find('.', begin);
        const std::string key = path.substr(begin, dot - begin);
        if (key.empty()) throw ConfigError("/", "--set path has an empty segment");
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        begin = dot + 1;
    }
}

} // namespace ionsim::config
