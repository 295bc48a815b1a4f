#include "sopfx/config.hpp"

#include "sopfx/error.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace sopfx::harness {

namespace {

using nlohmann::ordered_json;
using json = nlohmann::json;

template <class T>
T get_as(const json& j, const std::string& key) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + key + "' has the wrong type: " + j.dump());
    }
}

class Section {
public:
    Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
        if (!j_.is_object()) throw ConfigError("config section '" + name_ + "' must be an object");
    }

    template <class T>
    void read(const char* key, T& out) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return;
        out = get_as<T>(*it, path(key));
    }

    bool has(const char* key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it != j_.end() && !it->is_null();
    }

    const json& at(const char* key) const { return j_.at(key); }
    std::string path(const char* key) const { return name_.empty() ? key : name_ + "." + key; }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError("unknown config key '" + path(it.key().c_str()) + "'");
        }
    }

private:
    const json& j_;
    std::string name_;
    std::set<std::string> seen_;
};

fx::Rounding parse_rounding(const std::string& s) {
    if (s == "ties-away") return fx::Rounding::NearestTiesAway;
    if (s == "ties-even") return fx::Rounding::NearestTiesEven;
    throw ConfigError("eq.rounding must be 'ties-away' or 'ties-even', got '" + s + "'");
}

std::string rounding_name(fx::Rounding r) { return r == fx::Rounding::NearestTiesEven ? "ties-even" : "ties-away"; }

void read_channel(const json& j, channel::ChannelConfig& c) {
    Section s(j, "channel");
    s.read("n_symbols", c.n_symbols);
    s.read("sps", c.sps);
    s.read("rolloff", c.rolloff);
    s.read("rrc_span", c.rrc_span);
    s.read("snr_db", c.snr_db);
    s.read("linewidth_norm", c.linewidth_norm);
    s.read("cfo_norm", c.cfo_norm);
    s.read("vib_freq_norm", c.vib_freq_norm);
    s.read("vib_depth_rad", c.vib_depth_rad);
    s.read("sop_axis", c.sop_axis);
    s.read("sop_static_rotation", c.sop_static_rotation);
    s.read("truth_stride", c.truth_stride);
    if (s.has("iq_imbalance")) {
        Section iq(s.at("iq_imbalance"), "channel.iq_imbalance");
        channel::IqImbalance v;
        iq.read("gain_db", v.gain_db);
        iq.read("phase_deg", v.phase_deg);
        iq.finish();
        c.iq_imbalance = v;
    } else {
        c.iq_imbalance.reset();
    }
    if (s.has("skew_samples")) {
        c.skew_samples = get_as<double>(s.at("skew_samples"), "channel.skew_samples");
    } else {
        c.skew_samples.reset();
    }
    s.finish();
}

void read_eq(const json& j, ExperimentConfig& cfg) {
    Section s(j, "eq");
    s.read("n_taps", cfg.eq.n_taps);
    s.read("mu_cma", cfg.eq.mu_cma);
    s.read("r2", cfg.eq.r2);
    s.read("update_stride", cfg.eq.update_stride);
    s.read("snapshot_stride", cfg.eq.snapshot_stride);
    s.read("tap_guard_bits", cfg.eq.tap_guard_bits);
    s.read("int_bits", cfg.int_bits);
    std::string r = rounding_name(cfg.rounding);
    s.read("rounding", r);
    cfg.rounding = parse_rounding(r);
    s.finish();
}

void read_rx(const json& j, RxConfig& c) {
    Section s(j, "rx");
    s.read("gsop", c.gsop);
    s.read("coarse_cfo", c.coarse_cfo);
    if (s.has("deskew_samples")) {
        c.deskew_samples = get_as<double>(s.at("deskew_samples"), "rx.deskew_samples");
    } else {
        c.deskew_samples.reset();
    }
    s.read("gardner_kp", c.gardner.kp);
    s.read("gardner_ki", c.gardner.ki);
    s.read("fine_cfo", c.fine_cfo);
    s.read("bps_n_test", c.bps.n_test);
    s.read("bps_block", c.bps.block);
    s.read("mu_dd", c.mu_dd);
    s.read("measure_skip_symbols", c.measure_skip_symbols);
    s.finish();
}

void read_sensing(const json& j, SensingConfig& c) {
    Section s(j, "sensing");
    std::array<double, 4> p{c.probe[0].real(), c.probe[0].imag(), c.probe[1].real(), c.probe[1].imag()};
    s.read("probe", p);
    c.probe = {cplx{p[0], p[1]}, cplx{p[2], p[3]}};
    std::string mode = c.jones_mode == sop::JonesMode::CenterTap ? "center-tap" : "dc-response";
    s.read("jones_mode", mode);
    if (mode == "dc-response") {
        c.jones_mode = sop::JonesMode::DcResponse;
    } else if (mode == "center-tap") {
        c.jones_mode = sop::JonesMode::CenterTap;
    } else {
        throw ConfigError("sensing.jones_mode must be 'dc-response' or 'center-tap'");
    }
    std::string side = c.probe_side == sop::ProbeSide::Column ? "column" : "row";
    s.read("probe_side", side);
    if (side == "row") {
        c.probe_side = sop::ProbeSide::Row;
    } else if (side == "column") {
        c.probe_side = sop::ProbeSide::Column;
    } else {
        throw ConfigError("sensing.probe_side must be 'row' or 'column'");
    }
    s.read("skip_symbols", c.skip_symbols);
    s.finish();
}

void read_psd(const json& j, PsdConfig& c) {
    Section s(j, "psd");
    s.read("segment_len", c.segment_len);
    s.read("overlap", c.overlap);
    s.read("guard_bins", c.guard_bins);
    s.read("harmonics", c.harmonics);
    s.finish();
}

void read_output(const json& j, OutputConfig& c) {
    Section s(j, "output");
    s.read("export_stride", c.export_stride);
    s.read("export_frame", c.export_frame);
    s.finish();
}

ExperimentConfig from_json(const json& j) {
    ExperimentConfig cfg;
    Section top(j, "");
    top.read("seed", cfg.seed);
    top.read("output_dir", cfg.output_dir);
    top.read("sweep_widths", cfg.sweep_widths);
    top.read("include_float", cfg.include_float);
    top.read("q_threshold_db", cfg.q_threshold_db);
    if (top.has("channel")) read_channel(top.at("channel"), cfg.channel);
    if (top.has("eq")) read_eq(top.at("eq"), cfg);
    if (top.has("rx")) read_rx(top.at("rx"), cfg.rx);
    if (top.has("sensing")) read_sensing(top.at("sensing"), cfg.sensing);
    if (top.has("psd")) read_psd(top.at("psd"), cfg.psd);
    if (top.has("output")) read_output(top.at("output"), cfg.output);
    top.finish();
    cfg.channel.seed = cfg.seed;
    cfg.validate();
    return cfg;
}

json parse_value(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::exception&) {
        return json(text);
    }
}

ordered_json to_json(const ExperimentConfig& cfg) {
    ordered_json j;
    j["seed"] = cfg.seed;
    j["output_dir"] = cfg.output_dir;
    j["sweep_widths"] = cfg.sweep_widths;
    j["include_float"] = cfg.include_float;
    j["q_threshold_db"] = cfg.q_threshold_db;

    const auto& c = cfg.channel;
    ordered_json ch;
    ch["n_symbols"] = c.n_symbols;
    ch["sps"] = c.sps;
    ch["rolloff"] = c.rolloff;
    ch["rrc_span"] = c.rrc_span;
    ch["snr_db"] = c.snr_db;
    ch["linewidth_norm"] = c.linewidth_norm;
    ch["cfo_norm"] = c.cfo_norm;
    ch["vib_freq_norm"] = c.vib_freq_norm;
    ch["vib_depth_rad"] = c.vib_depth_rad;
    ch["sop_axis"] = c.sop_axis;
    ch["sop_static_rotation"] = c.sop_static_rotation;
    ch["truth_stride"] = c.truth_stride;
    if (c.iq_imbalance) {
        ch["iq_imbalance"] = {{"gain_db", c.iq_imbalance->gain_db}, {"phase_deg", c.iq_imbalance->phase_deg}};
    } else {
        ch["iq_imbalance"] = nullptr;
    }
    ch["skew_samples"] = c.skew_samples ? ordered_json(*c.skew_samples) : ordered_json(nullptr);
    j["channel"] = ch;

    ordered_json eq;
    eq["n_taps"] = cfg.eq.n_taps;
    eq["mu_cma"] = cfg.eq.mu_cma;
    eq["r2"] = cfg.eq.r2;
    eq["update_stride"] = cfg.eq.update_stride;
    eq["snapshot_stride"] = cfg.eq.snapshot_stride;
    eq["tap_guard_bits"] = cfg.eq.tap_guard_bits;
    eq["int_bits"] = cfg.int_bits;
    eq["rounding"] = rounding_name(cfg.rounding);
    j["eq"] = eq;

    ordered_json r;
    r["gsop"] = cfg.rx.gsop;
    r["coarse_cfo"] = cfg.rx.coarse_cfo;
    r["deskew_samples"] = cfg.rx.deskew_samples ? ordered_json(*cfg.rx.deskew_samples) : ordered_json(nullptr);
    r["gardner_kp"] = cfg.rx.gardner.kp;
    r["gardner_ki"] = cfg.rx.gardner.ki;
    r["fine_cfo"] = cfg.rx.fine_cfo;
    r["bps_n_test"] = cfg.rx.bps.n_test;
    r["bps_block"] = cfg.rx.bps.block;
    r["mu_dd"] = cfg.rx.mu_dd;
    r["measure_skip_symbols"] = cfg.rx.measure_skip_symbols;
    j["rx"] = r;

    const auto& p = cfg.sensing.probe;
    ordered_json se;
    se["probe"] = {p[0].real(), p[0].imag(), p[1].real(), p[1].imag()};
    se["jones_mode"] = cfg.sensing.jones_mode == sop::JonesMode::CenterTap ? "center-tap" : "dc-response";
    se["probe_side"] = cfg.sensing.probe_side == sop::ProbeSide::Column ? "column" : "row";
    se["skip_symbols"] = cfg.sensing.skip_symbols;
    j["sensing"] = se;

    ordered_json ps;
    ps["segment_len"] = cfg.psd.segment_len;
    ps["overlap"] = cfg.psd.overlap;
    ps["guard_bins"] = cfg.psd.guard_bins;
    ps["harmonics"] = cfg.psd.harmonics;
    j["psd"] = ps;

    ordered_json out;
    out["export_stride"] = cfg.output.export_stride;
    out["export_frame"] = cfg.output.export_frame;
    j["output"] = out;
    return j;
}

} // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text, nullptr, true, true);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    return from_json(j);
}

ExperimentConfig load_config(const std::optional<std::filesystem::path>& path,
                             const std::vector<std::string>& overrides) {
    json j = json::object();
    if (path) {
        std::ifstream in(*path);
        if (!in) throw ConfigError("cannot read config file " + path->string());
        std::stringstream ss;
        ss << in.rdbuf();
        try {
            j = json::parse(ss.str(), nullptr, true, true);
        } catch (const json::exception& e) {
            throw ConfigError(path->string() + ": malformed config: " + e.what());
        }
        if (!j.is_object()) throw ConfigError(path->string() + ": top level must be an object");
    }
    for (const std::string& ov : overrides) {
        std::string text = ov;
        if (text.rfind("--", 0) == 0) text = text.substr(2);
        const auto eq = text.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + ov + "' is not key=value");
        const std::string key = text.substr(0, eq);
        json* node = &j;
        std::size_t start = 0;
        while (true) {
            const auto dot = key.find('.', start);
            const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
            if (part.empty()) throw ConfigError("override '" + ov + "' has an empty key segment");
            if (dot == std::string::npos) {
                (*node)[part] = parse_value(text.substr(eq + 1));
                break;
            }
            json& child = (*node)[part];
            if (child.is_null()) child = json::object();
            if (!child.is_object()) throw ConfigError("override '" + ov + "': '" + part + "' is not a section");
            node = &child;
            start = dot + 1;
        }
    }
    return from_json(j);
}

std::string config_to_json(const ExperimentConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

} // namespace sopfx::harness
