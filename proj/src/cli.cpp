#include "conn/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "conn/autoencoder.hpp"
#include "conn/classifiers.hpp"
#include "conn/dynamics.hpp"
#include "conn/io.hpp"
#include "conn/mlp.hpp"
#include "conn/network.hpp"
#include "conn/planar.hpp"
#include "conn/resilience.hpp"
#include "conn/rng.hpp"

namespace conn {

const char* const kToolVersion = "0.1.0";

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// value parsing

std::string where_key(const std::string& section, const std::string& key) {
    return "[" + section + "] " + key;
}

std::int64_t to_int(const std::string& value, const std::string& where) {
    std::int64_t out = 0;
    const char* begin = value.data();
    const char* end = begin + value.size();
    auto res = std::from_chars(begin, end, out);
    if (res.ec != std::errc() || res.ptr != end || value.empty()) {
        throw ConfigError(where + ": expected an integer, got '" + value + "'");
    }
    return out;
}

std::uint64_t to_u64(const std::string& value, const std::string& where) {
    std::uint64_t out = 0;
    const char* begin = value.data();
    const char* end = begin + value.size();
    auto res = std::from_chars(begin, end, out);
    if (res.ec != std::errc() || res.ptr != end || value.empty()) {
        throw ConfigError(where + ": expected an unsigned integer, got '" + value + "'");
    }
    return out;
}

double to_dbl(const std::string& value, const std::string& where) {
    double out = 0.0;
    const char* begin = value.data();
    const char* end = begin + value.size();
    auto res = std::from_chars(begin, end, out);
    if (res.ec != std::errc() || res.ptr != end || value.empty()) {
        throw ConfigError(where + ": expected a number, got '" + value + "'");
    }
    return out;
}

bool to_bool(const std::string& value, const std::string& where) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError(where + ": expected true/false, got '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream in(value);
    while (std::getline(in, item, ',')) {
        std::size_t b = item.find_first_not_of(" \t");
        if (b == std::string::npos) {
            parts.push_back("");
            continue;
        }
        std::size_t e = item.find_last_not_of(" \t");
        parts.push_back(item.substr(b, e - b + 1));
    }
    return parts;
}

std::vector<double> to_dbl_list(const std::string& value, const std::string& where) {
    std::vector<double> out;
    if (value.empty()) return out;
    for (const auto& part : split_list(value)) {
        out.push_back(to_dbl(part, where));
    }
    return out;
}

std::vector<int> to_int_list(const std::string& value, const std::string& where) {
    std::vector<int> out;
    if (value.empty()) return out;
    for (const auto& part : split_list(value)) {
        out.push_back(int(to_int(part, where)));
    }
    return out;
}

std::vector<std::size_t> to_widths(const std::string& value, const std::string& where) {
    std::vector<std::size_t> out;
    for (const auto& part : split_list(value)) {
        const std::int64_t w = to_int(part, where);
        if (w < 1) throw ConfigError(where + ": layer widths must be positive");
        out.push_back(std::size_t(w));
    }
    if (out.size() < 2) throw ConfigError(where + ": need at least two layer widths");
    return out;
}

Activation to_activation(const std::string& value, const std::string& where) {
    if (value == "relu") return Activation::relu;
    if (value == "tanh") return Activation::tanh;
    if (value == "cosid") return Activation::cosid;
    throw ConfigError(where + ": unknown activation '" + value + "'");
}

FinalActivation to_final(const std::string& value, const std::string& where) {
    if (value == "sigmoid") return FinalActivation::sigmoid;
    if (value == "linear") return FinalActivation::linear;
    throw ConfigError(where + ": unknown final activation '" + value + "'");
}

OptimizerKind to_optimizer(const std::string& value, const std::string& where) {
    if (value == "adam") return OptimizerKind::adam;
    if (value == "sgd") return OptimizerKind::sgd;
    throw ConfigError(where + ": unknown optimizer '" + value + "'");
}

std::string dbl_str(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// configuration schema

struct KeySpec {
    const char* section;
    const char* key;
    const char* preset;
};

// Presets overlaid with the user document; any user key outside the schema
// is rejected so typos cannot silently fall back to a preset.
ConfigDoc effective_config(const ConfigDoc& user, const std::vector<KeySpec>& schema,
                           const std::string& kind) {
    ConfigDoc doc;
    doc.set("experiment", "kind", kind);
    doc.set("experiment", "seed", "0");
    for (const auto& spec : schema) {
        doc.set(spec.section, spec.key, spec.preset);
    }
    for (const auto& sec : user.sections) {
        for (const auto& kv : sec.entries) {
            if (sec.name == "experiment" && kv.first == "kind") {
                if (kv.second != kind) {
                    throw ConfigError("[experiment] kind is '" + kv.second +
                                      "' but the subcommand is '" + kind + "'");
                }
                continue;
            }
            if (sec.name == "experiment" && kv.first == "seed") {
                doc.set("experiment", "seed", kv.second);
                continue;
            }
            const bool known = std::any_of(schema.begin(), schema.end(), [&](const KeySpec& s) {
                return sec.name == s.section && kv.first == s.key;
            });
            if (!known) {
                throw ConfigError("unknown configuration key " +
                                  where_key(sec.name, kv.first));
            }
            doc.set(sec.name, kv.first, kv.second);
        }
    }
    return doc;
}

struct Ctx {
    ConfigDoc cfg;
    std::uint64_t seed = 0;
    fs::path out;

    std::string str(const std::string& section, const std::string& key) const {
        const std::string* v = cfg.find(section, key);
        if (v == nullptr) {
            throw std::logic_error("missing schema key " + where_key(section, key));
        }
        return *v;
    }
    std::int64_t num(const std::string& s, const std::string& k) const {
        return to_int(str(s, k), where_key(s, k));
    }
    double dbl(const std::string& s, const std::string& k) const {
        return to_dbl(str(s, k), where_key(s, k));
    }
    bool flag(const std::string& s, const std::string& k) const {
        return to_bool(str(s, k), where_key(s, k));
    }
};

struct GlobalFlags {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string out_dir = "out";
};

Ctx make_ctx(const GlobalFlags& fl, const char* kind, const std::vector<KeySpec>& schema) {
    ConfigDoc user;
    if (!fl.config_path.empty()) {
        user = parse_config(read_text_file(fl.config_path));
    }
    Ctx ctx;
    ctx.cfg = effective_config(user, schema, kind);
    ctx.seed = fl.seed_given ? fl.seed
                             : to_u64(*ctx.cfg.find("experiment", "seed"), "[experiment] seed");
    ctx.cfg.set("experiment", "seed", std::to_string(ctx.seed));
    ctx.out = fs::path(fl.out_dir);
    fs::create_directories(ctx.out);
    return ctx;
}

// ---------------------------------------------------------------------------
// json helpers

json vec_to_json(const RealVector& v) {
    json out;
    out["shape"] = v.shape;
    out["data"] = v.components;
    return out;
}

RealVector vec_from_json(const json& j) {
    RealVector v(j.at("data").get<std::vector<double>>(),
                 j.at("shape").get<std::vector<std::size_t>>());
    return v;
}

json vecs_to_json(const std::vector<RealVector>& vs) {
    json out = json::array();
    for (const auto& v : vs) out.push_back(vec_to_json(v));
    return out;
}

std::vector<RealVector> vecs_from_json(const json& j) {
    std::vector<RealVector> out;
    for (const auto& item : j) out.push_back(vec_from_json(item));
    return out;
}

const char* orbit_kind_name(OrbitKind kind) {
    switch (kind) {
        case OrbitKind::none: return "none";
        case OrbitKind::first_type: return "first_type";
        case OrbitKind::second_type: return "second_type";
    }
    return "none";
}

json orbit_to_json(const OrbitReport& orbit) {
    json out;
    out["kind"] = orbit_kind_name(orbit.kind);
    out["period_K"] = orbit.period_K;
    out["elements"] = vecs_to_json(orbit.elements);
    out["loop_residual"] = orbit.loop_residual;
    out["g_fixed_residuals"] = orbit.g_fixed_residuals;
    out["detected_at_iter"] = orbit.detected_at_iter;
    out["distinct"] = orbit.distinct;
    out["odd_period_anomaly"] = orbit.odd_period_anomaly;
    out["awareness_residuals"] = orbit.awareness_residuals;
    out["note"] = orbit.note;
    return out;
}

OrbitReport orbit_from_json(const json& j) {
    OrbitReport orbit;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "first_type") {
        orbit.kind = OrbitKind::first_type;
    } else if (kind == "second_type") {
        orbit.kind = OrbitKind::second_type;
    } else {
        orbit.kind = OrbitKind::none;
    }
    orbit.period_K = j.at("period_K").get<std::size_t>();
    orbit.elements = vecs_from_json(j.at("elements"));
    orbit.loop_residual = j.at("loop_residual").get<double>();
    orbit.g_fixed_residuals = j.at("g_fixed_residuals").get<std::vector<double>>();
    orbit.detected_at_iter = j.at("detected_at_iter").get<std::size_t>();
    orbit.distinct = j.at("distinct").get<bool>();
    orbit.odd_period_anomaly = j.at("odd_period_anomaly").get<bool>();
    orbit.awareness_residuals = j.at("awareness_residuals").get<std::vector<double>>();
    orbit.note = j.at("note").get<std::string>();
    return orbit;
}

json planar_to_json(const PlanarConfig& config) {
    json out;
    out["n1"] = config.n1;
    out["n2"] = config.n2;
    out["k"] = config.k;
    out["cuts_a"] = config.cuts_a;
    out["cuts_b"] = config.cuts_b;
    out["attractors_1"] = vecs_to_json(config.attractors_1);
    out["attractors_2"] = vecs_to_json(config.attractors_2);
    return out;
}

PlanarConfig planar_from_json(const json& j) {
    PlanarConfig config;
    config.n1 = j.at("n1").get<int>();
    config.n2 = j.at("n2").get<int>();
    config.k = j.at("k").get<double>();
    config.cuts_a = j.at("cuts_a").get<std::vector<double>>();
    config.cuts_b = j.at("cuts_b").get<std::vector<double>>();
    config.attractors_1 = vecs_from_json(j.at("attractors_1"));
    config.attractors_2 = vecs_from_json(j.at("attractors_2"));
    validate_planar_config(config);
    return config;
}

json loop_check_to_json(const LoopCheck& check) {
    json out;
    out["loop_residual"] = check.loop_residual;
    out["g_residuals"] = check.g_residuals;
    return out;
}

void write_report(const Ctx& ctx, const json& payload) {
    json env;
    env["tool_version"] = kToolVersion;
    env["seed"] = ctx.seed;
    env["config"] = serialize_config(ctx.cfg);
    env["payload"] = payload;
    write_text_file((ctx.out / "report.json").string(), env.dump(2) + "\n");
}

json read_report_payload(const std::string& path) {
    const json env = json::parse(read_text_file(path));
    return env.at("payload");
}

// ---------------------------------------------------------------------------
// shared dataset plumbing

const std::vector<KeySpec> kDatasetSchema = {
    {"dataset", "source", "synth"},     {"dataset", "classes", "3"},
    {"dataset", "per_class", "1"},      {"dataset", "jitter", "0.05"},
    {"dataset", "images", ""},          {"dataset", "labels", ""},
    {"dataset", "subset_per_class", "0"},
};

// Training inputs per the [dataset] section. Synth draws from substream
// `stream`; an idx source optionally restricts to subset_per_class per
// class using the same substream.
LabeledDataset load_dataset(const Ctx& ctx, std::uint64_t stream) {
    const std::string source = ctx.str("dataset", "source");
    RngStream rng = rng_substream(ctx.seed, stream);
    if (source == "synth") {
        const int classes = int(ctx.num("dataset", "classes"));
        const int per_class = int(ctx.num("dataset", "per_class"));
        const double jitter = ctx.dbl("dataset", "jitter");
        return synth_glyphs(classes, per_class, rng, jitter);
    }
    if (source == "idx") {
        const std::string images = ctx.str("dataset", "images");
        const std::string labels = ctx.str("dataset", "labels");
        if (images.empty() || labels.empty()) {
            throw ConfigError("[dataset] images and labels are required for source = idx");
        }
        LabeledDataset data = read_idx(images, labels);
        const int subset = int(ctx.num("dataset", "subset_per_class"));
        if (subset > 0) {
            data = restricted_subset(data, subset, rng);
        }
        return data;
    }
    throw ConfigError("[dataset] source must be synth or idx, got '" + source + "'");
}

const std::vector<KeySpec> kAeTrainSchema = {
    {"train-ae", "encoder", "64,32,16,2"}, {"train-ae", "decoder", "2,16,32,64"},
    {"train-ae", "activation", "tanh"},    {"train-ae", "final", "sigmoid"},
    {"train-ae", "learning_rate", "1e-3"}, {"train-ae", "epochs", "50000"},
    {"train-ae", "batch_size", "0"},       {"train-ae", "optimizer", "adam"},
    {"train-ae", "target_mse", "1e-3"},    {"train-ae", "memorize_tol", "1e-2"},
};

MlpSpec encoder_spec_from(const Ctx& ctx, const std::string& section) {
    MlpSpec spec;
    spec.layer_widths = to_widths(ctx.str(section, "encoder"), where_key(section, "encoder"));
    spec.activation = to_activation(ctx.str(section, "activation"),
                                    where_key(section, "activation"));
    spec.final_activation = FinalActivation::linear;  // latent code is unconstrained
    return spec;
}

MlpSpec decoder_spec_from(const Ctx& ctx, const std::string& section) {
    MlpSpec spec;
    spec.layer_widths = to_widths(ctx.str(section, "decoder"), where_key(section, "decoder"));
    spec.activation = to_activation(ctx.str(section, "activation"),
                                    where_key(section, "activation"));
    spec.final_activation = to_final(ctx.str(section, "final"), where_key(section, "final"));
    return spec;
}

TrainConfig train_config_from(const Ctx& ctx, const std::string& section, std::uint64_t seed) {
    TrainConfig cfg;
    cfg.learning_rate = ctx.dbl(section, "learning_rate");
    cfg.epochs = int(ctx.num(section, "epochs"));
    cfg.batch_size = int(ctx.num(section, "batch_size"));
    cfg.optimizer = to_optimizer(ctx.str(section, "optimizer"),
                                 where_key(section, "optimizer"));
    cfg.target_mse = ctx.dbl(section, "target_mse");
    cfg.seed = seed;
    return cfg;
}

// Distinct master seeds per pipeline phase so weight initialization never
// shares draws with dataset jitter or another phase's initialization.
std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t phase) {
    return rng_substream(seed, phase).next_u64();
}

// ---------------------------------------------------------------------------
// planar

const std::vector<KeySpec> kPlanarSchema = {
    {"planar", "n1", "3"},
    {"planar", "n2", "3"},
    {"planar", "k", "0.5"},
    {"planar", "nsteps1", "25"},
    {"planar", "nsteps2", "25"},
    {"planar", "n_iters", "200"},
    {"planar", "tol", "1e-9"},
    {"planar", "orbit_match_tol", "1e-6"},
    {"planar", "max_period", "64"},
    {"planar", "x0", "0.5,0.5"},
};

RealVector planar_x0(const Ctx& ctx, const std::string& value) {
    if (value == "random") {
        RngStream rng = rng_substream(ctx.seed, 1);
        return make_planar_point(rng.uniform(), rng.uniform());
    }
    const auto pair = to_dbl_list(value, "[planar] x0");
    if (pair.size() != 2) {
        throw ConfigError("[planar] x0 must be 'x,y' or 'random'");
    }
    return make_planar_point(pair[0], pair[1]);
}

int run_planar(const GlobalFlags& fl) {
    Ctx ctx = make_ctx(fl, "planar", kPlanarSchema);
    RngStream cfg_rng = rng_substream(ctx.seed, 0);
    const PlanarConfig config = random_planar_config(
        int(ctx.num("planar", "n1")), int(ctx.num("planar", "n2")), ctx.dbl("planar", "k"),
        cfg_rng);

    ConnExperiment exp;
    exp.person1 = make_planar_person(config, 1);
    exp.person2 = make_planar_person(config, 2);
    exp.x0 = planar_x0(ctx, ctx.str("planar", "x0"));
    exp.nsteps1 = int(ctx.num("planar", "nsteps1"));
    exp.nsteps2 = int(ctx.num("planar", "nsteps2"));
    exp.n_iters = int(ctx.num("planar", "n_iters"));
    exp.seed = ctx.seed;
    exp.tol = ctx.dbl("planar", "tol");
    exp.orbit_match_tol = ctx.dbl("planar", "orbit_match_tol");
    exp.max_period = std::size_t(ctx.num("planar", "max_period"));

    const ConnRun run = run_conn(exp);

    json payload;
    payload["planar"] = planar_to_json(config);
    json run_info;
    run_info["nsteps1"] = exp.nsteps1;
    run_info["nsteps2"] = exp.nsteps2;
    run_info["n_iters"] = exp.n_iters;
    run_info["tol"] = exp.tol;
    run_info["orbit_match_tol"] = exp.orbit_match_tol;
    run_info["max_period"] = exp.max_period;
    run_info["x0"] = vec_to_json(exp.x0);
    payload["run"] = run_info;
    payload["exchange_len"] = run.interchange.size();
    payload["orbit"] = orbit_to_json(run.orbit);
    if (run.orbit.kind == OrbitKind::first_type) {
        const LoopCheck check =
            verify_orbit_loop(run.orbit, exp.person1, exp.person2, exp.nsteps1, exp.nsteps2);
        payload["loop_check"] = loop_check_to_json(check);
    } else {
        payload["loop_check"] = nullptr;
    }
    write_report(ctx, payload);
    return 0;
}

// ---------------------------------------------------------------------------
// orbit-check

const std::vector<KeySpec> kOrbitCheckSchema = {
    {"orbit-check", "report", ""},
    {"orbit-check", "tol", "1e-8"},
};

// Smallest even rotation period of the element ring within tol; K when the
// ring has no smaller even sub-period.
std::size_t minimal_even_period(const std::vector<RealVector>& elements, double tol) {
    const std::size_t K = elements.size();
    for (std::size_t p = 2; p < K; p += 2) {
        if (K % p != 0) continue;
        double worst = 0.0;
        for (std::size_t h = 0; h < K; ++h) {
            worst = std::max(worst, norm_distance(elements[h], elements[(h + p) % K]));
        }
        if (worst <= tol) return p;
    }
    return K;
}

int run_orbit_check(const GlobalFlags& fl) {
    Ctx ctx = make_ctx(fl, "orbit-check", kOrbitCheckSchema);
    const std::string report_path = ctx.str("orbit-check", "report");
    if (report_path.empty()) {
        throw ConfigError("[orbit-check] report is required (path to a planar report.json)");
    }
    const double tol = ctx.dbl("orbit-check", "tol");

    const json payload_in = read_report_payload(report_path);
    const PlanarConfig config = planar_from_json(payload_in.at("planar"));
    const json& run_info = payload_in.at("run");
    const int nsteps1 = run_info.at("nsteps1").get<int>();
    const int nsteps2 = run_info.at("nsteps2").get<int>();
    const OrbitReport orbit = orbit_from_json(payload_in.at("orbit"));
    if (orbit.kind == OrbitKind::none) {
        throw std::runtime_error("orbit-check: source report holds no detected orbit");
    }

    const PersonMap p1 = make_planar_person(config, 1);
    const PersonMap p2 = make_planar_person(config, 2);
    const LoopCheck check = verify_orbit_loop(orbit, p1, p2, nsteps1, nsteps2);
    const bool k_even = orbit.period_K % 2 == 0;
    const std::size_t sub = minimal_even_period(orbit.elements, tol);
    double worst_g = 0.0;
    for (double g : check.g_residuals) worst_g = std::max(worst_g, g);

    json payload;
    payload["period_K"] = orbit.period_K;
    payload["loop_residual"] = check.loop_residual;
    payload["g_residuals"] = check.g_residuals;
    payload["k_even"] = k_even;
    payload["minimal_even_period"] = sub;
    payload["tol"] = tol;
    payload["ok"] = check.loop_residual < tol && worst_g < tol && k_even &&
                    sub == orbit.period_K;
    write_report(ctx, payload);
    return payload["ok"].get<bool>() ? 0 : 2;
}

// ---------------------------------------------------------------------------
// conn

const std::vector<KeySpec> kConnSchema = {
    {"conn", "person1", "planar"},
    {"conn", "person2", "planar"},
    {"conn", "person1_model", ""},
    {"conn", "person2_model", ""},
    {"conn", "person1_image", ""},
    {"conn", "person2_image", ""},
    {"conn", "x0", "random"},
    {"conn", "nsteps1", "25"},
    {"conn", "nsteps2", "25"},
    {"conn", "n_iters", "200"},
    {"conn", "tol", "1e-6"},
    {"conn", "orbit_match_tol", "1e-4"},
    {"conn", "max_period", "64"},
    {"conn", "schedule", ""},
    {"planar", "n1", "3"},
    {"planar", "n2", "3"},
    {"planar", "k", "0.5"},
};

struct BuiltPerson {
    PersonMap map;
    std::optional<RealVector> constant_image;
};

BuiltPerson build_person(const Ctx& ctx, int role, const std::optional<PlanarConfig>& planar) {
    const std::string key = "person" + std::to_string(role);
    const std::string kind = ctx.str("conn", key);
    if (kind == "planar") {
        if (!planar.has_value()) {
            throw std::logic_error("planar person requested without a drawn config");
        }
        return {make_planar_person(*planar, role), std::nullopt};
    }
    if (kind == "ae") {
        const std::string path = ctx.str("conn", key + "_model");
        if (path.empty()) {
            throw ConfigError("[conn] " + key + "_model is required for an ae person");
        }
        return {make_autoencoder_person(load_autoencoder(path)), std::nullopt};
    }
    if (kind == "constant") {
        const std::string path = ctx.str("conn", key + "_image");
        if (path.empty()) {
            throw ConfigError("[conn] " + key + "_image is required for a constant person");
        }
        RealVector image = read_pgm(path);
        return {make_constant_person(image), image};
    }
    throw ConfigError("[conn] " + key + " must be planar, ae or constant");
}

int run_conn_cmd(const GlobalFlags& fl) {
    Ctx ctx = make_ctx(fl, "conn", kConnSchema);

    std::optional<PlanarConfig> planar;
    if (ctx.str("conn", "person1") == "planar" || ctx.str("conn", "person2") == "planar") {
        RngStream cfg_rng = rng_substream(ctx.seed, 0);
        planar = random_planar_config(int(ctx.num("planar", "n1")),
                                      int(ctx.num("planar", "n2")), ctx.dbl("planar", "k"),
                                      cfg_rng);
    }
    BuiltPerson p1 = build_person(ctx, 1, planar);
    BuiltPerson p2 = build_person(ctx, 2, planar);

    ConnExperiment exp;
    exp.person1 = std::move(p1.map);
    exp.person2 = std::move(p2.map);

    const std::string x0_value = ctx.str("conn", "x0");
    if (x0_value == "random") {
        RngStream x0_rng = rng_substream(ctx.seed, 1);
        std::vector<std::size_t> shape{exp.person1.dim};
        if (p2.constant_image.has_value()) {
            shape = p2.constant_image->shape;
        } else if (p1.constant_image.has_value()) {
            shape = p1.constant_image->shape;
        } else if (exp.person1.kind == PersonMap::Kind::planar) {
            shape = {2};
        }
        RealVector x0(exp.person1.dim);
        for (std::size_t i = 0; i < x0.dim(); ++i) x0[i] = x0_rng.uniform();
        x0.shape = shape;
        exp.x0 = std::move(x0);
    } else if (x0_value.size() > 4 && x0_value.substr(x0_value.size() - 4) == ".pgm") {
        exp.x0 = read_pgm(x0_value);
    } else {
        const auto pair = to_dbl_list(x0_value, "[conn] x0");
        if (pair.size() != 2) {
            throw ConfigError("[conn] x0 must be random, 'x,y' or a .pgm path");
        }
        exp.x0 = make_planar_point(pair[0], pair[1]);
    }

    exp.nsteps1 = int(ctx.num("conn", "nsteps1"));
    exp.nsteps2 = int(ctx.num("conn", "nsteps2"));
    exp.n_iters = int(ctx.num("conn", "n_iters"));
    exp.seed = ctx.seed;
    exp.tol = ctx.dbl("conn", "tol");
    exp.orbit_match_tol = ctx.dbl("conn", "orbit_match_tol");
    exp.max_period = std::size_t(ctx.num("conn", "max_period"));

    const ConnRun run = run_conn(exp);

    json payload;
    json persons;
    persons["person1"] = ctx.str("conn", "person1");
    persons["person2"] = ctx.str("conn", "person2");
    payload["persons"] = persons;
    if (planar.has_value()) payload["planar"] = planar_to_json(*planar);
    json run_info;
    run_info["nsteps1"] = exp.nsteps1;
    run_info["nsteps2"] = exp.nsteps2;
    run_info["n_iters"] = exp.n_iters;
    run_info["tol"] = exp.tol;
    run_info["orbit_match_tol"] = exp.orbit_match_tol;
    run_info["max_period"] = exp.max_period;
    run_info["x0"] = vec_to_json(exp.x0);
    payload["run"] = run_info;
    payload["exchange_len"] = run.interchange.size();
    payload["orbit"] = orbit_to_json(run.orbit);
    if (run.orbit.kind == OrbitKind::first_type) {
        const LoopCheck check =
            verify_orbit_loop(run.orbit, exp.person1, exp.person2, exp.nsteps1, exp.nsteps2);
        payload["loop_check"] = loop_check_to_json(check);
    } else {
        payload["loop_check"] = nullptr;
    }

    const auto schedule = to_int_list(ctx.str("conn", "schedule"), "[conn] schedule");
    if (!schedule.empty()) {
        const OrbitReport second = second_type_study(exp, schedule);
        payload["second_type"] = orbit_to_json(second);
    }
    write_report(ctx, payload);

    if (run.orbit.kind != OrbitKind::none) {
        for (std::size_t h = 0; h < run.orbit.elements.size(); ++h) {
            if (run.orbit.elements[h].shape.size() == 2) {
                write_pgm(run.orbit.elements[h],
                          (ctx.out / ("orbit_element_" + std::to_string(h) + ".pgm")).string());
            }
        }
    }
    return 0;
}

// ---------------------------------------------------------------------------
// train-ae

std::vector<KeySpec> train_ae_schema() {
    std::vector<KeySpec> schema = kDatasetSchema;
    schema.insert(schema.end(), kAeTrainSchema.begin(), kAeTrainSchema.end());
    return schema;
}

int run_train_ae(const GlobalFlags& fl) {
    Ctx ctx = make_ctx(fl, "train-ae", train_ae_schema());
    const LabeledDataset data = load_dataset(ctx, 100);

    const MlpSpec enc = encoder_spec_from(ctx, "train-ae");
    const MlpSpec dec = decoder_spec_from(ctx, "train-ae");
    const TrainConfig cfg = train_config_from(ctx, "train-ae", derived_seed(ctx.seed, 10));

    const AeTrainResult result = train_autoencoder(data.samples, enc, dec, cfg);
    save_autoencoder(result.model, (ctx.out / "model.bin").string());

    std::string loss_csv = "epoch,mse\n";
    for (std::size_t e = 0; e < result.loss_history.size(); ++e) {
        loss_csv += std::to_string(e + 1) + "," + dbl_str(result.loss_history[e]) + "\n";
    }
    write_text_file((ctx.out / "loss.csv").string(), loss_csv);

    const double memorize_tol = ctx.dbl("train-ae", "memorize_tol");
    const auto rows = memorization_check(result.model, data.samples, memorize_tol);

    json payload;
    payload["input_dim"] = result.model.input_dim;
    payload["latent_dim"] = result.model.latent_dim;
    payload["train_size"] = data.samples.size();
    payload["epochs_run"] = result.loss_history.size();
    payload["final_mse"] =
        result.loss_history.empty() ? 0.0 : result.loss_history.back();
    json mem = json::array();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        json row;
        row["index"] = i;
        row["label"] = data.labels[i];
        row["residual"] = rows[i].residual;
        row["is_fixed_point"] = rows[i].is_fixed_point;
        mem.push_back(row);
    }
    payload["memorization"] = mem;
    write_report(ctx, payload);
    return 0;
}

// ---------------------------------------------------------------------------
// survey

const std::vector<KeySpec> kSurveySchema = {
    {"survey", "model", ""},
    {"survey", "n_samples", "200"},
    {"survey", "tol", "1e-6"},
    {"survey", "max_steps", "10000"},
};

int run_survey(const GlobalFlags& fl) {
    Ctx ctx = make_ctx(fl, "survey", kSurveySchema);
    const std::string model_path = ctx.str("survey", "model");
    if (model_path.empty()) {
        throw ConfigError("[survey] model is required (path to a saved autoencoder)");
    }
    const AutoencoderModel model = load_autoencoder(model_path);
    RngStream rng = rng_substream(ctx.seed, 100);
    const BasinCensus census =
        basin_survey(model, std::size_t(ctx.num("survey", "n_samples")),
                     ctx.dbl("survey", "tol"), std::size_t(ctx.num("survey", "max_steps")),
                     rng);

    json payload;
    payload["sample_count"] = census.sample_count;
    payload["cycle_count"] = census.cycle_count;
    payload["nonconverged_count"] = census.nonconverged_count;
    json clusters = json::array();
    for (const auto& cluster : census.clusters) {
        json c;
        c["count"] = cluster.count;
        c["center"] = vec_to_json(cluster.center);
        clusters.push_back(c);
    }
    payload["clusters"] = clusters;
    write_report(ctx, payload);
    return 0;
}

// ---------------------------------------------------------------------------
// classify

std::vector<KeySpec> classify_schema() {
    std::vector<KeySpec> schema = kDatasetSchema;
    const std::vector<KeySpec> extra = {
        {"dataset", "test_per_class", "5"},
        {"dataset", "test_images", ""},
        {"dataset", "test_labels", ""},
        {"classify", "ae_model", ""},
        {"classify", "encoder", "64,32,16,2"},
        {"classify", "decoder", "2,16,32,64"},
        {"classify", "activation", "tanh"},
        {"classify", "final", "sigmoid"},
        {"classify", "learning_rate", "1e-3"},
        {"classify", "epochs", "50000"},
        {"classify", "batch_size", "0"},
        {"classify", "optimizer", "adam"},
        {"classify", "target_mse", "1e-5"},
        {"classify", "n", "100"},
        {"classify", "tol", "1e-6"},
        {"classify", "J", "50"},
        {"classify", "beta", "2.6"},
        {"classify", "i_max", "30"},
        {"classify", "noise_scale", "0.05"},
        {"classify", "shift_max", "1"},
        {"classify", "baseline_epochs", "5000"},
        {"classify", "baseline_target", "1e-4"},
        {"classify", "stochastic", "true"},
    };
    schema.insert(schema.end(), extra.begin(), extra.end());
    return schema;
}

LabeledDataset load_test_set(const Ctx& ctx, std::uint64_t stream) {
    const std::string source = ctx.str("dataset", "source");
    RngStream rng = rng_substream(ctx.seed, stream);
    if (source == "synth") {
        const int classes = int(ctx.num("dataset", "classes"));
        const int per_class = int(ctx.num("dataset", "test_per_class"));
        const double jitter = ctx.dbl("dataset", "jitter");
        return synth_glyphs(classes, per_class, rng, jitter);
    }
    const std::string images = ctx.str("dataset", "test_images");
    const std::string labels = ctx.str("dataset", "test_labels");
    if (images.empty() || labels.empty()) {
        throw ConfigError("[dataset] test_images and test_labels are required for source = idx");
    }
    return read_idx(images, labels);
}

struct EvalOutcome {
    double accuracy = 0.0;
    std::vector<std::vector<std::size_t>> confusion;
    int suspicious = 0;
};

EvalOutcome eval_with(const std::function<int(const RealVector&, std::size_t)>& classify,
                      const LabeledDataset& dataset) {
    EvalOutcome out;
    out.confusion.assign(std::size_t(dataset.class_count),
                         std::vector<std::size_t>(std::size_t(dataset.class_count), 0));
    std::size_t hits = 0;
    for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
        const int predicted = classify(dataset.samples[i], i);
        if (predicted < 0 || predicted >= dataset.class_count) {
            throw std::runtime_error("classifier produced an out-of-range label");
        }
        out.confusion[std::size_t(dataset.labels[i])][std::size_t(predicted)] += 1;
        if (predicted == dataset.labels[i]) ++hits;
    }
    out.accuracy = double(hits) / double(dataset.samples.size());
    return out;
}

json outcome_to_json(const EvalOutcome& outcome) {
    json out;
    out["test_accuracy"] = outcome.accuracy;
    out["confusion"] = outcome.confusion;
    out["suspicious"] = outcome.suspicious;
    return out;
}

AutoencoderModel obtain_autoencoder(const Ctx& ctx, const std::string& section,
                                    const LabeledDataset& train) {
    const std::string path = ctx.str(section, "ae_model");
    if (!path.empty()) {
        return load_autoencoder(path);
    }
    const MlpSpec enc = encoder_spec_from(ctx, section);
    const MlpSpec dec = decoder_spec_from(ctx, section);
    const TrainConfig cfg = train_config_from(ctx, section, derived_seed(ctx.seed, 10));
    return train_autoencoder(train.samples, enc, dec, cfg).model;
}

int run_classify(const GlobalFlags& fl) {
    Ctx ctx = make_ctx(fl, "classify", classify_schema());
    const LabeledDataset train = load_dataset(ctx, 100);
    const LabeledDataset test = load_test_set(ctx, 101);
    if (test.class_count != train.class_count) {
        throw std::runtime_error("classify: train and test class counts differ");
    }

    const AutoencoderModel ae = obtain_autoencoder(ctx, "classify", train);

    const std::size_t dim = train.samples.front().dim();
    const MlpSpec head_spec = desk_baseline_spec(dim, train.class_count);
    TrainConfig head_cfg;
    head_cfg.learning_rate = ctx.dbl("classify", "learning_rate");
    head_cfg.epochs = int(ctx.num("classify", "baseline_epochs"));
    head_cfg.target_mse = ctx.dbl("classify", "baseline_target");

    const int n = int(ctx.num("classify", "n"));
    const double tol = ctx.dbl("classify", "tol");

    // Baseline: the head alone on the raw training set.
    head_cfg.seed = derived_seed(ctx.seed, 11);
    const BaselineTrainResult base = train_baseline(train, head_spec, head_cfg);
    const EvalOutcome base_eval = eval_with(
        [&](const RealVector& x, std::size_t) { return predict(base.model, x).label; }, test);

    // Vanilla: head trained on vanilla attractors, queries attractorized.
    const AttractorizedDataset atr_van = attractorize_vanilla(ae, train, n, tol);
    LabeledDataset van_train{atr_van.samples, atr_van.labels, atr_van.class_count};
    head_cfg.seed = derived_seed(ctx.seed, 13);
    const BaselineTrainResult van = train_baseline(van_train, head_spec, head_cfg);
    EvalOutcome van_eval;
    {
        int suspicious = 0;
        van_eval = eval_with(
            [&](const RealVector& x, std::size_t) {
                const VanillaVerdict verdict = vanilla_classify(ae, van.model, x, n, tol);
                if (verdict.suspicious) ++suspicious;
                return verdict.label;
            },
            test);
        van_eval.suspicious = suspicious;
    }
    int train_unconverged = 0;
    for (bool c : atr_van.converged) {
        if (!c) ++train_unconverged;
    }

    json payload;
    payload["train_size"] = train.samples.size();
    payload["test_size"] = test.samples.size();
    payload["class_count"] = train.class_count;
    json base_json = outcome_to_json(base_eval);
    base_json["train_accuracy"] = base.train_accuracy;
    payload["baseline"] = base_json;
    json van_json = outcome_to_json(van_eval);
    van_json["train_accuracy"] = van.train_accuracy;
    van_json["train_unconverged"] = train_unconverged;
    payload["vanilla"] = van_json;

    std::string csv = "variant,train_size,accuracy\n";
    const std::string train_size = std::to_string(train.samples.size());
    csv += "baseline," + train_size + "," + dbl_str(base_eval.accuracy) + "\n";
    csv += "vanilla," + train_size + "," + dbl_str(van_eval.accuracy) + "\n";

    if (ctx.flag("classify", "stochastic")) {
        StochasticConfig sc;
        sc.J = int(ctx.num("classify", "J"));
        sc.beta = ctx.dbl("classify", "beta");
        sc.i_max = int(ctx.num("classify", "i_max"));
        sc.noise_scale = ctx.dbl("classify", "noise_scale");
        sc.shift_max = int(ctx.num("classify", "shift_max"));
        sc.seed = derived_seed(ctx.seed, 12);
        const AttractorizedDataset atr_sto = attractorize_stochastic(ae, train, sc);
        LabeledDataset sto_train{atr_sto.samples, atr_sto.labels, atr_sto.class_count};
        head_cfg.seed = derived_seed(ctx.seed, 14);
        const BaselineTrainResult sto = train_baseline(sto_train, head_spec, head_cfg);
        const EvalOutcome sto_eval = eval_with(
            [&](const RealVector& x, std::size_t index) {
                StochasticConfig per_query = sc;
                per_query.seed = derived_seed(ctx.seed, 1000 + index);
                return stochastic_classify(ae, sto.model, x, per_query);
            },
            test);
        json sto_json = outcome_to_json(sto_eval);
        sto_json["train_accuracy"] = sto.train_accuracy;
        payload["stochastic"] = sto_json;
        csv += "stochastic," + train_size + "," + dbl_str(sto_eval.accuracy) + "\n";
    } else {
        payload["stochastic"] = nullptr;
    }

    write_text_file((ctx.out / "accuracy.csv").string(), csv);
    write_report(ctx, payload);
    return 0;
}

// ---------------------------------------------------------------------------
// csi

std::vector<KeySpec> csi_schema() {
    std::vector<KeySpec> schema = kDatasetSchema;
    const std::vector<KeySpec> extra = {
        {"csi", "ae_model", ""},
        {"csi", "encoder", "64,32,16,2"},
        {"csi", "decoder", "2,16,32,64"},
        {"csi", "activation", "tanh"},
        {"csi", "final", "sigmoid"},
        {"csi", "learning_rate", "1e-3"},
        {"csi", "epochs", "50000"},
        {"csi", "batch_size", "0"},
        {"csi", "optimizer", "adam"},
        {"csi", "target_mse", "1e-5"},
        {"csi", "T", "0.5"},
        {"csi", "P", "64"},
        {"csi", "tol_attr", "1e-2"},
        {"csi", "percept_tol", "1e-6"},
        {"csi", "max_steps", "10000"},
        {"csi", "t_grid", ""},
        {"csi", "probe_count", "50"},
        {"csi", "probe_radius", "0.35"},
    };
    schema.insert(schema.end(), extra.begin(), extra.end());
    return schema;
}

int run_csi(const GlobalFlags& fl) {
    Ctx ctx = make_ctx(fl, "csi", csi_schema());
    const LabeledDataset train = load_dataset(ctx, 100);
    const AutoencoderModel ae = obtain_autoencoder(ctx, "csi", train);

    const int probe_count = int(ctx.num("csi", "probe_count"));
    const double probe_radius = ctx.dbl("csi", "probe_radius");
    if (probe_count < 1) throw ConfigError("[csi] probe_count must be >= 1");
    if (!(probe_radius > 0.0)) throw ConfigError("[csi] probe_radius must be > 0");

    LabeledDataset probes;
    probes.class_count = train.class_count;
    for (int q = 0; q < probe_count; ++q) {
        const std::size_t base = std::size_t(q) % train.samples.size();
        RngStream rng = rng_substream(ctx.seed, 300 + std::uint64_t(q));
        probes.samples.push_back(
            sample_in_ball(train.samples[base], probe_radius, rng).point);
        probes.labels.push_back(train.labels[base]);
    }

    CsiConfig cfg;
    cfg.T = ctx.dbl("csi", "T");
    cfg.probes = std::move(probes);
    cfg.P = int(ctx.num("csi", "P"));
    cfg.tol_attr = ctx.dbl("csi", "tol_attr");
    cfg.seed = derived_seed(ctx.seed, 20);
    cfg.t_grid = to_dbl_list(ctx.str("csi", "t_grid"), "[csi] t_grid");
    cfg.percept_tol = ctx.dbl("csi", "percept_tol");
    cfg.max_steps = std::size_t(ctx.num("csi", "max_steps"));

    const CsiReport report = class_separation_index(ae, train, cfg);

    json payload;
    json headline;
    headline["t"] = cfg.T;
    headline["index_i"] = report.index_i;
    headline["t_interior_fraction"] = report.t_interior_fraction;
    headline["h_fraction"] = report.h_fraction;
    headline["z_fraction"] = report.z_fraction;
    payload["headline"] = headline;
    json probe_rows = json::array();
    for (const auto& p : report.probes) {
        json row;
        row["in_h"] = p.in_h;
        row["in_r"] = p.in_r;
        row["in_z"] = p.in_z;
        row["in_t_interior"] = p.in_t_interior;
        row["matched_attractor_index"] = p.matched_attractor_index;
        row["label_set"] = p.label_set;
        row["clamped_samples"] = p.clamped_samples;
        row["spurious_samples"] = p.spurious_samples;
        probe_rows.push_back(row);
    }
    payload["probes"] = probe_rows;
    json curve = json::array();
    for (const auto& row : report.curve) {
        json r;
        r["t"] = row.t;
        r["index_i"] = row.index_i;
        r["t_interior_fraction"] = row.t_interior_fraction;
        r["h_fraction"] = row.h_fraction;
        r["z_fraction"] = row.z_fraction;
        curve.push_back(r);
    }
    payload["curve"] = curve;

    write_text_file((ctx.out / "curve.csv").string(), csi_curve_csv(report));
    write_report(ctx, payload);
    return 0;
}

// ---------------------------------------------------------------------------
// dispatch

struct SubcommandSpec {
    const char* name;
    const char* blurb;
    int (*run)(const GlobalFlags&);
};

const SubcommandSpec kSubcommands[] = {
    {"planar", "draw a planar network, run the exchange, report the orbit", run_planar},
    {"conn", "run a two-person exchange (planar, autoencoder or constant persons)",
     run_conn_cmd},
    {"train-ae", "train an autoencoder until it memorizes the training set", run_train_ae},
    {"survey", "census of attractor basins of a saved autoencoder", run_survey},
    {"classify", "baseline vs attractor classifiers; writes accuracy.csv", run_classify},
    {"csi", "class separation index of a memorized autoencoder; writes curve.csv", run_csi},
    {"orbit-check", "re-verify the orbit stored in a planar report", run_orbit_check},
};

}  // namespace

int cli_dispatch(const std::vector<std::string>& args) {
    CLI::App app{"conn: iterated observed-to-seen maps, orbits and attractor classifiers"};
    app.name("conn-cli");
    app.require_subcommand(1);

    GlobalFlags fl;
    struct SubState {
        CLI::App* sub = nullptr;
        const SubcommandSpec* spec = nullptr;
        CLI::Option* seed_opt = nullptr;
    };
    std::vector<SubState> subs;
    for (const auto& spec : kSubcommands) {
        SubState state;
        state.spec = &spec;
        state.sub = app.add_subcommand(spec.name, spec.blurb);
        state.sub->add_option("--config", fl.config_path, "configuration file (key = value)");
        state.seed_opt = state.sub->add_option("--seed", fl.seed,
                                               "master seed (overrides the config)");
        state.sub->add_option("--out", fl.out_dir, "output directory (preset: out)");
        subs.push_back(state);
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e);
        return 0;
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help() << std::flush;
        return 1;
    }

    const SubState* chosen = nullptr;
    for (const auto& state : subs) {
        if (state.sub->parsed()) {
            chosen = &state;
            break;
        }
    }
    if (chosen == nullptr) {
        std::cerr << app.help() << std::flush;
        return 1;
    }
    fl.seed_given = chosen->seed_opt->count() > 0;

    const auto start = std::chrono::steady_clock::now();
    try {
        const int rc = chosen->spec->run(fl);
        const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - start)
                            .count();
        std::cerr << "conn-cli " << chosen->spec->name << ": done in " << ms << " ms\n";
        return rc;
    } catch (const ConfigError& e) {
        std::cerr << "conn-cli " << chosen->spec->name << ": config error: " << e.what()
                  << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "conn-cli " << chosen->spec->name << ": usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "conn-cli " << chosen->spec->name << ": error: " << e.what() << "\n";
        return 2;
    }
}

int cli_dispatch(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return cli_dispatch(args);
}

}  // namespace conn
