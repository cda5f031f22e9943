#include "conn/autoencoder.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

#include "conn/dynamics.hpp"

static_assert(std::endian::native == std::endian::little,
              "model persistence assumes a little-endian host");

namespace conn {

void validate_autoencoder(const AutoencoderModel& model) {
    validate_spec(model.encoder.spec);
    validate_spec(model.decoder.spec);
    const std::size_t enc_in = model.encoder.spec.layer_widths.front();
    const std::size_t enc_out = model.encoder.spec.layer_widths.back();
    const std::size_t dec_in = model.decoder.spec.layer_widths.front();
    const std::size_t dec_out = model.decoder.spec.layer_widths.back();
    if (enc_out != dec_in || enc_out != model.latent_dim) {
        throw std::invalid_argument("autoencoder: encoder output, decoder input and latent_dim "
                                    "must agree");
    }
    if (dec_out != enc_in || enc_in != model.input_dim) {
        throw std::invalid_argument("autoencoder: decoder output, encoder input and input_dim "
                                    "must agree");
    }
}

AutoencoderModel make_autoencoder(const MlpSpec& encoder_spec, const MlpSpec& decoder_spec,
                                  RngStream& rng) {
    AutoencoderModel model;
    model.encoder = make_mlp(encoder_spec, rng);
    model.decoder = make_mlp(decoder_spec, rng);
    model.input_dim = encoder_spec.layer_widths.front();
    model.latent_dim = encoder_spec.layer_widths.back();
    validate_autoencoder(model);
    return model;
}

RealVector encode(const AutoencoderModel& model, const RealVector& x) {
    return forward(model.encoder, x);
}

RealVector decode(const AutoencoderModel& model, const RealVector& z) {
    return forward(model.decoder, z);
}

RealVector reconstruct(const AutoencoderModel& model, const RealVector& x) {
    RealVector out = decode(model, encode(model, x));
    out.shape = x.shape;  // same component count by the endomap invariant
    return out;
}

AeTrainResult train_autoencoder(const std::vector<RealVector>& data, const MlpSpec& encoder_spec,
                                const MlpSpec& decoder_spec, const TrainConfig& cfg) {
    if (data.empty()) {
        throw std::invalid_argument("train_autoencoder: empty training set");
    }
    const std::size_t dim = encoder_spec.layer_widths.front();
    std::vector<std::vector<double>> flat;
    flat.reserve(data.size());
    for (const RealVector& e : data) {
        validate(e, "train_autoencoder");
        if (e.dim() != dim) {
            throw std::invalid_argument("train_autoencoder: example width does not match the "
                                        "encoder input");
        }
        flat.push_back(e.components);
    }

    RngStream init_rng = rng_substream(cfg.seed, 0);
    AeTrainResult result;
    result.model = make_autoencoder(encoder_spec, decoder_spec, init_rng);
    const std::vector<LayerRef> refs = chain_refs(result.model.encoder, result.model.decoder);
    result.loss_history = train_mse(refs, flat, flat, cfg);
    return result;
}

std::vector<MemorizationRow> memorization_check(const AutoencoderModel& model,
                                                const std::vector<RealVector>& train_set,
                                                double tol) {
    std::vector<MemorizationRow> rows;
    rows.reserve(train_set.size());
    for (const RealVector& e : train_set) {
        MemorizationRow row;
        row.residual = norm_distance(reconstruct(model, e), e);
        row.is_fixed_point = row.residual < tol;
        rows.push_back(row);
    }
    return rows;
}

BasinCensus basin_survey(const AutoencoderModel& model, std::size_t n_samples, double tol,
                         std::size_t max_steps, RngStream& rng) {
    validate_autoencoder(model);
    PersonMap map;
    map.kind = PersonMap::Kind::autoencoder;
    map.dim = model.input_dim;
    map.step = [&model](const RealVector& x) { return reconstruct(model, x); };

    constexpr std::size_t kMaxPeriod = 64;
    BasinCensus census;
    census.sample_count = n_samples;

    for (std::size_t s = 0; s < n_samples; ++s) {
        RealVector sample(model.input_dim);
        for (double& c : sample.components) {
            c = rng.uniform();
        }
        FixedPointResult fp = percept(map, sample, tol, max_steps);
        bool converged = fp.converged;
        RealVector endpoint = std::move(fp.point);

        if (!converged) {
            // Give the trajectory one more window and look for a cycle.
            const IterationTrace tail = iterate_map(map, endpoint, 4 * kMaxPeriod);
            const auto cycle = detect_cycle(tail, tol, 0, kMaxPeriod);
            if (cycle && cycle->period >= 2) {
                ++census.cycle_count;
                continue;
            }
            if (cycle && cycle->period == 1) {
                converged = true;
                endpoint = tail.points.back();
            } else {
                ++census.nonconverged_count;
                continue;
            }
        }

        bool placed = false;
        for (auto& cluster : census.clusters) {
            if (norm_distance(cluster.center, endpoint) < 10.0 * tol) {
                ++cluster.count;
                placed = true;
                break;
            }
        }
        if (!placed) {
            census.clusters.push_back({endpoint, 1});
        }
    }
    return census;
}

namespace {

constexpr char kMagic[8] = {'C', 'O', 'N', 'N', '-', 'A', 'E', '1'};

std::uint32_t act_code(Activation a) {
    switch (a) {
        case Activation::relu:
            return 0;
        case Activation::tanh:
            return 1;
        case Activation::cosid:
            return 2;
    }
    return 1;
}

Activation act_from_code(std::uint32_t code) {
    switch (code) {
        case 0:
            return Activation::relu;
        case 1:
            return Activation::tanh;
        case 2:
            return Activation::cosid;
        default:
            throw std::runtime_error("autoencoder load: unknown activation code " +
                                     std::to_string(code));
    }
}

std::uint32_t final_code(FinalActivation f) {
    return f == FinalActivation::sigmoid ? 0 : 1;
}

FinalActivation final_from_code(std::uint32_t code) {
    switch (code) {
        case 0:
            return FinalActivation::sigmoid;
        case 1:
            return FinalActivation::linear;
        default:
            throw std::runtime_error("autoencoder load: unknown final-activation code " +
                                     std::to_string(code));
    }
}

void write_u32(std::ofstream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_f64(std::ofstream& out, double v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::ifstream& in) {
    std::uint32_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
        throw std::runtime_error("autoencoder load: truncated header");
    }
    return v;
}

double read_f64(std::ifstream& in) {
    double v = 0.0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
        throw std::runtime_error("autoencoder load: truncated parameter payload");
    }
    return v;
}

void write_spec(std::ofstream& out, const MlpSpec& spec) {
    write_u32(out, static_cast<std::uint32_t>(spec.layer_widths.size()));
    for (std::size_t w : spec.layer_widths) {
        write_u32(out, static_cast<std::uint32_t>(w));
    }
    write_u32(out, act_code(spec.activation));
    write_u32(out, final_code(spec.final_activation));
}

MlpSpec read_spec(std::ifstream& in) {
    MlpSpec spec;
    const std::uint32_t n = read_u32(in);
    if (n < 2 || n > 64) {
        throw std::runtime_error("autoencoder load: implausible layer count " + std::to_string(n));
    }
    spec.layer_widths.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        const std::uint32_t w = read_u32(in);
        if (w == 0) {
            throw std::runtime_error("autoencoder load: zero layer width");
        }
        spec.layer_widths[i] = w;
    }
    spec.activation = act_from_code(read_u32(in));
    spec.final_activation = final_from_code(read_u32(in));
    return spec;
}

void write_params(std::ofstream& out, const MlpParams& params) {
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        for (double v : params.weights[l].data) {
            write_f64(out, v);
        }
        for (double v : params.biases[l]) {
            write_f64(out, v);
        }
    }
}

MlpParams read_params(std::ifstream& in, const MlpSpec& spec) {
    MlpParams params;
    const std::size_t n_layers = spec.layer_widths.size() - 1;
    for (std::size_t l = 0; l < n_layers; ++l) {
        Matrix w(spec.layer_widths[l + 1], spec.layer_widths[l]);
        for (double& v : w.data) {
            v = read_f64(in);
            if (!std::isfinite(v)) {
                throw std::runtime_error("autoencoder load: non-finite weight");
            }
        }
        params.weights.push_back(std::move(w));
        std::vector<double> b(spec.layer_widths[l + 1]);
        for (double& v : b) {
            v = read_f64(in);
            if (!std::isfinite(v)) {
                throw std::runtime_error("autoencoder load: non-finite bias");
            }
        }
        params.biases.push_back(std::move(b));
    }
    return params;
}

}  // namespace

void save_autoencoder(const AutoencoderModel& model, const std::string& path) {
    validate_autoencoder(model);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("autoencoder save: cannot open " + path);
    }
    out.write(kMagic, sizeof kMagic);
    write_spec(out, model.encoder.spec);
    write_spec(out, model.decoder.spec);
    write_params(out, model.encoder.params);
    write_params(out, model.decoder.params);
    out.flush();
    if (!out) {
        throw std::runtime_error("autoencoder save: write failed for " + path);
    }
}

AutoencoderModel load_autoencoder(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("autoencoder load: cannot open " + path);
    }
    char magic[8] = {};
    if (!in.read(magic, sizeof magic) || !std::equal(std::begin(magic), std::end(magic),
                                                     std::begin(kMagic))) {
        throw std::runtime_error("autoencoder load: bad magic in " + path);
    }
    AutoencoderModel model;
    model.encoder.spec = read_spec(in);
    model.decoder.spec = read_spec(in);
    model.encoder.params = read_params(in, model.encoder.spec);
    model.decoder.params = read_params(in, model.decoder.spec);
    model.input_dim = model.encoder.spec.layer_widths.front();
    model.latent_dim = model.encoder.spec.layer_widths.back();
    char extra = 0;
    if (in.read(&extra, 1)) {
        throw std::runtime_error("autoencoder load: trailing bytes in " + path);
    }
    validate_autoencoder(model);
    return model;
}

MlpSpec desk_encoder_spec() {
    MlpSpec spec;
    spec.layer_widths = {64, 32, 16, 2};
    spec.activation = Activation::tanh;
    spec.final_activation = FinalActivation::linear;
    return spec;
}

MlpSpec desk_decoder_spec() {
    MlpSpec spec;
    spec.layer_widths = {2, 16, 32, 64};
    spec.activation = Activation::tanh;
    spec.final_activation = FinalActivation::sigmoid;
    return spec;
}

}  // namespace conn
