#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "conn/mlp.hpp"
#include "conn/real_vector.hpp"
#include "conn/rng.hpp"

namespace conn {

// Encoder/decoder pair realizing one person's observed-to-seen map as
// dec(enc(x)). Training examples become epsilon-fixed points of reconstruct
// once the pair has memorized them.
struct AutoencoderModel {
    Mlp encoder;
    Mlp decoder;
    std::size_t input_dim = 0;
    std::size_t latent_dim = 0;
};

// Throws std::invalid_argument unless encoder output width == decoder input
// width == latent_dim and decoder output width == encoder input width ==
// input_dim (the composite must be an endomap of image space).
void validate_autoencoder(const AutoencoderModel& model);

// Fresh random model; encoder params are drawn first, then decoder, from
// the same stream.
AutoencoderModel make_autoencoder(const MlpSpec& encoder_spec, const MlpSpec& decoder_spec,
                                  RngStream& rng);

RealVector encode(const AutoencoderModel& model, const RealVector& x);
// Output is 1-D of length input_dim; callers needing image shape use
// reconstruct, which preserves the input's shape.
RealVector decode(const AutoencoderModel& model, const RealVector& z);
RealVector reconstruct(const AutoencoderModel& model, const RealVector& x);

struct AeTrainResult {
    AutoencoderModel model;
    std::vector<double> loss_history;  // epoch mean reconstruction MSE
};

// Joint full-pipeline training of encoder+decoder on reconstruction MSE.
// Deterministic for a fixed cfg.seed (params from substream 0, batch
// shuffling from substream 1). Stops early at cfg.target_mse. Throws
// std::runtime_error naming the epoch if the loss turns non-finite.
AeTrainResult train_autoencoder(const std::vector<RealVector>& data, const MlpSpec& encoder_spec,
                                const MlpSpec& decoder_spec, const TrainConfig& cfg);

struct MemorizationRow {
    double residual = 0.0;  // distance(reconstruct(e), e) / sqrt(dim)
    bool is_fixed_point = false;
};

std::vector<MemorizationRow> memorization_check(const AutoencoderModel& model,
                                                const std::vector<RealVector>& train_set,
                                                double tol);

// Census of where uniform random inputs end up under iterated reconstruct.
struct BasinCensus {
    struct Cluster {
        RealVector center;  // first endpoint that opened the cluster
        std::size_t count = 0;
    };
    std::vector<Cluster> clusters;
    std::size_t cycle_count = 0;
    std::size_t nonconverged_count = 0;
    std::size_t sample_count = 0;
};

// Samples n_samples uniform points in [0,1]^input_dim, runs each to its
// percept (tolerance tol, budget max_steps), and clusters converged
// endpoints at radius 10*tol (normalized metric, greedy first-fit).
// Trajectories that fail to converge are extended and scanned for cycles up
// to period 64; cycling samples count into cycle_count, the rest into
// nonconverged_count. Cluster counts + cycle_count + nonconverged_count ==
// n_samples.
BasinCensus basin_survey(const AutoencoderModel& model, std::size_t n_samples, double tol,
                         std::size_t max_steps, RngStream& rng);

// Flat binary model container (magic "CONN-AE1", little-endian payload).
// Byte layout is documented in docs/model_format.md. Loading validates the
// magic, the spec invariants, finiteness, and exact file length; failures
// raise std::runtime_error.
void save_autoencoder(const AutoencoderModel& model, const std::string& path);
AutoencoderModel load_autoencoder(const std::string& path);

// Desk-scale architecture for 8x8 glyphs: encoder [64,32,16,2] with tanh
// hidden layers and a linear latent head, decoder mirrored with a sigmoid
// output.
MlpSpec desk_encoder_spec();
MlpSpec desk_decoder_spec();

}  // namespace conn
