#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "conn/autoencoder.hpp"
#include "conn/mlp.hpp"
#include "conn/real_vector.hpp"
#include "conn/rng.hpp"

namespace conn {

// Image set with class labels in 0..class_count-1.
struct LabeledDataset {
    std::vector<RealVector> samples;
    std::vector<int> labels;
    int class_count = 0;
};

// Throws std::invalid_argument on length mismatch, labels out of range, or
// components outside [0,1].
void validate_dataset(const LabeledDataset& dataset);

// MLP with a linear logits head of width class_count; softmax is applied at
// prediction time.
struct ClassifierModel {
    Mlp mlp;
    int class_count = 0;
};

struct BaselineTrainResult {
    ClassifierModel model;
    std::vector<double> loss_history;  // epoch mean cross-entropy
    double train_accuracy = 0.0;
};

// Cross-entropy training of the baseline classifier; deterministic for a
// fixed cfg.seed. The spec's final activation must be linear and its output
// width must equal the dataset's class count.
BaselineTrainResult train_baseline(const LabeledDataset& dataset, const MlpSpec& spec,
                                   const TrainConfig& cfg);

// Two hidden layers of 50 and 10 units, relu, linear logits head.
MlpSpec desk_baseline_spec(std::size_t input_dim, int class_count);

struct Prediction {
    int label = 0;
    std::vector<double> probabilities;  // softmax, sums to 1 within rounding
};

// Ties break to the lowest class index.
Prediction predict(const ClassifierModel& model, const RealVector& x);

// Knobs of the stochastic perceptualization pipeline.
struct StochasticConfig {
    int J = 500;              // ensemble size (desk presets use 50)
    double beta = 2.6;        // relaxator, must be > 1
    int i_max = 30;           // iterations per ensemble member
    double noise_scale = 0.1; // Gaussian sigma at gamma = 1
    int shift_max = 2;        // max translation in pixels at gamma = 1
    std::uint64_t seed = 0;
};

void validate_stochastic_config(const StochasticConfig& cfg);

enum class Provenance { vanilla, stochastic };

// A labeled dataset whose samples were replaced by their attractors. Labels
// are copied from the source unchanged. Stochastic rows are always flagged
// converged: that pipeline truncates at i_max by construction and reports
// residual diagnostics through stochastic_percept instead.
struct AttractorizedDataset {
    std::vector<RealVector> samples;
    std::vector<int> labels;
    int class_count = 0;
    Provenance provenance = Provenance::vanilla;
    std::vector<bool> converged;
};

// Replaces each sample by its vanilla attractor: up to n reconstruct
// iterations with early exit once the normalized step residual drops below
// tol. n = 0 leaves samples untouched (and flags them unconverged, since no
// residual was ever observed).
AttractorizedDataset attractorize_vanilla(const AutoencoderModel& ae,
                                          const LabeledDataset& dataset, int n = 100,
                                          double tol = 1e-6);

// Replaces each sample by the ensemble-mean attractor F*. Each sample gets
// an independent derived seed (the first draw of rng_substream(cfg.seed,
// sample_index)) so ensemble noise is not shared across samples.
AttractorizedDataset attractorize_stochastic(const AutoencoderModel& ae,
                                             const LabeledDataset& dataset,
                                             const StochasticConfig& cfg);

// The raw relaxation schedule beta^(1/(i+1)), i >= 0, beta > 1.
double gamma_schedule_raw(int i, double beta);
// The raw value clamped to [0,1]. For beta > 1 every raw value exceeds 1,
// so the effective schedule is the constant 1; the raw value stays
// available for reports.
double gamma_schedule(int i, double beta);

// gamma-scaled augmentation: componentwise Gaussian noise with sigma =
// gamma*noise_scale (components in ascending order), then, for 2-D shapes
// only, an integer translation drawn uniformly in +-round(gamma*shift_max)
// per axis (row offset first) with zero fill, then a clamp to [0,1].
// gamma = 0 returns x bit-identically.
RealVector augment(const RealVector& x, double gamma, const StochasticConfig& cfg,
                   RngStream& rng);

struct StochasticPercept {
    RealVector f_star;               // componentwise ensemble mean
    std::vector<RealVector> ensemble;
    std::vector<double> final_residuals;  // last-step residual per member
};

// Ensemble of J augmented trajectories: member j draws from
// rng_substream(cfg.seed, j) and iterates x <- reconstruct(augment(x,
// gamma_i)) for i_max steps. F* is the mean in ascending member order,
// clamped into the componentwise hull of the ensemble (identical members
// short-circuit to the member itself, keeping degenerate runs bitwise
// faithful).
StochasticPercept stochastic_percept(const AutoencoderModel& ae, const RealVector& x,
                                     const StochasticConfig& cfg);

struct VanillaVerdict {
    int label = 0;
    bool suspicious = false;  // attractorization failed to converge
};

inline constexpr std::uint64_t kDefaultFallbackSeed = 0x636f6e6e2d636c66ull;

// Attractorize then predict. When the iteration fails to converge the
// verdict is suspicious and the label is drawn from a stream keyed by the
// fallback seed and a fingerprint of the input, so repeated queries on the
// same input agree.
VanillaVerdict vanilla_classify(const AutoencoderModel& ae, const ClassifierModel& model,
                                const RealVector& x, int n = 100, double tol = 1e-6,
                                std::uint64_t fallback_seed = kDefaultFallbackSeed);

// predict(model, stochastic_percept(ae, x, cfg).f_star).label
int stochastic_classify(const AutoencoderModel& ae, const ClassifierModel& model,
                        const RealVector& x, const StochasticConfig& cfg);

struct Evaluation {
    double accuracy = 0.0;
    // confusion[true_label][predicted_label]
    std::vector<std::vector<std::size_t>> confusion;
};

Evaluation evaluate(const std::function<int(const RealVector&)>& classifier,
                    const LabeledDataset& dataset);

}  // namespace conn
