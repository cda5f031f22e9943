#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "conn/real_vector.hpp"
#include "conn/rng.hpp"

namespace conn {

// Dense row-major matrix; the only linear-algebra carrier the networks need.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

enum class Activation { relu, tanh, cosid };
enum class FinalActivation { sigmoid, linear };

// Fully connected architecture: layer_widths runs input..output, hidden
// layers use `activation`, the last layer uses `final_activation`.
// cosid is the cosine activation, cos(z).
struct MlpSpec {
    std::vector<std::size_t> layer_widths;
    Activation activation = Activation::tanh;
    FinalActivation final_activation = FinalActivation::sigmoid;
};

// Throws std::invalid_argument unless there are >= 2 layers, all positive.
void validate_spec(const MlpSpec& spec);

struct MlpParams {
    std::vector<Matrix> weights;              // weights[l]: widths[l+1] x widths[l]
    std::vector<std::vector<double>> biases;  // biases[l]: widths[l+1]
};

struct Mlp {
    MlpSpec spec;
    MlpParams params;
};

// Concrete activation of one layer once the hidden/final split is resolved.
enum class ActKind { relu, tanh, cosid, sigmoid, linear };

ActKind layer_act(const MlpSpec& spec, std::size_t layer);

// Weights uniform in +-sqrt(6/(fan_in+fan_out)), biases zero. Draw order:
// layers in order, each weight matrix row-major.
MlpParams init_params(const MlpSpec& spec, RngStream& rng);

Mlp make_mlp(const MlpSpec& spec, RngStream& rng);

// Affine + activation per layer. Throws std::invalid_argument on a width
// mismatch. Output shape is {output_width}.
RealVector forward(const Mlp& mlp, const RealVector& x);

// Read-only and mutable per-layer views. Training operates on a flat layer
// chain so that several MLPs (encoder + decoder) can be optimized jointly.
struct LayerView {
    const Matrix* w = nullptr;
    const std::vector<double>* b = nullptr;
    ActKind act = ActKind::linear;
};

struct LayerRef {
    Matrix* w = nullptr;
    std::vector<double>* b = nullptr;
    ActKind act = ActKind::linear;
};

std::vector<LayerView> layer_views(const Mlp& mlp);
std::vector<LayerRef> layer_refs(Mlp& mlp);
std::vector<LayerRef> chain_refs(Mlp& first, Mlp& second);
std::vector<LayerView> views_of(const std::vector<LayerRef>& refs);

// act[0] is the input; pre[l] and act[l+1] are layer l's affine output and
// activation output.
struct ForwardTrace {
    std::vector<std::vector<double>> pre;
    std::vector<std::vector<double>> act;
};

ForwardTrace forward_trace(const std::vector<LayerView>& layers, const std::vector<double>& x);

// Same shapes as the referenced parameters, all zeros on construction.
struct Gradients {
    std::vector<Matrix> w;
    std::vector<std::vector<double>> b;
};

Gradients zero_gradients(const std::vector<LayerView>& layers);

// Mean squared error over components: (1/D) * sum (y-t)^2.
double mse_loss(const std::vector<double>& y, const std::vector<double>& target);

// Cross-entropy of the softmax of `logits` against the true label.
double softmax_ce_loss(const std::vector<double>& logits, int label);

// Numerically stable softmax (max subtraction); sums to 1 within rounding.
std::vector<double> softmax(const std::vector<double>& logits);

// Backpropagation for one example; gradients are added into `grads`.
void accumulate_mse_grads(const std::vector<LayerView>& layers, const ForwardTrace& trace,
                          const std::vector<double>& target, Gradients& grads);
// Requires a linear final layer (logits); softmax is folded into the delta.
void accumulate_softmax_ce_grads(const std::vector<LayerView>& layers, const ForwardTrace& trace,
                                 int label, Gradients& grads);

enum class OptimizerKind { adam, sgd };

// Shared knobs for every gradient-trained network in the library. For
// cross-entropy training, target_mse is the target mean loss.
struct TrainConfig {
    double learning_rate = 1e-3;
    int epochs = 50000;
    int batch_size = 0;  // 0 = full batch
    OptimizerKind optimizer = OptimizerKind::adam;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    double target_mse = 1e-3;  // early-stop threshold on the epoch mean loss
};

struct AdamState {
    std::vector<Matrix> m_w, v_w;
    std::vector<std::vector<double>> m_b, v_b;
    std::int64_t t = 0;
};

AdamState make_adam_state(const std::vector<LayerView>& layers);

// One optimizer update from gradients already scaled to the batch mean.
void adam_step(const std::vector<LayerRef>& layers, const Gradients& grads, AdamState& state,
               const TrainConfig& cfg);
void sgd_step(const std::vector<LayerRef>& layers, const Gradients& grads, const TrainConfig& cfg);

// Deterministic epoch loop shared by the autoencoder and the classifier:
// full batch when batch_size == 0, otherwise seeded shuffled mini-batches.
// Returns one mean-loss entry per completed epoch; stops early once the
// epoch mean loss drops below cfg.target_mse. Throws std::runtime_error
// naming the epoch if the loss turns non-finite.
std::vector<double> train_mse(const std::vector<LayerRef>& layers,
                              const std::vector<std::vector<double>>& inputs,
                              const std::vector<std::vector<double>>& targets,
                              const TrainConfig& cfg);
std::vector<double> train_softmax_ce(const std::vector<LayerRef>& layers,
                                     const std::vector<std::vector<double>>& inputs,
                                     const std::vector<int>& labels, const TrainConfig& cfg);

// Max relative error between backpropagated and central finite-difference
// (h = 1e-5) gradients of the MSE-to-zero-target loss at x, over
// min(n_checks, parameter count) distinct parameters chosen by `rng`
// (every parameter when the network is small enough). Relative error is
// |g_bp - g_fd| / max(1e-8, |g_bp|, |g_fd|).
double grad_check(const MlpSpec& spec, const MlpParams& params, const RealVector& x,
                  RngStream& rng, std::size_t n_checks = 64);

}  // namespace conn
