#include "conn/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>

namespace conn {

void validate_spec(const MlpSpec& spec) {
    if (spec.layer_widths.size() < 2) {
        throw std::invalid_argument("mlp spec: need at least input and output layers");
    }
    for (std::size_t w : spec.layer_widths) {
        if (w == 0) {
            throw std::invalid_argument("mlp spec: layer widths must be positive");
        }
    }
}

ActKind layer_act(const MlpSpec& spec, std::size_t layer) {
    const std::size_t last = spec.layer_widths.size() - 2;
    if (layer == last) {
        return spec.final_activation == FinalActivation::sigmoid ? ActKind::sigmoid
                                                                 : ActKind::linear;
    }
    switch (spec.activation) {
        case Activation::relu:
            return ActKind::relu;
        case Activation::cosid:
            return ActKind::cosid;
        case Activation::tanh:
        default:
            return ActKind::tanh;
    }
}

MlpParams init_params(const MlpSpec& spec, RngStream& rng) {
    validate_spec(spec);
    MlpParams params;
    const std::size_t n_layers = spec.layer_widths.size() - 1;
    params.weights.reserve(n_layers);
    params.biases.reserve(n_layers);
    for (std::size_t l = 0; l < n_layers; ++l) {
        const std::size_t fan_in = spec.layer_widths[l];
        const std::size_t fan_out = spec.layer_widths[l + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Matrix w(fan_out, fan_in);
        for (double& v : w.data) {
            v = (2.0 * rng.uniform() - 1.0) * bound;
        }
        params.weights.push_back(std::move(w));
        params.biases.emplace_back(fan_out, 0.0);
    }
    return params;
}

Mlp make_mlp(const MlpSpec& spec, RngStream& rng) {
    return Mlp{spec, init_params(spec, rng)};
}

namespace {

double apply_act(ActKind act, double z) {
    switch (act) {
        case ActKind::relu:
            return z > 0.0 ? z : 0.0;
        case ActKind::tanh:
            return std::tanh(z);
        case ActKind::cosid:
            return std::cos(z);
        case ActKind::sigmoid:
            return 1.0 / (1.0 + std::exp(-z));
        case ActKind::linear:
        default:
            return z;
    }
}

// Derivative given the pre-activation z and the activation value a.
double act_derivative(ActKind act, double z, double a) {
    switch (act) {
        case ActKind::relu:
            return z > 0.0 ? 1.0 : 0.0;
        case ActKind::tanh:
            return 1.0 - a * a;
        case ActKind::cosid:
            return -std::sin(z);
        case ActKind::sigmoid:
            return a * (1.0 - a);
        case ActKind::linear:
        default:
            return 1.0;
    }
}

std::vector<double> forward_flat(const std::vector<LayerView>& layers,
                                 const std::vector<double>& x) {
    std::vector<double> cur = x;
    std::vector<double> next;
    for (const LayerView& layer : layers) {
        const Matrix& w = *layer.w;
        if (cur.size() != w.cols) {
            throw std::invalid_argument("mlp forward: width mismatch");
        }
        next.assign(w.rows, 0.0);
        for (std::size_t r = 0; r < w.rows; ++r) {
            const double* row = &w.data[r * w.cols];
            double z = (*layer.b)[r];
            for (std::size_t c = 0; c < w.cols; ++c) {
                z += row[c] * cur[c];
            }
            next[r] = apply_act(layer.act, z);
        }
        cur.swap(next);
    }
    return cur;
}

}  // namespace

RealVector forward(const Mlp& mlp, const RealVector& x) {
    if (x.dim() != mlp.spec.layer_widths.front()) {
        throw std::invalid_argument("mlp forward: input width mismatch");
    }
    std::vector<double> y = forward_flat(layer_views(mlp), x.components);
    const std::size_t out = y.size();
    return RealVector(std::move(y), {out});
}

std::vector<LayerView> layer_views(const Mlp& mlp) {
    std::vector<LayerView> views;
    views.reserve(mlp.params.weights.size());
    for (std::size_t l = 0; l < mlp.params.weights.size(); ++l) {
        views.push_back({&mlp.params.weights[l], &mlp.params.biases[l], layer_act(mlp.spec, l)});
    }
    return views;
}

std::vector<LayerRef> layer_refs(Mlp& mlp) {
    std::vector<LayerRef> refs;
    refs.reserve(mlp.params.weights.size());
    for (std::size_t l = 0; l < mlp.params.weights.size(); ++l) {
        refs.push_back({&mlp.params.weights[l], &mlp.params.biases[l], layer_act(mlp.spec, l)});
    }
    return refs;
}

std::vector<LayerRef> chain_refs(Mlp& first, Mlp& second) {
    std::vector<LayerRef> refs = layer_refs(first);
    const std::vector<LayerRef> tail = layer_refs(second);
    refs.insert(refs.end(), tail.begin(), tail.end());
    return refs;
}

std::vector<LayerView> views_of(const std::vector<LayerRef>& refs) {
    std::vector<LayerView> views;
    views.reserve(refs.size());
    for (const LayerRef& r : refs) {
        views.push_back({r.w, r.b, r.act});
    }
    return views;
}

ForwardTrace forward_trace(const std::vector<LayerView>& layers, const std::vector<double>& x) {
    ForwardTrace trace;
    trace.pre.resize(layers.size());
    trace.act.resize(layers.size() + 1);
    trace.act[0] = x;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const Matrix& w = *layers[l].w;
        const std::vector<double>& input = trace.act[l];
        if (input.size() != w.cols) {
            throw std::invalid_argument("mlp forward: width mismatch");
        }
        std::vector<double>& pre = trace.pre[l];
        std::vector<double>& out = trace.act[l + 1];
        pre.assign(w.rows, 0.0);
        out.assign(w.rows, 0.0);
        for (std::size_t r = 0; r < w.rows; ++r) {
            const double* row = &w.data[r * w.cols];
            double z = (*layers[l].b)[r];
            for (std::size_t c = 0; c < w.cols; ++c) {
                z += row[c] * input[c];
            }
            pre[r] = z;
            out[r] = apply_act(layers[l].act, z);
        }
    }
    return trace;
}

Gradients zero_gradients(const std::vector<LayerView>& layers) {
    Gradients grads;
    grads.w.reserve(layers.size());
    grads.b.reserve(layers.size());
    for (const LayerView& layer : layers) {
        grads.w.emplace_back(layer.w->rows, layer.w->cols);
        grads.b.emplace_back(layer.b->size(), 0.0);
    }
    return grads;
}

double mse_loss(const std::vector<double>& y, const std::vector<double>& target) {
    if (y.size() != target.size()) {
        throw std::invalid_argument("mse_loss: size mismatch");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y[i] - target[i];
        sum += d * d;
    }
    return sum / static_cast<double>(y.size());
}

std::vector<double> softmax(const std::vector<double>& logits) {
    const double max_logit = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - max_logit);
        sum += p[i];
    }
    for (double& v : p) {
        v /= sum;
    }
    return p;
}

double softmax_ce_loss(const std::vector<double>& logits, int label) {
    if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
        throw std::invalid_argument("softmax_ce_loss: label out of range");
    }
    const double max_logit = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double v : logits) {
        sum += std::exp(v - max_logit);
    }
    return std::log(sum) - (logits[static_cast<std::size_t>(label)] - max_logit);
}

namespace {

// Common backward pass from an output delta (dL/dz of the final layer).
void backward_from_delta(const std::vector<LayerView>& layers, const ForwardTrace& trace,
                         std::vector<double> delta, Gradients& grads) {
    for (std::size_t li = layers.size(); li-- > 0;) {
        const Matrix& w = *layers[li].w;
        const std::vector<double>& input = trace.act[li];
        Matrix& gw = grads.w[li];
        std::vector<double>& gb = grads.b[li];
        for (std::size_t r = 0; r < w.rows; ++r) {
            const double d = delta[r];
            gb[r] += d;
            double* grow = &gw.data[r * w.cols];
            for (std::size_t c = 0; c < w.cols; ++c) {
                grow[c] += d * input[c];
            }
        }
        if (li == 0) break;
        std::vector<double> prev(w.cols, 0.0);
        for (std::size_t r = 0; r < w.rows; ++r) {
            const double d = delta[r];
            const double* row = &w.data[r * w.cols];
            for (std::size_t c = 0; c < w.cols; ++c) {
                prev[c] += row[c] * d;
            }
        }
        const ActKind act = layers[li - 1].act;
        for (std::size_t c = 0; c < w.cols; ++c) {
            prev[c] *= act_derivative(act, trace.pre[li - 1][c], trace.act[li][c]);
        }
        delta.swap(prev);
    }
}

}  // namespace

void accumulate_mse_grads(const std::vector<LayerView>& layers, const ForwardTrace& trace,
                          const std::vector<double>& target, Gradients& grads) {
    const std::vector<double>& y = trace.act.back();
    if (y.size() != target.size()) {
        throw std::invalid_argument("accumulate_mse_grads: target size mismatch");
    }
    const double scale = 2.0 / static_cast<double>(y.size());
    const ActKind act = layers.back().act;
    std::vector<double> delta(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        delta[i] = scale * (y[i] - target[i]) *
                   act_derivative(act, trace.pre.back()[i], y[i]);
    }
    backward_from_delta(layers, trace, std::move(delta), grads);
}

void accumulate_softmax_ce_grads(const std::vector<LayerView>& layers, const ForwardTrace& trace,
                                 int label, Gradients& grads) {
    if (layers.back().act != ActKind::linear) {
        throw std::invalid_argument("accumulate_softmax_ce_grads: final layer must be linear");
    }
    const std::vector<double>& logits = trace.act.back();
    if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
        throw std::invalid_argument("accumulate_softmax_ce_grads: label out of range");
    }
    std::vector<double> delta = softmax(logits);
    delta[static_cast<std::size_t>(label)] -= 1.0;
    backward_from_delta(layers, trace, std::move(delta), grads);
}

AdamState make_adam_state(const std::vector<LayerView>& layers) {
    AdamState state;
    state.m_w.reserve(layers.size());
    state.v_w.reserve(layers.size());
    for (const LayerView& layer : layers) {
        state.m_w.emplace_back(layer.w->rows, layer.w->cols);
        state.v_w.emplace_back(layer.w->rows, layer.w->cols);
        state.m_b.emplace_back(layer.b->size(), 0.0);
        state.v_b.emplace_back(layer.b->size(), 0.0);
    }
    return state;
}

namespace {

void adam_update(double& p, double g, double& m, double& v, double lr, double b1, double b2,
                 double eps, double b1_corr, double b2_corr) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g * g;
    const double mhat = m / b1_corr;
    const double vhat = v / b2_corr;
    p -= lr * mhat / (std::sqrt(vhat) + eps);
}

}  // namespace

void adam_step(const std::vector<LayerRef>& layers, const Gradients& grads, AdamState& state,
               const TrainConfig& cfg) {
    ++state.t;
    const double b1_corr = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.t));
    const double b2_corr = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.t));
    for (std::size_t l = 0; l < layers.size(); ++l) {
        Matrix& w = *layers[l].w;
        for (std::size_t i = 0; i < w.data.size(); ++i) {
            adam_update(w.data[i], grads.w[l].data[i], state.m_w[l].data[i], state.v_w[l].data[i],
                        cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, b1_corr,
                        b2_corr);
        }
        std::vector<double>& b = *layers[l].b;
        for (std::size_t i = 0; i < b.size(); ++i) {
            adam_update(b[i], grads.b[l][i], state.m_b[l][i], state.v_b[l][i], cfg.learning_rate,
                        cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, b1_corr, b2_corr);
        }
    }
}

void sgd_step(const std::vector<LayerRef>& layers, const Gradients& grads,
              const TrainConfig& cfg) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
        Matrix& w = *layers[l].w;
        for (std::size_t i = 0; i < w.data.size(); ++i) {
            w.data[i] -= cfg.learning_rate * grads.w[l].data[i];
        }
        std::vector<double>& b = *layers[l].b;
        for (std::size_t i = 0; i < b.size(); ++i) {
            b[i] -= cfg.learning_rate * grads.b[l][i];
        }
    }
}

namespace {

void scale_gradients(Gradients& grads, double factor) {
    for (Matrix& m : grads.w) {
        for (double& v : m.data) v *= factor;
    }
    for (std::vector<double>& b : grads.b) {
        for (double& v : b) v *= factor;
    }
}

void zero_out(Gradients& grads) {
    for (Matrix& m : grads.w) {
        std::fill(m.data.begin(), m.data.end(), 0.0);
    }
    for (std::vector<double>& b : grads.b) {
        std::fill(b.begin(), b.end(), 0.0);
    }
}

// per_example(index, views, grads) accumulates gradients and returns the
// example's loss.
template <typename PerExample>
std::vector<double> run_epochs(const std::vector<LayerRef>& layers, std::size_t n_examples,
                               const TrainConfig& cfg, PerExample per_example) {
    if (n_examples == 0) {
        throw std::invalid_argument("training: empty example set");
    }
    if (cfg.learning_rate <= 0.0) {
        throw std::invalid_argument("training: learning_rate must be positive");
    }
    if (cfg.epochs <= 0) {
        throw std::invalid_argument("training: epochs must be positive");
    }
    const std::vector<LayerView> views = views_of(layers);
    AdamState adam = make_adam_state(views);
    RngStream shuffle_rng = rng_substream(cfg.seed, 1);

    std::vector<std::size_t> order(n_examples);
    std::iota(order.begin(), order.end(), 0);
    const std::size_t batch =
        cfg.batch_size <= 0 ? n_examples
                            : std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size),
                                                    n_examples);

    std::vector<double> history;
    history.reserve(static_cast<std::size_t>(cfg.epochs));
    Gradients grads = zero_gradients(views);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (batch < n_examples) {
            for (std::size_t i = 0; i + 1 < n_examples; ++i) {
                const std::size_t j = static_cast<std::size_t>(shuffle_rng.uniform_int_range(
                    static_cast<std::int64_t>(i), static_cast<std::int64_t>(n_examples) - 1));
                std::swap(order[i], order[j]);
            }
        }
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n_examples; start += batch) {
            const std::size_t stop = std::min(start + batch, n_examples);
            zero_out(grads);
            for (std::size_t i = start; i < stop; ++i) {
                epoch_loss += per_example(order[i], views, grads);
            }
            scale_gradients(grads, 1.0 / static_cast<double>(stop - start));
            if (cfg.optimizer == OptimizerKind::adam) {
                adam_step(layers, grads, adam, cfg);
            } else {
                sgd_step(layers, grads, cfg);
            }
        }
        epoch_loss /= static_cast<double>(n_examples);
        if (!std::isfinite(epoch_loss)) {
            throw std::runtime_error("training diverged (non-finite loss) at epoch " +
                                     std::to_string(epoch));
        }
        history.push_back(epoch_loss);
        if (epoch_loss < cfg.target_mse) {
            break;
        }
    }
    return history;
}

}  // namespace

std::vector<double> train_mse(const std::vector<LayerRef>& layers,
                              const std::vector<std::vector<double>>& inputs,
                              const std::vector<std::vector<double>>& targets,
                              const TrainConfig& cfg) {
    if (inputs.size() != targets.size()) {
        throw std::invalid_argument("train_mse: inputs and targets differ in count");
    }
    return run_epochs(layers, inputs.size(), cfg,
                      [&](std::size_t i, const std::vector<LayerView>& views, Gradients& grads) {
                          const ForwardTrace trace = forward_trace(views, inputs[i]);
                          accumulate_mse_grads(views, trace, targets[i], grads);
                          return mse_loss(trace.act.back(), targets[i]);
                      });
}

std::vector<double> train_softmax_ce(const std::vector<LayerRef>& layers,
                                     const std::vector<std::vector<double>>& inputs,
                                     const std::vector<int>& labels, const TrainConfig& cfg) {
    if (inputs.size() != labels.size()) {
        throw std::invalid_argument("train_softmax_ce: inputs and labels differ in count");
    }
    return run_epochs(layers, inputs.size(), cfg,
                      [&](std::size_t i, const std::vector<LayerView>& views, Gradients& grads) {
                          const ForwardTrace trace = forward_trace(views, inputs[i]);
                          accumulate_softmax_ce_grads(views, trace, labels[i], grads);
                          return softmax_ce_loss(trace.act.back(), labels[i]);
                      });
}

double grad_check(const MlpSpec& spec, const MlpParams& params, const RealVector& x,
                  RngStream& rng, std::size_t n_checks) {
    validate_spec(spec);
    Mlp local{spec, params};
    const std::vector<LayerView> views = layer_views(local);
    if (x.dim() != spec.layer_widths.front()) {
        throw std::invalid_argument("grad_check: input width mismatch");
    }

    const std::vector<double> target(spec.layer_widths.back(), 0.0);
    const ForwardTrace trace = forward_trace(views, x.components);
    Gradients grads = zero_gradients(views);
    accumulate_mse_grads(views, trace, target, grads);

    std::size_t total = 0;
    for (const LayerView& v : views) {
        total += v.w->data.size() + v.b->size();
    }

    std::set<std::size_t> chosen;
    if (total <= n_checks) {
        for (std::size_t i = 0; i < total; ++i) chosen.insert(i);
    } else {
        while (chosen.size() < n_checks) {
            chosen.insert(static_cast<std::size_t>(rng.uniform_int(total)));
        }
    }

    // Coordinate layout: layer 0 weights, layer 0 biases, layer 1 weights, ...
    auto locate = [&](std::size_t flat) -> std::pair<double*, double> {
        for (std::size_t l = 0; l < local.params.weights.size(); ++l) {
            Matrix& w = local.params.weights[l];
            if (flat < w.data.size()) {
                return {&w.data[flat], grads.w[l].data[flat]};
            }
            flat -= w.data.size();
            std::vector<double>& b = local.params.biases[l];
            if (flat < b.size()) {
                return {&b[flat], grads.b[l][flat]};
            }
            flat -= b.size();
        }
        throw std::logic_error("grad_check: coordinate out of range");
    };

    constexpr double h = 1e-5;
    double max_rel = 0.0;
    for (std::size_t flat : chosen) {
        const auto [slot, bp] = locate(flat);
        const double saved = *slot;
        *slot = saved + h;
        const double loss_plus = mse_loss(forward_flat(views, x.components), target);
        *slot = saved - h;
        const double loss_minus = mse_loss(forward_flat(views, x.components), target);
        *slot = saved;
        const double fd = (loss_plus - loss_minus) / (2.0 * h);
        const double rel =
            std::abs(bp - fd) / std::max({1e-8, std::abs(bp), std::abs(fd)});
        max_rel = std::max(max_rel, rel);
    }
    return max_rel;
}

}  // namespace conn
