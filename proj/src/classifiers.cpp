#include "conn/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

namespace conn {

void validate_dataset(const LabeledDataset& dataset) {
    if (dataset.samples.size() != dataset.labels.size()) {
        throw std::invalid_argument("dataset: samples and labels differ in count");
    }
    if (dataset.class_count < 1) {
        throw std::invalid_argument("dataset: class_count must be positive");
    }
    for (int label : dataset.labels) {
        if (label < 0 || label >= dataset.class_count) {
            throw std::invalid_argument("dataset: label " + std::to_string(label) +
                                        " outside 0.." + std::to_string(dataset.class_count - 1));
        }
    }
    for (const RealVector& s : dataset.samples) {
        validate(s, "dataset");
        for (double v : s.components) {
            if (v < 0.0 || v > 1.0) {
                throw std::invalid_argument("dataset: image component outside [0,1]");
            }
        }
    }
}

BaselineTrainResult train_baseline(const LabeledDataset& dataset, const MlpSpec& spec,
                                   const TrainConfig& cfg) {
    validate_dataset(dataset);
    validate_spec(spec);
    if (dataset.samples.empty()) {
        throw std::invalid_argument("train_baseline: empty dataset");
    }
    if (spec.final_activation != FinalActivation::linear) {
        throw std::invalid_argument("train_baseline: classifier head must be linear logits");
    }
    if (spec.layer_widths.back() != static_cast<std::size_t>(dataset.class_count)) {
        throw std::invalid_argument("train_baseline: output width must equal class_count");
    }
    if (spec.layer_widths.front() != dataset.samples.front().dim()) {
        throw std::invalid_argument("train_baseline: input width must match the samples");
    }

    std::vector<std::vector<double>> inputs;
    inputs.reserve(dataset.samples.size());
    for (const RealVector& s : dataset.samples) {
        inputs.push_back(s.components);
    }

    RngStream init_rng = rng_substream(cfg.seed, 0);
    BaselineTrainResult result;
    result.model.mlp = make_mlp(spec, init_rng);
    result.model.class_count = dataset.class_count;
    const std::vector<LayerRef> refs = layer_refs(result.model.mlp);
    result.loss_history = train_softmax_ce(refs, inputs, dataset.labels, cfg);

    std::size_t correct = 0;
    for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
        if (predict(result.model, dataset.samples[i]).label == dataset.labels[i]) {
            ++correct;
        }
    }
    result.train_accuracy = static_cast<double>(correct) /
                            static_cast<double>(dataset.samples.size());
    return result;
}

MlpSpec desk_baseline_spec(std::size_t input_dim, int class_count) {
    if (class_count < 1) {
        throw std::invalid_argument("desk_baseline_spec: class_count must be positive");
    }
    MlpSpec spec;
    spec.layer_widths = {input_dim, 50, 10, static_cast<std::size_t>(class_count)};
    spec.activation = Activation::relu;
    spec.final_activation = FinalActivation::linear;
    return spec;
}

Prediction predict(const ClassifierModel& model, const RealVector& x) {
    const RealVector logits = forward(model.mlp, x);
    Prediction prediction;
    prediction.probabilities = softmax(logits.components);
    // Strict > keeps the lowest index on ties.
    std::size_t best = 0;
    for (std::size_t i = 1; i < prediction.probabilities.size(); ++i) {
        if (prediction.probabilities[i] > prediction.probabilities[best]) {
            best = i;
        }
    }
    prediction.label = static_cast<int>(best);
    return prediction;
}

void validate_stochastic_config(const StochasticConfig& cfg) {
    if (cfg.J < 1) {
        throw std::invalid_argument("stochastic config: J must be >= 1");
    }
    if (!(cfg.beta > 1.0)) {
        throw std::invalid_argument("stochastic config: beta must be > 1");
    }
    if (cfg.i_max < 0) {
        throw std::invalid_argument("stochastic config: i_max must be >= 0");
    }
    if (cfg.noise_scale < 0.0) {
        throw std::invalid_argument("stochastic config: noise_scale must be >= 0");
    }
    if (cfg.shift_max < 0) {
        throw std::invalid_argument("stochastic config: shift_max must be >= 0");
    }
}

double gamma_schedule_raw(int i, double beta) {
    if (i < 0) {
        throw std::invalid_argument("gamma_schedule: i must be >= 0");
    }
    if (!(beta > 1.0)) {
        throw std::invalid_argument("gamma_schedule: beta must be > 1");
    }
    return std::pow(beta, 1.0 / static_cast<double>(i + 1));
}

double gamma_schedule(int i, double beta) {
    return std::min(1.0, gamma_schedule_raw(i, beta));
}

RealVector augment(const RealVector& x, double gamma, const StochasticConfig& cfg,
                   RngStream& rng) {
    if (!(gamma >= 0.0 && gamma <= 1.0)) {
        throw std::invalid_argument("augment: gamma must lie in [0,1]");
    }
    validate(x, "augment");

    RealVector out = x;
    const double sigma = gamma * cfg.noise_scale;
    for (double& c : out.components) {
        c += sigma * rng.normal();
    }

    if (x.shape.size() == 2 && cfg.shift_max > 0) {
        const long max_shift = std::lround(gamma * cfg.shift_max);
        if (max_shift > 0) {
            const auto dr = rng.uniform_int_range(-max_shift, max_shift);
            const auto dc = rng.uniform_int_range(-max_shift, max_shift);
            const std::int64_t rows = static_cast<std::int64_t>(x.shape[0]);
            const std::int64_t cols = static_cast<std::int64_t>(x.shape[1]);
            RealVector shifted(out.dim());
            shifted.shape = out.shape;
            for (std::int64_t r = 0; r < rows; ++r) {
                for (std::int64_t c = 0; c < cols; ++c) {
                    const std::int64_t sr = r - dr;
                    const std::int64_t sc = c - dc;
                    const bool inside = sr >= 0 && sr < rows && sc >= 0 && sc < cols;
                    shifted.components[static_cast<std::size_t>(r * cols + c)] =
                        inside ? out.components[static_cast<std::size_t>(sr * cols + sc)] : 0.0;
                }
            }
            out = std::move(shifted);
        }
    }

    for (double& c : out.components) {
        c = std::min(1.0, std::max(0.0, c));
    }
    return out;
}

StochasticPercept stochastic_percept(const AutoencoderModel& ae, const RealVector& x,
                                     const StochasticConfig& cfg) {
    validate_stochastic_config(cfg);
    validate(x, "stochastic_percept");
    if (x.dim() != ae.input_dim) {
        throw std::invalid_argument("stochastic_percept: input width does not match the model");
    }

    StochasticPercept result;
    result.ensemble.reserve(static_cast<std::size_t>(cfg.J));
    result.final_residuals.reserve(static_cast<std::size_t>(cfg.J));

    for (int j = 1; j <= cfg.J; ++j) {
        RngStream member_rng = rng_substream(cfg.seed, static_cast<std::uint64_t>(j));
        RealVector cur = x;
        RealVector prev = x;
        for (int i = 0; i < cfg.i_max; ++i) {
            const double gamma = gamma_schedule(i, cfg.beta);
            prev = cur;
            cur = reconstruct(ae, augment(cur, gamma, cfg, member_rng));
        }
        result.final_residuals.push_back(cfg.i_max > 0 ? norm_distance(cur, prev) : 0.0);
        result.ensemble.push_back(std::move(cur));
    }

    bool all_identical = true;
    for (std::size_t j = 1; j < result.ensemble.size() && all_identical; ++j) {
        all_identical = (result.ensemble[j] == result.ensemble[0]);
    }
    if (all_identical) {
        result.f_star = result.ensemble[0];
        return result;
    }

    const std::size_t dim = result.ensemble[0].dim();
    RealVector mean(dim);
    mean.shape = result.ensemble[0].shape;
    for (const RealVector& member : result.ensemble) {
        for (std::size_t c = 0; c < dim; ++c) {
            mean[c] += member[c];
        }
    }
    for (std::size_t c = 0; c < dim; ++c) {
        mean[c] /= static_cast<double>(result.ensemble.size());
    }
    // The mean of doubles can escape the hull by rounding; pin it back so
    // the convexity property is exact.
    for (std::size_t c = 0; c < dim; ++c) {
        double lo = result.ensemble[0][c];
        double hi = lo;
        for (const RealVector& member : result.ensemble) {
            lo = std::min(lo, member[c]);
            hi = std::max(hi, member[c]);
        }
        mean[c] = std::min(hi, std::max(lo, mean[c]));
    }
    result.f_star = std::move(mean);
    return result;
}

namespace {

struct VanillaIterate {
    RealVector point;
    bool converged = false;
};

VanillaIterate vanilla_iterate(const AutoencoderModel& ae, const RealVector& x, int n,
                               double tol) {
    VanillaIterate out{x, false};
    for (int step = 0; step < n; ++step) {
        RealVector next = reconstruct(ae, out.point);
        const double r = norm_distance(next, out.point);
        out.point = std::move(next);
        if (r < tol) {
            out.converged = true;
            break;
        }
    }
    return out;
}

// FNV-1a over the raw component and shape bytes; stable on a fixed platform,
// used only to give every input its own fallback-label stream.
std::uint64_t fingerprint(const RealVector& x) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix_bytes = [&h](const void* data, std::size_t len) {
        const unsigned char* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= p[i];
            h *= 1099511628211ull;
        }
    };
    mix_bytes(x.components.data(), x.components.size() * sizeof(double));
    mix_bytes(x.shape.data(), x.shape.size() * sizeof(std::size_t));
    return h;
}

}  // namespace

AttractorizedDataset attractorize_vanilla(const AutoencoderModel& ae,
                                          const LabeledDataset& dataset, int n, double tol) {
    validate_dataset(dataset);
    if (n < 0) {
        throw std::invalid_argument("attractorize_vanilla: n must be >= 0");
    }
    AttractorizedDataset out;
    out.labels = dataset.labels;
    out.class_count = dataset.class_count;
    out.provenance = Provenance::vanilla;
    out.samples.reserve(dataset.samples.size());
    out.converged.reserve(dataset.samples.size());
    for (const RealVector& s : dataset.samples) {
        VanillaIterate it = vanilla_iterate(ae, s, n, tol);
        out.samples.push_back(std::move(it.point));
        out.converged.push_back(it.converged);
    }
    return out;
}

AttractorizedDataset attractorize_stochastic(const AutoencoderModel& ae,
                                             const LabeledDataset& dataset,
                                             const StochasticConfig& cfg) {
    validate_dataset(dataset);
    validate_stochastic_config(cfg);
    AttractorizedDataset out;
    out.labels = dataset.labels;
    out.class_count = dataset.class_count;
    out.provenance = Provenance::stochastic;
    out.samples.reserve(dataset.samples.size());
    out.converged.assign(dataset.samples.size(), true);
    for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
        StochasticConfig per_sample = cfg;
        per_sample.seed = rng_substream(cfg.seed, static_cast<std::uint64_t>(i)).next_u64();
        out.samples.push_back(stochastic_percept(ae, dataset.samples[i], per_sample).f_star);
    }
    return out;
}

VanillaVerdict vanilla_classify(const AutoencoderModel& ae, const ClassifierModel& model,
                                const RealVector& x, int n, double tol,
                                std::uint64_t fallback_seed) {
    if (n < 0) {
        throw std::invalid_argument("vanilla_classify: n must be >= 0");
    }
    if (model.class_count < 1) {
        throw std::invalid_argument("vanilla_classify: model has no classes");
    }
    const VanillaIterate it = vanilla_iterate(ae, x, n, tol);
    VanillaVerdict verdict;
    if (it.converged) {
        verdict.label = predict(model, it.point).label;
        verdict.suspicious = false;
    } else {
        RngStream fallback = rng_substream(fallback_seed, fingerprint(x));
        verdict.label = static_cast<int>(
            fallback.uniform_int(static_cast<std::uint64_t>(model.class_count)));
        verdict.suspicious = true;
    }
    return verdict;
}

int stochastic_classify(const AutoencoderModel& ae, const ClassifierModel& model,
                        const RealVector& x, const StochasticConfig& cfg) {
    return predict(model, stochastic_percept(ae, x, cfg).f_star).label;
}

Evaluation evaluate(const std::function<int(const RealVector&)>& classifier,
                    const LabeledDataset& dataset) {
    validate_dataset(dataset);
    const std::size_t c = static_cast<std::size_t>(dataset.class_count);
    Evaluation eval;
    eval.confusion.assign(c, std::vector<std::size_t>(c, 0));
    if (dataset.samples.empty()) {
        return eval;
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
        const int pred = classifier(dataset.samples[i]);
        if (pred < 0 || pred >= dataset.class_count) {
            throw std::runtime_error("evaluate: classifier returned label " +
                                     std::to_string(pred) + " outside the class range");
        }
        eval.confusion[static_cast<std::size_t>(dataset.labels[i])]
                      [static_cast<std::size_t>(pred)] += 1;
        if (pred == dataset.labels[i]) {
            ++correct;
        }
    }
    eval.accuracy = static_cast<double>(correct) / static_cast<double>(dataset.samples.size());
    return eval;
}

}  // namespace conn
