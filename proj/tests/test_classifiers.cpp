#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"

#include "conn/autoencoder.hpp"
#include "conn/classifiers.hpp"
#include "conn/io.hpp"
#include "conn/mlp.hpp"
#include "conn/real_vector.hpp"
#include "conn/rng.hpp"

using conn::LabeledDataset;
using conn::RealVector;
using conn::RngStream;
using conn::rng_substream;
using conn::StochasticConfig;

namespace {

LabeledDataset clean_glyphs(int classes) {
    RngStream rng = rng_substream(70, 0);
    return conn::synth_glyphs(classes, 1, rng, 0.0);
}

const conn::AutoencoderModel& shared_model() {
    static const conn::AutoencoderModel model = [] {
        conn::TrainConfig cfg;
        cfg.seed = 77;
        cfg.target_mse = 1e-5;
        return conn::train_autoencoder(clean_glyphs(2).samples, conn::desk_encoder_spec(),
                                       conn::desk_decoder_spec(), cfg)
            .model;
    }();
    return model;
}

const conn::ClassifierModel& shared_head() {
    static const conn::ClassifierModel head = [] {
        const LabeledDataset data = clean_glyphs(2);
        conn::TrainConfig cfg;
        cfg.seed = 13;
        cfg.target_mse = 1e-4;
        cfg.epochs = 5000;
        return conn::train_baseline(data, conn::desk_baseline_spec(64, 2), cfg).model;
    }();
    return head;
}

}  // namespace

TEST_CASE("dataset validation rejects each defect") {
    LabeledDataset good = clean_glyphs(2);
    CHECK_NOTHROW(conn::validate_dataset(good));

    LabeledDataset bad = good;
    bad.labels.pop_back();
    CHECK_THROWS_AS(conn::validate_dataset(bad), std::invalid_argument);

    bad = good;
    bad.labels[0] = 2;  // == class_count
    CHECK_THROWS_AS(conn::validate_dataset(bad), std::invalid_argument);

    bad = good;
    bad.labels[0] = -1;
    CHECK_THROWS_AS(conn::validate_dataset(bad), std::invalid_argument);

    bad = good;
    bad.samples[0].components[5] = 1.5;
    CHECK_THROWS_AS(conn::validate_dataset(bad), std::invalid_argument);

    bad = good;
    bad.class_count = 0;
    CHECK_THROWS_AS(conn::validate_dataset(bad), std::invalid_argument);
}

TEST_CASE("the baseline head memorizes clean glyphs") {
    const LabeledDataset data = clean_glyphs(3);
    conn::TrainConfig cfg;
    cfg.seed = 13;
    cfg.target_mse = 1e-4;
    cfg.epochs = 5000;
    const conn::BaselineTrainResult result =
        conn::train_baseline(data, conn::desk_baseline_spec(64, 3), cfg);
    CHECK(result.train_accuracy == 1.0);
    CHECK(result.loss_history.back() < 1e-4);
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
        CHECK(conn::predict(result.model, data.samples[i]).label == data.labels[i]);
    }
}

TEST_CASE("train_baseline insists on a matching linear head") {
    const LabeledDataset data = clean_glyphs(2);
    conn::TrainConfig cfg;
    cfg.epochs = 5;

    conn::MlpSpec spec = conn::desk_baseline_spec(64, 2);
    spec.final_activation = conn::FinalActivation::sigmoid;
    CHECK_THROWS_AS(conn::train_baseline(data, spec, cfg), std::invalid_argument);

    CHECK_THROWS_AS(conn::train_baseline(data, conn::desk_baseline_spec(64, 5), cfg),
                    std::invalid_argument);
    CHECK_THROWS_AS(conn::train_baseline(data, conn::desk_baseline_spec(32, 2), cfg),
                    std::invalid_argument);
}

TEST_CASE("desk baseline spec has the standard hidden sizes") {
    const conn::MlpSpec spec = conn::desk_baseline_spec(64, 4);
    CHECK(spec.layer_widths == std::vector<std::size_t>{64, 50, 10, 4});
    CHECK(spec.activation == conn::Activation::relu);
    CHECK(spec.final_activation == conn::FinalActivation::linear);
}

TEST_CASE("predict reports a softmax and breaks ties downward") {
    conn::ClassifierModel model;
    model.class_count = 3;
    model.mlp.spec.layer_widths = {2, 3};
    model.mlp.spec.final_activation = conn::FinalActivation::linear;
    conn::Matrix w(3, 2);
    // Rows 0 and 2 produce identical logits; row 1 trails.
    w.at(0, 0) = 1.0;
    w.at(1, 0) = 0.5;
    w.at(2, 0) = 1.0;
    model.mlp.params.weights = {w};
    model.mlp.params.biases = {{0.0, 0.0, 0.0}};

    const conn::Prediction pred =
        conn::predict(model, RealVector(std::vector<double>{1.0, 0.0}, {2}));
    CHECK(pred.label == 0);  // tie with class 2 breaks to the lower index
    REQUIRE(pred.probabilities.size() == 3);
    CHECK(pred.probabilities[0] == pred.probabilities[2]);
    double sum = 0.0;
    for (double p : pred.probabilities) sum += p;
    CHECK(std::fabs(sum - 1.0) < 1e-12);

    const std::vector<double> naive = oracles::naive_softmax({1.0, 0.5, 1.0});
    for (int i = 0; i < 3; ++i) CHECK(std::fabs(pred.probabilities[i] - naive[i]) < 1e-12);
}

TEST_CASE("the relaxation schedule saturates at one") {
    CHECK(conn::gamma_schedule_raw(0, 2.6) == doctest::Approx(2.6));
    CHECK(conn::gamma_schedule_raw(1, 2.6) == doctest::Approx(std::sqrt(2.6)));
    // Raw values decay toward 1 from above, so the clamp pins them all.
    for (int i = 0; i < 40; ++i) {
        CHECK(conn::gamma_schedule_raw(i, 2.6) > 1.0);
        CHECK(conn::gamma_schedule(i, 2.6) == 1.0);
    }
    CHECK_THROWS_AS(conn::gamma_schedule_raw(0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(conn::gamma_schedule_raw(0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(conn::gamma_schedule_raw(-1, 2.6), std::invalid_argument);
}

TEST_CASE("stochastic config validation") {
    StochasticConfig cfg;
    CHECK_NOTHROW(conn::validate_stochastic_config(cfg));
    StochasticConfig bad = cfg;
    bad.J = 0;
    CHECK_THROWS_AS(conn::validate_stochastic_config(bad), std::invalid_argument);
    bad = cfg;
    bad.beta = 1.0;
    CHECK_THROWS_AS(conn::validate_stochastic_config(bad), std::invalid_argument);
    bad = cfg;
    bad.i_max = -1;
    CHECK_THROWS_AS(conn::validate_stochastic_config(bad), std::invalid_argument);
    bad = cfg;
    bad.noise_scale = -0.1;
    CHECK_THROWS_AS(conn::validate_stochastic_config(bad), std::invalid_argument);
    bad = cfg;
    bad.shift_max = -1;
    CHECK_THROWS_AS(conn::validate_stochastic_config(bad), std::invalid_argument);
}

TEST_CASE("augment at gamma zero is the identity, out of range throws") {
    StochasticConfig cfg;
    RngStream rng = rng_substream(71, 0);
    RealVector x(std::vector<double>(64, 0.0), {8, 8});
    for (auto& c : x.components) c = rng.uniform();
    RngStream aug_rng = rng_substream(71, 1);
    CHECK(conn::augment(x, 0.0, cfg, aug_rng) == x);
    CHECK_THROWS_AS(conn::augment(x, -0.1, cfg, aug_rng), std::invalid_argument);
    CHECK_THROWS_AS(conn::augment(x, 1.1, cfg, aug_rng), std::invalid_argument);
}

TEST_CASE("augment noise has the configured scale before clamping") {
    StochasticConfig cfg;
    cfg.noise_scale = 0.05;
    cfg.shift_max = 0;
    // Center the image at 0.5 so the [0,1] clamp almost never engages.
    RealVector x(std::vector<double>(64, 0.5), {8, 8});
    RngStream rng = rng_substream(72, 0);
    double sum = 0.0, sum_sq = 0.0;
    const int trials = 500;
    for (int t = 0; t < trials; ++t) {
        const RealVector y = conn::augment(x, 1.0, cfg, rng);
        for (std::size_t i = 0; i < y.dim(); ++i) {
            const double d = y[i] - 0.5;
            sum += d;
            sum_sq += d * d;
        }
    }
    const double n = double(trials) * 64.0;
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    CHECK(std::fabs(mean) < 2e-3);
    CHECK(std::fabs(std::sqrt(var) - 0.05) < 2e-3);
}

TEST_CASE("augment shifts a lone pixel by at most shift_max per axis") {
    StochasticConfig cfg;
    cfg.noise_scale = 0.0;
    cfg.shift_max = 2;
    RealVector x(std::vector<double>(64, 0.0), {8, 8});
    x.components[3 * 8 + 4] = 1.0;  // row 3, col 4
    RngStream rng = rng_substream(73, 0);
    bool saw_shift = false;
    for (int t = 0; t < 300; ++t) {
        const RealVector y = conn::augment(x, 1.0, cfg, rng);
        double mass = 0.0;
        int lit_row = -1, lit_col = -1;
        for (int r = 0; r < 8; ++r) {
            for (int c = 0; c < 8; ++c) {
                const double v = y.components[std::size_t(r) * 8 + c];
                mass += v;
                if (v == 1.0) {
                    lit_row = r;
                    lit_col = c;
                }
            }
        }
        // The pixel never leaves the frame for shifts of at most 2.
        REQUIRE(mass == 1.0);
        CHECK(std::abs(lit_row - 3) <= 2);
        CHECK(std::abs(lit_col - 4) <= 2);
        if (lit_row != 3 || lit_col != 4) saw_shift = true;
    }
    CHECK(saw_shift);

    // A 1-D sample is never shifted, only noised.
    RealVector flat(16, 0.0);
    flat.components[7] = 1.0;
    RngStream flat_rng = rng_substream(73, 1);
    for (int t = 0; t < 20; ++t) {
        CHECK(conn::augment(flat, 1.0, cfg, flat_rng) == flat);
    }
}

TEST_CASE("vanilla attractorization fixes converged samples") {
    const conn::AutoencoderModel& model = shared_model();
    const LabeledDataset data = clean_glyphs(2);
    const conn::AttractorizedDataset atr = conn::attractorize_vanilla(model, data, 100, 1e-6);
    REQUIRE(atr.samples.size() == 2);
    CHECK(atr.labels == data.labels);
    CHECK(atr.class_count == 2);
    CHECK(atr.provenance == conn::Provenance::vanilla);
    for (std::size_t i = 0; i < atr.samples.size(); ++i) {
        CHECK(atr.converged[i]);
        // The output is a genuine fixed point and stays near its source.
        const RealVector once = conn::reconstruct(model, atr.samples[i]);
        CHECK(conn::norm_distance(once, atr.samples[i]) < 1e-6);
        CHECK(conn::norm_distance(atr.samples[i], data.samples[i]) < 2e-2);
        CHECK(atr.samples[i].shape == data.samples[i].shape);
    }

    // n = 0 means no iterations: samples pass through, flagged unconverged.
    const conn::AttractorizedDataset idle = conn::attractorize_vanilla(model, data, 0, 1e-6);
    for (std::size_t i = 0; i < idle.samples.size(); ++i) {
        CHECK(idle.samples[i] == data.samples[i]);
        CHECK(!idle.converged[i]);
    }
}

TEST_CASE("stochastic attractorization is deterministic and per-sample seeded") {
    const conn::AutoencoderModel& model = shared_model();
    const LabeledDataset data = clean_glyphs(2);
    StochasticConfig cfg;
    cfg.J = 8;
    cfg.i_max = 10;
    cfg.noise_scale = 0.05;
    cfg.shift_max = 1;
    cfg.seed = 99;
    const conn::AttractorizedDataset a = conn::attractorize_stochastic(model, data, cfg);
    const conn::AttractorizedDataset b = conn::attractorize_stochastic(model, data, cfg);
    REQUIRE(a.samples.size() == b.samples.size());
    CHECK(a.provenance == conn::Provenance::stochastic);
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i] == b.samples[i]);
        CHECK(a.converged[i]);
        for (double c : a.samples[i].components) {
            CHECK(c >= 0.0);
            CHECK(c <= 1.0);
        }
    }

    StochasticConfig other = cfg;
    other.seed = 100;
    const conn::AttractorizedDataset c = conn::attractorize_stochastic(model, data, other);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        if (!(a.samples[i] == c.samples[i])) any_diff = true;
    }
    CHECK(any_diff);
}

TEST_CASE("with augmentation off the ensemble collapses to the vanilla percept") {
    const conn::AutoencoderModel& model = shared_model();
    const LabeledDataset data = clean_glyphs(2);
    StochasticConfig cfg;
    cfg.J = 5;
    cfg.i_max = 40;
    cfg.noise_scale = 0.0;
    cfg.shift_max = 0;
    cfg.seed = 3;
    const conn::StochasticPercept sp = conn::stochastic_percept(model, data.samples[0], cfg);
    REQUIRE(sp.ensemble.size() == 5);
    for (const RealVector& member : sp.ensemble) CHECK(member == sp.ensemble[0]);
    // Identical members short-circuit the mean, keeping it bitwise equal.
    CHECK(sp.f_star == sp.ensemble[0]);

    RealVector vanilla = data.samples[0];
    for (int i = 0; i < 40; ++i) vanilla = conn::reconstruct(model, vanilla);
    CHECK(sp.f_star == vanilla);
}

TEST_CASE("the ensemble mean stays inside the componentwise hull") {
    const conn::AutoencoderModel& model = shared_model();
    const LabeledDataset data = clean_glyphs(2);
    StochasticConfig cfg;
    cfg.J = 12;
    cfg.i_max = 8;
    cfg.noise_scale = 0.08;
    cfg.shift_max = 1;
    cfg.seed = 21;
    const conn::StochasticPercept sp = conn::stochastic_percept(model, data.samples[1], cfg);
    REQUIRE(sp.final_residuals.size() == 12);
    for (std::size_t i = 0; i < sp.f_star.dim(); ++i) {
        double lo = 1e9, hi = -1e9;
        for (const RealVector& member : sp.ensemble) {
            lo = std::min(lo, member[i]);
            hi = std::max(hi, member[i]);
        }
        CHECK(sp.f_star[i] >= lo);
        CHECK(sp.f_star[i] <= hi);
    }

    const conn::StochasticPercept again = conn::stochastic_percept(model, data.samples[1], cfg);
    CHECK(again.f_star == sp.f_star);
}

TEST_CASE("vanilla_classify labels training glyphs and repeats on fallback") {
    const conn::AutoencoderModel& model = shared_model();
    const conn::ClassifierModel& head = shared_head();
    const LabeledDataset data = clean_glyphs(2);
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
        const conn::VanillaVerdict verdict = conn::vanilla_classify(model, head, data.samples[i]);
        CHECK(verdict.label == data.labels[i]);
        CHECK(!verdict.suspicious);
    }

    // Force the fallback path: zero iterations means nothing converges.
    const conn::VanillaVerdict f1 = conn::vanilla_classify(model, head, data.samples[0], 0);
    const conn::VanillaVerdict f2 = conn::vanilla_classify(model, head, data.samples[0], 0);
    CHECK(f1.suspicious);
    CHECK(f2.suspicious);
    CHECK(f1.label == f2.label);
    CHECK(f1.label >= 0);
    CHECK(f1.label < 2);
}

TEST_CASE("stochastic_classify agrees with predict on the ensemble mean") {
    const conn::AutoencoderModel& model = shared_model();
    const conn::ClassifierModel& head = shared_head();
    const LabeledDataset data = clean_glyphs(2);
    StochasticConfig cfg;
    cfg.J = 6;
    cfg.i_max = 10;
    cfg.noise_scale = 0.03;
    cfg.shift_max = 0;
    cfg.seed = 8;
    const int label = conn::stochastic_classify(model, head, data.samples[0], cfg);
    const conn::StochasticPercept sp = conn::stochastic_percept(model, data.samples[0], cfg);
    CHECK(label == conn::predict(head, sp.f_star).label);
}

TEST_CASE("evaluate builds the confusion matrix and rejects bad labels") {
    const LabeledDataset data = clean_glyphs(3);
    const conn::Evaluation eval =
        conn::evaluate([](const RealVector&) { return 1; }, data);
    CHECK(eval.accuracy == doctest::Approx(1.0 / 3.0));
    REQUIRE(eval.confusion.size() == 3);
    CHECK(eval.confusion[0][1] == 1);
    CHECK(eval.confusion[1][1] == 1);
    CHECK(eval.confusion[2][1] == 1);
    CHECK(eval.confusion[0][0] == 0);

    CHECK_THROWS_AS(conn::evaluate([](const RealVector&) { return 3; }, data),
                    std::runtime_error);
    CHECK_THROWS_AS(conn::evaluate([](const RealVector&) { return -1; }, data),
                    std::runtime_error);
}
