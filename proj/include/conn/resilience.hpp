#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "conn/autoencoder.hpp"
#include "conn/classifiers.hpp"
#include "conn/real_vector.hpp"
#include "conn/rng.hpp"

namespace conn {

// Monte-Carlo probe of basin membership around a finite probe set. T has no
// default on purpose: any particular radius encodes a perceptual-similarity
// claim the caller must own.
struct CsiConfig {
    double T = 0.0;           // ball radius, required > 0
    LabeledDataset probes;    // the finite probe set X'
    int P = 64;               // ball samples per probe
    double tol_attr = 1e-2;   // normalized match radius to a training example
    std::uint64_t seed = 0;
    std::vector<double> t_grid;  // optional strictly increasing radii for the sweep
    double percept_tol = 1e-6;
    std::size_t max_steps = 10000;
};

struct BallSample {
    RealVector point;
    bool clamped = false;  // true when the [0,1]^d clamp moved the point
};

// Uniform draw from the open L2 ball of radius T around center: direction
// from d normals, radius T*u^(1/d). The result is clamped into [0,1]^d
// (image domain); the flag records whether the clamp acted. Draw order: d
// normals, then the radius uniform.
BallSample sample_in_ball(const RealVector& center, double T, RngStream& rng);

struct ProbeFlags {
    bool in_h = false;           // probe's percept matches a training example
    bool in_r = false;           // whole sampled ball keeps the probe's label
    bool in_z = false;           // ball witnesses a differently labeled basin
    bool in_t_interior = false;  // whole sampled ball stays in one basin
    int matched_attractor_index = -1;
    std::vector<int> label_set;  // distinct labels reached from the ball, sorted
    int clamped_samples = 0;
    int spurious_samples = 0;  // samples whose percept matched no training example
};

// Classifies one probe: percept the probe itself, then percept P ball
// samples. in_r demands every sample land on a training example carrying
// the probe's own matched label (a single spurious sample disqualifies);
// in_z is its complement inside H; in_t_interior demands every sample land
// on the probe's own attractor. A probe whose own percept fails leaves all
// flags false.
ProbeFlags probe_membership(const AutoencoderModel& ae, const LabeledDataset& train_set,
                            const RealVector& x, const CsiConfig& cfg, RngStream& rng);

struct CsiCurveRow {
    double t = 0.0;
    double index_i = 0.0;
    double t_interior_fraction = 0.0;
    double h_fraction = 0.0;
    double z_fraction = 0.0;
};

struct CsiReport {
    std::vector<ProbeFlags> probes;  // headline flags at cfg.T, probe order
    double index_i = 0.0;            // |in_r| / |X'|
    double t_interior_fraction = 0.0;
    double h_fraction = 0.0;
    double z_fraction = 0.0;
    // One row per t_grid radius. Rows reuse each probe's canonical unit
    // samples at every radius and AND the verdicts cumulatively, so index_i
    // and t_interior_fraction are non-increasing in t by construction.
    std::vector<CsiCurveRow> curve;
};

// Runs probe_membership over the whole probe set (probe q draws from
// rng_substream(cfg.seed, q)) and, when t_grid is set, sweeps the nested
// monotone curve. The sampled in_r is an over-estimate of true membership:
// finite P can miss a basin intersection, so reports carry P.
CsiReport class_separation_index(const AutoencoderModel& ae, const LabeledDataset& train_set,
                                 const CsiConfig& cfg);

// The sweep as CSV with header T,I,t_interior_fraction,h_fraction,z_fraction.
std::string csi_curve_csv(const CsiReport& report);

}  // namespace conn
