#include "conn/resilience.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <stdexcept>

#include "conn/dynamics.hpp"

namespace conn {

namespace {

PersonMap local_person(const AutoencoderModel& model) {
    PersonMap map;
    map.kind = PersonMap::Kind::autoencoder;
    map.dim = model.input_dim;
    map.step = [&model](const RealVector& x) { return reconstruct(model, x); };
    return map;
}

// Offset inside the unit ball: Gaussian direction scaled by u^(1/d).
RealVector draw_unit_offset(std::size_t dim, RngStream& rng) {
    RealVector offset(dim);
    double norm_sq = 0.0;
    for (double& c : offset.components) {
        c = rng.normal();
        norm_sq += c * c;
    }
    double u = rng.uniform();
    if (u == 0.0) {
        u = 0x1.0p-53;  // keep the radius strictly inside (0, 1)
    }
    const double radius = std::pow(u, 1.0 / static_cast<double>(dim));
    if (norm_sq == 0.0) {
        offset.components[0] = radius;  // degenerate direction, measure zero
        return offset;
    }
    const double scale = radius / std::sqrt(norm_sq);
    for (double& c : offset.components) {
        c *= scale;
    }
    return offset;
}

BallSample scaled_sample(const RealVector& center, const RealVector& unit_offset, double T) {
    BallSample sample;
    sample.point = center;
    for (std::size_t c = 0; c < center.dim(); ++c) {
        double v = center[c] + T * unit_offset[c];
        const double clamped = std::min(1.0, std::max(0.0, v));
        if (clamped != v) {
            sample.clamped = true;
        }
        sample.point[c] = clamped;
    }
    return sample;
}

// Index of the training example the percept lands on, or -1 when the
// iteration fails or no example sits within tol_attr.
int percept_match(const PersonMap& map, const LabeledDataset& train_set, const RealVector& x,
                  const CsiConfig& cfg) {
    const FixedPointResult fp = percept(map, x, cfg.percept_tol, cfg.max_steps);
    if (!fp.converged) {
        return -1;
    }
    int best = -1;
    double best_d = cfg.tol_attr;
    for (std::size_t i = 0; i < train_set.samples.size(); ++i) {
        const double d = norm_distance(fp.point, train_set.samples[i]);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(i);
        }
    }
    return best;
}

void check_config(const CsiConfig& cfg) {
    if (!(cfg.T > 0.0)) {
        throw std::invalid_argument("csi config: T must be positive");
    }
    if (cfg.P < 1) {
        throw std::invalid_argument("csi config: P must be >= 1");
    }
    if (!(cfg.tol_attr > 0.0)) {
        throw std::invalid_argument("csi config: tol_attr must be positive");
    }
    double prev = 0.0;
    for (double t : cfg.t_grid) {
        if (!(t > prev)) {
            throw std::invalid_argument("csi config: t_grid must be strictly increasing and "
                                        "positive");
        }
        prev = t;
    }
}

struct BatchVerdict {
    bool all_same_label = true;     // every sample matched, labels all equal the probe's
    bool all_same_attractor = true; // every sample matched the probe's own example
    int clamped = 0;
    int spurious = 0;
    std::set<int> labels;
};

BatchVerdict evaluate_batch(const PersonMap& map, const LabeledDataset& train_set,
                            const RealVector& center,
                            const std::vector<RealVector>& unit_offsets, double T,
                            int probe_match, const CsiConfig& cfg) {
    BatchVerdict verdict;
    const int probe_label = train_set.labels[static_cast<std::size_t>(probe_match)];
    for (const RealVector& offset : unit_offsets) {
        const BallSample sample = scaled_sample(center, offset, T);
        if (sample.clamped) {
            ++verdict.clamped;
        }
        const int m = percept_match(map, train_set, sample.point, cfg);
        if (m < 0) {
            ++verdict.spurious;
            verdict.all_same_label = false;
            verdict.all_same_attractor = false;
            continue;
        }
        verdict.labels.insert(train_set.labels[static_cast<std::size_t>(m)]);
        if (m != probe_match) {
            verdict.all_same_attractor = false;
        }
        if (train_set.labels[static_cast<std::size_t>(m)] != probe_label) {
            verdict.all_same_label = false;
        }
    }
    return verdict;
}

// Headline classification of one probe whose own percept already matched
// training example `match`, from pre-drawn unit offsets.
ProbeFlags classify_probe(const PersonMap& map, const LabeledDataset& train_set,
                          const RealVector& x, const CsiConfig& cfg,
                          const std::vector<RealVector>& offsets, int match) {
    ProbeFlags flags;
    flags.matched_attractor_index = match;
    flags.in_h = true;
    const BatchVerdict verdict = evaluate_batch(map, train_set, x, offsets, cfg.T,
                                                flags.matched_attractor_index, cfg);
    flags.in_r = verdict.all_same_label;
    flags.in_z = !flags.in_r;
    flags.in_t_interior = verdict.all_same_attractor;
    flags.clamped_samples = verdict.clamped;
    flags.spurious_samples = verdict.spurious;
    std::set<int> labels = verdict.labels;
    labels.insert(train_set.labels[static_cast<std::size_t>(flags.matched_attractor_index)]);
    flags.label_set.assign(labels.begin(), labels.end());
    return flags;
}

std::vector<RealVector> draw_offsets(std::size_t dim, int count, RngStream& rng) {
    std::vector<RealVector> offsets;
    offsets.reserve(static_cast<std::size_t>(count));
    for (int p = 0; p < count; ++p) {
        offsets.push_back(draw_unit_offset(dim, rng));
    }
    return offsets;
}

}  // namespace

BallSample sample_in_ball(const RealVector& center, double T, RngStream& rng) {
    if (!(T > 0.0)) {
        throw std::invalid_argument("sample_in_ball: T must be positive");
    }
    validate(center, "sample_in_ball");
    return scaled_sample(center, draw_unit_offset(center.dim(), rng), T);
}

ProbeFlags probe_membership(const AutoencoderModel& ae, const LabeledDataset& train_set,
                            const RealVector& x, const CsiConfig& cfg, RngStream& rng) {
    check_config(cfg);
    validate_dataset(train_set);
    const PersonMap map = local_person(ae);
    // The probe's own percept decides whether offsets are needed; drawing
    // them only then mirrors the sweep driver's stream discipline.
    const int match = percept_match(map, train_set, x, cfg);
    if (match < 0) {
        ProbeFlags flags;
        flags.matched_attractor_index = -1;
        return flags;
    }
    const std::vector<RealVector> offsets = draw_offsets(x.dim(), cfg.P, rng);
    return classify_probe(map, train_set, x, cfg, offsets, match);
}

CsiReport class_separation_index(const AutoencoderModel& ae, const LabeledDataset& train_set,
                                 const CsiConfig& cfg) {
    check_config(cfg);
    validate_dataset(train_set);
    validate_dataset(cfg.probes);
    if (cfg.probes.samples.empty()) {
        throw std::invalid_argument("class_separation_index: probe set is empty");
    }
    const PersonMap map = local_person(ae);
    const std::size_t n_probes = cfg.probes.samples.size();

    CsiReport report;
    report.probes.reserve(n_probes);

    const std::size_t n_grid = cfg.t_grid.size();
    std::vector<std::size_t> grid_r(n_grid, 0);
    std::vector<std::size_t> grid_interior(n_grid, 0);
    std::vector<std::size_t> grid_z(n_grid, 0);

    std::size_t count_h = 0;
    std::size_t count_r = 0;
    std::size_t count_z = 0;
    std::size_t count_interior = 0;

    for (std::size_t q = 0; q < n_probes; ++q) {
        RngStream rng = rng_substream(cfg.seed, q);
        const RealVector& x = cfg.probes.samples[q];

        ProbeFlags flags;
        flags.matched_attractor_index = percept_match(map, train_set, x, cfg);
        flags.in_h = flags.matched_attractor_index >= 0;

        if (flags.in_h) {
            const std::vector<RealVector> offsets = draw_offsets(x.dim(), cfg.P, rng);
            flags = classify_probe(map, train_set, x, cfg, offsets,
                                   flags.matched_attractor_index);

            // Nested sweep: the same unit offsets at every radius, verdicts
            // ANDed cumulatively so membership can only shrink as t grows.
            bool cum_r = true;
            bool cum_interior = true;
            for (std::size_t g = 0; g < n_grid; ++g) {
                const BatchVerdict v = evaluate_batch(map, train_set, x, offsets, cfg.t_grid[g],
                                                      flags.matched_attractor_index, cfg);
                cum_r = cum_r && v.all_same_label;
                cum_interior = cum_interior && v.all_same_attractor;
                if (cum_r) ++grid_r[g];
                if (cum_interior) ++grid_interior[g];
                if (!cum_r) ++grid_z[g];
            }

            ++count_h;
            if (flags.in_r) ++count_r;
            if (flags.in_z) ++count_z;
            if (flags.in_t_interior) ++count_interior;
        }

        // Partition and containment identities, exact by construction.
        if (flags.in_h && flags.in_r == flags.in_z) {
            throw std::logic_error("csi: in_r and in_z must partition H membership");
        }
        if (flags.in_t_interior && !flags.in_r) {
            throw std::logic_error("csi: t-interior membership must imply in_r");
        }
        report.probes.push_back(std::move(flags));
    }

    const double n = static_cast<double>(n_probes);
    report.index_i = static_cast<double>(count_r) / n;
    report.h_fraction = static_cast<double>(count_h) / n;
    report.z_fraction = static_cast<double>(count_z) / n;
    report.t_interior_fraction = static_cast<double>(count_interior) / n;

    report.curve.reserve(n_grid);
    for (std::size_t g = 0; g < n_grid; ++g) {
        CsiCurveRow row;
        row.t = cfg.t_grid[g];
        row.index_i = static_cast<double>(grid_r[g]) / n;
        row.t_interior_fraction = static_cast<double>(grid_interior[g]) / n;
        row.h_fraction = report.h_fraction;
        row.z_fraction = static_cast<double>(grid_z[g]) / n;
        report.curve.push_back(row);
    }
    return report;
}

namespace {

void append_double(std::string& out, double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

}  // namespace

std::string csi_curve_csv(const CsiReport& report) {
    std::string csv = "T,I,t_interior_fraction,h_fraction,z_fraction\n";
    for (const CsiCurveRow& row : report.curve) {
        append_double(csv, row.t);
        csv.push_back(',');
        append_double(csv, row.index_i);
        csv.push_back(',');
        append_double(csv, row.t_interior_fraction);
        csv.push_back(',');
        append_double(csv, row.h_fraction);
        csv.push_back(',');
        append_double(csv, row.z_fraction);
        csv.push_back('\n');
    }
    return csv;
}

}  // namespace conn
