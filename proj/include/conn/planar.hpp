#pragma once

#include <vector>

#include "conn/dynamics.hpp"
#include "conn/real_vector.hpp"
#include "conn/rng.hpp"

namespace conn {

// Exact two-person network on the unit square. Person 1 owns n1 vertical
// strip basins cut by cuts_a on the x axis, person 2 owns n2 horizontal
// strip basins cut by cuts_b on the y axis. Each person's map contracts a
// point toward the attractor of the basin the point falls in.
struct PlanarConfig {
    int n1 = 1;
    int n2 = 1;
    double k = 0.5;  // contraction factor, 0 < k < 1
    std::vector<double> cuts_a;  // length n1-1, strictly increasing inside (0,1)
    std::vector<double> cuts_b;  // length n2-1
    std::vector<RealVector> attractors_1;  // attractors_1[i] inside x-basin i
    std::vector<RealVector> attractors_2;  // attractors_2[j] inside y-basin j
};

// Throws std::invalid_argument on any violated invariant: k outside (0,1),
// cut lists of the wrong length, cuts not strictly increasing inside (0,1),
// or an attractor outside its own basin.
void validate_planar_config(const PlanarConfig& config);

// Cuts sampled uniformly then sorted; each attractor sampled uniformly
// inside its basin, at least 1e-3 away from every basin boundary (square
// edges included). Cut sets leaving any basin narrower than 2.5e-3 are
// rejected and redrawn so the margin interval never collapses.
PlanarConfig random_planar_config(int n1, int n2, double k, RngStream& rng);

// Index of the half-open interval holding the point's relevant coordinate
// (x for person 1, y for person 2). A coordinate equal to a cut belongs to
// the interval above it; the last interval is closed at 1. Throws
// std::invalid_argument if the point leaves [0,1]^2 or person is not 1 or 2.
int basin_index(const PlanarConfig& config, int person, const RealVector& point);

// One contraction step: (1-k)*Att + k*point with Att the attractor of the
// point's basin for that person.
RealVector planar_step(const PlanarConfig& config, int person, const RealVector& point);

// The person's observed-to-seen map as a dynamics-engine PersonMap. The
// config is captured by value; the returned map is self-contained.
PersonMap make_planar_person(const PlanarConfig& config, int person);

// The alternating exchange on the planar network: both persons are built
// from `config` and handed to interchange_sequence, so element 0 is the
// seed i0 and element iter is the image transmitted at iteration iter.
std::vector<RealVector> run_algorithm2(const PlanarConfig& config, const RealVector& i0,
                                       int nsteps1, int nsteps2, int n_iters);

}  // namespace conn
