#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "conn/real_vector.hpp"

namespace conn {

// One person's observed-to-seen transformation. The payload (planar config,
// autoencoder model, constant image) lives inside the step closure; the kind
// tag records which family the map belongs to.
struct PersonMap {
    enum class Kind { planar, autoencoder, constant, custom };

    Kind kind = Kind::custom;
    std::size_t dim = 0;
    std::function<RealVector(const RealVector&)> step;
    RealVector constant_point;  // meaningful for Kind::constant only
};

// Map that ignores its input and always returns `point` (the fixed external
// object of the person-object scenario).
PersonMap make_constant_person(const RealVector& point);

// Convenience wrapper for tests and adapters: an arbitrary step function.
PersonMap make_custom_person(std::size_t dim, std::function<RealVector(const RealVector&)> step);

// One observed-to-seen step. Throws std::invalid_argument on shape mismatch.
RealVector apply_map(const PersonMap& map, const RealVector& x);

// points[0] = x0, points[i+1] = apply_map(points[i]).
// residuals[i] = norm_distance(points[i+1], points[i]).
struct IterationTrace {
    std::vector<RealVector> points;
    std::vector<double> residuals;
};

IterationTrace iterate_map(const PersonMap& map, const RealVector& x0, std::size_t n);

// Result of iterating to a fixed point. `steps` counts map applications.
// When converged, the returned point changed by less than tol (normalized)
// in the final step.
struct FixedPointResult {
    RealVector point;
    std::size_t steps = 0;
    double residual = 0.0;
    bool converged = false;
};

// Iterates until norm_distance(x_{n+1}, x_n) < tol or max_steps is reached.
// Non-convergence is reported through the flag, never as an error.
FixedPointResult percept(const PersonMap& map, const RealVector& x0, double tol,
                         std::size_t max_steps);

struct CycleReport {
    std::size_t period = 0;
    std::vector<RealVector> elements;  // the final `period` points, in order
    double residual = 0.0;             // max deviation over the verification window
};

// Smallest p <= max_period such that every point in the final verification
// window of length max_period is within tol of the point p steps later.
// Requires trace length >= burn_in + 2 * max_period (std::invalid_argument
// otherwise). Returns nullopt when no period fits.
std::optional<CycleReport> detect_cycle(const IterationTrace& trace, double tol,
                                        std::size_t burn_in, std::size_t max_period);

// The sequence of transmitted images: element 0 is the seed x0, element
// iter >= 1 is [F_{od(iter)}]^{nsteps_od(iter)} applied to the previous
// element, where person 1 acts on odd iterations and person 2 on even ones.
std::vector<RealVector> interchange_sequence(const PersonMap& map1, const PersonMap& map2,
                                             const RealVector& x0, int nsteps1, int nsteps2,
                                             int n_iters);

// Every point the communication generates, starting at x0, with no
// duplicated segment boundaries. Subsampling at the cumulative segment
// boundaries {0, nsteps1, nsteps1+nsteps2, ...} reproduces
// interchange_sequence exactly.
std::vector<RealVector> generate_W(const PersonMap& map1, const PersonMap& map2,
                                   const RealVector& x0, int nsteps1, int nsteps2, int n_iters);

// Partition of the transmitted sequence into the (m+1) x K matrix whose
// columns define first-type orbits: element[row][col] = U[1 + row*K + col].
// U[0] is excluded as the seed image. Requires U.size() >= 1 + (m+1)*K.
std::vector<std::vector<RealVector>> partition_columns(const std::vector<RealVector>& U,
                                                       std::size_t K, std::size_t m);

enum class OrbitKind { none, first_type, second_type };

// A detected bipartite orbit. Element h was produced by the person acting on
// iteration h+1, so b_0 belongs to person 1 and parity alternates from there.
struct OrbitReport {
    OrbitKind kind = OrbitKind::none;
    std::size_t period_K = 0;
    std::vector<RealVector> elements;  // b_0 .. b_{K-1}
    double loop_residual = 0.0;        // empirical tail deviation (kind-dependent, see ops)
    std::vector<double> g_fixed_residuals;
    std::size_t detected_at_iter = 0;  // U index of the first settled row
    bool distinct = false;             // elements pairwise distinct beyond tolerance
    bool odd_period_anomaly = false;   // tail settled to an odd period (see detect ops)
    std::vector<double> awareness_residuals;  // second type: one-step residual per element
    std::string note;
};

// Finds the smallest even K whose columns have settled (all tail-window rows
// within tol of the final row). Coincident column limits yield kind none
// with distinct=false and the candidate K kept for diagnostics. A tail that
// settles only at an odd period is reported as kind none with the anomaly
// flag set, never silently doubled. Requires U.size() >= 4 * max_period.
OrbitReport detect_first_type_orbit(const std::vector<RealVector>& U, double tol,
                                    std::size_t max_period);

struct LoopCheck {
    double loop_residual = 0.0;
    std::vector<double> g_residuals;
};

// Replays the orbit loop with F_r = [person r's map]^{nsteps_r}:
//   loop_residual = max_h d(F_next(b_h), b_{h+1 mod K})
// where the map following b_h belongs to the other person, and
//   g_residuals[h] = d(G(b_h), b_h)
// with G = [F_1 F_2]^{K/2} at even h and [F_2 F_1]^{K/2} at odd h
// (compositions apply right to left). Distances are normalized.
LoopCheck verify_orbit_loop(const OrbitReport& orbit, const PersonMap& map1,
                            const PersonMap& map2, int nsteps1, int nsteps2);

// Runs first-type detection at every schedule entry, refines each detected
// element to the percept limit of its owning person's one-step map (the
// orbit elements of the second type are attractors), and reports
// kind=second_type when the last two refined orbits agree elementwise within
// orbit_match_tol after parity-preserving cyclic alignment. K mismatch or a
// failed detection yields kind none with diagnostics in `note`.
// awareness_residuals[h] = norm_distance(F_P(b_h), b_h) for the owning map.
OrbitReport detect_second_type_orbit(const PersonMap& map1, const PersonMap& map2,
                                     const RealVector& x0,
                                     const std::vector<int>& nsteps_schedule, double tol,
                                     double orbit_match_tol, int n_iters = 200,
                                     std::size_t max_period = 64);

}  // namespace conn
