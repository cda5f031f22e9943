#pragma once

#include <cstdint>
#include <vector>

#include "conn/autoencoder.hpp"
#include "conn/dynamics.hpp"

namespace conn {

// One two-person communication experiment: the alternating exchange of
// Algorithm 1 with fixed internal step counts.
struct ConnExperiment {
    PersonMap person1;
    PersonMap person2;
    RealVector x0;  // seed image Im_1
    int nsteps1 = 1;
    int nsteps2 = 1;
    int n_iters = 200;
    std::uint64_t seed = 0;  // provenance only; the exchange itself is deterministic
    double tol = 1e-9;
    double orbit_match_tol = 1e-6;
    std::size_t max_period = 64;
};

struct ConnRun {
    std::vector<RealVector> interchange;  // U: element 0 is the seed
    std::vector<RealVector> w;            // every generated point, boundaries not duplicated
    OrbitReport orbit;
};

// Runs the exchange, records both sequences, and searches the transmitted
// sequence for a first-type orbit. The search period cap is clamped to a
// quarter of the available exchanges; when even that leaves no room the
// orbit report comes back kind none with an explanatory note.
ConnRun run_conn(const ConnExperiment& exp);

// The person-object scenario: the second party is an object that always
// presents the same image regardless of what it receives. Implemented
// verbatim as run_conn with a constant second person (nsteps2 = 1) seeded
// at the object image, so the equivalence of the two framings is exact.
std::vector<RealVector> run_object_perception(const PersonMap& person,
                                              const RealVector& object_image, int nsteps,
                                              int n_iters);

// Second-type orbit search across an increasing nsteps schedule; the
// returned report carries per-element awareness residuals (the owning
// person's single-step deviation at each orbit element).
OrbitReport second_type_study(const ConnExperiment& exp, const std::vector<int>& nsteps_schedule);

// The autoencoder's dec(enc(.)) composite as a PersonMap. The model is
// copied into the closure, so the map outlives the argument.
PersonMap make_autoencoder_person(const AutoencoderModel& model);

}  // namespace conn
