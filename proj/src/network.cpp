#include "conn/network.hpp"

#include <algorithm>
#include <stdexcept>

namespace conn {

ConnRun run_conn(const ConnExperiment& exp) {
    if (exp.person1.dim != exp.person2.dim) {
        throw std::invalid_argument("run_conn: persons disagree on dimension");
    }
    ConnRun run;
    run.interchange = interchange_sequence(exp.person1, exp.person2, exp.x0, exp.nsteps1,
                                           exp.nsteps2, exp.n_iters);
    run.w = generate_W(exp.person1, exp.person2, exp.x0, exp.nsteps1, exp.nsteps2, exp.n_iters);

    const std::size_t room = (run.interchange.size() - 1) / 4;
    const std::size_t max_period = std::min(exp.max_period, room);
    if (max_period >= 2) {
        run.orbit = detect_first_type_orbit(run.interchange, exp.tol, max_period);
    } else {
        run.orbit.kind = OrbitKind::none;
        run.orbit.note = "exchange too short for an orbit search";
    }
    return run;
}

std::vector<RealVector> run_object_perception(const PersonMap& person,
                                              const RealVector& object_image, int nsteps,
                                              int n_iters) {
    ConnExperiment exp;
    exp.person1 = person;
    exp.person2 = make_constant_person(object_image);
    exp.x0 = object_image;
    exp.nsteps1 = nsteps;
    exp.nsteps2 = 1;
    exp.n_iters = n_iters;
    return run_conn(exp).interchange;
}

OrbitReport second_type_study(const ConnExperiment& exp,
                              const std::vector<int>& nsteps_schedule) {
    return detect_second_type_orbit(exp.person1, exp.person2, exp.x0, nsteps_schedule, exp.tol,
                                    exp.orbit_match_tol, exp.n_iters, exp.max_period);
}

PersonMap make_autoencoder_person(const AutoencoderModel& model) {
    validate_autoencoder(model);
    PersonMap map;
    map.kind = PersonMap::Kind::autoencoder;
    map.dim = model.input_dim;
    map.step = [model](const RealVector& x) { return reconstruct(model, x); };
    return map;
}

}  // namespace conn
