#include "conn/planar.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace conn {

namespace {

constexpr double kAttractorMargin = 1e-3;
// Narrowest basin accepted during random generation; keeps the
// margin-shrunk sampling interval strictly positive.
constexpr double kMinBasinWidth = 2.5e-3;

void check_person(int person) {
    if (person != 1 && person != 2) {
        throw std::invalid_argument("planar: person must be 1 or 2, got " +
                                    std::to_string(person));
    }
}

void check_point(const RealVector& point, const char* where) {
    if (point.dim() != 2) {
        throw std::invalid_argument(std::string(where) + ": point must have dimension 2");
    }
    for (double c : point.components) {
        if (!(c >= 0.0 && c <= 1.0)) {
            throw std::invalid_argument(std::string(where) + ": point outside the unit square");
        }
    }
}

// Index of the half-open interval [c_{i-1}, c_i) holding `coord`; the last
// interval is closed at 1. Equals the number of cuts <= coord.
int interval_index(const std::vector<double>& cuts, double coord) {
    const auto it = std::upper_bound(cuts.begin(), cuts.end(), coord);
    return static_cast<int>(it - cuts.begin());
}

void check_cuts(const std::vector<double>& cuts, int n, const char* which) {
    if (cuts.size() + 1 != static_cast<std::size_t>(n)) {
        throw std::invalid_argument(std::string("planar config: ") + which + " must have length " +
                                    std::to_string(n - 1));
    }
    double prev = 0.0;
    for (double c : cuts) {
        if (!(c > prev && c < 1.0)) {
            throw std::invalid_argument(std::string("planar config: ") + which +
                                        " must be strictly increasing inside (0,1)");
        }
        prev = c;
    }
}

}  // namespace

void validate_planar_config(const PlanarConfig& config) {
    if (config.n1 < 1 || config.n2 < 1) {
        throw std::invalid_argument("planar config: attractor counts must be positive");
    }
    if (!(config.k > 0.0 && config.k < 1.0)) {
        throw std::invalid_argument("planar config: k must lie in (0,1)");
    }
    check_cuts(config.cuts_a, config.n1, "cuts_a");
    check_cuts(config.cuts_b, config.n2, "cuts_b");
    if (config.attractors_1.size() != static_cast<std::size_t>(config.n1) ||
        config.attractors_2.size() != static_cast<std::size_t>(config.n2)) {
        throw std::invalid_argument("planar config: attractor list lengths must match n1/n2");
    }
    for (int person = 1; person <= 2; ++person) {
        const auto& attractors = (person == 1) ? config.attractors_1 : config.attractors_2;
        for (int i = 0; i < static_cast<int>(attractors.size()); ++i) {
            check_point(attractors[i], "planar config attractor");
            if (basin_index(config, person, attractors[i]) != i) {
                throw std::invalid_argument("planar config: attractor " + std::to_string(i) +
                                            " of person " + std::to_string(person) +
                                            " lies outside its basin");
            }
        }
    }
}

namespace {

// n-1 uniform cuts, sorted, redrawn until every basin (square edges
// included as sentinels) is wider than kMinBasinWidth.
std::vector<double> draw_cuts(int n, RngStream& rng) {
    std::vector<double> cuts(static_cast<std::size_t>(n - 1));
    for (;;) {
        for (double& c : cuts) {
            c = rng.uniform();
        }
        std::sort(cuts.begin(), cuts.end());
        double prev = 0.0;
        bool wide_enough = true;
        for (double c : cuts) {
            if (c - prev <= kMinBasinWidth) {
                wide_enough = false;
                break;
            }
            prev = c;
        }
        if (wide_enough && 1.0 - prev > kMinBasinWidth) {
            return cuts;
        }
    }
}

double uniform_in(double lo, double hi, RngStream& rng) {
    return lo + rng.uniform() * (hi - lo);
}

}  // namespace

PlanarConfig random_planar_config(int n1, int n2, double k, RngStream& rng) {
    if (n1 < 1 || n2 < 1) {
        throw std::invalid_argument("random_planar_config: attractor counts must be positive");
    }
    if (!(k > 0.0 && k < 1.0)) {
        throw std::invalid_argument("random_planar_config: k must lie in (0,1)");
    }

    PlanarConfig config;
    config.n1 = n1;
    config.n2 = n2;
    config.k = k;
    config.cuts_a = draw_cuts(n1, rng);
    config.cuts_b = draw_cuts(n2, rng);

    const double m = kAttractorMargin;
    config.attractors_1.reserve(static_cast<std::size_t>(n1));
    for (int i = 0; i < n1; ++i) {
        const double lo = (i == 0) ? 0.0 : config.cuts_a[static_cast<std::size_t>(i) - 1];
        const double hi = (i == n1 - 1) ? 1.0 : config.cuts_a[static_cast<std::size_t>(i)];
        const double x = uniform_in(lo + m, hi - m, rng);
        const double y = uniform_in(m, 1.0 - m, rng);
        config.attractors_1.push_back(make_planar_point(x, y));
    }
    config.attractors_2.reserve(static_cast<std::size_t>(n2));
    for (int j = 0; j < n2; ++j) {
        const double lo = (j == 0) ? 0.0 : config.cuts_b[static_cast<std::size_t>(j) - 1];
        const double hi = (j == n2 - 1) ? 1.0 : config.cuts_b[static_cast<std::size_t>(j)];
        const double x = uniform_in(m, 1.0 - m, rng);
        const double y = uniform_in(lo + m, hi - m, rng);
        config.attractors_2.push_back(make_planar_point(x, y));
    }
    return config;
}

int basin_index(const PlanarConfig& config, int person, const RealVector& point) {
    check_person(person);
    check_point(point, "basin_index");
    const auto& cuts = (person == 1) ? config.cuts_a : config.cuts_b;
    const double coord = (person == 1) ? point[0] : point[1];
    return interval_index(cuts, coord);
}

RealVector planar_step(const PlanarConfig& config, int person, const RealVector& point) {
    const int basin = basin_index(config, person, point);
    const auto& att = (person == 1) ? config.attractors_1[static_cast<std::size_t>(basin)]
                                    : config.attractors_2[static_cast<std::size_t>(basin)];
    RealVector out = point;
    for (std::size_t c = 0; c < 2; ++c) {
        out[c] = (1.0 - config.k) * att[c] + config.k * point[c];
    }
    return out;
}

PersonMap make_planar_person(const PlanarConfig& config, int person) {
    check_person(person);
    validate_planar_config(config);
    PersonMap map;
    map.kind = PersonMap::Kind::planar;
    map.dim = 2;
    map.step = [config, person](const RealVector& x) { return planar_step(config, person, x); };
    return map;
}

std::vector<RealVector> run_algorithm2(const PlanarConfig& config, const RealVector& i0,
                                       int nsteps1, int nsteps2, int n_iters) {
    check_point(i0, "run_algorithm2");
    return interchange_sequence(make_planar_person(config, 1), make_planar_person(config, 2), i0,
                                nsteps1, nsteps2, n_iters);
}

}  // namespace conn
