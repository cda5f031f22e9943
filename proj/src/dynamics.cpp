#include "conn/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace conn {

namespace {

void check_shape(const PersonMap& map, const RealVector& x, const char* where) {
    if (x.dim() != map.dim) {
        throw std::invalid_argument(std::string(where) + ": input dimension " +
                                    std::to_string(x.dim()) + " does not match map dimension " +
                                    std::to_string(map.dim));
    }
}

// [F_P]^nsteps
RealVector apply_n(const PersonMap& map, RealVector x, int nsteps) {
    for (int s = 0; s < nsteps; ++s) {
        x = apply_map(map, x);
    }
    return x;
}

}  // namespace

PersonMap make_constant_person(const RealVector& point) {
    PersonMap map;
    map.kind = PersonMap::Kind::constant;
    map.dim = point.dim();
    map.constant_point = point;
    map.step = [point](const RealVector&) { return point; };
    return map;
}

PersonMap make_custom_person(std::size_t dim, std::function<RealVector(const RealVector&)> step) {
    PersonMap map;
    map.kind = PersonMap::Kind::custom;
    map.dim = dim;
    map.step = std::move(step);
    return map;
}

RealVector apply_map(const PersonMap& map, const RealVector& x) {
    check_shape(map, x, "apply_map");
    RealVector out = map.step(x);
    if (out.dim() != x.dim()) {
        throw std::invalid_argument("apply_map: step changed the dimension");
    }
    return out;
}

IterationTrace iterate_map(const PersonMap& map, const RealVector& x0, std::size_t n) {
    check_shape(map, x0, "iterate_map");
    IterationTrace trace;
    trace.points.reserve(n + 1);
    trace.residuals.reserve(n);
    trace.points.push_back(x0);
    for (std::size_t i = 0; i < n; ++i) {
        trace.points.push_back(apply_map(map, trace.points.back()));
        trace.residuals.push_back(
            norm_distance(trace.points[trace.points.size() - 1], trace.points[trace.points.size() - 2]));
    }
    return trace;
}

FixedPointResult percept(const PersonMap& map, const RealVector& x0, double tol,
                         std::size_t max_steps) {
    if (tol <= 0.0) {
        throw std::invalid_argument("percept: tol must be positive");
    }
    if (max_steps == 0) {
        throw std::invalid_argument("percept: max_steps must be positive");
    }
    check_shape(map, x0, "percept");

    FixedPointResult result;
    RealVector x = x0;
    for (std::size_t n = 1; n <= max_steps; ++n) {
        RealVector next = apply_map(map, x);
        const double r = norm_distance(next, x);
        x = std::move(next);
        if (r < tol) {
            result.point = std::move(x);
            result.steps = n;
            result.residual = r;
            result.converged = true;
            return result;
        }
        result.residual = r;
    }
    result.point = std::move(x);
    result.steps = max_steps;
    result.converged = false;
    return result;
}

std::optional<CycleReport> detect_cycle(const IterationTrace& trace, double tol,
                                        std::size_t burn_in, std::size_t max_period) {
    const std::size_t L = trace.points.size();
    if (max_period == 0) {
        throw std::invalid_argument("detect_cycle: max_period must be positive");
    }
    if (L < burn_in + 2 * max_period) {
        throw std::invalid_argument("detect_cycle: trace too short for the requested window");
    }
    for (std::size_t p = 1; p <= max_period; ++p) {
        // Verification window: the final max_period pairs (t, t+p).
        const std::size_t t_begin = L - max_period - p;
        double worst = 0.0;
        bool ok = true;
        for (std::size_t t = t_begin; t + p < L; ++t) {
            const double d = norm_distance(trace.points[t + p], trace.points[t]);
            worst = std::max(worst, d);
            if (d >= tol) {
                ok = false;
                break;
            }
        }
        if (ok) {
            CycleReport report;
            report.period = p;
            report.elements.assign(trace.points.end() - static_cast<std::ptrdiff_t>(p),
                                   trace.points.end());
            report.residual = worst;
            return report;
        }
    }
    return std::nullopt;
}

std::vector<RealVector> interchange_sequence(const PersonMap& map1, const PersonMap& map2,
                                             const RealVector& x0, int nsteps1, int nsteps2,
                                             int n_iters) {
    if (nsteps1 < 1 || nsteps2 < 1) {
        throw std::invalid_argument("interchange_sequence: nsteps must be >= 1");
    }
    if (n_iters < 1) {
        throw std::invalid_argument("interchange_sequence: n_iters must be >= 1");
    }
    if (map1.dim != map2.dim) {
        throw std::invalid_argument("interchange_sequence: maps disagree on dimension");
    }
    check_shape(map1, x0, "interchange_sequence");

    std::vector<RealVector> U;
    U.reserve(static_cast<std::size_t>(n_iters) + 1);
    U.push_back(x0);
    RealVector x = x0;
    for (int iter = 1; iter <= n_iters; ++iter) {
        const bool odd = (iter % 2 == 1);
        x = apply_n(odd ? map1 : map2, std::move(x), odd ? nsteps1 : nsteps2);
        U.push_back(x);
    }
    return U;
}

std::vector<RealVector> generate_W(const PersonMap& map1, const PersonMap& map2,
                                   const RealVector& x0, int nsteps1, int nsteps2, int n_iters) {
    if (nsteps1 < 1 || nsteps2 < 1) {
        throw std::invalid_argument("generate_W: nsteps must be >= 1");
    }
    if (n_iters < 1) {
        throw std::invalid_argument("generate_W: n_iters must be >= 1");
    }
    if (map1.dim != map2.dim) {
        throw std::invalid_argument("generate_W: maps disagree on dimension");
    }
    check_shape(map1, x0, "generate_W");

    std::vector<RealVector> W;
    W.push_back(x0);
    RealVector x = x0;
    for (int iter = 1; iter <= n_iters; ++iter) {
        const bool odd = (iter % 2 == 1);
        const PersonMap& map = odd ? map1 : map2;
        const int nsteps = odd ? nsteps1 : nsteps2;
        for (int s = 0; s < nsteps; ++s) {
            x = apply_map(map, x);
            W.push_back(x);
        }
    }
    return W;
}

std::vector<std::vector<RealVector>> partition_columns(const std::vector<RealVector>& U,
                                                       std::size_t K, std::size_t m) {
    if (K == 0) {
        throw std::invalid_argument("partition_columns: K must be positive");
    }
    if (U.size() < 1 + (m + 1) * K) {
        throw std::invalid_argument("partition_columns: sequence too short");
    }
    std::vector<std::vector<RealVector>> matrix(m + 1);
    for (std::size_t row = 0; row <= m; ++row) {
        matrix[row].reserve(K);
        for (std::size_t col = 0; col < K; ++col) {
            matrix[row].push_back(U[1 + row * K + col]);
        }
    }
    return matrix;
}

namespace {

// Settle assessment for one candidate period: every column of the partition
// matrix must hold still (within tol of its final entry) over the tail
// window. Returns the worst tail deviation, or infinity when unsettled.
struct SettleResult {
    bool settled = false;
    double residual = std::numeric_limits<double>::infinity();
    std::size_t first_settled_row = 0;
    std::vector<double> column_step;  // per-column distance between the last two rows
};

SettleResult assess_settle(const std::vector<std::vector<RealVector>>& matrix, double tol) {
    SettleResult res;
    const std::size_t rows = matrix.size();
    const std::size_t K = matrix.front().size();
    const std::size_t window = std::max<std::size_t>(2, rows / 4);
    const std::size_t last = rows - 1;

    double worst = 0.0;
    for (std::size_t col = 0; col < K; ++col) {
        for (std::size_t row = rows - window; row < rows; ++row) {
            const double d = norm_distance(matrix[row][col], matrix[last][col]);
            worst = std::max(worst, d);
            if (d >= tol) {
                return res;
            }
        }
    }
    res.settled = true;
    res.residual = worst;

    // Earliest row from which every column stays within tol of its limit.
    std::size_t first = last;
    while (first > 0) {
        bool ok = true;
        for (std::size_t col = 0; col < K && ok; ++col) {
            ok = norm_distance(matrix[first - 1][col], matrix[last][col]) < tol;
        }
        if (!ok) break;
        --first;
    }
    res.first_settled_row = first;

    res.column_step.resize(K, 0.0);
    if (rows >= 2) {
        for (std::size_t col = 0; col < K; ++col) {
            res.column_step[col] = norm_distance(matrix[last][col], matrix[last - 1][col]);
        }
    }
    return res;
}

bool pairwise_distinct(const std::vector<RealVector>& elements, double tol) {
    for (std::size_t i = 0; i < elements.size(); ++i) {
        for (std::size_t j = i + 1; j < elements.size(); ++j) {
            if (norm_distance(elements[i], elements[j]) <= tol) {
                return false;
            }
        }
    }
    return true;
}

// Smallest divisor p of K such that rotating the element ring by p leaves it
// within tol of itself; K when none does.
std::size_t sub_period(const std::vector<RealVector>& elements, double tol) {
    const std::size_t K = elements.size();
    for (std::size_t p = 1; p < K; ++p) {
        if (K % p != 0) continue;
        bool match = true;
        for (std::size_t j = 0; j < K && match; ++j) {
            match = norm_distance(elements[j], elements[(j + p) % K]) <= tol;
        }
        if (match) return p;
    }
    return K;
}

}  // namespace

OrbitReport detect_first_type_orbit(const std::vector<RealVector>& U, double tol,
                                    std::size_t max_period) {
    if (max_period == 0) {
        throw std::invalid_argument("detect_first_type_orbit: max_period must be positive");
    }
    if (U.size() < 4 * max_period) {
        throw std::invalid_argument("detect_first_type_orbit: sequence shorter than 4*max_period");
    }

    OrbitReport report;

    for (std::size_t K = 2; K <= max_period; K += 2) {
        const std::size_t rows = (U.size() - 1) / K;
        if (rows < 3) break;
        const auto matrix = partition_columns(U, K, rows - 1);
        const SettleResult settle = assess_settle(matrix, tol);
        if (!settle.settled) continue;

        report.period_K = K;
        report.elements = matrix.back();
        report.loop_residual = settle.residual;
        report.g_fixed_residuals = settle.column_step;
        report.detected_at_iter = 1 + settle.first_settled_row * K;

        if (!pairwise_distinct(report.elements, tol)) {
            report.kind = OrbitKind::none;
            report.distinct = false;
            const std::size_t p = sub_period(report.elements, tol);
            if (p < K && p % 2 == 1) {
                report.odd_period_anomaly = true;
                report.note = "tail settled to odd period " + std::to_string(p) +
                              " inside candidate K=" + std::to_string(K);
            } else {
                report.note = "column limits not pairwise distinct";
            }
            return report;
        }

        report.kind = OrbitKind::first_type;
        report.distinct = true;
        return report;
    }

    report.kind = OrbitKind::none;
    report.note = "no even period settled within max_period";
    return report;
}

LoopCheck verify_orbit_loop(const OrbitReport& orbit, const PersonMap& map1,
                            const PersonMap& map2, int nsteps1, int nsteps2) {
    if (orbit.kind == OrbitKind::none) {
        throw std::invalid_argument("verify_orbit_loop: orbit kind is none");
    }
    const std::size_t K = orbit.period_K;
    if (K == 0 || K % 2 != 0 || orbit.elements.size() != K) {
        throw std::invalid_argument("verify_orbit_loop: malformed orbit");
    }

    LoopCheck check;
    check.g_residuals.resize(K, 0.0);

    for (std::size_t h = 0; h < K; ++h) {
        // b_h was produced by person od(h+1); the next arc belongs to the
        // other person: F_2 after even h, F_1 after odd h.
        const bool even = (h % 2 == 0);
        const PersonMap& next_map = even ? map2 : map1;
        const int next_steps = even ? nsteps2 : nsteps1;
        const RealVector image = apply_n(next_map, orbit.elements[h], next_steps);
        check.loop_residual =
            std::max(check.loop_residual, norm_distance(image, orbit.elements[(h + 1) % K]));

        // G_1 = [F_1 F_2]^{K/2} fixes person-1 elements (even h);
        // G_2 = [F_2 F_1]^{K/2} fixes person-2 elements (odd h).
        RealVector g = orbit.elements[h];
        for (std::size_t pair = 0; pair < K / 2; ++pair) {
            if (even) {
                g = apply_n(map2, std::move(g), nsteps2);
                g = apply_n(map1, std::move(g), nsteps1);
            } else {
                g = apply_n(map1, std::move(g), nsteps1);
                g = apply_n(map2, std::move(g), nsteps2);
            }
        }
        check.g_residuals[h] = norm_distance(g, orbit.elements[h]);
    }
    return check;
}

namespace {

// Parity-preserving cyclic alignment: the best even rotation r of `b` onto
// `a`, judged by the worst element pair. Returns the residual at the best r.
double align_orbits(const std::vector<RealVector>& a, const std::vector<RealVector>& b,
                    std::size_t* best_rotation) {
    const std::size_t K = a.size();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < K; r += 2) {
        double worst = 0.0;
        for (std::size_t j = 0; j < K; ++j) {
            worst = std::max(worst, norm_distance(a[j], b[(j + r) % K]));
        }
        if (worst < best) {
            best = worst;
            if (best_rotation) *best_rotation = r;
        }
    }
    return best;
}

}  // namespace

OrbitReport detect_second_type_orbit(const PersonMap& map1, const PersonMap& map2,
                                     const RealVector& x0,
                                     const std::vector<int>& nsteps_schedule, double tol,
                                     double orbit_match_tol, int n_iters,
                                     std::size_t max_period) {
    if (nsteps_schedule.size() < 2) {
        throw std::invalid_argument("detect_second_type_orbit: schedule needs >= 2 entries");
    }
    for (std::size_t i = 1; i < nsteps_schedule.size(); ++i) {
        if (nsteps_schedule[i] <= nsteps_schedule[i - 1]) {
            throw std::invalid_argument("detect_second_type_orbit: schedule must increase");
        }
    }

    constexpr std::size_t kRefineMaxSteps = 10000;

    std::vector<OrbitReport> refined;
    refined.reserve(nsteps_schedule.size());
    for (int nsteps : nsteps_schedule) {
        const auto U = interchange_sequence(map1, map2, x0, nsteps, nsteps, n_iters);
        const std::size_t mp = std::min(max_period, (U.size() - 1) / 4);
        OrbitReport orbit = detect_first_type_orbit(U, tol, mp);
        if (orbit.kind == OrbitKind::first_type) {
            // Definition of the second type: the orbit elements are
            // attractors. Pull every element to the percept limit of its
            // owning person's one-step map.
            for (std::size_t h = 0; h < orbit.period_K; ++h) {
                const PersonMap& owner = (h % 2 == 0) ? map1 : map2;
                const FixedPointResult fp = percept(owner, orbit.elements[h], tol, kRefineMaxSteps);
                if (fp.converged) {
                    orbit.elements[h] = fp.point;
                } else {
                    orbit.note += "element " + std::to_string(h) + " percept did not converge; ";
                }
            }
        }
        refined.push_back(std::move(orbit));
    }

    const OrbitReport& prev = refined[refined.size() - 2];
    OrbitReport last = refined.back();

    if (prev.kind != OrbitKind::first_type || last.kind != OrbitKind::first_type) {
        OrbitReport failure;
        failure.kind = OrbitKind::none;
        failure.note = "first-type detection failed at a schedule entry";
        if (!last.note.empty()) failure.note += ": " + last.note;
        failure.odd_period_anomaly = prev.odd_period_anomaly || last.odd_period_anomaly;
        return failure;
    }
    if (prev.period_K != last.period_K) {
        OrbitReport failure;
        failure.kind = OrbitKind::none;
        failure.note = "period mismatch across schedule: K=" + std::to_string(prev.period_K) +
                       " vs K=" + std::to_string(last.period_K);
        return failure;
    }

    std::size_t rotation = 0;
    const double match = align_orbits(prev.elements, last.elements, &rotation);
    if (match > orbit_match_tol) {
        OrbitReport failure;
        failure.kind = OrbitKind::none;
        failure.period_K = last.period_K;
        failure.elements = last.elements;
        failure.note = "orbits disagree across schedule: residual " + std::to_string(match);
        return failure;
    }

    last.kind = OrbitKind::second_type;
    last.awareness_residuals.resize(last.period_K, 0.0);
    for (std::size_t h = 0; h < last.period_K; ++h) {
        const PersonMap& owner = (h % 2 == 0) ? map1 : map2;
        last.awareness_residuals[h] =
            norm_distance(apply_map(owner, last.elements[h]), last.elements[h]);
    }
    if (rotation != 0) {
        last.note += "aligned at rotation " + std::to_string(rotation) + "; ";
    }
    return last;
}

}  // namespace conn
