#include "conn/real_vector.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace conn {

bool operator==(const RealVector& a, const RealVector& b) {
    return a.shape == b.shape && a.components == b.components;
}

double distance(const RealVector& a, const RealVector& b) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument("distance: shape mismatch");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        const double d = a.components[i] - b.components[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

double norm_distance(const RealVector& a, const RealVector& b) {
    if (a.dim() == 0) {
        throw std::invalid_argument("norm_distance: empty vector");
    }
    return distance(a, b) / std::sqrt(static_cast<double>(a.dim()));
}

void validate(const RealVector& v, const char* where) {
    std::size_t product = 1;
    for (std::size_t s : v.shape) {
        if (s == 0) {
            throw std::invalid_argument(std::string(where) + ": zero shape entry");
        }
        product *= s;
    }
    if (product != v.dim()) {
        throw std::invalid_argument(std::string(where) +
                                    ": shape product does not match component count");
    }
    for (double c : v.components) {
        if (!std::isfinite(c)) {
            throw std::invalid_argument(std::string(where) + ": non-finite component");
        }
    }
}

RealVector make_planar_point(double x, double y) {
    return RealVector({x, y}, {2});
}

}  // namespace conn
