#pragma once

#include <cstddef>
#include <vector>

namespace conn {

// Flat array of 64-bit reals with shape metadata. The universal carrier for
// images, latent codes, and planar points.
//
// Invariants (checked by validate()): the component count equals the product
// of the shape entries, and every component is finite.
struct RealVector {
    std::vector<double> components;
    std::vector<std::size_t> shape;

    RealVector() = default;

    // 1-D vector of `dim` components, all set to `fill`.
    explicit RealVector(std::size_t dim, double fill = 0.0)
        : components(dim, fill), shape{dim} {}

    RealVector(std::vector<double> comps, std::vector<std::size_t> shp)
        : components(std::move(comps)), shape(std::move(shp)) {}

    std::size_t dim() const { return components.size(); }

    double& operator[](std::size_t i) { return components[i]; }
    double operator[](std::size_t i) const { return components[i]; }

    bool same_shape(const RealVector& other) const { return shape == other.shape; }
};

// Exact componentwise equality, shape included.
bool operator==(const RealVector& a, const RealVector& b);
inline bool operator!=(const RealVector& a, const RealVector& b) { return !(a == b); }

// Euclidean L2 distance over the flattened components.
// Throws std::invalid_argument on shape mismatch.
double distance(const RealVector& a, const RealVector& b);

// distance(a, b) / sqrt(dim): the dimension-independent residual used for
// convergence tolerances throughout the dynamics layer.
double norm_distance(const RealVector& a, const RealVector& b);

// Throws std::invalid_argument if the shape product does not equal the
// component count or any component is NaN/Inf. `where` names the caller in
// the error message.
void validate(const RealVector& v, const char* where);

// 2-D point on the plane, shape {2}, components {x, y}.
RealVector make_planar_point(double x, double y);

}  // namespace conn
