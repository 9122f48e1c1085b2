#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hodoflow/charts.hpp"

namespace hodoflow {

// Uniform closed-interval axis with `count` nodes (count >= 2).
struct GridAxis {
    std::string name;
    double lo = 0.0;
    double hi = 1.0;
    int count = 2;
    double step() const { return (hi - lo) / (count - 1); }
    double node(int k) const { return lo + k * step(); }
};

struct GridSpec {
    std::vector<GridAxis> axes;
    size_t size() const {
        size_t n = 1;
        for (const GridAxis& a : axes) n *= static_cast<size_t>(a.count);
        return n;
    }
};

// Velocity samples on a rectangular grid of chart coordinates at one time.
// Row-major: the last axis varies fastest.
struct FieldGrid {
    SurfaceChart chart;
    double t = 0.0;
    bool stationary = false;
    std::vector<GridAxis> axes;
    std::vector<std::array<double, 3>> values;
    std::vector<std::uint8_t> mask;
    std::string provenance;

    size_t size() const {
        size_t n = 1;
        for (const GridAxis& a : axes) n *= static_cast<size_t>(a.count);
        return n;
    }
    void allocate() {
        values.assign(size(), {});
        mask.assign(size(), 0);
    }
    size_t index(std::span<const int> idx) const {
        size_t flat = 0;
        for (size_t d = 0; d < axes.size(); ++d)
            flat = flat * static_cast<size_t>(axes[d].count) + static_cast<size_t>(idx[d]);
        return flat;
    }
    void unflatten(size_t flat, std::span<int> idx) const {
        for (size_t d = axes.size(); d-- > 0;) {
            idx[d] = static_cast<int>(flat % static_cast<size_t>(axes[d].count));
            flat /= static_cast<size_t>(axes[d].count);
        }
    }
    void coords_of(size_t flat, std::span<double> coords) const {
        int idx[3];
        unflatten(flat, std::span<int>(idx, axes.size()));
        for (size_t d = 0; d < axes.size(); ++d) coords[d] = axes[d].node(idx[d]);
    }
};

}  // namespace hodoflow
