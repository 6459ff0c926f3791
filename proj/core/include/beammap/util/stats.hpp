#pragma once

#include <vector>

#include <nlohmann/json.hpp>

#include "beammap/nn/tensor.hpp"

namespace beammap::util {

// Per-column affine whitening: transform maps x to (x - mean) / stdev,
// inverse undoes it. Columns with spread below `floor` keep stdev = floor so
// constant columns stay finite.
struct ColumnStats {
    std::vector<double> mean;
    std::vector<double> stdev;

    static ColumnStats fit(const nn::Tensor& rows, double floor = 1e-9);

    nn::Tensor transform(const nn::Tensor& rows) const;
    nn::Tensor inverse(const nn::Tensor& rows) const;
};

nlohmann::json stats_to_json(const ColumnStats& s);
ColumnStats stats_from_json(const nlohmann::json& j);

}  // namespace beammap::util
