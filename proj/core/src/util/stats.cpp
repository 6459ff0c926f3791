#include "beammap/util/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace beammap::util {

namespace {

void require_cols(const ColumnStats& s, const nn::Tensor& rows, const char* who) {
    if (rows.ndim() != 2 || rows.cols() != s.mean.size()) {
        throw std::invalid_argument(std::string(who) + ": expected " +
                                    std::to_string(s.mean.size()) + " columns, got " +
                                    rows.shape_str());
    }
}

}  // namespace

ColumnStats ColumnStats::fit(const nn::Tensor& rows, double floor) {
    if (rows.ndim() != 2 || rows.rows() == 0) {
        throw std::invalid_argument("ColumnStats::fit: need a nonempty 2-D tensor, got " +
                                    rows.shape_str());
    }
    if (floor <= 0.0) throw std::invalid_argument("ColumnStats::fit: floor must be positive");
    const std::size_t n = rows.rows(), d = rows.cols();
    ColumnStats s;
    s.mean.assign(d, 0.0);
    s.stdev.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) s.mean[j] += rows.at(i, j);
    }
    for (std::size_t j = 0; j < d; ++j) s.mean[j] /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            const double c = rows.at(i, j) - s.mean[j];
            s.stdev[j] += c * c;
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        s.stdev[j] = std::sqrt(s.stdev[j] / static_cast<double>(n));
        if (s.stdev[j] < floor) s.stdev[j] = floor;
    }
    return s;
}

nn::Tensor ColumnStats::transform(const nn::Tensor& rows) const {
    require_cols(*this, rows, "ColumnStats::transform");
    nn::Tensor out = rows;
    for (std::size_t i = 0; i < rows.rows(); ++i) {
        for (std::size_t j = 0; j < rows.cols(); ++j) {
            out.at(i, j) = (rows.at(i, j) - mean[j]) / stdev[j];
        }
    }
    return out;
}

nn::Tensor ColumnStats::inverse(const nn::Tensor& rows) const {
    require_cols(*this, rows, "ColumnStats::inverse");
    nn::Tensor out = rows;
    for (std::size_t i = 0; i < rows.rows(); ++i) {
        for (std::size_t j = 0; j < rows.cols(); ++j) {
            out.at(i, j) = rows.at(i, j) * stdev[j] + mean[j];
        }
    }
    return out;
}

nlohmann::json stats_to_json(const ColumnStats& s) {
    return {{"mean", s.mean}, {"stdev", s.stdev}};
}

ColumnStats stats_from_json(const nlohmann::json& j) {
    ColumnStats s;
    s.mean = j.at("mean").get<std::vector<double>>();
    s.stdev = j.at("stdev").get<std::vector<double>>();
    if (s.mean.size() != s.stdev.size()) {
        throw std::invalid_argument("stats_from_json: mean/stdev length mismatch");
    }
    for (double v : s.stdev) {
        if (!(v > 0.0)) throw std::invalid_argument("stats_from_json: stdev must be positive");
    }
    return s;
}

}  // namespace beammap::util
