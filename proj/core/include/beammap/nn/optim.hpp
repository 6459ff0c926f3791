#pragma once

#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "beammap/nn/params.hpp"
#include "beammap/nn/tensor.hpp"

namespace beammap::nn {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam with bias correction. Moment buffers are keyed by parameter name and
// sized on first step. Parameters missing from `grads` are treated as having
// a zero gradient: their moments still decay.
class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    void step(ParamStore& params, const std::map<std::string, Tensor>& grads);

    const AdamConfig& config() const { return cfg_; }
    std::size_t step_count() const { return step_count_; }

    nlohmann::json to_json() const;
    static Adam from_json(const nlohmann::json& j);

private:
    AdamConfig cfg_;
    std::size_t step_count_ = 0;
    std::map<std::string, Tensor> m_, v_;
};

}  // namespace beammap::nn
