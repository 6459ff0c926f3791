#pragma once

#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "beammap/nn/rng.hpp"
#include "beammap/nn/tensor.hpp"

namespace beammap::nn {

// Named parameter set. std::map keeps iteration order stable, which makes
// initialization and optimizer sweeps deterministic.
class ParamStore {
public:
    Tensor& create(const std::string& name, Tensor init);  // throws if name exists
    Tensor& get(const std::string& name);
    const Tensor& get(const std::string& name) const;
    bool has(const std::string& name) const { return values_.count(name) != 0; }
    std::size_t size() const { return values_.size(); }
    std::size_t total_elements() const;

    std::map<std::string, Tensor>& values() { return values_; }
    const std::map<std::string, Tensor>& values() const { return values_; }

private:
    std::map<std::string, Tensor> values_;
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
Tensor init_uniform(std::vector<std::size_t> shape, std::size_t fan_in, Rng& rng);

// JSON round-trip. Doubles serialize in shortest round-trip decimal form, so
// from_json(to_json(t)) reproduces every entry bit for bit.
nlohmann::json tensor_to_json(const Tensor& t);
Tensor tensor_from_json(const nlohmann::json& j);
nlohmann::json params_to_json(const ParamStore& params);
ParamStore params_from_json(const nlohmann::json& j);

}  // namespace beammap::nn
