#include "beammap/nn/params.hpp"

#include <cmath>
#include <stdexcept>

namespace beammap::nn {

Tensor& ParamStore::create(const std::string& name, Tensor init) {
    auto [it, inserted] = values_.emplace(name, std::move(init));
    if (!inserted) throw std::invalid_argument("ParamStore::create: duplicate name '" + name + "'");
    return it->second;
}

Tensor& ParamStore::get(const std::string& name) {
    auto it = values_.find(name);
    if (it == values_.end()) throw std::invalid_argument("ParamStore::get: unknown name '" + name + "'");
    return it->second;
}

const Tensor& ParamStore::get(const std::string& name) const {
    auto it = values_.find(name);
    if (it == values_.end()) throw std::invalid_argument("ParamStore::get: unknown name '" + name + "'");
    return it->second;
}

std::size_t ParamStore::total_elements() const {
    std::size_t n = 0;
    for (const auto& [_, t] : values_) n += t.numel();
    return n;
}

Tensor init_uniform(std::vector<std::size_t> shape, std::size_t fan_in, Rng& rng) {
    if (fan_in == 0) throw std::invalid_argument("init_uniform: fan_in must be positive");
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Tensor t(std::move(shape));
    for (double& v : t.data()) v = rng.uniform(-bound, bound);
    return t;
}

nlohmann::json tensor_to_json(const Tensor& t) {
    nlohmann::json j;
    j["shape"] = t.shape();
    j["data"] = t.data();
    return j;
}

Tensor tensor_from_json(const nlohmann::json& j) {
    return Tensor(j.at("shape").get<std::vector<std::size_t>>(),
                  j.at("data").get<std::vector<double>>());
}

nlohmann::json params_to_json(const ParamStore& params) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [name, t] : params.values()) j[name] = tensor_to_json(t);
    return j;
}

ParamStore params_from_json(const nlohmann::json& j) {
    ParamStore p;
    for (auto it = j.begin(); it != j.end(); ++it) p.create(it.key(), tensor_from_json(it.value()));
    return p;
}

}  // namespace beammap::nn
