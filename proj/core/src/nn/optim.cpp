#include "beammap/nn/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace beammap::nn {

void Adam::step(ParamStore& params, const std::map<std::string, Tensor>& grads) {
    for (const auto& [name, g] : grads) {
        if (!params.has(name)) {
            throw std::invalid_argument("Adam::step: gradient for unknown parameter '" + name + "'");
        }
        if (!params.get(name).same_shape(g)) {
            throw std::invalid_argument("Adam::step: gradient shape mismatch for '" + name + "'");
        }
    }
    ++step_count_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
    for (auto& [name, p] : params.values()) {
        auto mit = m_.find(name);
        if (mit == m_.end()) {
            mit = m_.emplace(name, Tensor::zeros(p.shape())).first;
            v_.emplace(name, Tensor::zeros(p.shape()));
        }
        Tensor& m = mit->second;
        Tensor& v = v_.at(name);
        auto git = grads.find(name);
        const Tensor* g = (git != grads.end()) ? &git->second : nullptr;
        for (std::size_t i = 0; i < p.numel(); ++i) {
            const double gi = g ? (*g)[i] : 0.0;
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

nlohmann::json Adam::to_json() const {
    nlohmann::json j;
    j["lr"] = cfg_.lr;
    j["beta1"] = cfg_.beta1;
    j["beta2"] = cfg_.beta2;
    j["eps"] = cfg_.eps;
    j["step_count"] = step_count_;
    nlohmann::json jm = nlohmann::json::object(), jv = nlohmann::json::object();
    for (const auto& [name, t] : m_) jm[name] = tensor_to_json(t);
    for (const auto& [name, t] : v_) jv[name] = tensor_to_json(t);
    j["m"] = std::move(jm);
    j["v"] = std::move(jv);
    return j;
}

Adam Adam::from_json(const nlohmann::json& j) {
    AdamConfig cfg;
    cfg.lr = j.at("lr").get<double>();
    cfg.beta1 = j.at("beta1").get<double>();
    cfg.beta2 = j.at("beta2").get<double>();
    cfg.eps = j.at("eps").get<double>();
    Adam a(cfg);
    a.step_count_ = j.at("step_count").get<std::size_t>();
    for (auto it = j.at("m").begin(); it != j.at("m").end(); ++it)
        a.m_[it.key()] = tensor_from_json(it.value());
    for (auto it = j.at("v").begin(); it != j.at("v").end(); ++it)
        a.v_[it.key()] = tensor_from_json(it.value());
    return a;
}

}  // namespace beammap::nn
