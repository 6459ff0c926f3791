#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "beammap/nn/tensor.hpp"

namespace beammap::nn {

class Graph;

// Handle into a Graph. Valid only for the graph that produced it.
struct Var {
    std::uint32_t id = 0;
};

// Reverse-mode autodiff tape. Nodes are stored in creation order, which is a
// valid topological order, so backward() is a single reverse sweep. A graph is
// built per optimization step and discarded; backward() may run once.
class Graph {
public:
    Var constant(Tensor t);              // no gradient tracking
    Var leaf(Tensor t);                  // gradient-tracked input
    Var parameter(const std::string& name, const Tensor& value);  // tracked, named; idempotent per name

    // Elementwise, same shape.
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var div(Var a, Var b);  // throws on zero divisor

    Var scale(Var a, double c);
    Var add_scalar(Var a, double c);
    Var neg(Var a) { return scale(a, -1.0); }
    Var square(Var a) { return mul(a, a); }

    Var matmul(Var a, Var b);     // (m,k)x(k,n) -> (m,n)
    Var matmul_nt(Var a, Var b);  // (m,k)x(n,k)^T -> (m,n)
    Var add_rowvec(Var m, Var v); // (r,c) + (1,c) broadcast over rows
    Var mul_rowvec(Var m, Var v);

    // Flat-index gather; idx[i] == -1 reads as 0 (zero padding).
    Var gather(Var a, std::vector<std::int64_t> idx, std::vector<std::size_t> out_shape);
    Var gather_rows(Var m, std::vector<std::size_t> rows);  // repeats allowed
    Var concat_rows(const std::vector<Var>& parts);
    Var concat_cols(const std::vector<Var>& parts);
    Var slice_rows(Var m, std::size_t r0, std::size_t r1);  // [r0, r1)
    Var slice_cols(Var m, std::size_t c0, std::size_t c1);
    Var reshape(Var a, std::vector<std::size_t> shape);
    Var transpose(Var m);

    Var softmax_rows(Var m);
    Var tanh_(Var a);
    Var relu(Var a);
    Var sigmoid(Var a);
    Var exp_(Var a);
    Var log_(Var a);       // throws if any input <= 0
    Var sqrt_(Var a);      // throws if any input < 0; d/dx at 0 defined as 0
    Var clamp_min(Var a, double lo);  // gradient passes only where a > lo
    Var layer_norm_rows(Var m, double eps = 1e-5);

    Var sum(Var a);        // -> (1,1)
    Var mean(Var a);       // -> (1,1)
    Var sum_rows(Var m);   // (r,c) -> (r,1)
    Var sum_cols(Var m);   // (r,c) -> (1,c)
    Var row_normalize(Var m);  // rows scaled to sum 1; throws on zero row sum

    // Squared Euclidean distances between rows: (l,d),(k,d) -> (l,k).
    Var sqdist(Var x, Var centers);

    Var detach(Var a);     // value passes, gradient stops

    void backward(Var loss);  // loss must hold exactly one element

    const Tensor& value(Var v) const { return nodes_[v.id].value; }
    // Valid after backward(); zeros when the node was never reached.
    const Tensor& grad(Var v) const;
    Tensor param_grad(const std::string& name) const;  // zeros if unregistered/unreached
    std::map<std::string, Tensor> param_grads() const;
    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::function<void(Graph&)> back;
        bool tracked = false;
    };

    std::vector<Node> nodes_;
    std::map<std::string, std::uint32_t> params_;
    bool ran_backward_ = false;

    Var push(Tensor value, bool tracked);
    bool tracked(Var v) const { return nodes_[v.id].tracked; }
    Tensor& grad_ref(Var v) { return nodes_[v.id].grad; }
    Var unary_map(Var a, const char* name,
                  const std::function<double(double)>& f,
                  const std::function<double(double, double)>& dfdx_from_x_y);
};

}  // namespace beammap::nn
