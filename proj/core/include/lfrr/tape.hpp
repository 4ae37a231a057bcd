#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <vector>

#include "lfrr/errors.hpp"
#include "lfrr/tensor.hpp"

namespace lfrr {

enum class ConvPlane { spatial = 0, angular = 1, epi_h = 2, epi_v = 3 };
enum class Pointwise { leaky_relu, sigmoid, identity };

namespace testhook {
// Negative-control switch: flips the sign of the sigmoid adjoint so the
// verification suite can prove it detects a wrong gradient. Never set in
// normal runs.
extern bool bad_adjoint;
}  // namespace testhook

inline const char* plane_name(ConvPlane p) {
    switch (p) {
        case ConvPlane::spatial: return "spatial";
        case ConvPlane::angular: return "angular";
        case ConvPlane::epi_h: return "epi_h";
        default: return "epi_v";
    }
}

// Handle into a Tape's node list.
struct Var {
    std::int32_t id = -1;
    bool valid() const { return id >= 0; }
};

// Reverse-mode tape. Operators execute their forward pass eagerly, record an
// adjoint closure, and backward() replays the closures in reverse creation
// order, which is a topological order by construction. Gradients accumulate
// into the registered leaf tensors; calling backward() twice accumulates
// twice. A leaf never reached by the loss keeps a zero (absent) gradient.
//
// Deliberately small surface: exactly the operators the model needs, each
// with a hand-written adjoint. Elementwise ops broadcast only in these
// pinned patterns (second operand is the broadcast one):
//   [.. same shape ..]                 elementwise
//   b scalar (rank 0)                  broadcast everywhere
//   a=[U,V,X,Y,F], b=[U,V,X,Y,1]       broadcast along channels
//   a=[U,V,X,Y,F], b=[U,V,F]           broadcast along spatial axes
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Registers t as a leaf. Storage is shared, not copied; backward()
    // accumulates into t.grad when t.requires_grad is set.
    Var leaf(const Tensor& t);

    const Shape& shape(Var v) const { return node(v).shape; }
    const std::vector<double>& value(Var v) const { return *node(v).val; }
    // Gradient computed by the last backward(); empty if unreachable.
    const std::vector<double>& grad(Var v) const { return node(v).grad; }
    double scalar(Var v) const;
    Tensor value_tensor(Var v) const { return Tensor(node(v).shape, *node(v).val); }

    // Convolution over one axis plane; W is [k,k,Cin,Cout], b is [Cout].
    Var axis_conv(Var F, Var W, Var b, ConvPlane plane);
    Var pointwise(Var F, Pointwise kind);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var a, double s);
    Var reduce_mean(Var a);
    Var concat_channels(Var a, Var b);
    Var global_avg_pool_spatial(Var F);  // [U,V,X,Y,F] -> [U,V,F]
    Var affine(Var x, Var W, Var b);     // [U,V,F],[F,G],[G] -> [U,V,G]

    // Re-sampling ops (adjoints live with the resampler).
    Var clamp_positions(Var P, std::int64_t U, std::int64_t V, std::int64_t X,
                        std::int64_t Y);
    Var interpolate_4d(Var I, Var P);

    // Fused losses (adjoints live with the loss implementations). ssim and
    // epi convert to luma internally; mae runs on raw channels.
    Var loss_mae(Var pred, Var gt);
    Var loss_ssim(Var pred, Var gt);
    Var loss_epi(Var pred, Var gt);

    void backward(Var loss);

    std::int64_t node_count() const { return static_cast<std::int64_t>(nodes_.size()); }

    // Node plumbing for operator implementations in other translation units.
    struct Node {
        Shape shape;
        std::shared_ptr<std::vector<double>> val;
        std::vector<double> grad;  // lazily sized during backward
        bool needs_grad = false;
        bool is_leaf = false;
        Tensor src;  // leaf only: shares storage with val
        std::function<void()> back;
    };

    Var make_node(Shape shape, bool needs_grad);
    Node& node(Var v);
    const Node& node(Var v) const;
    // Broadcast-reducing gradient accumulation used by the elementwise ops.
    void reduce_into(Var b, int bcast_kind, const double* g, const Shape& out_shape,
                     double sign, const double* weight);
    double* val_ptr(Var v) { return node(v).val->data(); }
    const double* val_ptr(Var v) const { return node(v).val->data(); }
    // Lazily allocates the gradient accumulator for v (zero-filled).
    double* grad_acc(Var v);
    void set_back(Var v, std::function<void()> fn) { node(v).back = std::move(fn); }
    bool needs_grad(Var v) const { return node(v).needs_grad; }

private:
    // Deque, not vector: operator implementations hold references into nodes
    // (shapes, value buffers) across make_node calls, and a deque keeps
    // references to existing elements valid under push_back.
    std::deque<Node> nodes_;
};

}  // namespace lfrr
