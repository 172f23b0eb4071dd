#pragma once

// Minimal dense tensor engine with a dynamic reverse-mode tape.
//
// Tensors are shared handles: copying a Tensor aliases the same storage.
// Leaves (constants and parameters) live outside any tape; every primitive
// applied through a Tape records a node whose backward closure pushes the
// node's gradient into its inputs. Tape::backward walks the recorded nodes in
// reverse creation order exactly once.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mgan/matrix.hpp"

namespace mgan {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {

struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // empty until a gradient reaches the node
    bool requires_grad = false;
    std::function<void(Node&)> backward;

    std::vector<double>& ensure_grad() {
        if (grad.empty()) grad.assign(value.size(), 0.0);
        return grad;
    }
};

}  // namespace detail

class Tensor {
public:
    Tensor() = default;

    static Tensor constant(Shape shape, std::vector<double> values);
    static Tensor constant(const Matrix& m);
    static Tensor parameter(Shape shape, std::vector<double> values);
    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor scalar(double v);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t size() const { return node_->value.size(); }
    std::size_t rows() const { return node_->shape.at(0); }
    // Product of all trailing dimensions.
    std::size_t cols() const;

    std::span<const double> values() const { return node_->value; }
    std::span<double> mutable_values() { return node_->value; }
    double item() const;
    double at(std::size_t i, std::size_t j) const { return node_->value[i * cols() + j]; }

    bool requires_grad() const { return node_->requires_grad; }
    bool has_grad() const { return !node_->grad.empty(); }
    // Empty span when no gradient has been accumulated yet.
    std::span<const double> grad() const { return node_->grad; }
    void zero_grad() { node_->grad.clear(); }

    // Deep copy with no tape history; keeps requires_grad.
    Tensor clone() const;
    Matrix to_matrix() const;

    const detail::Node* id() const { return node_.get(); }

private:
    explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

    std::shared_ptr<detail::Node> node_;

    friend class Tape;
};

// Records differentiable primitives. A recording tape may be consumed by
// backward() exactly once; an inference tape records nothing and only
// computes values.
class Tape {
public:
    enum class Mode { record, inference };

    explicit Tape(Mode mode = Mode::record) : mode_(mode) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // [m,k] x [k,n] -> [m,n]
    Tensor matmul(const Tensor& a, const Tensor& b);
    Tensor transpose(const Tensor& a);
    Tensor add(const Tensor& a, const Tensor& b);
    Tensor mul(const Tensor& a, const Tensor& b);
    Tensor relu(const Tensor& a);
    Tensor sigmoid(const Tensor& a);
    Tensor sum(const Tensor& a);

    // Softmax along each row over entries whose mask bit is set. Masked
    // entries output exactly 0; a fully masked row outputs all zeros. The mask
    // has one entry per element of `scores`.
    Tensor masked_softmax(const Tensor& scores, const std::vector<bool>& mask);

    // Same-length 1-D convolution along rows (the token axis) with zero
    // padding. x: [T, C_in], kernel: [width, C_in, C_out] with odd width,
    // bias: [1, C_out]. Output: [T, C_out].
    Tensor conv1d(const Tensor& x, const Tensor& kernel, const Tensor& bias);

    // Cosine similarity of two equal-size tensors viewed as flat vectors.
    // A zero vector on either side gives 0 with zero gradient. Output [1,1].
    Tensor cosine(const Tensor& a, const Tensor& b);

    // Flattens and concatenates the inputs into a [1, total] row.
    Tensor concat(std::span<const Tensor> parts);

    // Row i of a 2-D tensor as [1, cols].
    Tensor row(const Tensor& a, std::size_t i);

    // Per-column maximum over rows whose mask bit is set; [1, cols]. The
    // gradient flows to the first maximizing row. Requires one unmasked row.
    Tensor masked_max_rows(const Tensor& a, const std::vector<bool>& row_mask);

    // Mean binary cross-entropy of sigmoid(logits) against 0/1 labels,
    // computed in the numerically stable logit form. Output [1,1].
    Tensor bce_with_logits(const Tensor& logits, std::span<const double> labels);

    // Populates grad on every reachable tensor that requires it. Gradients
    // accumulate into leaves across calls on different tapes.
    void backward(const Tensor& loss);

    std::size_t node_count() const { return nodes_.size(); }
    bool consumed() const { return consumed_; }
    bool recording() const { return mode_ == Mode::record; }

private:
    using NodePtr = std::shared_ptr<detail::Node>;

    Tensor make(Shape shape, std::vector<double> value, std::vector<NodePtr> inputs,
                std::function<void(detail::Node&)> backward);

    Mode mode_;
    bool consumed_ = false;
    std::vector<NodePtr> nodes_;
};

// Central-difference gradient check. Runs `f` once on a recording tape to get
// analytic gradients for `params`, then perturbs every coordinate by
// +/- epsilon. Returns the maximum over coordinates of
// |a - n| / max(1e-6, |a| + |n|).
double finite_diff_check(const std::function<Tensor(Tape&)>& f, std::vector<Tensor> params,
                         double epsilon = 1e-5);

}  // namespace mgan
