#include "mgan/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mgan {

std::size_t shape_size(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << ']';
    return os.str();
}

namespace {

void check_values(const Shape& shape, const std::vector<double>& values) {
    if (shape.empty()) throw std::invalid_argument("tensor shape must have at least one dimension");
    for (auto d : shape)
        if (d == 0) throw std::invalid_argument("tensor dimensions must be positive: " + shape_string(shape));
    if (shape_size(shape) != values.size())
        throw std::invalid_argument("tensor of shape " + shape_string(shape) + " given " +
                                    std::to_string(values.size()) + " values");
}

void require_2d(const Tensor& t, const char* op) {
    if (t.shape().size() != 2) throw std::invalid_argument(std::string(op) + ": expected a 2-D tensor, got " + shape_string(t.shape()));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                                    shape_string(b.shape()));
}

double stable_sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
    check_values(shape, values);
    auto node = std::make_shared<detail::Node>();
    node->shape = std::move(shape);
    node->value = std::move(values);
    return Tensor(std::move(node));
}

Tensor Tensor::constant(const Matrix& m) { return constant({m.rows, m.cols}, m.data); }

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
    Tensor t = constant(std::move(shape), std::move(values));
    t.node_->requires_grad = true;
    return t;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    const auto n = shape_size(shape);
    Tensor t = constant(std::move(shape), std::vector<double>(n, 0.0));
    t.node_->requires_grad = requires_grad;
    return t;
}

Tensor Tensor::scalar(double v) { return constant({1, 1}, {v}); }

std::size_t Tensor::cols() const {
    std::size_t n = 1;
    for (std::size_t i = 1; i < node_->shape.size(); ++i) n *= node_->shape[i];
    return n;
}

double Tensor::item() const {
    if (size() != 1) throw std::invalid_argument("item() on a tensor of shape " + shape_string(shape()));
    return node_->value[0];
}

Tensor Tensor::clone() const {
    Tensor t = constant(node_->shape, node_->value);
    t.node_->requires_grad = node_->requires_grad;
    return t;
}

Matrix Tensor::to_matrix() const { return Matrix(rows(), cols(), node_->value); }

// ---------------------------------------------------------------------------
// Tape

Tensor Tape::make(Shape shape, std::vector<double> value, std::vector<NodePtr> inputs,
                  std::function<void(detail::Node&)> backward) {
    auto node = std::make_shared<detail::Node>();
    node->shape = std::move(shape);
    node->value = std::move(value);
    if (mode_ == Mode::record) {
        node->requires_grad = std::any_of(inputs.begin(), inputs.end(),
                                          [](const NodePtr& p) { return p->requires_grad; });
        if (node->requires_grad) {
            node->backward = std::move(backward);
            nodes_.push_back(node);
        }
    }
    return Tensor(std::move(node));
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
    require_2d(a, "matmul");
    require_2d(b, "matmul");
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    if (b.rows() != k)
        throw std::invalid_argument("matmul: inner dimensions differ " + shape_string(a.shape()) + " x " +
                                    shape_string(b.shape()));
    std::vector<double> out(m * n, 0.0);
    const auto& av = a.node_->value;
    const auto& bv = b.node_->value;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = av[i * k + p];
            if (aip == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * bv[p * n + j];
        }
    NodePtr an = a.node_, bn = b.node_;
    return make({m, n}, std::move(out), {an, bn}, [an, bn, m, k, n](detail::Node& self) {
        const auto& g = self.grad;
        if (an->requires_grad) {
            auto& ga = an->ensure_grad();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * bn->value[p * n + j];
                    ga[i * k + p] += acc;
                }
        }
        if (bn->requires_grad) {
            auto& gb = bn->ensure_grad();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    const double aip = an->value[i * k + p];
                    for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * g[i * n + j];
                }
        }
    });
}

Tensor Tape::transpose(const Tensor& a) {
    require_2d(a, "transpose");
    const std::size_t m = a.rows(), n = a.cols();
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a.node_->value[i * n + j];
    NodePtr an = a.node_;
    return make({n, m}, std::move(out), {an}, [an, m, n](detail::Node& self) {
        auto& ga = an->ensure_grad();
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += self.grad[j * m + i];
    });
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.node_->value[i] + b.node_->value[i];
    NodePtr an = a.node_, bn = b.node_;
    return make(a.shape(), std::move(out), {an, bn}, [an, bn](detail::Node& self) {
        for (auto* in : {an.get(), bn.get()}) {
            if (!in->requires_grad) continue;
            auto& g = in->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
    });
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.node_->value[i] * b.node_->value[i];
    NodePtr an = a.node_, bn = b.node_;
    return make(a.shape(), std::move(out), {an, bn}, [an, bn](detail::Node& self) {
        if (an->requires_grad) {
            auto& g = an->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * bn->value[i];
        }
        if (bn->requires_grad) {
            auto& g = bn->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * an->value[i];
        }
    });
}

Tensor Tape::relu(const Tensor& a) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.node_->value[i] > 0.0 ? a.node_->value[i] : 0.0;
    NodePtr an = a.node_;
    return make(a.shape(), std::move(out), {an}, [an](detail::Node& self) {
        auto& g = an->ensure_grad();
        // Subgradient at exactly 0 is 0.
        for (std::size_t i = 0; i < g.size(); ++i)
            if (an->value[i] > 0.0) g[i] += self.grad[i];
    });
}

Tensor Tape::sigmoid(const Tensor& a) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = stable_sigmoid(a.node_->value[i]);
    NodePtr an = a.node_;
    return make(a.shape(), std::move(out), {an}, [an](detail::Node& self) {
        auto& g = an->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double s = self.value[i];
            g[i] += self.grad[i] * s * (1.0 - s);
        }
    });
}

Tensor Tape::sum(const Tensor& a) {
    double total = 0.0;
    for (double v : a.node_->value) total += v;
    NodePtr an = a.node_;
    return make({1, 1}, {total}, {an}, [an](detail::Node& self) {
        auto& g = an->ensure_grad();
        for (auto& gi : g) gi += self.grad[0];
    });
}

Tensor Tape::masked_softmax(const Tensor& scores, const std::vector<bool>& mask) {
    require_2d(scores, "masked_softmax");
    if (mask.size() != scores.size())
        throw std::invalid_argument("masked_softmax: mask has " + std::to_string(mask.size()) +
                                    " entries for a tensor of shape " + shape_string(scores.shape()));
    const std::size_t m = scores.rows(), n = scores.cols();
    const auto& s = scores.node_->value;
    std::vector<double> out(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double mx = -INFINITY;
        for (std::size_t j = 0; j < n; ++j)
            if (mask[i * n + j]) mx = std::max(mx, s[i * n + j]);
        if (mx == -INFINITY) continue;  // fully masked row
        double z = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (mask[i * n + j]) z += out[i * n + j] = std::exp(s[i * n + j] - mx);
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= z;
    }
    NodePtr sn = scores.node_;
    return make(scores.shape(), std::move(out), {sn}, [sn, m, n](detail::Node& self) {
        auto& g = sn->ensure_grad();
        const auto& y = self.value;
        for (std::size_t i = 0; i < m; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < n; ++j) dot += self.grad[i * n + j] * y[i * n + j];
            // y == 0 exactly on masked entries, so they receive no gradient.
            for (std::size_t j = 0; j < n; ++j) g[i * n + j] += y[i * n + j] * (self.grad[i * n + j] - dot);
        }
    });
}

Tensor Tape::conv1d(const Tensor& x, const Tensor& kernel, const Tensor& bias) {
    require_2d(x, "conv1d");
    if (kernel.shape().size() != 3) throw std::invalid_argument("conv1d: kernel must be [width, in, out]");
    const std::size_t steps = x.rows(), cin = x.cols();
    const std::size_t width = kernel.shape()[0], cout = kernel.shape()[2];
    if (width % 2 == 0) throw std::invalid_argument("conv1d: kernel width must be odd");
    if (kernel.shape()[1] != cin)
        throw std::invalid_argument("conv1d: kernel expects " + std::to_string(kernel.shape()[1]) +
                                    " input channels, got " + std::to_string(cin));
    if (bias.shape() != Shape{1, cout}) throw std::invalid_argument("conv1d: bias must be [1, out]");
    const auto half = static_cast<std::ptrdiff_t>(width / 2);
    const auto& xv = x.node_->value;
    const auto& kv = kernel.node_->value;
    std::vector<double> out(steps * cout);
    for (std::size_t t = 0; t < steps; ++t)
        for (std::size_t o = 0; o < cout; ++o) out[t * cout + o] = bias.node_->value[o];
    for (std::size_t t = 0; t < steps; ++t)
        for (std::size_t r = 0; r < width; ++r) {
            const auto src = static_cast<std::ptrdiff_t>(t) + static_cast<std::ptrdiff_t>(r) - half;
            if (src < 0 || src >= static_cast<std::ptrdiff_t>(steps)) continue;
            for (std::size_t c = 0; c < cin; ++c) {
                const double xin = xv[static_cast<std::size_t>(src) * cin + c];
                if (xin == 0.0) continue;
                const double* krow = &kv[(r * cin + c) * cout];
                for (std::size_t o = 0; o < cout; ++o) out[t * cout + o] += xin * krow[o];
            }
        }
    NodePtr xn = x.node_, kn = kernel.node_, bn = bias.node_;
    return make({steps, cout}, std::move(out), {xn, kn, bn},
                [xn, kn, bn, steps, cin, cout, width, half](detail::Node& self) {
                    const auto& g = self.grad;
                    if (bn->requires_grad) {
                        auto& gb = bn->ensure_grad();
                        for (std::size_t t = 0; t < steps; ++t)
                            for (std::size_t o = 0; o < cout; ++o) gb[o] += g[t * cout + o];
                    }
                    const bool gx = xn->requires_grad, gk = kn->requires_grad;
                    if (!gx && !gk) return;
                    if (gx) xn->ensure_grad();
                    if (gk) kn->ensure_grad();
                    for (std::size_t t = 0; t < steps; ++t)
                        for (std::size_t r = 0; r < width; ++r) {
                            const auto src = static_cast<std::ptrdiff_t>(t) + static_cast<std::ptrdiff_t>(r) - half;
                            if (src < 0 || src >= static_cast<std::ptrdiff_t>(steps)) continue;
                            const auto s = static_cast<std::size_t>(src);
                            for (std::size_t c = 0; c < cin; ++c) {
                                const std::size_t kbase = (r * cin + c) * cout;
                                double acc = 0.0;
                                for (std::size_t o = 0; o < cout; ++o) {
                                    if (gk) kn->grad[kbase + o] += xn->value[s * cin + c] * g[t * cout + o];
                                    acc += kn->value[kbase + o] * g[t * cout + o];
                                }
                                if (gx) xn->grad[s * cin + c] += acc;
                            }
                        }
                });
}

Tensor Tape::cosine(const Tensor& a, const Tensor& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("cosine: sizes differ " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
    const auto& av = a.node_->value;
    const auto& bv = b.node_->value;
    double dot = 0.0, na2 = 0.0, nb2 = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) {
        dot += av[i] * bv[i];
        na2 += av[i] * av[i];
        nb2 += bv[i] * bv[i];
    }
    const double na = std::sqrt(na2), nb = std::sqrt(nb2);
    const bool degenerate = na == 0.0 || nb == 0.0;
    const double s = degenerate ? 0.0 : dot / (na * nb);
    NodePtr an = a.node_, bn = b.node_;
    return make({1, 1}, {s}, {an, bn}, [an, bn, s, na, nb, degenerate](detail::Node& self) {
        if (degenerate) return;
        const double g = self.grad[0];
        const double inv = 1.0 / (na * nb);
        if (an->requires_grad) {
            auto& ga = an->ensure_grad();
            for (std::size_t i = 0; i < ga.size(); ++i)
                ga[i] += g * (bn->value[i] * inv - s * an->value[i] / (na * na));
        }
        if (bn->requires_grad) {
            auto& gb = bn->ensure_grad();
            for (std::size_t i = 0; i < gb.size(); ++i)
                gb[i] += g * (an->value[i] * inv - s * bn->value[i] / (nb * nb));
        }
    });
}

Tensor Tape::concat(std::span<const Tensor> parts) {
    if (parts.empty()) throw std::invalid_argument("concat: no inputs");
    std::vector<double> out;
    std::vector<NodePtr> inputs;
    for (const auto& p : parts) {
        out.insert(out.end(), p.node_->value.begin(), p.node_->value.end());
        inputs.push_back(p.node_);
    }
    const std::size_t total = out.size();
    return make({1, total}, std::move(out), inputs, [inputs](detail::Node& self) {
        std::size_t offset = 0;
        for (const auto& in : inputs) {
            const std::size_t n = in->value.size();
            if (in->requires_grad) {
                auto& g = in->ensure_grad();
                for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[offset + i];
            }
            offset += n;
        }
    });
}

Tensor Tape::row(const Tensor& a, std::size_t i) {
    require_2d(a, "row");
    if (i >= a.rows()) throw std::out_of_range("row: index " + std::to_string(i) + " out of range");
    const std::size_t n = a.cols();
    std::vector<double> out(a.node_->value.begin() + static_cast<std::ptrdiff_t>(i * n),
                            a.node_->value.begin() + static_cast<std::ptrdiff_t>((i + 1) * n));
    NodePtr an = a.node_;
    return make({1, n}, std::move(out), {an}, [an, i, n](detail::Node& self) {
        auto& g = an->ensure_grad();
        for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[j];
    });
}

Tensor Tape::masked_max_rows(const Tensor& a, const std::vector<bool>& row_mask) {
    require_2d(a, "masked_max_rows");
    const std::size_t m = a.rows(), n = a.cols();
    if (row_mask.size() != m) throw std::invalid_argument("masked_max_rows: mask length differs from row count");
    if (std::none_of(row_mask.begin(), row_mask.end(), [](bool b) { return b; }))
        throw std::invalid_argument("masked_max_rows: every row is masked");
    std::vector<double> out(n, -INFINITY);
    std::vector<std::size_t> arg(n, 0);
    for (std::size_t i = 0; i < m; ++i) {
        if (!row_mask[i]) continue;
        for (std::size_t j = 0; j < n; ++j)
            if (a.node_->value[i * n + j] > out[j]) {
                out[j] = a.node_->value[i * n + j];
                arg[j] = i;
            }
    }
    NodePtr an = a.node_;
    return make({1, n}, std::move(out), {an}, [an, arg, n](detail::Node& self) {
        auto& g = an->ensure_grad();
        for (std::size_t j = 0; j < n; ++j) g[arg[j] * n + j] += self.grad[j];
    });
}

Tensor Tape::bce_with_logits(const Tensor& logits, std::span<const double> labels) {
    if (labels.size() != logits.size())
        throw std::invalid_argument("bce_with_logits: " + std::to_string(labels.size()) + " labels for " +
                                    std::to_string(logits.size()) + " logits");
    const auto& z = logits.node_->value;
    const double count = static_cast<double>(z.size());
    double total = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i)
        total += std::max(z[i], 0.0) - z[i] * labels[i] + std::log1p(std::exp(-std::abs(z[i])));
    NodePtr ln = logits.node_;
    std::vector<double> y(labels.begin(), labels.end());
    return make({1, 1}, {total / count}, {ln}, [ln, y, count](detail::Node& self) {
        auto& g = ln->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i)
            g[i] += self.grad[0] * (stable_sigmoid(ln->value[i]) - y[i]) / count;
    });
}

void Tape::backward(const Tensor& loss) {
    if (mode_ != Mode::record) throw std::logic_error("backward on an inference tape");
    if (consumed_) throw std::logic_error("backward called twice on the same tape");
    if (loss.size() != 1)
        throw std::invalid_argument("backward requires a scalar loss, got shape " + shape_string(loss.shape()));
    const auto it = std::find(nodes_.begin(), nodes_.end(), loss.node_);
    if (it == nodes_.end())
        throw std::invalid_argument("backward: loss was not produced on this tape or does not depend on any parameter");
    consumed_ = true;
    loss.node_->ensure_grad()[0] += 1.0;
    for (auto rit = std::make_reverse_iterator(it + 1); rit != nodes_.rend(); ++rit) {
        auto& node = **rit;
        if (!node.grad.empty() && node.backward) node.backward(node);
    }
    // Release closures and the saved intermediates they hold.
    for (auto& node : nodes_) node->backward = nullptr;
}

double finite_diff_check(const std::function<Tensor(Tape&)>& f, std::vector<Tensor> params, double epsilon) {
    for (auto& p : params) p.zero_grad();
    {
        Tape tape;
        const Tensor loss = f(tape);
        // A loss that depends on no parameter has an all-zero gradient.
        if (loss.requires_grad()) tape.backward(loss);
    }
    double worst = 0.0;
    for (auto& p : params) {
        const std::vector<double> analytic = p.has_grad() ? std::vector<double>(p.grad().begin(), p.grad().end())
                                                          : std::vector<double>(p.size(), 0.0);
        auto values = p.mutable_values();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            values[i] = saved + epsilon;
            double up;
            {
                Tape tape(Tape::Mode::inference);
                up = f(tape).item();
            }
            values[i] = saved - epsilon;
            double down;
            {
                Tape tape(Tape::Mode::inference);
                down = f(tape).item();
            }
            values[i] = saved;
            const double numeric = (up - down) / (2.0 * epsilon);
            const double err = std::abs(analytic[i] - numeric) /
                               std::max(1e-6, std::abs(analytic[i]) + std::abs(numeric));
            worst = std::max(worst, err);
        }
    }
    return worst;
}

}  // namespace mgan
