#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <cblas.h>

#include "tna/errors.hpp"

namespace tna {

using Shape = std::vector<int>;

inline long numel(const Shape& s) {
    long n = 1;
    for (int d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
    os << ']';
    return os.str();
}

inline void gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha,
                 const float* a, int lda, const float* b, int ldb, float beta,
                 float* c, int ldc) {
    cblas_sgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
                trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda, b,
                ldb, beta, c, ldc);
}

inline void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha,
                 const double* a, int lda, const double* b, int ldb, double beta,
                 double* c, int ldc) {
    cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
                trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda, b,
                ldb, beta, c, ldc);
}

template <class S>
class Tape;

// Dense n-d array. Holds a tape node reference only while it participates in a
// recorded graph; plain value tensors never touch the tape.
template <class S>
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(Shape shape, S fill = S(0))
        : shape_(std::move(shape)),
          data_(std::make_shared<std::vector<S>>(numel(shape_), fill)) {}

    Tensor(Shape shape, std::vector<S> data)
        : shape_(std::move(shape)),
          data_(std::make_shared<std::vector<S>>(std::move(data))) {
        if (static_cast<long>(data_->size()) != numel(shape_))
            throw DimensionError("tensor data size " + std::to_string(data_->size()) +
                                 " does not match shape " + shape_str(shape_));
    }

    const Shape& shape() const { return shape_; }
    long size() const { return data_ ? static_cast<long>(data_->size()) : 0; }
    std::vector<S>& data() { return *data_; }
    const std::vector<S>& data() const { return *data_; }
    const std::shared_ptr<std::vector<S>>& data_ptr() const { return data_; }

    bool defined() const { return static_cast<bool>(data_); }
    bool on_tape() const { return node_ >= 0; }
    int node() const { return node_; }
    Tape<S>* tape() const { return tape_; }
    bool requires_grad() const { return requires_grad_; }
    void set_requires_grad(bool rg) { requires_grad_ = rg; }

    void attach(Tape<S>* tape, int node) {
        tape_ = tape;
        node_ = node;
    }
    void detach() {
        tape_ = nullptr;
        node_ = -1;
    }

    S item() const {
        if (size() != 1)
            throw ContractError("item() on non-scalar tensor " + shape_str(shape_));
        return (*data_)[0];
    }

private:
    Shape shape_;
    std::shared_ptr<std::vector<S>> data_;
    bool requires_grad_ = false;
    Tape<S>* tape_ = nullptr;
    int node_ = -1;
};

// Recorded-tape reverse-mode autodiff. Nodes are appended in execution order,
// which is a topological order of the define-by-run graph; backward walks them
// once in reverse. The tape is rebuilt every training step.
template <class S>
class Tape {
public:
    using BackFn = std::function<void(const std::vector<S>&)>;

    int add_node(Shape shape, BackFn back) {
        nodes_.push_back(Node{std::move(shape), {}, std::move(back), false});
        return static_cast<int>(nodes_.size()) - 1;
    }

    // Registers a leaf parameter for this recording and returns a copy of the
    // tensor bound to a fresh node. Node ids are only valid until backward().
    Tensor<S> watch(const Tensor<S>& t) {
        Tensor<S> w = t;
        int id = add_node(t.shape(), nullptr);
        nodes_[id].leaf = true;
        w.set_requires_grad(true);
        w.attach(this, id);
        return w;
    }

    std::vector<S>& grad(int node) {
        Node& nd = nodes_[node];
        if (nd.grad.empty()) nd.grad.assign(numel(nd.shape), S(0));
        return nd.grad;
    }

    void accumulate(int node, const std::vector<S>& g) {
        std::vector<S>& dst = grad(node);
        for (size_t i = 0; i < dst.size(); ++i) dst[i] += g[i];
    }

    bool empty() const { return nodes_.empty(); }
    size_t size() const { return nodes_.size(); }

    // Runs reverse accumulation from a scalar loss, returns the gradients of
    // all watched leaves keyed by node id, then clears the tape.
    std::unordered_map<int, Tensor<S>> backward(const Tensor<S>& loss) {
        if (nodes_.empty())
            throw ContractError("backward on empty tape");
        if (loss.size() != 1)
            throw ContractError("backward requires a scalar loss, got " +
                                shape_str(loss.shape()));
        if (loss.tape() != this || loss.node() < 0)
            throw ContractError("loss tensor is not on the active tape");

        grad(loss.node())[0] = S(1);
        for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
            Node& nd = nodes_[i];
            if (nd.back && !nd.grad.empty()) nd.back(nd.grad);
        }

        std::unordered_map<int, Tensor<S>> grads;
        for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) {
            if (nodes_[i].leaf)
                grads.emplace(i, Tensor<S>(nodes_[i].shape, grad(i)));
        }
        nodes_.clear();
        return grads;
    }

    void clear() { nodes_.clear(); }

private:
    struct Node {
        Shape shape;
        std::vector<S> grad; // lazily allocated
        BackFn back;         // null for leaves and constants
        bool leaf;
    };
    std::vector<Node> nodes_;
};

template <class S>
using GradMap = std::unordered_map<int, Tensor<S>>;

namespace detail {

template <class S>
Tape<S>* common_tape(std::initializer_list<const Tensor<S>*> ts) {
    Tape<S>* tape = nullptr;
    for (const Tensor<S>* t : ts) {
        if (t->on_tape()) {
            if (tape && tape != t->tape())
                throw ContractError("operands recorded on different tapes");
            tape = t->tape();
        }
    }
    return tape;
}

template <class S>
void require_same_shape(const Tensor<S>& a, const Tensor<S>& b, const char* op) {
    if (a.shape() != b.shape())
        throw DimensionError(std::string(op) + ": shape mismatch " +
                             shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

} // namespace detail

// ---- elementwise ----

template <class S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
    detail::require_same_shape(a, b, "add");
    std::vector<S> d(a.size());
    for (long i = 0; i < a.size(); ++i) d[i] = a.data()[i] + b.data()[i];
    Tensor<S> out(a.shape(), std::move(d));
    Tape<S>* tp = detail::common_tape<S>({&a, &b});
    if (!tp) return out;
    int an = a.node(), bn = b.node();
    int id = tp->add_node(a.shape(), [tp, an, bn](const std::vector<S>& g) {
        if (an >= 0) tp->accumulate(an, g);
        if (bn >= 0) tp->accumulate(bn, g);
    });
    out.attach(tp, id);
    return out;
}

template <class S>
Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b) {
    detail::require_same_shape(a, b, "sub");
    std::vector<S> d(a.size());
    for (long i = 0; i < a.size(); ++i) d[i] = a.data()[i] - b.data()[i];
    Tensor<S> out(a.shape(), std::move(d));
    Tape<S>* tp = detail::common_tape<S>({&a, &b});
    if (!tp) return out;
    int an = a.node(), bn = b.node();
    int id = tp->add_node(a.shape(), [tp, an, bn](const std::vector<S>& g) {
        if (an >= 0) tp->accumulate(an, g);
        if (bn >= 0) {
            std::vector<S>& dst = tp->grad(bn);
            for (size_t i = 0; i < dst.size(); ++i) dst[i] -= g[i];
        }
    });
    out.attach(tp, id);
    return out;
}

template <class S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) {
    detail::require_same_shape(a, b, "mul");
    std::vector<S> d(a.size());
    for (long i = 0; i < a.size(); ++i) d[i] = a.data()[i] * b.data()[i];
    Tensor<S> out(a.shape(), std::move(d));
    Tape<S>* tp = detail::common_tape<S>({&a, &b});
    if (!tp) return out;
    int an = a.node(), bn = b.node();
    auto ad = a.data_ptr(), bd = b.data_ptr();
    int id = tp->add_node(a.shape(), [tp, an, bn, ad, bd](const std::vector<S>& g) {
        if (an >= 0) {
            std::vector<S>& dst = tp->grad(an);
            for (size_t i = 0; i < dst.size(); ++i) dst[i] += g[i] * (*bd)[i];
        }
        if (bn >= 0) {
            std::vector<S>& dst = tp->grad(bn);
            for (size_t i = 0; i < dst.size(); ++i) dst[i] += g[i] * (*ad)[i];
        }
    });
    out.attach(tp, id);
    return out;
}

// out = scale * t + shift, elementwise
template <class S>
Tensor<S> affine(const Tensor<S>& t, S scale, S shift) {
    std::vector<S> d(t.size());
    for (long i = 0; i < t.size(); ++i) d[i] = scale * t.data()[i] + shift;
    Tensor<S> out(t.shape(), std::move(d));
    Tape<S>* tp = detail::common_tape<S>({&t});
    if (!tp) return out;
    int tn = t.node();
    int id = tp->add_node(t.shape(), [tp, tn, scale](const std::vector<S>& g) {
        if (tn >= 0) {
            std::vector<S>& dst = tp->grad(tn);
            for (size_t i = 0; i < dst.size(); ++i) dst[i] += scale * g[i];
        }
    });
    out.attach(tp, id);
    return out;
}

template <class S>
Tensor<S> scale(const Tensor<S>& t, S c) {
    return affine(t, c, S(0));
}

// ---- reductions ----

template <class S>
Tensor<S> sum(const Tensor<S>& t) {
    S acc = 0;
    for (S v : t.data()) acc += v;
    Tensor<S> out(Shape{1}, std::vector<S>{acc});
    Tape<S>* tp = detail::common_tape<S>({&t});
    if (!tp) return out;
    int tn = t.node();
    long n = t.size();
    int id = tp->add_node(Shape{1}, [tp, tn, n](const std::vector<S>& g) {
        if (tn >= 0) {
            std::vector<S>& dst = tp->grad(tn);
            for (long i = 0; i < n; ++i) dst[i] += g[0];
        }
    });
    out.attach(tp, id);
    return out;
}

template <class S>
Tensor<S> mean(const Tensor<S>& t) {
    return scale(sum(t), S(1) / static_cast<S>(t.size()));
}

template <class S>
Tensor<S> reshape(const Tensor<S>& t, Shape shape) {
    if (numel(shape) != t.size())
        throw DimensionError("reshape: cannot view " + shape_str(t.shape()) +
                             " as " + shape_str(shape));
    Tensor<S> out(shape, t.data());
    Tape<S>* tp = detail::common_tape<S>({&t});
    if (!tp) return out;
    int tn = t.node();
    int id = tp->add_node(shape, [tp, tn](const std::vector<S>& g) {
        if (tn >= 0) tp->accumulate(tn, g);
    });
    out.attach(tp, id);
    return out;
}

template <class S>
Tensor<S> flatten_batch(const Tensor<S>& t) {
    // [N, ...] -> [N, rest]
    if (t.shape().size() < 2)
        throw DimensionError("flatten_batch needs rank >= 2, got " +
                             shape_str(t.shape()));
    int n = t.shape()[0];
    return reshape(t, Shape{n, static_cast<int>(t.size() / n)});
}

// ---- linear algebra ----

template <class S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b) {
    if (a.shape().size() != 2 || b.shape().size() != 2 ||
        a.shape()[1] != b.shape()[0])
        throw DimensionError("matmul: incompatible shapes " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
    int m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    std::vector<S> d(static_cast<size_t>(m) * n);
    gemm(false, false, m, n, k, S(1), a.data().data(), k, b.data().data(), n,
         S(0), d.data(), n);
    Tensor<S> out(Shape{m, n}, std::move(d));
    Tape<S>* tp = detail::common_tape<S>({&a, &b});
    if (!tp) return out;
    int an = a.node(), bn = b.node();
    auto ad = a.data_ptr(), bd = b.data_ptr();
    int id = tp->add_node(Shape{m, n},
                          [tp, an, bn, ad, bd, m, n, k](const std::vector<S>& g) {
        if (an >= 0) { // dA += dC * B^T
            std::vector<S>& da = tp->grad(an);
            gemm(false, true, m, k, n, S(1), g.data(), n, bd->data(), n, S(1),
                 da.data(), k);
        }
        if (bn >= 0) { // dB += A^T * dC
            std::vector<S>& db = tp->grad(bn);
            gemm(true, false, k, n, m, S(1), ad->data(), k, g.data(), n, S(1),
                 db.data(), n);
        }
    });
    out.attach(tp, id);
    return out;
}

// bias broadcast over rows: [N,M] + [M]
template <class S>
Tensor<S> add_rowvec(const Tensor<S>& m, const Tensor<S>& v) {
    if (m.shape().size() != 2 || v.shape().size() != 1 ||
        m.shape()[1] != v.shape()[0])
        throw DimensionError("add_rowvec: " + shape_str(m.shape()) + " vs " +
                             shape_str(v.shape()));
    int rows = m.shape()[0], cols = m.shape()[1];
    std::vector<S> d(m.size());
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            d[static_cast<size_t>(r) * cols + c] =
                m.data()[static_cast<size_t>(r) * cols + c] + v.data()[c];
    Tensor<S> out(m.shape(), std::move(d));
    Tape<S>* tp = detail::common_tape<S>({&m, &v});
    if (!tp) return out;
    int mn = m.node(), vn = v.node();
    int id = tp->add_node(m.shape(), [tp, mn, vn, rows, cols](const std::vector<S>& g) {
        if (mn >= 0) tp->accumulate(mn, g);
        if (vn >= 0) {
            std::vector<S>& dv = tp->grad(vn);
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < cols; ++c)
                    dv[c] += g[static_cast<size_t>(r) * cols + c];
        }
    });
    out.attach(tp, id);
    return out;
}

// per-channel bias on [N,F,H,W]
template <class S>
Tensor<S> add_channel_bias(const Tensor<S>& t, const Tensor<S>& b) {
    if (t.shape().size() != 4 || b.shape().size() != 1 ||
        t.shape()[1] != b.shape()[0])
        throw DimensionError("add_channel_bias: " + shape_str(t.shape()) + " vs " +
                             shape_str(b.shape()));
    int n = t.shape()[0], f = t.shape()[1];
    long hw = static_cast<long>(t.shape()[2]) * t.shape()[3];
    std::vector<S> d(t.size());
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < f; ++c) {
            long base = (static_cast<long>(i) * f + c) * hw;
            for (long p = 0; p < hw; ++p) d[base + p] = t.data()[base + p] + b.data()[c];
        }
    Tensor<S> out(t.shape(), std::move(d));
    Tape<S>* tp = detail::common_tape<S>({&t, &b});
    if (!tp) return out;
    int tn = t.node(), bn = b.node();
    int id = tp->add_node(t.shape(), [tp, tn, bn, n, f, hw](const std::vector<S>& g) {
        if (tn >= 0) tp->accumulate(tn, g);
        if (bn >= 0) {
            std::vector<S>& db = tp->grad(bn);
            for (int i = 0; i < n; ++i)
                for (int c = 0; c < f; ++c) {
                    long base = (static_cast<long>(i) * f + c) * hw;
                    for (long p = 0; p < hw; ++p) db[c] += g[base + p];
                }
        }
    });
    out.attach(tp, id);
    return out;
}

namespace detail {

// 3x3, stride 1, zero pad 1. cols is [C*9, H*W] row-major.
template <class S>
void im2col3x3(const S* img, int c, int h, int w, S* cols) {
    long hw = static_cast<long>(h) * w;
    for (int ch = 0; ch < c; ++ch)
        for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
                S* row = cols + (static_cast<long>(ch) * 9 + ky * 3 + kx) * hw;
                for (int y = 0; y < h; ++y) {
                    int sy = y + ky - 1;
                    for (int x = 0; x < w; ++x) {
                        int sx = x + kx - 1;
                        row[static_cast<long>(y) * w + x] =
                            (sy >= 0 && sy < h && sx >= 0 && sx < w)
                                ? img[static_cast<long>(ch) * hw + sy * w + sx]
                                : S(0);
                    }
                }
            }
}

template <class S>
void col2im3x3_add(const S* cols, int c, int h, int w, S* img) {
    long hw = static_cast<long>(h) * w;
    for (int ch = 0; ch < c; ++ch)
        for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
                const S* row = cols + (static_cast<long>(ch) * 9 + ky * 3 + kx) * hw;
                for (int y = 0; y < h; ++y) {
                    int sy = y + ky - 1;
                    if (sy < 0 || sy >= h) continue;
                    for (int x = 0; x < w; ++x) {
                        int sx = x + kx - 1;
                        if (sx < 0 || sx >= w) continue;
                        img[static_cast<long>(ch) * hw + sy * w + sx] +=
                            row[static_cast<long>(y) * w + x];
                    }
                }
            }
}

} // namespace detail

// 3x3 cross-correlation, stride 1, pad 1 (same-size output), lowered to
// matmul through im2col so forward and both backward rules share one path.
template <class S>
Tensor<S> conv2d(const Tensor<S>& input, const Tensor<S>& kernel) {
    if (input.shape().size() != 4 || kernel.shape().size() != 4)
        throw DimensionError("conv2d expects 4-d input and kernel, got " +
                             shape_str(input.shape()) + " and " +
                             shape_str(kernel.shape()));
    if (kernel.shape()[2] != 3 || kernel.shape()[3] != 3)
        throw DimensionError("conv2d supports 3x3 kernels only, got " +
                             shape_str(kernel.shape()));
    if (input.shape()[1] != kernel.shape()[1])
        throw DimensionError("conv2d channel mismatch: input " +
                             shape_str(input.shape()) + " vs kernel " +
                             shape_str(kernel.shape()));
    int n = input.shape()[0], c = input.shape()[1], h = input.shape()[2],
        w = input.shape()[3], f = kernel.shape()[0];
    long hw = static_cast<long>(h) * w;
    int ck = c * 9;
    std::vector<S> out_data(static_cast<size_t>(n) * f * hw);
    std::vector<S> cols(static_cast<size_t>(ck) * hw);
    for (int i = 0; i < n; ++i) {
        detail::im2col3x3(input.data().data() + static_cast<long>(i) * c * hw, c, h,
                          w, cols.data());
        gemm(false, false, f, static_cast<int>(hw), ck, S(1), kernel.data().data(),
             ck, cols.data(), static_cast<int>(hw), S(0),
             out_data.data() + static_cast<long>(i) * f * hw, static_cast<int>(hw));
    }
    Tensor<S> out(Shape{n, f, h, w}, std::move(out_data));
    Tape<S>* tp = detail::common_tape<S>({&input, &kernel});
    if (!tp) return out;
    int in_node = input.node(), k_node = kernel.node();
    auto in_d = input.data_ptr();
    auto k_d = kernel.data_ptr();
    int id = tp->add_node(out.shape(), [tp, in_node, k_node, in_d, k_d, n, c, h, w,
                                        f, hw, ck](const std::vector<S>& g) {
        std::vector<S> cols(static_cast<size_t>(ck) * hw);
        std::vector<S> dcols;
        if (in_node >= 0) dcols.resize(cols.size());
        for (int i = 0; i < n; ++i) {
            const S* g_i = g.data() + static_cast<long>(i) * f * hw;
            if (k_node >= 0) {
                detail::im2col3x3(in_d->data() + static_cast<long>(i) * c * hw, c,
                                  h, w, cols.data());
                std::vector<S>& dk = tp->grad(k_node);
                gemm(false, true, f, ck, static_cast<int>(hw), S(1), g_i,
                     static_cast<int>(hw), cols.data(), static_cast<int>(hw), S(1),
                     dk.data(), ck);
            }
            if (in_node >= 0) {
                gemm(true, false, ck, static_cast<int>(hw), f, S(1), k_d->data(),
                     ck, g_i, static_cast<int>(hw), S(0), dcols.data(),
                     static_cast<int>(hw));
                std::vector<S>& din = tp->grad(in_node);
                detail::col2im3x3_add(dcols.data(), c, h, w,
                                      din.data() + static_cast<long>(i) * c * hw);
            }
        }
    });
    out.attach(tp, id);
    return out;
}

// 2x2 non-overlapping mean pool
template <class S>
Tensor<S> avgpool2(const Tensor<S>& input) {
    if (input.shape().size() != 4)
        throw DimensionError("avgpool2 expects 4-d input, got " +
                             shape_str(input.shape()));
    int n = input.shape()[0], c = input.shape()[1], h = input.shape()[2],
        w = input.shape()[3];
    if (h % 2 != 0 || w % 2 != 0)
        throw DimensionError("avgpool2 requires even spatial size, got " +
                             shape_str(input.shape()));
    int oh = h / 2, ow = w / 2;
    std::vector<S> d(static_cast<size_t>(n) * c * oh * ow);
    for (int i = 0; i < n; ++i)
        for (int ch = 0; ch < c; ++ch) {
            const S* src = input.data().data() +
                           (static_cast<long>(i) * c + ch) * h * w;
            S* dst = d.data() + (static_cast<long>(i) * c + ch) * oh * ow;
            for (int y = 0; y < oh; ++y)
                for (int x = 0; x < ow; ++x)
                    dst[static_cast<long>(y) * ow + x] =
                        (src[(2 * y) * w + 2 * x] + src[(2 * y) * w + 2 * x + 1] +
                         src[(2 * y + 1) * w + 2 * x] +
                         src[(2 * y + 1) * w + 2 * x + 1]) /
                        S(4);
        }
    Tensor<S> out(Shape{n, c, oh, ow}, std::move(d));
    Tape<S>* tp = detail::common_tape<S>({&input});
    if (!tp) return out;
    int in_node = input.node();
    int id = tp->add_node(out.shape(), [tp, in_node, n, c, h, w, oh,
                                        ow](const std::vector<S>& g) {
        if (in_node < 0) return;
        std::vector<S>& din = tp->grad(in_node);
        for (int i = 0; i < n; ++i)
            for (int ch = 0; ch < c; ++ch) {
                S* dst = din.data() + (static_cast<long>(i) * c + ch) * h * w;
                const S* gsrc = g.data() + (static_cast<long>(i) * c + ch) * oh * ow;
                for (int y = 0; y < oh; ++y)
                    for (int x = 0; x < ow; ++x) {
                        S q = gsrc[static_cast<long>(y) * ow + x] / S(4);
                        dst[(2 * y) * w + 2 * x] += q;
                        dst[(2 * y) * w + 2 * x + 1] += q;
                        dst[(2 * y + 1) * w + 2 * x] += q;
                        dst[(2 * y + 1) * w + 2 * x + 1] += q;
                    }
            }
    });
    out.attach(tp, id);
    return out;
}

// Forward passes `forward` through untouched; backward multiplies the incoming
// gradient elementwise by rule(surrogate_input) and routes it to
// surrogate_input. Used to install the spike surrogate.
template <class S>
Tensor<S> custom_grad(const Tensor<S>& forward, const Tensor<S>& surrogate_input,
                      std::type_identity_t<std::function<S(S)>> rule) {
    detail::require_same_shape(forward, surrogate_input, "custom_grad");
    Tensor<S> out(forward.shape(), forward.data());
    Tape<S>* tp = detail::common_tape<S>({&surrogate_input});
    if (!tp) return out;
    int sn = surrogate_input.node();
    auto sd = surrogate_input.data_ptr();
    int id = tp->add_node(forward.shape(),
                          [tp, sn, sd, rule](const std::vector<S>& g) {
        if (sn < 0) return;
        std::vector<S>& dst = tp->grad(sn);
        for (size_t i = 0; i < dst.size(); ++i) dst[i] += g[i] * rule((*sd)[i]);
    });
    out.attach(tp, id);
    return out;
}

// rowwise log-softmax on [N,C]
template <class S>
Tensor<S> log_softmax(const Tensor<S>& t) {
    if (t.shape().size() != 2)
        throw DimensionError("log_softmax expects [N,C], got " +
                             shape_str(t.shape()));
    int n = t.shape()[0], c = t.shape()[1];
    std::vector<S> d(t.size());
    for (int r = 0; r < n; ++r) {
        const S* row = t.data().data() + static_cast<long>(r) * c;
        S mx = row[0];
        for (int j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        S acc = 0;
        for (int j = 0; j < c; ++j) acc += std::exp(row[j] - mx);
        S lse = mx + std::log(acc);
        for (int j = 0; j < c; ++j) d[static_cast<long>(r) * c + j] = row[j] - lse;
    }
    Tensor<S> out(t.shape(), std::move(d));
    Tape<S>* tp = detail::common_tape<S>({&t});
    if (!tp) return out;
    int tn = t.node();
    auto od = out.data_ptr();
    int id = tp->add_node(t.shape(), [tp, tn, od, n, c](const std::vector<S>& g) {
        if (tn < 0) return;
        std::vector<S>& dst = tp->grad(tn);
        for (int r = 0; r < n; ++r) {
            S gsum = 0;
            for (int j = 0; j < c; ++j) gsum += g[static_cast<long>(r) * c + j];
            for (int j = 0; j < c; ++j) {
                long idx = static_cast<long>(r) * c + j;
                dst[idx] += g[idx] - std::exp((*od)[idx]) * gsum;
            }
        }
    });
    out.attach(tp, id);
    return out;
}

// mean over the batch of -logp[n, label_n]
template <class S>
Tensor<S> nll(const Tensor<S>& logp, const std::vector<int>& labels) {
    if (logp.shape().size() != 2)
        throw DimensionError("nll expects [N,C], got " + shape_str(logp.shape()));
    int n = logp.shape()[0], c = logp.shape()[1];
    if (static_cast<int>(labels.size()) != n)
        throw DimensionError("nll: batch " + std::to_string(n) + " vs " +
                             std::to_string(labels.size()) + " labels");
    for (int i = 0; i < n; ++i)
        if (labels[i] < 0 || labels[i] >= c)
            throw ContractError("nll: label " + std::to_string(labels[i]) +
                                " out of range [0," + std::to_string(c) + ")");
    S acc = 0;
    for (int i = 0; i < n; ++i)
        acc -= logp.data()[static_cast<long>(i) * c + labels[i]];
    Tensor<S> out(Shape{1}, std::vector<S>{acc / static_cast<S>(n)});
    Tape<S>* tp = detail::common_tape<S>({&logp});
    if (!tp) return out;
    int pn = logp.node();
    int id = tp->add_node(Shape{1}, [tp, pn, labels, n, c](const std::vector<S>& g) {
        if (pn < 0) return;
        std::vector<S>& dst = tp->grad(pn);
        for (int i = 0; i < n; ++i)
            dst[static_cast<long>(i) * c + labels[i]] -= g[0] / static_cast<S>(n);
    });
    out.attach(tp, id);
    return out;
}

} // namespace tna
