#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace radcine {

using Shape = std::vector<int>;

inline int64_t shape_numel(const Shape& s) {
    int64_t n = 1;
    for (int d : s) {
        if (d <= 0) throw std::invalid_argument("tensor: non-positive dimension");
        n *= d;
    }
    return n;
}

inline std::vector<int64_t> row_major_strides(const Shape& s) {
    std::vector<int64_t> st(s.size());
    int64_t acc = 1;
    for (int i = static_cast<int>(s.size()) - 1; i >= 0; --i) {
        st[i] = acc;
        acc *= s[i];
    }
    return st;
}

// Allocation accounting for the bench module. Tracks live/peak bytes held by
// tensor buffers (data + grad).
struct TensorAlloc {
    static std::atomic<int64_t>& live() {
        static std::atomic<int64_t> v{0};
        return v;
    }
    static std::atomic<int64_t>& peak() {
        static std::atomic<int64_t> v{0};
        return v;
    }
    static void add(int64_t bytes) {
        const int64_t now = live().fetch_add(bytes) + bytes;
        int64_t p = peak().load();
        while (now > p && !peak().compare_exchange_weak(p, now)) {
        }
    }
    static void sub(int64_t bytes) { live().fetch_sub(bytes); }
    static void reset_peak() { peak().store(live().load()); }
};

class Tensor;

namespace detail {

struct TensorImpl;

struct Node {
    std::vector<Tensor> inputs;  // keeps the upstream graph alive
    // Receives the gradient w.r.t. this node's output and accumulates into
    // the inputs' grad buffers.
    std::function<void(const std::vector<float>&)> backward;
};

struct TensorImpl {
    Shape shape;
    std::vector<float> data;
    bool requires_grad = false;
    std::unique_ptr<std::vector<float>> grad;
    std::shared_ptr<Node> node;  // producer; null for leaves

    explicit TensorImpl(Shape s) : shape(std::move(s)) {
        data.assign(static_cast<size_t>(shape_numel(shape)), 0.f);
        TensorAlloc::add(static_cast<int64_t>(data.size()) * 4);
    }
    TensorImpl(Shape s, std::vector<float> d) : shape(std::move(s)), data(std::move(d)) {
        if (static_cast<int64_t>(data.size()) != shape_numel(shape))
            throw std::invalid_argument("tensor: data size does not match shape");
        TensorAlloc::add(static_cast<int64_t>(data.size()) * 4);
    }
    ~TensorImpl() {
        TensorAlloc::sub(static_cast<int64_t>(data.size()) * 4);
        if (grad) TensorAlloc::sub(static_cast<int64_t>(grad->size()) * 4);
    }
    std::vector<float>& ensure_grad() {
        if (!grad) {
            grad = std::make_unique<std::vector<float>>(data.size(), 0.f);
            TensorAlloc::add(static_cast<int64_t>(grad->size()) * 4);
        }
        return *grad;
    }
};

inline bool& grad_mode() {
    thread_local bool enabled = true;
    return enabled;
}

}  // namespace detail

// Disables graph recording within scope (inference / raw numeric code).
struct NoGradGuard {
    bool prev;
    NoGradGuard() : prev(detail::grad_mode()) { detail::grad_mode() = false; }
    ~NoGradGuard() { detail::grad_mode() = prev; }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;
};

inline bool grad_enabled() { return detail::grad_mode(); }

// Dense float32 array with optional reverse-mode gradient. Value-semantic
// handle onto shared storage; data is immutable once built (only grad
// buffers mutate), so tensors are safe to share across a graph.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape) : impl_(std::make_shared<detail::TensorImpl>(std::move(shape))) {}
    Tensor(Shape shape, std::vector<float> data)
        : impl_(std::make_shared<detail::TensorImpl>(std::move(shape), std::move(data))) {}

    static Tensor zeros(Shape s) { return Tensor(std::move(s)); }
    static Tensor full(Shape s, float v) {
        Tensor t(std::move(s));
        std::fill(t.impl_->data.begin(), t.impl_->data.end(), v);
        return t;
    }
    static Tensor scalar(float v) { return full({1}, v); }

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const { return impl_->shape; }
    int dim(int i) const { return impl_->shape[static_cast<size_t>(i)]; }
    int ndim() const { return static_cast<int>(impl_->shape.size()); }
    int64_t numel() const { return static_cast<int64_t>(impl_->data.size()); }

    const float* data() const { return impl_->data.data(); }
    float* mutable_data() { return impl_->data.data(); }
    const std::vector<float>& vec() const { return impl_->data; }
    float item() const {
        if (numel() != 1) throw std::invalid_argument("item(): tensor is not a scalar");
        return impl_->data[0];
    }

    bool requires_grad() const { return impl_ && impl_->requires_grad; }
    Tensor& set_requires_grad(bool b) {
        impl_->requires_grad = b;
        return *this;
    }

    bool has_grad() const { return impl_->grad != nullptr; }
    const std::vector<float>& grad() const {
        if (!impl_->grad) throw std::runtime_error("grad(): no gradient has been computed");
        return *impl_->grad;
    }
    void zero_grad() {
        if (impl_->grad) std::fill(impl_->grad->begin(), impl_->grad->end(), 0.f);
    }

    // Value copy detached from the graph.
    Tensor detach() const {
        Tensor t(impl_->shape, impl_->data);
        return t;
    }

    bool all_finite() const {
        for (float v : impl_->data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    std::shared_ptr<detail::TensorImpl> impl() const { return impl_; }

    // Grafts a producer node onto this tensor (op helpers only).
    void attach_node(std::shared_ptr<detail::Node> n) { impl_->node = std::move(n); }

private:
    std::shared_ptr<detail::TensorImpl> impl_;
};

namespace detail {

// Marks `out` as graph-connected to `inputs` with the given backward fn,
// respecting grad mode.
template <typename BackwardFn>
inline void wire(Tensor& out, std::vector<Tensor> inputs, BackwardFn&& fn) {
    if (!grad_mode()) return;
    bool needs = false;
    for (const auto& t : inputs) needs = needs || t.requires_grad();
    if (!needs) return;
    auto node = std::make_shared<Node>();
    node->inputs = std::move(inputs);
    node->backward = std::forward<BackwardFn>(fn);
    out.set_requires_grad(true);
    out.attach_node(std::move(node));
}

inline void accum(const Tensor& t, const float* g, int64_t n) {
    if (!t.requires_grad()) return;
    auto& buf = t.impl()->ensure_grad();
    for (int64_t i = 0; i < n; ++i) buf[static_cast<size_t>(i)] += g[static_cast<size_t>(i)];
}

}  // namespace detail

// Reverse pass from a scalar loss. Every tensor on the path with
// requires_grad receives (accumulates) its gradient.
inline void backward(const Tensor& loss) {
    if (loss.numel() != 1) throw std::invalid_argument("backward: loss must be a scalar");
    if (!loss.requires_grad() || !loss.impl()->node)
        throw std::runtime_error("backward: loss is not attached to a graph");

    // Topological order over impls via iterative DFS.
    std::vector<detail::TensorImpl*> order;
    std::unordered_set<detail::TensorImpl*> seen;
    std::vector<std::pair<detail::TensorImpl*, size_t>> stack;
    stack.push_back({loss.impl().get(), 0});
    seen.insert(loss.impl().get());
    while (!stack.empty()) {
        auto& [impl, next] = stack.back();
        if (impl->node && next < impl->node->inputs.size()) {
            detail::TensorImpl* child = impl->node->inputs[next].impl().get();
            ++next;
            if (child->node && !seen.count(child)) {
                seen.insert(child);
                stack.push_back({child, 0});
            }
        } else {
            order.push_back(impl);
            stack.pop_back();
        }
    }

    loss.impl()->ensure_grad()[0] = 1.f;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        detail::TensorImpl* impl = *it;
        if (!impl->node) continue;
        if (!impl->grad) continue;  // no gradient flowed to this node
        impl->node->backward(*impl->grad);
    }
}

// ---------------------------------------------------------------------------
// elementwise / scalar ops
// ---------------------------------------------------------------------------

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

inline Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    Tensor out(a.shape());
    const int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) out.mutable_data()[i] = a.data()[i] + b.data()[i];
    detail::wire(out, {a, b}, [a, b, n](const std::vector<float>& g) {
        detail::accum(a, g.data(), n);
        detail::accum(b, g.data(), n);
    });
    return out;
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    Tensor out(a.shape());
    const int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) out.mutable_data()[i] = a.data()[i] - b.data()[i];
    detail::wire(out, {a, b}, [a, b, n](const std::vector<float>& g) {
        detail::accum(a, g.data(), n);
        if (b.requires_grad()) {
            auto& gb = b.impl()->ensure_grad();
            for (int64_t i = 0; i < n; ++i) gb[static_cast<size_t>(i)] -= g[static_cast<size_t>(i)];
        }
    });
    return out;
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    Tensor out(a.shape());
    const int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) out.mutable_data()[i] = a.data()[i] * b.data()[i];
    detail::wire(out, {a, b}, [a, b, n](const std::vector<float>& g) {
        if (a.requires_grad()) {
            auto& ga = a.impl()->ensure_grad();
            for (int64_t i = 0; i < n; ++i)
                ga[static_cast<size_t>(i)] += g[static_cast<size_t>(i)] * b.data()[i];
        }
        if (b.requires_grad()) {
            auto& gb = b.impl()->ensure_grad();
            for (int64_t i = 0; i < n; ++i)
                gb[static_cast<size_t>(i)] += g[static_cast<size_t>(i)] * a.data()[i];
        }
    });
    return out;
}

inline Tensor scale(const Tensor& a, float c) {
    Tensor out(a.shape());
    const int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) out.mutable_data()[i] = a.data()[i] * c;
    detail::wire(out, {a}, [a, c, n](const std::vector<float>& g) {
        if (a.requires_grad()) {
            auto& ga = a.impl()->ensure_grad();
            for (int64_t i = 0; i < n; ++i) ga[static_cast<size_t>(i)] += c * g[static_cast<size_t>(i)];
        }
    });
    return out;
}

inline Tensor neg(const Tensor& a) { return scale(a, -1.f); }

// a * s where s is a 1-element tensor (broadcast scalar).
inline Tensor scale_by(const Tensor& a, const Tensor& s) {
    if (s.numel() != 1) throw std::invalid_argument("scale_by: scale must be a 1-element tensor");
    Tensor out(a.shape());
    const int64_t n = a.numel();
    const float sv = s.data()[0];
    for (int64_t i = 0; i < n; ++i) out.mutable_data()[i] = a.data()[i] * sv;
    detail::wire(out, {a, s}, [a, s, n](const std::vector<float>& g) {
        if (a.requires_grad()) {
            const float sv = s.data()[0];
            auto& ga = a.impl()->ensure_grad();
            for (int64_t i = 0; i < n; ++i) ga[static_cast<size_t>(i)] += sv * g[static_cast<size_t>(i)];
        }
        if (s.requires_grad()) {
            double acc = 0.0;
            for (int64_t i = 0; i < n; ++i)
                acc += static_cast<double>(g[static_cast<size_t>(i)]) * a.data()[i];
            s.impl()->ensure_grad()[0] += static_cast<float>(acc);
        }
    });
    return out;
}

// Scalar / scalar (1-element tensors).
inline Tensor div_scalar(const Tensor& a, const Tensor& b) {
    if (a.numel() != 1 || b.numel() != 1)
        throw std::invalid_argument("div_scalar: expects 1-element tensors");
    Tensor out = Tensor::scalar(a.data()[0] / b.data()[0]);
    detail::wire(out, {a, b}, [a, b](const std::vector<float>& g) {
        const float av = a.data()[0], bv = b.data()[0];
        if (a.requires_grad()) a.impl()->ensure_grad()[0] += g[0] / bv;
        if (b.requires_grad()) b.impl()->ensure_grad()[0] += -g[0] * av / (bv * bv);
    });
    return out;
}

inline Tensor sum(const Tensor& a) {
    double acc = 0.0;
    const int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) acc += a.data()[i];
    Tensor out = Tensor::scalar(static_cast<float>(acc));
    detail::wire(out, {a}, [a, n](const std::vector<float>& g) {
        if (a.requires_grad()) {
            auto& ga = a.impl()->ensure_grad();
            for (int64_t i = 0; i < n; ++i) ga[static_cast<size_t>(i)] += g[0];
        }
    });
    return out;
}

inline Tensor mean(const Tensor& a) {
    const int64_t n = a.numel();
    Tensor s = sum(a);
    return scale(s, 1.f / static_cast<float>(n));
}

// <a, b> over all elements (double accumulation).
inline Tensor dot(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "dot");
    const int64_t n = a.numel();
    double acc = 0.0;
    for (int64_t i = 0; i < n; ++i)
        acc += static_cast<double>(a.data()[i]) * static_cast<double>(b.data()[i]);
    Tensor out = Tensor::scalar(static_cast<float>(acc));
    detail::wire(out, {a, b}, [a, b, n](const std::vector<float>& g) {
        if (a.requires_grad()) {
            auto& ga = a.impl()->ensure_grad();
            for (int64_t i = 0; i < n; ++i) ga[static_cast<size_t>(i)] += g[0] * b.data()[i];
        }
        if (b.requires_grad()) {
            auto& gb = b.impl()->ensure_grad();
            for (int64_t i = 0; i < n; ++i) gb[static_cast<size_t>(i)] += g[0] * a.data()[i];
        }
    });
    return out;
}

inline Tensor softplus(const Tensor& a) {
    Tensor out(a.shape());
    const int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) {
        const float x = a.data()[i];
        out.mutable_data()[i] = x > 20.f ? x : std::log1p(std::exp(std::min(x, 20.f)));
    }
    detail::wire(out, {a}, [a, n](const std::vector<float>& g) {
        if (!a.requires_grad()) return;
        auto& ga = a.impl()->ensure_grad();
        for (int64_t i = 0; i < n; ++i) {
            const float x = a.data()[i];
            const float sig = 1.f / (1.f + std::exp(-x));
            ga[static_cast<size_t>(i)] += g[static_cast<size_t>(i)] * sig;
        }
    });
    return out;
}

inline Tensor leaky_relu(const Tensor& a, float slope) {
    if (!(slope > 0.f && slope < 1.f))
        throw std::invalid_argument("leaky_relu: slope must be in (0,1)");
    Tensor out(a.shape());
    const int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) {
        const float x = a.data()[i];
        out.mutable_data()[i] = x >= 0.f ? x : slope * x;
    }
    detail::wire(out, {a}, [a, slope, n](const std::vector<float>& g) {
        if (!a.requires_grad()) return;
        auto& ga = a.impl()->ensure_grad();
        for (int64_t i = 0; i < n; ++i) {
            const float m = a.data()[i] >= 0.f ? 1.f : slope;
            ga[static_cast<size_t>(i)] += m * g[static_cast<size_t>(i)];
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// shape ops
// ---------------------------------------------------------------------------

inline Tensor permute(const Tensor& a, const std::vector<int>& perm) {
    const int nd = a.ndim();
    if (static_cast<int>(perm.size()) != nd) throw std::invalid_argument("permute: rank mismatch");
    std::vector<bool> used(static_cast<size_t>(nd), false);
    Shape out_shape(static_cast<size_t>(nd));
    for (int i = 0; i < nd; ++i) {
        const int p = perm[static_cast<size_t>(i)];
        if (p < 0 || p >= nd || used[static_cast<size_t>(p)])
            throw std::invalid_argument("permute: invalid permutation");
        used[static_cast<size_t>(p)] = true;
        out_shape[static_cast<size_t>(i)] = a.shape()[static_cast<size_t>(p)];
    }
    Tensor out(out_shape);
    const auto in_st = row_major_strides(a.shape());
    const int64_t n = a.numel();
    // out[i0,...] = in[perm mapping]; walk output linearly.
    std::vector<int64_t> src_stride_for_out(static_cast<size_t>(nd));
    for (int i = 0; i < nd; ++i)
        src_stride_for_out[static_cast<size_t>(i)] = in_st[static_cast<size_t>(perm[static_cast<size_t>(i)])];
    std::vector<int> idx(static_cast<size_t>(nd), 0);
    int64_t src = 0;
    for (int64_t o = 0; o < n; ++o) {
        out.mutable_data()[o] = a.data()[src];
        for (int d = nd - 1; d >= 0; --d) {
            idx[static_cast<size_t>(d)]++;
            src += src_stride_for_out[static_cast<size_t>(d)];
            if (idx[static_cast<size_t>(d)] < out_shape[static_cast<size_t>(d)]) break;
            src -= src_stride_for_out[static_cast<size_t>(d)] * out_shape[static_cast<size_t>(d)];
            idx[static_cast<size_t>(d)] = 0;
        }
    }
    detail::wire(out, {a}, [a, perm, out_shape, nd](const std::vector<float>& g) {
        if (!a.requires_grad()) return;
        auto& ga = a.impl()->ensure_grad();
        const auto in_st = row_major_strides(a.shape());
        std::vector<int64_t> sstride(static_cast<size_t>(nd));
        for (int i = 0; i < nd; ++i)
            sstride[static_cast<size_t>(i)] = in_st[static_cast<size_t>(perm[static_cast<size_t>(i)])];
        std::vector<int> idx(static_cast<size_t>(nd), 0);
        int64_t src = 0;
        const int64_t n = static_cast<int64_t>(g.size());
        for (int64_t o = 0; o < n; ++o) {
            ga[static_cast<size_t>(src)] += g[static_cast<size_t>(o)];
            for (int d = nd - 1; d >= 0; --d) {
                idx[static_cast<size_t>(d)]++;
                src += sstride[static_cast<size_t>(d)];
                if (idx[static_cast<size_t>(d)] < out_shape[static_cast<size_t>(d)]) break;
                src -= sstride[static_cast<size_t>(d)] * out_shape[static_cast<size_t>(d)];
                idx[static_cast<size_t>(d)] = 0;
            }
        }
    });
    return out;
}

inline Tensor reshape(const Tensor& a, Shape new_shape) {
    if (shape_numel(new_shape) != a.numel()) throw std::invalid_argument("reshape: numel mismatch");
    Tensor out(std::move(new_shape), a.vec());
    const int64_t n = a.numel();
    detail::wire(out, {a}, [a, n](const std::vector<float>& g) { detail::accum(a, g.data(), n); });
    return out;
}

inline Tensor slice_axis(const Tensor& a, int axis, int start, int len) {
    const int nd = a.ndim();
    if (axis < 0 || axis >= nd) throw std::invalid_argument("slice: bad axis");
    const int as = a.shape()[static_cast<size_t>(axis)];
    if (start < 0 || len <= 0 || start + len > as) throw std::invalid_argument("slice: out of range");
    Shape os = a.shape();
    os[static_cast<size_t>(axis)] = len;
    Tensor out(os);
    int64_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= a.shape()[static_cast<size_t>(i)];
    for (int i = axis + 1; i < nd; ++i) inner *= a.shape()[static_cast<size_t>(i)];
    for (int64_t o = 0; o < outer; ++o) {
        const float* src = a.data() + (o * as + start) * inner;
        float* dst = out.mutable_data() + o * len * inner;
        std::memcpy(dst, src, static_cast<size_t>(len * inner) * sizeof(float));
    }
    detail::wire(out, {a}, [a, axis, start, len, outer, inner, as](const std::vector<float>& g) {
        if (!a.requires_grad()) return;
        auto& ga = a.impl()->ensure_grad();
        for (int64_t o = 0; o < outer; ++o) {
            float* dst = ga.data() + (o * as + start) * inner;
            const float* src = g.data() + o * len * inner;
            for (int64_t i = 0; i < len * inner; ++i) dst[i] += src[i];
        }
    });
    return out;
}

inline Tensor concat(const std::vector<Tensor>& ts, int axis) {
    if (ts.empty()) throw std::invalid_argument("concat: empty input");
    const int nd = ts[0].ndim();
    if (axis < 0 || axis >= nd) throw std::invalid_argument("concat: bad axis");
    int total = 0;
    for (const auto& t : ts) {
        if (t.ndim() != nd) throw std::invalid_argument("concat: rank mismatch");
        for (int i = 0; i < nd; ++i)
            if (i != axis && t.shape()[static_cast<size_t>(i)] != ts[0].shape()[static_cast<size_t>(i)])
                throw std::invalid_argument("concat: shape mismatch");
        total += t.shape()[static_cast<size_t>(axis)];
    }
    Shape os = ts[0].shape();
    os[static_cast<size_t>(axis)] = total;
    Tensor out(os);
    int64_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= os[static_cast<size_t>(i)];
    for (int i = axis + 1; i < nd; ++i) inner *= os[static_cast<size_t>(i)];
    int offset = 0;
    for (const auto& t : ts) {
        const int len = t.shape()[static_cast<size_t>(axis)];
        for (int64_t o = 0; o < outer; ++o) {
            const float* src = t.data() + o * len * inner;
            float* dst = out.mutable_data() + (o * total + offset) * inner;
            std::memcpy(dst, src, static_cast<size_t>(len * inner) * sizeof(float));
        }
        offset += len;
    }
    detail::wire(out, ts, [ts, axis, total, outer, inner](const std::vector<float>& g) {
        int offset = 0;
        for (const auto& t : ts) {
            const int len = t.shape()[static_cast<size_t>(axis)];
            if (t.requires_grad()) {
                auto& gt = t.impl()->ensure_grad();
                for (int64_t o = 0; o < outer; ++o) {
                    float* dst = gt.data() + o * len * inner;
                    const float* src = g.data() + (o * total + offset) * inner;
                    for (int64_t i = 0; i < len * inner; ++i) dst[i] += src[i];
                }
            }
            offset += len;
        }
    });
    return out;
}

// Mean over one axis, keeping it with size 1.
inline Tensor reduce_mean_axis(const Tensor& a, int axis) {
    const int nd = a.ndim();
    if (axis < 0 || axis >= nd) throw std::invalid_argument("reduce_mean_axis: bad axis");
    const int as = a.shape()[static_cast<size_t>(axis)];
    Shape os = a.shape();
    os[static_cast<size_t>(axis)] = 1;
    Tensor out(os);
    int64_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= a.shape()[static_cast<size_t>(i)];
    for (int i = axis + 1; i < nd; ++i) inner *= a.shape()[static_cast<size_t>(i)];
    const float invn = 1.f / static_cast<float>(as);
    for (int64_t o = 0; o < outer; ++o) {
        for (int64_t i = 0; i < inner; ++i) {
            double acc = 0.0;
            for (int j = 0; j < as; ++j) acc += a.data()[(o * as + j) * inner + i];
            out.mutable_data()[o * inner + i] = static_cast<float>(acc) * invn;
        }
    }
    detail::wire(out, {a}, [a, as, outer, inner, invn](const std::vector<float>& g) {
        if (!a.requires_grad()) return;
        auto& ga = a.impl()->ensure_grad();
        for (int64_t o = 0; o < outer; ++o)
            for (int j = 0; j < as; ++j)
                for (int64_t i = 0; i < inner; ++i)
                    ga[static_cast<size_t>((o * as + j) * inner + i)] += g[static_cast<size_t>(o * inner + i)] * invn;
    });
    return out;
}

// Repeats a size-1 axis n times.
inline Tensor broadcast_axis(const Tensor& a, int axis, int n) {
    const int nd = a.ndim();
    if (axis < 0 || axis >= nd) throw std::invalid_argument("broadcast_axis: bad axis");
    if (a.shape()[static_cast<size_t>(axis)] != 1)
        throw std::invalid_argument("broadcast_axis: axis size must be 1");
    Shape os = a.shape();
    os[static_cast<size_t>(axis)] = n;
    Tensor out(os);
    int64_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= a.shape()[static_cast<size_t>(i)];
    for (int i = axis + 1; i < nd; ++i) inner *= a.shape()[static_cast<size_t>(i)];
    for (int64_t o = 0; o < outer; ++o)
        for (int j = 0; j < n; ++j)
            std::memcpy(out.mutable_data() + (o * n + j) * inner, a.data() + o * inner,
                        static_cast<size_t>(inner) * sizeof(float));
    detail::wire(out, {a}, [a, n, outer, inner](const std::vector<float>& g) {
        if (!a.requires_grad()) return;
        auto& ga = a.impl()->ensure_grad();
        for (int64_t o = 0; o < outer; ++o)
            for (int j = 0; j < n; ++j)
                for (int64_t i = 0; i < inner; ++i)
                    ga[static_cast<size_t>(o * inner + i)] += g[static_cast<size_t>((o * n + j) * inner + i)];
    });
    return out;
}

// ---------------------------------------------------------------------------
// complex helpers over a trailing axis of size 2
// ---------------------------------------------------------------------------

inline void check_complex(const Tensor& a, const char* op) {
    if (a.ndim() < 1 || a.shape().back() != 2)
        throw std::invalid_argument(std::string(op) + ": trailing axis must have size 2");
}

inline Tensor conj_c(const Tensor& a) {
    check_complex(a, "conj_c");
    Tensor out(a.shape());
    const int64_t m = a.numel() / 2;
    for (int64_t i = 0; i < m; ++i) {
        out.mutable_data()[2 * i] = a.data()[2 * i];
        out.mutable_data()[2 * i + 1] = -a.data()[2 * i + 1];
    }
    detail::wire(out, {a}, [a, m](const std::vector<float>& g) {
        if (!a.requires_grad()) return;
        auto& ga = a.impl()->ensure_grad();
        for (int64_t i = 0; i < m; ++i) {
            ga[static_cast<size_t>(2 * i)] += g[static_cast<size_t>(2 * i)];
            ga[static_cast<size_t>(2 * i + 1)] -= g[static_cast<size_t>(2 * i + 1)];
        }
    });
    return out;
}

// Pointwise complex product of two [..,2] tensors.
inline Tensor complex_mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "complex_mul");
    check_complex(a, "complex_mul");
    Tensor out(a.shape());
    const int64_t m = a.numel() / 2;
    for (int64_t i = 0; i < m; ++i) {
        const float ar = a.data()[2 * i], ai = a.data()[2 * i + 1];
        const float br = b.data()[2 * i], bi = b.data()[2 * i + 1];
        out.mutable_data()[2 * i] = ar * br - ai * bi;
        out.mutable_data()[2 * i + 1] = ar * bi + ai * br;
    }
    detail::wire(out, {a, b}, [a, b, m](const std::vector<float>& g) {
        // grad_a = g * conj(b), grad_b = g * conj(a)
        if (a.requires_grad()) {
            auto& ga = a.impl()->ensure_grad();
            for (int64_t i = 0; i < m; ++i) {
                const float gr = g[static_cast<size_t>(2 * i)], gi = g[static_cast<size_t>(2 * i + 1)];
                const float br = b.data()[2 * i], bi = b.data()[2 * i + 1];
                ga[static_cast<size_t>(2 * i)] += gr * br + gi * bi;
                ga[static_cast<size_t>(2 * i + 1)] += -gr * bi + gi * br;
            }
        }
        if (b.requires_grad()) {
            auto& gb = b.impl()->ensure_grad();
            for (int64_t i = 0; i < m; ++i) {
                const float gr = g[static_cast<size_t>(2 * i)], gi = g[static_cast<size_t>(2 * i + 1)];
                const float ar = a.data()[2 * i], ai = a.data()[2 * i + 1];
                gb[static_cast<size_t>(2 * i)] += gr * ar + gi * ai;
                gb[static_cast<size_t>(2 * i + 1)] += -gr * ai + gi * ar;
            }
        }
    });
    return out;
}

}  // namespace radcine
