// Copyright (C) 2026 GlyphFlow authors
// SPDX-License-Identifier: Apache-2.0

// Reverse-mode differentiation over a linear tape of primitive ops.
//
// A Tape owns every intermediate value created during one forward pass. Ops
// append a node holding the result and a closure that pushes the node's
// gradient into its inputs. Because a node's inputs are always recorded
// before it, walking the tape backwards is a valid topological order.

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <initializer_list>
#include <numbers>
#include <unordered_map>
#include <vector>

#include "glyphflow/tensor.hpp"

namespace glyphflow {

template <typename T>
class Tape;

template <typename T>
class Var {
public:
    Var() = default;
    Var(Tape<T>* tape, std::size_t id) : tape_(tape), id_(id) {}

    const Tensor<T>& value() const { return tape_->value(id_); }
    const Shape& shape() const { return value().shape(); }
    std::size_t id() const noexcept { return id_; }
    Tape<T>* tape() const noexcept { return tape_; }
    bool valid() const noexcept { return tape_ != nullptr; }

private:
    Tape<T>* tape_ = nullptr;
    std::size_t id_ = 0;
};

template <typename T>
class GradientMap {
public:
    bool contains(const Var<T>& v) const { return grads_.count(v.id()) != 0; }
    const Tensor<T>& operator[](const Var<T>& v) const { return at(v.id()); }
    const Tensor<T>& at(std::size_t id) const {
        auto it = grads_.find(id);
        GLYPHFLOW_CHECK(it != grads_.end(), ErrorKind::invalid_argument, "GradientMap",
                        "no gradient recorded for node ", id);
        return it->second;
    }
    void emplace(std::size_t id, Tensor<T> g) { grads_.insert_or_assign(id, std::move(g)); }
    std::size_t size() const { return grads_.size(); }

private:
    std::unordered_map<std::size_t, Tensor<T>> grads_;
};

template <typename T>
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, const Tensor<T>& out_grad)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var<T> leaf(Tensor<T> value, bool requires_grad = true) {
        nodes_.push_back(Node{"leaf", std::move(value), {}, {}, requires_grad, true});
        return Var<T>(this, nodes_.size() - 1);
    }

    Var<T> constant(Tensor<T> value) { return leaf(std::move(value), false); }

    /// Appends an op result. `fn` runs during backward only if some input
    /// needs a gradient.
    Var<T> record(const char* op, Tensor<T> value, std::initializer_list<Var<T>> inputs, BackwardFn fn) {
        return record(op, std::move(value), std::vector<Var<T>>(inputs), std::move(fn));
    }

    Var<T> record(const char* op, Tensor<T> value, const std::vector<Var<T>>& inputs, BackwardFn fn) {
        GLYPHFLOW_CHECK(!consumed_, ErrorKind::invalid_argument, op, "tape already consumed by backward");
        bool needs = false;
        std::vector<std::size_t> ids;
        ids.reserve(inputs.size());
        for (const auto& in : inputs) {
            GLYPHFLOW_CHECK(in.tape() == this, ErrorKind::invalid_argument, op, "input from a different tape");
            ids.push_back(in.id());
            needs = needs || nodes_[in.id()].needs_grad;
        }
        nodes_.push_back(Node{op, std::move(value), std::move(ids), needs ? std::move(fn) : BackwardFn{}, needs,
                              false});
        return Var<T>(this, nodes_.size() - 1);
    }

    const Tensor<T>& value(std::size_t id) const { return nodes_.at(id).value; }
    bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
    const char* op_name(std::size_t id) const { return nodes_[id].op; }
    const std::vector<std::size_t>& inputs(std::size_t id) const { return nodes_[id].inputs; }
    std::size_t size() const noexcept { return nodes_.size(); }
    bool consumed() const noexcept { return consumed_; }

    /// Gradient accumulator of node `id`, allocated on first touch.
    Tensor<T>& grad(std::size_t id) {
        Node& n = nodes_[id];
        if (n.grad.empty()) n.grad = Tensor<T>(n.value.shape());
        return n.grad;
    }

    /// Runs reverse accumulation from a scalar loss and returns gradients for
    /// every leaf that requires one. The tape cannot be reused afterwards.
    GradientMap<T> backward(const Var<T>& loss) {
        GLYPHFLOW_CHECK(!consumed_, ErrorKind::invalid_argument, "backward", "tape already consumed");
        GLYPHFLOW_CHECK(loss.tape() == this && loss.id() < nodes_.size(), ErrorKind::invalid_argument,
                        "backward", "loss is not on this tape");
        GLYPHFLOW_CHECK(loss.value().numel() == 1, ErrorKind::shape_mismatch, "backward",
                        "loss must be scalar, got ", shape_str(loss.shape()));
        consumed_ = true;
        grad(loss.id())[0] = T{1};
        for (std::size_t i = loss.id() + 1; i-- > 0;) {
            Node& n = nodes_[i];
            if (n.grad.empty() || !n.backward) continue;
            n.backward(*this, n.grad);
        }
        GradientMap<T> out;
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            Node& n = nodes_[i];
            if (n.is_leaf && n.needs_grad) {
                out.emplace(i, n.grad.empty() ? Tensor<T>(n.value.shape()) : std::move(n.grad));
            }
        }
        return out;
    }

private:
    struct Node {
        const char* op;
        Tensor<T> value;
        std::vector<std::size_t> inputs;
        BackwardFn backward;
        bool needs_grad;
        bool is_leaf;
        Tensor<T> grad{};
    };

    std::vector<Node> nodes_;
    bool consumed_ = false;
};

// ---------------------------------------------------------------------------
// Primitive ops

namespace ops {

namespace detail {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using CMapMat = Eigen::Map<const RowMat<T>>;

inline void require(bool ok, const char* op, const std::string& msg) {
    if (!ok) throw Error(ErrorKind::shape_mismatch, op, msg);
}

/// True when `b` broadcasts against `a` as a trailing suffix (e.g. [n] onto [m,n]).
inline bool is_suffix(const Shape& a, const Shape& b) {
    if (b.size() > a.size()) return false;
    return std::equal(b.rbegin(), b.rend(), a.rbegin());
}

template <typename T>
void accumulate(Tape<T>& tape, std::size_t id, std::span<const T> g) {
    if (!tape.needs_grad(id)) return;
    auto dst = tape.grad(id).data();
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

}  // namespace detail

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    detail::require(sa.size() == 2 && sb.size() == 2 && sa[1] == sb[0], "matmul",
                    shape_str(sa) + " x " + shape_str(sb));
    const auto m = static_cast<Eigen::Index>(sa[0]);
    const auto k = static_cast<Eigen::Index>(sa[1]);
    const auto n = static_cast<Eigen::Index>(sb[1]);
    Tensor<T> out(Shape{sa[0], sb[1]});
    detail::MapMat<T>(out.data().data(), m, n).noalias() =
        detail::CMapMat<T>(a.value().data().data(), m, k) * detail::CMapMat<T>(b.value().data().data(), k, n);
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape()->record("matmul", std::move(out), {a, b}, [ia, ib, m, k, n](Tape<T>& tape, const Tensor<T>& g) {
        detail::CMapMat<T> G(g.data().data(), m, n);
        if (tape.needs_grad(ia)) {
            detail::MapMat<T>(tape.grad(ia).data().data(), m, k).noalias() +=
                G * detail::CMapMat<T>(tape.value(ib).data().data(), k, n).transpose();
        }
        if (tape.needs_grad(ib)) {
            detail::MapMat<T>(tape.grad(ib).data().data(), k, n).noalias() +=
                detail::CMapMat<T>(tape.value(ia).data().data(), m, k).transpose() * G;
        }
    });
}

namespace detail {

template <typename T>
Var<T> add_sub(const Var<T>& a, const Var<T>& b, T sign, const char* op) {
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    require(is_suffix(sa, sb), op, shape_str(sa) + " vs " + shape_str(sb));
    Tensor<T> out = a.value();
    auto o = out.data();
    auto bv = b.value().data();
    const std::size_t inner = bv.size();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += sign * bv[i % inner];
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape()->record(op, std::move(out), {a, b}, [ia, ib, inner, sign](Tape<T>& tape, const Tensor<T>& g) {
        accumulate<T>(tape, ia, g.data());
        if (tape.needs_grad(ib)) {
            auto db = tape.grad(ib).data();
            auto gd = g.data();
            for (std::size_t i = 0; i < gd.size(); ++i) db[i % inner] += sign * gd[i];
        }
    });
}

}  // namespace detail

/// a + b, where b may be a trailing-suffix broadcast of a (bias add).
template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
    return detail::add_sub(a, b, T{1}, "add");
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
    return detail::add_sub(a, b, T{-1}, "sub");
}

template <typename T>
Var<T> scale(const Var<T>& a, T s) {
    Tensor<T> out = a.value();
    for (auto& v : out.data()) v *= s;
    const std::size_t ia = a.id();
    return a.tape()->record("scale", std::move(out), {a}, [ia, s](Tape<T>& tape, const Tensor<T>& g) {
        auto da = tape.grad(ia).data();
        auto gd = g.data();
        for (std::size_t i = 0; i < gd.size(); ++i) da[i] += s * gd[i];
    });
}

/// Elementwise product; b may broadcast as a trailing suffix of a.
template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    detail::require(detail::is_suffix(sa, sb), "mul", shape_str(sa) + " vs " + shape_str(sb));
    Tensor<T> out = a.value();
    auto o = out.data();
    auto bv = b.value().data();
    const std::size_t inner = bv.size();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bv[i % inner];
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape()->record("mul", std::move(out), {a, b}, [ia, ib, inner](Tape<T>& tape, const Tensor<T>& g) {
        auto gd = g.data();
        if (tape.needs_grad(ia)) {
            auto da = tape.grad(ia).data();
            auto bv = tape.value(ib).data();
            for (std::size_t i = 0; i < gd.size(); ++i) da[i] += gd[i] * bv[i % inner];
        }
        if (tape.needs_grad(ib)) {
            auto db = tape.grad(ib).data();
            auto av = tape.value(ia).data();
            for (std::size_t i = 0; i < gd.size(); ++i) db[i % inner] += gd[i] * av[i];
        }
    });
}

template <typename T>
Var<T> transpose(const Var<T>& a) {
    const Shape& sa = a.shape();
    detail::require(sa.size() == 2, "transpose", "expected rank 2, got " + shape_str(sa));
    const std::size_t r = sa[0], c = sa[1];
    Tensor<T> out(Shape{c, r});
    auto av = a.value().data();
    auto o = out.data();
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) o[j * r + i] = av[i * c + j];
    const std::size_t ia = a.id();
    return a.tape()->record("transpose", std::move(out), {a}, [ia, r, c](Tape<T>& tape, const Tensor<T>& g) {
        auto da = tape.grad(ia).data();
        auto gd = g.data();
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) da[i * c + j] += gd[j * r + i];
    });
}

template <typename T>
Var<T> reshape(const Var<T>& a, Shape shape) {
    Tensor<T> out = a.value().reshaped(std::move(shape));
    const std::size_t ia = a.id();
    return a.tape()->record("reshape", std::move(out), {a},
                            [ia](Tape<T>& tape, const Tensor<T>& g) { detail::accumulate<T>(tape, ia, g.data()); });
}

template <typename T>
Var<T> concat(const std::vector<Var<T>>& parts, std::size_t axis) {
    detail::require(!parts.empty(), "concat", "no inputs");
    const Shape& s0 = parts[0].shape();
    detail::require(axis < s0.size(), "concat", "axis out of range for " + shape_str(s0));
    Shape out_shape = s0;
    out_shape[axis] = 0;
    for (const auto& p : parts) {
        const Shape& s = p.shape();
        bool ok = s.size() == s0.size();
        for (std::size_t d = 0; ok && d < s.size(); ++d) ok = d == axis || s[d] == s0[d];
        detail::require(ok, "concat", shape_str(s0) + " vs " + shape_str(s) + " on axis " + std::to_string(axis));
        out_shape[axis] += s[axis];
    }
    std::size_t outer = 1, inner = 1;
    for (std::size_t d = 0; d < axis; ++d) outer *= s0[d];
    for (std::size_t d = axis + 1; d < s0.size(); ++d) inner *= s0[d];
    const std::size_t row = out_shape[axis] * inner;
    Tensor<T> out(out_shape);
    std::vector<std::size_t> ids, widths, offsets;
    std::size_t off = 0;
    for (const auto& p : parts) {
        const std::size_t w = p.shape()[axis] * inner;
        auto src = p.value().data();
        auto dst = out.data();
        for (std::size_t o = 0; o < outer; ++o) std::copy_n(src.data() + o * w, w, dst.data() + o * row + off);
        ids.push_back(p.id());
        widths.push_back(w);
        offsets.push_back(off);
        off += w;
    }
    return parts[0].tape()->record(
        "concat", std::move(out), parts, [ids, widths, offsets, outer, row](Tape<T>& tape, const Tensor<T>& g) {
            auto gd = g.data();
            for (std::size_t k = 0; k < ids.size(); ++k) {
                if (!tape.needs_grad(ids[k])) continue;
                auto dst = tape.grad(ids[k]).data();
                const std::size_t w = widths[k];
                for (std::size_t o = 0; o < outer; ++o)
                    for (std::size_t j = 0; j < w; ++j) dst[o * w + j] += gd[o * row + offsets[k] + j];
            }
        });
}

/// Splits `a` along `axis` into consecutive pieces of the given sizes.
template <typename T>
std::vector<Var<T>> split(const Var<T>& a, std::size_t axis, const std::vector<std::size_t>& sizes) {
    const Shape sa = a.shape();  // recording below may reallocate the node storage
    detail::require(axis < sa.size(), "split", "axis out of range for " + shape_str(sa));
    const std::size_t total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
    detail::require(total == sa[axis], "split", "sizes do not sum to dim of " + shape_str(sa));
    std::size_t outer = 1, inner = 1;
    for (std::size_t d = 0; d < axis; ++d) outer *= sa[d];
    for (std::size_t d = axis + 1; d < sa.size(); ++d) inner *= sa[d];
    const std::size_t row = sa[axis] * inner;
    std::vector<Var<T>> outs;
    std::size_t off = 0;
    const std::size_t ia = a.id();
    for (std::size_t sz : sizes) {
        detail::require(sz > 0, "split", "zero-sized piece");
        Shape s = sa;
        s[axis] = sz;
        const std::size_t w = sz * inner;
        Tensor<T> out(s);
        auto src = a.value().data();
        auto dst = out.data();
        for (std::size_t o = 0; o < outer; ++o) std::copy_n(src.data() + o * row + off, w, dst.data() + o * w);
        outs.push_back(a.tape()->record("split", std::move(out), {a}, [ia, outer, row, off, w](Tape<T>& tape, const Tensor<T>& g) {
            auto da = tape.grad(ia).data();
            auto gd = g.data();
            for (std::size_t o = 0; o < outer; ++o)
                for (std::size_t j = 0; j < w; ++j) da[o * row + off + j] += gd[o * w + j];
        }));
        off += w;
    }
    return outs;
}

/// Softmax over the last axis.
template <typename T>
Var<T> softmax(const Var<T>& a) {
    const Shape& sa = a.shape();
    const std::size_t n = sa.back();
    const std::size_t rows = a.value().numel() / n;
    Tensor<T> out(sa);
    auto av = a.value().data();
    auto o = out.data();
    for (std::size_t r = 0; r < rows; ++r) {
        const T* x = av.data() + r * n;
        T* y = o.data() + r * n;
        T mx = *std::max_element(x, x + n);
        T s{0};
        for (std::size_t j = 0; j < n; ++j) s += (y[j] = std::exp(x[j] - mx));
        const T inv = T{1} / s;
        for (std::size_t j = 0; j < n; ++j) y[j] *= inv;
    }
    const std::size_t ia = a.id();
    const std::size_t self = a.tape()->size();
    return a.tape()->record("softmax", std::move(out), {a}, [ia, self, n, rows](Tape<T>& tape, const Tensor<T>& g) {
        auto y = tape.value(self).data();
        auto gd = g.data();
        auto da = tape.grad(ia).data();
        for (std::size_t r = 0; r < rows; ++r) {
            T dot{0};
            for (std::size_t j = 0; j < n; ++j) dot += gd[r * n + j] * y[r * n + j];
            for (std::size_t j = 0; j < n; ++j) da[r * n + j] += y[r * n + j] * (gd[r * n + j] - dot);
        }
    });
}

/// Layer normalization over the last axis, no affine terms, population variance.
template <typename T>
Var<T> layer_norm(const Var<T>& a, T eps = T(1e-6)) {
    GLYPHFLOW_CHECK(eps >= T{0}, ErrorKind::invalid_argument, "layer_norm", "eps must be non-negative");
    const Shape& sa = a.shape();
    const std::size_t n = sa.back();
    const std::size_t rows = a.value().numel() / n;
    Tensor<T> out(sa);
    std::vector<T> inv_std(rows);
    auto av = a.value().data();
    auto o = out.data();
    for (std::size_t r = 0; r < rows; ++r) {
        const T* x = av.data() + r * n;
        T mu{0};
        for (std::size_t j = 0; j < n; ++j) mu += x[j];
        mu /= static_cast<T>(n);
        T var{0};
        for (std::size_t j = 0; j < n; ++j) var += (x[j] - mu) * (x[j] - mu);
        var /= static_cast<T>(n);
        const T is = T{1} / std::sqrt(var + eps);
        inv_std[r] = is;
        for (std::size_t j = 0; j < n; ++j) o[r * n + j] = (x[j] - mu) * is;
    }
    const std::size_t ia = a.id();
    const std::size_t self = a.tape()->size();
    return a.tape()->record("layer_norm", std::move(out), {a},
                            [ia, self, n, rows, inv_std = std::move(inv_std)](Tape<T>& tape, const Tensor<T>& g) {
                                auto y = tape.value(self).data();
                                auto gd = g.data();
                                auto da = tape.grad(ia).data();
                                const T inv_n = T{1} / static_cast<T>(n);
                                for (std::size_t r = 0; r < rows; ++r) {
                                    T mg{0}, mgy{0};
                                    for (std::size_t j = 0; j < n; ++j) {
                                        mg += gd[r * n + j];
                                        mgy += gd[r * n + j] * y[r * n + j];
                                    }
                                    mg *= inv_n;
                                    mgy *= inv_n;
                                    for (std::size_t j = 0; j < n; ++j)
                                        da[r * n + j] += inv_std[r] * (gd[r * n + j] - mg - y[r * n + j] * mgy);
                                }
                            });
}

/// Exact (erf) GELU.
template <typename T>
Var<T> gelu(const Var<T>& a) {
    Tensor<T> out = a.value();
    for (auto& v : out.data()) v = T(0.5) * v * (T{1} + std::erf(v / std::numbers::sqrt2_v<T>));
    const std::size_t ia = a.id();
    return a.tape()->record("gelu", std::move(out), {a}, [ia](Tape<T>& tape, const Tensor<T>& g) {
        auto x = tape.value(ia).data();
        auto gd = g.data();
        auto da = tape.grad(ia).data();
        const T c = std::numbers::inv_sqrtpi_v<T> / std::numbers::sqrt2_v<T>;
        for (std::size_t i = 0; i < gd.size(); ++i) {
            const T cdf = T(0.5) * (T{1} + std::erf(x[i] / std::numbers::sqrt2_v<T>));
            const T pdf = c * std::exp(T(-0.5) * x[i] * x[i]);
            da[i] += gd[i] * (cdf + x[i] * pdf);
        }
    });
}

namespace detail {

template <typename T>
T wide_sum(std::span<const T> v) {
    // Long reductions accumulate in double.
    double s = 0.0;
    for (T x : v) s += static_cast<double>(x);
    return static_cast<T>(s);
}

}  // namespace detail

template <typename T>
Var<T> sum(const Var<T>& a) {
    Tensor<T> out = Tensor<T>::scalar(detail::wide_sum<T>(a.value().data()));
    const std::size_t ia = a.id();
    return a.tape()->record("sum", std::move(out), {a}, [ia](Tape<T>& tape, const Tensor<T>& g) {
        for (auto& v : tape.grad(ia).data()) v += g[0];
    });
}

template <typename T>
Var<T> mean(const Var<T>& a) {
    const T n = static_cast<T>(a.value().numel());
    Tensor<T> out = Tensor<T>::scalar(static_cast<T>(static_cast<double>(detail::wide_sum<T>(a.value().data())) / n));
    const std::size_t ia = a.id();
    return a.tape()->record("mean", std::move(out), {a}, [ia, n](Tape<T>& tape, const Tensor<T>& g) {
        const T s = g[0] / n;
        for (auto& v : tape.grad(ia).data()) v += s;
    });
}

/// Mean squared error between same-shaped tensors: mean((a - b)^2).
template <typename T>
Var<T> squared_error(const Var<T>& a, const Var<T>& b) {
    detail::require(a.shape() == b.shape(), "squared_error", shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    auto av = a.value().data();
    auto bv = b.value().data();
    double s = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) {
        const double d = static_cast<double>(av[i]) - static_cast<double>(bv[i]);
        s += d * d;
    }
    const T n = static_cast<T>(av.size());
    Tensor<T> out = Tensor<T>::scalar(static_cast<T>(s / static_cast<double>(n)));
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape()->record("squared_error", std::move(out), {a, b}, [ia, ib, n](Tape<T>& tape, const Tensor<T>& g) {
        auto av = tape.value(ia).data();
        auto bv = tape.value(ib).data();
        const T c = T{2} * g[0] / n;
        if (tape.needs_grad(ia)) {
            auto da = tape.grad(ia).data();
            for (std::size_t i = 0; i < av.size(); ++i) da[i] += c * (av[i] - bv[i]);
        }
        if (tape.needs_grad(ib)) {
            auto db = tape.grad(ib).data();
            for (std::size_t i = 0; i < av.size(); ++i) db[i] -= c * (av[i] - bv[i]);
        }
    });
}

}  // namespace ops

// ---------------------------------------------------------------------------
// Finite differences

/// Central-difference gradient of a scalar function at `x`.
template <typename T, typename F>
Tensor<T> finite_diff_grad(F&& f, const Tensor<T>& x, T h) {
    GLYPHFLOW_CHECK(h > T{0}, ErrorKind::invalid_argument, "finite_diff_grad", "step must be positive");
    Tensor<T> probe = x;
    Tensor<T> out(x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) {
        const T orig = probe[i];
        probe[i] = orig + h;
        const double fp = static_cast<double>(f(static_cast<const Tensor<T>&>(probe)));
        probe[i] = orig - h;
        const double fm = static_cast<double>(f(static_cast<const Tensor<T>&>(probe)));
        probe[i] = orig;
        GLYPHFLOW_CHECK(std::isfinite(fp) && std::isfinite(fm), ErrorKind::numeric_error, "finite_diff_grad",
                        "non-finite function value at element ", i);
        out[i] = static_cast<T>((fp - fm) / (2.0 * static_cast<double>(h)));
    }
    return out;
}

/// ||a - b|| / max(||a||, ||b||, floor): the comparison used for gradient checks.
template <typename T>
double relative_error(const Tensor<T>& a, const Tensor<T>& b, double floor = 1e-12) {
    GLYPHFLOW_CHECK(a.shape() == b.shape(), ErrorKind::shape_mismatch, "relative_error",
                    shape_str(a.shape()), " vs ", shape_str(b.shape()));
    double d = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.numel(); ++i) {
        const double x = a[i], y = b[i];
        d += (x - y) * (x - y);
        na += x * x;
        nb += y * y;
    }
    return std::sqrt(d) / std::max({std::sqrt(na), std::sqrt(nb), floor});
}

}  // namespace glyphflow
