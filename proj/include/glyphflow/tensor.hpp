// Copyright (C) 2026 GlyphFlow authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iosfwd>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "glyphflow/error.hpp"

namespace glyphflow {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_str(const Shape& shape) {
    std::ostringstream oss;
    oss << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        oss << (i ? "," : "") << shape[i];
    }
    oss << ']';
    return oss.str();
}

/// Dense row-major array of scalars. Values are plain data; copies are deep.
template <typename T = float>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;

    explicit Tensor(Shape shape, T fill = T{0})
        : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {
        check_dims();
    }

    Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
        check_dims();
        GLYPHFLOW_CHECK(data_.size() == shape_numel(shape_), ErrorKind::shape_mismatch, "Tensor",
                        "data length ", data_.size(), " does not match shape ", shape_str(shape_));
    }

    static Tensor scalar(T v) { return Tensor(Shape{1}, std::vector<T>{v}); }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t numel() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<const T> data() const noexcept { return data_; }
    std::span<T> data() noexcept { return data_; }
    const std::vector<T>& vec() const noexcept { return data_; }

    T operator[](std::size_t i) const { return data_[i]; }
    T& operator[](std::size_t i) { return data_[i]; }

    T item() const {
        GLYPHFLOW_CHECK(data_.size() == 1, ErrorKind::shape_mismatch, "Tensor::item",
                        "expected one element, got shape ", shape_str(shape_));
        return data_[0];
    }

    bool requires_grad() const noexcept { return requires_grad_; }
    Tensor& set_requires_grad(bool on) noexcept {
        requires_grad_ = on;
        return *this;
    }

    Tensor reshaped(Shape shape) const {
        GLYPHFLOW_CHECK(shape_numel(shape) == numel(), ErrorKind::shape_mismatch, "reshape",
                        shape_str(shape_), " -> ", shape_str(shape));
        Tensor out = *this;
        out.shape_ = std::move(shape);
        return out;
    }

    template <typename U>
    Tensor<U> cast() const {
        std::vector<U> out(data_.size());
        std::transform(data_.begin(), data_.end(), out.begin(), [](T v) { return static_cast<U>(v); });
        return Tensor<U>(shape_, std::move(out));
    }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
    }

    T max_abs() const {
        T m{0};
        for (T v : data_) m = std::max(m, static_cast<T>(std::abs(v)));
        return m;
    }

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.shape_ == b.shape_ && a.data_ == b.data_;
    }

private:
    void check_dims() const {
        for (std::size_t d : shape_) {
            GLYPHFLOW_CHECK(d > 0, ErrorKind::invalid_argument, "Tensor", "zero dimension in shape ",
                            shape_str(shape_));
        }
    }

    Shape shape_;
    std::vector<T> data_;
    bool requires_grad_ = false;
};

/// Bitwise equality including NaN payloads; what reproducibility checks compare.
template <typename T>
bool bitwise_equal(const Tensor<T>& a, const Tensor<T>& b) {
    return a.shape() == b.shape() &&
           std::memcmp(a.data().data(), b.data().data(), a.numel() * sizeof(T)) == 0;
}

// ---------------------------------------------------------------------------
// GFT1 raw tensor files: "GFT1", u32 ndim, ndim x u32 dims, f32 payload (LE).

namespace gft1 {

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    GLYPHFLOW_CHECK(is.gcount() == 4, ErrorKind::data_error, "gft1", "truncated header");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace detail

inline void write(std::ostream& os, const Tensor<float>& t) {
    os.write("GFT1", 4);
    detail::put_u32(os, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) detail::put_u32(os, static_cast<std::uint32_t>(d));
    for (float v : t.data()) detail::put_u32(os, std::bit_cast<std::uint32_t>(v));
}

inline Tensor<float> read(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    GLYPHFLOW_CHECK(is.gcount() == 4 && std::memcmp(magic, "GFT1", 4) == 0, ErrorKind::data_error,
                    "gft1", "bad magic");
    const std::uint32_t ndim = detail::get_u32(is);
    GLYPHFLOW_CHECK(ndim >= 1 && ndim <= 8, ErrorKind::data_error, "gft1", "bad rank ", ndim);
    Shape shape(ndim);
    for (auto& d : shape) {
        d = detail::get_u32(is);
        GLYPHFLOW_CHECK(d > 0, ErrorKind::data_error, "gft1", "zero dimension");
    }
    std::vector<float> data(shape_numel(shape));
    for (auto& v : data) v = std::bit_cast<float>(detail::get_u32(is));
    return Tensor<float>(std::move(shape), std::move(data));
}

inline void save(const std::filesystem::path& path, const Tensor<float>& t) {
    std::ofstream os(path, std::ios::binary);
    GLYPHFLOW_CHECK(os.good(), ErrorKind::data_error, "gft1", "cannot open ", path.string());
    write(os, t);
}

inline Tensor<float> load(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    GLYPHFLOW_CHECK(is.good(), ErrorKind::data_error, "gft1", "cannot open ", path.string());
    return read(is);
}

}  // namespace gft1

}  // namespace glyphflow
