// Copyright (C) 2026 GlyphFlow authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace glyphflow {

enum class ErrorKind {
    shape_mismatch,
    invalid_argument,
    data_error,
    numeric_error,
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::shape_mismatch: return "shape mismatch";
        case ErrorKind::invalid_argument: return "invalid argument";
        case ErrorKind::data_error: return "data error";
        case ErrorKind::numeric_error: return "numeric error";
    }
    return "error";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string where, const std::string& what)
        : std::runtime_error(where + ": " + what), kind_(kind), where_(std::move(where)) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& where() const noexcept { return where_; }

private:
    ErrorKind kind_;
    std::string where_;
};

namespace detail {

template <typename... Args>
std::string concat(Args&&... args) {
    std::ostringstream oss;
    (oss << ... << std::forward<Args>(args));
    return oss.str();
}

}  // namespace detail

#define GLYPHFLOW_THROW(kind, where, ...) \
    throw ::glyphflow::Error((kind), (where), ::glyphflow::detail::concat(__VA_ARGS__))

#define GLYPHFLOW_CHECK(cond, kind, where, ...)         \
    do {                                                \
        if (!(cond)) {                                  \
            GLYPHFLOW_THROW(kind, where, __VA_ARGS__);  \
        }                                               \
    } while (false)

}  // namespace glyphflow
