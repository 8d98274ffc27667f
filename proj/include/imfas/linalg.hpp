#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

namespace imfas {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// View over the raw storage of one parameter/gradient tensor. Collections of
// spans let the optimizer and the finite-difference oracle walk heterogeneous
// parameter structs in one fixed order without copying.
struct Span {
    double* data = nullptr;
    std::ptrdiff_t size = 0;
};

struct ConstSpan {
    const double* data = nullptr;
    std::ptrdiff_t size = 0;
};

inline std::ptrdiff_t total_size(const std::vector<Span>& spans) {
    std::ptrdiff_t n = 0;
    for (const auto& s : spans) n += s.size;
    return n;
}

inline std::ptrdiff_t total_size(const std::vector<ConstSpan>& spans) {
    std::ptrdiff_t n = 0;
    for (const auto& s : spans) n += s.size;
    return n;
}

inline Vec flatten(const std::vector<ConstSpan>& spans) {
    Vec out(total_size(spans));
    std::ptrdiff_t at = 0;
    for (const auto& s : spans) {
        out.segment(at, s.size) = Eigen::Map<const Vec>(s.data, s.size);
        at += s.size;
    }
    return out;
}

inline void unflatten(const Vec& flat, const std::vector<Span>& spans) {
    std::ptrdiff_t at = 0;
    for (const auto& s : spans) {
        Eigen::Map<Vec>(s.data, s.size) = flat.segment(at, s.size);
        at += s.size;
    }
}

}  // namespace imfas
