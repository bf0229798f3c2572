#include "pulsesync/matrix.hpp"

#include <cmath>
#include <utility>

#include "pulsesync/errors.hpp"

namespace pulsesync {

ComplexMatrix to_complex(const RealMatrix& m) {
    ComplexMatrix c(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) c(i, j) = m(i, j);
    return c;
}

double frobenius_norm(const RealMatrix& m) {
    double s = 0.0;
    for (double v : m.data()) s += v * v;
    return std::sqrt(s);
}

double frobenius_norm(const ComplexMatrix& m) {
    double s = 0.0;
    for (const cplx& v : m.data()) s += std::norm(v);
    return std::sqrt(s);
}

double one_norm(const ComplexMatrix& m) {
    double best = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m.rows(); ++i) s += std::abs(m(i, j));
        best = std::max(best, s);
    }
    return best;
}

ComplexMatrix inverse(const ComplexMatrix& m) {
    const std::size_t n = m.rows();
    ComplexMatrix a = m;
    ComplexMatrix inv = ComplexMatrix::identity(n);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
        if (a(pivot, col) == cplx{}) throw DefectiveMatrix("singular eigenvector matrix");
        if (pivot != col)
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(a(pivot, j), a(col, j));
                std::swap(inv(pivot, j), inv(col, j));
            }
        const cplx d = a(col, col);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const cplx factor = a(r, col) / d;
            if (factor == cplx{}) continue;
            for (std::size_t j = 0; j < n; ++j) {
                a(r, j) -= factor * a(col, j);
                inv(r, j) -= factor * inv(col, j);
            }
        }
    }
    for (std::size_t r = 0; r < n; ++r) {
        const cplx d = a(r, r);
        for (std::size_t j = 0; j < n; ++j) inv(r, j) /= d;
    }
    return inv;
}

}  // namespace pulsesync
