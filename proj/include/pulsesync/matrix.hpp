#pragma once

#include <cassert>
#include <complex>
#include <cstddef>
#include <vector>

namespace pulsesync {

using cplx = std::complex<double>;

/// Dense row-major matrix, just enough for the small networks handled here.
template <typename T>
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    T& operator()(std::size_t r, std::size_t c) {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }
    const T& operator()(std::size_t r, std::size_t c) const {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }

    const std::vector<T>& data() const noexcept { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using RealMatrix = Matrix<double>;
using ComplexMatrix = Matrix<cplx>;

template <typename T>
Matrix<T> operator*(const Matrix<T>& a, const Matrix<T>& b) {
    assert(a.cols() == b.rows());
    Matrix<T> c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const T aik = a(i, k);
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

ComplexMatrix to_complex(const RealMatrix& m);

double frobenius_norm(const RealMatrix& m);
double frobenius_norm(const ComplexMatrix& m);
/// Induced 1-norm (max column sum).
double one_norm(const ComplexMatrix& m);

/// Inverse by LU with partial pivoting. Throws DefectiveMatrix on an exact
/// zero pivot.
ComplexMatrix inverse(const ComplexMatrix& m);

}  // namespace pulsesync
