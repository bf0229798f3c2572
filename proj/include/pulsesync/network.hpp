#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pulsesync/matrix.hpp"

namespace pulsesync {

/// Tolerances of the network module; exposed so experiment configs can
/// override them.
struct NetworkTolerances {
    /// Row sums must agree within row_sum_rel * max(1, |J~|).
    double row_sum_rel = 1e-10;
    /// Upper bound on the 1-norm condition number of the eigenvector matrix.
    double max_condition = 1e12;
    /// Diagonal Schur entries closer than this (relative to ||J||) are
    /// treated as one repeated eigenvalue during back substitution.
    double cluster_rel = 1e-10;
    /// |Re| at or below this is reported as marginal.
    double marginal_abs = 1e-12;
};

/// Square coupling matrix with a common row sum J~.
class CouplingMatrix {
public:
    /// Validates the row-sum constraint; throws RowSumMismatch.
    explicit CouplingMatrix(RealMatrix weights, const NetworkTolerances& tol = {});

    std::size_t size() const noexcept { return weights_.rows(); }
    const RealMatrix& weights() const noexcept { return weights_; }
    double row_sum() const noexcept { return row_sum_; }
    double operator()(std::size_t i, std::size_t j) const { return weights_(i, j); }

private:
    RealMatrix weights_;
    double row_sum_;
};

CouplingMatrix make_all_to_all(std::size_t n, double a);
CouplingMatrix make_ring_laplacian(std::size_t n, double a);

/// Returns the common row sum or throws RowSumMismatch with the worst row.
double validate_row_sum(const RealMatrix& weights, const NetworkTolerances& tol = {});

/// Parses n lines of n comma-separated decimals.
RealMatrix parse_matrix_csv(const std::string& text);
RealMatrix read_matrix_csv(const std::string& path);

struct SpectralDecomposition {
    std::vector<cplx> eigenvalues;
    /// Column i is the right eigenvector |i>.
    ComplexMatrix right;
    /// Row i is the left eigenvector <i|, normalized so that <i|j> = delta_ij.
    ComplexMatrix left;
    std::size_t perron_index = 0;
    double row_sum = 0.0;
    double condition = 0.0;

    std::size_t size() const noexcept { return eigenvalues.size(); }
    std::vector<cplx> right_vector(std::size_t i) const;
    std::vector<cplx> left_vector(std::size_t i) const;
    /// <i|v>
    cplx project(std::size_t i, const std::vector<double>& v) const;
};

/// Full complex eigensystem by Householder-Hessenberg reduction and shifted
/// complex QR. Left vectors are the rows of the inverse of the right-vector
/// matrix. The Perron right vector is scaled to the all-ones vector.
/// Throws DefectiveMatrix when the eigenvector matrix is too ill-conditioned.
SpectralDecomposition spectral_decompose(const CouplingMatrix& coupling,
                                         const NetworkTolerances& tol = {});

/// Eigenvalues only (complex Schur form diagonal).
std::vector<cplx> eigenvalues(const RealMatrix& m);

enum class ModeVerdict { synchronizing, marginal, non_synchronizing };

struct ModeStability {
    std::size_t index = 0;
    cplx lambda;
    /// Re[lambda (J~ - lambda)]
    double growth = 0.0;
    ModeVerdict verdict = ModeVerdict::marginal;
};

/// One entry per non-Perron mode, in eigenvalue order.
std::vector<ModeStability> classify_stability(const SpectralDecomposition& spec,
                                              const NetworkTolerances& tol = {});

std::string to_string(ModeVerdict verdict);

}  // namespace pulsesync
