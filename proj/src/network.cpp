#include "pulsesync/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "pulsesync/errors.hpp"

namespace pulsesync {

RowSumMismatch::RowSumMismatch(std::size_t worst_row, double deviation)
    : InvalidArgument("row sums differ: row " + std::to_string(worst_row) + " deviates by " +
                      std::to_string(deviation)),
      worst_row_(worst_row),
      deviation_(deviation) {}

double validate_row_sum(const RealMatrix& weights, const NetworkTolerances& tol) {
    const std::size_t n = weights.rows();
    if (n == 0 || weights.cols() != n) throw InvalidArgument("coupling matrix must be square");
    std::vector<double> sums(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (!std::isfinite(weights(i, j)))
                throw InvalidArgument("coupling matrix has non-finite entries");
            sums[i] += weights(i, j);
        }
    const double mean = std::accumulate(sums.begin(), sums.end(), 0.0) / static_cast<double>(n);
    std::size_t worst = 0;
    double deviation = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = std::fabs(sums[i] - mean);
        if (d > deviation) {
            deviation = d;
            worst = i;
        }
    }
    if (deviation > tol.row_sum_rel * std::max(1.0, std::fabs(mean)))
        throw RowSumMismatch(worst, deviation);
    return mean;
}

CouplingMatrix::CouplingMatrix(RealMatrix weights, const NetworkTolerances& tol)
    : weights_(std::move(weights)), row_sum_(validate_row_sum(weights_, tol)) {}

CouplingMatrix make_all_to_all(std::size_t n, double a) {
    if (n < 2) throw InvalidArgument("all-to-all coupling needs n >= 2");
    RealMatrix w(n, n, a);
    for (std::size_t i = 0; i < n; ++i) w(i, i) = 0.0;
    return CouplingMatrix(std::move(w));
}

CouplingMatrix make_ring_laplacian(std::size_t n, double a) {
    if (n < 3) throw InvalidArgument("ring Laplacian needs n >= 3");
    RealMatrix w(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        w(i, i) = -2.0 * a;
        w(i, (i + 1) % n) += a;
        w(i, (i + n - 1) % n) += a;
    }
    return CouplingMatrix(std::move(w));
}

RealMatrix parse_matrix_csv(const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::vector<double> row;
        std::istringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ',')) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(cell, &used);
            } catch (const std::exception&) {
                throw InvalidArgument("matrix CSV: bad number '" + cell + "'");
            }
            if (cell.find_first_not_of(" \t", used) != std::string::npos)
                throw InvalidArgument("matrix CSV: bad number '" + cell + "'");
            row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    const std::size_t n = rows.size();
    if (n == 0) throw InvalidArgument("matrix CSV is empty");
    RealMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != n)
            throw InvalidArgument("matrix CSV: row " + std::to_string(i + 1) + " has " +
                                  std::to_string(rows[i].size()) + " entries, expected " +
                                  std::to_string(n));
        for (std::size_t j = 0; j < n; ++j) m(i, j) = rows[i][j];
    }
    return m;
}

RealMatrix read_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open matrix file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_matrix_csv(buf.str());
}

namespace {

// Householder reduction to upper Hessenberg form, A = Q H Q^H.
void reduce_hessenberg(ComplexMatrix& a, ComplexMatrix& q) {
    const std::size_t n = a.rows();
    std::vector<cplx> v(n);
    for (std::size_t k = 0; k + 2 < n; ++k) {
        double norm = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) norm += std::norm(a(i, k));
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;
        const cplx x0 = a(k + 1, k);
        const cplx phase = std::abs(x0) > 0.0 ? x0 / std::abs(x0) : cplx{1.0};
        const cplx alpha = -phase * norm;
        std::fill(v.begin(), v.end(), cplx{});
        v[k + 1] = x0 - alpha;
        for (std::size_t i = k + 2; i < n; ++i) v[i] = a(i, k);
        double vnorm = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) vnorm += std::norm(v[i]);
        if (vnorm == 0.0) continue;
        const double scale = 2.0 / vnorm;

        // A <- (I - s v v^H) A
        for (std::size_t j = 0; j < n; ++j) {
            cplx dot{};
            for (std::size_t i = k + 1; i < n; ++i) dot += std::conj(v[i]) * a(i, j);
            dot *= scale;
            for (std::size_t i = k + 1; i < n; ++i) a(i, j) -= v[i] * dot;
        }
        // A <- A (I - s v v^H), Q <- Q (I - s v v^H)
        for (std::size_t i = 0; i < n; ++i) {
            cplx dot{};
            for (std::size_t j = k + 1; j < n; ++j) dot += a(i, j) * v[j];
            dot *= scale;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= dot * std::conj(v[j]);
            cplx qdot{};
            for (std::size_t j = k + 1; j < n; ++j) qdot += q(i, j) * v[j];
            qdot *= scale;
            for (std::size_t j = k + 1; j < n; ++j) q(i, j) -= qdot * std::conj(v[j]);
        }
        a(k + 1, k) = alpha;
        for (std::size_t i = k + 2; i < n; ++i) a(i, k) = cplx{};
    }
}

struct Givens {
    double c = 1.0;
    cplx s{};
};

// Rotation with G [x; y] = [r; 0].
Givens make_givens(cplx x, cplx y) {
    const double ax = std::abs(x);
    const double ay = std::abs(y);
    if (ay == 0.0) return {1.0, cplx{}};
    if (ax == 0.0) return {0.0, std::conj(y) / ay};
    const double r = std::hypot(ax, ay);
    return {ax / r, (x / ax) * std::conj(y) / r};
}

// Complex Schur form by single-shift QR on a Hessenberg matrix; H becomes
// upper triangular and Z accumulates the rotations.
void schur_qr(ComplexMatrix& h, ComplexMatrix& z) {
    const std::size_t n = h.rows();
    if (n < 2) return;
    const double eps = std::numeric_limits<double>::epsilon();
    const double hnorm = std::max(frobenius_norm(h), std::numeric_limits<double>::min());
    std::vector<Givens> rot(n);

    std::size_t hi = n - 1;
    int iterations = 0;
    const int max_iterations = 60 * static_cast<int>(n);
    while (hi > 0) {
        std::size_t lo = hi;
        while (lo > 0) {
            double ref = std::abs(h(lo - 1, lo - 1)) + std::abs(h(lo, lo));
            if (ref == 0.0) ref = hnorm;
            if (std::abs(h(lo, lo - 1)) <= eps * ref) {
                h(lo, lo - 1) = cplx{};
                break;
            }
            --lo;
        }
        if (lo == hi) {
            --hi;
            iterations = 0;
            continue;
        }
        if (++iterations > max_iterations)
            throw DefectiveMatrix("QR iteration failed to converge");

        cplx shift;
        if (iterations % 10 == 0) {
            // Exceptional shift to break cycles.
            shift = h(hi, hi) + 0.75 * std::fabs(h(hi, hi - 1).real());
        } else {
            const cplx a = h(hi - 1, hi - 1), b = h(hi - 1, hi);
            const cplx c = h(hi, hi - 1), d = h(hi, hi);
            const cplx t = 0.5 * (a - d);
            cplx disc = std::sqrt(t * t + b * c);
            if ((std::conj(t) * disc).real() < 0.0) disc = -disc;
            const cplx denom = t + disc;
            shift = std::abs(denom) > 0.0 ? d - b * c / denom : d;
        }

        for (std::size_t k = lo; k <= hi; ++k) h(k, k) -= shift;
        for (std::size_t k = lo; k < hi; ++k) {
            const Givens g = make_givens(h(k, k), h(k + 1, k));
            rot[k] = g;
            for (std::size_t j = k; j < n; ++j) {
                const cplx x = h(k, j), y = h(k + 1, j);
                h(k, j) = g.c * x + g.s * y;
                h(k + 1, j) = -std::conj(g.s) * x + g.c * y;
            }
            h(k + 1, k) = cplx{};
        }
        for (std::size_t k = lo; k < hi; ++k) {
            const Givens& g = rot[k];
            const std::size_t last = std::min(k + 1, hi);
            for (std::size_t i = 0; i <= last; ++i) {
                const cplx x = h(i, k), y = h(i, k + 1);
                h(i, k) = x * g.c + y * std::conj(g.s);
                h(i, k + 1) = -x * g.s + y * g.c;
            }
            for (std::size_t i = 0; i < n; ++i) {
                const cplx x = z(i, k), y = z(i, k + 1);
                z(i, k) = x * g.c + y * std::conj(g.s);
                z(i, k + 1) = -x * g.s + y * g.c;
            }
        }
        for (std::size_t k = lo; k <= hi; ++k) h(k, k) += shift;
    }
}

// Eigenvectors of an upper triangular T. Diagonal entries within
// `cluster` of lambda_k are a repeated eigenvalue; the matching components
// are set to zero, which is consistent whenever T is diagonalizable.
ComplexMatrix triangular_eigenvectors(const ComplexMatrix& t, double cluster) {
    const std::size_t n = t.rows();
    ComplexMatrix y(n, n);
    const double tiny = std::numeric_limits<double>::epsilon() * std::max(1.0, frobenius_norm(t));
    for (std::size_t k = 0; k < n; ++k) {
        const cplx lambda = t(k, k);
        y(k, k) = 1.0;
        for (std::size_t ii = k; ii-- > 0;) {
            cplx sum{};
            for (std::size_t j = ii + 1; j <= k; ++j) sum += t(ii, j) * y(j, k);
            cplx denom = t(ii, ii) - lambda;
            if (std::abs(denom) <= cluster) {
                y(ii, k) = cplx{};
                continue;
            }
            if (std::abs(denom) < tiny) denom = tiny;
            y(ii, k) = -sum / denom;
        }
    }
    return y;
}

bool eigen_order(const cplx& a, const cplx& b) {
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
}

}  // namespace

std::vector<cplx> eigenvalues(const RealMatrix& m) {
    if (m.rows() != m.cols()) throw InvalidArgument("eigenvalues: matrix must be square");
    ComplexMatrix h = to_complex(m);
    ComplexMatrix q = ComplexMatrix::identity(m.rows());
    reduce_hessenberg(h, q);
    schur_qr(h, q);
    std::vector<cplx> out(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) out[i] = h(i, i);
    std::sort(out.begin(), out.end(), eigen_order);
    return out;
}

SpectralDecomposition spectral_decompose(const CouplingMatrix& coupling,
                                         const NetworkTolerances& tol) {
    const std::size_t n = coupling.size();
    const ComplexMatrix a = to_complex(coupling.weights());
    const double jnorm = frobenius_norm(coupling.weights());
    ComplexMatrix t = a;
    ComplexMatrix z = ComplexMatrix::identity(n);
    reduce_hessenberg(t, z);
    schur_qr(t, z);

    const ComplexMatrix y = triangular_eigenvectors(t, tol.cluster_rel * std::max(1.0, jnorm));
    ComplexMatrix v = z * y;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return eigen_order(t(i, i), t(j, j)); });

    SpectralDecomposition out;
    out.row_sum = coupling.row_sum();
    out.eigenvalues.resize(n);
    out.right = ComplexMatrix(n, n);
    for (std::size_t c = 0; c < n; ++c) {
        const std::size_t src = order[c];
        out.eigenvalues[c] = t(src, src);
        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) norm += std::norm(v(i, src));
        norm = std::sqrt(norm);
        if (!(norm > 0.0) || !std::isfinite(norm))
            throw DefectiveMatrix("degenerate eigenvector");
        for (std::size_t i = 0; i < n; ++i) out.right(i, c) = v(i, src) / norm;
    }

    // Perron pair: closest to J~, ties to the largest real part (already the
    // sort order). Its right vector is exactly the all-ones vector.
    const double jt = coupling.row_sum();
    const double tie = 1e-12 * std::max(1.0, std::fabs(jt));
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n; ++c) {
        const double d = std::abs(out.eigenvalues[c] - jt);
        if (d < best - tie) {
            best = d;
            out.perron_index = c;
        }
    }
    out.eigenvalues[out.perron_index] = jt;
    for (std::size_t i = 0; i < n; ++i) out.right(i, out.perron_index) = 1.0;

    out.left = inverse(out.right);
    out.condition = one_norm(out.right) * one_norm(out.left);
    if (!std::isfinite(out.condition) || out.condition > tol.max_condition)
        throw DefectiveMatrix("eigenvector matrix is ill-conditioned (cond ~ " +
                              std::to_string(out.condition) + ")");

    // Reconstruction check catches near-defective matrices whose computed
    // eigenvectors are merely close to parallel.
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            cplx s{};
            for (std::size_t k = 0; k < n; ++k)
                s += out.right(i, k) * out.eigenvalues[k] * out.left(k, j);
            err += std::norm(s - a(i, j));
        }
    if (std::sqrt(err) > 1e-8 * std::max(1.0, jnorm))
        throw DefectiveMatrix("eigendecomposition does not reconstruct the coupling matrix");
    return out;
}

std::vector<cplx> SpectralDecomposition::right_vector(std::size_t i) const {
    std::vector<cplx> out(size());
    for (std::size_t r = 0; r < size(); ++r) out[r] = right(r, i);
    return out;
}

std::vector<cplx> SpectralDecomposition::left_vector(std::size_t i) const {
    std::vector<cplx> out(size());
    for (std::size_t c = 0; c < size(); ++c) out[c] = left(i, c);
    return out;
}

cplx SpectralDecomposition::project(std::size_t i, const std::vector<double>& v) const {
    if (v.size() != size()) throw InvalidArgument("projection: size mismatch");
    cplx s{};
    for (std::size_t c = 0; c < size(); ++c) s += left(i, c) * v[c];
    return s;
}

std::vector<ModeStability> classify_stability(const SpectralDecomposition& spec,
                                              const NetworkTolerances& tol) {
    std::vector<ModeStability> out;
    for (std::size_t i = 0; i < spec.size(); ++i) {
        if (i == spec.perron_index) continue;
        const cplx lambda = spec.eigenvalues[i];
        ModeStability m;
        m.index = i;
        m.lambda = lambda;
        m.growth = (lambda * (spec.row_sum - lambda)).real();
        if (std::fabs(m.growth) <= tol.marginal_abs) m.verdict = ModeVerdict::marginal;
        else if (m.growth < 0.0) m.verdict = ModeVerdict::synchronizing;
        else m.verdict = ModeVerdict::non_synchronizing;
        out.push_back(m);
    }
    return out;
}

std::string to_string(ModeVerdict verdict) {
    switch (verdict) {
        case ModeVerdict::synchronizing: return "synchronizing";
        case ModeVerdict::marginal: return "marginal";
        case ModeVerdict::non_synchronizing: return "non-synchronizing";
    }
    return "unknown";
}

}  // namespace pulsesync
