#pragma once

#include <functional>

namespace pulsesync {

struct SimpsonOptions {
    double rel_tol = 1e-10;
    int initial_panels = 16;
    int max_doublings = 24;
    /// Doublings performed before the stopping test is consulted. Narrow
    /// integrands can otherwise look converged on a coarse grid.
    int min_doublings = 2;
};

struct SimpsonResult {
    double value = 0.0;
    int panels = 0;
    int doublings = 0;
};

/// Composite Simpson with panel doubling; every doubling reuses all previous
/// abscissae. Stops once two successive estimates differ by less than
/// rel_tol relative. Throws QuadratureError after max_doublings.
SimpsonResult integrate_simpson(const std::function<double(double)>& f, double a, double b,
                                const SimpsonOptions& options = {});

/// Plain composite Simpson on a fixed number of (even) panels.
double simpson_fixed(const std::function<double(double)>& f, double a, double b, int panels);

}  // namespace pulsesync
