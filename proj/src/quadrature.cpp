#include "pulsesync/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pulsesync/errors.hpp"

namespace pulsesync {

SimpsonResult integrate_simpson(const std::function<double(double)>& f, double a, double b,
                                const SimpsonOptions& options) {
    if (a == b) return {0.0, 0, 0};
    // Intervals at the rounding level of the endpoints cannot be refined.
    if (std::fabs(b - a) <= 64.0 * std::numeric_limits<double>::epsilon() *
                                 std::max(std::fabs(a), std::fabs(b)))
        return {0.5 * (f(a) + f(b)) * (b - a), 1, 0};
    int panels = options.initial_panels + (options.initial_panels % 2);
    if (panels < 2) panels = 2;

    // Simpson = h/3 (ends + 4 odd + 2 even); on doubling the old odd and even
    // nodes all become even nodes.
    double h = (b - a) / panels;
    const double ends = f(a) + f(b);
    double even = 0.0;
    double odd = 0.0;
    for (int k = 1; k < panels; ++k) {
        const double v = f(a + k * h);
        if (k % 2) odd += v;
        else even += v;
    }
    double estimate = h / 3.0 * (ends + 4.0 * odd + 2.0 * even);

    for (int d = 1; d <= options.max_doublings; ++d) {
        even += odd;
        odd = 0.0;
        panels *= 2;
        h *= 0.5;
        for (int k = 1; k < panels; k += 2) odd += f(a + k * h);
        const double next = h / 3.0 * (ends + 4.0 * odd + 2.0 * even);
        if (!std::isfinite(next)) throw QuadratureError("Simpson quadrature: non-finite integrand");
        const double change = std::fabs(next - estimate);
        estimate = next;
        if (d >= options.min_doublings &&
            (change <= options.rel_tol * std::fabs(next) || (change == 0.0 && next == 0.0)))
            return {estimate, panels, d};
    }
    throw QuadratureError("Simpson quadrature did not converge after " +
                          std::to_string(options.max_doublings) + " doublings");
}

double simpson_fixed(const std::function<double(double)>& f, double a, double b, int panels) {
    if (panels < 2) panels = 2;
    if (panels % 2) ++panels;
    const double h = (b - a) / panels;
    double sum = f(a) + f(b);
    for (int k = 1; k < panels; ++k) sum += (k % 2 ? 4.0 : 2.0) * f(a + k * h);
    return sum * h / 3.0;
}

}  // namespace pulsesync
