#include "shellflow/model.hpp"

#include <cmath>
#include <stdexcept>

namespace shellflow {

void ModelParams::validate() const {
    if (!(f0 > 0.0)) throw std::invalid_argument("f0 must be > 0");
    if (!(nu >= 0.0)) throw std::invalid_argument("nu must be >= 0");
    if (n_shells < 2) throw std::invalid_argument("n_shells must be >= 2");
    if (!(c >= 1.0 && c <= 2.5))
        throw std::invalid_argument("c must lie in [1, 5/2]");
}

std::vector<double> rhs(const ModelParams& p, const ShellState& s,
                        const RhsOptions& opt) {
    const int n = static_cast<int>(s.a.size());
    for (int j = 0; j < n; ++j) {
        if (!std::isfinite(s.a[j]))
            throw std::domain_error("non-finite amplitude at shell " +
                                    std::to_string(j));
    }
    std::vector<double> dadt(n, 0.0);
    // The mutation shift tampers only with the forward-transfer term, so the
    // back-transfer no longer cancels it shell by shell.
    const double cf = p.c + opt.flux_exponent_shift;
    for (int j = 0; j < n; ++j) {
        double d = (j == 0) ? p.f0 : 0.0;
        d -= p.nu * std::exp2(2.0 * j) * s.a[j];
        if (opt.nonlinear) {
            const double prev = (j > 0) ? s.a[j - 1] : 0.0;
            const double next = (j + 1 < n) ? s.a[j + 1] : 0.0;
            d += std::exp2(p.c * (j - 1)) * prev * prev;
            d -= std::exp2(cf * j) * s.a[j] * next;
        }
        dadt[j] = d;
    }
    return dadt;
}

double flux(const ModelParams& p, const ShellState& s, int j) {
    const int n = static_cast<int>(s.a.size());
    if (j < 0 || j >= n) throw std::out_of_range("flux: shell index out of range");
    const double next = (j + 1 < n) ? s.a[j + 1] : 0.0;  // a_{N+1} = 0
    return std::exp2(p.c * j) * s.a[j] * s.a[j] * next;
}

double energy(const ShellState& s) {
    double e = 0.0;
    for (double v : s.a) e += v * v;
    return 0.5 * e;
}

double hs_norm_sq(const ShellState& s, double sobolev_s) {
    double acc = 0.0;
    for (int j = 0; j < static_cast<int>(s.a.size()); ++j)
        acc += std::exp2(2.0 * j * sobolev_s) * s.a[j] * s.a[j];
    return acc;
}

double energy_balance_residual(const ModelParams& p, const ShellState& s,
                               const RhsOptions& opt) {
    const std::vector<double> d = rhs(p, s, opt);
    double a_dot_rhs = 0.0;
    for (size_t j = 0; j < s.a.size(); ++j) a_dot_rhs += s.a[j] * d[j];
    const double inj = p.f0 * s.a[0];
    return a_dot_rhs - inj + p.nu * hs_norm_sq(s, 1.0);
}

}  // namespace shellflow
