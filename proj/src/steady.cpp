#include "shellflow/steady.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace shellflow {

std::pair<double, double> rescale_mu_beta(const ModelParams& p) {
    if (!(p.f0 > 0)) throw std::invalid_argument("f0 must be > 0");
    const double beta = 2.0 * (1.0 - p.c / 3.0);
    // Substituting alpha_j = 2^{-cj/3} 2^{c/6} f0^{1/2} A_j into the steady
    // equations makes the viscous coefficient nu 4^j alpha_j carry the factor
    // 2^{+c/6}: mu = nu 2^{c/6} / sqrt(f0).
    const double mu = p.nu * std::exp2(p.c / 6.0) / std::sqrt(p.f0);
    return {mu, beta};
}

double gamma_of_beta(double beta) {
    const double t = std::exp2(beta - 1.0);
    return 1.0 - std::exp2(0.5 * beta) / (1.0 - t + std::sqrt(1.0 + t * t));
}

ShootResult steady_recursion(double A0, double mu, double beta, int j_max) {
    if (!(A0 > 0)) throw std::invalid_argument("steady_recursion: A0 must be > 0");
    if (j_max < 2) throw std::invalid_argument("steady_recursion: j_max must be >= 2");
    ShootResult r;
    r.prefix.push_back(A0);
    const bool strict = (mu == 0.0);  // constant inviscid orbit is admissible
    double prev = A0;
    double cur = 1.0 / A0 - mu;
    r.prefix.push_back(cur);
    auto monotone_broken = [&](double next, double here) {
        return strict ? next > here : next >= here;
    };
    if (cur <= 0.0) {
        r.classification = ShootClass::UNDERSHOOT;
        r.first_fail_index = 1;
        return r;
    }
    if (monotone_broken(cur, prev)) {
        r.classification = ShootClass::OVERSHOOT;
        r.first_fail_index = 1;
        return r;
    }
    for (int j = 1; j < j_max; ++j) {
        if (cur < kUnderflowCutoff) break;  // monotone positive all the way
        const double next = prev * prev / cur - mu * std::exp2(beta * j);
        r.prefix.push_back(next);
        if (next <= 0.0) {
            r.classification = ShootClass::UNDERSHOOT;
            r.first_fail_index = j + 1;
            return r;
        }
        if (monotone_broken(next, cur)) {
            r.classification = ShootClass::OVERSHOOT;
            r.first_fail_index = j + 1;
            return r;
        }
        prev = cur;
        cur = next;
    }
    r.classification = ShootClass::CONVERGED;
    return r;
}

namespace {

// Parity-corrected shooting predicate.  Starting the recursion at shell
// `jstart` from (A_{jstart-1}, x) -- or from x = A_0 when jstart == 0 --
// returns +1 if x is above the positive orbit, -1 if below, 0 if the orbit
// stays positive down to underflow or j_max.  A first nonpositive shell at
// offset k from jstart means sign(x - x*) = (-1)^{k+1}; for c > 3/2 a
// monotonicity violation at offset k likewise gives (-1)^k.  Both follow
// from sign(dA_{jstart+k}/dx) = (-1)^k along positive orbits.
int parity_class(int jstart, double Aprev, double x, double mu, double beta,
                 int j_max, bool use_mono) {
    double prev, cur;
    int off, j;
    if (jstart == 0) {
        if (x <= 0.0) return -1;
        const double a1 = 1.0 / x - mu;
        if (a1 <= 0.0) return +1;           // negativity at odd offset
        if (use_mono && a1 >= x) return -1;  // violation at odd offset
        prev = x;
        cur = a1;
        off = 1;
        j = 1;
    } else {
        if (x <= 0.0) return -1;
        if (use_mono && x >= Aprev) return +1;  // violation at even offset 0
        prev = Aprev;
        cur = x;
        off = 0;
        j = jstart;
    }
    while (true) {
        if (cur < kUnderflowCutoff || j >= j_max) return 0;
        const double next = prev * prev / cur - mu * std::exp2(beta * j);
        ++j;
        ++off;
        if (next <= 0.0) return (off % 2 == 1) ? +1 : -1;
        if (use_mono && next >= cur) return (off % 2 == 1) ? -1 : +1;
        prev = cur;
        cur = next;
    }
}

// Bisection on the parity predicate.  Requires class(lo) = -1 and
// class(hi) = +1; returns NaN if the bracket does not classify that way.
double bisect_parity(int jstart, double Aprev, double lo, double hi, double mu,
                     double beta, int j_max, bool use_mono, double tol_rel) {
    const int cl = parity_class(jstart, Aprev, lo, mu, beta, j_max, use_mono);
    const int ch = parity_class(jstart, Aprev, hi, mu, beta, j_max, use_mono);
    if (cl == 0) return lo;
    if (ch == 0) return hi;
    if (cl != -1 || ch != +1) return std::numeric_limits<double>::quiet_NaN();
    for (int it = 0; it < 2000; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;  // bracket is 1 ulp wide
        if (hi - lo < tol_rel * std::fabs(mid)) break;
        const int cm = parity_class(jstart, Aprev, mid, mu, beta, j_max, use_mono);
        if (cm == 0) return mid;
        if (cm < 0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

SteadyState solve_fixed_point(const ModelParams& p, double tol_A0, int j_max) {
    p.validate();
    SteadyState st;
    auto [mu, beta] = rescale_mu_beta(p);
    st.mu = mu;
    st.beta = beta;
    st.gamma = gamma_of_beta(beta);
    if (!p.c_in_proven_range())
        st.warning = "c outside (3/2,5/2]: monotonicity unproven";

    const double alpha_scale = std::exp2(p.c / 6.0) * std::sqrt(p.f0);
    auto to_alpha = [&](int j, double Aj) {
        return std::exp2(-p.c * j / 3.0) * alpha_scale * Aj;
    };

    if (mu == 0.0) {
        // Inviscid: A_j = 1 identically.
        st.J = std::numeric_limits<double>::infinity();
        const int m = (j_max >= 2) ? j_max : std::max(p.n_shells + 1, 8);
        st.A.assign(m + 1, 1.0);
        st.alpha.resize(p.n_shells + 1);
        for (int j = 0; j <= p.n_shells; ++j) st.alpha[j] = to_alpha(j, 1.0);
        st.residual = 0.0;
        return st;
    }

    st.J = std::log2(1.0 / mu) / beta;
    const int jm = (j_max >= 2)
                       ? j_max
                       : static_cast<int>(std::ceil(std::max(st.J, 0.0))) + 60;
    const bool use_mono = p.c > 1.5;  // strict decrease only proven there

    // Shell 0: bracket inside (0, 1/mu); A_1 > 0 forces A_0 < 1/mu.
    const double lo0 = std::min(1e-8, 0.1 / mu);
    const double hi0 = 0.999999 / mu;
    const double A0 =
        bisect_parity(0, 0.0, lo0, hi0, mu, beta, jm, use_mono, tol_A0);
    if (!std::isfinite(A0))
        throw std::runtime_error(
            "solve_fixed_point: no sign-changing bracket in (0, 1/mu)");

    std::vector<double>& A = st.A;
    A.push_back(A0);
    A.push_back(1.0 / A0 - mu);

    // Deeper shells: re-anchor a fresh bisection at every level inside the
    // rigorous admissible band; once that band is below double precision,
    // finish with the dominant-balance iteration
    //   A_{j+1} = A_{j-1}^2 / (A_{j+2}-estimate + mu 2^{beta j}).
    bool ladder = false;
    for (int j = 2; j <= jm; ++j) {
        const double ap = A[j - 1];
        if (ap < 1e-154) break;  // ap^2 would underflow
        const double d = mu * std::exp2(beta * j);
        const double vub = ap * ap / d;  // A_{j+1} > 0 requires A_j < ap^2/D
        if (vub < kUnderflowCutoff) break;
        const double vlb = 0.5 * (-d + std::sqrt(d * d + 4.0 * ap * ap));
        if (!ladder && vub - vlb <= 1e-12 * vub) ladder = true;

        double v;
        if (ladder) {
            double x = vub;
            for (int pass = 0; pass < 3; ++pass) {
                const double dn = mu * std::exp2(beta * (j + 1));
                const double xn = (x > 1e-154) ? x * x / dn : 0.0;
                x = ap * ap / (xn + d);
            }
            v = x;
        } else {
            const double hi =
                use_mono ? std::min(vub, std::nextafter(ap, 0.0)) : vub;
            v = bisect_parity(j, ap, kUnderflowCutoff, hi, mu, beta, jm,
                              use_mono, tol_A0);
            if (!std::isfinite(v)) {
                ladder = true;
                --j;
                continue;
            }
        }
        if (v < kUnderflowCutoff) break;
        A.push_back(v);
    }

    // Residual of the rescaled system over the computed shells.
    double res = std::fabs(1.0 - A[0] * (A[1] + mu));
    for (size_t j = 1; j + 1 < A.size(); ++j) {
        const double defect = A[j - 1] * A[j - 1] - A[j] * A[j + 1] -
                              mu * std::exp2(beta * static_cast<double>(j)) * A[j];
        res = std::max(res, std::fabs(defect));
    }
    st.residual = res;

    st.alpha.assign(p.n_shells + 1, 0.0);
    for (int j = 0; j <= p.n_shells; ++j) {
        if (j < static_cast<int>(A.size())) st.alpha[j] = to_alpha(j, A[j]);
    }
    return st;
}

namespace {

// Tridiagonal LU with partial pivoting (fill-in limited to one extra
// superdiagonal).  Rows are assumed pre-scaled to comparable magnitude.
// Returns false if a pivot had to be regularized.
bool solve_tridiag(std::vector<double> dl, std::vector<double> d,
                   std::vector<double> du, std::vector<double> b,
                   std::vector<double>& x) {
    const int n = static_cast<int>(d.size());
    std::vector<double> du2(n, 0.0);
    bool clean = true;
    for (int i = 0; i < n - 1; ++i) {
        if (std::fabs(dl[i]) > std::fabs(d[i])) {  // swap rows i, i+1
            std::swap(d[i], dl[i]);
            std::swap(du[i], d[i + 1]);
            if (i + 1 < n - 1) std::swap(du2[i], du[i + 1]);
            std::swap(b[i], b[i + 1]);
        }
        if (d[i] == 0.0) {
            d[i] = 1e-300;
            clean = false;
        }
        const double m = dl[i] / d[i];
        d[i + 1] -= m * du[i];
        if (i + 1 < n - 1) du[i + 1] -= m * du2[i];
        b[i + 1] -= m * b[i];
    }
    if (d[n - 1] == 0.0) {
        d[n - 1] = 1e-300;
        clean = false;
    }
    x.assign(n, 0.0);
    for (int i = n - 1; i >= 0; --i) {
        double s = b[i];
        if (i + 1 < n) s -= du[i] * x[i + 1];
        if (i + 2 < n) s -= du2[i] * x[i + 2];
        x[i] = s / d[i];
    }
    return clean;
}

}  // namespace

NewtonResult newton_oracle(const ModelParams& p, std::vector<double> guess) {
    p.validate();
    const int n = p.n_shells + 1;

    if (guess.empty()) {
        bool have = false;
        if (p.nu > 0) {
            try {
                guess = solve_fixed_point(p).alpha;
                have = true;
            } catch (const std::runtime_error&) {
            }
        }
        if (!have) {
            // Inviscid fixed point damped by exp(-2^j / kappa_d).
            auto [mu, beta] = rescale_mu_beta(p);
            const double kd =
                (mu > 0) ? std::exp2(std::log2(1.0 / mu) / beta) : 1e300;
            guess.resize(n);
            for (int j = 0; j < n; ++j)
                guess[j] = std::exp2(p.c / 6.0 - p.c * j / 3.0) * std::sqrt(p.f0) *
                           std::exp(-std::exp2(static_cast<double>(j)) / kd);
        }
    }
    if (static_cast<int>(guess.size()) != n)
        throw std::invalid_argument("newton_oracle: guess size mismatch");

    auto eval = [&](const std::vector<double>& a, std::vector<double>& F,
                    std::vector<double>& scale) {
        for (int j = 0; j < n; ++j) {
            const double prev = (j > 0) ? a[j - 1] : 0.0;
            const double next = (j + 1 < n) ? a[j + 1] : 0.0;
            const double t_force = (j == 0) ? p.f0 : 0.0;
            const double t_up = std::exp2(p.c * (j - 1)) * prev * prev;
            const double t_down = std::exp2(p.c * j) * a[j] * next;
            const double t_visc = p.nu * std::exp2(2.0 * j) * a[j];
            F[j] = t_force + t_up - t_down - t_visc;
            scale[j] = std::max({std::fabs(t_force), std::fabs(t_up),
                                 std::fabs(t_down), std::fabs(t_visc), 1e-30});
        }
    };

    NewtonResult res;
    std::vector<double> a = std::move(guess);
    std::vector<double> F(n), scale(n), Fs(n), dl(n), dg(n), du(n), dx(n);
    std::vector<double> Ft(n), scalet(n), trial(n);

    auto scaled_max = [&](const std::vector<double>& f,
                          const std::vector<double>& s) {
        double m = 0.0;
        for (int j = 0; j < n; ++j) m = std::max(m, std::fabs(f[j]) / s[j]);
        return m;
    };
    auto raw_l2 = [&](const std::vector<double>& f) {
        double m = 0.0;
        for (int j = 0; j < n; ++j) m += f[j] * f[j];
        return std::sqrt(m);
    };

    eval(a, F, scale);
    // The line search descends on the raw l2 norm (a max of per-row relative
    // defects barely moves while far-off shells adjust over many orders of
    // magnitude); convergence is judged on the scaled max, which the raw norm
    // cannot see once the large shells dominate the rounding floor.
    double merit = raw_l2(F);
    double scaled = scaled_max(F, scale);
    const double tol = 1e-12;
    const int max_iter = 100;
    int it = 0;
    for (; it < max_iter && scaled > tol; ++it) {
        // Tridiagonal Jacobian; the pivoting solver copes with the huge
        // scale spread between forced and deep viscous rows.
        for (int j = 0; j < n; ++j) {
            const double next = (j + 1 < n) ? a[j + 1] : 0.0;
            const double prev = (j > 0) ? a[j - 1] : 0.0;
            dl[j] = (j > 0) ? 2.0 * std::exp2(p.c * (j - 1)) * prev : 0.0;
            dg[j] = -std::exp2(p.c * j) * next - p.nu * std::exp2(2.0 * j);
            du[j] = (j + 1 < n) ? -std::exp2(p.c * j) * a[j] : 0.0;
            Fs[j] = -F[j];
        }
        if (!solve_tridiag({dl.begin() + 1, dl.end()}, dg,
                           {du.begin(), du.end() - 1}, Fs, dx))
            res.flagged_singular = true;

        // Backtracking damping on the scaled residual.
        double lambda = 1.0;
        bool accepted = false;
        for (int bt = 0; bt < 40; ++bt) {
            for (int j = 0; j < n; ++j) trial[j] = a[j] + lambda * dx[j];
            bool finite = true;
            for (double v : trial)
                if (!std::isfinite(v)) finite = false;
            if (finite) {
                eval(trial, Ft, scalet);
                const double mt = raw_l2(Ft);
                const double st = scaled_max(Ft, scalet);
                if (mt < merit * (1.0 - 1e-4 * lambda) || st < 0.9 * scaled) {
                    a.swap(trial);
                    F.swap(Ft);
                    scale.swap(scalet);
                    merit = mt;
                    scaled = st;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if (!accepted) break;  // stagnated; report honestly below
    }

    res.alpha = std::move(a);
    res.iterations = it;
    res.residual = scaled;
    res.converged = scaled <= tol;
    double raw = 0.0;
    for (int j = 0; j < n; ++j) raw = std::max(raw, std::fabs(F[j]));
    res.residual_raw = raw;
    return res;
}

bool check_monotonicity(const std::vector<double>& A, double mu) {
    if (mu == 0.0) return true;  // constant inviscid orbit is excluded
    for (size_t j = 1; j < A.size(); ++j)
        if (!(A[j - 1] > A[j])) return false;
    return true;
}

bool check_decay_bound(const std::vector<double>& A, double mu, double beta) {
    if (mu <= 0.0) return true;
    const double J = std::log2(1.0 / mu) / beta;
    const int m = static_cast<int>(std::ceil(std::max(J, 0.0)));
    for (int k = 0; m + k < static_cast<int>(A.size()) && m + k >= 1; ++k) {
        const double num = A[m + k];
        const double den = A[m + k - 1] * A[m + k - 1];
        if (den < kUnderflowCutoff) break;
        if (num / den > std::exp2(-beta * k) * (1.0 + 1e-12)) return false;
    }
    return true;
}

std::pair<double, double> check_gj_bound(const std::vector<double>& A,
                                         double mu, double beta) {
    double worst = 0.0;
    for (size_t j = 0; j + 2 < A.size(); ++j) {
        if (A[j + 2] < kUnderflowCutoff) break;
        const double g =
            A[j + 1] / (A[j] + std::sqrt(A[j + 1]) * std::sqrt(A[j + 2]));
        worst = std::max(worst, g * std::exp2(0.5 * beta));
    }
    return {worst, gamma_of_beta(beta)};
}

}  // namespace shellflow
