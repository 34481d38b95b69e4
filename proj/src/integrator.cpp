#include "shellflow/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace shellflow {

void IntegratorConfig::validate() const {
    if (!(rel_tol > 0 && abs_tol > 0 && dt_init > 0 && dt_max > 0 &&
          positivity_tol > 0 && sample_every > 0))
        throw std::invalid_argument("integrator tolerances must be positive");
    if (!(t_end > 0)) throw std::invalid_argument("t_end must be > 0");
}

namespace {

bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

// phi_k(z) = int_0^1 e^{-z(1-s)} s^{k-1}/(k-1)! ds for the decay convention
// a' = -lambda a + N(a), z = lambda dt >= 0.  Direct formulas cancel badly
// for small z, so below z = 1 we sum the (rapidly converging) Taylor series
// phi_k(z) = sum_m (-z)^m / (m+k)!.
void phi123(double z, double& p1, double& p2, double& p3) {
    if (z >= 1.0) {
        const double em = std::exp(-z);
        p1 = (1.0 - em) / z;
        p2 = (z - 1.0 + em) / (z * z);
        p3 = (0.5 * z * z - z + 1.0 - em) / (z * z * z);
        return;
    }
    p1 = p2 = p3 = 0.0;
    double term = 1.0;  // (-z)^m / m!
    for (int m = 0; m <= 22; ++m) {
        p1 += term / (m + 1.0);
        p2 += term / ((m + 1.0) * (m + 2.0));
        p3 += term / ((m + 1.0) * (m + 2.0) * (m + 3.0));
        term *= -z / (m + 1.0);
        if (std::fabs(term) < 1e-20) break;
    }
}

// Cox-Matthews ETDRK3 with the exact exponential treatment of the viscous
// term.  Unlike a Lawson (integrating-factor) pair, the ETD weights sum to
// phi1, so computed fixed points are preserved exactly: at equilibrium all
// stage derivatives coincide and both the update defect and the embedded
// error estimate dt (4 phi3 - phi2)(f1 - 2 f2 + f3) vanish.  Without this
// property the controller pins dt to the stiffest equilibrated shell and the
// cost explodes near the attractor, where sweeps spend nearly all their time.
// At z = 0 the scheme reduces to Kutta's third-order rule (Simpson weights).
class Stepper {
public:
    Stepper(const ModelParams& p, const RhsOptions& opt, int n)
        : p_(p), opt_(opt), n_(n),
          back_(n), fwd_(n), lam_(n),
          e_full_(n), e_half_(n), w1_(n), w2_(n), w3_(n), werr_(n),
          phi1_half_(n), f1_(n), f2_(n), f3_(n), y2_(n), y3_(n) {
        // The nonlinear coefficients and viscous rates are state-independent;
        // computing exp2 inside the stage loop dominates the runtime otherwise.
        const double cf = p.c + opt.flux_exponent_shift;
        for (int j = 0; j < n; ++j) {
            back_[j] = std::exp2(p.c * (j - 1));
            fwd_[j] = std::exp2(cf * j);
            lam_[j] = p.nu * std::exp2(2.0 * j);
        }
    }

    // Nonlinear + forcing part only (the viscous term is handled by the
    // integrating factor).  Assumes finite input.
    void eval_n(const std::vector<double>& a, std::vector<double>& out) const {
        out[0] = p_.f0;
        for (int j = 1; j < n_; ++j) out[j] = 0.0;
        if (opt_.nonlinear) {
            for (int j = 0; j < n_; ++j) {
                const double prev = (j > 0) ? a[j - 1] : 0.0;
                const double next = (j + 1 < n_) ? a[j + 1] : 0.0;
                out[j] += back_[j] * prev * prev - fwd_[j] * a[j] * next;
            }
        }
    }

    // dt > 0; s.a finite.  Returns err_norm = +inf if any stage went
    // non-finite (caller halves dt and retries).
    StepResult advance(const ShellState& s, double dt, double rel_tol,
                       double abs_tol, bool reuse_f1) {
        if (dt != cached_dt_) {
            fill_factors(dt);
            cached_dt_ = dt;
        }
        const std::vector<double>& a = s.a;
        StepResult r;
        r.state.t = s.t + dt;
        r.state.a.resize(n_);
        std::vector<double>& anext = r.state.a;

        if (!reuse_f1) eval_n(a, f1_);

        // Stage 2 at t + dt/2.
        for (int j = 0; j < n_; ++j)
            y2_[j] = e_half_[j] * a[j] + 0.5 * dt * phi1_half_[j] * f1_[j];
        if (!all_finite(y2_)) return fail(r);
        eval_n(y2_, f2_);

        // Stage 3 at t + dt.
        for (int j = 0; j < n_; ++j)
            y3_[j] = e_full_[j] * a[j] +
                     dt * w1_[j] * (2.0 * f2_[j] - f1_[j]);  // w1 = phi1(z)
        if (!all_finite(y3_)) return fail(r);
        eval_n(y3_, f3_);

        // Third-order combination (weights sum to phi1: fixed points are
        // reproduced exactly) and the embedded second-order error estimate.
        double acc = 0.0;
        for (int j = 0; j < n_; ++j) {
            anext[j] = e_full_[j] * a[j] +
                       dt * (w2_[j] * f1_[j] + w3_[j] * f2_[j] +
                             werr_[j] * f3_[j]);
            const double err = dt * werr_[j] * (f1_[j] - 2.0 * f2_[j] + f3_[j]);
            const double sc =
                abs_tol + rel_tol * std::max(std::fabs(a[j]), std::fabs(anext[j]));
            acc += (err / sc) * (err / sc);
        }
        if (!all_finite(anext)) return fail(r);
        r.err_norm = std::sqrt(acc / n_);
        if (!std::isfinite(r.err_norm)) return fail(r);

        // Simpson quadrature on the stage states (nodes 0, 1/2, 1).
        const double g1d = dissipation_rate(a), g1i = p_.f0 * a[0];
        const double g2d = dissipation_rate(y2_), g2i = p_.f0 * y2_[0];
        const double g3d = dissipation_rate(y3_), g3i = p_.f0 * y3_[0];
        r.dq_dissipation =
            dt * ((1.0 / 6.0) * g1d + (4.0 / 6.0) * g2d + (1.0 / 6.0) * g3d);
        r.dq_injection =
            dt * ((1.0 / 6.0) * g1i + (4.0 / 6.0) * g2i + (1.0 / 6.0) * g3i);
        return r;
    }

private:
    StepResult fail(StepResult& r) {
        r.err_norm = std::numeric_limits<double>::infinity();
        return r;
    }

    double dissipation_rate(const std::vector<double>& a) const {
        double acc = 0.0;
        for (int j = 0; j < n_; ++j) acc += lam_[j] * a[j] * a[j];
        return acc;
    }

    void fill_factors(double dt) {
        for (int j = 0; j < n_; ++j) {
            const double z = lam_[j] * dt;
            e_full_[j] = std::exp(-z);
            e_half_[j] = std::exp(-0.5 * z);
            double p1, p2, p3, q1, q2, q3;
            phi123(z, p1, p2, p3);
            phi123(0.5 * z, q1, q2, q3);
            phi1_half_[j] = q1;
            w1_[j] = p1;
            w2_[j] = 4.0 * p3 - 3.0 * p2 + p1;
            w3_[j] = 4.0 * p2 - 8.0 * p3;
            werr_[j] = 4.0 * p3 - p2;
        }
    }

    const ModelParams& p_;
    const RhsOptions& opt_;
    int n_;
    double cached_dt_ = -1.0;
    std::vector<double> back_, fwd_, lam_;
    std::vector<double> e_full_, e_half_, w1_, w2_, w3_, werr_, phi1_half_;
    std::vector<double> f1_, f2_, f3_, y2_, y3_;
};

}  // namespace

StepResult step(const ModelParams& p, const ShellState& s, double dt,
                const RhsOptions& opt) {
    if (!(dt > 0)) throw std::invalid_argument("step: dt must be > 0");
    for (size_t j = 0; j < s.a.size(); ++j)
        if (!std::isfinite(s.a[j]))
            throw std::domain_error("non-finite amplitude at shell " +
                                    std::to_string(j));
    Stepper st(p, opt, static_cast<int>(s.a.size()));
    return st.advance(s, dt, 1e-8, 1e-12, /*reuse_f1=*/false);
}

RunSeries integrate(const ModelParams& p, const IntegratorConfig& config,
                    const ShellState& initial, const RhsOptions& opt) {
    p.validate();
    config.validate();
    const int n = p.n_shells + 1;
    if (static_cast<int>(initial.a.size()) != n)
        throw std::invalid_argument("initial state size does not match n_shells");
    for (int j = 0; j < n; ++j) {
        if (!std::isfinite(initial.a[j]))
            throw std::invalid_argument("initial state non-finite at shell " +
                                        std::to_string(j));
        if (initial.a[j] < 0.0)
            throw std::invalid_argument("initial state negative at shell " +
                                        std::to_string(j));
    }

    RunSeries series;
    series.params = p;
    series.config = config;

    ShellState state = initial;
    state.t = 0.0;
    double q_diss = 0.0, q_inj = 0.0;

    auto sample = [&](const ShellState& s) {
        DiagnosticsRow row;
        row.t = s.t;
        row.energy = energy(s);
        row.h1_sq = hs_norm_sq(s, 1.0);
        row.injection = p.f0 * s.a[0];
        row.flux.resize(n);
        for (int j = 0; j < n; ++j) row.flux[j] = flux(p, s, j);
        row.a = s.a;
        row.cum_dissipation = q_diss;
        row.cum_injection = q_inj;
        series.rows.push_back(std::move(row));
    };
    sample(state);

    for (double v : state.a) {
        series.min_amplitude = std::min(series.min_amplitude, v);
        series.max_amplitude = std::max(series.max_amplitude, std::fabs(v));
    }

    Stepper stepper(p, opt, n);
    double dt = std::min(config.dt_init, config.dt_max);
    const double dt_floor = 1e-14 * config.t_end;
    series.stats.dt_min_used = dt;
    bool have_f1 = false;
    bool just_rejected = false;
    double err_prev = 1.0;  // PI controller memory
    long sample_idx = 1;    // next sample time = sample_idx * sample_every

    while (state.t < config.t_end) {
        double t_next_sample = sample_idx * config.sample_every;
        double t_target = std::min(config.t_end, t_next_sample);
        double h = std::min(dt, t_target - state.t);
        // Absorb a sliver of a final step so we land on the target exactly.
        if (t_target - (state.t + h) < 1e-12 * h) h = t_target - state.t;

        if (h < dt_floor) {
            series.status = RunStatus::dt_underflow;
            series.message = "step size underflow at t = " + std::to_string(state.t);
            break;
        }

        StepResult r = stepper.advance(state, h, config.rel_tol, config.abs_tol,
                                       have_f1);
        if (r.err_norm > 1.0) {  // rejected (also catches non-finite stages)
            ++series.stats.rejected;
            const double shrink = std::isfinite(r.err_norm)
                                      ? std::max(0.2, 0.9 * std::pow(r.err_norm, -1.0 / 3.0))
                                      : 0.5;
            dt = h * shrink;
            if (dt < dt_floor) {
                series.status = RunStatus::dt_underflow;
                series.message =
                    "step size underflow at t = " + std::to_string(state.t);
                break;
            }
            have_f1 = true;  // state unchanged; first stage still valid
            just_rejected = true;
            continue;
        }

        ++series.stats.accepted;
        have_f1 = false;  // f1 = N(a) must be re-evaluated at the new state
        state = std::move(r.state);
        q_diss += r.dq_dissipation;
        q_inj += r.dq_injection;
        series.stats.dt_min_used = std::min(series.stats.dt_min_used, h);

        for (double v : state.a) {
            series.min_amplitude = std::min(series.min_amplitude, v);
            series.max_amplitude = std::max(series.max_amplitude, std::fabs(v));
        }
        if (series.min_amplitude <
            -config.positivity_tol * std::max(series.max_amplitude, 1e-30)) {
            series.status = RunStatus::positivity_violation;
            series.message = "positivity violated at t = " + std::to_string(state.t);
            break;
        }

        if (state.t >= t_target - 1e-12 * std::max(1.0, t_target)) {
            state.t = t_target;  // kill accumulated roundoff at the boundary
            sample(state);
            if (t_target >= t_next_sample) ++sample_idx;
        }

        // PI step-size controller with hysteresis.  The proportional term
        // damps the limit cycle at the nonlinear stability boundary, where a
        // pure I-controller alternates between a large growth and a rejection.
        // Growth is forbidden on the step right after a rejection, and steps
        // clipped to a sample boundary say nothing about the natural step
        // size, so they leave the controller alone.
        if (h == dt) {
            const double e_n = std::max(r.err_norm, 1e-10);
            double grow = 0.9 * std::pow(e_n, -0.7 / 3.0) *
                          std::pow(std::max(err_prev, 1e-10), 0.4 / 3.0);
            grow = std::min(just_rejected ? 1.0 : 5.0, std::max(0.2, grow));
            err_prev = e_n;
            double dt_prop = std::min(dt * grow, config.dt_max);
            if (dt_prop > 1.25 * dt || dt_prop < dt) dt = dt_prop;
        }
        just_rejected = false;
    }

    series.final_state = state;
    return series;
}

double energy_inequality_check(const RunSeries& series) {
    if (series.rows.size() < 2)
        throw std::invalid_argument("energy_inequality_check needs >= 2 rows");
    // phi(t) = |a|^2 + 2 int nu||a||_H1^2 - 2 int (f,a) is constant in exact
    // arithmetic; the max signed residual over pairs t0 < t is
    // max_t [phi(t) - min_{t0 <= t} phi(t0)].
    double running_min = std::numeric_limits<double>::infinity();
    double worst = -std::numeric_limits<double>::infinity();
    for (const DiagnosticsRow& row : series.rows) {
        const double phi =
            2.0 * row.energy + 2.0 * row.cum_dissipation - 2.0 * row.cum_injection;
        if (phi - running_min > worst && running_min != std::numeric_limits<double>::infinity())
            worst = phi - running_min;
        running_min = std::min(running_min, phi);
    }
    return worst;
}

}  // namespace shellflow
