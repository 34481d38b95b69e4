#pragma once
//
// Steady states of the viscous shell model.
//
// In rescaled variables A_j = 2^{cj/3} 2^{-c/6} f0^{-1/2} alpha_j the steady
// equations collapse to the two-term recursion
//
//   A_1 = 1/A_0 - mu,     A_{j+1} = A_{j-1}^2 / A_j - mu 2^{beta j},
//
// with mu = nu 2^{c/6} f0^{-1/2} and beta = 2(1 - c/3).  The physical fixed
// point is the unique orbit that stays positive all the way down; every other
// initial value eventually produces a negative shell.  We locate it by
// shooting: bisection on A_0, then re-anchored bisection shell by shell (the
// forward recursion amplifies error by ~2x per shell before the dissipation
// knee and catastrophically after it, so a single bisection on A_0 cannot
// deliver the deep shells), and finally a dominant-balance iteration once the
// admissible band around the orbit is tighter than double precision.
//
// The bisection predicate exploits an exact sign structure of the recursion:
// along positive orbits dA_{j+1}/dA_j < 0 and dA_{j+1}/dA_{j-1} > 0, hence
// sign(dA_j/dA_0) = (-1)^j exactly.  A first negative shell at index j
// therefore tells us the sign of (A_0 - A_0*) -- it is (-1)^{j+1} -- and the
// classification is globally monotone in A_0.  No bracket hunting, no
// dependence on which side happens to blow up first.

#include <string>
#include <utility>
#include <vector>

#include "shellflow/model.hpp"

namespace shellflow {

enum class ShootClass { CONVERGED, UNDERSHOOT, OVERSHOOT };

struct ShootResult {
    ShootClass classification = ShootClass::CONVERGED;
    int first_fail_index = -1;        // shell where the trigger fired
    std::vector<double> prefix;       // A_0 .. A_{first computed shell}
};

struct SteadyState {
    double mu = 0.0;
    double beta = 0.0;
    double gamma = 0.0;     // decay-rate constant gamma(beta)
    double J = 0.0;         // mu 2^{beta J} = 1 (infinity when mu = 0)
    double residual = 0.0;  // max absolute defect of the rescaled equations
    std::vector<double> A;      // rescaled sequence down to the underflow cutoff
    std::vector<double> alpha;  // unscaled fixed point alpha_0 .. alpha_N
    std::string warning;        // nonempty when c is outside (3/2, 5/2]
};

// (mu, beta) for the given parameters.
std::pair<double, double> rescale_mu_beta(const ModelParams& p);

// gamma(beta) = 1 - 2^{beta/2} / (1 - 2^{beta-1} + sqrt(1 + 2^{2(beta-1)})).
// Positive for beta < 1 (i.e. c > 3/2) and exactly 0 at beta = 1.
double gamma_of_beta(double beta);

// Shells below this magnitude are reported as zero; super-exponential decay
// past the knee makes extended precision pointless for any downstream norm.
inline constexpr double kUnderflowCutoff = 1e-300;

// Forward recursion from A_0, classifying the first terminal event:
// UNDERSHOOT = a nonpositive shell, OVERSHOOT = a monotonicity violation
// (A_{j+1} >= A_j, strict form at mu = 0 where the solution is constant).
// Reaching underflow or j_max with neither trigger is CONVERGED.
ShootResult steady_recursion(double A0, double mu, double beta, int j_max);

// Shooting solve.  tol_A0 is the relative bracket width at which each
// bisection stops (the per-shell re-anchoring keeps errors from compounding).
// j_max < 0 selects the default ceil(J) + 60.  Throws std::runtime_error if
// no sign-changing bracket exists in (0, 1/mu).
SteadyState solve_fixed_point(const ModelParams& p, double tol_A0 = 1e-14,
                              int j_max = -1);

struct NewtonResult {
    std::vector<double> alpha;
    double residual = 0.0;   // max_j |F_j| / scale_j at the final iterate
    double residual_raw = 0.0;  // unscaled max_j |F_j|
    int iterations = 0;
    bool converged = false;
    bool flagged_singular = false;  // a pivot degenerated; step regularized
};

// Independent validation: damped Newton with the tridiagonal Jacobian on the
// truncated steady system f_j + 2^{c(j-1)} a_{j-1}^2 - 2^{cj} a_j a_{j+1}
// - nu 4^j a_j = 0, j = 0..N, a_{N+1} = 0.  An empty guess selects the
// shooting result, or the inviscid fixed point damped by exp(-2^j/kappa_d)
// if shooting fails.  Equations are compared at relative scale (the raw
// defect grows like kappa_d^{c/3} toward the knee).
NewtonResult newton_oracle(const ModelParams& p,
                           std::vector<double> guess = {});

// Lemma checks on a computed rescaled sequence (shells above the cutoff).
bool check_monotonicity(const std::vector<double>& A, double mu);
bool check_decay_bound(const std::vector<double>& A, double mu, double beta);
// Returns (max_j g_j * 2^{beta/2}, gamma(beta)) where
// g_j = A_{j+1} / (A_j + sqrt(A_{j+1} A_{j+2})); the bound holds when
// first <= 1 - gamma.
std::pair<double, double> check_gj_bound(const std::vector<double>& A,
                                         double mu, double beta);

}  // namespace shellflow
