"""Analytic two-dimensional flow over an irrational torus rotation, used as
the gold oracle for the generic integrator and the estimators.

The coefficient is A(w) = [[a(w), 1], [1, a(w)]] with a(w1, w2) =
-1/(w1 + w2)^2, driven by the rotation (w1 + t, w2 + rho t) mod 1.  The
propagator factors into a scalar integral of ``a`` times the symmetric flow
exp(t B), B = [[0, 1], [1, 0]], so everything of interest has a closed form:

* the scalar integral is elementary between torus wrap times, where the
  coefficient is discontinuous;
* the principal direction is (1, 1)/sqrt(2) for every base point;
* the ratio of growth on span(1, -1) to growth on span(1, 1) is exactly
  exp(-2t): the separation rate is 2 while both exponents diverge to -inf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .drivers import TorusRotation, TorusState
from .estimators import (DivergenceDiagnostic, OdeCocycle, separation_estimate,
                         warmup_direction)
from .odes import OdeModel, integrate

# sandwich constant kappa = kappa* for the time-1 focusing of this flow
FOCUSING_RATIO_BOUND = 1.0 / math.tanh(1.0)

_B_FLOW = np.array([[0.0, 1.0], [1.0, 0.0]])
PRINCIPAL_DIRECTION = np.array([1.0, 1.0]) / math.sqrt(2.0)
SEPARATION_RATE = 2.0


def coefficient(w1: float, w2: float) -> float:
    """Scalar coefficient a at a torus position."""
    return -1.0 / (w1 + w2) ** 2


class TorusCoefficientField(OdeModel):
    """Generic-integrator view of the analytic model."""

    def __init__(self, rho: float | None = None):
        super().__init__(2)
        self.driver = TorusRotation(rho)
        self.rho = self.driver.rho

    def field(self, state: TorusState, t: float) -> np.ndarray:
        w1, w2 = state.advance(t).position
        a = coefficient(w1, w2)
        return np.array([[a, 1.0], [1.0, a]])

    def breakpoints(self, state: TorusState, t0: float, t1: float) -> np.ndarray:
        ts = self.driver.wrap_times(state, t1)
        return ts[(ts > t0) & (ts < t1)]

    def piece_field(self, state, t0, t1):
        # positions move linearly inside a wrap-free piece
        x0, y0 = state.advance(0.5 * (t0 + t1)).position
        mid = 0.5 * (t0 + t1)
        v = 1.0 + self.rho

        def fieldfn(tau):
            a = -1.0 / (x0 + y0 + v * (tau - mid)) ** 2
            return np.array([[a, 1.0], [1.0, a]])

        return fieldfn


@dataclass
class TorusExampleModel:
    """Bundle of the driver, the generic field, and the closed forms."""

    rho: float | None = None

    def __post_init__(self):
        self.ode_model = TorusCoefficientField(self.rho)
        self.driver = self.ode_model.driver
        self.rho = self.ode_model.rho

    def initial(self, seed: int) -> TorusState:
        return self.driver.initial(seed)

    # -- closed forms ------------------------------------------------------

    def _tagged_pieces(self, state: TorusState, t: float):
        """Pieces of [0, t] between wrap times, each with its exact starting
        coordinate sum (the wrapped coordinate is exactly 0 at a wrap)."""
        rho = self.rho
        w1, w2 = state.position
        eps = 1e-12
        k1 = np.arange(math.ceil(w1 + eps), w1 + t + eps)
        t1 = k1 - w1
        k2 = np.arange(math.ceil(w2 + eps), w2 + rho * t + eps)
        t2 = (k2 - w2) / rho
        events = [(tau, 1) for tau in t1 if 0 < tau <= t] + [(tau, 2) for tau in t2 if 0 < tau <= t]
        events.sort()
        pieces = []
        start, c = 0.0, w1 + w2
        for tau, which in events:
            if tau > start:
                pieces.append((start, tau, c))
            pos = state.advance(tau).position
            c = pos[1] if which == 1 else pos[0]  # the other coordinate; wrapped one is 0
            start = tau
        if t > start:
            pieces.append((start, t, c))
        return pieces

    def a_integral(self, state: TorusState, t: float) -> float:
        """Exact integral of a along the orbit over [0, t] (t of either sign).

        On a wrap-free piece a(theta_tau w) = -1/(c + (1+rho) tau)^2 with
        antiderivative 1/((1+rho)(c + (1+rho) tau)).
        """
        if t == 0:
            return 0.0
        if t < 0:
            return -self.a_integral(state.advance(t), -t)
        v = 1.0 + self.rho
        total = 0.0
        for start, end, c in self._tagged_pieces(state, t):
            length = end - start
            total += 1.0 / (v * (c + v * length)) - 1.0 / (v * c)
        return total

    def propagator(self, state: TorusState, t: float):
        """Closed-form U_w(t) as (direction_matrix, log_scale), with the
        direction normalized in the operator ell-1 norm (so its norm is 1 and
        log_scale = a-integral + |t|)."""
        ch, sh = math.cosh(t), math.sinh(t)
        etb = np.array([[ch, sh], [sh, ch]])
        nrm = ch + abs(sh)  # operator ell-1 norm of exp(tB)
        return etb / nrm, self.a_integral(state, t) + math.log(nrm)

    def apply(self, state: TorusState, t: float, u):
        """Closed-form solution from u: (unit direction, log growth of |.|_2)."""
        u = np.asarray(u, dtype=float)
        ch, sh = math.cosh(t), math.sinh(t)
        v = np.array([ch * u[0] + sh * u[1], sh * u[0] + ch * u[1]])
        growth = self.a_integral(state, t) + math.log(np.linalg.norm(v) / np.linalg.norm(u))
        return v / np.linalg.norm(v), growth

    @staticmethod
    def separation_ratio(t: float) -> float:
        """Exact growth ratio of the complement over the principal direction:
        the scalar factor cancels, leaving exp(-2t) for every base point."""
        return math.exp(-2.0 * t)

    def kappa_observable(self, state: TorusState) -> float:
        """Quadratic form <A w, w> along the constant principal direction."""
        w1, w2 = state.position
        return 1.0 + coefficient(w1, w2)

    def kappa_mean_exact(self, state: TorusState, horizon: float) -> float:
        """Exact finite-horizon time average of the quadratic form."""
        return 1.0 + self.a_integral(state, horizon) / horizon


def closed_form_propagator(model: TorusExampleModel, state: TorusState, t: float):
    """Module-level alias for the closed-form propagator (direction, log_scale)."""
    return model.propagator(state, t)


# ---------------------------------------------------------------------------
# validation against the generic pipeline


@dataclass
class TorusValidationReport:
    """Outcome of running the generic machinery on the analytic model."""

    rho: float
    kappa_bound: float
    items: list = field(default_factory=list)  # (name, passed, detail)
    sigma_estimates: list = field(default_factory=list)
    direction_errors: list = field(default_factory=list)
    propagator_errors: list = field(default_factory=list)
    divergence: DivergenceDiagnostic | None = None

    @property
    def passed(self) -> bool:
        return all(ok for _, ok, _ in self.items)

    def add(self, name, ok, detail=""):
        self.items.append((name, bool(ok), detail))

    def summary(self) -> str:
        lines = [f"torus example validation (rho = {self.rho:.12g}, kappa bound = {self.kappa_bound:.12g})"]
        for name, ok, detail in self.items:
            lines.append(f"  [{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        return "\n".join(lines)


def validate_against_closed_form(rho=None, seed=0, n_omegas=5, t_max=10.0, n_times=8,
                                 horizon=50.0, warmup_time=50.0, dt=0.25,
                                 sigma_window=(1.9, 2.1), direction_tol=1e-6,
                                 propagator_rtol=1e-8,
                                 divergence_horizons=(125.0, 250.0, 500.0, 1000.0),
                                 divergence_threshold=-10.0,
                                 rtol=1e-10, sep_rtol=1e-6) -> TorusValidationReport:
    """Drive the generic integrator and estimators over the analytic model and
    compare: (a) propagator log scales, (b) the recovered principal direction,
    (c) the separation rate, (d) the divergence trend of the quadratic form."""
    model = TorusExampleModel(rho)
    report = TorusValidationReport(rho=model.rho, kappa_bound=FOCUSING_RATIO_BOUND)

    # (a) propagator agreement on sampled (omega, t)
    times = np.linspace(t_max / n_times, t_max, n_times)
    worst = 0.0
    for k in range(n_omegas):
        state = model.initial(seed + k)
        u0 = np.array([1.0, 0.3])
        for t in times:
            d_num, ls_num = integrate(model.ode_model, state, u0, float(t), rtol=rtol)
            d_ex, ls_ex = model.apply(state, float(t), u0)
            err = abs(ls_num - ls_ex) / max(1.0, abs(ls_ex))
            worst = max(worst, err, float(np.linalg.norm(d_num - d_ex)))
    report.propagator_errors.append(worst)
    report.add("propagator-agreement", worst <= propagator_rtol,
               f"worst relative log-scale / direction error {worst:.3e} over {n_omegas} base points, t <= {t_max}")

    # (b) principal direction after pullback warm-up
    cocycle = OdeCocycle(model.ode_model, dt=dt, rtol=rtol)
    warm_steps = int(round(warmup_time / dt))
    worst_dir = 0.0
    for k in range(n_omegas):
        state = model.initial(seed + k)
        w = warmup_direction(cocycle, state, warm_steps)
        err = float(np.linalg.norm(w - PRINCIPAL_DIRECTION))
        report.direction_errors.append(err)
        worst_dir = max(worst_dir, err)
    report.add("principal-direction", worst_dir <= direction_tol,
               f"worst |w - (1,1)/sqrt2| = {worst_dir:.3e} at warm-up time {warmup_time}")

    # (c) separation rate via the generic frame estimator
    sep_cocycle = OdeCocycle(model.ode_model, dt=dt, rtol=sep_rtol)
    ok_sigma = True
    for k in range(n_omegas):
        state = model.initial(seed + k)
        est = separation_estimate(sep_cocycle, state, horizon, warmup=warm_steps)
        report.sigma_estimates.append(est.sigma_hat)
        ok_sigma = ok_sigma and sigma_window[0] <= est.sigma_hat <= sigma_window[1]
    report.add("separation-rate", ok_sigma,
               f"sigma estimates {np.round(report.sigma_estimates, 4).tolist()} vs window {sigma_window}")

    # (d) divergence trend of the quadratic form, from exact integrals
    state = model.initial(seed)
    means = [model.kappa_mean_exact(state, T) for T in divergence_horizons]
    diag = DivergenceDiagnostic.from_means(divergence_horizons, means, divergence_threshold)
    report.divergence = diag
    report.add("lambda1-divergence",
               diag.strictly_decreasing and all(m < divergence_threshold for m in diag.means) and diag.diverging,
               f"means {np.round(diag.means, 3).tolist()} at horizons {list(divergence_horizons)}; "
               f"strictly decreasing: {diag.strictly_decreasing}; all below {divergence_threshold}: "
               f"{all(m < divergence_threshold for m in diag.means)}")
    return report
