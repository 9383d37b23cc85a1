"""The Riemannian metric, the nonlocal coefficients w and w0, and the spray.

The metric is G_c(h, k) = int <A_c h, k> ds. Geodesics solve, in momentum
form with mu = A_c c_t,

    mu_t = -<D_s c_t, v> mu - <mu, D_s c_t> v - (w + w0) D_s v,

where w(theta) is the arc-length antiderivative of <A_c c_t, D_s c_t> (an
integrand with vanishing ds-mean) and w0 is the scalar

    w0 = int (1/2pi) <A_c c_t, psi_c D_s c_t> + 1/2 <(A_c/len + A_c') c_t, c_t> ds.

The psi_c-weighted term is quadratured by splitting psi = theta + p: the
periodic part p integrates spectrally, and the sawtooth part reduces with
int_0^2pi theta g dtheta = -int_0^2pi G dtheta for zero-mean g with
antiderivative G. A plain trapezoid sum over the sawtooth would only be
second-order accurate and would poison every downstream tolerance.

The explicit spray adds the operator derivative term:

    S_c(h) = -A_c^{-1} { (D_{c,h} A_c) h + <D_s h, v> A_c h
                         + <A_c h, D_s h> v + (w + w0) D_s v }.
"""

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .curves import antiderivative, arc_derivative, ds_integral
from .errors import DomainError, GridError, MeanResidualWarning, NotSupportedError
from .operators import apply_conjugated, operator_directional_derivative, solve_conjugated
from .spectral import TWO_PI, grid, theta_antiderivative
from .symbols import class_report

#: warn when the ds-mean removed from the w integrand exceeds this relative size
MEAN_RTOL = 1e-6


@dataclass(frozen=True)
class MetricConfig:
    """A symbol admitted as a metric.

    Construction runs a small class report over validation_range and rejects
    symbols that fail the positivity or ellipticity verdicts there. Dynamics
    (exp_map, shooting) additionally require operator order 2r >= 2, which
    is checked by the solvers, not here.
    """

    symbol: object
    validation_range: tuple = (0.5, 20.0)

    def __post_init__(self):
        if not self.symbol.has_derivative:
            warnings.warn(
                "symbol has no lambda-derivative; metric evaluation works, the spray will not",
                stacklevel=2,
            )
        report = class_report(self.symbol, self.validation_range, m_max=64, alpha_max=2)
        if not (report.hermitian_ok and report.positive_ok and report.elliptic):
            raise DomainError(
                "symbol fails the metric admissibility verdicts: "
                f"hermitian={report.hermitian_ok} positive={report.positive_ok} "
                f"elliptic={report.elliptic} margin={report.margin:.3e}"
            )


def _dot(a, b):
    return np.einsum("ij,ij->i", a, b)


def metric(cfg, c, h, k):
    """G_c(h, k) = int <A_c h, k> ds."""
    ah = apply_conjugated(c, cfg.symbol, "identity", h)
    return float(ds_integral(c, _dot(ah, np.asarray(k, dtype=float))))


def metric_symmetric(cfg, c, h, k):
    """The square-root form int <B_c h, B_c k> ds; equals metric(cfg, c, h, k)."""
    bh = apply_conjugated(c, cfg.symbol, "sqrt", h)
    bk = apply_conjugated(c, cfg.symbol, "sqrt", k)
    return float(ds_integral(c, _dot(bh, bk)))


def wj_fields(c, h, n):
    """The closed-form fields W_0 .. W_n built from arc-length derivatives.

    W_0 = |h|^2 / 2 and, for j >= 1,
    W_j = 1/2 sum_{k=1}^{2j-1} (-1)^(k+1) <D_s^(2j-k) h, D_s^k h>,
    so that D_s W_j = <D_s^(2j) h, D_s h>.
    """
    if n < 0:
        raise DomainError(f"need n >= 0, got {n}")
    h = np.asarray(h, dtype=float)
    powers = [h]
    for _ in range(max(0, 2 * n - 1)):
        powers.append(arc_derivative(c, powers[-1]))
    fields = [0.5 * _dot(h, h)]
    for j in range(1, n + 1):
        acc = np.zeros(c.n)
        for k in range(1, 2 * j):
            acc += (-1) ** (k + 1) * _dot(powers[2 * j - k], powers[k])
        fields.append(0.5 * acc)
    return fields


def _w_parts(cfg, c, h, ah=None, warn=True):
    """Shared plumbing: returns (ah, dsh, w, removed_mean)."""
    h = np.asarray(h, dtype=float)
    if ah is None:
        ah = apply_conjugated(c, cfg.symbol, "identity", h)
    dsh = arc_derivative(c, h)
    integrand = _dot(ah, dsh)
    w, mean = antiderivative(c, integrand)
    if warn:
        scale = max(float(np.max(np.abs(integrand))), 1e-300)
        # the pairing can cancel to rounding pointwise (e.g. scaling
        # velocities on a circle), so the threshold also floors at the
        # roundoff level of the product's factors
        floor = 100.0 * np.finfo(float).eps * float(np.max(np.abs(ah)) * np.max(np.abs(dsh)))
        if abs(mean) > max(MEAN_RTOL * scale, floor):
            warnings.warn(
                MeanResidualWarning(
                    f"w integrand has ds-mean {mean:.3e} against scale {scale:.3e}; "
                    "the grid is too coarse for this symbol and field"
                ),
                stacklevel=3,
            )
    return ah, dsh, w, mean


def w_field(cfg, c, h):
    """w(theta) = int_0^theta <A_c h, D_s h> ds, the periodic transport coefficient.

    Warns with MeanResidualWarning when the removed ds-mean of the integrand
    is above MEAN_RTOL relative to the integrand size.
    """
    return _w_parts(cfg, c, h)[2]


def _sawtooth_weighted_integral(c, density):
    """int_0^2pi psi(theta) density(theta) dtheta, psi = theta + p increasing.

    The periodic part integrates by the trapezoid rule (spectral here); the
    sawtooth part uses int theta (g - mean) dtheta = -int G dtheta with G the
    periodic antiderivative, plus mean * 2 pi^2.
    """
    osc, mean = theta_antiderivative(density)
    periodic_part = osc - mean * grid(c.n)
    theta_term = -TWO_PI * float(np.mean(periodic_part)) + mean * 2.0 * np.pi ** 2
    p_term = TWO_PI / c.n * float(c.psi.displacement @ density)
    return theta_term + p_term


def w0_scalar(cfg, c, h, ah=None):
    """The scalar w0 entering the geodesic equation.

    Quadrature of (1/2pi) <A_c h, psi_c D_s h> + 1/2 <(A_c/len + A_c') h, h>
    against ds, with the sawtooth factor psi_c handled exactly. Requires the
    symbol's lambda-derivative. A precomputed A_c h may be passed as ah.
    """
    if not cfg.symbol.has_derivative:
        raise NotSupportedError("w0 needs the symbol's lambda-derivative; supply a derivative table")
    ah, dsh, _, _ = _w_parts(cfg, c, h, ah=ah, warn=False)
    h = np.asarray(h, dtype=float)
    density = _dot(ah, dsh) * c.speed
    term1 = _sawtooth_weighted_integral(c, density) / TWO_PI
    aph = apply_conjugated(c, cfg.symbol, "lambda_derivative", h)
    term2 = 0.5 * float(ds_integral(c, _dot(ah / c.length + aph, h)))
    return term1 + term2


@dataclass(frozen=True)
class SprayBreakdown:
    """The four momentum-source terms of the spray, before -A_c^{-1}.

    Their sum equals -A_c applied to the spray output up to the roundtrip
    error of the conjugated inverse.
    """

    term_operator_derivative: np.ndarray
    term_dsh_v: np.ndarray
    term_transport: np.ndarray
    term_w_w0: np.ndarray
    w_field: np.ndarray
    w0: float

    def total(self):
        return (
            self.term_operator_derivative
            + self.term_dsh_v
            + self.term_transport
            + self.term_w_w0
        )

    def to_dict(self):
        return {
            "term_operator_derivative": self.term_operator_derivative.tolist(),
            "term_dsh_v": self.term_dsh_v.tolist(),
            "term_transport": self.term_transport.tolist(),
            "term_w_w0": self.term_w_w0.tolist(),
            "w_field": self.w_field.tolist(),
            "w0": self.w0,
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)


def spray(cfg, c, h, richardson=False, eps_scale=1e-5):
    """The geodesic spray S_c(h) and its term-by-term breakdown.

    The operator-derivative term is a finite difference and carries its
    noise; the momentum form (momentum_rhs) avoids it and is what the
    integrator uses. richardson and eps_scale tune that finite difference.
    """
    h = np.asarray(h, dtype=float)
    ah, dsh, w, _ = _w_parts(cfg, c, h)
    w0 = w0_scalar(cfg, c, h, ah=ah)
    v = c.unit_tangent
    t_op = operator_directional_derivative(
        c, h, cfg.symbol, h, richardson=richardson, eps_scale=eps_scale
    )
    t_dsh = _dot(dsh, v)[:, None] * ah
    t_transport = _dot(ah, dsh)[:, None] * v
    t_w = (w + w0)[:, None] * arc_derivative(c, v)
    breakdown = SprayBreakdown(t_op, t_dsh, t_transport, t_w, w, w0)
    value = -solve_conjugated(c, cfg.symbol, breakdown.total())
    return value, breakdown


def momentum_rhs(cfg, c, h, ah=None):
    """d/dt of the momentum mu = A_c c_t along the geodesic flow.

    Evaluates -<D_s h, v> A_c h - <A_c h, D_s h> v - (w + w0) D_s v at
    (c, h). No operator derivative enters. When mu is already known it can
    be passed as ah to save one operator application.
    """
    h = np.asarray(h, dtype=float)
    ah, dsh, w, _ = _w_parts(cfg, c, h, ah=ah)
    w0 = w0_scalar(cfg, c, h, ah=ah)
    v = c.unit_tangent
    return -(
        _dot(dsh, v)[:, None] * ah
        + _dot(ah, dsh)[:, None] * v
        + (w + w0)[:, None] * arc_derivative(c, v)
    )


def path_energy(cfg, path):
    """Trapezoidal time quadrature of 1/2 G_c(c_t, c_t) along a path.

    Velocities stored on the frames are used when present; otherwise c_t is
    recovered by second-order differences of the frame samples (one-sided at
    the ends).
    """
    frames = path.frames
    if len(frames) < 2:
        raise GridError("path energy needs at least 2 frames")
    times = np.array([f.t for f in frames])
    if any(f.velocity is None for f in frames):
        stack = np.stack([f.curve.samples for f in frames])
        vels = np.gradient(stack, times, axis=0, edge_order=2)
        velocities = [vels[i] for i in range(len(frames))]
    else:
        velocities = [f.velocity for f in frames]
    dens = np.array(
        [0.5 * metric(cfg, f.curve, velocities[i], velocities[i]) for i, f in enumerate(frames)]
    )
    dt = np.diff(times)
    return float(np.sum(0.5 * (dens[1:] + dens[:-1]) * dt))


def momentum_spray_residual(cfg, c, h, richardson=True, eps_scale=1e-3):
    """Consistency of the two forms of the geodesic equation.

    Returns the relative size of A_c S_c(h) + (D_{c,h} A_c) h - momentum_rhs,
    which vanishes identically by the product rule (A_c c_t)_t =
    (D_{c,c_t}A_c) c_t + A_c c_tt. The default finite-difference settings
    are chosen for this identity check: a larger step than the operator
    default, with extrapolation, keeps both truncation and rounding below
    the identity's 1e-8 scale.
    """
    value, breakdown = spray(cfg, c, h, richardson=richardson, eps_scale=eps_scale)
    lhs = apply_conjugated(c, cfg.symbol, "identity", value)
    rhs = momentum_rhs(cfg, c, h)
    resid = lhs + breakdown.term_operator_derivative - rhs
    scale = max(
        float(np.max(np.abs(lhs))),
        float(np.max(np.abs(rhs))),
        float(np.max(np.abs(breakdown.term_operator_derivative))),
        1e-300,
    )
    return float(np.max(np.abs(resid))) / scale


__all__ = [
    "MEAN_RTOL",
    "MetricConfig",
    "SprayBreakdown",
    "metric",
    "metric_symmetric",
    "momentum_rhs",
    "momentum_spray_residual",
    "path_energy",
    "spray",
    "w0_scalar",
    "w_field",
    "wj_fields",
]
