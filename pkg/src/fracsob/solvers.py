"""Geodesic initial-value and boundary-value solvers, plus path diagnostics.

The exponential map integrates the momentum form

    c_t = A_c^{-1} mu,    mu_t = momentum_rhs(c, c_t),

with classical fixed-step RK4. The momentum form needs no operator
derivative, so each stage costs a handful of multiplier applications.
A second integrator in spray form (c_tt = S_c(c_t)) exists for
cross-checking the product-rule identity between the two forms; it pays
for a finite-difference operator derivative per stage and is kept for
smoke tests only.

The boundary-value problem is solved by shooting: Levenberg-Marquardt on
the endpoint mismatch over a Fourier-truncated initial velocity, Jacobian
by forward differences. Trial shots that leave the immersion set count as
rejected steps and raise the damping instead of aborting.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .curves import _check_field, make_curve
from .errors import (
    DomainError,
    GridError,
    ImmersionError,
    NoConvergenceError,
    NotSupportedError,
    StepError,
)
from .metric import metric, momentum_rhs, spray
from .operators import apply_conjugated, solve_conjugated
from .spectral import TWO_PI, dealias, grid

#: smallest admissible RK4 step count
MIN_STEPS = 16


@dataclass(frozen=True)
class Frame:
    """One stored state of a geodesic: time, curve, velocity, momentum."""

    t: float
    curve: object
    velocity: np.ndarray
    momentum: np.ndarray


@dataclass(frozen=True)
class GeodesicPath:
    """Time-ordered frames of one geodesic together with its settings.

    The constructor checks monotone times and shape consistency. Whether the
    stored momenta actually match A_c applied to the stored velocities is a
    property of the producing integrator and is measured by
    conservation_report, so that deliberately corrupted paths can still be
    constructed and diagnosed.
    """

    frames: tuple
    config: object
    scheme: str = "rk4"
    steps: int = 0

    def __post_init__(self):
        if len(self.frames) < 1:
            raise GridError("a path needs at least one frame")
        times = [f.t for f in self.frames]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise GridError("frame times must be strictly increasing")
        n, d = self.frames[0].curve.n, self.frames[0].curve.dim
        for f in self.frames:
            if f.curve.n != n or f.curve.dim != d:
                raise GridError("all frames must share the same grid and dimension")
            for label, arr in (("velocity", f.velocity), ("momentum", f.momentum)):
                if arr is not None and np.shape(arr) != (n, d):
                    raise GridError(f"frame {label} has shape {np.shape(arr)}, expected {(n, d)}")

    @property
    def times(self):
        return np.array([f.t for f in self.frames])

    @property
    def endpoint(self):
        return self.frames[-1].curve


@dataclass(frozen=True)
class ShootingResult:
    """Outcome of geodesic_bvp: the velocity found, its mismatch, the path."""

    initial_velocity: np.ndarray
    residual: float
    iterations: int
    path: GeodesicPath
    converged: bool = True


def _require_dynamics(cfg):
    if cfg.symbol.order < 1:
        raise DomainError(
            f"geodesic integration needs operator order 2r >= 2, got r = {cfg.symbol.order}"
        )
    if not cfg.symbol.has_derivative:
        raise NotSupportedError(
            "geodesic integration needs the symbol's lambda-derivative; supply a derivative table"
        )


def exp_map(cfg, c0, h0, T=1.0, steps=200, stride=1):
    """Integrate the geodesic with initial curve c0 and initial velocity h0.

    Fixed-step classical RK4 on (c, mu) with mu = A_c c_t. Frames are stored
    every `stride` steps and always at t = T; each stored frame carries a
    deeply solved velocity h = A_c^{-1} mu and its exact image A_c h as the
    momentum, so the pair satisfies the defining relation to rounding even
    where the iterative inverse stagnates near the guard cutoff. Raises
    ImmersionError with the failure time if any stage leaves the immersion
    set, StepError on nonfinite values.
    """
    if steps < MIN_STEPS:
        raise DomainError(f"need steps >= {MIN_STEPS}, got {steps}")
    if stride < 1:
        raise DomainError(f"need stride >= 1, got {stride}")
    if T <= 0:
        raise DomainError(f"need T > 0, got {T}")
    _require_dynamics(cfg)
    h0 = _check_field(c0, h0, "h0")
    guard = c0.dealias_guard
    dt = T / steps

    def rhs(samples, mu, t):
        try:
            c = make_curve(samples, dealias_guard=guard)
        except ImmersionError as exc:
            raise ImmersionError(f"immersion lost near t = {t:.6g}: {exc}") from exc
        h = solve_conjugated(c, cfg.symbol, mu)
        g = momentum_rhs(cfg, c, h, ah=mu)
        # keep the evolved momentum on the resolved band: the quadratic
        # products in the right hand side regenerate the top-third modes the
        # guarded operators drop, and letting them accumulate in mu breaks
        # time reversal
        return c, h, dealias(g) if guard else g

    def snapshot(t, c, h, mu):
        h_f = solve_conjugated(c, cfg.symbol, mu, refine=16, x0=h)
        mu_f = apply_conjugated(c, cfg.symbol, "identity", h_f)
        return Frame(t, c, h_f, mu_f)

    x = np.array(c0.samples, dtype=float)
    mu = apply_conjugated(c0, cfg.symbol, "identity", h0)
    frames = []
    for n in range(steps):
        t = n * dt
        c, h, g = rhs(x, mu, t)
        if n % stride == 0:
            frames.append(snapshot(t, c, h, mu))
        k1x, k1m = h, g
        _, k2x, k2m = rhs(x + 0.5 * dt * k1x, mu + 0.5 * dt * k1m, t + 0.5 * dt)
        _, k3x, k3m = rhs(x + 0.5 * dt * k2x, mu + 0.5 * dt * k2m, t + 0.5 * dt)
        _, k4x, k4m = rhs(x + dt * k3x, mu + dt * k3m, t + dt)
        x = x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        mu = mu + dt / 6.0 * (k1m + 2.0 * k2m + 2.0 * k3m + k4m)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(mu))):
            raise StepError(f"nonfinite state after step {n + 1} (t = {(n + 1) * dt:.6g})")
    c, h, _ = rhs(x, mu, T)
    frames.append(snapshot(T, c, h, mu))
    return GeodesicPath(tuple(frames), cfg, scheme="rk4", steps=steps)


def exp_map_spray(cfg, c0, h0, T=1.0, steps=64, stride=1, richardson=False):
    """Integrate the second-order form c_tt = S_c(c_t) directly.

    Exists to cross-check the momentum integrator; the per-stage
    finite-difference operator derivative makes it slower and noisier, so
    use exp_map for real work.
    """
    if steps < MIN_STEPS:
        raise DomainError(f"need steps >= {MIN_STEPS}, got {steps}")
    _require_dynamics(cfg)
    h0 = _check_field(c0, h0, "h0")
    guard = c0.dealias_guard
    dt = T / steps

    def rhs(samples, h, t):
        try:
            c = make_curve(samples, dealias_guard=guard)
        except ImmersionError as exc:
            raise ImmersionError(f"immersion lost near t = {t:.6g}: {exc}") from exc
        s, _ = spray(cfg, c, h, richardson=richardson)
        return c, s

    x = np.array(c0.samples, dtype=float)
    h = np.array(h0, dtype=float)
    frames = []
    for n in range(steps):
        t = n * dt
        c, s = rhs(x, h, t)
        if n % stride == 0:
            mu = apply_conjugated(c, cfg.symbol, "identity", h)
            frames.append(Frame(t, c, h.copy(), mu))
        k1x, k1h = h, s
        _, k2h = rhs(x + 0.5 * dt * k1x, h + 0.5 * dt * k1h, t + 0.5 * dt)
        k2x = h + 0.5 * dt * k1h
        _, k3h = rhs(x + 0.5 * dt * k2x, h + 0.5 * dt * k2h, t + 0.5 * dt)
        k3x = h + 0.5 * dt * k2h
        _, k4h = rhs(x + dt * k3x, h + dt * k3h, t + dt)
        k4x = h + dt * k3h
        x = x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        h = h + dt / 6.0 * (k1h + 2.0 * k2h + 2.0 * k3h + k4h)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(h))):
            raise StepError(f"nonfinite state after step {n + 1} (t = {(n + 1) * dt:.6g})")
    c, _ = rhs(x, h, T)
    mu = apply_conjugated(c, cfg.symbol, "identity", h)
    frames.append(Frame(T, c, h.copy(), mu))
    return GeodesicPath(tuple(frames), cfg, scheme="rk4-spray", steps=steps)


def _fourier_basis(n, k_max):
    """Real trigonometric basis (n, 2k_max+1): 1, cos, sin, ..., cos K, sin K."""
    theta = grid(n)
    cols = [np.ones(n)]
    for k in range(1, k_max + 1):
        cols.append(np.cos(k * theta))
        cols.append(np.sin(k * theta))
    return np.column_stack(cols)


def _l2_norm(c_like_samples, n):
    return float(np.linalg.norm(c_like_samples)) * np.sqrt(TWO_PI / n)


def geodesic_bvp(
    cfg,
    c0,
    c1,
    K=8,
    steps=64,
    T=1.0,
    max_iter=50,
    tol_rel=1e-6,
    damping=1e-3,
    fd_step=1e-6,
    stride=None,
):
    """Shoot for the initial velocity whose time-T geodesic endpoint is c1.

    The unknown is the (2K+1) real Fourier coefficients per dimension of h0;
    the residual is the endpoint mismatch in the L2(dtheta) norm of samples.
    Levenberg-Marquardt with forward-difference Jacobian; trial shots that
    lose immersion raise the damping. Internal shots keep only the endpoint;
    the returned path is re-integrated at `stride` (default steps // 16).
    Raises NoConvergenceError carrying the best ShootingResult when the cap
    is hit.
    """
    if c0.n != c1.n or c0.dim != c1.dim:
        raise GridError(
            f"curves must share the grid: got ({c0.n},{c0.dim}) and ({c1.n},{c1.dim})"
        )
    if K < 0 or 2 * K + 1 > c0.n:
        raise DomainError(f"need 0 <= 2K+1 <= N, got K = {K} at N = {c0.n}")
    _require_dynamics(cfg)
    n, d = c0.n, c0.dim
    basis = _fourier_basis(n, K)
    n_coef = basis.shape[1]
    scale = max(_l2_norm(c1.samples, n), 1e-300)
    tol_abs = tol_rel * scale
    out_stride = max(1, steps // 16) if stride is None else stride

    def velocity(x):
        return basis @ x.reshape(n_coef, d)

    def shoot(x):
        """Returns the endpoint residual vector, or None on immersion loss."""
        try:
            path = exp_map(cfg, c0, velocity(x), T=T, steps=steps, stride=steps)
        except (ImmersionError, StepError):
            return None
        return (path.endpoint.samples - c1.samples).ravel() * np.sqrt(TWO_PI / n)

    def presented(x):
        return exp_map(cfg, c0, velocity(x), T=T, steps=steps, stride=out_stride)

    coef0, *_ = np.linalg.lstsq(basis, (c1.samples - c0.samples) / T, rcond=None)
    x = coef0.ravel()
    r = shoot(x)
    if r is None:
        raise ImmersionError("the initial shot already leaves the immersion set")
    best = (float(np.linalg.norm(r)), x.copy())
    if best[0] <= tol_abs:
        return ShootingResult(velocity(x), best[0], 0, presented(x), converged=True)

    lam = damping
    iterations = 0
    while iterations < max_iter:
        iterations += 1
        jac = np.empty((r.size, x.size))
        for j in range(x.size):
            delta = fd_step * max(1.0, abs(x[j]))
            xp = x.copy()
            xp[j] += delta
            rp = shoot(xp)
            if rp is None:
                xp[j] = x[j] - delta
                rp = shoot(xp)
                delta = -delta
            jac[:, j] = 0.0 if rp is None else (rp - r) / delta
        jtj = jac.T @ jac
        jtr = jac.T @ r
        diag = np.diag(jtj).copy()
        diag[diag <= 0] = 1.0
        accepted = False
        for _ in range(12):
            try:
                dx = np.linalg.solve(jtj + lam * np.diag(diag), -jtr)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            r_new = shoot(x + dx)
            if r_new is not None and np.linalg.norm(r_new) < np.linalg.norm(r):
                x = x + dx
                r = r_new
                lam = max(lam / 3.0, 1e-12)
                accepted = True
                break
            lam *= 10.0
        norm_r = float(np.linalg.norm(r))
        if norm_r < best[0]:
            best = (norm_r, x.copy())
        if norm_r <= tol_abs:
            return ShootingResult(velocity(x), norm_r, iterations, presented(x), converged=True)
        if not accepted:
            break
    result = ShootingResult(velocity(best[1]), best[0], iterations, presented(best[1]), converged=False)
    raise NoConvergenceError(
        f"shooting stalled at residual {best[0]:.3e} (tolerance {tol_abs:.3e}) "
        f"after {iterations} iterations",
        result=result,
    )


@dataclass(frozen=True)
class ConservationReport:
    """Per-frame conserved-quantity series and threshold verdicts."""

    times: np.ndarray
    energies: np.ndarray
    lengths: np.ndarray
    min_speeds: np.ndarray
    energy_drift: float
    momentum_consistency: float
    drift_tol: float
    consistency_tol: float
    flags: dict = field(default_factory=dict)

    @property
    def ok(self):
        return all(self.flags.values())

    def to_dict(self):
        return {
            "times": self.times.tolist(),
            "energies": self.energies.tolist(),
            "lengths": self.lengths.tolist(),
            "min_speeds": self.min_speeds.tolist(),
            "energy_drift": self.energy_drift,
            "momentum_consistency": self.momentum_consistency,
            "drift_tol": self.drift_tol,
            "consistency_tol": self.consistency_tol,
            "flags": dict(self.flags),
            "ok": self.ok,
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)


def conservation_report(path, drift_tol=1e-6, consistency_tol=1e-8):
    """Energy, length and speed series along a path, with drift verdicts.

    energy_drift is the largest relative deviation of G_c(c_t, c_t) from its
    initial value; momentum_consistency is the largest relative mismatch
    between stored momenta and A_c applied to stored velocities.
    """
    if len(path.frames) < 2:
        raise GridError("a conservation report needs at least 2 frames")
    cfg = path.config
    energies, lengths, speeds, mismatch = [], [], [], []
    for f in path.frames:
        energies.append(metric(cfg, f.curve, f.velocity, f.velocity))
        lengths.append(f.curve.length)
        speeds.append(float(np.min(f.curve.speed)))
        if f.momentum is not None:
            ref = apply_conjugated(f.curve, cfg.symbol, "identity", f.velocity)
            denom = max(float(np.linalg.norm(f.momentum)), 1e-300)
            mismatch.append(float(np.linalg.norm(f.momentum - ref)) / denom)
    energies = np.array(energies)
    e0 = max(abs(energies[0]), 1e-300)
    drift = float(np.max(np.abs(energies - energies[0])) / e0)
    consistency = float(np.max(mismatch)) if mismatch else 0.0
    flags = {
        "energy_drift_ok": drift <= drift_tol,
        "momentum_consistent": consistency <= consistency_tol,
        "immersed": all(s > 0 for s in speeds),
    }
    return ConservationReport(
        times=path.times,
        energies=energies,
        lengths=np.array(lengths),
        min_speeds=np.array(speeds),
        energy_drift=drift,
        momentum_consistency=consistency,
        drift_tol=drift_tol,
        consistency_tol=consistency_tol,
        flags=flags,
    )


def path_to_csv(path):
    """One row per frame per sample: t, k, x1..xd, v1..vd."""
    d = path.frames[0].curve.dim
    header = ["t", "k"] + [f"x{i + 1}" for i in range(d)] + [f"v{i + 1}" for i in range(d)]
    lines = [",".join(header)]
    for f in path.frames:
        vel = f.velocity if f.velocity is not None else np.zeros_like(f.curve.samples)
        for k in range(f.curve.n):
            row = [repr(float(f.t)), str(k)]
            row += [repr(float(v)) for v in f.curve.samples[k]]
            row += [repr(float(v)) for v in vel[k]]
            lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def path_to_json(path):
    """Frame list with times, samples, velocities, momenta."""
    frames = []
    for f in path.frames:
        frames.append(
            {
                "t": float(f.t),
                "samples": f.curve.samples.tolist(),
                "velocity": None if f.velocity is None else np.asarray(f.velocity).tolist(),
                "momentum": None if f.momentum is None else np.asarray(f.momentum).tolist(),
            }
        )
    return json.dumps(
        {
            "scheme": path.scheme,
            "steps": path.steps,
            "n": path.frames[0].curve.n,
            "dim": path.frames[0].curve.dim,
            "frames": frames,
        }
    )


def path_to_svg(path, size=480, margin=24.0, stride=1):
    """Closed polylines of the first two coordinates, one per stored frame.

    Early frames are drawn blue, late frames red; plot data only, no axes.
    """
    frames = path.frames[::stride]
    if frames[-1] is not path.frames[-1]:
        frames = list(frames) + [path.frames[-1]]
    pts = np.concatenate([f.curve.samples[:, :2] for f in frames])
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-12))
    inner = size - 2.0 * margin

    def project(xy):
        u = margin + (xy[:, 0] - lo[0]) / span * inner
        v = size - margin - (xy[:, 1] - lo[1]) / span * inner
        return u, v

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">'
    ]
    last = max(len(frames) - 1, 1)
    for i, f in enumerate(frames):
        frac = i / last
        color = f"rgb({int(round(220 * frac))},40,{int(round(220 * (1 - frac)))})"
        xy = np.concatenate([f.curve.samples[:, :2], f.curve.samples[:1, :2]])
        u, v = project(xy)
        coords = " ".join(f"{a:.3f},{b:.3f}" for a, b in zip(u, v))
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.2"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


__all__ = [
    "MIN_STEPS",
    "ConservationReport",
    "Frame",
    "GeodesicPath",
    "ShootingResult",
    "conservation_report",
    "exp_map",
    "exp_map_spray",
    "geodesic_bvp",
    "path_to_csv",
    "path_to_json",
    "path_to_svg",
]
