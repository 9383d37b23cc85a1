"""Parameter-dependent Fourier-multiplier symbols a(lambda, m).

Built-in families (all scalar multiples of the identity, so positivity and
Hermitian structure are immediate):

  constant_coefficient  sum_j alpha_j (2*pi*m/lambda)^(2j)
  scale_invariant       lambda^-3 sum_j alpha_j (2*pi*m)^(2j)
  bessel_fractional     alpha_0 (1 + (2*pi*m/lambda)^2)^r
  two_term_fractional   alpha_0 + alpha_1 (2*pi*m/lambda)^(2r)

plus custom_table for stored matrix-valued symbols. The order attribute is
r, the induced operator has order 2r. Analytic lambda-derivatives are
available for every built-in family; custom tables need a user-supplied
derivative table before they can be used in the geodesic spray.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NotPositiveDefiniteError, NotSupportedError
from .spectral import TWO_PI

FAMILIES = (
    "constant_coefficient",
    "scale_invariant",
    "bessel_fractional",
    "two_term_fractional",
    "custom_table",
)

_SCALAR_FAMILIES = FAMILIES[:4]


@dataclass(frozen=True)
class LambdaSymbol:
    """One family member a(lambda, m); use the module constructors below.

    alphas are the nonnegative coefficients of the family; alpha_0 = 0 is
    accepted so that degenerate symbols can be constructed for diagnostics,
    positivity is enforced where an inverse or square root is requested.
    For custom_table, table holds (m_max, values, derivative) with values of
    shape (2*m_max + 1, dim, dim) indexed by m + m_max.
    """

    family: str
    order: float
    alphas: tuple = ()
    dim: int = 2
    table: tuple = field(default=None, repr=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown symbol family {self.family!r}")
        if self.order < 0:
            raise DomainError(f"symbol order r must be nonnegative, got {self.order}")
        if self.dim < 1:
            raise DomainError(f"symbol dimension must be positive, got {self.dim}")
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        if any(a < 0 for a in self.alphas):
            raise DomainError(f"coefficients must be nonnegative, got {self.alphas}")

    @property
    def is_scalar(self):
        return self.family in _SCALAR_FAMILIES

    @property
    def has_derivative(self):
        if self.family == "custom_table":
            return self.table[2] is not None
        return True


def constant_coefficient(alphas, dim=2):
    """Integer-order family sum_j alpha_j (2*pi*m/lambda)^(2j); r = n."""
    alphas = tuple(float(a) for a in alphas)
    if not alphas or alphas[-1] <= 0:
        raise DomainError("constant_coefficient needs a positive leading coefficient")
    return LambdaSymbol("constant_coefficient", float(len(alphas) - 1), alphas, dim)


def scale_invariant(alphas, dim=2):
    """Integer-order family lambda^-3 sum_j alpha_j (2*pi*m)^(2j); r = n."""
    alphas = tuple(float(a) for a in alphas)
    if not alphas or alphas[-1] <= 0:
        raise DomainError("scale_invariant needs a positive leading coefficient")
    return LambdaSymbol("scale_invariant", float(len(alphas) - 1), alphas, dim)


def bessel_fractional(r, alpha0=1.0, dim=2):
    """Fractional family alpha_0 (1 + (2*pi*m/lambda)^2)^r."""
    if alpha0 <= 0:
        raise DomainError("bessel_fractional needs alpha_0 > 0")
    return LambdaSymbol("bessel_fractional", float(r), (float(alpha0),), dim)


def two_term_fractional(r, alpha0, alpha1, dim=2):
    """Fractional family alpha_0 + alpha_1 (2*pi*m/lambda)^(2r).

    alpha_0 = 0 is allowed and yields a symbol that vanishes at m = 0; the
    class report then returns a negative ellipticity verdict.
    """
    if alpha1 <= 0:
        raise DomainError("two_term_fractional needs alpha_1 > 0")
    return LambdaSymbol("two_term_fractional", float(r), (float(alpha0), float(alpha1)), dim)


def custom_table(values, order, derivative=None, dim=None):
    """Matrix-valued symbol from a stored table over m = -m_max .. m_max.

    values has shape (2*m_max + 1, d, d) and must be Hermitian and even in m.
    The table does not depend on lambda; a derivative table of the same shape
    may be supplied (zero is the natural choice) and is required before the
    symbol can enter the geodesic spray.
    """
    vals = np.asarray(values, dtype=complex)
    if vals.ndim != 3 or vals.shape[1] != vals.shape[2] or vals.shape[0] % 2 != 1:
        raise DomainError(f"custom table must have shape (2*m_max + 1, d, d), got {vals.shape}")
    d = vals.shape[1]
    if dim is not None and dim != d:
        raise DomainError(f"declared dim {dim} does not match table dimension {d}")
    m_max = vals.shape[0] // 2
    herm = np.max(np.abs(vals - np.conj(np.swapaxes(vals, 1, 2))))
    if herm > 1e-12 * max(1.0, np.max(np.abs(vals))):
        raise DomainError(f"custom table is not Hermitian, deviation {herm:.3e}")
    even = np.max(np.abs(vals - vals[::-1]))
    if even > 1e-12 * max(1.0, np.max(np.abs(vals))):
        raise DomainError(f"custom table is not even in m, deviation {even:.3e}")
    deriv = None
    if derivative is not None:
        deriv = np.asarray(derivative, dtype=complex)
        if deriv.shape != vals.shape:
            raise DomainError("derivative table shape does not match the value table")
    vals.setflags(write=False)
    if deriv is not None:
        deriv.setflags(write=False)
    return LambdaSymbol("custom_table", float(order), (), d, table=(m_max, vals, deriv))


def _require_lambda(lam):
    if not np.isfinite(lam) or lam <= 0:
        raise DomainError(f"symbol parameter lambda must be positive, got {lam}")


def scalar_values(sym, lam, m):
    """Scalar multiplier values a(lambda, m) for the built-in families."""
    _require_lambda(lam)
    m = np.asarray(m, dtype=float)
    if sym.family == "constant_coefficient":
        y = (TWO_PI * m / lam) ** 2
        return np.polynomial.polynomial.polyval(y, np.asarray(sym.alphas))
    if sym.family == "scale_invariant":
        y = (TWO_PI * m) ** 2
        return lam ** -3 * np.polynomial.polynomial.polyval(y, np.asarray(sym.alphas))
    if sym.family == "bessel_fractional":
        return sym.alphas[0] * (1.0 + (TWO_PI * m / lam) ** 2) ** sym.order
    if sym.family == "two_term_fractional":
        y = (TWO_PI * m / lam) ** 2
        return sym.alphas[0] + sym.alphas[1] * y ** sym.order
    raise NotSupportedError(f"{sym.family} has no scalar values")


def scalar_derivative_values(sym, lam, m):
    """Analytic d/dlambda of the scalar multiplier for built-in families."""
    _require_lambda(lam)
    m = np.asarray(m, dtype=float)
    if sym.family == "constant_coefficient":
        y = (TWO_PI * m / lam) ** 2
        coeffs = np.asarray(sym.alphas) * np.arange(len(sym.alphas))
        return -2.0 / lam * np.polynomial.polynomial.polyval(y, coeffs)
    if sym.family == "scale_invariant":
        return -3.0 / lam * scalar_values(sym, lam, m)
    if sym.family == "bessel_fractional":
        x2 = (TWO_PI * m / lam) ** 2
        return sym.alphas[0] * sym.order * (1.0 + x2) ** (sym.order - 1.0) * (-2.0 * x2 / lam)
    if sym.family == "two_term_fractional":
        y = (TWO_PI * m / lam) ** 2
        out = np.zeros_like(y)
        nz = y > 0
        out[nz] = -2.0 * sym.order / lam * sym.alphas[1] * y[nz] ** sym.order
        return out
    raise NotSupportedError(f"{sym.family} has no scalar derivative")


def _table_lookup(sym, m, which):
    m_max, vals, deriv = sym.table
    m = np.asarray(m, dtype=int)
    if np.max(np.abs(m)) > m_max:
        raise DomainError(f"custom table covers |m| <= {m_max}, requested |m| = {np.max(np.abs(m))}")
    src = vals if which == "value" else deriv
    if src is None:
        raise NotSupportedError("custom table has no lambda-derivative table")
    return src[m + m_max]


def matrix_values(sym, lam, m):
    """(len(m), d, d) symbol matrices; scalar families expand to multiples of I."""
    m = np.atleast_1d(m)
    if sym.is_scalar:
        return scalar_values(sym, lam, m)[:, None, None] * np.eye(sym.dim)
    _require_lambda(lam)
    return _table_lookup(sym, m, "value").copy()


def matrix_derivative_values(sym, lam, m):
    m = np.atleast_1d(m)
    if sym.is_scalar:
        return scalar_derivative_values(sym, lam, m)[:, None, None] * np.eye(sym.dim)
    _require_lambda(lam)
    return _table_lookup(sym, m, "derivative").copy()


def eval_symbol(sym, lam, m):
    """The d x d Hermitian matrix a(lambda, m)."""
    return matrix_values(sym, lam, [int(m)])[0]


def symbol_lambda_derivative(sym, lam, m):
    """The d x d Hermitian matrix d/dlambda a(lambda, m)."""
    return matrix_derivative_values(sym, lam, [int(m)])[0]


def _matrix_sqrt(a):
    w, v = np.linalg.eigh(a)
    if w.min() <= 0:
        raise NotPositiveDefiniteError(f"matrix has a nonpositive eigenvalue {w.min():.3e}")
    return (v * np.sqrt(w)) @ np.conj(v.T)


def sqrt_symbol(sym, lam, m):
    """Unique positive Hermitian square root b with b @ b = a(lambda, m)."""
    a = eval_symbol(sym, lam, m)
    if sym.is_scalar:
        val = a[0, 0].real
        if val <= 0:
            raise NotPositiveDefiniteError(f"symbol value {val:.3e} at m = {m} is not positive")
        return np.sqrt(val) * np.eye(sym.dim)
    return _matrix_sqrt(a)


def _operator_norms(mats):
    """Spectral norms of a stack of matrices."""
    return np.linalg.norm(mats, ord=2, axis=(1, 2))


@dataclass(frozen=True)
class ClassReport:
    """Finite-range symbol-class diagnostics.

    seminorms[alpha] = max over sampled (lambda, m), |m| <= m_max, of
    ||Delta^alpha a(lambda, m)|| <m>^(alpha - 2r), the forward-difference
    seminorm with operator order 2r. margin is the locally uniform
    ellipticity constant min sigma_min(a) <m>^(-2r).
    """

    family: str
    order: float
    m_max: int
    alpha_max: int
    lambdas: tuple
    seminorms: tuple
    margin: float
    hermitian_ok: bool
    positive_ok: bool
    elliptic: bool

    def to_dict(self):
        return {
            "family": self.family,
            "order": self.order,
            "m_max": self.m_max,
            "alpha_max": self.alpha_max,
            "lambdas": list(self.lambdas),
            "seminorms": list(self.seminorms),
            "margin": self.margin,
            "hermitian_ok": self.hermitian_ok,
            "positive_ok": self.positive_ok,
            "elliptic": self.elliptic,
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)


def class_report(sym, lambda_range, m_max=256, alpha_max=3, lambda_samples=5):
    """Numerical class and ellipticity diagnostics over a compact range.

    lambda_range is a positive interval (lo, hi) sampled at lambda_samples
    points. Differences in m are anchored so that Delta^alpha a(m) uses
    a(m), ..., a(m + alpha); anchors run over |m| <= m_max.
    """
    lo, hi = float(lambda_range[0]), float(lambda_range[1])
    if lo <= 0 or hi < lo:
        raise DomainError(f"lambda range must be a positive interval, got ({lo}, {hi})")
    if m_max < 8 or alpha_max < 2 or lambda_samples < 2:
        raise DomainError("class_report needs m_max >= 8, alpha_max >= 2 and at least 2 lambda samples")
    lambdas = np.linspace(lo, hi, lambda_samples)
    ms = np.arange(-m_max - alpha_max, m_max + alpha_max + 1)
    two_r = 2.0 * sym.order
    bracket = np.sqrt(1.0 + ms.astype(float) ** 2)

    seminorms = np.zeros(alpha_max + 1)
    margin = np.inf
    hermitian_ok = True
    positive_ok = True
    for lam in lambdas:
        if sym.is_scalar:
            vals = scalar_values(sym, lam, ms)
            norms = np.abs(vals)
            smallest = vals.copy()
            herm_dev = 0.0
        else:
            mats = matrix_values(sym, lam, ms)
            norms = _operator_norms(mats)
            eigs = np.linalg.eigvalsh(mats)
            smallest = eigs[:, 0]
            herm_dev = float(np.max(np.abs(mats - np.conj(np.swapaxes(mats, 1, 2)))))
        if herm_dev > 1e-12 * max(1.0, norms.max()):
            hermitian_ok = False
        inner = np.abs(ms) <= m_max
        if smallest[inner].min() <= 0:
            positive_ok = False
        margin = min(margin, float((np.maximum(smallest[inner], 0.0) * bracket[inner] ** (-two_r)).min()))
        for alpha in range(alpha_max + 1):
            if sym.is_scalar:
                diffs = np.diff(vals, n=alpha) if alpha else vals
                dnorm = np.abs(diffs)
            else:
                diffs = np.diff(mats, n=alpha, axis=0) if alpha else mats
                dnorm = _operator_norms(diffs)
            anchors = ms[: diffs.shape[0]]
            keep = np.abs(anchors) <= m_max
            weight = np.sqrt(1.0 + anchors[keep].astype(float) ** 2) ** (alpha - two_r)
            seminorms[alpha] = max(seminorms[alpha], float(np.max(dnorm[keep] * weight)))
    return ClassReport(
        family=sym.family,
        order=sym.order,
        m_max=int(m_max),
        alpha_max=int(alpha_max),
        lambdas=tuple(float(x) for x in lambdas),
        seminorms=tuple(float(x) for x in seminorms),
        margin=float(margin),
        hermitian_ok=bool(hermitian_ok),
        positive_ok=bool(positive_ok),
        elliptic=bool(positive_ok and margin > 0.0),
    )


__all__ = [
    "FAMILIES",
    "ClassReport",
    "LambdaSymbol",
    "bessel_fractional",
    "class_report",
    "constant_coefficient",
    "custom_table",
    "eval_symbol",
    "matrix_derivative_values",
    "matrix_values",
    "scalar_derivative_values",
    "scalar_values",
    "scale_invariant",
    "sqrt_symbol",
    "symbol_lambda_derivative",
    "two_term_fractional",
]
