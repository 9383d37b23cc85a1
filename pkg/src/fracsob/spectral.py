"""FFT helpers on the uniform periodic grid theta_k = 2*pi*k/N.

Conventions: modes run over m in [-N/2, N/2) for even N. Odd-order
derivatives zero the Nyquist mode; the trigonometric interpolant carries the
Nyquist coefficient as a pure cosine so that real samples interpolate to a
real function.
"""

import numpy as np

TWO_PI = 2.0 * np.pi


def grid(n):
    """Sample points theta_k = 2*pi*k/n."""
    return np.arange(n) * (TWO_PI / n)


def modes(n):
    """Integer FFT mode numbers in FFT storage order."""
    m = np.arange(n)
    m[m >= (n + 1) // 2] -= n
    return m


def spectral_derivative(u, order=1):
    """Differentiate periodic samples by mode multiplication.

    Works on (n,) and (n, d) arrays along the first axis. For odd orders the
    Nyquist mode is zeroed, matching the cosine convention of the
    interpolant.
    """
    u = np.asarray(u, dtype=float)
    n = u.shape[0]
    fac = (1j * modes(n)) ** order
    if order % 2 == 1 and n % 2 == 0:
        fac[n // 2] = 0.0
    coef = np.fft.fft(u, axis=0)
    coef *= fac.reshape((n,) + (1,) * (u.ndim - 1))
    return np.real(np.fft.ifft(coef, axis=0))


def dealias(u):
    """Zero every mode above the two-thirds cutoff |m| > n // 3."""
    u = np.asarray(u, dtype=float)
    n = u.shape[0]
    keep = np.abs(modes(n)) <= n // 3
    coef = np.fft.fft(u, axis=0)
    coef[~keep] = 0.0
    return np.real(np.fft.ifft(coef, axis=0))


def interp_matrix(points, n):
    """Evaluation matrix of the degree-n trigonometric interpolant.

    Row p maps FFT coefficients (fft(u)/n) to the interpolant value at
    points[p]. The Nyquist column is cos(n*theta/2). Columns are built by
    the recurrence e^(i(k+1)x) = e^(ikx) e^(ix), which is several times
    cheaper than exponentiating the full outer product.
    """
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    ee = np.empty((pts.shape[0], n), dtype=complex)
    ee[:, 0] = 1.0
    base = np.exp(1j * pts)
    k_top = (n - 1) // 2
    for k in range(1, k_top + 1):
        ee[:, k] = ee[:, k - 1] * base
        ee[:, n - k] = np.conj(ee[:, k])
    if n % 2 == 0:
        ee[:, n // 2] = np.cos(0.5 * n * pts)
    return ee


def trig_interp(u, points, matrix=None):
    """Evaluate the trigonometric interpolant of samples u at arbitrary points.

    Exact for band-limited u. A precomputed matrix from interp_matrix may be
    passed to amortize repeated evaluations at the same points.
    """
    u = np.asarray(u, dtype=float)
    n = u.shape[0]
    ee = interp_matrix(points, n) if matrix is None else matrix
    coef = np.fft.fft(u, axis=0) / n
    return np.real(ee @ coef)


def theta_antiderivative(g):
    """Cumulative integral F(theta_k) = int_0^theta_k g of periodic samples.

    Returns (F, mean). F includes the linear ramp mean*theta, so it is
    periodic exactly when the mean vanishes; F[0] = 0. The Nyquist mode
    integrates to zero at every grid node and is dropped.
    """
    g = np.asarray(g, dtype=float)
    if g.ndim != 1:
        raise ValueError("theta_antiderivative expects a scalar field")
    n = g.shape[0]
    m = modes(n)
    coef = np.fft.fft(g) / n
    mean = float(np.real(coef[0]))
    div = np.zeros(n, dtype=complex)
    nz = m != 0
    div[nz] = coef[nz] / (1j * m[nz])
    if n % 2 == 0:
        div[n // 2] = 0.0
    osc = np.real(np.fft.ifft(div * n))
    return osc - osc[0] + mean * grid(n), mean
