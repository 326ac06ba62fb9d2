"""Maxwell-Boltzmann velocity averaging of resonant denominators.

All velocity integrals in the model have the form

    <prod_p 1 / (a_p(delta) - k_p(delta) v)>_v = int dv f(v) prod_p 1 / (a_p - k_p v)

with complex ``a_p`` (detuning minus i*linewidth) and real ``k_p``. Two rules
are provided:

``trapezoid``
    uniform nodes over +/- 6 most-probable speeds. For an integrand analytic in
    a strip of half-width d around the real axis the error falls like
    exp(-2 pi d / h); the nearest pole sits gamma/k (about 2 m/s for the D1 line)
    off the axis, so 4001 nodes (h = 0.8 m/s) resolve even on-resonance points.
``gauss-hermite``
    v = vbar * x against the exp(-x^2) weight. Exact for polynomials and
    excellent off resonance, but it cannot resolve a Doppler-resolved
    Lorentzian, so it is used where every pole lies outside the distribution.

Each evaluation carries a self-check: the trapezoid rule is compared with its
own every-other-node subset, Gauss-Hermite with a rule of twice the nodes.
"""
import math

import numpy as np
from scipy import constants as sc

from .. import _backend
from ..errors import ConvergenceError, ValidationError
from ..parallel import chunk_bounds, resolve_threads, run_chunks

TRAPEZOID_NODES = 4001
TRAPEZOID_SPAN = 6.0
HERMITE_NODES = 64
# the half-resolution trapezoid error is roughly the square root of the full one
TRAPEZOID_RTOL = 1e-3
HERMITE_RTOL = 1e-6


def maxwell_boltzmann_pdf(v_m_s, medium):
    """1-D Maxwell-Boltzmann density sqrt(m / 2 pi kB T) exp(-m v^2 / 2 kB T)."""
    v = np.asarray(v_m_s, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValidationError("velocity must be finite")
    kt = sc.k * medium.temperature_K
    m = medium.atomic_mass_kg
    return math.sqrt(m / (2.0 * math.pi * kt)) * np.exp(-m * v * v / (2.0 * kt))


def trapezoid_rule(medium, n=TRAPEZOID_NODES, span=TRAPEZOID_SPAN):
    """Nodes and weights (density folded in) of the trapezoid rule on [-span, span]*vbar."""
    if n < 3 or n % 2 == 0:
        raise ValidationError("trapezoid rule needs an odd node count >= 3")
    vbar = medium.most_probable_speed_m_s
    v = np.linspace(-span * vbar, span * vbar, n)
    h = v[1] - v[0]
    w = maxwell_boltzmann_pdf(v, medium) * h
    w[0] *= 0.5
    w[-1] *= 0.5
    return v, w


def gauss_hermite_rule(medium, n=HERMITE_NODES):
    x, wx = np.polynomial.hermite.hermgauss(n)
    return medium.most_probable_speed_m_s * x, wx / math.sqrt(math.pi)


def _evaluate(a, k, v, w, threads, backend):
    kern = _backend.get(backend).pole_product_average
    out = np.empty(a.shape[0], dtype=complex)
    a = np.ascontiguousarray(a, dtype=complex)
    k = np.ascontiguousarray(k, dtype=float)
    v = np.ascontiguousarray(v, dtype=float)
    w = np.ascontiguousarray(w, dtype=float)

    def work(start, stop):
        kern(a, k, v, w, out, start, stop)

    # fixed-size chunks: each row is summed in the same order whatever the thread count
    bounds = chunk_bounds(a.shape[0], max(1, -(-a.shape[0] // 512)))
    run_chunks(work, bounds, threads)
    return out


def _relative_change(value, other):
    scale = np.max(np.abs(value))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(value - other)) / scale)


def pole_average(a, k, medium, method="trapezoid", nodes=None, rtol=None, check=True,
                 threads=None, backend=None):
    """Velocity average of prod_p 1/(a[:, p] - k[:, p] v); returns one complex per row.

    Raises :class:`ConvergenceError` when the self-check exceeds ``rtol``.
    """
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    k = np.atleast_2d(np.asarray(k, dtype=float))
    if a.ndim != 2 or a.shape != k.shape:
        raise ValidationError("a and k must have matching (n_points, n_poles) shapes")
    threads = resolve_threads(threads)

    if method == "trapezoid":
        v, w = trapezoid_rule(medium, nodes or TRAPEZOID_NODES)
        value = _evaluate(a, k, v, w, threads, backend)
        if check:
            vc, wc = v[::2], 2.0 * w[::2]
            wc[0] *= 0.5
            wc[-1] *= 0.5
            other = _evaluate(a, k, vc, wc, threads, backend)
            tol = TRAPEZOID_RTOL if rtol is None else rtol
    elif method == "gauss-hermite":
        n = nodes or HERMITE_NODES
        v, w = gauss_hermite_rule(medium, n)
        value = _evaluate(a, k, v, w, threads, backend)
        if check:
            v2, w2 = gauss_hermite_rule(medium, 2 * n)
            other = _evaluate(a, k, v2, w2, threads, backend)
            tol = HERMITE_RTOL if rtol is None else rtol
    else:
        raise ValidationError(f"unknown quadrature {method!r}")

    if check:
        change = _relative_change(value, other)
        if not change <= tol:
            raise ConvergenceError(
                f"{method} velocity quadrature not converged: relative change {change:.3g} > {tol:.3g}"
            )
    return value
