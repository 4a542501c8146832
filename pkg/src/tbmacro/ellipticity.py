"""Ellipticity margins and remainder exponents for effective symbols.

Two diagnostics certify that a polynomial symbol controls the operator
norm the way a Dirac operator should.  The sampled margin fits the best
constant c in  |det(delta b)|^{1/n} >= c <delta zeta>^p - 1/c  and reports
the worst slack; the unit-circle function is the closed-form leading
term of the honeycomb family, whose non-vanishing on |z| = 1 certifies
the same bound structurally at every order.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import InvalidParameterError
from .symbols import PolySymbol, TrigSymbol

__all__ = [
    "EllipticityReport", "RemainderScan", "unit_circle_f",
    "unit_circle_min", "ellipticity_check", "remainder_scan",
]


def unit_circle_f(p: int, z):
    """Leading-order determinant factor 2^{-p} sum_{m in I_p} C(p,m) z^m zbar^{p-m}.

    The index set keeps m with p + m - 1 divisible by 3; the honeycomb
    phase sums kill every other monomial.
    """
    if p < 1:
        raise InvalidParameterError(f"order must be >= 1, got {p}")
    z = np.asarray(z, dtype=complex)
    zb = np.conj(z)
    out = np.zeros_like(z)
    for m in range(p + 1):
        if (p + m - 1) % 3 == 0:
            out = out + comb(p, m) * z ** m * zb ** (p - m)
    return out / 2 ** p


def _unit_circle_f_alt(p: int, z):
    """Same function through the three-fold symmetrized binomial identity."""
    z = np.asarray(z, dtype=complex)
    zb = np.conj(z)
    w = np.exp(2j * np.pi / 3)
    ph = np.exp(2j * np.pi * (p - 1) / 3)
    total = (z + zb) ** p + ph * (w * z + zb) ** p + np.conj(ph) * (np.conj(w) * z + zb) ** p
    return total / (3 * 2 ** p)


def unit_circle_min(p: int, n_theta: int = 10_000) -> float:
    theta = np.linspace(0.0, 2 * np.pi, n_theta, endpoint=False)
    return float(np.min(np.abs(unit_circle_f(p, np.exp(1j * theta)))))


@dataclass(frozen=True)
class EllipticityReport:
    p: int
    c: float                 # fitted ellipticity constant
    margin: float            # min slack of the fitted bound on the check half
    unit_circle_min: float   # min |f| on |z| = 1 for the same order
    n_samples: int

    @property
    def certified(self) -> bool:
        return self.margin >= 0.0 and self.unit_circle_min > 0.0


def ellipticity_check(b: PolySymbol, delta_grid, zeta_grid, X_samples,
                      n_theta: int = 10_000, rng=None) -> EllipticityReport:
    """Fit c in the determinant lower bound and report the worst slack.

    Samples all (delta, zeta, X) combinations, computes the per-sample
    largest admissible constant, fits c on a random half, and evaluates
    the resulting margin on the other half (a cross-validated certificate
    rather than a tautology).
    """
    rng = np.random.default_rng(5) if rng is None else rng
    deltas = np.atleast_1d(np.asarray(delta_grid, dtype=float))
    zetas = np.atleast_2d(np.asarray(zeta_grid, dtype=float))
    Xs = np.atleast_2d(np.asarray(X_samples, dtype=float))
    dvals = []
    tvals = []
    for delta in deltas:
        vals = b(Xs[:, None, :], zetas[None, :, :], delta)  # (nX, nZ, n, n)
        det = np.abs(np.linalg.det(delta * vals)) ** (1.0 / b.n)
        dz = delta * zetas
        bracket = np.sqrt(1.0 + np.sum(dz * dz, axis=-1)) ** b.p  # (nZ,)
        dvals.append(det.reshape(-1))
        tvals.append(np.broadcast_to(bracket[None, :], det.shape).reshape(-1))
    d = np.concatenate(dvals)
    t = np.concatenate(tvals)
    # largest c with c*t - 1/c <= d, per sample
    c_per = (d + np.sqrt(d * d + 4.0 * t)) / (2.0 * t)
    idx = rng.permutation(d.size)
    half = d.size // 2
    fit_idx, check_idx = idx[:half], idx[half:]
    c = float(np.min(c_per[fit_idx]))
    margin = float(np.min(d[check_idx] - (c * t[check_idx] - 1.0 / c)))
    return EllipticityReport(p=b.p, c=c, margin=margin,
                             unit_circle_min=unit_circle_min(b.p, n_theta),
                             n_samples=int(d.size))


@dataclass(frozen=True)
class RemainderScan:
    deltas: np.ndarray
    residuals: np.ndarray
    slope: float             # fitted log-log exponent, expect p + 1


def remainder_scan(a: TrigSymbol, b: PolySymbol, delta_list, zeta_box: float,
                   X_samples, n_zeta: int = 9, norm: str = "max") -> RemainderScan:
    """Sup-norm residual of the order-p expansion across a delta scan.

    For each delta, evaluates the lattice symbol at momenta K + delta*zeta
    minus its polynomial approximation E + delta*b, weights by
    <zeta>^{-(p+1)}, takes the max over samples, and fits the log-log
    slope; the expansion order p is validated by slope = p + 1.
    """
    deltas = np.sort(np.asarray(delta_list, dtype=float))[::-1]
    if deltas.size < 3:
        raise InvalidParameterError(
            f"need at least 3 delta values for a slope fit, got {deltas.size}")
    if np.any(deltas <= 0):
        raise InvalidParameterError("delta values must be positive")
    Xs = np.atleast_2d(np.asarray(X_samples, dtype=float))
    grid = np.linspace(-zeta_box, zeta_box, n_zeta)
    Z = np.stack(np.meshgrid(grid, grid, indexing="ij"), axis=-1).reshape(-1, a.d) \
        if a.d == 2 else grid.reshape(-1, 1)
    bracket = np.sqrt(1.0 + np.sum(Z * Z, axis=-1)) ** (b.p + 1)
    E = b.E
    K = b.K
    res = np.empty(deltas.size)
    eye = np.eye(a.n)
    for i, delta in enumerate(deltas):
        xi = K[None, :] + delta * Z
        full = a(Xs[:, None, :], xi[None, :, :], delta)
        approx = E * eye + delta * b(Xs[:, None, :], Z[None, :, :], delta)
        diff = full - approx
        if norm == "max":
            mags = np.max(np.abs(diff), axis=(-1, -2))
        else:
            mags = np.linalg.norm(diff, axis=(-1, -2))
        res[i] = float(np.max(mags / bracket[None, :]))
    floor = 1e-300
    if np.all(res < 1e-14 * max(1.0, float(np.max(res, initial=0.0)))) or np.all(res == 0.0):
        # expansion is exact; report an infinite decay exponent
        slope = np.inf
    else:
        slope = float(np.polyfit(np.log(deltas), np.log(np.maximum(res, floor)), 1)[0])
    return RemainderScan(deltas=deltas, residuals=res, slope=slope)
