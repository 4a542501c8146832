"""Bulk-difference invariant of two-band interface symbols.

A symbol b = sum_j f_j sigma_j over the half-space variables
(X2, zeta1, zeta2) carries an integer interface invariant

    BDI = - sum over zeros of f  of  sign det J,

with J the 3x3 derivative matrix J[m, n] = d f_n / d x_m.  Zeros are
located by Newton iteration with analytic Jacobians from a seeded grid;
an independent boundary-winding degree over the zeta plane cross-checks
the total charge.  The shipped families expose how the invariant changes
across gauge parameters and how a high-frequency regularization restores
the physical value.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dfield

import numpy as np

from .errors import (CoverageError, DegenerateZeroError, InvalidParameterError,
                     ResolutionError)

__all__ = [
    "ScalarSwitch", "tanh_switch_profile", "arctan_switch_profile",
    "VectorField3", "ZeroSearch", "BDIResult", "find_zeros", "bdi",
    "dirac_interface_family", "haldane_gauge_family", "regularized_family",
    "zeta_boundary_degree",
]


# ---------------------------------------------------------------------------
# interface mass profiles (one transversal sign change)


@dataclass(frozen=True)
class ScalarSwitch:
    """Switch function of one variable with an analytic derivative."""

    fn: callable
    deriv: callable
    expr: str
    width: float = 1.0  # transition length scale, used to size search boxes

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=float))


def tanh_switch_profile(slope: float = 1.0) -> ScalarSwitch:
    s = float(slope)

    def df(x):
        # sech^2 without cosh overflow at large argument
        e = np.exp(-2.0 * np.abs(s * x))
        return s * 4.0 * e / (1.0 + e) ** 2

    return ScalarSwitch(lambda x: np.tanh(s * x), df,
                        f"tanh({s:g} x)", width=1.0 / abs(s))


def arctan_switch_profile(slope: float = 1.0) -> ScalarSwitch:
    # (2/pi) arctan(pi s x / 2) has slope s at the origin, range (-1, 1)
    s = float(slope)
    c = np.pi * s / 2

    def f(x):
        return (2 / np.pi) * np.arctan(c * x)

    def df(x):
        return s / (1 + (c * x) ** 2)

    return ScalarSwitch(f, df, f"(2/pi) arctan(pi {s:g} x / 2)", width=1.0 / abs(s))


# ---------------------------------------------------------------------------
# the field object


@dataclass(frozen=True)
class VectorField3:
    """R^3 -> R^3 field over (X2, zeta1, zeta2) with analytic Jacobian.

    `jac` returns J[..., m, n] = d f_n / d x_m (derivative index first,
    matching the sign convention of the interface invariant).
    """

    f: callable
    jac: callable
    box: tuple      # ((x2-, x2+), (z1-, z1+), (z2-, z2+))
    name: str = ""
    meta: dict = dfield(default_factory=dict)

    def __call__(self, P):
        return self.f(np.asarray(P, dtype=float))


@dataclass(frozen=True)
class ZeroSearch:
    zeros: np.ndarray          # (L, 3)
    jacobians: np.ndarray      # (L, 3, 3)
    residuals: np.ndarray      # (L,)
    converged_fraction: float  # among seeds launched in sign-change cells
    warnings: tuple            # coverage diagnostics


@dataclass(frozen=True)
class BDIResult:
    zeros: np.ndarray
    charges: np.ndarray        # per-zero -sign det J
    bdi: int
    warnings: tuple


def _seed_grid(box, density):
    axes = [np.linspace(lo, hi, n) for (lo, hi), n in zip(box, density)]
    P = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    return axes, P


def find_zeros(field: VectorField3, box=None, density=(9, 31, 31),
               tol: float = 1e-12, max_iter: int = 40,
               dedup_radius: float = 1e-6, boundary_margin: float = 0.02,
               min_converged: float = 0.5) -> ZeroSearch:
    """Newton search for all zeros of the field inside the box.

    Seeds an axis-aligned grid, iterates Newton with the analytic
    Jacobian, keeps converged points, deduplicates in box-normalized
    coordinates, and flags zeros that sit within `boundary_margin` of
    the box edge (charge may be migrating out of the search region).
    """
    box = tuple(field.box if box is None else box)
    axes, seeds = _seed_grid(box, density)
    fvals = field.f(seeds)
    scale = float(np.median(np.abs(fvals))) or 1.0

    # cells where every component changes sign hold the candidate zeros;
    # Newton convergence is graded on seeds from those cells only
    signs = np.sign(fvals)
    active = np.ones(tuple(n - 1 for n in (len(a) for a in axes)), dtype=bool)
    for comp in range(3):
        s = signs[..., comp]
        lo = s[:-1, :-1, :-1]
        change = np.zeros_like(active)
        for dx in (0, 1):
            for dy in (0, 1):
                for dz in (0, 1):
                    corner = s[dx:dx + active.shape[0],
                               dy:dy + active.shape[1],
                               dz:dz + active.shape[2]]
                    change |= (corner * lo) <= 0
        active &= change
    active_mask = np.zeros(seeds.shape[:-1], dtype=bool)
    idx = np.argwhere(active)
    for dx in (0, 1):
        for dy in (0, 1):
            for dz in (0, 1):
                active_mask[idx[:, 0] + dx, idx[:, 1] + dy, idx[:, 2] + dz] = True

    P = seeds.reshape(-1, 3).copy()
    act = active_mask.reshape(-1)
    alive = np.ones(len(P), dtype=bool)
    # per-axis trust region: two grid cells; keeps the mass coordinate from
    # being flung onto the saturated plateau by a large momentum residual
    cap = np.array([2.0 * (a[1] - a[0]) for a in axes])
    for _ in range(max_iter):
        fv = field.f(P[alive])
        res = np.max(np.abs(fv), axis=-1)
        if not len(res):
            break
        done = res <= tol * max(scale, 1.0)
        J = field.jac(P[alive])           # (k, 3, 3), J[m, n] = d_m f_n
        Jstd = np.swapaxes(J, -1, -2)     # standard Jacobian d f_m / d x_n
        ok = np.abs(np.linalg.det(Jstd)) > 1e-300
        step = np.zeros_like(fv)
        if np.any(ok):
            step[ok] = np.linalg.solve(Jstd[ok], fv[ok][..., None])[..., 0]
        step = np.clip(step, -cap, cap)
        # backtracking keeps basins large: full Newton overshoots on the
        # saturating mass profile well before the residual target is met
        cur = P[alive]
        best = cur.copy()
        best_res = res.copy()
        improved = np.zeros(len(cur), dtype=bool)
        lam = 1.0
        for _bt in range(6):
            cand = cur - lam * step
            finite = np.all(np.isfinite(cand), axis=-1)
            cres = np.full_like(best_res, np.inf)
            if np.any(finite):
                cres[finite] = np.max(np.abs(field.f(cand[finite])), axis=-1)
            take = ~done & ~improved & (cres < best_res)
            best[take] = cand[take]
            best_res[take] = cres[take]
            improved |= take
            if np.all(improved | done):
                break
            lam *= 0.5
        good = ok & (improved | done)
        sub = np.where(alive)[0]
        P[sub[good]] = best[good]
        alive[sub[~good]] = False

    fv = field.f(P)
    res = np.max(np.abs(fv), axis=-1)
    widths = np.array([hi - lo for lo, hi in box])
    inside = np.all((P >= np.array([lo for lo, _ in box]) - 1e-9 * widths)
                    & (P <= np.array([hi for _, hi in box]) + 1e-9 * widths),
                    axis=-1)
    converged = alive & (res < 1e-10 * max(scale, 1.0)) & inside

    n_active = int(np.sum(act))
    frac = float(np.sum(converged & act)) / n_active if n_active else 1.0
    if n_active and frac < min_converged:
        raise ResolutionError(
            f"only {frac:.0%} of seeds near sign-change cells converged; "
            "refine the seed density or shrink the box")

    # dedup in normalized coordinates
    Pn = (P[converged] - np.array([lo for lo, _ in box])) / widths
    order = np.argsort(res[converged])
    accepted = []
    accepted_n = []
    for i in order:
        q = Pn[i]
        if all(np.max(np.abs(q - r)) > dedup_radius for r in accepted_n):
            accepted_n.append(q)
            accepted.append(i)
    Pc = P[converged][accepted]
    Jc = field.jac(Pc) if len(Pc) else np.zeros((0, 3, 3))
    rc = res[converged][accepted] if len(Pc) else np.zeros(0)

    warns = []
    for k, z in enumerate(Pc):
        rel = (z - np.array([lo for lo, _ in box])) / widths
        if np.any(rel < boundary_margin) or np.any(rel > 1 - boundary_margin):
            warns.append(
                f"zero {k} at {np.round(z, 6).tolist()} lies within "
                f"{boundary_margin:.0%} of the search-box boundary")
    return ZeroSearch(zeros=Pc, jacobians=Jc, residuals=rc,
                      converged_fraction=frac, warnings=tuple(warns))


def bdi(field: VectorField3, box=None, density=(9, 31, 31),
        conditioning_floor: float = 1e-8, strict: bool = True,
        **kwargs) -> BDIResult:
    """Interface invariant -sum sign det J over the zeros in the box.

    With `strict`, zeros hugging the box boundary abort the computation
    (their charge may not be fully inside); a Jacobian determinant under
    the conditioning floor means a non-transversal zero and an undefined
    invariant either way.
    """
    zs = find_zeros(field, box=box, density=density, **kwargs)
    if strict and zs.warnings:
        raise CoverageError("; ".join(zs.warnings))
    charges = np.zeros(len(zs.zeros), dtype=int)
    for k, J in enumerate(zs.jacobians):
        det = float(np.linalg.det(J))
        jscale = max(1.0, float(np.max(np.abs(J))))
        if abs(det) < conditioning_floor * jscale ** 3:
            raise DegenerateZeroError(
                f"zero {k} at {np.round(zs.zeros[k], 6).tolist()} has "
                f"|det J| = {abs(det):.3e}, below the transversality floor; "
                "invariant undefined")
        charges[k] = -int(np.sign(det))
    return BDIResult(zeros=zs.zeros, charges=charges,
                     bdi=int(np.sum(charges)), warnings=zs.warnings)


# ---------------------------------------------------------------------------
# shipped families


def _default_box(delta: float, v: float, profile: ScalarSwitch,
                 zeta_reach: float = 12.0):
    zmax = zeta_reach / (delta * v)
    w = 5.0 * profile.width
    return ((-w, w), (-zmax, zmax), (-zmax, zmax))


def dirac_interface_family(v: float = 1.0, t1: float = 1.0,
                           profile: ScalarSwitch | None = None,
                           delta: float = 0.05) -> VectorField3:
    """First-order conical family: one zero, invariant -1 for rising mass."""
    profile = tanh_switch_profile() if profile is None else profile
    c = np.sqrt(3) * v / 2 * t1

    def f(P):
        X2, z1, z2 = P[..., 0], P[..., 1], P[..., 2]
        return np.stack([c * z2, -c * z1, profile(X2)], axis=-1)

    def jac(P):
        X2 = P[..., 0]
        J = np.zeros(P.shape[:-1] + (3, 3))
        J[..., 2, 0] = c
        J[..., 1, 1] = -c
        J[..., 0, 2] = profile.deriv(X2)
        return J

    return VectorField3(f, jac, _default_box(delta, v, profile),
                        name="dirac_interface",
                        meta={"v": v, "t1": t1, "delta": delta,
                              "profile": profile.expr})


def haldane_gauge_family(h: float, delta: float, v: float = 1.0,
                         t1: float = 1.0,
                         profile: ScalarSwitch | None = None) -> VectorField3:
    """Gauge-parameter family of the second-order interface symbol.

    The quadratic valley correction acquires an h-dependent shape under
    the gauge change; the invariant is +2 for -1/2 < h < 1/4 and 0 for
    h > 1/4, exhibiting its gauge sensitivity.  The order-delta term
    proportional to (I - sigma3)/2 generated by the same transformation
    is dropped: it is uniformly small against the interface gap and
    moves no zeros.
    """
    profile = tanh_switch_profile() if profile is None else profile
    c = np.sqrt(3) * v / 2
    q1 = v * v / 8
    q2 = v * v / 4

    def f(P):
        X2, z1, z2 = P[..., 0], P[..., 1], P[..., 2]
        f1 = t1 * (c * z2 + delta * q1 * (z2 * z2 - z1 * z1 + 4 * h * z1 * z1))
        f2 = t1 * (-c * z1 + delta * q2 * (1 + 2 * h) * z1 * z2)
        return np.stack([f1, f2, profile(X2)], axis=-1)

    def jac(P):
        X2, z1, z2 = P[..., 0], P[..., 1], P[..., 2]
        J = np.zeros(P.shape[:-1] + (3, 3))
        J[..., 1, 0] = t1 * delta * q1 * (8 * h - 2) * z1
        J[..., 2, 0] = t1 * (c + delta * q2 * z2)
        J[..., 1, 1] = t1 * (-c + delta * q2 * (1 + 2 * h) * z2)
        J[..., 2, 1] = t1 * delta * q2 * (1 + 2 * h) * z1
        J[..., 0, 2] = profile.deriv(X2)
        return J

    return VectorField3(f, jac, _default_box(delta, v, profile),
                        name="haldane_gauge",
                        meta={"h": h, "v": v, "t1": t1, "delta": delta,
                              "profile": profile.expr,
                              "dropped_term": "order-delta (I-sigma3)/2 gauge "
                                              "remnant, uniformly below the gap"})


def gauge_family_known_zeros(h: float, delta: float, v: float = 1.0):
    """Closed-form zeta-plane zeros of the gauge family (mass zero at X2=0)."""
    zeros = [(0.0, 0.0, 0.0), (0.0, 0.0, -4 * np.sqrt(3) / (delta * v))]
    if -0.5 < h < 0.25:
        z2 = 2 * np.sqrt(3) / (delta * v) / (1 + 2 * h)
        z1 = 6 / (delta * v) * np.sqrt((1 + 4 * h / 3) / (1 - 4 * h)) / (1 + 2 * h)
        zeros += [(0.0, z1, z2), (0.0, -z1, z2)]
    return np.array(zeros)


def regularized_family(alpha: float, delta: float, v: float = 1.0,
                       t1: float = 1.0,
                       profile: ScalarSwitch | None = None) -> VectorField3:
    """Second-order family with the high-frequency damped correction.

    The quadratic term is divided by 1 + alpha^2 delta <zeta>, which
    keeps the second-order accuracy near the valley but prevents the
    correction from overpowering the conical term at momenta of order
    1/delta.  For alpha^2 above v/(4 sqrt 3) no spurious zeros survive
    at any radius and the invariant equals the first-order value -1.
    """
    profile = tanh_switch_profile() if profile is None else profile
    c = np.sqrt(3) * v / 2
    q1 = v * v / 8
    q2 = v * v / 4
    a2 = alpha * alpha

    def parts(P):
        z1, z2 = P[..., 1], P[..., 2]
        br = np.sqrt(1.0 + z1 * z1 + z2 * z2)
        D = 1.0 + a2 * delta * br
        return z1, z2, br, D

    def f(P):
        X2 = P[..., 0]
        z1, z2, br, D = parts(P)
        f1 = t1 * (c * z2 + delta * q1 * (z2 * z2 - z1 * z1) / D)
        f2 = t1 * (-c * z1 + delta * q2 * z1 * z2 / D)
        return np.stack([f1, f2, profile(X2)], axis=-1)

    def jac(P):
        X2 = P[..., 0]
        z1, z2, br, D = parts(P)
        D1 = a2 * delta * z1 / br
        D2 = a2 * delta * z2 / br
        J = np.zeros(P.shape[:-1] + (3, 3))
        J[..., 1, 0] = t1 * delta * q1 * (-2 * z1 / D - (z2 * z2 - z1 * z1) * D1 / D ** 2)
        J[..., 2, 0] = t1 * (c + delta * q1 * (2 * z2 / D - (z2 * z2 - z1 * z1) * D2 / D ** 2))
        J[..., 1, 1] = t1 * (-c + delta * q2 * (z2 / D - z1 * z2 * D1 / D ** 2))
        J[..., 2, 1] = t1 * delta * q2 * (z1 / D - z1 * z2 * D2 / D ** 2)
        J[..., 0, 2] = profile.deriv(X2)
        return J

    return VectorField3(f, jac, _default_box(delta, v, profile),
                        name="regularized",
                        meta={"alpha": alpha, "v": v, "t1": t1, "delta": delta,
                              "profile": profile.expr})


# ---------------------------------------------------------------------------
# independent degree oracle


def zeta_boundary_degree(field: VectorField3, box=None, x2: float = 0.0,
                         n_boundary: int = 8192) -> int:
    """Winding number of (f1, f2) around the zeta-box boundary at fixed X2.

    For the shipped families (f1, f2) is independent of X2, so this is
    the Brouwer degree of the planar part: it equals sum sign det J2 over
    interior zeros, i.e. -BDI when the mass slope is positive.  Computed
    by accumulating angle increments along a dense counterclockwise
    boundary loop.
    """
    box = tuple(field.box if box is None else box)
    (z1lo, z1hi), (z2lo, z2hi) = box[1], box[2]
    per_side = n_boundary // 4
    t = np.linspace(0.0, 1.0, per_side, endpoint=False)
    bottom = np.stack([z1lo + (z1hi - z1lo) * t, np.full_like(t, z2lo)], -1)
    right = np.stack([np.full_like(t, z1hi), z2lo + (z2hi - z2lo) * t], -1)
    top = np.stack([z1hi - (z1hi - z1lo) * t, np.full_like(t, z2hi)], -1)
    left = np.stack([np.full_like(t, z1lo), z2hi - (z2hi - z2lo) * t], -1)
    loop = np.concatenate([bottom, right, top, left], axis=0)
    P = np.concatenate([np.full((len(loop), 1), x2), loop], axis=-1)
    fv = field.f(P)
    w = fv[:, 0] + 1j * fv[:, 1]
    if np.any(np.abs(w) == 0):
        raise InvalidParameterError("zero of (f1, f2) on the boundary loop")
    ang = np.angle(np.roll(w, -1) / w)
    if np.max(np.abs(ang)) > 2.5:
        raise ResolutionError(
            "boundary sampling too coarse: angle step near pi, increase "
            "n_boundary")
    total = float(np.sum(ang)) / (2 * np.pi)
    deg = int(np.rint(total))
    if abs(total - deg) > 1e-6:
        raise ResolutionError(f"non-integer boundary winding {total:.3e}")
    return deg
