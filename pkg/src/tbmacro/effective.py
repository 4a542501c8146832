"""Closed-form effective Dirac symbols for modulated honeycomb models.

These builders write down the continuum symbols directly; the Taylor
machinery in `symbols` derives the same objects from the lattice side,
and the two routes are cross-checked in the test suite.  Conventions:
the stored polynomial b multiplies one overall power of delta (the
effective Hamiltonian is delta * Op[b] in microscopic units), the
expansion point sits at level E = 0, and the untwisted degenerate
momentum is K = -(4 pi / 3 v)(0, 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfigError, InvalidParameterError, UnsupportedOrderError
from .fields import Constant, Field, VectorField, as_field, plane_wave
from .lattice import LatticeGeometry, honeycomb_geometry
from .pauli import SIGMA1, SIGMA2, SIGMA3, SIGMA_MINUS, SIGMA_PLUS, rotation
from .symbols import PolySymbol

# checked against the lattice machinery: conical-slope factor per unit t1
DIRAC_SPEED = np.sqrt(3) / 2  # times v


def staggered_mass(M, t2, sign: float = -1.0) -> Field:
    """Combined sigma3 coefficient M + sign*(3 sqrt(3)/2) t2 at a valley."""
    return as_field(M) + sign * (3 * np.sqrt(3) / 2) * as_field(t2)


def _add_dirac(sym: PolySymbol, t1: Field, v: float, R: np.ndarray) -> None:
    # zeta . R sigma with R acting on the Pauli vector (sigma1, sigma2)
    smats = (SIGMA1, SIGMA2)
    for j in range(2):
        mat = sum(R[j, k] * smats[k] for k in range(2))
        sym.add((1 - j, j), DIRAC_SPEED * v * mat, coeff=t1)


def _strain_alpha(strain, conj_phases: bool = False):
    """Complex 2-vector field a_{1,1} + e^{-i2pi/3} a_{2,1} + e^{i2pi/3} a_{3,1}."""
    w = np.exp(-2j * np.pi / 3)
    phases = (1.0, np.conj(w), w) if conj_phases else (1.0, w, np.conj(w))
    comps = []
    for m in range(2):
        acc = Constant(0.0)
        for ph, aj in zip(phases, strain):
            acc = acc + ph * as_field(aj[m])
        comps.append(acc)
    return comps


def _add_gauge_term(sym: PolySymbol, t1: Field, K, alpha) -> None:
    # off-diagonal synthetic gauge entry i K.alpha on the upper triangle
    upper = t1 * (1j * (K[0] * alpha[0] + K[1] * alpha[1]))
    sym.add((0, 0), SIGMA_PLUS, coeff=upper)
    sym.add((0, 0), SIGMA_MINUS, coeff=upper.conj())


def haldane_effective(geom: LatticeGeometry, t1=1.0, t2=0.0, M=0.0,
                      p: int = 1) -> PolySymbol:
    """Order-1/2 effective symbol of the modulated Haldane model at K.

    Written out term by term (independent of the Taylor engine) for use
    as a cross-check oracle and as a fast constructor for known models.
    """
    if p not in (1, 2):
        raise UnsupportedOrderError(
            f"closed forms are tabulated for orders 1 and 2, not {p}; "
            "use the Taylor route for higher orders")
    t1 = as_field(t1)
    v = geom.v
    sym = PolySymbol(d=2, n=2, p=p, K=geom.K, E=0.0)
    _add_dirac(sym, t1, v, rotation(np.pi / 2))
    sym.add((0, 0), SIGMA3, coeff=staggered_mass(M, t2))
    if p == 2:
        # quadratic valley correction (v^2/8)(zeta2 - i zeta1)^2 on sigma+
        c = v * v / 8
        sym.add((0, 2), c * SIGMA1, coeff=t1, dpow=1)
        sym.add((2, 0), -c * SIGMA1, coeff=t1, dpow=1)
        sym.add((1, 1), 2 * c * SIGMA2, coeff=t1, dpow=1)
    return sym


def strain_twist_effective(geom: LatticeGeometry, t1=1.0, t2=0.0, M=0.0,
                           strain=None, theta: float = 0.0,
                           small_twist_beta=None,
                           valley: str = "K") -> PolySymbol:
    """First-order effective symbol with weak strain and lattice twist.

    Two twist modes: a finite rotation `theta` (expansion moves to the
    rotated valley R_theta K) or a small twist angle scaling linearly in
    delta with slope `small_twist_beta` (valley stays at K and a constant
    (2 pi/sqrt 3) beta t1 sigma2 term appears).  `strain` lists the three
    bond-vector corrections as length-2 coefficient tuples; they enter
    through the synthetic gauge potential only.
    """
    if small_twist_beta is not None and theta != 0.0:
        raise InvalidConfigError(
            "choose either a finite twist angle or a linear-in-delta twist "
            "slope, not both")
    t1 = as_field(t1)
    v = geom.v
    if valley == "K":
        Kpt = rotation(theta) @ geom.K if theta else geom.K
        sym = PolySymbol(d=2, n=2, p=1, K=Kpt, E=0.0)
        _add_dirac(sym, t1, v, rotation(theta + np.pi / 2))
        sym.add((0, 0), SIGMA3, coeff=staggered_mass(M, t2))
        if strain is not None:
            _add_gauge_term(sym, t1, geom.K, _strain_alpha(strain))
        if small_twist_beta is not None:
            beta = float(small_twist_beta)
            sym.add((0, 0), (2 * np.pi / np.sqrt(3)) * beta * SIGMA2, coeff=t1)
        return sym
    if valley == "Kprime":
        if small_twist_beta is not None:
            raise InvalidConfigError(
                "the linear-in-delta twist mode is set up at the K valley only")
        Kp = geom.Kp
        Kpt = rotation(theta) @ Kp if theta else Kp
        sym = PolySymbol(d=2, n=2, p=1, K=Kpt, E=0.0)
        # conical slope at the opposite valley: -(zeta1 sigma2 + zeta2 sigma1)
        # after rotation, -zeta . R_theta (sigma2, sigma1)
        R = rotation(theta)
        smats = (SIGMA2, SIGMA1)
        for j in range(2):
            mat = sum(R[j, k] * smats[k] for k in range(2))
            sym.add((1 - j, j), -DIRAC_SPEED * v * mat, coeff=t1)
        sym.add((0, 0), SIGMA3, coeff=staggered_mass(M, t2, sign=+1.0))
        if strain is not None:
            _add_gauge_term(sym, t1, Kp, _strain_alpha(strain, conj_phases=True))
        return sym
    raise InvalidConfigError(f"unknown valley {valley!r}; use 'K' or 'Kprime'")


# ---------------------------------------------------------------------------
# position-dependent degenerate momentum


def degenerate_momentum_from_bond(v1_field: VectorField) -> VectorField:
    """Local valley momentum (4 pi / 3|v1|^2) R_{-2pi/3} v1 of a varying lattice."""
    Rm = rotation(-2 * np.pi / 3)

    def kfun(X, v1f=v1_field, Rm=Rm):
        v1 = np.asarray(v1f(X), dtype=float)
        n2 = np.sum(v1 * v1, axis=-1)[..., None]
        return (4 * np.pi / 3) * (v1 @ Rm.T) / n2

    return VectorField(kfun, f"(4pi/3|v1|^2) R(-2pi/3) {v1_field.expr}", m=2)


def position_dependent_effective(geom: LatticeGeometry, grad_B,
                                 t1=1.0, t2=0.0, M=0.0, strain=None,
                                 degenerate_tol: float = 1e-6,
                                 check_box: float = 3.0,
                                 check_n: int = 64):
    """Effective model when the local valley momentum varies in space.

    The valley position derives from a scalar phase A(X) = K.X + B(X);
    `grad_B` supplies the two components of grad B as fields.  Returns
    the gradient field K(X) = grad A and the first-order PolySymbol whose
    conical part carries the position-dependent velocity matrix.
    """
    from .errors import DegenerateFieldError

    t1 = as_field(t1)
    gBx, gBy = (as_field(g) for g in grad_B)
    K0 = geom.K
    gAx = gBx + K0[0]
    gAy = gBy + K0[1]
    K_field = VectorField.from_components((gAx, gAy))

    # grid guard: grad A bounded away from zero, else no valley to follow
    ax = np.linspace(-check_box, check_box, check_n)
    Xg = np.stack(np.meshgrid(ax, ax, indexing="ij"), axis=-1)
    gA = K_field(Xg)
    norms = np.sqrt(np.sum(np.real(gA) ** 2, axis=-1))
    if float(norms.min()) < degenerate_tol:
        raise DegenerateFieldError(
            f"|grad A| falls to {norms.min():.3e} on the sample grid; the "
            "valley momentum field is degenerate there")

    # bond-direction field and the self-consistency loop back to grad A
    R2 = rotation(2 * np.pi / 3)

    def v1fun(X, kf=K_field, R2=R2):
        g = np.asarray(kf(X), dtype=float)
        n2 = np.sum(g * g, axis=-1)[..., None]
        return (4 * np.pi / 3) * (g @ R2.T) / n2

    v1_field = VectorField(v1fun, "(4pi/3|gradA|^2) R(2pi/3) gradA", m=2)
    back = degenerate_momentum_from_bond(v1_field)(Xg)
    defect = float(np.max(np.abs(back - gA)))
    if defect > 1e-10 * float(np.max(norms)):
        raise InvalidParameterError(
            f"valley-momentum consistency loop failed: defect {defect:.3e}")

    # velocity matrix g = (sqrt3/2) t1 R_{pi/3} [[v11, -v12], [v12, v11]]
    v11 = Field(lambda X, f=v1_field: f(X)[..., 0], f"({v1_field.expr})_1")
    v12 = Field(lambda X, f=v1_field: f(X)[..., 1], f"({v1_field.expr})_2")
    c, s = np.cos(np.pi / 3), np.sin(np.pi / 3)
    pref = np.sqrt(3) / 2
    g11 = pref * (t1 * (c * v11 - s * v12))
    g12 = pref * (t1 * (-c * v12 - s * v11))
    g21 = pref * (t1 * (s * v11 + c * v12))
    g22 = g11

    sym = PolySymbol(d=2, n=2, p=1, K=K0, E=0.0)
    smats = (SIGMA1, SIGMA2)
    for (j, k), gf in (((0, 0), g11), ((0, 1), g12), ((1, 0), g21), ((1, 1), g22)):
        sym.add((1, 0) if j == 0 else (0, 1), smats[k], coeff=gf)
    sym.add((0, 0), SIGMA3, coeff=staggered_mass(M, t2))
    if strain is not None:
        alpha = _strain_alpha(strain)
        upper = t1 * (1j * (Field(lambda X, kf=K_field: kf(X)[..., 0], "K1(X)") * alpha[0]
                            + Field(lambda X, kf=K_field: kf(X)[..., 1], "K2(X)") * alpha[1]))
        sym.add((0, 0), SIGMA_PLUS, coeff=upper)
        sym.add((0, 0), SIGMA_MINUS, coeff=upper.conj())
    return K_field, sym


# ---------------------------------------------------------------------------
# multilayer stacks


def _layer_chain(n: int):
    """Adjacent-layer raising matrices E_{l,l+1} for an n-layer stack."""
    mats = []
    for layer in range(n - 1):
        E = np.zeros((n, n))
        E[layer, layer + 1] = 1.0
        mats.append(E)
    return mats


def multilayer_effective(base: PolySymbol, n_layers: int, omega=0.0,
                         gamma=0.0, coupling: str = "AB",
                         chi=None) -> PolySymbol:
    """Stacked effective symbol: gate ladder + per-layer base + interlayer hop.

    The gate ladder puts (-n+1+2l) * omega(X) on layer l.  `coupling`
    selects which sublattices the adjacent-layer hop connects: "AB"
    couples (B, lower)-(A, upper), "BA" the transpose pattern, and "mix"
    interpolates chi(X) * AB + (1 - chi(X)) * BA for a stacking domain
    wall.  `base` must be a single-layer 2x2 symbol.
    """
    if base.n != 2:
        raise InvalidParameterError(
            f"base symbol must be 2x2 per layer, got n={base.n}")
    if n_layers < 1:
        raise InvalidParameterError("need at least one layer")
    if coupling not in ("AB", "BA", "mix"):
        raise InvalidConfigError(f"unknown stacking {coupling!r}")
    if coupling == "mix" and chi is None:
        raise InvalidConfigError("stacking 'mix' needs the switch field chi")
    n = n_layers
    N = 2 * n
    sym = PolySymbol(d=2, n=N, p=base.p, K=base.K, E=base.E)
    eye_n = np.eye(n)
    for t in base.terms:
        sym.add(t.alpha, np.kron(eye_n, t.matrix), coeff=t.coeff, dpow=t.dpow)
    omega = as_field(omega)
    if not (isinstance(omega, Constant) and omega.value == 0):
        ladder = np.diag([(-n + 1 + 2 * layer) for layer in range(n)]).astype(float)
        sym.add((0, 0), np.kron(ladder, np.eye(2)), coeff=omega)
    gamma = as_field(gamma)
    if not (isinstance(gamma, Constant) and gamma.value == 0) and n >= 2:
        up_AB = sum(np.kron(E, SIGMA_MINUS) for E in _layer_chain(n))
        up_BA = sum(np.kron(E, SIGMA_PLUS) for E in _layer_chain(n))
        if coupling == "AB":
            pairs = ((gamma, up_AB),)
        elif coupling == "BA":
            pairs = ((gamma, up_BA),)
        else:
            chi = as_field(chi)
            pairs = ((gamma * chi, up_AB), (gamma * (1 - chi), up_BA))
        for cf, up in pairs:
            sym.add((0, 0), up, coeff=cf)
            sym.add((0, 0), np.conj(up).T, coeff=cf.conj())
    return sym


# ---------------------------------------------------------------------------
# small-angle moire bilayer


@dataclass(frozen=True)
class MoireVectors:
    """Interlayer momentum transfers for twist slope beta and bond scale v."""

    beta: float
    v: float

    @property
    def plain(self):
        b, v = self.beta, self.v
        w1 = -(4 * np.pi * b / (np.sqrt(3) * v)) * np.array([np.sqrt(3) / 2, 0.5])
        w2 = (4 * np.pi * b / (np.sqrt(3) * v)) * np.array([-np.sqrt(3) / 2, 0.5])
        return np.array([np.zeros(2), w1, w2])

    @property
    def shift(self):
        # R^T_{pi/2} K scaled by beta: the leading split between the two
        # layers' valley momenta
        K = honeycomb_geometry(self.v).K
        return self.beta * (rotation(np.pi / 2).T @ K)

    @property
    def tilde(self):
        return self.plain - self.shift[None, :]


T_MATRICES = (
    np.ones((2, 2), dtype=complex),
    np.array([[1.0, np.exp(2j * np.pi / 3)], [np.exp(-2j * np.pi / 3), 1.0]]),
    np.array([[1.0, np.exp(-2j * np.pi / 3)], [np.exp(2j * np.pi / 3), 1.0]]),
)


def bm_effective(beta: float, lam=(1.0, 1.0, 1.0), t1=1.0, t2=0.0, M=0.0,
                 v: float = 1.0, gauge: str = "plain") -> PolySymbol:
    """First-order continuum symbol of the small-twist moire bilayer.

    `gauge="plain"` keeps the shared untwisted valley for both layers:
    diagonal blocks carry the alternating constant (-1)^j (pi/sqrt3) beta
    t1 sigma2, and the interlayer block oscillates at the momentum
    transfers w_j.  `gauge="bm"` applies the relative phase change that
    removes the constant term and shifts the transfers to the closed
    hexagonal triple w~_j; the two results are unitarily equivalent.
    """
    if beta == 0:
        raise InvalidParameterError(
            "twist slope beta must be nonzero: the moire momentum transfers "
            "collapse otherwise")
    if gauge not in ("plain", "bm"):
        raise InvalidConfigError(f"unknown gauge {gauge!r}; use 'plain' or 'bm'")
    t1 = as_field(t1)
    geom = honeycomb_geometry(v)
    cell_area = abs(np.cross(geom.v1, geom.v2))
    mv = MoireVectors(beta, v)
    wvecs = mv.plain if gauge == "plain" else mv.tilde

    sym = PolySymbol(d=2, n=4, p=1, K=geom.K, E=0.0)
    eye2 = np.eye(2)
    R = rotation(np.pi / 2)
    smats = (SIGMA1, SIGMA2)
    for j in range(2):
        mat = sum(R[j, k] * smats[k] for k in range(2))
        sym.add((1 - j, j), DIRAC_SPEED * v * np.kron(eye2, mat), coeff=t1)
    sym.add((0, 0), np.kron(eye2, SIGMA3), coeff=staggered_mass(M, t2))
    if gauge == "plain":
        # (-1)^j for layers j = 1, 2: diag(-1, +1) on the layer index
        layer_sign = np.diag([-1.0, 1.0])
        sym.add((0, 0), (np.pi / np.sqrt(3)) * beta * np.kron(layer_sign, SIGMA2),
                coeff=t1)
    up = np.array([[0.0, 1.0], [0.0, 0.0]])
    for lam_j, T_j, w_j in zip(lam, T_MATRICES, wvecs):
        cf = (complex(lam_j) / cell_area) * plane_wave(w_j)
        sym.add((0, 0), np.kron(up, T_j), coeff=cf)
        sym.add((0, 0), np.kron(up.T, np.conj(T_j).T), coeff=cf.conj())
    return sym


def bm_gauge_defect(beta: float, v: float = 1.0, lam=(1.0, 1.0, 1.0),
                    t1=1.0, t2=0.0, M=0.0, rng=None,
                    n_samples: int = 64, delta: float = 0.0) -> float:
    """Max pointwise defect of the unitary relation between the two gauges.

    Conjugating by the diagonal plane-wave unitary shifts each block's
    momentum by the mean of the two layer phases and multiplies by their
    difference; the check evaluates both symbols accordingly on random
    (X, zeta) samples and returns the worst entry-wise mismatch.
    """
    rng = np.random.default_rng(3) if rng is None else rng
    b_plain = bm_effective(beta, lam, t1, t2, M, v, gauge="plain")
    b_tilde = bm_effective(beta, lam, t1, t2, M, v, gauge="bm")
    q = MoireVectors(beta, v).shift
    s = np.array([-q / 2, q / 2])  # per-layer momentum offsets
    X = rng.uniform(-3, 3, size=(n_samples, 2))
    Z = rng.uniform(-5, 5, size=(n_samples, 2))
    worst = 0.0
    for j in range(2):
        for k in range(2):
            shift = (s[j] + s[k]) / 2
            phase = np.exp(1j * (X @ (s[j] - s[k])))
            lhs = b_tilde(X, Z, delta)[..., 2 * j:2 * j + 2, 2 * k:2 * k + 2]
            rhs = b_plain(X, Z - shift[None, :], delta)[..., 2 * j:2 * j + 2,
                                                        2 * k:2 * k + 2]
            worst = max(worst, float(np.max(np.abs(lhs - phase[:, None, None] * rhs))))
    return worst
