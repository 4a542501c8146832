"""Bloch symbols of slowly modulated hopping operators and their effective
polynomial expansions around a degenerate momentum.

A trigonometric symbol is a finite sum

    a(X, xi; delta) = sum_t  delta^{k_t} c_t(X) M_t exp(i xi . v_t(X, delta)),

with shift vectors v_t = v0 + delta * v1(X) (the linear part covers weak
strain).  The order-p effective symbol collects the joint Taylor expansion
of a(X, K + delta zeta; delta) in (delta zeta, delta) through total order p:

    a(X, K + delta zeta; delta) = E + delta b_p(X, zeta; delta) + O(delta^{p+1}),

so b_p is a matrix polynomial in zeta with delta-graded, X-dependent
coefficients.  The expansion is exact term algebra (no finite differences):
each shifted exponential has a closed-form power series.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dfield

import numpy as np

from .errors import DegeneracyError, InvalidOrderError, InvalidParameterError
from .fields import Constant, Field, as_field
from .pauli import SIGMA3, SIGMA_MINUS, SIGMA_PLUS, rotation

# ---------------------------------------------------------------------------
# trigonometric symbols


@dataclass
class TrigTerm:
    shift: np.ndarray                    # constant part of the shift vector
    matrix: np.ndarray                   # (n, n) constant matrix factor
    coeff: Field                         # scalar X-field
    dpow: int = 0                        # explicit power of delta
    shift_slope: tuple | None = None     # d Fields: delta-linear shift part


class TrigSymbol:
    """Finite trigonometric symbol; Hermitian if terms close under dagger."""

    def __init__(self, d: int, n: int, terms=None):
        self.d = d
        self.n = n
        self.terms: list[TrigTerm] = list(terms) if terms else []

    def add(self, shift, matrix, coeff=1.0, dpow=0, shift_slope=None):
        shift = np.atleast_1d(np.asarray(shift, dtype=float))
        if shift.shape != (self.d,):
            raise InvalidParameterError(f"shift must have length {self.d}")
        if shift_slope is not None:
            shift_slope = tuple(as_field(s) for s in shift_slope)
            if len(shift_slope) != self.d:
                raise InvalidParameterError("shift_slope needs one field per axis")
        self.terms.append(TrigTerm(shift, np.asarray(matrix, dtype=complex),
                                   as_field(coeff), int(dpow), shift_slope))
        return self

    def add_pair(self, shift, matrix, coeff=1.0, dpow=0, shift_slope=None):
        """Add a term and its Hermitian partner (-shift, dagger, conj)."""
        self.add(shift, matrix, coeff, dpow, shift_slope)
        neg_slope = None
        if shift_slope is not None:
            neg_slope = tuple(-as_field(s) for s in shift_slope)
        self.add(-np.asarray(shift, dtype=float),
                 np.conj(np.asarray(matrix)).T,
                 as_field(coeff).conj(), dpow, neg_slope)
        return self

    def __call__(self, X, xi, delta: float):
        """Evaluate on broadcastable X (..., d) and xi (..., d)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        shape = np.broadcast_shapes(X.shape[:-1], xi.shape[:-1])
        out = np.zeros(shape + (self.n, self.n), dtype=complex)
        for t in self.terms:
            v = t.shift
            phase_arg = xi @ v
            if t.shift_slope is not None:
                slope = np.stack([np.broadcast_to(s(X), shape)
                                  for s in t.shift_slope], axis=-1)
                phase_arg = phase_arg + delta * np.sum(xi * slope, axis=-1)
            amp = (delta ** t.dpow) * np.broadcast_to(t.coeff(X), shape) \
                * np.exp(1j * phase_arg)
            out += amp[..., None, None] * t.matrix
        return out

    def hermiticity_defect(self, rng=None, n_samples: int = 24,
                           delta: float = 0.02) -> float:
        rng = np.random.default_rng(0) if rng is None else rng
        X = rng.uniform(-2, 2, size=(n_samples, self.d))
        xi = rng.uniform(-4, 4, size=(n_samples, self.d))
        a = self(X, xi, delta)
        return float(np.max(np.abs(a - np.conj(np.swapaxes(a, -1, -2)))))


# ---------------------------------------------------------------------------
# polynomial (effective) symbols


@dataclass
class PolyTerm:
    alpha: tuple          # zeta multi-index, length d
    dpow: int             # extra power of delta on the coefficient
    coeff: Field
    matrix: np.ndarray


class PolySymbol:
    """Matrix polynomial b(X, zeta; delta) with delta-graded coefficients.

    Stored so that the leading operator is delta * Op[b]: the delta that
    multiplies the whole effective Hamiltonian is *not* included in dpow.
    """

    def __init__(self, d: int, n: int, p: int, K, E: float = 0.0, terms=None):
        self.d = d
        self.n = n
        self.p = p
        self.K = np.atleast_1d(np.asarray(K, dtype=float))
        self.E = float(E)
        self.terms: list[PolyTerm] = list(terms) if terms else []

    def add(self, alpha, matrix, coeff=1.0, dpow: int = 0):
        alpha = tuple(int(x) for x in np.atleast_1d(alpha))
        if len(alpha) != self.d:
            raise InvalidParameterError(f"alpha must have length {self.d}")
        if sum(alpha) > self.p:
            raise InvalidOrderError(
                f"monomial degree {sum(alpha)} exceeds symbol order {self.p}")
        self.terms.append(PolyTerm(alpha, int(dpow), as_field(coeff),
                                   np.asarray(matrix, dtype=complex)))
        return self

    def __call__(self, X, zeta, delta: float):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        zeta = np.atleast_2d(np.asarray(zeta, dtype=float))
        shape = np.broadcast_shapes(X.shape[:-1], zeta.shape[:-1])
        out = np.zeros(shape + (self.n, self.n), dtype=complex)
        for t in self.terms:
            mono = np.ones(shape)
            for j, a in enumerate(t.alpha):
                if a:
                    mono = mono * zeta[..., j] ** a
            amp = (delta ** t.dpow) * np.broadcast_to(t.coeff(X), shape) * mono
            out += amp[..., None, None] * t.matrix
        return out

    def max_degree(self) -> int:
        return max((sum(t.alpha) for t in self.terms), default=0)

    def hermiticity_defect(self, rng=None, n_samples: int = 24,
                           delta: float = 0.02) -> float:
        rng = np.random.default_rng(0) if rng is None else rng
        X = rng.uniform(-2, 2, size=(n_samples, self.d))
        z = rng.uniform(-6, 6, size=(n_samples, self.d))
        b = self(X, z, delta)
        return float(np.max(np.abs(b - np.conj(np.swapaxes(b, -1, -2)))))

    def coefficient(self, alpha, dpow: int, X=None):
        """Summed matrix coefficient of zeta^alpha delta^dpow at points X."""
        alpha = tuple(alpha)
        X = np.zeros((1, self.d)) if X is None else np.atleast_2d(X)
        out = np.zeros(X.shape[:-1] + (self.n, self.n), dtype=complex)
        for t in self.terms:
            if t.alpha == alpha and t.dpow == dpow:
                out += t.coeff(X)[..., None, None] * t.matrix
        return out

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "d": self.d, "n": self.n, "p": self.p,
            "K": list(self.K), "E": self.E,
            "monomials": [
                {
                    "alpha": list(t.alpha),
                    "dpow": t.dpow,
                    "matrix_re": np.real(t.matrix).tolist(),
                    "matrix_im": np.imag(t.matrix).tolist(),
                    "coeff_expr": t.coeff.expr,
                }
                for t in self.terms
            ],
        }

    def to_json(self, indent=2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, data: dict) -> "PolySymbol":
        """Rebuild from a dump; only constant coefficients round-trip."""
        out = cls(data["d"], data["n"], data["p"], np.asarray(data["K"]),
                  data.get("E", 0.0))
        for m in data["monomials"]:
            try:
                val = complex(m["coeff_expr"].replace(" ", ""))
            except ValueError as exc:
                raise InvalidParameterError(
                    f"non-constant coefficient {m['coeff_expr']!r} cannot be "
                    "rebuilt from JSON") from exc
            mat = np.asarray(m["matrix_re"]) + 1j * np.asarray(m["matrix_im"])
            out.add(tuple(m["alpha"]), mat, coeff=val, dpow=m["dpow"])
        return out


# ---------------------------------------------------------------------------
# truncated multivariate polynomial algebra (coefficients: complex | Field)


def _cmul(a, b):
    if isinstance(a, Field) or isinstance(b, Field):
        return as_field(a) * as_field(b)
    return a * b


def _cadd(a, b):
    if a is None:
        return b
    if isinstance(a, Field) or isinstance(b, Field):
        return as_field(a) + as_field(b)
    return a + b


def _poly_mul(p1: dict, p2: dict, maxdeg: int) -> dict:
    out = {}
    for g1, c1 in p1.items():
        for g2, c2 in p2.items():
            g = tuple(x + y for x, y in zip(g1, g2))
            if sum(g) > maxdeg:
                continue
            out[g] = _cadd(out.get(g), _cmul(c1, c2))
    return out


def _poly_scale(p: dict, s) -> dict:
    return {g: _cmul(c, s) for g, c in p.items()}


def _poly_exp(p: dict, maxdeg: int, nvars: int) -> dict:
    """exp of a polynomial with no constant term, truncated."""
    zero = (0,) * nvars
    assert zero not in p or (not isinstance(p[zero], Field) and p[zero] == 0)
    acc = {zero: 1.0 + 0.0j}
    power = {zero: 1.0 + 0.0j}
    for k in range(1, maxdeg + 1):
        power = _poly_scale(_poly_mul(power, p, maxdeg), 1.0 / k)
        if not power:
            break
        for g, c in power.items():
            acc[g] = _cadd(acc.get(g), c)
    return acc


# ---------------------------------------------------------------------------
# the machine expansion


def taylor_effective(a: TrigSymbol, K, E: float, p: int,
                     check_degeneracy: bool = True,
                     zero_tol: float = 1e-14) -> PolySymbol:
    """Order-p effective polynomial symbol of `a` around momentum K, level E.

    Expands a(X, K + delta zeta; delta) jointly in (delta zeta, delta) and
    collects orders 1..p into a PolySymbol (order 0 must equal E).
    """
    if p < 1:
        raise InvalidOrderError(f"expansion order must be >= 1, got {p}")
    K = np.atleast_1d(np.asarray(K, dtype=float))
    if K.shape != (a.d,):
        raise InvalidParameterError(f"K must have length {a.d}")
    d = a.d
    nvars = d + 1  # (eta_1..eta_d, delta)
    zero = (0,) * nvars
    out = PolySymbol(d, a.n, p, K, E)
    const_part = np.zeros((a.n, a.n), dtype=complex)  # order-0, constant coeffs
    const_fields = []  # order-0 pieces with X dependence

    collected: dict = {}
    for t in a.terms:
        base_phase = np.exp(1j * float(K @ t.shift))
        # P = i eta.v0 + i delta K.v1(X) + i delta eta.v1(X)
        P: dict = {}
        for j in range(d):
            if t.shift[j] != 0.0:
                g = tuple(1 if k == j else 0 for k in range(nvars))
                P[g] = 1j * t.shift[j]
        if t.shift_slope is not None:
            kv1 = None
            for j in range(d):
                s = t.shift_slope[j]
                if isinstance(s, Constant) and s.value == 0:
                    continue
                kv1 = _cadd(kv1, _cmul(K[j], s))
                g = tuple((1 if k == j else 0) for k in range(d)) + (1,)
                P[g] = _cadd(P.get(g), _cmul(1j, s))
            if kv1 is not None:
                g = (0,) * d + (1,)
                P[g] = _cadd(P.get(g), _cmul(1j, kv1))
        series = _poly_exp(P, p, nvars) if P else {zero: 1.0 + 0.0j}
        for g, c in series.items():
            gtot = g[:d] + (g[d] + t.dpow,)
            deg = sum(gtot)
            if deg > p:
                continue
            coeff = _cmul(_cmul(c, base_phase), t.coeff)
            if deg == 0:
                if isinstance(coeff, Field) and not coeff.is_constant:
                    const_fields.append((coeff, t.matrix))
                else:
                    val = coeff.value if isinstance(coeff, Constant) else coeff
                    const_part += val * t.matrix
                continue
            key = (gtot[:d], deg - 1,
                   id(coeff) if isinstance(coeff, Field)
                   and not coeff.is_constant else None)
            if key[2] is None:
                val = coeff.value if isinstance(coeff, Constant) else coeff
                prev = collected.get(key)
                mat = val * t.matrix
                collected[key] = (None, mat if prev is None else prev[1] + mat)
            else:
                prev = collected.get(key)
                collected[key] = (coeff, t.matrix if prev is None
                                  else prev[1] + t.matrix)

    scale = max((float(np.max(np.abs(t.matrix))) for t in a.terms),
                default=1.0) or 1.0
    for (alpha, dpow, _fid), (cf, mat) in sorted(
            collected.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        if float(np.max(np.abs(mat))) <= zero_tol * scale:
            continue
        out.add(alpha, mat, coeff=1.0 if cf is None else cf, dpow=dpow)

    if check_degeneracy:
        rng = np.random.default_rng(1)
        X = rng.uniform(-1.5, 1.5, size=(16, d))
        resid = np.broadcast_to(const_part - E * np.eye(a.n),
                                (16, a.n, a.n)).copy()
        for cf, mat in const_fields:
            resid += np.broadcast_to(cf(X), (16,))[:, None, None] * mat
        worst = float(np.max(np.abs(resid)))
        if worst > 1e-10 * max(scale, 1.0):
            raise DegeneracyError(
                f"a(X, K; 0) - E deviates by {worst:.3e}: K is not a "
                "degenerate point at level E for this symbol")
    return out


# ---------------------------------------------------------------------------
# model builders


def haldane_trig_symbol(geom, t1=1.0, t2=0.0, M=0.0,
                        strain=None, twist: float = 0.0) -> TrigSymbol:
    """Bloch symbol of the modulated Haldane model at flux phase pi/2.

    `t1`, `t2`, `M` may be numbers or Fields of the slow variable X.  The
    NN part carries matrix sigma+/-; the staggered part (on-site M plus the
    flux-pi/2 NNN loop) multiplies sigma3 and one power of delta.  `strain`
    gives the delta-linear NN bond corrections as three length-2 field
    tuples; `twist` rigidly rotates all shift vectors.
    """
    t1 = as_field(t1)
    t2 = as_field(t2)
    M = as_field(M)
    R = rotation(twist) if twist else np.eye(2)
    sym = TrigSymbol(d=2, n=2)
    for j, aj in enumerate(geom.a):
        slope = None
        if strain is not None:
            s0, s1 = (as_field(s) for s in strain[j])
            # the twist rotates the full bond vector, correction included
            slope = (R[0, 0] * s0 + R[0, 1] * s1,
                     R[1, 0] * s0 + R[1, 1] * s1)
        sym.add_pair(R @ aj, SIGMA_PLUS, coeff=t1, dpow=0, shift_slope=slope)
    if not (isinstance(M, Constant) and M.value == 0):
        sym.add((0.0, 0.0), SIGMA3, coeff=M, dpow=1)
    if not (isinstance(t2, Constant) and t2.value == 0):
        # sum_j sin(b_j . xi) sigma3 written out as exponential pairs
        for bj in geom.b:
            sym.add_pair(R @ bj, SIGMA3 / 2j, coeff=t2, dpow=1)
    return sym


def ssh_trig_symbol(u=1.0, w=1.0, s: float = 0.0, vcell: float = 1.0) -> TrigSymbol:
    """1-D two-band chain with intra/inter-cell hops u, w (gap closes at u=w)."""
    sym = TrigSymbol(d=1, n=2)
    sym.add_pair((s,), SIGMA_PLUS, coeff=as_field(u))
    sym.add_pair((s - vcell,), SIGMA_PLUS, coeff=as_field(w))
    return sym
