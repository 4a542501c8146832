"""Sparse tight-binding models on periodic supercells and RK4 dynamics.

Assembles the gated Bernal bilayer (unit nearest-neighbor hopping, layer-
antisymmetric gate, interlayer coupling at coincident sites) and the
modulated two-band model with complex second-neighbor hops, both with
midpoint-evaluated amplitudes so the matrix is the exact quantization of
the corresponding lattice symbol.  Dynamics i d/dt psi = H psi run with
the classical 4th-order Runge-Kutta scheme on sparse matvecs.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dfield

import numpy as np
import scipy.sparse as sp

from .errors import (InvalidConfigError, InvalidParameterError,
                     NumericalAbortError)
from .fields import Field, as_field
from .lattice import NN_CELL_SHIFTS, NNN_CELL_SHIFTS, Supercell

__all__ = [
    "MassProfile", "racetrack_profile", "circle_profile", "straight_profile",
    "HoppingTerm", "SparseHamiltonian", "assemble_bilayer", "assemble_haldane",
    "LatticeTrajectory", "rk4_propagate",
]


# ---------------------------------------------------------------------------
# gating mass profiles


@dataclass(frozen=True)
class MassProfile:
    """Signed-distance gating switch m = tanh(sharpness * r(x)).

    kind 'racetrack': r is the distance to a stadium of straight length
    ell and diameter w (ell = 0 degenerates to a circle); kind
    'straight': r = x2.  Lengths are in lattice units; the microscopic
    evaluator applies the delta/omega sharpness so the wall width is
    omega/delta sites and |m| saturates to 1 away from the zero set.
    """

    kind: str
    ell: float = 0.0
    w: float = 0.0

    def __post_init__(self):
        if self.kind not in ("racetrack", "circle", "straight"):
            raise InvalidParameterError(f"unknown mass profile {self.kind!r}")
        if self.kind in ("racetrack", "circle") and self.w <= 0:
            raise InvalidParameterError("profile width w must be positive")
        if self.ell < 0:
            raise InvalidParameterError("racetrack length must be >= 0")

    def signed_distance(self, x):
        """r(x); negative inside the zero-level curve."""
        x = np.asarray(x, dtype=float)
        x1, x2 = x[..., 0], x[..., 1]
        if self.kind == "straight":
            return x2
        arm = np.maximum(np.abs(x1) - self.ell / 2.0, 0.0)
        return np.hypot(arm, x2) - self.w / 2.0

    def micro(self, x, delta: float, omega: float):
        """m at atomic positions: tanh((delta/omega) r(x))."""
        return np.tanh((delta / omega) * self.signed_distance(x))

    def macro_field(self, delta: float, omega: float) -> Field:
        """Gate field X -> omega m(X/delta) of the macroscopic variable.

        Uses homogeneity of the signed distance: scaling positions and
        the stadium dimensions together rescales r, so the macroscopic
        gate is omega tanh(r(X; delta ell, delta w)/omega).
        """
        scaled = MassProfile(self.kind, self.ell * delta, self.w * delta) \
            if self.kind != "straight" else self
        om = float(omega)

        def f(X):
            return om * np.tanh(scaled.signed_distance(X) / om)

        return Field(f, expr=f"{om:g} tanh(r_{self.kind}(X)/{om:g})")

    def describe(self) -> dict:
        return {"kind": self.kind, "ell": self.ell, "w": self.w}


def racetrack_profile(ell: float, w: float) -> MassProfile:
    return MassProfile("racetrack", ell, w)


def circle_profile(w: float) -> MassProfile:
    return MassProfile("circle", 0.0, w)


def straight_profile() -> MassProfile:
    return MassProfile("straight")


def _check_seam_saturation(cell: Supercell, profile: MassProfile,
                           delta: float, omega: float, tol: float = 1e-2):
    # the wrap is only exact if the gate is constant at the torus seam
    if profile.kind == "straight":
        return  # handled by the doubled-interface strip in the 1-D solver
    W, H = cell.box()
    t = np.linspace(-0.5, 0.5, 33)
    seam = np.concatenate([
        np.stack([t * W, np.full_like(t, H / 2)], axis=-1),
        np.stack([np.full_like(t, W / 2), t * H], axis=-1),
    ])
    m = profile.micro(seam, delta, omega)
    if np.min(np.abs(m)) < 1.0 - tol:
        raise InvalidConfigError(
            f"gate profile not saturated at the periodic seam "
            f"(min |m| = {np.min(np.abs(m)):.3f}); enlarge the cell or "
            f"shrink the profile", path="mass")


# ---------------------------------------------------------------------------
# assembly


@dataclass(frozen=True)
class HoppingTerm:
    """One directed hop family: (cell shift, layer/sublattice transition).

    amplitude maps wrapped midpoint positions (N, 2) to per-hop complex
    values; assembly adds the reversed conjugate partner so the matrix
    is Hermitian by construction.
    """

    dm: int
    dn: int
    layer_from: int
    sub_from: int
    layer_to: int
    sub_to: int
    amplitude: callable


@dataclass
class SparseHamiltonian:
    matrix: sp.csr_matrix
    cell: Supercell
    metadata: dict = dfield(default_factory=dict)

    @property
    def n_sites(self) -> int:
        return self.matrix.shape[0]

    def hermiticity_defect(self) -> float:
        d = self.matrix - self.matrix.getH()
        return 0.0 if d.nnz == 0 else float(np.max(np.abs(d.data)))

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


def _assemble(cell: Supercell, onsite: np.ndarray, terms: list[HoppingTerm],
              metadata: dict) -> SparseHamiltonian:
    N = cell.n_sites
    rows = [np.arange(N, dtype=np.int64)]
    cols = [np.arange(N, dtype=np.int64)]
    vals = [np.asarray(onsite, dtype=complex)]
    g = cell.geom
    base_pos = cell.positions
    for t in terms:
        src = cell.sites_of(t.layer_from, t.sub_from)
        dst = cell.shifted_sites(t.dm, t.dn, t.layer_to, t.sub_to)
        # displacement in unwrapped coordinates; midpoint wrapped afterwards
        disp = (t.dm * g.v1 + t.dn * g.v2
                + (t.sub_to + t.layer_to - t.sub_from - t.layer_from) * g.a[0])
        mid = cell.wrap_points(base_pos[src] + disp / 2.0)
        amp = np.broadcast_to(np.asarray(t.amplitude(mid), dtype=complex),
                              src.shape).copy()
        # amp is the coefficient of psi(x + disp) in (H psi)(x): row = from
        rows += [src, dst]
        cols += [dst, src]
        vals += [amp, np.conj(amp)]
    H = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(N, N), dtype=complex).tocsr()
    H.sum_duplicates()
    return SparseHamiltonian(H, cell, metadata)


def assemble_bilayer(geom, cell: Supercell, delta: float, omega: float,
                     gamma: float, mass: MassProfile,
                     check_seam: bool = True) -> SparseHamiltonian:
    """Gated Bernal bilayer: unit hops, layer-antisymmetric gate, vertical
    interlayer coupling between coincident lower-B and upper-A sites."""
    if delta <= 0 or omega <= 0:
        raise InvalidParameterError("delta and omega must be positive")
    if cell.n_layers != 2:
        raise InvalidParameterError("bilayer assembly needs n_layers = 2")
    if check_seam:
        _check_seam_saturation(cell, mass, delta, omega)
    sign = np.where(cell.layer_of == 0, -1.0, 1.0)
    onsite = sign * omega * mass.micro(cell.positions, delta, omega)
    terms = []
    for layer in (0, 1):
        for dm, dn in NN_CELL_SHIFTS:
            terms.append(HoppingTerm(dm, dn, layer, 0, layer, 1,
                                     lambda mid: 1.0))
    terms.append(HoppingTerm(0, 0, 0, 1, 1, 0, lambda mid: gamma))
    meta = {"model": "bilayer", "delta": delta, "omega": omega,
            "gamma": gamma, "mass": mass.describe()}
    return _assemble(cell, onsite, terms, meta)


def assemble_haldane(geom, cell: Supercell, delta: float, t1, t2, M,
                     phi: float = np.pi / 2) -> SparseHamiltonian:
    """Two-band model: midpoint-evaluated first-neighbor hops t1, complex
    second-neighbor hops from the t2 sine symbol, staggered on-site M.

    t1, t2, M are macroscopic fields evaluated at delta times the
    (wrapped) midpoint; the t2 and M parts carry an explicit factor
    delta, matching the two-scale symbol these models quantize.
    """
    if delta <= 0:
        raise InvalidParameterError("delta must be positive")
    if cell.n_layers != 1:
        raise InvalidParameterError("single-layer assembly needs n_layers = 1")
    if phi != np.pi / 2:
        raise InvalidParameterError(
            "only the pure-imaginary second-neighbor phase is implemented")
    t1 = as_field(t1)
    t2 = as_field(t2)
    M = as_field(M)
    onsite_sign = np.where(cell.sub_of == 0, 1.0, -1.0)
    onsite = delta * onsite_sign * M(delta * cell.positions)
    terms = []
    for dm, dn in NN_CELL_SHIFTS:
        terms.append(HoppingTerm(dm, dn, 0, 0, 0, 1,
                                 lambda mid, f=t1: f(delta * mid)))
    # A-sublattice +b_j hop carries t2/(2i); the sigma3 sign flips it on B
    for dm, dn in NNN_CELL_SHIFTS:
        terms.append(HoppingTerm(dm, dn, 0, 0, 0, 0,
                                 lambda mid, f=t2: delta * f(delta * mid) / 2j))
        terms.append(HoppingTerm(dm, dn, 0, 1, 0, 1,
                                 lambda mid, f=t2: -delta * f(delta * mid) / 2j))
    meta = {"model": "haldane", "delta": delta, "phi": phi,
            "t1": t1.expr, "t2": t2.expr, "M": M.expr}
    return _assemble(cell, onsite, terms, meta)


# ---------------------------------------------------------------------------
# dynamics


@dataclass
class LatticeTrajectory:
    times: np.ndarray          # snapshot times
    states: np.ndarray         # (n_snap, n_sites) complex
    norms: np.ndarray          # Euclidean norms at snapshots
    h: float
    metadata: dict = dfield(default_factory=dict)

    @property
    def norm_drift(self) -> float:
        return float(np.max(np.abs(self.norms - self.norms[0])))


def rk4_propagate(H: SparseHamiltonian, psi0: np.ndarray, h: float, T: float,
                  snapshot_times=None, nan_check_every: int = 64,
                  progress=None) -> LatticeTrajectory:
    """Integrate i d/dt psi = H psi with classical RK4 at fixed step h.

    Snapshot times are rounded to the step grid (the achieved times are
    recorded); a non-finite state aborts with the offending step index.
    """
    if h <= 0:
        raise InvalidParameterError("time step must be positive")
    psi = np.asarray(psi0, dtype=complex).copy()
    if psi.shape != (H.n_sites,):
        raise InvalidParameterError(
            f"state length {psi.shape} does not match {H.n_sites} sites")
    if not np.all(np.isfinite(psi)):
        raise InvalidParameterError("initial state contains non-finite values")
    n_steps = int(round(T / h))
    if abs(n_steps * h - T) > 1e-9 * max(1.0, abs(T)):
        raise InvalidParameterError(
            f"final time {T} is not a multiple of the step {h}")
    if snapshot_times is None:
        snapshot_times = np.array([0.0, T])
    snap_steps = np.unique(np.clip(np.round(np.asarray(snapshot_times) / h)
                                   .astype(int), 0, n_steps))
    A = H.matrix
    times, states, norms = [], [], []

    def record(k):
        times.append(k * h)
        states.append(psi.copy())
        norms.append(float(np.linalg.norm(psi)))

    snap_set = set(int(s) for s in snap_steps)
    if 0 in snap_set:
        record(0)
    for k in range(1, n_steps + 1):
        k1 = A.dot(psi)
        k2 = A.dot(psi - (0.5j * h) * k1)
        k3 = A.dot(psi - (0.5j * h) * k2)
        k4 = A.dot(psi - (1j * h) * k3)
        psi -= (1j * h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if (k % nan_check_every == 0 or k in snap_set) \
                and not np.all(np.isfinite(psi)):
            raise NumericalAbortError(
                f"non-finite state at step {k} (t = {k * h:g})",
                step=k, time=k * h)
        if k in snap_set:
            record(k)
        if progress is not None and k % max(1, n_steps // 100) == 0:
            progress(k, n_steps)
    return LatticeTrajectory(times=np.array(times),
                             states=np.array(states),
                             norms=np.array(norms), h=h,
                             metadata=dict(H.metadata))
