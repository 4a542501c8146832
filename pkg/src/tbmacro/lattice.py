"""Honeycomb geometry and finite periodic supercells.

Two cell conventions are supported:

* ``hex``: the natural two-site cell on the oblique Bravais basis (v1, v2);
  the torus is a parallelogram of (2Lx+1) x (2Ly+1) cells.
* ``rect``: an augmented four-site cell spanned by u1 = v1 + v2 and
  u2 = v1 - v2, which tiles an axis-aligned rectangle; each augmented cell
  holds the two honeycomb cells at offsets 0 and v1.  Simulations use this
  one so the lattice torus coincides with the rectangular spectral box.

Every site keeps its physical labels (m, n, layer, sublattice); the
augmented mode adds the bijection m = P + Q + c, n = P - Q with
c = (m + n) mod 2.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, InvalidParameterError
from .pauli import rotation


@dataclass(frozen=True)
class LatticeGeometry:
    """Honeycomb lattice constants for NN distance parameter v."""

    v: float
    v1: np.ndarray  # Bravais basis
    v2: np.ndarray
    a: tuple  # three A->B nearest-neighbor bond vectors
    b: tuple  # three next-nearest-neighbor vectors
    K: np.ndarray  # degenerate (Dirac) momentum
    Kp: np.ndarray  # the inequivalent partner -K
    w1: np.ndarray  # reciprocal basis, w_i . v_j = 2 pi delta_ij
    w2: np.ndarray

    def to_dict(self) -> dict:
        return {
            "v": self.v,
            "v1": list(self.v1),
            "v2": list(self.v2),
            "a": [list(x) for x in self.a],
            "b": [list(x) for x in self.b],
            "K": list(self.K),
            "Kp": list(self.Kp),
            "w1": list(self.w1),
            "w2": list(self.w2),
        }

    def to_json(self, indent=2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def honeycomb_geometry(v: float) -> LatticeGeometry:
    """Standard honeycomb data: basis, bonds, Dirac points, reciprocal basis."""
    if not (v > 0):
        raise InvalidParameterError(f"lattice scale v must be positive, got {v}")
    v1 = (v / 2.0) * np.array([np.sqrt(3.0), 1.0])
    v2 = (v / 2.0) * np.array([np.sqrt(3.0), -1.0])
    a1 = (v1 + v2) / 3.0
    a2 = rotation(2.0 * np.pi / 3.0) @ a1
    a3 = rotation(-2.0 * np.pi / 3.0) @ a1
    b1 = v1.copy()
    b2 = v2 - v1
    b3 = -(b1 + b2)
    K = -(4.0 * np.pi / (3.0 * v)) * np.array([0.0, 1.0])
    # columns of 2 pi V^{-T} pair dually with (v1, v2)
    V = np.column_stack([v1, v2])
    W = 2.0 * np.pi * np.linalg.inv(V).T
    return LatticeGeometry(
        v=float(v), v1=v1, v2=v2, a=(a1, a2, a3), b=(b1, b2, b3),
        K=K, Kp=-K, w1=W[:, 0].copy(), w2=W[:, 1].copy())


# displacement of honeycomb cell indices for each bond, from an A site:
#   A@(m,n) + a1 -> B@(m,n); + a2 -> B@(m,n-1); + a3 -> B@(m-1,n)
NN_CELL_SHIFTS = ((0, 0), (0, -1), (-1, 0))
# next-nearest b1 = v1, b2 = v2 - v1, b3 = -v2
NNN_CELL_SHIFTS = ((1, 0), (-1, 1), (0, -1))


class Supercell:
    """Finite torus of honeycomb cells with layer and sublattice labels.

    Flat enumeration is cell-major, then layer, then sublattice (A=0, B=1).
    Positions are wrapped into the fundamental domain; ``wrap_points`` maps
    arbitrary points (e.g. hop midpoints) the same way, so coefficient
    evaluation is seam-consistent.
    """

    MAX_SITES_DEFAULT = 25_000_000

    def __init__(self, geom: LatticeGeometry, Lx: int, Ly: int,
                 n_layers: int = 1, cell: str = "rect",
                 max_sites: int | None = None):
        if Lx < 0 or Ly < 0:
            raise InvalidParameterError("Lx and Ly must be non-negative")
        if n_layers < 1:
            raise InvalidParameterError("n_layers must be >= 1")
        if cell not in ("hex", "rect"):
            raise InvalidParameterError(f"cell must be 'hex' or 'rect', got {cell!r}")
        self.geom = geom
        self.Lx, self.Ly = int(Lx), int(Ly)
        self.n_layers = int(n_layers)
        self.cell = cell
        self.N1 = 2 * self.Lx + 1
        self.N2 = 2 * self.Ly + 1
        cells = self.N1 * self.N2 * (2 if cell == "rect" else 1)
        self.n_cells = cells
        self.n_sites = cells * n_layers * 2
        budget = self.MAX_SITES_DEFAULT if max_sites is None else max_sites
        if self.n_sites > budget:
            raise CapacityError(
                f"{self.n_sites} sites exceed the budget of {budget}")
        self._build_enumeration()

    # -- enumeration -------------------------------------------------------

    def _build_enumeration(self):
        g = self.geom
        nl = self.n_layers
        idx = np.int32
        if self.cell == "hex":
            mi, ni = np.meshgrid(np.arange(self.N1, dtype=idx),
                                 np.arange(self.N2, dtype=idx), indexing="ij")
            m = (mi - self.Lx).ravel()
            n = (ni - self.Ly).ravel()
        else:
            Pi, Qi, c = np.meshgrid(np.arange(self.N1, dtype=idx),
                                    np.arange(self.N2, dtype=idx),
                                    np.arange(2, dtype=idx), indexing="ij")
            P = (Pi - self.Lx).ravel()
            Q = (Qi - self.Ly).ravel()
            c = c.ravel()
            m = P + Q + c
            n = P - Q
        # per-cell arrays; sites expand cells by (layer, sub)
        self.cell_m = m
        self.cell_n = n
        ncell = m.size
        self.layer_of = np.tile(np.repeat(np.arange(nl, dtype=idx), 2), ncell)
        self.sub_of = np.tile(np.arange(2, dtype=idx), ncell * nl)
        self.m_of = np.repeat(m, nl * 2)
        self.n_of = np.repeat(n, nl * 2)
        base = np.outer(m, g.v1) + np.outer(n, g.v2)
        pos = (np.repeat(base, nl * 2, axis=0)
               + np.outer(self.sub_of + self.layer_of, g.a[0]))
        self.positions = self.wrap_points(pos)

    def flat_index(self, m, n, layer, sub):
        """Vectorized (m, n, layer, sub) -> flat site index with periodic wrap."""
        m = np.asarray(m)
        n = np.asarray(n)
        ci = self._cell_index(m, n).astype(np.int64)
        return (ci * self.n_layers + layer) * 2 + sub

    def _cell_index(self, m, n):
        if self.cell == "hex":
            mi = np.mod(m + self.Lx, self.N1)
            ni = np.mod(n + self.Ly, self.N2)
            return mi * self.N2 + ni
        c = np.mod(m + n, 2)
        P = (m + n - c) // 2
        Q = (m - n - c) // 2
        Pi = np.mod(P + self.Lx, self.N1)
        Qi = np.mod(Q + self.Ly, self.N2)
        return (Pi * self.N2 + Qi) * 2 + c

    def sites_of(self, layer, sub):
        """Flat indices of all sites with the given layer and sublattice."""
        ci = np.arange(self.n_cells, dtype=np.int64)
        return (ci * self.n_layers + layer) * 2 + sub

    def shifted_sites(self, dm, dn, layer, sub):
        """Flat indices of (cell + (dm, dn), layer, sub) for every cell."""
        return self.flat_index(self.cell_m + dm, self.cell_n + dn, layer, sub)

    # -- geometry ----------------------------------------------------------

    def box(self):
        """(width, height) of the rectangular fundamental domain (rect only)."""
        if self.cell != "rect":
            raise InvalidParameterError("box() requires the rect cell convention")
        g = self.geom
        return (self.N1 * np.sqrt(3.0) * g.v, self.N2 * g.v)

    def wrap_points(self, pts):
        """Map points into the fundamental domain (centered)."""
        pts = np.asarray(pts, dtype=float)
        g = self.geom
        if self.cell == "rect":
            W = self.N1 * np.sqrt(3.0) * g.v
            H = self.N2 * g.v
            out = pts.copy()
            out[..., 0] = np.mod(out[..., 0] + W / 2.0, W) - W / 2.0
            out[..., 1] = np.mod(out[..., 1] + H / 2.0, H) - H / 2.0
            return out
        # oblique torus: wrap fractional Bravais coordinates
        V = np.column_stack([g.v1 * self.N1, g.v2 * self.N2])
        frac = pts @ np.linalg.inv(V).T
        frac = np.mod(frac + 0.5, 1.0) - 0.5
        return frac @ V.T

    # -- descriptors -------------------------------------------------------

    def describe(self) -> dict:
        d = {
            "cell": self.cell,
            "Lx": self.Lx, "Ly": self.Ly, "n_layers": self.n_layers,
            "n_sites": self.n_sites,
            "enumeration": "flat = (cell_index * n_layers + layer) * 2 + sublattice;"
                           " cells scan " + (
                               "m (outer) then n" if self.cell == "hex"
                               else "P (outer), Q, then c in {0,1}"),
            "sublattice_shift": "B sites sit at +a1 from A; layer l adds l*a1",
        }
        if self.cell == "rect":
            W, H = self.box()
            d["box"] = [W, H]
            d["augmented_bijection"] = (
                "honeycomb cell (m, n) <-> augmented (P, Q, c): c = (m+n) mod 2, "
                "P = (m+n-c)/2, Q = (m-n-c)/2; cell offsets 0 and v1")
        return d


def supercell(geom: LatticeGeometry, Lx: int, Ly: int, n_layers: int = 1,
              cell: str = "hex", max_sites: int | None = None) -> Supercell:
    """Build a finite periodic supercell (see Supercell for conventions)."""
    return Supercell(geom, Lx, Ly, n_layers=n_layers, cell=cell,
                     max_sites=max_sites)
