"""Velocity lattice, slab geometry, phase-space fields, quadrature and wall moments.

The velocity domain is the cube [-L, L]^3 discretized by a uniform lattice.
Two constructions exist:

  cell-centered (default): v_i = -L + (i + 1/2)*dv,  dv = 2L/n
      No node has v1 = 0, so the half-space split {n.v > 0} / {n.v < 0} at a
      wall is unambiguous and v1 -> -v1 is an exact lattice bijection.
  node-centered:           v_i = -L + i*dv,          dv = 2L/(n-1)
      Contains v = 0 when n is odd; the v1 = 0 plane carries zero flux weight.

All velocity integrals use the midpoint rule with weight dv^3 per node and
fixed lexicographic summation order so reductions are bit-reproducible.

The spatial domain is the interval (0, 1) split into uniform cells; the wall
at x = 0 has outward normal -e1 and the wall at x = 1 has outward normal +e1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Velocity polynomials accepted by `moment`; 'sqe' is the normalized energy
# defect (|v|^2 - 3)/sqrt(6) spanning the fifth collision-invariant direction.
MOMENT_IDS = ("1", "vx", "vy", "vz", "vsq", "sqe")


class VelocityGrid:
    """Uniform cubic velocity lattice with midpoint quadrature.

    Parameters
    ----------
    n_per_axis : nodes per axis (n^3 nodes total).
    v_max : velocity half-width L; the box is [-L, L]^3.
    centering : 'cell' (default) or 'node', see module docstring.
    """

    def __init__(self, n_per_axis: int, v_max: float, centering: str = "cell"):
        if n_per_axis < 2:
            raise ValueError("n_per_axis must be >= 2")
        if v_max <= 0:
            raise ValueError("v_max must be positive")
        if centering not in ("cell", "node"):
            raise ValueError(f"unknown centering {centering!r}")
        self.n = int(n_per_axis)
        self.v_max = float(v_max)
        self.centering = centering
        if centering == "cell":
            self.dv = 2.0 * self.v_max / self.n
            self.axis = -self.v_max + (np.arange(self.n) + 0.5) * self.dv
        else:
            self.dv = 2.0 * self.v_max / (self.n - 1)
            self.axis = -self.v_max + np.arange(self.n) * self.dv
        self.w = self.dv**3  # midpoint quadrature weight per node

        # Node coordinates as broadcastable 3D arrays (lexicographic axes).
        self.vx = self.axis[:, None, None]
        self.vy = self.axis[None, :, None]
        self.vz = self.axis[None, None, :]
        self.v_sq = self.vx**2 + self.vy**2 + self.vz**2
        self.v_abs = np.sqrt(self.v_sq)
        self.brak_sq = 1.0 + self.v_sq        # <v>^2
        self.brak = np.sqrt(self.brak_sq)     # <v>

        # Reflection v1 -> -v1 must be a lattice bijection (both constructions
        # are symmetric about 0, so a flip of the first index realizes it).
        if not np.allclose(self.axis, -self.axis[::-1], atol=1e-13):
            raise ValueError("velocity axis is not symmetric under v -> -v")

        self._polys = {
            "1": np.ones((self.n,) * 3),
            "vx": np.broadcast_to(self.vx, (self.n,) * 3),
            "vy": np.broadcast_to(self.vy, (self.n,) * 3),
            "vz": np.broadcast_to(self.vz, (self.n,) * 3),
            "vsq": self.v_sq,
            "sqe": (self.v_sq - 3.0) / np.sqrt(6.0),
        }

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    def maxwellian(self) -> np.ndarray:
        """mu(v) = (2 pi)^{-3/2} exp(-|v|^2/2) sampled on the lattice."""
        return (2.0 * np.pi) ** (-1.5) * np.exp(-0.5 * self.v_sq)

    def poly(self, poly_id) -> np.ndarray:
        """Resolve a velocity polynomial id (or pass through a custom array)."""
        if isinstance(poly_id, np.ndarray):
            if poly_id.shape != self.shape:
                raise ValueError("custom moment weight has wrong shape")
            return poly_id
        try:
            return self._polys[poly_id]
        except KeyError:
            raise ValueError(
                f"unknown moment id {poly_id!r}; expected one of {MOMENT_IDS}"
            ) from None

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Sum values * dv^3 over the last three axes (fixed C order)."""
        return np.sum(values, axis=(-3, -2, -1)) * self.w


@dataclass
class SlabGeometry:
    """Spatial mesh on (0, 1) with per-wall accommodation coefficients.

    iota = (iota_wall0, iota_wall1) with each value in [0, 1]; wall 0 sits at
    x = 0 (outward normal -e1), wall 1 at x = 1 (outward normal +e1).
    """

    n_cells: int
    iota: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.n_cells < 1:
            raise ValueError("n_cells must be >= 1")
        self.iota = (float(self.iota[0]), float(self.iota[1]))
        for side, i in enumerate(self.iota):
            if not 0.0 <= i <= 1.0:
                raise ValueError(f"iota[{side}] = {i} outside [0, 1]")
        self.dx = 1.0 / self.n_cells
        self.centers = (np.arange(self.n_cells) + 0.5) * self.dx

    def outward_normal(self, wall: int) -> float:
        """First component of n_x at the wall (the other two vanish)."""
        if wall == 0:
            return -1.0
        if wall == 1:
            return 1.0
        raise ValueError("wall must be 0 or 1")


@dataclass
class SlabField:
    """Distribution F(x, v) on the slab mesh x velocity lattice.

    values has shape (n_cells, n, n, n); axis 1 of the velocity block is v1
    (the transported direction).
    """

    grid: VelocityGrid
    geom: SlabGeometry
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        expect = (self.geom.n_cells,) + self.grid.shape
        if self.values.shape != expect:
            raise ValueError(f"values shape {self.values.shape} != {expect}")

    def copy(self) -> "SlabField":
        return SlabField(self.grid, self.geom, self.values.copy(), self.time)


def moment(field: SlabField, poly_id) -> np.ndarray:
    """Per-cell velocity moment  sum_v field * poly * dv^3.

    poly_id is one of MOMENT_IDS or a custom (n,n,n) coefficient array.
    """
    p = field.grid.poly(poly_id)
    return field.grid.integrate(field.values * p)


def half_flux(trace: np.ndarray, grid: VelocityGrid, geom: SlabGeometry,
              wall: int, sign: str, weight=1.0) -> float:
    """Half-space flux moment  sum_{(n_x.v) sign 0} trace * weight * |n_x.v| dv^3.

    trace is a full velocity-grid function; sign '+' selects the outgoing half
    {n_x.v > 0}, '-' the incoming half {n_x.v < 0}. Nodes with n_x.v = 0
    (node-centered grids) contribute zero either way.
    """
    if sign not in ("+", "-"):
        raise ValueError("sign must be '+' or '-'")
    nv = geom.outward_normal(wall) * grid.vx  # n_x . v, broadcast over (n,1,1)
    mask = nv > 0 if sign == "+" else nv < 0
    w = np.asarray(weight) if not np.isscalar(weight) else weight
    integrand = trace * np.abs(nv) * mask
    if not np.isscalar(w):
        integrand = integrand * w
        return float(np.sum(integrand) * grid.w)
    return float(np.sum(integrand) * grid.w) * float(w)
