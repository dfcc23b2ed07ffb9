"""Time integration on the slab: nonlinear, linearized, and Picard flows.

All flows share one Strang arrangement per step,

    half transport  ->  explicit RK2 collision substep  ->  half transport,

with the transport half-steps upwind (boundary module) and the collision
substep one of

    nonlinear:   d_t F = Q(F, F)
    linear L_g:  d_t f = Q(mu + g, f) + Q(f, mu) - pi Q(g, f)
    linear B_g:  d_t f = Q(mu + g, f) - M chi_R f.

Collision applications use the nondivergence form (a*g) d_ij f - (c*g) f:
at production resolutions its linearization about the Maxwellian is
spectrally stable on the truncated box, unlike the conservative flux form,
whose zero-extension drift d_j(a_ij*g) is large at the rim and seeds a
spurious slowly-growing mode (the flux form is kept as the invariant
cross-check route in the collision module). The O(dv^2) moment defect of
each collision substep is removed by a rank-five conservative correction,
so the walls remain the only source or sink of invariants.

The explicit collision substep obeys a parabolic step bound

    dt <= c_diff dv^2 / abar_eff,   abar_eff = max_v tr (a * F),

recomputed every step. The frozen-coefficient von Neumann bound for RK2 with
composed central first differences is dt <= 2 dv^2 / (3 lambda_max(a*F))
(symbol |sin k|/dv per axis, |s|^2 <= 3/dv^2, RK2 real-axis interval 2);
using the trace in place of lambda_max and the default c_diff = 0.45 leaves
a factor ~3 margin for coefficient variation and the drift term.

The default (M, R) for B_g comes from scanning the pointwise criterion

    varpi^{B0}_{omega,2}(v) - M chi_R(v) <= <v>^{gamma+s} kappa_{omega,2} / 3

on the grid and doubling both numbers for margin.

Picard iteration solves the linear L_g problem with the previous iterate
frozen as g (piecewise constant in time at the output cadence), starting from
g = 0, and tracks d_n = sup_t ||f^(n+1) - f^(n)||_{L^inf_{omega0}} with
omega0 = <v>^{k0}.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field as dc_field

import numpy as np

from . import diagnostics
from .boundary import transport_step, wall_maxwellian
from .collision import (BarCoefficients, KernelSet, ProjectorPi, cutoff_chi,
                        d2_maxwellian)
from .grid import SlabField, SlabGeometry, VelocityGrid, half_flux, moment
from .records import RunRecord, array_hash
from ._stencil import hess, sym_contract
from .weights import (LCoefficients, WeightRatios, WeightSpec, find_A,
                      kappa_asymptote, modified_weight_omegaA,
                      modified_weight_tilde, varpi)

MODES = ("nonlinear", "linear-L_g", "linear-B_g", "picard")
DATUM_IDS = ("zero", "transverse-mode", "energy-mode", "iso-bump", "indicator")


class NumericsError(RuntimeError):
    """Raised when a run produces non-finite values; carries the diagnostics
    collected so far and the last finite state."""

    def __init__(self, message: str, record: RunRecord | None = None,
                 last_state: np.ndarray | None = None):
        super().__init__(message)
        self.record = record
        self.last_state = last_state


def _default_weight(gamma: float) -> WeightSpec:
    # exp(<v>^2/4) is proportional to mu^{-1/2}; a safe all-purpose norm weight
    return WeightSpec("exponential", gamma, kappa=0.25, s=2.0)


@dataclass
class RunConfig:
    """Validated description of one run; every numeric choice lives here."""

    gamma: float
    mode: str
    t_end: float
    weight: WeightSpec | None = None
    n_cells: int = 16
    n_per_axis: int = 24
    v_max: float = 7.0
    centering: str = "cell"
    iota: tuple[float, float] = (0.0, 0.0)
    cfl: float = 0.9
    c_diff: float = 0.45
    M: float | None = None
    R: float | None = None
    A: float | None = None
    datum: str = "transverse-mode"
    eps: float = 1e-2
    record_every: int = 20
    ball_radius: float = 1.0
    picard_n_max: int = 6
    picard_tol: float = 1e-6
    threads: int = 1
    seed: int = 0

    def __post_init__(self):
        if not -3.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [-3, 1]")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.t_end < 0.0:
            raise ValueError("t_end must be >= 0")
        if self.weight is None:
            self.weight = _default_weight(self.gamma)
        if self.weight.gamma != self.gamma:
            raise ValueError("weight.gamma differs from config.gamma")
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError("cfl must lie in (0, 1]")
        if not 0.0 < self.c_diff <= 0.5:
            raise ValueError("c_diff must lie in (0, 1/2]")
        if self.datum not in DATUM_IDS:
            raise ValueError(f"datum must be one of {DATUM_IDS}")
        if self.eps < 0.0 or not math.isfinite(self.eps):
            raise ValueError("eps must be finite and >= 0")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if self.picard_n_max < 1:
            raise ValueError("picard_n_max must be >= 1")
        self.iota = (float(self.iota[0]), float(self.iota[1]))

    def echo(self) -> dict:
        """JSON-ready echo of every effective value, excluding pure
        execution-resource flags (threads) so records stay thread-invariant."""
        d = asdict(self)
        d.pop("threads")
        d["iota"] = list(self.iota)
        return d


def initial_datum(datum: str, eps: float, grid: VelocityGrid,
                  geom: SlabGeometry) -> np.ndarray:
    """Perturbation f0(x, v) of shape (n_cells, n, n, n).

    The x-profile cos(2 pi x) sampled at cell midpoints sums to zero exactly,
    so the mode data carry zero total mass/momentum/energy to roundoff.
    """
    cosx = np.cos(2.0 * np.pi * geom.centers)[:, None, None, None]
    mu = grid.maxwellian()
    shape = (geom.n_cells,) + grid.shape
    if datum == "zero":
        return np.zeros(shape)
    if datum == "transverse-mode":
        return eps * cosx * (grid.vx * mu * np.ones(grid.shape))
    if datum == "energy-mode":
        return eps * cosx * (grid.poly("sqe") * mu)
    if datum == "iso-bump":
        return eps * cosx * np.exp(-grid.v_sq) * np.ones(shape)
    if datum == "indicator":
        return eps * (1.0 + cosx) * (grid.v_abs <= 2.0).astype(float) \
            * np.ones(shape)
    raise ValueError(f"unknown datum {datum!r}")


def damped_substep_is_monotone(grid: VelocityGrid, A6: np.ndarray,
                               C: np.ndarray, weight_field: np.ndarray,
                               M: float, R: float, c_diff: float,
                               n_steps: int = 520, n_probes: int = 2,
                               tol: float = 1e-10) -> bool:
    """Empirical stepwise monotonicity of the damped collision substep.

    Steps f' = A:hess f - (C + M chi_R) f with the production RK2 and dt
    policy from Maxwellian-modulated states and reports whether the weighted
    L^2 norm is nonincreasing at every step. Smooth-tailed probes matter:
    the failure mode is a nonnormal transient in which the bulk pumps the
    box rim (where the weight is enormous) through the stencil faster than
    the damping drains it, so rim-dominated random states decay monotonically
    while realistic Maxwellian-tailed data grow."""
    dv = grid.dv
    chi = cutoff_chi(R, grid.v_abs) * np.ones(grid.shape)
    react = C + M * chi
    trace_max = float(np.max(A6[0] + A6[1] + A6[2]))
    dt_d = c_diff * dv**2 / trace_max
    dt_r = 1.8 / float(np.max(np.abs(react)))
    dt = 1.0 / (1.0 / dt_d + 1.0 / dt_r)
    w2 = weight_field**2
    mu = grid.maxwellian()
    rng = np.random.default_rng(0)
    for p in range(n_probes):
        f = mu if p == 0 else mu * rng.standard_normal(grid.shape)
        prev = float(np.sum(w2 * f * f))
        floor = prev * 1e-280
        for _ in range(n_steps):
            k1 = sym_contract(A6, hess(f, dv)) - react * f
            fm = f + 0.5 * dt * k1
            k2 = sym_contract(A6, hess(fm, dv)) - react * fm
            f = f + dt * k2
            cur = float(np.sum(w2 * f * f))
            if cur > prev * (1.0 + tol):
                return False
            prev = cur
            if cur <= floor:
                break  # fully damped; nothing left to monitor
    return True


def find_mr(grid: VelocityGrid, w: WeightSpec, bars: BarCoefficients,
            weight_field: np.ndarray | None = None,
            c_diff: float = 0.45) -> tuple[float, float]:
    """(M, R) such that varpi^{B0}_{omega,2} - M chi_R <= <v>^{gamma+s} kappa/3
    pointwise on the grid, both doubled for margin (deterministic scan).

    With weight_field given (the modified weight omega_A on the grid), a
    second, discrete stage doubles M until the production RK2 recursion for
    the frozen damped operator is stepwise nonincreasing in the weighted
    norm on random probe states. The pointwise continuum criterion ignores
    the stencil's fat discrete tails (the state decays faster per cell than
    central differences resolve at the box rim), which for hard potentials
    leave a genuinely growing weighted mode; "M large enough" is resolved
    against the recursion actually stepped."""
    L = LCoefficients(sigma=bars.abar, nu=None, eta=-bars.cbar,
                      div_sigma=bars.bbar, div2_sigma=bars.cbar, div_nu=0.0)
    ratios = WeightRatios.from_spec(w, grid)
    vp = varpi(L, ratios, 2.0)
    target = grid.brak ** (w.gamma + w.s) * (kappa_asymptote(w, 2.0) / 3.0)
    excess = vp - target
    R = 1.0
    vmax_node = float(np.max(grid.v_abs))
    while R < vmax_node:
        outside = grid.v_abs >= R
        if not np.any(outside) or float(np.max(excess[outside])) <= 0.0:
            break
        R *= 2.0
    M = max(0.0, float(np.max(excess)))
    M, R = 2.0 * M, 2.0 * R
    if weight_field is not None:
        M = max(M, 1.0)
        while 2.0 * R <= vmax_node:
            R *= 2.0  # keep chi_R positive on the whole grid, rim included
        for _ in range(24):
            if damped_substep_is_monotone(grid, bars.abar, bars.cbar,
                                          weight_field, M, R, c_diff):
                break
            M *= 2.0
        else:
            raise ValueError("no M renders the damped substep monotone "
                             "for this weight/grid")
    return M, R


class _FrozenLinear:
    """Per-segment coefficient cache for the linear flows with frozen g."""

    def __init__(self, kernels: KernelSet, g: np.ndarray | None):
        grid = kernels.grid
        mu = grid.maxwellian()
        state = mu + g if g is not None else np.broadcast_to(mu, grid.shape)
        self.coeffs = kernels.coefficient_fields(state)  # a*(mu+g), c*(mu+g)
        self.has_g = g is not None
        self.trace_max = float(np.max(self.coeffs[0][0] + self.coeffs[0][1]
                                      + self.coeffs[0][2]))

    def g_coeffs(self, bars: BarCoefficients):
        """(a*g, c*g) by bilinearity: subtract the Maxwellian averages."""
        A, C = self.coeffs
        return (A - bars.abar.reshape((6,) + (1,) * (A.ndim - 4)
                                      + bars.abar.shape[1:])
                if A.ndim > 4 else A - bars.abar,
                C - bars.cbar)


class SlabSolver:
    """Owns the grids, kernels, weights, and stepping logic for one config."""

    def __init__(self, config: RunConfig):
        self.config = config
        cfg = config
        self.grid = VelocityGrid(cfg.n_per_axis, cfg.v_max, cfg.centering)
        self.geom = SlabGeometry(cfg.n_cells, cfg.iota)
        self.kernels = KernelSet(self.grid, cfg.gamma, workers=cfg.threads)
        self.bars = BarCoefficients(self.kernels)
        self.mu = self.grid.maxwellian()
        self.d2mu = d2_maxwellian(self.grid)
        self.m_disc = (wall_maxwellian(self.grid, self.geom, 0),
                       wall_maxwellian(self.grid, self.geom, 1))
        self.pi = ProjectorPi(self.grid)
        w = cfg.weight
        self.om = w.eval_bsq(self.grid.brak_sq)  # base norm weight omega(v)
        self.om0 = self.grid.brak ** w.k0        # Picard comparison weight
        self.M, self.R, self.A = cfg.M, cfg.R, cfg.A
        self.om_tilde = None
        if cfg.mode == "linear-B_g":
            if self.A is None:
                found = find_A(w, kind="primal")
                if not found["succeeded"]:
                    raise ValueError("no admissible A found for this weight")
                self.A = found["A_star"]
            if self.M is None or self.R is None:
                om_a = np.asarray(modified_weight_omegaA(w, self.A, self.grid)) \
                    * np.ones(self.grid.shape)
                self.M, self.R = find_mr(self.grid, w, self.bars,
                                         weight_field=om_a,
                                         c_diff=cfg.c_diff)
            n_dot = ((2.0 * self.geom.centers - 1.0)[:, None, None, None]
                     * self.grid.vx)
            self.om_tilde = modified_weight_tilde(w, self.A, self.grid, n_dot)
        self.chi = cutoff_chi(self.R, self.grid.v_abs) if self.R else None
        # rank-five conservative correction: phi_a are the collision
        # invariants, psi_b = phi_b mu carry the correction; G_ab = <phi_a,
        # psi_b> so that subtracting (G^{-1} defect) . psi restores the
        # pre-substep moments exactly without touching wall bookkeeping
        gr = self.grid
        ones = np.ones(gr.shape)
        phis = [ones, gr.vx * ones, gr.vy * ones, gr.vz * ones, gr.v_sq]
        self._phi = np.stack([p.ravel() for p in phis]) * gr.w
        self._psi = np.stack([(p * self.mu).ravel() for p in phis])
        self._gram_inv = np.linalg.inv(self._phi @ self._psi.T)

    def _conserve(self, f_new: np.ndarray, f_ref: np.ndarray) -> np.ndarray:
        """Remove the O(dv^2) invariant defect of a collision substep."""
        lead = f_new.shape[:-3]
        delta = (f_new - f_ref).reshape(lead + (-1,))
        defect = delta @ self._phi.T            # (..., 5)
        coef = defect @ self._gram_inv.T
        return f_new - (coef @ self._psi).reshape(f_new.shape)

    # -- step bounds --------------------------------------------------------

    def dt_transport_bound(self) -> float:
        vmax = float(np.max(np.abs(self.grid.axis)))
        return self.config.cfl * self.geom.dx / vmax

    def dt_collision_bound(self, trace_max: float) -> float:
        if trace_max <= 0.0:
            return math.inf
        return self.config.c_diff * self.grid.dv**2 / trace_max

    def dt_reaction_bound(self, frozen: "_FrozenLinear") -> float:
        """RK2 real-axis bound for the local reaction -(c*(mu+g) + M chi) f;
        binding only for the damped flow when the resolved M is large."""
        if self.M is None or self.chi is None:
            return math.inf
        react = float(np.max(np.abs(frozen.coeffs[1]) + self.M * self.chi))
        if react <= 0.0:
            return math.inf
        return 1.8 / react

    @staticmethod
    def _trace_max(coeffs) -> float:
        A = coeffs[0]
        return float(np.max(A[0] + A[1] + A[2]))

    # -- single steps -------------------------------------------------------

    def step_nonlinear(self, field: SlabField, dt: float,
                       coeffs=None) -> SlabField:
        """Strang step of d_t F = -v1 d_x F + Q(F, F).

        coeffs may carry (a*F, c*F) at the pre-step state; reusing them for the
        RK2 first stage is the standard frozen-coefficient trick and keeps the
        local error O(dt^3). The stage-2 coefficients are always fresh.
        """
        half = transport_step(field, 0.5 * dt, self.config.cfl, self.m_disc)
        F = half.values
        if coeffs is None:
            coeffs = self.kernels.coefficient_fields(F)
        bound = self.dt_collision_bound(self._trace_max(coeffs))
        if dt > bound * 1.0001:
            raise ValueError(f"collision dt = {dt} exceeds bound {bound}")
        k1 = sym_contract(coeffs[0], hess(F, self.grid.dv)) - coeffs[1] * F
        Fm = F + 0.5 * dt * k1
        cm = self.kernels.coefficient_fields(Fm)
        k2 = sym_contract(cm[0], hess(Fm, self.grid.dv)) - cm[1] * Fm
        out = SlabField(self.grid, self.geom,
                        self._conserve(F + dt * k2, F), half.time)
        return transport_step(out, 0.5 * dt, self.config.cfl, self.m_disc)

    def _linear_rhs(self, f: np.ndarray, which: str,
                    frozen: _FrozenLinear) -> np.ndarray:
        A, C = frozen.coeffs
        base = sym_contract(A, hess(f, self.grid.dv)) - C * f  # Q(mu+g, f)
        if which == "B_g":
            if self.M:
                base = base - self.M * self.chi * f
            return base
        if which != "L_g":
            raise ValueError("which must be 'L_g' or 'B_g'")
        Af, Cf = self.kernels.coefficient_fields(f)
        qfmu = sym_contract(Af, self.d2mu) - Cf * self.mu  # Q(f, mu)
        out = base + qfmu
        if frozen.has_g:
            gA, gC = frozen.g_coeffs(self.bars)
            qgf = sym_contract(gA, hess(f, self.grid.dv)) - gC * f
            out = out - self.pi.apply(qgf)
        return out

    def step_linear(self, field: SlabField, g: np.ndarray | None, dt: float,
                    which: str, frozen: _FrozenLinear | None = None) -> SlabField:
        """Strang step of d_t f = -v1 d_x f + (collision part of L_g or B_g)."""
        if frozen is None:
            frozen = _FrozenLinear(self.kernels, g)
        bound = self.dt_collision_bound(frozen.trace_max)
        if which == "B_g":
            # diffusion and reaction symbols add; combine bounds harmonically
            rb = self.dt_reaction_bound(frozen)
            if math.isfinite(rb):
                bound = 1.0 / (1.0 / bound + 1.0 / rb)
        if dt > bound * 1.0001:
            raise ValueError(f"collision dt = {dt} exceeds bound {bound}")
        half = transport_step(field, 0.5 * dt, self.config.cfl, self.m_disc)
        f = half.values
        k1 = self._linear_rhs(f, which, frozen)
        fm = f + 0.5 * dt * k1
        k2 = self._linear_rhs(fm, which, frozen)
        f_new = f + dt * k2
        if which == "L_g":  # B_g is damped by design; no invariants to restore
            f_new = self._conserve(f_new, f)
        out = SlabField(self.grid, self.geom, f_new, half.time)
        return transport_step(out, 0.5 * dt, self.config.cfl, self.m_disc)

    # -- diagnostics --------------------------------------------------------

    def diagnostics_row(self, field: SlabField) -> dict:
        cfg = self.config
        dx = self.geom.dx
        vals = field.values
        pert = vals - self.mu if cfg.mode == "nonlinear" else vals
        row = {"t": field.time}
        for name, pid in (("mass", "1"), ("momentum1", "vx"),
                          ("momentum2", "vy"), ("momentum3", "vz"),
                          ("energy", "vsq")):
            row[name] = float(np.sum(moment(field, pid))) * dx
        if cfg.mode == "nonlinear":
            pos = vals > 0.0
            row["H"] = float(np.sum(np.where(
                pos, vals * np.log(np.where(pos, vals, 1.0)), 0.0))) \
                * self.grid.w * dx
        else:
            row["H"] = math.nan
        row["Linf_w"] = float(np.max(np.abs(pert) * self.om))
        l2w = self.om_tilde if self.om_tilde is not None else self.om
        row["L2_w"] = math.sqrt(float(np.sum((pert * l2w) ** 2))
                                * self.grid.w * dx)
        row["Hstar"] = diagnostics.h_star_norm(pert, self.grid, cfg.weight,
                                               dx=dx)
        row["flux_wall0"] = half_flux(vals[0], self.grid, self.geom, 0, "+")
        row["flux_wall1"] = half_flux(vals[-1], self.grid, self.geom, 1, "+")
        return row

    def header(self) -> dict:
        return {
            "config": self.config.echo(),
            "grid": {"dv": self.grid.dv, "dx": self.geom.dx,
                     "axis_hash": array_hash(self.grid.axis)},
            "resolved": {"M": self.M, "R": self.R, "A": self.A},
        }

    # -- full runs ----------------------------------------------------------

    def initial_field(self) -> SlabField:
        f0 = initial_datum(self.config.datum, self.config.eps, self.grid,
                           self.geom)
        if self.config.mode == "nonlinear":
            f0 = f0 + self.mu
        return SlabField(self.grid, self.geom, f0, 0.0)

    def run(self, g_traj: tuple[np.ndarray, np.ndarray] | None = None,
            dt_fixed: float | None = None, capture: bool = False):
        """Integrate to t_end, recording diagnostics at the output cadence.

        g_traj = (times, snapshots) freezes g piecewise-constant in time for
        the linear modes. With capture=True the recorded state snapshots are
        returned alongside the RunRecord (used by the Picard loop).
        """
        cfg = self.config
        which = {"linear-L_g": "L_g", "linear-B_g": "B_g",
                 "picard": "L_g"}.get(cfg.mode)
        field = self.initial_field()
        record = RunRecord(header=self.header())
        record.append_row(self.diagnostics_row(field))
        snaps = [field.values.copy()] if capture else None
        snap_times = [0.0]
        dt_t = self.dt_transport_bound()
        seg_idx, frozen = -1, None
        step = 0
        try:
            while field.time < cfg.t_end - 1e-12:
                if which is None:  # nonlinear
                    coeffs = self.kernels.coefficient_fields(field.values)
                    dt = min(dt_t, self.dt_collision_bound(
                        self._trace_max(coeffs)))
                else:
                    idx = 0
                    g = None
                    if g_traj is not None:
                        times_g, stack_g = g_traj
                        idx = int(np.searchsorted(times_g, field.time + 1e-12,
                                                  side="right") - 1)
                        idx = max(idx, 0)
                        g = stack_g[idx]
                    if frozen is None or idx != seg_idx:
                        frozen = _FrozenLinear(self.kernels, g)
                        seg_idx = idx
                    dt_c = self.dt_collision_bound(frozen.trace_max)
                    if which == "B_g":
                        rb = self.dt_reaction_bound(frozen)
                        if math.isfinite(rb):
                            dt_c = 1.0 / (1.0 / dt_c + 1.0 / rb)
                    dt = min(dt_t, dt_c)
                if dt_fixed is not None:
                    if dt_fixed > dt * 1.0001:
                        raise ValueError(
                            f"fixed dt = {dt_fixed} exceeds bound {dt}")
                    dt = dt_fixed
                dt = min(dt, cfg.t_end - field.time)
                if which is None:
                    field = self.step_nonlinear(field, dt, coeffs=coeffs)
                else:
                    field = self.step_linear(field, None, dt, which,
                                             frozen=frozen)
                step += 1
                at_end = field.time >= cfg.t_end - 1e-12
                if step % cfg.record_every == 0 or at_end:
                    if not np.all(np.isfinite(field.values)):
                        raise NumericsError(
                            f"non-finite state at t = {field.time}",
                            record=record,
                            last_state=snaps[-1] if snaps else None)
                    record.append_row(self.diagnostics_row(field))
                    if capture:
                        snaps.append(field.values.copy())
                    snap_times.append(field.time)
        except NumericsError:
            raise
        record.final_state = field.values
        record.reports["steps"] = step
        if capture:
            return record, np.asarray(snap_times), np.stack(snaps)
        return record


def run(config: RunConfig) -> RunRecord:
    return SlabSolver(config).run()


@dataclass
class PicardState:
    """One iterate of the fixed-point map g -> solution of the L_g problem."""

    n: int
    times: np.ndarray
    trajectory: np.ndarray  # (n_records, n_cells, n, n, n)
    d_n: float              # sup_t ||f^(n) - f^(n-1)||_{L^inf_{omega0}}
    sup_norm: float         # sup_t ||f^(n)||_{L^inf_{omega0}}
    in_ball: bool = dc_field(default=True)


def picard_iterate(config: RunConfig, n_max: int | None = None,
                   tol: float | None = None) -> dict:
    """Fixed-point iteration for the nonlinear problem via frozen-g solves.

    g^(0) = 0; each iteration solves the linear L_g flow with the previous
    trajectory frozen (piecewise constant at cadence) and the *same* fixed dt
    as iteration 0, so successive trajectories share identical timestamps.
    Stops at d_n <= tol or n = n_max; three consecutive increases of d_n are
    reported as divergence.
    """
    n_max = n_max if n_max is not None else config.picard_n_max
    tol = tol if tol is not None else config.picard_tol
    solver = SlabSolver(config)
    om0 = solver.om0
    base = _FrozenLinear(solver.kernels, None)
    dt0 = 0.95 * min(solver.dt_transport_bound(),
                     solver.dt_collision_bound(base.trace_max))
    history: list[PicardState] = []
    g_traj = None
    prev_stack = None
    diverged = False
    for n in range(1, n_max + 1):
        _, times, stack = solver.run(g_traj=g_traj, dt_fixed=dt0, capture=True)
        ref = prev_stack if prev_stack is not None else np.zeros_like(stack)
        d_n = float(np.max(np.abs(stack - ref) * om0))
        sup_norm = float(np.max(np.abs(stack) * om0))
        history.append(PicardState(n=n, times=times, trajectory=stack,
                                   d_n=d_n, sup_norm=sup_norm,
                                   in_ball=sup_norm <= config.ball_radius))
        if d_n <= tol:
            break
        if len(history) >= 3 and (history[-1].d_n > history[-2].d_n
                                  > history[-3].d_n):
            diverged = True
            break
        prev_stack = stack
        g_traj = (times, stack)
    return {"history": history, "diverged": diverged, "dt": dt0,
            "converged": history[-1].d_n <= tol,
            "ball_invariant": all(h.in_ball for h in history)}
