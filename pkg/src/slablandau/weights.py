"""Admissible weights, decay laws, multiplier calculus, and boundary constants.

Weights (with bracket <v> = (1+|v|^2)^{1/2}):

    omega = <v>^k            (polynomial; requires k > k0 with k0 > 8 + gamma)
    omega = exp(kappa <v>^s) (exponential; s in (0,2) with kappa > 0, or s = 2
                              with kappa in (0, 1/2))

Convention: s := 0 for polynomial weights, and for exponential weights the
"effective k" is k := kappa*s; with these, the logarithmic derivatives of both
families share the closed form

    d_i omega / omega      = v_i * P,          P := k <v>^{s-2}
    d_ij omega / omega     = P delta_ij + v_i v_j P (P + (s-2)/<v>^2).

The multiplier function of the generic second-order operator

    L g = sigma_ij d_ij g + nu_i d_i g + eta g

arises from testing L against |g|^{p-2} g omega^p:

    int (Lg)|g|^{p-2} g omega^p
        = -(4(p-1)/p^2) int sigma_ij d_iG d_jG + int varpi |g|^p omega^p,
    G := omega^{p/2} g |g|^{p/2-1},

    varpi^L_{omega,p} = 2(1-1/p) sigma_ij r_i r_j + (2/p - 1) sigma_ij r_ij
                        + (2/p)(div sigma)_i r_i + (1/p) div^2 sigma
                        - nu_i r_i - (1/p) div nu + eta,

with r_i = d_i omega/omega, r_ij = d_ij omega/omega, and the convention
1/inf = 0 for p = inf.  For the operator B0 = Q(mu, .) (sigma = abar, nu = 0,
eta = -cbar, div sigma = bbar, div^2 sigma = cbar) the large-velocity limit

    limsup <v>^{-gamma-s} varpi^{B0}_{omega,p} <= kappa_{omega,p} < 0,
    kappa_{omega,p} = -2k + 2(1-1/p)(gamma+3)  (s = 0)
                      -2k                       (s in (0,2))
                      -2k(1-k)                  (s = 2)

drives all dissipativity estimates.  This module also provides the modified
weights omega_A / omega-tilde, the wall constants K0, K1, K2 with the
choice-of-A criterion K1 - 1/K2 - 1/(2 K0) <= 0 (primal and dual), and the
Gronwall-with-truncation machinery Gamma_t(R) behind the weak decay laws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from ._stencil import grad, hess, sym_quad, sym_contract

_TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# weight specifications


@dataclass(frozen=True)
class WeightSpec:
    """An admissible weight omega paired with an interaction exponent gamma.

    kind 'polynomial': omega = <v>^k, requires k > k0 (default k0 = 8.5+gamma).
    kind 'exponential': omega = exp(kappa <v>^s).
    """

    kind: str
    gamma: float
    k: float = 0.0
    kappa: float = 0.0
    s: float = 0.0
    k0: float | None = None

    def __post_init__(self):
        if not -3.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [-3, 1]")
        k0 = self.k0 if self.k0 is not None else 8.5 + self.gamma
        object.__setattr__(self, "k0", float(k0))
        if self.kind == "polynomial":
            if not self.k0 > 8.0 + self.gamma:
                raise ValueError("k0 must exceed 8 + gamma")
            if not self.k > self.k0:
                raise ValueError(
                    f"polynomial weight requires k > k0 = {self.k0}")
            object.__setattr__(self, "s", 0.0)
        elif self.kind == "exponential":
            if self.s == 2.0:
                if not 0.0 < self.kappa < 0.5:
                    raise ValueError("s = 2 requires kappa in (0, 1/2)")
            elif 0.0 < self.s < 2.0:
                if not self.kappa > 0.0:
                    raise ValueError("exponential weight requires kappa > 0")
            else:
                raise ValueError("exponential weight requires s in (0, 2]")
        else:
            raise ValueError(f"unknown weight kind {self.kind!r}")

    @property
    def k_eff(self) -> float:
        """k for polynomial weights, kappa*s for exponential ones."""
        return self.k if self.kind == "polynomial" else self.kappa * self.s

    def log_eval_bsq(self, brak_sq) -> np.ndarray:
        """log omega as a function of <v>^2."""
        b = np.asarray(brak_sq, dtype=float)
        if self.kind == "polynomial":
            return 0.5 * self.k * np.log(b)
        return self.kappa * b ** (0.5 * self.s)

    def eval_bsq(self, brak_sq) -> np.ndarray:
        """omega as a function of <v>^2."""
        return np.exp(self.log_eval_bsq(brak_sq))


def eval_weight(w: WeightSpec, v) -> np.ndarray:
    """omega(v) for velocity vectors v of shape (..., 3)."""
    v = np.asarray(v, dtype=float)
    brak_sq = 1.0 + np.sum(v * v, axis=-1)
    return w.eval_bsq(brak_sq)


def weight_p(w: WeightSpec, brak_sq) -> np.ndarray:
    """The factor P = k <v>^{s-2} of the logarithmic weight derivatives."""
    b = np.asarray(brak_sq, dtype=float)
    return w.k_eff * b ** (0.5 * (w.s - 2.0))


class WeightRatios:
    """Closed-form logarithmic derivatives r_i, r_ij of a weight on a lattice.

    coords must expose vx, vy, vz (broadcastable) and brak_sq; a VelocityGrid
    qualifies. inverse() yields the ratios of m = omega^{-1} via
    d(1/w)/(1/w) = -r_i and d2(1/w)/(1/w) = 2 r_i r_j - r_ij.
    """

    def __init__(self, r: np.ndarray, rr: np.ndarray):
        self.r = r    # (3, ...)
        self.rr = rr  # (6, ...), order (11,22,33,12,13,23)

    @classmethod
    def from_spec(cls, w: WeightSpec, coords) -> "WeightRatios":
        bsq = np.asarray(coords.brak_sq, dtype=float)
        P = weight_p(w, bsq)
        vcomp = [np.broadcast_to(np.asarray(c, dtype=float), bsq.shape)
                 for c in (coords.vx, coords.vy, coords.vz)]
        r = np.stack([vc * P for vc in vcomp])
        fac = P * (P + (w.s - 2.0) / bsq)
        rr = np.empty((6,) + bsq.shape)
        rr[0] = P + vcomp[0] * vcomp[0] * fac
        rr[1] = P + vcomp[1] * vcomp[1] * fac
        rr[2] = P + vcomp[2] * vcomp[2] * fac
        rr[3] = vcomp[0] * vcomp[1] * fac
        rr[4] = vcomp[0] * vcomp[2] * fac
        rr[5] = vcomp[1] * vcomp[2] * fac
        return cls(r, rr)

    def inverse(self) -> "WeightRatios":
        r = -self.r
        rr = self.rr.copy()
        from ._stencil import SYM_IDX
        for m, (i, j) in enumerate(SYM_IDX):
            rr[m] = 2.0 * self.r[i] * self.r[j] - self.rr[m]
        return WeightRatios(r, rr)


# ---------------------------------------------------------------------------
# generic second-order operator coefficients


@dataclass
class LCoefficients:
    """Coefficients of L g = sigma_ij d_ij g + nu_i d_i g + eta g on a lattice.

    sigma is packed symmetric (6, ...); nu is (3, ...) or None (zero); eta is
    an array or scalar. The divergence fields d_j sigma_ij, d_ij sigma_ij and
    d_i nu_i may be supplied in closed form (e.g. bbar/cbar for sigma = abar);
    otherwise they are produced by central differences using dv.
    """

    sigma: np.ndarray
    nu: np.ndarray | None = None
    eta: np.ndarray | float = 0.0
    div_sigma: np.ndarray | None = None
    div2_sigma: np.ndarray | float | None = None
    div_nu: np.ndarray | float | None = None
    dv: float | None = None

    def _need_dv(self):
        if self.dv is None:
            raise ValueError("divergence fields absent and dv not provided")
        return self.dv

    def get_div_sigma(self) -> np.ndarray:
        if self.div_sigma is None:
            dv = self._need_dv()
            from ._stencil import SYM_IDX
            at = {tuple(sorted(ij)): m for m, ij in enumerate(SYM_IDX)}
            out = np.zeros((3,) + self.sigma.shape[1:])
            for i in range(3):
                for j in range(3):
                    comp = self.sigma[at[tuple(sorted((i, j)))]]
                    out[i] += grad(comp, dv)[j]
            self.div_sigma = out
        return self.div_sigma

    def get_div2_sigma(self):
        if self.div2_sigma is None:
            dv = self._need_dv()
            ds = self.get_div_sigma()
            self.div2_sigma = sum(grad(ds[i], dv)[i] for i in range(3))
        return self.div2_sigma

    def get_div_nu(self):
        if self.div_nu is None:
            if self.nu is None:
                return 0.0
            dv = self._need_dv()
            self.div_nu = sum(grad(self.nu[i], dv)[i] for i in range(3))
        return self.div_nu

    def apply(self, g: np.ndarray, dv: float) -> np.ndarray:
        """Lg with central-difference derivatives of g."""
        out = sym_contract(self.sigma, hess(g, dv))
        if self.nu is not None:
            gg = grad(g, dv)
            out = out + self.nu[0] * gg[0] + self.nu[1] * gg[1] + self.nu[2] * gg[2]
        return out + self.eta * g

    def adjoint(self) -> "LCoefficients":
        """Coefficients of the formal adjoint L* h = d_ij(sigma_ij h) - d_i(nu_i h) + eta h."""
        ds = self.get_div_sigma()
        nu_star = 2.0 * ds - (0.0 if self.nu is None else self.nu)
        eta_star = self.get_div2_sigma() - self.get_div_nu() + self.eta
        # div sigma* = div sigma; div nu* = 2 div^2 sigma - div nu.
        return LCoefficients(
            sigma=self.sigma, nu=nu_star, eta=eta_star,
            div_sigma=ds, div2_sigma=self.get_div2_sigma(),
            div_nu=2.0 * np.asarray(self.get_div2_sigma()) - np.asarray(self.get_div_nu()),
            dv=self.dv)


def _inv_p(p: float) -> float:
    if p == math.inf:
        return 0.0
    if p < 1.0:
        raise ValueError("p must be >= 1 (or inf)")
    return 1.0 / p


def varpi(L: LCoefficients, ratios: WeightRatios, p: float) -> np.ndarray:
    """The six-term multiplier varpi^L_{omega,p} evaluated nodewise."""
    ip = _inv_p(p)
    out = 2.0 * (1.0 - ip) * sym_quad(L.sigma, ratios.r, ratios.r)
    out = out + (2.0 * ip - 1.0) * sym_contract(L.sigma, ratios.rr)
    ds = L.get_div_sigma()
    out = out + (2.0 * ip) * (ds[0] * ratios.r[0] + ds[1] * ratios.r[1]
                              + ds[2] * ratios.r[2])
    out = out + ip * np.asarray(L.get_div2_sigma())
    if L.nu is not None:
        out = out - (L.nu[0] * ratios.r[0] + L.nu[1] * ratios.r[1]
                     + L.nu[2] * ratios.r[2])
    out = out - ip * np.asarray(L.get_div_nu())
    return out + L.eta


def verify_dissipativity_identity(L: LCoefficients, w: WeightSpec, p: float,
                                  g: np.ndarray, grid) -> float:
    """Relative residual of the weighted L^p dissipation identity.

    Both sides are evaluated by midpoint quadrature with central-difference
    derivatives; for g supported well inside the box the residual is O(dv^2).
    """
    if p == math.inf:
        raise ValueError("the integral identity requires finite p")
    dv, qw = grid.dv, grid.w
    omega = w.eval_bsq(grid.brak_sq)
    ratios = WeightRatios.from_spec(w, grid)
    absg = np.abs(g)
    lhs = np.sum(L.apply(g, dv) * absg ** (p - 2.0) * g * omega**p) * qw
    G = omega ** (0.5 * p) * g * absg ** (0.5 * p - 1.0)
    dG = grad(G, dv)
    rhs = (-(4.0 * (p - 1.0) / p**2) * np.sum(sym_quad(L.sigma, dG, dG)) * qw
           + np.sum(varpi(L, ratios, p) * absg**p * omega**p) * qw)
    return abs(lhs - rhs) / (abs(lhs) + abs(rhs) + 1e-300)


# ---------------------------------------------------------------------------
# asymptotic dissipativity constants


def kappa_asymptote(w: WeightSpec, p: float) -> float:
    """kappa_{omega,p}, the (negative) large-|v| limit constant."""
    ip = _inv_p(p)
    k = w.k_eff
    if w.s == 0.0:
        val = -2.0 * k + 2.0 * (1.0 - ip) * (w.gamma + 3.0)
    elif w.s < 2.0:
        val = -2.0 * k
    else:
        val = -2.0 * k * (1.0 - k)
    if not val < 0.0:
        raise ValueError("kappa_{omega,p} is not negative; weight inadmissible")
    return val


def varpi_b0_at(w: WeightSpec, p: float, v1: float, bars: dict) -> float:
    """varpi^{B0}_{omega,p} at the probe point v = (v1, 0, 0).

    bars supplies abar (6,), bbar (3,), cbar at that point (from the collision
    module's radial quadrature or grid convolution).
    """
    class _Pt:
        vx, vy, vz = v1, 0.0, 0.0
        brak_sq = 1.0 + v1 * v1
    ratios = WeightRatios.from_spec(w, _Pt)
    L = LCoefficients(sigma=np.asarray(bars["abar"], dtype=float),
                      nu=None, eta=-float(bars["cbar"]),
                      div_sigma=np.asarray(bars["bbar"], dtype=float),
                      div2_sigma=float(bars["cbar"]), div_nu=0.0)
    return float(varpi(L, ratios, p))


def kappa_limit_check(w: WeightSpec, p: float, probe_radius: float,
                      bars: dict | None = None) -> float:
    """Relative gap <v>^{-gamma-s} varpi^{B0}_{omega,p}(v) / kappa_{omega,p} - 1
    at |v| = probe_radius, with abar/bbar/cbar from radial quadrature."""
    if bars is None:
        from .collision import bar_coefficients_at
        bars = bar_coefficients_at(w.gamma, probe_radius)
    vp = varpi_b0_at(w, p, probe_radius, bars)
    brak = math.sqrt(1.0 + probe_radius**2)
    kap = kappa_asymptote(w, p)
    return brak ** (-w.gamma - w.s) * vp / kap - 1.0


# ---------------------------------------------------------------------------
# modified weights near the wall Maxwellian


def log_wall_maxwellian_bsq(brak_sq) -> np.ndarray:
    """log M with M = sqrt(2 pi) mu = (2 pi)^{-1} exp(-|v|^2/2); |v|^2 = <v>^2 - 1."""
    return -math.log(_TWO_PI) - 0.5 * (np.asarray(brak_sq, dtype=float) - 1.0)


def log_omega_A_sq(w: WeightSpec, A: float, brak_sq) -> np.ndarray:
    """log omega_A^2 with omega_A^2 = chi_A M^{-1} + (1 - chi_A) omega^2.

    Evaluated in log space so that the Gaussian-growing core never overflows
    before the final exponential.
    """
    from .collision import cutoff_chi
    bsq = np.atleast_1d(np.asarray(brak_sq, dtype=float))
    vabs = np.sqrt(np.maximum(bsq - 1.0, 0.0))
    chi = cutoff_chi(A, vabs)
    log_minv = -log_wall_maxwellian_bsq(bsq)
    log_om2 = 2.0 * w.log_eval_bsq(bsq)
    out = np.where(chi >= 1.0, log_minv, log_om2)
    mid = (chi > 0.0) & (chi < 1.0)
    if np.any(mid):
        out[mid] = np.logaddexp(np.log(chi[mid]) + log_minv[mid],
                                np.log1p(-chi[mid]) + log_om2[mid])
    return out.reshape(np.shape(brak_sq))


def modified_weight_omegaA(w: WeightSpec, A: float, coords) -> np.ndarray:
    """omega_A on a lattice (coords exposes brak_sq)."""
    if A < 1.0:
        raise ValueError("A must be >= 1")
    return np.exp(0.5 * log_omega_A_sq(w, A, coords.brak_sq))


def modified_weight_tilde(w: WeightSpec, A: float, coords,
                          n_dot_v: np.ndarray) -> np.ndarray:
    """omega-tilde with omega~^2 = {1 + (n_x.v) <v>^{gamma-3} / 2} omega_A^2.

    n_dot_v is the wall-normal component n_x.v (for interior cells the slab
    extension n(x) = (2x-1) e1 is used by the caller). The bracket factor lies
    in [1/2, 3/2] for gamma <= 1, so omega~ stays comparable to omega_A.
    """
    omA = modified_weight_omegaA(w, A, coords)
    bsq = np.asarray(coords.brak_sq, dtype=float)
    fac = 1.0 + 0.5 * np.asarray(n_dot_v) * bsq ** (0.5 * (w.gamma - 3.0))
    return omA * np.sqrt(fac)


# ---------------------------------------------------------------------------
# wall constants K0, K1, K2 and the choice of A


def _radial_quad(f, A: float) -> float:
    """Adaptive quadrature of f(r) on (0, inf) with breakpoints at the cutoff."""
    pts = [A, 2.0 * A]
    val1, _ = integrate.quad(f, 0.0, 2.0 * A, points=pts, limit=200,
                             epsabs=1e-13, epsrel=1e-11)
    val2, _ = integrate.quad(f, 2.0 * A, np.inf, limit=200,
                             epsabs=1e-13, epsrel=1e-11)
    return val1 + val2


def boundary_constants(w: WeightSpec, A: float, kind: str = "primal",
                       q: float = 2.0) -> tuple[float, float, float]:
    """(K0, K1, K2) wall constants for omega_A (primal) or m_A (dual).

    Primal:  K2 = int omega_A^{-2} (n.v)_+ dv,
             K1 = int M^2 omega_A^2 (n.v)_+ dv,
             K0 = int <v>^{3-gamma} omega_A^{-2} dv.
    Dual (q >= 2), with m = omega^{-1} and m_A^q = chi_A M + (1-chi_A) m^q:
             K1 = int m_A^q (n.v)_- dv,
             K2 = ( int M^{q'} m_A^{-q'} (n.v)_- dv )^{q-1},
             K0 = ( int M^{q'} m_A^{-q'} <v>^{(q-gamma+3)/(q-1)}
                    (n.v)_-^{(q-2)/(q-1)} dv )^{q-1},   q' = q/(q-1).

    All integrals are radial: for radial phi, int phi (n.v)_+- dv
    = pi int r^3 phi dr, int phi dv = 4 pi int r^2 phi dr, and a power
    (n.v)^alpha contributes (2 pi/(alpha+1)) int r^{2+alpha} phi dr.
    """
    if kind == "primal":
        def log_om2(r):
            return log_omega_A_sq(w, A, 1.0 + r * r)

        def log_msq(r):
            return 2.0 * log_wall_maxwellian_bsq(1.0 + r * r)

        K2 = math.pi * _radial_quad(lambda r: r**3 * np.exp(-log_om2(r)), A)
        K1 = math.pi * _radial_quad(
            lambda r: r**3 * np.exp(log_msq(r) + log_om2(r)), A)
        K0 = 4.0 * math.pi * _radial_quad(
            lambda r: r**2 * (1.0 + r * r) ** (0.5 * (3.0 - w.gamma))
            * np.exp(-log_om2(r)), A)
    elif kind == "dual":
        if q < 2.0:
            raise ValueError("dual constants implemented for q >= 2")
        qp = q / (q - 1.0)

        def log_mAq(r):
            # m_A^q = chi_A M + (1-chi_A) omega^{-q} in log space
            from .collision import cutoff_chi
            bsq = 1.0 + r * r
            chi = float(np.asarray(cutoff_chi(A, r)))
            log_m = log_wall_maxwellian_bsq(bsq)
            log_wq = -q * w.log_eval_bsq(bsq)
            if chi >= 1.0:
                return log_m
            if chi <= 0.0:
                return log_wq
            return np.logaddexp(math.log(chi) + log_m,
                                math.log1p(-chi) + log_wq)

        def log_m(r):
            return log_wall_maxwellian_bsq(1.0 + r * r)

        K1 = math.pi * _radial_quad(lambda r: r**3 * np.exp(log_mAq(r)), A)
        # M^{q'} m_A^{-q'} = exp(q' (log M - (1/q) log m_A^q)) with q' = q/(q-1);
        # note m_A^{-q'} = exp(-(q'/q) log m_A^q).
        I2 = math.pi * _radial_quad(
            lambda r: r**3 * np.exp(qp * (log_m(r) - log_mAq(r) / q)), A)
        K2 = I2 ** (q - 1.0)
        alpha = (q - 2.0) / (q - 1.0)
        I0 = (_TWO_PI / (alpha + 1.0)) * _radial_quad(
            lambda r: r ** (2.0 + alpha)
            * (1.0 + r * r) ** (0.5 * (q - w.gamma + 3.0) / (q - 1.0))
            * np.exp(qp * (log_m(r) - log_mAq(r) / q)), A)
        K0 = I0 ** (q - 1.0)
    else:
        raise ValueError(f"unknown kind {kind!r}")
    for name, val in (("K0", K0), ("K1", K1), ("K2", K2)):
        if not np.isfinite(val) or val <= 0.0:
            raise ValueError(f"{name} integral divergent or nonpositive "
                             f"(inadmissible weight)")
    return float(K0), float(K1), float(K2)


def choice_criterion(w: WeightSpec, A: float, kind: str = "primal",
                     q: float = 2.0) -> float:
    """K1 - 1/K2 - 1/(2 K0); the weight omega_A is wall-dissipative when <= 0."""
    K0, K1, K2 = boundary_constants(w, A, kind, q)
    return K1 - 1.0 / K2 - 0.5 / K0


def find_A(w: WeightSpec, kind: str = "primal", q: float = 2.0,
           a_max: float = 2.0**16, bisect_steps: int = 20) -> dict:
    """Smallest A (doubling then bisection) with choice_criterion(A) <= 0.

    Returns a dict with 'A_star', 'criterion', 'succeeded', and the scan
    history; deterministic for fixed inputs.
    """
    history = []
    A = 1.0
    crit = choice_criterion(w, A, kind, q)
    history.append((A, crit))
    while crit > 0.0 and A < a_max:
        A *= 2.0
        crit = choice_criterion(w, A, kind, q)
        history.append((A, crit))
    if crit > 0.0:
        return {"A_star": None, "criterion": crit, "succeeded": False,
                "history": history}
    lo, hi = A / 2.0, A  # criterion(lo) > 0 >= criterion(hi), unless A = 1
    if len(history) > 1:
        for _ in range(bisect_steps):
            mid = 0.5 * (lo + hi)
            cm = choice_criterion(w, mid, kind, q)
            history.append((mid, cm))
            if cm <= 0.0:
                hi = mid
            else:
                lo = mid
        A = hi
        crit = choice_criterion(w, A, kind, q)
    return {"A_star": A, "criterion": crit, "succeeded": True,
            "history": history}


def weights_table(w: WeightSpec, A_values, kind: str = "primal",
                  q: float = 2.0) -> list[tuple[float, float, float, float, float]]:
    """Rows (A, K0, K1, K2, criterion) for the wall-constant table."""
    rows = []
    for A in A_values:
        K0, K1, K2 = boundary_constants(w, A, kind, q)
        rows.append((float(A), K0, K1, K2, K1 - 1.0 / K2 - 0.5 / K0))
    return rows


# ---------------------------------------------------------------------------
# decay laws


@dataclass(frozen=True)
class DecayLaw:
    """One branch of the decay envelope Theta_omega(t).

    family 'poly-soft': C (log<t>/<t>)^{(k-k0)/|gamma|}   (polynomial, gamma<0)
    family 'poly-hard': C exp(-lam t)                      (polynomial, gamma>=0)
    family 'exp':       C exp(-lam t^{min(1, s/|gamma|)})  (exponential weight)
    """

    family: str
    C: float = 1.0
    lam: float = 1.0
    exponent: float = 1.0  # (k-k0)/|gamma| or min(1, s/|gamma|)

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.family == "poly-soft":
            brak_t = np.sqrt(1.0 + t * t)
            return self.C * (np.log(brak_t) / brak_t) ** self.exponent
        if self.family == "poly-hard":
            return self.C * np.exp(-self.lam * t)
        if self.family == "exp":
            return self.C * np.exp(-self.lam * t ** self.exponent)
        raise ValueError(f"unknown family {self.family!r}")


def decay_law(w: WeightSpec, gamma: float, C: float = 1.0,
              lam: float = 1.0) -> DecayLaw:
    """Select the Theta_omega branch matching (weight, gamma)."""
    if w.kind == "polynomial":
        if not w.k > w.k0:
            raise ValueError("polynomial decay law requires k > k0")
        if gamma < 0.0:
            return DecayLaw("poly-soft", C=C, lam=lam,
                            exponent=(w.k - w.k0) / abs(gamma))
        return DecayLaw("poly-hard", C=C, lam=lam)
    expo = 1.0 if gamma == 0.0 else min(1.0, w.s / abs(gamma))
    return DecayLaw("exp", C=C, lam=lam, exponent=expo)


def theta_decay(w: WeightSpec, gamma: float, t, C: float = 1.0,
                lam: float = 1.0) -> np.ndarray:
    """Theta_omega(t) for the matching branch."""
    return decay_law(w, gamma, C=C, lam=lam)(t)


# ---------------------------------------------------------------------------
# Gronwall machinery


def gronwall_gamma(sigma: float, epsR: float, thetaR: float, C: float,
                   t) -> np.ndarray:
    """Gamma_t(R) = exp(-sigma epsR t) + (thetaR/epsR) C."""
    if epsR <= 0.0 or thetaR < 0.0:
        raise ValueError("need epsR > 0 and thetaR >= 0")
    return np.exp(-sigma * epsR * np.asarray(t, dtype=float)) + (thetaR / epsR) * C


def gronwall_envelope(sigma: float, C: float, eps_of_R, theta_of_R, t,
                      R_grid) -> np.ndarray:
    """min over a (logarithmic) R-grid of Gamma_t(R), per time point."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    vals = np.full(t.shape, np.inf)
    for R in R_grid:
        vals = np.minimum(vals, gronwall_gamma(sigma, eps_of_R(R),
                                               theta_of_R(R), C, t))
    return vals


def weak_decay_theta(case: int, params: dict, t) -> np.ndarray:
    """Closed-form weak-dissipativity decay functions Theta_{rho,rho2}(t).

    case 1: rho = e^{kappa|v|^2} with kappa in (1/4, 1/2), rho2 = e^{|v|^2/4}:
            Theta = (1+C) exp(-lam t^{2/|gamma|}),
            lam = sigma^{2/|gamma|} (p(kappa - 1/4))^{|2+gamma|/|gamma|} / p.
    case 2: exponential scale s in (0, 2], kappa2 > kappa:
            Theta = exp(-lam t^{s/|gamma|}) with the internal normalization
            lam = min(sigma, p (kappa2 - kappa)).
    case 3: rho = <v>^{-k}, rho2 = <v>^{-k2}, k2 > k:
            Theta = C (log<t>/<t>)^{(k2-k)/|gamma|}, using the choice
            lam = p (k2 - k) / (sigma |gamma|) for <R(t)>.
    """
    t = np.asarray(t, dtype=float)
    gamma = params["gamma"]
    if gamma >= 0.0:
        raise ValueError("weak decay laws apply to gamma < 0")
    ag = abs(gamma)
    if case == 1:
        kappa, p, sig, C = params["kappa"], params["p"], params["sigma"], params.get("C", 1.0)
        if not 0.25 < kappa < 0.5:
            raise ValueError("case 1 requires kappa in (1/4, 1/2)")
        lam = sig ** (2.0 / ag) * (p * (kappa - 0.25)) ** (abs(2.0 + gamma) / ag) / p
        return (1.0 + C) * np.exp(-lam * t ** (2.0 / ag))
    if case == 2:
        s, kappa, kappa2 = params["s"], params["kappa"], params["kappa2"]
        p, sig = params["p"], params["sigma"]
        if not (0.0 < s <= 2.0 and kappa2 > kappa > 0.0):
            raise ValueError("case 2 requires 0 < s <= 2 and kappa2 > kappa > 0")
        lam = min(sig, p * (kappa2 - kappa))
        return np.exp(-lam * t ** (s / ag))
    if case == 3:
        k, k2 = params["k"], params["k2"]
        C = params.get("C", 1.0)
        if not k2 > k:
            raise ValueError("case 3 requires k2 > k")
        brak_t = np.sqrt(1.0 + t * t)
        return C * (np.log(brak_t) / brak_t) ** ((k2 - k) / ag)
    raise ValueError("case must be 1, 2 or 3")
