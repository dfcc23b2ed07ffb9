"""Landau kernels, convolution engine, the bilinear operator Q, and splittings.

Kernels (interaction exponent gamma in [-3, 1]):

    a_ij(z) = |z|^{gamma+2} (delta_ij - z_i z_j / |z|^2)
    b_i(z)  = d_j a_ij(z) = -2 |z|^gamma z_i
    c(z)    = d_ij a_ij(z) = -2 (gamma+3) |z|^gamma      (gamma > -3)
              -8 pi delta_0                              (gamma = -3)

The bilinear operator is used in nondivergence form

    Q(g, f) = (a_ij * g) d_ij f - (c * g) f

with the divergence form d_i{(a_ij*g) d_j f - (b_i*g) f} kept as a cross-check
path. Convolutions are linear (not circular): kernels are sampled on the
doubled difference lattice {k dv : |k| <= n-1}^3, the singular origin cell is
replaced by its exact cell average (tensor Gauss quadrature), and products are
formed by zero-padded FFT.

For gamma = 0 the kernels are polynomials in z, so the lattice convolutions
collapse exactly to moments of g:

    (a_ij * g)(v) = delta_ij (|v|^2 rho - 2 v.m + tr E)
                    - (v_i v_j rho - v_i m_j - v_j m_i + E_ij)
                    + (dv^2/6) delta_ij g(v) dv^3,
    (c * g)(v)    = -6 rho,

with rho = sum g dv^3, m = sum w g dv^3, E = sum w w^T g dv^3; the last term
accounts for the origin-cell average replacing a(0) = 0. This moment path
reproduces the spectral path to roundoff and is used in hot loops.

Averaging against the global Maxwellian gives abar = a*mu, bbar = b*mu,
cbar = c*mu with the eigen-structure abar(v) v = l1(v) v, bbar = -l1(v) v,
l1 ~ 2<v>^gamma, l2 ~ <v>^{gamma+2}, tr abar ~ 2<v>^{gamma+2}.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.fft as sfft

from ._stencil import SYM_IDX, dcentral, grad, hess, sym_contract
from .grid import VelocityGrid

A_NAMES = ("a11", "a22", "a33", "a12", "a13", "a23")
B_NAMES = ("b1", "b2", "b3")


def cutoff_chi(R: float, v_abs) -> np.ndarray:
    """Radial C^2 cutoff: 1 on |v| <= R, 0 on |v| >= 2R, quintic smoothstep
    between (value 1/2 at |v| = 3R/2), nonincreasing in |v|."""
    if R <= 0:
        raise ValueError("R must be positive")
    x = np.asarray(v_abs, dtype=float) / R
    t = np.clip(x - 1.0, 0.0, 1.0)
    return 1.0 - t**3 * (10.0 + t * (-15.0 + 6.0 * t))


def _kernel_values(gamma: float, zx, zy, zz):
    """a (6 comps), b (3 comps), |z|^gamma at given offsets (z != 0 assumed safe
    via masking: the origin entry is overwritten by the caller)."""
    zsq = zx * zx + zy * zy + zz * zz
    safe = np.where(zsq > 0.0, zsq, 1.0)
    pow_g = np.where(zsq > 0.0, safe ** (0.5 * gamma), 0.0)
    pow_g2 = np.where(zsq > 0.0, safe ** (0.5 * gamma + 1.0), 0.0)
    inv = np.where(zsq > 0.0, 1.0 / safe, 0.0)
    a = np.empty((6,) + zsq.shape)
    comps = (zx, zy, zz)
    for m, (i, j) in enumerate(SYM_IDX):
        delta = 1.0 if i == j else 0.0
        a[m] = pow_g2 * (delta - comps[i] * comps[j] * inv)
    b = np.stack([-2.0 * pow_g * c for c in comps])
    return a, b, pow_g


def origin_cell_averages(gamma: float, dv: float, n_gauss: int = 32) -> dict:
    """Exact cell averages of a_ij, b_i, |z|^gamma over [-dv/2, dv/2]^3.

    Tensor Gauss-Legendre quadrature (n_gauss^3 points). b averages to zero by
    odd symmetry; the a average is isotropic, (2/3) <|z|^{gamma+2}> delta_ij.
    """
    x, wq = np.polynomial.legendre.leggauss(n_gauss)
    x = 0.5 * dv * x
    wq = 0.5 * wq  # weights normalized so that sum over the cell = 1
    X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
    W = (wq[:, None, None] * wq[None, :, None] * wq[None, None, :])
    a, b, pg = _kernel_values(gamma, X, Y, Z)
    a_avg = np.array([np.sum(a[m] * W) for m in range(6)])
    b_avg = np.array([np.sum(b[i] * W) for i in range(3)])
    return {"a": a_avg, "b": b_avg, "pow_gamma": float(np.sum(pg * W))}


class KernelSet:
    """Sampled, origin-regularized Landau kernels with cached spectra.

    The difference lattice has offsets k dv, |k| <= n-1 per axis (size m =
    2n-1 cubed); spectra are padded to the cube of next_fast_len(m), which is
    alias-free for the output window read back by `convolve`.
    """

    def __init__(self, grid: VelocityGrid, gamma: float, workers: int = 1):
        if not -3.0 <= gamma <= 1.0:
            raise ValueError("gamma must lie in [-3, 1]")
        self.grid = grid
        self.gamma = float(gamma)
        self.workers = int(workers)
        n, dv = grid.n, grid.dv
        self.m = 2 * n - 1
        self.pad = sfft.next_fast_len(self.m)
        k = np.arange(-(n - 1), n) * dv
        zx = k[:, None, None]
        zy = k[None, :, None]
        zz = k[None, None, :]
        a, b, pow_g = _kernel_values(gamma, zx, zy, zz)
        avg = origin_cell_averages(gamma, dv)
        o = n - 1  # origin index
        a[:, o, o, o] = avg["a"]
        b[:, o, o, o] = avg["b"]
        pow_g[o, o, o] = avg["pow_gamma"]
        self.a = a
        self.b = b
        self.has_c_kernel = gamma > -3.0
        if self.has_c_kernel:
            self.c = -2.0 * (gamma + 3.0) * pow_g
            stack = np.concatenate([a, b, [self.c]])
        else:
            self.c = None
            stack = np.concatenate([a, b])
        self.names = list(A_NAMES + B_NAMES) + (["c"] if self.has_c_kernel else [])
        padded = np.zeros((len(self.names), self.pad, self.pad, self.pad))
        padded[:, :self.m, :self.m, :self.m] = stack
        self.spectra = sfft.rfftn(padded, axes=(-3, -2, -1), workers=self.workers)
        # invariant: a(z) z = 0 at every offset (checked cheaply here)
        az = np.empty((3,) + a.shape[1:])
        comps = (zx, zy, zz)
        at = {tuple(sorted(ij)): mm for mm, ij in enumerate(SYM_IDX)}
        for i in range(3):
            az[i] = sum(a[at[tuple(sorted((i, j)))]] * comps[j] for j in range(3))
        az[:, o, o, o] = 0.0
        self.null_direction_residual = float(np.max(np.abs(az)))

    def _conv_stack(self, g: np.ndarray, which: list[int]) -> np.ndarray:
        """Linear convolutions of g (..., n,n,n) against selected kernels.

        Returns shape (len(which),) + g.shape, scaled by the quadrature weight
        dv^3 so the result approximates the continuous convolution.
        """
        n, s = self.grid.n, self.pad
        lead = g.shape[:-3]
        gp = np.zeros(lead + (s, s, s))
        gp[..., :n, :n, :n] = g
        gh = sfft.rfftn(gp, axes=(-3, -2, -1), workers=self.workers)
        spec = self.spectra[which]
        prod = spec.reshape((len(which),) + (1,) * len(lead) + spec.shape[1:]) \
            * gh[None]
        out = sfft.irfftn(prod, s=(s, s, s), axes=(-3, -2, -1),
                          workers=self.workers)
        sl = slice(n - 1, 2 * n - 1)
        return out[..., sl, sl, sl] * self.grid.w

    def convolve(self, kernel: str, g: np.ndarray) -> np.ndarray:
        """(kernel * g) on the velocity box; kernel is one of a11..a23, b1..b3, c."""
        if kernel == "c" and not self.has_c_kernel:
            return -8.0 * math.pi * g  # c = -8 pi delta_0 at gamma = -3
        idx = self.names.index(kernel)
        return self._conv_stack(g, [idx])[0]

    def coefficient_fields(self, g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(a*g) [shape (6,)+g.shape] and (c*g) [g.shape] in one batched pass.

        Uses the exact moment path for gamma = 0, the spectral path otherwise.
        """
        if self.gamma == 0.0:
            return self._moment_fields(g)
        ac = self._conv_stack(g, list(range(6)))
        if self.has_c_kernel:
            cg = self._conv_stack(g, [self.names.index("c")])[0]
        else:
            cg = -8.0 * math.pi * g
        return ac, cg

    def _moment_basis(self):
        """Flattened velocity polynomials shared by the gamma = 0 moment path.

        Rows of `take` (10, N): 1, v_x, v_y, v_z, then v_i v_j in SYM_IDX
        order (times dv^3, so g_flat @ take.T gives rho, m, E directly).
        Rows of `emit` (11, N): |v|^2, v_x, v_y, v_z, 1, then v_i v_j, so
        each a-component is an x-dependent linear combination of them.
        """
        if getattr(self, "_basis", None) is None:
            gr = self.grid
            comps = [np.broadcast_to(c, gr.shape).ravel()
                     for c in (gr.vx, gr.vy, gr.vz)]
            one = np.ones(comps[0].shape)
            quads = [comps[i] * comps[j] for i, j in SYM_IDX]
            take = np.stack([one] + comps + quads) * gr.w
            emit = np.stack([gr.v_sq.ravel(), *comps, one, *quads])
            self._basis = (take, emit)
        return self._basis

    def _moment_fields(self, g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Exact moment form of (a*g), (c*g) for the polynomial gamma = 0 kernels.

        Both the ten moments and the field assembly are single matrix products
        against cached velocity-polynomial bases (hot path of gamma = 0 runs).
        """
        take, emit = self._moment_basis()
        lead = g.shape[:-3]
        nb = int(np.prod(lead, dtype=int)) if lead else 1
        gf = g.reshape(nb, -1)
        mom = gf @ take.T  # (nb, 10): rho, m_x, m_y, m_z, E_11..E_23
        rho, mvec, E = mom[:, 0], mom[:, 1:4], mom[:, 4:10]
        trE = E[:, 0] + E[:, 1] + E[:, 2]
        # coefficients of each a-component on the emit basis
        coef = np.zeros((6, nb, 11))
        for m, (i, j) in enumerate(SYM_IDX):
            if i == j:
                coef[m, :, 0] = rho          # |v|^2 rho
                coef[m, :, 1:4] = -2.0 * mvec
                coef[m, :, 4] = trE
            coef[m, :, 1 + i] += mvec[:, j]  # +v_i m_j + v_j m_i
            coef[m, :, 1 + j] += mvec[:, i]
            coef[m, :, 4] -= E[:, m]         # -E_ij
            coef[m, :, 5 + m] -= rho         # -v_i v_j rho
        A = (coef @ emit).reshape((6,) + g.shape)
        corr = (self.grid.dv**2 / 6.0) * self.grid.w
        for m in range(3):  # origin-cell average of a minus a(0) = 0
            A[m] += corr * g
        C = np.broadcast_to(
            (-6.0 * rho).reshape(lead + (1, 1, 1)), g.shape)
        return A, C


class BarCoefficients:
    """abar = a*mu, bbar = b*mu, cbar = c*mu with the eigen-split l1, l2.

    l1 = (abar v . v)/|v|^2 (eigenvalue along v), l2 = (tr abar - l1)/2; at a
    v = 0 node (node-centered grids) l1 = l2 = tr abar / 3.
    """

    def __init__(self, kernels: KernelSet):
        grid = kernels.grid
        mu = grid.maxwellian()
        self.abar, self.cbar = (kernels._conv_stack(mu, list(range(6))),
                                None)
        if kernels.has_c_kernel:
            self.cbar = kernels._conv_stack(mu, [kernels.names.index("c")])[0]
        else:
            self.cbar = -8.0 * math.pi * mu
        self.bbar = kernels._conv_stack(mu, [6, 7, 8])
        comps = (grid.vx, grid.vy, grid.vz)
        avv = np.zeros(grid.shape)
        at = {tuple(sorted(ij)): m for m, ij in enumerate(SYM_IDX)}
        for i in range(3):
            for j in range(3):
                avv += self.abar[at[tuple(sorted((i, j)))]] * comps[i] * comps[j]
        tr = self.abar[0] + self.abar[1] + self.abar[2]
        with np.errstate(invalid="ignore", divide="ignore"):
            l1 = np.where(grid.v_sq > 0.0, avv / np.where(grid.v_sq > 0.0,
                                                          grid.v_sq, 1.0),
                          tr / 3.0)
        self.l1 = l1
        self.l2 = 0.5 * (tr - l1)
        self.trace = tr
        self.grid = grid

    def b_matrix_gradsq(self, df: np.ndarray) -> np.ndarray:
        """|B(v) grad f|^2 = l1 |P_v df|^2 + l2 |(I - P_v) df|^2 for df (3,...)."""
        gr = self.grid
        vdot = gr.vx * df[0] + gr.vy * df[1] + gr.vz * df[2]
        vsq = np.where(gr.v_sq > 0.0, gr.v_sq, 1.0)
        par_sq = np.where(gr.v_sq > 0.0, vdot * vdot / vsq, 0.0)
        tot_sq = df[0]**2 + df[1]**2 + df[2]**2
        return self.l1 * par_sq + self.l2 * (tot_sq - par_sq)


def bar_coefficients(grid: VelocityGrid, gamma: float,
                     kernels: KernelSet | None = None) -> BarCoefficients:
    if kernels is None:
        kernels = KernelSet(grid, gamma)
    return BarCoefficients(kernels)


def bar_coefficients_at(gamma: float, radius: float, half_width: float = 10.0,
                        n_gauss: int = 80) -> dict:
    """abar/bbar/cbar at the probe point v = (radius, 0, 0) by direct tensor
    Gauss quadrature of the convolution against mu (independent of any grid,
    so the probe may sit far outside the solver box)."""
    x, wq = np.polynomial.legendre.leggauss(n_gauss)
    x = half_width * x
    wq = half_width * wq
    X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
    W = wq[:, None, None] * wq[None, :, None] * wq[None, None, :]
    mu = (2.0 * math.pi) ** (-1.5) * np.exp(-0.5 * (X**2 + Y**2 + Z**2)) * W
    zx, zy, zz = radius - X, -Y, -Z
    a, b, pow_g = _kernel_values(gamma, zx, zy, zz)
    abar = np.array([np.sum(a[m] * mu) for m in range(6)])
    bbar = np.array([np.sum(b[i] * mu) for i in range(3)])
    if gamma > -3.0:
        cbar = -2.0 * (gamma + 3.0) * float(np.sum(pow_g * mu))
    else:
        cbar = -8.0 * math.pi * (2.0 * math.pi) ** (-1.5) * math.exp(-0.5 * radius**2)
    return {"abar": abar, "bbar": bbar, "cbar": cbar}


# ---------------------------------------------------------------------------
# the bilinear operator


def Q_apply(kernels: KernelSet, g: np.ndarray, f: np.ndarray,
            coeffs: tuple[np.ndarray, np.ndarray] | None = None) -> np.ndarray:
    """Q(g, f) = (a_ij*g) d_ij f - (c*g) f, central differences on f.

    coeffs may carry precomputed ((a*g), (c*g)) to amortize the convolutions
    across many f (frozen-coefficient time stepping).
    """
    if coeffs is None:
        coeffs = kernels.coefficient_fields(g)
    A, C = coeffs
    return sym_contract(A, hess(f, kernels.grid.dv)) - C * f


def divergence_form_apply(A: np.ndarray, f: np.ndarray,
                          dv: float) -> np.ndarray:
    """Flux-form collision application with a frozen diffusion field.

    Computes d_i{A_ij d_j f - (d_j A_ij) f} for a packed symmetric field
    A (6, ...) by second-order central differences, taking the drift as the
    discrete divergence of A rather than a separate convolution against the
    (more singular) b kernel; in the continuum div_v(a * g) = (div a) * g
    = b * g, so this is the same operator.

    With central differences and zero extension the choice turns the
    collisional invariants of the symmetrized pair Q(g,f) + Q(f,g) into
    exact summation-by-parts identities: sum_v d_i(flux_i) telescopes up to
    the (tail-sized) rim values (mass, per operator), while for v_k and
    |v|^2 moving d onto the test function pairs the two operators into
    sums of f(v) g(w) [d_v + d_w] a(v - w), which vanish node-by-node
    because a is sampled on the difference lattice (momentum, energy).
    A may carry leading batch axes matching f.
    """
    df = [dcentral(f, j, dv) for j in range(3)]
    at = {tuple(sorted(ij)): m for m, ij in enumerate(SYM_IDX)}
    out = np.zeros_like(f)
    for i in range(3):
        flux = np.zeros_like(f)
        for j in range(3):
            a_ij = A[at[tuple(sorted((i, j)))]]
            flux += a_ij * df[j] - dcentral(a_ij, j, dv) * f
        out += dcentral(flux, i, dv)
    return out


def Q_apply_divergence(kernels: KernelSet, g: np.ndarray,
                       f: np.ndarray) -> np.ndarray:
    """Conservative route: Q(g,f) = d_i{(a_ij*g) d_j f - d_j(a_ij*g) f}."""
    A = kernels._conv_stack(g, list(range(6)))
    return divergence_form_apply(A, f, kernels.grid.dv)


# ---------------------------------------------------------------------------
# projector onto collision invariants


class ProjectorPi:
    """Discrete orthogonal projector onto span{mu, v_i mu, (|v|^2-3)/sqrt(6) mu}.

    The five basis functions are orthonormalized once against the discrete
    L^2(mu^{-1/2}) inner product <f, g> = sum f g mu^{-1} dv^3 (Gram-Schmidt),
    so pi^2 = pi holds to roundoff and (I - pi) Q annihilates pi exactly.
    """

    def __init__(self, grid: VelocityGrid, cond_limit: float = 1e8):
        mu = grid.maxwellian()
        raw = [mu,
               grid.vx * mu * np.ones(grid.shape),
               grid.vy * mu * np.ones(grid.shape),
               grid.vz * mu * np.ones(grid.shape),
               (grid.v_sq - 3.0) / math.sqrt(6.0) * mu]
        self.ip_weight = grid.w / mu  # mu^{-1} dv^3
        gram = np.array([[np.sum(p * q * self.ip_weight) for q in raw]
                         for p in raw])
        cond = np.linalg.cond(gram)
        if cond > cond_limit:
            raise ValueError(
                f"collision-invariant Gram matrix ill-conditioned "
                f"(cond = {cond:.3e}); enlarge the velocity box/grid")
        self.gram_cond = cond
        basis = []
        for p in raw:
            q = p.copy()
            for e in basis:
                q = q - np.sum(q * e * self.ip_weight) * e
            q = q / math.sqrt(np.sum(q * q * self.ip_weight))
            basis.append(q)
        self.basis = np.stack(basis)  # (5, n, n, n)
        self.grid = grid

    def apply(self, f: np.ndarray) -> np.ndarray:
        """pi f, batched over leading axes."""
        out = np.zeros_like(f)
        for e in self.basis:
            coef = np.sum(f * (e * self.ip_weight), axis=(-3, -2, -1))
            out = out + coef[..., None, None, None] * e
        return out

    def complement(self, f: np.ndarray) -> np.ndarray:
        return f - self.apply(f)


# ---------------------------------------------------------------------------
# linearized operator and splitting pieces


def d2_maxwellian(grid: VelocityGrid) -> np.ndarray:
    """Analytic d_ij mu = mu (v_i v_j - delta_ij), packed (6, n, n, n)."""
    mu = grid.maxwellian()
    comps = (grid.vx, grid.vy, grid.vz)
    out = np.empty((6,) + grid.shape)
    for m, (i, j) in enumerate(SYM_IDX):
        out[m] = mu * (comps[i] * comps[j] - (1.0 if i == j else 0.0))
    return out


def Q_f_mu(kernels: KernelSet, f: np.ndarray,
           d2mu: np.ndarray | None = None) -> np.ndarray:
    """Q(f, mu) = (a_ij*f) d_ij mu - (c*f) mu with exact analytic d_ij mu."""
    grid = kernels.grid
    if d2mu is None:
        d2mu = d2_maxwellian(grid)
    A, C = kernels.coefficient_fields(f)
    return sym_contract(A, d2mu) - C * grid.maxwellian()


def C_apply(kernels: KernelSet, f: np.ndarray,
            bars: BarCoefficients | None = None,
            d2mu: np.ndarray | None = None) -> np.ndarray:
    """Linearized operator C f = Q(mu, f) + Q(f, mu)."""
    if bars is None:
        bars = BarCoefficients(kernels)
    qmuf = sym_contract(bars.abar, hess(f, kernels.grid.dv)) - bars.cbar * f
    return qmuf + Q_f_mu(kernels, f, d2mu)


def B_g_collision_part(kernels: KernelSet, g: np.ndarray, f: np.ndarray,
                       M: float, R: float,
                       coeffs: tuple | None = None) -> np.ndarray:
    """Velocity-local part of B_g: Q(mu, f) + Q(g, f) - M chi_R f.

    By bilinearity Q(mu,f) + Q(g,f) = Q(mu + g, f); coeffs may carry the
    precomputed fields (a*(mu+g), c*(mu+g)).
    """
    grid = kernels.grid
    if coeffs is None:
        coeffs = kernels.coefficient_fields(grid.maxwellian() + g)
    A, C = coeffs
    out = sym_contract(A, hess(f, grid.dv)) - C * f
    if M != 0.0:
        out = out - M * cutoff_chi(R, grid.v_abs) * f
    return out


def A_g_apply(kernels: KernelSet, g: np.ndarray, f: np.ndarray,
              M: float, R: float, pi: ProjectorPi,
              g_coeffs: tuple | None = None,
              d2mu: np.ndarray | None = None) -> np.ndarray:
    """A_g f = Q(f, mu) - pi Q(g, f) + M chi_R f."""
    grid = kernels.grid
    out = Q_f_mu(kernels, f, d2mu)
    qgf = Q_apply(kernels, g, f, coeffs=g_coeffs)
    out = out - pi.apply(qgf)
    if M != 0.0:
        out = out + M * cutoff_chi(R, grid.v_abs) * f
    return out


# ---------------------------------------------------------------------------
# symmetric Dirichlet form of the linearized operator (micro-grids)


class DirichletForm:
    """<C f, f>_{L^2(mu^{-1/2})} via the manifestly sign-definite double sum

        D(f) = -1/2 sum_{v,w} mu(v) mu(w) [d(v)-d(w)]^T a(v-w) [d(v)-d(w)] dv^6,
        d = grad(f / mu),

    which is the classical symmetric form of the linearized Landau operator.
    Since a is positive semidefinite (origin cell included, its average being
    PSD), D(f) <= 0 holds discretely to roundoff — the H-theorem sign is
    structural, not a numerical accident. Cost is O(N^2) in velocity nodes, so
    this form is reserved for micro-grids (n <= 16).
    """

    def __init__(self, grid: VelocityGrid, gamma: float):
        if grid.n > 16:
            raise ValueError("DirichletForm is restricted to micro-grids (n <= 16)")
        self.grid = grid
        V = np.stack(np.meshgrid(grid.axis, grid.axis, grid.axis,
                                 indexing="ij"), axis=-1).reshape(-1, 3)
        N = V.shape[0]
        z = V[:, None, :] - V[None, :, :]
        a, _, _ = _kernel_values(gamma, z[..., 0], z[..., 1], z[..., 2])
        avg = origin_cell_averages(gamma, grid.dv)
        diag = np.arange(N)
        for m in range(6):
            a[m][diag, diag] = avg["a"][m]
        self.mu = grid.maxwellian()
        muf = self.mu.reshape(-1)
        self.W = a * muf[None, :, None] * muf[None, None, :]  # (6, N, N)
        self.row_sums = self.W.sum(axis=2)                    # (6, N)
        self.N = N

    def value(self, f: np.ndarray) -> float:
        """D(f) for f on the velocity grid (shape (n,n,n))."""
        d = grad(f / self.mu, self.grid.dv).reshape(3, -1)
        total = 0.0
        for m, (i, j) in enumerate(SYM_IDX):
            mult = 1.0 if i == j else 2.0
            s1 = np.sum(self.row_sums[m] * d[i] * d[j])
            s2 = d[i] @ self.W[m] @ d[j]
            total += mult * (s1 - s2)
        return -float(total) * self.grid.w**2
