"""Imaginary-time propagators on the full space and on the sector.

All kernels are heat kernels in units hbar = m = 1, normalized so that
d/dtau K = (1/2) Laplacian K.  The free kernel is the n-dimensional
Gaussian; the two-body pair kernel with a Robin face separates into a
free center-of-mass factor times a half-line kernel that satisfies the
face condition exactly:

    k_rel(u, v; tau) = phi(u - v) + phi(u + v)
                       - gamma e^{gamma w + gamma^2 tau / 2}
                         erfc((w + gamma tau) / sqrt(2 tau)),  w = u + v,

with phi the one-dimensional heat kernel and gamma = 1 / (sqrt(2) a).
The correction term reduces to the image sums in the Dirichlet
(a -> 0) and Neumann (1/a -> 0) limits and carries the bound state for
a < 0 through its e^{gamma^2 tau / 2} growth.

Sector kernels arise from full-space ones as character-weighted sums
over the permutation group; conversely a sector kernel induces the dual
pair of exchange-symmetric full-space kernels through the sorting
permutation of each argument.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, erfcx

from .coordinates import sorting_permutations_batch
from .coupling import BoundaryCoupling, dirichlet, neumann, robin
from .permutations import enumerate_group
from .wavefunctions import Statistics

SQRT2 = math.sqrt(2.0)


def _points(x, n):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[-1] != n:
        raise ValueError(f"points must have {n} coordinates")
    return x


@dataclass
class KernelEvaluator:
    """Vectorized propagator K(x, y; tau) with its contract metadata.

    ``evaluate`` broadcasts over leading point axes; ``space`` is
    'full' or 'sector'; ``stat`` tags the exchange symmetry of full
    kernels; ``coupling`` records the pair coupling (None means free).
    ``pair_face_residual``, when present, returns the face boundary
    operator applied to the kernel analytically.
    """

    evaluate: callable
    space: str
    n: int
    stat: object = None
    coupling: object = None
    label: str = ""
    pair_face_residual: callable = None

    def __call__(self, x, y, tau):
        return self.evaluate(x, y, tau)


def gaussian_1d(z: np.ndarray, tau: float) -> np.ndarray:
    return np.exp(-z * z / (2.0 * tau)) / np.sqrt(2.0 * np.pi * tau)


def free_kernel(n: int) -> KernelEvaluator:
    """Heat kernel of n free particles on the line."""

    def evaluate(x, y, tau):
        x = _points(x, n)
        y = _points(y, n)
        d2 = np.sum((x - y) ** 2, axis=-1)
        out = np.exp(-d2 / (2.0 * tau)) / (2.0 * np.pi * tau) ** (n / 2.0)
        return out if out.size > 1 else float(out.ravel()[0])

    return KernelEvaluator(evaluate=evaluate, space="full", n=n, stat=None,
                           coupling=None, label=f"free[{n}]")


def _as_pair_coupling(a) -> BoundaryCoupling:
    if isinstance(a, BoundaryCoupling):
        return a
    a = float(a)
    if a == 0.0:
        return dirichlet()
    if math.isinf(a):
        return neumann()
    return robin(a)


def relative_half_line_kernel(entry: BoundaryCoupling):
    """Half-line heat kernel k(u, v; tau) with the face condition
    du k = gamma k at u = 0, gamma = 1/(sqrt2 a), plus its u-derivative.

    Returns (kernel, derivative) callables on arrays.
    """
    if entry.kind == "dirichlet":
        def kernel(u, v, tau):
            return gaussian_1d(u - v, tau) - gaussian_1d(u + v, tau)

        def derivative(u, v, tau):
            return (-(u - v) * gaussian_1d(u - v, tau)
                    + (u + v) * gaussian_1d(u + v, tau)) / tau

        return kernel, derivative
    if entry.kind == "neumann":
        def kernel(u, v, tau):
            return gaussian_1d(u - v, tau) + gaussian_1d(u + v, tau)

        def derivative(u, v, tau):
            return (-(u - v) * gaussian_1d(u - v, tau)
                    - (u + v) * gaussian_1d(u + v, tau)) / tau

        return kernel, derivative
    if entry.kind != "robin":
        raise ValueError("pair kernel needs robin, dirichlet, or neumann data")
    gamma = 1.0 / (SQRT2 * entry.value)

    def correction(w, tau):
        # gamma * exp(gamma w + gamma^2 tau / 2) erfc((w + gamma tau)/sqrt(2 tau)),
        # evaluated through erfcx where the argument is positive to avoid
        # overflow of the two exponential factors separately.
        w = np.atleast_1d(np.asarray(w, dtype=float))
        z = (w + gamma * tau) / np.sqrt(2.0 * tau)
        out = np.empty_like(w)
        pos = z >= 0
        out[pos] = gamma * erfcx(z[pos]) * np.exp(-w[pos] ** 2 / (2.0 * tau))
        neg = ~pos
        out[neg] = gamma * np.exp(gamma * w[neg] + gamma * gamma * tau / 2.0) * erfc(z[neg])
        return out

    def kernel(u, v, tau):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        v = np.atleast_1d(np.asarray(v, dtype=float))
        return gaussian_1d(u - v, tau) + gaussian_1d(u + v, tau) - correction(u + v, tau)

    def derivative(u, v, tau):
        # d/dw of the correction is gamma * correction - 2 gamma phi(w)
        u = np.atleast_1d(np.asarray(u, dtype=float))
        v = np.atleast_1d(np.asarray(v, dtype=float))
        w = u + v
        corr = correction(w, tau)
        dcorr = gamma * corr - 2.0 * gamma * gaussian_1d(w, tau)
        return (-(u - v) * gaussian_1d(u - v, tau)
                - w * gaussian_1d(w, tau)) / tau - dcorr

    return kernel, derivative


def robin_pair_kernel(a) -> KernelEvaluator:
    """Two-body sector kernel: free center of mass times the half-line
    relative kernel satisfying the face condition for coupling ``a``.

    ``a`` may be a BoundaryCoupling or a float (0 means the hard-core
    limit, inf the free-boson limit).
    """
    entry = _as_pair_coupling(a)
    k_rel, dk_rel = relative_half_line_kernel(entry)

    def split(x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        u = (x[..., 0] - x[..., 1]) / SQRT2
        c = (x[..., 0] + x[..., 1]) / SQRT2
        return u, c

    def evaluate(x, y, tau):
        ux, cx = split(x)
        uy, cy = split(y)
        out = gaussian_1d(cx - cy, tau) * k_rel(ux, uy, tau)
        return out if out.size > 1 else float(out.ravel()[0])

    def face_residual(y, tau, samples=8):
        """Face boundary operator applied analytically at u = 0.

        Returns max |(d/dx1 - d/dx2) K - (1/a) K| over a center-of-mass
        scan, scaled by the kernel magnitude.
        """
        uy, cy = split(y)
        c_scan = np.linspace(cy.min() - 1.0, cy.max() + 1.0, samples)
        cm = gaussian_1d(c_scan[:, None] - cy[None, :], tau)
        zero = np.zeros_like(uy)
        pair_derivative = SQRT2 * dk_rel(zero, uy, tau)[None, :] * cm
        value = k_rel(zero, uy, tau)[None, :] * cm
        if entry.kind == "dirichlet":
            resid = np.abs(value)
        elif entry.kind == "neumann":
            resid = np.abs(pair_derivative)
        else:
            resid = np.abs(pair_derivative - value / entry.value)
        scale = max(float(np.max(np.abs(value))), float(np.max(np.abs(pair_derivative))), 1e-300)
        return float(np.max(resid)) / scale

    return KernelEvaluator(evaluate=evaluate, space="sector", n=2, stat=None,
                           coupling=entry, label=f"pair[{entry.label()}]",
                           pair_face_residual=face_residual)


def permutation_sum(kernel: KernelEvaluator, stat: Statistics,
                    cap: int = None) -> KernelEvaluator:
    """Sector kernel as the character-weighted sum over relabelings.

    Summation order is the fixed lexicographic group order, so results
    are bitwise reproducible.
    """
    if kernel.space != "full":
        raise ValueError("permutation sum needs a full-space kernel")
    n = kernel.n
    group = enumerate_group(n) if cap is None else enumerate_group(n, cap=cap)
    chars = [1 if stat is Statistics.BOSE else sigma.sign for sigma in group]

    def evaluate(x, y, tau):
        x = _points(x, n)
        y = _points(y, n)
        total = np.zeros(np.broadcast_shapes(x.shape[:-1], y.shape[:-1]))
        for chi, sigma in zip(chars, group):
            total = total + chi * np.asarray(kernel.evaluate(x, sigma.apply(y), tau))
        return total if total.size > 1 else float(total.ravel()[0])

    return KernelEvaluator(evaluate=evaluate, space="sector", n=n, stat=stat,
                           coupling=kernel.coupling,
                           label=f"sum[{stat.value},{kernel.label}]")


def dual_pair_from_sector(sector_kernel: KernelEvaluator):
    """Exchange-symmetric full-space kernels induced by a sector kernel.

    K_stat(x, y) = chi(sigma_x) chi(sigma_y) K_M(sort x, sort y) / n!,
    whose character-weighted sums both rebuild K_M on the sector.
    """
    if sector_kernel.space != "sector":
        raise ValueError("need a sector kernel")
    n = sector_kernel.n
    fact = math.factorial(n)

    def make(stat):
        def evaluate(x, y, tau):
            x = _points(x, n)
            y = _points(y, n)
            xs, _, sx = sorting_permutations_batch(x)
            ys, _, sy = sorting_permutations_batch(y)
            chi = sx * sy if stat is Statistics.FERMI else 1
            out = chi * np.asarray(sector_kernel.evaluate(xs, ys, tau)) / fact
            return out if out.size > 1 else float(np.asarray(out).ravel()[0])

        return KernelEvaluator(evaluate=evaluate, space="full", n=n, stat=stat,
                               coupling=sector_kernel.coupling,
                               label=f"dual[{stat.value},{sector_kernel.label}]")

    return make(Statistics.BOSE), make(Statistics.FERMI)


def one_body_matrix_sum(kernel_1d, x: np.ndarray, y: np.ndarray, tau: float,
                        stat: Statistics) -> float:
    """Determinant (Fermi) or permanent (Bose) of the one-body kernel
    matrix, the closed form of the permutation sum for product kernels."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    mat = kernel_1d(x[:, None] - y[None, :], tau)
    if stat is Statistics.FERMI:
        return float(np.linalg.det(mat))
    total = 0.0
    for sigma in enumerate_group(n):
        total += float(np.prod([mat[i, sigma(i)] for i in range(n)]))
    return total
