"""Structured P1 finite elements on an interval or a rectangle.

Homogeneous Dirichlet nodes are eliminated; the remaining ("free") nodes
are numbered lexicographically by ``(x, y)``.  Quads are split along the
``(i, j) -> (i+1, j+1)`` diagonal, which makes the stiffness matrix the
5-point stencil on uniform grids.

A :class:`Decomposition` cuts the domain along the grid line ``x = alpha``
into two subdomains.  Subdomain-local node numbering is always
``interior_i`` followed by ``gamma``, so interface rows are the trailing
``len(gamma)`` entries of every subdomain vector.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .kernels import p1_triplets, slobodetskii_weights

__all__ = [
    "SpaceMesh",
    "Decomposition",
    "SparseOperators",
    "build_mesh",
    "decompose",
    "assemble",
    "lambda_norm",
    "lambda_gram",
]

DEFAULT_LAMBDA_REFINEMENT = 16


@dataclass(frozen=True, eq=False)
class SpaceMesh:
    dim: int
    bounds: tuple
    nx: int
    ny: int
    points: np.ndarray  # all grid points, boundary included
    elements: np.ndarray  # connectivity into ``points``
    free: np.ndarray  # indices of free nodes in ``points``

    @property
    def nodes(self) -> np.ndarray:
        """Coordinates of the free nodes, shape ``(n_free, dim)``."""
        return self.points[self.free]

    @property
    def n_free(self) -> int:
        return self.free.shape[0]

    @property
    def hx(self) -> float:
        return self.bounds[0] / self.nx

    @property
    def hy(self) -> float:
        return self.bounds[1] / self.ny if self.dim == 2 else 0.0

    @property
    def h(self) -> float:
        return max(self.hx, self.hy)

    def interpolate(self, func) -> np.ndarray:
        """Nodal values ``func(x[, y])`` at the free nodes."""
        x = self.nodes
        return np.asarray(func(*x.T), dtype=float) * np.ones(self.n_free)


def build_mesh(dim: int, bounds, nx: int, ny: int = 0) -> SpaceMesh:
    """Uniform mesh of ``[0, Lx]`` or ``[0, Lx] x [0, Ly]``.

    ``bounds`` is ``Lx`` or ``(Lx,)`` in 1D and ``(Lx, Ly)`` in 2D.
    """
    if dim not in (1, 2):
        raise ValueError(f"dim must be 1 or 2, got {dim}")
    b = tuple(float(v) for v in np.atleast_1d(bounds))
    if dim == 1:
        b = b[:1]
    if len(b) != dim or not all(np.isfinite(v) and v > 0 for v in b):
        raise ValueError(f"bounds must be {dim} positive lengths, got {bounds}")
    if int(nx) != nx or nx < 3:
        raise ValueError(f"nx must be an integer >= 3, got {nx}")
    if dim == 1:
        x = np.linspace(0.0, b[0], nx + 1)
        points = x[:, None]
        elements = np.stack([np.arange(nx), np.arange(1, nx + 1)], axis=1)
        free = np.arange(1, nx)
        return SpaceMesh(1, b, int(nx), 0, points, elements, free)
    if int(ny) != ny or ny < 3:
        raise ValueError(f"ny must be an integer >= 3, got {ny}")
    nx, ny = int(nx), int(ny)
    x = np.linspace(0.0, b[0], nx + 1)
    y = np.linspace(0.0, b[1], ny + 1)
    X, Y = np.meshgrid(x, y, indexing="ij")
    points = np.stack([X.ravel(), Y.ravel()], axis=1)
    idx = np.arange((nx + 1) * (ny + 1)).reshape(nx + 1, ny + 1)
    p00, p10 = idx[:-1, :-1].ravel(), idx[1:, :-1].ravel()
    p01, p11 = idx[:-1, 1:].ravel(), idx[1:, 1:].ravel()
    lower = np.stack([p00, p10, p11], axis=1)
    upper = np.stack([p00, p11, p01], axis=1)
    elements = np.stack([lower, upper], axis=1).reshape(-1, 3)
    free = idx[1:-1, 1:-1].ravel()
    return SpaceMesh(2, b, nx, ny, points, elements, free)


@dataclass(eq=False)
class Decomposition:
    """Two-subdomain split of the free nodes along ``x = alpha``."""

    mesh: SpaceMesh
    alpha: float
    column: int  # grid column index of the interface line
    interior1: np.ndarray
    interior2: np.ndarray
    gamma: np.ndarray
    elements1: np.ndarray  # element indices in each closed subdomain
    elements2: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    def interior(self, side: int) -> np.ndarray:
        return {1: self.interior1, 2: self.interior2}[_check_side(side)]

    def nodes(self, side: int) -> np.ndarray:
        """Free-node indices of subdomain ``side`` in local order."""
        return np.concatenate([self.interior(side), self.gamma])

    def n_local(self, side: int) -> int:
        return self.interior(side).shape[0] + self.gamma.shape[0]

    @property
    def n_gamma(self) -> int:
        return self.gamma.shape[0]

    def restrict(self, u: np.ndarray, side: int) -> np.ndarray:
        """Global free-node field (last axis) to subdomain-local order."""
        return np.asarray(u)[..., self.nodes(side)]

    def paste(self, u1: np.ndarray, u2: np.ndarray) -> np.ndarray:
        """Glue subdomain fields; interface values are taken from ``u1``."""
        u1 = np.asarray(u1)
        out = np.zeros(u1.shape[:-1] + (self.mesh.n_free,), dtype=u1.dtype)
        out[..., self.nodes(2)] = u2
        out[..., self.nodes(1)] = u1
        return out


def _check_side(side: int) -> int:
    if side not in (1, 2):
        raise ValueError(f"side must be 1 or 2, got {side}")
    return side


def decompose(mesh: SpaceMesh, alpha: float) -> Decomposition:
    """Split at the grid line nearest to ``alpha``."""
    lx = mesh.bounds[0]
    if not (0.0 < alpha < lx):
        raise ValueError(f"alpha must lie in (0, {lx}), got {alpha}")
    col = int(round(alpha / mesh.hx))
    if col <= 0 or col >= mesh.nx:
        raise ValueError(f"alpha={alpha} snaps to the boundary line x={col * mesh.hx}")
    if mesh.dim == 1:
        icol = mesh.free
        cell = np.arange(mesh.nx)
    else:
        icol = mesh.free // (mesh.ny + 1)
        cell = np.repeat(np.arange(mesh.nx), 2 * mesh.ny)
    ids = np.arange(mesh.n_free)
    return Decomposition(
        mesh=mesh,
        alpha=col * mesh.hx,
        column=col,
        interior1=ids[icol < col],
        interior2=ids[icol > col],
        gamma=ids[icol == col],
        elements1=np.flatnonzero(cell < col),
        elements2=np.flatnonzero(cell >= col),
    )


@dataclass(frozen=True, eq=False)
class SparseOperators:
    K: sp.csr_matrix
    M: sp.csr_matrix
    K_full: sp.csr_matrix  # before boundary elimination
    M_gamma: np.ndarray
    K_sub: tuple  # (K_1, K_2) in subdomain-local order
    M_sub: tuple

    def K_i(self, side: int) -> sp.csr_matrix:
        return self.K_sub[_check_side(side) - 1]

    def M_i(self, side: int) -> sp.csr_matrix:
        return self.M_sub[_check_side(side) - 1]


def _assemble_elements(mesh: SpaceMesh, elements: np.ndarray):
    rows, cols, kv, mv = p1_triplets(
        np.ascontiguousarray(mesh.points, dtype=np.float64),
        np.ascontiguousarray(elements, dtype=np.int64),
    )
    n = mesh.points.shape[0]
    K = sp.coo_matrix((kv, (rows, cols)), shape=(n, n)).tocsr()
    M = sp.coo_matrix((mv, (rows, cols)), shape=(n, n)).tocsr()
    return K, M


def interface_mass(dec: Decomposition) -> np.ndarray:
    mesh = dec.mesh
    if mesh.dim == 1:
        return np.ones((1, 1))
    n = dec.n_gamma
    h = mesh.hy
    return h / 6.0 * (4.0 * np.eye(n) + np.eye(n, k=1) + np.eye(n, k=-1))


def assemble(mesh: SpaceMesh, dec: Decomposition) -> SparseOperators:
    K_full, M_full = _assemble_elements(mesh, mesh.elements)
    f = mesh.free
    K = K_full[f][:, f].tocsr()
    M = M_full[f][:, f].tocsr()
    K_sub, M_sub = [], []
    for side, els in ((1, dec.elements1), (2, dec.elements2)):
        Ks, Ms = _assemble_elements(mesh, mesh.elements[els])
        loc = f[dec.nodes(side)]
        K_sub.append(Ks[loc][:, loc].tocsr())
        M_sub.append(Ms[loc][:, loc].tocsr())
    return SparseOperators(K, M, K_full, interface_mass(dec), tuple(K_sub), tuple(M_sub))


def _boundary_samples(dec: Decomposition, side: int, refine: int):
    """Sub-segment midpoints/lengths of the boundary of subdomain ``side``.

    Returns ``(px, py, lengths, P)`` where ``P`` maps interface nodal values
    to the piecewise-linear zero extension sampled at the midpoints.
    """
    mesh = dec.mesh
    lx, ly = mesh.bounds
    hx, hy = mesh.hx, mesh.hy
    x0, x1 = (0.0, dec.alpha) if side == 1 else (dec.alpha, lx)
    ncols = dec.column if side == 1 else mesh.nx - dec.column
    x_iface = dec.alpha
    xs, ys, ls, on_gamma = [], [], [], []
    frac = (np.arange(refine) + 0.5) / refine

    def edge(ax, ay, bx, by, nseg, seg_len, gamma_edge):
        for k in range(nseg):
            t = (k + frac) / nseg
            xs.append(ax + t * (bx - ax))
            ys.append(ay + t * (by - ay))
            ls.append(np.full(refine, seg_len / refine))
            on_gamma.append(np.full(refine, gamma_edge))

    edge(x0, 0.0, x1, 0.0, ncols, hx, False)
    edge(x1, 0.0, x1, ly, mesh.ny, hy, x1 == x_iface)
    edge(x1, ly, x0, ly, ncols, hx, False)
    edge(x0, ly, x0, 0.0, mesh.ny, hy, x0 == x_iface)
    px, py = np.concatenate(xs), np.concatenate(ys)
    lengths = np.concatenate(ls)
    mask = np.concatenate(on_gamma)
    s = py[mask]
    # hat functions of the interface nodes evaluated along the boundary
    node_s = (np.arange(dec.n_gamma) + 1) * hy
    P = np.zeros((px.shape[0], dec.n_gamma))
    hats = np.clip(1.0 - np.abs(s[:, None] - node_s[None, :]) / hy, 0.0, None)
    P[mask] = hats
    return px, py, lengths, P


def lambda_gram(dec: Decomposition, side: int = 1,
                refine: int = DEFAULT_LAMBDA_REFINEMENT) -> np.ndarray:
    """Matrix ``L`` with ``lambda_norm(mu)**2 == mu @ L @ mu``.

    The double integral over the boundary of subdomain ``side`` is
    approximated by midpoint quadrature on ``refine`` sub-segments per mesh
    edge, skipping self pairs; the L2 part is integrated exactly.
    """
    _check_side(side)
    key = ("lambda_gram", side, refine)
    if key in dec._cache:
        return dec._cache[key]
    if dec.mesh.dim == 1:
        L = np.ones((1, 1))
    else:
        px, py, lengths, P = _boundary_samples(dec, side, refine)
        W = slobodetskii_weights(px, py, lengths, float(dec.mesh.dim))
        lap = np.diag(W.sum(axis=1)) - W
        L = 2.0 * P.T @ lap @ P + interface_mass(dec)
        L = 0.5 * (L + L.T)
    dec._cache[key] = L
    return L


def lambda_norm(mu: np.ndarray, dec: Decomposition, side: int = 1,
                refine: int = DEFAULT_LAMBDA_REFINEMENT) -> float:
    """Discrete Lions-Magenes norm of interface nodal values ``mu``.

    In 1D the interface is a point and the norm is ``|mu|``.
    """
    mu = np.asarray(mu, dtype=float).reshape(-1)
    if mu.shape[0] != dec.n_gamma:
        raise ValueError(f"mu has {mu.shape[0]} entries, interface has {dec.n_gamma}")
    L = lambda_gram(dec, side, refine)
    return float(np.sqrt(max(mu @ L @ mu, 0.0)))
