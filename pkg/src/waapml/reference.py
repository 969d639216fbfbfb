"""Element-independent operators on the reference tetrahedron.

The reference element has vertices (-1,-1,-1), (1,-1,-1), (-1,1,-1), (-1,-1,1)
and volume 4/3.  Faces are numbered as in the usual nodal-DG convention:

    face 0: t = -1          (vertices 0, 1, 2)
    face 1: s = -1          (vertices 0, 1, 3)
    face 2: r + s + t = -1  (vertices 1, 2, 3)
    face 3: r = -1          (vertices 0, 2, 3)

Nodes are the optimized warp-and-blend set and the modal basis is the
orthonormal Koornwinder-Dubiner basis, so ``M = (V V^T)^{-1}``.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from math import gamma, sqrt

import numpy as np
import modepy

from .errors import ConfigurationError, ContractError

REFERENCE_VOLUME = 4.0 / 3.0
NODE_TOL = 1e-10
MAX_ORDER = 5

FACE_VERTICES = ((0, 1, 2), (0, 1, 3), (1, 2, 3), (0, 2, 3))


def n_nodes(p: int) -> int:
    return (p + 1) * (p + 2) * (p + 3) // 6


def n_face_nodes(p: int) -> int:
    return (p + 1) * (p + 2) // 2


# {{{ orthonormal polynomials

def jacobi_p(x, alpha, beta, n):
    """Jacobi polynomial P_n^(alpha,beta) at *x*, normalized to be
    orthonormal on [-1, 1] with weight (1-x)^alpha (1+x)^beta."""
    x = np.asarray(x, dtype=float)
    pl = np.zeros((n + 1,) + x.shape)

    gamma0 = (2 ** (alpha + beta + 1) / (alpha + beta + 1)
              * gamma(alpha + 1) * gamma(beta + 1) / gamma(alpha + beta + 1))
    pl[0] = 1.0 / sqrt(gamma0)
    if n == 0:
        return pl[0]

    gamma1 = (alpha + 1) * (beta + 1) / (alpha + beta + 3) * gamma0
    pl[1] = ((alpha + beta + 2) * x / 2 + (alpha - beta) / 2) / sqrt(gamma1)
    if n == 1:
        return pl[1]

    aold = 2 / (2 + alpha + beta) * sqrt(
        (alpha + 1) * (beta + 1) / (alpha + beta + 3))
    for i in range(1, n):
        h1 = 2 * i + alpha + beta
        anew = 2 / (h1 + 2) * sqrt(
            (i + 1) * (i + 1 + alpha + beta) * (i + 1 + alpha) * (i + 1 + beta)
            / (h1 + 1) / (h1 + 3))
        bnew = -(alpha ** 2 - beta ** 2) / h1 / (h1 + 2)
        pl[i + 1] = 1 / anew * (-aold * pl[i - 1] + (x - bnew) * pl[i])
        aold = anew
    return pl[n]


def grad_jacobi_p(x, alpha, beta, n):
    x = np.asarray(x, dtype=float)
    if n == 0:
        return np.zeros_like(x)
    return sqrt(n * (n + alpha + beta + 1)) * jacobi_p(x, alpha + 1, beta + 1, n - 1)


def _rst_to_abc(r, s, t):
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(np.abs(s + t) > NODE_TOL, 2 * (1 + r) / (-s - t) - 1, -1.0)
        b = np.where(np.abs(t - 1) > NODE_TOL, 2 * (1 + s) / (1 - t) - 1, -1.0)
    return a, b, np.asarray(t, dtype=float)


def simplex2d_p(r, s, i, j):
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(np.abs(s - 1) > NODE_TOL, 2 * (1 + r) / (1 - s) - 1, -1.0)
    b = np.asarray(s, dtype=float)
    return sqrt(2.0) * jacobi_p(a, 0, 0, i) * jacobi_p(b, 2 * i + 1, 0, j) * (1 - b) ** i


def simplex3d_p(r, s, t, i, j, k):
    a, b, c = _rst_to_abc(r, s, t)
    h1 = jacobi_p(a, 0, 0, i)
    h2 = jacobi_p(b, 2 * i + 1, 0, j)
    h3 = jacobi_p(c, 2 * (i + j) + 2, 0, k)
    return 2 * sqrt(2.0) * h1 * h2 * (1 - b) ** i * h3 * (1 - c) ** (i + j)


def grad_simplex3d_p(r, s, t, i, j, k):
    """(d/dr, d/ds, d/dt) of :func:`simplex3d_p`."""
    a, b, c = _rst_to_abc(r, s, t)
    fa = jacobi_p(a, 0, 0, i)
    dfa = grad_jacobi_p(a, 0, 0, i)
    gb = jacobi_p(b, 2 * i + 1, 0, j)
    dgb = grad_jacobi_p(b, 2 * i + 1, 0, j)
    hc = jacobi_p(c, 2 * (i + j) + 2, 0, k)
    dhc = grad_jacobi_p(c, 2 * (i + j) + 2, 0, k)

    vr = dfa * gb * hc
    if i > 0:
        vr = vr * (0.5 * (1 - b)) ** (i - 1)
    if i + j > 0:
        vr = vr * (0.5 * (1 - c)) ** (i + j - 1)

    vs = 0.5 * (1 + a) * vr
    tmp = dgb * (0.5 * (1 - b)) ** i
    if i > 0:
        tmp = tmp - 0.5 * i * gb * (0.5 * (1 - b)) ** (i - 1)
    if i + j > 0:
        tmp = tmp * (0.5 * (1 - c)) ** (i + j - 1)
    tmp = fa * tmp * hc
    vs = vs + tmp

    vt = 0.5 * (1 + a) * vr + 0.5 * (1 + b) * tmp
    tmp = dhc * (0.5 * (1 - c)) ** (i + j)
    if i + j > 0:
        tmp = tmp - 0.5 * (i + j) * hc * (0.5 * (1 - c)) ** (i + j - 1)
    tmp = fa * gb * tmp * (0.5 * (1 - b)) ** i
    vt = vt + tmp

    scale = 2 ** (2 * i + j + 1.5)
    return vr * scale, vs * scale, vt * scale


def _mode_indices(p):
    return [(i, j, k)
            for i in range(p + 1)
            for j in range(p + 1 - i)
            for k in range(p + 1 - i - j)]


def vandermonde_3d(p, points):
    """V[q, m] = phi_m(points[q]) for *points* of shape (n, 3)."""
    r, s, t = np.asarray(points, dtype=float).T
    return np.stack([simplex3d_p(r, s, t, i, j, k)
                     for i, j, k in _mode_indices(p)], axis=-1)


def grad_vandermonde_3d(p, points):
    r, s, t = np.asarray(points, dtype=float).T
    grads = [grad_simplex3d_p(r, s, t, i, j, k) for i, j, k in _mode_indices(p)]
    return tuple(np.stack([g[d] for g in grads], axis=-1) for d in range(3))


def vandermonde_2d(p, r, s):
    return np.stack([simplex2d_p(r, s, i, j)
                     for i in range(p + 1) for j in range(p + 1 - i)], axis=-1)

# }}}


# {{{ quadrature

@dataclass(frozen=True)
class QuadratureRule:
    degree: int
    points: np.ndarray
    weights: np.ndarray

    @property
    def n_points(self) -> int:
        return len(self.weights)


def quadrature_of_degree(degree: int) -> QuadratureRule:
    """Symmetric positive-weight tetrahedron rule exact to total *degree*."""
    try:
        rule = modepy.XiaoGimbutasSimplexQuadrature(degree, 3)
    except modepy.QuadratureRuleUnavailable as exc:
        raise ConfigurationError(
            f"no tetrahedron quadrature table for degree {degree}") from exc
    points = np.ascontiguousarray(rule.nodes.T)
    weights = np.ascontiguousarray(rule.weights)
    if np.any(weights <= 0):
        raise ConfigurationError(f"degree-{degree} rule has non-positive weights")
    return QuadratureRule(degree=degree, points=points, weights=weights)


def build_quadrature(p: int) -> QuadratureRule:
    """The rule used by the weight-adjusted operators: exact to degree 2p,
    giving 4, 11, 23, 44, 74 points for p = 1..5."""
    _check_order(p)
    return quadrature_of_degree(2 * p)

# }}}


# {{{ reference operators

@dataclass(frozen=True)
class ReferenceOperators:
    order: int
    nodes: np.ndarray           # (Np, 3)
    vandermonde: np.ndarray     # (Np, Np)
    mass: np.ndarray
    mass_inv: np.ndarray
    diff: tuple                 # Dr, Ds, Dt
    stiffness: tuple            # Sr, Ss, St with S = M D
    face_mask: np.ndarray       # (4, Nfp) node indices on each face
    lift: np.ndarray            # (Np, 4*Nfp)
    face_mass: np.ndarray       # (4, Nfp, Nfp), relative to a reference face of area 2
    quad: QuadratureRule
    interp_to_quad: np.ndarray      # V_q, (Nq, Np)
    project_from_quad: np.ndarray   # P_q, (Np, Nq)
    assembly_quad: QuadratureRule   # exact to degree 3p
    interp_to_assembly: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_face_nodes(self) -> int:
        return self.face_mask.shape[1]

    @property
    def n_quad(self) -> int:
        return self.quad.n_points

    def interpolation_matrix(self, points):
        """Rows evaluate the nodal interpolant at reference *points* (n, 3)."""
        vp = vandermonde_3d(self.order, np.atleast_2d(points))
        return np.linalg.solve(self.vandermonde.T, vp.T).T


def _check_order(p):
    if not isinstance(p, (int, np.integer)) or p < 1 or p > MAX_ORDER:
        raise ConfigurationError(
            f"polynomial order {p!r} unsupported; need 1 <= p <= {MAX_ORDER}")


def _face_mask(nodes):
    r, s, t = nodes.T
    dist = (np.abs(1 + t), np.abs(1 + s), np.abs(1 + r + s + t), np.abs(1 + r))
    return np.array([np.flatnonzero(d < NODE_TOL) for d in dist])


def _face_coordinates(nodes, face_mask):
    r, s, t = nodes.T
    pairs = ((r, s), (r, t), (s, t), (s, t))
    return [(a[face_mask[f]], b[face_mask[f]]) for f, (a, b) in enumerate(pairs)]


def build_reference_operators(p: int) -> ReferenceOperators:
    _check_order(p)
    nodes = np.ascontiguousarray(modepy.warp_and_blend_nodes(3, p).T)
    npts = n_nodes(p)
    if nodes.shape != (npts, 3):
        raise ConfigurationError(f"node set for p={p} has wrong size")

    v = vandermonde_3d(p, nodes)
    cond = np.linalg.cond(v)
    if not np.isfinite(cond) or cond > 1e8:
        raise ConfigurationError(f"Vandermonde matrix for p={p} is singular")
    vinv = np.linalg.inv(v)
    mass_inv = v @ v.T
    mass = np.linalg.inv(mass_inv)
    mass = 0.5 * (mass + mass.T)

    vr, vs, vt = grad_vandermonde_3d(p, nodes)
    diff = tuple(g @ vinv for g in (vr, vs, vt))
    stiffness = tuple(mass @ d for d in diff)

    fmask = _face_mask(nodes)
    nfp = n_face_nodes(p)
    if fmask.shape != (4, nfp):
        raise ConfigurationError(f"face node extraction failed for p={p}")

    emat = np.zeros((npts, 4 * nfp))
    face_mass = np.empty((4, nfp, nfp))
    for f, (fr, fs) in enumerate(_face_coordinates(nodes, fmask)):
        vface = vandermonde_2d(p, fr, fs)
        face_mass[f] = np.linalg.inv(vface @ vface.T)
        emat[fmask[f], f * nfp:(f + 1) * nfp] += face_mass[f]
    lift = v @ (v.T @ emat)

    quad = build_quadrature(p)
    vq = vandermonde_3d(p, quad.points) @ vinv
    pq = mass_inv @ vq.T * quad.weights

    aquad = quadrature_of_degree(3 * p)
    va = vandermonde_3d(p, aquad.points) @ vinv

    return ReferenceOperators(
        order=p, nodes=nodes, vandermonde=v, mass=mass, mass_inv=mass_inv,
        diff=diff, stiffness=stiffness, face_mask=fmask, lift=lift,
        face_mass=face_mass, quad=quad, interp_to_quad=vq,
        project_from_quad=pq, assembly_quad=aquad, interp_to_assembly=va)


def interpolate_to_quad(ops: ReferenceOperators, coeffs):
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape[0] != ops.n_nodes:
        raise ContractError(
            f"expected {ops.n_nodes} nodal coefficients, got {coeffs.shape[0]}")
    return ops.interp_to_quad @ coeffs


def project_from_quad(ops: ReferenceOperators, values):
    values = np.asarray(values, dtype=float)
    if values.shape[0] != ops.n_quad:
        raise ContractError(
            f"expected {ops.n_quad} quadrature values, got {values.shape[0]}")
    return ops.project_from_quad @ values


def dump_operators(ops: ReferenceOperators, directory) -> list[str]:
    """Write every dense operator as CSV for debugging; returns file paths."""
    os.makedirs(directory, exist_ok=True)
    named = {
        "nodes": ops.nodes, "vandermonde": ops.vandermonde, "mass": ops.mass,
        "mass_inv": ops.mass_inv, "lift": ops.lift,
        "interp_to_quad": ops.interp_to_quad,
        "project_from_quad": ops.project_from_quad,
        "quad_points": ops.quad.points, "quad_weights": ops.quad.weights[:, None],
    }
    for name, mat in zip(("stiffness_r", "stiffness_s", "stiffness_t"), ops.stiffness):
        named[name] = mat
    paths = []
    for name, mat in named.items():
        path = os.path.join(directory, f"p{ops.order}_{name}.csv")
        with open(path, "w", newline="") as fh:
            csv.writer(fh).writerows(np.atleast_2d(mat).tolist())
        paths.append(path)
    return paths

# }}}
