"""Stretched-coordinate PML: profiles, tensor coefficients and per-element
operators.

Three operator families are built from the same sampled coefficients:

* :class:`ElementConstantOperators` keeps one scalar per element, component
  and coefficient (valid only when the samples are element-constant).
* :class:`DirectPmlOperators` stores five dense ``Np x Np`` matrices per
  element and component, assembled from coefficient-weighted mass matrices.
* :class:`WaaPmlOperators` stores five diagonal sample vectors per element
  and component at the quadrature points and applies the weight-adjusted
  inverse matrix-free through the shared ``V_q`` and ``P_q``.

Array layout for samples and fields on PML elements is ``(n_samples, Kp, 3)``
where ``Kp`` counts PML elements and the last axis is the Cartesian
component u.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np

from .constants import EPS0
from .errors import CoefficientError, ConfigurationError, ContractError
from .mesh import AXES, GeometricFactors, Mesh, map_to_physical
from .reference import ReferenceOperators

DEPTH_TOL = 1e-12


# {{{ profiles

@dataclass(frozen=True)
class StretchProfile:
    """Polynomial-graded sigma and kappa along each PML axis.

    *interface* maps an axis letter to ``(u0_minus, u0_plus)``: the
    coordinates where the PML begins on the low and high side (``None`` for
    a side without PML).  *thickness* maps the axis to ``(L_minus, L_plus)``.
    """
    sigma_max: float
    kappa_max: float = 1.0
    order: float = 1.0
    interface: dict = field(default_factory=dict)
    thickness: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.sigma_max < 0:
            raise ConfigurationError("sigma_max must be non-negative")
        if self.kappa_max < 1:
            raise ConfigurationError("kappa_max must be >= 1")
        if self.order <= 0:
            raise ConfigurationError("profile order must be positive")
        for ax, (lo, hi) in self.interface.items():
            if ax not in AXES:
                raise ConfigurationError(f"unknown axis {ax!r}")
            thick = self.thickness.get(ax)
            if thick is None:
                raise ConfigurationError(f"axis {ax} has an interface but no thickness")
            for u0, L in ((lo, thick[0]), (hi, thick[1])):
                if u0 is not None and not L > 0:
                    raise ConfigurationError(f"axis {ax}: PML thickness must be positive")
            if lo is not None and hi is not None and lo >= hi:
                raise ConfigurationError(f"axis {ax}: lower interface must lie below upper")

    @classmethod
    def slab(cls, axis, lower, upper, thickness, sigma_max, kappa_max=1.0, order=1.0):
        """PML on both sides of *axis* with equal thickness."""
        return cls(sigma_max=sigma_max, kappa_max=kappa_max, order=order,
                   interface={axis: (lower, upper)},
                   thickness={axis: (thickness, thickness)})

    def with_sigma_max(self, sigma_max):
        return StretchProfile(sigma_max, self.kappa_max, self.order,
                              dict(self.interface), dict(self.thickness))

    @property
    def axes(self):
        return tuple(self.interface)


def pml_depth(profile: StretchProfile, u, axis):
    """Normalized depth (u - u0)/L into the PML along *axis*; 0 outside."""
    u = np.asarray(u, dtype=float)
    depth = np.zeros_like(u)
    if axis not in profile.interface:
        return depth
    lo, hi = profile.interface[axis]
    llo, lhi = profile.thickness[axis]
    if hi is not None:
        depth = np.maximum(depth, (u - hi) / lhi)
    if lo is not None:
        depth = np.maximum(depth, (lo - u) / llo)
    return depth


def eval_profile(profile: StretchProfile, u, axis):
    """(sigma [S/m], kappa) at coordinate(s) *u* along *axis*."""
    x = pml_depth(profile, u, axis) ** profile.order
    sigma = profile.sigma_max * x
    kappa = 1.0 + (profile.kappa_max - 1.0) * x
    return sigma, kappa

# }}}


# {{{ tensor coefficients

class TensorCoefficients(NamedTuple):
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    inv_kappa: np.ndarray


def tensor_coefficients(sigma, kappa) -> TensorCoefficients:
    """Diagonal entries of the time-domain stretched-coordinate tensors.

    *sigma* and *kappa* have a trailing axis of length 3 (x, y, z); each
    output entry u uses the cyclic partners (v, w) of u.  Units: a and 1/kappa
    are dimensionless, b and d are 1/s, c is 1/s^2.
    """
    sigma = np.asarray(sigma, dtype=float)
    kappa = np.asarray(kappa, dtype=float)
    if sigma.shape[-1:] != (3,) or kappa.shape != sigma.shape:
        raise ContractError("sigma and kappa need matching shapes with a trailing axis of 3")
    su, sv, sw = sigma, np.roll(sigma, -1, axis=-1), np.roll(sigma, -2, axis=-1)
    ku, kv, kw = kappa, np.roll(kappa, -1, axis=-1), np.roll(kappa, -2, axis=-1)
    a = kv * kw / ku
    b = (sv * kw + sw * kv - a * su) / (ku * EPS0)
    c = sv * sw / EPS0 ** 2 - b * su / EPS0
    d = su / (ku * EPS0)
    return TensorCoefficients(a, b, c, d, 1.0 / ku)

# }}}


# {{{ sampling

class SamplingStrategy(str, Enum):
    ELEMENT_CONSTANT_FARTHEST_NODE = "ec-farthest-node"
    LAYERED_OUTERMOST = "ec-layered-outermost"
    SMOOTHLY_VARYING = "smoothly-varying"


@dataclass(frozen=True)
class PmlCoefficients:
    elements: np.ndarray      # (Kp,) global ids of PML elements
    strategy: SamplingStrategy
    locations: str            # "nodes" or "quad"
    sigma: np.ndarray         # (Ns, Kp, 3)
    kappa: np.ndarray
    tensors: TensorCoefficients

    @property
    def n_samples(self) -> int:
        return self.sigma.shape[0]

    @property
    def is_element_constant(self) -> bool:
        return all(np.all(t == t[:1]) for t in self.tensors)


def pml_element_mask(mesh: Mesh, profile: StretchProfile):
    """Elements with any vertex strictly inside the PML."""
    verts = mesh.element_vertices()
    mask = np.zeros(mesh.n_elements, dtype=bool)
    for ax in profile.axes:
        d = AXES.index(ax)
        depth = pml_depth(profile, verts[:, :, d], ax)
        mask |= depth.max(axis=1) > DEPTH_TOL
    return mask


def _sample_points(ops, locations):
    if locations == "nodes":
        return ops.nodes
    if locations == "quad":
        return ops.quad.points
    raise ConfigurationError(f"unknown sample locations {locations!r}")


def _farthest_node_samples(profile, node_xyz):
    """Per element and axis: profile at the node deepest into the PML."""
    sig = np.zeros(node_xyz.shape[1:])
    kap = np.ones(node_xyz.shape[1:])
    for ax in profile.axes:
        d = AXES.index(ax)
        depth = pml_depth(profile, node_xyz[..., d], ax)         # (Np, Kp)
        far = depth.argmax(axis=0)
        u = node_xyz[far, np.arange(node_xyz.shape[1]), d]
        sig[:, d], kap[:, d] = eval_profile(profile, u, ax)
    return sig, kap


def _layered_samples(mesh, profile, elements):
    if mesh.style != "layered" or not mesh.layer_planes:
        raise ConfigurationError("layered-outermost sampling requires a layered mesh")
    extra = [ax for ax in profile.axes if ax != "z"]
    if extra:
        raise ConfigurationError(
            f"layered meshes are layered along z only; profile also grades {extra}")
    zlo, zhi = mesh.bounds[:, 2]
    planes = np.unique(np.concatenate([[zlo, zhi], mesh.layer_planes]))
    zv = mesh.element_vertices()[elements, :, 2]
    zc = zv.mean(axis=1)
    idx = np.clip(np.searchsorted(planes, zc) - 1, 0, len(planes) - 2)
    below, above = planes[idx], planes[idx + 1]
    tol = 1e-9 * (zhi - zlo)
    if np.any(zv.min(axis=1) < below - tol) or np.any(zv.max(axis=1) > above + tol):
        raise ConfigurationError("an element straddles a layer plane")
    depth_b = pml_depth(profile, below, "z")
    depth_a = pml_depth(profile, above, "z")
    outer = np.where(depth_a >= depth_b, above, below)
    sig = np.zeros((len(elements), 3))
    kap = np.ones((len(elements), 3))
    sig[:, 2], kap[:, 2] = eval_profile(profile, outer, "z")
    return sig, kap


def sample_coefficients(mesh: Mesh, profile: StretchProfile, strategy,
                        locations: str, ops: ReferenceOperators,
                        elements=None) -> PmlCoefficients:
    """Sample sigma and kappa on PML elements and evaluate the tensors.

    *elements* defaults to the mesh's PML-tagged elements.  Element-constant
    strategies replicate one value per element and axis over every sample
    point; the smoothly-varying strategy evaluates the profile at each
    physical sample location.
    """
    strategy = SamplingStrategy(strategy)
    if elements is None:
        elements = mesh.pml_elements
    elements = np.asarray(elements, dtype=np.int64)
    ref = _sample_points(ops, locations)
    ns, kp = len(ref), len(elements)
    verts = mesh.element_vertices()[elements]

    if strategy is SamplingStrategy.SMOOTHLY_VARYING:
        xyz = map_to_physical(verts, ref)                      # (Ns, Kp, 3)
        sigma = np.zeros((ns, kp, 3))
        kappa = np.ones((ns, kp, 3))
        for ax in profile.axes:
            d = AXES.index(ax)
            sigma[..., d], kappa[..., d] = eval_profile(profile, xyz[..., d], ax)
    else:
        if strategy is SamplingStrategy.ELEMENT_CONSTANT_FARTHEST_NODE:
            sig, kap = _farthest_node_samples(profile, map_to_physical(verts, ops.nodes))
        else:
            sig, kap = _layered_samples(mesh, profile, elements)
        sigma = np.broadcast_to(sig, (ns, kp, 3)).copy()
        kappa = np.broadcast_to(kap, (ns, kp, 3)).copy()

    tensors = tensor_coefficients(sigma, kappa)
    check_coefficients(tensors)
    return PmlCoefficients(elements=elements, strategy=strategy, locations=locations,
                           sigma=sigma, kappa=kappa, tensors=tensors)


def vacuum_coefficients(elements, n_samples, locations="nodes") -> PmlCoefficients:
    kp = len(elements)
    sigma = np.zeros((n_samples, kp, 3))
    kappa = np.ones((n_samples, kp, 3))
    return PmlCoefficients(np.asarray(elements, dtype=np.int64),
                           SamplingStrategy.SMOOTHLY_VARYING, locations,
                           sigma, kappa, tensor_coefficients(sigma, kappa))


def check_coefficients(tensors: TensorCoefficients):
    if np.any(~(tensors.a > 0)):
        raise CoefficientError("PML coefficient a must be strictly positive")
    if np.any(~(tensors.inv_kappa > 0)) or np.any(tensors.inv_kappa > 1 + 1e-15):
        raise CoefficientError("PML stretching kappa must be >= 1")
    for name, arr in zip(tensors._fields, tensors):
        if not np.all(np.isfinite(arr)):
            raise CoefficientError(f"non-finite PML coefficient {name}")

# }}}


# {{{ operators

@dataclass(frozen=True)
class ElementConstantOperators:
    """One scalar per element, component and coefficient: 15 per element."""
    elements: np.ndarray
    inv_a: np.ndarray         # (Kp, 3)
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    inv_kappa: np.ndarray

    @property
    def float_count(self) -> int:
        return sum(x.size for x in (self.inv_a, self.b, self.c, self.d, self.inv_kappa))


def build_element_constant_operators(coeffs: PmlCoefficients) -> ElementConstantOperators:
    if not coeffs.is_element_constant:
        raise ConfigurationError("element-constant operators need element-constant samples")
    t = coeffs.tensors
    return ElementConstantOperators(
        elements=coeffs.elements, inv_a=1.0 / t.a[0], b=t.b[0].copy(),
        c=t.c[0].copy(), d=t.d[0].copy(), inv_kappa=t.inv_kappa[0].copy())


@dataclass(frozen=True)
class DirectPmlOperators:
    """Five dense matrices per element and component, shape (Kp, 3, Np, Np).

    ``A = (M^a)^{-1}``, ``T_b = A M^b``, ``T_c = A M^c``,
    ``T_d = M_k^{-1} M^d`` and ``T_kappa = M_k^{-1} M^{1/kappa}``.
    """
    elements: np.ndarray
    A: np.ndarray
    T_b: np.ndarray
    T_c: np.ndarray
    T_d: np.ndarray
    T_kappa: np.ndarray

    @property
    def float_count(self) -> int:
        return sum(x.size for x in (self.A, self.T_b, self.T_c, self.T_d, self.T_kappa))


def weighted_mass(ops: ReferenceOperators, alpha_nodes, jacobian):
    """``J_k V^T W diag(alpha) V`` on the degree-3p assembly rule.

    *alpha_nodes* holds nodal samples (Np, Kp, 3); the result is
    (Kp, 3, Np, Np).
    """
    va = ops.interp_to_assembly
    alpha_q = np.einsum("qi,iku->qku", va, alpha_nodes)
    wq = ops.assembly_quad.weights
    m = np.einsum("qi,qku,qj->kuij", va, alpha_q * wq[:, None, None], va, optimize=True)
    return m * np.asarray(jacobian)[:, None, None, None]


def build_direct_operators(coeffs: PmlCoefficients, ops: ReferenceOperators,
                           jacobian) -> DirectPmlOperators:
    if coeffs.locations != "nodes":
        raise ContractError("direct operators are assembled from nodal samples")
    jacobian = np.asarray(jacobian, dtype=float)
    if jacobian.shape != coeffs.elements.shape:
        raise ContractError("one Jacobian per PML element required")
    t = coeffs.tensors
    m_a = weighted_mass(ops, t.a, jacobian)
    try:
        chol = np.linalg.cholesky(m_a)
    except np.linalg.LinAlgError:
        raise CoefficientError("weighted mass matrix M^a is not positive definite") from None
    eye = np.broadcast_to(np.eye(ops.n_nodes), m_a.shape)
    linv = np.linalg.solve(chol, eye)
    A = np.swapaxes(linv, -1, -2) @ linv
    minv_k = ops.mass_inv[None, None] / jacobian[:, None, None, None]
    return DirectPmlOperators(
        elements=coeffs.elements,
        A=A,
        T_b=A @ weighted_mass(ops, t.b, jacobian),
        T_c=A @ weighted_mass(ops, t.c, jacobian),
        T_d=minv_k @ weighted_mass(ops, t.d, jacobian),
        T_kappa=minv_k @ weighted_mass(ops, t.inv_kappa, jacobian))


@dataclass(frozen=True)
class WaaPmlOperators:
    """Weight-adjusted PML operators: diagonal samples at quadrature points.

    Only ``15 * Nq`` floats per element are owned here; ``V_q`` and ``P_q``
    belong to the shared :class:`ReferenceOperators`.
    """
    elements: np.ndarray
    inv_a: np.ndarray         # (Nq, Kp, 3)
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    inv_kappa: np.ndarray
    jacobian: np.ndarray      # (Kp,), shared geometric factor
    ops: ReferenceOperators = field(repr=False)

    @property
    def float_count(self) -> int:
        return sum(x.size for x in (self.inv_a, self.b, self.c, self.d, self.inv_kappa))

    @property
    def shared_float_count(self) -> int:
        return self.ops.interp_to_quad.size + self.ops.project_from_quad.size

    def _check(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape != (self.ops.n_nodes,) + self.inv_a.shape[1:]:
            raise ContractError(
                f"expected nodal array of shape {(self.ops.n_nodes,) + self.inv_a.shape[1:]}, "
                f"got {v.shape}")
        return v

    def _vq(self, v):
        return np.einsum("qi,iku->qku", self.ops.interp_to_quad, v)

    def _pq(self, w):
        return np.einsum("iq,qku->iku", self.ops.project_from_quad, w)

    def apply_inv_a(self, v):
        """``P_q diag(1/a) V_q v``: the weight-adjusted ``(M^a)^{-1} M_k``."""
        return self._pq(self.inv_a * self._vq(self._check(v)))

    def mass_inverse(self, v):
        """Weight-adjusted ``(M^a)^{-1} v``."""
        v = self._check(v)
        minv_v = np.einsum("ij,jku->iku", self.ops.mass_inv, v) / self.jacobian[:, None]
        return self.apply_inv_a(minv_v)

    def fused_b(self, v):
        return self.apply_inv_a(self._pq(self.b * self._vq(self._check(v))))

    def fused_c(self, v):
        return self.apply_inv_a(self._pq(self.c * self._vq(self._check(v))))

    def fused_d(self, v):
        return self._pq(self.d * self._vq(self._check(v)))

    def fused_inv_kappa(self, v):
        return self._pq(self.inv_kappa * self._vq(self._check(v)))


def build_waa_operators(coeffs: PmlCoefficients, ops: ReferenceOperators,
                        jacobian) -> WaaPmlOperators:
    if coeffs.locations != "quad":
        raise ContractError("weight-adjusted operators need quadrature-point samples")
    t = coeffs.tensors
    if np.any(~(t.a > 0)) or np.any(~(t.inv_kappa > 0)):
        raise CoefficientError("non-positive a or kappa sample")
    jacobian = np.asarray(jacobian, dtype=float)
    if jacobian.shape != coeffs.elements.shape:
        raise ContractError("one Jacobian per PML element required")
    return WaaPmlOperators(
        elements=coeffs.elements, inv_a=1.0 / t.a, b=t.b.copy(), c=t.c.copy(),
        d=t.d.copy(), inv_kappa=t.inv_kappa.copy(), jacobian=jacobian, ops=ops)


def waa_weighted_mass_inverse(ops: ReferenceOperators, alpha_q, jacobian):
    """Dense weight-adjusted ``(M^alpha)^{-1} = P_q diag(1/alpha) V_q M_k^{-1}``
    for one element; used to compare against assembled inverses."""
    alpha_q = np.asarray(alpha_q, dtype=float)
    return (ops.project_from_quad * (1.0 / alpha_q)) @ ops.interp_to_quad @ ops.mass_inv / jacobian


def waa_inverse_weighted_mass(ops: ReferenceOperators, alpha_q, jacobian):
    """``M^{1/alpha} = J_k V_q^T W diag(1/alpha) V_q`` for one element."""
    alpha_q = np.asarray(alpha_q, dtype=float)
    vq = ops.interp_to_quad
    return jacobian * vq.T @ ((ops.quad.weights / alpha_q)[:, None] * vq)

# }}}
