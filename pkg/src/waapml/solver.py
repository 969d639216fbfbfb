"""Nodal DG semi-discretization of Maxwell's equations with PML regions.

Unknowns live in two arrays:

* ``fields``: shape ``(Np, K, 6)``, ``[..., :3]`` is E (V/m), ``[..., 3:]``
  is H (A/m);
* ``aux``: shape ``(Np, Kp, 6)`` on the PML elements only, ``[..., :3]`` is
  P_E and ``[..., 3:]`` is P_H.

The shared curl step produces ``C = [CE, CH]`` where ``CE = M_k^{-1} C(E)``
and ``CH = M_k^{-1} C(H)`` include the lifted surface flux. Interior
elements then use ``dH/dt = -CE/mu``, ``dE/dt = CH/eps``; PML elements use
one of three interchangeable update paths (element constant, direct,
weight-adjusted).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numba
import numpy as np

from .constants import C0, EPS0, ETA0, MU0
from .errors import ConfigurationError, ContractError, InstabilityError
from .mesh import (FaceTag, GeometricFactors, Mesh, NodeMaps, build_node_maps,
                   geometric_factors)
from .pml import DirectPmlOperators, ElementConstantOperators, WaaPmlOperators
from .reference import ReferenceOperators

# Carpenter-Kennedy five-stage fourth-order low-storage Runge-Kutta
RK4A = np.array([
    0.0,
    -567301805773.0 / 1357537059087.0,
    -2404267990393.0 / 2016746695238.0,
    -3550918686646.0 / 2091501179385.0,
    -1275806237668.0 / 842570457699.0])
RK4B = np.array([
    1432997174477.0 / 9575080441755.0,
    5161836677717.0 / 13612068292357.0,
    1720146321549.0 / 2090206949498.0,
    3134564353537.0 / 4481467310338.0,
    2277821191437.0 / 14882151754819.0])
RK4C = np.array([
    0.0,
    1432997174477.0 / 9575080441755.0,
    2526269341429.0 / 6820363962896.0,
    2006345519317.0 / 3224310063776.0,
    2802321613138.0 / 2924317926251.0])


class Flux(str, Enum):
    UPWIND = "upwind"
    CENTRAL = "central"


class PmlPath(str, Enum):
    ELEMENT_CONSTANT = "element_constant"
    DIRECT = "direct"
    WAA = "waa"


_PATH_TYPES = {
    PmlPath.ELEMENT_CONSTANT: ElementConstantOperators,
    PmlPath.DIRECT: DirectPmlOperators,
    PmlPath.WAA: WaaPmlOperators,
}


@dataclass(frozen=True)
class SolverConfig:
    flux: Flux = Flux.UPWIND
    cfl: float = 0.5
    pml_path: PmlPath = PmlPath.WAA
    epsilon: Optional[np.ndarray] = None   # (K,) F/m, vacuum when None
    mu: Optional[np.ndarray] = None        # (K,) H/m
    check_finite: bool = True

    def __post_init__(self):
        object.__setattr__(self, "flux", Flux(self.flux))
        object.__setattr__(self, "pml_path", PmlPath(self.pml_path))
        if not self.cfl > 0:
            raise ConfigurationError("cfl must be positive")
        for name in ("epsilon", "mu"):
            val = getattr(self, name)
            if val is not None and np.any(~(np.asarray(val) > 0)):
                raise ConfigurationError(f"{name} must be strictly positive")


@dataclass
class FieldState:
    fields: np.ndarray        # (Np, K, 6)
    aux: np.ndarray           # (Np, Kp, 6)
    time: float = 0.0

    @property
    def E(self):
        return self.fields[..., :3]

    @property
    def H(self):
        return self.fields[..., 3:]

    @property
    def P_E(self):
        return self.aux[..., :3]

    @property
    def P_H(self):
        return self.aux[..., 3:]

    def copy(self) -> "FieldState":
        return FieldState(self.fields.copy(), self.aux.copy(), self.time)


# {{{ source

@dataclass(frozen=True)
class PlaneWaveSource:
    """x-polarized Gaussian pulse travelling in +z, injected on a z-plane.

    ``G(t) = exp(-(t - t0)^2 / (4 tau^2))``; E_x = E0 G, H_y = E0 G / eta0.
    """
    amplitude: float = 1.0
    tau: float = 66.67e-12
    t0: Optional[float] = None
    plane_z: float = 0.0

    def __post_init__(self):
        if self.t0 is None:
            object.__setattr__(self, "t0", 15.0 * self.tau)
        if not self.tau > 0:
            raise ConfigurationError("pulse width tau must be positive")

    def pulse(self, t):
        return np.exp(-((np.asarray(t) - self.t0) ** 2) / (4.0 * self.tau ** 2))

    def incident(self, t):
        """(E, H) of the incident wave on the injection plane at time *t*."""
        g = self.amplitude * float(self.pulse(t))
        return np.array([g, 0.0, 0.0]), np.array([0.0, g / ETA0, 0.0])

    def field_at(self, z, t):
        """Incident E_x at height *z* (V/m)."""
        return self.amplitude * self.pulse(t - (np.asarray(z) - self.plane_z) / C0)

    def quiet_start(self, threshold=1e-12):
        """Earliest time at which the pulse value still lies below *threshold*."""
        return max(0.0, self.t0 - 2.0 * self.tau * math.sqrt(-math.log(threshold)))

# }}}


# {{{ kernels

@numba.njit(cache=True, fastmath=True)
def _curl_kernel(du, inv_map, lifted, out):
    # du: (3, Np, K, 6) reference derivatives; out = [curl E, curl H] + lifted
    n_nodes, n_elem = du.shape[1], du.shape[2]
    for n in range(n_nodes):
        for k in range(n_elem):
            im = inv_map[k]
            for off in (0, 3):
                # g[c][d] = d(component c)/d(x_d)
                g02 = im[0, 2] * du[0, n, k, off] + im[1, 2] * du[1, n, k, off] + im[2, 2] * du[2, n, k, off]
                g01 = im[0, 1] * du[0, n, k, off] + im[1, 1] * du[1, n, k, off] + im[2, 1] * du[2, n, k, off]
                g10 = im[0, 0] * du[0, n, k, off + 1] + im[1, 0] * du[1, n, k, off + 1] + im[2, 0] * du[2, n, k, off + 1]
                g12 = im[0, 2] * du[0, n, k, off + 1] + im[1, 2] * du[1, n, k, off + 1] + im[2, 2] * du[2, n, k, off + 1]
                g20 = im[0, 0] * du[0, n, k, off + 2] + im[1, 0] * du[1, n, k, off + 2] + im[2, 0] * du[2, n, k, off + 2]
                g21 = im[0, 1] * du[0, n, k, off + 2] + im[1, 1] * du[1, n, k, off + 2] + im[2, 1] * du[2, n, k, off + 2]
                out[n, k, off + 0] = g21 - g12 + lifted[n, k, off + 0]
                out[n, k, off + 1] = g02 - g20 + lifted[n, k, off + 1]
                out[n, k, off + 2] = g10 - g01 + lifted[n, k, off + 2]


@numba.njit(cache=True, fastmath=True)
def _flux_kernel(u, vmap_m, vmap_p, pec, inj_sign, e_inc, h_inc, normals, coef, nfp, out):
    # u: (Np*K, 6) flat fields; out: (4*Nfp, K, 6) = [-Fs*fluxH, Fs*fluxE]
    # coef[:, i, k] = Fs*(Z+/(Z-+Z+), alpha/(Z-+Z+), Y+/(Y-+Y+), alpha/(Y-+Y+))
    n_tr, n_elem = vmap_m.shape
    for i in range(n_tr):
        f = i // nfp
        for k in range(n_elem):
            m = vmap_m[i, k]
            if pec[i, k]:
                dex, dey, dez = -2.0 * u[m, 0], -2.0 * u[m, 1], -2.0 * u[m, 2]
                dhx = dhy = dhz = 0.0
            else:
                p = vmap_p[i, k]
                s = inj_sign[i, k]
                dex = u[p, 0] - u[m, 0] + s * e_inc[0]
                dey = u[p, 1] - u[m, 1] + s * e_inc[1]
                dez = u[p, 2] - u[m, 2] + s * e_inc[2]
                dhx = u[p, 3] - u[m, 3] + s * h_inc[0]
                dhy = u[p, 4] - u[m, 4] + s * h_inc[1]
                dhz = u[p, 5] - u[m, 5] + s * h_inc[2]
            nx, ny, nz = normals[k, f, 0], normals[k, f, 1], normals[k, f, 2]
            ce, ae, ch, ah = coef[0, i, k], coef[1, i, k], coef[2, i, k], coef[3, i, k]
            ndE = nx * dex + ny * dey + nz * dez
            ndH = nx * dhx + ny * dhy + nz * dhz
            # n x (n x v) = n (n.v) - v
            out[i, k, 3] = ce * (ny * dhz - nz * dhy) - ae * (nx * ndE - dex)
            out[i, k, 4] = ce * (nz * dhx - nx * dhz) - ae * (ny * ndE - dey)
            out[i, k, 5] = ce * (nx * dhy - ny * dhx) - ae * (nz * ndE - dez)
            out[i, k, 0] = ch * (ny * dez - nz * dey) + ah * (nx * ndH - dhx)
            out[i, k, 1] = ch * (nz * dex - nx * dez) + ah * (ny * ndH - dhy)
            out[i, k, 2] = ch * (nx * dey - ny * dex) + ah * (nz * ndH - dhz)


@numba.njit(cache=True)
def _interior_rates(c, inv_eps, inv_mu, out):
    n_nodes, n_elem = c.shape[0], c.shape[1]
    for n in range(n_nodes):
        for k in range(n_elem):
            ie, im = inv_eps[k], inv_mu[k]
            for u in range(3):
                out[n, k, u] = c[n, k, 3 + u] * ie
                out[n, k, 3 + u] = -c[n, k, u] * im


@numba.njit(cache=True)
def _ec_rates(c, fields, aux, elements, inv_eps, inv_mu, inv_a, b, cc, d, inv_kappa,
              out, out_aux):
    n_nodes = c.shape[0]
    for j in range(elements.shape[0]):
        k = elements[j]
        ie, im = inv_eps[k], inv_mu[k]
        for n in range(n_nodes):
            for u in range(3):
                e = fields[n, k, u]
                h = fields[n, k, 3 + u]
                pe = aux[n, j, u]
                ph = aux[n, j, 3 + u]
                out[n, k, u] = -inv_a[j, u] * (b[j, u] * e + cc[j, u] * pe - c[n, k, 3 + u] * ie)
                out[n, k, 3 + u] = -inv_a[j, u] * (b[j, u] * h + cc[j, u] * ph + c[n, k, u] * im)
                out_aux[n, j, u] = inv_kappa[j, u] * e - d[j, u] * pe
                out_aux[n, j, 3 + u] = inv_kappa[j, u] * h - d[j, u] * ph


@numba.njit(cache=True)
def _waa_stage1(vq_all, b, cc, inv_kappa, d, s_out):
    # vq_all: (Nq, Kp, 12) = V_q [fields | aux]; s_out: (Nq, Kp, 12)
    # s_out[..., :6] = b*V_q f + c*V_q P ; s_out[..., 6:] = V_q f / kappa - d*V_q P
    nq, kp = vq_all.shape[0], vq_all.shape[1]
    for q in range(nq):
        for j in range(kp):
            for g in range(6):
                u = g % 3
                f = vq_all[q, j, g]
                p = vq_all[q, j, 6 + g]
                s_out[q, j, g] = b[q, j, u] * f + cc[q, j, u] * p
                s_out[q, j, 6 + g] = inv_kappa[q, j, u] * f - d[q, j, u] * p


@numba.njit(cache=True)
def _scale_components(x, inv_a):
    nq, kp = x.shape[0], x.shape[1]
    for q in range(nq):
        for j in range(kp):
            for g in range(6):
                x[q, j, g] *= inv_a[q, j, g % 3]

@numba.njit(cache=True)
def _gather_pml(fields, aux, elements, out):
    # out: (Np, Kp, 12) = [fields on PML elements | aux]
    for n in range(fields.shape[0]):
        for j in range(elements.shape[0]):
            k = elements[j]
            for g in range(6):
                out[n, j, g] = fields[n, k, g]
                out[n, j, 6 + g] = aux[n, j, g]


@numba.njit(cache=True)
def _curl_sources(curl, elements, inv_eps, inv_mu, scale, base, out):
    # out[..., :3] = scale*(base_E - CH/eps), out[..., 3:] = scale*(base_H + CE/mu)
    for n in range(curl.shape[0]):
        for j in range(elements.shape[0]):
            k = elements[j]
            ie, im, sc = inv_eps[k], inv_mu[k], scale[j]
            for u in range(3):
                out[n, j, u] = sc * (base[n, j, u] - curl[n, k, 3 + u] * ie)
                out[n, j, 3 + u] = sc * (base[n, j, 3 + u] + curl[n, k, u] * im)


@numba.njit(cache=True)
def _scatter_negated(x, elements, rates):
    for n in range(x.shape[0]):
        for j in range(elements.shape[0]):
            k = elements[j]
            for g in range(6):
                rates[n, k, g] = -x[n, j, g]


@numba.njit(cache=True, fastmath=True)
def _direct_kernel(fields, aux, src, elements, A, T_b, T_c, T_d, T_kappa, rates, rates_aux):
    n_nodes = fields.shape[0]
    for j in range(elements.shape[0]):
        k = elements[j]
        for u in range(3):
            for n in range(n_nodes):
                de = 0.0
                dh = 0.0
                pe = 0.0
                ph = 0.0
                for m in range(n_nodes):
                    a, tb, tc = A[j, u, n, m], T_b[j, u, n, m], T_c[j, u, n, m]
                    td, tk = T_d[j, u, n, m], T_kappa[j, u, n, m]
                    fe, fh = fields[m, k, u], fields[m, k, 3 + u]
                    xe, xh = aux[m, j, u], aux[m, j, 3 + u]
                    de += tb * fe + tc * xe + a * src[m, j, u]
                    dh += tb * fh + tc * xh + a * src[m, j, 3 + u]
                    pe += tk * fe - td * xe
                    ph += tk * fh - td * xh
                rates[n, k, u] = -de
                rates[n, k, 3 + u] = -dh
                rates_aux[n, j, u] = pe
                rates_aux[n, j, 3 + u] = ph


@numba.njit(cache=True)
def _lsrk_update(u, res, rate, a, b, dt):
    uf, rf, kf = u.reshape(-1), res.reshape(-1), rate.reshape(-1)
    for i in range(uf.shape[0]):
        r = a * rf[i] + dt * kf[i]
        rf[i] = r
        uf[i] += b * r

# }}}


def stable_dt(geo: GeometricFactors, p: int, cfl: float = 0.5, wave_speed=None) -> float:
    """``cfl * min_k r_in,k / (c_k p^2)``."""
    if not cfl > 0:
        raise ConfigurationError("cfl must be positive")
    speed = C0 if wave_speed is None else np.asarray(wave_speed)
    return float(cfl * np.min(geo.inscribed_radius / speed) / p ** 2)


class Solver:
    """Semi-discrete operator plus time integration on a fixed mesh."""

    def __init__(self, mesh: Mesh, ops: ReferenceOperators, config: SolverConfig = SolverConfig(),
                 pml=None, source: Optional[PlaneWaveSource] = None,
                 geo: Optional[GeometricFactors] = None, maps: Optional[NodeMaps] = None):
        self.mesh = mesh
        self.ops = ops
        self.config = config
        self.geo = geometric_factors(mesh, ops) if geo is None else geo
        self.maps = build_node_maps(mesh, ops, self.geo) if maps is None else maps
        self.source = source
        K, Np = mesh.n_elements, ops.n_nodes
        self.n_elements, self.n_nodes = K, Np

        eps = np.full(K, EPS0) if config.epsilon is None else np.asarray(config.epsilon, float)
        mu = np.full(K, MU0) if config.mu is None else np.asarray(config.mu, float)
        if eps.shape != (K,) or mu.shape != (K,):
            raise ContractError("material arrays need one value per element")
        self.inv_eps, self.inv_mu = 1.0 / eps, 1.0 / mu
        self.wave_speed = 1.0 / np.sqrt(eps * mu)

        self._diff = np.ascontiguousarray(np.concatenate(ops.diff, axis=0))   # (3Np, Np)
        self._lift = np.ascontiguousarray(ops.lift)
        vm, vp = self.maps.interior, self.maps.exterior
        self._vmap_m = np.ascontiguousarray(vm)
        self._vmap_p = np.ascontiguousarray(vp)
        tag = self.maps.face_tag
        self._pec = np.ascontiguousarray(tag == FaceTag.PEC)
        impedance = np.sqrt(mu / eps)
        z_m, z_p = impedance[vm % K], impedance[vp % K]
        alpha = 1.0 if config.flux is Flux.UPWIND else 0.0
        nfp = ops.n_face_nodes
        fs = self.geo.face_scale[np.arange(K)[None, :], np.arange(4 * nfp)[:, None] // nfp]
        self._flux_coef = np.ascontiguousarray(np.stack([
            fs * z_p / (z_m + z_p), fs * alpha / (z_m + z_p),
            fs * (1 / z_p) / (1 / z_m + 1 / z_p), fs * alpha / (1 / z_m + 1 / z_p)]))

        inj = tag == FaceTag.INJECTION_PLANE
        self._inj_sign = np.zeros(vm.shape)
        if source is not None and np.any(inj):
            zc = mesh.centroids()[:, 2]
            side = np.where(zc > source.plane_z, 1.0, -1.0)
            self._inj_sign = np.where(inj, side[vm % K], 0.0)
        elif source is not None:
            raise ConfigurationError("mesh has no injection-plane faces for the source")
        self._zero3 = np.zeros(3)
        self._work = {
            "flux": np.empty(vm.shape + (6,)),
            "lifted": np.empty((Np, 6 * K)),
            "du": np.empty((3 * Np, 6 * K)),
            "curl": np.empty((Np, K, 6)),
        }

        self.pml = pml
        if pml is None:
            self.pml_elements = np.zeros(0, dtype=np.int64)
        else:
            expected = _PATH_TYPES[config.pml_path]
            if not isinstance(pml, expected):
                raise ContractError(
                    f"pml_path {config.pml_path.value} needs {expected.__name__}, "
                    f"got {type(pml).__name__}")
            self.pml_elements = np.ascontiguousarray(pml.elements, dtype=np.int64)
            if self.pml_elements.size and (self.pml_elements.min() < 0
                                           or self.pml_elements.max() >= K):
                raise ContractError("PML operator refers to elements outside the mesh")
            if isinstance(pml, WaaPmlOperators) and pml.ops.order != ops.order:
                raise ContractError("WAA operators were built for another order")
            if isinstance(pml, DirectPmlOperators) and pml.A.shape[-1] != Np:
                raise ContractError("direct operators were built for another order")
        self.n_pml = len(self.pml_elements)
        self._interior_mask = np.ones(K, dtype=bool)
        self._interior_mask[self.pml_elements] = False
        self._jac_pml = np.ascontiguousarray(self.geo.jacobian[self.pml_elements])
        self._ones_pml = np.ones(self.n_pml)
        self._pml_zeros = np.zeros((Np, self.n_pml, 6))

    # {{{ state

    def zero_state(self, time=0.0) -> FieldState:
        return FieldState(np.zeros((self.n_nodes, self.n_elements, 6)),
                          np.zeros((self.n_nodes, self.n_pml, 6)), time)

    def state_from_function(self, func, time=0.0) -> FieldState:
        """Nodal interpolation of ``func(x, y, z) -> (Ex, Ey, Ez, Hx, Hy, Hz)``."""
        x = self.geo.node_coords
        vals = func(x[..., 0], x[..., 1], x[..., 2])
        st = self.zero_state(time)
        for c in range(6):
            st.fields[..., c] = vals[c]
        return st

    # }}}

    # {{{ right-hand sides

    def _curl_into(self, fields, t):
        # returns an internal buffer, overwritten by the next call
        Np, K = self.n_nodes, self.n_elements
        if fields.shape != (Np, K, 6):
            raise ContractError(f"fields must have shape {(Np, K, 6)}, got {fields.shape}")
        fields = np.ascontiguousarray(fields)
        wk = self._work
        if self.source is not None:
            e_inc, h_inc = self.source.incident(t)
        else:
            e_inc = h_inc = self._zero3
        _flux_kernel(fields.reshape(Np * K, 6), self._vmap_m, self._vmap_p, self._pec,
                     self._inj_sign, e_inc, h_inc, self.geo.face_normals,
                     self._flux_coef, self.ops.n_face_nodes, wk["flux"])
        np.matmul(self._lift, wk["flux"].reshape(-1, 6 * K), out=wk["lifted"])
        np.matmul(self._diff, fields.reshape(Np, 6 * K), out=wk["du"])
        _curl_kernel(wk["du"].reshape(3, Np, K, 6), self.geo.inv_map,
                     wk["lifted"].reshape(Np, K, 6), wk["curl"])
        return wk["curl"]

    def curl_rhs(self, fields, t=0.0):
        """``[CE, CH]`` with shape (Np, K, 6), surface flux lifted."""
        return self._curl_into(np.asarray(fields, dtype=float), t).copy()

    def rhs_interior(self, curl, out=None):
        """Vacuum/material update on every element (PML rows overwritten later)."""
        rates = np.empty_like(curl) if out is None else out
        _interior_rates(curl, self.inv_eps, self.inv_mu, rates)
        return rates

    def rhs_pml_element_constant(self, curl, fields, aux, rates):
        ops = self.pml
        rates_aux = np.empty_like(aux)
        _ec_rates(curl, fields, aux, self.pml_elements, self.inv_eps, self.inv_mu,
                  ops.inv_a, ops.b, ops.c, ops.d, ops.inv_kappa, rates, rates_aux)
        return rates_aux

    def _pml_buffer(self, name, shape):
        buf = self._work.get(name)
        if buf is None or buf.shape != shape:
            buf = self._work[name] = np.empty(shape)
        return buf

    def rhs_pml_direct(self, curl, fields, aux, rates):
        ops = self.pml
        el = self.pml_elements
        Np, Kp = self.n_nodes, self.n_pml
        # J_k M [-CH/eps, CE/mu] recovers the unscaled curl terms
        src = self._pml_buffer("pml_src", (Np, Kp, 6))
        _curl_sources(curl, el, self.inv_eps, self.inv_mu, self._jac_pml,
                      self._pml_zeros, src)
        src = (self.ops.mass @ src.reshape(Np, -1)).reshape(Np, Kp, 6)
        rates_aux = np.empty_like(aux)
        _direct_kernel(fields, aux, src, el, ops.A, ops.T_b, ops.T_c, ops.T_d, ops.T_kappa,
                       rates, rates_aux)
        return rates_aux

    def rhs_pml_waa(self, curl, fields, aux, rates):
        ops = self.pml
        el = self.pml_elements
        Np, Kp = self.n_nodes, self.n_pml
        vq, pq = self.ops.interp_to_quad, self.ops.project_from_quad
        nq = vq.shape[0]
        stacked = self._pml_buffer("pml_stack", (Np, Kp, 12))
        _gather_pml(fields, aux, el, stacked)
        at_q = self._pml_buffer("pml_q12", (nq, Kp, 12))
        np.matmul(vq, stacked.reshape(Np, -1), out=at_q.reshape(nq, -1))
        _waa_stage1(at_q, ops.b, ops.c, ops.inv_kappa, ops.d, at_q)
        proj = self._pml_buffer("pml_proj", (Np, Kp, 12))
        np.matmul(pq, at_q.reshape(nq, -1), out=proj.reshape(Np, -1))
        # r = P_q(b V_q f + c V_q P) - CH/eps (E) or + CE/mu (H)
        r = self._pml_buffer("pml_src", (Np, Kp, 6))
        _curl_sources(curl, el, self.inv_eps, self.inv_mu, self._ones_pml, proj[..., :6], r)
        rq = self._pml_buffer("pml_q6", (nq, Kp, 6))
        np.matmul(vq, r.reshape(Np, -1), out=rq.reshape(nq, -1))
        _scale_components(rq, ops.inv_a)
        out = self._pml_buffer("pml_out", (Np, Kp, 6))
        np.matmul(pq, rq.reshape(nq, -1), out=out.reshape(Np, -1))
        _scatter_negated(out, el, rates)
        return np.ascontiguousarray(proj[..., 6:])

    def rhs(self, fields, aux, t=0.0, out=None):
        """Time derivatives of (fields, aux) at time *t*.

        *out* optionally receives the field rates to avoid an allocation.
        """
        if aux.shape != (self.n_nodes, self.n_pml, 6):
            raise ContractError(
                f"aux must have shape {(self.n_nodes, self.n_pml, 6)}, got {aux.shape}")
        curl = self._curl_into(np.asarray(fields, dtype=float), t)
        rates = self.rhs_interior(curl, out)
        if self.n_pml == 0:
            return rates, np.zeros_like(aux)
        path = self.config.pml_path
        if path is PmlPath.ELEMENT_CONSTANT:
            rates_aux = self.rhs_pml_element_constant(curl, fields, aux, rates)
        elif path is PmlPath.DIRECT:
            rates_aux = self.rhs_pml_direct(curl, fields, aux, rates)
        else:
            rates_aux = self.rhs_pml_waa(curl, fields, aux, rates)
        return rates, rates_aux

    # }}}

    # {{{ time stepping

    def stable_dt(self, cfl=None) -> float:
        return stable_dt(self.geo, self.ops.order, self.config.cfl if cfl is None else cfl,
                         self.wave_speed)

    def advance(self, state: FieldState, dt: float, _res=None) -> FieldState:
        """One LSRK(5,4) step, in place; returns *state*."""
        if _res is None:
            _res = (np.zeros_like(state.fields), np.zeros_like(state.aux),
                    np.empty_like(state.fields))
        res_f, res_a, rate_buf = _res
        res_f[:] = 0.0
        res_a[:] = 0.0
        t = state.time
        for a, b, c in zip(RK4A, RK4B, RK4C):
            rf, ra = self.rhs(state.fields, state.aux, t + c * dt, out=rate_buf)
            _lsrk_update(state.fields, res_f, rf, a, b, dt)
            if ra.size:
                _lsrk_update(state.aux, res_a, ra, a, b, dt)
        state.time = t + dt
        if self.config.check_finite:
            self._check_finite(state)
        return state

    def _check_finite(self, state):
        bad = ~np.isfinite(state.fields).all(axis=(0, 2))
        if bad.any():
            raise InstabilityError(state.time, int(np.flatnonzero(bad)[0]))
        if state.aux.size:
            bad = ~np.isfinite(state.aux).all(axis=(0, 2))
            if bad.any():
                raise InstabilityError(state.time, int(self.pml_elements[np.flatnonzero(bad)[0]]))

    def run(self, state: FieldState, t_end: float, dt=None, probes=None,
            callback=None) -> FieldState:
        """March until *t_end* with a uniform step no larger than *dt*.

        *probes* is a :class:`ProbeSet`; it records the initial state and
        every step. *callback(state, step)* runs after each step.
        """
        dt_max = self.stable_dt() if dt is None else dt
        span = t_end - state.time
        if span <= 0:
            return state
        n_steps = max(1, int(math.ceil(span / dt_max - 1e-12)))
        dt = span / n_steps
        res = (np.zeros_like(state.fields), np.zeros_like(state.aux),
               np.empty_like(state.fields))
        if probes is not None:
            probes.record(state)
        for step in range(n_steps):
            self.advance(state, dt, res)
            if probes is not None:
                probes.record(state)
            if callback is not None:
                callback(state, step)
        return state

    # }}}

    def compute_energy(self, state: FieldState) -> float:
        """Discrete electromagnetic energy (J) over the non-PML elements."""
        Np, K = self.n_nodes, self.n_elements
        u = state.fields
        mu_ = (self.ops.mass @ u.reshape(Np, -1)).reshape(u.shape)
        e = np.einsum("nkc,nkc->k", u[..., :3], mu_[..., :3]) / self.inv_eps
        h = np.einsum("nkc,nkc->k", u[..., 3:], mu_[..., 3:]) / self.inv_mu
        w = 0.5 * self.geo.jacobian * (e + h)
        return float(w[self._interior_mask].sum())


# {{{ probes

def locate_point(mesh: Mesh, point, tol=1e-12):
    """(element, reference coordinates) of the element containing *point*."""
    point = np.asarray(point, dtype=float)
    v = mesh.element_vertices()
    jac = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0], v[:, 3] - v[:, 0]], axis=-1)
    lam = np.linalg.solve(jac, (point - v[:, 0])[..., None])[..., 0]     # (K, 3)
    bary = np.concatenate([1 - lam.sum(axis=1, keepdims=True), lam], axis=1)
    inside = np.flatnonzero(bary.min(axis=1) >= -tol)
    if inside.size == 0:
        raise ConfigurationError(f"probe point {point.tolist()} lies outside the mesh")
    k = int(inside[0])
    return k, 2.0 * lam[k] - 1.0


@dataclass
class ProbeSet:
    """Point probes recording (t, Ex, Ey, Ez, Hx, Hy, Hz) per call to record()."""
    points: np.ndarray
    elements: np.ndarray
    weights: np.ndarray       # (n_probes, Np) nodal interpolation rows
    rows: list = field(default_factory=list)

    @classmethod
    def build(cls, mesh: Mesh, ops: ReferenceOperators, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        els, wts = [], []
        for pt in points:
            k, ref = locate_point(mesh, pt)
            els.append(k)
            wts.append(ops.interpolation_matrix(ref[None, :])[0])
        return cls(points, np.array(els), np.array(wts))

    def sample(self, state: FieldState):
        vals = np.einsum("pn,npc->pc", self.weights, state.fields[:, self.elements, :])
        return vals

    def record(self, state: FieldState):
        self.rows.append((state.time, self.sample(state)))

    @property
    def times(self):
        return np.array([r[0] for r in self.rows])

    def series(self, probe=0):
        """(n_records, 6) array for one probe."""
        return np.array([r[1][probe] for r in self.rows])

    def write_csv(self, path, probe=0, header_lines=()):
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(["t", "Ex", "Ey", "Ez", "Hx", "Hy", "Hz"])
            for t, vals in self.rows:
                w.writerow([repr(float(t))] + [repr(float(x)) for x in vals[probe]])

# }}}
