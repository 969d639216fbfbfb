"""Structured tetrahedral box meshes, face connectivity and affine geometry.

Box meshes are hexahedral lattices split into six tetrahedra per cell
(Kuhn subdivision, mirrored by cell parity so neighboring splits stay
conforming).  Two styles are produced:

``layered``
    lattice z-planes are flat and include every requested layer plane, so
    each layer boundary is a union of element faces.
``paved``
    interior lattice vertices are shifted in z by a deterministic
    pseudo-random amount, so no interior face is aligned with a PML
    interface.  Boundary planes and requested fixed planes stay flat.

Coordinates are SI meters.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from enum import IntEnum

import numpy as np
from scipy.spatial import cKDTree

from .errors import GeometryError, ConfigurationError, MeshFormatError
from .reference import FACE_VERTICES, REFERENCE_VOLUME, ReferenceOperators

AXES = "xyz"
# Faces are considered congruent below this fraction of the domain size.
MATCH_TOL = 1e-9


class FaceTag(IntEnum):
    INTERIOR = 0
    PEC = 1
    PERIODIC_X = 2
    PERIODIC_Y = 3
    PERIODIC_Z = 4
    INJECTION_PLANE = 5


class Region(IntEnum):
    INTERIOR = 0
    PML = 1


PERIODIC_TAGS = {"x": FaceTag.PERIODIC_X, "y": FaceTag.PERIODIC_Y,
                 "z": FaceTag.PERIODIC_Z}


@dataclass(frozen=True)
class Mesh:
    vertices: np.ndarray                 # (Nv, 3)
    elements: np.ndarray                 # (K, 4), positively oriented
    style: str = "custom"
    layer_planes: tuple = ()             # z-planes that are unions of faces
    face_neighbors: np.ndarray | None = None   # (K, 4), -1 on boundary
    neighbor_faces: np.ndarray | None = None   # (K, 4), -1 on boundary
    face_tags: np.ndarray | None = None        # (K, 4) FaceTag values
    face_shifts: np.ndarray | None = None      # (K, 4, 3): neighbor coords + shift = own coords
    region: np.ndarray | None = None           # (K,) Region values
    periodic_axes: tuple = ()

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def bounds(self) -> np.ndarray:
        return np.array([self.vertices.min(axis=0), self.vertices.max(axis=0)])

    @property
    def is_connected(self) -> bool:
        return self.face_neighbors is not None

    def element_vertices(self) -> np.ndarray:
        """(K, 4, 3) vertex coordinates."""
        return self.vertices[self.elements]

    def centroids(self) -> np.ndarray:
        return self.element_vertices().mean(axis=1)

    def with_regions(self, pml_mask) -> "Mesh":
        region = np.where(np.asarray(pml_mask, dtype=bool), Region.PML, Region.INTERIOR)
        return replace(self, region=region.astype(np.int8))

    @property
    def pml_elements(self) -> np.ndarray:
        if self.region is None:
            return np.zeros(0, dtype=np.int64)
        return np.flatnonzero(self.region == Region.PML)


def _signed_volumes(vertices, elements):
    v = vertices[elements]
    d = v[:, 1:] - v[:, :1]
    return np.linalg.det(d) / 6.0


# {{{ box generation

def _axis_coordinates(lo, hi, planes, target_edge):
    breaks = np.unique(np.concatenate([[lo, hi], np.asarray(planes, dtype=float)]))
    coords = [breaks[:1]]
    fixed = [0]
    for a, b in zip(breaks[:-1], breaks[1:]):
        n = max(1, int(np.ceil((b - a) / target_edge - 1e-9)))
        coords.append(np.linspace(a, b, n + 1)[1:])
        fixed.append(fixed[-1] + n)
    return np.concatenate(coords), np.array(fixed)


_KUHN_PATHS = list(itertools.permutations(range(3)))


def _kuhn_tets():
    """Local corner triples (a, b, c) of the six Kuhn tetrahedra."""
    tets = []
    for perm in _KUHN_PATHS:
        corner = [0, 0, 0]
        path = [tuple(corner)]
        for ax in perm:
            corner[ax] = 1
            path.append(tuple(corner))
        tets.append(path)
    return tets


def build_box_mesh(extent, target_edge, style="paved", layer_planes=(), *,
                   origin=(0.0, 0.0, 0.0), fixed_planes=(), jitter=0.15,
                   seed=0) -> Mesh:
    """Tetrahedral mesh of the box ``origin + [0, extent]``.

    *layer_planes* (layered style only) and *fixed_planes* (any style) are
    z-coordinates that become exact unions of element faces.  *jitter* is the
    paved-style z-perturbation as a fraction of the local lattice spacing.
    """
    extent = np.asarray(extent, dtype=float)
    origin = np.asarray(origin, dtype=float)
    if extent.shape != (3,) or np.any(extent <= 0):
        raise ConfigurationError(f"box extents must be three positive lengths, got {extent}")
    if target_edge <= 0:
        raise ConfigurationError("target edge length must be positive")
    if target_edge > extent.min() * (1 + 1e-12):
        raise ConfigurationError(
            f"target edge {target_edge} exceeds box extent {extent.min()}")
    if style not in ("paved", "layered"):
        raise ConfigurationError(f"unknown mesh style {style!r}")
    layer_planes = tuple(float(z) for z in layer_planes)
    if layer_planes and style != "layered":
        raise ConfigurationError("layer planes only apply to layered meshes")
    zlo, zhi = origin[2], origin[2] + extent[2]
    for planes, what in ((layer_planes, "layer"), (tuple(fixed_planes), "fixed")):
        if any(b <= a for a, b in zip(planes[:-1], planes[1:])):
            raise ConfigurationError(f"{what} planes must be strictly increasing")
        if any(not (zlo < z < zhi) for z in planes):
            raise ConfigurationError(f"{what} planes must lie inside ({zlo}, {zhi})")

    xs, _ = _axis_coordinates(origin[0], origin[0] + extent[0], (), target_edge)
    ys, _ = _axis_coordinates(origin[1], origin[1] + extent[1], (), target_edge)
    zs, zfixed = _axis_coordinates(
        zlo, zhi, tuple(layer_planes) + tuple(fixed_planes), target_edge)
    nx, ny, nz = len(xs) - 1, len(ys) - 1, len(zs) - 1

    gx, gy, gz = np.meshgrid(xs, ys, zs, indexing="ij")
    verts = np.stack([gx, gy, gz], axis=-1)

    if style == "paved" and jitter > 0:
        rng = np.random.default_rng(seed)
        # indexed by (i mod nx, j mod ny, k) so periodic images coincide
        noise = rng.uniform(-1.0, 1.0, size=(nx, ny, nz + 1))
        spacing = np.minimum(np.diff(zs, prepend=np.inf), np.diff(zs, append=np.inf))
        movable = np.ones(nz + 1, dtype=bool)
        movable[zfixed] = False
        ii = np.arange(nx + 1) % nx
        jj = np.arange(ny + 1) % ny
        shift = jitter * noise[ii[:, None, None], jj[None, :, None], np.arange(nz + 1)]
        verts[..., 2] += shift * np.where(movable, spacing, 0.0)[None, None, :]

    def vid(i, j, k):
        return (i * (ny + 1) + j) * (nz + 1) + k

    tets = []
    local = _kuhn_tets()
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                flips = (i % 2, j % 2, k % 2)
                for path in local:
                    tets.append([vid(i + (a ^ flips[0]), j + (b ^ flips[1]),
                                     k + (c ^ flips[2])) for a, b, c in path])
    elements = np.array(tets, dtype=np.int64)
    vertices = verts.reshape(-1, 3)

    # orient with the undistorted lattice, then validate the distorted one
    grid = np.stack(np.meshgrid(xs, ys, zs, indexing="ij"), axis=-1).reshape(-1, 3)
    neg = _signed_volumes(grid, elements) < 0
    elements[neg] = elements[neg][:, [0, 2, 1, 3]]
    vol = _signed_volumes(vertices, elements)
    if np.any(vol <= 0):
        bad = int(np.flatnonzero(vol <= 0)[0])
        raise GeometryError(f"jitter {jitter} inverts element {bad}; reduce it")

    return Mesh(vertices=vertices, elements=elements, style=style,
                layer_planes=layer_planes)

# }}}


# {{{ connectivity

def _face_vertex_array(elements):
    return elements[:, FACE_VERTICES]          # (K, 4, 3)


def connect_mesh(mesh: Mesh, periodic_axes=("x", "y"), *, injection_plane=None) -> Mesh:
    """Pair faces, identify periodic faces across the box, tag boundaries.

    Faces on the z-plane *injection_plane* are tagged ``INJECTION_PLANE``;
    non-periodic exterior faces are tagged ``PEC``.
    """
    periodic_axes = tuple(periodic_axes)
    for ax in periodic_axes:
        if ax not in PERIODIC_TAGS:
            raise ConfigurationError(f"unknown periodic axis {ax!r}")

    K = mesh.n_elements
    fv = _face_vertex_array(mesh.elements).reshape(-1, 3)
    keys = np.sort(fv, axis=1)
    order = np.lexsort(keys.T[::-1])
    sk = keys[order]
    same = np.all(sk[1:] == sk[:-1], axis=1)
    if np.any(same[1:] & same[:-1]):
        raise GeometryError("a face is shared by more than two elements")

    nbr = -np.ones(4 * K, dtype=np.int64)
    pairs = np.flatnonzero(same)
    a, b = order[pairs], order[pairs + 1]
    nbr[a], nbr[b] = b, a

    tags = np.full(4 * K, FaceTag.INTERIOR, dtype=np.int8)
    shifts = np.zeros((4 * K, 3))
    bnd = np.flatnonzero(nbr < 0)

    lo, hi = mesh.bounds
    size = float(np.max(hi - lo))
    tol = MATCH_TOL * size
    fcoords = mesh.vertices[fv]                 # (4K, 3, 3)
    centroids = fcoords.mean(axis=1)

    remaining = set(bnd.tolist())
    for ax in periodic_axes:
        d = AXES.index(ax)
        on_lo = [f for f in remaining if np.all(np.abs(fcoords[f, :, d] - lo[d]) < tol)]
        on_hi = [f for f in remaining if np.all(np.abs(fcoords[f, :, d] - hi[d]) < tol)]
        period = np.zeros(3)
        period[d] = hi[d] - lo[d]
        if len(on_lo) != len(on_hi):
            raise GeometryError(
                f"periodic axis {ax}: {len(on_lo)} faces on the low side, "
                f"{len(on_hi)} on the high side")
        if not on_lo:
            continue
        tree = cKDTree(centroids[on_hi])
        dist, idx = tree.query(centroids[on_lo] + period)
        for f, dd, j in zip(on_lo, dist, idx):
            if dd > tol:
                raise GeometryError(
                    f"unmatched periodic face with centroid {centroids[f].tolist()}")
            g = on_hi[j]
            if nbr[g] >= 0:
                raise GeometryError(
                    f"periodic face with centroid {centroids[g].tolist()} matched twice")
            nbr[f], nbr[g] = g, f
            tags[f] = tags[g] = PERIODIC_TAGS[ax]
            shifts[f] = -period      # neighbor (high side) shifted onto own
            shifts[g] = period
            remaining.discard(f)
            remaining.discard(g)

    _check_hanging_nodes(fcoords, fv, sorted(remaining), tol)
    for f in remaining:
        tags[f] = FaceTag.PEC

    if injection_plane is not None:
        zc = fcoords[:, :, 2]
        on_plane = np.all(np.abs(zc - injection_plane) < tol, axis=1)
        interior = on_plane & (tags == FaceTag.INTERIOR)
        if not np.any(interior):
            raise ConfigurationError(
                f"injection plane z={injection_plane} is not a union of interior faces")
        tags[interior] = FaceTag.INJECTION_PLANE
        # every element crossing the plane would leave it partially covered
        zv = mesh.element_vertices()[:, :, 2]
        straddle = (zv.min(axis=1) < injection_plane - tol) & (zv.max(axis=1) > injection_plane + tol)
        if np.any(straddle):
            raise ConfigurationError(
                f"injection plane z={injection_plane} cuts through element "
                f"{int(np.flatnonzero(straddle)[0])}")

    nb_elem = np.where(nbr >= 0, nbr // 4, -1).reshape(K, 4)
    nb_face = np.where(nbr >= 0, nbr % 4, -1).reshape(K, 4)
    return replace(mesh, face_neighbors=nb_elem, neighbor_faces=nb_face,
                   face_tags=tags.reshape(K, 4), face_shifts=shifts.reshape(K, 4, 3),
                   periodic_axes=periodic_axes)


def _check_hanging_nodes(fcoords, fv, unmatched, tol):
    """A vertex inside an unmatched face (or on one of its edges) means two
    elements meet non-conformingly there."""
    if not unmatched:
        return
    vfaces = {}
    for f in unmatched:
        for v, xyz in zip(fv[f], fcoords[f]):
            vfaces.setdefault(int(v), xyz)
    ids = np.array(sorted(vfaces))
    pts = np.array([vfaces[i] for i in ids])
    tree = cKDTree(pts)
    for f in unmatched:
        tri = fcoords[f]
        c = tri.mean(axis=0)
        rad = np.linalg.norm(tri - c, axis=1).max()
        e1, e2 = tri[1] - tri[0], tri[2] - tri[0]
        n = np.cross(e1, e2)
        area2 = np.linalg.norm(n)
        n = n / area2
        for j in tree.query_ball_point(c, rad + tol):
            if ids[j] in fv[f]:
                continue
            q = pts[j] - tri[0]
            if abs(q @ n) > tol:
                continue
            # barycentric coordinates in the face plane
            l1 = np.cross(q, e2) @ n / area2
            l2 = np.cross(e1, q) @ n / area2
            if l1 >= -1e-12 and l2 >= -1e-12 and l1 + l2 <= 1 + 1e-12:
                raise GeometryError(
                    f"hanging node {int(ids[j])} at {pts[j].tolist()} lies on "
                    f"face with centroid {c.tolist()}")


def check_connectivity(mesh: Mesh) -> None:
    """Raise :class:`GeometryError` unless face pairing is an involution."""
    e2e, e2f = mesh.face_neighbors, mesh.neighbor_faces
    for k, f in zip(*np.nonzero(e2e >= 0)):
        kk, ff = e2e[k, f], e2f[k, f]
        if e2e[kk, ff] != k or e2f[kk, ff] != f:
            raise GeometryError(f"face pairing not symmetric at element {k}, face {f}")
    untagged = (e2e < 0) & (mesh.face_tags == FaceTag.INTERIOR)
    if np.any(untagged):
        k, f = np.argwhere(untagged)[0]
        raise GeometryError(f"element {k} face {f} has no neighbor and no boundary tag")

# }}}


# {{{ geometric factors

@dataclass(frozen=True)
class GeometricFactors:
    jacobian: np.ndarray      # (K,) volume ratio to the reference element
    inv_map: np.ndarray       # (K, 3, 3): row a = grad of reference coordinate a
    face_normals: np.ndarray  # (K, 4, 3) outward unit normals
    face_scale: np.ndarray    # (K, 4) surface Jacobian over J
    node_coords: np.ndarray   # (Np, K, 3) physical node positions
    inscribed_radius: np.ndarray  # (K,)

    @property
    def volumes(self) -> np.ndarray:
        return self.jacobian * REFERENCE_VOLUME


def map_to_physical(element_vertices, ref_points):
    """Affine map of reference points (n, 3) into elements (K, 4, 3) -> (n, K, 3)."""
    r, s, t = np.asarray(ref_points, dtype=float).T
    lam = 0.5 * np.stack([-(1 + r + s + t), 1 + r, 1 + s, 1 + t], axis=-1)
    return np.einsum("nv,kvd->nkd", lam, element_vertices)


def geometric_factors(mesh: Mesh, ops: ReferenceOperators) -> GeometricFactors:
    v = mesh.element_vertices()
    # columns: d x / d(r, s, t)
    jac_mat = 0.5 * np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0], v[:, 3] - v[:, 0]], axis=-1)
    J = np.linalg.det(jac_mat)
    if np.any(J <= 0):
        bad = int(np.flatnonzero(J <= 0)[0])
        raise GeometryError(f"inverted or degenerate element {bad} (J={J[bad]:.3e})")
    inv_map = np.linalg.inv(jac_mat)            # rows: grad r, grad s, grad t

    gr, gs, gt = inv_map[:, 0], inv_map[:, 1], inv_map[:, 2]
    raw = np.stack([-gt, -gs, gr + gs + gt, -gr], axis=1)      # (K, 4, 3)
    norm = np.linalg.norm(raw, axis=-1)
    normals = raw / norm[..., None]
    sJ = norm * J[:, None]
    face_scale = sJ / J[:, None]

    node_coords = map_to_physical(v, ops.nodes)

    # face area = 2 sJ (reference faces have area 2 in their own coordinates)
    area = 2.0 * sJ
    inscribed = 3.0 * (J * REFERENCE_VOLUME) / area.sum(axis=1)

    return GeometricFactors(jacobian=J, inv_map=inv_map, face_normals=normals,
                            face_scale=face_scale, node_coords=node_coords,
                            inscribed_radius=inscribed)


@dataclass(frozen=True)
class NodeMaps:
    """Trace connectivity at face nodes; flat node index is ``n * K + k``."""
    interior: np.ndarray      # (4*Nfp, K) flat index of the own trace node
    exterior: np.ndarray      # (4*Nfp, K) flat index of the matching neighbor node
    face_tag: np.ndarray      # (4*Nfp, K) tag of the face each trace node sits on
    max_mismatch: float       # largest node distance across a shared face


def build_node_maps(mesh: Mesh, ops: ReferenceOperators, geo: GeometricFactors) -> NodeMaps:
    if not mesh.is_connected:
        raise GeometryError("mesh has no face connectivity; call connect_mesh first")
    K = mesh.n_elements
    fm = ops.face_mask
    nfp = ops.n_face_nodes
    x = geo.node_coords

    interior = np.empty((4, nfp, K), dtype=np.int64)
    exterior = np.empty((4, nfp, K), dtype=np.int64)
    ftag = np.empty((4, nfp, K), dtype=np.int8)
    worst = 0.0
    kk = np.arange(K)
    for f in range(4):
        interior[f] = fm[f][:, None] * K + kk
        ftag[f] = mesh.face_tags[:, f][None, :]
        exterior[f] = interior[f]

    for f in range(4):
        own = x[fm[f]]                       # (nfp, K, 3)
        nb = mesh.face_neighbors[:, f]
        nf = mesh.neighbor_faces[:, f]
        for k in np.flatnonzero(nb >= 0):
            kn, fn = nb[k], nf[k]
            other = x[fm[fn], kn] + mesh.face_shifts[k, f]
            d = np.linalg.norm(own[:, k, None, :] - other[None, :, :], axis=-1)
            match = d.argmin(axis=1)
            worst = max(worst, float(d[np.arange(nfp), match].max()))
            exterior[f, :, k] = fm[fn][match] * K + kn

    edge = float(np.min(geo.inscribed_radius))
    if worst > 1e-9 * edge:
        raise GeometryError(f"face nodes do not coincide (mismatch {worst:.3e} m)")
    return NodeMaps(interior=interior.reshape(4 * nfp, K),
                    exterior=exterior.reshape(4 * nfp, K),
                    face_tag=ftag.reshape(4 * nfp, K), max_mismatch=worst)

# }}}


# {{{ text format

MAGIC = "waapml-mesh 1"


def write_mesh_file(mesh: Mesh, path) -> None:
    """Write *mesh* in the plain text format read by :func:`read_mesh_file`.

    Boundary faces are listed with their tag so periodicity and PEC
    walls survive the round trip.
    """
    lines = [MAGIC,
             f"style {mesh.style}",
             "layer_planes " + " ".join(repr(z) for z in mesh.layer_planes),
             f"vertices {len(mesh.vertices)}"]
    lines += [f"{x!r} {y!r} {z!r}" for x, y, z in mesh.vertices.tolist()]
    region = mesh.region if mesh.region is not None else np.zeros(mesh.n_elements, dtype=int)
    lines.append(f"elements {mesh.n_elements}")
    lines += [f"{a} {b} {c} {d} {int(r)}" for (a, b, c, d), r in zip(mesh.elements.tolist(), region)]
    if mesh.is_connected:
        bnd = np.argwhere(mesh.face_tags != FaceTag.INTERIOR)
    else:
        bnd = np.zeros((0, 2), dtype=int)
    lines.append(f"boundary_faces {len(bnd)}")
    lines += [f"{k} {f} {FaceTag(mesh.face_tags[k, f]).name}" for k, f in bnd]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_mesh_file(path) -> Mesh:
    """Parse and validate a mesh file; see ``docs/mesh_format.md``."""
    with open(path) as fh:
        raw = fh.read().splitlines()
    lines = [(i + 1, ln.split("#", 1)[0].strip()) for i, ln in enumerate(raw)]
    lines = [(n, ln) for n, ln in lines if ln]
    it = iter(lines)

    def take(expected=None):
        try:
            n, ln = next(it)
        except StopIteration:
            raise MeshFormatError("unexpected end of file", len(raw)) from None
        if expected is not None and not ln.startswith(expected):
            raise MeshFormatError(f"expected '{expected}', got '{ln}'", n)
        return n, ln

    n, ln = take()
    if ln != MAGIC:
        raise MeshFormatError(f"missing header '{MAGIC}'", n)
    _, ln = take("style")
    style = ln.split(maxsplit=1)[1] if len(ln.split()) > 1 else "custom"
    n, ln = take("layer_planes")
    try:
        planes = tuple(float(z) for z in ln.split()[1:])
    except ValueError as exc:
        raise MeshFormatError(str(exc), n) from None

    def count(keyword):
        n, ln = take(keyword)
        parts = ln.split()
        if len(parts) != 2 or not parts[1].isdigit():
            raise MeshFormatError(f"malformed '{keyword}' count", n)
        return int(parts[1])

    def rows(nrows, ncols, kind, conv):
        out = []
        for _ in range(nrows):
            n, ln = take()
            parts = ln.split()
            if len(parts) != ncols:
                raise MeshFormatError(f"expected {ncols} fields for {kind}, got {len(parts)}", n)
            try:
                out.append([c(p) for c, p in zip(conv, parts)])
            except (ValueError, KeyError) as exc:
                raise MeshFormatError(f"bad {kind} entry: {exc}", n) from None
        return out

    nv = count("vertices")
    vertices = np.array(rows(nv, 3, "vertex", (float,) * 3), dtype=float).reshape(-1, 3)
    ne = count("elements")
    elem_rows = rows(ne, 5, "element", (int,) * 5)
    elements = np.array([r[:4] for r in elem_rows], dtype=np.int64).reshape(-1, 4)
    region = np.array([r[4] for r in elem_rows], dtype=np.int8)
    nb = count("boundary_faces")
    bnd = rows(nb, 3, "boundary face", (int, int, lambda s: FaceTag[s]))

    if elements.size and (elements.min() < 0 or elements.max() >= nv):
        raise GeometryError("element references a vertex index out of range")
    vol = _signed_volumes(vertices, elements)
    if np.any(vol <= 0):
        bad = int(np.flatnonzero(vol <= 0)[0])
        raise GeometryError(f"element {bad} is inverted or degenerate (volume {vol[bad]:.3e})")

    mesh = Mesh(vertices=vertices, elements=elements, style=style,
                layer_planes=planes, region=region)

    listed = {(k, f): tag for k, f, tag in bnd}
    periodic = tuple(ax for ax, tag in PERIODIC_TAGS.items() if tag in listed.values())
    plane = None
    inj = [(k, f) for (k, f), tag in listed.items() if tag == FaceTag.INJECTION_PLANE]
    if inj:
        k, f = inj[0]
        plane = float(vertices[elements[k, list(FACE_VERTICES[f])], 2].mean())
    mesh = connect_mesh(mesh, periodic, injection_plane=plane)

    expected = {(int(k), int(f)): FaceTag(mesh.face_tags[k, f])
                for k, f in np.argwhere(mesh.face_tags != FaceTag.INTERIOR)}
    for key, tag in expected.items():
        if key not in listed:
            raise GeometryError(
                f"element {key[0]} face {key[1]} is unmatched but not listed as a "
                f"boundary face (hanging node or gap in the mesh)")
        if tag != listed[key]:
            raise GeometryError(
                f"element {key[0]} face {key[1]} tagged {listed[key].name} in file "
                f"but geometry gives {tag.name}")
    for key in listed:
        if key not in expected:
            raise GeometryError(
                f"element {key[0]} face {key[1]} listed as boundary but has a neighbor")
    check_connectivity(mesh)
    return mesh

# }}}
