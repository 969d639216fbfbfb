import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from waapml.constants import EPS0
from waapml.errors import CoefficientError, ConfigurationError, ContractError
from waapml.mesh import Mesh, build_box_mesh, map_to_physical
from waapml.pml import (
    SamplingStrategy, StretchProfile, build_direct_operators,
    build_element_constant_operators, build_waa_operators, eval_profile, pml_element_mask,
    sample_coefficients, tensor_coefficients, vacuum_coefficients, waa_inverse_weighted_mass,
    waa_weighted_mass_inverse, weighted_mass)
from waapml.reference import build_reference_operators, quadrature_of_degree, vandermonde_3d

CM = 1e-2
REF_TET = np.array([[-1, -1, -1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)


@pytest.fixture(scope="module")
def ops3():
    return build_reference_operators(3)


def slab(sigma=2.0, kappa=1.0, order=1.0):
    return StretchProfile.slab("z", -2 * CM, 2 * CM, 1.6 * CM, sigma, kappa, order)


def small_box(style="paved", jitter=0.15):
    planes = ()
    if style == "layered":
        planes = tuple(z * CM for z in (-3.2, -2.8, -2.4, -2.0, 2.0, 2.4, 2.8, 3.2))
    return build_box_mesh((0.8 * CM, 0.8 * CM, 7.2 * CM), 0.4 * CM, style, planes,
                          origin=(0, 0, -3.6 * CM), jitter=jitter)


# {{{ profile

def test_profile_values():
    p = slab(sigma=3.0, kappa=5.0)
    assert eval_profile(p, 2 * CM, "z") == (0.0, 1.0)
    assert eval_profile(p, 0.0, "z") == (0.0, 1.0)
    s, k = eval_profile(p, 3.6 * CM, "z")
    assert np.isclose(s, 3.0) and np.isclose(k, 5.0)
    s, k = eval_profile(p, -3.6 * CM, "z")
    assert np.isclose(s, 3.0)
    s, _ = eval_profile(slab(sigma=3.0, order=2), 2.8 * CM, "z")
    assert np.isclose(s, 0.75)
    # untouched axes
    assert eval_profile(p, 10.0, "x") == (0.0, 1.0)


@given(st.floats(-3.6 * CM, 3.6 * CM), st.floats(-3.6 * CM, 3.6 * CM),
       st.floats(0.5, 3.0))
def test_profile_monotone_in_depth(u1, u2, order):
    p = slab(sigma=4.0, kappa=3.0, order=order)
    if abs(u1) > abs(u2):
        u1, u2 = u2, u1
    s1, k1 = eval_profile(p, u1, "z")
    s2, k2 = eval_profile(p, u2, "z")
    assert s1 <= s2 + 1e-15 and k1 <= k2 + 1e-15
    assert s1 >= 0 and k1 >= 1


@pytest.mark.parametrize("kw", [
    dict(sigma_max=-1.0), dict(sigma_max=1.0, kappa_max=0.5), dict(sigma_max=1.0, order=0),
    dict(sigma_max=1.0, interface={"q": (0, 1)}, thickness={"q": (1, 1)}),
    dict(sigma_max=1.0, interface={"z": (0, 1)}),
    dict(sigma_max=1.0, interface={"z": (0, 1)}, thickness={"z": (0, 1)}),
    dict(sigma_max=1.0, interface={"z": (1, 0)}, thickness={"z": (1, 1)}),
])
def test_profile_rejects(kw):
    with pytest.raises(ConfigurationError):
        StretchProfile(**kw)

# }}}


# {{{ tensor coefficients

def brute_force_tensors(sigma, kappa):
    """Direct evaluation with explicit (u, v, w) index permutations."""
    out = {k: np.zeros(3) for k in "abcdi"}
    for u in range(3):
        v, w = (u + 1) % 3, (u + 2) % 3
        a = kappa[v] * kappa[w] / kappa[u]
        b = (sigma[v] * kappa[w] + sigma[w] * kappa[v] - a * sigma[u]) / (kappa[u] * EPS0)
        c = sigma[v] * sigma[w] / EPS0 ** 2 - b * sigma[u] / EPS0
        out["a"][u], out["b"][u], out["c"][u] = a, b, c
        out["d"][u] = sigma[u] / (kappa[u] * EPS0)
        out["i"][u] = 1 / kappa[u]
    return out


def test_tensors_vacuum():
    t = tensor_coefficients(np.zeros(3), np.ones(3))
    assert np.array_equal(t.a, np.ones(3))
    assert not np.any(t.b) and not np.any(t.c) and not np.any(t.d)
    assert np.array_equal(t.inv_kappa, np.ones(3))


def test_tensors_z_sigma():
    s = 2.5
    t = tensor_coefficients([0, 0, s], [1, 1, 1])
    assert np.allclose(t.a, 1)
    assert np.allclose(t.b, [s / EPS0, s / EPS0, -s / EPS0], rtol=1e-15)
    assert np.allclose(t.c, [0, 0, s ** 2 / EPS0 ** 2], rtol=1e-15)
    assert np.allclose(t.d, [0, 0, s / EPS0], rtol=1e-15)


def test_tensors_x_kappa():
    t = tensor_coefficients([0, 0, 0], [2, 1, 1])
    assert np.allclose(t.a, [0.5, 2, 2])
    assert np.allclose(t.inv_kappa, [0.5, 1, 1])
    assert not np.any(t.b) and not np.any(t.c) and not np.any(t.d)


@given(st.lists(st.floats(0, 20), min_size=3, max_size=3),
       st.lists(st.floats(1, 10), min_size=3, max_size=3))
def test_tensors_match_brute_force(sigma, kappa):
    t = tensor_coefficients(sigma, kappa)
    ref = brute_force_tensors(np.array(sigma), np.array(kappa))
    for got, key in zip(t, "abcdi"):
        scale = np.abs(ref[key]).max() + 1e-300
        assert np.abs(got - ref[key]).max() <= 1e-13 * scale


def test_tensors_shape_mismatch():
    with pytest.raises(ContractError):
        tensor_coefficients(np.zeros((2, 3)), np.ones((3, 3)))

# }}}


# {{{ sampling

def test_interior_elements_are_vacuum(ops3):
    mesh = small_box()
    prof = slab()
    inside = np.flatnonzero(~pml_element_mask(mesh, prof))
    for strategy in (SamplingStrategy.SMOOTHLY_VARYING,
                     SamplingStrategy.ELEMENT_CONSTANT_FARTHEST_NODE):
        c = sample_coefficients(mesh, prof, strategy, "nodes", ops3, elements=inside)
        assert np.array_equal(c.tensors.a, np.ones_like(c.tensors.a))
        assert not np.any(c.tensors.b)


def test_element_constant_samples(ops3):
    mesh = small_box()
    prof = slab()
    mesh = mesh.with_regions(pml_element_mask(mesh, prof))
    c = sample_coefficients(mesh, prof, "ec-farthest-node", "quad", ops3)
    assert c.is_element_constant
    assert np.all(np.ptp(c.sigma, axis=0) == 0)
    # farthest node value equals the max of the profile over the element's nodes
    xyz = map_to_physical(mesh.element_vertices()[c.elements], ops3.nodes)
    s, _ = eval_profile(prof, xyz[..., 2], "z")
    assert np.allclose(c.sigma[0, :, 2], s.max(axis=0), rtol=1e-14)


def test_layered_samples(ops3):
    mesh = small_box("layered")
    prof = slab(sigma=4.0)
    mesh = mesh.with_regions(pml_element_mask(mesh, prof))
    c = sample_coefficients(mesh, prof, "ec-layered-outermost", "nodes", ops3)
    assert c.is_element_constant
    assert np.allclose(np.unique(np.round(c.sigma[0, :, 2], 12)), [1.0, 2.0, 3.0, 4.0])


def test_layered_requires_layered_mesh(ops3):
    mesh = small_box()
    mesh = mesh.with_regions(pml_element_mask(mesh, slab()))
    with pytest.raises(ConfigurationError):
        sample_coefficients(mesh, slab(), "ec-layered-outermost", "nodes", ops3)


def test_smooth_samples_at_quad_points(ops3):
    mesh = small_box()
    prof = slab()
    mesh = mesh.with_regions(pml_element_mask(mesh, prof))
    c = sample_coefficients(mesh, prof, "smoothly-varying", "quad", ops3)
    xyz = map_to_physical(mesh.element_vertices()[c.elements], ops3.quad.points)
    s, _ = eval_profile(prof, xyz[..., 2], "z")
    assert np.abs(c.sigma[..., 2] - s).max() <= 1e-14 * prof.sigma_max
    assert not c.is_element_constant


def test_unknown_locations(ops3):
    mesh = small_box()
    with pytest.raises(ConfigurationError):
        sample_coefficients(mesh, slab(), "smoothly-varying", "edges", ops3, elements=[0])

# }}}


# {{{ operators

def single_element(scale=1.0):
    return Mesh(vertices=REF_TET * scale, elements=np.array([[0, 1, 2, 3]]))


def constant_coeffs(ops, a_sigma, locations):
    ns = ops.n_nodes if locations == "nodes" else ops.n_quad
    sigma = np.broadcast_to(np.asarray(a_sigma, dtype=float), (ns, 1, 3)).copy()
    kappa = np.broadcast_to(np.array([1.5, 1.0, 2.0]), (ns, 1, 3)).copy()
    c = vacuum_coefficients([0], ns, locations)
    return type(c)(c.elements, SamplingStrategy.ELEMENT_CONSTANT_FARTHEST_NODE, locations,
                   sigma, kappa, tensor_coefficients(sigma, kappa))


def test_vacuum_direct_operators(ops3):
    jac = np.array([0.7])
    d = build_direct_operators(vacuum_coefficients([0], ops3.n_nodes), ops3, jac)
    minv = ops3.mass_inv / 0.7
    assert np.allclose(d.A[0, 1], minv, rtol=1e-12, atol=1e-12 * np.abs(minv).max())
    assert np.abs(d.T_b).max() == 0 and np.abs(d.T_c).max() == 0 and np.abs(d.T_d).max() == 0
    assert np.allclose(d.T_kappa[0, 2], np.eye(ops3.n_nodes), atol=1e-12)


def test_direct_constant_closed_forms(ops3):
    jac = np.array([2.0])
    c = constant_coeffs(ops3, [1.0, 0.0, 3.0], "nodes")
    d = build_direct_operators(c, ops3, jac)
    t = c.tensors
    eye = np.eye(ops3.n_nodes)
    for u in range(3):
        a, b, cc, dd, ik = (x[0, 0, u] for x in t)
        assert np.allclose(d.A[0, u], ops3.mass_inv / (a * 2.0), rtol=1e-12, atol=1e-12)
        assert np.abs(d.T_b[0, u] - b / a * eye).max() <= 1e-12 * max(1, abs(b / a))
        assert np.abs(d.T_c[0, u] - cc / a * eye).max() <= 1e-12 * max(1, abs(cc / a))
        assert np.abs(d.T_d[0, u] - dd * eye).max() <= 1e-12 * max(1, abs(dd))
        assert np.abs(d.T_kappa[0, u] - ik * eye).max() <= 1e-12


def test_weighted_mass_matches_refined_oracle():
    for p in (1, 3, 5):
        ops = build_reference_operators(p)
        a_nodes = 1 + ops.nodes[:, 0] / 4
        m = weighted_mass(ops, np.repeat(a_nodes[:, None, None], 3, axis=2), np.array([1.0]))[0, 0]
        rule = quadrature_of_degree(min(4 * p, 15))
        v = vandermonde_3d(p, rule.points) @ np.linalg.inv(ops.vandermonde)
        a_q = 1 + rule.points[:, 0] / 4
        oracle = v.T @ ((rule.weights * a_q)[:, None] * v)
        assert np.linalg.norm(m - oracle) / np.linalg.norm(oracle) < 1e-10


def test_direct_rejects_nonpositive_a(ops3):
    c = constant_coeffs(ops3, [0.0, 0.0, 0.0], "nodes")
    bad_a = c.tensors._replace(a=-np.ones_like(c.tensors.a))
    c = type(c)(c.elements, c.strategy, c.locations, c.sigma, c.kappa, bad_a)
    with pytest.raises(CoefficientError):
        build_direct_operators(c, ops3, np.array([1.0]))


def test_waa_constant_closed_forms(ops3):
    rng = np.random.default_rng(2)
    c = constant_coeffs(ops3, [1.0, 0.5, 3.0], "quad")
    w = build_waa_operators(c, ops3, np.array([1.3]))
    t = c.tensors
    v = rng.standard_normal((ops3.n_nodes, 1, 3))
    a, b, cc, dd, ik = (x[0, 0] for x in t)
    exact_inv = np.einsum("ij,jku->iku", ops3.mass_inv, v) / (a * 1.3)
    assert np.allclose(w.mass_inverse(v), exact_inv, rtol=1e-12, atol=1e-12)
    for got, want in ((w.fused_b(v), b / a * v), (w.fused_c(v), cc / a * v),
                      (w.fused_d(v), dd * v), (w.fused_inv_kappa(v), ik * v)):
        assert np.abs(got - want).max() <= 1e-12 * np.abs(want).max()


def test_waa_rejects(ops3):
    c = constant_coeffs(ops3, [0.0, 0.0, 0.0], "nodes")
    with pytest.raises(ContractError):
        build_waa_operators(c, ops3, np.array([1.0]))
    c = constant_coeffs(ops3, [0.0, 0.0, 0.0], "quad")
    bad = type(c)(c.elements, c.strategy, c.locations, c.sigma, c.kappa,
                  c.tensors._replace(a=np.zeros_like(c.tensors.a)))
    with pytest.raises(CoefficientError):
        build_waa_operators(bad, ops3, np.array([1.0]))
    w = build_waa_operators(c, ops3, np.array([1.0]))
    with pytest.raises(ContractError):
        w.fused_b(np.ones((ops3.n_nodes + 1, 1, 3)))


def test_waa_storage_counts(ops3):
    c = constant_coeffs(ops3, [0.0, 0.0, 1.0], "quad")
    w = build_waa_operators(c, ops3, np.array([1.0]))
    assert w.float_count == 15 * 23
    assert w.shared_float_count == 2 * 20 * 23
    d = build_direct_operators(constant_coeffs(ops3, [0.0, 0.0, 1.0], "nodes"), ops3,
                               np.array([1.0]))
    assert d.float_count == 15 * 20 ** 2
    e = build_element_constant_operators(c)
    assert e.float_count == 15


def test_element_constant_requires_constant(ops3):
    mesh = small_box()
    prof = slab()
    mesh = mesh.with_regions(pml_element_mask(mesh, prof))
    c = sample_coefficients(mesh, prof, "smoothly-varying", "nodes", ops3)
    with pytest.raises(ConfigurationError):
        build_element_constant_operators(c)


def test_inverse_weighted_mass_symmetric(ops3):
    a_q = 1 + ops3.quad.points[:, 0] / 4
    m = waa_inverse_weighted_mass(ops3, a_q, 1.0)
    assert np.abs(m - m.T).max() <= 1e-15 * np.abs(m).max()


def test_waa_inverse_smooth_coefficient_is_close():
    # the weight-adjusted inverse is an approximation; on the physical
    # element size used in the experiments it is accurate to well below 1e-3
    ops = build_reference_operators(3)
    mesh = single_element(0.2 * CM)
    x = map_to_physical(mesh.element_vertices(), ops.nodes)[:, 0, 0]
    xq = map_to_physical(mesh.element_vertices(), ops.quad.points)[:, 0, 0]
    jac = np.array([(0.2 * CM) ** 3])
    a_nodes = np.repeat((1 + x / 4)[:, None, None], 3, axis=2)
    exact = np.linalg.inv(weighted_mass(ops, a_nodes, jac)[0, 0])
    waa = waa_weighted_mass_inverse(ops, 1 + xq / 4, jac[0])
    err = np.linalg.norm(waa - exact, 2) / np.linalg.norm(exact, 2)
    assert err < 1e-3

# }}}
