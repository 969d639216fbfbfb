"""Small meshes and solvers shared by the solver and acceptance tests."""

import numpy as np

from waapml.mesh import build_box_mesh, connect_mesh, geometric_factors, build_node_maps
from waapml.pml import (StretchProfile, build_direct_operators, build_element_constant_operators,
                        build_waa_operators, pml_element_mask, sample_coefficients)
from waapml.reference import build_reference_operators
from waapml.solver import PmlPath, Solver, SolverConfig

CM = 1e-2


def column_mesh(nz=6, edge=0.4 * CM, width=0.8 * CM, style="paved", jitter=0.15,
                periodic_z=False, injection=False, seed=0):
    """Short periodic column centred on z=0."""
    half = nz * edge / 2
    mesh = build_box_mesh((width, width, 2 * half), edge, style, origin=(0, 0, -half),
                          fixed_planes=(0.0,) if injection else (), jitter=jitter, seed=seed)
    axes = ("x", "y", "z") if periodic_z else ("x", "y")
    return connect_mesh(mesh, axes, injection_plane=0.0 if injection else None)


def make_solver(mesh, p, path=PmlPath.WAA, profile=None, flux="upwind", strategy=None,
                source=None, cfl=0.5):
    ops = build_reference_operators(p)
    geo = geometric_factors(mesh, ops)
    maps = build_node_maps(mesh, ops, geo)
    pml = None
    if profile is not None:
        mesh = mesh.with_regions(pml_element_mask(mesh, profile))
        if strategy is None:
            strategy = ("ec-farthest-node" if path is PmlPath.ELEMENT_CONSTANT
                        else "smoothly-varying")
        loc = "quad" if path is PmlPath.WAA else "nodes"
        coeffs = sample_coefficients(mesh, profile, strategy, loc, ops)
        jac = geo.jacobian[coeffs.elements]
        if path is PmlPath.WAA:
            pml = build_waa_operators(coeffs, ops, jac)
        elif path is PmlPath.DIRECT:
            pml = build_direct_operators(coeffs, ops, jac)
        else:
            pml = build_element_constant_operators(coeffs)
    return Solver(mesh, ops, SolverConfig(flux=flux, cfl=cfl, pml_path=path), pml=pml,
                  source=source, geo=geo, maps=maps)


def z_slab(mesh, sigma, kappa=1.0, depth=2):
    """PML over the top and bottom *depth* element layers of a column mesh."""
    lo, hi = mesh.bounds[:, 2]
    edge = (hi - lo) / round((hi - lo) / (0.4 * CM))
    L = depth * edge
    return StretchProfile.slab("z", lo + L, hi - L, L, sigma, kappa)


# acceptance verdicts, echoed again in the terminal summary
VERDICTS = {}


def verdict(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    VERDICTS[number] = line
    print(line)
    return ok
