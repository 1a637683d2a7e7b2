"""Tests for ground-structure generation and pencil assembly."""

import numpy as np
import pytest

from geneigopt import truss
from geneigopt.errors import InvalidLoadNode, NoFreeDofs
from geneigopt.truss import (
    GroundStructure,
    Material,
    build_model,
    eliminate_overlaps,
    generate_ground_structure,
    grid_node_index,
    uniform_feasible_design,
)


def count_bars_by_enumeration(nodes):
    """Brute-force oracle: all pairs whose open segment avoids other nodes."""
    n = nodes.shape[0]
    kept = 0
    for a in range(n):
        for b in range(a + 1, n):
            p0, p1 = nodes[a], nodes[b]
            blocked = False
            for c in range(n):
                if c in (a, b):
                    continue
                d = p1 - p0
                t = float(np.dot(nodes[c] - p0, d)) / float(d @ d)
                if 0 < t < 1 and np.linalg.norm(nodes[c] - (p0 + t * d)) < 1e-9:
                    blocked = True
                    break
            if not blocked:
                kept += 1
    return kept


def test_grid_sizes():
    assert generate_ground_structure(2, 2, 1.0).n_bars == 6
    assert generate_ground_structure(3, 1, 1.0).n_bars == 2
    gs = generate_ground_structure(3, 3, 1.0)
    assert gs.n_bars == 28
    assert gs.n_bars == count_bars_by_enumeration(gs.nodes)


def test_grid_node_numbering():
    gs = generate_ground_structure(3, 2, 2.0)
    assert np.allclose(gs.nodes[grid_node_index(3, 2, 1)], [4.0, 2.0])
    assert np.allclose(gs.nodes[0], [0.0, 0.0])


def test_overlap_elimination_idempotent():
    gs = generate_ground_structure(4, 3, 1.0)
    again = eliminate_overlaps(gs.nodes, gs.bars, gs.spacing)
    assert np.array_equal(gs.bars, again)


def test_fixed_nodes_and_no_free_dofs():
    gs = generate_ground_structure(2, 2, 1.0, lambda ix, iy: "xy" if ix == 0 else "y")
    # left column fully fixed, right column vertically fixed
    assert len(gs.fixed_dofs) == 6
    assert gs.free_dofs == [2 * grid_node_index(2, 1, 0),
                            2 * grid_node_index(2, 1, 1)]
    with pytest.raises(NoFreeDofs):
        generate_ground_structure(2, 1, 1.0, lambda ix, iy: "xy")


def test_material_validation():
    with pytest.raises(ValueError):
        Material(young_modulus=0.0)
    with pytest.raises(ValueError):
        Material(density=-1.0)


def single_bar_structure():
    nodes = np.array([[0.0, 0.0], [1.0, 0.0]])
    bars = np.array([[0, 1]])
    return GroundStructure(nodes=nodes, bars=bars, fixed_dofs=frozenset(),
                           spacing=1.0)


def test_single_bar_stiffness_rank_one():
    gs = single_bar_structure()
    model = build_model(gs, Material(1.0, 0.0), load_node=1)
    g = np.array([-1.0, 0.0, 1.0, 0.0])
    assert np.allclose(model.k_pencil.coeffs[0], np.outer(g, g))
    assert model.m == 1 and model.n == 4
    assert np.allclose(model.volumes, [1.0])


def test_stiffness_scales_with_modulus_and_length():
    nodes = np.array([[0.0, 0.0], [2.0, 0.0]])
    gs = GroundStructure(nodes=nodes, bars=np.array([[0, 1]]),
                         fixed_dofs=frozenset({0, 1}), spacing=2.0)
    model = build_model(gs, Material(young_modulus=3.0), load_node=1)
    # E/L = 1.5 on the free DOFs of node 1
    assert np.allclose(model.k_pencil.coeffs[0],
                       [[1.5, 0.0], [0.0, 0.0]])
    assert np.allclose(model.volumes, [2.0])


def test_lumped_mass_assembly():
    gs = single_bar_structure()
    model = build_model(gs, Material(1.0, density=2.0), load_node=1,
                        nonstructural_mass=5.0)
    # half the bar mass (rho * L / 2 = 1) on every DOF of both endpoints
    assert np.allclose(model.m_pencil.coeffs[0], np.eye(4))
    # nonstructural mass only on the load node's DOFs
    m0 = np.zeros((4, 4))
    m0[2, 2] = m0[3, 3] = 5.0
    assert np.allclose(model.m_pencil.constant, m0)


def test_volume_sum_2x2():
    gs = generate_ground_structure(2, 2, 1.0)
    a = 0.3
    total = a * float(np.sum([gs.bar_length(j) for j in range(gs.n_bars)]))
    assert abs(total - a * (4.0 + 2.0 * np.sqrt(2.0))) < 1e-12
    model = build_model(gs, Material(), load_node=0)
    assert abs(float(model.volumes @ np.full(gs.n_bars, a))
               - a * (4.0 + 2.0 * np.sqrt(2.0))) < 1e-12


def test_load_matrix_columns():
    gs = generate_ground_structure(2, 2, 1.0,
                                   lambda ix, iy: "xy" if iy == 0 else "")
    load = grid_node_index(2, 1, 1)
    model = build_model(gs, Material(), load, load_scale=2.5, load_dims=2)
    q = model.q_matrix
    assert q.shape == (model.n, 2)
    cols = np.nonzero(q)[0]
    assert len(cols) == 2
    assert np.allclose(q[q != 0], 2.5)


def test_load_on_fixed_node_rejected():
    gs = generate_ground_structure(2, 2, 1.0,
                                   lambda ix, iy: "xy" if iy == 0 else "")
    with pytest.raises(InvalidLoadNode):
        build_model(gs, Material(), load_node=0)


def test_assembled_pencils_are_psd():
    gs = generate_ground_structure(3, 2, 1.0,
                                   lambda ix, iy: "xy" if ix == 0 else "")
    model = build_model(gs, Material(1.0, 1.0), grid_node_index(3, 2, 1),
                        nonstructural_mass=1.0)
    rng = np.random.default_rng(2)
    for _ in range(10):
        x = rng.uniform(0.0, 1.0, model.m)
        assert np.linalg.eigvalsh(model.k_pencil(x))[0] >= -1e-10
        assert np.linalg.eigvalsh(model.m_pencil(x))[0] >= -1e-10


def test_full_design_kernel_inclusion():
    # with all bars present, any zero-stiffness direction carries no mass
    gs = generate_ground_structure(3, 2, 1.0,
                                   lambda ix, iy: "xy" if ix == 0 else "")
    model = build_model(gs, Material(1.0, 1.0), grid_node_index(3, 2, 1))
    x = np.full(model.m, 0.5)
    k = model.k_pencil(x)
    m = model.m_pencil(x)
    w, v = np.linalg.eigh(k)
    null = v[:, w < 1e-10]
    if null.shape[1]:
        assert np.max(np.abs(m @ null)) < 1e-10


def test_uniform_feasible_design():
    gs = single_bar_structure()
    model = build_model(gs, Material(), load_node=1)
    assert np.allclose(uniform_feasible_design(model, 2.0), [2.0])
    gs2 = generate_ground_structure(2, 2, 1.0)
    model2 = build_model(gs2, Material(), load_node=0)
    x = uniform_feasible_design(model2, 0.1)
    assert np.allclose(x, 0.1 / (4.0 + 2.0 * np.sqrt(2.0)))
    assert abs(float(model2.volumes @ x) - 0.1) < 1e-12


def test_mirror_symmetry_of_assembly():
    # a left-right symmetric structure yields a permutation-equivalent model
    gs = generate_ground_structure(3, 1, 1.0)
    model = build_model(gs, Material(1.0, 1.0), load_node=1)
    # bars are (0,1) and (1,2); swapping them mirrors the structure
    k0 = model.k_pencil.coeffs[0]
    k1 = model.k_pencil.coeffs[1]
    # the node relabeling 0 <-> 2 mirrors the structure; the rank-one
    # stiffness is insensitive to the sign flip of the direction vector
    perm = [4, 5, 2, 3, 0, 1]
    p = np.zeros((6, 6))
    for i, j in enumerate(perm):
        p[i, j] = 1.0
    assert np.allclose(p @ k0 @ p.T, k1)
