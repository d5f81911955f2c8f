import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import PSI1, PSI2, PSI4, make_context
from symforma.exceptions import (
    ArgumentError,
    AssumptionError,
    CapacityError,
    RepresentationError,
    SymmetryError,
    UnsupportedActionError,
)
from symforma.symmetry import (
    Graph,
    GroupAction,
    PermutationGroup,
    PointRepresentation,
    build_quotient,
    check_automorphism,
    compose,
    compute_orbits,
    cycle_notation,
    enumerate_automorphisms,
    group_closure,
    identity,
    invert,
    orbit_spanning_trees,
    perm_from_cycles,
    perm_from_images,
    reflection_matrix,
    rotation_matrix,
    standard_representation,
)


def labels(seq):
    return tuple(v + 1 for v in seq)


class TestPermutations:
    def test_images_and_cycles_agree(self):
        assert perm_from_images([2, 4, 1, 3]) == PSI1
        assert cycle_notation(PSI1) == "(1 2 4 3)"
        assert cycle_notation(identity(3)) == "id"

    def test_compose_applies_right_factor_first(self):
        a = perm_from_cycles(3, [(1, 2)])
        b = perm_from_cycles(3, [(2, 3)])
        # b sends 1->1, then a sends 1->2
        assert compose(a, b)[0] == 1
        assert compose(PSI1, PSI1) == PSI2

    @pytest.mark.parametrize("bad", [[1, 1, 2], [0, 1, 2], [1, 2, 4]])
    def test_rejects_non_bijections(self, bad):
        with pytest.raises(ArgumentError):
            perm_from_images(bad)

    @given(st.permutations(list(range(6))), st.permutations(list(range(6))))
    def test_inverse_and_associativity(self, a, b):
        a, b = tuple(a), tuple(b)
        assert compose(a, invert(a)) == identity(6)
        assert invert(compose(a, b)) == compose(invert(b), invert(a))


class TestAutomorphisms:
    def test_psi1_is_automorphism(self, c4):
        assert check_automorphism(c4, PSI1)

    def test_identity_is_automorphism(self, c4):
        assert check_automorphism(c4, identity(4))

    def test_transposition_13_is_not(self, c4):
        assert not check_automorphism(c4, perm_from_cycles(4, [(1, 3)]))

    def test_c4_has_eight(self, c4):
        aut = enumerate_automorphisms(c4)
        assert len(aut) == 8
        assert aut.same_elements(group_closure([PSI1, PSI4]))

    def test_small_graphs(self):
        assert len(enumerate_automorphisms(Graph(1, []))) == 1
        k3 = Graph(3, [(0, 1), (1, 2), (0, 2)])
        assert len(enumerate_automorphisms(k3)) == 6

    def test_matches_naive_oracle_on_path(self):
        path = Graph(5, [(0, 1), (1, 2), (2, 3), (3, 4)])
        naive = [p for p in itertools.permutations(range(5)) if check_automorphism(path, p)]
        assert len(enumerate_automorphisms(path)) == len(naive) == 2

    def test_capacity_guard(self):
        with pytest.raises(CapacityError):
            enumerate_automorphisms(Graph(11, []))


class TestClosure:
    def test_cyclic_group_of_psi1(self):
        G = group_closure([PSI1])
        assert set(G.elements) == {identity(4), PSI1, PSI2, compose(PSI2, PSI1)}
        assert G.elements[0] == identity(4)

    def test_empty_generators(self):
        G = group_closure([], n=3)
        assert G.elements == (identity(3),)

    def test_mixed_lengths_rejected(self):
        with pytest.raises(ArgumentError):
            group_closure([PSI1, identity(3)])

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.permutations(list(range(5))), min_size=1, max_size=3))
    def test_closure_is_closed(self, gens):
        G = group_closure([tuple(g) for g in gens])
        elems = set(G.elements)
        assert all(compose(a, b) in elems for a in G.elements for b in G.elements)
        assert (120 % len(G)) == 0


class TestRepresentations:
    def test_rotation_generator_matrix(self):
        G = group_closure([PSI1])
        rep = standard_representation(G, "rotation", [PSI1], order=4, powers=[1])
        k = G.elements.index(PSI1)
        np.testing.assert_array_equal(rep[k], [[0, -1], [1, 0]])

    def test_identity_group(self):
        G = group_closure([], n=2)
        rep = standard_representation(G, "trivial")
        np.testing.assert_array_equal(rep[0], np.eye(2))

    def test_reflection_in_y_axis(self):
        M = reflection_matrix(90.0)
        np.testing.assert_array_equal(M, [[-1, 0], [0, 1]])
        np.testing.assert_array_equal(M @ M, np.eye(2))

    def test_rotation_snaps_exact_values(self):
        assert rotation_matrix(1, 6)[0, 0] == 0.5
        assert rotation_matrix(2, 4)[0, 1] == 0.0

    def test_non_homomorphism_names_pair(self):
        G = group_closure([PSI1])
        mats = np.array([np.eye(2)] * 4)
        mats[G.elements.index(PSI1)] = rotation_matrix(1, 4)
        with pytest.raises(RepresentationError, match="pair"):
            PointRepresentation(G, mats)

    def test_non_orthogonal_rejected(self):
        G = group_closure([PSI4])
        with pytest.raises(RepresentationError, match="orthogonal"):
            PointRepresentation(G, [np.eye(2), np.diag([2.0, 1.0])])

    def test_wrong_order_generator_rejected(self):
        G = group_closure([PSI4])
        with pytest.raises(RepresentationError):
            standard_representation(G, "rotation", [PSI4], order=4, powers=[1])

    def test_dihedral(self, c4):
        rep = standard_representation(group_closure([PSI1, PSI4]), "dihedral", [PSI1, PSI4], order=4)
        assert len(rep) == 8


class TestOrbits:
    def test_c4_mirror_orbits(self, c4):
        orbits = compute_orbits(GroupAction(c4, group_closure([PSI4])))
        assert [labels(o) for o in orbits.vertex_orbits] == [(1, 2), (3, 4)]
        edge_orbits = sorted(tuple(labels(e) for e in o) for o in orbits.edge_orbits)
        assert edge_orbits == [((1, 2),), ((1, 3), (2, 4)), ((3, 4),)]

    def test_trivial_group_singletons(self, c4):
        orbits = compute_orbits(GroupAction(c4, group_closure([], 4)))
        assert all(len(o) == 1 for o in orbits.vertex_orbits)
        assert len(orbits.edge_orbits) == 4

    def test_rotation_single_orbit(self, c4):
        orbits = compute_orbits(GroupAction(c4, group_closure([PSI1])))
        assert len(orbits.vertex_orbits) == 1 and len(orbits.edge_orbits) == 1

    def test_mapper_sends_vertex_to_representative(self, c4):
        G = group_closure([PSI1])
        orbits = compute_orbits(GroupAction(c4, G))
        for u in range(4):
            assert G.elements[orbits.mapper[u]][u] == orbits.rep(u)

    def test_non_automorphism_names_edge(self, c4):
        with pytest.raises(SymmetryError, match=r"edge \{1,2\} maps to \{3,2\}"):
            GroupAction(c4, group_closure([perm_from_cycles(4, [(1, 3)])]))


class TestQuotient:
    def test_c4_rotation_single_loop(self, c4):
        ctx = make_context(c4, [PSI1], "rotation", order=4)
        (e,) = ctx.quotient.edges
        assert e.is_loop and e.tail == 0
        assert ctx.action.group.elements[e.gain] == PSI1

    def test_trivial_group_gives_graph(self, c4):
        ctx = make_context(c4, [], "trivial")
        assert [e.graph_edge for e in ctx.quotient.edges] == list(c4.edges)
        assert all(e.gain == 0 for e in ctx.quotient.edges)

    def test_c4_mirror(self, c4):
        ctx = make_context(c4, [PSI4], "reflection")
        G = ctx.action.group
        assert ctx.quotient.vertices == (0, 2)
        got = {(e.tail + 1, e.head + 1, cycle_notation(G.elements[e.gain])) for e in ctx.quotient.edges}
        # the identity-gain edge joins representatives 1 and 3 (either orientation)
        assert got == {(1, 1, "(1 2)(3 4)"), (1, 3, "id"), (3, 3, "(1 2)(3 4)")}

    def test_c4_halfturn_parallel_edges(self, c4):
        ctx = make_context(c4, [PSI2], "rotation", order=2)
        G = ctx.action.group
        got = sorted((e.tail, e.head, cycle_notation(G.elements[e.gain])) for e in ctx.quotient.edges)
        assert got == [(0, 1, "(1 4)(2 3)"), (0, 1, "id")]

    def test_reversed_edge_inverts_gain(self, c4):
        ctx = make_context(c4, [PSI2], "rotation", order=2)
        G = ctx.action.group
        for k, e in enumerate(ctx.quotient.edges):
            r = ctx.quotient.reversed_edge(k)
            assert (r.tail, r.head) == (e.head, e.tail)
            assert r.gain == G.inverse_index(e.gain)

    def test_non_free_action_rejected(self):
        # mirror of a path 1-2-3 fixes vertex 2
        path = Graph(3, [(0, 1), (1, 2)])
        action = GroupAction(path, group_closure([perm_from_cycles(3, [(1, 3)])]))
        assert not action.free
        with pytest.raises(UnsupportedActionError):
            build_quotient(action, compute_orbits(action))

    def test_gains_reproduce_graph_edges(self, example8):
        ctx = example8.context
        G = ctx.action.group
        for e in ctx.quotient.edges:
            i, x = e.graph_edge
            assert G.elements[e.gain][e.head] == (x if i == e.tail else i)


class TestSpanningTrees:
    def test_single_edge_orbit(self):
        g = Graph(2, [(0, 1)])
        action = GroupAction(g, group_closure([(1, 0)]))
        assert orbit_spanning_trees(action, compute_orbits(action)) == [[(0, 1)]]

    def test_c5_gives_path(self):
        c5 = Graph(5, [(i, (i + 1) % 5) for i in range(5)])
        action = GroupAction(c5, group_closure([(1, 2, 3, 4, 0)]))
        (tree,) = orbit_spanning_trees(action, compute_orbits(action))
        assert len(tree) == 4
        degrees = np.bincount(np.ravel(tree), minlength=5)
        assert sorted(degrees) == [1, 1, 2, 2, 2]

    def test_fig5_orbit_disconnected(self):
        edges = [(1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (1, 6), (1, 5), (2, 4)]
        g = Graph.from_one_based(6, edges)
        action = GroupAction(g, group_closure([perm_from_images([2, 1, 6, 5, 4, 3])]))
        with pytest.raises(AssumptionError, match=r"\{3,6\}"):
            orbit_spanning_trees(action, compute_orbits(action))

    def test_all_induced_edges_option(self, example8):
        trees = orbit_spanning_trees(example8.action, example8.context.orbits, tree_only=False)
        assert [len(t) for t in trees] == [5, 5]


class TestGroupObject:
    def test_tables(self):
        G = group_closure([PSI1, PSI4])
        T = G.composition_table
        inv = G.inverse_table
        for a in range(len(G)):
            assert T[a, inv[a]] == 0
        assert isinstance(G, PermutationGroup)

    def test_element_mapping(self):
        G = group_closure([PSI1])
        for u in range(4):
            for v in range(4):
                assert G.elements[G.element_mapping(u, v)][u] == v
