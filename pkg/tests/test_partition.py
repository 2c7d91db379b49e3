"""Product decomposition: identifiers, counting, enumeration, sampling."""

import itertools
import math

import numpy as np
import pytest

from hwvqe.ansatz import DickeSpec, build_for
from hwvqe.partition import (
    PartitionTree,
    SubAnsatzId,
    bitstrings_of_weight,
    child_count,
    child_weight,
    decompose,
    entanglement_entropy,
    enumerate_subansatz,
    enumerate_subansatz_arrays,
    equilibrium_partition,
    format_id,
    loose_bound_closed,
    loose_bound_product,
    parse_id,
    run_subansatz,
    subansatz_basis_count,
)
from hwvqe.qsim import probability_of, simulate


def test_decompose_d42_manual_oracle():
    cells = decompose(DickeSpec(4, 2), 2)
    # upper weight i runs 0..2: (D^2_0 x D^2_2), (D^2_1 x D^2_1), (D^2_2 x D^2_0)
    assert cells == [
        (0, DickeSpec(2, 0), DickeSpec(2, 2)),
        (1, DickeSpec(2, 1), DickeSpec(2, 1)),
        (2, DickeSpec(2, 2), DickeSpec(2, 0)),
    ]


def test_decompose_respects_fragment_capacity():
    # j=2 of (6,3): i >= k-(n-j) = -1 -> 0, i <= min(j,k) = 2
    cells = decompose(DickeSpec(6, 3), 2)
    assert [i for i, _, _ in cells] == [0, 1, 2]
    assert all(
        up.n == 2 and lo.n == 4 and up.k == i and up.k + lo.k == 3
        for i, up, lo in cells
    )
    # oversubscribed lower half shifts the window: j=2 of (6,5) -> i in 1..2
    assert [i for i, _, _ in decompose(DickeSpec(6, 5), 2)] == [1, 2]


def test_child_count_and_weight_bounds():
    assert child_count(DickeSpec(4, 2)) == 3
    assert child_count(DickeSpec(40, 20)) == 21
    assert child_count(DickeSpec(8, 1)) == 2  # upper weight 0 or 1
    spec = DickeSpec(12, 5)  # t in max(0, 5-6)..min(6, 5) -> 0..5
    assert child_count(spec) == 6
    assert [child_weight(spec, c) for c in range(6)] == [0, 1, 2, 3, 4, 5]
    with pytest.raises(ValueError):
        child_weight(spec, 6)
    with pytest.raises(ValueError):
        child_count(DickeSpec(5, 2))


def test_subansatz_cells_disjointly_cover_weight_set():
    for n in (4, 6, 8, 10, 12, 14, 16):
        spec = DickeSpec(n, n // 2)
        seen = set()
        for t in range(child_count(spec)):
            cell = set(enumerate_subansatz(SubAnsatzId(spec, ((t,),))))
            assert not (cell & seen)
            seen |= cell
        assert seen == set(int(b) for b in bitstrings_of_weight(n, n // 2))


def test_complete_partition_yields_singletons():
    for n in (4, 8):
        spec = DickeSpec(n, n // 2)
        depth = math.ceil(math.log2(n))
        tree = PartitionTree(spec, depth)
        ids = list(tree.ids())
        assert len(ids) == tree.count() == math.comb(n, n // 2)
        assert all(subansatz_basis_count(sa) == 1 for sa in ids)
        states = {next(iter(enumerate_subansatz(sa))) for sa in ids}
        assert len(states) == math.comb(n, n // 2)


def test_partition_tree_ids_lexicographic_and_counted():
    tree = PartitionTree(DickeSpec(8, 4), 2)
    ids = list(tree.ids())
    assert len(ids) == tree.count()
    keys = [sa.levels for sa in ids]
    assert keys == sorted(keys)


def test_loose_bounds_product_equals_closed_form():
    for n in (8, 16, 32, 64):
        for p in (1, 2, 3):
            assert loose_bound_product(n, p) == loose_bound_closed(n, p)


def test_loose_bound_small_value_oracle():
    # one split of 40 qubits: (40/2)^(2^0)... product over level 1 only = 20? no:
    # levels l=1..p contribute (n/2^l)^(2^(l-1)); n=40, p=1 -> 20^1 = 20
    assert loose_bound_product(40, 1) == 20
    assert loose_bound_product(40, 2) == 20 * 10**2


def test_format_and_parse_identifiers_round_trip():
    spec = DickeSpec(8, 4)
    sa = SubAnsatzId(spec, ((3,), (1, 0)))
    text = format_id(sa)
    assert text == "sa^1_[3]-sa^2_[1,0]"
    assert parse_id(text, spec) == sa
    # single-ordinal levels may omit brackets on input
    assert parse_id("sa^1_3-sa^2_[1,0]", spec) == sa
    assert str(sa) == text


def test_parse_rejects_malformed_identifiers():
    spec = DickeSpec(8, 4)
    for bad in ("sa^2_[1]", "sa^1_[9]", "sa_1[2]", "sa^1_[1,2]", ""):
        with pytest.raises(ValueError):
            parse_id(bad, spec)


def test_subansatz_id_validates_ordinals():
    spec = DickeSpec(8, 4)
    with pytest.raises(ValueError):
        SubAnsatzId(spec, ((5,),))  # child_count(D^8_4) == 5 -> max ordinal 4
    with pytest.raises(ValueError):
        SubAnsatzId(spec, ((2,), (1,)))  # level 2 needs one ordinal per fragment


def test_fragments_and_child_weights():
    spec = DickeSpec(8, 4)
    sa = SubAnsatzId(spec, ((3,),))
    frags = sa.fragments()
    assert frags == [DickeSpec(4, 3), DickeSpec(4, 1)]
    deeper = sa.child((1, 1))
    assert deeper.fragments() == [
        DickeSpec(2, 2),
        DickeSpec(2, 1),
        DickeSpec(2, 1),
        DickeSpec(2, 0),
    ]


def test_equilibrium_partition_counts():
    tree = equilibrium_partition(DickeSpec(8, 4), 1)
    assert tree.count() == child_count(DickeSpec(8, 4)) == 5
    # depth bounded by divisibility
    with pytest.raises(ValueError):
        equilibrium_partition(DickeSpec(12, 6), 3)
    with pytest.raises(ValueError):
        equilibrium_partition(DickeSpec(8, 4), 0)


def test_bitstrings_of_weight_ascending_and_complete():
    arr = bitstrings_of_weight(6, 3)
    assert len(arr) == 20
    assert np.all(np.diff(arr) > 0)
    assert all(int(b).bit_count() == 3 for b in arr)
    assert not arr.flags.writeable
    assert list(bitstrings_of_weight(4, 0)) == [0]
    assert list(bitstrings_of_weight(4, 4)) == [0b1111]
    with pytest.raises(ValueError):
        bitstrings_of_weight(4, 5)


def test_enumeration_matches_fragment_product():
    spec = DickeSpec(8, 4)
    sa = SubAnsatzId(spec, ((3,), (1, 0)))
    expected = set()
    f = sa.fragments()  # widths 2,2,2,2 with weights 2,1,0,1
    for combo in itertools.product(
        *[[int(b) for b in bitstrings_of_weight(fr.n, fr.k)] for fr in f]
    ):
        bits = 0
        for fr, frag_bits in zip(f, combo):
            bits = (bits << fr.n) | frag_bits
        expected.add(bits)
    assert set(enumerate_subansatz(sa)) == expected
    assert subansatz_basis_count(sa) == len(expected)


def test_chunked_enumeration_equals_lazy():
    spec = DickeSpec(12, 6)
    for levels in (((4,),), ((4,), (1, 1))):
        sa = SubAnsatzId(spec, levels)
        lazy = np.fromiter(enumerate_subansatz(sa), dtype=np.int64)
        chunks = list(enumerate_subansatz_arrays(sa, chunk=64))
        assert all(len(c) > 0 for c in chunks)
        assert np.array_equal(np.concatenate(chunks), lazy)
    # a grid much larger than the chunk is actually split
    wide = SubAnsatzId(spec, ((4,),))  # 225 states
    assert len(list(enumerate_subansatz_arrays(wide, chunk=64))) == 3


def test_hundred_qubit_outer_cells_countable():
    spec = DickeSpec(100, 50)
    outer = [1, 2, 48, 49]
    total = sum(subansatz_basis_count(SubAnsatzId(spec, ((t,),))) for t in outer)
    assert total == 3_006_250


def test_run_subansatz_marginals_match_born(rng):
    spec = DickeSpec(8, 4)
    sa = SubAnsatzId(spec, ((3,),))  # fragments D^4_3, D^4_1
    frags = sa.fragments()
    params = []
    for f in frags:
        circuit = build_for(f)
        params.append(rng.uniform(0.4, 2.7, size=circuit.num_params))
    counts = run_subansatz(sa, params, shots=40_000, seed=5)
    assert sum(counts.values()) == 40_000
    # each composed draw concatenates per-fragment draws (fragment 0 high bits)
    exact = {}
    for combo_bits, prob in _product_distribution(frags, params).items():
        exact[combo_bits] = prob
    for bits, c in counts.items():
        assert bits in exact
        assert abs(c / 40_000 - exact[bits]) < 0.02


def _product_distribution(frags, params):
    dists = []
    for f, p in zip(frags, params):
        psi = simulate(build_for(f), p)
        dists.append(
            {int(b): probability_of(psi, int(b)) for b in bitstrings_of_weight(f.n, f.k)}
        )
    out = {}
    for combo in itertools.product(*[d.items() for d in dists]):
        bits, prob = 0, 1.0
        for f, (frag_bits, frag_prob) in zip(frags, combo):
            bits = (bits << f.n) | frag_bits
            prob *= frag_prob
        out[bits] = prob
    return out


def test_run_subansatz_fixed_fragments_need_no_params(rng):
    spec = DickeSpec(8, 4)
    sa = SubAnsatzId(spec, ((4,),))  # fragments D^4_4 (fixed) and D^4_0 (fixed)
    counts = run_subansatz(sa, [[], []], shots=50, seed=1)
    assert counts == {0b11110000: 50}
    with pytest.raises(ValueError):
        run_subansatz(sa, [[0.3], []], shots=10, seed=1)


def test_entanglement_entropy_binary_values():
    assert entanglement_entropy(1.0, 0.0) == 0.0
    assert abs(entanglement_entropy(1 / math.sqrt(2), 1 / math.sqrt(2)) - 1.0) < 1e-12
    a = math.sqrt(0.9)
    b = math.sqrt(0.1)
    expected = -(0.9 * math.log2(0.9) + 0.1 * math.log2(0.1))
    assert abs(entanglement_entropy(a, b) - expected) < 1e-12
    with pytest.raises(ValueError):
        entanglement_entropy(1.0, 1.0)
