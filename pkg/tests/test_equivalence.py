import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from luequiv.config import DEFAULT_OPTIONS
from luequiv.equivalence import (
    COMMUTANT_OBSTRUCTION,
    LOCAL_SPECTRUM_MISMATCH,
    SCHMIDT_MISMATCH,
    SPECTRUM_MISMATCH,
    BlockPartition,
    Equivalent,
    FiniteLuGroup,
    Inequivalent,
    NonOrthogonalTupleError,
    Reachable,
    Undecided,
    Unreachable,
    commutant_blocks,
    compare_invariants,
    decide_lu,
    decide_slu,
    diagonal_sign_group,
    diagonal_slu_decide,
    gauge_fix,
    is_group_invariant,
    local_pauli_group,
    lu_invariants,
    permutation_matrix,
    ranges_match,
    refine_partition,
    replay_commutant_certificate,
    slu_residual,
    slu_triple_check,
    spectrum_certificate_holds,
    twirl_finite,
)
from luequiv.equivalence import PAULIS
from luequiv.fixtures import PHI_PLUS, cex, crlu_rho, crlu_sigma, proj, rho1
from luequiv.linalg import (
    BipartiteOperator,
    DimensionMismatchError,
    LocalUnitary,
    haar_unitary,
    random_density_matrix,
    random_hermitian,
    random_local_unitary,
)
from luequiv.witness import positive_relabel
from oracles import permutation_slu

seeds = st.integers(min_value=0, max_value=2**32 - 1)
X, Z = PAULIS[1], PAULIS[3]


def random_tuple(m, n, ranks, rng):
    """Mutually orthogonal projectors of the given ranks."""
    w = haar_unitary(m * n, rng)
    out, k = [], 0
    for r in ranks:
        block = w[:, k:k + r]
        out.append(BipartiteOperator(m, n, block @ block.conj().T))
        k += r
    return out


# invariant screens

def test_invariants_are_lu_invariant():
    rng = np.random.default_rng(0)
    rho = random_density_matrix(2, 3, rng)
    a, b = lu_invariants(rho), lu_invariants(rho.conjugated(random_local_unitary(2, 3, rng)))
    assert compare_invariants(a, b, 1e-8) is None


def test_rho1_top_projector_local_spectra():
    rec = lu_invariants(rho1())
    local, schmidt = rec.local_spectra[0], rec.schmidt[0]
    assert np.allclose(local[0], [0.5, 0.5]) and np.allclose(local[1], [0.5, 0.5])
    assert np.allclose(schmidt, [2**-0.5, 2**-0.5])


def test_crlu_pair_inequivalent_at_half_eigenvector():
    v = decide_lu(crlu_rho(), crlu_sigma())
    assert isinstance(v, Inequivalent)
    assert v.certificate.kind in (SCHMIDT_MISMATCH, LOCAL_SPECTRUM_MISMATCH)
    assert v.certificate.data["projector"] == 0
    assert np.allclose(v.certificate.data["p"], [1, 0])
    assert np.allclose(v.certificate.data["q"], [2**-0.5, 2**-0.5])


def test_spectrum_mismatch_is_replayable():
    rng = np.random.default_rng(1)
    h, k = random_density_matrix(2, 2, rng), random_density_matrix(2, 2, rng)
    v = decide_lu(h, k)
    assert isinstance(v, Inequivalent) and v.certificate.kind == SPECTRUM_MISMATCH
    assert v.certificate.data["index"] == 0
    assert spectrum_certificate_holds(h, k)


def test_dimension_and_tuple_errors():
    with pytest.raises(DimensionMismatchError):
        decide_lu(BipartiteOperator.identity(2, 2), BipartiteOperator.identity(2, 3))
    p = BipartiteOperator(2, 2, proj([1, 0, 0, 0]))
    q = BipartiteOperator(2, 2, proj(np.array([1, 1, 0, 0]) / np.sqrt(2)))
    with pytest.raises(NonOrthogonalTupleError) as exc:
        decide_slu([p, q], [p, q])
    assert (exc.value.i, exc.value.j) == (0, 1)
    with pytest.raises(ValueError):
        decide_slu([p], [p, p])


def test_rank_mismatch_is_immediate():
    p = BipartiteOperator(2, 2, proj([1, 0, 0, 0]))
    q = BipartiteOperator(2, 2, proj([1, 0, 0, 0]) + proj([0, 1, 0, 0]))
    v = decide_slu([p], [q])
    assert isinstance(v, Inequivalent) and v.certificate.kind == SPECTRUM_MISMATCH


# planted instances

@pytest.mark.parametrize("dims", [(2, 2), (2, 3), (3, 3)])
def test_planted_lu_recovered(dims):
    rng = np.random.default_rng(sum(dims))
    for _ in range(3):
        h = BipartiteOperator(*dims, random_hermitian(dims[0] * dims[1], rng))
        lu = random_local_unitary(*dims, rng)
        v = decide_lu(h, h.conjugated(lu))
        assert isinstance(v, Equivalent) and v.residual < 1e-7
        # soundness: the returned unitary is checked by direct conjugation
        assert np.linalg.norm(h.conjugated(lu).conjugated(v.lu).mat - h.mat) ** 2 < 1e-7


@pytest.mark.parametrize("dims,ranks", [((2, 2), (1, 1, 2)), ((2, 3), (1, 2, 3)), ((3, 3), (2, 3, 4))])
def test_planted_random_triple(dims, ranks):
    rng = np.random.default_rng(7)
    ps = random_tuple(*dims, ranks, rng)
    lu = random_local_unitary(*dims, rng)
    qs = [p.conjugated(lu) for p in ps]
    v = decide_slu(ps, qs)
    assert isinstance(v, Equivalent) and slu_residual(ps, qs, v.lu) < 1e-7


def test_budget_starved_pair_is_undecided():
    rng = np.random.default_rng(3)
    ps = random_tuple(3, 3, (1, 1, 7), rng)
    # planted, so never Inequivalent; with no search starts nothing can certify it
    lu = random_local_unitary(3, 3, rng)
    qs = [p.conjugated(lu) for p in ps]
    v = decide_slu(ps, qs, DEFAULT_OPTIONS.with_(search_restarts=0))
    assert isinstance(v, Undecided) and v.best_residual > DEFAULT_OPTIONS.accept_tol


# shift law and relabeling

@given(seeds, st.floats(min_value=-3, max_value=3))
@settings(max_examples=10, deadline=None)
def test_verdicts_survive_shift(seed, x):
    rng = np.random.default_rng(seed)
    h = BipartiteOperator(2, 2, random_hermitian(4, rng))
    k_eq = h.conjugated(random_local_unitary(2, 2, rng))
    k_ne = BipartiteOperator(2, 2, random_hermitian(4, rng))
    for k in (k_eq, k_ne):
        a, b = decide_lu(h, k), decide_lu(h.shifted(x), k.shifted(x))
        assert a.kind == b.kind
        if isinstance(a, Inequivalent):
            assert a.certificate.kind == b.certificate.kind


def test_relabel_then_decide():
    rng = np.random.default_rng(9)
    w1 = BipartiteOperator(2, 3, random_hermitian(6, rng))
    lu = random_local_unitary(2, 3, rng)
    w2 = w1.conjugated(lu)
    mus = [6.0, 5.0, 4.0, 3.0, 2.0, 1.0]
    r1, r2 = positive_relabel(w1, mus), positive_relabel(w2, mus)
    v = decide_lu(r1, r2)
    assert isinstance(v, Equivalent)
    # the certificate for the states also maps the witnesses
    assert np.linalg.norm(w2.conjugated(v.lu).mat - w1.mat) < 1e-6


# gauge fixing and ranges

def test_gauge_fix_identity_noop():
    ps = [cex("P1"), cex("P2"), cex("P3")]
    qs = [cex("Q1"), cex("Q2"), cex("Q3")]
    out = gauge_fix(ps, qs, LocalUnitary.identity(3, 4), [0, 1])
    assert all(np.array_equal(a.mat, b.mat) for a, b in zip(out, qs))
    with pytest.raises(ValueError):
        gauge_fix(ps, qs, LocalUnitary.identity(3, 4), [2])


@pytest.mark.parametrize("seed", range(20))
def test_gauge_fix_preserves_verdict(seed):
    rng = np.random.default_rng(100 + seed)
    ps = random_tuple(2, 2, (1, 1, 2), rng)
    lu = random_local_unitary(2, 2, rng)
    qs = [p.conjugated(lu) for p in ps]
    pair = decide_slu(ps[:1], qs[:1])
    assert isinstance(pair, Equivalent)
    fixed = gauge_fix(ps, qs, pair.lu, [0])
    assert np.allclose(fixed[0].mat, ps[0].mat, atol=1e-6)
    a, b = decide_slu(ps, qs), decide_slu(ps, fixed)
    assert a.kind == b.kind == "equivalent"
    # single-projector screens are gauge invariant
    for q, f in zip(qs, fixed):
        assert compare_invariants(lu_invariants(q), lu_invariants(f), 1e-8) is None


@pytest.mark.parametrize("seed", range(10))
def test_ranges_match_iff_conjugation(seed):
    rng = np.random.default_rng(seed)
    p = random_tuple(2, 3, (2,), rng)[0]
    lu = random_local_unitary(2, 3, rng)
    q = p.conjugated(lu.dagger())
    assert ranges_match(p, q, lu) and np.allclose(q.conjugated(lu).mat, p.mat)
    other = random_local_unitary(2, 3, rng)
    assert ranges_match(p, q, other) == np.allclose(q.conjugated(other).mat, p.mat, atol=1e-8)
    assert not ranges_match(p, q, other)


# commutant path

def test_commutant_blocks():
    assert commutant_blocks(np.diag([1, 1, 0, 0])).to_list() == [[0, 1], [2, 3]]
    assert commutant_blocks(np.eye(3)).to_list() == [[0, 1, 2]]
    assert commutant_blocks(np.diag([3, 1, 2])).to_list() == [[0], [1], [2]]


def test_refine_partition():
    a = BlockPartition(((0, 1), (2, 3)))
    b = BlockPartition(((0, 2), (1, 3)))
    one = BlockPartition(((0, 1, 2, 3),))
    assert refine_partition([a, b]).to_list() == [[0], [1], [2], [3]]
    assert refine_partition([a, a]) == a
    assert refine_partition([a, one]) == a
    with pytest.raises(ValueError):
        refine_partition([a, BlockPartition(((0, 1, 2),))])
    with pytest.raises(ValueError):
        BlockPartition(((0, 1), (1, 2)))


def test_diagonal_slu_decide_examples():
    r = diagonal_slu_decide([(1, 1, 0, 0), (1, 0, 1, 0)], (0, 1, 1, 0), (1, 0, 0, 1))
    assert isinstance(r, Unreachable) and len(r.block) == 1
    x, y = 0.3, 0.7
    r = diagonal_slu_decide([(1, 1, 0, 0)], (0, 1, x, y), (1, 0, x, y))
    assert isinstance(r, Reachable)
    u = permutation_matrix(r.permutation)
    assert np.allclose(u @ np.diag([0, 1, x, y]) @ u.T, np.diag([1, 0, x, y]))
    for f in ([1, 1, 0, 0],):
        assert np.allclose(u @ np.diag(f) @ u.T, np.diag(f))
    assert diagonal_slu_decide([], (1, 2, 3), (1, 2, 3)).permutation == (0, 1, 2)


def test_cex_pairs_and_triple():
    planted = {("P1", "P3"): None, ("P2", "P3"): None, ("P1", "P2"): None}
    for key in planted:
        ps = [cex(k) for k in key]
        qs = [cex("Q" + k[1]) for k in key]
        v = decide_slu(ps, qs)
        assert isinstance(v, Equivalent) and v.residual < 1e-8
    ps = [cex(k) for k in ("P1", "P2", "P3")]
    qs = [cex(k) for k in ("Q1", "Q2", "Q3")]
    v = decide_slu(ps, qs)
    assert isinstance(v, Inequivalent) and v.certificate.kind == COMMUTANT_OBSTRUCTION
    assert replay_commutant_certificate(v.certificate)


def _diag_family(rng, m, n, weights=None):
    out = []
    for a in range(m):
        w = weights[a] if weights else int(rng.integers(1, n))
        d = np.zeros(n)
        d[rng.choice(n, w, replace=False)] = 1
        out.append(np.kron(np.diag(np.eye(m)[a]), np.diag(d)))
    return out


@pytest.mark.parametrize("seed", range(30))
def test_diagonal_path_matches_permutation_oracle(seed):
    rng = np.random.default_rng(seed)
    m, n = 3, 4
    ps = _diag_family(rng, m, n)
    weights = [int(np.trace(p).real) for p in ps]
    if seed % 2:
        # equivalent by construction: permute B and relabel
        perm = np.eye(n)[:, rng.permutation(n)]
        w = np.kron(np.eye(m), perm)
        qs = [w @ p @ w.T for p in ps]
    else:
        qs = _diag_family(rng, m, n, weights)
    truth = permutation_slu(ps, qs, m, n)
    v = decide_slu([BipartiteOperator(m, n, p) for p in ps], [BipartiteOperator(m, n, q) for q in qs])
    assert isinstance(v, Equivalent) == truth
    assert isinstance(v, Inequivalent) == (not truth)


# groups

def test_pauli_group():
    g = local_pauli_group()
    assert g.closed and len(g) == 16
    gens = [LocalUnitary(X, np.eye(2)), LocalUnitary(Z, np.eye(2)), LocalUnitary(np.eye(2), X),
            LocalUnitary(np.eye(2), Z)]
    h = FiniteLuGroup.generate(gens)
    assert len(h) == 16
    assert all(h.index_of(el) is not None for el in g.elements)
    assert len(g.intersect(diagonal_sign_group(2, 2))) == 4


def test_non_closed_group():
    g = FiniteLuGroup.from_elements([LocalUnitary(X, np.eye(2))])
    assert not g.closed
    with pytest.raises(ValueError):
        twirl_finite(BipartiteOperator.identity(2, 2), g)


def test_twirl_examples():
    phi = BipartiteOperator(2, 2, proj(PHI_PLUS))
    zz = FiniteLuGroup.from_elements([LocalUnitary.identity(2, 2), LocalUnitary(Z, Z)])
    assert zz.closed and np.allclose(twirl_finite(phi, zz).mat, phi.mat)
    assert is_group_invariant(phi, zz)
    trivial = FiniteLuGroup.from_elements([LocalUnitary.identity(2, 2)])
    rho = random_density_matrix(2, 2, np.random.default_rng(0))
    assert np.allclose(twirl_finite(rho, trivial).mat, rho.mat)
    assert not is_group_invariant(BipartiteOperator(2, 2, proj([1, 0, 0, 0])), local_pauli_group())
    assert is_group_invariant(BipartiteOperator.identity(2, 2).scaled(0.25), local_pauli_group())


def test_triple_check_examples():
    rng = np.random.default_rng(2)
    g = local_pauli_group()
    mixed = BipartiteOperator.identity(2, 2).scaled(0.25)
    rho3 = random_density_matrix(2, 2, rng)
    sigma3 = rho3.conjugated(LocalUnitary(X, X))
    v = slu_triple_check(mixed, mixed, rho3, sigma3, g, g)
    assert isinstance(v, Equivalent)

    ps = [cex(k) for k in ("P1", "P2", "P3")]
    signs = diagonal_sign_group(3, 4)
    v = slu_triple_check(ps[0], ps[1], ps[2], cex("Q3"), signs, signs, exhaustive=True)
    assert isinstance(v, Inequivalent) and v.certificate.kind == COMMUTANT_OBSTRUCTION
    assert isinstance(slu_triple_check(ps[0], ps[1], ps[2], cex("Q3"), signs, signs), Undecided)

    trivial = FiniteLuGroup.from_elements([LocalUnitary.identity(2, 2)])
    other = random_density_matrix(2, 2, rng)
    assert isinstance(slu_triple_check(mixed, mixed, rho3, other, trivial, trivial, exhaustive=True), Inequivalent)
    with pytest.raises(ValueError):
        slu_triple_check(rho3, mixed, rho3, sigma3, g, g)
