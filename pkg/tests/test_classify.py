import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from luequiv.classify import (
    Extremal,
    Membership,
    ProductContent,
    classify,
    detect_extremal_pt,
)
from luequiv.equivalence import CLASS_MISMATCH, SCHMIDT_MISMATCH, Inequivalent, class_mismatch, decide_lu
from luequiv.fixtures import KET00, KET01, KET10, KET11, PHI_MINUS, get_fixture, proj
from luequiv.linalg import BipartiteOperator, random_density_matrix, random_local_unitary
from luequiv.product_opt import NotPSDError

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def test_rho1():
    c = classify(get_fixture("paper.rho1"))
    assert c.is_npt and not c.is_ppt
    assert c.pt_min == pytest.approx(-0.1, abs=1e-12)
    assert np.allclose(c.pt_spectrum, [-0.1, 0.3, 0.4, 0.4], atol=1e-10)
    assert c.d_lambda is Membership.PROVEN and c.d_lambda_bar is Membership.PROVEN
    assert c.eigenspaces[0].product is ProductContent.PROVEN_FREE


def test_rho3_separable_and_in_d_lambda():
    c = classify(get_fixture("std.rho3"))
    assert c.is_ppt and c.separable_certified
    assert c.d_lambda is Membership.PROVEN
    # the singlet line is the smallest eigenvalue and the proof
    assert c.eigenspaces[-1].multiplicity == 1
    assert c.eigenspaces[-1].product is ProductContent.PROVEN_FREE


def test_tiles_states():
    c = classify(get_fixture("paper.tiles_upb_state"))
    assert c.is_ppt and not c.separable_certified and c.pe_candidate
    assert c.d_lambda is Membership.EVIDENCE
    noisy = classify(get_fixture("std.tiles_noisy"))
    assert noisy.is_ppt and not noisy.separable_certified
    assert noisy.d_lambda is Membership.EVIDENCE
    top = noisy.eigenspaces[0]
    assert top.multiplicity == 4 and top.product is ProductContent.NONE_FOUND
    # five-dimensional eigenspace must meet the product variety in 3x3
    assert noisy.eigenspaces[1].product is ProductContent.FORCED


def test_maximally_mixed():
    c = classify(get_fixture("std.maximally_mixed"))
    assert c.is_ppt and c.extremal is Extremal.NEITHER
    assert c.d_lambda is Membership.REFUTED and c.d_lambda_bar is Membership.REFUTED


def test_extremal_detection():
    assert detect_extremal_pt(get_fixture("std.phi_plus")) is Extremal.MAX_ENT_TWO_QUBIT
    assert detect_extremal_pt(get_fixture("std.product00")) is Extremal.PURE_PRODUCT
    assert detect_extremal_pt(get_fixture("std.maximally_mixed")) is Extremal.NEITHER
    with pytest.raises(ValueError):
        detect_extremal_pt(BipartiteOperator.identity(2, 2))


def test_rejects_non_psd():
    with pytest.raises(NotPSDError):
        classify(BipartiteOperator(2, 2, np.diag([1.0, 0.5, 0.0, -0.5])))


def test_unnormalized_state_is_accepted():
    c = classify(get_fixture("paper.rho1").scaled(10.0))
    assert c.trace == pytest.approx(10.0) and c.is_npt


def test_kernel_is_not_an_eigenspace():
    # rank-one entangled pure state: the kernel holds products but is ignored
    c = classify(BipartiteOperator(2, 2, proj(PHI_MINUS)))
    assert c.d_lambda is Membership.PROVEN
    assert c.eigenspaces[-1].product is ProductContent.SKIPPED


def test_json_round_trips_through_text():
    c = classify(get_fixture("paper.rho1"))
    d = json.loads(json.dumps(c.to_dict()))
    assert d["d_lambda"] == "Proven" and d["is_npt"] is True


@given(seeds, st.sampled_from([(2, 2), (2, 3)]))
@settings(max_examples=8, deadline=None)
def test_classification_is_lu_invariant(seed, dims):
    rng = np.random.default_rng(seed)
    rho = random_density_matrix(*dims, rng)
    a = classify(rho)
    b = classify(rho.conjugated(random_local_unitary(*dims, rng)))
    assert np.allclose(a.pt_spectrum, b.pt_spectrum, atol=1e-9)
    assert (a.is_npt, a.d_lambda, a.d_lambda_bar) == (b.is_npt, b.d_lambda, b.d_lambda_bar)
    assert a.is_npt != a.is_ppt
    if a.d_lambda is Membership.PROVEN:
        assert a.d_lambda_bar is Membership.PROVEN


def test_proven_membership_versus_product_eigenbasis():
    rho = get_fixture("paper.rho1")
    # same spectrum, every eigenspace holding a product vector
    k = BipartiteOperator(2, 2, 0.6 * proj(KET00) + 0.2 * proj(KET11) + 0.1 * (proj(KET01) + proj(KET10)))
    assert classify(k).d_lambda is Membership.REFUTED
    v = decide_lu(rho, k)
    # the per-projector Schmidt screen fires before any class-level argument
    assert isinstance(v, Inequivalent) and v.certificate.kind == SCHMIDT_MISMATCH
    c = class_mismatch(rho, k)
    assert isinstance(c, Inequivalent) and c.certificate.kind == CLASS_MISMATCH
