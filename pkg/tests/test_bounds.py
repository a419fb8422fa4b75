import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uncert.bounds import (Relation, UncertaintyReport, Verdict, dp_trace, eval_relation,
                           is_mub, overlap_r, r_povm, r_projected, single_povm_bound,
                           witness_bound)
from uncert.errors import (ArityMismatch, DimMismatch, NotCoprime, NotMub, NotProjector,
                           NotPure, SupportNotContained)
from uncert.fuzz import DEFAULT_DIMS, random_instance, trial_seed
from uncert.states import (QState, computational_basis, fourier_pair, random_basis,
                           random_povm, random_state)

seeds = st.integers(min_value=0, max_value=2**63 - 1)


@pytest.mark.parametrize("d", [2, 3, 5])
def test_fourier_overlap(d):
    z, x = fourier_pair(d)
    r = overlap_r(z, x)
    assert abs(r.value - 1 / d) < 1e-12
    assert abs(r.neg_log - math.log2(d)) < 1e-12


def test_identical_bases_overlap_one():
    b = random_basis(3, 1)
    assert abs(overlap_r(b, b).value - 1) < 1e-12


def test_basis_povm_overlap_agrees():
    v, w = random_basis(3, 1), random_basis(3, 2)
    assert abs(overlap_r(v, w).value - r_povm(v.as_povm(), w.as_povm()).value) < 1e-12


def test_single_bound_identity_projector_is_largest_element_norm():
    p = random_povm(3, 4, 3)
    expected = max(np.linalg.eigvalsh(e).max() for e in p.elements)
    assert abs(single_povm_bound(p).value - expected) < 1e-12


def test_projected_overlap_rejects_non_projector():
    v = computational_basis(2)
    with pytest.raises(NotProjector):
        r_projected(v, v, np.diag([0.5, 1.0]))


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_single_bound_monotone_in_projector(seed):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))
    small = q[:, :2] @ q[:, :2].conj().T
    big = q[:, :3] @ q[:, :3].conj().T
    p = random_povm(4, 5, seed)
    assert single_povm_bound(p, small).value <= single_povm_bound(p, big).value + 1e-12
    assert single_povm_bound(p, big).value <= single_povm_bound(p).value + 1e-12


def test_report_verdicts():
    assert UncertaintyReport(Relation.EQ3, {"a": 1.0}, 1.0).holds is Verdict.EQUALITY
    assert UncertaintyReport(Relation.EQ3, {"a": 0.5}, 1.0).holds is Verdict.VIOLATED
    assert UncertaintyReport(Relation.EQ3, {"a": 1.5}, 1.0).holds is Verdict.HOLDS


def test_report_dict_is_plain():
    d = UncertaintyReport(Relation.EQ3, {"a": np.float64(1.2)}, 1.0).to_dict()
    assert type(d["lhs_terms"]["a"]) is float
    assert d["holds"] == "holds"


@pytest.mark.parametrize("relation", list(DEFAULT_DIMS))
def test_random_instances_respect_relation(relation):
    for i in range(25):
        state, kw = random_instance(relation, None, trial_seed(99, i))
        rep = eval_relation(relation, state, **kw)
        assert rep.gap >= -1e-9, (relation, i, rep)


def test_eq3_rejects_non_mub():
    state = random_state((2, 2, 2), 1, 0)
    with pytest.raises(NotMub):
        eval_relation(Relation.EQ3, state, v=random_basis(2, 1), w=random_basis(2, 2))


def test_arity_checked():
    with pytest.raises(ArityMismatch):
        eval_relation(Relation.EQ22, random_state((2,), seed=0))


def test_eq14_rejects_small_projector():
    state = random_state((2, 2, 2), 1, 0)
    z, x = fourier_pair(2)
    with pytest.raises(SupportNotContained):
        eval_relation(Relation.EQ14, state, P=z, Q=x, projector=np.diag([1.0, 0.0]))


def test_eq16_needs_pure_state():
    z, x = fourier_pair(2)
    with pytest.raises(NotPure):
        eval_relation(Relation.EQ16, random_state((2, 2, 2), seed=0), P=z, N=x)


def test_eq26_coprime_and_product():
    state = random_state((6, 2), seed=0)
    with pytest.raises(NotCoprime):
        eval_relation(Relation.EQ26, random_state((4, 2), seed=0), subdims=(2, 2))
    with pytest.raises(DimMismatch):
        eval_relation(Relation.EQ26, state, subdims=(2, 5))
    assert eval_relation(Relation.EQ26, state, subdims=(2, 3)).gap >= -1e-9


@pytest.mark.parametrize("d", [2, 3, 4])
def test_eq21_equality_on_z_diagonal(d):
    p = np.random.default_rng(d).dirichlet(np.ones(d))
    rep = eval_relation(Relation.EQ21, QState(np.diag(p).astype(complex), (d,)))
    assert rep.holds is Verdict.EQUALITY


def test_eq20_equality_on_basis_state():
    rho = np.zeros((3, 3), dtype=complex)
    rho[1, 1] = 1
    assert eval_relation(Relation.EQ20, QState(rho, (3,))).holds is Verdict.EQUALITY


def test_witness_bound_bell():
    # for a Bell state both conditional entropies vanish, certifying entanglement
    assert witness_bound(0.0, 0.0, 2) == 1.0


def test_is_mub():
    z, x = fourier_pair(3)
    assert is_mub(z, x)
    assert not is_mub(z, z)


def test_dp_trace_bell_chain():
    psi = np.zeros(8)
    psi[[0, 6]] = 1 / math.sqrt(2)
    state = QState.from_ket(psi, (2, 2, 2))
    z, x = fourier_pair(2)
    tr = dp_trace(state, z, x)
    chain = [tr.h_vc, tr.step5, tr.step6, tr.step7, tr.step8_form, tr.step9_equiv]
    assert max(chain) - min(chain) < 1e-10
    assert abs(tr.step8_rel - (tr.step7 - 1)) < 1e-10
    assert tr.violations() == []


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_dp_trace_monotone_for_non_mub(seed):
    state = random_state((3, 2, 2), 1, seed)
    tr = dp_trace(state, random_basis(3, seed), random_basis(3, seed + 1))
    assert tr.step5 >= tr.step6 - 1e-9
    assert abs(tr.step5 - tr.h_vc) < 1e-9
    assert tr.violations() == []
