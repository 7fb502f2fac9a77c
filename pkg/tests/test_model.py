import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slowfast.model import (
    ModelParams, baseline_params, eval_Q, eval_reactions, exponents, gap_index, grad_q,
    transitions, validate_params,
)

nonneg = st.floats(0.0, 10.0, allow_nan=False)


def example_params(**kw):
    base = dict(alpha=1.0, beta=2.0, A_off=1.0, B_off=0.0, a_f=0.5, b_f=0.5, c_f=0.5, d_f=0.5,
                a=1.0, b=1.0, c=1.0, d=1.0)
    base.update(kw)
    return baseline_params().replace(**base)


def sym(**kw):
    base = dict(alpha=1.0, beta=1.0, A_off=1.0, B_off=1.0, a_f=1.0, b_f=1.0, c_f=0.0, d_f=0.0)
    base.update(kw)
    return baseline_params().replace(**base)


# -- validation ---------------------------------------------------------------

def test_validate_ok():
    assert validate_params(example_params()).ok


def test_validate_h2_boundary():
    rep = validate_params(example_params(beta=9.0))
    assert rep.names == ["(H2)"]


def test_validate_h1_b_zero_small_beta():
    # [PAPER] (H1): "B>0 if beta<1"
    rep = validate_params(example_params(alpha=0.5, beta=0.5, B_off=0.0))
    assert rep.names == ["(H1)"]
    assert "B > 0 if beta < 1" in str(rep)


def test_validate_h3_and_nondegeneracy():
    rep = validate_params(example_params(a_f=2.0))
    assert "(H3)" in rep.names
    rep = validate_params(example_params(a_f=0.0, c_f=0.0))
    assert "nondegeneracy" in rep.names
    rep = validate_params(example_params(c=0.0, d=0.0, c_f=0.0, d_f=0.0))
    assert "nondegeneracy" in rep.names


def test_validate_domain_and_nonfinite():
    assert "domain" in validate_params(example_params(d_a=0.0)).names
    with pytest.raises(ValueError, match="invalid parameter value"):
        validate_params(example_params(d_a=math.nan))


def test_json_roundtrip_and_unknown_key(base):
    assert ModelParams.from_json(base.to_json()) == base
    d = base.to_dict()
    d["d_aa"] = 1.0
    with pytest.raises(ValueError, match="d_aa"):
        ModelParams.from_dict(d)
    d = base.to_dict()
    del d["beta"]
    with pytest.raises(ValueError, match="beta"):
        ModelParams.from_dict(d)


def test_derived_constants():
    p = baseline_params().replace(eta_a=2.0, eta_b=1.0, a=0.5, b=3.0, c=0.5, d=0.25,
                                  eta_v1=1.0, eta_v2=2.0)
    assert p.eta_bar == 2.0
    assert p.eta_low == 1.0
    assert p.eta_v == 3.0
    assert p.r_v == 0.5 + 0.5


# -- transitions, Q, reactions -------------------------------------------------------

def test_transitions_examples():
    assert transitions(0.0, sym(alpha=2.0, beta=2.0))[0] == 1.0
    assert transitions(1.0, sym()) == (2.0, 2.0)
    assert transitions(3.0, sym(alpha=2.0, beta=2.0))[0] == 16.0
    with pytest.raises(ValueError, match="domain"):
        transitions(-1.0, sym())


def test_eval_Q_examples():
    p = sym()
    assert eval_Q(1.0, 1.0, 0.0, p)[2] == 0.0
    q, lam, Q, _, _ = eval_Q(0.0, 1.0, 0.0, p)
    assert (q, lam) == (2.0, 3.0)
    assert Q == pytest.approx(2.0 / 3.0, rel=1e-15)
    q, _, Q, _, _ = eval_Q(0.0, 0.0, 0.7, baseline_params())
    assert q == 0.0 and Q == 0.0
    with pytest.raises(ValueError):
        eval_Q(-1e-3, 0.0, 0.0, p)


def test_reactions_examples(base):
    fa, _, fv, fu = eval_reactions(0.0, 0.7, 0.3, base)
    assert fa == 0.0
    p = base.replace(eta_a=1.0, a=1.0, c=0.0, gamma_a=0.0)
    assert eval_reactions(2.0, 0.0, 0.0, p)[0] == -2.0
    assert eval_reactions(0.4, 0.7, 0.0, base)[2] == 0.0
    fa, fb, _, fu = eval_reactions(0.4, 0.7, 0.3, base)
    assert fu == fa + fb


def test_reactions_hand_values(asym):
    ua, ub, v = 0.4, 0.7, 0.3
    P = asym
    fa = P.eta_a * ua * (1 - P.a * ua - P.c * v) - P.gamma_a * ua * ub
    fb = P.eta_b * ub * (1 - P.b * ub - P.d * v) - P.gamma_b * ua * ub
    fv = P.eta_v1 * v * (1 - P.a * ua - P.c * v) + P.eta_v2 * v * (1 - P.b * ub - P.d * v)
    got = eval_reactions(ua, ub, v, P)
    assert got[:3] == pytest.approx((fa, fb, fv), rel=1e-14)


@given(nonneg, nonneg, nonneg)
def test_Q_invariants(ua, ub, v):
    p = baseline_params().replace(alpha=0.8, beta=1.5, A_off=0.7, B_off=1.3, a_f=0.8, b_f=0.4)
    q, lam, Q, la, lb = eval_Q(ua, ub, v, p)
    assert lam >= p.lambda_floor * (1 - 1e-14)
    assert la + lb == pytest.approx(1.0, abs=1e-15)
    assert 0 < la < 1 and 0 < lb < 1
    assert q * Q >= 0


@given(nonneg, nonneg, st.floats(0.0, 5.0), nonneg)
def test_satisfaction_monotone(ua, ub, dv, v):
    p = baseline_params().replace(alpha=0.8, beta=1.5, a_f=0.8, b_f=0.4)
    assert eval_Q(ua + dv, ub, v, p)[3] >= eval_Q(ua, ub, v, p)[3] - 1e-15
    assert eval_Q(ua, ub + dv, v, p)[4] >= eval_Q(ua, ub, v, p)[4] - 1e-15


# -- grad q -------------------------------------------------------------------------

def test_grad_q_zero_state(base):
    v = 0.8
    d1, d2, d3, gap = grad_q(0.0, 0.0, v, base)
    psi, _ = transitions(base.c_f * v, base)
    _, phi = transitions(base.d_f * v, base)
    assert (d1, d2, d3) == (-psi, phi, 0.0)


def test_grad_q_symmetric(base):
    d1, d2, _, _ = grad_q(0.6, 0.6, 0.2, base)
    assert d2 == pytest.approx(-d1, rel=1e-15)


def test_grad_q_finite_differences(asym, rng):
    # [DERIVED] centred finite differences of q on 1000 random points of [0, 10]^3
    pts = rng.uniform(0.0, 10.0, (1000, 3))
    pts = np.maximum(pts, 1e-3)
    h = 1e-6 * np.maximum(pts, 1.0)
    ua, ub, v = pts.T
    d1, d2, d3, gap = grad_q(ua, ub, v, asym)
    q = lambda a, b, c: eval_Q(a, b, c, asym)[0]
    fd = [
        (q(ua + h[:, 0], ub, v) - q(ua - h[:, 0], ub, v)) / (2 * h[:, 0]),
        (q(ua, ub + h[:, 1], v) - q(ua, ub - h[:, 1], v)) / (2 * h[:, 1]),
        (q(ua, ub, v + h[:, 2]) - q(ua, ub, v - h[:, 2])) / (2 * h[:, 2]),
    ]
    for got, ref in zip((d1, d2, d3), fd):
        scale = np.maximum(np.abs(ref), np.abs(d2))
        assert np.all(np.abs(got - ref) <= 1e-6 * scale)
    assert np.all(d1 < 0) and np.all(d2 > 0)
    assert np.all(gap >= asym.A_off**asym.alpha + asym.B_off**asym.beta)


# -- exponents -----------------------------------------------------------------------

def test_exponents_paper_identity():
    # [PAPER] "q(p_alpha)=r(p_beta)=2"
    for al, be in [(1.0, 1.0), (0.5, 2.0), (1.3, 4.0)]:
        p = baseline_params().replace(alpha=al, beta=be)
        pa = exponents(2.0, p).p_alpha
        pb = exponents(2.0, p).p_beta
        assert exponents(pa, p).q_p == pytest.approx(2.0, abs=1e-15)
        assert exponents(pb, p).r_p == pytest.approx(2.0, abs=1e-15)
        assert pb <= pa


def test_exponents_examples():
    p = baseline_params()
    assert exponents(1.5, p).q_p == 2.0
    ex = exponents(2.0, baseline_params().replace(alpha=1.0, beta=2.0))
    assert (ex.q_p, ex.r_p) == (3.0, 4.0)
    assert ex.n_ab is None and math.isinf(ex.p0_ab)
    with pytest.raises(ValueError):
        exponents(1.0, p)


def _scan_n(alpha, beta):
    # [DERIVED] direct scan of I_n = (2(a+1), 2(a+1) + 4/(a+1)^n), n = 0, 1, ...
    gap = beta - alpha
    lo = 2 * (alpha + 1)
    if not gap > lo:
        return None
    n, last = 0, None
    while gap < lo + 4 / (alpha + 1) ** n:
        last = n
        n += 1
    return last


@pytest.mark.parametrize("alpha,beta", [(0.5, 7.0), (1.0, 5.5), (2.0, 9.0), (0.25, 3.0), (1.0, 3.0)])
def test_gap_index_scan(alpha, beta):
    assert gap_index(alpha, beta) == _scan_n(alpha, beta)


def test_gap_index_spec_case():
    # beta - alpha = 6.5 in (3, 7); I_n = (3, 3 + 4/1.5^n): 3.5 < 4/1.5^n iff n <= 0
    assert gap_index(0.5, 7.0) == 0
    ex = exponents(2.0, baseline_params().replace(alpha=0.5, beta=7.0))
    assert ex.p0_ab == pytest.approx(1 + 4 / (7.0 - 1.5 - 2.0))


@given(st.floats(0.05, 4.0), st.floats(1e-6, 1.0))
def test_gap_index_matches_scan(alpha, frac):
    beta = alpha + 2 * (alpha + 1) + frac * 4.0
    if beta - alpha >= 2 * (alpha + 3):
        return
    assert gap_index(alpha, beta) == _scan_n(alpha, beta)


@given(st.floats(1.01, 6.0), st.floats(0.1, 3.0), st.floats(0.0, 3.0))
def test_exponent_ordering(pv, alpha, gap):
    ex = exponents(pv, baseline_params().replace(alpha=alpha, beta=alpha + gap))
    assert ex.q_p <= ex.r_p
    assert ex.p_beta <= ex.p_alpha
