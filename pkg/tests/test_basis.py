import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from graphrom.basis import (
    BasisError,
    DynamicsBasisConfig,
    OperatorBasis,
    TaylorBasisConfig,
    TaylorTerm,
    TermDescriptor,
    build_dynamics_basis,
    build_taylor_basis,
    default_derivatives,
    descriptor_from_dict,
    dynamics_term_count,
    enumerate_dynamics_terms,
    enumerate_taylor_terms,
    monomials,
    renormalize_for_new_data,
    taylor_term_count,
)
from graphrom.calculus import partial_derivative
from graphrom.graph import build_graph
from graphrom.weights import WeightSpec


def small_graph(rng, n=12, labels=("phi", "e11", "e12", "e22")):
    X = rng.uniform(-1, 1, (n, len(labels)))
    obs = {"psi": np.sin(X[:, 0]) + X[:, 1] * X[:, 2] + X[:, 3] ** 2}
    for s in ("L1", "L2", "N1", "N2"):
        obs[s] = rng.uniform(0.5, 2, n)
    return build_graph(X, obs, WeightSpec("gaussian", len(labels)), labels=labels)


def no_factors(vars_, A):
    return DynamicsBasisConfig(vars_, derivatives=(), special_columns=(), degree_cap=A)


def test_smallest_enumerations():
    assert [t.label for t in enumerate_dynamics_terms(no_factors(("v",), 1))] == ["1", "v"]
    labels = [t.label for t in enumerate_dynamics_terms(no_factors(("v1", "v2"), 2))]
    assert labels == ["1", "v1", "v2", "v1^2", "v1*v2", "v2^2"]


def test_default_derivative_list():
    d = default_derivatives()
    assert len(d) == 14 and len(set(d)) == 14
    assert ("phi", "e12", "e12") in d and ("phi", "phi", "phi") in d
    assert len(default_derivatives(symmetric=False)) == 17


def test_paper_configuration_count():
    cfg = DynamicsBasisConfig()
    terms = enumerate_dynamics_terms(cfg)
    assert cfg.n_factors == 18
    # 35 bare monomials of degree <= 3 plus 18 factors times 15 monomials of degree <= 2
    assert len(terms) == 305 == dynamics_term_count(4, 3, 18)
    alt = DynamicsBasisConfig(factor_counts_toward_degree=False)
    assert len(enumerate_dynamics_terms(alt)) == 665 == dynamics_term_count(4, 3, 18, False)


@given(st.integers(1, 4), st.integers(0, 3), st.integers(0, 3), st.integers(0, 2), st.booleans())
def test_dynamics_count_matches_closed_form(m, A, n_der, n_spec, counts):
    vars_ = tuple(f"v{k}" for k in range(m))
    cfg = DynamicsBasisConfig(vars_, derivatives=[("v0",) * (k + 1) for k in range(n_der)],
                              special_columns=[f"s{k}" for k in range(n_spec)], degree_cap=A,
                              factor_counts_toward_degree=counts)
    terms = enumerate_dynamics_terms(cfg)
    assert len(terms) == dynamics_term_count(m, A, n_der + n_spec, counts)
    assert len(set(terms)) == len(terms)
    cap = A - 1 if counts else A
    for t in terms:
        assert not (t.derivative and t.special)
        assert t.degree <= (cap if (t.derivative or t.special) else A)


def test_monomials_degree_order():
    ms = monomials(("a", "b", "c"), 3)
    assert len(ms) == math.comb(6, 3)
    degrees = [sum(e for _, e in m) for m in ms]
    assert degrees == sorted(degrees)


def test_descriptor_rules_and_round_trip():
    with pytest.raises(BasisError):
        TermDescriptor((("a", 1),), derivative=("psi", ("a",)), special="L1")
    with pytest.raises(BasisError):
        TermDescriptor((("a", -1),))
    t = TermDescriptor((("e12", 2), ("phi", 0)), derivative=("psi", ("phi", "e12", "e12")))
    assert t.label == "d3(psi;phi,e12,e12)*e12^2" and t.degree == 2
    assert descriptor_from_dict(json.loads(json.dumps(t.to_dict()))) == t
    s = TaylorTerm(("e22", "e22"))
    assert s.label == "T2(e22,e22)"
    assert descriptor_from_dict(s.to_dict()) == s
    assert TermDescriptor().label == "1"


def test_build_dynamics_basis_columns(rng):
    g = small_graph(rng)
    cfg = DynamicsBasisConfig(degree_cap=2)
    b = build_dynamics_basis(g, cfg, target="psi")
    assert b.P == dynamics_term_count(4, 2, 18) and not b.fixed_mask.any()
    lab = list(b.labels)
    k = lab.index("d2(psi;phi,e11)*e12")
    ref = partial_derivative(g, g.column("psi"), ["phi", "e11"]) * g.column("e12")
    np.testing.assert_allclose(b.X[:, k], ref, rtol=1e-14)
    k = lab.index("L2*phi")
    np.testing.assert_allclose(b.X[:, k], g.column("L2") * g.column("phi"))
    np.testing.assert_array_equal(b.X[:, lab.index("1")], 1.0)
    again = build_dynamics_basis(g, cfg, target="psi")
    assert again.labels == b.labels and np.array_equal(again.X, b.X)


def test_build_dynamics_basis_errors(rng):
    g = small_graph(rng)
    with pytest.raises(BasisError, match="missing column 'L3'"):
        build_dynamics_basis(g, DynamicsBasisConfig(special_columns=("L3",), degree_cap=1))
    with pytest.raises(BasisError, match="state component"):
        build_dynamics_basis(g, DynamicsBasisConfig(derivatives=[("psi",)], degree_cap=1))
    with pytest.raises(BasisError):
        DynamicsBasisConfig(degree_cap=-1)


@pytest.mark.parametrize("q, k, P", [(4, 4, 341), (2, 2, 7), (1, 3, 4), (3, 0, 1)])
def test_taylor_counts(q, k, P):
    vars_ = tuple(f"x{a}" for a in range(q))
    assert len(enumerate_taylor_terms(TaylorBasisConfig(k, vars_))) == P == taylor_term_count(q, k)


@pytest.mark.parametrize("q, k", list(itertools.product(range(1, 5), range(0, 5))))
def test_taylor_count_formula(q, k):
    vars_ = tuple(f"x{a}" for a in range(q))
    assert len(enumerate_taylor_terms(TaylorBasisConfig(k, vars_))) == sum(q**l for l in range(k + 1))
    sym = enumerate_taylor_terms(TaylorBasisConfig(k, vars_, symmetric=True))
    assert len(sym) == taylor_term_count(q, k, symmetric=True)
    # multiplicities account for every ordered tuple
    assert sum(t.multiplicity for t in sym) == taylor_term_count(q, k)


def test_taylor_order_zero(rng):
    g = small_graph(rng)
    b = build_taylor_basis(g, "psi", TaylorBasisConfig(0, base_index=3))
    assert b.P == 1 and b.fixed_mask.tolist() == [True]
    np.testing.assert_array_equal(b.X[:, 0], g.column("psi")[3])
    np.testing.assert_array_equal(b.predict([0.0]), g.column("psi")[3])


def test_taylor_columns(rng):
    g = small_graph(rng)
    f = g.column("psi")
    b = build_taylor_basis(g, f, TaylorBasisConfig(2, ("phi", "e12"), base_index=2))
    assert b.P == 7
    k = b.labels.index("T2(e12,phi)")
    d = partial_derivative(g, f, ["e12", "phi"])[2]
    dx = g.X - g.X[2]
    np.testing.assert_allclose(b.X[:, k], d * dx[:, 2] * dx[:, 0] / 2, rtol=1e-14)
    np.testing.assert_array_equal(b.y, f)


def test_taylor_errors(rng):
    g = small_graph(rng)
    with pytest.raises(BasisError, match="base index"):
        build_taylor_basis(g, "psi", TaylorBasisConfig(1, base_index=12))
    with pytest.raises(BasisError, match="unknown Taylor variable"):
        build_taylor_basis(g, "psi", TaylorBasisConfig(1, ("phi", "e33")))
    with pytest.raises(BasisError):
        TaylorBasisConfig(9)


@given(st.integers(0, 2**32 - 1), st.integers(0, 11))
def test_taylor_base_point_consistency(seed, base):
    rng = np.random.default_rng(seed)
    g = small_graph(rng)
    b = build_taylor_basis(g, "psi", TaylorBasisConfig(2, base_index=base))
    coef = rng.standard_normal(b.P) * 10
    assert b.predict(coef)[base] == g.column("psi")[base]


def test_operator_basis_normalization_and_pins():
    X = np.array([[1.0, 2.0, 0.0], [1.0, -2.0, 0.0]])
    b = OperatorBasis(X, (TaylorTerm(), TaylorTerm(("a",)), TaylorTerm(("b",))), [True, False, False],
                      y=np.array([3.0, 4.0]))
    np.testing.assert_allclose(b.normalization.nx, [1 / math.sqrt(2), 1 / math.sqrt(8), 1.0])
    assert b.normalization.ny[0] == pytest.approx(0.2)
    np.testing.assert_allclose(np.linalg.norm(b.X_normalized[:, :2], axis=0), 1.0)
    assert b.physical_coef([5.0, 1.0, 1.0])[0] == 1.0
    with pytest.raises(BasisError):
        OperatorBasis(X, (TaylorTerm(),), [True])


def test_renormalize_examples(rng):
    g = small_graph(rng)
    old = build_taylor_basis(g, "psi", TaylorBasisConfig(2))
    coef = old.normalized_coef(np.r_[1.0, rng.standard_normal(old.P - 1)])
    np.testing.assert_allclose(renormalize_for_new_data(old, coef, old), coef, rtol=1e-15)

    new = OperatorBasis(2 * old.X, old.descriptors, old.fixed_mask, 2 * old.y)
    coef_new = renormalize_for_new_data(old, coef, new)
    np.testing.assert_allclose(coef_new, coef, rtol=1e-13)
    p_old = old.predict(old.physical_coef(coef))
    p_new = new.predict(new.physical_coef(coef_new))
    np.testing.assert_allclose(p_new, 2 * p_old, rtol=1e-12, atol=1e-12 * np.abs(p_old).max())
    assert new.physical_coef(coef_new)[0] == 1.0

    other = build_taylor_basis(g, "psi", TaylorBasisConfig(1))
    with pytest.raises(BasisError, match="terms"):
        renormalize_for_new_data(old, coef, other)
