import math

import numpy as np
import pytest

from hjbpinn.bounds import (BoundInputs, covering_count_bound, default_regime_s,
                            min_width_for, perturbation_constants,
                            perturbed_risk_bound, s_threshold, theorem1_report,
                            theorem2_report)

SIGMOID_CURV = 1.0 / (6.0 * math.sqrt(3.0))

# Symbolically evaluated coefficients at the reference inputs below
# (n=2, k=1, W=1, C=(1, 1/4, 1/(6*sqrt(3))), lambdas=1, B=T=1, M=G=2),
# frozen to 17 significant digits.
FROZEN = {
    "reach": 2.4142135623730949e+00,
    "residual_linear": 9.2497949347088293e-01,
    "linear": 3.7962998370305256e+00,
    "quadratic": 4.7334442431320883e-01,
    "cubic": 1.7396167479944222e-01,
    "quartic": 1.7926247183358831e-02,
}


def reference_inputs(**over):
    base = dict(
        space_dim=2, width=1, weight_radius=1.0, output_bound=1.0,
        gradient_bound=0.25, curvature_bound=SIGMOID_CURV, box_halfwidth=1.0,
        horizon=1.0, label_bound=2.0, init_bound=2.0, lambda_init=1.0,
        lambda_sup=1.0, noise_var=0.5, eta=0.1, delta=0.5, n_sup=3276,
        n_init=100,
    )
    base.update(over)
    return BoundInputs(**base)


def test_constants_match_frozen_regression_values():
    pc = perturbation_constants(reference_inputs())
    for name, want in FROZEN.items():
        got = getattr(pc, name)
        assert abs(got - want) <= 1e-12 * abs(want), name


def test_constants_match_symbolic_evaluation():
    sp = pytest.importorskip("sympy")
    n, k = sp.Integer(2), sp.Integer(1)
    W, C1 = sp.Integer(1), sp.Integer(1)
    C2 = sp.Rational(1, 4)
    C3 = 1 / (6 * sp.sqrt(3))
    B = T = sp.Integer(1)
    M = G = sp.Integer(2)
    half = sp.Rational(1, 2)
    V = sp.sqrt(n) * B + T
    wcv = W * C3 * V + C2
    cnk = C3 * n * k
    b1 = 2 * (wcv * (1 + 2 * W * C2) + cnk * W) * (W * C2 * (1 + W * C2) + cnk * W**2)
    a1 = C2 * V * (C1 + M) + C2 * sp.sqrt(n) * B * (C1 + G) + b1
    inner = C2 * (half + W * (C3 * V + C2**2 + 1)) + W * (C3 * V / 2 + cnk)
    a2 = (cnk + wcv**2) * (W * C2 * (1 + W * C2) + cnk * W**2) / 4 \
        + (wcv * (half + W * C2) + cnk * W) * inner
    a3 = (cnk + wcv) * (wcv * (half + W * C2) + cnk * W) / 4 \
        + (cnk + wcv**2) * inner / 4
    a4 = (cnk + wcv) * (cnk + wcv**2) / 16
    pc = perturbation_constants(reference_inputs())
    for got, expr in [(pc.reach, V), (pc.residual_linear, b1), (pc.linear, a1),
                      (pc.quadratic, a2), (pc.cubic, a3), (pc.quartic, a4)]:
        assert abs(got - float(sp.N(expr, 30))) <= 1e-12 * abs(got)


def test_constants_vanish_without_curvature_or_gradient():
    pc = perturbation_constants(reference_inputs(gradient_bound=0.0,
                                                 curvature_bound=0.0))
    assert pc.residual_linear == 0.0
    assert pc.linear == 0.0
    assert pc.quadratic == 0.0
    assert pc.cubic == 0.0
    assert pc.quartic == 0.0


def test_reach_formula():
    pc = perturbation_constants(reference_inputs())
    assert pc.reach == pytest.approx(math.sqrt(2.0) + 1.0, rel=1e-15)


def test_perturbed_risk_bound_polynomial():
    pc = perturbation_constants(reference_inputs())
    assert perturbed_risk_bound(1.3, pc, 0.0) == 1.3
    from hjbpinn.bounds import RiskPerturbationBound
    unit = RiskPerturbationBound(reach=0.0, residual_linear=0.0, linear=1.0,
                                 quadratic=0.0, cubic=0.0, quartic=0.0)
    assert perturbed_risk_bound(0.0, unit, 0.1) == pytest.approx(0.1)
    etas = np.linspace(0.0, 2.0, 50)
    vals = [perturbed_risk_bound(0.0, pc, e) for e in etas]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_threshold_examples():
    # mu*eta = var and eta = 2*var cancel exactly
    var = 0.34
    assert s_threshold(1.0, 0.5, 2 * var, var) == pytest.approx(0.0, abs=1e-15)
    assert s_threshold(0.5, 0.2, 0.1, 0.5) == pytest.approx(-0.255, rel=1e-12)
    # affine in eta with slope mu/(2 lambda) - 1/4
    lam, mu, var = 0.7, 0.9, 0.25
    s1 = s_threshold(lam, mu, 1.0, var)
    s2 = s_threshold(lam, mu, 2.0, var)
    assert s2 - s1 == pytest.approx(mu / (2 * lam) - 0.25, rel=1e-12)
    with pytest.raises(ValueError):
        s_threshold(0.0, 0.5, 0.1, 0.5)


def test_covering_count_examples():
    cc = covering_count_bound(6, 1.0, 0.5)
    assert cc.count == pytest.approx(884736.0, rel=1e-12)
    assert math.exp(cc.log_count) == pytest.approx(cc.count, rel=1e-12)
    d = 3
    assert covering_count_bound(d, 2.0, 2 * 2.0 * math.sqrt(d)).count == pytest.approx(1.0)
    big = covering_count_bound(1000, 10.0, 0.01)
    assert math.isinf(big.count)
    assert big.log_count == pytest.approx(1000 * math.log(2 * 10 * math.sqrt(1000) / 0.01))


def test_theorem1_vacuous_example():
    rep = theorem1_report(reference_inputs(label_bound=2.0, eta=0.1, delta=0.5,
                                           n_sup=3276))
    want_rhs = 3276 * 0.01 / (144 * 16) - 2 * math.log(8.0)
    assert rep.rhs == pytest.approx(want_rhs, rel=1e-12)
    assert rep.rhs < 0
    assert rep.vacuous
    assert rep.satisfied
    assert rep.min_param_count == 0


def test_theorem1_monotonicities():
    base = reference_inputs(n_sup=10**6, eta=0.3, label_bound=2.0)
    rep = theorem1_report(base)
    assert not rep.vacuous
    # rhs increases with sample count
    rhs = [theorem1_report(reference_inputs(n_sup=n, eta=0.3)).rhs
           for n in (10**4, 10**5, 10**6)]
    assert rhs[0] < rhs[1] < rhs[2]
    # rhs decreases in delta and in the label bound
    assert theorem1_report(reference_inputs(n_sup=10**6, eta=0.3, delta=0.9)).rhs < rep.rhs
    assert theorem1_report(reference_inputs(n_sup=10**6, eta=0.3, label_bound=3.0)).rhs < rep.rhs
    # lhs nondecreasing in d_N for d_N >= 3 at default W, eta
    lhs = [theorem1_report(reference_inputs(width=k, n_sup=10**6, eta=0.3)).lhs
           for k in (1, 2, 4, 8)]
    assert all(b >= a for a, b in zip(lhs, lhs[1:]))
    # minimal satisfying size nondecreasing in sample count
    mins = [min_width_for(reference_inputs(n_sup=n, eta=0.3))
            for n in (10**4, 10**5, 10**6)]
    assert mins[0] <= mins[1] <= mins[2]


def test_delta_to_one_always_satisfied():
    rep = theorem1_report(reference_inputs(delta=1 - 1e-12, n_sup=10**9, eta=0.5))
    assert rep.rhs < 0
    assert rep.vacuous


def test_min_width_brute_force():
    bi = reference_inputs(n_sup=2 * 10**5, eta=0.4, label_bound=2.0)
    rep = theorem1_report(bi)
    d = min_width_for(bi)
    assert d >= 1

    def lhs(dd):
        return dd * (math.log(dd) + math.log(4 * bi.weight_radius**2 / bi.eta**2))

    assert lhs(d) >= rep.rhs
    if d > 1:
        assert lhs(d - 1) < rep.rhs


def test_regime_defaults_and_violations():
    assert default_regime_s(0.5, 1.0) == 0.125
    assert default_regime_s(2.0, 1.0) == 2.0
    assert default_regime_s(1.0, 3.0) == 2.5
    with pytest.raises(ValueError, match="lambda_sup"):
        theorem1_report(reference_inputs(lambda_sup=0.5, s=0.3))
    with pytest.raises(ValueError, match="lambda_sup"):
        theorem1_report(reference_inputs(lambda_sup=2.0, s=0.9))
    with pytest.raises(ValueError, match="2\\*C1/3"):
        theorem1_report(reference_inputs(lambda_sup=1.0, s=0.5))
    # defaults are inside their regimes
    for lam in (0.5, 1.0, 2.0):
        theorem1_report(reference_inputs(lambda_sup=lam))


def test_theorem2_mirrors_theorem1():
    bi = reference_inputs(label_bound=2.0, init_bound=2.0, n_sup=5000, n_init=5000)
    r1 = theorem1_report(bi)
    r2 = theorem2_report(bi)
    assert r1.rhs == r2.rhs
    assert r1.lhs == r2.lhs
    assert r1.satisfied == r2.satisfied
    assert r1.critical_samples == r2.critical_samples
    # empty initial set is vacuous
    assert theorem2_report(reference_inputs(n_init=0)).vacuous


def test_amplitude_clamp_warns():
    with pytest.warns(UserWarning, match="clamp"):
        rep = theorem1_report(reference_inputs(label_bound=0.5))
    assert rep.effective_amplitude_bound > 1.0


def test_witness_margin_definition():
    bi = reference_inputs(eta=0.2)
    rep = theorem1_report(bi)
    pc = rep.constants
    want = rep.s + pc.linear + pc.quadratic * 0.2 + pc.cubic * 0.04 + pc.quartic * 0.008
    assert rep.witness_margin == pytest.approx(want, rel=1e-12)


def test_sample_ceiling_positive_and_json_safe():
    rep = theorem1_report(reference_inputs())
    assert rep.sample_ceiling > 0
    d = rep.to_json_dict()
    assert {"V", "b1", "a1", "a2", "a3", "a4", "S_eta", "N_c", "lhs", "rhs",
            "regime", "vacuous", "min_d_N"} <= set(d) | {"min_d_N"}
    assert d["S_eta"] == rep.correlation_threshold


def test_leading_order_of_linear_coefficient():
    # linear coefficient ~ 2 * C3^2 * k^2 * W^3 * n^2 for large n
    k, W = 3, 1.5
    c3 = SIGMOID_CURV * 2.0
    n = 10**4
    bi = reference_inputs(space_dim=n, width=k, weight_radius=W,
                          curvature_bound=c3, gradient_bound=0.5,
                          output_bound=2.0)
    pc = perturbation_constants(bi)
    assert pc.linear / n**2 == pytest.approx(2 * c3**2 * k**2 * W**3, rel=0.05)


def test_input_validation():
    with pytest.raises(ValueError):
        reference_inputs(eta=0.0)
    with pytest.raises(ValueError):
        reference_inputs(delta=1.0)
    with pytest.raises(ValueError):
        reference_inputs(width=0)
    assert reference_inputs().param_count == 3
