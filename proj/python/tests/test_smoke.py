import json
import math

import numpy as np
import pytest

import edmstress as es


def test_generated_instance_is_an_edm():
    inst = es.generate_instance(6, 2, 3)
    assert inst.D.shape == (6, 6)
    assert np.allclose(inst.D, es.edm_of(inst.P_bar))
    assert np.allclose(np.diag(inst.D), 0.0)
    again = es.Instance.from_json(inst.to_json())
    assert np.array_equal(again.D, inst.D)
    assert again.hash() == inst.hash()


def test_adjoint_pair():
    rng = np.random.default_rng(0)
    G = rng.standard_normal((5, 5))
    G = G + G.T
    S = rng.standard_normal((5, 5))
    S = S + S.T
    lhs = np.sum(es.lindenstrauss(G) * S)
    rhs = np.sum(G * es.lindenstrauss_adjoint(S))
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_two_point_example():
    inst = es.Instance()
    inst.n, inst.d = 2, 1
    inst.D = np.array([[0.0, 1.0], [1.0, 0.0]])
    ctx = es.EvalContext(inst, es.Formulation.P)
    x = np.array([0.0, 2.0])
    assert es.value(x, ctx) == pytest.approx(9.0)
    assert np.allclose(es.gradient(x, ctx), [-24.0, 24.0])


def test_gradient_matches_central_differences():
    inst = es.generate_instance(7, 2, 1)
    ctx = es.EvalContext(inst, es.Formulation.L)
    x = np.random.default_rng(4).standard_normal(ctx.dim)
    g = es.gradient(x, ctx)
    h = 1e-6
    fd = np.array([(es.value(x + h * e, ctx) - es.value(x - h * e, ctx)) / (2 * h)
                   for e in np.eye(ctx.dim)])
    assert np.linalg.norm(g - fd) <= 1e-6 * np.linalg.norm(g)
    H = es.hessian(x, ctx)
    assert np.allclose(H, H.T)


def test_trust_region_reaches_global_for_small_n():
    inst = es.generate_instance(3, 2, 0)
    ctx = es.EvalContext(inst, es.Formulation.P)
    rep = es.trust_region_minimize(es.random_start(ctx, 5), ctx)
    assert rep.converged
    assert rep.classification == es.Classification.GLOBAL
    assert all(b <= a for a, b in zip(rep.trace_f, rep.trace_f[1:]))


def test_line_instance_certifies():
    inst = es.generate_instance(50, 1, 0)
    opts = es.SolveOptions()
    opts.trace = False
    reps = es.multi_start_scan(inst, es.Formulation.L, 20, opts)
    cands = [r for r in reps if r.classification == es.Classification.LNGM_CANDIDATE]
    assert cands
    ctx = es.EvalContext(inst, es.Formulation.L)
    cert = es.certify_lngm(cands[0].x, ctx, 1e-3)
    assert cert.certified, cert.reason
    assert cert.alpha < 0.5
    assert cert.fbar == pytest.approx(cert.f / 2)
    doc = json.loads(cert.to_json(inst))
    assert doc["verdict"] == "CERTIFIED"
    assert doc["instance_hash"] == inst.hash()


def test_plug_in_arithmetic():
    k = es.kantorovich_from_scalars(1.0e-4, 1.3e-5, 651.0)
    assert k.alpha == pytest.approx(8.7e-7, rel=0.05)
    assert k.r0 == pytest.approx(1.3e-5, rel=0.05)
    assert math.ceil(es.lipschitz_gamma_formula(2127.9, 50, 1e-3)) == 145


def test_errors_map_to_python_exceptions():
    with pytest.raises(es.DimensionError):
        es.lindenstrauss(np.zeros((2, 3)))
    inst = es.generate_instance(6, 2, 0)
    ctx = es.EvalContext(inst, es.Formulation.L)
    with pytest.raises(es.DomainError):
        es.certify_lngm(np.zeros(ctx.dim), ctx, 1e-3)
    with pytest.raises(es.Error):
        es.run_check_suite("nope")


def test_check_suite_from_python():
    results = es.run_check_suite("equivalence")
    assert results and all(r.passed for r in results)
