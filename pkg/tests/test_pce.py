import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import PolyModel, random_polynomial, relative_importance_game, squared_coefficient
from soa import basis as b
from soa import pce as P
from soa.errors import InputError
from soa.transform import DistributionSpec, Normal, Uniform


def example_model(x):
    x = np.atleast_2d(x)
    return x[:, 0] + x[:, 0] * x[:, 1]


class Batch:
    def __init__(self, f, d):
        self.f, self.d = f, d

    def evaluate_batch(self, x):
        return self.f(np.asarray(x, dtype=float))

    def __call__(self, x):
        return float(self.f(np.asarray(x, dtype=float).reshape(1, -1))[0])


EXAMPLE = Batch(example_model, 2)


def example_pce(**kw):
    coeffs = {(0, 0): 0.0, (1, 0): 1 / math.sqrt(3), (1, 1): 1 / 3}
    coeffs.update(kw.pop("coeffs", {}))
    return P.Pce(2, coeffs, variance_estimate=kw.pop("sigma2", 4 / 9), **kw)


# ---------------------------------------------------------------- moments


def test_mean_examples():
    assert P.mean(P.Pce(1, {(0,): 2.5}, variance_estimate=0.0)) == 2.5
    assert P.mean(example_pce()) == 0.0


def test_variance_examples():
    assert P.variance(example_pce()) == pytest.approx(4 / 9, abs=1e-15)
    assert P.variance(P.Pce(2, {(0, 0): 3.0})) == 0.0
    assert P.variance(P.Pce(3, {(2, 0, 1): 1.0})) == 1.0


def test_truncation_error_examples():
    assert P.truncation_error(example_pce()) == pytest.approx(0.0, abs=1e-15)
    dropped = P.Pce(2, {(1, 0): 1 / math.sqrt(3)}, variance_estimate=4 / 9)
    assert P.truncation_error(dropped) == pytest.approx(1 / 9, abs=1e-15)
    assert P.truncation_error(P.Pce(2, {(0, 0): 0.0}), 4 / 9) == pytest.approx(4 / 9)


def test_truncation_error_rejects_inconsistent_variance():
    with pytest.raises(InputError):
        P.truncation_error(example_pce(), 0.3)


def test_chebyshev_tail_examples():
    assert P.chebyshev_tail(example_pce(), None, 0.01) == pytest.approx(0.0, abs=1e-25)
    dropped = P.Pce(2, {(1, 0): 1 / math.sqrt(3)}, variance_estimate=4 / 9)
    assert P.chebyshev_tail(dropped, None, 1 / 3) == pytest.approx(1 / 9, abs=1e-15)
    tails = [P.chebyshev_tail(dropped, None, t) for t in (0.1, 1.0, 10.0, 1e6)]
    assert tails == sorted(tails, reverse=True) and tails[-1] < 1e-12
    with pytest.raises(InputError):
        P.chebyshev_tail(dropped, None, 0.0)


def test_partial_variances_and_sobol():
    p = example_pce()
    assert P.partial_variance(p, (1,)) == pytest.approx(1 / 3)
    assert P.partial_variance(p, (1, 2)) == pytest.approx(1 / 9)
    assert P.partial_variance(p, (2,)) == 0.0
    assert math.fsum(P.partial_variances(p).values()) == pytest.approx(P.variance(p))
    assert P.sobol(p, (1,)) == pytest.approx(1 / 3)
    assert P.total_sobol(p, (1,)) == pytest.approx(4 / 9)
    assert P.sobol(p, (2,)) == 0.0
    assert P.total_sobol(p, (2,)) == pytest.approx(1 / 9)
    assert P.sobol(p, (1, 2)) == pytest.approx(P.variance(p))
    with pytest.raises(InputError):
        P.partial_variance(p, ())


def test_sobol_refuses_dependent_inputs():
    dist = DistributionSpec.mvnormal([0, 0], [[1, 0.5], [0.5, 1]])
    p = P.Pce(2, {(1, 0): 1.0}, distribution=dist, variance_estimate=1.0)
    with pytest.raises(InputError, match="independent"):
        P.sobol(p, (1,))


@given(st.integers(0, 2 ** 31 - 1))
@settings(max_examples=30)
def test_sobol_complement_identity(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 5))
    coeffs = {tuple(int(v) for v in rng.integers(0, 3, d)): float(rng.normal()) for _ in range(6)}
    p = P.Pce(d, coeffs)
    sigma2 = P.variance(p)
    for mask in range(1 << d):
        u = [i + 1 for i in range(d) if mask >> i & 1]
        rest = [i for i in range(1, d + 1) if i not in u]
        assert P.sobol(p, u) + P.total_sobol(p, rest) == pytest.approx(sigma2, abs=1e-12)
        assert P.sobol(p, u) <= P.total_sobol(p, u) + 1e-15 or not u


# ---------------------------------------------------------------- q-norm


def test_qnorm_rings():
    assert P.qnorm_ring((3, 0, 0), 0.5) == 3
    assert P.qnorm_ring((1, 1), 0.5) == 4
    assert P.qnorm_ring((2, 1), 1) == 3
    assert P.qnorm_ring((0, 0), 0.5) == 0
    assert P.within_qnorm((1, 1), 0.5, 4) and not P.within_qnorm((1, 1), 0.5, 3)
    ring = P.ring_candidates(2, 0.5, 3)
    assert (3, 0) in ring and (0, 3) in ring and (1, 1) not in ring
    with pytest.raises(InputError):
        P.qnorm_ring((1,), 1.5)


# ---------------------------------------------------------------- construction


def test_build_example_model():
    p = P.build_sparse(EXAMPLE, d=2, cfg=P.SparseConfig(q=1.0, epsilon=1e-10))
    assert set(p.terms) == {(1, 0), (1, 1)}
    assert p.coeffs[(1, 0)] == pytest.approx(1 / math.sqrt(3), abs=1e-10)
    assert p.coeffs[(1, 1)] == pytest.approx(1 / 3, abs=1e-10)
    assert abs(P.mean(p)) < 1e-12
    assert p.converged and P.truncation_error(p) < 1e-10


def test_build_constant_model():
    p = P.build_sparse(Batch(lambda x: np.full(len(x), 2.0), 3), d=3)
    assert p.terms == {} and P.mean(p) == pytest.approx(2.0)
    assert p.converged and len(p.construction_log) == 1


def test_univariate_high_degree_enters_at_ring_three():
    psi = b.tensor_legendre((3, 0, 0))
    model = Batch(lambda x: psi(x), 3)
    p = P.build_sparse(model, d=3, cfg=P.SparseConfig(q=0.5, epsilon=1e-10))
    assert set(p.terms) == {(3, 0, 0)}
    rings = {entry["ring"]: entry for entry in p.construction_log}
    assert [3, 0, 0] in rings[3]["admitted"]
    assert not rings[1]["admitted"] and not rings[2]["admitted"]


def test_non_convergence_is_flagged():
    model = Batch(lambda x: np.sin(4 * x[:, 0]) * np.exp(x[:, 1]), 2)
    p = P.build_sparse(model, d=2, cfg=P.SparseConfig(p_max=2, model_degree_hint=30))
    assert not p.converged
    assert P.truncation_error(p) >= p.epsilon


def test_build_rejects_discrete_inputs():
    from soa.transform import Bernoulli

    with pytest.raises(InputError):
        P.build_sparse(EXAMPLE, DistributionSpec.independent([Bernoulli(), Bernoulli()]))


def test_waiting_set_admits_small_coefficients_one_per_ring():
    psi_small = b.tensor_legendre((0, 1))
    model = Batch(lambda x: example_model(x) + 1e-6 * psi_small(x), 2)
    cfg = P.SparseConfig(kappa_coeff=1e-3, epsilon=1e-14)
    p = P.build_sparse(model, d=2, cfg=cfg)
    ring1 = p.construction_log[1]
    assert ring1["admitted"] == [[1, 0]] and ring1["promoted"] == [0, 1]
    assert p.coeffs[(0, 1)] == pytest.approx(1e-6, rel=1e-8)


def _poly_case(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 4))
    poly = random_polynomial(rng, d, int(rng.integers(1, 5)), int(rng.integers(1, 6)))
    return d, poly


@given(st.integers(0, 2 ** 31 - 1))
@settings(max_examples=25)
def test_parseval_against_exact_projection(seed):
    d, poly = _poly_case(seed)
    p = P.build_sparse(PolyModel(poly, d), d=d, cfg=P.SparseConfig(epsilon=1e-12))
    game = relative_importance_game(poly, d)
    total = float(game.value(tuple(range(1, d + 1))))
    assert P.variance(p) == pytest.approx(total, rel=1e-10, abs=1e-12)
    for alpha, y in p.terms.items():
        assert y * y == pytest.approx(float(squared_coefficient(poly, alpha)), rel=1e-9, abs=1e-12)


@given(st.integers(0, 2 ** 31 - 1))
@settings(max_examples=25)
def test_bessel_and_monotone_remainder(seed):
    d, poly = _poly_case(seed)
    p = P.build_sparse(PolyModel(poly, d), d=d, cfg=P.SparseConfig(epsilon=1e-12))
    assert P.variance(p) <= p.variance_estimate + 1e-8
    rem = [entry["remainder"] for entry in p.construction_log]
    assert all(b_ <= a_ + 1e-15 for a_, b_ in zip(rem, rem[1:]))


@given(st.integers(0, 2 ** 31 - 1), st.data())
@settings(max_examples=25)
def test_partial_variance_error_bounded_by_truncation(seed, data):
    d, poly = _poly_case(seed)
    full = P.build_sparse(PolyModel(poly, d), d=d, cfg=P.SparseConfig(epsilon=1e-12))
    terms = sorted(full.terms)
    keep = data.draw(st.lists(st.sampled_from(terms), unique=True)) if terms else []
    trunc = P.Pce(d, {a: full.coeffs[a] for a in keep}, variance_estimate=full.variance_estimate)
    eps = P.truncation_error(trunc)
    for s, exact in P.partial_variances(full).items():
        gap = exact - P.partial_variance(trunc, s)
        assert -1e-12 <= gap <= eps + 1e-12


def test_dependent_inputs_use_rosenblatt_composition():
    dist = DistributionSpec.independent([Normal(1.0, 2.0)])
    model = Batch(lambda x: x[:, 0], 1)
    p = P.build_sparse(model, dist, P.SparseConfig(p_max=8, epsilon=1e-6, model_degree_hint=60))
    assert P.mean(p) == pytest.approx(1.0, abs=1e-6)
    assert p.variance_estimate == pytest.approx(4.0, rel=1e-2)


def test_affine_uniform_inputs():
    dist = DistributionSpec.independent([Uniform(0.0, 2.0), Uniform(-1.0, 1.0)])
    model = Batch(lambda x: x[:, 0] + x[:, 0] * x[:, 1], 2)
    p = P.build_sparse(model, dist)
    assert P.mean(p) == pytest.approx(1.0)
    # x1 = 1 + u1, so the model is 1 + u1 + u2 + u1 u2
    assert P.variance(p) == pytest.approx(1 / 3 + 1 / 3 + 1 / 9)


def test_config_validation():
    with pytest.raises(InputError):
        P.SparseConfig(q=0.0)
    with pytest.raises(InputError):
        P.SparseConfig(epsilon=0.0)
    with pytest.raises(InputError):
        P.SparseConfig(chebyshev_t=-1.0)


def test_chebyshev_stoppage():
    cfg = P.SparseConfig(use_chebyshev=True, chebyshev_t=0.5, epsilon=1e-12)
    p = P.build_sparse(EXAMPLE, d=2, cfg=cfg)
    assert p.converged and P.chebyshev_tail(p, None, 0.5) < 1e-12


# ---------------------------------------------------------------- leave-one-out


def test_loo_exact_span():
    rng = np.random.default_rng(0)
    x = rng.uniform(-1, 1, (40, 2))
    res = P.loo_validate(EXAMPLE, DistributionSpec.uniform(2), x)
    assert res.l1o <= 1e-10
    assert res.accuracy == pytest.approx(1.0)


def test_loo_constant_model():
    x = np.random.default_rng(1).uniform(-1, 1, (20, 2))
    res = P.loo_validate(Batch(lambda x: np.full(len(x), 3.0), 2), DistributionSpec.uniform(2), x)
    assert res.l1o == pytest.approx(0.0, abs=1e-20) and res.accuracy is None


def test_loo_detects_misfit():
    x = np.random.default_rng(2).uniform(-1, 1, (60, 2))
    res = P.loo_validate(EXAMPLE, DistributionSpec.uniform(2), x, fit=[(0, 0), (1, 0), (0, 1)])
    assert res.l1o > 0 and res.accuracy < 1


def test_loo_callable_fitter():
    x = np.random.default_rng(3).uniform(-1, 1, (30, 2))

    def fit(u, y):
        return lambda v: np.full(len(v), y.mean())

    res = P.loo_validate(EXAMPLE, DistributionSpec.uniform(2), x, fit=fit)
    assert res.l1o > 0


def test_loo_errors():
    dist = DistributionSpec.uniform(2)
    with pytest.raises(InputError):
        P.loo_validate(EXAMPLE, dist, np.zeros((5, 2)))
    with pytest.raises(InputError):
        P.loo_validate(EXAMPLE, dist, np.random.default_rng(0).uniform(-1, 1, (12, 2)),
                       fit=list(b.graded_multi_indices(2, 4)))


# ---------------------------------------------------------------- persistence


def test_json_round_trip():
    p = P.build_sparse(EXAMPLE, d=2)
    q = P.Pce.from_json_obj(p.to_json_obj())
    assert q.coeffs == p.coeffs and q.variance_estimate == p.variance_estimate
    assert q.distribution == p.distribution and q.converged
    with pytest.raises(InputError):
        P.Pce.from_json_obj({"d": 2})


def test_evaluation_reproduces_model():
    p = P.build_sparse(EXAMPLE, d=2)
    u = np.random.default_rng(4).uniform(-1, 1, (50, 2))
    np.testing.assert_allclose(p(u), example_model(u), atol=1e-12)
