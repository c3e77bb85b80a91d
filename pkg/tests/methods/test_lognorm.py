import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctmc.bounds._utils.exceptions import HypothesisError, InvalidParameterError
from ctmc.bounds.certificates import Method, Norm, SampledRate, sample_rate
from ctmc.bounds.matrices import DenseMatrixFn, WeightVector, build_A, build_Bstar
from ctmc.bounds.methods.lognorm import (
    alpha_functions,
    decay_parameter_bound,
    decay_parameter_weights,
    ergodicity_bound,
    log_norm,
    lower_bound,
)
from ctmc.bounds.model.structures import ChainModel, RateFunction
from tests.doctest_fixtures import get_random_birth_death


class TestLogNorm:
    @pytest.mark.parametrize(
        "matrix, expected",
        [
            ([[-2.0, 1.0], [1.0, -2.0]], -1.0),
            ([[-3.0, -1.0], [2.0, -1.0]], 0.0),
            ([[4.5]], 4.5),
        ],
    )
    def test_values(self, matrix, expected) -> None:
        assert log_norm(np.array(matrix)) == pytest.approx(expected)

    def test_bounds_spectral_abscissa(self, rng) -> None:
        for _ in range(20):
            M = rng.normal(size=(4, 4))
            assert np.max(np.linalg.eigvals(M).real) <= log_norm(M) + 1e-12

    def test_requires_square(self) -> None:
        with pytest.raises(InvalidParameterError):
            log_norm(np.ones((2, 3)))


class TestAlphaFunctions:
    def test_envelopes_bracket_columns(self, periodic_bd_model, grid) -> None:
        pair = alpha_functions(build_Bstar(periodic_bd_model), grid)
        columns = np.vstack([sample_rate(r, grid) for r in pair.per_state])
        np.testing.assert_allclose(sample_rate(pair.alpha, grid), columns.min(axis=0), atol=1e-12)
        np.testing.assert_allclose(sample_rate(pair.beta, grid), columns.max(axis=0), atol=1e-12)

    def test_column_functionals(self, asymmetric_bd) -> None:
        pair = alpha_functions(build_Bstar(asymmetric_bd))
        assert [a.constant for a in pair.per_state] == pytest.approx([2.0, 3.0])


class TestErgodicityBound:
    def test_unit_weights(self, bd_model) -> None:
        cert = ergodicity_bound(bd_model)
        assert cert.method is Method.LOGNORM
        assert cert.norm is Norm.L1
        assert cert.constant == 1.0
        assert cert.rate == RateFunction(1.0)
        assert cert.sharp
        assert cert.metadata["ergodic"] is True

    def test_periodic_chain(self, periodic_bd_model, grid) -> None:
        cert = ergodicity_bound(periodic_bd_model, grid=grid)
        assert cert.is_ergodic
        assert np.all(sample_rate(cert.rate, grid) <= sample_rate(cert.lower_rate, grid) + 1e-12)
        assert cert.bound_factor(3.0) <= 1.0

    def test_weights_change_rate(self, asymmetric_bd) -> None:
        plain = ergodicity_bound(asymmetric_bd, horizon=(0.0, 10.0))
        with pytest.warns(UserWarning):
            crude = ergodicity_bound(asymmetric_bd, WeightVector.of([1.0, 2.0]))
        d, _ = decay_parameter_weights(build_Bstar(asymmetric_bd).constant)
        tuned = ergodicity_bound(asymmetric_bd, d)
        assert plain.rate.constant == pytest.approx(2.0)
        assert crude.rate.constant == pytest.approx(0.0)
        assert tuned.rate.constant == pytest.approx(5.0 - np.sqrt(7.0), rel=1e-8)

    def test_nonpositive_mean_warns(self, nonergodic_columns_bd) -> None:
        with pytest.warns(UserWarning, match="not positive"):
            cert = ergodicity_bound(nonergodic_columns_bd)
        assert not cert.is_ergodic
        assert cert.metadata["ergodic"] is False

    def test_hypothesis_refused(self, small_example_two) -> None:
        with pytest.raises(HypothesisError, match="essentially non-negative"):
            ergodicity_bound(small_example_two, grid=np.linspace(0.0, 1.0, 51))

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"d": WeightVector.of([2.0, 1.0])},
            {"d": WeightVector.of([1.0, -1.0], signed=True)},
            {"horizon": (1.0, 1.0)},
        ],
    )
    def test_invalid_parameters(self, bd_model, kwargs) -> None:
        with pytest.raises(InvalidParameterError):
            ergodicity_bound(bd_model, **kwargs)

    def test_lower_bound(self, bd_model) -> None:
        cert = ergodicity_bound(bd_model, horizon=(1.0, np.inf))
        assert cert.valid_from == 1.0
        assert lower_bound(cert, 2.0) == pytest.approx(np.exp(-1.0))
        assert lower_bound(cert, 2.0, s=0.0) == pytest.approx(np.exp(-2.0))


class TestDecayParameter:
    def test_two_by_two(self) -> None:
        d, alpha = decay_parameter_weights(np.array([[-4.0, 3.0], [2.0, -6.0]]))
        assert alpha == pytest.approx(5.0 - np.sqrt(7.0), rel=1e-9)
        assert d.d[0] == 1.0

    def test_equal_column_sums(self, asymmetric_bd) -> None:
        Bstar = build_Bstar(asymmetric_bd).constant
        d, alpha = decay_parameter_weights(Bstar)
        sums = (d.d @ Bstar) / d.d
        np.testing.assert_allclose(sums, -alpha, atol=1e-9)

    @pytest.mark.parametrize("S, lam, mu", [(3, 1.0, 2.0), (5, 2.0, 1.0), (8, 0.5, 3.0)])
    def test_matches_spectral_gap(self, S, lam, mu) -> None:
        model = ChainModel.birth_death(S, birth={i: lam for i in range(S)}, death={i: mu for i in range(1, S + 1)})
        cert = decay_parameter_bound(model)
        eigs = np.sort(np.linalg.eigvals(build_A(model).constant).real)
        assert cert.rate.constant == pytest.approx(-eigs[-2], rel=1e-7)
        assert cert.lower_rate == cert.rate
        assert cert.sharp
        assert cert.metadata["decay_parameter"] == cert.rate.constant

    @settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=0, max_value=2**32 - 1), st.integers(min_value=2, max_value=10))
    def test_random_chains(self, seed, S) -> None:
        Bstar = build_Bstar(get_random_birth_death(np.random.default_rng(seed), S)).constant
        d, alpha = decay_parameter_weights(Bstar)
        scale = max(1.0, float(np.max(np.abs(np.diag(Bstar)))))
        np.testing.assert_allclose((d.d @ Bstar) / d.d, -alpha, rtol=0.0, atol=1e-9 * scale)
        assert alpha == pytest.approx(-np.max(np.linalg.eigvals(Bstar).real), rel=1e-8, abs=1e-8)

    @pytest.mark.parametrize("seed", [22, 32])
    def test_slowly_converging_chains(self, seed) -> None:
        model = get_random_birth_death(np.random.default_rng(seed))
        cert = decay_parameter_bound(model)
        gap = -np.max(np.linalg.eigvals(build_Bstar(model).constant).real)
        assert cert.rate.constant == pytest.approx(gap, rel=1e-8, abs=1e-8)

    def test_shift_keeps_perron_vector(self) -> None:
        Bstar = np.array([[-3.0, 0.5, 0.0], [2.0, -1.0, 0.25], [0.0, 0.5, -0.5]])
        d, alpha = decay_parameter_weights(Bstar)
        values, vectors = np.linalg.eig(Bstar.T)
        x = np.real(vectors[:, np.argmax(values.real)])
        np.testing.assert_allclose(d.d, x / x[0], rtol=1e-9)
        assert alpha == pytest.approx(-np.max(values.real), rel=1e-10)

    def test_refuses_periodic(self, periodic_bd_model) -> None:
        with pytest.raises(HypothesisError):
            decay_parameter_bound(periodic_bd_model)

    def test_refuses_zero_rate(self) -> None:
        with pytest.raises(HypothesisError):
            decay_parameter_bound(ChainModel.birth_death(2, birth={0: 1.0}, death={1: 1.0, 2: 1.0}))


def test_sampled_envelope_rate(grid):
    f = RateFunction(1.0, ((1, 1.0, 0.0),))
    g = RateFunction(1.0, ((1, -1.0, 0.0),))
    Bss = DenseMatrixFn.from_entries(2, [(0, 0, -1.0 * f), (1, 1, -1.0 * g)])
    pair = alpha_functions(Bss, grid)
    assert isinstance(pair.alpha, SampledRate)
    assert pair.alpha.mean() == pytest.approx(1.0 - 2.0 / np.pi, abs=1e-4)
