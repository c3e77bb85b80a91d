import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctmc.bounds._utils.exceptions import HypothesisError
from ctmc.bounds.certificates import Method, Norm, rate_from_record, sample_rate
from ctmc.bounds.matrices import build_Bstar, weight_conjugate
from ctmc.bounds.methods.lyapunov import (
    antisym_offdiag_bound,
    antisymmetrizing_weights,
    batch_arrival_bound,
    batch_arrival_rate,
    beta_star_eig,
    beta_star_squares,
    birth_death_bound,
    symmetrize_bd,
    symmetrized_matrix,
)
from ctmc.bounds.model.processing import example_one, uniform_batch_arrival
from ctmc.bounds.model.structures import ChainModel, RateFunction
from ctmc.bounds.transient import find_tstar
from tests.doctest_fixtures import get_random_birth_death

EXAMPLE_ONE_REFERENCE = RateFunction(2.0, ((1, 1.0, 1.0),))


def _symmetrized(model: ChainModel) -> np.ndarray:
    return symmetrized_matrix(model)[1]


class TestCompletingSquares:
    def test_symmetrizing_weights(self, asymmetric_bd) -> None:
        Bss = weight_conjugate(build_Bstar(asymmetric_bd), symmetrize_bd(asymmetric_bd)).constant
        np.testing.assert_allclose(Bss, Bss.T, atol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=0, max_value=2**32 - 1))
    def test_agrees_with_eigensolver(self, seed) -> None:
        Bss = _symmetrized(get_random_birth_death(np.random.default_rng(seed)))
        decomposition = beta_star_squares(Bss)
        assert decomposition.beta_star == pytest.approx(beta_star_eig(Bss), abs=1e-8)
        assert decomposition.residual(Bss) < 1e-8 * max(1.0, np.abs(Bss).max())

    def test_rounding_outside_band(self) -> None:
        Bss = np.array([[-3.0, 1.0, 1e-15], [1.0, -3.0, 1.0], [1e-15, 1.0, -3.0]])
        dec = beta_star_squares(Bss)
        assert dec.beta_star == pytest.approx(3.0 - np.sqrt(2.0), abs=1e-8)

    def test_witnesses(self, asymmetric_bd) -> None:
        Bss = _symmetrized(asymmetric_bd)
        dec = beta_star_squares(Bss, asymmetric_bd)
        assert dec.size == 2
        assert all(phi > 0.0 for phi in dec.phis)
        assert dec.terminal >= 0.0
        np.testing.assert_allclose(dec.alphas, np.sqrt(dec.phis))
        assert {direction for _, _, direction in dec.direction_log} == {"forward", "reverse"}
        lowers = [lower for lower, _, _ in dec.direction_log]
        uppers = [upper for _, upper, _ in dec.direction_log]
        assert lowers == sorted(lowers)
        assert uppers == sorted(uppers, reverse=True)
        assert dec.to_record()["steps"] == len(dec.direction_log)

    def test_single_state(self) -> None:
        dec = beta_star_squares(np.array([[-5.0]]))
        assert dec.beta_star == pytest.approx(5.0)
        assert dec.phis == ()

    @pytest.mark.parametrize(
        "matrix, error",
        [
            ([[-2.0, 1.0], [0.5, -2.0]], HypothesisError),
            ([[-2.0, 0.0, 1.0], [0.0, -2.0, 0.0], [1.0, 0.0, -2.0]], HypothesisError),
            ([[1.0]], HypothesisError),
            ([[-1.0, 2.0], [2.0, -1.0]], HypothesisError),
        ],
    )
    def test_refused(self, matrix, error) -> None:
        with pytest.raises(error):
            beta_star_squares(np.array(matrix))

    def test_refuses_other_classes(self, small_example_one) -> None:
        with pytest.raises(HypothesisError):
            beta_star_squares(np.array([[-1.0]]), small_example_one)


class TestBirthDeathBound:
    def test_certificate(self, bd_model) -> None:
        cert = birth_death_bound(bd_model)
        assert cert.method is Method.LYAPUNOV
        assert cert.norm is Norm.L2
        assert cert.rate.constant == pytest.approx(1.0)
        assert cert.sharp
        assert cert.metadata["construction"] == "squares"

    def test_matches_spectral_gap(self, asymmetric_bd) -> None:
        cert = birth_death_bound(asymmetric_bd)
        assert cert.rate.constant == pytest.approx(5.0 - np.sqrt(7.0), abs=1e-8)

    def test_refuses_periodic(self, periodic_bd_model) -> None:
        with pytest.raises(HypothesisError):
            birth_death_bound(periodic_bd_model)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(min_value=0, max_value=2**32 - 1), st.integers(min_value=3, max_value=12))
    def test_random_chains(self, seed, S) -> None:
        model = get_random_birth_death(np.random.default_rng(seed), S)
        cert = birth_death_bound(model)
        gap = -np.max(np.linalg.eigvals(build_Bstar(model).constant).real)
        assert cert.rate.constant == pytest.approx(beta_star_eig(_symmetrized(model)), abs=1e-8)
        assert cert.rate.constant == pytest.approx(gap, rel=1e-7, abs=1e-8)
        assert cert.metadata["decomposition"]["terminal"] >= 0.0


class TestAntisymmetric:
    def test_uniform_batch_chain(self, uniform_batch_model) -> None:
        cert = antisym_offdiag_bound(uniform_batch_model)
        assert cert.rate.constant == pytest.approx(3.0, abs=1e-12)
        assert cert.metadata["construction"] == "antisymmetric"
        np.testing.assert_allclose(cert.weights.d, [1.0, 1.0, np.sqrt(2.0)])

    def test_example_one_reference_rate(self, small_example_one) -> None:
        cert = antisym_offdiag_bound(small_example_one, envelope=EXAMPLE_ONE_REFERENCE)
        assert cert.rate == EXAMPLE_ONE_REFERENCE
        assert cert.mean_rate == 2.0
        exact = rate_from_record(cert.metadata["exact_rate"])
        grid = np.linspace(0.0, 1.0, 1001)
        assert np.all(sample_rate(exact, grid) >= sample_rate(EXAMPLE_ONE_REFERENCE, grid) - 1e-12)
        np.testing.assert_allclose(np.diff(np.log(cert.weights.d)), np.log(3.0))

    def test_reference_rate_too_large(self, uniform_batch_model) -> None:
        with pytest.raises(HypothesisError, match="exceeds"):
            antisym_offdiag_bound(uniform_batch_model, envelope=RateFunction(3.5))

    def test_no_antisymmetrizing_weights(self, bd_model) -> None:
        with pytest.raises(HypothesisError):
            antisymmetrizing_weights(build_Bstar(bd_model))

    def test_time_varying_ratio(self) -> None:
        model = ChainModel.batch_arrival(
            2, arrivals={2: RateFunction(1.0, ((1, 0.5, 0.0),))}, death={1: 1.0, 2: 1.0}
        )
        with pytest.raises(HypothesisError, match="varies"):
            antisymmetrizing_weights(build_Bstar(model))

    @pytest.mark.parametrize("m", [1.1, 2.7, 90.0])
    def test_example_one_full_size(self, m) -> None:
        cert = antisym_offdiag_bound(example_one(199, m))
        np.testing.assert_allclose(np.diff(cert.weights.log_magnitude), np.log(m), rtol=1e-12)
        assert cert.metadata["construction"] == "antisymmetric"

    def test_example_one_reference_rate_full_size(self) -> None:
        cert = antisym_offdiag_bound(example_one(199, 90.0), envelope=EXAMPLE_ONE_REFERENCE)
        exact = rate_from_record(cert.metadata["exact_rate"])
        grid = np.linspace(0.0, 1.0, 2001)
        assert np.all(sample_rate(exact, grid) >= sample_rate(EXAMPLE_ONE_REFERENCE, grid) - 1e-12)
        gap = cert.diameter(199)
        assert gap <= 2.0
        assert find_tstar(cert, gap, 1e-3) <= 5.0


class TestBatchArrival:
    @pytest.mark.parametrize(
        "lam, mu, expected",
        [
            (1.0, [1.0, 2.0, 3.0], 3.0),
            (1.0, [1.0, 2.0, 100.0], 3.0),
            (0.5, [1.0, 1.0, 1.0, 1.0], 1.0),
            (2.0, [0.1], 0.1),
        ],
    )
    def test_closed_form(self, lam, mu, expected) -> None:
        assert batch_arrival_rate(lam, mu) == pytest.approx(expected)

    def test_certificate_agrees_with_antisymmetric(self) -> None:
        model = uniform_batch_arrival(4, 0.5, [1.0, 2.0, 0.5, 3.0])
        closed = batch_arrival_bound(model)
        generic = antisym_offdiag_bound(model)
        assert closed.rate.constant == pytest.approx(generic.rate.constant, abs=1e-12)
        assert closed.metadata["closed_form"] == pytest.approx(1.0)

    @pytest.mark.parametrize(
        "model",
        [
            ChainModel.batch_arrival(2, arrivals={1: 1.0, 2: 1.0}, death={1: 1.0, 2: 1.0}),
            ChainModel.batch_arrival(3, arrivals={2: 1.0, 3: 2.0}, death={1: 1.0, 2: 1.0, 3: 1.0}),
            ChainModel.batch_arrival(2, arrivals={2: 1.0}, death={2: 1.0}),
        ],
    )
    def test_refused(self, model) -> None:
        with pytest.raises(HypothesisError):
            batch_arrival_bound(model)

    def test_refuses_periodic(self, small_example_one) -> None:
        with pytest.raises(HypothesisError):
            batch_arrival_bound(small_example_one)
