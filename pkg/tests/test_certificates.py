import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ctmc.bounds._utils.exceptions import InvalidParameterError, ModelFileError
from ctmc.bounds.certificates import (
    BoundCertificate,
    Method,
    Norm,
    SampledRate,
    conversion_constants,
    pointwise_envelope,
    rate_from_record,
    rate_to_record,
    sample_rate,
)
from ctmc.bounds.matrices import WeightVector
from ctmc.bounds.model.structures import RateFunction

HARMONIC = RateFunction(2.0, ((1, 1.0, 0.0),))


@pytest.fixture
def certificate() -> BoundCertificate:
    return BoundCertificate(
        Method.LYAPUNOV,
        HARMONIC,
        2.0,
        Norm.L2,
        WeightVector.of([1.0, 3.0]),
        sharp=True,
        lower_rate=RateFunction(5.0),
        conversion=(3.5, 2.0),
        model_hash="abc",
        metadata={"construction": "squares"},
    )


class TestSampledRate:
    def test_periodic_extension(self) -> None:
        r = SampledRate(np.array([0.0, 2.0, 0.0]))
        assert r.value(1.25) == pytest.approx(1.0)
        assert r.mean() == pytest.approx(1.0)
        assert r.integral(0.5, 3.5) == pytest.approx(3.0)

    @given(st.floats(0.0, 5.0), st.floats(0.0, 5.0))
    def test_integral_additive(self, s, span) -> None:
        r = SampledRate(sample_rate(HARMONIC, np.linspace(0.0, 1.0, 257)))
        mid = s + span / 2.0
        total = r.integral(s, s + span)
        assert total == pytest.approx(r.integral(s, mid) + r.integral(mid, s + span), abs=1e-9)
        assert total == pytest.approx(HARMONIC.integral(s, s + span), abs=1e-3)

    def test_array_integral(self) -> None:
        r = SampledRate(np.array([1.0, 1.0]))
        np.testing.assert_allclose(r.integral(0.0, np.array([0.5, 1.0, 2.5])), [0.5, 1.0, 2.5])
        assert r.is_constant

    @pytest.mark.parametrize("values", [[1.0], [[1.0, 2.0]], [1.0, np.nan]])
    def test_invalid_samples(self, values) -> None:
        with pytest.raises(InvalidParameterError):
            SampledRate(np.array(values))


class TestEnvelope:
    def test_constant_family(self) -> None:
        assert pointwise_envelope([RateFunction(3.0), RateFunction(1.0)]) == RateFunction(1.0)
        assert pointwise_envelope([RateFunction(3.0), RateFunction(1.0)], lower=False) == RateFunction(3.0)

    def test_dominating_member_is_kept(self) -> None:
        assert pointwise_envelope([RateFunction(4.0), HARMONIC]) is HARMONIC

    def test_crossing_members_are_sampled(self) -> None:
        env = pointwise_envelope([RateFunction(2.0), HARMONIC], points=101)
        assert isinstance(env, SampledRate)
        assert env.supremum() == pytest.approx(2.0)
        assert env.minimum() == pytest.approx(1.0)

    def test_empty_family(self) -> None:
        with pytest.raises(InvalidParameterError):
            pointwise_envelope([])


class TestConversion:
    @pytest.mark.parametrize("S, expected", [(1, (1.0, 1.0)), (3, (3.0, 2.0)), (5, (5.0, 2.0))])
    def test_unweighted_l1(self, S, expected) -> None:
        assert conversion_constants(None, S, Norm.L1) == pytest.approx(expected)

    def test_weighted_l1(self) -> None:
        c1, c2 = conversion_constants(WeightVector.of([1.0, 2.0]), 2, Norm.L1)
        assert c1 == pytest.approx(3.0)
        assert c2 == pytest.approx(1.0)

    def test_l2_is_spectral(self) -> None:
        c1, _ = conversion_constants(None, 2, Norm.L2)
        assert c1 == pytest.approx((1.0 + np.sqrt(5.0)) / 2.0)

    def test_overflowing_weights(self) -> None:
        c1, c2 = conversion_constants(WeightVector.from_log([0.0, 1000.0]), 2, Norm.L1)
        assert c1 == np.inf and c2 == np.inf


class TestBoundCertificate:
    def test_factors(self, certificate) -> None:
        assert certificate.bound_factor(1.0) == pytest.approx(2.0 * np.exp(-2.0))
        assert certificate.lower_factor(1.0) == pytest.approx(np.exp(-5.0))
        np.testing.assert_allclose(certificate.bound_factor(np.array([0.0, 2.0])), [2.0, 2.0 * np.exp(-4.0)])
        assert certificate.bound_factor(3.0, s=2.0) == pytest.approx(certificate.bound_factor(1.0, s=0.0))

    def test_summary_properties(self, certificate) -> None:
        assert certificate.mean_rate == 2.0
        assert certificate.is_ergodic
        assert certificate.plain_constant == pytest.approx(14.0)

    def test_coordinates_and_measure(self, certificate) -> None:
        w = certificate.coordinates(np.array([[1.0, 2.0], [0.0, -1.0]]))
        np.testing.assert_allclose(w, [[1.0, 2.0], [-1.0 / 3.0, -1.0]])
        np.testing.assert_allclose(certificate.measure(w), np.hypot(w[:, 0], w[:, 1]))

    def test_unweighted_diameter(self) -> None:
        cert = BoundCertificate(Method.DIFFINEQ, RateFunction(1.0), 1.0, Norm.L1, None)
        assert cert.diameter(10) == pytest.approx(10.0)
        assert cert.diameter(1) == pytest.approx(1.0)

    def test_weighted_diameter(self) -> None:
        cert = BoundCertificate(Method.LYAPUNOV, RateFunction(1.0), 1.0, Norm.L2, WeightVector.of([1.0, 2.0]))
        assert cert.diameter(2) == pytest.approx(np.sqrt(1.25))
        with pytest.raises(InvalidParameterError):
            cert.diameter(3)

    def test_record_round_trip(self, certificate) -> None:
        record = json.loads(json.dumps(certificate.to_record()))
        restored = BoundCertificate.from_record(record)
        assert restored == certificate
        assert restored.weights.signs == (1, 1)
        assert restored.with_rate(RateFunction(1.0)) != certificate

    def test_sampled_rate_record(self) -> None:
        rate = SampledRate(np.array([1.0, 2.0, 1.0]))
        assert rate_to_record(rate) == {"kind": "sampled", "values": [1.0, 2.0, 1.0]}
        np.testing.assert_allclose(rate_from_record(rate_to_record(rate)).values, rate.values)
        with pytest.raises(ModelFileError):
            rate_from_record({"kind": "spline"})

    def test_unhashable(self, certificate) -> None:
        with pytest.raises(TypeError):
            hash(certificate)

    @pytest.mark.parametrize("kwargs", [{"constant": 0.5}, {"valid_from": -1.0}])
    def test_invalid(self, kwargs) -> None:
        params = {"method": "LogNorm", "rate": RateFunction(1.0), "constant": 1.0, "norm": "l1", "weights": None}
        params.update(kwargs)
        with pytest.raises(InvalidParameterError):
            BoundCertificate(**params)

    def test_missing_lower_rate(self) -> None:
        cert = BoundCertificate("LogNorm", RateFunction(1.0), 1.0, "l1", None)
        assert cert.method is Method.LOGNORM
        with pytest.raises(InvalidParameterError):
            cert.lower_factor(1.0)

    @pytest.mark.parametrize(
        "record",
        [
            {"schema_version": 99},
            {"schema_version": 1, "method": "LogNorm"},
            {"schema_version": 1, "method": "Guess", "rate": {"kind": "harmonic", "coefficients": [1.0]}},
        ],
    )
    def test_malformed_record(self, record) -> None:
        with pytest.raises(ModelFileError):
            BoundCertificate.from_record(record)
