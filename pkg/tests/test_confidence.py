import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spheremark import (ELL_CAP, DimensionError, DomainError, Message,
                        SignCodec, assess, ell_from_p, log_reg_inc_beta,
                        reg_inc_beta, sample_uniform, spherical_log10_p,
                        spherical_p_value)
from spheremark.confidence import VERDICT_TRUSTED, VERDICT_UNTRUSTED
from spheremark.streams import stream

mp.mp.dps = 50


def quad_oracle(x: float, a: float, b: float) -> mp.mpf:
    """Regularized incomplete beta by adaptive quadrature, not by any
    series or continued fraction, so it shares no code path with the
    implementation under test."""
    am, bm, xm = mp.mpf(repr(a)), mp.mpf(repr(b)), mp.mpf(repr(x))
    density = lambda t: t ** (am - 1) * (1 - t) ** (bm - 1)
    return mp.quad(density, [0, xm]) / mp.beta(am, bm)


class TestRegIncBeta:
    def test_identity_parameters(self):
        for x in (0.0, 1e-6, 0.25, 0.5, 0.75, 1.0 - 1e-12, 1.0):
            assert abs(reg_inc_beta(x, 1.0, 1.0) - x) <= 1e-12

    def test_arcsine_median(self):
        assert abs(reg_inc_beta(0.5, 0.5, 0.5) - 0.5) <= 1e-12

    def test_against_quadrature(self):
        for a in (0.5, 2.5, 127.5):
            for b in (0.5, 2.0):
                for x in (0.05, 0.3, 0.91, 0.999):
                    want = float(quad_oracle(x, a, b))
                    got = reg_inc_beta(x, a, b)
                    assert got == pytest.approx(want, rel=1e-12), (a, b, x)

    def test_endpoints(self):
        assert reg_inc_beta(0.0, 3.0, 4.0) == 0.0
        assert reg_inc_beta(1.0, 3.0, 4.0) == 1.0

    def test_domain(self):
        with pytest.raises(DomainError):
            reg_inc_beta(-0.01, 1.0, 1.0)
        with pytest.raises(DomainError):
            reg_inc_beta(1.01, 1.0, 1.0)
        with pytest.raises(DomainError):
            reg_inc_beta(0.5, 0.0, 1.0)
        with pytest.raises(DomainError):
            reg_inc_beta(0.5, 1.0, -2.0)

    def test_log_variant_matches_linear(self):
        for a, b, x in ((127.5, 0.5, 0.3), (2.0, 3.0, 0.1), (0.5, 0.5, 0.7)):
            lin = reg_inc_beta(x, a, b)
            assert log_reg_inc_beta(x, a, b) == pytest.approx(math.log(lin), rel=1e-10)

    def test_log_variant_deep_tail(self):
        # linear evaluation underflows long before these; mpmath carries
        # the tail exactly
        for x in (1e-8, 1e-5, 1e-4):
            want = mp.log(mp.betainc(mp.mpf("127.5"), mp.mpf("0.5"),
                                     0, mp.mpf(repr(x)), regularized=True))
            got = log_reg_inc_beta(x, 127.5, 0.5)
            assert got == pytest.approx(float(want), rel=1e-10)


@settings(max_examples=25, deadline=None)
@given(
    st.floats(min_value=0.5, max_value=50.0),
    st.floats(min_value=0.5, max_value=50.0),
    st.floats(min_value=1e-4, max_value=1.0 - 1e-4),
)
def test_reg_inc_beta_tracks_mpmath(a, b, x):
    want = float(mp.betainc(mp.mpf(repr(a)), mp.mpf(repr(b)),
                            0, mp.mpf(repr(x)), regularized=True))
    assert reg_inc_beta(x, a, b) == pytest.approx(want, rel=1e-10)


class TestSphericalPValue:
    def test_nonpositive_cosine_is_certain(self):
        assert spherical_p_value(0.0, 256) == 1.0
        assert spherical_p_value(-0.7, 256) == 1.0

    def test_perfect_alignment(self):
        assert spherical_p_value(1.0, 256) == 0.0

    def test_clamp_slack(self):
        assert spherical_p_value(1.0 + 5e-13, 256) == 0.0
        with pytest.raises(DomainError):
            spherical_p_value(1.01, 256)
        with pytest.raises(DomainError):
            spherical_p_value(math.nan, 256)

    def test_dim_validation(self):
        with pytest.raises(DimensionError):
            spherical_p_value(0.5, 1)

    def test_dim3_closed_form(self):
        # on S^2 the two-sided tail is exactly 1 - c
        for c in (0.01, 0.1, 0.5, 0.9, 0.999):
            assert spherical_p_value(c, 3) == pytest.approx(1.0 - c, abs=1e-12)

    def test_dim2_closed_form(self):
        # on the circle: 2*arccos(c)/pi
        for c in (0.05, 0.3, 0.7, 0.95):
            want = 2.0 * math.acos(c) / math.pi
            assert spherical_p_value(c, 2) == pytest.approx(want, rel=1e-12)

    def test_dim256_anchors(self):
        # frozen from the quadrature oracle at 50 digits
        anchors = {
            0.1: 0.10974985405009599,
            0.2: 0.0012674855227439696,
            0.3: 9.6211454591911684e-07,
        }
        for c, want in anchors.items():
            assert spherical_p_value(c, 256) == pytest.approx(want, rel=1e-12)

    def test_strictly_decreasing_in_cosine(self):
        for d in (3, 8, 256):
            grid = np.linspace(1e-3, 0.99, 500)
            vals = [spherical_p_value(float(c), d) for c in grid]
            assert all(x > y for x, y in zip(vals, vals[1:])), d

    def test_decreasing_in_dim(self):
        # the same alignment is more surprising in higher dimension
        for c in (0.1, 0.3, 0.6):
            vals = [spherical_p_value(c, d) for d in (3, 8, 32, 128, 512)]
            assert all(x > y for x, y in zip(vals, vals[1:]))

    def test_monte_carlo_two_sided(self):
        rng = stream(314, 256)
        n = 200_000
        hits = 0
        for _ in range(4):
            g = rng.standard_normal((n // 4, 256))
            c = np.abs(g[:, 0]) / np.linalg.norm(g, axis=1)
            hits += int((c >= 0.2).sum())
        p = spherical_p_value(0.2, 256)
        se = math.sqrt(p * (1.0 - p) / n)
        assert abs(hits / n - p) <= 3.0 * se

    def test_log10_accessor(self):
        for c in (0.1, 0.3):
            want = math.log10(spherical_p_value(c, 256))
            assert spherical_log10_p(c, 256) == pytest.approx(want, rel=1e-10)

    def test_log10_survives_underflow(self):
        # p underflows float64 near c = 1; the log path keeps going
        want = mp.log10(mp.betainc(mp.mpf("127.5"), mp.mpf("0.5"), 0,
                                   (1 - mp.mpf("0.999")) * (1 + mp.mpf("0.999")),
                                   regularized=True))
        got = spherical_log10_p(0.999, 256)
        assert got == pytest.approx(float(want), rel=1e-9)
        assert spherical_p_value(0.999, 256) == 0.0


class TestEll:
    def test_cap_on_underflow(self):
        assert ell_from_p(0.0) == ELL_CAP == 700.0

    def test_certain_is_zero(self):
        assert ell_from_p(1.0) == 0.0

    def test_decades(self):
        assert ell_from_p(1e-10) == pytest.approx(10.0, rel=1e-12)
        assert ell_from_p(0.1) == pytest.approx(1.0, rel=1e-12)


class TestAssess:
    def test_clean_vector_trusted(self):
        codec = SignCodec(256)
        v = codec.encode(Message(b"attested payload"))
        rep = assess(codec, v, ell_threshold=100.0)
        assert rep.idempotent
        assert rep.cosine == 1.0
        assert rep.p_value == 0.0
        assert rep.ell == ELL_CAP
        assert rep.verdict == VERDICT_TRUSTED

    def test_null_vectors_stay_untrusted(self):
        # decode->re-encode of an unrelated vector aligns near
        # sqrt(2/pi) (every component's sign matches by construction),
        # so the null ell sits in the mid-50s; frozen band from a 1e4
        # trial run: min 46.3, median 57.5, max 70.8
        codec = SignCodec(256)
        rng = stream(20260819)
        ells = np.empty(2000)
        for i in range(2000):
            rep = assess(codec, sample_uniform(256, rng), ell_threshold=100.0)
            assert rep.verdict == VERDICT_UNTRUSTED
            ells[i] = rep.ell
        assert 40.0 <= ells.min() and ells.max() <= 80.0
        assert 52.0 <= float(np.median(ells)) <= 62.0

    def test_threshold_boundary(self):
        codec = SignCodec(256)
        v = codec.encode(Message(b"x"))
        assert assess(codec, v, ell_threshold=700.0).verdict == VERDICT_TRUSTED
        assert assess(codec, v, ell_threshold=700.1).verdict == VERDICT_UNTRUSTED

    def test_idempotence_failure_short_circuits(self):
        class DriftingCodec(SignCodec):
            def decode(self, v):
                inner = super().decode(v)
                return Message(inner.data + b"!")

        rep = assess(DriftingCodec(256), sample_uniform(256, stream(16)),
                     ell_threshold=10.0)
        assert not rep.idempotent
        assert rep.p_value == 1.0
        assert rep.ell == 0.0
        assert rep.verdict == VERDICT_UNTRUSTED

    def test_report_serialization(self):
        codec = SignCodec(256)
        rep = assess(codec, codec.encode(Message(b"row")), ell_threshold=5.0)
        row = rep.to_csv_row()
        assert row.count(",") == 4
        assert row.split(",")[4] == VERDICT_TRUSTED
        d = rep.to_json_dict()
        assert set(d) == {"cosine", "p_value", "ell", "idempotent", "verdict"}
        assert d["idempotent"] is True
