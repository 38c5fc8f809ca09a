"""Sounding matrices, matched filters, joint estimation, segment analysis."""

import numpy as np
import pytest

from chirpsounder import (
    ConstraintViolationError,
    DimensionMismatchError,
    average_segments,
    awgn,
    build_full_matched_filter,
    build_pulse,
    build_shaping_matrix,
    build_sounding_matrix,
    check_design_constraints,
    derive_rng,
    generate_chirp,
    joint_estimate,
    matched_filter_fractional,
    matched_filter_integer,
    receive_fractional,
    receive_integer,
    segmented_output,
    ScenarioKind,
)
from tests.test_channel import single_link_scenario


def grid_search_oracle(hF, pulse, L, M, step=1e-4):
    """Exhaustive profile search: exact h solve at every grid offset."""
    mus = np.arange(0.0, 0.5 + step / 2, step)
    best_mu, best_val = 0.0, np.inf
    for mu in mus:
        G = build_shaping_matrix(pulse, mu, L, M)
        h, *_ = np.linalg.lstsq(G, hF, rcond=None)
        val = float(np.sum(np.abs(hF - G @ h) ** 2))
        if val < best_val:
            best_mu, best_val = float(mu), val
    return best_mu


def random_taps(rng, L):
    return (rng.standard_normal(L) + 1j * rng.standard_normal(L)) / np.sqrt(2)


class TestSoundingMatrix:
    def test_toeplitz_layout_integer(self):
        w = generate_chirp(1, 128)
        S = build_sounding_matrix(w, 15)
        for r in (0, 1, 14, 127):
            for c in (0, 7, 14):
                assert S.entries[r, c] == w.samples[(r - c) % 128]

    def test_toeplitz_layout_fractional(self):
        w = generate_chirp(1, 128)
        S = build_sounding_matrix(w, 15, kind="fractional", M=4)
        assert S.entries.shape == (128, 22)
        for r in (0, 3, 127):
            for c in (0, 10, 21):
                assert S.entries[r, c] == w.samples[(4 + r - c) % 128]

    def test_gram_identity(self):
        S = build_sounding_matrix(generate_chirp(1, 128), 15)
        gram = S.entries.conj().T @ S.entries
        assert np.max(np.abs(gram - np.eye(15))) < 1e-10

    def test_cross_gram_zero(self):
        S1 = build_sounding_matrix(generate_chirp(1, 128), 15)
        S2 = build_sounding_matrix(generate_chirp(2, 128), 15)
        assert np.max(np.abs(S1.entries.conj().T @ S2.entries)) < 1e-10

    def test_single_column_is_waveform(self):
        w = generate_chirp(2, 64)
        S = build_sounding_matrix(w, 1)
        np.testing.assert_array_equal(S.entries[:, 0], w.samples)

    def test_dimension_errors(self):
        w = generate_chirp(1, 128)
        with pytest.raises(DimensionMismatchError):
            build_sounding_matrix(w, 0)
        with pytest.raises(DimensionMismatchError):
            build_sounding_matrix(generate_chirp(1, 4), 5)
        with pytest.raises(DimensionMismatchError):
            build_sounding_matrix(w, 5, kind="fractional", M=0)

    def test_design_bound_enforced_and_overridable(self):
        w = generate_chirp(4, 128)
        with pytest.raises(ConstraintViolationError):
            build_sounding_matrix(w, 16)
        S = build_sounding_matrix(w, 16, check=False)
        gram = S.entries.conj().T @ S.entries
        assert np.max(np.abs(gram - np.eye(16))) < 1e-10

    @pytest.mark.parametrize("pa,pb", [(1, 2), (1, 4), (2, 4)])
    def test_gram_blocks_all_pairs(self, pa, pb):
        # integer layout at L = 15 and fractional at 2M+L-1 <= 16
        for kind, L, M in (("integer", 15, 0), ("fractional", 9, 4)):
            Sa = build_sounding_matrix(generate_chirp(pa, 128), L, kind=kind, M=M, check=False)
            Sb = build_sounding_matrix(generate_chirp(pb, 128), L, kind=kind, M=M, check=False)
            D = Sa.columns
            assert np.max(np.abs(Sa.entries.conj().T @ Sa.entries - np.eye(D))) < 1e-10
            assert np.max(np.abs(Sb.entries.conj().T @ Sb.entries - np.eye(D))) < 1e-10
            assert np.max(np.abs(Sa.entries.conj().T @ Sb.entries)) < 1e-10

    def test_passing_constraints_imply_gram_identities(self):
        # whenever the family-level check passes, the Gram blocks are exact
        cases = [
            (rates, N, L, M)
            for rates in ((1,), (1, 2), (1, 2, 4))
            for N in (64, 128)
            for L in (4, 8, 15)
            for M in (0, 2, 4)
        ]
        checked = 0
        for rates, N, L, M in cases:
            kind = "async-fractional" if M else "async-integer"
            scen = ScenarioKind(tag=kind, Lmax=L, M=M)
            if not check_design_constraints(max(rates), N, scen).passed:
                continue
            mats = [
                build_sounding_matrix(
                    generate_chirp(p, N),
                    L,
                    kind="fractional" if M else "integer",
                    M=M,
                )
                for p in rates
            ]
            D = mats[0].columns
            for a in range(len(mats)):
                for b in range(len(mats)):
                    block = mats[a].entries.conj().T @ mats[b].entries
                    expected = np.eye(D) if a == b else 0.0
                    assert np.max(np.abs(block - expected)) < 1e-10
            checked += 1
        assert checked > 10


class TestMatchedFilterInteger:
    def test_noiseless_round_trip(self):
        rng = np.random.default_rng(0)
        taps = random_taps(rng, 15)
        w = generate_chirp(1, 128)
        r = receive_integer(single_link_scenario(taps), [w])
        S = build_sounding_matrix(w, 15)
        h = matched_filter_integer(S, r[0])
        assert np.max(np.abs(h - taps)) < 1e-10

    def test_two_transmitters_no_crosstalk(self):
        from chirpsounder.channel import LinkChannel, MimoScenario

        rng = np.random.default_rng(1)
        taps = [random_taps(rng, 15), random_taps(rng, 15)]
        links = tuple(
            (LinkChannel(taps=np.asarray(t), d=0, mu=0.0, active=15),)
            for t in taps
        )
        sc = MimoScenario(
            tx_node=(0, 1), rx_node=(0,), links=links, sigma2=np.zeros(1), L=15
        )
        waveforms = [generate_chirp(1, 128), generate_chirp(2, 128)]
        r = receive_integer(sc, waveforms)
        for i, w in enumerate(waveforms):
            S = build_sounding_matrix(w, 15)
            h = matched_filter_integer(S, r[0])
            assert np.max(np.abs(h - taps[i])) < 1e-10

    def test_dimension_mismatch(self):
        S = build_sounding_matrix(generate_chirp(1, 128), 15)
        with pytest.raises(DimensionMismatchError):
            matched_filter_integer(S, np.zeros(64, dtype=complex))

    def test_kind_checked(self):
        S = build_sounding_matrix(generate_chirp(1, 128), 5, kind="fractional", M=2)
        with pytest.raises(ConstraintViolationError):
            matched_filter_integer(S, np.zeros(128, dtype=complex))


class TestMatchedFilterFractional:
    def test_noiseless_output_is_shaped_taps(self):
        rng = np.random.default_rng(2)
        taps = random_taps(rng, 15)
        mu = 0.3
        w = generate_chirp(1, 256)
        pulse = build_pulse(rolloff=0.25, M=4)
        r = receive_fractional(single_link_scenario(taps, mu=mu, N=256), [w], pulse)
        S = build_sounding_matrix(w, 15, kind="fractional", M=4)
        hF = matched_filter_fractional(S, r[0])
        G = build_shaping_matrix(pulse, mu, 15, 4)
        assert np.max(np.abs(hF - G @ taps)) < 1e-9

    def test_zero_offset_embeds_taps(self):
        rng = np.random.default_rng(3)
        taps = random_taps(rng, 10)
        w = generate_chirp(1, 128)
        pulse = build_pulse(rolloff=0.25, M=4)
        r = receive_fractional(single_link_scenario(taps, mu=0.0), [w], pulse)
        S = build_sounding_matrix(w, 10, kind="fractional", M=4)
        hF = matched_filter_fractional(S, r[0])
        assert np.max(np.abs(hF[4:14] - taps)) < 1e-9
        assert np.max(np.abs(hF[:4])) < 1e-9 and np.max(np.abs(hF[14:])) < 1e-9

    def test_second_waveform_does_not_leak(self):
        from chirpsounder.channel import LinkChannel, MimoScenario

        rng = np.random.default_rng(4)
        taps = [random_taps(rng, 15), random_taps(rng, 15)]
        links = tuple(
            (LinkChannel(taps=np.asarray(t), d=0, mu=m, active=15),)
            for t, m in zip(taps, (0.3, 0.45))
        )
        sc = MimoScenario(
            tx_node=(0, 1), rx_node=(0,), links=links, sigma2=np.zeros(1), L=15
        )
        waveforms = [generate_chirp(1, 256), generate_chirp(2, 256)]
        pulse = build_pulse(rolloff=0.25, M=4)
        S1 = build_sounding_matrix(waveforms[0], 15, kind="fractional", M=4)
        alone = MimoScenario(
            tx_node=(0,), rx_node=(0,), links=(links[0],), sigma2=np.zeros(1), L=15
        )
        hF_alone = matched_filter_fractional(
            S1, receive_fractional(alone, waveforms[:1], pulse)[0]
        )
        hF_both = matched_filter_fractional(
            S1, receive_fractional(sc, waveforms, pulse)[0]
        )
        assert np.max(np.abs(hF_both - hF_alone)) < 1e-9


class TestShapingMatrix:
    def test_zero_offset_is_shifted_identity(self):
        pulse = build_pulse(rolloff=0.25, M=4)
        G = build_shaping_matrix(pulse, 0.0, 10, 4)
        expected = np.zeros((17, 10))
        expected[4:14] = np.eye(10)
        np.testing.assert_allclose(G, expected, atol=1e-15)

    def test_columns_are_shifted_copies(self):
        pulse = build_pulse(rolloff=0.25, M=4)
        G = build_shaping_matrix(pulse, 0.3, 2, 4)
        assert G.shape == (9, 2)
        np.testing.assert_allclose(G[1:, 1], G[:-1, 0], atol=1e-15)

    def test_gram_positive_definite_across_offsets(self):
        pulse = build_pulse(rolloff=0.25, M=4)
        for mu in np.linspace(0.0, 0.5, 26):
            G = build_shaping_matrix(pulse, float(mu), 8, 4)
            eigs = np.linalg.eigvalsh(G.T @ G)
            assert eigs.min() > 0

    def test_mu_out_of_range(self):
        pulse = build_pulse(rolloff=0.25, M=4)
        with pytest.raises(ConstraintViolationError):
            build_shaping_matrix(pulse, 0.7, 8, 4)


class TestJointEstimate:
    def test_noiseless_recovery(self):
        pulse = build_pulse(rolloff=0.25, M=4)
        rng = np.random.default_rng(11)
        L, M = 15, 4
        for _ in range(10):
            mu_true = float(rng.uniform(0.01, 0.5))
            taps = random_taps(rng, L)
            hF = build_shaping_matrix(pulse, mu_true, L, M) @ taps
            rep = joint_estimate(hF, pulse, L, M)
            assert rep.converged
            assert abs(rep.mu_hat - mu_true) < 1e-6
            assert np.linalg.norm(rep.h_hat - taps) / np.linalg.norm(taps) < 1e-6
            assert rep.residual < 1e-18

    def test_oracle_agreement(self):
        pulse = build_pulse(rolloff=0.25, M=3)
        rng = np.random.default_rng(12)
        L, M = 6, 3
        mu_true = 0.3
        taps = random_taps(rng, L)
        hF = build_shaping_matrix(pulse, mu_true, L, M) @ taps
        rep = joint_estimate(hF, pulse, L, M)
        oracle = grid_search_oracle(hF, pulse, L, M, step=1e-3)
        assert abs(rep.mu_hat - oracle) <= 1e-3

    def test_boundary_offset(self):
        pulse = build_pulse(rolloff=0.25, M=4)
        rng = np.random.default_rng(13)
        taps = random_taps(rng, 15)
        hF = build_shaping_matrix(pulse, 0.5, 15, 4) @ taps
        rep = joint_estimate(hF, pulse, 15, 4)
        assert abs(rep.mu_hat - 0.5) < 1e-6

    def test_zero_input_flagged(self):
        pulse = build_pulse(rolloff=0.25, M=4)
        rep = joint_estimate(np.zeros(22, dtype=complex), pulse, 15, 4)
        assert rep.mu_undetermined and rep.mu_hat is None
        assert not rep.h_hat.any() and rep.converged

    def test_nonconvergence_flagged_not_raised(self):
        pulse = build_pulse(rolloff=0.25, M=4)
        rng = np.random.default_rng(14)
        taps = random_taps(rng, 15)
        hF = build_shaping_matrix(pulse, 0.37, 15, 4) @ taps
        rep = joint_estimate(hF, pulse, 15, 4, max_iters=1)
        assert not rep.converged and rep.iterations == 1

    def test_wrong_length_rejected(self):
        pulse = build_pulse(rolloff=0.25, M=4)
        with pytest.raises(DimensionMismatchError):
            joint_estimate(np.zeros(10, dtype=complex), pulse, 15, 4)

    def test_profile_derivative_small_at_interior_solution(self):
        from chirpsounder.estimator import _profile_derivative

        pulse = build_pulse(rolloff=0.25, M=4)
        rng = np.random.default_rng(15)
        L, M = 12, 4
        for _ in range(5):
            mu_true = float(rng.uniform(0.05, 0.45))
            taps = random_taps(rng, L)
            hF = build_shaping_matrix(pulse, mu_true, L, M) @ taps
            rep = joint_estimate(hF, pulse, L, M)
            if 0.0 < rep.mu_hat < 0.5:
                assert abs(_profile_derivative(pulse, rep.mu_hat, L, M, hF)) < 1e-6

    def test_noisy_consistency_with_oracle(self):
        # at 40 dB SNR the estimate stays within one oracle grid step
        pulse = build_pulse(rolloff=0.25, M=3)
        rng = np.random.default_rng(16)
        L, M = 6, 3
        G_dim = 2 * M + L - 1
        sigma = np.sqrt(10 ** (-40 / 10) / 2)
        for _ in range(25):
            mu_true = float(rng.uniform(0.05, 0.5))
            taps = random_taps(rng, L)
            taps /= np.linalg.norm(taps)
            hF = build_shaping_matrix(pulse, mu_true, L, M) @ taps
            hF = hF + sigma * (rng.standard_normal(G_dim) + 1j * rng.standard_normal(G_dim))
            rep = joint_estimate(hF, pulse, L, M)
            oracle = grid_search_oracle(hF, pulse, L, M, step=1e-3)
            assert abs(rep.mu_hat - oracle) <= 1e-3


class TestSegments:
    def test_sign_alternating_replicas(self):
        rng = np.random.default_rng(21)
        taps = random_taps(rng, 12)
        w = generate_chirp(2, 128)
        r = receive_integer(single_link_scenario(taps, N=128, p=2), [w])
        seg = segmented_output(build_full_matched_filter(w), r[0])
        assert seg.segments.shape == (4, 32)
        np.testing.assert_allclose(seg.segments[0], seg.segments[2], atol=1e-9)
        np.testing.assert_allclose(seg.segments[1], -seg.segments[0], atol=1e-9)
        np.testing.assert_allclose(seg.segments[3], -seg.segments[2], atol=1e-9)

    def test_segment_leading_entries_are_shaped_taps(self):
        rng = np.random.default_rng(22)
        taps = random_taps(rng, 10)
        mu = 0.3
        M = 4
        w = generate_chirp(2, 256)
        pulse = build_pulse(rolloff=0.25, M=M)
        r = receive_fractional(single_link_scenario(taps, mu=mu, N=256), [w], pulse)
        seg = segmented_output(build_full_matched_filter(w, M=M), r[0])
        G = build_shaping_matrix(pulse, mu, 10, M)
        shaped = G @ taps
        width = len(shaped)
        for j in range(4):
            sign = 1.0 if j % 2 == 0 else -1.0
            np.testing.assert_allclose(seg.segments[j][:width], sign * shaped, atol=1e-9)
            assert np.max(np.abs(seg.segments[j][width:])) < 1e-9

    def test_noise_only_segment_correlation(self):
        # filtered noise is exactly anti-correlated at lag N/(2p) and
        # correlated at lag N/p, both with magnitude 2*sigma^2
        sigma2 = 0.4
        w = generate_chirp(2, 128)
        F = build_full_matched_filter(w)
        rng = derive_rng(500, 1, 0)
        draws = 4000
        acc_half, acc_full, acc_var = 0.0, 0.0, 0.0
        for _ in range(draws):
            z = awgn(np.zeros((1, 128), dtype=complex), np.array([sigma2]), rng)[0]
            out = F.entries.conj().T @ z
            acc_var += np.mean(np.abs(out) ** 2)
            acc_half += np.mean((out * np.conj(np.roll(out, -32))).real)
            acc_full += np.mean((out * np.conj(np.roll(out, -64))).real)
        assert acc_var / draws == pytest.approx(2 * sigma2, rel=0.05)
        assert acc_half / draws == pytest.approx(-2 * sigma2, rel=0.05)
        assert acc_full / draws == pytest.approx(2 * sigma2, rel=0.05)

    def test_averaging_gives_no_gain(self):
        # sign-corrected averaging of the 2p replicas leaves the MSE unchanged
        sigma2 = 2e-3
        rng_taps = np.random.default_rng(23)
        taps = random_taps(rng_taps, 12)
        taps /= np.linalg.norm(taps)
        w = generate_chirp(4, 128)
        sc = single_link_scenario(taps, N=128)
        r0 = receive_integer(sc, [w])
        F = build_full_matched_filter(w)
        rng = derive_rng(501, 1, 0)
        trials = 5000
        err_single, err_avg = 0.0, 0.0
        for _ in range(trials):
            r = awgn(r0, np.array([sigma2]), rng)
            seg = segmented_output(F, r[0])
            single = seg.segments[0][:12]
            averaged = average_segments(seg)[:12]
            err_single += float(np.sum(np.abs(single - taps) ** 2))
            err_avg += float(np.sum(np.abs(averaged - taps) ** 2))
        assert err_avg / err_single == pytest.approx(1.0, abs=0.03)

    def test_requires_full_matrix(self):
        S = build_sounding_matrix(generate_chirp(1, 128), 15)
        with pytest.raises(ConstraintViolationError):
            segmented_output(S, np.zeros(128, dtype=complex))
