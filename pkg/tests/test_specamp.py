import math

import numpy as np
import pytest

from conftest import random_lcu
from sossa import operators as ops
from sossa import sosopt, specamp, syk


def certificate_for(h, words):
    basis = sosopt.SosBasis.from_pauli_words(h.qubit_count, words)
    cert = sosopt.solve_sdp(sosopt.build_sos_sdp(h, basis))
    return cert, sosopt.extract_generators(cert)


class TestBuildFromGenerators:
    def test_single_generator_lambda(self):
        h = ops.LcuHamiltonian.from_terms(1, [ops.PauliTerm(-1.0, "Z")])
        cert, gens = certificate_for(h, ["I", "Z"])
        sossa_op = specamp.build_sa_from_generators(gens, cert.beta)
        # row (1, -1)/sqrt(2): l1 = sqrt(2), lambda = 2
        assert sossa_op.lambda_sos == pytest.approx(2.0, abs=1e-6)
        target = h.to_dense().entries + cert.beta * np.eye(2)
        assert np.max(np.abs(sossa_op.sa.square_dense() - target)) <= 1e-7

    def test_termwise_rows_lambda(self):
        rng = np.random.default_rng(0)
        h = random_lcu(rng, 3, 5)
        sa = ops.termwise_sa(h)
        assert sa.lambda_ == pytest.approx(2.0 * h.lambda_lcu)
        for row in sa.rows:
            assert np.linalg.norm(row.dense(), 2) <= row.normalization + 1e-9

    def test_syk_square_matches_shift(self):
        inst = syk.generate_syk(8, 0)
        cert, gens, _ = syk.certify_instance(inst)
        sossa_op = specamp.build_sa_from_generators(gens, cert.beta)
        dense_h = syk.syk_hamiltonian(inst).to_dense().entries
        target = dense_h + cert.beta * np.eye(dense_h.shape[0])
        assert np.max(np.abs(sossa_op.sa.square_dense() - target)) <= 1e-6

    def test_spectral_norms_never_exceed_l1(self):
        inst = syk.generate_syk(8, 1)
        cert, gens, _ = syk.certify_instance(inst)
        l1 = specamp.build_sa_from_generators(gens, cert.beta, norms="l1")
        spec = specamp.build_sa_from_generators(gens, cert.beta, norms="spectral")
        for r1, r2 in zip(l1.sa.rows, spec.sa.rows):
            assert r2.normalization <= r1.normalization + 1e-9

    def test_lambda_sos_sandwich(self):
        # sum ||b||_2^2 equals the normalized trace of H + beta, and the
        # l1-squared accounting is sandwiched by it and L times it
        inst = syk.generate_syk(8, 3)
        cert, gens, _ = syk.certify_instance(inst)
        mass = specamp.l2_mass(gens)
        lam = specamp.lambda_sos_value(gens)
        L = cert.basis.size
        assert mass == pytest.approx(cert.beta, rel=1e-5)  # traceless H
        assert mass - 1e-9 <= lam <= L * mass + 1e-9


class TestShiftedSquare:
    def test_zero_square_is_minus_one(self):
        h = ops.LcuHamiltonian.from_terms(1, [ops.PauliTerm(-1.0, "Z")])
        sa = ops.termwise_sa(h)  # H + lambda = 2|1><1|
        vals = specamp.shifted_square_spectrum(sa)
        assert vals[0] == pytest.approx(-1.0, abs=1e-12)  # kernel direction
        assert vals[-1] == pytest.approx(1.0, abs=1e-12)  # 2*2/2 - 1

    def test_random_instance_matches_dense_oracle(self):
        rng = np.random.default_rng(2)
        h = random_lcu(rng, 3, 6)
        sa = ops.termwise_sa(h)
        vals = specamp.shifted_square_spectrum(sa)
        dense = h.to_dense().entries + h.lambda_lcu * np.eye(8)
        oracle = np.linalg.eigvalsh(2.0 * dense / sa.lambda_ - np.eye(8))
        assert np.max(np.abs(vals - oracle)) <= 1e-10
        assert np.all(vals >= -1 - 1e-12) and np.all(vals <= 1 + 1e-12)


class TestDoubledSpectrum:
    def test_identity_rows(self):
        row = specamp.SaRow(1.0, ((1.0, (0, 0)),), "pauli", 1)
        sa = specamp.SaOperator((row,), shift=0.0)
        vals = specamp.doubled_hermitian_spectrum(sa)
        assert np.allclose(np.sort(vals), [-1, -1, 1, 1])

    def test_termwise_x_plus_z(self):
        h = ops.LcuHamiltonian.from_terms(
            1, [ops.PauliTerm(1.0, "X"), ops.PauliTerm(1.0, "Z")]
        )
        sa = ops.termwise_sa(h)
        vals = specamp.doubled_hermitian_spectrum(sa)
        shifted = np.linalg.eigvalsh(h.to_dense().entries + 2.0 * np.eye(2))
        roots = np.sqrt(np.clip(shifted, 0, None))
        expect = np.sort(np.concatenate([-roots, roots, np.zeros(len(vals) - 4)]))
        assert np.max(np.abs(np.sort(vals) - expect)) <= 1e-10

    def test_squares_cover_both_orderings(self):
        rng = np.random.default_rng(4)
        h = random_lcu(rng, 2, 4)
        sa = ops.termwise_sa(h)
        vals = specamp.doubled_hermitian_spectrum(sa)
        stacked = np.vstack(sa.dense_rows())
        left = np.linalg.eigvalsh(stacked.conj().T @ stacked)
        right = np.linalg.eigvalsh(stacked @ stacked.conj().T)
        expect = np.sort(np.concatenate([left, right]))
        got = np.sort(vals ** 2)
        assert np.max(np.abs(np.sort(got) - expect)) <= 1e-9


class TestWalkModel:
    def test_phase_endpoints(self):
        wm = specamp.walk_phases([0.0], 1.0)
        assert sorted(wm.phases) == pytest.approx([-math.pi / 2, math.pi / 2])
        wm = specamp.walk_phases([1.0], 1.0)
        assert wm.phases == (0.0, -0.0)

    def test_low_energy_maps_near_pi(self):
        wm = specamp.walk_phases([-0.999], 1.0)
        assert max(wm.phases) == pytest.approx(math.pi, abs=0.1)

    def test_out_of_range_rejected(self):
        with pytest.raises(ops.ValidationError):
            specamp.walk_phases([2.0], 1.0)

    def test_dilation_oracle_random(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            dim = int(rng.integers(2, 5))
            a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
            hmat = (a + a.conj().T) / 2
            lam = float(np.linalg.norm(hmat, 2)) * float(rng.uniform(1.05, 2.0))
            model = np.sort(specamp.walk_phases(np.linalg.eigvalsh(hmat), lam).phases)
            dense = specamp.walk_eigenphases_dense(hmat, lam)
            assert np.max(np.abs(model - dense)) <= 1e-8


class TestGadget:
    def test_marked_in_first_half(self):
        build = specamp.build_parity_or_gadget(specamp.GadgetSpec(1, 4, (0,)))
        assert build.eigenvalue == pytest.approx(0.5)  # 2/N
        s = build.uniform_state
        assert np.max(np.abs(build.hamiltonian @ s - 0.5 * s)) <= 1e-12

    def test_marked_in_second_half(self):
        build = specamp.build_parity_or_gadget(specamp.GadgetSpec(1, 4, (3,)))
        assert build.eigenvalue == 0.0
        s = build.uniform_state
        assert np.max(np.abs(build.hamiltonian @ s)) <= 1e-12

    def test_three_blocks(self):
        build = specamp.build_parity_or_gadget(specamp.GadgetSpec(3, 8, (1, 6, 2)))
        assert build.eigenvalue == pytest.approx(0.5)  # (2/8)*2
        assert build.parity == 0
        s = build.uniform_state
        assert np.max(np.abs(build.hamiltonian @ s - 0.5 * s)) <= 1e-12

    def test_rows_square_to_terms(self):
        spec = specamp.GadgetSpec(2, 4, (1, 3))
        build = specamp.build_parity_or_gadget(spec)
        acc = sum(r @ r for r in build.sa_rows)
        assert np.max(np.abs(acc - build.hamiltonian)) <= 1e-12

    def test_eigenvalue_formula_across_markings(self):
        for K in (1, 2, 3):
            for N in (4, 8):
                rng = np.random.default_rng(K * 100 + N)
                marked = tuple(int(x) for x in rng.integers(0, N, K))
                build = specamp.build_parity_or_gadget(specamp.GadgetSpec(K, N, marked))
                count = sum(1 for x in marked if x < N // 2)
                assert build.eigenvalue == (2.0 / N) * count
                s = build.uniform_state
                resid = np.max(np.abs(build.hamiltonian @ s - build.eigenvalue * s))
                assert resid <= 1e-12


class TestCostTable:
    def test_equal_parameters(self):
        t = specamp.query_cost_table(1, 1, 1, 1, 1, 0.1)
        assert t.lcu_energy == pytest.approx(10.0)
        assert t.termwise_sa_energy == pytest.approx(10.0)

    def test_square_root_gain(self):
        t = specamp.query_cost_table(100, 100, 100, 1, 1, 1)
        assert t.lcu_energy == pytest.approx(100.0)
        assert t.termwise_sa_energy == pytest.approx(10.0)

    def test_pipeline_ratio_row(self):
        inst = syk.generate_syk(8, 0)
        cert, gens, dfgens = syk.certify_instance(inst)
        from sossa import doublefact

        lam_lcu = syk.syk_lambda_lcu(inst)
        lam_df = doublefact.df_lambda(dfgens)
        e0 = syk.ground_energy(inst)
        t = specamp.query_cost_table(
            lam_lcu, 2 * lam_lcu, lam_df, e0 + lam_lcu, e0 + cert.beta, 0.01
        )
        expected = math.sqrt((e0 + cert.beta) * lam_df) / lam_lcu
        assert t.sossa_over_lcu == pytest.approx(expected, rel=1e-12)

    def test_positivity_validated(self):
        with pytest.raises(ops.ValidationError):
            specamp.query_cost_table(1, 1, 1, -1, 1, 0.1)
