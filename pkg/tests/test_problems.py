"""Problem generators and operator file round-trips."""

import numpy as np
import pytest

from greedy_eig.errors import InvalidSpec, ParseError, VersionError
from greedy_eig.problems import (
    FORMAT_MAGIC,
    ProblemSpec,
    gen_degenerate_lowest,
    gen_excited_trap,
    gen_random_kronecker,
    gen_separable,
    kronecker_decompose,
    load_operator,
    save_operator,
)
from greedy_eig.reference_oracle import dense_assemble, dense_reference
from greedy_eig.tensor_core import MetricSet


class TestRandomKronecker:
    def test_requested_shape(self):
        op, m = gen_random_kronecker(2, (51, 51), 2, seed=1)
        assert op.sizes == (51, 51)
        assert op.num_terms == 2

    def test_determinism(self):
        op1, _ = gen_random_kronecker(2, (6, 5), 3, seed=9)
        op2, _ = gen_random_kronecker(2, (6, 5), 3, seed=9)
        for t1, t2 in zip(op1.terms, op2.terms):
            for f1, f2 in zip(t1, t2):
                assert np.array_equal(f1, f2)

    def test_dense_assembly_is_spd(self):
        op, m = gen_random_kronecker(2, (8, 8), 2, seed=0)
        a, _ = dense_assemble(op, m)
        np.linalg.cholesky(a)  # raises if not SPD

    def test_factors_are_spd(self):
        op, _ = gen_random_kronecker(3, (4, 5, 6), 2, seed=2)
        for term in op.terms:
            for f in term:
                assert np.linalg.eigvalsh(f)[0] > 0

    def test_invalid_k(self):
        with pytest.raises(InvalidSpec):
            gen_random_kronecker(2, (4, 4), 0, seed=0)


class TestSeparable:
    def test_diagonal_case(self):
        op = gen_separable([np.diag([1.0, 2.0]), np.diag([1.0, 2.0])])
        m = MetricSet.identity(op.sizes)
        ref = dense_reference(op, m)
        assert ref.mu1 == pytest.approx(2.0)
        ground = np.abs(ref.eigenspace[:, 0])
        assert np.argmax(ground) == 0  # e_1 x e_1 in flat ordering

    def test_ground_state_factors(self):
        """Lowest eigenvector of the sum operator is an outer product."""
        rng = np.random.default_rng(14)
        mats = []
        for _ in range(3):
            g = rng.standard_normal((4, 4))
            mats.append(0.5 * (g + g.T) + np.diag(np.arange(4.0)))
        op = gen_separable(mats)
        m = MetricSet.identity(op.sizes)
        ref = dense_reference(op, m)
        expected_val = sum(np.linalg.eigvalsh(d)[0] for d in mats)
        assert ref.mu1 == pytest.approx(expected_val, abs=1e-10)
        outer = np.array([1.0])
        for d in mats:
            w, v = np.linalg.eigh(d)
            outer = np.kron(outer, v[:, 0])
        overlap = abs(outer @ ref.eigenspace[:, 0])
        assert overlap == pytest.approx(1.0, abs=1e-10)


class TestKroneckerDecompose:
    def test_round_trip(self):
        rng = np.random.default_rng(15)
        n1, n2 = 3, 4
        # build a block-symmetric matrix from symmetric Kronecker terms
        dense = np.zeros((12, 12))
        for _ in range(3):
            f1 = rng.standard_normal((n1, n1))
            f2 = rng.standard_normal((n2, n2))
            dense += np.kron(0.5 * (f1 + f1.T), 0.5 * (f2 + f2.T))
        op = kronecker_decompose(dense, (n1, n2))
        back, _ = dense_assemble(op, MetricSet.identity((n1, n2)))
        assert np.allclose(back, dense, atol=1e-12)

    def test_rejects_unstructured_symmetric_matrix(self):
        rng = np.random.default_rng(16)
        g = rng.standard_normal((6, 6))
        with pytest.raises(InvalidSpec):
            kronecker_decompose(0.5 * (g + g.T), (2, 3))


class TestDegenerateLowest:
    def test_multiplicity_two(self):
        op, m = gen_degenerate_lowest((6, 6), 2, seed=3)
        ref = dense_reference(op, m)
        assert ref.eigenspace.shape[1] == 2
        assert ref.gap > 0.4

    def test_multiplicity_one_is_generic(self):
        op, m = gen_degenerate_lowest((5, 5), 1, seed=4)
        ref = dense_reference(op, m)
        assert ref.eigenspace.shape[1] == 1

    def test_determinism(self):
        op1, _ = gen_degenerate_lowest((6, 6), 2, seed=3)
        op2, _ = gen_degenerate_lowest((6, 6), 2, seed=3)
        for t1, t2 in zip(op1.terms, op2.terms):
            for f1, f2 in zip(t1, t2):
                assert np.array_equal(f1, f2)

    def test_incompatible_multiplicity(self):
        with pytest.raises(InvalidSpec):
            gen_degenerate_lowest((6, 6), 5, seed=0)
        with pytest.raises(InvalidSpec):
            gen_degenerate_lowest((2, 2), 4, seed=0)


class TestExcitedTrap:
    def test_default_parameters_certify(self):
        op, m = gen_excited_trap(1.0, 2.0, 17.0, 20.0, 3)
        ref = dense_reference(op, m)
        assert ref.mu1 == pytest.approx(1.0, abs=1e-9)

    def test_guard_ordering(self):
        with pytest.raises(InvalidSpec):
            gen_excited_trap(2.0, 1.0, 17.0, 20.0, 3)

    def test_guard_gap_condition(self):
        # violates mu_20 > mu_02 + 2 mu_11
        with pytest.raises(InvalidSpec):
            gen_excited_trap(1.0, 2.0, 4.9, 20.0, 3)

    def test_guard_band(self):
        # split too small for the paired level's admissible band
        with pytest.raises(InvalidSpec):
            gen_excited_trap(1.0, 2.0, 9.0, 20.0, 3)


class TestSerialization:
    def test_round_trip(self, tmp_path):
        op, m = gen_random_kronecker(2, (4, 5), 2, seed=6)
        path = tmp_path / "op.geig"
        save_operator(op, m, path)
        op2, m2 = load_operator(path)
        assert op2.sizes == op.sizes
        for t1, t2 in zip(op.terms, op2.terms):
            for f1, f2 in zip(t1, t2):
                assert np.array_equal(f1, f2)
        for m1, m2_ in zip(m.masses, m2.masses):
            assert np.array_equal(m1, m2_)
        assert m2.nu == m.nu

    def test_sidecar_written(self, tmp_path):
        import json

        op, m = gen_random_kronecker(2, (3, 3), 1, seed=0)
        path = tmp_path / "op.geig"
        save_operator(op, m, path)
        meta = json.loads((path.parent / "op.geig.json").read_text())
        assert meta["sizes"] == [3, 3]
        assert meta["format"] == FORMAT_MAGIC.decode()

    def test_truncated_file(self, tmp_path):
        op, m = gen_random_kronecker(2, (3, 3), 1, seed=0)
        path = tmp_path / "op.geig"
        save_operator(op, m, path)
        data = path.read_bytes()
        path.write_bytes(data[: len(data) // 2])
        with pytest.raises(ParseError) as exc:
            load_operator(path)
        assert exc.value.offset is not None

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "op.geig"
        path.write_bytes(b"NOPE" + b"\x00" * 100)
        with pytest.raises(ParseError):
            load_operator(path)

    def test_version_mismatch(self, tmp_path):
        import struct

        op, m = gen_random_kronecker(2, (3, 3), 1, seed=0)
        path = tmp_path / "op.geig"
        save_operator(op, m, path)
        data = bytearray(path.read_bytes())
        data[4:8] = struct.pack("<I", 99)
        path.write_bytes(bytes(data))
        with pytest.raises(VersionError):
            load_operator(path)


class TestProblemSpec:
    def test_unknown_kind(self):
        with pytest.raises(InvalidSpec):
            ProblemSpec("Nonsense", {})

    def test_unknown_key(self):
        with pytest.raises(InvalidSpec):
            ProblemSpec("RandomKronecker",
                        {"d": 2, "sizes": [4, 4], "K": 1, "seed": 0, "x": 1})

    def test_missing_key(self):
        with pytest.raises(InvalidSpec):
            ProblemSpec("RandomKronecker", {"d": 2})

    def test_build_random(self):
        spec = ProblemSpec("RandomKronecker",
                           {"d": 2, "sizes": [4, 4], "K": 2, "seed": 5})
        op, m = spec.build()
        assert op.sizes == (4, 4)

    def test_build_from_file(self, tmp_path):
        op, m = gen_random_kronecker(2, (3, 4), 1, seed=8)
        path = tmp_path / "x.geig"
        save_operator(op, m, path)
        spec = ProblemSpec("FromFile", {"path": str(path)})
        op2, _ = spec.build()
        assert op2.sizes == (3, 4)

    def test_trap_defaults(self):
        spec = ProblemSpec("ExcitedTrap", {})
        assert spec.params["mu_11"] == 2.0
