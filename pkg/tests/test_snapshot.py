"""Binary snapshot round trips and corruption detection."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dickesim.errors import SnapshotError
from dickesim.snapshot import SNAPSHOT_MAGIC, snapshot_read, snapshot_write
from dickesim.state import QuantumState


def random_state(kind, spin_dim, field_dim, seed):
    rng = np.random.default_rng(seed)
    dim = spin_dim * field_dim
    if kind == "pure":
        data = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        data /= np.linalg.norm(data)
    else:
        a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        data = a @ a.conj().T
        data /= np.trace(data).real
    return QuantumState(
        kind=kind,
        data=data,
        spin_dim=spin_dim,
        field_dim=field_dim,
        t=rng.uniform(0, 5),
        lam=rng.uniform(0, 2),
    )


class TestRoundTrip:
    @given(seed=st.integers(min_value=0, max_value=10**6))
    @settings(max_examples=20, deadline=None)
    def test_pure_bit_exact(self, tmp_path_factory, seed):
        path = tmp_path_factory.mktemp("snap") / "s.snap"
        state = random_state("pure", 3, 5, seed)
        snapshot_write(state, path, params_hash="h123")
        back = snapshot_read(path, expect_params_hash="h123")
        assert back.kind == "pure"
        assert np.array_equal(back.data, state.data)
        assert back.t == state.t and back.lam == state.lam

    def test_density_round_trip_keeps_hermiticity(self, tmp_path):
        state = random_state("density", 2, 4, 3)
        path = tmp_path / "d.snap"
        snapshot_write(state, path)
        back = snapshot_read(path)
        assert np.array_equal(back.data, state.data)
        assert np.abs(back.data - back.data.conj().T).max() < 1e-12


class TestCorruption:
    def test_flipped_byte_fails_checksum(self, tmp_path):
        state = random_state("pure", 2, 3, 0)
        path = tmp_path / "s.snap"
        snapshot_write(state, path)
        blob = bytearray(path.read_bytes())
        blob[len(SNAPSHOT_MAGIC) + 20] ^= 0xFF
        path.write_bytes(bytes(blob))
        with pytest.raises(SnapshotError, match="checksum"):
            snapshot_read(path)

    def test_truncated_file(self, tmp_path):
        state = random_state("pure", 2, 3, 1)
        path = tmp_path / "s.snap"
        snapshot_write(state, path)
        path.write_bytes(path.read_bytes()[:20])
        with pytest.raises(SnapshotError):
            snapshot_read(path)

    def test_wrong_magic(self, tmp_path):
        state = random_state("pure", 2, 3, 2)
        path = tmp_path / "s.snap"
        snapshot_write(state, path)
        blob = bytearray(path.read_bytes())
        blob[0] ^= 0x01
        path.write_bytes(bytes(blob))
        with pytest.raises(SnapshotError):
            snapshot_read(path)

    def test_version_mismatch(self, tmp_path):
        import hashlib
        import struct

        state = random_state("pure", 2, 3, 4)
        path = tmp_path / "s.snap"
        snapshot_write(state, path)
        blob = bytearray(path.read_bytes()[:-32])
        struct.pack_into("<I", blob, len(SNAPSHOT_MAGIC), 99)
        blob = bytes(blob)
        path.write_bytes(blob + hashlib.sha256(blob).digest())
        with pytest.raises(SnapshotError, match="version"):
            snapshot_read(path)

    def test_params_hash_mismatch(self, tmp_path):
        state = random_state("pure", 2, 3, 5)
        path = tmp_path / "s.snap"
        snapshot_write(state, path, params_hash="aaa")
        with pytest.raises(SnapshotError, match="different configuration"):
            snapshot_read(path, expect_params_hash="bbb")
