"""Content addressing, deduplication, integrity, and persistence of the store."""

from __future__ import annotations

import random
import threading

import pytest

from groupvault.content_store import DiskBlobStore, IpfsHash, MemoryBlobStore
from groupvault.crypto import hash_content
from groupvault.errors import BlobIntegrityError, BlobNotFoundError
from sha256_reference import sha256_oracle


@pytest.fixture(params=["memory", "disk"])
def store(request, tmp_path):
    if request.param == "memory":
        return MemoryBlobStore()
    return DiskBlobStore(tmp_path / "store")


class TestAddresses:
    def test_format(self):
        h = IpfsHash(hash_content(b"addressed"))
        assert h.address.startswith("cas1-")
        assert len(h.address) == 5 + 64
        assert h.address == h.address.lower()

    def test_round_trip(self):
        h = IpfsHash(hash_content(b"addressed"))
        assert IpfsHash.from_address(h.address) == h

    def test_bad_prefix_rejected(self):
        with pytest.raises(ValueError):
            IpfsHash.from_address("cas2-" + "0" * 64)
        with pytest.raises(ValueError):
            IpfsHash.from_address("cas1-" + "0" * 63)


class TestPutGet:
    def test_round_trip(self, store):
        blob = b"some blob content"
        assert store.get(store.put(blob)) == blob

    def test_empty_blob(self, store):
        assert store.get(store.put(b"")) == b""

    def test_address_is_content_digest(self, store):
        blob = b"addressed by digest"
        assert store.put(blob).digest == hash_content(blob)

    def test_address_matches_independent_oracle(self, store):
        rnd = random.Random(10)
        for _ in range(50):
            blob = rnd.randbytes(rnd.randint(0, 300))
            assert store.put(blob).digest.value == sha256_oracle(blob)

    def test_distinct_contents_distinct_addresses(self, store):
        rnd = random.Random(11)
        seen = {}
        for _ in range(100):
            blob = rnd.randbytes(rnd.randint(1, 64))
            h = store.put(blob)
            if h.address in seen:
                assert seen[h.address] == blob
            seen[h.address] = blob

    def test_get_unknown_address(self, store):
        with pytest.raises(BlobNotFoundError):
            store.get(IpfsHash(hash_content(b"never stored")))

    def test_has(self, store):
        h = store.put(b"present")
        assert store.has(h)
        assert not store.has(IpfsHash(hash_content(b"absent")))
        store.get(h)
        assert store.has(h)


class TestDeduplication:
    def test_fresh_store_counters(self, store):
        stats = store.stats()
        assert (stats.blob_count, stats.total_bytes, stats.dedup_hits) == (0, 0, 0)

    def test_double_put_is_one_blob(self, store):
        blob = b"stored once"
        first = store.put(blob)
        second = store.put(blob)
        assert first == second
        stats = store.stats()
        assert stats.blob_count == 1
        assert stats.total_bytes == len(blob)
        assert stats.dedup_hits == 1

    def test_many_puts_one_copy(self, store):
        blob = b"idempotent"
        for _ in range(10):
            store.put(blob)
        stats = store.stats()
        assert stats.blob_count == 1
        assert stats.dedup_hits == 9

    def test_byte_accounting(self, store):
        store.put(b"a" * 10)
        store.put(b"b" * 20)
        stats = store.stats()
        assert stats.blob_count == 2
        assert stats.total_bytes == 30


class TestDiskBackend:
    def test_layout(self, tmp_path):
        store = DiskBlobStore(tmp_path / "s")
        h = store.put(b"on disk")
        hexname = h.digest.hex()
        assert (tmp_path / "s" / "blobs" / hexname[:2] / hexname).is_file()

    def test_at_rest_corruption_detected(self, tmp_path):
        store = DiskBlobStore(tmp_path / "s")
        h = store.put(b"protect me, please")
        hexname = h.digest.hex()
        path = tmp_path / "s" / "blobs" / hexname[:2] / hexname
        raw = bytearray(path.read_bytes())
        raw[3] ^= 0xFF
        path.write_bytes(bytes(raw))
        with pytest.raises(BlobIntegrityError):
            store.get(h)

    def test_counters_recomputed_on_reopen(self, tmp_path):
        store = DiskBlobStore(tmp_path / "s")
        store.put(b"one")
        store.put(b"two two")
        reopened = DiskBlobStore(tmp_path / "s")
        stats = reopened.stats()
        assert stats.blob_count == 2
        assert stats.total_bytes == len(b"one") + len(b"two two")

    def test_dedup_across_reopen(self, tmp_path):
        DiskBlobStore(tmp_path / "s").put(b"already there")
        reopened = DiskBlobStore(tmp_path / "s")
        h = reopened.put(b"already there")
        assert reopened.stats().dedup_hits == 1
        assert reopened.stats().blob_count == 1
        assert reopened.get(h) == b"already there"

    def test_concurrent_identical_puts(self, tmp_path):
        store = DiskBlobStore(tmp_path / "s")
        blob = b"raced" * 1000
        errors = []

        def hammer():
            try:
                for _ in range(20):
                    store.put(blob)
            except Exception as exc:  # pragma: no cover - failure path
                errors.append(exc)

        threads = [threading.Thread(target=hammer) for _ in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert errors == []
        h = IpfsHash(hash_content(blob))
        assert store.get(h) == blob
        assert store.stats().blob_count == 1


class TestGc:
    def test_gc_removes_only_unreferenced(self, store):
        keep = store.put(b"live blob")
        store.put(b"orphan one")
        store.put(b"orphan two")
        removed = store.gc([keep])
        assert removed == 2
        assert store.get(keep) == b"live blob"
        assert store.stats().blob_count == 1

    def test_gc_noop_when_all_live(self, store):
        handles = [store.put(bytes([i]) * 4) for i in range(5)]
        assert store.gc(handles) == 0
        assert store.stats().blob_count == 5
