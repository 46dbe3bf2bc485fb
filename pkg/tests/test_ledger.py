"""Hash chain behavior: append, lookup, canonical encoding, tamper-evidence."""

from __future__ import annotations

import hashlib
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from groupvault.content_store import IpfsHash
from groupvault.crypto import Digest, hash_content
from groupvault.errors import TransactionNotFoundError
from groupvault.ledger import (
    GENESIS_PREV_HASH,
    HashChainLedger,
    TransactionRecord,
    TransId,
)


@pytest.fixture
def ledger(tmp_path) -> HashChainLedger:
    return HashChainLedger(tmp_path / "ledger")


def make_record(n: int = 0, group: str = "grp-test", user: str = "alice",
                key_version: int = 1) -> TransactionRecord:
    payload = f"file {n}".encode()
    return TransactionRecord(
        group_id=group,
        user_id=user,
        file_hash=hash_content(payload),
        ipfs_hash=IpfsHash(hash_content(b"ct:" + payload)),
        key_version=key_version,
    )


def encode_by_hand(record: TransactionRecord) -> bytes:
    """Independent re-implementation of the canonical record encoding."""
    out = b""
    for chunk in (
        record.group_id.encode(),
        record.user_id.encode(),
        record.file_hash.value,
        record.ipfs_hash.digest.value,
    ):
        out += len(chunk).to_bytes(4, "big") + chunk
    return out + record.key_version.to_bytes(8, "big")


class TestCanonicalEncoding:
    def test_encode_matches_independent_layout(self):
        record = make_record(7, key_version=3)
        assert record.encode() == encode_by_hand(record)

    def test_decode_is_inverse(self):
        record = make_record(1)
        assert TransactionRecord.decode(record.encode()) == record

    def test_encoding_stable_across_instances(self):
        assert make_record(2).encode() == make_record(2).encode()

    @given(
        group=st.text(min_size=1, max_size=40),
        user=st.text(min_size=1, max_size=40),
        key_version=st.integers(min_value=1, max_value=2**40),
    )
    @settings(max_examples=100, deadline=None)
    def test_round_trip_property(self, group, user, key_version):
        record = TransactionRecord(
            group_id=group,
            user_id=user,
            file_hash=hash_content(group.encode()),
            ipfs_hash=IpfsHash(hash_content(user.encode())),
            key_version=key_version,
        )
        assert TransactionRecord.decode(record.encode()) == record

    def test_malformed_bytes_rejected(self):
        raw = make_record(3).encode()
        with pytest.raises(ValueError):
            TransactionRecord.decode(raw[:-1])
        with pytest.raises(ValueError):
            TransactionRecord.decode(raw + b"\x00")

    def test_invalid_fields_rejected(self):
        with pytest.raises(ValueError):
            make_record(group="")
        with pytest.raises(ValueError):
            make_record(user="")
        with pytest.raises(ValueError):
            make_record(key_version=0)


class TestSubmit:
    def test_genesis_block(self, ledger):
        ledger.submit(make_record(0))
        block = ledger.blocks()[0]
        assert block.index == 0
        assert block.prev_hash == GENESIS_PREV_HASH
        assert GENESIS_PREV_HASH.value == b"\x00" * 32

    def test_trans_id_format(self, ledger):
        trans_id = ledger.submit(make_record(0))
        text = str(trans_id)
        assert text.startswith("tx-")
        assert len(text) == 3 + 64
        assert TransId.from_string(text) == trans_id

    def test_trans_id_recomputes_offline(self, ledger):
        # independent re-hash: digest of (8-byte BE index || canonical bytes)
        for n in range(5):
            record = make_record(n)
            trans_id = ledger.submit(record)
            expected = hashlib.sha256(n.to_bytes(8, "big") + encode_by_hand(record)).hexdigest()
            assert str(trans_id) == "tx-" + expected

    def test_same_record_twice_gets_two_blocks(self, ledger):
        record = make_record(0)
        first = ledger.submit(record)
        second = ledger.submit(record)
        assert first != second
        assert ledger.height() == 2

    def test_block_hash_recomputes(self, ledger):
        ledger.submit(make_record(0))
        ledger.submit(make_record(1))
        for i, block in enumerate(ledger.blocks()):
            recomputed = hashlib.sha256(
                block.index.to_bytes(8, "big") + block.prev_hash.value + block.tx
            ).digest()
            assert block.block_hash == Digest(recomputed)
            assert block.index == i

    def test_rejects_non_record(self, ledger):
        with pytest.raises(ValueError):
            ledger.submit("not a record")


class TestLookup:
    def test_get_returns_exact_record(self, ledger):
        record = make_record(5)
        assert ledger.get_transaction(ledger.submit(record)) == record

    def test_get_by_string(self, ledger):
        record = make_record(6)
        trans_id = ledger.submit(record)
        assert ledger.get_transaction(str(trans_id)) == record

    def test_unknown_id(self, ledger):
        with pytest.raises(TransactionNotFoundError):
            ledger.get_transaction(TransId.compute(99, b"nothing"))

    def test_replay_100_submissions(self, ledger):
        pairs = []
        for n in range(100):
            record = make_record(n, user=f"user-{n % 7}", key_version=(n % 3) + 1)
            pairs.append((ledger.submit(record), record))
        for trans_id, record in pairs:
            assert ledger.get_transaction(trans_id) == record

    def test_height_counts_submissions_only(self, ledger):
        assert ledger.height() == 0
        t1 = ledger.submit(make_record(0))
        assert ledger.height() == 1
        ledger.get_transaction(t1)
        ledger.verify_chain()
        assert ledger.height() == 1


class TestTamperEvidence:
    def test_untouched_chain_verifies(self, ledger):
        for n in range(3):
            ledger.submit(make_record(n))
        assert ledger.verify_chain() is True

    def test_empty_chain_verifies(self, ledger):
        assert ledger.verify_chain() is True

    def test_every_byte_position_is_covered(self, ledger):
        for n in range(3):
            ledger.submit(make_record(n))
        path = ledger.path
        pristine = path.read_bytes()
        assert ledger.verify_chain() is True
        for position in range(len(pristine)):
            tampered = bytearray(pristine)
            tampered[position] ^= 0x01
            path.write_bytes(bytes(tampered))
            assert ledger.verify_chain() is False, f"flip at byte {position} went undetected"
        path.write_bytes(pristine)
        assert ledger.verify_chain() is True

    def test_truncation_detected(self, ledger):
        ledger.submit(make_record(0))
        ledger.submit(make_record(1))
        raw = ledger.path.read_bytes()
        ledger.path.write_bytes(raw[:-10])
        assert ledger.verify_chain() is False

    def test_appended_garbage_detected(self, ledger):
        ledger.submit(make_record(0))
        with open(ledger.path, "ab") as chain:
            chain.write(b"\x00\x00\x00\x04junk")
        assert ledger.verify_chain() is False


class TestPersistence:
    def test_reopen_preserves_records(self, tmp_path):
        ledger = HashChainLedger(tmp_path / "ledger")
        ids = [ledger.submit(make_record(n)) for n in range(10)]
        reopened = HashChainLedger(tmp_path / "ledger")
        assert reopened.height() == 10
        for n, trans_id in enumerate(ids):
            assert reopened.get_transaction(trans_id) == make_record(n)
        assert reopened.verify_chain() is True

    def test_append_after_reopen_links(self, tmp_path):
        ledger = HashChainLedger(tmp_path / "ledger")
        ledger.submit(make_record(0))
        reopened = HashChainLedger(tmp_path / "ledger")
        reopened.submit(make_record(1))
        assert reopened.verify_chain() is True
        assert reopened.height() == 2

    def test_appends_never_rewrite_existing_bytes(self, tmp_path):
        ledger = HashChainLedger(tmp_path / "ledger")
        ledger.submit(make_record(0))
        before = ledger.path.read_bytes()
        ledger.submit(make_record(1))
        after = ledger.path.read_bytes()
        assert after[:len(before)] == before
        assert len(after) > len(before)

    def test_corrupt_chain_still_opens(self, tmp_path):
        ledger = HashChainLedger(tmp_path / "ledger")
        trans_id = ledger.submit(make_record(0))
        ledger.submit(make_record(1))
        raw = bytearray(ledger.path.read_bytes())
        raw[-1] ^= 0xFF
        ledger.path.write_bytes(bytes(raw))
        reopened = HashChainLedger(tmp_path / "ledger")
        assert reopened.verify_chain() is False
        # the untampered prefix remains readable
        assert reopened.get_transaction(trans_id) == make_record(0)


class TestPublicReads:
    def test_records_in_order(self, ledger):
        submitted = [make_record(n) for n in range(4)]
        for record in submitted:
            ledger.submit(record)
        assert [record for _, record in ledger.records()] == submitted

    def test_reads_require_no_credentials(self, tmp_path):
        writer = HashChainLedger(tmp_path / "ledger")
        trans_id = writer.submit(make_record(0))
        # any process can open the same chain read-side and resolve ids
        reader = HashChainLedger(tmp_path / "ledger")
        assert reader.get_transaction(trans_id) == make_record(0)
        assert reader.verify_chain() is True


def test_random_flip_fuzz(tmp_path):
    rnd = random.Random(12)
    ledger = HashChainLedger(tmp_path / "ledger")
    for n in range(5):
        ledger.submit(make_record(n))
    pristine = ledger.path.read_bytes()
    for _ in range(50):
        tampered = bytearray(pristine)
        tampered[rnd.randrange(len(tampered))] ^= rnd.randint(1, 255)
        ledger.path.write_bytes(bytes(tampered))
        assert ledger.verify_chain() is False
    ledger.path.write_bytes(pristine)
    assert ledger.verify_chain() is True
