"""Cryptographic primitives: digests, signatures, file encryption, key wrapping.

All key material comes from an injectable ``rng(n) -> n bytes`` callable that
defaults to the OS CSPRNG; tests may pass a seeded generator through the same
interface. Values are immutable once created and every byte-level format used
on the wire or on disk is defined here:

* digests render as 64 lowercase hex chars,
* ciphertexts serialize as three length-prefixed fields
  (4-byte big-endian length, then bytes) in the order nonce, body, tag,
* wrapped-key blobs are ephemeral-public-key || nonce || sealed-key.
"""

from __future__ import annotations

import hashlib
import secrets
from dataclasses import dataclass
from typing import Callable

from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.asymmetric.x25519 import (
    X25519PrivateKey,
    X25519PublicKey,
)
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.hashes import SHA256
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from .errors import DecryptionError, KeyUnwrapError

Rng = Callable[[int], bytes]

DIGEST_SIZE = 32
KEY_SIZE = 32          # AES-256 group keys, raw Ed25519/X25519 keys
NONCE_SIZE = 12        # AES-GCM
TAG_SIZE = 16          # AES-GCM
SIGNATURE_SIZE = 64    # Ed25519

_WRAP_HKDF_INFO = b"groupvault/key-wrap/v1"


@dataclass(frozen=True)
class Digest:
    """A 32-byte cryptographic digest, rendered as lowercase hex."""

    value: bytes

    def __post_init__(self) -> None:
        if not isinstance(self.value, bytes) or len(self.value) != DIGEST_SIZE:
            raise ValueError(f"digest must be exactly {DIGEST_SIZE} bytes")

    def hex(self) -> str:
        return self.value.hex()

    @classmethod
    def from_hex(cls, text: str) -> "Digest":
        if len(text) != 2 * DIGEST_SIZE:
            raise ValueError("digest hex form must be exactly 64 characters")
        return cls(bytes.fromhex(text))

    def __str__(self) -> str:
        return self.hex()


def hash_content(data: bytes) -> Digest:
    """SHA-256 of the exact input bytes; the one digest used system-wide."""
    return Digest(hashlib.sha256(data).digest())


@dataclass(frozen=True)
class SigningKeypair:
    """Raw Ed25519 keypair; ``private`` is the 32-byte seed."""

    public: bytes
    private: bytes


@dataclass(frozen=True)
class EncryptionKeypair:
    """Raw X25519 keypair used as the key-wrapping target."""

    public: bytes
    private: bytes


@dataclass(frozen=True)
class GroupKey:
    """Versioned symmetric key shared by one group; rotated on revocation."""

    key_material: bytes
    version: int

    def __post_init__(self) -> None:
        if len(self.key_material) != KEY_SIZE:
            raise ValueError(f"group key material must be {KEY_SIZE} bytes")
        if self.version < 1:
            raise ValueError("group key version must be >= 1")


@dataclass(frozen=True)
class Ciphertext:
    """AEAD output; decryption fails detectably if any byte is modified."""

    nonce: bytes
    body: bytes
    tag: bytes

    def to_bytes(self) -> bytes:
        parts = []
        for field in (self.nonce, self.body, self.tag):
            parts.append(len(field).to_bytes(4, "big"))
            parts.append(field)
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Ciphertext":
        fields = []
        offset = 0
        for _ in range(3):
            if offset + 4 > len(data):
                raise ValueError("truncated ciphertext")
            length = int.from_bytes(data[offset:offset + 4], "big")
            offset += 4
            if offset + length > len(data):
                raise ValueError("truncated ciphertext")
            fields.append(data[offset:offset + length])
            offset += length
        if offset != len(data):
            raise ValueError("trailing bytes after ciphertext")
        return cls(*fields)


@dataclass(frozen=True)
class WrappedKey:
    """A group key encrypted to one recipient's public encryption key.

    Only ``blob`` is secret-bearing; recipient, group and version travel in
    the clear and are bound into the AEAD so they cannot be swapped.
    """

    recipient: str
    group_id: str
    key_version: int
    blob: bytes


def generate_signing_keypair(rng: Rng = secrets.token_bytes) -> SigningKeypair:
    """Fresh Ed25519 keypair from the given RNG."""
    private = Ed25519PrivateKey.from_private_bytes(rng(KEY_SIZE))
    return SigningKeypair(
        public=private.public_key().public_bytes_raw(),
        private=private.private_bytes_raw(),
    )


def generate_encryption_keypair(rng: Rng = secrets.token_bytes) -> EncryptionKeypair:
    """Fresh X25519 keypair from the given RNG."""
    private = X25519PrivateKey.from_private_bytes(rng(KEY_SIZE))
    return EncryptionKeypair(
        public=private.public_key().public_bytes_raw(),
        private=private.private_bytes_raw(),
    )


def sign(private: bytes, message: bytes) -> bytes:
    """Ed25519 signature over ``message`` (callers pass domain-prefixed digests)."""
    return Ed25519PrivateKey.from_private_bytes(private).sign(message)


def verify(public: bytes, message: bytes, signature: bytes) -> bool:
    """True iff ``signature`` was made by the key matching ``public`` over
    exactly ``message``. Malformed inputs return False rather than raising so
    callers can treat every failure uniformly as rejection."""
    try:
        Ed25519PublicKey.from_public_bytes(public).verify(signature, message)
        return True
    except (InvalidSignature, ValueError, TypeError):
        return False


def validate_signing_public_key(public: bytes) -> bytes:
    """Return ``public`` if it parses as a verification key, else ValueError."""
    try:
        Ed25519PublicKey.from_public_bytes(public)
    except (ValueError, TypeError) as exc:
        raise ValueError("malformed signing public key") from exc
    return public


def validate_encryption_public_key(public: bytes) -> bytes:
    """Return ``public`` if it parses as a key-wrapping target, else ValueError."""
    try:
        X25519PublicKey.from_public_bytes(public)
    except (ValueError, TypeError) as exc:
        raise ValueError("malformed encryption public key") from exc
    return public


def generate_group_key(version: int, rng: Rng = secrets.token_bytes) -> GroupKey:
    """Fresh random group key carrying ``version``."""
    if version < 1:
        raise ValueError("group key version must be >= 1")
    return GroupKey(key_material=rng(KEY_SIZE), version=version)


def encrypt_file(key: GroupKey, plaintext: bytes, rng: Rng = secrets.token_bytes) -> Ciphertext:
    """AES-256-GCM with a fresh random nonce per call."""
    nonce = rng(NONCE_SIZE)
    sealed = AESGCM(key.key_material).encrypt(nonce, plaintext, None)
    return Ciphertext(nonce=nonce, body=sealed[:-TAG_SIZE], tag=sealed[-TAG_SIZE:])


def decrypt_file(key: GroupKey, ct: Ciphertext) -> bytes:
    """Inverse of :func:`encrypt_file`.

    Raises:
        DecryptionError: wrong key, truncated body, or modified bytes.
    """
    try:
        return AESGCM(key.key_material).decrypt(ct.nonce, ct.body + ct.tag, None)
    except (InvalidTag, ValueError) as exc:
        raise DecryptionError("file decryption failed: wrong key or tampered ciphertext") from exc


def _wrap_context(group_id: str, user_id: str, key_version: int) -> bytes:
    # Bound into the AEAD so a blob cannot be replayed for another
    # recipient, group, or key version.
    return b"\x00".join((
        group_id.encode("utf-8"),
        user_id.encode("utf-8"),
        key_version.to_bytes(8, "big"),
    ))


def _derive_wrapping_key(shared_secret: bytes) -> bytes:
    return HKDF(
        algorithm=SHA256(),
        length=KEY_SIZE,
        salt=None,
        info=_WRAP_HKDF_INFO,
    ).derive(shared_secret)


def wrap_key(
    recipient_public: bytes,
    key: GroupKey,
    group_id: str,
    user_id: str,
    rng: Rng = secrets.token_bytes,
) -> WrappedKey:
    """Encrypt ``key`` to the recipient's X25519 public key.

    Ephemeral-static ECDH derives a per-wrap AES-GCM key; the blob is
    ephemeral public key (32) || nonce (12) || sealed key material.
    """
    try:
        recipient = X25519PublicKey.from_public_bytes(recipient_public)
    except (ValueError, TypeError) as exc:
        raise ValueError("malformed recipient public key") from exc
    ephemeral = X25519PrivateKey.from_private_bytes(rng(KEY_SIZE))
    wrapping_key = _derive_wrapping_key(ephemeral.exchange(recipient))
    nonce = rng(NONCE_SIZE)
    sealed = AESGCM(wrapping_key).encrypt(
        nonce, key.key_material, _wrap_context(group_id, user_id, key.version)
    )
    blob = ephemeral.public_key().public_bytes_raw() + nonce + sealed
    return WrappedKey(recipient=user_id, group_id=group_id, key_version=key.version, blob=blob)


def unwrap_key(recipient_private: bytes, wk: WrappedKey) -> GroupKey:
    """Recover the group key from a :class:`WrappedKey`.

    Raises:
        KeyUnwrapError: key mismatch or tampered blob.
    """
    if len(wk.blob) < KEY_SIZE + NONCE_SIZE + TAG_SIZE:
        raise KeyUnwrapError("wrapped key blob too short")
    ephemeral_public = wk.blob[:KEY_SIZE]
    nonce = wk.blob[KEY_SIZE:KEY_SIZE + NONCE_SIZE]
    sealed = wk.blob[KEY_SIZE + NONCE_SIZE:]
    try:
        private = X25519PrivateKey.from_private_bytes(recipient_private)
        shared = private.exchange(X25519PublicKey.from_public_bytes(ephemeral_public))
        key_material = AESGCM(_derive_wrapping_key(shared)).decrypt(
            nonce, sealed, _wrap_context(wk.group_id, wk.recipient, wk.key_version)
        )
    except (InvalidTag, ValueError, TypeError) as exc:
        raise KeyUnwrapError("key unwrap failed: wrong key or tampered blob") from exc
    return GroupKey(key_material=key_material, version=wk.key_version)
