"""groupvault: encrypted group file sharing.

A trusted proxy manages per-group symmetric keys and an access-control
mapping table; encrypted files live in an open content-addressed blob store;
upload records live on an open append-only hash-chained ledger. Members hold
only their own keypairs and receive the group key wrapped to their public
key. Confidentiality rests solely on group-key encryption: store and ledger
are readable by anyone.
"""

__version__ = "0.1.0"

from .client import DownloadResult, FileSharingClient, Identity, Keystore, create_identity
from .content_store import BlobStore, DiskBlobStore, IpfsHash, MemoryBlobStore, StoreStats
from .crypto import (
    Ciphertext,
    Digest,
    EncryptionKeypair,
    GroupKey,
    SigningKeypair,
    WrappedKey,
    decrypt_file,
    encrypt_file,
    generate_encryption_keypair,
    generate_group_key,
    generate_signing_keypair,
    hash_content,
    sign,
    unwrap_key,
    verify,
    wrap_key,
)
from .ledger import Block, HashChainLedger, TransactionRecord, TransId
from .proxy import (
    FileIndexEntry,
    GroupState,
    MappingTable,
    MemberEntry,
    Proxy,
    RevocationReport,
)

__all__ = [
    "__version__",
    "Block",
    "BlobStore",
    "Ciphertext",
    "Digest",
    "DiskBlobStore",
    "DownloadResult",
    "EncryptionKeypair",
    "FileIndexEntry",
    "FileSharingClient",
    "GroupKey",
    "GroupState",
    "HashChainLedger",
    "Identity",
    "IpfsHash",
    "Keystore",
    "MappingTable",
    "MemberEntry",
    "MemoryBlobStore",
    "Proxy",
    "RevocationReport",
    "SigningKeypair",
    "StoreStats",
    "TransId",
    "TransactionRecord",
    "WrappedKey",
    "create_identity",
    "decrypt_file",
    "encrypt_file",
    "generate_encryption_keypair",
    "generate_group_key",
    "generate_signing_keypair",
    "hash_content",
    "sign",
    "unwrap_key",
    "verify",
    "wrap_key",
]
