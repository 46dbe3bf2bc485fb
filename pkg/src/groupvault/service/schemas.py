"""Request/response models for the proxy service API.

Binary values (keys, signatures, file bytes, ciphertexts, wrapped-key blobs)
travel as lowercase hex strings; digests as 64 hex chars; blob addresses as
``cas1-...`` and transaction ids as ``tx-...`` strings.
"""

from __future__ import annotations

from pydantic import BaseModel, Field


class RegisterOwnerRequest(BaseModel):
    user_id: str
    sig_public: str = Field(description="hex Ed25519 verification key")
    enc_public: str = Field(description="hex X25519 key-wrapping key")


class RegisterOwnerResponse(BaseModel):
    group_id: str


class JoinRequest(BaseModel):
    user_id: str
    sig_public: str
    enc_public: str


class JoinResponse(BaseModel):
    group_id: str
    user_id: str
    status: str = "pending"


class ApproveRequest(BaseModel):
    candidate_user_id: str
    owner_signature: str


class ApproveResponse(BaseModel):
    group_id: str
    user_id: str
    status: str = "member"


class UploadRequest(BaseModel):
    user_id: str
    file: str = Field(description="hex file bytes")
    signature: str


class UploadResponse(BaseModel):
    trans_id: str
    ipfs_hash: str
    file_hash: str


class DownloadRequest(BaseModel):
    user_id: str
    ipfs_hash: str
    signature: str


class WrappedKeyModel(BaseModel):
    recipient: str
    group_id: str
    key_version: int
    blob: str


class DownloadResponse(BaseModel):
    ciphertext: str = Field(description="hex serialized ciphertext")
    wrapped_key: WrappedKeyModel


class RevokeRequest(BaseModel):
    revoked_user_id: str
    owner_signature: str


class RevocationReportModel(BaseModel):
    group_id: str
    revoked_user: str
    new_key_version: int
    reencrypted_files: int
    wrapped_keys_issued: int
    new_trans_ids: list[str]
    wrapped_keys: list[WrappedKeyModel]


class ListFilesRequest(BaseModel):
    user_id: str
    signature: str


class FileIndexEntryModel(BaseModel):
    file_hash: str
    current_ipfs_hash: str
    latest_trans_id: str
    uploader: str


class ListFilesResponse(BaseModel):
    group_id: str
    files: list[FileIndexEntryModel]


class TransactionModel(BaseModel):
    trans_id: str
    group_id: str
    user_id: str
    file_hash: str
    ipfs_hash: str
    key_version: int


class BlockModel(BaseModel):
    index: int
    prev_hash: str
    block_hash: str
    transaction: TransactionModel


class ChainResponse(BaseModel):
    height: int
    blocks: list[BlockModel]


class HeightResponse(BaseModel):
    height: int


class VerifyChainResponse(BaseModel):
    ok: bool


class StoreStatsResponse(BaseModel):
    blob_count: int
    total_bytes: int
    dedup_hits: int


class BlobResponse(BaseModel):
    address: str
    blob: str = Field(description="hex blob bytes")


class ErrorResponse(BaseModel):
    error: str
    message: str
    current_ipfs_hash: str | None = None
