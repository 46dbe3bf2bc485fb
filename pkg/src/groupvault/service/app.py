"""HTTP face of the proxy: one endpoint per proxy operation.

Group-state mutations require the same signatures as the underlying proxy
operations. The ledger and store read endpoints take no credentials at all:
both components are public by design, and everything they hold is either
ciphertext or metadata.

Build an application with :func:`create_app` (over a state directory) or
:func:`build_app` (over an existing proxy, for tests and embedding).
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..content_store import IpfsHash
from ..crypto import WrappedKey
from ..errors import (
    AlreadyMemberError,
    BadSignatureError,
    BlobIntegrityError,
    BlobNotFoundError,
    CannotRevokeOwnerError,
    DuplicateJoinRequestError,
    GroupVaultError,
    HashNotInGroupError,
    NotAMemberError,
    NotPendingError,
    SupersededHashError,
    TransactionNotFoundError,
    UnknownGroupError,
)
from ..ledger import TransactionRecord, TransId
from ..proxy import Proxy
from . import schemas

_ERROR_STATUS: dict[type[GroupVaultError], int] = {
    UnknownGroupError: 404,
    NotPendingError: 404,
    HashNotInGroupError: 404,
    TransactionNotFoundError: 404,
    BlobNotFoundError: 404,
    NotAMemberError: 403,
    BadSignatureError: 403,
    CannotRevokeOwnerError: 403,
    AlreadyMemberError: 409,
    DuplicateJoinRequestError: 409,
    SupersededHashError: 409,
    BlobIntegrityError: 500,
}


def _status_for(exc: GroupVaultError) -> int:
    for cls in type(exc).__mro__:
        if cls in _ERROR_STATUS:
            return _ERROR_STATUS[cls]
    return 500


def _hex_bytes(value: str, what: str) -> bytes:
    try:
        return bytes.fromhex(value)
    except ValueError:
        raise ValueError(f"{what} must be a hex string") from None


def _wrapped_key_model(wk: WrappedKey) -> schemas.WrappedKeyModel:
    return schemas.WrappedKeyModel(
        recipient=wk.recipient,
        group_id=wk.group_id,
        key_version=wk.key_version,
        blob=wk.blob.hex(),
    )


def _transaction_model(trans_id: TransId, record: TransactionRecord) -> schemas.TransactionModel:
    return schemas.TransactionModel(
        trans_id=str(trans_id),
        group_id=record.group_id,
        user_id=record.user_id,
        file_hash=record.file_hash.hex(),
        ipfs_hash=record.ipfs_hash.address,
        key_version=record.key_version,
    )


def create_app(state_root: str | Path) -> FastAPI:
    """Application over a state directory (created on first use)."""
    root = Path(state_root)
    root.mkdir(parents=True, exist_ok=True)
    return build_app(Proxy.open(root))


def build_app(proxy: Proxy) -> FastAPI:
    app = FastAPI(
        title="groupvault proxy",
        version=__version__,
        description="Group-keyed encrypted file sharing over a content-addressed "
        "store and a hash-chained transaction ledger.",
    )
    app.state.proxy = proxy
    store = proxy.store
    ledger = proxy.ledger

    @app.exception_handler(GroupVaultError)
    async def groupvault_error(request: Request, exc: GroupVaultError) -> JSONResponse:
        body = schemas.ErrorResponse(
            error=exc.code,
            message=str(exc),
            current_ipfs_hash=getattr(exc, "current_ipfs_hash", None),
        )
        return JSONResponse(status_code=_status_for(exc), content=body.model_dump(exclude_none=True))

    @app.exception_handler(ValueError)
    async def value_error(request: Request, exc: ValueError) -> JSONResponse:
        body = schemas.ErrorResponse(error="invalid_request", message=str(exc))
        return JSONResponse(status_code=400, content=body.model_dump(exclude_none=True))

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok", "version": __version__}

    # -- proxy operations -------------------------------------------------

    @app.post("/groups", response_model=schemas.RegisterOwnerResponse)
    def register_owner(req: schemas.RegisterOwnerRequest) -> schemas.RegisterOwnerResponse:
        group_id = proxy.register_owner(
            req.user_id,
            _hex_bytes(req.sig_public, "sig_public"),
            _hex_bytes(req.enc_public, "enc_public"),
        )
        return schemas.RegisterOwnerResponse(group_id=group_id)

    @app.post("/groups/{group_id}/join", response_model=schemas.JoinResponse)
    def request_join(group_id: str, req: schemas.JoinRequest) -> schemas.JoinResponse:
        proxy.request_join(
            group_id,
            req.user_id,
            _hex_bytes(req.sig_public, "sig_public"),
            _hex_bytes(req.enc_public, "enc_public"),
        )
        return schemas.JoinResponse(group_id=group_id, user_id=req.user_id)

    @app.post("/groups/{group_id}/approve", response_model=schemas.ApproveResponse)
    def approve_join(group_id: str, req: schemas.ApproveRequest) -> schemas.ApproveResponse:
        proxy.approve_join(
            group_id,
            req.candidate_user_id,
            _hex_bytes(req.owner_signature, "owner_signature"),
        )
        return schemas.ApproveResponse(group_id=group_id, user_id=req.candidate_user_id)

    @app.post("/groups/{group_id}/upload", response_model=schemas.UploadResponse)
    def upload(group_id: str, req: schemas.UploadRequest) -> schemas.UploadResponse:
        trans_id, ipfs_hash, file_hash = proxy.upload(
            group_id,
            req.user_id,
            _hex_bytes(req.file, "file"),
            _hex_bytes(req.signature, "signature"),
        )
        return schemas.UploadResponse(
            trans_id=str(trans_id), ipfs_hash=ipfs_hash.address, file_hash=file_hash.hex()
        )

    @app.post("/groups/{group_id}/download", response_model=schemas.DownloadResponse)
    def download(group_id: str, req: schemas.DownloadRequest) -> schemas.DownloadResponse:
        ciphertext, wrapped = proxy.download(
            group_id,
            req.user_id,
            IpfsHash.from_address(req.ipfs_hash),
            _hex_bytes(req.signature, "signature"),
        )
        return schemas.DownloadResponse(
            ciphertext=ciphertext.to_bytes().hex(),
            wrapped_key=_wrapped_key_model(wrapped),
        )

    @app.post("/groups/{group_id}/revoke", response_model=schemas.RevocationReportModel)
    def revoke(group_id: str, req: schemas.RevokeRequest) -> schemas.RevocationReportModel:
        report = proxy.revoke(
            group_id,
            req.revoked_user_id,
            _hex_bytes(req.owner_signature, "owner_signature"),
        )
        return schemas.RevocationReportModel(
            group_id=report.group_id,
            revoked_user=report.revoked_user,
            new_key_version=report.new_key_version,
            reencrypted_files=report.reencrypted_files,
            wrapped_keys_issued=report.wrapped_keys_issued,
            new_trans_ids=[str(t) for t in report.new_trans_ids],
            wrapped_keys=[_wrapped_key_model(wk) for wk in report.wrapped_keys],
        )

    @app.post("/groups/{group_id}/files", response_model=schemas.ListFilesResponse)
    def list_group_files(group_id: str, req: schemas.ListFilesRequest) -> schemas.ListFilesResponse:
        entries = proxy.list_group_files(
            group_id, req.user_id, _hex_bytes(req.signature, "signature")
        )
        return schemas.ListFilesResponse(
            group_id=group_id,
            files=[
                schemas.FileIndexEntryModel(
                    file_hash=e.file_hash.hex(),
                    current_ipfs_hash=e.current_ipfs_hash.address,
                    latest_trans_id=str(e.latest_trans_id),
                    uploader=e.uploader,
                )
                for e in entries
            ],
        )

    # -- public ledger reads ------------------------------------------------

    @app.get("/ledger/height", response_model=schemas.HeightResponse)
    def ledger_height() -> schemas.HeightResponse:
        return schemas.HeightResponse(height=ledger.height())

    @app.get("/ledger/verify", response_model=schemas.VerifyChainResponse)
    def ledger_verify() -> schemas.VerifyChainResponse:
        return schemas.VerifyChainResponse(ok=ledger.verify_chain())

    @app.get("/ledger/blocks", response_model=schemas.ChainResponse)
    def ledger_blocks() -> schemas.ChainResponse:
        blocks = [
            schemas.BlockModel(
                index=block.index,
                prev_hash=block.prev_hash.hex(),
                block_hash=block.block_hash.hex(),
                transaction=_transaction_model(block.trans_id(), record),
            )
            for block, record in ledger.records()
        ]
        return schemas.ChainResponse(height=ledger.height(), blocks=blocks)

    @app.get("/ledger/transactions/{trans_id}", response_model=schemas.TransactionModel)
    def ledger_transaction(trans_id: str) -> schemas.TransactionModel:
        record = ledger.get_transaction(TransId.from_string(trans_id))
        return _transaction_model(TransId.from_string(trans_id), record)

    # -- public store reads --------------------------------------------------

    @app.get("/store/stats", response_model=schemas.StoreStatsResponse)
    def store_stats() -> schemas.StoreStatsResponse:
        stats = store.stats()
        return schemas.StoreStatsResponse(
            blob_count=stats.blob_count,
            total_bytes=stats.total_bytes,
            dedup_hits=stats.dedup_hits,
        )

    @app.get("/store/blobs/{address}", response_model=schemas.BlobResponse)
    def store_blob(address: str) -> schemas.BlobResponse:
        blob = store.get(IpfsHash.from_address(address))
        return schemas.BlobResponse(address=address, blob=blob.hex())

    return app
