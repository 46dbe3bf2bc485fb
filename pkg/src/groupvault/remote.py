"""Thin client for the proxy service.

:class:`RemoteSystem` mirrors the in-process proxy's operation surface plus
the public ledger/store reads, over any ``httpx.Client``-compatible
transport: a real HTTP connection to a running daemon, or an in-process ASGI
portal (no sockets) over the same application. Service error payloads are
re-raised as the exact exception classes the in-process proxy would raise,
so callers cannot tell the difference.
"""

from __future__ import annotations

from pathlib import Path

import httpx

from .content_store import IpfsHash, StoreStats
from .crypto import Ciphertext, Digest, WrappedKey
from .errors import error_from_code
from .ledger import TransactionRecord, TransId
from .proxy import FileIndexEntry, RevocationReport


def connect(url: str) -> "RemoteSystem":
    """Adapter over a running service daemon."""
    return RemoteSystem(httpx.Client(base_url=url, timeout=60.0))


def connect_local(state_root: str | Path) -> "RemoteSystem":
    """Adapter over an in-process application mounted on ``state_root``.

    Requests go through the full HTTP stack (routing, validation, error
    mapping) without any network involvement.
    """
    import warnings

    with warnings.catch_warnings():
        # starlette >= 1.3 deprecates its httpx-backed test client in favor
        # of httpx2, which is not packaged everywhere yet; the import stays
        # quiet either way.
        warnings.filterwarnings("ignore", message=r".*starlette\.testclient.*")
        warnings.filterwarnings("ignore", message=r".*httpx2.*")
        from fastapi.testclient import TestClient

    from .service import create_app

    return RemoteSystem(TestClient(create_app(state_root), base_url="http://groupvault.local"))


class RemoteSystem:
    """Proxy-operation and public-read surface over an HTTP-like client."""

    def __init__(self, http: httpx.Client) -> None:
        self._http = http

    def close(self) -> None:
        self._http.close()

    def __enter__(self) -> "RemoteSystem":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def _call(self, method: str, path: str, json: dict | None = None) -> dict:
        response = self._http.request(method, path, json=json)
        if response.status_code >= 400:
            try:
                payload = response.json()
            except ValueError:
                payload = {}
            if "error" in payload:
                raise error_from_code(
                    payload["error"],
                    payload.get("message", response.text),
                    payload.get("current_ipfs_hash"),
                )
            if "detail" in payload:  # framework-level validation error
                raise ValueError(str(payload["detail"]))
            response.raise_for_status()
        return response.json()

    # -- proxy operations --------------------------------------------------

    def register_owner(self, user_id: str, sig_public: bytes, enc_public: bytes) -> str:
        data = self._call("POST", "/groups", json={
            "user_id": user_id,
            "sig_public": sig_public.hex(),
            "enc_public": enc_public.hex(),
        })
        return data["group_id"]

    def request_join(self, group_id: str, user_id: str, sig_public: bytes, enc_public: bytes) -> None:
        self._call("POST", f"/groups/{group_id}/join", json={
            "user_id": user_id,
            "sig_public": sig_public.hex(),
            "enc_public": enc_public.hex(),
        })

    def approve_join(self, group_id: str, candidate_user_id: str, owner_signature: bytes) -> None:
        self._call("POST", f"/groups/{group_id}/approve", json={
            "candidate_user_id": candidate_user_id,
            "owner_signature": owner_signature.hex(),
        })

    def upload(
        self, group_id: str, user_id: str, file: bytes, signature: bytes
    ) -> tuple[TransId, IpfsHash, Digest]:
        data = self._call("POST", f"/groups/{group_id}/upload", json={
            "user_id": user_id,
            "file": file.hex(),
            "signature": signature.hex(),
        })
        return (
            TransId.from_string(data["trans_id"]),
            IpfsHash.from_address(data["ipfs_hash"]),
            Digest.from_hex(data["file_hash"]),
        )

    def download(
        self, group_id: str, user_id: str, ipfs_hash: IpfsHash, signature: bytes
    ) -> tuple[Ciphertext, WrappedKey]:
        data = self._call("POST", f"/groups/{group_id}/download", json={
            "user_id": user_id,
            "ipfs_hash": ipfs_hash.address,
            "signature": signature.hex(),
        })
        return (
            Ciphertext.from_bytes(bytes.fromhex(data["ciphertext"])),
            _wrapped_key(data["wrapped_key"]),
        )

    def revoke(self, group_id: str, revoked_user_id: str, owner_signature: bytes) -> RevocationReport:
        data = self._call("POST", f"/groups/{group_id}/revoke", json={
            "revoked_user_id": revoked_user_id,
            "owner_signature": owner_signature.hex(),
        })
        return RevocationReport(
            group_id=data["group_id"],
            revoked_user=data["revoked_user"],
            new_key_version=data["new_key_version"],
            reencrypted_files=data["reencrypted_files"],
            wrapped_keys_issued=data["wrapped_keys_issued"],
            new_trans_ids=[TransId.from_string(t) for t in data["new_trans_ids"]],
            wrapped_keys=[_wrapped_key(wk) for wk in data["wrapped_keys"]],
        )

    def list_group_files(self, group_id: str, user_id: str, signature: bytes) -> list[FileIndexEntry]:
        data = self._call("POST", f"/groups/{group_id}/files", json={
            "user_id": user_id,
            "signature": signature.hex(),
        })
        return [
            FileIndexEntry(
                file_hash=Digest.from_hex(e["file_hash"]),
                current_ipfs_hash=IpfsHash.from_address(e["current_ipfs_hash"]),
                latest_trans_id=TransId.from_string(e["latest_trans_id"]),
                uploader=e["uploader"],
            )
            for e in data["files"]
        ]

    # -- public ledger reads -------------------------------------------------

    def get_transaction(self, trans_id: TransId | str) -> TransactionRecord:
        data = self._call("GET", f"/ledger/transactions/{trans_id}")
        return TransactionRecord(
            group_id=data["group_id"],
            user_id=data["user_id"],
            file_hash=Digest.from_hex(data["file_hash"]),
            ipfs_hash=IpfsHash.from_address(data["ipfs_hash"]),
            key_version=data["key_version"],
        )

    def height(self) -> int:
        return self._call("GET", "/ledger/height")["height"]

    def verify_chain(self) -> bool:
        return self._call("GET", "/ledger/verify")["ok"]

    def blocks(self) -> list[dict]:
        return self._call("GET", "/ledger/blocks")["blocks"]

    # -- public store reads ----------------------------------------------------

    def store_stats(self) -> StoreStats:
        data = self._call("GET", "/store/stats")
        return StoreStats(**data)

    def get_blob(self, address: str) -> bytes:
        return bytes.fromhex(self._call("GET", f"/store/blobs/{address}")["blob"])


def _wrapped_key(data: dict) -> WrappedKey:
    return WrappedKey(
        recipient=data["recipient"],
        group_id=data["group_id"],
        key_version=data["key_version"],
        blob=bytes.fromhex(data["blob"]),
    )
