"""groupvault command line: identities, groups, uploads, downloads, revocation.

The CLI is a thin client of the proxy service. By default each invocation
mounts the service in-process over ``--state-root`` (guarded by a lock file
so only one invocation mutates a state directory at a time); with ``--url``
it talks to a daemon started with ``groupvault serve`` instead. ``--json``
switches output to one machine-readable record per command.

Exit codes: 0 success, 2 usage, 3 authorization/membership failure,
4 integrity failure, 5 I/O.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from filelock import FileLock, Timeout

from . import protocol
from .client import FileSharingClient, Keystore, create_identity
from .crypto import hash_content, sign
from .errors import (
    AlreadyMemberError,
    BadSignatureError,
    BlobIntegrityError,
    BlobNotFoundError,
    CannotRevokeOwnerError,
    DecryptionError,
    DuplicateJoinRequestError,
    GroupVaultError,
    HashNotInGroupError,
    KeystoreError,
    NotAMemberError,
    NotPendingError,
    SupersededHashError,
    TransactionNotFoundError,
    UnknownGroupError,
)
from .ledger import TransId
from .remote import RemoteSystem, connect, connect_local

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_AUTH = 3
EXIT_INTEGRITY = 4
EXIT_IO = 5

LOCK_FILE = ".lock"
LOCK_TIMEOUT_SECONDS = 10.0

_AUTH_ERRORS = (
    UnknownGroupError,
    NotAMemberError,
    BadSignatureError,
    AlreadyMemberError,
    DuplicateJoinRequestError,
    NotPendingError,
    CannotRevokeOwnerError,
    HashNotInGroupError,
    SupersededHashError,
)
_INTEGRITY_ERRORS = (BlobIntegrityError, DecryptionError)
_IO_ERRORS = (TransactionNotFoundError, BlobNotFoundError)


def exit_code_for(exc: GroupVaultError) -> int:
    if isinstance(exc, _AUTH_ERRORS):
        return EXIT_AUTH
    if isinstance(exc, _INTEGRITY_ERRORS):
        return EXIT_INTEGRITY
    if isinstance(exc, KeystoreError):
        return EXIT_USAGE
    if isinstance(exc, _IO_ERRORS):
        return EXIT_IO
    return EXIT_IO


class CliContext:
    """Per-invocation wiring: keystore, service connection, state lock."""

    def __init__(self, args: argparse.Namespace) -> None:
        self.json_mode: bool = args.json
        self.keystore = Keystore(args.keystore)
        self.state_root = Path(args.state_root)
        self.url: str | None = args.url
        self._system: RemoteSystem | None = None
        self._lock: FileLock | None = None

    def system(self) -> RemoteSystem:
        if self._system is None:
            if self.url:
                self._system = connect(self.url)
            else:
                self.acquire_lock()
                self._system = connect_local(self.state_root)
        return self._system

    def acquire_lock(self) -> None:
        # one CLI invocation at a time per state directory
        self.state_root.mkdir(parents=True, exist_ok=True)
        self._lock = FileLock(str(self.state_root / LOCK_FILE))
        self._lock.acquire(timeout=LOCK_TIMEOUT_SECONDS)

    def close(self) -> None:
        if self._system is not None:
            self._system.close()
            self._system = None
        if self._lock is not None and self._lock.is_locked:
            self._lock.release()
            self._lock = None

    def emit(self, record: dict, lines: list[str]) -> None:
        if self.json_mode:
            print(json.dumps(record, sort_keys=True))
        else:
            for line in lines:
                print(line)


def cmd_keygen(ctx: CliContext, args: argparse.Namespace) -> int:
    identity = create_identity(args.user_id)
    path = ctx.keystore.save(identity, force=args.force)
    ctx.emit(
        {
            "ok": True,
            "user_id": identity.user_id,
            "sig_public": identity.signing.public.hex(),
            "enc_public": identity.encryption.public.hex(),
            "keystore_file": str(path),
        },
        [
            f"user_id: {identity.user_id}",
            f"sig_public: {identity.signing.public.hex()}",
            f"enc_public: {identity.encryption.public.hex()}",
            f"keystore_file: {path}",
        ],
    )
    return EXIT_OK


def cmd_create_group(ctx: CliContext, args: argparse.Namespace) -> int:
    identity = ctx.keystore.load(args.user_id)
    group_id = ctx.system().register_owner(
        identity.user_id, identity.signing.public, identity.encryption.public
    )
    ctx.emit(
        {"ok": True, "group_id": group_id, "owner": identity.user_id},
        [f"group_id: {group_id}"],
    )
    return EXIT_OK


def cmd_join(ctx: CliContext, args: argparse.Namespace) -> int:
    identity = ctx.keystore.load(args.user_id)
    ctx.system().request_join(
        args.group_id, identity.user_id, identity.signing.public, identity.encryption.public
    )
    ctx.emit(
        {"ok": True, "group_id": args.group_id, "user_id": identity.user_id, "status": "pending"},
        [f"join request for {identity.user_id} in {args.group_id} is pending owner approval"],
    )
    return EXIT_OK


def cmd_approve(ctx: CliContext, args: argparse.Namespace) -> int:
    owner = ctx.keystore.load(args.by)
    system = ctx.system()
    FileSharingClient(system, system).approve_member(owner, args.group_id, args.user_id)
    ctx.emit(
        {"ok": True, "group_id": args.group_id, "user_id": args.user_id, "status": "member"},
        [f"{args.user_id} is now a member of {args.group_id}"],
    )
    return EXIT_OK


def cmd_upload(ctx: CliContext, args: argparse.Namespace) -> int:
    identity = ctx.keystore.load(args.user_id)
    data = Path(args.path).read_bytes()
    signature = sign(identity.signing.private, protocol.upload_message(hash_content(data)))
    trans_id, ipfs_hash, file_hash = ctx.system().upload(
        args.group_id, identity.user_id, data, signature
    )
    ctx.emit(
        {
            "ok": True,
            "trans_id": str(trans_id),
            "ipfs_hash": ipfs_hash.address,
            "file_hash": file_hash.hex(),
            "bytes": len(data),
        },
        [
            f"trans_id: {trans_id}",
            f"ipfs_hash: {ipfs_hash.address}",
            f"file_hash: {file_hash.hex()}",
        ],
    )
    return EXIT_OK


def cmd_download(ctx: CliContext, args: argparse.Namespace) -> int:
    identity = ctx.keystore.load(args.user_id)
    trans_id = TransId.from_string(args.trans_id)
    system = ctx.system()
    result = FileSharingClient(system, system).download_file(identity, args.group_id, trans_id)
    Path(args.out_path).write_bytes(result.plaintext)
    verdict = "VERIFIED" if result.verified else "FAILED"
    ctx.emit(
        {
            "ok": result.verified,
            "trans_id": args.trans_id,
            "file_hash": result.file_hash_ledger.hex(),
            "file_hash_local": result.file_hash_local.hex(),
            "verified": result.verified,
            "key_version": result.key_version,
            "out_path": str(args.out_path),
            "bytes": len(result.plaintext),
        },
        [
            f"wrote {len(result.plaintext)} bytes to {args.out_path}",
            f"key_version: {result.key_version}",
            f"verification: {verdict}",
        ],
    )
    return EXIT_OK if result.verified else EXIT_INTEGRITY


def cmd_revoke(ctx: CliContext, args: argparse.Namespace) -> int:
    owner = ctx.keystore.load(args.owner_id)
    system = ctx.system()
    report = FileSharingClient(system, system).revoke_member(owner, args.group_id, args.user_id)
    new_trans_ids = [str(t) for t in report.new_trans_ids]
    ctx.emit(
        {
            "ok": True,
            "group_id": report.group_id,
            "revoked_user": report.revoked_user,
            "new_key_version": report.new_key_version,
            "reencrypted_files": report.reencrypted_files,
            "wrapped_keys_issued": report.wrapped_keys_issued,
            "new_trans_ids": new_trans_ids,
        },
        [
            f"revoked {report.revoked_user} from {report.group_id}",
            f"new_key_version: {report.new_key_version}",
            f"reencrypted_files: {report.reencrypted_files}",
            f"wrapped_keys_issued: {report.wrapped_keys_issued}",
        ]
        + [f"new_trans_id: {t}" for t in new_trans_ids],
    )
    return EXIT_OK


def cmd_verify(ctx: CliContext, args: argparse.Namespace) -> int:
    data = Path(args.path).read_bytes()
    trans_id = TransId.from_string(args.trans_id)
    system = ctx.system()
    ok = FileSharingClient(system, system).verify_file(data, trans_id)
    ctx.emit(
        {
            "ok": ok,
            "verified": ok,
            "trans_id": args.trans_id,
            "file_hash": hash_content(data).hex(),
        },
        ["true" if ok else "false"],
    )
    return EXIT_OK if ok else EXIT_INTEGRITY


def cmd_ledger(ctx: CliContext, args: argparse.Namespace) -> int:
    system = ctx.system()
    if args.action == "verify":
        ok = system.verify_chain()
        ctx.emit(
            {"ok": ok, "height": system.height()},
            [f"ledger: {'OK' if ok else 'FAIL'}"],
        )
        return EXIT_OK if ok else EXIT_INTEGRITY
    blocks = system.blocks()
    lines = []
    for block in blocks:
        tx = block["transaction"]
        lines.append(
            f"[{block['index']}] {tx['trans_id']} group={tx['group_id']} "
            f"user={tx['user_id']} key_v{tx['key_version']} "
            f"file={tx['file_hash']} blob={tx['ipfs_hash']}"
        )
    ctx.emit({"ok": True, "height": len(blocks), "blocks": blocks}, lines or ["(empty ledger)"])
    return EXIT_OK


def cmd_serve(ctx: CliContext, args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    ctx.acquire_lock()
    app = create_app(ctx.state_root)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="groupvault",
        description="Encrypted group file sharing over a content-addressed store "
        "and a hash-chained transaction ledger.",
    )
    parser.add_argument(
        "--state-root",
        default=os.environ.get("GROUPVAULT_STATE", str(Path.home() / ".groupvault" / "state")),
        help="proxy/store/ledger state directory (env: GROUPVAULT_STATE)",
    )
    parser.add_argument(
        "--keystore",
        default=os.environ.get("GROUPVAULT_KEYSTORE", str(Path.home() / ".groupvault")),
        help="identity keystore directory (env: GROUPVAULT_KEYSTORE)",
    )
    parser.add_argument(
        "--json", action="store_true", help="emit one JSON record per command on stdout"
    )
    parser.add_argument(
        "--url",
        default=os.environ.get("GROUPVAULT_URL"),
        help="base URL of a running service; default is in-process over --state-root "
        "(env: GROUPVAULT_URL)",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    keygen = sub.add_parser("keygen", help="create an identity in the keystore")
    keygen.add_argument("user_id")
    keygen.add_argument("--force", action="store_true", help="overwrite an existing identity")
    keygen.set_defaults(func=cmd_keygen)

    create_group = sub.add_parser("create-group", help="register a new group owned by USER_ID")
    create_group.add_argument("user_id")
    create_group.set_defaults(func=cmd_create_group)

    join = sub.add_parser("join", help="request membership in a group")
    join.add_argument("group_id")
    join.add_argument("user_id")
    join.set_defaults(func=cmd_join)

    approve = sub.add_parser("approve", help="approve a pending join request (owner only)")
    approve.add_argument("group_id")
    approve.add_argument("user_id", help="candidate to admit")
    approve.add_argument("--by", required=True, help="owner identity that signs the approval")
    approve.set_defaults(func=cmd_approve)

    upload = sub.add_parser("upload", help="encrypt and share a file with a group")
    upload.add_argument("user_id")
    upload.add_argument("group_id")
    upload.add_argument("path")
    upload.set_defaults(func=cmd_upload)

    download = sub.add_parser("download", help="fetch, decrypt, and verify a shared file")
    download.add_argument("user_id")
    download.add_argument("group_id")
    download.add_argument("trans_id")
    download.add_argument("out_path")
    download.set_defaults(func=cmd_download)

    revoke = sub.add_parser("revoke", help="remove a member and rotate the group key (owner only)")
    revoke.add_argument("owner_id")
    revoke.add_argument("group_id")
    revoke.add_argument("user_id", help="member to revoke")
    revoke.set_defaults(func=cmd_revoke)

    verify = sub.add_parser("verify", help="check a local file against its ledger record")
    verify.add_argument("path")
    verify.add_argument("trans_id")
    verify.set_defaults(func=cmd_verify)

    ledger = sub.add_parser("ledger", help="inspect or verify the transaction chain")
    ledger.add_argument("action", choices=["show", "verify"])
    ledger.set_defaults(func=cmd_ledger)

    serve = sub.add_parser("serve", help="run the proxy service as an HTTP daemon")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8470)
    serve.set_defaults(func=cmd_serve)

    return parser


def _fail(ctx: CliContext, exc: Exception, code: int, error: str) -> int:
    record = {"ok": False, "error": error, "message": str(exc)}
    if isinstance(exc, SupersededHashError):
        record["current_ipfs_hash"] = exc.current_ipfs_hash
    if ctx.json_mode:
        print(json.dumps(record, sort_keys=True))
    else:
        print(f"error: {exc}", file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    ctx = CliContext(args)
    try:
        return args.func(ctx, args)
    except GroupVaultError as exc:
        return _fail(ctx, exc, exit_code_for(exc), exc.code)
    except ValueError as exc:
        return _fail(ctx, exc, EXIT_USAGE, "usage")
    except Timeout as exc:
        return _fail(ctx, exc, EXIT_IO, "state_locked")
    except OSError as exc:
        return _fail(ctx, exc, EXIT_IO, "io_error")
    finally:
        ctx.close()


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
