"""Shared fixtures: deterministic RNG, identities, and populated groups."""

from __future__ import annotations

import random
from dataclasses import dataclass

import pytest

from groupvault.client import FileSharingClient, Identity, create_identity
from groupvault.proxy import Proxy


@pytest.fixture
def rng():
    """Deterministic bytes source with the same call shape as the OS CSPRNG."""
    return random.Random(0x6F5EED).randbytes


@pytest.fixture
def make_rng():
    def _make(seed: int):
        return random.Random(seed).randbytes

    return _make


@pytest.fixture
def proxy(tmp_path, rng) -> Proxy:
    """Disk-backed proxy over a fresh state directory."""
    return Proxy.open(tmp_path / "state", rng=rng)


@dataclass
class GroupSetup:
    """One group plus the identities that populate it."""

    proxy: Proxy
    client: FileSharingClient
    group_id: str
    owner: Identity
    identities: dict[str, Identity]

    def identity(self, user_id: str) -> Identity:
        return self.identities[user_id]


def build_group(proxy: Proxy, names: list[str], rng) -> GroupSetup:
    """First name owns the group; the rest join and get approved."""
    client = FileSharingClient(proxy, proxy.ledger)
    identities = {name: create_identity(name, rng) for name in names}
    owner = identities[names[0]]
    group_id = client.create_group(owner)
    for name in names[1:]:
        client.request_join(identities[name], group_id)
        client.approve_member(owner, group_id, name)
    return GroupSetup(proxy, client, group_id, owner, identities)


@pytest.fixture
def make_group(proxy, rng):
    def _make(names: list[str]) -> GroupSetup:
        return build_group(proxy, names, rng)

    return _make
