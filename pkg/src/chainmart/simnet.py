"""Discrete-event point-to-point network with per-link latency and loss.

Everything is driven by an external clock: send() stamps a delivery time of
sent_ms + the link's one-way latency, and due() hands back messages whose
delivery time has arrived. Drops are decided at send time from a seeded RNG,
so a whole scenario replays identically for a fixed seed and send sequence.
Links are directional; set_link writes one direction at a time.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass
from typing import Optional

from .escrow import DeliveryReceipt
from .identity import Address, Digest32, WrappedKey


@dataclass(frozen=True)
class LinkSpec:
    one_way_latency_ms: int = 50
    drop_rate: float = 0.0


@dataclass(frozen=True)
class NetworkMessage:
    sender: Address
    to: Address
    sent_ms: int


@dataclass(frozen=True)
class QueryData(NetworkMessage):
    contract_id: Digest32
    payload_digest: Digest32
    purpose: str
    consumer_enc_public: bytes


@dataclass(frozen=True)
class DataResponse(NetworkMessage):
    contract_id: Digest32
    payload_digest: Digest32
    ciphertext_bytes: bytes
    wrapped_key: WrappedKey
    receipt: DeliveryReceipt


@dataclass(frozen=True)
class Denied(NetworkMessage):
    contract_id: Digest32
    payload_digest: Digest32
    reason: str


class SimNet:
    def __init__(self, seed: int = 0, default_link: LinkSpec = LinkSpec()) -> None:
        self._rng = random.Random(seed)
        self._default = default_link
        self._links: dict[tuple[Address, Address], LinkSpec] = {}
        self._queues: dict[Address, list] = {}
        self._seq = 0  # heap tiebreaker; also keeps messages incomparable types apart
        self.sent_count = 0
        self.dropped_count = 0

    def set_link(self, sender: Address, to: Address, latency_ms: int, drop_rate: float = 0.0) -> None:
        self._links[(sender, to)] = LinkSpec(one_way_latency_ms=latency_ms, drop_rate=drop_rate)

    def set_symmetric(self, a: Address, b: Address, latency_ms: int, drop_rate: float = 0.0) -> None:
        self.set_link(a, b, latency_ms, drop_rate)
        self.set_link(b, a, latency_ms, drop_rate)

    def link(self, sender: Address, to: Address) -> LinkSpec:
        return self._links.get((sender, to), self._default)

    def send(self, msg: NetworkMessage) -> bool:
        """Queue a message for delivery; False means the link dropped it."""
        spec = self.link(msg.sender, msg.to)
        self.sent_count += 1
        if spec.drop_rate > 0 and self._rng.random() < spec.drop_rate:
            self.dropped_count += 1
            return False
        deliver_ms = msg.sent_ms + spec.one_way_latency_ms
        self._seq += 1
        heapq.heappush(self._queues.setdefault(msg.to, []), (deliver_ms, self._seq, msg))
        return True

    def due(self, recipient: Address, now_ms: int) -> list[NetworkMessage]:
        """Pop every message for the recipient whose delivery time has arrived."""
        queue = self._queues.get(recipient)
        if not queue:
            return []
        out = []
        while queue and queue[0][0] <= now_ms:
            out.append(heapq.heappop(queue)[2])
        return out

    def earliest_pending_ms(self) -> Optional[int]:
        """Delivery time of the next in-flight message anywhere, if any."""
        times = [q[0][0] for q in self._queues.values() if q]
        return min(times) if times else None

    def pending_count(self) -> int:
        return sum(len(q) for q in self._queues.values())
