"""Monte-Carlo transcript of the classical ball-and-pipe protocol.

One bit per minute. On even minutes the transmitter rolls a ball for a 1-bit
and stays idle for a 0-bit; on odd minutes the convention flips. The receiver
decodes every minute from whether a ball arrived; post-selecting on the
minutes *without* an arrival keeps exactly the bits whose transmission never
crossed the pipe, and those decode correctly by construction. The protocol
itself is deterministic; randomness only enters through message generation.
"""
from __future__ import annotations

import io
import random
from dataclasses import dataclass
from typing import Sequence


@dataclass(frozen=True)
class MinuteRecord:
    minute: int            # 1-based; minute 1 is odd
    parity: str            # "even" | "odd"
    bit: int
    ball_sent: bool
    ball_received: bool    # perfect pipe: every sent ball arrives in-slot
    channel_crossing: bool
    kept: bool             # post-selected: no ball received
    decoded: int


@dataclass(frozen=True)
class ClassicalTranscript:
    records: tuple[MinuteRecord, ...]

    @property
    def message(self) -> tuple[int, ...]:
        return tuple(r.bit for r in self.records)

    @property
    def decoded_bits(self) -> tuple[int, ...]:
        return tuple(r.decoded for r in self.records)

    @property
    def kept_indices(self) -> tuple[int, ...]:
        return tuple(i for i, r in enumerate(self.records) if r.kept)

    @property
    def discard_count(self) -> int:
        return sum(1 for r in self.records if not r.kept)

    @property
    def discard_fraction(self) -> float:
        return self.discard_count / len(self.records)

    @property
    def crossing_count(self) -> int:
        return sum(1 for r in self.records if r.channel_crossing)

    def kept_all_counterfactual(self) -> bool:
        """True iff every post-selected bit decoded correctly with no crossing."""
        return all(
            r.decoded == r.bit and not r.channel_crossing
            for r in self.records
            if r.kept
        )

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("minute,parity,bit,sent,received,kept\n")
        for r in self.records:
            out.write(
                f"{r.minute},{r.parity},{r.bit},"
                f"{int(r.ball_sent)},{int(r.ball_received)},{int(r.kept)}\n"
            )
        return out.getvalue()

    def to_dict(self) -> dict:
        return {
            "length": len(self.records),
            "discard_count": self.discard_count,
            "discard_fraction": self.discard_fraction,
            "crossing_count": self.crossing_count,
            "kept_indices": list(self.kept_indices),
            "kept_all_counterfactual": self.kept_all_counterfactual(),
            "decoded_bits": list(self.decoded_bits),
        }


def generate_message(length: int, seed: int | None = None, p_one: float = 0.5) -> tuple[int, ...]:
    rng = random.Random(seed)
    return tuple(1 if rng.random() < p_one else 0 for _ in range(length))


def run_classical(message: Sequence[int], seed: int | None = None) -> ClassicalTranscript:
    """Execute the protocol on a bit sequence.

    ``seed`` is accepted for interface symmetry with the quantum runners;
    the transcript itself is a deterministic function of the message.
    """
    if not message:
        raise ValueError("message must be nonempty")
    del seed
    records = []
    for i, bit in enumerate(message):
        if bit not in (0, 1):
            raise ValueError(f"message[{i}] = {bit!r} is not a bit")
        minute = i + 1
        even = minute % 2 == 0
        sent = (bit == 1) if even else (bit == 0)
        received = sent
        decoded = (1 if received else 0) if even else (0 if received else 1)
        records.append(
            MinuteRecord(
                minute=minute,
                parity="even" if even else "odd",
                bit=bit,
                ball_sent=sent,
                ball_received=received,
                channel_crossing=sent,
                kept=not received,
                decoded=decoded,
            )
        )
    return ClassicalTranscript(records=tuple(records))
