"""Emulated 64-bit object header and the address model around it.

Layout (bit 0 = least significant):

    bits  0..1   tag: 0 = neutral, 1 = displaced (queue tail id in bits 2..63)
    bit   2      locked        (neutral mode only)
    bit   3      waiters-exist (neutral mode only)
    bit   4      impatient     (neutral mode only)
    bits  5..35  identity hash, 31 bits, 0 means not yet assigned
    bits 36..57  class id, 22 bits
    bits 58..61  age, 4 bits
    bits 62..63  unused, always 0

Tags 2 and 3 are reserved; decoding one raises, which is how header
corruption surfaces in tests instead of propagating silently.

Objects live at emulated addresses from a bump allocator. Each object
owns at least one 64-byte line with the header in the line's last word,
so header_addr % 64 == 56 and payload starts on the following line.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from random import Random

from .atomics import MASK64, AtomicU64

__all__ = [
    "TAG_NEUTRAL",
    "TAG_DISPLACED",
    "BIT_LOCKED",
    "BIT_WAITERS",
    "BIT_IMPATIENT",
    "IHASH_BITS",
    "KLASS_BITS",
    "AGE_BITS",
    "HEADER_OFFSET",
    "LINE",
    "HeaderDecodeError",
    "HeaderFields",
    "encode_neutral",
    "encode_displaced",
    "decode",
    "with_ihash",
    "SyncObject",
    "AddressSpace",
    "IdentityHashSource",
    "assign_identity_hash",
    "bucket_index",
]

TAG_SHIFT = 0
TAG_MASK = 0b11
TAG_NEUTRAL = 0
TAG_DISPLACED = 1

BIT_LOCKED = 1 << 2
BIT_WAITERS = 1 << 3
BIT_IMPATIENT = 1 << 4

IHASH_SHIFT = 5
IHASH_BITS = 31
IHASH_MASK = ((1 << IHASH_BITS) - 1) << IHASH_SHIFT

KLASS_SHIFT = 36
KLASS_BITS = 22
KLASS_MASK = ((1 << KLASS_BITS) - 1) << KLASS_SHIFT

AGE_SHIFT = 58
AGE_BITS = 4
AGE_MASK = ((1 << AGE_BITS) - 1) << AGE_SHIFT

REF_SHIFT = 2

LINE = 64
HEADER_OFFSET = 56


class HeaderDecodeError(ValueError):
    """Raised when a header word carries a reserved tag."""


@dataclass(frozen=True)
class HeaderFields:
    tag: int
    locked: bool = False
    waiters: bool = False
    impatient: bool = False
    ihash: int = 0
    klass: int = 0
    age: int = 0
    tail_id: int = 0


def encode_neutral(
    ihash: int = 0,
    klass: int = 0,
    age: int = 0,
    locked: bool = False,
    waiters: bool = False,
    impatient: bool = False,
) -> int:
    if not 0 <= ihash < (1 << IHASH_BITS):
        raise ValueError("identity hash out of range")
    if not 0 <= klass < (1 << KLASS_BITS):
        raise ValueError("class id out of range")
    if not 0 <= age < (1 << AGE_BITS):
        raise ValueError("age out of range")
    word = TAG_NEUTRAL
    if locked:
        word |= BIT_LOCKED
    if waiters:
        word |= BIT_WAITERS
    if impatient:
        word |= BIT_IMPATIENT
    word |= ihash << IHASH_SHIFT
    word |= klass << KLASS_SHIFT
    word |= age << AGE_SHIFT
    return word


def encode_displaced(tail_id: int) -> int:
    if not 0 < tail_id < (1 << (64 - REF_SHIFT)):
        raise ValueError("record id out of range")
    return (tail_id << REF_SHIFT) | TAG_DISPLACED


def decode(word: int) -> HeaderFields:
    tag = word & TAG_MASK
    if tag == TAG_NEUTRAL:
        return HeaderFields(
            tag=TAG_NEUTRAL,
            locked=bool(word & BIT_LOCKED),
            waiters=bool(word & BIT_WAITERS),
            impatient=bool(word & BIT_IMPATIENT),
            ihash=(word & IHASH_MASK) >> IHASH_SHIFT,
            klass=(word & KLASS_MASK) >> KLASS_SHIFT,
            age=(word & AGE_MASK) >> AGE_SHIFT,
        )
    if tag == TAG_DISPLACED:
        return HeaderFields(tag=TAG_DISPLACED, tail_id=word >> REF_SHIFT)
    raise HeaderDecodeError(f"reserved header tag {tag} in word {word:#018x}")


def with_ihash(word: int, ihash: int) -> int:
    # precondition: neutral word with ihash still zero
    return word | (ihash << IHASH_SHIFT)


class SyncObject:
    """One synchronizable object: a header word at an emulated address.

    addr and payload never change after construction. The remaining slots
    are per-algorithm scratch that a native build would place on the
    object's header line; they are mutated only under the discipline of
    the algorithm that owns them.
    """

    __slots__ = (
        "addr",
        "payload",
        "header",
        "outer",
        "impatient",
        "queue_head",
        "handoff_epoch",
        "debug_lock",
        "displaced_live",
        "orphan_flag",
        "native_cell",
    )

    def __init__(self, addr: int, payload: int, header_word: int) -> None:
        self.addr = addr
        self.payload = payload
        self.header = AtomicU64(header_word)
        self.outer = AtomicU64(0)
        self.impatient = False
        self.queue_head = None
        self.handoff_epoch = 0
        self.debug_lock = threading.Lock()
        self.displaced_live = False
        self.orphan_flag = False
        self.native_cell = None

    @property
    def header_addr(self) -> int:
        return self.addr + HEADER_OFFSET

    def __repr__(self) -> str:
        return f"SyncObject(addr={self.addr:#x}, header={self.header.load():#018x})"


class AddressSpace:
    """Bump allocator for object addresses, 64-byte aligned."""

    def __init__(self, base: int = 0x10000) -> None:
        if base % LINE:
            raise ValueError("base must be line aligned")
        self._cursor = base
        self._lock = threading.Lock()

    def new_object(self, payload: int = 64, klass: int = 0, age: int = 0) -> SyncObject:
        footprint = LINE + max(0, -(-payload // LINE)) * LINE
        with self._lock:
            addr = self._cursor
            self._cursor += footprint
        return SyncObject(addr, payload, encode_neutral(klass=klass, age=age))


class IdentityHashSource:
    """Seeded stream of nonzero 31-bit identity hash values."""

    def __init__(self, seed: int) -> None:
        self._rng = Random(seed)
        self._lock = threading.Lock()

    def next_value(self) -> int:
        with self._lock:
            while True:
                value = self._rng.getrandbits(IHASH_BITS)
                if value:
                    return value


def assign_identity_hash(obj: SyncObject, source: IdentityHashSource) -> int:
    """Install an identity hash into a neutral header, first caller wins.

    Works concurrently with the lock bits: every mutation is a CAS on the
    full word, so no flag update is lost. Callers must not pass an object
    whose header is displaced; the owning algorithm handles that mode.
    """
    while True:
        raw = obj.header.load()
        fields = decode(raw)
        if fields.tag != TAG_NEUTRAL:
            raise ValueError("cannot assign identity hash through a displaced header")
        if fields.ihash:
            return fields.ihash
        candidate = source.next_value()
        if obj.header.cas(raw, with_ihash(raw, candidate)):
            return candidate


_GOLDEN = 0x9E3779B97F4A7C15


def bucket_index(addr: int, nbuckets: int, salt: int) -> int:
    """Map an object address to a bucket.

    Multiplicative mixing of the salted address, taking the top bits.
    Addresses are line aligned so the low 6 bits carry no entropy; the
    multiply pushes the varying middle bits into the top. nbuckets must
    be a power of two.
    """
    if nbuckets & (nbuckets - 1):
        raise ValueError("nbuckets must be a power of two")
    mixed = ((addr ^ salt) * _GOLDEN) & MASK64
    return mixed >> (64 - nbuckets.bit_length() + 1)
