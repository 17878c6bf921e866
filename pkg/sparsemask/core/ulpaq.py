"""
Byte-stream context-mixing coder for serialized run-lengths.

ULPAQ keeps a single intra-byte context (the bits of the current byte seen
so far) and one SSE stage that refines the model probability per context.
The model and SSE outputs are averaged in the probability domain and the
result drives the binary arithmetic coder, most significant bit first.

The order-0 byte coder used by the rle-arith codec lives here too: it is
ULPAQ with the SSE stage switched off.
"""

import hashlib
import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional

from sparsemask.core.entropy_coding import (
    PROB_BITS,
    PROB_ONE,
    AdaptiveBitModel,
    ArithmeticDecoder,
    ArithmeticEncoder,
    clamp_probability,
)
from sparsemask.core.error_handling import ConfigError, CorruptStreamError

logger = logging.getLogger("sparsemask.ulpaq")

SSE_KNOTS = 33
SSE_STRETCH_LIMIT = 8.0
_KNOT_SPACING = 2 * SSE_STRETCH_LIMIT / (SSE_KNOTS - 1)

# observer(bit_index, bit, p1, model)
UlpaqObserver = Callable[[int, int, int, "UlpaqModel"], None]


@dataclass(frozen=True)
class UlpaqConfig:
    """
    ULPAQ model settings.

    Attributes:
        model_shift: Update shift of the intra-byte model
        sse_enabled: Whether the SSE stage takes part in the prediction
        sse_shift: Update shift of the SSE knots; None freezes the stage
    """

    model_shift: int = 5
    sse_enabled: bool = True
    sse_shift: Optional[int] = 7

    def __post_init__(self):
        if not 1 <= self.model_shift <= 15:
            raise ConfigError(f"model_shift must be in 1..15, got {self.model_shift}")
        if self.sse_shift is not None and not 1 <= self.sse_shift <= 15:
            raise ConfigError(f"sse_shift must be in 1..15 or None, got {self.sse_shift}")


class IntraByteModel:
    """
    256-entry bit predictor indexed by (1 << bits_seen) | partial_byte.

    Context 1 is the first bit of a byte; contexts 128..255 the last. Each
    entry is an AdaptiveBitModel, so p += (bit * 65536 - p) >> shift.
    """

    def __init__(self, shift: int = 5):
        self.shift = shift
        self.nodes: List[AdaptiveBitModel] = [AdaptiveBitModel(update_rate=shift) for _ in range(256)]

    def p1(self, context: int) -> int:
        return self.nodes[context].p1

    def update(self, context: int, bit: int) -> None:
        self.nodes[context].update(bit)

    @property
    def probs(self) -> List[int]:
        return [node.p1 for node in self.nodes]


def _squash16(t: float) -> int:
    return clamp_probability(int(PROB_ONE / (1.0 + math.exp(-t)) + 0.5))


class SseStage:
    """
    Per-context refinement over 33 knots spanning stretched probability [-8, 8].

    Knots start on the identity mapping, so an untrained stage returns
    (up to interpolation) its input probability. An update moves each of the
    two bracketing knots by its interpolation weight times 2^-shift of the
    distance to the bit.
    """

    def __init__(self, shift: Optional[int] = 7, contexts: int = 256):
        self.shift = shift
        identity = [_squash16(-SSE_STRETCH_LIMIT + k * _KNOT_SPACING) for k in range(SSE_KNOTS)]
        self.knots = [list(identity) for _ in range(contexts)]
        self._slot = (0, 0, 0.0)

    def refine(self, context: int, p1: int) -> int:
        p = p1 / PROB_ONE
        t = math.log(p / (1.0 - p))
        t = max(-SSE_STRETCH_LIMIT, min(SSE_STRETCH_LIMIT, t))
        position = (t + SSE_STRETCH_LIMIT) / _KNOT_SPACING
        lower = min(int(position), SSE_KNOTS - 2)
        fraction = position - lower
        self._slot = (context, lower, fraction)
        row = self.knots[context]
        return clamp_probability(int(row[lower] * (1.0 - fraction) + row[lower + 1] * fraction + 0.5))

    def update(self, bit: int) -> None:
        """Move the two knots bracketing the last refine() call toward the bit."""
        if self.shift is None:
            return
        context, lower, fraction = self._slot
        row = self.knots[context]
        target = bit << PROB_BITS
        for k, weight in ((lower, 1.0 - fraction), (lower + 1, fraction)):
            row[k] = clamp_probability(row[k] + (int((target - row[k]) * weight) >> self.shift))


class UlpaqModel:
    """Intra-byte model plus optional SSE stage, averaged in the probability domain."""

    def __init__(self, config: Optional[UlpaqConfig] = None):
        self.config = config or UlpaqConfig()
        self.model = IntraByteModel(self.config.model_shift)
        self.sse = SseStage(self.config.sse_shift) if self.config.sse_enabled else None
        self._context = 1

    def predict(self, context: int) -> int:
        self._context = context
        p = self.model.p1(context)
        if self.sse is None:
            return p
        return clamp_probability((p + self.sse.refine(context, p)) // 2)

    def update(self, bit: int) -> None:
        self.model.update(self._context, bit)
        if self.sse is not None:
            self.sse.update(bit)

    def state_digest(self) -> str:
        sse_state = self.sse.knots if self.sse is not None else None
        return hashlib.sha256(repr((self.model.probs, sse_state)).encode("ascii")).hexdigest()

def ulpaq_encode(data: bytes, config: Optional[UlpaqConfig] = None, observer: Optional[UlpaqObserver] = None) -> bytes:
    """
    Compress a byte string.

    Args:
        data: Input bytes
        config: Model settings; encoder and decoder must agree on them
        observer: Optional callback run after each coded bit

    Returns:
        The arithmetic-coded payload (empty for empty input)
    """
    model = UlpaqModel(config)
    encoder = ArithmeticEncoder()
    index = 0
    for byte in data:
        context = 1
        for shift in range(7, -1, -1):
            bit = (byte >> shift) & 1
            p1 = model.predict(context)
            encoder.encode_bit(bit, p1)
            model.update(bit)
            if observer is not None:
                observer(index, bit, p1, model)
            index += 1
            context = (context << 1) | bit
    payload = encoder.finish()
    logger.debug(f"ulpaq: {len(data)} bytes -> {len(payload)} bytes")
    return payload


def ulpaq_decode(
    payload: bytes,
    byte_count: int,
    config: Optional[UlpaqConfig] = None,
    observer: Optional[UlpaqObserver] = None,
) -> bytes:
    """
    Inverse of ulpaq_encode().

    Raises:
        CorruptStreamError: If byte_count is negative or the payload runs out before byte_count bytes
    """
    if byte_count < 0:
        raise CorruptStreamError(f"byte count {byte_count} is negative")
    if byte_count and not payload:
        raise CorruptStreamError(f"empty payload cannot hold {byte_count} bytes")
    model = UlpaqModel(config)
    decoder = ArithmeticDecoder(payload)
    out = bytearray()
    index = 0
    for _ in range(byte_count):
        context = 1
        for _ in range(8):
            p1 = model.predict(context)
            bit = decoder.decode_bit(p1)
            model.update(bit)
            if observer is not None:
                observer(index, bit, p1, model)
            index += 1
            context = (context << 1) | bit
        out.append(context & 0xFF)
    return bytes(out)


def order0_encode(data: bytes, update_rate: int = 5) -> bytes:
    """Compress bytes with the adaptive order-0 tree model (ULPAQ without SSE)."""
    return ulpaq_encode(data, UlpaqConfig(model_shift=update_rate, sse_enabled=False))


def order0_decode_varints(payload: bytes, value_count: int, update_rate: int = 5) -> bytes:
    """
    Decode bytes until value_count varints are complete.

    Returns:
        The varint byte stream
    """
    model = UlpaqModel(UlpaqConfig(model_shift=update_rate, sse_enabled=False))
    decoder = ArithmeticDecoder(payload) if value_count else None
    out = bytearray()
    completed = 0
    while completed < value_count:
        context = 1
        for _ in range(8):
            bit = decoder.decode_bit(model.predict(context))
            model.update(bit)
            context = (context << 1) | bit
        byte = context & 0xFF
        out.append(byte)
        if not byte & 0x80:
            completed += 1
    return bytes(out)
