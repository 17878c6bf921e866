"""
Context-modelling mask codecs.

Every codec here scans the mask in row-major order and codes one bit per
pixel with the binary arithmetic coder. They differ only in the model that
turns already-coded pixels into a probability:

- marwood: the global ratio of remaining ones to remaining pixels
- demaret: an adaptive estimate selected by the number of ones among the
  12 causal neighbours
- bpaq-s / bpaq-m: local contexts combined by linear evidence mixing, plus
  static weights for a stationary estimate and the global ratio
- bpaq-l / bpaq-xl: local contexts and the global ratio combined by
  logistic mixing (contiguous contexts for L, non-contiguous for XL)

Decoders replay the same model, so the state after every pixel is identical
on both sides; models expose state_digest() so tests can check that.
"""

import hashlib
import logging
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from sparsemask.core.entropy_coding import (
    PROB_MAX,
    PROB_MIN,
    PROB_ONE,
    ArithmeticDecoder,
    ArithmeticEncoder,
    clamp_probability,
    quantize_probability,
)
from sparsemask.core.error_handling import ConfigError, CorruptStreamError
from sparsemask.core.image_io import BinaryMask

logger = logging.getLogger("sparsemask.context_codecs")

# Causal neighbours (row offset, column offset), nearest first.
# The order-m local context is made of the first m of them.
NEIGHBOUR_OFFSETS: Tuple[Tuple[int, int], ...] = (
    (0, -1),
    (-1, 0),
    (-1, -1),
    (-1, 1),
    (0, -2),
    (-2, 0),
    (-1, -2),
    (-1, 2),
    (-2, -1),
    (-2, 1),
    (-2, -2),
    (-2, 2),
)

_PAD_ROWS = 2
_PAD_COLS = 2

COUNT_SMOOTHING = 0.2
EVIDENCE_FLOOR = 0.5
LINEAR_INITIAL_WEIGHT = 1.0
LOGISTIC_INITIAL_WEIGHT = 0.1
LEARNING_RATE = 0.002  # nominal 0.02 rescaled from fixed-point stretch units to natural-log logits
STATIC_MIX = (0.4, 0.2, 0.4)  # p_dyn, p_stat, p_global
HALVING_FLOOR = 2.0
DEMARET_PRIOR = 0.5

_STRETCH_LIMIT = math.log(PROB_MAX / PROB_MIN)
_MIX_LIMIT = 30.0

# observer(pixel_index, bit, p1 or None when the bit was implied, model)
Observer = Callable[[int, int, Optional[int], "ContextModel"], None]


def stretch(p: float) -> float:
    return math.log(p / (1.0 - p))


def squash(t: float) -> float:
    return 1.0 / (1.0 + math.exp(-t))


def _clamp_unit(p: float) -> float:
    lo = PROB_MIN / PROB_ONE
    hi = PROB_MAX / PROB_ONE
    return lo if p < lo else hi if p > hi else p


@dataclass(frozen=True)
class ContextLayout:
    """
    Local contexts as tuples of indices into NEIGHBOUR_OFFSETS.

    The pattern of a context is the bits of its neighbours, the first listed
    neighbour in the least significant position.
    """

    contexts: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        for context in self.contexts:
            if not context or any(not 0 <= i < len(NEIGHBOUR_OFFSETS) for i in context):
                raise ConfigError(f"invalid context {context}")

    @classmethod
    def contiguous(cls, max_order: int) -> "ContextLayout":
        """Nested contexts of order 1..max_order."""
        return cls(tuple(tuple(range(order)) for order in range(1, max_order + 1)))

    @classmethod
    def nearest_subsets(cls, size: int = 4) -> "ContextLayout":
        """Every non-empty subset of the nearest `size` neighbours, smallest subsets first."""
        return cls(tuple(subset for k in range(1, size + 1) for subset in combinations(range(size), k)))

    def patterns(self, neighbours: Sequence[int]) -> List[int]:
        out = []
        for context in self.contexts:
            pattern = 0
            for shift, index in enumerate(context):
                pattern |= neighbours[index] << shift
            out.append(pattern)
        return out


class CausalNeighbourhood:
    """Already-coded bits on a zero-padded canvas; pixels outside the image read as 0."""

    def __init__(self, width: int, height: int):
        self._canvas = [[0] * (width + 2 * _PAD_COLS) for _ in range(height + _PAD_ROWS)]

    def neighbours(self, row: int, col: int) -> List[int]:
        canvas = self._canvas
        r = row + _PAD_ROWS
        c = col + _PAD_COLS
        return [canvas[r + dy][c + dx] for dy, dx in NEIGHBOUR_OFFSETS]

    def put(self, row: int, col: int, bit: int) -> None:
        self._canvas[row + _PAD_ROWS][col + _PAD_COLS] = bit


def _digest(*parts) -> str:
    return hashlib.sha256(repr(parts).encode("ascii")).hexdigest()


class ContextModel:
    """
    Interface shared by the pixel models.

    For each pixel the driver calls select(), then predict(), codes the bit
    unless forced_bit is set, and finally calls update().
    """

    def select(self, neighbours: Sequence[int]) -> None:
        pass

    @property
    def forced_bit(self) -> Optional[int]:
        return None

    def predict(self) -> int:
        raise NotImplementedError

    def update(self, bit: int) -> None:
        raise NotImplementedError

    def state_digest(self) -> str:
        raise NotImplementedError


@dataclass
class GlobalCounts:
    """Remaining ones and remaining pixels of the scan."""

    remaining_ones: int
    remaining_pixels: int

    def __post_init__(self):
        if not 0 <= self.remaining_ones <= self.remaining_pixels:
            raise CorruptStreamError(
                f"ones count {self.remaining_ones} is impossible for {self.remaining_pixels} pixels",
                {"ones_count": self.remaining_ones, "pixels": self.remaining_pixels},
            )

    @property
    def probability(self) -> float:
        return self.remaining_ones / self.remaining_pixels

    @property
    def forced_bit(self) -> Optional[int]:
        if self.remaining_ones == 0:
            return 0
        if self.remaining_ones == self.remaining_pixels:
            return 1
        return None

    def consume(self, bit: int) -> None:
        self.remaining_ones -= bit
        self.remaining_pixels -= 1


class MarwoodModel(ContextModel):
    """p1 = V_r / N_r; once all ones or all zeros are used up the rest of the scan is implied."""

    def __init__(self, ones_count: int, pixels: int):
        self.counts = GlobalCounts(ones_count, pixels)

    @property
    def forced_bit(self) -> Optional[int]:
        return self.counts.forced_bit

    def predict(self) -> int:
        ones = self.counts.remaining_ones
        pixels = self.counts.remaining_pixels
        return clamp_probability((ones * PROB_ONE + pixels // 2) // pixels)

    def update(self, bit: int) -> None:
        self.counts.consume(bit)

    def state_digest(self) -> str:
        return _digest(self.counts.remaining_ones, self.counts.remaining_pixels)


class DemaretModel(ContextModel):
    """Adaptive counts selected by the number of ones among the 12 causal neighbours."""

    def __init__(self, prior: float = DEMARET_PRIOR):
        self.prior = prior
        self.n0 = [0.0] * (len(NEIGHBOUR_OFFSETS) + 1)
        self.n1 = [0.0] * (len(NEIGHBOUR_OFFSETS) + 1)
        self.context = 0

    def select(self, neighbours: Sequence[int]) -> None:
        self.context = sum(neighbours)

    def predict(self) -> int:
        c = self.context
        return quantize_probability((self.n1[c] + self.prior) / (self.n0[c] + self.n1[c] + 2 * self.prior))

    def update(self, bit: int) -> None:
        if bit:
            self.n1[self.context] += 1
        else:
            self.n0[self.context] += 1

    def state_digest(self) -> str:
        return _digest(self.n0, self.n1)


class ContextBank:
    """Per-context, per-pattern counts n0/n1 with the semi-stationary update."""

    def __init__(self, layout: ContextLayout):
        self.layout = layout
        self.n0 = [[0.0] * (1 << len(context)) for context in layout.contexts]
        self.n1 = [[0.0] * (1 << len(context)) for context in layout.contexts]
        self.active = [0] * len(layout.contexts)

    def select(self, neighbours: Sequence[int]) -> None:
        self.active = self.layout.patterns(neighbours)

    def counts(self, i: int) -> Tuple[float, float]:
        pattern = self.active[i]
        return self.n0[i][pattern], self.n1[i][pattern]

    def smoothed_probability(self, i: int) -> float:
        n0, n1 = self.counts(i)
        return (n1 + COUNT_SMOOTHING) / (n0 + n1 + 2 * COUNT_SMOOTHING)

    def update(self, bit: int) -> None:
        """Increment the observed count; halve the other one when it exceeds 2."""
        seen, other = (self.n1, self.n0) if bit else (self.n0, self.n1)
        for i, pattern in enumerate(self.active):
            seen[i][pattern] += 1
            if other[i][pattern] > HALVING_FLOOR:
                other[i][pattern] /= 2

    def __len__(self) -> int:
        return len(self.layout.contexts)


class LinearMixModel(ContextModel):
    """
    Evidence mixing over local contexts, statically blended with a stationary
    estimate and the global ratio.

    Args:
        layout: Local contexts whose counts are mixed
        ones_count: Number of ones in the mask
        pixels: Number of pixels in the mask
        stat_context: Index of the context used for the stationary estimate
    """

    def __init__(self, layout: ContextLayout, ones_count: int, pixels: int, stat_context: int = 0):
        if not 0 <= stat_context < len(layout.contexts):
            raise ConfigError(f"stat_context {stat_context} is not in the layout")
        self.bank = ContextBank(layout)
        self.counts = GlobalCounts(ones_count, pixels)
        self.weights = [LINEAR_INITIAL_WEIGHT] * len(layout.contexts)
        self.stat_context = stat_context
        self.epsilon = EVIDENCE_FLOOR
        self._evidence = (0.0, 0.0)
        self.p_dyn = 0.5
        self.p_final = 0.5

    def select(self, neighbours: Sequence[int]) -> None:
        self.bank.select(neighbours)

    @property
    def forced_bit(self) -> Optional[int]:
        return self.counts.forced_bit

    def predict(self) -> int:
        s0 = self.epsilon
        s1 = self.epsilon
        for i, w in enumerate(self.weights):
            n0, n1 = self.bank.counts(i)
            s0 += w * n0
            s1 += w * n1
        self._evidence = (s0, s1)
        self.p_dyn = s1 / (s0 + s1)
        p_stat = self.bank.smoothed_probability(self.stat_context)
        dyn_weight, stat_weight, global_weight = STATIC_MIX
        self.p_final = dyn_weight * self.p_dyn + stat_weight * p_stat + global_weight * self.counts.probability
        return quantize_probability(self.p_final)

    def update(self, bit: int) -> None:
        # (x - p) uses the evidence-mixed probability p_dyn.
        s0, s1 = self._evidence
        s = s0 + s1
        error = bit - self.p_dyn
        for i, w in enumerate(self.weights):
            n0, n1 = self.bank.counts(i)
            self.weights[i] = max(0.0, w + error * (s * n1 - s1 * (n0 + n1)) / (s0 * s1))
        self.bank.update(bit)
        self.counts.consume(bit)

    def state_digest(self) -> str:
        return _digest(self.bank.n0, self.bank.n1, self.weights, self.counts.remaining_ones)


class LogisticMixModel(ContextModel):
    """
    Logistic mixing of every local context and the global ratio.

    Each input is a probability stretched to the logit domain; the weighted
    sum is squashed back and the weights follow the coding-cost gradient.
    """

    def __init__(self, layout: ContextLayout, ones_count: int, pixels: int, learning_rate: float = LEARNING_RATE):
        self.bank = ContextBank(layout)
        self.counts = GlobalCounts(ones_count, pixels)
        self.weights = [LOGISTIC_INITIAL_WEIGHT] * (len(layout.contexts) + 1)
        self.learning_rate = learning_rate
        self.inputs: List[float] = []
        self.p_final = 0.5

    def select(self, neighbours: Sequence[int]) -> None:
        self.bank.select(neighbours)

    @property
    def forced_bit(self) -> Optional[int]:
        return self.counts.forced_bit

    def predict(self) -> int:
        inputs = [stretch(_clamp_unit(self.bank.smoothed_probability(i))) for i in range(len(self.bank))]
        inputs.append(stretch(_clamp_unit(self.counts.probability)))
        self.inputs = inputs
        dot = sum(w * t for w, t in zip(self.weights, inputs))
        dot = max(-_MIX_LIMIT, min(_MIX_LIMIT, dot))
        self.p_final = squash(dot)
        return quantize_probability(self.p_final)

    def update(self, bit: int) -> None:
        step = self.learning_rate * (bit - self.p_final)
        self.weights = [w + step * t for w, t in zip(self.weights, self.inputs)]
        self.bank.update(bit)
        self.counts.consume(bit)

    def state_digest(self) -> str:
        return _digest(self.bank.n0, self.bank.n1, self.weights, self.counts.remaining_ones)


def _scan(width: int, height: int):
    for row in range(height):
        for col in range(width):
            yield row * width + col, row, col


def encode_with_model(mask: BinaryMask, model: ContextModel, observer: Optional[Observer] = None) -> bytes:
    """
    Code every pixel of a mask in row-major order under a model.

    Args:
        mask: The mask to encode
        model: A fresh model; it is advanced pixel by pixel
        observer: Optional callback run after each pixel

    Returns:
        The arithmetic-coded payload
    """
    encoder = ArithmeticEncoder()
    neighbourhood = CausalNeighbourhood(mask.width, mask.height)
    bits = mask.bits
    for index, row, col in _scan(mask.width, mask.height):
        bit = int(bits[row, col])
        model.select(neighbourhood.neighbours(row, col))
        p1 = model.predict()
        forced = model.forced_bit
        if forced is None:
            encoder.encode_bit(bit, p1)
        elif forced != bit:
            raise CorruptStreamError(f"pixel {index} contradicts the declared ones count")
        else:
            p1 = None
        model.update(bit)
        neighbourhood.put(row, col, bit)
        if observer is not None:
            observer(index, bit, p1, model)
    return encoder.finish()


def decode_with_model(
    payload: bytes, width: int, height: int, model: ContextModel, observer: Optional[Observer] = None
) -> BinaryMask:
    """Inverse of encode_with_model(); the model must be built exactly as the encoder's was."""
    decoder = ArithmeticDecoder(payload)
    neighbourhood = CausalNeighbourhood(width, height)
    bits = np.zeros((height, width), dtype=bool)
    for index, row, col in _scan(width, height):
        model.select(neighbourhood.neighbours(row, col))
        p1 = model.predict()
        forced = model.forced_bit
        if forced is None:
            bit = decoder.decode_bit(p1)
        else:
            bit = forced
            p1 = None
        model.update(bit)
        neighbourhood.put(row, col, bit)
        bits[row, col] = bit
        if observer is not None:
            observer(index, bit, p1, model)
    return BinaryMask(width=width, height=height, bits=bits)


def marwood_encode(mask: BinaryMask, observer: Optional[Observer] = None) -> bytes:
    return encode_with_model(mask, MarwoodModel(mask.count, mask.size), observer)


def marwood_decode(
    payload: bytes, width: int, height: int, ones_count: int, observer: Optional[Observer] = None
) -> BinaryMask:
    """
    Decode a Marwood payload.

    Raises:
        CorruptStreamError: If ones_count exceeds the number of pixels
    """
    return decode_with_model(payload, width, height, MarwoodModel(ones_count, width * height), observer)


def demaret_encode(mask: BinaryMask, observer: Optional[Observer] = None) -> bytes:
    return encode_with_model(mask, DemaretModel(), observer)


def demaret_decode(
    payload: bytes, width: int, height: int, ones_count: int = 0, observer: Optional[Observer] = None
) -> BinaryMask:
    return decode_with_model(payload, width, height, DemaretModel(), observer)


def _linear_factory(layout: ContextLayout, stat_context: int):
    return lambda ones, pixels: LinearMixModel(layout, ones, pixels, stat_context)


def _logistic_factory(layout: ContextLayout):
    return lambda ones, pixels: LogisticMixModel(layout, ones, pixels)


_LOCAL_CONTEXTS = ContextLayout.contiguous(len(NEIGHBOUR_OFFSETS))

BPAQ_VARIANTS: Dict[str, Callable[[int, int], ContextModel]] = {
    # S: left neighbour only
    "S": _linear_factory(ContextLayout.contiguous(1), stat_context=0),
    # M: 12 nested contexts, stationary estimate from the order-4 one
    "M": _linear_factory(_LOCAL_CONTEXTS, stat_context=3),
    "L": _logistic_factory(_LOCAL_CONTEXTS),
    "XL": _logistic_factory(ContextLayout.nearest_subsets(4)),
}


def bpaq_model(variant: str, ones_count: int, pixels: int) -> ContextModel:
    """
    Build a fresh model for a BPAQ variant.

    Raises:
        ConfigError: If the variant is not one of S, M, L, XL
    """
    factory = BPAQ_VARIANTS.get(variant.upper())
    if factory is None:
        raise ConfigError(f"unknown BPAQ variant '{variant}'; expected one of {', '.join(BPAQ_VARIANTS)}")
    return factory(ones_count, pixels)


def bpaq_encode(mask: BinaryMask, variant: str, observer: Optional[Observer] = None) -> bytes:
    payload = encode_with_model(mask, bpaq_model(variant, mask.count, mask.size), observer)
    logger.debug(f"bpaq-{variant.lower()}: {mask!r} -> {len(payload)} bytes")
    return payload


def bpaq_decode(
    payload: bytes, width: int, height: int, ones_count: int, variant: str, observer: Optional[Observer] = None
) -> BinaryMask:
    return decode_with_model(payload, width, height, bpaq_model(variant, ones_count, width * height), observer)
