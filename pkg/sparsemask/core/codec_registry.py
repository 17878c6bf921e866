"""
Codec registry for sparsemask.

This module keeps the table of mask codecs the SBM1 container can name.
Every codec is registered under a human-readable name (used on the command
line) and an 8-bit codec_id (stored in the container header).

Codecs are classes deriving from MaskCodec and registered with the
@register_codec decorator. The built-in codecs live in sparsemask.codecs
and are imported lazily on the first lookup, so importing this module
never pulls in the modelling code.
"""

import logging
from typing import Dict, List, Optional

from sparsemask.core.error_handling import ConfigError, CorruptStreamError, UnknownCodecError
from sparsemask.core.image_io import BinaryMask, EncodedMask

# Global registries, by name and by container id
_codecs_by_name: Dict[str, "MaskCodec"] = {}
_codecs_by_id: Dict[int, "MaskCodec"] = {}

_builtins_loaded = False

logger = logging.getLogger("sparsemask.codec_registry")


class MaskCodec:
    """
    Base class for mask codecs.

    Subclasses implement encode() and decode(); name and codec_id are filled in
    by @register_codec.
    """

    name: str = ""
    codec_id: int = 0

    def encode(self, mask: BinaryMask) -> bytes:
        """Return the payload for a mask."""
        raise NotImplementedError

    def decode(self, payload: bytes, width: int, height: int, ones_count: int) -> BinaryMask:
        """Rebuild a mask from its payload and the container header fields."""
        raise NotImplementedError


def register_codec(name: str, codec_id: int):
    """
    Decorator to register a MaskCodec subclass.

    Args:
        name: Name used by the CLI and the bench harness
        codec_id: 8-bit id stored in the SBM1 header

    Returns:
        The decorated class, unchanged apart from its name and codec_id attributes.

    Raises:
        ConfigError: If the name or codec_id is already taken
    """

    def decorator(cls):
        if not 0 < codec_id <= 0xFF:
            raise ConfigError(f"codec_id {codec_id} for '{name}' must be in 1..255")
        if name in _codecs_by_name or codec_id in _codecs_by_id:
            raise ConfigError(f"codec '{name}' (id {codec_id}) is already registered")

        cls.name = name
        cls.codec_id = codec_id
        instance = cls()
        _codecs_by_name[name] = instance
        _codecs_by_id[codec_id] = instance
        logger.info(f"Registered codec: {name} (id {codec_id})")

        return cls

    return decorator


def _ensure_builtin_codecs() -> None:
    global _builtins_loaded
    if not _builtins_loaded:
        _builtins_loaded = True
        import sparsemask.codecs  # noqa: F401


def get_codec(name: str) -> Optional[MaskCodec]:
    """
    Get a codec by name.

    Args:
        name: The name of the codec to retrieve.

    Returns:
        The codec if found, None otherwise.
    """
    _ensure_builtin_codecs()
    codec = _codecs_by_name.get(name)
    if codec:
        logger.debug(f"Retrieved codec: {name}")
    else:
        logger.warning(f"Codec not found: {name}")
    return codec


def get_codec_by_id(codec_id: int) -> Optional[MaskCodec]:
    """
    Get a codec by its container id.

    Args:
        codec_id: The 8-bit id from an SBM1 header.

    Returns:
        The codec if found, None otherwise.
    """
    _ensure_builtin_codecs()
    codec = _codecs_by_id.get(codec_id)
    if not codec:
        logger.warning(f"Codec id not found: {codec_id}")
    return codec


def require_codec(name: str) -> MaskCodec:
    """Like get_codec(), but raise UnknownCodecError instead of returning None."""
    codec = get_codec(name)
    if codec is None:
        raise UnknownCodecError(f"unknown codec '{name}'; available: {', '.join(list_codecs())}", {"codec": name})
    return codec


def require_codec_id(codec_id: int) -> MaskCodec:
    """Like get_codec_by_id(), but raise UnknownCodecError instead of returning None."""
    codec = get_codec_by_id(codec_id)
    if codec is None:
        raise UnknownCodecError(f"unknown codec_id {codec_id}", {"codec_id": codec_id})
    return codec


def list_codecs() -> List[str]:
    """
    List all registered codec names.

    Returns:
        Codec names in codec_id order.
    """
    _ensure_builtin_codecs()
    return [_codecs_by_id[codec_id].name for codec_id in sorted(_codecs_by_id)]


def encode_mask(mask: BinaryMask, codec_name: str) -> EncodedMask:
    """
    Encode a mask with a named codec.

    Args:
        mask: The mask to encode
        codec_name: A registered codec name

    Returns:
        The payload wrapped with the header fields needed to decode it
    """
    codec = require_codec(codec_name)
    payload = codec.encode(mask)
    logger.debug(f"Encoded {mask!r} with {codec_name}: {len(payload)} payload bytes")
    return EncodedMask(
        codec_id=codec.codec_id,
        width=mask.width,
        height=mask.height,
        ones_count=mask.count,
        payload=payload,
    )


def decode_mask(encoded: EncodedMask) -> BinaryMask:
    """
    Decode a mask, choosing the codec from its codec_id.

    Raises:
        UnknownCodecError: If codec_id is not registered
        CorruptStreamError: If the decoded ones count disagrees with the header
    """
    codec = require_codec_id(encoded.codec_id)
    mask = codec.decode(encoded.payload, encoded.width, encoded.height, encoded.ones_count)
    if mask.count != encoded.ones_count:
        raise CorruptStreamError(
            f"{codec.name} decoded {mask.count} ones, header says {encoded.ones_count}",
            {"decoded": mask.count, "declared": encoded.ones_count, "codec": codec.name},
        )
    return mask
