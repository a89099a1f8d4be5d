"""Keccak-256 and the fixed-width integer encodings shared by every module."""

from __future__ import annotations

from Crypto.Hash import keccak as _keccak

WORD = 32
MOD = 1 << 256
ZERO32 = bytes(WORD)


def keccak256(data: bytes) -> bytes:
    return _keccak.new(digest_bits=256, data=bytes(data)).digest()


def u256(n: int) -> bytes:
    """Encode ``n`` as a 32-byte big-endian word (wrapping modulo 2**256)."""
    return (n % MOD).to_bytes(WORD, "big")


def lp(data: bytes) -> bytes:
    """Length-prefixed field: 32-byte big-endian length followed by the bytes."""
    return u256(len(data)) + bytes(data)


def to_hex(data: bytes) -> str:
    return "0x" + bytes(data).hex()


def from_hex(text: str) -> bytes:
    text = text[2:] if text.startswith(("0x", "0X")) else text
    return bytes.fromhex(text)
