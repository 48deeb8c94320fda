"""Watermark secrets and the per-pair modulo bases derived from them."""

from __future__ import annotations

import hashlib
import json
import secrets
import warnings
from dataclasses import dataclass
from pathlib import Path

from . import rng
from .errors import FreqyWMWarning, ParameterError, SecretFormatError

SECRET_BYTES = 32
SUPPORTED_VERSIONS = (1,)


@dataclass(frozen=True)
class WatermarkSecret:
    """What the owner keeps: entropy ``r``, modulus ``z`` and the ordered pairs.

    Each pair is ``(token_i, token_j)`` with ``token_i`` the member that was
    more frequent when the watermark was embedded.
    """

    r: bytes
    z: int
    pairs: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple((str(i), str(j)) for i, j in self.pairs))
        if len(self.r) != SECRET_BYTES:
            raise ParameterError(f"secret entropy must be {SECRET_BYTES} bytes, got {len(self.r)}")
        if not isinstance(self.z, int) or self.z < 2:
            raise ParameterError(f"z must be an integer >= 2, got {self.z!r}")
        seen: set[str] = set()
        for i, j in self.pairs:
            if i == j:
                raise ParameterError(f"pair ({i!r}, {j!r}) repeats a token")
            for tok in (i, j):
                if tok in seen:
                    raise ParameterError(f"token {tok!r} appears in more than one pair")
                seen.add(tok)

    def with_pairs(self, pairs) -> "WatermarkSecret":
        return WatermarkSecret(self.r, self.z, tuple(pairs))

    def sij(self, token_i: str, token_j: str) -> int:
        return derive_sij(token_i, token_j, self.r, self.z)


def generate_secret_material(seed: int | None = None, production: bool = False) -> bytes:
    """Return 32 bytes of secret entropy.

    Unseeded calls use the OS CSPRNG.  A seed makes the value reproducible and
    is meant for tests and experiments only.
    """
    if seed is None:
        return secrets.token_bytes(SECRET_BYTES)
    if production:
        warnings.warn("secret entropy derived from a fixed seed; do not use for real watermarks",
                      FreqyWMWarning, stacklevel=2)
    return rng.substream(seed, rng.SECRET).bytes(SECRET_BYTES)


def inner_digest(r: bytes, token_j: str) -> bytes:
    return hashlib.sha256(r + token_j.encode("utf-8")).digest()


def sij_from_inner(token_i: str, inner: bytes, z: int) -> int:
    outer = hashlib.sha256(token_i.encode("utf-8") + inner).digest()
    return int.from_bytes(outer, "big") % z


def derive_sij(token_i: str, token_j: str, r: bytes, z: int) -> int:
    """``SHA256(token_i || SHA256(r || token_j))`` as a big-endian integer, mod ``z``."""
    if z < 2:
        raise ParameterError(f"z must be >= 2, got {z}")
    return sij_from_inner(token_i, inner_digest(r, token_j), z)


def secret_to_json(s: WatermarkSecret) -> str:
    doc = {
        "version": 1,
        "z": s.z,
        "r_hex": s.r.hex(),
        "pairs": [{"i": i, "j": j} for i, j in s.pairs],
    }
    return json.dumps(doc, ensure_ascii=False, indent=2) + "\n"


def secret_from_json(text: str) -> WatermarkSecret:
    try:
        doc = json.loads(text)
    except ValueError as exc:
        raise SecretFormatError(f"secret file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SecretFormatError("secret file must hold a JSON object")
    version = doc.get("version")
    if version not in SUPPORTED_VERSIONS:
        raise SecretFormatError(
            f"unsupported secret version {version!r}; supported versions: {list(SUPPORTED_VERSIONS)}")
    try:
        z = doc["z"]
        r = bytes.fromhex(doc["r_hex"])
        pairs = tuple((p["i"], p["j"]) for p in doc["pairs"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SecretFormatError(f"malformed secret file: {exc!r}") from exc
    if len(doc["r_hex"]) != 2 * SECRET_BYTES:
        raise SecretFormatError(f"r_hex must be {2 * SECRET_BYTES} hex characters")
    if not isinstance(z, int) or isinstance(z, bool):
        raise SecretFormatError("z must be an integer")
    if not all(isinstance(t, str) for pair in pairs for t in pair):
        raise SecretFormatError("pair members must be strings")
    try:
        return WatermarkSecret(r, z, pairs)
    except ParameterError as exc:
        raise SecretFormatError(f"invalid secret: {exc}") from exc


def save_secret(s: WatermarkSecret, path: str | Path) -> None:
    Path(path).write_text(secret_to_json(s), encoding="utf-8")


def load_secret(path: str | Path) -> WatermarkSecret:
    return secret_from_json(Path(path).read_text(encoding="utf-8"))
