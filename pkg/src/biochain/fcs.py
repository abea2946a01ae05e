"""Fuzzy commitments binding a random witness to a biometric feature vector.

Committing draws a fresh k-bit witness, encodes it, and publishes only
the witness digest plus the offset (codeword XOR feature vector). Anyone
presenting a feature vector within the code's correction radius of the
enrolled one recovers the witness and matches the digest; everyone else
learns nothing about the biometric from the stored pair.

Digest convention (fixed so independent implementations interoperate):
SHA-256 over the witness spelled as an ASCII '0'/'1' string of exactly
k characters, no delimiters.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .bits import as_bits, from_bitstring, os_random_bits, random_bits, to_bitstring
from .canonical import sha256_hex
from .ecc import DecodingFailure, LengthMismatch, LinearCode, decode, encode

MATCHED = "matched"
DIGEST_MISMATCH = "digest-mismatch"
DECODING_FAILURE = "decoding-failure"

_DIGEST_RE = re.compile(r"^[0-9a-f]{64}$")


def witness_digest(witness) -> str:
    """SHA-256 hex digest of the witness bits in their ASCII spelling."""
    return sha256_hex(to_bitstring(as_bits(witness)))


@dataclass(frozen=True, eq=False)
class Commitment:
    """Stored form of an enrolled biometric: witness digest plus offset."""

    digest: str
    offset: np.ndarray

    def __post_init__(self):
        if not _DIGEST_RE.match(self.digest):
            raise ValueError("digest must be 64 lowercase hex characters")
        object.__setattr__(self, "offset", as_bits(self.offset))

    @property
    def n(self) -> int:
        return self.offset.size

    def to_json_obj(self) -> dict:
        return {"digest": self.digest, "offset": to_bitstring(self.offset), "n": self.n}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "Commitment":
        offset = from_bitstring(obj["offset"])
        if offset.size != int(obj["n"]):
            raise ValueError(f"offset length {offset.size} disagrees with n={obj['n']}")
        return cls(digest=obj["digest"], offset=offset)


def generate_witness(k: int, rng: np.random.Generator | None = None) -> np.ndarray:
    """Draw a uniform k-bit witness.

    With rng=None the bits come from operating-system entropy; passing a
    seeded numpy Generator makes the draw a pure function of (seed, k).
    """
    if k < 1:
        raise ValueError(f"witness length must be >= 1, got {k}")
    if rng is None:
        return os_random_bits(k)
    return random_bits(rng, k)


def commit(code: LinearCode, feature_vector,
           rng: np.random.Generator | None = None) -> Commitment:
    """Commit a fresh random witness against a feature vector.

    The witness itself is discarded; only its digest and the offset
    survive. Use commit_with_witness when a test oracle needs the
    witness back.
    """
    commitment, _ = commit_with_witness(code, feature_vector, rng)
    return commitment


def commit_with_witness(code: LinearCode, feature_vector,
                        rng: np.random.Generator | None = None):
    """Test-support variant of commit that also returns the witness."""
    x = as_bits(feature_vector)
    if x.size != code.n:
        raise LengthMismatch(f"feature vector has {x.size} bits, code expects n={code.n}")
    if code.t < 1:
        raise ValueError("code corrects no errors (t = 0); unusable for fuzzy commitments")
    witness = generate_witness(code.k, rng)
    offset = encode(code, witness) ^ x
    return Commitment(digest=witness_digest(witness), offset=offset), witness


def open_outcome(code: LinearCode, commitment: Commitment, candidate) -> str:
    """Attempt to open a commitment with a candidate feature vector.

    Returns MATCHED, DIGEST_MISMATCH, or DECODING_FAILURE. Decoding
    failure is possible only for non-perfect codes and is a rejection,
    not an error.
    """
    x_prime = as_bits(candidate)
    if x_prime.size != code.n:
        raise LengthMismatch(f"candidate has {x_prime.size} bits, code expects n={code.n}")
    if commitment.n != code.n:
        raise LengthMismatch(f"commitment offset has {commitment.n} bits, code expects n={code.n}")
    try:
        recovered = decode(code, x_prime ^ commitment.offset)
    except DecodingFailure:
        return DECODING_FAILURE
    if witness_digest(recovered) == commitment.digest:
        return MATCHED
    return DIGEST_MISMATCH


def open_commitment(code: LinearCode, commitment: Commitment, candidate) -> bool:
    """True iff the candidate feature vector opens the commitment."""
    return open_outcome(code, commitment, candidate) == MATCHED
