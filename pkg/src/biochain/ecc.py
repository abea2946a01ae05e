"""Binary linear block codes with systematic encoding and syndrome decoding.

Codewords are laid out [message | parity], so the message is recovered
from a decoded codeword by slicing its first k bits. Decoding is
bounded-distance via a precomputed coset-leader table: only error
patterns of weight <= t are correctable, and t is always computed from
the true minimum distance rather than trusted from input.

Conventions
-----------
- Generator matrices are k x n in systematic form [I_k | P].
- Parity-check matrices are (n-k) x n in the matching form [P^T | I].
- Syndromes are keyed by their raw byte representation.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from .bits import as_bits, from_bitstring, to_bitstring

# Coset-leader tables are dense enumerations; 2^16 syndromes is the cap.
MAX_PARITY_BITS = 16

# Exhaustive minimum-distance search walks all 2^k - 1 nonzero messages.
MAX_EXHAUSTIVE_DIMENSION = 24


class CodeError(Exception):
    """Base class for code construction and decoding errors."""


class LengthMismatch(CodeError):
    """Input vector length does not match the code's n or k."""


class DecodingFailure(CodeError):
    """No codeword within distance t of the received word."""


class RankDeficient(CodeError):
    """Generator matrix rows are linearly dependent."""


class NonSystematicMatrix(CodeError):
    """Generator matrix cannot be row-reduced to [I | P]."""


class TableTooLarge(CodeError):
    """n - k exceeds MAX_PARITY_BITS, so the syndrome table is not enumerable."""


@dataclass(frozen=True, eq=False)
class LinearCode:
    """An (n, k) binary linear block code with a bounded-distance decoder.

    Attributes
    ----------
    family : str
        One of "repetition", "hamming", "generator-matrix".
    n, k : int
        Codeword length and message length in bits.
    t : int
        Guaranteed correction capability, floor((d_min - 1) / 2).
    d_min : int
        Exact minimum distance (analytic for the named families,
        exhaustive otherwise).
    generator : ndarray
        k x n systematic generator [I_k | P], dtype uint8.
    parity_check : ndarray
        (n-k) x n parity-check [P^T | I], dtype uint8.
    syndrome_table : dict
        syndrome bytes -> minimum-weight coset-leader error pattern,
        covering every pattern of weight <= t.
    is_perfect : bool
        True when the radius-t balls tile the whole space (every
        syndrome has a coset leader of weight <= t); decoding is then
        total.
    """

    family: str
    n: int
    k: int
    t: int
    d_min: int
    generator: np.ndarray
    parity_check: np.ndarray
    syndrome_table: dict
    is_perfect: bool

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return (f"LinearCode(family={self.family!r}, n={self.n}, k={self.k}, "
                f"t={self.t}, d_min={self.d_min}, perfect={self.is_perfect})")


def encode(code: LinearCode, witness) -> np.ndarray:
    """Encode a k-bit message into an n-bit codeword (w times G over GF(2))."""
    w = as_bits(witness)
    if w.size != code.k:
        raise LengthMismatch(f"witness has {w.size} bits, code expects k={code.k}")
    return ((w.astype(np.int32) @ code.generator) % 2).astype(np.uint8)


def decode(code: LinearCode, received) -> np.ndarray:
    """Bounded-distance decode: return the message of the unique codeword
    within distance t of `received`, or raise DecodingFailure.

    For perfect codes every input decodes (possibly to a wrong message
    when more than t errors occurred).
    """
    y = as_bits(received)
    if y.size != code.n:
        raise LengthMismatch(f"received word has {y.size} bits, code expects n={code.n}")
    syndrome = ((y.astype(np.int32) @ code.parity_check.T) % 2).astype(np.uint8)
    leader = code.syndrome_table.get(syndrome.tobytes())
    if leader is None:
        raise DecodingFailure("no codeword within the correction radius")
    return ((y ^ leader)[: code.k]).copy()


def codeword_is_valid(code: LinearCode, word) -> bool:
    """True iff word times H^T vanishes, i.e. word is in the code."""
    y = as_bits(word)
    if y.size != code.n:
        raise LengthMismatch(f"word has {y.size} bits, code expects n={code.n}")
    return not ((y.astype(np.int32) @ code.parity_check.T) % 2).any()


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def repetition_code(n: int) -> LinearCode:
    """The (n, 1) repetition code for odd n >= 3; corrects (n-1)/2 flips."""
    if n < 3 or n % 2 == 0:
        raise ValueError(f"repetition code needs odd n >= 3, got {n}")
    if n - 1 > MAX_PARITY_BITS:
        raise TableTooLarge(f"n - k = {n - 1} exceeds {MAX_PARITY_BITS}")
    parity = np.ones((1, n - 1), dtype=np.uint8)
    return _assemble("repetition", parity, d_min=n)


def hamming_code(r: int) -> LinearCode:
    """The (2^r - 1, 2^r - 1 - r) Hamming code for r >= 2; corrects 1 flip.

    Uses the classic construction: parity bit j covers every codeword
    position whose 1-based position number has bit j set, with the
    positions then permuted into systematic [message | parity] order.
    For r = 3 this gives the textbook (7,4) parity equations
    p1 = m1+m2+m4, p2 = m1+m3+m4, p3 = m2+m3+m4.
    """
    if r < 2:
        raise ValueError(f"Hamming code needs r >= 2, got {r}")
    if r > MAX_PARITY_BITS:
        raise TableTooLarge(f"n - k = {r} exceeds {MAX_PARITY_BITS}")
    n = (1 << r) - 1
    data_positions = [pos for pos in range(1, n + 1) if pos & (pos - 1)]
    parity = np.zeros((len(data_positions), r), dtype=np.uint8)
    for i, pos in enumerate(data_positions):
        for j in range(r):
            parity[i, j] = (pos >> j) & 1
    return _assemble("hamming", parity, d_min=3)


def code_from_generator(matrix, family: str = "generator-matrix") -> LinearCode:
    """Build a code from an explicit k x n generator matrix.

    The matrix is row-reduced to systematic [I | P] form (row operations
    only, which preserve the code). d_min is found by exhaustive
    codeword enumeration, so t is honest whatever the input.
    """
    rows = np.atleast_2d(np.asarray(matrix, dtype=np.uint8))
    if rows.size and int(rows.max()) > 1:
        raise ValueError("generator matrix entries must be 0 or 1")
    k, n = rows.shape
    if k == 0 or n == 0 or k > n:
        raise ValueError(f"bad generator shape {rows.shape}; need 0 < k <= n")
    if n - k > MAX_PARITY_BITS:
        raise TableTooLarge(f"n - k = {n - k} exceeds {MAX_PARITY_BITS}")
    if _gf2_rank(rows) < k:
        raise RankDeficient("generator matrix rows are linearly dependent")
    systematic = _systematic_form(rows)
    if k > MAX_EXHAUSTIVE_DIMENSION:
        raise CodeError(
            f"exhaustive minimum-distance search is limited to k <= {MAX_EXHAUSTIVE_DIMENSION}")
    d_min = _min_distance_exhaustive(systematic)
    return _assemble(family, systematic[:, k:].copy(), d_min=d_min)


_FAMILY_BUILDERS = {
    "repetition": lambda params: repetition_code(int(params["n"])),
    "hamming": lambda params: hamming_code(int(params["r"])),
    "generator-matrix": lambda params: code_from_generator(params["matrix"]),
}


def build_code(family: str, **params) -> LinearCode:
    """Dispatch on the family selector: repetition(n), hamming(r),
    generator-matrix(matrix)."""
    try:
        builder = _FAMILY_BUILDERS[family]
    except KeyError:
        raise ValueError(f"unknown code family {family!r}") from None
    return builder(params)


def _assemble(family: str, parity_block: np.ndarray, d_min: int) -> LinearCode:
    k, r = parity_block.shape
    n = k + r
    generator = np.hstack([np.eye(k, dtype=np.uint8), parity_block])
    parity_check = np.hstack([parity_block.T, np.eye(r, dtype=np.uint8)])
    t = (d_min - 1) // 2
    table = _coset_leader_table(parity_check, t)
    is_perfect = len(table) == (1 << r)
    return LinearCode(family=family, n=n, k=k, t=t, d_min=d_min,
                      generator=generator, parity_check=parity_check,
                      syndrome_table=table, is_perfect=is_perfect)


def _coset_leader_table(parity_check: np.ndarray, t: int) -> dict:
    """Map each syndrome reachable by a weight <= t error to that error.

    Distinctness of the syndromes is guaranteed by t <= (d_min - 1) / 2;
    a collision here would mean d_min was computed wrong.
    """
    r, n = parity_check.shape
    table: dict = {}
    h_t = parity_check.T.astype(np.int32)
    for weight in range(t + 1):
        for positions in combinations(range(n), weight):
            pattern = np.zeros(n, dtype=np.uint8)
            pattern[list(positions)] = 1
            key = ((pattern.astype(np.int32) @ h_t) % 2).astype(np.uint8).tobytes()
            if key in table:
                raise AssertionError("coset-leader collision; d_min inconsistent")
            table[key] = pattern
    return table


def _gf2_rank(matrix: np.ndarray) -> int:
    work = matrix.copy()
    rank = 0
    rows, cols = work.shape
    for col in range(cols):
        pivot = next((i for i in range(rank, rows) if work[i, col]), None)
        if pivot is None:
            continue
        work[[rank, pivot]] = work[[pivot, rank]]
        for i in range(rows):
            if i != rank and work[i, col]:
                work[i] ^= work[rank]
        rank += 1
        if rank == rows:
            break
    return rank


def _systematic_form(matrix: np.ndarray) -> np.ndarray:
    """Row-reduce so the first k columns become I_k, or raise."""
    work = matrix.copy()
    k = work.shape[0]
    for col in range(k):
        pivot = next((i for i in range(col, k) if work[i, col]), None)
        if pivot is None:
            raise NonSystematicMatrix(
                "first k columns are singular; cannot row-reduce to [I | P]")
        work[[col, pivot]] = work[[pivot, col]]
        for i in range(k):
            if i != col and work[i, col]:
                work[i] ^= work[col]
    return work


def _min_distance_exhaustive(generator: np.ndarray) -> int:
    k, n = generator.shape
    best = n
    gen = generator.astype(np.int32)
    chunk = 1 << 14
    for start in range(1, 1 << k, chunk):
        stop = min(start + chunk, 1 << k)
        messages = np.arange(start, stop, dtype=np.int64)
        bits = ((messages[:, None] >> np.arange(k, dtype=np.int64)) & 1).astype(np.int32)
        weights = ((bits @ gen) % 2).sum(axis=1)
        best = min(best, int(weights.min()))
        if best == 1:
            break
    return best


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def code_to_json_obj(code: LinearCode) -> dict:
    """JSON description: {family, n, k, t, generator: row bitstrings}."""
    return {
        "family": code.family,
        "n": code.n,
        "k": code.k,
        "t": code.t,
        "generator": [to_bitstring(row) for row in code.generator],
    }


def code_from_json_obj(obj: dict) -> LinearCode:
    """Rebuild a code from its JSON description.

    Named families are reconstructed from their parameters and the
    stored generator is checked against the canonical one; explicit
    generator matrices go through the full honest pipeline. The stored
    t must agree with the recomputed value.
    """
    family = obj["family"]
    rows = np.array([from_bitstring(row) for row in obj["generator"]], dtype=np.uint8)
    if family == "repetition":
        code = repetition_code(int(obj["n"]))
    elif family == "hamming":
        n = int(obj["n"])
        r = n - int(obj["k"])
        code = hamming_code(r)
        if code.n != n:
            raise ValueError(f"inconsistent Hamming parameters n={n}, k={obj['k']}")
    elif family == "generator-matrix":
        code = code_from_generator(rows)
    else:
        raise ValueError(f"unknown code family {family!r}")
    if rows.shape != code.generator.shape or (rows != code.generator).any():
        raise ValueError("stored generator does not match the declared family")
    if int(obj["t"]) != code.t:
        raise ValueError(f"stored t={obj['t']} disagrees with computed t={code.t}")
    return code
