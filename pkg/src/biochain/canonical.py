"""Canonical JSON serialization and the package-wide hash primitive.

Everything that gets hashed (witness digests, block hashes) or must be
byte-identical across runs (ledger files, replay comparisons) goes
through these two functions.
"""
from __future__ import annotations

import hashlib
import json


def canonical_json(obj) -> str:
    """Serialize with sorted keys and no whitespace; rejects NaN/Inf."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def sha256_hex(data) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()
