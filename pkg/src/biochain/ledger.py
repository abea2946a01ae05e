"""Append-only hash-chained ledger executing contract calls with gas receipts.

The chain is a deterministic single-writer state machine: one
transaction per block, SHA-256 over canonical JSON for block hashes,
and no timestamps or consensus, so identical (config, transaction
sequence) pairs produce byte-identical serialized chains. A full replay
of the serialized log must reproduce both the live state and every
stored receipt; any divergence is treated as corruption.

Gas model: reads (getSubjects, getNodes) always cost zero, succeed or
revert. Mutating calls pay a per-function base plus a per-byte charge
on their canonical argument encoding plus per-slot storage charges;
when they revert they still pay the base and byte charges, so a
reverted write is never free. The table is configuration with
Ethereum-flavored defaults, not a measurement.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

from . import contract
from .canonical import canonical_json, sha256_hex

GENESIS_PREV_HASH = "0" * 64

READ_FUNCTIONS = frozenset({"getSubjects", "getNodes"})
MUTATING_FUNCTIONS = frozenset({
    "deploy", "setSubjects", "updateSubjects", "delSubjects",
    "setNodes", "updateNodes", "delNodes", "logAuthentication",
})
KNOWN_FUNCTIONS = READ_FUNCTIONS | MUTATING_FUNCTIONS


class LedgerError(Exception):
    """Base class for ledger-level failures (nothing gets appended)."""


class BadNonce(LedgerError): ...


class UnknownFunction(LedgerError): ...


class IncompleteGasTable(LedgerError): ...


class CorruptChain(LedgerError): ...


@dataclass(frozen=True)
class GasTable:
    """Configured costs: per-function base charges plus storage/byte rates."""

    base: dict
    new_slot: int = 20000
    update_slot: int = 5000
    per_byte: int = 16

    def validate(self) -> None:
        missing = sorted(MUTATING_FUNCTIONS - set(self.base))
        if missing:
            raise IncompleteGasTable(f"gas table lacks entries for: {', '.join(missing)}")
        bad = sorted(fn for fn in MUTATING_FUNCTIONS if self.base[fn] <= 0)
        if bad:
            raise IncompleteGasTable(f"mutating functions need positive base cost: {', '.join(bad)}")

    def to_json_obj(self) -> dict:
        return {"base": dict(sorted(self.base.items())), "new_slot": self.new_slot,
                "update_slot": self.update_slot, "per_byte": self.per_byte}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "GasTable":
        return cls(base={k: int(v) for k, v in obj["base"].items()},
                   new_slot=int(obj["new_slot"]), update_slot=int(obj["update_slot"]),
                   per_byte=int(obj["per_byte"]))


def default_gas_table() -> GasTable:
    base = {fn: 21000 for fn in MUTATING_FUNCTIONS}
    base["deploy"] = 53000
    return GasTable(base=base)


def gas_cost(function: str, gas_table: GasTable | None = None) -> int:
    """Flat per-call cost: 0 for reads, the configured base for writes."""
    table = gas_table or default_gas_table()
    if function in READ_FUNCTIONS:
        return 0
    if function in MUTATING_FUNCTIONS:
        return table.base[function]
    raise UnknownFunction(f"no such contract function {function!r}")


@dataclass(frozen=True)
class Transaction:
    sender: str
    function: str
    args: dict
    nonce: int

    def to_json_obj(self) -> dict:
        return {"sender": self.sender, "function": self.function,
                "args": self.args, "nonce": self.nonce}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "Transaction":
        return cls(sender=obj["sender"], function=obj["function"],
                   args=obj["args"], nonce=int(obj["nonce"]))


@dataclass(frozen=True)
class GasReceipt:
    gas_used: int
    status: str  # "success" | "reverted"
    event: contract.Event | None = None
    error: dict | None = None  # {"name", "message"} when reverted

    def to_json_obj(self) -> dict:
        return {"gas_used": self.gas_used, "status": self.status,
                "event": self.event.to_json_obj() if self.event else None,
                "error": self.error}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "GasReceipt":
        event = contract.Event.from_json_obj(obj["event"]) if obj["event"] else None
        return cls(gas_used=int(obj["gas_used"]), status=obj["status"],
                   event=event, error=obj["error"])


@dataclass(frozen=True)
class Block:
    height: int
    prev_hash: str
    transactions: tuple
    receipts: tuple
    block_hash: str

    def to_json_obj(self) -> dict:
        return {"height": self.height, "prev_hash": self.prev_hash,
                "transactions": [tx.to_json_obj() for tx in self.transactions],
                "receipts": [r.to_json_obj() for r in self.receipts],
                "block_hash": self.block_hash}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "Block":
        return cls(height=int(obj["height"]), prev_hash=obj["prev_hash"],
                   transactions=tuple(Transaction.from_json_obj(t) for t in obj["transactions"]),
                   receipts=tuple(GasReceipt.from_json_obj(r) for r in obj["receipts"]),
                   block_hash=obj["block_hash"])


def compute_block_hash(height: int, prev_hash: str, transactions, receipts) -> str:
    body = {"height": height, "prev_hash": prev_hash,
            "transactions": [tx.to_json_obj() for tx in transactions],
            "receipts": [r.to_json_obj() for r in receipts]}
    return sha256_hex(canonical_json(body))


def _seal_block(height: int, prev_hash: str, transactions, receipts) -> Block:
    return Block(height=height, prev_hash=prev_hash,
                 transactions=tuple(transactions), receipts=tuple(receipts),
                 block_hash=compute_block_hash(height, prev_hash, transactions, receipts))


class Ledger:
    """Single-writer simulated chain. Construction performs the genesis
    deployment; every subsequent state change goes through
    submit_transaction and lands in its own block."""

    def __init__(self, creator: str, initial_ecs: list,
                 gas_table: GasTable | None = None, code: dict | None = None):
        self.gas_table = gas_table or default_gas_table()
        self.gas_table.validate()
        self.code = code  # optional code description carried for operators
        self._nonces: dict = {}
        deploy_args = {
            "creator": creator,
            "initial_ecs": [rec.to_json_obj() for rec in initial_ecs],
            "gas_table": self.gas_table.to_json_obj(),
            "code": code,
        }
        tx = Transaction(sender=creator, function="deploy", args=deploy_args, nonce=1)
        self.state, event = contract.deploy(creator, list(initial_ecs))
        gas = (self.gas_table.base["deploy"]
               + self.gas_table.per_byte * len(canonical_json(deploy_args).encode())
               + self.gas_table.new_slot * len(initial_ecs))
        receipt = GasReceipt(gas_used=gas, status="success", event=event)
        self.blocks = [_seal_block(0, GENESIS_PREV_HASH, [tx], [receipt])]
        self._nonces[creator] = 1

    @property
    def height(self) -> int:
        return self.blocks[-1].height

    def next_nonce(self, sender: str) -> int:
        return self._nonces.get(sender, 0) + 1

    def submit_transaction(self, tx: Transaction) -> GasReceipt:
        """Execute one call and append its block.

        Contract errors revert: the state is untouched but the
        transaction and its reverted receipt are still chained.
        BadNonce/UnknownFunction are ledger errors and append nothing.
        """
        if tx.function not in KNOWN_FUNCTIONS or tx.function == "deploy":
            raise UnknownFunction(f"{tx.function!r} is not a callable contract function")
        expected = self.next_nonce(tx.sender)
        if tx.nonce != expected:
            raise BadNonce(f"sender {tx.sender}: expected nonce {expected}, got {tx.nonce}")

        snapshot = copy.deepcopy(self.state)
        try:
            effect = contract.apply_call(self.state, tx.sender, tx.function, tx.args)
        except contract.ContractError as exc:
            self.state = snapshot
            receipt = GasReceipt(gas_used=self._intrinsic_gas(tx), status="reverted",
                                 error={"name": type(exc).__name__, "message": str(exc)})
            result = None
        else:
            gas = (self._intrinsic_gas(tx)
                   + self.gas_table.new_slot * effect.new_slots
                   + self.gas_table.update_slot * effect.updated_slots)
            receipt = GasReceipt(gas_used=gas, status="success", event=effect.event)
            result = effect.result

        self._nonces[tx.sender] = expected
        self.blocks.append(_seal_block(self.height + 1, self.blocks[-1].block_hash,
                                       [tx], [receipt]))
        self._last_result = result
        return receipt

    def call(self, sender: str, function: str, args: dict):
        """Convenience wrapper: auto-nonce, returns (receipt, read result)."""
        tx = Transaction(sender=sender, function=function, args=args,
                         nonce=self.next_nonce(sender))
        receipt = self.submit_transaction(tx)
        return receipt, self._last_result

    def _intrinsic_gas(self, tx: Transaction) -> int:
        if tx.function in READ_FUNCTIONS:
            return 0
        return (self.gas_table.base[tx.function]
                + self.gas_table.per_byte * len(canonical_json(tx.args).encode()))

    # -- integrity ----------------------------------------------------------

    def verify(self) -> bool:
        return verify_blocks(self.blocks)

    # -- persistence --------------------------------------------------------

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for block in self.blocks:
                fh.write(canonical_json(block.to_json_obj()))
                fh.write("\n")

    @classmethod
    def replay_blocks(cls, blocks: list) -> "Ledger":
        """Rebuild a ledger by re-executing a verified block sequence.

        Every re-executed block (receipts included) must reproduce the
        stored one exactly; determinism makes any mismatch corruption.
        """
        if not blocks:
            raise CorruptChain("empty chain")
        if not verify_blocks(blocks):
            raise CorruptChain("hash chain does not verify")
        genesis = blocks[0]
        if len(genesis.transactions) != 1 or genesis.transactions[0].function != "deploy":
            raise CorruptChain("genesis block must hold exactly the deployment")
        args = genesis.transactions[0].args
        try:
            initial_ecs = [contract.NodeRecord.from_json_obj(r) for r in args["initial_ecs"]]
            ledger = cls(creator=args["creator"], initial_ecs=initial_ecs,
                         gas_table=GasTable.from_json_obj(args["gas_table"]),
                         code=args.get("code"))
        except (KeyError, ValueError, TypeError, contract.ContractError) as exc:
            raise CorruptChain(f"cannot reconstruct genesis: {exc}") from exc
        if ledger.blocks[0] != genesis:
            raise CorruptChain("genesis block does not reproduce from its own config")
        for stored in blocks[1:]:
            for tx in stored.transactions:
                try:
                    ledger.submit_transaction(tx)
                except LedgerError as exc:
                    raise CorruptChain(f"block {stored.height} does not replay: {exc}") from exc
            if ledger.blocks[-1] != stored:
                raise CorruptChain(f"block {stored.height} does not reproduce under replay")
        return ledger

    @classmethod
    def load(cls, path) -> "Ledger":
        return cls.replay_blocks(read_blocks(path))


def read_blocks(path) -> list:
    """Parse a JSONL chain file into blocks; malformed lines mean corruption."""
    import json

    blocks = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                blocks.append(Block.from_json_obj(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise CorruptChain(f"line {lineno}: unreadable block: {exc}") from exc
    return blocks


def verify_blocks(blocks: list) -> bool:
    """True iff every block hash recomputes and the chain links correctly."""
    prev_hash = GENESIS_PREV_HASH
    for height, block in enumerate(blocks):
        if block.height != height or block.prev_hash != prev_hash:
            return False
        recomputed = compute_block_hash(block.height, block.prev_hash,
                                        block.transactions, block.receipts)
        if recomputed != block.block_hash:
            return False
        prev_hash = block.block_hash
    return True


def verify_file(path) -> bool:
    """Chain verification straight off disk; unparseable files are invalid."""
    try:
        return verify_blocks(read_blocks(path))
    except CorruptChain:
        return False


def replay_file(path) -> contract.ContractState:
    """Re-execute a chain file and return the resulting contract state."""
    return Ledger.load(path).state
