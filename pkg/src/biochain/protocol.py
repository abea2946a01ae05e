"""EC and AC protocol flows over the simulated ledger.

Enrollment, authentication, revocation, node registration, and
elections, each expressed as the off-chain computation plus the one
on-chain call the paper-style roles would make. All fuzzy-commitment
work happens here, off-chain; the ledger only ever sees digests and
offsets. Reads are routed through zero-gas transactions so they show up
in gas reports and receipts like everything else.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import contract, fcs
from .canonical import sha256_hex
from .ecc import LinearCode, code_from_json_obj
from .ledger import Ledger
from .synthbio import features_extractor

UNKNOWN_SUBJECT = "unknown-subject"
AUTH_REASONS = (fcs.MATCHED, fcs.DIGEST_MISMATCH, fcs.DECODING_FAILURE, UNKNOWN_SUBJECT)


class ModalityOutOfRange(Exception):
    """Requested modality index exceeds the subject's enrolled modalities."""


@dataclass(frozen=True)
class AuthOutcome:
    subject_id: str
    modality: int
    accepted: bool
    reason: str

    def __post_init__(self):
        if self.reason not in AUTH_REASONS:
            raise ValueError(f"unknown reason {self.reason!r}")
        if self.accepted != (self.reason == fcs.MATCHED):
            raise ValueError("accepted must hold exactly when the digest matched")

    def to_json_obj(self) -> dict:
        return {"subject_id": self.subject_id, "modality": self.modality,
                "accepted": self.accepted, "reason": self.reason}


def node_address(name: str) -> str:
    """Deterministic 32-hex address for a named node."""
    return sha256_hex(f"biochain-node:{name}")[:32]


def make_node_record(name: str, node_id: int, is_enrollment: bool = False,
                     is_authentication: bool = True) -> contract.NodeRecord:
    return contract.NodeRecord(id=node_id, name=name, address=node_address(name),
                               is_authentication=is_authentication,
                               is_enrollment=is_enrollment)


def raise_for_receipt(receipt) -> None:
    """Re-raise a reverted receipt as its original contract error."""
    if receipt.status == "reverted":
        error = receipt.error or {}
        cls = contract.ERRORS_BY_NAME.get(error.get("name"), contract.ContractError)
        raise cls(error.get("message", "transaction reverted"))


def ledger_code(ledger: Ledger) -> LinearCode:
    """The code the chain was deployed with (stored in the genesis config)."""
    if ledger.code is None:
        raise ValueError("ledger carries no code description; pass one explicitly")
    return code_from_json_obj(ledger.code)


def enroll_user(ledger: Ledger, ec_address: str, subject_id: str, feature_vectors,
                code: LinearCode | None = None,
                rng: np.random.Generator | None = None):
    """Commit each modality off-chain and store all commitments in one
    setSubjects transaction. Witnesses are discarded."""
    code = code or ledger_code(ledger)
    commitments = [fcs.commit(code, x, rng).to_json_obj() for x in feature_vectors]
    receipt, _ = ledger.call(ec_address, "setSubjects",
                             {"id": subject_id, "commitments": commitments})
    raise_for_receipt(receipt)
    return receipt


def authenticate_user(ledger: Ledger, node_addr: str, subject_id: str, modality: int,
                      acquisition, code: LinearCode | None = None,
                      extractor=features_extractor, log_result: bool = False) -> AuthOutcome:
    """Run one authentication: read the stored commitment, open it with
    the freshly extracted feature vector, optionally log the outcome."""
    code = code or ledger_code(ledger)
    receipt, record = ledger.call(node_addr, "getSubjects", {"id": subject_id})
    if receipt.status == "reverted":
        if (receipt.error or {}).get("name") == "UnknownSubject":
            outcome = AuthOutcome(subject_id, modality, False, UNKNOWN_SUBJECT)
            if log_result:
                _log_outcome(ledger, node_addr, outcome)
            return outcome
        raise_for_receipt(receipt)
    commitments = record["commitments"]
    if not 1 <= modality <= len(commitments):
        raise ModalityOutOfRange(
            f"modality {modality} not in 1..{len(commitments)} for {subject_id!r}")
    commitment = fcs.Commitment.from_json_obj(commitments[modality - 1])
    reason = fcs.open_outcome(code, commitment, extractor(acquisition))
    outcome = AuthOutcome(subject_id, modality, reason == fcs.MATCHED, reason)
    if log_result:
        _log_outcome(ledger, node_addr, outcome)
    return outcome


def _log_outcome(ledger: Ledger, node_addr: str, outcome: AuthOutcome) -> None:
    receipt, _ = ledger.call(node_addr, "logAuthentication",
                             {"subject_id": outcome.subject_id,
                              "modality": outcome.modality,
                              "outcome": outcome.accepted})
    raise_for_receipt(receipt)


def revoke_user(ledger: Ledger, ec_address: str, subject_id: str):
    """Remove a subject from contract state. Historical blocks keep the
    enrollment bytes; only the live registry forgets the user."""
    receipt, _ = ledger.call(ec_address, "delSubjects", {"id": subject_id})
    raise_for_receipt(receipt)
    return receipt


def register_node_flow(ledger: Ledger, ec_address: str, record: contract.NodeRecord):
    """Register a new read-only AC."""
    receipt, _ = ledger.call(ec_address, "setNodes", {"record": record.to_json_obj()})
    raise_for_receipt(receipt)
    return receipt


def election_flow(ledger: Ledger, candidate_address: str, votes) -> bool:
    """Cast EC votes in order until the election resolves.

    votes is a sequence of (ec_address, bool). Returns whether the
    candidate ended up elevated. Votes after resolution are not cast.
    """
    for ec_address, vote in votes:
        receipt, _ = ledger.call(ec_address, "updateNodes",
                                 {"candidate": candidate_address, "vote": bool(vote)})
        raise_for_receipt(receipt)
        election = ledger.state.elections.get(candidate_address)
        if election is None or not election.open:
            break
    record = ledger.state.nodes.get(candidate_address)
    return record is not None and record.is_enrollment
