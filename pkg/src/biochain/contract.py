"""Smart-contract state machine: subject and node registries with
role-based access control, EC majority voting, and an authentication log.

Two node roles exist. Enrollment centers (ECs, is_enrollment=True) may
call every function. Authentication centers (ACs) are read-only except
for logAuthentication, which any registered node may call so it can
record authentication outcomes. ECs are created only at deployment or
by winning a strict-majority election among the current ECs.

All functions are dispatched through apply_call(state, caller, function,
args) with JSON-compatible args; a ContractError raised from a handler
means the enclosing transaction reverts.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

ADDRESS_RE = re.compile(r"^[0-9a-f]{32}$")
DIGEST_RE = re.compile(r"^[0-9a-f]{64}$")
BITSTRING_RE = re.compile(r"^[01]+$")


class ContractError(Exception):
    """Base class for failures that revert the enclosing transaction."""


class Unauthorized(ContractError): ...


class NoInitialEc(ContractError): ...


class UnknownSubject(ContractError): ...


class DuplicateSubject(ContractError): ...


class MalformedCommitment(ContractError): ...


class UnknownNode(ContractError): ...


class DuplicateNode(ContractError): ...


class DirectEcCreation(ContractError): ...


class AlreadyVoted(ContractError): ...


class LastEcProtection(ContractError): ...


class InvalidArguments(ContractError): ...


@dataclass
class NodeRecord:
    """A registered EC or AC."""

    id: int
    name: str
    address: str
    is_authentication: bool
    is_enrollment: bool

    def __post_init__(self):
        if not ADDRESS_RE.match(self.address):
            raise ValueError(f"address must be 32 lowercase hex chars, got {self.address!r}")

    def to_json_obj(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "address": self.address,
            "is_authentication": self.is_authentication,
            "is_enrollment": self.is_enrollment,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "NodeRecord":
        return cls(
            id=int(obj["id"]),
            name=str(obj["name"]),
            address=str(obj["address"]),
            is_authentication=bool(obj["is_authentication"]),
            is_enrollment=bool(obj["is_enrollment"]),
        )


@dataclass
class SubjectRecord:
    """An enrolled user: one commitment payload per modality, index 1..m."""

    id: str
    commitments: list  # list of {"digest", "offset", "n"} dicts

    def to_json_obj(self) -> dict:
        return {"id": self.id, "commitments": [dict(c) for c in self.commitments]}


@dataclass
class Election:
    """An open or resolved vote on elevating an AC to EC."""

    candidate: str
    votes: dict = field(default_factory=dict)  # EC address -> bool
    open: bool = True

    def to_json_obj(self) -> dict:
        return {"candidate": self.candidate, "votes": dict(self.votes), "open": self.open}


@dataclass(frozen=True)
class Event:
    """Emitted by every successful mutating call; stored in the receipt."""

    name: str
    payload: dict

    def to_json_obj(self) -> dict:
        return {"name": self.name, "payload": self.payload}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "Event":
        return cls(name=obj["name"], payload=obj["payload"])


@dataclass
class ContractState:
    creator: str
    nodes: dict = field(default_factory=dict)      # address -> NodeRecord
    subjects: dict = field(default_factory=dict)   # id -> SubjectRecord
    elections: dict = field(default_factory=dict)  # candidate -> Election
    auth_log: list = field(default_factory=list)

    def node(self, address: str) -> NodeRecord | None:
        return self.nodes.get(address)

    def is_registered(self, address: str) -> bool:
        return address in self.nodes

    def is_ec(self, address: str) -> bool:
        record = self.nodes.get(address)
        return record is not None and record.is_enrollment

    def ec_addresses(self) -> list:
        return [a for a, rec in self.nodes.items() if rec.is_enrollment]

    def to_json_obj(self) -> dict:
        return {
            "creator": self.creator,
            "nodes": {a: rec.to_json_obj() for a, rec in self.nodes.items()},
            "subjects": {s: rec.to_json_obj() for s, rec in self.subjects.items()},
            "elections": {c: e.to_json_obj() for c, e in self.elections.items()},
            "auth_log": [dict(entry) for entry in self.auth_log],
        }


@dataclass(frozen=True)
class CallEffect:
    """Outcome of a successful call: the emitted event (None for reads),
    the read result, and storage-slot counts used for gas pricing."""

    event: Event | None = None
    result: object = None
    new_slots: int = 0
    updated_slots: int = 0


def deploy(creator: str, initial_ecs: list) -> tuple:
    """Initialize contract state with the creator's trusted EC list."""
    if not ADDRESS_RE.match(creator):
        raise InvalidArguments(f"creator address malformed: {creator!r}")
    if not initial_ecs:
        raise NoInitialEc("at least one initial EC is required")
    state = ContractState(creator=creator)
    for record in initial_ecs:
        if not record.is_enrollment:
            raise NoInitialEc(f"initial node {record.name!r} lacks enrollment privilege")
        if record.address in state.nodes:
            raise DuplicateNode(f"duplicate initial address {record.address}")
        state.nodes[record.address] = record
    event = Event("ContractDeployed",
                  {"creator": creator, "nodes": [r.address for r in initial_ecs]})
    return state, event


def apply_call(state: ContractState, caller: str, function: str, args: dict) -> CallEffect:
    """Execute one contract function against the state (mutating it).

    Raises ContractError subclasses on any failure; the ledger layer
    translates those into reverted receipts and restores the state.
    """
    try:
        handler = _HANDLERS[function]
    except KeyError:
        raise InvalidArguments(f"no such contract function {function!r}") from None
    if not isinstance(args, dict):
        raise InvalidArguments("call arguments must be a JSON object")
    try:
        return handler(state, caller, args)
    except (KeyError, TypeError) as exc:
        raise InvalidArguments(f"bad arguments for {function}: {exc}") from exc


def _require_ec(state: ContractState, caller: str) -> None:
    if not state.is_ec(caller):
        raise Unauthorized(f"caller {caller} lacks enrollment privilege")


def _require_registered(state: ContractState, caller: str) -> None:
    if not state.is_registered(caller):
        raise Unauthorized(f"caller {caller} is not a registered node")


def validate_commitments(commitments) -> list:
    """Shape-check a commitment list: non-empty, hex digests, uniform-length
    bitstring offsets consistent with their declared n."""
    if not isinstance(commitments, list) or not commitments:
        raise MalformedCommitment("commitments must be a non-empty list")
    cleaned = []
    length = None
    for entry in commitments:
        if not isinstance(entry, dict):
            raise MalformedCommitment("commitment must be an object")
        digest, offset, n = entry.get("digest"), entry.get("offset"), entry.get("n")
        if not isinstance(digest, str) or not DIGEST_RE.match(digest):
            raise MalformedCommitment("digest must be 64 lowercase hex characters")
        if not isinstance(offset, str) or not BITSTRING_RE.match(offset or ""):
            raise MalformedCommitment("offset must be a non-empty '0'/'1' string")
        if not isinstance(n, int) or n != len(offset):
            raise MalformedCommitment(f"declared n={n!r} disagrees with offset length")
        if length is None:
            length = len(offset)
        elif len(offset) != length:
            raise MalformedCommitment("all offsets in a record must share one length")
        cleaned.append({"digest": digest, "offset": offset, "n": n})
    return cleaned


def _set_subjects(state, caller, args):
    _require_ec(state, caller)
    subject_id = str(args["id"])
    if not subject_id:
        raise InvalidArguments("subject id must be non-empty")
    if subject_id in state.subjects:
        raise DuplicateSubject(f"subject {subject_id!r} already enrolled")
    commitments = validate_commitments(args["commitments"])
    state.subjects[subject_id] = SubjectRecord(id=subject_id, commitments=commitments)
    event = Event("SubjectEnrolled", {"id": subject_id, "modalities": len(commitments)})
    return CallEffect(event=event, new_slots=len(commitments))


def _get_subjects(state, caller, args):
    _require_registered(state, caller)
    subject_id = str(args["id"])
    record = state.subjects.get(subject_id)
    if record is None:
        raise UnknownSubject(f"subject {subject_id!r} is not enrolled")
    return CallEffect(result=record.to_json_obj())


def _update_subjects(state, caller, args):
    _require_ec(state, caller)
    subject_id = str(args["id"])
    if subject_id not in state.subjects:
        raise UnknownSubject(f"subject {subject_id!r} is not enrolled")
    commitments = validate_commitments(args["commitments"])
    state.subjects[subject_id] = SubjectRecord(id=subject_id, commitments=commitments)
    event = Event("SubjectUpdated", {"id": subject_id, "modalities": len(commitments)})
    return CallEffect(event=event, updated_slots=len(commitments))


def _del_subjects(state, caller, args):
    _require_ec(state, caller)
    subject_id = str(args["id"])
    if subject_id not in state.subjects:
        raise UnknownSubject(f"subject {subject_id!r} is not enrolled")
    del state.subjects[subject_id]
    return CallEffect(event=Event("SubjectDeleted", {"id": subject_id}))


def _set_nodes(state, caller, args):
    _require_ec(state, caller)
    try:
        record = NodeRecord.from_json_obj(args["record"])
    except (ValueError, KeyError) as exc:
        raise InvalidArguments(f"bad node record: {exc}") from exc
    if record.address in state.nodes:
        raise DuplicateNode(f"address {record.address} already registered")
    if record.is_enrollment:
        raise DirectEcCreation("ECs are created only at genesis or by election")
    state.nodes[record.address] = record
    event = Event("NodeRegistered", {"address": record.address, "name": record.name})
    return CallEffect(event=event, new_slots=1)


def _get_nodes(state, caller, args):
    _require_registered(state, caller)
    address = str(args["address"])
    record = state.nodes.get(address)
    if record is None:
        raise UnknownNode(f"no node registered at {address}")
    return CallEffect(result=record.to_json_obj())


def _update_nodes(state, caller, args):
    _require_ec(state, caller)
    candidate = str(args["candidate"])
    vote = args["vote"]
    if not isinstance(vote, bool):
        raise InvalidArguments("vote must be a boolean")
    record = state.nodes.get(candidate)
    if record is None or record.is_enrollment:
        raise UnknownNode(f"candidate {candidate} is not a registered AC")
    election = state.elections.get(candidate)
    if election is None or not election.open:
        election = Election(candidate=candidate)
        state.elections[candidate] = election
    if caller in election.votes:
        raise AlreadyVoted(f"EC {caller} already voted on {candidate}")
    election.votes[caller] = vote

    ecs = state.ec_addresses()
    yes = sum(1 for v in election.votes.values() if v)
    if 2 * yes > len(ecs):
        record.is_enrollment = True
        election.open = False
        event = Event("NodeUpdated",
                      {"address": candidate, "yes": yes, "ecs": len(ecs)})
        return CallEffect(event=event, updated_slots=1)

    # Close early once a yes-majority can no longer be reached.
    pending = sum(1 for a in ecs if a not in election.votes)
    if 2 * (yes + pending) <= len(ecs):
        election.open = False
    event = Event("VoteRecorded",
                  {"candidate": candidate, "voter": caller, "vote": vote,
                   "yes": yes, "votes": len(election.votes),
                   "ecs": len(ecs), "open": election.open})
    return CallEffect(event=event, updated_slots=1)


def _del_nodes(state, caller, args):
    _require_ec(state, caller)
    address = str(args["address"])
    record = state.nodes.get(address)
    if record is None:
        raise UnknownNode(f"no node registered at {address}")
    if record.is_enrollment and len(state.ec_addresses()) == 1:
        raise LastEcProtection("cannot delete the last enrollment center")
    del state.nodes[address]
    state.elections.pop(address, None)  # a deleted node's election is void
    return CallEffect(event=Event("NodeDeleted", {"address": address}))


def _log_authentication(state, caller, args):
    _require_registered(state, caller)
    subject_id = str(args["subject_id"])
    modality = int(args["modality"])
    outcome = args["outcome"]
    if not isinstance(outcome, bool):
        raise InvalidArguments("outcome must be a boolean")
    if modality < 1:
        raise InvalidArguments("modality index starts at 1")
    entry = {"subject_id": subject_id, "modality": modality,
             "outcome": outcome, "caller": caller}
    state.auth_log.append(entry)
    return CallEffect(event=Event("AuthenticationLogged", dict(entry)), new_slots=1)


_HANDLERS = {
    "setSubjects": _set_subjects,
    "getSubjects": _get_subjects,
    "updateSubjects": _update_subjects,
    "delSubjects": _del_subjects,
    "setNodes": _set_nodes,
    "getNodes": _get_nodes,
    "updateNodes": _update_nodes,
    "delNodes": _del_nodes,
    "logAuthentication": _log_authentication,
}

#: Contract functions invocable as transactions (deploy is genesis-only).
FUNCTIONS = frozenset(_HANDLERS)

ERRORS_BY_NAME = {cls.__name__: cls for cls in ContractError.__subclasses__()}
