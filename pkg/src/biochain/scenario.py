"""Deterministic scenario runner, error-rate sweeps, and gas reporting.

A scenario document fully determines a run: the master seed is split
into independent substreams (witnesses, templates, channel noise,
impostor vectors), so two runs of the same document produce
byte-identical ledgers, and changing, say, the trial count of one step
does not perturb enrollment randomness.

Substream draw order is part of the determinism contract: templates are
drawn up front for every user and modality; witnesses are consumed in
enrollment/update order; noise and impostor bits are consumed per
authentication attempt in step order.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from . import fcs, protocol
from .bits import random_bits
from .canonical import canonical_json
from .ecc import LinearCode, build_code, code_to_json_obj
from .ledger import (KNOWN_FUNCTIONS, MUTATING_FUNCTIONS, READ_FUNCTIONS,
                     Block, CorruptChain, Ledger, read_blocks, verify_blocks)
from .synthbio import NoiseModel, acquire, analytic_error_rates, generate_template

FUNCTION_ORDER = ("deploy", "setSubjects", "getSubjects", "updateSubjects",
                  "delSubjects", "setNodes", "getNodes", "updateNodes",
                  "delNodes", "logAuthentication")

STEP_ACTIONS = frozenset({"enroll", "authenticate", "update-subject", "register-node",
                          "elect", "del-node", "get-node", "revoke"})

#: Seed of the bundled demo scenario. Fixed so its ledger is reproducible;
#: chosen so the toy-sized Hamming(7,4) run avoids coincidental string
#: collisions between 7-bit offsets and templates (e.g. a zero witness
#: makes delta equal the raw template) that would confuse at-rest scans.
DEMO_SEED = 20260810


class ScenarioInvalid(Exception):
    """A scenario document failed validation or a step cannot execute."""


@dataclass
class Scenario:
    seed: int
    code_params: dict
    flip_probability: float
    modalities: int
    users: int
    nodes: list
    steps: list
    log_auth_results: bool = False

    @classmethod
    def from_json_obj(cls, obj: dict) -> "Scenario":
        try:
            scenario = cls(
                seed=int(obj["seed"]),
                code_params=dict(obj["code"]),
                flip_probability=float(obj.get("flip_probability", 0.0)),
                modalities=int(obj.get("modalities", 2)),
                users=int(obj.get("users", 0)),
                nodes=[dict(n) for n in obj["nodes"]],
                steps=[dict(s) for s in obj.get("steps", [])],
                log_auth_results=bool(obj.get("log_auth_results", False)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioInvalid(f"malformed scenario document: {exc}") from exc
        scenario.validate()
        return scenario

    def validate(self) -> None:
        if self.modalities < 1:
            raise ScenarioInvalid("modalities must be >= 1")
        if self.users < 0:
            raise ScenarioInvalid("users must be >= 0")
        if not (0.0 <= self.flip_probability < 0.5):
            raise ScenarioInvalid("flip_probability must be in [0, 0.5)")
        if not self.nodes:
            raise ScenarioInvalid("at least one node is required")
        names = set()
        for node in self.nodes:
            if set(node) - {"name", "role"} or "name" not in node or "role" not in node:
                raise ScenarioInvalid(f"node entries need exactly name and role: {node}")
            if node["role"] not in ("ec", "ac"):
                raise ScenarioInvalid(f"node role must be 'ec' or 'ac': {node}")
            if node["name"] in names:
                raise ScenarioInvalid(f"duplicate node name {node['name']!r}")
            names.add(node["name"])
        if not any(n["role"] == "ec" for n in self.nodes):
            raise ScenarioInvalid("at least one EC node is required")
        for index, step in enumerate(self.steps):
            action = step.get("action")
            if action not in STEP_ACTIONS:
                raise ScenarioInvalid(f"step {index}: unknown action {action!r}")

    def to_json_obj(self) -> dict:
        return {"seed": self.seed, "code": self.code_params,
                "flip_probability": self.flip_probability,
                "modalities": self.modalities, "users": self.users,
                "nodes": self.nodes, "steps": self.steps,
                "log_auth_results": self.log_auth_results}

    def user_ids(self) -> list:
        return [f"user-{i}" for i in range(1, self.users + 1)]


def demo_scenario(seed: int = DEMO_SEED) -> Scenario:
    """The bundled end-to-end scenario: 1 EC, 2 ACs, 10 users, 2 modalities,
    Hamming(7,4), 1% channel noise, every contract function exercised."""
    return Scenario.from_json_obj({
        "seed": seed,
        "code": {"family": "hamming", "r": 3},
        "flip_probability": 0.01,
        "modalities": 2,
        "users": 10,
        "log_auth_results": True,
        "nodes": [
            {"name": "ec-1", "role": "ec"},
            {"name": "ac-1", "role": "ac"},
            {"name": "ac-2", "role": "ac"},
        ],
        "steps": [
            {"action": "enroll", "users": "all"},
            {"action": "get-node", "node": "ac-1"},
            {"action": "authenticate", "users": "all", "modalities": "all",
             "repeats": 25, "kind": "genuine"},
            {"action": "authenticate", "users": ["user-3"], "modalities": [1],
             "repeats": 20, "kind": "impostor"},
            {"action": "update-subject", "user": "user-2"},
            {"action": "elect", "candidate": "ac-1", "votes": [["ec-1", True]]},
            {"action": "del-node", "node": "ac-2"},
            {"action": "revoke", "user": "user-1"},
            {"action": "authenticate", "users": ["user-1"], "modalities": [1],
             "kind": "genuine"},
        ],
    })


class _Run:
    """Mutable context threaded through scenario step execution."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.code: LinearCode = build_code(**_family_kwargs(scenario.code_params))
        self.noise = NoiseModel(scenario.flip_probability)
        streams = np.random.SeedSequence(scenario.seed).spawn(4)
        self.witness_rng = np.random.default_rng(streams[0])
        self.template_rng = np.random.default_rng(streams[1])
        self.noise_rng = np.random.default_rng(streams[2])
        self.impostor_rng = np.random.default_rng(streams[3])

        ec_seeds = [n for n in scenario.nodes if n["role"] == "ec"]
        ac_seeds = [n for n in scenario.nodes if n["role"] == "ac"]
        self.lead_ec = protocol.node_address(ec_seeds[0]["name"])
        self.default_auth_node = protocol.node_address(
            (ac_seeds[0] if ac_seeds else ec_seeds[0])["name"])
        self.next_node_id = 1

        initial_ecs = []
        for node in ec_seeds:
            initial_ecs.append(protocol.make_node_record(
                node["name"], self.next_node_id, is_enrollment=True))
            self.next_node_id += 1
        self.ledger = Ledger(creator=self.lead_ec, initial_ecs=initial_ecs,
                             code=code_to_json_obj(self.code))
        for node in ac_seeds:
            protocol.register_node_flow(self.ledger, self.lead_ec,
                                        protocol.make_node_record(node["name"],
                                                                  self.next_node_id))
            self.next_node_id += 1

        # All templates are drawn up front, independent of the step list.
        self.templates = {
            user: [generate_template(self.template_rng, self.code.n, modality)
                   for modality in range(1, scenario.modalities + 1)]
            for user in scenario.user_ids()
        }

        self.enrollments = 0
        self.updates = 0
        self.revocations = 0
        self.reasons = {reason: 0 for reason in protocol.AUTH_REASONS}
        # genuine/by_modality count channel trials only: attempts that found
        # an enrolled subject, so the binomial FRR oracle applies to them.
        self.genuine = _Counter()
        self.impostor = _Counter()
        self.unknown_subject = 0
        self.by_modality = {m: _Counter() for m in range(1, scenario.modalities + 1)}


class _Counter:
    def __init__(self):
        self.attempts = 0
        self.accepted = 0

    def note(self, accepted: bool) -> None:
        self.attempts += 1
        self.accepted += int(accepted)

    def to_json_obj(self) -> dict:
        return {"attempts": self.attempts, "accepted": self.accepted}


def _family_kwargs(params: dict) -> dict:
    kwargs = dict(params)
    family = kwargs.pop("family", None)
    if family is None:
        raise ScenarioInvalid("code parameters need a 'family' key")
    return {"family": family, **kwargs}


def run_scenario(scenario: Scenario, ledger_path=None, report_path=None):
    """Execute every step; return (ledger, report dict).

    Optionally writes the chain as canonical JSONL and the report as
    JSON. Fully deterministic in the scenario document.
    """
    run = _Run(scenario)
    for index, step in enumerate(scenario.steps):
        try:
            _STEP_HANDLERS[step["action"]](run, step)
        except ScenarioInvalid:
            raise
        except (KeyError, TypeError, ValueError, LookupError) as exc:
            raise ScenarioInvalid(f"step {index} ({step.get('action')}): {exc}") from exc
    report = _build_report(run)
    if ledger_path is not None:
        run.ledger.save(ledger_path)
    if report_path is not None:
        with open(report_path, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return run.ledger, report


def _resolve_users(run: _Run, step: dict):
    users = step.get("users", "all")
    if users == "all":
        return run.scenario.user_ids()
    unknown = [u for u in users if u not in run.templates]
    if unknown:
        raise ScenarioInvalid(f"unknown users {unknown}")
    return list(users)


def _resolve_modalities(run: _Run, step: dict):
    modalities = step.get("modalities", step.get("modality", "all"))
    if modalities == "all":
        return list(range(1, run.scenario.modalities + 1))
    if isinstance(modalities, int):
        modalities = [modalities]
    bad = [m for m in modalities if not 1 <= m <= run.scenario.modalities]
    if bad:
        raise ScenarioInvalid(f"modalities out of range: {bad}")
    return list(modalities)


def _fresh_commitments(run: _Run, user: str) -> list:
    return [fcs.commit(run.code, template.bits, run.witness_rng).to_json_obj()
            for template in run.templates[user]]


def _step_enroll(run: _Run, step: dict) -> None:
    for user in _resolve_users(run, step):
        features = [t.bits for t in run.templates[user]]
        protocol.enroll_user(run.ledger, run.lead_ec, user, features,
                             code=run.code, rng=run.witness_rng)
        run.enrollments += 1


def _step_update_subject(run: _Run, step: dict) -> None:
    user = step["user"]
    if user not in run.templates:
        raise ScenarioInvalid(f"unknown user {user!r}")
    receipt, _ = run.ledger.call(run.lead_ec, "updateSubjects",
                                 {"id": user, "commitments": _fresh_commitments(run, user)})
    protocol.raise_for_receipt(receipt)
    run.updates += 1


def _step_authenticate(run: _Run, step: dict) -> None:
    kind = step.get("kind", "genuine")
    if kind not in ("genuine", "impostor"):
        raise ScenarioInvalid(f"unknown authentication kind {kind!r}")
    node = protocol.node_address(step["node"]) if "node" in step else run.default_auth_node
    repeats = int(step.get("repeats", 1))
    if repeats < 1:
        raise ScenarioInvalid("repeats must be >= 1")
    users = _resolve_users(run, step)
    modalities = _resolve_modalities(run, step)
    for _ in range(repeats):
        for user in users:
            for modality in modalities:
                if kind == "genuine":
                    sample = acquire(run.templates[user][modality - 1],
                                     run.noise, run.noise_rng)
                else:
                    sample = random_bits(run.impostor_rng, run.code.n)
                outcome = protocol.authenticate_user(
                    run.ledger, node, user, modality, sample, code=run.code,
                    log_result=run.scenario.log_auth_results)
                run.reasons[outcome.reason] += 1
                if outcome.reason == protocol.UNKNOWN_SUBJECT:
                    run.unknown_subject += 1
                elif kind == "genuine":
                    run.genuine.note(outcome.accepted)
                    run.by_modality[modality].note(outcome.accepted)
                else:
                    run.impostor.note(outcome.accepted)


def _step_register_node(run: _Run, step: dict) -> None:
    record = protocol.make_node_record(
        step["name"], run.next_node_id,
        is_authentication=bool(step.get("is_authentication", True)))
    protocol.register_node_flow(run.ledger, run.lead_ec, record)
    run.next_node_id += 1


def _step_elect(run: _Run, step: dict) -> None:
    votes = [(protocol.node_address(name), bool(vote)) for name, vote in step["votes"]]
    protocol.election_flow(run.ledger, protocol.node_address(step["candidate"]), votes)


def _step_del_node(run: _Run, step: dict) -> None:
    receipt, _ = run.ledger.call(run.lead_ec, "delNodes",
                                 {"address": protocol.node_address(step["node"])})
    protocol.raise_for_receipt(receipt)


def _step_get_node(run: _Run, step: dict) -> None:
    receipt, _ = run.ledger.call(run.lead_ec, "getNodes",
                                 {"address": protocol.node_address(step["node"])})
    protocol.raise_for_receipt(receipt)


def _step_revoke(run: _Run, step: dict) -> None:
    protocol.revoke_user(run.ledger, run.lead_ec, step["user"])
    run.revocations += 1


_STEP_HANDLERS = {
    "enroll": _step_enroll,
    "authenticate": _step_authenticate,
    "update-subject": _step_update_subject,
    "register-node": _step_register_node,
    "elect": _step_elect,
    "del-node": _step_del_node,
    "get-node": _step_get_node,
    "revoke": _step_revoke,
}


def _build_report(run: _Run) -> dict:
    gas = aggregate_gas(run.ledger.blocks)
    events = [{"block": block.height, "name": receipt.event.name}
              for block in run.ledger.blocks
              for receipt in block.receipts if receipt.event is not None]
    rates = analytic_error_rates(run.code, run.noise)
    return {
        "seed": run.scenario.seed,
        "code": code_to_json_obj(run.code),
        "flip_probability": run.scenario.flip_probability,
        "modalities": run.scenario.modalities,
        "users": run.scenario.users,
        "enrollments": run.enrollments,
        "updates": run.updates,
        "revocations": run.revocations,
        "authentications": {
            "genuine": run.genuine.to_json_obj(),
            "impostor": run.impostor.to_json_obj(),
            "unknown_subject": run.unknown_subject,
            "by_modality": {str(m): c.to_json_obj()
                            for m, c in run.by_modality.items()},
            "reasons": dict(sorted(run.reasons.items())),
        },
        "analytic": {"frr": rates.frr, "far": rates.far, "far_exact": rates.far_exact},
        "gas": gas,
        "events": events,
        "final_height": run.ledger.height,
    }


# ---------------------------------------------------------------------------
# FAR/FRR sweep
# ---------------------------------------------------------------------------

SWEEP_COLUMNS = ("family", "n", "k", "t", "p", "frr_analytic", "frr_empirical",
                 "far_analytic", "far_empirical", "trials")


def empirical_rates(code: LinearCode, flip_probability: float, trials: int,
                    rng: np.random.Generator):
    """Measure FRR/FAR through the real commit/open path.

    Each trial enrolls a fresh uniform template, then opens once with a
    noisy reacquisition (genuine) and once with a uniform impostor
    vector. Returns (frr, far) as observed fractions.
    """
    noise = NoiseModel(flip_probability)
    rejected = 0
    impostor_hits = 0
    for _ in range(trials):
        template = generate_template(rng, code.n)
        commitment = fcs.commit(code, template.bits, rng)
        genuine = acquire(template, noise, rng).bits
        if not fcs.open_commitment(code, commitment, genuine):
            rejected += 1
        impostor = random_bits(rng, code.n)
        if fcs.open_commitment(code, commitment, impostor):
            impostor_hits += 1
    return rejected / trials, impostor_hits / trials


def far_frr_sweep(code_specs, flip_probs, trials: int, seed: int = 0) -> list:
    """Empirical vs analytic error rates over a (code, p) grid.

    code_specs entries are LinearCode objects or parameter dicts with a
    'family' key. Requires trials >= 1000 so the 3-sigma comparisons in
    the harness are meaningful.
    """
    if trials < 1000:
        raise ValueError(f"trials must be >= 1000, got {trials}")
    rows = []
    root = np.random.SeedSequence(seed)
    for spec in code_specs:
        code = spec if isinstance(spec, LinearCode) else build_code(**_family_kwargs(spec))
        for p in flip_probs:
            rng = np.random.default_rng(root.spawn(1)[0])
            frr_emp, far_emp = empirical_rates(code, p, trials, rng)
            rates = analytic_error_rates(code, NoiseModel(p))
            rows.append({
                "family": code.family, "n": code.n, "k": code.k, "t": code.t,
                "p": p, "frr_analytic": rates.frr, "frr_empirical": frr_emp,
                "far_analytic": rates.far, "far_empirical": far_emp,
                "trials": trials,
            })
    return rows


def write_sweep_csv(rows, fh) -> None:
    writer = csv.DictWriter(fh, fieldnames=list(SWEEP_COLUMNS))
    writer.writeheader()
    for row in rows:
        writer.writerow(row)


def sweep_csv_text(rows) -> str:
    buf = io.StringIO()
    write_sweep_csv(rows, buf)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Gas report
# ---------------------------------------------------------------------------

class GasDichotomyViolation(Exception):
    """A read consumed gas or a mutating call was free."""


@dataclass
class GasReport:
    """Per-function gas aggregation over one chain."""

    rows: list = field(default_factory=list)

    def row(self, function: str) -> dict:
        return next(r for r in self.rows if r["function"] == function)

    def text_table(self) -> str:
        header = f"{'function':<20}{'calls':>7}{'reverted':>10}{'total':>12}{'min':>10}{'max':>10}"
        lines = [header, "-" * len(header)]
        for row in self.rows:
            lines.append(f"{row['function']:<20}{row['calls']:>7}{row['reverted']:>10}"
                         f"{row['total_gas']:>12}{row['min_gas']:>10}{row['max_gas']:>10}")
        return "\n".join(lines)

    def write_csv(self, fh) -> None:
        writer = csv.DictWriter(fh, fieldnames=["function", "calls", "reverted",
                                                "total_gas", "min_gas", "max_gas"])
        writer.writeheader()
        for row in self.rows:
            writer.writerow(row)

    def csv_text(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


def aggregate_gas(blocks) -> dict:
    totals = {fn: {"calls": 0, "reverted": 0, "total_gas": 0} for fn in FUNCTION_ORDER}
    for block in blocks:
        for tx, receipt in zip(block.transactions, block.receipts):
            entry = totals[tx.function]
            entry["calls"] += 1
            entry["reverted"] += int(receipt.status == "reverted")
            entry["total_gas"] += receipt.gas_used
    return totals


def gas_report(source) -> GasReport:
    """Build the per-function gas table for a chain file or block list.

    Verifies the chain first (CorruptChain on tamper) and enforces the
    payable dichotomy: reads cost zero, every mutating call costs gas.
    """
    if isinstance(source, (list, tuple)):
        blocks = list(source)
    else:
        blocks = read_blocks(source)
    if not verify_blocks(blocks):
        raise CorruptChain("chain does not verify; refusing to report")

    per_call: dict = {fn: [] for fn in FUNCTION_ORDER}
    for block in blocks:
        for tx, receipt in zip(block.transactions, block.receipts):
            if tx.function not in per_call:  # unknown name cannot verify anyway
                raise CorruptChain(f"unknown function {tx.function!r} in block {block.height}")
            per_call[tx.function].append(receipt.gas_used)

    report = GasReport()
    for fn in FUNCTION_ORDER:
        gases = per_call[fn]
        reverted = sum(1 for block in blocks
                       for tx, receipt in zip(block.transactions, block.receipts)
                       if tx.function == fn and receipt.status == "reverted")
        report.rows.append({
            "function": fn,
            "calls": len(gases),
            "reverted": reverted,
            "total_gas": sum(gases),
            "min_gas": min(gases) if gases else 0,
            "max_gas": max(gases) if gases else 0,
        })
        if fn in READ_FUNCTIONS and sum(gases) != 0:
            raise GasDichotomyViolation(f"read function {fn} consumed gas")
        if fn in MUTATING_FUNCTIONS and any(g <= 0 for g in gases):
            raise GasDichotomyViolation(f"mutating function {fn} had a free call")
    return report
