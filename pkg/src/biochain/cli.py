"""Operator CLI: one-shot protocol actions against a chain file, scenario
runs, error-rate sweeps, and ledger inspection.

Chain files are canonical JSONL; every command that mutates the chain
loads it by full replay, appends its transactions, and rewrites the
file. Failures print a machine-readable JSON object on stderr and exit
nonzero.
"""
from __future__ import annotations

import argparse
import json
import re
import sys

import numpy as np

from . import contract, ecc, protocol, scenario as scenario_mod
from .bits import from_bitstring, to_bitstring
from .canonical import sha256_hex
from .ledger import CorruptChain, Ledger, LedgerError, verify_file
from .synthbio import generate_template

_ADDRESS_RE = re.compile(r"^[0-9a-f]{32}$")

_HANDLED_ERRORS = (ecc.CodeError, contract.ContractError, LedgerError,
                   scenario_mod.ScenarioInvalid, scenario_mod.GasDichotomyViolation,
                   protocol.ModalityOutOfRange, ValueError, OSError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _emit_error("UsageError", message)
        raise SystemExit(2)


def _emit_error(name: str, message: str) -> None:
    print(json.dumps({"error": name, "message": message}), file=sys.stderr)


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def _address(name_or_address: str) -> str:
    if _ADDRESS_RE.match(name_or_address):
        return name_or_address
    return protocol.node_address(name_or_address)


def _parse_code_spec(spec: str) -> ecc.LinearCode:
    """Accept 'hamming:R', 'repetition:N', or a path to a code JSON file."""
    if spec.endswith(".json"):
        with open(spec, "r", encoding="utf-8") as fh:
            return ecc.code_from_json_obj(json.load(fh))
    family, sep, param = spec.partition(":")
    if not sep:
        raise ValueError(f"code spec must be family:param or a .json path, got {spec!r}")
    if family == "hamming":
        return ecc.hamming_code(int(param))
    if family == "repetition":
        return ecc.repetition_code(int(param))
    raise ValueError(f"unknown code family {family!r}")


def _load_ledger(path: str) -> Ledger:
    return Ledger.load(path)


def _code_for(ledger: Ledger, override: str | None) -> ecc.LinearCode:
    if override:
        return _parse_code_spec(override)
    return protocol.ledger_code(ledger)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _cmd_deploy(args) -> int:
    import os
    if os.path.exists(args.ledger) and not args.force:
        raise ValueError(f"{args.ledger} exists; pass --force to overwrite")
    records = [protocol.make_node_record(name, i + 1, is_enrollment=True)
               for i, name in enumerate(args.ec)]
    creator = _address(args.creator) if args.creator else records[0].address
    code = _parse_code_spec(args.code) if args.code else None
    ledger = Ledger(creator=creator, initial_ecs=records,
                    code=ecc.code_to_json_obj(code) if code else None)
    ledger.save(args.ledger)
    _emit({"ledger": args.ledger, "creator": creator,
           "genesis_hash": ledger.blocks[0].block_hash,
           "nodes": [r.to_json_obj() for r in records]})
    return 0


def _cmd_register_node(args) -> int:
    ledger = _load_ledger(args.ledger)
    node_id = len(ledger.state.nodes) + 1
    record = protocol.make_node_record(args.name, node_id,
                                       is_authentication=not args.no_authentication)
    receipt = protocol.register_node_flow(ledger, _address(args.ec), record)
    ledger.save(args.ledger)
    _emit({"registered": record.to_json_obj(), "gas_used": receipt.gas_used})
    return 0


def _enrollment_features(args, code: ecc.LinearCode):
    if args.features:
        vectors = [from_bitstring(f) for f in args.features]
        return vectors, None
    if args.modalities is None:
        raise ValueError("pass --features per modality or --modalities with --seed")
    seed_seq = np.random.SeedSequence(
        [args.seed, int(sha256_hex(args.user)[:16], 16)])
    rng = np.random.default_rng(seed_seq)
    templates = [generate_template(rng, code.n, i + 1) for i in range(args.modalities)]
    return [t.bits for t in templates], templates


def _cmd_enroll(args) -> int:
    ledger = _load_ledger(args.ledger)
    code = _code_for(ledger, args.code)
    vectors, templates = _enrollment_features(args, code)
    receipt = protocol.enroll_user(ledger, _address(args.ec), args.user, vectors,
                                   code=code)
    ledger.save(args.ledger)
    out = {"subject": args.user, "modalities": len(vectors),
           "gas_used": receipt.gas_used,
           "event": receipt.event.to_json_obj() if receipt.event else None}
    if templates is not None:
        # Synthetic templates are the operator's only copy; print them so
        # later authenticate calls can present the same biometrics.
        out["templates"] = [to_bitstring(t.bits) for t in templates]
    _emit(out)
    return 0


def _cmd_authenticate(args) -> int:
    ledger = _load_ledger(args.ledger)
    code = _code_for(ledger, args.code)
    outcome = protocol.authenticate_user(
        ledger, _address(args.node), args.user, args.modality,
        from_bitstring(args.features), code=code, log_result=args.log_auth)
    ledger.save(args.ledger)
    _emit(outcome.to_json_obj())
    return 0


def _cmd_revoke(args) -> int:
    ledger = _load_ledger(args.ledger)
    receipt = protocol.revoke_user(ledger, _address(args.ec), args.user)
    ledger.save(args.ledger)
    _emit({"revoked": args.user, "gas_used": receipt.gas_used})
    return 0


def _cmd_elect(args) -> int:
    ledger = _load_ledger(args.ledger)
    votes = []
    for vote in args.vote:
        name, sep, value = vote.partition(":")
        if not sep or value not in ("yes", "no"):
            raise ValueError(f"votes look like EC:yes or EC:no, got {vote!r}")
        votes.append((_address(name), value == "yes"))
    elevated = protocol.election_flow(ledger, _address(args.candidate), votes)
    ledger.save(args.ledger)
    _emit({"candidate": args.candidate, "elevated": elevated})
    return 0


def _cmd_run(args) -> int:
    if args.scenario == "demo":
        doc = scenario_mod.demo_scenario().to_json_obj()
        stem = "demo"
    else:
        with open(args.scenario, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        stem = re.sub(r"\.json$", "", args.scenario)
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.log_auth:
        doc["log_auth_results"] = True
    scn = scenario_mod.Scenario.from_json_obj(doc)
    ledger_path = args.ledger or f"{stem}.ledger.jsonl"
    report_path = args.report or f"{stem}.report.json"
    ledger, report = scenario_mod.run_scenario(scn, ledger_path, report_path)
    _emit({"ledger": ledger_path, "report": report_path,
           "final_height": ledger.height,
           "enrollments": report["enrollments"],
           "authentications": report["authentications"]})
    return 0


def _cmd_sweep(args) -> int:
    codes = [_parse_code_spec(spec) for spec in args.code]
    rows = scenario_mod.far_frr_sweep(codes, args.flip_prob, args.trials,
                                      seed=args.seed)
    text = scenario_mod.sweep_csv_text(rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        _emit({"out": args.out, "rows": len(rows)})
    else:
        sys.stdout.write(text)
    return 0


def _cmd_gas_report(args) -> int:
    report = scenario_mod.gas_report(args.ledger)
    print(report.text_table())
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            report.write_csv(fh)
    return 0


def _cmd_ledger_verify(args) -> int:
    valid = verify_file(args.file)
    _emit({"file": args.file, "valid": valid})
    return 0 if valid else 1


def _cmd_ledger_replay(args) -> int:
    ledger = Ledger.load(args.file)  # raises CorruptChain on tamper
    state = ledger.state
    _emit({"file": args.file, "height": ledger.height,
           "subjects": sorted(state.subjects),
           "nodes": {a: r.name for a, r in sorted(state.nodes.items())},
           "auth_log_entries": len(state.auth_log),
           "state_digest": sha256_hex(json.dumps(state.to_json_obj(), sort_keys=True))})
    return 0


# ---------------------------------------------------------------------------
# wiring
# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="biochain",
                     description="Fuzzy-commitment biometric authentication "
                                 "on a simulated permissioned ledger.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("deploy", help="create a chain with initial ECs")
    p.add_argument("--ledger", required=True)
    p.add_argument("--ec", action="append", required=True, help="initial EC name (repeatable)")
    p.add_argument("--creator", help="creator name/address (default: first EC)")
    p.add_argument("--code", help="code spec stored with the chain, e.g. hamming:3")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=_cmd_deploy)

    p = sub.add_parser("register-node", help="EC registers a read-only AC")
    p.add_argument("--ledger", required=True)
    p.add_argument("--ec", required=True)
    p.add_argument("--name", required=True)
    p.add_argument("--no-authentication", action="store_true")
    p.set_defaults(func=_cmd_register_node)

    p = sub.add_parser("enroll", help="EC enrolls a subject")
    p.add_argument("--ledger", required=True)
    p.add_argument("--ec", required=True)
    p.add_argument("--user", required=True)
    p.add_argument("--features", action="append",
                   help="feature bitstring, one per modality (repeatable)")
    p.add_argument("--modalities", type=int, help="synthesize this many templates")
    p.add_argument("--seed", type=int, default=0, help="seed for synthetic templates")
    p.add_argument("--code", help="override the chain's code spec")
    p.set_defaults(func=_cmd_enroll)

    p = sub.add_parser("authenticate", help="node authenticates a subject")
    p.add_argument("--ledger", required=True)
    p.add_argument("--node", required=True)
    p.add_argument("--user", required=True)
    p.add_argument("--modality", type=int, default=1)
    p.add_argument("--features", required=True)
    p.add_argument("--log-auth", action="store_true",
                   help="record the outcome on-chain")
    p.add_argument("--code", help="override the chain's code spec")
    p.set_defaults(func=_cmd_authenticate)

    p = sub.add_parser("revoke", help="EC removes a subject from state")
    p.add_argument("--ledger", required=True)
    p.add_argument("--ec", required=True)
    p.add_argument("--user", required=True)
    p.set_defaults(func=_cmd_revoke)

    p = sub.add_parser("elect", help="vote an AC up to EC")
    p.add_argument("--ledger", required=True)
    p.add_argument("--candidate", required=True)
    p.add_argument("--vote", action="append", required=True,
                   help="EC:yes or EC:no (repeatable, cast in order)")
    p.set_defaults(func=_cmd_elect)

    p = sub.add_parser("run", help="run a scenario JSON (or the bundled 'demo')")
    p.add_argument("scenario", help="scenario file, or 'demo'")
    p.add_argument("--ledger", help="output chain path")
    p.add_argument("--report", help="output report path")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--log-auth", action="store_true",
                   help="force on-chain logging of auth outcomes")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="empirical vs analytic FRR/FAR grid")
    p.add_argument("--code", action="append", required=True)
    p.add_argument("--flip-prob", action="append", type=float, required=True)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("gas-report", help="per-function gas table for a chain")
    p.add_argument("ledger")
    p.add_argument("--csv", help="also write the table as CSV")
    p.set_defaults(func=_cmd_gas_report)

    p = sub.add_parser("ledger", help="chain integrity tools")
    lsub = p.add_subparsers(dest="ledger_command", required=True)
    pv = lsub.add_parser("verify", help="recompute hashes and links")
    pv.add_argument("file")
    pv.set_defaults(func=_cmd_ledger_verify)
    pr = lsub.add_parser("replay", help="re-execute and summarize final state")
    pr.add_argument("file")
    pr.set_defaults(func=_cmd_ledger_replay)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    except _HANDLED_ERRORS as exc:
        _emit_error(type(exc).__name__, str(exc))
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
