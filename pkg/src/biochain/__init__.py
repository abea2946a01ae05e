"""Decentralized biometric authentication at desk scale.

Fuzzy commitments over binary linear block codes, a deterministic
hash-chained ledger with gas metering, the subject/node registry
contract it executes, and protocol flows plus a scenario harness that
reproduce the scheme's verifiable properties (exhaustive correctness,
FRR/FAR oracles, access-control soundness, tamper evidence).
"""

from .bits import as_bits, from_bitstring, to_bitstring
from .ecc import (DecodingFailure, LengthMismatch, LinearCode, build_code,
                  code_from_generator, code_from_json_obj, code_to_json_obj,
                  decode, encode, hamming_code, repetition_code)
from .fcs import (Commitment, commit, commit_with_witness, generate_witness,
                  open_commitment, open_outcome, witness_digest)
from .synthbio import (BiometricTemplate, ErrorRates, NoiseModel, acquire,
                       analytic_error_rates, features_extractor, generate_template)
from .contract import ContractError, ContractState, Event, NodeRecord, SubjectRecord
from .ledger import (Block, GasReceipt, GasTable, Ledger, Transaction,
                     default_gas_table, gas_cost, verify_blocks, verify_file)
from .protocol import (AuthOutcome, authenticate_user, election_flow, enroll_user,
                       node_address, register_node_flow, revoke_user)
from .scenario import (Scenario, ScenarioInvalid, demo_scenario, far_frr_sweep,
                       gas_report, run_scenario)

__version__ = "0.1.0"
