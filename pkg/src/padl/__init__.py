"""Private, auditable, multi-asset ledger.

Cells hold Pedersen commitments ``v*G + r*H`` with audit tokens ``r*pk``;
spenders prove consistency, owners endorse with proofs of asset, and the
ledger verifies the lot before appending.
"""
from .group import CommitKey, KeyPair, Point, Rng, keygen, setup
from .ledger import (
    Asset, ConfigError, Ledger, LedgerConfig, LedgerError, Participant, StaleTransaction,
    VerificationFailed, genesis_draft, init_ledger,
)
from .pact import (
    ApprovalRefused, Cell, Draft, Endorsement, EndorsementRefused, EndorsementTimeout,
    ExtractionError, LocalBroadcast, PactError, Refusal, Transaction, Wallet, build_transaction,
    consent_policy, default_policy, exclude_and_rebalance, extract, finalize, mint,
    verify_transaction,
)
from .audit import (
    AuditError, BalanceAudit, LiquidityAudit, RateAudit, full_audit_extract, prove_balance,
    prove_liquidity, prove_rate, verify_audit, verify_balance, verify_liquidity, verify_rate,
)

__version__ = "0.1.0"

__all__ = [
    "ApprovalRefused", "Asset", "AuditError", "BalanceAudit", "Cell", "CommitKey", "ConfigError",
    "Draft", "Endorsement", "EndorsementRefused", "EndorsementTimeout", "ExtractionError",
    "KeyPair", "Ledger", "LedgerConfig", "LedgerError", "LiquidityAudit", "LocalBroadcast",
    "PactError", "Participant", "Point", "RateAudit", "Refusal", "Rng", "StaleTransaction",
    "Transaction", "VerificationFailed", "Wallet", "build_transaction", "consent_policy",
    "default_policy", "exclude_and_rebalance", "extract", "finalize", "full_audit_extract",
    "genesis_draft", "init_ledger", "keygen", "mint", "prove_balance", "prove_liquidity",
    "prove_rate", "setup", "verify_audit", "verify_balance", "verify_liquidity", "verify_rate",
    "verify_transaction",
]
