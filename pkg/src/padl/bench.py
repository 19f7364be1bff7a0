"""Timing and size benchmarks.

The workload at grid point ``(P, K)`` is four transactions on a fresh ledger
with ``P`` participants and ``K`` assets; every transaction touches every cell.
"""
from __future__ import annotations

import csv
import io
import statistics
import time
from dataclasses import dataclass, field

from .group import Rng, setup
from .ledger import Asset, LedgerConfig, Participant, init_ledger
from .pact import LocalBroadcast, Wallet, finalize

# published reference points; reported next to measurements, never gated on
REFERENCE = {
    "seconds_per_tx_2x2": 0.34,
    "cell_bytes": 1176,
    "exchange_tx_bytes": 4704,
    "settlement_tx_bytes": 3726,
    "bond_tx_bytes": 16464,
    "balance_audit_bytes": 98,
    "rate_audit_bytes": 98,
    "liquidity_audit_bytes": 688,
}
WORKLOAD_TXS = 4
CELL_SIZE_FACTOR = 2


@dataclass
class BenchPoint:
    participants: int
    assets: int
    prove: list = field(default_factory=list)
    endorse: list = field(default_factory=list)
    verify: list = field(default_factory=list)

    @property
    def totals(self) -> list:
        return [a + b + c for a, b, c in zip(self.prove, self.endorse, self.verify)]

    @property
    def median(self) -> float:
        return statistics.median(self.totals)

    @property
    def stdev(self) -> float:
        t = self.totals
        return statistics.stdev(t) if len(t) > 1 else 0.0

    def row(self) -> dict:
        return {
            "participants": self.participants, "assets": self.assets, "reps": len(self.prove),
            "prove_s": round(statistics.median(self.prove), 4),
            "endorse_s": round(statistics.median(self.endorse), 4),
            "verify_s": round(statistics.median(self.verify), 4),
            "total_s": round(self.median, 4), "stdev_s": round(self.stdev, 4),
            "per_tx_s": round(self.median / WORKLOAD_TXS, 4),
        }


def workload(n_participants: int, n_assets: int, *, seed=0, config: LedgerConfig | None = None):
    """Seconds spent ``(prove, endorse, verify)`` over the four-transaction workload."""
    cfg = config or LedgerConfig()
    rng = Rng(f"bench/{seed}/{n_participants}/{n_assets}")
    ck = setup([rng.nonzero_scalar()])
    wallets = {i: Wallet(ck, i, rng=rng.child(f"w{i}"), max_magnitude=cfg.max_magnitude)
               for i in range(n_participants)}
    parts = [Participant(f"p{i}", w.pk) for i, w in wallets.items()]
    assets = [Asset(f"A{k}", k % n_participants) for k in range(n_assets)]
    initial = {a.id: {p: 1000 for p in wallets} for a in assets}
    ledger = init_ledger(ck, parts, assets, initial, wallets, config=cfg, rng=rng.child("genesis"))
    bc = LocalBroadcast(wallets, ledger)
    prove = endorse = verify = 0.0
    for j in range(WORKLOAD_TXS):
        s = j % n_participants
        values = {a.id: {p: (1 - n_participants if p == s else 1) for p in wallets} for a in assets}
        t0 = time.perf_counter()
        draft = wallets[s].draft(ledger, values)
        t1 = time.perf_counter()
        tx = finalize(draft.tx, bc.collect(draft.tx, draft.tx.participants))
        t2 = time.perf_counter()
        ledger.append(tx)
        t3 = time.perf_counter()
        prove, endorse, verify = prove + t1 - t0, endorse + t2 - t1, verify + t3 - t2
    return prove, endorse, verify


@dataclass
class BenchReport:
    points: list
    sizes: dict
    backend: str
    base: tuple

    def point(self, p: int, k: int) -> BenchPoint | None:
        return next((x for x in self.points if (x.participants, x.assets) == (p, k)), None)

    def scaling(self) -> list[dict]:
        """Ratio of each sweep point against the sweep's first point."""
        out = []
        p0, k0 = self.base
        for axis in ("participants", "assets"):
            sweep = sorted((x for x in self.points
                            if (x.assets == k0 if axis == "participants" else x.participants == p0)),
                           key=lambda x: getattr(x, axis))
            if not sweep:
                continue
            first = sweep[0]
            for x in sweep[1:]:
                k_ratio = getattr(x, axis) / getattr(first, axis)
                ratio = x.median / first.median
                out.append({"axis": axis, "from": getattr(first, axis), "to": getattr(x, axis),
                            "time_ratio": round(ratio, 3), "bound": round(1.25 * k_ratio, 3),
                            "ok": ratio <= 1.25 * k_ratio})
        return out

    @property
    def scaling_ok(self) -> bool:
        return all(s["ok"] for s in self.scaling())

    @property
    def size_flag(self) -> bool:
        """True when an optimized-backend cell exceeds twice the reference size."""
        return (self.backend == "bulletproof"
                and self.sizes.get("cell_bytes", 0) > CELL_SIZE_FACTOR * REFERENCE["cell_bytes"])

    def to_json(self) -> dict:
        ref_point = self.point(2, 2)
        return {
            "backend": self.backend,
            "workload_txs": WORKLOAD_TXS,
            "points": [x.row() for x in self.points],
            "scaling": self.scaling(),
            "sizes": self.sizes,
            "reference": REFERENCE,
            "measured_seconds_per_tx_2x2": round(ref_point.median / WORKLOAD_TXS, 4) if ref_point else None,
            "cell_size_flag": self.size_flag,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        rows = [x.row() for x in self.points]
        w = csv.DictWriter(buf, fieldnames=list(rows[0]) if rows else ["participants"])
        w.writeheader()
        w.writerows(rows)
        return buf.getvalue()

    def table(self) -> str:
        lines = ["  P   K   prove    endorse  verify   total    stdev   per-tx"]
        for x in self.points:
            r = x.row()
            lines.append(f"{r['participants']:3d} {r['assets']:3d}  {r['prove_s']:7.3f}  {r['endorse_s']:7.3f}"
                         f"  {r['verify_s']:7.3f}  {r['total_s']:7.3f}  {r['stdev_s']:6.3f}  {r['per_tx_s']:6.3f}")
        for s in self.scaling():
            lines.append(f"{s['axis']:>12} {s['from']}->{s['to']}: ratio {s['time_ratio']:.2f}"
                         f" (bound {s['bound']:.2f}) {'ok' if s['ok'] else 'EXCEEDED'}")
        for k, v in self.sizes.items():
            ref = REFERENCE.get(k)
            lines.append(f"{k:>24}: {v}" + (f"  (reference {ref})" if ref else ""))
        if self.size_flag:
            lines.append("cell size exceeds twice the reference")
        return "\n".join(lines)


def measure_sizes(config: LedgerConfig | None = None, *, include_bond: bool = True) -> dict:
    """Serialized sizes from the scripted ledgers."""
    from .scenarios import run_scenario, load_fixture

    cfg_over = config
    ex = run_scenario("exchange", config=_with(cfg_over, load_fixture("exchange")))
    sizes = {}
    tx = ex.ledger.rows[1]
    plain = [c for _, _, c in tx.cell_items()][0]
    from dataclasses import replace
    sizes["cell_bytes"] = len(replace(plain, issuer_tk=None, issuer_consistency=None).to_bytes())
    sizes["cell_with_issuer_token_bytes"] = len(plain.to_bytes())
    sizes["exchange_tx_bytes"] = len(tx.to_bytes())
    st = run_scenario("settlement", run_audits=False)
    sizes["settlement_tx_bytes"] = len(st.ledger.rows[1].to_bytes())
    if include_bond:
        bd = run_scenario("bond-market", config=_with(cfg_over, load_fixture("bond-market")))
        sizes["bond_tx_bytes"] = len(bd.ledger.rows[3].to_bytes())
        for a in bd.audits:
            key = f"{a.spec['type']}_audit_bytes"
            if a.accepted and key not in sizes:
                sizes[key] = a.size
    return sizes


def _with(config: LedgerConfig | None, fx: dict) -> LedgerConfig | None:
    if config is None:
        return None
    base = LedgerConfig.from_json(fx.get("config", {}))
    return LedgerConfig(range_bits=config.range_bits, backend=config.backend,
                        issuer_tokens=base.issuer_tokens, reduced=base.reduced,
                        approver=base.approver, max_magnitude=config.max_magnitude)


def run_bench(participants=(2, 4, 8, 16), assets=(1, 2, 4, 8), reps: int = 3, *,
              grid: str = "sweep", base: tuple[int, int] = (2, 1), seed=0,
              config: LedgerConfig | None = None, sizes: bool = True) -> BenchReport:
    """Time the workload over a grid.

    ``grid="sweep"`` varies one axis at a time around ``base`` (participants at
    ``base[1]`` assets, assets at ``base[0]`` participants) and always adds the
    2x2 point; ``grid="full"`` runs the whole cross product.
    """
    cfg = config or LedgerConfig()
    if max(participants) > 16 or max(assets) > 8:
        raise ValueError("grid is bounded to 16 participants and 8 assets")
    if grid == "full":
        pts = [(p, k) for p in participants for k in assets]
    elif grid == "sweep":
        pts = [(p, base[1]) for p in participants] + [(base[0], k) for k in assets] + [(2, 2)]
    else:
        raise ValueError(f"unknown grid {grid!r}")
    seen, order = set(), []
    for pt in pts:
        if pt not in seen:
            seen.add(pt)
            order.append(pt)
    points = [BenchPoint(p, k) for p, k in order]
    for r in range(reps):
        for x in points:
            a, b, c = workload(x.participants, x.assets, seed=(seed, r), config=cfg)
            x.prove.append(a)
            x.endorse.append(b)
            x.verify.append(c)
    report_base = (min(participants), min(assets)) if grid == "full" else base
    return BenchReport(points, measure_sizes(cfg) if sizes else {}, cfg.backend, report_base)
