import json

import pytest

from padl import Ledger
from padl.cli import main

WORLD = {
    "participants": ["alice", "bob", "carol"],
    "assets": [{"id": "USD", "issuer": "alice"}, {"id": "BND", "issuer": "bob"}],
    "genesis": {"USD": {"alice": 500}, "BND": {"bob": 40}},
    "config": {"range_bits": 16},
}


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, out


def run_json(capsys, *argv):
    code, out = run(capsys, *argv)
    return code, json.loads(out)


@pytest.fixture
def ledger(tmp_path, capsys):
    world = tmp_path / "world.json"
    world.write_text(json.dumps(WORLD))
    path = tmp_path / "l.bin"
    code, out = run_json(capsys, "init", world, "--ledger", path, "--seed", "cli")
    assert code == 0 and out["height"] == 1
    return path


def test_init_writes_log_and_keys(ledger):
    assert Ledger.load(ledger).height == 1
    keys = sorted(p.name for p in (ledger.parent / "l.bin.keys").iterdir())
    assert keys == ["alice.json", "bob.json", "carol.json"]


def test_init_refuses_to_overwrite(ledger, tmp_path, capsys):
    code, _ = run(capsys, "init", tmp_path / "world.json", "--ledger", ledger)
    assert code == 2


def test_init_is_deterministic_under_seed(tmp_path, capsys):
    world = tmp_path / "w.json"
    world.write_text(json.dumps(WORLD))
    hashes = []
    for name in ("a.bin", "b.bin"):
        _, out = run_json(capsys, "init", world, "--ledger", tmp_path / name, "--seed", "same")
        hashes.append(out["state_hash"])
    assert hashes[0] == hashes[1]
    assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()


def test_spend_verify_and_balance_audit(ledger, tmp_path, capsys):
    code, out = run_json(capsys, "spend", "--ledger", ledger, "--from", "alice",
                         "--amount", "USD:alice:-120", "--amount", "USD:carol:120", "--seed", "s")
    assert code == 0 and out["height"] == 2
    code, out = run_json(capsys, "verify", "--ledger", ledger)
    assert code == 0 and out["ok"]
    audit = tmp_path / "a.json"
    code, _ = run(capsys, "audit", "balance", "--ledger", ledger, "--participant", "carol",
                  "--asset", "USD", "--claimed", 120, "--out", audit)
    assert code == 0
    code, out = run_json(capsys, "audit", "check", "--ledger", ledger, "--audit", audit)
    assert code == 0 and out["accepted"]
    obj = json.loads(audit.read_text())
    obj["parameters"]["claimed"] = 121
    audit.write_text(json.dumps(obj))
    code, out = run_json(capsys, "audit", "check", "--ledger", ledger, "--audit", audit)
    assert code == 1 and not out["accepted"]


def test_swap_with_consent(ledger, capsys):
    code, _ = run(capsys, "spend", "--ledger", ledger, "--from", "alice",
                  "--amount", "USD:alice:-100", "--amount", "USD:bob:100",
                  "--amount", "BND:alice:10", "--amount", "BND:bob:-10",
                  "--consent", "bob:BND:-10")
    assert code == 0


def test_spend_refused_without_consent(ledger, capsys):
    code, _ = run(capsys, "spend", "--ledger", ledger, "--from", "alice",
                  "--amount", "BND:alice:10", "--amount", "BND:bob:-10")
    assert code == 2
    assert Ledger.load(ledger).height == 1


def test_draft_endorse_finalize(ledger, tmp_path, capsys):
    draft = tmp_path / "d.json"
    code, _ = run(capsys, "spend", "--ledger", ledger, "--from", "alice",
                  "--amount", "USD:alice:-5", "--amount", "USD:bob:5", "--draft-out", draft)
    assert code == 0
    ends = []
    for name in ("alice", "bob", "carol"):
        f = tmp_path / f"e-{name}.json"
        code, _ = run(capsys, "endorse", "--ledger", ledger, "--participant", name, "--tx", draft,
                      "--out", f)
        assert code == 0
        ends.append(f)
    code, out = run_json(capsys, "spend", "--ledger", ledger, "--draft", draft, "--endorsements", *ends)
    assert code == 0 and out["height"] == 2


def test_endorse_refusal_exit_code(ledger, tmp_path, capsys):
    draft = tmp_path / "d.json"
    run(capsys, "spend", "--ledger", ledger, "--from", "alice",
        "--amount", "USD:alice:5", "--amount", "USD:carol:-5", "--draft-out", draft)
    code, out = run_json(capsys, "endorse", "--ledger", ledger, "--participant", "carol", "--tx", draft)
    assert code == 1 and out["refusals"]


def test_verify_flags_tampered_log(ledger, capsys):
    raw = bytearray(ledger.read_bytes())
    raw[-40] ^= 0x01
    ledger.write_bytes(bytes(raw))
    code, out = run_json(capsys, "verify", "--ledger", ledger)
    assert code == 1 and not out["ok"]


def test_rate_and_liquidity_audits(ledger, capsys, tmp_path):
    for amt in (10, 20):
        run(capsys, "spend", "--ledger", ledger, "--from", "alice",
            "--amount", f"USD:alice:-{amt}", "--amount", f"USD:carol:{amt}")
    out = tmp_path / "r.json"
    code, _ = run(capsys, "audit", "rate", "--ledger", ledger, "--participant", "carol", "--asset", "USD",
                  "--txs1", "1", "--txs2", "2", "--D", 1, "--N", 2, "--out", out)
    assert code == 0
    code, res = run_json(capsys, "audit", "check", "--ledger", ledger, "--audit", out)
    assert res["accepted"]
    code, _ = run(capsys, "audit", "liquidity", "--ledger", ledger, "--participant", "alice",
                  "--asset", "USD", "--D", 1, "--N", 1, "--out", out)
    assert code == 0
    _, res = run_json(capsys, "audit", "check", "--ledger", ledger, "--audit", out)
    assert res["accepted"]


def test_keygen(capsys):
    code, out = run_json(capsys, "keygen", "--seed", "k")
    assert code == 0 and len(out["pk"]) == 64


def test_scenario_command(tmp_path, capsys):
    code, out = run_json(capsys, "scenario", "settlement", "--ledger", tmp_path / "s.bin")
    assert code == 0 and out["ok"]
    assert Ledger.load(tmp_path / "s.bin").state_hash.hex() == out["state_hash"]


def test_security_command(tmp_path, capsys):
    code, _ = run(capsys, "security", "--config", _cfg(tmp_path), "--out", tmp_path / "sec.json")
    assert code == 0
    rep = json.loads((tmp_path / "sec.json").read_text())
    assert rep["integrity"]["accepted"] == 0


def _cfg(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"range_bits": 16}))
    return p


def test_bench_command(tmp_path, capsys):
    code, out = run(capsys, "bench", "--participants", "2", "--assets", "1", "--reps", 1,
                    "--config", _cfg(tmp_path), "--csv", tmp_path / "b.csv", "--no-sizes")
    assert code == 0
    assert (tmp_path / "b.csv").read_text().startswith("participants")


def test_missing_ledger_is_an_error(capsys):
    assert main(["spend", "--from", "x"]) == 2
