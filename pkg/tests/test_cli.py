import csv
import io
import json

import numpy as np
import pytest

from qksat import tester as tester_mod
from qksat.cli import main
from qksat.instance import dumps_instance, instance_from_dict, load_instance
from qksat.solver import INDETERMINATE, SolverVerdict
from qksat.tester import TestReport
from qksat.walkthrough import WalkthroughTrace


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def inst_path(tmp_path, capsys):
    p = tmp_path / "inst.json"
    assert run(capsys, "generate", "--n", 10, "--k", 3, "--mode", "product", "--seed", 7, "--out", p)[0] == 0
    return p


def test_generate_writes_certified_instance(inst_path):
    inst, cert = load_instance(inst_path)
    assert (inst.n, inst.k) == (10, 3)
    assert cert.witness_residual(inst) < 1e-9


def test_instance_file_round_trips(inst_path):
    text = inst_path.read_text()
    inst, cert = instance_from_dict(json.loads(text))
    assert json.loads(dumps_instance(inst, cert)) == json.loads(text)


@pytest.mark.parametrize("mode", ["entangled", "far", "random"])
def test_generate_other_modes(capsys, mode):
    code, out, _ = run(capsys, "generate", "--n", 6, "--k", 2, "--mode", mode, "--seed", 1)
    assert code == 0
    inst, cert = instance_from_dict(json.loads(out))
    assert inst.n == 6


def test_same_seed_same_bytes(capsys):
    a = run(capsys, "generate", "--n", 8, "--k", 2, "--seed", 3)[1]
    b = run(capsys, "generate", "--n", 8, "--k", 2, "--seed", 3)[1]
    c = run(capsys, "generate", "--n", 8, "--k", 2, "--seed", 4)[1]
    assert a == b != c


def test_env_seed_fallback(capsys, monkeypatch):
    explicit = run(capsys, "generate", "--n", 8, "--k", 2, "--seed", 11)[1]
    monkeypatch.setenv("QSAT_SEED", "11")
    assert run(capsys, "generate", "--n", 8, "--k", 2)[1] == explicit
    monkeypatch.setenv("QSAT_SEED", "eleven")
    assert run(capsys, "generate", "--n", 8, "--k", 2)[0] == 2


def test_restrict_then_check_product(capsys, inst_path, tmp_path):
    local = tmp_path / "local.json"
    assert run(capsys, "restrict", "--in", inst_path, "--subset", "1,4,7", "--out", local)[0] == 0
    inst, cert = load_instance(local)
    assert inst.n == 3 and cert.witness_residual(inst) < 1e-9
    code, out, _ = run(capsys, "check-product", "--in", local, "--seed", 0)
    assert code == 0
    assert json.loads(out)["verdict"] == "SAT"


def test_test_command_report(capsys, inst_path, tmp_path):
    rep_path = tmp_path / "rep.json"
    code, _, err = run(capsys, "test", "--in", inst_path, "--m", 5, "--seed", 2, "--jobs", 1, "--out", rep_path)
    assert code == 0
    d = json.loads(rep_path.read_text())
    assert d["majority"] == "SATISFIABLE" and len(d["samples"]) == 5
    assert all(s["ms"] is None for s in d["samples"])
    assert TestReport.from_dict(d).to_dict() == d
    assert "SATISFIABLE" in err


def test_test_command_default_m_from_failure_probability(capsys, inst_path):
    code, out, _ = run(capsys, "test", "--in", inst_path, "--seed", 2, "--jobs", 1)
    assert code == 0
    assert len(json.loads(out)["samples"]) == 37


def test_test_command_deterministic(capsys, inst_path):
    a = run(capsys, "test", "--in", inst_path, "--m", 4, "--seed", 5, "--jobs", 1)[1]
    b = run(capsys, "test", "--in", inst_path, "--m", 4, "--seed", 5, "--jobs", 2)[1]
    assert a == b


def test_inconclusive_exit_code(capsys, inst_path, monkeypatch):
    monkeypatch.setattr(tester_mod, "check_product", lambda *a, **k: SolverVerdict(INDETERMINATE, "numeric"))
    code, out, _ = run(capsys, "test", "--in", inst_path, "--m", 3, "--jobs", 1)
    assert code == 3
    assert json.loads(out)["majority"] == "TESTER-INCONCLUSIVE"


def test_usage_errors(capsys, tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["generate", "--n", "5"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["generate", "--n", "5", "--k", "2", "--bogus"])
    assert exc.value.code == 2
    assert run(capsys, "test", "--in", tmp_path / "missing.json")[0] == 2
    assert run(capsys, "bounds")[0] == 2
    assert run(capsys, "bounds", "--psi", "--p", 0.5)[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "check-product", "--in", bad)[0] == 2


def test_bounds_psi(capsys):
    code, out, _ = run(capsys, "bounds", "--psi", "--p", 0.5, "--c", 3)
    assert code == 0
    psi = json.loads(out)["psi"]
    assert psi["terms"][1] == pytest.approx(390170.1694962831889, rel=1e-12)
    assert psi["psi"] == max(psi["terms"])


def test_bounds_other_evaluators(capsys):
    code, out, _ = run(capsys, "bounds", "--gamma", "--k", 3, "--eps", "1/2", "--samples", "--a-k4")
    d = json.loads(out)
    assert code == 0
    assert d["gamma"]["value"] == "160"
    assert d["samples"]["m"] == 37
    assert d["a_for_k4"] == pytest.approx(2.107, abs=1e-3)


def test_verify_lemmas_appendix_csv(capsys):
    code, out, err = run(capsys, "verify-lemmas", "--suite", "appendix", "--max-n", 10, "--seed", 1, "--scale", 0.05)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows
    # the binomial-scaling grid carries the known failures at small theta
    others = [r for r in rows if r["check"] != "binomial-scaling"]
    assert all(r["failures"] == "0" for r in others)
    assert code == (1 if any(r["failures"] != "0" for r in rows) else 0)
    assert all(r["seconds"] == "" for r in rows)


def test_verify_lemmas_bounds_suite_passes(capsys):
    code, out, err = run(capsys, "verify-lemmas", "--suite", "bounds")
    assert code == 0
    assert "checks passed" in err


def test_chain_command(capsys, tmp_path):
    p = tmp_path / "far.json"
    run(capsys, "generate", "--n", 6, "--k", 2, "--mode", "far", "--out", p)
    code, out, _ = run(capsys, "chain", "--in", p, "--seed", 1)
    d = json.loads(out)
    assert code == 0
    assert d["bad_census"] > d["census_limit"]
    assert d["decrease_violations"] == []


def test_chain_needs_eps_without_certificate(capsys, tmp_path):
    p = tmp_path / "rand.json"
    run(capsys, "generate", "--n", 5, "--k", 2, "--mode", "random", "--out", p)
    assert run(capsys, "chain", "--in", p)[0] == 2
    assert run(capsys, "chain", "--in", p, "--eps", "1/4")[0] == 0


def test_walkthrough_command_round_trip(capsys, tmp_path):
    code, out, _ = run(capsys, "walkthrough", "--kind", "ghz", "--n", 7, "--c", 3, "--seed", 0)
    assert code == 0
    d = json.loads(out)
    assert WalkthroughTrace.from_dict(d).to_dict() == d
    assert d["status"] == "complete"


def test_walkthrough_from_state_file(capsys, tmp_path):
    psi = np.zeros(2**7, dtype=complex)
    psi[0] = psi[-1] = 1 / np.sqrt(2)
    p = tmp_path / "state.json"
    p.write_text(json.dumps([[z.real, z.imag] for z in psi]))
    a = run(capsys, "walkthrough", "--state", p, "--seed", 0)[1]
    b = run(capsys, "walkthrough", "--kind", "ghz", "--seed", 0)[1]
    assert a == b


def test_roc_command(capsys):
    code, out, _ = run(capsys, "roc", "--families", "all-identity", "--cs", 3, "--ms", 3, "--trials", 2, "--n", 6, "--jobs", 1)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 1
    assert rows[0]["false_accept"] == "0.0"
    code, out, _ = run(capsys, "roc", "--trials", 0)
    assert out.strip() == "family,c,m,trials,false_accept,false_reject,indeterminate_rate"
