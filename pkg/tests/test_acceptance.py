"""Exit criteria at full scale. Each test prints one PASS/FAIL line.

Run with ``pytest -m acceptance tests/test_acceptance.py -s``.
"""

import json
import time
from fractions import Fraction

import pytest

from qksat import suites
from qksat.bounds import BigCount, c_of_k_eps, chernoff_samples, gamma, phi_step, psi_terms
from qksat.cli import main

pytestmark = pytest.mark.acceptance

SEED = 1


def _verdict(capsys, number: int, title: str, ok: bool, detail: str) -> None:
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} criterion {number:>2} {title}: {detail}")


def _failing(rows):
    return [r for r in rows if not r.ok]


def _describe(rows) -> str:
    trials = sum(r.trials for r in rows)
    bad = _failing(rows)
    text = f"{len(rows) - len(bad)}/{len(rows)} checks clean over {trials} trials"
    if bad:
        text += "; failing: " + "; ".join(f"{r.check}[{r.params}] {r.failures}/{r.trials} {r.detail}" for r in bad)
    return text


def _run_suite_criterion(capsys, number, title, name, limit_s=None, **kw):
    t0 = time.perf_counter()
    rows = suites.run_suite(name, SEED, **kw)
    secs = time.perf_counter() - t0
    ok = not _failing(rows) and (limit_s is None or secs < limit_s)
    detail = _describe(rows) + f" in {secs:.0f}s" + (f" (limit {limit_s}s)" if limit_s else "")
    _verdict(capsys, number, title, ok, detail)
    return rows, ok


def test_criterion_01_single_bad_partner(capsys):
    rows, ok = _run_suite_criterion(capsys, 1, "c=2 partner suite", "c2", limit_s=300)
    assert sum(r.trials for r in rows) >= 500
    assert ok


def test_criterion_02_dichotomy(capsys):
    rows, ok = _run_suite_criterion(capsys, 2, "dichotomy suite", "dichotomy", max_n=8)
    assert sum(r.trials for r in rows) >= 200
    assert ok


def test_criterion_03_entangled_complement(capsys):
    rows, ok = _run_suite_criterion(capsys, 3, "entangled-subspace complement", "ces")
    assert {r.params for r in rows} and sum(r.trials for r in rows) >= 800
    assert ok


def test_criterion_04_product_count(capsys):
    rows, ok = _run_suite_criterion(capsys, 4, "product-point count", "prodcount")
    checks = {r.check for r in rows}
    assert "prodcount-tight" in checks
    assert ok


def test_criterion_05_appendix(capsys):
    rows, ok = _run_suite_criterion(capsys, 5, "hypergraph lemmas", "appendix", limit_s=600, max_n=10)
    assert ok


def _psi_terms_20_digits():
    sp = pytest.importorskip("sympy")
    c, P = 3, sp.Rational(1, 2)
    t1 = (2**c - 1) * (c - 1) * sp.log(4) / sp.log(1 / P) + (2**c - 2)
    inner = 180 * (c - 2) * sp.Integer(2) ** (3 * (c - 2)) / (sp.sqrt(2 * sp.pi) * (3 - sp.Rational(1, 2 ** (c - 2))))
    t2 = sp.E**2 * inner**2
    t3 = sp.Integer(6 * 2 ** (c + 1) * (c - 1))
    return [float(sp.N(t, 20)) for t in (t1, t2, t3)]


def test_criterion_06_bound_values(capsys):
    terms = psi_terms(0.5, 3).terms
    ref = _psi_terms_20_digits()
    psi_ok = all(abs(a - b) <= 1e-12 * abs(b) for a, b in zip(terms, ref)) and max(terms) == terms[1]
    psi_ok = psi_ok and all(abs(a - b) <= 1e-12 * abs(b) for a, b in zip(terms, suites.PSI_REFERENCE))
    g = gamma(3, Fraction(1, 2))
    step = phi_step(BigCount.of(1)).value
    m = chernoff_samples(0.75, 0.01)
    ok = psi_ok and g == 160 and step == 14 and m == 37
    _verdict(capsys, 6, "bound evaluators", ok, f"psi terms={terms} gamma={g} phi_step={step} m={m}")
    assert ok
    assert c_of_k_eps(None, Fraction(1, 2), 5, gamma_override=2).value.value == 151


def test_criterion_07_backend_agreement(capsys):
    rows, ok = _run_suite_criterion(capsys, 7, "solver backend agreement", "solver")
    assert ok


def test_criterion_08_end_to_end_tester(capsys):
    rows, ok = _run_suite_criterion(capsys, 8, "end-to-end tester", "tester", limit_s=900)
    assert ok


def test_criterion_09_assignment_calculus(capsys):
    rows, ok = _run_suite_criterion(capsys, 9, "assignment census and chains", "assignment", max_n=12)
    assert ok


def _cli_bytes(argv, path):
    code = main([str(a) for a in argv] + ["--out", str(path)])
    return code, path.read_bytes()


def test_criterion_10_cli_determinism(tmp_path, capsys):
    inst = tmp_path / "inst.json"
    far = tmp_path / "far.json"
    main(["generate", "--n", "12", "--k", "2", "--seed", "5", "--out", str(inst)])
    main(["generate", "--n", "8", "--k", "2", "--mode", "far", "--family", "dense-local-block", "--seed", "5", "--out", str(far)])
    commands = [
        ["generate", "--n", 10, "--k", 3, "--mode", "product", "--seed", 7],
        ["generate", "--n", 8, "--k", 2, "--mode", "entangled", "--seed", 7],
        ["generate", "--n", 8, "--k", 2, "--mode", "random", "--seed", 7],
        ["restrict", "--in", inst, "--subset", "0,3,5,9", "--seed", 7],
        ["check-product", "--in", far, "--seed", 7],
        ["test", "--in", inst, "--m", 8, "--seed", 7, "--jobs", 1],
        ["test", "--in", inst, "--m", 8, "--seed", 7, "--jobs", 2],
        ["verify-lemmas", "--suite", "ces", "--scale", 0.05, "--seed", 7],
        ["bounds", "--psi", "--p", 0.5, "--c", 3],
        ["chain", "--in", far, "--seed", 7],
        ["walkthrough", "--kind", "haar", "--n", 7, "--c", 3, "--seed", 7],
        ["roc", "--families", "product,all-identity", "--cs", 3, "--ms", 3, "--trials", 2, "--n", 6, "--seed", 7, "--jobs", 1],
    ]
    mismatched = []
    for i, argv in enumerate(commands):
        c1, a = _cli_bytes(argv, tmp_path / f"a{i}")
        c2, b = _cli_bytes(argv, tmp_path / f"b{i}")
        if c1 != 0 or c1 != c2 or a != b:
            mismatched.append(argv[0])
    # parallel and serial tester runs write the same report
    same_jobs = (tmp_path / "a5").read_bytes() == (tmp_path / "a6").read_bytes()
    report = json.loads((tmp_path / "a5").read_text())
    ok = not mismatched and same_jobs and all(s["ms"] is None for s in report["samples"])
    detail = f"{len(commands) - len(mismatched)}/{len(commands)} invocations byte-identical"
    if mismatched:
        detail += "; differing: " + ", ".join(str(m) for m in mismatched)
    _verdict(capsys, 10, "CLI determinism", ok, detail)
    assert ok
