"""Randomised product-state tester: sample subsets, solve each restriction, majority-vote."""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .bounds import chernoff_samples, majority_confidence
from .instance import QSatInstance, gen_far, gen_satisfiable, restrict
from .solver import INDETERMINATE, SAT, UNSAT, check_product
from .subspace import RESTARTS

SATISFIABLE = "SATISFIABLE"
EPS_FAR = "EPS-FAR"
INCONCLUSIVE = "TESTER-INCONCLUSIVE"

DEFAULT_P_SINGLE = 0.75


def default_c(k: int) -> int:
    return max(k + 1, 4)


@dataclass(frozen=True)
class TesterConfig:
    """Sampling and solver settings.

    Exactly one of ``m`` and ``delta_fail`` should be given; ``m`` is then
    the Hoeffding sample count for a single-sample success rate
    ``p_single``. ``c`` defaults to ``max(k + 1, 4)`` once ``k`` is known.
    """

    c: int | None = None
    m: int | None = None
    delta_fail: float | None = None
    p_single: float = DEFAULT_P_SINGLE
    backend: str = "numeric"
    seed: int = 0
    eps: float | None = None
    restarts: int = RESTARTS
    timings: bool = False

    __test__ = False

    def resolve(self, k: int) -> "TesterConfig":
        c = default_c(k) if self.c is None else self.c
        if c < k:
            raise ValueError(f"c={c} is smaller than k={k}")
        m = self.m
        if m is None:
            if self.delta_fail is None:
                raise ValueError("either m or delta_fail is required")
            m = max(1, chernoff_samples(self.p_single, self.delta_fail))
        if m < 1:
            raise ValueError("m must be at least 1")
        return TesterConfig(c, m, self.delta_fail, self.p_single, self.backend, self.seed, self.eps, self.restarts, self.timings)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Sample:
    subset: list[int]
    verdict: str
    residual: float | None
    ms: float | None = None

    def to_dict(self) -> dict:
        return {"subset": self.subset, "verdict": self.verdict, "residual": self.residual, "ms": self.ms}


@dataclass
class TestReport:
    config: dict
    samples: list[Sample] = field(default_factory=list)
    majority: str = INCONCLUSIVE
    confidence: float = 0.0
    indeterminate_count: int = 0
    note: str = ""

    __test__ = False  # keep pytest from collecting this class

    @property
    def determinate_count(self) -> int:
        return len(self.samples) - self.indeterminate_count

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "samples": [s.to_dict() for s in self.samples],
            "majority": self.majority,
            "confidence": self.confidence,
            "indeterminate_count": self.indeterminate_count,
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TestReport":
        return cls(
            d["config"],
            [Sample(list(s["subset"]), s["verdict"], s["residual"], s.get("ms")) for s in d["samples"]],
            d["majority"],
            d["confidence"],
            d.get("indeterminate_count", 0),
            d.get("note", ""),
        )


def sample_seeds(seed: int, m: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(m)


def draw_subset(n: int, c: int, ss: np.random.SeedSequence) -> list[int]:
    """Uniform ``c``-subset of ``range(n)``; independent across draws."""
    rng = np.random.default_rng(ss)
    return sorted(int(v) for v in rng.choice(n, size=c, replace=False))


def _solver_seed(ss: np.random.SeedSequence) -> int:
    return int(ss.generate_state(1)[0])


def _run_sample(args) -> Sample:
    inst, cfg, ss = args
    t0 = time.perf_counter()
    subset = draw_subset(inst.n, cfg.c, ss)
    local = restrict(inst, subset)
    v = check_product(local, cfg.backend, restarts=cfg.restarts, seed=_solver_seed(ss.spawn(1)[0]))
    ms = (time.perf_counter() - t0) * 1e3 if cfg.timings else None
    return Sample(subset, v.verdict, v.residual, ms)


def majority_vote(samples: list[Sample]) -> tuple[str, float, int]:
    """Strict majority of SAT among determinate verdicts; ties go to EPS-FAR."""
    sat = sum(s.verdict == SAT for s in samples)
    unsat = sum(s.verdict == UNSAT for s in samples)
    indet = len(samples) - sat - unsat
    det = sat + unsat
    if det == 0:
        return INCONCLUSIVE, 0.0, indet
    verdict = SATISFIABLE if 2 * sat > det else EPS_FAR
    frac = max(sat, unsat) / det
    return verdict, majority_confidence(det, frac), indet


def run_tester(inst: QSatInstance, cfg: TesterConfig, *, jobs: int = 1) -> TestReport:
    cfg = cfg.resolve(inst.k)
    if inst.n < cfg.c:
        raise ValueError(f"n={inst.n} is smaller than c={cfg.c}")
    seeds = sample_seeds(cfg.seed, cfg.m)
    work = [(inst, cfg, ss) for ss in seeds]
    if jobs > 1 and cfg.m > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            samples = list(ex.map(_run_sample, work))
    else:
        samples = [_run_sample(w) for w in work]
    verdict, conf, indet = majority_vote(samples)
    note = f"subset size c={cfg.c} chosen by the user; the theoretical constant c(k, eps) is astronomically larger"
    return TestReport(cfg.to_dict(), samples, verdict, conf, indet, note)


def make_instance(family: str, n: int, k: int, seed):
    """Instance plus ground truth (True when satisfiable) for the sweep families."""
    if family in ("product", "entangled"):
        inst, cert = gen_satisfiable(n, k, seed, mode=family)
        return inst, True
    inst, cert = gen_far(n, k, seed, family)
    return inst, False


ROC_HEADER = ["family", "c", "m", "trials", "false_accept", "false_reject", "indeterminate_rate"]


def roc_sweep(
    families,
    cs,
    ms,
    trials: int,
    seed: int = 0,
    *,
    n: int = 12,
    k: int = 2,
    backend: str = "numeric",
    jobs: int = 1,
) -> list[dict]:
    """Empirical false-accept and false-reject rates per ``(family, c, m)`` cell."""
    rows = []
    if trials <= 0:
        return rows
    root = np.random.SeedSequence(seed)
    cells = [(f, c, m) for f in families for c in cs for m in ms]
    for (fam, c, m), cell_ss in zip(cells, root.spawn(len(cells))):
        fa = fr = 0
        indet = total = 0
        for t_ss in cell_ss.spawn(trials):
            inst_seed, test_seed = (int(x) for x in t_ss.generate_state(2))
            inst, truth = make_instance(fam, n, k, inst_seed)
            rep = run_tester(inst, TesterConfig(c=c, m=m, backend=backend, seed=test_seed), jobs=jobs)
            fa += (not truth) and rep.majority == SATISFIABLE
            fr += truth and rep.majority == EPS_FAR
            indet += rep.indeterminate_count
            total += len(rep.samples)
        rows.append(
            {
                "family": fam,
                "c": c,
                "m": m,
                "trials": trials,
                "false_accept": fa / trials,
                "false_reject": fr / trials,
                "indeterminate_rate": indet / total if total else 0.0,
            }
        )
    return rows


def rows_to_csv(rows: list[dict], header: list[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=header, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({h: r.get(h) for h in header})
    return buf.getvalue()


class ProductStateTester(BaseEstimator, ClassifierMixin):
    """Estimator-style wrapper: ``predict`` maps instances to SATISFIABLE / EPS-FAR.

    There is nothing to learn, so ``fit`` only validates its input.
    """

    def __init__(self, c=None, m=37, backend="numeric", seed=0, restarts=RESTARTS):
        self.c = c
        self.m = m
        self.backend = backend
        self.seed = seed
        self.restarts = restarts

    def _config(self) -> TesterConfig:
        return TesterConfig(c=self.c, m=self.m, backend=self.backend, seed=self.seed, restarts=self.restarts)

    def fit(self, X, y=None):
        for inst in X:
            if not isinstance(inst, QSatInstance):
                raise TypeError("X must contain QSatInstance objects")
        self.classes_ = np.array([EPS_FAR, SATISFIABLE])
        return self

    def report(self, X) -> list[TestReport]:
        return [run_tester(inst, self._config()) for inst in X]

    def predict(self, X) -> np.ndarray:
        return np.array([r.majority for r in self.report(X)])

    def predict_proba(self, X) -> np.ndarray:
        """Fraction of determinate samples voting each class, ordered as ``classes_``."""
        out = []
        for r in self.report(X):
            sat = sum(s.verdict == SAT for s in r.samples)
            det = r.determinate_count
            p = sat / det if det else 0.5
            out.append([1 - p, p])
        return np.array(out)
