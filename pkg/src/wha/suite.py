"""The verification pipeline behind ``wha suite``.

Each stage returns a dictionary of non-negative defects; a stage passes when
every defect is at most ``10 * atol``.  The pipeline stops at the first
failing stage.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

from .algebra import FiniteCStarAlgebra
from .coaction import Coaction, regular_coaction, source_coaction
from .corep import (
    conjugate_equation_defects,
    decompose,
    multiplicities,
    peter_weyl,
    regular_corep,
    registry,
    rigidity,
    unit_defects,
)
from .hayashi import FusionData, build_dual_algebra, build_weak_hopf, fusion_roundtrip
from .linalg import DEFAULT_TOL, Tolerance, err, subspace_distance
from .reconstruction import (
    build_g_algebra,
    g_algebra_report,
    projection_laws,
    rechoice_invariance,
    roundtrip_spec_weak,
    spectral_functor,
)
from .weakhopf import NotApplicable, WeakHopf


@dataclass
class StageResult:
    name: str
    report: dict[str, float] = field(default_factory=dict)
    error: str | None = None
    skipped: str | None = None
    seconds: float = 0.0

    def passed(self, tol: Tolerance) -> bool:
        return self.error is None and all(v <= 10 * tol.atol for v in self.report.values())

    def worst(self) -> tuple[str, float] | None:
        if not self.report:
            return None
        k = max(self.report, key=self.report.get)
        return k, self.report[k]


@dataclass
class SuiteResult:
    target: str
    stages: list[StageResult]
    tol: Tolerance

    @property
    def failed(self) -> StageResult | None:
        return next((s for s in self.stages if not s.passed(self.tol)), None)

    @property
    def exit_code(self) -> int:
        """0 when every stage passes, otherwise 10 + index of the failing stage."""
        bad = self.failed
        return 0 if bad is None else 10 + self.stages.index(bad)

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "ok": self.failed is None,
            "failed_stage": None if self.failed is None else self.failed.name,
            "stages": [{"name": s.name, "passed": s.passed(self.tol), "error": s.error, "skipped": s.skipped,
                        "seconds": round(s.seconds, 3), "report": s.report} for s in self.stages],
        }


def _max(*dicts) -> float:
    return max((v for d in dicts for v in d.values()), default=0.0)


# -- stages on a weak Hopf algebra ---------------------------------------------------


def stage_axioms(G: WeakHopf, tol: Tolerance) -> dict[str, float]:
    res = dict(G.verify(tol))
    res["regularity"] = 0.0 if G.regularity_check(tol) else 1.0
    return res


def stage_haar(G: WeakHopf, tol: Tolerance) -> dict[str, float]:
    h = G.haar_measure(tol).functional        # raises on non-unique or non-positive solutions
    Bt = G.Bt
    return {"h_on_Bt_equals_eps": err(h @ Bt, G.counit @ Bt),
            "normalisation": abs(h @ G.unit - G.counit @ G.unit),
            "S_invariance": err(h @ G.antipode, h)}


def stage_registry(G: WeakHopf, tol: Tolerance) -> dict[str, float]:
    reg = registry(G)
    res = {"corep_axioms": max(_max(U.verify(tol)) for U in reg.reps),
           "dimension_count": float(abs(sum(d * d for d in reg.dims) - G.dim))}
    return res


def stage_peter_weyl(G: WeakHopf, tol: Tolerance) -> dict[str, float]:
    reg = registry(G)
    mult = multiplicities(decompose(regular_corep(G), reg, tol), reg)
    res = {"multiplicity_equals_dimension": float(max(abs(mult.get(l, 0) - d) for l, d in zip(reg.labels, reg.dims)))}
    pw = peter_weyl(G, tol)
    res["coefficient_spaces"] = float(abs(sum(s.shape[1] for s in pw.spans) - G.dim))
    res["coefficient_dims"] = float(max(abs(s.shape[1] - d * d) for s, d in zip(pw.spans, reg.dims)))
    return res


def stage_corep_calculus(G: WeakHopf, tol: Tolerance) -> dict[str, float]:
    res: dict[str, float] = {}
    for U in registry(G).reps:
        for k, v in {**unit_defects(U), **conjugate_equation_defects(rigidity(U))}.items():
            res[k] = max(res.get(k, 0.0), v)
    return res


def stage_regular_coaction(G: WeakHopf, tol: Tolerance) -> dict[str, float]:
    C = regular_coaction(G)
    res = {f"coaction_{k}": v for k, v in C.verify(tol).items()}
    res["fixed_points_equal_Bt"] = subspace_distance(C.fixed_points, G.Bt)
    res.update({f"expectation_{k}": v for k, v in C.conditional_expectation_report(tol).items()})
    res.update({f"implementation_{k}": v for k, v in C.canonical_implementation(tol=tol).report().items()})
    return res


def stage_spectral(G: WeakHopf, tol: Tolerance) -> dict[str, float]:
    res = {}
    for name, C in (("regular", regular_coaction(G)), ("source", source_coaction(G))):
        sd = C.spectral_decomposition(tol)
        res.update({f"{name}_{k}": v for k, v in sd.report(tol).items()})
        if G.coconnected and G.regularity_check(tol):
            res[f"{name}_A_eps_factorisation"] = C.a_epsilon_factorization(tol)["distance"]
    return res


def coaction_roundtrip_report(C: Coaction, tol: Tolerance, trials: int = 5) -> dict[str, float]:
    res = {f"roundtrip_{k}": v for k, v in roundtrip_spec_weak(C, tol).items()}
    F = spectral_functor(C, tol)
    res.update({f"functor_{k}": v for k, v in F.check().items()})
    GA = build_g_algebra(F, tol=tol)
    res.update({f"g_algebra_{k}": v for k, v in g_algebra_report(GA, tol).items()})
    res.update({f"p_{k}": v for k, v in projection_laws(GA).items()})
    res["rechoice"] = rechoice_invariance(C, trials, tol=tol)
    return res


def stage_roundtrip(G: WeakHopf, tol: Tolerance) -> dict[str, float]:
    res = {}
    for name, C in (("regular", regular_coaction(G)), ("source", source_coaction(G))):
        res.update({f"{name}_{k}": v for k, v in coaction_roundtrip_report(C, tol, trials=2).items()})
    return res


def _weakhopf_stages(G: WeakHopf) -> list[tuple[str, Callable]]:
    stages = [("axioms", stage_axioms), ("haar", stage_haar), ("registry", stage_registry),
              ("peter-weyl", stage_peter_weyl), ("corep-calculus", stage_corep_calculus),
              ("regular-coaction", stage_regular_coaction), ("spectral", stage_spectral)]
    stages.append(("roundtrip", stage_roundtrip))
    return [(n, lambda tol, f=f: f(G, tol)) for n, f in stages]


def _coaction_stages(C: Coaction) -> list[tuple[str, Callable]]:
    G = C.parent

    def fixed(tol):
        return C.conditional_expectation_report(tol)

    def spectral(tol):
        return C.spectral_decomposition(tol).report(tol)

    return [("groupoid-axioms", lambda tol: stage_axioms(G, tol)),
            ("coaction-axioms", lambda tol: C.verify(tol)),
            ("fixed-points", fixed), ("spectral", spectral),
            ("roundtrip", lambda tol: coaction_roundtrip_report(C, tol, trials=2))]


def _fusion_stages(Fd: FusionData) -> list[tuple[str, Callable]]:
    state = {}

    def validate(tol):
        return dict(Fd.verify())

    def build(tol):
        HG = build_weak_hopf(Fd, tol, check=False)
        state["HG"] = HG
        return stage_axioms(HG.weak_hopf, tol)

    def dual(tol):
        d = build_dual_algebra(state["HG"], tol)
        return {"block_sizes": 0.0 if d["match"] else 1.0}

    def roundtrip(tol):
        rep = fusion_roundtrip(Fd, tol, strict=False)
        return {"fusion_table": float(len(rep.mismatches())), "comodules": rep.comodule_defect}

    return [("fusion-data", validate), ("hayashi-build", build), ("dual-algebra", dual),
            ("fusion-roundtrip", roundtrip)]


def _algebra_stages(A: FiniteCStarAlgebra) -> list[tuple[str, Callable]]:
    return [("algebra-axioms", lambda tol: A.verify(tol))]


def run_suite(target: str, tol: Tolerance = DEFAULT_TOL, obj=None) -> SuiteResult:
    """Run every stage for ``target`` (a ``builtin:`` name or a JSON path)."""
    from .io import resolve

    stages: list[StageResult] = []
    t0 = time.perf_counter()
    try:
        obj = obj if obj is not None else resolve(target)
    except Exception as e:  # noqa: BLE001 - any load error is reported as the load stage
        stages.append(StageResult("load", error=f"{type(e).__name__}: {e}", seconds=time.perf_counter() - t0))
        return SuiteResult(target, stages, tol)
    stages.append(StageResult("load", seconds=time.perf_counter() - t0))
    if isinstance(obj, WeakHopf):
        plan = _weakhopf_stages(obj)
    elif isinstance(obj, Coaction):
        plan = _coaction_stages(obj)
    elif isinstance(obj, FusionData):
        plan = _fusion_stages(obj)
    else:
        plan = _algebra_stages(obj)
    for name, run in plan:
        t0 = time.perf_counter()
        st = StageResult(name)
        try:
            st.report = {k: float(v) for k, v in run(tol).items()}
        except NotApplicable as e:
            st.skipped = str(e)
        except Exception as e:  # noqa: BLE001 - the failing stage records the exception
            st.error = f"{type(e).__name__}: {e}"
        st.seconds = time.perf_counter() - t0
        stages.append(st)
        if not st.passed(tol):
            break
    return SuiteResult(target, stages, tol)


def as_text(res: SuiteResult) -> str:
    lines = [f"suite {res.target}"]
    for s in res.stages:
        status = "SKIP" if s.skipped else "PASS" if s.passed(res.tol) else "FAIL"
        w = s.worst()
        detail = s.error or s.skipped or (f"worst {w[0]} = {w[1]:.2e}" if w else "")
        lines.append(f"  [{status}] {s.name:<18} {s.seconds:7.2f}s  {detail}")
    bad = res.failed
    lines.append("all stages passed" if bad is None else f"failed at stage: {bad.name}")
    return "\n".join(lines)
