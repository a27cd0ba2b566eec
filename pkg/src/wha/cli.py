"""Command-line front end ``wha``.

Inputs are JSON files (``wha/1`` documents) or builtin names such as
``builtin:fp2``, ``builtin:fp2/source`` or ``builtin:vecz2-fusion``.

Exit codes: 0 success, 1 a check failed, 2 usage error, 3 unreadable or
invalid input; ``suite`` uses ``10 + index`` of the first failing stage.
"""
from __future__ import annotations

import json
import sys

import click
import numpy as np

from . import io
from .algebra import FiniteCStarAlgebra
from .coaction import Coaction, regular_coaction, source_coaction
from .corep import decompose, multiplicities, regular_corep, registry, tensor, trivial_corep
from .hayashi import FusionData, InvalidFusion, build_dual_algebra, build_weak_hopf, fusion_roundtrip
from .linalg import Tolerance, subspace_distance
from .suite import as_text, coaction_roundtrip_report, run_suite, stage_axioms, stage_haar
from .weakhopf import WeakHopf

EXIT_FAIL, EXIT_INPUT = 1, 3


class Ctx:
    def __init__(self, atol: float, as_json: bool, output: str | None):
        self.tol = Tolerance(atol=atol)
        self.as_json = as_json
        self.output = output

    def ok(self, report: dict[str, float]) -> bool:
        return all(v <= 10 * self.tol.atol for v in report.values())


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.3e}"
    return str(v)


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    return x


def emit(ctx: Ctx, title: str, data: dict, text: str | None = None, write_report: bool = True) -> None:
    data = _clean(data)
    if ctx.as_json:
        click.echo(json.dumps(data))
    else:
        click.echo(text if text is not None else "\n".join(
            [title] + [f"  {k}: {_fmt(v)}" for k, v in data.items()]))
    if ctx.output and write_report:
        with open(ctx.output, "w") as f:
            json.dump({"schema": io.SCHEMA, "kind": "report", **data}, f, indent=1)
            f.write("\n")


def load(ref: str):
    try:
        return io.resolve(ref)
    except (OSError, ValueError, KeyError) as e:
        click.echo(f"error: cannot load {ref}: {e}", err=True)
        sys.exit(EXIT_INPUT)


def load_weakhopf(ref: str) -> WeakHopf:
    obj = load(ref)
    if isinstance(obj, Coaction):
        return obj.parent
    if isinstance(obj, FusionData):
        return build_weak_hopf(obj).weak_hopf
    if not isinstance(obj, WeakHopf):
        click.echo(f"error: {ref} is not a quantum groupoid", err=True)
        sys.exit(EXIT_INPUT)
    return obj


def load_coaction(ref: str, which: str = "regular") -> Coaction:
    obj = load(ref)
    if isinstance(obj, Coaction):
        return obj
    if isinstance(obj, WeakHopf):
        return (regular_coaction if which == "regular" else source_coaction)(obj)
    click.echo(f"error: {ref} is not a coaction", err=True)
    sys.exit(EXIT_INPUT)


def finish(ctx: Ctx, report: dict[str, float]) -> None:
    if not ctx.ok(report):
        sys.exit(EXIT_FAIL)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--tol", default=1e-9, show_default=True, help="Absolute tolerance; checks pass below 10*tol.")
@click.option("--json", "as_json", is_flag=True, help="Emit machine-readable JSON.")
@click.option("-o", "--output", type=click.Path(dir_okay=False), help="Write the result to this file.")
@click.pass_context
def main(ctx, tol, as_json, output):
    """Finite quantum groupoids: verification, corepresentations, coactions, reconstruction."""
    ctx.obj = Ctx(tol, as_json, output)


# -- quantum groupoids ----------------------------------------------------------


@main.command()
@click.argument("ref")
@click.pass_obj
def verify(ctx: Ctx, ref):
    """Check the axioms of an algebra, quantum groupoid, coaction or fusion datum."""
    obj = load(ref)
    if isinstance(obj, WeakHopf):
        rep = stage_axioms(obj, ctx.tol)
    elif isinstance(obj, Coaction):
        rep = {**{f"groupoid_{k}": v for k, v in stage_axioms(obj.parent, ctx.tol).items()}, **obj.verify(ctx.tol)}
    elif isinstance(obj, FusionData):
        rep = obj.verify()
    else:
        rep = obj.verify(ctx.tol)
    rep = {k: float(v) for k, v in rep.items()}
    status = "PASS" if ctx.ok(rep) else "FAIL"
    emit(ctx, f"verify {ref}: {status}", {"ok": ctx.ok(rep), **rep} if ctx.as_json else rep)
    finish(ctx, rep)


@main.command()
@click.argument("ref")
@click.pass_obj
def info(ctx: Ctx, ref):
    """Summarise an object: dimensions, blocks, base algebras, irreducibles."""
    obj = load(ref)
    if isinstance(obj, WeakHopf):
        G = obj
        _, _, flags = G.counital_subalgebras()
        reg = registry(G)
        data = {"name": G.name, "dim": G.dim, "blocks": G.algebra.blocks(ctx.tol).dims,
                "dim_Bt": G.Bt.shape[1], "dim_Bs": G.Bs.shape[1], **flags,
                "regular": G.regularity_check(ctx.tol), "irreducibles": dict(zip(reg.labels, reg.dims))}
    elif isinstance(obj, Coaction):
        C = obj
        sd = C.spectral_decomposition(ctx.tol)
        data = {"name": C.name, "dim_A": C.m, "groupoid": C.parent.name, "dim_B": C.n,
                "dim_fixed_points": C.fixed_points.shape[1], "ergodic": C.ergodic,
                "spectral_dims": dict(zip(sd.labels, sd.dims))}
    elif isinstance(obj, FusionData):
        data = {"name": obj.name, "labels": obj.labels, "unit": obj.labels[obj.unit],
                "duals": {obj.labels[x]: obj.labels[y] for x, y in enumerate(obj.dual_map)},
                "multiplicity_free": obj.multiplicity_free}
    else:
        A: FiniteCStarAlgebra = obj
        data = {"dim": A.dim, "blocks": A.blocks(ctx.tol).dims}
    emit(ctx, f"info {ref}", data)


@main.command()
@click.argument("ref")
@click.pass_obj
def dual(ctx: Ctx, ref):
    """Build the dual quantum groupoid (written with -o)."""
    G = load_weakhopf(ref)
    D = G.dual()
    rep = stage_axioms(D, ctx.tol)
    data = {"dim": D.dim, "blocks": D.algebra.blocks(ctx.tol).dims, "max_axiom_defect": max(rep.values())}
    if ctx.output:
        io.save(D, ctx.output)
    emit(ctx, f"dual of {ref}", data, write_report=False)
    finish(ctx, rep)


@main.command()
@click.argument("ref")
@click.pass_obj
def haar(ctx: Ctx, ref):
    """Solve for the Haar measure and check its defining properties."""
    G = load_weakhopf(ref)
    try:
        rep = stage_haar(G, ctx.tol)
    except RuntimeError as e:
        click.echo(f"haar: {type(e).__name__}: {e}", err=True)
        sys.exit(EXIT_FAIL)
    h = G.h
    data = {"h": {l: complex(v) for l, v in zip(G.algebra.basis_labels, h)}, **rep}
    text = "\n".join([f"Haar measure of {G.name or ref}"]
                     + [f"  h({l}) = {v.real:.12g}" + (f" {v.imag:+.3g}i" if abs(v.imag) > 1e-12 else "")
                        for l, v in zip(G.algebra.basis_labels, h)]
                     + [f"  {k}: {_fmt(v)}" for k, v in rep.items()])
    emit(ctx, "haar", data, text)
    finish(ctx, rep)


# -- corepresentations -----------------------------------------------------------


@main.group()
def corep():
    """Unitary corepresentations."""


@corep.command("decompose")
@click.argument("ref")
@click.option("--which", type=click.Choice(["regular", "unit"]), default="regular", show_default=True)
@click.pass_obj
def corep_decompose(ctx: Ctx, ref, which):
    """Decompose a corepresentation into irreducibles of the registry."""
    G = load_weakhopf(ref)
    reg = registry(G)
    U = regular_corep(G) if which == "regular" else trivial_corep(G)
    summands = decompose(U, reg, ctx.tol)
    mult = multiplicities(summands, reg)
    recon = sum(s.isometry @ s.isometry.conj().T for s in summands)
    rep = {"completeness": float(np.linalg.norm(recon - np.eye(U.hdim)))}
    data = {"corep": which, "dim": U.hdim, "multiplicities": mult, "irreducible_dims": dict(zip(reg.labels, reg.dims)),
            **rep}
    emit(ctx, f"decomposition of the {which} corepresentation", data)
    finish(ctx, rep)


@corep.command("tensor")
@click.argument("ref")
@click.argument("x")
@click.argument("y")
@click.pass_obj
def corep_tensor(ctx: Ctx, ref, x, y):
    """Decompose U^x (*) U^y for registry labels x, y (e.g. x0 x1)."""
    G = load_weakhopf(ref)
    reg = registry(G)
    try:
        Ux, Uy = reg.reps[reg.labels.index(x)], reg.reps[reg.labels.index(y)]
    except ValueError:
        raise click.BadParameter(f"labels are {reg.labels}") from None
    tp = tensor(Ux, Uy, ctx.tol)
    mult = multiplicities(decompose(tp.corep, reg, ctx.tol), reg) if tp.corep.hdim else {}
    rep = {f"tensor_{k}": v for k, v in tp.corep.verify(ctx.tol).items()} if tp.corep.hdim else {}
    data = {"x": x, "y": y, "dim": tp.corep.hdim, "multiplicities": mult, **rep}
    emit(ctx, f"{x} (*) {y}", data)
    finish(ctx, rep)


# -- coactions ---------------------------------------------------------------------


@main.group()
def coact():
    """Coactions on finite-dimensional C*-algebras."""


_which = click.option("--which", type=click.Choice(["regular", "source"]), default="regular", show_default=True,
                      help="Coaction to use when REF is a quantum groupoid.")


@coact.command("verify")
@click.argument("ref")
@_which
@click.pass_obj
def coact_verify(ctx: Ctx, ref, which):
    """Check the coaction axioms."""
    C = load_coaction(ref, which)
    rep = {k: float(v) for k, v in C.verify(ctx.tol).items()}
    emit(ctx, f"coaction {C.name}: {'PASS' if ctx.ok(rep) else 'FAIL'}", rep)
    finish(ctx, rep)


@coact.command("fixed-points")
@click.argument("ref")
@_which
@click.pass_obj
def coact_fixed(ctx: Ctx, ref, which):
    """Fixed-point algebra and the conditional expectation onto it."""
    C = load_coaction(ref, which)
    rep = {k: float(v) for k, v in C.conditional_expectation_report(ctx.tol).items()}
    data = {"dim": C.fixed_points.shape[1], "ergodic": C.ergodic}
    if C.m == C.n and np.allclose(C.amap, C.parent.comult):
        data["distance_to_Bt"] = subspace_distance(C.fixed_points, C.parent.Bt)
        rep["distance_to_Bt"] = data["distance_to_Bt"]
    emit(ctx, f"fixed points of {C.name}", {**data, **rep})
    finish(ctx, rep)


@coact.command("spectral")
@click.argument("ref")
@_which
@click.pass_obj
def coact_spectral(ctx: Ctx, ref, which):
    """Spectral subspaces A_x for each irreducible x."""
    C = load_coaction(ref, which)
    sd = C.spectral_decomposition(ctx.tol)
    rep = {k: float(v) for k, v in sd.report(ctx.tol).items()}
    emit(ctx, f"spectral decomposition of {C.name}", {"dims": dict(zip(sd.labels, sd.dims)), **rep})
    finish(ctx, rep)


@coact.command("implement")
@click.argument("ref")
@_which
@click.pass_obj
def coact_implement(ctx: Ctx, ref, which):
    """Canonical unitary implementation with respect to an invariant faithful state."""
    C = load_coaction(ref, which)
    impl = C.canonical_implementation(tol=ctx.tol)
    rep = {k: float(v) for k, v in impl.report().items()}
    emit(ctx, f"implementation of {C.name}", {"hilbert_dim": impl.corep.hdim, **rep})
    finish(ctx, rep)


# -- reconstruction ------------------------------------------------------------------


@main.group()
def hayashi():
    """Quantum groupoids from fusion data."""


@hayashi.command("build")
@click.argument("ref")
@click.pass_obj
def hayashi_build(ctx: Ctx, ref):
    """Build the quantum groupoid of a fusion datum (written with -o)."""
    Fd = load(ref)
    if not isinstance(Fd, FusionData):
        click.echo(f"error: {ref} is not fusion data", err=True)
        sys.exit(EXIT_INPUT)
    try:
        HG = build_weak_hopf(Fd, ctx.tol, check=False)
    except InvalidFusion as e:
        click.echo(f"error: {type(e).__name__}: {e}", err=True)
        sys.exit(EXIT_FAIL)
    G = HG.weak_hopf
    rep = stage_axioms(G, ctx.tol)
    d = build_dual_algebra(HG, ctx.tol)
    rt = fusion_roundtrip(Fd, ctx.tol, strict=False)
    rep["dual_blocks"] = 0.0 if d["match"] else 1.0
    rep["fusion_table"] = float(len(rt.mismatches()))
    _, _, flags = G.counital_subalgebras()
    data = {"dim": G.dim, "module_dims": HG.block_sizes(), **flags, "regular": G.regularity_check(ctx.tol),
            "max_axiom_defect": max(v for k, v in rep.items() if k not in ("dual_blocks", "fusion_table")),
            "dual_blocks": d["blocks"], "fusion_table_reproduced": rt.ok}
    if ctx.output:
        io.save(G, ctx.output)
    emit(ctx, f"Hayashi groupoid of {Fd.name or ref}", data, write_report=False)
    finish(ctx, rep)


@main.group()
def recon():
    """Reconstruction of coactions from their spectral functors."""


@recon.command("roundtrip")
@click.argument("ref")
@_which
@click.option("--trials", default=5, show_default=True, help="Random re-choices of decomposition isometries.")
@click.pass_obj
def recon_roundtrip(ctx: Ctx, ref, which, trials):
    """A -> spectral functor -> A_F -> A, with all algebra laws of A_F."""
    C = load_coaction(ref, which)
    try:
        rep = coaction_roundtrip_report(C, ctx.tol, trials)
    except RuntimeError as e:
        click.echo(f"roundtrip: {type(e).__name__}: {e}", err=True)
        sys.exit(EXIT_FAIL)
    worst = max(rep, key=rep.get)
    text = f"round trip of {C.name}: {'PASS' if ctx.ok(rep) else 'FAIL'} (worst {worst} = {rep[worst]:.2e})"
    emit(ctx, text, rep, text if not ctx.as_json else None)
    finish(ctx, rep)


# -- the full pipeline ------------------------------------------------------------


@main.command()
@click.argument("ref")
@click.pass_obj
def suite(ctx: Ctx, ref):
    """Run every verification stage; the exit code names the first failing stage."""
    res = run_suite(ref, ctx.tol)
    emit(ctx, "suite", res.to_dict(), as_text(res))
    sys.exit(res.exit_code)


if __name__ == "__main__":
    main()
