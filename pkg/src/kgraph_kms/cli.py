"""Command-line front end.

    kgraph-kms validate --graph mcnamara
    kgraph-kms spectral --graph eyeglasses --theta 1 --out results/
    kgraph-kms report --graph mcnamara --functor zero --out results/

Exit codes: 0 ok, 1 invalid input, 2 computation failure, 3 property
violation detected.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import bratteli as br
from . import functors as fn
from . import hausdorff as hd
from . import kms
from . import measure as ms
from . import periodicity as per
from . import spectral as sp
from .kgraph import FIXTURES, CapExceededError, InvalidGraphError, KGraph, load_fixture, load_graph

EXIT_OK, EXIT_INPUT, EXIT_COMPUTE, EXIT_VIOLATION = 0, 1, 2, 3


class StageError(RuntimeError):
    def __init__(self, stage: str, code: int, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.code = code


@dataclass
class RunConfig:
    graph: str
    functor: str = "zero"
    seed: int = 0
    theta: float = 1.0
    beta: float | None = None
    max_degree: tuple[int, ...] | None = None
    depth: int | None = None
    mmax: int = 10
    tol: float = 1e-10
    out: str | None = None
    grid: str | None = None

    def __post_init__(self):
        if self.mmax < 1:
            raise ValueError("--mmax must be positive")
        if self.depth is not None and self.depth < 1:
            raise ValueError("--depth must be positive")
        if self.max_degree is not None and any(x < 0 for x in self.max_degree):
            raise ValueError("--max-degree entries must be nonnegative")
        if self.tol <= 0:
            raise ValueError("--tol must be positive")

    @property
    def beta_value(self) -> float:
        return self.theta if self.beta is None else self.beta


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (tuple, list, np.ndarray)):
        return "(" + ", ".join(_fmt(v) for v in x) + ")"
    return str(x)


def _degree(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(p) for p in text.replace("(", "").replace(")", "").split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"degree must look like 2,2 (got {text!r})") from None


class Context:
    """Lazily computed shared objects for one invocation."""

    def __init__(self, cfg: RunConfig, echo: Callable[[str], None]):
        self.cfg = cfg
        self.echo = echo
        self._graph = self._functor = self._sd = None

    @property
    def graph(self) -> KGraph:
        if self._graph is None:
            src = self.cfg.graph
            self._graph = load_fixture(src) if src in FIXTURES and not os.path.exists(src) else load_graph(src)
        return self._graph

    @property
    def functor(self) -> fn.WeightFunctor:
        if self._functor is None:
            g = self.graph
            how = self.cfg.functor
            if how == "zero":
                self._functor = fn.zero_functor(g)
            elif how == "sample":
                self._functor = fn.sample_nonnegative(fn.solve_constraints(g), self.cfg.seed)
            else:
                self._functor = fn.load_functor(how, g)
        return self._functor

    @property
    def sd(self) -> sp.SpectralData:
        if self._sd is None:
            self._sd = sp.spectral_data(self.graph, self.functor, self.cfg.theta)
        return self._sd

    def max_degree(self, default: int = 2) -> tuple[int, ...]:
        md = self.cfg.max_degree or (default,) * self.graph.k
        if len(md) != self.graph.k:
            raise ValueError(f"--max-degree needs {self.graph.k} entries")
        return md

    def out_file(self, name: str) -> str | None:
        if not self.cfg.out:
            return None
        os.makedirs(self.cfg.out, exist_ok=True)
        return os.path.join(self.cfg.out, name)


# -- commands ---------------------------------------------------------------------------


def cmd_validate(ctx: Context) -> int:
    g = ctx.graph
    nv = len(g.vertices)
    F = "{" + ",".join(_fmt(f) for f in g.connectivity_witness) + "}"
    ctx.echo(f"valid, k={g.k}, {nv} vert{'ex' if nv == 1 else 'ices'}, {len(g.edges)} edges, strong connectivity F={F}")
    return EXIT_OK


def cmd_functor_space(ctx: Context) -> int:
    space = fn.solve_constraints(ctx.graph)
    ctx.echo(f"free variables: {space.free_count} ({', '.join(space.free_variables)})")
    ctx.echo(f"constraint rank: {space.rank}")
    for name, b in zip(space.free_variables, space.basis):
        ctx.echo(f"basis[{name}]: " + " ".join(f"{e}={x}" for e, x in zip(space.edges, b)))
    if ctx.cfg.functor != "zero":
        bad = ctx.functor.violations(ctx.graph)
        ctx.echo(f"functor square violations: {len(bad)}")
        if bad:
            return EXIT_VIOLATION
    path = ctx.out_file("functor_template.txt")
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(fn.template(space))
    return EXIT_OK


def cmd_spectral(ctx: Context) -> int:
    sd = ctx.sd
    ctx.echo(f"theta: {_fmt(sd.theta)}")
    ctx.echo(f"rho: {_fmt(sd.rho)}")
    ctx.echo(f"xi: {_fmt(sd.xi)}")
    ctx.echo(f"F: {_fmt(sd.F)}")
    ctx.echo(f"residual: {_fmt(sd.residual)}")
    ctx.echo(f"oracle_gap: {_fmt(sd.oracle_gap)}")
    wc = sp.check_weight_conditions(sd)
    ctx.echo(f"w-I: {wc.w1}  w-II: {wc.w2} (index {wc.w2_index})  required: {wc.required}")
    path = ctx.out_file("spectral.csv")
    if path:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["quantity", "index", "value"])
            for i, r in enumerate(sd.rho):
                w.writerow(["rho", i + 1, repr(float(r))])
            for v, x in zip(ctx.graph.vertices, sd.xi):
                w.writerow(["xi", v, repr(float(x))])
            w.writerow(["residual", "", repr(sd.residual)])
    if ctx.cfg.grid:
        a, b, n = ctx.cfg.grid.split(":")
        grid = np.linspace(float(a), float(b), int(n))
        prof = sp.theta_profile(ctx.graph, ctx.functor, grid)
        path = ctx.out_file("theta_profile.csv")
        if path:
            prof.to_csv(path)
        ctx.echo(f"theta profile: {len(grid)} points")
    if sd.residual > max(ctx.cfg.tol, 1e-10) or sd.oracle_gap > 1e-9:
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_measure(ctx: Context) -> int:
    sd, g = ctx.sd, ctx.graph
    md = ctx.max_degree()
    paths = g.paths_upto(md)
    total = sum(ms.mu(g.vertex(v), sd) for v in g.vertices)
    add = max(ms.additivity_residual(p, 2, sd) for p in paths)
    qi = 0.0
    for a in paths:
        for b in paths:
            if a.src == b.src:
                qi = max(qi, ms.quasi_invariance_residual(a, b, sd, sd.theta))
    uniq = ms.uniqueness_residual(sd)
    ctx.echo(f"paths: {len(paths)}")
    ctx.echo(f"total mass: {_fmt(total)}")
    ctx.echo(f"additivity residual: {_fmt(add)}")
    ctx.echo(f"quasi-invariance residual (beta=theta): {_fmt(qi)}")
    ctx.echo(f"uniqueness residual: {_fmt(uniq)}")
    path = ctx.out_file("measure.csv")
    if path:
        ms.write_mu_table(paths, sd, path)
    tol = max(ctx.cfg.tol, 1e-10)
    return EXIT_VIOLATION if max(add, qi, uniq, abs(total - 1)) > tol else EXIT_OK


def cmd_periodicity(ctx: Context) -> int:
    g = ctx.graph
    md = ctx.max_degree()
    group = per.per_group(g, md, ctx.cfg.depth)
    ctx.echo(group.report())
    chars = group.characters()
    ctx.echo(f"characters: invariant factors {chars.invariant_factors}, free dimension {chars.free_dimension}")
    ctx.echo(f"annihilator basis: {list(chars.annihilator()) or 'trivial'}")
    crit = per.aperiodicity_criterion(
        sp.spectral_data(g, ctx.functor, ctx.cfg.beta_value), md, tol=1e-9, beta=ctx.cfg.beta_value
    )
    if crit.witness is None:
        ctx.echo(f"aperiodicity criterion: no collision among {crit.searched} paths")
    else:
        c = crit.witness
        ctx.echo(f"aperiodicity criterion: collision ({c.lam}, {c.nu}) value {_fmt(c.value_lam)} gap {_fmt(c.gap)}")
    path = ctx.out_file("periodicity.txt")
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(group.report() + "\n")
    if chars.annihilator() != group.basis:
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_kms_check(ctx: Context) -> int:
    sd = ctx.sd
    beta = ctx.cfg.beta_value
    md = ctx.max_degree()
    chars = kms.sample_characters(sd.k, 8, ctx.cfg.seed)
    results = kms.kms_sweep(sd, beta, md, chars, ctx.cfg.depth)
    tol = ctx.cfg.tol
    worst = max(r.max_residual for r in results)
    for r in results:
        wit = "" if r.witness is None else f"  worst ({r.witness[0]}, {r.witness[1]})"
        ctx.echo(f"{r.label}: max residual {_fmt(r.max_residual)} over {r.pairs} pairs"
                 f"{'' if r.depth is None else f' (P_Lambda depth {r.depth})'}{wit}")
    ctx.echo(f"{'PASS' if worst <= tol else 'FAIL'} max residual {_fmt(worst)} (tol {_fmt(tol)}, beta {_fmt(beta)})")
    path = ctx.out_file("kms_residuals.csv")
    if path:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["state", "max_residual", "pairs", "worst_a", "worst_b"])
            for r in results:
                a, b = r.witness if r.witness else ("", "")
                w.writerow([r.label, repr(r.max_residual), r.pairs, str(a), str(b)])
    return EXIT_OK if worst <= tol else EXIT_VIOLATION


def cmd_weight(ctx: Context) -> int:
    if ctx.cfg.theta <= 0:
        raise ValueError("metric commands need --theta > 0")
    w = br.BratteliWeight(ctx.sd)
    c = w.conditions
    ctx.echo(f"w-I: {c.w1}  w-II: {c.w2}  required: {c.required}  holds: {c.holds}")
    ctx.echo(f"two nonzeros per row, per color: {c.two_per_row}  rho above every entry: {c.exceeds_entries}")
    depth = ctx.cfg.depth or 4
    paths = br.bratteli_paths(ctx.graph, depth)
    worst = max(br.self_similarity_residual(p, 2, w) for p in paths)
    ctx.echo(f"self-similarity residual (length {depth}, +2 levels): {_fmt(worst)}")
    path = ctx.out_file("weights.csv")
    if path:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["bratteli_path", "weight", "mu"])
            for n in range(depth + 1):
                for p in br.bratteli_paths(ctx.graph, n):
                    out.writerow([str(p), repr(w(p)), repr(ms.mu(p.to_path(ctx.graph), ctx.sd))])
    return EXIT_VIOLATION if worst > max(ctx.cfg.tol, 1e-12) else EXIT_OK


def cmd_hausdorff(ctx: Context) -> int:
    if ctx.cfg.theta <= 0:
        raise ValueError("metric commands need --theta > 0")
    w = br.BratteliWeight(ctx.sd).require()
    dim = hd.dimension_estimate(w, ctx.cfg.mmax)
    flat = max(abs(hd.cover_sum(M, w.theta, w) - 1) for M in range(ctx.cfg.mmax + 1))
    hm = max(hd.hausdorff_measure(p, w)[1] for n in range(5) for p in br.bratteli_paths(ctx.graph, n))
    ctx.echo(f"dimension estimate: {_fmt(dim)} (theta {_fmt(w.theta)})")
    ctx.echo(f"max |S_M(theta) - 1|, M <= {ctx.cfg.mmax}: {_fmt(flat)}")
    ctx.echo(f"max |H^theta - mu| to length 4: {_fmt(hm)}")
    path = ctx.out_file("cover_sums.csv")
    if path:
        ss = np.round(np.linspace(0.25, 2.0, 8) * w.theta, 12)
        hd.write_cover_grid(w, range(ctx.cfg.mmax + 1), ss, path)
    bad = abs(dim - w.theta) > 0.01 or flat > 1e-12 or hm > 1e-12
    return EXIT_VIOLATION if bad else EXIT_OK


def cmd_report(ctx: Context) -> int:
    stages = [
        ("validate", cmd_validate),
        ("functor-space", cmd_functor_space),
        ("spectral", cmd_spectral),
        ("measure", cmd_measure),
        ("periodicity", cmd_periodicity),
        ("kms-check", cmd_kms_check),
        ("weight", cmd_weight),
        ("hausdorff", cmd_hausdorff),
    ]
    lines: list[str] = []
    outer = ctx.echo
    status = EXIT_OK
    for name, fn_ in stages:
        ctx.echo = lambda s, _n=name: (lines.append(f"[{_n}] {s}"), outer(f"[{_n}] {s}"))
        try:
            code = fn_(ctx)
        except Exception as exc:
            ctx.echo = outer
            raise StageError(name, _code_for(exc), str(exc)) from exc
        ctx.echo = outer
        if code != EXIT_OK:
            status = max(status, code)
            outer(f"[{name}] property violation")
    path = ctx.out_file("summary.txt")
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    return status


COMMANDS = {
    "validate": cmd_validate,
    "functor-space": cmd_functor_space,
    "spectral": cmd_spectral,
    "measure": cmd_measure,
    "periodicity": cmd_periodicity,
    "kms-check": cmd_kms_check,
    "weight": cmd_weight,
    "hausdorff": cmd_hausdorff,
    "report": cmd_report,
}


def _code_for(exc: BaseException) -> int:
    if isinstance(exc, StageError):
        return exc.code
    if isinstance(exc, (sp.ConvergenceError, sp.NotIrreducibleError, hd.ClassificationError,
                        br.WeightConditionError, CapExceededError, hd.PathCountError, fn.SamplingError)):
        return EXIT_COMPUTE
    if isinstance(exc, (InvalidGraphError, ValueError, KeyError, OSError)):
        return EXIT_INPUT
    return EXIT_COMPUTE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kgraph-kms", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--graph", required=True, help=f"graph TOML file or bundled name ({', '.join(FIXTURES)})")
    common.add_argument("--functor", default="zero", help="functor file, 'zero', or 'sample' (uses --seed)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--theta", type=float, default=1.0)
    common.add_argument("--beta", type=float, default=None, help="inverse temperature (defaults to theta)")
    common.add_argument("--max-degree", type=_degree, default=None, help="e.g. 2,2")
    common.add_argument("--depth", type=int, default=None)
    common.add_argument("--mmax", type=int, default=10)
    common.add_argument("--tol", type=float, default=1e-10)
    common.add_argument("--out", default=None, help="directory for CSV/text artifacts")
    common.add_argument("--grid", default=None, help="theta grid START:STOP:COUNT for the spectral profile")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    echo = print
    try:
        cfg = RunConfig(
            graph=args.graph, functor=args.functor, seed=args.seed, theta=args.theta, beta=args.beta,
            max_degree=args.max_degree, depth=args.depth, mmax=args.mmax, tol=args.tol, out=args.out,
            grid=args.grid,
        )
        if cfg.theta < 0:
            raise ValueError("--theta must be nonnegative")
        return COMMANDS[args.command](Context(cfg, echo))
    except Exception as exc:  # report and map to an exit code
        code = _code_for(exc)
        print(f"error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
