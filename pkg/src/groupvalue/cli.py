"""Command-line interface: ``groupvalue <command> [options]``.

Machine output (CSV or JSON) goes to stdout or ``--out``; diagnostics and
timing go to stderr. Exit codes: 0 ok, 2 input error, 3 capacity exceeded,
4 internal invariant failure.
"""

from __future__ import annotations

import csv
import functools
import io
import json
import sys
import time
from dataclasses import dataclass, field
from typing import Any, Optional

import click
import numpy as np

from . import __version__
from .applied import connectivity_game, linear_threshold_game, reach_noise_game, wconn2_game, wconn_game
from .axioms import PROPERTIES, SuiteSpec, check_all, functional_by_name
from .estimation import DEFAULT_BATCH, DEFAULT_ITERATIONS, SamplerConfig, mc_group_value, mc_shapley
from .games import CapacityError, Game, merge
from .loaders import (
    InputError,
    InputSource,
    LabeledUniverse,
    read_game,
    read_influence,
    read_network,
    read_source,
    read_survey,
)
from .search import SearchConfig, explain_group, rank_groups, ranking_key
from .shapley import (
    average_complementarity,
    profitability,
    segal_entrant_check,
    segal_pair_check,
    shapley_group_value,
    shapley_value,
)

SEED_ENV = "GROUPVALUE_SEED"
INVARIANT_TOL = 1e-9
FAMILIES = {"conn": connectivity_game, "wconn": wconn_game, "wconn2": wconn2_game}


class InvariantError(RuntimeError):
    """A result failed an internal consistency check."""


@dataclass
class RunManifest:
    command: str
    parameters: dict[str, Any]
    inputs: list[InputSource]
    seed: Optional[int]
    version: str = __version__
    elapsed: float = 0.0

    def to_dict(self) -> dict:
        # timing stays out of machine output so reruns reproduce it byte for byte
        return {
            "tool": "groupvalue",
            "version": self.version,
            "command": self.command,
            "parameters": self.parameters,
            "inputs": [{"path": s.path, "sha256": s.sha256} for s in self.inputs],
            "seed": self.seed,
        }


@dataclass
class Section:
    name: str
    columns: list[str]
    rows: list[list[Any]] = field(default_factory=list)


def _csv_cell(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".12g")
    if isinstance(value, list):
        return ",".join(str(v) for v in value)
    if value is None:
        return ""
    return str(value)


def render(manifest: RunManifest, sections: list[Section], fmt: str) -> str:
    if fmt == "json":
        body = {"manifest": manifest.to_dict()}
        for s in sections:
            body[s.name] = [dict(zip(s.columns, row)) for row in s.rows]
        return json.dumps(body, indent=2, ensure_ascii=False) + "\n"
    buf = io.StringIO()
    buf.write("# manifest " + json.dumps(manifest.to_dict(), sort_keys=True, ensure_ascii=False) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    for k, s in enumerate(sections):
        if k:
            buf.write("\n")
        buf.write(f"# {s.name}\n")
        writer.writerow(s.columns)
        for row in s.rows:
            writer.writerow([_csv_cell(v) for v in row])
    return buf.getvalue()


class _Main(click.Group):
    """Maps library exceptions onto exit codes."""

    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except (click.exceptions.ClickException, click.exceptions.Exit, click.exceptions.Abort):
            raise
        except CapacityError as exc:
            sub = ctx.invoked_subcommand
            hint = {"rank": "--method mc", "value": "--mc", "group-value": "--mc"}.get(sub)
            msg = f"capacity exceeded: {exc}"
            if hint:
                msg += f"; rerun with {hint} to estimate by sampling"
            click.echo(f"error: {msg}", err=True)
            ctx.exit(3)
        except InvariantError as exc:
            click.echo(f"internal invariant failed: {exc}", err=True)
            ctx.exit(4)
        except (InputError, ValueError, OSError) as exc:
            click.echo(f"error: {exc}", err=True)
            ctx.exit(2)


def _labels_arg(text: str) -> list[str]:
    labels = [s.strip() for s in text.split(",") if s.strip()]
    if not labels:
        raise click.BadParameter("expected comma-separated player labels")
    return labels


def source_options(f):
    opts = [
        click.option("--game", "game_file", type=click.Path(dir_okay=False), help="JSON game (worths or dividends)."),
        click.option("--network", "network_file", type=click.Path(dir_okay=False), help="Edge list 'u v [f]'."),
        click.option("--family", type=click.Choice(sorted(FAMILIES)), default="conn", show_default=True,
                     help="Connectivity game family for --network."),
        click.option("--node-weights", type=click.Path(dir_okay=False), help="Node weights 'u w' for wconn2."),
        click.option("--influence", "influence_file", type=click.Path(dir_okay=False),
                     help="Influence weights 'i j w' (i listens to j)."),
        click.option("--runs", type=click.IntRange(1), default=1000, show_default=True,
                     help="Threshold draws per coalition for --influence."),
        click.option("--survey", "survey_file", type=click.Path(dir_okay=False),
                     help="Survey CSV, last column D."),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def sampling_options(f):
    opts = [
        click.option("--mc", is_flag=True, help="Estimate by permutation sampling."),
        click.option("--iters", type=click.IntRange(2), default=DEFAULT_ITERATIONS, show_default=True),
        click.option("--batch", type=click.IntRange(1), default=DEFAULT_BATCH, show_default=True),
        click.option("--workers", type=click.IntRange(1), default=1, show_default=True),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def common_options(f):
    opts = [
        click.option("--seed", type=int, default=0, envvar=SEED_ENV, show_default=True,
                     help=f"Random seed (default from ${SEED_ENV})."),
        click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True),
        click.option("--out", type=click.Path(dir_okay=False), help="Write machine output here instead of stdout."),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def command(name: str):
    """Wrap a command body: time it, build the manifest, write the output."""

    def wrap(body):
        @functools.wraps(body)
        def run(**params):
            start = time.perf_counter()
            sections, inputs, seed = body(**params)
            recorded = {k: v for k, v in sorted(params.items()) if k != "out"}
            manifest = RunManifest(name, recorded, inputs, seed)
            text = render(manifest, sections, params["fmt"])
            if params.get("out"):
                with open(params["out"], "w", encoding="utf-8", newline="") as fh:
                    fh.write(text)
            else:
                click.echo(text, nl=False)
            manifest.elapsed = time.perf_counter() - start
            click.echo(f"groupvalue {name}: {manifest.elapsed:.3f}s", err=True)

        return run

    return wrap


def load_source(game_file, network_file, family, node_weights, influence_file, runs, survey_file,
                seed) -> tuple[Game, LabeledUniverse, bool]:
    """The game from exactly one input source; the flag marks seed-dependent games."""
    given = [x for x in (game_file, network_file, influence_file, survey_file) if x]
    if len(given) != 1:
        raise click.UsageError("give exactly one of --game, --network, --influence, --survey")
    if node_weights and not network_file:
        raise click.UsageError("--node-weights needs --network")
    if game_file:
        game, universe = read_game(game_file)
        return game, universe, False
    if network_file:
        net, universe = read_network(network_file, node_weights)
        return FAMILIES[family](net), universe, False
    if influence_file:
        model, universe = read_influence(influence_file)
        return linear_threshold_game(model, runs, seed), universe, True
    data, universe = read_survey(survey_file)
    return reach_noise_game(data), universe, False


def _source(params: dict) -> tuple[Game, LabeledUniverse, bool]:
    keys = ("game_file", "network_file", "family", "node_weights", "influence_file", "runs", "survey_file", "seed")
    return load_source(*(params[k] for k in keys))


def _check_efficiency(game: Game, phi: np.ndarray) -> None:
    grand = game.worth((1 << game.n) - 1)
    if abs(float(phi.sum()) - grand) > INVARIANT_TOL * max(1.0, abs(grand)):
        raise InvariantError(f"Shapley values sum to {phi.sum()!r}, grand coalition is worth {grand!r}")


@click.group(cls=_Main)
@click.version_option(__version__, prog_name="groupvalue")
def main():
    """Shapley values and Shapley group values of cooperative games."""


@main.command("value")
@source_options
@sampling_options
@common_options
@command("value")
def value_cmd(**p):
    """Shapley value of every player, best first."""
    game, universe, seeded = _source(p)
    if p["mc"]:
        cfg = SamplerConfig(p["iters"], p["seed"], p["batch"], p["workers"])
        est = mc_shapley(game, cfg)
        values = [(e.mean, e.stderr) for e in est]
        section = Section("values", ["player", "value", "stderr"])
    else:
        phi = shapley_value(game)
        _check_efficiency(game, phi)
        values = [(float(v), None) for v in phi]
        section = Section("values", ["player", "value"])
    order = sorted(range(game.n), key=lambda i: ranking_key(values[i][0], i))
    for i in order:
        row = [universe.labels[i], values[i][0]]
        if p["mc"]:
            row.append(values[i][1])
        section.rows.append(row)
    return [section], list(universe.sources), p["seed"] if p["mc"] or seeded else None


@main.command("group-value")
@click.option("--group", "group_labels", required=True, type=_labels_arg, help="Comma-separated labels.")
@click.option("--explain", is_flag=True, help="Split the value into per-member steps (exact mode).")
@source_options
@sampling_options
@common_options
@command("group-value")
def group_value_cmd(**p):
    """Shapley group value of one group."""
    game, universe, seeded = _source(p)
    group = universe.group(p["group_labels"])
    names = universe.names(group)
    if p["mc"]:
        if p["explain"]:
            raise click.UsageError("--explain is available in exact mode only")
        est = mc_group_value(game, group, SamplerConfig(p["iters"], p["seed"], p["batch"], p["workers"]))
        sections = [Section("group_value", ["group", "value", "stderr"], [[names, est.mean, est.stderr]])]
        return sections, list(universe.sources), p["seed"]
    result = shapley_group_value(game, group)
    sections = [Section("group_value", ["group", "value"], [[names, result.value]])]
    if p["explain"]:
        greedy = explain_group(game, group)
        trace = Section("explain", ["step", "member", "value", "gain", "independent", "complementarity"])
        for k, step in enumerate(greedy.trace, start=1):
            if step.independent is not None:
                gap = step.gain - (step.independent + step.complementarity)
                if abs(gap) > INVARIANT_TOL:
                    raise InvariantError(f"decomposition of step {k} is off by {gap!r}")
            trace.rows.append([k, universe.labels[step.player], step.value, step.gain,
                               step.independent, step.complementarity])
        if abs(greedy.value - result.value) > INVARIANT_TOL:
            raise InvariantError("explained steps do not add up to the group value")
        sections.append(trace)
    return sections, list(universe.sources), p["seed"] if seeded else None


@main.command("rank")
@click.option("--size", "k", type=click.IntRange(1), required=True, help="Group size.")
@click.option("--top", "top_m", type=click.IntRange(1), default=10, show_default=True)
@click.option("--method", type=click.Choice(["exact", "mc"]), default="exact", show_default=True)
@click.option("--max-groups", type=click.IntRange(1), default=SearchConfig(1).max_groups, show_default=True)
@click.option("--iters", type=click.IntRange(2), default=DEFAULT_ITERATIONS, show_default=True)
@click.option("--batch", type=click.IntRange(1), default=DEFAULT_BATCH, show_default=True)
@click.option("--workers", type=click.IntRange(1), default=1, show_default=True)
@source_options
@common_options
@command("rank")
def rank_cmd(**p):
    """Best groups of a given size by Shapley group value."""
    game, universe, seeded = _source(p)
    mc = p["method"] == "mc"
    cfg = SearchConfig(k=p["k"], top_m=p["top_m"], method="monte-carlo" if mc else "exact",
                       sampler=SamplerConfig(p["iters"], p["seed"], p["batch"]),
                       max_groups=p["max_groups"], workers=p["workers"])
    section = Section("ranking", ["rank", "group", "value"] + (["stderr"] if mc else []))
    for entry in rank_groups(game, cfg):
        row = [entry.rank, universe.names(entry.group), entry.value]
        if mc:
            row.append(entry.stderr)
        section.rows.append(row)
    return [section], list(universe.sources), p["seed"] if mc or seeded else None


@main.command("complementarity")
@click.option("--pair", required=True, type=_labels_arg, help="Two labels 'i,j'.")
@click.option("--merge", "merge_labels", type=_labels_arg, help="Evaluate in the game with this group merged.")
@source_options
@common_options
@command("complementarity")
def complementarity_cmd(**p):
    """Average complementarity of two players."""
    game, universe, seeded = _source(p)
    pair = p["pair"]
    if len(pair) != 2 or pair[0] == pair[1]:
        raise click.BadParameter("--pair needs two distinct labels")
    i, j = universe.index(pair[0]), universe.index(pair[1])
    context: list[str] = []
    if p["merge_labels"]:
        group = universe.group(p["merge_labels"])
        context = universe.names(group)
        merged = merge(game, group)
        a, b = merged.index_of(i), merged.index_of(j)
        if a == b:
            raise ValueError("both players sit inside the merged group")
        psi = average_complementarity(merged, a, b)
    else:
        psi = average_complementarity(game, i, j)
    section = Section("complementarity", ["pair", "merged", "psi"], [[pair, context, psi]])
    return [section], list(universe.sources), p["seed"] if seeded else None


@main.command("profitability")
@click.option("--group", "group_labels", required=True, type=_labels_arg, help="Comma-separated labels.")
@source_options
@common_options
@command("profitability")
def profitability_cmd(**p):
    """Group value against the members' summed Shapley values."""
    game, universe, seeded = _source(p)
    group = universe.group(p["group_labels"])
    report = profitability(game, group)
    members_ = [i for i in range(game.n) if group >> i & 1]
    if len(members_) == 2:
        segal = segal_pair_check(game, *members_).value
    elif len(members_) > 2:
        # the last member joining the others
        segal = segal_entrant_check(game, group & ~(1 << members_[-1]), members_[-1]).value
    else:
        segal = "n/a"
    section = Section("profitability",
                      ["group", "group_value", "additive_value", "surplus", "derks_tijs", "segal"],
                      [[universe.names(group), report.group_value, report.additive_value, report.surplus,
                        report.derks_tijs_sufficient, segal]])
    return [section], list(universe.sources), p["seed"] if seeded else None


@main.command("axioms")
@click.option("--functional", "name", required=True,
              type=click.Choice(["shapley", "additive", "alpha", "shift", "product"]))
@click.option("--alpha", type=float, default=0.5, show_default=True, help="Parameter of the alpha functional.")
@click.option("--shift", type=float, default=1.0, show_default=True, help="Parameter of the shift functional.")
@click.option("--suite", type=click.Path(dir_okay=False), help="Suite spec JSON.")
@click.option("--properties", type=_labels_arg, help="Subset of P1..P13.")
@common_options
@command("axioms")
def axioms_cmd(**p):
    """Test a group value functional against the property suites."""
    inputs = []
    spec = SuiteSpec(seed=p["seed"])
    if p["suite"]:
        text, source = read_source(p["suite"])
        inputs.append(source)
        try:
            spec = SuiteSpec.from_json(text)
        except (TypeError, ValueError) as exc:
            raise InputError(p["suite"], str(exc)) from None
        if click.get_current_context().get_parameter_source("seed").name != "DEFAULT":
            spec = SuiteSpec(**{**spec.__dict__, "seed": p["seed"]})
    props = tuple(p["properties"] or PROPERTIES)
    unknown = [x for x in props if x not in PROPERTIES]
    if unknown:
        raise click.BadParameter(f"unknown properties {unknown}")
    fn = functional_by_name(p["name"], p["alpha"], p["shift"])
    section = Section("axioms", ["property", "verdict", "checks", "skipped", "witness"])
    for r in check_all(fn, spec, props):
        section.rows.append([r.prop, r.verdict, r.checks, r.skipped,
                             r.witness.describe() if r.witness else ""])
    return [section], inputs, spec.seed


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
