"""Command-line front end.

Subcommands: smooth, prefer, solve, rank, apt, hitset, schedule, ratetest.
Each writes a JSON result (to ``--out`` or stdout); commands producing loss
distributions also write one two-column ``category mass`` file per
distribution next to the JSON output. Options may come from a flat JSON file
given with ``--config``; explicit flags win over the file.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""

import argparse
import csv
import json
import os
import re
import sys
import tempfile
from collections import OrderedDict
from dataclasses import dataclass, field

from . import aptmodel, gamecore, lossdist, ordering, riskops
from .errors import (
    CategoryOutOfRange,
    EmptyCell,
    InvalidArgument,
    MalformedCsv,
    NoConvergence,
    RiskModelError,
)
from .lossdist import LossDistribution, Observations

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

SURVEY_HEADER = ("defense", "attack", "goal", "rating")
CONTROL_HEADER = ("defense", "threat")
RANK_HEADER = ("threat", "axis", "rating")

COMMANDS = ("smooth", "prefer", "solve", "rank", "apt", "hitset", "schedule", "ratetest")

DEFAULTS = {
    "iterations": gamecore.DEFAULT_ITERATIONS,
    "seed": None,
    "alpha": 0.05,
    "past_period": 1.0,
    "new_period": 1.0,
    "horizon": 30.0,
    "time_unit": "day",
    "action": "action",
    "mode": "cardinality",
    "high_category": 4,
    "tol": ordering.DEFAULT_TOL,
    "outliers": "none",
}


class UsageError(Exception):
    pass


# -- input readers -----------------------------------------------------------


@dataclass
class SurveyGrid:
    """Survey answers grouped per (defense, attack, goal) cell."""

    defenses: list
    attacks: list
    goals: list
    cells: dict
    blank_rows: int = 0
    blank_by_cell: dict = field(default_factory=dict)

    def empty_cells(self) -> list:
        return [
            (d, a, g)
            for d in self.defenses
            for a in self.attacks
            for g in self.goals
            if not self.cells.get((d, a, g))
        ]

    def coverage(self) -> dict:
        return {
            "cells": len(self.defenses) * len(self.attacks) * len(self.goals),
            "answers": sum(len(v) for v in self.cells.values()),
            "blank_rows": self.blank_rows,
            "empty_cells": [list(c) for c in self.empty_cells()],
        }


def _read_csv(path, header):
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or any(h not in [f.strip() for f in reader.fieldnames] for h in header):
                raise MalformedCsv(f"{path}: expected header {','.join(header)}, got {reader.fieldnames}")
            rows = []
            for lineno, row in enumerate(reader, start=2):
                row = {(k or "").strip(): (v or "").strip() if isinstance(v, str) else v for k, v in row.items()}
                if any(row.get(h) is None for h in header):
                    raise MalformedCsv(f"{path}:{lineno}: missing fields")
                rows.append((lineno, row))
            return rows
    except OSError as exc:
        raise MalformedCsv(f"cannot read {path}: {exc.strerror}") from exc
    except csv.Error as exc:
        raise MalformedCsv(f"{path}: {exc}") from exc


def _parse_rating(text, where, support_max):
    try:
        value = float(text)
    except ValueError:
        raise MalformedCsv(f"{where}: rating {text!r} is not a number") from None
    if value != int(value):
        raise MalformedCsv(f"{where}: rating {text!r} is not an integer category")
    value = int(value)
    if value < 1 or (support_max is not None and value > support_max):
        raise CategoryOutOfRange(f"{where}: rating {value} outside 1..{support_max} (ratings must be >= 1)")
    return value


def ingest_survey(csv_path, support_max) -> SurveyGrid:
    """Group survey answers by cell; blank ratings are skipped and counted."""
    rows = _read_csv(csv_path, SURVEY_HEADER)
    order = {k: OrderedDict() for k in ("defense", "attack", "goal")}
    cells, blank_by_cell = {}, {}
    blanks = 0
    for lineno, row in rows:
        key = tuple(row[k] for k in ("defense", "attack", "goal"))
        if not all(key):
            raise MalformedCsv(f"{csv_path}:{lineno}: defense, attack and goal must be non-empty")
        for k, v in zip(("defense", "attack", "goal"), key):
            order[k][v] = None
        cells.setdefault(key, [])
        if row["rating"] == "":
            blanks += 1
            blank_by_cell[key] = blank_by_cell.get(key, 0) + 1
            continue
        cells[key].append(_parse_rating(row["rating"], f"{csv_path}:{lineno}", support_max))
    return SurveyGrid(
        list(order["defense"]),
        list(order["attack"]),
        list(order["goal"]),
        {k: Observations(v, goal_id=k[2], scenario=k[:2]) for k, v in cells.items()},
        blanks,
        blank_by_cell,
    )


def survey_game(grid: SurveyGrid, support_max, bandwidth=None, goal_weights=None, anonymize=False, outliers="none"):
    empty = grid.empty_cells()
    if empty:
        listing = "; ".join(f"defense={d}, attack={a}, goal={g}" for d, a, g in empty)
        raise EmptyCell(f"no usable answers for cell(s): {listing}")
    payoffs = []
    for d in grid.defenses:
        row = []
        for a in grid.attacks:
            cell = []
            for g in grid.goals:
                try:
                    cell.append(
                        lossdist.loss_distribution(grid.cells[(d, a, g)], support_max, bandwidth, outliers=outliers)
                    )
                except RiskModelError as exc:
                    raise type(exc)(f"cell defense={d}, attack={a}, goal={g}: {exc}") from exc
            row.append(cell)
        payoffs.append(row)
    if anonymize:
        dl = [f"C{i + 1}" for i in range(len(grid.defenses))]
        al = [f"T{j + 1}" for j in range(len(grid.attacks))]
    else:
        dl, al = grid.defenses, grid.attacks
    return gamecore.assemble_game(payoffs, dl, al, grid.goals, goal_weights)


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InvalidArgument(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidArgument(f"{path}: invalid JSON ({exc})") from exc


def load_distributions(path) -> list:
    """A distribution file holds one distribution, a list, or ``{"distributions": [...]}``."""
    data = _load_json(path)
    if isinstance(data, dict) and "distributions" in data:
        data = data["distributions"]
    items = data if isinstance(data, list) else [data]
    try:
        return [LossDistribution.from_dict(item) for item in items]
    except (KeyError, TypeError) as exc:
        raise InvalidArgument(f"{path}: not a loss distribution ({exc})") from exc


# -- report ------------------------------------------------------------------


def emit_report(eq: gamecore.Equilibrium, control_kinds=None, category_labels=None, high_category=4):
    """Human-readable text and a JSON-ready dict describing an equilibrium."""
    if control_kinds is None:
        control_kinds = {label: riskops.STATIC for label in eq.defense_labels}
    plan = riskops.interpret_equilibrium(eq, control_kinds, high_category=high_category)
    labels = category_labels or {}

    def cat(k):
        name = labels.get(str(k)) or labels.get(k)
        return f"{name} ({k})" if name else str(k)

    lines = [f"Equilibrium after {eq.iterations} iterations, cutoff {eq.cutoff}", "", "Optimal defense:"]
    for label, v in zip(eq.defense_labels, eq.optimal_defense):
        lines.append(f"  {label}: {v:.4f}")
    lines.append("Worst-case attack (one of possibly many):")
    for label, v in zip(eq.attack_labels, eq.optimal_attack):
        lines.append(f"  {label}: {v:.4f}")
    lines.append("")
    lines.append("Controls to implement (most important first):")
    for item in plan["implement"]:
        lines.append(f"  {item['control']} (frequency {item['frequency']:.4f})")
    if not plan["implement"]:
        lines.append("  none")
    if plan["dynamic"]:
        lines.append("Dynamic controls (repeat at random):")
        for item in plan["dynamic"]:
            s = item["schedule"]
            lines.append(f"  {item['control']}: rate {s['p']:.4f} per {s['time_unit']}")
    lines.append("")
    for goal, s in plan["assurances"].items():
        lines.append(f"Assurance for goal {goal}:")
        lines.append(f"  mean (risk = damage x likelihood): {s['mean']:.6f}")
        lines.append(f"  variance: {s['variance']:.6f}")
        lines.append(f"  0.95-quantile: {cat(s['quantile_95'])}")
        lines.append(f"  P(loss >= {cat(s['tail_category'])}): {s['tail_probability']:.6f}")
    return "\n".join(lines) + "\n", plan


# -- output ------------------------------------------------------------------


def plot_data(d: LossDistribution) -> str:
    return "".join(f"{k} {m!r}\n" for k, m in zip(range(1, d.support_max + 1), d.masses.tolist()))


def _slug(text):
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", str(text)).strip("_") or "x"


class Outputs:
    """Collects output files and writes them only once everything succeeded."""

    def __init__(self, out_path):
        self.out_path = out_path
        self.files = OrderedDict()
        self.stdout = None

    def result(self, payload):
        text = json.dumps(payload, indent=2, sort_keys=False) + "\n"
        if self.out_path:
            self.files[self.out_path] = text
        else:
            self.stdout = text

    def side(self, suffix, text):
        if self.out_path:
            stem, _ = os.path.splitext(self.out_path)
            self.files[f"{stem}.{suffix}"] = text

    def distribution(self, name, d: LossDistribution):
        self.side(f"{_slug(name)}.dat", plot_data(d))

    def commit(self):
        for path, text in self.files.items():
            directory = os.path.dirname(os.path.abspath(path))
            os.makedirs(directory, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
            try:
                with os.fdopen(fd, "w") as fh:
                    fh.write(text)
                os.replace(tmp, path)
            except BaseException:
                if os.path.exists(tmp):
                    os.unlink(tmp)
                raise
        if self.stdout is not None:
            sys.stdout.write(self.stdout)


# -- commands ----------------------------------------------------------------


def _require(cfg, key, flag):
    if cfg.get(key) is None:
        raise UsageError(f"{cfg['command']}: {flag} is required")
    return cfg[key]


def _single_input(cfg):
    inputs = cfg.get("inputs") or []
    if len(inputs) != 1:
        raise UsageError(f"{cfg['command']}: expected exactly one input file, got {len(inputs)}")
    return inputs[0]


def _cmd_smooth(cfg, out):
    support_max = _require(cfg, "support_max", "--support-max")
    grid = ingest_survey(_single_input(cfg), support_max)
    cells = []
    for (d, a, g), obs in grid.cells.items():
        if not obs.values:
            continue
        try:
            dist = lossdist.loss_distribution(
                obs, support_max, cfg.get("bandwidth"), smoothed=not cfg.get("no_smooth"), outliers=cfg["outliers"]
            )
        except RiskModelError as exc:
            raise type(exc)(f"cell defense={d}, attack={a}, goal={g}: {exc}") from exc
        cells.append({"defense": d, "attack": a, "goal": g, "distribution": dist.to_dict()})
        out.distribution(f"{d}-{a}-{g}", dist)
    out.result({"cells": cells, "coverage": grid.coverage()})


def _cmd_prefer(cfg, out):
    inputs = cfg.get("inputs") or []
    if len(inputs) != 2:
        raise UsageError("prefer: expected two distribution files")
    fs, gs = load_distributions(inputs[0]), load_distributions(inputs[1])
    if len(fs) == 1 and len(gs) == 1 and cfg.get("weights") is None:
        res = ordering.prefer(fs[0], gs[0], cfg["tol"])
    else:
        res = ordering.prefer_multi(fs, gs, cfg.get("weights"), cfg["tol"])
    out.result({"verdict": res.verdict, "decided_at_category": res.decided_at_category})


def _control_kinds(cfg, labels):
    kinds = {label: riskops.STATIC for label in labels}
    for label in cfg.get("dynamic") or []:
        if label not in kinds:
            raise InvalidArgument(f"--dynamic names unknown control {label!r}")
        kinds[label] = riskops.DYNAMIC
    return kinds


def _cmd_solve(cfg, out):
    path = _single_input(cfg)
    if path.endswith(".json"):
        game = gamecore.Game.from_dict(_load_json(path))
        if cfg.get("weights") is not None:
            game = gamecore.assemble_game(
                game.payoffs, game.defense_labels, game.attack_labels, game.goal_labels, cfg["weights"]
            )
        coverage = None
    else:
        support_max = _require(cfg, "support_max", "--support-max")
        grid = ingest_survey(path, support_max)
        game = survey_game(
            grid, support_max, cfg.get("bandwidth"), cfg.get("weights"), cfg.get("anonymize"), cfg["outliers"]
        )
        coverage = grid.coverage()
    eq = gamecore.solve(game, cfg["iterations"], cfg.get("cutoff"))
    text, plan = emit_report(eq, _control_kinds(cfg, game.defense_labels), cfg.get("category_labels"), cfg["high_category"])
    payload = {"equilibrium": eq.to_dict(), "report": plan}
    if coverage is not None:
        payload["coverage"] = coverage
    out.result(payload)
    out.side("report.txt", text)
    out.side("game.json", json.dumps(game.to_dict(), indent=2) + "\n")
    for goal, a in zip(eq.goal_labels, eq.assurances):
        out.distribution(f"assurance-{goal}", a)
    if not cfg.get("out"):
        sys.stderr.write(text)


def _cmd_rank(cfg, out):
    support_max = _require(cfg, "support_max", "--support-max")
    path = _single_input(cfg)
    axes = {"impact": OrderedDict(), "likelihood": OrderedDict()}
    order = OrderedDict()
    for lineno, row in _read_csv(path, RANK_HEADER):
        axis = row["axis"].lower()
        if axis not in axes:
            raise MalformedCsv(f"{path}:{lineno}: axis must be 'impact' or 'likelihood', got {row['axis']!r}")
        order[row["threat"]] = None
        values = axes[axis].setdefault(row["threat"], [])
        if row["rating"] != "":
            values.append(_parse_rating(row["rating"], f"{path}:{lineno}", support_max))
    ids = list(order)
    dists = {}
    for axis, per_threat in axes.items():
        dists[axis] = []
        for t in ids:
            obs = per_threat.get(t)
            if not obs:
                raise EmptyCell(f"threat {t}: no {axis} ratings")
            dists[axis].append(lossdist.loss_distribution(obs, support_max, cfg.get("bandwidth")))
    ranking = riskops.rank_threats(dists["impact"], dists["likelihood"], ids)
    out.result(ranking.to_dict())


def _cmd_apt(cfg, out):
    data = _load_json(_single_input(cfg))
    if "source" in data and "edges" in data:
        graph = aptmodel.AttackGraph.from_dict(data)
        out.result({"paths": [list(p) for p in aptmodel.enumerate_attack_paths(graph)]})
        return
    if "links" in data:
        part = aptmodel.build_stages(data["links"], data["target"], data.get("nodes", ()))
        out.result(
            {
                "stages": [sorted(map(str, s)) for s in part.stages],
                "unreachable": sorted(map(str, part.unreachable)),
            }
        )
        return
    if "stages" not in data or "I0" not in data:
        raise InvalidArgument("apt input must be an attack graph, a link list, or a scenario with 'stages' and 'I0'")
    I0 = LossDistribution.from_dict(data["I0"])
    sols = aptmodel.solve_sequential_apt(
        data["stages"],
        I0,
        cfg["iterations"] if cfg.get("iterations_set") else data.get("fp_iters", cfg["iterations"]),
        data.get("fixpoint_tol", aptmodel.DEFAULT_FIXPOINT_TOL),
        data.get("max_fixpoint_rounds", aptmodel.DEFAULT_FIXPOINT_ROUNDS),
    )
    stages = []
    for s in sols:
        stages.append(
            {
                "stage": s.stage_index,
                "distribution": s.distribution.to_dict(),
                "equilibrium": s.equilibrium.to_dict(),
                "rounds": s.rounds,
                "residual": s.residual,
                "monotone_tail": s.monotone_tail,
            }
        )
        out.distribution(f"stage{s.stage_index}", s.distribution)
    out.result({"stages": stages})


def _cmd_hitset(cfg, out):
    path = _single_input(cfg)
    pairs = [(row["defense"], row["threat"]) for _, row in _read_csv(path, CONTROL_HEADER)]
    for d, t in pairs:
        if not d or not t:
            raise MalformedCsv(f"{path}: empty defense or threat field")
    rel = riskops.ControlRelation.from_pairs(pairs)
    chosen = riskops.minimal_hitting_set(rel, cfg["mode"])
    out.result({"mode": cfg["mode"], "controls": chosen})


def _cmd_schedule(cfg, out):
    p = _require(cfg, "p", "--p")
    sched = riskops.schedule_actions(p, cfg["horizon"], cfg.get("seed"), cfg["action"], cfg["time_unit"])
    out.result(sched.to_dict())


def _cmd_ratetest(cfg, out):
    past = _require(cfg, "past", "--past")
    new = _require(cfg, "new", "--new")
    res = riskops.rate_ratio_test(past, new, cfg["past_period"], cfg["new_period"], cfg["alpha"])
    out.result(res.to_dict())


HANDLERS = {
    "smooth": _cmd_smooth,
    "prefer": _cmd_prefer,
    "solve": _cmd_solve,
    "rank": _cmd_rank,
    "apt": _cmd_apt,
    "hitset": _cmd_hitset,
    "schedule": _cmd_schedule,
    "ratetest": _cmd_ratetest,
}


def run(config: dict) -> int:
    """Execute one command described by a flat config dict; returns the exit code.

    Errors are reported on stderr as ``error: <kind>: <message>``.
    """
    cfg = dict(DEFAULTS)
    cfg.update({k: v for k, v in config.items() if v is not None})
    command = cfg.get("command")
    if command not in HANDLERS:
        sys.stderr.write(f"error: usage: unknown command {command!r}; choose from {', '.join(COMMANDS)}\n")
        return EXIT_USAGE
    out = Outputs(cfg.get("out"))
    try:
        HANDLERS[command](cfg, out)
        out.commit()
    except UsageError as exc:
        sys.stderr.write(f"error: usage: {exc}\n")
        return EXIT_USAGE
    except NoConvergence as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_NUMERIC
    except RiskModelError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_DATA
    return EXIT_OK


# -- argument parsing ----------------------------------------------------------


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _names(text):
    return [v.strip() for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat JSON file with option values (flags override it)")
    common.add_argument("--support-max", type=int, help="highest loss category")
    common.add_argument("--bandwidth", type=float, help="kernel bandwidth (default: Silverman's rule)")
    common.add_argument("--cutoff", type=int, help="truncation category (default: full support)")
    common.add_argument("--iterations", type=int, help="fictitious play rounds (default 1000)")
    common.add_argument("--weights", type=_floats, help="comma-separated goal weights")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--out", help="result JSON path; side files are written next to it")

    parser = argparse.ArgumentParser(prog="riskgame", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("smooth", parents=[common], help="survey CSV to loss distributions")
    p.add_argument("inputs", nargs=1, metavar="SURVEY_CSV")
    p.add_argument("--no-smooth", action="store_true", help="emit raw histograms")
    p.add_argument("--outliers", choices=("none", "iqr"))

    p = sub.add_parser("prefer", parents=[common], help="compare two distribution files")
    p.add_argument("inputs", nargs=2, metavar="DIST_JSON")
    p.add_argument("--tol", type=float)

    p = sub.add_parser("solve", parents=[common], help="equilibrium of a survey CSV or game JSON")
    p.add_argument("inputs", nargs=1, metavar="SURVEY_CSV_OR_GAME_JSON")
    p.add_argument("--dynamic", type=_names, help="comma-separated controls that must be repeated")
    p.add_argument("--anonymize", action="store_true", help="label defenses C1.. and attacks T1..")
    p.add_argument("--high-category", type=int, help="category for the tail probability (default 4)")
    p.add_argument("--outliers", choices=("none", "iqr"))

    p = sub.add_parser("rank", parents=[common], help="risk matrix from a threat,axis,rating CSV")
    p.add_argument("inputs", nargs=1, metavar="RATINGS_CSV")

    p = sub.add_parser("apt", parents=[common], help="attack paths, stages or sequential APT game")
    p.add_argument("inputs", nargs=1, metavar="APT_JSON")

    p = sub.add_parser("hitset", parents=[common], help="minimal control selection")
    p.add_argument("inputs", nargs=1, metavar="CONTROLS_CSV")
    p.add_argument("--mode", choices=("cardinality", "subset_minimal"))

    p = sub.add_parser("schedule", parents=[common], help="random repetition times for an action")
    p.add_argument("--p", type=float, help="equilibrium frequency per time unit")
    p.add_argument("--horizon", type=float)
    p.add_argument("--action")
    p.add_argument("--time-unit")

    p = sub.add_parser("ratetest", parents=[common], help="one-sided exact rate-ratio test")
    p.add_argument("--past", type=int, help="severe incidents before the change")
    p.add_argument("--new", type=int, help="severe incidents after the change")
    p.add_argument("--past-period", type=float)
    p.add_argument("--new-period", type=float)
    p.add_argument("--alpha", type=float)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = {}
    if args.config:
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            sys.stderr.write(f"error: usage: cannot load config {args.config}: {exc}\n")
            return EXIT_USAGE
        if not isinstance(file_cfg, dict):
            sys.stderr.write(f"error: usage: config {args.config} must be a JSON object\n")
            return EXIT_USAGE
        cfg.update({k.replace("-", "_"): v for k, v in file_cfg.items()})
    flags = {k: v for k, v in vars(args).items() if v is not None and v is not False}
    cfg["iterations_set"] = "iterations" in flags or "iterations" in cfg
    cfg.update(flags)
    cfg["command"] = args.command
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
