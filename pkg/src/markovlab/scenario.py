"""Scenario files: declarative TOML descriptions of a relation, a sampled
set, and the experiment blocks to run on them.

A scenario looks like

    name = "example-2-2"
    nvars = 2
    seed = 20240901

    [relation]
    k = 2
    d = 3
    q = ["0", "1 + -1 * x1^2", "0"]

    [sampling]
    density = 96
    boxes = [[[-1.0, 1.0]]]
    [[sampling.branches]]
    kind = "zero"
    [[sampling.branches]]
    kind = "sqrt"
    sign = 1
    poly = "1 + -1 * x1^2"

    [markov]
    alphas = [[1, 0], [0, 1]]
    degree_max = 10
    [[markov.bounds]]
    alpha = [1, 0]
    M = 6.0
    m = 2.0

plus optional [approx], [counterexample], [extension] and [determining]
blocks.  ``run_scenario`` executes the requested blocks in dependency
order and writes CSV/JSON artifacts plus a text summary; identical
scenario + seed reproduce identical bytes.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

try:
    import tomllib  # Python 3.11+
except ModuleNotFoundError:  # pragma: no cover - version dependent
    import tomli as tomllib

from . import approx as approx_mod
from . import extension as extension_mod
from . import markov as markov_mod
from .geometry import (
    Branch,
    BranchSpec,
    GeometryError,
    SampleSet,
    grid_certificate,
    sample_variety_set,
)
from .polyring import PolyParseError, VarietyRelation, format_poly, parse_poly

DEFAULT_SEED = 20240901


class ScenarioError(ValueError):
    """Configuration problem, annotated with the offending field path."""

    def __init__(self, fieldpath: str, message: str):
        self.fieldpath = fieldpath
        super().__init__(f"{fieldpath}: {message}")


@dataclass
class Scenario:
    name: str
    nvars: int
    relation: VarietyRelation
    branch_spec: BranchSpec
    density: float
    seed: int = DEFAULT_SEED
    blocks: dict = field(default_factory=dict)

    def build_sample_set(self) -> SampleSet:
        return sample_variety_set(self.relation, self.branch_spec, self.density)


# -- parsing -------------------------------------------------------------------


def _get(data, path, key, expected, required=True, default=None):
    if key not in data:
        if required:
            raise ScenarioError(f"{path}.{key}" if path else key, "missing field")
        return default
    value = data[key]
    if expected is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, expected):
        raise ScenarioError(
            f"{path}.{key}" if path else key,
            f"expected {getattr(expected, '__name__', expected)}, got {type(value).__name__}",
        )
    return value


def _parse_relation(data, nvars) -> VarietyRelation:
    rel = _get(data, "", "relation", dict)
    k = _get(rel, "relation", "k", int)
    d = _get(rel, "relation", "d", int)
    q_texts = _get(rel, "relation", "q", list)
    polys = []
    for i, text in enumerate(q_texts):
        if not isinstance(text, str):
            raise ScenarioError(f"relation.q[{i}]", "expected polynomial text")
        try:
            polys.append(parse_poly(text, nvars))
        except PolyParseError as exc:
            raise ScenarioError(f"relation.q[{i}]", str(exc)) from exc
    try:
        return VarietyRelation(nvars, k, d, tuple(polys))
    except ValueError as exc:
        raise ScenarioError("relation", str(exc)) from exc


def _parse_branches(data, nvars) -> BranchSpec:
    samp = _get(data, "", "sampling", dict)
    boxes_raw = _get(samp, "sampling", "boxes", list)
    boxes = []
    for bi, box in enumerate(boxes_raw):
        if not isinstance(box, list):
            raise ScenarioError(f"sampling.boxes[{bi}]", "expected a list of [lo, hi] pairs")
        axes = []
        for ai, pair in enumerate(box):
            if not (isinstance(pair, list) and len(pair) == 2):
                raise ScenarioError(
                    f"sampling.boxes[{bi}][{ai}]", "expected a [lo, hi] pair"
                )
            axes.append((float(pair[0]), float(pair[1])))
        boxes.append(tuple(axes))
    branches_raw = _get(samp, "sampling", "branches", list)
    branches = []
    for i, br in enumerate(branches_raw):
        if not isinstance(br, dict):
            raise ScenarioError(f"sampling.branches[{i}]", "expected a table")
        kind = _get(br, f"sampling.branches[{i}]", "kind", str)
        sign = _get(br, f"sampling.branches[{i}]", "sign", int, required=False, default=1)
        poly = None
        if "poly" in br:
            try:
                poly = parse_poly(br["poly"], nvars)
            except PolyParseError as exc:
                raise ScenarioError(f"sampling.branches[{i}].poly", str(exc)) from exc
        try:
            branches.append(Branch(kind, sign, poly))
        except GeometryError as exc:
            raise ScenarioError(f"sampling.branches[{i}]", str(exc)) from exc
    try:
        return BranchSpec(tuple(branches), tuple(boxes))
    except GeometryError as exc:
        raise ScenarioError("sampling", str(exc)) from exc


_KNOWN_BLOCKS = ("markov", "approx", "counterexample", "extension", "determining")


def scenario_from_dict(data: dict, origin: str = "<dict>") -> Scenario:
    name = _get(data, "", "name", str, required=False, default="unnamed")
    nvars = _get(data, "", "nvars", int)
    if nvars < 2:
        raise ScenarioError("nvars", "need at least two variables")
    seed = _get(data, "", "seed", int, required=False, default=DEFAULT_SEED)
    relation = _parse_relation(data, nvars)
    spec = _parse_branches(data, nvars)
    samp = data["sampling"]
    density = _get(samp, "sampling", "density", (int, float))
    if density < 64:
        raise ScenarioError("sampling.density", f"density {density} too low; need >= 64")

    blocks = {}
    for key in _KNOWN_BLOCKS:
        if key in data:
            block = data[key]
            if not isinstance(block, dict):
                raise ScenarioError(key, "expected a table")
            blocks[key] = _validate_block(key, block, nvars, relation)
    return Scenario(name, nvars, relation, spec, float(density), seed, blocks)


def _validate_alpha_list(path, raw, nvars):
    alphas = []
    for i, al in enumerate(raw):
        if not (isinstance(al, list) and len(al) == nvars and all(isinstance(v, int) and v >= 0 for v in al)):
            raise ScenarioError(f"{path}[{i}]", f"expected {nvars} nonnegative ints")
        if sum(al) < 1:
            raise ScenarioError(f"{path}[{i}]", "need |alpha| >= 1")
        alphas.append(tuple(al))
    return alphas


def _validate_block(key, block, nvars, relation) -> dict:
    out = dict(block)
    if key == "markov":
        out["alphas"] = _validate_alpha_list("markov.alphas", _get(block, "markov", "alphas", list), nvars)
        out["degree_max"] = _get(block, "markov", "degree_max", int)
        if out["degree_max"] < 1:
            raise ScenarioError("markov.degree_max", "need >= 1")
        out["grading"] = _get(block, "markov", "grading", str, required=False, default="total")
        bounds = {}
        for i, bd in enumerate(block.get("bounds", [])):
            if not isinstance(bd, dict):
                raise ScenarioError(f"markov.bounds[{i}]", "expected a table")
            al = _validate_alpha_list(f"markov.bounds[{i}].alpha", [bd.get("alpha")], nvars)[0]
            bounds[al] = (
                _get(bd, f"markov.bounds[{i}]", "M", (int, float)),
                _get(bd, f"markov.bounds[{i}]", "m", (int, float)),
            )
        out["bounds"] = bounds
        out["fit_window_min"] = _get(block, "markov", "fit_window_min", int, required=False, default=4)
    elif key == "approx":
        out["target"] = _get(block, "approx", "target", str, required=False, default="exp-xy")
        if out["target"] not in approx_mod.TARGETS:
            raise ScenarioError("approx.target", f"unknown target {out['target']!r}")
        out["level_max"] = _get(block, "approx", "level_max", int)
        out["r_ladder"] = block.get("r_ladder", [1, 2, 4, 8, 10])
    elif key == "counterexample":
        out["n_max"] = _get(block, "counterexample", "n_max", int)
        if not 2 <= out["n_max"] <= 200:
            raise ScenarioError("counterexample.n_max", "need 2 <= n_max <= 200")
    elif key == "extension":
        out["target"] = _get(block, "extension", "target", str, required=False, default="exp-xy")
        out["r"] = _get(block, "extension", "r", int)
        out["L"] = _get(block, "extension", "L", int)
        if out["r"] < 1:
            raise ScenarioError("extension.r", "need r >= 1")
        if "grid" in block:
            grid = block["grid"]
            if not isinstance(grid, dict):
                raise ScenarioError("extension.grid", "expected a table")
            box = grid.get("box")
            if not (isinstance(box, list) and len(box) == nvars
                    and all(isinstance(p, list) and len(p) == 2 for p in box)):
                raise ScenarioError(
                    "extension.grid.box", f"expected {nvars} [lo, hi] pairs"
                )
            out["grid"] = grid
    elif key == "determining":
        out["alphas"] = _validate_alpha_list(
            "determining.alphas", _get(block, "determining", "alphas", list), nvars
        )
        out["level_max"] = _get(block, "determining", "level_max", int, required=False, default=24)
    return out


def load_scenario(path: str) -> Scenario:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ScenarioError("<file>", f"scenario file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError("<toml>", str(exc))
    return scenario_from_dict(data, origin=path)


# -- presets ---------------------------------------------------------------------


def _three_branch_cubic(seed=DEFAULT_SEED) -> dict:
    return {
        "name": "example-2-2",
        "nvars": 2,
        "seed": seed,
        "relation": {"k": 2, "d": 3, "q": ["0", "1 + -1 * x1^2", "0"]},
        "sampling": {
            "density": 96,
            "boxes": [[[-1.0, 1.0]]],
            "branches": [
                {"kind": "zero"},
                {"kind": "sqrt", "sign": 1, "poly": "1 + -1 * x1^2"},
                {"kind": "sqrt", "sign": -1, "poly": "1 + -1 * x1^2"},
            ],
        },
        "markov": {
            "alphas": [[1, 0], [0, 1]],
            "degree_max": 10,
            "grading": "total",
            "bounds": [
                {"alpha": [1, 0], "M": 6.0, "m": 2.0},
                {"alpha": [0, 1], "M": 2.0, "m": 2.0},
            ],
        },
        "approx": {"target": "exp-xy", "level_max": 16, "r_ladder": [1, 2, 4, 8, 10]},
        "extension": {"target": "exp-xy", "r": 3, "L": 12},
    }


def _cube_root_arcs(seed=DEFAULT_SEED) -> dict:
    return {
        "name": "example-2-3",
        "nvars": 2,
        "seed": seed,
        "relation": {"k": 2, "d": 3, "q": ["1 + -1 * x1^2", "0", "0"]},
        "sampling": {
            "density": 256,
            "boxes": [[[-0.5, -0.25]], [[0.25, 0.5]]],
            "branches": [{"kind": "cbrt", "poly": "1 + -1 * x1^2"}],
        },
        "counterexample": {"n_max": 60},
        "determining": {"alphas": [[0, 1]], "level_max": 40},
    }


def _cubic_family(seed=DEFAULT_SEED) -> dict:
    # x_k^3 = Q(y) x_k with a seeded nonnegative Q on the box
    rng = np.random.default_rng(seed)
    a = float(np.round(rng.uniform(0.5, 1.5), 6))
    b = float(np.round(rng.uniform(0.0, 0.75), 6))
    # Q = a (1 - y^2) + b (1 - y^2)^2 >= 0 on [-1, 1]
    qtext = (
        f"{a + b} + {-(a + 2 * b)} * x1^2 + {b} * x1^4"
    )
    return {
        "name": "example-2-4-family",
        "nvars": 2,
        "seed": seed,
        "relation": {"k": 2, "d": 3, "q": ["0", qtext, "0"]},
        "sampling": {
            "density": 96,
            "boxes": [[[-1.0, 1.0]]],
            "branches": [
                {"kind": "zero"},
                {"kind": "sqrt", "sign": 1, "poly": qtext},
                {"kind": "sqrt", "sign": -1, "poly": qtext},
            ],
        },
        "markov": {
            "alphas": [[1, 0], [0, 1]],
            "degree_max": 8,
            "grading": "total",
        },
    }


_PRESETS = {
    "example-2-2": _three_branch_cubic,
    "example-2-3": _cube_root_arcs,
    "example-2-4-family": _cubic_family,
}


def preset_names():
    return sorted(_PRESETS)


def preset_scenario(name: str, seed: Optional[int] = None) -> Scenario:
    if name not in _PRESETS:
        raise ScenarioError("name", f"unknown preset {name!r}; choices: {preset_names()}")
    data = _PRESETS[name](seed if seed is not None else DEFAULT_SEED)
    return scenario_from_dict(data, origin=f"<preset {name}>")


def preset_toml(name: str) -> str:
    """Render a preset as a TOML document (for editing and re-running)."""
    if name not in _PRESETS:
        raise ScenarioError("name", f"unknown preset {name!r}; choices: {preset_names()}")
    return _to_toml(_PRESETS[name](DEFAULT_SEED))


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, list):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot render {type(v)} as TOML")


def _to_toml(data: dict) -> str:
    lines = []
    tables = []
    for key, val in data.items():
        if isinstance(val, dict):
            tables.append((key, val))
        else:
            lines.append(f"{key} = {_toml_value(val)}")
    for tname, tdata in tables:
        lines.append("")
        lines.append(f"[{tname}]")
        arrays = []
        subtables = []
        for key, val in tdata.items():
            if isinstance(val, list) and val and isinstance(val[0], dict):
                arrays.append((key, val))
            elif isinstance(val, dict):
                subtables.append((key, val))
            else:
                lines.append(f"{key} = {_toml_value(val)}")
        for sname, sdata in subtables:
            lines.append("")
            lines.append(f"[{tname}.{sname}]")
            for key, val in sdata.items():
                lines.append(f"{key} = {_toml_value(val)}")
        for aname, items in arrays:
            for item in items:
                lines.append("")
                lines.append(f"[[{tname}.{aname}]]")
                for key, val in item.items():
                    lines.append(f"{key} = {_toml_value(val)}")
    return "\n".join(lines) + "\n"


# -- execution ----------------------------------------------------------------------


class NumericalFailure(RuntimeError):
    """An experiment block hit an LP stall or a consistency failure."""

    def __init__(self, block: str, message: str):
        self.block = block
        super().__init__(f"[{block}] {message}")


@dataclass
class RunResult:
    scenario: Scenario
    outdir: str
    summary_lines: list
    artifacts: list


def _write(outdir, nm, text):
    path = os.path.join(outdir, nm)
    with open(path, "w") as fh:
        fh.write(text)
    return path


def run_scenario(scn: Scenario, outdir: str) -> RunResult:
    """Execute the scenario blocks in dependency order; write artifacts."""
    os.makedirs(outdir, exist_ok=True)
    lines = [f"scenario {scn.name} (seed {scn.seed})"]
    artifacts = []

    E = scn.build_sample_set()
    lines.append(f"sampled {E.npts} on-variety points at density {scn.density:g}")
    E.to_csv(os.path.join(outdir, "samples.csv"))
    artifacts.append("samples.csv")

    from .approx import ConsistencyError
    from .chebysolve import DegenerateBasisError, LPFailureError

    runners = (
        ("markov", _run_markov_block),
        ("approx", _run_approx_block),
        ("counterexample", _run_counterexample_block),
        ("extension", _run_extension_block),
        ("determining", _run_determining_block),
    )
    for block_name, runner in runners:
        if block_name not in scn.blocks:
            continue
        try:
            artifacts += runner(scn, E, outdir, lines)
        except (LPFailureError, DegenerateBasisError, ConsistencyError) as exc:
            raise NumericalFailure(block_name, str(exc)) from exc

    _write(outdir, "summary.txt", "\n".join(lines) + "\n")
    artifacts.append("summary.txt")
    return RunResult(scn, outdir, lines, artifacts)


def _run_markov_block(scn, E, outdir, lines):
    cfg = scn.blocks["markov"]
    degrees = list(range(1, cfg["degree_max"] + 1))
    report = markov_mod.build_markov_report(
        scn.relation, E, degrees, cfg["alphas"], grading=cfg["grading"]
    )
    report.to_csv(os.path.join(outdir, "markov_factors.csv"), bounds=cfg["bounds"])
    report.to_witness_json(os.path.join(outdir, "markov_witnesses.json"))
    lines.append(f"markov: degrees 1..{cfg['degree_max']}, grading {cfg['grading']}")
    for alpha in cfg["alphas"]:
        pairs = report.factors(alpha)
        fit_pairs = [(n, f) for n, f in pairs if n >= cfg["fit_window_min"] and f > 0]
        if len(fit_pairs) >= 4:
            fit = markov_mod.fit_exponent(fit_pairs, alpha_order=sum(alpha))
            lines.append(
                f"  alpha={alpha}: fitted exponent {fit.m_hat:.4f}, "
                f"constant {fit.M_hat:.4f}, log-residual {fit.residual:.2e}"
            )
        if alpha in cfg["bounds"]:
            M, m = cfg["bounds"][alpha]
            worst = max(f / ((M ** sum(alpha)) * n ** (m * sum(alpha))) for n, f in pairs)
            ok = worst <= 1 + 1e-9
            lines.append(
                f"  alpha={alpha}: bound M={M:g}, m={m:g} "
                f"{'holds' if ok else 'FAILS'} (worst ratio {worst:.4f})"
            )
        certs = [r.grid_ok for r in report.rows if r.alpha == alpha]
        lines.append(
            f"  alpha={alpha}: grid-certified {sum(1 for c in certs if c)}/{len(certs)} degrees"
        )
    return ["markov_factors.csv", "markov_witnesses.json"]


def _run_approx_block(scn, E, outdir, lines):
    cfg = scn.blocks["approx"]
    values = approx_mod.target_values(cfg["target"], E, scn.relation)
    series = approx_mod.projection_series(values, scn.relation, E, cfg["level_max"])
    series.to_csv(os.path.join(outdir, "approx_series.csv"), r_ladder=cfg["r_ladder"])
    diag = approx_mod.rapid_decrease_diagnostic(series, cfg["r_ladder"])
    lines.append(f"approx: target {cfg['target']}, levels 0..{cfg['level_max']}")
    for row in diag.rows:
        lines.append(f"  r={row.r:g}: verdict {row.verdict} (max {row.max_value:.3e})")
    cert = grid_certificate(
        series.entry(min(4, cfg["level_max"])).normal_form.reassemble(), E
    )
    lines.append(f"  grid certification: change {cert.change:.2e} ({'ok' if cert.ok else 'FLAGGED'})")
    dump = []
    for e in series.entries:
        dump.append(f"# level {e.level}, error {e.error:.17g}")
        dump.append(format_poly(e.normal_form.reassemble()))
    _write(outdir, "approx_projections.txt", "\n".join(dump) + "\n")
    return ["approx_series.csv", "approx_projections.txt"]


def _run_counterexample_block(scn, E, outdir, lines):
    cfg = scn.blocks["counterexample"]
    n_max = cfg["n_max"]
    rows = ["n,norm,n10_norm,log_norm_over_n,derivative_ratio"]
    norms = []
    for n in range(1, n_max + 1):
        nrm = approx_mod.counterexample_norm(n, E)
        norms.append(nrm)
        rows.append(
            f"{n},{nrm:.17g},{n ** 10 * nrm:.17g},{math.log(nrm) / n:.17g},{1.0 / nrm:.17g}"
        )
    _write(outdir, "counterexample.csv", "\n".join(rows) + "\n")
    lines.append(f"counterexample: norms for n = 1..{n_max} (closed form, cross-checked)")
    refuted = [n for n in range(20, n_max + 1) if 1.0 / norms[n - 1] >= float(n) ** 10]
    if refuted:
        lines.append(
            f"  derivative ratio exceeds n^10 for all n in {refuted[0]}..{refuted[-1]}: "
            "no polynomial growth bound can hold for this family"
        )
    return ["counterexample.csv"]


def _run_extension_block(scn, E, outdir, lines):
    cfg = scn.blocks["extension"]
    values = approx_mod.target_values(cfg["target"], E, scn.relation)
    series = approx_mod.projection_series(values, scn.relation, E, cfg["L"])
    model = extension_mod.build_extension(series, cfg["r"], cfg["L"])
    on_e = extension_mod.evaluate_extension_many(model, E.points)
    agreement = float(np.max(np.abs(on_e - values)))
    lines.append(
        f"extension: target {cfg['target']}, r={cfg['r']}, L={cfg['L']}, "
        f"on-set agreement {agreement:.3e}"
    )
    if "grid" in cfg:
        grid = cfg["grid"]
        box = grid.get("box")
        per_axis = int(grid.get("per_axis", 21))
        axes = [np.linspace(lo, hi, per_axis) for lo, hi in box]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.column_stack([m.ravel() for m in mesh])
        vals = extension_mod.evaluate_extension_many(model, pts)
        rows = [",".join(f"x{j+1}" for j in range(pts.shape[1])) + ",value"]
        for p, v in zip(pts, vals):
            rows.append(",".join(f"{c:.17g}" for c in p) + f",{v:.17g}")
        _write(outdir, "extension_grid.csv", "\n".join(rows) + "\n")
        return ["extension_grid.csv"]
    return []


def _run_determining_block(scn, E, outdir, lines):
    cfg = scn.blocks["determining"]
    # approximants of the zero target built from the slow counterexample
    # family when the relation matches it; otherwise scaled unit witnesses
    from .polyring import reduce_to_normal_form

    rel = scn.relation
    zero = np.zeros(E.npts)
    try:
        approx_mod._require_counterexample_set(E)
        n_levels = min(cfg["level_max"], 40)
        entries = []
        for n in range(1, n_levels + 1):
            form = reduce_to_normal_form(approx_mod.counterexample_poly(n), rel)
            nrm = approx_mod.counterexample_norm(n, E)
            entries.append(approx_mod.ApproxEntry(n, None, form, nrm, nrm))
        mode = "slow-family approximants"
        series = approx_mod.ApproxSeries(E, rel, zero, entries)
    except ValueError:
        from .markov import markov_factor_detail

        n_levels = min(cfg["level_max"], 16)
        entries = []
        alpha0 = cfg["alphas"][0]
        for l in range(1, n_levels + 1):
            det = markov_factor_detail(rel, E, l, alpha0, grading="total")
            poly = det.basis.to_normal_form(det.witness * 4.0 ** (-l))
            entries.append((l, poly))
        mode = "scaled extremal witnesses"
        series = approx_mod.series_from_normal_forms(zero, E, entries, rel)
    rows = extension_mod.determining_diagnostic(series, rel, cfg["alphas"])
    out = ["alpha,levels,final_norm,verdict"]
    for row in rows:
        astr = " ".join(str(a) for a in row.alpha)
        out.append(f"{astr},{len(row.levels)},{row.norms[-1]:.17g},{row.verdict}")
    _write(outdir, "determining.csv", "\n".join(out) + "\n")
    lines.append(f"determining: {mode}")
    for row in rows:
        lines.append(f"  alpha={row.alpha}: {row.verdict}")
    return ["determining.csv"]
