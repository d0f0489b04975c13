"""Command-line interface.

Exit status: 0 on success, 2 when inputs fail validation, 1 on any other
error.  Stochastic commands require ``--seed``.  Every output carries the
resolved configuration: JSON outputs in their ``metadata`` field, CSV
outputs in a ``<out>.meta.json`` sidecar.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import sys
import warnings
from collections.abc import Callable, Sequence
from dataclasses import asdict, replace
from pathlib import Path
from typing import Any

from . import __version__
from .datamodel import (
    SCHEMA_VERSION,
    Estimate,
    FrameSurvey,
    HiddenSurvey,
    KnownPopulationRegistry,
    ProbeGroup,
    combine_digests,
)
from .errors import ValidationError
from .estimators import (
    AdjustmentFactors,
    Provenance,
    adjusted_scaleup,
    basic_scaleup,
    degree_ratio,
    frame_ratio,
    generalized_scaleup,
    internal_consistency,
    probe_alter_table,
    true_positive_rate,
)
from .io import _read_rows, load_frame_survey, load_hidden_survey, load_json, load_registry
from .netsim import SimConfig
from .sensitivity import (
    SensitivityScenario,
    adjust_generalized,
    adjust_modified_basic,
    scenario_grid,
)
from .simharness import TABLE_COLUMNS, expand_grid, run_grid, write_table
from .variance import IntervalMethod, IntervalSpec, bootstrap_estimate

EXIT_OK, EXIT_INTERNAL, EXIT_INVALID = 0, 1, 2
ADJUST_VARIANTS = ("classic_phi_delta_tau", "modified_delta_tau", "modified_with_eta")


def _groups(text: str | None) -> list[str] | None:
    return None if text is None else [g.strip() for g in text.split(",") if g.strip()]


def _factors(text: str | None) -> dict[str, float]:
    out: dict[str, float] = {}
    if not text:
        return out
    for part in text.split(","):
        key, sep, val = part.partition("=")
        key = key.strip()
        if not sep or key not in ("phi", "delta", "tau", "eta"):
            raise ValidationError(f"bad --factors entry {part!r}; use phi=..,delta=..,tau=..,eta=..")
        try:
            out[key] = float(val)
        except ValueError:
            raise ValidationError(f"--factors {key} is not a number: {val!r}") from None
    return out


def _config(args: argparse.Namespace) -> dict[str, Any]:
    return {k: v for k, v in vars(args).items() if k != "func"}


def _emit_json(obj: Any, out: str | None) -> None:
    text = json.dumps(obj, indent=2) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _emit_csv(rows: list[dict[str, Any]], columns: Sequence[str], out: str | None,
              meta: dict[str, Any]) -> None:
    if out is None:
        buf = _io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({c: repr(v) if isinstance(v, float) else v for c, v in r.items()})
        sys.stdout.write(buf.getvalue())
        return
    write_table(rows, out, columns)
    Path(out + ".meta.json").write_text(json.dumps(meta, indent=2) + "\n")


def _meta(args: argparse.Namespace, **extra: Any) -> dict[str, Any]:
    return {"schema_version": SCHEMA_VERSION, "version": __version__,
            "command": args.command, "config": _config(args), **extra}


# --------------------------------------------------------------------------
# estimate / bootstrap
# --------------------------------------------------------------------------


def _load_inputs(args: argparse.Namespace):
    reg = load_registry(args.registry)
    frame = load_frame_survey(args.frame, reg, top_code=args.top_code)
    hidden = None
    if args.hidden is not None:
        hidden = load_hidden_survey(args.hidden, reg, top_code=args.top_code)
    return reg, frame, hidden


def _estimator(args: argparse.Namespace, reg, hidden_present: bool
               ) -> tuple[Callable[[FrameSurvey, HiddenSurvey | None], float], dict[str, Any]]:
    """The point-estimate function for ``args.method`` and its provenance notes."""
    groups = _groups(args.groups)
    ws = args.weight_scale
    method = args.method
    notes: dict[str, Any] = {}
    if method == "generalized" and not hidden_present:
        raise ValidationError("--method generalized needs --hidden")
    if method == "basic":
        return (lambda f, h: basic_scaleup(f, reg, "classic", groups, ws)), notes
    if method == "modified":
        return (lambda f, h: basic_scaleup(f, reg, "modified", groups, ws)), notes
    if method == "generalized":
        return (lambda f, h: generalized_scaleup(f, h, reg, _groups(args.hidden_groups), ws)), notes

    given = _factors(args.factors)
    variant = args.adjust_variant
    basic_variant = "classic" if variant == "classic_phi_delta_tau" else "modified"
    need = {"delta", "tau"} | ({"phi"} if variant == "classic_phi_delta_tau" else set())
    need |= {"eta"} if variant == "modified_with_eta" else set()
    provenance = {k: Provenance.ASSUMED.value for k in given}
    for k in sorted(need - set(given)):
        if k in ("delta", "tau") and not hidden_present:
            raise ValidationError(f"factor {k} is neither given in --factors nor estimable without --hidden")
        if k == "phi" and not (args.ff_groups and args.uf_groups):
            raise ValidationError("factor phi needs --factors phi=.. or both --ff-groups and --uf-groups")
        if k == "eta":
            raise ValidationError("factor eta cannot be estimated; pass --factors eta=..")
        provenance[k] = Provenance.ESTIMATED.value
    notes["factor_provenance"] = provenance
    notes["basic_variant"] = basic_variant

    def fn(f: FrameSurvey, h: HiddenSurvey | None) -> float:
        vals = dict(given)
        if "delta" in need and "delta" not in vals:
            vals["delta"] = degree_ratio(h, f, reg, _groups(args.hidden_groups))
        if "tau" in need and "tau" not in vals:
            vals["tau"] = true_positive_rate(h, _groups(args.hidden_groups))
        if "phi" in need and "phi" not in vals:
            vals["phi"] = frame_ratio(f, reg.subset(_groups(args.ff_groups)),
                                      reg.subset(_groups(args.uf_groups)), ws)
        basic = basic_scaleup(f, reg, basic_variant, groups, ws)
        return adjusted_scaleup(basic, AdjustmentFactors(**vals), variant)

    return fn, notes


def _run_estimate(args: argparse.Namespace, force_bootstrap: bool) -> int:
    reg, frame, hidden = _load_inputs(args)
    fn, notes = _estimator(args, reg, hidden is not None)
    boot = args.bootstrap if not force_bootstrap else args.resampler
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if boot == "none":
            value = fn(frame, hidden)
            digest = combine_digests(frame.digest(), "" if hidden is None else hidden.digest())
            est = Estimate(value, args.method, digest)
        else:
            if args.seed is None:
                raise ValidationError("bootstrap intervals need --seed")
            method = IntervalMethod.SIMPLE_BOOT if boot == "simple" else IntervalMethod.RESCALED_BOOT
            if hidden is not None:
                method = IntervalMethod.TWO_SAMPLE_BOOT
            est = bootstrap_estimate(
                fn, frame, hidden, IntervalSpec(args.level, method), args.replicates, args.seed,
                hidden_resampler=args.hidden_bootstrap, frame_resampler=boot,
                threads=args.threads, method_name=args.method,
            )
    meta = dict(est.metadata)
    meta.update(notes)
    meta.update(_meta(args))
    meta["warnings"] = sorted({str(w.message) for w in caught})
    for w in meta["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    _emit_json(replace(est, metadata=meta).to_dict(), args.out)
    return EXIT_OK


def cmd_estimate(args: argparse.Namespace) -> int:
    return _run_estimate(args, force_bootstrap=False)


def cmd_bootstrap(args: argparse.Namespace) -> int:
    return _run_estimate(args, force_bootstrap=True)


# --------------------------------------------------------------------------
# simulate / sensitivity / check
# --------------------------------------------------------------------------


def cmd_simulate(args: argparse.Namespace) -> int:
    spec = load_json(args.grid) if args.grid else {}
    if not isinstance(spec, dict):
        raise ValidationError("grid file must hold a JSON object")
    base, cells = expand_grid(spec)
    if args.n is not None:
        base = replace(base, n=args.n)
    results, table = run_grid(
        cells, base, n_networks=args.networks, n_surveys=args.surveys,
        frame_n=args.frame_n, hidden_n=args.hidden_n, seed=args.seed,
        hidden_exponent=args.hidden_exponent,
        probe_design="biased" if args.biased_probes else "partition",
        threads=args.threads,
    )
    if args.rows_out:
        rows = [
            {"cell": i, **{k: getattr(r.cfg, k) for k in ("rho", "p_frame", "tau")}, **asdict(row)}
            for i, r in enumerate(results) for row in r.rows
        ]
        write_table(rows, args.rows_out)
    meta = _meta(args, base=base.to_dict(), cells=cells, seed=args.seed)
    _emit_csv(table, TABLE_COLUMNS, args.out, meta)
    return EXIT_OK


def cmd_sensitivity(args: argparse.Namespace) -> int:
    if (args.estimate is None) == (args.value is None):
        raise ValidationError("give exactly one of --estimate or --value")
    value = load_estimate_value(args.estimate) if args.estimate else args.value
    spec = load_json(args.grid) if args.grid else {}
    if not isinstance(spec, dict):
        raise ValidationError("scenario grid must be a JSON object of field -> values")
    adjust = adjust_generalized if args.estimator == "generalized" else adjust_modified_basic
    rows = []
    for sc in scenario_grid(spec):
        adjusted = adjust(value, sc)
        rows.append({**asdict(sc), "estimate": value, "adjusted": adjusted,
                     "multiplier": adjusted / value if value else float("nan")})
    columns = list(SensitivityScenario.FIELDS) + ["estimate", "adjusted", "multiplier"]
    _emit_csv(rows, columns, args.out, _meta(args, rows=len(rows)))
    return EXIT_OK


def load_estimate_value(path: str) -> float:
    data = load_json(path)
    try:
        return float(data["value"])
    except (KeyError, TypeError, ValueError):
        raise ValidationError(f"{path}: no numeric 'value' field") from None


def cmd_check(args: argparse.Namespace) -> int:
    if args.what == "probe-alters":
        reg = load_registry(args.registry) if args.registry else None
        if reg is None:
            frame = _frame_without_registry(args.frame, args.top_code)
        else:
            frame = load_frame_survey(args.frame, reg, top_code=args.top_code)
        rows = [asdict(r) for r in probe_alter_table(frame)]
        cols = ["group_id", "members_sampled", "mean_y_members", "mean_y_all", "difference"]
        _emit_csv(rows, cols, args.out, _meta(args))
        return EXIT_OK
    if args.registry is None:
        raise ValidationError("internal-consistency needs --registry")
    reg = load_registry(args.registry)
    frame = load_frame_survey(args.frame, reg, top_code=args.top_code)
    rows = [asdict(r) for r in internal_consistency(frame, reg, args.variant, args.weight_scale)]
    _emit_csv(rows, ["group_id", "known_size", "estimate"], args.out, _meta(args))
    return EXIT_OK


def _frame_without_registry(path: str, top_code: int | None) -> FrameSurvey:
    """Load a frame survey using a registry synthesized from its own columns."""
    header, _ = _read_rows(path)
    gids = [h[2:] for h in header if h.startswith("y_") and h not in ("y_hidden", "y_probe")]
    if not gids:
        raise ValidationError("probe-alter check without --registry needs y_<group> columns")
    reg = KnownPopulationRegistry(tuple(ProbeGroup(g, 1, 1) for g in gids), 1, 1)
    return load_frame_survey(path, reg, top_code=top_code)


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------


def _add_inputs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--frame", required=True, help="frame survey CSV")
    p.add_argument("--hidden", help="hidden-population survey CSV")
    p.add_argument("--registry", required=True, help="known-population registry JSON")
    p.add_argument("--method", required=True,
                   choices=("basic", "modified", "generalized", "adjusted"))
    p.add_argument("--groups", help="comma-separated probe groups for frame degrees")
    p.add_argument("--hidden-groups", help="comma-separated probe groups for visibility")
    p.add_argument("--factors", help="phi=..,delta=..,tau=..,eta=.. (adjusted method)")
    p.add_argument("--adjust-variant", choices=ADJUST_VARIANTS, default="classic_phi_delta_tau")
    p.add_argument("--ff-groups", help="groups typical of the frame, to estimate phi")
    p.add_argument("--uf-groups", help="groups typical of the population, to estimate phi")
    p.add_argument("--weight-scale", choices=("absolute", "relative"), default="absolute")
    p.add_argument("--top-code", type=int, default=None, help="cap every count (30 is customary)")
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--replicates", type=int, default=1000)
    p.add_argument("--hidden-bootstrap", choices=("simple", "rds"), default="simple")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", help="output path (stdout if omitted)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gnsum", description="Network scale-up estimation.")
    parser.add_argument("--version", action="version", version=f"gnsum {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="point estimate, optionally with a bootstrap interval")
    _add_inputs(p)
    p.add_argument("--bootstrap", choices=("none", "simple", "rescaled"), default="none")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("bootstrap", help="percentile bootstrap interval")
    _add_inputs(p)
    p.add_argument("--resampler", choices=("simple", "rescaled"), default="rescaled",
                   help="frame resampler")
    p.set_defaults(func=cmd_bootstrap)

    p = sub.add_parser("simulate", help="run the simulation grid")
    p.add_argument("--grid", help="grid JSON (base, axes, cells); default grid if omitted")
    p.add_argument("--out", help="cell summary CSV (stdout if omitted)")
    p.add_argument("--rows-out", help="also write every survey-level row to this CSV")
    p.add_argument("--networks", type=int, default=3)
    p.add_argument("--surveys", type=int, default=100)
    p.add_argument("--frame-n", type=int, default=500)
    p.add_argument("--hidden-n", type=int, default=30)
    p.add_argument("--hidden-exponent", type=float, default=1.0,
                   help="hidden sample drawn proportional to degree**exponent")
    p.add_argument("--n", type=int, default=None, help="override population size")
    p.add_argument("--biased-probes", action="store_true",
                   help="draw probe groups from high-degree nodes")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sensitivity", help="adjust an estimate over a scenario grid")
    p.add_argument("--estimate", help="Estimate JSON whose value is adjusted")
    p.add_argument("--value", type=float, help="estimate value given directly")
    p.add_argument("--estimator", choices=("generalized", "modified"), default="generalized")
    p.add_argument("--grid", help="JSON object of scenario field -> list of values")
    p.add_argument("--out", help="output CSV (stdout if omitted)")
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("check", help="diagnostics on a frame survey")
    p.add_argument("what", choices=("probe-alters", "internal-consistency"))
    p.add_argument("--frame", required=True)
    p.add_argument("--registry")
    p.add_argument("--variant", choices=("classic", "modified"), default="classic")
    p.add_argument("--weight-scale", choices=("absolute", "relative"), default="absolute")
    p.add_argument("--top-code", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - last-resort reporting for the exit-code contract
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
