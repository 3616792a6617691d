"""Command-line front end: ``mtebounds {bounds,simulate,sweep,mte-curve,refute}``.

Every option can also come from a JSON file passed with ``--config``; flags
given on the command line win. Result files embed the resolved settings so
a run can be repeated from its own output.

Exit status: 0 on success, 2 when the assumptions are refuted by the data,
1 on any error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import continuous as cont
from .data import estimate_distribution, ingest_csv, load_distribution, save_distribution, write_csv
from .engine import EngineConfig, bounds, k_sweep, mte_curve, refute, results_to_csv
from .errors import MteBoundsError
from .latent import AssumptionSpec
from .simulation import DgpSpec, paper_dgp, population_distribution, sample
from .targets import TargetSpec

EXIT_OK, EXIT_ERROR, EXIT_REFUTED = 0, 1, 2


@dataclass
class RunConfig:
    subcommand: str = "bounds"
    data: str | None = None
    distribution: str | None = None
    simulate: str | None = None
    population: bool = False
    n: int | None = None
    seed: int | None = None
    y_col: str = "y"
    d_col: str = "d"
    z_col: str = "z"
    w_col: str | None = None
    x_cols: list = field(default_factory=list)
    weight_col: str | None = None
    target: str = "ate"
    x: int | None = None
    w: int | None = None
    point: float | None = None
    interval: list | None = None
    policy: dict | None = None
    assume: list = field(default_factory=list)
    K: int | None = None
    K_y: int | None = None
    eta: float = 0.0
    norm_mode: str = "Linf"
    use_w: bool = False
    w_in_selection: bool = False
    rescale: bool = False
    continuous_y: bool = False
    k_list: list | None = None
    grid: list | None = None
    grid_size: int = 11
    output: str | None = None


def parse_assumption(text: str) -> AssumptionSpec:
    """``U0`` (auto direction) or ``U0=1,-1`` (explicit signs per W level)."""
    kind, _, signs = str(text).partition("=")
    if not signs or signs.strip() == "auto":
        return AssumptionSpec(kind.strip(), "auto")
    return AssumptionSpec(kind.strip(), tuple(int(s) for s in signs.split(",")))


def _assumptions(cfg: RunConfig) -> tuple:
    out = []
    for a in cfg.assume:
        out.extend(a.split("+") if isinstance(a, str) else [a])
    specs = [parse_assumption(a) if isinstance(a, str) else AssumptionSpec(a["kind"], a.get("direction", "auto"))
             for a in out]
    return tuple(s for s in specs if s.kind != "NONE")


def _target(cfg: RunConfig) -> TargetSpec:
    return TargetSpec(cfg.target, x=cfg.x, w=cfg.w, point=cfg.point,
                      interval=tuple(cfg.interval) if cfg.interval else None, policy=cfg.policy)


def _engine_config(cfg: RunConfig) -> EngineConfig:
    return EngineConfig(K=50 if cfg.K is None else cfg.K, assumptions=_assumptions(cfg), eta=cfg.eta,
                        norm_mode=cfg.norm_mode, w_in_selection=cfg.w_in_selection,
                        rescale=cfg.rescale, use_w=cfg.use_w)


def _dgp(cfg: RunConfig) -> DgpSpec:
    if cfg.simulate in (None, "paper"):
        return paper_dgp()
    return DgpSpec.from_dict(json.loads(Path(cfg.simulate).read_text()))


def _load_distribution(cfg: RunConfig):
    sources = [s for s in (cfg.data, cfg.distribution, cfg.simulate) if s]
    if len(sources) != 1:
        raise MteBoundsError("give exactly one of --data, --distribution, --simulate")
    if cfg.distribution:
        return load_distribution(cfg.distribution)
    if cfg.data:
        data = ingest_csv(cfg.data, cfg.y_col, cfg.d_col, cfg.z_col, cfg.w_col, cfg.x_cols)
        return estimate_distribution(data, cfg.w_in_selection)
    dgp = _dgp(cfg)
    if cfg.n is None or cfg.population:
        return population_distribution(dgp)
    return estimate_distribution(sample(dgp, cfg.n, cfg.seed), cfg.w_in_selection)


def _load_sample(cfg: RunConfig) -> cont.ContinuousSample:
    if cfg.data:
        return cont.read_sample_csv(cfg.data, cfg.y_col, cfg.d_col, cfg.z_col, cfg.w_col,
                                    cfg.x_cols, cfg.weight_col)
    return cont.sample_from_distribution(_load_distribution(cfg))


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.output:
        Path(cfg.output).write_text(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, default=lambda v: v.tolist() if isinstance(v, np.ndarray) else str(v)) + "\n"


def cmd_bounds(cfg: RunConfig) -> int:
    spec = _target(cfg)
    if cfg.continuous_y:
        ccfg = cont.ContinuousConfig(K=5 if cfg.K is None else cfg.K, K_y=cfg.K_y, eta=cfg.eta,
                                     w_in_selection=cfg.w_in_selection, use_w=cfg.use_w)
        result = cont.bounds_continuous(_load_sample(cfg), spec, ccfg)
    else:
        result = bounds(_load_distribution(cfg), spec, _engine_config(cfg))
    out = result.to_dict()
    out["config"] = asdict(cfg)
    _emit(cfg, _dump(out))
    return EXIT_REFUTED if result.refuted else EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    dgp = _dgp(cfg)
    if cfg.population or cfg.n is None:
        dist = population_distribution(dgp)
        if cfg.output:
            save_distribution(dist, cfg.output)
        else:
            _emit(cfg, _dump(dist.to_dict()))
        return EXIT_OK
    data = sample(dgp, cfg.n, cfg.seed)
    if not cfg.output:
        raise MteBoundsError("simulate --n needs --output for the sample CSV")
    write_csv(data, cfg.output)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    if not cfg.k_list:
        raise MteBoundsError("sweep needs a nonempty --k-list")
    results = k_sweep(_load_distribution(cfg), _target(cfg), _engine_config(cfg), cfg.k_list)
    _emit(cfg, results_to_csv(results))
    return EXIT_REFUTED if all(r.refuted for r in results) else EXIT_OK


def cmd_mte_curve(cfg: RunConfig) -> int:
    grid = cfg.grid if cfg.grid else np.linspace(0.0, 1.0, cfg.grid_size).tolist()
    rows, report = mte_curve(_load_distribution(cfg), _engine_config(cfg), grid, x=cfg.x, w=cfg.w)
    out = {"grid": [r[0] for r in rows], "lower": [r[1] for r in rows], "upper": [r[2] for r in rows],
           "uniform_sharpness": report.to_dict(), "config": asdict(cfg)}
    _emit(cfg, _dump(out))
    return EXIT_REFUTED if np.isnan(out["lower"][0]) else EXIT_OK


def cmd_refute(cfg: RunConfig) -> int:
    ecfg = _engine_config(cfg)
    res = refute(_load_distribution(cfg), ecfg.assumptions, ecfg)
    out = res.to_dict()
    out["config"] = asdict(cfg)
    _emit(cfg, _dump(out))
    return EXIT_REFUTED if res.refuted else EXIT_OK


COMMANDS = {"bounds": cmd_bounds, "simulate": cmd_simulate, "sweep": cmd_sweep,
            "mte-curve": cmd_mte_curve, "refute": cmd_refute}


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


class _Parser(argparse.ArgumentParser):
    # usage errors share the generic error status; 2 is reserved for refutation
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mtebounds", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    S = argparse.SUPPRESS
    for name in COMMANDS:
        p = sub.add_parser(name, argument_default=S)
        p.add_argument("--config", help="JSON file with default settings")
        p.add_argument("--output", "-o")
        src = p.add_argument_group("input")
        src.add_argument("--data", help="CSV micro-data")
        src.add_argument("--distribution", help="distribution JSON")
        src.add_argument("--simulate", help="'paper' or a DGP JSON file")
        src.add_argument("--population", action="store_true", help="use the exact population distribution")
        src.add_argument("--n", type=_positive_int, help="sample size for simulation")
        src.add_argument("--seed", type=int)
        src.add_argument("--y-col", dest="y_col")
        src.add_argument("--d-col", dest="d_col")
        src.add_argument("--z-col", dest="z_col")
        src.add_argument("--w-col", dest="w_col")
        src.add_argument("--x-cols", dest="x_cols", nargs="+")
        src.add_argument("--weight-col", dest="weight_col")
        if name == "simulate":
            continue
        m = p.add_argument_group("model")
        m.add_argument("--target")
        m.add_argument("--x", type=int)
        m.add_argument("--w", type=int)
        m.add_argument("--point", type=float)
        m.add_argument("--interval", type=float, nargs=2)
        m.add_argument("--assume", nargs="+", help="e.g. none, U0, M C, U=1,-1, Ustar")
        m.add_argument("--K", "-K", type=_positive_int)
        m.add_argument("--K-y", dest="K_y", type=_positive_int)
        m.add_argument("--eta", type=float)
        m.add_argument("--norm-mode", dest="norm_mode", choices=("Linf", "L1"))
        m.add_argument("--use-w", dest="use_w", action="store_true")
        m.add_argument("--no-w", dest="use_w", action="store_false")
        m.add_argument("--w-in-selection", dest="w_in_selection", action="store_true")
        m.add_argument("--rescale", action="store_true")
        m.add_argument("--continuous-y", dest="continuous_y", action="store_true")
        m.add_argument("--k-list", dest="k_list", type=_positive_int, nargs="+")
        m.add_argument("--grid", type=float, nargs="+")
        m.add_argument("--grid-size", dest="grid_size", type=_positive_int)
    return parser


def resolve_config(argv=None) -> RunConfig:
    """Parse ``argv`` and merge it over the ``--config`` file and the defaults."""
    parser = build_parser()
    ns = vars(parser.parse_args(argv))
    merged = {}
    if "config" in ns:
        try:
            merged.update(json.loads(Path(ns.pop("config")).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"cannot read config: {exc}")
    merged.update(ns)
    known = RunConfig.__dataclass_fields__
    unknown = sorted(set(merged) - set(known))
    if unknown:
        parser.error(f"unknown config key(s): {unknown}")
    if isinstance(merged.get("assume"), str):
        merged["assume"] = [merged["assume"]]
    if isinstance(merged.get("x_cols"), str):
        merged["x_cols"] = [merged["x_cols"]]
    return RunConfig(**merged)


def main(argv=None) -> int:
    try:
        cfg = resolve_config(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_ERROR
    try:
        return COMMANDS[cfg.subcommand](cfg)
    except (MteBoundsError, OSError, ValueError) as exc:
        print(f"mtebounds {cfg.subcommand}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
