"""Command-line front end.

Subcommands ``paths``, ``converge``, ``moments`` and ``check``.  Settings come
from built-in defaults, then an optional ``key = value`` config file
(``--config``), then command-line flags.  Exit codes: 0 success, 1 usage
error, 2 numerical failure, 3 failed assumption check.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from .assumptions import L_CAP, check_all
from .errors import NumericalFailure, UsageError
from .model import BUILTINS, ModelDomain, builtin_parameters, make_builtin
from .noise import ITER_MODES, NoiseStream, generate_increments
from .scheme import SCHEMES, SchemeConfig, integrate
from .study import (
    StudyConfig,
    fit_rate,
    fmt,
    moment_csv,
    moment_sweep,
    strong_errors,
    study_csv,
)

SUBCOMMANDS = ("paths", "converge", "moments", "check")

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_CHECK = 0, 1, 2, 3


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise ValueError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> List[float]:
    return [float(v) for v in text.replace(" ", "").split(",") if v]


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _choice(options: Sequence[str]) -> Callable[[str], str]:
    def parse(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return text
    return parse


def _optional(parse):
    def wrapped(text: str):
        return None if text.strip().lower() in ("", "none", "default") else parse(text)
    return wrapped


@dataclass(frozen=True)
class Key:
    parse: Callable[[str], Any]
    default: Any
    help: str


KEYS: Dict[str, Key] = {
    "model": Key(_choice(sorted(BUILTINS)), "paper-example", "built-in model"),
    "scheme": Key(_choice(SCHEMES), "tamed-milstein", "integration scheme"),
    "theta": Key(float, 1.0, "taming exponent (>= 1/2; tamed-euler always uses 1/2)"),
    "sigma0": Key(_optional(float), None, "diffusion scale of the model (model default if unset)"),
    "mu": Key(_optional(float), None, "drift rate of the gbm model (model default if unset)"),
    "x0": Key(_optional(_float_list), None, "initial state, comma separated (default 1 in every component)"),
    "T": Key(float, 1.0, "time horizon"),
    "p": Key(float, 2.0, "error exponent of the strong L^p error"),
    "n_list": Key(_int_list, [16, 32, 64, 128, 256, 512], "step counts, comma separated"),
    "n_ref": Key(int, 8192, "reference step count"),
    "n": Key(_optional(int), None, "step count for 'paths' (default: largest of n_list)"),
    "path_index": Key(int, 0, "path drawn by 'paths'"),
    "paths": Key(int, 4096, "Monte Carlo paths M"),
    "seed": Key(int, 42, "random seed"),
    "batches": Key(int, 10, "batches for the standard error"),
    "reference": Key(_choice(("scheme", "exact")), "scheme", "reference solution for 'converge'"),
    "iter_mode": Key(_optional(_choice(ITER_MODES)), None, "iterated-integral mode (auto if unset)"),
    "levy_terms": Key(_optional(int), None, "Fourier terms of the Levy-area sampler (auto if unset)"),
    "sup_grid": Key(_bool, False, "report the max over coarse grid times instead of the terminal error"),
    "q": Key(float, 2.0, "moment order for 'moments'"),
    "p0": Key(float, 14.0, "moment exponent of the coercivity check"),
    "p1": Key(float, 3.5, "exponent of the one-sided Lipschitz check"),
    "samples": Key(int, 10_000, "sample count for 'check'"),
    "domain_lo": Key(_optional(float), None, "lower edge of the check box (model default if unset)"),
    "domain_hi": Key(_optional(float), None, "upper edge of the check box (model default if unset)"),
    "L_cap": Key(float, L_CAP, "largest acceptable constant L in 'check'"),
    "workers": Key(int, 1, "worker threads (never changes the output)"),
    "output": Key(_optional(str), None, "CSV output path (stdout if unset)"),
}


@dataclass
class RunConfig:
    subcommand: str
    values: Dict[str, Any] = field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.__dict__["values"][name]
        except KeyError:
            raise AttributeError(name) from None


def _canonical(key: str) -> str:
    key = key.strip().replace("-", "_")
    for k in KEYS:
        if k.lower() == key.lower():
            return k
    return key


def _convert(key: str, raw: str, where: str):
    if key not in KEYS:
        raise UsageError(f"unknown key {key!r}{where}")
    try:
        return KEYS[key].parse(raw.strip())
    except ValueError as exc:
        raise UsageError(f"bad value for {key!r}{where}: {exc}") from None


def parse_config_text(text: str) -> Dict[str, Any]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = line.split("=", 1)
        key = _canonical(key)
        values[key] = _convert(key, raw, f" (line {lineno})")
    return values


def parse_config(subcommand: str, text: str = "", overrides: Optional[Dict[str, str]] = None) -> RunConfig:
    """Resolve defaults, config-file text and flag overrides into a validated config."""
    if subcommand not in SUBCOMMANDS:
        raise UsageError(f"unknown subcommand {subcommand!r}")
    values = {k: spec.default for k, spec in KEYS.items()}
    values.update(parse_config_text(text))
    for key, raw in (overrides or {}).items():
        key = _canonical(key)
        values[key] = _convert(key, raw, " (command line)")
    cfg = RunConfig(subcommand, values)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    if cfg.theta < 0.5:
        raise UsageError(f"'theta' must be >= 1/2, got {cfg.theta}")
    if cfg.T <= 0:
        raise UsageError("'T' must be positive")
    if cfg.paths < 1:
        raise UsageError("'paths' must be positive")
    if cfg.batches < 2 or cfg.batches > cfg.paths:
        raise UsageError("'batches' must lie in [2, paths]")
    if cfg.workers < 1:
        raise UsageError("'workers' must be positive")
    if not cfg.n_list or any(n < 1 for n in cfg.n_list):
        raise UsageError("'n_list' must hold positive step counts")
    if cfg.levy_terms is not None and cfg.levy_terms < 1:
        raise UsageError("'levy_terms' must be >= 1")


def _model(cfg: RunConfig):
    params = {}
    defaults = builtin_parameters(cfg.model)
    for name in ("sigma0", "mu"):
        value = cfg.values[name]
        if value is None:
            continue
        if name not in defaults:
            raise UsageError(f"model {cfg.model!r} has no parameter {name!r}")
        params[name] = value
    return make_builtin(cfg.model, **params)


def _x0(cfg: RunConfig, d: int) -> np.ndarray:
    if cfg.x0 is None:
        return np.ones(d)
    x0 = np.asarray(cfg.x0, dtype=float)
    if x0.size == 1:
        return np.full(d, x0[0])
    if x0.size != d:
        raise UsageError(f"'x0' needs {d} components, got {x0.size}")
    return x0


def _study(cfg: RunConfig, model) -> StudyConfig:
    theta = None if cfg.scheme == "tamed-euler" else cfg.theta
    return StudyConfig(
        model=model, scheme=cfg.scheme, p=cfg.p, n_list=cfg.n_list, n_ref=cfg.n_ref, M=cfg.paths,
        seed=cfg.seed, T=cfg.T, x0=_x0(cfg, model.d), theta=theta, batches=cfg.batches,
        reference=cfg.reference, iter_mode=cfg.iter_mode, levy_terms=cfg.levy_terms,
        sup_grid=cfg.sup_grid, workers=cfg.workers,
    )


def _emit(cfg: RunConfig, text: str, summary: List[str]):
    if cfg.output:
        with open(cfg.output, "w", newline="") as fh:
            fh.write(text)
        for line in summary:
            print(line)
    else:
        sys.stdout.write(text)
        for line in summary:
            print(line, file=sys.stderr)


def _run_paths(cfg: RunConfig) -> int:
    model = _model(cfg)
    n = cfg.n or max(cfg.n_list)
    theta = None if cfg.scheme == "tamed-euler" else cfg.theta
    scheme = SchemeConfig(cfg.scheme, n, theta, cfg.T, _x0(cfg, model.d))
    stream = NoiseStream(cfg.seed, cfg.path_index)
    grid = generate_increments(stream, n, model.m, cfg.T)
    traj = integrate(model, scheme, grid, cfg.iter_mode, cfg.levy_terms, stream=stream)
    lines = ["t," + ",".join(f"x{i + 1}" for i in range(model.d))]
    for t, x in zip(traj.times, traj.states):
        lines.append(",".join([fmt(t)] + [fmt(v) for v in x]))
    lines.append(f"#diverged={'true' if bool(traj.diverged) else 'false'}")
    _emit(cfg, "\n".join(lines) + "\n", [f"{cfg.scheme} path {cfg.path_index}: x_T = {traj.final.tolist()}"])
    return EXIT_OK


def _run_converge(cfg: RunConfig) -> int:
    study = _study(cfg, _model(cfg))
    study.validate_levels()
    records = strong_errors(study)
    summary = []
    try:
        fit = fit_rate(records)
        summary.append(f"order ≈ {fit.slope:.4f} (r2 = {fit.r2:.4f})")
    except UsageError as exc:
        summary.append(f"order ≈ undefined ({exc})")
    _emit(cfg, study_csv(study, records), summary)
    return EXIT_OK


def _run_moments(cfg: RunConfig) -> int:
    study = _study(cfg, _model(cfg))
    records = moment_sweep(study, cfg.q)
    finite = [r.moment for r in records if math.isfinite(r.moment)]
    summary = []
    if finite and min(finite) > 0:
        summary.append(f"max/min moment ratio = {max(finite) / min(finite):.4f}")
    summary.append(f"diverged paths = {sum(r.diverged_count for r in records)}")
    _emit(cfg, moment_csv(study, cfg.q, records), summary)
    return EXIT_OK


def _check_domain(cfg: RunConfig, model) -> ModelDomain:
    lo = model.domain.lower if cfg.domain_lo is None else np.full(model.d, cfg.domain_lo)
    hi = model.domain.upper if cfg.domain_hi is None else np.full(model.d, cfg.domain_hi)
    return ModelDomain(lo, hi)


def _bound(values: np.ndarray) -> str:
    return ";".join(fmt(v) for v in values)


def _run_check(cfg: RunConfig) -> int:
    model = _model(cfg)
    domain = _check_domain(cfg, model)
    reports = check_all(model, cfg.p0, cfg.p1, domain, cfg.samples, NoiseStream(cfg.seed), cfg.L_cap)
    table = [f"{'assumption':<11}{'passed':<8}{'estimated_L':>16}{'growth':>10}  worst point"]
    for r in reports:
        table.append(f"{r.assumption:<11}{str(r.passed):<8}{r.estimated_L:>16.6g}{r.growth:>10.3g}  "
                     f"{np.round(r.worst_point, 6).tolist()}")
    table.append(f"model={model.name} params={model.params} box=[{_bound(domain.lower)}, "
                 f"{_bound(domain.upper)}] samples={cfg.samples} seed={cfg.seed}")
    print("\n".join(table))
    if cfg.output:
        rows = ["assumption,passed,estimated_L,samples,domain_lo,domain_hi,seed"]
        for r in reports:
            rows.append(",".join([r.assumption, str(r.passed).lower(), fmt(r.estimated_L), str(r.samples),
                                  _bound(domain.lower), _bound(domain.upper), str(cfg.seed)]))
        with open(cfg.output, "w", newline="") as fh:
            fh.write("\n".join(rows) + "\n")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_CHECK


RUNNERS = {"paths": _run_paths, "converge": _run_converge, "moments": _run_moments, "check": _run_check}


def run(config: RunConfig) -> int:
    """Execute a resolved config and map failures onto exit codes."""
    try:
        return RUNNERS[config.subcommand](config)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value config file")
    for key, spec in KEYS.items():
        default = spec.default
        if isinstance(default, list):
            default = ",".join(str(v) for v in default)
        flag = "--" + key.replace("_", "-")
        extra = {"nargs": "?", "const": "true"} if spec.parse is _bool else {}
        common.add_argument(flag, dest=key, metavar="VALUE", default=argparse.SUPPRESS,
                            help=f"{spec.help} [default: {default}]", **extra)
    parser = argparse.ArgumentParser(
        prog="tamed-milstein",
        description="Tamed Milstein scheme: sample paths, convergence studies, moment sweeps, assumption checks.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, text in [
        ("paths", "dump one sample path as CSV"),
        ("converge", "strong-error study and fitted convergence order"),
        ("moments", "terminal moment sweep over step counts"),
        ("check", "sampling checks of the coefficient assumptions"),
    ]:
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    overrides = {k: v for k, v in vars(args).items() if k not in ("subcommand", "config")}
    try:
        text = ""
        if args.config:
            with open(args.config) as fh:
                text = fh.read()
        config = parse_config(args.subcommand, text, overrides)
    except (UsageError, OSError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
