"""Scenario runner and report emitter.

Usage::

    hypannulus run [--config FILE] [--scenario TAG] [--space h2|h3|h4c] [--band B,A]
                   [--powers N] [--norm TAG] [--out DIR] [--format json|csv]
    hypannulus suite --acceptance

Config files hold ``key = value`` lines (``#`` starts a comment); flags
override the file.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import annulus as an
from . import norms as nm
from .core import NAMED_SPACES, RadialFunction, SpectralFunction, make_radial_grid, make_space
from .errors import ConfigError, HypAnnulusError, ScenarioError
from .spherical import phi_table
from .transforms import inverse_spherical_transform, spectral_grid_for

__all__ = ["ScenarioConfig", "ReportBundle", "SCENARIOS", "load_config", "run_scenario", "emit_report", "main"]

SCENARIOS = (
    "annulus-band",
    "ball-band",
    "eigen",
    "collapse-weak",
    "collapse-weighted",
    "sequence-mode",
    "counterexample-lpq",
)
PROFILES = ("raised-cosine", "smooth-bump")
FORMATS = ("json", "csv")


@dataclass
class ScenarioConfig:
    """Everything a scenario run depends on; ``validate`` checks all preconditions."""

    scenario: str = "annulus-band"
    m_gamma: int = 2
    m_2gamma: int = 0
    t_max: float = 25.0
    n_t: int = 4096
    grading: str = "graded"
    lambda_max: float = 20.0
    n_lambda: int = 801
    band: tuple = (1.0, 2.0)
    profile: str = "raised-cosine"
    alpha: float = 1.0
    N: int = 40
    norm_tag: str | None = None
    weight_M: int = 1
    delta: float = 4.0
    p: float = 1.5
    out: str = "report"
    format: str = "json"

    def effective_norm(self) -> str:
        if self.norm_tag:
            return self.norm_tag
        if self.scenario == "collapse-weighted":
            return f"weighted:{self.weight_M}"
        if self.scenario == "counterexample-lpq":
            return f"lpq:{self.p},2"
        return "weak-l2"

    def validate(self) -> "ScenarioConfig":
        """Raise ConfigError naming the first field that violates a precondition."""
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {', '.join(SCENARIOS)}", "scenario")
        try:
            params = make_space(self.m_gamma, self.m_2gamma)
        except ValueError as exc:
            raise ConfigError(str(exc), "space") from None
        try:
            make_radial_grid(params, self.t_max, self.n_t, self.grading, self.lambda_max)
        except (HypAnnulusError, ValueError) as exc:
            raise ConfigError(str(exc), "grids") from None
        if not self.lambda_max > 0 or self.n_lambda < 33:
            raise ConfigError("need lambda_max > 0 and n_lambda >= 33", "grids")
        if self.N < 8:
            raise ConfigError(f"need at least 8 powers, got {self.N}", "N")
        if self.scenario == "collapse-weighted" and self.weight_M < 0:
            raise ConfigError("need M >= 0", "weight_M")
        try:
            an.parse_norm_tag(self.effective_norm())
        except ValueError as exc:
            raise ConfigError(str(exc), "norm_tag") from None
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}", "format")
        step = self.lambda_max / (self.n_lambda - 1)
        if self.scenario in ("annulus-band", "ball-band", "sequence-mode"):
            if self.profile not in PROFILES:
                raise ConfigError(f"profile must be one of {PROFILES}", "profile")
            beta, alpha = self.band
            if not 0 <= beta < alpha <= self.lambda_max:
                raise ConfigError("need 0 <= beta < alpha <= lambda_max", "band")
            if (alpha - beta) / step + 1 < an.MIN_BAND_NODES:
                raise ConfigError(f"band holds fewer than {an.MIN_BAND_NODES} spectral nodes", "band")
            if self.scenario == "ball-band" and beta != 0:
                raise ConfigError("ball-band needs beta = 0", "band")
            if self.scenario == "annulus-band" and beta == 0:
                raise ConfigError("annulus-band needs beta > 0 (use ball-band)", "band")
        if self.scenario == "eigen" and not 0 < self.alpha <= self.lambda_max:
            raise ConfigError("need 0 < alpha <= lambda_max", "alpha")
        if self.scenario == "counterexample-lpq":
            if not (self.p > 1 and self.p != 2):
                raise ConfigError("need p > 1 and p != 2 (the strip is empty at p = 2)", "p")
            if not self.delta > params.rho**2:
                raise ConfigError("need delta > rho^2", "delta")
        return self

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["band"] = list(self.band)
        d["norm_tag"] = self.effective_norm()
        return d


_INT_FIELDS = {"m_gamma", "m_2gamma", "n_t", "n_lambda", "N", "weight_M"}
_FLOAT_FIELDS = {"t_max", "lambda_max", "alpha", "delta", "p"}
_ALIASES = {"powers": "N", "norm": "norm_tag", "n": "N"}


def _apply(cfg: ScenarioConfig, key: str, value: str) -> None:
    key = _ALIASES.get(key.strip(), key.strip())
    value = value.strip()
    try:
        if key == "space":
            if value.lower() not in NAMED_SPACES:
                raise ConfigError(f"unknown space {value!r}", "space")
            cfg.m_gamma, cfg.m_2gamma = NAMED_SPACES[value.lower()]
        elif key == "band":
            parts = [float(x) for x in value.replace("[", "").replace("]", "").split(",")]
            if len(parts) != 2:
                raise ConfigError("band needs two numbers beta,alpha", "band")
            cfg.band = tuple(parts)
        elif key in _INT_FIELDS:
            setattr(cfg, key, int(value))
        elif key in _FLOAT_FIELDS:
            setattr(cfg, key, float(value))
        elif key in {f.name for f in dataclasses.fields(ScenarioConfig)}:
            setattr(cfg, key, value)
        else:
            raise ConfigError(f"unknown key {key!r}", key)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"cannot parse {value!r}", key) from None


def load_config(path=None, overrides: dict | None = None) -> ScenarioConfig:
    """Read a key-value file (if given), apply overrides, validate."""
    cfg = ScenarioConfig()
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc.strerror}", "config") from None
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno} is not key = value", "config")
            k, v = line.split("=", 1)
            _apply(cfg, k, v)
    for k, v in (overrides or {}).items():
        if v is not None:
            _apply(cfg, k, str(v))
    return cfg.validate()


# ---------------------------------------------------------------------------
# Report bundle


def _clean(obj):
    """JSON-safe copy: numpy to Python, complex to [re, im], non-finite to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, (complex, np.complexfloating)):
        return [_clean(obj.real), _clean(obj.imag)]
    return obj


@dataclass
class ReportBundle:
    """Report, sequence, verdicts and diagnostics of one scenario run."""

    config: dict
    report: dict | None
    sequence: dict | None
    verdicts: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    version: str = __version__

    def to_dict(self) -> dict:
        return _clean(dataclasses.asdict(self))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "ReportBundle":
        names = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})

    @classmethod
    def from_json(cls, text: str) -> "ReportBundle":
        return cls.from_dict(json.loads(text))


def _sequence_dict(seq: an.NormSequence) -> dict:
    return {
        "n": seq.n_values.tolist(),
        "log_a": seq.log_a.tolist(),
        "log_b": seq.log_b.tolist(),
        "norm_tag": seq.norm_tag,
        "log_norm0": seq.log_norm0,
    }


def _membership(f: RadialFunction, norm_tag: str):
    measure = an.parse_norm_tag(norm_tag)[0]
    top = f.grid.t_max
    sweep = [s for s in (10.0, 15.0, 20.0, 25.0) if s <= top * (1 + 1e-12)]
    if len(sweep) < 3:
        sweep = list(np.linspace(top / 2, top, 4))
    return nm.weak_l2_membership_diagnostic(f, sweep, norm=measure)


def _stage(name, fieldname, func, *args, **kwargs):
    try:
        return func(*args, **kwargs)
    except (HypAnnulusError, ValueError) as exc:
        raise ScenarioError(f"{type(exc).__name__}: {exc}", stage=name, field=fieldname) from exc


def run_scenario(config: ScenarioConfig) -> ReportBundle:
    """Build grids and input, run the estimator, return a deterministic bundle."""
    cfg = config.validate()
    params = make_space(cfg.m_gamma, cfg.m_2gamma)
    tag = cfg.effective_norm()
    grid = _stage("grids", "grids", make_radial_grid, params, cfg.t_max, cfg.n_t, cfg.grading, cfg.lambda_max)
    sgrid = _stage("grids", "grids", spectral_grid_for, params, cfg.lambda_max, cfg.n_lambda)
    residuals, verdicts, diag = {}, {}, {}
    spatial = None

    if cfg.scenario in ("annulus-band", "ball-band", "sequence-mode"):
        beta, alpha = cfg.band
        prof = _stage("synthesis", "band", an.make_profile, sgrid, beta, alpha, cfg.profile)
        fhat = SpectralFunction(sgrid, prof.values)
        spatial = _stage("synthesis", "band", an.synthesize_bandlimited, prof, grid, sgrid)
    elif cfg.scenario == "eigen":
        fhat = an.eigenfunction_input(sgrid, cfg.alpha)
        spatial = RadialFunction(grid, phi_table(params, [cfg.alpha], grid.t_nodes)[0], 1.0)
        residuals["eigen_residual"] = an.eigen_residual(spatial, params.eigenvalue(cfg.alpha))
    elif cfg.scenario in ("collapse-weak", "collapse-weighted"):
        fhat = an.eigenfunction_input(sgrid, 0.0)
        spatial = RadialFunction(grid, phi_table(params, [0.0], grid.t_nodes)[0], 1.0)
    else:
        lams = _stage("input", "delta", an.strip_pair, params, cfg.delta, cfg.p)
        fhat = an.eigenfunction_input(sgrid, list(lams))
        spatial = RadialFunction(grid, phi_table(params, list(lams), grid.t_nodes).sum(0), float(len(lams)))
        diag["lambdas"] = [complex(l) for l in lams]

    if cfg.scenario == "sequence-mode":
        chain = [inverse_spherical_transform(an.laplacian_power_spectral(fhat, k, params), grid, check=False)
                 for k in range(-cfg.N, cfg.N + 1)]
        seq = _stage("sequence", "N", an.sequence_mode_ingest, chain, cfg.N, tag)
    else:
        seq = _stage("sequence", "N", an.norm_sequence, fhat, cfg.N, tag, grid)
        verdicts["powers_a"] = seq.diagnostics["verdicts_a"]
        verdicts["powers_b"] = seq.diagnostics["verdicts_b"]

    c1, c2, fit = _stage("limits", "N", an.estimate_limits, seq)
    resolution = 2 * sgrid.step
    report = _stage("classify", "norm_tag", an.classify, c1, c2, params, tag, resolution, diagnostics=fit)

    mem = _membership(spatial, tag)
    verdicts["input"] = mem.verdict
    sweep = {"t_max": mem.t_max_sweep.tolist(), "norm": mem.norms.tolist(), "slope": mem.slope,
             "last_change": mem.last_change}
    if cfg.scenario == "counterexample-lpq":
        residuals["eigen_residual_at_c1"] = an.eigen_residual(spatial, c1)
        residuals["best_fit_eigen_residual"], e_fit = an.best_fit_eigen_residual(spatial)
        diag["best_fit_eigenvalue"] = e_fit
    diag.update({
        "extrapolation": fit,
        "space": params.name,
        "rho": params.rho,
        "spectral_step": sgrid.step,
        "resolution": resolution,
        "radial_nodes": len(grid),
        "spectral_nodes": len(sgrid),
    })
    return ReportBundle(cfg.to_dict(), report.to_dict(), _sequence_dict(seq), verdicts, residuals, sweep, diag)


def _write_csv(path: Path, header, rows):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])


def emit_report(bundle: ReportBundle, out, fmt: str = "json") -> list[Path]:
    """Write report.json, or sequence/sweep/residuals CSV tables, into ``out``."""
    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if fmt == "json":
            p = out / "report.json"
            p.write_text(bundle.to_json())
            return [p]
        if fmt != "csv":
            raise ValueError(f"unknown format {fmt!r}")
        files = []
        seq = bundle.sequence or {"n": [], "log_a": [], "log_b": []}
        p = out / "sequence.csv"
        _write_csv(p, ["n", "log_a", "log_b"], zip(seq["n"], seq["log_a"], seq["log_b"]))
        files.append(p)
        p = out / "sweep.csv"
        sw = bundle.sweep or {"t_max": [], "norm": []}
        _write_csv(p, ["t_max", "norm"], zip(sw["t_max"], sw["norm"]))
        files.append(p)
        p = out / "residuals.csv"
        _write_csv(p, ["name", "value"], sorted(bundle.residuals.items()))
        files.append(p)
        return files
    except OSError as exc:
        raise OSError(f"cannot write report to {out}: {exc.strerror}") from exc


# ---------------------------------------------------------------------------
# Entry point


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hypannulus", description="Spectral annulus scenarios on rank-one spaces")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one scenario and write its report")
    run.add_argument("--config", help="key = value config file")
    run.add_argument("--scenario", choices=SCENARIOS)
    run.add_argument("--space", choices=sorted(NAMED_SPACES))
    run.add_argument("--band", help="beta,alpha")
    run.add_argument("--powers", type=int, help="number of powers N")
    run.add_argument("--norm", help="weak-l2 | l2 | weighted:M | mp:p | lpq:p,q")
    run.add_argument("--out", help="output directory")
    run.add_argument("--format", choices=FORMATS)
    suite = sub.add_parser("suite", help="run the acceptance battery")
    suite.add_argument("--acceptance", action="store_true", required=True)
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "suite":
        from .acceptance import print_table, run_all

        results = run_all()
        print_table(results)
        return 0 if all(r.passed for r in results) else 1
    overrides = {"scenario": args.scenario, "space": args.space, "band": args.band, "N": args.powers,
                 "norm_tag": args.norm, "out": args.out, "format": args.format}
    try:
        cfg = load_config(args.config, overrides)
        bundle = run_scenario(cfg)
        files = emit_report(bundle, cfg.out, cfg.format)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ScenarioError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    rep = bundle.report
    print(f"{rep['classification']}: c1={rep['c1']:.6g} c2={rep['c2']:.6g} "
          f"alpha={rep['alpha']:.4f} beta={rep['beta']:.4f}")
    for p in files:
        print(f"wrote {p}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
