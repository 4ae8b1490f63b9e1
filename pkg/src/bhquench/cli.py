"""Command-line experiment runner.

    bhquench <scenario> --config run.cfg [--out DIR] [--format csv|json]

Every scenario writes its tables plus ``manifest.json`` into a scratch
directory that is renamed onto ``--out`` only after the run succeeds.
Exit codes: 0 success, 1 failed validation or unexpected error,
2 invalid configuration/parameters, 3 regime error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import shutil
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .config import SCENARIOS, ExperimentConfig, parse_config
from .dispersion import (
    QuenchParams,
    classify_regime,
    long_wavelength_params,
    omega_squared,
    uniform_times,
)
from .dynamics import evolve_modes_ode, kernel_table, spectroscopy_fit
from .errors import (
    AnisotropyError,
    ConfigurationError,
    GeometryError,
    NoFrontError,
    NoSignalError,
    ParameterError,
    QuenchError,
    RegimeError,
    SizeError,
    UndefinedPhaseError,
    UnstableRegimeError,
)
from .lattice import build_lattice, effective_mass, mode_grid, structure_factor
from .observables import (
    Region,
    bessel_profile,
    condensate_fraction,
    cone_edge_threshold,
    light_cone_front,
    phase_correlator,
    two_point_field,
)
from .validation import all_passed, run_invariants

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_REGIME = 0, 1, 2, 3
AXIS_NAMES = ("kx", "ky", "kz")


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


class Table:
    def __init__(self, name: str, columns: list[str]):
        self.name = name
        self.columns = columns
        self.rows: list[list] = []

    def add(self, *row):
        self.rows.append(list(row))

    def render(self, fmt: str) -> str:
        if fmt == "csv":
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(self.columns)
            for r in self.rows:
                w.writerow([_fmt(v) for v in r])
            return buf.getvalue()
        records = [[_fmt(v) for v in r] for r in self.rows]
        return json.dumps({"columns": self.columns, "rows": records}, indent=1) + "\n"


def _k_columns(d: int) -> list[str]:
    return list(AXIS_NAMES[:d]) if d <= 3 else [f"k{i}" for i in range(d)]


class Run:
    """Resolved objects shared by every scenario."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.lattice = build_lattice(cfg.dimension, cfg.extent, cfg.pattern, cfg.range)
        self.grid = mode_grid(self.lattice)
        self.params = QuenchParams(cfg.U, cfg.J, uniform_times(cfg.t_max, cfg.samples))
        self.report = classify_regime(self.params, self.grid)
        try:
            self.m_star = effective_mass(self.lattice)
            self.lw = long_wavelength_params(self.params, self.lattice)
        except AnisotropyError:
            self.m_star, self.lw = None, None
        self.summary: dict = {}

    def resolved(self) -> dict:
        p = self.params
        return {
            "Z": self.lattice.Z,
            "n_sites": self.lattice.n_sites,
            "m_star": self.m_star,
            "U": p.U,
            "J": p.J,
            "J_cr": p.J_cr,
            "J_plus": p.J_plus,
            "epsilon": p.epsilon,
            "gamma0": self.report.gamma0,
            "gamma_star": self.report.gamma_star,
            "k_star": self.report.k_star,
            "k_cr": self.report.k_cr,
            "c": None if self.lw is None or not self.lw.has_cone else self.lw.c,
            "c_squared": None if self.lw is None else self.lw.c_squared,
            "c_squared_alt": None if self.lw is None else self.lw.c_squared_alt,
            "regime": self.report.regime,
        }

    def require_cone(self):
        if self.lw is None or not self.lw.has_cone:
            raise RegimeError("no long-wavelength cone: c^2 <= 0 or anisotropic lattice")
        if self.lw.stable:
            raise RegimeError(f"regime {self.report.regime}: no zone-centre growth")

    def field(self):
        return two_point_field(kernel_table(self.params, self.grid))


# ------------------------------------------------------------------ scenarios


def scenario_dispersion(run: Run) -> list[Table]:
    g, p = run.grid, run.params
    d = run.lattice.dimension
    table = Table("dispersion", ["kabs"] + _k_columns(d) + ["T_k", "omega_sq", "gamma"])
    kc = g.centered_wavevectors()
    kmag = g.kmag()
    w2 = omega_squared(p.U, p.J, g.structure)
    gamma = np.sqrt(np.maximum(0.0, -w2))
    for idx in np.ndindex(*g.shape):
        table.add(kmag[idx], *kc[idx], g.structure[idx], w2[idx], gamma[idx])
    i_max = np.unravel_index(np.argmax(gamma), gamma.shape)
    run.summary.update(max_gamma=float(gamma.max()), kabs_at_max_gamma=float(kmag[i_max]))
    return [table]


def scenario_quench(run: Run) -> list[Table]:
    g, p = run.grid, run.params
    d = run.lattice.dimension
    traj = evolve_modes_ode(p, g)
    K = kernel_table(p, g).K
    kc = g.centered_wavevectors()
    table = Table("quench", _k_columns(d) + ["t", "K", "f11", "re_f12", "im_f12", "f22"])
    for idx in np.ndindex(*g.shape):
        for i, t in enumerate(p.times):
            sl = (i,) + idx
            table.add(*kc[idx], t, K[sl], traj.f11[sl], traj.f12[sl].real, traj.f12[sl].imag, traj.f22[sl])
    occ = traj.occupation()
    run.summary.update(
        max_abs_ode_minus_closed=float(np.abs(occ - K).max()),
        max_abs_f11_minus_f22=float(np.abs(traj.f11 - traj.f22).max()),
    )
    return [table]


def _read_table(path: Path) -> tuple[list[str], np.ndarray]:
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        doc = json.loads(text)
        return doc["columns"], np.array(doc["rows"], dtype=float)
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], np.array(rows[1:], dtype=float)


def scenario_spectroscopy(run: Run) -> list[Table]:
    g, p = run.grid, run.params
    d = run.lattice.dimension
    kcols = _k_columns(d)
    source = run.cfg.options.get("spectroscopy.input")
    series = {}
    if source:
        path = Path(source)
        if path.is_dir():
            path = next((path / f"quench.{ext}" for ext in ("csv", "json") if (path / f"quench.{ext}").exists()), path / "quench.csv")
        if not path.exists():
            raise ConfigurationError(f"spectroscopy input {path} not found")
        columns, data = _read_table(path)
        missing = [c for c in kcols + ["t", "K"] if c not in columns]
        if missing:
            raise ConfigurationError(f"spectroscopy input lacks columns {missing}")
        kidx = [columns.index(c) for c in kcols]
        ti, Ki = columns.index("t"), columns.index("K")
        for row in data:
            key = tuple(row[kidx])
            series.setdefault(key, ([], []))
            series[key][0].append(row[ti])
            series[key][1].append(row[Ki])
    else:
        K = kernel_table(p, g).K
        kc = g.centered_wavevectors()
        for idx in np.ndindex(*g.shape):
            series[tuple(kc[idx])] = (list(p.times), list(K[(slice(None),) + idx]))

    table = Table("spectroscopy", kcols + ["omega_true", "omega_fit", "residual", "status"])
    worst = 0.0
    counts = {"ok": 0, "no_signal": 0, "unstable": 0}
    for key in sorted(series):
        t, y = (np.array(v) for v in series[key])
        T = float(structure_factor(run.lattice, np.array(key)))
        w2 = float(omega_squared(p.U, p.J, T))
        w_true = math.sqrt(w2) if w2 > 0 else math.nan
        try:
            fit = spectroscopy_fit(t, y, p.U)
        except NoSignalError:
            counts["no_signal"] += 1
            table.add(*key, w_true, math.nan, math.nan, "no_signal")
            continue
        except UnstableRegimeError:
            counts["unstable"] += 1
            table.add(*key, w_true, math.nan, math.nan, "unstable")
            continue
        counts["ok"] += 1
        if w2 > 0:
            worst = max(worst, abs(fit.omega - w_true) / w_true)
        table.add(*key, w_true, fit.omega, fit.residual, "ok")
    run.summary.update(modes=counts, max_relative_omega_error=worst)
    return [table]


def scenario_lightcone(run: Run) -> list[Table]:
    run.require_cone()
    field = run.field()
    gamma0 = run.lw.gamma0
    threshold = run.cfg.options.get("lightcone.threshold") or cone_edge_threshold(gamma0, run.cfg.t_max)
    front = light_cone_front(field, threshold, gamma0)
    table = Table("lightcone", ["t", "front_radius", "c_fit_running"])
    for t, r, s in zip(front.times, front.radii, front.running_speed()):
        table.add(t, r, s)
    run.summary.update(threshold=threshold, fitted_speed=front.speed, c=run.lw.c, speed_over_c=front.speed / run.lw.c)
    return [table]


def scenario_patches(run: Run) -> list[Table]:
    run.require_cone()
    field = run.field()
    origin = (0,) * run.lattice.dimension
    sides = [int(s) for s in run.cfg.options["patches.sides"].split(",")]
    table = Table("patches", ["t", "side", "N_S", "fraction"])
    gamma0 = run.lw.gamma0
    rates = {}
    for side in sides:
        reg = Region(origin, side)
        fr = []
        for i, t in enumerate(field.times):
            N_S, frac = condensate_fraction(field, reg, i)
            table.add(t, side, N_S, frac)
            fr.append(frac)
        late = field.times * gamma0 >= max(2.0, 0.5 * gamma0 * run.cfg.t_max)
        fr = np.array(fr)
        if late.sum() >= 2 and np.all(fr[late] > 0):
            rates[str(side)] = float(np.polyfit(field.times[late], np.log(fr[late]), 1)[0])
    run.summary.update(growth_rate_fit=rates, gamma0=gamma0)
    return [table]


def scenario_phase(run: Run) -> list[Table]:
    run.require_cone()
    field = run.field()
    d = run.lattice.dimension
    side = run.cfg.options["phase.side"]
    max_d = run.cfg.options.get("phase.max_distance") or run.lattice.extent // 4
    gamma0, c = run.lw.gamma0, run.lw.c
    table = Table("phase", ["t", "distance", "g1", "predicted_g1"])
    a = Region((0,) * d, side)
    slopes = {}
    for i, t in enumerate(field.times):
        xs, ys = [], []
        for dist in range(side, max_d + 1):
            b = Region((dist,) + (0,) * (d - 1), side)
            try:
                res = phase_correlator(field, a, b, i, gamma0, c)
            except (UndefinedPhaseError, GeometryError):
                break
            table.add(t, res.distance, res.g1, res.predicted_g1)
            if res.g1 > 0:
                xs.append(res.distance**2)
                ys.append(math.log(res.g1))
        if len(xs) >= 3:
            slopes[_fmt(t)] = {"slope": float(np.polyfit(xs, ys, 1)[0]), "predicted": -gamma0 / (2 * c * c * t)}
    if not table.rows:
        raise UndefinedPhaseError("no sample time with macroscopic block occupation inside the cone")
    run.summary.update(slopes=slopes)
    return [table]


def scenario_bessel(run: Run) -> list[Table]:
    t = run.cfg.t_max
    prof = bessel_profile(run.params, run.grid, t)
    field = two_point_field(kernel_table(run.params, run.grid, np.array([t])))
    exact = field.axis_profile(0) / field.values[0].flat[0]
    r = np.arange(len(exact), dtype=float)
    pred = prof.normalized(r)
    table = Table("bessel", ["r", "exact_normalized", "j0_predicted"])
    for ri, e, pj in zip(r, exact, pred):
        table.add(ri, e, pj)
    near = r <= 3.0 / prof.k_star
    run.summary.update(
        k_star=prof.k_star,
        gamma_star=prof.gamma_star,
        gamma_star_t=prof.gamma_star * t,
        first_zero=prof.first_zero,
        max_abs_deviation_within_3_over_kstar=float(np.abs(exact[near] - pred[near]).max()),
    )
    return [table]


def scenario_validate(run: Run) -> list[Table]:
    checks = run_invariants(run.lattice, run.params)
    table = Table("validate", ["check", "value", "tolerance", "passed"])
    for c in checks:
        table.add(c.name, c.value, c.tolerance, c.passed)
    run.summary.update(all_passed=all_passed(checks), failed=[c.name for c in checks if not c.passed])
    return [table]


PIPELINES = {
    "dispersion": scenario_dispersion,
    "quench": scenario_quench,
    "spectroscopy": scenario_spectroscopy,
    "lightcone": scenario_lightcone,
    "patches": scenario_patches,
    "phase": scenario_phase,
    "bessel": scenario_bessel,
    "validate": scenario_validate,
}


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def run(cfg: ExperimentConfig, out_dir: str | os.PathLike | None = None) -> dict:
    """Execute ``cfg.scenario`` and commit outputs atomically; returns the manifest."""
    if cfg.scenario not in PIPELINES:
        raise ConfigurationError(f"unknown scenario {cfg.scenario!r}")
    target = Path(out_dir if out_dir is not None else cfg.directory)
    target.parent.mkdir(parents=True, exist_ok=True)
    scratch = Path(tempfile.mkdtemp(prefix=f".{target.name}.", dir=target.parent))
    try:
        state = Run(cfg)
        tables = PIPELINES[cfg.scenario](state)
        outputs = []
        for table in tables:
            name = f"{table.name}.{cfg.format}"
            (scratch / name).write_text(table.render(cfg.format), encoding="utf-8")
            outputs.append({"file": name, "rows": len(table.rows)})
        manifest = _clean(
            {
                "tool": "bhquench",
                "version": __version__,
                "scenario": cfg.scenario,
                "config_hash": cfg.config_hash(),
                "config": cfg.semantic(),
                "resolved": state.resolved(),
                "outputs": outputs,
                "summary": state.summary,
            }
        )
        text = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
        (scratch / "manifest.json").write_text(text, encoding="utf-8")
        if target.exists():
            shutil.rmtree(target)
        os.replace(scratch, target)
    except BaseException:
        shutil.rmtree(scratch, ignore_errors=True)
        raise
    return manifest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bhquench", description="Mott -> superfluid quench correlations at leading order in 1/Z")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="scenario", required=True)
    for name in SCENARIOS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, type=Path, help="flat key = value config file")
        sp.add_argument("--out", type=Path, default=None, help="output directory (overrides output.directory)")
        sp.add_argument("--format", choices=("csv", "json"), default=None)
        if name == "spectroscopy":
            sp.add_argument("--input", default=None, help="quench table or run directory to fit")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = args.config.read_text(encoding="utf-8")
        overrides = {"output.format": args.format}
        if getattr(args, "input", None):
            overrides["spectroscopy.input"] = args.input
        cfg = parse_config(text, overrides)
        if cfg.scenario not in (None, args.scenario):
            raise ConfigurationError(f"config scenario {cfg.scenario!r} does not match subcommand {args.scenario!r}")
        cfg = cfg.replace(scenario=args.scenario)
        manifest = run(cfg, args.out)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigurationError, ParameterError, GeometryError, AnisotropyError, SizeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RegimeError, NoFrontError, UndefinedPhaseError) as exc:
        print(f"regime error: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except QuenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    summary = manifest["summary"]
    print(json.dumps({"scenario": manifest["scenario"], "outputs": manifest["outputs"], "summary": summary}, sort_keys=True))
    if args.scenario == "validate" and not summary.get("all_passed", False):
        return EXIT_FAILED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
