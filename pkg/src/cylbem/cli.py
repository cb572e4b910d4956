"""Frequency-sweep driver.

A sweep evaluates current, scattering and spectral errors (and optionally
condition numbers) on a grid of ``ka`` values and writes one flat CSV table
with the columns ``ka,N,formulation,engine,measure,value,masked,error``.
After the sweep, log-log slopes are fitted over the unmasked samples and
compared with the reference windows in :data:`ACCEPTANCE`.

Configuration comes from an optional ``key = value`` file, overridden by
command-line flags::

    cylbem --ka-start 30 --ka-stop 400 --points 60 --formulation TE-EFIE \\
           --norm L2 --out sweep.csv --check
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import analysis, bem
from .analysis import Norm
from .bem import Formulation
from .discretization import spectral_error
from .spectra import ConfigError, Operator, ProblemConfig, kind

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CHECK_FAILED = 3

CSV_COLUMNS = ("ka", "N", "formulation", "engine", "measure", "value", "masked", "error")
ENGINE_CHOICES = ("predicted", "numerical", "both")
SPACINGS = ("log", "linear", "integer")
SCATTERING = "S_L2"
CONDITION = "cond"
# spectral-error measures at q = floor(ka); rows carry the operator name as formulation
SPECTRAL_MEASURES = ("EP", "EA_abs", "EA_re", "EA_im", "E_abs")
# grid points closer than this to an integer ka are pushed away from it
INTEGER_GAP = 0.15


# ---------------------------------------------------------------------------
# configuration


def _split(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


@dataclass
class SweepConfig:
    """Everything needed to reproduce one sweep.

    ``norms`` may contain the current-error norms (``L2``, ``Hs``, ``Hsk``,
    ``P``) and ``cond``; the scattering error ``S_L2`` is always reported.
    ``operators`` adds spectral-error rows for the listed operator kinds.
    """

    a: float = 1.0
    ka_start: float = 30.0
    ka_stop: float = 400.0
    points: int = 60
    spacing: str = "log"
    avoid_integers: bool = True
    nlambda: float = 4.0
    formulations: list[str] = field(default_factory=lambda: [f.value for f in bem.UNFILTERED])
    norms: list[str] = field(default_factory=lambda: [n.value for n in analysis.DEFAULT_NORMS])
    operators: list[str] = field(default_factory=list)
    harmonics: int = 1
    quadrature: int = 100
    epsilon: float = 0.1
    engine: str = "predicted"
    out: str = "sweep.csv"
    workers: int = 1

    def validate(self) -> "SweepConfig":
        """Raise :class:`ConfigError` on any invalid field; returns ``self``."""
        if not self.points >= 2:
            raise ConfigError(f"points must be >= 2, got {self.points}")
        if not self.ka_start > 0:
            raise ConfigError(f"ka start must be positive, got {self.ka_start}")
        if self.ka_stop < self.ka_start:
            raise ConfigError(f"ka stop {self.ka_stop} is below ka start {self.ka_start}")
        if self.a <= 0:
            raise ConfigError("radius must be positive")
        if self.spacing not in SPACINGS:
            raise ConfigError(f"spacing must be one of {SPACINGS}, got {self.spacing!r}")
        if self.engine not in ENGINE_CHOICES:
            raise ConfigError(f"engine must be one of {ENGINE_CHOICES}, got {self.engine!r}")
        if self.nlambda <= 1:
            raise ConfigError("nlambda must exceed 1")
        if self.harmonics < 0 or self.quadrature < 1 or not self.epsilon > 0:
            raise ConfigError("harmonics >= 0, quadrature >= 1 and epsilon > 0 are required")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not self.formulations and not self.operators:
            raise ConfigError("no formulation selected")
        for f in self.formulations:
            try:
                Formulation.parse(f)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        for n in self.norms:
            if n != CONDITION and n not in Norm._value2member_map_:
                raise ConfigError(f"unknown norm {n!r}")
        for op in self.operators:
            try:
                kind(op)
            except (KeyError, ValueError):
                raise ConfigError(f"unknown operator {op!r}") from None
        return self

    @property
    def engines(self) -> tuple[str, ...]:
        return ("predicted", "numerical") if self.engine == "both" else (self.engine,)

    def problem(self, ka: float) -> ProblemConfig:
        return ProblemConfig.from_ka(ka, n_lambda=self.nlambda, a=self.a, harmonics=self.harmonics,
                                     quadrature=self.quadrature, epsilon=self.epsilon)

    def grid(self) -> np.ndarray:
        return ka_grid(self.ka_start, self.ka_stop, self.points, self.spacing, self.avoid_integers)


_LIST_KEYS = {"formulations", "norms", "operators"}
_ALIASES = {"formulation": "formulations", "norm": "norms", "operator": "operators"}


def _coerce(name: str, raw):
    types = {f.name: f.type for f in fields(SweepConfig)}
    if name in _LIST_KEYS:
        return _split(raw) if isinstance(raw, str) else list(raw)
    kind_ = types[name]
    if kind_ == "bool":
        if isinstance(raw, bool):
            return raw
        low = str(raw).strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
    conv = {"float": float, "int": int, "str": str}[kind_]
    try:
        return conv(raw)
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {raw!r}") from None


def parse_config_text(text: str) -> dict:
    """Parse a flat ``key = value`` file.  ``#`` starts a comment."""
    known = {f.name for f in fields(SweepConfig)}
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        key = _ALIASES.get(key, key)
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = _coerce(key, value)
    return out


def ka_grid(start: float, stop: float, points: int, spacing: str = "log", avoid_integers: bool = True) -> np.ndarray:
    """Sample points in ``[start, stop]``, optionally moved off integers.

    A point within :data:`INTEGER_GAP` of an integer is pushed to that
    integer plus or minus the gap, on the side it already lies.  The
    ``integer`` spacing rounds a log grid to distinct integers instead; it
    keeps ``q = floor(ka) = ka`` for transition-region spectral errors.
    """
    if spacing == "integer":
        ka = np.unique(np.round(np.exp(np.linspace(math.log(start), math.log(stop), points))))
        return ka[ka > 0]
    if spacing == "log":
        ka = np.exp(np.linspace(math.log(start), math.log(stop), points))
    else:
        ka = np.linspace(start, stop, points)
    if avoid_integers:
        r = np.round(ka)
        near = np.abs(ka - r) < INTEGER_GAP
        ka = np.where(near, r + np.where(ka >= r, INTEGER_GAP, -INTEGER_GAP), ka)
    return ka


# ---------------------------------------------------------------------------
# rows and CSV


@dataclass(frozen=True)
class SweepRow:
    ka: float
    N: int
    formulation: str
    engine: str
    measure: str
    value: float
    masked: bool
    error: str = ""

    @property
    def window(self) -> str:
        """Identifier of the reference slope window this row feeds, or ``""``."""
        key = (self.formulation, self.measure)
        return f"{key[0]}/{key[1]}" if key in ACCEPTANCE else ""

    @property
    def ok(self) -> bool:
        return not self.error and math.isfinite(self.value)

    def sort_key(self):
        return (self.ka, self.formulation, self.engine, self.measure)

    def as_record(self) -> list[str]:
        value = "" if math.isnan(self.value) else repr(self.value)
        return [repr(self.ka), str(self.N), self.formulation, self.engine, self.measure, value,
                "1" if self.masked else "0", self.error]

    @classmethod
    def from_record(cls, rec: dict) -> "SweepRow":
        value = float(rec["value"]) if rec["value"] else float("nan")
        return cls(float(rec["ka"]), int(rec["N"]), rec["formulation"], rec["engine"], rec["measure"],
                   value, rec["masked"] == "1", rec["error"])


def write_csv(rows, dest) -> None:
    """Write rows with RFC 4180 quoting to a path or text stream."""
    if isinstance(dest, (str, Path)):
        with open(dest, "w", newline="") as fh:
            write_csv(rows, fh)
        return
    w = csv.writer(dest, lineterminator="\r\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(r.as_record())


def read_csv(src) -> list[SweepRow]:
    if isinstance(src, (str, Path)):
        with open(src, newline="") as fh:
            return read_csv(fh)
    reader = csv.DictReader(src)
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    return [SweepRow.from_record(rec) for rec in reader]


# ---------------------------------------------------------------------------
# evaluation


def _formulation_rows(cfg: SweepConfig, ka: float, name: str, engine: str) -> list[SweepRow]:
    form = Formulation.parse(name)
    measures = [n for n in cfg.norms if n != CONDITION] + [SCATTERING]
    if CONDITION in cfg.norms:
        measures.append(CONDITION)
    try:
        pc = cfg.problem(ka)
    except ConfigError as exc:
        return [SweepRow(ka, 0, form.value, engine, m, float("nan"), False, str(exc)) for m in measures]
    rows = []
    try:
        masked = analysis.is_masked(form, pc)
        norms = [Norm(n) for n in cfg.norms if n != CONDITION]
        rep = analysis.error_report(form, pc, norms=norms, engine=engine)
        values = dict(rep.measures)
        if CONDITION in cfg.norms:
            values[CONDITION] = bem.condition_number(form, pc, engine=engine)
    except Exception as exc:  # recorded per point; the sweep continues
        logger.warning("ka=%g %s %s failed: %s", ka, form.value, engine, exc)
        return [SweepRow(ka, pc.N, form.value, engine, m, float("nan"), False, f"{type(exc).__name__}: {exc}")
                for m in measures]
    for m in measures:
        rows.append(SweepRow(ka, pc.N, form.value, engine, m, float(values[m]), masked))
    return rows


def _operator_rows(cfg: SweepConfig, ka: float, name: str) -> list[SweepRow]:
    op = kind(name)
    label = name
    try:
        pc = cfg.problem(ka)
        filtered = op.tag is Operator.FilteredHypersingular
        base = kind(Operator.Hypersingular, op.wavenumber) if filtered else op
        e = spectral_error(base, int(math.floor(ka)), pc, filtered=filtered)
        values = {
            "EP": abs(e.projection),
            "EA_abs": abs(e.aliasing),
            "EA_re": abs(e.aliasing.real),
            "EA_im": abs(e.aliasing.imag),
            "E_abs": abs(e.total),
        }
    except Exception as exc:
        logger.warning("ka=%g %s failed: %s", ka, label, exc)
        N = 0
        return [SweepRow(ka, N, label, "predicted", m, float("nan"), False, f"{type(exc).__name__}: {exc}")
                for m in SPECTRAL_MEASURES]
    return [SweepRow(ka, pc.N, label, "predicted", m, float(values[m]), False) for m in SPECTRAL_MEASURES]


def _task(args) -> list[SweepRow]:
    cfg, ka, what, name, engine = args
    if what == "formulation":
        return _formulation_rows(cfg, ka, name, engine)
    return _operator_rows(cfg, ka, name)


def _tasks(cfg: SweepConfig):
    for ka in cfg.grid():
        ka = float(ka)
        for name in cfg.formulations:
            for engine in cfg.engines:
                yield (cfg, ka, "formulation", Formulation.parse(name).value, engine)
        for name in cfg.operators:
            yield (cfg, ka, "operator", name, "predicted")


def run_sweep(cfg: SweepConfig) -> list[SweepRow]:
    """Evaluate every task and return the rows in sorted order.

    Tasks are independent; with ``workers > 1`` they run in a process pool.
    Row order never depends on the pool.
    """
    cfg.validate()
    tasks = list(_tasks(cfg))
    logger.info("sweep: %d tasks on %d worker(s)", len(tasks), cfg.workers)
    if cfg.workers == 1:
        chunks = [_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            chunks = list(pool.map(_task, tasks, chunksize=max(1, len(tasks) // (4 * cfg.workers))))
    rows = [r for chunk in chunks for r in chunk]
    rows.sort(key=SweepRow.sort_key)
    return rows


# ---------------------------------------------------------------------------
# slope summary


@dataclass(frozen=True)
class Window:
    lo: float
    hi: float

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi


def _acceptance_table() -> dict:
    third = 1.0 / 3.0
    table = {}
    for n in ("L2", "Hs", "Hsk"):
        table[("TE-EFIE", n)] = Window(third - 0.1, third + 0.1)
        for f in ("TM-EFIE", "TM-MFIE", "TE-MFIE", "TE-EFIE_F", "TE-CCFIE_F", "TM-CCFIE_F"):
            table[(f, n)] = Window(-0.1, 0.1)
    table[("TE-EFIE", SCATTERING)] = Window(0.05, 0.35)
    for f in ("TM-EFIE", "TE-EFIE"):
        table[(f, CONDITION)] = Window(third - 0.1, third + 0.1)
    for f in ("TM-CCFIE", "TE-CCFIE"):
        table[(f, CONDITION)] = Window(-0.1, 0.1)
    table[("S", "EA_abs")] = Window(-third - 0.1, -third + 0.1)
    table[("N", "EA_abs")] = Window(third - 0.1, third + 0.1)
    table[("D", "EA_im")] = Window(-1.15, -0.85)
    table[("D", "EA_re")] = Window(-5 / 3 - 0.25, -5 / 3 + 0.25)
    table[("TM-MFIO", "E_abs")] = Window(-0.1, 0.1)
    table[("TE-MFIO", "E_abs")] = Window(-0.1, 0.1)
    table[("TM-CCFIO", "EA_abs")] = Window(third - 0.15, third + 0.15)
    table[("TE-CCFIO", "EA_abs")] = Window(third - 0.15, third + 0.15)
    return table


# (formulation, measure) -> reference slope window
ACCEPTANCE = _acceptance_table()


@dataclass(frozen=True)
class SlopeSummary:
    formulation: str
    engine: str
    measure: str
    points: int
    slope: float
    stderr: float
    status: str  # pass | fail | info | n/a

    def line(self) -> str:
        win = ACCEPTANCE.get((self.formulation, self.measure))
        ref = f"[{win.lo:+.3f}, {win.hi:+.3f}]" if win else "-"
        return (f"{self.formulation:<12} {self.engine:<10} {self.measure:<7} n={self.points:<4d} "
                f"slope={self.slope:+.4f} +/- {self.stderr:.4f}  ref={ref}  {self.status}")


def summarize(rows) -> list[SlopeSummary]:
    """Fit one slope per (formulation, engine, measure) over unmasked valid rows."""
    groups: dict[tuple, list[SweepRow]] = {}
    for r in rows:
        groups.setdefault((r.formulation, r.engine, r.measure), []).append(r)
    out = []
    for (form, engine, measure), grp in sorted(groups.items()):
        good = [r for r in grp if r.ok and r.value > 0]
        ka = np.array([r.ka for r in good])
        val = np.array([r.value for r in good])
        mask = np.array([r.masked for r in good], dtype=bool)
        try:
            fit = analysis.fit_slope(ka, val, mask)
        except analysis.InsufficientPointsError:
            out.append(SlopeSummary(form, engine, measure, int((~mask).sum()), float("nan"), float("nan"), "n/a"))
            continue
        win = ACCEPTANCE.get((form, measure))
        status = "info" if win is None else ("pass" if win.contains(fit.slope) else "fail")
        out.append(SlopeSummary(form, engine, measure, fit.points, fit.slope, fit.stderr, status))
    # the Calderon TE current error must grow more slowly than the TE-EFIE one
    by_key = {(s.formulation, s.engine, s.measure): s for s in out}
    for i, s in enumerate(out):
        if s.formulation != "TE-CCFIE" or s.status == "n/a":
            continue
        ref = by_key.get(("TE-EFIE", s.engine, s.measure))
        if ref is not None and ref.status != "n/a" and s.measure in ("L2", "Hs", "Hsk"):
            out[i] = replace(s, status="pass" if s.slope < ref.slope else "fail")
    return out


def format_summary(summary) -> str:
    buf = io.StringIO()
    buf.write("# slope summary (unmasked samples)\n")
    for s in summary:
        buf.write(s.line() + "\n")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# plot scripts

_PLOT_TEMPLATE = '''"""{title}

Generated plotting script; reads {csv_name} and draws log-log curves.
"""
import csv
import sys
from collections import defaultdict

import matplotlib.pyplot as plt
import numpy as np

CSV_PATH = sys.argv[1] if len(sys.argv) > 1 else {csv_path!r}
MEASURES = {measures!r}
GUIDES = {guides!r}

series = defaultdict(list)
with open(CSV_PATH, newline="") as fh:
    for rec in csv.DictReader(fh):
        if rec["measure"] in MEASURES and rec["value"] and not rec["error"]:
            key = (rec["formulation"], rec["engine"], rec["measure"])
            series[key].append((float(rec["ka"]), float(rec["value"]), rec["masked"] == "1"))

fig, ax = plt.subplots(figsize=(7, 5))
anchor = None
for (form, engine, measure), pts in sorted(series.items()):
    pts.sort()
    ka = np.array([p[0] for p in pts])
    val = np.array([p[1] for p in pts])
    masked = np.array([p[2] for p in pts])
    style = "-" if engine == "predicted" else "--"
    (line,) = ax.loglog(ka, val, style, label=f"{{form}} {{measure}} ({{engine}})")
    if masked.any():
        ax.loglog(ka[masked], val[masked], "x", color=line.get_color(), ms=4)
    if anchor is None:
        anchor = (ka[0], val[0], ka[-1])

if anchor is not None:
    k0, v0, k1 = anchor
    kk = np.array([k0, k1])
    for slope, label in GUIDES:
        ax.loglog(kk, v0 * (kk / k0) ** slope, ":", color="gray", lw=1)
        ax.annotate(label, (kk[-1], v0 * (k1 / k0) ** slope), fontsize=8, color="gray")

ax.set_xlabel("ka")
ax.set_ylabel({ylabel!r})
ax.set_title({title!r})
ax.grid(True, which="both", alpha=0.3)
ax.legend(fontsize=7)
fig.tight_layout()
fig.savefig({png!r}, dpi=150)
'''

_GUIDES = [(1 / 3, "(ka)^(1/3)"), (-1 / 3, "(ka)^(-1/3)"), (-1.0, "(ka)^(-1)")]

_FIGURES = (
    ("current_error", "Relative current error", "current error", ("L2", "Hs", "Hsk", "P")),
    ("scattering_error", "Relative scattering error", "scattering error", (SCATTERING,)),
    ("spectral_error", "Spectral error at q = floor(ka)", "spectral error", SPECTRAL_MEASURES),
    ("condition_number", "Condition number: EFIE against CCFIE", "condition number", (CONDITION,)),
)


def emit_plots(rows, outdir, csv_path="sweep.csv") -> list[Path]:
    """Write one matplotlib script per figure class present in ``rows``.

    Returns the written paths; an empty dataset writes nothing and logs a
    warning.
    """
    rows = list(rows)
    if not rows:
        logger.warning("empty dataset: no plot scripts written")
        return []
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    present = {r.measure for r in rows}
    written = []
    for stem, title, ylabel, measures in _FIGURES:
        hit = [m for m in measures if m in present]
        if not hit:
            continue
        script = _PLOT_TEMPLATE.format(
            title=title, csv_name=Path(csv_path).name, csv_path=str(csv_path), measures=hit,
            guides=_GUIDES, ylabel=ylabel, png=f"{stem}.png",
        )
        path = outdir / f"plot_{stem}.py"
        path.write_text(script)
        written.append(path)
    return written


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cylbem", description="Error sweeps for BEM scattering by a PEC circular cylinder.")
    p.add_argument("--config", help="flat key = value configuration file")
    p.add_argument("--a", type=float, help="cylinder radius (m)")
    p.add_argument("--ka-start", type=float)
    p.add_argument("--ka-stop", type=float)
    p.add_argument("--points", type=int)
    p.add_argument("--spacing", choices=SPACINGS)
    p.add_argument("--nlambda", type=float, help="points per wavelength")
    p.add_argument("--formulation", action="append", help="repeatable, e.g. TE-EFIE")
    p.add_argument("--norm", action="append", help="repeatable: L2, Hs, Hsk, P, cond")
    p.add_argument("--operator", action="append", help="repeatable: spectral-error rows for an operator (S, N, D, TM-CCFIO, ...)")
    p.add_argument("--engine", choices=ENGINE_CHOICES)
    p.add_argument("--harmonics", type=int, help="aliasing harmonics S")
    p.add_argument("--quadrature", type=int, help="Gauss points per element (numerical engine)")
    p.add_argument("--epsilon", type=float, help="filter margin")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--plots", metavar="DIR", help="write plot scripts into DIR")
    p.add_argument("--check", action="store_true", help="exit with status 3 if a reference slope check fails")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return p


def config_from_args(args: argparse.Namespace) -> SweepConfig:
    values = {}
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        values.update(parse_config_text(text))
    flags = {
        "a": args.a, "ka_start": args.ka_start, "ka_stop": args.ka_stop, "points": args.points,
        "spacing": args.spacing, "nlambda": args.nlambda, "engine": args.engine,
        "harmonics": args.harmonics, "quadrature": args.quadrature, "epsilon": args.epsilon,
        "workers": args.workers, "out": args.out,
        "formulations": args.formulation, "norms": args.norm, "operators": args.operator,
    }
    for key, val in flags.items():
        if val is None:
            continue
        if key in _LIST_KEYS:
            val = [x for item in val for x in _split(item)]
        values[key] = val
    return SweepConfig(**values).validate()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    rows = run_sweep(cfg)
    write_csv(rows, cfg.out)
    summary = summarize(rows)
    sys.stdout.write(format_summary(summary))
    if args.plots:
        for path in emit_plots(rows, args.plots, cfg.out):
            logger.info("wrote %s", path)
    failed = [s for s in summary if s.status == "fail"]
    if args.check and failed:
        print(f"{len(failed)} slope check(s) failed", file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


__all__ = [
    "ACCEPTANCE",
    "SlopeSummary",
    "SweepConfig",
    "SweepRow",
    "emit_plots",
    "ka_grid",
    "main",
    "parse_config_text",
    "read_csv",
    "run_sweep",
    "summarize",
    "write_csv",
]
