"""Run configuration files, decimal snapshots and CSV reports.

Every number is written with 17 significant digits, enough for an exact
round trip of IEEE doubles, so files can be diffed as golden outputs.
"""
import csv
import hashlib
import io
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .evolution import DIAGNOSTIC_COLUMNS, SolverConfig
from .model import ModelParams

FLOAT_FMT = ".17g"
ENV_OUT = "MORPHLAB_OUT"


class ConfigError(ValueError):
    def __init__(self, message, line=None, source="<config>"):
        self.line = line
        loc = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(loc + message)


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _scheme(text):
    t = text.strip().lower()
    if t not in ("etd1", "etdrk2"):
        raise ValueError("scheme must be etd1 or etdrk2")
    return t


def _int(text):
    return int(text.strip())


# key -> (parser, default, description)
CONFIG_KEYS = {
    "d": (float, 1.0, "diffusivity ratio of u2"),
    **{f"b{k}": (float, 1.0, f"decay rate b{k} > 0") for k in range(1, 6)},
    **{f"c{k}": (float, 1.0, f"reaction rate c{k} >= 0") for k in range(1, 6)},
    "p1": (float, 1.0, "strength of the boundary point source"),
    "p3": (float, 1.0, "constant production of u3"),
    "h": (float, 1.0, "aspect ratio in (0, 1]"),
    "epsilon": (float, 0.0, "mollifier width in [0, 1]; 0 is the Dirac source"),
    "n1": (_int, 64, "modes along I (even)"),
    "n2": (_int, 16, "modes along the thin direction"),
    "dt": (float, 1e-3, "time step"),
    "T": (float, 0.5, "horizon"),
    "scheme": (_scheme, "etd1", "etd1 or etdrk2"),
    "dealias": (_bool, True, "3/2-rule padding for the nonlinear terms"),
    "theta": (float, 1.0 / 32.0, "weight exponent theta"),
    "p_exp": (float, 4.0, "Lebesgue exponent p of the ODE components"),
    "seed": (_int, 0, "RNG seed"),
    "out_dir": (str, "morphlab_out", "output directory (MORPHLAB_OUT overrides)"),
}


@dataclass(frozen=True)
class RunConfig:
    values: dict

    def __getitem__(self, key):
        return self.values[key]

    def params(self):
        v = self.values
        return ModelParams(
            d=v["d"],
            b=tuple(v[f"b{k}"] for k in range(1, 6)),
            c=tuple(v[f"c{k}"] for k in range(1, 6)),
            p=(v["p1"], 0.0, v["p3"], 0.0, 0.0),
        )

    def solver(self):
        v = self.values
        return SolverConfig(n1=v["n1"], n2=v["n2"], dt=v["dt"], T=v["T"], scheme=v["scheme"],
                            dealias=v["dealias"], theta=v["theta"], p_exp=v["p_exp"])

    def canonical(self):
        return "\n".join(f"{k}={_fmt_value(self.values[k])}" for k in sorted(self.values))

    def hash(self):
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def out_dir(self):
        return Path(os.environ.get(ENV_OUT) or self.values["out_dir"])


def _fmt_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, FLOAT_FMT)
    return str(v)


def default_config():
    return RunConfig({k: spec[1] for k, spec in CONFIG_KEYS.items()})


def parse_config(text, source="<config>"):
    """Parse flat ``key=value`` lines; ``#`` starts a comment."""
    values = {k: spec[1] for k, spec in CONFIG_KEYS.items()}
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected key=value, got {line!r}", lineno, source)
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno, source)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r} (first on line {seen[key]})", lineno, source)
        seen[key] = lineno
        try:
            values[key] = CONFIG_KEYS[key][0](val)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}", lineno, source) from None
    cfg = RunConfig(values)
    try:
        cfg.params()
        cfg.solver()
    except ValueError as exc:
        raise ConfigError(str(exc), None, source) from None
    if not 0 < values["h"] <= 1:
        raise ConfigError("h must lie in (0, 1]", seen.get("h"), source)
    if not 0 <= values["epsilon"] <= 1:
        raise ConfigError("epsilon must lie in [0, 1]", seen.get("epsilon"), source)
    return cfg


def load_config(path):
    path = Path(path)
    return parse_config(path.read_text(), source=str(path))


# ---------------------------------------------------------------------------
# snapshots

def format_snapshot(array, meta=None):
    a = np.asarray(array, dtype=float)
    if a.ndim not in (1, 2):
        raise ValueError("snapshots hold 1-d or 2-d arrays")
    meta = dict(meta or {})
    meta["shape"] = "x".join(str(n) for n in a.shape)
    lines = [f"# {k}={_fmt_value(v)}" for k, v in meta.items()]
    rows = a[None, :] if a.ndim == 1 else a
    lines += [",".join(format(x, FLOAT_FMT) for x in row) for row in rows]
    return "\n".join(lines) + "\n"


def parse_snapshot(text):
    meta, rows = {}, []
    for line in text.splitlines():
        if line.startswith("#"):
            k, _, v = line[1:].strip().partition("=")
            meta[k] = v
        elif line.strip():
            rows.append([float(x) for x in line.split(",")])
    shape = tuple(int(n) for n in meta["shape"].split("x"))
    a = np.array(rows, dtype=float)
    return a.reshape(shape), meta


def write_snapshot(path, array, meta=None):
    Path(path).write_text(format_snapshot(array, meta))


def read_snapshot(path):
    return parse_snapshot(Path(path).read_text())


# ---------------------------------------------------------------------------
# CSV

def format_csv(columns, rows, meta=None):
    buf = io.StringIO()
    for k, v in (meta or {}).items():
        buf.write(f"# {k}={_fmt_value(v)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        vals = [r[c] for c in columns] if isinstance(r, dict) else list(r)
        w.writerow([_fmt_cell(x) for x in vals])
    return buf.getvalue()


def _fmt_cell(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return format(float(x), FLOAT_FMT)
    return str(x)


def trajectory_csv(rows, meta=None):
    return format_csv(DIAGNOSTIC_COLUMNS, rows, meta)


def write_trajectory_csv(path, rows, meta=None):
    Path(path).write_text(trajectory_csv(rows, meta))


def read_csv(path):
    """Return (meta, header, rows of floats/strings)."""
    meta, body = {}, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            k, _, v = line[1:].strip().partition("=")
            meta[k] = v
        else:
            body.append(line)
    reader = csv.reader(body)
    header = next(reader)
    rows = []
    for r in reader:
        out = []
        for x in r:
            try:
                out.append(float(x))
            except ValueError:
                out.append(x)
        rows.append(out)
    return meta, header, rows


def write_table(path, table, meta=None):
    meta = dict(meta or {})
    meta.update({f"note_{k}": v for k, v in table.notes.items()})
    Path(path).write_text(format_csv(table.columns, table.rows, meta))


def write_report(path, report, meta=None):
    cols = []
    for r in report.rows:
        cols += [k for k in r if k not in cols]
    meta = dict(meta or {})
    meta.update(check=report.name, passed=report.passed, seed=report.seed)
    meta.update({f"tol_{k}": v for k, v in report.tolerances.items()})
    rows = [{c: r.get(c) for c in cols} for r in report.rows]
    Path(path).write_text(format_csv(cols, rows, meta))
