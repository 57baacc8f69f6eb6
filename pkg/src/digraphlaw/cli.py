"""Command-line experiments.

Every subcommand writes its outputs to ``--out`` (default: the
``DIGRAPHLAW_OUT`` environment variable, else ``./digraphlaw-out``) together
with ``<command>_manifest.json`` recording the command, the resolved
configuration, its SHA-256 hash, seeds and library versions.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.

Config files are flat TOML documents whose keys are the long option names
with dashes replaced by underscores, e.g.::

    command = "mcurve"
    d = 3
    w = ["1+0i"]
    z_re = "0"
    z_im = "0.1:4:40"

Values given on the command line override the file.  Grid specs are either a
single number or ``start:stop:count`` (inclusive linspace).  Complex numbers
accept ``i`` or ``j`` as the imaginary unit.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import platform
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy
import tomli

from . import __version__
from .digraph import sample_simple
from .errors import ConfigInvalid, NumericalError, ValidationError
from .girko import RadialBump, esd_report, girko_identity_check
from .resolvent import GreenSVD, q_parameters, singular_profile, shifted_matrix
from .selfconsistent import solve_m_infty
from .switching import default_R_chi, switch_statistics
from .treegreen import (boundary_sums, build_tree, extend_tree, green_dense, jacobian_fd, jacobian_prediction,
                        path_entry, root_block, root_entries_recursive, Y_iK, Y_oK)

OUT_ENV = "DIGRAPHLAW_OUT"
COMMANDS = ("sample", "esd", "locallaw", "mcurve", "sv-hist", "girko-check", "switch-test", "tree-check")
CSV_VERSION = 1


# ---------------------------------------------------------------------------
# parsing helpers
# ---------------------------------------------------------------------------
def parse_complex(text) -> complex:
    if isinstance(text, (int, float, complex)):
        return complex(text)
    s = str(text).strip().replace(" ", "").replace("i", "j")
    if s in ("j", "+j", "-j"):
        s = s.replace("j", "1j")
    try:
        return complex(s)
    except ValueError:
        raise ConfigInvalid(f"not a complex number: {text!r}") from None


def parse_grid(text) -> np.ndarray:
    """``a`` or ``a:b:k`` -> array of reals."""
    if isinstance(text, (int, float)):
        return np.array([float(text)])
    parts = str(text).split(":")
    try:
        if len(parts) == 1:
            return np.array([float(parts[0])])
        if len(parts) == 3:
            k = int(parts[2])
            if k < 1:
                raise ValueError
            return np.linspace(float(parts[0]), float(parts[1]), k)
    except ValueError:
        pass
    raise ConfigInvalid(f"bad grid spec {text!r}; use 'a' or 'start:stop:count'")


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path: Path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    path.write_text(buf.getvalue())


def toml_dumps(obj: dict) -> str:
    """Writer for the flat TOML subset used by config files."""
    def val(v):
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, int):
            return str(v)
        if isinstance(v, float):
            return repr(v)
        if isinstance(v, str):
            return json.dumps(v)
        if isinstance(v, (list, tuple)):
            return "[" + ", ".join(val(x) for x in v) + "]"
        raise ConfigInvalid(f"cannot serialise {v!r}")
    return "".join(f"{k} = {val(v)}\n" for k, v in obj.items() if v is not None)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------
@dataclass
class ExperimentConfig:
    command: str
    n: int = 200
    d: int = 3
    seeds: list = field(default_factory=lambda: [1])
    z: list = field(default_factory=lambda: ["0.3i"])
    w: list = field(default_factory=lambda: ["1"])
    z_re: str = "0"
    z_im: str = "0.1:4:40"
    K: int = 4
    ell: int = 2
    R: int | None = None
    r: int | None = None
    R_chi: int | None = None
    trials: int = 100
    h: float | None = None
    sigma: float | None = None
    radius: float | None = None
    bins: int = 50
    tol: float = 1e-10
    max_retries: int = 100_000
    out: str | None = None
    format: str | None = None
    svg: bool = False

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigInvalid(f"unknown command {self.command!r}")
        if self.d < 1 or self.n < 2:
            raise ConfigInvalid("need n >= 2 and d >= 1")
        if not self.seeds:
            raise ConfigInvalid("seeds must be nonempty")
        if self.format not in (None, "csv", "json"):
            raise ConfigInvalid("format must be csv or json")
        for name in ("z", "w"):
            if not getattr(self, name):
                raise ConfigInvalid(f"{name} grid must be nonempty")
        if self.command in ("locallaw",):
            zs = [parse_complex(z) for z in self.z]
            if any(z.imag <= 0 for z in zs):
                raise ConfigInvalid("Im z must be positive")
        if self.command == "mcurve":
            if np.any(parse_grid(self.z_im) <= 0):
                raise ConfigInvalid("Im z must be positive")
            parse_grid(self.z_re)
        return self

    def to_dict(self):
        return {k: v for k, v in asdict(self).items() if v is not None}

    def to_toml(self):
        return toml_dumps(self.to_dict())

    @classmethod
    def from_toml(cls, text):
        try:
            data = tomli.loads(text)
        except tomli.TOMLDecodeError as exc:
            raise ConfigInvalid(f"config parse error: {exc}") from None
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data):
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise ConfigInvalid(f"unknown config keys: {sorted(extra)}")
        if "command" not in data:
            raise ConfigInvalid("config needs a command")
        return cls(**data)

    def hash(self):
        canon = {k: v for k, v in self.to_dict().items() if k != "out"}
        return hashlib.sha256(json.dumps(canon, sort_keys=True).encode()).hexdigest()


def _manifest(cfg: ExperimentConfig, files, extra=None):
    return {"command": cfg.command, "config": cfg.to_dict(), "config_hash": cfg.hash(), "seeds": cfg.seeds,
            "versions": {"digraphlaw": __version__, "python": platform.python_version(),
                         "numpy": np.__version__, "scipy": scipy.__version__},
            "csv_version": CSV_VERSION, "files": sorted(files), "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
            **(extra or {})}


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------
def _graphs(cfg):
    for seed in cfg.seeds:
        yield seed, sample_simple(cfg.n, cfg.d, seed, cfg.max_retries)


def cmd_sample(cfg, out: Path):
    files = []
    for seed, g in _graphs(cfg):
        if cfg.format != "csv":
            name = f"graph_n{cfg.n}_d{cfg.d}_seed{seed}.json"
            (out / name).write_text(g.to_json())
        else:
            name = f"graph_n{cfg.n}_d{cfg.d}_seed{seed}.csv"
            (out / name).write_text(g.to_csv())
        files.append(name)
    return files, {}


def cmd_esd(cfg, out: Path):
    files, summaries = [], []
    for seed, g in _graphs(cfg):
        rep = esd_report(g, seed)
        name = f"esd_n{cfg.n}_d{cfg.d}_seed{seed}.csv"
        write_csv(out / name, ["re", "im"], [(e.real, e.imag) for e in rep.eigenvalues])
        files.append(name)
        summaries.append(rep.summary())
        if cfg.svg:
            svg = f"esd_n{cfg.n}_d{cfg.d}_seed{seed}.svg"
            (out / svg).write_text(esd_svg(rep.eigenvalues, cfg.d))
            files.append(svg)
    (out / "esd_summary.json").write_text(json.dumps(summaries, indent=1))
    files.append("esd_summary.json")
    return files, {}


def esd_svg(eigs, d, size=480) -> str:
    """Eigenvalue scatter with the circle of radius sqrt(d) (decoration only)."""
    R = 1.15 * max(np.sqrt(d), float(np.max(np.abs(eigs))) if len(eigs) else 1.0)
    k = size / (2 * R)
    px = lambda x, y: (size / 2 + k * x, size / 2 - k * y)
    cx, cy = px(0, 0)
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}">',
             f'<rect width="{size}" height="{size}" fill="white"/>',
             f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{k * np.sqrt(d):.2f}" fill="none" stroke="#c33"/>']
    for e in eigs:
        x, y = px(e.real, e.imag)
        parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="1.2" fill="#124"/>')
    parts.append("</svg>\n")
    return "\n".join(parts)


LOCAL_COLUMNS = ["N", "d", "seed", "re_z", "im_z", "re_w", "im_w", "trace_deviation", "re_Q_I", "im_Q_I",
                 "re_Q_O", "im_Q_O", "ward_max", "s1", "log_potential"]


def _local_rows(cfg, zs, ws):
    rows = []
    for seed, g in _graphs(cfg):
        root = np.sqrt(g.d - 1)
        for w in ws:
            gs = GreenSVD(g, w, "scaled")
            s1, lp = singular_profile(g, w * root, gs.sig * root)
            for z in zs:
                if z is None:
                    rows.append([cfg.n, cfg.d, seed, np.nan, np.nan, w.real, w.imag] + [np.nan] * 6 + [s1, lp])
                    continue
                mT = solve_m_infty(z, w, g.d).mT_d
                dev = abs(gs.trace_first_block(z) - mT)
                qi, qo, _ = q_parameters(g, z, w, green=gs, skip_singular=True)
                rows.append([cfg.n, cfg.d, seed, z.real, z.imag, w.real, w.imag, dev, qi.real, qi.imag,
                             qo.real, qo.imag, gs.ward_violation(z), s1, lp])
    return rows


def cmd_locallaw(cfg, out: Path):
    zs = [parse_complex(z) for z in cfg.z]
    ws = [parse_complex(w) for w in cfg.w]
    name = "locallaw.csv"
    write_csv(out / name, LOCAL_COLUMNS, _local_rows(cfg, zs, ws))
    return [name], {}


def cmd_sv_hist(cfg, out: Path):
    ws = [parse_complex(w) for w in cfg.w]
    name = "sv_summary.csv"
    write_csv(out / name, LOCAL_COLUMNS, _local_rows(cfg, [None], ws))
    hist_rows = []
    for seed, g in _graphs(cfg):
        for w in ws:
            s = np.linalg.svd(shifted_matrix(g, w * np.sqrt(g.d - 1), "unscaled"), compute_uv=False)
            counts, edges = np.histogram(s, bins=cfg.bins, range=(0.0, 2 * g.d))
            hist_rows += [[seed, w.real, w.imag, lo, hi, c] for lo, hi, c in zip(edges[:-1], edges[1:], counts)]
    write_csv(out / "sv_hist.csv", ["seed", "re_w", "im_w", "bin_lo", "bin_hi", "count"], hist_rows)
    return [name, "sv_hist.csv"], {}


MCURVE_COLUMNS = ["re_z", "im_z", "re_w", "im_w", "d", "re_m", "im_m", "X", "Y", "Sg1", "Sg2", "residual"]


def cmd_mcurve(cfg, out: Path):
    zr, zi = parse_grid(cfg.z_re), parse_grid(cfg.z_im)
    Z = (zr[:, None] + 1j * zi[None, :]).ravel()
    rows = []
    for w in (parse_complex(w) for w in cfg.w):
        s = solve_m_infty(Z, w, cfg.d)
        for k, z in enumerate(Z):
            m = s.m_infty[k]
            rows.append([z.real, z.imag, w.real, w.imag, cfg.d, m.real, m.imag, s.X[k], s.Y[k], s.Sg1[k],
                         s.Sg2[k], s.residual[k]])
    write_csv(out / "mcurve.csv", MCURVE_COLUMNS, rows)
    return ["mcurve.csv"], {}


def cmd_girko(cfg, out: Path):
    res = []
    for seed, g in _graphs(cfg):
        sd = np.sqrt(g.d)
        psi = RadialBump(0.0, cfg.sigma or sd / 2, cfg.radius or 1.2 * sd)
        c = girko_identity_check(g, psi, cfg.h)
        res.append({"seed": seed, "lhs": c.lhs, "rhs": c.rhs, "discrepancy": c.discrepancy,
                    "relative": c.relative, "h": c.h, "nodes": c.n_nodes, "error_estimate": c.error_estimate,
                    "order": c.order})
    (out / "girko.json").write_text(json.dumps(res, indent=1))
    return ["girko.json"], {}


def cmd_switch(cfg, out: Path):
    rows, summ = [], []
    for seed in cfg.seeds:
        R_chi = cfg.R_chi if cfg.R_chi is not None else default_R_chi(cfg.n, cfg.d)
        st = switch_statistics(cfg.n, cfg.d, 0, cfg.ell, R_chi, cfg.trials, seed)
        summ.append({"seed": seed, "R_chi": R_chi, **st.summary()})
        for t in range(st.trials):
            rows.append([seed, t, st.mu[t], st.chi_zero[t], st.collisions[t], st.simplicity_blocked[t],
                         bool(st.post_tree_like[t]), st.near_x[t]])
    write_csv(out / "switch_trials.csv",
              ["seed", "trial", "mu", "chi_zero", "collisions", "simplicity_blocked", "post_tree_like", "near_x"],
              rows)
    (out / "switch_summary.json").write_text(json.dumps(summ, indent=1))
    return ["switch_trials.csv", "switch_summary.json"], {}


def tree_check(d, K, z=0.3 + 0.4j, w=0.8 + 0.3j):
    """Dense-versus-recursive deviations for the tree oracles."""
    s = solve_m_infty(z, w, d)
    m = s.m_infty
    dev = {}
    worst = 0.0
    for kind, var in (("T", ""), ("T1", "i"), ("T2", "o")):
        t = build_tree(kind, K, d)
        n = t.n
        for dl in ((m, m), (0.2 + 0.5j, 0.1 + 0.7j)):
            ext = extend_tree(t, *dl, z, w, var)
            G = green_dense(ext) if ext.side <= 6000 else None
            if G is None:
                continue
            rb = root_block(kind, K, d, z, w, *dl, var)
            worst = max(worst, float(np.abs(G[np.ix_([0, n], [0, n])] - rb).max()))
            if dl[0] == m:
                closed = root_entries_recursive(kind, z, w, d, s)
                worst = max(worst, float(np.abs(G[np.ix_([0, n], [0, n])] - closed).max()))
                for y in range(min(n, 50)):
                    for oy in (0, n):
                        worst = max(worst, abs(path_entry(ext, 0, y + oy).value - G[0, y + oy]))
    dev["root_and_path_entries"] = worst
    dev["fixed_point"] = max(max(abs(Y_iK(m, m, k, d, z, w) - m), abs(Y_oK(m, m, k, d, z, w) - m))
                             for k in range(1, K + 1))
    b = boundary_sums(min(K, 5), z, w, d)
    dev["boundary_sums"] = max(abs(b.A1 - b.A1_direct), abs(b.A2 - b.A2_direct))
    dev["jacobian"] = float(np.abs(jacobian_fd(K, z, w, d) - jacobian_prediction(K, z, w, d)).max())
    return dev


def cmd_tree(cfg, out: Path):
    rep = tree_check(cfg.d, cfg.K)
    rep = {k: float(v) for k, v in rep.items()}
    rep = {"d": cfg.d, "K": cfg.K, "tolerance": cfg.tol, **rep,
           "exact_ok": bool(max(rep["root_and_path_entries"], rep["fixed_point"], rep["boundary_sums"]) <= cfg.tol)}
    (out / "tree_check.json").write_text(json.dumps(rep, indent=1))
    if not rep["exact_ok"]:
        raise NumericalError(f"tree oracle deviation exceeds {cfg.tol}: {rep}")
    return ["tree_check.json"], {}


HANDLERS = {"sample": cmd_sample, "esd": cmd_esd, "locallaw": cmd_locallaw, "mcurve": cmd_mcurve,
            "sv-hist": cmd_sv_hist, "girko-check": cmd_girko, "switch-test": cmd_switch, "tree-check": cmd_tree}


def run(cfg: ExperimentConfig) -> int:
    """Execute one configured experiment; returns the process exit code."""
    try:
        cfg.validate()
        out = Path(cfg.out or os.environ.get(OUT_ENV, "digraphlaw-out"))
        out.mkdir(parents=True, exist_ok=True)
        files, extra = HANDLERS[cfg.command](cfg, out)
        man = _manifest(cfg, files, extra)
        (out / f"{cfg.command}_manifest.json").write_text(json.dumps(man, indent=1))
        return 0
    except ValidationError as exc:
        print(f"digraphlaw {cfg.command}: invalid input: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"digraphlaw {cfg.command}: numerical failure: {exc}", file=sys.stderr)
        return 3


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------
def build_parser():
    p = argparse.ArgumentParser(prog="digraphlaw", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="TOML config file; flags override its values")
        s.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./digraphlaw-out)")
        s.add_argument("--n", type=int)
        s.add_argument("--d", type=int)
        s.add_argument("--seed", dest="seeds", type=int, action="append", help="repeatable")
        s.add_argument("--z", action="append", help="complex z, repeatable (e.g. 0.3i)")
        s.add_argument("--w", action="append", help="complex w, repeatable (e.g. 1+0i)")
        s.add_argument("--z-re", dest="z_re")
        s.add_argument("--z-im", dest="z_im")
        s.add_argument("--K", type=int)
        s.add_argument("--ell", type=int)
        s.add_argument("--R-chi", dest="R_chi", type=int)
        s.add_argument("--trials", type=int)
        s.add_argument("--h", type=float)
        s.add_argument("--sigma", type=float)
        s.add_argument("--radius", type=float)
        s.add_argument("--bins", type=int)
        s.add_argument("--tol", type=float)
        s.add_argument("--max-retries", dest="max_retries", type=int)
        s.add_argument("--format", choices=("csv", "json"))
        s.add_argument("--svg", action="store_true", default=None, help="esd: also write an SVG scatter")
    return p


def config_from_args(ns) -> ExperimentConfig:
    base = {}
    if ns.config:
        try:
            base = tomli.loads(Path(ns.config).read_text())
        except (OSError, tomli.TOMLDecodeError) as exc:
            raise ConfigInvalid(f"cannot read config {ns.config}: {exc}") from None
        if base.get("command", ns.command) != ns.command:
            raise ConfigInvalid(f"config is for {base['command']!r}, not {ns.command!r}")
    base["command"] = ns.command
    for k, v in vars(ns).items():
        if k in ("config", "command") or v is None:
            continue
        base[k] = v
    return ExperimentConfig.from_dict(base)


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
    except (ValidationError, TypeError) as exc:
        print(f"digraphlaw: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
