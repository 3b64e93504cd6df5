"""``qic`` command line front end.

Each subcommand reads one JSON experiment config, runs it, prints a short
report on stdout and optionally writes the result table with ``--out``.

Exit codes: 0 success, 2 config/usage error, 3 domain invariant
violated, 4 numerical non-convergence, 5 output I/O failure.
"""
import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import _backend, lambda_system, measures, povm, setup, states
from .errors import ConvergenceError, InvariantError

KINDS = (
    "entropy",
    "coherent",
    "one-time",
    "compatible",
    "epsilon",
    "lambda-surface",
    "lambda-rate",
    "setup-capacity",
)
SURFACE_COLUMNS = ("gamma_t", "theta", "value")

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT, EXIT_CONVERGENCE, EXIT_IO = 0, 2, 3, 4, 5


class ConfigError(ValueError):
    pass


@dataclass
class RunReport:
    kind: str
    inputs: dict
    scalars: dict = field(default_factory=dict)
    columns: tuple = ()
    rows: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    info_columns: tuple = ()  # table columns holding information values
    units: str = "bits"
    wall_time: float = 0.0

    def to_text(self):
        out = [f"experiment: {self.kind}", f"units: {self.units}"]
        for k, v in self.scalars.items():
            out.append(f"{k}: {_fmt(v)}")
        if self.rows:
            out.append(f"table: {len(self.rows)} rows x {len(self.columns)} columns")
            if len(self.rows) <= 16:
                out.append("  " + ",".join(self.columns))
                out.extend("  " + ",".join(_fmt(x) for x in row) for row in self.rows)
        for w in self.warnings:
            out.append(f"warning: {w}")
        out.append(f"wall_time_s: {self.wall_time:.3f}")
        return "\n".join(out) + "\n"


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.9g}"
    return str(x)


# ---------------------------------------------------------------- parsing


def _scalar(x, where):
    if isinstance(x, bool):
        raise ConfigError(f"{where}: expected a number, got {x!r}")
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, (list, tuple)) and len(x) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in x
    ):
        return complex(x[0], x[1])
    raise ConfigError(f"{where}: expected a number or [re, im] pair, got {x!r}")


def parse_matrix(obj, where="matrix"):
    if not isinstance(obj, list) or not obj or not all(isinstance(r, list) for r in obj):
        raise ConfigError(f"{where}: expected a nested list of rows")
    width = len(obj[0])
    if any(len(r) != width for r in obj):
        raise ConfigError(f"{where}: ragged rows")
    return np.array(
        [[_scalar(x, f"{where}[{i}][{j}]") for j, x in enumerate(r)] for i, r in enumerate(obj)]
    )


def parse_vector(obj, where="vector"):
    if not isinstance(obj, list) or not obj:
        raise ConfigError(f"{where}: expected a non-empty list")
    return np.array([_scalar(x, f"{where}[{i}]") for i, x in enumerate(obj)])


def parse_grid(obj, where="grid"):
    if isinstance(obj, list):
        vals = [_real(v, where) for v in obj]
    elif isinstance(obj, dict):
        try:
            start, stop, count = obj["start"], obj["stop"], obj["count"]
        except KeyError as exc:
            raise ConfigError(f"{where}: missing {exc.args[0]!r}") from None
        if not isinstance(count, int) or isinstance(count, bool) or count < 1:
            raise ConfigError(f"{where}: count must be a positive integer")
        vals = list(np.linspace(_real(start, where), _real(stop, where), count))
    else:
        raise ConfigError(f"{where}: expected {{start, stop, count}} or a list")
    if not vals:
        raise ConfigError(f"{where}: grid is empty")
    return np.array(vals, dtype=float)


def _real(x, where):
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
        raise ConfigError(f"{where}: expected a finite number, got {x!r}")
    return float(x)


def _int(x, where):
    if isinstance(x, bool) or not isinstance(x, int):
        raise ConfigError(f"{where}: expected an integer, got {x!r}")
    return x


def _require(cfg, key):
    if key not in cfg:
        raise ConfigError(f"missing required key {key!r}")
    return cfg[key]


def _density(cfg, key="rho"):
    m = parse_matrix(_require(cfg, key), key)
    dims = cfg.get("dims")
    if dims is not None and (
        not isinstance(dims, list) or not all(isinstance(d, int) and not isinstance(d, bool) for d in dims)
    ):
        raise ConfigError("dims: expected a list of integers")
    return states.DensityMatrix(m, dims)


def _channel(obj, where="channel"):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object with 'kraus'")
    ks = _require(obj, "kraus")
    if not isinstance(ks, list) or not ks:
        raise ConfigError(f"{where}.kraus: expected a non-empty list of matrices")
    return states.QuantumChannel([parse_matrix(k, f"{where}.kraus[{i}]") for i, k in enumerate(ks)])


def _substitute(obj, controls):
    """Replace ``"$name"`` strings by control values."""
    if isinstance(obj, str) and obj.startswith("$"):
        name = obj[1:]
        if name not in controls:
            raise ConfigError(f"unknown control reference {obj!r}")
        return controls[name]
    if isinstance(obj, list):
        return [_substitute(v, controls) for v in obj]
    if isinstance(obj, dict):
        return {k: _substitute(v, controls) for k, v in obj.items()}
    return obj


def _measure(obj, where):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object")
    kind = obj.get("type", "bloch")
    if kind == "bloch":
        return povm.bloch_quadrature(
            _int(obj.get("order", povm.DEFAULT_INFO_ORDER), f"{where}.order"),
            _real(obj.get("phi_offset", 0.0), f"{where}.phi_offset"),
        )
    if kind == "basis":
        vecs = [parse_vector(v, f"{where}.vectors[{i}]") for i, v in enumerate(_require(obj, "vectors"))]
        weights = obj.get("weights")
        return povm.basis_measure(vecs, None if weights is None else parse_grid(weights, f"{where}.weights"))
    raise ConfigError(f"{where}.type: unknown measure type {kind!r}")


def _psm(obj, where):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object")
    kind = _require(obj, "type")
    if kind == "projectors":
        vecs = [parse_vector(v, f"{where}.states[{i}]") for i, v in enumerate(_require(obj, "states"))]
        psm = setup.psm_from_projectors(vecs, parse_grid(_require(obj, "weights"), f"{where}.weights"))
    elif kind == "basis":
        # real orthonormal basis rotated by `angle` from the computational one
        phi = _real(obj.get("angle", 0.0), f"{where}.angle")
        vecs = [[math.cos(phi), math.sin(phi)], [-math.sin(phi), math.cos(phi)]]
        psm = setup.psm_from_projectors(vecs, [1.0, 1.0])
    elif kind == "bloch":
        m = _measure(obj, where)
        psm = setup.psm_from_projectors(m.nodes, m.weights)
    elif kind == "unitaries":
        us = [parse_matrix(u, f"{where}.unitaries[{i}]") for i, u in enumerate(_require(obj, "unitaries"))]
        env = obj.get("environment")
        psm = setup.psm_from_unitary_family(
            us,
            parse_grid(_require(obj, "weights"), f"{where}.weights"),
            None if env is None else _channel(env, f"{where}.environment"),
        )
    else:
        raise ConfigError(f"{where}.type: unknown PSM type {kind!r}")
    embed = obj.get("embed")
    if embed is not None and not isinstance(embed, dict):
        raise ConfigError(f"{where}.embed: expected {{dims, acted}}")
    if embed is not None:
        psm = setup.embed_psm(psm, _require(embed, "dims"), _int(_require(embed, "acted"), f"{where}.embed.acted"))
    return psm


def _setup_model(cfg, controls=None):
    cfg = _substitute(cfg, controls or {})
    chan = cfg.get("channel")
    return setup.SetupModel(
        preparation=_psm(_require(cfg, "preparation"), "preparation"),
        channel=None if chan is None else _channel(chan),
        measurement=_psm(_require(cfg, "measurement"), "measurement"),
        rho_in=_density(cfg, "rho_in"),
    )


# ---------------------------------------------------------------- runners


def _run_entropy(cfg, rep):
    rho = _density(cfg)
    rep.scalars["entropy"] = measures.von_neumann_entropy(rho)


def _info_scalars(rep, name, value):
    rep.scalars[f"{name}_raw"] = value.raw_bits
    rep.scalars[f"{name}_clamped"] = value.clamped_bits


def _run_coherent(cfg, rep):
    n = _channel(cfg, "config")
    rho = _density(cfg)
    _info_scalars(rep, "coherent_information", measures.coherent_information(n, rho))
    rep.scalars["output_entropy"] = measures.von_neumann_entropy(states.apply(n, rho))
    rep.scalars["entropy_exchange"] = measures.entropy_exchange(n, rho)


def _run_one_time(cfg, rep):
    rho = _density(cfg)
    _info_scalars(rep, "one_time_coherent_information", measures.one_time_coherent_information(rho))
    _info_scalars(rep, "quantum_mutual_information", measures.quantum_mutual_information(rho))


def _run_compatible(cfg, rep):
    rho = _density(cfg)
    order = _int(cfg.get("order", povm.DEFAULT_INFO_ORDER), "order")
    if "measure_a" in cfg or "measure_b" in cfg:
        m_a = _measure(cfg.get("measure_a", {"order": order}), "measure_a")
        m_b = _measure(cfg.get("measure_b", {"order": order, "phi_offset": 0.5}), "measure_b")
    else:
        m_a, m_b = povm.default_measure_pair(order)
    _info_scalars(rep, "compatible_information", povm.compatible_information(rho, m_a, m_b))


def _run_epsilon(cfg, rep):
    order = _int(cfg.get("order", povm.DEFAULT_OPERATOR_ORDER), "order")
    eps = povm.epsilon_operator(povm.bloch_quadrature(order))
    singlet = states.bell_state(0).amplitudes
    rep.scalars["min_eigenvalue"] = float(eps.eigenvalues.min())
    rep.scalars["singlet_overlap"] = float(abs(np.vdot(singlet, eps.eigenvectors[:, 0])) ** 2)
    rep.columns = ("index", "eigenvalue")
    rep.rows = [(i, float(v)) for i, v in enumerate(eps.eigenvalues)]


def _run_lambda_surface(cfg, rep):
    surf = lambda_system.coherent_info_surface(
        parse_grid(_require(cfg, "gamma_t"), "gamma_t"),
        parse_grid(_require(cfg, "theta"), "theta"),
        _real(cfg.get("gamma1", 1.0), "gamma1"),
        _real(cfg.get("gamma2", 1.0), "gamma2"),
        None if cfg.get("coupling") is None else _real(cfg["coupling"], "coupling"),
    )
    rep.columns = SURFACE_COLUMNS
    rep.rows = surf.rows()
    rep.info_columns = ("value",)
    rep.scalars["max_value"] = float(surf.value.max())


def _run_lambda_rate(cfg, rep):
    g1 = _real(cfg.get("gamma1", 1.0), "gamma1")
    g2 = _real(cfg.get("gamma2", 1.0), "gamma2")
    defaults = lambda_system.SearchConfig()
    conf = lambda_system.SearchConfig(
        t_max=_real(cfg.get("t_max", defaults.t_max), "t_max"),
        n_t=_int(cfg.get("n_t", defaults.n_t), "n_t"),
        n_theta=_int(cfg.get("n_theta", defaults.n_theta), "n_theta"),
        n_coupling=_int(cfg.get("n_coupling", defaults.n_coupling), "n_coupling"),
        rel_tol=_real(cfg.get("rel_tol", defaults.rel_tol), "rel_tol"),
    )
    r = lambda_system.optimal_rate(g1, g2, conf)
    rep.scalars.update(
        rate_per_gamma=r.rate,
        rate_per_total_gamma=r.rate_total,
        gamma_t_opt=r.t_opt,
        theta_opt=r.theta_opt,
        coupling_opt=r.coupling_opt,
        info_at_opt=r.info_at_opt,
        evaluations=r.evaluations,
    )


def _run_setup_capacity(cfg, rep):
    controls = cfg.get("controls") or {}
    if not isinstance(controls, dict):
        raise ConfigError("controls: expected an object of grids")
    if not controls:
        cap = setup.information_capacity(setup.joint_readout_distribution(_setup_model(cfg)))
        _info_scalars(rep, "capacity", cap)
        return
    grids = {k: list(parse_grid(v, f"controls.{k}")) for k, v in controls.items()}
    base = _setup_model(cfg, {k: g[0] for k, g in grids.items()})
    base = setup.SetupModel(base.preparation, base.channel, base.measurement, base.rho_in, grids)
    opt = setup.optimize_controls(base, lambda c: _setup_model(cfg, c))
    _info_scalars(rep, "capacity", opt.capacity)
    for k, v in opt.controls.items():
        rep.scalars[f"best_{k}"] = float(v)
    rep.columns = tuple(grids) + ("capacity",)
    rep.rows = [tuple(float(c[k]) for k in grids) + (v,) for c, v in opt.evaluations]
    rep.info_columns = ("capacity",)


RUNNERS = {
    "entropy": _run_entropy,
    "coherent": _run_coherent,
    "one-time": _run_one_time,
    "compatible": _run_compatible,
    "epsilon": _run_epsilon,
    "lambda-surface": _run_lambda_surface,
    "lambda-rate": _run_lambda_rate,
    "setup-capacity": _run_setup_capacity,
}

# scalars that are not information values and never get unit conversion
_PLAIN_SCALARS = {
    "min_eigenvalue",
    "singlet_overlap",
    "gamma_t_opt",
    "theta_opt",
    "coupling_opt",
    "evaluations",
}


class _Collector(logging.Handler):
    def __init__(self):
        super().__init__(logging.INFO)
        self.messages = []

    def emit(self, record):
        self.messages.append(record.getMessage())


def run(config, kind=None, nats=False):
    """Run one experiment config (a dict) and return a :class:`RunReport`."""
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    cfg_kind = config.get("kind", kind)
    if kind is not None and cfg_kind != kind:
        raise ConfigError(f"config kind {cfg_kind!r} does not match command {kind!r}")
    if cfg_kind not in RUNNERS:
        raise ConfigError(f"unknown experiment kind {cfg_kind!r}")
    nats = nats or config.get("units", "bits") == "nats"
    rep = RunReport(kind=cfg_kind, inputs=config, units="nats" if nats else "bits")
    handler = _Collector()
    logger = logging.getLogger("qic")
    logger.addHandler(handler)
    old_level = logger.level
    logger.setLevel(logging.INFO)
    t0 = time.perf_counter()
    try:
        RUNNERS[cfg_kind](config, rep)
    finally:
        logger.removeHandler(handler)
        logger.setLevel(old_level)
    rep.wall_time = time.perf_counter() - t0
    rep.warnings = handler.messages
    if nats:
        ln2 = math.log(2.0)
        for k in list(rep.scalars):
            if k not in _PLAIN_SCALARS:
                rep.scalars[k] = rep.scalars[k] * ln2
        idx = [rep.columns.index(c) for c in rep.info_columns]
        rep.rows = [
            tuple(v * ln2 if i in idx else v for i, v in enumerate(row)) for row in rep.rows
        ]
    for k, v in rep.scalars.items():
        if not math.isfinite(v):
            raise InvariantError("finite", f"scalar {k} is not finite")
    return rep


# ---------------------------------------------------------------- output


def _cell(x):
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.9g}"
    return str(x)


def render_table(columns, rows, fmt):
    if not rows:
        raise ValueError("refusing to emit an empty table")
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(x) for x in row])
        return buf.getvalue()
    if fmt == "json":
        # full precision: shortest repr round-trips exactly
        records = [
            {c: (float(x) if isinstance(x, (float, np.floating)) else x) for c, x in zip(columns, row)}
            for row in rows
        ]
        return json.dumps(records, indent=1) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def emit_table(columns, rows, fmt, path):
    text = render_table(columns, rows, fmt)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def emit_surface(table, fmt, path):
    """Write ``gamma_t,theta,value`` records of a surface (a SurfaceTable or rows)."""
    rows = table.rows() if hasattr(table, "rows") else list(table)
    emit_table(SURFACE_COLUMNS, rows, fmt, path)


def _report_table(rep):
    if rep.rows:
        return rep.columns, rep.rows
    return ("name", "value"), [(k, float(v)) for k, v in rep.scalars.items()]


# ---------------------------------------------------------------- entry point


def build_parser():
    p = argparse.ArgumentParser(prog="qic", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        sp = sub.add_parser(kind)
        sp.add_argument("--config", required=True, help="JSON experiment config")
        sp.add_argument("--out", help="write the result table to this path")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--nats", action="store_true", help="report information in nats")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        _backend.configure_threads()
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        with open(args.config, encoding="utf-8") as fh:
            config = json.load(fh)
        rep = run(config, kind=args.kind, nats=args.nats)
    except (OSError, json.JSONDecodeError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantError as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ConvergenceError as exc:
        print(f"did not converge: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    sys.stdout.write(rep.to_text())
    if args.out:
        try:
            emit_table(*_report_table(rep), args.format, args.out)
        except OSError as exc:
            print(f"cannot write {args.out}: {exc}", file=sys.stderr)
            return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
