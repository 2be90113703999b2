"""Command-line front end: run scenario configs and write moment tables.

    gaussrep run CONFIG.json [--out DIR] [--engine closed_form|ode|oracle|both]
    gaussrep validate CONFIG.json
    gaussrep --version

Exit codes: 0 ok, 1 usage or config error, 2 numeric failure,
3 engines disagree beyond the comparison tolerance.
"""

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from . import fock_oracle as fo
from . import linalg_kernels as lk
from . import quadratic_master_equation as qme
from . import state_factory as sf
from .gaussian_state import WeightedEnsemble, check_physical, ensemble_moments, moments

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_COMPARE = 0, 1, 2, 3
SCENARIOS = ("bogoliubov", "lossy_trap", "parametric_amplifier", "thermal_equilibrium", "custom_lindblad")
ENGINES = ("closed_form", "ode", "oracle", "both")
STATE_KINDS = ("vacuum", "coherent", "thermal", "squeezed", "squeezed_thermal", "number_ensemble",
               "wigner", "q", "p", "plus_p", "s_ordered")


class ConfigError(ValueError):
    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


def _complex_array(value, rank, path, M=None):
    """Numbers are reals; [re, im] pairs are complex; nesting gives rank."""
    try:
        a = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(path, "expected numbers or [re, im] pairs") from None
    if a.ndim == rank + 1 and a.shape[-1] == 2:
        a = a[..., 0] + 1j * a[..., 1]
    elif a.ndim == rank:
        a = a.astype(complex)
    elif rank == 2 and (a.ndim == 0 or a.shape == (2,)):
        s = complex(a) if a.ndim == 0 else complex(a[0], a[1])
        if M is None:
            raise ConfigError(path, "scalar given where a matrix is needed")
        return s * np.eye(M, dtype=complex)
    elif rank == 1 and (a.ndim == 0 or a.shape == (2,)) and M is not None:
        s = complex(a) if a.ndim == 0 else complex(a[0], a[1])
        return np.full(M, s, dtype=complex)
    else:
        raise ConfigError(path, f"expected rank-{rank} array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ConfigError(path, "non-finite entry")
    if M is not None and a.shape != (M,) * rank:
        raise ConfigError(path, f"expected shape {(M,) * rank}, got {a.shape}")
    return a


def _scalar(value, path, kind=float):
    if kind is complex:
        return complex(_complex_array(value, 0, path))
    try:
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigError(path, f"expected a {kind.__name__}") from None


def _get(d, key, path, default=None, required=False):
    if not isinstance(d, dict):
        raise ConfigError(path, "expected an object")
    if key not in d:
        if required:
            raise ConfigError(f"{path}.{key}" if path else key, "missing")
        return default
    return d[key]


@dataclass
class Scenario:
    name: str
    modes: int
    engine: str
    times: np.ndarray
    state: object = None
    spec: object = None
    omega_k: np.ndarray = None
    tau0: float = 1e-3
    nmax: int = 40
    edge_tol: float = 1e-8
    tolerance: float = 1e-4
    output: str = "out"


def _time_grid(cfg, name):
    key = "tau_grid" if (name == "thermal_equilibrium" and "tau_grid" in cfg) else "time_grid"
    grid = _get(cfg, key, "", required=True)
    if isinstance(grid, list):
        times = np.array([_scalar(t, f"{key}[{i}]") for i, t in enumerate(grid)])
    else:
        start = _scalar(_get(grid, "start", key, 0.0), f"{key}.start")
        end = _scalar(_get(grid, "end", key, required=True), f"{key}.end")
        samples = _scalar(_get(grid, "samples", key, required=True), f"{key}.samples", int)
        if samples < 2:
            raise ConfigError(f"{key}.samples", "need at least 2 samples")
        times = np.linspace(start, end, samples)
    if times.size < 1 or np.any(np.diff(times) <= 0):
        raise ConfigError(key, "time grid must be strictly increasing")
    if times[0] < 0:
        raise ConfigError(key, "time grid must be nonnegative")
    return times


def _initial_state(desc, M, path="initial_state"):
    if desc is None:
        return sf.vacuum(M)
    kind = _get(desc, "kind", path, required=True)
    if kind not in STATE_KINDS:
        raise ConfigError(f"{path}.kind", f"unknown state {kind!r}; choose from {', '.join(STATE_KINDS)}")

    def vec(key, default=None):
        v = _get(desc, key, path)
        return default if v is None else _complex_array(v, 1, f"{path}.{key}", M)

    def mat(key, default=None):
        v = _get(desc, key, path)
        return default if v is None else _complex_array(v, 2, f"{path}.{key}", M)

    alpha = vec("alpha", np.zeros(M, complex))
    try:
        if kind == "vacuum":
            return sf.vacuum(M)
        if kind == "coherent":
            return sf.coherent_projector(alpha, vec("beta"))
        if kind == "thermal":
            return sf.thermal(mat("nbar", np.zeros((M, M))), alpha=alpha)
        if kind == "squeezed":
            return sf.squeezed_vacuum(sf.SqueezeSpec(mat("xi", np.zeros((M, M)))), alpha=alpha)
        if kind == "squeezed_thermal":
            return sf.squeezed_thermal(sf.SqueezeSpec(mat("xi", np.zeros((M, M)))),
                                       mat("nbar", np.zeros((M, M))), alpha=alpha)
        if kind == "number_ensemble":
            if M != 1:
                raise ConfigError(f"{path}.kind", "number_ensemble is single-mode")
            n0 = _scalar(_get(desc, "n0", path, required=True), f"{path}.n0", int)
            r = _scalar(_get(desc, "r", path, 1.0), f"{path}.r")
            K = _scalar(_get(desc, "K", path, 32), f"{path}.K", int)
            return sf.number_state_ensemble(n0, r, K)
        s = _get(desc, "s", path)
        return sf.classical_basis(kind, alpha, vec("beta"), None if s is None else _scalar(s, f"{path}.s"))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from None


def _lindblad(name, params, M):
    path = "parameters"

    def mat(key, default=None, required=True):
        v = _get(params, key, path, required=required and default is None)
        return default if v is None else _complex_array(v, 2, f"{path}.{key}", M)

    try:
        if name == "bogoliubov":
            chi = mat("chi")
            if np.abs(chi - chi.T).max() > 1e-12:
                raise ConfigError(f"{path}.chi", "chi must be symmetric")
            return qme.bogoliubov(chi)
        if name == "lossy_trap":
            omega, gamma = mat("omega"), mat("gamma")
            for key, x in (("omega", omega), ("gamma", gamma)):
                if np.abs(x - x.conj().T).max() > 1e-12:
                    raise ConfigError(f"{path}.{key}", f"{key} must be Hermitian")
            return qme.lossy_trap(omega, gamma)
        if name == "parametric_amplifier":
            if M != 1:
                raise ConfigError("modes", "parametric_amplifier is single-mode")
            chi = _scalar(_get(params, "chi", path, required=True), f"{path}.chi", complex)
            gamma = _scalar(_get(params, "gamma", path, required=True), f"{path}.gamma")
            return qme.parametric_amplifier(chi, gamma)
        if name == "custom_lindblad":
            H1 = mat("H1", np.zeros((M, M)))
            H2 = mat("H2", np.zeros((M, M)))
            if np.abs(H1 - H1.conj().T).max() > 1e-12:
                raise ConfigError(f"{path}.H1", "H1 must be Hermitian")
            if np.abs(H2 - H2.T).max() > 1e-12:
                raise ConfigError(f"{path}.H2", "H2 must be symmetric")
            ops = []
            for k, op in enumerate(_get(params, "loss_ops", path, []) or []):
                p = f"{path}.loss_ops[{k}]"
                o1 = _get(op, "O1", p)
                o2 = _get(op, "O2", p)
                ops.append((None if o1 is None else _complex_array(o1, 1, f"{p}.O1", M),
                            None if o2 is None else _complex_array(o2, 1, f"{p}.O2", M)))
            return qme.LindbladSpec(H1, H2, tuple(ops))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from None
    raise ConfigError("scenario", f"unknown scenario {name!r}")


def parse_config(cfg, engine=None, out=None):
    if not isinstance(cfg, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    name = _get(cfg, "scenario", "", required=True)
    if name not in SCENARIOS:
        raise ConfigError("scenario", f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")
    engine = engine or _get(cfg, "engine", "", "closed_form")
    if engine not in ENGINES:
        raise ConfigError("engine", f"unknown engine {engine!r}")
    params = _get(cfg, "parameters", "", {}) or {}
    oracle = _get(cfg, "oracle", "", {}) or {}
    tol = _scalar(_get(cfg, "tolerance", "", 1e-4), "tolerance")
    output = out or _get(cfg, "output", "", "out")
    times = _time_grid(cfg, name)

    if name == "thermal_equilibrium":
        w = np.atleast_1d(np.array(_get(params, "omega", "parameters", required=True), dtype=float))
        if w.ndim != 1 or np.any(w <= 0):
            raise ConfigError("parameters.omega", "need positive per-mode frequencies")
        M = int(_get(cfg, "modes", "", w.size))
        if M != w.size:
            raise ConfigError("modes", "mode count disagrees with parameters.omega")
        tau0 = _scalar(_get(params, "tau0", "parameters", 1e-3), "parameters.tau0")
        if tau0 <= 0 or times[0] < tau0:
            raise ConfigError("tau_grid", "tau grid must start at or after tau0 > 0")
        nmax = int(_get(oracle, "nmax", "oracle", 200))
        return Scenario(name, M, engine, times, omega_k=w, tau0=tau0, nmax=nmax, tolerance=tol, output=output)

    M = _scalar(_get(cfg, "modes", "", 1), "modes", int)
    if M < 1:
        raise ConfigError("modes", "need at least one mode")
    spec = _lindblad(name, params, M)
    state = _initial_state(_get(cfg, "initial_state", ""), M)
    nmax = int(_get(oracle, "nmax", "oracle", 40 if M == 1 else 12))
    edge = _get(oracle, "edge_tol", "oracle", 1e-8)
    return Scenario(name, M, engine, times, state=state, spec=spec, nmax=nmax,
                    edge_tol=None if edge is None else float(edge), tolerance=tol, output=output)


def _moment_columns(M):
    cols = [("omega", None)]
    cols += [(f"a_{i}", ("a", i)) for i in range(M)]
    cols += [(f"adag_{i}", ("adag", i)) for i in range(M)]
    cols += [(f"aa_{i}_{j}", ("aa", i, j)) for i in range(M) for j in range(i, M)]
    cols += [(f"n_{i}_{j}", ("normal", i, j)) for i in range(M) for j in range(M)]
    cols += [(f"adagadag_{i}_{j}", ("adag_adag", i, j)) for i in range(M) for j in range(i, M)]
    return cols


def _row(cols, mom, omega):
    vals = []
    for _, key in cols:
        vals.append(omega if key is None else getattr(mom, key[0])[key[1:]])
    return np.array(vals, dtype=complex)


def _gaussian_table(sc, engine):
    q = qme.lindblad_to_qme(sc.spec)
    used = engine
    try:
        traj = qme.moment_trajectory(q, sc.state, sc.times, engine)
    except qme.SteadyStateUnavailable:
        used = "ode"
        traj = qme.moment_trajectory(q, sc.state, sc.times, "ode")
    cols = _moment_columns(sc.modes)
    rows = np.array([_row(cols, m, o) for m, o in zip(traj.moments, traj.omega)])
    return cols, rows, used, q


def _oracle_table(sc):
    if sc.modes > 2:
        raise ConfigError("modes", "the Fock oracle supports at most 2 modes")
    space = fo.FockSpace(sc.modes, sc.nmax)
    if isinstance(sc.state, WeightedEnsemble):
        rho0 = fo.build_ensemble(sc.state, space)
    else:
        rho0 = fo.build_kernel(sc.state, space)
    if abs(rho0.trace) < 1e-12:
        raise fo.UnsupportedKernelError("initial kernel has vanishing truncated trace")
    states = fo.evolve_lindblad(sc.spec, rho0, sc.times, edge_tol=sc.edge_tol)
    cols = _moment_columns(sc.modes)
    rows = np.array([_row(cols, fo.moments_fock(r), r.trace) for r in states])
    return cols, rows


def _thermal_tables(sc, engine):
    cols = [("omega", None)] + [(f"n_{k}", k) for k in range(sc.modes)]
    if engine == "oracle":
        Z, nb = fo.imaginary_time_oracle(sc.omega_k, sc.times, sc.nmax)
        return cols, np.column_stack([Z, nb]).astype(complex)
    method = "ode" if engine == "ode" else "analytic"
    traj = qme.propagate_imaginary_time(sc.omega_k, sc.times, tau0=sc.tau0, method=method)
    return cols, np.array([[g.omega] + list(g.n.diagonal()) for g in traj])


def _fmt(x):
    return format(float(x), ".17g")


def _write_csv(path, tcol, times, blocks):
    header = [tcol]
    for prefix, cols, _ in blocks:
        for name, _ in cols:
            header += [f"{prefix}{name}_re", f"{prefix}{name}_im"]
    lines = [",".join(header)]
    for k, t in enumerate(times):
        vals = [_fmt(t)]
        for _, _, rows in blocks:
            for v in rows[k]:
                vals += [_fmt(v.real), _fmt(v.imag)]
        lines.append(",".join(vals))
    path.write_text("\n".join(lines) + "\n")


def _cjson(z):
    z = complex(z)
    return [z.real, z.imag]


def _mjson(x):
    return None if x is None else [[_cjson(v) for v in row] for row in np.atleast_2d(x)]


def run(sc):
    """Run one scenario; returns (exit code, summary dict, csv path)."""
    out = Path(sc.output)
    out.mkdir(parents=True, exist_ok=True)
    summary = {"scenario": sc.name, "modes": sc.modes, "engine": sc.engine, "version": __version__,
               "samples": int(sc.times.size)}
    blocks = []
    code = EXIT_OK

    if sc.name == "thermal_equilibrium":
        tcol = "tau"
        if sc.engine == "both":
            cols, rows = _thermal_tables(sc, "closed_form")
            _, orows = _thermal_tables(sc, "oracle")
            blocks = [("gauss_", cols, rows), ("oracle_", cols, orows)]
        else:
            cols, rows = _thermal_tables(sc, sc.engine)
            blocks = [("", cols, rows)]
        summary["omega_k"] = sc.omega_k.tolist()
        summary["tau0"] = sc.tau0
    else:
        tcol = "t"
        q = qme.lindblad_to_qme(sc.spec)
        drift = qme.drift_matrices(q)
        order = np.lexsort((drift.spectrum.imag, drift.spectrum.real))
        summary["E_spectrum"] = [_cjson(z) for z in drift.spectrum[order]]
        summary["steady_state"] = {
            "exists": drift.has_steady_state,
            "unique": drift.sigma0_unique,
            "stable": drift.stable,
            "alpha0": None if drift.alpha0 is None else [_cjson(z) for z in drift.alpha0],
            "sigma0": _mjson(drift.sigma0),
        }
        summary["validation"] = {"trace_preserving": qme.validate_trace_preserving(q).lines()}
        members = sc.state.members if isinstance(sc.state, WeightedEnsemble) else (sc.state,)
        summary["validation"]["initial_state_physical"] = all(check_physical(g).physical for g in members) \
            if not isinstance(sc.state, WeightedEnsemble) else None
        if sc.engine in ("closed_form", "ode", "both"):
            eng = "closed_form" if sc.engine == "both" else sc.engine
            cols, rows, used, _ = _gaussian_table(sc, eng)
            summary["gaussian_engine"] = used
            blocks.append(("gauss_" if sc.engine == "both" else "", cols, rows))
        if sc.engine in ("oracle", "both"):
            cols, orows = _oracle_table(sc)
            summary["oracle"] = {"nmax": sc.nmax, "edge_tol": sc.edge_tol}
            blocks.append(("oracle_" if sc.engine == "both" else "", cols, orows))

    if sc.engine == "both":
        dev = float(np.abs(blocks[0][2] - blocks[1][2]).max())
        summary["max_abs_deviation"] = dev
        summary["tolerance"] = sc.tolerance
        summary["comparison_passed"] = dev <= sc.tolerance
        if dev > sc.tolerance:
            code = EXIT_COMPARE

    stem = f"{sc.name}_{sc.engine}"
    csv_path = out / f"{stem}.csv"
    _write_csv(csv_path, tcol, sc.times, blocks)
    (out / f"{stem}_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return code, summary, csv_path


def validate(cfg):
    """Human-readable check list; returns (ok, lines)."""
    lines = []
    try:
        sc = parse_config(cfg)
    except ConfigError as exc:
        return False, [f"FAIL {exc}"]
    lines.append(f"PASS config: scenario {sc.name}, {sc.modes} mode(s), {sc.times.size} samples")
    if sc.name == "thermal_equilibrium":
        lines.append("PASS frequencies positive")
        return True, lines
    q = qme.lindblad_to_qme(sc.spec)
    lines += [f"{ln.split(' ', 1)[0]} trace_preserving.{ln.split(' ', 1)[1]}"
              for ln in qme.validate_trace_preserving(q).lines()]
    members = sc.state.members if isinstance(sc.state, WeightedEnsemble) else (sc.state,)
    if isinstance(sc.state, WeightedEnsemble):
        m = ensemble_moments(sc.state)
        lines.append(f"PASS initial_state: ensemble of {len(members)} kernels, <a^dag a> = {m.normal[0, 0].real:.6g}")
    else:
        rep = check_physical(sc.state)
        if rep.physical:
            lines.append("PASS initial_state: physical")
        else:
            lines.append(f"WARN initial_state: unphysical basis member ({', '.join(rep.failures())}); run permitted")
    ok = not any(ln.startswith("FAIL") for ln in lines)
    return ok, lines


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _load(path):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError("<file>", str(exc)) from None
    except json.JSONDecodeError as exc:
        raise ConfigError("<json>", str(exc)) from None


def main(argv=None):
    parser = _Parser(prog="gaussrep", description="Gaussian phase-space evolution of quadratic master equations")
    parser.add_argument("--version", action="version", version=f"gaussrep {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p_run = sub.add_parser("run", help="run a scenario config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--engine", choices=ENGINES, default=None)
    p_val = sub.add_parser("validate", help="check a scenario config")
    p_val.add_argument("config")
    args = parser.parse_args(argv)

    try:
        cfg = _load(args.config)
        if args.command == "validate":
            ok, lines = validate(cfg)
            print("\n".join(lines))
            return EXIT_OK if ok else EXIT_CONFIG
        sc = parse_config(cfg, engine=args.engine, out=args.out)
        code, summary, csv_path = run(sc)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (qme.IntegrationError, fo.TruncationError, fo.UnsupportedKernelError,
            lk.LinalgError, RuntimeError, FloatingPointError) as exc:
        print(f"numeric failure in scenario {cfg.get('scenario', '?')}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"wrote {csv_path}")
    if "max_abs_deviation" in summary:
        verdict = "ok" if code == EXIT_OK else "EXCEEDS tolerance"
        print(f"max |gaussian - oracle| = {summary['max_abs_deviation']:.3g} ({verdict} {summary['tolerance']:g})")
    return code


if __name__ == "__main__":
    sys.exit(main())
