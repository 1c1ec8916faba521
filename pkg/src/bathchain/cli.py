"""Configuration ingestion, run orchestration and bit-stable file outputs.

Modes: `map` (spectral density -> chain coefficients + diagnostics),
`dynamics` (map, assemble, evolve, write the trajectory), `verify` (the
cross-oracle suite).  Configs are INI-style key = value sections; every float
written to disk goes through one fixed-precision formatter so identical
configs give byte-identical outputs.

Only the standard library is imported at module level: --threads must cap the
BLAS pool before numpy first loads.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .errors import BathchainError, ConfigError

BATH_FAMILIES = ("power_law", "obo", "adolphs_renger", "table")
MAP_METHODS = ("auto", "analytic_jacobi", "stieltjes", "lanczos", "little_q")


# ---------------------------------------------------------------------------
# Configuration model
# ---------------------------------------------------------------------------

@dataclass
class BathConfig:
    family: str = "obo"
    # power_law
    alpha: float = 0.1
    s: float = 1.0
    # obo
    lam: float = 100.0
    gamma: float = 53.0
    # adolphs_renger
    s_h: float = 0.22
    omega_h: float = 180.0
    omega_1: float = 0.5
    omega_2: float = 1.95
    # table
    file: str = ""
    lines: str = ""  # "omega:weight, omega:weight"
    omega_c: float = 0.0  # 0 = family default


@dataclass
class SystemConfig:
    j: float = 100.0
    eps1: float = 100.0
    eps2: float = 0.0


@dataclass
class MappingConfig:
    method: str = "auto"
    n_chain: int = 100
    n_intervals: int = 32
    tol: float = 1e-12
    max_nodes: int = 2**14
    asym_tol: float = 1e-3
    szego_tol: float = 1e-3
    terminal_diag: bool = False
    delta: float = 2.0  # little_q log-discretization ratio


@dataclass
class EvolutionSection:
    dt: float = 1e-3
    t_final: float = 1.0
    trotter_order: int = 2
    chi_max: int = 30
    trunc_tol: float = 1e-10
    local_dim: int = 11
    measure_stride: int = 10
    excited_site: int = 1
    abort_discard: float = 1e-3
    track_occupations: bool = False
    lifetime_fraction: float = 0.1


@dataclass
class OutputConfig:
    directory: str = "."
    stem: str = "run"
    precision: int = 12


@dataclass
class RunConfig:
    bath: BathConfig = field(default_factory=BathConfig)
    bath2: BathConfig | None = None
    system: SystemConfig = field(default_factory=SystemConfig)
    mapping: MappingConfig = field(default_factory=MappingConfig)
    evolution: EvolutionSection = field(default_factory=EvolutionSection)
    output: OutputConfig = field(default_factory=OutputConfig)
    seed: int = 0  # reserved: every current algorithm is deterministic
    threads: int = 0  # 0 = leave the BLAS pool alone


_SECTION_TYPES = {
    "bath": BathConfig,
    "bath2": BathConfig,
    "system": SystemConfig,
    "mapping": MappingConfig,
    "evolution": EvolutionSection,
    "output": OutputConfig,
}
_KEY_ALIASES = {"lambda": "lam"}
_ALIAS_BACK = {v: k for k, v in _KEY_ALIASES.items()}


def _coerce(section: str, key: str, raw: str, target_type: type):
    raw = raw.strip()
    try:
        if target_type is bool:
            low = raw.lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ValueError(raw)
        return target_type(raw)
    except ValueError as exc:
        raise ConfigError(
            f"[{section}] {key} = {raw!r} is not a valid {target_type.__name__}"
        ) from exc


def _fill_section(obj, section: str, items: dict[str, str]):
    known = {f.name: f.type for f in fields(obj)}
    types = {f.name: type(getattr(obj, f.name)) for f in fields(obj)}
    for key, raw in items.items():
        name = _KEY_ALIASES.get(key, key)
        if name not in known:
            raise ConfigError(f"[{section}] unknown key {key!r}")
        setattr(obj, name, _coerce(section, key, raw, types[name]))
    return obj


def parse_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse failure: {exc}") from exc
    cfg = RunConfig()
    for section in parser.sections():
        items = dict(parser.items(section))
        if section == "run":
            for key, raw in items.items():
                if key == "seed":
                    cfg.seed = _coerce(section, key, raw, int)
                elif key == "threads":
                    cfg.threads = _coerce(section, key, raw, int)
                else:
                    raise ConfigError(f"[run] unknown key {key!r}")
        elif section in _SECTION_TYPES:
            if section == "bath2":
                cfg.bath2 = _fill_section(BathConfig(), section, items)
            else:
                _fill_section(getattr(cfg, section), section, items)
        else:
            raise ConfigError(f"unknown section [{section}]")
    _validate(cfg)
    return cfg


def load_config(path: str | Path) -> RunConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_config(p.read_text(encoding="utf-8"))


def _validate(cfg: RunConfig):
    for label, bath in (("bath", cfg.bath), ("bath2", cfg.bath2)):
        if bath is None:
            continue
        if bath.family not in BATH_FAMILIES:
            raise ConfigError(
                f"[{label}] family must be one of {BATH_FAMILIES}, "
                f"got {bath.family!r}")
        if bath.family == "table" and not bath.file:
            raise ConfigError(f"[{label}] family 'table' needs file = <path>")
    if cfg.mapping.method not in MAP_METHODS:
        raise ConfigError(
            f"[mapping] method must be one of {MAP_METHODS}, "
            f"got {cfg.mapping.method!r}")
    if cfg.mapping.n_chain < 1:
        raise ConfigError("[mapping] n_chain must be >= 1")
    if cfg.evolution.excited_site not in (1, 2):
        raise ConfigError("[evolution] excited_site must be 1 or 2")
    if cfg.output.precision < 1 or cfg.output.precision > 17:
        raise ConfigError("[output] precision must be in [1, 17]")


def serialize_config(cfg: RunConfig) -> str:
    """Inverse of parse_config on every recognized field."""
    out = []

    def emit(section: str, obj):
        out.append(f"[{section}]")
        for f in fields(obj):
            key = _ALIAS_BACK.get(f.name, f.name)
            out.append(f"{key} = {getattr(obj, f.name)}")
        out.append("")

    emit("bath", cfg.bath)
    if cfg.bath2 is not None:
        emit("bath2", cfg.bath2)
    emit("system", cfg.system)
    emit("mapping", cfg.mapping)
    emit("evolution", cfg.evolution)
    emit("output", cfg.output)
    out.append("[run]")
    out.append(f"seed = {cfg.seed}")
    out.append(f"threads = {cfg.threads}")
    out.append("")
    return "\n".join(out)


def apply_overrides(cfg: RunConfig, overrides: list[str]) -> RunConfig:
    """--override section.key=value, repeatable."""
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(
                f"override {item!r} must look like section.key=value")
        dotted, value = item.split("=", 1)
        section, key = dotted.strip().split(".", 1)
        section, key = section.strip(), key.strip()
        if section == "run":
            if key == "seed":
                cfg.seed = _coerce(section, key, value, int)
            elif key == "threads":
                cfg.threads = _coerce(section, key, value, int)
            else:
                raise ConfigError(f"[run] unknown key {key!r}")
            continue
        if section not in _SECTION_TYPES:
            raise ConfigError(f"unknown section [{section}] in override")
        if section == "bath2" and cfg.bath2 is None:
            cfg.bath2 = BathConfig()
        _fill_section(cfg.bath2 if section == "bath2" else getattr(cfg, section),
                      section, {key: value})
    _validate(cfg)
    return cfg


# ---------------------------------------------------------------------------
# Physics plumbing
# ---------------------------------------------------------------------------

def build_density(bath: BathConfig):
    from . import specdens

    omega_c = bath.omega_c if bath.omega_c > 0 else None
    if bath.family == "power_law":
        return specdens.power_law(bath.alpha, bath.s,
                                  omega_c if omega_c else 1000.0)
    if bath.family == "obo":
        return specdens.overdamped_brownian(bath.lam, bath.gamma, omega_c)
    if bath.family == "adolphs_renger":
        return specdens.adolphs_renger(bath.lam, bath.s_h, bath.omega_h,
                                       bath.omega_1, bath.omega_2,
                                       omega_c if omega_c else 1000.0)
    if bath.family == "table":
        import numpy as np

        data = np.loadtxt(bath.file)
        if data.ndim != 2 or data.shape[1] != 2:
            raise ConfigError(
                f"[bath] table file {bath.file!r} must have two columns")
        lines = []
        if bath.lines:
            for part in bath.lines.split(","):
                om, w = part.split(":")
                lines.append((float(om), float(w)))
        return specdens.tabulated(data[:, 0], data[:, 1], lines,
                                  omega_c)
    raise ConfigError(f"unknown bath family {bath.family!r}")


def map_bath(bath: BathConfig, mapping: MappingConfig):
    """Density -> (density, measure, recurrence coefficients, chain).

    The chain is built from the coupling measure J/(4 pi) so the simulated
    Hamiltonian's reorganization energy equals the density's lambda (a line
    of weight 4 pi S w^2 couples at sqrt(S) w, matching the spectroscopic
    convention of the built-in families).
    """
    from . import chain as chain_mod
    from . import orthopoly, specdens

    density = build_density(bath)
    measure = specdens.coupling_measure(density)
    n_coeffs = mapping.n_chain + 1
    method = mapping.method
    if method == "auto":
        method = "analytic_jacobi" if bath.family == "power_law" else "lanczos"
    if method == "analytic_jacobi":
        if bath.family != "power_law":
            raise ConfigError(
                "[mapping] analytic_jacobi applies to power_law baths only")
        rc = orthopoly.jacobi_recurrence(bath.s, n_coeffs,
                                         mass=measure.total_mass)
    elif method == "little_q":
        if bath.family != "power_law":
            raise ConfigError(
                "[mapping] little_q applies to power_law baths only")
        log = orthopoly.log_discretize(bath.alpha, bath.s, density.omega_c,
                                       mapping.delta, n_coeffs)
        rc = orthopoly.little_q_jacobi_chain(log)
    else:
        rc = orthopoly.measure_to_recurrence(
            measure, n_coeffs, method=method,
            n_intervals=mapping.n_intervals, tol=mapping.tol,
            max_nodes=mapping.max_nodes)
    scale = density.omega_c
    chain = chain_mod.build_chain(rc, scale, mapping.n_chain)
    return density, measure, rc, chain


# ---------------------------------------------------------------------------
# Deterministic output files
# ---------------------------------------------------------------------------

def _fmt(x, precision: int) -> str:
    return format(float(x), f".{precision}g")


def write_chain_csv(path: Path, chain, precision: int, source: str):
    lines = [
        f"# eta_cm1 = {_fmt(chain.eta, precision)}",
        f"# omega_c_cm1 = {_fmt(chain.omega_c, precision)}",
        f"# source = {source}",
        "n,eps_cm1,t_cm1",
    ]
    for n in range(chain.length):
        t_val = _fmt(chain.t[n], precision) if n < len(chain.t) else ""
        lines.append(f"{n},{_fmt(chain.eps[n], precision)},{t_val}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_coeffs_csv(path: Path, rc, precision: int):
    lines = ["n,alpha,beta"]
    for n in range(rc.n_max):
        lines.append(f"{n},{_fmt(rc.alpha[n], precision)},"
                     f"{_fmt(rc.beta[n], precision)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_terminal_csv(path: Path, freqs, strengths, precision: int):
    lines = ["omega_cm1,strength"]
    for w, s in zip(freqs, strengths):
        lines.append(f"{_fmt(w, precision)},{_fmt(s, precision)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_trajectory_csv(path: Path, traj, precision: int):
    lines = ["t_ps,p1,p2,re_c12,im_c12,S_max,discarded"]
    for k in range(len(traj.times)):
        row = (traj.times[k], traj.p_site1[k], traj.p_site2[k],
               traj.re_coherence[k], traj.im_coherence[k],
               traj.max_bond_entropy[k], traj.discarded_weight[k])
        lines.append(",".join(_fmt(v, precision) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_occupations_csv(path: Path, traj, precision: int):
    n_entries = traj.occupations.shape[1]
    header = ["t_ps"] + [f"n_{i}" for i in range(n_entries)]
    lines = [",".join(header)]
    for k in range(len(traj.times)):
        row = [_fmt(traj.times[k], precision)]
        row += [_fmt(v, precision) for v in traj.occupations[k]]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_summary(path: Path, entries: list[tuple[str, object]], precision: int):
    lines = []
    for key, value in entries:
        if isinstance(value, float):
            value = _fmt(value, precision)
        lines.append(f"{key} = {value}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Trajectory post-processing
# ---------------------------------------------------------------------------

def coherence_lifetime(times, re_c12, fraction: float = 0.1,
                       detrend_ps: float = 0.2) -> float:
    """Last time the oscillation envelope of re_c12 exceeds `fraction` of its
    initial value.

    A dephasing-coupled dimer relaxes to a nonzero static site-basis
    coherence, so the raw magnitude never decays; the oscillating part is
    isolated by subtracting a centered running mean over `detrend_ps` (about
    one dimer period for the shipped presets) before taking the local-maxima
    envelope.  Reference level = first local maximum (global peak when the
    signal starts flat)."""
    import numpy as np

    t = np.asarray(times, dtype=float)
    x = np.asarray(re_c12, dtype=float)
    if len(x) < 3:
        return 0.0
    dt_meas = np.median(np.diff(t))
    half = max(1, int(round(0.5 * detrend_ps / max(dt_meas, 1e-12))))
    cum = np.concatenate(([0.0], np.cumsum(x)))
    lo = np.maximum(np.arange(len(x)) - half, 0)
    hi = np.minimum(np.arange(len(x)) + half + 1, len(x))
    x = np.abs(x - (cum[hi] - cum[lo]) / (hi - lo))
    idx = [i for i in range(1, len(x) - 1)
           if x[i] >= x[i - 1] and x[i] >= x[i + 1] and x[i] > 0.0]
    if not idx:
        return 0.0
    ref = x[idx[0]]
    if ref < 1e-6:
        ref = float(max(x[i] for i in idx))
    if ref <= 0.0:
        return 0.0
    threshold = fraction * ref
    alive = [i for i in idx if x[i] >= threshold]
    return float(t[alive[-1]]) if alive else 0.0


def count_oscillation_periods(times, p1) -> int:
    """Complete minimum-to-minimum cycles of p1 (a conservative count)."""
    import numpy as np

    x = np.asarray(p1)
    minima = [i for i in range(1, len(x) - 1)
              if x[i] <= x[i - 1] and x[i] <= x[i + 1]]
    return max(0, len(minima) - 1)


# ---------------------------------------------------------------------------
# Run modes
# ---------------------------------------------------------------------------

def _out_paths(cfg: RunConfig) -> Path:
    out_dir = Path(cfg.output.directory)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir


def run_map(cfg: RunConfig) -> int:
    from . import chain as chain_mod
    from . import specdens

    out_dir = _out_paths(cfg)
    prec = cfg.output.precision
    stem = cfg.output.stem
    summary: list[tuple[str, object]] = [("mode", "map")]
    baths = [("", cfg.bath)]
    if cfg.bath2 is not None:
        baths.append(("2", cfg.bath2))
    for suffix, bath in baths:
        density, measure, rc, chain = map_bath(bath, cfg.mapping)
        write_chain_csv(out_dir / f"{stem}.chain{suffix}.csv", chain, prec,
                        rc.source)
        write_coeffs_csv(out_dir / f"{stem}.coeffs{suffix}.csv", rc, prec)
        label = f"bath{suffix or '1'}"
        summary.append((f"{label}.family", bath.family))
        summary.append((f"{label}.eta_cm1", chain.eta))
        summary.append((f"{label}.omega_c_cm1", chain.omega_c))
        try:
            summary.append((f"{label}.lambda_cm1",
                            specdens.reorganization_energy(density)))
        except BathchainError as exc:
            summary.append((f"{label}.lambda_cm1", f"undefined ({exc.code})"))
        try:
            rep = chain_mod.asymptote_convergence(chain, cfg.mapping.asym_tol)
            summary.append((f"{label}.n_star", rep.n_star))
        except BathchainError as exc:
            summary.append((f"{label}.n_star", f"not_converged ({exc.code})"))
        verdict = specdens.szego_class_check(measure, cfg.mapping.szego_tol)
        summary.append((f"{label}.szego", verdict.value))
        if cfg.mapping.terminal_diag:
            freqs, strength = chain_mod.terminal_spectral_density(
                chain, max(0, chain.length - 2), 2000)
            write_terminal_csv(out_dir / f"{stem}.terminal{suffix}.csv",
                               freqs, strength, prec)
            summary.append((f"{label}.semicircle_l2",
                            chain_mod.semicircle_deviation(
                                freqs, strength, chain.omega_c)))
    write_summary(out_dir / f"{stem}.summary", summary, prec)
    return 0


def run_dynamics(cfg: RunConfig) -> int:
    import warnings

    from . import chain as chain_mod
    from .mps import EvolutionConfig, init_vacuum, tebd_evolve

    out_dir = _out_paths(cfg)
    prec = cfg.output.precision
    stem = cfg.output.stem
    ev = cfg.evolution

    _, _, rc1, chain1 = map_bath(cfg.bath, cfg.mapping)
    if cfg.bath2 is not None:
        _, _, _, chain2 = map_bath(cfg.bath2, cfg.mapping)
    else:
        chain2 = chain1  # identical densities shared by reference
    write_chain_csv(out_dir / f"{stem}.chain.csv", chain1, prec, rc1.source)

    exit_time = chain_mod.light_cone_exit_time(chain1.length, chain1.omega_c)
    if ev.t_final > exit_time:
        warnings.warn(
            f"t_final={ev.t_final} ps exceeds the light-cone exit time "
            f"{exit_time:.2f} ps of a {chain1.length}-site chain; "
            "hard-wall reflections may reach the system", stacklevel=2)

    sys_spec = chain_mod.dimer(cfg.system.j, cfg.system.eps1, cfg.system.eps2)
    lat = chain_mod.assemble_lattice(sys_spec, chain1, chain2, ev.local_dim)
    run_cfg = EvolutionConfig(
        dt=ev.dt, t_final=ev.t_final, trotter_order=ev.trotter_order,
        chi_max=ev.chi_max, trunc_tol=ev.trunc_tol, local_dim=ev.local_dim,
        measure_stride=ev.measure_stride, abort_discard=ev.abort_discard,
        track_occupations=ev.track_occupations)
    psi0 = init_vacuum(lat, ev.excited_site)
    traj = tebd_evolve(lat, psi0, run_cfg)

    write_trajectory_csv(out_dir / f"{stem}.traj.csv", traj, prec)
    if traj.occupations is not None:
        write_occupations_csv(out_dir / f"{stem}.occ.csv", traj, prec)
    lifetime = coherence_lifetime(traj.times, traj.re_coherence,
                                  ev.lifetime_fraction)
    summary = [
        ("mode", "dynamics"),
        ("eta_cm1", chain1.eta),
        ("t_final_ps", float(traj.times[-1])),
        ("coherence_lifetime_ps", lifetime),
        ("oscillation_periods", count_oscillation_periods(traj.times,
                                                          traj.p_site1)),
        ("final_p1", float(traj.p_site1[-1])),
        ("final_p2", float(traj.p_site2[-1])),
        ("cumulative_discarded", float(traj.discarded_weight[-1])),
        ("max_bond_entropy", float(traj.max_bond_entropy.max())),
    ]
    write_summary(out_dir / f"{stem}.summary", summary, prec)
    return 0


def run_verify(cfg: RunConfig) -> int:
    from .verify import run_verification

    out_dir = _out_paths(cfg)
    checks = run_verification(dt=cfg.evolution.dt)
    lines = [c.line() for c in checks]
    n_fail = sum(not c.passed for c in checks)
    lines.append(f"{len(checks) - n_fail}/{len(checks)} checks passed")
    report = "\n".join(lines) + "\n"
    (out_dir / f"{cfg.output.stem}.verify.txt").write_text(report,
                                                           encoding="utf-8")
    sys.stdout.write(report)
    return 1 if n_fail else 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def _set_threads(n: int):
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(n)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="bathchain",
        description="Map bath spectral densities onto oscillator chains and "
                    "run wavefunction dynamics on the result.")
    parser.add_argument("mode", choices=("map", "dynamics", "verify"))
    parser.add_argument("config", help="path to the INI-style run config")
    parser.add_argument("--out-dir", help="override [output] directory")
    parser.add_argument("--override", action="append", default=[],
                        metavar="SECTION.KEY=VALUE",
                        help="override one config value (repeatable)")
    parser.add_argument("--threads", type=int, default=None,
                        help="cap BLAS threads (default: BATHCHAIN_THREADS "
                             "or library default)")
    parser.add_argument("--debug", action="store_true",
                        help="re-raise errors with full tracebacks")
    args = parser.parse_args(argv)

    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("BATHCHAIN_THREADS", "0") or 0)
    if threads > 0:
        _set_threads(threads)

    try:
        cfg = load_config(args.config)
        if threads > 0:
            cfg.threads = threads
        elif cfg.threads > 0:
            _set_threads(cfg.threads)
        cfg = apply_overrides(cfg, args.override)
        if args.out_dir:
            cfg.output.directory = args.out_dir
        runner = {"map": run_map, "dynamics": run_dynamics,
                  "verify": run_verify}[args.mode]
        return runner(cfg)
    except BathchainError as exc:
        if args.debug:
            raise
        sys.stderr.write(f"ERROR:{exc.code}: {exc.message}\n")
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        if args.debug:
            raise
        sys.stderr.write(f"ERROR:INTERNAL: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
