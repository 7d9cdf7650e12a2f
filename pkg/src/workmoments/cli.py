"""Command-line entry point: ``workmoments <subcommand> --config <path> --out <dir>``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure, 3 I/O error.
"""

import argparse
import csv
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import mcwf
from .config import parse_config
from .exceptions import ConfigError, DomainError, NumericalError, SizeError, UndefinedRatioError
from .moments import fdt_ratio, fdt_taylor, moments_full, moments_rwa
from .svg import heat_map, line_chart, write_svg
from .tpm_oracle import (
    TotalSystemModel,
    OracleContext,
    commutator_correction_integrals,
    finite_difference_moment,
    generating_function_commuting,
    generating_function_exact,
    moments_from_distribution,
    tpm_distribution,
)

log = logging.getLogger("workmoments")

SUBCOMMANDS = ("moments", "qjump", "oracle", "fdt-scan", "compare", "figures")
MOMENT_COLUMNS = (
    "method", "W1", "W2", "W3_0", "corr_C3_sys", "corr_cross", "corr_SB", "W3", "stderr1", "stderr2", "stderr3",
)
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3


def _cell(x):
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(x) for x in row])


def read_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def _on_resonance(p):
    return p.drive_omega == p.omega0


def cmd_moments(cfg, out):
    p = cfg.system()
    reports = [moments_full(p)]
    if _on_resonance(p):
        reports.append(moments_rwa(p))
    else:
        log.info("drive off resonance; skipping the RWA track")
    rows = [[r.as_row()[c] for c in MOMENT_COLUMNS] for r in reports]
    write_csv(os.path.join(out, "moments.csv"), MOMENT_COLUMNS, rows)

    stride = cfg.series_stride
    header = ["omega0_t", "gamma_down", "W2_full", "W2_rwa"]
    rows = []
    for g in cfg.series_gammas:
        q = p.replace(gamma_down=g)
        full = moments_full(q)
        rwa = moments_rwa(q) if _on_resonance(q) else None
        idx = np.arange(0, len(full.times), stride)
        w2 = full.series["W2"] / q.omega0**2
        w2r = rwa.series["W2"] / q.omega0**2 if rwa is not None else np.full(len(full.times), np.nan)
        rows.extend([full.times[k] * q.omega0, g, w2[k], w2r[k]] for k in idx)
    write_csv(os.path.join(out, "series.csv"), header, rows)


def _ensemble(cfg, p, records_path=None):
    return mcwf.run_ensemble(p, cfg.n_traj, cfg.master_seed, records_path=records_path)


def _mcwf_row(stats):
    m, s = stats.moments, stats.stderr
    return ["mcwf", m[0], m[1], float("nan"), float("nan"), float("nan"), float("nan"), m[2], s[0], s[1], s[2]]


def cmd_qjump(cfg, out):
    p = cfg.system()
    records = os.path.join(out, "records.csv") if cfg.dump_records else None
    stats = _ensemble(cfg, p, records)
    write_csv(os.path.join(out, "qjump.csv"), MOMENT_COLUMNS, [_mcwf_row(stats)])
    write_csv(
        os.path.join(out, "histogram.csv"),
        ["work_over_hw0", "probability", "count"],
        [[w, prob, stats.counts[w]] for w, prob in stats.histogram.items()],
    )


def oracle_model(cfg):
    p = cfg.system(steps=cfg.oracle_steps)
    try:
        return TotalSystemModel(
            system=p,
            n_modes=cfg.n_modes,
            n_max=cfg.n_max,
            mode_freqs=_per_mode(cfg, "mode_freqs"),
            couplings=_per_mode(cfg, "couplings"),
            coupling_form=cfg.coupling_form,
            measurement=cfg.measurement,
        )
    except SizeError as exc:
        raise ConfigError("n_max", str(exc)) from exc


def _per_mode(cfg, key):
    values = cfg.values[key]
    if len(values) not in (1, cfg.n_modes):
        raise ConfigError(key, f"expected 1 or {cfg.n_modes} values, got {len(values)}")
    return values if len(values) > 1 else values[0]


def cmd_oracle(cfg, out):
    m = oracle_model(cfg)
    dist = tpm_distribution(m)
    dist.dump(os.path.join(out, "distribution.txt"))
    ctx = OracleContext(m)
    G = lambda u: generating_function_exact(m, u, ctx)  # noqa: E731
    G0 = lambda u: generating_function_commuting(m, u, ctx)  # noqa: E731
    rows = []
    for n in (1, 2, 3):
        a = finite_difference_moment(G, n, cfg.fd_step)
        b = finite_difference_moment(G0, n, cfg.fd_step)
        rows.append([n, moments_from_distribution(dist, n), a.value, b.value, a.noise_floor + b.noise_floor])
    write_csv(
        os.path.join(out, "oracle.csv"),
        ["n", "moment_distribution", "moment_G", "moment_G0", "noise_floor"],
        rows,
    )
    c3, cross = commutator_correction_integrals(m)
    gap = rows[2][2] - rows[2][3]
    write_csv(
        os.path.join(out, "oracle_gap.csv"),
        ["measured_gap", "predicted_gap", "corr_C3", "corr_cross"],
        [[gap, c3 + cross, c3, cross]],
    )


def fdt_grid(cfg):
    lams = np.geomspace(cfg.fdt_lambda_min, cfg.fdt_lambda_max, cfg.fdt_lambda_count)
    gammas = np.linspace(0.0, cfg.fdt_gamma_max, cfg.fdt_gamma_count)
    return lams, gammas


def _fdt_point(args):
    p = args
    try:
        ratio = fdt_ratio(p)
    except UndefinedRatioError:
        ratio = float("nan")
    return [p.lambda0, p.gamma_down, ratio, fdt_taylor(p), 1.0 / math.tanh(p.beta / 2) if p.beta > 0 else float("inf")]


def cmd_fdt_scan(cfg, out):
    base = cfg.system()
    if not _on_resonance(base):
        raise DomainError("the FDT scan uses the RWA track, which needs drive_omega == omega0")
    lams, gammas = fdt_grid(cfg)
    points = [base.replace(lambda0=float(lam), gamma_down=float(g)) for g in gammas for lam in lams]
    workers = mcwf.worker_count()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_fdt_point, points, chunksize=8))
    else:
        rows = [_fdt_point(q) for q in points]
    write_csv(os.path.join(out, "fdt.csv"), ["lambda0", "gamma_down", "ratio", "taylor", "coth"], rows)


def cmd_compare(cfg, out):
    base = cfg.system()
    rows = []
    worst = 0.0
    for g in cfg.compare_gammas:
        p = base.replace(gamma_down=g)
        me = moments_full(p)
        stats = _ensemble(cfg, p)
        for n, (a, b, s) in enumerate(zip((me.W1, me.W2, me.W3), stats.moments, stats.stderr), 1):
            diff = abs(a - b)
            worst = max(worst, diff)
            rows.append([g, n, a, b, s, me.W3_0 if n == 3 else float("nan"), diff])
    write_csv(
        os.path.join(out, "compare.csv"),
        ["gamma_down", "n", "master_equation", "mcwf", "mcwf_stderr", "W3_0", "abs_diff"],
        rows,
    )
    verdict = "PASS" if worst <= cfg.tolerance else "FAIL"
    with open(os.path.join(out, "verdict.txt"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{verdict} max_discrepancy={worst:.6g} tolerance={cfg.tolerance:g}\n")
    return verdict


def _floats(rows, key):
    return [float(r[key]) for r in rows]


def cmd_figures(cfg, out):
    made = []
    path = os.path.join(out, "series.csv")
    if os.path.exists(path):
        rows = read_csv(path)
        series = {}
        for g in sorted({r["gamma_down"] for r in rows}, key=float):
            sub = [r for r in rows if r["gamma_down"] == g]
            t = _floats(sub, "omega0_t")
            series[f"ME, Gamma={float(g):g}"] = (t, _floats(sub, "W2_full"))
            series[f"RWA, Gamma={float(g):g}"] = (t, _floats(sub, "W2_rwa"))
        write_svg(
            os.path.join(out, "fig1_w2_vs_time.svg"),
            line_chart(series, "omega0 tau", "<W^2>/(hbar omega0)^2", "Second moment of work"),
        )
        made.append("fig1")
    path = os.path.join(out, "compare.csv")
    if os.path.exists(path):
        rows = read_csv(path)
        series, markers = {}, set()
        for n in ("1", "2", "3"):
            sub = [r for r in rows if r["n"] == n]
            g = _floats(sub, "gamma_down")
            series[f"<W^{n}> ME"] = (g, _floats(sub, "master_equation"))
            series[f"<W^{n}> MCWF"] = (g, _floats(sub, "mcwf"))
            markers.add(f"<W^{n}> MCWF")
            if n == "3":
                series["<W^3>_0"] = (g, _floats(sub, "W3_0"))
        write_svg(
            os.path.join(out, "fig2_moments.svg"),
            line_chart(series, "Gamma_down/omega0", "<W^n>/(hbar omega0)^n", "Work moments", markers=markers),
        )
        made.append("fig2")
    path = os.path.join(out, "fdt.csv")
    if os.path.exists(path):
        rows = read_csv(path)
        lams = sorted({float(r["lambda0"]) for r in rows})
        gammas = sorted({float(r["gamma_down"]) for r in rows})
        table = {(float(r["lambda0"]), float(r["gamma_down"])): float(r["ratio"]) for r in rows}
        values = [[table.get((lam, g), float("nan")) for lam in lams] for g in gammas]
        write_svg(
            os.path.join(out, "fig3_fdt.svg"),
            heat_map(lams, gammas, values, "lambda0/(hbar omega0)", "Gamma_down/omega0",
                     "FDT ratio <W^2>/<W>", "hbar omega0"),
        )
        made.append("fig3")
    if not made:
        raise FileNotFoundError(f"no series.csv, compare.csv or fdt.csv in {out}")
    return made


COMMANDS = {
    "moments": cmd_moments,
    "qjump": cmd_qjump,
    "oracle": cmd_oracle,
    "fdt-scan": cmd_fdt_scan,
    "compare": cmd_compare,
    "figures": cmd_figures,
}


def run_subcommand(cfg, which, out=None):
    """Run one subcommand and return its exit code."""
    out = cfg.out if out is None else out
    try:
        os.makedirs(out, exist_ok=True)
        COMMANDS[which](cfg, out)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (NumericalError, DomainError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    return EXIT_OK


def _split_overrides(extra):
    overrides = {}
    i = 0
    while i < len(extra):
        token = extra[i]
        if not token.startswith("--"):
            raise ConfigError(token, "expected --key value")
        if "=" in token:
            key, value = token[2:].split("=", 1)
            i += 1
        else:
            if i + 1 >= len(extra):
                raise ConfigError(token[2:], "missing value")
            key, value = token[2:], extra[i + 1]
            i += 2
        overrides[key] = value
    return overrides


def build_parser():
    parser = argparse.ArgumentParser(prog="workmoments", description=__doc__.splitlines()[0])
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", help="flat 'key = value' file")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        overrides = _split_overrides(extra)
        if args.out is not None:
            overrides["out"] = args.out
        cfg = parse_config(args.config, overrides)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("cannot read config: %s", exc)
        return EXIT_IO
    return run_subcommand(cfg, args.subcommand)


if __name__ == "__main__":
    sys.exit(main())
