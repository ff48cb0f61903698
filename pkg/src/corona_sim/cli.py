"""Command-line front end.

Exit status: 0 success, 1 usage or config error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import platform
import statistics
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import testimages
from .channel import GaussianMixInput, noisy_copies, verify_lemma1
from .coverage import SensorDisk, coverage_mask
from .denoise.metrics import psnr, ssim
from .denoise.pgm import encode_pgm, quantize, read_pgm
from .denoise.pipeline import denoise_pipeline
from .engine import DEFAULT_MAX_ROUNDS, METRICS_HEADER, PROTOCOLS, run, summary_dict
from .topology import NetworkConfig, build_topology, deploy_nodes, load_config

log = logging.getLogger("corona_sim")

MODES = ("lifetime", "denoise", "coverage", "lemma1", "timing")
DEFAULT_SIGMAS = (5, 10, 15, 20, 25, 50, 100)
LEMMA1_PAIRS = ((3.0, 4.0), (1.0, 1.0), (0.5, 2.0))
THREADS_ENV = "CORONA_SIM_THREADS"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _str_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="corona-sim", description=__doc__.splitlines()[0])
    p.add_argument("--mode", required=True, choices=MODES)
    p.add_argument("--config", type=Path, help="key=value network config file")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--seeds", type=_int_list, default=[0])
    p.add_argument("--protocols", type=_str_list, default=list(PROTOCOLS))
    p.add_argument("--nodes", type=_int_list, help="node counts to sweep (default: from config)")
    p.add_argument("--sigmas", type=_float_list, default=list(DEFAULT_SIGMAS))
    p.add_argument("--images", type=_str_list, default=list(testimages.NAMES))
    p.add_argument("--image-dir", type=Path, default=testimages.DEFAULT_DIR)
    p.add_argument("--copies", type=int, default=3, help="noisy receptions per image")
    p.add_argument("--max-rounds", type=int, default=DEFAULT_MAX_ROUNDS)
    p.add_argument("--grid-res", type=float, help="coverage grid spacing in metres")
    p.add_argument("--trials", type=int, default=3, help="timing trials per cell (>= 3)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


# ---------------------------------------------------------------- artifacts


class Artifacts:
    """Writes files atomically and removes everything it wrote if the run fails."""

    def __init__(self, root: Path):
        self.root = root
        self.written: list[Path] = []

    def write_bytes(self, name: str, data: bytes) -> Path:
        path = self.root / name
        tmp = path.with_name(path.name + ".part")
        tmp.write_bytes(data)
        os.replace(tmp, path)
        self.written.append(path)
        return path

    def write_text(self, name: str, text: str) -> Path:
        return self.write_bytes(name, text.encode())

    def write_json(self, name: str, obj) -> Path:
        return self.write_text(name, json.dumps(obj, indent=2, sort_keys=True) + "\n")

    def rollback(self) -> None:
        for path in self.written:
            path.unlink(missing_ok=True)
        self.written.clear()


def _fmt(v: float) -> str:
    return repr(float(v))


def _columns(rows: Iterable[Sequence]) -> str:
    return "".join(" ".join(str(c) for c in row) + "\n" for row in rows)


def _workers() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be an integer") from None
    return max(1, n)


def _map(fn: Callable, cells: list, workers: int) -> list:
    """Run ``fn`` over ``cells``; results come back in cell order either way."""
    if workers <= 1 or len(cells) <= 1:
        return [fn(c) for c in cells]
    with ProcessPoolExecutor(max_workers=min(workers, len(cells))) as pool:
        return list(pool.map(fn, cells))


# ---------------------------------------------------------------- lifetime / coverage


def _stats(values: list[int | None]) -> dict:
    reached = [v for v in values if v is not None]
    out = {"values": values, "not_reached": len(values) - len(reached)}
    if reached:
        out.update(mean=statistics.fmean(reached), min=min(reached), max=max(reached))
    else:
        out.update(mean=None, min=None, max=None)
    return out


def _lifetime_cell(cell):
    config, protocol, max_rounds, coverage = cell
    res = run(config, protocol, max_rounds, coverage=coverage)
    return res.metrics, res.summary


def run_lifetime(args, base: NetworkConfig, art: Artifacts, coverage: bool = False) -> int:
    counts = args.nodes or [base.node_count]
    cells = [(base.replace(node_count=L, rng_seed=s), p, args.max_rounds, coverage)
             for p in args.protocols for L in counts for s in args.seeds]
    results = _map(_lifetime_cell, cells, _workers())
    by_group: dict[tuple[str, int], list] = {}
    for (cfg, protocol, _, _), (metrics, summary) in zip(cells, results):
        tag = f"{protocol}_L{cfg.node_count}_s{cfg.rng_seed}"
        rows = [METRICS_HEADER] + [[m.round, m.protocol, m.alive, _fmt(m.residual_j), m.packets_bs,
                                    _fmt(m.coverage_rate)] for m in metrics]
        art.write_text(f"metrics_{tag}.csv", "".join(",".join(map(str, r)) + "\n" for r in rows))
        art.write_text(f"alive_{tag}.dat", _columns((m.round, m.alive) for m in metrics))
        art.write_text(f"energy_{tag}.dat", _columns((m.round, _fmt(m.residual_j)) for m in metrics))
        if coverage:
            art.write_text(f"coverage_{tag}.dat", _columns((m.round, _fmt(m.coverage_rate)) for m in metrics))
            topo = build_topology(cfg)
            disks = [SensorDisk(n.x, n.y, cfg.sensing_radius) for n in deploy_nodes(cfg, topo)]
            art.write_bytes(f"coverage_{tag}_initial.pgm",
                            encode_pgm(np.where(coverage_mask(disks, cfg.radius, cfg.grid_res), 255, 0)
                                       .astype(np.uint8)))
        by_group.setdefault((protocol, cfg.node_count), []).append((cfg.rng_seed, summary, metrics))

    for (protocol, L), items in by_group.items():
        summaries = [s for _, s, _ in items]
        doc = {
            "protocol": protocol,
            "node_count": L,
            "seeds": [seed for seed, _, _ in items],
            "max_rounds": args.max_rounds,
            "first_node_death_round": _stats([s.first_node_death_round for s in summaries]),
            "half_node_death_round": _stats([s.half_node_death_round for s in summaries]),
            "all_node_death_round": _stats([s.all_node_death_round for s in summaries]),
            "per_seed": [summary_dict(s) for s in summaries],
        }
        if coverage:
            doc["coverage_at_first_death"] = [
                _coverage_at(metrics, s.first_node_death_round) for _, s, metrics in items]
            doc["coverage_at_half_death"] = [
                _coverage_at(metrics, s.half_node_death_round) for _, s, metrics in items]
        art.write_json(f"summary_{protocol}_L{L}.json", doc)
        fnd = doc["first_node_death_round"]["mean"]
        adt = doc["all_node_death_round"]["mean"]
        print(f"{protocol:9s} L={L:<6d} FND mean {fnd}  ADT mean {adt}")
    return 0


def _coverage_at(metrics, round_no):
    if round_no is None:
        return None
    return metrics[round_no - 1].coverage_rate


# ---------------------------------------------------------------- denoise


def _denoise_cell(cell):
    name, index, clean, sigma, copies, seed = cell
    received = noisy_copies(clean, sigma, copies, seed=[seed, index, int(round(sigma * 1000))])
    out = denoise_pipeline(received, sigma).data
    noisy = received[0].data
    return (psnr(clean, noisy), ssim(clean, noisy), psnr(clean, out), ssim(clean, out),
            quantize(noisy), quantize(out))


def _metric(v: float) -> str:
    return "inf" if math.isinf(v) else f"{v:.4f}"


def run_denoise(args, art: Artifacts) -> int:
    if args.copies < 1:
        raise UsageError("--copies must be >= 1")
    if any(s < 0 or not math.isfinite(s) for s in args.sigmas):
        raise UsageError("sigmas must be finite and non-negative")
    unknown = [n for n in args.images if n not in testimages.SOURCES]
    missing, cells = [], []
    for name in args.images:
        path = args.image_dir / f"{name}.pgm"
        if not path.exists():
            missing.append(name)
            continue
        clean = read_pgm(path).astype(np.float64)
        index = testimages.NAMES.index(name) if name in testimages.NAMES else len(testimages.NAMES)
        cells += [(name, index, clean, s, args.copies, args.seeds[0]) for s in args.sigmas]
    for name in missing:
        hint = "" if name in unknown else " (run `python -m corona_sim.testimages` to fetch it)"
        print(f"missing image: {name}{hint}", file=sys.stderr)

    results = _map(_denoise_cell, cells, _workers())
    header = "image,sigma,psnr_noisy,ssim_noisy,psnr_denoised,ssim_denoised\n"
    lines, table = [header], []
    for (name, _, _, sigma, _, _), (pn, sn, pd, sd, noisy8, out8) in zip(cells, results):
        tag = f"{name}_s{sigma:g}"
        art.write_bytes(f"{tag}_noisy.pgm", encode_pgm(noisy8))
        art.write_bytes(f"{tag}_denoised.pgm", encode_pgm(out8))
        lines.append(f"{name},{sigma:g},{_metric(pn)},{_metric(sn)},{_metric(pd)},{_metric(sd)}\n")
        table.append((name, sigma, pn, sn, pd, sd))
    if cells:
        art.write_text("denoise.csv", "".join(lines))
        art.write_text("denoise_table.md", _render_table(table))
        print(_render_table(table), end="")
    return 2 if missing else 0


def _render_table(rows) -> str:
    sigmas = sorted({r[1] for r in rows})
    names = list(dict.fromkeys(r[0] for r in rows))
    cell = {(r[0], r[1]): r for r in rows}
    head = "| σ | " + " | ".join(f"{n} noisy | {n} denoised" for n in names) + " |\n"
    rule = "|---" * (1 + 2 * len(names)) + "|\n"
    body = []
    for s in sigmas:
        parts = [f"{s:g}"]
        for n in names:
            r = cell.get((n, s))
            if r is None:
                parts += ["", ""]
            else:
                parts += [f"{_metric(r[2])}/{r[3]:.2f}", f"{_metric(r[4])}/{r[5]:.2f}"]
        body.append("| " + " | ".join(parts) + " |\n")
    return "PSNR (dB) / SSIM\n\n" + head + rule + "".join(body)


# ---------------------------------------------------------------- gaussian aggregation check


def run_lemma1(args, art: Artifacts) -> int:
    reports = []
    for rho, delta in LEMMA1_PAIRS:
        rep = verify_lemma1(GaussianMixInput(rho, delta, seed=args.seeds[0]))
        reports.append({"rho": rho, "delta": delta, "variance": rep.variance,
                        "expected_variance": rep.expected_variance, "ci_99": [rep.ci_low, rep.ci_high],
                        "ks_statistic": rep.ks_statistic, "ks_pvalue": rep.ks_pvalue,
                        "passed": rep.passed})
        print(f"rho={rho:g} delta={delta:g}: var {rep.variance:.4f} (expect {rep.expected_variance:g}), "
              f"KS p={rep.ks_pvalue:.3f} -> {'PASS' if rep.passed else 'FAIL'}")
    art.write_json("lemma1.json", reports)
    return 0 if all(r["passed"] for r in reports) else 2


# ---------------------------------------------------------------- timing


def machine_descriptor() -> str:
    return (f"{platform.platform()}; {platform.machine()}; {platform.processor() or 'unknown cpu'}; "
            f"{os.cpu_count()} cpus; Python {platform.python_version()}; numpy {np.__version__}")


def run_timing(args, base: NetworkConfig, art: Artifacts) -> int:
    if args.trials < 3:
        raise UsageError("--trials must be >= 3")
    counts = args.nodes or [base.node_count]
    rows = []
    for protocol in args.protocols:
        for L in counts:
            cfg = base.replace(node_count=L, rng_seed=args.seeds[0])
            times = []
            for _ in range(args.trials):
                t0 = time.perf_counter()
                res = run(cfg, protocol, args.max_rounds, coverage=False)
                times.append(time.perf_counter() - t0)
            rows.append({"protocol": protocol, "node_count": L, "rounds": len(res.metrics),
                         "trials_s": times, "median_s": statistics.median(times)})
            print(f"{protocol:9s} L={L:<6d} {len(res.metrics)} rounds  median {statistics.median(times):.3f} s")
    art.write_json("timing.json", {"machine": machine_descriptor(), "runs": rows})
    return 0


# ---------------------------------------------------------------- entry


def _load_base(args) -> NetworkConfig:
    base = load_config(args.config) if args.config else NetworkConfig()
    if args.grid_res is not None:
        base = base.replace(grid_res=args.grid_res)
    return base


def _validate(args) -> None:
    if not args.seeds:
        raise UsageError("seed list is empty")
    bad = [p for p in args.protocols if p not in PROTOCOLS]
    if bad or not args.protocols:
        raise UsageError(f"protocols must be drawn from {PROTOCOLS}")
    if args.max_rounds < 1:
        raise UsageError("--max-rounds must be >= 1")
    if args.nodes is not None and (not args.nodes or min(args.nodes) < 1):
        raise UsageError("--nodes needs positive node counts")
    if args.mode == "denoise" and (not args.images or not args.sigmas):
        raise UsageError("denoise mode needs at least one image and one sigma")


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s")
        _validate(args)
        base = _load_base(args)
        for L in args.nodes or ():
            base.replace(node_count=L)  # reject bad sweep points before any work starts
        args.out.mkdir(parents=True, exist_ok=True)
        if not os.access(args.out, os.W_OK):
            raise UsageError(f"output directory {args.out} is not writable")
    except UsageError as exc:
        print(f"corona-sim: error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"corona-sim: config error: {exc}", file=sys.stderr)
        return 1

    art = Artifacts(args.out)
    try:
        if args.mode in ("lifetime", "coverage"):
            return run_lifetime(args, base, art, coverage=args.mode == "coverage")
        if args.mode == "denoise":
            return run_denoise(args, art)
        if args.mode == "lemma1":
            return run_lemma1(args, art)
        return run_timing(args, base, art)
    except UsageError as exc:
        art.rollback()
        print(f"corona-sim: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - any failure must leave no partial artifacts
        art.rollback()
        log.debug("run failed", exc_info=True)
        print(f"corona-sim: run failed: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
