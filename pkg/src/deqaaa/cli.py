"""Command-line experiment runner.

Subcommands: ``run``, ``compare``, ``kl-study``, ``decompose``, ``version``.
Settings come from an optional JSON config file; command-line flags
override it. Reports are written under ``--output-dir`` (default: the
``DEQAAA_OUTPUT_DIR`` environment variable, else the working directory).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import statistics
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .amplify import TargetSpec, eqaaa_run, qaaa_run
from .distributed import Partition, deqaaa_run
from .errors import DomainError, InfeasibleError, NumericError, SizeError
from .metrics import decompose_mcps
from .prep import AmplitudeSpec, prepare_direct
from .sim import exact_distribution, index_to_bits, kl_divergence, sample

SCHEMA_VERSION = 1
OUTPUT_ENV = "DEQAAA_OUTPUT_DIR"
EXACT_TOL = 1e-8

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERIC = 4

PAPER4Q_AMPLITUDES = (
    0.1506, 0.1908, 0.3120, 0.1788, 0.2055, 0.2719, 0.2793, 0.2273,
    0.3164, 0.2719, 0.3180, 0.2207, 0.1860, 0.2572, 0.3046, 0.2200,
)  # fmt: skip
DEFAULT_TARGETS = (8, 14)
ALGORITHMS = ("qaaa", "eqaaa", "deqaaa")


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Inputs
# ---------------------------------------------------------------------------


def load_preset(name: str) -> AmplitudeSpec:
    """``paper4q`` (the 16 case-study amplitudes, renormalised) or ``uniform:n``."""
    if name == "paper4q":
        return AmplitudeSpec.from_amplitudes(PAPER4Q_AMPLITUDES, normalize=True)
    if name.startswith("uniform:"):
        try:
            n = int(name.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad preset {name!r}; expected uniform:<n>") from None
        if not 1 <= n <= 24:
            raise ConfigError(f"uniform preset size {n} out of range")
        return AmplitudeSpec.from_amplitudes(np.full(1 << n, 2.0 ** (-n / 2)))
    raise ConfigError(f"unknown preset {name!r}; expected paper4q or uniform:<n>")


def parse_target(token: int | str, n: int, reverse_bits: bool = False) -> str:
    """Decimal or bit string to a theory-order bit string.

    With ``reverse_bits`` the token is read in the reversed (hardware) order,
    so decimal 8 at ``n = 4`` names ``"0001"`` instead of ``"1000"``.
    """
    text = str(token).strip()
    if isinstance(token, str) and len(text) == n and set(text) <= {"0", "1"} and n > 1:
        bits = text
    else:
        try:
            value = int(text, 10)
        except ValueError:
            raise ConfigError(f"target {token!r} is neither a {n}-bit string nor a decimal") from None
        if not 0 <= value < (1 << n):
            raise ConfigError(f"target {value} out of range for {n} qubits")
        bits = index_to_bits(value, n)
    return bits[::-1] if reverse_bits else bits


def _split(text: str | None) -> list[str] | None:
    if text is None:
        return None
    return [t for t in text.replace(" ", "").split(",") if t]


@dataclass
class RunConfig:
    algorithm: str = "eqaaa"
    preset: str | None = None
    amplitudes: str | None = None
    normalize: bool = False
    targets: list = field(default_factory=list)
    partition: list | None = None
    shots: int = 0
    seed: int = 0
    backend: str = "projector"
    decompose: bool = False
    reverse_bits: bool = False
    name: str | None = None
    report: str | None = None
    histogram: str | None = None
    circuit: str | None = None

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def validate(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.backend not in ("circuit", "projector"):
            raise ConfigError(f"backend must be circuit or projector, got {self.backend!r}")
        if (self.preset is None) == (self.amplitudes is None):
            raise ConfigError("give exactly one of preset or amplitudes")
        if (self.partition is not None) != (self.algorithm == "deqaaa"):
            raise ConfigError("a partition is required for deqaaa and only for deqaaa")
        if self.shots < 0:
            raise ConfigError("shots must be nonnegative")

    @property
    def label(self) -> str:
        return self.name or self.algorithm

    def state(self) -> AmplitudeSpec:
        if self.preset is not None:
            return load_preset(self.preset)
        return AmplitudeSpec.from_csv(self.amplitudes, normalize=self.normalize)

    def target_spec(self, n: int) -> TargetSpec:
        tokens = self.targets or list(DEFAULT_TARGETS)
        return TargetSpec(n, tuple(parse_target(t, n, self.reverse_bits) for t in tokens))


def _load_json(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return data


def _flag_overrides(args: argparse.Namespace) -> dict:
    out = {}
    for key in ("algorithm", "preset", "amplitudes", "shots", "seed", "backend", "name", "report", "histogram", "circuit"):
        value = getattr(args, key, None)
        if value is not None:
            out[key] = value
    for key in ("normalize", "decompose", "reverse_bits"):
        if getattr(args, key, False):
            out[key] = True
    if getattr(args, "targets", None) is not None:
        out["targets"] = _split(args.targets)
    if getattr(args, "partition", None) is not None:
        try:
            out["partition"] = [int(s) for s in _split(args.partition)]
        except ValueError:
            raise ConfigError(f"bad partition {args.partition!r}") from None
    if out.get("preset") is not None:
        out.setdefault("amplitudes", None)
    if out.get("amplitudes") is not None:
        out.setdefault("preset", None)
    return out


# ---------------------------------------------------------------------------
# Execution
# ---------------------------------------------------------------------------


def execute(cfg: RunConfig):
    cfg.validate()
    spec = cfg.state()
    targets = cfg.target_spec(spec.n_qubits)
    kw = dict(shots=cfg.shots, seed=cfg.seed, decompose=cfg.decompose)
    if cfg.algorithm == "qaaa":
        report = qaaa_run(spec, targets, cfg.backend, **kw)
    elif cfg.algorithm == "eqaaa":
        report = eqaaa_run(spec, targets, cfg.backend, **kw)
    else:
        report = deqaaa_run(spec, targets, Partition(tuple(cfg.partition)), cfg.backend, **kw)
    if not math.isfinite(report.p_final):
        raise NumericError("final success probability is not finite")
    if cfg.algorithm != "qaaa" and report.p_final < 1 - EXACT_TOL:
        raise NumericError(f"exact run ended at success {report.p_final!r}")
    return report


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_meta(path: Path) -> None:
    # kept out of the report so identical configs give identical report bytes
    meta = {"created_at": datetime.now(timezone.utc).isoformat(), "version": __version__}
    _write_json(path.with_suffix(".meta.json"), meta)


def report_payload(cfg: RunConfig, report, histogram_path: str | None) -> dict:
    payload = report.to_dict(histogram_path)
    payload["schema_version"] = SCHEMA_VERSION
    payload["config"] = asdict(cfg)
    if cfg.reverse_bits:
        payload["targets_display"] = [t[::-1] for t in payload["targets"]]
    return payload


def cmd_run(cfg: RunConfig, out_dir: Path) -> dict:
    report = execute(cfg)
    report_path = Path(cfg.report) if cfg.report else out_dir / f"{cfg.label}_report.json"
    hist_path = None
    if report.histogram is not None:
        hist_path = Path(cfg.histogram) if cfg.histogram else out_dir / f"{cfg.label}_histogram.csv"
        hist_path.parent.mkdir(parents=True, exist_ok=True)
        report.histogram.to_csv(hist_path, reverse_bits=cfg.reverse_bits)
    if cfg.circuit:
        Path(cfg.circuit).write_text(report.circuit.to_ir())
    payload = report_payload(cfg, report, str(hist_path) if hist_path else None)
    _write_json(report_path, payload)
    _write_meta(report_path)
    return payload


def _reduction(a: float, b: float) -> float:
    return 0.0 if a == 0 else 100.0 * (a - b) / a


def compare_rows(configs: Sequence[RunConfig]) -> tuple[list[dict], list[dict]]:
    """Per-config resource rows and pairwise reduction rows (``i < j``)."""
    if len(configs) < 2:
        raise ConfigError("compare needs at least two configurations")
    rows, target_sets = [], set()
    for cfg in configs:
        cfg = replace(cfg, decompose=True)
        report = execute(cfg)
        target_sets.add(tuple(sorted(report.targets)))
        native, dec = report.resources["native"], report.resources["decomposed"]
        rows.append(
            {
                "label": cfg.label,
                "algorithm": cfg.algorithm,
                "p_final": report.p_final,
                "gate_count": native["gate_count"],
                "depth": native["depth"],
                "decomposed_gate_count": dec["gate_count"],
                "decomposed_depth": dec["depth"],
            }
        )
    if len(target_sets) != 1:
        raise ConfigError("compared configurations use different target sets")
    metrics = ("gate_count", "depth", "decomposed_gate_count", "decomposed_depth")
    pairs = []
    for i in range(len(rows)):
        for j in range(i + 1, len(rows)):
            pair = {"baseline": rows[i]["label"], "candidate": rows[j]["label"]}
            for m in metrics:
                pair[f"{m}_reduction_pct"] = _reduction(rows[i][m], rows[j][m])
            pairs.append(pair)
    return rows, pairs


def _write_csv(path: Path, rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)


def kl_study(spec: AmplitudeSpec, shots_list: Sequence[int], seeds: Sequence[int]) -> tuple[list[dict], dict]:
    """KL divergence of sampled histograms from the exact distribution of ``spec``."""
    state = prepare_direct(spec)
    exact = exact_distribution(state)
    rows = []
    for shots in shots_list:
        if shots < 1:
            raise ConfigError("shots must be >= 1")
        for seed in seeds:
            approx = sample(state, shots, seed).to_distribution()
            rows.append({"shots": shots, "seed": seed, "kl": kl_divergence(approx, exact)})
    medians = {
        str(shots): statistics.median(r["kl"] for r in rows if r["shots"] == shots) for shots in shots_list
    }
    return rows, medians


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its keys")
    p.add_argument("--algorithm", choices=ALGORITHMS)
    p.add_argument("--preset", help="paper4q or uniform:<n>")
    p.add_argument("--amplitudes", help="CSV of bitstring,real,imag rows")
    p.add_argument("--normalize", action="store_true", help="rescale amplitudes to unit norm")
    p.add_argument("--targets", help="comma list of bit strings or decimals (default 8,14)")
    p.add_argument("--partition", help="comma list of node sizes (deqaaa)")
    p.add_argument("--shots", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--backend", choices=("circuit", "projector"))
    p.add_argument("--decompose", action="store_true", help="also report decomposed resources")
    p.add_argument("--reverse-bits", action="store_true", help="read and write bit strings in reversed order")
    p.add_argument("--name", help="label used for default output file names")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deqaaa", description=__doc__.splitlines()[0])
    parser.add_argument("--output-dir", help=f"output directory (default ${OUTPUT_ENV} or .)")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one algorithm and write a JSON report")
    _add_run_flags(run)
    run.add_argument("--report", help="report JSON path")
    run.add_argument("--histogram", help="histogram CSV path")
    run.add_argument("--circuit", help="write the circuit IR here")

    cmp_ = sub.add_parser("compare", help="compare resources of several runs")
    _add_run_flags(cmp_)
    cmp_.add_argument("--algorithms", help="comma list; one run per algorithm sharing the other flags")
    cmp_.add_argument("--prefix", default="compare", help="output file prefix")

    kl = sub.add_parser("kl-study", help="KL divergence of sampled histograms versus shots")
    kl.add_argument("--preset", default="paper4q")
    kl.add_argument("--amplitudes")
    kl.add_argument("--normalize", action="store_true")
    kl.add_argument("--shots", default="10000,100000", help="comma list")
    kl.add_argument("--seeds", default="0-19", help="comma list or a-b range")
    kl.add_argument("--out", help="CSV path")

    dec = sub.add_parser("decompose", help="decompose a multi-controlled phase gate or an IR circuit")
    dec.add_argument("--controls", type=int, help="control count m")
    dec.add_argument("--phi", type=float, default=math.pi)
    dec.add_argument("--circuit", help="IR file to decompose instead")
    dec.add_argument("--out", help="write the decomposed IR here")

    sub.add_parser("version", help="print the package version")
    return parser


def _parse_seeds(text: str) -> list[int]:
    seeds = []
    for part in _split(text) or []:
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise ConfigError("no seeds given")
    return seeds


def _run_config(args: argparse.Namespace) -> RunConfig:
    data = _load_json(args.config)
    data.update(_flag_overrides(args))
    return RunConfig.from_mapping(data)


def _compare_configs(args: argparse.Namespace) -> list[RunConfig]:
    base = _load_json(args.config)
    runs = base.pop("runs", None)
    overrides = _flag_overrides(args)
    if runs is None:
        algorithms = _split(args.algorithms) or list(ALGORITHMS)
        runs = [{"algorithm": a} for a in algorithms]
    configs = []
    for entry in runs:
        data = {**base, **entry, **{k: v for k, v in overrides.items() if k != "algorithm"}}
        if data.get("algorithm") != "deqaaa":
            data["partition"] = None
        configs.append(RunConfig.from_mapping(data))
    return configs


def _dispatch(args: argparse.Namespace, out_dir: Path) -> None:
    if args.command == "version":
        print(__version__)
    elif args.command == "run":
        payload = _run_config(args)
        result = cmd_run(payload, out_dir)
        print(json.dumps({k: result[k] for k in ("algorithm", "p_initial", "iterations", "p_final")}))
    elif args.command == "compare":
        rows, pairs = compare_rows(_compare_configs(args))
        _write_csv(out_dir / f"{args.prefix}.csv", rows)
        _write_csv(out_dir / f"{args.prefix}_reductions.csv", pairs)
        _write_json(out_dir / f"{args.prefix}.json", {"schema_version": SCHEMA_VERSION, "rows": rows, "reductions": pairs})
        for row in rows:
            print(row)
        for pair in pairs:
            print(pair)
    elif args.command == "kl-study":
        if args.amplitudes:
            spec = AmplitudeSpec.from_csv(args.amplitudes, normalize=args.normalize)
        else:
            spec = load_preset(args.preset)
        try:
            shots = [int(s) for s in _split(args.shots)]
            seeds = _parse_seeds(args.seeds)
        except ValueError:
            raise ConfigError("shots and seeds must be integers") from None
        rows, medians = kl_study(spec, shots, seeds)
        out = Path(args.out) if args.out else out_dir / "kl_study.csv"
        _write_csv(out, rows)
        _write_json(out.with_suffix(".json"), {"schema_version": SCHEMA_VERSION, "median_kl": medians})
        print(json.dumps({"median_kl": medians}))
    elif args.command == "decompose":
        from .metrics import decompose_circuit, depth_report
        from .sim import parse_ir

        if args.circuit:
            circ = decompose_circuit(parse_ir(Path(args.circuit).read_text()))
            info = depth_report(circ).to_dict()
        elif args.controls is not None:
            result = decompose_mcps(args.controls, args.phi)
            circ = result.circuit
            info = {**depth_report(circ).to_dict(), "max_deviation": result.max_deviation}
        else:
            raise ConfigError("decompose needs --controls or --circuit")
        if args.out:
            Path(args.out).write_text(circ.to_ir())
        print(json.dumps(info, sort_keys=True))


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    out_dir = Path(args.output_dir or os.environ.get(OUTPUT_ENV) or ".")
    try:
        _dispatch(args, out_dir)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, DomainError, SizeError, TypeError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
