"""Command-line front end: ``leafdim splitting | estimate | verify``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field

from .covers import DEFAULT_N_MAX
from .errors import ConfigError, IndeterminateTrend, LeafdimError
from .harness import EXIT_CONFIG, load_config, run_suite
from .hdim import h_unstable_H
from .leaf import ambient_set_from_spec
from .systems import system_from_spec
from .umetric import metric_entropy_jacobian, smb_convergence_report
from .utop import entropy_of_subset_cover_style

KINDS = ("utop", "hdim", "metric", "smb")


@dataclass
class ExperimentConfig:
    system: str = "cat2"
    set_Y: str = "torus"
    deltas: list[float] = field(default_factory=lambda: [0.1, 0.05])
    meshes: list[int] = field(default_factory=lambda: [8, 16, 32, 64])
    n_range: list[int] | None = None
    samples: int = 2
    seed: int = 0
    tolerance: float = 0.05
    output: str | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object", "$")
        known = {f for f in cls.__dataclass_fields__}
        bad = set(d) - known
        if bad:
            raise ConfigError(f"unknown keys {sorted(bad)}", "$")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        for key in ("system", "set_Y"):
            if not isinstance(getattr(self, key), str):
                raise ConfigError("must be a string", f"$.{key}")
        try:
            system_from_spec(self.system)
        except (LeafdimError, ValueError) as exc:
            raise ConfigError(str(exc), "$.system") from None
        ambient_set_from_spec(self.set_Y, "$.set_Y")
        if not self.deltas or any(not isinstance(x, (int, float)) or x <= 0 for x in self.deltas):
            raise ConfigError("deltas must be positive numbers", "$.deltas")
        if not self.meshes or any(not isinstance(m, int) or m < 2 for m in self.meshes):
            raise ConfigError("meshes must be integers >= 2", "$.meshes")
        if self.n_range is not None:
            r = self.n_range
            if (len(r) != 2 or any(not isinstance(v, int) for v in r)
                    or not 1 <= r[0] < r[1] <= DEFAULT_N_MAX):
                raise ConfigError(f"n_range must be [n_min, n_max] with 1 <= n_min < n_max "
                                  f"<= {DEFAULT_N_MAX}", "$.n_range")
        if not isinstance(self.samples, int) or self.samples < 1:
            raise ConfigError("samples must be a positive integer", "$.samples")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer", "$.seed")
        if not isinstance(self.tolerance, (int, float)) or self.tolerance < 0:
            raise ConfigError("tolerance must be nonnegative", "$.tolerance")

    def to_dict(self) -> dict:
        return asdict(self)


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="leafdim",
                                description="Unstable entropies of linear toral automorphisms.")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("splitting", help="print eigenvalues, bundle labels and log of the unstable rate")
    sp.add_argument("--system", default="cat2")

    ep = sub.add_parser("estimate", help="run one estimator and write CSV and JSON output")
    ep.add_argument("kind", choices=KINDS)
    ep.add_argument("--config", help="JSON experiment config; flags override its fields")
    ep.add_argument("--system")
    ep.add_argument("--set", dest="set_Y")
    ep.add_argument("--delta", type=_floats, help="comma-separated leaf-ball radii")
    ep.add_argument("--mesh", type=_ints, help="comma-separated cells per axis")
    ep.add_argument("--n-min", type=int)
    ep.add_argument("--n-max", type=int)
    ep.add_argument("--samples", type=int)
    ep.add_argument("--seed", type=int)
    ep.add_argument("--tolerance", type=float)
    ep.add_argument("--out", help="output directory")

    vp = sub.add_parser("verify", help="run the verification suite")
    vp.add_argument("--config", help="JSON suite config (default: built-in suite)")
    vp.add_argument("--tolerance", type=float, help="override every case tolerance")
    vp.add_argument("--out", help="path of the JSON report")
    return p


def _config_from_args(args) -> ExperimentConfig:
    base = load_config(args.config) if args.config else {}
    if not isinstance(base, dict):
        raise ConfigError("config must be a JSON object", args.config)
    overrides = {
        "system": args.system, "set_Y": args.set_Y, "deltas": args.delta, "meshes": args.mesh,
        "samples": args.samples, "seed": args.seed, "tolerance": args.tolerance,
        "output": args.out,
    }
    d = dict(base)
    d.update({k: v for k, v in overrides.items() if v is not None})
    if args.n_min is not None or args.n_max is not None:
        if args.n_min is None or args.n_max is None:
            raise ConfigError("--n-min and --n-max must be given together", "flags")
        d["n_range"] = [args.n_min, args.n_max]
    return ExperimentConfig.from_dict(d)


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def cmd_splitting(args) -> int:
    T = system_from_spec(args.system)
    s = T.splitting
    print(f"system: {T}")
    print(f"matrix: {[list(r) for r in T.effective_matrix]}")
    for lam, label, vec in zip(s.eigenvalues, s.bundle_labels, s.eigenvectors):
        print(f"  {label:9s} {lam: .12f}  v = [{', '.join(f'{x: .6f}' for x in vec)}]")
    print(f"unstable rate: {s.unstable_rate:.12f}")
    print(f"log unstable rate: {s.log_unstable_rate:.12f}")
    return 0


def run_estimate(kind: str, cfg: ExperimentConfig) -> tuple[dict, dict[str, str]]:
    """Run one estimator; returns the JSON summary and ``{filename: csv text}``."""
    T = system_from_spec(cfg.system)
    Y = ambient_set_from_spec(cfg.set_Y)
    files: dict[str, str] = {}
    n_range = tuple(cfg.n_range) if cfg.n_range else None
    if kind == "utop":
        est = entropy_of_subset_cover_style(T, Y, cfg.deltas, cfg.samples, cfg.meshes,
                                            n_range, cfg.seed)
        result = est.summary()
        for i, s in enumerate(est.series):
            name = f"series_{i:03d}.csv"
            files[name] = s.to_csv()
            result["series"][i]["file"] = name
    elif kind == "hdim":
        est = h_unstable_H(T, Y, cfg.deltas, cfg.samples, cfg.meshes, cfg.seed,
                           N_range=n_range)
        result = est.summary()
        for i, (_, _, r) in enumerate(est.results):
            name = f"trend_{i:03d}.csv"
            files[name] = r.trend_csv()
            result["results"][i]["file"] = name
    elif kind == "metric":
        result = {"value": metric_entropy_jacobian(T)}
    else:
        n_list = list(range(cfg.n_range[0], cfg.n_range[1] + 1, 5)) if cfg.n_range else [10, 15, 20, 25]
        if cfg.n_range and n_list[-1] != cfg.n_range[1]:
            n_list.append(cfg.n_range[1])
        rep = smb_convergence_report(T, max(cfg.samples, 10), n_list, max(cfg.meshes), cfg.seed)
        result = rep.summary()
        result["value"] = rep.rows[-1][1]
        files["smb.csv"] = rep.to_csv()
    summary = {"kind": kind, "config": cfg.to_dict(), "result": result}
    return summary, files


def cmd_estimate(args) -> int:
    cfg = _config_from_args(args)
    summary, files = run_estimate(args.kind, cfg)
    res = summary["result"]
    if cfg.output:
        os.makedirs(cfg.output, exist_ok=True)
        for name, text in files.items():
            _write(os.path.join(cfg.output, name), text)
        _write(os.path.join(cfg.output, "summary.json"),
               json.dumps(summary, indent=2, sort_keys=True) + "\n")
    line = f"{args.kind} {cfg.system} {cfg.set_Y}: {res['value']:.6f}"
    if "stabilized" in res:
        line += f"  stabilized={res['stabilized']}"
    if "converged" in res:
        line += f"  converged={res['converged']}"
    print(line)
    if args.kind == "smb":
        print(files["smb.csv"], end="")
    return 0


def cmd_verify(args) -> int:
    config = load_config(args.config) if args.config else None
    report = run_suite(config, tolerance=args.tolerance)
    if report.missing_claims:
        print(f"coverage: missing claims {report.missing_claims}", file=sys.stderr)
    print(report.table())
    print(f"exit status {report.exit_code}")
    if args.out:
        _write(args.out, report.to_json() + "\n")
    return report.exit_code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "splitting":
            return cmd_splitting(args)
        if args.command == "estimate":
            return cmd_estimate(args)
        return cmd_verify(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IndeterminateTrend as exc:
        print(f"indeterminate: {exc}", file=sys.stderr)
        return 2
    except (LeafdimError, ValueError) as exc:
        # malformed systems (non-unimodular, bad spec strings) land here
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG if args.command == "splitting" else 1


if __name__ == "__main__":
    sys.exit(main())
