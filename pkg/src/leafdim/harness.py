"""Verification cases for the entropy identities and inequalities.

Each case names a system, an ambient set, a claim and a tolerance. Running it
calls the estimators and records both sides of the claim together with the
estimator diagnostics. Inequalities get slack only on the side the estimate
can err toward; equalities are checked relative to ``max(1, rhs)``. A case
whose estimators report a failed trend or an unstable estimate is
indeterminate, never passed.
"""

from __future__ import annotations

import json
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .covers import GridCover
from .errors import (ConfigError, CountBudgetExceeded, Infeasible, IndeterminateTrend,
                     LeafdimError)
from .hdim import critical_exponent, h_unstable_H, outer_measure_approx
from .leaf import (LeafSubset, UnionSet, WholeTorus, ambient_set_from_spec, leaf_ball,
                   sample_points_in, trace_subset)
from .systems import system_from_spec
from .umetric import metric_entropy_jacobian, smb_convergence_report
from .utop import entropy_of_compact, entropy_of_subset_cover_style, unstable_topological_entropy

CLAIMS = (
    "A1_compact_upper_bound",
    "A2_measure_lower_bound",
    "A3_equality",
    "L32a_invariance",
    "L32b_union",
    "L32c_power",
    "L33_subadditivity",
    "remark_inverse_asymmetry",
    "smb_limit",
    "variational_consistency",
)

EXIT_PASS, EXIT_FAIL, EXIT_INDETERMINATE, EXIT_CONFIG = 0, 1, 2, 3

# Estimator settings shared by every case unless overridden in ``params``.
DEFAULT_PARAMS = {
    "deltas": [0.1, 0.05],
    "meshes": [8, 16, 32, 64],
    "samples": 2,
    "seed": 0,
    "delta": 0.1,
    "estimator": "hdim",
    "power": 2,
    "pairs": 50,
    "smb_n": 25,
    "smb_mesh": 16,
    "smb_samples": 10,
}


@dataclass
class VerificationCase:
    name: str
    system: str
    claim: str
    set_Y: str = "torus"
    tolerance: float = 0.05
    params: dict = field(default_factory=dict)
    verdict: str | None = None  # pass | fail | indeterminate
    lhs: float | None = None
    rhs: float | None = None
    diagnostics: dict = field(default_factory=dict)

    def param(self, key):
        return self.params.get(key, DEFAULT_PARAMS[key])

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("lhs", "rhs"):
            if d[k] is not None and not math.isfinite(d[k]):
                d[k] = None
        return d


def _clean(obj):
    """Make diagnostics JSON-safe (NaN and inf become None)."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


# ---------------------------------------------------------------------------
# per-claim evaluation
# ---------------------------------------------------------------------------

def _trace_at_sample(case, T, Y):
    rng = np.random.default_rng(case.param("seed"))
    base = WholeTorus() if isinstance(Y, WholeTorus) else Y
    for x in sample_points_in(base, T.dim, max(1, case.param("samples")), rng, T):
        X = trace_subset(T, Y, leaf_ball(T, x, case.param("delta")))
        if not X.is_empty:
            return X
    raise Infeasible("no sampled leaf ball meets the set")


def _lambda_star(case, T, X):
    """Maximum critical exponent over the configured meshes; (value, stable, diag)."""
    best, diag = 0.0, []
    for m in sorted(case.param("meshes")):
        try:
            r = critical_exponent(T, X, GridCover(m, dim=T.dim))
        except Infeasible as exc:
            diag.append({"mesh": m, "skipped": str(exc)})
            continue
        diag.append(r.summary())
        best = max(best, r.lambda_star)
    if all("skipped" in d for d in diag):
        raise Infeasible("no mesh admitted a full scale window")
    return best, diag


def _h(case, T, Y):
    est = h_unstable_H(T, Y, case.param("deltas"), case.param("samples"), case.param("meshes"),
                       case.param("seed"))
    return est.value, est.stabilized, est.summary()


def _utop(case, T, Y=None):
    if Y is None or isinstance(Y, WholeTorus):
        est = unstable_topological_entropy(T, case.param("deltas"), case.param("samples"),
                                           case.param("meshes"), seed=case.param("seed"))
    else:
        est = entropy_of_subset_cover_style(T, Y, case.param("deltas"), case.param("samples"),
                                            case.param("meshes"), seed=case.param("seed"))
    return est.value, est.stabilized, est.summary()


def _evaluate(case: VerificationCase) -> tuple[float, float, bool, bool, dict]:
    """Returns ``lhs, rhs, holds, stable, diagnostics``."""
    T = system_from_spec(case.system)
    Y = ambient_set_from_spec(case.set_Y)
    tol = case.tolerance
    claim = case.claim

    if claim == "A1_compact_upper_bound":
        K = _trace_at_sample(case, T, Y)
        lhs, diag_h = _lambda_star(case, T, K)
        est = entropy_of_compact(T, K, case.param("meshes"))
        rhs = est.value
        return lhs, rhs, lhs <= rhs + tol, est.stabilized, {"hdim": diag_h, "utop": est.summary()}

    if claim == "A2_measure_lower_bound":
        lhs = metric_entropy_jacobian(T)
        rhs, stable, diag = _h(case, T, Y)
        return lhs, rhs, lhs <= rhs + tol, stable, {"hdim": diag}

    if claim == "A3_equality":
        lhs, s1, d1 = _h(case, T, Y)
        rhs, s2, d2 = _utop(case, T, Y)
        return lhs, rhs, abs(lhs - rhs) <= tol * max(1.0, rhs), s1 and s2, {"hdim": d1, "utop": d2}

    if claim == "L32a_invariance":
        X = _trace_at_sample(case, T, Y)
        lhs, d1 = _lambda_star(case, T, X)
        rhs, d2 = _lambda_star(case, T, X.iterate(T, 1))
        return lhs, rhs, abs(lhs - rhs) <= tol, True, {"X": d1, "fX": d2}

    if claim == "L32b_union":
        if not isinstance(Y, UnionSet):
            raise ConfigError("L32b_union needs a union set A+B", "set")
        lhs, s, d = _h(case, T, Y)
        parts = [_h(case, T, P) for P in Y.parts]
        rhs = max(p[0] for p in parts)
        stable = s and all(p[1] for p in parts)
        return lhs, rhs, abs(lhs - rhs) <= tol, stable, {"union": d, "parts": [p[2] for p in parts]}

    if claim == "L32c_power":
        k = case.param("power")
        Tk = T.power(k)
        if case.param("estimator") == "utop":
            lhs, s1, d1 = _utop(case, Tk, Y)
            base, s2, d2 = _utop(case, T, Y)
            stable = s1 and s2
        else:
            X = _trace_at_sample(case, T, Y)
            Xk = trace_subset(Tk, Y, leaf_ball(Tk, X.carrier.base, case.param("delta")))
            lhs, d1 = _lambda_star(case, Tk, Xk)
            base, d2 = _lambda_star(case, T, X)
            stable = True
        rhs = k * base
        return lhs, rhs, abs(lhs - rhs) <= tol * abs(rhs), stable, {"power": d1, "base": d2}

    if claim == "L33_subadditivity":
        rng = np.random.default_rng(case.param("seed"))
        delta = case.param("delta")
        x = sample_points_in(WholeTorus(), T.dim, 1, rng)[0]
        C = leaf_ball(T, x, delta)
        A = GridCover(min(case.param("meshes")), dim=T.dim)
        failures, worst = 0, 0.0
        for _ in range(case.param("pairs")):
            a = tuple(np.sort(rng.uniform(-delta, delta, 2)))
            b = tuple(np.sort(rng.uniform(-delta, delta, 2)))
            X1, X2 = LeafSubset(C, (a,)), LeafSubset(C, (b,))
            lam = float(rng.uniform(0.0, T.stride * T.log_rate + 1.0))
            N = int(rng.integers(1, 5))
            m1 = outer_measure_approx(T, X1, A, lam, N)[0]
            m2 = outer_measure_approx(T, X2, A, lam, N)[0]
            mu = outer_measure_approx(T, X1.union(X2), A, lam, N)[0]
            excess = mu - (m1 + m2)
            worst = max(worst, excess)
            failures += excess > tol
        return float(failures), 0.0, failures == 0, True, {"pairs": case.param("pairs"),
                                                          "worst_excess": worst}

    if claim == "remark_inverse_asymmetry":
        if T.dim != 3:
            raise ConfigError("remark_inverse_asymmetry needs a 3-torus system", "system")
        est_f, s1, d1 = _utop(case, T)
        est_inv, s2, d2 = _utop(case, T.inverse())
        log_c = math.log(T.splitting.rate("center"))
        lhs, rhs = est_inv, est_f + log_c
        holds = est_inv < est_f and abs(lhs - rhs) <= tol
        return lhs, rhs, holds, s1 and s2, {"f": d1, "inverse": d2, "log_center": log_c}

    if claim == "smb_limit":
        n = case.param("smb_n")
        rep = smb_convergence_report(T, case.param("smb_samples"), sorted({10, 15, 20, n}),
                                     case.param("smb_mesh"), case.param("seed"))
        lhs, rhs = rep.mean_at(n), metric_entropy_jacobian(T)
        return lhs, rhs, abs(lhs - rhs) <= tol * abs(rhs), True, rep.summary()

    if claim == "variational_consistency":
        lhs = metric_entropy_jacobian(T)
        rhs, stable, diag = _utop(case, T)
        return lhs, rhs, lhs <= rhs + tol, stable, {"utop": diag}

    raise ConfigError(f"unknown claim {claim!r}", "claim")


def run_case(case: VerificationCase) -> VerificationCase:
    """Evaluate ``case`` in place and return it with its verdict."""
    try:
        lhs, rhs, holds, stable, diag = _evaluate(case)
    except IndeterminateTrend as exc:
        case.verdict = "indeterminate"
        case.diagnostics = {"error": str(exc),
                            "data": exc.result.summary() if exc.result is not None else None}
        return case
    except (Infeasible, CountBudgetExceeded) as exc:
        case.verdict = "indeterminate"
        case.diagnostics = {"error": str(exc)}
        return case
    case.lhs, case.rhs = float(lhs), float(rhs)
    case.diagnostics = _clean(diag)
    if not holds:
        case.verdict = "fail"
    elif not stable:
        case.verdict = "indeterminate"
        case.diagnostics["note"] = "estimate did not stabilise across meshes or radii"
    else:
        case.verdict = "pass"
    return case


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------

def default_suite() -> list[VerificationCase]:
    ball = "ball:c=(1/3,1/5),r=0.25"
    ball3 = "ball:c=(1/3,1/5,1/7),r=0.25"
    union = "orbit:p=(1/5,2/5)+ball:c=(1/2,1/2),r=0.25"
    C = VerificationCase
    return [
        C("A3 cat2", "cat2", "A3_equality"),
        C("A3 paper3", "paper3:k0=5", "A3_equality"),
        C("A3 paper3 inverse", "paper3:k0=5:inverse", "A3_equality"),
        C("A1 cat2 ball trace", "cat2", "A1_compact_upper_bound", ball),
        C("A1 paper3 ball trace", "paper3:k0=5", "A1_compact_upper_bound", ball3),
        C("A2 cat2 ball", "cat2", "A2_measure_lower_bound", ball),
        C("A2 paper3 ball", "paper3:k0=5", "A2_measure_lower_bound", ball3),
        C("L32a cat2", "cat2", "L32a_invariance"),
        C("L32a paper3", "paper3:k0=5", "L32a_invariance"),
        C("L32b cat2 orbit+ball", "cat2", "L32b_union", union),
        C("L32c cat2 hdim", "cat2", "L32c_power", params={"meshes": [8]}),
        C("L32c paper3 utop", "paper3:k0=5", "L32c_power", params={"estimator": "utop"}),
        C("L33 cat2", "cat2", "L33_subadditivity", tolerance=1e-9),
        C("L33 paper3", "paper3:k0=5", "L33_subadditivity", tolerance=1e-9),
        C("remark paper3", "paper3:k0=5", "remark_inverse_asymmetry", tolerance=0.08),
        C("SMB cat2", "cat2", "smb_limit"),
        C("SMB paper3", "paper3:k0=5", "smb_limit"),
        C("variational cat2", "cat2", "variational_consistency"),
        C("variational paper3", "paper3:k0=5", "variational_consistency"),
        C("variational paper3 inverse", "paper3:k0=5:inverse", "variational_consistency"),
    ]


def check_coverage(cases: list[VerificationCase]) -> list[str]:
    """Claim kinds missing from ``cases``."""
    present = {c.claim for c in cases}
    return [c for c in CLAIMS if c not in present]


_CASE_KEYS = {"name", "system", "claim", "set", "tolerance", "params"}


def cases_from_config(config: dict) -> list[VerificationCase]:
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object", "$")
    unknown = set(config) - {"cases", "tolerance", "seed", "threads"}
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}", "$")
    raw = config.get("cases", [])
    if not isinstance(raw, list):
        raise ConfigError("'cases' must be a list", "$.cases")
    g_tol = config.get("tolerance")
    g_seed = config.get("seed")
    out = []
    for i, item in enumerate(raw):
        where = f"$.cases[{i}]"
        if not isinstance(item, dict):
            raise ConfigError("case must be an object", where)
        bad = set(item) - _CASE_KEYS
        if bad:
            raise ConfigError(f"unknown keys {sorted(bad)}", where)
        for key in ("system", "claim"):
            if not isinstance(item.get(key), str):
                raise ConfigError(f"missing or non-string '{key}'", f"{where}.{key}")
        if item["claim"] not in CLAIMS:
            raise ConfigError(f"unknown claim {item['claim']!r}", f"{where}.claim")
        try:
            system_from_spec(item["system"])
        except (LeafdimError, ValueError) as exc:
            raise ConfigError(str(exc), f"{where}.system") from None
        set_spec = item.get("set", "torus")
        ambient_set_from_spec(set_spec, f"{where}.set")
        tol = item.get("tolerance", g_tol if g_tol is not None else 0.05)
        if not isinstance(tol, (int, float)) or tol < 0:
            raise ConfigError("tolerance must be a nonnegative number", f"{where}.tolerance")
        params = dict(item.get("params", {}))
        bad = set(params) - set(DEFAULT_PARAMS)
        if bad:
            raise ConfigError(f"unknown params {sorted(bad)}", f"{where}.params")
        if g_seed is not None:
            params.setdefault("seed", g_seed)
        out.append(VerificationCase(item.get("name", f"case {i}"), item["system"], item["claim"],
                                    set_spec, float(tol), params))
    return out


def load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}", path) from None
    except OSError as exc:
        raise ConfigError(str(exc), path) from None


@dataclass
class SuiteReport:
    cases: list[VerificationCase]
    missing_claims: list[str] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        verdicts = {c.verdict for c in self.cases}
        if "fail" in verdicts:
            return EXIT_FAIL
        if "indeterminate" in verdicts:
            return EXIT_INDETERMINATE
        return EXIT_PASS

    def to_dict(self) -> dict:
        return {
            "exit_code": self.exit_code,
            "missing_claims": self.missing_claims,
            "cases": [c.to_dict() for c in self.cases],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def table(self) -> str:
        lines = [f"{'case':32s} {'claim':26s} {'lhs':>9s} {'rhs':>9s} {'tol':>7s}  verdict"]
        for c in self.cases:
            lhs = "-" if c.lhs is None else f"{c.lhs:.4f}"
            rhs = "-" if c.rhs is None else f"{c.rhs:.4f}"
            lines.append(f"{c.name[:32]:32s} {c.claim:26s} {lhs:>9s} {rhs:>9s} "
                         f"{c.tolerance:7.3g}  {c.verdict}")
        return "\n".join(lines)


def _threads(config: dict | None) -> int:
    n = (config or {}).get("threads") or os.environ.get("LEAFDIM_THREADS") or 1
    try:
        return max(1, int(n))
    except ValueError:
        raise ConfigError(f"thread count {n!r} is not an integer", "LEAFDIM_THREADS") from None


def run_suite(config: dict | None = None, tolerance: float | None = None) -> SuiteReport:
    """Run the cases of ``config`` (the default suite when ``None``).

    ``tolerance`` overrides every case's tolerance. For the default suite the
    report also lists any claim kind the suite fails to exercise.
    """
    if config is None:
        cases = default_suite()
        missing = check_coverage(cases)
    else:
        cases = cases_from_config(config)
        missing = []
    if tolerance is not None:
        for c in cases:
            c.tolerance = float(tolerance)
    workers = _threads(config)
    with warnings.catch_warnings():
        # stability is read from the estimates themselves
        warnings.simplefilter("ignore")
        if workers > 1 and len(cases) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                list(pool.map(run_case, cases))
        else:
            for c in cases:
                run_case(c)
    return SuiteReport(cases, missing)
