"""Experiment configuration, single runs, sweeps and their on-disk outputs.

A run produces up to three artifacts: a JSONL game trace, a JSON report and
one CSV summary row.  Everything is a pure function of the configuration,
so identical configs give byte-identical files.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import itertools
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import analysis
from .bob import SWBob, bob_from_name
from .codec import adversary_from_name, run_session
from .errors import BudgetExceeded, CoinGameError, ConfigError
from .eve import SWAttack, eve_from_name
from .game import GameConfig, GameTrace, as_fraction, evaluate, play, surviving_list
from .oracle import default_threads, enumerate_eve, full_minimax

MODES = ("simulate", "attack", "oracle", "verify", "codec", "sweep")
SUITES = ("sw-lemmas", "psi", "attack", "all")
SUMMARY_COLUMNS = (
    ["mode", "K", "n", "ell", "r", "epsilon", "seed"] + [f"posc{i}_final" for i in range(1, 7)] + ["survivors", "pass"]
)
MAX_SWEEP_POINTS = 10**5

EXIT_PASS, EXIT_VIOLATION, EXIT_INVALID = 0, 1, 2


@dataclass
class ExperimentConfig:
    mode: str
    K: int | None = None
    k: int | None = None
    n: int | None = None
    q: int | None = None
    ell: int | None = None
    r: str | None = None
    epsilon: float | None = None
    bob: str = "sw"
    eve: str = "greedy"
    adversary: str = "none"
    seed: int = 0
    x: int | None = None
    posc_index: int | None = None
    direction: str = "min"
    memo: bool = False
    objective: str = "eve"
    trace: str | None = None
    suite: str = "sw-lemmas"
    all_records: bool = False
    trace_out: str | None = None
    report_out: str | None = None
    csv_out: str | None = None
    base: str | None = None
    grid: dict = field(default_factory=dict)
    threads: int | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        clean = {key.replace("-", "_"): value for key, value in data.items()}
        unknown = sorted(set(clean) - names)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        if "mode" not in clean:
            raise ConfigError("config needs a mode")
        return cls(**clean)

    @classmethod
    def from_file(cls, path, overrides: dict | None = None) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
        data.update(overrides or {})
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @property
    def coins(self) -> int | None:
        if self.K is not None:
            return self.K
        return None if self.k is None else 2**self.k

    def validate(self) -> "ExperimentConfig":
        """Check that the mode has everything it needs; returns self."""
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {', '.join(MODES)}, got {self.mode!r}")
        if self.K is not None and self.k is not None and self.K != 2**self.k:
            raise ConfigError(f"K={self.K} disagrees with k={self.k}")
        if self.r is not None:
            as_fraction(self.r)
        if self.epsilon is not None and not 0 < self.epsilon < 1:
            raise ConfigError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.ell is not None and self.ell < 1:
            raise ConfigError(f"ell must be positive, got {self.ell}")

        def need(*keys):
            missing = [key for key in keys if getattr(self, key) is None]
            if missing:
                raise ConfigError(f"{self.mode} needs --{', --'.join(m.replace('_', '-') for m in missing)}")

        if self.mode == "simulate":
            if self.coins is None:
                raise ConfigError("simulate needs --K or --k")
            need("n")
        elif self.mode == "attack":
            need("q", "epsilon")
            if self.coins is None:
                raise ConfigError("attack needs --K or --k")
            if self.n is not None and self.n != 67 * self.q:
                raise ConfigError(f"attack runs n = 67q = {67 * self.q} rounds, got --n {self.n}")
        elif self.mode == "oracle":
            if self.coins is None:
                raise ConfigError("oracle needs --K or --k")
            need("n", "posc_index")
            if self.objective not in ("eve", "minimax"):
                raise ConfigError(f"oracle objective must be 'eve' or 'minimax', got {self.objective!r}")
        elif self.mode == "verify":
            need("trace")
            if self.suite not in SUITES:
                raise ConfigError(f"suite must be one of {', '.join(SUITES)}, got {self.suite!r}")
            if self.suite in ("psi", "attack") and self.epsilon is None:
                raise ConfigError(f"suite {self.suite} needs --epsilon")
            if self.suite == "attack" and self.q is None:
                raise ConfigError("suite attack needs --q")
        elif self.mode == "codec":
            need("k", "n", "r")
        elif self.mode == "sweep":
            if self.base not in MODES or self.base == "sweep":
                raise ConfigError(f"sweep needs --base set to one of simulate, attack, oracle, verify, codec; got {self.base!r}")
            if not self.grid:
                raise ConfigError("sweep needs at least one --grid axis")
            names = {f.name for f in dataclasses.fields(self)}
            for key in self.grid:
                if key not in names or key in ("mode", "grid", "base"):
                    raise ConfigError(f"cannot sweep over {key!r}")
            if math.prod(len(v) for v in self.grid.values()) > MAX_SWEEP_POINTS:
                raise ConfigError(f"sweep has more than {MAX_SWEEP_POINTS} points")
            for point in sweep_points(self)[:1]:
                point.validate()
        return self


@dataclass
class RunResult:
    exit_code: int
    report: dict
    summary: dict
    trace: GameTrace | None = None


def _summary(cfg: ExperimentConfig, K, n, final_posc, survivors, passed: bool) -> dict:
    row = {
        "mode": cfg.mode,
        "K": K,
        "n": n,
        "ell": cfg.ell,
        "r": None if cfg.r is None else str(as_fraction(cfg.r)),
        "epsilon": cfg.epsilon,
        "seed": cfg.seed,
    }
    posc = [] if final_posc is None else [int(v) for v in final_posc]
    for i in range(1, 7):
        row[f"posc{i}_final"] = posc[i - 1] if i <= len(posc) else None
    row["survivors"] = survivors
    row["pass"] = passed
    return row


def _survivor_fields(cfg: ExperimentConfig, trace: GameTrace) -> dict:
    if cfg.r is None:
        return {}
    survivors = surviving_list(trace.final, cfg.r)
    out = {"r": str(as_fraction(cfg.r)), "survivors": len(survivors), "survivor_ids": survivors[:64]}
    if cfg.ell is not None:
        out["winner"] = evaluate(trace.final, cfg.ell, cfg.r).value
    return out


def _run_simulate(cfg: ExperimentConfig) -> RunResult:
    K = cfg.coins
    config = GameConfig(K, cfg.n)
    trace = play(config, bob_from_name(cfg.bob), eve_from_name(cfg.eve, n=cfg.n, K=K))
    violations = analysis.monitor_posc_step(trace) + analysis.monitor_elapsed(trace)
    passed = not violations
    report = {
        "mode": "simulate",
        "K": K,
        "n": cfg.n,
        "bob": cfg.bob,
        "eve": cfg.eve,
        "final_posc": trace.posc[-1][:16].tolist(),
        **_survivor_fields(cfg, trace),
        "violations": [v.to_dict() for v in violations],
        "pass": passed,
    }
    summary = _summary(cfg, K, cfg.n, trace.posc[-1][:6], report.get("survivors"), passed)
    return RunResult(EXIT_PASS if passed else EXIT_VIOLATION, report, summary, trace)


def _table_check(trace, q, epsilon):
    # the small-K warning is kept in the report instead of on stderr
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        return analysis.attack_table_check(trace, q, epsilon)


def _run_attack(cfg: ExperimentConfig) -> RunResult:
    K = cfg.coins
    n = 67 * cfg.q
    trace = play(GameConfig(K, n), SWBob(), SWAttack(cfg.q))
    table = _table_check(trace, cfg.q, cfg.epsilon)
    claims = analysis.monitor_claim_suite(trace, cfg.q, cfg.epsilon)
    r = cfg.r if cfg.r is not None else "31/67"
    ell = cfg.ell if cfg.ell is not None else 3
    survivors = surviving_list(trace.final, r)
    list_failure = len(survivors) > ell
    passed = table.passed and claims.passed and list_failure
    report = {
        "mode": "attack",
        "K": K,
        "n": n,
        "q": cfg.q,
        "epsilon": cfg.epsilon,
        "milestones": table.to_dict(),
        "claims": {"checked": claims.checked, "violations": [v.to_dict() for v in claims.violations]},
        "r": str(as_fraction(r)),
        "ell": ell,
        "survivors": len(survivors),
        "list_decoding_failure": list_failure,
        "pass": passed,
    }
    summary = _summary(cfg, K, n, trace.posc[-1][:6], len(survivors), passed)
    summary["r"], summary["ell"] = str(as_fraction(r)), ell
    return RunResult(EXIT_PASS if passed else EXIT_VIOLATION, report, summary, trace)


def _run_oracle(cfg: ExperimentConfig) -> RunResult:
    K = cfg.coins
    if cfg.objective == "minimax":
        res = full_minimax(K, cfg.n, cfg.posc_index)
    else:
        res = enumerate_eve(
            bob_from_name(cfg.bob), K, cfg.n, cfg.posc_index, cfg.direction, memo=cfg.memo, threads=cfg.threads
        )
    trace = res.optimal_trace
    report = {"mode": "oracle", "objective": cfg.objective, "bob": cfg.bob, **res.to_json(), **_survivor_fields(cfg, trace)}
    summary = _summary(cfg, K, cfg.n, trace.posc[-1][:6], report.get("survivors"), True)
    return RunResult(EXIT_PASS, report, summary, trace)


def _is_sw_trace(trace: GameTrace) -> bool:
    from .bob import sw_rank_sides

    for t in range(trace.n):
        order = trace.state(t).rank.order
        if not np.array_equal(trace.sides[t][order], sw_rank_sides(trace.config.K)):
            return False
    return True


def _records(trace: GameTrace, cfg: ExperimentConfig, sw: bool) -> list[dict]:
    """Every per-round assertion, passing or not, for the cheap monitors."""
    P = trace.posc.astype(np.int64)
    out = []
    if cfg.suite in ("sw-lemmas", "all"):
        d = np.diff(P, axis=0)
        for t, i in itertools.product(range(d.shape[0]), range(d.shape[1])):
            out.append({"monitor": "posc_step", "round": t + 1, "index": i + 1, "lhs": int(d[t, i]), "rhs": 1,
                        "pass": bool(0 <= d[t, i] <= 1)})
        if sw and P.shape[1] >= 4:
            for t in range(P.shape[0]):
                lhs, rhs = int(P[t, 1] - P[t, 0] + 1), int(P[t, 3] - P[t, 2])
                out.append({"monitor": "gap", "round": t, "index": None, "lhs": lhs, "rhs": rhs, "pass": lhs >= rhs})
        if sw and cfg.epsilon is not None and P.shape[1] >= 4:
            rep = analysis.check_quadruple_bound(trace, cfg.epsilon)
            for t, s in enumerate(rep.slack[0].tolist()):
                out.append({"monitor": "quadruple_bound", "round": t, "index": None, "lhs": s, "rhs": rep.threshold,
                            "pass": s >= rep.threshold})
    return out


def _run_verify(cfg: ExperimentConfig) -> RunResult:
    try:
        with open(cfg.trace) as fp:
            trace = GameTrace.read_jsonl(fp)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read trace {cfg.trace}: {exc}") from None
    sw = _is_sw_trace(trace)
    K = trace.config.K
    checked: dict[str, object] = {}
    violations = []
    notes = []
    if cfg.suite in ("sw-lemmas", "all"):
        violations += analysis.monitor_posc_step(trace)
        violations += analysis.monitor_elapsed(trace)
        checked["posc_step"] = checked["elapsed"] = True
        if not sw:
            notes.append("partitions are not the rank-parity split; SW-only lemmas skipped")
        elif K >= 4:
            violations += analysis.monitor_gap(trace)
            violations += analysis.monitor_no_catchup(trace, trace.choices)
            checked["gap"] = checked["no_catchup"] = True
            if cfg.epsilon is not None:
                violations += analysis.check_quadruple_bound(trace, cfg.epsilon).violations
                checked["quadruple_bound"] = True
    if cfg.suite in ("psi", "all") and cfg.epsilon is not None:
        if K < 4:
            notes.append("psi needs at least 4 coins")
        else:
            rep = analysis.check_psi_recurrence(trace, cfg.epsilon)
            violations += rep.violations + rep.solved_violations
            checked["psi_step"] = checked["psi_solved"] = True
    if cfg.suite in ("attack", "all") and cfg.q is not None:
        table = _table_check(trace, cfg.q, cfg.epsilon)
        for row in table.rows:
            if not row["pass"]:
                violations.append(analysis.Violation("milestone", row["m"], row["index"], row["value"], row["bound"]))
        if not table.final_posc4 < table.final_bound:
            violations.append(analysis.Violation("final_posc4", trace.n, 4, table.final_posc4, float(table.final_bound)))
        violations += analysis.monitor_claim_suite(trace, cfg.q, cfg.epsilon).violations
        checked["milestone"] = checked["claims"] = True
        notes += table.warnings

    by_monitor: dict[str, int] = {name: 0 for name in checked}
    for v in violations:
        by_monitor[v.monitor] = by_monitor.get(v.monitor, 0) + 1
    records = [v.to_dict() for v in violations]
    for rec in records:
        rec.pop("trace", None)
    if cfg.all_records:
        records = _records(trace, cfg, sw) + records
    passed = not violations
    report = {
        "mode": "verify",
        "trace": cfg.trace,
        "suite": cfg.suite,
        "K": K,
        "n": trace.n,
        "records": records,
        "summary": {"monitors": sorted(checked), "violations": by_monitor, "total_violations": len(violations),
                    "notes": notes, "pass": passed},
    }
    summary = _summary(cfg, K, trace.n, trace.posc[-1][:6], None, passed)
    return RunResult(EXIT_PASS if passed else EXIT_VIOLATION, report, summary, None)


def _pick_x(cfg: ExperimentConfig, K: int) -> tuple[int, list[int] | None]:
    """Default message: seeded pick, restricted to dry-run survivors for Eve-driven channels."""
    rng = np.random.default_rng(cfg.seed)
    kind = cfg.adversary.partition(":")[0]
    if kind in ("none", "all", "random"):
        return int(rng.integers(K)), None
    trace = play(GameConfig(K, cfg.n), bob_from_name(cfg.bob), eve_from_name(cfg.adversary, n=cfg.n, K=K))
    survivors = surviving_list(trace.final, cfg.r)
    if not survivors:
        raise ConfigError(f"adversary {cfg.adversary} pushes every coin past the budget; no message fits")
    return int(survivors[rng.integers(len(survivors))]), survivors


def _run_codec(cfg: ExperimentConfig) -> RunResult:
    K = 2**cfg.k
    x = cfg.x
    if x is None:
        x, _ = _pick_x(cfg, K)
    adversary = adversary_from_name(cfg.adversary, cfg.r, n=cfg.n, K=K)
    try:
        res = run_session(cfg.k, cfg.n, bob_from_name(cfg.bob), adversary, x, ell=cfg.ell, keep_trace=True)
    except BudgetExceeded as exc:
        report = {"mode": "codec", "k": cfg.k, "n": cfg.n, "x": x, "error": str(exc), "pass": False}
        return RunResult(EXIT_VIOLATION, report, _summary(cfg, K, cfg.n, None, None, False), None)
    contains_x = x in res.decoded
    passed = contains_x and res.list_ok is not False
    report = {
        "mode": "codec",
        "bob": cfg.bob,
        "adversary": cfg.adversary,
        "r": str(as_fraction(cfg.r)),
        **res.to_json(),
        "x_decoded": contains_x,
        "list_decoding_failure": res.list_ok is False,
        "pass": passed,
    }
    summary = _summary(cfg, K, cfg.n, res.final_state.rank.posc[:6], len(res.decoded), passed)
    return RunResult(EXIT_PASS if passed else EXIT_VIOLATION, report, summary, res.trace)


_RUNNERS = {
    "simulate": _run_simulate,
    "attack": _run_attack,
    "oracle": _run_oracle,
    "verify": _run_verify,
    "codec": _run_codec,
}


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, Fraction):
        return str(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _csv_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def summary_line(row: dict) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerow([_csv_value(row[c]) for c in SUMMARY_COLUMNS])
    return buf.getvalue()


def _append_csv(path, rows: list[dict]) -> None:
    p = Path(path)
    new = not p.exists() or p.stat().st_size == 0
    with p.open("a", newline="") as fp:
        if new:
            fp.write(",".join(SUMMARY_COLUMNS) + "\n")
        for row in rows:
            fp.write(summary_line(row))


def run(cfg: ExperimentConfig, write: bool = True) -> RunResult:
    """Validate and execute one experiment; with ``write`` the artifacts go to disk."""
    cfg.validate()
    if cfg.mode == "sweep":
        return sweep(cfg)
    result = _RUNNERS[cfg.mode](cfg)
    if write:
        if cfg.trace_out and result.trace is not None:
            with open(cfg.trace_out, "w") as fp:
                result.trace.write_jsonl(fp)
        if cfg.report_out:
            Path(cfg.report_out).write_text(dump_json(result.report))
        if cfg.csv_out:
            _append_csv(cfg.csv_out, [result.summary])
    return result


def parse_axis(text: str) -> list:
    """Grid axis values: ``1,2,5``, ``1..100`` or ``2..20:2`` (inclusive)."""
    values: list = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, _, rest = part.partition("..")
            hi, _, step = rest.partition(":")
            try:
                values.extend(range(int(lo), int(hi) + 1, int(step) if step else 1))
            except ValueError:
                raise ConfigError(f"bad range {part!r}") from None
            continue
        values.append(_scalar(part))
    if not values:
        raise ConfigError(f"empty axis {text!r}")
    return values


def _scalar(s: str):
    for conv in (int, float):
        try:
            return conv(s)
        except ValueError:
            pass
    return s


def sweep_points(cfg: ExperimentConfig) -> list[ExperimentConfig]:
    """Cartesian product of the grid in key order, last axis fastest."""
    keys = list(cfg.grid)
    base = dataclasses.replace(cfg, mode=cfg.base, base=None, grid={}, trace_out=None, report_out=None, csv_out=None)
    points = []
    for combo in itertools.product(*(cfg.grid[k] for k in keys)):
        point = dataclasses.replace(base, **dict(zip(keys, combo)))
        if point.mode == "oracle":
            point.threads = 1
        points.append(point)
    return points


def _completed_rows(path) -> int:
    """Data rows already in a sweep CSV; a torn last line is dropped."""
    p = Path(path)
    if not p.exists() or p.stat().st_size == 0:
        return 0
    text = p.read_text()
    lines = text.split("\n")
    if lines[0] != ",".join(SUMMARY_COLUMNS):
        raise ConfigError(f"{path} is not a sweep summary from this tool")
    if not text.endswith("\n"):
        p.write_text("\n".join(lines[:-1]) + "\n")
        lines = lines[:-1]
    return len([ln for ln in lines[1:] if ln])


def _run_point(point: ExperimentConfig) -> dict:
    try:
        return _RUNNERS[point.mode](point).summary
    except CoinGameError:
        return _summary(point, point.coins, point.n, None, None, False)


def sweep(cfg: ExperimentConfig) -> RunResult:
    points = sweep_points(cfg)
    done = _completed_rows(cfg.csv_out) if cfg.csv_out else 0
    todo = points[done:]
    threads = cfg.threads or default_threads()
    rows: list[dict] = []
    if cfg.csv_out and done == 0:
        _append_csv(cfg.csv_out, [])
    with ThreadPoolExecutor(max_workers=threads) as pool:
        # map preserves submission order, so rows land in grid order
        for row in pool.map(_run_point, todo):
            rows.append(row)
            if cfg.csv_out:
                _append_csv(cfg.csv_out, [row])
    passed = all(row["pass"] for row in rows)
    report = {
        "mode": "sweep",
        "base": cfg.base,
        "grid": cfg.grid,
        "points": len(points),
        "resumed_from": done,
        "ran": len(rows),
        "failed": sum(not row["pass"] for row in rows),
        "pass": passed,
    }
    if cfg.report_out:
        Path(cfg.report_out).write_text(dump_json(report))
    return RunResult(EXIT_PASS if passed else EXIT_VIOLATION, report, {}, None)


__all__ = [
    "EXIT_INVALID",
    "EXIT_PASS",
    "EXIT_VIOLATION",
    "ExperimentConfig",
    "MODES",
    "RunResult",
    "SUMMARY_COLUMNS",
    "parse_axis",
    "run",
    "summary_line",
    "sweep",
    "sweep_points",
]
