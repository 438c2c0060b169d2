"""Table/figure reproduction targets, serialisation and the golden-file check."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from . import __version__
from .capacity import (
    ChannelConfig,
    Scheme,
    capacity_csit,
    capacity_high_snr_approx,
    capacity_no_csit,
    onoff_rate,
    rounded_db_power,
    solve_cutoff,
)
from .errors import ConvergenceError
from .montecarlo import McConfig, mc_capacity_csit, mc_capacity_no_csit, mc_onoff_rate, mc_outage, sample_eigenvalues
from .outage import outage_analysis
from .spectrum import AntennaPair

__all__ = [
    "TABLES",
    "FIGURES",
    "ReportRequest",
    "Report",
    "run_report",
    "run_verify",
    "load_golden",
    "list_targets",
    "Tolerances",
    "VerifyResult",
]

ROMAN = "I II III IV V VI VII VIII IX X XI XII XIII XIV XV XVI XVII XVIII XIX".split()
TABLE_SNRS = (-15, -10, -5, 0, 5, 10)
ONOFF_SNRS = (0, -5, -10, -15, -20, -25, -30, -35, -40)

MC_COL = "Capacity (Monte Carlo)"
NUM_COL = "Capacity (Numerical)"
WF_COL = "Capacity (Waterfilling)"
ONOFF_MC_COL = "On-off (Monte-carlo)"
ONOFF_NUM_COL = "On-off (numerical)"
SNR_COL = "SNR (dB)"


@dataclass(frozen=True)
class TableSpec:
    n_r: int
    n_t: int
    kind: str  # csit | no_csit | onoff
    snrs: tuple

    @property
    def columns(self) -> list[str]:
        if self.kind == "onoff":
            return [SNR_COL, WF_COL, ONOFF_MC_COL, ONOFF_NUM_COL]
        return [SNR_COL, MC_COL, NUM_COL]


def _build_tables() -> dict[str, TableSpec]:
    specs = [(4, nt, "csit", TABLE_SNRS) for nt in (4, 6, 8, 10, 12)]
    specs += [(4, nt, "no_csit", TABLE_SNRS) for nt in (4, 6, 8, 10, 12)]
    specs += [(nr, 4, "no_csit", TABLE_SNRS) for nr in (6, 8, 10, 12)]
    specs += [(4, nt, "onoff", ONOFF_SNRS) for nt in (4, 6, 8, 10, 12)]
    return {rid: TableSpec(*s) for rid, s in zip(ROMAN, specs)}


TABLES = _build_tables()

FIGURES = {
    1: "Ergodic capacity with and without CSIT, N_T = 4, N_R in {4,6,8,10,12}",
    2: "Ergodic capacity with and without CSIT, N_R = 4, N_T in {4,6,8,10,12}",
    3: "Low-SNR on-off vs waterfilling rates, N_R = 4, N_T in {4,6,8,10,12}",
    4: "Ergodic capacity vs m = 1..18 with n = 18 (needs --snr-db)",
    5: "Optimal cut-off gamma0 vs SNR, m = 4, n in {4,6,8,10}",
    6: "Outage bound p1, m = 2, n in {2,4,6,8}",
    7: "Outage min-bound, m = n in {2,3,4}",
    8: "Outage bound p1 vs actual outage, m = 2, n in {2,4,6,8}",
    9: "Outage min-bound vs actual outage, m = n in {2,3,4}",
}
FIG_LOW_SNRS = tuple(range(-40, 1, 5))
FIG_CUTOFF_SNRS = tuple(range(-10, 41, 5))
FIG_OUTAGE_SNRS = tuple(range(-10, 41))

POWER_CONVENTIONS = ("exact", "rounded-db")


def list_targets() -> list[tuple[str, str]]:
    out = []
    for rid, t in TABLES.items():
        label = {"csit": "CSIT capacity", "no_csit": "no-CSIT capacity",
                 "onoff": "on-off vs waterfilling rates"}[t.kind]
        out.append((f"table {rid}", f"{label}, N_R = {t.n_r}, N_T = {t.n_t}"))
    out += [(f"figure {k}", v) for k, v in FIGURES.items()]
    out.append(("custom", "any --nr/--nt/--snr-db/--scheme combination"))
    return out


@dataclass
class ReportRequest:
    """What to compute and how to serialise it.

    ``target`` is ``"table:<roman>"``, ``"figure:<n>"`` or ``"custom"``.
    ``onoff_power`` selects the power convention of the numerical on-off
    column; ``None`` means ``"rounded-db"`` for tables and ``"exact"``
    elsewhere.
    """

    target: str
    n_r: int | None = None
    n_t: int | None = None
    snr_db: tuple | None = None
    samples: int = 1_000_000
    seed: int = 0
    workers: int = 1
    method: str = "both"
    schemes: tuple = ("csit_waterfill",)
    onoff_power: str | None = None
    format: str = "csv"

    def __post_init__(self):
        if self.method not in ("both", "numerical", "montecarlo"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.format not in ("csv", "json"):
            raise ValueError(f"unknown format {self.format!r}")
        if self.onoff_power is not None and self.onoff_power not in POWER_CONVENTIONS:
            raise ValueError(f"unknown power convention {self.onoff_power!r}")
        kind, _, ident = self.target.partition(":")
        if kind == "table" and ident not in TABLES:
            raise ValueError(f"unknown table {ident!r}; expected one of {', '.join(TABLES)}")
        if kind == "figure" and (not ident.isdigit() or int(ident) not in FIGURES):
            raise ValueError(f"unknown figure {ident!r}; expected 1..{len(FIGURES)}")
        if kind not in ("table", "figure", "custom"):
            raise ValueError(f"unknown target {self.target!r}")

    @property
    def mc(self) -> McConfig:
        return McConfig(samples=self.samples, seed=self.seed, workers=self.workers)

    @property
    def wants_numerical(self) -> bool:
        return self.method in ("both", "numerical")

    @property
    def wants_mc(self) -> bool:
        return self.method in ("both", "montecarlo")


@dataclass
class Report:
    target: str
    columns: list[str]
    rows: list[dict]
    meta: dict = field(default_factory=dict)
    errors: list[str] = field(default_factory=list)
    formats: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_fmt(row.get(c), self.formats.get(c)) for c in self.columns])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {"target": self.target, "tool_version": __version__, **self.meta,
               "columns": self.columns, "rows": [{c: r.get(c) for c in self.columns} for r in self.rows]}
        if self.errors:
            doc["errors"] = self.errors
        return json.dumps(doc, indent=2, allow_nan=False, default=str) + "\n"

    def serialize(self, fmt: str) -> str:
        return self.to_csv() if fmt == "csv" else self.to_json()


def _fmt(value, spec: str | None) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, str)):
        return str(value)
    if spec is None:
        return f"{value:.6f}"
    return format(value, spec)


def _snr_value(s: float):
    return int(s) if float(s).is_integer() else float(s)


def _catch(errors: list, label: str, fn, *args):
    try:
        return fn(*args)
    except (ArithmeticError, ValueError, ConvergenceError) as exc:
        errors.append(f"{label}: {type(exc).__name__}: {exc}")
        return None


def _onoff_cfg(convention: str, n_r: int, n_t: int, snr: float) -> ChannelConfig:
    if convention == "rounded-db":
        return rounded_db_power(n_r, n_t, snr)
    return ChannelConfig.from_snr_db(n_r, n_t, snr)


def _table_report(rid: str, req: ReportRequest) -> Report:
    spec = TABLES[rid]
    n_r = req.n_r or spec.n_r
    n_t = req.n_t or spec.n_t
    snrs = tuple(req.snr_db) if req.snr_db else spec.snrs
    convention = req.onoff_power or "rounded-db"
    pair = AntennaPair(n_r, n_t)
    eigs = sample_eigenvalues(pair, req.mc) if req.wants_mc else None
    rows, errors, std_errors = [], [], []
    for s in snrs:
        cfg = ChannelConfig.from_snr_db(n_r, n_t, s)
        label = f"table {rid} SNR={s:g}"
        row = {SNR_COL: _snr_value(s)}
        stderr = None
        if spec.kind in ("csit", "no_csit"):
            num_fn, mc_fn = ((capacity_csit, mc_capacity_csit) if spec.kind == "csit"
                             else (capacity_no_csit, mc_capacity_no_csit))
            if req.wants_numerical:
                pt = _catch(errors, label, num_fn, cfg)
                row[NUM_COL] = pt.value if pt else None
            if req.wants_mc:
                est = _catch(errors, label, mc_fn, cfg, req.mc, eigs)
                row[MC_COL] = est.mean if est else None
                stderr = est.std_error if est else None
        else:
            wf = _catch(errors, label, capacity_csit, cfg)
            row[WF_COL] = wf.value if wf else None
            if req.wants_mc:
                est = _catch(errors, label, mc_onoff_rate, cfg, req.mc, eigs)
                row[ONOFF_MC_COL] = est.mean if est else None
                stderr = est.std_error if est else None
            if req.wants_numerical:
                pt = _catch(errors, label, onoff_rate, _onoff_cfg(convention, n_r, n_t, s))
                row[ONOFF_NUM_COL] = pt.value if pt else None
        rows.append(row)
        std_errors.append(stderr)
    meta = {"grid": {"n_r": n_r, "n_t": n_t, "snr_db": list(snrs), "kind": spec.kind},
            "method": req.method}
    if req.wants_mc:
        meta.update(seed=req.seed, samples=req.samples, mc_std_errors=std_errors)
    if spec.kind == "onoff":
        meta["onoff_power_convention"] = convention
    return Report(f"table {rid}", spec.columns, rows, meta, errors,
                  formats={ONOFF_NUM_COL: ".9f"})


def _capacity_series(req: ReportRequest, pairs, snrs, schemes, fig: str) -> Report:
    cols = ["N_R", "N_T", SNR_COL, "Scheme"]
    if req.wants_numerical:
        cols.append(NUM_COL)
    if req.wants_mc:
        cols.append(MC_COL)
    numerical = {
        Scheme.CSIT_WATERFILL: capacity_csit,
        Scheme.NO_CSIT: capacity_no_csit,
        Scheme.HIGH_SNR_APPROX: capacity_high_snr_approx,
        Scheme.ONOFF: onoff_rate,
    }
    mc_fns = {Scheme.CSIT_WATERFILL: mc_capacity_csit, Scheme.NO_CSIT: mc_capacity_no_csit,
              Scheme.ONOFF: mc_onoff_rate}
    rows, errors = [], []
    for n_r, n_t in pairs:
        eigs = sample_eigenvalues(AntennaPair(n_r, n_t), req.mc) if req.wants_mc else None
        for scheme in schemes:
            scheme = Scheme(scheme)
            for s in snrs:
                cfg = ChannelConfig.from_snr_db(n_r, n_t, s)
                label = f"{fig} N_R={n_r} N_T={n_t} {scheme.value} SNR={s:g}"
                row = {"N_R": n_r, "N_T": n_t, SNR_COL: _snr_value(s), "Scheme": scheme.value}
                if req.wants_numerical:
                    pt = _catch(errors, label, numerical[scheme], cfg)
                    row[NUM_COL] = pt.value if pt else None
                if req.wants_mc and scheme in mc_fns:
                    est = _catch(errors, label, mc_fns[scheme], cfg, req.mc, eigs)
                    row[MC_COL] = est.mean if est else None
                rows.append(row)
    meta = {"grid": {"pairs": [list(p) for p in pairs], "snr_db": list(snrs),
                     "schemes": [Scheme(s).value for s in schemes]}, "method": req.method}
    if req.wants_mc:
        meta.update(seed=req.seed, samples=req.samples)
    return Report(fig, cols, rows, meta, errors)


def _cutoff_series(req: ReportRequest, snrs) -> Report:
    cols = ["N_R", "N_T", SNR_COL, "lambda0", "gamma0"]
    rows, errors = [], []
    for n in (4, 6, 8, 10):
        for s in snrs:
            sol = _catch(errors, f"figure 5 n={n} SNR={s:g}", solve_cutoff,
                         ChannelConfig.from_snr_db(4, n, s))
            rows.append({"N_R": 4, "N_T": n, SNR_COL: _snr_value(s),
                         "lambda0": sol.lambda0 if sol else None,
                         "gamma0": sol.gamma0 if sol else None})
    meta = {"grid": {"m": 4, "n": [4, 6, 8, 10], "snr_db": list(snrs)}}
    return Report("figure 5", cols, rows, meta, errors,
                  formats={"lambda0": ".9g", "gamma0": ".9g"})


def _outage_series(req: ReportRequest, fig: int, snrs) -> Report:
    square = fig in (7, 9)
    with_actual = fig in (8, 9)
    pairs = [(k, k) for k in (2, 3, 4)] if square else [(2, k) for k in (2, 4, 6, 8)]
    if req.n_r and req.n_t:
        pairs = [(req.n_r, req.n_t)]
    cols = ["m", "n", SNR_COL, "lambda0", "p1", "p1 > 1"]
    if square:
        cols += ["p2", "min(p1, p2)"]
    if with_actual:
        cols.append("P_out (Numerical)")
        if req.method in ("both", "montecarlo"):
            cols.append("P_out (Monte Carlo)")
    rows, errors = [], []
    for m, n in pairs:
        pair = AntennaPair(m, n)
        eigs = sample_eigenvalues(pair, req.mc) if with_actual and "P_out (Monte Carlo)" in cols else None
        for s in snrs:
            cfg = ChannelConfig.from_snr_db(m, n, s)
            res = _catch(errors, f"figure {fig} m={m} n={n} SNR={s:g}", outage_analysis, cfg)
            row = {"m": pair.m, "n": pair.n, SNR_COL: _snr_value(s)}
            if res is not None:
                row.update({"lambda0": res.lambda0, "p1": res.p_bound1, "p1 > 1": res.p_bound1 > 1.0})
                if square:
                    row["p2"] = -math.expm1(-pair.m * res.lambda0)
                    row["min(p1, p2)"] = res.p_bound2
                if with_actual:
                    row["P_out (Numerical)"] = res.p_actual
                    if eigs is not None:
                        row["P_out (Monte Carlo)"] = mc_outage(cfg, req.mc, eigs).mean
            rows.append(row)
    meta = {"grid": {"pairs": [list(p) for p in pairs], "snr_db": list(snrs)}}
    if eigs is not None:
        meta.update(seed=req.seed, samples=req.samples)
    prob = ".6e"
    formats = {c: prob for c in ("p1", "p2", "min(p1, p2)", "P_out (Numerical)", "P_out (Monte Carlo)")}
    formats["lambda0"] = ".9g"
    return Report(f"figure {fig}", cols, rows, meta, errors, formats)


def _figure_report(fig: int, req: ReportRequest) -> Report:
    snr_override = tuple(req.snr_db) if req.snr_db else None
    both = (Scheme.CSIT_WATERFILL, Scheme.NO_CSIT)
    if fig == 1:
        pairs = [(nr, 4) for nr in (4, 6, 8, 10, 12)]
        return _capacity_series(req, pairs, snr_override or TABLE_SNRS, both, "figure 1")
    if fig == 2:
        pairs = [(4, nt) for nt in (4, 6, 8, 10, 12)]
        return _capacity_series(req, pairs, snr_override or TABLE_SNRS, both, "figure 2")
    if fig == 3:
        pairs = [(4, nt) for nt in (4, 6, 8, 10, 12)]
        return _capacity_series(req, pairs, snr_override or FIG_LOW_SNRS,
                                (Scheme.ONOFF, Scheme.CSIT_WATERFILL), "figure 3")
    if fig == 4:
        if not snr_override:
            raise ValueError("figure 4 needs at least one --snr-db (its SNR grid is not published)")
        # n = 18 sits on the receive side unless --nt 18 puts it at the transmitter
        if req.n_t == 18:
            pairs = [(m, 18) for m in range(1, 19)]
        else:
            pairs = [(18, m) for m in range(1, 19)]
        return _capacity_series(req, pairs, snr_override, both, "figure 4")
    if fig == 5:
        return _cutoff_series(req, snr_override or FIG_CUTOFF_SNRS)
    return _outage_series(req, fig, snr_override or FIG_OUTAGE_SNRS)


def _custom_report(req: ReportRequest) -> Report:
    if not (req.n_r and req.n_t and req.snr_db):
        raise ValueError("custom reports need --nr, --nt and at least one --snr-db")
    return _capacity_series(req, [(req.n_r, req.n_t)], tuple(req.snr_db), req.schemes, "custom")


def build_report(req: ReportRequest) -> Report:
    kind, _, ident = req.target.partition(":")
    if kind == "table":
        return _table_report(ident, req)
    if kind == "figure":
        return _figure_report(int(ident), req)
    return _custom_report(req)


def run_report(req: ReportRequest) -> str:
    """Compute the requested target and serialise it in ``req.format``."""
    return build_report(req).serialize(req.format)


# golden-file verification ------------------------------------------------------


@dataclass
class Tolerances:
    numerical: float = 5e-4  # numerical column vs published numerical value
    montecarlo: float = 0.02  # any Monte Carlo comparison
    invariant: float = 1e-8  # reciprocity identity

    @classmethod
    def from_file(cls, path) -> "Tolerances":
        """Read ``key = value`` lines; ``#`` starts a comment."""
        keys = {"numerical_tol": "numerical", "mc_tol": "montecarlo", "invariant_tol": "invariant"}
        out = cls()
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = (p.strip() for p in line.partition("="))
            if not sep or key not in keys:
                raise ValueError(f"{path}:{lineno}: expected one of {sorted(keys)} = <number>")
            setattr(out, keys[key], float(value))
        return out


def load_golden(path=None) -> dict:
    if path is None:
        text = resources.files("mimo_capacity").joinpath("data/published_tables.json").read_text()
    else:
        text = Path(path).read_text()
    return json.loads(text)


@dataclass
class VerifyResult:
    passed: bool
    lines: list[str]
    failures: list[str]
    csv_outputs: dict[str, str]


def _compare_table(rid: str, report: Report, golden: dict, tol: Tolerances) -> tuple[list, dict]:
    failures, worst = [], {}
    cols = golden["columns"]
    got_rows = {row[SNR_COL]: row for row in report.rows}
    onoff = golden["kind"] == "onoff"
    num_col = ONOFF_NUM_COL if onoff else NUM_COL
    mc_col = ONOFF_MC_COL if onoff else MC_COL
    checks = [(num_col, tol.numerical), (mc_col, tol.montecarlo)]
    if onoff:
        # the published waterfilling column of the on-off tables is itself a simulation estimate
        checks.append((WF_COL, tol.montecarlo))
    for values in golden["rows"]:
        snr = _snr_value(values[0])
        expected = dict(zip(cols, values))
        row = got_rows.get(snr)
        if row is None:
            failures.append(f"table {rid} SNR={snr}: row missing")
            continue
        for col, limit in checks:
            got = row.get(col)
            if got is None:
                failures.append(f"table {rid} SNR={snr} '{col}': not computed")
                continue
            dev = abs(got - expected[col])
            worst[col] = max(worst.get(col, 0.0), dev)
            if not dev <= limit:
                failures.append(f"table {rid} SNR={snr} '{col}': got {got:.9f}, "
                                f"published {expected[col]:.9f}, |dev|={dev:.3g} > {limit:g}")
        if row.get(mc_col) is not None and row.get(num_col) is not None:
            dev = abs(row[mc_col] - row[num_col])
            worst["MC vs numerical"] = max(worst.get("MC vs numerical", 0.0), dev)
            if not dev <= tol.montecarlo:
                failures.append(f"table {rid} SNR={snr}: Monte Carlo {row[mc_col]:.6f} vs numerical "
                                f"{row[num_col]:.6f}, |dev|={dev:.3g} > {tol.montecarlo:g}")
    return failures, worst


def _invariant_checks(tol: Tolerances) -> list[str]:
    failures = []
    antennas = (1, 2, 4, 6, 8, 12)
    snrs = (-15, 0, 10)
    for i, a in enumerate(antennas):
        for b in antennas[i:]:
            for s in snrs:
                ab = ChannelConfig.from_snr_db(a, b, s)
                ba = ChannelConfig.from_snr_db(b, a, s)
                c_ab, c_ba = capacity_csit(ab).value, capacity_csit(ba).value
                if abs(c_ab - c_ba) > tol.invariant:
                    failures.append(f"reciprocity C({a},{b})={c_ab!r} != C({b},{a})={c_ba!r} at {s} dB")
                h_ab, h_ba = capacity_no_csit(ab).value, capacity_no_csit(ba).value
                if a == b and abs(h_ab - h_ba) > 1e-9:
                    failures.append(f"no-CSIT symmetry broken for square {a}x{a} at {s} dB")
                if a < b and not h_ba > h_ab:
                    failures.append(f"no-CSIT ordering: C^({b},{a}) <= C^({a},{b}) at {s} dB")
                if not c_ab >= max(h_ab, h_ba) >= 0:
                    failures.append(f"CSIT dominance broken for ({a},{b}) at {s} dB")
                if onoff_rate(ab).value > c_ab:
                    failures.append(f"on-off rate exceeds CSIT capacity for ({a},{b}) at {s} dB")
    return failures


def run_verify(samples: int = 1_000_000, seed: int = 0, workers: int = 1,
               tolerances: Tolerances | None = None, golden_path=None, out_dir=None,
               tables=None) -> VerifyResult:
    """Recompute every table, compare with the golden file and run identity checks.

    Writes one CSV per table into ``out_dir`` when given.
    """
    tol = tolerances or Tolerances()
    golden = load_golden(golden_path)
    lines, failures, csvs = [], [], {}
    for rid in tables or TABLES:
        if rid not in golden:
            failures.append(f"table {rid}: missing from golden file")
            continue
        report = build_report(ReportRequest(f"table:{rid}", samples=samples, seed=seed, workers=workers))
        failures.extend(report.errors)
        csvs[rid] = report.to_csv()
        if out_dir is not None:
            Path(out_dir).mkdir(parents=True, exist_ok=True)
            Path(out_dir, f"table_{rid}.csv").write_text(csvs[rid])
        table_failures, worst = _compare_table(rid, report, golden[rid], tol)
        failures.extend(table_failures)
        status = "PASS" if not table_failures and not report.errors else "FAIL"
        detail = ", ".join(f"{k}: {v:.3g}" for k, v in worst.items())
        lines.append(f"{status} table {rid:<5} max |dev| {detail}")
    inv = _invariant_checks(tol)
    failures.extend(inv)
    lines.append(f"{'PASS' if not inv else 'FAIL'} identities ({len(inv)} violations)")
    return VerifyResult(not failures, lines, failures, csvs)
