"""Validation suites reproducing the published error tables.

Each suite returns ReportRow records carrying the measured metric, the
published value when one exists, the tolerance band, and a pass flag
(None for rows that are reported but not asserted: under-resolved anomaly
cells, expected-unstable cells, and trend-only rows).  Suites are
deterministic: fixed parameter lists, fixed iteration orders, no random
initialization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import contact_angle as ca
from . import diffusion as dif
from . import surface_bulk as sb


@dataclass
class ReportRow:
    suite: str
    case_id: str
    params: dict
    metric: str
    value: float | None
    paper_value: float | None = None
    rel_band: float | None = None  # relative half-width, e.g. 0.25
    abs_band: float | None = None  # absolute half-width (angles, conservation)
    passed: bool | None = None
    note: str = ""

    def judge(self):
        if self.paper_value is None or self.value is None:
            return self
        if self.rel_band is not None:
            self.passed = abs(self.value - self.paper_value) <= self.rel_band * abs(self.paper_value)
        elif self.abs_band is not None:
            self.passed = abs(self.value - self.paper_value) <= self.abs_band
        return self


CSV_COLUMNS = [
    "suite", "case_id", "params", "metric", "value",
    "paper_value", "rel_band", "abs_band", "passed", "note",
]


def rows_to_csv(rows: list[ReportRow], path) -> None:
    def fmt(v):
        if v is None:
            return ""
        if isinstance(v, float):
            return repr(v)
        if isinstance(v, dict):
            return "{" + ";".join(f"{k}={v[k]!r}" for k in sorted(v)) + "}"
        return str(v)

    with open(path, "w") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for r in rows:
            fh.write(",".join(fmt(getattr(r, c)) for c in CSV_COLUMNS) + "\n")


def summarize(rows: list[ReportRow]) -> str:
    lines = []
    for r in rows:
        status = {True: "pass", False: "FAIL", None: "info"}[r.passed]
        target = f" paper={r.paper_value:.4g}" if r.paper_value is not None else ""
        val = f"{r.value:.6g}" if r.value is not None else "-"
        note = f"  ({r.note})" if r.note else ""
        lines.append(f"[{status}] {r.suite}/{r.case_id} {r.metric}={val}{target}{note}")
    n_fail = sum(1 for r in rows if r.passed is False)
    lines.append(f"{sum(1 for r in rows if r.passed)} passed, {n_fail} failed, "
                 f"{sum(1 for r in rows if r.passed is None)} informational")
    return "\n".join(lines)


def any_failed(rows: list[ReportRow]) -> bool:
    return any(r.passed is False for r in rows)


# ---------------------------------------------------------------------------
# Table 1: 1D diffusion with two-sided boundary conditions
# ---------------------------------------------------------------------------

DX_LADDER = [1.25e-2, 2.5e-2, 5.0e-2, 1.0e-1, 2.0e-1, 4.0e-1]
ZETA_RATIO = 1.145  # printed zeta columns are 1.145*dx rounded to 3 digits

TABLE1 = {
    # case -> list of (letter, dx, zeta, upsilon, paper_e, assert_flag)
    "1": [("1" + L, 2.5e-2, ZETA_RATIO * dx, 1e-7, e, ok) for (L, dx, e, ok) in [
        ("a", 1.25e-2, 2.74e-4, False),  # under-resolved anomaly, reported only
        ("b", 2.5e-2, 7.88e-4, True),
        ("c", 5.0e-2, 1.72e-3, True),
        ("d", 1.0e-1, 3.53e-3, True),
        ("e", 2.0e-1, 7.20e-3, True),
        ("f", 4.0e-1, 1.49e-2, True),
    ]],
    "2": [("2" + L, dx, ZETA_RATIO * dx, 1e-7, e, True) for (L, dx, e) in [
        ("a", 1.25e-2, 3.93e-4), ("b", 2.5e-2, 7.88e-4), ("c", 5.0e-2, 1.58e-3),
        ("d", 1.0e-1, 3.20e-3), ("e", 2.0e-1, 6.54e-3), ("f", 4.0e-1, 1.39e-2),
    ]],
    "3": [("3" + L, dx, ZETA_RATIO * 5.0e-2, 1e-7, e, ok) for (L, dx, e, ok) in [
        ("a", 1.25e-2, 1.75e-3, True), ("b", 2.5e-2, 1.72e-3, True),
        ("c", 5.0e-2, 1.58e-3, True), ("d", 1.0e-1, 1.16e-3, True),
        ("e", 2.0e-1, 7.53e-4, False),  # alignment-sensitive anomaly cell
        ("f", 4.0e-1, None, False),     # printed "unstable" for the fixed-dt march
    ]],
    "4": [("4" + L, 2.5e-2, ZETA_RATIO * 2.5e-2, u, e, True) for (L, u, e) in [
        ("a", 1e-2, 7.75e-3), ("b", 1e-3, 1.39e-3), ("c", 1e-5, 7.93e-4),
        ("d", 1e-7, 7.88e-4), ("e", 1e-9, 7.88e-4), ("f", 1e-11, 7.88e-4),
    ]],
}
TABLE1_BAND = 0.25


def run_table1_suite() -> list[ReportRow]:
    """All Table 1 cells, the zeta trend, and the upsilon-convergence check."""
    cache: dict = {}
    rows: list[ReportRow] = []

    def run(dx, zeta, ups):
        key = (dx, zeta, ups)
        if key not in cache:
            cache[key] = dif.run_1d_validation(dx=dx, zeta=zeta, upsilon=ups, n_samples=6)
        return cache[key]

    for case, cells in TABLE1.items():
        for cid, dx, zeta, ups, paper_e, assertable in cells:
            res = run(dx, zeta, ups)
            note = ""
            if cid == "1a":
                note = "under-resolved regime, reported only"
            if cid == "3e":
                note = "coarse-grid anomaly, node-alignment sensitive, reported only"
            if cid == "3f":
                note = "printed 'unstable' for the paper's explicit march; fixed point reported"
            row = ReportRow(
                suite="table1", case_id=cid,
                params={"dx": dx, "zeta": zeta, "upsilon": ups},
                metric="e", value=res["e"], paper_value=paper_e,
                rel_band=TABLE1_BAND if assertable else None, note=note,
            )
            rows.append(row.judge() if assertable else row)

    # strict trend: e grows monotonically with zeta over case 1 (b..f)
    es = [run(2.5e-2, ZETA_RATIO * dx, 1e-7)["e"] for dx in DX_LADDER[1:]]
    mono = all(b > a for a, b in zip(es, es[1:]))
    rows.append(ReportRow(
        suite="table1", case_id="case1-trend", params={},
        metric="monotone_in_zeta", value=float(mono), paper_value=1.0,
        abs_band=0.0, note="strict trend over zeta in [2.86e-2, 4.58e-1]",
    ).judge())

    # upsilon convergence: |e(1e-5) - e(1e-11)| within 5 percent
    e_c = run(2.5e-2, ZETA_RATIO * 2.5e-2, 1e-5)["e"]
    e_f = run(2.5e-2, ZETA_RATIO * 2.5e-2, 1e-11)["e"]
    rows.append(ReportRow(
        suite="table1", case_id="case4-upsilon-convergence", params={},
        metric="rel_gap_e(1e-5)_vs_e(1e-11)", value=abs(e_c - e_f) / e_f,
        paper_value=0.0, abs_band=0.05, note="criterion: converged for upsilon <= 1e-5",
    ).judge())
    return rows


def run_appendix_a_suite() -> list[ReportRow]:
    """Boundary-condition recovery as the interface thins.

    Interface residuals (interpolated boundary value vs 0.4; interpolated
    boundary gradient vs -0.1) must decrease strictly as zeta decreases, and
    the fixed-value residual must exceed the fixed-gradient residual at
    matched zeta.
    """
    zetas = [ZETA_RATIO * dx for dx in (2.5e-2, 1.0e-1, 4.0e-1)]
    res = [dif.run_1d_validation(dx=2.5e-2, zeta=z, upsilon=1e-7, n_samples=0) for z in zetas]
    rows = []
    for z, r in zip(zetas, res):
        for m in ("neumann_residual", "dirichlet_residual"):
            rows.append(ReportRow("appendix_a", f"zeta={z:g}", {"zeta": z}, m, r[m]))
    neu = [r["neumann_residual"] for r in res]
    dirch = [r["dirichlet_residual"] for r in res]
    rows.append(ReportRow(
        "appendix_a", "neumann-recovery", {}, "strictly_decreasing_with_zeta",
        float(neu[0] < neu[1] < neu[2]), 1.0, abs_band=0.0).judge())
    rows.append(ReportRow(
        "appendix_a", "dirichlet-recovery", {}, "strictly_decreasing_with_zeta",
        float(dirch[0] < dirch[1] < dirch[2]), 1.0, abs_band=0.0).judge())
    rows.append(ReportRow(
        "appendix_a", "dirichlet-exceeds-neumann", {}, "all_zetas",
        float(all(d > n for d, n in zip(dirch, neu))), 1.0, abs_band=0.0).judge())
    return rows


# ---------------------------------------------------------------------------
# Table 2: coupled surface-bulk diffusion in a cylinder
# ---------------------------------------------------------------------------

TABLE2_PAPER = {
    # (thickness, kappa) -> (e, e_b, e_s)
    ("thin", 2.1): (7.99e-4, 7.99e-4, 8.03e-4),
    ("thin", 20.0): (2.26e-3, 2.23e-3, 3.02e-3),
    ("thin", 50.0): (2.46e-3, 2.39e-3, 4.02e-3),
    ("thin", 100.0): (7.26e-3, 7.37e-3, 2.63e-3),
    ("medium", 2.1): (1.08e-3, 1.04e-3, 1.50e-3),
    ("medium", 20.0): (3.06e-3, 2.89e-3, 4.83e-3),
    ("medium", 50.0): (8.32e-3, 8.51e-3, 5.12e-3),
    ("medium", 100.0): (2.74e-2, 2.84e-2, 1.86e-3),
    ("thick", 2.1): (1.81e-3, 1.63e-3, 2.69e-3),
    ("thick", 20.0): (1.08e-2, 1.13e-2, 6.78e-3),
    ("thick", 50.0): (2.90e-2, 3.11e-2, 5.75e-3),
    ("thick", 100.0): (7.34e-2, 7.89e-2, 1.06e-3),
}
TABLE2_E_BAND = 0.30
TABLE2_ES_BAND = 0.50
# Cells whose absolute values acceptance pins; see the decisions ledger for
# the reproducibility analysis of this table.
TABLE2_ASSERTED = {("thin", 2.1): ("e",), ("thick", 100.0): ("e", "e_s")}
KAPPAS = [2.1, 20.0, 50.0, 100.0]
THICKNESSES = ["thin", "medium", "thick"]


def run_table2_suite(adlr_tol: float = 1e-8, max_sweeps: int = 30000) -> list[ReportRow]:
    rows: list[ReportRow] = []
    results: dict = {}
    for name in THICKNESSES:
        case = sb.make_cylinder_case(name)
        for kappa in KAPPAS:
            prob = sb.cylinder_problem(case, kappa=kappa, d_surf=10.0)
            c, info = sb.solve_helmholtz_adlr(prob, tol=adlr_tol, max_sweeps=max_sweeps)
            sharp = sb.solve_sharp_cylinder(case, kappa, 10.0)
            rep = sb.cylinder_error_report(c.values.real, sharp, case)
            results[(name, kappa)] = rep
            paper = TABLE2_PAPER[(name, kappa)]
            asserted = TABLE2_ASSERTED.get((name, kappa), ())
            for metric, pv, band in zip(
                ("e", "e_b", "e_s"), paper, (TABLE2_E_BAND, TABLE2_E_BAND, TABLE2_ES_BAND)
            ):
                row = ReportRow(
                    suite="table2", case_id=f"{name}-k{kappa:g}",
                    params={"thickness": name, "kappa": kappa},
                    metric=metric, value=rep[metric], paper_value=pv,
                    rel_band=band if metric in asserted else None,
                    note="" if metric in asserted else "reported (band not asserted)",
                )
                rows.append(row.judge() if metric in asserted else row)

    # strict trends
    for kappa in KAPPAS:
        es = [results[(n, kappa)]["e"] for n in THICKNESSES]
        rows.append(ReportRow(
            "table2", f"trend-k{kappa:g}", {"kappa": kappa},
            "e_increases_thin_to_thick", float(es[0] < es[1] < es[2]), 1.0, abs_band=0.0,
        ).judge())
    es100 = max(results[(n, 100.0)]["e_s"] for n in THICKNESSES)
    rows.append(ReportRow(
        "table2", "surface-error-bound-k100", {}, "max_e_s", es100, 3e-3,
        note="criterion: e_s at kappa=100 stays below 3e-3 at all thicknesses",
    ))
    rows[-1].passed = es100 <= 3e-3
    return rows


# ---------------------------------------------------------------------------
# Table 3: contact angles
# ---------------------------------------------------------------------------

TABLE3_AC = {  # zeta -> {delta_phi: (mean_cos, angle_deg)}
    0.75: {1.0607: (0.5050, 59.67), 1.4142: (0.5048, 59.68), 1.7678: (0.4965, 60.23),
           2.1213: (0.5001, 59.99), 2.8284: (0.5004, 59.97)},
    1.00: {1.0607: (0.4900, 60.66), 1.4142: (0.5039, 59.74), 1.7678: (0.4966, 60.22),
           2.1213: (0.4982, 60.12), 2.8284: (0.4956, 60.29)},
    1.50: {1.0607: (0.4865, 60.89), 1.4142: (0.4962, 60.25), 1.7678: (0.4927, 60.48),
           2.1213: (0.4938, 60.41), 2.8284: (0.4927, 60.48)},
    2.00: {1.0607: (0.4886, 60.75), 1.4142: (0.4918, 60.54), 1.7678: (0.4883, 60.77),
           2.1213: (0.4901, 60.65), 2.8284: (0.4901, 60.65)},
    4.00: {1.0607: (0.4825, 61.15), 1.4142: (0.4782, 61.43), 1.7678: (0.4783, 61.43),
           2.1213: (0.4795, 61.35), 2.8284: (0.4790, 61.38)},
}
TABLE3_CH = {
    0.75: {1.0607: (-0.4831, 118.89), 1.4142: (-0.5003, 120.02), 1.7678: (-0.4937, 119.59),
           2.1213: (-0.4979, 119.86), 2.8284: (-0.4931, 119.54)},
    1.00: {1.0607: (-0.4923, 119.49), 1.4142: (-0.4926, 119.51), 1.7678: (-0.4897, 119.32),
           2.1213: (-0.4929, 119.53), 2.8284: (-0.4881, 119.21)},
    1.50: {1.0607: (-0.4841, 118.95), 1.4142: (-0.4871, 119.15), 1.7678: (-0.4868, 119.13),
           2.1213: (-0.4890, 119.28), 2.8284: (-0.4867, 119.13)},
    2.00: {1.0607: (-0.4639, 117.64), 1.4142: (-0.4857, 119.06), 1.7678: (-0.4861, 119.09),
           2.1213: (-0.4862, 119.09), 2.8284: (-0.4853, 119.13)},
    4.00: {1.0607: (-0.4372, 115.93), 1.4142: (-0.4713, 118.12), 1.7678: (-0.4752, 118.37),
           2.1213: (-0.4745, 118.33), 2.8284: (-0.4752, 118.37)},
}
TABLE3_CONS = {
    0.75: {1.0607: 0.9929, 1.4142: 0.9972, 1.7678: 0.9979, 2.1213: 0.9982, 2.8284: 0.9986},
    1.00: {1.0607: 0.9930, 1.4142: 0.9973, 1.7678: 0.9979, 2.1213: 0.9982, 2.8284: 0.9986},
    1.50: {1.0607: 0.9933, 1.4142: 0.9974, 1.7678: 0.9980, 2.1213: 0.9983, 2.8284: 0.9987},
    2.00: {1.0607: 0.9976, 1.4142: 0.9991, 1.7678: 0.9993, 2.1213: 0.9994, 2.8284: 0.9996},
    4.00: {1.0607: 0.9982, 1.4142: 0.9993, 1.7678: 0.9995, 2.1213: 0.9996, 2.8284: 0.9997},
}
REDUCED_ZETAS = [0.75, 2.0, 4.0]
REDUCED_DPHIS = [1.4142, 2.1213]
ANGLE_BAND_DEG = 1.0
IMPOSED_BAND_DEG = 2.0
CONS_BAND = 0.003


def run_table3_suite(
    zetas=None,
    dphis=None,
    t_max_ac: float = 3000.0,
    t_max_ch: float = 2500.0,
    slope_tol: float = 1e-8,
) -> list[ReportRow]:
    """Contact-angle cells on the (reduced by default) parameter grid."""
    zetas = REDUCED_ZETAS if zetas is None else zetas
    dphis = REDUCED_DPHIS if dphis is None else dphis
    rows: list[ReportRow] = []
    for zeta in zetas:
        for dphi in dphis:
            r = ca.run_contact_angle_cell("ac", 60.0, zeta, dphi,
                                          t_max=t_max_ac, slope_tol=slope_tol)
            pa = TABLE3_AC[zeta][dphi][1]
            params = {"zeta": zeta, "delta_phi": dphi}
            assertable = dphi >= 1.4142
            rows.append(ReportRow(
                "table3", f"ac-z{zeta:g}-d{dphi:g}", params, "angle_deg",
                r["angle_deg"], pa, abs_band=ANGLE_BAND_DEG if assertable else None,
            ).judge())
            rows.append(ReportRow(
                "table3", f"ac-z{zeta:g}-d{dphi:g}", params, "angle_vs_imposed",
                r["angle_deg"], 60.0, abs_band=IMPOSED_BAND_DEG if assertable else None,
            ).judge())
            rows.append(ReportRow(
                "table3", f"ac-z{zeta:g}-d{dphi:g}", params, "mean_cos",
                r["mean_cos"], TABLE3_AC[zeta][dphi][0],
                note=f"t_end={r['t_end']:.0f} arc_rms={r['arc_rms']:.3f}",
            ))

            r = ca.run_contact_angle_cell("ch", 120.0, zeta, dphi,
                                          t_max=t_max_ch, slope_tol=slope_tol)
            pc = TABLE3_CH[zeta][dphi][1]
            # conserved dynamics approach the equilibrium arc on a much longer
            # horizon than the runtime budget allows, so the angle is reported
            # with its convergence state instead of being band-asserted
            rows.append(ReportRow(
                "table3", f"ch-z{zeta:g}-d{dphi:g}", params, "angle_deg",
                r["angle_deg"], pc,
                note=f"still approaching equilibrium at t={r['t_end']:.0f} "
                     f"(slope {r['slope']:.1e})",
            ))
            rows.append(ReportRow(
                "table3", f"ch-z{zeta:g}-d{dphi:g}", params, "conservation",
                r["conservation"], TABLE3_CONS[zeta][dphi], abs_band=CONS_BAND,
            ).judge())
    return rows


def run_all(profile: str = "acceptance") -> dict[str, list[ReportRow]]:
    """Every suite; 'acceptance' uses the reduced Table 3 grid."""
    suites = {
        "table1": run_table1_suite(),
        "appendix_a": run_appendix_a_suite(),
        "table2": run_table2_suite(),
    }
    if profile == "full":
        suites["table3"] = run_table3_suite(
            zetas=list(TABLE3_AC), dphis=[1.0607, 1.4142, 1.7678, 2.1213, 2.8284]
        )
    else:
        suites["table3"] = run_table3_suite()
    return suites
