"""Virtual compact-tension fatigue experiments and their post-processing."""

from __future__ import annotations

import csv
import logging
import math
import os
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .laws import MPA_SQRT_MM_TO_MPA_SQRT_M
from .mesh import Mesh, write_vtk

log = logging.getLogger(__name__)

# Polynomial coefficients of the CT compliance function.  The ASTM standard
# uses 4.64 as the second entry; "alt446" swaps in 4.46.
COEFFICIENT_SETS = {
    "astm": (0.886, 4.64, -13.32, 14.72, -5.6),
    "alt446": (0.886, 4.46, -13.32, 14.72, -5.6),
}

CSV_COLUMNS = ("run_id", "p_H2_MPa", "R", "f_Hz", "N", "t_s", "a_mm",
               "deltaK_MPa_sqrtm", "dadN_mm_per_cycle", "C_tip_wppm")


class ValidityWarning(UserWarning):
    pass


def ct_geometry_factor(a_over_W, coefficient_set: str = "astm"):
    """Dimensionless ``F(a/W)`` with ``K = P F / (B sqrt(W))``."""
    try:
        c = COEFFICIENT_SETS[coefficient_set]
    except KeyError:
        raise ValueError(f"unknown coefficient set {coefficient_set!r}") from None
    x = np.asarray(a_over_W, dtype=float)
    poly = c[0] + c[1] * x + c[2] * x**2 + c[3] * x**3 + c[4] * x**4
    out = (2.0 + x) * poly / (1.0 - x) ** 1.5
    return float(out) if out.ndim == 0 else out


def compute_delta_K(dP, a, W, B, coefficient_set: str = "astm"):
    """Stress intensity range [MPa sqrt(m)] for load range ``dP`` [N].

    Outside ``0.2 <= a/W <= 0.8`` a :class:`ValidityWarning` is issued.
    """
    x = np.asarray(a, dtype=float) / W
    if np.any(x < 0.2 - 1e-12) or np.any(x > 0.8 + 1e-12):
        warnings.warn(f"a/W outside the validity range [0.2, 0.8]: {x}", ValidityWarning,
                      stacklevel=2)
    dK = np.asarray(dP, dtype=float) * ct_geometry_factor(x, coefficient_set) / (B * math.sqrt(W))
    out = dK * MPA_SQRT_MM_TO_MPA_SQRT_M
    return float(out) if np.ndim(out) == 0 else out


def load_range_for_delta_K(dK, a, W, B, coefficient_set: str = "astm") -> float:
    """Inverse of :func:`compute_delta_K` in the load range."""
    F = ct_geometry_factor(a / W, coefficient_set)
    return float(dK / MPA_SQRT_MM_TO_MPA_SQRT_M * B * math.sqrt(W) / F)


def measure_crack_length(phi: np.ndarray, mesh: Mesh, a0: Optional[float] = None,
                         threshold: float = 0.5) -> float:
    """Crack length from the farthest ``phi >= 0.5`` point on the symmetry line.

    The crossing beyond the farthest node at or above the threshold is
    found by linear interpolation to the next node.
    """
    if a0 is None:
        a0 = mesh.meta["a0"]
    nodes = mesh.nodes_in("SYMMETRY")
    x = mesh.nodes[nodes, 0]
    order = np.argsort(x)
    x, p = x[order], np.asarray(phi)[nodes[order]]
    keep = x >= a0 - 1e-9
    x, p = x[keep], p[keep]
    above = np.flatnonzero(p >= threshold)
    if above.size == 0:
        return float(a0)
    i = int(above[-1])
    if np.any(np.diff(above) != 1):
        warnings.warn("phase field above threshold is not contiguous ahead of the notch",
                      RuntimeWarning, stacklevel=2)
    if i + 1 < len(x):
        s = (p[i] - threshold) / (p[i] - p[i + 1])
        tip = x[i] + s * (x[i + 1] - x[i])
    else:
        tip = x[i]
    return float(a0 + (tip - x[0]))


def tip_concentration(C: np.ndarray, mesh: Mesh, a: float) -> float:
    nodes = mesh.nodes_in("SYMMETRY")
    x = mesh.nodes[nodes, 0]
    return float(np.interp(a, np.sort(x), np.asarray(C)[nodes[np.argsort(x)]]))


@dataclass
class CrackGrowthRecord:
    """Logged crack-length crossings of one experiment.

    Row ``i`` holds the state when the crack first reached the ``i``-th
    logging level; ``dadN[i]`` is the secant rate over ``(i-1, i]`` and is
    NaN for the first row.  ``dK_mid`` is the stress intensity range at
    the interval midpoint, used for fitting.
    """

    run_id: str = "run"
    p_H2: float = 0.0
    R: float = 0.1
    f: float = 1.0
    coefficient_set: str = "astm"
    N: list = field(default_factory=list)
    t: list = field(default_factory=list)
    a: list = field(default_factory=list)
    dK: list = field(default_factory=list)
    dP: list = field(default_factory=list)
    C_tip: list = field(default_factory=list)
    dadN: list = field(default_factory=list)
    dK_mid: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    status: str = "ok"

    def log(self, N, t, a, dK, dP, C_tip=0.0):
        if self.a and a < self.a[-1] - 1e-12:
            raise ValueError("crack length must be non-decreasing")
        self.N.append(int(N))
        self.t.append(float(t))
        self.a.append(float(a))
        self.dK.append(float(dK))
        self.dP.append(float(dP))
        self.C_tip.append(float(C_tip))

    def __len__(self):
        return len(self.a)

    def rows(self) -> list[dict]:
        out = []
        for i in range(len(self)):
            d = self.dadN[i] if i < len(self.dadN) else math.nan
            out.append({
                "run_id": self.run_id, "p_H2_MPa": self.p_H2, "R": self.R, "f_Hz": self.f,
                "N": self.N[i], "t_s": self.t[i], "a_mm": self.a[i],
                "deltaK_MPa_sqrtm": self.dK[i], "dadN_mm_per_cycle": d,
                "C_tip_wppm": self.C_tip[i],
            })
        return out

    def paris_points(self):
        """``(dK_mid, dadN)`` arrays of the finite secant points."""
        d = np.asarray(self.dadN[1:], dtype=float)
        k = np.asarray(self.dK_mid[1:], dtype=float)
        ok = np.isfinite(d) & np.isfinite(k) & (d > 0)
        return k[ok], d[ok]


def extract_dadN(record: CrackGrowthRecord, W: Optional[float] = None,
                 B: Optional[float] = None) -> CrackGrowthRecord:
    """Fill secant rates between consecutive logged crack lengths.

    With ``W`` and ``B`` the midpoint stress intensity uses the mean load
    range of the interval; otherwise it is the mean of the two end values.
    """
    n = len(record)
    dadN = [math.nan] * n
    mid = [math.nan] * n
    for i in range(1, n):
        da = record.a[i] - record.a[i - 1]
        dN = record.N[i] - record.N[i - 1]
        if dN <= 0 or da <= 0:
            continue
        dadN[i] = da / dN
        if W is not None and B is not None:
            am = 0.5 * (record.a[i] + record.a[i - 1])
            dPm = 0.5 * (record.dP[i] + record.dP[i - 1])
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ValidityWarning)
                mid[i] = compute_delta_K(dPm, am, W, B, record.coefficient_set)
        else:
            mid[i] = 0.5 * (record.dK[i] + record.dK[i - 1])
    record.dadN = dadN
    record.dK_mid = mid
    return record


def resample_at_levels(N: Sequence[int], a: Sequence[float], a0: float, da_log: float):
    """Indices of the first samples reaching ``a0 + k da_log`` (k = 0, 1, ...)."""
    a = np.asarray(a, dtype=float)
    idx, level = [], a0
    for i, ai in enumerate(a):
        if ai >= level - 1e-12:
            idx.append(i)
            level = a0 + da_log * (math.floor((ai - a0) / da_log + 1e-9) + 1)
    return idx


def growth_rate(record: CrackGrowthRecord, a_lo: float, a_hi: float) -> float:
    """Secant ``da/dN`` between the first logged crossings of ``a_lo`` and ``a_hi``.

    NaN when the crack did not reach ``a_hi``.
    """
    a = np.asarray(record.a, dtype=float)
    N = np.asarray(record.N, dtype=float)
    i = np.flatnonzero(a >= a_lo - 1e-12)
    j = np.flatnonzero(a >= a_hi - 1e-12)
    if i.size == 0 or j.size == 0 or N[j[0]] <= N[i[0]]:
        return math.nan
    return float((a[j[0]] - a[i[0]]) / (N[j[0]] - N[i[0]]))


def paris_fit(dK, dadN, window: Optional[tuple] = None):
    """Least squares of ``log10(da/dN)`` on ``log10(dK)``; returns ``(C, m)``."""
    dK = np.asarray(dK, dtype=float)
    dadN = np.asarray(dadN, dtype=float)
    ok = np.isfinite(dK) & np.isfinite(dadN) & (dK > 0) & (dadN > 0)
    if window is not None:
        lo, hi = window
        ok &= (dK >= lo) & (dK <= hi)
    if ok.sum() < 2 or np.ptp(np.log10(dK[ok])) == 0:
        raise ValueError("need at least two distinct points to fit")
    m, logC = np.polyfit(np.log10(dK[ok]), np.log10(dadN[ok]), 1)
    return float(10.0**logC), float(m)


# -- CSV ----------------------------------------------------------------------
def write_records_csv(path, records: Iterable[CrackGrowthRecord], header_note: Optional[str] = None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        if header_note:
            fh.write(f"# {header_note}\n")
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for rec in records:
            for row in rec.rows():
                w.writerow({k: _fmt(v) for k, v in row.items()})


def _fmt(v):
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return v


def read_records_csv(path) -> list[CrackGrowthRecord]:
    recs: dict[str, CrackGrowthRecord] = {}
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    for row in csv.DictReader(lines):
        rid = row["run_id"]
        rec = recs.get(rid)
        if rec is None:
            rec = recs[rid] = CrackGrowthRecord(rid, float(row["p_H2_MPa"]), float(row["R"]),
                                                float(row["f_Hz"]))
        rec.log(int(row["N"]), float(row["t_s"]), float(row["a_mm"]),
                float(row["deltaK_MPa_sqrtm"]), math.nan, float(row["C_tip_wppm"]))
        rec.dadN.append(float(row["dadN_mm_per_cycle"]))
    for rec in recs.values():
        rec.dK_mid = [math.nan] + [0.5 * (rec.dK[i] + rec.dK[i - 1]) for i in range(1, len(rec))]
    return list(recs.values())


# -- running ------------------------------------------------------------------
def build_simulation(config):
    """Mesh and :class:`~h2fatigue.driver.Simulation` for a resolved config."""
    from .driver import Simulation
    from .mesh import generate_ct_half_mesh

    mat = config.material_params()
    geo = config.geometry.resolved(mat.ell)
    mesh = generate_ct_half_mesh(geo, mat.ell)
    sim = Simulation(mesh, mat, config.fatigue, config.hydrogen, config.load_program(),
                     config.solver_options())
    return sim


def run_experiment(config, out_dir=None, sim=None, observer=None) -> CrackGrowthRecord:
    """Run one virtual experiment.

    ``observer(sim, state)`` is called after every cycle (used by checks
    that must hold continuously).
    """
    from .driver import SimulationAborted
    from .mechanics import SpecimenSeparated

    if sim is None:
        sim = build_simulation(config)
    mesh = sim.mesh
    W, B, a0 = mesh.meta["W"], mesh.meta["B"], mesh.meta["a0"]
    load, out = config.load, config.output
    prog = sim.program
    cs = config.solver.coefficient_set
    rec = CrackGrowthRecord(out.run_id, prog.p_H2, prog.R, prog.f, cs)
    rec.notes.append(f"coefficient_set={cs}")

    a_stop = min(W * load.max_a_over_W, a0 + load.max_crack_extension)

    def load_range(a):
        if load.delta_K is not None:
            return load_range_for_delta_K(load.delta_K, a, W, B, cs)
        return prog.peak * (1.0 - prog.R)

    def dK_of(dP, a):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ValidityWarning)
            v = compute_delta_K(dP, a, W, B, cs)
        if caught and "a/W outside validity range" not in rec.notes:
            rec.notes.append("a/W outside validity range")
        return v

    state = sim.initial_state()
    a = measure_crack_length(state.phi, mesh, a0)
    dP = load_range(a)
    rec.log(state.N, state.t, a, dK_of(dP, a), dP, tip_concentration(state.hydrogen.C, mesh, a))
    next_level = a0 + out.da_log
    snap = out.snapshot_every
    out_path = Path(out_dir) if out_dir is not None else None
    try:
        while state.N < prog.max_cycles and a < a_stop:
            dP = load_range(a)
            state = sim.run_cycle(state, dP / (1.0 - prog.R))
            if observer is not None:
                observer(sim, state)
            a_new = measure_crack_length(state.phi, mesh, a0)
            a = max(a, a_new)
            if a >= next_level - 1e-12:
                rec.log(state.N, state.t, a, dK_of(load_range(a), a), load_range(a),
                        tip_concentration(state.hydrogen.C, mesh, a))
                next_level = a0 + out.da_log * (math.floor((a - a0) / out.da_log + 1e-9) + 1)
            if snap and out_path is not None and state.N % snap == 0:
                write_vtk(out_path / f"{out.run_id}_N{state.N:07d}.vtk", mesh,
                          {"phi": state.phi, "C": state.hydrogen.C},
                          None)
    except SpecimenSeparated as exc:
        rec.status = "separated"
        rec.notes.append(str(exc))
    except SimulationAborted as exc:
        rec.status = "aborted"
        rec.notes.append(str(exc))
    extract_dadN(rec, W, B)
    rec.final_state = state  # type: ignore[attr-defined]
    return rec


def _worker(args):
    config, out_dir = args
    return run_experiment(config, out_dir)


def worker_count(requested: Optional[int] = None) -> int:
    cap = os.environ.get("H2FATIGUE_WORKERS")
    n = requested or (os.cpu_count() or 1)
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def run_sweep(configs: Sequence, out_dir=None, workers: Optional[int] = None) -> list[CrackGrowthRecord]:
    """Run independent experiments, in parallel processes when allowed."""
    n = min(worker_count(workers), len(configs))
    jobs = [(c, out_dir) for c in configs]
    if n <= 1:
        return [_safe(j) for j in jobs]
    from concurrent.futures import ProcessPoolExecutor
    with ProcessPoolExecutor(max_workers=n) as ex:
        return list(ex.map(_safe, jobs))


def _safe(job):
    config, _ = job
    try:
        rec = _worker(job)
        if hasattr(rec, "final_state"):
            del rec.final_state
        return rec
    except Exception as exc:  # keep the sweep going, flag the run
        log.error("run %s failed: %s", config.output.run_id, exc)
        rec = CrackGrowthRecord(config.output.run_id, config.load.p_H2, config.load.R,
                                config.load.f, config.solver.coefficient_set)
        rec.status = "aborted"
        rec.notes.append(str(exc))
        return rec
