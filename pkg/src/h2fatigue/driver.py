"""Staggered cycle-by-cycle time integration of the coupled problem."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .fem import ElementGeometry, SolverError
from .mechanics import Loading, MechanicsSolver, MechState, SpecimenSeparated
from .mesh import Mesh
from .params import FatigueParams, HydrogenParams, MaterialParams
from .phasefield import (FatigueHistory, IrreversibilityHistory, PhaseFieldSolver,
                         accumulate_fatigue, update_alpha)
from .transport import HydrogenState, TransportOptions, TransportSolver, precharge

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = "h2fatigue-checkpoint-1"
WAVEFORMS = ("sinusoidal", "triangular")


class SimulationAborted(RuntimeError):
    def __init__(self, message: str, state: "SimState", dump: Optional[Path] = None):
        super().__init__(message if dump is None else f"{message} (state dumped to {dump})")
        self.state = state
        self.dump = dump


@dataclass(frozen=True)
class LoadProgram:
    """Cyclic load definition.  Give ``P_max`` or ``delta_P`` [N]."""

    P_max: Optional[float] = None
    delta_P: Optional[float] = None
    R: float = 0.1
    f: float = 1.0
    waveform: str = "sinusoidal"
    increments_per_cycle: int = 8
    max_cycles: int = 10_000
    soak_duration: float = 86_400.0
    precharged: bool = False
    p_H2: float = 0.0
    cycle_jump: int = 1

    def __post_init__(self):
        if not 0.0 <= self.R < 1.0:
            raise ValueError("load ratio R must lie in [0, 1)")
        if not self.f > 0:
            raise ValueError("frequency must be positive")
        if self.waveform not in WAVEFORMS:
            raise ValueError(f"waveform must be one of {WAVEFORMS}")
        if int(self.increments_per_cycle) != self.increments_per_cycle or self.increments_per_cycle < 4:
            raise ValueError("increments_per_cycle must be an integer >= 4")
        if int(self.cycle_jump) != self.cycle_jump or self.cycle_jump < 1:
            raise ValueError("cycle_jump must be an integer >= 1")
        if self.max_cycles < 0:
            raise ValueError("max_cycles must be non-negative")
        if self.soak_duration < 0:
            raise ValueError("soak_duration must be non-negative")
        if self.p_H2 < 0:
            raise ValueError("p_H2 must be non-negative")
        if self.P_max is not None and self.delta_P is not None:
            if not math.isclose(self.P_max * (1 - self.R), self.delta_P, rel_tol=1e-12):
                raise ValueError("P_max and delta_P are inconsistent")
        for name in ("P_max", "delta_P"):
            v = getattr(self, name)
            if v is not None and not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and non-negative")

    @property
    def peak(self) -> float:
        if self.P_max is not None:
            return self.P_max
        if self.delta_P is not None:
            return self.delta_P / (1.0 - self.R)
        return 0.0

    @property
    def dt(self) -> float:
        return 1.0 / (self.f * self.increments_per_cycle)

    def load(self, tau, P_max: Optional[float] = None):
        """Load at cycle fraction ``tau`` in [0, 1]; P(0) = P(1) = P_min."""
        Pmax = self.peak if P_max is None else P_max
        Pmin = self.R * Pmax
        tau = np.asarray(tau, dtype=float)
        if self.waveform == "sinusoidal":
            P = 0.5 * (Pmax + Pmin) - 0.5 * (Pmax - Pmin) * np.cos(2 * np.pi * tau)
        else:
            P = Pmin + (Pmax - Pmin) * (1.0 - np.abs(1.0 - 2.0 * (tau % 1.0)))
        return float(P) if P.ndim == 0 else P


@dataclass(frozen=True)
class SolverOptions:
    tol_stagger: float = math.inf
    max_stagger: int = 10
    damaged_sigma_h: bool = True
    alpha_degraded: bool = True
    distributed_pin: bool = False
    transport: TransportOptions = field(default_factory=TransportOptions)
    dump_dir: Optional[str] = None


@dataclass(frozen=True)
class SimState:
    phi: np.ndarray
    hydrogen: HydrogenState
    fatigue: FatigueHistory
    irr: IrreversibilityHistory
    t: float = 0.0
    N: int = 0
    mech: Optional[MechState] = None
    passes: int = 0  # staggered passes used by the last increment


class Simulation:
    """Owns the field solvers for one mesh and parameter set."""

    def __init__(self, mesh: Mesh, material: MaterialParams = MaterialParams(),
                 fatigue: FatigueParams = FatigueParams(),
                 hydrogen: HydrogenParams = HydrogenParams(),
                 program: LoadProgram = LoadProgram(),
                 options: SolverOptions = SolverOptions(),
                 loading: Optional[Loading] = None):
        self.mesh = mesh
        self.material = material
        self.fatigue_params = fatigue.resolved(material)
        self.hydrogen_params = hydrogen
        self.program = program
        self.options = options
        self.geom = ElementGeometry(mesh)
        if loading is None:
            loading = Loading.compact_tension(mesh.meta["B"], options.distributed_pin)
        self.mech = MechanicsSolver(mesh, material, loading, self.geom,
                                    damaged_sigma_h=options.damaged_sigma_h)
        self.pf = PhaseFieldSolver(mesh, material, self.geom)
        self.transport = TransportSolver(mesh, hydrogen, material.ell, self.geom,
                                         options.transport)
        self.C_env = hydrogen.C_env(program.p_H2)
        self.with_hydrogen = self.C_env > 0.0
        self.n_transport_steps = 0

    # -- setup -------------------------------------------------------------
    def initial_state(self) -> SimState:
        shape = self.geom.shape
        h = HydrogenState.empty(self.mesh.n_nodes, self.C_env)
        if self.with_hydrogen:
            if self.program.precharged:
                h = precharge(h)
            else:
                h = self.transport.soak(h, self.program.soak_duration)
        return SimState(np.zeros(self.mesh.n_nodes), h, FatigueHistory.zeros(shape),
                        IrreversibilityHistory.zeros(shape))

    # -- one increment -----------------------------------------------------
    def _toughness(self, state: SimState, C: np.ndarray) -> np.ndarray:
        hp = self.hydrogen_params if self.with_hydrogen else None
        return self.pf.toughness_factor(C, state.fatigue, self.fatigue_params, hp)

    def staggered_increment(self, state: SimState, P: float, dt: float) -> SimState:
        """u -> phi -> C, optionally repeated until the phase field settles."""
        opts = self.options
        cap = 1 if math.isinf(opts.tol_stagger) else max(1, opts.max_stagger)
        phi_in = state.phi
        phi = phi_in
        C_old = state.hydrogen
        for it in range(1, cap + 1):
            mech = self.mech.solve(phi, P)
            irr = state.irr.update(mech.psi0)
            alpha = update_alpha(self.geom.interpolate(phi), mech.psi0, opts.alpha_degraded)
            fat = state.fatigue.observe(alpha)
            C_for_phi = C_old.C if it == 1 else hyd.C
            f = self._toughness(replace(state, fatigue=fat), C_for_phi)
            phi_new = self.pf.solve(irr.H, f, phi_in)
            hyd = C_old
            if self.with_hydrogen:
                hyd = self.transport.step(C_old, mech.sigma_h, dt, phi_new)
                self.n_transport_steps += 1
            change = float(np.abs(phi_new - phi).max(initial=0.0))
            phi = phi_new
            if change < opts.tol_stagger:
                break
        return replace(state, phi=phi, hydrogen=hyd, fatigue=fat, irr=irr,
                       t=state.t + dt, mech=mech, passes=it)

    def _guarded_increment(self, state: SimState, tau: float, dtau: float,
                           P_max: float) -> SimState:
        prog = self.program
        dt = dtau / prog.f
        try:
            return self.staggered_increment(state, prog.load(tau, P_max), dt)
        except SpecimenSeparated:
            raise
        except (SolverError, FloatingPointError, np.linalg.LinAlgError) as first:
            log.warning("increment at N=%d tau=%.3f failed (%s); halving", state.N, tau, first)
            try:
                s = self.staggered_increment(state, prog.load(tau - 0.5 * dtau, P_max), 0.5 * dt)
                return self.staggered_increment(s, prog.load(tau, P_max), 0.5 * dt)
            except SpecimenSeparated:
                raise
            except Exception as second:
                dump = self._dump(state)
                raise SimulationAborted(f"increment failed twice at N={state.N}: {second}",
                                        state, dump) from second

    def _dump(self, state: SimState) -> Optional[Path]:
        if self.options.dump_dir is None:
            return None
        path = Path(self.options.dump_dir) / f"abort_N{state.N}.npz"
        path.parent.mkdir(parents=True, exist_ok=True)
        save_checkpoint(path, state)
        return path

    # -- one cycle ---------------------------------------------------------
    def run_cycle(self, state: SimState, P_max: Optional[float] = None) -> SimState:
        prog = self.program
        if P_max is None:
            P_max = prog.peak
        n = prog.increments_per_cycle
        state = replace(state, fatigue=state.fatigue.start_cycle())
        t0 = state.t
        for k in range(1, n + 1):
            state = self._guarded_increment(state, k / n, 1.0 / n, P_max)
        J = prog.cycle_jump
        fat = accumulate_fatigue(state.fatigue, prog.R, self.fatigue_params, prog.p_H2, J)
        hyd = state.hydrogen
        if J > 1 and self.with_hydrogen:
            sigma_h = state.mech.sigma_h if state.mech is not None else None
            nsub = min(J - 1, n)
            dt = (J - 1) / (prog.f * nsub)
            for _ in range(nsub):
                hyd = self.transport.step(hyd, sigma_h, dt, state.phi)
                self.n_transport_steps += 1
        return replace(state, fatigue=fat, hydrogen=hyd, t=t0 + J / prog.f, N=state.N + J)


def run_cycle(sim: Simulation, state: SimState, P_max: Optional[float] = None) -> SimState:
    return sim.run_cycle(state, P_max)


def staggered_increment(sim: Simulation, state: SimState, P: float,
                        dt: Optional[float] = None) -> SimState:
    return sim.staggered_increment(state, P, sim.program.dt if dt is None else dt)


# -- checkpoint / restart ---------------------------------------------------
def save_checkpoint(path, state: SimState) -> None:
    """Write the restartable part of the state to an ``.npz`` container."""
    np.savez(path, version=np.array(CHECKPOINT_VERSION), phi=state.phi,
             C=state.hydrogen.C, C_env=np.array(state.hydrogen.C_env),
             exposed=state.hydrogen.exposed, alpha_bar=state.fatigue.alpha_bar,
             alpha_max=state.fatigue.alpha_max, hist_max=state.fatigue.hist_max,
             gate=state.fatigue.gate, H=state.irr.H, t=np.array(state.t),
             N=np.array(state.N))


def load_checkpoint(path) -> SimState:
    with np.load(path, allow_pickle=False) as d:
        version = str(d["version"])
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version!r}")
        return SimState(
            phi=d["phi"].copy(),
            hydrogen=HydrogenState(d["C"].copy(), float(d["C_env"]), d["exposed"].copy()),
            fatigue=FatigueHistory(d["alpha_bar"].copy(), d["alpha_max"].copy(),
                                   d["hist_max"].copy(), d["gate"].copy()),
            irr=IrreversibilityHistory(d["H"].copy()),
            t=float(d["t"]), N=int(d["N"]))
