"""Configuration-driven experiment runs, their file outputs, and check mode.

Stream splitting: every run derives all of its randomness from the single
config seed through RngStream.child with fixed purpose indices, documented at
each use. Reruns with an equal config therefore produce byte-identical CSV and
SVG artifacts (the manifest carries wall-clock timestamps and is exempt).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .. import __version__
from ..attention import AttentionSpec, landscape_constants
from ..controls import ControlPath, FeatureMap
from ..errors import NumericalError
from ..losses import AlignLoss, BowLoss, sample_bow_candidates
from ..meanfield import (
    CircleDensity,
    CircleGrid,
    backward_costate,
    energy_and_gap,
    evolve_density,
    gap_series,
    gibbs_residual,
    hessian_operator,
    linear_response,
    one_gd_path,
    rayleigh_rate,
    stationary_gibbs,
    visibility_factor,
    weighted_laplacian,
)
from ..particles import SimConfig, Trajectory, UnitVectorEnsemble, simulate
from ..serialize import (
    read_csv,
    write_angular_csv,
    write_energy_csv,
    write_grid_path_csv,
    write_history_csv,
    write_rate_csv,
)
from ..sphere import RngStream, sample_cap_init, signed_angles
from ..svgplot import line_plot_svg
from ..training import TrainConfig, train
from .config import ExperimentConfig
from .fitting import FitResult, NoDetectableLiftError, fit_terminal_rate, rank_correlation


class CheckFailure(AssertionError):
    """An acceptance-style threshold failed in --check mode."""


@dataclass
class RunManifest:
    config_hash: str
    seed: int
    version: str
    started_at: str
    finished_at: str | None = None
    files: list[str] = field(default_factory=list)
    path: Path | None = None

    @classmethod
    def start(cls, cfg: ExperimentConfig, out_dir: Path) -> "RunManifest":
        out_dir.mkdir(parents=True, exist_ok=True)
        man = cls(
            config_hash=cfg.config_hash(),
            seed=cfg.seed,
            version=__version__,
            started_at=datetime.now(timezone.utc).isoformat(),
            path=out_dir / "manifest.json",
        )
        man._write()
        return man

    def _write(self) -> None:
        payload = {k: v for k, v in asdict(self).items() if k != "path"}
        self.path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")

    def add(self, path: Path) -> Path:
        self.files.append(path.name)
        return path

    def finalize(self) -> None:
        for name in self.files:
            if not (self.path.parent / name).exists():
                raise FileNotFoundError(f"manifest lists missing file {name}")
        self.finished_at = datetime.now(timezone.utc).isoformat()
        self._write()


def _attention(cfg: ExperimentConfig, lambda2: float | None = None) -> AttentionSpec:
    diag = list(cfg.model.a_diag)
    if lambda2 is not None:
        diag[1] = lambda2
    return AttentionSpec.from_matrix(np.diag(diag))


def _make_loss(cfg: ExperimentConfig, root: RngStream, kappa: float | None = None):
    if cfg.loss.kind == "align":
        return AlignLoss(np.asarray(cfg.loss.u_tar, dtype=float))
    if cfg.loss.kind == "bow":
        # candidates drawn from stream child 5 of the run root
        cands = sample_bow_candidates(
            kappa if kappa is not None else cfg.loss.kappa_cand,
            vocab=cfg.loss.vocab, rng=root.child(5),
            mean=np.asarray(cfg.loss.cand_mean, dtype=float))
        return BowLoss.uniform_target(cands)
    raise ValueError(f"unknown loss kind {cfg.loss.kind!r}")


def circular_mean_direction(points: np.ndarray) -> np.ndarray | None:
    """Normalized mean of unit vectors; None when the resultant is degenerate."""
    v = np.mean(points.reshape(-1, points.shape[-1]), axis=0)
    n = np.linalg.norm(v)
    if n < 1e-12:
        return None
    return v / n


def angular_dispersion(angles: np.ndarray) -> float:
    """Circular standard deviation sqrt(-2 log R) of a sample of angles."""
    r = float(np.hypot(np.mean(np.cos(angles)), np.mean(np.sin(angles))))
    r = min(max(r, 1e-300), 1.0)
    return float(np.sqrt(max(-2.0 * np.log(r), 0.0)))


@dataclass
class RunProfile:
    """Turnpike diagnostics of one particle run."""

    name: str
    reference: np.ndarray
    angles: np.ndarray             # (records, N)
    gap: np.ndarray                # (records,)
    interior_mask: np.ndarray
    interior_gap_median: float
    terminal_lift_ratio: float
    interior_dispersion: float
    terminal_dispersion: float

    def report(self) -> dict:
        return {
            "name": self.name,
            "reference": self.reference.tolist(),
            "interior_gap_median": self.interior_gap_median,
            "terminal_lift_ratio": self.terminal_lift_ratio,
            "interior_dispersion": self.interior_dispersion,
            "terminal_dispersion": self.terminal_dispersion,
        }


def profile_run(name: str, traj: Trajectory) -> RunProfile:
    times = traj.times
    T = float(times[-1])
    interior = (times >= T / 4) & (times <= 3 * T / 4)
    ref = circular_mean_direction(traj.states[interior])
    if ref is None:
        ref = np.array([1.0, 0.0])
    angles = np.stack([signed_angles(s, ref) for s in traj.states])
    energy = traj.total_energy
    gap = energy - np.min(energy)
    interior_median = float(np.median(gap[interior]))
    ratio = float(gap[-1] / max(interior_median, 1e-300))
    return RunProfile(
        name=name, reference=ref, angles=angles, gap=gap, interior_mask=interior,
        interior_gap_median=interior_median, terminal_lift_ratio=ratio,
        interior_dispersion=angular_dispersion(angles[interior].ravel()),
        terminal_dispersion=angular_dispersion(angles[-1]),
    )


def _particle_run(cfg: ExperimentConfig, A: AttentionSpec, loss, root: RngStream,
                  train_controls: bool, train_stream: int, sim_stream: int,
                  ) -> tuple[Trajectory, ControlPath, list[dict]]:
    m = cfg.model
    sigma = FeatureMap(d=m.d)
    init = UnitVectorEnsemble(sample_cap_init(m.init_cap_s, m.N, root.child(1), d=m.d))
    history: list[dict] = []
    if train_controls:
        tc = cfg.training
        train_cfg = TrainConfig(
            steps=tc.steps, learning_rate=tc.learning_rate, lambda_reg=tc.lambda_reg,
            resample_noise=tc.resample_noise,
            grad_clip=tc.grad_clip if tc.grad_clip > 0 else None)
        cfg_train = SimConfig(horizon=m.T, dt=m.dt, eps=m.eps_sim, seed=root.child(train_stream))
        result = train(init, loss, A, sigma, cfg_train, train_cfg, root.child(train_stream),
                       bin_width=tc.bin_width)
        if result.diverged:
            raise NumericalError("training objective diverged")
        controls = result.controls
        history = result.history
    else:
        K = int(round(m.T / cfg.training.bin_width))
        controls = ControlPath.zeros(K, cfg.training.bin_width, feature=sigma, d=m.d)
    sim_cfg = SimConfig(horizon=m.T, dt=m.dt, eps=m.eps_sim, seed=root.child(sim_stream),
                        record_stride=cfg.record_stride)
    traj = simulate(init, controls, A, sigma, sim_cfg)
    return traj, controls, history


def _emit_particle_files(out: Path, man: RunManifest, name: str, traj: Trajectory,
                         profile: RunProfile, history: list[dict],
                         controls: ControlPath | None) -> None:
    man.add(write_angular_csv(out / f"{name}_angular.csv", traj.times, profile.angles))
    man.add(write_energy_csv(out / f"{name}_energy.csv", traj.times, traj.interaction,
                             traj.entropy, traj.total_energy, gap=profile.gap))
    if history:
        man.add(write_history_csv(out / f"{name}_history.csv", history))
    if controls is not None and history:
        path = out / f"{name}_controls.json"
        path.write_text(controls.to_json() + "\n", encoding="utf-8")
        man.add(path)


def run_exp0(cfg: ExperimentConfig) -> RunManifest:
    """Three runs with the paper defaults: untrained, trained-align, trained-BoW."""
    out = Path(cfg.output_dir)
    man = RunManifest.start(cfg, out)
    root = RngStream(cfg.seed)
    A = _attention(cfg)
    align = AlignLoss(np.asarray(cfg.loss.u_tar, dtype=float))
    bow = BowLoss.uniform_target(sample_bow_candidates(
        cfg.loss.kappa_cand, vocab=cfg.loss.vocab, rng=root.child(5),
        mean=np.asarray(cfg.loss.cand_mean, dtype=float)))

    runs = [
        ("untrained", align, False, 2, 2),
        ("align", align, True, 3, 4),
        ("bow", bow, True, 6, 7),
    ]
    profiles: dict[str, RunProfile] = {}
    energies: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for name, loss, do_train, tstream, sstream in runs:
        traj, controls, history = _particle_run(cfg, A, loss, root, do_train, tstream, sstream)
        prof = profile_run(name, traj)
        profiles[name] = prof
        energies[name] = (traj.times, traj.total_energy)
        _emit_particle_files(out, man, name, traj, prof, history, controls)

    # normalized overlay: min -> 0, max -> 1 per run
    times = energies["untrained"][0]
    overlay_rows = []
    norm = {}
    for name in ("untrained", "align", "bow"):
        e = energies[name][1]
        span = np.max(e) - np.min(e)
        norm[name] = (e - np.min(e)) / (span if span > 0 else 1.0)
    for r, t in enumerate(times):
        overlay_rows.append((t, norm["untrained"][r], norm["align"][r], norm["bow"][r]))
    from ..serialize import write_csv
    man.add(write_csv(out / "energy_overlay.csv", ["t", "untrained", "align", "bow"], overlay_rows))

    report = {"runs": [profiles[n].report() for n in ("untrained", "align", "bow")]}
    rpath = out / "turnpike_report.json"
    rpath.write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    man.add(rpath)
    emit_svg_plots(man)
    man.finalize()
    return man


def grid_escape_profile(A: AttentionSpec, eps: float, M: int, loss, escape_cfg,
                        sigma: FeatureMap | None = None) -> dict:
    """Deterministic grid-side escape analysis at the stationary state.

    Solves the stationary problem, runs the backward costate from the loss
    derivative, applies the one-step-GD control, evolves the density, and fits
    the terminal gap lift.
    """
    sigma = sigma or FeatureMap(d=2)
    grid = CircleGrid(M)
    rho_bar = stationary_gibbs(A, eps, grid, tol=1e-11)
    g = loss.derivative_on_grid(rho_bar)
    H = hessian_operator(rho_bar, A, eps)
    rate = rayleigh_rate(g, rho_bar, H)
    costate = backward_costate(g, rho_bar, H, T=escape_cfg.T, max_step=escape_cfg.costate_step)
    controls = one_gd_path(g, costate, sigma, rho_bar, alpha=escape_cfg.alpha,
                           bin_width=escape_cfg.bin_width)
    path = evolve_density(rho_bar, controls, A, sigma, eps, T=escape_cfg.T,
                          dt=escape_cfg.fp_dt, n_records=escape_cfg.n_records)
    gaps = gap_series(path, rho_bar, A, eps)
    fit = fit_terminal_rate(gaps)
    return {
        "rho_bar": rho_bar, "g": g, "H": H, "rayleigh_rate": rate,
        "costate": costate, "controls": controls, "density_path": path,
        "gaps": gaps, "fit": fit,
    }


def _sweep_common(cfg: ExperimentConfig, values: list, loss_for, param_name: str) -> RunManifest:
    out = Path(cfg.output_dir)
    man = RunManifest.start(cfg, out)
    root = RngStream(cfg.seed)
    rate_rows = []
    particle_rows = []
    report_rows = []
    for i, value in enumerate(values):
        point_root = root.child(100 + i)
        A = _attention(cfg, lambda2=value if param_name == "lambda2" else None)
        loss = loss_for(value, point_root)
        analysis = grid_escape_profile(A, cfg.model.eps_rate, cfg.model.M, loss, cfg.escape)
        fit: FitResult = analysis["fit"]
        rate_rows.append((value, fit.a, fit.C, fit.rms_log_residual, analysis["rayleigh_rate"]))
        row_report = {param_name: value, "fitted_a": fit.a,
                      "rayleigh_rate": analysis["rayleigh_rate"]}
        man.add(write_grid_path_csv(
            out / f"gap_{param_name}_{i}.csv",
            analysis["gaps"][:, 0], np.zeros(1), analysis["gaps"][:, 1][:, None]))
        if cfg.include_particle_runs:
            traj, controls, history = _particle_run(
                cfg, A, loss, point_root, True, 3, 4)
            prof = profile_run(f"{param_name}_{i}", traj)
            _emit_particle_files(out, man, f"{param_name}_{i}", traj, prof, history, controls)
            try:
                pfit = fit_terminal_rate(np.column_stack([traj.times, prof.gap]))
                particle_rows.append((value, pfit.a, pfit.C, pfit.rms_log_residual,
                                      analysis["rayleigh_rate"]))
            except NoDetectableLiftError:
                particle_rows.append((value, float("nan"), float("nan"), float("nan"),
                                      analysis["rayleigh_rate"]))
            row_report["terminal_dispersion"] = prof.terminal_dispersion
            row_report["interior_dispersion"] = prof.interior_dispersion
        report_rows.append(row_report)
    man.add(write_rate_csv(out / "rate.csv", rate_rows))
    if particle_rows:
        man.add(write_rate_csv(out / "rate_particle.csv", particle_rows))
    rpath = out / f"sweep_{param_name}_report.json"
    rpath.write_text(json.dumps({"rows": report_rows}, indent=2) + "\n", encoding="utf-8")
    man.add(rpath)
    emit_svg_plots(man)
    man.finalize()
    return man


def run_sweep_lambda2(cfg: ExperimentConfig) -> RunManifest:
    """Experiment 1: vary the second eigenvalue of the attention matrix."""
    values = cfg.default_sweep()
    if any(not (0 < v < 1) for v in values):
        raise ValueError("lambda2 sweep values must lie in (0, 1)")

    def loss_for(value, point_root):
        return AlignLoss(np.asarray(cfg.loss.u_tar, dtype=float))

    return _sweep_common(cfg, values, loss_for, "lambda2")


def run_sweep_kappa(cfg: ExperimentConfig) -> RunManifest:
    """Experiment 2: vary the vMF concentration of the BoW candidate vectors."""
    values = cfg.default_sweep()
    if any(v <= 0 for v in values):
        raise ValueError("kappa sweep values must be > 0")

    def loss_for(value, point_root):
        # candidate draws use child 5 of the sweep-point stream
        cands = sample_bow_candidates(value, vocab=cfg.loss.vocab, rng=point_root.child(5),
                                      mean=np.asarray(cfg.loss.cand_mean, dtype=float))
        return BowLoss.uniform_target(cands)

    return _sweep_common(cfg, values, loss_for, "kappa")


def run_stationary(cfg: ExperimentConfig) -> RunManifest:
    """Solve and export the stationary clustered density at eps_rate."""
    out = Path(cfg.output_dir)
    man = RunManifest.start(cfg, out)
    A = _attention(cfg)
    grid = CircleGrid(cfg.model.M)
    rho_bar = stationary_gibbs(A, cfg.model.eps_rate, grid, tol=1e-11)
    man.add(write_grid_path_csv(out / "stationary_density.csv", np.zeros(1),
                                grid.thetas, rho_bar.values[None, :]))
    consts = landscape_constants(A, cfg.model.eps_rate)
    wrapped = np.mod(grid.thetas + np.pi, 2 * np.pi) - np.pi
    second_moment = float(rho_bar.weights() @ wrapped ** 2)
    report = {
        "residual": gibbs_residual(rho_bar, A, cfg.model.eps_rate),
        "reflection_defect": float(np.max(np.abs(rho_bar.values - rho_bar.mirrored().values))),
        "angular_second_moment": second_moment,
        "sigma_eps_sq": consts.sigma_eps_sq,
    }
    (out / "stationary_report.json").write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    man.add(out / "stationary_report.json")
    man.finalize()
    return man


def run_rate(cfg: ExperimentConfig) -> RunManifest:
    """Single-point rate analysis: grid escape fit against the Rayleigh rate."""
    out = Path(cfg.output_dir)
    man = RunManifest.start(cfg, out)
    root = RngStream(cfg.seed)
    A = _attention(cfg)
    loss = _make_loss(cfg, root)
    analysis = grid_escape_profile(A, cfg.model.eps_rate, cfg.model.M, loss, cfg.escape)
    fit: FitResult = analysis["fit"]
    lam2 = float(cfg.model.a_diag[1])
    man.add(write_rate_csv(out / "rate.csv",
                           [(lam2, fit.a, fit.C, fit.rms_log_residual, analysis["rayleigh_rate"])]))
    gaps = analysis["gaps"]
    man.add(write_grid_path_csv(out / "escape_gap.csv", gaps[:, 0], np.zeros(1), gaps[:, 1][:, None]))
    report = {"fitted_a": fit.a, "fitted_C": fit.C, "rms_log_residual": fit.rms_log_residual,
              "points_used": fit.points_used, "window": list(fit.window),
              "rayleigh_rate": analysis["rayleigh_rate"]}
    (out / "rate_report.json").write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    man.add(out / "rate_report.json")
    emit_svg_plots(man)
    man.finalize()
    return man


def run_escape(cfg: ExperimentConfig) -> RunManifest:
    """One-step-GD escape consistency: quadratic gap prediction and visibility."""
    out = Path(cfg.output_dir)
    man = RunManifest.start(cfg, out)
    root = RngStream(cfg.seed)
    A = _attention(cfg)
    loss = _make_loss(cfg, root)
    sigma = FeatureMap(d=cfg.model.d)
    eps = cfg.model.eps_rate
    esc = cfg.escape
    grid = CircleGrid(cfg.model.M)
    rho_bar = stationary_gibbs(A, eps, grid, tol=1e-11)
    g = loss.derivative_on_grid(rho_bar)
    H = hessian_operator(rho_bar, A, eps)
    lap = weighted_laplacian(rho_bar)
    costate = backward_costate(g, rho_bar, H, T=esc.T, max_step=esc.costate_step, lap=lap)
    zeta = linear_response(costate, sigma, rho_bar, H, lap=lap)

    ratios = {}
    for alpha in (esc.alpha, esc.alpha * 0.3):
        controls = one_gd_path(g, costate, sigma, rho_bar, alpha=alpha, bin_width=esc.bin_width)
        path = evolve_density(rho_bar, controls, A, sigma, eps, T=esc.T, dt=esc.fp_dt,
                              n_records=esc.n_records)
        _, gap_T = energy_and_gap(path.terminal(), rho_bar, A, eps)
        predicted = 0.5 * alpha ** 2 * H.h_norm_sq(zeta.values[-1])
        ratios[alpha] = gap_T / predicted if predicted > 0 else float("nan")

    cs_rows = []
    for t in (esc.T - 0.75, esc.T - 0.5, esc.T - 0.25):
        j = costate.index_of(round(t / esc.costate_step) * esc.costate_step)
        tt = float(costate.times[j])
        omega = visibility_factor(costate, sigma, rho_bar, H, tt)
        lhs = omega * np.sqrt(H.hinv_norm_sq(costate.values[j]))
        rhs = H.h_half_norm(zeta.values[j])
        cs_rows.append({"t": tt, "omega": omega, "lhs": lhs, "rhs": rhs,
                        "satisfied": bool(lhs <= rhs * (1 + 1e-8))})

    report = {
        "alphas": sorted(ratios),
        "gap_over_prediction": {str(a): ratios[a] for a in sorted(ratios)},
        "cauchy_schwarz": cs_rows,
    }
    (out / "escape_report.json").write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    man.add(out / "escape_report.json")
    stride = max(len(costate.times) // 16, 1)
    man.add(write_grid_path_csv(out / "costate.csv", costate.times[::stride], grid.thetas,
                                costate.values[::stride]))
    man.add(write_grid_path_csv(out / "linear_response.csv", zeta.times[::stride], grid.thetas,
                                zeta.values[::stride]))
    man.finalize()
    return man


def run_landscape(cfg: ExperimentConfig) -> RunManifest:
    """Closed-form constants, Hessian spectrum, and stationary diagnostics as one report."""
    out = Path(cfg.output_dir)
    man = RunManifest.start(cfg, out)
    eps = cfg.model.eps_rate
    report: dict = {"eps": eps, "a_diag": list(cfg.model.a_diag)}
    try:
        A = _attention(cfg)
        report["assumption_ok"] = True
    except ValueError as exc:
        report["assumption_ok"] = False
        report["assumption_violation"] = str(exc)
        report["spectral_claims"] = "skipped"
        (out / "landscape_report.json").write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
        man.add(out / "landscape_report.json")
        man.finalize()
        return man

    consts = landscape_constants(A, eps)
    report["constants"] = asdict(consts)
    grid = CircleGrid(cfg.model.M)
    rho_bar = stationary_gibbs(A, eps, grid, tol=1e-11)
    report["gibbs_residual"] = gibbs_residual(rho_bar, A, eps)
    H = hessian_operator(rho_bar, A, eps)
    spec = H.mean_zero_spectrum()
    lower = 0.4 * consts.hessian_lower_scale
    upper = eps * (1 + 1e-6)
    report["hessian"] = {
        "lambda_min": float(spec[0]),
        "lambda_max": float(spec[-1]),
        "window_low": lower,
        "window_high": upper,
        "within_window": bool(spec[0] >= lower and spec[-1] <= upper),
    }
    wrapped = np.mod(grid.thetas + np.pi, 2 * np.pi) - np.pi
    second_moment = float(rho_bar.weights() @ wrapped ** 2)
    report["sigma_check"] = {
        "angular_second_moment": second_moment,
        "sigma_eps_sq": consts.sigma_eps_sq,
        "rel_error": abs(second_moment - consts.sigma_eps_sq) / consts.sigma_eps_sq,
    }
    (out / "landscape_report.json").write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    man.add(out / "landscape_report.json")
    man.finalize()
    return man


def emit_svg_plots(man: RunManifest) -> list[Path]:
    """Render SVG panels for the angular, energy, and rate CSVs in a manifest."""
    out = man.path.parent
    produced: list[Path] = []
    for name in list(man.files):
        src = out / name
        if not src.exists():
            raise FileNotFoundError(f"manifest lists missing CSV {name}")
        if name.endswith("_angular.csv"):
            header, data = read_csv(src)
            if data.shape[0] == 0:
                raise ValueError(f"empty angular CSV {name}")
            svg = _angular_svg(out / (name[:-4] + ".svg"), data)
            produced.append(man.add(svg))
        elif name.endswith("_energy.csv"):
            header, data = read_csv(src)
            if data.shape[0] == 0:
                raise ValueError(f"empty energy CSV {name}")
            svg = line_plot_svg(out / (name[:-4] + ".svg"), [(data[:, 0], data[:, 3])],
                                title=name[:-4], xlabel="t", ylabel="energy")
            produced.append(man.add(svg))
        elif name == "energy_overlay.csv":
            header, data = read_csv(src)
            if data.shape[0] == 0:
                raise ValueError("empty energy overlay CSV")
            series = [(data[:, 0], data[:, j]) for j in range(1, data.shape[1])]
            svg = line_plot_svg(out / "energy_overlay.svg", series, title="normalized energy",
                                xlabel="t", ylabel="normalized energy", labels=header[1:])
            produced.append(man.add(svg))
        elif name == "rate.csv":
            header, data = read_csv(src)
            if data.shape[0] == 0:
                raise ValueError("empty rate CSV")
            series = [(data[:, 0], data[:, 1]), (data[:, 0], data[:, 4])]
            svg = line_plot_svg(out / "rate.svg", series, title="terminal rate vs parameter",
                                xlabel="parameter", ylabel="rate",
                                labels=["fitted a", "rayleigh rate"], markers=True)
            produced.append(man.add(svg))
    return produced


def _angular_svg(path: Path, data: np.ndarray) -> Path:
    times = np.unique(data[:, 0])
    particles = np.unique(data[:, 1]).astype(int)
    theta = np.full((len(times), len(particles)), np.nan)
    t_index = {t: i for i, t in enumerate(times)}
    for t, p, th in data:
        theta[t_index[t], int(p)] = th
    series = [(times, theta[:, j]) for j in range(theta.shape[1])]
    return line_plot_svg(path, series, title=path.stem, xlabel="t", ylabel="theta")


RUNNERS = {
    "exp0": run_exp0,
    "sweep_lambda2": run_sweep_lambda2,
    "sweep_kappa": run_sweep_kappa,
    "stationary": run_stationary,
    "rate": run_rate,
    "escape": run_escape,
    "landscape": run_landscape,
}


def run_experiment(cfg: ExperimentConfig) -> RunManifest:
    return RUNNERS[cfg.experiment](cfg)


def check_experiment(cfg: ExperimentConfig, man: RunManifest) -> None:
    """Threshold checks for --check mode; raises CheckFailure."""
    out = man.path.parent
    if cfg.experiment == "exp0":
        report = json.loads((out / "turnpike_report.json").read_text(encoding="utf-8"))
        rows = {r["name"]: r for r in report["runs"]}
        if rows["untrained"]["terminal_lift_ratio"] > 2:
            raise CheckFailure(f"untrained lift ratio {rows['untrained']['terminal_lift_ratio']:.3g} > 2")
        if rows["align"]["terminal_lift_ratio"] < 10:
            raise CheckFailure(f"align lift ratio {rows['align']['terminal_lift_ratio']:.3g} < 10")
        if rows["align"]["interior_dispersion"] >= 0.1:
            raise CheckFailure(f"align interior dispersion {rows['align']['interior_dispersion']:.3g} >= 0.1")
        if rows["bow"]["terminal_dispersion"] < 3 * rows["bow"]["interior_dispersion"]:
            raise CheckFailure("bow terminal dispersion below 3x interior dispersion")
    elif cfg.experiment in ("sweep_lambda2", "sweep_kappa"):
        _, data = read_csv(out / "rate.csv")
        fitted, rates = data[:, 1], data[:, 4]
        diffs = np.diff(rates)
        if cfg.experiment == "sweep_lambda2":
            if not (np.all(diffs > 0) or np.all(diffs < 0)):
                raise CheckFailure("rayleigh rate is not strictly monotone across the sweep")
            if rank_correlation(fitted, rates) != 1.0:
                raise CheckFailure("fitted rate and rayleigh rate are not rank-aligned")
        else:
            if np.any(fitted / rates > 3) or np.any(rates / fitted > 3):
                raise CheckFailure("fitted rate deviates from the rayleigh rate by more than 3x")
    elif cfg.experiment == "landscape":
        report = json.loads((out / "landscape_report.json").read_text(encoding="utf-8"))
        if report.get("assumption_ok") and not report["hessian"]["within_window"]:
            raise CheckFailure("hessian spectrum outside its window")
    elif cfg.experiment == "stationary":
        report = json.loads((out / "stationary_report.json").read_text(encoding="utf-8"))
        if report["residual"] > 1e-10:
            raise CheckFailure(f"stationary residual {report['residual']:.3e} > 1e-10")
    elif cfg.experiment == "escape":
        report = json.loads((out / "escape_report.json").read_text(encoding="utf-8"))
        ratios = [abs(v - 1) for v in report["gap_over_prediction"].values()]
        if max(ratios) >= 0.1:
            raise CheckFailure(f"escape ratio error {max(ratios):.3g} >= 0.1")
        if not all(r["satisfied"] for r in report["cauchy_schwarz"]):
            raise CheckFailure("Cauchy-Schwarz visibility relation violated")
    elif cfg.experiment == "rate":
        report = json.loads((out / "rate_report.json").read_text(encoding="utf-8"))
        if not np.isfinite(report["fitted_a"]) or report["fitted_a"] <= 0:
            raise CheckFailure("terminal rate fit failed")
