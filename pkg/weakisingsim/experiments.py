"""Experiment orchestrator.

Resolves a validated RunConfig, runs one workflow, writes its data files,
a fit summary and a manifest into the output directory, and records the run
as JSON lines under artifacts/logs.
"""

import math
import time
import warnings
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from weakisingsim import analytics
from weakisingsim.config import FIT_CONFIG, LOGS_DIR, RUN_CONFIG
from weakisingsim.ed_oracle import (
    apply_kraus_ed,
    covariance_from_dense,
    ee_ed,
    fidelity,
    global_flip,
    ground_state_ed,
    joint_born_distribution,
    optimal_bias_ed,
    outcome_strings,
    sigma_expectation,
    two_point_ed,
    uniform_z_state,
    z_diagnostics,
)
from weakisingsim.errors import ConfigError, FitFailureError, OutOfValidityError
from weakisingsim.export import write_csv, write_json, write_jsonl, write_manifest
from weakisingsim.gaussian import (
    CovarianceState,
    SpinInterval,
    build_ground_state,
    connected_xx_correlator,
    entanglement_entropy,
    half_chain_entropy,
    zz_correlator_abs,
)
from weakisingsim.logger import RunLogger
from weakisingsim.measurement import (
    MeasurementScheme,
    apply_outcomes,
    apply_weak_x,
    born_probability_x,
    run_trajectory,
)
from weakisingsim.stats import (
    EntropyProfile,
    FitResult,
    fit_c_eff,
    fit_half_chain_scaling,
    fit_power_law,
    profile_from_state,
    run_ensemble,
    xx_profile,
    zz_profile,
)

Command = Literal["ground", "uniform", "ensemble", "sweep", "analytic", "oracle"]


class RunConfig(BaseModel):
    """Fully resolved parameters of one run; echoed into the manifest."""

    model_config = ConfigDict(extra="forbid")

    command: Command
    out: str
    length: int = Field(default=64, ge=2)
    lengths: Optional[list[int]] = None
    lam: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    lambda_grid: Optional[str] = None
    scheme: Optional[str] = None
    p_plus: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    delta_p: Optional[float] = Field(default=None, ge=-1.0, le=1.0)
    sign: Literal[1, -1] = 1
    trajectories: int = Field(default=10, ge=1)
    seed: int = Field(default=20240101, ge=0, lt=2**64)
    cuts: Optional[list[int]] = None
    format: Literal["csv", "json"] = "csv"
    threads: Optional[int] = Field(default=None, ge=1)
    axis: Literal["x", "z"] = "x"
    curve: Optional[str] = None
    zz_max_separation: Optional[int] = Field(default=None, ge=1)
    verbose: bool = False
    progress: bool = False

    @field_validator("lengths")
    @classmethod
    def _check_lengths(cls, lengths):
        if lengths is not None and any(v < 2 for v in lengths):
            raise ValueError("Chain lengths must be >= 2")
        return lengths

    @model_validator(mode="after")
    def _check_command(self):
        if self.cuts is not None and any(not (1 <= c <= self.length - 1) for c in self.cuts):
            raise ValueError(f"Cuts must lie in 1-{self.length - 1}")
        needs_lambda = ("uniform", "ensemble", "oracle")
        if self.command in needs_lambda and self.lam is None:
            raise ValueError(f"Command '{self.command}' needs --lambda")
        if self.command in ("ensemble", "sweep") and self.scheme is None:
            raise ValueError(f"Command '{self.command}' needs --scheme")
        if self.command == "analytic" and self.curve is None:
            raise ValueError("Command 'analytic' needs --curve")
        if self.scheme == "biased" and self.p_plus is None and self.delta_p is None:
            raise ValueError("Scheme 'biased' needs --p-plus or --delta-p")
        if self.command == "oracle" and self.length > 16:
            raise ValueError("Command 'oracle' supports L <= 16")
        return self

    def scheme_at(self, lam: float) -> MeasurementScheme:
        """Scheme for strength lam; a delta_p bias follows the optimal bias of lam."""
        p_plus = self.p_plus
        if self.scheme == "biased" and p_plus is None:
            p_plus = analytics.optimal_bias(lam) + self.delta_p
            if not (0.0 <= p_plus <= 1.0):
                raise ConfigError(f"optimal_bias({lam}) + delta_p = {p_plus} leaves [0, 1]")
        return MeasurementScheme.parse(self.scheme, p_plus if self.scheme == "biased" else None)

    def grid(self) -> np.ndarray:
        return analytics.parse_grid(self.lambda_grid or RUN_CONFIG["lambda_grid"])


class ExperimentRunner:
    """Runs one command of the harness and owns its outputs."""

    def __init__(self, config: RunConfig, log_dir: Optional[Path] = None):
        self.config = config
        self.verbose = config.verbose
        self.out_dir = Path(config.out)
        self.logger = RunLogger(log_dir or LOGS_DIR, verbose=self.verbose)
        self.outputs: list[Path] = []
        self.summary: dict = {}

    # ------------------------------------------------------------------ output

    def _log(self, message: str):
        if self.verbose:
            print(message)

    def _record(self, path: Path) -> Path:
        self.outputs.append(path)
        self.logger.log_output(path)
        self._log(f"  💾 Saved: {path}")
        return path

    def _write_table(self, name: str, header: list[str], rows: list) -> Path:
        if self.config.format == "csv":
            path = write_csv(self.out_dir / f"{name}.csv", header, rows)
        else:
            records = [dict(zip(header, row)) for row in rows]
            path = write_json(self.out_dir / f"{name}.json", {"columns": header, "rows": records})
        return self._record(path)

    def _write_fits(self, fits: dict) -> Path:
        for name, fit in fits.items():
            if isinstance(fit, FitResult):
                self.logger.log_fit(name, fit.to_json())
        payload = {k: (v.to_json() if isinstance(v, FitResult) else v) for k, v in fits.items()}
        return self._record(write_json(self.out_dir / "fit.json", payload))

    def _profile_table(self, name: str, profile: EntropyProfile) -> Path:
        rows = [(s.ell, s.mean, s.stderr, s.n) for s in profile.samples]
        return self._write_table(name, ["ell", "mean_S", "stderr_S", "n"], rows)

    def _zz_separations(self, l_spin: int) -> list[int]:
        r_max = self.config.zz_max_separation
        if r_max is None:
            r_max = math.floor(FIT_CONFIG["power_law_r_max_fraction"] * l_spin)
        return list(range(1, min(max(r_max, 1), l_spin - 1) + 1))

    def _try_fit(self, label: str, func, *args, **kwargs) -> Optional[FitResult]:
        """Auxiliary fits that may legitimately lack data at small L."""
        try:
            return func(*args, **kwargs)
        except FitFailureError as e:
            message = f"{label} fit skipped: {e}"
            warnings.warn(message, RuntimeWarning)
            return None

    def _correlator_tables(self, state: CovarianceState) -> Optional[FitResult]:
        seps = self._zz_separations(state.l_spin)
        zz_rows = zz_profile(state, seps)
        xx_rows = xx_profile(state, seps)
        rows = [
            (r, j, jp, zz, log_zz, xx[3])
            for (r, j, jp, zz, log_zz), xx in zip(zz_rows, xx_rows)
        ]
        self._write_table(
            "correlators", ["r", "j", "jp", "zz_abs", "log_zz_abs", "xx_connected"], rows
        )
        pairs = [(r, zz) for r, _, _, zz, _ in zz_rows]
        return self._try_fit("zz power-law", fit_power_law, pairs, l_spin=state.l_spin)

    # ---------------------------------------------------------------- commands

    def cmd_ground(self) -> dict:
        """Ground-state entropy profile and correlators; fits c (and c from L-scaling)."""
        cfg = self.config
        ground = build_ground_state(cfg.length)
        profile = profile_from_state(ground, cfg.cuts)
        self._profile_table("entropy", profile)

        fits: dict = {"c_eff": fit_c_eff(profile)}
        zz_fit = self._correlator_tables(ground)
        if zz_fit is not None:
            fits["zz_power_law"] = zz_fit
            fits["delta_z"] = zz_fit.delta

        if cfg.lengths:
            entropies = [half_chain_entropy(build_ground_state(n)) for n in cfg.lengths]
            self._write_table(
                "half_chain", ["L", "S_half"], list(zip(cfg.lengths, entropies))
            )
            fits["half_chain"] = fit_half_chain_scaling(cfg.lengths, entropies)

        self._write_fits(fits)
        return {"c_eff": fits["c_eff"].coefficient}

    def _uniform_state(self, length: int, lam: float, sign: int) -> CovarianceState:
        _, state = run_trajectory(
            build_ground_state(length), lam, MeasurementScheme.uniform(sign), seed=0
        )
        return state

    def cmd_uniform(self) -> dict:
        """Uniform-outcome state: entropy and zz fits next to their closed forms."""
        cfg = self.config
        state = self._uniform_state(cfg.length, cfg.lam, cfg.sign)
        profile = profile_from_state(state, cfg.cuts)
        self._profile_table("entropy", profile)

        c_fit = fit_c_eff(profile)
        zz_fit = self._correlator_tables(state)
        c_pred = analytics.c_eff_uniform(cfg.lam)
        d_pred = analytics.delta_z(cfg.lam, cfg.sign)
        rows = [("c_eff", c_fit.coefficient, c_fit.coefficient_stderr, c_pred)]
        if zz_fit is not None:
            rows.append(("delta_z", zz_fit.delta, 0.5 * zz_fit.coefficient_stderr, d_pred))
        self._write_table("summary", ["quantity", "fitted", "stderr", "prediction"], rows)

        fits: dict = {"c_eff": c_fit, "c_eff_prediction": c_pred, "delta_z_prediction": d_pred}
        if zz_fit is not None:
            fits["zz_power_law"] = zz_fit
            fits["delta_z"] = zz_fit.delta
        self._write_fits(fits)
        return {"c_eff": c_fit.coefficient, "prediction": c_pred}

    def _prediction(self, scheme: MeasurementScheme, lam: float) -> float:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                return analytics.predicted_c_eff(scheme.name, lam, scheme.p_plus)
        except OutOfValidityError as e:
            self.logger.log_warning(str(e))
            return float("nan")

    def cmd_ensemble(self) -> dict:
        """Trajectory ensemble: averaged profile, fitted c_eff and records."""
        cfg = self.config
        scheme = cfg.scheme_at(cfg.lam)
        ground = build_ground_state(cfg.length)
        if not scheme.samples:
            raise ConfigError("Uniform schemes are deterministic; use the 'uniform' command")

        result = run_ensemble(
            ground, cfg.lam, scheme, cfg.trajectories, cfg.seed,
            cuts=cfg.cuts, threads=cfg.threads, progress=cfg.progress,
        )
        for index, record in enumerate(result.records):
            self.logger.log_trajectory(index, record.to_json())
        self._profile_table("entropy", result.profile)
        self._record(
            write_jsonl(self.out_dir / "trajectories.jsonl", [r.to_json() for r in result.records])
        )

        fit = fit_c_eff(result.profile)
        prediction = self._prediction(scheme, cfg.lam)
        self._write_fits({"c_eff": fit, "c_eff_prediction": prediction, "p_plus": scheme.p_plus})
        return {"c_eff": fit.coefficient, "prediction": prediction}

    def cmd_sweep(self) -> dict:
        """c_eff over a lambda grid, one ensemble (or uniform state) per point."""
        cfg = self.config
        grid = cfg.grid()
        ground = build_ground_state(cfg.length)
        rows = []
        for k, lam in enumerate(grid):
            lam = float(lam)
            scheme = cfg.scheme_at(lam)
            if scheme.samples:
                profile = run_ensemble(
                    ground, lam, scheme, cfg.trajectories, cfg.seed + k,
                    cuts=cfg.cuts, threads=cfg.threads, progress=cfg.progress,
                ).profile
            else:
                _, state = run_trajectory(ground, lam, scheme, seed=0)
                profile = profile_from_state(state, cfg.cuts)
            fit = fit_c_eff(profile)
            prediction = self._prediction(scheme, lam)
            rows.append((lam, fit.coefficient, fit.coefficient_stderr, prediction))
            self.logger.log_fit(f"c_eff@{lam:g}", fit.to_json())
            self._log(f"  λ={lam:.3f}  c_eff={fit.coefficient:.4f}  prediction={prediction:.4f}")

        self._write_table("sweep", ["lambda", "c_eff", "stderr", "prediction"], rows)
        return {"points": len(rows)}

    def cmd_analytic(self) -> dict:
        """Tabulate one closed-form curve."""
        cfg = self.config
        params = {}
        if cfg.delta_p is not None:
            params["delta_p"] = cfg.delta_p
        table = analytics.curve(cfg.curve, cfg.grid(), **params)
        self._write_table(table.name, table.header(), table.points)
        return {"curve": table.name, "points": len(table.points)}

    def cmd_oracle(self) -> dict:
        """Dense-statevector diagnostics and cross-checks against the Gaussian engine."""
        if self.config.axis == "z":
            return self._oracle_z()
        return self._oracle_x()

    def _oracle_x(self) -> dict:
        cfg = self.config
        length, lam = cfg.length, cfg.lam
        dense = ground_state_ed(length)
        gauss = build_ground_state(length)
        checks = {
            "ground_covariance": float(np.max(np.abs(covariance_from_dense(dense) - gauss.gamma)))
        }

        record, _ = run_trajectory(gauss, lam, MeasurementScheme.born(), cfg.seed)
        prob_dev = 0.0
        for site, outcome in enumerate(record.outcomes, start=1):
            p_gauss = born_probability_x(gauss, site, lam, outcome)
            gauss = apply_weak_x(gauss, site, lam, outcome)
            dense, p_dense = apply_kraus_ed(dense, site, "x", lam, outcome)
            prob_dev = max(prob_dev, abs(p_gauss - p_dense))
        checks["born_probability"] = prob_dev
        checks["post_measurement_covariance"] = float(
            np.max(np.abs(covariance_from_dense(dense) - gauss.gamma))
        )
        checks["entropy"] = max(
            abs(ee_ed(dense, ell) - entanglement_entropy(gauss, SpinInterval(1, ell)))
            for ell in range(1, length)
        )
        checks["sigma_x"] = max(
            abs(sigma_expectation(dense, j, "x") - gauss.gamma[2 * j - 2, 2 * j - 1])
            for j in range(1, length + 1)
        )
        pairs = [(j, jp) for j in range(1, length + 1) for jp in range(j + 1, length + 1)]
        checks["xx_connected"] = max(
            abs(
                two_point_ed(dense, j, jp, "x", connected=True)
                - connected_xx_correlator(gauss, j, jp)
            )
            for j, jp in pairs
        )
        checks["zz_abs"] = max(
            abs(abs(two_point_ed(dense, j, jp, "z")) - zz_correlator_abs(gauss, j, jp).value)
            for j, jp in pairs
        )

        report = {"checks": checks, "max_deviation": max(checks.values())}
        if length <= 8 and lam < 1.0:
            distribution = joint_born_distribution(length, lam, "x")
            ground = build_ground_state(length)
            gaussian_joint = np.array(
                [
                    math.exp(apply_outcomes(ground, lam, list(m))[1])
                    for m in outcome_strings(length)
                ]
            )
            checks["joint_distribution"] = float(np.max(np.abs(distribution - gaussian_joint)))
            report["max_deviation"] = max(checks.values())
            report["joint_normalization"] = float(abs(distribution.sum() - 1.0))
            report["optimal_bias_ed"] = optimal_bias_ed(distribution)

        rows = [(name, value) for name, value in checks.items()]
        self._write_table("crosscheck", ["quantity", "max_abs_deviation"], rows)
        report["record"] = record.to_json()
        self._record(write_json(self.out_dir / "report.json", report))
        return {"max_deviation": report["max_deviation"]}

    def _oracle_z(self) -> dict:
        cfg = self.config
        diag = z_diagnostics(cfg.length, cfg.lam, cfg.sign)
        self._write_table("entropy", ["ell", "S"], diag.cut_entropies)
        self._write_table("intervals", ["first", "last", "S"], diag.interval_entropies)
        self._write_table("zz_connected", ["j", "jp", "zz_connected"], diag.zz_connected)

        ground = ground_state_ed(cfg.length)
        half = cfg.length // 2
        plus = uniform_z_state(cfg.length, cfg.lam, 1)
        minus = uniform_z_state(cfg.length, cfg.lam, -1)
        report = {
            "half_chain_entropy": ee_ed(uniform_z_state(cfg.length, cfg.lam, cfg.sign), half),
            "half_chain_entropy_ground": ee_ed(ground, half),
            "global_flip_fidelity": fidelity(global_flip(plus), minus),
            "saturation": {str(k): v for k, v in diag.saturation().items()},
        }
        self._record(write_json(self.out_dir / "report.json", report))
        return {"half_chain_entropy": report["half_chain_entropy"]}

    # --------------------------------------------------------------------- run

    def run(self) -> dict:
        """Execute the configured command; always closes the run log."""
        cfg = self.config
        commands = {
            "ground": self.cmd_ground,
            "uniform": self.cmd_uniform,
            "ensemble": self.cmd_ensemble,
            "sweep": self.cmd_sweep,
            "analytic": self.cmd_analytic,
            "oracle": self.cmd_oracle,
        }
        if self.out_dir.exists() and any(self.out_dir.iterdir()):
            raise ConfigError(f"Output directory {self.out_dir} is not empty")
        self.out_dir.mkdir(parents=True, exist_ok=True)

        if self.verbose:
            print("=" * 70)
            print(f"🚀 weakisingsim {cfg.command}")
            print("=" * 70)
            print(f"📏 L: {cfg.length}")
            if cfg.lam is not None:
                print(f"🎚️  lambda: {cfg.lam}")
            if cfg.scheme:
                print(f"🎲 Scheme: {cfg.scheme}")
            print(f"📁 Output: {self.out_dir}")
            print(f"📝 Log: {self.logger.log_file}")
            print()

        config_dump = cfg.model_dump(mode="json")
        self.logger.log_run_start(cfg.command, config_dump)
        start = time.time()
        success = False
        try:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                self.summary = commands[cfg.command]()
            for w in caught:
                self.logger.log_warning(str(w.message))
                self._log(f"  ⚠️  {w.message}")
            self._record(write_manifest(self.out_dir, cfg.command, config_dump, self.outputs))
            success = True
        except Exception as e:
            self.logger.log_error(e)
            raise
        finally:
            elapsed = time.time() - start
            self.logger.log_run_complete(success, elapsed)
            if self.verbose:
                print()
                print("=" * 70)
                print(f"{'✅' if success else '❌'} {cfg.command} finished in {elapsed:.1f}s")
                for key, value in self.summary.items():
                    print(f"   {key}: {value}")
                print("=" * 70)

        return {"success": success, "outputs": [str(p) for p in self.outputs], **self.summary}
