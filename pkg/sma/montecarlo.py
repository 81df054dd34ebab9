"""
Replicated experiments for the edge statistics.

The statistic is linear in the sinogram, so each replicate is one weighted
sum of a noise draw; the alternative arm adds the deterministic part
computed once from the noiseless data. With binning, noise is drawn on the
acquisition grid and block-averaged before the weights are applied.
"""

import hashlib
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy import stats
from scipy.integrate import trapezoid
from sklearn.metrics import roc_auc_score, roc_curve

from sma import covariance, inference
from sma.covariance import CovContext, CovMatrix2
from sma.errors import PreconditionError
from sma.phantom import admissibility_report
from sma.reconstructor import (
    f_2d,
    fbp_patch,
    fbp_points,
    influence_weights,
    segment_nodes,
    segment_points,
    segment_weights,
    weight_function,
)
from sma.sampling import (
    NoiseModel,
    NoisyData,
    SigmaProfile,
    Sinogram,
    bin_sinogram,
    binned_model,
    draw_noise,
    sample_radon,
)

logger = logging.getLogger(__name__)

STATISTICS = ("fu-sgn", "fu-linear", "f2d")
MIN_REPLICATES = 100
BATCH_SIZE = 64


@dataclass(frozen=True)
class ExperimentSpec:
    """
    One replicated experiment at a fixed edge point.

    ``grid`` and ``noise`` describe the acquisition; the statistics live on
    ``analysis_grid``, the grid of the binning x binning block means.
    """

    phantom: object
    edge: object
    grid: object
    noise: object
    kernel: object
    rho: float = 3.0
    h: float = 0.125
    statistic: str = "f2d"
    n_null: int = 1000
    n_alt: int = 1000
    seed: int = 0
    independent_alt: bool = False
    u_scale: float = 1.0
    binning: int = 1
    alternative: str = "two-sided"

    def __post_init__(self):
        if self.statistic not in STATISTICS:
            raise PreconditionError(f"unknown statistic {self.statistic!r}; choose one of {', '.join(STATISTICS)}")
        if min(self.n_null, self.n_alt) < MIN_REPLICATES:
            raise PreconditionError(f"replicate counts must be at least {MIN_REPLICATES}")
        if int(self.binning) != self.binning or self.binning < 1:
            raise PreconditionError(f"binning must be a positive integer, got {self.binning}")
        inference.check_alternative(self.alternative)
        report = admissibility_report(
            self.edge.x0, self.edge.theta0, self.grid.kappa, self.phantom, self.noise.sigma
        )
        if report.status != "pass (advisory)":
            logger.warning("edge point admissibility: %s", report.status)

    @property
    def is_2d(self):
        return self.statistic == "f2d"

    @property
    def u_kind(self):
        return None if self.is_2d else self.statistic.split("-", 1)[1]

    @property
    def analysis_grid(self):
        return self.grid.binned(self.binning) if self.binning > 1 else self.grid

    @property
    def analysis_noise(self):
        return binned_model(self.noise, self.binning)

    def spec_hash(self):
        """Hash of everything that determines the samples except the seed"""
        payload = {
            "disks": [(d.cx, d.cy, d.radius, d.amplitude) for d in self.phantom.disks],
            "support": self.phantom.support,
            "edge": [self.edge.x0, self.edge.theta0, self.edge.delta_f],
            "grid": [self.grid.epsilon, self.grid.kappa, self.grid.p_bar, self.grid.support],
            "noise": [
                self.noise.family,
                self.noise.sigma.kind,
                self.noise.sigma.level,
                self.noise.sigma.modulation,
                self.noise.vartheta,
                self.noise.raw_std,
            ],
            "kernel": [self.kernel.name, self.kernel.hilbert_truncation],
            "window": [self.rho, self.h, self.statistic, self.u_scale],
            "replicates": [self.n_null, self.n_alt, self.independent_alt, self.binning],
        }
        text = json.dumps(payload, sort_keys=True)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class SampleSet:
    """Null and alternative samples of a statistic (scalars, or rows of 2-vectors)"""

    null_samples: np.ndarray
    alt_samples: np.ndarray
    h_det: np.ndarray
    provenance: dict = field(default_factory=dict)

    @property
    def is_2d(self):
        return self.null_samples.ndim == 2

    def to_frame(self):
        frames = []
        for arm, values in (("null", self.null_samples), ("alt", self.alt_samples)):
            frame = pd.DataFrame({"arm": arm, "f1": values[:, 0] if self.is_2d else values})
            if self.is_2d:
                frame["f2"] = values[:, 1]
            frames.append(frame)
        return pd.concat(frames, ignore_index=True)


@dataclass(frozen=True)
class EdgeTheory:
    """
    Theoretical quantities at unit acquisition sigma level: H_u and gamma for
    the 1D statistic, H and C_hat for the 2D one. Dispersions scale linearly
    in sigma; the binning reduction of the noise is already folded in.
    """

    u_kind: str
    h_u: float
    gamma: float
    h: tuple
    cov: CovMatrix2

    @classmethod
    def compute(cls, spec, u_kind=None, n_alpha=covariance.DEFAULT_N_ALPHA):
        u_kind = u_kind or spec.u_kind or "linear"
        unit = SigmaProfile(spec.noise.sigma.kind, 1.0, spec.noise.sigma.modulation)
        model = NoiseModel(spec.noise.family, unit, spec.noise.vartheta, spec.noise.raw_std)
        model = binned_model(model, spec.binning)
        ctx = CovContext.from_model(spec.edge.x0, spec.analysis_grid, model, spec.kernel, n_alpha)
        h_u = covariance.edge_scalar(spec.kernel, spec.rho, spec.edge.delta_f, u_kind, spec.u_scale)
        gamma = np.sqrt(covariance.gamma_sq(ctx, u_kind, spec.rho, spec.edge.theta0, spec.u_scale))
        edge = covariance.edge_vector(spec.kernel, spec.rho, spec.edge.delta_f, spec.edge.theta0)
        return cls(u_kind, float(h_u), float(gamma), edge.h, covariance.cov_matrix(ctx, spec.rho))

    def gamma_at(self, sigma):
        return self.gamma * sigma

    def cov_at(self, sigma):
        return self.cov.scaled(sigma * sigma)


def _weights(spec):
    grid = spec.analysis_grid
    if spec.is_2d:
        return influence_weights(grid, spec.kernel, spec.edge.x0, spec.rho, spec.h)
    return segment_weights(grid, spec.kernel, spec.edge.x0, spec.edge.theta0, spec.rho, spec.h, spec.u_kind, spec.u_scale)


def clean_data(spec):
    """Noiseless sinogram on the analysis grid"""
    return bin_sinogram(sample_radon(spec.phantom, spec.grid), spec.binning)


def replicate_noise(spec, replicate):
    """Noise draw (seed, replicate) on the acquisition grid, block-averaged to the analysis grid"""
    noise = draw_noise(spec.grid, spec.noise, spec.seed, replicate)
    if spec.binning == 1:
        return noise
    return bin_sinogram(Sinogram(spec.grid, noise), spec.binning).values


def _direct_statistic(spec, clean, noise):
    """Statistic of the noise part by reconstructing first, then integrating"""
    if spec.is_2d:
        patch = fbp_patch(NoisyData(clean, noise), spec.kernel, spec.edge.x0, spec.rho, spec.h, part="noise")
        return f_2d(patch)
    nodes, node_weights = segment_nodes(spec.rho, spec.h)
    points = segment_points(spec.edge.x0, spec.edge.theta0, spec.rho, spec.h, clean.grid.epsilon)
    values = fbp_points(clean.with_values(noise), spec.kernel, points)
    return float(np.sum(node_weights * weight_function(spec.u_kind, spec.u_scale)(nodes) * values))


def _run_batch(spec, weights, replicates):
    noise = np.stack([replicate_noise(spec, r) for r in replicates])
    return weights.apply(noise)


def run_replicates(spec, threads=1, batch_size=BATCH_SIZE):
    """
    Null and alternative samples of the configured statistic.

    Replicate r always uses noise draw (seed, r); batches may run on a thread
    pool and are reassembled in replicate order.
    """
    started = time.perf_counter()
    clean = clean_data(spec)
    weights = _weights(spec)
    h_det = np.atleast_1d(weights.apply(clean.values))

    alt_start = spec.n_null if spec.independent_alt else 0
    total = max(spec.n_null, alt_start + spec.n_alt)
    batches = [range(start, min(start + batch_size, total)) for start in range(0, total, batch_size)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda batch: _run_batch(spec, weights, batch), batches))
    else:
        results = [_run_batch(spec, weights, batch) for batch in batches]
    draws = np.concatenate(results, axis=0)

    null = draws[: spec.n_null]
    alt = draws[alt_start : alt_start + spec.n_alt] + (h_det if spec.is_2d else h_det[0])
    logger.info(
        "ran %d replicates of %s in %.2fs (%d threads)", total, spec.statistic, time.perf_counter() - started, threads
    )
    provenance = {"spec_hash": spec.spec_hash(), "seed": int(spec.seed), "statistic": spec.statistic}
    return SampleSet(null, alt, h_det if spec.is_2d else h_det[:1], provenance)


def compare_paths(spec, replicates=range(10)):
    """(weights path, direct path) statistics of the given noise replicates"""
    clean = clean_data(spec)
    weights = _weights(spec)
    fast, direct = [], []
    for r in replicates:
        noise = replicate_noise(spec, r)
        fast.append(weights.apply(noise))
        direct.append(_direct_statistic(spec, clean, noise))
    return np.asarray(fast), np.asarray(direct)


def _component_row(name, values, predicted=None):
    n = len(values)
    variance = float(np.var(values, ddof=1))
    standardized = (values - values.mean()) / np.sqrt(variance) if variance > 0 else np.zeros(n)
    skewness = float(stats.skew(values)) if variance > 0 else 0.0
    excess = float(stats.kurtosis(values)) if variance > 0 else 0.0
    skew_band = 4.0 * np.sqrt(6.0 / n)
    kurtosis_band = 4.0 * np.sqrt(24.0 / n)
    ks = stats.kstest(standardized, "norm") if variance > 0 else None
    return {
        "component": name,
        "n": n,
        "mean": float(values.mean()),
        "mean_band": 4.0 * np.sqrt(variance / n),
        "variance": variance,
        "predicted_variance": np.nan if predicted is None else float(predicted),
        "variance_ratio": np.nan if not predicted else variance / float(predicted),
        "skewness": skewness,
        "skew_band": skew_band,
        "excess_kurtosis": excess,
        "kurtosis_band": kurtosis_band,
        "ks_pvalue": np.nan if ks is None else float(ks.pvalue),
        "passes": bool(abs(skewness) <= skew_band and abs(excess) <= kurtosis_band),
    }


def gaussianity_report(samples, predicted=None):
    """
    Moment and KS checks of Gaussianity, one row per component.

    ``predicted`` is the variance (scalars) or a CovMatrix2 (2-vectors);
    2-vector samples add a row for the cross-covariance.
    """
    samples = np.asarray(samples, dtype=float)
    if len(samples) < 1000:
        raise PreconditionError("gaussianity report needs at least 1000 samples")
    if samples.ndim == 1:
        return pd.DataFrame([_component_row("f", samples, predicted)])

    rows = [
        _component_row("f1", samples[:, 0], None if predicted is None else predicted.c11),
        _component_row("f2", samples[:, 1], None if predicted is None else predicted.c22),
    ]
    cross = float(np.cov(samples[:, 0], samples[:, 1])[0, 1])
    scale = np.sqrt(rows[0]["variance"] * rows[1]["variance"])
    rows.append(
        {
            "component": "cross",
            "n": len(samples),
            "variance": cross,
            "predicted_variance": np.nan if predicted is None else predicted.c12,
            "variance_ratio": np.nan,
            "mean_band": 4.0 * scale / np.sqrt(len(samples)),
            "passes": bool(predicted is None or abs(cross - predicted.c12) <= 4.0 * scale / np.sqrt(len(samples))),
        }
    )
    return pd.DataFrame(rows)


@dataclass(frozen=True)
class RocCurve:
    alpha: np.ndarray
    power: np.ndarray
    auc: float
    source: str

    def power_at(self, alpha):
        return np.interp(alpha, self.alpha, self.power)

    def max_gap(self, other):
        """Largest vertical distance from ``other`` at this curve's vertices"""
        return float(np.max(np.abs(self.power - other.power_at(self.alpha))))

    def to_frame(self):
        return pd.DataFrame({"alpha": self.alpha, "tpr": self.power, "source": self.source})


def scores(samples, cov=None, alternative="two-sided", sign=1.0):
    """
    Test-statistic ordering: |F_u| (or sign*F_u when directional) for scalars,
    F^T C^-1 F for 2-vectors
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        if inference.check_alternative(alternative) == "directional":
            return np.sign(sign) * samples
        return np.abs(samples)
    return inference.mahalanobis_sq(samples, cov or CovMatrix2.isotropic(1.0))


def empirical_roc(sample_set, cov=None, alternative="two-sided"):
    """ROC of the test swept over all pooled statistic values; ties get half credit in the AUC"""
    if not len(sample_set.null_samples) or not len(sample_set.alt_samples):
        raise PreconditionError("ROC needs nonempty null and alternative samples")
    sign = 1.0 if sample_set.is_2d else float(sample_set.h_det[0]) or 1.0
    null = scores(sample_set.null_samples, cov, alternative, sign)
    alt = scores(sample_set.alt_samples, cov, alternative, sign)
    labels = np.concatenate([np.zeros(len(null)), np.ones(len(alt))])
    pooled = np.concatenate([null, alt])
    fpr, tpr, _ = roc_curve(labels, pooled, drop_intermediate=False)
    return RocCurve(fpr, tpr, float(roc_auc_score(labels, pooled)), "empirical")


def theoretical_roc(h_like, dispersion, kind="1d", n_points=1000, alternative="two-sided"):
    """
    Power against size on a log-spaced alpha grid.

    ``kind`` "1d": h_like = H_u, dispersion = gamma. "2d": h_like = H,
    dispersion = CovMatrix2 or nu.
    """
    alpha = np.concatenate([[0.0], np.logspace(-6.0, 0.0, n_points)])
    with np.errstate(divide="ignore"):
        if kind == "1d":
            if not dispersion > 0:
                raise PreconditionError("gamma must be positive")
            power = inference.power_1d(h_like, dispersion, alpha, alternative)
        elif kind == "2d":
            cov = dispersion if isinstance(dispersion, CovMatrix2) else CovMatrix2.isotropic(dispersion**2)
            power = inference.power_2d(h_like, cov, alpha)
        else:
            raise PreconditionError(f"unknown ROC kind {kind!r}")
    power = np.clip(power, 0.0, 1.0)
    return RocCurve(alpha, power, float(trapezoid(power, alpha)), "theory")


def power_vs_sigma(theory, sigmas, alpha=0.05, alternative="two-sided"):
    """Theoretical power and AUC of the 1D and 2D tests across noise levels"""
    rows = []
    for sigma in sigmas:
        gamma = theory.gamma_at(sigma)
        rows.append(
            {
                "sigma": float(sigma),
                "power_1d": inference.power_1d(theory.h_u, gamma, alpha, alternative),
                "power_2d": inference.power_2d(theory.h, theory.cov_at(sigma), alpha),
                "auc_1d": inference.auc_1d(theory.h_u / gamma, alternative),
            }
        )
    return pd.DataFrame(rows)


def rejection_rate(samples, dispersion, alpha, alternative="two-sided", sign=1.0):
    """Fraction of samples the size-alpha test rejects"""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        z = inference.statistic_1d(samples, dispersion, alternative, sign)
        return float(np.mean(z > inference.threshold_1d(alpha, alternative)))
    return float(np.mean(inference.mahalanobis_sq(samples, dispersion) > inference.threshold_2d(alpha)))


def binomial_band(p, n, width=4.0):
    return width * np.sqrt(p * (1.0 - p) / n)


def histogram_table(sample_set, bins="fd"):
    """Counts per arm and component over shared bin edges (Freedman-Diaconis by default)"""
    arms = {"null": sample_set.null_samples, "alt": sample_set.alt_samples}
    components = ("f1", "f2") if sample_set.is_2d else ("f",)
    frames = []
    for index, component in enumerate(components):
        pick = (lambda v: v[:, index]) if sample_set.is_2d else (lambda v: v)
        edges = np.histogram_bin_edges(np.concatenate([pick(v) for v in arms.values()]), bins=bins)
        for arm, values in arms.items():
            counts, _ = np.histogram(pick(values), bins=edges)
            frames.append(
                pd.DataFrame(
                    {"arm": arm, "component": component, "left": edges[:-1], "right": edges[1:], "count": counts}
                )
            )
    return pd.concat(frames, ignore_index=True)


def empirical_direction_spread(samples, h, level=0.95):
    """Angle (radians) containing ``level`` of the F directions around the direction of H"""
    samples = np.asarray(samples, dtype=float)
    delta = np.arctan2(samples[:, 1], samples[:, 0]) - np.arctan2(h[1], h[0])
    delta = np.angle(np.exp(1j * delta))
    return float(np.quantile(np.abs(delta), level))


def empirical_magnitude_spread(samples, h, level=0.95):
    """Radius r with ``level`` of the |F| values inside |H| +- r"""
    samples = np.asarray(samples, dtype=float)
    return float(np.quantile(np.abs(np.hypot(samples[:, 0], samples[:, 1]) - np.hypot(*h)), level))
