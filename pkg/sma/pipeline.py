"""
Experiment stages behind the command-line driver.

Each stage builds its inputs from the run config, computes, writes its
artifacts under the session's output directory and prints status lines.
"""

import logging
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import pandas as pd

from sma import inference, io, montecarlo
from sma.covariance import CovContext, asymptotic_table, cov_C, cov_C1, cov_matrix, edge_scalar, edge_vector, gamma_sq
from sma.errors import PreconditionError
from sma.phantom import admissibility_report
from sma.reconstructor import (
    dtb_residual,
    f_2d,
    fbp_image,
    fbp_patch,
    fbp_points,
    influence_weights,
    segment_nodes,
    segment_points,
    segment_weights,
    weight_function,
)
from sma.sampling import (
    NoisyData,
    bin_sinogram,
    binned_model,
    draw_noise,
    nsr,
    sample_radon,
    sigma_for_nsr,
    verify_parity,
)
from sma.scanmap import ScanConfig, distance_to_circle, extract_edges, scan

logger = logging.getLogger(__name__)

RULE = "=" * 50
ASYMPTOTIC_RHOS = (2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0)


@dataclass(frozen=True)
class Session:
    """Resolved config plus driver flags; owns the output directory of one stage"""

    config: object
    out_dir: Path
    threads: int = 1
    force_direct: bool = False

    @property
    def seed(self):
        return self.config.output.seed

    @property
    def header(self):
        return io.header_line(self.config.config_hash(), self.seed)

    def child(self, name, config=None):
        return replace(self, config=config or self.config, out_dir=self.out_dir / name)

    def reconfigured(self, **sections):
        """Same output directory, with fields of config sections replaced"""
        config = replace(
            self.config, **{name: replace(getattr(self.config, name), **values) for name, values in sections.items()}
        )
        return replace(self, config=config)

    def table(self, name, frame):
        path = io.write_table(self.out_dir / name, frame, self.header)
        print(f"📂 Wrote {path}")
        return path

    def json_lines(self, name, records):
        path = io.write_json_lines(self.out_dir / name, records, self.header)
        print(f"📂 Wrote {path}")
        return path

    def summary(self, name, payload):
        document = {
            "config": self.config.to_dict(),
            "config_hash": self.config.config_hash(),
            "seed": self.seed,
            "results": payload,
        }
        path = io.write_json(self.out_dir / name, document)
        print(f"📂 Wrote {path}")
        return path


@dataclass(frozen=True)
class Setup:
    phantom: object
    edge: object
    grid: object
    model: object
    kernel: object
    binning: int

    @property
    def x0(self):
        return self.edge.x0


def setup(config, sigma=None):
    """Domain objects of the analysis grid (after binning)"""
    phantom = config.build_phantom()
    grid = config.build_grid()
    model = config.build_noise(sigma)
    verify_parity(model, grid)
    n = config.noise.binning
    return Setup(
        phantom=phantom,
        edge=config.edge_point(phantom),
        grid=grid.binned(n) if n > 1 else grid,
        model=binned_model(model, n),
        kernel=config.build_kernel(),
        binning=n,
    )


def check_admissibility(stage):
    """Print the advisory edge-point checks; never raises"""
    report = admissibility_report(stage.edge.x0, stage.edge.theta0, stage.grid.kappa, stage.phantom, stage.model.sigma)
    if report.status != "pass (advisory)":
        print(f"⚠️  Edge point admissibility: {report.status}")
    return report


def build_data(config, sigma=None, replicate=0):
    """Noiseless and noise parts on the analysis grid"""
    phantom = config.build_phantom()
    grid = config.build_grid()
    model = config.build_noise(sigma)
    clean = sample_radon(phantom, grid)
    noise = draw_noise(grid, model, config.output.seed, replicate)
    n = config.noise.binning
    if n > 1:
        clean_binned = bin_sinogram(clean, n)
        noise = bin_sinogram(clean.with_values(noise), n).values
        clean = clean_binned
    return NoisyData(clean, noise)


def reference_context(config, stage, x0=None):
    """Covariance context of the noise level the tests assume"""
    level = config.test.reference_sigma or None
    noise = binned_model(config.build_noise(level), config.noise.binning)
    return CovContext.from_model(stage.x0 if x0 is None else x0, stage.grid, noise, stage.kernel)


def experiment_spec(config, stage, statistic=None):
    """Replicated experiment on the acquisition grid; binning happens per replicate"""
    return montecarlo.ExperimentSpec(
        phantom=stage.phantom,
        edge=stage.edge,
        grid=config.build_grid(),
        noise=config.build_noise(),
        kernel=stage.kernel,
        rho=config.test.rho,
        h=config.test.h,
        statistic=statistic or config.test.statistic,
        n_null=config.montecarlo.n_null,
        n_alt=config.montecarlo.n_alt,
        seed=config.output.seed,
        independent_alt=config.montecarlo.independent_alt,
        u_scale=config.test.u_scale,
        binning=stage.binning,
        alternative=config.test.alternative,
    )


def _u_kind(config):
    statistic = config.test.statistic
    return statistic.split("-", 1)[1] if statistic.startswith("fu-") else "linear"


def _bins(config):
    bins = config.montecarlo.histogram_bins
    return int(bins) if bins.isdigit() else bins


# stages


def simulate(session):
    """Noiseless and noisy sinograms"""
    config = session.config
    print("🚀 Simulating Radon data")
    data = build_data(config)
    noisy = data.select("full")
    ratio = nsr(data.clean, data.noise)
    print(f"📊 Sinogram shape: {data.grid.shape}, NSR: {ratio:.4f}")
    for name, sinogram in (("clean.sma1", data.clean), ("noisy.sma1", noisy)):
        print(f"📂 Wrote {io.write_sinogram(session.out_dir / name, sinogram)}")
    session.table("noisy.csv", io.sinogram_frame(noisy))
    session.summary(
        "simulate.json",
        {"shape": list(data.grid.shape), "nsr": ratio, "d_alpha": data.grid.d_alpha, "epsilon": data.grid.epsilon},
    )
    print("✅ Simulation complete")
    return {"nsr": ratio}


def recon(session):
    """Local patches at the edge point, the DTB model fit and a macro image"""
    config = session.config
    stage = setup(config)
    data = build_data(config)
    print(f"🚀 Reconstructing around x0 = ({stage.x0[0]:.4f}, {stage.x0[1]:.4f})")

    patches = {
        part: fbp_patch(data, stage.kernel, stage.x0, config.test.rho, config.test.h, part)
        for part in ("full", "deterministic", "noise")
    }
    coords = patches["full"].coords
    xx, yy = np.meshgrid(coords, coords, indexing="ij")
    frame = pd.DataFrame({"x1": xx.ravel(), "x2": yy.ravel()})
    for part, patch in patches.items():
        frame[part] = patch.samples.ravel()
    session.table("patch.csv", frame)

    c_fit, residual = dtb_residual(patches["deterministic"], stage.edge.theta0, stage.edge.delta_f, stage.kernel)
    _, residual_minimax = dtb_residual(
        patches["deterministic"], stage.edge.theta0, stage.edge.delta_f, stage.kernel, fit="midrange"
    )
    print(f"📊 DTB fit: c = {c_fit:.5f}, max residual = {residual:.5f} ({residual_minimax:.5f} with a midrange c)")

    points = stage.edge.x0_array[None, :] + data.grid.epsilon * coords[:, None] * stage.edge.theta0_array[None, :]
    profile = fbp_points(data.clean, stage.kernel, points)
    session.table(
        "profile.csv",
        pd.DataFrame(
            {"t": coords, "recon": profile, "model": c_fit + stage.edge.delta_f * stage.kernel.dtb(coords)}
        ),
    )

    method = "direct" if session.force_direct else config.scan.method
    image = fbp_image(
        data.select("full"), stage.kernel, config.scan.bbox, config.scan.step_fraction * data.grid.epsilon, method
    )
    session.table("image.csv", io.image_frame(image))
    print(f"📂 Wrote {io.write_pgm(session.out_dir / 'image.pgm', image.values, session.header)}")
    results = {"c_fit": c_fit, "max_residual": residual, "max_residual_midrange": residual_minimax}
    session.summary("recon.json", dict(results, image_shape=list(image.values.shape)))
    print("✅ Reconstruction complete")
    return results


def cov_report(session):
    """C on a grid of offsets, C1, C_hat, nu^2, gamma^2, H and H_u"""
    config = session.config
    stage = setup(config)
    ctx = reference_context(config, stage)
    rho = config.test.rho
    print("🚀 Computing limiting covariances")

    offsets = np.arange(-4.0, 4.0 + 1e-9, 0.25)
    xx, yy = np.meshgrid(offsets, offsets, indexing="ij")
    field = cov_C(ctx, np.stack([xx, yy], axis=-1))
    session.table("cov_field.csv", pd.DataFrame({"x1": xx.ravel(), "x2": yy.ravel(), "C": field.ravel()}))

    t = np.linspace(0.0, 20.0, 201)
    session.table("cov_c1.csv", pd.DataFrame({"t": t, "C1": cov_C1(ctx, t, stage.edge.theta0)}))

    matrix = cov_matrix(ctx, rho)
    edge = edge_vector(stage.kernel, rho, stage.edge.delta_f, stage.edge.theta0)
    results = {
        "c11": matrix.c11,
        "c12": matrix.c12,
        "c22": matrix.c22,
        "nu_sq": matrix.nu_sq,
        "h1": edge.h[0],
        "h2": edge.h[1],
        "magnitude_coeff": edge.magnitude_coeff,
    }
    for u in ("linear", "sgn"):
        results[f"gamma_sq_{u}"] = gamma_sq(ctx, u, rho, stage.edge.theta0, config.test.u_scale)
        results[f"h_u_{u}"] = edge_scalar(stage.kernel, rho, stage.edge.delta_f, u, config.test.u_scale)
    print(f"📊 nu^2 = {matrix.nu_sq:.6g}, |H| = {edge.norm:.6g}")
    session.table("cov_summary.csv", pd.DataFrame({"quantity": list(results), "value": list(results.values())}))
    asymptotics = asymptotic_table(stage.kernel, ASYMPTOTIC_RHOS, config.grid.kappa)
    results["gamma_sq_loglog_slope"] = asymptotics.attrs.get("gamma_sq_loglog_slope")
    session.table("cov_asymptotics.csv", asymptotics)
    session.summary("cov_report.json", results)
    print("✅ Covariance report complete")
    return results


def _segment_statistic(session, stage, data, u_kind):
    config = session.config
    if session.force_direct:
        nodes, weights = segment_nodes(config.test.rho, config.test.h)
        points = segment_points(stage.x0, stage.edge.theta0, config.test.rho, config.test.h, data.grid.epsilon)
        u = weight_function(u_kind, config.test.u_scale)(nodes) * weights
        return (
            float(np.sum(u * fbp_points(data.select("full"), stage.kernel, points))),
            float(np.sum(u * fbp_points(data.clean, stage.kernel, points))),
        )
    weights = segment_weights(
        data.grid, stage.kernel, stage.x0, stage.edge.theta0, config.test.rho, config.test.h, u_kind, config.test.u_scale
    )
    return float(weights.apply(data.select("full").values)), float(weights.apply(data.clean.values))


def _window_statistic(session, stage, data):
    config = session.config
    if session.force_direct:
        full = fbp_patch(data, stage.kernel, stage.x0, config.test.rho, config.test.h, "full")
        det = fbp_patch(data, stage.kernel, stage.x0, config.test.rho, config.test.h, "deterministic")
        return f_2d(full), f_2d(det)
    weights = influence_weights(data.grid, stage.kernel, stage.x0, config.test.rho, config.test.h)
    return weights.apply(data.select("full").values), weights.apply(data.clean.values)


def test1d(session):
    """1D edge test at the configured edge point"""
    config = session.config
    stage = setup(config)
    data = build_data(config)
    u_kind = _u_kind(config)
    print(f"🚀 1D test with u = {u_kind}")
    check_admissibility(stage)
    f_u, h_u = _segment_statistic(session, stage, data, u_kind)
    gamma = np.sqrt(gamma_sq(reference_context(config, stage), u_kind, config.test.rho, stage.edge.theta0, config.test.u_scale))
    alternative = config.test.alternative
    result = inference.test_1d(f_u, gamma, config.test.alpha, alternative, sign=h_u or 1.0)
    record = dict(result.to_dict(), f_u=f_u, h_u=h_u, gamma=float(gamma), alternative=alternative)
    record["power"] = inference.power_1d(h_u, gamma, config.test.alpha, alternative)
    print(f"📊 Z = {result.statistic:.4f}, threshold = {result.threshold:.4f}, p = {result.p_value:.4g}")
    print("✅ Edge detected" if result.reject else "✅ No edge detected")
    session.json_lines("test1d.jsonl", [record])
    return record


def test2d(session):
    """2D edge test, power and confidence region at the configured edge point"""
    config = session.config
    stage = setup(config)
    data = build_data(config)
    print("🚀 2D test")
    check_admissibility(stage)
    f, h_det = _window_statistic(session, stage, data)
    matrix = cov_matrix(reference_context(config, stage), config.test.rho)
    alpha = config.test.alpha
    result = inference.test_2d(f, matrix, alpha)
    region = inference.confidence_region(f, matrix, alpha)
    record = dict(
        result.to_dict(),
        f=[float(v) for v in f],
        h=[float(v) for v in h_det],
        cov=matrix.to_dict(),
        mu=inference.mahalanobis_sq(h_det, matrix),
        power=inference.power_2d(h_det, matrix, alpha),
        region={"center": list(region.center), "radius_sq": region.radius_sq, "contains_h": region.contains(h_det)},
    )
    print(f"📊 Z = {result.statistic:.4f}, threshold = {result.threshold:.4f}, power = {record['power']:.4f}")
    print("✅ Edge detected" if result.reject else "✅ No edge detected")
    session.json_lines("test2d.jsonl", [record])
    return record


def _theory_dispersion(config, stage, spec):
    ctx = reference_context(config, stage)
    if spec.is_2d:
        return cov_matrix(ctx, spec.rho)
    return float(np.sqrt(gamma_sq(ctx, spec.u_kind, spec.rho, spec.edge.theta0, spec.u_scale)))


def roc(session, statistic=None):
    """Replicated null/alternative samples, histograms, ROC curves and Gaussianity checks"""
    config = session.config
    stage = setup(config)
    spec = experiment_spec(config, stage, statistic)
    print(f"🚀 Running {spec.n_null} + {spec.n_alt} replicates of {spec.statistic}")
    samples = montecarlo.run_replicates(spec, threads=session.threads)
    dispersion = _theory_dispersion(config, stage, spec)
    alpha = config.test.alpha

    alternative = spec.alternative
    empirical = montecarlo.empirical_roc(samples, dispersion if spec.is_2d else None, alternative)
    sign = 1.0
    if spec.is_2d:
        theory = montecarlo.theoretical_roc(samples.h_det, dispersion, "2d")
        power_theory = inference.power_2d(samples.h_det, dispersion, alpha)
        predicted = dispersion
    else:
        h_u = float(samples.h_det[0])
        sign = h_u or 1.0
        theory = montecarlo.theoretical_roc(h_u, dispersion, "1d", alternative=alternative)
        power_theory = inference.power_1d(h_u, dispersion, alpha, alternative)
        predicted = dispersion**2

    type_i = montecarlo.rejection_rate(samples.null_samples, dispersion, alpha, alternative, sign)
    power_empirical = montecarlo.rejection_rate(samples.alt_samples, dispersion, alpha, alternative, sign)
    results = {
        "statistic": spec.statistic,
        "alternative": alternative if not spec.is_2d else "two-sided",
        "auc_empirical": empirical.auc,
        "auc_theory": theory.auc,
        "max_gap": empirical.max_gap(theory),
        "type_i_rate": type_i,
        "type_i_band": montecarlo.binomial_band(alpha, spec.n_null),
        "power_empirical": power_empirical,
        "power_theory": power_theory,
        "power_band": montecarlo.binomial_band(power_theory, spec.n_alt),
        "spec_hash": samples.provenance["spec_hash"],
    }
    if not spec.is_2d:
        results["auc_closed_form"] = inference.auc_1d(float(samples.h_det[0]) / dispersion, alternative)

    print(f"📊 AUC empirical {empirical.auc:.4f} / theory {theory.auc:.4f}")
    print(f"📊 Power empirical {power_empirical:.4f} / theory {power_theory:.4f}, size {type_i:.4f}")
    session.table("roc.csv", pd.concat([empirical.to_frame(), theory.to_frame()], ignore_index=True))
    session.table("hist.csv", montecarlo.histogram_table(samples, _bins(config)))
    if len(samples.null_samples) >= 1000:
        session.table("gaussianity.csv", montecarlo.gaussianity_report(samples.null_samples, predicted))
    else:
        logger.warning("skipping the Gaussianity report: %d null samples (needs 1000)", len(samples.null_samples))
    print(f"📂 Wrote {io.write_samples(session.out_dir / 'samples.parquet', samples, config.config_hash())}")
    session.summary("roc.json", results)
    print("✅ ROC analysis complete")
    return results, samples, dispersion


def power_curve(session):
    """Theoretical power and AUC of both tests across noise levels"""
    config = session.config
    stage = setup(config)
    spec = experiment_spec(config, stage, "fu-linear" if config.test.statistic == "f2d" else None)
    print("🚀 Power against sigma")
    theory = montecarlo.EdgeTheory.compute(spec)
    sigmas = np.asarray(config.montecarlo.sigmas, dtype=float)
    table = montecarlo.power_vs_sigma(theory, sigmas, config.test.alpha, config.test.alternative)
    table["auc_2d"] = [montecarlo.theoretical_roc(theory.h, theory.cov_at(s), "2d").auc for s in sigmas]
    for row in table.itertuples():
        print(f"📊 sigma {row.sigma:8.3f}: 1D {row.power_1d:.4f}  2D {row.power_2d:.4f}")
    session.table("power_vs_sigma.csv", table)
    print("✅ Power curve complete")
    return table


def _isotropic_edge(session):
    config = session.config
    stage = setup(config)
    data = build_data(config)
    weights = influence_weights(data.grid, stage.kernel, stage.x0, config.test.rho, config.test.h)
    h = np.asarray(weights.apply(data.clean.values))
    matrix = cov_matrix(reference_context(config, stage), config.test.rho)
    if abs(matrix.c12) > 1e-6 * matrix.c11 or abs(matrix.c11 - matrix.c22) > 1e-6 * matrix.c11:
        raise PreconditionError("direction and magnitude uncertainty need an isotropic covariance (constant sigma)")
    return h, float(np.sqrt(matrix.nu_sq))


def uq_direction(session):
    """Density and coverage of the estimated edge direction"""
    level = session.config.test.level
    h, nu = _isotropic_edge(session)
    theta_h = float(np.arctan2(h[1], h[0]))
    print(f"🚀 Direction uncertainty, |H|/nu = {np.hypot(*h) / nu:.4f}")
    theta = theta_h + np.linspace(-np.pi, np.pi, 721)
    session.table("direction_pdf.csv", pd.DataFrame({"theta": theta, "pdf": inference.direction_pdf(theta, h, nu)}))
    omega = np.linspace(0.0, np.pi, 181)
    coverage = [inference.direction_coverage(w, h, nu) for w in omega]
    session.table("direction_coverage.csv", pd.DataFrame({"omega": omega, "coverage": coverage}))
    halfwidth = inference.direction_halfwidth(level, h, nu)
    print(f"📊 {level:.0%} direction halfwidth: {np.degrees(halfwidth):.2f} degrees")
    results = {"h": h.tolist(), "nu": nu, "level": level, "halfwidth_rad": halfwidth, "halfwidth_deg": np.degrees(halfwidth)}
    session.summary("uq_direction.json", results)
    print("✅ Direction uncertainty complete")
    return results


def uq_magnitude(session):
    """Density and coverage of the estimated edge magnitude"""
    level = session.config.test.level
    h, nu = _isotropic_edge(session)
    magnitude = float(np.hypot(*h))
    print(f"🚀 Magnitude uncertainty, |H|/nu = {magnitude / nu:.4f}")
    t = np.linspace(0.0, magnitude + 6.0 * nu, 601)
    session.table("magnitude_pdf.csv", pd.DataFrame({"t": t, "pdf": inference.magnitude_pdf(t, h, nu)}))
    r = np.linspace(0.0, magnitude, 201)
    session.table(
        "magnitude_coverage.csv",
        pd.DataFrame({"r": r, "coverage": [inference.magnitude_coverage(v, h, nu) for v in r]}),
    )
    halfwidth = inference.magnitude_halfwidth(level, h, nu)
    print(f"📊 {level:.0%} magnitude halfwidth: {halfwidth:.5g} ({halfwidth / magnitude:.3f} of |H|)")
    results = {"h": h.tolist(), "nu": nu, "level": level, "halfwidth": halfwidth, "relative_halfwidth": halfwidth / magnitude}
    session.summary("uq_magnitude.json", results)
    print("✅ Magnitude uncertainty complete")
    return results


def scan_stage(session):
    """Edge map of a macro reconstruction"""
    config = session.config
    section = config.scan
    sigma = None
    if section.nsr > 0:
        phantom, grid = config.build_phantom(), config.build_grid()
        sigma = sigma_for_nsr(sample_radon(phantom, grid), config.build_noise(), section.nsr)
        print(f"📊 sigma = {sigma:.5g} for NSR {section.nsr:.0%}")
    stage = setup(config, sigma)
    data = build_data(config, sigma)
    method = "direct" if session.force_direct else section.method
    print(f"🚀 Scanning {section.bbox} ({method} image)")
    image = fbp_image(data.select("full"), stage.kernel, section.bbox, section.step_fraction * data.grid.epsilon, method)
    ctx = CovContext.from_model((0.0, 0.0), stage.grid, stage.model, stage.kernel) if stage.model.sigma.level > 0 else None
    scan_config = ScanConfig(section.rho, section.stride, section.policy, section.q, section.fraction)
    edge_map = extract_edges(scan(image, scan_config, ctx), scan_config)

    frame = edge_map.to_frame()
    session.table("edgemap_mag.csv", frame[["x", "y", "mag"]])
    session.table("edgemap_theta.csv", frame[["x", "y", "theta", "sign"]])
    session.table("quiver.csv", edge_map.quiver_frame())
    if len(edge_map.shape) == 2:
        print(f"📂 Wrote {io.write_pgm(session.out_dir / 'edgemap_mag.pgm', edge_map.mag.reshape(edge_map.shape), session.header)}")

    disk = stage.phantom.disks[config.edge.disk]
    distances = distance_to_circle(edge_map.centers[edge_map.mask], disk.center, disk.radius)
    results = {
        "centers": int(len(edge_map.mask)),
        "masked": int(edge_map.mask.sum()),
        "median_distance": float(np.median(distances)) if len(distances) else None,
        "max_distance": float(np.max(distances)) if len(distances) else None,
        "epsilon": data.grid.epsilon,
        "sigma": stage.model.sigma.level,
    }
    print(f"📊 {results['masked']} of {results['centers']} centers above threshold")
    session.summary("scan.json", results)
    print("✅ Scan complete")
    return results, edge_map


# figure reproductions


def _auc_vs_sigma(session):
    # line profiles across the edge, whose jump sign is known
    rows = []
    for sigma in session.config.montecarlo.sigmas:
        child = session.reconfigured(
            noise={"sigma": float(sigma)}, test={"statistic": "fu-sgn", "alternative": "directional"}
        )
        child = child.child(f"sigma_{sigma:g}")
        results, _, _ = roc(child)
        rows.append({"sigma": sigma, "auc_empirical": results["auc_empirical"], "auc_theory": results["auc_theory"]})
    table = pd.DataFrame(rows)
    session.table("auc_vs_sigma.csv", table)
    return table


def _coverage(session):
    results, samples, dispersion = roc(session, "f2d")
    rows = []
    for alpha in (0.05, 0.32):
        rate = inference.coverage_rate(samples.alt_samples, samples.h_det, dispersion, alpha)
        rows.append({"alpha": alpha, "coverage": rate, "expected": 1 - alpha, "band": montecarlo.binomial_band(alpha, len(samples.alt_samples))})
        print(f"📊 Coverage at alpha {alpha}: {rate:.4f}")
    session.table("coverage.csv", pd.DataFrame(rows))
    return rows


def _uq_with_cloud(session, which):
    results = uq_direction(session) if which == "direction" else uq_magnitude(session)
    _, samples, _ = roc(session, "f2d")
    level = session.config.test.level
    if which == "direction":
        spread = montecarlo.empirical_direction_spread(samples.alt_samples, samples.h_det, level)
        print(f"📊 Empirical {level:.0%} angular spread: {np.degrees(spread):.2f} degrees")
    else:
        spread = montecarlo.empirical_magnitude_spread(samples.alt_samples, samples.h_det, level)
        print(f"📊 Empirical {level:.0%} magnitude spread: {spread:.5g}")
    session.summary(f"uq_{which}_empirical.json", {"theory": results, "empirical_spread": spread})
    return spread


FIGURES = {
    "fig1": recon,
    "fig3": lambda s: roc(s.reconfigured(test={"statistic": "fu-sgn", "u_scale": 1.0 / s.config.test.rho})),
    "fig5": _auc_vs_sigma,
    "fig7": lambda s: roc(s, "fu-linear"),
    "fig11": lambda s: roc(s, "f2d"),
    "fig12": lambda s: (cov_report(s), roc(s, "f2d")),
    "fig13": _coverage,
    "fig14a": lambda s: roc(s, "f2d"),
    "fig14b": power_curve,
    "fig15": lambda s: _uq_with_cloud(s, "direction"),
    "fig16": lambda s: _uq_with_cloud(s, "magnitude"),
    "fig17": lambda s: scan_stage(s.reconfigured(scan={"nsr": s.config.scan.nsr or 0.15, "policy": "relative", "fraction": 0.6})),
}


def repro(session, figure):
    """Data behind one figure of the edge-analysis experiments"""
    if figure not in FIGURES:
        raise PreconditionError(f"unknown figure {figure!r}; choose one of {', '.join(FIGURES)}")
    print(RULE)
    print(f"🚀 Reproducing {figure}")
    print(RULE)
    return FIGURES[figure](session)


COMMANDS = {
    "simulate": simulate,
    "recon": recon,
    "cov-report": cov_report,
    "test1d": test1d,
    "test2d": test2d,
    "roc": roc,
    "power-curve": power_curve,
    "uq-direction": uq_direction,
    "uq-magnitude": uq_magnitude,
    "scan": scan_stage,
}

# stage functions, not pytest cases
test1d.__test__ = False
test2d.__test__ = False
