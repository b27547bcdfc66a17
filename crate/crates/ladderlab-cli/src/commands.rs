//! Subcommand implementations: each wraps one library operation family,
//! routes spectra through the cache and emits deterministic CSV/JSON files.

use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ladderlab::counting::{
    count_sharp, count_smoothed, detect_peaks, singular_support_predict, upsilon1, verify_weyl,
    Branch, CountPolicy, LadderVerdict, PeakOptions, UpsilonSeries,
};
use ladderlab::dynamics::{
    flow, on_shell_state, period_set_closed_form, shell_residual, FlowOptions, Sheet,
};
use ladderlab::geometry::{
    classify_admissibility, AdmissibilityVerdict, ScalarField, ShiftField, SpatialMetricField,
    StandardStationaryMetric, Surface,
};
use ladderlab::liouville::{
    volume_closed_form_product, volume_montecarlo, volume_quadrature, weyl_prediction,
    MonteCarloOptions, PredictionMode, QuadratureOptions, VolumeResult,
};
use ladderlab::spectra::pencil::{pencil_joint_spectrum, PencilOptions};
use ladderlab::spectra::{
    constant_shift_torus_spectrum, product_mass_slice, sphere_laplace_spectrum,
    torus_laplace_spectrum, JointSpectrum, LambdaWindow, MassSlice, Provenance, SurfaceSpectrum,
};
use ladderlab::testfn::TestFunction;

use crate::cache::{write_atomic, SpectrumCache};
use crate::config::{
    canonical_json, format_float17, BackendConfig, OutputFormat, PsiProfile, RunConfig,
};
use crate::CliError;

pub struct Context {
    pub cfg: RunConfig,
    pub metric: StandardStationaryMetric,
}

impl Context {
    pub fn new(cfg: RunConfig) -> Result<Self, CliError> {
        cfg.validate()?;
        let metric = cfg.metric.resolve()?;
        metric.validate()?;
        std::fs::create_dir_all(&cfg.out_dir).map_err(|e| {
            CliError::Validation(format!("cannot create out dir {:?}: {e}", cfg.out_dir))
        })?;
        Ok(Context { cfg, metric })
    }

    pub fn policy(&self) -> CountPolicy {
        CountPolicy {
            branch: if self.cfg.include_negative_branch {
                Branch::Both
            } else {
                Branch::Positive
            },
            include_zero_modes: self.cfg.include_zero_modes,
        }
    }

    pub fn psi(&self) -> Result<TestFunction, CliError> {
        Ok(match self.cfg.psi_profile {
            PsiProfile::Bump => TestFunction::bump(self.cfg.psi_hat_radius)?,
            PsiProfile::BumpAutocorrelation => {
                TestFunction::bump_autocorrelation(self.cfg.psi_hat_radius)?
            }
        })
    }

    fn is_product_metric(&self) -> bool {
        matches!(self.metric.lapse, ScalarField::Constant { value } if value == 1.0)
            && matches!(self.metric.shift, ShiftField::Zero)
            && matches!(self.metric.spatial_metric, SpatialMetricField::Identity)
    }

    fn surface_volume(&self) -> Result<f64, CliError> {
        Ok(self.metric.scan_grid(None)?.total_weight())
    }

    fn auto_cutoff(&self, m_max: f64, lambda_radius: f64) -> f64 {
        if let Some(c) = self.cfg.surface_cutoff {
            return c;
        }
        let nu_max = self.cfg.nu.iter().cloned().fold(0.0f64, f64::max);
        ((nu_max * m_max + lambda_radius).powi(2) - m_max * m_max)
            .max(lambda_radius * lambda_radius)
            .sqrt()
            + 1.0
    }

    fn out_path(&self, name: &str) -> PathBuf {
        self.cfg.out_dir.join(name)
    }
}

/// Prepared eigenvalue source shared across the masses of one run.
enum PreparedBackend {
    Product(SurfaceSpectrum),
    ConstantShift { lapse: f64, beta: Vec<f64>, lengths: Vec<f64>, cutoff: f64 },
    Pencil(PencilOptions),
}

impl PreparedBackend {
    fn prepare(ctx: &Context, cutoff: f64) -> Result<Self, CliError> {
        match &ctx.cfg.backend {
            BackendConfig::Product => {
                if !ctx.is_product_metric() {
                    return Err(CliError::Validation(
                        "product backend requires N = 1, beta = 0 and the flat/round h".into(),
                    ));
                }
                let surf = match &ctx.metric.surface {
                    Surface::FlatTorus { lengths } | Surface::GriddedTorus { lengths, .. } => {
                        torus_laplace_spectrum(lengths, cutoff, ctx.cfg.lattice_budget)?
                    }
                    Surface::RoundSphere { dim, radius } => {
                        sphere_laplace_spectrum(*dim, *radius, cutoff)?
                    }
                };
                Ok(PreparedBackend::Product(surf))
            }
            BackendConfig::ConstantShift => {
                let lengths = ctx
                    .metric
                    .surface
                    .torus_lengths()
                    .ok_or_else(|| {
                        CliError::Validation(
                            "constant-shift backend requires a torus surface".into(),
                        )
                    })?
                    .to_vec();
                let ScalarField::Constant { value: lapse } = ctx.metric.lapse else {
                    return Err(CliError::Validation(
                        "constant-shift backend requires a constant lapse".into(),
                    ));
                };
                let beta = match &ctx.metric.shift {
                    ShiftField::Zero => vec![0.0; lengths.len()],
                    ShiftField::Constant { value } => value.clone(),
                    ShiftField::Grid { .. } => {
                        return Err(CliError::Validation(
                            "constant-shift backend requires a constant shift".into(),
                        ))
                    }
                };
                if !matches!(ctx.metric.spatial_metric, SpatialMetricField::Identity) {
                    return Err(CliError::Validation(
                        "constant-shift backend requires h = identity".into(),
                    ));
                }
                Ok(PreparedBackend::ConstantShift { lapse, beta, lengths, cutoff })
            }
            BackendConfig::Pencil { basis_cutoff, real_tol, cluster_tol } => {
                Ok(PreparedBackend::Pencil(PencilOptions {
                    basis_cutoff: *basis_cutoff,
                    real_tol: *real_tol,
                    cluster_tol: *cluster_tol,
                }))
            }
        }
    }

    fn compute(
        &self,
        ctx: &Context,
        m: u32,
        window: LambdaWindow,
    ) -> Result<MassSlice, CliError> {
        match self {
            PreparedBackend::Product(surf) => {
                Ok(product_mass_slice(surf, m as f64, window)?)
            }
            PreparedBackend::ConstantShift { lapse, beta, lengths, cutoff } => {
                Ok(constant_shift_torus_spectrum(
                    *lapse,
                    beta,
                    lengths,
                    m as f64,
                    *cutoff,
                    ctx.cfg.lattice_budget,
                )?)
            }
            PreparedBackend::Pencil(opts) => {
                let (slice, _) = pencil_joint_spectrum(&ctx.metric, m as f64, opts)?;
                Ok(slice)
            }
        }
    }

    fn provenance(&self) -> Provenance {
        match self {
            PreparedBackend::Product(_) => Provenance::Product,
            PreparedBackend::ConstantShift { .. } => Provenance::ConstantShift,
            PreparedBackend::Pencil(_) => Provenance::Pencil,
        }
    }
}

/// Cache subset identifying a spectrum artifact: everything that changes
/// the eigenvalues, nothing that only changes counting.
fn spectrum_subset(ctx: &Context, cutoff: f64, window: &LambdaWindow) -> Result<Value, CliError> {
    let window_value = match window {
        LambdaWindow::Full => json!("full"),
        LambdaWindow::Centered { nu, radius } => json!({"nu": nu, "radius": radius}),
    };
    Ok(json!({
        "schema_version": ctx.cfg.schema_version,
        "metric": serde_json::to_value(&ctx.metric)
            .map_err(|e| CliError::Validation(format!("metric serialization: {e}")))?,
        "backend": serde_json::to_value(&ctx.cfg.backend)
            .map_err(|e| CliError::Validation(format!("backend serialization: {e}")))?,
        "surface_cutoff": cutoff,
        "window": window_value,
    }))
}

/// Computes or loads the spectrum slices for `masses`.
fn obtain_spectrum(
    ctx: &Context,
    masses: &[u32],
    cutoff: f64,
    window: LambdaWindow,
) -> Result<(JointSpectrum, u32, u32), CliError> {
    let backend = PreparedBackend::prepare(ctx, cutoff)?;
    let subset = spectrum_subset(ctx, cutoff, &window)?;
    let mut cache = SpectrumCache::open(&ctx.cfg.effective_cache_dir(), subset)?;
    let mut joint = JointSpectrum::new(ctx.metric.n, backend.provenance());
    for &m in masses {
        let slice = cache.get_or_compute(m, || backend.compute(ctx, m, window))?;
        joint.insert_slice(m, slice);
    }
    cache.flush()?;
    Ok((joint, cache.hits, cache.misses))
}

fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    write_atomic(path, canonical_json(value).as_bytes())
}

/// Liouville volume used in predictions: closed form on product metrics,
/// quadrature otherwise.
fn prediction_volume(ctx: &Context, nu: f64) -> Result<VolumeResult, CliError> {
    if ctx.is_product_metric() {
        Ok(volume_closed_form_product(ctx.surface_volume()?, nu, ctx.metric.n)?)
    } else {
        Ok(volume_quadrature(&ctx.metric, nu, &QuadratureOptions::default())?)
    }
}

pub fn cmd_admissible(ctx: &Context) -> Result<(), CliError> {
    let mut rows = Vec::new();
    for &nu in &ctx.cfg.nu {
        let report = classify_admissibility(&ctx.metric, nu, ctx.cfg.grad_tol)?;
        println!(
            "nu {nu}: {:?} (bottom range [{:.6}, {:.6}], critical values {:?})",
            report.verdict, report.bottom_range.0, report.bottom_range.1, report.critical_values
        );
        rows.push(serde_json::to_value(&report).map_err(|e| {
            CliError::Validation(format!("report serialization: {e}"))
        })?);
    }
    write_json(&ctx.out_path("admissible.json"), &Value::Array(rows.clone()))?;
    if ctx.cfg.format == OutputFormat::Csv {
        let mut csv = String::from("nu,verdict,bottom_min,bottom_max,critical_values\n");
        for row in &rows {
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                format_float17(row["nu"].as_f64().unwrap()),
                row["verdict"].as_str().unwrap(),
                format_float17(row["bottom_range"][0].as_f64().unwrap()),
                format_float17(row["bottom_range"][1].as_f64().unwrap()),
                row["critical_values"]
                    .as_array()
                    .unwrap()
                    .iter()
                    .map(|v| format_float17(v.as_f64().unwrap()))
                    .collect::<Vec<_>>()
                    .join(";"),
            );
        }
        write_atomic(&ctx.out_path("admissible.csv"), csv.as_bytes())?;
    }
    Ok(())
}

pub fn cmd_spectrum(ctx: &Context) -> Result<(), CliError> {
    let masses = ctx.cfg.mass_range.masses();
    let m_max = *masses.last().unwrap() as f64;
    let cutoff = ctx.auto_cutoff(m_max, ctx.cfg.window_c + ctx.cfg.lambda_margin);
    let (spec, hits, misses) = obtain_spectrum(ctx, &masses, cutoff, LambdaWindow::Full)?;
    let mut summary = Vec::new();
    for &m in &masses {
        let slice = spec.slice(m)?;
        println!(
            "m {m}: {} lines, complete to |lambda| <= {:.6}",
            slice.entries.len(),
            slice.lambda_complete
        );
        summary.push(json!({
            "m": m,
            "lines": slice.entries.len(),
            "lambda_complete": slice.lambda_complete,
        }));
    }
    println!("cache: {hits} hits, {misses} misses");
    write_json(
        &ctx.out_path("spectrum_summary.json"),
        &json!({"cutoff": cutoff, "cache_hits": hits, "cache_misses": misses, "masses": summary}),
    )
}

pub fn cmd_count(ctx: &Context) -> Result<(), CliError> {
    let masses = ctx.cfg.mass_range.masses();
    let m_max = *masses.last().unwrap() as f64;
    let cutoff = ctx.auto_cutoff(m_max, ctx.cfg.window_c + ctx.cfg.lambda_margin);
    let (spec, _, _) = obtain_spectrum(ctx, &masses, cutoff, LambdaWindow::Full)?;
    let policy = ctx.policy();
    let branch_factor = if ctx.cfg.include_negative_branch { 2.0 } else { 1.0 };
    let psi = ctx.psi()?;
    for (i, &nu) in ctx.cfg.nu.iter().enumerate() {
        let mu = prediction_volume(ctx, nu)?.value;
        let mut csv = String::from("m,count,prediction,relative_error\n");
        let mut smoothed_csv = String::from("m,value,tail_bound,prediction,relative_error\n");
        for &m in &masses {
            let count = count_sharp(&spec, nu, ctx.cfg.window_c, m, policy)?;
            let pred = branch_factor
                * weyl_prediction(mu, ctx.cfg.window_c, m as f64, ctx.metric.n, PredictionMode::Sharp);
            let rel = (count as f64 - pred).abs() / pred.abs().max(1e-300);
            let _ = writeln!(
                csv,
                "{m},{count},{},{}",
                format_float17(pred),
                format_float17(rel)
            );
            if let Ok(sc) = count_smoothed(&spec, nu, &psi, m, policy, None) {
                let spred = branch_factor
                    * weyl_prediction(mu, psi.hat0(), m as f64, ctx.metric.n, PredictionMode::Smoothed);
                let srel = (sc.value - spred).abs() / spred.abs().max(1e-300);
                let _ = writeln!(
                    smoothed_csv,
                    "{m},{},{},{},{}",
                    format_float17(sc.value),
                    format_float17(sc.tail_bound),
                    format_float17(spred),
                    format_float17(srel)
                );
            }
        }
        write_atomic(&ctx.out_path(&format!("count_nu{i}.csv")), csv.as_bytes())?;
        write_atomic(
            &ctx.out_path(&format!("count_smoothed_nu{i}.csv")),
            smoothed_csv.as_bytes(),
        )?;
        println!("nu {nu}: counts written (mu = {mu:.6})");
    }
    Ok(())
}

pub fn cmd_verify_weyl(ctx: &Context) -> Result<(), CliError> {
    let masses = ctx.cfg.mass_range.masses();
    let m_max = *masses.last().unwrap() as f64;
    let c = ctx.cfg.window_c;
    // coverage must also feed the clustering diagnostic window
    let radius = c.max((5.0 * c).max(5.0)) + ctx.cfg.lambda_margin;
    let cutoff = ctx.auto_cutoff(m_max, radius);
    let policy = ctx.policy();
    for (i, &nu) in ctx.cfg.nu.iter().enumerate() {
        let gate = classify_admissibility(&ctx.metric, nu, ctx.cfg.grad_tol)?;
        match gate.verdict {
            AdmissibilityVerdict::CriticalLevel => {
                return Err(CliError::Validation(format!(
                    "nu = {nu} is a critical level of the bottom height \
                     (critical values {:?}); the Weyl verification is undefined there",
                    gate.critical_values
                )));
            }
            AdmissibilityVerdict::EmptyLadder => {
                return Err(CliError::Validation(format!(
                    "nu = {nu} admits no ladder: it lies below the bottom range [{:.6}, {:.6}]",
                    gate.bottom_range.0, gate.bottom_range.1
                )));
            }
            AdmissibilityVerdict::Admissible => {}
        }
        let (spec, _, _) = obtain_spectrum(ctx, &masses, cutoff, LambdaWindow::Full)?;
        let mu = prediction_volume(ctx, nu)?.value;
        let report = verify_weyl(&spec, nu, c, mu, &masses, ctx.cfg.verify_tolerance, policy)?;
        let verdict_text = match report.verdict {
            LadderVerdict::Pass => "PASS",
            LadderVerdict::Fail => "FAIL",
            LadderVerdict::InconclusiveClustering => "INCONCLUSIVE-CLUSTERING",
        };
        println!(
            "nu {nu}: {verdict_text} — fitted a0 {:.6} vs predicted {:.6} (rel err {:.3}%), fit residual {:.3}%",
            report.fit.a0,
            report.fit.prediction.unwrap(),
            100.0 * report.fit.rel_error.unwrap(),
            100.0 * report.fit.residual_rel
        );
        if report.verdict == LadderVerdict::InconclusiveClustering {
            println!(
                "  clustering diagnostic: median multiplicity {:.0}, gap cv {:.3}, progression step {:.4}",
                report.cluster.median_multiplicity,
                report.cluster.gap_cv,
                report.cluster.progression_step
            );
        }
        let value = serde_json::to_value(&report)
            .map_err(|e| CliError::Validation(format!("report serialization: {e}")))?;
        write_json(&ctx.out_path(&format!("verify_nu{i}.json")), &value)?;
        let mut csv = String::from("m,count,prediction,relative_error\n");
        for ((&m, &count), &pred) in report
            .masses
            .iter()
            .zip(&report.counts)
            .zip(&report.predictions)
        {
            let rel = (count as f64 - pred).abs() / pred.abs().max(1e-300);
            let _ = writeln!(
                csv,
                "{m},{count},{},{}",
                format_float17(pred),
                format_float17(rel)
            );
        }
        write_atomic(&ctx.out_path(&format!("verify_counts_nu{i}.csv")), csv.as_bytes())?;
    }
    Ok(())
}

pub fn cmd_upsilon(ctx: &Context) -> Result<(), CliError> {
    let psi = ctx.psi()?;
    let masses: Vec<u32> = (0..=ctx.cfg.m_max).collect();
    let policy = CountPolicy { branch: Branch::Both, include_zero_modes: ctx.cfg.include_zero_modes };
    if let Some(eps_min) = ctx.cfg.eps_sweep.iter().cloned().reduce(f64::min) {
        if eps_min * (ctx.cfg.m_max as f64) < 5.0 {
            println!(
                "note: smallest eps barely damps the mass truncation (eps * m_max = {:.1} < 5); \
                 expect ringing around strong singular points",
                eps_min * ctx.cfg.m_max as f64
            );
        }
    }
    for (i, &nu) in ctx.cfg.nu.iter().enumerate() {
        let window = LambdaWindow::Centered { nu, radius: ctx.cfg.upsilon_window };
        let cutoff = ctx.auto_cutoff(ctx.cfg.m_max as f64, ctx.cfg.upsilon_window + 1.0);
        let (spec, hits, misses) = obtain_spectrum(ctx, &masses, cutoff, window)?;
        let mut sweeps: Vec<UpsilonSeries> = Vec::new();
        for (j, &eps) in ctx.cfg.eps_sweep.iter().enumerate() {
            let series = upsilon1(
                &spec,
                nu,
                &psi,
                ctx.cfg.s_points,
                ctx.cfg.m_max,
                eps,
                policy,
            )?;
            let mut csv = String::from("s,re,im,modulus\n");
            for (k, &s) in series.s.iter().enumerate() {
                let (re, im) = series.values[k];
                let _ = writeln!(
                    csv,
                    "{},{},{},{}",
                    format_float17(s),
                    format_float17(re),
                    format_float17(im),
                    format_float17((re * re + im * im).sqrt())
                );
            }
            write_atomic(
                &ctx.out_path(&format!("upsilon_nu{i}_eps{j}.csv")),
                csv.as_bytes(),
            )?;
            sweeps.push(series);
        }
        let peaks = if sweeps.len() >= 2 {
            Some(detect_peaks(&sweeps, &PeakOptions::default())?)
        } else {
            None
        };
        let mut period_set = None;
        let predicted = if ctx.is_product_metric() {
            let periods = period_set_closed_form(&ctx.metric.surface, nu, 2)?;
            let points =
                singular_support_predict(&periods.periods(), nu, psi.hat_radius())?;
            period_set = Some(periods);
            Some(points)
        } else {
            None
        };
        if let (Some(p), Some(q)) = (&peaks, &predicted) {
            println!(
                "nu {nu}: continued peaks {:?}, predicted singular points {:?}",
                p.continued
                    .iter()
                    .map(|v| format!("{v:.4}"))
                    .collect::<Vec<_>>(),
                q.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>()
            );
        }
        let report = json!({
            "nu": nu,
            "eps_sweep": ctx.cfg.eps_sweep,
            "m0_term": sweeps.first().map(|s| s.m0_term),
            "peaks": peaks.as_ref().map(|p| serde_json::to_value(p).unwrap()),
            "period_set": period_set.map(|p| serde_json::to_value(&p).unwrap()),
            "predicted_singular_support": predicted,
            "cache_hits": hits,
            "cache_misses": misses,
        });
        write_json(&ctx.out_path(&format!("upsilon_report_nu{i}.json")), &report)?;
    }
    Ok(())
}

pub fn cmd_volume(ctx: &Context) -> Result<(), CliError> {
    for (i, &nu) in ctx.cfg.nu.iter().enumerate() {
        let closed = if ctx.is_product_metric() && nu > 1.0 {
            Some(volume_closed_form_product(ctx.surface_volume()?, nu, ctx.metric.n)?)
        } else {
            None
        };
        let quad = volume_quadrature(&ctx.metric, nu, &QuadratureOptions::default())?;
        let mut mc_opts = MonteCarloOptions::new(ctx.cfg.mc_samples, ctx.cfg.seed);
        mc_opts.dq = ctx.cfg.dq;
        let mc = volume_montecarlo(&ctx.metric, nu, &mc_opts)?;
        println!("nu {nu}:");
        if let Some(cf) = &closed {
            println!("  closed form   {:.12}", cf.value);
        }
        println!(
            "  quadrature    {:.12} +- {:.3e} ({} nodes)",
            quad.value, quad.error_estimate, quad.points
        );
        println!(
            "  monte carlo   {:.12} +- {:.3e} ({} samples, seed {})",
            mc.value, mc.error_estimate, mc.points, ctx.cfg.seed
        );
        for w in quad.warnings.iter().chain(&mc.warnings) {
            println!("  note: {w}");
        }
        let value = json!({
            "nu": nu,
            "closed_form": closed.map(|c| serde_json::to_value(&c).unwrap()),
            "quadrature": serde_json::to_value(&quad).unwrap(),
            "monte_carlo": serde_json::to_value(&mc).unwrap(),
        });
        write_json(&ctx.out_path(&format!("volume_nu{i}.json")), &value)?;
    }
    Ok(())
}

pub fn cmd_flow(ctx: &Context) -> Result<(), CliError> {
    let fc = &ctx.cfg.flow;
    let state = on_shell_state(&ctx.metric, &fc.x0, &fc.xi0, Sheet::Future)?;
    let mut opts = FlowOptions::default();
    if let Some(step) = fc.step {
        opts.step = step;
    }
    let traj = flow(&ctx.metric, &state, fc.duration, &opts)?;
    let d = ctx.metric.surface_dim();
    let mut csv = String::from("s,t");
    for a in 0..d {
        let _ = write!(csv, ",x{a}");
    }
    for a in 0..d {
        let _ = write!(csv, ",xi{a}");
    }
    csv.push_str(",tau,shell_residual\n");
    for (k, st) in traj.states.iter().enumerate() {
        let res = shell_residual(&ctx.metric, st)?;
        let _ = write!(csv, "{},{}", format_float17(traj.s[k]), format_float17(st.t));
        for a in 0..d {
            let _ = write!(csv, ",{}", format_float17(st.x[a]));
        }
        for a in 0..d {
            let _ = write!(csv, ",{}", format_float17(st.xi[a]));
        }
        let _ = writeln!(csv, ",{},{}", format_float17(st.tau), format_float17(res));
    }
    write_atomic(&ctx.out_path("trajectory.csv"), csv.as_bytes())?;
    println!(
        "flow: {} samples over duration {}, shell drift {:.3e}, tau drift {:.3e}",
        traj.states.len(),
        fc.duration,
        traj.shell_drift,
        traj.tau_drift
    );
    Ok(())
}
