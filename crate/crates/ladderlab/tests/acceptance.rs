//! Acceptance suite: one test per quantitative criterion, each printing a
//! pass/fail line with the measured figures. Tolerances are pinned here.

use std::f64::consts::{PI, TAU};
use std::time::Instant;

use ladderlab::counting::{
    circular_distance, count_sharp, count_smoothed, detect_peaks, singular_support_predict,
    upsilon1, verify_weyl, CountPolicy, LadderVerdict, PeakOptions,
};
use ladderlab::dynamics::{
    flow, lorentz_diagnostics, on_shell_state, period_set_closed_form, FlowOptions, Sheet,
};
use ladderlab::geometry::{
    classify_admissibility, AdmissibilityVerdict, ScalarField, ShiftField, SpatialMetricField,
    StandardStationaryMetric, Surface,
};
use ladderlab::liouville::{
    volume_closed_form_product, volume_ellipsoid_at_mass, volume_montecarlo, volume_quadrature,
    MonteCarloOptions, QuadratureOptions,
};
use ladderlab::spectra::pencil::{pencil_joint_spectrum, PencilOptions};
use ladderlab::spectra::{
    constant_shift_torus_spectrum, product_joint_spectrum, sphere_laplace_spectrum,
    torus_laplace_spectrum, JointSpectrum, LambdaWindow,
};
use ladderlab::testfn::TestFunction;

const LATTICE_BUDGET: u64 = 1 << 28;

fn square_torus() -> Surface {
    Surface::FlatTorus { lengths: vec![TAU, TAU] }
}

fn torus_cutoff_for(nu: f64, m_max: f64, radius: f64) -> f64 {
    ((nu * m_max + radius).powi(2) - m_max * m_max).sqrt() + 1.0
}

/// Criterion 1: sharp Weyl law on the product T^2 at nu = sqrt2, C = 0.5;
/// fitted slope within 5% of 2 pi sqrt2, under 30 s single-threaded.
#[test]
fn acceptance_01_sharp_weyl_law() {
    let clock = Instant::now();
    let nu = 2f64.sqrt();
    let c = 0.5;
    let masses: Vec<u32> = (50..=200).step_by(10).collect();
    let cutoff = torus_cutoff_for(nu, 200.0, c + 1.0);
    let surf = torus_laplace_spectrum(&[TAU, TAU], cutoff, LATTICE_BUDGET).unwrap();
    let spec = product_joint_spectrum(
        &surf,
        &masses,
        LambdaWindow::Centered { nu, radius: c + 0.75 },
        3,
    )
    .unwrap();
    let mu = volume_closed_form_product(4.0 * PI * PI, nu, 3).unwrap().value;
    let report = verify_weyl(&spec, nu, c, mu, &masses, 0.05, CountPolicy::default()).unwrap();
    let slope_expect = 2.0 * 2f64.sqrt() * PI;
    let rel = report.fit.rel_error.unwrap();
    let elapsed = clock.elapsed().as_secs_f64();
    println!(
        "acceptance 01 sharp-weyl: {} — fitted a0 = {:.4} vs 4 pi C nu = {:.4}, rel err {:.3}%, {:.2} s",
        if report.verdict == LadderVerdict::Pass { "PASS" } else { "FAIL" },
        report.fit.a0,
        slope_expect,
        100.0 * rel,
        elapsed
    );
    assert_eq!(report.verdict, LadderVerdict::Pass);
    assert!(rel < 0.05, "fitted slope off by {:.3}%", 100.0 * rel);
    assert!(elapsed < 30.0, "runtime budget exceeded: {elapsed:.1} s");
}

/// Criterion 2: smoothed Weyl law with a bump of hat radius 0.5; relative
/// deviation of N_psi(m)/m from (2 pi)^{-2} mu below 2% on average over
/// m in [100, 200], and the residual after removing the leading term grows
/// slower than m (log-log slope below 0.7).
#[test]
fn acceptance_02_smoothed_weyl_law() {
    let nu = 2f64.sqrt();
    let psi = TestFunction::bump(0.5).unwrap();
    let masses: Vec<u32> = (100..=200).step_by(5).collect();
    let radius = psi.eval_radius();
    let cutoff = torus_cutoff_for(nu, 200.0, radius + 1.0);
    let surf = torus_laplace_spectrum(&[TAU, TAU], cutoff, LATTICE_BUDGET).unwrap();
    let spec =
        product_joint_spectrum(&surf, &masses, LambdaWindow::Centered { nu, radius }, 3)
            .unwrap();
    let mu = volume_closed_form_product(4.0 * PI * PI, nu, 3).unwrap().value;
    let a0 = mu / (TAU * TAU);
    let mut deviations = Vec::new();
    let mut residuals = Vec::new();
    for &m in &masses {
        let sc = count_smoothed(&spec, nu, &psi, m, CountPolicy::both_branches(), None).unwrap();
        deviations.push((sc.value / m as f64 - a0).abs() / a0);
        residuals.push((m as f64, sc.value - a0 * m as f64));
    }
    let mean_dev = deviations.iter().sum::<f64>() / deviations.len() as f64;
    // binned RMS residual slope in log-log coordinates
    let bins = 5;
    let per = residuals.len() / bins;
    let mut pts = Vec::new();
    for b in 0..bins {
        let chunk = &residuals[b * per..((b + 1) * per).min(residuals.len())];
        let mean_m = chunk.iter().map(|p| p.0).sum::<f64>() / chunk.len() as f64;
        let rms =
            (chunk.iter().map(|p| p.1 * p.1).sum::<f64>() / chunk.len() as f64).sqrt();
        pts.push((mean_m.ln(), rms.max(1e-300).ln()));
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    println!(
        "acceptance 02 smoothed-weyl: {} — mean rel deviation {:.4}%, residual slope {:.2}",
        if mean_dev < 0.02 && slope < 0.7 { "PASS" } else { "FAIL" },
        100.0 * mean_dev,
        slope
    );
    assert!(mean_dev < 0.02, "mean deviation {:.3}%", 100.0 * mean_dev);
    assert!(slope < 0.7, "residual slope {slope:.2} not below 1 with margin 0.3");
}

/// Criterion 3: three-way Liouville volume agreement on the product T^2 and
/// quadrature-vs-Monte-Carlo agreement for a cosine lapse, inside 10 s.
#[test]
fn acceptance_03_volume_three_way() {
    let clock = Instant::now();
    let nu = 2f64.sqrt();
    let product = StandardStationaryMetric::product(square_torus());
    let cf = volume_closed_form_product(4.0 * PI * PI, nu, 3).unwrap();
    let exact = 8.0 * 2f64.sqrt() * PI.powi(3);
    assert!((cf.value - exact).abs() < 1e-10 * exact);
    let quad = volume_quadrature(&product, nu, &QuadratureOptions::default()).unwrap();
    let rel_q = (quad.value - cf.value).abs() / cf.value;
    let mc = volume_montecarlo(&product, nu, &MonteCarloOptions::new(1_000_000, 2024)).unwrap();
    let mc_band = 3.0 * mc.error_estimate + 1e-9 * cf.value;
    let mc_ok = (mc.value - cf.value).abs() <= mc_band;

    let cosine = StandardStationaryMetric {
        n: 3,
        surface: square_torus(),
        lapse: ScalarField::Cosine { base: 1.0, amplitude: 0.2, axis: 0, harmonic: 1 },
        shift: ShiftField::Zero,
        spatial_metric: SpatialMetricField::Identity,
    };
    let qc = volume_quadrature(&cosine, 1.5, &QuadratureOptions::default()).unwrap();
    let mcc = volume_montecarlo(&cosine, 1.5, &MonteCarloOptions::new(1_000_000, 2024)).unwrap();
    let band = 3.0 * (mcc.error_estimate + qc.error_estimate) + 1e-9 * qc.value;
    let cosine_ok = (mcc.value - qc.value).abs() <= band;
    let elapsed = clock.elapsed().as_secs_f64();
    println!(
        "acceptance 03 volumes: {} — closed {:.6}, quad rel {:.2e}, mc off by {:.2e} (3sig {:.2e}); cosine |q-mc| {:.2e} (band {:.2e}); {:.2} s",
        if rel_q <= 1e-8 && mc_ok && cosine_ok { "PASS" } else { "FAIL" },
        cf.value,
        rel_q,
        (mc.value - cf.value).abs(),
        mc_band,
        (mcc.value - qc.value).abs(),
        band,
        elapsed
    );
    assert!(rel_q <= 1e-8, "quadrature relative error {rel_q:.3e}");
    assert!(mc_ok, "Monte Carlo outside 3 sigma of the closed form");
    assert!(cosine_ok, "cosine metric: quadrature vs Monte Carlo beyond 3 sigma");
    assert!(elapsed < 10.0, "runtime budget exceeded: {elapsed:.1} s");
}

/// Criterion 4: mass scaling of the level-set measure through the ellipsoid
/// construction, relative error below 1e-8 for m in {2, 5, 10}.
#[test]
fn acceptance_04_mass_scaling_law() {
    for (metric, nu, n) in [
        (StandardStationaryMetric::product(square_torus()), 2f64.sqrt(), 3usize),
        (
            StandardStationaryMetric {
                n: 3,
                surface: square_torus(),
                lapse: ScalarField::Cosine { base: 1.0, amplitude: 0.2, axis: 0, harmonic: 1 },
                shift: ShiftField::Zero,
                spatial_metric: SpatialMetricField::Identity,
            },
            1.5,
            3,
        ),
    ] {
        let base = volume_ellipsoid_at_mass(&metric, nu, 1.0, 1e-4 * nu, None).unwrap();
        let mut worst: f64 = 0.0;
        for mass in [2.0, 5.0, 10.0] {
            let v = volume_ellipsoid_at_mass(&metric, nu, mass, 1e-4 * nu, None).unwrap();
            let expect = mass.powi(n as i32 - 2) * base;
            worst = worst.max((v - expect).abs() / expect.abs());
        }
        println!(
            "acceptance 04 scaling (nu = {nu:.3}): {} — worst rel err {worst:.2e}",
            if worst <= 1e-8 { "PASS" } else { "FAIL" }
        );
        assert!(worst <= 1e-8, "scaling law violated: {worst:.3e}");
    }
}

/// Criterion 5: pencil vs closed form on the constant-shift torus. Every
/// closed-form eigenvalue inside half the basis cutoff is matched to 1e-8
/// and all imaginary parts stay below 1e-10.
#[test]
fn acceptance_05_pencil_vs_closed_form() {
    let metric = StandardStationaryMetric {
        n: 3,
        surface: square_torus(),
        lapse: ScalarField::Constant { value: 1.0 },
        shift: ShiftField::Constant { value: vec![0.3, 0.0] },
        spatial_metric: SpatialMetricField::Identity,
    };
    let opts = PencilOptions { basis_cutoff: 6.0, ..Default::default() };
    let mut worst_gap: f64 = 0.0;
    let mut worst_imag: f64 = 0.0;
    for m in 1..=10u32 {
        let (slice, diag) = pencil_joint_spectrum(&metric, m as f64, &opts).unwrap();
        worst_imag = worst_imag.max(diag.max_imag_abs);
        let oracle = constant_shift_torus_spectrum(
            1.0,
            &[0.3, 0.0],
            &[TAU, TAU],
            m as f64,
            opts.basis_cutoff / 2.0,
            LATTICE_BUDGET,
        )
        .unwrap();
        for want in &oracle.entries {
            let best = slice
                .entries
                .iter()
                .map(|e| (e.lambda - want.lambda).abs())
                .fold(f64::INFINITY, f64::min);
            worst_gap = worst_gap.max(best);
        }
    }
    println!(
        "acceptance 05 pencil: {} — worst eigenvalue gap {:.2e}, worst |Im| {:.2e}",
        if worst_gap < 1e-8 && worst_imag < 1e-10 { "PASS" } else { "FAIL" },
        worst_gap,
        worst_imag
    );
    assert!(worst_gap < 1e-8, "closed-form eigenvalue missed by {worst_gap:.3e}");
    assert!(worst_imag < 1e-10, "imaginary part {worst_imag:.3e}");
}

/// Criterion 6: the periodic geodesic flow of S^3 must trigger the
/// inconclusive-clustering verdict, while the torus control stays clean.
#[test]
fn acceptance_06_sphere_clustering_detection() {
    let nu = 2f64.sqrt();
    let c = 0.5;
    let masses: Vec<u32> = (50..=200).step_by(10).collect();
    let cutoff = torus_cutoff_for(nu, 200.0, 6.0);
    let sphere_surf = sphere_laplace_spectrum(3, 1.0, cutoff).unwrap();
    let sphere_spec = product_joint_spectrum(&sphere_surf, &masses, LambdaWindow::Full, 4).unwrap();
    let mu_sphere = volume_closed_form_product(2.0 * PI * PI, nu, 4).unwrap().value;
    let sphere_report =
        verify_weyl(&sphere_spec, nu, c, mu_sphere, &masses, 0.05, CountPolicy::default())
            .unwrap();

    let torus_surf = torus_laplace_spectrum(&[TAU, TAU], cutoff, LATTICE_BUDGET).unwrap();
    let torus_spec = product_joint_spectrum(
        &torus_surf,
        &masses,
        LambdaWindow::Centered { nu, radius: 6.0 },
        3,
    )
    .unwrap();
    let mu_torus = volume_closed_form_product(4.0 * PI * PI, nu, 3).unwrap().value;
    let torus_report =
        verify_weyl(&torus_spec, nu, c, mu_torus, &masses, 0.05, CountPolicy::default()).unwrap();
    // At nu = sqrt2 the S^3 windows bite exactly one progression cluster per
    // mass, so the two-term fit looks smooth while sitting ~29% off the
    // Liouville prediction; the spectral-structure diagnostic is what must
    // catch the degeneracy.
    let misleading = sphere_report.fit.rel_error.unwrap() > 0.05
        || sphere_report.fit.residual_rel > 0.05;
    println!(
        "acceptance 06 clustering: {} — S^3 verdict {:?} (median mult {:.0}, gap cv {:.3}, fit residual {:.2}%, a0 off by {:.1}%), torus verdict {:?}",
        if sphere_report.verdict == LadderVerdict::InconclusiveClustering
            && torus_report.verdict == LadderVerdict::Pass
            && misleading
        {
            "PASS"
        } else {
            "FAIL"
        },
        sphere_report.verdict,
        sphere_report.cluster.median_multiplicity,
        sphere_report.cluster.gap_cv,
        100.0 * sphere_report.fit.residual_rel,
        100.0 * sphere_report.fit.rel_error.unwrap(),
        torus_report.verdict
    );
    assert_eq!(sphere_report.verdict, LadderVerdict::InconclusiveClustering);
    assert!(sphere_report.cluster.clustered);
    assert!(misleading, "sphere fit unexpectedly certifiable");
    assert_eq!(torus_report.verdict, LadderVerdict::Pass);
}

/// Criterion 7: singular support of the generating function. Every peak of
/// |Upsilon| detected by eps continuation lies within one 4096-grid cell of
/// the period-set prediction. Two candidate placements exist for the point
/// contributed by a period s': the bare phase nu s' and the orbit action
/// (nu - 1/nu) s'; they coincide mod 2 pi at nu = sqrt2 but differ at
/// nu = sqrt3, and the computed spectra single out the action placement.
#[test]
fn acceptance_07_upsilon_singular_support() {
    let nu = 3f64.sqrt();
    let m_max = 300u32;
    let s_points = 4096usize;
    let hat_radius = 9.0;
    let psi = TestFunction::bump(hat_radius).unwrap();
    let window: f64 = 45.0;
    let masses: Vec<u32> = (0..=m_max).collect();
    let cutoff = torus_cutoff_for(nu, m_max as f64, window + 1.0);
    let surf = torus_laplace_spectrum(&[TAU, TAU], cutoff, LATTICE_BUDGET).unwrap();
    let spec = product_joint_spectrum(
        &surf,
        &masses,
        LambdaWindow::Centered { nu, radius: window },
        3,
    )
    .unwrap();
    let sweeps: Vec<_> = [0.1, 0.05, 0.02]
        .iter()
        .map(|&eps| {
            upsilon1(&spec, nu, &psi, s_points, m_max, eps, CountPolicy::both_branches())
                .unwrap()
        })
        .collect();
    let peaks = detect_peaks(&sweeps, &PeakOptions::default()).unwrap();
    let periods = period_set_closed_form(&square_torus(), nu, 2).unwrap();
    let predicted = singular_support_predict(&periods.periods(), nu, hat_radius).unwrap();
    let cell = TAU / s_points as f64;
    let mut worst_cells: f64 = 0.0;
    for &p in &peaks.continued {
        let nearest = predicted
            .iter()
            .map(|&q| circular_distance(p, q))
            .fold(f64::INFINITY, f64::min);
        worst_cells = worst_cells.max(nearest / cell);
    }
    // all predicted points inside the transform support are realized
    let mut missing = Vec::new();
    for &q in &predicted {
        if !peaks.continued.iter().any(|&p| circular_distance(p, q) <= cell) {
            missing.push(q);
        }
    }
    // the verbatim nu s' placement (0.7623 here) attracts no peak
    let naive = (nu * TAU * nu / (nu * nu - 1.0).sqrt()).rem_euclid(TAU);
    let naive_hit = peaks
        .continued
        .iter()
        .any(|&p| circular_distance(p, naive) <= 10.0 * cell);
    println!(
        "acceptance 07 singular support: {} — peaks {:?}, predicted {:?}, worst distance {:.2} cells; verbatim point {:.4} attracts no peak: {}",
        if worst_cells <= 1.0 && missing.is_empty() && !naive_hit { "PASS" } else { "FAIL" },
        peaks.continued.iter().map(|p| format!("{p:.4}")).collect::<Vec<_>>(),
        predicted.iter().map(|p| format!("{p:.4}")).collect::<Vec<_>>(),
        worst_cells,
        naive,
        !naive_hit
    );
    assert!(!peaks.continued.is_empty(), "no peaks detected");
    assert!(worst_cells <= 1.0, "peak strays {worst_cells:.2} cells from prediction");
    assert!(missing.is_empty(), "predicted points without a peak: {missing:?}");
    assert!(
        !naive_hit,
        "a peak appeared at the verbatim nu s' placement, contradicting the analysis"
    );
}

/// Criterion 8: conservation and flow properties on N = 1 + 0.1 cos(x).
#[test]
fn acceptance_08_flow_conservation() {
    let metric = StandardStationaryMetric {
        n: 2,
        surface: Surface::FlatTorus { lengths: vec![TAU] },
        lapse: ScalarField::Cosine { base: 1.0, amplitude: 0.1, axis: 0, harmonic: 1 },
        shift: ShiftField::Zero,
        spatial_metric: SpatialMetricField::Identity,
    };
    let state = on_shell_state(&metric, &[0.7], &[1.1], Sheet::Future).unwrap();
    let opts = FlowOptions::default();
    let traj = flow(&metric, &state, 100.0, &opts).unwrap();
    let back = flow(&metric, traj.last(), -100.0, &opts).unwrap();
    let end = back.last();
    let reversal = (end.x[0] - state.x[0]).abs()
        + (end.xi[0] - state.xi[0]).abs()
        + (end.t - state.t).abs();
    let mut worst_roundtrip: f64 = 0.0;
    for st in &traj.states {
        let (nu, v) = lorentz_diagnostics(&metric, st).unwrap();
        let f = metric.bottom_height_sq_at(&st.x);
        worst_roundtrip = worst_roundtrip.max((f.sqrt() / (1.0 - v * v).sqrt() - nu).abs());
    }
    let ok = traj.shell_drift < 1e-9
        && traj.tau_drift < 1e-9
        && reversal < 1e-8
        && worst_roundtrip < 1e-10;
    println!(
        "acceptance 08 flow: {} — shell drift {:.2e}, tau drift {:.2e}, reversal {:.2e}, lorentz roundtrip {:.2e}",
        if ok { "PASS" } else { "FAIL" },
        traj.shell_drift,
        traj.tau_drift,
        reversal,
        worst_roundtrip
    );
    assert!(traj.shell_drift < 1e-9);
    assert!(traj.tau_drift < 1e-9);
    assert!(reversal < 1e-8);
    assert!(worst_roundtrip < 1e-10);
}

/// Criterion 9: admissibility classification on product and cosine metrics.
#[test]
fn acceptance_09_admissibility() {
    let tol = 1e-6;
    let mut ok = true;
    for metric in [
        StandardStationaryMetric::product(square_torus()),
        StandardStationaryMetric::product(Surface::RoundSphere { dim: 2, radius: 1.0 }),
    ] {
        for (nu, want) in [
            (0.5, AdmissibilityVerdict::EmptyLadder),
            (0.9, AdmissibilityVerdict::EmptyLadder),
            (1.0, AdmissibilityVerdict::CriticalLevel),
            (1.0001, AdmissibilityVerdict::Admissible),
            (1.5, AdmissibilityVerdict::Admissible),
            (3.0, AdmissibilityVerdict::Admissible),
        ] {
            let got = classify_admissibility(&metric, nu, tol).unwrap().verdict;
            ok &= got == want;
            assert_eq!(got, want, "product metric at nu = {nu}");
        }
    }
    let cosine = StandardStationaryMetric {
        n: 3,
        surface: square_torus(),
        lapse: ScalarField::Cosine { base: 1.0, amplitude: 0.2, axis: 0, harmonic: 1 },
        shift: ShiftField::Zero,
        spatial_metric: SpatialMetricField::Identity,
    };
    for (nu, want) in [
        (0.8, AdmissibilityVerdict::CriticalLevel),
        (1.2, AdmissibilityVerdict::CriticalLevel),
        (0.79, AdmissibilityVerdict::EmptyLadder),
        (0.9, AdmissibilityVerdict::Admissible),
        (1.0, AdmissibilityVerdict::Admissible),
        (1.3, AdmissibilityVerdict::Admissible),
    ] {
        let got = classify_admissibility(&cosine, nu, tol).unwrap().verdict;
        ok &= got == want;
        assert_eq!(got, want, "cosine metric at nu = {nu}");
    }
    let report = classify_admissibility(&cosine, 1.2, tol).unwrap();
    assert!((report.critical_values[0] - 0.8).abs() < 1e-9);
    assert!((report.critical_values[1] - 1.2).abs() < 1e-9);
    println!("acceptance 09 admissibility: {}", if ok { "PASS" } else { "FAIL" });
}

/// Criterion 10: count_sharp equals brute-force lattice enumeration on 1000
/// random (nu, C, m) triples, exact integer equality.
#[test]
fn acceptance_10_lattice_oracle_equivalence() {
    use rand::{Rng, SeedableRng};
    let cutoff = 160.0;
    let surf = torus_laplace_spectrum(&[TAU, TAU], cutoff, LATTICE_BUDGET).unwrap();
    let masses: Vec<u32> = (1..=50).collect();
    let spec = product_joint_spectrum(&surf, &masses, LambdaWindow::Full, 3).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x1a77_1ce5);
    let mut checked = 0u32;
    for _ in 0..1000 {
        let nu: f64 = 0.3 + 2.7 * rng.random::<f64>();
        let c: f64 = 2.0 * rng.random::<f64>();
        let m: u32 = rng.random_range(1..=50);
        let (lo, hi) = (nu * m as f64 - c, nu * m as f64 + c);
        let counted = count_sharp(&spec, nu, c, m, CountPolicy::default()).unwrap();
        // independent brute force straight off the integer lattice
        let mut brute = 0u64;
        let kmax = cutoff.ceil() as i64 + 1;
        for k1 in -kmax..=kmax {
            for k2 in -kmax..=kmax {
                let osq = (k1 * k1 + k2 * k2) as f64;
                if osq.sqrt() <= cutoff {
                    let lambda = ((m as f64) * (m as f64) + osq).sqrt();
                    if lambda >= lo && lambda <= hi {
                        brute += 1;
                    }
                }
            }
        }
        assert_eq!(counted, brute, "mismatch at nu = {nu}, C = {c}, m = {m}");
        checked += 1;
    }
    println!("acceptance 10 oracle: PASS — {checked} random windows, exact equality");
}

/// Determinism of the numerical kernels (the CLI byte-level check is
/// criterion 11, exercised in the CLI crate): identical seeds reproduce
/// Monte Carlo results bit for bit.
#[test]
fn acceptance_volume_seed_determinism() {
    let cosine = StandardStationaryMetric {
        n: 3,
        surface: square_torus(),
        lapse: ScalarField::Cosine { base: 1.0, amplitude: 0.2, axis: 0, harmonic: 1 },
        shift: ShiftField::Zero,
        spatial_metric: SpatialMetricField::Identity,
    };
    let a = volume_montecarlo(&cosine, 1.3, &MonteCarloOptions::new(100_000, 99)).unwrap();
    let b = volume_montecarlo(&cosine, 1.3, &MonteCarloOptions::new(100_000, 99)).unwrap();
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    println!("acceptance volume determinism: PASS");
}

/// The pencil route and the counting route cooperate: spectra produced by
/// the pencil backend can be counted against the same completeness gates.
#[test]
fn acceptance_pencil_feeds_counting() {
    let metric = StandardStationaryMetric {
        n: 2,
        surface: Surface::FlatTorus { lengths: vec![TAU] },
        lapse: ScalarField::Cosine { base: 1.0, amplitude: 0.1, axis: 0, harmonic: 1 },
        shift: ShiftField::Zero,
        spatial_metric: SpatialMetricField::Identity,
    };
    let opts = PencilOptions { basis_cutoff: 24.0, ..Default::default() };
    let mut spec = JointSpectrum::new(2, ladderlab::spectra::Provenance::Pencil);
    for m in 1..=6u32 {
        let (slice, _) = pencil_joint_spectrum(&metric, m as f64, &opts).unwrap();
        spec.insert_slice(m, slice);
    }
    let nu = 1.2;
    for m in 1..=6u32 {
        let n = count_sharp(&spec, nu, 0.8, m, CountPolicy::default()).unwrap();
        // the slice is sign-symmetric, so counting both branches doubles it
        let both = count_sharp(&spec, nu, 0.8, m, CountPolicy::both_branches()).unwrap();
        assert!(both >= n);
    }
    println!("acceptance pencil-to-counting: PASS");
}
