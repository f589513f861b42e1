//! Built-in acceptance battery.
//!
//! Each check re-runs one frozen reference computation end to end, compares
//! the result against a pinned target at a stated tolerance and enforces a
//! wall-clock budget. The same battery backs the `validate` CLI subcommand
//! and the `acceptance` integration test, so a build is healthy exactly when
//! every report line prints PASS.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, PI};
use std::time::Instant;

use num_complex::Complex64;

use crate::assembly::{
    assemble_dtheta_dissipative_block, assemble_dtheta_right_block, limit_operator_norm_graded,
    solve_dirichlet, HsmSystem, QuadratureSpec,
};
use crate::error::HsmError;
use crate::fem::{
    build_fem_space, build_mesh, plane_wave, solve_general, trace_inner_breaks, FieldEvaluator,
    GeneralProblem, MaterialField, MeshSpec, ObstacleSpec, SolveStrategy,
};
use crate::geometry::{in_omega_theta_margin, side_point, tau, tau_prime, HalfPlaneIndex, Point2, WaveParams};
use crate::kernels::kernel_dtheta;
use crate::postprocess::{
    exact_hankel_scaled_trace, exact_hankel_solution, far_field_axis, mie_far_field,
    reconstruct_field, ReconstructionSpec,
};
use crate::quadrature::GaussRule;
use crate::special::{bessel_jy_real, hankel1};
use crate::trace::{build_space, BoundaryData, TraceBasis, TraceGridSpec};

/// Outcome of one acceptance check.
#[derive(Clone, Debug)]
pub struct CriterionReport {
    pub name: &'static str,
    pub passed: bool,
    /// Measured values, tolerances and elapsed time, for the report line.
    pub detail: String,
}

impl CriterionReport {
    /// One-line pass/fail summary.
    pub fn line(&self) -> String {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        format!("{tag}  {}: {}", self.name, self.detail)
    }
}

/// Runs every acceptance check in order.
pub fn run_all() -> Vec<CriterionReport> {
    vec![
        check_far_field_reference(),
        check_truncation_decay(),
        check_reconstruction(),
        check_dissipative_identity(),
        check_static_norm(),
        check_disk_scattering(),
        check_invariants(),
        check_exclusions(),
    ]
}

/// Wraps a check body with timing and a wall-clock budget; an error from the
/// body fails the criterion with the error text in the detail.
fn report(
    name: &'static str,
    budget_secs: f64,
    body: impl FnOnce() -> Result<(bool, String), HsmError>,
) -> CriterionReport {
    let start = Instant::now();
    let outcome = body();
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok((ok, detail)) => CriterionReport {
            name,
            passed: ok && secs <= budget_secs,
            detail: format!("{detail}; {secs:.1} s of {budget_secs:.0} s budget"),
        },
        Err(e) => CriterionReport {
            name,
            passed: false,
            detail: format!("error after {secs:.1} s: {e}"),
        },
    }
}

/// Least-squares slope of log10(errors) against the parameter values, the
/// decay-rate readout of the truncation studies.
pub fn fitted_log10_slope(values: &[f64], errors: &[f64]) -> f64 {
    let logs: Vec<f64> = errors.iter().map(|e| e.log10()).collect();
    ls_slope(values, &logs)
}

/// Least-squares slope of y against x.
fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(ys).map(|(&x, &y)| (x - xm) * (y - ym)).sum();
    let den: f64 = xs.iter().map(|&x| (x - xm) * (x - xm)).sum();
    num / den
}

/// Deterministic xorshift generator for reproducible sample points.
struct XorShift(u64);

impl XorShift {
    fn next_f64(&mut self) -> f64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform sample in [lo, hi].
    fn in_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// Whole-line L2 distance between a computed trace and `data_scale` times
/// the analytic scaled trace of the point source: Gauss panels per element
/// inside [-T, T] plus the analytic tail mass beyond the truncation, where
/// the computed trace is zero by definition. The scale selects the
/// normalization of the boundary data the trace was solved with.
pub fn trace_l2_error(
    params: &WaveParams,
    basis: &TraceBasis,
    coeffs: &[Complex64],
    data_scale: Complex64,
) -> Result<f64, HsmError> {
    let rule = GaussRule::legendre(5);
    let mut acc = 0.0;
    for e in 0..basis.n_elements() {
        let (lo, hi) = basis.element_span(e);
        for (s, w) in rule.mapped(lo, hi) {
            let diff =
                basis.evaluate(coeffs, s) - data_scale * exact_hankel_scaled_trace(params, s)?;
            acc += w * diff.norm_sqr();
        }
    }
    // Tail out to where the scaled decay e^{-2 k sin(theta) s} is negligible.
    let t_max = basis.t_max();
    let tail_len = 4.0;
    let panels = 80;
    let dw = tail_len / panels as f64;
    for p in 0..panels {
        let lo = t_max + p as f64 * dw;
        for (s, w) in rule.mapped(lo, lo + dw) {
            acc += 2.0
                * w
                * data_scale.norm_sqr()
                * exact_hankel_scaled_trace(params, s)?.norm_sqr();
        }
    }
    Ok(acc.sqrt())
}

/// Check 1: the axis far field of the solved exterior problem with the
/// point-source boundary data reproduces the pinned reference value
/// (1 - i) * 0.2250790790392765 for three scaling angles.
pub fn check_far_field_reference() -> CriterionReport {
    report("far-field reference value", 360.0, || {
        let k = 2.0 * PI;
        let a = 1.0;
        let g = move |t: f64| {
            hankel1(0, Complex64::new(k * (a * a + t * t).sqrt(), 0.0))
                .expect("point-source data is finite on the side line")
        };
        let want = Complex64::new(0.225_079_079_039_276_5, -0.225_079_079_039_276_5);
        let quad = QuadratureSpec::default();
        let mut ok = true;
        let mut parts = Vec::new();
        for theta in [FRAC_PI_6, FRAC_PI_4, FRAC_PI_3] {
            let t0 = Instant::now();
            let params = WaveParams::new(k, a, theta)?;
            let basis = build_space(
                &params,
                &TraceGridSpec {
                    t_max: 2.6,
                    h_mesh: 0.01,
                    q: 3,
                },
            )?;
            let data = BoundaryData::new([&g, &g, &g, &g], a)?;
            let sol = solve_dirichlet(&params, &basis, &data, &quad)?;
            let err = HalfPlaneIndex::ALL
                .iter()
                .map(|j| (far_field_axis(&params, &basis, &sol.traces[j.index()]) - want).norm())
                .fold(0.0, f64::max);
            let secs = t0.elapsed().as_secs_f64();
            ok &= err <= 1e-2 && secs <= 120.0;
            parts.push(format!(
                "theta={theta:.3}: max |F - F_ref| = {err:.2e} (tol 1e-2), {secs:.1} s of 120 s"
            ));
        }
        Ok((ok, parts.join("; ")))
    })
}

/// Check 2: the whole-line trace error at fixed small mesh size decays in
/// the truncation length at the scaled rate k sin(theta): the fitted
/// log10-error slope matches -k sin(theta)/ln(10) within 15 percent for the
/// two smaller angles, and the steepest angle decays monotonically.
pub fn check_truncation_decay() -> CriterionReport {
    report("truncation decay rates", 300.0, || {
        let k = 2.0 * PI;
        let a = 1.0;
        let quad = QuadratureSpec::default();
        let t_values: Vec<f64> = (0..7).map(|i| 1.4 + 0.1 * i as f64).collect();
        let mut ok = true;
        let mut parts = Vec::new();
        for theta in [FRAC_PI_6, FRAC_PI_4, FRAC_PI_3] {
            let params = WaveParams::new(k, a, theta)?;
            let g = {
                let params = params.clone();
                move |t: f64| {
                    exact_hankel_solution(&params, Point2::new(a, t))
                        .expect("point-source data is finite on the side line")
                }
            };
            let mut errs = Vec::new();
            for &t_max in &t_values {
                let basis = build_space(
                    &params,
                    &TraceGridSpec {
                        t_max,
                        h_mesh: 0.025,
                        q: 3,
                    },
                )?;
                let data = BoundaryData::new([&g, &g, &g, &g], a)?;
                let sol = solve_dirichlet(&params, &basis, &data, &quad)?;
                errs.push(trace_l2_error(
                    &params,
                    &basis,
                    &sol.traces[0],
                    Complex64::new(1.0, 0.0),
                )?);
            }
            let logs: Vec<f64> = errs.iter().map(|e| e.log10()).collect();
            let slope = ls_slope(&t_values, &logs);
            let target = -k * theta.sin() / std::f64::consts::LN_10;
            if theta < FRAC_PI_3 - 1e-12 {
                let rel = (slope - target).abs() / target.abs();
                ok &= rel <= 0.15;
                parts.push(format!(
                    "theta={theta:.3}: slope {slope:.3} vs {target:.3} ({:.0}% off, tol 15%)",
                    100.0 * rel
                ));
            } else {
                // The steepest angle can reach the mesh-error floor inside
                // the window; require monotone decay and a solid drop.
                let monotone = errs.windows(2).all(|w| w[1] <= w[0] * 1.02);
                let drop = errs.last().unwrap() <= &(errs[0] / 3.0);
                ok &= monotone && drop;
                parts.push(format!(
                    "theta={theta:.3}: monotone={monotone}, error {:.2e} -> {:.2e}",
                    errs[0],
                    errs.last().unwrap()
                ));
            }
        }
        Ok((ok, parts.join("; ")))
    })
}

/// Check 3: reconstructing the field from the exact scaled trace of the
/// point source reproduces (i/4) H0(k |x|) at 100 reproducible random points
/// of the first scaled half-plane domain.
pub fn check_reconstruction() -> CriterionReport {
    report("point-source field reconstruction", 30.0, || {
        let params = WaveParams::new(2.0 * PI, 1.0, FRAC_PI_6)?;
        let basis = build_space(
            &params,
            &TraceGridSpec {
                t_max: 5.0,
                h_mesh: 0.05,
                q: 3,
            },
        )?;
        let mut traces: [Vec<Complex64>; 4] = Default::default();
        for j in 0..4 {
            traces[j] = (0..basis.n_dofs())
                .map(|m| exact_hankel_scaled_trace(&params, basis.node(m)))
                .collect::<Result<_, _>>()?;
        }
        let mut rng = XorShift(0x243F_6A88_85A3_08D3);
        let side = HalfPlaneIndex::new(0);
        let mut points = Vec::new();
        while points.len() < 100 {
            let p = Point2::new(rng.in_range(1.05, 4.5), rng.in_range(-4.5, 4.5));
            if in_omega_theta_margin(&params, side, p, 0.05) {
                points.push(p);
            }
        }
        let grid = reconstruct_field(
            &params,
            &basis,
            &traces,
            None::<&fn(Point2) -> Option<Complex64>>,
            &points,
            &ReconstructionSpec::default(),
        )?;
        let mut worst = 0.0f64;
        for (&p, &got) in points.iter().zip(&grid.values) {
            let want = exact_hankel_solution(&params, p)?;
            worst = worst.max((got - want).norm() / want.norm());
        }
        Ok((
            worst <= 1e-3,
            format!("max relative error {worst:.2e} over 100 points (tol 1e-3)"),
        ))
    })
}

/// Check 4: the scaled self-interaction block on [a, T] equals the assembly
/// with the rotated wavenumber k e^{i theta} entry by entry, which pins the
/// dissipative reformulation used by the solvability argument.
pub fn check_dissipative_identity() -> CriterionReport {
    report("dissipative-form cross-check", 10.0, || {
        let params = WaveParams::new(2.0 * PI, 1.0, FRAC_PI_6)?;
        let basis = build_space(
            &params,
            &TraceGridSpec {
                t_max: 3.0,
                h_mesh: 0.1,
                q: 2,
            },
        )?;
        let quad = QuadratureSpec::default();
        let d1 = assemble_dtheta_right_block(&params, &basis, &quad)?;
        let d2 = assemble_dtheta_dissipative_block(&params, &basis, &quad)?;
        let mut max_abs = 0.0f64;
        let mut max_diff = 0.0f64;
        for i in 0..d1.rows {
            for j in 0..d1.cols {
                max_abs = max_abs.max(d1.get(i, j).norm());
                max_diff = max_diff.max((d1.get(i, j) - d2.get(i, j)).norm());
            }
        }
        let rel = max_diff / max_abs;
        Ok((
            rel <= 1e-12,
            format!("entrywise relative deviation {rel:.2e} (tol 1e-12)"),
        ))
    })
}

/// Check 5: the mass-weighted norm estimate of the static-limit
/// self-interaction operator on L2(a, a + 20) lands in a window around the
/// analytic half-line value 1/sqrt(2).
pub fn check_static_norm() -> CriterionReport {
    report("static-limit norm window", 30.0, || {
        let norm = limit_operator_norm_graded(1.0, 21.0, 0.05, 50, &QuadratureSpec::default())?;
        Ok((
            (0.66..=0.73).contains(&norm),
            format!("estimate {norm:.6} in [0.66, 0.73] around 2^(-1/2) = 0.7071"),
        ))
    })
}

/// Check 6: sound-soft scattering of a plane wave by a disk, solved with the
/// coupled interior/trace system, matches the analytic series far field on
/// all four axes and the interior and representation fields agree on a ring
/// between the squares.
pub fn check_disk_scattering() -> CriterionReport {
    report("disk-scattering cross-check", 300.0, || {
        let k = 2.0 * PI;
        let radius = 0.5;
        let alpha = FRAC_PI_6;
        let params = WaveParams::with_outer(k, 0.8, 1.2, FRAC_PI_6)?;
        let basis = build_space(
            &params,
            &TraceGridSpec {
                t_max: 5.0,
                h_mesh: 0.05,
                q: 2,
            },
        )?;
        let mesh = build_mesh(
            &params,
            &trace_inner_breaks(&basis),
            &MeshSpec {
                h: 0.05,
                obstacle: ObstacleSpec::Disk { radius },
            },
        )?;
        let space = build_fem_space(&mesh, 2)?;
        let materials = MaterialField::default();
        let quad = QuadratureSpec::default();
        let inc = plane_wave(k, alpha);
        let obstacle_data = move |p: Point2| -inc(p);
        let problem = GeneralProblem {
            params: &params,
            basis: &basis,
            quad: &quad,
            mesh: &mesh,
            space: &space,
            materials: &materials,
            obstacle_data: Some(&obstacle_data),
        };
        let sol = solve_general(&problem, SolveStrategy::Schur)?;
        let mut max_far = 0.0f64;
        for j in HalfPlaneIndex::ALL {
            let got = far_field_axis(&params, &basis, &sol.traces[j.index()]);
            let want = mie_far_field(k, radius, alpha, j.index() as f64 * FRAC_PI_2)?;
            max_far = max_far.max((got - want).norm() / want.norm());
        }
        // Ring halfway between the squares, seen by both field descriptions.
        let ring = 0.5 * (0.8 + 1.2);
        let mut points = Vec::new();
        for j in HalfPlaneIndex::ALL {
            for i in 0..10 {
                let t = -0.9 + 0.2 * i as f64;
                points.push(side_point(j, ring, t * ring));
            }
        }
        let grid = reconstruct_field(
            &params,
            &basis,
            &sol.traces,
            None::<&fn(Point2) -> Option<Complex64>>,
            &points,
            &ReconstructionSpec::default(),
        )?;
        let evaluator = FieldEvaluator::new(&mesh, &space, &sol.u)?;
        let mut num = 0.0;
        let mut den = 0.0;
        for (&p, &recon) in points.iter().zip(&grid.values) {
            let fem = evaluator.eval(p).ok_or_else(|| {
                HsmError::Domain(format!("overlap point ({}, {}) left the mesh", p.x1, p.x2))
            })?;
            num += (recon - fem).norm_sqr();
            den += recon.norm_sqr();
        }
        let overlap = (num / den).sqrt();
        let ok = max_far <= 5e-2 && overlap <= 2e-2;
        Ok((
            ok,
            format!(
                "max axis far-field error {max_far:.2e} (tol 5e-2), \
                 ring agreement {overlap:.2e} (tol 2e-2), residual {:.1e}",
                sol.residual
            ),
        ))
    })
}

/// Check 7: a condensed re-run of the per-module invariants; the full
/// property suites run under `cargo test`.
pub fn check_invariants() -> CriterionReport {
    report("module invariant battery", 120.0, || {
        let mut ok = true;
        let mut parts = Vec::new();

        // Hankel recurrence at the orders the solver uses, cross product and
        // recurrence for the higher real-argument orders of the series
        // solution, and large-argument behaviour.
        let mut worst_rec = 0.0f64;
        for &z in &[
            Complex64::new(0.3, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(5.7, 0.0),
            Complex64::new(20.0, 0.0),
            Complex64::new(2.0, 1.5),
        ] {
            let hm = hankel1(0, z)?;
            let h = hankel1(1, z)?;
            let hp = hankel1(2, z)?;
            let resid =
                (hp - 2.0 / z * h + hm).norm() / hp.norm().max(h.norm()).max(hm.norm());
            worst_rec = worst_rec.max(resid);
        }
        let mut worst_wr = 0.0f64;
        for &x in &[0.4, 1.3, 7.9, 42.0] {
            let (jv, yv) = bessel_jy_real(6, x)?;
            for n in 0..=5usize {
                let wr = jv[n + 1] * yv[n] - jv[n] * yv[n + 1];
                let want = 2.0 / (PI * x);
                worst_wr = worst_wr.max((wr - want).abs() / want);
                if n >= 1 {
                    let fac = 2.0 * n as f64 / x;
                    let rj = (jv[n + 1] - fac * jv[n] + jv[n - 1]).abs()
                        / jv[n + 1].abs().max(jv[n].abs()).max(jv[n - 1].abs());
                    let ry = (yv[n + 1] - fac * yv[n] + yv[n - 1]).abs()
                        / yv[n + 1].abs().max(yv[n].abs()).max(yv[n - 1].abs());
                    worst_rec = worst_rec.max(rj).max(ry);
                }
            }
        }
        ok &= worst_rec <= 1e-10;
        ok &= worst_wr <= 1e-10;
        let x = 300.0;
        let h0 = hankel1(0, Complex64::new(x, 0.0))?;
        let mag = (h0.norm() - (2.0 / (PI * x)).sqrt()).abs() / (2.0 / (PI * x)).sqrt();
        let phase = (h0 * (Complex64::new(0.0, -(x - PI / 4.0)).exp())
            * (PI * x / 2.0).sqrt()
            - Complex64::new(1.0, 0.0))
        .norm();
        ok &= mag <= 1e-3 && phase <= 1e-2;
        parts.push(format!(
            "hankel: recurrence {worst_rec:.1e}, cross product {worst_wr:.1e}, asymptotics ok={}",
            mag <= 1e-3 && phase <= 1e-2
        ));

        // Scaling path: odd symmetry, identity inside the box, derivative
        // consistency against a centered difference away from the kinks.
        let params = WaveParams::new(2.0 * PI, 1.0, FRAC_PI_6)?;
        let mut path_ok = true;
        for &s in &[0.0, 0.4, 0.99, 1.01, 1.7, 3.3] {
            path_ok &= (tau(&params, -s) + tau(&params, s)).norm() < 1e-14;
            if s < params.a {
                path_ok &= (tau(&params, s) - Complex64::new(s, 0.0)).norm() < 1e-14;
                path_ok &= (tau_prime(&params, s) - Complex64::new(1.0, 0.0)).norm() < 1e-14;
            }
            if (s - params.a).abs() > 0.05 {
                let eps = 1e-6;
                let fd = (tau(&params, s + eps) - tau(&params, s - eps)) / (2.0 * eps);
                path_ok &= (fd - tau_prime(&params, s)).norm() < 1e-8;
            }
        }
        ok &= path_ok;
        parts.push(format!("scaling path ok={path_ok}"));

        // Kernel decay along the scaled line at the rate e^{-k sin(theta)}.
        let expected = (-params.k * params.theta.sin()).exp();
        let mut decay_ok = true;
        let mut ratios = Vec::new();
        for &s in &[3.0, 4.0, 5.0] {
            let r = kernel_dtheta(&params, 1.3, s + 1.0)?.norm()
                / kernel_dtheta(&params, 1.3, s)?.norm();
            ratios.push(r);
            decay_ok &= r >= 0.5 * expected && r <= 1.5 * expected;
        }
        ok &= decay_ok;
        parts.push(format!(
            "kernel decay ratios {:.3e}/{:.3e}/{:.3e} around {expected:.3e}",
            ratios[0], ratios[1], ratios[2]
        ));

        // Trace space: constrained dofs are exactly the data region, the
        // reflection is an involution matching node negation.
        let basis = build_space(
            &params,
            &TraceGridSpec {
                t_max: 2.0,
                h_mesh: 0.1,
                q: 2,
            },
        )?;
        let mut trace_ok = true;
        for m in 0..basis.n_dofs() {
            let node = basis.node(m);
            trace_ok &= basis.is_constrained(m) == (node.abs() <= params.a + 1e-12);
            let r = basis.refl(m);
            trace_ok &= basis.refl(r) == m;
            trace_ok &= basis.node(r) == -node || (node == 0.0 && basis.node(r) == 0.0);
            trace_ok &= basis.is_constrained(r) == basis.is_constrained(m);
        }
        ok &= trace_ok;
        parts.push(format!("trace partition/reflection ok={trace_ok}"));

        // Small exterior solve: zero data gives zero traces, the solution
        // map is linear, and the mode-decoupled and monolithic paths agree
        // on asymmetric data.
        let small = WaveParams::new(2.0, 1.0, FRAC_PI_6)?;
        let sbasis = build_space(
            &small,
            &TraceGridSpec {
                t_max: 1.75,
                h_mesh: 0.25,
                q: 1,
            },
        )?;
        let quad = QuadratureSpec::default();
        let system = HsmSystem::assemble(&small, &sbasis, &quad)?;
        let zero = |_t: f64| Complex64::new(0.0, 0.0);
        let z = system.solve(&BoundaryData::new([&zero, &zero, &zero, &zero], small.a)?)?;
        let zero_ok = z
            .traces
            .iter()
            .flat_map(|t| t.iter())
            .all(|v| v.norm() <= 1e-14);
        ok &= zero_ok;
        let g1 = |t: f64| {
            hankel1(0, Complex64::new(2.0 * (1.0 + t * t).sqrt(), 0.0)).expect("finite data")
        };
        let g2 = |t: f64| Complex64::new((0.7 * t).cos(), 0.2 * t * t);
        let c = Complex64::new(2.0, -1.0);
        let s1 = system.solve(&BoundaryData::new([&g1, &g1, &g1, &g1], small.a)?)?;
        let s2 = system.solve(&BoundaryData::new([&g2, &g2, &g2, &g2], small.a)?)?;
        let g12 = move |t: f64| g1(t) + c * g2(t);
        let s12 = system.solve(&BoundaryData::new([&g12, &g12, &g12, &g12], small.a)?)?;
        let mut lin_num = 0.0;
        let mut lin_den = 0.0;
        for j in 0..4 {
            for m in 0..sbasis.n_dofs() {
                lin_num += (s12.traces[j][m] - s1.traces[j][m] - c * s2.traces[j][m]).norm_sqr();
                lin_den += s12.traces[j][m].norm_sqr();
            }
        }
        let lin = (lin_num / lin_den).sqrt();
        ok &= lin <= 1e-10;
        let field = move |p: Point2| Complex64::new(0.0, 2.0 * (0.3 * p.x1 + 0.9 * p.x2)).exp();
        let b0 = move |t: f64| field(side_point(HalfPlaneIndex::new(0), small.a, t));
        let b1 = move |t: f64| field(side_point(HalfPlaneIndex::new(1), small.a, t));
        let b2 = move |t: f64| field(side_point(HalfPlaneIndex::new(2), small.a, t));
        let b3 = move |t: f64| field(side_point(HalfPlaneIndex::new(3), small.a, t));
        let data = BoundaryData::new([&b0, &b1, &b2, &b3], small.a)?;
        let fast = system.solve(&data)?;
        let dense = system.solve_monolithic(&data)?;
        let mut agree_num = 0.0;
        let mut agree_den = 0.0;
        for j in 0..4 {
            for m in 0..sbasis.n_dofs() {
                agree_num += (fast.traces[j][m] - dense.traces[j][m]).norm_sqr();
                agree_den += dense.traces[j][m].norm_sqr();
            }
        }
        let agree = (agree_num / agree_den).sqrt();
        ok &= agree <= 1e-8;
        parts.push(format!(
            "solves: zero-data ok={zero_ok}, linearity {lin:.1e}, mode split vs dense {agree:.1e}"
        ));

        Ok((ok, parts.join("; ")))
    })
}

/// Check 8: states what the battery intentionally does not measure, so the
/// coverage boundary is explicit.
pub fn check_exclusions() -> CriterionReport {
    CriterionReport {
        name: "documented exclusions",
        passed: true,
        detail: "no quantitative claim is made for continuous operator norms or \
                 compactness (covered indirectly by the static-limit norm window and \
                 the solvability checks) nor for full-plane field images (covered \
                 indirectly by the point-source reconstruction and the disk-scattering \
                 cross-check)"
            .to_string(),
    }
}
