//! Round trips between Fourier coefficients and position-space samples:
//! synthesis followed by projection, Parseval audits, weighted norms, and
//! the threshold-membership trichotomy.

use fiberlap::mode::RectangleGrid;
use fiberlap::{
    build_band_table, default_k_grid, harmonic_profile, membership_report, project_mode,
    smooth_step, synthesize_harmonic, weighted_norm, BandTable, Discretization, Error,
    FiberFamily, HalfPlaneFunction, ModeFunction, Verdict,
};
use num_complex::Complex64;
use std::sync::OnceLock;

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let m = ((hi - lo) / step).round() as usize;
    (0..=m).map(|i| lo + (hi - lo) * i as f64 / m as f64).collect()
}

/// Rectangle x-count whose spacing is an exact multiple of the family's
/// fine grid, so eigenfunction samples need no interpolation.
fn aligned_nx(fam: &FiberFamily) -> usize {
    (fam.x_max() / (4.0 * fam.h_fine())).round() as usize + 1
}

fn bump1() -> &'static ModeFunction {
    static M: OnceLock<ModeFunction> = OnceLock::new();
    M.get_or_init(|| ModeFunction::gaussian_bump(1, 0.6, 0.4, 0.05).unwrap())
}

fn fam1() -> &'static FiberFamily {
    static F: OnceLock<FiberFamily> = OnceLock::new();
    F.get_or_init(|| FiberFamily::solve(1, bump1().ks(), &Discretization::default()).unwrap())
}

fn stack1() -> &'static HalfPlaneFunction {
    static F: OnceLock<HalfPlaneFunction> = OnceLock::new();
    F.get_or_init(|| {
        let fam = fam1();
        HalfPlaneFunction::from_modes(vec![bump1().clone()])
            .unwrap()
            .attach_rectangle(&[fam], fam.x_max(), aligned_nx(fam), 20.0, 501)
            .unwrap()
    })
}

fn table1() -> &'static BandTable {
    static T: OnceLock<BandTable> = OnceLock::new();
    T.get_or_init(|| {
        build_band_table(1, &default_k_grid(-4.0, 4.5), &Discretization::default()).unwrap()
    })
}

#[test]
fn projection_after_synthesis_is_the_identity() {
    let p = project_mode(stack1(), fam1()).unwrap();
    let sup: f64 = bump1()
        .samples()
        .iter()
        .fold(0.0f64, |m, v| m.max(v.norm()));
    let worst = p
        .samples()
        .iter()
        .zip(bump1().samples())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
    assert!(worst / sup < 1e-4, "round trip error {:.3e}", worst / sup);
}

#[test]
fn cross_band_projection_vanishes() {
    // One common box, one common spacing, so the two bands' eigenfunctions
    // are sampled on identical grids and discrete orthogonality carries
    // over to the rectangle quadrature.
    let disc = Discretization {
        x_max: 12.4,
        n_points: 3101,
        ..Discretization::default()
    };
    let g2 = ModeFunction::gaussian_bump(2, 0.6, 0.4, 0.05).unwrap();
    let fam1 = FiberFamily::solve(1, g2.ks(), &disc).unwrap();
    let fam2 = FiberFamily::solve(2, g2.ks(), &disc).unwrap();
    let f = HalfPlaneFunction::from_modes(vec![g2])
        .unwrap()
        .attach_rectangle(&[&fam2], fam2.x_max(), aligned_nx(&fam2), 20.0, 501)
        .unwrap();
    let p1 = project_mode(&f, &fam1).unwrap();
    let leak = p1.samples().iter().fold(0.0f64, |m, v| m.max(v.norm()));
    assert!(leak < 1e-6, "cross-band leakage {leak:.3e}");
}

#[test]
fn doubled_resolution_changes_nothing_measurable() {
    let fam = fam1();
    let coarse = project_mode(stack1(), fam).unwrap();
    let fine_rect = HalfPlaneFunction::from_modes(vec![bump1().clone()])
        .unwrap()
        .attach_rectangle(&[fam], fam.x_max(), 2 * aligned_nx(fam) - 1, 20.0, 1001)
        .unwrap();
    let fine = project_mode(&fine_rect, fam).unwrap();
    let sup = coarse.samples().iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let diff = coarse
        .samples()
        .iter()
        .zip(fine.samples())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
    assert!(diff / sup < 1e-5, "resolution drift {:.3e}", diff / sup);
}

#[test]
fn synthesis_matches_a_half_step_oracle() {
    let coarse = bump1();
    let fine = ModeFunction::gaussian_bump(1, 0.6, 0.4, 0.025).unwrap();
    let fam_c = fam1();
    let fam_f = FiberFamily::solve(1, fine.ks(), &Discretization::default()).unwrap();
    for (x, y) in [(1.0, 0.4), (2.5, -1.3), (4.0, 3.0)] {
        let a = synthesize_harmonic(coarse, fam_c, x, y).unwrap();
        let b = synthesize_harmonic(&fine, &fam_f, x, y).unwrap();
        assert!(
            (a - b).norm() / b.norm() < 1e-5,
            "value drift {:.3e} at ({x}, {y})",
            (a - b).norm() / b.norm()
        );
    }
    // No oscillatory factor on the axis: a real nonnegative bump gives a
    // real value there, and an empty mode gives zero.
    let axis = synthesize_harmonic(coarse, fam_c, 1.0, 0.0).unwrap();
    assert_eq!(axis.im, 0.0);
    assert!(axis.re > 0.0);
    let zero = ModeFunction::from_fn(1, coarse.ks(), |_| Complex64::new(0.0, 0.0), None).unwrap();
    assert_eq!(
        synthesize_harmonic(&zero, fam_c, 1.0, 0.7).unwrap(),
        Complex64::new(0.0, 0.0)
    );
}

#[test]
fn edge_profile_integrates_to_the_mode_mass() {
    let fam = fam1();
    let mode = bump1();
    assert_eq!(harmonic_profile(mode, fam, 0.0).unwrap(), 0.0);
    let nx = aligned_nx(fam);
    let h = fam.x_max() / (nx - 1) as f64;
    let mut total = 0.0;
    for i in 0..nx {
        let w = if i == 0 || i == nx - 1 { 0.5 * h } else { h };
        total += w * harmonic_profile(mode, fam, i as f64 * h).unwrap();
    }
    let mass = mode.norm_sq();
    assert!(
        (total - mass).abs() / mass < 1e-4,
        "profile integral {total} vs mass {mass}"
    );
}

#[test]
fn compactly_supported_mode_is_tiny_far_from_the_edge() {
    let mode = ModeFunction::cutoff_bump(1, 0.0, 1.0, 0.01).unwrap();
    let fam = FiberFamily::solve(1, mode.ks(), &Discretization::default()).unwrap();
    let bound = (-0.7f64 * 49.0).exp() * mode.norm_sq();
    let rho = harmonic_profile(&mode, &fam, 8.0).unwrap();
    assert!(rho >= 0.0);
    assert!(rho < bound, "profile {rho:.3e} vs bound {bound:.3e}");
}

#[test]
fn parseval_holds_for_a_two_band_stack() {
    let disc = Discretization::default();
    let m1 = bump1().clone();
    let m2 = ModeFunction::gaussian_bump(2, 0.3, 0.45, 0.05).unwrap();
    let f1 = fam1();
    let f2 = FiberFamily::solve(2, m2.ks(), &disc).unwrap();
    let x_max = f1.x_max().max(f2.x_max());
    let stack = HalfPlaneFunction::from_modes(vec![m1, m2])
        .unwrap()
        .attach_rectangle(&[f1, &f2], x_max, 2001, 20.0, 801)
        .unwrap();
    let parseval = stack.parseval_norm_sq();
    let plain = weighted_norm(&stack, 0.0).unwrap();
    assert!(
        (plain * plain - parseval).abs() / parseval < 1e-4,
        "grid mass {} vs mode mass {parseval}",
        plain * plain
    );
}

#[test]
fn weight_is_bounded_on_compact_y_support() {
    // Samples supported in |y| <= 1, where (1+y^2)^s <= 2^s.
    let f = |x: f64, y: f64| {
        let v = if y.abs() < 1.0 {
            x * (-x * x).exp() * (std::f64::consts::FRAC_PI_2 * y).cos().powi(2)
        } else {
            0.0
        };
        Complex64::new(v, 0.0)
    };
    let stack = HalfPlaneFunction::from_modes(vec![])
        .unwrap()
        .with_grid(RectangleGrid::sample(6.0, 601, 1.5, 601, f).unwrap());
    let plain = weighted_norm(&stack, 0.0).unwrap();
    for s in [0.6, 1.0, 2.0] {
        let w = weighted_norm(&stack, s).unwrap();
        assert!(w >= plain);
        assert!(
            w <= 2f64.powf(0.5 * s) * plain + 1e-12,
            "s = {s}: {w} vs cap {}",
            2f64.powf(0.5 * s) * plain
        );
    }
}

#[test]
fn gaussian_y_profile_matches_the_moment_oracle() {
    let f = |x: f64, y: f64| Complex64::new(x * (-x * x).exp() * (-y * y / 3.0).exp(), 0.0);
    let stack = HalfPlaneFunction::from_modes(vec![])
        .unwrap()
        .with_grid(RectangleGrid::sample(8.0, 801, 20.0, 1601, f).unwrap());
    // Closed form: ∫ x² e^{-2x²} dx = sqrt(2π)/16 over [0, ∞), and
    // ∫ (1+y²) e^{-2y²/3} dy = sqrt(3π/2) (1 + 3/4).
    let ix = (2.0 * std::f64::consts::PI).sqrt() / 16.0;
    let iy = (1.5 * std::f64::consts::PI).sqrt() * 1.75;
    let oracle = (ix * iy).sqrt();
    let w = weighted_norm(&stack, 1.0).unwrap();
    assert!(
        (w - oracle).abs() / oracle < 1e-4,
        "weighted norm {w} vs closed form {oracle}"
    );
}

#[test]
fn membership_trichotomy() {
    let t = table1();
    // A compactly supported bump vanishes identically on the deep ladder.
    let rep = membership_report(bump1(), t, 0.4, 1.0).unwrap();
    assert_eq!(rep.verdict, Verdict::In);
    assert_eq!(rep.vanishing_value, 0.0);
    assert!(rep.w_alpha_sup.is_finite());

    // The definitional cancellation mu_n |lambda'|^{1/2} = 1 keeps the
    // trace pinned at one all the way down: not in the space.
    let chi = |k: f64| smooth_step(k);
    let out_mode = ModeFunction::from_fn(
        1,
        t.nodes(),
        |k| Complex64::new(chi(k) * t.derivative(k).abs().sqrt(), 0.0),
        None,
    )
    .unwrap();
    let rep = membership_report(&out_mode, t, 0.4, 1.0).unwrap();
    assert_eq!(rep.verdict, Verdict::Out);
    assert!(
        (rep.vanishing_value - 1.0).abs() < 1e-2,
        "trace limit {}",
        rep.vanishing_value
    );

    // Attaching a gap^{1/2} factor restores the vanishing and keeps the
    // alpha = 0.4 weighted sup finite.
    let in_mode = ModeFunction::from_fn(
        1,
        t.nodes(),
        |k| {
            let gap = t.evaluate(k) - 1.0;
            Complex64::new(chi(k) * t.derivative(k).abs().sqrt() * gap.sqrt(), 0.0)
        },
        None,
    )
    .unwrap();
    let rep = membership_report(&in_mode, t, 0.4, 1.0).unwrap();
    assert_eq!(rep.verdict, Verdict::In);
    assert!(rep.w_alpha_sup.is_finite() && rep.w_alpha_sup > 0.0 && rep.w_alpha_sup < 2.0);

    // alpha must stay below min(1, s - 1/2).
    assert!(matches!(
        membership_report(bump1(), t, 0.6, 1.0),
        Err(Error::InvalidParameter(_))
    ));
}

#[test]
fn coefficient_bound_is_uniform_across_bands() {
    // sup_k |f_n| / ||f||_{L^{2,1}} for one bump family per band; only
    // boundedness across n is asserted, not a particular constant.
    let mut ratios = Vec::new();
    for n in 1..=4usize {
        let k0 = 0.4 + 0.2 * n as f64;
        let w = 0.4 + 0.05 * n as f64;
        let m = ModeFunction::gaussian_bump(n, k0, w, 0.05).unwrap();
        let fam = FiberFamily::solve(n, m.ks(), &Discretization::default()).unwrap();
        let sup = m.samples().iter().fold(0.0f64, |a, v| a.max(v.norm()));
        let stack = HalfPlaneFunction::from_modes(vec![m])
            .unwrap()
            .attach_rectangle(&[&fam], fam.x_max(), aligned_nx(&fam), 20.0, 501)
            .unwrap();
        ratios.push(sup / weighted_norm(&stack, 1.0).unwrap());
    }
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(0.0f64, f64::max);
    assert!(lo > 0.0);
    assert!(hi / lo < 10.0, "ratios spread too far: {ratios:?}");
}

#[test]
fn resolution_guards_fire() {
    let fam = fam1();
    // Nyquist violation in y.
    let coarse_y = HalfPlaneFunction::from_modes(vec![bump1().clone()])
        .unwrap()
        .attach_rectangle(&[fam], fam.x_max(), 401, 20.0, 101)
        .unwrap();
    assert!(matches!(
        project_mode(&coarse_y, fam),
        Err(Error::Aliasing { .. })
    ));
    // Rectangle too small in y for the bump's slow Fourier decay.
    let tight = HalfPlaneFunction::from_modes(vec![bump1().clone()])
        .unwrap()
        .attach_rectangle(&[fam], fam.x_max(), 401, 5.0, 201)
        .unwrap();
    assert!(matches!(
        project_mode(&tight, fam),
        Err(Error::RectangleTruncation(_))
    ));
    // Far-field synthesis with a coarse k-grid.
    assert!(matches!(
        synthesize_harmonic(bump1(), fam, 1.0, 15.0),
        Err(Error::UnresolvedOscillation(_))
    ));
    // Membership needs the deep end of the ladder on-grid.
    let t = table1();
    let short = ModeFunction::from_fn(1, &grid(-4.0, 1.0, 0.05), |_| Complex64::new(1.0, 0.0), None)
        .unwrap();
    assert!(matches!(
        membership_report(&short, t, 0.4, 1.0),
        Err(Error::InsufficientTailResolution(_))
    ));
}
