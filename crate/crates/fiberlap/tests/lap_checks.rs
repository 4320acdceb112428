//! End-to-end checks of resolvent matrix elements and their boundary
//! values: reproduction of independently computed reference numbers, the
//! off-axis limit, Herglotz structure of the assembled element, Hölder
//! certificates on and off the first threshold, and the divergence of the
//! certificate for data excluded by the membership gate.

use fiberlap::lap::{divergence_sweep, rn_boundary_with, spectral_density, RnBoundaryOptions};
use fiberlap::{
    build_band_table, default_k_grid, holder_certificate, resolvent_element, rn_boundary,
    rn_value, BandTable, Discretization, Error, HalfPlaneFunction, HolderWindow, MethodTag,
    ModeFunction, QueryPoint, ResolventQuery, Side,
};
use num_complex::Complex64;
use std::sync::OnceLock;

fn tables() -> &'static Vec<BandTable> {
    static T: OnceLock<Vec<BandTable>> = OnceLock::new();
    T.get_or_init(|| {
        vec![build_band_table(1, &default_k_grid(-4.0, 4.5), &Discretization::default()).unwrap()]
    })
}

fn table1() -> &'static BandTable {
    &tables()[0]
}

/// Unit-mass Gaussian packet sitting at `k0 = -2`, far below the energies
/// probed at `λ = 1.2` and `2.0`, so its boundary values are plain real
/// integrals.  The fine sample step keeps the piecewise-linear quadrature
/// bias around `1e-7`, well inside the comparison tolerance.
fn frozen() -> &'static ModeFunction {
    static F: OnceLock<ModeFunction> = OnceLock::new();
    F.get_or_init(|| {
        let raw = ModeFunction::gaussian_bump(1, -2.0, 0.3, 0.0005).unwrap();
        let nrm = raw.norm_sq();
        // ∫ e^{-2(k-k0)²/w²} dk = w √(π/2).
        let exact = 0.3 * (std::f64::consts::PI / 2.0).sqrt();
        assert!(
            (nrm - exact).abs() < 1e-10 * exact,
            "trapezoid mass {nrm} vs closed form {exact}"
        );
        raw.scale(Complex64::new(nrm.sqrt().recip(), 0.0))
    })
}

#[test]
fn reference_boundary_values_are_reproduced() {
    // Reference values come from an independent adaptive-quadrature
    // evaluation of ∫ |f|²/(λ₁(k) - λ) dk on the same dispersion table.
    for (lam, want) in [(1.2, 0.10385373), (2.0, 0.11335365)] {
        let plus = rn_boundary(frozen(), frozen(), table1(), lam, Side::Plus).unwrap();
        assert!(
            (plus.value.re - want).abs() < 1e-6,
            "r+({lam}) = {} vs reference {want}",
            plus.value.re
        );
        assert!(plus.value.im.abs() < 1e-12, "im {}", plus.value.im);
        assert_eq!(plus.jump_part, Complex64::new(0.0, 0.0));
        assert_eq!(plus.pv_part, plus.value);
        // No spectral density near λ means no cut to cross.
        let minus = rn_boundary(frozen(), frozen(), table1(), lam, Side::Minus).unwrap();
        assert!((plus.value - minus.value).norm() < 1e-12);
    }
}

#[test]
fn off_axis_values_converge_to_the_boundary() {
    for lam in [1.2, 2.0] {
        let bv = rn_boundary(frozen(), frozen(), table1(), lam, Side::Plus).unwrap();
        let mut gaps = Vec::new();
        for j in 1..=5 {
            let eps = 10f64.powi(-j);
            let z = Complex64::new(lam, eps);
            let v = rn_value(frozen(), frozen(), table1(), z).unwrap();
            assert!(v.im > 0.0, "Herglotz sign at eta {eps}");
            gaps.push((v - bv.value).norm());
        }
        for w in gaps.windows(2) {
            assert!(w[1] < w[0], "sweep must contract: {gaps:?}");
        }
        assert!(gaps[4] <= 1e-6, "final gap {} at lambda {lam}", gaps[4]);
        // The distance to the cut is the only scale left, so the first
        // decade of eta shrinks the gap by roughly a decade.
        let ratio = gaps[0] / gaps[1];
        assert!((6.0..15.0).contains(&ratio), "first-decade ratio {ratio}");
    }
}

#[test]
fn assembled_element_is_herglotz_and_additive() {
    let f = HalfPlaneFunction::from_modes(vec![frozen().clone()]).unwrap();
    let q = ResolventQuery {
        f: f.clone(),
        g: f.clone(),
        point: QueryPoint::Offaxis { re: 1.5, im: 0.8 },
        mode_cutoff: 6,
        window: None,
    };
    let r = resolvent_element(&q, tables()).unwrap();
    assert!(r.value.im > 0.0, "upper half-plane maps to itself");
    let sum: Complex64 = r
        .per_mode
        .values()
        .map(|c| Complex64::new(c.re, c.im))
        .sum();
    assert_eq!(sum, r.value);
    assert_eq!(r.tail_bound, 0.0);
    assert_eq!(r.method_tags[&1], MethodTag::KSpace);
    // A cutoff below the populated bands is a usage error, not a zero.
    let starved = ResolventQuery {
        mode_cutoff: 0,
        ..q
    };
    assert!(matches!(
        resolvent_element(&starved, tables()),
        Err(Error::InvalidParameter(_))
    ));
}

#[test]
fn holder_constant_is_stable_inside_the_band() {
    let mode = ModeFunction::gaussian_bump(1, 1.6, 0.25, 0.01).unwrap();
    let f = HalfPlaneFunction::from_modes(vec![mode]).unwrap();
    let window = HolderWindow {
        lambda_lo: 1.5,
        lambda_hi: 2.5,
        eta_max: 0.4,
    };
    let opts = RnBoundaryOptions::default();
    let coarse = holder_certificate(&f, &f, &window, 0.4, 12, tables(), &opts).unwrap();
    let fine = holder_certificate(&f, &f, &window, 0.4, 23, tables(), &opts).unwrap();
    assert!(coarse.is_finite() && coarse > 0.0);
    assert!(
        (fine - coarse).abs() <= 0.2 * coarse,
        "doubling the energy sampling moved the constant {coarse} -> {fine}"
    );
}

#[test]
fn holder_constant_stays_finite_across_the_threshold() {
    let mode = ModeFunction::gaussian_bump(1, 1.6, 0.25, 0.01).unwrap();
    let f = HalfPlaneFunction::from_modes(vec![mode]).unwrap();
    let window = HolderWindow {
        lambda_lo: 0.8,
        lambda_hi: 1.3,
        eta_max: 0.1,
    };
    let c =
        holder_certificate(&f, &f, &window, 0.4, 10, tables(), &RnBoundaryOptions::default())
            .unwrap();
    assert!(c.is_finite() && c > 0.0, "constant {c}");
}

#[test]
fn nonmember_constants_blow_up_as_windows_shrink() {
    let t = table1();
    let chi = ModeFunction::from_fn(
        1,
        t.nodes(),
        |k| {
            let step = fiberlap::smooth_step(k);
            Complex64::new(step * t.derivative(k).abs().sqrt(), 0.0)
        },
        None,
    )
    .unwrap();
    let f = HalfPlaneFunction::from_modes(vec![chi]).unwrap();
    // The gate refuses this data inside the threshold window.
    let gated = holder_certificate(
        &f,
        &f,
        &HolderWindow {
            lambda_lo: 0.9,
            lambda_hi: 1.4,
            eta_max: 0.1,
        },
        0.4,
        8,
        tables(),
        &RnBoundaryOptions::default(),
    );
    assert!(matches!(gated, Err(Error::MembershipViolation { .. })));
    // Overriding the gate exposes the divergence: for a coefficient whose
    // weighted trace survives at the threshold, the boundary value carries
    // a logarithm, and the Hölder-α constant over a window of width w
    // scales like w^{-α}.  Each halving should multiply the constant by
    // 2^α = 1.32 once the window is deep enough.
    let opts = RnBoundaryOptions {
        allow_nonmember: true,
        ..Default::default()
    };
    let widths: Vec<f64> = (0..7).map(|j| 0.4 * 0.5f64.powi(j)).collect();
    let c = divergence_sweep(&f, &f, 1.0, &widths, 0.4, tables(), &opts).unwrap();
    for pair in c.windows(2) {
        assert!(pair[1] > pair[0], "sweep must grow: {c:?}");
    }
    assert!(c[6] > 2.5 * c[0], "overall growth: {c:?}");
    for pair in c[3..].windows(2) {
        let ratio = pair[1] / pair[0];
        assert!(
            (1.25..1.40).contains(&ratio),
            "asymptotic halving ratio should bracket 2^0.4: {c:?}"
        );
    }
}

#[test]
fn method_tags_follow_the_geometry() {
    // Energy support inside the threshold window: pure Plemelj transform.
    let narrow = ModeFunction::cutoff_bump(1, 0.8, 3.6, 0.02).unwrap();
    let f = HalfPlaneFunction::from_modes(vec![narrow.clone()]).unwrap();
    let q = ResolventQuery {
        f: f.clone(),
        g: f.clone(),
        point: QueryPoint::Boundary {
            lambda: 1.2,
            side: Side::Plus,
        },
        mode_cutoff: 6,
        window: None,
    };
    let r = resolvent_element(&q, tables()).unwrap();
    assert_eq!(r.method_tags[&1], MethodTag::LambdaSpacePlemelj);
    // Plemelj jump against the spectral density computed independently.
    let plus = rn_boundary(&narrow, &narrow, table1(), 1.2, Side::Plus).unwrap();
    let minus = rn_boundary(&narrow, &narrow, table1(), 1.2, Side::Minus).unwrap();
    let h = spectral_density(&narrow, &narrow, table1(), 1.2).unwrap();
    assert!(h.re > 1e-3, "density should be visibly nonzero, got {h}");
    let jump = plus.value - minus.value;
    let expect = Complex64::new(0.0, 2.0 * std::f64::consts::PI) * h;
    assert!(
        (jump - expect).norm() < 1e-8 * expect.norm(),
        "{jump} vs {expect}"
    );
    // Support far below the probed energy: window plus remainder.
    let split_q = ResolventQuery {
        f: HalfPlaneFunction::from_modes(vec![frozen().clone()]).unwrap(),
        g: HalfPlaneFunction::from_modes(vec![frozen().clone()]).unwrap(),
        point: QueryPoint::Boundary {
            lambda: 1.2,
            side: Side::Plus,
        },
        mode_cutoff: 6,
        window: None,
    };
    let r2 = resolvent_element(&split_q, tables()).unwrap();
    assert_eq!(r2.method_tags[&1], MethodTag::Split);
    // Off the axis everything stays in momentum space.
    let off_q = ResolventQuery {
        point: QueryPoint::Offaxis { re: 1.2, im: 0.3 },
        ..split_q
    };
    let r3 = resolvent_element(&off_q, tables()).unwrap();
    assert_eq!(r3.method_tags[&1], MethodTag::KSpace);
}

#[test]
fn gate_options_respect_membership() {
    // The member bump passes the gate inside the threshold window.
    let opts = RnBoundaryOptions {
        threshold_window: 0.5,
        allow_nonmember: false,
    };
    let bv = rn_boundary_with(frozen(), frozen(), table1(), 1.2, Side::Plus, &opts).unwrap();
    // A narrower Plemelj window only reshuffles the split, not the value.
    let wide = rn_boundary(frozen(), frozen(), table1(), 1.2, Side::Plus).unwrap();
    assert!(
        (bv.value - wide.value).norm() < 1e-8,
        "window width must not move the value: {} vs {}",
        bv.value,
        wide.value
    );
}
