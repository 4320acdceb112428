//! Geometric localization of harmonics and its certificates.
//!
//! A mode with momentum content up to `k_max` produces a harmonic that
//! lives, up to super-gaussian corrections, in the strip `x ≲ k_max`:
//! the tail mass `∫_L^∞ ‖Π_n f(x,·)‖² dx` decays like `e^{-β(L-k_max)²}`
//! for every admissible rate `β`.  The rate is certified empirically by
//! an ordinary least-squares fit of `-log` tail mass against the squared
//! (shifted) abscissa and compared with the admissible supremum
//! `min(1, (2α+1)/(1+√(2α+1)))` for weight exponent `α`.
//!
//! Behind the certificate stand Agmon-type envelopes for the fiber ground
//! states: beyond the turning point `x_n = √(4n-1)` of the `k = 0` fiber,
//!
//! `|u_n(x,k)| ≤ √2 (x_n-k)^{1/2}
//!     e^{(2/3)√(1-β²)(x_n-k)^{1/2}(x-x_n)^{3/2}} e^{-(β/2)(x-x_n)²}`
//!
//! for `k ≤ 0`, and a gaussian envelope `C e^{-(β/2)(x-k)²}` with an
//! empirical constant for `k ≥ 0`.  The overlap kernel
//! `F(k,k') = ∫ u_n(x,k) u_n(x,k') dx` turns squared harmonic norms into
//! double momentum integrals, whose entire-in-`y` phase `e^{i(k-k')y}`
//! extends them analytically to the closed lower half-plane.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::band::BandTable;
use crate::error::{Error, Result};
use crate::fiber::{Eigenpair, FiberFamily};
use crate::mode::{check_same_grid, membership_report, ModeFunction, Verdict};
use crate::sci17;

/// Decay rate used for the analytic bound on mass beyond the solver box.
const BETA_TAIL: f64 = 0.9;

/// Trapezoid weights of a strictly increasing grid.
fn trapezoid_weights(ks: &[f64]) -> Vec<f64> {
    let n = ks.len();
    (0..n)
        .map(|i| {
            let left = if i == 0 { ks[0] } else { ks[i - 1] };
            let right = if i + 1 == n { ks[n - 1] } else { ks[i + 1] };
            0.5 * (right - left)
        })
        .collect()
}

/// `∫_X^∞ e^{-βt²} dt ≤ e^{-βX²} / (2βX)` for `X > 0`.
fn gaussian_tail_bound(beta: f64, x: f64) -> f64 {
    let x = x.max(1.0);
    (-beta * x * x).exp() / (2.0 * beta * x)
}

/// Empirical gaussian prefactor `max_{x ≥ max(k,0)} |u| e^{β(x-k)²/2}`.
fn empirical_constant(pair: &Eigenpair, beta: f64) -> f64 {
    let h = pair.h_fine;
    let start = (pair.k.max(0.0) / h).floor() as usize;
    pair.u_fine[start.min(pair.u_fine.len())..]
        .iter()
        .enumerate()
        .fold(0.0f64, |m, (j, &u)| {
            let x = (start + j) as f64 * h;
            m.max(u.abs() * (0.5 * beta * (x - pair.k) * (x - pair.k)).exp())
        })
}

/// Tail mass `∫_L^∞ ‖Π_n f(x,·)‖²_{L²(ℝ_y)} dx`, by Plancherel a double
/// quadrature of `|f(k)|² u_n(x,k)²`: trapezoid over the solver grid on
/// `[L, x_max]` plus a gaussian envelope bound for the mass beyond the box.
pub fn tail_mass(mode: &ModeFunction, family: &FiberFamily, l: f64) -> Result<f64> {
    check_same_grid(mode, family)?;
    if l < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tail abscissa must be nonnegative, got {l}"
        )));
    }
    let h = family.h_fine();
    let x_max = family.x_max();
    let wk = trapezoid_weights(mode.ks());
    let grid_part: f64 = family
        .pairs
        .par_iter()
        .zip(mode.samples().par_iter().zip(&wk))
        .map(|(pair, (&f, &w))| {
            let start = (l / h).ceil() as usize;
            let u = &pair.u_fine;
            if start + 1 >= u.len() {
                return 0.0;
            }
            let inner: f64 = u[start..].iter().map(|&v| v * v).sum::<f64>()
                - 0.5 * (u[start] * u[start] + u[u.len() - 1] * u[u.len() - 1]);
            w * f.norm_sqr() * h * inner
        })
        .sum();
    let beyond: f64 = family
        .pairs
        .iter()
        .zip(mode.samples().iter().zip(&wk))
        .map(|(pair, (&f, &w))| {
            let c = empirical_constant(pair, BETA_TAIL);
            w * f.norm_sqr() * c * c * gaussian_tail_bound(BETA_TAIL, l.max(x_max) - pair.k)
        })
        .sum();
    if beyond > 1e-12 * mode.norm_sq().max(1.0) && beyond > 1e-6 * grid_part {
        return Err(Error::TruncationTooSmall {
            mass: beyond,
            x_max,
        });
    }
    Ok(grid_part + beyond)
}

/// Admissible decay-rate supremum `min(1, (2α+1)/(1+√(2α+1)))`.
pub fn theorem_beta_bound(alpha: f64) -> f64 {
    let t = 2.0 * alpha + 1.0;
    1f64.min(t / (1.0 + t.sqrt()))
}

/// Momentum-cut slope `γ = √β / (1+√(2α+1))` of the `k(L) = γL` split.
pub fn gamma_split(beta: f64, alpha: f64) -> f64 {
    beta.sqrt() / (1.0 + (2.0 * alpha + 1.0).sqrt())
}

/// Tail-mass profile with its fitted decay rate.
#[derive(Debug, Clone, Serialize)]
pub struct DecayProfile {
    pub l_grid: Vec<f64>,
    pub tail_mass: Vec<f64>,
    /// OLS slope of `-log(tail/‖f‖²)` against `(L - shift)²`.
    pub fitted_beta: f64,
    pub fit_window: (f64, f64),
    /// Abscissa shift: the top of the momentum support for compactly
    /// supported modes, zero otherwise.
    pub abscissa_shift: f64,
    pub theorem_bound: f64,
    pub gamma: f64,
    pub pass: bool,
}

impl DecayProfile {
    /// Decades of decay spanned by the profile.
    pub fn decades(&self) -> f64 {
        let lo = self.tail_mass.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.tail_mass.iter().cloned().fold(0.0f64, f64::max);
        if lo > 0.0 {
            (hi / lo).log10()
        } else {
            f64::INFINITY
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("L,tail,log_tail\n");
        for (l, t) in self.l_grid.iter().zip(&self.tail_mass) {
            out.push_str(&format!("{},{},{}\n", sci17(*l), sci17(*t), sci17(t.ln())));
        }
        out
    }
}

/// Fit the tail profile over `l_window` and compare the rate against the
/// admissible bound for weight exponent `alpha`.  Non-compact modes must
/// bring a band table and pass the membership test at that exponent.
pub fn decay_certificate(
    mode: &ModeFunction,
    family: &FiberFamily,
    table: Option<&BandTable>,
    alpha: f64,
    l_window: (f64, f64),
    n_steps: usize,
) -> Result<DecayProfile> {
    if !(l_window.0 >= 0.0 && l_window.1 > l_window.0) {
        return Err(Error::InvalidParameter(format!(
            "bad fit window ({}, {})",
            l_window.0, l_window.1
        )));
    }
    if n_steps < 4 {
        return Err(Error::InvalidParameter(
            "need at least 4 profile points".into(),
        ));
    }
    let shift = match mode.support_hint() {
        Some((_, hi)) => hi,
        None => {
            let t = table.ok_or_else(|| {
                Error::InvalidParameter(
                    "mode without compact support needs a band table for the membership gate"
                        .into(),
                )
            })?;
            let s = (alpha + 0.6).max(1.0);
            let report = membership_report(mode, t, alpha, s)?;
            if report.verdict != Verdict::In {
                return Err(Error::MembershipViolation {
                    threshold: t.threshold(),
                    value: report.vanishing_value,
                });
            }
            0.0
        }
    };
    let l_grid: Vec<f64> = (0..n_steps)
        .map(|i| {
            l_window.0 + (l_window.1 - l_window.0) * i as f64 / (n_steps - 1) as f64
        })
        .collect();
    let tails = l_grid
        .iter()
        .map(|&l| tail_mass(mode, family, l))
        .collect::<Result<Vec<f64>>>()?;
    let norm_sq = mode.norm_sq();
    if tails.iter().any(|&t| t <= 0.0) {
        return Err(Error::DegenerateFit(f64::INFINITY));
    }
    let decades = (tails[0] / tails[n_steps - 1]).log10();
    if decades < 4.0 {
        return Err(Error::DegenerateFit(decades));
    }
    // OLS of -log(tail/‖f‖²) on the squared shifted abscissa.
    let xs: Vec<f64> = l_grid.iter().map(|&l| (l - shift) * (l - shift)).collect();
    let ys: Vec<f64> = tails.iter().map(|&t| -(t / norm_sq).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|&x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    let fitted_beta = sxy / sxx;
    let theorem_bound = theorem_beta_bound(alpha);
    Ok(DecayProfile {
        l_grid,
        tail_mass: tails,
        fitted_beta,
        fit_window: l_window,
        abscissa_shift: shift,
        theorem_bound,
        gamma: gamma_split(fitted_beta, alpha),
        pass: fitted_beta >= theorem_bound,
    })
}

/// Pointwise envelope check for one fiber ground state.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnvelopeReport {
    pub band: usize,
    pub k: f64,
    pub beta: f64,
    /// Turning-point branch (`k ≤ 0`): `min_{x ≥ x_n} (envelope - |u|)`.
    pub margin: Option<f64>,
    /// Gaussian branch (`k ≥ 0`): empirical prefactor of
    /// `C e^{-(β/2)(x-k)²}`.
    pub empirical_constant: Option<f64>,
    pub sup_norm: f64,
    /// `√2 λ_n(k)^{1/4}`, the normalization bound on `‖u‖_∞`.
    pub sup_bound: f64,
    pub pass: bool,
}

/// Check the Agmon envelope of one eigenpair at rate `beta ∈ (0,1)`.
pub fn agmon_envelope(pair: &Eigenpair, beta: f64) -> Result<EnvelopeReport> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "envelope rate must lie in (0, 1), got {beta}"
        )));
    }
    let x_n = ((4 * pair.band - 1) as f64).sqrt();
    let h = pair.h_fine;
    let margin = if pair.k <= 0.0 {
        let d = x_n - pair.k;
        let grow = (2.0 / 3.0) * (1.0 - beta * beta).sqrt() * d.sqrt();
        let start = (x_n / h).ceil() as usize;
        let m = pair.u_fine[start..]
            .iter()
            .enumerate()
            .fold(f64::INFINITY, |m, (j, &u)| {
                let dx = (start + j) as f64 * h - x_n;
                let env = std::f64::consts::SQRT_2
                    * d.sqrt()
                    * (grow * dx.powf(1.5) - 0.5 * beta * dx * dx).exp();
                m.min(env - u.abs())
            });
        Some(m)
    } else {
        None
    };
    let constant = if pair.k >= 0.0 {
        Some(empirical_constant(pair, beta))
    } else {
        None
    };
    let sup_norm = pair.sup_norm();
    let sup_bound = std::f64::consts::SQRT_2 * pair.lambda.powf(0.25);
    let pass = margin.map_or(true, |m| m >= -1e-10)
        && constant.map_or(true, |c| c.is_finite() && c > 0.0)
        && sup_norm <= sup_bound + 1e-10;
    Ok(EnvelopeReport {
        band: pair.band,
        k: pair.k,
        beta,
        margin,
        empirical_constant: constant,
        sup_norm,
        sup_bound,
        pass,
    })
}

/// Cross-momentum overlaps `F(k,k') = ∫ u_n(x,k) u_n(x,k') dx` of one
/// family, a symmetric matrix with unit diagonal and `|F| ≤ 1`.
#[derive(Debug, Clone)]
pub struct OverlapKernel {
    ks: Vec<f64>,
    values: Vec<f64>,
}

impl OverlapKernel {
    pub fn ks(&self) -> &[f64] {
        &self.ks
    }

    pub fn len(&self) -> usize {
        self.ks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ks.is_empty()
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ks.len() + j]
    }

    /// Largest magnitude over all entries.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    /// Largest deviation of the diagonal from 1.
    pub fn diagonal_deviation(&self) -> f64 {
        (0..self.ks.len()).fold(0.0f64, |m, i| m.max((self.value(i, i) - 1.0).abs()))
    }
}

/// Assemble the overlap kernel of a family (shared box by construction).
pub fn overlap_kernel(family: &FiberFamily) -> OverlapKernel {
    let m = family.pairs.len();
    let h = family.h_fine();
    let upper: Vec<Vec<f64>> = family
        .pairs
        .par_iter()
        .enumerate()
        .map(|(i, pi)| {
            (i..m)
                .map(|j| {
                    h * pi
                        .u_fine
                        .iter()
                        .zip(&family.pairs[j].u_fine)
                        .map(|(&a, &b)| a * b)
                        .sum::<f64>()
                })
                .collect()
        })
        .collect();
    let mut values = vec![0.0; m * m];
    for (i, row) in upper.iter().enumerate() {
        for (dj, &v) in row.iter().enumerate() {
            let j = i + dj;
            values[i * m + j] = v;
            values[j * m + i] = v;
        }
    }
    OverlapKernel {
        ks: family.ks.clone(),
        values,
    }
}

/// Analytic continuation of the squared harmonic norm,
/// `G(y) = (2π)^{-1} ∬ e^{i(k-k')y} f(k) f̄(k') F(k,k') dk dk'`,
/// for `y` in the closed lower half-plane.  At real `y` this is
/// `‖Π_n f(·,y)‖²`.
pub fn analytic_continuation(
    mode: &ModeFunction,
    kernel: &OverlapKernel,
    y: Complex64,
) -> Result<Complex64> {
    if y.im > 0.0 {
        return Err(Error::InvalidParameter(format!(
            "continuation lives in the closed lower half-plane, got Im y = {}",
            y.im
        )));
    }
    if mode.ks().len() != kernel.ks.len()
        || mode
            .ks()
            .iter()
            .zip(&kernel.ks)
            .any(|(&a, &b)| (a - b).abs() > 1e-12)
    {
        return Err(Error::InvalidParameter(
            "mode grid does not match the kernel grid".into(),
        ));
    }
    let eta = -y.im;
    let ks = mode.ks();
    let n = ks.len();
    // The phase grows like e^{ηk} rightward in one factor and e^{-ηk}
    // leftward in the other; the coefficient tails must win at the grid
    // ends or the double sum is a truncation artifact.
    let grow: Vec<f64> = (0..n)
        .map(|i| mode.samples()[i].norm() * (eta * ks[i]).exp())
        .collect();
    let fall: Vec<f64> = (0..n)
        .map(|i| mode.samples()[i].norm() * (-eta * ks[i]).exp())
        .collect();
    let peak = grow
        .iter()
        .chain(&fall)
        .fold(0.0f64, |m, &v| m.max(v));
    if peak == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let edge = grow[n - 1].max(fall[0]);
    if edge > 1e-6 * peak {
        return Err(Error::DominationFailure(edge / peak));
    }
    let wk = trapezoid_weights(ks);
    let a: Vec<Complex64> = (0..n)
        .map(|i| wk[i] * mode.samples()[i] * (Complex64::i() * ks[i] * y).exp())
        .collect();
    let b: Vec<Complex64> = (0..n)
        .map(|j| wk[j] * mode.samples()[j].conj() * (-Complex64::i() * ks[j] * y).exp())
        .collect();
    let mut total = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let mut inner = Complex64::new(0.0, 0.0);
        for j in 0..n {
            inner += Complex64::new(kernel.value(i, j), 0.0) * b[j];
        }
        total += a[i] * inner;
    }
    Ok(total / (2.0 * std::f64::consts::PI))
}

/// Cauchy-Riemann residual of the continuation on a five-point cross of
/// the given radius, normalized by `max(1, |G(y)|)`.
pub fn cr_residual(
    mode: &ModeFunction,
    kernel: &OverlapKernel,
    y: Complex64,
    radius: f64,
) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter("radius must be positive".into()));
    }
    if y.im + radius > 0.0 {
        return Err(Error::InvalidParameter(
            "stencil must stay in the open lower half-plane".into(),
        ));
    }
    let g = analytic_continuation(mode, kernel, y)?;
    let gpx = analytic_continuation(mode, kernel, y + radius)?;
    let gmx = analytic_continuation(mode, kernel, y - radius)?;
    let gpy = analytic_continuation(mode, kernel, y + Complex64::i() * radius)?;
    let gmy = analytic_continuation(mode, kernel, y - Complex64::i() * radius)?;
    let dx = (gpx - gmx) / (2.0 * radius);
    let dy = (gpy - gmy) / (Complex64::i() * 2.0 * radius);
    Ok((dx - dy).norm() / g.norm().max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::{solve_band, Discretization};
    use std::sync::OnceLock;

    fn decay_fixture() -> &'static (ModeFunction, FiberFamily) {
        static F: OnceLock<(ModeFunction, FiberFamily)> = OnceLock::new();
        F.get_or_init(|| {
            let mode = ModeFunction::cutoff_bump(1, 0.0, 1.0, 0.05).unwrap();
            let family =
                FiberFamily::solve(1, mode.ks(), &Discretization::default()).unwrap();
            (mode, family)
        })
    }

    fn continuation_fixture() -> &'static (ModeFunction, OverlapKernel) {
        static F: OnceLock<(ModeFunction, OverlapKernel)> = OnceLock::new();
        F.get_or_init(|| {
            let raw = ModeFunction::gaussian_bump(1, 0.5, 0.3, 0.05).unwrap();
            let mode = raw.scale(Complex64::new(raw.norm_sq().sqrt().recip(), 0.0));
            let family =
                FiberFamily::solve(1, mode.ks(), &Discretization::default()).unwrap();
            (mode, overlap_kernel(&family))
        })
    }

    #[test]
    fn bound_and_gamma_arithmetic() {
        assert!((theorem_beta_bound(0.4) - 0.7687).abs() < 1e-4);
        assert!((gamma_split(0.75, 0.4) - 0.3698).abs() < 1e-4);
        // Large alpha saturates the min at 1.
        assert_eq!(theorem_beta_bound(5.0), 1.0);
    }

    #[test]
    fn tail_mass_recovers_the_norm_and_decreases() {
        let (mode, family) = decay_fixture();
        let full = tail_mass(mode, family, 0.0).unwrap();
        let norm = mode.norm_sq();
        assert!((full - norm).abs() < 1e-4 * norm, "{full} vs {norm}");
        let mut prev = full;
        for l in [1.0, 2.0, 3.0, 5.0] {
            let t = tail_mass(mode, family, l).unwrap();
            assert!(t >= 0.0 && t <= prev + 1e-15);
            prev = t;
        }
        // Far beyond the box only the analytic bound remains.
        let beyond = tail_mass(mode, family, family.x_max() + 2.0).unwrap();
        assert!(beyond < 1e-12, "beyond-box tail {beyond}");
    }

    #[test]
    fn certificate_matches_the_fitted_rate() {
        let (mode, family) = decay_fixture();
        let profile =
            decay_certificate(mode, family, None, 0.4, (3.0, 6.0), 13).unwrap();
        assert!(
            (profile.fitted_beta - 1.1077).abs() < 5e-3,
            "beta {}",
            profile.fitted_beta
        );
        assert!(profile.fitted_beta >= 0.7);
        assert!(profile.pass, "beta {} bound {}", profile.fitted_beta, profile.theorem_bound);
        assert!(profile.decades() >= 4.0);
        assert_eq!(profile.abscissa_shift, 1.0);
        assert!((profile.theorem_bound - 0.7687).abs() < 1e-4);
        let csv = profile.to_csv();
        assert!(csv.starts_with("L,tail,log_tail\n"));
        assert_eq!(csv.lines().count(), 14);
    }

    #[test]
    fn shallow_window_is_a_degenerate_fit() {
        let (mode, family) = decay_fixture();
        let err = decay_certificate(mode, family, None, 0.4, (0.5, 1.5), 5);
        assert!(matches!(err, Err(Error::DegenerateFit(d)) if d < 4.0), "{err:?}");
    }

    #[test]
    fn noncompact_mode_needs_a_table() {
        let (_, family) = decay_fixture();
        let mode = ModeFunction::from_fn(
            1,
            family.ks.as_slice(),
            |_| Complex64::new(1.0, 0.0),
            None,
        )
        .unwrap();
        assert!(matches!(
            decay_certificate(&mode, family, None, 0.4, (3.0, 6.0), 5),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn turning_point_envelopes_dominate() {
        let disc = Discretization::default();
        // Interior minimum, insensitive to the box size.
        let deep = agmon_envelope(&solve_band(-3.0, 1, &disc).unwrap(), 0.5).unwrap();
        let margin = deep.margin.unwrap();
        assert!((margin - 2.8481).abs() < 5e-3, "margin {margin}");
        // Tighter rates: the minimum migrates to the box edge (where the
        // envelope itself decays), so only domination is asserted.
        for (k, beta) in [(-1.0, 0.75), (0.0, 0.5), (0.0, 0.75)] {
            let pair = solve_band(k, 1, &disc).unwrap();
            let report = agmon_envelope(&pair, beta).unwrap();
            assert!(
                report.margin.unwrap() > 0.0,
                "envelope fails at k={k}, beta={beta}: {:?}",
                report.margin
            );
            assert!(report.pass);
            assert!(report.sup_norm <= report.sup_bound);
        }
    }

    #[test]
    fn gaussian_branch_reports_a_constant() {
        let pair = solve_band(3.0, 1, &Discretization::default()).unwrap();
        let report = agmon_envelope(&pair, 0.9).unwrap();
        assert!(report.margin.is_none());
        let c = report.empirical_constant.unwrap();
        assert!(c.is_finite() && c > 0.0);
        assert!(report.pass);
        // The k = 0 pair sits in both branches and reports both fields.
        let origin = solve_band(0.0, 1, &Discretization::default()).unwrap();
        let both = agmon_envelope(&origin, 0.9).unwrap();
        assert!(both.margin.is_some() && both.empirical_constant.is_some());
        assert!(both.pass);
    }

    #[test]
    fn envelope_rate_must_be_admissible() {
        let pair = solve_band(0.0, 1, &Discretization::default()).unwrap();
        assert!(agmon_envelope(&pair, 1.0).is_err());
        assert!(agmon_envelope(&pair, 0.0).is_err());
    }

    #[test]
    fn overlap_kernel_unit_diagonal_and_contraction() {
        let family = FiberFamily::solve(
            1,
            &[0.0, 3.0],
            &Discretization::default(),
        )
        .unwrap();
        let kernel = overlap_kernel(&family);
        assert!(kernel.diagonal_deviation() < 1e-8);
        assert!(kernel.max_abs() <= 1.0 + 1e-12);
        assert_eq!(kernel.value(0, 1), kernel.value(1, 0));
        assert!(
            (kernel.value(0, 1) - 0.31525483).abs() < 1e-6,
            "F(0,3) = {}",
            kernel.value(0, 1)
        );
    }

    #[test]
    fn continuation_matches_the_oracle_point() {
        let (mode, kernel) = continuation_fixture();
        let g = analytic_continuation(mode, kernel, Complex64::new(0.0, -0.5)).unwrap();
        assert!((g.re - 0.12054642).abs() < 1e-6, "G(-0.5i) = {g}");
        assert!(g.im.abs() < 1e-10);
        let real = analytic_continuation(mode, kernel, Complex64::new(0.7, 0.0)).unwrap();
        assert!((real.re - 0.1166292685).abs() < 1e-6, "G(0.7) = {real}");
        assert!(real.im.abs() < 1e-12);
    }

    #[test]
    fn continuation_is_holomorphic_inside() {
        let (mode, kernel) = continuation_fixture();
        let r = cr_residual(mode, kernel, Complex64::new(0.0, -0.5), 1e-3).unwrap();
        assert!(r < 1e-8, "CR residual {r}");
    }

    #[test]
    fn continuation_rejects_bad_inputs() {
        let (mode, kernel) = continuation_fixture();
        assert!(analytic_continuation(mode, kernel, Complex64::new(0.0, 0.1)).is_err());
        let zero = mode.scale(Complex64::new(0.0, 0.0));
        let g = analytic_continuation(&zero, kernel, Complex64::new(0.0, -0.5)).unwrap();
        assert_eq!(g, Complex64::new(0.0, 0.0));
        // Heavy tail: a flat coefficient cannot dominate the phase growth.
        let flat = ModeFunction::from_fn(
            1,
            mode.ks(),
            |_| Complex64::new(1.0, 0.0),
            None,
        )
        .unwrap();
        assert!(matches!(
            analytic_continuation(&flat, kernel, Complex64::new(0.0, -2.0)),
            Err(Error::DominationFailure(_))
        ));
        // The stencil may not poke through the real axis.
        assert!(cr_residual(mode, kernel, Complex64::new(0.0, -5e-4), 1e-3).is_err());
    }
}
