//! Resolvent matrix elements and their boundary values on the spectrum.
//!
//! For finite mode stacks the resolvent pairing diagonalizes over bands,
//!
//! `⟨R(z)f, g⟩ = Σ_n r_n(z)`,   `r_n(z) = ∫ f_n(k) ḡ_n(k) / (λ_n(k) - z) dk`,
//!
//! and each `r_n` extends to the spectrum from either side.  Off the cut
//! the k-space form is regular and integrated directly.  On the cut the
//! energy substitution `λ = λ_n(k)` produces the spectral density
//!
//! `H_n(λ) = f̃_n(λ) ḡ̃_n(λ) / |λ̃_n'(λ)| = (μ_n f̃_n)(λ) · conj(μ_n g̃_n)(λ)`,
//!
//! and Plemelj gives `r_n^±(λ) = p.v.∫ H_n/(t-λ) dt ± iπ H_n(λ)`.  The
//! integral is split into a bounded energy window `J` around `λ` handled
//! by the Cauchy engine and a k-space remainder where the denominator is
//! bounded away from zero.  Near a Landau threshold `E_n = 2n-1` the
//! window reaches down to the threshold itself; that evaluation is only
//! meaningful when `H_n(E_n) = 0`, which is exactly the absorption-space
//! membership condition, so non-member modes are refused unless the
//! caller explicitly asks for a negative control.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::band::BandTable;
use crate::cauchy::{self, BoundaryValue, DensityFunction, Side};
use crate::error::{Error, Result};
use crate::mode::{membership_report, HalfPlaneFunction, ModeFunction, Verdict};
use crate::quad::{integrate, QuadOptions};

/// Default number of bands summed explicitly before the analytic tail
/// bound takes over.
pub const DEFAULT_MODE_CUTOFF: usize = 6;

/// Default width of the energy window handled by the Plemelj engine.
pub const DEFAULT_THRESHOLD_WINDOW: f64 = 1.0;

/// Membership gate parameters used when a boundary value reaches into a
/// threshold window.
const GATE_ALPHA: f64 = 0.4;
const GATE_S: f64 = 1.0;

/// A complex number split into serializable parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexParts {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexParts {
    fn from(z: Complex64) -> Self {
        ComplexParts { re: z.re, im: z.im }
    }
}

/// Where a resolvent query is evaluated.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum QueryPoint {
    /// Off the real axis (or real, strictly below the spectrum).
    Offaxis { re: f64, im: f64 },
    /// One-sided limit on the spectrum.
    Boundary { lambda: f64, side: Side },
}

/// A bilinear resolvent query `⟨R(·)f, g⟩`.
#[derive(Debug, Clone)]
pub struct ResolventQuery {
    pub f: HalfPlaneFunction,
    pub g: HalfPlaneFunction,
    pub point: QueryPoint,
    /// Bands up to this index are summed explicitly.
    pub mode_cutoff: usize,
    /// Compact spectral window of interest, entering the tail bound
    /// through its distance to the neglected bands.
    pub window: Option<(f64, f64)>,
}

/// How one mode's contribution was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodTag {
    KSpace,
    LambdaSpacePlemelj,
    Split,
}

/// Assembled resolvent element with its per-mode bookkeeping.
#[derive(Debug, Clone, Serialize)]
pub struct LapResult {
    #[serde(with = "crate::cauchy::complex_parts")]
    pub value: Complex64,
    pub per_mode: BTreeMap<usize, ComplexParts>,
    /// Bound on the neglected high-band contribution, `d_K^{-2}‖f‖‖g‖`
    /// over the mass above the cutoff; zero when that mass vanishes.
    pub tail_bound: f64,
    pub method_tags: BTreeMap<usize, MethodTag>,
}

fn table_for<'a>(bands: &'a [BandTable], n: usize) -> Result<&'a BandTable> {
    bands
        .iter()
        .find(|t| t.band() == n)
        .ok_or_else(|| Error::InvalidParameter(format!("no band table for n = {n}")))
}

fn check_bands(f: &ModeFunction, g: &ModeFunction, table: &BandTable) -> Result<()> {
    if f.band() != table.band() || g.band() != table.band() {
        return Err(Error::InvalidParameter(format!(
            "band mismatch: f = {}, g = {}, table = {}",
            f.band(),
            g.band(),
            table.band()
        )));
    }
    Ok(())
}

/// Merged momentum breakpoints of both mode grids inside `[lo, hi]`.
/// Integrating segment by segment keeps the piecewise-linear kinks of the
/// sampled coefficients on panel boundaries, where they cost nothing.
fn merged_breakpoints(f: &ModeFunction, g: &ModeFunction, lo: f64, hi: f64) -> Vec<f64> {
    let mut pts = vec![lo];
    for &k in f.ks().iter().chain(g.ks().iter()) {
        if k > lo + 1e-12 && k < hi - 1e-12 {
            pts.push(k);
        }
    }
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    pts
}

/// `∫ f(k) ḡ(k) w(k) dk` over the common support, segment by segment.
fn segmented_integral(
    f: &ModeFunction,
    g: &ModeFunction,
    lo: f64,
    hi: f64,
    w: impl Fn(f64) -> Complex64,
) -> Result<(Complex64, f64)> {
    if !(hi > lo) {
        return Ok((Complex64::new(0.0, 0.0), 0.0));
    }
    let pts = merged_breakpoints(f, g, lo, hi);
    let opts = QuadOptions {
        rel_tol: 1e-11,
        abs_tol: 1e-15,
        max_panels: 1 << 12,
    };
    let mut value = Complex64::new(0.0, 0.0);
    let mut error = 0.0;
    for seg in pts.windows(2) {
        let r = integrate(
            |k| f.eval(k) * g.eval(k).conj() * w(k),
            seg[0],
            seg[1],
            &opts,
        )?;
        value += r.value;
        error += r.error;
    }
    Ok((value, error))
}

/// Common momentum range of two modes within a table.
fn common_range(f: &ModeFunction, g: &ModeFunction, table: &BandTable) -> (f64, f64) {
    let (tlo, thi) = table.k_range();
    let lo = f.ks()[0].max(g.ks()[0]).max(tlo);
    let hi = f.ks().last().unwrap().min(*g.ks().last().unwrap()).min(thi);
    (lo, hi)
}

/// `r_n(z)` in momentum space, for `z` off the closed band.
pub fn rn_value(
    f: &ModeFunction,
    g: &ModeFunction,
    table: &BandTable,
    z: Complex64,
) -> Result<Complex64> {
    check_bands(f, g, table)?;
    if z.im == 0.0 {
        let dist = table.threshold() - z.re;
        if dist <= 1e-6 {
            return Err(Error::EndpointProximity {
                lambda: z.re,
                dist: dist.max(0.0),
            });
        }
    }
    let (lo, hi) = common_range(f, g, table);
    let (value, _) = segmented_integral(f, g, lo, hi, |k| {
        (Complex64::new(table.evaluate(k), 0.0) - z).inv()
    })?;
    Ok(value)
}

/// Spectral density `H_n(λ) = (μ_n f̃_n)(λ) conj(μ_n g̃_n)(λ)`.
pub fn spectral_density(
    f: &ModeFunction,
    g: &ModeFunction,
    table: &BandTable,
    lambda: f64,
) -> Result<Complex64> {
    check_bands(f, g, table)?;
    let k = table.invert_momentum(lambda)?;
    let mu = table.weight_mu(lambda)?;
    Ok(f.eval(k) * g.eval(k).conj() * (mu * mu))
}

/// Same density with inversion failures flattened to zero, the form the
/// quadrature closures need.
fn density_or_zero(f: &ModeFunction, g: &ModeFunction, table: &BandTable, lambda: f64) -> Complex64 {
    spectral_density(f, g, table, lambda).unwrap_or(Complex64::new(0.0, 0.0))
}

/// `r_n(z)` through the energy representation `∫ H_n(t)/(t-z) dt`, used
/// as the change-of-variables cross-check for [`rn_value`].
pub fn rn_lambda_space(
    f: &ModeFunction,
    g: &ModeFunction,
    table: &BandTable,
    z: Complex64,
) -> Result<Complex64> {
    check_bands(f, g, table)?;
    let e_n = table.threshold();
    let lam_cut = table.lambda_range().1;
    let (f2, g2, t2) = (f.clone(), g.clone(), table.clone());
    let psi = DensityFunction::from_fn(e_n, lam_cut, 33, 0.5, move |t| {
        density_or_zero(&f2, &g2, &t2, t)
    })?;
    cauchy::offaxis_cauchy(&psi, z)
}

/// Options of the boundary-value assembly.
#[derive(Debug, Clone, Copy)]
pub struct RnBoundaryOptions {
    /// Width of the energy window passed to the Plemelj engine.
    pub threshold_window: f64,
    /// Skip the membership gate near thresholds (negative controls).
    pub allow_nonmember: bool,
}

impl Default for RnBoundaryOptions {
    fn default() -> Self {
        RnBoundaryOptions {
            threshold_window: DEFAULT_THRESHOLD_WINDOW,
            allow_nonmember: false,
        }
    }
}

/// Energy window `J` used for the Plemelj part of a boundary value at
/// `lambda`: anchored at the threshold inside the threshold window,
/// centered otherwise, always clipped to the tabulated range.
fn plemelj_window(table: &BandTable, lambda: f64, width: f64) -> (f64, f64) {
    let e_n = table.threshold();
    let lam_cut = table.lambda_range().1;
    if lambda - e_n < width {
        (e_n, (e_n + width).min(lam_cut))
    } else {
        ((lambda - 0.5 * width).max(e_n), (lambda + 0.5 * width).min(lam_cut))
    }
}

/// One-sided boundary value `r_n^±(λ)` with default options.
pub fn rn_boundary(
    f: &ModeFunction,
    g: &ModeFunction,
    table: &BandTable,
    lambda: f64,
    side: Side,
) -> Result<BoundaryValue> {
    rn_boundary_with(f, g, table, lambda, side, &RnBoundaryOptions::default())
}

/// One-sided boundary value `r_n^±(λ)`, split into a Plemelj window and a
/// regular k-space remainder.
pub fn rn_boundary_with(
    f: &ModeFunction,
    g: &ModeFunction,
    table: &BandTable,
    lambda: f64,
    side: Side,
    opts: &RnBoundaryOptions,
) -> Result<BoundaryValue> {
    check_bands(f, g, table)?;
    let e_n = table.threshold();
    let lam_cut = table.lambda_range().1;
    if lambda >= lam_cut - 1e-6 {
        return Err(Error::OutOfTabulatedRange(lambda));
    }
    if lambda <= e_n - 1e-6 {
        // Below the band there is no cut to cross; both sides coincide.
        let (lo, hi) = common_range(f, g, table);
        let (value, error_estimate) = segmented_integral(f, g, lo, hi, |k| {
            Complex64::new((table.evaluate(k) - lambda).recip(), 0.0)
        })?;
        return Ok(BoundaryValue {
            lambda,
            side,
            value,
            pv_part: value,
            jump_part: Complex64::new(0.0, 0.0),
            error_estimate,
        });
    }
    if lambda <= e_n + 1e-9 {
        return Err(Error::ResolutionFloor(lambda - e_n));
    }
    if lambda - e_n < opts.threshold_window && !opts.allow_nonmember {
        for m in [f, g] {
            let report = membership_report(m, table, GATE_ALPHA, GATE_S)?;
            if report.verdict != Verdict::In {
                return Err(Error::MembershipViolation {
                    threshold: e_n,
                    value: report.vanishing_value,
                });
            }
        }
    }
    let (j_lo, j_hi) = plemelj_window(table, lambda, opts.threshold_window);
    // The density is smooth strictly inside the band; only a window
    // anchored at the threshold carries the square-root-type vanishing.
    let hint = if j_lo - e_n < 1e-12 { 0.5 } else { 1.0 };
    let (f2, g2, t2) = (f.clone(), g.clone(), table.clone());
    let psi = DensityFunction::from_fn(j_lo, j_hi, 33, hint, move |t| {
        density_or_zero(&f2, &g2, &t2, t)
    })?;
    let bv = cauchy::boundary_value(&psi, lambda, side)?;
    // k-space remainder over momenta whose energies fall outside J.
    let (lo, hi) = common_range(f, g, table);
    let ka = table.invert_momentum(j_hi)?;
    let kb = if j_lo - e_n < 1e-12 {
        f64::INFINITY
    } else {
        table.invert_momentum(j_lo)?
    };
    let weight = |k: f64| Complex64::new((table.evaluate(k) - lambda).recip(), 0.0);
    let (left, left_err) = segmented_integral(f, g, lo, ka.min(hi), &weight)?;
    let (right, right_err) = if kb.is_finite() {
        segmented_integral(f, g, kb.max(lo), hi, &weight)?
    } else {
        (Complex64::new(0.0, 0.0), 0.0)
    };
    let remainder = left + right;
    Ok(BoundaryValue {
        lambda,
        side,
        value: bv.value + remainder,
        pv_part: bv.pv_part + remainder,
        jump_part: bv.jump_part,
        error_estimate: bv.error_estimate + left_err + right_err,
    })
}

/// Paired-mode view of two stacks: only bands present in both can pair.
fn shared_modes<'a>(
    f: &'a HalfPlaneFunction,
    g: &'a HalfPlaneFunction,
) -> Vec<(&'a ModeFunction, &'a ModeFunction)> {
    let mut out: Vec<(&ModeFunction, &ModeFunction)> = Vec::new();
    for mf in f.modes() {
        if let Some(mg) = g.modes().iter().find(|m| m.band() == mf.band()) {
            out.push((mf, mg));
        }
    }
    out.sort_by_key(|(m, _)| m.band());
    out
}

/// Evaluate one shared mode pair at a query point.
fn rn_dispatch(
    mf: &ModeFunction,
    mg: &ModeFunction,
    table: &BandTable,
    point: &QueryPoint,
    opts: &RnBoundaryOptions,
) -> Result<(Complex64, MethodTag)> {
    match *point {
        QueryPoint::Offaxis { re, im } => Ok((
            rn_value(mf, mg, table, Complex64::new(re, im))?,
            MethodTag::KSpace,
        )),
        QueryPoint::Boundary { lambda, side } => {
            let e_n = table.threshold();
            if lambda <= e_n - 1e-6 {
                return Ok((
                    rn_value(mf, mg, table, Complex64::new(lambda, 0.0))?,
                    MethodTag::KSpace,
                ));
            }
            let bv = rn_boundary_with(mf, mg, table, lambda, side, opts)?;
            let (j_lo, j_hi) = plemelj_window(table, lambda, opts.threshold_window);
            let (lo, hi) = common_range(mf, mg, table);
            // Whole common support inside the energy window: pure Plemelj.
            let pure = hi <= lo
                || (table.evaluate(lo) <= j_hi + 1e-12 && table.evaluate(hi) >= j_lo - 1e-12);
            let tag = if pure {
                MethodTag::LambdaSpacePlemelj
            } else {
                MethodTag::Split
            };
            Ok((bv.value, tag))
        }
    }
}

/// Assemble `⟨R f, g⟩` over explicit bands plus an analytic tail bound.
pub fn resolvent_element(q: &ResolventQuery, bands: &[BandTable]) -> Result<LapResult> {
    resolvent_element_with(q, bands, &RnBoundaryOptions::default())
}

/// Like [`resolvent_element`] with explicit boundary options.
pub fn resolvent_element_with(
    q: &ResolventQuery,
    bands: &[BandTable],
    opts: &RnBoundaryOptions,
) -> Result<LapResult> {
    let max_band = q
        .f
        .modes()
        .iter()
        .chain(q.g.modes())
        .map(ModeFunction::band)
        .max()
        .unwrap_or(0);
    if q.mode_cutoff < max_band {
        return Err(Error::InvalidParameter(format!(
            "mode cutoff {} below the highest populated band {max_band}",
            q.mode_cutoff
        )));
    }
    if let QueryPoint::Boundary { lambda, .. } = q.point {
        if lambda < crate::band::landau_level(1) - 1.0 {
            return Err(Error::InvalidParameter(format!(
                "boundary energy {lambda} lies deep below the spectrum; query off-axis instead"
            )));
        }
    }
    let mut per_mode = BTreeMap::new();
    let mut method_tags = BTreeMap::new();
    let mut value = Complex64::new(0.0, 0.0);
    for (mf, mg) in shared_modes(&q.f, &q.g) {
        let table = table_for(bands, mf.band())?;
        let (v, tag) = rn_dispatch(mf, mg, table, &q.point, opts)?;
        value += v;
        per_mode.insert(mf.band(), ComplexParts::from(v));
        method_tags.insert(mf.band(), tag);
    }
    // Mass above the cutoff is excluded by the cutoff invariant, so the
    // bound is exact zero whenever the stacks are finite; the distance
    // formula is kept for reporting against an explicit window.
    let mass_f: f64 = q
        .f
        .modes()
        .iter()
        .filter(|m| m.band() > q.mode_cutoff)
        .map(|m| m.norm_sq())
        .sum();
    let mass_g: f64 = q
        .g
        .modes()
        .iter()
        .filter(|m| m.band() > q.mode_cutoff)
        .map(|m| m.norm_sq())
        .sum();
    let tail_bound = if mass_f > 0.0 && mass_g > 0.0 {
        let d_k = tail_distance(q, q.mode_cutoff)?;
        mass_f.sqrt() * mass_g.sqrt() / (d_k * d_k)
    } else {
        0.0
    };
    Ok(LapResult {
        value,
        per_mode,
        tail_bound,
        method_tags,
    })
}

/// Distance from the query (or its window) to the first neglected band.
pub fn tail_distance(q: &ResolventQuery, cutoff: usize) -> Result<f64> {
    let next = crate::band::landau_level(cutoff + 1);
    let top = match (q.window, &q.point) {
        (Some((_, b)), _) => b,
        (None, QueryPoint::Offaxis { re, im }) => {
            if *re >= next {
                return Ok(im.abs());
            }
            return Ok(Complex64::new(re - next, *im).norm().min(next - re));
        }
        (None, QueryPoint::Boundary { lambda, .. }) => *lambda,
    };
    let d = next - top;
    if d <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "window top {top} reaches the first neglected band at {next}"
        )));
    }
    Ok(d)
}

/// `⟨E(a,b) f, g⟩` by momentum-space integration over the energy window's
/// preimage in each shared band.
pub fn spectral_projector_element(
    f: &HalfPlaneFunction,
    g: &HalfPlaneFunction,
    a: f64,
    b: f64,
    bands: &[BandTable],
) -> Result<Complex64> {
    if !(a < b) {
        return Err(Error::InvalidParameter(format!(
            "need a < b, got ({a}, {b})"
        )));
    }
    let mut total = Complex64::new(0.0, 0.0);
    for (mf, mg) in shared_modes(f, g) {
        let table = table_for(bands, mf.band())?;
        let e_n = table.threshold();
        let lam_cut = table.lambda_range().1;
        if b <= e_n || a >= lam_cut {
            continue;
        }
        let (lo, hi) = common_range(mf, mg, table);
        // λ_n decreases in k, so the window (a, b) pulls back to
        // (k(b), k(a)); ends beyond tabulation fall back to the grid.
        let k_lo = if b >= lam_cut {
            lo
        } else {
            table.invert_momentum(b)?.max(lo)
        };
        let k_hi = if a <= e_n + 1e-12 {
            hi
        } else {
            match table.invert(a) {
                Ok(inv) => inv.k.min(hi),
                Err(Error::ResolutionFloor(_)) => hi,
                Err(e) => return Err(e),
            }
        };
        let (v, _) = segmented_integral(mf, mg, k_lo, k_hi, |_| Complex64::new(1.0, 0.0))?;
        total += v;
    }
    Ok(total)
}

/// Rectangle `[λ_lo, λ_hi] × [0, η_max]` in the closed upper half-plane.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HolderWindow {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub eta_max: f64,
}

/// Empirical Hölder-α constant of `z ↦ ⟨R(z)f, g⟩` over a compact window
/// touching the spectrum, sampled on a quasi-uniform grid with dyadic
/// boundary-approach rungs.
pub fn holder_certificate(
    f: &HalfPlaneFunction,
    g: &HalfPlaneFunction,
    window: &HolderWindow,
    alpha: f64,
    n_samples: usize,
    bands: &[BandTable],
    opts: &RnBoundaryOptions,
) -> Result<f64> {
    if !(window.lambda_lo < window.lambda_hi) || window.eta_max < 0.0 {
        return Err(Error::InvalidParameter("degenerate Hölder window".into()));
    }
    if n_samples < 2 {
        return Err(Error::InvalidParameter(
            "need at least 2 energy samples".into(),
        ));
    }
    // Membership gate for every threshold inside the window.
    if !opts.allow_nonmember {
        for (mf, mg) in shared_modes(f, g) {
            let table = table_for(bands, mf.band())?;
            let e_n = table.threshold();
            if e_n >= window.lambda_lo && e_n <= window.lambda_hi {
                for m in [mf, mg] {
                    let report = membership_report(m, table, GATE_ALPHA, GATE_S)?;
                    if report.verdict != Verdict::In {
                        return Err(Error::MembershipViolation {
                            threshold: e_n,
                            value: report.vanishing_value,
                        });
                    }
                }
            }
        }
    }
    let mut etas = vec![0.0];
    if window.eta_max > 0.0 {
        etas.extend((0..5).map(|j| window.eta_max * 0.5f64.powi(j)));
    }
    let mut points = Vec::new();
    for i in 0..n_samples {
        let mut lam = window.lambda_lo
            + (window.lambda_hi - window.lambda_lo) * (i as f64 + 0.5) / n_samples as f64;
        // Step over the unresolvable slivers right at thresholds.
        for t in bands {
            if (lam - t.threshold()).abs() < 2e-6 {
                lam = t.threshold() + 3e-6;
            }
        }
        for &eta in &etas {
            points.push(Complex64::new(lam, eta));
        }
    }
    if points.len() * (points.len() - 1) / 2 > 10_000 {
        return Err(Error::InvalidParameter(format!(
            "{} sample points exceed the pair budget",
            points.len()
        )));
    }
    let values: Vec<Complex64> = points
        .par_iter()
        .map(|&z| {
            let mut total = Complex64::new(0.0, 0.0);
            for (mf, mg) in shared_modes(f, g) {
                let table = table_for(bands, mf.band())?;
                let point = if z.im == 0.0 {
                    QueryPoint::Boundary {
                        lambda: z.re,
                        side: Side::Plus,
                    }
                } else {
                    QueryPoint::Offaxis { re: z.re, im: z.im }
                };
                total += rn_dispatch(mf, mg, table, &point, opts)?.0;
            }
            Ok(total)
        })
        .collect::<Result<Vec<_>>>()?;
    cauchy::holder_constant(&points, &values, alpha)
}

/// Hölder constants over windows shrinking geometrically onto a
/// threshold: the divergence witness for non-member data.
pub fn divergence_sweep(
    f: &HalfPlaneFunction,
    g: &HalfPlaneFunction,
    threshold: f64,
    widths: &[f64],
    alpha: f64,
    bands: &[BandTable],
    opts: &RnBoundaryOptions,
) -> Result<Vec<f64>> {
    if widths.is_empty() || widths.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter(
            "widths must be positive and strictly decreasing".into(),
        ));
    }
    widths
        .iter()
        .map(|&w| {
            let window = HolderWindow {
                lambda_lo: threshold + 0.25 * w,
                lambda_hi: threshold + w,
                eta_max: 0.25 * w,
            };
            holder_certificate(f, g, &window, alpha, 8, bands, opts)
        })
        .collect()
}
