//! Mode space: Fourier coefficients, harmonics, and absorption membership.
//!
//! A function `f` on the half-plane decomposes through the fiber basis as
//! `f_n(k) = ⟨𝓕_y f(·,k), u_n(·,k)⟩`, where `𝓕_y` is the unitary partial
//! Fourier transform in the edge variable.  The `n`-th harmonic is the
//! synthesis
//!
//! `Π_n f(x,y) = (2π)^{-1/2} ∫ e^{iky} f_n(k) u_n(x,k) dk`,
//!
//! and Parseval gives `‖f‖² = Σ_n ‖f_n‖²` for finite mode sums.  Spectral
//! questions about the Landau threshold `E_n = 2n-1` become questions about
//! the energy-side trace `μ_n(λ) f̃_n(λ)` with `f̃_n = f_n ∘ λ_n^{-1}`: a mode
//! belongs to the absorption space of order `(s, α)` when that trace
//! vanishes at the threshold, is Hölder-α along the band, and the weighted
//! coefficient `w_n^α f_n` stays bounded.  [`membership_report`] estimates
//! all three on a geometric energy ladder accumulating at `E_n`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::band::BandTable;
use crate::error::{Error, Result};
use crate::fiber::FiberFamily;
use crate::sci17;

/// `(2π)^{-1/2}`, the prefactor of the unitary Fourier transform.
pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Closed-form provenance of a mode, kept for reporting and serialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Descriptor {
    /// `e^{-(k-k0)²/w²}`, truncated at `|k-k0| = 6w`.
    GaussianBump { k0: f64, width: f64 },
    /// C∞ bump vanishing to all orders at both ends of `[lo, hi]`.
    SmoothCutoffBump { lo: f64, hi: f64 },
    Custom,
}

/// One Fourier coefficient `f_n` sampled on a momentum grid.
#[derive(Debug, Clone)]
pub struct ModeFunction {
    band: usize,
    ks: Vec<f64>,
    samples: Vec<Complex64>,
    descriptor: Descriptor,
    /// `Some((a, b))` when the mode is known to vanish outside `[a, b]`;
    /// `None` when nothing is known beyond the sampled grid.
    support: Option<(f64, f64)>,
}

/// C∞ step: `0` for `t ≤ 0`, `1` for `t ≥ 1`, strictly increasing between.
pub fn smooth_step(t: f64) -> f64 {
    fn phi(t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            (-1.0 / t).exp()
        }
    }
    let (a, b) = (phi(t), phi(1.0 - t));
    if a == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

fn validate_grid(ks: &[f64]) -> Result<()> {
    if ks.len() < 2 {
        return Err(Error::InvalidParameter(
            "mode grid needs at least 2 nodes".into(),
        ));
    }
    if ks.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "mode grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

fn uniform_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let m = ((hi - lo) / step).round().max(2.0) as usize;
    (0..=m).map(|i| lo + (hi - lo) * i as f64 / m as f64).collect()
}

impl ModeFunction {
    /// Gaussian bump `e^{-(k-k0)²/w²}` on `[k0-6w, k0+6w]`.
    pub fn gaussian_bump(band: usize, k0: f64, width: f64, step: f64) -> Result<ModeFunction> {
        if width <= 0.0 || step <= 0.0 {
            return Err(Error::InvalidParameter("width and step must be positive".into()));
        }
        let (lo, hi) = (k0 - 6.0 * width, k0 + 6.0 * width);
        let ks = uniform_grid(lo, hi, step);
        let samples = ks
            .iter()
            .map(|&k| Complex64::new((-((k - k0) / width).powi(2)).exp(), 0.0))
            .collect();
        Ok(ModeFunction {
            band,
            ks,
            samples,
            descriptor: Descriptor::GaussianBump { k0, width },
            support: Some((lo, hi)),
        })
    }

    /// C∞ bump `exp(1 - 1/(4t(1-t)))` in the normalized coordinate
    /// `t = (k-lo)/(hi-lo)`, peak value 1, identically zero outside.
    pub fn cutoff_bump(band: usize, lo: f64, hi: f64, step: f64) -> Result<ModeFunction> {
        if hi <= lo || step <= 0.0 {
            return Err(Error::InvalidParameter("need lo < hi and step > 0".into()));
        }
        let ks = uniform_grid(lo, hi, step);
        let samples = ks
            .iter()
            .map(|&k| {
                let t = (k - lo) / (hi - lo);
                let v = if t <= 0.0 || t >= 1.0 {
                    0.0
                } else {
                    (1.0 - 0.25 / (t * (1.0 - t))).exp()
                };
                Complex64::new(v, 0.0)
            })
            .collect();
        Ok(ModeFunction {
            band,
            ks,
            samples,
            descriptor: Descriptor::SmoothCutoffBump { lo, hi },
            support: Some((lo, hi)),
        })
    }

    /// Sample an arbitrary closed form on a given grid.
    pub fn from_fn(
        band: usize,
        ks: &[f64],
        f: impl Fn(f64) -> Complex64,
        support: Option<(f64, f64)>,
    ) -> Result<ModeFunction> {
        validate_grid(ks)?;
        Ok(ModeFunction {
            band,
            ks: ks.to_vec(),
            samples: ks.iter().map(|&k| f(k)).collect(),
            descriptor: Descriptor::Custom,
            support,
        })
    }

    /// Adopt externally produced samples.
    pub fn from_samples(
        band: usize,
        ks: Vec<f64>,
        samples: Vec<Complex64>,
        descriptor: Descriptor,
        support: Option<(f64, f64)>,
    ) -> Result<ModeFunction> {
        validate_grid(&ks)?;
        if samples.len() != ks.len() {
            return Err(Error::InvalidParameter(
                "sample count must match grid".into(),
            ));
        }
        Ok(ModeFunction {
            band,
            ks,
            samples,
            descriptor,
            support,
        })
    }

    pub fn band(&self) -> usize {
        self.band
    }

    pub fn ks(&self) -> &[f64] {
        &self.ks
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn descriptor(&self) -> &Descriptor {
        &self.descriptor
    }

    pub fn support_hint(&self) -> Option<(f64, f64)> {
        self.support
    }

    /// Coarsest spacing of the grid, the resolution entering oscillation
    /// checks.
    pub fn k_step(&self) -> f64 {
        self.ks
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0f64, f64::max)
    }

    /// Linear interpolation of the samples; zero outside the grid.
    pub fn eval(&self, k: f64) -> Complex64 {
        match self.eval_known(k) {
            Some(v) => v,
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Like [`eval`](Self::eval) but `None` where the value is genuinely
    /// unknown: outside the grid with no support hint to force a zero.
    pub fn eval_known(&self, k: f64) -> Option<Complex64> {
        let (lo, hi) = (self.ks[0], *self.ks.last().unwrap());
        if k < lo || k > hi {
            return match self.support {
                Some((a, b)) if k < a || k > b => Some(Complex64::new(0.0, 0.0)),
                _ => None,
            };
        }
        let i = self.ks.partition_point(|&t| t <= k).clamp(1, self.ks.len() - 1) - 1;
        let frac = (k - self.ks[i]) / (self.ks[i + 1] - self.ks[i]);
        Some(self.samples[i] + (self.samples[i + 1] - self.samples[i]) * frac)
    }

    /// Trapezoid value of `∫ |f_n|² dk`.
    pub fn norm_sq(&self) -> f64 {
        trapz(&self.ks, |i| self.samples[i].norm_sqr())
    }

    /// Multiply by a complex scalar.
    pub fn scale(&self, c: Complex64) -> ModeFunction {
        ModeFunction {
            samples: self.samples.iter().map(|&v| v * c).collect(),
            descriptor: Descriptor::Custom,
            ..self.clone()
        }
    }

    /// CSV rows `k,re_f,im_f`, 17 significant digits, byte-stable.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,re_f,im_f\n");
        for (&k, v) in self.ks.iter().zip(&self.samples) {
            out.push_str(&sci17(k));
            out.push(',');
            out.push_str(&sci17(v.re));
            out.push(',');
            out.push_str(&sci17(v.im));
            out.push('\n');
        }
        out
    }
}

fn trapz(xs: &[f64], f: impl Fn(usize) -> f64) -> f64 {
    let mut s = 0.0;
    for i in 0..xs.len() - 1 {
        s += 0.5 * (xs[i + 1] - xs[i]) * (f(i) + f(i + 1));
    }
    s
}

fn trapz_c(xs: &[f64], f: impl Fn(usize) -> Complex64) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for i in 0..xs.len() - 1 {
        s += (f(i) + f(i + 1)) * (0.5 * (xs[i + 1] - xs[i]));
    }
    s
}

/// Uniform samples of a position-space function on `[0, X] × [-Y, Y]`,
/// stored row-major with `x` as the slow index.
#[derive(Debug, Clone)]
pub struct RectangleGrid {
    xs: Vec<f64>,
    ys: Vec<f64>,
    values: Vec<Complex64>,
}

impl RectangleGrid {
    /// Sample `f(x, y)` on the uniform product grid with `nx × ny` nodes.
    pub fn sample(
        x_max: f64,
        nx: usize,
        y_max: f64,
        ny: usize,
        f: impl Fn(f64, f64) -> Complex64 + Sync + Send,
    ) -> Result<RectangleGrid> {
        if x_max <= 0.0 || y_max <= 0.0 || nx < 2 || ny < 2 {
            return Err(Error::InvalidParameter(
                "rectangle needs positive extents and at least 2 nodes per side".into(),
            ));
        }
        let xs: Vec<f64> = (0..nx).map(|i| x_max * i as f64 / (nx - 1) as f64).collect();
        let ys: Vec<f64> = (0..ny)
            .map(|j| -y_max + 2.0 * y_max * j as f64 / (ny - 1) as f64)
            .collect();
        let f = &f;
        let values: Vec<Complex64> = xs
            .par_iter()
            .flat_map_iter(|&x| ys.iter().map(move |&y| f(x, y)).collect::<Vec<_>>())
            .collect();
        Ok(RectangleGrid { xs, ys, values })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn value(&self, ix: usize, iy: usize) -> Complex64 {
        self.values[ix * self.ys.len() + iy]
    }

    pub fn dy(&self) -> f64 {
        self.ys[1] - self.ys[0]
    }

    /// Trapezoid weight of node `i` on an axis grid.
    fn axis_weight(axis: &[f64], i: usize) -> f64 {
        let h = axis[1] - axis[0];
        if i == 0 || i == axis.len() - 1 {
            0.5 * h
        } else {
            h
        }
    }

    /// `∫∫ g(x, y, f(x,y)) dx dy` by the product trapezoid rule.
    fn integrate(&self, g: impl Fn(f64, f64, Complex64) -> f64 + Sync) -> f64 {
        let ny = self.ys.len();
        self.xs
            .par_iter()
            .enumerate()
            .map(|(ix, &x)| {
                let wx = Self::axis_weight(&self.xs, ix);
                let mut row = 0.0;
                for (iy, &y) in self.ys.iter().enumerate() {
                    let wy = Self::axis_weight(&self.ys, iy);
                    row += wy * g(x, y, self.values[ix * ny + iy]);
                }
                wx * row
            })
            .sum()
    }

    /// Fraction of the (weighted) squared mass sitting on the outermost
    /// rows `y = ±Y` and the column `x = X`.
    fn boundary_mass_ratio(&self, weight: impl Fn(f64) -> f64 + Sync) -> f64 {
        let total = self.integrate(|_, y, v| weight(y) * v.norm_sqr());
        if total <= 0.0 {
            return 0.0;
        }
        let ny = self.ys.len();
        let nx = self.xs.len();
        let mut edge = 0.0;
        for ix in 0..nx {
            let wx = Self::axis_weight(&self.xs, ix);
            for iy in [0, ny - 1] {
                let wy = Self::axis_weight(&self.ys, iy);
                edge += wx * wy * weight(self.ys[iy]) * self.values[ix * ny + iy].norm_sqr();
            }
        }
        for iy in 0..ny {
            let wy = Self::axis_weight(&self.ys, iy);
            let wx = Self::axis_weight(&self.xs, nx - 1);
            edge += wx * wy * weight(self.ys[iy]) * self.values[(nx - 1) * ny + iy].norm_sqr();
        }
        edge / total
    }
}

/// A finite sum of harmonics, optionally backed by position-space samples.
#[derive(Debug, Clone, Default)]
pub struct HalfPlaneFunction {
    modes: Vec<ModeFunction>,
    grid: Option<RectangleGrid>,
}

impl HalfPlaneFunction {
    pub fn from_modes(modes: Vec<ModeFunction>) -> Result<HalfPlaneFunction> {
        for i in 0..modes.len() {
            for j in i + 1..modes.len() {
                if modes[i].band == modes[j].band {
                    return Err(Error::InvalidParameter(format!(
                        "duplicate band index {}",
                        modes[i].band
                    )));
                }
            }
        }
        Ok(HalfPlaneFunction { modes, grid: None })
    }

    pub fn modes(&self) -> &[ModeFunction] {
        &self.modes
    }

    pub fn grid(&self) -> Option<&RectangleGrid> {
        self.grid.as_ref()
    }

    pub fn with_grid(mut self, grid: RectangleGrid) -> HalfPlaneFunction {
        self.grid = Some(grid);
        self
    }

    /// Materialize the mode sum on a rectangle so that position-space
    /// quadratures (weighted norms, Parseval audits) become available.
    /// `families` must supply, for each mode, eigenpairs on its grid.
    pub fn attach_rectangle(
        mut self,
        families: &[&FiberFamily],
        x_max: f64,
        nx: usize,
        y_max: f64,
        ny: usize,
    ) -> Result<HalfPlaneFunction> {
        if families.len() != self.modes.len() {
            return Err(Error::InvalidParameter(
                "one fiber family per mode is required".into(),
            ));
        }
        for (m, fam) in self.modes.iter().zip(families) {
            check_same_grid(m, fam)?;
        }
        let xs: Vec<f64> = (0..nx).map(|i| x_max * i as f64 / (nx - 1) as f64).collect();
        let ys: Vec<f64> = (0..ny)
            .map(|j| -y_max + 2.0 * y_max * j as f64 / (ny - 1) as f64)
            .collect();
        // Precompute u_n(x, k) per mode to turn synthesis into a k-sum.
        let mut values = vec![Complex64::new(0.0, 0.0); nx * ny];
        for (m, fam) in self.modes.iter().zip(families) {
            let nk = m.ks.len();
            let u: Vec<f64> = xs
                .iter()
                .flat_map(|&x| fam.pairs.iter().map(move |p| p.value_at(x)))
                .collect();
            let wk: Vec<f64> = (0..nk)
                .map(|i| {
                    let lo = if i == 0 { 0.0 } else { 0.5 * (m.ks[i] - m.ks[i - 1]) };
                    let hi = if i == nk - 1 {
                        0.0
                    } else {
                        0.5 * (m.ks[i + 1] - m.ks[i])
                    };
                    lo + hi
                })
                .collect();
            let rows: Vec<Vec<Complex64>> = (0..nx)
                .into_par_iter()
                .map(|ix| {
                    let urow = &u[ix * nk..(ix + 1) * nk];
                    ys.iter()
                        .map(|&y| {
                            let mut s = Complex64::new(0.0, 0.0);
                            for i in 0..nk {
                                let phase = Complex64::from_polar(1.0, m.ks[i] * y);
                                s += phase * m.samples[i] * (wk[i] * urow[i]);
                            }
                            s * FRAC_1_SQRT_2PI
                        })
                        .collect()
                })
                .collect();
            for (ix, row) in rows.into_iter().enumerate() {
                for (iy, v) in row.into_iter().enumerate() {
                    values[ix * ny + iy] += v;
                }
            }
        }
        self.grid = Some(RectangleGrid { xs, ys, values });
        Ok(self)
    }

    /// Plain (`s = 0`) squared norm of the mode stack via Parseval.
    pub fn parseval_norm_sq(&self) -> f64 {
        self.modes.iter().map(ModeFunction::norm_sq).sum()
    }
}

pub(crate) fn check_same_grid(mode: &ModeFunction, family: &FiberFamily) -> Result<()> {
    if mode.band != family.band {
        return Err(Error::InvalidParameter(format!(
            "mode band {} does not match family band {}",
            mode.band, family.band
        )));
    }
    if mode.ks.len() != family.ks.len()
        || mode
            .ks
            .iter()
            .zip(&family.ks)
            .any(|(&a, &b)| (a - b).abs() > 1e-12)
    {
        return Err(Error::InvalidParameter(
            "mode and fiber family must share one momentum grid".into(),
        ));
    }
    Ok(())
}

/// Fourier coefficient `f_n(k) = ⟨𝓕_y f(·,k), u_n(·,k)⟩` on the family's
/// momentum grid, from rectangle samples of `f`.
pub fn project_mode(f: &HalfPlaneFunction, family: &FiberFamily) -> Result<ModeFunction> {
    let grid = f.grid.as_ref().ok_or_else(|| {
        Error::InvalidParameter("projection needs rectangle samples".into())
    })?;
    let dy = grid.dy();
    let k_max = family
        .ks
        .iter()
        .fold(0.0f64, |m, &k| m.max(k.abs()));
    if k_max * dy > 0.5 {
        return Err(Error::Aliasing { dy, k_max });
    }
    let ratio = grid.boundary_mass_ratio(|_| 1.0);
    if ratio > 1e-8 {
        return Err(Error::RectangleTruncation(ratio));
    }
    let ny = grid.ys.len();
    let samples: Vec<Complex64> = family
        .pairs
        .par_iter()
        .map(|pair| {
            // 𝓕_y f(x_i, k), then the x-inner product with u_n(·, k).
            trapz_c(&grid.xs, |ix| {
                let ft = trapz_c(&grid.ys, |iy| {
                    Complex64::from_polar(1.0, -pair.k * grid.ys[iy]) * grid.values[ix * ny + iy]
                }) * FRAC_1_SQRT_2PI;
                ft * pair.value_at(grid.xs[ix])
            })
        })
        .collect();
    ModeFunction::from_samples(family.band, family.ks.clone(), samples, Descriptor::Custom, None)
}

/// Pointwise harmonic `Π_n f(x,y) = (2π)^{-1/2} ∫ e^{iky} f_n(k) u_n(x,k) dk`.
pub fn synthesize_harmonic(
    mode: &ModeFunction,
    family: &FiberFamily,
    x: f64,
    y: f64,
) -> Result<Complex64> {
    check_same_grid(mode, family)?;
    if x < 0.0 {
        return Err(Error::InvalidParameter("x must be nonnegative".into()));
    }
    let osc = y.abs() * mode.k_step();
    if osc > 0.5 {
        return Err(Error::UnresolvedOscillation(osc));
    }
    Ok(trapz_c(&mode.ks, |i| {
        Complex64::from_polar(1.0, mode.ks[i] * y)
            * mode.samples[i]
            * family.pairs[i].value_at(x)
    }) * FRAC_1_SQRT_2PI)
}

/// Edge-distance profile `ρ_n(x) = ∫ u_n(x,k)² |f_n(k)|² dk`, the squared
/// `L²(dy)` trace of the harmonic at distance `x` from the boundary.
pub fn harmonic_profile(mode: &ModeFunction, family: &FiberFamily, x: f64) -> Result<f64> {
    check_same_grid(mode, family)?;
    if x < 0.0 {
        return Err(Error::InvalidParameter("x must be nonnegative".into()));
    }
    Ok(trapz(&mode.ks, |i| {
        let u = family.pairs[i].value_at(x);
        u * u * mode.samples[i].norm_sqr()
    }))
}

/// Weighted norm `(∫∫ (1+y²)^s |f|² dx dy)^{1/2}` over the rectangle.
pub fn weighted_norm(f: &HalfPlaneFunction, s: f64) -> Result<f64> {
    if s < 0.0 {
        return Err(Error::InvalidParameter("weight exponent must be >= 0".into()));
    }
    let grid = f.grid.as_ref().ok_or_else(|| {
        Error::InvalidParameter("weighted norm needs rectangle samples".into())
    })?;
    let w = |y: f64| (1.0 + y * y).powf(s);
    let ratio = grid.boundary_mass_ratio(w);
    if ratio > 1e-8 {
        return Err(Error::RectangleTruncation(ratio));
    }
    Ok(grid.integrate(|_, y, v| w(y) * v.norm_sqr()).sqrt())
}

/// Membership verdict for the threshold absorption space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    In,
    Out,
    Undecided,
}

/// Evidence gathered along the energy ladder accumulating at `E_n`.
#[derive(Debug, Clone, Serialize)]
pub struct MembershipReport {
    pub n: usize,
    pub alpha: f64,
    pub s: f64,
    /// Value of `μ_n |f̃_n|` at the deepest resolved energy node.
    pub vanishing_value: f64,
    /// `exp(intercept)` of the log-log fit of `|μ_n f̃_n - limit|` against
    /// the gap, over the deepest resolved nodes; zero for an exactly
    /// vanishing tail.
    pub holder_constant_estimate: f64,
    /// `sup_k w_n^α(k) |f_n(k)|` over the sampled grid.
    pub w_alpha_sup: f64,
    pub verdict: Verdict,
}

/// Relative vanishing level below which a trace counts as zero at `E_n`.
const VANISH_IN: f64 = 1e-3;
/// Relative vanishing level above which membership is ruled out.
const VANISH_OUT: f64 = 1e-2;

/// Decide membership of `mode` in the order-`(s, α)` absorption space of
/// band `n` by sampling `μ_n f̃_n` on a geometric energy ladder.
pub fn membership_report(
    mode: &ModeFunction,
    table: &BandTable,
    alpha: f64,
    s: f64,
) -> Result<MembershipReport> {
    let cap = 1.0f64.min(s - 0.5);
    if !(alpha >= 0.0 && alpha < cap) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in [0, min(1, s - 1/2)) = [0, {cap}), got {alpha}"
        )));
    }
    let (k_lo, k_hi) = table.k_range();
    if mode.ks[0] < k_lo - 1e-9 || *mode.ks.last().unwrap() > k_hi + 1e-9 {
        return Err(Error::InvalidParameter(
            "mode grid exceeds the tabulated momentum range".into(),
        ));
    }
    let e_n = table.threshold();
    // Geometric gap ladder, doubling from just above the inversion floor.
    let gap_top = table.lambda_range().1 - e_n;
    let mut traces: Vec<(f64, f64)> = Vec::new();
    let mut gap = 1e-11;
    while gap <= gap_top {
        if let Ok(k) = table.invert_momentum(e_n + gap) {
            if let Some(v) = mode.eval_known(k) {
                let mu = table.weight_mu(e_n + gap)?;
                traces.push((gap, mu * v.norm()));
            }
        }
        gap *= 2.0;
    }
    // Deepest resolved nodes form the regression window.
    let window: Vec<(f64, f64)> = traces.iter().copied().take(16).collect();
    if window.len() < 8 {
        return Err(Error::InsufficientTailResolution(window.len()));
    }
    let vanishing_value = window[0].1;
    let scale = traces.iter().fold(0.0f64, |m, &(_, v)| m.max(v));
    let rel = if scale > 0.0 {
        vanishing_value / scale
    } else {
        0.0
    };
    // Hölder constant from the decay of the trace toward its limit.
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut m = 0.0;
    for &(g, v) in window.iter().skip(1) {
        let r = (v - vanishing_value).abs();
        if r > 1e-14 * scale.max(1e-300) {
            let (lx, ly) = (g.ln(), r.ln());
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
            m += 1.0;
        }
    }
    let holder_constant_estimate = if m >= 2.0 {
        let det = m * sxx - sx * sx;
        let intercept = (sy * sxx - sx * sxy) / det;
        intercept.exp()
    } else {
        0.0
    };
    // Momentum-side weighted sup over the sampled grid.
    let mut w_alpha_sup = 0.0f64;
    for (&k, v) in mode.ks.iter().zip(&mode.samples) {
        if v.norm() > 0.0 {
            w_alpha_sup = w_alpha_sup.max(table.weight_w_alpha(k, alpha)? * v.norm());
        }
    }
    let verdict = if rel > VANISH_OUT {
        Verdict::Out
    } else if rel <= VANISH_IN && holder_constant_estimate.is_finite() && w_alpha_sup.is_finite() {
        Verdict::In
    } else {
        Verdict::Undecided
    };
    Ok(MembershipReport {
        n: mode.band,
        alpha,
        s,
        vanishing_value,
        holder_constant_estimate,
        w_alpha_sup,
        verdict,
    })
}
