//! Dispersion tables for the band functions `λ_n`.
//!
//! A [`BandTable`] holds `λ_n` and its slope on a momentum grid, glued by a
//! cubic Hermite interpolant whose node derivatives are the extrapolated
//! Feynman–Hellmann values, so evaluation and the analytic derivative of
//! the interpolant are consistent to high order.  Because `λ_n` decreases
//! strictly, the interpolant inverts; energies below the tabulated tail but
//! still above the `1e-12` resolution floor are inverted through the
//! explicit asymptotic model
//!
//! ```text
//!     λ_n(k) - E_n  ≈  C_n k^{2n-1} e^{-k²},      C_n = 2^n ((n-1)! √π)^{-1},
//! ```
//!
//! and flagged as model-derived.  The same model underlies the weight
//! asymptotics and the prefactor fits of [`BandTable::asymptotic_check`].

use crate::error::{Error, Result};
use crate::fiber::{solve_band, Discretization};
use crate::interp::CubicHermite;
use crate::sci17;
use rayon::prelude::*;

/// The n-th Landau level `E_n = 2n - 1`.
pub fn landau_level(n: usize) -> f64 {
    (2 * n - 1) as f64
}

/// Closed-form tail model of one band: gap prefactor `C_n` and the induced
/// weight constants `C_{n,α}`.
#[derive(Debug, Clone, Copy)]
pub struct AsymptoticModel {
    pub band: usize,
}

impl AsymptoticModel {
    pub fn new(band: usize) -> Self {
        AsymptoticModel { band }
    }

    /// `C_n = 2^n ((n-1)! √π)^{-1}`.
    pub fn c_n(&self) -> f64 {
        let n = self.band;
        let fact: f64 = (1..n).map(|i| i as f64).product();
        2f64.powi(n as i32) / (fact * std::f64::consts::PI.sqrt())
    }

    /// `C_{n,α} = C_n^{-α-1/2} 2^{-1/2}`.
    pub fn c_n_alpha(&self, alpha: f64) -> f64 {
        self.c_n().powf(-alpha - 0.5) / std::f64::consts::SQRT_2
    }

    /// Leading tail gap `C_n k^{2n-1} e^{-k²}`.
    pub fn gap(&self, k: f64) -> f64 {
        self.c_n() * k.powi(2 * self.band as i32 - 1) * (-k * k).exp()
    }

    /// Leading tail slope `-2 C_n k^{2n} e^{-k²}`.
    pub fn gap_slope(&self, k: f64) -> f64 {
        -2.0 * self.c_n() * k.powi(2 * self.band as i32) * (-k * k).exp()
    }

    /// Leading weight asymptotics
    /// `w_n^α(k) ≈ C_{n,α} k^{-α(2n-1)-n} e^{(α+1/2)k²}`.
    pub fn weight_w_alpha(&self, k: f64, alpha: f64) -> f64 {
        let n = self.band as f64;
        self.c_n_alpha(alpha)
            * k.powf(-alpha * (2.0 * n - 1.0) - n)
            * ((alpha + 0.5) * k * k).exp()
    }

    /// Momentum at which the model gap equals `gap`, by bisection on the
    /// decreasing branch beyond `k_from`.
    pub fn invert_gap(&self, gap: f64, k_from: f64) -> f64 {
        let mut lo = k_from.max((self.band as f64 - 0.5).sqrt() + 0.5);
        let mut hi = 9.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.gap(mid) > gap {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// How an energy was mapped back to a momentum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum InvertMethod {
    /// Root of the tabulated interpolant.
    Table,
    /// Root of the asymptotic tail model, below the tabulated range.
    AsymptoticModel,
}

#[derive(Debug, Clone, Copy)]
pub struct Inversion {
    pub k: f64,
    pub method: InvertMethod,
}

/// Tabulated dispersion curve of one band with monotone inverse.
#[derive(Debug, Clone)]
pub struct BandTable {
    band: usize,
    spline: CubicHermite,
}

/// Default momentum grid: step 0.05 up to 2, then 0.025 across the tail
/// where the inverse needs resolution.
pub fn default_k_grid(k_min: f64, k_max: f64) -> Vec<f64> {
    assert!(k_max > k_min, "empty momentum range");
    let split = 2.0f64.min(k_max);
    let mut ks = Vec::new();
    if split > k_min {
        let n = ((split - k_min) / 0.05).round().max(1.0) as usize;
        for i in 0..n {
            ks.push(k_min + (split - k_min) * i as f64 / n as f64);
        }
    }
    if k_max >= split {
        let n = ((k_max - split) / 0.025).round() as usize;
        if n == 0 {
            ks.push(k_max);
        } else {
            for j in 0..=n {
                ks.push(split + (k_max - split) * j as f64 / n as f64);
            }
        }
    }
    ks
}

/// Solve the fibers across `k_grid` (in parallel) and assemble the table.
pub fn build_band_table(n: usize, k_grid: &[f64], disc: &Discretization) -> Result<BandTable> {
    if k_grid.len() < 2 || k_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "momentum grid must be strictly increasing with at least 2 nodes".into(),
        ));
    }
    let (lo, hi) = (k_grid[0], *k_grid.last().unwrap());
    if lo > -4.0 + 1e-9 || hi < 4.5 - 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "momentum grid [{lo}, {hi}] must span at least [-4, 4.5]"
        )));
    }
    let pairs = k_grid
        .par_iter()
        .map(|&k| solve_band(k, n, disc))
        .collect::<Result<Vec<_>>>()?;
    let e_n = landau_level(n);
    let mut lambdas = Vec::with_capacity(pairs.len());
    let mut slopes = Vec::with_capacity(pairs.len());
    for (p, &k) in pairs.iter().zip(k_grid) {
        let d = p.derivative();
        if p.lambda <= e_n {
            return Err(Error::DiscretizationTooCoarse(format!(
                "band {n} dips to {} ≤ E_n at k = {k}",
                p.lambda
            )));
        }
        if d >= 0.0 {
            return Err(Error::DiscretizationTooCoarse(format!(
                "band {n} slope {d:.3e} not negative at k = {k}"
            )));
        }
        lambdas.push(p.lambda);
        slopes.push(d);
    }
    if lambdas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::DiscretizationTooCoarse(format!(
            "band {n} values are not strictly decreasing across the grid"
        )));
    }
    Ok(BandTable {
        band: n,
        spline: CubicHermite::new(k_grid.to_vec(), lambdas, slopes)?,
    })
}

impl BandTable {
    pub fn band(&self) -> usize {
        self.band
    }

    /// The threshold `E_n` this band accumulates at.
    pub fn threshold(&self) -> f64 {
        landau_level(self.band)
    }

    pub fn model(&self) -> AsymptoticModel {
        AsymptoticModel::new(self.band)
    }

    pub fn k_range(&self) -> (f64, f64) {
        self.spline.domain()
    }

    /// Tabulated energy range as `(min, max)`.
    pub fn lambda_range(&self) -> (f64, f64) {
        (
            *self.spline.values().last().unwrap(),
            self.spline.values()[0],
        )
    }

    pub fn nodes(&self) -> &[f64] {
        self.spline.nodes()
    }

    pub fn values(&self) -> &[f64] {
        self.spline.values()
    }

    pub fn slopes(&self) -> &[f64] {
        self.spline.node_derivatives()
    }

    /// `λ_n(k)`; `k` must lie in the tabulated span.
    pub fn evaluate(&self, k: f64) -> f64 {
        self.spline.value(k)
    }

    /// `λ_n'(k)`, the analytic derivative of the interpolant.
    pub fn derivative(&self, k: f64) -> f64 {
        self.spline.derivative(k)
    }

    /// Momentum with `λ_n(k) = lam`.  Energies below the tabulated tail
    /// fall back to the asymptotic model down to the `1e-12` gap floor.
    pub fn invert(&self, lam: f64) -> Result<Inversion> {
        let (lam_min, lam_max) = self.lambda_range();
        if lam > lam_max {
            return Err(Error::OutOfTabulatedRange(lam));
        }
        if lam >= lam_min {
            return Ok(Inversion {
                k: self.spline.invert(lam)?,
                method: InvertMethod::Table,
            });
        }
        let gap = lam - self.threshold();
        if gap < 1e-12 {
            return Err(Error::ResolutionFloor(gap));
        }
        let (_, k_hi) = self.k_range();
        Ok(Inversion {
            k: self.model().invert_gap(gap, k_hi),
            method: InvertMethod::AsymptoticModel,
        })
    }

    /// Momentum only, when the method tag is not needed.
    pub fn invert_momentum(&self, lam: f64) -> Result<f64> {
        Ok(self.invert(lam)?.k)
    }

    /// Energy-side weight `μ_n(lam) = |λ_n'(λ_n^{-1}(lam))|^{-1/2}`.
    pub fn weight_mu(&self, lam: f64) -> Result<f64> {
        let inv = self.invert(lam)?;
        let slope = match inv.method {
            InvertMethod::Table => self.derivative(inv.k),
            InvertMethod::AsymptoticModel => self.model().gap_slope(inv.k),
        };
        Ok(slope.abs().powf(-0.5))
    }

    /// Momentum-side weight `w_n^α(k) = |λ_n(k)-E_n|^{-α} |λ_n'(k)|^{-1/2}`.
    pub fn weight_w_alpha(&self, k: f64, alpha: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in [0, 1), got {alpha}"
            )));
        }
        let (lo, hi) = self.k_range();
        if k < lo || k > hi {
            return Err(Error::OutOfTabulatedRange(k));
        }
        let gap = self.evaluate(k) - self.threshold();
        Ok(gap.powf(-alpha) * self.derivative(k).abs().powf(-0.5))
    }

    /// Tail audit over `[k_lo, k_hi]`: least-squares prefactors of the gap
    /// and of the slope against the model with its first correction,
    /// `C k^{2n-1} e^{-k²} (1 + c k^{-2})`, plus the logarithmic-derivative
    /// ratio at `k_hi` compared with the model ratio `(2n-1)/k - 2k`.
    pub fn asymptotic_check(&self, k_lo: f64, k_hi: f64) -> Result<AsymptoticFit> {
        let (_, k_top) = self.k_range();
        if k_hi <= k_lo {
            return Err(Error::InvalidParameter("empty fit window".into()));
        }
        if k_lo < 2.0 || k_hi > k_top + 1e-9 || k_hi > 6.0 {
            return Err(Error::WindowTooWide(k_hi));
        }
        let e_n = self.threshold();
        if self.evaluate(k_hi.min(k_top)) - e_n < 1e-8 {
            return Err(Error::WindowTooWide(k_hi));
        }
        let m = ((k_hi - k_lo) / 0.025).round().max(8.0) as usize;
        let n = self.band as i32;
        let mut gap_fit = TwoParamFit::default();
        let mut slope_fit = TwoParamFit::default();
        for j in 0..=m {
            let k = k_lo + (k_hi - k_lo) * j as f64 / m as f64;
            let e = (-k * k).exp();
            // Gap data against (k^{2n-1} e^{-k²}, k^{2n-3} e^{-k²}).
            gap_fit.add(
                k.powi(2 * n - 1) * e,
                k.powi(2 * n - 3) * e,
                self.evaluate(k) - e_n,
            );
            // Slope data against the exact derivatives of those bases.
            let b1 = e * (2.0 * k.powi(2 * n) - (2 * n - 1) as f64 * k.powi(2 * n - 2));
            let b2 = e * (2.0 * k.powi(2 * n - 2) - (2 * n - 3) as f64 * k.powi(2 * n - 4));
            slope_fit.add(b1, b2, -self.derivative(k));
        }
        let (a, ac) = gap_fit.solve()?;
        let (b, bc) = slope_fit.solve()?;
        let c_n = self.model().c_n();
        let ratio_measured = self.derivative(k_hi) / (self.evaluate(k_hi) - e_n);
        let ratio_model = (2 * n - 1) as f64 / k_hi - 2.0 * k_hi;
        Ok(AsymptoticFit {
            band: self.band,
            k_lo,
            k_hi,
            c_n,
            gap_prefactor: a,
            gap_correction: ac / a,
            gap_rel_err: (a - c_n).abs() / c_n,
            slope_prefactor: b,
            slope_correction: bc / b,
            slope_rel_err: (b - c_n).abs() / c_n,
            ratio_point: k_hi,
            ratio_measured,
            ratio_model,
            ratio_model_rel_dev: (ratio_measured - ratio_model).abs() / ratio_model.abs(),
            ratio_leading_rel_dev: (ratio_measured + 2.0 * k_hi).abs() / (2.0 * k_hi),
        })
    }

    /// CSV rows `k,lambda,lambda_prime,mu`, one per node, 17 significant
    /// digits, byte-stable; `mu` is the energy-side weight at that node.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,lambda,lambda_prime,mu\n");
        for ((&k, &l), &d) in self
            .nodes()
            .iter()
            .zip(self.values())
            .zip(self.slopes())
        {
            let mu = d.abs().powf(-0.5);
            out.push_str(&format!(
                "{},{},{},{}\n",
                sci17(k),
                sci17(l),
                sci17(d),
                sci17(mu)
            ));
        }
        out
    }
}

/// Two-basis linear least squares accumulated from samples.
#[derive(Default)]
struct TwoParamFit {
    s11: f64,
    s12: f64,
    s22: f64,
    r1: f64,
    r2: f64,
}

impl TwoParamFit {
    fn add(&mut self, b1: f64, b2: f64, y: f64) {
        self.s11 += b1 * b1;
        self.s12 += b1 * b2;
        self.s22 += b2 * b2;
        self.r1 += b1 * y;
        self.r2 += b2 * y;
    }

    fn solve(&self) -> Result<(f64, f64)> {
        let det = self.s11 * self.s22 - self.s12 * self.s12;
        if det.abs() < 1e-300 || self.s11 == 0.0 {
            return Err(Error::DegenerateFit(0.0));
        }
        Ok((
            (self.r1 * self.s22 - self.r2 * self.s12) / det,
            (self.s11 * self.r2 - self.s12 * self.r1) / det,
        ))
    }
}

/// Prefactor/ratio audit of the band tail, with the exact constant for
/// comparison.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct AsymptoticFit {
    pub band: usize,
    pub k_lo: f64,
    pub k_hi: f64,
    pub c_n: f64,
    pub gap_prefactor: f64,
    pub gap_correction: f64,
    pub gap_rel_err: f64,
    pub slope_prefactor: f64,
    pub slope_correction: f64,
    pub slope_rel_err: f64,
    pub ratio_point: f64,
    pub ratio_measured: f64,
    pub ratio_model: f64,
    /// Relative deviation from the model ratio `(2n-1)/k - 2k`.
    pub ratio_model_rel_dev: f64,
    /// Relative deviation from the leading term `-2k` alone.
    pub ratio_leading_rel_dev: f64,
}
