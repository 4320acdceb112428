//! Cauchy integrals off the real axis and their boundary values on the cut.
//!
//! For a density `ψ` on an interval `(a,b)` the Cauchy integral
//!
//! `r(z) = ∫_a^b ψ(t)/(t-z) dt`
//!
//! is holomorphic off `[a,b]`, and when `ψ` is Hölder continuous of order
//! `α` at an interior point `λ`, Plemelj–Privalov gives the one-sided
//! limits
//!
//! `r^±(λ) = p.v. ∫_a^b ψ(t)/(t-λ) dt ± iπ ψ(λ)`.
//!
//! The principal value is computed by singularity subtraction,
//!
//! `p.v. ∫ ψ(t)/(t-λ) dt = ∫ (ψ(t)-ψ(λ))/(t-λ) dt + ψ(λ) ln((b-λ)/(λ-a))`,
//!
//! which trades the `1/(t-λ)` pole for an integrable `|t-λ|^{α-1}`
//! remainder; the declared Hölder exponent sets how much quadrature error
//! that remainder is allowed to leave behind.  The jump `±iπψ(λ)` is
//! attached exactly, never integrated.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{integrate, QuadOptions};

/// How stored samples are turned back into a function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    /// Piecewise-linear in the samples.
    Linear,
    /// A closed-form evaluator is attached; samples are descriptive only.
    Callable,
}

/// A complex density on an open interval, with a Hölder regularity hint.
#[derive(Clone)]
pub struct DensityFunction {
    a: f64,
    b: f64,
    ts: Vec<f64>,
    vals: Vec<Complex64>,
    rule: Interpolation,
    holder_hint: f64,
    eval_fn: Option<Arc<dyn Fn(f64) -> Complex64 + Send + Sync>>,
}

impl std::fmt::Debug for DensityFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DensityFunction")
            .field("a", &self.a)
            .field("b", &self.b)
            .field("samples", &self.ts.len())
            .field("rule", &self.rule)
            .field("holder_hint", &self.holder_hint)
            .finish()
    }
}

fn check_interval(a: f64, b: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite() && b > a) {
        return Err(Error::InvalidParameter(format!(
            "degenerate interval ({a}, {b})"
        )));
    }
    Ok(())
}

fn check_hint(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "Hölder hint must lie in (0, 1], got {alpha}"
        )));
    }
    Ok(())
}

impl DensityFunction {
    /// Constant density `c` on `(a, b)`.
    pub fn constant(a: f64, b: f64, c: Complex64) -> Result<DensityFunction> {
        Self::from_fn(a, b, 2, 1.0, move |_| c)
    }

    /// Closed-form density; `n_samples` descriptive samples are kept for
    /// scale estimates and exports.
    pub fn from_fn(
        a: f64,
        b: f64,
        n_samples: usize,
        holder_hint: f64,
        f: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
    ) -> Result<DensityFunction> {
        check_interval(a, b)?;
        check_hint(holder_hint)?;
        let m = n_samples.max(2);
        let ts: Vec<f64> = (0..m)
            .map(|i| a + (b - a) * i as f64 / (m - 1) as f64)
            .collect();
        let vals: Vec<Complex64> = ts.iter().map(|&t| f(t)).collect();
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("density sample not finite".into()));
        }
        Ok(DensityFunction {
            a,
            b,
            ts,
            vals,
            rule: Interpolation::Callable,
            holder_hint,
            eval_fn: Some(Arc::new(f)),
        })
    }

    /// Piecewise-linear density through given samples; the sample grid must
    /// be strictly increasing and span the interval.
    pub fn from_samples(
        ts: Vec<f64>,
        vals: Vec<Complex64>,
        holder_hint: f64,
    ) -> Result<DensityFunction> {
        if ts.len() < 2 || ts.len() != vals.len() {
            return Err(Error::InvalidParameter(
                "need matching sample grids with at least 2 nodes".into(),
            ));
        }
        if ts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "sample grid must be strictly increasing".into(),
            ));
        }
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("density sample not finite".into()));
        }
        check_hint(holder_hint)?;
        let (a, b) = (ts[0], *ts.last().unwrap());
        check_interval(a, b)?;
        Ok(DensityFunction {
            a,
            b,
            ts,
            vals,
            rule: Interpolation::Linear,
            holder_hint,
            eval_fn: None,
        })
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn holder_hint(&self) -> f64 {
        self.holder_hint
    }

    pub fn rule(&self) -> Interpolation {
        self.rule
    }

    /// Evaluate the density, clamping to the closed interval.
    pub fn eval(&self, t: f64) -> Complex64 {
        let t = t.clamp(self.a, self.b);
        match (&self.eval_fn, self.rule) {
            (Some(f), _) => f(t),
            (None, _) => {
                let i = self
                    .ts
                    .partition_point(|&s| s <= t)
                    .clamp(1, self.ts.len() - 1)
                    - 1;
                let frac = (t - self.ts[i]) / (self.ts[i + 1] - self.ts[i]);
                self.vals[i] + (self.vals[i + 1] - self.vals[i]) * frac
            }
        }
    }

    /// Largest sampled magnitude, the scale entering tolerance floors.
    pub fn scale(&self) -> f64 {
        self.vals.iter().fold(0.0f64, |m, v| m.max(v.norm()))
    }
}

/// Which side of the cut a boundary value is taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

/// One-sided limit of a Cauchy integral on the cut, split into its
/// principal-value and jump parts.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundaryValue {
    pub lambda: f64,
    pub side: Side,
    #[serde(with = "crate::cauchy::complex_parts")]
    pub value: Complex64,
    #[serde(with = "crate::cauchy::complex_parts")]
    pub pv_part: Complex64,
    #[serde(with = "crate::cauchy::complex_parts")]
    pub jump_part: Complex64,
    pub error_estimate: f64,
}

/// Serialize a complex number as `{ "re": …, "im": … }` with stable keys.
pub mod complex_parts {
    use num_complex::Complex64;
    use serde::ser::SerializeStruct;

    pub fn serialize<S: serde::Serializer>(v: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Complex", 2)?;
        st.serialize_field("re", &v.re)?;
        st.serialize_field("im", &v.im)?;
        st.end()
    }
}

/// `∫_a^b ψ(t)/(t-z) dt` for `z` strictly off the real axis.
pub fn offaxis_cauchy(psi: &DensityFunction, z: Complex64) -> Result<Complex64> {
    Ok(offaxis_cauchy_with_error(psi, z)?.0)
}

/// Off-axis Cauchy integral together with the quadrature error estimate.
pub fn offaxis_cauchy_with_error(psi: &DensityFunction, z: Complex64) -> Result<(Complex64, f64)> {
    if z.im == 0.0 {
        return Err(Error::InvalidParameter(
            "off-axis evaluation needs Im z != 0; use boundary_value on the cut".into(),
        ));
    }
    let r = integrate(
        |t| psi.eval(t) / (Complex64::new(t, 0.0) - z),
        psi.a,
        psi.b,
        &QuadOptions::default(),
    )?;
    Ok((r.value, r.error))
}

/// Absolute quadrature tolerance matching a Hölder-`α` kink at the
/// subtraction point: bisection stalls on panels of relative width
/// `~1e-14`, each holding `O(width^α)` of unresolvable estimate.
fn holder_floor(alpha: f64, scale: f64, span: f64) -> f64 {
    1e-13 + 4.0 * scale * (1e-14 * span).powf(alpha)
}

/// Plemelj boundary value `r^±(λ)` at an interior point of the cut.
pub fn boundary_value(psi: &DensityFunction, lambda: f64, side: Side) -> Result<BoundaryValue> {
    let (a, b) = psi.interval();
    if lambda <= a || lambda >= b {
        return Err(Error::InvalidParameter(format!(
            "lambda {lambda} is not interior to ({a}, {b})"
        )));
    }
    let dist = (lambda - a).min(b - lambda);
    if dist < 1e-6 {
        // The log endpoint singularity is only harmless when the density
        // vanishes at that endpoint.
        let endpoint = if lambda - a < b - lambda { a } else { b };
        if psi.eval(endpoint).norm() > 1e-12 * psi.scale().max(1.0) {
            return Err(Error::EndpointProximity { lambda, dist });
        }
    }
    let pl = psi.eval(lambda);
    let opts = QuadOptions {
        rel_tol: 1e-10,
        abs_tol: holder_floor(psi.holder_hint(), psi.scale(), b - a),
        ..Default::default()
    };
    // Splitting at λ keeps quadrature nodes away from the removed pole.
    let sub = |t: f64| {
        let dt = t - lambda;
        (psi.eval(t) - pl) / dt
    };
    let left = integrate(sub, a, lambda, &opts)?;
    let right = integrate(sub, lambda, b, &opts)?;
    let pv_part = left.value + right.value + pl * ((b - lambda) / (lambda - a)).ln();
    let jump_part = Complex64::new(0.0, side.sign() * std::f64::consts::PI) * pl;
    Ok(BoundaryValue {
        lambda,
        side,
        value: pv_part + jump_part,
        pv_part,
        jump_part,
        error_estimate: left.error + right.error,
    })
}

/// One row of an ε-sweep: the off-axis value at distance ε from the cut
/// and its gap to the boundary value.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    #[serde(with = "crate::cauchy::complex_parts")]
    pub offaxis: Complex64,
    pub difference: f64,
}

/// Convergence table of `r(λ ± iε)` toward `r^±(λ)` along `eps_list`.
pub fn epsilon_sweep(
    psi: &DensityFunction,
    lambda: f64,
    side: Side,
    eps_list: &[f64],
) -> Result<Vec<SweepRow>> {
    if eps_list.is_empty()
        || eps_list.iter().any(|&e| e <= 0.0)
        || eps_list.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(Error::InvalidParameter(
            "eps_list must be positive and strictly decreasing".into(),
        ));
    }
    let bv = boundary_value(psi, lambda, side)?;
    eps_list
        .par_iter()
        .map(|&eps| {
            let z = Complex64::new(lambda, side.sign() * eps);
            let off = offaxis_cauchy(psi, z)?;
            Ok(SweepRow {
                eps,
                offaxis: off,
                difference: (off - bv.value).norm(),
            })
        })
        .collect()
}

/// Largest two-point Hölder quotient `|v(z)-v(z')| / |z-z'|^α` over a
/// sampled field of values.
pub fn holder_constant(points: &[Complex64], values: &[Complex64], alpha: f64) -> Result<f64> {
    if points.len() != values.len() {
        return Err(Error::InvalidParameter(
            "points and values must pair up".into(),
        ));
    }
    if points.len() < 10 {
        return Err(Error::InvalidParameter(format!(
            "Hölder estimation needs at least 10 points, got {}",
            points.len()
        )));
    }
    check_hint(alpha)?;
    let mut best = 0.0f64;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let dz = (points[i] - points[j]).norm();
            if dz > 1e-300 {
                best = best.max((values[i] - values[j]).norm() / dz.powf(alpha));
            }
        }
    }
    Ok(best)
}
