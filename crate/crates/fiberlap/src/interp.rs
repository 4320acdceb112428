//! Piecewise cubic Hermite interpolation with caller-supplied derivatives.
//!
//! Each segment uses the cubic matching values and first derivatives at its
//! two endpoints, so when the derivative data is exact the interpolant is
//! fourth-order accurate and its analytic derivative is third-order.  For
//! strictly monotone data the interpolant can be inverted by a safeguarded
//! Newton iteration, which is how energy-to-momentum lookups work.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct CubicHermite {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
}

impl CubicHermite {
    /// Nodes must be strictly increasing; `ds` holds dy/dx at each node.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, ds: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != ys.len() || xs.len() != ds.len() {
            return Err(Error::InvalidParameter(format!(
                "interpolation needs matched arrays of at least 2 nodes, got {}/{}/{}",
                xs.len(),
                ys.len(),
                ds.len()
            )));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "interpolation nodes must be strictly increasing".into(),
            ));
        }
        Ok(CubicHermite { xs, ys, ds })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    pub fn nodes(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    pub fn node_derivatives(&self) -> &[f64] {
        &self.ds
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.xs.len();
        let i = self.xs.partition_point(|&xi| xi <= x);
        i.clamp(1, n - 1) - 1
    }

    /// Interpolated value; `x` must lie in the node range (a hair of
    /// round-off slack is tolerated).
    pub fn value(&self, x: f64) -> f64 {
        self.check_domain(x);
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        self.ys[i] * h00 + h * self.ds[i] * h10 + self.ys[i + 1] * h01 + h * self.ds[i + 1] * h11
    }

    /// Analytic derivative of the interpolant (not a finite difference).
    pub fn derivative(&self, x: f64) -> f64 {
        self.check_domain(x);
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let t2 = t * t;
        let dh00 = 6.0 * t2 - 6.0 * t;
        let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
        let dh01 = -6.0 * t2 + 6.0 * t;
        let dh11 = 3.0 * t2 - 2.0 * t;
        (self.ys[i] * dh00 + h * self.ds[i] * dh10 + self.ys[i + 1] * dh01 + h * self.ds[i + 1] * dh11) / h
    }

    fn check_domain(&self, x: f64) {
        let (a, b) = self.domain();
        let slack = 1e-9 * (b - a);
        assert!(
            x >= a - slack && x <= b + slack,
            "point {x} outside interpolation range [{a}, {b}]"
        );
    }

    /// Solve `value(x) = y` for strictly monotone data.
    ///
    /// The bracketing segment comes from a binary search over the node
    /// values; inside it a Newton iteration with bisection fallback drives
    /// the residual to round-off.
    pub fn invert(&self, y: f64) -> Result<f64> {
        let increasing = *self.ys.last().unwrap() > self.ys[0];
        let n = self.ys.len();
        let above = |v: f64| if increasing { v >= y } else { v <= y };
        if !above(*self.ys.last().unwrap()) || (above(self.ys[0]) && self.ys[0] != y) {
            if self.ys[0] == y {
                return Ok(self.xs[0]);
            }
            return Err(Error::OutOfTabulatedRange(y));
        }
        // First node index whose value has passed y.
        let mut lo = 0usize;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if above(self.ys[mid]) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let (mut a, mut b) = (self.xs[lo], self.xs[hi]);
        let mut x = 0.5 * (a + b);
        for _ in 0..100 {
            let f = self.value(x) - y;
            if f == 0.0 {
                break;
            }
            if (f > 0.0) == increasing {
                b = x;
            } else {
                a = x;
            }
            let df = self.derivative(x);
            let mut next = if df != 0.0 { x - f / df } else { f64::NAN };
            if !(next > a && next < b) {
                next = 0.5 * (a + b);
            }
            if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) {
                x = next;
                break;
            }
            x = next;
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sin_spline(step: f64) -> CubicHermite {
        let mut xs = Vec::new();
        let mut x = 0.0;
        while x < 3.0 + 1e-12 {
            xs.push(x);
            x += step;
        }
        let ys: Vec<f64> = xs.iter().map(|&x| x.sin()).collect();
        let ds: Vec<f64> = xs.iter().map(|&x| x.cos()).collect();
        CubicHermite::new(xs, ys, ds).unwrap()
    }

    #[test]
    fn reproduces_nodes_exactly() {
        let sp = sin_spline(0.25);
        for &x in sp.nodes() {
            assert!((sp.value(x) - x.sin()).abs() < 1e-15);
        }
    }

    #[test]
    fn fourth_order_values_third_order_slopes() {
        let sp = sin_spline(0.25);
        let mut verr = 0.0f64;
        let mut derr = 0.0f64;
        let mut x = 0.01;
        while x < 2.99 {
            verr = verr.max((sp.value(x) - x.sin()).abs());
            derr = derr.max((sp.derivative(x) - x.cos()).abs());
            x += 0.013;
        }
        assert!(verr < 2e-5, "value error {verr}");
        assert!(derr < 4e-4, "derivative error {derr}");
    }

    #[test]
    fn inverts_decreasing_data() {
        let xs: Vec<f64> = (0..51).map(|i| 0.1 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| (-x).exp()).collect();
        let ds: Vec<f64> = xs.iter().map(|&x| -(-x).exp()).collect();
        let sp = CubicHermite::new(xs, ys, ds).unwrap();
        let x = sp.invert(0.3).unwrap();
        // The interpolant, not e^{-x}, is what gets inverted: demand an exact
        // forward hit and only interpolation-order agreement with ln(1/0.3).
        assert!((sp.value(x) - 0.3).abs() < 1e-13, "forward value at {x}");
        assert!((x - (0.3f64.ln().abs())).abs() < 1e-6, "got {x}");
        // Round trip through an arbitrary interior point.
        let y = sp.value(2.345);
        assert!((sp.invert(y).unwrap() - 2.345).abs() < 1e-12);
    }

    #[test]
    fn invert_rejects_out_of_range() {
        let xs = vec![0.0, 1.0, 2.0];
        let ys = vec![0.0, 1.0, 2.0];
        let ds = vec![1.0, 1.0, 1.0];
        let sp = CubicHermite::new(xs, ys, ds).unwrap();
        assert!(matches!(sp.invert(2.5), Err(Error::OutOfTabulatedRange(_))));
        assert!(matches!(sp.invert(-0.1), Err(Error::OutOfTabulatedRange(_))));
    }
}
