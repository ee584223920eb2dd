//! Natural cubic spline on a uniform grid.

use super::NumericsError;

#[derive(Clone, Debug)]
pub struct UniformSpline {
    x0: f64,
    h: f64,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl UniformSpline {
    pub fn new(x0: f64, h: f64, y: Vec<f64>) -> Result<Self, NumericsError> {
        let n = y.len();
        if n < 3 || !(h > 0.0) {
            return Err(NumericsError::InvalidSpec("spline needs ≥ 3 knots and h > 0".into()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(NumericsError::NonFinite("spline knot value".into()));
        }
        // tridiagonal system for interior second derivatives (Thomas algorithm)
        let k = n - 2;
        let mut c = vec![0.0; k];
        let mut d = vec![0.0; k];
        for i in 0..k {
            let rhs = 6.0 * (y[i + 2] - 2.0 * y[i + 1] + y[i]) / (h * h);
            let (cp, dp) = if i == 0 { (0.0, 0.0) } else { (c[i - 1], d[i - 1]) };
            let denom = 4.0 - cp;
            c[i] = 1.0 / denom;
            d[i] = (rhs - dp) / denom;
        }
        let mut m = vec![0.0; n];
        for i in (0..k).rev() {
            m[i + 1] = d[i] - c[i] * m[i + 2];
        }
        Ok(Self { x0, h, y, m })
    }

    pub fn x_max(&self) -> f64 {
        self.x0 + self.h * (self.y.len() - 1) as f64
    }

    /// Value at `x`; linear extrapolation outside the knot range.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.y.len();
        let s = (x - self.x0) / self.h;
        if s <= 0.0 {
            let slope = (self.y[1] - self.y[0]) / self.h - self.h * (2.0 * self.m[0] + self.m[1]) / 6.0;
            return self.y[0] + slope * (x - self.x0);
        }
        if s >= (n - 1) as f64 {
            let slope = (self.y[n - 1] - self.y[n - 2]) / self.h
                + self.h * (self.m[n - 2] + 2.0 * self.m[n - 1]) / 6.0;
            return self.y[n - 1] + slope * (x - self.x_max());
        }
        let i = (s.floor() as usize).min(n - 2);
        let t = s - i as f64;
        let u = 1.0 - t;
        let h2 = self.h * self.h / 6.0;
        u * self.y[i]
            + t * self.y[i + 1]
            + h2 * ((u * u * u - u) * self.m[i] + (t * t * t - t) * self.m[i + 1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_knots_and_smooth_function() {
        let h = 0.01;
        let y: Vec<f64> = (0..=300).map(|i| (i as f64 * h).sin()).collect();
        let s = UniformSpline::new(0.0, h, y.clone()).unwrap();
        for (i, v) in y.iter().enumerate() {
            assert!((s.eval(i as f64 * h) - v).abs() < 1e-14);
        }
        for k in 0..1000 {
            let x = 0.1 + 2.8 * k as f64 / 1000.0;
            assert!((s.eval(x) - x.sin()).abs() < 1e-8);
        }
    }

    #[test]
    fn linear_data_is_exact_everywhere() {
        let y: Vec<f64> = (0..10).map(|i| 2.0 * i as f64 - 1.0).collect();
        let s = UniformSpline::new(0.0, 1.0, y).unwrap();
        for x in [-2.0, 0.3, 4.7, 12.0] {
            assert!((s.eval(x) - (2.0 * x - 1.0)).abs() < 1e-12);
        }
    }
}
