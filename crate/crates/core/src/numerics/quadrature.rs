//! Adaptive Gauss–Kronrod (7/15) quadrature, scalar and vector valued, plus
//! the Gaussian-weighted wrappers used by the bound evaluators.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use serde::{Deserialize, Serialize};

use super::NumericsError;

/// Kronrod abscissae on [0, 1]; the odd-indexed ones are the 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// 1/√(2π)
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Tolerances and truncation window for Gaussian-weighted integrals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Half-width of the integration window in standard deviations.
    pub truncation_radius: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            truncation_radius: 10.0,
            max_subdivisions: 400,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<(), NumericsError> {
        let ok = self.abs_tol > 0.0
            && self.rel_tol > 0.0
            && self.truncation_radius >= 6.0
            && self.max_subdivisions >= 10;
        if ok {
            Ok(())
        } else {
            Err(NumericsError::InvalidSpec(format!("{self:?}")))
        }
    }

    /// Same window, looser tolerances (used for nested inner integrals).
    pub fn with_tolerances(mut self, abs_tol: f64, rel_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self.rel_tol = rel_tol;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GaussDomain {
    HalfLine,
    FullLine,
}

/// Result of an adaptive integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// One 15-point Kronrod pass on [a, b] for a vector integrand of width `dim`.
/// Writes the Kronrod estimate into `out` and returns the max-component error.
fn gk15_vec<F>(f: &mut F, a: f64, b: f64, dim: usize, out: &mut [f64], scratch: &mut [f64]) -> f64
where
    F: FnMut(f64, &mut [f64]),
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let (gauss, rest) = scratch.split_at_mut(dim);
    let (val, tmp) = rest.split_at_mut(dim);

    f(center, val);
    for k in 0..dim {
        out[k] = WGK[7] * val[k];
        gauss[k] = WG[3] * val[k];
    }
    for j in 0..7 {
        let dx = half * XGK[j];
        f(center - dx, val);
        f(center + dx, tmp);
        for k in 0..dim {
            let s = val[k] + tmp[k];
            out[k] += WGK[j] * s;
            if j % 2 == 1 {
                gauss[k] += WG[j / 2] * s;
            }
        }
    }
    let mut err: f64 = 0.0;
    for k in 0..dim {
        out[k] *= half;
        gauss[k] *= half;
        err = err.max((out[k] - gauss[k]).abs());
    }
    err
}

struct Segment {
    a: f64,
    b: f64,
    error: f64,
    offset: usize,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive vector-valued GK15 integration over `[breaks[0], breaks[last]]`,
/// starting from the given partition. The acceptance test uses the component-wise
/// maximum of the error estimate against `max(abs_tol, rel_tol·max|value|)`.
pub fn integrate_vec<F>(
    mut f: F,
    breaks: &[f64],
    dim: usize,
    abs_tol: f64,
    rel_tol: f64,
    max_subdivisions: usize,
) -> Result<(Vec<f64>, f64), NumericsError>
where
    F: FnMut(f64, &mut [f64]),
{
    if breaks.len() < 2 || dim == 0 {
        return Err(NumericsError::InvalidSpec("integration needs an interval and dim > 0".into()));
    }
    let mut store: Vec<f64> = Vec::with_capacity(dim * (breaks.len() + 2 * max_subdivisions));
    let mut scratch = vec![0.0; 3 * dim];
    let mut heap = BinaryHeap::new();
    let mut total = vec![0.0; dim];
    let mut total_err = 0.0;

    let mut buf = vec![0.0; dim];
    for w in breaks.windows(2) {
        let err = gk15_vec(&mut f, w[0], w[1], dim, &mut buf, &mut scratch);
        let offset = store.len();
        store.extend_from_slice(&buf);
        for k in 0..dim {
            total[k] += buf[k];
        }
        total_err += err;
        heap.push(Segment { a: w[0], b: w[1], error: err, offset });
    }

    let mut subdivisions = 0;
    loop {
        let scale = total.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if !total_err.is_finite() || total.iter().any(|v| !v.is_finite()) {
            return Err(NumericsError::NonFinite("integrand produced a non-finite value".into()));
        }
        if total_err <= abs_tol.max(rel_tol * scale) {
            return Ok((total, total_err));
        }
        if subdivisions >= max_subdivisions {
            return Err(NumericsError::NonConvergence(format!(
                "quadrature: {subdivisions} subdivisions, error {total_err:.3e}"
            )));
        }
        let seg = heap.pop().expect("heap never empties");
        let mid = 0.5 * (seg.a + seg.b);
        if !(mid > seg.a && mid < seg.b) {
            // interval exhausted at machine precision
            return Err(NumericsError::NonConvergence("quadrature: interval underflow".into()));
        }
        for k in 0..dim {
            total[k] -= store[seg.offset + k];
        }
        total_err -= seg.error;
        for (lo, hi) in [(seg.a, mid), (mid, seg.b)] {
            let err = gk15_vec(&mut f, lo, hi, dim, &mut buf, &mut scratch);
            let offset = store.len();
            store.extend_from_slice(&buf);
            for k in 0..dim {
                total[k] += buf[k];
            }
            total_err += err;
            heap.push(Segment { a: lo, b: hi, error: err, offset });
        }
        // guard against drift in the running error sum
        total_err = total_err.max(0.0);
        subdivisions += 1;
    }
}

/// Scalar adaptive integration over `[breaks[0], breaks[last]]`.
pub fn integrate<F>(
    mut f: F,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_subdivisions: usize,
) -> Result<Integral, NumericsError>
where
    F: FnMut(f64) -> f64,
{
    let mut evaluations = 0;
    let (v, err) = integrate_vec(
        |x, out| {
            evaluations += 1;
            out[0] = f(x);
        },
        breaks,
        1,
        abs_tol,
        rel_tol,
        max_subdivisions,
    )?;
    Ok(Integral { value: v[0], error: err, evaluations })
}

/// Standard normal density.
#[inline]
pub fn normal_pdf(g: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * g * g).exp()
}

/// Initial partition of the truncated window: unit-ish pieces near the origin
/// where the Gaussian mass lives, coarser further out.
pub(crate) fn gauss_breaks(domain: GaussDomain, radius: f64) -> Vec<f64> {
    let inner = [0.0, 0.75, 1.5, 2.5, 4.0, 6.0];
    let mut pos: Vec<f64> = inner.iter().copied().filter(|&b| b < radius).collect();
    pos.push(radius);
    match domain {
        GaussDomain::HalfLine => pos,
        GaussDomain::FullLine => {
            let mut all: Vec<f64> = pos.iter().rev().map(|b| -b).collect();
            all.extend(pos.iter().skip(1));
            all
        }
    }
}

/// ∫ f(g) φ(g) dg over `[-R, R]` (full line) or `[0, R]` (half line), φ the
/// standard normal density. Half-line callers apply their own factor 2.
pub fn gauss_weighted_integral<F>(
    mut f: F,
    domain: GaussDomain,
    spec: &QuadratureSpec,
) -> Result<f64, NumericsError>
where
    F: FnMut(f64) -> f64,
{
    spec.validate()?;
    let breaks = gauss_breaks(domain, spec.truncation_radius);
    let res = integrate(
        |g| {
            let w = normal_pdf(g);
            if w == 0.0 {
                0.0
            } else {
                f(g) * w
            }
        },
        &breaks,
        spec.abs_tol,
        spec.rel_tol,
        spec.max_subdivisions,
    )?;
    Ok(res.value)
}

/// Vector-valued variant of [`gauss_weighted_integral`]; `f` fills `out` with
/// the integrand components at `g` (the weight is applied here).
pub fn gauss_weighted_integral_vec<F>(
    mut f: F,
    dim: usize,
    domain: GaussDomain,
    spec: &QuadratureSpec,
) -> Result<Vec<f64>, NumericsError>
where
    F: FnMut(f64, &mut [f64]),
{
    spec.validate()?;
    let breaks = gauss_breaks(domain, spec.truncation_radius);
    let (v, _) = integrate_vec(
        |g, out| {
            let w = normal_pdf(g);
            if w == 0.0 {
                out.iter_mut().for_each(|o| *o = 0.0);
            } else {
                f(g, out);
                out.iter_mut().for_each(|o| *o *= w);
            }
        },
        &breaks,
        dim,
        spec.abs_tol,
        spec.rel_tol,
        spec.max_subdivisions,
    )?;
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn normalization_and_moments() {
        let s = spec();
        let one = gauss_weighted_integral(|_| 1.0, GaussDomain::FullLine, &s).unwrap();
        assert!((one - 1.0).abs() < 1e-10);
        let var = gauss_weighted_integral(|g| g * g, GaussDomain::FullLine, &s).unwrap();
        assert!((var - 1.0).abs() < 1e-10);
        let abs = gauss_weighted_integral(|g: f64| g.abs(), GaussDomain::FullLine, &s).unwrap();
        assert!((abs - (2.0 / PI).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn polynomial_moments_up_to_degree_eight() {
        let exact = [1.0, 0.0, 1.0, 0.0, 3.0, 0.0, 15.0, 0.0, 105.0];
        for (k, &e) in exact.iter().enumerate() {
            let v = gauss_weighted_integral(|g| g.powi(k as i32), GaussDomain::FullLine, &spec())
                .unwrap();
            assert!((v - e).abs() <= 1e-10 * e.max(1.0), "moment {k}: {v} vs {e}");
        }
    }

    #[test]
    fn half_line_is_half_of_symmetric_integrand() {
        let s = spec();
        let h = gauss_weighted_integral(|g| g * g, GaussDomain::HalfLine, &s).unwrap();
        assert!((2.0 * h - 1.0).abs() < 1e-10);
    }

    #[test]
    fn kinked_integrand_converges() {
        // E max(g - 0.3, 0) = φ(0.3) - 0.3·Q(0.3)
        let v = gauss_weighted_integral(|g: f64| (g - 0.3).max(0.0), GaussDomain::FullLine, &spec())
            .unwrap();
        let q = 0.5 * statrs::function::erf::erfc(0.3 / std::f64::consts::SQRT_2);
        let exact = normal_pdf(0.3) - 0.3 * q;
        assert!((v - exact).abs() < 1e-10);
    }

    #[test]
    fn subdivision_limit_reports_nonconvergence() {
        let s = QuadratureSpec { abs_tol: 1e-300, rel_tol: 1e-300, max_subdivisions: 10, ..spec() };
        let r = gauss_weighted_integral(|g: f64| (50.0 * g).sin().abs(), GaussDomain::FullLine, &s);
        assert!(matches!(r, Err(NumericsError::NonConvergence(_))));
    }

    #[test]
    fn rejects_bad_spec() {
        let s = QuadratureSpec { truncation_radius: 3.0, ..spec() };
        assert!(gauss_weighted_integral(|_| 1.0, GaussDomain::FullLine, &s).is_err());
    }
}
