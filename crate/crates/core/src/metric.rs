//! The R-transform metric
//! `d(mu, nu) = sup_{0 < y <= 1/4} |R_mu(-iy) - R_nu(-iy)| / y^2`
//! and the properties that make it useful for the free CLT.
//!
//! The sup is taken over a geometric grid. For the laws exercised here the
//! residual `|dR| / y^2` is increasing in `y` and extends continuously to
//! `y = 0`, so the grid maximum sits at `y_max` and refining the grid barely
//! moves it.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::transform::{AxisSign, RTransform};

/// Slack used by the bound checks.
pub const CHECK_SLACK: f64 = 1e-9;

/// A ratio with a reference distance below this is reported as undefined.
pub const RATIO_FLOOR: f64 = 1e-9;

fn default_y_min() -> f64 {
    1e-4
}

fn default_y_max() -> f64 {
    0.25
}

fn default_points() -> usize {
    200
}

/// Geometric grid of `y` values on `[y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricGrid {
    #[serde(default = "default_y_min")]
    pub y_min: f64,
    #[serde(default = "default_y_max")]
    pub y_max: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default)]
    pub axis: AxisSign,
}

impl Default for MetricGrid {
    fn default() -> Self {
        MetricGrid { y_min: default_y_min(), y_max: default_y_max(), points: default_points(), axis: AxisSign::Lower }
    }
}

impl MetricGrid {
    pub fn new(y_min: f64, y_max: f64, points: usize) -> Result<Self> {
        let grid = MetricGrid { y_min, y_max, points, axis: AxisSign::Lower };
        grid.validate()?;
        Ok(grid)
    }

    pub fn with_axis(mut self, axis: AxisSign) -> Self {
        self.axis = axis;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.y_min > 0.0 && self.y_min < self.y_max && self.y_max <= 0.25) {
            return Err(Error::Domain(format!(
                "metric grid needs 0 < y_min < y_max <= 1/4, got [{}, {}]",
                self.y_min, self.y_max
            )));
        }
        if self.points < 2 {
            return Err(Error::Domain(format!("metric grid needs at least 2 points, got {}", self.points)));
        }
        Ok(())
    }

    /// The same range with `factor` times as many intervals; every old node
    /// is kept.
    pub fn refined(&self, factor: usize) -> Self {
        MetricGrid { points: (self.points - 1) * factor.max(1) + 1, ..*self }
    }

    pub fn ys<T: Real>(&self) -> Vec<T> {
        let (lo, hi) = (T::lit(self.y_min), T::lit(self.y_max));
        let last = self.points - 1;
        let ratio = hi / lo;
        (0..self.points).map(|i| if i == last { hi } else { lo * ratio.powf(T::lit(i as f64 / last as f64)) }).collect()
    }
}

/// Grid-sup of the metric residual together with the whole residual curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceReport<T> {
    pub value: T,
    pub argmax_y: T,
    /// `(y, |R_mu(z) - R_nu(z)| / y^2)` per grid point.
    pub residuals: Vec<(T, T)>,
    /// Set when an argument was not certified to lie in Q3.
    pub extended_domain: bool,
    pub grid: MetricGrid,
}

#[derive(Serialize)]
struct Summary<'a> {
    value: f64,
    argmax_y: f64,
    extended_domain: bool,
    grid: &'a MetricGrid,
}

impl<T: Real> DistanceReport<T> {
    /// `y,residual` rows in full double precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("y,residual\n");
        for (y, r) in &self.residuals {
            out.push_str(&format!("{:.16e},{:.16e}\n", y.as_f64(), r.as_f64()));
        }
        out
    }

    pub fn summary_json(&self) -> String {
        let summary = Summary {
            value: self.value.as_f64(),
            argmax_y: self.argmax_y.as_f64(),
            extended_domain: self.extended_domain,
            grid: &self.grid,
        };
        serde_json::to_string_pretty(&summary).expect("summary serializes")
    }
}

fn q3_guard<T: Real>(mu: &(impl RTransform<T> + ?Sized), which: &str) -> Result<()> {
    if mu.in_q3() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{which} argument of distance is not certified in Q3; use distance_extended")))
    }
}

/// `d(mu, nu)` for arguments certified in Q3.
pub fn distance<T, A, B>(mu: &A, nu: &B, grid: &MetricGrid) -> Result<DistanceReport<T>>
where
    T: Real,
    A: RTransform<T> + ?Sized,
    B: RTransform<T> + ?Sized,
{
    q3_guard(mu, "first")?;
    q3_guard(nu, "second")?;
    residual_sup(mu, nu, grid, false)
}

/// The metric formula evaluated without the Q3 requirement.
pub fn distance_extended<T, A, B>(mu: &A, nu: &B, grid: &MetricGrid) -> Result<DistanceReport<T>>
where
    T: Real,
    A: RTransform<T> + ?Sized,
    B: RTransform<T> + ?Sized,
{
    let extended = !(mu.in_q3() && nu.in_q3());
    residual_sup(mu, nu, grid, extended)
}

fn residual_sup<T, A, B>(mu: &A, nu: &B, grid: &MetricGrid, extended_domain: bool) -> Result<DistanceReport<T>>
where
    T: Real,
    A: RTransform<T> + ?Sized,
    B: RTransform<T> + ?Sized,
{
    grid.validate()?;
    let residuals = grid
        .ys::<T>()
        .into_par_iter()
        .map(|y| {
            let z = grid.axis.point(y);
            let at = |e: Error| Error::AtGridPoint { y: y.as_f64(), source: Box::new(e) };
            let gap = mu.r_transform(z).map_err(at)? - nu.r_transform(z).map_err(at)?;
            Ok((y, gap.norm() / (y * y)))
        })
        .collect::<Result<Vec<_>>>()?;
    let (argmax_y, value) =
        residuals
            .iter()
            .copied()
            .fold((residuals[0].0, T::neg_infinity()), |best, (y, r)| if r > best.1 { (y, r) } else { best });
    if !value.is_finite() {
        return Err(Error::Domain(format!("non-finite metric residual at y = {argmax_y}")));
    }
    Ok(DistanceReport { value, argmax_y, residuals, extended_domain, grid: *grid })
}

/// `R` of a free sum: the sum of the summands' R-transforms.
pub struct FreeSum<'a, T> {
    terms: Vec<&'a dyn RTransform<T>>,
}

impl<'a, T: Real> FreeSum<'a, T> {
    pub fn new(terms: Vec<&'a dyn RTransform<T>>) -> Self {
        FreeSum { terms }
    }
}

impl<T: Real> RTransform<T> for FreeSum<'_, T> {
    fn r_transform(&self, z: Complex<T>) -> Result<Complex<T>> {
        self.terms.iter().try_fold(Complex::new(T::zero(), T::zero()), |acc, t| Ok(acc + t.r_transform(z)?))
    }

    /// Variances add, so a sum of two or more Q3 laws leaves Q3.
    fn in_q3(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].in_q3()
    }
}

/// `R_{lambda a}(z) = lambda R_a(lambda z)`, for `0 < lambda <= 1`.
pub struct Dilated<'a, T> {
    inner: &'a dyn RTransform<T>,
    lambda: T,
}

impl<'a, T: Real> Dilated<'a, T> {
    pub fn new(inner: &'a dyn RTransform<T>, lambda: T) -> Result<Self> {
        if !(lambda > T::zero() && lambda <= T::one()) {
            return Err(Error::Domain(format!("dilation factor must lie in (0, 1], got {lambda}")));
        }
        Ok(Dilated { inner, lambda })
    }
}

impl<T: Real> RTransform<T> for Dilated<'_, T> {
    fn r_transform(&self, z: Complex<T>) -> Result<Complex<T>> {
        Ok(self.inner.r_transform(z * self.lambda)? * self.lambda)
    }

    fn in_q3(&self) -> bool {
        self.lambda == T::one() && self.inner.in_q3()
    }
}

/// Law of `n^{-1/2} (a_1 + ... + a_n)` for free copies:
/// `R(z) = sqrt(n) R_a(z / sqrt(n))`. `n = 2` is one step of `T`.
pub struct CltScaled<'a, T> {
    inner: &'a dyn RTransform<T>,
    n: u32,
}

impl<'a, T: Real> CltScaled<'a, T> {
    pub fn new(inner: &'a dyn RTransform<T>, n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("CLT scaling needs n >= 1".into()));
        }
        Ok(CltScaled { inner, n })
    }

    pub fn renormalized(inner: &'a dyn RTransform<T>) -> Self {
        CltScaled { inner, n: 2 }
    }
}

impl<T: Real> RTransform<T> for CltScaled<'_, T> {
    fn r_transform(&self, z: Complex<T>) -> Result<Complex<T>> {
        let root = T::lit(self.n as f64).sqrt();
        Ok(self.inner.r_transform(z / root)? * root)
    }

    fn in_q3(&self) -> bool {
        self.inner.in_q3()
    }
}

/// `d(T mu, T nu) / d(mu, nu)`.
pub fn contraction_ratio<T: Real>(mu: &dyn RTransform<T>, nu: &dyn RTransform<T>, grid: &MetricGrid) -> Result<T> {
    let before = distance(mu, nu, grid)?.value;
    if before <= T::lit(RATIO_FLOOR) {
        return Err(Error::UndefinedRatio { distance: before.as_f64() });
    }
    let after = distance(&CltScaled::renormalized(mu), &CltScaled::renormalized(nu), grid)?.value;
    Ok(after / before)
}

/// Outcome of an inequality check `lhs <= bound + slack`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck<T> {
    pub lhs: T,
    pub bound: T,
    pub holds: bool,
}

impl<T: Real> BoundCheck<T> {
    fn new(lhs: T, bound: T) -> Self {
        BoundCheck { lhs, bound, holds: lhs <= bound + T::lit(CHECK_SLACK) }
    }
}

/// `d(lambda mu, lambda nu) <= lambda^3 d(mu, nu)` for `lambda` in `(0, 1]`.
pub fn ideality_check<T: Real>(
    mu: &dyn RTransform<T>,
    nu: &dyn RTransform<T>,
    lambda: T,
    grid: &MetricGrid,
) -> Result<BoundCheck<T>> {
    let bound = distance(mu, nu, grid)?.value * lambda.powi(3);
    let lhs = distance_extended(&Dilated::new(mu, lambda)?, &Dilated::new(nu, lambda)?, grid)?.value;
    Ok(BoundCheck::new(lhs, bound))
}

/// `d(a + a', b + b') <= d(a, b) + d(a', b')` for free pairs.
pub fn subadditivity_check<T: Real>(
    a: &dyn RTransform<T>,
    a_prime: &dyn RTransform<T>,
    b: &dyn RTransform<T>,
    b_prime: &dyn RTransform<T>,
    grid: &MetricGrid,
) -> Result<BoundCheck<T>> {
    let bound = distance(a, b, grid)?.value + distance(a_prime, b_prime, grid)?.value;
    let lhs = distance_extended(&FreeSum::new(vec![a, a_prime]), &FreeSum::new(vec![b, b_prime]), grid)?.value;
    Ok(BoundCheck::new(lhs, bound))
}

/// `d(S_n, rho) <= d(a, rho) / sqrt(n)` for `S_n` the normalized free sum of
/// `n` copies of `a`.
pub fn clt_bound_check<T: Real>(
    mu: &dyn RTransform<T>,
    rho: &dyn RTransform<T>,
    n: u32,
    grid: &MetricGrid,
) -> Result<BoundCheck<T>> {
    let bound = distance(mu, rho, grid)?.value / T::lit(n as f64).sqrt();
    let lhs = distance(&CltScaled::new(mu, n)?, rho, grid)?.value;
    Ok(BoundCheck::new(lhs, bound))
}
