//! Cauchy transform `G`, its reciprocal `F = 1/G`, the inverse of `F`, the
//! R-transform and Stieltjes inversion.
//!
//! The R-transform is evaluated on a short segment of the imaginary axis,
//! `z = -iy` with `0 < y <= 1/4` by default. There `w = 1/z` is large and
//! `R(z) = F^{-1}(w) - w` is tiny, so subtracting two large numbers would
//! wipe out the digits the metric divides by `y^2`. Instead Newton solves
//! `r + H(w + r) = 0` for the shift `r` directly, where `H(u) = F(u) - u` is
//! computed in a cancellation-free form for every law.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{GridDensity, MeasureSpec};
use crate::scalar::Real;

/// Which half of the imaginary axis carries the evaluation points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisSign {
    #[default]
    Lower,
    Upper,
}

impl AxisSign {
    /// `-iy` on the lower axis, `+iy` on the upper one.
    pub fn point<T: Real>(self, y: T) -> Complex<T> {
        match self {
            AxisSign::Lower => Complex::new(T::zero(), -y),
            AxisSign::Upper => Complex::new(T::zero(), y),
        }
    }

    fn sign<T: Real>(self) -> T {
        match self {
            AxisSign::Lower => -T::one(),
            AxisSign::Upper => T::one(),
        }
    }
}

impl std::str::FromStr for AxisSign {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lower" => Ok(AxisSign::Lower),
            "upper" => Ok(AxisSign::Upper),
            other => Err(Error::Parse(format!("axis sign must be lower or upper, got {other:?}"))),
        }
    }
}

/// Anything whose Cauchy transform can be evaluated off the real axis.
pub trait CauchyTransform<T: Real>: Sync {
    fn cauchy(&self, z: Complex<T>) -> Result<Complex<T>>;
}

/// Anything whose R-transform can be evaluated on the working axis.
pub trait RTransform<T: Real>: Sync {
    fn r_transform(&self, z: Complex<T>) -> Result<Complex<T>>;

    /// Whether the underlying law is certified to lie in Q3.
    fn in_q3(&self) -> bool;
}

/// An evaluable transform attached to a measure.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformHandle<T> {
    source: MeasureSpec<T>,
    newton_tol: T,
    newton_max_iter: usize,
    axis: AxisSign,
}

const MAX_HALVINGS: usize = 8;

impl<T: Real> TransformHandle<T> {
    pub fn new(source: MeasureSpec<T>) -> Result<Self> {
        source.validate()?;
        Ok(TransformHandle { source, newton_tol: T::tol(1e-12), newton_max_iter: 100, axis: AxisSign::Lower })
    }

    pub fn with_newton(mut self, tol: T, max_iter: usize) -> Result<Self> {
        if !(tol > T::zero()) || max_iter == 0 {
            return Err(Error::Domain("Newton tolerance must be positive and max_iter >= 1".into()));
        }
        self.newton_tol = tol;
        self.newton_max_iter = max_iter;
        Ok(self)
    }

    pub fn with_axis(mut self, axis: AxisSign) -> Self {
        self.axis = axis;
        self
    }

    pub fn source(&self) -> &MeasureSpec<T> {
        &self.source
    }

    pub fn axis(&self) -> AxisSign {
        self.axis
    }

    pub fn newton_tol(&self) -> T {
        self.newton_tol
    }

    pub fn newton_max_iter(&self) -> usize {
        self.newton_max_iter
    }

    /// Handle on the dilated law with the same numerical settings.
    pub fn dilated(&self, lambda: T) -> Result<Self> {
        Ok(TransformHandle { source: self.source.dilate(lambda)?, ..self.clone() })
    }

    /// `G(z) = int dmu(t) / (z - t)`.
    pub fn cauchy(&self, z: Complex<T>) -> Result<Complex<T>> {
        Ok(self.cauchy_with_derivative(z)?.0)
    }

    /// `(G(z), G'(z))`, with `G'(z) = -int dmu(t) / (z - t)^2`.
    pub fn cauchy_with_derivative(&self, z: Complex<T>) -> Result<(Complex<T>, Complex<T>)> {
        if z.im == T::zero() {
            return Err(Error::RealArgument { re: z.re.as_f64() });
        }
        Ok(match &self.source {
            MeasureSpec::Atomic(_) | MeasureSpec::BernoulliStd { .. } => {
                let atoms = self.source.atoms().expect("discrete");
                let mut g = Complex::new(T::zero(), T::zero());
                let mut dg = g;
                for a in atoms {
                    let inv = (z - a.position).inv();
                    g = g + inv * a.weight;
                    dg = dg - inv * inv * a.weight;
                }
                (g, dg)
            }
            MeasureSpec::Semicircle { sigma } => {
                let s = branch_root(z, T::lit(4.0) * *sigma * *sigma);
                let g = (z + s).inv() * T::lit(2.0);
                (g, -g / s)
            }
            MeasureSpec::Arcsine { halfwidth } => {
                let s = branch_root(z, *halfwidth * *halfwidth);
                let g = s.inv();
                (g, -z / (s * s * s))
            }
            MeasureSpec::Grid(grid) => grid_cauchy(grid, z),
        })
    }

    /// `F(z) = 1 / G(z)`.
    pub fn f_transform(&self, z: Complex<T>) -> Result<Complex<T>> {
        let g = self.cauchy(z)?;
        if g.norm() < tiny::<T>() {
            return Err(Error::VanishingCauchy { re: z.re.as_f64(), im: z.im.as_f64() });
        }
        Ok(g.inv())
    }

    /// `(H(u), H'(u))` with `H(u) = F(u) - u`, evaluated without cancellation.
    pub fn shift_with_derivative(&self, u: Complex<T>) -> Result<(Complex<T>, Complex<T>)> {
        let (g, dg) = self.cauchy_with_derivative(u)?;
        if g.norm() < tiny::<T>() {
            return Err(Error::VanishingCauchy { re: u.re.as_f64(), im: u.im.as_f64() });
        }
        let f_prime_minus_one = -dg / (g * g) - Complex::new(T::one(), T::zero());
        let h = match &self.source {
            MeasureSpec::Atomic(_) | MeasureSpec::BernoulliStd { .. } => {
                // 1 - u G(u) = -sum w x / (u - x)
                let atoms = self.source.atoms().expect("discrete");
                let mut a = Complex::new(T::zero(), T::zero());
                for atom in atoms {
                    a = a + (u - atom.position).inv() * (atom.weight * atom.position);
                }
                -a / g
            }
            // sigma^2 G^2 - u G + 1 = 0, so F(u) - u = -sigma^2 G(u)
            MeasureSpec::Semicircle { sigma } => {
                let s2 = *sigma * *sigma;
                return Ok((-g * s2, -dg * s2));
            }
            MeasureSpec::Arcsine { halfwidth } => {
                let a2 = *halfwidth * *halfwidth;
                let s = g.inv();
                let h = -(u + s).inv() * a2;
                return Ok((h, (u + s).inv() / s * a2));
            }
            MeasureSpec::Grid(_) => g.inv() - u,
        };
        Ok((h, f_prime_minus_one))
    }

    /// Solves `F(w + r) = w` for `r`, starting from `r = 0`.
    fn solve_shift(&self, w: Complex<T>) -> Result<Complex<T>> {
        let side = w.im.signum();
        if w.im == T::zero() {
            return Err(Error::BranchEscape { re: w.re.as_f64(), im: 0.0 });
        }
        let scale = T::one().max(w.norm());
        let mut r = Complex::new(T::zero(), T::zero());
        let (mut h, mut dh) = self.shift_with_derivative(w)?;
        let mut residual = (r + h).norm();
        let mut iterations = 0;
        while iterations < self.newton_max_iter && residual > T::zero() {
            iterations += 1;
            let g = r + h;
            let step = g / (dh + T::one());
            let mut damping = T::one();
            let mut accepted = None;
            let mut escaped_at = None;
            for _ in 0..=MAX_HALVINGS {
                let candidate = r - step * damping;
                let u = w + candidate;
                if !(u.im * side > T::zero()) || !u.re.is_finite() || !u.im.is_finite() {
                    escaped_at = Some(u);
                    damping = damping * T::lit(0.5);
                    continue;
                }
                let (hc, dhc) = self.shift_with_derivative(u)?;
                let rc = (candidate + hc).norm();
                if rc < residual {
                    accepted = Some((candidate, hc, dhc, rc));
                    break;
                }
                damping = damping * T::lit(0.5);
            }
            match accepted {
                Some((candidate, hc, dhc, rc)) => {
                    let moved = (candidate - r).norm();
                    r = candidate;
                    h = hc;
                    dh = dhc;
                    residual = rc;
                    if moved <= T::epsilon() * T::lit(4.0) * r.norm() {
                        break;
                    }
                }
                None => {
                    if let (Some(u), true) = (escaped_at, residual > self.newton_tol * scale) {
                        return Err(Error::BranchEscape { re: u.re.as_f64(), im: u.im.as_f64() });
                    }
                    // no further decrease possible at working precision
                    break;
                }
            }
        }
        if residual <= self.newton_tol * scale {
            Ok(r)
        } else {
            Err(Error::InversionFailure { iterations, residual: residual.as_f64() })
        }
    }

    /// `u` with `F(u) = w`, satisfying `|F(u) - w| <= tol * max(1, |w|)`.
    pub fn f_inverse(&self, w: Complex<T>) -> Result<Complex<T>> {
        Ok(w + self.solve_shift(w)?)
    }

    fn check_axis(&self, z: Complex<T>) -> Result<()> {
        let limit = T::lit(0.25) * (T::one() + T::lit(1e-12));
        let on_side = z.im * self.axis.sign::<T>() > T::zero();
        if !on_side || z.norm() > limit || z.re.abs() > z.im.abs() * T::lit(1e-12) {
            return Err(Error::OffAxis { re: z.re.as_f64(), im: z.im.as_f64() });
        }
        Ok(())
    }

    /// `R(z) = F^{-1}(1/z) - 1/z` for `z` on the working axis, `0 < |z| <= 1/4`.
    pub fn r_transform(&self, z: Complex<T>) -> Result<Complex<T>> {
        self.check_axis(z)?;
        self.solve_shift(z.inv())
    }

    /// R-transform of the dilated law via `R_{lambda a}(z) = lambda R_a(lambda z)`.
    pub fn r_of_dilated(&self, lambda: T, z: Complex<T>) -> Result<Complex<T>> {
        if !(lambda > T::zero() && lambda.is_finite()) {
            return Err(Error::Domain(format!("dilation factor must be positive, got {lambda}")));
        }
        Ok(self.r_transform(z * lambda)? * lambda)
    }
}

impl<T: Real> CauchyTransform<T> for TransformHandle<T> {
    fn cauchy(&self, z: Complex<T>) -> Result<Complex<T>> {
        TransformHandle::cauchy(self, z)
    }
}

impl<T: Real> RTransform<T> for TransformHandle<T> {
    fn r_transform(&self, z: Complex<T>) -> Result<Complex<T>> {
        TransformHandle::r_transform(self, z)
    }

    fn in_q3(&self) -> bool {
        self.source.q3_check().is_member
    }
}

/// Density `-(1/pi) Im G(x + i eps)`, extrapolated linearly to `eps = 0`
/// from the two schedule values and clamped at zero.
pub fn stieltjes_density<T: Real, C: CauchyTransform<T> + ?Sized>(
    transform: &C,
    xs: &[T],
    schedule: (T, T),
) -> Result<GridDensity<T>> {
    let (e1, e2) = schedule;
    if !(e1 > e2 && e2 > T::zero()) {
        return Err(Error::Domain(format!("epsilon schedule must satisfy e1 > e2 > 0, got ({e1}, {e2})")));
    }
    let fs = xs
        .par_iter()
        .map(|&x| {
            let at = |eps: T| -> Result<T> { Ok(-transform.cauchy(Complex::new(x, eps))?.im / T::PI()) };
            let (f1, f2) = (at(e1)?, at(e2)?);
            let extrapolated = (e1 * f2 - e2 * f1) / (e1 - e2);
            Ok(extrapolated.max(T::zero()))
        })
        .collect::<Result<Vec<T>>>()?;
    GridDensity::new(xs.to_vec(), fs)
}

/// `n` equally spaced points on `[lo, hi]`.
pub fn linspace<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    if n == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / T::lit((n - 1) as f64);
    (0..n).map(|i| lo + step * T::lit(i as f64)).collect()
}

fn tiny<T: Real>() -> T {
    T::lit(1e-300).max(T::min_positive_value())
}

/// `z sqrt(1 - c / z^2)`: the square root of `z^2 - c` that behaves like `z`
/// at infinity and is analytic off `[-sqrt c, sqrt c]`.
fn branch_root<T: Real>(z: Complex<T>, c: T) -> Complex<T> {
    let one = Complex::new(T::one(), T::zero());
    z * (one - (z * z).inv() * c).sqrt()
}

/// Exact Cauchy transform of the piecewise-linear interpolant of a grid
/// density, with its derivative.
fn grid_cauchy<T: Real>(grid: &GridDensity<T>, z: Complex<T>) -> (Complex<T>, Complex<T>) {
    let zero = Complex::new(T::zero(), T::zero());
    let (mut g, mut dg) = (zero, zero);
    for (x, f) in grid.xs.windows(2).zip(grid.fs.windows(2)) {
        let h = x[1] - x[0];
        let slope = (f[1] - f[0]) / h;
        let a = z - x[1];
        let q = a.inv() * h;
        let (log1p, phi) = log1p_and_phi(q);
        // int f / (z - t) = f0 L + slope [(z - x0) L - h], with
        // (z - x0) L - h = a [(1 + q) L - q]
        g = g + log1p * f[0] + a * phi * slope;
        let fz = (z - x[0]) * slope + f[0];
        dg = dg + log1p * slope - fz * h / ((z - x[0]) * a);
    }
    (g, dg)
}

/// `(log(1 + q), (1 + q) log(1 + q) - q)` with series for small `|q|`.
fn log1p_and_phi<T: Real>(q: Complex<T>) -> (Complex<T>, Complex<T>) {
    if q.norm() < T::lit(1e-2) {
        let mut log1p = Complex::new(T::zero(), T::zero());
        let mut phi = log1p;
        let mut power = q;
        for n in 1..=9 {
            let nf = T::lit(n as f64);
            let sign = if n % 2 == 1 { T::one() } else { -T::one() };
            log1p = log1p + power * (sign / nf);
            if n >= 2 {
                phi = phi + power * (-sign / (nf * (nf - T::one())));
            }
            power = power * q;
        }
        (log1p, phi)
    } else {
        let one = Complex::new(T::one(), T::zero());
        let l = (one + q).ln();
        (l, (one + q) * l - q)
    }
}
