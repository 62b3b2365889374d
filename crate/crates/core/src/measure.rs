//! Probability laws on the real line and the standardized class Q3.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::nc::{catalan, cumulants_from_moments, CumulantSequence, MomentSequence};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom<T> {
    pub position: T,
    pub weight: T,
}

impl<T> Atom<T> {
    pub fn new(position: T, weight: T) -> Self {
        Atom { position, weight }
    }
}

/// A density sampled on a sorted grid, interpolated linearly between nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity<T> {
    pub xs: Vec<T>,
    pub fs: Vec<T>,
}

impl<T: Real> GridDensity<T> {
    /// Wraps samples without normalization checks; use
    /// [`MeasureSpec::grid`] for a validated probability density.
    pub fn new(xs: Vec<T>, fs: Vec<T>) -> Result<Self> {
        if xs.len() != fs.len() || xs.is_empty() {
            return Err(Error::InvalidMeasure(format!(
                "grid needs matching nonempty xs/fs (got {} and {})",
                xs.len(),
                fs.len()
            )));
        }
        if xs.windows(2).any(|w| !(w[0] < w[1])) || xs.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidMeasure("grid xs must be finite and strictly increasing".into()));
        }
        if fs.iter().any(|f| !(f.is_finite() && *f >= T::zero())) {
            return Err(Error::InvalidMeasure("grid densities must be finite and nonnegative".into()));
        }
        Ok(GridDensity { xs, fs })
    }

    /// Trapezoid integral of `g(x) f(x)`.
    pub fn integrate(&self, g: impl Fn(T) -> T) -> T {
        let half = T::lit(0.5);
        self.xs
            .windows(2)
            .zip(self.fs.windows(2))
            .map(|(x, f)| (x[1] - x[0]) * half * (g(x[0]) * f[0] + g(x[1]) * f[1]))
            .sum()
    }

    pub fn mass(&self) -> T {
        self.integrate(|_| T::one())
    }

    pub fn moment(&self, k: i32) -> T {
        self.integrate(|x| x.powi(k))
    }

    /// Largest absolute difference to `g` over nodes with `|x| <= window`.
    pub fn sup_gap(&self, window: T, g: impl Fn(T) -> T) -> T {
        self.xs
            .iter()
            .zip(&self.fs)
            .filter(|(x, _)| x.abs() <= window)
            .map(|(&x, &f)| (f - g(x)).abs())
            .fold(T::zero(), T::max)
    }
}

/// A probability law: finitely many atoms, a named compactly supported law,
/// or a tabulated density.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasureSpec<T> {
    Atomic(Vec<Atom<T>>),
    /// Density `sqrt((4 sigma^2 - x^2)_+) / (2 pi sigma^2)`.
    Semicircle {
        sigma: T,
    },
    /// Density `1 / (pi sqrt(a^2 - x^2))` on `(-a, a)`.
    Arcsine {
        halfwidth: T,
    },
    /// The standardized Bernoulli law: `sqrt((1-p)/p)` with probability `p`
    /// and `-sqrt(p/(1-p))` with probability `1-p`.
    BernoulliStd {
        p: T,
    },
    Grid(GridDensity<T>),
}

/// Moments and membership in Q3 (mean 0, variance 1, finite third absolute
/// moment).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Q3Certificate<T> {
    pub mean: T,
    pub variance: T,
    pub third_abs_moment: T,
    pub is_member: bool,
}

impl<T: Real> MeasureSpec<T> {
    pub fn atomic(atoms: Vec<Atom<T>>) -> Result<Self> {
        let m = MeasureSpec::Atomic(atoms);
        m.validate()?;
        Ok(m)
    }

    pub fn point_mass(x: T) -> Self {
        MeasureSpec::Atomic(vec![Atom::new(x, T::one())])
    }

    /// `(delta_{-1} + delta_{+1}) / 2`.
    pub fn rademacher() -> Self {
        let half = T::lit(0.5);
        MeasureSpec::Atomic(vec![Atom::new(-T::one(), half), Atom::new(T::one(), half)])
    }

    pub fn semicircle(sigma: T) -> Result<Self> {
        let m = MeasureSpec::Semicircle { sigma };
        m.validate()?;
        Ok(m)
    }

    /// The standard semicircle law.
    pub fn standard_semicircle() -> Self {
        MeasureSpec::Semicircle { sigma: T::one() }
    }

    pub fn arcsine(halfwidth: T) -> Result<Self> {
        let m = MeasureSpec::Arcsine { halfwidth };
        m.validate()?;
        Ok(m)
    }

    pub fn bernoulli_std(p: T) -> Result<Self> {
        let m = MeasureSpec::BernoulliStd { p };
        m.validate()?;
        Ok(m)
    }

    pub fn grid(xs: Vec<T>, fs: Vec<T>) -> Result<Self> {
        let m = MeasureSpec::Grid(GridDensity::new(xs, fs)?);
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: T, name: &str| {
            if v.is_finite() && v > T::zero() {
                Ok(())
            } else {
                Err(Error::InvalidMeasure(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match self {
            MeasureSpec::Atomic(atoms) => {
                if atoms.is_empty() {
                    return Err(Error::InvalidMeasure("atomic measure without atoms".into()));
                }
                for a in atoms {
                    positive(a.weight, "atom weight")?;
                    if !a.position.is_finite() {
                        return Err(Error::InvalidMeasure("atom position must be finite".into()));
                    }
                }
                let total: T = atoms.iter().map(|a| a.weight).sum();
                if (total - T::one()).abs() > T::tol(1e-12) {
                    return Err(Error::InvalidMeasure(format!("atom weights sum to {total}, not 1")));
                }
                Ok(())
            }
            MeasureSpec::Semicircle { sigma } => positive(*sigma, "semicircle sigma"),
            MeasureSpec::Arcsine { halfwidth } => positive(*halfwidth, "arcsine halfwidth"),
            MeasureSpec::BernoulliStd { p } => {
                if *p > T::zero() && *p < T::one() {
                    Ok(())
                } else {
                    Err(Error::InvalidMeasure(format!("Bernoulli p must lie in (0,1), got {p}")))
                }
            }
            MeasureSpec::Grid(g) => {
                GridDensity::new(g.xs.clone(), g.fs.clone())?;
                let mass = g.mass();
                if (mass - T::one()).abs() > T::tol(1e-6) {
                    return Err(Error::InvalidMeasure(format!("grid density integrates to {mass}, not 1")));
                }
                Ok(())
            }
        }
    }

    /// The atoms of a discrete law (including the standardized Bernoulli).
    pub fn atoms(&self) -> Option<Vec<Atom<T>>> {
        match self {
            MeasureSpec::Atomic(atoms) => Some(atoms.clone()),
            MeasureSpec::BernoulliStd { p } => Some(bernoulli_atoms(*p).to_vec()),
            _ => None,
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, MeasureSpec::Atomic(_) | MeasureSpec::BernoulliStd { .. })
    }

    /// `int x^k dmu` for `k >= 1`.
    pub fn moment(&self, k: i32) -> Result<T> {
        if k <= 0 {
            return Err(Error::Domain(format!("moment order must be positive, got {k}")));
        }
        Ok(match self {
            MeasureSpec::Atomic(_) | MeasureSpec::BernoulliStd { .. } => {
                let atoms = self.atoms().expect("discrete");
                atoms.iter().map(|a| a.weight * a.position.powi(k)).sum()
            }
            MeasureSpec::Semicircle { sigma } => {
                if k % 2 == 1 {
                    T::zero()
                } else {
                    let c = catalan((k / 2) as usize).to_f64().unwrap_or(f64::INFINITY);
                    T::lit(c) * sigma.powi(k)
                }
            }
            MeasureSpec::Arcsine { halfwidth } => {
                if k % 2 == 1 {
                    T::zero()
                } else {
                    let j = k / 2;
                    central_binomial::<T>(j) * (*halfwidth * T::lit(0.5)).powi(k)
                }
            }
            MeasureSpec::Grid(g) => g.moment(k),
        })
    }

    /// `int |x|^3 dmu`, in closed form for every named law.
    pub fn third_abs_moment(&self) -> T {
        match self {
            MeasureSpec::Atomic(_) | MeasureSpec::BernoulliStd { .. } => {
                let atoms = self.atoms().expect("discrete");
                atoms.iter().map(|a| a.weight * a.position.abs().powi(3)).sum()
            }
            // E|s|^3 = 64 / (15 pi) for the standard semicircle
            MeasureSpec::Semicircle { sigma } => T::lit(64.0) / (T::lit(15.0) * T::PI()) * sigma.powi(3),
            // E|x|^3 = 4 a^3 / (3 pi)
            MeasureSpec::Arcsine { halfwidth } => T::lit(4.0) / (T::lit(3.0) * T::PI()) * halfwidth.powi(3),
            MeasureSpec::Grid(g) => g.integrate(|x| x.abs().powi(3)),
        }
    }

    pub fn mean(&self) -> T {
        self.moment(1).expect("order 1 is valid")
    }

    pub fn variance(&self) -> T {
        let m1 = self.mean();
        self.moment(2).expect("order 2 is valid") - m1 * m1
    }

    pub fn q3_check(&self) -> Q3Certificate<T> {
        let mean = self.mean();
        let variance = self.variance();
        let third_abs_moment = self.third_abs_moment();
        let tol = T::tol(1e-10);
        let is_member = mean.abs() <= tol && (variance - T::one()).abs() <= tol && third_abs_moment.is_finite();
        Q3Certificate { mean, variance, third_abs_moment, is_member }
    }

    /// Push-forward under `x -> lambda x`.
    pub fn dilate(&self, lambda: T) -> Result<Self> {
        if !(lambda.is_finite() && lambda > T::zero()) {
            return Err(Error::Domain(format!("dilation factor must be positive, got {lambda}")));
        }
        if lambda == T::one() {
            return Ok(self.clone());
        }
        Ok(match self {
            MeasureSpec::Atomic(_) | MeasureSpec::BernoulliStd { .. } => MeasureSpec::Atomic(
                self.atoms().expect("discrete").into_iter().map(|a| Atom::new(a.position * lambda, a.weight)).collect(),
            ),
            MeasureSpec::Semicircle { sigma } => MeasureSpec::Semicircle { sigma: *sigma * lambda },
            MeasureSpec::Arcsine { halfwidth } => MeasureSpec::Arcsine { halfwidth: *halfwidth * lambda },
            MeasureSpec::Grid(g) => MeasureSpec::Grid(GridDensity {
                xs: g.xs.iter().map(|&x| x * lambda).collect(),
                fs: g.fs.iter().map(|&f| f / lambda).collect(),
            }),
        })
    }

    /// Affine push-forward to mean 0 and variance 1.
    pub fn standardize(&self) -> Result<Self> {
        let mean = self.mean();
        let variance = self.variance();
        if !(variance.is_finite() && variance > T::tol(1e-14)) {
            return Err(Error::Degenerate { variance: variance.as_f64() });
        }
        let sd = variance.sqrt();
        Ok(match self {
            MeasureSpec::BernoulliStd { .. } => self.clone(),
            MeasureSpec::Atomic(atoms) => {
                MeasureSpec::Atomic(atoms.iter().map(|a| Atom::new((a.position - mean) / sd, a.weight)).collect())
            }
            MeasureSpec::Semicircle { .. } => MeasureSpec::Semicircle { sigma: T::one() },
            MeasureSpec::Arcsine { .. } => MeasureSpec::Arcsine { halfwidth: T::SQRT_2() },
            MeasureSpec::Grid(g) => MeasureSpec::Grid(GridDensity {
                xs: g.xs.iter().map(|&x| (x - mean) / sd).collect(),
                fs: g.fs.iter().map(|&f| f * sd).collect(),
            }),
        })
    }

    /// Closed-form density for the absolutely continuous named laws.
    pub fn density(&self, x: T) -> Option<T> {
        match self {
            MeasureSpec::Semicircle { sigma } => Some(semicircle_density(*sigma, x)),
            MeasureSpec::Arcsine { halfwidth } => {
                let a = *halfwidth;
                Some(if x.abs() < a { T::one() / (T::PI() * (a * a - x * x).sqrt()) } else { T::zero() })
            }
            _ => None,
        }
    }

    /// Moments of orders `1..=order` as floats.
    pub fn moments(&self, order: usize) -> Result<MomentSequence<T>> {
        MomentSequence::new((1..=order as i32).map(|k| self.moment(k)).collect::<Result<Vec<_>>>()?)
    }

    /// Free cumulants of orders `1..=order`, computed in floating point.
    pub fn cumulants(&self, order: usize) -> Result<CumulantSequence<T>> {
        Ok(cumulants_from_moments(&self.moments(order)?))
    }
}

pub fn semicircle_density<T: Real>(sigma: T, x: T) -> T {
    let r2 = T::lit(4.0) * sigma * sigma - x * x;
    if r2 <= T::zero() {
        T::zero()
    } else {
        r2.sqrt() / (T::lit(2.0) * T::PI() * sigma * sigma)
    }
}

fn bernoulli_atoms<T: Real>(p: T) -> [Atom<T>; 2] {
    let q = T::one() - p;
    [Atom::new((q / p).sqrt(), p), Atom::new(-(p / q).sqrt(), q)]
}

fn central_binomial<T: Real>(j: i32) -> T {
    // binom(2j, j) = prod_{i=1..j} (j + i) / i
    (1..=j).fold(T::one(), |acc, i| acc * T::lit((j + i) as f64) / T::lit(i as f64))
}

/// A discrete law with exact rational atoms and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactAtoms {
    atoms: Vec<(BigRational, BigRational)>,
}

impl ExactAtoms {
    /// `(position, weight)` pairs; weights must be positive and sum to 1
    /// exactly.
    pub fn new(atoms: Vec<(BigRational, BigRational)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("atomic measure without atoms".into()));
        }
        if atoms.iter().any(|(_, w)| !w.is_positive()) {
            return Err(Error::InvalidMeasure("atom weights must be positive".into()));
        }
        let total: BigRational = atoms.iter().map(|(_, w)| w.clone()).sum();
        if !total.is_one() {
            return Err(Error::InvalidMeasure(format!("atom weights sum to {total}, not 1")));
        }
        Ok(ExactAtoms { atoms })
    }

    pub fn rademacher() -> Self {
        let half = BigRational::new(BigInt::from(1), BigInt::from(2));
        ExactAtoms {
            atoms: vec![
                (BigRational::from_integer(BigInt::from(-1)), half.clone()),
                (BigRational::from_integer(BigInt::from(1)), half),
            ],
        }
    }

    pub fn atoms(&self) -> &[(BigRational, BigRational)] {
        &self.atoms
    }

    pub fn moment(&self, k: usize) -> BigRational {
        self.atoms.iter().map(|(x, w)| w * num_traits::pow(x.clone(), k)).fold(BigRational::zero(), |a, b| a + b)
    }

    pub fn moments(&self, order: usize) -> Result<MomentSequence<BigRational>> {
        MomentSequence::new((1..=order).map(|k| self.moment(k)).collect())
    }

    pub fn cumulants(&self, order: usize) -> Result<CumulantSequence<BigRational>> {
        Ok(cumulants_from_moments(&self.moments(order)?))
    }

    /// True when the mean is exactly 0 and the variance exactly 1.
    pub fn is_standard(&self) -> bool {
        self.moment(1).is_zero() && self.moment(2).is_one()
    }

    pub fn to_measure<T: Real>(&self) -> Result<MeasureSpec<T>> {
        let to_t = |r: &BigRational| T::lit(r.to_f64().unwrap_or(f64::NAN));
        MeasureSpec::atomic(self.atoms.iter().map(|(x, w)| Atom::new(to_t(x), to_t(w))).collect())
    }
}
