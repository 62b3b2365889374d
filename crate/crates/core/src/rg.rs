//! Free additive convolution and the renormalization map
//! `T: mu_a -> mu_{(a + a') / sqrt 2}`.
//!
//! An iterate `T^n mu` is tracked in three views: exact free cumulants, the
//! R-transform rule `R_n(z) = 2^{n/2} R_mu(2^{-n/2} z)`, and optionally a
//! density obtained from analytic subordination plus Stieltjes inversion.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::measure::{ExactAtoms, GridDensity, MeasureSpec};
use crate::nc::{embed, moments_from_cumulants, CumulantSequence, MomentSequence};
use crate::scalar::{QSqrt2, Real, RgScalar, Ring};
use crate::transform::{stieltjes_density, CauchyTransform, RTransform, TransformHandle};

/// Iteration cap for subordination.
pub const SUBORDINATION_MAX_ITER: usize = 10_000;

/// Cumulants of `mu_a ⊞ mu_b`: R-transforms, hence cumulants, add.
pub fn conv_cumulants<S: Ring>(a: &CumulantSequence<S>, b: &CumulantSequence<S>) -> Result<CumulantSequence<S>> {
    if a.order() != b.order() {
        return Err(Error::OrderMismatch { left: a.order(), right: b.order() });
    }
    CumulantSequence::new(a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x.clone() + y.clone()).collect())
}

/// `T^n mu` for a seed `mu` in Q3.
#[derive(Debug, Clone)]
pub struct RGIterate<T, C> {
    n: u32,
    seed: TransformHandle<T>,
    cumulants: CumulantSequence<C>,
    density: Option<GridDensity<T>>,
}

impl<T: Real, C: RgScalar> RGIterate<T, C> {
    /// Iterate `n = 0` from a seed and its free cumulants.
    pub fn new(seed: TransformHandle<T>, cumulants: CumulantSequence<C>) -> Result<Self> {
        let cert = seed.source().q3_check();
        if !cert.is_member {
            return Err(Error::NotInQ3 { mean: cert.mean.as_f64(), variance: cert.variance.as_f64() });
        }
        Ok(RGIterate { n: 0, seed, cumulants, density: None })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn seed(&self) -> &TransformHandle<T> {
        &self.seed
    }

    pub fn cumulants(&self) -> &CumulantSequence<C> {
        &self.cumulants
    }

    pub fn density(&self) -> Option<&GridDensity<T>> {
        self.density.as_ref()
    }

    pub fn moments(&self) -> MomentSequence<C> {
        moments_from_cumulants(&self.cumulants)
    }

    /// One application of `T`: `kappa_k -> 2^{1 - k/2} kappa_k`.
    pub fn renormalize(&self) -> Result<Self> {
        let cert = self.seed.source().q3_check();
        if !cert.is_member {
            return Err(Error::NotInQ3 { mean: cert.mean.as_f64(), variance: cert.variance.as_f64() });
        }
        let values = self
            .cumulants
            .as_slice()
            .iter()
            .enumerate()
            .map(|(i, kappa)| kappa.mul_sqrt2_pow(2 - (i as i64 + 1)))
            .collect();
        Ok(RGIterate {
            n: self.n + 1,
            seed: self.seed.clone(),
            cumulants: CumulantSequence::new(values)?,
            density: None,
        })
    }

    /// `T^steps` applied to this iterate.
    pub fn renormalize_times(&self, steps: u32) -> Result<Self> {
        let mut it = self.clone();
        for _ in 0..steps {
            it = it.renormalize()?;
        }
        Ok(it)
    }

    /// `R_{T^n mu}(z) = 2^{n/2} R_mu(2^{-n/2} z)`.
    pub fn r_eval(&self, z: Complex<T>) -> Result<Complex<T>> {
        let scale = T::SQRT_2().powi(self.n as i32);
        Ok(self.seed.r_transform(z / scale)? * scale)
    }

    /// Truncated R-series `sum_k kappa_k z^{k-1}` from the stored cumulants.
    pub fn r_series(&self, z: Complex<T>) -> Complex<T> {
        let mut power = Complex::new(T::one(), T::zero());
        let mut total = Complex::new(T::zero(), T::zero());
        for kappa in self.cumulants.as_slice() {
            total = total + power * T::lit(kappa.approx());
            power = power * z;
        }
        total
    }

    /// Computes and attaches the density of `T^n mu` on `xs`.
    pub fn with_density(mut self, xs: &[T], schedule: (T, T)) -> Result<Self> {
        self.density = Some(measure_of_t(&self, xs, schedule)?);
        Ok(self)
    }
}

impl<T: Real + RgScalar> RGIterate<T, T> {
    /// Seed with floating-point cumulants computed from its moments.
    pub fn from_measure(seed: TransformHandle<T>, order: usize) -> Result<Self> {
        let kappa = seed.source().cumulants(order)?;
        Self::new(seed, kappa)
    }
}

impl<T: Real> RGIterate<T, QSqrt2> {
    /// Seed with exact cumulants from rational atoms.
    pub fn from_exact_atoms(atoms: &ExactAtoms, order: usize) -> Result<Self> {
        let seed = TransformHandle::<T>::new(atoms.to_measure()?)?;
        if !atoms.is_standard() {
            let cert = seed.source().q3_check();
            return Err(Error::NotInQ3 { mean: cert.mean.as_f64(), variance: cert.variance.as_f64() });
        }
        Self::new(seed, embed(&atoms.cumulants(order)?))
    }

    /// The standard semicircle with its exact cumulants `delta_{k,2}`.
    pub fn semicircle(order: usize) -> Result<Self> {
        let kappa =
            (1..=order).map(|k| if k == 2 { QSqrt2::from_integer(1) } else { QSqrt2::from_integer(0) }).collect();
        Self::new(TransformHandle::new(MeasureSpec::standard_semicircle())?, CumulantSequence::new(kappa)?)
    }
}

impl<T: Real, C: RgScalar + Sync + Send> RTransform<T> for RGIterate<T, C> {
    fn r_transform(&self, z: Complex<T>) -> Result<Complex<T>> {
        self.r_eval(z)
    }

    fn in_q3(&self) -> bool {
        self.seed.source().q3_check().is_member
    }
}

/// `R_{S_n}(z) = sqrt(n) R_mu(z / sqrt(n))` for `S_n = n^{-1/2} sum_{i <= n} a_i`.
pub fn clt_scale_r<T: Real>(h: &TransformHandle<T>, n: u32, z: Complex<T>) -> Result<Complex<T>> {
    if n == 0 {
        return Err(Error::Domain("clt_scale_r needs n >= 1".into()));
    }
    let root = T::lit(n as f64).sqrt();
    Ok(h.r_transform(z / root)? * root)
}

/// Accepted state of the subordination iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SubordinationState<T> {
    pub z: Complex<T>,
    pub omega: Complex<T>,
    pub residual: T,
    pub iterations: usize,
    /// Fixed-point residual `|omega - z - (t-1) H(omega)|` of each accepted
    /// state, i.e. each iterate that improved on all earlier ones.
    pub history: Vec<T>,
}

/// Subordination function of the free convolution power `mu^{⊞t}`, `t >= 1`:
/// the fixed point of `omega -> z + (t - 1) H(omega)` with
/// `H(u) = F_mu(u) - u`, so that `G_{mu^{⊞t}}(z) = G_mu(omega(z))`.
///
/// The map sends `{Im >= Im z}` into itself; its iteration is accelerated by
/// damped Newton steps that are accepted only when they stay in that region
/// and reduce the residual.
pub fn subordinate<T: Real>(h: &TransformHandle<T>, t: T, z: Complex<T>) -> Result<SubordinationState<T>> {
    if !(z.im > T::zero()) {
        return Err(Error::Domain(format!("subordination needs Im z > 0, got {}", z.im)));
    }
    if !(t >= T::one()) {
        return Err(Error::Domain(format!("convolution power must be >= 1, got {t}")));
    }
    let tm1 = t - T::one();
    let one = Complex::new(T::one(), T::zero());
    let stop = T::tol(1e-12);

    let mut omega = z;
    let (mut hv, mut dhv) = h.shift_with_derivative(omega)?;
    let mut gap = omega - z - hv * tm1;
    let mut residual = gap.norm();
    let mut history = vec![residual];
    let mut iterations = 0;
    while iterations < SUBORDINATION_MAX_ITER {
        iterations += 1;
        let newton_step = gap / (one - dhv * tm1);
        let mut next = None;
        let mut damping = T::one();
        for _ in 0..=8 {
            let candidate = omega - newton_step * damping;
            if candidate.im >= z.im && candidate.re.is_finite() && candidate.im.is_finite() {
                let (hc, dhc) = h.shift_with_derivative(candidate)?;
                let gc = candidate - z - hc * tm1;
                if gc.norm() < residual {
                    next = Some((candidate, hc, dhc, gc));
                    break;
                }
            }
            damping = damping * T::lit(0.5);
        }
        let (candidate, hc, dhc, gc) = match next {
            Some(found) => found,
            None => {
                let candidate = z + hv * tm1;
                let (hc, dhc) = h.shift_with_derivative(candidate)?;
                let gc = candidate - z - hc * tm1;
                (candidate, hc, dhc, gc)
            }
        };
        let moved = (candidate - omega).norm();
        let previous_size = omega.norm();
        omega = candidate;
        hv = hc;
        dhv = dhc;
        gap = gc;
        residual = gap.norm();
        // fallback steps may leave the residual above the best so far; only
        // improving iterates count as accepted
        if residual < history[history.len() - 1] {
            history.push(residual);
        }
        if moved <= stop * (T::one() + previous_size) || residual == T::zero() {
            return Ok(SubordinationState { z, omega, residual, iterations, history });
        }
    }
    Err(Error::Subordination { iterations, residual: residual.as_f64() })
}

/// `G_{mu ⊞ mu}(z)` through the subordination fixed point.
pub fn subordination_selfconv<T: Real>(h: &TransformHandle<T>, z: Complex<T>) -> Result<Complex<T>> {
    let state = subordinate(h, T::lit(2.0), z)?;
    h.cauchy(state.omega)
}

/// Cauchy transform of `dilate(mu^{⊞t}, lambda)`.
#[derive(Debug, Clone)]
pub struct FreeConvolutionPower<T> {
    handle: TransformHandle<T>,
    power: T,
    dilation: T,
}

impl<T: Real> FreeConvolutionPower<T> {
    pub fn new(handle: TransformHandle<T>, power: T, dilation: T) -> Result<Self> {
        if !(power >= T::one()) || !(dilation > T::zero()) {
            return Err(Error::Domain("need power >= 1 and dilation > 0".into()));
        }
        Ok(FreeConvolutionPower { handle, power, dilation })
    }

    /// `T^n mu = dilate(mu^{⊞ 2^n}, 2^{-n/2})`.
    pub fn renormalized(handle: TransformHandle<T>, n: u32) -> Result<Self> {
        let power = T::lit(2.0).powi(n as i32);
        Self::new(handle, power, power.sqrt().recip())
    }
}

impl<T: Real> CauchyTransform<T> for FreeConvolutionPower<T> {
    fn cauchy(&self, z: Complex<T>) -> Result<Complex<T>> {
        if z.im == T::zero() {
            return Err(Error::RealArgument { re: z.re.as_f64() });
        }
        // G(conj z) = conj G(z) for laws on the real line
        let flip = z.im < T::zero();
        let upper = if flip { z.conj() } else { z };
        let inner = upper / self.dilation;
        let omega = subordinate(&self.handle, self.power, inner)?.omega;
        let g = self.handle.cauchy(omega)? / self.dilation;
        Ok(if flip { g.conj() } else { g })
    }
}

/// Density of `T^n mu` on `xs` by subordination and Stieltjes inversion.
pub fn measure_of_t<T: Real, C: RgScalar>(it: &RGIterate<T, C>, xs: &[T], schedule: (T, T)) -> Result<GridDensity<T>> {
    if it.n == 0 {
        if it.seed.source().is_discrete() {
            return Err(Error::NoDensity);
        }
        return stieltjes_density(&it.seed, xs, schedule);
    }
    let power = FreeConvolutionPower::renormalized(it.seed.clone(), it.n)?;
    stieltjes_density(&power, xs, schedule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::linspace;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use proptest::prelude::*;

    type C64 = Complex<f64>;

    fn ints(v: &[i64]) -> CumulantSequence<BigRational> {
        CumulantSequence::new(v.iter().map(|&x| BigRational::from_integer(BigInt::from(x))).collect()).unwrap()
    }

    fn rademacher_iterate(order: usize) -> RGIterate<f64, QSqrt2> {
        RGIterate::from_exact_atoms(&ExactAtoms::rademacher(), order).unwrap()
    }

    fn r_rademacher(z: C64) -> C64 {
        let one = C64::new(1.0, 0.0);
        z * 2.0 / (one + (one + z * z * 4.0).sqrt())
    }

    #[test]
    fn cumulant_convolution_examples() {
        assert_eq!(conv_cumulants(&ints(&[0, 1, 0, 0]), &ints(&[0, 1, 0, 0])).unwrap(), ints(&[0, 2, 0, 0]));
        let k = ints(&[0, 1, 0, -1, 0, 2]);
        assert_eq!(conv_cumulants(&k, &ints(&[0; 6])).unwrap(), k);
        assert_eq!(conv_cumulants(&k, &k).unwrap(), ints(&[0, 2, 0, -2, 0, 4]));
        assert_eq!(conv_cumulants(&k, &ints(&[0, 1])).unwrap_err(), Error::OrderMismatch { left: 6, right: 2 });
    }

    #[test]
    fn renormalization_examples() {
        let sc = RGIterate::<f64, QSqrt2>::semicircle(8).unwrap();
        let next = sc.renormalize().unwrap();
        assert_eq!(next.cumulants(), sc.cumulants());
        assert_eq!(next.n(), 1);

        let rad = rademacher_iterate(6).renormalize().unwrap();
        assert_eq!(
            rad.cumulants().get(4),
            Some(&QSqrt2::from_rational(BigRational::new(BigInt::from(-1), BigInt::from(2))))
        );

        // kappa_3 -> kappa_3 / sqrt 2
        let seed = MeasureSpec::bernoulli_std(0.25).unwrap();
        let it = RGIterate::from_measure(TransformHandle::new(seed).unwrap(), 4).unwrap();
        let a3 = *it.cumulants().get(3).unwrap();
        let next = it.renormalize().unwrap();
        assert!((next.cumulants().get(3).unwrap() - a3 / 2f64.sqrt()).abs() < 1e-15);
        assert!((next.cumulants().get(2).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_seeds_outside_q3() {
        let h = TransformHandle::new(MeasureSpec::semicircle(2.0).unwrap()).unwrap();
        assert!(matches!(RGIterate::from_measure(h, 4), Err(Error::NotInQ3 { .. })));
        let off = ExactAtoms::new(vec![
            (BigRational::from_integer(BigInt::from(0)), BigRational::new(BigInt::from(1), BigInt::from(2))),
            (BigRational::from_integer(BigInt::from(1)), BigRational::new(BigInt::from(1), BigInt::from(2))),
        ])
        .unwrap();
        assert!(matches!(RGIterate::<f64, QSqrt2>::from_exact_atoms(&off, 4), Err(Error::NotInQ3 { .. })));
    }

    #[test]
    fn r_eval_examples() {
        let rad = rademacher_iterate(6);
        let z = C64::new(0.0, -0.25);
        assert_eq!(rad.r_eval(z).unwrap(), rad.seed().r_transform(z).unwrap());

        let mut sc = RGIterate::<f64, QSqrt2>::semicircle(4).unwrap();
        let z = C64::new(0.0, -0.1);
        for _ in 0..6 {
            assert!((sc.r_eval(z).unwrap() - z).norm() < 1e-16);
            sc = sc.renormalize().unwrap();
        }

        let one = rad.renormalize().unwrap();
        let z = C64::new(0.0, -0.25);
        let oracle = r_rademacher(z / 2f64.sqrt()) * 2f64.sqrt();
        assert!((one.r_eval(z).unwrap() - oracle).norm() < 1e-15);
    }

    #[test]
    fn clt_scaling_paths_agree() {
        let h = TransformHandle::new(MeasureSpec::bernoulli_std(0.25).unwrap()).unwrap();
        let z = C64::new(0.0, -0.2);
        assert_eq!(clt_scale_r(&h, 1, z).unwrap(), h.r_transform(z).unwrap());
        let it = RGIterate::from_measure(h.clone(), 4).unwrap().renormalize().unwrap();
        assert!((clt_scale_r(&h, 2, z).unwrap() - it.r_eval(z).unwrap()).norm() < 1e-16);
        let sc = TransformHandle::new(MeasureSpec::standard_semicircle()).unwrap();
        assert!((clt_scale_r(&sc, 4, z).unwrap() - z).norm() < 1e-16);
        assert!(clt_scale_r(&h, 0, z).is_err());
    }

    #[test]
    fn subordination_examples() {
        let delta = TransformHandle::new(MeasureSpec::point_mass(0.0)).unwrap();
        let z = C64::new(0.3, 0.8);
        assert!((subordination_selfconv(&delta, z).unwrap() - z.inv()).norm() < 1e-14);

        let rad = TransformHandle::new(MeasureSpec::rademacher()).unwrap();
        let arcsine = TransformHandle::new(MeasureSpec::arcsine(2.0).unwrap()).unwrap();
        let sc = TransformHandle::new(MeasureSpec::standard_semicircle()).unwrap();
        let sc2 = TransformHandle::new(MeasureSpec::semicircle(2f64.sqrt()).unwrap()).unwrap();
        for z in [C64::new(0.0, 1.0), C64::new(1.3, 0.01), C64::new(-0.4, 1e-3), C64::new(2.5, 0.5)] {
            let g = subordination_selfconv(&rad, z).unwrap();
            assert!((g - arcsine.cauchy(z).unwrap()).norm() < 1e-10 * (1.0 + g.norm()), "z={z}");
            let g = subordination_selfconv(&sc, z).unwrap();
            assert!((g - sc2.cauchy(z).unwrap()).norm() < 1e-10 * (1.0 + g.norm()), "z={z}");
        }
        assert!(subordinate(&rad, 2.0, C64::new(0.0, -1.0)).is_err());
    }

    #[test]
    fn subordination_state_invariants() {
        let laws = [
            MeasureSpec::rademacher(),
            MeasureSpec::bernoulli_std(0.25).unwrap(),
            MeasureSpec::standard_semicircle(),
            MeasureSpec::arcsine(2.0).unwrap(),
        ];
        for mu in laws {
            let h = TransformHandle::new(mu).unwrap();
            for t in [2.0, 16.0, 1024.0] {
                for z in [C64::new(0.1, 1e-3), C64::new(1.9, 0.01), C64::new(-3.0, 2.0), C64::new(0.0, 1e3)] {
                    let st = subordinate(&h, t, z).unwrap();
                    assert!(st.omega.im >= st.z.im && st.z.im > 0.0);
                    assert!(st.history.windows(2).all(|w| w[1] <= w[0]), "t={t} z={z} {:?}", st.history);
                }
            }
        }
    }

    #[test]
    fn subordination_herglotz_and_decay() {
        let h = TransformHandle::new(MeasureSpec::bernoulli_std(0.25).unwrap()).unwrap();
        for z in [C64::new(-1.0, 0.05), C64::new(0.5, 2.0), C64::new(1e3, 0.0) + C64::new(0.0, 1.0)] {
            assert!(subordination_selfconv(&h, z).unwrap().im < 0.0);
        }
        for z in [C64::new(0.0, 1e3), C64::new(1e3, 1.0), C64::new(-600.0, 800.0)] {
            let g = subordination_selfconv(&h, z).unwrap();
            assert!((g * z - 1.0).norm() < 1e-2, "z={z}");
        }
    }

    #[test]
    fn power_of_semicircle_is_semicircle() {
        let sc = TransformHandle::new(MeasureSpec::standard_semicircle()).unwrap();
        for n in 1..=6 {
            let power = FreeConvolutionPower::renormalized(sc.clone(), n).unwrap();
            for z in [C64::new(0.5, 0.01), C64::new(-1.5, 0.3), C64::new(0.2, -0.4)] {
                let g = power.cauchy(z).unwrap();
                assert!((g - sc.cauchy(z).unwrap()).norm() < 1e-9, "n={n} z={z}");
            }
        }
    }

    #[test]
    fn measure_of_t_examples() {
        let rad = rademacher_iterate(4);
        assert_eq!(measure_of_t(&rad, &[0.0], (1e-2, 1e-3)).unwrap_err(), Error::NoDensity);
        let one = rad.renormalize().unwrap();
        let d = measure_of_t(&one, &[0.0], (1e-2, 1e-3)).unwrap();
        let expected = 2f64.sqrt() / (2.0 * std::f64::consts::PI);
        assert!((d.fs[0] - expected).abs() < 1e-3, "{}", d.fs[0]);

        let mut sc = RGIterate::<f64, QSqrt2>::semicircle(4).unwrap();
        let xs = linspace(-1.9, 1.9, 77);
        let rho = MeasureSpec::<f64>::standard_semicircle();
        for _ in 0..4 {
            let d = measure_of_t(&sc, &xs, (1e-2, 1e-3)).unwrap();
            assert!(d.sup_gap(1.9, |x| rho.density(x).unwrap()) <= 2e-3);
            sc = sc.renormalize().unwrap();
        }
    }

    #[test]
    fn density_moments_match_cumulants() {
        let one = rademacher_iterate(4).renormalize().unwrap();
        let xs = linspace(-3.0, 3.0, 6001);
        let one = one.with_density(&xs, (1e-2, 5e-3)).unwrap();
        let d = one.density().unwrap();
        let exact = one.moments();
        for k in 1..=4 {
            let m = d.moment(k as i32);
            let e = exact.get(k).unwrap().to_f64();
            assert!((m - e).abs() <= 1e-3, "k={k}: {m} vs {e}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn iterate_matches_truncated_series(y in 1e-3f64..=0.1, n in 0u32..=6) {
            // Rademacher cumulants vanish at odd orders and
            // kappa_{2j} = (-1)^{j+1} C_{j-1}; orders above 8 bound the tail.
            let it = rademacher_iterate(8).renormalize_times(n).unwrap();
            let full = rademacher_iterate(24).renormalize_times(n).unwrap();
            let z = C64::new(0.0, -y);
            let tail: f64 = full.cumulants().as_slice()[8..]
                .iter()
                .enumerate()
                .map(|(i, k)| k.to_f64().abs() * y.powi(i as i32 + 8))
                .sum();
            let diff = (it.r_eval(z).unwrap() - it.r_series(z)).norm();
            prop_assert!(diff <= 2.0 * tail + 1e-15, "diff {diff} tail {tail}");
        }

        #[test]
        fn exact_cumulant_scaling(n in 0u32..=12) {
            let seed = rademacher_iterate(8);
            let it = seed.renormalize_times(n).unwrap();
            for k in 1..=8usize {
                let expected = seed.cumulants().get(k).unwrap().mul_sqrt2_pow(n as i64 * (2 - k as i64));
                prop_assert_eq!(it.cumulants().get(k).unwrap(), &expected);
            }
        }
    }
}
