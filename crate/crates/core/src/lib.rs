//! Numerics for free probability: free cumulants over non-crossing
//! partitions, Cauchy/R-transforms, free additive convolution, the
//! renormalization map `T mu = law of (a + a') / sqrt 2` and the R-transform
//! metric under which `T` contracts toward the semicircle law.
//!
//! Everything numeric is generic over the scalar ([`scalar::Real`] for
//! floating types, [`scalar::RgScalar`] for cumulants that may be exact).
//! The aliases below fix the common choices.
//!
//! ```
//! use freerg_core::{distance, Measure, MetricGrid, Transform};
//!
//! let rad = Transform::new(Measure::rademacher()).unwrap();
//! let rho = Transform::new(Measure::standard_semicircle()).unwrap();
//! let d = distance(&rad, &rho, &MetricGrid::default()).unwrap();
//! assert!((d.value - 0.287187).abs() < 5e-6);
//! ```

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod measure;
pub mod metric;
pub mod nc;
pub mod rg;
pub mod scalar;
pub mod schema;
pub mod transform;

use num_rational::BigRational;

pub use error::{Error, Result};
pub use metric::{
    clt_bound_check, contraction_ratio, distance, distance_extended, ideality_check, subadditivity_check, BoundCheck,
    MetricGrid,
};
pub use rg::{conv_cumulants, measure_of_t, RGIterate};
pub use scalar::QSqrt2;
pub use transform::{AxisSign, CauchyTransform, RTransform};

pub type Measure = measure::MeasureSpec<f64>;
pub type Transform = transform::TransformHandle<f64>;
pub type Density = measure::GridDensity<f64>;
pub type Report = metric::DistanceReport<f64>;

/// Iterates carrying exact cumulants in `Q(sqrt 2)`.
pub type ExactIterate = rg::RGIterate<f64, QSqrt2>;
/// Iterates carrying floating cumulants.
pub type Iterate = rg::RGIterate<f64, f64>;

pub type ExactMoments = nc::MomentSequence<BigRational>;
pub type ExactCumulants = nc::CumulantSequence<BigRational>;
pub type Moments = nc::MomentSequence<f64>;
pub type Cumulants = nc::CumulantSequence<f64>;
