//! JSON wire format for measures.
//!
//! ```json
//! {"type": "atomic", "atoms": [{"position": -1, "weight": "1/2"}, {"position": 1, "weight": 0.5}]}
//! {"type": "semicircle", "sigma": 1.0}
//! {"type": "arcsine", "halfwidth": 2.0}
//! {"type": "bernoulli_std", "p": 0.25}
//! {"type": "grid", "xs": [...], "fs": [...]}
//! ```
//!
//! Atom coordinates may be JSON numbers or `"p/q"` strings. Both are read as
//! exact rationals (a number is taken at its decimal value), so atomic laws
//! keep an exact form alongside the floating one.

use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{Atom, ExactAtoms, MeasureSpec};
use crate::scalar::{parse_rational, rational_string, Real};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExactNumber {
    Number(serde_json::Number),
    Text(String),
}

impl ExactNumber {
    pub fn to_rational(&self) -> Result<BigRational> {
        match self {
            ExactNumber::Number(n) => parse_rational(&n.to_string()),
            ExactNumber::Text(s) => parse_rational(s),
        }
    }

    pub fn to_f64(&self) -> Result<f64> {
        match self {
            ExactNumber::Number(n) => n.as_f64().ok_or_else(|| Error::Parse(format!("bad number {n}"))),
            ExactNumber::Text(s) => Ok(parse_rational(s)?.to_f64().unwrap_or(f64::NAN)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomJson {
    pub position: ExactNumber,
    pub weight: ExactNumber,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureJson {
    Atomic {
        atoms: Vec<AtomJson>,
    },
    Semicircle {
        #[serde(default = "one")]
        sigma: f64,
    },
    Arcsine {
        halfwidth: f64,
    },
    BernoulliStd {
        p: f64,
    },
    Grid {
        xs: Vec<f64>,
        fs: Vec<f64>,
    },
}

impl MeasureJson {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("measure schema: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("measure serializes")
    }

    /// The validated floating-point law.
    pub fn to_measure<T: Real>(&self) -> Result<MeasureSpec<T>> {
        let t = |x: f64| T::lit(x);
        match self {
            MeasureJson::Atomic { atoms } => MeasureSpec::atomic(
                atoms
                    .iter()
                    .map(|a| Ok(Atom::new(t(a.position.to_f64()?), t(a.weight.to_f64()?))))
                    .collect::<Result<Vec<_>>>()?,
            ),
            MeasureJson::Semicircle { sigma } => MeasureSpec::semicircle(t(*sigma)),
            MeasureJson::Arcsine { halfwidth } => MeasureSpec::arcsine(t(*halfwidth)),
            MeasureJson::BernoulliStd { p } => MeasureSpec::bernoulli_std(t(*p)),
            MeasureJson::Grid { xs, fs } => {
                MeasureSpec::grid(xs.iter().map(|&x| t(x)).collect(), fs.iter().map(|&f| t(f)).collect())
            }
        }
    }

    /// Exact atoms for atomic specs.
    pub fn exact_atoms(&self) -> Option<Result<ExactAtoms>> {
        match self {
            MeasureJson::Atomic { atoms } => Some(
                atoms
                    .iter()
                    .map(|a| Ok((a.position.to_rational()?, a.weight.to_rational()?)))
                    .collect::<Result<Vec<_>>>()
                    .and_then(ExactAtoms::new),
            ),
            _ => None,
        }
    }

    pub fn from_measure(mu: &MeasureSpec<f64>) -> Self {
        let num = |x: f64| ExactNumber::Number(serde_json::Number::from_f64(x).expect("finite"));
        match mu {
            MeasureSpec::Atomic(atoms) => MeasureJson::Atomic {
                atoms: atoms.iter().map(|a| AtomJson { position: num(a.position), weight: num(a.weight) }).collect(),
            },
            MeasureSpec::Semicircle { sigma } => MeasureJson::Semicircle { sigma: *sigma },
            MeasureSpec::Arcsine { halfwidth } => MeasureJson::Arcsine { halfwidth: *halfwidth },
            MeasureSpec::BernoulliStd { p } => MeasureJson::BernoulliStd { p: *p },
            MeasureSpec::Grid(g) => MeasureJson::Grid { xs: g.xs.clone(), fs: g.fs.clone() },
        }
    }

    pub fn from_exact(atoms: &ExactAtoms) -> Self {
        MeasureJson::Atomic {
            atoms: atoms
                .atoms()
                .iter()
                .map(|(x, w)| AtomJson {
                    position: ExactNumber::Text(rational_string(x)),
                    weight: ExactNumber::Text(rational_string(w)),
                })
                .collect(),
        }
    }
}
