//! Non-crossing partitions and the free moment–cumulant relation.
//!
//! Moments and free cumulants are related by
//! `m_k = sum over non-crossing partitions pi of {1..k} of prod_{B in pi} kappa_|B|`.
//! The direct sum is available through [`moments_by_enumeration`]; the
//! default conversions use the equivalent recursion over the block that
//! contains `1`, which is polynomial in the order.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{parse_rational, rational_string, QSqrt2, Ring};

/// Largest `k` accepted by [`enumerate_nc`]; `|NC(14)| = 2_674_440`.
pub const MAX_ENUMERATION: usize = 14;

/// A set partition of `{1..k}` with sorted blocks ordered by their minimum.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SetPartition {
    blocks: Vec<Vec<usize>>,
    size: usize,
}

impl SetPartition {
    /// Builds a partition, checking that the blocks are nonempty, pairwise
    /// disjoint and cover `{1..k}` for `k` the total number of elements.
    pub fn new(mut blocks: Vec<Vec<usize>>) -> Result<Self> {
        let size: usize = blocks.iter().map(Vec::len).sum();
        let mut seen = BTreeSet::new();
        for block in &mut blocks {
            if block.is_empty() {
                return Err(Error::Domain("empty block in set partition".into()));
            }
            block.sort_unstable();
            for &e in block.iter() {
                if e == 0 || e > size || !seen.insert(e) {
                    return Err(Error::Domain(format!(
                        "blocks do not partition {{1..{size}}} (offending element {e})"
                    )));
                }
            }
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        Ok(SetPartition { blocks, size })
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Number of elements `k` of the underlying set.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn block_sizes(&self) -> impl Iterator<Item = usize> + '_ {
        self.blocks.iter().map(Vec::len)
    }

    /// True if some `a < b < c < d` has `a, c` in one block and `b, d` in
    /// another.
    pub fn has_crossing(&self) -> bool {
        for (i, first) in self.blocks.iter().enumerate() {
            for second in &self.blocks[i + 1..] {
                if blocks_cross(first, second) {
                    return true;
                }
            }
        }
        false
    }

    pub fn is_non_crossing(&self) -> bool {
        !self.has_crossing()
    }
}

fn blocks_cross(x: &[usize], y: &[usize]) -> bool {
    // x and y cross iff some element of y lies strictly between two
    // consecutive elements of x while another element of y lies outside
    // that gap.
    for pair in x.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let inside = y.iter().any(|&e| lo < e && e < hi);
        let outside = y.iter().any(|&e| e < lo || e > hi);
        if inside && outside {
            return true;
        }
    }
    false
}

/// Catalan number `C_n` from `C_0 = 1`, `C_{n+1} = sum_i C_i C_{n-i}`.
pub fn catalan(n: usize) -> BigUint {
    let mut table: Vec<BigUint> = vec![BigUint::one()];
    for m in 0..n {
        let next = (0..=m).map(|i| &table[i] * &table[m - i]).sum();
        table.push(next);
    }
    table.swap_remove(n)
}

/// All non-crossing partitions of `{1..k}`, for `1 <= k <= 14`.
pub fn enumerate_nc(k: usize) -> Result<Vec<SetPartition>> {
    if k == 0 {
        return Err(Error::Domain("enumerate_nc requires k >= 1".into()));
    }
    if k > MAX_ENUMERATION {
        return Err(Error::SizeGuard { k, max: MAX_ENUMERATION });
    }
    // table[n] holds the non-crossing partitions of {0..n-1}. A partition of
    // {0..n-1} either has 0 as a singleton, or 0 shares its block with a
    // smallest partner b; then {1..b-1} is partitioned on its own and 0
    // joins the block of b in a partition of {b..n-1}.
    let mut table: Vec<Vec<Vec<Vec<usize>>>> = vec![vec![Vec::new()]];
    for n in 1..=k {
        let mut current = Vec::new();
        for rest in &table[n - 1] {
            let mut blocks = vec![vec![0]];
            blocks.extend(shifted(rest, 1));
            current.push(blocks);
        }
        for inner_len in 0..n - 1 {
            let b = inner_len + 1;
            for inner in &table[inner_len] {
                for tail in &table[n - 1 - inner_len] {
                    let mut tail_blocks = shifted(tail, b);
                    tail_blocks[0].insert(0, 0);
                    let mut blocks = tail_blocks;
                    blocks.extend(shifted(inner, 1));
                    blocks.sort_unstable_by_key(|blk| blk[0]);
                    current.push(blocks);
                }
            }
        }
        table.push(current);
    }
    let top = table.swap_remove(k);
    Ok(top
        .into_iter()
        .map(|blocks| SetPartition {
            blocks: blocks.into_iter().map(|b| b.into_iter().map(|e| e + 1).collect()).collect(),
            size: k,
        })
        .collect())
}

fn shifted(blocks: &[Vec<usize>], offset: usize) -> Vec<Vec<usize>> {
    blocks.iter().map(|b| b.iter().map(|e| e + offset).collect()).collect()
}

macro_rules! sequence_type {
    ($name:ident, $what:literal) => {
        #[doc = concat!("Finite sequence of ", $what, " indexed from order 1.")]
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name<S> {
            values: Vec<S>,
        }

        impl<S> $name<S> {
            pub fn new(values: Vec<S>) -> Result<Self> {
                if values.is_empty() {
                    return Err(Error::Domain(concat!($what, " sequence must have order >= 1").into()));
                }
                Ok($name { values })
            }

            /// Maximal order `K`.
            pub fn order(&self) -> usize {
                self.values.len()
            }

            /// Value at order `k`, 1-indexed.
            pub fn get(&self, k: usize) -> Option<&S> {
                k.checked_sub(1).and_then(|i| self.values.get(i))
            }

            pub fn as_slice(&self) -> &[S] {
                &self.values
            }

            pub fn into_vec(self) -> Vec<S> {
                self.values
            }

            pub fn map<U>(&self, f: impl FnMut(&S) -> U) -> $name<U> {
                $name { values: self.values.iter().map(f).collect() }
            }
        }

        impl<S: ExactRepr> $name<S> {
            /// Exact string form of every entry, as used by JSON output.
            pub fn to_exact_strings(&self) -> Vec<String> {
                self.values.iter().map(ExactRepr::exact_string).collect()
            }

            pub fn to_json(&self) -> String {
                serde_json::to_string(&self.to_exact_strings()).expect("strings serialize")
            }
        }

        impl $name<BigRational> {
            /// Parses a JSON array of `"p/q"` strings.
            pub fn from_json(text: &str) -> Result<Self> {
                let raw: Vec<String> = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
                let values = raw.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>()?;
                Self::new(values)
            }
        }
    };
}

sequence_type!(MomentSequence, "moments");
sequence_type!(CumulantSequence, "free cumulants");

/// Scalars with a canonical exact text form.
pub trait ExactRepr {
    fn exact_string(&self) -> String;
}

impl ExactRepr for BigRational {
    fn exact_string(&self) -> String {
        rational_string(self)
    }
}

impl ExactRepr for QSqrt2 {
    fn exact_string(&self) -> String {
        self.to_string()
    }
}

/// Wire form of an exact sequence, for embedding in larger JSON documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExactStrings(pub Vec<String>);

/// Moments from free cumulants via the recursion
/// `m_n = sum_{s=1}^{n} kappa_s [x^{n-s}] M(x)^s`, `M(x) = 1 + sum m_j x^j`.
pub fn moments_from_cumulants<S: Ring>(kappa: &CumulantSequence<S>) -> MomentSequence<S> {
    let order = kappa.order();
    let mut m: Vec<S> = Vec::with_capacity(order + 1);
    m.push(S::one());
    for n in 1..=order {
        let mut total = S::zero();
        let mut power = vec![S::one()];
        for s in 1..=n {
            power = truncated_product(&power, &m, n - s);
            total = total + kappa.values[s - 1].clone() * power[n - s].clone();
        }
        m.push(total);
    }
    m.remove(0);
    MomentSequence { values: m }
}

/// Free cumulants from moments, solving the recursion order by order
/// (`kappa_n` enters `m_n` once, with coefficient 1).
pub fn cumulants_from_moments<S: Ring>(moments: &MomentSequence<S>) -> CumulantSequence<S> {
    let order = moments.order();
    let mut series = Vec::with_capacity(order + 1);
    series.push(S::one());
    series.extend(moments.values.iter().cloned());

    // powers[s] = M(x)^s truncated at degree order - s
    let mut powers = vec![vec![S::one()]];
    for s in 1..order {
        let next = truncated_product(&powers[s - 1], &series, order - s);
        powers.push(next);
    }

    let mut kappa: Vec<S> = Vec::with_capacity(order);
    for n in 1..=order {
        let mut value = moments.values[n - 1].clone();
        for s in 1..n {
            value = value - kappa[s - 1].clone() * powers[s][n - s].clone();
        }
        kappa.push(value);
    }
    CumulantSequence { values: kappa }
}

/// Moments by direct summation over `NC(k)`; restricted to orders <= 14.
pub fn moments_by_enumeration<S: Ring>(kappa: &CumulantSequence<S>) -> Result<MomentSequence<S>> {
    let mut values = Vec::with_capacity(kappa.order());
    for k in 1..=kappa.order() {
        let mut total = S::zero();
        for pi in enumerate_nc(k)? {
            let term = pi.block_sizes().fold(S::one(), |acc, size| acc * kappa.values[size - 1].clone());
            total = total + term;
        }
        values.push(total);
    }
    Ok(MomentSequence { values })
}

/// Elementwise image of a sequence under a ring homomorphism.
pub fn embed<S: Clone, T: From<S>>(seq: &CumulantSequence<S>) -> CumulantSequence<T> {
    seq.map(|v| T::from(v.clone()))
}

// c_j = sum_{i <= j} a_i b_{j-i} for j <= degree.
fn truncated_product<S: Ring>(a: &[S], b: &[S], degree: usize) -> Vec<S> {
    (0..=degree)
        .map(|j| {
            let mut acc = S::zero();
            for (i, ai) in a.iter().enumerate().take(j + 1) {
                if let Some(bj) = b.get(j - i) {
                    acc = acc + ai.clone() * bj.clone();
                }
            }
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_traits::Zero;
    use proptest::prelude::*;

    fn ints(v: &[i64]) -> Vec<BigRational> {
        v.iter().map(|&x| BigRational::from_integer(BigInt::from(x))).collect()
    }

    // Oracle: every set partition via restricted growth strings, filtered by
    // an element-level crossing scan independent of `blocks_cross`.
    fn all_set_partitions(k: usize) -> Vec<Vec<Vec<usize>>> {
        fn rec(i: usize, k: usize, labels: &mut Vec<usize>, out: &mut Vec<Vec<Vec<usize>>>) {
            if i == k {
                let nblocks = labels.iter().max().map_or(0, |m| m + 1);
                let mut blocks = vec![Vec::new(); nblocks];
                for (e, &l) in labels.iter().enumerate() {
                    blocks[l].push(e + 1);
                }
                out.push(blocks);
                return;
            }
            let next = labels.iter().max().map_or(0, |m| m + 1);
            for l in 0..=next {
                labels.push(l);
                rec(i + 1, k, labels, out);
                labels.pop();
            }
        }
        let mut out = Vec::new();
        rec(0, k, &mut Vec::new(), &mut out);
        out
    }

    fn crosses_brute(blocks: &[Vec<usize>], k: usize) -> bool {
        let mut label = vec![0; k + 1];
        for (i, b) in blocks.iter().enumerate() {
            for &e in b {
                label[e] = i;
            }
        }
        for a in 1..=k {
            for b in a + 1..=k {
                for c in b + 1..=k {
                    for d in c + 1..=k {
                        if label[a] == label[c] && label[b] == label[d] && label[a] != label[b] {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }

    fn brute_nc(k: usize) -> BTreeSet<Vec<Vec<usize>>> {
        all_set_partitions(k)
            .into_iter()
            .filter(|p| !crosses_brute(p, k))
            .map(|p| SetPartition::new(p).unwrap().blocks)
            .collect()
    }

    #[test]
    fn catalan_values() {
        let expected = [1u32, 1, 2, 5, 14, 42, 132, 429, 1430, 4862, 16796];
        for (n, &c) in expected.iter().enumerate() {
            assert_eq!(catalan(n), BigUint::from(c));
        }
    }

    #[test]
    fn small_enumerations() {
        let one = enumerate_nc(1).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].blocks(), &[vec![1]]);
        assert_eq!(enumerate_nc(3).unwrap().len(), 5);
        let four = enumerate_nc(4).unwrap();
        assert_eq!(four.len(), 14);
        let crossing = SetPartition::new(vec![vec![1, 3], vec![2, 4]]).unwrap();
        assert!(crossing.has_crossing());
        assert!(!four.contains(&crossing));
    }

    #[test]
    fn enumeration_matches_brute_force() {
        for k in 1..=8 {
            let ours: BTreeSet<_> = enumerate_nc(k).unwrap().into_iter().map(|p| p.blocks).collect();
            assert_eq!(ours, brute_nc(k), "k = {k}");
        }
    }

    #[test]
    fn counts_and_non_crossing() {
        for k in 1..=10 {
            let all = enumerate_nc(k).unwrap();
            assert_eq!(BigUint::from(all.len()), catalan(k));
            assert!(all.iter().all(|p| p.is_non_crossing() && p.size() == k));
        }
    }

    #[test]
    fn enumeration_guards() {
        assert!(matches!(enumerate_nc(0), Err(Error::Domain(_))));
        assert_eq!(enumerate_nc(15).unwrap_err(), Error::SizeGuard { k: 15, max: 14 });
    }

    #[test]
    fn partition_validation() {
        assert!(SetPartition::new(vec![vec![1, 2], vec![2]]).is_err());
        assert!(SetPartition::new(vec![vec![1], vec![]]).is_err());
        assert!(SetPartition::new(vec![vec![1, 4]]).is_err());
        let p = SetPartition::new(vec![vec![3, 2], vec![1]]).unwrap();
        assert_eq!(p.blocks(), &[vec![1], vec![2, 3]]);
    }

    #[test]
    fn semicircle_moments_are_catalan() {
        let kappa = CumulantSequence::new(ints(&[0, 1, 0, 0, 0, 0])).unwrap();
        assert_eq!(moments_from_cumulants(&kappa).into_vec(), ints(&[0, 1, 0, 2, 0, 5]));
        let long = CumulantSequence::new((1..=20).map(|k| if k == 2 { 1i64 } else { 0 }).collect()).unwrap();
        let m = moments_from_cumulants(&long);
        for k in 1..=10 {
            assert_eq!(m.get(2 * k).copied(), Some(catalan(k).try_into().unwrap()));
            assert_eq!(m.get(2 * k - 1).copied(), Some(0));
        }
    }

    #[test]
    fn zero_cumulants_give_zero_moments() {
        let kappa = CumulantSequence::new(ints(&[0; 7])).unwrap();
        assert!(moments_from_cumulants(&kappa).as_slice().iter().all(Zero::is_zero));
    }

    #[test]
    fn rademacher_pair() {
        let kappa = CumulantSequence::new(ints(&[0, 1, 0, -1, 0, 2])).unwrap();
        let m = MomentSequence::new(ints(&[0, 1, 0, 1, 0, 1])).unwrap();
        assert_eq!(moments_from_cumulants(&kappa), m);
        assert_eq!(moments_by_enumeration(&kappa).unwrap(), m);
        assert_eq!(cumulants_from_moments(&m), kappa);
    }

    #[test]
    fn dilated_semicircle_cumulants() {
        let s2 = BigRational::new(BigInt::from(9), BigInt::from(4));
        let moments = MomentSequence::new(vec![
            BigRational::zero(),
            s2.clone(),
            BigRational::zero(),
            BigRational::from_integer(BigInt::from(2)) * &s2 * &s2,
            BigRational::zero(),
            BigRational::from_integer(BigInt::from(5)) * &s2 * &s2 * &s2,
        ])
        .unwrap();
        let kappa = cumulants_from_moments(&moments);
        let mut expected = vec![BigRational::zero(); 6];
        expected[1] = s2;
        assert_eq!(kappa.into_vec(), expected);
        assert_eq!(moments_from_cumulants(&cumulants_from_moments(&moments)), moments);
    }

    #[test]
    fn works_over_floats() {
        let kappa = CumulantSequence::new(vec![0.0f64, 1.0, 0.5, -0.25]).unwrap();
        let m = moments_from_cumulants(&kappa);
        // m4 = kappa4 + 2 kappa2^2 + 4 kappa1 kappa3 + ... with kappa1 = 0
        assert!((m.get(4).unwrap() - 1.75).abs() < 1e-15);
        let back = cumulants_from_moments(&m);
        for (a, b) in back.as_slice().iter().zip(kappa.as_slice()) {
            assert!((a - b).abs() < 1e-14f64);
        }
    }

    #[test]
    fn json_roundtrip() {
        let kappa = CumulantSequence::new(ints(&[0, 1, 0, -1])).unwrap();
        let text = kappa.to_json();
        assert_eq!(text, r#"["0/1","1/1","0/1","-1/1"]"#);
        assert_eq!(CumulantSequence::from_json(&text).unwrap(), kappa);
        assert!(CumulantSequence::from_json("[]").is_err());
        assert!(CumulantSequence::from_json(r#"["x"]"#).is_err());
    }

    fn rational() -> impl Strategy<Value = BigRational> {
        (-50i64..50, 1i64..20).prop_map(|(p, q)| BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn roundtrip_is_exact(values in proptest::collection::vec(rational(), 1..=12)) {
            let kappa = CumulantSequence::new(values).unwrap();
            let back = cumulants_from_moments(&moments_from_cumulants(&kappa));
            prop_assert_eq!(back, kappa);
        }

        #[test]
        fn recursion_matches_enumeration(values in proptest::collection::vec(rational(), 1..=7)) {
            let kappa = CumulantSequence::new(values).unwrap();
            prop_assert_eq!(moments_from_cumulants(&kappa), moments_by_enumeration(&kappa).unwrap());
        }
    }
}
