//! Chain geometry and the resonant index structure.
//!
//! A chain of `N` resonators is reduced to the structural vector
//! `t = (r*l_1, s_1, r*l_2, ..., s_{N-1}, r*l_N)` of `2N-1` optical segment
//! lengths (odd entries: resonators scaled by the speed ratio, even entries:
//! spacings). For a wavenumber `k0 = q*pi`, the segments with `t_j * q` an
//! integer are "resonant"; their maximal runs form the blocks that carry the
//! spectral structure downstream.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::{to_f64, Rat};

/// Material constants of the two-phase medium.
///
/// `delta` is the density contrast (small parameter, extended to complex
/// values), `r` the ratio of outer to inner wave speed, `v` the outer speed.
#[derive(Debug, Clone)]
pub struct MaterialParams {
    pub delta: num_complex::Complex64,
    pub r: Rat,
    pub v: f64,
}

impl MaterialParams {
    pub fn new(delta: num_complex::Complex64, r: Rat, v: f64) -> Result<Self> {
        if !r.is_positive() {
            return Err(Error::BadGeometry("speed ratio r must be positive".into()));
        }
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::BadGeometry("background speed v must be positive".into()));
        }
        if !delta.re.is_finite() || !delta.im.is_finite() {
            return Err(Error::BadGeometry("contrast delta must be finite".into()));
        }
        Ok(Self { delta, r, v })
    }

    pub fn r_f64(&self) -> f64 {
        to_f64(&self.r)
    }
}

/// Resonator lengths and spacings, all exact rationals.
#[derive(Debug, Clone)]
pub struct ResonatorChain {
    pub lengths: Vec<Rat>,
    pub spacings: Vec<Rat>,
    pub params: MaterialParams,
    /// Position of the leftmost boundary `x_1` (defaults to zero).
    pub origin: f64,
}

impl ResonatorChain {
    pub fn new(
        lengths: Vec<Rat>,
        spacings: Vec<Rat>,
        params: MaterialParams,
        origin: f64,
    ) -> Result<Self> {
        if lengths.is_empty() {
            return Err(Error::BadGeometry("need at least one resonator".into()));
        }
        if spacings.len() + 1 != lengths.len() {
            return Err(Error::BadGeometry(format!(
                "{} resonators require {} spacings, got {}",
                lengths.len(),
                lengths.len() - 1,
                spacings.len()
            )));
        }
        if lengths.iter().any(|l| !l.is_positive()) {
            return Err(Error::BadGeometry("all lengths must be positive".into()));
        }
        if spacings.iter().any(|s| !s.is_positive()) {
            return Err(Error::BadGeometry("all spacings must be positive".into()));
        }
        Ok(Self { lengths, spacings, params, origin })
    }

    /// Reconstructs a chain from a structural vector (odd entries are
    /// `r * length`, even entries are spacings).
    pub fn from_structural(t: &StructuralVector, params: MaterialParams, origin: f64) -> Result<Self> {
        let lengths = (0..t.len())
            .step_by(2)
            .map(|i| &t.entries[i] / &params.r)
            .collect();
        let spacings = (1..t.len()).step_by(2).map(|i| t.entries[i].clone()).collect();
        Self::new(lengths, spacings, params, origin)
    }

    pub fn resonator_count(&self) -> usize {
        self.lengths.len()
    }

    /// The `2N` boundary points `x_1 < x_2 < ... < x_{2N}`.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut xs = Vec::with_capacity(2 * self.lengths.len());
        let mut x = self.origin;
        xs.push(x);
        for i in 0..self.lengths.len() {
            x += to_f64(&self.lengths[i]);
            xs.push(x);
            if i + 1 < self.lengths.len() {
                x += to_f64(&self.spacings[i]);
                xs.push(x);
            }
        }
        xs
    }
}

/// The interleaved vector of `2N-1` optical segment lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralVector {
    entries: Vec<Rat>,
}

impl StructuralVector {
    pub fn new(entries: Vec<Rat>) -> Result<Self> {
        if entries.is_empty() || entries.len() % 2 == 0 {
            return Err(Error::BadGeometry(format!(
                "structural vector needs an odd number of entries, got {}",
                entries.len()
            )));
        }
        if entries.iter().any(|t| !t.is_positive()) {
            return Err(Error::BadGeometry("structural entries must be positive".into()));
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn resonator_count(&self) -> usize {
        (self.entries.len() + 1) / 2
    }

    /// 1-based access matching the usual segment numbering.
    pub fn get(&self, j: usize) -> Result<&Rat> {
        if j == 0 || j > self.entries.len() {
            return Err(Error::IndexOutOfRange { index: j, max: self.entries.len() });
        }
        Ok(&self.entries[j - 1])
    }

    pub fn iter(&self) -> impl Iterator<Item = &Rat> {
        self.entries.iter()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.entries.iter().map(to_f64).collect()
    }
}

/// `t = (r*l_1, s_1, r*l_2, s_2, ..., s_{N-1}, r*l_N)`.
pub fn build_structural_vector(chain: &ResonatorChain) -> StructuralVector {
    let n = chain.lengths.len();
    let mut entries = Vec::with_capacity(2 * n - 1);
    for i in 0..n {
        entries.push(&chain.params.r * &chain.lengths[i]);
        if i + 1 < n {
            entries.push(chain.spacings[i].clone());
        }
    }
    StructuralVector { entries }
}

/// A wavenumber held as an exact rational multiple of `pi`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Wavenumber {
    q: Rat,
}

impl Wavenumber {
    pub fn from_q(q: Rat) -> Self {
        Self { q }
    }

    /// The exact ratio `k0 / pi`.
    pub fn q(&self) -> &Rat {
        &self.q
    }

    pub fn value(&self) -> f64 {
        to_f64(&self.q) * std::f64::consts::PI
    }

    pub fn is_zero(&self) -> bool {
        self.q.is_zero()
    }
}

/// One maximal run of consecutive resonant segments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Block {
    /// First segment index (1-based, inclusive).
    pub a: usize,
    /// Last segment index (1-based, inclusive).
    pub b: usize,
    /// Parity of `a` (1 if odd).
    pub xi: u8,
    /// Parity of `b` (1 if odd).
    pub eta: u8,
    /// Integer multiplicities `m_j` with `t_j * q = m_j`, for `j = a..=b`.
    pub multiplicities: Vec<i64>,
}

impl Block {
    pub fn len(&self) -> usize {
        self.b - self.a + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of even segment indices in the block.
    pub fn even_count(&self) -> usize {
        self.b / 2 - (self.a - 1) / 2
    }

    /// Number of odd segment indices in the block.
    pub fn odd_count(&self) -> usize {
        self.b.div_ceil(2) - (self.a - 1).div_ceil(2)
    }

    /// First row/column of this block inside the full coupling matrix.
    pub fn sta(&self) -> usize {
        self.a / 2 + 1
    }

    /// Last row/column of this block inside the full coupling matrix.
    pub fn end(&self) -> usize {
        self.b.div_ceil(2)
    }
}

/// The sorted resonant index set and its maximal-run decomposition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    pub indices: Vec<usize>,
    pub blocks: Vec<Block>,
}

impl BlockPartition {
    /// Total number of resonant segments.
    pub fn n(&self) -> usize {
        self.indices.len()
    }

    /// Number of nonzero block eigenvalues: the sum of `floor(n_j / 2)`.
    pub fn m(&self) -> usize {
        self.blocks.iter().map(|b| b.len() / 2).sum()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }

    /// Multiplicity `m_j` for a resonant segment, if any.
    pub fn multiplicity(&self, j: usize) -> Option<i64> {
        for b in &self.blocks {
            if (b.a..=b.b).contains(&j) {
                return Some(b.multiplicities[j - b.a]);
            }
        }
        None
    }

    /// Parity of the sum of all multiplicities: `+1` or `-1`.
    pub fn sign_sum_multiplicities(&self) -> f64 {
        let s: i64 = self
            .blocks
            .iter()
            .flat_map(|b| b.multiplicities.iter())
            .sum();
        if s.rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

fn blocks_from_indices(resonant: &[(usize, i64)]) -> Vec<Block> {
    let mut blocks = Vec::new();
    let mut run: Vec<(usize, i64)> = Vec::new();
    for &(j, m) in resonant {
        if let Some(&(last, _)) = run.last() {
            if j != last + 1 {
                blocks.push(close_run(&run));
                run.clear();
            }
        }
        run.push((j, m));
    }
    if !run.is_empty() {
        blocks.push(close_run(&run));
    }
    blocks
}

fn close_run(run: &[(usize, i64)]) -> Block {
    let a = run[0].0;
    let b = run[run.len() - 1].0;
    Block {
        a,
        b,
        xi: (a % 2) as u8,
        eta: (b % 2) as u8,
        multiplicities: run.iter().map(|&(_, m)| m).collect(),
    }
}

/// Exact resonance test: segment `j` is resonant iff `t_j * q` is an integer.
pub fn resonant_index_set(t: &StructuralVector, k0: &Wavenumber) -> BlockPartition {
    let mut resonant = Vec::new();
    for (i, tj) in t.entries.iter().enumerate() {
        let prod = tj * k0.q();
        if prod.is_integer() {
            let m = prod
                .to_integer()
                .to_i64()
                .expect("multiplicity exceeds i64");
            resonant.push((i + 1, m));
        }
    }
    let blocks = blocks_from_indices(&resonant);
    BlockPartition { indices: resonant.into_iter().map(|(j, _)| j).collect(), blocks }
}

/// Float-tolerance fallback for irrational geometry. A segment is treated as
/// resonant when `t_j * q` is within `tol` of an integer. Off by default;
/// exact mode is authoritative whenever the inputs are rational.
pub fn resonant_index_set_float(t: &[f64], q: f64, tol: f64) -> BlockPartition {
    let mut resonant = Vec::new();
    for (i, &tj) in t.iter().enumerate() {
        let prod = tj * q;
        let m = prod.round();
        if (prod - m).abs() <= tol {
            resonant.push((i + 1, m as i64));
        }
    }
    let blocks = blocks_from_indices(&resonant);
    BlockPartition { indices: resonant.into_iter().map(|(j, _)| j).collect(), blocks }
}

/// The masked segment parameter: `t_j` when the segment is resonant at `k0`,
/// otherwise `None` (standing for the infinite value whose reciprocal is 0).
pub fn t_of_k(t: &StructuralVector, k0: &Wavenumber, j: usize) -> Result<Option<Rat>> {
    let tj = t.get(j)?;
    if (tj * k0.q()).is_integer() {
        Ok(Some(tj.clone()))
    } else {
        Ok(None)
    }
}

/// All wavenumbers `q*pi` in `(0, kmax_over_pi * pi]` at which at least one
/// segment is resonant, deduplicated exactly and sorted ascending.
pub fn enumerate_resonant_wavenumbers(
    t: &StructuralVector,
    kmax_over_pi: &Rat,
) -> Vec<Wavenumber> {
    let mut qs = std::collections::BTreeSet::new();
    for tj in &t.entries {
        // q = m / t_j <= kmax  =>  m <= kmax * t_j
        let m_max = (kmax_over_pi * tj).floor().to_integer();
        let mut m = BigInt::one();
        while m <= m_max {
            qs.insert(Rat::new(m.clone(), BigInt::one()) / tj);
            m += 1;
        }
    }
    qs.into_iter().map(Wavenumber::from_q).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{parse_rational, rat_from_i64};
    use num_complex::Complex64;

    fn rats(xs: &[&str]) -> Vec<Rat> {
        xs.iter().map(|s| parse_rational(s).unwrap()).collect()
    }

    fn params(r: &str) -> MaterialParams {
        MaterialParams::new(Complex64::new(1e-3, 0.0), parse_rational(r).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn structural_vector_interleaves_lengths_and_spacings() {
        // Four resonators of lengths 1.25, 1, 1, 0.75 and unit spacings.
        let chain = ResonatorChain::new(
            rats(&["1.25", "1", "1", "0.75"]),
            rats(&["1", "1", "1"]),
            params("1"),
            0.0,
        )
        .unwrap();
        let t = build_structural_vector(&chain);
        assert_eq!(
            t.entries,
            rats(&["1.25", "1", "1", "1", "1", "1", "0.75"])
        );
    }

    #[test]
    fn single_resonator_with_fractional_speed_ratio() {
        let chain =
            ResonatorChain::new(rats(&["2"]), vec![], params("1/2"), 0.0).unwrap();
        let t = build_structural_vector(&chain);
        assert_eq!(t.entries, rats(&["1"]));
    }

    #[test]
    fn six_resonator_interleaving() {
        let chain = ResonatorChain::new(
            rats(&["1", "1", "1.25", "2", "1", "0.5"]),
            rats(&["2", "0.75", "1", "2", "1.5"]),
            params("1"),
            0.0,
        )
        .unwrap();
        let t = build_structural_vector(&chain);
        assert_eq!(
            t.entries,
            rats(&["1", "2", "1", "0.75", "1.25", "1", "2", "2", "1", "1.5", "0.5"])
        );
    }

    #[test]
    fn partition_of_fifteen_segment_example() {
        let t = StructuralVector::new(rats(&[
            "1", "2", "1.5", "2.5", "2", "2", "3", "1", "0.5", "2", "1", "1.5", "1", "1", "1",
        ]))
        .unwrap();
        let k0 = Wavenumber::from_q(Rat::one());
        let p = resonant_index_set(&t, &k0);
        assert_eq!(p.indices, vec![1, 2, 5, 6, 7, 8, 10, 11, 13, 14, 15]);
        assert_eq!(p.n(), 11);
        let spans: Vec<(usize, usize)> = p.blocks.iter().map(|b| (b.a, b.b)).collect();
        assert_eq!(spans, vec![(1, 2), (5, 8), (10, 11), (13, 15)]);
        let sizes: Vec<usize> = p.blocks.iter().map(Block::len).collect();
        assert_eq!(sizes, vec![2, 4, 2, 3]);
        assert_eq!(p.m(), 5);
    }

    #[test]
    fn empty_resonant_set_is_valid() {
        let t = StructuralVector::new(rats(&["1/3", "1/7", "1/11"])).unwrap();
        let k0 = Wavenumber::from_q(rat_from_i64(1, 2));
        let p = resonant_index_set(&t, &k0);
        assert!(p.indices.is_empty());
        assert!(p.blocks.is_empty());
        assert_eq!(p.n(), 0);
    }

    #[test]
    fn partition_of_six_resonator_chain() {
        let t = StructuralVector::new(rats(&[
            "1", "2", "1", "0.75", "1.25", "1", "2", "2", "1", "1.5", "0.5",
        ]))
        .unwrap();
        let p = resonant_index_set(&t, &Wavenumber::from_q(Rat::one()));
        assert_eq!(p.indices, vec![1, 2, 3, 6, 7, 8, 9]);
        let spans: Vec<(usize, usize)> = p.blocks.iter().map(|b| (b.a, b.b)).collect();
        assert_eq!(spans, vec![(1, 3), (6, 9)]);
        assert_eq!(p.blocks[0].multiplicities, vec![1, 2, 1]);
        assert_eq!(p.blocks[1].multiplicities, vec![1, 2, 2, 1]);
    }

    #[test]
    fn masked_parameter_values() {
        let t = StructuralVector::new(rats(&["2", "1.5", "0.5"])).unwrap();
        let pi = Wavenumber::from_q(Rat::one());
        assert_eq!(t_of_k(&t, &pi, 1).unwrap(), Some(rat_from_i64(2, 1)));
        assert_eq!(t_of_k(&t, &pi, 2).unwrap(), None);
        let two_pi = Wavenumber::from_q(rat_from_i64(2, 1));
        assert_eq!(t_of_k(&t, &two_pi, 3).unwrap(), Some(rat_from_i64(1, 2)));
        assert!(t_of_k(&t, &pi, 4).is_err());
        assert!(t_of_k(&t, &pi, 0).is_err());
    }

    #[test]
    fn wavenumber_enumeration() {
        let t = StructuralVector::new(rats(&["1"])).unwrap();
        let ks = enumerate_resonant_wavenumbers(&t, &parse_rational("3.5").unwrap());
        let qs: Vec<Rat> = ks.iter().map(|k| k.q().clone()).collect();
        assert_eq!(qs, rats(&["1", "2", "3"]));

        let t = StructuralVector::new(rats(&["1", "2", "1"])).unwrap();
        let ks = enumerate_resonant_wavenumbers(&t, &parse_rational("1.1").unwrap());
        let qs: Vec<Rat> = ks.iter().map(|k| k.q().clone()).collect();
        assert_eq!(qs, rats(&["0.5", "1"]));
    }

    #[test]
    fn enumeration_covers_six_resonator_chain_up_to_pi() {
        let t = StructuralVector::new(rats(&[
            "1", "2", "1", "0.75", "1.25", "1", "2", "2", "1", "1.5", "0.5",
        ]))
        .unwrap();
        let ks = enumerate_resonant_wavenumbers(&t, &Rat::one());
        let qs: Vec<Rat> = ks.iter().map(|k| k.q().clone()).collect();
        // Brute union of m/t_j for every segment, m small.
        let mut expect = std::collections::BTreeSet::new();
        for tj in t.iter() {
            for m in 1..=4 {
                let q = rat_from_i64(m, 1) / tj;
                if q <= Rat::one() {
                    expect.insert(q);
                }
            }
        }
        assert_eq!(qs, expect.into_iter().collect::<Vec<_>>());
        assert!(qs.contains(&Rat::one()));
    }

    #[test]
    fn scaling_covariance_of_partition() {
        let t = StructuralVector::new(rats(&["1", "2", "1.5", "0.5", "3"])).unwrap();
        let q = rat_from_i64(2, 1);
        let p1 = resonant_index_set(&t, &Wavenumber::from_q(q.clone()));
        let scaled: Vec<Rat> = t.iter().map(|x| x * rat_from_i64(3, 1)).collect();
        let t3 = StructuralVector::new(scaled).unwrap();
        let p2 = resonant_index_set(&t3, &Wavenumber::from_q(q / rat_from_i64(3, 1)));
        assert_eq!(p1, p2);
    }

    #[test]
    fn float_fallback_matches_exact_on_rational_input() {
        let t = StructuralVector::new(rats(&[
            "1", "2", "1.5", "2.5", "2", "2", "3", "1", "0.5", "2", "1", "1.5", "1", "1", "1",
        ]))
        .unwrap();
        let exact = resonant_index_set(&t, &Wavenumber::from_q(Rat::one()));
        let float = resonant_index_set_float(&t.as_f64(), 1.0, 1e-9);
        assert_eq!(exact, float);
        // An irrational-ish perturbation below tolerance flips nothing...
        let mut tf = t.as_f64();
        tf[0] += 1e-12;
        assert_eq!(resonant_index_set_float(&tf, 1.0, 1e-9), exact);
        // ...but one above tolerance drops the segment.
        tf[0] += 1e-6;
        let p = resonant_index_set_float(&tf, 1.0, 1e-9);
        assert!(!p.contains(1));
    }

    #[test]
    fn block_counts_are_consistent() {
        let t = StructuralVector::new(rats(&[
            "1", "2", "1.5", "2.5", "2", "2", "3", "1", "0.5", "2", "1", "1.5", "1", "1", "1",
        ]))
        .unwrap();
        let p = resonant_index_set(&t, &Wavenumber::from_q(Rat::one()));
        let total: usize = p.blocks.iter().map(Block::len).sum();
        assert_eq!(total, p.n());
        for w in p.blocks.windows(2) {
            assert!(w[1].a >= w[0].b + 2, "blocks must be maximal");
        }
        for b in &p.blocks {
            assert_eq!(b.even_count() + b.odd_count(), b.len());
        }
    }
}
