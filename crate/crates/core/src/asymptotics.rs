//! Closed-form expansion coefficients for the resonance branches.
//!
//! Every nonzero block eigenvalue `lambda` spawns a pair of branches
//! `omega(delta) = k0 v +- v sqrt(lambda delta / r) + c2 delta + ...` whose
//! second-order coefficient is a Rayleigh-type quotient of the block
//! eigenvector against a boundary matrix built from cotangents of the two
//! segments flanking the block. At a chain end the flanking cotangent is
//! replaced by `-i`, which is where the imaginary part of a shift comes
//! from. The remaining branches move linearly in the contrast.

use num_complex::Complex64;

use crate::capacitance::{global_coefficients_direct, BlockSpectrum, CapacitanceSystem};
use crate::chain::{BlockPartition, MaterialParams, StructuralVector, Wavenumber};
use crate::error::{Error, Result};
use crate::rational::{cot_pi, sin_pi, to_f64, Rat};

/// Cotangent of `t_j * k0` for the segment flanking a block, with the
/// convention that positions 0 and 2N (outside the chain) give `-i`.
fn flank_cot(t: &StructuralVector, k0: &Wavenumber, j: usize) -> Result<Complex64> {
    if j == 0 || j == t.len() + 1 {
        return Ok(Complex64::new(0.0, -1.0));
    }
    let arg = t.get(j)? * k0.q();
    if arg.is_integer() {
        // A resonant neighbor would contradict block maximality.
        return Err(Error::Domain(format!(
            "segment {j} flanking a block is itself resonant"
        )));
    }
    Ok(Complex64::new(cot_pi(&arg)?, 0.0))
}

/// Per-branch expansion data for one block eigenvalue occurrence.
#[derive(Debug, Clone)]
pub struct ExpansionCoefficients {
    pub block_index: usize,
    pub lambda: f64,
    /// `sqrt(lambda / r)`: the positive square-root coefficient in k-space.
    pub kc1: f64,
    /// Second-order k-space coefficient.
    pub kc2: Complex64,
    /// Square-root coefficient in the `nu` variable: `sqrt(lambda / 2)`.
    pub nu_c1: f64,
    /// Linear `nu`-coefficient: quarter of the Rayleigh quotient.
    pub nu_c2: Complex64,
}

impl ExpansionCoefficients {
    /// Frequency-space coefficients as usually reported: `(v*kc1, v*kc2)`.
    pub fn omega_coeffs(&self, v: f64) -> (f64, Complex64) {
        (v * self.kc1, self.kc2 * v)
    }

    /// Predicted wavenumber at contrast `delta` for the given sign.
    pub fn k_predicted(&self, k0: f64, delta: Complex64, sign: f64) -> Complex64 {
        k0 + sign * self.kc1 * delta.sqrt() + self.kc2 * delta
    }

    /// Predicted wavenumber through the `nu`-form expansion.
    pub fn k_predicted_nu(&self, k0: f64, nu: Complex64, sign: f64) -> Complex64 {
        k0 + sign * self.nu_c1 * nu.sqrt() + self.nu_c2 * nu
    }
}

/// Coefficients for every nonzero eigenvalue occurrence, ordered by block
/// then ascending eigenvalue. The count equals the number of square-root
/// branch pairs.
pub fn expansion_coefficients(
    t: &StructuralVector,
    k0: &Wavenumber,
    sys: &CapacitanceSystem,
    spectrum: &BlockSpectrum,
    params: &MaterialParams,
) -> Result<Vec<ExpansionCoefficients>> {
    let r = params.r_f64();
    let mut out = Vec::new();
    for (bi, (blk, pairs)) in sys.blocks.iter().zip(&spectrum.per_block).enumerate() {
        let a = blk.block.a;
        let b = blk.block.b;
        let cot_left = flank_cot(t, k0, a - 1)?;
        let cot_right = flank_cot(t, k0, b + 1)?;
        let ta = to_f64(t.get(a)?);
        let tb = to_f64(t.get(b)?);
        for pair in pairs.iter().filter(|p| !p.is_zero) {
            let lambda = pair.lambda;
            let chi = |j: usize, tj: f64| -> f64 {
                if j % 2 == 1 {
                    1.0
                } else {
                    1.0 / (lambda * tj * tj)
                }
            };
            let alpha = &pair.alpha;
            let l = alpha.len();
            // Boundary quadratic form: only the first and last eigenvector
            // entries see the flanking cotangents; for a one-dimensional
            // block both contributions land on the same entry.
            let quad_b: Complex64 = if l == 1 {
                (cot_left * chi(a, ta) + cot_right * chi(b, tb)) * alpha[0] * alpha[0]
            } else {
                cot_left * chi(a, ta) * alpha[0] * alpha[0]
                    + cot_right * chi(b, tb) * alpha[l - 1] * alpha[l - 1]
            };
            let quad_l: f64 = alpha
                .iter()
                .zip(&blk.l_diag)
                .map(|(x, li)| x * x * to_f64(li))
                .sum();
            let rayleigh = quad_b / quad_l;
            out.push(ExpansionCoefficients {
                block_index: bi,
                lambda,
                kc1: (lambda / r).sqrt(),
                kc2: rayleigh / (2.0 * r),
                nu_c1: (lambda / 2.0).sqrt(),
                nu_c2: rayleigh / 4.0,
            });
        }
    }
    Ok(out)
}

/// The piecewise-linear lower boundary of feasible (z-power, nu-power)
/// pairs: slope -2 up to `m`, then slope -1 up to `n - m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewtonBoundary {
    pub n: usize,
    pub m: usize,
    /// `S(l)` for `l = 0..=n-m`.
    pub s: Vec<usize>,
}

pub fn newton_boundary(partition: &BlockPartition) -> NewtonBoundary {
    let n = partition.n();
    let m = partition.m();
    let s = (0..=n - m)
        .map(|l| if l <= m { n - 2 * l } else { n - m - l })
        .collect();
    NewtonBoundary { n, m, s }
}

/// Order contribution of a single block of size `n_j` carrying `l` powers;
/// `None` where infeasible.
pub fn block_order(n_j: usize, l: usize) -> Option<usize> {
    if l <= n_j / 2 {
        Some(n_j - 2 * l)
    } else if n_j % 2 == 1 && l == (n_j + 1) / 2 {
        Some((n_j + 1) / 2 - l) // = 0
    } else {
        None
    }
}

/// Brute-force minimization over all admissible distributions of `l` powers
/// across the blocks; the oracle for [`newton_boundary`].
pub fn newton_boundary_exhaustive(block_sizes: &[usize]) -> Vec<Option<usize>> {
    let n: usize = block_sizes.iter().sum();
    let m: usize = block_sizes.iter().map(|s| s / 2).sum();
    let cap = n - m;
    let mut dp: Vec<Option<usize>> = vec![None; cap + 1];
    dp[0] = Some(0);
    for &nj in block_sizes {
        let mut next: Vec<Option<usize>> = vec![None; cap + 1];
        for (l, d) in dp.iter().enumerate() {
            let Some(d) = d else { continue };
            let mut lj = 0;
            while let Some(f) = block_order(nj, lj) {
                if l + lj <= cap {
                    let cand = d + f;
                    let slot = &mut next[l + lj];
                    *slot = Some(slot.map_or(cand, |x: usize| x.min(cand)));
                }
                lj += 1;
            }
        }
        dp = next;
    }
    dp
}

/// Expansion constants of the contrast-polynomial coefficients near `k0`.
#[derive(Debug, Clone)]
pub struct ExpansionConstants {
    /// Product over non-resonant sines and resonant segment lengths, with
    /// the multiplicity sign.
    pub c1: f64,
    /// Sum of `t_j * cot(t_j k0)` over non-resonant segments.
    pub c2: f64,
    pub n: usize,
    pub m: usize,
    /// Twice the number of resonators.
    pub two_n: usize,
    /// Leading constants of the first `m + 1` polynomial coefficients:
    /// entry `l` multiplies `z^(n-2l)`.
    pub gl_leading: Vec<Complex64>,
    /// Leading constant of coefficient `m + 1` (multiplies `z^(n-2m-1)`),
    /// present when `n - 2m > 0`.
    pub gm1_leading: Option<Complex64>,
    /// First-order motion of the single linear branch (`z ~ coeff * nu`),
    /// present when `n - 2m == 1`.
    pub linear_branch_coeff: Option<Complex64>,
}

fn minus_two_i_pow(e: i32) -> Complex64 {
    Complex64::new(0.0, -2.0).powi(e)
}

pub fn expansion_constants(
    t: &StructuralVector,
    k0: &Wavenumber,
    partition: &BlockPartition,
    sys: &CapacitanceSystem,
) -> Result<ExpansionConstants> {
    let n = partition.n();
    let m = partition.m();
    let two_n = t.len() + 1; // 2N
    let sign = partition.sign_sum_multiplicities();

    let mut sin_prod = 1.0;
    let mut cot_sum = 0.0;
    let mut t_prod = 1.0;
    for j in 1..=t.len() {
        let tj = t.get(j)?;
        if partition.contains(j) {
            t_prod *= to_f64(tj);
        } else {
            let arg: Rat = tj * k0.q();
            sin_prod *= sin_pi(&arg);
            cot_sum += to_f64(tj) * cot_pi(&arg)?;
        }
    }
    let c1 = sign * sin_prod * t_prod;
    let c2 = cot_sum;

    let ciq = global_coefficients_direct(&sys.coupling, m);
    let gl_leading: Vec<Complex64> = (0..=m)
        .map(|l| {
            let e = (two_n as i32) - 1 - 2 * l as i32;
            minus_two_i_pow(e) * c1 * 2f64.powi(l as i32) * to_f64(&ciq[l])
        })
        .collect();

    let gm1_leading = if n > 2 * m {
        let mut odd_prod = 1.0;
        let mut odd_sum = Complex64::new(0.0, 0.0);
        for blk in &partition.blocks {
            if blk.len() % 2 == 0 {
                continue;
            }
            let alternating: f64 = (blk.a..=blk.b)
                .step_by(2)
                .map(|j| to_f64(t.get(j).unwrap()))
                .sum();
            odd_prod *= alternating;
            let cl = flank_cot(t, k0, blk.a - 1)?;
            let cr = flank_cot(t, k0, blk.b + 1)?;
            odd_sum += (cl + cr) / alternating;
        }
        let e = (two_n as i32) - 2 * (m as i32) - 3;
        Some(
            odd_sum
                * sign
                * sin_prod
                * odd_prod
                * 2f64.powi(m as i32 + 1)
                * minus_two_i_pow(e),
        )
    } else {
        None
    };

    let linear_branch_coeff = match (&gm1_leading, n == 2 * m + 1) {
        (Some(gm1), true) => Some(-gm1 / gl_leading[m]),
        _ => None,
    };

    Ok(ExpansionConstants { c1, c2, n, m, two_n, gl_leading, gm1_leading, linear_branch_coeff })
}
