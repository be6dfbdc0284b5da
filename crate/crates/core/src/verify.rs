//! Randomized self-check suites.
//!
//! Each suite exercises one family of identities or oracle comparisons and
//! reports a pass/fail with its worst residual. The CLI drives all of them;
//! the integration tests reuse individual suites. Everything is seeded, so
//! a report is reproducible byte for byte.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::asymptotics::{expansion_coefficients, expansion_constants, newton_boundary_exhaustive};
use crate::capacitance::{block_spectrum, build_capacitance, CapacitanceSystem};
use crate::chain::{resonant_index_set, StructuralVector, Wavenumber};
use crate::config::{parse_chain_config, presets, ChainSetup};
use crate::eigenmode::{propagation_matrix, reconstruct_mode, ModeOptions};
use crate::error::Result;
use crate::rational::{rat_from_i64, Rat};
use crate::solver::{
    default_radius, find_all_roots, newton_refine, seed_branches, ResonanceProblem, SolverOptions,
};
use crate::transfer::{
    eta, g_matrix, l_phase, nu_poly_coefficients, p_bar, r_bar, r_mix, total_transfer, Mat2,
};

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
    pub cases: usize,
    pub max_residual: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<String>,
}

impl SuiteResult {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            passed: true,
            skipped: None,
            cases: 0,
            max_residual: 0.0,
            failures: Vec::new(),
        }
    }

    fn check(&mut self, residual: f64, tol: f64, label: impl Fn() -> String) {
        self.cases += 1;
        self.max_residual = self.max_residual.max(residual);
        if !(residual <= tol) {
            self.passed = false;
            if self.failures.len() < 8 {
                self.failures.push(format!("{} residual {residual:.3e}", label()));
            }
        }
    }

    fn fail(&mut self, msg: String) {
        self.passed = false;
        if self.failures.len() < 8 {
            self.failures.push(msg);
        }
    }

    fn skip(mut self, reason: &str) -> Self {
        self.skipped = Some(reason.to_string());
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub all_passed: bool,
    pub suites: Vec<SuiteResult>,
}

fn rand_complex(rng: &mut ChaCha8Rng, scale: f64) -> Complex64 {
    Complex64::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
}

/// Random chain with small-denominator rational segment lengths; roughly
/// half the segments resonate at `k0 = pi`.
pub fn random_rational_chain(rng: &mut ChaCha8Rng, max_resonators: usize) -> StructuralVector {
    let n = rng.gen_range(1..=max_resonators);
    let len = 2 * n - 1;
    let entries: Vec<Rat> = (0..len)
        .map(|_| {
            if rng.gen_bool(0.55) {
                rat_from_i64(rng.gen_range(1..=4), 1)
            } else {
                rat_from_i64(rng.gen_range(1..=15), rng.gen_range(2..=4))
            }
        })
        .collect();
    StructuralVector::new(entries).unwrap()
}

pub fn transfer_identity_suite(seed: u64) -> SuiteResult {
    let mut out = SuiteResult::new("transfer_identities");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Group laws on random complex arguments.
    for _ in 0..50 {
        let z1 = rand_complex(&mut rng, 1.5) + 2.5;
        let z2 = rand_complex(&mut rng, 1.5) + 2.5;
        let prod = r_mix(z1).mul(&r_mix(z2));
        out.check(
            prod.max_abs_diff(&r_mix(z1 * z2)) / prod.max_abs().max(1.0),
            1e-14,
            || format!("mix multiplicativity z1={z1} z2={z2}"),
        );
        let lsum = l_phase(z1).mul(&l_phase(z2));
        out.check(
            lsum.max_abs_diff(&l_phase(z1 + z2)) / lsum.max_abs().max(1.0),
            1e-12,
            || format!("phase additivity z1={z1} z2={z2}"),
        );
        out.check(
            r_mix(z1).mul(&r_mix(1.0 / z1)).max_abs_diff(&Mat2::identity()),
            1e-13,
            || format!("mix inverse z={z1}"),
        );
    }
    // Conjugation between the physical and polynomial forms.
    let t = [1.0, 2.0, 1.0, 0.75, 1.25, 1.0, 2.0, 2.0, 1.0, 1.5, 0.5];
    for _ in 0..50 {
        let k = Complex64::new(rng.gen_range(0.3..4.0), rng.gen_range(-0.2..0.2));
        let sigma = Complex64::new(rng.gen_range(0.02..0.4), rng.gen_range(-0.1..0.1));
        let nu = 2.0 * sigma / (1.0 + sigma);
        let m = total_transfer(&t, k, sigma).unwrap();
        let g = g_matrix(&t, k, nu);
        let res = p_bar().mul(&m).mul(&p_bar()).max_abs_diff(&g) / g.max_abs().max(1.0);
        out.check(res, 1e-11, || format!("conjugation k={k} sigma={sigma}"));
    }
    // Rank-one collapse and polynomial degree structure.
    for _ in 0..50 {
        let m = Mat2::new(
            rand_complex(&mut rng, 2.0),
            rand_complex(&mut rng, 2.0),
            rand_complex(&mut rng, 2.0),
            rand_complex(&mut rng, 2.0),
        );
        let lhs = r_bar().mul(&m).mul(&r_bar());
        let rhs = r_bar().scale(eta(&m));
        out.check(lhs.max_abs_diff(&rhs), 1e-13 * rhs.max_abs().max(1.0), || {
            "rank-one collapse".into()
        });
    }
    let k = Complex64::new(1.1, 0.05);
    let poly = nu_poly_coefficients(&t, k);
    let nu = Complex64::new(0.37, 0.0);
    let res = poly.eval(nu).max_abs_diff(&g_matrix(&t, k, nu));
    out.check(res / poly.eval(nu).max_abs().max(1.0), 1e-12, || {
        "coefficient Horner consistency".into()
    });
    out
}

/// Max deviation between the dense spectrum of the full matrix and the
/// union of block spectra, plus internal similarity and duality checks.
pub fn spectrum_oracle_deviation(sys: &CapacitanceSystem) -> Result<f64> {
    let spectrum = block_spectrum(sys)?;
    let mut union: Vec<f64> = spectrum.nonzero_eigenvalues();
    union.sort_by(f64::total_cmp);
    let m = union.len();

    let dense = nalgebra::DMatrix::<f64>::from_fn(sys.size, sys.size, |i, j| {
        sys.full.to_dense_f64()[i][j]
    });
    let eigs = dense.complex_eigenvalues();
    let mut all: Vec<Complex64> = eigs.iter().map(|e| Complex64::new(e.re, e.im)).collect();
    all.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    let scale = all.first().map(|e| e.norm()).unwrap_or(0.0).max(1.0);

    let mut worst = 0.0f64;
    let mut top: Vec<f64> = all.iter().take(m).map(|e| e.re).collect();
    top.sort_by(f64::total_cmp);
    for (a, b) in top.iter().zip(&union) {
        worst = worst.max((a - b).abs());
    }
    for e in all.iter().take(m) {
        worst = worst.max(e.im.abs());
    }
    for e in all.iter().skip(m) {
        worst = worst.max(e.norm() / scale);
    }
    Ok(worst)
}

pub fn spectrum_oracle_suite(seed: u64, chains: usize) -> SuiteResult {
    let mut out = SuiteResult::new("spectrum_oracle");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_cafe);
    let k0 = Wavenumber::from_q(Rat::from_integer(1.into()));
    for case in 0..chains {
        let t = random_rational_chain(&mut rng, 12);
        let partition = resonant_index_set(&t, &k0);
        let sys = build_capacitance(&t, &k0, &partition);
        match spectrum_oracle_deviation(&sys) {
            Ok(dev) => out.check(dev, 1e-10, || format!("chain {case} (N={})", sys.size)),
            Err(e) => out.fail(format!("chain {case}: {e}")),
        }
        // Similarity: full spectrum equals symmetrized spectrum.
        if sys.size > 0 {
            if let Ok((sym_vals, _)) =
                crate::linalg::sym_tridiag_eigen(&sys.sym_diag, &sys.sym_off)
            {
                let dense = nalgebra::DMatrix::<f64>::from_fn(sys.size, sys.size, |i, j| {
                    sys.full.to_dense_f64()[i][j]
                });
                let mut dvals: Vec<f64> =
                    dense.complex_eigenvalues().iter().map(|e| e.re).collect();
                dvals.sort_by(f64::total_cmp);
                let worst = sym_vals
                    .iter()
                    .zip(&dvals)
                    .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
                out.check(worst, 1e-10, || format!("similarity chain {case}"));
            }
        }
        // Primal/dual blocks share their nonzero spectra.
        let spectrum = block_spectrum(&sys).unwrap();
        for (bi, blk) in sys.blocks.iter().enumerate() {
            if blk.s() == 0 {
                continue;
            }
            let d = nalgebra::DMatrix::<f64>::from_fn(blk.s(), blk.s(), |i, j| {
                crate::rational::to_f64(&blk.d_mat[i][j])
            });
            let mut dvals: Vec<f64> = d
                .complex_eigenvalues()
                .iter()
                .map(|e| e.re)
                .filter(|x| x.abs() > 1e-12)
                .collect();
            dvals.sort_by(f64::total_cmp);
            let cvals: Vec<f64> = spectrum.per_block[bi]
                .iter()
                .filter(|p| !p.is_zero)
                .map(|p| p.lambda)
                .collect();
            if dvals.len() != cvals.len() {
                out.fail(format!("chain {case} block {bi}: dual spectrum size mismatch"));
                continue;
            }
            let worst = dvals
                .iter()
                .zip(&cvals)
                .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
            out.check(worst, 1e-10, || format!("duality chain {case} block {bi}"));
        }
        // Counting bound.
        let expect_m: usize = partition.blocks.iter().map(|b| b.len() / 2).sum();
        if spectrum.m() != expect_m || expect_m > partition.n() / 2 {
            out.fail(format!("chain {case}: nonzero count {} != {expect_m}", spectrum.m()));
        }
    }
    out
}

pub fn newton_boundary_suite() -> SuiteResult {
    let mut out = SuiteResult::new("newton_boundary");
    fn compositions(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut all = Vec::new();
        for first in 1..=n {
            for mut rest in compositions(n - first) {
                rest.insert(0, first);
                all.push(rest);
            }
        }
        all
    }
    for n in 1..=12 {
        for sizes in compositions(n) {
            let m: usize = sizes.iter().map(|s| s / 2).sum();
            let brute = newton_boundary_exhaustive(&sizes);
            for (l, got) in brute.iter().enumerate() {
                let closed = if l <= m { n - 2 * l } else { n - m - l };
                match got {
                    Some(v) => out.check(
                        (*v as f64 - closed as f64).abs(),
                        0.0,
                        || format!("sizes {sizes:?} l={l}"),
                    ),
                    None => out.fail(format!("sizes {sizes:?} l={l}: infeasible")),
                }
            }
        }
    }
    out
}

pub fn ratio_convergence_suite() -> SuiteResult {
    let mut out = SuiteResult::new("ratio_convergence");
    let configs = [presets::SIX_RESONATOR, presets::PARTITION_EXAMPLE, presets::FOUR_RESONATOR];
    for (ci, preset) in configs.iter().enumerate() {
        let setup = parse_chain_config(preset).unwrap();
        let k0 = setup.require_k0().unwrap().clone();
        let partition = resonant_index_set(&setup.t, &k0);
        let sys = build_capacitance(&setup.t, &k0, &partition);
        let consts = expansion_constants(&setup.t, &k0, &partition, &sys).unwrap();
        let z = 1e-4;
        let k = Complex64::new(k0.value() + z, 0.0);
        let poly = nu_poly_coefficients(&setup.t.as_f64(), k);
        let n = consts.n as i32;
        // Zeroth coefficient against its two-term expansion.
        let predict0 = consts.gl_leading[0] * z.powi(n) * (1.0 + consts.c2 * z);
        let ratio0 = poly.scalar_coeff(0) / predict0;
        out.check((ratio0 - 1.0).norm(), 0.02, || format!("config {ci} l=0"));
        // Higher coefficients against their leading constants.
        for l in 1..=consts.m {
            let lead = consts.gl_leading[l];
            if lead.norm() == 0.0 {
                continue;
            }
            let ratio = poly.scalar_coeff(l) * z.powi(2 * l as i32 - n) / lead;
            out.check((ratio - 1.0).norm(), 0.02, || format!("config {ci} l={l}"));
        }
        // First coefficient beyond the square-root range, when present and
        // not vanishing (the flanking cotangents can cancel exactly).
        if let Some(gm1) = consts.gm1_leading {
            if gm1.norm() > 1e-10 * consts.gl_leading[consts.m].norm() {
                let l = consts.m + 1;
                let ratio = poly.scalar_coeff(l) * z.powi(2 * l as i32 - n - 1) / gm1;
                out.check((ratio - 1.0).norm(), 0.05, || format!("config {ci} l=m+1"));
            }
        }
    }
    out
}

pub fn eigenmode_property_suite(seed: u64) -> SuiteResult {
    let mut out = SuiteResult::new("eigenmode_properties");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0dd_0);
    for _ in 0..50 {
        let k = Complex64::new(rng.gen_range(0.2..4.0), rng.gen_range(-0.4..0.4));
        let a = rng.gen_range(0.05..2.5);
        let b = rng.gen_range(0.05..2.5);
        let pa = propagation_matrix(k, a);
        let det = pa.m[0][0] * pa.m[1][1] - pa.m[0][1] * pa.m[1][0];
        out.check((det - 1.0).norm(), 1e-13, || format!("determinant k={k} a={a}"));
        let comp = pa.mul(&propagation_matrix(k, b));
        let direct = propagation_matrix(k, a + b);
        out.check(
            comp.max_abs_diff(&direct) / direct.max_abs().max(1.0),
            1e-12,
            || format!("composition k={k}"),
        );
    }
    // One reconstruction: boundary jumps and the outgoing condition.
    let mut setup = parse_chain_config(presets::FOUR_RESONATOR).unwrap();
    setup.chain.params.delta = Complex64::new(1e-3, 0.0);
    let k0 = setup.require_k0().unwrap().clone();
    let problem = ResonanceProblem::from_setup(&setup, &k0).unwrap();
    let root = newton_refine(
        &problem,
        Complex64::new(1e-3f64.sqrt(), 0.0),
        &SolverOptions::default(),
    );
    if !root.converged {
        out.fail("reference root did not converge".into());
        return out;
    }
    match reconstruct_mode(
        &setup.chain,
        problem.k0() + root.z,
        problem.delta,
        None,
        &ModeOptions::default(),
    ) {
        Ok(prof) => {
            out.check(prof.radiation_residual, 1e-6, || "outgoing condition".into());
            for (j, bs) in prof.boundary_states.iter().enumerate() {
                let expect = if (j + 1) % 2 == 1 { prof.delta } else { 1.0 / prof.delta };
                let res = (bs.du_right / bs.du_left - expect).norm() / expect.norm();
                out.check(res, 1e-10, || format!("jump ratio at boundary {}", j + 1));
            }
        }
        Err(e) => out.fail(format!("reconstruction failed: {e}")),
    }
    out
}

pub fn root_completeness_suite() -> SuiteResult {
    let mut out = SuiteResult::new("root_completeness");
    let cases = [
        (presets::SIX_RESONATOR, 1.0, 7),
        (presets::PARTITION_EXAMPLE, 2.0, 11),
        (presets::DEGENERATE_MATCHED, 0.5, 7),
    ];
    for (preset, lambda_max, expect) in cases {
        let mut setup = parse_chain_config(preset).unwrap();
        setup.chain.params.delta = Complex64::new(1e-3, 0.0);
        let k0 = setup.require_k0().unwrap().clone();
        let partition = resonant_index_set(&setup.t, &k0);
        let problem = ResonanceProblem::from_setup(&setup, &k0).unwrap();
        let seeds = match seed_branches(
            &setup.t,
            &k0,
            &partition,
            problem.delta,
            &setup.chain.params,
        ) {
            Ok(s) => s,
            Err(e) => {
                out.fail(format!("seeding failed: {e}"));
                continue;
            }
        };
        let radius = default_radius(&setup.t, &k0, lambda_max, problem.delta, 1.0);
        match find_all_roots(&problem, &seeds, radius, &SolverOptions::default()) {
            Ok(search) => {
                out.check(
                    (search.roots.len() as f64 - expect as f64).abs()
                        + (search.contour.winding - expect).abs() as f64,
                    0.0,
                    || format!("{expect} roots expected"),
                );
                for r in &search.roots {
                    out.check(r.residual / problem.g_scale, 1e-10, || {
                        "root residual".into()
                    });
                }
            }
            Err(e) => out.fail(format!("root search failed: {e}")),
        }
    }
    out
}

pub fn expansion_consistency_suite() -> SuiteResult {
    let mut out = SuiteResult::new("expansion_consistency");
    for preset in [presets::SIX_RESONATOR, presets::DEGENERATE_MATCHED] {
        let setup = parse_chain_config(preset).unwrap();
        let k0 = setup.require_k0().unwrap().clone();
        let partition = resonant_index_set(&setup.t, &k0);
        let sys = build_capacitance(&setup.t, &k0, &partition);
        let spectrum = block_spectrum(&sys).unwrap();
        let coeffs =
            expansion_coefficients(&setup.t, &k0, &sys, &spectrum, &setup.chain.params).unwrap();
        for delta_re in [1e-4, 1e-5] {
            let delta = Complex64::new(delta_re, 0.0);
            let nu = 2.0 * delta / (delta + 1.0);
            for c in &coeffs {
                for sign in [1.0, -1.0] {
                    let kd = c.k_predicted(k0.value(), delta, sign);
                    let kn = c.k_predicted_nu(k0.value(), nu, sign);
                    out.check((kd - kn).norm(), 10.0 * delta_re.powf(1.5), || {
                        format!("lambda={} delta={delta_re}", c.lambda)
                    });
                }
            }
        }
    }
    out
}

/// Runs every suite. With a config whose chain has a single resonator, the
/// suites that need couplings are skipped.
pub fn run_all(seed: u64, setup: Option<&ChainSetup>) -> VerifyReport {
    let single = setup.map_or(false, |s| s.chain.resonator_count() == 1);
    let mut suites = vec![transfer_identity_suite(seed)];
    if single {
        suites.push(SuiteResult::new("spectrum_oracle").skip("single resonator has no couplings"));
        suites.push(SuiteResult::new("root_completeness").skip("single resonator has no couplings"));
    } else {
        suites.push(spectrum_oracle_suite(seed, 200));
        suites.push(root_completeness_suite());
    }
    suites.push(newton_boundary_suite());
    suites.push(ratio_convergence_suite());
    suites.push(eigenmode_property_suite(seed));
    suites.push(expansion_consistency_suite());
    let all_passed = suites.iter().all(|s| s.passed);
    VerifyReport { seed, all_passed, suites }
}
