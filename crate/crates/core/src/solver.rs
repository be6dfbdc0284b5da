//! Locating all resonances near a reference wavenumber.
//!
//! Seeds come from the closed-form expansions, refinement is damped complex
//! Newton on the polynomial-form resonance function, and completeness is
//! certified independently by an argument-principle winding count around
//! the cluster. When seeding misses a root (degenerate branches can share
//! their predictions to second order), a rectangle-subdivision search driven
//! by the same winding count isolates the missing zeros.

use num_complex::Complex64;

use crate::asymptotics::{expansion_coefficients, expansion_constants, ExpansionCoefficients};
use crate::capacitance::{block_spectrum, build_capacitance};
use crate::chain::{BlockPartition, StructuralVector, Wavenumber};
use crate::config::ChainSetup;
use crate::dd::{g_at_dd, Precision};
use crate::error::{Error, Result};
use crate::linalg::fit_slope;
use crate::rational::{to_f64, Rat};
use crate::transfer::PreparedChain;

pub const DEDUP_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Residual target relative to the local scale of `g`.
    pub tol: f64,
    pub max_iterations: usize,
    pub precision: Precision,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_iterations: 60, precision: Precision::Double }
    }
}

impl SolverOptions {
    pub fn from_env() -> Self {
        Self { precision: Precision::from_env(), ..Self::default() }
    }
}

/// Evaluation context around one reference wavenumber.
pub struct ResonanceProblem {
    pub prep: PreparedChain,
    pub nu: Complex64,
    pub delta: Complex64,
    pub r: f64,
    /// Reference magnitude of `g` away from the root cluster.
    pub g_scale: f64,
}

impl ResonanceProblem {
    pub fn new(
        t: &StructuralVector,
        k0: &Wavenumber,
        partition: &BlockPartition,
        delta: Complex64,
        r: f64,
    ) -> Self {
        let prep = PreparedChain::new(t, k0, partition);
        let nu = 2.0 * delta / (delta + r);
        let (g_ref, _) = prep.g_at(Complex64::new(0.1, 0.0), nu);
        Self { prep, nu, delta, r, g_scale: g_ref.norm().max(1.0) }
    }

    pub fn from_setup(setup: &ChainSetup, k0: &Wavenumber) -> Result<Self> {
        let partition = crate::chain::resonant_index_set(&setup.t, k0);
        Ok(Self::new(
            &setup.t,
            k0,
            &partition,
            setup.delta(),
            setup.chain.params.r_f64(),
        ))
    }

    pub fn k0(&self) -> f64 {
        self.prep.k0
    }

    fn eval(&self, z: Complex64, precision: Precision) -> (Complex64, Complex64) {
        match precision {
            Precision::Double => self.prep.g_at(z, self.nu),
            Precision::DoubleDouble => g_at_dd(&self.prep, z, self.nu),
        }
    }
}

/// Kind of resonance branch near the reference wavenumber.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchKind {
    SqrtPlus,
    SqrtMinus,
    Linear,
}

/// One seeded branch: its kind, originating block eigenvalue, and the
/// asymptotic prediction used both as seed and as reference value.
#[derive(Debug, Clone)]
pub struct BranchSeed {
    pub id: usize,
    pub kind: BranchKind,
    pub block_index: Option<usize>,
    pub lambda: Option<f64>,
    pub coeffs: Option<ExpansionCoefficients>,
    /// Seed offset from `k0`.
    pub seed_z: Complex64,
}

impl BranchSeed {
    /// Asymptotic prediction of `k` for this branch at contrast `delta`.
    /// Square-root branches carry their two-term expansion; the linear
    /// branches are predicted at the reference wavenumber itself.
    pub fn k_asymptotic(&self, k0: f64, delta: Complex64) -> Complex64 {
        match (&self.coeffs, self.kind) {
            (Some(c), BranchKind::SqrtPlus) => c.k_predicted(k0, delta, 1.0),
            (Some(c), BranchKind::SqrtMinus) => c.k_predicted(k0, delta, -1.0),
            _ => Complex64::new(k0, 0.0),
        }
    }
}

/// Seeds for every branch expected near `k0`: one pair per nonzero block
/// eigenvalue and `n - 2m` near-stationary seeds.
pub fn seed_branches(
    t: &StructuralVector,
    k0: &Wavenumber,
    partition: &BlockPartition,
    delta: Complex64,
    params: &crate::chain::MaterialParams,
) -> Result<Vec<BranchSeed>> {
    let sys = build_capacitance(t, k0, partition);
    let spectrum = block_spectrum(&sys)?;
    let coeffs = expansion_coefficients(t, k0, &sys, &spectrum, params)?;
    let constants = expansion_constants(t, k0, partition, &sys)?;
    let nu = 2.0 * delta / (delta + params.r_f64());

    let mut out = Vec::new();
    let mut id = 0;
    for c in &coeffs {
        for (kind, sign) in [(BranchKind::SqrtPlus, 1.0), (BranchKind::SqrtMinus, -1.0)] {
            let seed_z = c.k_predicted(0.0, delta, sign);
            out.push(BranchSeed {
                id,
                kind,
                block_index: Some(c.block_index),
                lambda: Some(c.lambda),
                coeffs: Some(c.clone()),
                seed_z,
            });
            id += 1;
        }
    }
    let n_linear = partition.n().saturating_sub(2 * partition.m());
    for _ in 0..n_linear {
        let seed_z = constants
            .linear_branch_coeff
            .map(|c| c * nu)
            .unwrap_or(Complex64::new(0.0, 0.0));
        out.push(BranchSeed {
            id,
            kind: BranchKind::Linear,
            block_index: None,
            lambda: None,
            coeffs: None,
            seed_z,
        });
        id += 1;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
pub struct RefineResult {
    /// Root offset from `k0`.
    pub z: Complex64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Damped complex Newton iteration on `g(k0 + z; nu)`.
pub fn newton_refine(
    problem: &ResonanceProblem,
    seed_z: Complex64,
    opts: &SolverOptions,
) -> RefineResult {
    let mut z = seed_z;
    let (mut g, mut dg) = problem.eval(z, opts.precision);
    let step_tol = 1e-13 * (1.0 + problem.k0().abs());
    let noise_step = 1e-9 * (1.0 + problem.k0().abs());
    let mut converged = false;
    let mut iterations = 0;
    let mut stagnant = 0;
    for it in 0..opts.max_iterations {
        iterations = it + 1;
        if g.norm() == 0.0 {
            converged = true;
            break;
        }
        if dg.norm() == 0.0 {
            break;
        }
        let full_step = g / dg;
        // A seed already at a root needs no motion at all.
        if full_step.norm() < step_tol {
            converged = true;
            break;
        }
        // Halve the step while the residual grows.
        let mut factor = 1.0;
        let mut accepted = None;
        for _ in 0..25 {
            let z_try = z - full_step * factor;
            let (g_try, dg_try) = problem.eval(z_try, opts.precision);
            if g_try.norm() <= g.norm() || factor < 1e-7 {
                accepted = Some((z_try, g_try, dg_try));
                break;
            }
            factor *= 0.5;
        }
        let Some((z_new, g_new, dg_new)) = accepted else { break };
        let dz = (z_new - z).norm();
        // Tiny steps that stop reducing the residual mean the iteration sits
        // on the rounding floor of g; accept the point.
        if dz < noise_step && g_new.norm() > 0.25 * g.norm() {
            stagnant += 1;
        } else {
            stagnant = 0;
        }
        z = z_new;
        g = g_new;
        dg = dg_new;
        if dz < step_tol || stagnant >= 2 {
            converged = true;
            break;
        }
    }
    RefineResult { z, residual: g.norm(), iterations, converged }
}

/// Merges roots closer than the deduplication radius, keeping the smaller
/// residual. Returns the survivors and the number of merges.
pub fn dedup_roots(mut roots: Vec<RefineResult>, k0: f64) -> (Vec<RefineResult>, usize) {
    let radius = DEDUP_RTOL * (1.0 + k0.abs());
    roots.sort_by(|a, b| a.z.re.total_cmp(&b.z.re).then(a.z.im.total_cmp(&b.z.im)));
    let mut out: Vec<RefineResult> = Vec::new();
    let mut merged = 0;
    for r in roots {
        if let Some(last) = out
            .iter_mut()
            .find(|existing| (existing.z - r.z).norm() < radius)
        {
            merged += 1;
            if r.residual < last.residual {
                *last = r;
            }
        } else {
            out.push(r);
        }
    }
    (out, merged)
}

/// Argument-principle zero count on a circle.
#[derive(Debug, Clone, Copy)]
pub struct ContourCount {
    pub center_z: Complex64,
    pub radius: f64,
    pub winding: i64,
    pub nodes: usize,
    /// Integral value before rounding.
    pub raw: f64,
}

/// Trapezoid winding integral with node doubling until the rounded value is
/// stable and within 1e-3 of an integer.
pub fn contour_count(
    problem: &ResonanceProblem,
    center_z: Complex64,
    radius: f64,
    opts: &SolverOptions,
) -> Result<ContourCount> {
    const MAX_NODES: usize = 1 << 16;
    let mut nodes = 64;
    let mut prev: Option<(f64, i64)> = None;
    while nodes <= MAX_NODES {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..nodes {
            let theta = 2.0 * std::f64::consts::PI * (j as f64) / (nodes as f64);
            let offset = Complex64::from_polar(radius, theta);
            let (g, dg) = problem.eval(center_z + offset, opts.precision);
            if g.norm() == 0.0 {
                return Err(Error::ContourUnstable(nodes));
            }
            acc += dg / g * offset;
        }
        let raw = (acc / (nodes as f64)).re;
        let rounded = raw.round() as i64;
        let close = (raw - raw.round()).abs() <= 1e-3;
        if close {
            if let Some((_, prev_rounded)) = prev {
                if prev_rounded == rounded {
                    return Ok(ContourCount { center_z, radius, winding: rounded, nodes, raw });
                }
            }
            prev = Some((raw, rounded));
        } else {
            prev = None;
        }
        nodes *= 2;
    }
    Err(Error::ContourUnstable(MAX_NODES))
}

/// [`contour_count`] with radius nudging when a root sits too close to the
/// contour for the quadrature to stabilize.
pub fn contour_count_adaptive(
    problem: &ResonanceProblem,
    center_z: Complex64,
    radius: f64,
    opts: &SolverOptions,
) -> Result<ContourCount> {
    let mut last_err = None;
    for attempt in 0..6 {
        let r = radius * (1.0 + 0.0137 * attempt as f64);
        match contour_count(problem, center_z, r, opts) {
            Ok(c) => return Ok(c),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap())
}

/// Default counting radius: wide enough for every seeded branch, capped at
/// half the distance to the nearest other reference wavenumber.
pub fn default_radius(
    t: &StructuralVector,
    k0: &Wavenumber,
    lambda_max: f64,
    delta: Complex64,
    r: f64,
) -> f64 {
    let want = (3.0 * (lambda_max * delta.norm() / r).sqrt()).max(10.0 * delta.norm());
    let cap = 0.5 * nearest_other_resonant_distance(t, k0);
    want.min(cap)
}

/// Exact distance from `k0` to the closest other wavenumber at which any
/// segment resonates.
pub fn nearest_other_resonant_distance(t: &StructuralVector, k0: &Wavenumber) -> f64 {
    use num_traits::Signed;
    let mut best: Option<Rat> = None;
    for tj in t.iter() {
        let x = tj * k0.q();
        let fl = x.floor();
        for cand in [fl.clone() - Rat::from_integer(1.into()), fl.clone(), fl + Rat::from_integer(1.into())] {
            let d = ((cand / tj) - k0.q()).abs();
            if d.numer().sign() != num_bigint::Sign::NoSign {
                best = match best {
                    None => Some(d),
                    Some(b) if d < b => Some(d),
                    Some(b) => Some(b),
                };
            }
        }
    }
    best.map(|b| to_f64(&b)).unwrap_or(1.0) * std::f64::consts::PI
}

fn rect_winding(
    problem: &ResonanceProblem,
    lo: Complex64,
    hi: Complex64,
    opts: &SolverOptions,
) -> Result<i64> {
    const MAX_NODES: usize = 1 << 13;
    let corners = [
        lo,
        Complex64::new(hi.re, lo.im),
        hi,
        Complex64::new(lo.re, hi.im),
    ];
    let mut nodes = 32;
    let mut prev: Option<i64> = None;
    while nodes <= MAX_NODES {
        let mut acc = Complex64::new(0.0, 0.0);
        for s in 0..4 {
            let a = corners[s];
            let b = corners[(s + 1) % 4];
            let dz = (b - a) / nodes as f64;
            for j in 0..nodes {
                let z = a + dz * (j as f64 + 0.5);
                let (g, dg) = problem.eval(z, opts.precision);
                if g.norm() == 0.0 {
                    return Err(Error::ContourUnstable(nodes));
                }
                acc += dg / g * dz;
            }
        }
        let raw = (acc / Complex64::new(0.0, 2.0 * std::f64::consts::PI)).re;
        let rounded = raw.round() as i64;
        if (raw - raw.round()).abs() <= 1e-3 {
            if prev == Some(rounded) {
                return Ok(rounded);
            }
            prev = Some(rounded);
        } else {
            prev = None;
        }
        nodes *= 2;
    }
    Err(Error::ContourUnstable(MAX_NODES))
}

/// Finds the zeros inside an axis-aligned box by recursive subdivision with
/// winding counts, appending to `found` (respecting deduplication).
fn isolate_in_rect(
    problem: &ResonanceProblem,
    lo: Complex64,
    hi: Complex64,
    opts: &SolverOptions,
    found: &mut Vec<RefineResult>,
    depth: usize,
) -> Result<()> {
    let radius = DEDUP_RTOL * (1.0 + problem.k0().abs());
    let known_inside = |found: &[RefineResult]| {
        found
            .iter()
            .filter(|r| {
                r.z.re >= lo.re - radius
                    && r.z.re <= hi.re + radius
                    && r.z.im >= lo.im - radius
                    && r.z.im <= hi.im + radius
            })
            .count() as i64
    };
    let w = match rect_winding(problem, lo, hi, opts) {
        Ok(w) => w,
        // A zero sitting on the boundary: shrink slightly and retry once.
        Err(_) => {
            let margin = (hi - lo) * 0.013;
            rect_winding(problem, lo + margin, hi - margin, opts)?
        }
    };
    if w <= known_inside(found) {
        return Ok(());
    }
    let center = (lo + hi) * 0.5;
    let refined = newton_refine(problem, center, opts);
    if refined.converged
        && refined.z.re >= lo.re
        && refined.z.re <= hi.re
        && refined.z.im >= lo.im
        && refined.z.im <= hi.im
        && !found.iter().any(|r| (r.z - refined.z).norm() < radius)
    {
        found.push(refined);
        if w <= known_inside(found) {
            return Ok(());
        }
    }
    if depth >= 48 {
        return Err(Error::Domain(format!(
            "could not isolate {} zero(s) in a box of size {:.3e}",
            w,
            (hi - lo).norm()
        )));
    }
    // Slightly off-center split lines avoid landing on symmetric roots.
    let frac = 0.493;
    let mid = lo + (hi - lo) * frac;
    let quads = [
        (lo, mid),
        (Complex64::new(mid.re, lo.im), Complex64::new(hi.re, mid.im)),
        (Complex64::new(lo.re, mid.im), Complex64::new(mid.re, hi.im)),
        (mid, hi),
    ];
    for (qlo, qhi) in quads {
        isolate_in_rect(problem, qlo, qhi, opts, found, depth + 1)?;
    }
    Ok(())
}

/// All deduplicated zeros within the disk, certified complete against the
/// winding count.
pub struct RootSearch {
    pub roots: Vec<RefineResult>,
    pub contour: ContourCount,
    pub duplicates_merged: usize,
}

pub fn find_all_roots(
    problem: &ResonanceProblem,
    seeds: &[BranchSeed],
    radius: f64,
    opts: &SolverOptions,
) -> Result<RootSearch> {
    let contour = contour_count_adaptive(problem, Complex64::new(0.0, 0.0), radius, opts)?;
    let mut refined = Vec::new();
    for seed in seeds {
        let r = newton_refine(problem, seed.seed_z, opts);
        if r.converged && r.z.norm() < contour.radius {
            refined.push(r);
        }
    }
    let (mut roots, duplicates_merged) = dedup_roots(refined, problem.k0());
    if (roots.len() as i64) < contour.winding {
        let half = contour.radius / std::f64::consts::SQRT_2;
        let lo = Complex64::new(-half, -half);
        let hi = Complex64::new(half, half);
        isolate_in_rect(problem, lo, hi, opts, &mut roots, 0)?;
        let (deduped, _) = dedup_roots(roots, problem.k0());
        roots = deduped;
        // The inscribed square may genuinely miss roots near the rim; sweep
        // the four rim segments with seeds on a ring if still short.
        if (roots.len() as i64) < contour.winding {
            let n_ring = 64;
            let mut extra = Vec::new();
            for j in 0..n_ring {
                let th = 2.0 * std::f64::consts::PI * j as f64 / n_ring as f64;
                let seed = Complex64::from_polar(contour.radius * 0.9, th);
                let r = newton_refine(problem, seed, opts);
                if r.converged && r.z.norm() < contour.radius {
                    extra.push(r);
                }
            }
            roots.extend(extra);
            let (deduped, _) = dedup_roots(roots, problem.k0());
            roots = deduped;
        }
    }
    let inside: Vec<RefineResult> = roots
        .into_iter()
        .filter(|r| r.z.norm() < contour.radius)
        .collect();
    if (inside.len() as i64) != contour.winding {
        return Err(Error::Domain(format!(
            "found {} distinct roots but the winding count is {}",
            inside.len(),
            contour.winding
        )));
    }
    Ok(RootSearch { roots: inside, contour, duplicates_merged })
}

/// One row of a contrast sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub branch_id: usize,
    pub kind: BranchKind,
    pub lambda: Option<f64>,
    pub delta: Complex64,
    pub k_num: Complex64,
    pub k_asym: Complex64,
    pub abs_err: f64,
    pub residual: f64,
    pub reseeded: bool,
}

#[derive(Debug, Clone)]
pub struct BranchSweep {
    pub branch_id: usize,
    pub kind: BranchKind,
    pub lambda: Option<f64>,
    pub rows: Vec<SweepRow>,
    /// Log-log slope of `abs_err` against `delta`; present with >= 4 points.
    pub slope: Option<f64>,
}

/// Tracks every branch across a descending contrast schedule by
/// continuation, re-seeding from the asymptotic prediction on collisions.
pub fn delta_sweep(
    setup: &ChainSetup,
    k0: &Wavenumber,
    deltas: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<BranchSweep>> {
    let partition = crate::chain::resonant_index_set(&setup.t, k0);
    let params = &setup.chain.params;
    let r = params.r_f64();
    let mut sorted = deltas.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));

    let delta0 = Complex64::new(sorted[0], 0.0);
    let seeds = seed_branches(&setup.t, k0, &partition, delta0, params)?;
    let mut sweeps: Vec<BranchSweep> = seeds
        .iter()
        .map(|s| BranchSweep {
            branch_id: s.id,
            kind: s.kind,
            lambda: s.lambda,
            rows: Vec::new(),
            slope: None,
        })
        .collect();
    // Tracker state: previous root together with the previous prediction,
    // so the continuation seed is the old root shifted by the predicted
    // branch motion (plain reuse of the old root can hop onto a neighboring
    // branch once the step outgrows the branch separation).
    let mut trackers: Vec<Option<(Complex64, Complex64)>> = vec![None; seeds.len()];

    for &delta_re in &sorted {
        let delta = Complex64::new(delta_re, 0.0);
        let problem = ResonanceProblem::new(&setup.t, k0, &partition, delta, r);
        let fresh = seed_branches(&setup.t, k0, &partition, delta, params)?;
        let mut roots_this_delta: Vec<Complex64> = Vec::new();
        for (bi, seed) in fresh.iter().enumerate() {
            let start = match trackers[bi] {
                Some((prev_root, prev_seed)) => prev_root + (seed.seed_z - prev_seed),
                None => seed.seed_z,
            };
            let mut refined = newton_refine(&problem, start, opts);
            let mut reseeded = false;
            let dedup_radius = DEDUP_RTOL * (1.0 + problem.k0().abs());
            let collided = |z: Complex64, taken: &[Complex64]| {
                taken.iter().any(|w| (w - z).norm() < dedup_radius)
            };
            if !refined.converged || collided(refined.z, &roots_this_delta) {
                reseeded = true;
                refined = newton_refine(&problem, seed.seed_z, opts);
                if collided(refined.z, &roots_this_delta) {
                    // Last resort: perturb the asymptotic seed.
                    let bump = Complex64::new(0.0, delta_re.powf(1.25));
                    refined = newton_refine(&problem, seed.seed_z + bump, opts);
                }
            }
            roots_this_delta.push(refined.z);
            trackers[bi] = Some((refined.z, seed.seed_z));
            let k_num = problem.k0() + refined.z;
            let k_asym = seed.k_asymptotic(problem.k0(), delta);
            sweeps[bi].rows.push(SweepRow {
                branch_id: seed.id,
                kind: seed.kind,
                lambda: seed.lambda,
                delta,
                k_num,
                k_asym,
                abs_err: (k_num - k_asym).norm(),
                residual: refined.residual,
                reseeded,
            });
        }
    }

    for sweep in &mut sweeps {
        if sweep.rows.len() >= 4 {
            let xs: Vec<f64> = sweep.rows.iter().map(|r| r.delta.norm().ln()).collect();
            let ys: Vec<f64> = sweep
                .rows
                .iter()
                .map(|r| r.abs_err.max(1e-300).ln())
                .collect();
            sweep.slope = Some(fit_slope(&xs, &ys));
        }
    }
    Ok(sweeps)
}

/// Geometric grid of `points` contrasts descending from `max` to `min`.
pub fn geometric_deltas(min: f64, max: f64, points: usize) -> Vec<f64> {
    assert!(min > 0.0 && max >= min && points >= 1);
    if points == 1 {
        return vec![max];
    }
    let ratio = (min / max).powf(1.0 / (points - 1) as f64);
    let mut out = Vec::with_capacity(points);
    let mut d = max;
    for _ in 0..points {
        out.push(d);
        d *= ratio;
    }
    out
}
