use fabry_core::config::{parse_chain_config, presets};
use fabry_core::solver::*;
use num_complex::Complex64;

fn main() {
    let setup = parse_chain_config(presets::SIX_RESONATOR).unwrap();
    let k0 = setup.require_k0().unwrap().clone();
    let deltas = geometric_deltas(1e-5, 1e-2, 16);
    eprintln!("deltas: {:?}", &deltas);
    let partition = fabry_core::chain::resonant_index_set(&setup.t, &k0);
    for &d in &deltas {
        let delta = Complex64::new(d, 0.0);
        eprintln!("delta {d:.2e}: begin");
        let problem = ResonanceProblem::new(&setup.t, &k0, &partition, delta, 1.0);
        let seeds = seed_branches(&setup.t, &k0, &partition, delta, &setup.chain.params).unwrap();
        for s in &seeds {
            let r = newton_refine(&problem, s.seed_z, &SolverOptions::default());
            eprintln!("  branch {} it {} conv {} z {:+.6e}{:+.6e}i", s.id, r.iterations, r.converged, r.z.re, r.z.im);
        }
    }
}
