//! JSON configuration ingestion.
//!
//! Geometry is given either as resonator lengths plus spacings or directly
//! as the structural vector. All rational quantities are strings (`"p/q"`
//! or decimal); plain JSON numbers are accepted and read via their decimal
//! literal, which keeps short decimals exact.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chain::{
    build_structural_vector, MaterialParams, ResonatorChain, StructuralVector, Wavenumber,
};
use crate::error::{Error, Result};
use crate::rational::{parse_rational, to_f64, Rat};

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum NumberOrString {
    Number(serde_json::Number),
    String(String),
}

impl NumberOrString {
    fn as_rational(&self) -> Result<Rat> {
        match self {
            NumberOrString::Number(n) => parse_rational(&n.to_string()),
            NumberOrString::String(s) => parse_rational(s),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum DeltaSpec {
    Real(f64),
    Complex([f64; 2]),
}

impl DeltaSpec {
    pub fn as_complex(&self) -> Complex64 {
        match self {
            DeltaSpec::Real(x) => Complex64::new(*x, 0.0),
            DeltaSpec::Complex([re, im]) => Complex64::new(*re, *im),
        }
    }
}

/// On-disk chain configuration.
#[derive(Debug, Clone, Deserialize, Serialize, Default)]
pub struct ChainConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lengths: Option<Vec<NumberOrString>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacings: Option<Vec<NumberOrString>>,
    /// Direct structural-vector mode, exclusive with lengths/spacings.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<Vec<NumberOrString>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<NumberOrString>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<NumberOrString>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<DeltaSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k0_over_pi: Option<NumberOrString>,
    /// Position of the leftmost boundary; only eigenmode phases depend on it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<NumberOrString>,
    /// Accept near-integer products within `float_tol` instead of the exact
    /// rational test. Off by default.
    #[serde(default)]
    pub float_mode: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub float_tol: Option<f64>,
}

/// A parsed and validated configuration.
#[derive(Debug, Clone)]
pub struct ChainSetup {
    pub chain: ResonatorChain,
    pub t: StructuralVector,
    pub k0: Option<Wavenumber>,
    pub float_mode: bool,
    pub float_tol: f64,
}

impl ChainSetup {
    pub fn delta(&self) -> Complex64 {
        self.chain.params.delta
    }

    pub fn require_k0(&self) -> Result<&Wavenumber> {
        self.k0
            .as_ref()
            .ok_or_else(|| Error::Config("no k0_over_pi given (config or --k0)".into()))
    }

    pub fn partition(&self) -> Result<crate::chain::BlockPartition> {
        let k0 = self.require_k0()?;
        if self.float_mode {
            let q = to_f64(k0.q());
            Ok(crate::chain::resonant_index_set_float(
                &self.t.as_f64(),
                q,
                self.float_tol,
            ))
        } else {
            Ok(crate::chain::resonant_index_set(&self.t, k0))
        }
    }
}

pub fn parse_chain_config(json: &str) -> Result<ChainSetup> {
    let cfg: ChainConfig = serde_json::from_str(json)?;
    resolve(&cfg)
}

pub fn resolve(cfg: &ChainConfig) -> Result<ChainSetup> {
    let r = match &cfg.r {
        Some(x) => x.as_rational()?,
        None => Rat::from_integer(1.into()),
    };
    let v = match &cfg.v {
        Some(x) => to_f64(&x.as_rational()?),
        None => 1.0,
    };
    let delta = cfg
        .delta
        .as_ref()
        .map(|d| d.as_complex())
        .unwrap_or(Complex64::new(1e-3, 0.0));
    let params = MaterialParams::new(delta, r, v)?;
    let origin = match &cfg.origin {
        Some(x) => to_f64(&x.as_rational()?),
        None => 0.0,
    };

    let chain = match (&cfg.t, &cfg.lengths, &cfg.spacings) {
        (Some(t), None, None) => {
            let entries = t.iter().map(|x| x.as_rational()).collect::<Result<Vec<_>>>()?;
            let sv = StructuralVector::new(entries)?;
            ResonatorChain::from_structural(&sv, params, origin)?
        }
        (None, Some(lengths), spacings) => {
            let lengths = lengths
                .iter()
                .map(|x| x.as_rational())
                .collect::<Result<Vec<_>>>()?;
            let spacings = spacings
                .as_ref()
                .map(|s| s.iter().map(|x| x.as_rational()).collect::<Result<Vec<_>>>())
                .transpose()?
                .unwrap_or_default();
            ResonatorChain::new(lengths, spacings, params, origin)?
        }
        _ => {
            return Err(Error::Config(
                "give either \"t\" or \"lengths\"/\"spacings\", not both".into(),
            ))
        }
    };
    let t = build_structural_vector(&chain);
    let k0 = cfg
        .k0_over_pi
        .as_ref()
        .map(|x| x.as_rational())
        .transpose()?
        .map(Wavenumber::from_q);
    Ok(ChainSetup {
        chain,
        t,
        k0,
        float_mode: cfg.float_mode,
        float_tol: cfg.float_tol.unwrap_or(1e-9),
    })
}

/// Built-in configurations used by the bundled experiments.
pub mod presets {
    /// Fifteen-segment chain whose resonant set at `k0 = pi` splits into four
    /// blocks of sizes 2, 4, 2, 3.
    pub const PARTITION_EXAMPLE: &str = r#"{
        "t": ["1","2","1.5","2.5","2","2","3","1","0.5","2","1","1.5","1","1","1"],
        "r": "1", "v": "1", "delta": 1e-3, "k0_over_pi": "1"
    }"#;

    /// Six-resonator chain with nonzero coupling eigenvalues 1 (twice) and
    /// 1/4 at `k0 = pi`; the workhorse configuration for branch expansions.
    pub const SIX_RESONATOR: &str = r#"{
        "t": ["1","2","1","0.75","1.25","1","2","2","1","1.5","0.5"],
        "r": "1", "v": "1", "delta": 1e-3, "k0_over_pi": "1"
    }"#;

    /// Four-resonator chain with a single five-segment block at `k0 = pi`;
    /// its dual matrix has eigenpairs (1, (1,0,-1)) and (3, (1,-2,1)).
    pub const FOUR_RESONATOR: &str = r#"{
        "t": ["1.25","1","1","1","1","1","0.75"],
        "r": "1", "v": "1", "delta": 1e-3, "k0_over_pi": "1"
    }"#;

    /// Two blocks sharing the eigenvalue 1, separated by a wide gap.
    pub const DEGENERATE_WIDE_GAP: &str = r#"{
        "t": ["0.3","0.3","1","2","1","1.3","1.3","1","1"],
        "r": "1", "v": "1", "delta": 0.004, "k0_over_pi": "1"
    }"#;

    /// Two blocks sharing the eigenvalue 1 with a single segment between.
    pub const DEGENERATE_NARROW_GAP: &str = r#"{
        "t": ["0.3","0.3","1","2","1","1.3","1","1","1.3"],
        "r": "1", "v": "1", "delta": 0.004, "k0_over_pi": "1"
    }"#;

    /// Three blocks where two share both expansion coefficients; six
    /// square-root branches plus one linear branch.
    pub const DEGENERATE_MATCHED: &str = r#"{
        "t": ["0.3","1.3","2","3","1.7","2","2","2","1.7","3","2","2.3","0.3"],
        "r": "1", "v": "1", "delta": 1e-3, "k0_over_pi": "1"
    }"#;
}
