use dirac_spectra::counterexample::{RootRoute, Theorem2Params};
use dirac_spectra::diagnostics::BandRule;
use dirac_spectra::model::BoundaryDescriptor;
use dirac_spectra::potential::{BuiltinPotential, Cpair, PotentialDescriptor};
use dirac_spectra::spectrum::SpectrumConfig;
use serde::{Deserialize, Serialize};

/// Everything a run depends on. The effective config (after command-line
/// overrides) is echoed into every report.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub boundary: BoundaryDescriptor,
    pub potential: PotentialDescriptor,
    /// Inclusive index range `[lo, hi]`.
    pub n_range: [i64; 2],
    pub spectrum: SpectrumConfig,
    pub band: BandRule,
    /// Base grid size for kernels and eigenfunction samples (odd).
    pub grid: usize,
    /// Spectral parameter for `green`.
    pub lambda: Cpair,
    /// Index multipliers `n` for `asym-check`: `lambda = tau0 + 2n`.
    pub asym_n: Vec<i64>,
    pub theorem2: Theorem2Params,
    /// Lacunary term indices verified by `counterexample`.
    pub ks: Vec<usize>,
    pub route: RootRoute,
    /// Vector function expanded by `expand`, written as a potential pair.
    pub expand_f: PotentialDescriptor,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            boundary: BoundaryDescriptor::PeriodicTypeA {
                periodic_type_a: [-1.0, 0.0],
            },
            potential: PotentialDescriptor::Builtin(BuiltinPotential::Zero),
            n_range: [-10, 10],
            spectrum: SpectrumConfig::default(),
            band: BandRule::default(),
            grid: 65,
            lambda: [0.5, 0.5],
            asym_n: vec![8, 16, 32, 64],
            theorem2: Theorem2Params::default(),
            ks: vec![1, 2, 3],
            route: RootRoute::Linearised,
            expand_f: PotentialDescriptor::Builtin(BuiltinPotential::EndpointSmooth {
                p: [1.0, 0.0],
                q: [0.0, 1.0],
            }),
            seed: 0,
        }
    }
}

/// Gap ratio used by `--desk-scale`.
pub const DESK_GAP_RATIO: u64 = 40;

impl RunConfig {
    pub fn apply_desk_scale(&mut self) {
        if self.theorem2.gap_ratio.is_none() {
            self.theorem2.gap_ratio = Some(DESK_GAP_RATIO);
        }
        if let PotentialDescriptor::Builtin(BuiltinPotential::Theorem2(p)) = &mut self.potential {
            if p.gap_ratio.is_none() {
                p.gap_ratio = Some(DESK_GAP_RATIO);
            }
        }
    }
}

/// `lo:hi` or `lo..hi`, both inclusive.
pub fn parse_range(s: &str) -> Result<[i64; 2], String> {
    let (a, b) = s
        .split_once("..")
        .or_else(|| s.split_once(':'))
        .ok_or_else(|| format!("expected LO:HI, got {s:?}"))?;
    let lo: i64 = a.trim().parse().map_err(|e| format!("bad lower bound: {e}"))?;
    let hi: i64 = b.trim().parse().map_err(|e| format!("bad upper bound: {e}"))?;
    if lo > hi {
        return Err(format!("empty range {lo}..{hi}"));
    }
    Ok([lo, hi])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("-3:4").unwrap(), [-3, 4]);
        assert_eq!(parse_range("0..2").unwrap(), [0, 2]);
        assert!(parse_range("4:1").is_err());
        assert!(parse_range("x").is_err());
    }

    #[test]
    fn partial_config_uses_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"n_range": [-2, 2], "spectrum": {"tol_root": 1e-9}}"#).unwrap();
        assert_eq!(c.n_range, [-2, 2]);
        assert_eq!(c.spectrum.tol_root, 1e-9);
        assert_eq!(c.spectrum.tol_cluster, 1e-8);
        assert_eq!(c.grid, 65);
        assert!(serde_json::from_str::<RunConfig>(r#"{"n_rnage": [0, 1]}"#).is_err());
    }

    #[test]
    fn desk_scale_fills_missing_ratio() {
        let mut c: RunConfig = serde_json::from_str(r#"{"potential": {"kind": "builtin", "name": "theorem2"}}"#).unwrap();
        c.apply_desk_scale();
        assert_eq!(c.theorem2.gap_ratio, Some(DESK_GAP_RATIO));
        match c.potential {
            PotentialDescriptor::Builtin(BuiltinPotential::Theorem2(p)) => assert_eq!(p.gap_ratio, Some(40)),
            _ => unreachable!(),
        }
    }
}
