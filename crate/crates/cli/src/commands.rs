use crate::config::RunConfig;
use dirac_spectra::asymptotics::compare_asymptotics;
use dirac_spectra::counterexample::verify_divergence;
use dirac_spectra::diagnostics::{
    diagnostic_rows, expansion_conditioning, lemma1_criterion, lemma2_criterion, periodic_records, theorem1_verdict,
    write_ratio_csv,
};
use dirac_spectra::green::KernelSampler;
use dirac_spectra::model::{centre_offset, BcClassification};
use dirac_spectra::potential::cpair;
use dirac_spectra::quadrature::ls_slope;
use dirac_spectra::spectrum::locate_eigenvalues;
use dirac_spectra::{Error, Minors, Potential, Result, Spectrum};
use serde_json::{json, Value};

/// A report plus named files destined for the output directory.
pub struct Output {
    pub report: Value,
    pub files: Vec<(String, Vec<u8>)>,
}

impl Output {
    fn new(report: Value) -> Self {
        Output { report, files: Vec::new() }
    }

    fn file(mut self, name: &str, write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<Self> {
        let mut buf = Vec::new();
        write(&mut buf)?;
        self.files.push((name.to_string(), buf));
        Ok(self)
    }
}

fn setup(cfg: &RunConfig) -> Result<(Minors, BcClassification)> {
    let minors = cfg.boundary.to_matrix().minors()?;
    let cls = minors.classify();
    if !cls.regular {
        return Err(Error::NotRegular);
    }
    Ok((minors, cls))
}

fn spectrum(cfg: &RunConfig, pot: &Potential, minors: &Minors) -> Result<Spectrum> {
    locate_eigenvalues(pot, minors, cfg.n_range[0]..=cfg.n_range[1], &cfg.spectrum)
}

pub fn classify(cfg: &RunConfig) -> Result<Output> {
    let (minors, cls) = setup(cfg)?;
    let note = if cls.strongly_regular {
        "strongly regular: the root functions form a Riesz basis for every potential; the criteria here target regular conditions that are not strongly regular"
    } else if cls.periodic_type {
        "periodic type: use the coefficient-ratio and endpoint-ratio criteria"
    } else {
        "not strongly regular: Riesz basis iff the spectrum is asymptotically multiple"
    };
    let mut report = serde_json::to_value(&cls)?;
    report["minors"] = serde_json::to_value(minors)?;
    report["centre_offset"] = serde_json::to_value(cls.z1.map(centre_offset))?;
    report["note"] = json!(note);
    Ok(Output::new(report))
}

/// Fitted decay exponent of `|eps_n|` against `|n|` over the nonzero tail.
fn eps_trend(s: &Spectrum) -> Option<f64> {
    let pts: Vec<(f64, f64)> = s
        .entries
        .iter()
        .filter(|e| e.n.abs() > s.n0.max(1) && e.eps.norm() > 0.0)
        .map(|e| ((e.n.abs() as f64).ln(), e.eps.norm().ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    Some(ls_slope(&x, &y))
}

pub fn spectrum_cmd(cfg: &RunConfig) -> Result<Output> {
    let (minors, _) = setup(cfg)?;
    let pot = cfg.potential.build()?;
    let s = spectrum(cfg, &pot, &minors)?;
    let report = json!({
        "spectrum": &s,
        "eps_decay_slope": eps_trend(&s),
    });
    Output::new(report).file("spectrum.csv", |w| s.write_csv(w))
}

pub fn diagnose(cfg: &RunConfig) -> Result<Output> {
    let (minors, cls) = setup(cfg)?;
    if cls.strongly_regular {
        return Ok(Output::new(json!({
            "classification": cls,
            "verdict": null,
            "note": "strongly regular conditions: Riesz basis without further tests",
        })));
    }
    let pot = cfg.potential.build()?;
    let s = spectrum(cfg, &pot, &minors)?;
    if cls.periodic_type {
        let a = cls.periodic_a.expect("periodic-type carries a");
        let recs = periodic_records(&s, &pot, a, None, &cfg.spectrum.solver)?;
        let v1 = lemma1_criterion(&recs, &cfg.band);
        let v2 = lemma2_criterion(&recs, &cfg.band);
        let rows = diagnostic_rows(&recs);
        let report = json!({
            "classification": cls,
            "is_riesz": v2.is_riesz,
            "inconclusive": v1.inconclusive || v2.inconclusive,
            "lemmas_agree": v1.is_riesz == v2.is_riesz,
            "lemma1": v1,
            "lemma2": v2,
        });
        Output::new(report).file("ratios.csv", |w| write_ratio_csv(w, &rows))
    } else {
        let r = theorem1_verdict(&s, &cls, &pot, &minors, cfg.grid, &cfg.spectrum.solver, &cfg.band)?;
        Ok(Output::new(json!({
            "classification": cls,
            "is_riesz": r.verdict.is_riesz,
            "inconclusive": r.verdict.inconclusive,
            "theorem1": r,
        })))
    }
}

pub fn green(cfg: &RunConfig) -> Result<Output> {
    let (minors, _) = setup(cfg)?;
    if cfg.grid < 3 || cfg.grid.is_multiple_of(2) {
        return Err(Error::Precondition("grid must be odd and at least 3".into()));
    }
    let pot = cfg.potential.build()?;
    let lambda = cpair(cfg.lambda);
    let ks = KernelSampler::compute(&pot, lambda, cfg.grid, &minors, &cfg.spectrum.solver)?;
    let g = ks.green_grid(false)?;
    let h = ks.h_grid();
    let report = json!({
        "lambda": lambda,
        "delta": ks.delta(),
        "hjk_norms": ks.hjk_norms(),
    });
    Output::new(report)
        .file("green.csv", |w| g.write_csv(w))?
        .file("h.csv", |w| h.write_csv(w))
}

pub fn counterexample(cfg: &RunConfig) -> Result<Output> {
    let built = cfg.theorem2.build()?;
    let a = cpair(cfg.theorem2.a);
    let mut report = json!({
        "plan": &built.plan,
        "checks": &built.checks,
        "closeness": built.closeness,
        "f_at_0": built.f_at_0,
        "f_at_pi": built.f_at_pi,
    });
    let built_json = serde_json::to_vec_pretty(&built)?;
    let mut out = Output::new(Value::Null);
    out.files.push(("built.json".into(), built_json));
    if !cfg.ks.is_empty() {
        let rep = verify_divergence(&built, a, &cfg.ks, cfg.route, &cfg.spectrum, &cfg.band)?;
        report["divergence"] = serde_json::to_value(&rep)?;
        out = out.file("divergence.csv", |w| rep.write_csv(w))?;
    }
    out.report = report;
    Ok(out)
}

pub fn asym_check(cfg: &RunConfig) -> Result<Output> {
    let (_, cls) = setup(cfg)?;
    let pot = cfg.potential.build()?;
    let off = centre_offset(cls.z1.expect("regular conditions have a root"));
    let lambdas: Vec<_> = cfg.asym_n.iter().map(|&n| off + 2.0 * n as f64).collect();
    let t = compare_asymptotics(&pot, &lambdas, &cfg.spectrum.solver)?;
    Output::new(serde_json::to_value(&t)?).file("asymptotics.csv", |w| t.write_csv(w))
}

pub fn expand(cfg: &RunConfig) -> Result<Output> {
    let (minors, cls) = setup(cfg)?;
    let Some(a) = cls.periodic_a else {
        return Err(Error::Precondition("expand needs periodic-type conditions".into()));
    };
    let pot = cfg.potential.build()?;
    let s = spectrum(cfg, &pot, &minors)?;
    let recs = periodic_records(&s, &pot, a, Some(cfg.grid), &cfg.spectrum.solver)?;
    let f_pot = cfg.expand_f.build()?;
    let grid = &recs
        .first()
        .ok_or_else(|| Error::Precondition("no eigenvalues in range".into()))?
        .grid;
    let f: Vec<_> = grid
        .iter()
        .map(|&x| {
            let (p, q) = f_pot.eval(x);
            [p, q]
        })
        .collect();
    let n_max = cfg.n_range[0].abs().max(cfg.n_range[1].abs());
    let r = expansion_conditioning(&f, &recs, n_max)?;
    Ok(Output::new(serde_json::to_value(&r)?))
}
