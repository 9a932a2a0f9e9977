//! Scenario execution. Everything here is pure; [`write_output`] does the I/O.

use std::fs;
use std::path::{Path, PathBuf};

use ensemble_core::classification::{assumption_classify, error_curve, ErrorMethod, MarginModel};
use ensemble_core::curves::{
    estimate_curve_mc, exact_curve, fmt_g17, monotonicity_report, strong_bound_check, LossCurve,
};
use ensemble_core::delta::{delta_expansion, delta_predict, hessian_direction};
use ensemble_core::distributions::Distribution;
use ensemble_core::ensembles::{EnsembleSource, EnsembleSpec, Structure};
use ensemble_core::ldp::{
    bernoulli_sequence, eventual_decrease_verdict, lattice_tail_sequence, mass_restored_lattice,
    petrov_asymptote, solve_tilt, stable_counterexample, PetrovVariant, StableFamily, TailSequence,
};
use ensemble_core::losses::LossFunction;
use ensemble_core::Error;
use serde_json::{json, Value};

use crate::config::*;
use crate::svg::{line_chart, Series};
use crate::synthetic::{generate_items, synthetic_split};
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub files: Vec<OutputFile>,
    pub summary: Value,
    pub plot: Option<String>,
}

impl RunOutput {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|f| f.name == name).map(|f| f.contents.as_str())
    }
}

fn config_err(e: Error) -> CliError {
    CliError::Config(e.to_string())
}

fn csv(name: &str, contents: String) -> OutputFile {
    OutputFile {
        name: name.to_string(),
        contents,
    }
}

fn curve_series(curve: &LossCurve) -> Vec<(f64, f64)> {
    curve.entries.iter().map(|e| (e.k as f64, e.value)).collect()
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<RunOutput, CliError> {
    let mut out = match config {
        ScenarioConfig::Curve(s) => run_curve(s)?,
        ScenarioConfig::Delta(s) => run_delta(s)?,
        ScenarioConfig::Tails(s) => run_tails(s)?,
        ScenarioConfig::Margins(s) => run_margins(s)?,
        ScenarioConfig::Counterexamples(s) => run_counterexamples(s)?,
        ScenarioConfig::SyntheticSplit(s) => run_synthetic(s)?,
    };
    if !config.svg() {
        out.plot = None;
    }
    if let Value::Object(m) = &mut out.summary {
        m.insert("command".into(), json!(config.command()));
        m.insert("config".into(), serde_json::to_value(config.without_out()).expect("configs serialize"));
    }
    Ok(out)
}

/// Writes every file plus `summary.json` (and `plot.svg`) under `dir`.
pub fn write_output(dir: &Path, out: &RunOutput) -> Result<Vec<PathBuf>, CliError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut written = Vec::new();
    let summary = serde_json::to_string_pretty(&out.summary).expect("summaries serialize") + "\n";
    let extra = [
        Some(("summary.json", summary)),
        out.plot.clone().map(|p| ("plot.svg", p)),
    ];
    let files = out
        .files
        .iter()
        .map(|f| (f.name.as_str(), f.contents.clone()))
        .chain(extra.into_iter().flatten());
    for (name, contents) in files {
        let path = dir.join(name);
        fs::write(&path, contents).map_err(io(&path))?;
        written.push(path);
    }
    Ok(written)
}

fn estimate(
    loss: &LossFunction,
    spec: &EnsembleSpec,
    kmax: usize,
    method: CurveMethod,
    reps: u64,
    seed: u64,
) -> Result<LossCurve, Error> {
    match method {
        CurveMethod::Exact => exact_curve(loss, spec, kmax),
        CurveMethod::Mc => estimate_curve_mc(loss, spec, kmax, reps, seed),
        CurveMethod::Auto => match exact_curve(loss, spec, kmax) {
            Err(Error::UnsupportedRegime(_) | Error::Unsupported(_)) => {
                estimate_curve_mc(loss, spec, kmax, reps, seed)
            }
            other => other,
        },
    }
}

/// (trace of the member covariance, pairwise correlation) for exchangeable
/// ensembles with a known second moment.
fn exchangeable_moments(spec: &EnsembleSpec) -> Option<(f64, f64)> {
    match (&spec.source, spec.structure) {
        (EnsembleSource::Distribution(d), Structure::Iid) => d.total_variance().map(|t| (t, 0.0)),
        (EnsembleSource::Fixed(list), Structure::RandomlyReordered) if list.len() >= 2 => {
            let n = list.len() as f64;
            let dim = list[0].len();
            let tr = (0..dim)
                .map(|j| {
                    let m = list.iter().map(|x| x[j]).sum::<f64>() / n;
                    list.iter().map(|x| (x[j] - m).powi(2)).sum::<f64>() / n
                })
                .sum();
            Some((tr, -1.0 / (n - 1.0)))
        }
        _ => None,
    }
}

fn run_curve(s: &CurveScenario) -> Result<RunOutput, CliError> {
    s.loss.validate().map_err(config_err)?;
    s.ensemble.validate().map_err(config_err)?;
    let curve = estimate(&s.loss, &s.ensemble, s.kmax, s.method, s.reps, s.seed)?;
    let report = monotonicity_report(&curve);
    let mu = s.loss.convexity_tag().modulus();
    let bound = match exchangeable_moments(&s.ensemble) {
        Some((tr, rho)) if mu > 0.0 => Some(strong_bound_check(&curve, mu, tr, rho)?),
        _ => None,
    };
    let summary = json!({
        "loss": s.loss.name(),
        "method": curve.entries[0].method,
        "report": report,
        "strong_bound": bound.map(|rows| json!({
            "modulus": mu,
            "all_satisfied": rows.iter().all(|r| r.satisfied),
            "rows": rows,
        })),
    });
    let plot = line_chart(
        &format!("expected {} loss", s.loss.name()),
        "K",
        "value",
        &[Series { label: s.loss.name(), points: curve_series(&curve) }],
    );
    Ok(RunOutput {
        files: vec![csv("curve.csv", curve.to_csv())],
        summary,
        plot: Some(plot),
    })
}

fn run_delta(s: &DeltaScenario) -> Result<RunOutput, CliError> {
    s.loss.validate().map_err(config_err)?;
    s.distribution.validate().map_err(config_err)?;
    if s.kmin == 0 || s.kmin > s.kmax {
        return Err(CliError::Config(format!("need 1 <= kmin <= kmax, got {}..{}", s.kmin, s.kmax)));
    }
    let exp = delta_expansion(&s.loss, &s.distribution)?;
    let exact = exact_curve(&s.loss, &EnsembleSpec::iid(s.distribution.clone(), s.kmax), s.kmax)?;
    let mut table = String::from("K,prediction,exact,abs_error,scaled_error\n");
    let mut scaled = Vec::new();
    for e in exact.entries.iter().filter(|e| e.k >= s.kmin) {
        let p = delta_predict(&exp, e.k);
        let err = (p - e.value).abs();
        let sc = err * (e.k as f64).powf(2.5);
        scaled.push(sc);
        table.push_str(&format!(
            "{},{},{},{},{}\n",
            e.k,
            fmt_g17(p),
            fmt_g17(e.value),
            fmt_g17(err),
            fmt_g17(sc)
        ));
    }
    let points = if s.y_inf.is_empty() {
        vec![s.distribution.mean().ok_or_else(|| CliError::Config("distribution has no mean".into()))?]
    } else {
        s.y_inf.clone()
    };
    let directions = points
        .iter()
        .map(|y| Ok(json!({ "y_inf": y, "direction": hessian_direction(&s.loss, y, s.tol)? })))
        .collect::<Result<Vec<_>, Error>>()?;
    let (lo, hi) = scaled
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(a, b), &v| (a.min(v), b.max(v)));
    let summary = json!({
        "loss": s.loss.name(),
        "expansion": exp,
        "directions": directions,
        "exact_report": monotonicity_report(&exact),
        "scaled_error_max_over_min": hi / lo,
    });
    let predicted: Vec<(f64, f64)> = (s.kmin..=s.kmax).map(|k| (k as f64, delta_predict(&exp, k))).collect();
    let tail: Vec<(f64, f64)> = curve_series(&exact).into_iter().filter(|p| p.0 >= s.kmin as f64).collect();
    let plot = line_chart(
        "delta expansion",
        "K",
        "expected loss",
        &[
            Series { label: "exact", points: tail },
            Series { label: "delta", points: predicted },
        ],
    );
    Ok(RunOutput {
        files: vec![csv("exact.csv", exact.to_csv()), csv("delta.csv", table)],
        summary,
        plot: Some(plot),
    })
}

fn tail_values(dist: &Distribution, c: f64, nmax: usize, strict: bool) -> Result<Vec<f64>, Error> {
    if dist.lattice_data().is_some() {
        Ok(lattice_tail_sequence(dist, c, nmax, strict)?.values)
    } else {
        (1..=nmax).map(|n| dist.tail_probability(n, c, strict)).collect()
    }
}

fn run_tails(s: &TailsScenario) -> Result<RunOutput, CliError> {
    s.distribution.validate().map_err(config_err)?;
    if s.distribution.dim() != 1 {
        return Err(CliError::Config("tails need a univariate distribution".into()));
    }
    if !(s.epsilon > 0.0) || s.nmax == 0 {
        return Err(CliError::Config("need epsilon > 0 and nmax >= 1".into()));
    }
    let mean = s.distribution.mean().map(|m| m[0]);
    let c = mean.unwrap_or(0.0) + s.epsilon;
    let exact = tail_values(&s.distribution, c, s.nmax, s.strict)?;
    let lattice = s.distribution.lattice_data().is_some();
    let variant = match (lattice, s.strict) {
        (false, _) => PetrovVariant::Nonlattice,
        (true, false) => PetrovVariant::LatticeGeq,
        (true, true) => PetrovVariant::LatticeStrict,
    };
    let (petrov, asymptote) = match solve_tilt(&s.distribution, c) {
        Ok(sol) => {
            let a = (1..=s.nmax)
                .map(|n| petrov_asymptote(&sol, n, variant))
                .collect::<Result<Vec<_>, _>>()?;
            (json!({ "solution": sol, "variant": variant }), a)
        }
        Err(e) => (json!({ "error": e.to_string() }), vec![f64::NAN; s.nmax]),
    };
    let mut table = String::from("n,exact,asymptote,ratio\n");
    for (i, (p, a)) in exact.iter().zip(&asymptote).enumerate() {
        table.push_str(&format!("{},{},{},{}\n", i + 1, fmt_g17(*p), fmt_g17(*a), fmt_g17(a / p)));
    }
    let seq = TailSequence {
        label: format!("{}_tail", s.distribution.name()),
        threshold: c,
        strict: s.strict,
        values: exact.clone(),
    };
    let verdict = match mean {
        Some(_) => json!(eventual_decrease_verdict(&s.distribution, s.epsilon)?),
        None => json!(null),
    };
    let summary = json!({
        "threshold": c,
        "strict": s.strict,
        "petrov": petrov,
        "verdict": verdict,
        "strict_decrease_onset": seq.strict_decrease_onset(),
        "report": monotonicity_report(&seq.to_curve()),
    });
    let log10 = |v: &[f64]| -> Vec<(f64, f64)> {
        v.iter().enumerate().map(|(i, p)| ((i + 1) as f64, p.log10())).collect()
    };
    let plot = line_chart(
        "tail probability",
        "n",
        "log10 p",
        &[
            Series { label: "exact", points: log10(&exact) },
            Series { label: "asymptote", points: log10(&asymptote) },
        ],
    );
    Ok(RunOutput {
        files: vec![csv("tails.csv", table)],
        summary,
        plot: Some(plot),
    })
}

fn margin_curve(model: &MarginModel, kmax: usize, method: CurveMethod, reps: u64, seed: u64) -> Result<LossCurve, Error> {
    let mc = ErrorMethod::Mc { reps, seed };
    match method {
        CurveMethod::Exact => error_curve(model, kmax, ErrorMethod::ExactGaussian),
        CurveMethod::Mc => error_curve(model, kmax, mc),
        CurveMethod::Auto => match error_curve(model, kmax, ErrorMethod::ExactGaussian) {
            Err(Error::UnsupportedRegime(_)) => error_curve(model, kmax, mc),
            other => other,
        },
    }
}

fn run_margins(s: &MarginsScenario) -> Result<RunOutput, CliError> {
    s.model.validate().map_err(config_err)?;
    let curve = margin_curve(&s.model, s.kmax, s.method, s.reps, s.seed)?;
    let summary = json!({
        "method": curve.entries[0].method,
        "assumption": assumption_classify(&s.model)?,
        "report": monotonicity_report(&curve),
    });
    let plot = line_chart("classification error", "K", "error", &[Series { label: "error", points: curve_series(&curve) }]);
    Ok(RunOutput {
        files: vec![csv("error.csv", curve.to_csv())],
        summary,
        plot: Some(plot),
    })
}

fn run_counterexamples(s: &CounterexamplesScenario) -> Result<RunOutput, CliError> {
    let condorcet = bernoulli_sequence(s.condorcet_p, s.condorcet_epsilon, s.condorcet_nmax).map_err(config_err)?;
    let restored = mass_restored_lattice(s.mass_mu, s.mass_epsilon).map_err(config_err)?;
    let mass = lattice_tail_sequence(&restored.distribution, restored.atom, s.mass_nmax, true)?;
    let levy = stable_counterexample(StableFamily::Levy, s.stable_epsilon, s.stable_nmax).map_err(config_err)?;
    let cauchy = stable_counterexample(StableFamily::Cauchy, s.stable_epsilon, s.stable_nmax)?;

    let named = [
        ("condorcet-binomial", &condorcet),
        ("mass-restored", &mass),
        ("levy", &levy),
        ("cauchy", &cauchy),
    ];
    let mut files = Vec::new();
    let mut sequences = serde_json::Map::new();
    let mut series = Vec::new();
    for (name, seq) in named {
        let curve = seq.to_curve();
        let report = monotonicity_report(&curve);
        sequences.insert(
            name.into(),
            json!({
                "threshold": seq.threshold,
                "strict": seq.strict,
                "verdict": report.verdict.label(),
                "k0": report.k0,
                "report": report,
            }),
        );
        files.push(csv(&format!("{name}.csv"), curve.to_csv()));
        series.push(Series { label: name, points: curve_series(&curve) });
    }
    let odd_decreasing = condorcet
        .values
        .iter()
        .step_by(2)
        .collect::<Vec<_>>()
        .windows(2)
        .all(|w| w[1] < w[0]);
    let summary = json!({
        "sequences": sequences,
        "condorcet_odd_subsequence_decreasing": odd_decreasing,
        "mass_restored": {
            "masses": restored.masses,
            "atom": restored.atom,
            "effective_mean": restored.effective_mean,
            "verdict": restored.verdict,
            "strict_decrease_onset": mass.strict_decrease_onset(),
        },
    });
    let plot = line_chart("counterexamples", "n", "p_n", &series);
    Ok(RunOutput { files, summary, plot: Some(plot) })
}

fn run_synthetic(s: &SyntheticScenario) -> Result<RunOutput, CliError> {
    let items = match &s.items {
        ItemSource::List(items) => {
            for m in items {
                m.validate().map_err(config_err)?;
            }
            items.clone()
        }
        ItemSource::Generate(g) => generate_items(g, g.seed.unwrap_or(s.seed)).map_err(config_err)?,
    };
    let split = synthetic_split(&items, s.kmax, s.reps, s.seed)?;
    let mut files = Vec::new();
    let mut panels = serde_json::Map::new();
    let mut series = Vec::new();
    for (kind, p) in [("error", &split.error), ("ce", &split.cross_entropy)] {
        for (which, curve) in [("overall", Some(&p.overall)), ("correct", p.correct.as_ref()), ("incorrect", p.incorrect.as_ref())] {
            let name = format!("{kind}-{which}");
            let Some(curve) = curve else {
                panels.insert(name, Value::Null);
                continue;
            };
            let report = monotonicity_report(curve);
            panels.insert(name.clone(), json!({ "verdict": report.verdict.label(), "k0": report.k0, "report": report }));
            files.push(csv(&format!("{name}.csv"), curve.to_csv()));
            if kind == "error" {
                series.push((which, curve_series(curve)));
            }
        }
    }
    let count = |a| split.items.iter().filter(|i| i.assumption == a).count();
    use ensemble_core::classification::Assumption::*;
    let mixed: Vec<usize> = split.items.iter().filter(|i| i.assumption == Mixed).map(|i| i.index).collect();
    let summary = json!({
        "counts": {
            "correct": count(Correct),
            "completely_incorrect": count(CompletelyIncorrect),
            "mixed": mixed.len(),
        },
        "mixed_items": mixed,
        "panels": panels,
        "items": split.items,
    });
    let series: Vec<Series> = series.iter().map(|(l, p)| Series { label: l, points: p.clone() }).collect();
    let plot = line_chart("ensemble 0/1 error", "K", "error", &series);
    Ok(RunOutput { files, summary, plot: Some(plot) })
}
