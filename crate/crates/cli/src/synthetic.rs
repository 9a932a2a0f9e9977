//! Per-item score models split by whether their asymptotic prediction is
//! correct, with averaged 0/1-error and cross-entropy curves per subset.

use ensemble_core::classification::{assumption_classify, error_curve, Assumption, ErrorMethod, MarginModel};
use ensemble_core::curves::{estimate_curve_mc, CurveEntry, LossCurve, Method};
use ensemble_core::distributions::Distribution;
use ensemble_core::ensembles::EnsembleSpec;
use ensemble_core::losses::LossFunction;
use ensemble_core::rng::stream;
use ensemble_core::Error;
use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::GenerateItems;

pub fn generate_items(g: &GenerateItems, seed: u64) -> Result<Vec<MarginModel>, Error> {
    if g.classes < 2 || g.correct > g.count {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 classes and correct <= count, got {} classes, {} of {}",
            g.classes, g.correct, g.count
        )));
    }
    let ordered = |r: [f64; 2]| r[0] > 0.0 && r[0] <= r[1] && r[1].is_finite();
    if !ordered(g.margin) || !ordered(g.sd) {
        return Err(Error::InvalidParameter("margin and sd ranges must be positive [lo, hi]".into()));
    }
    (0..g.count)
        .map(|i| {
            let mut rng = stream(seed, i as u64);
            let m = rng.random_range(g.margin[0]..=g.margin[1]);
            let sd = rng.random_range(g.sd[0]..=g.sd[1]);
            let true_class = 1 + rng.random_range(0..g.classes);
            // correct items score the true class m above the rest, the
            // others score every wrong class m above it
            let favoured = i < g.correct;
            let mean: Vec<f64> = (1..=g.classes)
                .map(|c| if (c == true_class) == favoured { m } else { 0.0 })
                .collect();
            let cov = (0..g.classes)
                .map(|r| (0..g.classes).map(|c| if r == c { sd * sd } else { 0.0 }).collect())
                .collect();
            MarginModel::new(Distribution::gaussian_mv(mean, cov), true_class)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ItemSummary {
    pub index: usize,
    pub assumption: Assumption,
    pub seed: u64,
    pub error_method: Method,
}

#[derive(Debug, Clone)]
pub struct SplitResult {
    pub items: Vec<ItemSummary>,
    pub error: Panels,
    pub cross_entropy: Panels,
}

#[derive(Debug, Clone)]
pub struct Panels {
    pub overall: LossCurve,
    pub correct: Option<LossCurve>,
    pub incorrect: Option<LossCurve>,
}

struct ItemCurves {
    summary: ItemSummary,
    error: LossCurve,
    ce: LossCurve,
}

/// Exact error curves where a Gaussian regime applies, MC otherwise;
/// cross-entropy of the softmax of the averaged scores by paired MC. Item i
/// draws from streams seeded by the first word of stream (seed, i).
pub fn synthetic_split(models: &[MarginModel], kmax: usize, reps: u64, seed: u64) -> Result<SplitResult, Error> {
    if models.is_empty() {
        return Err(Error::Empty("item list"));
    }
    let per_item: Vec<ItemCurves> = models
        .par_iter()
        .enumerate()
        .map(|(i, model)| item_curves(i, model, kmax, reps, stream(seed, i as u64).next_u64()))
        .collect::<Result<_, Error>>()?;

    let bucket = |a: Option<Assumption>| -> Vec<&ItemCurves> {
        per_item.iter().filter(|c| a.is_none_or(|a| c.summary.assumption == a)).collect()
    };
    let panels = |pick: fn(&ItemCurves) -> &LossCurve, label: &str| -> Panels {
        let avg = |items: Vec<&ItemCurves>, which: &str| {
            let curves: Vec<&LossCurve> = items.into_iter().map(pick).collect();
            (!curves.is_empty()).then(|| average_curves(&format!("{label}_{which}"), &curves))
        };
        Panels {
            overall: avg(bucket(None), "overall").expect("item list is nonempty"),
            correct: avg(bucket(Some(Assumption::Correct)), "correct"),
            incorrect: avg(bucket(Some(Assumption::CompletelyIncorrect)), "incorrect"),
        }
    };
    Ok(SplitResult {
        error: panels(|c| &c.error, "zero_one"),
        cross_entropy: panels(|c| &c.ce, "softmax_cross_entropy"),
        items: per_item.iter().map(|c| c.summary.clone()).collect(),
    })
}

fn item_curves(index: usize, model: &MarginModel, kmax: usize, reps: u64, seed: u64) -> Result<ItemCurves, Error> {
    let wrap = |e: Error| Error::Replicate {
        replicate: index as u64,
        source: Box::new(e),
    };
    let assumption = assumption_classify(model).map_err(wrap)?.assumption;
    let error = match error_curve(model, kmax, ErrorMethod::ExactGaussian) {
        Err(Error::UnsupportedRegime(_)) => error_curve(model, kmax, ErrorMethod::Mc { reps, seed }),
        other => other,
    }
    .map_err(wrap)?;
    let ce_loss = LossFunction::SoftmaxCrossEntropy {
        class: model.true_class,
        classes: model.n_classes,
    };
    let spec = EnsembleSpec::iid(model.score_distribution.clone(), kmax);
    let ce = estimate_curve_mc(&ce_loss, &spec, kmax, reps, seed).map_err(wrap)?;
    Ok(ItemCurves {
        summary: ItemSummary {
            index,
            assumption,
            seed,
            error_method: error.entries[0].method,
        },
        error,
        ce,
    })
}

/// Pointwise mean of independent curves over a shared K grid; standard
/// errors add in quadrature and scale by 1/N.
pub fn average_curves(label: &str, curves: &[&LossCurve]) -> LossCurve {
    let n = curves.len() as f64;
    let grid = &curves[0].entries;
    let method = curves
        .iter()
        .flat_map(|c| c.entries.iter().map(|e| e.method))
        .max_by_key(|m| match m {
            Method::Mc => 3,
            Method::Quadrature => 2,
            Method::ExactEnumeration => 1,
            Method::ExactClosedForm => 0,
        })
        .unwrap_or(Method::ExactClosedForm);
    let entries = grid
        .iter()
        .enumerate()
        .map(|(j, e0)| {
            let at = |c: &&LossCurve| c.entries[j];
            let value = curves.iter().map(|c| at(c).value).sum::<f64>() / n;
            let std_err = curves.iter().map(|c| at(c).std_err.powi(2)).sum::<f64>().sqrt() / n;
            let step_std_err = (method == Method::Mc && j > 0).then(|| {
                curves
                    .iter()
                    .map(|c| {
                        let (prev, cur) = (c.entries[j - 1], at(c));
                        cur.step_std_err
                            .unwrap_or_else(|| (prev.std_err.powi(2) + cur.std_err.powi(2)).sqrt())
                            .powi(2)
                    })
                    .sum::<f64>()
                    .sqrt()
                    / n
            });
            CurveEntry {
                k: e0.k,
                value,
                std_err,
                method,
                step_std_err,
            }
        })
        .collect();
    LossCurve {
        entries,
        loss: label.to_string(),
        spec: None,
        seed: curves[0].seed,
        replications: curves.iter().find_map(|c| c.replications),
    }
}
