//! Paired Monte Carlo curves: every replicate draws K_max members once and
//! scores every prefix mean, so step differences share their randomness.

use rayon::prelude::*;

use crate::ensembles::{running_update, EnsembleBuilder, EnsembleSpec};
use crate::error::{invalid, Result};
use crate::losses::LossFunction;
use crate::rng::stream;

use super::{replicate_error, CurveEntry, LossCurve, Method};

/// Replicates per RNG stream. Chunk c uses stream c of the master seed, so
/// results do not depend on how chunks are scheduled.
pub const CHUNK: u64 = 4096;

/// Welford accumulators for value(K) and the step value(K) − value(K−1).
#[derive(Debug, Clone)]
struct Moments {
    n: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
    step_mean: Vec<f64>,
    step_m2: Vec<f64>,
}

impl Moments {
    fn new(kmax: usize) -> Self {
        Moments {
            n: 0.0,
            mean: vec![0.0; kmax],
            m2: vec![0.0; kmax],
            step_mean: vec![0.0; kmax],
            step_m2: vec![0.0; kmax],
        }
    }

    fn push(&mut self, values: &[f64]) {
        self.n += 1.0;
        let n = self.n;
        for k in 0..values.len() {
            let v = values[k];
            let d = v - self.mean[k];
            self.mean[k] += d / n;
            self.m2[k] += d * (v - self.mean[k]);
            if k > 0 {
                let s = v - values[k - 1];
                let ds = s - self.step_mean[k];
                self.step_mean[k] += ds / n;
                self.step_m2[k] += ds * (s - self.step_mean[k]);
            }
        }
    }

    /// Chan et al. pairwise combination.
    fn merge(&mut self, o: &Moments) {
        if o.n == 0.0 {
            return;
        }
        let n = self.n + o.n;
        let f = self.n * o.n / n;
        for k in 0..self.mean.len() {
            let d = o.mean[k] - self.mean[k];
            self.mean[k] += d * o.n / n;
            self.m2[k] += o.m2[k] + d * d * f;
            let ds = o.step_mean[k] - self.step_mean[k];
            self.step_mean[k] += ds * o.n / n;
            self.step_m2[k] += o.step_m2[k] + ds * ds * f;
        }
        self.n = n;
    }
}

fn run_chunk(
    loss: &LossFunction,
    builder: &EnsembleBuilder,
    seed: u64,
    chunk: u64,
    count: u64,
) -> Result<Moments> {
    let mut builder = builder.clone();
    let kmax = builder.size();
    let d = builder.dim();
    let mut rng = stream(seed, chunk);
    let mut draws = vec![0.0; kmax * d];
    let mut mean = vec![0.0; d];
    let mut values = vec![0.0; kmax];
    let mut acc = Moments::new(kmax);
    for r in 0..count {
        builder.fill(&mut rng, &mut draws);
        mean.iter_mut().for_each(|m| *m = 0.0);
        for (k, member) in draws.chunks_exact(d).enumerate() {
            running_update(&mut mean, member, k + 1);
            values[k] = loss
                .eval(&mean)
                .map_err(|e| replicate_error(chunk * CHUNK + r, e))?;
        }
        acc.push(&values);
    }
    Ok(acc)
}

/// Paired MC estimate of value(K) for K = 1..=kmax from `reps` replicates.
pub fn estimate_curve_mc(
    loss: &LossFunction,
    spec: &EnsembleSpec,
    kmax: usize,
    reps: u64,
    seed: u64,
) -> Result<LossCurve> {
    if reps < 100 {
        return Err(invalid("Monte Carlo curves need at least 100 replicates"));
    }
    loss.validate()?;
    let sized = EnsembleSpec {
        size: kmax,
        ..spec.clone()
    };
    let builder = EnsembleBuilder::new(&sized)?;
    let chunks = reps.div_ceil(CHUNK);
    let parts: Vec<Result<Moments>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = CHUNK.min(reps - c * CHUNK);
            run_chunk(loss, &builder, seed, c, count)
        })
        .collect();
    // first failing chunk in index order, independent of scheduling
    let parts: Vec<Moments> = parts.into_iter().collect::<Result<_>>()?;
    let mut total = Moments::new(kmax);
    for p in &parts {
        total.merge(p);
    }
    let n = total.n;
    let se = |m2: f64| (m2 / (n - 1.0) / n).max(0.0).sqrt();
    let entries = (0..kmax)
        .map(|k| CurveEntry {
            k: k + 1,
            value: total.mean[k],
            std_err: se(total.m2[k]),
            method: Method::Mc,
            step_std_err: (k > 0).then(|| se(total.step_m2[k])),
        })
        .collect();
    Ok(LossCurve {
        entries,
        loss: loss.name().to_string(),
        spec: Some(sized),
        seed: Some(seed),
        replications: Some(reps),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Distribution;
    use crate::losses::Target;

    #[test]
    fn squared_gaussian_matches_inverse_k() {
        let loss = LossFunction::Squared { y: Target::Scalar(0.0) };
        let spec = EnsembleSpec::iid(Distribution::gaussian(0.0, 1.0), 10);
        let c = estimate_curve_mc(&loss, &spec, 10, 200_000, 1).unwrap();
        for e in &c.entries {
            let want = 1.0 / e.k as f64;
            assert!((e.value - want).abs() < 4.0 * e.std_err, "K={} {} vs {}", e.k, e.value, want);
        }
    }

    #[test]
    fn point_mass_is_flat_with_zero_error() {
        let loss = LossFunction::Squared { y: Target::Scalar(0.0) };
        let spec = EnsembleSpec::iid(Distribution::point(0.4), 5);
        let c = estimate_curve_mc(&loss, &spec, 5, 1000, 3).unwrap();
        for e in &c.entries {
            assert!((e.value - 0.16).abs() < 1e-15);
            assert!(e.std_err < 1e-12);
        }
    }

    #[test]
    fn deterministic_across_runs() {
        let loss = LossFunction::Sigmoid { label: 0, scale: 0.1 };
        let spec = EnsembleSpec::iid(Distribution::gaussian(0.3, 0.01), 6);
        let a = estimate_curve_mc(&loss, &spec, 6, 10_000, 42).unwrap();
        let b = estimate_curve_mc(&loss, &spec, 6, 10_000, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn replicate_index_in_errors() {
        let loss = LossFunction::Spherical { label: 0 };
        let spec = EnsembleSpec::iid(Distribution::gaussian(0.5, 4.0), 3);
        let err = estimate_curve_mc(&loss, &spec, 3, 1000, 0).unwrap_err();
        assert!(matches!(err, crate::Error::Replicate { .. }), "{err}");
    }
}
