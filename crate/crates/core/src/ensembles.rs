//! Ensemble construction for the dependence structures that matter
//! (i.i.d., random reordering of a fixed list, the duplicate counterexample)
//! and unweighted mean aggregation.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{Distribution, Sampler};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EnsembleSource {
    Distribution(Distribution),
    /// Fixed predictions, one vector per member.
    Fixed(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Structure {
    Iid,
    /// A uniformly random permutation of a fixed list.
    RandomlyReordered,
    /// ŷ₁, ŷ₂ i.i.d. and ŷ₃ = ŷ₁.
    DuplicateThird,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub source: EnsembleSource,
    #[serde(default = "default_structure")]
    pub structure: Structure,
    /// Curve routines resize this to their K_max.
    #[serde(default = "default_size")]
    pub size: usize,
}

fn default_structure() -> Structure {
    Structure::Iid
}

fn default_size() -> usize {
    1
}

impl EnsembleSpec {
    pub fn iid(dist: Distribution, size: usize) -> Self {
        EnsembleSpec {
            source: EnsembleSource::Distribution(dist),
            structure: Structure::Iid,
            size,
        }
    }

    pub fn reordered(list: Vec<Vec<f64>>) -> Self {
        let size = list.len();
        EnsembleSpec {
            source: EnsembleSource::Fixed(list),
            structure: Structure::RandomlyReordered,
            size,
        }
    }

    pub fn duplicate_third(dist: Distribution) -> Self {
        EnsembleSpec {
            source: EnsembleSource::Distribution(dist),
            structure: Structure::DuplicateThird,
            size: 3,
        }
    }

    /// Dimension of each member prediction.
    pub fn dim(&self) -> usize {
        match &self.source {
            EnsembleSource::Distribution(d) => d.dim(),
            EnsembleSource::Fixed(list) => list.first().map_or(0, Vec::len),
        }
    }

    pub fn distribution(&self) -> Option<&Distribution> {
        match &self.source {
            EnsembleSource::Distribution(d) => Some(d),
            EnsembleSource::Fixed(_) => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.size == 0 {
            return Err(invalid("ensemble size must be at least 1"));
        }
        match (&self.source, self.structure) {
            (EnsembleSource::Distribution(d), Structure::Iid) => d.validate(),
            (EnsembleSource::Distribution(d), Structure::DuplicateThird) => {
                if self.size != 3 {
                    return Err(invalid("duplicate_third needs size 3"));
                }
                d.validate()
            }
            (EnsembleSource::Fixed(list), Structure::RandomlyReordered) => {
                if list.is_empty() {
                    return Err(Error::Empty("fixed prediction list"));
                }
                let d = list[0].len();
                if d == 0 || list.iter().any(|p| p.len() != d) {
                    return Err(invalid("fixed predictions must share one nonzero dimension"));
                }
                if list.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(invalid("fixed predictions must be finite"));
                }
                if self.size > list.len() {
                    return Err(Error::Dimension {
                        expected: list.len(),
                        got: self.size,
                    });
                }
                Ok(())
            }
            (EnsembleSource::Fixed(_), s) => Err(invalid(format!(
                "structure {s:?} needs a distribution, not a fixed list"
            ))),
            (EnsembleSource::Distribution(_), Structure::RandomlyReordered) => {
                Err(invalid("randomly_reordered needs a fixed prediction list"))
            }
        }
    }

    /// Whether the member sequence is exchangeable.
    pub fn is_exchangeable(&self) -> bool {
        self.structure != Structure::DuplicateThird
    }
}

/// Reusable generator of ensembles into a flat K×d buffer.
#[derive(Debug, Clone)]
pub struct EnsembleBuilder {
    spec: EnsembleSpec,
    sampler: Option<Sampler>,
    order: Vec<usize>,
}

impl EnsembleBuilder {
    pub fn new(spec: &EnsembleSpec) -> Result<Self> {
        spec.validate()?;
        let sampler = spec.distribution().map(Distribution::sampler).transpose()?;
        let order = match &spec.source {
            EnsembleSource::Fixed(list) => (0..list.len()).collect(),
            EnsembleSource::Distribution(_) => Vec::new(),
        };
        Ok(EnsembleBuilder {
            spec: spec.clone(),
            sampler,
            order,
        })
    }

    pub fn size(&self) -> usize {
        self.spec.size
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    /// Writes member k at `out[k·d .. (k+1)·d]`.
    pub fn fill<R: Rng + ?Sized>(&mut self, rng: &mut R, out: &mut [f64]) {
        let d = self.dim();
        let k = self.spec.size;
        debug_assert_eq!(out.len(), k * d);
        match (&self.spec.source, self.spec.structure) {
            (EnsembleSource::Fixed(list), _) => {
                self.order.shuffle(rng);
                for (slot, &i) in out.chunks_exact_mut(d).zip(&self.order) {
                    slot.copy_from_slice(&list[i]);
                }
            }
            (EnsembleSource::Distribution(_), Structure::DuplicateThird) => {
                let s = self.sampler.as_ref().expect("sampler");
                s.draw(rng, &mut out[..d]);
                s.draw(rng, &mut out[d..2 * d]);
                let (head, tail) = out.split_at_mut(2 * d);
                tail[..d].copy_from_slice(&head[..d]);
            }
            (EnsembleSource::Distribution(_), _) => {
                let s = self.sampler.as_ref().expect("sampler");
                for slot in out.chunks_exact_mut(d) {
                    s.draw(rng, slot);
                }
            }
        }
    }
}

/// K member predictions drawn from sub-stream 0 of `seed`.
pub fn build_ensemble(spec: &EnsembleSpec, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut b = EnsembleBuilder::new(spec)?;
    let d = b.dim();
    let mut flat = vec![0.0; b.size() * d];
    let mut rng = crate::rng::stream(seed, 0);
    b.fill(&mut rng, &mut flat);
    Ok(flat.chunks_exact(d).map(<[f64]>::to_vec).collect())
}

/// Running means ȳ₁, …, ȳ_K via ȳ_k = ȳ_{k−1} + (ŷ_k − ȳ_{k−1})/k.
pub fn prefix_means(draws: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let first = draws.first().ok_or(Error::Empty("draws"))?;
    let d = first.len();
    if draws.iter().any(|x| x.len() != d) {
        return Err(invalid("draws must share one dimension"));
    }
    let mut out = Vec::with_capacity(draws.len());
    let mut m = vec![0.0; d];
    for (k, x) in draws.iter().enumerate() {
        running_update(&mut m, x, k + 1);
        out.push(m.clone());
    }
    Ok(out)
}

/// One step of the running mean after the k-th member (1-based).
#[inline]
pub fn running_update(mean: &mut [f64], x: &[f64], k: usize) {
    let inv = 1.0 / k as f64;
    for (m, &v) in mean.iter_mut().zip(x) {
        *m += (v - *m) * inv;
    }
}

/// 1 iff the mean vote exceeds ½ (ties → 0).
pub fn majority_vote(votes: &[u8]) -> Result<u8> {
    if votes.is_empty() {
        return Err(Error::Empty("votes"));
    }
    if votes.iter().any(|&v| v > 1) {
        return Err(invalid("votes must be 0 or 1"));
    }
    let ones = votes.iter().map(|&v| v as usize).sum::<usize>();
    Ok(u8::from(2 * ones > votes.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn prefix_mean_examples() {
        let v = |xs: &[f64]| xs.iter().map(|&x| vec![x]).collect::<Vec<_>>();
        assert_eq!(prefix_means(&v(&[1.0, 3.0])).unwrap(), v(&[1.0, 2.0]));
        assert_eq!(prefix_means(&v(&[0.7; 5])).unwrap(), v(&[0.7; 5]));
        assert_eq!(
            prefix_means(&v(&[0.0, 1.0, 0.5, 0.5])).unwrap(),
            v(&[0.0, 0.5, 0.5, 0.5])
        );
        assert!(prefix_means(&[]).is_err());
    }

    #[test]
    fn majority_vote_examples() {
        assert_eq!(majority_vote(&[1, 1, 0]).unwrap(), 1);
        assert_eq!(majority_vote(&[1, 0]).unwrap(), 0);
        assert_eq!(majority_vote(&[0, 0, 0, 1]).unwrap(), 0);
    }

    #[test]
    fn iid_draws_are_distinct() {
        let spec = EnsembleSpec::iid(Distribution::gaussian(0.0, 1.0), 5);
        let e = build_ensemble(&spec, 9).unwrap();
        for i in 0..5 {
            for j in 0..i {
                assert_ne!(e[i], e[j]);
            }
        }
    }

    #[test]
    fn duplicate_third_copies_first() {
        let spec = EnsembleSpec::duplicate_third(Distribution::gaussian(0.0, 1.0));
        for seed in 0..20 {
            let e = build_ensemble(&spec, seed).unwrap();
            assert_eq!(e[2], e[0]);
            assert_ne!(e[1], e[0]);
        }
        let bad = EnsembleSpec { size: 4, ..spec };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn reordering_is_uniform_over_permutations() {
        let spec = EnsembleSpec::reordered(vec![vec![0.0], vec![1.0], vec![2.0]]);
        let mut counts: HashMap<Vec<u8>, usize> = HashMap::new();
        let n = 60_000;
        for seed in 0..n {
            let e = build_ensemble(&spec, seed).unwrap();
            *counts.entry(e.iter().map(|x| x[0] as u8).collect()).or_default() += 1;
        }
        assert_eq!(counts.len(), 6);
        let expected = n as f64 / 6.0;
        let chi2: f64 = counts.values().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 5 degrees of freedom, 0.999 quantile
        assert!(chi2 < 20.52, "chi-square {chi2}");
    }

    #[test]
    fn fixed_list_size_mismatch() {
        let mut spec = EnsembleSpec::reordered(vec![vec![0.0], vec![1.0]]);
        spec.size = 3;
        assert!(matches!(spec.validate(), Err(Error::Dimension { .. })));
    }
}
