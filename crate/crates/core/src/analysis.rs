//! Heritability by mid-parent regression, diversity and selection response.

use crate::evolution::{LineageRecord, RunLog};
use crate::traits::{Trait, TraitVector};

/// Mid-parent variance below this makes the slope undefined.
pub const DEGENERATE_VARIANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regression {
    Fit {
        slope: f64,
        intercept: f64,
    },
    /// Fewer than two pairs, or no spread in the mid-parent values.
    Undefined,
}

impl Regression {
    pub fn slope(&self) -> Option<f64> {
        match *self {
            Regression::Fit { slope, .. } => Some(slope),
            Regression::Undefined => None,
        }
    }

    pub fn intercept(&self) -> Option<f64> {
        match *self {
            Regression::Fit { intercept, .. } => Some(intercept),
            Regression::Undefined => None,
        }
    }
}

/// Ordinary least squares of offspring on mid-parent value.
pub fn midparent_regression(pairs: &[(f64, f64)]) -> Regression {
    let n = pairs.len();
    if n < 2 {
        return Regression::Undefined;
    }
    let nf = n as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / nf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(x, y) in pairs {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx / nf < DEGENERATE_VARIANCE {
        return Regression::Undefined;
    }
    let slope = sxy / sxx;
    Regression::Fit { slope, intercept: my - slope * mx }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeritabilityEstimate {
    pub trait_kind: Trait,
    /// Generation of the parents.
    pub generation: usize,
    pub pairs: usize,
    pub regression: Regression,
}

impl HeritabilityEstimate {
    pub fn slope(&self) -> Option<f64> {
        self.regression.slope()
    }

    pub fn is_degenerate(&self) -> bool {
        self.regression == Regression::Undefined
    }

    /// Slope outside [0, 1]; reported, not clamped.
    pub fn out_of_range(&self) -> bool {
        self.slope().is_some_and(|s| !(0.0..=1.0).contains(&s))
    }
}

pub fn midparent(a: &TraitVector, b: &TraitVector, t: Trait) -> f64 {
    (a.get(t) + b.get(t)) / 2.0
}

pub fn midparent_pairs<'a>(records: impl IntoIterator<Item = &'a LineageRecord>, t: Trait) -> Vec<(f64, f64)> {
    records
        .into_iter()
        .map(|r| (midparent(&r.parent_traits[0], &r.parent_traits[1], t), r.offspring_traits.get(t)))
        .collect()
}

pub fn estimate<'a>(
    records: impl IntoIterator<Item = &'a LineageRecord>,
    t: Trait,
    generation: usize,
) -> HeritabilityEstimate {
    let pairs = midparent_pairs(records, t);
    HeritabilityEstimate { trait_kind: t, generation, pairs: pairs.len(), regression: midparent_regression(&pairs) }
}

/// One estimate per trait for every parent generation with offspring, in
/// generation-major, [`Trait::ALL`] order.
pub fn heritability_per_generation(log: &RunLog) -> Vec<HeritabilityEstimate> {
    let mut out = Vec::new();
    for (g, records) in log.lineage.iter().enumerate() {
        for t in Trait::ALL {
            out.push(estimate(records, t, g));
        }
    }
    out
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// For every individual, the mean distance to all others.
pub fn mean_distances<T>(items: &[T], dist: impl Fn(&T, &T) -> f64) -> Vec<f64> {
    let n = items.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let mut sums = vec![0.0; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = dist(&items[i], &items[j]);
            sums[i] += d;
            sums[j] += d;
        }
    }
    sums.into_iter().map(|s| s / (n - 1) as f64).collect()
}

/// Per-individual mean absolute difference in one trait.
pub fn trait_distances(pop: &[TraitVector], t: Trait) -> Vec<f64> {
    let v: Vec<f64> = pop.iter().map(|p| p.get(t)).collect();
    mean_distances(&v, |a, b| (a - b).abs())
}

/// Mean over individuals of [`trait_distances`].
pub fn trait_diversity(pop: &[TraitVector], t: Trait) -> f64 {
    mean(&trait_distances(pop, t))
}

/// Per-trait min and max used to scale vectors into the unit cube.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraitBounds {
    pub lo: [f64; 6],
    pub hi: [f64; 6],
}

impl TraitBounds {
    pub fn from_vectors<'a>(vs: impl IntoIterator<Item = &'a TraitVector>) -> Self {
        let mut b = TraitBounds { lo: [f64::INFINITY; 6], hi: [f64::NEG_INFINITY; 6] };
        for v in vs {
            for (k, x) in v.to_array().into_iter().enumerate() {
                b.lo[k] = b.lo[k].min(x);
                b.hi[k] = b.hi[k].max(x);
            }
        }
        b
    }

    /// Constant coordinates map to 0.
    pub fn normalize(&self, v: &TraitVector) -> [f64; 6] {
        let a = v.to_array();
        std::array::from_fn(|k| {
            let span = self.hi[k] - self.lo[k];
            if span > 0.0 {
                (a[k] - self.lo[k]) / span
            } else {
                0.0
            }
        })
    }
}

/// Per-individual mean Euclidean distance between normalized vectors.
pub fn population_distances(pop: &[TraitVector], bounds: &TraitBounds) -> Vec<f64> {
    let norm: Vec<[f64; 6]> = pop.iter().map(|v| bounds.normalize(v)).collect();
    mean_distances(&norm, |a, b| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
}

pub fn population_diversity(pop: &[TraitVector], bounds: &TraitBounds) -> f64 {
    mean(&population_distances(pop, bounds))
}

/// Mean of the selected parents minus the population mean.
pub fn selection_differential(selected: &[f64], population: &[f64]) -> f64 {
    mean(selected) - mean(population)
}

pub fn response_to_selection(h2: f64, s: f64) -> f64 {
    h2 * s
}

/// First differences of a per-generation series.
pub fn rate_of_change(series: &[f64]) -> Vec<f64> {
    series.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Phenotypic variance split into genetic parts and environment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceDecomposition {
    pub additive: f64,
    pub non_additive: f64,
    pub mutation: f64,
    /// Always 0 for a noise-free simulator.
    pub environment: f64,
}

impl VarianceDecomposition {
    pub fn new(additive: f64, non_additive: f64, mutation: f64, environment: f64) -> Option<Self> {
        let all = [additive, non_additive, mutation, environment];
        all.iter().all(|v| v.is_finite() && *v >= 0.0).then_some(VarianceDecomposition {
            additive,
            non_additive,
            mutation,
            environment,
        })
    }

    pub fn genetic(&self) -> f64 {
        self.additive + self.non_additive + self.mutation
    }

    pub fn phenotypic(&self) -> f64 {
        self.genetic() + self.environment
    }

    /// V_A / V_P.
    pub fn narrow_sense(&self) -> f64 {
        self.additive / self.phenotypic()
    }

    /// V_G / V_P.
    pub fn broad_sense(&self) -> f64 {
        self.genetic() / self.phenotypic()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tv(x: f64) -> TraitVector {
        TraitVector::from_array([x, 1.0 + x * 10.0, x, x, x, x])
    }

    #[test]
    fn regression_anchors() {
        let same: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, i as f64)).collect();
        let Regression::Fit { slope, intercept } = midparent_regression(&same) else { panic!() };
        assert!((slope - 1.0).abs() < 1e-12 && intercept.abs() < 1e-12);
        let flat: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 4.0)).collect();
        assert_eq!(midparent_regression(&flat).slope(), Some(0.0));
        assert_eq!(midparent_regression(&[(1.0, 2.0); 5]), Regression::Undefined);
        assert_eq!(midparent_regression(&[(1.0, 2.0)]), Regression::Undefined);
    }

    #[test]
    fn out_of_range_is_flagged_not_clamped() {
        let pairs = [(0.0, 0.0), (1.0, 2.0)];
        let e = HeritabilityEstimate {
            trait_kind: Trait::Speed,
            generation: 0,
            pairs: 2,
            regression: midparent_regression(&pairs),
        };
        assert_eq!(e.slope(), Some(2.0));
        assert!(e.out_of_range());
    }

    #[test]
    fn identity_lineage_gives_unit_slopes() {
        let mut log = RunLog::default();
        let records = (0..20)
            .map(|i| LineageRecord {
                offspring: 100 + i,
                generation: 1,
                parents: [i, i + 50],
                offspring_traits: tv(i as f64 * 0.01),
                parent_traits: [tv(i as f64 * 0.01); 2],
            })
            .collect();
        log.lineage.push(records);
        let est = heritability_per_generation(&log);
        assert_eq!(est.len(), 6);
        for e in est {
            assert!((e.slope().unwrap() - 1.0).abs() < 1e-9, "{e:?}");
            assert_eq!(e.generation, 0);
        }
    }

    #[test]
    fn diversity_anchors() {
        let pop = vec![tv(0.2); 4];
        assert_eq!(trait_diversity(&pop, Trait::Balance), 0.0);
        let two = [tv(0.2), tv(0.7)];
        assert!((trait_diversity(&two, Trait::Speed) - 0.5).abs() < 1e-12);
        let a = TraitVector::from_array([0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let b = TraitVector::from_array([0.3, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let bounds = TraitBounds { lo: [0.0, 1.0, 0.0, 0.0, 0.0, 0.0], hi: [1.0, 30.0, 1.0, 1.0, 1.0, 1.0] };
        assert!((population_diversity(&[a, b], &bounds) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn selection_arithmetic() {
        assert_eq!(response_to_selection(0.0, 5.0), 0.0);
        assert_eq!(response_to_selection(1.0, 2.0), 2.0);
        assert_eq!(selection_differential(&[3.0, 5.0], &[1.0, 2.0, 3.0]), 2.0);
        assert_eq!(rate_of_change(&[0.0, 1.0, 3.0]), vec![1.0, 2.0]);
        assert_eq!(rate_of_change(&[2.0; 4]), vec![0.0; 3]);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn variance_identities() {
        let v = VarianceDecomposition::new(2.0, 1.0, 0.5, 0.0).unwrap();
        assert_eq!(v.genetic(), 3.5);
        assert_eq!(v.phenotypic(), v.genetic() + v.environment);
        assert!((v.narrow_sense() - 2.0 / 3.5).abs() < 1e-15);
        assert_eq!(v.broad_sense(), 1.0);
        assert!(VarianceDecomposition::new(-1.0, 0.0, 0.0, 0.0).is_none());
    }

    fn pairs_strategy() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((-100.0..100.0f64, -100.0..100.0f64), 3..60)
    }

    fn brute_mean_distance(v: &[f64]) -> f64 {
        let n = v.len();
        let mut total = 0.0;
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                if i != j {
                    s += (v[i] - v[j]).abs();
                }
            }
            total += s / (n - 1) as f64;
        }
        total / n as f64
    }

    proptest! {
        #[test]
        fn slope_invariant_under_shift_and_scale(pairs in pairs_strategy(), c in -50.0..50.0f64, k in 0.1..10.0f64) {
            let base = midparent_regression(&pairs);
            prop_assume!(base != Regression::Undefined);
            let s0 = base.slope().unwrap();
            let shifted: Vec<_> = pairs.iter().map(|&(x, y)| (x + c, y + c)).collect();
            let scaled: Vec<_> = pairs.iter().map(|&(x, y)| (x * k, y * k)).collect();
            prop_assert!((midparent_regression(&shifted).slope().unwrap() - s0).abs() < 1e-8);
            prop_assert!((midparent_regression(&scaled).slope().unwrap() - s0).abs() < 1e-8);
        }

        #[test]
        fn diversity_matches_double_loop(vals in prop::collection::vec(0.0..1.0f64, 2..12)) {
            let pop: Vec<TraitVector> = vals.iter().map(|&x| tv(x)).collect();
            let d = trait_diversity(&pop, Trait::Coverage);
            prop_assert!((d - brute_mean_distance(&vals)).abs() < 1e-12);
            prop_assert!(d >= 0.0);
            let mut rev = pop.clone();
            rev.reverse();
            prop_assert!((trait_diversity(&rev, Trait::Coverage) - d).abs() < 1e-12);
            let bounds = TraitBounds::from_vectors(&pop);
            let pd = population_diversity(&pop, &bounds);
            prop_assert!(pd >= 0.0);
            prop_assert_eq!(pd == 0.0, vals.iter().all(|&v| v == vals[0]));
        }
    }
}
