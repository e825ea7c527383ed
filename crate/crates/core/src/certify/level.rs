use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cover::{build_cover, CoverCell};
use super::witness::{tm_witness, Method, WitnessBudget, WitnessOutcome};
use crate::polygon::Polygon;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadSelection {
    All,
    Sample(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    /// Index in base `|cover|` with digits `(A, B, C, D)`.
    pub index: u64,
    pub outcome: WitnessOutcome,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificationSummary {
    pub run: usize,
    pub certified: usize,
    pub rate: f64,
    pub by_recipe: usize,
    pub by_sampling: usize,
    pub max_n: usize,
    pub failures_by_stage: BTreeMap<String, usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub level: u32,
    pub cells: usize,
    pub total_quads: u128,
    pub selection: QuadSelection,
    pub seed: u64,
    pub budget: WitnessBudget,
    pub summary: CertificationSummary,
    pub results: Vec<QuadResult>,
}

/// Seed of the generator used for quadruple `index`.
pub fn quad_seed(seed: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(seed ^ mix(index))
}

pub fn decode_quad(cover: &[CoverCell], index: u64) -> [CoverCell; 4] {
    let c = cover.len() as u64;
    let digit = |p: u32| cover[((index / c.pow(p)) % c) as usize];
    [digit(3), digit(2), digit(1), digit(0)]
}

/// Quadruple indices to run: all of them, or a sorted sample without repetition.
pub fn select_quads(cells: usize, selection: QuadSelection, seed: u64) -> Vec<u64> {
    let total = (cells as u128).pow(4);
    match selection {
        QuadSelection::Sample(n) if (n as u128) < total => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut idx: Vec<u64> = rand::seq::index::sample(&mut rng, total as usize, n)
                .into_iter()
                .map(|i| i as u64)
                .collect();
            idx.sort_unstable();
            idx
        }
        _ => (0..total as u64).collect(),
    }
}

fn summarize(results: &[QuadResult]) -> CertificationSummary {
    let mut s = CertificationSummary {
        run: results.len(),
        certified: 0,
        rate: 0.0,
        by_recipe: 0,
        by_sampling: 0,
        max_n: 0,
        failures_by_stage: BTreeMap::new(),
    };
    for r in results {
        match &r.outcome {
            WitnessOutcome::Found(w) => {
                s.certified += 1;
                s.max_n = s.max_n.max(w.n);
                match w.method {
                    Method::Recipe => s.by_recipe += 1,
                    Method::Sampling => s.by_sampling += 1,
                }
            }
            WitnessOutcome::NotFound { stage, .. } => {
                let key = serde_json::to_value(stage).unwrap().as_str().unwrap().to_string();
                *s.failures_by_stage.entry(key).or_default() += 1;
            }
        }
    }
    s.rate = if s.run == 0 { 1.0 } else { s.certified as f64 / s.run as f64 };
    s
}

/// Runs the witness search on all or sampled quadruples of level-`M` cells. Quadruples are
/// processed in parallel, each with its own generator derived from `seed` and its index.
pub fn certify_level(poly: &Polygon<f64>, level: u32, selection: QuadSelection, budget: &WitnessBudget, seed: u64) -> CertificationReport {
    let cover = build_cover(poly, level);
    let indices = select_quads(cover.len(), selection, seed);
    let results: Vec<QuadResult> = indices
        .par_iter()
        .map(|&index| {
            let quad = decode_quad(&cover, index);
            let mut rng = ChaCha8Rng::seed_from_u64(quad_seed(seed, index));
            QuadResult { index, outcome: tm_witness(poly, &quad, budget, &mut rng) }
        })
        .collect();
    CertificationReport {
        level,
        cells: cover.len(),
        total_quads: (cover.len() as u128).pow(4),
        selection,
        seed,
        budget: budget.clone(),
        summary: summarize(&results),
        results,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_one_square_all() {
        let sq = Polygon::unit_square();
        let r = certify_level(&sq, 1, QuadSelection::All, &WitnessBudget::default(), 9);
        assert_eq!(r.results.len(), 256);
        assert_eq!(r.summary.certified, 256);
    }

    #[test]
    fn decode_round_trip() {
        let cover = build_cover(&Polygon::equilateral(), 2);
        let q = decode_quad(&cover, 27u64.pow(3) * 5 + 27 * 7 + 2);
        assert_eq!(q[0], cover[5]);
        assert_eq!(q[1], cover[0]);
        assert_eq!(q[2], cover[7]);
        assert_eq!(q[3], cover[2]);
    }
}
