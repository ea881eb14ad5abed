//! Synthetic partly-interval-censored cohort modelled on an HIV clinic
//! follow-up study: deaths are recorded exactly, adverse events are only
//! known to fall between clinic visits, and most subjects are right-censored
//! at their last visit.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Observation, OutcomeClass};
use crate::distributions::{AftSpec, FamilyKind};
use crate::error::{PsrError, Result};
use crate::fitting::Design;
use crate::rng::{derive_seed, open01, sharded_map};
use crate::scheme::{CountDist, GapDist, InspectionScheme, PiRule};
use crate::simulation::{simulate_subjects_with, StreamSeeds};

pub const CCASANET_LIKE_N: usize = 1380;

pub const COVARIATES: [&str; 4] = ["age", "male", "art_class", "cd4"];

const SITES: [&str; 5] = ["site_a", "site_b", "site_c", "site_d", "site_e"];
const SITE_WEIGHTS: [f64; 5] = [0.30, 0.25, 0.20, 0.15, 0.10];
const SITE_OFFSETS: [f64; 5] = [0.0, 0.25, -0.2, 0.4, -0.35];
const COVARIATE_STREAM: u64 = 0x636f_7661;

/// Share of observed events that are deaths seen at their exact time.
pub const EXACT_SHARE: f64 = 143.0 / 328.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCohort {
    pub data: Dataset,
    /// Generating model on the design `truth_design`.
    pub truth: AftSpec,
    pub truth_design: Design,
    pub counts: BTreeMap<String, usize>,
}

/// The generating model: Weibull AFT, linear in `sqrt(cd4)`, with site
/// offsets.
pub fn ccasanet_like_truth() -> (AftSpec, Design) {
    let offsets = SITES
        .iter()
        .zip(SITE_OFFSETS)
        .map(|(s, o)| (s.to_string(), o))
        .collect();
    let spec = AftSpec::new(FamilyKind::Weibull, 2.2, vec![-0.02, -0.25, 0.2, 0.12], 1.1)
        .expect("valid truth")
        .with_strata(offsets);
    let design = Design::parse(&["age", "male", "art_class", "sqrt(cd4)"]).expect("valid terms");
    (spec, design)
}

/// Visits every `Uniform(0, 1]` years, a geometric number of them with
/// mean 8; events between visits are exact with probability [`EXACT_SHARE`]
/// and events after the last visit are unobserved.
pub fn ccasanet_like_scheme() -> InspectionScheme {
    InspectionScheme::new(
        CountDist::Geometric { mean: 8.0 },
        GapDist::Uniform { tau: 1.0 },
        PiRule::FollowUp { exact: EXACT_SHARE },
    )
    .expect("valid scheme")
}

fn draw_covariates<R: Rng + ?Sized>(rng: &mut R) -> (Vec<f64>, usize) {
    let age = (36.0 + 10.0 * crate::distributions::norm_ppf(open01(rng))).clamp(18.0, 80.0);
    let male = f64::from(open01(rng) < 0.62);
    let art_class = f64::from(open01(rng) < 0.3);
    // CD4 count per µL: right-skewed, rounded to whole cells
    let cd4 = (5.0 + 0.8 * crate::distributions::norm_ppf(open01(rng))).exp().min(1000.0).round();
    let u = open01(rng);
    let mut acc = 0.0;
    let mut site = SITES.len() - 1;
    for (i, w) in SITE_WEIGHTS.iter().enumerate() {
        acc += w;
        if u < acc {
            site = i;
            break;
        }
    }
    (vec![age, male, art_class, cd4], site)
}

/// `n` subjects reproducible from `seed`.
pub fn ccasanet_like(n: usize, seed: u64) -> Result<SyntheticCohort> {
    if n == 0 {
        return Err(PsrError::InsufficientData("n must be at least 1".into()));
    }
    let (truth, design) = ccasanet_like_truth();
    let covariates = sharded_map(n, &[derive_seed(seed, COVARIATE_STREAM)], |_, rngs| draw_covariates(&mut rngs[0]));
    let names: Vec<String> = COVARIATES.iter().map(|s| s.to_string()).collect();
    let skeleton: Vec<Observation> = covariates
        .iter()
        .enumerate()
        .map(|(i, (z, site))| Observation {
            id: format!("p{:04}", i + 1),
            outcome: crate::data::Outcome::RightCensored { lower: 0.0 },
            covariates: z.clone(),
            stratum: Some(SITES[*site].to_string()),
        })
        .collect();
    let rows = design.matrix(&Dataset::new(skeleton.clone(), names.clone())?)?;
    let dists = rows
        .iter()
        .zip(&covariates)
        .map(|(row, (_, site))| truth.subject_cdf(row, Some(SITES[*site])))
        .collect::<Result<Vec<_>>>()?;
    let subjects = simulate_subjects_with(|i| dists[i], &ccasanet_like_scheme(), n, StreamSeeds::from_seed(seed))?;
    let observations: Vec<Observation> = skeleton
        .into_iter()
        .zip(subjects)
        .map(|(obs, s)| Observation {
            outcome: s.outcome,
            ..obs
        })
        .collect();
    let mut counts = BTreeMap::new();
    for o in &observations {
        *counts.entry(o.outcome.classify().as_str().to_string()).or_insert(0) += 1;
    }
    for class in [OutcomeClass::Exact, OutcomeClass::Interval, OutcomeClass::Left, OutcomeClass::Right] {
        counts.entry(class.as_str().to_string()).or_insert(0);
    }
    Ok(SyntheticCohort {
        data: Dataset::new(observations, names)?,
        truth,
        truth_design: design,
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn proportions_are_close_to_the_target_cohort() {
        let c = ccasanet_like(CCASANET_LIKE_N, 1).unwrap();
        let exact = c.counts["exact"] as f64;
        let bounded = (c.counts["interval"] + c.counts["left"]) as f64;
        let right = c.counts["right"] as f64;
        assert_eq!(exact + bounded + right, 1380.0);
        assert!((exact - 143.0).abs() < 45.0, "{:?}", c.counts);
        assert!((bounded - 185.0).abs() < 55.0, "{:?}", c.counts);
        assert!((right - 1052.0).abs() < 80.0, "{:?}", c.counts);
    }

    #[test]
    fn reproducible() {
        assert_eq!(ccasanet_like(200, 4).unwrap(), ccasanet_like(200, 4).unwrap());
        assert_ne!(ccasanet_like(200, 4).unwrap().data, ccasanet_like(200, 5).unwrap().data);
        assert!(ccasanet_like(0, 1).is_err());
    }

    #[test]
    fn covariates_are_plausible() {
        let c = ccasanet_like(500, 2).unwrap();
        for o in c.data.observations() {
            assert!((18.0..=80.0).contains(&o.covariates[0]));
            assert!(o.covariates[3] >= 0.0);
        }
        assert_eq!(c.data.strata().len(), 5);
    }
}
