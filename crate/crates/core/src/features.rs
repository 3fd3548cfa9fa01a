//! Corner-vowel representatives and the articulation features built on them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::formant::FormantTrack;
use crate::posterior::VowelFrameSets;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Vowel {
    A,
    I,
    U,
}

impl Vowel {
    pub const ALL: [Vowel; 3] = [Vowel::A, Vowel::I, Vowel::U];
}

impl fmt::Display for Vowel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Vowel::A => "a",
            Vowel::I => "i",
            Vowel::U => "u",
        })
    }
}

impl FromStr for Vowel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" => Ok(Vowel::A),
            "i" => Ok(Vowel::I),
            "u" => Ok(Vowel::U),
            other => Err(Error::InvalidArgument(format!("unknown vowel {other:?}"))),
        }
    }
}

/// How a vowel's frame-level formants are reduced to one value.
///
/// For percentiles the "high" formants (F1 of /a/, F2 of /i/) take the
/// `hi`-th percentile and every other formant the `100 − hi`-th, pushing the
/// representatives towards the corners of the vowel triangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Estimator {
    Mean,
    Percentile { hi: f64 },
}

impl Estimator {
    pub const DEFAULT_SET: [Estimator; 4] = [
        Estimator::Mean,
        Estimator::Percentile { hi: 50.0 },
        Estimator::Percentile { hi: 70.0 },
        Estimator::Percentile { hi: 90.0 },
    ];

    pub fn percentile(hi: f64) -> Result<Self> {
        if (50.0..100.0).contains(&hi) {
            Ok(Estimator::Percentile { hi })
        } else {
            Err(Error::InvalidArgument(format!("percentile hi must be in [50, 100), got {hi}")))
        }
    }

    pub fn hi(&self) -> Option<f64> {
        match self {
            Estimator::Mean => None,
            Estimator::Percentile { hi } => Some(*hi),
        }
    }

    pub fn lo(&self) -> Option<f64> {
        self.hi().map(|h| 100.0 - h)
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Estimator::Mean => f.write_str("mean"),
            Estimator::Percentile { hi } => write!(f, "p{hi}"),
        }
    }
}

impl FromStr for Estimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "mean" {
            return Ok(Estimator::Mean);
        }
        let hi = s
            .strip_prefix('p')
            .and_then(|n| n.parse::<f64>().ok())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown estimator {s:?}")))?;
        Estimator::percentile(hi)
    }
}

impl Serialize for Estimator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Estimator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Linear-interpolation percentile on `(n − 1)` ranks.
pub fn percentile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("percentile of empty sequence".into()));
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("percentile {p} outside [0, 100]")));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(percentile_sorted(&v, p))
}

fn percentile_sorted(v: &[f64], p: f64) -> f64 {
    let h = (v.len() - 1) as f64 * p / 100.0;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let x = v[lo] + (h - lo as f64) * (v[hi] - v[lo]);
    // Rounding may step past the upper neighbour; clamping keeps the result
    // monotone in p.
    x.clamp(v[lo], v[hi])
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VowelRepresentatives {
    pub f1a: f64,
    pub f2a: f64,
    pub f1i: f64,
    pub f2i: f64,
    pub f1u: f64,
    pub f2u: f64,
}

impl VowelRepresentatives {
    pub fn get(&self, v: Vowel) -> (f64, f64) {
        match v {
            Vowel::A => (self.f1a, self.f2a),
            Vowel::I => (self.f1i, self.f2i),
            Vowel::U => (self.f1u, self.f2u),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        VowelRepresentatives {
            f1a: self.f1a * c,
            f2a: self.f2a * c,
            f1i: self.f1i * c,
            f2i: self.f2i * c,
            f1u: self.f1u * c,
            f2u: self.f2u * c,
        }
    }

    fn values(&self) -> [f64; 6] {
        [self.f1a, self.f2a, self.f1i, self.f2i, self.f1u, self.f2u]
    }

    pub fn validate(&self) -> Result<()> {
        if self.values().iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid representatives {self:?}")))
        }
    }
}

/// Frame-level (F1, F2) points per corner vowel.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VowelSamples {
    pub a: Vec<(f64, f64)>,
    pub i: Vec<(f64, f64)>,
    pub u: Vec<(f64, f64)>,
}

impl VowelSamples {
    pub fn get(&self, v: Vowel) -> &[(f64, f64)] {
        match v {
            Vowel::A => &self.a,
            Vowel::I => &self.i,
            Vowel::U => &self.u,
        }
    }

    pub fn get_mut(&mut self, v: Vowel) -> &mut Vec<(f64, f64)> {
        match v {
            Vowel::A => &mut self.a,
            Vowel::I => &mut self.i,
            Vowel::U => &mut self.u,
        }
    }
}

/// Valid formants of the selected frames. Frames whose entry in `exclude`
/// is true are skipped as well.
pub fn collect_samples(
    track: &FormantTrack,
    sets: &VowelFrameSets,
    exclude: Option<&[bool]>,
) -> VowelSamples {
    let mut out = VowelSamples::default();
    for v in Vowel::ALL {
        let dst = out.get_mut(v);
        for &t in sets.get(v) {
            if exclude.is_some_and(|ex| ex.get(t).copied().unwrap_or(false)) {
                continue;
            }
            if let Some(p) = track.frames.get(t).and_then(|f| f.formants) {
                dst.push((p.f1_hz, p.f2_hz));
            }
        }
    }
    out
}

/// Reduces each vowel's samples to one (F1, F2) pair.
pub fn representatives(samples: &VowelSamples, est: Estimator) -> Result<VowelRepresentatives> {
    let mut pairs = [(0.0, 0.0); 3];
    for (slot, v) in pairs.iter_mut().zip(Vowel::ALL) {
        let pts = samples.get(v);
        if pts.is_empty() {
            return Err(Error::EmptyVowel(v));
        }
        let mut f1: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let mut f2: Vec<f64> = pts.iter().map(|p| p.1).collect();
        *slot = match est {
            Estimator::Mean => (mean(&f1), mean(&f2)),
            Estimator::Percentile { hi } => {
                let lo = 100.0 - hi;
                f1.sort_by(f64::total_cmp);
                f2.sort_by(f64::total_cmp);
                let (p1, p2) = match v {
                    Vowel::A => (hi, lo),
                    Vowel::I => (lo, hi),
                    Vowel::U => (lo, lo),
                };
                (percentile_sorted(&f1, p1), percentile_sorted(&f2, p2))
            }
        };
    }
    let reps = VowelRepresentatives {
        f1a: pairs[0].0,
        f2a: pairs[0].1,
        f1i: pairs[1].0,
        f2i: pairs[1].1,
        f1u: pairs[2].0,
        f2u: pairs[2].1,
    };
    reps.validate()?;
    Ok(reps)
}

pub fn aggregate(
    track: &FormantTrack,
    sets: &VowelFrameSets,
    est: Estimator,
    exclude: Option<&[bool]>,
) -> Result<VowelRepresentatives> {
    representatives(&collect_samples(track, sets, exclude), est)
}

/// Triangle area in the F1–F2 plane, Hz².
pub fn vsa(r: &VowelRepresentatives) -> f64 {
    0.5 * (r.f1i * (r.f2a - r.f2u) + r.f1a * (r.f2u - r.f2i) + r.f1u * (r.f2i - r.f2a)).abs()
}

/// (F1a + F2i) / (F2a + F1i + F1u + F2u).
pub fn vai(r: &VowelRepresentatives) -> Result<f64> {
    let den = r.f2a + r.f1i + r.f1u + r.f2u;
    if !(den > 0.0) {
        return Err(Error::Numeric(format!("VAI denominator {den} is not positive")));
    }
    Ok((r.f1a + r.f2i) / den)
}

pub fn fcr(r: &VowelRepresentatives) -> Result<f64> {
    let v = vai(r)?;
    if !(v > 0.0) {
        return Err(Error::Numeric("VAI is zero".into()));
    }
    Ok(1.0 / v)
}

pub fn f2_ratio(r: &VowelRepresentatives) -> Result<f64> {
    if !(r.f2u > 0.0) {
        return Err(Error::Numeric("F2u is not positive".into()));
    }
    Ok(r.f2i / r.f2u)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Feature {
    #[serde(rename = "vai")]
    Vai,
    #[serde(rename = "vsa")]
    Vsa,
    #[serde(rename = "fcr")]
    Fcr,
    #[serde(rename = "f2i_f2u")]
    F2Ratio,
}

impl Feature {
    pub const ALL: [Feature; 4] = [Feature::Vai, Feature::Vsa, Feature::Fcr, Feature::F2Ratio];

    pub fn name(&self) -> &'static str {
        match self {
            Feature::Vai => "vai",
            Feature::Vsa => "vsa",
            Feature::Fcr => "fcr",
            Feature::F2Ratio => "f2i_f2u",
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArticulationFeatures {
    pub estimator: Estimator,
    pub vai: f64,
    /// Hz².
    pub vsa: f64,
    pub fcr: f64,
    pub f2_ratio: f64,
}

impl ArticulationFeatures {
    pub fn from_representatives(reps: &VowelRepresentatives, estimator: Estimator) -> Result<Self> {
        let vai = vai(reps)?;
        Ok(ArticulationFeatures {
            estimator,
            vai,
            vsa: vsa(reps),
            fcr: 1.0 / vai,
            f2_ratio: f2_ratio(reps)?,
        })
    }

    pub fn get(&self, f: Feature) -> f64 {
        match f {
            Feature::Vai => self.vai,
            Feature::Vsa => self.vsa,
            Feature::Fcr => self.fcr,
            Feature::F2Ratio => self.f2_ratio,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorResult {
    pub representatives: VowelRepresentatives,
    pub features: ArticulationFeatures,
}

/// All features under every estimator in `estimators`.
pub fn feature_suite_from_samples(
    samples: &VowelSamples,
    estimators: &[Estimator],
) -> Result<Vec<EstimatorResult>> {
    estimators
        .iter()
        .map(|&est| {
            let representatives = representatives(samples, est)?;
            let features = ArticulationFeatures::from_representatives(&representatives, est)?;
            Ok(EstimatorResult {
                representatives,
                features,
            })
        })
        .collect()
}

/// [`feature_suite_from_samples`] over the default mean/p50/p70/p90 set.
pub fn feature_suite(
    track: &FormantTrack,
    sets: &VowelFrameSets,
) -> Result<Vec<EstimatorResult>> {
    feature_suite_from_samples(&collect_samples(track, sets, None), &Estimator::DEFAULT_SET)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formant::{FormantFrame, FormantPair};
    use proptest::prelude::*;

    fn reps(v: [f64; 6]) -> VowelRepresentatives {
        VowelRepresentatives {
            f1a: v[0],
            f2a: v[1],
            f1i: v[2],
            f2i: v[3],
            f1u: v[4],
            f2u: v[5],
        }
    }

    fn track_of(points: &[(f64, f64)]) -> FormantTrack {
        FormantTrack {
            frames: points
                .iter()
                .enumerate()
                .map(|(t, &(f1, f2))| FormantFrame {
                    center_s: t as f64 * 0.03,
                    formants: Some(FormantPair {
                        f1_hz: f1,
                        f2_hz: f2,
                        b1_hz: 60.0,
                        b2_hz: 90.0,
                    }),
                })
                .collect(),
            warnings: vec![],
        }
    }

    #[test]
    fn percentile_examples() {
        assert_eq!(percentile(&[1.0, 2.0, 3.0, 4.0], 50.0).unwrap(), 2.5);
        let xs = [7.0, -3.0, 12.5, 4.0];
        assert_eq!(percentile(&xs, 0.0).unwrap(), -3.0);
        assert_eq!(percentile(&xs, 100.0).unwrap(), 12.5);
        assert_eq!(percentile(&[5.0], 70.0).unwrap(), 5.0);
        assert!(percentile(&[], 50.0).is_err());
        assert!(percentile(&[1.0], 101.0).is_err());
    }

    #[test]
    fn percentile_aggregation() {
        let pts = [(700.0, 1200.0), (800.0, 1300.0), (900.0, 1400.0), (300.0, 2300.0), (350.0, 800.0)];
        let track = track_of(&pts);
        let sets = VowelFrameSets {
            a: vec![0, 1, 2],
            i: vec![3],
            u: vec![4],
        };
        let r = aggregate(&track, &sets, Estimator::Percentile { hi: 70.0 }, None).unwrap();
        assert!((r.f1a - 840.0).abs() < 1e-9);
        assert!((r.f2a - 1260.0).abs() < 1e-9);
        let m = aggregate(&track, &sets, Estimator::Mean, None).unwrap();
        assert_eq!(m.f1a, 800.0);

        let excl = [true, false, false, false, false];
        let r = aggregate(&track, &sets, Estimator::Mean, Some(&excl)).unwrap();
        assert_eq!(r.f1a, 850.0);
    }

    #[test]
    fn singletons_collapse_estimators() {
        let track = track_of(&[(800.0, 1300.0), (300.0, 2300.0), (350.0, 800.0)]);
        let sets = VowelFrameSets {
            a: vec![0],
            i: vec![1],
            u: vec![2],
        };
        let suite = feature_suite(&track, &sets).unwrap();
        assert_eq!(suite.len(), 4);
        for e in &suite[1..] {
            assert_eq!(e.representatives, suite[0].representatives);
            assert_eq!(e.features.vai, suite[0].features.vai);
        }
    }

    #[test]
    fn empty_vowel_is_named() {
        let track = track_of(&[(800.0, 1300.0), (300.0, 2300.0)]);
        let sets = VowelFrameSets {
            a: vec![0],
            i: vec![1],
            u: vec![],
        };
        assert!(matches!(
            aggregate(&track, &sets, Estimator::Mean, None),
            Err(Error::EmptyVowel(Vowel::U))
        ));
    }

    #[test]
    fn feature_examples() {
        let r = reps([800.0, 1300.0, 300.0, 2300.0, 350.0, 800.0]);
        assert_eq!(vsa(&r), 350000.0);
        let collinear = reps([100.0, 100.0, 200.0, 200.0, 300.0, 300.0]);
        assert_eq!(vsa(&collinear), 0.0);

        let r = reps([800.0, 1200.0, 300.0, 2200.0, 300.0, 700.0]);
        assert!((vai(&r).unwrap() - 1.2).abs() < 1e-15);
        assert!((fcr(&r).unwrap() - 1.0 / 1.2).abs() < 1e-15);

        let c = reps([500.0; 6]);
        assert_eq!(vai(&c).unwrap(), 0.5);
        assert_eq!(fcr(&c).unwrap(), 2.0);
        assert_eq!(f2_ratio(&c).unwrap(), 1.0);

        let zero = reps([0.0; 6]);
        assert!(vai(&zero).is_err());
        assert!(f2_ratio(&zero).is_err());
    }

    #[test]
    fn estimator_names() {
        for e in Estimator::DEFAULT_SET {
            assert_eq!(e.to_string().parse::<Estimator>().unwrap(), e);
        }
        assert_eq!(Estimator::Percentile { hi: 70.0 }.to_string(), "p70");
        assert!("p40".parse::<Estimator>().is_err());
        assert!("median".parse::<Estimator>().is_err());
    }

    proptest! {
        #[test]
        fn median_matches_textbook(mut xs in prop::collection::vec(-1e4f64..1e4, 1..40)) {
            let p = percentile(&xs, 50.0).unwrap();
            xs.sort_by(f64::total_cmp);
            let n = xs.len();
            let median = if n % 2 == 1 { xs[n / 2] } else { 0.5 * (xs[n / 2 - 1] + xs[n / 2]) };
            prop_assert!((p - median).abs() <= 1e-9 * median.abs().max(1.0));
        }

        #[test]
        fn vsa_is_invariant_to_vertex_relabeling(v in prop::array::uniform6(100.0f64..3000.0)) {
            let r = reps(v);
            // Rotate the vertices: (a, i, u) -> (i, u, a).
            let rot = reps([v[2], v[3], v[4], v[5], v[0], v[1]]);
            let swap = reps([v[2], v[3], v[0], v[1], v[4], v[5]]);
            let tol = 1e-9 * vsa(&r).max(1.0);
            prop_assert!((vsa(&rot) - vsa(&r)).abs() <= tol);
            prop_assert!((vsa(&swap) - vsa(&r)).abs() <= tol);
        }
    }
}
