//! Complex constellations, bit labelling, energy metrics and superposition.
//!
//! The base signal set is unit-energy QPSK `{±1/√2 ± j/√2}` with Gray
//! labelling: tuples 00, 01, 11, 10 sit on consecutive corners, so
//! neighbouring points differ in exactly one bit. A 2-bit tuple is carried
//! around as the integer value of its bits (00 → 0, 01 → 1, 10 → 2, 11 → 3),
//! which is also the symbol label used by the denoising maps.
//!
//! Superposing two QPSK sets with a relative channel phase `θ` yields the
//! constellation seen by the satellite in the multiple access phase. Pairs of
//! transmit labels that land on the same point (within [`COALESCE_TOL_SQ`])
//! are merged, keeping the union of their label pairs and the summed
//! probability.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

use crate::{Error, Result};

/// A complex baseband sample.
pub type ComplexSample = Complex64;

/// Squared-distance tolerance under which superposed points are merged.
///
/// Exact-arithmetic coincidences (θ a multiple of π/2) survive floating
/// point at ~1e-31; no other θ produces pairs anywhere near this close.
pub const COALESCE_TOL_SQ: f64 = 1e-9;

/// Probabilities must sum to one within this tolerance.
const PROB_TOL: f64 = 1e-12;

/// Points of a valid constellation must be at least this far apart (squared).
const DISTINCT_TOL_SQ: f64 = 1e-12;

/// Gray bit-to-symbol tables for QPSK.
///
/// `mu` maps a 2-bit tuple to its constellation point, `lambda` maps it to
/// the integer label in Z4. Here the label *is* the bit value, so `lambda`
/// is the identity and the Gray property lives in `mu`: 00 (0) at 45°,
/// 01 (1) at 135°, 11 (3) at 225°, 10 (2) at 315°.
#[derive(Debug, Clone, Copy)]
pub struct BitMapper {
    mu: [Complex64; 4],
}

impl BitMapper {
    /// The fixed QPSK mapper used throughout.
    pub fn qpsk() -> Self {
        let u = FRAC_1_SQRT_2;
        BitMapper {
            // index = integer value of the bit tuple
            mu: [
                Complex64::new(u, u),   // 00
                Complex64::new(-u, u),  // 01
                Complex64::new(u, -u),  // 10
                Complex64::new(-u, -u), // 11
            ],
        }
    }

    /// μ: bit tuple (as integer 0..4) → constellation point.
    pub fn modulate(&self, bits: u8) -> Complex64 {
        self.mu[(bits & 3) as usize]
    }

    /// λ: bit tuple → Z4 label. The label is the bit value itself.
    pub fn label(&self, bits: u8) -> u8 {
        bits & 3
    }

    /// Inverse of [`BitMapper::label`].
    pub fn bits_of_label(&self, label: u8) -> u8 {
        label & 3
    }

    /// Point carrying the given Z4 label.
    pub fn point_of_label(&self, label: u8) -> Complex64 {
        self.mu[(label & 3) as usize]
    }

    /// Number of differing bits between the tuples labelled `a` and `b`.
    pub fn bit_errors(&self, a: u8, b: u8) -> u32 {
        (((a ^ b) & 3) as u32).count_ones()
    }

    /// Checks the Gray property (circle neighbours differ in one bit) and
    /// XOR consistency with the bitwise-XOR denoising table.
    pub fn validate(&self) -> Result<()> {
        // walk the circle by angle
        let mut order: Vec<u8> = (0..4).collect();
        order.sort_by(|&a, &b| {
            let pa = self.mu[a as usize].arg();
            let pb = self.mu[b as usize].arg();
            pa.partial_cmp(&pb).unwrap()
        });
        for i in 0..4 {
            let a = order[i];
            let b = order[(i + 1) % 4];
            if self.bit_errors(a, b) != 1 {
                return Err(Error::InvalidConstellation(format!(
                    "labelling is not Gray: neighbours {a:02b} and {b:02b}"
                )));
            }
        }
        for sa in 0..4u8 {
            for sb in 0..4u8 {
                let xor = self.label(sa ^ sb);
                if xor != self.label(sa) ^ self.label(sb) {
                    return Err(Error::InvalidConstellation(
                        "labels are not XOR-consistent".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

impl Default for BitMapper {
    fn default() -> Self {
        Self::qpsk()
    }
}

/// A finite set of complex points with per-point probabilities.
///
/// `labels` carries the Z4 symbol labels of a base constellation;
/// `pair_tags` carries, for superposed constellations, all (label of A,
/// label of B) transmit pairs that produced each point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Constellation {
    points: Vec<Complex64>,
    probabilities: Vec<f64>,
    labels: Option<Vec<u8>>,
    pair_tags: Option<Vec<Vec<(u8, u8)>>>,
}

impl Constellation {
    /// Builds a constellation, validating shape, finiteness, probability
    /// normalization and pairwise distinctness.
    pub fn new(
        points: Vec<Complex64>,
        probabilities: Vec<f64>,
        labels: Option<Vec<u8>>,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidConstellation("no points".into()));
        }
        if probabilities.len() != points.len() {
            return Err(Error::InvalidConstellation(format!(
                "{} points but {} probabilities",
                points.len(),
                probabilities.len()
            )));
        }
        if let Some(ref l) = labels {
            if l.len() != points.len() {
                return Err(Error::InvalidConstellation("label count mismatch".into()));
            }
        }
        if points.iter().any(|p| !p.re.is_finite() || !p.im.is_finite()) {
            return Err(Error::InvalidConstellation("non-finite point".into()));
        }
        if probabilities.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidConstellation("negative probability".into()));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidConstellation(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                if (points[i] - points[j]).norm_sqr() <= DISTINCT_TOL_SQ {
                    return Err(Error::InvalidConstellation(format!(
                        "points {i} and {j} coincide"
                    )));
                }
            }
        }
        Ok(Constellation {
            points,
            probabilities,
            labels,
            pair_tags: None,
        })
    }

    /// Unit-energy Gray-labelled QPSK, uniform probabilities.
    pub fn qpsk() -> Self {
        let m = BitMapper::qpsk();
        Constellation {
            points: (0..4).map(|b| m.modulate(b)).collect(),
            probabilities: vec![0.25; 4],
            labels: Some((0..4).collect()),
            pair_tags: None,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    /// Transmit label pairs per point; `None` unless built by [`superpose`].
    pub fn pair_tags(&self) -> Option<&[Vec<(u8, u8)>]> {
        self.pair_tags.as_deref()
    }

    /// Peak energy `max |x|²`.
    pub fn peak_energy(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.norm_sqr())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Average energy `Σ pᵢ |xᵢ|²`.
    pub fn avg_energy(&self) -> f64 {
        self.points
            .iter()
            .zip(&self.probabilities)
            .map(|(x, p)| p * x.norm_sqr())
            .sum()
    }

    /// Minimum squared Euclidean distance over all point pairs.
    pub fn min_distance_sq(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.points.len() {
            for j in (i + 1)..self.points.len() {
                best = best.min((self.points[i] - self.points[j]).norm_sqr());
            }
        }
        best
    }

    /// Same constellation with every point magnitude scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Constellation {
            points: self.points.iter().map(|p| p * factor).collect(),
            probabilities: self.probabilities.clone(),
            labels: self.labels.clone(),
            pair_tags: self.pair_tags.clone(),
        }
    }

    /// Minimum squared distance between points whose cluster sets (the
    /// partition applied to every label pair of each point) are disjoint.
    ///
    /// Returns +∞ when no cross-cluster pair exists. Errors if any point
    /// carries no label pair.
    pub fn min_cross_cluster_distance_sq<F>(&self, partition: F) -> Result<f64>
    where
        F: Fn(u8, u8) -> u8,
    {
        let tags = self.pair_tags.as_ref().ok_or_else(|| {
            Error::InvalidParameter("constellation carries no label pairs".into())
        })?;
        let clusters: Vec<u16> = tags
            .iter()
            .map(|pairs| {
                let mut mask = 0u16;
                for &(ma, mb) in pairs {
                    mask |= 1 << partition(ma, mb);
                }
                mask
            })
            .collect();
        let mut best = f64::INFINITY;
        for i in 0..self.points.len() {
            for j in (i + 1)..self.points.len() {
                if clusters[i] & clusters[j] == 0 {
                    best = best.min((self.points[i] - self.points[j]).norm_sqr());
                }
            }
        }
        Ok(best)
    }

    /// CSV rows `label,re,im,probability`, header included.
    ///
    /// The label column falls back to the point index when the constellation
    /// carries no labels.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,re,im,probability\n");
        for (i, (p, q)) in self.points.iter().zip(&self.probabilities).enumerate() {
            let label = match &self.labels {
                Some(l) => l[i] as usize,
                None => i,
            };
            out.push_str(&format!("{label},{},{},{}\n", p.re, p.im, q));
        }
        out
    }
}

/// Superposes two constellations with a relative phase: all pairwise sums
/// `aᵢ + e^{jθ} bⱼ`, each tagged with the label pair `(mᵢ, mⱼ)`.
///
/// Pair probabilities are the products of the input probabilities (uniform
/// 1/16 priors for two QPSK inputs). Points closer than [`COALESCE_TOL_SQ`]
/// (squared) are merged: probabilities add, label pairs accumulate.
pub fn superpose(a: &Constellation, b: &Constellation, theta: f64) -> Result<Constellation> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidConstellation("empty input".into()));
    }
    let rot = Complex64::from_polar(1.0, theta);
    let label_of = |c: &Constellation, i: usize| match c.labels() {
        Some(l) => l[i],
        None => i as u8,
    };
    let mut points: Vec<Complex64> = Vec::new();
    let mut probs: Vec<f64> = Vec::new();
    let mut tags: Vec<Vec<(u8, u8)>> = Vec::new();
    for (i, &pa) in a.points().iter().enumerate() {
        for (j, &pb) in b.points().iter().enumerate() {
            let p = pa + rot * pb;
            let w = a.probabilities()[i] * b.probabilities()[j];
            let pair = (label_of(a, i), label_of(b, j));
            match points
                .iter()
                .position(|&q| (p - q).norm_sqr() <= COALESCE_TOL_SQ)
            {
                Some(k) => {
                    probs[k] += w;
                    tags[k].push(pair);
                }
                None => {
                    points.push(p);
                    probs.push(w);
                    tags.push(vec![pair]);
                }
            }
        }
    }
    Ok(Constellation {
        points,
        probabilities: probs,
        labels: None,
        pair_tags: Some(tags),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn qpsk_points_and_energy() {
        let c = Constellation::qpsk();
        let u = FRAC_1_SQRT_2;
        assert_eq!(c.len(), 4);
        assert!(c
            .points()
            .iter()
            .any(|p| (p - Complex64::new(u, u)).norm() < 1e-15));
        for p in c.points() {
            assert_relative_eq!(p.norm_sqr(), 1.0, max_relative = 1e-15);
        }
        assert_relative_eq!(c.peak_energy(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(c.avg_energy(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(c.min_distance_sq(), 2.0, max_relative = 1e-15);
    }

    #[test]
    fn mapper_is_gray_and_xor_consistent() {
        let m = BitMapper::qpsk();
        m.validate().unwrap();
        // spot values
        let u = FRAC_1_SQRT_2;
        assert_eq!(m.modulate(0b00), Complex64::new(u, u));
        assert_eq!(m.modulate(0b01), Complex64::new(-u, u));
        assert_eq!(m.modulate(0b11), Complex64::new(-u, -u));
        assert_eq!(m.modulate(0b10), Complex64::new(u, -u));
        assert_eq!(m.bit_errors(0b00, 0b11), 2);
        assert_eq!(m.bit_errors(0b01, 0b11), 1);
    }

    #[test]
    fn superpose_counts_at_key_phases() {
        let q = Constellation::qpsk();
        // 16 pairs coalesce into 9 points at multiples of pi/2
        assert_eq!(superpose(&q, &q, 0.0).unwrap().len(), 9);
        assert_eq!(
            superpose(&q, &q, std::f64::consts::FRAC_PI_2).unwrap().len(),
            9
        );
        // no coincidences at pi/4
        assert_eq!(
            superpose(&q, &q, std::f64::consts::FRAC_PI_4).unwrap().len(),
            16
        );
    }

    #[test]
    fn superposed_energies_are_exact() {
        let q = Constellation::qpsk();
        let s = superpose(&q, &q, 0.0).unwrap();
        assert!((s.peak_energy() - 4.0).abs() < 1e-12);
        assert!((s.avg_energy() - 2.0).abs() < 1e-12);
        // the 9 points split 4/16, 8/16, 4/16 over energy rings 4, 2, 0
        let p: f64 = s.probabilities().iter().sum();
        assert!((p - 1.0).abs() < 1e-12);
        let halved = s.scaled(0.5);
        assert!((halved.avg_energy() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn superposed_center_point_pairs() {
        let q = Constellation::qpsk();
        let s = superpose(&q, &q, 0.0).unwrap();
        let center = s
            .points()
            .iter()
            .position(|p| p.norm_sqr() < 1e-12)
            .expect("origin point");
        let mut pairs = s.pair_tags().unwrap()[center].clone();
        pairs.sort_unstable();
        // antipodal bit tuples: b and b ^ 11
        assert_eq!(pairs, vec![(0, 3), (1, 2), (2, 1), (3, 0)]);
        assert!((s.probabilities()[center] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn cross_cluster_distance_examples() {
        let q = Constellation::qpsk();
        let xor = |a: u8, b: u8| a ^ b;
        let s0 = superpose(&q, &q, 0.0).unwrap();
        let d = s0.min_cross_cluster_distance_sq(xor).unwrap();
        assert!((d - 2.0).abs() < 1e-12);
        // a single-cluster partition has no cross pairs
        let one = s0.min_cross_cluster_distance_sq(|_, _| 0).unwrap();
        assert!(one.is_infinite());
        // no pair tags -> error
        assert!(q.min_cross_cluster_distance_sq(xor).is_err());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(Constellation::new(vec![], vec![], None).is_err());
        let p = vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)];
        assert!(Constellation::new(p.clone(), vec![0.5, 0.6], None).is_err());
        assert!(Constellation::new(p.clone(), vec![0.5], None).is_err());
        assert!(Constellation::new(
            vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)],
            vec![0.5, 0.5],
            None
        )
        .is_err());
        assert!(Constellation::new(p, vec![1.5, -0.5], None).is_err());
    }

    #[test]
    fn csv_export_shape() {
        let csv = Constellation::qpsk().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "label,re,im,probability");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("0,"));
    }

    proptest! {
        // peak energy dominates average energy for any valid constellation
        #[test]
        fn peak_at_least_avg(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(1..8usize);
            let mut points = Vec::new();
            while points.len() < n {
                let p = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                if points.iter().all(|q: &Complex64| (p - q).norm_sqr() > 1e-6) {
                    points.push(p);
                }
            }
            let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let probs: Vec<f64> = raw.iter().map(|w| w / total).collect();
            let c = Constellation::new(points, probs, None).unwrap();
            prop_assert!(c.peak_energy() >= c.avg_energy() - 1e-12);
        }

        // coalescing does not depend on the order points are visited
        #[test]
        fn coalescing_order_independent(theta in 0f64..6.3, perm_seed in 0u64..64) {
            use rand::{seq::SliceRandom, SeedableRng};
            let q = Constellation::qpsk();
            let base = superpose(&q, &q, theta).unwrap();

            let mut idx: Vec<usize> = (0..4).collect();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(perm_seed);
            idx.shuffle(&mut rng);
            let shuffled = Constellation::new(
                idx.iter().map(|&i| q.points()[i]).collect(),
                vec![0.25; 4],
                Some(idx.iter().map(|&i| i as u8).collect()),
            )
            .unwrap();
            let other = superpose(&shuffled, &shuffled, theta).unwrap();

            prop_assert_eq!(base.len(), other.len());
            let mut a: Vec<(f64, f64, f64)> = base
                .points()
                .iter()
                .zip(base.probabilities())
                .map(|(p, w)| (p.re, p.im, *w))
                .collect();
            let mut b: Vec<(f64, f64, f64)> = other
                .points()
                .iter()
                .zip(other.probabilities())
                .map(|(p, w)| (p.re, p.im, *w))
                .collect();
            let key = |t: &(f64, f64, f64)| (t.0 * 1e6).round() as i64 * 1_000_000
                + (t.1 * 1e6).round() as i64;
            a.sort_by_key(key);
            b.sort_by_key(key);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x.0 - y.0).abs() < 1e-12);
                prop_assert!((x.1 - y.1).abs() < 1e-12);
                prop_assert!((x.2 - y.2).abs() < 1e-12);
            }
        }
    }
}
