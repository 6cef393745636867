//! Latin-square denoising maps, adaptive map selection and cluster decoding.
//!
//! The hub does not forward the decoded symbol pair; it forwards the value of
//! a many-to-one map applied to the pair. Both maps used here are 4×4 Latin
//! squares over Z4, indexed `[m_B][m_A]`, so each user can invert the
//! broadcast value with its own transmitted label (the exclusive law). `C0`
//! is the bitwise XOR; `C1` is its rotated companion, used when the channel
//! phase shift puts the XOR clusters at a disadvantage.

use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_4, PI};
use std::fmt;

use crate::constellation::Constellation;
use crate::{Error, Result};

/// Fig. 2-style denoising map: a Latin square over Z4 plus the signal set
/// the mapped value is transmitted from in the broadcast phase.
#[derive(Debug, Clone)]
pub struct DenoiseMap {
    name: &'static str,
    table: [[u8; 4]; 4],
    output: Constellation,
}

/// Which of the two maps is meant, without carrying the table around.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapId {
    C0,
    C1,
}

impl DenoiseMap {
    /// The bitwise-XOR map `C0`: `table[m_B][m_A] = m_A ⊕ m_B`.
    pub fn c0() -> Self {
        let mut table = [[0u8; 4]; 4];
        for (mb, row) in table.iter_mut().enumerate() {
            for (ma, v) in row.iter_mut().enumerate() {
                *v = (ma ^ mb) as u8;
            }
        }
        let map = DenoiseMap {
            name: "C0",
            table,
            output: Constellation::qpsk(),
        };
        map.validate().expect("C0 is a Latin square");
        map
    }

    /// The rotated-XOR companion map `C1`.
    pub fn c1() -> Self {
        let map = DenoiseMap {
            name: "C1",
            table: [[1, 3, 0, 2], [0, 2, 1, 3], [3, 1, 2, 0], [2, 0, 3, 1]],
            output: Constellation::qpsk(),
        };
        map.validate().expect("C1 is a Latin square");
        map
    }

    pub fn get(id: MapId) -> Self {
        match id {
            MapId::C0 => Self::c0(),
            MapId::C1 => Self::c1(),
        }
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn table(&self) -> &[[u8; 4]; 4] {
        &self.table
    }

    /// The broadcast-phase signal set (QPSK for both maps).
    pub fn output_constellation(&self) -> &Constellation {
        &self.output
    }

    /// Map value for the transmit pair `(m_A, m_B)`.
    pub fn cluster_of(&self, m_a: u8, m_b: u8) -> u8 {
        self.table[(m_b & 3) as usize][(m_a & 3) as usize]
    }

    /// Latin-square check (every row and column a permutation of Z4) plus
    /// output-cardinality check.
    pub fn validate(&self) -> Result<()> {
        let mut seen_values = 0u16;
        for i in 0..4 {
            let mut row = 0u8;
            let mut col = 0u8;
            for j in 0..4 {
                row |= 1 << self.table[i][j];
                col |= 1 << self.table[j][i];
                seen_values |= 1 << self.table[i][j];
            }
            if row != 0b1111 || col != 0b1111 {
                return Err(Error::MapInconsistency(format!(
                    "{}: row/column {i} is not a permutation of Z4",
                    self.name
                )));
            }
        }
        if seen_values.count_ones() as usize != self.output.len() {
            return Err(Error::MapInconsistency(format!(
                "{}: output cardinality mismatch",
                self.name
            )));
        }
        Ok(())
    }

    /// User A's inversion: the unique `m_B` with `table[m_B][own] = cluster`.
    pub fn resolve_partner_of_a(&self, own_label: u8, cluster: u8) -> Result<u8> {
        for mb in 0..4u8 {
            if self.table[mb as usize][(own_label & 3) as usize] == cluster & 3 {
                return Ok(mb);
            }
        }
        Err(Error::MapInconsistency(format!(
            "{}: no row solves column {own_label} = {cluster}",
            self.name
        )))
    }

    /// User B's inversion: the unique `m_A` with `table[own][m_A] = cluster`.
    pub fn resolve_partner_of_b(&self, own_label: u8, cluster: u8) -> Result<u8> {
        for ma in 0..4u8 {
            if self.table[(own_label & 3) as usize][ma as usize] == cluster & 3 {
                return Ok(ma);
            }
        }
        Err(Error::MapInconsistency(format!(
            "{}: no column solves row {own_label} = {cluster}",
            self.name
        )))
    }

    /// ML cluster decoding: nearest reference point (lowest index wins ties),
    /// then the map applied to its label pairs.
    ///
    /// Every reference point must decode unambiguously: coalesced points
    /// whose label pairs map to different clusters are a configuration error
    /// (wrong map/θ combination) and fail loudly.
    pub fn cluster_decode(&self, received: Complex64, reference: &Constellation) -> Result<u8> {
        let tags = reference.pair_tags().ok_or_else(|| {
            Error::InvalidParameter("reference constellation carries no label pairs".into())
        })?;
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (i, p) in reference.points().iter().enumerate() {
            let d = (received - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        let pairs = &tags[best];
        let cluster = self.cluster_of(pairs[0].0, pairs[0].1);
        for &(ma, mb) in &pairs[1..] {
            if self.cluster_of(ma, mb) != cluster {
                return Err(Error::MapInconsistency(format!(
                    "{}: coalesced point {best} mixes clusters",
                    self.name
                )));
            }
        }
        Ok(cluster)
    }
}

impl fmt::Display for DenoiseMap {
    /// 4×4 grid in the Fig. 2 layout: rows m_B, columns m_A.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}  (rows m_B, cols m_A)", self.name)?;
        for row in &self.table {
            writeln!(f, "{} {} {} {}", row[0], row[1], row[2], row[3])?;
        }
        Ok(())
    }
}

/// Adaptive map choice versus channel phase shift: `C0` on
/// `[0, π/4) ∪ [3π/4, 5π/4) ∪ [7π/4, 2π)`, `C1` elsewhere.
///
/// θ outside `[0, 2π)` is normalized modulo 2π.
pub fn select_map_id(theta: f64) -> MapId {
    let t = theta.rem_euclid(2.0 * PI);
    if t < FRAC_PI_4 || (3.0 * FRAC_PI_4..5.0 * FRAC_PI_4).contains(&t) || t >= 7.0 * FRAC_PI_4 {
        MapId::C0
    } else {
        MapId::C1
    }
}

/// Adaptive map choice as a ready-to-use map.
pub fn select_map(theta: f64) -> DenoiseMap {
    DenoiseMap::get(select_map_id(theta))
}

/// Closed-form minimum squared cross-cluster distance of the superposed
/// constellation under the adaptive maps: `E · 2(3 − 2(cos θ + sin θ))` on
/// `[0, π/2]`, extended to all θ by its π/2 symmetry.
pub fn dmin_sq_analytic(theta: f64, energy: f64) -> f64 {
    let t = theta.rem_euclid(std::f64::consts::FRAC_PI_2);
    energy * 2.0 * (3.0 - 2.0 * (t.cos() + t.sin()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::superpose;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn c0_is_verbatim_xor() {
        let c0 = DenoiseMap::c0();
        assert_eq!(c0.cluster_of(0, 0), 0);
        assert_eq!(c0.cluster_of(2, 1), 3);
        for k in 0..4 {
            assert_eq!(c0.cluster_of(k, k), 0);
        }
        assert_eq!(
            *c0.table(),
            [[0, 1, 2, 3], [1, 0, 3, 2], [2, 3, 0, 1], [3, 2, 1, 0]]
        );
    }

    #[test]
    fn c1_is_verbatim() {
        let c1 = DenoiseMap::c1();
        assert_eq!(c1.cluster_of(0, 0), 1);
        assert_eq!(c1.cluster_of(3, 2), 0);
        assert_eq!(
            *c1.table(),
            [[1, 3, 0, 2], [0, 2, 1, 3], [3, 1, 2, 0], [2, 0, 3, 1]]
        );
    }

    #[test]
    fn both_maps_are_latin_and_resolvable() {
        for map in [DenoiseMap::c0(), DenoiseMap::c1()] {
            map.validate().unwrap();
            for a in 0..4u8 {
                for b in 0..4u8 {
                    let c = map.cluster_of(a, b);
                    assert_eq!(map.resolve_partner_of_a(a, c).unwrap(), b);
                    assert_eq!(map.resolve_partner_of_b(b, c).unwrap(), a);
                }
            }
            assert_eq!(map.output_constellation().len(), 4);
        }
    }

    #[test]
    fn resolve_examples() {
        let c0 = DenoiseMap::c0();
        assert_eq!(c0.resolve_partner_of_a(1, 1).unwrap(), 0);
        for k in 0..4u8 {
            assert_eq!(c0.resolve_partner_of_a(k, 0).unwrap(), k);
        }
        // C1 column m_A = 0 reads 1, 0, 3, 2 down the rows
        let c1 = DenoiseMap::c1();
        assert_eq!(c1.resolve_partner_of_a(0, 3).unwrap(), 2);
    }

    #[test]
    fn map_selection_ranges() {
        assert_eq!(select_map_id(0.0), MapId::C0);
        assert_eq!(select_map_id(FRAC_PI_2), MapId::C1);
        assert_eq!(select_map_id(std::f64::consts::PI), MapId::C0);
        assert_eq!(select_map_id(FRAC_PI_4), MapId::C1);
        assert_eq!(select_map_id(3.0 * FRAC_PI_4), MapId::C0);
        assert_eq!(select_map_id(7.0 * FRAC_PI_4), MapId::C0);
        // normalization of out-of-range angles
        assert_eq!(select_map_id(-FRAC_PI_4), MapId::C0);
        assert_eq!(select_map_id(2.0 * std::f64::consts::PI + FRAC_PI_2), MapId::C1);
    }

    #[test]
    fn analytic_dmin_values() {
        assert!((dmin_sq_analytic(0.0, 1.0) - 2.0).abs() < 1e-15);
        assert!((dmin_sq_analytic(FRAC_PI_2, 1.0) - 2.0).abs() < 1e-15);
        let at_min = 2.0 * (3.0 - 2.0 * std::f64::consts::SQRT_2);
        assert!((dmin_sq_analytic(FRAC_PI_4, 1.0) - at_min).abs() < 1e-12);
        assert!((at_min - 0.34314575050761980479).abs() < 1e-12);
        // scales linearly with energy
        assert!((dmin_sq_analytic(FRAC_PI_4, 2.0) - 2.0 * at_min).abs() < 1e-12);
    }

    #[test]
    fn cluster_decode_examples() {
        let q = Constellation::qpsk();
        let s0 = superpose(&q, &q, 0.0).unwrap();
        let c0 = DenoiseMap::c0();
        // zero noise on the pair (0,0) point
        let p00 = q.points()[0] * 2.0;
        assert_eq!(c0.cluster_decode(p00, &s0).unwrap(), 0);
        // the origin point of the θ=0 constellation: all four antipodal
        // pairs XOR to 3
        assert_eq!(c0.cluster_decode(Complex64::new(0.0, 0.0), &s0).unwrap(), 3);
        // reference without pair tags is rejected
        assert!(c0.cluster_decode(p00, &q).is_err());
    }

    #[test]
    fn cluster_decode_rejects_inconsistent_reference() {
        // at θ = π/2 the coalesced points mix XOR clusters; C0 must refuse
        let q = Constellation::qpsk();
        let s = superpose(&q, &q, FRAC_PI_2).unwrap();
        let c0 = DenoiseMap::c0();
        let mixed = s
            .points()
            .iter()
            .enumerate()
            .find(|(i, _)| s.pair_tags().unwrap()[*i].len() > 1)
            .map(|(_, p)| *p)
            .unwrap();
        assert!(c0.cluster_decode(mixed, &s).is_err());
        // the adaptive choice for π/2 is consistent everywhere
        let c1 = DenoiseMap::c1();
        for p in s.points() {
            c1.cluster_decode(*p, &s).unwrap();
        }
    }

    #[test]
    fn midpoint_ties_decode_to_the_shared_cluster() {
        // midway between two points of the same cluster the decision is a
        // tie, and either winner yields that cluster
        let q = Constellation::qpsk();
        let theta = FRAC_PI_4;
        let s = superpose(&q, &q, theta).unwrap();
        let map = select_map(theta);
        let tags = s.pair_tags().unwrap();
        let cluster = |i: usize| {
            let (ma, mb) = tags[i][0];
            map.cluster_of(ma, mb)
        };
        let mut checked = 0;
        for i in 0..s.len() {
            for j in (i + 1)..s.len() {
                if cluster(i) != cluster(j) {
                    continue;
                }
                let mid = (s.points()[i] + s.points()[j]) / 2.0;
                // only meaningful when no other-cluster point is as close
                let d_pair = (mid - s.points()[i]).norm_sqr();
                let intruder = (0..s.len()).any(|k| {
                    k != i
                        && k != j
                        && cluster(k) != cluster(i)
                        && (mid - s.points()[k]).norm_sqr() < d_pair + 1e-9
                });
                if intruder {
                    continue;
                }
                assert_eq!(map.cluster_decode(mid, &s).unwrap(), cluster(i));
                checked += 1;
            }
        }
        assert!(checked > 0, "no clean same-cluster midpoints found");
    }

    #[test]
    fn grid_display_matches_layout() {
        let text = format!("{}", DenoiseMap::c1());
        let rows: Vec<&str> = text.lines().skip(1).collect();
        assert_eq!(rows, vec!["1 3 0 2", "0 2 1 3", "3 1 2 0", "2 0 3 1"]);
    }

    #[test]
    fn adaptive_dominates_fixed_c0_on_grid() {
        let q = Constellation::qpsk();
        let c0 = DenoiseMap::c0();
        let mut strictly_better = 0;
        for k in 0..1024 {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / 1024.0;
            let s = superpose(&q, &q, theta).unwrap();
            let adaptive = select_map(theta);
            let da = s
                .min_cross_cluster_distance_sq(|a, b| adaptive.cluster_of(a, b))
                .unwrap();
            let d0 = s
                .min_cross_cluster_distance_sq(|a, b| c0.cluster_of(a, b))
                .unwrap();
            assert!(
                da >= d0 - 1e-12,
                "adaptive below fixed C0 at theta={theta}: {da} < {d0}"
            );
            if da > d0 + 1e-12 {
                strictly_better += 1;
            }
            // the closed form upper-bounds the adaptive distance
            assert!(da <= dmin_sq_analytic(theta, 1.0) + 1e-9);
        }
        assert!(strictly_better > 0, "two maps never beat one");
    }
}
