//! Greedy sphere-packing constellation design and single-hop SER tooling.
//!
//! Relaying with denoising maps can require broadcast constellations of
//! non-standard cardinality (five points for QPSK end nodes). The packer
//! maximizes the minimum Euclidean distance under an average- or peak-power
//! budget, honouring per-symbol probabilities: the shape is grown at unit
//! minimum distance by repeatedly inserting the feasible point closest to
//! the origin, translated to its probability-weighted centroid, locally
//! polished, and finally rescaled so the power budget is met exactly. The
//! result maximizes distance per unit power but not PAPR, which is what the
//! single-hop SER chain here is used to study.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::amplifier::AmplifierModel;
use crate::constellation::Constellation;
use crate::links::{awgn, db_to_linear, frame_rng};
use crate::{Error, Result};

/// Power budget for a packing problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PowerConstraint {
    AveragePower(f64),
    PeakPower(f64),
}

impl PowerConstraint {
    fn limit(&self) -> f64 {
        match self {
            PowerConstraint::AveragePower(l) | PowerConstraint::PeakPower(l) => *l,
        }
    }
}

/// A constellation design request.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PackingProblem {
    pub cardinality: usize,
    pub symbol_probabilities: Vec<f64>,
    pub constraint: PowerConstraint,
}

impl PackingProblem {
    /// Uniform-probability problem of the given size.
    pub fn uniform(cardinality: usize, constraint: PowerConstraint) -> Self {
        PackingProblem {
            cardinality,
            symbol_probabilities: vec![1.0 / cardinality as f64; cardinality],
            constraint,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.cardinality < 2 {
            return Err(Error::InvalidParameter(
                "packing needs at least 2 points".into(),
            ));
        }
        if self.symbol_probabilities.len() != self.cardinality {
            return Err(Error::InvalidParameter(format!(
                "{} probabilities for {} symbols",
                self.symbol_probabilities.len(),
                self.cardinality
            )));
        }
        let total: f64 = self.symbol_probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 || self.symbol_probabilities.iter().any(|p| *p < 0.0) {
            return Err(Error::InvalidParameter(
                "symbol probabilities must be nonnegative and sum to 1".into(),
            ));
        }
        if !(self.constraint.limit() > 0.0) {
            return Err(Error::InvalidParameter(
                "power limit must be positive".into(),
            ));
        }
        Ok(())
    }
}

const FEAS_TOL: f64 = 1e-9;
const POLISH_PASSES: u32 = 200;

/// Greedy sphere packing: best of `restarts` runs by final minimum distance,
/// ties broken by the lowest restart index. Deterministic for a fixed seed.
pub fn greedy_pack(problem: &PackingProblem, seed: u64, restarts: u32) -> Result<Constellation> {
    problem.validate()?;
    if restarts == 0 {
        return Err(Error::InvalidParameter("restarts must be >= 1".into()));
    }

    let runs: Vec<Constellation> = {
        let run = |r: u32| pack_once(problem, seed, r);
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            (0..restarts).into_par_iter().map(run).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..restarts).map(run).collect()
        }
    };
    let best = runs
        .into_iter()
        .max_by(|a, b| {
            a.min_distance_sq()
                .partial_cmp(&b.min_distance_sq())
                .unwrap()
        })
        .expect("at least one restart");
    Ok(best)
}

fn pack_once(problem: &PackingProblem, seed: u64, restart: u32) -> Constellation {
    let n = problem.cardinality;
    let mut rng = frame_rng(seed, restart, 0);

    // place high-probability symbols first
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        problem.symbol_probabilities[b]
            .partial_cmp(&problem.symbol_probabilities[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let probs: Vec<f64> = order
        .iter()
        .map(|&i| problem.symbol_probabilities[i])
        .collect();

    // optimal 2-point core at unit separation; recentering weights it
    let mut pts = vec![Complex64::new(-0.5, 0.0), Complex64::new(0.5, 0.0)];
    polish(&mut pts, &probs[..2]);

    for k in 2..n {
        let cands = insertion_candidates(&pts);
        let mut best_cost = f64::INFINITY;
        for c in &cands {
            if feasible(&pts, *c) {
                best_cost = best_cost.min(c.norm());
            }
        }
        let near_best: Vec<Complex64> = cands
            .into_iter()
            .filter(|c| feasible(&pts, *c) && c.norm() <= best_cost + FEAS_TOL)
            .collect();
        let pick = near_best[rng.gen_range(0..near_best.len())];
        pts.push(pick);
        polish(&mut pts, &probs[..k + 1]);
    }

    // scale so the power budget is met exactly
    let shape_power = match problem.constraint {
        PowerConstraint::AveragePower(_) => pts
            .iter()
            .zip(&probs)
            .map(|(p, w)| w * p.norm_sqr())
            .sum::<f64>(),
        PowerConstraint::PeakPower(_) => pts
            .iter()
            .map(|p| p.norm_sqr())
            .fold(f64::NEG_INFINITY, f64::max),
    };
    let scale = (problem.constraint.limit() / shape_power).sqrt();

    // back to symbol order
    let mut points = vec![Complex64::new(0.0, 0.0); n];
    for (g, &sym) in order.iter().enumerate() {
        points[sym] = pts[g] * scale;
    }
    Constellation::new(
        points,
        problem.symbol_probabilities.clone(),
        Some((0..n as u8).collect()),
    )
    .expect("packed constellation is valid")
}

fn feasible(placed: &[Complex64], cand: Complex64) -> bool {
    placed
        .iter()
        .all(|p| (cand - p).norm_sqr() >= (1.0 - FEAS_TOL) * (1.0 - FEAS_TOL))
}

/// Positions where the closest feasible point to the origin can sit: the
/// origin itself, the near/far points of each unit exclusion circle along
/// its ray, and all pairwise circle intersections.
fn insertion_candidates(placed: &[Complex64]) -> Vec<Complex64> {
    let mut cands = vec![Complex64::new(0.0, 0.0)];
    for &p in placed {
        let r = p.norm();
        if r > 1e-9 {
            let dir = p / r;
            cands.push(dir * (r - 1.0));
            cands.push(dir * (r + 1.0));
        } else {
            for k in 0..8 {
                cands.push(Complex64::from_polar(1.0, k as f64 * std::f64::consts::FRAC_PI_4));
            }
        }
    }
    for i in 0..placed.len() {
        for j in (i + 1)..placed.len() {
            let p = placed[i];
            let q = placed[j];
            let d = (q - p).norm();
            if d > 1e-9 && d < 2.0 {
                let mid = (p + q) * 0.5;
                let h = (1.0 - 0.25 * d * d).max(0.0).sqrt();
                let normal = Complex64::new(-(q - p).im, (q - p).re) / d;
                cands.push(mid + normal * h);
                cands.push(mid - normal * h);
            }
        }
    }
    cands
}

/// Coordinate-descent polish: translate to the probability-weighted centroid
/// and walk each point downhill in weighted energy, keeping unit spacing.
/// The step shrinks by 0.7 whenever a full pass fails to improve.
fn polish(pts: &mut [Complex64], probs: &[f64]) {
    let mut step = 0.25;
    for _ in 0..POLISH_PASSES {
        recenter(pts, probs);
        let mut improved = false;
        for i in 0..pts.len() {
            let mut best = pts[i];
            let mut best_e = pts[i].norm_sqr();
            for (dx, dy) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
                let cand = pts[i] + Complex64::new(dx, dy);
                let ok = pts
                    .iter()
                    .enumerate()
                    .all(|(j, p)| j == i || (cand - p).norm_sqr() >= (1.0 - 1e-12));
                if ok {
                    let e = cand.norm_sqr();
                    if e < best_e - 1e-15 {
                        best = cand;
                        best_e = e;
                    }
                }
            }
            if best != pts[i] {
                pts[i] = best;
                improved = true;
            }
        }
        if !improved {
            step *= 0.7;
            if step < 1e-9 {
                break;
            }
        }
    }
    recenter(pts, probs);
}

fn recenter(pts: &mut [Complex64], probs: &[f64]) {
    let total: f64 = probs.iter().sum();
    let centroid = pts
        .iter()
        .zip(probs)
        .map(|(p, w)| p * *w)
        .sum::<Complex64>()
        / total;
    for p in pts.iter_mut() {
        *p -= centroid;
    }
}

/// `n` points uniformly spaced on the circle of squared magnitude `energy`.
pub fn psk(n: usize, energy: f64) -> Result<Constellation> {
    if n < 2 {
        return Err(Error::InvalidParameter("psk needs at least 2 points".into()));
    }
    let r = energy.sqrt();
    let points = (0..n)
        .map(|k| Complex64::from_polar(r, 2.0 * std::f64::consts::PI * k as f64 / n as f64))
        .collect();
    Constellation::new(points, vec![1.0 / n as f64; n], Some((0..n as u8).collect()))
}

/// Peak-to-average power ratio `E_peak / E_avg`.
pub fn papr(c: &Constellation) -> Result<f64> {
    let avg = c.avg_energy();
    if avg <= 0.0 {
        return Err(Error::InvalidParameter(
            "PAPR undefined at zero average energy".into(),
        ));
    }
    Ok(c.peak_energy() / avg)
}

/// Monte Carlo symbol error tally of one relay hop.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SerResult {
    pub symbol_errors: u64,
    pub trials: u64,
}

impl SerResult {
    pub fn ser(&self) -> f64 {
        self.symbol_errors as f64 / self.trials as f64
    }

    /// Half-width of the 95% normal-approximation confidence interval.
    pub fn ci95(&self) -> f64 {
        let p = self.ser();
        1.96 * (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

const SER_BATCH: u64 = 1 << 16;

/// Symbol error rate of one hop through the amplifier: draw a symbol by its
/// probability, add uplink noise at σ² = E_avg/γ_up, amplify, add downlink
/// noise at σ² = 1/γ_down (the unit-energy reference), and decode by nearest
/// neighbour against the amplified noiseless points.
pub fn ser_single_hop(
    c: &Constellation,
    gamma_up_db: f64,
    gamma_down_db: f64,
    model: &AmplifierModel,
    trials: u64,
    seed: u64,
) -> Result<SerResult> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let var_up = c.avg_energy() / db_to_linear(gamma_up_db);
    let var_down = 1.0 / db_to_linear(gamma_down_db);
    let reference: Vec<Complex64> = c.points().iter().map(|p| model.apply(*p)).collect();
    let cumulative: Vec<f64> = c
        .probabilities()
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();

    let batches = trials.div_ceil(SER_BATCH);
    let run_batch = |b: u64| -> u64 {
        let mut rng = frame_rng(seed, b as u32, 0);
        let count = SER_BATCH.min(trials - b * SER_BATCH);
        let mut errors = 0u64;
        for _ in 0..count {
            let u: f64 = rng.gen();
            let sym = cumulative.partition_point(|&c| c < u).min(c.len() - 1);
            let y = c.points()[sym] + awgn(var_up, &mut rng);
            let z = model.apply(y) + awgn(var_down, &mut rng);
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (i, r) in reference.iter().enumerate() {
                let d = (z - r).norm_sqr();
                if d < best_d {
                    best_d = d;
                    best = i;
                }
            }
            if best != sym {
                errors += 1;
            }
        }
        errors
    };

    let symbol_errors: u64 = {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            (0..batches).into_par_iter().map(run_batch).sum()
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..batches).map(run_batch).sum()
        }
    };
    Ok(SerResult {
        symbol_errors,
        trials,
    })
}
