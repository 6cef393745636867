//! Closed-form BER bounds for the relaying schemes.
//!
//! A received bit is in error if either the multiple-access phase or the
//! broadcast phase fails, so the end-to-end bit error probability is bounded
//! by the sum of the per-phase probabilities. The broadcast phase is a plain
//! QPSK link over two cascaded hops. The multiple-access term depends on the
//! scenario: with phase-synchronized users it follows from the neighbour
//! geometry of the 9-point superposed constellation; with a random channel
//! phase it is a Chernoff-style bound averaged over the phase, evaluated by
//! numerical quadrature.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};

use crate::links::{cascade_snr, LinkBudget};
use crate::{Error, Result};

/// Gaussian tail probability `Q(x) = erfc(x/√2)/2`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Which multiple-access analysis applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundScenario {
    /// Users phase-synchronized, superposed signal pre-scaled for the limiter.
    SyncScaled,
    /// Channel phase uniform over [0, 2π), adaptive denoising maps.
    RandomPhase,
}

/// Per-phase bound components. `p_e_total` is the raw sum and may exceed 1
/// at low SNR; [`BoundResult::reported_total`] clamps it for reporting.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundResult {
    pub scenario: BoundScenario,
    pub p_e_ma: f64,
    pub p_e_bc: f64,
    pub p_e_total: f64,
}

impl BoundResult {
    pub fn reported_total(&self) -> f64 {
        self.p_e_total.min(1.0)
    }
}

/// Broadcast-phase bit error bound: QPSK over the cascaded forward links.
pub fn bound_bc(budget: &LinkBudget) -> Result<f64> {
    let eq = cascade_snr(budget.gamma_fu(), budget.gamma_fd())?;
    Ok(q_function(eq.sqrt()))
}

/// Equivalent multiple-access SNR: uplink doubled, downlink halved, cascaded.
pub fn ma_equivalent_snr(budget: &LinkBudget) -> Result<f64> {
    let (up, down) = crate::links::plnc_ma_snrs(budget);
    cascade_snr(up, down)
}

/// Multiple-access clustering error bound with synchronized users:
/// `3Q(√γ) + (9/4)Q(√(2γ))` at the cascaded equivalent SNR.
///
/// The coefficients collect the neighbour counts of the 9-point
/// constellation: the four corner points (weight 4/16) see two neighbours at
/// the short distance and one at the long one, the four edge points (8/16)
/// see three and two, and the centre (4/16) sees four and four.
pub fn bound_ma_sync(budget: &LinkBudget) -> Result<f64> {
    let snr = ma_equivalent_snr(budget)?;
    Ok(eval_sync_ma(snr))
}

fn eval_sync_ma(snr: f64) -> f64 {
    3.0 * q_function(snr.sqrt()) + 2.25 * q_function((2.0 * snr).sqrt())
}

/// Multiple-access bound without phase synchronization:
/// `(1/π) ∫₀^{π/2} exp(−(1.5 − (cos θ + sin θ)) · SNR) dθ`
/// at the cascaded equivalent SNR, integrated to 1e-12 absolute.
pub fn bound_ma_random_phase(budget: &LinkBudget) -> Result<f64> {
    let snr = ma_equivalent_snr(budget)?;
    Ok(random_phase_integral(snr)? / PI)
}

/// The bare integral over [0, π/2] (without the 1/π prefactor).
pub fn random_phase_integral(snr: f64) -> Result<f64> {
    let f = |theta: f64| (-(1.5 - (theta.cos() + theta.sin())) * snr).exp();
    // split at the π/4 maximum of the integrand
    let a = adaptive_simpson(&f, 0.0, FRAC_PI_4, 5e-13)?;
    let b = adaptive_simpson(&f, FRAC_PI_4, FRAC_PI_2, 5e-13)?;
    Ok(a + b)
}

/// Scenario bound: the matching multiple-access term plus the broadcast term.
pub fn total_bound(scenario: BoundScenario, budget: &LinkBudget) -> Result<BoundResult> {
    budget.validate()?;
    let p_e_ma = match scenario {
        BoundScenario::SyncScaled => bound_ma_sync(budget)?,
        BoundScenario::RandomPhase => bound_ma_random_phase(budget)?,
    };
    let p_e_bc = bound_bc(budget)?;
    Ok(BoundResult {
        scenario,
        p_e_ma,
        p_e_bc,
        p_e_total: p_e_ma + p_e_bc,
    })
}

/// Reference bit error estimate for the system without network coding: QPSK
/// over the cascaded return hops (regenerated at the hub), then QPSK over
/// the cascaded forward hops.
pub fn bound_baseline(budget: &LinkBudget) -> Result<f64> {
    let ret = cascade_snr(budget.gamma_ru(), budget.gamma_rd())?;
    let fwd = cascade_snr(budget.gamma_fu(), budget.gamma_fd())?;
    Ok(q_function(ret.sqrt()) + q_function(fwd.sqrt()))
}

/// Adaptive Simpson quadrature with a Richardson error estimate.
fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 {
            return Err(Error::QuadratureFailure(format!(
                "interval [{a}, {b}] still off by {delta:e} at maximum depth"
            )));
        }
        let l = recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)?;
        let r = recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)?;
        Ok(l + r)
    }

    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 48)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn q_function_reference_values() {
        // high-precision erfc oracle values
        let cases = [
            (0.0, 0.5),
            (0.5, 0.30853753872598689636),
            (1.0, 0.15865525393145705141),
            (2.0, 0.022750131948179207200),
            (3.0, 0.0013498980316300945267),
            (5.0, 2.8665157187919391167e-7),
            (8.0, 6.2209605742717841235e-16),
            (-3.0, 0.99865010196836990547),
        ];
        for (x, want) in cases {
            let got = q_function(x);
            assert!(
                ((got - want) / want).abs() < 1e-12,
                "Q({x}) = {got}, want {want}"
            );
        }
    }

    #[test]
    fn q_function_chernoff_and_symmetry() {
        for i in 0..=80 {
            let x = i as f64 * 0.1;
            assert!(q_function(x) <= 0.5 * (-x * x / 2.0).exp() + 1e-300);
            assert!((q_function(x) + q_function(-x) - 1.0).abs() < 1e-12);
            if i > 0 {
                assert!(q_function(x) < q_function(x - 0.1));
            }
        }
    }

    #[test]
    fn sync_ma_reference_value() {
        // E/N0 = 9: 3Q(3) + 2.25 Q(√18)
        let v = eval_sync_ma(9.0);
        assert!((v - 4.0745459040136922015e-3).abs() < 1e-14);
    }

    #[test]
    fn sync_ma_weight_algebra() {
        // the per-cluster weights (4,8,4)/16 with neighbour counts (2,3,4)
        // and (1,2,4) recombine into the coefficients (3, 9/4)
        for snr in [0.3f64, 1.7, 9.0, 25.0, 60.0] {
            let q1 = q_function(snr.sqrt());
            let q2 = q_function((2.0 * snr).sqrt());
            let per_cluster = 0.25 * (2.0 * q1 + q2) + 0.5 * (3.0 * q1 + 2.0 * q2)
                + 0.25 * (4.0 * q1 + 4.0 * q2);
            assert!((per_cluster - eval_sync_ma(snr)).abs() <= 1e-15 * per_cluster.max(1e-30));
        }
    }

    #[test]
    fn bound_bc_composes_cascade_and_q() {
        let b = LinkBudget {
            gamma_ru_db: 15.0,
            gamma_rd_db: 23.0,
            gamma_fu_db: 120.0, // effectively ideal uplink
            gamma_fd_db: 9.5,
        };
        let got = bound_bc(&b).unwrap();
        let want = q_function(crate::links::db_to_linear(9.5).sqrt());
        assert!(((got - want) / want).abs() < 1e-6);

        let equal = LinkBudget {
            gamma_fu_db: 10.0,
            gamma_fd_db: 10.0,
            ..b
        };
        let eq = cascade_snr(10f64.powf(1.0), 10f64.powf(1.0)).unwrap();
        assert!((bound_bc(&equal).unwrap() - q_function(eq.sqrt())).abs() < 1e-15);

        let ideal = LinkBudget {
            gamma_fu_db: 300.0,
            gamma_fd_db: 300.0,
            ..b
        };
        assert!(bound_bc(&ideal).unwrap() < 1e-30);
    }

    #[test]
    fn random_phase_integral_against_midpoint_oracle() {
        // brute-force midpoint rule, 10^6 points
        let oracle = |snr: f64| {
            let n = 1_000_000usize;
            let h = FRAC_PI_2 / n as f64;
            let mut acc = 0.0;
            for k in 0..n {
                let t = (k as f64 + 0.5) * h;
                acc += (-(1.5 - (t.cos() + t.sin())) * snr).exp();
            }
            acc * h
        };
        for snr in [1.0, 10.0, 100.0] {
            let got = random_phase_integral(snr).unwrap();
            let want = oracle(snr);
            assert!(
                (got - want).abs() < 1e-9,
                "snr {snr}: {got} vs oracle {want}"
            );
        }
    }

    #[test]
    fn random_phase_bound_values() {
        // integrand ≡ 1 at zero SNR: (1/π)(π/2) = 1/2
        let b0 = LinkBudget {
            gamma_ru_db: -300.0,
            gamma_rd_db: -300.0,
            gamma_fu_db: 23.0,
            gamma_fd_db: 9.0,
        };
        let near_zero = bound_ma_random_phase(&b0).unwrap();
        assert!((near_zero - 0.5).abs() < 1e-9);

        // monotone decreasing in SNR
        let mut last = f64::INFINITY;
        for ru in [3.0, 9.0, 15.0] {
            let b = LinkBudget {
                gamma_ru_db: ru,
                gamma_rd_db: 23.0,
                gamma_fu_db: 23.0,
                gamma_fd_db: 9.0,
            };
            let v = bound_ma_random_phase(&b).unwrap();
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn random_phase_integrand_shape() {
        // bounded by 1 and maximal at π/4 where it equals e^{-(1.5-√2)·SNR}
        let snr = 7.3;
        let f = |t: f64| (-(1.5 - (t.cos() + t.sin())) * snr).exp();
        let peak = (-(1.5 - SQRT_2) * snr).exp();
        for k in 0..=64 {
            let t = FRAC_PI_2 * k as f64 / 64.0;
            assert!(f(t) <= 1.0 + 1e-15);
            assert!(f(t) <= peak + 1e-15);
        }
        assert!((f(FRAC_PI_4) - peak).abs() < 1e-15);
    }

    #[test]
    fn total_bound_composition() {
        let b = LinkBudget::reference(15.0);
        let sync = total_bound(BoundScenario::SyncScaled, &b).unwrap();
        assert!((sync.p_e_total - (sync.p_e_ma + sync.p_e_bc)).abs() < 1e-18);
        let rp = total_bound(BoundScenario::RandomPhase, &b).unwrap();
        assert!(rp.p_e_total >= sync.p_e_total);
        // strong MA links leave the broadcast term in charge
        let strong = LinkBudget {
            gamma_ru_db: 60.0,
            gamma_rd_db: 60.0,
            ..b
        };
        let dom = total_bound(BoundScenario::SyncScaled, &strong).unwrap();
        assert!(dom.p_e_ma < 1e-3 * dom.p_e_bc);
        // low-SNR sums exceed one raw, clamp for reporting
        let weak = LinkBudget {
            gamma_ru_db: -10.0,
            gamma_rd_db: -10.0,
            gamma_fu_db: -10.0,
            gamma_fd_db: -10.0,
        };
        let w = total_bound(BoundScenario::SyncScaled, &weak).unwrap();
        assert!(w.p_e_total > 1.0);
        assert!((w.reported_total() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bounds_nonincreasing_in_every_link() {
        let base = LinkBudget::reference(9.0);
        for scenario in [BoundScenario::SyncScaled, BoundScenario::RandomPhase] {
            let t0 = total_bound(scenario, &base).unwrap().p_e_total;
            for bump in 0..4 {
                let mut b = base;
                match bump {
                    0 => b.gamma_ru_db += 2.0,
                    1 => b.gamma_rd_db += 2.0,
                    2 => b.gamma_fu_db += 2.0,
                    _ => b.gamma_fd_db += 2.0,
                }
                let t = total_bound(scenario, &b).unwrap().p_e_total;
                assert!(t <= t0 + 1e-15, "{scenario:?} bump {bump}: {t} > {t0}");
            }
        }
    }

    proptest! {
        #[test]
        fn random_phase_between_peak_bounds(snr in 0.0f64..200.0) {
            // the integrand peak at π/4 bounds the normalized integral
            let v = random_phase_integral(snr).unwrap() / PI;
            let peak = (-(1.5 - SQRT_2) * snr).exp();
            prop_assert!(v <= 0.5 * peak + 1e-12);
            prop_assert!(v >= 0.0);
        }
    }
}
