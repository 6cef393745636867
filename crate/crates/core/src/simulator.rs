//! Frame-based Monte Carlo engine for the two-way relaying schemes.
//!
//! A frame is `frame_symbols` QPSK symbols per user. For the network-coded
//! schemes each symbol slot runs the full chain: both users transmit, the
//! satellite amplifies the superposition under the peak limit, the hub
//! cluster-decodes through the denoising map, the mapped symbol goes back
//! through the satellite, and each user resolves the partner symbol from the
//! broadcast value and its own label. The baseline scheme sends each
//! direction separately with regeneration at the hub. Bit and frame errors
//! are tallied per direction; throughput is `(1 − FER) · η` with the
//! combined FER (a frame counts as errored if either direction fails).
//!
//! Frames are independent work units. Frame `i` of a run draws every random
//! value from a ChaCha stream keyed by `(master seed, i)`, and stopping is
//! only evaluated on fixed-size batch boundaries, so a run is bit-identical
//! no matter how many workers execute it (or whether the `parallel` feature
//! is compiled in at all).

use num_complex::Complex64;
use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::ops::Add;

use crate::amplifier::{saturate, AmplifierModel, Strategy as AmpStrategy};
use crate::analysis::{bound_baseline, total_bound, BoundScenario};
use crate::constellation::BitMapper;
use crate::links::{awgn, derive_seed, frame_rng, LinkBudget};
use crate::mapping::{select_map_id, DenoiseMap, MapId};
use crate::{Error, Result};

/// Peak output magnitude of the satellite amplifier. Unity so the plain
/// QPSK reference passes undistorted.
pub const AMP_THRESHOLD: f64 = 1.0;

/// Stopping is checked after every batch of this many frames, regardless of
/// worker count, so the consumed frame count is deterministic.
pub const FRAME_BATCH: u64 = 1024;

/// Relaying scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Users phase-synchronized; the hub sees the 9-point constellation.
    PlncSync,
    /// Channel phase uniform per frame; the hub knows it perfectly.
    PlncRandomPhase,
    /// Conventional relaying: each direction on its own, hub regenerates.
    NoPlncBaseline,
}

/// How the multiple-access signal meets the peak limiter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Pre-scale so the superposed peak fits the threshold.
    Scale,
    /// Let the limiter truncate.
    Clip,
}

/// Denoising-map policy for the random-phase scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapPolicy {
    /// Pick C0 or C1 from the channel phase.
    AdaptiveC0C1,
    /// Always the XOR map.
    FixedC0,
}

/// Everything that defines one simulated operating point except the SNR
/// sweep and the stopping rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub scheme: Scheme,
    pub strategy: Strategy,
    pub map_policy: MapPolicy,
    pub budget: LinkBudget,
    pub frame_symbols: u32,
    /// Spectral efficiency η in bits/s/Hz.
    pub eta: f64,
    /// Pre-gain of the Scale strategy. 1/2 fits the worst-case superposed
    /// peak at every phase.
    pub ma_scale_gain: f64,
    /// Scale by the actual peak of the phase-rotated constellation instead
    /// of the fixed worst-case gain.
    pub ma_adaptive_gain: bool,
    /// Apply the peak limiter to the noisy signal in the broadcast phase
    /// and the baseline hops. The broadcast signal set is unit-energy, so
    /// the limiter is transparent for the noiseless points; clipping its
    /// uplink noise costs ~0.1 dB and is off by default. The
    /// multiple-access limiter always acts on the noisy signal.
    pub clip_noise: bool,
}

impl Scenario {
    /// Scheme defaults: Scale strategy, adaptive maps, 256-symbol frames,
    /// η = 1 for the network-coded schemes and 0.5 for the baseline.
    pub fn new(scheme: Scheme, budget: LinkBudget) -> Self {
        Scenario {
            scheme,
            strategy: Strategy::Scale,
            map_policy: MapPolicy::AdaptiveC0C1,
            budget,
            frame_symbols: 256,
            eta: match scheme {
                Scheme::NoPlncBaseline => 0.5,
                _ => 1.0,
            },
            ma_scale_gain: 0.5,
            ma_adaptive_gain: false,
            clip_noise: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.budget.validate()?;
        if self.frame_symbols == 0 {
            return Err(Error::InvalidParameter("frame_symbols must be >= 1".into()));
        }
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "eta must be positive, got {}",
                self.eta
            )));
        }
        if !(self.ma_scale_gain > 0.0 && self.ma_scale_gain <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "ma_scale_gain must be in (0, 1], got {}",
                self.ma_scale_gain
            )));
        }
        Ok(())
    }

    pub fn scheme_str(&self) -> &'static str {
        match self.scheme {
            Scheme::PlncSync => "plnc-sync",
            Scheme::PlncRandomPhase => "plnc-random-phase",
            Scheme::NoPlncBaseline => "no-plnc-baseline",
        }
    }

    pub fn strategy_str(&self) -> &'static str {
        match self.scheme {
            Scheme::NoPlncBaseline => "-",
            _ => match self.strategy {
                Strategy::Scale => "scale",
                Strategy::Clip => "clip",
            },
        }
    }

    pub fn map_policy_str(&self) -> &'static str {
        match self.scheme {
            Scheme::PlncRandomPhase => match self.map_policy {
                MapPolicy::AdaptiveC0C1 => "adaptive-c0c1",
                MapPolicy::FixedC0 => "fixed-c0",
            },
            _ => "-",
        }
    }

    /// The matching analytical bound (clamped to 1) at this budget.
    pub fn bound(&self) -> Result<f64> {
        Ok(match self.scheme {
            Scheme::PlncSync => {
                total_bound(BoundScenario::SyncScaled, &self.budget)?.reported_total()
            }
            Scheme::PlncRandomPhase => {
                total_bound(BoundScenario::RandomPhase, &self.budget)?.reported_total()
            }
            Scheme::NoPlncBaseline => bound_baseline(&self.budget)?.min(1.0),
        })
    }
}

/// When a point stops: after at least `min_frames` and `min_bit_errors`,
/// or at the `max_frames` cap, whichever comes first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stopping {
    pub min_bit_errors: u64,
    pub min_frames: u64,
    pub max_frames: u64,
}

impl Default for Stopping {
    fn default() -> Self {
        Stopping {
            min_bit_errors: 100,
            min_frames: 1,
            max_frames: 10_000_000,
        }
    }
}

impl Stopping {
    pub fn validate(&self) -> Result<()> {
        if self.max_frames == 0 || self.max_frames > u32::MAX as u64 {
            return Err(Error::InvalidParameter(format!(
                "max_frames must be in [1, {}]",
                u32::MAX
            )));
        }
        if self.min_frames > self.max_frames {
            return Err(Error::InvalidParameter(
                "min_frames exceeds max_frames".into(),
            ));
        }
        Ok(())
    }
}

/// Direction-resolved error counters of one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub scenario: Scenario,
    pub seed: u64,
    pub frames: u64,
    pub bits: u64,
    pub bit_errors: u64,
    pub bit_errors_a_to_b: u64,
    pub bit_errors_b_to_a: u64,
    /// Frames with an error in either direction.
    pub frame_errors: u64,
    pub frame_errors_a_to_b: u64,
    pub frame_errors_b_to_a: u64,
    /// The error target was not reached before the frame cap; the BER
    /// estimate is only an upper bound.
    pub censored: bool,
}

impl SimResult {
    pub fn ber(&self) -> f64 {
        self.bit_errors as f64 / self.bits as f64
    }

    pub fn fer(&self) -> f64 {
        self.frame_errors as f64 / self.frames as f64
    }

    pub fn throughput(&self) -> f64 {
        (1.0 - self.fer()) * self.scenario.eta
    }

    /// Half-width of the 95% normal-approximation CI on the BER.
    pub fn ber_ci95(&self) -> f64 {
        let p = self.ber();
        1.96 * (p * (1.0 - p) / self.bits as f64).sqrt()
    }

    /// Sums the counters of two partial results (same scenario shape).
    pub fn merge(mut self, other: &SimResult) -> SimResult {
        self.frames += other.frames;
        self.bits += other.bits;
        self.bit_errors += other.bit_errors;
        self.bit_errors_a_to_b += other.bit_errors_a_to_b;
        self.bit_errors_b_to_a += other.bit_errors_b_to_a;
        self.frame_errors += other.frame_errors;
        self.frame_errors_a_to_b += other.frame_errors_a_to_b;
        self.frame_errors_b_to_a += other.frame_errors_b_to_a;
        self.censored = self.censored && other.censored;
        self
    }
}

/// Per-frame error counters; integer sums merge associatively, so parallel
/// reduction order cannot change a result.
#[derive(Debug, Default, Clone, Copy)]
struct FrameTally {
    frames: u64,
    bit_errors_a_to_b: u64,
    bit_errors_b_to_a: u64,
    frame_errors_a_to_b: u64,
    frame_errors_b_to_a: u64,
    frame_errors_either: u64,
}

impl Add for FrameTally {
    type Output = FrameTally;
    fn add(self, o: FrameTally) -> FrameTally {
        FrameTally {
            frames: self.frames + o.frames,
            bit_errors_a_to_b: self.bit_errors_a_to_b + o.bit_errors_a_to_b,
            bit_errors_b_to_a: self.bit_errors_b_to_a + o.bit_errors_b_to_a,
            frame_errors_a_to_b: self.frame_errors_a_to_b + o.frame_errors_a_to_b,
            frame_errors_b_to_a: self.frame_errors_b_to_a + o.frame_errors_b_to_a,
            frame_errors_either: self.frame_errors_either + o.frame_errors_either,
        }
    }
}

/// QPSK ML decision by quadrant; label bits are the sign bits. Boundary
/// samples resolve exactly like nearest-neighbour with lowest-index ties.
#[inline]
fn quadrant_label(z: Complex64) -> u8 {
    (if z.re < 0.0 { 1 } else { 0 }) | (if z.im < 0.0 { 2 } else { 0 })
}

/// Per-phase lookup tables for one channel phase.
struct PlncTables {
    /// Noiseless superposed points `μ(m_A) + e^{jθ} μ(m_B)`, index `m_B·4 + m_A`.
    presum: [Complex64; 16],
    /// The same points after the multiple-access amplifier; the hub decodes
    /// against these (mismatched but deterministic under Clip). Kept
    /// uncoalesced: at a singular phase, coincident entries of different
    /// clusters model the genuinely unresolvable receive point, and the
    /// lowest-index tie rule picks one.
    reference: [Complex64; 16],
    cluster: [u8; 16],
    /// `resolve_a[m_A][cluster] = m_B`; user A recovers the partner label.
    resolve_a: [[u8; 4]; 4],
    /// `resolve_b[m_B][cluster] = m_A`.
    resolve_b: [[u8; 4]; 4],
    ma_model: AmplifierModel,
}

impl PlncTables {
    fn build(scenario: &Scenario, theta: f64) -> PlncTables {
        let map_id = match (scenario.scheme, scenario.map_policy) {
            (Scheme::PlncRandomPhase, MapPolicy::AdaptiveC0C1) => select_map_id(theta),
            (Scheme::PlncRandomPhase, MapPolicy::FixedC0) => MapId::C0,
            _ => MapId::C0,
        };
        let map = DenoiseMap::get(map_id);
        let mapper = BitMapper::qpsk();
        let rot = Complex64::from_polar(1.0, theta);

        let mut presum = [Complex64::new(0.0, 0.0); 16];
        let mut cluster = [0u8; 16];
        for mb in 0..4u8 {
            for ma in 0..4u8 {
                let i = (mb * 4 + ma) as usize;
                presum[i] = mapper.point_of_label(ma) + rot * mapper.point_of_label(mb);
                cluster[i] = map.cluster_of(ma, mb);
            }
        }

        let gain = if scenario.ma_adaptive_gain {
            let peak = presum.iter().map(|p| p.norm()).fold(0.0, f64::max);
            (AMP_THRESHOLD / peak).min(1.0)
        } else {
            scenario.ma_scale_gain
        };
        let ma_model = match scenario.strategy {
            Strategy::Scale => AmplifierModel {
                threshold: AMP_THRESHOLD,
                strategy: AmpStrategy::Scale(gain),
            },
            Strategy::Clip => AmplifierModel {
                threshold: AMP_THRESHOLD,
                strategy: AmpStrategy::Clip,
            },
        };
        let mut reference = [Complex64::new(0.0, 0.0); 16];
        for i in 0..16 {
            reference[i] = ma_model.apply(presum[i]);
        }

        let mut resolve_a = [[0u8; 4]; 4];
        let mut resolve_b = [[0u8; 4]; 4];
        for own in 0..4u8 {
            for c in 0..4u8 {
                resolve_a[own as usize][c as usize] = map
                    .resolve_partner_of_a(own, c)
                    .expect("Latin square column is a permutation");
                resolve_b[own as usize][c as usize] = map
                    .resolve_partner_of_b(own, c)
                    .expect("Latin square row is a permutation");
            }
        }
        PlncTables {
            presum,
            reference,
            cluster,
            resolve_a,
            resolve_b,
            ma_model,
        }
    }
}

/// Immutable state shared by every frame of one operating point.
struct PointContext {
    scenario: Scenario,
    var_ma_up: f64,
    var_ma_down: f64,
    var_bc_up: f64,
    var_bc_down: f64,
    qpsk: [Complex64; 4],
    /// Prebuilt tables for the phase-synchronized scheme (θ fixed at 0).
    sync_tables: Option<PlncTables>,
}

impl PointContext {
    fn new(scenario: &Scenario) -> Result<PointContext> {
        scenario.validate()?;
        // SNRs are defined against the unit-energy reference, so each link
        // contributes noise of variance 1/γ.
        let b = &scenario.budget;
        let mapper = BitMapper::qpsk();
        let mut qpsk = [Complex64::new(0.0, 0.0); 4];
        for m in 0..4u8 {
            qpsk[m as usize] = mapper.point_of_label(m);
        }
        let sync_tables = match scenario.scheme {
            Scheme::PlncSync => Some(PlncTables::build(scenario, 0.0)),
            _ => None,
        };
        Ok(PointContext {
            scenario: *scenario,
            var_ma_up: 1.0 / b.gamma_ru(),
            var_ma_down: 1.0 / b.gamma_rd(),
            var_bc_up: 1.0 / b.gamma_fu(),
            var_bc_down: 1.0 / b.gamma_fd(),
            qpsk,
            sync_tables,
        })
    }
}

/// One network-coded frame. Draw order per symbol slot: one u32 for both
/// labels, then the five complex noise samples in chain order (satellite,
/// hub, satellite again, user A, user B). Random-phase frames draw θ first.
fn plnc_frame(ctx: &PointContext, rng: &mut ChaCha8Rng, tables: &PlncTables) -> FrameTally {
    let mut errs_ab = 0u64; // A's bits misdecoded at B
    let mut errs_ba = 0u64;
    for _ in 0..ctx.scenario.frame_symbols {
        let bits = rng.next_u32();
        let ma = (bits & 3) as u8;
        let mb = ((bits >> 2) & 3) as u8;

        // multiple access: superposition through the limiter to the hub
        let y_s = tables.presum[(mb * 4 + ma) as usize] + awgn(ctx.var_ma_up, rng);
        let x_s = tables.ma_model.apply(y_s);
        let y_h = x_s + awgn(ctx.var_ma_down, rng);
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (i, r) in tables.reference.iter().enumerate() {
            let d = (y_h - r).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        let cluster = tables.cluster[best];

        // broadcast: the mapped symbol back through the satellite
        let x_h = ctx.qpsk[cluster as usize];
        let y_sh = x_h + awgn(ctx.var_bc_up, rng);
        let x_sh = if ctx.scenario.clip_noise {
            saturate(y_sh, AMP_THRESHOLD)
        } else {
            y_sh
        };
        let c_a = quadrant_label(x_sh + awgn(ctx.var_bc_down, rng));
        let c_b = quadrant_label(x_sh + awgn(ctx.var_bc_down, rng));

        // exclusive law: own label plus broadcast value give the partner
        let mb_at_a = tables.resolve_a[ma as usize][c_a as usize];
        let ma_at_b = tables.resolve_b[mb as usize][c_b as usize];
        errs_ba += ((mb_at_a ^ mb) as u32).count_ones() as u64;
        errs_ab += ((ma_at_b ^ ma) as u32).count_ones() as u64;
    }
    FrameTally {
        frames: 1,
        bit_errors_a_to_b: errs_ab,
        bit_errors_b_to_a: errs_ba,
        frame_errors_a_to_b: (errs_ab > 0) as u64,
        frame_errors_b_to_a: (errs_ba > 0) as u64,
        frame_errors_either: (errs_ab > 0 || errs_ba > 0) as u64,
    }
}

/// One baseline frame: per direction, QPSK through satellite to the hub,
/// regeneration, then satellite to the destination.
fn baseline_frame(ctx: &PointContext, rng: &mut ChaCha8Rng) -> FrameTally {
    let mut errs_ab = 0u64;
    let mut errs_ba = 0u64;
    let hop = |m: u8, var_up1: f64, var_down1: f64, var_up2: f64, var_down2: f64,
               rng: &mut ChaCha8Rng| {
        let y1 = ctx.qpsk[m as usize] + awgn(var_up1, rng);
        let x1 = if ctx.scenario.clip_noise {
            saturate(y1, AMP_THRESHOLD)
        } else {
            y1
        };
        let m_hub = quadrant_label(x1 + awgn(var_down1, rng));
        let y2 = ctx.qpsk[m_hub as usize] + awgn(var_up2, rng);
        let x2 = if ctx.scenario.clip_noise {
            saturate(y2, AMP_THRESHOLD)
        } else {
            y2
        };
        quadrant_label(x2 + awgn(var_down2, rng))
    };
    for _ in 0..ctx.scenario.frame_symbols {
        let bits = rng.next_u32();
        let ma = (bits & 3) as u8;
        let mb = ((bits >> 2) & 3) as u8;
        let ma_at_b = hop(
            ma,
            ctx.var_ma_up,
            ctx.var_ma_down,
            ctx.var_bc_up,
            ctx.var_bc_down,
            rng,
        );
        let mb_at_a = hop(
            mb,
            ctx.var_ma_up,
            ctx.var_ma_down,
            ctx.var_bc_up,
            ctx.var_bc_down,
            rng,
        );
        errs_ab += ((ma_at_b ^ ma) as u32).count_ones() as u64;
        errs_ba += ((mb_at_a ^ mb) as u32).count_ones() as u64;
    }
    FrameTally {
        frames: 1,
        bit_errors_a_to_b: errs_ab,
        bit_errors_b_to_a: errs_ba,
        frame_errors_a_to_b: (errs_ab > 0) as u64,
        frame_errors_b_to_a: (errs_ba > 0) as u64,
        frame_errors_either: (errs_ab > 0 || errs_ba > 0) as u64,
    }
}

fn simulate_frame(ctx: &PointContext, seed: u64, frame_index: u32) -> FrameTally {
    let mut rng = frame_rng(seed, 0, frame_index);
    match ctx.scenario.scheme {
        Scheme::PlncSync => plnc_frame(ctx, &mut rng, ctx.sync_tables.as_ref().unwrap()),
        Scheme::PlncRandomPhase => {
            let theta: f64 = rng.gen::<f64>() * TAU;
            let tables = PlncTables::build(&ctx.scenario, theta);
            plnc_frame(ctx, &mut rng, &tables)
        }
        Scheme::NoPlncBaseline => baseline_frame(ctx, &mut rng),
    }
}

/// How frames are executed. Sequential when `workers == 1` or the
/// `parallel` feature is off; otherwise rayon (global pool for
/// `workers == 0`, a dedicated pool for an explicit count).
enum Exec {
    Sequential,
    #[cfg(feature = "parallel")]
    Rayon(Option<rayon::ThreadPool>),
}

impl Exec {
    fn new(workers: usize) -> Result<Exec> {
        if workers == 1 {
            return Ok(Exec::Sequential);
        }
        #[cfg(feature = "parallel")]
        {
            if workers == 0 {
                Ok(Exec::Rayon(None))
            } else {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
                Ok(Exec::Rayon(Some(pool)))
            }
        }
        #[cfg(not(feature = "parallel"))]
        Ok(Exec::Sequential)
    }

    fn tally_range(&self, ctx: &PointContext, seed: u64, lo: u32, hi: u32) -> FrameTally {
        match self {
            Exec::Sequential => (lo..hi)
                .map(|i| simulate_frame(ctx, seed, i))
                .fold(FrameTally::default(), Add::add),
            #[cfg(feature = "parallel")]
            Exec::Rayon(pool) => {
                let par = || {
                    (lo..hi)
                        .into_par_iter()
                        .map(|i| simulate_frame(ctx, seed, i))
                        .reduce(FrameTally::default, Add::add)
                };
                match pool {
                    Some(p) => p.install(par),
                    None => par(),
                }
            }
        }
    }
}

/// Simulates one operating point until the stopping rule fires.
///
/// Deterministic for a fixed seed: identical results for any worker count.
pub fn run_point(
    scenario: &Scenario,
    stopping: &Stopping,
    seed: u64,
    workers: usize,
) -> Result<SimResult> {
    stopping.validate()?;
    let ctx = PointContext::new(scenario)?;
    let exec = Exec::new(workers)?;

    let mut tally = FrameTally::default();
    let mut next = 0u64;
    while next < stopping.max_frames {
        let end = (next + FRAME_BATCH).min(stopping.max_frames);
        tally = tally + exec.tally_range(&ctx, seed, next as u32, end as u32);
        next = end;
        let errors = tally.bit_errors_a_to_b + tally.bit_errors_b_to_a;
        if tally.frames >= stopping.min_frames && errors >= stopping.min_bit_errors {
            break;
        }
    }

    let bit_errors = tally.bit_errors_a_to_b + tally.bit_errors_b_to_a;
    Ok(SimResult {
        scenario: *scenario,
        seed,
        frames: tally.frames,
        bits: tally.frames * scenario.frame_symbols as u64 * 4,
        bit_errors,
        bit_errors_a_to_b: tally.bit_errors_a_to_b,
        bit_errors_b_to_a: tally.bit_errors_b_to_a,
        frame_errors: tally.frame_errors_either,
        frame_errors_a_to_b: tally.frame_errors_a_to_b,
        frame_errors_b_to_a: tally.frame_errors_b_to_a,
        censored: bit_errors < stopping.min_bit_errors,
    })
}

/// Which budget entry a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    GammaRu,
    GammaRd,
    GammaFu,
    GammaFd,
}

impl SweepAxis {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepAxis::GammaRu => "gamma_ru",
            SweepAxis::GammaRd => "gamma_rd",
            SweepAxis::GammaFu => "gamma_fu",
            SweepAxis::GammaFd => "gamma_fd",
        }
    }

    pub fn apply(&self, budget: &LinkBudget, value_db: f64) -> LinkBudget {
        let mut b = *budget;
        match self {
            SweepAxis::GammaRu => b.gamma_ru_db = value_db,
            SweepAxis::GammaRd => b.gamma_rd_db = value_db,
            SweepAxis::GammaFu => b.gamma_fu_db = value_db,
            SweepAxis::GammaFd => b.gamma_fd_db = value_db,
        }
        b
    }
}

/// dB grid over one budget axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub start_db: f64,
    pub stop_db: f64,
    pub step_db: f64,
}

impl SweepSpec {
    /// The reference sweep: forward downlink from 3 to 15 dB in 1 dB steps.
    pub fn reference() -> Self {
        SweepSpec {
            axis: SweepAxis::GammaFd,
            start_db: 3.0,
            stop_db: 15.0,
            step_db: 1.0,
        }
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        if !(self.step_db > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sweep step must be positive, got {}",
                self.step_db
            )));
        }
        let mut values = Vec::new();
        let mut k = 0u32;
        loop {
            let v = self.start_db + k as f64 * self.step_db;
            if v > self.stop_db + 1e-9 {
                break;
            }
            values.push(v);
            k += 1;
        }
        if values.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "empty sweep grid: start {} dB, stop {} dB",
                self.start_db, self.stop_db
            )));
        }
        Ok(values)
    }
}

/// One sweep grid point: the simulated result plus the matching bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    pub axis: SweepAxis,
    pub axis_db: f64,
    pub bound: f64,
    pub result: SimResult,
}

/// Bit-exact header of the sweep CSV.
pub const CSV_HEADER: &str =
    "scheme,strategy,map_policy,axis,axis_db,frames,bits,bit_errors,ber,fer,throughput,bound,censored";

impl SweepPoint {
    pub fn csv_row(&self) -> String {
        let r = &self.result;
        let s = &r.scenario;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            s.scheme_str(),
            s.strategy_str(),
            s.map_policy_str(),
            self.axis.as_str(),
            self.axis_db,
            r.frames,
            r.bits,
            r.bit_errors,
            r.ber(),
            r.fer(),
            r.throughput(),
            self.bound,
            r.censored
        )
    }
}

/// Runs one point per grid value. Each point gets its own derived seed so
/// its frame streams are independent of every other point's.
pub fn sweep(
    scenario: &Scenario,
    spec: &SweepSpec,
    stopping: &Stopping,
    seed: u64,
    workers: usize,
) -> Result<Vec<SweepPoint>> {
    let grid = spec.grid()?;
    let mut points = Vec::with_capacity(grid.len());
    for (i, &value_db) in grid.iter().enumerate() {
        let mut sc = *scenario;
        sc.budget = spec.axis.apply(&scenario.budget, value_db);
        let bound = sc.bound()?;
        let result = run_point(&sc, stopping, derive_seed(seed, i as u64), workers)?;
        points.push(SweepPoint {
            axis: spec.axis,
            axis_db: value_db,
            bound,
            result,
        });
    }
    Ok(points)
}

/// Plain QPSK over a single AWGN link: the sanity oracle for the Monte
/// Carlo machinery. Returns (bit errors, total bits).
pub fn qpsk_single_link(gamma_db: f64, frames: u32, frame_symbols: u32, seed: u64) -> (u64, u64) {
    let variance = 1.0 / crate::links::db_to_linear(gamma_db);
    let mapper = BitMapper::qpsk();
    let mut errors = 0u64;
    for frame in 0..frames {
        let mut rng = frame_rng(seed, 0, frame);
        for _ in 0..frame_symbols {
            let m = (rng.next_u32() & 3) as u8;
            let got = quadrant_label(mapper.point_of_label(m) + awgn(variance, &mut rng));
            errors += ((got ^ m) as u32).count_ones() as u64;
        }
    }
    (errors, frames as u64 * frame_symbols as u64 * 2)
}
