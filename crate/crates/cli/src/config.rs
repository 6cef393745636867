//! TOML run configuration: optional keys over fixed defaults, resolved into
//! the core types before anything runs.
//!
//! Every output file embeds the fully-resolved configuration as a `# `
//! commented TOML block, and that block parses back into the same resolved
//! state, so a run can be reproduced from its own output. Unknown keys are
//! hard errors. The worker count is accepted as input but never echoed:
//! results are worker-count independent by construction and the echo must
//! be too.

use serde::{Deserialize, Serialize};

use plnc_core::links::LinkBudget;
use plnc_core::packing::{PackingProblem, PowerConstraint};
use plnc_core::simulator::{MapPolicy, Scenario, Scheme, Stopping, Strategy, SweepAxis, SweepSpec};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<BudgetSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stopping: Option<StoppingSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run: Option<RunSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pack: Option<PackSection>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Scheme>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strategy: Option<Strategy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map_policy: Option<MapPolicy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frame_symbols: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ma_scale_gain: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ma_adaptive_gain: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clip_noise: Option<bool>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_ru_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_rd_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_fu_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_fd_db: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis: Option<SweepAxis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step_db: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoppingSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_bit_errors: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_frames: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_frames: Option<u64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Accepted but never echoed; results do not depend on it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintKind {
    AveragePower,
    PeakPower,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PackSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cardinality: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constraint: Option<ConstraintKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit: Option<f64>,
    /// Per-symbol probabilities; uniform when omitted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probabilities: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restarts: Option<u32>,
}

/// Fully-resolved run state: every default applied, every value validated
/// by the core before use.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub scenario: Scenario,
    pub sweep: SweepSpec,
    pub stopping: Stopping,
    pub seed: u64,
    pub workers: usize,
    pub pack: PackingProblem,
    pub pack_restarts: u32,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<FileConfig, String> {
        toml::from_str(text).map_err(|e| format!("config: {e}"))
    }

    pub fn resolve(&self) -> Result<Resolved, String> {
        let sc = self.scenario.clone().unwrap_or_default();
        let bu = self.budget.clone().unwrap_or_default();
        let sw = self.sweep.clone().unwrap_or_default();
        let st = self.stopping.clone().unwrap_or_default();
        let run = self.run.clone().unwrap_or_default();
        let pk = self.pack.clone().unwrap_or_default();

        let scheme = sc.scheme.unwrap_or(Scheme::PlncSync);
        let budget = LinkBudget {
            gamma_ru_db: bu.gamma_ru_db.unwrap_or(15.0),
            gamma_rd_db: bu.gamma_rd_db.unwrap_or(23.0),
            gamma_fu_db: bu.gamma_fu_db.unwrap_or(23.0),
            gamma_fd_db: bu.gamma_fd_db.unwrap_or(9.0),
        };
        let mut scenario = Scenario::new(scheme, budget);
        if let Some(v) = sc.strategy {
            scenario.strategy = v;
        }
        if let Some(v) = sc.map_policy {
            scenario.map_policy = v;
        }
        if let Some(v) = sc.frame_symbols {
            scenario.frame_symbols = v;
        }
        if let Some(v) = sc.eta {
            scenario.eta = v;
        }
        if let Some(v) = sc.ma_scale_gain {
            scenario.ma_scale_gain = v;
        }
        if let Some(v) = sc.ma_adaptive_gain {
            scenario.ma_adaptive_gain = v;
        }
        if let Some(v) = sc.clip_noise {
            scenario.clip_noise = v;
        }
        scenario.validate().map_err(|e| format!("config: {e}"))?;

        let reference = SweepSpec::reference();
        let sweep = SweepSpec {
            axis: sw.axis.unwrap_or(reference.axis),
            start_db: sw.start_db.unwrap_or(reference.start_db),
            stop_db: sw.stop_db.unwrap_or(reference.stop_db),
            step_db: sw.step_db.unwrap_or(reference.step_db),
        };
        sweep.grid().map_err(|e| format!("config: {e}"))?;

        let defaults = Stopping::default();
        let stopping = Stopping {
            min_bit_errors: st.min_bit_errors.unwrap_or(defaults.min_bit_errors),
            min_frames: st.min_frames.unwrap_or(defaults.min_frames),
            max_frames: st.max_frames.unwrap_or(defaults.max_frames),
        };
        stopping.validate().map_err(|e| format!("config: {e}"))?;

        let cardinality = pk.cardinality.unwrap_or(5);
        let limit = pk.limit.unwrap_or(1.0);
        let constraint = match pk.constraint.unwrap_or(ConstraintKind::AveragePower) {
            ConstraintKind::AveragePower => PowerConstraint::AveragePower(limit),
            ConstraintKind::PeakPower => PowerConstraint::PeakPower(limit),
        };
        let pack = match pk.probabilities {
            Some(p) => PackingProblem {
                cardinality,
                symbol_probabilities: p,
                constraint,
            },
            None => PackingProblem::uniform(cardinality, constraint),
        };

        Ok(Resolved {
            scenario,
            sweep,
            stopping,
            seed: run.seed.unwrap_or(1),
            workers: run.workers.unwrap_or(0),
            pack,
            pack_restarts: pk.restarts.unwrap_or(32),
        })
    }
}

impl Resolved {
    /// The fully-resolved state as a config that resolves back to itself.
    pub fn echo(&self) -> FileConfig {
        let s = &self.scenario;
        let (constraint, limit) = match self.pack.constraint {
            PowerConstraint::AveragePower(l) => (ConstraintKind::AveragePower, l),
            PowerConstraint::PeakPower(l) => (ConstraintKind::PeakPower, l),
        };
        FileConfig {
            scenario: Some(ScenarioSection {
                scheme: Some(s.scheme),
                strategy: Some(s.strategy),
                map_policy: Some(s.map_policy),
                frame_symbols: Some(s.frame_symbols),
                eta: Some(s.eta),
                ma_scale_gain: Some(s.ma_scale_gain),
                ma_adaptive_gain: Some(s.ma_adaptive_gain),
                clip_noise: Some(s.clip_noise),
            }),
            budget: Some(BudgetSection {
                gamma_ru_db: Some(s.budget.gamma_ru_db),
                gamma_rd_db: Some(s.budget.gamma_rd_db),
                gamma_fu_db: Some(s.budget.gamma_fu_db),
                gamma_fd_db: Some(s.budget.gamma_fd_db),
            }),
            sweep: Some(SweepSection {
                axis: Some(self.sweep.axis),
                start_db: Some(self.sweep.start_db),
                stop_db: Some(self.sweep.stop_db),
                step_db: Some(self.sweep.step_db),
            }),
            stopping: Some(StoppingSection {
                min_bit_errors: Some(self.stopping.min_bit_errors),
                min_frames: Some(self.stopping.min_frames),
                max_frames: Some(self.stopping.max_frames),
            }),
            run: Some(RunSection {
                seed: Some(self.seed),
                workers: None,
            }),
            pack: Some(PackSection {
                cardinality: Some(self.pack.cardinality),
                constraint: Some(constraint),
                limit: Some(limit),
                probabilities: Some(self.pack.symbol_probabilities.clone()),
                restarts: Some(self.pack_restarts),
            }),
        }
    }

    /// Commented TOML block for file headers.
    pub fn echo_block(&self) -> String {
        let toml = toml::to_string(&self.echo()).expect("echo serializes");
        let mut out = String::new();
        for line in toml.lines() {
            if line.is_empty() {
                out.push_str("#\n");
            } else {
                out.push_str("# ");
                out.push_str(line);
                out.push('\n');
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Recovers the embedded config from an output file's comment header.
    fn extract_echo(file_text: &str) -> Result<FileConfig, String> {
        let mut toml_text = String::new();
        for line in file_text.lines() {
            if let Some(rest) = line.strip_prefix("# ") {
                toml_text.push_str(rest);
                toml_text.push('\n');
            } else if line == "#" {
                toml_text.push('\n');
            } else {
                break;
            }
        }
        if toml_text.is_empty() {
            return Err("no embedded config block found".into());
        }
        FileConfig::parse(&toml_text)
    }

    #[test]
    fn defaults_resolve() {
        let r = FileConfig::default().resolve().unwrap();
        assert_eq!(r.scenario.scheme, Scheme::PlncSync);
        assert_eq!(r.scenario.budget.gamma_ru_db, 15.0);
        assert_eq!(r.sweep.grid().unwrap().len(), 13);
        assert_eq!(r.stopping.min_bit_errors, 100);
        assert_eq!(r.pack.cardinality, 5);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(FileConfig::parse("[scenario]\nscheem = \"plnc-sync\"\n").is_err());
        assert!(FileConfig::parse("[unknown]\nx = 1\n").is_err());
        let err = FileConfig::parse("[stopping]\nmin_bits = 3\n").unwrap_err();
        assert!(err.contains("min_bits"), "{err}");
    }

    #[test]
    fn echo_round_trips() {
        let cfg = FileConfig::parse(
            "[scenario]\nscheme = \"plnc-random-phase\"\nmap_policy = \"fixed-c0\"\n\
             [budget]\ngamma_fd_db = 12.5\n[run]\nseed = 77\nworkers = 3\n",
        )
        .unwrap();
        let r = cfg.resolve().unwrap();
        let block = r.echo_block();
        let back = extract_echo(&block).unwrap().resolve().unwrap();
        assert_eq!(back.scenario, r.scenario);
        assert_eq!(back.sweep, r.sweep);
        assert_eq!(back.stopping, r.stopping);
        assert_eq!(back.seed, r.seed);
        // workers never echoed
        assert!(!block.contains("workers"));
    }
}
