//! JSON scenario files.
//!
//! A file has the sections `topology`, `flows`, `learning`, `engine` and
//! `output`; only the first two are required. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::automaton::LearningParams;
use crate::engine::{FeedbackMode, RunSettings, Scenario};
use crate::error::{Error, Result};
use crate::topology::{Flow, Node, Position, Topology};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub topology: TopologyConfig,
    pub flows: FlowsConfig,
    #[serde(default)]
    pub learning: LearningConfig,
    #[serde(default)]
    pub engine: EngineConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Layout {
    Grid { side_count: usize, region_size: f64 },
    Line { count: usize, spacing: f64 },
    Explicit { positions: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    pub layout: Layout,
    pub tx_range: f64,
    pub interference_range: f64,
    pub num_channels: usize,
    /// Radios per node unless `radios` lists them individually.
    pub num_radios: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radios: Option<Vec<usize>>,
    /// Packets per slot.
    pub capacity: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    pub src: usize,
    pub dst: usize,
    pub load: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "pattern", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FlowsConfig {
    /// On a grid: one flow along every row (west to east) and one down every
    /// column (north to south).
    Cross {
        load: f64,
    },
    /// A single flow from the first node to the last.
    EndToEnd {
        load: f64,
    },
    Explicit {
        list: Vec<FlowSpec>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeName {
    RewardInaction,
    RewardPenalty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearningConfig {
    pub scheme: SchemeName,
    /// Reward step size.
    pub lambda: f64,
    /// Penalty step size, used by the reward-penalty scheme.
    pub lambda_penalty: f64,
    pub feedback: FeedbackMode,
    pub theta: f64,
}

impl Default for LearningConfig {
    fn default() -> Self {
        Self {
            scheme: SchemeName::RewardInaction,
            lambda: 0.1,
            lambda_penalty: 0.01,
            feedback: FeedbackMode::default(),
            theta: 1.0,
        }
    }
}

impl LearningConfig {
    pub fn params(&self) -> LearningParams {
        match self.scheme {
            SchemeName::RewardInaction => LearningParams::RewardInaction { lambda: self.lambda },
            SchemeName::RewardPenalty => {
                LearningParams::RewardPenalty { reward: self.lambda, penalty: self.lambda_penalty }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub horizon: usize,
    pub warmup: usize,
    pub seed: u64,
    pub convergence_threshold: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self { horizon: 200, warmup: 50, seed: 1, convergence_threshold: 0.99 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

impl Default for ScenarioConfig {
    /// 5×5 grid over 1500 m × 1500 m, ten channels, two radios per node and
    /// saturating cross traffic.
    fn default() -> Self {
        Self {
            topology: TopologyConfig {
                layout: Layout::Grid { side_count: 5, region_size: 1500.0 },
                tx_range: 300.0,
                interference_range: 600.0,
                num_channels: 10,
                num_radios: 2,
                radios: None,
                capacity: 10,
            },
            flows: FlowsConfig::Cross { load: 10.0 },
            learning: LearningConfig::default(),
            engine: EngineConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

/// Parameters a sweep may vary.
pub const SWEEP_PARAMETERS: [&str; 4] = ["num_radios", "K", "lambda", "feedback"];

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Sets one sweepable parameter from its textual value.
    pub fn apply_override(&mut self, parameter: &str, value: &str) -> Result<()> {
        let bad = |e: &dyn std::fmt::Display| Error::config(parameter, format!("`{value}`: {e}"));
        match parameter {
            "num_radios" => {
                self.topology.num_radios = value.parse().map_err(|e| bad(&e))?;
                self.topology.radios = None;
            }
            "K" | "num_channels" => self.topology.num_channels = value.parse().map_err(|e| bad(&e))?,
            "lambda" => self.learning.lambda = value.parse().map_err(|e| bad(&e))?,
            "feedback" => self.learning.feedback = value.parse().map_err(|e| bad(&e))?,
            other => {
                return Err(Error::config(
                    "parameter",
                    format!("unknown sweep parameter `{other}`, expected one of {SWEEP_PARAMETERS:?}"),
                ))
            }
        }
        Ok(())
    }

    pub fn build_topology(&self) -> Result<Topology> {
        let t = &self.topology;
        let field = |name: &str| format!("topology.{name}");
        fn wrap(name: &'static str) -> impl Fn(Error) -> Error {
            move |e| Error::config(format!("topology.{name}"), e.to_string())
        }
        if t.num_radios == 0 {
            return Err(Error::config(field("num_radios"), "must be at least 1"));
        }
        let base = match &t.layout {
            Layout::Grid { side_count, region_size } => Topology::grid(
                *side_count,
                *region_size,
                t.tx_range,
                t.interference_range,
                t.num_radios,
                t.capacity,
            )
            .map_err(wrap("layout"))?,
            Layout::Line { count, spacing } => {
                Topology::line(*count, *spacing, t.tx_range, t.interference_range, t.num_radios, t.capacity)
                    .map_err(wrap("layout"))?
            }
            Layout::Explicit { positions } => {
                let nodes = positions
                    .iter()
                    .enumerate()
                    .map(|(id, p)| Node { id, position: Position::new(p[0], p[1]), num_radios: t.num_radios })
                    .collect();
                Topology::new(nodes, t.tx_range, t.interference_range, t.capacity).map_err(wrap("layout"))?
            }
        };
        let Some(radios) = &t.radios else {
            return Ok(base);
        };
        if radios.len() != base.node_count() {
            return Err(Error::config(
                field("radios"),
                format!("{} entries for {} nodes", radios.len(), base.node_count()),
            ));
        }
        let nodes =
            base.nodes().iter().zip(radios).map(|(n, &m)| Node { num_radios: m, ..n.clone() }).collect();
        Topology::new(nodes, t.tx_range, t.interference_range, t.capacity).map_err(wrap("radios"))
    }

    pub fn build_flows(&self, topology: &Topology) -> Result<Vec<Flow>> {
        let flows = match &self.flows {
            FlowsConfig::Cross { load } => {
                let Layout::Grid { side_count: side, .. } = self.topology.layout else {
                    return Err(Error::config("flows.pattern", "cross flows need a grid layout"));
                };
                let rows = (0..side).map(|r| (r * side, r * side + side - 1));
                let cols = (0..side).map(|c| (c, (side - 1) * side + c));
                rows.chain(cols)
                    .enumerate()
                    .map(|(id, (src, dst))| Flow { id, src, dst, load: *load })
                    .collect()
            }
            FlowsConfig::EndToEnd { load } => {
                let n = topology.node_count();
                if n < 2 {
                    return Err(Error::config("flows.pattern", "end-to-end flow needs two nodes"));
                }
                vec![Flow { id: 0, src: 0, dst: n - 1, load: *load }]
            }
            FlowsConfig::Explicit { list } => list
                .iter()
                .enumerate()
                .map(|(id, f)| Flow { id, src: f.src, dst: f.dst, load: f.load })
                .collect(),
        };
        for f in &flows {
            if !(f.load >= 0.0 && f.load.is_finite()) {
                return Err(Error::config(format!("flows[{}].load", f.id), format!("{} is invalid", f.load)));
            }
        }
        Ok(flows)
    }

    pub fn settings(&self) -> RunSettings {
        RunSettings {
            learning: self.learning.params(),
            theta: self.learning.theta,
            feedback: self.learning.feedback,
            horizon: self.engine.horizon,
            warm_up: self.engine.warmup,
            seed: self.engine.seed,
        }
    }

    /// Validates the whole file and produces a runnable scenario.
    pub fn build(&self) -> Result<Scenario> {
        if !(self.engine.convergence_threshold > 0.0 && self.engine.convergence_threshold < 1.0) {
            return Err(Error::config("engine.convergence_threshold", "must lie in (0, 1)"));
        }
        let topology = self.build_topology()?;
        let flows = self.build_flows(&topology)?;
        Scenario::new(topology, flows, self.topology.num_channels, self.settings())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_builds() {
        let s = ScenarioConfig::default().build().unwrap();
        assert_eq!(s.topology.node_count(), 25);
        assert_eq!(s.flows.len(), 10);
        assert_eq!(s.num_channels, 10);
        assert_eq!((s.horizon, s.warm_up), (200, 50));
        // Row flows run west to east in four hops.
        assert_eq!(s.routing.path(0).nodes, vec![0, 1, 2, 3, 4]);
        assert_eq!(s.routing.path(5).nodes, vec![0, 5, 10, 15, 20]);
    }

    #[test]
    fn minimal_file_uses_defaults() {
        let text = r#"{
            "topology": {
                "layout": {"kind": "line", "count": 4, "spacing": 100},
                "tx_range": 100, "interference_range": 150,
                "num_channels": 2, "num_radios": 1, "capacity": 10
            },
            "flows": {"pattern": "end-to-end", "load": 5}
        }"#;
        let c = ScenarioConfig::from_json(text).unwrap();
        assert_eq!(c.learning, LearningConfig::default());
        let s = c.build().unwrap();
        assert_eq!(s.routing.path(0).nodes, vec![0, 1, 2, 3]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(&ScenarioConfig::default().to_json()).unwrap();
        v["engine"]["bogus"] = 1.into();
        assert!(ScenarioConfig::from_json(&v.to_string()).is_err());

        let mut v: serde_json::Value = serde_json::from_str(&ScenarioConfig::default().to_json()).unwrap();
        v["topology"]["layout"]["extra"] = 1.into();
        assert!(ScenarioConfig::from_json(&v.to_string()).is_err());

        let mut v: serde_json::Value = serde_json::from_str(&ScenarioConfig::default().to_json()).unwrap();
        v["surprise"] = 1.into();
        assert!(ScenarioConfig::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn parse_errors_carry_position() {
        match ScenarioConfig::from_json("{\n  \"topology\": [\n") {
            Err(Error::Parse { line, .. }) => assert!(line >= 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn field_level_errors() {
        let mut c = ScenarioConfig::default();
        c.topology.num_radios = 11;
        assert!(matches!(c.build(), Err(Error::Config { field, .. }) if field == "topology.num_radios"));

        let mut c = ScenarioConfig::default();
        c.engine.warmup = 200;
        assert!(matches!(c.build(), Err(Error::Config { field, .. }) if field == "engine.warmup"));

        let mut c = ScenarioConfig::default();
        c.topology.tx_range = 100.0;
        assert!(matches!(c.build(), Err(Error::Config { field, .. }) if field == "topology.layout"));

        let mut c = ScenarioConfig::default();
        c.topology.radios = Some(vec![1; 3]);
        assert!(matches!(c.build(), Err(Error::Config { field, .. }) if field == "topology.radios"));

        let mut c = ScenarioConfig::default();
        c.learning.lambda = 1.5;
        assert!(matches!(c.build(), Err(Error::Config { field, .. }) if field == "learning"));
    }

    #[test]
    fn per_node_radios() {
        let mut c = ScenarioConfig::default();
        let mut radios = vec![2; 25];
        radios[12] = 3;
        c.topology.radios = Some(radios);
        let s = c.build().unwrap();
        assert_eq!(s.catalog(12).len(), 120);
        assert_eq!(s.catalog(0).len(), 45);
    }

    #[test]
    fn overrides() {
        let mut c = ScenarioConfig::default();
        c.apply_override("num_radios", "3").unwrap();
        c.apply_override("K", "12").unwrap();
        c.apply_override("lambda", "0.2").unwrap();
        c.apply_override("feedback", "continuous").unwrap();
        assert_eq!(c.topology.num_radios, 3);
        assert_eq!(c.topology.num_channels, 12);
        assert_eq!(c.learning.lambda, 0.2);
        assert_eq!(c.learning.feedback, FeedbackMode::Continuous);
        assert!(c.apply_override("speed", "1").is_err());
        assert!(c.apply_override("lambda", "fast").is_err());
    }

    #[test]
    fn cross_needs_grid() {
        let mut c = ScenarioConfig::default();
        c.topology.layout = Layout::Line { count: 5, spacing: 300.0 };
        assert!(c.build().is_err());
    }

    proptest! {
        #[test]
        fn json_round_trip(
            side in 2usize..8,
            radios in 1usize..4,
            lambda in 0.001f64..0.999,
            seed in any::<u64>(),
            continuous in any::<bool>(),
            explicit in any::<bool>(),
            load in 0.0f64..20.0,
        ) {
            let mut c = ScenarioConfig::default();
            c.topology.layout = Layout::Grid { side_count: side, region_size: 300.0 * side as f64 };
            c.topology.num_radios = radios;
            c.learning.lambda = lambda;
            c.engine.seed = seed;
            if continuous {
                c.learning.feedback = FeedbackMode::Continuous;
            }
            if explicit {
                c.flows = FlowsConfig::Explicit { list: vec![FlowSpec { src: 0, dst: 1, load }] };
            }
            let back = ScenarioConfig::from_json(&c.to_json()).unwrap();
            prop_assert_eq!(back, c);
        }
    }
}
