use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::evaluation::{FlipMode, Restoration};
use crate::search::SearchConfig;
use crate::sim::{JudgeKind, JudgeTiers};

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Planner {
    Greedy,
    BestFirst,
    Dfs,
    VanillaMcts,
    Tooltree,
}

impl Planner {
    pub const ALL: [Planner; 5] = [
        Self::Greedy,
        Self::BestFirst,
        Self::Dfs,
        Self::VanillaMcts,
        Self::Tooltree,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Greedy => "greedy",
            Self::BestFirst => "best_first",
            Self::Dfs => "dfs",
            Self::VanillaMcts => "vanilla_mcts",
            Self::Tooltree => "tooltree",
        }
    }
}

impl fmt::Display for Planner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Planner {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| HarnessError::InvalidSpec(format!("unknown planner `{s}`")))
    }
}

/// Switches that strip parts of the search.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ablation {
    pub disable_pre_eval: bool,
    pub disable_pre_prune: bool,
    pub disable_post_eval: bool,
    pub disable_post_prune: bool,
}

impl Ablation {
    pub fn apply(&self, config: &SearchConfig) -> SearchConfig {
        let mut c = config.clone();
        if self.disable_pre_eval {
            c.pre_eval = false;
        }
        if self.disable_pre_prune {
            c.tau_pre = 0.0;
            c.top_k = None;
        }
        if self.disable_post_eval {
            c.post_eval = false;
        }
        if self.disable_post_prune {
            c.tau_post = 0.0;
        }
        c
    }
}

/// A named ablation setting; rows carry the name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variant {
    pub name: String,
    #[serde(flatten)]
    pub ablation: Ablation,
}

impl Variant {
    pub fn full() -> Self {
        Self {
            name: "full".into(),
            ablation: Ablation::default(),
        }
    }
}

/// The seven settings of the ablation study, full search first.
pub fn ablation_variants() -> Vec<Variant> {
    let a = |pre_eval, pre_prune, post_eval, post_prune| Ablation {
        disable_pre_eval: pre_eval,
        disable_pre_prune: pre_prune,
        disable_post_eval: post_eval,
        disable_post_prune: post_prune,
    };
    [
        ("full", a(false, false, false, false)),
        ("no_pre_pruning", a(false, true, false, false)),
        ("no_pre_evaluation", a(true, true, false, false)),
        ("no_post_pruning", a(false, false, false, true)),
        ("no_post_evaluation", a(false, false, true, true)),
        ("no_both_pruning", a(false, true, false, true)),
        ("no_both_evaluation", a(true, true, true, true)),
    ]
    .into_iter()
    .map(|(name, ablation)| Variant {
        name: name.into(),
        ablation,
    })
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub error_rate: f64,
    #[serde(default)]
    pub flip_mode: FlipMode,
    #[serde(default)]
    pub restoration: Restoration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub suite: PathBuf,
    pub planners: Vec<Planner>,
    pub budgets: Vec<usize>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_variants")]
    pub variants: Vec<Variant>,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub judge: JudgeKind,
    #[serde(default = "JudgeTiers::graded")]
    pub tiers: JudgeTiers,
    #[serde(default)]
    pub noise: Option<NoiseSpec>,
    /// Tools kept by lexical retrieval before planning.
    #[serde(default = "default_shortlist")]
    pub shortlist: usize,
    /// Keep engine event logs in JSON rows.
    #[serde(default = "default_true")]
    pub keep_events: bool,
    /// Rows are appended here as cells finish.
    #[serde(default)]
    pub rows_out: Option<PathBuf>,
}

fn default_variants() -> Vec<Variant> {
    vec![Variant::full()]
}

fn default_shortlist() -> usize {
    20
}

fn default_true() -> bool {
    true
}

impl ExperimentSpec {
    pub fn new(
        suite: impl Into<PathBuf>,
        planners: Vec<Planner>,
        budgets: Vec<usize>,
        seeds: Vec<u64>,
    ) -> Self {
        Self {
            suite: suite.into(),
            planners,
            budgets,
            seeds,
            variants: default_variants(),
            search: SearchConfig::default(),
            judge: JudgeKind::default(),
            tiers: JudgeTiers::graded(),
            noise: None,
            shortlist: default_shortlist(),
            keep_events: true,
            rows_out: None,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let mut bad = Vec::new();
        if self.planners.is_empty() {
            bad.push("no planners".to_string());
        }
        if self.budgets.is_empty() || self.budgets.contains(&0) {
            bad.push("budgets must be non-empty and positive".into());
        }
        if self.budgets.windows(2).any(|w| w[0] >= w[1]) {
            bad.push("budgets must be strictly increasing".into());
        }
        if self.seeds.is_empty() {
            bad.push("no seeds".into());
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != self.seeds.len() {
            bad.push("seeds must be distinct".into());
        }
        let mut names: Vec<&str> = self.variants.iter().map(|v| v.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        if self.variants.is_empty() || names.len() != self.variants.len() {
            bad.push("variant names must be present and distinct".into());
        }
        if let Some(n) = &self.noise {
            if !(0.0..=1.0).contains(&n.error_rate) {
                bad.push("noise error_rate outside [0, 1]".into());
            }
        }
        if self.shortlist == 0 {
            bad.push("shortlist must be positive".into());
        }
        if let Err(e) = self.search.validate() {
            bad.push(e.to_string());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(HarnessError::InvalidSpec(bad.join("; ")))
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let spec: Self =
            toml::from_str(text).map_err(|e| HarnessError::InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        let mut spec = Self::from_toml_str(&text)?;
        if spec.suite.is_relative() {
            if let Some(dir) = path.parent() {
                spec.suite = dir.join(&spec.suite);
            }
        }
        Ok(spec)
    }

    /// Number of cells for a suite of `tasks` tasks.
    pub fn cell_count(&self, tasks: usize) -> usize {
        self.variants.len() * self.planners.len() * self.budgets.len() * self.seeds.len() * tasks
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_toml() {
        let spec = ExperimentSpec::from_toml_str(
            r#"
            suite = "suite.jsonl"
            planners = ["greedy", "tooltree"]
            budgets = [16, 32]
            seeds = [1, 2, 3]
            judge = "oracle"

            [search]
            lambda = 1.0
            top_k = "inf"

            [noise]
            error_rate = 0.25
            restoration = "fix_false_negatives"
            "#,
        )
        .unwrap();
        assert_eq!(spec.planners, [Planner::Greedy, Planner::Tooltree]);
        assert_eq!(spec.search.top_k, None);
        assert_eq!(spec.search.r_max, 60);
        assert_eq!(
            spec.noise.unwrap().restoration,
            Restoration::FixFalseNegatives
        );
        assert_eq!(spec.cell_count(50), 600);
    }

    #[test]
    fn rejects_bad_sweeps() {
        let mut s = ExperimentSpec::new("x", vec![Planner::Greedy], vec![16, 8], vec![1]);
        assert!(s.validate().is_err());
        s.budgets = vec![8, 16];
        s.seeds = vec![1, 1];
        assert!(s.validate().is_err());
        s.seeds = vec![1, 2];
        assert!(s.validate().is_ok());
        assert!(ExperimentSpec::from_toml_str(
            "suite = 'x'\nplanners = ['astar']\nbudgets = [1]\nseeds = [1]"
        )
        .is_err());
    }

    #[test]
    fn seven_variants_compose() {
        let v = ablation_variants();
        assert_eq!(v.len(), 7);
        let both = v.last().unwrap().ablation.apply(&SearchConfig::default());
        assert!(!both.pre_eval && !both.post_eval);
        assert_eq!(both.tau_post, 0.0);
        assert_eq!(both.top_k, None);
    }
}
