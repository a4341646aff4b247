use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::tool_model::{draft_arguments, Context, Query, SchemaType, ToolCard};

use super::task::{
    execute_sim_tool, Difficulty, FailureTrigger, GoldStep, SimTool, SyntheticTask, ToolRole,
};
use super::SimError;

const VERBS: &[&str] = &[
    "detect",
    "count",
    "measure",
    "extract",
    "classify",
    "segment",
    "locate",
    "parse",
    "convert",
    "estimate",
    "translate",
    "summarize",
    "rank",
    "filter",
    "match",
    "caption",
    "transcribe",
    "compute",
    "retrieve",
    "verify",
    "label",
    "inspect",
    "index",
    "resolve",
];

const NOUNS: &[&str] = &[
    "wheel", "text", "price", "distance", "face", "label", "region", "color", "date", "sign",
    "plate", "chart", "table", "speed", "weight", "volume", "route", "score", "menu", "receipt",
    "bottle", "tree", "window", "ticket",
];

const KINDS: &[&str] = &["boxes", "list", "record", "summary", "map", "notes"];

const GOLD_STYLE: &[&str] = &[
    "Structured extractor over typed inputs",
    "Deterministic transform of upstream records",
    "Specialised model endpoint",
    "Batch operator with fixed schema",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub seed: u64,
    pub chain_depth: (usize, usize),
    pub branching: (usize, usize),
    pub distractors: (usize, usize),
    /// Fraction of distractors built as traps.
    pub inflation: f64,
    /// Share of plain distractors that always fail.
    #[serde(default = "default_failing_share")]
    pub failing_share: f64,
}

fn default_failing_share() -> f64 {
    0.3
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            seed: 0,
            chain_depth: (3, 5),
            branching: (2, 3),
            distractors: (6, 10),
            inflation: 0.5,
            failing_share: default_failing_share(),
        }
    }
}

impl GeneratorParams {
    pub fn validate(&self) -> Result<(), SimError> {
        let mut bad = Vec::new();
        for (name, (lo, hi)) in [
            ("chain_depth", self.chain_depth),
            ("branching", self.branching),
            ("distractors", self.distractors),
        ] {
            if lo > hi {
                bad.push(format!("{name} range empty"));
            }
        }
        if self.chain_depth.0 < 2 {
            bad.push("chain_depth must be at least 2".into());
        }
        if self.chain_depth.1 > NOUNS.len() / 2 {
            bad.push("chain_depth too large".into());
        }
        if self.branching.0 < 1 {
            bad.push("branching must be at least 1".into());
        }
        if self.distractors.1 > 16 {
            bad.push("at most 16 distractors".into());
        }
        if !(0.0..=1.0).contains(&self.inflation) {
            bad.push("inflation outside [0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.failing_share) {
            bad.push("failing_share outside [0, 1]".into());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(SimError::InvalidParams(bad.join("; ")))
        }
    }
}

struct Names {
    used: BTreeSet<String>,
}

impl Names {
    fn fresh(&mut self, rng: &mut ChaCha8Rng, noun: Option<&str>) -> String {
        loop {
            let verb = VERBS.choose(rng).unwrap();
            let noun = noun.unwrap_or_else(|| NOUNS.choose(rng).unwrap());
            let agent = if verb.ends_with('e') { "r" } else { "er" };
            let name = if rng.gen_bool(0.5) {
                format!("{verb}_{noun}")
            } else {
                format!("{noun}_{verb}{agent}")
            };
            if self.used.insert(name.clone()) {
                return name;
            }
        }
    }
}

/// Builds task `index` of the suite described by `params`.
pub fn generate_task(params: &GeneratorParams, index: u64) -> Result<SyntheticTask, SimError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(index);
    let depth = rng.gen_range(params.chain_depth.0..=params.chain_depth.1);
    let branching = rng.gen_range(params.branching.0..=params.branching.1);
    let n_distract = rng.gen_range(params.distractors.0..=params.distractors.1);
    let sources = branching.min(depth - 1);
    let salt: u64 = rng.gen();

    let nouns: Vec<&str> = NOUNS.choose_multiple(&mut rng, depth).copied().collect();
    let mut names = Names {
        used: BTreeSet::new(),
    };
    let image = format!("img://task-{}-{index}.png", params.seed);

    // gold steps: sources read the image or the query text, one step merges
    // them, the rest form a chain ending in a number
    let mut gold_tools = Vec::new();
    let mut deps_of = Vec::new();
    let mut out_fields: Vec<(String, SchemaType)> = Vec::new();
    for (i, noun) in nouns.iter().enumerate() {
        let name = names.fresh(&mut rng, Some(noun));
        let last = i == depth - 1;
        let field = if last {
            format!("{noun}_total")
        } else {
            format!("{noun}_{}", KINDS.choose(&mut rng).unwrap())
        };
        let ty = if last {
            SchemaType::Number
        } else {
            SchemaType::structured([(format!("{field}_value"), SchemaType::Text)])
        };
        let deps: Vec<usize> = if i < sources {
            Vec::new()
        } else if i == sources {
            (0..sources).collect()
        } else {
            vec![i - 1]
        };
        let mut card = ToolCard::new(
            name.clone(),
            format!(
                "{} producing {}.",
                GOLD_STYLE.choose(&mut rng).unwrap(),
                field.replace('_', " ")
            ),
        );
        if deps.is_empty() {
            card = if i % 2 == 0 {
                card.input("image", SchemaType::ImageRef)
            } else {
                card.input("text", SchemaType::Text)
            };
        } else {
            for &d in &deps {
                card = card.input(out_fields[d].0.clone(), out_fields[d].1.clone());
            }
        }
        card = card.output(field.clone(), ty.clone()).tag("gold-domain");
        gold_tools.push(card);
        deps_of.push(deps);
        out_fields.push((field, ty));
    }

    let query_text = {
        let steps: Vec<String> = nouns[..depth - 1]
            .iter()
            .map(|n| format!("work out the {n} details"))
            .collect();
        format!(
            "Using the attached photo and this note, {} and report the {} total as a number.",
            steps.join(", then "),
            nouns[depth - 1]
        )
    };
    let query = Query::text(query_text.clone()).with_attachment(SchemaType::ImageRef, image);
    let keywords: Vec<&str> = ["photo", "note", "report", "total", "details"]
        .into_iter()
        .chain(nouns.iter().copied())
        .collect();

    let mut tools: Vec<SimTool> = gold_tools
        .iter()
        .enumerate()
        .map(|(i, card)| {
            let failure = if deps_of[i].is_empty() {
                None
            } else {
                Some(FailureTrigger::MissingDependency {
                    requires: deps_of[i]
                        .iter()
                        .map(|&d| (out_fields[d].0.clone(), gold_tools[d].name.clone()))
                        .collect(),
                })
            };
            SimTool {
                card: card.clone(),
                role: ToolRole::Gold { step: i },
                failure,
                constant: None,
            }
        })
        .collect();

    let n_traps = (params.inflation * n_distract as f64).round() as usize;
    for k in 0..n_distract {
        if k < n_traps {
            let target = rng.gen_range(0..depth);
            let gold = &gold_tools[target];
            let name = names.fresh(&mut rng, Some(nouns[target]));
            let picked: Vec<&str> = keywords.choose_multiple(&mut rng, 3).copied().collect();
            let mut card = ToolCard::new(
                name,
                format!(
                    "Answers questions about the {} in a photo or note: {} {} report.",
                    nouns[target],
                    picked.join(" "),
                    nouns[target]
                ),
            );
            for f in &gold.inputs {
                card = card.input(f.name.clone(), f.ty.clone());
            }
            for f in &gold.outputs {
                card = card.output(f.name.clone(), f.ty.clone());
            }
            tools.push(SimTool {
                card: card.tag("general"),
                role: ToolRole::Trap { target },
                failure: None,
                constant: None,
            });
        } else {
            let name = names.fresh(&mut rng, None);
            let slot = rng.gen_range(0..depth + 1);
            let (field, ty) = match slot {
                0 => ("image".to_string(), SchemaType::ImageRef),
                1 => ("text".to_string(), SchemaType::Text),
                s => out_fields[s - 2].clone(),
            };
            let junk = format!("{name}_notes");
            let mut description =
                format!("Utility {} for auxiliary records.", name.replace('_', " "));
            if params.inflation >= 1.0 {
                description.push_str(&format!(
                    " Mentions {}.",
                    keywords.choose(&mut rng).unwrap()
                ));
            }
            let card = ToolCard::new(name, description)
                .input(field, ty)
                .output(
                    junk.clone(),
                    SchemaType::structured([(format!("{junk}_value"), SchemaType::Text)]),
                )
                .tag("misc");
            let failure = rng
                .gen_bool(params.failing_share)
                .then(|| FailureTrigger::Always {
                    token: "tool_unavailable".into(),
                });
            tools.push(SimTool {
                card,
                role: ToolRole::Plain,
                failure,
                constant: None,
            });
        }
    }
    tools.sort_by(|a, b| a.card.name.cmp(&b.card.name));

    // execute the gold plan to fix the expected arguments and outputs
    let mut ctx = Context::new(query.clone());
    let mut gold_plan = Vec::with_capacity(depth);
    for (i, card) in gold_tools.iter().enumerate() {
        let tool = tools.iter().find(|t| t.card.name == card.name).unwrap();
        let draft = draft_arguments(&ctx, card).map_err(|e| SimError::Unsolvable(e.to_string()))?;
        let out = execute_sim_tool(tool, salt, &draft, &ctx);
        if out.is_error() {
            return Err(SimError::Unsolvable(format!("gold step {i} failed")));
        }
        gold_plan.push(GoldStep {
            tool: card.name.clone(),
            deps: deps_of[i].clone(),
            args: draft.resolve(&ctx),
            output: out.payload.clone(),
        });
        ctx.push(card, draft, out);
    }
    let answer = gold_plan
        .last()
        .unwrap()
        .output
        .values()
        .next()
        .unwrap()
        .clone();

    Ok(SyntheticTask {
        task_id: format!("s{}-t{index:04}", params.seed),
        query,
        salt,
        tools,
        gold_plan,
        answer,
        difficulty: Difficulty {
            chain_depth: depth,
            branching: sources,
            distractors: n_distract,
        },
    })
}

/// Tasks `0..count` of a suite.
pub fn generate_suite(
    params: &GeneratorParams,
    count: usize,
) -> Result<Vec<SyntheticTask>, SimError> {
    (0..count as u64)
        .map(|i| generate_task(params, i))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::PlanningTask;

    #[test]
    fn same_seed_same_task() {
        let p = GeneratorParams {
            seed: 7,
            ..Default::default()
        };
        assert_eq!(generate_task(&p, 3).unwrap(), generate_task(&p, 3).unwrap());
        assert_ne!(generate_task(&p, 3).unwrap(), generate_task(&p, 4).unwrap());
    }

    #[test]
    fn registry_holds_gold_plus_distractors() {
        let p = GeneratorParams {
            seed: 1,
            chain_depth: (3, 3),
            branching: (2, 2),
            distractors: (4, 4),
            ..Default::default()
        };
        let t = generate_task(&p, 0).unwrap();
        assert_eq!(t.registry().len(), 7);
        assert_eq!(t.gold_plan.len(), 3);
        let traps = t
            .tools
            .iter()
            .filter(|s| matches!(s.role, ToolRole::Trap { .. }))
            .count();
        assert_eq!(traps, 2);
    }

    #[test]
    fn full_inflation_puts_query_words_in_every_distractor() {
        let p = GeneratorParams {
            seed: 2,
            inflation: 1.0,
            ..Default::default()
        };
        let t = generate_task(&p, 0).unwrap();
        let query = t.query.text.to_lowercase();
        for tool in t
            .tools
            .iter()
            .filter(|s| !matches!(s.role, ToolRole::Gold { .. }))
        {
            let hit = tool
                .card
                .description
                .to_lowercase()
                .split(|c: char| !c.is_alphanumeric())
                .any(|w| w.len() > 3 && query.contains(w));
            assert!(hit, "{}", tool.card.name);
        }
    }

    #[test]
    fn gold_plan_reaches_goal_across_suite() {
        let suite = generate_suite(&GeneratorParams::default(), 60).unwrap();
        for t in &suite {
            let mut ctx = t.initial_context();
            for g in &t.gold_plan {
                let card = &t.tool(&g.tool).unwrap().card;
                let draft = draft_arguments(&ctx, card).unwrap();
                let out = execute_sim_tool(t.tool(&g.tool).unwrap(), t.salt, &draft, &ctx);
                assert_eq!(out.payload, g.output);
                ctx.push(card, draft, out);
            }
            assert!(t.is_goal(&ctx), "{}", t.task_id);
            assert!((3..=5).contains(&t.difficulty.chain_depth));
            assert!((6..=10).contains(&t.difficulty.distractors));
        }
    }

    #[test]
    fn trap_output_is_never_the_gold_value() {
        let suite = generate_suite(&GeneratorParams::default(), 40).unwrap();
        let mut traps = 0;
        let mut wrong = 0;
        for t in &suite {
            let mut ctx = t.initial_context();
            for (i, g) in t.gold_plan.iter().enumerate() {
                for trap in t
                    .tools
                    .iter()
                    .filter(|s| s.role == ToolRole::Trap { target: i })
                {
                    let draft = draft_arguments(&ctx, &trap.card).unwrap();
                    let out = execute_sim_tool(trap, t.salt, &draft, &ctx);
                    traps += 1;
                    if out.payload != g.output {
                        wrong += 1;
                    }
                }
                let tool = t.tool(&g.tool).unwrap();
                let draft = draft_arguments(&ctx, &tool.card).unwrap();
                let out = execute_sim_tool(tool, t.salt, &draft, &ctx);
                ctx.push(&tool.card, draft, out);
            }
        }
        assert!(traps > 0);
        assert!(wrong as f64 >= 0.5 * traps as f64);
    }

    #[test]
    fn dependent_step_fails_without_upstream_output() {
        let p = GeneratorParams {
            seed: 5,
            chain_depth: (4, 4),
            ..Default::default()
        };
        let t = generate_task(&p, 0).unwrap();
        let last = t.gold_plan.last().unwrap();
        let tool = t.tool(&last.tool).unwrap();
        // feed the step a trap's value of the right type
        let mut ctx = t.initial_context();
        for g in &t.gold_plan[..t.gold_plan.len() - 1] {
            let gtool = t.tool(&g.tool).unwrap();
            let d = draft_arguments(&ctx, &gtool.card).unwrap();
            let mut out = execute_sim_tool(gtool, t.salt, &d, &ctx);
            for v in out.payload.values_mut() {
                *v = Value::String("forged:0".into());
            }
            ctx.push(&gtool.card, d, out);
        }
        let d = draft_arguments(&ctx, &tool.card).unwrap();
        let out = execute_sim_tool(tool, t.salt, &d, &ctx);
        assert_eq!(
            out.error_token.as_deref(),
            Some(crate::sim::MISSING_DEPENDENCY)
        );
    }

    #[test]
    fn bad_params_rejected() {
        let p = GeneratorParams {
            inflation: 1.5,
            ..Default::default()
        };
        assert!(matches!(
            generate_task(&p, 0),
            Err(SimError::InvalidParams(_))
        ));
    }

    use serde_json::Value;
}
