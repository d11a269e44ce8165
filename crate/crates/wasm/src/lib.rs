//! Browser bindings for the demo page: a turn-taking explorer, a disfluency
//! preview and a speaker sampler. Every export returns a JSON string.

use std::collections::BTreeMap;

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use dialoguekit::corpus::{fluent_projection, DisfluencyType, Turn};
use dialoguekit::disfluency::{
    disfluency_probability, insert_filler, insert_repetition, DisfluencyConfig, DM_FILLERS, EDIT_FILLERS, FP_FILLERS,
};
use dialoguekit::rng::seeded;
use dialoguekit::speakers::{AccentPool, AgeBin, Gender, PoolWeights, SpeakerPool, SpeakerProfile};
use dialoguekit::text::words;
use dialoguekit::turn_taking::{
    run_stream, window_score, FireDecision, ProbFrame, Strategy, StrategyConfig, TurnTakingDefaults, TurnType,
};
use rand::Rng;

fn js(r: Result<Value, String>) -> Result<String, JsError> {
    r.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

/// Window size and thresholds shipped with the library.
#[wasm_bindgen]
pub fn turn_taking_defaults() -> String {
    let d = TurnTakingDefaults::bundled();
    let thresholds: BTreeMap<String, Value> = d
        .thresholds
        .iter()
        .map(|(s, t)| (s.to_string(), json!({"turnend": t.turnend, "bargein": t.bargein})))
        .collect();
    json!({"window": d.window, "thresholds": thresholds}).to_string()
}

/// Runs one strategy over `frames_json`, an array of `[p_listen, p_turnend,
/// p_bargein]` triples, and reports the per-frame scores with the decision.
#[wasm_bindgen]
pub fn turn_taking_trace(
    strategy: &str,
    window: usize,
    turnend: Option<f64>,
    bargein: Option<f64>,
    frames_json: &str,
) -> Result<String, JsError> {
    js(trace(strategy, window, turnend, bargein, frames_json))
}

fn trace(
    strategy: &str,
    window: usize,
    turnend: Option<f64>,
    bargein: Option<f64>,
    frames_json: &str,
) -> Result<Value, String> {
    let strategy: Strategy = strategy.parse().map_err(|e: dialoguekit::Error| e.to_string())?;
    let mut cfg = StrategyConfig::defaults(strategy);
    cfg.window = window;
    if let (Some(t), Some(b)) = (turnend, bargein) {
        if strategy != Strategy::Argmax {
            cfg = cfg.with_thresholds(t, b);
        }
    }
    cfg.validate().map_err(|e| e.to_string())?;
    let raw: Vec<[f64; 3]> = serde_json::from_str(frames_json).map_err(|e| format!("frames: {e}"))?;
    let frames = raw
        .iter()
        .map(|[l, t, b]| ProbFrame::new(*l, *t, *b))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let scores: Vec<Value> = (0..frames.len())
        .map(|i| {
            let w = &frames[(i + 1).saturating_sub(cfg.window)..=i];
            json!({
                "turnend": window_score(strategy, w, TurnType::Turnend),
                "bargein": window_score(strategy, w, TurnType::Bargein),
            })
        })
        .collect();
    let decision = match run_stream(&cfg, &frames).map_err(|e| e.to_string())? {
        FireDecision::Listen => json!({"outcome": "listen"}),
        FireDecision::Fire { class, frame } => json!({"outcome": "fire", "class": class.short(), "frame": frame}),
    };
    Ok(json!({
        "strategy": strategy.to_string(),
        "window": cfg.window,
        "thresholds": cfg.thresholds.map(|t| json!({"turnend": t.turnend, "bargein": t.bargein})),
        "scores": scores,
        "decision": decision,
    }))
}

/// Injects one rule-based disfluency (`FP`, `DM`, `EDIT` or `REP`) into
/// `text`. Without a position, one is drawn from `seed`.
#[wasm_bindgen]
pub fn disfluency_preview(text: &str, kind: &str, position: Option<usize>, seed: u32) -> Result<String, JsError> {
    js(preview(text, kind, position, seed))
}

fn preview(text: &str, kind: &str, position: Option<usize>, seed: u32) -> Result<Value, String> {
    let n = words(text).len();
    if n == 0 {
        return Err("enter some words first".into());
    }
    let kind = DisfluencyType::from_marker(&format!("[{}]", kind.trim().to_uppercase()))
        .ok_or_else(|| format!("unknown disfluency type `{kind}`"))?;
    let mut rng = seeded(u64::from(seed));
    let pos = position.unwrap_or_else(|| rng.random_range(0..n));
    let t = Turn::user(text);
    let out = match kind {
        DisfluencyType::REP => insert_repetition(&t, pos),
        DisfluencyType::FP | DisfluencyType::DM | DisfluencyType::EDIT => {
            let inventory = match kind {
                DisfluencyType::FP => FP_FILLERS,
                DisfluencyType::DM => DM_FILLERS,
                _ => EDIT_FILLERS,
            };
            insert_filler(&t, kind, pos, inventory[rng.random_range(0..inventory.len())])
        }
        _ => return Err(format!("{kind:?} needs a text generator and is not available here")),
    }
    .map_err(|e| e.to_string())?;
    let fluent = fluent_projection(&out).map_err(|e| e.to_string())?;
    Ok(json!({
        "words": n,
        "probability": disfluency_probability(n, DisfluencyConfig::default().b),
        "position": pos,
        "tagged": out.tagged(),
        "text": out.text,
        "fluent": fluent,
        "round_trip": fluent == text,
    }))
}

const COUNTRIES: [(AccentPool, [&str; 2]); 4] = [
    (AccentPool::Native, ["United States", "United Kingdom"]),
    (AccentPool::African, ["Nigeria", "Kenya"]),
    (AccentPool::Indian, ["India", "India"]),
    (AccentPool::Asian, ["China", "Philippines"]),
];

fn demo_pool() -> Result<SpeakerPool, String> {
    let mut users = Vec::new();
    for (pool, countries) in COUNTRIES {
        for country in countries {
            for (age, bin) in [16, 31, 47, 66].into_iter().zip(AgeBin::ALL) {
                for gender in Gender::ALL {
                    users.push(SpeakerProfile {
                        speaker_id: format!("{pool}_{country}_{age}_{gender:?}_{}", users.len()),
                        accent_pool: pool,
                        country: country.to_string(),
                        age: Some(age),
                        age_bin: Some(bin),
                        gender,
                        ref_audio: String::new(),
                        ref_duration_s: 10.0,
                    });
                }
            }
        }
    }
    SpeakerPool::build(&users, &[]).map_err(|e| e.to_string())
}

/// Draws `n` user voices with the given accent weights and tallies them.
#[wasm_bindgen]
pub fn sample_speakers(
    native: f64,
    african: f64,
    indian: f64,
    asian: f64,
    n: usize,
    seed: u32,
) -> Result<String, JsError> {
    js(sample(&[native, african, indian, asian], n, seed))
}

fn sample(weights: &[f64; 4], n: usize, seed: u32) -> Result<Value, String> {
    let pool = demo_pool()?;
    let weights = PoolWeights(AccentPool::ALL.into_iter().zip(weights.iter().copied()).collect());
    let mut rng = seeded(u64::from(seed));
    let mut counts: BTreeMap<&str, BTreeMap<String, usize>> = BTreeMap::new();
    for _ in 0..n {
        let p = pool.sample_user_speaker(&weights, &mut rng).map_err(|e| e.to_string())?;
        let bin = serde_json::to_value(p.age_bin).map_err(|e| e.to_string())?;
        for (k, v) in [
            ("accent", p.accent_pool.to_string()),
            ("age", bin.as_str().unwrap_or_default().to_string()),
            ("gender", format!("{:?}", p.gender).to_lowercase()),
            ("country", p.country.clone()),
        ] {
            *counts.entry(k).or_default().entry(v).or_default() += 1;
        }
    }
    let expected: BTreeMap<String, f64> = weights
        .normalized()
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|(p, w)| (p.to_string(), w))
        .collect();
    Ok(json!({"n": n, "counts": counts, "expected_accent": expected}))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_reports_scores_and_decision() {
        let frames = "[[1,0,0],[0.2,0.8,0],[0,1,0],[0,1,0]]";
        let v = trace("linear_weighted", 6, None, None, frames).unwrap();
        assert_eq!(v["scores"].as_array().unwrap().len(), 4);
        assert_eq!(v["decision"]["outcome"], "fire");
        assert_eq!(v["decision"]["class"], "T");
        let v = trace("argmax", 6, Some(1.0), Some(0.5), "[[1,0,0]]").unwrap();
        assert_eq!(v["decision"]["outcome"], "listen");
        assert!(v["thresholds"].is_null());
        assert!(trace("nope", 6, None, None, "[]").is_err());
        assert!(trace("prob_threshold", 6, None, None, "[[0.5,0.6,0]]").is_err());
    }

    #[test]
    fn preview_round_trips() {
        for kind in ["FP", "dm", "EDIT", "REP"] {
            let v = preview("I need a table for two tonight", kind, None, 3).unwrap();
            assert_eq!(v["fluent"], "I need a table for two tonight");
            assert_eq!(v["round_trip"], true);
        }
        assert!(preview("", "FP", None, 1).is_err());
        assert!(preview("hello there", "COR", None, 1).is_err());
    }

    #[test]
    fn sampler_counts_every_draw() {
        let v = sample(&[0.7457, 0.1619, 0.0092, 0.0832], 2000, 1).unwrap();
        let total: u64 = v["counts"]["gender"].as_object().unwrap().values().map(|x| x.as_u64().unwrap()).sum();
        assert_eq!(total, 2000);
        assert_eq!(v["counts"]["age"].as_object().unwrap().len(), 4);
        assert!(sample(&[0.0; 4], 10, 1).is_err());
        assert!(turn_taking_defaults().contains("\"window\":6"));
    }
}
