//! Per-turn emotion labels and the speaking-style keywords used to voice them.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::clients::{prompts, ChatClient, ChatRequest, PromptKind};
use crate::corpus::{Dialogue, EmotionLabel, Role};
use crate::{Error, Result};

/// Sources whose corpora ship their own emotion labels.
pub const LABELED_SOURCES: &[&str] = &["emowoz"];

#[derive(Debug, Clone, PartialEq)]
pub struct EmotionKeywordMap(BTreeMap<EmotionLabel, Vec<String>>);

impl Default for EmotionKeywordMap {
    fn default() -> Self {
        let table: [(EmotionLabel, &[&str]); 7] = [
            (EmotionLabel::Neutral, &["calm", "indifferent", "patient", "relaxed"]),
            (EmotionLabel::Fearful, &["fearful", "shocked", "surprised"]),
            (EmotionLabel::Dissatisfied, &["angry", "contempt", "disgusted", "defiant"]),
            (EmotionLabel::Apologetic, &["compassionate", "selfless", "humble"]),
            (
                EmotionLabel::Abusive,
                &["commanding", "authoritative", "merciless", "loud", "vengeful"],
            ),
            (
                EmotionLabel::Excited,
                &["adventurous", "energetic", "passionate", "curious", "creative", "joyful"],
            ),
            (EmotionLabel::Satisfied, &["proud", "hopeful", "happy", "cheerful"]),
        ];
        EmotionKeywordMap(
            table
                .into_iter()
                .map(|(l, ks)| (l, ks.iter().map(|k| k.to_string()).collect()))
                .collect(),
        )
    }
}

impl EmotionKeywordMap {
    /// A map must cover all seven labels with at least one keyword each.
    pub fn new(map: BTreeMap<EmotionLabel, Vec<String>>) -> Result<Self> {
        for l in EmotionLabel::ALL {
            if map.get(&l).is_none_or(|ks| ks.is_empty()) {
                return Err(Error::Config(format!("no style keywords for {l}")));
            }
        }
        Ok(EmotionKeywordMap(map))
    }

    pub fn keywords(&self, label: EmotionLabel) -> &[String] {
        &self.0[&label]
    }

    pub fn keyword_for<R: Rng + ?Sized>(&self, label: EmotionLabel, rng: &mut R) -> &str {
        self.0[&label].choose(rng).expect("validated non-empty")
    }
}

fn parse_label(reply: &str) -> Option<EmotionLabel> {
    let r = reply.trim().trim_end_matches('.');
    r.parse::<u8>().ok().and_then(EmotionLabel::from_id)
}

fn conversation(d: &Dialogue, upto: usize) -> String {
    d.turns[..=upto]
        .iter()
        .map(|t| match t.role {
            Role::User => format!("User: {}", t.text),
            Role::Assistant => format!("Assistant: {}", t.text),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Labels user turn `idx` with the judge's 0-6 answer.
///
/// A malformed answer is asked again once, then defaults to neutral.
pub fn annotate_turn(d: &Dialogue, idx: usize, judge: &dyn ChatClient) -> Result<EmotionLabel> {
    let t = d
        .turns
        .get(idx)
        .ok_or_else(|| Error::contract(format!("turn {idx} out of range")))?;
    if !t.is_user() {
        return Err(Error::contract(format!("turn {idx} is an assistant turn")));
    }
    let vars = BTreeMap::from([
        ("context_str".to_string(), conversation(d, idx)),
        ("utterance".to_string(), t.text.clone()),
    ]);
    let req = ChatRequest::from_template(PromptKind::Emotion, prompts::EMOTION, vars).with_temperature(0.0);
    for attempt in 0..2 {
        let reply = judge.chat(&req)?;
        if let Some(l) = parse_label(&reply) {
            return Ok(l);
        }
        log::warn!(
            "{}: emotion answer `{}` for turn {idx} unusable (attempt {})",
            d.dialogue_id,
            reply.trim(),
            attempt + 1
        );
    }
    Ok(EmotionLabel::Neutral)
}

/// Segment turns take the label of the latest non-segment user turn before
/// them; assistant turns are neutral.
pub fn inherit_labels(d: &Dialogue) -> Dialogue {
    let mut out = d.clone();
    let mut anchor: Option<EmotionLabel> = None;
    for t in out.turns.iter_mut() {
        match t.role {
            Role::Assistant => t.emotion = Some(EmotionLabel::Neutral),
            Role::User if t.is_segment() => t.emotion = Some(anchor.unwrap_or(EmotionLabel::Neutral)),
            Role::User => {
                let l = t.emotion.unwrap_or(EmotionLabel::Neutral);
                t.emotion = Some(l);
                anchor = Some(l);
            }
        }
    }
    out
}

/// Labels every non-segment user turn, then propagates labels.
///
/// Dialogues from sources that ship labels keep them; only their unlabeled
/// user turns (for example inserted barge-in turns) go to the judge.
pub fn annotate_dialogue(d: &Dialogue, judge: &dyn ChatClient) -> Result<Dialogue> {
    let keep = LABELED_SOURCES.contains(&d.source.as_str());
    let mut out = d.clone();
    for i in 0..d.turns.len() {
        let t = &d.turns[i];
        if !t.is_user() || t.is_segment() || (keep && t.emotion.is_some()) {
            continue;
        }
        out.turns[i].emotion = Some(annotate_turn(d, i, judge)?);
    }
    Ok(inherit_labels(&out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clients::stub::StubChat;
    use crate::corpus::{CrossTurnMeta, Goal, SubGoal, Turn};
    use crate::rng::seeded;

    fn goal() -> Goal {
        Goal {
            text: "g".into(),
            sub_goals: vec![SubGoal {
                domain: "d".into(),
                intent: "i".into(),
                constraints: Default::default(),
                requests: ["phone".to_string()].into(),
            }],
        }
    }

    fn segment(text: &str) -> Turn {
        let mut t = Turn::user(text);
        t.crossturn = Some(CrossTurnMeta {
            slot_name: "phone".into(),
            chunk_index: 0,
            chunk_text: text.into(),
            is_error: false,
            is_correction: false,
            corrected_in_turn: None,
        });
        t
    }

    #[test]
    fn table_keywords() {
        let m = EmotionKeywordMap::default();
        assert_eq!(m.keywords(EmotionLabel::Dissatisfied), ["angry", "contempt", "disgusted", "defiant"]);
        let sizes: Vec<usize> = EmotionLabel::ALL.iter().map(|l| m.keywords(*l).len()).collect();
        assert_eq!(sizes, [4, 3, 4, 3, 5, 6, 4]);
    }

    #[test]
    fn singleton_map_always_returns_its_keyword() {
        let map = EmotionLabel::ALL.iter().map(|l| (*l, vec![format!("k{}", l.id())])).collect();
        let m = EmotionKeywordMap::new(map).unwrap();
        let mut rng = seeded(0);
        assert!((0..100).all(|_| m.keyword_for(EmotionLabel::Neutral, &mut rng) == "k0"));
    }

    #[test]
    fn incomplete_map_rejected() {
        let map = BTreeMap::from([(EmotionLabel::Neutral, vec!["calm".to_string()])]);
        assert!(EmotionKeywordMap::new(map).is_err());
    }

    #[test]
    fn excited_keywords_uniform() {
        let m = EmotionKeywordMap::default();
        let mut rng = seeded(3);
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for _ in 0..10_000 {
            *counts.entry(m.keyword_for(EmotionLabel::Excited, &mut rng).to_string()).or_default() += 1;
        }
        assert_eq!(counts.len(), 6);
        for c in counts.values() {
            assert!((*c as f64 / 10_000.0 - 1.0 / 6.0).abs() < 0.02);
        }
    }

    #[test]
    fn stub_labels_and_contract() {
        let d = Dialogue::new(
            "d",
            "generic",
            goal(),
            vec![Turn::user("Great, thank you!"), Turn::assistant("Bye."), Turn::user("What time is it?")],
        );
        let stub = StubChat::default();
        assert_eq!(annotate_turn(&d, 0, &stub).unwrap(), EmotionLabel::Satisfied);
        assert_eq!(annotate_turn(&d, 2, &stub).unwrap(), EmotionLabel::Neutral);
        assert!(matches!(annotate_turn(&d, 1, &stub), Err(Error::Contract(_))));
    }

    #[test]
    fn malformed_answers_retry_then_neutral() {
        let d = Dialogue::new("d", "generic", goal(), vec![Turn::user("hi")]);
        assert_eq!(annotate_turn(&d, 0, &StubChat::scripted(["x", "5"])).unwrap(), EmotionLabel::Excited);
        assert_eq!(annotate_turn(&d, 0, &StubChat::scripted(["x", "9"])).unwrap(), EmotionLabel::Neutral);
    }

    #[test]
    fn segments_inherit_anchor() {
        let mut first = Turn::user("My number, please note it!");
        first.emotion = Some(EmotionLabel::Excited);
        let d = Dialogue::new(
            "d",
            "generic",
            goal(),
            vec![
                segment("zero one two"),
                Turn::assistant("Got it."),
                first,
                Turn::assistant("Go on."),
                segment("three four five"),
                Turn::assistant("Got it."),
                segment("six seven eight"),
                Turn::assistant("Got it."),
                segment("nine"),
            ],
        );
        let out = inherit_labels(&d);
        assert_eq!(out.turns[0].emotion, Some(EmotionLabel::Neutral));
        for i in [4, 6, 8] {
            assert_eq!(out.turns[i].emotion, Some(EmotionLabel::Excited));
        }
        assert!(out.turns.iter().filter(|t| !t.is_user()).all(|t| t.emotion == Some(EmotionLabel::Neutral)));
    }

    #[test]
    fn plain_dialogue_only_gains_defaults() {
        let mut u = Turn::user("hello");
        u.emotion = Some(EmotionLabel::Apologetic);
        let mut a = Turn::assistant("hi");
        a.emotion = Some(EmotionLabel::Neutral);
        let d = Dialogue::new("d", "generic", goal(), vec![u, a]);
        assert_eq!(inherit_labels(&d), d);
    }

    #[test]
    fn labeled_sources_keep_their_labels() {
        let mut u = Turn::user("thank you");
        u.emotion = Some(EmotionLabel::Dissatisfied);
        let d = Dialogue::new("d", "emowoz", goal(), vec![u.clone(), Turn::assistant("ok"), Turn::user("thanks!")]);
        let out = annotate_dialogue(&d, &StubChat::default()).unwrap();
        assert_eq!(out.turns[0].emotion, Some(EmotionLabel::Dissatisfied));
        assert_eq!(out.turns[2].emotion, Some(EmotionLabel::Satisfied));
        let g = Dialogue::new("d", "generic", goal(), vec![u, Turn::assistant("ok")]);
        let out = annotate_dialogue(&g, &StubChat::default()).unwrap();
        assert_eq!(out.turns[0].emotion, Some(EmotionLabel::Satisfied));
    }
}
