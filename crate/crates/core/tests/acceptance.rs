//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;

use dialoguekit::bargein::{sample_candidates, BargeInConfig};
use dialoguekit::clients::Clients;
use dialoguekit::corpus::{
    fluent_projection, io::parse_records, strip_markers, validate_dialogue, BargeInStyle, BargeInType, Dialogue,
    DisfluencyType, Goal, SubGoal, Turn,
};
use dialoguekit::crossturn::{self, classify, reconstruct, CrossTurnConfig};
use dialoguekit::disfluency::{
    insert_filler, insert_repetition, sample_and_type, DisfluencyConfig, DM_FILLERS, EDIT_FILLERS, FP_FILLERS,
};
use dialoguekit::metrics::{
    disclosure_curve, dialogue_curve, edit_distance, ga_smr, slot_f1, speaker_similarity, wer, GoalCoverageState,
    GoalItem, WerAccumulator,
};
use dialoguekit::pipeline::{self, split_indices, split_sizes, PipelineConfig, SplitRatios, Voices};
use dialoguekit::rng::seeded;
use dialoguekit::speakers::{AccentPool, AgeBin, Gender, PoolWeights, SpeakerPool, SpeakerProfile};
use dialoguekit::turn_taking::{
    evaluate_set, run_stream, FireDecision, LabeledStream, OutcomeRates, ProbFrame, Strategy, StrategyConfig,
    TurnTakingDefaults, TurnType,
};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {{
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    }};
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn near(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn goal() -> Goal {
    Goal {
        text: "Complete the booking.".into(),
        sub_goals: vec![SubGoal {
            domain: "order".into(),
            intent: "check".into(),
            constraints: BTreeMap::new(),
            requests: Default::default(),
        }],
    }
}

// Disfluency rate as a function of utterance length.

fn ac1() -> Check {
    let cfg = DisfluencyConfig::default();
    let start = Instant::now();
    let mut rng = seeded(1);
    let mut parts = Vec::new();
    for len in [5usize, 10, 20] {
        let t = Turn::user(vec!["word"; len].join(" "));
        let n = 10_000;
        let hits = (0..n).filter(|_| sample_and_type(&t, &cfg, &mut rng).is_some()).count();
        let frac = hits as f64 / n as f64;
        let expected = 1.0 - (0..len).fold(1.0, |acc, _| acc * 0.9453);
        ensure!(near(frac, expected, 0.02), "L={len}: {frac:.4} vs {expected:.4}");
        parts.push(format!("L={len} {frac:.3}/{expected:.3}"));
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 5.0, "took {secs:.2}s");
    Ok(format!("{} in {secs:.2}s", parts.join(", ")))
}

// Barge-in selection rate and uniform type/style cells.

fn ac2() -> Check {
    let mut turns = Vec::new();
    for i in 0..1000 {
        turns.push(Turn::user(format!("request {i}")));
        turns.push(Turn::assistant(format!("reply {i}")));
    }
    let d = Dialogue::new("bi", "generic", goal(), turns);
    let cfg = BargeInConfig::default();
    let mut cells = [[0usize; 3]; 3];
    let (mut users, mut picked) = (0usize, 0usize);
    for seed in 0..100 {
        let mut rng = seeded(seed);
        let cands = sample_candidates(&d, &cfg, &mut rng);
        users += 1000;
        picked += cands.len();
        for c in cands {
            let k = BargeInType::ALL.iter().position(|x| *x == c.kind).unwrap();
            let s = BargeInStyle::ALL.iter().position(|x| *x == c.style).unwrap();
            cells[k][s] += 1;
        }
    }
    let rate = picked as f64 / users as f64;
    ensure!(near(rate, 0.25, 0.01), "selection rate {rate:.4}");
    let mut worst: f64 = 0.0;
    for (k, row) in cells.iter().enumerate() {
        for (s, n) in row.iter().enumerate() {
            let f = *n as f64 / picked as f64;
            ensure!(near(f, 1.0 / 9.0, 0.01), "cell ({k},{s}) {f:.4}");
            worst = worst.max((f - 1.0 / 9.0).abs());
        }
    }
    Ok(format!("{users} turns, rate {rate:.4}, max cell deviation {worst:.4}"))
}

// Cross-turn dictation reconstructs every value; error rate near p_error.

fn random_value(rng: &mut impl Rng) -> String {
    if rng.random_bool(0.5) {
        let len = rng.random_range(7..=11);
        let digits: String = (0..len).map(|_| char::from(b'0' + rng.random_range(0..10u8))).collect();
        if rng.random_bool(0.5) {
            let cut = rng.random_range(2..len - 2);
            format!("{}-{}", &digits[..cut], &digits[cut..])
        } else {
            digits
        }
    } else {
        let len = rng.random_range(5..=10);
        let mut chars: Vec<char> = (0..len)
            .map(|_| {
                if rng.random_bool(0.5) {
                    char::from(b'A' + rng.random_range(0..26u8))
                } else {
                    char::from(b'0' + rng.random_range(0..10u8))
                }
            })
            .collect();
        chars[0] = char::from(b'A' + rng.random_range(0..26u8));
        chars[len - 1] = char::from(b'0' + rng.random_range(0..10u8));
        chars.into_iter().collect()
    }
}

fn ac3() -> Check {
    let cfg = CrossTurnConfig::default();
    let mut rng = seeded(3);
    let n = 10_000;
    let mut errors = 0;
    for i in 0..n {
        let value = random_value(&mut rng);
        let prefix = "My reference is ";
        let text = format!("{prefix}{value}.");
        let start = prefix.chars().count();
        let d = Dialogue::new(
            format!("ct{i}"),
            "generic",
            goal(),
            vec![
                Turn::assistant("What is the reference?"),
                Turn::user(text).with_span("ref", start, start + value.chars().count()),
                Turn::assistant("Thank you."),
            ],
        );
        let kind = classify(&value, &cfg).ok_or_else(|| format!("`{value}` not segmentable"))?;
        let out = crossturn::augment_dialogue(&d, &mut seeded(1_000_000 + i), &cfg).map_err(|e| e.to_string())?;
        let violations = validate_dialogue(&out);
        ensure!(violations.is_empty(), "`{value}`: {}", violations[0]);
        let expected: String = value.chars().filter(char::is_ascii_alphanumeric).collect();
        let got = reconstruct(&out, "ref", kind);
        ensure!(got == [expected.clone()], "`{value}` ({kind:?}) reconstructed as {got:?}, want {expected}");
        if out.turns.iter().any(|t| t.crossturn.as_ref().is_some_and(|m| m.is_error)) {
            errors += 1;
        }
    }
    let rate = errors as f64 / n as f64;
    ensure!(near(rate, 0.20, 0.02), "error rate {rate:.4}");
    Ok(format!("{n}/{n} reconstructed, error rate {rate:.4}"))
}

// Speaker sampling matches the accent weights and uniform age and gender.

fn frac<K: Ord>(m: &BTreeMap<K, usize>, k: K, n: usize) -> f64 {
    *m.get(&k).unwrap_or(&0) as f64 / n as f64
}

fn ac4() -> Check {
    let users: Vec<SpeakerProfile> = serde_json::from_str(&fs::read_to_string(fixture("speakers.json")).unwrap()).unwrap();
    let assistants: Vec<SpeakerProfile> =
        serde_json::from_str(&fs::read_to_string(fixture("assistants.json")).unwrap()).unwrap();
    let pool = SpeakerPool::build(&users, &assistants).map_err(|e| e.to_string())?;
    let weights = PoolWeights::default();
    let total: f64 = [0.7457, 0.1619, 0.0092, 0.0832].iter().sum();
    let expected = [
        (AccentPool::Native, 0.7457 / total),
        (AccentPool::African, 0.1619 / total),
        (AccentPool::Indian, 0.0092 / total),
        (AccentPool::Asian, 0.0832 / total),
    ];
    let mut rng = seeded(4);
    let n = 100_000;
    let (mut accents, mut ages, mut genders) = (BTreeMap::new(), BTreeMap::new(), BTreeMap::new());
    for _ in 0..n {
        let p = pool.sample_user_speaker(&weights, &mut rng).map_err(|e| e.to_string())?;
        *accents.entry(p.accent_pool).or_insert(0usize) += 1;
        *ages.entry(p.age_bin.ok_or("speaker without age bin")?).or_insert(0usize) += 1;
        *genders.entry(p.gender).or_insert(0usize) += 1;
    }
    for (a, w) in expected {
        let f = frac(&accents, a, n);
        ensure!(near(f, w, 0.01), "{a}: {f:.4} vs {w:.4}");
    }
    for b in AgeBin::ALL {
        let f = frac(&ages, b, n);
        ensure!(near(f, 0.25, 0.01), "{b:?}: {f:.4}");
    }
    for g in Gender::ALL {
        let f = frac(&genders, g, n);
        ensure!(near(f, 0.5, 0.01), "{g:?}: {f:.4}");
    }
    Ok(format!(
        "{n} draws, Native {:.4}, Indian {:.4}",
        frac(&accents, AccentPool::Native, n),
        frac(&accents, AccentPool::Indian, n)
    ))
}

// Turn-taking: streaming against a brute-force oracle, outcome tables,
// the published binary accuracies, and the shipped defaults.

#[derive(Clone, Copy, PartialEq)]
enum Label {
    Listen,
    End,
    Barge,
}

fn label(f: &ProbFrame) -> Label {
    let ps = [(Label::Listen, f.p_listen), (Label::End, f.p_turnend), (Label::Barge, f.p_bargein)];
    let max = ps.iter().map(|p| p.1).fold(f64::MIN, f64::max);
    ps.iter().find(|p| p.1 == max).unwrap().0
}

fn class_p(f: &ProbFrame, c: TurnType) -> f64 {
    match c {
        TurnType::Turnend => f.p_turnend,
        TurnType::Bargein => f.p_bargein,
    }
}

fn class_label(c: TurnType) -> Label {
    match c {
        TurnType::Turnend => Label::End,
        TurnType::Bargein => Label::Barge,
    }
}

fn oracle_score(s: Strategy, w: &[ProbFrame], c: TurnType) -> f64 {
    match s {
        Strategy::Argmax => f64::from(u8::from(label(w.last().unwrap()) == class_label(c))),
        Strategy::ProbThreshold => w.iter().map(|f| class_p(f, c)).sum(),
        Strategy::ListenRelative => w.iter().map(|f| (class_p(f, c) - f.p_listen).max(0.0)).sum(),
        Strategy::LinearWeighted => {
            let n = w.len() as f64;
            w.iter()
                .enumerate()
                .map(|(k, f)| 2.0 * (k as f64 + 1.0) / (n * (n + 1.0)) * class_p(f, c))
                .sum()
        }
        Strategy::TailThreshold => {
            let mut best: Option<(usize, f64)> = None;
            for i in 0..w.len() {
                for j in i..w.len() {
                    let run = &w[i..=j];
                    if !run.iter().all(|f| label(f) == class_label(c)) {
                        continue;
                    }
                    let cand = (run.len(), run.iter().map(|f| class_p(f, c)).sum::<f64>());
                    best = match best {
                        Some(b) if b.0 > cand.0 || (b.0 == cand.0 && b.1 >= cand.1) => Some(b),
                        _ => Some(cand),
                    };
                }
            }
            best.map_or(0.0, |b| b.1)
        }
    }
}

fn oracle(cfg: &StrategyConfig, frames: &[ProbFrame]) -> FireDecision {
    for t in 0..frames.len() {
        let w = &frames[(t + 1).saturating_sub(cfg.window)..=t];
        for c in [TurnType::Turnend, TurnType::Bargein] {
            let s = oracle_score(cfg.strategy, w, c);
            let fire = match cfg.thresholds {
                _ if cfg.strategy == Strategy::Argmax => s > 0.0,
                Some(th) => s > th.get(c),
                None => false,
            };
            if fire {
                return FireDecision::Fire { class: c, frame: t };
            }
        }
    }
    FireDecision::Listen
}

fn random_frame(rng: &mut impl Rng, coarse: bool) -> ProbFrame {
    if coarse {
        let a = rng.random_range(0..=10u32);
        let b = rng.random_range(0..=10 - a);
        let (l, t) = (f64::from(a) / 10.0, f64::from(b) / 10.0);
        ProbFrame::new(l, t, (1.0 - l - t).max(0.0)).unwrap()
    } else {
        let mut x: [f64; 3] = [rng.random(), rng.random::<f64>() * 0.6, rng.random::<f64>() * 0.3];
        let s: f64 = x.iter().sum();
        x.iter_mut().for_each(|v| *v /= s);
        ProbFrame::new(x[0], x[1], 1.0 - x[0] - x[1]).unwrap()
    }
}

/// `n` listen frames with frames `range` set to certain class `c`.
fn stream(n: usize, body: Option<(TurnType, std::ops::Range<usize>)>) -> Vec<ProbFrame> {
    let mut frames = vec![ProbFrame::new(1.0, 0.0, 0.0).unwrap(); n];
    if let Some((c, range)) = body {
        let f = match c {
            TurnType::Turnend => ProbFrame::new(0.0, 1.0, 0.0).unwrap(),
            TurnType::Bargein => ProbFrame::new(0.0, 0.0, 1.0).unwrap(),
        };
        frames[range].iter_mut().for_each(|x| *x = f);
    }
    frames
}

/// Streams whose linear-weighted outcomes are `counts` (correct, early, confused, missed).
fn outcome_set(truth: TurnType, counts: [usize; 4]) -> Vec<LabeledStream> {
    let other = match truth {
        TurnType::Turnend => TurnType::Bargein,
        TurnType::Bargein => TurnType::Turnend,
    };
    let n = 20;
    let mut out = Vec::new();
    let bodies = [Some((truth, n - 6..n)), Some((truth, 2..5)), Some((other, n - 6..n)), None];
    for (body, &k) in bodies.iter().zip(&counts) {
        for _ in 0..k {
            out.push(LabeledStream {
                id: format!("s{}", out.len()),
                truth,
                frames: stream(n, body.clone()),
            });
        }
    }
    out
}

fn ac5() -> Check {
    // (a) streaming decisions equal the oracle.
    let mut rng = seeded(5);
    let mut streams = Vec::new();
    for i in 0..1000 {
        let len = rng.random_range(1..=30);
        let coarse = i % 2 == 0;
        let frames: Vec<ProbFrame> = (0..len).map(|_| random_frame(&mut rng, coarse)).collect();
        let truth = if rng.random_bool(0.5) { TurnType::Turnend } else { TurnType::Bargein };
        streams.push(LabeledStream {
            id: format!("r{i}"),
            truth,
            frames,
        });
    }
    let mut configs: Vec<StrategyConfig> = Strategy::ALL.iter().map(|s| StrategyConfig::defaults(*s)).collect();
    for s in Strategy::ALL {
        for _ in 0..3 {
            let b = rng.random_range(0.05..1.5);
            let t = b + rng.random_range(0.01..3.0);
            let mut c = StrategyConfig::defaults(s).with_thresholds(t, b);
            c.window = rng.random_range(1..=8);
            if s == Strategy::Argmax {
                c.thresholds = None;
            }
            configs.push(c);
        }
    }
    let mut compared = 0;
    for cfg in &configs {
        for s in &streams {
            let got = run_stream(cfg, &s.frames).map_err(|e| e.to_string())?;
            let want = oracle(cfg, &s.frames);
            ensure!(got == want, "{} on {}: {got:?} vs oracle {want:?}", cfg.strategy, s.id);
            compared += 1;
        }
    }

    // (b) outcome rates sum to 100 per truth class.
    for cfg in &configs {
        let rep = evaluate_set(&streams, cfg).map_err(|e| e.to_string())?;
        for r in &rep.rows {
            ensure!(near(r.rates.total(), 100.0, 0.1), "{} {}: total {}", cfg.strategy, r.label, r.rates.total());
        }
    }
    let published = [
        [79.8, 7.6, 5.0, 7.6],
        [39.8, 11.2, 25.8, 23.2],
        [66.0, 10.4, 16.4, 7.2],
        [58.6, 18.0, 11.0, 12.4],
    ];
    for p in published {
        let r = OutcomeRates::new(p[0], p[1], p[2], p[3]);
        ensure!(near(r.total(), 100.0, 0.1), "published row {p:?} sums to {}", r.total());
    }

    // (c) the linear-weighted rows reproduce the binary accuracies.
    let lw = StrategyConfig::defaults(Strategy::LinearWeighted);
    let mut set = outcome_set(TurnType::Turnend, [660, 104, 164, 72]);
    set.extend(outcome_set(TurnType::Bargein, [586, 180, 110, 124]));
    let rep = evaluate_set(&set, &lw).map_err(|e| e.to_string())?;
    let t = rep.row(TurnType::Turnend).ok_or("no T row")?;
    let b = rep.row(TurnType::Bargein).ok_or("no B row")?;
    for (row, want, acc) in [(t, published[2], 82.4), (b, published[3], 69.6)] {
        let got = [row.rates.correct, row.rates.early, row.rates.confused, row.rates.missed];
        for (g, w) in got.iter().zip(want) {
            ensure!(near(*g, w, 1e-9), "{} rates {got:?} vs {want:?}", row.label);
        }
        ensure!(near(row.binary_accuracy, acc, 1e-9), "{} binary accuracy {}", row.label, row.binary_accuracy);
    }

    // (d) shipped defaults.
    let raw: toml::Value = toml::from_str(TurnTakingDefaults::bundled_source()).map_err(|e| e.to_string())?;
    ensure!(raw.get("window").and_then(toml::Value::as_integer) == Some(6), "window is not 6");
    ensure!(raw.get("argmax").is_none(), "argmax has thresholds");
    let table = [
        ("prob_threshold", Strategy::ProbThreshold, 5.0, 0.5),
        ("tail_threshold", Strategy::TailThreshold, 2.7, 0.3),
        ("listen_relative", Strategy::ListenRelative, 3.0, 0.3),
        ("linear_weighted", Strategy::LinearWeighted, 0.45, 0.05),
    ];
    for (key, s, te, bi) in table {
        let sec = raw.get(key).ok_or_else(|| format!("no [{key}]"))?;
        ensure!(
            sec.get("turnend").and_then(toml::Value::as_float) == Some(te)
                && sec.get("bargein").and_then(toml::Value::as_float) == Some(bi),
            "[{key}] differs"
        );
        let c = StrategyConfig::defaults(s);
        let th = c.thresholds.ok_or_else(|| format!("{key} has no thresholds"))?;
        ensure!(c.window == 6 && th.turnend == te && th.bargein == bi, "{key} loaded as {c:?}");
    }
    ensure!(StrategyConfig::defaults(Strategy::Argmax).thresholds.is_none(), "argmax loaded thresholds");

    Ok(format!(
        "{compared} streaming runs match, T {:.1} / B {:.1} binary accuracy, defaults verbatim",
        t.binary_accuracy, b.binary_accuracy
    ))
}

// Edit distance against an exhaustive full-matrix oracle.

fn oracle_distance(a: &[u8], b: &[u8]) -> usize {
    let mut m = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in m.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, v) in m[0].iter_mut().enumerate() {
        *v = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = m[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            m[i][j] = sub.min(m[i - 1][j] + 1).min(m[i][j - 1] + 1);
        }
    }
    m[a.len()][b.len()]
}

fn ac6() -> Check {
    let start = Instant::now();
    let mut seqs: Vec<Vec<u8>> = vec![Vec::new()];
    for len in 1..=8 {
        for bits in 0..(1u32 << len) {
            seqs.push((0..len).map(|i| if bits >> i & 1 == 1 { b'b' } else { b'a' }).collect());
        }
    }
    ensure!(seqs.len() == 511, "{} sequences", seqs.len());
    let mut pairs = 0usize;
    for r in &seqs {
        for h in &seqs {
            let want = oracle_distance(r, h);
            let got = edit_distance(r, h);
            ensure!(got == want, "{r:?} vs {h:?}: {got} != {want}");
            match wer(r, h) {
                Ok(w) => ensure!(!r.is_empty() && w == want as f64 / r.len() as f64, "wer {r:?} {h:?}"),
                Err(_) => ensure!(r.is_empty(), "wer failed for {r:?}"),
            }
            pairs += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 30.0, "took {secs:.2}s");
    Ok(format!("{pairs} pairs in {secs:.2}s"))
}

// Metric fixtures with hand-computed values.

fn constraint(domain: &str, slot: &str, value: &str) -> GoalItem {
    GoalItem::Constraint {
        domain: domain.into(),
        slot: slot.into(),
        value: value.into(),
    }
}

fn request(domain: &str, slot: &str) -> GoalItem {
    GoalItem::Request {
        domain: domain.into(),
        slot: slot.into(),
    }
}

fn ac7() -> Check {
    let mut a = GoalCoverageState::new(vec![
        constraint("hotel", "area", "north"),
        constraint("hotel", "stars", "4"),
        request("hotel", "phone"),
    ]);
    a.cover(0, 1, &[0]);
    a.cover(2, 2, &[1, 2]);
    a.user_turns = 3;
    let mut b = GoalCoverageState::new(vec![constraint("taxi", "destination", "museum"), request("taxi", "car")]);
    b.cover(2, 2, &[0]);
    b.user_turns = 2;
    let mut c = GoalCoverageState::new(vec![constraint("train", "day", "monday")]);
    c.user_turns = 1;
    let states = [a.clone(), b, c];
    let g = ga_smr(&states);
    ensure!(g.ga == 1.0 / 3.0, "GA {}", g.ga);
    ensure!(g.smr == 4.0 / 6.0, "SMR {}", g.smr);
    ensure!(g.smr_constraints == 3.0 / 4.0 && g.smr_requests == 1.0 / 2.0, "per-kind SMR {g:?}");
    ensure!(dialogue_curve(&a, 3) == [1.0 / 3.0, 1.0, 1.0], "curve {:?}", dialogue_curve(&a, 3));
    let dc = disclosure_curve(&states);
    let want = [1.0 / 9.0, 0.5, 0.5];
    ensure!(dc.len() == 3 && dc.iter().zip(want).all(|(x, y)| near(*x, y, 1e-12)), "disclosure {dc:?}");

    // Human reference dialogues cover every item.
    let mut human = Vec::new();
    for items in [vec![constraint("hotel", "area", "north"), request("hotel", "phone")], vec![constraint("taxi", "leave", "5pm")]] {
        let mut s = GoalCoverageState::new(items.clone());
        s.cover(0, 1, &(0..items.len()).collect::<Vec<_>>());
        s.user_turns = 1;
        human.push(s);
    }
    let h = ga_smr(&human);
    ensure!(h.ga == 1.0 && h.smr == 1.0, "Human row GA {} SMR {}", h.ga, h.smr);

    let pred = BTreeMap::from([
        ("area".to_string(), "North ".to_string()),
        ("price".to_string(), "cheap".to_string()),
        ("stars".to_string(), "5".to_string()),
    ]);
    let gold = BTreeMap::from([
        ("area".to_string(), "north".to_string()),
        ("price".to_string(), "cheap".to_string()),
        ("stars".to_string(), "4".to_string()),
        ("day".to_string(), "monday".to_string()),
    ]);
    let (p, r, f) = slot_f1(&pred, &gold);
    ensure!(near(p, 2.0 / 3.0, 1e-12) && near(r, 0.5, 1e-12) && near(f, 4.0 / 7.0, 1e-12), "slot F1 {p} {r} {f}");

    let sim = speaker_similarity(&[
        vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
        vec![vec![3.0, 4.0], vec![6.0, 8.0]],
    ]);
    ensure!(
        near(sim.sim_first.mean, 0.5690355937288492, 1e-9) && near(sim.sim_first.std, 0.41976004224992175, 1e-9),
        "sim_first {:?}",
        sim.sim_first
    );
    ensure!(sim.sim_prev == sim.sim_first && sim.sim_first.n == 3, "sim_prev {:?}", sim.sim_prev);

    let mut acc = WerAccumulator::default();
    acc.add("the cat sat on the mat", "the cat sit on mat");
    acc.add("good morning", "good morning");
    ensure!(acc.rate() == Some(2.0 / 8.0), "corpus WER {:?}", acc.rate());

    Ok(format!("GA {:.4} SMR {:.4} F1 {f:.4} sim {:.4}, Human GA = SMR = 1", g.ga, g.smr, sim.sim_first.mean))
}

// Reproducible stub runs and split sizes.

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn ac8() -> Check {
    let corpus: Vec<Dialogue> =
        parse_records(&fs::read_to_string(fixture("corpus20.jsonl")).unwrap()).map_err(|e| e.to_string())?;
    ensure!(corpus.len() == 20, "{} fixture dialogues", corpus.len());
    let users: Vec<SpeakerProfile> = serde_json::from_str(&fs::read_to_string(fixture("speakers.json")).unwrap()).unwrap();
    let assistants: Vec<SpeakerProfile> =
        serde_json::from_str(&fs::read_to_string(fixture("assistants.json")).unwrap()).unwrap();
    let voices = Voices::new(SpeakerPool::build(&users, &assistants).map_err(|e| e.to_string())?, assistants)
        .map_err(|e| e.to_string())?;
    let tmp = tempfile::tempdir().unwrap();
    let mut trees = Vec::new();
    for (i, workers) in [1usize, 4, 1, 4].into_iter().enumerate() {
        let cfg = PipelineConfig {
            global_seed: 2024,
            workers,
            ..PipelineConfig::default()
        };
        let dir = tmp.path().join(format!("run{i}"));
        let out = pipeline::run(&cfg, &corpus, &Clients::stub(), &voices, &dir).map_err(|e| e.to_string())?;
        ensure!(out.quarantined.is_empty(), "quarantined: {:?}", out.quarantined);
        pipeline::write_run(&dir, &out).map_err(|e| e.to_string())?;
        trees.push(tree(&dir));
    }
    let files = trees[0].len();
    ensure!(trees.iter().all(|t| *t == trees[0]), "run outputs differ");

    let ratios = SplitRatios::default();
    ensure!(split_sizes(1000, &ratios) == [750, 100, 150], "split sizes {:?}", split_sizes(1000, &ratios));
    let ids: Vec<String> = (0..1000).map(|i| format!("d{i:04}")).collect();
    let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
    let parts = split_indices(&refs, &ratios, 7);
    let sizes = parts.each_ref().map(Vec::len);
    ensure!(sizes == [750, 100, 150], "split {sizes:?}");
    Ok(format!("{files} files identical over workers 1 and 4, split 750/100/150"))
}

// Fluent projection undoes rule-based injections.

fn random_utterance(rng: &mut impl Rng) -> String {
    let n = rng.random_range(1..=15);
    (0..n)
        .map(|_| {
            let len = rng.random_range(1..=8);
            let mut w: String = (0..len).map(|_| char::from(b'a' + rng.random_range(0..26u8))).collect();
            if rng.random_bool(0.2) {
                w = w[..1].to_uppercase() + &w[1..];
            }
            if rng.random_bool(0.2) {
                w.push([',', '.', '?', '!'][rng.random_range(0..4)]);
            }
            w
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn ac9() -> Check {
    let kinds = [DisfluencyType::FP, DisfluencyType::DM, DisfluencyType::EDIT, DisfluencyType::REP];
    let mut rng = seeded(9);
    let n = 10_000;
    for i in 0..n {
        let text = random_utterance(&mut rng);
        let words: Vec<&str> = text.split(' ').collect();
        let mut t = Turn::user(text.clone());
        let slot_word = rng.random_range(0..words.len());
        let start: usize = words[..slot_word].iter().map(|w| w.chars().count() + 1).sum();
        let core = words[slot_word].trim_end_matches([',', '.', '?', '!']).chars().count();
        t = t.with_span("slot", start, start + core);
        let kind = kinds[i % 4];
        let pos = rng.random_range(0..words.len());
        let out = match kind {
            DisfluencyType::REP => insert_repetition(&t, pos),
            _ => {
                let inv = match kind {
                    DisfluencyType::FP => FP_FILLERS,
                    DisfluencyType::DM => DM_FILLERS,
                    _ => EDIT_FILLERS,
                };
                insert_filler(&t, kind, pos, inv[rng.random_range(0..inv.len())])
            }
        }
        .map_err(|e| format!("{kind:?} at {pos} in `{text}`: {e}"))?;
        let fluent = fluent_projection(&out).map_err(|e| e.to_string())?;
        ensure!(fluent == text, "{kind:?} `{text}` projected to `{fluent}`");
        ensure!(strip_markers(out.tagged()) == out.text, "{kind:?} `{text}`: text is not the unmarked tagged text");
        let s = &out.slot_spans[0];
        ensure!(
            out.span_text(s) == t.span_text(&t.slot_spans[0]),
            "{kind:?} `{text}`: slot span moved off its value"
        );
    }
    Ok(format!("{n}/{n} round trips"))
}

fn main() -> ExitCode {
    let checks: [Criterion; 9] = [
        ("AC1 disfluency rate by length", ac1),
        ("AC2 barge-in sampling", ac2),
        ("AC3 cross-turn reconstruction", ac3),
        ("AC4 speaker sampling", ac4),
        ("AC5 turn-taking engine", ac5),
        ("AC6 edit distance oracle", ac6),
        ("AC7 metric fixtures", ac7),
        ("AC8 reproducible runs and splits", ac8),
        ("AC9 fluent projection", ac9),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in checks {
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("{name:<34} PASS  {detail}"),
            Err(why) => {
                failed += 1;
                println!("{name:<34} FAIL  {why}");
            }
        }
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
