//! Evaluation metrics and corpus statistics.

mod coverage;
mod report;
mod similarity;
mod slots;
mod stats;
mod wer;

pub use coverage::{
    curve_csv, dialogue_curve, disclosure_curve, evaluate_dialogue, ga_smr, goal_items, judge_turn_coverage,
    parse_selection, Covered, GaSmr, GoalCoverageState, GoalItem,
};
pub use report::interruption_table;
pub use similarity::{cosine, speaker_similarity, user_turn_embeddings, MeanStd, SpeakerSimilarity};
pub use slots::{normalize_value, slot_f1, slot_f1_micro, SlotCounts};
pub use stats::{dataset_stats, StatsReport};
pub use wer::{edit_distance, wer, wer_text, wer_tokens, WerAccumulator};
