//! Census-weighted, demographically stratified reference-speaker sampling.
//!
//! A user voice is drawn in three stages: an accent pool by configured
//! weight, a country uniformly within that pool, then a speaker uniformly
//! within the country. The third stage first fixes an age bin (each 25%)
//! and a gender (each 50%), so the marginals over bins and genders are
//! balanced no matter how the archive's recordings are distributed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Longest usable reference clip, in seconds.
pub const MAX_REF_DURATION_S: f64 = 25.0;
pub const ASSISTANT_POOL_SIZE: usize = 10;
const MAX_COUNTRY_RETRIES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AccentPool {
    Native,
    African,
    Indian,
    Asian,
}

impl AccentPool {
    pub const ALL: [AccentPool; 4] = [
        AccentPool::Native,
        AccentPool::African,
        AccentPool::Indian,
        AccentPool::Asian,
    ];
}

impl fmt::Display for AccentPool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AgeBin {
    #[serde(rename = "10s")]
    Teens,
    #[serde(rename = "20-30s")]
    TwentiesThirties,
    #[serde(rename = "40-50s")]
    FortiesFifties,
    #[serde(rename = "60+")]
    SixtyPlus,
}

impl AgeBin {
    pub const ALL: [AgeBin; 4] = [
        AgeBin::Teens,
        AgeBin::TwentiesThirties,
        AgeBin::FortiesFifties,
        AgeBin::SixtyPlus,
    ];

    /// Ages under 20 fall in the youngest bin.
    pub fn of_age(age: u32) -> AgeBin {
        match age {
            0..=19 => AgeBin::Teens,
            20..=39 => AgeBin::TwentiesThirties,
            40..=59 => AgeBin::FortiesFifties,
            _ => AgeBin::SixtyPlus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
}

impl Gender {
    pub const ALL: [Gender; 2] = [Gender::Male, Gender::Female];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileRepr", into = "ProfileRepr")]
pub struct SpeakerProfile {
    pub speaker_id: String,
    pub accent_pool: AccentPool,
    pub country: String,
    pub age: Option<u32>,
    pub age_bin: Option<AgeBin>,
    pub gender: Gender,
    pub ref_audio: String,
    pub ref_duration_s: f64,
}

#[derive(Serialize, Deserialize)]
struct ProfileRepr {
    speaker_id: String,
    category: AccentPool,
    country: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    age: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    age_bin: Option<AgeBin>,
    sex: Gender,
    ref_audio: String,
    ref_duration_s: f64,
}

impl TryFrom<ProfileRepr> for SpeakerProfile {
    type Error = String;

    fn try_from(r: ProfileRepr) -> std::result::Result<Self, Self::Error> {
        let derived = r.age.map(AgeBin::of_age);
        if let (Some(given), Some(derived)) = (r.age_bin, derived) {
            if given != derived {
                return Err(format!(
                    "speaker {}: age bin {given:?} inconsistent with age {:?}",
                    r.speaker_id, r.age
                ));
            }
        }
        Ok(SpeakerProfile {
            speaker_id: r.speaker_id,
            accent_pool: r.category,
            country: r.country,
            age: r.age,
            age_bin: derived.or(r.age_bin),
            gender: r.sex,
            ref_audio: r.ref_audio,
            ref_duration_s: r.ref_duration_s,
        })
    }
}

impl From<SpeakerProfile> for ProfileRepr {
    fn from(p: SpeakerProfile) -> Self {
        ProfileRepr {
            speaker_id: p.speaker_id,
            category: p.accent_pool,
            country: p.country,
            age: p.age,
            age_bin: p.age_bin,
            sex: p.gender,
            ref_audio: p.ref_audio,
            ref_duration_s: p.ref_duration_s,
        }
    }
}

/// Accent-pool mixture weights; normalized on use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PoolWeights(pub BTreeMap<AccentPool, f64>);

impl Default for PoolWeights {
    /// 2024 U.S. Census population shares per accent pool.
    fn default() -> Self {
        PoolWeights(BTreeMap::from([
            (AccentPool::Native, 0.7457),
            (AccentPool::African, 0.1619),
            (AccentPool::Indian, 0.0092),
            (AccentPool::Asian, 0.0832),
        ]))
    }
}

impl PoolWeights {
    pub fn normalized(&self) -> Result<Vec<(AccentPool, f64)>> {
        if self.0.values().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Config("pool weights must be finite and non-negative".into()));
        }
        let total: f64 = self.0.values().sum();
        if total <= 0.0 {
            return Err(Error::Config("pool weights sum to zero".into()));
        }
        Ok(self.0.iter().map(|(p, w)| (*p, w / total)).collect())
    }
}

type StratumKey = (AccentPool, String, AgeBin, Gender);

/// User-voice pool, immutable once built.
#[derive(Debug, Clone)]
pub struct SpeakerPool {
    strata: BTreeMap<StratumKey, Vec<SpeakerProfile>>,
    countries: BTreeMap<AccentPool, Vec<String>>,
    len: usize,
}

impl SpeakerPool {
    /// Drops overlong clips, speakers without an age, and anyone in the assistant pool.
    pub fn build(candidates: &[SpeakerProfile], assistant_pool: &[SpeakerProfile]) -> Result<Self> {
        let reserved: BTreeSet<&str> = assistant_pool.iter().map(|p| p.speaker_id.as_str()).collect();
        let mut strata: BTreeMap<StratumKey, Vec<SpeakerProfile>> = BTreeMap::new();
        let mut countries: BTreeMap<AccentPool, BTreeSet<String>> = BTreeMap::new();
        let mut len = 0;
        for c in candidates {
            if c.ref_duration_s > MAX_REF_DURATION_S || reserved.contains(c.speaker_id.as_str()) {
                continue;
            }
            let Some(bin) = c.age_bin else {
                log::warn!("speaker {} has no age; excluded from user pool", c.speaker_id);
                continue;
            };
            strata
                .entry((c.accent_pool, c.country.clone(), bin, c.gender))
                .or_default()
                .push(c.clone());
            countries.entry(c.accent_pool).or_default().insert(c.country.clone());
            len += 1;
        }
        if len == 0 {
            return Err(Error::Config("speaker pool is empty after filtering".into()));
        }
        Ok(SpeakerPool {
            strata,
            countries: countries
                .into_iter()
                .map(|(k, v)| (k, v.into_iter().collect()))
                .collect(),
            len,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, speaker_id: &str) -> bool {
        self.strata.values().flatten().any(|p| p.speaker_id == speaker_id)
    }

    pub fn speakers(&self) -> impl Iterator<Item = &SpeakerProfile> {
        self.strata.values().flatten()
    }

    pub fn sample_user_speaker<R: Rng + ?Sized>(
        &self,
        weights: &PoolWeights,
        rng: &mut R,
    ) -> Result<SpeakerProfile> {
        let weights = weights.normalized()?;
        let index = WeightedIndex::new(weights.iter().map(|(_, w)| *w))
            .map_err(|e| Error::Config(format!("pool weights: {e}")))?;
        let pool = weights[index.sample(rng)].0;
        let bin = *AgeBin::ALL.choose(rng).expect("non-empty");
        let gender = *Gender::ALL.choose(rng).expect("non-empty");

        let countries = self
            .countries
            .get(&pool)
            .ok_or_else(|| Error::Config(format!("accent pool {pool} has no speakers")))?;
        for _ in 0..MAX_COUNTRY_RETRIES {
            let country = countries.choose(rng).expect("non-empty");
            if let Some(stratum) = self.strata.get(&(pool, country.clone(), bin, gender)) {
                return Ok(stratum.choose(rng).expect("non-empty").clone());
            }
        }
        Err(Error::Config(format!(
            "no {pool} speaker with age bin {bin:?} and gender {gender:?} after {MAX_COUNTRY_RETRIES} country draws"
        )))
    }
}

/// Uniform draw from the fixed assistant pool (10 native speakers, 5 per gender).
pub fn assign_assistant_speaker<R: Rng + ?Sized>(
    assistant_pool: &[SpeakerProfile],
    rng: &mut R,
) -> Result<SpeakerProfile> {
    check_assistant_pool(assistant_pool)?;
    Ok(assistant_pool.choose(rng).expect("non-empty").clone())
}

pub fn check_assistant_pool(pool: &[SpeakerProfile]) -> Result<()> {
    if pool.len() != ASSISTANT_POOL_SIZE {
        return Err(Error::Config(format!(
            "assistant pool must hold {ASSISTANT_POOL_SIZE} speakers, got {}",
            pool.len()
        )));
    }
    if let Some(p) = pool.iter().find(|p| p.accent_pool != AccentPool::Native) {
        return Err(Error::Config(format!("assistant speaker {} is not native", p.speaker_id)));
    }
    let male = pool.iter().filter(|p| p.gender == Gender::Male).count();
    if male != ASSISTANT_POOL_SIZE / 2 {
        return Err(Error::Config(format!("assistant pool has {male} male speakers, expected 5")));
    }
    Ok(())
}

pub fn load_profiles(path: &Path) -> Result<Vec<SpeakerProfile>> {
    let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&body)?)
}
