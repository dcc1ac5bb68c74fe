//! Room labeling cascade: signature rules, three-way vote, adjudication file.

use crate::seed;
use crate::world::catalog::signature_objects;
use crate::world::{LabelProvenance, Region, RoomLabel, SceneGraph, SceneObject};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RtsaError {
    #[error("duplicate vote source {0}")]
    DuplicateSource(LabelSource),
    #[error("unresolved adjudication rows for region_ids {0:?}")]
    Unresolved(Vec<String>),
    #[error("adjudication file is missing region {scene_id}/{region_id}")]
    MissingRegion { scene_id: String, region_id: u32 },
    #[error("adjudication row {scene_id}/{region_id} does not match any pending item")]
    UnexpectedRow { scene_id: String, region_id: u32 },
    #[error("adjudication row {scene_id}/{region_id} resolves to Unknown")]
    UnknownResolution { scene_id: String, region_id: u32 },
    #[error("bad label in adjudication file: {0}")]
    BadLabel(String),
    #[error("adjudication file: {0}")]
    Csv(#[from] csv::Error),
    #[error("adjudication file: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    Rule,
    ClassifierA,
    ClassifierB,
}

impl LabelSource {
    pub const ALL: [LabelSource; 3] = [
        LabelSource::Rule,
        LabelSource::ClassifierA,
        LabelSource::ClassifierB,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LabelSource::Rule => "rule",
            LabelSource::ClassifierA => "classifier_a",
            LabelSource::ClassifierB => "classifier_b",
        }
    }

    fn slot(self) -> usize {
        match self {
            LabelSource::Rule => 0,
            LabelSource::ClassifierA => 1,
            LabelSource::ClassifierB => 2,
        }
    }
}

impl fmt::Display for LabelSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelVote {
    pub source: LabelSource,
    pub label: RoomLabel,
    pub confidence: f64,
}

impl LabelVote {
    pub fn new(source: LabelSource, label: RoomLabel, confidence: f64) -> Self {
        Self {
            source,
            label,
            confidence: confidence.clamp(0.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjudicationItem {
    pub scene_id: String,
    pub region_id: u32,
    pub votes: Vec<LabelVote>,
    pub resolved_label: Option<RoomLabel>,
}

impl AdjudicationItem {
    fn vote_of(&self, source: LabelSource) -> RoomLabel {
        self.votes
            .iter()
            .find(|v| v.source == source)
            .map_or(RoomLabel::Unknown, |v| v.label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum VoteOutcome {
    Label {
        label: RoomLabel,
        provenance: LabelProvenance,
    },
    Adjudicate(AdjudicationItem),
}

/// Signature object sets per room type.
#[derive(Debug, Clone)]
pub struct SignatureTable {
    entries: Vec<(RoomLabel, Vec<String>)>,
}

impl Default for SignatureTable {
    fn default() -> Self {
        Self {
            entries: RoomLabel::KNOWN
                .iter()
                .map(|l| (*l, signature_objects(*l).iter().map(|s| s.to_string()).collect()))
                .filter(|(_, sig): &(RoomLabel, Vec<String>)| !sig.is_empty())
                .collect(),
        }
    }
}

impl SignatureTable {
    pub fn new(entries: Vec<(RoomLabel, Vec<String>)>) -> Self {
        Self { entries }
    }
}

/// Keyword rule: the room type with the unique largest number of distinct
/// signature hits wins, with confidence `hits / signature size`. No hit or a
/// tied hit count yields `(Unknown, 0)`.
///
/// Objects from other regions are ignored.
pub fn rule_classify(region: &Region, objects: &[SceneObject], signatures: &SignatureTable) -> (RoomLabel, f64) {
    let present: BTreeSet<&str> = objects
        .iter()
        .filter(|o| o.region_id == region.region_id)
        .map(|o| o.category.as_str())
        .collect();
    let mut best: Option<(usize, RoomLabel, usize)> = None;
    let mut tied = false;
    for (label, sig) in &signatures.entries {
        let hits = sig.iter().filter(|s| present.contains(s.as_str())).count();
        if hits == 0 {
            continue;
        }
        match best {
            Some((h, _, _)) if hits < h => {}
            Some((h, _, _)) if hits == h => tied = true,
            _ => {
                best = Some((hits, *label, sig.len()));
                tied = false;
            }
        }
    }
    match best {
        Some((hits, label, size)) if !tied => (label, hits as f64 / size as f64),
        _ => (RoomLabel::Unknown, 0.0),
    }
}

/// Three-way majority. Unknown never counts toward a majority.
pub fn rtsa_vote(scene_id: &str, region_id: u32, votes: &[LabelVote; 3]) -> Result<VoteOutcome, RtsaError> {
    let mut seen = [false; 3];
    for v in votes {
        if std::mem::replace(&mut seen[v.source.slot()], true) {
            return Err(RtsaError::DuplicateSource(v.source));
        }
    }
    let mut counts: BTreeMap<RoomLabel, usize> = BTreeMap::new();
    for v in votes.iter().filter(|v| v.label.is_known()) {
        *counts.entry(v.label).or_default() += 1;
    }
    if let Some((&label, _)) = counts.iter().find(|(_, &n)| n >= 2) {
        let rule_agrees = votes
            .iter()
            .any(|v| v.source == LabelSource::Rule && v.label == label);
        let provenance = if rule_agrees {
            LabelProvenance::Rule
        } else {
            LabelProvenance::Vote
        };
        return Ok(VoteOutcome::Label { label, provenance });
    }
    let mut sorted = votes.to_vec();
    sorted.sort_by_key(|v| v.source);
    Ok(VoteOutcome::Adjudicate(AdjudicationItem {
        scene_id: scene_id.to_string(),
        region_id,
        votes: sorted,
        resolved_label: None,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierRequest {
    pub scene_id: String,
    pub region_id: u32,
    /// Object inventory summary of the region, sorted category names.
    pub descriptor: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierResponse {
    pub label: RoomLabel,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassifierError {
    #[error("classifier timed out")]
    Timeout,
    #[error("classifier unavailable: {0}")]
    Unavailable(String),
}

/// A room-type classifier client. Implementations may be remote; the
/// pipeline only depends on this request/response contract.
pub trait PanoramaClassifier: Sync {
    fn source(&self) -> LabelSource;
    fn classify(&self, request: &ClassifierRequest) -> Result<ClassifierResponse, ClassifierError>;
}

/// Seeded noisy oracle: returns the ground-truth label with probability `p`,
/// otherwise a wrong label.
///
/// Wrong labels never collude: for each region one permutation of the wrong
/// labels is drawn from `(seed, scene, region)` and source `k` takes its
/// `k`-th element, so each source's error is uniform over the wrong labels yet
/// two erring sources never agree.
#[derive(Debug, Clone)]
pub struct MockClassifier {
    source: LabelSource,
    p: f64,
    seed: u64,
    truth: BTreeMap<(String, u32), RoomLabel>,
}

impl MockClassifier {
    pub fn new(source: LabelSource, p: f64, seed: u64) -> Self {
        Self {
            source,
            p: p.clamp(0.0, 1.0),
            seed,
            truth: BTreeMap::new(),
        }
    }

    pub fn with_truth(mut self, scene_id: &str, region_id: u32, label: RoomLabel) -> Self {
        self.insert_truth(scene_id, region_id, label);
        self
    }

    pub fn insert_truth(&mut self, scene_id: &str, region_id: u32, label: RoomLabel) {
        self.truth.insert((scene_id.to_string(), region_id), label);
    }

    /// Loads the generator ground truth of every region of a scene.
    pub fn learn_scene(&mut self, scene: &SceneGraph) {
        for r in scene.regions() {
            self.insert_truth(scene.scene_id(), r.region_id, r.ground_truth_label);
        }
    }

    pub fn vote_for(&self, scene_id: &str, region_id: u32, truth: RoomLabel) -> LabelVote {
        let key = seed::derive_keyed(self.seed, &[self.source.as_str(), scene_id], u64::from(region_id));
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        if rng.gen_bool(self.p) {
            return LabelVote::new(self.source, truth, self.p);
        }
        let mut wrong: Vec<RoomLabel> = RoomLabel::KNOWN.iter().copied().filter(|l| *l != truth).collect();
        let key = seed::derive_keyed(self.seed, &["wrong-labels", scene_id], u64::from(region_id));
        wrong.shuffle(&mut ChaCha8Rng::seed_from_u64(key));
        LabelVote::new(self.source, wrong[self.source.slot()], self.p)
    }
}

impl PanoramaClassifier for MockClassifier {
    fn source(&self) -> LabelSource {
        self.source
    }

    fn classify(&self, request: &ClassifierRequest) -> Result<ClassifierResponse, ClassifierError> {
        let truth = self
            .truth
            .get(&(request.scene_id.clone(), request.region_id))
            .copied()
            .ok_or_else(|| ClassifierError::Unavailable(format!("no panorama for region {}", request.region_id)))?;
        let v = self.vote_for(&request.scene_id, request.region_id, truth);
        Ok(ClassifierResponse {
            label: v.label,
            confidence: v.confidence,
        })
    }
}

pub fn region_request(scene: &SceneGraph, region: &Region) -> ClassifierRequest {
    let mut descriptor: Vec<String> = scene
        .objects_in_region(region.region_id)
        .map(|o| o.category.clone())
        .collect();
    descriptor.sort();
    ClassifierRequest {
        scene_id: scene.scene_id().to_string(),
        region_id: region.region_id,
        descriptor,
    }
}

pub fn classify_region(
    client: &dyn PanoramaClassifier,
    scene: &SceneGraph,
    region: &Region,
) -> Result<LabelVote, ClassifierError> {
    let resp = client.classify(&region_request(scene, region))?;
    Ok(LabelVote::new(client.source(), resp.label, resp.confidence))
}

/// Outcome of labeling every region of one scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionLabeling {
    pub scene_id: String,
    pub region_id: u32,
    pub votes: Vec<LabelVote>,
    /// Client failures, by source.
    pub errors: Vec<(LabelSource, String)>,
    pub outcome: VoteOutcome,
}

/// Runs rule + both classifiers on every region, writes agreed labels into the
/// scene and sets disputed regions to `Unknown`. Regions are processed in
/// region_id order.
pub fn label_scene(
    scene: &mut SceneGraph,
    signatures: &SignatureTable,
    classifier_a: &dyn PanoramaClassifier,
    classifier_b: &dyn PanoramaClassifier,
) -> Vec<RegionLabeling> {
    let mut regions: Vec<Region> = scene.regions().to_vec();
    regions.sort_by_key(|r| r.region_id);
    let mut out = Vec::with_capacity(regions.len());
    for region in &regions {
        let (rl, rc) = rule_classify(region, scene.objects(), signatures);
        let mut votes = vec![LabelVote::new(LabelSource::Rule, rl, rc)];
        let mut errors = Vec::new();
        for client in [classifier_a, classifier_b] {
            match classify_region(client, scene, region) {
                Ok(v) => votes.push(v),
                Err(e) => errors.push((client.source(), e.to_string())),
            }
        }
        let outcome = if errors.is_empty() {
            let arr = [votes[0], votes[1], votes[2]];
            rtsa_vote(scene.scene_id(), region.region_id, &arr)
                .unwrap_or_else(|_| disputed(scene.scene_id(), region.region_id, &votes))
        } else {
            disputed(scene.scene_id(), region.region_id, &votes)
        };
        match &outcome {
            VoteOutcome::Label { label, provenance } => {
                scene.set_region_label(region.region_id, *label, *provenance);
            }
            VoteOutcome::Adjudicate(_) => {
                scene.set_region_label(region.region_id, RoomLabel::Unknown, LabelProvenance::Vote);
            }
        }
        out.push(RegionLabeling {
            scene_id: scene.scene_id().to_string(),
            region_id: region.region_id,
            votes,
            errors,
            outcome,
        });
    }
    out
}

fn disputed(scene_id: &str, region_id: u32, votes: &[LabelVote]) -> VoteOutcome {
    VoteOutcome::Adjudicate(AdjudicationItem {
        scene_id: scene_id.to_string(),
        region_id,
        votes: votes.to_vec(),
        resolved_label: None,
    })
}

/// Share of regions with a known label, and share of those matching the
/// generator ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelQuality {
    pub total_regions: usize,
    pub labelled: usize,
    pub correct: usize,
    pub coverage: f64,
    pub correctness: f64,
}

pub fn label_quality<'a>(scenes: impl IntoIterator<Item = &'a SceneGraph>) -> LabelQuality {
    let (mut total, mut labelled, mut correct) = (0, 0, 0);
    for s in scenes {
        for r in s.regions() {
            total += 1;
            if r.room_label.is_known() {
                labelled += 1;
                if r.room_label == r.ground_truth_label {
                    correct += 1;
                }
            }
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    LabelQuality {
        total_regions: total,
        labelled,
        correct,
        coverage: ratio(labelled, total),
        correctness: ratio(correct, labelled),
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct AdjudicationRow {
    scene_id: String,
    region_id: u32,
    vote_rule: String,
    vote_a: String,
    vote_b: String,
    resolved_label: String,
}

/// Writes the unresolved items as CSV. Resolved items are skipped.
pub fn export_adjudication(items: &[AdjudicationItem], path: &Path) -> Result<usize, RtsaError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut n = 0;
    let mut pending: Vec<&AdjudicationItem> = items.iter().filter(|i| i.resolved_label.is_none()).collect();
    pending.sort_by(|a, b| (&a.scene_id, a.region_id).cmp(&(&b.scene_id, b.region_id)));
    if pending.is_empty() {
        // header only, so the file is self-describing
        w.write_record(["scene_id", "region_id", "vote_rule", "vote_a", "vote_b", "resolved_label"])?;
    }
    for item in pending {
        w.serialize(AdjudicationRow {
            scene_id: item.scene_id.clone(),
            region_id: item.region_id,
            vote_rule: item.vote_of(LabelSource::Rule).to_string(),
            vote_a: item.vote_of(LabelSource::ClassifierA).to_string(),
            vote_b: item.vote_of(LabelSource::ClassifierB).to_string(),
            resolved_label: String::new(),
        })?;
        n += 1;
    }
    w.flush()?;
    Ok(n)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedLabel {
    pub scene_id: String,
    pub region_id: u32,
    pub label: RoomLabel,
}

/// Reads a completed adjudication file and checks it against the pending
/// items it was exported from.
pub fn import_adjudication(path: &Path, pending: &[AdjudicationItem]) -> Result<Vec<ResolvedLabel>, RtsaError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut rows = BTreeMap::new();
    let mut unresolved = Vec::new();
    for row in rdr.deserialize::<AdjudicationRow>() {
        let row = row?;
        let key = (row.scene_id.clone(), row.region_id);
        if row.resolved_label.trim().is_empty() {
            unresolved.push(format!("{}/{}", row.scene_id, row.region_id));
            continue;
        }
        let label: RoomLabel = row.resolved_label.parse().map_err(RtsaError::BadLabel)?;
        if !label.is_known() {
            return Err(RtsaError::UnknownResolution {
                scene_id: row.scene_id,
                region_id: row.region_id,
            });
        }
        rows.insert(key, label);
    }
    if !unresolved.is_empty() {
        return Err(RtsaError::Unresolved(unresolved));
    }
    let expected: BTreeSet<(String, u32)> = pending
        .iter()
        .filter(|i| i.resolved_label.is_none())
        .map(|i| (i.scene_id.clone(), i.region_id))
        .collect();
    for (scene_id, region_id) in &expected {
        if !rows.contains_key(&(scene_id.clone(), *region_id)) {
            return Err(RtsaError::MissingRegion {
                scene_id: scene_id.clone(),
                region_id: *region_id,
            });
        }
    }
    let mut out = Vec::with_capacity(rows.len());
    for ((scene_id, region_id), label) in rows {
        if !expected.contains(&(scene_id.clone(), region_id)) {
            return Err(RtsaError::UnexpectedRow { scene_id, region_id });
        }
        out.push(ResolvedLabel {
            scene_id,
            region_id,
            label,
        });
    }
    Ok(out)
}

/// Applies resolved labels to the matching scenes. Returns how many regions
/// changed.
pub fn apply_resolutions(scenes: &mut [SceneGraph], resolved: &[ResolvedLabel]) -> usize {
    let mut n = 0;
    for r in resolved {
        if let Some(scene) = scenes.iter_mut().find(|s| s.scene_id() == r.scene_id) {
            if scene.set_region_label(r.region_id, r.label, LabelProvenance::Adjudicated) {
                n += 1;
            }
        }
    }
    n
}

/// Pending items of a set of labeled scenes: every region still Unknown.
pub fn pending_items(scenes: &[SceneGraph], labelings: &[RegionLabeling]) -> Vec<AdjudicationItem> {
    let mut out = Vec::new();
    for s in scenes {
        for r in s.regions().iter().filter(|r| !r.room_label.is_known()) {
            let votes = labelings
                .iter()
                .find(|l| l.scene_id == s.scene_id() && l.region_id == r.region_id)
                .map(|l| l.votes.clone())
                .unwrap_or_default();
            out.push(AdjudicationItem {
                scene_id: s.scene_id().to_string(),
                region_id: r.region_id,
                votes,
                resolved_label: None,
            });
        }
    }
    out
}

/// Closed form of three-way majority accuracy under independent sources
/// whose errors never agree.
pub fn analytic_majority_accuracy(p1: f64, p2: f64, p3: f64) -> f64 {
    p1 * p2 + p1 * p3 + p2 * p3 - 2.0 * p1 * p2 * p3
}
