//! Human-ranking evaluation of suggestions.
//!
//! Each evaluation item shows three follow-up candidates (the user's actual
//! response, the Baseline suggestion and the +Emotion suggestion) and five
//! workers rank them 1–3 on clarity, comfort and responsiveness. A
//! suggestion is *good* on an item when its average rank is strictly lower
//! than the actual response's.
//!
//! Rank totals and rates are kept as integer counts so that per-emotion
//! rates recombine into the overall rate exactly.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::corpus::{LabelSource, TurnStore};
use crate::emotion::Emotion;
use crate::error::EvaluationError;
use crate::suggestion::Suggester;
use crate::tokenize::{is_word, tokenize};

pub const WORKERS_PER_ITEM: usize = 5;
pub const CONTEXT_WINDOW: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aspect {
    Clarity,
    Comfort,
    Responsiveness,
}

impl Aspect {
    pub const ALL: [Aspect; 3] = [Aspect::Clarity, Aspect::Comfort, Aspect::Responsiveness];

    pub fn name(self) -> &'static str {
        match self {
            Aspect::Clarity => "clarity",
            Aspect::Comfort => "comfort",
            Aspect::Responsiveness => "responsiveness",
        }
    }

    fn title(self) -> &'static str {
        match self {
            Aspect::Clarity => "Clarity",
            Aspect::Comfort => "Comfort",
            Aspect::Responsiveness => "Responsiveness",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl std::str::FromStr for Aspect {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lowered = s.trim().to_ascii_lowercase();
        Aspect::ALL
            .into_iter()
            .find(|a| a.name() == lowered)
            .ok_or_else(|| format!("unknown aspect {s:?}"))
    }
}

/// The three ranked candidates, in rank-file column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Candidate {
    Input,
    Baseline,
    WithEmotion,
}

impl Candidate {
    pub const ALL: [Candidate; 3] = [Candidate::Input, Candidate::Baseline, Candidate::WithEmotion];

    fn title(self) -> &'static str {
        match self {
            Candidate::Input => "Input",
            Candidate::Baseline => "Baseline",
            Candidate::WithEmotion => "+Emotion",
        }
    }
}

/// Suggestion settings that can be compared against the input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    Baseline,
    WithEmotion,
}

impl Setting {
    pub const ALL: [Setting; 2] = [Setting::Baseline, Setting::WithEmotion];

    fn candidate(self) -> Candidate {
        match self {
            Setting::Baseline => Candidate::Baseline,
            Setting::WithEmotion => Candidate::WithEmotion,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextLine {
    pub sender_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalItem {
    pub item_id: String,
    pub dialog_id: String,
    /// Up to [`CONTEXT_WINDOW`] preceding messages, oldest first.
    pub context: Vec<ContextLine>,
    /// The message the user was answering.
    pub received_text: String,
    pub input_response: String,
    pub gold_emotion: Emotion,
    pub baseline_suggestion: Option<String>,
    pub emotion_suggestion: Option<String>,
}

/// Picks evaluation messages: the previous message comes from another
/// sender, the label is not neutral, and the text has at least one word
/// token. Messages without any label are skipped.
pub fn select_eval_messages(store: &TurnStore) -> Vec<EvalItem> {
    let messages = store.messages();
    let mut items = Vec::new();
    for dialog in store.dialogs() {
        for (pos, &mi) in dialog.messages.iter().enumerate().skip(1) {
            let msg = &messages[mi];
            let prev = &messages[dialog.messages[pos - 1]];
            if prev.sender_id == msg.sender_id
                || msg.emotion == Emotion::Neutral
                || msg.label_source == LabelSource::Missing
                || !tokenize(&msg.text).iter().any(|t| is_word(t))
            {
                continue;
            }
            let context = dialog.messages[pos.saturating_sub(CONTEXT_WINDOW)..pos]
                .iter()
                .map(|&ci| ContextLine {
                    sender_id: messages[ci].sender_id.clone(),
                    text: messages[ci].text.clone(),
                })
                .collect();
            items.push(EvalItem {
                item_id: msg.id.clone(),
                dialog_id: dialog.id.clone(),
                context,
                received_text: prev.text.clone(),
                input_response: msg.text.clone(),
                gold_emotion: msg.emotion,
                baseline_suggestion: None,
                emotion_suggestion: None,
            });
        }
    }
    items
}

/// Fills both suggestions and drops items for which either is missing.
/// Returns the kept items and the number dropped.
pub fn attach_suggestions(items: Vec<EvalItem>, suggester: &Suggester) -> (Vec<EvalItem>, usize) {
    let before = items.len();
    let kept: Vec<EvalItem> = items
        .into_iter()
        .filter_map(|mut item| {
            let baseline = suggester.suggest_baseline(&item.received_text).ok()?;
            let emotional = suggester
                .suggest_with_emotion(&item.received_text, item.gold_emotion)
                .ok()?;
            item.baseline_suggestion = Some(baseline.text);
            item.emotion_suggestion = Some(emotional.text);
            Some(item)
        })
        .collect();
    let dropped = before - kept.len();
    (kept, dropped)
}

/// Tab-separated item sheet: `item_id, gold_emotion, received, input,
/// baseline, +emotion`. The first two columns are what rank evaluation
/// reads back.
pub fn write_items<W: Write>(mut w: W, items: &[EvalItem]) -> std::io::Result<()> {
    use crate::classifier::sanitize_field as clean;
    for item in items {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}",
            item.item_id,
            item.gold_emotion,
            clean(&item.received_text),
            clean(&item.input_response),
            clean(item.baseline_suggestion.as_deref().unwrap_or("")),
            clean(item.emotion_suggestion.as_deref().unwrap_or("")),
        )?;
    }
    Ok(())
}

/// Reads `item_id<TAB>gold_emotion[<TAB>...]`.
pub fn read_item_emotions<R: BufRead>(reader: R) -> Result<HashMap<String, Emotion>, EvaluationError> {
    let mut out = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let parse_err = |reason: String| EvaluationError::Parse { line: i + 1, reason };
        let id = fields.next().unwrap_or_default();
        let emotion = fields
            .next()
            .ok_or_else(|| parse_err("expected item_id<TAB>emotion".into()))?
            .parse::<Emotion>()
            .map_err(|e| parse_err(e.to_string()))?;
        out.insert(id.to_string(), emotion);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkerRank {
    pub item_id: String,
    pub worker_id: String,
    pub aspect: Aspect,
    /// Ranks of input, Baseline and +Emotion.
    pub ranks: [u8; 3],
}

fn check_permutation(ranks: [u8; 3]) -> Result<(), EvaluationError> {
    let mut sorted = ranks;
    sorted.sort_unstable();
    if sorted != [1, 2, 3] {
        return Err(EvaluationError::NotAPermutation(ranks));
    }
    Ok(())
}

/// Parses `item_id<TAB>worker_id<TAB>aspect<TAB>rank_input<TAB>rank_baseline<TAB>rank_emotion`.
pub fn read_worker_ranks<R: BufRead>(reader: R) -> Result<Vec<WorkerRank>, EvaluationError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |reason: String| EvaluationError::Parse { line: i + 1, reason };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 6 {
            return Err(parse_err(format!("expected 6 fields, got {}", fields.len())));
        }
        let aspect = fields[2].parse::<Aspect>().map_err(parse_err)?;
        let mut ranks = [0u8; 3];
        for (r, f) in ranks.iter_mut().zip(&fields[3..]) {
            *r = f.trim().parse().map_err(|_| parse_err(format!("bad rank {f:?}")))?;
        }
        check_permutation(ranks)?;
        out.push(WorkerRank {
            item_id: fields[0].to_string(),
            worker_id: fields[1].to_string(),
            aspect,
            ranks,
        });
    }
    Ok(out)
}

pub fn write_worker_ranks<W: Write>(mut w: W, ranks: &[WorkerRank]) -> std::io::Result<()> {
    for r in ranks {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.item_id,
            r.worker_id,
            r.aspect.name(),
            r.ranks[0],
            r.ranks[1],
            r.ranks[2]
        )?;
    }
    Ok(())
}

/// Integer rank totals of the three candidates over some number of worker
/// judgments.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankTotals {
    pub sums: [u32; 3],
    pub judgments: u32,
}

impl RankTotals {
    pub fn mean(&self, candidate: Candidate) -> f64 {
        f64::from(self.sums[candidate as usize]) / f64::from(self.judgments)
    }

    pub fn means(&self) -> [f64; 3] {
        Candidate::ALL.map(|c| self.mean(c))
    }

    fn add(&mut self, other: &RankTotals) {
        for (s, o) in self.sums.iter_mut().zip(other.sums) {
            *s += o;
        }
        self.judgments += other.judgments;
    }

    /// Strictly lower average rank than the input. Both averages share a
    /// denominator, so comparing totals is exact.
    pub fn suggestion_is_good(&self, setting: Setting) -> bool {
        self.sums[setting.candidate() as usize] < self.sums[Candidate::Input as usize]
    }
}

/// Average rank of each candidate over the given workers' rankings.
pub fn aggregate_ranks(worker_ranks: &[[u8; 3]]) -> Result<RankTotals, EvaluationError> {
    let mut totals = RankTotals::default();
    for &ranks in worker_ranks {
        check_permutation(ranks)?;
        for (s, r) in totals.sums.iter_mut().zip(ranks) {
            *s += u32::from(r);
        }
        totals.judgments += 1;
    }
    Ok(totals)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemRanks {
    pub item_id: String,
    pub gold_emotion: Emotion,
    /// Indexed by [`Aspect`].
    pub aspects: [RankTotals; 3],
}

impl ItemRanks {
    pub fn aspect(&self, aspect: Aspect) -> &RankTotals {
        &self.aspects[aspect.index()]
    }
}

/// Groups worker rankings by item, checking that every item has exactly
/// [`WORKERS_PER_ITEM`] distinct workers on every aspect. Items are
/// returned in order of first appearance.
pub fn collect_item_ranks(
    ranks: &[WorkerRank],
    gold: &HashMap<String, Emotion>,
) -> Result<Vec<ItemRanks>, EvaluationError> {
    let mut order: Vec<&str> = Vec::new();
    let mut grouped: HashMap<&str, [Vec<(&str, [u8; 3])>; 3]> = HashMap::new();
    for r in ranks {
        let slot = grouped.entry(&r.item_id).or_insert_with(|| {
            order.push(&r.item_id);
            Default::default()
        });
        let list = &mut slot[r.aspect.index()];
        if list.iter().any(|(w, _)| *w == r.worker_id) {
            return Err(EvaluationError::DuplicateWorker {
                item: r.item_id.clone(),
                worker: r.worker_id.clone(),
                aspect: r.aspect.name().into(),
            });
        }
        list.push((&r.worker_id, r.ranks));
    }
    let mut items = Vec::with_capacity(order.len());
    for id in order {
        let gold_emotion = *gold.get(id).ok_or_else(|| EvaluationError::UnknownItem(id.to_string()))?;
        let mut aspects = [RankTotals::default(); 3];
        for aspect in Aspect::ALL {
            let list = &grouped[id][aspect.index()];
            if list.len() != WORKERS_PER_ITEM {
                return Err(EvaluationError::WorkerCount {
                    item: id.to_string(),
                    aspect: aspect.name().into(),
                    expected: WORKERS_PER_ITEM,
                    got: list.len(),
                });
            }
            let rows: Vec<[u8; 3]> = list.iter().map(|(_, r)| *r).collect();
            aspects[aspect.index()] = aggregate_ranks(&rows)?;
        }
        items.push(ItemRanks {
            item_id: id.to_string(),
            gold_emotion,
            aspects,
        });
    }
    Ok(items)
}

/// A count of good items over a total.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rate {
    pub good: usize,
    pub total: usize,
}

impl Rate {
    pub fn percent(&self) -> f64 {
        100.0 * self.good as f64 / self.total as f64
    }

    fn add(&mut self, other: Rate) {
        self.good += other.good;
        self.total += other.total;
    }
}

pub fn good_suggestion_rate(items: &[ItemRanks], setting: Setting, aspect: Aspect) -> Result<Rate, EvaluationError> {
    if items.is_empty() {
        return Err(EvaluationError::Empty);
    }
    let good = items
        .iter()
        .filter(|i| i.aspect(aspect).suggestion_is_good(setting))
        .count();
    Ok(Rate {
        good,
        total: items.len(),
    })
}

/// Comfort-aspect rate within each gold emotion; emotions without items
/// are omitted.
pub fn per_emotion_rates(items: &[ItemRanks], setting: Setting) -> BTreeMap<Emotion, Rate> {
    let mut out: BTreeMap<Emotion, Rate> = BTreeMap::new();
    for item in items {
        let good = usize::from(item.aspect(Aspect::Comfort).suggestion_is_good(setting));
        out.entry(item.gold_emotion).or_default().add(Rate { good, total: 1 });
    }
    out
}

/// Recombines per-emotion counts; equals the overall comfort rate.
pub fn combine_rates<'a>(rates: impl IntoIterator<Item = &'a Rate>) -> Rate {
    let mut total = Rate::default();
    for r in rates {
        total.add(*r);
    }
    total
}

/// Tables of average ranks and Good Suggestion Rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub items: usize,
    /// `[aspect][candidate]` average rank.
    pub average_ranks: [[f64; 3]; 3],
    /// `[setting][aspect]` Good Suggestion Rate in percent.
    pub good_rates: [[f64; 3]; 2],
    /// Comfort Good Suggestion Rate per gold emotion, `[baseline, +emotion]`.
    pub comfort_by_emotion: BTreeMap<Emotion, [f64; 2]>,
}

pub fn build_report(items: &[ItemRanks]) -> Result<EvalReport, EvaluationError> {
    if items.is_empty() {
        return Err(EvaluationError::Empty);
    }
    let mut average_ranks = [[0.0; 3]; 3];
    for aspect in Aspect::ALL {
        let mut totals = RankTotals::default();
        for item in items {
            totals.add(item.aspect(aspect));
        }
        average_ranks[aspect.index()] = totals.means();
    }
    let mut good_rates = [[0.0; 3]; 2];
    for (s, setting) in Setting::ALL.into_iter().enumerate() {
        for aspect in Aspect::ALL {
            good_rates[s][aspect.index()] = good_suggestion_rate(items, setting, aspect)?.percent();
        }
    }
    let baseline = per_emotion_rates(items, Setting::Baseline);
    let emotional = per_emotion_rates(items, Setting::WithEmotion);
    let comfort_by_emotion = baseline
        .iter()
        .map(|(e, b)| (*e, [b.percent(), emotional[e].percent()]))
        .collect();
    Ok(EvalReport {
        items: items.len(),
        average_ranks,
        good_rates,
        comfort_by_emotion,
    })
}

impl EvalReport {
    /// Plain-text rendering: average ranks with three decimals, rates with
    /// two, per-emotion columns in alphabetical order.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let header = format!(
            "{:<10}|{:>9} |{:>9} |{:>15}",
            "Setting",
            Aspect::Clarity.title(),
            Aspect::Comfort.title(),
            Aspect::Responsiveness.title()
        );
        let rule = "-".repeat(header.len());
        let _ = writeln!(out, "{header}");
        let _ = writeln!(out, "{rule}");
        let _ = writeln!(out, "Rank of Messages and Suggested Texts");
        for candidate in Candidate::ALL {
            let r = |a: Aspect| self.average_ranks[a.index()][candidate as usize];
            let _ = writeln!(
                out,
                "{:<10}|{:>9.3} |{:>9.3} |{:>15.3}",
                candidate.title(),
                r(Aspect::Clarity),
                r(Aspect::Comfort),
                r(Aspect::Responsiveness)
            );
        }
        let _ = writeln!(out, "{rule}");
        let _ = writeln!(out, "Good Suggestion Rate (%)");
        for (s, setting) in Setting::ALL.into_iter().enumerate() {
            let g = &self.good_rates[s];
            let _ = writeln!(
                out,
                "{:<10}|{:>9.2} |{:>9.2} |{:>15.2}",
                setting.candidate().title(),
                g[0],
                g[1],
                g[2]
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "Good Suggestion Rate (%) of comfort by emotion");
        let mut emotions: Vec<Emotion> = self.comfort_by_emotion.keys().copied().collect();
        emotions.sort_by_key(|e| e.title());
        let mut line = format!("{:<10}", "Setting");
        for e in &emotions {
            let _ = write!(line, "|{:>13} ", e.title());
        }
        let _ = writeln!(out, "{}", line.trim_end());
        for (s, setting) in Setting::ALL.into_iter().enumerate() {
            let mut line = format!("{:<10}", setting.candidate().title());
            for e in &emotions {
                let _ = write!(line, "|{:>13.2} ", self.comfort_by_emotion[e][s]);
            }
            let _ = writeln!(out, "{}", line.trim_end());
        }
        out
    }
}

/// Simulated crowd workers for end-to-end runs. Every worker draws a
/// latent quality per candidate from `Normal(quality[c], noise_sd)` and
/// ranks by descending quality, ties to the earlier candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticWorkers {
    /// Mean quality of input, Baseline and +Emotion.
    pub quality: [f64; 3],
    pub noise_sd: f64,
    pub seed: u64,
}

impl SyntheticWorkers {
    pub fn rank_items(&self, item_ids: &[String]) -> Vec<WorkerRank> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let noise = Normal::new(0.0, self.noise_sd.max(0.0)).expect("finite standard deviation");
        let mut out = Vec::with_capacity(item_ids.len() * 3 * WORKERS_PER_ITEM);
        for id in item_ids {
            for aspect in Aspect::ALL {
                for w in 0..WORKERS_PER_ITEM {
                    let q: [f64; 3] = self.quality.map(|m| m + noise.sample(&mut rng));
                    let mut idx = [0usize, 1, 2];
                    idx.sort_by(|&a, &b| q[b].total_cmp(&q[a]).then(a.cmp(&b)));
                    let mut ranks = [0u8; 3];
                    for (pos, &c) in idx.iter().enumerate() {
                        ranks[c] = pos as u8 + 1;
                    }
                    out.push(WorkerRank {
                        item_id: id.clone(),
                        worker_id: format!("w{w}"),
                        aspect,
                        ranks,
                    });
                }
            }
        }
        out
    }
}
