//! Online spatial topic model.
//!
//! Collapsed Gibbs sampling over per-token topic labels, where the label
//! context is not a document but the spatial neighborhood of the token's
//! cell: the conditional for a token couples the global topic-word counts
//! with the label histogram summed over every cell within Chebyshev radius
//! `neighborhood_radius` of its own. Radius 0 recovers ordinary per-document
//! (here: per-cell) collapsed LDA.
//!
//! Observations stream in: each `observe` call appends a cell's tokens and
//! seeds their labels sequentially from the conditional. A fixed per-step
//! budget of `refine_step` calls then re-samples old observations, favoring
//! recent ones: the newest observation with probability `refine_last_prob`,
//! otherwise one drawn with probability proportional to its timestamp.

use rand::Rng;

use crate::grid::{chebyshev_ball, CellCoord};
use crate::{Error, Result};

/// Model hyperparameters. `alpha` smooths topic mixtures, `beta` smooths
/// topic-word distributions, `neighborhood_radius` (cells) sets the spatial
/// coupling range, and `refine_last_prob` is the chance that a refinement
/// step targets the newest observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub topics: usize,
    pub vocab_size: usize,
    pub alpha: f64,
    pub beta: f64,
    pub neighborhood_radius: usize,
    pub refine_last_prob: f64,
}

impl Hyperparams {
    pub fn new(topics: usize, vocab_size: usize, alpha: f64, beta: f64, radius: usize) -> Self {
        Hyperparams {
            topics,
            vocab_size,
            alpha,
            beta,
            neighborhood_radius: radius,
            refine_last_prob: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.topics == 0 {
            return Err(Error::InvalidConfig("topics must be positive".into()));
        }
        if self.vocab_size == 0 {
            return Err(Error::InvalidConfig("vocab_size must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "alpha must be a positive finite number, got {}",
                self.alpha
            )));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "beta must be a positive finite number, got {}",
                self.beta
            )));
        }
        if !(0.0..=1.0).contains(&self.refine_last_prob) {
            return Err(Error::InvalidConfig(format!(
                "refine_last_prob must lie in [0, 1], got {}",
                self.refine_last_prob
            )));
        }
        Ok(())
    }
}

/// Handle to one stored token, for the leave-one-out conditional.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TokenRef {
    pub cell: CellCoord,
    pub index: usize,
}

/// A normalized distribution over topics.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicDistribution(Vec<f64>);

impl TopicDistribution {
    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn sample(&self, rng: &mut impl Rng) -> usize {
        sample_normalized(&self.0, rng)
    }
}

/// Draws an index from a normalized probability vector.
pub(crate) fn sample_normalized(probs: &[f64], rng: &mut impl Rng) -> usize {
    sample_weighted(probs, 1.0, rng)
}

/// Draws an index proportionally to non-negative weights summing to `total`.
pub(crate) fn sample_weighted(weights: &[f64], total: f64, rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Streaming spatial topic model over a fixed-size board.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    hyper: Hyperparams,
    width: usize,
    height: usize,
    /// Per-cell token words and their current labels, parallel vectors.
    site_words: Vec<Vec<usize>>,
    site_labels: Vec<Vec<usize>>,
    /// Per-cell label histogram, `cell * topics + k`.
    cell_hist: Vec<u32>,
    /// Global topic-word counts, `k * vocab_size + v`.
    topic_word: Vec<u32>,
    /// Tokens currently labeled `k`, per topic.
    topic_totals: Vec<u32>,
    total_tokens: u64,
    /// Observation log; timestamp `t` is index `t - 1`.
    path: Vec<CellCoord>,
}

impl TopicModel {
    pub fn new(hyper: Hyperparams, width: usize, height: usize) -> Result<Self> {
        hyper.validate()?;
        if width == 0 || height == 0 {
            return Err(Error::InvalidConfig(format!(
                "board dimensions must be positive, got {width}x{height}"
            )));
        }
        let cells = width * height;
        Ok(TopicModel {
            site_words: vec![Vec::new(); cells],
            site_labels: vec![Vec::new(); cells],
            cell_hist: vec![0; cells * hyper.topics],
            topic_word: vec![0; hyper.topics * hyper.vocab_size],
            topic_totals: vec![0; hyper.topics],
            total_tokens: 0,
            path: Vec::new(),
            hyper,
            width,
            height,
        })
    }

    pub fn hyper(&self) -> &Hyperparams {
        &self.hyper
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Number of observations so far (the current timestamp `T`).
    pub fn observations(&self) -> usize {
        self.path.len()
    }

    pub fn path_log(&self) -> &[CellCoord] {
        &self.path
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn topic_totals(&self) -> &[u32] {
        &self.topic_totals
    }

    pub fn cell_words(&self, c: CellCoord) -> &[usize] {
        &self.site_words[self.cell_index(c)]
    }

    pub fn cell_labels(&self, c: CellCoord) -> &[usize] {
        &self.site_labels[self.cell_index(c)]
    }

    /// Most frequent label among `c`'s stored tokens, smallest label on ties.
    /// `None` when the cell holds no tokens.
    pub fn modal_label(&self, c: CellCoord) -> Option<usize> {
        let base = self.cell_index(c) * self.hyper.topics;
        let hist = &self.cell_hist[base..base + self.hyper.topics];
        let best = (0..self.hyper.topics).max_by_key(|&k| hist[k])?;
        if hist[best] == 0 {
            return None;
        }
        Some((0..self.hyper.topics).find(|&k| hist[k] == hist[best]).unwrap())
    }

    fn cell_index(&self, c: CellCoord) -> usize {
        assert!(
            c.x < self.width && c.y < self.height,
            "coordinate {c} out of bounds for {}x{}",
            self.width,
            self.height
        );
        c.y * self.width + c.x
    }

    /// Conditional label distribution for a token with word `v` at cell `c`:
    /// the product of the topic-word term and the neighborhood mixing term,
    /// normalized over topics. `exclude` removes one stored token's counts
    /// from both terms (its spatial count only when its cell lies within the
    /// neighborhood of `c`), which gives the leave-one-out conditional used
    /// when re-sampling that token.
    pub fn conditional(
        &self,
        v: usize,
        c: CellCoord,
        exclude: Option<TokenRef>,
    ) -> TopicDistribution {
        let mut out = Vec::new();
        self.conditional_into(v, c, exclude, &mut out);
        TopicDistribution(out)
    }

    fn conditional_into(
        &self,
        v: usize,
        c: CellCoord,
        exclude: Option<TokenRef>,
        out: &mut Vec<f64>,
    ) {
        let k_count = self.hyper.topics;
        let vocab = self.hyper.vocab_size;
        assert!(v < vocab, "word id {v} out of range for vocab_size {vocab}");

        out.clear();
        out.resize(k_count, 0.0);
        // accumulate the neighborhood label histogram into `out`
        for n in chebyshev_ball(self.width, self.height, c, self.hyper.neighborhood_radius) {
            let base = (n.y * self.width + n.x) * k_count;
            for (k, slot) in out.iter_mut().enumerate() {
                *slot += self.cell_hist[base + k] as f64;
            }
        }
        let mut nbhd_total: f64 = out.iter().sum();

        // leave-one-out adjustment, applied without touching stored counts
        let mut ex_word = usize::MAX;
        let mut ex_label = usize::MAX;
        if let Some(t) = exclude {
            let site = self.cell_index(t.cell);
            assert!(
                t.index < self.site_words[site].len(),
                "token handle {}#{} does not name a stored token",
                t.cell,
                t.index
            );
            ex_word = self.site_words[site][t.index];
            ex_label = self.site_labels[site][t.index];
            if t.cell.chebyshev(c) <= self.hyper.neighborhood_radius {
                out[ex_label] -= 1.0;
                nbhd_total -= 1.0;
            }
        }

        let alpha = self.hyper.alpha;
        let beta = self.hyper.beta;
        let word_denom_base = vocab as f64 * beta;
        let mix_denom = nbhd_total + k_count as f64 * alpha;
        let mut total = 0.0;
        for (k, slot) in out.iter_mut().enumerate() {
            let mut nwv = self.topic_word[k * vocab + v] as f64;
            let mut nk = self.topic_totals[k] as f64;
            if k == ex_label {
                nk -= 1.0;
                if v == ex_word {
                    nwv -= 1.0;
                }
            }
            let word_term = (nwv + beta) / (nk + word_denom_base);
            let mix_term = (*slot + alpha) / mix_denom;
            *slot = word_term * mix_term;
            total += *slot;
        }
        for slot in out.iter_mut() {
            *slot /= total;
        }
    }

    /// Records a visit to `c` and inserts its tokens, seeding each label from
    /// the conditional given everything inserted so far. Returns the new
    /// timestamp. An empty token list still logs the visit.
    pub fn observe(&mut self, c: CellCoord, tokens: &[usize], rng: &mut impl Rng) -> usize {
        self.cell_index(c);
        self.path.push(c);
        let mut buf = Vec::with_capacity(self.hyper.topics);
        for &w in tokens {
            self.conditional_into(w, c, None, &mut buf);
            let z = sample_normalized(&buf, rng);
            self.insert_token(c, w, z);
        }
        self.path.len()
    }

    /// Records a visit and inserts tokens with caller-chosen labels. Replay
    /// and warm-start hook: arbitrary count states can be rebuilt exactly.
    pub fn observe_with_labels(&mut self, c: CellCoord, tokens: &[(usize, usize)]) -> usize {
        self.cell_index(c);
        self.path.push(c);
        for &(w, z) in tokens {
            assert!(w < self.hyper.vocab_size, "word id {w} out of range");
            assert!(z < self.hyper.topics, "label {z} out of range");
            self.insert_token(c, w, z);
        }
        self.path.len()
    }

    fn insert_token(&mut self, c: CellCoord, w: usize, z: usize) {
        let site = self.cell_index(c);
        self.site_words[site].push(w);
        self.site_labels[site].push(z);
        self.cell_hist[site * self.hyper.topics + z] += 1;
        self.topic_word[z * self.hyper.vocab_size + w] += 1;
        self.topic_totals[z] += 1;
        self.total_tokens += 1;
    }

    /// Re-samples every token stored at the cell observed at timestamp `t`
    /// (1-based), sequentially, each from its leave-one-out conditional.
    /// Panics if `t` is not a recorded timestamp.
    pub fn refine_cell(&mut self, t: usize, rng: &mut impl Rng) {
        assert!(
            t >= 1 && t <= self.path.len(),
            "timestamp {t} out of range 1..={}",
            self.path.len()
        );
        let c = self.path[t - 1];
        let site = self.cell_index(c);
        let mut buf = Vec::with_capacity(self.hyper.topics);
        for j in 0..self.site_words[site].len() {
            let w = self.site_words[site][j];
            let old = self.site_labels[site][j];
            self.conditional_into(w, c, Some(TokenRef { cell: c, index: j }), &mut buf);
            let new = sample_normalized(&buf, rng);
            if new != old {
                self.site_labels[site][j] = new;
                let k_count = self.hyper.topics;
                self.cell_hist[site * k_count + old] -= 1;
                self.cell_hist[site * k_count + new] += 1;
                self.topic_word[old * self.hyper.vocab_size + w] -= 1;
                self.topic_word[new * self.hyper.vocab_size + w] += 1;
                self.topic_totals[old] -= 1;
                self.topic_totals[new] += 1;
            }
        }
    }

    /// Picks which observation a refinement step would target: the newest
    /// with probability `refine_last_prob`, otherwise one with probability
    /// proportional to its timestamp. Panics when nothing has been observed.
    pub fn sample_refine_target(&self, rng: &mut impl Rng) -> usize {
        let t_max = self.path.len();
        assert!(t_max >= 1, "no observations to refine");
        if rng.random::<f64>() < self.hyper.refine_last_prob {
            t_max
        } else {
            sample_age_proportional(t_max, rng)
        }
    }

    /// One refinement step: pick a target observation, re-sample its cell.
    /// Returns the refined timestamp.
    pub fn refine_step(&mut self, rng: &mut impl Rng) -> usize {
        let t = self.sample_refine_target(rng);
        self.refine_cell(t, rng);
        t
    }

    /// Topic-word distributions under the current counts, one row per topic.
    pub fn phi(&self) -> Vec<Vec<f64>> {
        phi_matrix(
            &self.topic_word,
            &self.topic_totals,
            self.hyper.vocab_size,
            self.hyper.beta,
        )
    }

    /// Smoothed distribution of topics over everything observed so far.
    pub fn path_topic_dist(&self) -> TopicDistribution {
        let denom = self.total_tokens as f64 + self.hyper.topics as f64 * self.hyper.alpha;
        TopicDistribution(
            self.topic_totals
                .iter()
                .map(|&m| (m as f64 + self.hyper.alpha) / denom)
                .collect(),
        )
    }

    /// Perplexity of a token bag under the current topic-word distributions
    /// mixed by the path topic distribution. 1 for an empty bag; a fresh
    /// model scores `vocab_size` for any bag.
    pub fn word_perplexity(&self, tokens: &[usize]) -> f64 {
        if tokens.is_empty() {
            return 1.0;
        }
        let mix = self.path_topic_dist();
        let vocab = self.hyper.vocab_size;
        let beta = self.hyper.beta;
        let mut log_sum = 0.0;
        for &w in tokens {
            assert!(w < vocab, "word id {w} out of range");
            let mut p = 0.0;
            for (k, &pk) in mix.probs().iter().enumerate() {
                let word_term = (self.topic_word[k * vocab + w] as f64 + beta)
                    / (self.topic_totals[k] as f64 + vocab as f64 * beta);
                p += word_term * pk;
            }
            log_sum += p.ln();
        }
        (-log_sum / tokens.len() as f64).exp()
    }

    /// Perplexity of the topic labels a bag would get at cell `c`: each token
    /// draws `samples` labels from the conditional, scored against the path
    /// topic distribution, without storing anything. The model is unchanged;
    /// draws never see each other. 1 for an empty bag; a fresh model scores
    /// `topics` for any bag.
    pub fn topic_perplexity(
        &self,
        c: CellCoord,
        tokens: &[usize],
        samples: usize,
        rng: &mut impl Rng,
    ) -> f64 {
        assert!(samples >= 1, "samples must be positive");
        if tokens.is_empty() {
            return 1.0;
        }
        let mix = self.path_topic_dist();
        let mut buf = Vec::with_capacity(self.hyper.topics);
        let mut log_sum = 0.0;
        for &w in tokens {
            self.conditional_into(w, c, None, &mut buf);
            let mut acc = 0.0;
            for _ in 0..samples {
                let z = sample_normalized(&buf, rng);
                acc += mix.probs()[z].ln();
            }
            log_sum += acc / samples as f64;
        }
        (-log_sum / tokens.len() as f64).exp()
    }

    /// Frozen copy of the global topic-word counts plus the hyperparameters
    /// needed to reuse them.
    pub fn snapshot(&self) -> ModelSnapshot {
        ModelSnapshot {
            topics: self.hyper.topics,
            vocab_size: self.hyper.vocab_size,
            alpha: self.hyper.alpha,
            beta: self.hyper.beta,
            neighborhood_radius: self.hyper.neighborhood_radius,
            topic_word: self.topic_word.clone(),
            topic_totals: self.topic_totals.clone(),
        }
    }
}

/// Global topic-word counts detached from any board, as written to and read
/// from snapshot files. Carries everything needed to label a new world.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSnapshot {
    pub topics: usize,
    pub vocab_size: usize,
    pub alpha: f64,
    pub beta: f64,
    pub neighborhood_radius: usize,
    topic_word: Vec<u32>,
    topic_totals: Vec<u32>,
}

impl ModelSnapshot {
    /// Rebuilds a snapshot from raw counts, `k * vocab_size + v` layout.
    pub fn from_counts(
        topics: usize,
        vocab_size: usize,
        alpha: f64,
        beta: f64,
        neighborhood_radius: usize,
        topic_word: Vec<u32>,
    ) -> Result<Self> {
        Hyperparams::new(topics, vocab_size, alpha, beta, neighborhood_radius).validate()?;
        if topic_word.len() != topics * vocab_size {
            return Err(Error::Mismatch(format!(
                "count matrix holds {} entries, expected {}x{}",
                topic_word.len(),
                topics,
                vocab_size
            )));
        }
        let topic_totals = (0..topics)
            .map(|k| topic_word[k * vocab_size..(k + 1) * vocab_size].iter().sum())
            .collect();
        Ok(ModelSnapshot {
            topics,
            vocab_size,
            alpha,
            beta,
            neighborhood_radius,
            topic_word,
            topic_totals,
        })
    }

    pub fn counts(&self) -> &[u32] {
        &self.topic_word
    }

    pub fn count(&self, k: usize, v: usize) -> u32 {
        self.topic_word[k * self.vocab_size + v]
    }

    pub fn topic_total(&self, k: usize) -> u32 {
        self.topic_totals[k]
    }

    /// Topic-word distributions under the frozen counts; identical to the
    /// source model's.
    pub fn phi(&self) -> Vec<Vec<f64>> {
        phi_matrix(&self.topic_word, &self.topic_totals, self.vocab_size, self.beta)
    }

    /// Probability of word `v` under topic `k`, without materializing rows.
    pub fn word_term(&self, k: usize, v: usize) -> f64 {
        (self.topic_word[k * self.vocab_size + v] as f64 + self.beta)
            / (self.topic_totals[k] as f64 + self.vocab_size as f64 * self.beta)
    }
}

fn phi_matrix(topic_word: &[u32], topic_totals: &[u32], vocab: usize, beta: f64) -> Vec<Vec<f64>> {
    topic_totals
        .iter()
        .enumerate()
        .map(|(k, &nk)| {
            let denom = nk as f64 + vocab as f64 * beta;
            topic_word[k * vocab..(k + 1) * vocab]
                .iter()
                .map(|&n| (n as f64 + beta) / denom)
                .collect()
        })
        .collect()
}

/// Draws `t` from `1..=t_max` with probability proportional to `t`. Exact:
/// inverts the triangular CDF, then fixes float rounding against the integer
/// cumulative weights.
fn sample_age_proportional(t_max: usize, rng: &mut impl Rng) -> usize {
    let cum = |j: u64| (j * (j + 1) / 2) as f64;
    let total = cum(t_max as u64);
    let target = rng.random::<f64>() * total;
    let mut j = ((-1.0 + (1.0 + 8.0 * target).sqrt()) / 2.0).floor() as u64 + 1;
    j = j.clamp(1, t_max as u64);
    while j > 1 && target < cum(j - 1) {
        j -= 1;
    }
    while j < t_max as u64 && target >= cum(j) {
        j += 1;
    }
    j as usize
}
