//! Path planning over a partially observed world.
//!
//! The agent repeatedly observes its current cell into the model, spends a
//! fixed refinement budget, then scores the 4-connected neighbors and moves
//! to one drawn proportionally to the scores. All informed policies divide
//! by a coverage potential that piles up around visited cells, so ties break
//! toward fresh ground; the perplexity policies additionally weigh how
//! surprising a candidate's tokens look to the current model.

use std::str::FromStr;

use rand::Rng;

use crate::grid::{CellCoord, GridWorld};
use crate::model::{Hyperparams, TopicModel};
use crate::{seeds, Error, Result};

/// Move-scoring policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    /// Every neighbor weighs 1.
    RandomWalk,
    /// Inverse coverage potential: drift away from visited ground.
    StochasticCoverage,
    /// Word surprise over potential.
    WordPerplexity,
    /// Topic-label surprise over potential.
    TopicPerplexity,
}

impl Policy {
    pub const ALL: [Policy; 4] = [
        Policy::RandomWalk,
        Policy::StochasticCoverage,
        Policy::WordPerplexity,
        Policy::TopicPerplexity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Policy::RandomWalk => "random-walk",
            Policy::StochasticCoverage => "stochastic-coverage",
            Policy::WordPerplexity => "word-perplexity",
            Policy::TopicPerplexity => "topic-perplexity",
        }
    }
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Policy> {
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown policy {s:?}, expected one of: random-walk, \
                     stochastic-coverage, word-perplexity, topic-perplexity"
                ))
            })
    }
}

/// Timestamped visit sequence with per-cell visit counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    width: usize,
    height: usize,
    steps: Vec<CellCoord>,
    counts: Vec<u32>,
    visited: Vec<CellCoord>,
}

impl Path {
    pub fn new(width: usize, height: usize) -> Path {
        Path {
            width,
            height,
            steps: Vec::new(),
            counts: vec![0; width * height],
            visited: Vec::new(),
        }
    }

    pub fn record(&mut self, c: CellCoord) {
        assert!(c.x < self.width && c.y < self.height, "coordinate {c} out of bounds");
        let idx = c.y * self.width + c.x;
        if self.counts[idx] == 0 {
            self.visited.push(c);
        }
        self.counts[idx] += 1;
        self.steps.push(c);
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Visits in order; timestamp `t` is entry `t - 1`.
    pub fn steps(&self) -> &[CellCoord] {
        &self.steps
    }

    pub fn visits(&self, c: CellCoord) -> u32 {
        assert!(c.x < self.width && c.y < self.height, "coordinate {c} out of bounds");
        self.counts[c.y * self.width + c.x]
    }

    /// Distinct visited cells with their visit counts, first-visit order.
    pub fn visited(&self) -> impl Iterator<Item = (CellCoord, u32)> + '_ {
        self.visited
            .iter()
            .map(|&c| (c, self.counts[c.y * self.width + c.x]))
    }

    /// Coverage potential at `g`: visit counts shed over squared distance,
    /// `sum n_j / (d^2(g, c_j) + 1)`. An empty path has potential 1, so the
    /// informed policies stay well-defined before the first visit.
    pub fn potential(&self, g: CellCoord) -> f64 {
        if self.visited.is_empty() {
            return 1.0;
        }
        self.visited()
            .map(|(c, n)| n as f64 / (g.distance_sq(c) + 1.0))
            .sum()
    }
}

/// Scores each in-bounds neighbor of `current` under `policy`. Empty only
/// when `current` has no neighbors (a 1x1 world).
pub fn step_weights(
    policy: Policy,
    world: &GridWorld,
    model: &TopicModel,
    path: &Path,
    current: CellCoord,
    topic_samples: usize,
    rng: &mut impl Rng,
) -> Vec<(CellCoord, f64)> {
    world
        .movement_neighbors(current)
        .into_iter()
        .map(|g| {
            let w = match policy {
                Policy::RandomWalk => 1.0,
                Policy::StochasticCoverage => 1.0 / path.potential(g),
                Policy::WordPerplexity => model.word_perplexity(world.tokens(g)) / path.potential(g),
                Policy::TopicPerplexity => {
                    model.topic_perplexity(g, world.tokens(g), topic_samples, rng)
                        / path.potential(g)
                }
            };
            (g, w)
        })
        .collect()
}

/// Draws a candidate proportionally to weight; uniform if all weights are
/// zero or the total is not finite. Panics on an empty slate.
pub fn choose_step(weights: &[(CellCoord, f64)], rng: &mut impl Rng) -> CellCoord {
    assert!(!weights.is_empty(), "no candidates to choose from");
    let total: f64 = weights.iter().map(|&(_, w)| w).sum();
    if total <= 0.0 || !total.is_finite() {
        return weights[rng.random_range(0..weights.len())].0;
    }
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for &(c, w) in weights {
        acc += w;
        if u < acc {
            return c;
        }
    }
    weights[weights.len() - 1].0
}

/// Exploration run parameters. `steps` counts observations, so the path
/// visits `steps` cells; `refine_budget` refinement steps run after each
/// observation. `start` fixes the first cell, otherwise it is drawn
/// uniformly from the seeded generator.
#[derive(Debug, Clone, PartialEq)]
pub struct ExploreConfig {
    pub policy: Policy,
    pub steps: usize,
    pub refine_budget: usize,
    pub topic_samples: usize,
    pub seed: u64,
    pub start: Option<CellCoord>,
}

impl ExploreConfig {
    pub fn new(policy: Policy, steps: usize, seed: u64) -> ExploreConfig {
        ExploreConfig {
            policy,
            steps,
            refine_budget: 200,
            topic_samples: 1,
            seed,
            start: None,
        }
    }
}

/// Runs one exploration: observe, refine, move, for `cfg.steps` steps.
/// Returns the path and the fitted model.
pub fn explore(
    world: &GridWorld,
    hyper: &Hyperparams,
    cfg: &ExploreConfig,
) -> Result<(Path, TopicModel)> {
    if cfg.steps == 0 {
        return Err(Error::InvalidConfig("steps must be positive".into()));
    }
    if world.vocab_size() != hyper.vocab_size {
        return Err(Error::Mismatch(format!(
            "world vocab_size {} differs from model vocab_size {}",
            world.vocab_size(),
            hyper.vocab_size
        )));
    }
    if cfg.steps > 1 && world.num_cells() == 1 {
        return Err(Error::InvalidConfig(
            "cannot move on a single-cell world; steps must be 1".into(),
        ));
    }
    if let Some(s) = cfg.start {
        if !world.contains(s) {
            return Err(Error::InvalidConfig(format!(
                "start cell {s} out of bounds for {}x{} world",
                world.width(),
                world.height()
            )));
        }
    }
    if cfg.topic_samples == 0 {
        return Err(Error::InvalidConfig("topic_samples must be positive".into()));
    }

    let mut rng = seeds::rng(cfg.seed);
    let mut model = TopicModel::new(hyper.clone(), world.width(), world.height())?;
    let mut path = Path::new(world.width(), world.height());
    let mut current = cfg
        .start
        .unwrap_or_else(|| world.coord(rng.random_range(0..world.num_cells())));

    for step in 0..cfg.steps {
        model.observe(current, world.tokens(current), &mut rng);
        path.record(current);
        for _ in 0..cfg.refine_budget {
            model.refine_step(&mut rng);
        }
        if step + 1 < cfg.steps {
            let weights = step_weights(
                cfg.policy,
                world,
                &model,
                &path,
                current,
                cfg.topic_samples,
                &mut rng,
            );
            current = choose_step(&weights, &mut rng);
        }
    }
    Ok((path, model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::worldgen::{sample_world, GenConfig};
    use proptest::prelude::*;

    fn c(x: usize, y: usize) -> CellCoord {
        CellCoord::new(x, y)
    }

    fn hyper() -> Hyperparams {
        Hyperparams::new(3, 10, 0.5, 0.2, 1)
    }

    fn small_world(seed: u64) -> GridWorld {
        sample_world(&GenConfig {
            width: 6,
            height: 6,
            topics: 3,
            vocab_size: 10,
            alpha: 0.05,
            beta: 0.3,
            neighborhood_radius: 1,
            words_per_cell: 6,
            seed,
        })
        .unwrap()
        .0
    }

    #[test]
    fn policy_names_round_trip() {
        for p in Policy::ALL {
            assert_eq!(p.name().parse::<Policy>().unwrap(), p);
        }
        assert!("coverage".parse::<Policy>().is_err());
    }

    #[test]
    fn empty_path_has_unit_potential() {
        let path = Path::new(4, 4);
        assert_eq!(path.potential(c(2, 2)), 1.0);
    }

    #[test]
    fn potential_matches_hand_computed_case() {
        // two visits at the origin: candidates at distance 1 and 2 see
        // potentials 2/2 = 1 and 2/5 = 0.4
        let mut path = Path::new(5, 1);
        path.record(c(0, 0));
        path.record(c(0, 0));
        assert_eq!(path.potential(c(1, 0)), 1.0);
        assert_eq!(path.potential(c(2, 0)), 0.4);
        assert_eq!(path.visits(c(0, 0)), 2);
        assert_eq!(path.len(), 2);
    }

    #[test]
    fn coverage_weights_are_inverse_potential() {
        let world = GridWorld::empty(5, 1, 10).unwrap();
        let model = TopicModel::new(hyper(), 5, 1).unwrap();
        let mut path = Path::new(5, 1);
        path.record(c(0, 0));
        path.record(c(0, 0));
        let mut rng = crate::seeds::rng(0);
        let w = step_weights(
            Policy::StochasticCoverage,
            &world,
            &model,
            &path,
            c(1, 0),
            1,
            &mut rng,
        );
        // neighbors of (1,0): (2,0) then (0,0); potentials 0.4 and 2/1
        assert_eq!(w[0], (c(2, 0), 2.5));
        assert_eq!(w[1], (c(0, 0), 0.5));
    }

    #[test]
    fn random_walk_ignores_model_and_path() {
        let world = small_world(1);
        let (path, model) = explore(&world, &hyper(), &ExploreConfig::new(Policy::RandomWalk, 5, 3))
            .unwrap();
        let mut rng = crate::seeds::rng(7);
        let w = step_weights(Policy::RandomWalk, &world, &model, &path, c(3, 3), 1, &mut rng);
        assert!(w.iter().all(|&(_, weight)| weight == 1.0));
    }

    #[test]
    fn fresh_visit_lowers_nearby_relative_weight() {
        // candidates at (1,0) and (3,0); a new visit at (0,0) sits nearer to
        // the first, so its share of the coverage weight must drop
        let mut path = Path::new(5, 5);
        path.record(c(2, 2));
        let share = |path: &Path| {
            let a = 1.0 / path.potential(c(1, 0));
            let b = 1.0 / path.potential(c(3, 0));
            a / (a + b)
        };
        let before = share(&path);
        path.record(c(0, 0));
        let after = share(&path);
        assert!(
            after < before,
            "share near the new visit should shrink: {before} -> {after}"
        );
    }

    #[test]
    fn choose_step_follows_weights() {
        let weights = vec![(c(0, 0), 1.0), (c(1, 0), 3.0)];
        let mut rng = crate::seeds::rng(5);
        let draws = 100_000;
        let mut hits = 0;
        for _ in 0..draws {
            if choose_step(&weights, &mut rng) == c(1, 0) {
                hits += 1;
            }
        }
        let freq = hits as f64 / draws as f64;
        assert!((freq - 0.75).abs() < 0.01, "freq {freq}");
    }

    #[test]
    fn choose_step_ignores_zero_weight_candidates() {
        let weights = vec![(c(0, 0), 0.0), (c(1, 0), 2.0)];
        let mut rng = crate::seeds::rng(6);
        for _ in 0..500 {
            assert_eq!(choose_step(&weights, &mut rng), c(1, 0));
        }
    }

    #[test]
    fn choose_step_falls_back_to_uniform_on_degenerate_weights() {
        let weights = vec![(c(0, 0), 0.0), (c(1, 0), 0.0), (c(2, 0), 0.0)];
        let mut rng = crate::seeds::rng(7);
        let mut counts = [0u32; 3];
        for _ in 0..30_000 {
            counts[choose_step(&weights, &mut rng).x] += 1;
        }
        for n in counts {
            let freq = n as f64 / 30_000.0;
            assert!((freq - 1.0 / 3.0).abs() < 0.02, "freq {freq}");
        }
    }

    #[test]
    fn single_step_run_observes_exactly_one_cell() {
        let world = small_world(2);
        let mut cfg = ExploreConfig::new(Policy::TopicPerplexity, 1, 11);
        cfg.start = Some(c(4, 2));
        let (path, model) = explore(&world, &hyper(), &cfg).unwrap();
        assert_eq!(path.steps(), &[c(4, 2)]);
        assert_eq!(model.observations(), 1);
        assert_eq!(model.total_tokens(), world.tokens(c(4, 2)).len() as u64);
        assert_eq!(model.cell_words(c(4, 2)), world.tokens(c(4, 2)));
    }

    #[test]
    fn explore_is_deterministic_per_seed() {
        let world = small_world(3);
        for policy in Policy::ALL {
            let cfg = ExploreConfig::new(policy, 8, 21);
            let a = explore(&world, &hyper(), &cfg).unwrap();
            let b = explore(&world, &hyper(), &cfg).unwrap();
            assert_eq!(a.0, b.0, "{policy}");
            assert_eq!(a.1, b.1, "{policy}");
        }
    }

    #[test]
    fn explore_validates_inputs() {
        let world = small_world(4);
        assert!(explore(&world, &hyper(), &ExploreConfig::new(Policy::RandomWalk, 0, 0)).is_err());

        let tiny = GridWorld::empty(1, 1, 10).unwrap();
        assert!(explore(&tiny, &hyper(), &ExploreConfig::new(Policy::RandomWalk, 2, 0)).is_err());
        assert!(explore(&tiny, &hyper(), &ExploreConfig::new(Policy::RandomWalk, 1, 0)).is_ok());

        let mismatched = Hyperparams::new(3, 99, 0.5, 0.2, 1);
        assert!(explore(&world, &mismatched, &ExploreConfig::new(Policy::RandomWalk, 2, 0)).is_err());

        let mut bad_start = ExploreConfig::new(Policy::RandomWalk, 2, 0);
        bad_start.start = Some(c(9, 9));
        assert!(explore(&world, &hyper(), &bad_start).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn paths_move_along_grid_edges(seed in 0u64..200, policy_idx in 0usize..4) {
            let world = small_world(5);
            let mut cfg = ExploreConfig::new(Policy::ALL[policy_idx], 10, seed);
            cfg.refine_budget = 20;
            let (path, model) = explore(&world, &hyper(), &cfg).unwrap();
            prop_assert_eq!(path.len(), 10);
            prop_assert_eq!(model.observations(), 10);
            for pair in path.steps().windows(2) {
                prop_assert_eq!(pair[0].distance_sq(pair[1]), 1.0);
            }
            let visits: u32 = (0..world.num_cells())
                .map(|i| path.visits(world.coord(i)))
                .sum();
            prop_assert_eq!(visits, 10);
        }
    }
}
