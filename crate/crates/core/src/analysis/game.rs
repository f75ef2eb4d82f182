//! Two automata repeatedly playing a game in which both receive the same
//! stochastic binary payoff.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::automaton::{init_uniform, sample_action, LearningParams, ReinforcementSignal};
use crate::error::{Error, Result};
use crate::metrics::{MetricsSeries, SlotRecord};

/// Success probabilities of each joint action; entry `[a][b]` applies when
/// the first automaton plays `a` and the second plays `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdenticalPayoffGame {
    table: Vec<Vec<f64>>,
}

impl IdenticalPayoffGame {
    pub fn new(table: Vec<Vec<f64>>) -> Result<Self> {
        let cols = table.first().map_or(0, Vec::len);
        if table.is_empty() || cols == 0 || table.iter().any(|row| row.len() != cols) {
            return Err(Error::invalid("payoff table must be a non-empty rectangle"));
        }
        if table.iter().flatten().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::invalid("payoff probabilities must lie in [0, 1]"));
        }
        Ok(Self { table })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.table.len(), self.table[0].len())
    }

    pub fn payoff(&self, a: usize, b: usize) -> f64 {
        self.table[a][b]
    }

    /// The joint action with the strictly largest payoff, if unique.
    pub fn optimum(&self) -> Option<(usize, usize)> {
        let (rows, cols) = self.shape();
        let mut best = (0, 0);
        let mut unique = true;
        for a in 0..rows {
            for b in 0..cols {
                let (p, q) = (self.table[a][b], self.table[best.0][best.1]);
                if p > q {
                    best = (a, b);
                    unique = true;
                } else if p == q && (a, b) != best {
                    unique = false;
                }
            }
        }
        unique.then_some(best)
    }

    /// Neither player gains by deviating alone.
    pub fn is_equilibrium(&self, a: usize, b: usize) -> bool {
        let (rows, cols) = self.shape();
        let p = self.table[a][b];
        (0..rows).all(|x| self.table[x][b] <= p) && (0..cols).all(|y| self.table[a][y] <= p)
    }
}

/// Plays `rounds` rounds. Both automata start uniform and receive the same
/// Bernoulli payoff each round. Sub-optimal mass is measured against the
/// game optimum when it is unique.
pub fn play_game(
    game: &IdenticalPayoffGame,
    params: LearningParams,
    rounds: usize,
    seed: u64,
) -> Result<MetricsSeries> {
    params.validate()?;
    let (rows, cols) = game.shape();
    let mut automata = [init_uniform(rows)?, init_uniform(cols)?];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut series = MetricsSeries::new(0);
    let mut previous: Option<[usize; 2]> = None;
    for slot in 0..rounds {
        let a = sample_action(&automata[0], &mut rng);
        let b = sample_action(&automata[1], &mut rng);
        let success = rng.gen::<f64>() < game.payoff(a, b);
        let beta = if success { ReinforcementSignal::REWARD } else { ReinforcementSignal::NONE };
        for (automaton, action) in automata.iter_mut().zip([a, b]) {
            if automaton.len() > 1 {
                *automaton = params.update(automaton, action, beta)?;
            }
        }
        series.records.push(SlotRecord {
            slot,
            delivered: 0,
            injected: 0,
            queued: 0,
            total_injected: 0,
            total_delivered: 0,
            served: Vec::new(),
            winners: Vec::new(),
            connectivity: 0,
            interference: 0,
            cq: Vec::new(),
            beta: vec![beta.value(); 2],
            actions: vec![a, b],
            probs: automata.iter().map(|p| p.probs().to_vec()).collect(),
            max_prob: automata.iter().map(|p| p.max_prob()).collect(),
            suboptimal_l1: Vec::new(),
            switched: match previous {
                Some(prev) => vec![prev[0] != a, prev[1] != b],
                None => vec![false; 2],
            },
        });
        previous = Some([a, b]);
    }
    let reference = match game.optimum() {
        Some((a, b)) => vec![a, b],
        None => series.final_argmax(),
    };
    series.set_reference(&reference);
    Ok(series)
}
