//! Tabular SARSA over candidate-bin-set sizes: state extraction from
//! detector flags, ε-greedy action selection, the detection-probability
//! reward, and the one-step on-policy update.
//!
//! States and actions both live in {0..M}: the state is the clamped count
//! of flagged bins and the action is how many top-ranked bins the next
//! transmit beam will serve (action 0 falls back to omnidirectional).

use crate::detector::CellDecision;
use crate::error::{Error, Result};
use ndarray::Array2;
use rand::Rng;

/// Which bins contribute the positive reward term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardRule {
    /// The bins of the chosen action set (default).
    ChosenSet,
    /// The state-count highest estimated-P_D bins, regardless of the action.
    FlagCount,
}

/// Learning parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub learning_rate: f64,
    pub discount: f64,
    /// Initial exploration rate ε₀.
    pub epsilon: f64,
    /// Per-pulse multiplicative ε decay; 1 keeps ε constant.
    pub epsilon_decay: f64,
    /// Maximum trackable target count M (states and actions run 0..=M).
    pub max_targets: usize,
    pub reward_rule: RewardRule,
}

impl AgentConfig {
    pub fn new(learning_rate: f64, discount: f64, epsilon: f64, max_targets: usize) -> Result<Self> {
        for (name, v) in [
            ("learning_rate", learning_rate),
            ("discount", discount),
            ("epsilon", epsilon),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if max_targets == 0 {
            return Err(Error::invalid("max_targets must be >= 1"));
        }
        Ok(AgentConfig {
            learning_rate,
            discount,
            epsilon,
            epsilon_decay: 1.0,
            max_targets,
            reward_rule: RewardRule::ChosenSet,
        })
    }

    pub fn with_epsilon_decay(mut self, decay: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&decay) {
            return Err(Error::invalid(format!(
                "epsilon decay must lie in [0, 1], got {decay}"
            )));
        }
        self.epsilon_decay = decay;
        Ok(self)
    }

    /// Exploration rate for 0-based pulse `k`: ε₀·d^{k+1}.
    pub fn epsilon_at(&self, pulse: usize) -> f64 {
        self.epsilon * self.epsilon_decay.powi(pulse as i32 + 1)
    }
}

impl Default for AgentConfig {
    /// Reference learning parameters: α = γ = 0.8, ε₀ = 0.5, M = 10.
    fn default() -> Self {
        AgentConfig {
            learning_rate: 0.8,
            discount: 0.8,
            epsilon: 0.5,
            epsilon_decay: 1.0,
            max_targets: 10,
            reward_rule: RewardRule::ChosenSet,
        }
    }
}

/// Zero-initialized (M+1)×(M+1) state-action value table.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    q: Array2<f64>,
}

impl QTable {
    pub fn new(max_targets: usize) -> Self {
        QTable {
            q: Array2::zeros((max_targets + 1, max_targets + 1)),
        }
    }

    pub fn max_targets(&self) -> usize {
        self.q.nrows() - 1
    }

    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.q[(state, action)]
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.q
    }

    /// Greedy action for a state; ties broken toward the lowest index.
    pub fn argmax_action(&self, state: usize) -> usize {
        let row = self.q.row(state);
        let mut best = 0;
        for (a, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = a;
            }
        }
        best
    }
}

/// Clamped flag count `min(Σ flags, M)`.
pub fn extract_state(flags: &[bool], max_targets: usize) -> usize {
    flags.iter().filter(|&&f| f).count().min(max_targets)
}

/// ε-greedy draw: the greedy action with probability 1−ε, otherwise a
/// uniform draw over the remaining M actions (the greedy one excluded).
pub fn select_action<R: Rng + ?Sized>(
    q: &QTable,
    state: usize,
    epsilon: f64,
    rng: &mut R,
) -> usize {
    let a_opt = q.argmax_action(state);
    if rng.random::<f64>() >= epsilon {
        return a_opt;
    }
    let m = q.max_targets();
    let draw = rng.random_range(0..m);
    if draw < a_opt {
        draw
    } else {
        draw + 1
    }
}

/// The `i` top-ranked angle bins by Wald statistic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSet {
    /// Action index i (number of bins served).
    pub size: usize,
    /// Grid indices in descending-statistic order, ties toward lower index.
    pub bins: Vec<usize>,
}

/// Ranks the bins by statistic and keeps the best `i`.
pub fn build_action_set(statistics: &[f64], i: usize) -> Result<ActionSet> {
    if i > statistics.len() {
        return Err(Error::invalid(format!(
            "action size {i} exceeds the {} available bins",
            statistics.len()
        )));
    }
    let mut order: Vec<usize> = (0..statistics.len()).collect();
    order.sort_by(|&a, &b| {
        statistics[b]
            .total_cmp(&statistics[a])
            .then(a.cmp(&b))
    });
    order.truncate(i);
    Ok(ActionSet { size: i, bins: order })
}

/// Detection-probability reward: Σ P̂_D over the positive set minus
/// Σ P̂_D over all remaining bins, with the positive set given by the
/// chosen action's bins.
pub fn reward(decisions: &[CellDecision], chosen: &ActionSet) -> f64 {
    reward_with_rule(decisions, chosen, RewardRule::ChosenSet, usize::MAX)
}

/// Reward under an explicit positive-set rule; `max_targets` clamps the
/// flag count for the [`RewardRule::FlagCount`] reading.
pub fn reward_with_rule(
    decisions: &[CellDecision],
    chosen: &ActionSet,
    rule: RewardRule,
    max_targets: usize,
) -> f64 {
    let positive: Vec<usize> = match rule {
        RewardRule::ChosenSet => chosen.bins.clone(),
        RewardRule::FlagCount => {
            let s = decisions
                .iter()
                .filter(|d| d.flag)
                .count()
                .min(max_targets);
            let ranked = build_action_set(
                &decisions.iter().map(|d| d.pd_hat).collect::<Vec<_>>(),
                s,
            )
            .expect("flag count never exceeds bin count");
            ranked.bins
        }
    };
    let mut total = 0.0;
    let mut pos = 0.0;
    for (l, d) in decisions.iter().enumerate() {
        total += d.pd_hat;
        if positive.contains(&l) {
            pos += d.pd_hat;
        }
    }
    2.0 * pos - total
}

/// One-step on-policy update
/// `Q(s,a) += α·(r + γ·Q(s′,a′) − Q(s,a))`; exactly one cell changes.
pub fn sarsa_update(
    q: &mut QTable,
    state: usize,
    action: usize,
    reward: f64,
    next_state: usize,
    next_action: usize,
    cfg: &AgentConfig,
) {
    let target = reward + cfg.discount * q.get(next_state, next_action);
    let current = q.get(state, action);
    q.q[(state, action)] = current + cfg.learning_rate * (target - current);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn decision(pd: f64, flag: bool) -> CellDecision {
        CellDecision {
            statistic: 0.0,
            flag,
            alpha_hat: C64::new(0.0, 0.0),
            zeta_hat: 0.0,
            pd_hat: pd,
        }
    }

    #[test]
    fn config_validation() {
        assert!(AgentConfig::new(1.2, 0.8, 0.5, 10).is_err());
        assert!(AgentConfig::new(0.8, -0.1, 0.5, 10).is_err());
        assert!(AgentConfig::new(0.8, 0.8, 0.5, 0).is_err());
        let cfg = AgentConfig::default();
        assert_eq!(
            (cfg.learning_rate, cfg.discount, cfg.epsilon, cfg.max_targets),
            (0.8, 0.8, 0.5, 10)
        );
    }

    #[test]
    fn epsilon_schedule() {
        let cfg = AgentConfig::default();
        assert_abs_diff_eq!(cfg.epsilon_at(0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(cfg.epsilon_at(49), 0.5, epsilon = 1e-15);
        let decayed = AgentConfig::default().with_epsilon_decay(0.9).unwrap();
        assert_relative_eq!(decayed.epsilon_at(0), 0.45, max_relative = 1e-12);
        assert_relative_eq!(decayed.epsilon_at(1), 0.405, max_relative = 1e-12);
    }

    #[test]
    fn extract_state_examples() {
        assert_eq!(extract_state(&[false; 20], 10), 0);
        let mut four = vec![false; 20];
        for i in 0..4 {
            four[3 * i] = true;
        }
        assert_eq!(extract_state(&four, 10), 4);
        let mut many = vec![true; 14];
        many.extend_from_slice(&[false; 6]);
        assert_eq!(extract_state(&many, 10), 10);
    }

    #[test]
    fn select_action_greedy_row() {
        // Published second-state row: the maximum sits at the third column.
        let mut q = QTable::new(3);
        for (a, v) in [0.5118, 1.5951, 2.5540, 1.4495].into_iter().enumerate() {
            q.q[(2, a)] = v;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(select_action(&q, 2, 0.0, &mut rng), 2);
    }

    #[test]
    fn select_action_tie_breaks_low() {
        let q = QTable::new(10);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(select_action(&q, 5, 0.0, &mut rng), 0);
    }

    #[test]
    fn select_action_row_scaling_invariance() {
        let mut q = QTable::new(4);
        for (a, v) in [0.2, 0.9, 0.3, 0.9, 0.1].into_iter().enumerate() {
            q.q[(1, a)] = v;
        }
        let mut scaled = q.clone();
        for a in 0..=4 {
            scaled.q[(1, a)] *= 37.5;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(
            select_action(&q, 1, 0.0, &mut rng),
            select_action(&scaled, 1, 0.0, &mut rng)
        );
        assert_eq!(q.argmax_action(1), 1);
    }

    #[test]
    fn select_action_full_exploration_is_uniform() {
        let mut q = QTable::new(10);
        q.q[(0, 7)] = 5.0;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 100_000;
        let mut counts = [0usize; 11];
        for _ in 0..n {
            counts[select_action(&q, 0, 1.0, &mut rng)] += 1;
        }
        assert_eq!(counts[7], 0);
        for (a, &c) in counts.iter().enumerate() {
            if a != 7 {
                assert_relative_eq!(c as f64 / n as f64, 0.1, max_relative = 0.05);
            }
        }
    }

    #[test]
    fn build_action_set_examples() {
        assert!(build_action_set(&[1.0, 2.0], 0).unwrap().bins.is_empty());
        let set = build_action_set(&[1.0, 9.0, 3.0, 9.0], 2).unwrap();
        assert_eq!(set.bins, vec![1, 3]);
        assert_eq!(set.size, 2);
        let all = build_action_set(&[1.0, 9.0, 3.0, 9.0], 4).unwrap();
        assert_eq!(all.bins, vec![1, 3, 2, 0]);
        assert!(build_action_set(&[1.0], 2).is_err());
    }

    #[test]
    fn reward_examples() {
        let zeros: Vec<CellDecision> = (0..4).map(|_| decision(0.0, false)).collect();
        let chosen = ActionSet { size: 2, bins: vec![0, 2] };
        assert_eq!(reward(&zeros, &chosen), 0.0);

        let ones: Vec<CellDecision> = (0..4)
            .map(|l| decision(if l == 0 || l == 2 { 1.0 } else { 0.0 }, true))
            .collect();
        assert_abs_diff_eq!(reward(&ones, &chosen), 2.0, epsilon = 1e-15);

        let hand: Vec<CellDecision> = [0.9, 0.1, 0.8, 0.2]
            .into_iter()
            .map(|p| decision(p, false))
            .collect();
        assert_abs_diff_eq!(reward(&hand, &chosen), 1.4, epsilon = 1e-12);
    }

    #[test]
    fn reward_flag_count_rule() {
        // Two flags: the positive set becomes the two highest-P̂_D bins
        // (0 and 2), whatever the chosen action says.
        let decisions: Vec<CellDecision> = [0.9, 0.1, 0.8, 0.2]
            .into_iter()
            .enumerate()
            .map(|(l, p)| decision(p, l < 2))
            .collect();
        let chosen = ActionSet { size: 1, bins: vec![3] };
        let r = reward_with_rule(&decisions, &chosen, RewardRule::FlagCount, 10);
        assert_abs_diff_eq!(r, 1.4, epsilon = 1e-12);
    }

    #[test]
    fn sarsa_update_examples() {
        let cfg = AgentConfig::default();
        let mut q = QTable::new(10);
        sarsa_update(&mut q, 1, 1, 1.0, 2, 2, &cfg);
        assert_abs_diff_eq!(q.get(1, 1), 0.8, epsilon = 1e-15);

        let mut frozen = QTable::new(10);
        frozen.q[(3, 4)] = 7.0;
        let cfg0 = AgentConfig::new(0.0, 0.8, 0.5, 10).unwrap();
        let before = frozen.clone();
        sarsa_update(&mut frozen, 3, 4, 9.0, 1, 1, &cfg0);
        assert_eq!(frozen, before);

        let mut hand = QTable::new(10);
        hand.q[(2, 3)] = 1.0;
        hand.q[(5, 6)] = 2.0;
        let cfg_h = AgentConfig::new(0.5, 0.9, 0.5, 10).unwrap();
        sarsa_update(&mut hand, 2, 3, 0.5, 5, 6, &cfg_h);
        assert_abs_diff_eq!(hand.get(2, 3), 1.65, epsilon = 1e-12);
    }

    #[test]
    fn sarsa_update_touches_one_cell() {
        let cfg = AgentConfig::default();
        let mut q = QTable::new(10);
        for s in 0..=10 {
            for a in 0..=10 {
                q.q[(s, a)] = (s * 13 + a) as f64 * 0.017;
            }
        }
        let before = q.clone();
        sarsa_update(&mut q, 4, 9, -0.3, 7, 2, &cfg);
        for s in 0..=10 {
            for a in 0..=10 {
                if (s, a) != (4, 9) {
                    assert_eq!(q.get(s, a).to_bits(), before.get(s, a).to_bits());
                }
            }
        }
        assert!(q.get(4, 9) != before.get(4, 9));
    }

    #[test]
    fn greedy_converges_on_stub_environment() {
        // Stationary synthetic task: the reward peaks at action 3 and the
        // state is pinned; the greedy policy must lock on within 100 steps.
        let cfg = AgentConfig::new(0.8, 0.8, 0.0, 10).unwrap();
        let mut q = QTable::new(10);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let stub_reward = |a: usize| {
            if a == 3 {
                1.0
            } else {
                -0.2 * (a as f64 - 3.0).abs()
            }
        };
        let mut state = 3;
        let mut action = select_action(&q, state, 0.0, &mut rng);
        let mut tail = Vec::new();
        for _ in 0..100 {
            let r = stub_reward(action);
            let next_state = 3;
            let next_action = select_action(&q, next_state, 0.0, &mut rng);
            sarsa_update(&mut q, state, action, r, next_state, next_action, &cfg);
            state = next_state;
            action = next_action;
            tail.push(action);
        }
        assert!(tail[tail.len() - 20..].iter().all(|&a| a == 3));
    }
}
