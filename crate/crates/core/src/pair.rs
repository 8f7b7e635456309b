/// Bijection between composite pair indices `i` and `(state, action)`
/// tuples. Pairs are laid out state-major: `i = s * n_actions + a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PairIndex {
    n_states: usize,
    n_actions: usize,
}

impl PairIndex {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        Self { n_states, n_actions }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Number of state-action pairs.
    pub fn len(&self) -> usize {
        self.n_states * self.n_actions
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn encode(&self, state: usize, action: usize) -> usize {
        debug_assert!(state < self.n_states && action < self.n_actions);
        state * self.n_actions + action
    }

    #[inline]
    pub fn decode(&self, pair: usize) -> (usize, usize) {
        debug_assert!(pair < self.len());
        (pair / self.n_actions, pair % self.n_actions)
    }

    /// Range of pair indices belonging to `state`.
    #[inline]
    pub fn state_pairs(&self, state: usize) -> core::ops::Range<usize> {
        let start = state * self.n_actions;
        start..start + self.n_actions
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn round_trips(n_states in 1usize..50, n_actions in 1usize..8, seed in 0usize..10_000) {
            let idx = PairIndex::new(n_states, n_actions);
            let i = seed % idx.len();
            let (s, a) = idx.decode(i);
            prop_assert_eq!(idx.encode(s, a), i);
            prop_assert!(idx.state_pairs(s).contains(&i));
        }
    }
}
