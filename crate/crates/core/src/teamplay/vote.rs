use std::collections::VecDeque;

/// Result of pushing one decision into a [`VoteBuffer`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Vote<T> {
    Confirmed(T),
    Pending,
}

/// Debounce filter: a decision is confirmed once the last `N` pushes agree.
#[derive(Debug, Clone)]
pub struct VoteBuffer<T> {
    capacity: usize,
    entries: VecDeque<T>,
}

impl<T: Clone + PartialEq> VoteBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "vote buffer needs at least one slot");
        Self {
            capacity,
            entries: VecDeque::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, decision: T) -> Vote<T> {
        if self.entries.back().is_some_and(|last| *last != decision) {
            self.entries.clear();
        }
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(decision.clone());
        if self.entries.len() == self.capacity {
            Vote::Confirmed(decision)
        } else {
            Vote::Pending
        }
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    /// Length of the current run of identical decisions.
    pub fn streak(&self) -> usize {
        self.entries.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn five_identical_confirm() {
        let mut v = VoteBuffer::new(5);
        for _ in 0..4 {
            assert_eq!(v.push(true), Vote::Pending);
        }
        assert_eq!(v.push(true), Vote::Confirmed(true));
    }

    #[test]
    fn deviation_restarts() {
        let mut v = VoteBuffer::new(5);
        for _ in 0..4 {
            v.push(true);
        }
        assert_eq!(v.push(false), Vote::Pending);
        assert_eq!(v.streak(), 1);
    }

    #[test]
    fn alternating_never_confirms() {
        let mut v = VoteBuffer::new(4);
        for k in 0..10_000 {
            assert_eq!(v.push(k % 2 == 0), Vote::Pending);
        }
    }

    #[test]
    fn single_slot_confirms_immediately() {
        let mut v = VoteBuffer::new(1);
        assert_eq!(v.push(3), Vote::Confirmed(3));
        assert_eq!(v.push(4), Vote::Confirmed(4));
    }

    proptest! {
        #[test]
        fn confirmed_iff_last_n_agree(n in 1usize..8, seq in proptest::collection::vec(0u8..3, 1..60)) {
            let mut v = VoteBuffer::new(n);
            for (i, d) in seq.iter().enumerate() {
                let out = v.push(*d);
                let agree = i + 1 >= n && seq[i + 1 - n..=i].iter().all(|x| x == d);
                prop_assert_eq!(out == Vote::Confirmed(*d), agree);
            }
        }
    }
}
