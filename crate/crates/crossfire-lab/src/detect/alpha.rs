//! The α decision rule: a circular buffer of per-window verdicts that flags
//! an attacking window only after α *consecutive* attack verdicts. Any normal
//! verdict breaks the run and empties the buffer.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Normal,
    Attack,
}

impl Verdict {
    pub fn is_attack(self) -> bool {
        matches!(self, Verdict::Attack)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetworkState {
    Normal,
    UnderAttack,
}

impl NetworkState {
    pub fn is_under_attack(self) -> bool {
        matches!(self, NetworkState::UnderAttack)
    }
}

#[derive(Debug, Clone)]
pub struct AlphaBuffer {
    capacity: usize,
    contents: VecDeque<Verdict>,
}

impl AlphaBuffer {
    pub fn new(alpha: usize) -> Result<Self> {
        if alpha == 0 {
            return Err(Error::InvalidConfig("alpha must be >= 1".into()));
        }
        Ok(AlphaBuffer {
            capacity: alpha,
            contents: VecDeque::with_capacity(alpha),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.contents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contents.is_empty()
    }

    /// Feeds one verdict and returns the network state. An attack verdict is
    /// appended (overwriting the oldest once full); a normal verdict clears
    /// the buffer, because the rule counts consecutive detections only.
    pub fn push(&mut self, verdict: Verdict) -> NetworkState {
        match verdict {
            Verdict::Normal => self.contents.clear(),
            Verdict::Attack => {
                if self.contents.len() == self.capacity {
                    self.contents.pop_front();
                }
                self.contents.push_back(Verdict::Attack);
            }
        }
        self.state()
    }

    /// UNDER_ATTACK exactly when the buffer holds α consecutive attack verdicts.
    pub fn state(&self) -> NetworkState {
        if self.contents.len() == self.capacity {
            NetworkState::UnderAttack
        } else {
            NetworkState::Normal
        }
    }
}
