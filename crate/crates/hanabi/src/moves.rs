use std::fmt;

use crate::card::{NUM_COLORS, NUM_RANKS};

/// A move. Hint targets are offsets relative to the acting player (`1..players`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HanabiMove {
    Discard { index: usize },
    Play { index: usize },
    RevealColor { target_offset: usize, color: u8 },
    RevealRank { target_offset: usize, rank: u8 },
}

impl fmt::Display for HanabiMove {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            HanabiMove::Discard { index } => write!(f, "discard {index}"),
            HanabiMove::Play { index } => write!(f, "play {index}"),
            HanabiMove::RevealColor { target_offset, color } => {
                write!(f, "hint +{target_offset} color {}", ['G', 'B', 'W', 'Y', 'R'][color as usize])
            }
            HanabiMove::RevealRank { target_offset, rank } => {
                write!(f, "hint +{target_offset} rank {}", rank + 1)
            }
        }
    }
}

/// Flat move-id layout for a player count.
///
/// Ids `[0, H)` discard slot `i`, `[H, 2H)` play slot `i`, then `(P - 1) * 5` color
/// hints ordered by target offset then color, then `(P - 1) * 5` rank hints in the
/// same order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MoveSpace {
    pub players: usize,
    pub hand_size: usize,
}

impl MoveSpace {
    pub fn new(players: usize, hand_size: usize) -> Self {
        Self { players, hand_size }
    }

    pub fn num_moves(&self) -> usize {
        2 * self.hand_size + (self.players - 1) * (NUM_COLORS + NUM_RANKS)
    }

    fn color_base(&self) -> usize {
        2 * self.hand_size
    }

    fn rank_base(&self) -> usize {
        self.color_base() + (self.players - 1) * NUM_COLORS
    }

    pub fn id(&self, mv: HanabiMove) -> usize {
        match mv {
            HanabiMove::Discard { index } => index,
            HanabiMove::Play { index } => self.hand_size + index,
            HanabiMove::RevealColor { target_offset, color } => {
                self.color_base() + (target_offset - 1) * NUM_COLORS + color as usize
            }
            HanabiMove::RevealRank { target_offset, rank } => {
                self.rank_base() + (target_offset - 1) * NUM_RANKS + rank as usize
            }
        }
    }

    pub fn decode(&self, id: usize) -> Option<HanabiMove> {
        let h = self.hand_size;
        if id < h {
            Some(HanabiMove::Discard { index: id })
        } else if id < 2 * h {
            Some(HanabiMove::Play { index: id - h })
        } else if id < self.rank_base() {
            let k = id - self.color_base();
            Some(HanabiMove::RevealColor {
                target_offset: k / NUM_COLORS + 1,
                color: (k % NUM_COLORS) as u8,
            })
        } else if id < self.num_moves() {
            let k = id - self.rank_base();
            Some(HanabiMove::RevealRank {
                target_offset: k / NUM_RANKS + 1,
                rank: (k % NUM_RANKS) as u8,
            })
        } else {
            None
        }
    }
}
