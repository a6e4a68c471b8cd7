use std::fmt;

pub const NUM_COLORS: usize = 5;
pub const NUM_RANKS: usize = 5;
pub const NUM_CARD_TYPES: usize = NUM_COLORS * NUM_RANKS;
pub const DECK_SIZE: usize = 50;
pub const MAX_SCORE: u32 = (NUM_COLORS * NUM_RANKS) as u32;

const COLOR_CHARS: [char; NUM_COLORS] = ['G', 'B', 'W', 'Y', 'R'];

/// Copies of each rank (zero-based) per color.
pub const RANK_COPIES: [u8; NUM_RANKS] = [3, 2, 2, 2, 1];

/// A card with zero-based color (G, B, W, Y, R) and zero-based rank (rank 1 is `0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Card {
    pub color: u8,
    pub rank: u8,
}

impl Card {
    pub fn new(color: u8, rank: u8) -> Self {
        debug_assert!((color as usize) < NUM_COLORS && (rank as usize) < NUM_RANKS);
        Self { color, rank }
    }

    /// Index in `[0, 25)`: `color * 5 + rank`.
    #[inline]
    pub fn index(self) -> usize {
        self.color as usize * NUM_RANKS + self.rank as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::new((i / NUM_RANKS) as u8, (i % NUM_RANKS) as u8)
    }

    pub fn copies(self) -> u8 {
        RANK_COPIES[self.rank as usize]
    }
}

impl fmt::Display for Card {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", COLOR_CHARS[self.color as usize], self.rank + 1)
    }
}

/// The full 50-card deck in canonical order.
pub fn full_deck() -> Vec<Card> {
    let mut deck = Vec::with_capacity(DECK_SIZE);
    for color in 0..NUM_COLORS as u8 {
        for rank in 0..NUM_RANKS as u8 {
            for _ in 0..RANK_COPIES[rank as usize] {
                deck.push(Card::new(color, rank));
            }
        }
    }
    deck
}

/// Per-type counts of the full deck.
pub fn full_counts() -> [u8; NUM_CARD_TYPES] {
    let mut counts = [0u8; NUM_CARD_TYPES];
    for (i, c) in counts.iter_mut().enumerate() {
        *c = Card::from_index(i).copies();
    }
    counts
}

/// What a player has been told about one of its cards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CardKnowledge {
    pub color: Option<u8>,
    pub rank: Option<u8>,
    pub color_plausible: [bool; NUM_COLORS],
    pub rank_plausible: [bool; NUM_RANKS],
}

impl Default for CardKnowledge {
    fn default() -> Self {
        Self {
            color: None,
            rank: None,
            color_plausible: [true; NUM_COLORS],
            rank_plausible: [true; NUM_RANKS],
        }
    }
}

impl CardKnowledge {
    pub fn is_plausible(&self, card: Card) -> bool {
        self.color_plausible[card.color as usize] && self.rank_plausible[card.rank as usize]
    }

    pub fn apply_color_hint(&mut self, color: u8, matches: bool) {
        if matches {
            self.color = Some(color);
            self.color_plausible = [false; NUM_COLORS];
            self.color_plausible[color as usize] = true;
        } else {
            self.color_plausible[color as usize] = false;
        }
    }

    pub fn apply_rank_hint(&mut self, rank: u8, matches: bool) {
        if matches {
            self.rank = Some(rank);
            self.rank_plausible = [false; NUM_RANKS];
            self.rank_plausible[rank as usize] = true;
        } else {
            self.rank_plausible[rank as usize] = false;
        }
    }
}
