use crate::card::Card;
use crate::state::HanabiState;

pub const NUM_AUX_CLASSES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CardStatus {
    Playable = 0,
    Discardable = 1,
    Unknown = 2,
}

impl CardStatus {
    pub fn class(self) -> usize {
        self as usize
    }
}

/// Status of `card` given fireworks and the discard pile.
///
/// A card is discardable once it can never be played: its rank is already on the
/// firework, or every copy of some rank between the firework top and the card has
/// been discarded.
pub fn card_status(card: Card, fireworks: &[u8], discard_counts: &[u8]) -> CardStatus {
    let top = fireworks[card.color as usize];
    if card.rank == top {
        return CardStatus::Playable;
    }
    if card.rank < top {
        return CardStatus::Discardable;
    }
    let blocked = (top..card.rank).any(|r| {
        let c = Card::new(card.color, r);
        discard_counts[c.index()] >= c.copies()
    });
    if blocked {
        CardStatus::Discardable
    } else {
        CardStatus::Unknown
    }
}

/// Ground-truth labels for `player`'s own slots; `None` for empty slots.
pub fn aux_targets(state: &HanabiState, player: usize) -> Vec<Option<CardStatus>> {
    let fireworks = state.fireworks();
    let discards = state.discard_counts();
    let hand = state.hand(player);
    (0..state.hand_size())
        .map(|i| hand.get(i).map(|&c| card_status(c, &fireworks, &discards)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::card::NUM_CARD_TYPES;

    fn no_discards() -> [u8; NUM_CARD_TYPES] {
        [0; NUM_CARD_TYPES]
    }

    #[test]
    fn playable_and_discardable() {
        let g1 = Card::new(0, 0);
        assert_eq!(card_status(g1, &[0; 5], &no_discards()), CardStatus::Playable);
        assert_eq!(card_status(g1, &[1, 0, 0, 0, 0], &no_discards()), CardStatus::Discardable);
        assert_eq!(card_status(g1, &[5, 0, 0, 0, 0], &no_discards()), CardStatus::Discardable);
        assert_eq!(card_status(Card::new(0, 2), &[1, 0, 0, 0, 0], &no_discards()), CardStatus::Unknown);
    }

    /// Reachability oracle: walk the firework up one rank at a time while a copy of
    /// the next rank survives.
    fn reachable(card: Card, fireworks: &[u8], discards: &[u8]) -> bool {
        let mut top = fireworks[card.color as usize];
        while top < card.rank {
            let next = Card::new(card.color, top);
            if discards[next.index()] >= next.copies() {
                return false;
            }
            top += 1;
        }
        top == card.rank
    }

    #[test]
    fn dead_prerequisite() {
        // G4 with G firework at 1 and both G3 discarded
        let mut d = no_discards();
        d[Card::new(0, 2).index()] = 2;
        let g4 = Card::new(0, 3);
        assert_eq!(card_status(g4, &[1, 0, 0, 0, 0], &d), CardStatus::Discardable);
        assert!(!reachable(g4, &[1, 0, 0, 0, 0], &d));
        // one G3 left keeps it alive
        d[Card::new(0, 2).index()] = 1;
        assert_eq!(card_status(g4, &[1, 0, 0, 0, 0], &d), CardStatus::Unknown);
    }

    #[test]
    fn matches_reachability_oracle() {
        // every card against every firework height and a spread of discard piles
        for idx in 0..NUM_CARD_TYPES {
            let card = Card::from_index(idx);
            for top in 0..=5u8 {
                for pattern in 0..32u32 {
                    let mut d = no_discards();
                    for r in 0..5u8 {
                        if pattern & (1 << r) != 0 {
                            let c = Card::new(card.color, r);
                            d[c.index()] = c.copies();
                        }
                    }
                    let mut fw = [0u8; 5];
                    fw[card.color as usize] = top;
                    let status = card_status(card, &fw, &d);
                    let expected = if card.rank == top {
                        CardStatus::Playable
                    } else if card.rank < top || !reachable(card, &fw, &d) {
                        CardStatus::Discardable
                    } else {
                        CardStatus::Unknown
                    };
                    assert_eq!(status, expected, "{card} top {top} pattern {pattern:05b}");
                }
            }
        }
    }

    #[test]
    fn targets_cover_hand() {
        let s = HanabiState::new_game(2, 3).unwrap();
        let t = aux_targets(&s, 0);
        assert_eq!(t.len(), 5);
        for (slot, c) in t.iter().zip(s.hand(0)) {
            let expected = if c.rank == 0 { CardStatus::Playable } else { CardStatus::Unknown };
            assert_eq!(*slot, Some(expected));
        }
    }
}
