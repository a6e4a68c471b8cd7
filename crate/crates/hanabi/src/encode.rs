//! Observation features.
//!
//! Blocks, in order, for an observer `o` (players listed relative to `o`, so index 0
//! is `o` itself and index `k` is the player `k` seats later):
//!
//! | block | size |
//! |---|---|
//! | teammates' hands, one-hot per card | (P-1)·H·25 |
//! | hand has a missing card | P |
//! | deck size thermometer | 50 - P·H |
//! | fireworks, one-hot of top rank per color | 25 |
//! | information tokens thermometer | 8 |
//! | life tokens thermometer | 3 |
//! | discards, thermometer per card type | 50 |
//! | last move | 2P + 4 + 10 + 2H + 25 + 2 |
//! | V0 belief, own hand | H·25 |
//! | V0 belief, teammates' hands (public counts) | (P-1)·H·25 |
//! | revealed color / rank per slot, all hands | P·H·10 |
//! | greedy action slot(s), one-hot over moves + pass + NONE | S·(M+2) |
//!
//! `M` is the number of moves and `S` the number of greedy slots: 0 without the
//! greedy channel, 1 for the previous acting player's greedy action, or `P` when
//! every player's greedy action is broadcast.

use crate::card::{full_counts, Card, DECK_SIZE, NUM_CARD_TYPES, NUM_COLORS, NUM_RANKS, RANK_COPIES};
use crate::moves::{HanabiMove, MoveSpace};
use crate::state::{HanabiState, MAX_INFO_TOKENS, MAX_LIFE_TOKENS};

/// Bumped whenever the block layout changes.
pub const ENCODER_VERSION: &str = "hanabi-v0belief-1";

/// Which greedy actions are appended to the observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GreedySlots {
    Off,
    /// The acting player's greedy action from the previous step.
    #[default]
    Acting,
    /// Every player's greedy action from the previous step, seat order relative to
    /// the observer.
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Encoder {
    pub players: usize,
    pub hand_size: usize,
    pub greedy: GreedySlots,
}

impl Encoder {
    pub fn new(players: usize, hand_size: usize) -> Self {
        Self {
            players,
            hand_size,
            greedy: GreedySlots::Acting,
        }
    }

    pub fn for_state(state: &HanabiState) -> Self {
        Self::new(state.players(), state.hand_size())
    }

    pub fn move_space(&self) -> MoveSpace {
        MoveSpace::new(self.players, self.hand_size)
    }

    /// Moves plus pass.
    pub fn num_actions(&self) -> usize {
        self.move_space().num_moves() + 1
    }

    pub fn pass_action(&self) -> usize {
        self.move_space().num_moves()
    }

    pub fn with_greedy(mut self, greedy: GreedySlots) -> Self {
        self.greedy = greedy;
        self
    }

    pub fn greedy_slots(&self) -> usize {
        match self.greedy {
            GreedySlots::Off => 0,
            GreedySlots::Acting => 1,
            GreedySlots::All => self.players,
        }
    }

    /// Width of one greedy slot: every action plus NONE.
    pub fn greedy_width(&self) -> usize {
        self.num_actions() + 1
    }

    fn last_move_len(&self) -> usize {
        2 * self.players + 4 + NUM_COLORS + NUM_RANKS + 2 * self.hand_size + NUM_CARD_TYPES + 2
    }

    pub fn dim(&self) -> usize {
        let (p, h) = (self.players, self.hand_size);
        (p - 1) * h * NUM_CARD_TYPES
            + p
            + (DECK_SIZE - p * h)
            + NUM_CARD_TYPES
            + MAX_INFO_TOKENS as usize
            + MAX_LIFE_TOKENS as usize
            + DECK_SIZE
            + self.last_move_len()
            + h * NUM_CARD_TYPES
            + (p - 1) * h * NUM_CARD_TYPES
            + p * h * (NUM_COLORS + NUM_RANKS)
            + self.greedy_slots() * self.greedy_width()
    }

    /// Offset of the own-hand V0 block.
    pub fn own_belief_offset(&self) -> usize {
        let (p, h) = (self.players, self.hand_size);
        (p - 1) * h * NUM_CARD_TYPES
            + p
            + (DECK_SIZE - p * h)
            + NUM_CARD_TYPES
            + MAX_INFO_TOKENS as usize
            + MAX_LIFE_TOKENS as usize
            + DECK_SIZE
            + self.last_move_len()
    }

    pub fn greedy_offset(&self) -> usize {
        self.dim() - self.greedy_slots() * self.greedy_width()
    }

    pub fn encode(&self, state: &HanabiState, observer: usize, greedy: &[Option<usize>]) -> Vec<f32> {
        let mut out = vec![0.0; self.dim()];
        self.encode_into(state, observer, greedy, &mut out);
        out
    }

    /// Write the features of `observer` into `out` (length `dim()`).
    ///
    /// `greedy` holds `greedy_slots()` entries; `None` encodes the NONE marker. With
    /// a broadcast of all players the entries are in seat order relative to the
    /// observer.
    pub fn encode_into(
        &self,
        state: &HanabiState,
        observer: usize,
        greedy: &[Option<usize>],
        out: &mut [f32],
    ) {
        assert_eq!(out.len(), self.dim(), "output length");
        assert_eq!(greedy.len(), self.greedy_slots(), "greedy slot count");
        assert_eq!(state.players(), self.players, "player count");
        out.fill(0.0);
        let (p, h) = (self.players, self.hand_size);
        let rel = |k: usize| (observer + k) % p;
        let mut w = Writer { out, pos: 0 };

        // teammates' hands
        for k in 1..p {
            let hand = state.hand(rel(k));
            for slot in 0..h {
                if let Some(c) = hand.get(slot) {
                    w.set(slot * NUM_CARD_TYPES + c.index());
                }
            }
            w.skip(h * NUM_CARD_TYPES);
        }
        for k in 0..p {
            if state.hand(rel(k)).len() < h {
                w.set(k);
            }
        }
        w.skip(p);

        w.thermometer(state.deck().len(), DECK_SIZE - p * h);
        let fireworks = state.fireworks();
        for (color, &top) in fireworks.iter().enumerate() {
            if top > 0 {
                w.set(color * NUM_RANKS + top as usize - 1);
            }
        }
        w.skip(NUM_CARD_TYPES);
        w.thermometer(state.info_tokens() as usize, MAX_INFO_TOKENS as usize);
        w.thermometer(state.life_tokens() as usize, MAX_LIFE_TOKENS as usize);

        let discards = state.discard_counts();
        let mut base = 0;
        for (idx, &n) in discards.iter().enumerate() {
            for b in 0..n as usize {
                w.set(base + b);
            }
            base += RANK_COPIES[idx % NUM_RANKS] as usize;
        }
        w.skip(DECK_SIZE);

        self.encode_last_move(state, observer, &mut w);

        // own V0 belief: the observer sees teammates' cards as well as public piles
        let mut own_counts = public_counts(state);
        for k in 1..p {
            for c in state.hand(rel(k)) {
                own_counts[c.index()] -= 1;
            }
        }
        self.v0_block(state, observer, &own_counts, &mut w);
        let common = public_counts(state);
        for k in 1..p {
            self.v0_block(state, rel(k), &common, &mut w);
        }

        for k in 0..p {
            for (slot, kn) in state.knowledge(rel(k)).iter().enumerate() {
                if let Some(color) = kn.color {
                    w.set(slot * 10 + color as usize);
                }
                if let Some(rank) = kn.rank {
                    w.set(slot * 10 + NUM_COLORS + rank as usize);
                }
            }
            w.skip(h * 10);
        }

        let width = self.greedy_width();
        for g in greedy {
            let idx = g.unwrap_or(width - 1);
            assert!(idx < width - 1 || g.is_none(), "greedy action {idx} out of range");
            w.set(idx);
            w.skip(width);
        }
        debug_assert_eq!(w.pos, self.dim());
    }

    fn encode_last_move(&self, state: &HanabiState, observer: usize, w: &mut Writer<'_>) {
        let (p, h) = (self.players, self.hand_size);
        let len = self.last_move_len();
        let Some(last) = state.last_move() else {
            w.skip(len);
            return;
        };
        let rel_of = |player: usize| (player + p - observer) % p;
        let mut o = 0;
        w.set(o + rel_of(last.player));
        o += p;
        let (kind, target, color, rank, index) = match last.mv {
            HanabiMove::Play { index } => (0, None, None, None, Some(index)),
            HanabiMove::Discard { index } => (1, None, None, None, Some(index)),
            HanabiMove::RevealColor { target_offset, color } => {
                (2, Some(target_offset), Some(color), None, None)
            }
            HanabiMove::RevealRank { target_offset, rank } => {
                (3, Some(target_offset), None, Some(rank), None)
            }
        };
        w.set(o + kind);
        o += 4;
        if let Some(t) = target {
            w.set(o + rel_of((last.player + t) % p));
        }
        o += p;
        if let Some(c) = color {
            w.set(o + c as usize);
        }
        o += NUM_COLORS;
        if let Some(r) = rank {
            w.set(o + r as usize);
        }
        o += NUM_RANKS;
        for slot in 0..h {
            if last.revealed & (1 << slot) != 0 {
                w.set(o + slot);
            }
        }
        o += h;
        if let Some(i) = index {
            w.set(o + i);
        }
        o += h;
        if let Some(card) = last.card {
            w.set(o + card.index());
        }
        o += NUM_CARD_TYPES;
        if last.play_success {
            w.set(o);
        }
        if last.info_added {
            w.set(o + 1);
        }
        o += 2;
        debug_assert_eq!(o, len);
        w.skip(len);
    }

    fn v0_block(&self, state: &HanabiState, player: usize, counts: &[u8; NUM_CARD_TYPES], w: &mut Writer<'_>) {
        for (slot, kn) in state.knowledge(player).iter().enumerate() {
            let base = slot * NUM_CARD_TYPES;
            let mut total = 0.0f32;
            for (idx, &n) in counts.iter().enumerate() {
                if n > 0 && kn.is_plausible(Card::from_index(idx)) {
                    total += n as f32;
                }
            }
            if total == 0.0 {
                continue;
            }
            for (idx, &n) in counts.iter().enumerate() {
                if n > 0 && kn.is_plausible(Card::from_index(idx)) {
                    w.out[w.pos + base + idx] = n as f32 / total;
                }
            }
        }
        w.skip(self.hand_size * NUM_CARD_TYPES);
    }
}

/// Full deck minus discards and played cards.
pub fn public_counts(state: &HanabiState) -> [u8; NUM_CARD_TYPES] {
    let mut counts = full_counts();
    for (i, n) in state.discard_counts().iter().enumerate() {
        counts[i] -= n;
    }
    for (color, &top) in state.fireworks().iter().enumerate() {
        for rank in 0..top {
            counts[Card::new(color as u8, rank).index()] -= 1;
        }
    }
    counts
}

struct Writer<'a> {
    out: &'a mut [f32],
    pos: usize,
}

impl Writer<'_> {
    fn set(&mut self, offset: usize) {
        self.out[self.pos + offset] = 1.0;
    }

    fn skip(&mut self, n: usize) {
        self.pos += n;
    }

    fn thermometer(&mut self, value: usize, width: usize) {
        for i in 0..value.min(width) {
            self.set(i);
        }
        self.skip(width);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::HanabiState;

    fn own_block(enc: &Encoder, features: &[f32], slot: usize) -> Vec<f32> {
        let o = enc.own_belief_offset() + slot * NUM_CARD_TYPES;
        features[o..o + NUM_CARD_TYPES].to_vec()
    }

    #[test]
    fn dims() {
        let e = Encoder::new(2, 5);
        assert_eq!(e.num_actions(), 21);
        assert_eq!(e.dim(), 125 + 2 + 40 + 25 + 8 + 3 + 50 + 55 + 125 + 125 + 100 + 22);
        for players in 2..=5 {
            let s = HanabiState::new_game(players, 0).unwrap();
            let e = Encoder::for_state(&s);
            assert_eq!(e.encode(&s, 0, &[None]).len(), e.dim());
        }
    }

    /// Count-enumeration oracle: list every physical card the observer cannot see
    /// and tally those consistent with the slot's hints.
    fn v0_oracle(s: &HanabiState, observer: usize, slot: usize) -> Vec<f64> {
        let mut unseen: Vec<Card> = s.deck().to_vec();
        unseen.extend_from_slice(s.hand(observer));
        let kn = s.knowledge(observer)[slot];
        let mut tally = vec![0.0; NUM_CARD_TYPES];
        for c in unseen.iter().filter(|c| kn.is_plausible(**c)) {
            tally[c.index()] += 1.0;
        }
        let total: f64 = tally.iter().sum();
        tally.iter().map(|t| t / total).collect()
    }

    #[test]
    fn fresh_belief_matches_enumeration() {
        for seed in 0..20 {
            let s = HanabiState::new_game(3, seed).unwrap();
            let e = Encoder::for_state(&s);
            let f = e.encode(&s, 1, &[None]);
            for slot in 0..5 {
                let got = own_block(&e, &f, slot);
                let want = v0_oracle(&s, 1, slot);
                for (g, w) in got.iter().zip(&want) {
                    assert!((*g as f64 - w).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn rank_hint_restricts_support() {
        let mut s = HanabiState::new_game(2, 4).unwrap();
        let rank = s.hand(1)[2].rank;
        s.apply_move(HanabiMove::RevealRank { target_offset: 1, rank }).unwrap();
        let e = Encoder::for_state(&s);
        let f = e.encode(&s, 1, &[None]);
        let block = own_block(&e, &f, 2);
        let sum: f32 = block.iter().sum();
        assert!((sum - 1.0).abs() < 1e-6);
        for (idx, &p) in block.iter().enumerate() {
            if Card::from_index(idx).rank != rank {
                assert_eq!(p, 0.0);
            }
        }
        let want = v0_oracle(&s, 1, 2);
        for (g, w) in block.iter().zip(&want) {
            assert!((*g as f64 - w).abs() < 1e-6);
        }
    }

    #[test]
    fn greedy_slot_none_and_action() {
        let s = HanabiState::new_game(2, 0).unwrap();
        let e = Encoder::for_state(&s);
        let f = e.encode(&s, 0, &[None]);
        let g = &f[e.greedy_offset()..];
        assert_eq!(g.len(), 22);
        assert_eq!(g[21], 1.0);
        assert_eq!(g.iter().sum::<f32>(), 1.0);
        let f = e.encode(&s, 0, &[Some(7)]);
        let g = &f[e.greedy_offset()..];
        assert_eq!(g[7], 1.0);
        assert_eq!(g.iter().sum::<f32>(), 1.0);
    }

    #[test]
    fn broadcast_all_widens_slot() {
        let s = HanabiState::new_game(3, 0).unwrap();
        let e = Encoder::for_state(&s);
        let narrow = e.dim();
        let off = e.with_greedy(GreedySlots::Off);
        assert_eq!(off.dim(), narrow - e.greedy_width());
        assert_eq!(off.encode(&s, 0, &[]).len(), off.dim());
        let e = e.with_greedy(GreedySlots::All);
        assert_eq!(e.dim(), narrow + 2 * e.greedy_width());
        let f = e.encode(&s, 0, &[None, Some(3), None]);
        assert_eq!(f[e.greedy_offset()..].iter().sum::<f32>(), 3.0);
    }

    #[test]
    fn own_cards_are_not_visible() {
        let s = HanabiState::new_game(2, 9).unwrap();
        let mut t = s.clone();
        for slot in 0..5 {
            t.swap_with_deck(0, slot, slot);
        }
        assert_ne!(s.hand(0), t.hand(0));
        let e = Encoder::for_state(&s);
        assert_eq!(e.encode(&s, 0, &[None]), e.encode(&t, 0, &[None]));
        // the teammate does see the change
        assert_ne!(e.encode(&s, 1, &[None]), e.encode(&t, 1, &[None]));
    }
}
