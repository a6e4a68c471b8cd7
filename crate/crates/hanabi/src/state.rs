use rand::seq::SliceRandom;
use sad_core::RngStream;
use thiserror::Error;

use crate::card::{full_deck, Card, CardKnowledge, DECK_SIZE, NUM_CARD_TYPES, NUM_COLORS, NUM_RANKS};
use crate::moves::{HanabiMove, MoveSpace};

pub const MAX_INFO_TOKENS: u8 = 8;
pub const MAX_LIFE_TOKENS: u8 = 3;
pub const DEFAULT_MAX_STEPS: usize = 80;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HanabiError {
    #[error("player count {0} outside [2, 5]")]
    PlayerCount(usize),
    #[error("episode finished")]
    Terminal,
    #[error("rule violation: {0}")]
    RuleViolation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GameConfig {
    pub players: usize,
    /// Episode cap; reaching it ends the episode as truncated.
    pub max_steps: usize,
}

impl GameConfig {
    pub fn new(players: usize) -> Result<Self, HanabiError> {
        if !(2..=5).contains(&players) {
            return Err(HanabiError::PlayerCount(players));
        }
        Ok(Self {
            players,
            max_steps: DEFAULT_MAX_STEPS,
        })
    }

    pub fn hand_size(&self) -> usize {
        if self.players <= 3 {
            5
        } else {
            4
        }
    }

    pub fn move_space(&self) -> MoveSpace {
        MoveSpace::new(self.players, self.hand_size())
    }
}

/// Public record of the most recent move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LastMove {
    pub player: usize,
    pub mv: HanabiMove,
    /// Card played or discarded.
    pub card: Option<Card>,
    pub play_success: bool,
    /// A completed firework returned an information token.
    pub info_added: bool,
    /// Bit `i` set when a hint touched the target's slot `i`.
    pub revealed: u8,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoveOutcome {
    pub reward: f64,
    pub done: bool,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HanabiState {
    cfg: GameConfig,
    seed: u64,
    /// Draw pile; the next card drawn is the last element.
    deck: Vec<Card>,
    hands: Vec<Vec<Card>>,
    knowledge: Vec<Vec<CardKnowledge>>,
    fireworks: [u8; NUM_COLORS],
    info_tokens: u8,
    life_tokens: u8,
    discards: Vec<Card>,
    current_player: usize,
    last_move: Option<LastMove>,
    /// Moves taken since the deck ran out.
    turns_after_deck_empty: Option<usize>,
    steps: usize,
    terminal: bool,
    truncated: bool,
    history: Vec<usize>,
}

impl HanabiState {
    /// Shuffle a fresh deck with the stream `(seed, 0)` and deal.
    pub fn new_game(players: usize, seed: u64) -> Result<Self, HanabiError> {
        Self::with_config(GameConfig::new(players)?, seed)
    }

    pub fn with_config(cfg: GameConfig, seed: u64) -> Result<Self, HanabiError> {
        GameConfig::new(cfg.players)?;
        let mut deck = full_deck();
        deck.shuffle(&mut RngStream::new(seed, 0));
        Ok(Self::from_deck(cfg, seed, deck))
    }

    /// Deal from an explicit draw pile (top card last).
    pub fn from_deck(cfg: GameConfig, seed: u64, mut deck: Vec<Card>) -> Self {
        let hand_size = cfg.hand_size();
        let mut hands = vec![Vec::with_capacity(hand_size); cfg.players];
        for _ in 0..hand_size {
            for hand in hands.iter_mut() {
                hand.push(deck.pop().expect("deck holds enough cards to deal"));
            }
        }
        let knowledge = vec![vec![CardKnowledge::default(); hand_size]; cfg.players];
        Self {
            cfg,
            seed,
            deck,
            hands,
            knowledge,
            fireworks: [0; NUM_COLORS],
            info_tokens: MAX_INFO_TOKENS,
            life_tokens: MAX_LIFE_TOKENS,
            discards: Vec::new(),
            current_player: 0,
            last_move: None,
            turns_after_deck_empty: None,
            steps: 0,
            terminal: false,
            truncated: false,
            history: Vec::new(),
        }
    }

    pub fn config(&self) -> GameConfig {
        self.cfg
    }

    pub fn players(&self) -> usize {
        self.cfg.players
    }

    pub fn hand_size(&self) -> usize {
        self.cfg.hand_size()
    }

    pub fn move_space(&self) -> MoveSpace {
        self.cfg.move_space()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn deck(&self) -> &[Card] {
        &self.deck
    }

    pub fn hand(&self, player: usize) -> &[Card] {
        &self.hands[player]
    }

    pub fn knowledge(&self, player: usize) -> &[CardKnowledge] {
        &self.knowledge[player]
    }

    pub fn fireworks(&self) -> [u8; NUM_COLORS] {
        self.fireworks
    }

    pub fn info_tokens(&self) -> u8 {
        self.info_tokens
    }

    pub fn life_tokens(&self) -> u8 {
        self.life_tokens
    }

    pub fn discards(&self) -> &[Card] {
        &self.discards
    }

    pub fn current_player(&self) -> usize {
        self.current_player
    }

    pub fn last_move(&self) -> Option<&LastMove> {
        self.last_move.as_ref()
    }

    pub fn turns_after_deck_empty(&self) -> Option<usize> {
        self.turns_after_deck_empty
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_terminal(&self) -> bool {
        self.terminal || self.truncated
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    pub fn bombed_out(&self) -> bool {
        self.life_tokens == 0
    }

    /// Move ids applied so far.
    pub fn history(&self) -> &[usize] {
        &self.history
    }

    /// Fireworks total, or 0 after losing all life tokens.
    pub fn score(&self) -> u32 {
        if self.bombed_out() {
            0
        } else {
            self.fireworks_total()
        }
    }

    pub fn fireworks_total(&self) -> u32 {
        self.fireworks.iter().map(|&f| f as u32).sum()
    }

    pub fn discard_counts(&self) -> [u8; NUM_CARD_TYPES] {
        let mut counts = [0u8; NUM_CARD_TYPES];
        for c in &self.discards {
            counts[c.index()] += 1;
        }
        counts
    }

    /// Every card of the game in one multiset: deck, hands, discards and the cards
    /// stacked on the fireworks.
    pub fn card_census(&self) -> [u8; NUM_CARD_TYPES] {
        let mut counts = self.discard_counts();
        for c in self.deck.iter().chain(self.hands.iter().flatten()) {
            counts[c.index()] += 1;
        }
        for (color, &top) in self.fireworks.iter().enumerate() {
            for rank in 0..top {
                counts[Card::new(color as u8, rank).index()] += 1;
            }
        }
        counts
    }

    /// Check the structural invariants: card conservation, token bounds, firework
    /// range and hand sizes. Returns a description of the first violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.card_census() != crate::card::full_counts() {
            return Err("card census differs from the full deck".into());
        }
        if self.info_tokens > MAX_INFO_TOKENS {
            return Err(format!("{} information tokens", self.info_tokens));
        }
        if self.life_tokens > MAX_LIFE_TOKENS {
            return Err(format!("{} life tokens", self.life_tokens));
        }
        if let Some(f) = self.fireworks.iter().find(|&&f| f as usize > NUM_RANKS) {
            return Err(format!("firework at {f}"));
        }
        if self.score() > crate::card::MAX_SCORE {
            return Err(format!("score {}", self.score()));
        }
        for (p, hand) in self.hands.iter().enumerate() {
            if hand.len() > self.hand_size() || hand.len() != self.knowledge[p].len() {
                return Err(format!("player {p} holds {} cards", hand.len()));
            }
            if !self.deck.is_empty() && hand.len() != self.hand_size() {
                return Err(format!("player {p} short a card with a non-empty deck"));
            }
            for (c, k) in hand.iter().zip(&self.knowledge[p]) {
                if !k.is_plausible(*c) {
                    return Err(format!("player {p} knowledge excludes its own {c}"));
                }
            }
        }
        Ok(())
    }

    fn target(&self, offset: usize) -> usize {
        (self.current_player + offset) % self.cfg.players
    }

    fn hint_touches(&self, mv: HanabiMove) -> u8 {
        let mut bits = 0u8;
        match mv {
            HanabiMove::RevealColor { target_offset, color } => {
                for (i, c) in self.hands[self.target(target_offset)].iter().enumerate() {
                    if c.color == color {
                        bits |= 1 << i;
                    }
                }
            }
            HanabiMove::RevealRank { target_offset, rank } => {
                for (i, c) in self.hands[self.target(target_offset)].iter().enumerate() {
                    if c.rank == rank {
                        bits |= 1 << i;
                    }
                }
            }
            _ => {}
        }
        bits
    }

    /// The game ended by the rules (not merely by the step cap).
    pub fn ended_by_rules(&self) -> bool {
        self.terminal
    }

    pub fn is_legal(&self, mv: HanabiMove) -> bool {
        !self.is_terminal() && self.rules_allow(mv)
    }

    /// Moves the rules would allow in a state cut by the step cap, used to
    /// bootstrap a value estimate through the cut. All false after a rules ending.
    pub fn legal_moves_ignoring_cap(&self) -> Vec<bool> {
        let space = self.move_space();
        (0..space.num_moves())
            .map(|id| !self.terminal && self.rules_allow(space.decode(id).expect("id within range")))
            .collect()
    }

    fn rules_allow(&self, mv: HanabiMove) -> bool {
        let hand = &self.hands[self.current_player];
        match mv {
            HanabiMove::Discard { index } => {
                index < hand.len() && self.info_tokens < MAX_INFO_TOKENS
            }
            HanabiMove::Play { index } => index < hand.len(),
            HanabiMove::RevealColor { target_offset, color } => {
                (1..self.cfg.players).contains(&target_offset)
                    && (color as usize) < NUM_COLORS
                    && self.info_tokens > 0
                    && self.hint_touches(mv) != 0
            }
            HanabiMove::RevealRank { target_offset, rank } => {
                (1..self.cfg.players).contains(&target_offset)
                    && (rank as usize) < NUM_RANKS
                    && self.info_tokens > 0
                    && self.hint_touches(mv) != 0
            }
        }
    }

    /// Legal-move mask over the flat move ids of this player count.
    pub fn legal_moves(&self) -> Result<Vec<bool>, HanabiError> {
        if self.is_terminal() {
            return Err(HanabiError::Terminal);
        }
        let space = self.move_space();
        Ok((0..space.num_moves())
            .map(|id| self.is_legal(space.decode(id).expect("id within range")))
            .collect())
    }

    pub fn apply_move_id(&mut self, id: usize) -> Result<MoveOutcome, HanabiError> {
        let mv = self
            .move_space()
            .decode(id)
            .ok_or_else(|| HanabiError::RuleViolation(format!("move id {id} out of range")))?;
        self.apply_move(mv)
    }

    pub fn apply_move(&mut self, mv: HanabiMove) -> Result<MoveOutcome, HanabiError> {
        if self.is_terminal() {
            return Err(HanabiError::Terminal);
        }
        if !self.is_legal(mv) {
            return Err(HanabiError::RuleViolation(self.illegal_reason(mv)));
        }
        let player = self.current_player;
        let deck_was_empty = self.deck.is_empty();
        let mut reward = 0.0;
        let mut last = LastMove {
            player,
            mv,
            card: None,
            play_success: false,
            info_added: false,
            revealed: 0,
        };

        match mv {
            HanabiMove::Play { index } => {
                let card = self.remove_card(player, index);
                last.card = Some(card);
                let top = &mut self.fireworks[card.color as usize];
                if card.rank == *top {
                    *top += 1;
                    reward += 1.0;
                    last.play_success = true;
                    if *top as usize == NUM_RANKS && self.info_tokens < MAX_INFO_TOKENS {
                        self.info_tokens += 1;
                        last.info_added = true;
                    }
                } else {
                    self.life_tokens -= 1;
                    self.discards.push(card);
                }
            }
            HanabiMove::Discard { index } => {
                let card = self.remove_card(player, index);
                last.card = Some(card);
                self.discards.push(card);
                self.info_tokens += 1;
            }
            HanabiMove::RevealColor { target_offset, color } => {
                let target = self.target(target_offset);
                last.revealed = self.hint_touches(mv);
                for (k, c) in self.knowledge[target].iter_mut().zip(&self.hands[target]) {
                    k.apply_color_hint(color, c.color == color);
                }
                self.info_tokens -= 1;
            }
            HanabiMove::RevealRank { target_offset, rank } => {
                let target = self.target(target_offset);
                last.revealed = self.hint_touches(mv);
                for (k, c) in self.knowledge[target].iter_mut().zip(&self.hands[target]) {
                    k.apply_rank_hint(rank, c.rank == rank);
                }
                self.info_tokens -= 1;
            }
        }

        self.steps += 1;
        self.history.push(self.move_space().id(mv));
        self.last_move = Some(last);

        if deck_was_empty {
            let t = self.turns_after_deck_empty.get_or_insert(0);
            *t += 1;
        } else if self.deck.is_empty() {
            self.turns_after_deck_empty = Some(0);
        }

        if self.life_tokens == 0 {
            self.terminal = true;
            // forfeit everything collected so far
            reward -= self.fireworks_total() as f64;
        } else if self.fireworks_total() as usize == NUM_COLORS * NUM_RANKS {
            self.terminal = true;
        } else if self.turns_after_deck_empty == Some(self.cfg.players) {
            self.terminal = true;
        } else if self.steps >= self.cfg.max_steps {
            self.truncated = true;
        }

        self.current_player = (player + 1) % self.cfg.players;
        Ok(MoveOutcome {
            reward,
            done: self.is_terminal(),
            truncated: self.truncated,
        })
    }

    fn remove_card(&mut self, player: usize, index: usize) -> Card {
        let card = self.hands[player].remove(index);
        self.knowledge[player].remove(index);
        if let Some(next) = self.deck.pop() {
            self.hands[player].push(next);
            self.knowledge[player].push(CardKnowledge::default());
        }
        card
    }

    fn illegal_reason(&self, mv: HanabiMove) -> String {
        let hand_len = self.hands[self.current_player].len();
        match mv {
            HanabiMove::Discard { index } if index >= hand_len => {
                format!("discard: no card in slot {index}")
            }
            HanabiMove::Discard { .. } => "discard: information tokens are full".into(),
            HanabiMove::Play { index } => format!("play: no card in slot {index}"),
            HanabiMove::RevealColor { target_offset, .. } | HanabiMove::RevealRank { target_offset, .. }
                if !(1..self.cfg.players).contains(&target_offset) =>
            {
                format!("hint: invalid target offset {target_offset}")
            }
            _ if self.info_tokens == 0 => "hint: no information tokens".into(),
            _ => "hint: touches no card in the target's hand".into(),
        }
    }

    /// Hidden-information edit used by tests: replace a card in a hand.
    pub fn set_hand_card(&mut self, player: usize, index: usize, card: Card) {
        self.hands[player][index] = card;
    }

    /// Swap a hand card with a card in the draw pile, keeping the census intact.
    pub fn swap_with_deck(&mut self, player: usize, index: usize, deck_index: usize) {
        std::mem::swap(&mut self.hands[player][index], &mut self.deck[deck_index]);
    }

    /// Test hook for building specific positions.
    pub fn set_tokens(&mut self, info: u8, life: u8) {
        assert!(info <= MAX_INFO_TOKENS && life <= MAX_LIFE_TOKENS && life > 0);
        self.info_tokens = info;
        self.life_tokens = life;
    }

    /// Test hook: stack the firework of `color` up to `top` and move those cards
    /// out of the deck so the census stays consistent.
    pub fn set_firework(&mut self, color: u8, top: u8) -> Result<(), HanabiError> {
        let current = self.fireworks[color as usize];
        for rank in current..top {
            let card = Card::new(color, rank);
            let pos = self.deck.iter().position(|c| *c == card).ok_or_else(|| {
                HanabiError::RuleViolation(format!("{card} not in the draw pile"))
            })?;
            self.deck.remove(pos);
        }
        self.fireworks[color as usize] = top.max(current);
        Ok(())
    }

    /// Test hook: move a card from the deck to the discard pile.
    pub fn discard_from_deck(&mut self, card: Card) -> Result<(), HanabiError> {
        let pos = self
            .deck
            .iter()
            .position(|c| *c == card)
            .ok_or_else(|| HanabiError::RuleViolation(format!("{card} not in the draw pile")))?;
        self.deck.remove(pos);
        self.discards.push(card);
        Ok(())
    }
}

pub fn deck_size_after_deal(players: usize) -> usize {
    let hand = if players <= 3 { 5 } else { 4 };
    DECK_SIZE - players * hand
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::card::full_counts;

    fn deck_from_top(top: &[Card]) -> Vec<Card> {
        // Put `top` on the top of the pile (in draw order) and the rest underneath.
        let mut rest = full_deck();
        for c in top {
            let pos = rest.iter().position(|x| x == c).unwrap();
            rest.remove(pos);
        }
        let mut deck = rest;
        deck.extend(top.iter().rev());
        deck
    }

    #[test]
    fn deal_sizes() {
        let s = HanabiState::new_game(2, 1).unwrap();
        assert_eq!(s.hand(0).len(), 5);
        assert_eq!(s.deck().len(), 40);
        let s = HanabiState::new_game(5, 1).unwrap();
        assert_eq!(s.hand(4).len(), 4);
        assert_eq!(s.deck().len(), 30);
        assert_eq!(deck_size_after_deal(3), 35);
        assert_eq!(s.card_census(), full_counts());
    }

    #[test]
    fn deterministic_deal() {
        assert_eq!(HanabiState::new_game(3, 99).unwrap(), HanabiState::new_game(3, 99).unwrap());
        assert_ne!(HanabiState::new_game(3, 99).unwrap(), HanabiState::new_game(3, 98).unwrap());
    }

    #[test]
    fn player_count_checked() {
        assert_eq!(HanabiState::new_game(1, 0).unwrap_err(), HanabiError::PlayerCount(1));
        assert_eq!(HanabiState::new_game(6, 0).unwrap_err(), HanabiError::PlayerCount(6));
    }

    fn g(r: u8) -> Card {
        Card::new(0, r)
    }

    #[test]
    fn play_success_and_failure() {
        // player 0 holds G1 G3 ...
        let top = [g(0), Card::new(1, 0), g(2), Card::new(1, 1), Card::new(2, 0), Card::new(2, 1), Card::new(3, 0), Card::new(3, 1), Card::new(4, 0), Card::new(4, 1)];
        let cfg = GameConfig::new(2).unwrap();
        let mut s = HanabiState::from_deck(cfg, 0, deck_from_top(&top));
        assert_eq!(s.hand(0)[0], g(0));
        assert_eq!(s.hand(0)[1], g(2));
        let out = s.apply_move(HanabiMove::Play { index: 0 }).unwrap();
        assert_eq!(out.reward, 1.0);
        assert_eq!(s.fireworks()[0], 1);
        // player 1 discards is illegal at 8 tokens; hint instead
        assert!(!s.is_legal(HanabiMove::Discard { index: 0 }));
        s.apply_move(HanabiMove::RevealRank { target_offset: 1, rank: 2 }).unwrap();
        // G3 is now slot 0 for player 0 (slot 0 was removed, others shifted)
        assert_eq!(s.hand(0)[0], g(2));
        assert_eq!(s.knowledge(0)[0].rank, Some(2));
        let out = s.apply_move(HanabiMove::Play { index: 0 }).unwrap();
        assert_eq!(out.reward, 0.0);
        assert_eq!(s.life_tokens(), 2);
        assert_eq!(s.discards(), &[g(2)]);
        assert_eq!(s.card_census(), full_counts());
    }

    #[test]
    fn hints_record_negative_information() {
        let mut s = HanabiState::new_game(2, 5).unwrap();
        let target_hand = s.hand(1).to_vec();
        let color = target_hand[0].color;
        s.apply_move(HanabiMove::RevealColor { target_offset: 1, color }).unwrap();
        assert_eq!(s.info_tokens(), 7);
        for (k, c) in s.knowledge(1).iter().zip(&target_hand) {
            if c.color == color {
                assert_eq!(k.color, Some(color));
            } else {
                assert!(!k.color_plausible[color as usize]);
                assert_eq!(k.color, None);
            }
            assert!(k.is_plausible(*c));
        }
        let last = s.last_move().unwrap();
        assert_eq!(last.revealed.count_ones() as usize, target_hand.iter().filter(|c| c.color == color).count());
    }

    #[test]
    fn hint_tokens_and_targets() {
        let mut s = HanabiState::new_game(2, 5).unwrap();
        s.set_tokens(0, 3);
        let mask = s.legal_moves().unwrap();
        assert!(mask[10..].iter().all(|&m| !m));
        assert!(mask[..10].iter().all(|&m| m));
        let err = s.apply_move(HanabiMove::RevealRank { target_offset: 1, rank: 0 }).unwrap_err();
        assert!(matches!(err, HanabiError::RuleViolation(_)));
        s.set_tokens(8, 3);
        let mask = s.legal_moves().unwrap();
        assert!(mask[..5].iter().all(|&m| !m));
        assert_eq!(mask.len(), 20);
    }

    #[test]
    fn bomb_out_forfeits_score() {
        let cfg = GameConfig::new(2).unwrap();
        let mut s = HanabiState::new_game(2, 3).unwrap();
        s = HanabiState::from_deck(cfg, 0, s.deck.iter().chain(s.hands.iter().flatten()).copied().collect());
        // Build a position with 7 points and one life left.
        for (color, top) in [(0u8, 3u8), (1, 2), (2, 2)] {
            s.set_firework(color, top).unwrap();
        }
        s.set_tokens(8, 1);
        assert_eq!(s.score(), 7);
        // find an unplayable card for player 0
        let fw = s.fireworks();
        let idx = s
            .hand(0)
            .iter()
            .position(|c| c.rank != fw[c.color as usize])
            .expect("some unplayable card");
        let out = s.apply_move(HanabiMove::Play { index: idx }).unwrap();
        assert_eq!(out.reward, -7.0);
        assert!(out.done && !out.truncated);
        assert_eq!(s.score(), 0);
        assert_eq!(s.legal_moves().unwrap_err(), HanabiError::Terminal);
        assert_eq!(s.apply_move(HanabiMove::Play { index: 0 }).unwrap_err(), HanabiError::Terminal);
    }

    #[test]
    fn completing_a_firework_returns_a_token() {
        let top = [g(4), Card::new(1, 0), Card::new(1, 1), Card::new(1, 2), Card::new(1, 3), Card::new(2, 0), Card::new(2, 1), Card::new(2, 2), Card::new(2, 3), Card::new(3, 0)];
        let cfg = GameConfig::new(2).unwrap();
        let mut s = HanabiState::from_deck(cfg, 0, deck_from_top(&top));
        s.set_firework(0, 4).unwrap();
        s.set_tokens(5, 3);
        let out = s.apply_move(HanabiMove::Play { index: 0 }).unwrap();
        assert_eq!(out.reward, 1.0);
        assert_eq!(s.info_tokens(), 6);
        assert!(s.last_move().unwrap().info_added);
    }

    #[test]
    fn deck_exhaustion_gives_each_player_one_turn() {
        let cfg = GameConfig { players: 2, max_steps: 1000 };
        let mut s = HanabiState::with_config(cfg, 11).unwrap();
        // discard/hint alternately until the deck is empty
        while !s.deck().is_empty() {
            let mv = if s.info_tokens() < MAX_INFO_TOKENS {
                HanabiMove::Discard { index: 0 }
            } else {
                let c = s.hand((s.current_player() + 1) % 2)[0];
                HanabiMove::RevealColor { target_offset: 1, color: c.color }
            };
            let out = s.apply_move(mv).unwrap();
            assert!(!out.done || s.deck().is_empty());
        }
        assert_eq!(s.turns_after_deck_empty(), Some(0));
        let out = s.apply_move(HanabiMove::Play { index: 0 }).unwrap();
        if s.life_tokens() > 0 {
            assert!(!out.done);
            let out = s.apply_move(HanabiMove::Play { index: 0 }).unwrap();
            assert!(out.done);
        }
    }

    #[test]
    fn truncation_at_step_cap() {
        let cfg = GameConfig { players: 2, max_steps: 3 };
        let mut s = HanabiState::with_config(cfg, 2).unwrap();
        for _ in 0..2 {
            let c = s.hand((s.current_player() + 1) % 2)[0];
            let out = s.apply_move(HanabiMove::RevealRank { target_offset: 1, rank: c.rank }).unwrap();
            assert!(!out.done);
        }
        let c = s.hand((s.current_player() + 1) % 2)[0];
        let out = s.apply_move(HanabiMove::RevealRank { target_offset: 1, rank: c.rank }).unwrap();
        assert!(out.done && out.truncated);
        assert_eq!(out.reward, 0.0);
    }
}
