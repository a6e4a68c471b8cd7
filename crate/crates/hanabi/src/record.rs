//! Game replay files: the seed and the move ids, enough to rebuild any game.
//!
//! ```text
//! hanabi-replay 1
//! players 2
//! seed 17
//! moves 12 3 0 7
//! ```

use std::path::Path;

use crate::state::{HanabiError, HanabiState, MoveOutcome};

const MAGIC: &str = "hanabi-replay 1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameRecord {
    pub players: usize,
    pub seed: u64,
    pub moves: Vec<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum RecordError {
    #[error("replay parse error: {0}")]
    Parse(String),
    #[error("replay diverged at move {index}: {source}")]
    Replay { index: usize, source: HanabiError },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl GameRecord {
    pub fn from_state(state: &HanabiState) -> Self {
        Self {
            players: state.players(),
            seed: state.seed(),
            moves: state.history().to_vec(),
        }
    }

    pub fn to_text(&self) -> String {
        let moves: Vec<String> = self.moves.iter().map(|m| m.to_string()).collect();
        format!(
            "{MAGIC}\nplayers {}\nseed {}\nmoves {}\n",
            self.players,
            self.seed,
            moves.join(" ")
        )
    }

    pub fn parse(text: &str) -> Result<Self, RecordError> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        if lines.next() != Some(MAGIC) {
            return Err(RecordError::Parse(format!("missing header `{MAGIC}`")));
        }
        let mut field = |name: &str| -> Result<String, RecordError> {
            let line = lines
                .next()
                .ok_or_else(|| RecordError::Parse(format!("missing `{name}` line")))?;
            let rest = line
                .strip_prefix(name)
                .ok_or_else(|| RecordError::Parse(format!("expected `{name}`, got `{line}`")))?;
            Ok(rest.trim().to_string())
        };
        let bad = |what: &str, v: &str| RecordError::Parse(format!("bad {what} `{v}`"));
        let players = field("players")?;
        let players = players.parse().map_err(|_| bad("player count", &players))?;
        let seed = field("seed")?;
        let seed = seed.parse().map_err(|_| bad("seed", &seed))?;
        let moves = field("moves")?
            .split_whitespace()
            .map(|m| m.parse().map_err(|_| bad("move id", m)))
            .collect::<Result<_, _>>()?;
        Ok(Self { players, seed, moves })
    }

    pub fn save(&self, path: &Path) -> Result<(), RecordError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, RecordError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Re-run the game; returns the final state and every move outcome.
    pub fn replay(&self) -> Result<(HanabiState, Vec<MoveOutcome>), RecordError> {
        let mut state = HanabiState::new_game(self.players, self.seed)
            .map_err(|source| RecordError::Replay { index: 0, source })?;
        let mut outcomes = Vec::with_capacity(self.moves.len());
        for (index, &id) in self.moves.iter().enumerate() {
            let out = state
                .apply_move_id(id)
                .map_err(|source| RecordError::Replay { index, source })?;
            outcomes.push(out);
        }
        Ok((state, outcomes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let r = GameRecord {
            players: 3,
            seed: 42,
            moves: vec![10, 0, 7],
        };
        assert_eq!(GameRecord::parse(&r.to_text()).unwrap(), r);
        let empty = GameRecord { players: 2, seed: 0, moves: vec![] };
        assert_eq!(GameRecord::parse(&empty.to_text()).unwrap(), empty);
    }

    #[test]
    fn parse_errors() {
        assert!(GameRecord::parse("").is_err());
        assert!(GameRecord::parse("hanabi-replay 1\nplayers x\nseed 1\nmoves\n").is_err());
        assert!(GameRecord::parse("hanabi-replay 1\nplayers 2\nseed 1\nmoves 1 q\n").is_err());
    }

    #[test]
    fn illegal_replay_reports_index() {
        // discarding at 8 tokens is illegal, so move id 0 fails immediately
        let r = GameRecord { players: 2, seed: 1, moves: vec![0] };
        match r.replay() {
            Err(RecordError::Replay { index: 0, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
