//! Hanabi for 2 to 5 players.
//!
//! The engine follows the usual learning-environment conventions: hands of 5 cards
//! for 2-3 players and 4 for 4-5, discarding is illegal with all 8 information
//! tokens, completing a firework returns a token, hints must touch at least one
//! card, and the game ends when the last life token is lost, all fireworks are
//! complete, or every player has taken one more turn after the deck ran out.
//! Losing the last life token is scored as a terminal reward equal to minus the
//! points collected so far, so the undiscounted episode return always equals the
//! final score.

pub mod aux;
pub mod card;
pub mod encode;
pub mod env;
pub mod moves;
pub mod record;
pub mod state;

pub use aux::{aux_targets, CardStatus};
pub use card::{Card, NUM_COLORS, NUM_RANKS};
pub use encode::{Encoder, GreedySlots, ENCODER_VERSION};
pub use env::{HanabiEnv, HanabiObservation};
pub use moves::{HanabiMove, MoveSpace};
pub use state::{GameConfig, HanabiError, HanabiState, MoveOutcome};
