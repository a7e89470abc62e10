//! The four games that ship with the crate, embedded at compile time.

use std::sync::OnceLock;

use super::{parse, GameSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BuiltinGame {
    MyAliensV1,
    MyAliensV2,
    Roadrash,
    SpaceInvaders,
}

impl BuiltinGame {
    pub const ALL: [BuiltinGame; 4] = [
        BuiltinGame::MyAliensV1,
        BuiltinGame::MyAliensV2,
        BuiltinGame::Roadrash,
        BuiltinGame::SpaceInvaders,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinGame::MyAliensV1 => "myaliensv1",
            BuiltinGame::MyAliensV2 => "myaliensv2",
            BuiltinGame::Roadrash => "roadrash",
            BuiltinGame::SpaceInvaders => "spaceinvaders",
        }
    }

    pub fn from_name(name: &str) -> Option<BuiltinGame> {
        BuiltinGame::ALL.iter().copied().find(|g| g.name() == name)
    }

    fn source(self) -> &'static str {
        match self {
            BuiltinGame::MyAliensV1 => include_str!("../../specs/myaliensv1.game"),
            BuiltinGame::MyAliensV2 => include_str!("../../specs/myaliensv2.game"),
            BuiltinGame::Roadrash => include_str!("../../specs/roadrash.game"),
            BuiltinGame::SpaceInvaders => include_str!("../../specs/spaceinvaders.game"),
        }
    }
}

impl std::str::FromStr for BuiltinGame {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BuiltinGame::from_name(s).ok_or_else(|| {
            format!(
                "unknown game `{s}` (expected one of: {})",
                builtin_names().join(", ")
            )
        })
    }
}

pub fn builtin_names() -> Vec<&'static str> {
    BuiltinGame::ALL.iter().map(|g| g.name()).collect()
}

/// Parsed spec for a built-in game. Parsed once, cached for the process.
pub fn builtin_spec(game: BuiltinGame) -> &'static GameSpec {
    static CACHE: [OnceLock<GameSpec>; 4] = [
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
    ];
    let slot = match game {
        BuiltinGame::MyAliensV1 => &CACHE[0],
        BuiltinGame::MyAliensV2 => &CACHE[1],
        BuiltinGame::Roadrash => &CACHE[2],
        BuiltinGame::SpaceInvaders => &CACHE[3],
    };
    slot.get_or_init(|| {
        parse(game.source())
            .unwrap_or_else(|e| panic!("embedded spec {} is broken: {e}", game.name()))
    })
}
