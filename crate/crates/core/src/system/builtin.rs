use super::{DiagonalSystem, SystemError};

const BUILTINS: [(&str, &str); 6] = [
    ("constant2", include_str!("../../systems/constant2.toml")),
    (
        "order0_decoupled",
        include_str!("../../systems/order0_decoupled.toml"),
    ),
    ("lindeg2", include_str!("../../systems/lindeg2.toml")),
    ("shifted3", include_str!("../../systems/shifted3.toml")),
    ("ratio2", include_str!("../../systems/ratio2.toml")),
    (
        "nonsemiham3",
        include_str!("../../systems/nonsemiham3.toml"),
    ),
];

pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTINS.iter().map(|(name, _)| *name)
}

/// One of the shipped example systems by name.
pub fn builtin(name: &str) -> Result<DiagonalSystem, SystemError> {
    let (_, text) = BUILTINS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| SystemError::UnknownBuiltin(name.to_string()))?;
    DiagonalSystem::from_toml(text)
}

/// Source text of a built-in.
pub fn builtin_source(name: &str) -> Option<&'static str> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}
