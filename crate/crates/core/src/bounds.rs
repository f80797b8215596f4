//! Desk-scale limits shared by every enumeration in the crate.
//!
//! Defaults can be overridden through the `EXPANSIVITY_BOUNDS` environment
//! variable, a comma separated list of `key=value` pairs, e.g.
//! `EXPANSIVITY_BOUNDS="max_modulus=100000000,max_states=4000000"`.

use std::sync::OnceLock;

use crate::error::{Error, Result};

pub const ENV_VAR: &str = "EXPANSIVITY_BOUNDS";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bounds {
    /// Largest integer accepted by trial-division factorization.
    pub max_factor: u64,
    /// Largest modulus a counterexample level may reach.
    pub max_modulus: u64,
    /// Largest state space |X| for explicit sets and spectra.
    pub max_states: u64,
    /// Largest number of points in a polynomial or direction enumeration.
    pub max_enumeration: u64,
    /// Largest number of simplices enumerated by `volspec`.
    pub max_tuples: u64,
    /// Largest window length for return-time sets and windowed sets.
    pub max_window: u64,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            max_factor: 1_000_000_000_000,
            max_modulus: 10_000_000,
            max_states: 4_000_000,
            max_enumeration: 20_000_000,
            max_tuples: 50_000_000,
            max_window: 10_000_000,
        }
    }
}

impl Bounds {
    pub fn parse_overrides(spec: &str) -> Result<Self> {
        let mut bounds = Bounds::default();
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bound override `{item}` is not key=value")))?;
            let value: u64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bound override `{item}` has a non-integer value")))?;
            if value == 0 {
                return Err(Error::Parse(format!("bound override `{item}` must be positive")));
            }
            match key.trim() {
                "max_factor" => bounds.max_factor = value,
                "max_modulus" => bounds.max_modulus = value,
                "max_states" => bounds.max_states = value,
                "max_enumeration" => bounds.max_enumeration = value,
                "max_tuples" => bounds.max_tuples = value,
                "max_window" => bounds.max_window = value,
                other => return Err(Error::Parse(format!("unknown bound `{other}`"))),
            }
        }
        Ok(bounds)
    }

    pub fn from_env() -> Result<Self> {
        match std::env::var(ENV_VAR) {
            Ok(spec) => Self::parse_overrides(&spec),
            Err(_) => Ok(Bounds::default()),
        }
    }

    /// Process-wide bounds, read from the environment on first use.
    /// A malformed override falls back to the defaults; front ends should
    /// validate with [`Bounds::from_env`] first.
    pub fn global() -> &'static Bounds {
        static GLOBAL: OnceLock<Bounds> = OnceLock::new();
        GLOBAL.get_or_init(|| Bounds::from_env().unwrap_or_default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_parse() {
        let b = Bounds::parse_overrides("max_modulus=5, max_states=7").unwrap();
        assert_eq!(b.max_modulus, 5);
        assert_eq!(b.max_states, 7);
        assert_eq!(b.max_factor, Bounds::default().max_factor);
    }

    #[test]
    fn overrides_reject_garbage() {
        assert!(Bounds::parse_overrides("max_modulus").is_err());
        assert!(Bounds::parse_overrides("nope=3").is_err());
        assert!(Bounds::parse_overrides("max_states=0").is_err());
    }
}
