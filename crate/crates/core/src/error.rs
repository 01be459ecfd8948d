use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite field value after kick {kick} (t = {time}); the time step is probably too large")]
    NonFinite { kick: usize, time: f64 },

    #[error("need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("grid of {n_points} points cannot resolve modes up to l = {l_max} (need n_points >= 8 * l_max)")]
    GridTooCoarse { n_points: usize, l_max: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
