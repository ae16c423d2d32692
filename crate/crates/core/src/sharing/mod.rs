//! Shamir sharing, verifiable sharing and reconstruction.

pub mod bivariate;
pub mod open;
pub mod shamir;
pub mod vss;

use thiserror::Error;

pub use bivariate::Bivariate;
pub use open::{open_to, vss_reconstruct};
pub use shamir::{abscissa, abscissas, shamir_deal, shamir_reconstruct, ShareSet};
pub use vss::{vss_rounds, vss_share, VssBatch, VssDealing, VssOutcome, VssTranscript};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SharingError {
    #[error("{recipients} recipients cannot hold a threshold-{threshold} sharing (need 3t+1)")]
    TooFewRecipients { recipients: usize, threshold: usize },
    #[error("shares do not decode to a degree-{threshold} polynomial")]
    DecodingFailure { threshold: usize },
    #[error("share sets use different recipients or thresholds")]
    MismatchedShareSets,
}
