//! Heavyweight SMPC inside one quorum.
//!
//! A session runs among the members of a single quorum, one role per member.
//! Values are held in bivariate form: role `i` keeps a row polynomial of a
//! symmetric bivariate `G` with `G(0, 0)` the secret, so every share is
//! itself shared among the other roles. Linear operations are local, values
//! owned by other quorums are imported by verified resharing, and products
//! use verified product dealings (see [`multiply`]).
//!
//! Public values the good roles agree on are evaluated once, from the view
//! of the first good role.

mod gate;
mod import;
mod mult;

use thiserror::Error;

pub use gate::{gate_rounds, mpc_run, ChildInput, GateOutcome};
pub use import::{import, import_rounds};
pub use mult::{multiply, multiply_rounds};

use crate::agreement::{fault_bound, AgreementError};
use crate::decode::DecodeError;
use crate::field::{Fe, Field};
use crate::poly::Polynomial;
use crate::sharing::{abscissas, open_to, Bivariate, SharingError};
use crate::simnet::{MsgKind, Network, PlayerId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MpcError {
    #[error("{bad} of {roles} roles are bad, at least a third")]
    ThresholdViolated { bad: usize, roles: usize },
    #[error("a session needs at least 4 roles, got {0}")]
    TooFewRoles(usize),
    #[error("share lists belong to different role sets")]
    MismatchedRoleSets,
    #[error("no redundant copy of an input reached the majority threshold")]
    NoMajority,
    #[error(transparent)]
    Agreement(#[from] AgreementError),
    #[error(transparent)]
    Decoding(#[from] DecodeError),
    #[error(transparent)]
    Sharing(#[from] SharingError),
}

/// A value shared among `members`; `rows[i]` belongs to role `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shared {
    members: Vec<PlayerId>,
    rows: Vec<Polynomial>,
}

impl Shared {
    pub fn from_rows(members: Vec<PlayerId>, rows: Vec<Polynomial>) -> Self {
        assert_eq!(members.len(), rows.len(), "one row per member");
        Shared { members, rows }
    }

    /// The public constant `c`: every row is the constant polynomial.
    pub fn constant(members: &[PlayerId], c: Fe) -> Self {
        Shared { members: members.to_vec(), rows: vec![Polynomial::constant(c); members.len()] }
    }

    /// Rows of `b` handed to `members` directly, without any network.
    pub fn from_bivariate(members: &[PlayerId], b: &Bivariate) -> Self {
        let xs = abscissas(b.field(), members.len());
        Shared { members: members.to_vec(), rows: xs.iter().map(|x| b.row(*x)).collect() }
    }

    pub fn members(&self) -> &[PlayerId] {
        &self.members
    }

    pub fn rows(&self) -> &[Polynomial] {
        &self.rows
    }

    pub fn row(&self, role: usize) -> &Polynomial {
        &self.rows[role]
    }

    pub fn share(&self, role: usize) -> Fe {
        self.rows[role].coeff(0)
    }

    pub fn shares(&self) -> Vec<Fe> {
        self.rows.iter().map(|r| r.coeff(0)).collect()
    }

    pub fn add_constant(&self, c: Fe) -> Shared {
        Shared { members: self.members.clone(), rows: self.rows.iter().map(|r| r.add_constant(c)).collect() }
    }

    /// Secret held by the good roles, for test harnesses with full view.
    pub fn reveal_with(&self, roles: &[usize]) -> Result<Fe, DecodeError> {
        let field = self.rows[0].field();
        let xs = abscissas(field, self.members.len());
        let points: Vec<(Fe, Fe)> = roles.iter().map(|&i| (xs[i], self.share(i))).collect();
        let t = fault_bound(self.members.len());
        crate::decode::berlekamp_welch(&points, t).map(|p| p.coeff(0))
    }
}

/// Local computation of `sum coeffs[k] * values[k] + constant`.
pub fn mpc_linear(coeffs: &[Fe], values: &[&Shared], constant: Fe) -> Result<Shared, MpcError> {
    let first = values.first().ok_or(MpcError::MismatchedRoleSets)?;
    if coeffs.len() != values.len() || values.iter().any(|v| v.members != first.members) {
        return Err(MpcError::MismatchedRoleSets);
    }
    let rows = (0..first.members.len())
        .map(|i| {
            let mut acc = Polynomial::constant(constant);
            for (c, v) in coeffs.iter().zip(values) {
                acc.add_scaled(*c, &v.rows[i]);
            }
            acc
        })
        .collect();
    Ok(Shared { members: first.members.clone(), rows })
}

/// One heavyweight session: the roles and their fault threshold.
#[derive(Debug, Clone)]
pub struct MpcSession {
    members: Vec<PlayerId>,
    threshold: usize,
    xs: Vec<Fe>,
}

impl MpcSession {
    /// Refuses sessions where a third or more of the roles are bad.
    pub fn new(net: &Network, members: Vec<PlayerId>) -> Result<Self, MpcError> {
        let r = members.len();
        if r < 4 {
            return Err(MpcError::TooFewRoles(r));
        }
        check_quorum(net, &members)?;
        Ok(MpcSession { threshold: fault_bound(r), xs: abscissas(net.field(), r), members })
    }

    pub fn members(&self) -> &[PlayerId] {
        &self.members
    }

    pub fn roles(&self) -> usize {
        self.members.len()
    }

    pub fn threshold(&self) -> usize {
        self.threshold
    }

    pub fn abscissas(&self) -> &[Fe] {
        &self.xs
    }

    pub fn field(&self) -> Field {
        self.xs[0].field()
    }

    /// First role played by a good player.
    pub fn reference_role(&self, net: &Network) -> usize {
        self.members.iter().position(|&p| !net.is_bad(p)).unwrap_or(0)
    }

    pub fn good_roles(&self, net: &Network) -> Vec<usize> {
        (0..self.roles()).filter(|&i| !net.is_bad(self.members[i])).collect()
    }
}

pub(crate) fn check_quorum(net: &Network, members: &[PlayerId]) -> Result<(), MpcError> {
    let bad = members.iter().filter(|&&p| net.is_bad(p)).count();
    if 3 * bad >= members.len() {
        return Err(MpcError::ThresholdViolated { bad, roles: members.len() });
    }
    Ok(())
}

/// Opens each value to `recipients` with error correction. Returns
/// `values[recipient][k]`. One round.
pub fn open_shared(
    net: &mut Network,
    values: &[&Shared],
    recipients: &[PlayerId],
    kind: MsgKind,
) -> Result<Vec<Vec<Result<Fe, SharingError>>>, MpcError> {
    let Some(first) = values.first() else {
        return Ok(vec![Vec::new(); recipients.len()]);
    };
    if values.iter().any(|v| v.members != first.members) {
        return Err(MpcError::MismatchedRoleSets);
    }
    let shares: Vec<Vec<Fe>> = (0..first.members.len()).map(|i| values.iter().map(|v| v.share(i)).collect()).collect();
    Ok(open_to(net, &first.members, recipients, kind, &shares, fault_bound(first.members.len())))
}
