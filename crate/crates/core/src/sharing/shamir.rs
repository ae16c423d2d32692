//! Plain Shamir sharing with error-correcting reconstruction.

use rand::Rng;

use super::SharingError;
use crate::decode::berlekamp_welch;
use crate::field::{Fe, Field};
use crate::poly::Polynomial;
use crate::simnet::PlayerId;

/// Abscissa of the role at `position` within its group.
pub fn abscissa(field: Field, position: usize) -> Fe {
    field.elem(position as u64 + 1)
}

pub fn abscissas(field: Field, count: usize) -> Vec<Fe> {
    (0..count).map(|i| abscissa(field, i)).collect()
}

/// Shares of one secret; `shares[i]` belongs to `recipients[i]` and sits at
/// abscissa `i + 1`. Missing shares are `None`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShareSet {
    pub threshold: usize,
    pub dealer: PlayerId,
    pub tag: u64,
    pub recipients: Vec<PlayerId>,
    pub shares: Vec<Option<Fe>>,
}

impl ShareSet {
    pub fn field(&self) -> Option<Field> {
        self.shares.iter().flatten().next().map(|s| s.field())
    }

    /// Share-wise sum; both sets must use the same recipients and threshold.
    pub fn add(&self, other: &ShareSet) -> Result<ShareSet, SharingError> {
        if self.recipients != other.recipients || self.threshold != other.threshold {
            return Err(SharingError::MismatchedShareSets);
        }
        let shares = self
            .shares
            .iter()
            .zip(&other.shares)
            .map(|(a, b)| match (a, b) {
                (Some(a), Some(b)) => Some(*a + *b),
                _ => None,
            })
            .collect();
        Ok(ShareSet { shares, ..self.clone() })
    }
}

/// Deals `secret` to `recipients` with a fresh random degree-`t` polynomial.
pub fn shamir_deal<R: Rng + ?Sized>(
    secret: Fe,
    t: usize,
    dealer: PlayerId,
    recipients: &[PlayerId],
    rng: &mut R,
) -> Result<ShareSet, SharingError> {
    if recipients.len() < 3 * t + 1 {
        return Err(SharingError::TooFewRecipients { recipients: recipients.len(), threshold: t });
    }
    let f = secret.field();
    let poly = Polynomial::random_with_constant(secret, t, rng);
    let shares = (0..recipients.len()).map(|i| Some(poly.eval(abscissa(f, i)))).collect();
    Ok(ShareSet { threshold: t, dealer, tag: 0, recipients: recipients.to_vec(), shares })
}

/// Recovers the secret, correcting up to `(present - t - 1) / 2` bad shares.
pub fn shamir_reconstruct(set: &ShareSet) -> Result<Fe, SharingError> {
    let fail = SharingError::DecodingFailure { threshold: set.threshold };
    let field = set.field().ok_or(fail.clone())?;
    let points: Vec<(Fe, Fe)> = set
        .shares
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.map(|s| (abscissa(field, i), s)))
        .collect();
    let poly = berlekamp_welch(&points, set.threshold).map_err(|_| fail)?;
    Ok(poly.coeff(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_threshold_shares_equal_secret() {
        let f = Field::new(101).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = shamir_deal(f.elem(33), 0, 9, &[1, 2, 3], &mut rng).unwrap();
        assert!(s.shares.iter().all(|x| *x == Some(f.elem(33))));
    }

    #[test]
    fn too_few_recipients() {
        let f = Field::new(101).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(
            shamir_deal(f.elem(1), 1, 0, &[1, 2, 3], &mut rng),
            Err(SharingError::TooFewRecipients { recipients: 3, threshold: 1 })
        );
    }

    #[test]
    fn any_two_shares_give_five() {
        let f = Field::new(101).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = shamir_deal(f.elem(5), 1, 0, &[0, 1, 2, 3], &mut rng).unwrap();
        for i in 0..4 {
            for j in i + 1..4 {
                // direct two-point interpolation at zero
                let (xi, xj) = (abscissa(f, i), abscissa(f, j));
                let (yi, yj) = (s.shares[i].unwrap(), s.shares[j].unwrap());
                let at0 = yi * xj * (xj - xi).inverse().unwrap() + yj * xi * (xi - xj).inverse().unwrap();
                assert_eq!(at0, f.elem(5));
            }
        }
        assert_eq!(shamir_reconstruct(&s).unwrap(), f.elem(5));
    }

    #[test]
    fn additivity() {
        let f = Field::new(101).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r: Vec<usize> = (0..7).collect();
        let a = shamir_deal(f.elem(40), 2, 0, &r, &mut rng).unwrap();
        let b = shamir_deal(f.elem(70), 2, 0, &r, &mut rng).unwrap();
        assert_eq!(shamir_reconstruct(&a.add(&b).unwrap()).unwrap(), f.elem(9));
    }
}
