//! Univariate polynomials over a prime field.

use rand::Rng;
use thiserror::Error;

use crate::field::{Fe, Field};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("duplicate abscissa {0}")]
    DuplicateAbscissa(u64),
    #[error("interpolation needs at least one point")]
    NoPoints,
}

/// Coefficients lowest degree first, trailing zeros trimmed.
#[derive(Clone, PartialEq, Eq)]
pub struct Polynomial {
    field: Field,
    coeffs: Vec<Fe>,
}

impl std::fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Poly{:?}", self.coeffs)
    }
}

impl Polynomial {
    pub fn new(field: Field, mut coeffs: Vec<Fe>) -> Self {
        for c in &coeffs {
            assert_eq!(c.field(), field, "coefficient from a foreign field");
        }
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Polynomial { field, coeffs }
    }

    pub fn zero(field: Field) -> Self {
        Polynomial { field, coeffs: Vec::new() }
    }

    pub fn constant(c: Fe) -> Self {
        Polynomial::new(c.field(), vec![c])
    }

    /// Builds from raw residues; `None` if any word is not canonical.
    pub fn from_words(field: Field, words: &[u64]) -> Option<Self> {
        let coeffs = words.iter().map(|&w| field.try_elem(w)).collect::<Option<Vec<_>>>()?;
        Some(Polynomial::new(field, coeffs))
    }

    /// Random polynomial of degree at most `degree` with the given free coefficient.
    pub fn random_with_constant<R: Rng + ?Sized>(constant: Fe, degree: usize, rng: &mut R) -> Self {
        let field = constant.field();
        let mut coeffs = Vec::with_capacity(degree + 1);
        coeffs.push(constant);
        coeffs.extend((0..degree).map(|_| field.sample(rng)));
        Polynomial::new(field, coeffs)
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn coeffs(&self) -> &[Fe] {
        &self.coeffs
    }

    /// Coefficient of `x^i` (zero past the degree).
    pub fn coeff(&self, i: usize) -> Fe {
        self.coeffs.get(i).copied().unwrap_or_else(|| self.field.zero())
    }

    /// Coefficients padded with zeros to exactly `len` entries.
    pub fn padded_words(&self, len: usize) -> Vec<u64> {
        (0..len).map(|i| self.coeff(i).value()).collect()
    }

    /// Degree, with -1 for the zero polynomial.
    pub fn degree(&self) -> isize {
        self.coeffs.len() as isize - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, x: Fe) -> Fe {
        let mut acc = self.field.zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + *c;
        }
        acc
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.field, other.field);
        let n = self.coeffs.len().max(other.coeffs.len());
        Polynomial::new(self.field, (0..n).map(|i| self.coeff(i) + other.coeff(i)).collect())
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.field, other.field);
        let n = self.coeffs.len().max(other.coeffs.len());
        Polynomial::new(self.field, (0..n).map(|i| self.coeff(i) - other.coeff(i)).collect())
    }

    pub fn scale(&self, k: Fe) -> Polynomial {
        Polynomial::new(self.field, self.coeffs.iter().map(|c| *c * k).collect())
    }

    /// `self + k * other`, the workhorse of share-wise linear combinations.
    pub fn add_scaled(&mut self, k: Fe, other: &Polynomial) {
        if other.coeffs.len() > self.coeffs.len() {
            self.coeffs.resize(other.coeffs.len(), self.field.zero());
        }
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += k * *b;
        }
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn add_constant(&self, c: Fe) -> Polynomial {
        let mut out = self.clone();
        out.add_scaled(self.field.one(), &Polynomial::constant(c));
        out
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.field, other.field);
        if self.is_zero() || other.is_zero() {
            return Polynomial::zero(self.field);
        }
        let mut out = vec![self.field.zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += *a * *b;
            }
        }
        Polynomial::new(self.field, out)
    }

    /// Euclidean division; `None` when the divisor is zero.
    pub fn div_rem(&self, divisor: &Polynomial) -> Option<(Polynomial, Polynomial)> {
        if divisor.is_zero() {
            return None;
        }
        let field = self.field;
        let lead_inv = divisor.coeffs.last().unwrap().inverse().ok()?;
        let dd = divisor.coeffs.len() - 1;
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return Some((Polynomial::zero(field), self.clone()));
        }
        let mut quot = vec![field.zero(); rem.len() - dd];
        for k in (0..quot.len()).rev() {
            let c = rem[k + dd] * lead_inv;
            quot[k] = c;
            if !c.is_zero() {
                for (j, d) in divisor.coeffs.iter().enumerate() {
                    rem[k + j] -= c * *d;
                }
            }
        }
        rem.truncate(dd);
        Some((Polynomial::new(field, quot), Polynomial::new(field, rem)))
    }

    /// Unique polynomial of degree < points.len() through all points.
    pub fn interpolate(points: &[(Fe, Fe)]) -> Result<Polynomial, PolyError> {
        let field = points.first().ok_or(PolyError::NoPoints)?.0.field();
        let xs: Vec<Fe> = points.iter().map(|p| p.0).collect();
        check_distinct(&xs)?;
        // Newton divided differences, then expand to monomial form.
        let n = points.len();
        let mut dd: Vec<Fe> = points.iter().map(|p| p.1).collect();
        for level in 1..n {
            for i in (level..n).rev() {
                let num = dd[i] - dd[i - 1];
                let den = xs[i] - xs[i - level];
                dd[i] = num * den.inverse().expect("distinct abscissas");
            }
        }
        let mut coeffs = vec![field.zero(); n];
        for i in (0..n).rev() {
            // coeffs = coeffs * (x - xs[i]) + dd[i]
            let mut next = vec![field.zero(); n];
            for j in 0..n - 1 {
                next[j + 1] += coeffs[j];
                next[j] -= coeffs[j] * xs[i];
            }
            next[0] += dd[i];
            coeffs = next;
        }
        Ok(Polynomial::new(field, coeffs))
    }
}

fn check_distinct(xs: &[Fe]) -> Result<(), PolyError> {
    let mut sorted: Vec<u64> = xs.iter().map(|x| x.value()).collect();
    sorted.sort_unstable();
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            return Err(PolyError::DuplicateAbscissa(w[0]));
        }
    }
    Ok(())
}

/// Lagrange basis coefficients `l_i(at)` for the given abscissas, so that
/// `f(at) = sum_i l_i(at) f(xs[i])` for every `f` of degree < xs.len().
pub fn lagrange_coefficients(xs: &[Fe], at: Fe) -> Result<Vec<Fe>, PolyError> {
    check_distinct(xs)?;
    let field = at.field();
    let mut out = Vec::with_capacity(xs.len());
    for (i, xi) in xs.iter().enumerate() {
        let mut num = field.one();
        let mut den = field.one();
        for (j, xj) in xs.iter().enumerate() {
            if i != j {
                num *= at - *xj;
                den *= *xi - *xj;
            }
        }
        out.push(num * den.inverse().expect("distinct abscissas"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn f7() -> Field {
        Field::new(7).unwrap()
    }

    fn poly(f: Field, c: &[u64]) -> Polynomial {
        Polynomial::new(f, c.iter().map(|&v| f.elem(v)).collect())
    }

    #[test]
    fn evaluation_examples() {
        let f = f7();
        let c = poly(f, &[5]);
        for x in 0..7 {
            assert_eq!(c.eval(f.elem(x)), f.elem(5));
        }
        let p = poly(f, &[2, 3]);
        assert_eq!(p.eval(f.zero()), f.elem(2));
        assert_eq!(p.eval(f.elem(2)), f.elem(1));
    }

    #[test]
    fn degree_convention() {
        let f = f7();
        assert_eq!(Polynomial::zero(f).degree(), -1);
        assert_eq!(poly(f, &[0, 0, 0]).degree(), -1);
        assert_eq!(poly(f, &[1, 2, 0]).degree(), 1);
    }

    #[test]
    fn interpolation_examples() {
        let f = f7();
        let one = Polynomial::interpolate(&[(f.one(), f.elem(5))]).unwrap();
        assert_eq!(one, poly(f, &[5]));
        let p = poly(f, &[2, 3]);
        let pts: Vec<_> = [1, 2].iter().map(|&x| (f.elem(x), p.eval(f.elem(x)))).collect();
        assert_eq!(Polynomial::interpolate(&pts).unwrap(), p);
        let line: Vec<_> = (1..=3).map(|x| (f.elem(x), f.elem(x))).collect();
        assert_eq!(Polynomial::interpolate(&line).unwrap(), poly(f, &[0, 1]));
        let dup = [(f.one(), f.one()), (f.one(), f.zero())];
        assert_eq!(Polynomial::interpolate(&dup), Err(PolyError::DuplicateAbscissa(1)));
        assert_eq!(Polynomial::interpolate(&[]), Err(PolyError::NoPoints));
    }

    #[test]
    fn division_roundtrip() {
        let f = Field::new(101).unwrap();
        let a = poly(f, &[3, 1, 4, 1, 5]);
        let b = poly(f, &[9, 2, 6]);
        let (q, r) = a.div_rem(&b).unwrap();
        assert!(r.degree() < b.degree());
        assert_eq!(q.mul(&b).add(&r), a);
        assert!(a.div_rem(&Polynomial::zero(f)).is_none());
    }

    #[test]
    fn lagrange_at_zero_recovers_constant() {
        let f = Field::new(101).unwrap();
        let p = poly(f, &[42, 7, 19]);
        let xs: Vec<Fe> = (1..=3).map(|x| f.elem(x)).collect();
        let l = lagrange_coefficients(&xs, f.zero()).unwrap();
        let v = xs.iter().zip(&l).fold(f.zero(), |acc, (x, c)| acc + *c * p.eval(*x));
        assert_eq!(v, f.elem(42));
    }

    #[test]
    fn randomized_roundtrip_1000_trials() {
        let f = Field::new(257).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for trial in 0..1000 {
            let deg = trial % 9;
            let p = Polynomial::random_with_constant(f.sample(&mut rng), deg, &mut rng);
            let pts: Vec<_> = (1..=deg as u64 + 1).map(|x| (f.elem(x), p.eval(f.elem(x)))).collect();
            assert_eq!(Polynomial::interpolate(&pts).unwrap(), p);
        }
    }

    proptest! {
        #[test]
        fn interpolate_eval_roundtrip(coeffs in proptest::collection::vec(0u64..101, 1..8), shift in 0u64..50) {
            let f = Field::new(101).unwrap();
            let p = poly(f, &coeffs);
            let pts: Vec<_> = (0..coeffs.len() as u64)
                .map(|i| { let x = f.elem(i + shift); (x, p.eval(x)) })
                .collect();
            prop_assert_eq!(Polynomial::interpolate(&pts).unwrap(), p);
        }
    }
}
