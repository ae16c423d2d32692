use rand::Rng;

use crate::field::{Fe, Field};
use crate::poly::Polynomial;

/// Symmetric bivariate polynomial `F(x, y) = sum a_uv x^u y^v`, `a_uv = a_vu`,
/// of degree at most `t` in each variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bivariate {
    coeffs: Vec<Vec<Fe>>,
}

impl Bivariate {
    /// Random symmetric `F` with `F(0, y) = f(y)`; `f` must have degree <= t.
    pub fn with_sharing<R: Rng + ?Sized>(f: &Polynomial, t: usize, rng: &mut R) -> Self {
        assert!(f.degree() <= t as isize, "sharing polynomial exceeds degree {t}");
        let field = f.field();
        let mut c = vec![vec![field.zero(); t + 1]; t + 1];
        for v in 0..=t {
            c[0][v] = f.coeff(v);
            c[v][0] = f.coeff(v);
        }
        for u in 1..=t {
            for v in u..=t {
                let a = field.sample(rng);
                c[u][v] = a;
                c[v][u] = a;
            }
        }
        Bivariate { coeffs: c }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn field(&self) -> Field {
        self.coeffs[0][0].field()
    }

    pub fn eval(&self, x: Fe, y: Fe) -> Fe {
        self.row(y).eval(x)
    }

    /// `x -> F(x, y)`.
    pub fn row(&self, y: Fe) -> Polynomial {
        let field = self.field();
        let coeffs = self
            .coeffs
            .iter()
            .map(|cu| cu.iter().rev().fold(field.zero(), |acc, a| acc * y + *a))
            .collect();
        Polynomial::new(field, coeffs)
    }

    /// `y -> F(0, y)`, the polynomial whose shares the rows carry.
    pub fn sharing(&self) -> Polynomial {
        Polynomial::new(self.field(), self.coeffs[0].clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn symmetric_and_consistent_with_sharing() {
        let f = Field::new(101).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = Polynomial::random_with_constant(f.elem(12), 3, &mut rng);
        let b = Bivariate::with_sharing(&s, 3, &mut rng);
        for x in 0..6 {
            for y in 0..6 {
                assert_eq!(b.eval(f.elem(x), f.elem(y)), b.eval(f.elem(y), f.elem(x)));
            }
            assert_eq!(b.row(f.elem(x)).eval(f.zero()), s.eval(f.elem(x)));
        }
        assert_eq!(b.sharing(), s);
    }
}
