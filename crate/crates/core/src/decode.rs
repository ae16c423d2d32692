//! Reed-Solomon style decoding of Shamir codewords.
//!
//! [`berlekamp_welch`] recovers a degree-bounded polynomial from evaluations
//! of which up to `(n - degree - 1) / 2` are wrong. Missing shares are simply
//! left out of the point list. The syndrome helpers let a committee learn the
//! error pattern of a shared codeword without learning the codeword itself.

use thiserror::Error;

use crate::field::{Fe, Field};
use crate::poly::Polynomial;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("no polynomial of degree <= {degree} agrees with enough of the {points} points")]
    DecodingFailure { degree: usize, points: usize },
}

/// Largest number of errors correctable from `points` evaluations of a
/// degree-`degree` polynomial.
pub fn max_errors(points: usize, degree: usize) -> usize {
    points.saturating_sub(degree + 1) / 2
}

/// Solves `a * x = b`, returning one solution (free variables zero) or `None`
/// if the system is inconsistent.
pub fn solve(field: Field, mut a: Vec<Vec<Fe>>, mut b: Vec<Fe>) -> Option<Vec<Fe>> {
    let rows = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        b.swap(r, p);
        let inv = a[r][c].inverse().expect("nonzero pivot");
        for j in c..cols {
            a[r][j] *= inv;
        }
        b[r] *= inv;
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let k = a[i][c];
                for j in c..cols {
                    let v = a[r][j];
                    a[i][j] -= k * v;
                }
                let v = b[r];
                b[i] -= k * v;
            }
        }
        pivots.push(c);
        r += 1;
    }
    if b[r..].iter().any(|v| !v.is_zero()) {
        return None;
    }
    let mut x = vec![field.zero(); cols];
    for (i, &c) in pivots.iter().enumerate() {
        x[c] = b[i];
    }
    Some(x)
}

fn agreement(p: &Polynomial, points: &[(Fe, Fe)]) -> usize {
    points.iter().filter(|(x, y)| p.eval(*x) == *y).count()
}

/// Error-correcting decode of a degree-`degree` polynomial.
pub fn berlekamp_welch(points: &[(Fe, Fe)], degree: usize) -> Result<Polynomial, DecodeError> {
    let n = points.len();
    let fail = DecodeError::DecodingFailure { degree, points: n };
    if n < degree + 1 {
        return Err(fail);
    }
    let field = points[0].0.field();
    let e = max_errors(n, degree);

    // Fast path: the first degree+1 points explain everything.
    let head = Polynomial::interpolate(&points[..degree + 1]).map_err(|_| fail.clone())?;
    let agree = agreement(&head, points);
    if agree == n {
        return Ok(head);
    }
    if e == 0 {
        return Err(fail);
    }

    // Unknowns: q_0..q_{degree+e}, then e_0..e_{e-1} (E is monic of degree e).
    let qn = degree + e + 1;
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for &(x, y) in points {
        let mut row = Vec::with_capacity(qn + e);
        let mut pw = field.one();
        let mut powers = Vec::with_capacity(qn.max(e + 1));
        for _ in 0..qn.max(e + 1) {
            powers.push(pw);
            pw *= x;
        }
        row.extend_from_slice(&powers[..qn]);
        for l in 0..e {
            row.push(-(y * powers[l]));
        }
        a.push(row);
        b.push(y * powers[e]);
    }
    let sol = solve(field, a, b).ok_or(fail.clone())?;
    let q = Polynomial::new(field, sol[..qn].to_vec());
    let mut ecoeffs = sol[qn..].to_vec();
    ecoeffs.push(field.one());
    let loc = Polynomial::new(field, ecoeffs);
    let (p, rem) = q.div_rem(&loc).ok_or(fail.clone())?;
    if !rem.is_zero() || p.degree() > degree as isize || agreement(&p, points) + e < n {
        return Err(fail);
    }
    Ok(p)
}

/// Parity-check matrix of the evaluation code `{(f(x_1), .., f(x_n)) : deg f <= degree}`.
///
/// Row `k` is `(lambda_j * x_j^k)_j` with `lambda_j = 1 / prod_{l != j} (x_j - x_l)`,
/// for `k < n - degree - 1`.
pub fn parity_check(xs: &[Fe], degree: usize) -> Vec<Vec<Fe>> {
    let n = xs.len();
    let field = xs[0].field();
    let lambdas: Vec<Fe> = (0..n)
        .map(|j| {
            let mut d = field.one();
            for l in 0..n {
                if l != j {
                    d *= xs[j] - xs[l];
                }
            }
            d.inverse().expect("distinct abscissas")
        })
        .collect();
    let rows = n.saturating_sub(degree + 1);
    let mut h = Vec::with_capacity(rows);
    let mut pw: Vec<Fe> = vec![field.one(); n];
    for _ in 0..rows {
        h.push((0..n).map(|j| lambdas[j] * pw[j]).collect());
        for j in 0..n {
            pw[j] *= xs[j];
        }
    }
    h
}

/// Recovers the low-weight error vector `e` from the syndrome `H e`.
pub fn syndrome_decode(xs: &[Fe], degree: usize, syndrome: &[Fe]) -> Result<Vec<Fe>, DecodeError> {
    let n = xs.len();
    let field = xs[0].field();
    let fail = DecodeError::DecodingFailure { degree, points: n };
    let h = parity_check(xs, degree);
    if syndrome.len() != h.len() {
        return Err(fail);
    }
    if syndrome.iter().all(|s| s.is_zero()) {
        return Ok(vec![field.zero(); n]);
    }
    // Any w with H w = S differs from e by a codeword; solve on the last
    // columns, then strip the codeword with the decoder.
    let r = h.len();
    let offset = n - r;
    let a: Vec<Vec<Fe>> = h.iter().map(|row| row[offset..].to_vec()).collect();
    let tail = solve(field, a, syndrome.to_vec()).ok_or(fail.clone())?;
    let mut w = vec![field.zero(); n];
    w[offset..].copy_from_slice(&tail);
    let points: Vec<(Fe, Fe)> = xs.iter().copied().zip(w.iter().copied()).collect();
    let c = berlekamp_welch(&points, degree)?;
    let e: Vec<Fe> = xs.iter().zip(&w).map(|(x, wi)| *wi - c.eval(*x)).collect();
    if e.iter().filter(|v| !v.is_zero()).count() > max_errors(n, degree) {
        return Err(fail);
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn xs(f: Field, n: u64) -> Vec<Fe> {
        (1..=n).map(|i| f.elem(i)).collect()
    }

    #[test]
    fn corrects_up_to_bound() {
        let f = Field::new(101).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [4usize, 7, 10, 13] {
            let t = (n - 1) / 3;
            for _ in 0..50 {
                let p = Polynomial::random_with_constant(f.sample(&mut rng), t, &mut rng);
                let mut pts: Vec<_> = xs(f, n as u64).into_iter().map(|x| (x, p.eval(x))).collect();
                for i in 0..t {
                    pts[(i * 3 + 1) % n].1 += f.sample_nonzero(&mut rng);
                }
                assert_eq!(berlekamp_welch(&pts, t).unwrap(), p);
            }
        }
    }

    #[test]
    fn erasures_then_errors() {
        // 10 slots, t = 3: drop 3, corrupt 1 of the remaining 7 (7 - 4 = 3 -> 1 error)
        let f = Field::new(101).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = Polynomial::random_with_constant(f.elem(17), 3, &mut rng);
        let mut pts: Vec<_> = xs(f, 10).into_iter().map(|x| (x, p.eval(x))).skip(3).collect();
        pts[2].1 += f.one();
        assert_eq!(berlekamp_welch(&pts, 3).unwrap(), p);
    }

    #[test]
    fn too_many_errors_is_reported_or_differs() {
        let f = Field::new(7).unwrap();
        let p = Polynomial::new(f, vec![f.elem(5), f.elem(2)]);
        let mut pts: Vec<_> = xs(f, 4).into_iter().map(|x| (x, p.eval(x))).collect();
        pts[0].1 += f.one();
        pts[1].1 += f.one();
        match berlekamp_welch(&pts, 1) {
            Ok(q) => assert_ne!(q, p),
            Err(DecodeError::DecodingFailure { .. }) => {}
        }
    }

    #[test]
    fn parity_check_annihilates_codewords() {
        let f = Field::new(101).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = xs(f, 10);
        for d in [1usize, 3, 6] {
            let h = parity_check(&x, d);
            assert_eq!(h.len(), 10 - d - 1);
            let p = Polynomial::random_with_constant(f.sample(&mut rng), d, &mut rng);
            for row in &h {
                let s = row.iter().zip(&x).fold(f.zero(), |acc, (hj, xj)| acc + *hj * p.eval(*xj));
                assert!(s.is_zero());
            }
        }
    }

    #[test]
    fn syndrome_decoding_recovers_errors() {
        let f = Field::new(101).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = xs(f, 10);
        let h = parity_check(&x, 3);
        for _ in 0..100 {
            let mut e = vec![f.zero(); 10];
            for _ in 0..3 {
                e[rand::Rng::random_range(&mut rng, 0..10)] = f.sample(&mut rng);
            }
            let s: Vec<Fe> = h
                .iter()
                .map(|row| row.iter().zip(&e).fold(f.zero(), |acc, (a, b)| acc + *a * *b))
                .collect();
            assert_eq!(syndrome_decode(&x, 3, &s).unwrap(), e);
        }
    }

    #[test]
    fn solve_handles_inconsistent_systems() {
        let f = Field::new(7).unwrap();
        let a = vec![vec![f.one(), f.one()], vec![f.one(), f.one()]];
        assert!(solve(f, a.clone(), vec![f.one(), f.elem(2)]).is_none());
        let x = solve(f, a, vec![f.elem(3), f.elem(3)]).unwrap();
        assert_eq!(x[0] + x[1], f.elem(3));
    }
}
