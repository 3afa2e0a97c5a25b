// Scaling-and-squaring with diagonal Pade approximants of degree 3, 5, 7, 9
// or 13, selected by the 1-norm (Higham, SIAM J. Matrix Anal. Appl. 26, 2005).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use super::Operator;
use crate::error::{Error, Result};
use crate::scalar::{cplx, real, Real};

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

// 1-norm bounds below which the degree-m approximant is accurate to unit roundoff.
const THETA3: f64 = 1.495585217958292e-2;
const THETA5: f64 = 2.539398330063230e-1;
const THETA7: f64 = 9.504178996162932e-1;
const THETA9: f64 = 2.097847961257068;
const THETA13: f64 = 5.371920351148152;

type CMat<T> = DMatrix<Complex<T>>;

fn scaled<T: Real>(m: &CMat<T>, c: f64) -> CMat<T> {
    m * cplx(real::<T>(c), T::zero())
}

fn add_identity<T: Real>(m: &mut CMat<T>, c: f64) {
    let c = cplx(real::<T>(c), T::zero());
    for i in 0..m.nrows() {
        m[(i, i)] += c;
    }
}

/// Odd/even parts `(U, V)` of a Pade approximant with degree <= 9.
fn pade_low<T: Real>(a: &CMat<T>, b: &[f64]) -> (CMat<T>, CMat<T>) {
    let n = a.nrows();
    let a2 = a * a;
    // powers[k] = A^(2k)
    let mut powers: Vec<CMat<T>> = vec![CMat::identity(n, n), a2.clone()];
    while 2 * powers.len() < b.len() {
        let next = powers.last().unwrap() * &a2;
        powers.push(next);
    }
    let mut odd = CMat::zeros(n, n);
    let mut even = CMat::zeros(n, n);
    for (k, p) in powers.iter().enumerate() {
        if 2 * k + 1 < b.len() {
            odd += scaled(p, b[2 * k + 1]);
        }
        even += scaled(p, b[2 * k]);
    }
    (a * odd, even)
}

fn pade13<T: Real>(a: &CMat<T>) -> (CMat<T>, CMat<T>) {
    let b = &PADE13;
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = scaled(&a6, b[13]) + scaled(&a4, b[11]) + scaled(&a2, b[9]);
    let mut tail_u = &a6 * inner_u + scaled(&a6, b[7]) + scaled(&a4, b[5]) + scaled(&a2, b[3]);
    add_identity(&mut tail_u, b[1]);
    let u = a * tail_u;
    let inner_v = scaled(&a6, b[12]) + scaled(&a4, b[10]) + scaled(&a2, b[8]);
    let mut v = &a6 * inner_v + scaled(&a6, b[6]) + scaled(&a4, b[4]) + scaled(&a2, b[2]);
    add_identity(&mut v, b[0]);
    (u, v)
}

/// `exp(A)` for a dense complex operator.
pub fn matrix_exponential<T: Real>(a: &Operator<T>) -> Result<Operator<T>> {
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let norm = crate::scalar::to_f64(a.norm1());
    let m = a.matrix();
    let (u, v, squarings) = if norm <= THETA3 {
        let (u, v) = pade_low(m, &PADE3);
        (u, v, 0)
    } else if norm <= THETA5 {
        let (u, v) = pade_low(m, &PADE5);
        (u, v, 0)
    } else if norm <= THETA7 {
        let (u, v) = pade_low(m, &PADE7);
        (u, v, 0)
    } else if norm <= THETA9 {
        let (u, v) = pade_low(m, &PADE9);
        (u, v, 0)
    } else {
        let s = (norm / THETA13).log2().ceil().max(0.0) as i32;
        let scaled_a = scaled(m, 2f64.powi(-s));
        let (u, v) = pade13(&scaled_a);
        (u, v, s)
    };
    let numer = &v + &u;
    let denom = v - u;
    let mut r = denom
        .lu()
        .solve(&numer)
        .ok_or_else(|| Error::InvalidInput("Pade denominator is singular".into()))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Operator::from_matrix(a.space().clone(), r)
}

/// `exp(A) v` without forming `exp(A)`: Taylor series on `s` substeps with
/// `||A||_1 / s <= 2`, truncated once two consecutive terms fall below roundoff.
pub fn exp_action<T: Real>(a: &Operator<T>, v: &DVector<Complex<T>>) -> Result<DVector<Complex<T>>> {
    if v.len() != a.dim() {
        return Err(Error::DimensionMismatch { left: a.dim(), right: v.len() });
    }
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let norm = crate::scalar::to_f64(a.norm1());
    let substeps = (norm / 2.0).ceil().max(1.0) as usize;
    let m = a.matrix() * cplx(real::<T>(1.0 / substeps as f64), T::zero());
    let eps = f64::EPSILON;
    let mut out = v.clone();
    for _ in 0..substeps {
        let mut term = out.clone();
        let mut acc = out.clone();
        let mut small = 0;
        for k in 1..200 {
            term = &m * term * cplx(real::<T>(1.0 / k as f64), T::zero());
            acc += &term;
            let tn = crate::scalar::to_f64(term.camax());
            let an = crate::scalar::to_f64(acc.camax());
            if tn <= eps * an {
                small += 1;
                if small == 2 {
                    break;
                }
            } else {
                small = 0;
            }
        }
        out = acc;
    }
    Ok(out)
}
