//! Matrix exponential by scaling and squaring with a degree-13 Padé approximant.

use faer::prelude::Solve;

use super::ops::{identity, norm_1, CMat, C64};
use crate::error::{Error, Result};

const B: [f64; 14] = [
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
const THETA_13: f64 = 5.371920351148152;

fn lin(terms: &[(&CMat, f64)], n: usize) -> CMat {
    CMat::from_fn(n, n, |i, j| {
        terms.iter().fold(C64::new(0.0, 0.0), |acc, (m, c)| acc + m[(i, j)] * *c)
    })
}

pub fn expm(a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Dimension("expm needs a square matrix".into()));
    }
    let norm = norm_1(a);
    if !norm.is_finite() {
        return Err(Error::Numerical("non-finite matrix in expm".into()));
    }
    let s = if norm > THETA_13 { (norm / THETA_13).log2().ceil() as i32 } else { 0 };
    let factor = 0.5f64.powi(s);
    let a = CMat::from_fn(n, n, |i, j| a[(i, j)] * factor);

    let id = identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let inner_u = lin(&[(&a6, B[13]), (&a4, B[11]), (&a2, B[9])], n);
    let u_tail = lin(&[(&a6, B[7]), (&a4, B[5]), (&a2, B[3]), (&id, B[1])], n);
    let u = &a * &(&(&a6 * &inner_u) + &u_tail);

    let inner_v = lin(&[(&a6, B[12]), (&a4, B[10]), (&a2, B[8])], n);
    let v_tail = lin(&[(&a6, B[6]), (&a4, B[4]), (&a2, B[2]), (&id, B[0])], n);
    let v = &(&a6 * &inner_v) + &v_tail;

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.partial_piv_lu().solve(&p);
    for _ in 0..s {
        r = &r * &r;
    }
    if r.col_iter().any(|c| c.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())) {
        return Err(Error::Numerical("expm produced non-finite entries".into()));
    }
    Ok(r)
}
