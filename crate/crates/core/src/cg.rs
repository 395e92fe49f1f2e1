use crate::{Error, Result};

/// Plain conjugate gradients for a symmetric positive (semi)definite
/// operator, started from zero. `tol` is relative to the right-hand side.
pub(crate) fn conjugate_gradient(
    what: &str,
    apply: impl Fn(&[f64]) -> Vec<f64>,
    rhs: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize)> {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut x = vec![0.0; rhs.len()];
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let target = tol * tol * rr.max(f64::MIN_POSITIVE);
    for it in 0..max_iter {
        if rr <= target {
            return Ok((x, it));
        }
        let ap = apply(&p);
        let alpha = rr / dot(&p, &ap);
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut().zip(&ap).for_each(|(ri, ai)| *ri -= alpha * ai);
        let next = dot(&r, &r);
        let beta = next / rr;
        rr = next;
        p.iter_mut().zip(&r).for_each(|(pi, ri)| *pi = ri + beta * *pi);
    }
    if rr <= target {
        Ok((x, max_iter))
    } else {
        Err(Error::numerical(
            format!("conjugate gradients ({what})"),
            rr.sqrt(),
            target.sqrt(),
        ))
    }
}
