//! Matrix exponential by scaling and squaring with the [13/13] Padé
//! approximant. The scaling threshold keeps the backward error at unit
//! roundoff level, well below the 1e-12 the semigroup checks need.

use nalgebra::DMatrix;

const THETA_13: f64 = 5.371920351148152;

const PADE_13: [f64; 14] = [
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

fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    assert!(a.is_square(), "matrix exponential of a non-square matrix");
    let n = a.nrows();
    if n == 0 {
        return a.clone();
    }
    let norm = one_norm(a);
    let squarings = if norm > THETA_13 { (norm / THETA_13).log2().ceil() as i32 } else { 0 };
    let a = a / 2f64.powi(squarings);

    let b = &PADE_13;
    let ident = DMatrix::<f64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let inner_u = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]);
    let u = &a * (inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &ident * b[1]);
    let inner_v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]);
    let v = inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &ident * b[0];

    let denom = &v - &u;
    let numer = &v + &u;
    let mut r = denom
        .lu()
        .solve(&numer)
        .expect("Padé denominator is nonsingular after scaling");
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn taylor(a: &DMatrix<f64>, terms: usize) -> DMatrix<f64> {
        let n = a.nrows();
        let mut sum = DMatrix::<f64>::identity(n, n);
        let mut term = DMatrix::<f64>::identity(n, n);
        for k in 1..terms {
            term = &term * a / k as f64;
            sum += &term;
        }
        sum
    }

    #[test]
    fn diagonal_matches_scalar_exp() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-3.0, 0.5, 10.0, -40.0]));
        let e = expm(&a);
        for (i, x) in [-3.0f64, 0.5, 10.0, -40.0].iter().enumerate() {
            assert!((e[(i, i)] - x.exp()).abs() <= 1e-13 * x.exp().max(1.0));
        }
    }

    #[test]
    fn small_norm_matches_taylor() {
        let a = DMatrix::from_row_slice(3, 3, &[-0.4, 0.2, 0.1, 0.3, -0.5, 0.2, 0.0, 0.1, -0.2]);
        let diff = (expm(&a) - taylor(&a, 40)).abs().max();
        assert!(diff < 1e-15, "{diff}");
    }

    #[test]
    fn large_norm_matches_nalgebra() {
        let n = 12;
        let mut q = DMatrix::<f64>::zeros(n, n);
        for i in 0..n - 1 {
            q[(i, i + 1)] = 3.0;
            q[(i + 1, i)] = 3.0;
            q[(i, i)] -= 3.0;
            q[(i + 1, i + 1)] -= 3.0;
        }
        let q = q * 7.0;
        let ours = expm(&q);
        let theirs = q.clone().exp();
        assert!((ours - theirs).abs().max() < 1e-12);
    }

    #[test]
    fn rotation_generator() {
        let t = 2.5f64;
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -t, t, 0.0]);
        let e = expm(&a);
        assert!((e[(0, 0)] - t.cos()).abs() < 1e-14);
        assert!((e[(1, 0)] - t.sin()).abs() < 1e-14);
    }
}
