use nalgebra::DMatrix;
use num_complex::Complex64;

const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

/// Givens pair (c real, s complex) with [c s; -s̄ c] (x, y)ᵀ = (r, 0)ᵀ.
fn givens(x: Complex64, y: Complex64) -> (f64, Complex64) {
    let ay = y.norm();
    if ay == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    let ax = x.norm();
    if ax == 0.0 {
        return (0.0, y.conj() / ay);
    }
    let r = ax.hypot(ay);
    (ax / r, (x / ax) * y.conj() / r)
}

fn rotate_rows(h: &mut DMatrix<Complex64>, k: usize, c: f64, s: Complex64, cols: std::ops::RangeInclusive<usize>) {
    for j in cols {
        let a = h[(k, j)];
        let b = h[(k + 1, j)];
        h[(k, j)] = a * c + s * b;
        h[(k + 1, j)] = -s.conj() * a + b * c;
    }
}

fn rotate_cols(h: &mut DMatrix<Complex64>, k: usize, c: f64, s: Complex64, rows: std::ops::RangeInclusive<usize>) {
    for i in rows {
        let a = h[(i, k)];
        let b = h[(i, k + 1)];
        h[(i, k)] = a * c + b * s.conj();
        h[(i, k + 1)] = -a * s + b * c;
    }
}

/// Eigenvalue of the trailing 2×2 block closest to its last diagonal entry.
fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let l1 = (a + d) * 0.5 + disc;
    let l2 = (a + d) * 0.5 - disc;
    if (l1 - d).norm() < (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// All eigenvalues of a complex square matrix by Hessenberg reduction and
/// single-shift QR. Returns `None` if the iteration fails to deflate.
pub fn complex_eigenvalues(a: DMatrix<Complex64>) -> Option<Vec<Complex64>> {
    let n = a.nrows();
    if n == 0 {
        return Some(vec![]);
    }
    let mut h = nalgebra::linalg::Hessenberg::new(a).unpack_h();
    let norm = h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let eps = f64::EPSILON;
    let mut out = Vec::with_capacity(n);
    let mut hi = n - 1;
    let mut iter = 0;
    loop {
        if hi == 0 {
            out.push(h[(0, 0)]);
            break;
        }
        let mut lo = hi;
        while lo > 0 {
            let mut s = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            if s == 0.0 {
                s = norm;
            }
            if h[(lo, lo - 1)].norm() <= eps * s {
                h[(lo, lo - 1)] = Complex64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            out.push(h[(hi, hi)]);
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        if iter > MAX_SWEEPS_PER_EIGENVALUE {
            return None;
        }
        let mu = if iter % 10 == 0 {
            // exceptional shift to break cycles
            h[(hi, hi)] + Complex64::new(h[(hi, hi - 1)].re.abs() + h[(hi - 1, hi - 1)].norm() * 0.75, 0.0)
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        let (c, s) = givens(h[(lo, lo)] - mu, h[(lo + 1, lo)]);
        rotate_rows(&mut h, lo, c, s, lo..=hi);
        rotate_cols(&mut h, lo, c, s, lo..=(lo + 2).min(hi));
        for k in lo + 1..hi {
            let (c, s) = givens(h[(k, k - 1)], h[(k + 1, k - 1)]);
            rotate_rows(&mut h, k, c, s, k - 1..=hi);
            h[(k + 1, k - 1)] = Complex64::new(0.0, 0.0);
            rotate_cols(&mut h, k, c, s, lo..=(k + 2).min(hi));
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rotation_block_has_imaginary_pair() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, -2.0, 0.0]).map(|x| Complex64::new(x, 0.0));
        let mut ev = complex_eigenvalues(m).unwrap();
        ev.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((ev[0] - Complex64::new(0.0, -2.0)).norm() < 1e-14);
        assert!((ev[1] - Complex64::new(0.0, 2.0)).norm() < 1e-14);
    }

    #[test]
    fn random_matrix_matches_real_schur() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 40;
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let mut mine = complex_eigenvalues(a.map(|x| Complex64::new(x, 0.0))).unwrap();
        let mut reference: Vec<Complex64> = a.complex_eigenvalues().iter().copied().collect();
        let key = |z: &Complex64| (z.re * 1e6).round() as i64 * 10_000_000 + (z.im * 1e6).round() as i64;
        mine.sort_by_key(key);
        reference.sort_by_key(key);
        for (x, y) in mine.iter().zip(&reference) {
            assert!((x - y).norm() < 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn skew_matrix_spectrum_is_imaginary() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 60;
        let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let s = &b - b.transpose();
        let ev = complex_eigenvalues(s.map(|x| Complex64::new(x, 0.0))).unwrap();
        assert!(ev.iter().all(|z| z.re.abs() < 1e-12));
    }
}
