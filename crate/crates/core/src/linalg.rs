//! Dense complex linear algebra helpers: Hermitian eigensolver (cyclic
//! Jacobi), trace distance, norms.
//!
//! Self-contained on purpose: desk-scale dimensions (D <~ 500) do not need
//! an external LAPACK, and avoiding one keeps results bit-reproducible
//! across machines.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Conjugate transpose.
pub fn adjoint(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

pub fn frobenius_norm(a: &Array2<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(a: &Array2<C64>) -> f64 {
    a.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

pub fn trace(a: &Array2<C64>) -> C64 {
    a.diag().sum()
}

/// Largest |a - a^dagger| entry, as a Hermiticity defect measure.
pub fn hermitian_defect(a: &Array2<C64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigendecomposition of a Hermitian matrix: `a = vectors * diag(values) *
/// vectors^dagger`, values ascending.
pub struct EigH {
    pub values: Vec<f64>,
    pub vectors: Array2<C64>,
}

/// Cyclic Jacobi with per-element skip threshold. Quadratically convergent;
/// bails out if 100 sweeps do not converge (ill-posed input).
fn jacobi(a: &Array2<C64>, want_vectors: bool) -> Result<(Vec<f64>, Option<Array2<C64>>)> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::numerics("eigh", "matrix must be square"));
    }
    let defect = hermitian_defect(a);
    let scale = max_abs(a).max(1e-300);
    if defect > 1e-9 * scale {
        return Err(Error::numerics(
            "eigh",
            format!("matrix is not Hermitian (defect {defect:.3e} vs scale {scale:.3e})"),
        ));
    }
    let mut m = a.clone();
    // Symmetrise rounding noise so the iteration sees an exactly Hermitian matrix.
    for i in 0..n {
        m[(i, i)] = C64::new(m[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)].conj());
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
    let mut v = if want_vectors { Some(Array2::<C64>::eye(n)) } else { None };
    if n > 1 {
        let fro = frobenius_norm(&m).max(1e-300);
        let pairs = (n * (n - 1) / 2) as f64;
        let threshold = 1e-15 * fro / pairs.sqrt();
        for _sweep in 0..100 {
            let mut rotated = false;
            for p in 0..n - 1 {
                for q in p + 1..n {
                    let apq = m[(p, q)];
                    let r = apq.norm();
                    if r <= threshold {
                        continue;
                    }
                    rotated = true;
                    let phase = apq / r; // e^{i alpha}
                    let app = m[(p, p)].re;
                    let aqq = m[(q, q)].re;
                    let theta = (aqq - app) / (2.0 * r);
                    let t = if theta >= 0.0 {
                        1.0 / (theta + (theta * theta + 1.0).sqrt())
                    } else {
                        -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                    };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    let s_phase = phase * s; // s e^{i alpha}
                    for k in 0..n {
                        if k == p || k == q {
                            continue;
                        }
                        let akp = m[(k, p)];
                        let akq = m[(k, q)];
                        let new_kp = akp * c - akq * s_phase.conj();
                        let new_kq = akp * s_phase + akq * c;
                        m[(k, p)] = new_kp;
                        m[(p, k)] = new_kp.conj();
                        m[(k, q)] = new_kq;
                        m[(q, k)] = new_kq.conj();
                    }
                    let new_pp = app * c * c + aqq * s * s - 2.0 * r * s * c;
                    let new_qq = app * s * s + aqq * c * c + 2.0 * r * s * c;
                    m[(p, p)] = C64::new(new_pp, 0.0);
                    m[(q, q)] = C64::new(new_qq, 0.0);
                    m[(p, q)] = C64::new(0.0, 0.0);
                    m[(q, p)] = C64::new(0.0, 0.0);
                    if let Some(v) = v.as_mut() {
                        for k in 0..n {
                            let vkp = v[(k, p)];
                            let vkq = v[(k, q)];
                            v[(k, p)] = vkp * c - vkq * s_phase.conj();
                            v[(k, q)] = vkp * s_phase + vkq * c;
                        }
                    }
                }
            }
            if !rotated {
                break;
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let values: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
    let sorted_values: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let sorted_vectors = v.map(|v| {
        let mut out = Array2::<C64>::zeros((n, n));
        for (new_col, &old_col) in order.iter().enumerate() {
            for k in 0..n {
                out[(k, new_col)] = v[(k, old_col)];
            }
        }
        out
    });
    Ok((sorted_values, sorted_vectors))
}

pub fn eigh(a: &Array2<C64>) -> Result<EigH> {
    let (values, vectors) = jacobi(a, true)?;
    Ok(EigH { values, vectors: vectors.expect("vectors requested") })
}

/// Householder reduction of a Hermitian matrix to a real symmetric
/// tridiagonal (diagonal, subdiagonal), values-only. Subdiagonal phases are
/// absorbed into an implicit diagonal unitary, which leaves the spectrum
/// unchanged.
fn tridiagonal_values(a: &Array2<C64>) -> (Vec<f64>, Vec<f64>) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut diag = vec![0.0f64; n];
    let mut sub = vec![0.0f64; n.saturating_sub(1)];
    for k in 0..n.saturating_sub(2) {
        let norm_x: f64 = (k + 1..n).map(|i| m[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if norm_x < 1e-300 {
            sub[k] = 0.0;
            continue;
        }
        let x0 = m[(k + 1, k)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { C64::new(1.0, 0.0) };
        let alpha = -phase * norm_x;
        // v = x - alpha e1
        let mut v: Vec<C64> = (k + 1..n).map(|i| m[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        sub[k] = norm_x;
        if vnorm2 < 1e-300 {
            continue;
        }
        let tau = 2.0 / vnorm2;
        let t = n - k - 1;
        // u = tau * B v on the trailing block B = m[k+1.., k+1..]
        let mut u = vec![C64::new(0.0, 0.0); t];
        for i in 0..t {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..t {
                acc += m[(k + 1 + i, k + 1 + j)] * v[j];
            }
            u[i] = tau * acc;
        }
        let vdu: C64 = v.iter().zip(&u).map(|(vi, ui)| vi.conj() * ui).sum();
        let c = 0.5 * tau * vdu;
        let w: Vec<C64> = u.iter().zip(&v).map(|(ui, vi)| ui - c * vi).collect();
        // B <- B - v w^dag - w v^dag
        for i in 0..t {
            for j in 0..t {
                let delta = v[i] * w[j].conj() + w[i] * v[j].conj();
                m[(k + 1 + i, k + 1 + j)] -= delta;
            }
        }
    }
    if n >= 2 {
        sub[n - 2] = m[(n - 1, n - 2)].norm();
    }
    for i in 0..n {
        diag[i] = m[(i, i)].re;
    }
    (diag, sub)
}

/// Implicit-shift QL iteration on a symmetric tridiagonal, values only.
fn tql_values(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n <= 1 {
        return Ok(());
    }
    // e is the subdiagonal, padded to length n with a trailing zero slot
    let mut off = vec![0.0f64; n];
    off[..n - 1].copy_from_slice(e);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if off[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::numerics("eigvalsh", "QL iteration did not converge"));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * off[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + off[l] / (g + r.copysign(g));
            let mut s = 1.0f64;
            let mut c = 1.0f64;
            let mut p = 0.0f64;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    off[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            off[l] = g;
            off[m] = 0.0;
        }
    }
    Ok(())
}

pub fn eigvalsh(a: &Array2<C64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    if n <= 16 {
        return Ok(jacobi(a, false)?.0);
    }
    let defect = hermitian_defect(a);
    let scale = max_abs(a).max(1e-300);
    if defect > 1e-9 * scale {
        return Err(Error::numerics(
            "eigvalsh",
            format!("matrix is not Hermitian (defect {defect:.3e} vs scale {scale:.3e})"),
        ));
    }
    let (mut d, mut e) = tridiagonal_values(a);
    tql_values(&mut d, &mut e)?;
    d.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(d)
}

pub fn min_eigenvalue(a: &Array2<C64>) -> Result<f64> {
    Ok(*eigvalsh(a)?
        .first()
        .ok_or_else(|| Error::numerics("eigh", "empty matrix"))?)
}

/// Trace distance (1/2)*||a - b||_1 between two Hermitian matrices.
pub fn trace_distance(a: &Array2<C64>, b: &Array2<C64>) -> Result<f64> {
    let diff = a - b;
    Ok(0.5 * eigvalsh(&diff)?.iter().map(|v| v.abs()).sum::<f64>())
}

/// exp(-i * h * t) for Hermitian `h`, via its eigendecomposition.
pub fn unitary_from_hermitian(eig: &EigH, t: f64) -> Array2<C64> {
    let n = eig.values.len();
    let mut phases = Array2::<C64>::zeros((n, n));
    for (i, &lambda) in eig.values.iter().enumerate() {
        phases[(i, i)] = (-C64::i() * lambda * t).exp();
    }
    let vt = adjoint(&eig.vectors);
    eig.vectors.dot(&phases).dot(&vt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn random_hermitian(n: usize, seed: u64) -> Array2<C64> {
        // small deterministic LCG; quality is irrelevant here
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut a = Array2::<C64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = C64::new(next(), next());
            }
        }
        let at = adjoint(&a);
        a + at
    }

    #[test]
    fn two_level_coupling_eigenvalues() {
        let g = 0.37;
        let h = array![
            [C64::new(0.0, 0.0), C64::new(g, 0.0)],
            [C64::new(g, 0.0), C64::new(0.0, 0.0)]
        ];
        let vals = eigvalsh(&h).unwrap();
        assert!((vals[0] + g).abs() < 1e-14);
        assert!((vals[1] - g).abs() < 1e-14);
    }

    #[test]
    fn reconstruction_from_eigenpairs() {
        for n in [3usize, 8, 17] {
            let a = random_hermitian(n, n as u64);
            let eig = eigh(&a).unwrap();
            let mut lambda = Array2::<C64>::zeros((n, n));
            for i in 0..n {
                lambda[(i, i)] = C64::new(eig.values[i], 0.0);
            }
            let rebuilt = eig.vectors.dot(&lambda).dot(&adjoint(&eig.vectors));
            let err = max_abs(&(&rebuilt - &a));
            assert!(err < 1e-12 * max_abs(&a).max(1.0), "n={n} err={err}");
            // eigenvectors unitary
            let gram = adjoint(&eig.vectors).dot(&eig.vectors);
            let eye = Array2::<C64>::eye(n);
            assert!(max_abs(&(&gram - &eye)) < 1e-12);
        }
    }

    #[test]
    fn complex_off_diagonals_are_handled() {
        let h = array![
            [C64::new(1.0, 0.0), C64::new(0.0, 0.5)],
            [C64::new(0.0, -0.5), C64::new(-1.0, 0.0)]
        ];
        let vals = eigvalsh(&h).unwrap();
        let expect = (1.0f64 + 0.25).sqrt();
        assert!((vals[0] + expect).abs() < 1e-14);
        assert!((vals[1] - expect).abs() < 1e-14);
    }

    #[test]
    fn trace_distance_of_orthogonal_pure_states() {
        let p0 = array![
            [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            [C64::new(0.0, 0.0), C64::new(0.0, 0.0)]
        ];
        let p1 = array![
            [C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
            [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]
        ];
        assert!((trace_distance(&p0, &p1).unwrap() - 1.0).abs() < 1e-14);
        assert!(trace_distance(&p0, &p0).unwrap() < 1e-15);
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let a = array![
            [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            [C64::new(0.5, 0.0), C64::new(0.0, 0.0)]
        ];
        assert!(eigvalsh(&a).is_err());
    }

    #[test]
    fn tridiagonal_path_matches_jacobi() {
        // eigvalsh routes through Householder + QL above n = 16; check it
        // against the rotation-based solver
        for n in [17usize, 24, 40] {
            let a = random_hermitian(n, 1000 + n as u64);
            let fast = eigvalsh(&a).unwrap();
            let slow = jacobi(&a, false).unwrap().0;
            let scale = max_abs(&a).max(1.0);
            for (f, s) in fast.iter().zip(&slow) {
                assert!((f - s).abs() < 1e-11 * scale, "n={n}: {f} vs {s}");
            }
        }
    }

    #[test]
    fn hermitian_evolution_is_unitary() {
        let h = random_hermitian(6, 42);
        let eig = eigh(&h).unwrap();
        let u = unitary_from_hermitian(&eig, 0.7);
        let gram = adjoint(&u).dot(&u);
        let eye = Array2::<C64>::eye(6);
        assert!(max_abs(&(&gram - &eye)) < 1e-12);
    }
}
