//! Explicit Liouvillian superoperators and their exponentials.
//!
//! This is the brute-force reference path: assemble the D^2 x D^2 generator
//! of the master equation and apply its matrix exponential to a vectorised
//! density matrix. Exact up to the exponential's truncation, so it serves
//! as an independent cross-check for the time-stepping propagator on small
//! systems. Never used by the propagator itself.

use ndarray::{linalg::kron, Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::adjoint;

/// Row-major vectorisation: `vec(rho)[i*D + j] = rho[i][j]`, under which
/// `vec(A rho B) = (A kron B^T) vec(rho)`.
pub fn vectorize(rho: &Array2<C64>) -> Array1<C64> {
    Array1::from_iter(rho.iter().cloned())
}

pub fn unvectorize(v: &Array1<C64>, dim: usize) -> Array2<C64> {
    Array2::from_shape_vec((dim, dim), v.to_vec()).expect("length is dim^2")
}

/// Assemble the Liouvillian matrix of
/// `d rho/dt = -i[H, rho] + sum_i gamma_i (L rho L^dag - 1/2 {L^dag L, rho})`.
pub fn liouvillian(h: &Array2<C64>, channels: &[(Array2<C64>, f64)]) -> Array2<C64> {
    let d = h.nrows();
    let eye = Array2::<C64>::eye(d);
    let minus_i = -C64::i();
    let mut sup = kron(h, &eye).mapv(|z| z * minus_i);
    sup += &kron(&eye, &h.t().to_owned()).mapv(|z| z * (-minus_i));
    for (l, gamma) in channels {
        if *gamma == 0.0 {
            continue;
        }
        let g = C64::new(*gamma, 0.0);
        let l_conj = l.mapv(|z| z.conj());
        let ldl = adjoint(l).dot(l);
        sup += &kron(l, &l_conj).mapv(|z| z * g);
        sup += &kron(&ldl, &eye).mapv(|z| z * (-0.5 * g));
        sup += &kron(&eye, &ldl.t().to_owned()).mapv(|z| z * (-0.5 * g));
    }
    sup
}

/// Matrix exponential by scaling and squaring with a Taylor series on the
/// scaled matrix. Intended for the modest dimensions of the reference path.
pub fn expm(a: &Array2<C64>) -> Result<Array2<C64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::numerics("expm", "matrix must be square"));
    }
    // 1-norm (max column abs sum) drives the scaling.
    let mut norm: f64 = 0.0;
    for j in 0..n {
        let col: f64 = (0..n).map(|i| a[(i, j)].norm()).sum();
        norm = norm.max(col);
    }
    let squarings = if norm > 0.25 { (norm / 0.25).log2().ceil() as u32 } else { 0 };
    let scale = 2f64.powi(-(squarings as i32));
    let scaled = a.mapv(|z| z * scale);

    // Taylor on the scaled matrix: with norm <= 0.25 the 24-term tail is
    // below 1e-30.
    let mut result = Array2::<C64>::eye(n);
    let mut term = Array2::<C64>::eye(n);
    for k in 1..=24 {
        term = term.dot(&scaled).mapv(|z| z / k as f64);
        result += &term;
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    Ok(result)
}

/// Propagate by exponentiating the Liouvillian at each requested time.
pub fn propagate_by_exponentiation(
    h: &Array2<C64>,
    channels: &[(Array2<C64>, f64)],
    rho0: &Array2<C64>,
    times: &[f64],
) -> Result<Vec<Array2<C64>>> {
    let d = h.nrows();
    let sup = liouvillian(h, channels);
    let v0 = vectorize(rho0);
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let propagator = expm(&sup.mapv(|z| z * t))?;
        let vt = propagator.dot(&v0);
        out.push(unvectorize(&vt, d));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use ndarray::array;

    #[test]
    fn expm_of_zero_is_identity() {
        let z = Array2::<C64>::zeros((4, 4));
        let e = expm(&z).unwrap();
        assert!(max_abs(&(&e - &Array2::<C64>::eye(4))) < 1e-15);
    }

    #[test]
    fn expm_matches_scalar_exponential_on_diagonal() {
        let mut a = Array2::<C64>::zeros((3, 3));
        a[(0, 0)] = C64::new(-2.0, 1.0);
        a[(1, 1)] = C64::new(0.3, -4.0);
        a[(2, 2)] = C64::new(1.7, 0.0);
        let e = expm(&a).unwrap();
        for i in 0..3 {
            let expect = a[(i, i)].exp();
            assert!((e[(i, i)] - expect).norm() < 1e-13);
        }
    }

    #[test]
    fn expm_of_pauli_x_rotation() {
        // exp(-i theta X) = cos(theta) I - i sin(theta) X
        let theta = 0.83;
        let x = array![
            [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
        ];
        let e = expm(&x.mapv(|z| -C64::i() * theta * z)).unwrap();
        assert!((e[(0, 0)].re - theta.cos()).abs() < 1e-14);
        assert!((e[(0, 1)].im + theta.sin()).abs() < 1e-14);
    }

    #[test]
    fn liouvillian_reproduces_two_level_decay() {
        // L = |0><1| at rate gamma, rho0 = |1><1|: rho11(t) = exp(-gamma t).
        let gamma = 2.0;
        let h = Array2::<C64>::zeros((2, 2));
        let mut l = Array2::<C64>::zeros((2, 2));
        l[(0, 1)] = C64::new(1.0, 0.0);
        let mut rho0 = Array2::<C64>::zeros((2, 2));
        rho0[(1, 1)] = C64::new(1.0, 0.0);
        let times = [0.0, 0.2, 0.5, 1.0];
        let states =
            propagate_by_exponentiation(&h, &[(l, gamma)], &rho0, &times).unwrap();
        for (rho, &t) in states.iter().zip(&times) {
            let expect = (-gamma * t).exp();
            assert!((rho[(1, 1)].re - expect).abs() < 1e-12, "t={t}");
            assert!((rho[(0, 0)].re - (1.0 - expect)).abs() < 1e-12);
        }
    }

    #[test]
    fn number_dephasing_coherence_rates_from_liouvillian_spectrum() {
        // D[a^dagger a] at rate gamma on a 3-level ladder: the coherence
        // (n, m) decays at gamma (n-m)^2 / 2. The Liouvillian is diagonal
        // in this basis, so its spectrum contains exactly those rates.
        let gamma = 0.7;
        let h = Array2::<C64>::zeros((3, 3));
        let mut num = Array2::<C64>::zeros((3, 3));
        num[(1, 1)] = C64::new(1.0, 0.0);
        num[(2, 2)] = C64::new(2.0, 0.0);
        let sup = liouvillian(&h, &[(num, gamma)]);
        let mut expected: Vec<f64> = Vec::new();
        for n in 0..3i32 {
            for m in 0..3i32 {
                expected.push(-gamma * ((n - m) * (n - m)) as f64 / 2.0);
            }
        }
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut diag: Vec<f64> = sup.diag().iter().map(|z| z.re).collect();
        diag.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (d, e) in diag.iter().zip(&expected) {
            assert!((d - e).abs() < 1e-14);
        }
        // off-diagonal part of the superoperator must vanish here
        let mut off = sup.clone();
        for i in 0..9 {
            off[(i, i)] = C64::new(0.0, 0.0);
        }
        assert!(max_abs(&off) < 1e-15);
    }
}
