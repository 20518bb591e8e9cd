//! Trajectory-ensemble validation of noise-driven dephasing plans.
//!
//! A dephasing plan claims that frequency noise of a given variance and
//! correlation time, coupled through an operator `O`, produces the Lindblad
//! dissipator `D[O]` at the plan's rate. This module checks the claim the
//! hard way: it generates Ornstein-Uhlenbeck realisations, propagates each
//! trajectory unitarily under `H0 + dPhi(t) * O`, averages the density
//! matrix, fits exponential decay rates to designated coherences, and
//! compares against the plan.
//!
//! The Ornstein-Uhlenbeck update is the exact discretisation
//! `x' = x e^{-dt/tau} + sigma sqrt(1 - e^{-2 dt/tau}) xi`, so sample
//! statistics are unbiased for any step. Trajectories are seeded per index
//! on independent counter streams and reduced in index order, which makes
//! ensembles reproducible regardless of thread count.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, adjoint};

/// An Ornstein-Uhlenbeck process specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuProcess {
    /// Stationary variance, rad^2/s^2.
    pub variance: f64,
    /// Correlation time, s.
    pub correlation_time: f64,
    pub seed: u64,
    /// Sample step, s; must not exceed correlation_time / 10.
    pub step: f64,
}

impl OuProcess {
    pub fn validate(&self) -> Result<()> {
        if self.variance < 0.0 {
            return Err(Error::invalid("ou.variance", "must be non-negative"));
        }
        if self.correlation_time <= 0.0 {
            return Err(Error::invalid("ou.correlation_time", "must be positive"));
        }
        if self.step <= 0.0 {
            return Err(Error::invalid("ou.step", "must be positive"));
        }
        if self.step > self.correlation_time / 10.0 {
            return Err(Error::invalid(
                "ou.step",
                format!(
                    "step {:.3e} s too coarse; need <= correlation_time/10 = {:.3e} s",
                    self.step,
                    self.correlation_time / 10.0
                ),
            ));
        }
        Ok(())
    }
}

/// Generate one realisation with `n` samples (stationary start).
pub fn generate_ou(process: &OuProcess, duration: f64) -> Result<Vec<f64>> {
    process.validate()?;
    let n = (duration / process.step).ceil() as usize + 1;
    Ok(generate_ou_stream(process, n, 0))
}

/// Realisation on stream `stream` (deterministic per (seed, stream)).
fn generate_ou_stream(process: &OuProcess, samples: usize, stream: u64) -> Vec<f64> {
    let sigma = process.variance.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(process.seed);
    rng.set_stream(stream);
    let decay = (-process.step / process.correlation_time).exp();
    let kick = sigma * (1.0 - decay * decay).sqrt();
    let mut out = Vec::with_capacity(samples);
    let mut x = sigma * rng.sample::<f64, _>(StandardNormal);
    out.push(x);
    for _ in 1..samples {
        x = x * decay + kick * rng.sample::<f64, _>(StandardNormal);
        out.push(x);
    }
    out
}

/// Ensemble-averaged evolution with fitted coherence decay rates.
#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub times: Vec<f64>,
    pub mean_states: Vec<Array2<C64>>,
    pub trajectories: usize,
    pub fits: Vec<CoherenceFit>,
    /// Worst per-trajectory deviation of the state norm from 1.
    pub max_norm_defect: f64,
}

/// Exponential fit of one coherence magnitude.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoherenceFit {
    pub indices: (usize, usize),
    /// Fitted decay rate of |<rho_ab>|, 1/s.
    pub coherence_rate: f64,
    /// Equivalent Lindblad channel rate: coherence rate rescaled by
    /// 2/(O_aa - O_bb)^2 for the coupled operator.
    pub channel_rate: f64,
    /// Batch standard error of the channel rate, 1/s.
    pub std_error: f64,
    /// RMS of the systematic quadratic component of the log-magnitude over
    /// the fit window (flags non-exponential decay).
    pub residual: f64,
    pub fit_points: usize,
}

/// Fit window: use samples where the coherence magnitude lies between
/// these fractions of its initial value. The lower edge stays above the
/// finite-ensemble incoherent floor (~0.5 sqrt(pi/4N) for a few hundred
/// trajectories), which would otherwise bend the log curve upward.
const FIT_WINDOW: (f64, f64) = (0.25, 0.9);
/// Log-residual above which the decay is flagged as non-exponential.
pub const RESIDUAL_LIMIT: f64 = 0.05;

fn fit_log_slope(times: &[f64], values: &[f64]) -> Option<(f64, f64, usize)> {
    let initial = values.first().copied()?;
    if initial <= 0.0 {
        return None;
    }
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    for (&t, &v) in times.iter().zip(values) {
        let frac = v / initial;
        if frac <= FIT_WINDOW.1 && frac >= FIT_WINDOW.0 {
            ts.push(t);
            ys.push(v.ln());
        }
    }
    if ts.len() < 5 {
        return None;
    }
    let n = ts.len() as f64;
    let tm = ts.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sxx: f64 = ts.iter().map(|t| (t - tm) * (t - tm)).sum();
    let sxy: f64 = ts.iter().zip(&ys).map(|(t, y)| (t - tm) * (y - ym)).sum();
    let slope = sxy / sxx;
    // Systematic curvature of the log curve: project the linear-fit
    // residuals onto the orthogonal quadratic and report that component's
    // rms. Point-wise statistical noise averages out of this projection,
    // so it cleanly separates quasi-static (Gaussian) decay from a noisy
    // exponential.
    let u2m = ts.iter().map(|t| (t - tm) * (t - tm)).sum::<f64>() / n;
    let p: Vec<f64> = ts.iter().map(|t| (t - tm) * (t - tm) - u2m).collect();
    let zp: f64 = ts
        .iter()
        .zip(&ys)
        .zip(&p)
        .map(|((t, y), pk)| (y - ym - slope * (t - tm)) * pk)
        .sum();
    let pp: f64 = p.iter().map(|pk| pk * pk).sum();
    let curvature = if pp > 0.0 { (zp / pp).abs() * (pp / n).sqrt() } else { 0.0 };
    Some((-slope, curvature, ts.len()))
}

/// Propagate `n_traj` unitary trajectories under `H(t) = h0 + dPhi(t) * op`
/// from the pure state `psi0` and average the density matrix.
///
/// The step splits the propagator symmetrically around the noise factor,
/// `exp(-iH0 dt/2) exp(-i phi O dt) exp(-iH0 dt/2)`; each factor is an
/// exact exponential from an eigendecomposition, so every trajectory is
/// exactly unitary. When `[H0, O] = 0` (every dephasing check) the
/// splitting itself is exact.
pub fn propagate_noisy(
    h0: &Array2<C64>,
    op: &Array2<C64>,
    process: &OuProcess,
    psi0: &Array1<C64>,
    times: &[f64],
    n_traj: usize,
    coherences: &[(usize, usize)],
) -> Result<EnsembleResult> {
    process.validate()?;
    if n_traj < 100 {
        return Err(Error::invalid("n_traj", "need at least 100 trajectories"));
    }
    if times.len() < 2 || times[0] != 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("times", "need increasing times starting at 0"));
    }
    let dim = h0.nrows();
    if op.nrows() != dim || psi0.len() != dim {
        return Err(Error::invalid("propagate_noisy", "dimension mismatch"));
    }
    if linalg::hermitian_defect(op) > 1e-9 * linalg::max_abs(op).max(1e-300) {
        return Err(Error::invalid("propagate_noisy", "noise-coupled operator must be Hermitian"));
    }
    let norm = psi0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::invalid("propagate_noisy", "initial state must be normalised"));
    }

    let duration = *times.last().unwrap();
    // Noise is held constant over each sample step (the exact OU samples
    // decorrelate the steps); output times snap to the step grid.
    let dt = process.step;
    let n_steps = (duration / dt).ceil() as usize;
    let sample_steps: Vec<usize> = times
        .iter()
        .map(|&t| ((t / dt).round() as usize).min(n_steps))
        .collect();
    if sample_steps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(
            "times",
            "output grid is finer than the noise step; reduce the point count",
        ));
    }
    // fits and results use the snapped times
    let times: Vec<f64> = sample_steps.iter().map(|&s| s as f64 * dt).collect();
    let times = &times[..];

    let h0_eig = linalg::eigh(h0)?;
    let op_eig = linalg::eigh(op)?;
    let half_step = linalg::unitary_from_hermitian(&h0_eig, 0.5 * dt);
    let op_basis = op_eig.vectors.clone();
    let op_basis_dag = adjoint(&op_basis);
    let op_values = Array1::from_vec(op_eig.values.clone());

    let results: Vec<(Vec<Array2<C64>>, f64)> = (0..n_traj)
        .into_par_iter()
        .map(|traj| {
            let noise = generate_ou_stream(process, n_steps, traj as u64 + 1);
            let mut psi = psi0.clone();
            let mut snapshots: Vec<Array2<C64>> = Vec::with_capacity(times.len());
            let mut norm_defect = 0.0f64;
            let mut sample_cursor = 0;
            for step in 0..=n_steps {
                while sample_cursor < sample_steps.len() && sample_steps[sample_cursor] == step {
                    let mut rho = Array2::<C64>::zeros((dim, dim));
                    for i in 0..dim {
                        for j in 0..dim {
                            rho[(i, j)] = psi[i] * psi[j].conj();
                        }
                    }
                    snapshots.push(rho);
                    let n = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                    norm_defect = norm_defect.max((n - 1.0).abs());
                    sample_cursor += 1;
                }
                if step == n_steps {
                    break;
                }
                // half H0, full noise factor, half H0
                psi = half_step.dot(&psi);
                let phi = noise[step];
                let mut v = op_basis_dag.dot(&psi);
                for (k, amp) in v.iter_mut().enumerate() {
                    *amp *= (-C64::i() * op_values[k] * phi * dt).exp();
                }
                psi = op_basis.dot(&v);
                psi = half_step.dot(&psi);
            }
            (snapshots, norm_defect)
        })
        .collect();

    // Deterministic ordered reduction.
    let mut mean_states: Vec<Array2<C64>> =
        (0..times.len()).map(|_| Array2::<C64>::zeros((dim, dim))).collect();
    let mut max_norm_defect = 0.0f64;
    for (snapshots, defect) in &results {
        for (mean, snap) in mean_states.iter_mut().zip(snapshots) {
            *mean += snap;
        }
        max_norm_defect = max_norm_defect.max(*defect);
    }
    let weight = 1.0 / n_traj as f64;
    for mean in &mut mean_states {
        mean.mapv_inplace(|z| z * weight);
    }

    // Per-coherence fits, with batch standard errors.
    let n_batches = 10.min(n_traj);
    let batch_size = n_traj / n_batches;
    let mut fits = Vec::with_capacity(coherences.len());
    for &(a, b) in coherences {
        if a >= dim || b >= dim {
            return Err(Error::invalid("coherences", "index out of range"));
        }
        let factor = {
            let d_o = op[(a, a)].re - op[(b, b)].re;
            if d_o == 0.0 {
                return Err(Error::invalid(
                    "coherences",
                    format!("operator does not dephase ({a},{b}); equal diagonal elements"),
                ));
            }
            2.0 / (d_o * d_o)
        };
        let series: Vec<f64> = mean_states.iter().map(|rho| rho[(a, b)].norm()).collect();
        let (coherence_rate, residual, fit_points) =
            fit_log_slope(times, &series).ok_or_else(|| {
                Error::numerics(
                    "rate_fit",
                    format!(
                        "cannot fit coherence ({a},{b}): too few points inside the decay window"
                    ),
                )
            })?;
        // Leave-one-batch-out jackknife for the standard error: refit on
        // the complex mean with each batch removed. Unlike per-batch fits,
        // every jackknife curve stays in the smooth, nearly linear regime,
        // so the estimate scales properly with the trajectory count.
        let mut batch_sums: Vec<Vec<C64>> =
            vec![vec![C64::new(0.0, 0.0); times.len()]; n_batches];
        for (idx, (snapshots, _)) in results.iter().enumerate() {
            let batch = (idx / batch_size).min(n_batches - 1);
            for (k, snap) in snapshots.iter().enumerate() {
                batch_sums[batch][k] += snap[(a, b)];
            }
        }
        let total_sum: Vec<C64> = (0..times.len())
            .map(|k| batch_sums.iter().map(|bs| bs[k]).sum())
            .collect();
        let mut jackknife = Vec::with_capacity(n_batches);
        for batch in 0..n_batches {
            let lo = batch * batch_size;
            let hi = if batch == n_batches - 1 { n_traj } else { lo + batch_size };
            let remaining = (n_traj - (hi - lo)) as f64;
            let mags: Vec<f64> = (0..times.len())
                .map(|k| (total_sum[k] - batch_sums[batch][k]).norm() / remaining)
                .collect();
            if let Some((rate, _, _)) = fit_log_slope(times, &mags) {
                jackknife.push(rate * factor);
            }
        }
        let std_error = if jackknife.len() >= 2 {
            let b = jackknife.len() as f64;
            let m = jackknife.iter().sum::<f64>() / b;
            let var = jackknife.iter().map(|r| (r - m) * (r - m)).sum::<f64>() * (b - 1.0) / b;
            var.sqrt()
        } else {
            f64::INFINITY
        };
        fits.push(CoherenceFit {
            indices: (a, b),
            coherence_rate,
            channel_rate: coherence_rate * factor,
            std_error,
            residual,
            fit_points,
        });
    }

    Ok(EnsembleResult { times: times.to_vec(), mean_states, trajectories: n_traj, fits, max_norm_defect })
}

/// Outcome of checking one plan against its trajectory ensemble.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationRow {
    pub label: String,
    pub target_rate: f64,
    pub fitted_rate: f64,
    pub std_error: f64,
    pub residual: f64,
    pub pass: bool,
    pub note: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub rows: Vec<VerificationRow>,
    pub trajectories: usize,
    pub seed: u64,
    pub pass: bool,
}

/// Systematic tolerance on fitted vs target rates, on top of statistics.
pub const SYSTEMATIC_TOL: f64 = 0.05;

/// Time at which the ensemble coherence envelope for exponentially
/// correlated phase noise reaches `fraction` of its initial value:
/// `|c(t)| = exp(-s^2 tau^2 (t/tau - 1 + e^{-t/tau}))`, Gaussian at early
/// times and exponential at rate `s^2 tau` beyond the correlation time.
fn kubo_decay_time(fraction: f64, sigma: f64, tau_c: f64) -> f64 {
    let target = (1.0 / fraction).ln();
    let envelope_exponent = |t: f64| {
        let x = t / tau_c;
        sigma * sigma * tau_c * tau_c * (x - 1.0 + (-x).exp())
    };
    let mut hi = tau_c;
    while envelope_exponent(hi) < target {
        hi *= 2.0;
        if hi > 1e15 {
            return 1e15;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if envelope_exponent(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Verify one dephasing target: drive an ensemble with the plan's variance
/// and correlation time coupled through `op`, fit the designated coherence,
/// and compare to the target channel rate.
#[allow(clippy::too_many_arguments)]
pub fn verify_dephasing(
    label: &str,
    target_rate: f64,
    variance: f64,
    correlation_time: f64,
    h0: &Array2<C64>,
    op: &Array2<C64>,
    psi0: &Array1<C64>,
    coherence: (usize, usize),
    n_traj: usize,
    seed: u64,
) -> Result<VerificationRow> {
    if target_rate == 0.0 || variance == 0.0 {
        // zero-noise plans are trivially correct
        return Ok(VerificationRow {
            label: label.to_string(),
            target_rate,
            fitted_rate: 0.0,
            std_error: 0.0,
            residual: 0.0,
            pass: target_rate == 0.0 && variance == 0.0,
            note: "zero-noise plan".into(),
        });
    }
    let d_o = op[(coherence.0, coherence.0)].re - op[(coherence.1, coherence.1)].re;
    // Sample until the exact coherence envelope for exponentially
    // correlated Gaussian noise reaches 0.15 of its initial value; this
    // covers both the narrowing (exponential) and quasi-static (Gaussian)
    // regimes.
    let sigma = variance.sqrt() * d_o.abs();
    let step = correlation_time / 10.0;
    let duration = kubo_decay_time(0.15, sigma, correlation_time).max(20.0 * step);
    // the sample grid cannot be finer than the noise step
    let points = 200.min((duration / step).floor() as usize).max(5);
    let times: Vec<f64> = (0..=points).map(|k| duration * k as f64 / points as f64).collect();
    let process = OuProcess { variance, correlation_time, seed, step };
    let ensemble = match propagate_noisy(h0, op, &process, psi0, &times, n_traj, &[coherence]) {
        Ok(e) => e,
        Err(Error::Numerics { context, message }) if context == "rate_fit" => {
            return Ok(VerificationRow {
                label: label.to_string(),
                target_rate,
                fitted_rate: f64::NAN,
                std_error: f64::NAN,
                residual: f64::NAN,
                pass: false,
                note: format!("rate fit failed: {message}"),
            });
        }
        Err(e) => return Err(e),
    };
    let fit = &ensemble.fits[0];
    let tolerance = SYSTEMATIC_TOL * target_rate + 2.0 * fit.std_error;
    let deviation = (fit.channel_rate - target_rate).abs();
    let exponential = fit.residual <= RESIDUAL_LIMIT;
    let pass = deviation <= tolerance && exponential;
    let note = if !exponential {
        format!("non-exponential decay (residual {:.3})", fit.residual)
    } else {
        String::new()
    };
    Ok(VerificationRow {
        label: label.to_string(),
        target_rate,
        fitted_rate: fit.channel_rate,
        std_error: fit.std_error,
        residual: fit.residual,
        pass,
        note,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn process(variance: f64, tau: f64, seed: u64) -> OuProcess {
        OuProcess { variance, correlation_time: tau, seed, step: tau / 10.0 }
    }

    #[test]
    fn zero_variance_gives_zero_series() {
        let series = generate_ou(&process(0.0, 1e-5, 3), 1e-3).unwrap();
        assert!(series.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn coarse_step_is_rejected() {
        let p = OuProcess { variance: 1.0, correlation_time: 1e-5, seed: 0, step: 0.5e-5 };
        assert!(p.validate().is_err());
    }

    #[test]
    fn stationary_moments() {
        // mean within 3 sigma/sqrt(N), variance within 5%, N = 1e6
        let sigma2 = 4.0;
        let p = process(sigma2, 1e-5, 42);
        let series = generate_ou(&p, 1.0).unwrap(); // 1e6 samples
        let n = series.len() as f64;
        let mean = series.iter().sum::<f64>() / n;
        // correlated samples: effective N is smaller by ~2 tau/dt = 20
        let correlated_sigma = (sigma2 * 20.0 / n).sqrt();
        assert!(mean.abs() < 3.0 * correlated_sigma, "mean {mean}");
        let var = series.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        assert!((var - sigma2).abs() / sigma2 < 0.05, "variance {var}");
    }

    #[test]
    fn autocorrelation_decays_at_tau() {
        let sigma2 = 1.0;
        let tau = 1e-5;
        let p = process(sigma2, tau, 7);
        let series = generate_ou(&p, 0.2).unwrap(); // 2e5 samples
        let lag = 10; // = tau / step
        let n = series.len() - lag;
        let mut acf = 0.0;
        for k in 0..n {
            acf += series[k] * series[k + lag];
        }
        acf /= n as f64;
        let expect = sigma2 / std::f64::consts::E;
        assert!((acf - expect).abs() / expect < 0.10, "acf {acf} vs {expect}");
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let a = generate_ou(&process(2.0, 1e-5, 99), 1e-3).unwrap();
        let b = generate_ou(&process(2.0, 1e-5, 99), 1e-3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_noise_ensemble_equals_closed_evolution() {
        // H0 = g sigma_x, no noise: populations Rabi-oscillate exactly
        let g = 1.0e5;
        let mut h0 = Array2::<C64>::zeros((2, 2));
        h0[(0, 1)] = C64::new(g, 0.0);
        h0[(1, 0)] = C64::new(g, 0.0);
        let op = Array2::<C64>::eye(2); // inert direction
        let mut psi0 = Array1::<C64>::zeros(2);
        psi0[1] = C64::new(1.0, 0.0);
        let times: Vec<f64> = (0..=20).map(|k| k as f64 * 1e-7).collect();
        let p = OuProcess { variance: 0.0, correlation_time: 1e-5, seed: 5, step: 1e-7 };
        let out = propagate_noisy(&h0, &op, &p, &psi0, &times, 100, &[]).unwrap();
        assert!(out.max_norm_defect < 1e-10);
        for (k, &t) in times.iter().enumerate() {
            let p1 = (g * t).cos().powi(2);
            let got = out.mean_states[k][(1, 1)].re;
            assert!((got - p1).abs() < 1e-9, "t={t}: {got} vs {p1}");
        }
    }

    #[test]
    fn qubit_dephasing_rate_matches_lindblad_equivalent() {
        // channel rate gamma: variance = gamma / (2 tau_c); coherence (0,1)
        // of O = |1><1| decays at gamma/2
        let gamma = 2000.0;
        let tau = 1e-5;
        let variance = gamma / (2.0 * tau);
        let mut op = Array2::<C64>::zeros((2, 2));
        op[(1, 1)] = C64::new(1.0, 0.0);
        let h0 = Array2::<C64>::zeros((2, 2));
        let mut psi0 = Array1::<C64>::zeros(2);
        psi0[0] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        psi0[1] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let row = verify_dephasing(
            "qubit",
            gamma,
            variance,
            tau,
            &h0,
            &op,
            &psi0,
            (0, 1),
            1000,
            12345,
        )
        .unwrap();
        assert!(row.pass, "fitted {} vs {} +- {}", row.fitted_rate, gamma, row.std_error);
    }

    #[test]
    fn trajectories_are_unitary() {
        let gamma = 500.0;
        let tau = 1e-5;
        let mut op = Array2::<C64>::zeros((2, 2));
        op[(1, 1)] = C64::new(1.0, 0.0);
        let h0 = Array2::<C64>::zeros((2, 2));
        let mut psi0 = Array1::<C64>::zeros(2);
        psi0[0] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        psi0[1] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let times: Vec<f64> = (0..=50).map(|k| k as f64 * 2e-5).collect();
        let p = process(gamma / (2.0 * tau), tau, 4);
        let out = propagate_noisy(&h0, &op, &p, &psi0, &times, 100, &[(0, 1)]).unwrap();
        assert!(out.max_norm_defect < 1e-10, "{}", out.max_norm_defect);
        // the ensemble average stays Hermitian with unit trace
        for mean in &out.mean_states {
            assert!(linalg::hermitian_defect(mean) < 1e-12);
            let tr = mean.diag().iter().map(|z| z.re).sum::<f64>();
            assert!((tr - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn non_hermitian_operator_is_rejected() {
        let mut op = Array2::<C64>::zeros((2, 2));
        op[(0, 1)] = C64::new(1.0, 0.0);
        let h0 = Array2::<C64>::zeros((2, 2));
        let mut psi0 = Array1::<C64>::zeros(2);
        psi0[0] = C64::new(1.0, 0.0);
        let times = [0.0, 1e-5];
        let p = process(1.0, 1e-5, 0);
        assert!(propagate_noisy(&h0, &op, &p, &psi0, &times, 100, &[]).is_err());
    }

    #[test]
    fn overlong_correlation_time_flags_non_exponential_decay() {
        // tau_c * gamma = 2.5: quasi-static regime, Gaussian-like decay
        let gamma = 2000.0;
        let tau = 1.25e-3;
        let variance = gamma / (2.0 * tau);
        let mut op = Array2::<C64>::zeros((2, 2));
        op[(1, 1)] = C64::new(1.0, 0.0);
        let h0 = Array2::<C64>::zeros((2, 2));
        let mut psi0 = Array1::<C64>::zeros(2);
        psi0[0] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        psi0[1] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let row = verify_dephasing(
            "slow-noise",
            gamma,
            variance,
            tau,
            &h0,
            &op,
            &psi0,
            (0, 1),
            400,
            99,
        )
        .unwrap();
        assert!(!row.pass, "quasi-static noise must not verify: {row:?}");
    }
}
