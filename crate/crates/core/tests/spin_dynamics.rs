use approx::assert_abs_diff_eq;
use motionread_core::constants::angular;
use motionread_core::nmr::{energy, evolve, evolve_exact, DIM};
use motionread_core::{NmrConfig, SpinState};
use num_complex::Complex64;

const J2: usize = DIM - 1;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn binom(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Spin-1/2 propagator `exp(-i H t)` for `H = -Delta s_z + Omega s_x`, basis (up, down).
fn su2(cfg: &NmrConfig, t: f64) -> [[Complex64; 2]; 2] {
    let og = cfg.generalized_rabi();
    let (c, s) = ((0.5 * og * t).cos(), (0.5 * og * t).sin());
    let (nx, nz) = if og > 0.0 { (cfg.omega_b_rabi / og, -cfg.delta_b / og) } else { (0.0, 0.0) };
    let i = Complex64::i();
    [
        [c - i * s * nz, -i * s * nx],
        [-i * s * nx, c + i * s * nz],
    ]
}

/// Spin-j representation of a spin-1/2 unitary through symmetric polynomials.
/// Index `k` is `m = k - j`.
fn spin_j(u: [[Complex64; 2]; 2]) -> [[Complex64; DIM]; DIM] {
    let (a, b, c, d) = (u[0][0], u[0][1], u[1][0], u[1][1]);
    let mut out = [[Complex64::new(0.0, 0.0); DIM]; DIM];
    for col in 0..DIM {
        let (nu, nv) = (col, J2 - col);
        for row in 0..DIM {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..=nu {
                let l = match row.checked_sub(k) {
                    Some(l) if l <= nv => l,
                    _ => continue,
                };
                acc += a.powu(k as u32)
                    * c.powu((nu - k) as u32)
                    * b.powu(l as u32)
                    * d.powu((nv - l) as u32)
                    * (binom(nu, k) * binom(nv, l));
            }
            let scale = (factorial(row) * factorial(J2 - row) / (factorial(nu) * factorial(nv))).sqrt();
            out[row][col] = acc * scale;
        }
    }
    out
}

fn apply(m: &[[Complex64; DIM]; DIM], s: &SpinState) -> SpinState {
    SpinState(std::array::from_fn(|i| (0..DIM).map(|j| m[i][j] * s.0[j]).sum()))
}

fn random_state(seed: u64) -> SpinState {
    let mut x = seed;
    let mut next = || {
        x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let raw: [Complex64; DIM] = std::array::from_fn(|_| Complex64::new(next(), next()));
    let norm = raw.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    SpinState(raw.map(|c| c / norm))
}

fn cfg(rabi_hz: f64, detuning_hz: f64) -> NmrConfig {
    NmrConfig { omega_b_rabi: angular(rabi_hz), delta_b: angular(detuning_hz), t_max: 3e-3, dt: 5e-6 }
}

#[test]
fn integrator_matches_polynomial_representation_for_arbitrary_states() {
    for (i, &(rabi, det)) in [(1e3, 0.0), (1e3, 1.5e3), (700.0, -400.0), (0.0, 900.0)].iter().enumerate() {
        let c = cfg(rabi, det);
        let start = random_state(11 + i as u64);
        for t in [0.1e-3, 0.77e-3, 2.3e-3] {
            let oracle = apply(&spin_j(su2(&c, t)), &start);
            let got = evolve(&start, &c, t).unwrap();
            for k in 0..DIM {
                assert_abs_diff_eq!(got.0[k].re, oracle.0[k].re, epsilon = 1e-8);
                assert_abs_diff_eq!(got.0[k].im, oracle.0[k].im, epsilon = 1e-8);
            }
        }
    }
}

#[test]
fn spectral_propagator_matches_polynomial_representation() {
    let c = cfg(1.3e3, 2.1e3);
    let start = random_state(5);
    let t = 1.9e-3;
    let oracle = apply(&spin_j(su2(&c, t)), &start);
    let got = evolve_exact(&start, &c, t);
    for k in 0..DIM {
        assert_abs_diff_eq!((got.0[k] - oracle.0[k]).norm(), 0.0, epsilon = 1e-11);
    }
}

#[test]
fn stretched_populations_are_even_in_detuning() {
    let plus = cfg(1e3, 800.0);
    let minus = cfg(1e3, -800.0);
    for t in [0.3e-3, 1.1e-3, 2.9e-3] {
        let a = evolve(&SpinState::stretched(), &plus, t).unwrap().populations();
        let b = evolve(&SpinState::stretched(), &minus, t).unwrap().populations();
        for k in 0..DIM {
            assert_abs_diff_eq!(a[k], b[k], epsilon = 1e-10);
        }
    }
}

#[test]
fn energy_is_conserved() {
    let c = cfg(1e3, 600.0);
    let start = random_state(21);
    let e0 = energy(&start, &c);
    let end = evolve(&start, &c, 3e-3).unwrap();
    assert_abs_diff_eq!(energy(&end, &c), e0, epsilon = 1e-9 * c.generalized_rabi());
}

#[test]
fn norm_holds_over_a_hundred_periods() {
    let c = NmrConfig { t_max: 0.1, ..cfg(1e3, 300.0) };
    let periods = 100.0 * std::f64::consts::TAU / c.generalized_rabi();
    let end = evolve(&SpinState::stretched(), &c, periods).unwrap();
    assert_abs_diff_eq!(end.norm_sqr(), 1.0, epsilon = 1e-9);
}
