//! The basis rotation `U_s` between the bare Fock basis and the normal-mode
//! Fock basis, `(U_s)^{n₁,n₂}_{m₁,m₂} = ₛ⟨n₁,n₂|m₁,m₂⟩₀`.
//!
//! Two independent evaluations are provided: the closed-form finite sum and
//! the ladder recursions seeded at the one-dimensional vacuum block. Both
//! return real values; they are wrapped in [`Complex64`] for the downstream
//! complex arithmetic.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::params::MixingParams;
use crate::state::BlockMatrix;

/// Blocks up to this many quanta use exact integer factorials. Larger blocks
/// take the factorial prefactor from log-space factorials (one `exp` per
/// element) and fall back to fully log-space terms if a term overflows.
const EXACT_LIMIT: usize = 20;

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash)]
pub enum RotationBackend {
    #[default]
    ClosedForm,
    Recursion,
}

fn factorial_u64(n: usize) -> u64 {
    (1..=n as u64).product()
}

fn binomial_u64(n: usize, k: usize) -> u64 {
    factorial_u64(n) / (factorial_u64(k) * factorial_u64(n - k))
}

fn ln_factorial(n: usize) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(512);
        t.push(0.0);
        for k in 1..512 {
            t.push(t[k - 1] + (k as f64).ln());
        }
        t
    });
    match table.get(n) {
        Some(&v) => v,
        None => table[table.len() - 1] + (table.len()..=n).map(|k| (k as f64).ln()).sum::<f64>(),
    }
}

/// Multiplicative binomial; exact up to rounding for moderate `n`, `+∞` on
/// overflow.
fn binomial_f64(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// `exp · ln(base)` with the convention `0 · ln 0 = 0`.
fn ln_pow(base: f64, exp: usize) -> f64 {
    if exp == 0 {
        0.0
    } else {
        exp as f64 * base.ln()
    }
}

/// Closed-form element, with the `(s/c)^{-2k}` factor distributed into the
/// powers of `c` and `s` so that every term is a product of bounded factors:
///
/// ```text
/// √(n₁!n₂!/(m₁!m₂!)) Σ_k (−1)^{n₂−k} c^{m₁−n₂+2k} s^{m₂+n₂−2k} C(m₁, n₂−k) C(m₂, k)
/// ```
///
/// for `max(0, m₂−n₁) ≤ k ≤ min(n₂, m₂)`.
fn closed_form(s: f64, c: f64, n1: usize, n2: usize, m1: usize, m2: usize) -> f64 {
    if n1 + n2 != m1 + m2 {
        return 0.0;
    }
    let k_lo = m2.saturating_sub(n1);
    let k_hi = n2.min(m2);
    if k_lo > k_hi {
        return 0.0;
    }
    let exact = n1 + n2 <= EXACT_LIMIT;
    let ln_pref = 0.5 * (ln_factorial(n1) + ln_factorial(n2) - ln_factorial(m1) - ln_factorial(m2));
    let pref = ln_pref.exp();
    let mut sum = 0.0;
    for k in k_lo..=k_hi {
        // k ≥ n₂ − m₁ follows from k ≥ m₂ − n₁ and the selection rule
        let c_exp = m1 + 2 * k - n2;
        let s_exp = m2 + n2 - 2 * k;
        let odd = |base: f64, e: usize| base < 0.0 && e % 2 == 1;
        let flips = usize::from((n2 - k) % 2 == 1) + usize::from(odd(c, c_exp)) + usize::from(odd(s, s_exp));
        let sign = if flips % 2 == 0 { 1.0 } else { -1.0 };
        let term = if exact {
            let binom = (binomial_u64(m1, n2 - k) * binomial_u64(m2, k)) as f64;
            binom * c.abs().powi(c_exp as i32) * s.abs().powi(s_exp as i32)
        } else {
            if (c == 0.0 && c_exp > 0) || (s == 0.0 && s_exp > 0) {
                continue;
            }
            let direct = binomial_f64(m1, n2 - k)
                * binomial_f64(m2, k)
                * c.abs().powi(c_exp as i32)
                * s.abs().powi(s_exp as i32);
            if direct.is_finite() && direct > 0.0 && pref.is_finite() {
                direct * pref
            } else {
                (ln_binomial(m1, n2 - k) + ln_binomial(m2, k) + ln_pow(c.abs(), c_exp) + ln_pow(s.abs(), s_exp) + ln_pref)
                    .exp()
            }
        };
        sum += sign * term;
    }
    if exact {
        let num = (factorial_u64(n1) as f64) * (factorial_u64(n2) as f64);
        let den = (factorial_u64(m1) as f64) * (factorial_u64(m2) as f64);
        sum * (num / den).sqrt()
    } else {
        sum
    }
}

/// Real-valued block built from the ladder recursions, indexed `[row][col]`
/// with the project convention `l ↦ (n − l, l)`.
fn recursion_block(s: f64, c: f64, n_total: usize) -> Vec<Vec<f64>> {
    let mut prev = vec![vec![1.0]];
    for n in 1..=n_total {
        let mut cur = vec![vec![0.0; n + 1]; n + 1];
        for (l, row) in cur.iter_mut().enumerate() {
            let (n1, n2) = (n - l, l);
            for (j, slot) in row.iter_mut().enumerate() {
                let (m1, m2) = (n - j, j);
                // contributions from (m₁−1, m₂) ↦ column j and (m₁, m₂−1) ↦ column j−1
                let from_m1 = |r: usize| if m1 >= 1 { prev[r][j] } else { 0.0 };
                let from_m2 = |r: usize| if m2 >= 1 { prev[r][j - 1] } else { 0.0 };
                *slot = if n1 >= 1 {
                    let d = n1 as f64;
                    c * (m1 as f64 / d).sqrt() * from_m1(l) + s * (m2 as f64 / d).sqrt() * from_m2(l)
                } else {
                    let d = n2 as f64;
                    -s * (m1 as f64 / d).sqrt() * from_m1(l - 1) + c * (m2 as f64 / d).sqrt() * from_m2(l - 1)
                };
            }
        }
        prev = cur;
    }
    prev
}

/// `(U_s)^{n₁,n₂}_{m₁,m₂}`; zero unless `n₁ + n₂ = m₁ + m₂`.
pub fn us_element(
    mix: &MixingParams,
    n1: usize,
    n2: usize,
    m1: usize,
    m2: usize,
    backend: RotationBackend,
) -> Complex64 {
    if n1 + n2 != m1 + m2 {
        return Complex64::new(0.0, 0.0);
    }
    let v = match backend {
        RotationBackend::ClosedForm => closed_form(mix.s, mix.c, n1, n2, m1, m2),
        RotationBackend::Recursion => recursion_block(mix.s, mix.c, n1 + n2)[n2][m2],
    };
    Complex64::new(v, 0.0)
}

/// `(U_{−s})^{n₁,n₂}_{m₁,m₂} = (−1)^{m₂−n₂} (U_s)^{n₁,n₂}_{m₁,m₂}`.
pub fn u_minus_s_element(mix: &MixingParams, n1: usize, n2: usize, m1: usize, m2: usize) -> Complex64 {
    let v = us_element(mix, n1, n2, m1, m2, RotationBackend::ClosedForm);
    if m2.abs_diff(n2).is_multiple_of(2) {
        v
    } else {
        -v
    }
}

/// `U_s` restricted to the block of `n_total` quanta.
pub fn us_block(mix: &MixingParams, n_total: usize, backend: RotationBackend) -> BlockMatrix {
    let dim = n_total + 1;
    let entries = match backend {
        RotationBackend::ClosedForm => DMatrix::from_fn(dim, dim, |l, j| {
            Complex64::new(closed_form(mix.s, mix.c, n_total - l, l, n_total - j, j), 0.0)
        }),
        RotationBackend::Recursion => {
            let b = recursion_block(mix.s, mix.c, n_total);
            DMatrix::from_fn(dim, dim, |l, j| Complex64::new(b[l][j], 0.0))
        }
    };
    let block = BlockMatrix::new(n_total, entries);
    debug_assert!(block.entries.iter().all(|z| z.im.abs() < 1e-12));
    block
}

/// `U_{−s}` restricted to the block of `n_total` quanta.
pub fn u_minus_s_block(mix: &MixingParams, n_total: usize) -> BlockMatrix {
    let mut block = us_block(mix, n_total, RotationBackend::ClosedForm);
    let dim = n_total + 1;
    for l in 0..dim {
        for j in 0..dim {
            if l.abs_diff(j) % 2 == 1 {
                block.entries[(l, j)] = -block.entries[(l, j)];
            }
        }
    }
    block
}

/// `(U_s)^{n,0}_{n−l,l} = √(n!/((n−l)! l!)) c^{n−l} s^l`.
pub fn us_first_row(mix: &MixingParams, n: usize, l: usize) -> f64 {
    assert!(l <= n);
    let ln_binom = ln_binomial(n, l);
    (0.5 * ln_binom + ln_pow(mix.c, n - l) + ln_pow(mix.s, l)).exp()
}

/// `(U_s)^{0,n}_{n−l,l} = √(n!/((n−l)! l!)) (−1)^{n−l} c^l s^{n−l}`.
pub fn us_last_row(mix: &MixingParams, n: usize, l: usize) -> f64 {
    assert!(l <= n);
    let ln_binom = ln_binomial(n, l);
    let mag = (0.5 * ln_binom + ln_pow(mix.c, l) + ln_pow(mix.s, n - l)).exp();
    if (n - l).is_multiple_of(2) {
        mag
    } else {
        -mag
    }
}

/// Largest residuals of the two ladder recursions over one block, evaluated
/// on closed-form values.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct RecursionResidual {
    /// Recursion lowering mode-1 occupation of the row index (`n₁ ≥ 1`).
    pub first_mode: f64,
    /// Recursion lowering mode-2 occupation of the row index (`n₂ ≥ 1`).
    pub second_mode: f64,
}

impl RecursionResidual {
    pub fn max(&self) -> f64 {
        self.first_mode.max(self.second_mode)
    }
}

pub fn verify_recursions(mix: &MixingParams, n_total: usize) -> RecursionResidual {
    assert!(n_total >= 1, "recursions relate block n_total to block n_total - 1");
    let (s, c) = (mix.s, mix.c);
    let u = |n1, n2, m1, m2| closed_form(s, c, n1, n2, m1, m2);
    let lower = |m: usize| m.checked_sub(1);
    let mut first_mode = 0.0f64;
    let mut second_mode = 0.0f64;
    for l in 0..=n_total {
        let (n1, n2) = (n_total - l, l);
        for j in 0..=n_total {
            let (m1, m2) = (n_total - j, j);
            let lhs = u(n1, n2, m1, m2);
            let a = |nn1: usize, nn2: usize| lower(m1).map_or(0.0, |mm1| u(nn1, nn2, mm1, m2));
            let b = |nn1: usize, nn2: usize| lower(m2).map_or(0.0, |mm2| u(nn1, nn2, m1, mm2));
            if n1 >= 1 {
                let d = n1 as f64;
                let rhs = c * (m1 as f64 / d).sqrt() * a(n1 - 1, n2) + s * (m2 as f64 / d).sqrt() * b(n1 - 1, n2);
                first_mode = first_mode.max((lhs - rhs).abs());
            }
            if n2 >= 1 {
                let d = n2 as f64;
                let rhs = -s * (m1 as f64 / d).sqrt() * a(n1, n2 - 1) + c * (m2 as f64 / d).sqrt() * b(n1, n2 - 1);
                second_mode = second_mode.max((lhs - rhs).abs());
            }
        }
    }
    RecursionResidual { first_mode, second_mode }
}
