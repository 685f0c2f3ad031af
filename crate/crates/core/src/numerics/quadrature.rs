use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use once_cell::sync::Lazy;

use super::scalar::Scalar;
use crate::error::{Error, Result};

const FIRST_ORDER: u32 = 16;
const MAX_ORDER: u32 = 4096;
const NEWTON_CAP: usize = 64;

/// Node-weight pairs of one Gauss-Legendre rule, shared across callers.
type SharedRule = Arc<Vec<(Scalar, Scalar)>>;

/// Gauss-Legendre rules on [-1, 1], keyed by (order, requested bits) and
/// shared across threads. Node construction at high precision is the
/// expensive step, and the same few orders are reused constantly.
static NODE_CACHE: Lazy<Mutex<HashMap<(u32, u32), SharedRule>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// (P_n(x), P_{n-1}(x)) by the three-term recurrence.
fn legendre_pair(order: u32, x: &Scalar, bits: u32) -> (Scalar, Scalar) {
    let mut prev = Scalar::one(bits); // P_0
    let mut cur = x.clone(); // P_1
    for k in 2..=order {
        let k2m1 = Scalar::from_u64(2 * k as u64 - 1, bits);
        let km1 = Scalar::from_u64(k as u64 - 1, bits);
        let kk = Scalar::from_u64(k as u64, bits);
        let next = &(&(&k2m1 * x) * &cur - &(&km1 * &prev)) / &kk;
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// Nodes and weights at the requested order, computed with 64 guard bits.
/// Roots of the Legendre polynomial are refined by Newton iteration from
/// double-precision cosine seeds; convergence is quadratic, so the cap is
/// never approached.
fn gauss_legendre_rule(order: u32, bits: u32) -> SharedRule {
    if let Some(hit) = NODE_CACHE.lock().unwrap().get(&(order, bits)) {
        return Arc::clone(hit);
    }
    let n = order;
    assert!(n >= 2 && n.is_multiple_of(2), "orders are even");
    let work = bits + 64;
    let half = n as usize / 2;
    let one = Scalar::one(work);
    let two = Scalar::from_u64(2, work);
    let n_scalar = Scalar::from_u64(n as u64, work);
    let step_floor = Scalar::two_pow(-(work as i32 - 8), work);

    let deriv_at = |x: &Scalar, p: &Scalar, p_prev: &Scalar| {
        // P'_n(x) = n (x P_n - P_{n-1}) / (x^2 - 1)
        let denom = &x.square() - &one;
        &(&n_scalar * &(&(x * p) - p_prev)) / &denom
    };

    let mut positive: Vec<(Scalar, Scalar)> = Vec::with_capacity(half);
    for i in 1..=half {
        let seed = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
        let mut x = Scalar::from_f64(seed, work);
        for _ in 0..NEWTON_CAP {
            let (p, p_prev) = legendre_pair(n, &x, work);
            let step = &p / &deriv_at(&x, &p, &p_prev);
            x = &x - &step;
            if step.abs() < step_floor {
                break;
            }
        }
        let (p, p_prev) = legendre_pair(n, &x, work);
        let deriv = deriv_at(&x, &p, &p_prev);
        let weight = &two / &(&(&one - &x.square()) * &deriv.square());
        positive.push((x, weight));
    }

    let mut rule: Vec<(Scalar, Scalar)> = Vec::with_capacity(n as usize);
    // Ascending node order: mirrored negatives first, then the positives.
    for (x, w) in &positive {
        rule.push((-x, w.clone()));
    }
    for (x, w) in positive.iter().rev() {
        rule.push((x.clone(), w.clone()));
    }
    debug_assert_eq!(rule.len(), n as usize);

    let arc = Arc::new(rule);
    NODE_CACHE
        .lock()
        .unwrap()
        .insert((order, bits), Arc::clone(&arc));
    arc
}

fn apply_rule<F>(rule: &[(Scalar, Scalar)], f: &F, mid: &Scalar, half_width: &Scalar) -> Scalar
where
    F: Fn(&Scalar) -> Scalar,
{
    let mut acc = Scalar::zero(mid.prec().max(half_width.prec()));
    for (x, w) in rule {
        let point = mid + &(half_width * x);
        acc = &acc + &(w * &f(&point));
    }
    &acc * half_width
}

/// Integrates f over [a, b] by Gauss-Legendre rules of doubling order until
/// two consecutive orders agree to a relative 2^(-bits/2). The integrand is
/// assumed smooth (everything integrated here is a product of exponentials).
pub fn quadrature_integrate<F>(f: F, a: &Scalar, b: &Scalar, bits: u32) -> Result<Scalar>
where
    F: Fn(&Scalar) -> Scalar,
{
    let two = Scalar::from_u64(2, bits);
    let mid = &(a + b) / &two;
    let half_width = &(b - a) / &two;
    let tol = Scalar::two_pow(-((bits / 2) as i32), bits);

    let mut order = FIRST_ORDER;
    let mut previous = apply_rule(&gauss_legendre_rule(order, bits), &f, &mid, &half_width);
    loop {
        order *= 2;
        if order > MAX_ORDER {
            return Err(Error::QuadratureFailure {
                max_order: MAX_ORDER,
                previous: previous.to_decimal_string(40),
                last: previous.to_decimal_string(40),
            });
        }
        let current = apply_rule(&gauss_legendre_rule(order, bits), &f, &mid, &half_width);
        let err = (&current - &previous).abs();
        let scale = current.abs().max(&previous.abs());
        if scale.is_zero() || err <= &tol * &scale {
            return Ok(current.to_prec(bits));
        }
        if order == MAX_ORDER {
            return Err(Error::QuadratureFailure {
                max_order: MAX_ORDER,
                previous: previous.to_decimal_string(40),
                last: current.to_decimal_string(40),
            });
        }
        previous = current;
    }
}
