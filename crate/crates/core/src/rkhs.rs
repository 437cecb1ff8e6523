//! Reproducing kernels of `H^m = H_0 + H_1` under the boundary conditions
//! `h(0) = h'(0) = ... = h^(m-1)(0) = 0`.
//!
//! `H_0` is the polynomial space of degree `< m` with inner product
//! `sum_j h^(j-1)(0) g^(j-1)(0)`, kernel `k0(s, t) = sum_{k<m} (st)^k / (k!)^2`.
//! `H_1` holds the functions satisfying the boundary conditions, with inner
//! product `integral D^m h D^m g`; its kernel is
//! `k1(s, t) = integral_0^1 (t-w)_+^(m-1) (s-w)_+^(m-1) / ((m-1)!)^2 dw`,
//! available in closed form for `m = 1, 2`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Derivative order of the Sobolev space. Only the orders with closed-form
/// kernels are representable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub enum Order {
    One,
    Two,
}

impl Order {
    pub fn new(m: usize) -> Result<Self> {
        match m {
            1 => Ok(Order::One),
            2 => Ok(Order::Two),
            _ => Err(Error::UnsupportedOrder(m)),
        }
    }

    pub fn m(self) -> usize {
        match self {
            Order::One => 1,
            Order::Two => 2,
        }
    }
}

impl TryFrom<usize> for Order {
    type Error = Error;
    fn try_from(m: usize) -> Result<Self> {
        Order::new(m)
    }
}

impl From<Order> for usize {
    fn from(o: Order) -> usize {
        o.m()
    }
}

impl std::fmt::Display for Order {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.m())
    }
}

pub fn k0(s: f64, t: f64, order: Order) -> f64 {
    match order {
        Order::One => 1.0,
        Order::Two => 1.0 + s * t,
    }
}

pub fn k1(s: f64, t: f64, order: Order) -> f64 {
    let (a, b) = if s <= t { (s, t) } else { (t, s) };
    match order {
        Order::One => a,
        Order::Two => a * a * b / 2.0 - a * a * a / 6.0,
    }
}

/// `d^j/dt^j k1(s, t)` for `j <= m`.
///
/// For `m = 1, j = 1` the derivative jumps at `t = s`; the value there is 0
/// (the right limit).
pub fn k1_partial(s: f64, t: f64, order: Order, j: usize) -> Result<f64> {
    if j > order.m() {
        return Err(Error::DerivativeOrder { j, m: order.m() });
    }
    Ok(match (order, j) {
        (_, 0) => k1(s, t, order),
        (Order::One, _) => {
            if t < s {
                1.0
            } else {
                0.0
            }
        }
        (Order::Two, 1) => {
            if t <= s {
                s * t - t * t / 2.0
            } else {
                s * s / 2.0
            }
        }
        (Order::Two, _) => (s - t).max(0.0),
    })
}

/// Monomial basis `w_k(t) = t^(k-1)`, `k = 1..=m`, of the null space of
/// `D^m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolyBasis {
    order: Order,
}

impl PolyBasis {
    pub fn new(order: Order) -> Self {
        Self { order }
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.order.m()
    }

    /// `D^j w_k(t)` with `k` zero-based (`w_{k+1}` in one-based terms).
    pub fn deriv(&self, k: usize, t: f64, j: usize) -> f64 {
        debug_assert!(k < self.dim());
        if j > k {
            return 0.0;
        }
        // d^j/dt^j t^k = k!/(k-j)! t^(k-j)
        let falling: f64 = ((k - j + 1)..=k).map(|v| v as f64).product();
        falling * t.powi((k - j) as i32)
    }

    pub fn eval(&self, k: usize, t: f64) -> f64 {
        self.deriv(k, t, 0)
    }

    /// `B_j w_k = w_k^(j-1)(0)`, both indices zero-based.
    pub fn boundary(&self, j: usize, k: usize) -> f64 {
        self.deriv(k, 0.0, j)
    }

    /// Gram matrix `W_ik = <w_i, w_k>_0 = sum_j B_j w_i B_j w_k`, which is
    /// `diag(((k-1)!)^2)`.
    pub fn gram(&self) -> DMatrix<f64> {
        let m = self.dim();
        DMatrix::from_fn(m, m, |i, k| (0..m).map(|j| self.boundary(j, i) * self.boundary(j, k)).sum())
    }
}
