//! Deterministic compensated summation.
//!
//! Every norm and reduction in the crate funnels through these helpers with a
//! fixed traversal order, so repeated runs produce identical bytes.

/// Neumaier variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Compensated sum of `f(i)` for `i` in `0..n`, in index order.
pub fn sum_indexed<F: FnMut(usize) -> f64>(n: usize, mut f: F) -> f64 {
    let mut acc = Compensated::new();
    for i in 0..n {
        acc.add(f(i));
    }
    acc.total()
}

/// Compensated sum over a slice in storage order.
pub fn sum_slice(xs: &[f64]) -> f64 {
    let mut acc = Compensated::new();
    for &x in xs {
        acc.add(x);
    }
    acc.total()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_beats_naive_on_cancellation() {
        // 1 + 1e-16 repeated: naive summation loses the tail entirely.
        let n = 10_000_000usize;
        let s = sum_indexed(n, |i| if i == 0 { 1.0 } else { 1e-16 });
        let expect = 1.0 + (n as f64 - 1.0) * 1e-16;
        assert!((s - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn order_is_deterministic() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 2654435761_usize) as f64).sin()).collect();
        let a = sum_slice(&xs);
        let b = sum_slice(&xs);
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
