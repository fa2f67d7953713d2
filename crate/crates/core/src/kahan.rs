//! Compensated summation. Long filter accumulations (> 1e4 terms) run through
//! this instead of a bare fold so the table reproductions are not polluted by
//! rounding drift.

/// Neumaier variant of Kahan summation: tracks a running compensation term
/// that also survives the case |term| > |sum|.
#[derive(Debug, Clone, Copy, Default)]
pub struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// Sum a slice with compensation when it is long enough to matter.
pub fn sum(xs: &[f64]) -> f64 {
    if xs.len() <= 10_000 {
        xs.iter().sum()
    } else {
        let mut k = Kahan::new();
        for &x in xs {
            k.add(x);
        }
        k.value()
    }
}
