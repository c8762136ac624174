//! Small streaming estimators shared by the convergence harness and the
//! ensemble statistics.

/// Streaming least-squares fit of `y` against `x` (Welford co-moments).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OnlineRegression {
    n: u64,
    mean_x: f64,
    mean_y: f64,
    m2_x: f64,
    c_xy: f64,
}

impl OnlineRegression {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64, y: f64) {
        self.n += 1;
        let n = self.n as f64;
        let dx = x - self.mean_x;
        self.mean_x += dx / n;
        self.mean_y += (y - self.mean_y) / n;
        self.m2_x += dx * (x - self.mean_x);
        self.c_xy += dx * (y - self.mean_y);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    /// `None` with fewer than two distinct abscissae.
    pub fn slope(&self) -> Option<f64> {
        (self.n >= 2 && self.m2_x > 0.0).then(|| self.c_xy / self.m2_x)
    }
}

pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let mut r = OnlineRegression::new();
    xs.iter().zip(ys).for_each(|(x, y)| r.push(*x, *y));
    r.slope()
}

/// Sample mean and 95% normal-approximation half-width of the mean.
pub fn mean_and_half_width(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return Some((mean, f64::NAN));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, 1.959963984540054 * (var / n).sqrt()))
}
