use super::MetricError;

/// A correlation coefficient; `degenerate` marks a zero-variance side, in
/// which case `r` is defined as 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub r: f64,
    pub degenerate: bool,
}

fn check(x: &[f64], y: &[f64]) -> Result<(), MetricError> {
    if x.len() != y.len() {
        return Err(MetricError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(MetricError::TooShort { needed: 2, got: x.len() });
    }
    if let Some(i) = x.iter().chain(y).position(|v| !v.is_finite()) {
        return Err(MetricError::NonFinite(i % x.len()));
    }
    Ok(())
}

/// Product-moment correlation, two-pass.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Correlation, MetricError> {
    check(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(Correlation { r: 0.0, degenerate: true });
    }
    Ok(Correlation { r: (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0), degenerate: false })
}

pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    pearson(x, y).map(|c| c.r)
}

/// 1-based ranks; tied values share the mean of the positions they span.
pub fn average_ranks(x: &[f64]) -> Result<Vec<f64>, MetricError> {
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(MetricError::NonFinite(i));
    }
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && x[idx[end]] == x[idx[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let r = (start + 1 + end) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = r;
        }
        start = end;
    }
    Ok(ranks)
}

/// Pearson correlation of the average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Correlation, MetricError> {
    check(x, y)?;
    pearson(&average_ranks(x)?, &average_ranks(y)?)
}

pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    spearman(x, y).map(|c| c.r)
}
