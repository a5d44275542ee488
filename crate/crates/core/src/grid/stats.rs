use super::Grid2D;

/// Summary statistics of a grid, accumulated in `f64`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridStats {
    pub max_value: f32,
    /// First maximum in row-major order (smallest row, then smallest col).
    pub argmax: (usize, usize),
    pub mean: f64,
    /// Population variance.
    pub variance: f64,
    /// Sum of squares.
    pub energy: f64,
}

pub fn grid_stats(g: &Grid2D) -> GridStats {
    let mut max_value = f32::NEG_INFINITY;
    let mut arg = 0;
    let mut mean = 0.0f64;
    let mut m2 = 0.0f64;
    let mut energy = 0.0f64;
    for (i, &v) in g.values().iter().enumerate() {
        if v > max_value {
            max_value = v;
            arg = i;
        }
        let x = v as f64;
        energy += x * x;
        // Welford update
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
    }
    GridStats {
        max_value,
        argmax: (arg / g.width(), arg % g.width()),
        mean,
        variance: (m2 / g.len() as f64).max(0.0),
        energy,
    }
}
