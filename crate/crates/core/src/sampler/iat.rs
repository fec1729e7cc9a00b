/// Integrated autocorrelation time `τ = 1 + 2 Σ_k ρ_k`, summed up to the
/// first window `M ≥ 5 τ(M)` (Sokal's automatic windowing).
pub fn integrated_autocorrelation(series: &[f64]) -> f64 {
    let m = series.len();
    if m < 4 {
        return 1.0;
    }
    let mean = series.iter().sum::<f64>() / m as f64;
    let centred: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let c0 = centred.iter().map(|v| v * v).sum::<f64>() / m as f64;
    if c0 == 0.0 {
        return 1.0;
    }
    let mut tau = 1.0;
    for lag in 1..m / 2 {
        let ck = centred[..m - lag].iter().zip(&centred[lag..]).map(|(a, b)| a * b).sum::<f64>() / m as f64;
        tau += 2.0 * ck / c0;
        if lag as f64 >= 5.0 * tau {
            break;
        }
    }
    tau.max(1.0 / m as f64)
}
