/// One classical fourth-order Runge–Kutta step of `ẏ = f(t, y)`.
///
/// `k1` may be supplied when the caller already evaluated `f(t, y)`.
pub fn rk4_step<E, F>(t: f64, y: &[f64], h: f64, k1: Option<Vec<f64>>, mut f: F) -> Result<Vec<f64>, E>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>, E>,
{
    let k1 = match k1 {
        Some(k) => k,
        None => f(t, y)?,
    };
    let shifted = |k: &[f64], s: f64| -> Vec<f64> { y.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    let k2 = f(t + 0.5 * h, &shifted(&k1, 0.5 * h))?;
    let k3 = f(t + 0.5 * h, &shifted(&k2, 0.5 * h))?;
    let k4 = f(t + h, &shifted(&k3, h))?;
    Ok(y.iter()
        .enumerate()
        .map(|(i, yi)| yi + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}
