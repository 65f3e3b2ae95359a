use serde::{Deserialize, Serialize};

/// Parameters of the truncated moment series for the modulated target
/// amplitude.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Unmodulated |ψ_target(t_f)|.
    pub amplitude: f64,
    /// Auxiliary decay parameter a.
    pub a: f64,
    /// ⟨j^k⟩ for k = 1, 2, …
    pub moments: Vec<f64>,
}

/// |ψ|·e^{−a(M−1)}·Σ_{k≤k_max} ⟨j^k⟩ (log M)^k / k!, with ⟨j⁰⟩ = 1.
pub fn model_amplitude(m: f64, params: &ModelParams, k_max: usize) -> f64 {
    params.amplitude * (-params.a * (m - 1.0)).exp() * series(m.ln(), &params.moments, k_max)
}

/// Square of [`model_amplitude`].
pub fn model_population(m: f64, params: &ModelParams, k_max: usize) -> f64 {
    model_amplitude(m, params, k_max).powi(2)
}

pub(crate) fn series(log_m: f64, moments: &[f64], k_max: usize) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for (k, mu) in moments.iter().take(k_max).enumerate() {
        term *= log_m / (k + 1) as f64;
        sum += mu * term;
    }
    sum
}
