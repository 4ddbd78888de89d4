use super::FederationError;
use crate::model::ModelParameters;

/// One participant's contribution to an aggregation.
#[derive(Debug, Clone, Copy)]
pub struct AggregationInput<'a> {
    pub participant: usize,
    pub params: &'a ModelParameters,
    pub samples: u64,
}

/// Sample-weighted FedAvg.
///
/// Inputs are rounded to wire (f32) precision and reduced in ascending
/// participant order as `Σ c_k·x_k / Σ c_k` in f64. With f32 inputs and
/// integer weights below 2^29 every product and partial sum of identical
/// models is exact, so averaging copies of one model returns it unchanged.
pub fn fedavg(inputs: &[AggregationInput<'_>]) -> Result<ModelParameters, FederationError> {
    let Some(first) = inputs.first() else {
        return Err(FederationError::InvalidConfig("fedavg needs at least one model".into()));
    };
    for inp in inputs {
        inp.params.check_compatible(first.params)?;
    }
    let total: u64 = inputs.iter().map(|i| i.samples).sum();
    if total == 0 {
        return Err(FederationError::InvalidConfig("all aggregation weights are zero".into()));
    }
    let mut order: Vec<&AggregationInput<'_>> = inputs.iter().collect();
    order.sort_by_key(|i| i.participant);
    let mut acc = vec![0.0f64; first.params.len()];
    for inp in order {
        let c = inp.samples as f64;
        for (a, &v) in acc.iter_mut().zip(inp.params.values()) {
            *a += c * f64::from(v as f32);
        }
    }
    let denom = total as f64;
    acc.iter_mut().for_each(|a| *a /= denom);
    Ok(ModelParameters::from_values(*first.params.config(), acc)?)
}
