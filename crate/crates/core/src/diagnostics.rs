//! Potential scale reduction factor over multi-chain scalar traces.

use crate::error::{invalid, Error, Result};

/// Chains are declared converged when every parameter's PSRF is below this.
pub const PSRF_THRESHOLD: f64 = 1.2;

/// `m >= 2` chains of common length `L >= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSet {
    chains: Vec<Vec<f64>>,
}

impl TraceSet {
    pub fn new(chains: Vec<Vec<f64>>) -> Result<Self> {
        if chains.len() < 2 {
            return Err(invalid(format!("need at least 2 chains, got {}", chains.len())));
        }
        let len = chains[0].len();
        if len < 2 {
            return Err(invalid(format!("chains need length >= 2, got {len}")));
        }
        if chains.iter().any(|c| c.len() != len) {
            return Err(invalid("all chains must have the same length"));
        }
        if chains.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("trace values must be finite"));
        }
        Ok(TraceSet { chains })
    }

    pub fn chain_count(&self) -> usize {
        self.chains.len()
    }

    pub fn len(&self) -> usize {
        self.chains[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn chains(&self) -> &[Vec<f64>] {
        &self.chains
    }
}

/// `PSRF = (1 − 1/L) + B / (L W)` with `W` the mean within-chain variance
/// (divisor `L − 1`) and `B = L/(m−1) Σ (ψ̄_i − ψ̄)²`.
pub fn psrf(traces: &TraceSet) -> Result<f64> {
    let m = traces.chain_count() as f64;
    let l = traces.len() as f64;
    let means: Vec<f64> = traces.chains.iter().map(|c| c.iter().sum::<f64>() / l).collect();
    let w = traces
        .chains
        .iter()
        .zip(&means)
        .map(|(c, mu)| c.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (l - 1.0))
        .sum::<f64>()
        / m;
    if !(w > 0.0) {
        return Err(Error::DegenerateTrace(None));
    }
    let grand = means.iter().sum::<f64>() / m;
    let b = l / (m - 1.0) * means.iter().map(|mu| (mu - grand) * (mu - grand)).sum::<f64>();
    Ok((1.0 - 1.0 / l) + b / (l * w))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVerdict {
    pub name: String,
    pub psrf: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub parameters: Vec<ParameterVerdict>,
    pub converged: bool,
}

impl ConvergenceReport {
    pub fn failing(&self) -> impl Iterator<Item = &ParameterVerdict> {
        self.parameters.iter().filter(|p| !p.converged)
    }
}

/// PSRF per named parameter; converged overall iff every PSRF < 1.2.
pub fn convergence_report<'a, I>(traces: I) -> Result<ConvergenceReport>
where
    I: IntoIterator<Item = (&'a str, &'a TraceSet)>,
{
    let mut parameters = Vec::new();
    for (name, set) in traces {
        let value = psrf(set).map_err(|e| match e {
            Error::DegenerateTrace(_) => Error::DegenerateTrace(Some(name.to_string())),
            other => other,
        })?;
        parameters.push(ParameterVerdict {
            name: name.to_string(),
            psrf: value,
            converged: value < PSRF_THRESHOLD,
        });
    }
    let converged = parameters.iter().all(|p| p.converged);
    Ok(ConvergenceReport { parameters, converged })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_short_chains() {
        let t = TraceSet::new(vec![vec![0.0, 2.0], vec![1.0, 3.0]]).unwrap();
        assert!((psrf(&t).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn identical_chains() {
        let c: Vec<f64> = (0..100).map(|k| ((k * 37) % 11) as f64).collect();
        let t = TraceSet::new(vec![c.clone(), c.clone(), c]).unwrap();
        assert_eq!(psrf(&t).unwrap(), 1.0 - 1.0 / 100.0);
    }

    #[test]
    fn constant_chains_are_degenerate() {
        let t = TraceSet::new(vec![vec![1.0; 5], vec![2.0; 5]]).unwrap();
        assert_eq!(psrf(&t), Err(Error::DegenerateTrace(None)));
        let r = convergence_report([("kappa_l", &t)]);
        assert_eq!(r, Err(Error::DegenerateTrace(Some("kappa_l".into()))));
    }

    #[test]
    fn invalid_trace_sets() {
        assert!(TraceSet::new(vec![vec![1.0, 2.0]]).is_err());
        assert!(TraceSet::new(vec![vec![1.0], vec![2.0]]).is_err());
        assert!(TraceSet::new(vec![vec![1.0, 2.0], vec![2.0]]).is_err());
        assert!(TraceSet::new(vec![vec![1.0, f64::NAN], vec![2.0, 1.0]]).is_err());
    }

    #[test]
    fn report_flags_failures() {
        let good = TraceSet::new(vec![vec![0.0, 1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0, 1.0]]).unwrap();
        // Means 0.5 and 10.5 with small spread: huge between-chain variance.
        let bad = TraceSet::new(vec![vec![0.0, 1.0, 0.0, 1.0], vec![10.0, 11.0, 10.0, 11.0]]).unwrap();
        let r = convergence_report([("a", &good), ("b", &bad)]).unwrap();
        assert!(!r.converged);
        assert!(r.parameters[0].converged);
        assert!(!r.parameters[1].converged);
        assert_eq!(r.failing().map(|p| p.name.as_str()).collect::<Vec<_>>(), vec!["b"]);
    }
}
