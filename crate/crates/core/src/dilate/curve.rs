use std::fmt;
use std::sync::Arc;

use crate::channel::QuantumChannel;
use crate::error::{Error, Result};

/// Time domain of a curve. Infinite horizons are evaluated on `[0, window]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Finite(f64),
    Infinite { window: f64 },
}

impl Horizon {
    /// Right end of the evaluation domain.
    pub fn end(&self) -> f64 {
        match *self {
            Horizon::Finite(t) => t,
            Horizon::Infinite { window } => window,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Horizon::Finite(_))
    }

    fn validate(&self) -> Result<()> {
        let end = self.end();
        if end.is_finite() && end > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("horizon must be positive and finite, got {end}")))
        }
    }
}

/// Anything that yields a channel at each time: target curves, schedules
/// and their smoothed versions.
pub trait ChannelSource: Sync {
    fn dim(&self) -> usize;
    fn channel_at(&self, t: f64) -> Result<QuantumChannel>;
}

type Evaluator = dyn Fn(f64) -> Result<QuantumChannel> + Send + Sync;

/// A curve `t ↦ Φ(t)` of channels on `C^n` with a diamond-norm Lipschitz
/// constant.
#[derive(Clone)]
pub struct ChannelCurve {
    dim: usize,
    horizon: Horizon,
    lipschitz_k: f64,
    evaluator: Arc<Evaluator>,
}

impl fmt::Debug for ChannelCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChannelCurve")
            .field("dim", &self.dim)
            .field("horizon", &self.horizon)
            .field("lipschitz_k", &self.lipschitz_k)
            .finish_non_exhaustive()
    }
}

impl ChannelCurve {
    pub fn new(
        dim: usize,
        horizon: Horizon,
        lipschitz_k: f64,
        evaluator: impl Fn(f64) -> Result<QuantumChannel> + Send + Sync + 'static,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("curve dimension must be positive".into()));
        }
        horizon.validate()?;
        check_lipschitz(lipschitz_k)?;
        Ok(ChannelCurve { dim, horizon, lipschitz_k, evaluator: Arc::new(evaluator) })
    }

    pub fn constant(channel: QuantumChannel, horizon: Horizon) -> Result<Self> {
        if channel.dim_in() != channel.dim_out() {
            return Err(Error::DimensionMismatch("curve channels must be square".into()));
        }
        let dim = channel.dim_in();
        Self::new(dim, horizon, 0.0, move |_| Ok(channel.clone()))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }

    pub fn t_f(&self) -> f64 {
        self.horizon.end()
    }

    pub fn lipschitz_k(&self) -> f64 {
        self.lipschitz_k
    }

    pub fn with_horizon(mut self, horizon: Horizon) -> Result<Self> {
        horizon.validate()?;
        self.horizon = horizon;
        Ok(self)
    }

    pub fn with_lipschitz(mut self, k: f64) -> Result<Self> {
        check_lipschitz(k)?;
        self.lipschitz_k = k;
        Ok(self)
    }

    /// `Φ(t)` for `t ∈ [0, t_f]`.
    pub fn evaluate(&self, t: f64) -> Result<QuantumChannel> {
        let t_f = self.t_f();
        if !(0.0..=t_f).contains(&t) {
            return Err(Error::OutOfRange { t, t_f });
        }
        let ch = (self.evaluator)(t)?;
        if ch.dim_in() != self.dim || ch.dim_out() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "evaluator returned a {}->{} channel for a dimension-{} curve",
                ch.dim_in(),
                ch.dim_out(),
                self.dim
            )));
        }
        Ok(ch)
    }
}

impl ChannelSource for ChannelCurve {
    fn dim(&self) -> usize {
        self.dim
    }

    fn channel_at(&self, t: f64) -> Result<QuantumChannel> {
        self.evaluate(t)
    }
}

fn check_lipschitz(k: f64) -> Result<()> {
    if k.is_finite() && k >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("Lipschitz constant must be finite and nonnegative, got {k}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_curve_evaluates_everywhere() {
        let c = ChannelCurve::constant(QuantumChannel::identity(2), Horizon::Finite(1.0)).unwrap();
        assert_eq!(c.evaluate(0.5).unwrap(), QuantumChannel::identity(2));
        assert!(matches!(c.evaluate(1.5), Err(Error::OutOfRange { .. })));
        assert_eq!(c.lipschitz_k(), 0.0);
    }

    #[test]
    fn rejects_bad_horizon() {
        let c = ChannelCurve::constant(QuantumChannel::identity(2), Horizon::Finite(-1.0));
        assert!(c.is_err());
        let c = ChannelCurve::constant(QuantumChannel::identity(2), Horizon::Infinite { window: 3.0 }).unwrap();
        assert_eq!(c.t_f(), 3.0);
        assert!(!c.horizon().is_finite());
    }
}
