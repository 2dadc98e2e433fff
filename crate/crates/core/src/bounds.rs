//! Interval bound propagation through the network.
//!
//! The propagated pre-activation intervals serve two purposes: they give a
//! sound per-neuron, per-side big-M constant, and they prove stable ReLU
//! phases so those neurons need no binary variable at all.

use crate::error::{Error, Result};
use crate::network::{Activation, Network};

/// Outward widening applied to every propagated interval. Plain interval
/// arithmetic on f64 endpoints can land a hair inside the true range because
/// each endpoint op rounds to nearest; the widening absorbs that rounding so
/// a replayed evaluation never falls outside its interval.
const WIDEN_ABS: f64 = 1e-12;
const WIDEN_REL: f64 = 1e-12;

/// A closed interval, possibly unbounded on either side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() {
            return Err(Error::NonFinite("interval endpoint".into()));
        }
        if lo > hi {
            return Err(Error::InvalidParameter(format!(
                "interval lower bound {lo} exceeds upper bound {hi}"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn unbounded() -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    /// Scale by a constant, flipping endpoints for negative factors.
    /// `0 * [-inf, inf]` is `[0, 0]`, not NaN.
    fn scale(&self, c: f64) -> Interval {
        if c == 0.0 {
            return Interval::point(0.0);
        }
        if c > 0.0 {
            Interval {
                lo: c * self.lo,
                hi: c * self.hi,
            }
        } else {
            Interval {
                lo: c * self.hi,
                hi: c * self.lo,
            }
        }
    }

    fn add(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo + other.lo,
            hi: self.hi + other.hi,
        }
    }

    fn widen(&self) -> Interval {
        if !self.is_finite() {
            return *self;
        }
        let pad = WIDEN_ABS + WIDEN_REL * self.lo.abs().max(self.hi.abs());
        Interval {
            lo: self.lo - pad,
            hi: self.hi + pad,
        }
    }

    fn relu(&self) -> Interval {
        Interval {
            lo: self.lo.max(0.0),
            hi: self.hi.max(0.0),
        }
    }
}

/// Whether interval bounds decide a ReLU neuron's branch over the whole
/// input set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Pre-activation is provably nonnegative: output equals pre-activation.
    AlwaysActive,
    /// Pre-activation is provably nonpositive: output is zero.
    AlwaysInactive,
    /// Both signs occur (or cannot be excluded): needs a binary variable.
    Unstable,
}

/// Per-neuron bounds and phases for one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerBounds {
    /// Layer number in the 1-based convention where the input layer is 1,
    /// so the first weight layer is 2.
    pub layer: usize,
    /// Bounds on `W x + b` for each neuron.
    pub pre_act: Vec<Interval>,
    /// Bounds after the activation.
    pub post_act: Vec<Interval>,
    /// Resolved phase for each neuron. Linear layers are `AlwaysActive`
    /// (the activation is the identity).
    pub phase: Vec<Phase>,
}

impl LayerBounds {
    pub fn width(&self) -> usize {
        self.pre_act.len()
    }

    pub fn unstable_count(&self) -> usize {
        self.phase.iter().filter(|p| **p == Phase::Unstable).count()
    }
}

/// Propagate an input box through the network.
///
/// Sound: for every input inside the box, each neuron's true pre-activation
/// lies inside the reported `pre_act` interval. An unbounded input box does
/// not fail here; it yields infinite intervals that the big-M derivation
/// rejects.
pub fn propagate(net: &Network, input_box: &[Interval]) -> Result<Vec<LayerBounds>> {
    if input_box.len() != net.input_dim() {
        return Err(Error::DimensionMismatch {
            context: "input box".into(),
            expected: net.input_dim(),
            found: input_box.len(),
        });
    }
    let mut current: Vec<Interval> = input_box.to_vec();
    let mut all = Vec::with_capacity(net.layers().len());
    for (idx, layer) in net.layers().iter().enumerate() {
        let mut pre_act = Vec::with_capacity(layer.width());
        for neuron in 0..layer.width() {
            let row = layer.weights().row(neuron);
            let mut acc = Interval::point(layer.bias().get(neuron));
            for (j, &w) in row.iter().enumerate() {
                acc = acc.add(&current[j].scale(w));
            }
            pre_act.push(acc.widen());
        }
        let (post_act, phase): (Vec<Interval>, Vec<Phase>) = match layer.activation() {
            Activation::Relu => pre_act
                .iter()
                .map(|iv| {
                    let phase = if iv.hi <= 0.0 {
                        Phase::AlwaysInactive
                    } else if iv.lo >= 0.0 {
                        Phase::AlwaysActive
                    } else {
                        Phase::Unstable
                    };
                    (iv.relu(), phase)
                })
                .unzip(),
            Activation::Linear => pre_act.iter().map(|iv| (*iv, Phase::AlwaysActive)).unzip(),
        };
        current = post_act.clone();
        all.push(LayerBounds {
            layer: idx + 2,
            pre_act,
            post_act,
            phase,
        });
    }
    Ok(all)
}

/// Smallest constants allowed on either big-M side; degenerate neurons
/// would otherwise produce zero coefficients.
pub const BIG_M_FLOOR: f64 = 1e-6;

/// Per-side big-M constants for one neuron.
///
/// `m_lo` bounds `-(W x + b)` from above and belongs on the
/// `x <= W x + b + M d` row; `m_hi` bounds the active output from above and
/// belongs on the `x <= M (1 - d)` row.
pub fn big_m_for(bounds: &LayerBounds, neuron: usize) -> Result<(f64, f64)> {
    let pre = &bounds.pre_act[neuron];
    if !pre.is_finite() {
        return Err(Error::UnboundedPreActivation {
            layer: bounds.layer,
            neuron,
        });
    }
    let m_lo = (-pre.lo()).max(0.0).max(BIG_M_FLOOR);
    let m_hi = pre.hi().max(0.0).max(BIG_M_FLOOR);
    Ok((m_lo, m_hi))
}

/// Total unstable ReLU neurons across all layers.
pub fn total_unstable(bounds: &[LayerBounds]) -> usize {
    bounds.iter().map(|b| b.unstable_count()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Layer, Network};
    use crate::numerics::{Matrix, Vector};

    fn single_layer_net(rows: &[Vec<f64>], bias: Vec<f64>, act: Activation) -> Network {
        let layer = Layer::new(
            Matrix::from_rows(rows).unwrap(),
            Vector::new(bias).unwrap(),
            act,
        )
        .unwrap();
        Network::new(rows[0].len(), vec![layer]).unwrap()
    }

    fn assert_close(a: f64, b: f64) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn sum_of_two_unit_boxes() {
        let net = single_layer_net(&[vec![1.0, 1.0]], vec![0.0], Activation::Relu);
        let boxes = [Interval::new(-1.0, 1.0).unwrap(), Interval::new(-1.0, 1.0).unwrap()];
        let bounds = propagate(&net, &boxes).unwrap();
        assert_close(bounds[0].pre_act[0].lo(), -2.0);
        assert_close(bounds[0].pre_act[0].hi(), 2.0);
        assert_eq!(bounds[0].phase[0], Phase::Unstable);
    }

    #[test]
    fn forced_active() {
        let net = single_layer_net(&[vec![1.0]], vec![5.0], Activation::Relu);
        let bounds = propagate(&net, &[Interval::new(-1.0, 1.0).unwrap()]).unwrap();
        assert_close(bounds[0].pre_act[0].lo(), 4.0);
        assert_close(bounds[0].pre_act[0].hi(), 6.0);
        assert_eq!(bounds[0].phase[0], Phase::AlwaysActive);
    }

    #[test]
    fn forced_inactive() {
        let net = single_layer_net(&[vec![-1.0]], vec![-5.0], Activation::Relu);
        let bounds = propagate(&net, &[Interval::new(0.0, 1.0).unwrap()]).unwrap();
        assert_close(bounds[0].pre_act[0].lo(), -6.0);
        assert_close(bounds[0].pre_act[0].hi(), -5.0);
        assert_eq!(bounds[0].phase[0], Phase::AlwaysInactive);
        assert_eq!(bounds[0].post_act[0].hi(), 0.0);
    }

    #[test]
    fn big_m_from_propagated_bounds() {
        let lb = LayerBounds {
            layer: 2,
            pre_act: vec![Interval::new(-2.0, 2.0).unwrap(), Interval::new(-3.0, 1.0).unwrap()],
            post_act: vec![Interval::new(0.0, 2.0).unwrap(), Interval::new(0.0, 1.0).unwrap()],
            phase: vec![Phase::Unstable, Phase::Unstable],
        };
        assert_eq!(big_m_for(&lb, 0).unwrap(), (2.0, 2.0));
        assert_eq!(big_m_for(&lb, 1).unwrap(), (3.0, 1.0));
    }

    #[test]
    fn big_m_floor_for_degenerate_neuron() {
        let lb = LayerBounds {
            layer: 2,
            pre_act: vec![Interval::point(0.0)],
            post_act: vec![Interval::point(0.0)],
            phase: vec![Phase::AlwaysInactive],
        };
        assert_eq!(big_m_for(&lb, 0).unwrap(), (BIG_M_FLOOR, BIG_M_FLOOR));
    }

    #[test]
    fn big_m_rejects_unbounded() {
        let net = single_layer_net(&[vec![1.0]], vec![0.0], Activation::Relu);
        let bounds = propagate(&net, &[Interval::unbounded()]).unwrap();
        assert!(!bounds[0].pre_act[0].is_finite());
        assert!(matches!(
            big_m_for(&bounds[0], 0),
            Err(Error::UnboundedPreActivation { .. })
        ));
    }

    #[test]
    fn zero_weight_kills_unbounded_input() {
        let net = single_layer_net(&[vec![0.0]], vec![1.0], Activation::Relu);
        let bounds = propagate(&net, &[Interval::unbounded()]).unwrap();
        assert!(bounds[0].pre_act[0].is_finite());
        assert_close(bounds[0].pre_act[0].lo(), 1.0);
        assert_close(bounds[0].pre_act[0].hi(), 1.0);
    }
}
