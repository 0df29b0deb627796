//! Observer callbacks and recorded trajectories.

use crate::error::Result;

/// Per-step facts the integrator knows and the state does not.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepInfo {
    /// Number of completed steps.
    pub step: usize,
    /// `max | |n| - 1 |` of the director produced by the step, measured
    /// before the optional projection onto the sphere.
    pub unit_drift: f64,
}

/// Diagnostic callback invoked during a run.
///
/// Observers see the initial state (step 0) and then every `stride()`-th
/// step, synchronously.
pub trait Observer<S> {
    fn observe(&mut self, state: &S, info: &StepInfo) -> Result<()>;

    fn stride(&self) -> usize {
        1
    }
}

/// States recorded along a run, in time order.
#[derive(Clone, Debug)]
pub struct Trajectory<S> {
    pub states: Vec<S>,
    /// Step index of each recorded state.
    pub steps: Vec<usize>,
}

impl<S> Trajectory<S> {
    pub fn new() -> Self {
        Self {
            states: Vec::new(),
            steps: Vec::new(),
        }
    }

    pub fn push(&mut self, step: usize, state: S) {
        self.steps.push(step);
        self.states.push(state);
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> Option<&S> {
        self.states.last()
    }

    pub fn first(&self) -> Option<&S> {
        self.states.first()
    }
}

impl<S> Default for Trajectory<S> {
    fn default() -> Self {
        Self::new()
    }
}

pub(crate) fn notify<S>(
    observers: &mut [&mut dyn Observer<S>],
    state: &S,
    info: &StepInfo,
) -> Result<()> {
    for obs in observers.iter_mut() {
        let stride = obs.stride().max(1);
        if info.step.is_multiple_of(stride) {
            obs.observe(state, info)?;
        }
    }
    Ok(())
}
