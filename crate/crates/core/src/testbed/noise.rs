use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::problem::{ObjectiveSpec, Oracle};

/// Multiplies every value and every derivative by an independent `1 + xi`,
/// `xi ~ U(-a, a)`.
pub struct NoiseWrapper {
    inner: Box<dyn Oracle>,
    amplitude: f64,
    rng: ChaCha8Rng,
}

impl NoiseWrapper {
    pub const DEFAULT_AMPLITUDE: f64 = 1e-2;

    pub fn new(inner: Box<dyn Oracle>, amplitude: f64, seed: u64) -> Result<Self> {
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::InvalidConfig("noise amplitude must be >= 0".into()));
        }
        Ok(Self {
            inner,
            amplitude,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    fn factor(&mut self) -> f64 {
        if self.amplitude == 0.0 {
            return 1.0;
        }
        1.0 + self.rng.random_range(-self.amplitude..self.amplitude)
    }
}

impl Oracle for NoiseWrapper {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&mut self, x: &DVector<f64>) -> f64 {
        let v = self.inner.value(x);
        v * self.factor()
    }

    fn partial(&mut self, x: &DVector<f64>, i: usize) -> Option<f64> {
        let d = self.inner.partial(x, i)?;
        Some(d * self.factor())
    }

    fn second_partial(&mut self, x: &DVector<f64>, i: usize, j: usize) -> Option<f64> {
        let d = self.inner.second_partial(x, i, j)?;
        Some(d * self.factor())
    }
}

/// Wraps the oracle of `spec` in a [`NoiseWrapper`], keeping availability
/// and bounds.
pub fn add_noise(spec: ObjectiveSpec, amplitude: f64, seed: u64) -> Result<ObjectiveSpec> {
    let (oracle, availability, bounds) = spec.into_parts();
    ObjectiveSpec::new(
        Box::new(NoiseWrapper::new(oracle, amplitude, seed)?),
        availability,
        bounds,
    )
}
