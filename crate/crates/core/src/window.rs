//! Sliding data windows and their covariance recursions.
//!
//! The tracker only consumes the data through the empirical covariance
//! `W Wᵀ`, so the window maintains it incrementally: evicting the oldest
//! sample and admitting the newest is a rank-2 update
//!
//! `W_t W_tᵀ = W_{t−1} W_{t−1}ᵀ − u_{t−T} u_{t−T}ᵀ + u_t u_tᵀ`,
//!
//! which makes the per-push cost independent of the window length. A
//! discounted variant replaces the moving window by exponential forgetting,
//! `W_{t+1} W_{t+1}ᵀ = γ² W_t W_tᵀ + u uᵀ`.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Pushes between full recomputations of the covariance from raw samples.
pub const DEFAULT_REFRESH_INTERVAL: usize = 10_000;

/// Ring buffer of the last `T` samples plus the maintained covariance `W Wᵀ`.
#[derive(Debug, Clone)]
pub struct DataWindow {
    samples: VecDeque<DVector<f64>>,
    covariance: DMatrix<f64>,
    capacity: usize,
    pushes_since_refresh: usize,
    refresh_interval: usize,
}

impl DataWindow {
    /// An empty window over R^`ambient` holding at most `capacity` samples.
    pub fn new(ambient: usize, capacity: usize) -> Result<Self> {
        Self::with_refresh_interval(ambient, capacity, DEFAULT_REFRESH_INTERVAL)
    }

    /// Same as [`DataWindow::new`] with a custom refresh interval; the
    /// covariance is recomputed from the raw samples every `refresh_interval`
    /// pushes to bound floating-point drift.
    pub fn with_refresh_interval(
        ambient: usize,
        capacity: usize,
        refresh_interval: usize,
    ) -> Result<Self> {
        if ambient == 0 || capacity == 0 {
            return Err(Error::InvalidParameter(
                "window needs ambient >= 1 and capacity >= 1".into(),
            ));
        }
        if refresh_interval == 0 {
            return Err(Error::InvalidParameter(
                "refresh interval must be positive".into(),
            ));
        }
        Ok(Self {
            samples: VecDeque::with_capacity(capacity),
            covariance: DMatrix::zeros(ambient, ambient),
            capacity,
            pushes_since_refresh: 0,
            refresh_interval,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.covariance.nrows()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Number of samples currently held.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.samples.len() == self.capacity
    }

    /// The maintained covariance `W Wᵀ`.
    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// `tr(W Wᵀ) = ‖W‖_F²`.
    pub fn covariance_trace(&self) -> f64 {
        self.covariance.trace()
    }

    /// Held samples, oldest first.
    pub fn samples(&self) -> impl Iterator<Item = &DVector<f64>> {
        self.samples.iter()
    }

    /// Admits a sample, evicting the oldest one when at capacity. The
    /// covariance is updated by the rank-2 formula (rank-1 while filling)
    /// and re-symmetrized.
    pub fn push(&mut self, u: &DVector<f64>) -> Result<()> {
        if u.len() != self.ambient_dim() {
            return Err(Error::DimensionMismatch(format!(
                "sample length {} vs ambient dimension {}",
                u.len(),
                self.ambient_dim()
            )));
        }
        if self.is_full() {
            let old = self.samples.pop_front().expect("window is full");
            self.covariance.ger(-1.0, &old, &old, 1.0);
        }
        self.covariance.ger(1.0, u, u, 1.0);
        self.samples.push_back(u.clone());
        self.symmetrize();
        self.pushes_since_refresh += 1;
        if self.pushes_since_refresh >= self.refresh_interval {
            self.refresh();
        }
        Ok(())
    }

    /// The window as an n×count matrix, columns ordered oldest → newest.
    pub fn data_matrix(&self) -> Result<DMatrix<f64>> {
        if self.samples.is_empty() {
            return Err(Error::Empty("data window"));
        }
        let mut m = DMatrix::zeros(self.ambient_dim(), self.samples.len());
        for (j, u) in self.samples.iter().enumerate() {
            m.set_column(j, u);
        }
        Ok(m)
    }

    /// Recomputes the covariance from the raw samples.
    pub fn refresh(&mut self) {
        let n = self.ambient_dim();
        let mut cov = DMatrix::zeros(n, n);
        for u in &self.samples {
            cov.ger(1.0, u, u, 1.0);
        }
        self.covariance = cov;
        self.pushes_since_refresh = 0;
    }

    fn symmetrize(&mut self) {
        let sym = (&self.covariance + self.covariance.transpose()) * 0.5;
        self.covariance = sym;
    }
}

/// Exponentially discounted covariance, `γ ∈ [0, 1]`.
#[derive(Debug, Clone)]
pub struct DiscountedWindow {
    covariance: DMatrix<f64>,
    forget: f64,
}

impl DiscountedWindow {
    pub fn new(ambient: usize, forget: f64) -> Result<Self> {
        if ambient == 0 {
            return Err(Error::InvalidParameter("ambient must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&forget) {
            return Err(Error::InvalidParameter(format!(
                "forgetting factor must lie in [0, 1], got {forget}"
            )));
        }
        Ok(Self {
            covariance: DMatrix::zeros(ambient, ambient),
            forget,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.covariance.nrows()
    }

    pub fn forget(&self) -> f64 {
        self.forget
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn covariance_trace(&self) -> f64 {
        self.covariance.trace()
    }

    /// `covariance ← γ² covariance + u uᵀ`.
    pub fn push(&mut self, u: &DVector<f64>) -> Result<()> {
        if u.len() != self.ambient_dim() {
            return Err(Error::DimensionMismatch(format!(
                "sample length {} vs ambient dimension {}",
                u.len(),
                self.ambient_dim()
            )));
        }
        self.covariance *= self.forget * self.forget;
        self.covariance.ger(1.0, u, u, 1.0);
        let sym = (&self.covariance + self.covariance.transpose()) * 0.5;
        self.covariance = sym;
        Ok(())
    }
}
