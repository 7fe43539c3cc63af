//! Gaussian channels `(T, N, d₀)` acting as `d ↦ T d + d₀`, `ν ↦ T ν Tᵀ + N`.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, delta, Mat};
use crate::state::{matrix_to_rows, rows_to_matrix, GaussianState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("channel must act on at least one mode")]
    NoModes,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("AsymmetricNoise: noise matrix is not symmetric (max deviation {0:e})")]
    AsymmetricNoise(f64),
    #[error("PhysicalityViolation: min eigenvalue of N + iΔ - iTΔTᵀ is {min_eigenvalue:e}")]
    PhysicalityViolation { min_eigenvalue: f64 },
    #[error("non-finite entry in channel data")]
    NonFinite,
}

/// Realness class of a channel by sparsity pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RealnessClass {
    NotReal,
    /// All momentum rows of `T` vanish: every output is real.
    CompletelyReal,
    /// `T` never mixes positions with momenta: real states stay real.
    CovariantReal,
    Both,
}

/// Requested pattern for [`random_real_channel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RealChannelKind {
    CompletelyReal,
    CovariantReal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianChannel {
    n: usize,
    t: Mat,
    noise: Mat,
    d0: DVector<f64>,
}

impl GaussianChannel {
    pub fn new(t: Mat, noise: Mat, d0: DVector<f64>) -> Result<Self, ChannelError> {
        Self::with_tolerance(t, noise, d0, None)
    }

    /// `tol = None` uses `1e-9 · (1 + ‖N + iΔ − iTΔTᵀ‖_∞)`.
    pub fn with_tolerance(t: Mat, noise: Mat, d0: DVector<f64>, tol: Option<f64>) -> Result<Self, ChannelError> {
        let dim = t.nrows();
        if dim == 0 {
            return Err(ChannelError::NoModes);
        }
        if !dim.is_multiple_of(2) {
            return Err(ChannelError::DimensionMismatch {
                expected: dim + 1,
                got: dim,
            });
        }
        for got in [t.ncols(), noise.nrows(), noise.ncols(), d0.len()] {
            if got != dim {
                return Err(ChannelError::DimensionMismatch { expected: dim, got });
            }
        }
        if t.iter().chain(noise.iter()).chain(d0.iter()).any(|x| !x.is_finite()) {
            return Err(ChannelError::NonFinite);
        }
        let n = dim / 2;
        let h = physicality_matrix(&t, &noise, n);
        let tol = tol.unwrap_or_else(|| linalg::default_psd_tol(&h));
        let asym = (&noise - noise.transpose()).amax();
        if asym > tol {
            return Err(ChannelError::AsymmetricNoise(asym));
        }
        let noise = (&noise + noise.transpose()).scale(0.5);
        let h = physicality_matrix(&t, &noise, n);
        let min_eigenvalue = linalg::min_eigenvalue_hermitian(&h).expect("square");
        if min_eigenvalue < -tol {
            return Err(ChannelError::PhysicalityViolation { min_eigenvalue });
        }
        // N ⪰ 0 is implied for real N: the Hermitian condition holds for the
        // conjugate too, and the sum of the two is 2N.
        Ok(Self { n, t, noise, d0 })
    }

    pub fn identity(n: usize) -> Result<Self, ChannelError> {
        if n == 0 {
            return Err(ChannelError::NoModes);
        }
        Ok(Self {
            n,
            t: Mat::identity(2 * n, 2 * n),
            noise: Mat::zeros(2 * n, 2 * n),
            d0: DVector::zeros(2 * n),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> &Mat {
        &self.t
    }

    pub fn noise(&self) -> &Mat {
        &self.noise
    }

    pub fn d0(&self) -> &DVector<f64> {
        &self.d0
    }

    pub fn apply(&self, state: &GaussianState) -> Result<GaussianState, ChannelError> {
        if state.n() != self.n {
            return Err(ChannelError::DimensionMismatch {
                expected: self.n,
                got: state.n(),
            });
        }
        let d = &self.t * state.d() + &self.d0;
        let cm = &self.t * state.cm() * self.t.transpose() + &self.noise;
        let cm = (&cm + cm.transpose()).scale(0.5);
        // Physical channels map physical states to physical states; a loose
        // tolerance absorbs round-off on boundary inputs.
        let h_tol = 1e-8 * (1.0 + cm.amax());
        GaussianState::with_tolerance(d, cm, Some(h_tol)).map_err(|e| match e {
            crate::state::StateError::UncertaintyViolation { min_eigenvalue } => {
                ChannelError::PhysicalityViolation { min_eigenvalue }
            }
            _ => ChannelError::NonFinite,
        })
    }

    pub fn classify_real(&self, zero_tol: f64) -> RealnessClass {
        let n = self.n;
        let small = |x: f64| x.abs() <= zero_tol;
        let shift_ok = (0..n).all(|k| small(self.d0[2 * k + 1]));
        let noise_ok = (0..n).all(|k| (0..n).all(|l| small(self.noise[(2 * k, 2 * l + 1)])));
        if !(shift_ok && noise_ok) {
            return RealnessClass::NotReal;
        }
        let complete = (0..n).all(|k| (0..2 * n).all(|j| small(self.t[(2 * k + 1, j)])));
        let covariant =
            (0..n).all(|k| (0..n).all(|l| small(self.t[(2 * k, 2 * l + 1)]) && small(self.t[(2 * k + 1, 2 * l)])));
        match (complete, covariant) {
            (true, true) => RealnessClass::Both,
            (true, false) => RealnessClass::CompletelyReal,
            (false, true) => RealnessClass::CovariantReal,
            (false, false) => RealnessClass::NotReal,
        }
    }
}

/// `N + iΔ − iTΔTᵀ`, positive semidefinite exactly for physical channels.
pub fn physicality_matrix(t: &Mat, noise: &Mat, n: usize) -> linalg::CMat {
    let d = delta(n);
    linalg::to_complex(noise) + linalg::times_i(&(&d - t * &d * t.transpose()))
}

/// Random channel with the requested realness pattern, deterministic in
/// `seed`.
///
/// `T` is uniform on `[-1, 1]` over its allowed entries. `N` starts as
/// `A Aᵀ` restricted to the real-noise support (a principal-block
/// restriction, so still PSD), then is shifted by the smallest `λ ≥ 0`
/// making `N + λ I + iΔ − iTΔTᵀ ⪰ 0`. Since `λ I` shifts every eigenvalue
/// equally, `λ = max(0, −λ_min)` is exact and no search is needed.
pub fn random_real_channel(n: usize, kind: RealChannelKind, seed: u64) -> Result<GaussianChannel, ChannelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_real_channel_with(&mut rng, n, kind)
}

pub fn random_real_channel_with<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    kind: RealChannelKind,
) -> Result<GaussianChannel, ChannelError> {
    if n == 0 {
        return Err(ChannelError::NoModes);
    }
    let dim = 2 * n;
    let t = Mat::from_fn(dim, dim, |i, j| {
        let allowed = match kind {
            RealChannelKind::CompletelyReal => i % 2 == 0,
            RealChannelKind::CovariantReal => i % 2 == j % 2,
        };
        if allowed {
            rng.random_range(-1.0..=1.0)
        } else {
            0.0
        }
    });
    let a = Mat::from_fn(dim, dim, |_, _| rng.random_range(-1.0..=1.0));
    let mut noise = (&a * a.transpose()).scale(0.5);
    for i in 0..dim {
        for j in 0..dim {
            if i % 2 != j % 2 {
                noise[(i, j)] = 0.0;
            }
        }
    }
    noise += Mat::identity(dim, dim) * repair_shift(&t, &noise, n);
    let mut d0 = DVector::zeros(dim);
    for k in 0..n {
        d0[2 * k] = rng.random_range(-1.0..=1.0);
    }
    GaussianChannel::new(t, noise, d0)
}

/// Smallest `λ ≥ 0` (padded by round-off) with `N + λ I + iΔ − iTΔTᵀ ⪰ 0`.
fn repair_shift(t: &Mat, noise: &Mat, n: usize) -> f64 {
    let lam_min = linalg::min_eigenvalue_hermitian(&physicality_matrix(t, noise, n)).expect("square");
    if lam_min < 0.0 {
        -lam_min * (1.0 + 1e-12) + 1e-12
    } else {
        0.0
    }
}

/// Serialized form `{"n", "T", "N", "d0"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRecord {
    pub n: usize,
    #[serde(rename = "T")]
    pub t: Vec<Vec<f64>>,
    #[serde(rename = "N")]
    pub noise: Vec<Vec<f64>>,
    pub d0: Vec<f64>,
}

impl ChannelRecord {
    pub fn into_channel(self, tol: Option<f64>) -> Result<GaussianChannel, ChannelError> {
        if self.n == 0 {
            return Err(ChannelError::NoModes);
        }
        let dim = 2 * self.n;
        let mismatch = |got| ChannelError::DimensionMismatch { expected: dim, got };
        let t = rows_to_matrix(&self.t, dim).map_err(mismatch)?;
        let noise = rows_to_matrix(&self.noise, dim).map_err(mismatch)?;
        if self.d0.len() != dim {
            return Err(mismatch(self.d0.len()));
        }
        GaussianChannel::with_tolerance(t, noise, DVector::from_vec(self.d0), tol)
    }
}

impl From<&GaussianChannel> for ChannelRecord {
    fn from(c: &GaussianChannel) -> Self {
        Self {
            n: c.n,
            t: matrix_to_rows(&c.t),
            noise: matrix_to_rows(&c.noise),
            d0: c.d0.iter().copied().collect(),
        }
    }
}
