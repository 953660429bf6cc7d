use serde::Serialize;
use statrs::function::erf::erfc;

use super::{cross_moment_f, indicator, moments};
use crate::error::{Error, Result};
use crate::fsm::MinimalWindowMachine;
use crate::scalar::Scalar;
use crate::seq::ProbabilityModel;

/// A negative variance above `-CLAMP_TOLERANCE` is treated as rounding and
/// clamped to zero.
pub const CLAMP_TOLERANCE: f64 = 1e-9;

/// First moments of the window starting at position 1.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeMoments<T> {
    /// `E[X_1]`: a minimal window starts at 1.
    pub p: T,
    /// `E[Y_1]` over windows starting at 1 (zero otherwise).
    pub v: T,
    /// `E[Z_1]`, `Z_1 = X_1 ρ^{Y_1}`.
    pub q: T,
    /// `E[Z_1^2]`.
    pub z2: T,
    /// `E[Y_1 Z_1]`.
    pub w: T,
}

/// Everything the model says about one episode.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpisodeStatistics<T> {
    pub rho: T,
    pub p: T,
    pub v: T,
    pub q: T,
    pub z2: T,
    pub w: T,
    pub f000: T,
    pub f110: T,
    pub f011: T,
    pub f121: T,
    pub d11: T,
    pub d12: T,
    pub d21: T,
    pub d22: T,
    pub c11: T,
    pub c12: T,
    pub c22: T,
    pub mu: T,
    pub sigma2: T,
    /// The variance was slightly negative and set to zero.
    pub clamped: bool,
}

/// The five weights `1, L, ρ^L, ρ^{2L}, L ρ^L` summed against
/// `pgreedy(α, Ω, L)`.
pub fn episode_moments<T: Scalar>(
    mw: &MinimalWindowMachine,
    rho: &T,
    model: &ProbabilityModel<T>,
) -> Result<EpisodeMoments<T>> {
    let m = mw.machine();
    let n = m.num_states();
    let ones: Vec<T> = indicator(n, mw.omega());
    let zeros = vec![T::zero(); n];
    let one = T::one();
    let inv = rho.recip();

    let m1 = moments(m, &ones, None, &one, model)?;
    let neg1: Vec<T> = m1.iter().map(|x| T::zero() - x.clone()).collect();
    let mv = moments(m, &zeros, Some(&neg1), &one, model)?;
    let mq = moments(m, &ones, None, &inv, model)?;
    let mz = moments(m, &ones, None, &(inv.clone() * inv.clone()), model)?;
    let hw: Vec<T> = mq.iter().map(|x| T::zero() - inv.clone() * x.clone()).collect();
    let mw_ = moments(m, &zeros, Some(&hw), &inv, model)?;

    let a = mw.alpha();
    Ok(EpisodeMoments {
        p: m1[a].clone(),
        v: mv[a].clone(),
        q: mq[a].clone(),
        z2: mz[a].clone(),
        w: mw_[a].clone(),
    })
}

/// Covariance assembly from the moments and the four cross-moments.
///
/// `degenerate` marks episodes whose windows cannot overlap a later one
/// (no intermediate states); their ratio is constant and `σ² = 0` exactly.
pub fn assemble<T: Scalar>(
    rho: T,
    em: EpisodeMoments<T>,
    f: [T; 4],
    degenerate: bool,
) -> Result<EpisodeStatistics<T>> {
    let EpisodeMoments { p, v, q, z2, w } = em;
    if p <= T::zero() {
        return Err(Error::InvalidParameter(
            "episode has zero probability of a minimal window".into(),
        ));
    }
    let [f000, f110, f011, f121] = f;
    let one = T::one();
    let two = one.clone() + one.clone();
    let d22 = f000.clone() - (v.clone() - p.clone()) * p.clone();
    let d12 = f110.clone() - (w.clone() - q.clone()) * p.clone();
    let d21 = f011.clone() - (v.clone() - p.clone()) * q.clone();
    let d11 = f121.clone() - (w.clone() - q.clone()) * q.clone();
    let c11 = z2.clone() - q.clone() * q.clone() + two.clone() * d11.clone();
    let c22 = p.clone() * (one.clone() - p.clone()) + two.clone() * d22.clone();
    let c12 = q.clone() - p.clone() * q.clone() + d12.clone() + d21.clone();
    let mu = q.clone() / p.clone();
    let mut sigma2 = (c11.clone() - two * mu.clone() * c12.clone() + mu.clone() * mu.clone() * c22.clone())
        / (p.clone() * p.clone());
    let mut clamped = false;
    if degenerate {
        sigma2 = T::zero();
    } else if sigma2 < T::zero() {
        if sigma2.as_f64() >= -CLAMP_TOLERANCE {
            sigma2 = T::zero();
            clamped = true;
        } else {
            return Err(Error::NegativeVariance(sigma2.as_f64()));
        }
    }
    Ok(EpisodeStatistics {
        rho,
        p,
        v,
        q,
        z2,
        w,
        f000,
        f110,
        f011,
        f121,
        d11,
        d12,
        d21,
        d22,
        c11,
        c12,
        c22,
        mu,
        sigma2,
        clamped,
    })
}

/// All model quantities of the episode behind `mw`.
pub fn episode_statistics<T: Scalar>(
    mw: &MinimalWindowMachine,
    rho: &T,
    model: &ProbabilityModel<T>,
    cap: usize,
) -> Result<EpisodeStatistics<T>> {
    if !(*rho > T::zero() && *rho < T::one()) {
        return Err(Error::InvalidParameter(format!(
            "rho = {} must lie in (0, 1)",
            rho.as_f64()
        )));
    }
    if let Some(&a) = mw.labels().iter().find(|a| a.index() >= model.len()) {
        return Err(Error::UnknownSymbol(a.to_string()));
    }
    let em = episode_moments(mw, rho, model)?;
    let cm = mw.cross_machine(cap)?;
    let mut f = [T::zero(), T::zero(), T::zero(), T::zero()];
    for (k, pqr) in [(0, 0, 0), (1, 1, 0), (0, 1, 1), (1, 2, 1)].into_iter().enumerate() {
        f[k] = cross_moment_f(mw, &cm, rho, pqr, model)?;
    }
    assemble(rho.clone(), em, f, mw.theta().is_empty())
}

impl<T: Scalar> EpisodeStatistics<T> {
    pub fn to_f64(&self) -> EpisodeStatistics<f64> {
        EpisodeStatistics {
            rho: self.rho.as_f64(),
            p: self.p.as_f64(),
            v: self.v.as_f64(),
            q: self.q.as_f64(),
            z2: self.z2.as_f64(),
            w: self.w.as_f64(),
            f000: self.f000.as_f64(),
            f110: self.f110.as_f64(),
            f011: self.f011.as_f64(),
            f121: self.f121.as_f64(),
            d11: self.d11.as_f64(),
            d12: self.d12.as_f64(),
            d21: self.d21.as_f64(),
            d22: self.d22.as_f64(),
            c11: self.c11.as_f64(),
            c12: self.c12.as_f64(),
            c22: self.c22.as_f64(),
            mu: self.mu.as_f64(),
            sigma2: self.sigma2.as_f64(),
            clamped: self.clamped,
        }
    }
}

/// `√L (r - μ) / σ`; `None` when there are no windows or `σ = 0`.
pub fn score(stats: &EpisodeStatistics<f64>, r: f64, n: usize, len: usize) -> Option<f64> {
    let sigma = stats.sigma2.sqrt();
    if n == 0 || !(sigma > 0.0) || !r.is_finite() {
        return None;
    }
    Some((len as f64).sqrt() * (r - stats.mu) / sigma)
}

/// `Φ(-score)`, the upper tail of the standard normal.
pub fn p_value(score: f64) -> f64 {
    0.5 * erfc(score / std::f64::consts::SQRT_2)
}
