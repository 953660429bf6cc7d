//! Cross-moments `f(P, Q, R) = E[X_1 Σ_{k=2}^{Y_1} ρ^{P(k-1) + Q A_k + R(Y_k - Y_1)} X_k]`
//! with `A_k = Y_1 - k + 1`, evaluated by three chained moment recursions.

use super::{indicator, moments, MomentTable};
use crate::error::Result;
use crate::fsm::{CrossMachine, MinimalWindowMachine};
use crate::scalar::Scalar;
use crate::seq::ProbabilityModel;

/// The three moment tables of one cross-moment evaluation.
#[derive(Clone, Debug)]
pub struct CrossStages<T> {
    /// On the window machine: `ρ^{P L}` moments towards `Ω`.
    pub first: MomentTable<T>,
    /// On the pair machine, weighted by `first` at the targets.
    pub second: MomentTable<T>,
    /// On the window machine, weighted by `second` at the seeds.
    pub third: MomentTable<T>,
}

/// `ρ^{-k}`.
fn inv_pow<T: Scalar>(rho: &T, k: u32) -> T {
    rho.recip().powi(k)
}

/// All three stages; `None` when the episode has no intermediate states.
pub fn cross_moment_stages<T: Scalar>(
    mw: &MinimalWindowMachine,
    cm: &CrossMachine,
    rho: &T,
    (p, q, r): (u32, u32, u32),
    model: &ProbabilityModel<T>,
) -> Result<Option<CrossStages<T>>> {
    let Some(star) = cm.machine.as_ref() else {
        return Ok(None);
    };
    let m = mw.machine();
    let n = m.num_states();
    let first = moments(m, &indicator(n, mw.omega()), None, &inv_pow(rho, p), model)?;

    let mut init2 = vec![T::zero(); star.num_states()];
    for &(x, theta) in &cm.targets {
        init2[x] = first[theta].clone();
    }
    let second = moments(star, &init2, None, &inv_pow(rho, q), model)?;

    let mut init3 = vec![T::zero(); n];
    for &theta in mw.theta() {
        if let Some(x) = cm.seed_of[theta] {
            init3[theta] = second[x].clone();
        }
    }
    let third = moments(m, &init3, None, &inv_pow(rho, r), model)?;
    Ok(Some(CrossStages { first, second, third }))
}

/// `f(P, Q, R)`; zero when the episode has no intermediate states.
pub fn cross_moment_f<T: Scalar>(
    mw: &MinimalWindowMachine,
    cm: &CrossMachine,
    rho: &T,
    pqr: (u32, u32, u32),
    model: &ProbabilityModel<T>,
) -> Result<T> {
    Ok(cross_moment_stages(mw, cm, rho, pqr, model)?
        .map(|s| s.third[mw.alpha()].clone())
        .unwrap_or_else(T::zero))
}
