//! Penalized maximum pseudo-likelihood fitting and automatic parameter tying.
//!
//! The fitted objective is `pll(θ) − λ‖θ‖²` with `pll` the per-instance mean
//! pseudo-log-likelihood. Under tying the free variables are the cluster
//! values `μ_a` and the penalty becomes `λ Σ_a μ_a²`.

mod tying;

pub use tying::{quantize_params, TyingPartition};

use crate::dataset::DataSet;
use crate::error::{Error, Result};
use crate::model::PairwiseModel;
use crate::optim::{maximize, LbfgsSettings};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    pub l2_strength: f64,
    pub max_optimizer_steps: usize,
    pub gradient_tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            l2_strength: DEFAULT_L2,
            max_optimizer_steps: 500,
            gradient_tolerance: 1e-5,
        }
    }
}

pub const DEFAULT_L2: f64 = 1e-3;
pub const DEFAULT_APT_CLUSTERS: usize = 16;

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.l2_strength.is_finite() && self.l2_strength >= 0.0) {
            return Err(Error::Config(format!(
                "l2 strength must be finite and non-negative, got {}",
                self.l2_strength
            )));
        }
        if !(self.gradient_tolerance.is_finite() && self.gradient_tolerance > 0.0) {
            return Err(Error::Config(format!(
                "gradient tolerance must be positive, got {}",
                self.gradient_tolerance
            )));
        }
        Ok(())
    }

    fn settings(&self) -> LbfgsSettings {
        LbfgsSettings {
            max_steps: self.max_optimizer_steps,
            gradient_tolerance: self.gradient_tolerance,
            ..LbfgsSettings::default()
        }
    }
}

/// Outcome of one optimizer run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitReport {
    /// Penalized objective at the returned weights.
    pub objective: f64,
    /// `‖∇‖_∞` of the penalized objective at the returned weights.
    pub gradient_norm: f64,
    pub steps: usize,
    /// False when the step cap was hit first.
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct Fitted {
    pub model: PairwiseModel,
    pub report: FitReport,
}

#[derive(Clone, Debug)]
pub struct AptFit {
    pub model: PairwiseModel,
    pub partition: TyingPartition,
    pub report: FitReport,
}

fn check_dims(model: &PairwiseModel, ds: &DataSet) -> Result<()> {
    if model.n_vars() != ds.n_vars() {
        return Err(Error::DimensionMismatch {
            expected: model.n_vars(),
            found: ds.n_vars(),
        });
    }
    Ok(())
}

/// Maximizes the penalized PLL starting from the model's current weights.
pub fn mple_fit(model: &PairwiseModel, ds: &DataSet, opts: &FitOptions) -> Result<Fitted> {
    opts.validate()?;
    check_dims(model, ds)?;
    let lambda = opts.l2_strength;
    let mut work = model.clone();
    let objective = |theta: &[f64], grad: &mut [f64]| -> f64 {
        work.set_params(theta).expect("length fixed by x0");
        let pll = work
            .pll_with_gradient(ds, grad)
            .expect("dimensions checked");
        let mut penalty = 0.0;
        for (g, t) in grad.iter_mut().zip(theta) {
            penalty += t * t;
            *g -= 2.0 * lambda * t;
        }
        pll - lambda * penalty
    };
    let opt = maximize(objective, model.params(), &opts.settings())?;

    let mut out = model.clone();
    out.set_params(&opt.x)?;
    Ok(Fitted {
        model: out,
        report: FitReport {
            objective: opt.value,
            gradient_norm: opt.gradient_norm,
            steps: opt.steps,
            converged: opt.converged,
        },
    })
}

/// Fits one shared value per cluster, starting from the partition's means.
pub fn tied_fit(
    model: &PairwiseModel,
    ds: &DataSet,
    partition: &TyingPartition,
    opts: &FitOptions,
) -> Result<AptFit> {
    opts.validate()?;
    check_dims(model, ds)?;
    if partition.n_params() != model.n_params() {
        return Err(Error::DimensionMismatch {
            expected: model.n_params(),
            found: partition.n_params(),
        });
    }
    let lambda = opts.l2_strength;
    let mut work = model.clone();
    let mut member_grad = vec![0.0; model.n_params()];
    let objective = |mu: &[f64], grad: &mut [f64]| -> f64 {
        work.set_params(&partition.expand(mu))
            .expect("partition covers model");
        let pll = work
            .pll_with_gradient(ds, &mut member_grad)
            .expect("dimensions checked");
        grad.iter_mut().for_each(|g| *g = 0.0);
        for (&a, g) in partition.assignment().iter().zip(&member_grad) {
            grad[a] += g;
        }
        let mut penalty = 0.0;
        for (g, m) in grad.iter_mut().zip(mu) {
            penalty += m * m;
            *g -= 2.0 * lambda * m;
        }
        pll - lambda * penalty
    };
    let opt = maximize(objective, partition.means().to_vec(), &opts.settings())?;

    let mut out = model.clone();
    out.set_params(&partition.expand(&opt.x))?;
    Ok(AptFit {
        model: out,
        partition: partition.with_means(opt.x),
        report: FitReport {
            objective: opt.value,
            gradient_norm: opt.gradient_norm,
            steps: opt.steps,
            converged: opt.converged,
        },
    })
}

/// Untied fit, then optimal clustering of all weights into at most
/// `clusters` groups, then a tied refit. Node and edge weights are
/// clustered together. Cluster counts above the parameter count are
/// clamped to it.
pub fn learn_params_with_apt(
    model: &PairwiseModel,
    ds: &DataSet,
    clusters: usize,
    opts: &FitOptions,
) -> Result<AptFit> {
    if clusters == 0 {
        return Err(Error::ClusterCount {
            clusters,
            params: model.n_params(),
        });
    }
    let untied = mple_fit(model, ds, opts)?;
    let params = untied.model.params();
    let c = clusters.min(params.len());
    let partition = quantize_params(&params, c)?;
    tied_fit(&untied.model, ds, &partition, opts)
}
