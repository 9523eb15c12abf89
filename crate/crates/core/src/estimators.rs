//! Influence and outward influence estimators built from the cascade
//! samplers and the mean estimators.

use crate::error::{domain, Result};
use crate::graph::{ProbabilisticGraph, SeedSet};
use crate::mean::{fixed_budget_mean, rsa, BoundedSource, Draw, EstimationResult, RunOptions};
use crate::rng::RandomStream;
use crate::sampler::{build_neighborhood, ForwardIcSampler, IicpSampler, LtSampler, SeedNeighborhood};

/// Outer size `Y` of a non-trivial cascade, on `[1, n - |S|]`.
pub struct OuterSizeSource<'g> {
    g: &'g ProbabilisticGraph,
    nb: SeedNeighborhood,
}

impl<'g> OuterSizeSource<'g> {
    /// `None` when the seed set cannot influence anything (`beta0 = 0`).
    pub fn new(g: &'g ProbabilisticGraph, s: &SeedSet) -> Option<Self> {
        let nb = build_neighborhood(g, s);
        (nb.beta0 > 0.0).then_some(OuterSizeSource { g, nb })
    }

    pub fn beta0(&self) -> f64 {
        self.nb.beta0
    }

    pub fn neighborhood(&self) -> &SeedNeighborhood {
        &self.nb
    }
}

pub struct OuterSizeWorker<'a>(IicpSampler<'a>);

impl Draw for OuterSizeWorker<'_> {
    #[inline]
    fn draw(&mut self, rng: &mut RandomStream) -> f64 {
        self.0.sample(rng) as f64
    }
}

impl BoundedSource for OuterSizeSource<'_> {
    type Worker<'a>
        = OuterSizeWorker<'a>
    where
        Self: 'a;

    fn bounds(&self) -> (f64, f64) {
        (1.0, (self.g.node_count() - self.nb.seeds.len()) as f64)
    }

    fn worker(&self) -> OuterSizeWorker<'_> {
        OuterSizeWorker(IicpSampler::new(self.g, &self.nb).expect("beta0 > 0 checked at construction"))
    }
}

/// `Z = Y beta0 + |S|`, whose mean is the influence spread.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZTransform {
    pub beta0: f64,
    pub seed_size: usize,
    pub n: usize,
}

impl ZTransform {
    #[inline]
    pub fn apply(&self, y: f64) -> f64 {
        y * self.beta0 + self.seed_size as f64
    }

    pub fn bounds(&self) -> (f64, f64) {
        let k = self.seed_size as f64;
        (k + self.beta0, k + self.beta0 * (self.n - self.seed_size) as f64)
    }
}

pub struct ZSource<'g> {
    inner: OuterSizeSource<'g>,
    z: ZTransform,
}

impl<'g> ZSource<'g> {
    pub fn new(inner: OuterSizeSource<'g>) -> Self {
        let z = ZTransform {
            beta0: inner.nb.beta0,
            seed_size: inner.nb.seeds.len(),
            n: inner.g.node_count(),
        };
        ZSource { inner, z }
    }

    pub fn transform(&self) -> ZTransform {
        self.z
    }
}

pub struct ZWorker<'a>(OuterSizeWorker<'a>, ZTransform);

impl Draw for ZWorker<'_> {
    #[inline]
    fn draw(&mut self, rng: &mut RandomStream) -> f64 {
        self.1.apply(self.0.draw(rng))
    }
}

impl BoundedSource for ZSource<'_> {
    type Worker<'a>
        = ZWorker<'a>
    where
        Self: 'a;

    fn bounds(&self) -> (f64, f64) {
        self.z.bounds()
    }

    fn worker(&self) -> ZWorker<'_> {
        ZWorker(self.inner.worker(), self.z)
    }
}

/// Forward IC cascade size `M`, on `[|S|, n]`.
pub struct ForwardSource<'g> {
    pub g: &'g ProbabilisticGraph,
    pub seeds: SeedSet,
}

pub struct ForwardWorker<'a>(ForwardIcSampler<'a>);

impl Draw for ForwardWorker<'_> {
    #[inline]
    fn draw(&mut self, rng: &mut RandomStream) -> f64 {
        self.0.sample(rng) as f64
    }
}

impl BoundedSource for ForwardSource<'_> {
    type Worker<'a>
        = ForwardWorker<'a>
    where
        Self: 'a;

    fn bounds(&self) -> (f64, f64) {
        (self.seeds.len() as f64, self.g.node_count() as f64)
    }

    fn worker(&self) -> ForwardWorker<'_> {
        ForwardWorker(ForwardIcSampler::new(self.g, &self.seeds))
    }
}

/// Linear threshold cascade size `M`, on `[|S|, n]`.
pub struct LtSource<'g> {
    g: &'g ProbabilisticGraph,
    seeds: SeedSet,
}

impl<'g> LtSource<'g> {
    pub fn new(g: &'g ProbabilisticGraph, seeds: &SeedSet) -> Result<Self> {
        g.check_lt_weights()?;
        Ok(LtSource {
            g,
            seeds: seeds.clone(),
        })
    }
}

pub struct LtWorker<'a>(LtSampler<'a>);

impl Draw for LtWorker<'_> {
    #[inline]
    fn draw(&mut self, rng: &mut RandomStream) -> f64 {
        self.0.sample(rng) as f64
    }
}

impl BoundedSource for LtSource<'_> {
    type Worker<'a>
        = LtWorker<'a>
    where
        Self: 'a;

    fn bounds(&self) -> (f64, f64) {
        (self.seeds.len() as f64, self.g.node_count() as f64)
    }

    fn worker(&self) -> LtWorker<'_> {
        LtWorker(LtSampler::new(self.g, &self.seeds).expect("weights checked at construction"))
    }
}

fn check_params(eps: f64, delta: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0 && delta > 0.0 && delta < 1.0) {
        return domain(format!(
            "eps and delta must lie in (0, 1), got eps = {eps}, delta = {delta}"
        ));
    }
    Ok(())
}

/// `(eps, delta)`-estimate of the outward influence `I(S) - |S|`.
///
/// Draws outer sizes of non-trivial cascades only and rescales their mean by
/// `beta0`. `observed_sum` is the total of the drawn outer sizes.
pub fn soiea(g: &ProbabilisticGraph, s: &SeedSet, eps: f64, delta: f64, opts: &RunOptions) -> Result<EstimationResult> {
    check_params(eps, delta)?;
    let Some(src) = OuterSizeSource::new(g, s) else {
        return Ok(EstimationResult::analytic(0.0));
    };
    let mut r = rsa(&src, eps, delta, opts)?;
    r.estimate *= src.beta0();
    Ok(r)
}

/// `(eps, delta)`-estimate of the influence spread `I(S)`.
pub fn siea(g: &ProbabilisticGraph, s: &SeedSet, eps: f64, delta: f64, opts: &RunOptions) -> Result<EstimationResult> {
    check_params(eps, delta)?;
    let Some(src) = OuterSizeSource::new(g, s) else {
        return Ok(EstimationResult::analytic(s.len() as f64));
    };
    rsa(&ZSource::new(src), eps, delta, opts)
}

/// Influence spread under the linear threshold model.
pub fn siea_lt(
    g: &ProbabilisticGraph,
    s: &SeedSet,
    eps: f64,
    delta: f64,
    opts: &RunOptions,
) -> Result<EstimationResult> {
    check_params(eps, delta)?;
    let src = LtSource::new(g, s)?;
    rsa(&src, eps, delta, opts)
}

/// The same adaptive estimator run directly on forward cascade sizes.
pub fn rsa_forward_influence(
    g: &ProbabilisticGraph,
    s: &SeedSet,
    eps: f64,
    delta: f64,
    opts: &RunOptions,
) -> Result<EstimationResult> {
    check_params(eps, delta)?;
    rsa(&ForwardSource { g, seeds: s.clone() }, eps, delta, opts)
}

/// Mean of `t` forward cascade sizes.
pub fn mc_fixed_influence(g: &ProbabilisticGraph, s: &SeedSet, t: u64, opts: &RunOptions) -> Result<EstimationResult> {
    fixed_budget_mean(&ForwardSource { g, seeds: s.clone() }, t, opts)
}

/// Mean of `t` forward cascade sizes minus `|S|`.
pub fn mc_fixed_outward(g: &ProbabilisticGraph, s: &SeedSet, t: u64, opts: &RunOptions) -> Result<EstimationResult> {
    let mut r = mc_fixed_influence(g, s, t, opts)?;
    r.estimate -= s.len() as f64;
    Ok(r)
}

/// `|estimate / truth - 1|` in percent.
pub fn relative_error(estimate: f64, truth: f64) -> Result<f64> {
    if truth <= 0.0 || truth.is_nan() {
        return domain(format!("relative error needs a positive truth, got {truth}"));
    }
    Ok((estimate / truth - 1.0).abs() * 100.0)
}
