use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::train::{train, TrainConfig, TrainOutcome};
use crate::error::{Error, Result};
use crate::neuralcore::Activation;
use crate::operatornets::{
    default_scales, pod_basis, AnyModel, Architecture, CausalityModel, DeepOnetModel, MsDeepOnetModel,
    PodDeepOnetModel,
};
use crate::signalgen::ResponseDataset;

/// Architecture and layer sizes of a model to be built.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub architecture: Architecture,
    /// Branch widths, input first. The input width must equal `m`.
    pub branch: Vec<usize>,
    /// Trunk widths, `[1, ..., width]`. For the multi-scale trunk these are
    /// the widths of one subnet; ignored for POD.
    pub trunk: Vec<usize>,
    pub activation: Activation,
    /// Multi-scale factors; `None` means [`default_scales`] with 20 entries.
    pub scales: Option<Vec<f64>>,
}

impl ModelSpec {
    pub fn new(architecture: Architecture, branch: Vec<usize>, trunk: Vec<usize>, activation: Activation) -> Self {
        Self { architecture, branch, trunk, activation, scales: None }
    }
}

/// Builds a freshly initialized model. POD reads its basis from the
/// training outputs, with as many modes as the branch has outputs.
pub fn build_model(spec: &ModelSpec, train_ds: &ResponseDataset, seed: u64) -> Result<AnyModel> {
    let (Some(&m_in), Some(&width)) = (spec.branch.first(), spec.branch.last()) else {
        return Err(Error::InvalidArgument("branch needs at least input and output widths".into()));
    };
    if m_in != train_ds.m {
        return Err(Error::DimensionMismatch { expected: train_ds.m, got: m_in });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let act = spec.activation;
    let dt = train_ds.dt;
    Ok(match spec.architecture {
        Architecture::DeepOnet => AnyModel::DeepOnet(DeepOnetModel::new(&spec.branch, &spec.trunk, act, dt, &mut rng)?),
        Architecture::Pod => {
            let pod = pod_basis(train_ds.output_matrix().view(), width)?;
            AnyModel::Pod(PodDeepOnetModel::new(&spec.branch, act, pod, &mut rng)?)
        }
        Architecture::MsDeepOnet => {
            let scales = spec.scales.clone().unwrap_or_else(|| default_scales(20));
            AnyModel::MsDeepOnet(MsDeepOnetModel::new(&spec.branch, &spec.trunk, scales, act, dt, &mut rng)?)
        }
        arch @ (Architecture::Causality | Architecture::CausalityNoConv) => {
            let conv = arch == Architecture::Causality;
            AnyModel::Causality(CausalityModel::new(&spec.branch, &spec.trunk, act, conv, dt, &mut rng)?)
        }
    })
}

/// [`train`] for a model of any architecture.
pub fn train_any(
    model: AnyModel,
    cfg: &TrainConfig,
    train_ds: &ResponseDataset,
    test_ds: Option<&ResponseDataset>,
) -> Result<TrainOutcome<AnyModel>> {
    fn wrap<M>(o: TrainOutcome<M>, f: fn(M) -> AnyModel) -> TrainOutcome<AnyModel> {
        TrainOutcome { model: f(o.model), best: f(o.best), history: o.history, stats: o.stats }
    }
    Ok(match model {
        AnyModel::DeepOnet(m) => wrap(train(m, cfg, train_ds, test_ds)?, AnyModel::DeepOnet),
        AnyModel::Pod(m) => wrap(train(m, cfg, train_ds, test_ds)?, AnyModel::Pod),
        AnyModel::MsDeepOnet(m) => wrap(train(m, cfg, train_ds, test_ds)?, AnyModel::MsDeepOnet),
        AnyModel::Causality(m) => wrap(train(m, cfg, train_ds, test_ds)?, AnyModel::Causality),
    })
}
