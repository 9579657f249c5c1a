//! Fixtures shared by the benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wan_core::experiments::{problem, ProblemId};
use wan_core::geometry::{SampleBatch, Slices};
use wan_core::losses::PdeSpec;
use wan_core::networks::{adversary_arch, DnnParams, ModelKind, TrialNet, TrialSpec};
use wan_core::Result;

/// Example 1 in two space dimensions with a batch of `n` points per set
/// and freshly initialized networks.
pub struct Fixture {
    pub pde: PdeSpec,
    pub batch: SampleBatch,
    pub u: TrialNet,
    pub v: DnnParams,
}

pub fn ex1_fixture(n: usize, model: ModelKind) -> Result<Fixture> {
    let pde = problem(ProblemId::Ex1, 2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let spec = TrialSpec { kind: model, input_dim: 3, layers: 8, hid1: 20, hid2: 10, n_t: 20, horizon: 1.0 };
    let u = TrialNet::init(&spec, &mut rng)?;
    let v = DnnParams::init(adversary_arch(3, 9, 50)?, &mut rng);
    let batch = SampleBatch::draw(&pde.domain, n, n, Slices { initial: true, terminal: false }, &mut rng)?;
    Ok(Fixture { pde, batch, u, v })
}
