//! Fixtures shared by the criterion benchmarks in `benches/`.

use galop_core::fem::AssembledSystem;
use galop_core::forcing::{Dataset, Split};
use galop_core::harness::{Discretization, ExperimentConfig, ProblemKind};
use galop_core::opnet::{Network, NetworkConfig};

/// A problem at its default resolution with a small training set.
pub struct Fixture {
    pub config: ExperimentConfig,
    pub disc: Discretization,
    pub train: Dataset,
}

impl Fixture {
    pub fn new(problem: ProblemKind, m_train: usize) -> Self {
        let mut config = ExperimentConfig::for_problem(problem);
        config.m_train = m_train;
        let disc = Discretization::new(&config, config.elements[0], config.epsilon(), config.enriched[0])
            .expect("default discretization");
        let train = disc.dataset(&config, Split::Train).expect("dataset");
        Fixture { config, disc, train }
    }

    pub fn system(&self) -> &AssembledSystem {
        &self.disc.system
    }

    pub fn network_config(&self) -> NetworkConfig {
        let input = self.disc.input_dim(&self.config).expect("input dim");
        self.config.network_config(input, self.disc.system.size(), 0)
    }

    pub fn network(&self) -> Network {
        Network::new(self.network_config()).expect("valid network")
    }
}
