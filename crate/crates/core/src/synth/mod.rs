//! Synthetic two-domain problems: Gaussian mixtures with closed-form Bayes
//! supervisors, seeded sampling, and controlled scenarios.

mod io;
mod mixture;
mod scenario;

pub use io::{read_dataset, write_dataset};
pub use mixture::{
    bayes_posterior, paper_default_specs, sample_mixture, Component, DomainDataset, DomainTag,
    GaussianMixtureSpec, LabeledMask, LabeledSample,
};
pub use scenario::{make_scenario, AffineMap, Scenario, ScenarioKind, ScenarioSpec};
