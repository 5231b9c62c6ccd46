//! Synthetic marketplaces with planted risk communities, and the three
//! cold-start masking protocols applied to test graphs.

mod generator;
mod scenario;

pub use generator::{
    default_class_profiles, generate_synthetic_graph, seller_communities, BlockProbability,
    GeneratorConfig, NORMAL_CLASS,
};
pub use scenario::{
    apply_scenario, sample_cold_entities, ColdStartRates, MaskedGraph, RetainedColumns, Scenario,
    ScenarioSpec,
};
