//! Named environment configurations that turn a seed into a context.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::household::{generate_context, GenerateError, LayoutCatalog, LayoutPool};
use crate::mdp::{Context, EnvKind, TaskParams, Variant};
use crate::tabletop::{generate_tabletop, TabletopError};

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error(transparent)]
    Household(#[from] GenerateError),
    #[error(transparent)]
    Tabletop(#[from] TabletopError),
}

/// Everything but the seed needed to sample a context.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub env: EnvKind,
    #[serde(default = "default_variant")]
    pub variant: Variant,
    #[serde(default = "default_pool")]
    pub pool: LayoutPool,
    /// Tabletop task number (1, 2 or 3).
    #[serde(default = "default_task")]
    pub table_task: u8,
    #[serde(default)]
    pub params: TaskParams,
}

fn default_variant() -> Variant {
    Variant::Standard
}

fn default_pool() -> LayoutPool {
    LayoutPool::Id
}

fn default_task() -> u8 {
    1
}

impl ScenarioSpec {
    pub fn household(variant: Variant, pool: LayoutPool) -> Self {
        Self { env: EnvKind::Household, variant, pool, table_task: 1, params: TaskParams::default() }
    }

    pub fn tabletop(task: u8, x: u32, y: u32) -> Self {
        Self {
            env: EnvKind::Tabletop,
            variant: Variant::Standard,
            pool: LayoutPool::Id,
            table_task: task,
            params: TaskParams { x, y },
        }
    }

    pub fn context(&self, seed: u64) -> Result<Context, ScenarioError> {
        self.context_with(seed, LayoutCatalog::builtin())
    }

    pub fn context_with(&self, seed: u64, catalog: &LayoutCatalog) -> Result<Context, ScenarioError> {
        match self.env {
            EnvKind::Household => Ok(generate_context(seed, catalog, self.pool, self.variant)?),
            EnvKind::Tabletop => Ok(generate_tabletop(self.table_task, self.params, seed)?.0),
        }
    }
}
