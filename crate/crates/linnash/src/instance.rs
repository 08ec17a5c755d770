use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use linnash_core::env::{generate_instance, BanditInstance, Lineage, Purpose, RewardModel};
use linnash_core::ArmSet;
use serde::{Deserialize, Serialize};

use crate::config::InstanceSpec;

/// JSON form of a bandit instance; enough for exact replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub dim: usize,
    /// Row-major, one row per arm.
    pub arms: Vec<Vec<f64>>,
    pub theta_star: Vec<f64>,
    pub model: RewardModel,
    pub nu: f64,
}

impl InstanceFile {
    pub fn from_instance(instance: &BanditInstance) -> Self {
        Self {
            dim: instance.dim(),
            arms: instance.arms().to_rows(),
            theta_star: instance.theta_star().to_vec(),
            model: instance.model(),
            nu: instance.nu(),
        }
    }

    pub fn into_instance(self) -> Result<BanditInstance> {
        let arms = ArmSet::new(self.dim, &self.arms)?;
        Ok(BanditInstance::new(arms, self.theta_star, self.model, Some(self.nu))?)
    }
}

pub fn save_instance(instance: &BanditInstance, path: &Path) -> Result<()> {
    let json = serde_json::to_string(&InstanceFile::from_instance(instance))? + "\n";
    fs::write(path, json).with_context(|| format!("writing {}", path.display()))
}

pub fn load_instance(path: &Path) -> Result<BanditInstance> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading instance {}", path.display()))?;
    let file: InstanceFile = serde_json::from_str(&text)
        .with_context(|| format!("parsing instance {}", path.display()))?;
    file.into_instance()
}

/// Materializes the instance of a config; generated instances draw from the
/// instance stream of `master_seed`.
pub fn build_instance(spec: &InstanceSpec, master_seed: u64) -> Result<BanditInstance> {
    match spec {
        InstanceSpec::Generated {
            dim,
            arms,
            max_mean,
            model,
            nu,
        } => {
            let mut rng = Lineage::new(master_seed, 0).stream(Purpose::Instance);
            let inst = generate_instance(*dim, *arms, *max_mean, *model, &mut rng)?;
            match nu {
                Some(nu) => Ok(BanditInstance::new(
                    inst.arms().clone(),
                    inst.theta_star().to_vec(),
                    *model,
                    Some(*nu),
                )?),
                None => Ok(inst),
            }
        }
        InstanceSpec::File { path } => load_instance(path),
    }
}
