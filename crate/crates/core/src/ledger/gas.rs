use serde::{Deserialize, Serialize};

/// Fee schedule; fixed for the lifetime of a ledger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GasSchedule {
    pub tx_base: u64,
    /// Zero to nonzero.
    pub storage_set: u64,
    pub storage_update: u64,
    pub storage_read: u64,
    pub log_base: u64,
    pub log_byte: u64,
    pub deploy_base: u64,
    pub deploy_byte: u64,
    pub transition_step: u64,
}

impl Default for GasSchedule {
    fn default() -> Self {
        GasSchedule {
            tx_base: 21_000,
            storage_set: 20_000,
            storage_update: 5_000,
            storage_read: 200,
            log_base: 375,
            log_byte: 8,
            deploy_base: 32_000,
            deploy_byte: 200,
            transition_step: 10,
        }
    }
}

impl GasSchedule {
    /// Every constant must be positive.
    pub fn validate(&self) -> Result<(), String> {
        let all = [
            ("txBase", self.tx_base),
            ("storageSet", self.storage_set),
            ("storageUpdate", self.storage_update),
            ("storageRead", self.storage_read),
            ("logBase", self.log_base),
            ("logByte", self.log_byte),
            ("deployBase", self.deploy_base),
            ("deployByte", self.deploy_byte),
            ("perTransitionStep", self.transition_step),
        ];
        match all.iter().find(|(_, v)| *v == 0) {
            Some((name, _)) => Err(format!("gas constant {name} must be positive")),
            None => Ok(()),
        }
    }

    pub fn deploy(&self, image_len: usize) -> u64 {
        self.deploy_base + self.deploy_byte * image_len as u64
    }

    /// Each payload value occupies one 32-byte word.
    pub fn log(&self, values: usize) -> u64 {
        self.log_base + self.log_byte * 32 * values as u64
    }
}
