use serde::{Deserialize, Serialize};

use super::dataset::TransferDataset;

/// Byte-size model for overhead accounting. There is no real wire format;
/// every method is charged by the same rules so totals are comparable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeModel {
    pub header: u64,
    pub series_id: u64,
    pub timestamp: u64,
    pub first_slot: u64,
    pub confirm_per_series: u64,
}

impl Default for SizeModel {
    fn default() -> Self {
        SizeModel { header: 64, series_id: 16, timestamp: 8, first_slot: 4, confirm_per_series: 24 }
    }
}

impl SizeModel {
    /// Header plus, per entry, id + newest timestamp + first-slot index + bitmap.
    pub fn dataset_bytes(&self, ds: &TransferDataset) -> u64 {
        self.header
            + ds.entries()
                .iter()
                .map(|e| self.series_id + self.timestamp + self.first_slot + (e.run.flags.len() as u64).div_ceil(8))
                .sum::<u64>()
    }

    pub fn confirmation_bytes(&self, series: usize) -> u64 {
        self.header + self.confirm_per_series * series as u64
    }

    /// A lookup naming `keys` series sources plus a time window each.
    pub fn request_bytes(&self, keys: usize) -> u64 {
        self.header + (self.series_id + self.timestamp) * keys as u64
    }
}
