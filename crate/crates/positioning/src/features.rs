//! Feature vectors: CSI magnitudes of every sniffer, antenna and subcarrier,
//! scaled to unit Euclidean norm.

use csisniff_core::datastore::CombinedCsiDatapoint;
use ndarray::Array1;

use crate::{Error, Result};

/// Concatenation order of a feature vector.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FeatureLayout {
    pub sniffer_ids: Vec<u32>,
    pub antennas: usize,
    pub subcarriers: usize,
}

impl FeatureLayout {
    /// Four sniffers with four antennas over 52 subcarriers (832 values).
    pub fn four_sniffers() -> FeatureLayout {
        FeatureLayout { sniffer_ids: vec![0, 1, 2, 3], antennas: 4, subcarriers: 52 }
    }

    pub fn len(&self) -> usize {
        self.sniffer_ids.len() * self.antennas * self.subcarriers
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `|csi|` in sniffer, antenna, subcarrier order, divided by its norm.
pub fn preprocess(cdp: &CombinedCsiDatapoint, layout: &FeatureLayout) -> Result<Array1<f64>> {
    let mut v = Vec::with_capacity(layout.len());
    for id in &layout.sniffer_ids {
        let dp = cdp.members.get(id).ok_or(Error::Incomplete(*id))?;
        if dp.csi.len() != layout.antennas || dp.csi.iter().any(|r| r.len() != layout.subcarriers) {
            return Err(Error::Dimension(format!(
                "sniffer {id}: expected {}x{} CSI",
                layout.antennas, layout.subcarriers
            )));
        }
        v.extend(dp.csi.iter().flatten().map(|c| c.norm()));
    }
    normalize(Array1::from(v))
}

/// Scales a non-negative vector to unit norm.
pub fn normalize(mut v: Array1<f64>) -> Result<Array1<f64>> {
    let n = v.dot(&v).sqrt();
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::ZeroNorm);
    }
    v /= n;
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use csisniff_core::datastore::CsiDatapoint;
    use csisniff_core::estimate::Flavor;
    use csisniff_core::{MacAddr, C64};

    fn cdp(value: C64) -> CombinedCsiDatapoint {
        CombinedCsiDatapoint {
            tx_mac: MacAddr([2, 0, 0, 0, 0, 1]),
            timestamp_s: 0.0,
            complete: true,
            members: (0..4)
                .map(|id| {
                    (
                        id,
                        CsiDatapoint {
                            tx_mac: MacAddr([2, 0, 0, 0, 0, 1]),
                            timestamp_s: 0.0,
                            csi: vec![vec![value * (1.0 + id as f64); 52]; 4],
                            cfo_hz: 0.0,
                            snr_db: None,
                            sniffer_id: id,
                            flavor: Flavor::LltfRaw,
                        },
                    )
                })
                .collect(),
        }
    }

    #[test]
    fn all_ones_is_uniform() {
        let mut c = cdp(C64::new(1.0, 0.0));
        for dp in c.members.values_mut() {
            dp.csi = vec![vec![C64::new(0.0, 1.0); 52]; 4];
        }
        let f = preprocess(&c, &FeatureLayout::four_sniffers()).unwrap();
        assert_eq!(f.len(), 832);
        assert!(f.iter().all(|&v| (v - 1.0 / 832f64.sqrt()).abs() < 1e-15));
    }

    #[test]
    fn global_scale_invariance() {
        let a = preprocess(&cdp(C64::new(1.0, 2.0)), &FeatureLayout::four_sniffers()).unwrap();
        let b = preprocess(&cdp(C64::new(-3.0, 6.0)), &FeatureLayout::four_sniffers()).unwrap();
        assert!((&a - &b).iter().all(|d| d.abs() < 1e-12));
        assert!((a.dot(&a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn incomplete_and_zero() {
        let mut c = cdp(C64::new(1.0, 0.0));
        c.members.remove(&2);
        assert!(matches!(preprocess(&c, &FeatureLayout::four_sniffers()), Err(Error::Incomplete(2))));
        assert!(matches!(preprocess(&cdp(C64::new(0.0, 0.0)), &FeatureLayout::four_sniffers()), Err(Error::ZeroNorm)));
    }
}
