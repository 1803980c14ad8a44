//! Grouping of per-sniffer datapoints of the same transmission.
//!
//! The earliest unconsumed datapoint across all streams opens a group. Every
//! other stream then contributes its unconsumed datapoint with the same
//! transmitter that is nearest in time within the window after the anchor,
//! if any.

use std::collections::BTreeMap;

use super::CsiDatapoint;
use crate::mac_addr::MacAddr;
use crate::{Error, Result};

pub const MERGE_WINDOW_S: f64 = 0.030;

/// Datapoints of one transmission seen by several sniffers.
#[derive(Clone, Debug, PartialEq)]
pub struct CombinedCsiDatapoint {
    pub tx_mac: MacAddr,
    /// Anchor timestamp (earliest member).
    pub timestamp_s: f64,
    pub members: BTreeMap<u32, CsiDatapoint>,
    /// True when every stream contributed.
    pub complete: bool,
}

/// Merges time-ordered per-sniffer streams. Returns groups in anchor order
/// as `(stream, index)` member lists alongside the materialized groups.
pub fn merge_indices(streams: &[Vec<CsiDatapoint>], window_s: f64) -> Result<Vec<Vec<(usize, usize)>>> {
    for (si, s) in streams.iter().enumerate() {
        if let Some(i) = s.windows(2).position(|w| w[1].timestamp_s < w[0].timestamp_s) {
            return Err(Error::Unsorted { stream: si, index: i + 1 });
        }
    }
    let mut used: Vec<Vec<bool>> = streams.iter().map(|s| vec![false; s.len()]).collect();
    // First unconsumed index per stream.
    let mut head = vec![0usize; streams.len()];
    let mut groups = Vec::new();
    loop {
        for (si, h) in head.iter_mut().enumerate() {
            while *h < streams[si].len() && used[si][*h] {
                *h += 1;
            }
        }
        let anchor = (0..streams.len())
            .filter(|&si| head[si] < streams[si].len())
            .min_by(|&a, &b| streams[a][head[a]].timestamp_s.total_cmp(&streams[b][head[b]].timestamp_s).then(a.cmp(&b)));
        let Some(sa) = anchor else { break };
        let ia = head[sa];
        let a = &streams[sa][ia];
        used[sa][ia] = true;
        let mut members = vec![(sa, ia)];
        for (si, s) in streams.iter().enumerate() {
            if si == sa {
                continue;
            }
            let mut best: Option<usize> = None;
            for i in head[si]..s.len() {
                let dt = s[i].timestamp_s - a.timestamp_s;
                if dt > window_s {
                    break;
                }
                if used[si][i] || s[i].tx_mac != a.tx_mac || dt < 0.0 {
                    continue;
                }
                if best.is_none_or(|b| dt < s[b].timestamp_s - a.timestamp_s) {
                    best = Some(i);
                }
            }
            if let Some(i) = best {
                used[si][i] = true;
                members.push((si, i));
            }
        }
        members.sort_unstable();
        groups.push(members);
    }
    Ok(groups)
}

/// Merges per-sniffer streams into combined datapoints. Members are keyed by
/// the datapoints' sniffer ids, which must be distinct across streams.
pub fn merge_streams(streams: &[Vec<CsiDatapoint>], window_s: f64) -> Result<Vec<CombinedCsiDatapoint>> {
    let ids: Vec<Option<u32>> = streams.iter().map(|s| s.first().map(|d| d.sniffer_id)).collect();
    for (si, s) in streams.iter().enumerate() {
        if s.iter().any(|d| Some(d.sniffer_id) != ids[si]) {
            return Err(Error::DimensionMismatch(format!("stream {si} mixes sniffer ids")));
        }
    }
    let mut seen = ids.iter().flatten().collect::<Vec<_>>();
    seen.sort_unstable();
    if seen.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::DimensionMismatch("two streams share a sniffer id".into()));
    }
    Ok(merge_indices(streams, window_s)?
        .into_iter()
        .map(|members| {
            let (sa, ia) = members
                .iter()
                .copied()
                .min_by(|&(a, i), &(b, j)| streams[a][i].timestamp_s.total_cmp(&streams[b][j].timestamp_s).then(a.cmp(&b)))
                .expect("nonempty group");
            let anchor = &streams[sa][ia];
            CombinedCsiDatapoint {
                tx_mac: anchor.tx_mac,
                timestamp_s: anchor.timestamp_s,
                complete: members.len() == streams.len(),
                members: members.iter().map(|&(s, i)| (streams[s][i].sniffer_id, streams[s][i].clone())).collect(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::Flavor;

    fn dp(sniffer: u32, t: f64) -> CsiDatapoint {
        CsiDatapoint {
            tx_mac: MacAddr([2, 0, 0, 0, 0, 1]),
            timestamp_s: t,
            csi: vec![],
            cfo_hz: 0.0,
            snr_db: None,
            sniffer_id: sniffer,
            flavor: Flavor::LltfRaw,
        }
    }

    #[test]
    fn four_within_window() {
        let s: Vec<Vec<CsiDatapoint>> = [0.0, 0.010, 0.020, 0.029].iter().enumerate().map(|(i, &t)| vec![dp(i as u32, t)]).collect();
        let g = merge_streams(&s, MERGE_WINDOW_S).unwrap();
        assert_eq!(g.len(), 1);
        assert!(g[0].complete);
    }

    #[test]
    fn boundary() {
        let s = vec![vec![dp(0, 0.0)], vec![dp(1, 0.031)]];
        let g = merge_streams(&s, MERGE_WINDOW_S).unwrap();
        assert_eq!(g.len(), 2);
        assert!(g.iter().all(|g| !g.complete));
        let s = vec![vec![dp(0, 0.0)], vec![dp(1, 0.030)]];
        assert_eq!(merge_streams(&s, MERGE_WINDOW_S).unwrap().len(), 1);
    }

    #[test]
    fn nearest_wins_and_unsorted() {
        let s = vec![vec![dp(0, 0.0)], vec![dp(1, 0.020), dp(1, 0.005)]];
        assert!(matches!(merge_streams(&s, MERGE_WINDOW_S), Err(Error::Unsorted { stream: 1, index: 1 })));
        let s = vec![vec![dp(0, 0.0)], vec![dp(1, 0.012), dp(1, 0.015)]];
        let g = merge_indices(&s, MERGE_WINDOW_S).unwrap();
        assert_eq!(g, vec![vec![(0, 0), (1, 0)], vec![(1, 1)]]);
    }

    #[test]
    fn single_stream_singletons() {
        let s = vec![vec![dp(3, 0.0), dp(3, 0.001), dp(3, 0.002)]];
        let g = merge_streams(&s, MERGE_WINDOW_S).unwrap();
        assert_eq!(g.len(), 3);
        assert!(g.iter().zip([0.0, 0.001, 0.002]).all(|(g, t)| g.timestamp_s == t && g.complete));
    }
}
