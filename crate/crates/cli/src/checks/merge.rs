//! Merge grouping against an exhaustive search over set partitions.
//!
//! The stated rules: groups are formed in time order; each group is opened
//! by the earliest point not yet grouped (lower stream index on ties) and
//! takes, from every other stream, the same-transmitter ungrouped point with
//! the smallest non-negative delay up to the window (lower index on ties),
//! if one exists. Every point belongs to exactly one group.

use std::collections::BTreeSet;

use csisniff_core::datastore::{merge_indices, merge_streams, CsiDatapoint, MERGE_WINDOW_S};
use csisniff_core::estimate::Flavor;
use csisniff_core::{MacAddr, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{fail, Outcome};

/// A datapoint reduced to what grouping looks at.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub mac: u8,
    pub t: f64,
}

type Member = (usize, usize);
type Partition = Vec<Vec<Member>>;

fn to_streams(streams: &[Vec<Point>]) -> Vec<Vec<CsiDatapoint>> {
    streams
        .iter()
        .enumerate()
        .map(|(si, s)| {
            s.iter()
                .map(|p| CsiDatapoint {
                    tx_mac: MacAddr([2, 0, 0, 0, 0, p.mac]),
                    timestamp_s: p.t,
                    csi: vec![vec![C64::new(1.0, 0.0)]],
                    cfo_hz: 0.0,
                    snr_db: None,
                    sniffer_id: si as u32,
                    flavor: Flavor::CpDenoised,
                })
                .collect()
        })
        .collect()
}

fn key(streams: &[Vec<Point>], m: Member) -> (f64, usize, usize) {
    (streams[m.0][m.1].t, m.0, m.1)
}

fn earliest(streams: &[Vec<Point>], members: impl Iterator<Item = Member>) -> Option<Member> {
    members.min_by(|&a, &b| {
        let (ka, kb) = (key(streams, a), key(streams, b));
        ka.0.total_cmp(&kb.0).then(ka.1.cmp(&kb.1)).then(ka.2.cmp(&kb.2))
    })
}

/// Declarative check of a candidate partition against the rules.
pub fn satisfies_rules(streams: &[Vec<Point>], partition: &Partition, window: f64) -> bool {
    let total: usize = streams.iter().map(Vec::len).sum();
    let all: BTreeSet<Member> = partition.iter().flatten().copied().collect();
    if all.len() != total || partition.iter().map(Vec::len).sum::<usize>() != total {
        return false;
    }
    let mut groups: Vec<(Member, &Vec<Member>)> = Vec::new();
    for g in partition {
        let Some(a) = earliest(streams, g.iter().copied()) else { return false };
        groups.push((a, g));
    }
    groups.sort_by(|x, y| {
        let (kx, ky) = (key(streams, x.0), key(streams, y.0));
        kx.0.total_cmp(&ky.0).then(kx.1.cmp(&ky.1)).then(kx.2.cmp(&ky.2))
    });
    let mut remaining = all;
    for (anchor, g) in groups {
        if earliest(streams, remaining.iter().copied()) != Some(anchor) {
            return false;
        }
        let pa = streams[anchor.0][anchor.1];
        for (si, s) in streams.iter().enumerate() {
            if si == anchor.0 {
                continue;
            }
            let expected = remaining
                .iter()
                .filter(|m| m.0 == si)
                .filter(|m| s[m.1].mac == pa.mac && (0.0..=window).contains(&(s[m.1].t - pa.t)))
                .min_by(|a, b| (s[a.1].t - pa.t).total_cmp(&(s[b.1].t - pa.t)).then(a.1.cmp(&b.1)))
                .copied();
            let actual: Vec<Member> = g.iter().filter(|m| m.0 == si).copied().collect();
            if actual != expected.into_iter().collect::<Vec<_>>() {
                return false;
            }
        }
        for m in g {
            remaining.remove(m);
        }
    }
    true
}

/// Every partition whose blocks hold at most one point per stream and a
/// single transmitter.
pub fn exhaustive_partitions(streams: &[Vec<Point>]) -> Vec<Partition> {
    let points: Vec<Member> =
        streams.iter().enumerate().flat_map(|(si, s)| (0..s.len()).map(move |i| (si, i))).collect();
    let mut out = Vec::new();
    let mut blocks: Partition = Vec::new();
    fn rec(streams: &[Vec<Point>], points: &[Member], k: usize, blocks: &mut Partition, out: &mut Vec<Partition>) {
        if k == points.len() {
            out.push(blocks.clone());
            return;
        }
        let p = points[k];
        let mac = streams[p.0][p.1].mac;
        for b in 0..blocks.len() {
            let ok = blocks[b].iter().all(|m| m.0 != p.0 && streams[m.0][m.1].mac == mac);
            if ok {
                blocks[b].push(p);
                rec(streams, points, k + 1, blocks, out);
                blocks[b].pop();
            }
        }
        blocks.push(vec![p]);
        rec(streams, points, k + 1, blocks, out);
        blocks.pop();
    }
    rec(streams, &points, 0, &mut blocks, &mut out);
    out
}

fn canonical(p: &Partition) -> BTreeSet<BTreeSet<Member>> {
    p.iter().map(|g| g.iter().copied().collect()).collect()
}

/// True when the greedy grouping is the unique partition obeying the rules.
pub fn greedy_satisfies_rules(streams: &[Vec<Point>], window: f64) -> Result<bool, csisniff_core::Error> {
    let greedy = merge_indices(&to_streams(streams), window)?;
    let valid: Vec<Partition> =
        exhaustive_partitions(streams).into_iter().filter(|p| satisfies_rules(streams, p, window)).collect();
    Ok(valid.len() == 1 && canonical(&valid[0]) == canonical(&greedy))
}

fn random_timeline(rng: &mut ChaCha8Rng, max_per_stream: usize, slots: u32, slot_s: f64, macs: u8) -> Vec<Vec<Point>> {
    (0..4)
        .map(|_| {
            let n = rng.random_range(0..=max_per_stream);
            let mut v: Vec<Point> = (0..n)
                .map(|_| Point { mac: rng.random_range(0..macs), t: rng.random_range(0..slots) as f64 * slot_s })
                .collect();
            v.sort_by(|a, b| a.t.total_cmp(&b.t));
            v
        })
        .collect()
}

pub fn check(random_timelines: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = MERGE_WINDOW_S;
    // Toy timelines: 12 points on a 10 ms lattice so ties and window edges occur.
    let mut toy_ok = 0;
    let toys = 40;
    for i in 0..toys {
        let mut tl = random_timeline(&mut rng, 3, 8, 0.010, if i % 2 == 0 { 1 } else { 2 });
        while tl.iter().map(Vec::len).sum::<usize>() > 12 {
            tl.iter_mut().max_by_key(|s| s.len()).map(Vec::pop);
        }
        match greedy_satisfies_rules(&tl, w) {
            Ok(true) => toy_ok += 1,
            Ok(false) => {}
            Err(e) => return fail(e),
        }
    }

    let mut prop_fail = 0;
    for _ in 0..random_timelines {
        let tl = random_timeline(&mut rng, 30, 1000, 0.001, 3);
        let streams = to_streams(&tl);
        let Ok(groups) = merge_streams(&streams, w) else {
            prop_fail += 1;
            continue;
        };
        let total: usize = tl.iter().map(Vec::len).sum();
        let mut ok = true;
        for g in &groups {
            let t0 = g.members.values().map(|m| m.timestamp_s).fold(f64::INFINITY, f64::min);
            ok &= t0 == g.timestamp_s;
            ok &= g.members.values().all(|m| m.tx_mac == g.tx_mac && (0.0..=w).contains(&(m.timestamp_s - t0)));
            ok &= g.members.iter().all(|(&id, m)| id == m.sniffer_id);
            ok &= g.complete == (g.members.len() == streams.len());
        }
        ok &= groups.iter().map(|g| g.members.len()).sum::<usize>() == total;
        if !ok {
            prop_fail += 1;
        }
    }
    let idx_ok = (0..random_timelines.min(2000)).all(|_| {
        let tl = random_timeline(&mut rng, 30, 1000, 0.001, 3);
        let Ok(groups) = merge_indices(&to_streams(&tl), w) else { return false };
        let flat: Vec<Member> = groups.iter().flatten().copied().collect();
        let set: BTreeSet<Member> = flat.iter().copied().collect();
        set.len() == flat.len() && flat.len() == tl.iter().map(Vec::len).sum::<usize>()
    });
    let pass = toy_ok == toys && prop_fail == 0 && idx_ok;
    (
        pass,
        format!(
            "exhaustive oracle agrees on {toy_ok}/{toys} toy timelines; property violations {prop_fail}/{random_timelines}; \
             index partition {}",
            if idx_ok { "ok" } else { "violated" }
        ),
    )
}
