//! Transmit, channel, file and receive stages chained together.

use csisniff_core::capture::{load_iq_capture, write_iq_capture, DEFAULT_BLOCK_LEN};
use csisniff_core::datastore::{assemble_datapoint, merge_streams, read_dataset, write_dataset, Allowlist, Dataset, FrameMeta};
use csisniff_core::decode::{build_data_mpdu, parse_mac};
use csisniff_core::estimate::Flavor;
use csisniff_core::receiver::{Receiver, ReceiverConfig};
use csisniff_core::resample::resample;
use csisniff_core::synth::channel::{random_taps, CaptureBuilder};
use csisniff_core::synth::frame::{build_nonht_frame, TxConfig};
use csisniff_core::synth::mcs::ALL_MCS;
use csisniff_core::MacAddr;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FS: f64 = 20e6;

/// Several frames from different transmitters in one 3-antenna capture.
fn multi_frame_capture(rng: &mut ChaCha8Rng) -> (csisniff_core::capture::IqCapture, Vec<(usize, Vec<u8>)>) {
    let noise = 0.01;
    let mut b = CaptureBuilder::new(3, 40_000, FS, noise);
    let mut sent = Vec::new();
    for (i, &start) in [500usize, 9_000, 17_500, 26_000].iter().enumerate() {
        let ta = MacAddr([2, 0, 0, 0, 1, i as u8]);
        let psdu = build_data_mpdu(ta, MacAddr::BROADCAST, ta, i as u16, &vec![i as u8; 150]);
        let f = build_nonht_frame(&TxConfig { mcs: ALL_MCS[2 * i], psdu: psdu.clone(), scrambler_init: 0x5d }).unwrap();
        let taps: Vec<_> = (0..3).map(|_| random_taps(4, 2.0, rng)).collect();
        b.add_frame(&f.baseband, &taps, rng.random_range(-5e4..5e4), noise * 10f64.powf(30.0 / 20.0), start).unwrap();
        sent.push((start, psdu));
    }
    (b.build(rng, 5.2e9, 100.0).unwrap(), sent)
}

#[test]
fn frames_survive_file_round_trip_and_decode() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let (cap, sent) = multi_frame_capture(&mut rng);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.iq");
    write_iq_capture(&cap, &path, DEFAULT_BLOCK_LEN).unwrap();
    let back = load_iq_capture(&path).unwrap();
    assert_eq!(back.num_antennas(), 3);
    assert_eq!(back.len(), cap.len());

    let rx = Receiver::new(ReceiverConfig::default()).unwrap();
    let (frames, counters) = rx.process_capture(&back).unwrap();
    assert_eq!(counters.decoded, 4);
    for (pf, (start, psdu)) in frames.iter().zip(&sent) {
        assert_eq!(&pf.frame.psdu, psdu);
        assert!(pf.detection.start.abs_diff(*start) <= 2);
        assert!((pf.timestamp - (100.0 + *start as f64 / FS)).abs() < 1e-6);
        let mac = parse_mac(psdu).unwrap();
        assert_eq!(pf.frame.tx_mac, Some(mac.tx_mac));
        for fl in Flavor::ALL {
            let e = pf.estimate(fl).unwrap();
            assert_eq!(e.h.len(), 3);
        }
    }
}

#[test]
fn oversampled_capture_is_resampled() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let (cap, sent) = multi_frame_capture(&mut rng);
    let up = resample(&cap, 25e6).unwrap();
    assert_eq!(up.sample_rate, 25e6);
    let rx = Receiver::new(ReceiverConfig::default()).unwrap();
    let (frames, _) = rx.process_capture(&up).unwrap();
    let got: Vec<&Vec<u8>> = frames.iter().map(|f| &f.frame.psdu).collect();
    assert_eq!(got, sent.iter().map(|s| &s.1).collect::<Vec<_>>());
}

#[test]
fn datapoints_merge_and_persist() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let rx = Receiver::new(ReceiverConfig::default()).unwrap();
    // Two sniffers observe the same capture scene independently.
    let mut streams = Vec::new();
    for sniffer in 0..2u32 {
        let (cap, _) = multi_frame_capture(&mut rng);
        let (frames, _) = rx.process_capture(&cap).unwrap();
        let mut pts = Vec::new();
        for pf in &frames {
            let meta = FrameMeta { timestamp_s: pf.timestamp, cfo_hz: pf.detection.cfo_hz, snr_db: pf.snr_db.clone(), sniffer_id: sniffer };
            let est = pf.estimate(Flavor::CpDenoised).unwrap();
            pts.push(assemble_datapoint(&rx.grid, &pf.frame, est, &meta, &Allowlist::Disabled).unwrap().unwrap());
        }
        streams.push(pts);
    }
    let groups = merge_streams(&streams, 0.030).unwrap();
    // Frames 425 us apart all fall in one 30 ms window, but each group takes
    // one point per sniffer from the same transmitter.
    assert_eq!(groups.len(), 4);
    assert!(groups.iter().all(|g| g.complete && g.members.len() == 2));
    for g in &groups {
        assert!(g.members.values().all(|m| m.tx_mac == g.tx_mac));
        assert!(g.members.values().all(|m| m.snr_db.as_ref().is_some_and(|s| s.iter().all(|v| *v > 20.0))));
    }

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ds.jsonl");
    let ds = Dataset::from_combined(rx.grid.clone(), &groups);
    write_dataset(&path, &ds).unwrap();
    let back = read_dataset(&path).unwrap();
    assert_eq!(back.groups, ds.groups);
    // CSI is stored as f32.
    for (a, b) in back.points.iter().zip(&ds.points) {
        for (x, y) in a.csi.iter().flatten().zip(b.csi.iter().flatten()) {
            assert!((x - y).norm() <= 1e-6 * y.norm().max(1e-3));
        }
    }
}
