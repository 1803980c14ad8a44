//! MAC header address extraction.

use serde::{Deserialize, Serialize};

use super::fcs::append_fcs;
use crate::mac_addr::MacAddr;
use crate::{Error, Result};

/// Shortest header carrying a transmitter address: frame control, duration,
/// Address 1 and Address 2.
pub const MIN_TA_HEADER: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameType {
    Management,
    Control,
    Data,
    Extension,
}

/// Addresses of one MPDU.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MacHeader {
    pub frame_type: FrameType,
    pub subtype: u8,
    pub to_ds: bool,
    pub from_ds: bool,
    /// Transmitter address (Address 2).
    pub tx_mac: MacAddr,
    /// Receiver address (Address 1).
    pub dst_mac: MacAddr,
    /// Source address resolved from the DS bits, when present.
    pub source: Option<MacAddr>,
    /// Destination address resolved from the DS bits, when present.
    pub destination: Option<MacAddr>,
}

/// Parses the MAC header of a PSDU (FCS included).
pub fn parse_mac(psdu: &[u8]) -> Result<MacHeader> {
    let body = &psdu[..psdu.len().saturating_sub(4)];
    if body.len() < MIN_TA_HEADER {
        return Err(Error::MalformedMac(format!("{} octets, need {MIN_TA_HEADER}", body.len())));
    }
    let fc0 = body[0];
    let fc1 = body[1];
    if fc0 & 0b11 != 0 {
        return Err(Error::MalformedMac(format!("protocol version {}", fc0 & 0b11)));
    }
    let frame_type = match (fc0 >> 2) & 0b11 {
        0 => FrameType::Management,
        1 => FrameType::Control,
        2 => FrameType::Data,
        _ => FrameType::Extension,
    };
    let to_ds = fc1 & 1 != 0;
    let from_ds = fc1 & 2 != 0;
    let addr = |i: usize| body.get(4 + 6 * i..10 + 6 * i).map(|s| MacAddr::from_slice(s).expect("6 octets"));
    let a1 = addr(0).expect("length checked");
    let a2 = addr(1).expect("length checked");
    let a3 = if body.len() >= 24 { addr(2) } else { None };
    let a4 = if body.len() >= 30 { body.get(24..30).and_then(MacAddr::from_slice) } else { None };
    let (source, destination) = if frame_type == FrameType::Control {
        (Some(a2), Some(a1))
    } else {
        match (to_ds, from_ds) {
            (false, false) => (Some(a2), Some(a1)),
            (false, true) => (a3, Some(a1)),
            (true, false) => (Some(a2), a3),
            (true, true) => (a4, a3),
        }
    };
    Ok(MacHeader {
        frame_type,
        subtype: fc0 >> 4,
        to_ds,
        from_ds,
        tx_mac: a2,
        dst_mac: a1,
        source,
        destination,
    })
}

/// A data frame (From-DS/To-DS clear) with FCS.
pub fn build_data_mpdu(tx: MacAddr, dst: MacAddr, bssid: MacAddr, seq: u16, payload: &[u8]) -> Vec<u8> {
    let mut b = vec![0x08, 0x00, 0x00, 0x00];
    b.extend_from_slice(&dst.0);
    b.extend_from_slice(&tx.0);
    b.extend_from_slice(&bssid.0);
    b.extend_from_slice(&((seq & 0x0fff) << 4).to_le_bytes());
    b.extend_from_slice(payload);
    append_fcs(&b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn data_frame_addresses() {
        let ta: MacAddr = "02:11:22:33:44:55".parse().unwrap();
        let f = build_data_mpdu(ta, MacAddr::BROADCAST, ta, 7, b"abc");
        let h = parse_mac(&f).unwrap();
        assert_eq!(h.tx_mac, ta);
        assert!(h.dst_mac.is_broadcast());
        assert_eq!(h.frame_type, FrameType::Data);
        assert_eq!(h.source, Some(ta));
    }

    #[test]
    fn ds_resolution() {
        let ta: MacAddr = "02:00:00:00:00:01".parse().unwrap();
        let ra: MacAddr = "02:00:00:00:00:02".parse().unwrap();
        let a3: MacAddr = "02:00:00:00:00:03".parse().unwrap();
        let mut f = build_data_mpdu(ta, ra, a3, 1, &[0; 8]);
        f[1] = 0x01; // To-DS
        let h = parse_mac(&f).unwrap();
        assert_eq!((h.tx_mac, h.dst_mac, h.destination), (ta, ra, Some(a3)));
        f[1] = 0x02; // From-DS
        let h = parse_mac(&f).unwrap();
        assert_eq!(h.source, Some(a3));
    }

    #[test]
    fn short_header() {
        assert!(matches!(parse_mac(&[0u8; 14]), Err(Error::MalformedMac(_))));
        assert!(matches!(parse_mac(&[0u8; 10]), Err(Error::MalformedMac(_))));
    }
}
