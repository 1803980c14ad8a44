//! MAC frame check sequence (CRC-32, IEEE 802.3 polynomial, reflected).

use crate::{Error, Result};

/// CRC-32 of `data`.
pub fn crc32(data: &[u8]) -> u32 {
    crc32fast::hash(data)
}

/// True when the trailing four octets equal the CRC-32 of the rest.
pub fn check_fcs(psdu: &[u8]) -> Result<bool> {
    if psdu.len() < 4 {
        return Err(Error::FcsTooShort(psdu.len()));
    }
    let (body, fcs) = psdu.split_at(psdu.len() - 4);
    Ok(crc32(body).to_le_bytes() == fcs)
}

/// Appends the FCS to an MPDU body.
pub fn append_fcs(body: &[u8]) -> Vec<u8> {
    let mut out = body.to_vec();
    out.extend_from_slice(&crc32(body).to_le_bytes());
    out
}
