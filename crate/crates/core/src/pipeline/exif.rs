//! Minimal EXIF GPS extraction: the JPEG APP1 segment's GPS IFD latitude
//! and longitude rationals, nothing more. Absence or any parse failure
//! yields `None` so the caller falls through to the full pipeline.

const TAG_GPS_IFD: u16 = 0x8825;
const TAG_GPS_LAT_REF: u16 = 0x0001;
const TAG_GPS_LAT: u16 = 0x0002;
const TAG_GPS_LON_REF: u16 = 0x0003;
const TAG_GPS_LON: u16 = 0x0004;

/// Decimal-degree (latitude, longitude) from JPEG bytes, when present.
pub fn extract_gps(bytes: &[u8]) -> Option<(f64, f64)> {
    let tiff = find_exif_app1(bytes)?;
    parse_tiff_gps(tiff)
}

/// Scan JPEG segments for APP1 with the `Exif\0\0` header and return the
/// TIFF blob inside it.
fn find_exif_app1(bytes: &[u8]) -> Option<&[u8]> {
    if bytes.len() < 4 || bytes[0] != 0xFF || bytes[1] != 0xD8 {
        return None;
    }
    let mut pos = 2;
    while pos + 4 <= bytes.len() {
        if bytes[pos] != 0xFF {
            return None;
        }
        let marker = bytes[pos + 1];
        match marker {
            0xD8 | 0x01 | 0xD0..=0xD7 => {
                pos += 2;
                continue;
            }
            // Start of scan or end of image: no APP1 ahead.
            0xDA | 0xD9 => return None,
            _ => {}
        }
        let len = u16::from_be_bytes([bytes[pos + 2], bytes[pos + 3]]) as usize;
        if len < 2 || pos + 2 + len > bytes.len() {
            return None;
        }
        let body = &bytes[pos + 4..pos + 2 + len];
        if marker == 0xE1 && body.len() > 6 && &body[..6] == b"Exif\0\0" {
            return Some(&body[6..]);
        }
        pos += 2 + len;
    }
    None
}

struct Tiff<'a> {
    data: &'a [u8],
    big_endian: bool,
}

impl<'a> Tiff<'a> {
    fn u16_at(&self, off: usize) -> Option<u16> {
        let b = self.data.get(off..off + 2)?;
        Some(if self.big_endian {
            u16::from_be_bytes([b[0], b[1]])
        } else {
            u16::from_le_bytes([b[0], b[1]])
        })
    }

    fn u32_at(&self, off: usize) -> Option<u32> {
        let b = self.data.get(off..off + 4)?;
        let arr = [b[0], b[1], b[2], b[3]];
        Some(if self.big_endian {
            u32::from_be_bytes(arr)
        } else {
            u32::from_le_bytes(arr)
        })
    }

    fn rational_at(&self, off: usize) -> Option<f64> {
        let num = self.u32_at(off)? as f64;
        let den = self.u32_at(off + 4)? as f64;
        if den == 0.0 {
            return None;
        }
        Some(num / den)
    }

    /// Find an IFD entry by tag; returns (type, count, value_or_offset
    /// field position).
    fn find_entry(&self, ifd_off: usize, tag: u16) -> Option<(u16, u32, usize)> {
        let count = self.u16_at(ifd_off)? as usize;
        for i in 0..count {
            let entry = ifd_off + 2 + i * 12;
            if self.u16_at(entry)? == tag {
                let typ = self.u16_at(entry + 2)?;
                let cnt = self.u32_at(entry + 4)?;
                return Some((typ, cnt, entry + 8));
            }
        }
        None
    }
}

fn parse_tiff_gps(data: &[u8]) -> Option<(f64, f64)> {
    let big_endian = match data.get(..2)? {
        b"II" => false,
        b"MM" => true,
        _ => return None,
    };
    let tiff = Tiff { data, big_endian };
    if tiff.u16_at(2)? != 42 {
        return None;
    }
    let ifd0 = tiff.u32_at(4)? as usize;
    let (_, _, gps_ptr_pos) = tiff.find_entry(ifd0, TAG_GPS_IFD)?;
    let gps_ifd = tiff.u32_at(gps_ptr_pos)? as usize;

    let lat_sign = gps_ref_sign(&tiff, gps_ifd, TAG_GPS_LAT_REF, b'S')?;
    let lon_sign = gps_ref_sign(&tiff, gps_ifd, TAG_GPS_LON_REF, b'W')?;
    let lat = gps_dms(&tiff, gps_ifd, TAG_GPS_LAT)?;
    let lon = gps_dms(&tiff, gps_ifd, TAG_GPS_LON)?;
    let lat = lat_sign * lat;
    let lon = lon_sign * lon;
    if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
        return None;
    }
    Some((lat, lon))
}

fn gps_ref_sign(tiff: &Tiff, gps_ifd: usize, tag: u16, negative: u8) -> Option<f64> {
    let (typ, _, value_pos) = tiff.find_entry(gps_ifd, tag)?;
    if typ != 2 {
        return None;
    }
    // ASCII refs are at most 2 bytes and stored inline.
    let first = *tiff.data.get(value_pos)?;
    Some(if first == negative { -1.0 } else { 1.0 })
}

fn gps_dms(tiff: &Tiff, gps_ifd: usize, tag: u16) -> Option<f64> {
    let (typ, count, value_pos) = tiff.find_entry(gps_ifd, tag)?;
    if typ != 5 || count != 3 {
        return None;
    }
    let off = tiff.u32_at(value_pos)? as usize;
    let degrees = tiff.rational_at(off)?;
    let minutes = tiff.rational_at(off + 8)?;
    let seconds = tiff.rational_at(off + 16)?;
    Some(degrees + minutes / 60.0 + seconds / 3600.0)
}

/// Build a minimal JPEG carrying only an EXIF GPS position. Fixture
/// helper for the offline pipeline's tests and demos; the result decodes
/// as a JPEG container but holds no scan data.
pub fn encode_gps_jpeg(latitude: f64, longitude: f64) -> Vec<u8> {
    let lat_ref: u8 = if latitude < 0.0 { b'S' } else { b'N' };
    let lon_ref: u8 = if longitude < 0.0 { b'W' } else { b'E' };
    let to_dms = |v: f64| -> [(u32, u32); 3] {
        let v = v.abs();
        let d = v.floor();
        let m = ((v - d) * 60.0).floor();
        let s = (v - d - m / 60.0) * 3600.0;
        [
            (d as u32, 1),
            (m as u32, 1),
            ((s * 10000.0).round() as u32, 10000),
        ]
    };

    // TIFF body, little-endian. IFD0 with one entry (GPS IFD pointer) at
    // offset 8; GPS IFD follows; rational arrays after that.
    let mut tiff: Vec<u8> = Vec::new();
    tiff.extend(b"II");
    tiff.extend(42u16.to_le_bytes());
    tiff.extend(8u32.to_le_bytes()); // IFD0 offset

    // IFD0: 1 entry + next-IFD pointer.
    let gps_ifd_off: u32 = 8 + 2 + 12 + 4;
    tiff.extend(1u16.to_le_bytes());
    tiff.extend(TAG_GPS_IFD.to_le_bytes());
    tiff.extend(4u16.to_le_bytes()); // LONG
    tiff.extend(1u32.to_le_bytes());
    tiff.extend(gps_ifd_off.to_le_bytes());
    tiff.extend(0u32.to_le_bytes()); // no next IFD

    // GPS IFD: 4 entries.
    let entries = 4u16;
    let gps_data_off = gps_ifd_off + 2 + u32::from(entries) * 12 + 4;
    tiff.extend(entries.to_le_bytes());
    let mut push_entry = |buf: &mut Vec<u8>, tag: u16, typ: u16, count: u32, value: u32| {
        buf.extend(tag.to_le_bytes());
        buf.extend(typ.to_le_bytes());
        buf.extend(count.to_le_bytes());
        buf.extend(value.to_le_bytes());
    };
    push_entry(
        &mut tiff,
        TAG_GPS_LAT_REF,
        2,
        2,
        u32::from_le_bytes([lat_ref, 0, 0, 0]),
    );
    push_entry(&mut tiff, TAG_GPS_LAT, 5, 3, gps_data_off);
    push_entry(
        &mut tiff,
        TAG_GPS_LON_REF,
        2,
        2,
        u32::from_le_bytes([lon_ref, 0, 0, 0]),
    );
    push_entry(&mut tiff, TAG_GPS_LON, 5, 3, gps_data_off + 24);
    tiff.extend(0u32.to_le_bytes()); // no next IFD

    for v in to_dms(latitude).iter().chain(to_dms(longitude).iter()) {
        tiff.extend(v.0.to_le_bytes());
        tiff.extend(v.1.to_le_bytes());
    }

    let mut app1: Vec<u8> = Vec::new();
    app1.extend(b"Exif\0\0");
    app1.extend(&tiff);

    let mut jpeg: Vec<u8> = vec![0xFF, 0xD8, 0xFF, 0xE1];
    jpeg.extend(((app1.len() + 2) as u16).to_be_bytes());
    jpeg.extend(&app1);
    jpeg.extend([0xFF, 0xD9]);
    jpeg
}
