//! The two canonical event serializations.
//!
//! CSV: a `t,x,y,p` header line followed by one base-10 integer record per
//! line, polarity encoded as 1 = ON, 0 = OFF. The sensor geometry is not
//! part of the file and must be supplied by the caller.
//!
//! BIN: a 16-byte header — magic `EVKD`, width (u16 LE), height (u16 LE),
//! event count (u64 LE) — followed by 13-byte records: t (u64 LE), x
//! (u16 LE), y (u16 LE), p (u8).

use super::{EventError, EventPoint, EventStream, Polarity, SensorGeometry};

pub const BIN_MAGIC: &[u8; 4] = b"EVKD";
pub const BIN_HEADER_LEN: usize = 16;
pub const BIN_RECORD_LEN: usize = 13;
pub const CSV_HEADER: &str = "t,x,y,p";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventFormat {
    Csv,
    Bin,
}

/// Picks the format by sniffing the BIN magic; everything else is CSV.
pub fn detect_format(bytes: &[u8]) -> EventFormat {
    if bytes.starts_with(BIN_MAGIC) {
        EventFormat::Bin
    } else {
        EventFormat::Csv
    }
}

/// Parses either format. `csv_geometry` supplies the sensor dimensions for
/// CSV input; BIN input carries its own geometry in the header.
pub fn parse_event_stream(
    bytes: &[u8],
    format: EventFormat,
    csv_geometry: SensorGeometry,
) -> Result<EventStream, EventError> {
    match format {
        EventFormat::Csv => parse_csv(bytes, csv_geometry),
        EventFormat::Bin => parse_bin(bytes),
    }
}

/// Serializes a stream canonically: events in stored (sorted) order.
/// The output re-parses to an equal stream.
pub fn write_event_stream(stream: &EventStream, format: EventFormat) -> Vec<u8> {
    match format {
        EventFormat::Csv => write_csv(stream),
        EventFormat::Bin => write_bin(stream),
    }
}

pub fn parse_csv(bytes: &[u8], geometry: SensorGeometry) -> Result<EventStream, EventError> {
    let text = std::str::from_utf8(bytes).map_err(|e| EventError::MalformedRecord {
        line: 0,
        reason: format!("input is not valid UTF-8: {e}"),
    })?;
    let mut events = Vec::new();
    let mut lines = text.lines().enumerate();

    match lines.next() {
        None => return Ok(EventStream::empty(geometry)),
        Some((_, header)) => {
            if header.trim_end() != CSV_HEADER {
                return Err(EventError::BadHeader(format!(
                    "expected `{CSV_HEADER}`, found `{}`",
                    header.trim_end()
                )));
            }
        }
    }

    for (lineno, line) in lines {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let malformed = |reason: String| EventError::MalformedRecord {
            line: lineno + 1,
            reason,
        };
        let mut fields = line.split(',');
        let mut next_field = |name: &str| {
            fields
                .next()
                .ok_or_else(|| malformed(format!("missing field `{name}`")))
        };
        let t: u64 = next_field("t")?
            .parse()
            .map_err(|_| malformed("non-numeric t".into()))?;
        let x: u16 = next_field("x")?
            .parse()
            .map_err(|_| malformed("non-numeric x".into()))?;
        let y: u16 = next_field("y")?
            .parse()
            .map_err(|_| malformed("non-numeric y".into()))?;
        let p: u8 = next_field("p")?
            .parse()
            .map_err(|_| malformed("non-numeric p".into()))?;
        if fields.next().is_some() {
            return Err(malformed("too many fields".into()));
        }
        let polarity =
            Polarity::from_flag(p).ok_or_else(|| malformed(format!("polarity {p} not in {{0,1}}")))?;
        if !geometry.contains(x, y) {
            return Err(EventError::OutOfRange {
                index: events.len(),
                x,
                y,
                width: geometry.width(),
                height: geometry.height(),
            });
        }
        events.push(EventPoint { t, x, y, polarity });
    }
    EventStream::new(geometry, events)
}

pub fn write_csv(stream: &EventStream) -> Vec<u8> {
    let mut out = String::with_capacity(stream.len() * 16 + CSV_HEADER.len() + 1);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for ev in stream.events() {
        use std::fmt::Write;
        writeln!(out, "{},{},{},{}", ev.t, ev.x, ev.y, ev.polarity.flag()).unwrap();
    }
    out.into_bytes()
}

pub fn parse_bin(bytes: &[u8]) -> Result<EventStream, EventError> {
    if bytes.len() < BIN_HEADER_LEN {
        return Err(EventError::BadHeader(format!(
            "input of {} bytes is shorter than the {BIN_HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    if &bytes[..4] != BIN_MAGIC {
        return Err(EventError::BadHeader("missing EVKD magic".into()));
    }
    let width = u16::from_le_bytes([bytes[4], bytes[5]]);
    let height = u16::from_le_bytes([bytes[6], bytes[7]]);
    let count = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let geometry = SensorGeometry::new(width, height)?;

    let body = &bytes[BIN_HEADER_LEN..];
    if body.len() != count * BIN_RECORD_LEN {
        return Err(EventError::BadHeader(format!(
            "header declares {count} records ({} bytes) but body has {} bytes",
            count * BIN_RECORD_LEN,
            body.len()
        )));
    }

    let mut events = Vec::with_capacity(count);
    for (index, rec) in body.chunks_exact(BIN_RECORD_LEN).enumerate() {
        let t = u64::from_le_bytes(rec[0..8].try_into().unwrap());
        let x = u16::from_le_bytes([rec[8], rec[9]]);
        let y = u16::from_le_bytes([rec[10], rec[11]]);
        let polarity = Polarity::from_flag(rec[12]).ok_or(EventError::MalformedRecord {
            line: index,
            reason: format!("polarity {} not in {{0,1}}", rec[12]),
        })?;
        if !geometry.contains(x, y) {
            return Err(EventError::OutOfRange {
                index,
                x,
                y,
                width,
                height,
            });
        }
        events.push(EventPoint { t, x, y, polarity });
    }
    EventStream::new(geometry, events)
}

pub fn write_bin(stream: &EventStream) -> Vec<u8> {
    let mut out = Vec::with_capacity(BIN_HEADER_LEN + stream.len() * BIN_RECORD_LEN);
    out.extend_from_slice(BIN_MAGIC);
    out.extend_from_slice(&stream.geometry().width().to_le_bytes());
    out.extend_from_slice(&stream.geometry().height().to_le_bytes());
    out.extend_from_slice(&(stream.len() as u64).to_le_bytes());
    for ev in stream.events() {
        out.extend_from_slice(&ev.t.to_le_bytes());
        out.extend_from_slice(&ev.x.to_le_bytes());
        out.extend_from_slice(&ev.y.to_le_bytes());
        out.push(ev.polarity.flag());
    }
    out
}
